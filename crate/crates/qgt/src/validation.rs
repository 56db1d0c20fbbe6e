//! The cross-check suite: every closed form against an independent
//! computation, at the tolerances the library promises.

use crate::boundary::{boundary_moment_check, coherence_check, extreme_family};
use crate::error::{Error, Result};
use crate::kernels::{
    closed_measure, f_az_closed_image, extreme_point_masses, integrate_f_az, lambda_inf_residue, extreme_mass_bound,
    link_measure, moment_check, orthogonality_residue, orthogonality_window, f_z_closed_image, telescope, verify_f_az_image,
    verify_f_z_image, DiscreteMeasure, EvalPoints,
};
use crate::lattice::{value_f64, Config, ExtConfig, LatticePoint, QParams, Sign};
use crate::qcalc::{divided_difference, q_pochhammer_inf_f64, Polynomial};
use crate::sampler::{chi_square_test, empirical_moment_test, Sampler};
use crate::scalar::{crat, int, rat, rat_to_f64, CRational, Rational};
use crate::splines::{hermite_genocchi, measure_moment, qbspline, qbspline_moment, PochhammerRecip};
use crate::symfunc::Partition;
use crate::transforms::{inv_qlaplace, qlaplace_exact, transform_fn, Contour, Order};
use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

/// How much of each criterion to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Reduced sample counts, a few seconds in total.
    Quick,
    /// The full counts.
    Full,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::Parse(format!("unknown level `{s}`"))),
        }
    }
}

impl Level {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Level::Quick => quick,
            Level::Full => full,
        }
    }
}

/// Result of one criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:>2} {:<28} {:>7.2}s  {}", self.id, self.name, self.seconds, self.detail)
    }
}

pub const CRITERIA: [&str; 11] = [
    "stochasticity",
    "closed form vs telescope",
    "moment identities",
    "orthogonality",
    "generating functions",
    "q-B-splines",
    "extreme point bound",
    "boundary",
    "q-Laplace round trip",
    "sampling",
    "Feller probes",
];

/// Runs criterion `id` (1-based). Panics inside a check count as failures.
pub fn run_criterion(id: usize, level: Level, params: &QParams) -> Outcome {
    let start = Instant::now();
    let name = CRITERIA.get(id.wrapping_sub(1)).copied().unwrap_or("unknown");
    let res = catch_unwind(AssertUnwindSafe(|| match id {
        1 => stochasticity(level, params),
        2 => closed_vs_telescope(level, params),
        3 => moment_identities(level, params),
        4 => orthogonality(level, params),
        5 => generating_functions(level, params),
        6 => splines(level, params),
        7 => extreme_point_bound(level, params),
        8 => boundary(level, params),
        9 => laplace_round_trip(level, params),
        10 => sampling(level, params),
        11 => feller(level, params),
        _ => Err(Error::InvalidParams(format!("no criterion {id}"))),
    }));
    let (passed, detail) = match res {
        Ok(Ok(Check { passed, detail })) => (passed, detail),
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panic: {msg}"))
        }
    };
    Outcome { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Runs all criteria in order.
pub fn run_all(level: Level, params: &QParams) -> Vec<Outcome> {
    (1..=CRITERIA.len()).map(|id| run_criterion(id, level, params)).collect()
}

struct Check {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Result<Check> {
    Ok(Check { passed, detail })
}

#[derive(Clone, Copy)]
enum Signs {
    Plus,
    Minus,
    Mixed,
}

/// `n` distinct lattice points with exponents in `lo..hi`.
fn random_config(rng: &mut ChaCha8Rng, n: usize, signs: Signs, lo: i32, hi: i32) -> Config {
    loop {
        let mut pts = Vec::with_capacity(n);
        while pts.len() < n {
            let sign = match signs {
                Signs::Plus => Sign::Plus,
                Signs::Minus => Sign::Minus,
                Signs::Mixed => {
                    if rng.random::<bool>() {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                }
            };
            let p = LatticePoint::new(sign, rng.random_range(lo..hi));
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        let c = Config::from_unsorted(pts).expect("distinct points");
        if !matches!(signs, Signs::Mixed) || !c.is_single_sign() {
            return c;
        }
    }
}

fn single_sign(rng: &mut ChaCha8Rng) -> Signs {
    if rng.random::<bool>() {
        Signs::Plus
    } else {
        Signs::Minus
    }
}

fn random_z(rng: &mut ChaCha8Rng, k: usize) -> Result<EvalPoints> {
    loop {
        let z: Vec<CRational> = (0..k)
            .map(|_| {
                let re = rat(rng.random_range(-8..=8), 4);
                let mut im = rat(rng.random_range(1..=8), 4);
                if rng.random::<bool>() {
                    im = -im;
                }
                crat(re, im)
            })
            .collect();
        if let Ok(e) = EvalPoints::new(z) {
            return Ok(e);
        }
    }
}

fn cut(bits: u32) -> Rational {
    rat(1, 1i64 << bits)
}

fn stochasticity(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n_single = level.pick(60, 500);
    let n_mixed = level.pick(20, 200);
    let mut bad = 0;
    for _ in 0..n_single {
        let n = rng.random_range(1..=6);
        let s = single_sign(&mut rng);
        let x = random_config(&mut rng, n, s, -3, 7);
        let m: DiscreteMeasure<Rational> = link_measure(&x, &Rational::zero(), params)?;
        if m.total() != Rational::one() || !m.tail_bound.is_zero() {
            bad += 1;
        }
    }
    let mut worst_tail: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    // exponents as in the other mixed-sign criteria; the truncated mass grows
    // like min_abs / |x| for the point of X nearest 0
    for _ in 0..n_mixed {
        let n = rng.random_range(2..=6);
        let x = random_config(&mut rng, n, Signs::Mixed, -2, 5);
        let m: DiscreteMeasure<f64> = link_measure(&x, &cut(30), params)?;
        worst_tail = worst_tail.max(m.tail_bound);
        // sum >= 1 - tail, and not above 1
        let t = m.total();
        worst_gap = worst_gap.max((1.0 - m.tail_bound) - t).max(t - 1.0 - 1e-12);
        if t < 1.0 - m.tail_bound - 1e-13 || t > 1.0 + 1e-12 || m.tail_bound > 1e-8 {
            bad += 1;
        }
    }
    check(
        bad == 0,
        format!("{n_single} single-sign exact, {n_mixed} mixed; worst tail {worst_tail:.2e}, failures {bad}"),
    )
}

fn closed_vs_telescope(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let n_pos = level.pick(6, 30);
    let n_mixed = level.pick(3, 12);
    let mut bad = 0;
    let mut pairs = 0;
    for _ in 0..n_pos {
        let n = rng.random_range(2..=6);
        let s = single_sign(&mut rng);
        let x = ExtConfig::from(random_config(&mut rng, n, s, -2, 6));
        for k in 1..n {
            let c: DiscreteMeasure<Rational> = closed_measure(&x, k, &Rational::zero(), params)?;
            let t: DiscreteMeasure<Rational> = telescope(&x, k, &Rational::zero(), 0.0, params)?;
            pairs += 1;
            if c.atoms != t.atoms {
                bad += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..n_mixed {
        let n = rng.random_range(2..=5);
        let x = ExtConfig::from(random_config(&mut rng, n, Signs::Mixed, -1, 4));
        for k in 1..n {
            let c: DiscreteMeasure<f64> = closed_measure(&x, k, &cut(34), params)?;
            let t: DiscreteMeasure<f64> = telescope(&x, k, &cut(34), 0.0, params)?;
            pairs += 1;
            let mut d: f64 = 0.0;
            for (y, w) in &t.atoms {
                d = d.max((w - c.mass(y)).abs());
            }
            worst = worst.max(d);
            if d > 1e-8 {
                bad += 1;
            }
        }
    }
    check(bad == 0, format!("{pairs} (X, K) pairs; worst mixed difference {worst:.2e}, failures {bad}"))
}

fn moment_identities(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let n_pos = level.pick(4, 16);
    let n_mixed = level.pick(2, 8);
    let mut bad = 0;
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for i in 0..n_pos + n_mixed {
        let n = rng.random_range(2..=5);
        let mixed = i >= n_pos;
        let signs = if mixed { Signs::Mixed } else { single_sign(&mut rng) };
        let x = ExtConfig::from(random_config(&mut rng, n, signs, -2, 5));
        for k in 1..n {
            for nu in Partition::up_to_size(4, k) {
                count += 1;
                if mixed {
                    let r = moment_check::<f64>(&x, k, &nu, &cut(34), 0.0, params)?;
                    worst = worst.max(r.residual);
                    if r.residual >= 1e-7 {
                        bad += 1;
                    }
                } else {
                    let r = moment_check::<Rational>(&x, k, &nu, &Rational::zero(), 0.0, params)?;
                    if !r.residual.is_zero() {
                        bad += 1;
                    }
                }
            }
        }
    }
    check(bad == 0, format!("{count} identities; worst mixed residual {worst:.2e}, failures {bad}"))
}

fn orthogonality(level: Level, params: &QParams) -> Result<Check> {
    let mut bad = 0;
    for n in 2..=6 {
        bad += orthogonality_window(n, 0..10, params)?.len();
    }
    // quadrature against residues on a sub-grid of the window
    let stride = level.pick(4, 2);
    let pts: Vec<LatticePoint> = (0..10)
        .step_by(stride)
        .flat_map(|e| [LatticePoint::minus(e), LatticePoint::plus(e)])
        .collect();
    let mut worst: f64 = 0.0;
    let mut quad = 0;
    for n in 2..=6 {
        for u in &pts {
            let mut mu = DiscreteMeasure::new();
            mu.atoms.insert(ExtConfig::from(Config::new(vec![*u])?), 1.0);
            let phi = transform_fn(&mu, Order::Finite(n), 1e-13, params);
            for y in &pts {
                let exact = rat_to_f64(&orthogonality_residue(u, y, n, params)?);
                let r = inv_qlaplace(&phi, y, Order::Finite(n), None, 1e-8, params)?;
                let d = (r.value - Complex::new(exact, 0.0)).norm();
                worst = worst.max(d);
                quad += 1;
                if d >= 1e-6 {
                    bad += 1;
                }
            }
        }
    }
    check(bad == 0, format!("5 x 400 residue pairs exact; {quad} quadratures, worst {worst:.2e}; failures {bad}"))
}

fn generating_functions(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let n_pos = level.pick(6, 24);
    let n_mixed = level.pick(3, 10);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..n_pos + n_mixed {
        let mixed = i >= n_pos;
        let n = rng.random_range(2..=if mixed { 5 } else { 6 });
        let signs = if mixed { Signs::Mixed } else { single_sign(&mut rng) };
        let x = random_config(&mut rng, n, signs, -2, 5);
        let xe = ExtConfig::from(x.clone());
        // spline transform equals the product over knots
        if !mixed {
            let b = qbspline::<Rational>(&xe, &Rational::zero(), params)?;
            let z = random_z(&mut rng, 1)?.points()[0].clone();
            let lhs: CRational = qlaplace_exact(&b, &z, n, params);
            let mut rhs = CRational::one();
            for xv in x.values(params) {
                rhs = rhs / (CRational::one() - crat(xv, int(0)) / z.clone());
            }
            count += 1;
            if lhs != rhs {
                bad += 1;
            }
        }
        for k in 1..n.min(4) {
            let z = random_z(&mut rng, k)?;
            let r = verify_f_z_image(&x, &z, &cut(34), params)?;
            count += 1;
            if (r.exact && r.residual != 0.0) || (!r.exact && r.residual >= 1e-7) || r.exact == mixed {
                bad += 1;
            }
            worst = worst.max(if r.exact { 0.0 } else { r.residual });
            // one marked point
            if k >= 2 && n > k {
                let a = Config::new(vec![x.points()[rng.random_range(0..n)]])?;
                let z = random_z(&mut rng, k - 1)?;
                let r = verify_f_az_image(&x, &a, &z, &cut(34), params)?;
                count += 1;
                if (r.exact && r.residual != 0.0) || (!r.exact && r.residual >= 1e-7) {
                    bad += 1;
                }
                worst = worst.max(if r.exact { 0.0 } else { r.residual });
            }
        }
    }
    check(bad == 0, format!("{count} identities; worst mixed residual {worst:.2e}, failures {bad}"))
}

fn splines(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let n_cfg = level.pick(8, 40);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..n_cfg {
        let mixed = i % 4 == 3;
        let n = rng.random_range(1..=6);
        let signs = if mixed && n >= 2 { Signs::Mixed } else { single_sign(&mut rng) };
        let x = ExtConfig::from(random_config(&mut rng, n, signs, -2, 6));
        if x.is_single_sign() {
            let b = qbspline::<Rational>(&x, &Rational::zero(), params)?;
            for m in 0..=8 {
                if measure_moment(&b, m, params) != qbspline_moment(&x, m, params) {
                    bad.push(format!("moment {m} at ({x})"));
                }
            }
            for _ in 0..3 {
                let deg = rng.random_range(0..=8);
                let f = Polynomial::new((0..=deg).map(|_| int(rng.random_range(-9..=9))).collect());
                let hg = hermite_genocchi(&f, &x, &Rational::zero(), 1e-12, params)?;
                if hg.value != divided_difference(&f, &x.values(params))? {
                    bad.push(format!("Hermite-Genocchi at ({x})"));
                }
            }
        } else {
            let b = qbspline::<f64>(&x, &cut(34), params)?;
            for m in 0..=8 {
                let d = (measure_moment(&b, m, params) - rat_to_f64(&qbspline_moment(&x, m, params))).abs();
                worst = worst.max(d);
                if d >= 1e-8 {
                    bad.push(format!("moment {m} at ({x}): {d:.2e}"));
                }
            }
        }
    }
    // merging knots: f[x_1..x_N] -> D^(N-1) f(0) / [N-1]!
    let mut worst_rel: f64 = 0.0;
    for (z, m) in [(int(2), 1), (rat(-5, 2), 3), (rat(7, 3), 2)] {
        let f = PochhammerRecip::new(z, m, params)?;
        for n in 1..=6usize {
            let lim = hermite_genocchi::<Rational>(&f, &ExtConfig::zeros(n), &Rational::one(), 1e-14, params)?.value;
            for sign in [Sign::Plus, Sign::Minus] {
                let knots: Vec<Rational> =
                    (0..n as i32).map(|i| crate::lattice::value(&LatticePoint::new(sign, 24 + i), params)).collect();
                let dd: Rational = divided_difference(&f, &knots)?;
                let rel = rat_to_f64(&((&dd - &lim) / &lim)).abs();
                worst_rel = worst_rel.max(rel);
                if rel >= 1e-6 {
                    bad.push(format!("merging limit N = {n}: {rel:.2e}"));
                }
            }
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{n_cfg} knot sets; worst mixed moment {worst:.2e}; worst merging error {worst_rel:.2e}{}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join(", ")) }
        ),
    )
}

fn extreme_point_bound(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let total = level.pick(150, 1000);
    let c = extreme_mass_bound(params);
    let mut violations = 0;
    let mut least = f64::INFINITY;
    for _ in 0..total {
        let n = rng.random_range(2..=8);
        let zeros = rng.random_range(0..n);
        let signs = any_signs(&mut rng, n - zeros);
        let x = ExtConfig::new(random_config(&mut rng, n - zeros, signs, -3, 6), zeros);
        for (_, w) in extreme_point_masses(&x, params)? {
            let w = rat_to_f64(&w);
            least = least.min(w);
            if w < c {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("{total} configurations; bound {c:.6}, least mass {least:.6}, violations {violations}"))
}

fn any_signs(rng: &mut ChaCha8Rng, n: usize) -> Signs {
    match rng.random_range(0..3) {
        0 => Signs::Plus,
        1 => Signs::Minus,
        _ if n >= 2 => Signs::Mixed,
        _ => Signs::Plus,
    }
}

fn boundary(level: Level, params: &QParams) -> Result<Check> {
    let mut bad = Vec::new();
    // Euler oracle for a single point
    let x1 = Config::new(vec![LatticePoint::plus(0)])?;
    let q = params.q_f64();
    let zeta = rat_to_f64(&params.zeta_plus);
    let _ = zeta;
    for n in 0..40 {
        let y = Config::new(vec![LatticePoint::plus(n)])?;
        let v = lambda_inf_residue(&x1, &y, params).value;
        let want = q.powi(n) * q_pochhammer_inf_f64(q.powi(n + 1), q, 1e-17).value;
        if (v - want).abs() > 1e-12 {
            bad.push(format!("single point atom {n}"));
        }
    }
    let fam = extreme_family(&x1, 1, 1e-9, params)?;
    let mass = fam.level(1).expect("level 1").total();
    if (mass - 1.0).abs() >= 1e-8 {
        bad.push(format!("single point mass {mass}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let n_fam = level.pick(5, 20);
    let mut worst_coh: f64 = 0.0;
    let mut worst_mom: f64 = 0.0;
    for _ in 0..n_fam {
        let k = rng.random_range(1..=3);
        let signs = any_signs(&mut rng, k);
        let x = random_config(&mut rng, k, signs, -1, 4);
        let fam = extreme_family(&x, 4, 1e-10, params)?;
        for kk in 1..=3 {
            let r = coherence_check(&fam, kk, 200, params)?;
            worst_coh = worst_coh.max(r.residual);
            if r.residual >= 1e-7 {
                bad.push(format!("coherence ({x}) K = {kk}: {:.2e}", r.residual));
            }
            for nu in Partition::up_to_size(3, kk) {
                let r = boundary_moment_check(&x, kk, &nu, 1e-10, params)?;
                worst_mom = worst_mom.max(r.residual);
                if r.residual >= 1e-7 {
                    bad.push(format!("moment ({x}) K = {kk} {nu}: {:.2e}", r.residual));
                }
            }
        }
    }
    check(
        bad.is_empty(),
        format!(
            "single-point oracle, {n_fam} families; worst coherence {worst_coh:.2e}, worst moment {worst_mom:.2e}{}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join(", ")) }
        ),
    )
}

fn laplace_round_trip(level: Level, params: &QParams) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let trials = level.pick(6, 24);
    let tol = 1e-6;
    let mut worst: f64 = 0.0;
    let mut worst_contour: f64 = 0.0;
    let mut bad = 0;
    for t in 0..trials {
        let order = if t % 2 == 0 { Order::Finite(rng.random_range(2..=6)) } else { Order::Infinite };
        let atoms = rng.random_range(1..=4);
        let mut mu = DiscreteMeasure::new();
        let mut pts = Vec::new();
        while pts.len() < atoms {
            let sign = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
            let p = LatticePoint::new(sign, rng.random_range(-4..12));
            if !pts.contains(&p) {
                pts.push(p);
                mu.atoms.insert(ExtConfig::from(Config::new(vec![p])?), rng.random_range(-2.0..2.0));
            }
        }
        // a non-atom on the same window as well
        let probe = LatticePoint::new(Sign::Plus, rng.random_range(-4..12));
        let phi = transform_fn(&mu, order, 1e-13, params);
        for y in pts.iter().chain(std::iter::once(&probe)) {
            let want = mu.mass(&ExtConfig::from(Config::new(vec![*y])?));
            let base = inv_qlaplace(&phi, y, order, None, tol / 10.0, params)?;
            let d = (base.value - Complex::new(want, 0.0)).norm();
            worst = worst.max(d);
            if d >= tol {
                bad += 1;
            }
            let c = Contour::default_for(y, params);
            let yv = value_f64(y, params);
            for alt in [
                c.clone().with_abscissa(yv * (1.0 + params.q_f64()) / 2.0),
                c.clone().with_half_height(2.0 * c.half_height),
            ] {
                let r = inv_qlaplace(&phi, y, order, Some(&alt), tol / 10.0, params)?;
                let dc = (r.value - base.value).norm();
                worst_contour = worst_contour.max(dc);
                if dc >= 2.0 * tol {
                    bad += 1;
                }
            }
        }
    }
    check(
        bad == 0,
        format!("{trials} measures; worst recovery {worst:.2e}, worst contour change {worst_contour:.2e}, failures {bad}"),
    )
}

fn sampling(level: Level, params: &QParams) -> Result<Check> {
    let sampler = Sampler::new(params, &cut(30));
    let draws = level.pick(30_000, 30_000);
    let moment_draws = level.pick(20_000, 100_000);
    let mut bad = Vec::new();
    let mut least_p = 1.0f64;
    for (xs, k) in [("+:3,+:2,+:0", 1), ("+:4,+:2,+:1,+:0", 2), ("-:0,-:2,-:3", 1)] {
        let x: Config = xs.parse()?;
        let exact = closed_measure::<Rational>(&ExtConfig::from(x.clone()), k, &Rational::zero(), params)?.to_f64();
        let t = chi_square_test(&sampler, &x, k, &exact, draws, 17)?;
        least_p = least_p.min(t.p_value);
        if t.p_value <= 0.001 {
            bad.push(format!("chi-square ({xs}) p = {:.2e}", t.p_value));
        }
    }
    let mut worst_z: f64 = 0.0;
    let one: Partition = "[1]".parse()?;
    for (xs, k, nu) in [
        ("+:3,+:2,+:0", 2, one.clone()),
        ("-:0,+:0", 1, one.clone()),
        ("-:1,+:2,+:0", 2, "[1,1]".parse()?),
        ("+:3,+:2,+:0", 2, Partition::empty()),
    ] {
        let x: Config = xs.parse()?;
        let t = empirical_moment_test(&sampler, &x, k, &nu, moment_draws, 29)?;
        worst_z = worst_z.max(t.z.abs());
        if t.z.abs() >= 4.0 {
            bad.push(format!("moment ({xs}) {nu}: z = {:.2}", t.z));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "least chi-square p {least_p:.3}, worst |z| {worst_z:.2}; interlacing asserted on every step{}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join(", ")) }
        ),
    )
}

fn feller(level: Level, params: &QParams) -> Result<Check> {
    let _ = level;
    let mut bad = Vec::new();
    let z2 = EvalPoints::new(vec![crat(int(0), rat(1, 4)), crat(rat(1, 8), rat(-1, 4))])?;
    let z1 = EvalPoints::new(vec![crat(rat(-1, 8), rat(1, 4))])?;
    let n = 4;
    let base: Vec<LatticePoint> = vec![LatticePoint::plus(1), LatticePoint::plus(3), LatticePoint::minus(2)];
    let a = Config::new(vec![LatticePoint::plus(1)])?;
    let mut last = [0.0f64; 2];
    let mut first = [0.0f64; 2];
    for j in 1..=12 {
        let mut pts = base.clone();
        pts.push(LatticePoint::plus(-j));
        let x = ExtConfig::from(Config::from_unsorted(pts)?);
        let f_z: Complex<f64> = f_z_closed_image(&x, &z2, params)?;
        let f_az: Complex<f64> = f_az_closed_image(&x, &a, &z1, params)?;
        // cross-check the closed forms against the kernel on this X
        if j <= 4 {
            let m = closed_measure::<f64>(&x, 2, &cut(36), params)?;
            let img_z: Complex<f64> = integrate_f_az(&m, &Config::empty(), &z2, n, params)?;
            let img_az: Complex<f64> = integrate_f_az(&m, &a, &z1, n, params)?;
            if (img_z - f_z).norm() > 1e-7 || (img_az - f_az).norm() > 1e-7 {
                bad.push(format!("closed form vs kernel at j = {j}"));
            }
        }
        let v = [f_z.norm(), f_az.norm()];
        if j == 1 {
            first = v;
        }
        last = v;
    }
    for i in 0..2 {
        if !(last[i] < 1e-4 && last[i] < first[i]) {
            bad.push(format!("decay of test function {i}: {:.2e} at j = 12", last[i]));
        }
    }
    // continuity where two points merge into 0
    let mut worst: f64 = 0.0;
    let lim = ExtConfig::new(Config::from_unsorted(base.clone())?, 2);
    let at_z: Complex<f64> = f_z_closed_image(&lim, &z2, params)?;
    let at_az: Complex<f64> = f_az_closed_image(&lim, &a, &z1, params)?;
    for j in [24, 28, 32] {
        let mut pts = base.clone();
        pts.push(LatticePoint::plus(j));
        pts.push(LatticePoint::minus(j + 1));
        let x = ExtConfig::from(Config::from_unsorted(pts)?);
        let dz = (f_z_closed_image::<Complex<f64>>(&x, &z2, params)? - at_z).norm();
        let daz = (f_az_closed_image::<Complex<f64>>(&x, &a, &z1, params)? - at_az).norm();
        worst = worst.max(dz).max(daz);
    }
    if worst >= 1e-6 {
        bad.push(format!("merging discontinuity {worst:.2e}"));
    }
    check(
        bad.is_empty(),
        format!(
            "|ΛF| at j = 12: {:.2e}, {:.2e}; merging error {worst:.2e}{}",
            last[0],
            last[1],
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join(", ")) }
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_parse() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert!("slow".parse::<Level>().is_err());
    }

    #[test]
    fn unknown_criterion_fails() {
        let o = run_criterion(12, Level::Quick, &QParams::canonical());
        assert!(!o.passed);
    }

    #[test]
    fn random_configs_have_requested_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..6 {
            let c = random_config(&mut rng, n, Signs::Mixed, -2, 4);
            assert_eq!(c.len(), n);
            assert!(!c.is_single_sign());
        }
    }
}
