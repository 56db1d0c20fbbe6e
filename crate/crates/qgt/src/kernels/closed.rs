//! Closed determinantal evaluation of `Λ^N_K` by residue sums, and the
//! measures and checks built on it.

use super::link::telescope;
use super::{qq_table, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::lattice::{range_points, ClosedPoint, Config, ExtConfig, LatticePoint, QParams};
use crate::linalg::det;
use crate::qcalc::q_pochhammer_inf_f64;
use crate::scalar::{RealField, Rational};
use crate::symfunc::{normalized_schur_values, schur_principal, Partition};
use num_traits::One;
use rayon::prelude::*;
use std::collections::HashMap;

/// `Λ^N_K(X, ·)` on `G_K` for a fixed `X` of level `N`, evaluated by the
/// `K x K` residue determinant.
pub struct ClosedForm<F> {
    xs: Vec<(LatticePoint, F)>,
    /// `1 / prod_{x' != x} (x - x')`, zeros of `X` included.
    inv_denoms: Vec<F>,
    n: usize,
    k: usize,
    prefactor: F,
    q_pows: Vec<F>,
}

impl<F: RealField> ClosedForm<F> {
    pub fn new(x: &ExtConfig, k: usize, params: &QParams) -> Result<Self> {
        let n = x.level();
        if k == 0 || k >= n {
            return Err(Error::InvalidParams(format!("need 1 <= K < N, got K = {k}, N = {n}")));
        }
        let xs: Vec<(LatticePoint, F)> =
            x.nonzero.points().iter().map(|p| (*p, F::of_point(p, params))).collect();
        let inv_denoms = xs
            .iter()
            .enumerate()
            .map(|(i, (_, xi))| {
                let mut d = F::one();
                for (j, (_, xj)) in xs.iter().enumerate() {
                    if i != j {
                        d = d * (xi.clone() - xj.clone());
                    }
                }
                for _ in 0..x.zero_mult {
                    d = d * xi.clone();
                }
                F::one() / d
            })
            .collect();
        let qq: Vec<Rational> = qq_table(n, params);
        let mut pre = Rational::one();
        for i in 1..=k {
            pre *= &qq[n - i] / (&qq[k - i] * &qq[n - k]);
        }
        pre *= (Rational::one() - params.q.pow((n - k) as i32)).pow(k as i32);
        let q_pows = (0..n).map(|l| F::from_rational(&params.q.pow(l as i32))).collect();
        Ok(ClosedForm { xs, inv_denoms, n, k, prefactor: F::from_rational(&pre), q_pows })
    }

    /// Column `A(·, y)` of the residue matrix, rows `i = 1..=K`.
    pub fn column(&self, y: &LatticePoint, params: &QParams) -> Vec<F> {
        let yv = F::of_point(y, params);
        let mut col = vec![F::zero(); self.k];
        for ((p, xv), inv) in self.xs.iter().zip(&self.inv_denoms) {
            // x in X(y): same ray, at least as far from 0
            if p.sign != y.sign || p.exponent > y.exponent {
                continue;
            }
            let mut base = inv.clone();
            for l in 1..self.n - self.k {
                base = base * (xv.clone() - yv.clone() * self.q_pows[l].clone());
            }
            let mut xp = F::one();
            for c in col.iter_mut() {
                *c = c.clone() + base.clone() * xp.clone();
                xp = xp * xv.clone();
            }
        }
        for c in col.iter_mut() {
            *c = c.clone() * yv.clone();
        }
        col
    }

    /// `Λ^N_K(X, Y)` for `Y` in `G_K`.
    pub fn eval(&self, y: &Config, params: &QParams) -> F {
        let cols: Vec<Vec<F>> = y.points().iter().map(|p| self.column(p, params)).collect();
        let vals: Vec<F> = y.points().iter().map(|p| F::of_point(p, params)).collect();
        self.eval_with(&cols.iter().collect::<Vec<_>>(), &vals)
    }

    fn eval_with(&self, cols: &[&Vec<F>], vals: &[F]) -> F {
        if cols.iter().any(|c| c.iter().all(|v| v.is_zero())) {
            return F::zero();
        }
        let m: Vec<Vec<F>> = (0..self.k).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        self.prefactor.clone() * crate::linalg::vandermonde(vals) * det(m)
    }
}

/// `Λ^N_1(X, y)` for `y != 0`.
pub fn lambda_closed_n1<F: RealField>(x: &ExtConfig, y: &LatticePoint, params: &QParams) -> Result<F> {
    Ok(ClosedForm::<F>::new(x, 1, params)?.eval(&Config::from_sorted_unchecked(vec![*y]), params))
}

/// `Λ^N_K(X, Y)` for `Y` in `G_K`.
pub fn lambda_closed_nk<F: RealField>(x: &ExtConfig, y: &Config, params: &QParams) -> Result<F> {
    if y.is_empty() {
        return Err(Error::InvalidConfig("Y must be nonempty".into()));
    }
    Ok(ClosedForm::<F>::new(x, y.len(), params)?.eval(y, params))
}

/// All `Y` in `G_K` with `c_i <= y_i <= c_(i+N-K)` and `|y_i| >= min_abs`,
/// where `c` lists the coordinates of `X`.
pub fn support_candidates(x: &ExtConfig, k: usize, min_abs: &Rational, params: &QParams) -> Result<Vec<Config>> {
    let c = x.closed_points();
    let n = c.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("need 1 <= K <= N, got K = {k}, N = {n}")));
    }
    let ranges: Vec<Vec<LatticePoint>> = (0..k)
        .map(|i| range_points(&c[i], &c[i + n - k], min_abs, params))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(ranges: &[Vec<LatticePoint>], cur: &mut Vec<LatticePoint>, out: &mut Vec<Config>) {
        let i = cur.len();
        if i == ranges.len() {
            out.push(Config::from_sorted_unchecked(cur.clone()));
            return;
        }
        for p in &ranges[i] {
            if cur.last().is_some_and(|l| l >= p) {
                continue;
            }
            cur.push(*p);
            rec(ranges, cur, out);
            cur.pop();
        }
    }
    rec(&ranges, &mut cur, &mut out);
    Ok(out)
}

/// Atoms of `Λ^N_K(X, ·)` on `G_K` from the closed form.
///
/// `tail_bound` is `|1 - sum of atoms|`: the truncated mass plus, when
/// `X` has zeros, the mass on configurations with zeros.
pub fn closed_measure<F: RealField>(
    x: &ExtConfig,
    k: usize,
    min_abs: &Rational,
    params: &QParams,
) -> Result<DiscreteMeasure<F>> {
    let form = ClosedForm::<F>::new(x, k, params)?;
    let cands = support_candidates(x, k, min_abs, params)?;
    let mut pts: Vec<LatticePoint> = cands.iter().flat_map(|c| c.points().iter().copied()).collect();
    pts.sort();
    pts.dedup();
    let cache: HashMap<LatticePoint, (Vec<F>, F)> = pts
        .par_iter()
        .map(|p| (*p, (form.column(p, params), F::of_point(p, params))))
        .collect();
    let atoms: Vec<(ExtConfig, F)> = cands
        .into_par_iter()
        .filter_map(|y| {
            let entries: Vec<&(Vec<F>, F)> = y.points().iter().map(|p| &cache[p]).collect();
            let cols: Vec<&Vec<F>> = entries.iter().map(|e| &e.0).collect();
            let vals: Vec<F> = entries.iter().map(|e| e.1.clone()).collect();
            let w = form.eval_with(&cols, &vals);
            (!w.is_zero()).then(|| (ExtConfig::from(y), w))
        })
        .collect();
    let mut out = DiscreteMeasure::new();
    out.atoms.extend(atoms);
    out.tail_bound = (F::one() - out.total()).abs_val();
    Ok(out)
}

/// Full `Λ^N_K(X, ·)` on `GG_K`: atoms on `G_K` from the closed form,
/// atoms with zeros from the composition of extended links.
pub fn extended_measure<F: RealField>(
    x: &ExtConfig,
    k: usize,
    min_abs: &Rational,
    prune: f64,
    params: &QParams,
) -> Result<DiscreteMeasure<F>> {
    if k == x.level() {
        let mut out = DiscreteMeasure::new();
        out.atoms.insert(x.clone(), F::one());
        return Ok(out);
    }
    let mut out = if x.nonzero.is_empty() {
        DiscreteMeasure::new()
    } else {
        closed_measure::<F>(x, k, min_abs, params)?
    };
    if !x.has_zeros() {
        return Ok(out);
    }
    let tel = telescope::<F>(x, k, min_abs, prune, params)?;
    for (y, w) in tel.atoms {
        if y.has_zeros() {
            out.atoms.insert(y, w);
        }
    }
    let deficit = (F::one() - out.total()).abs_val();
    out.tail_bound = if deficit > tel.tail_bound { deficit } else { tel.tail_bound };
    Ok(out)
}

/// Residual of a moment identity together with the tail bound of the
/// measure it was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentResidual<F> {
    pub residual: F,
    pub tail_bound: F,
}

/// `|sum_Y Λ^N_K(X, Y) S~_ν|K(Y) - S~_ν|N(X)|`.
pub fn moment_check<F: RealField>(
    x: &ExtConfig,
    k: usize,
    nu: &Partition,
    min_abs: &Rational,
    prune: f64,
    params: &QParams,
) -> Result<MomentResidual<F>> {
    if nu.len() > k {
        return Err(Error::PartitionTooLong { len: nu.len(), level: k });
    }
    let m = extended_measure::<F>(x, k, min_abs, prune, params)?;
    let pk = schur_principal(nu, k, &params.q)?;
    let pn = schur_principal(nu, x.level(), &params.q)?;
    let mut lhs = F::zero();
    for (y, w) in &m.atoms {
        let vals: Vec<F> = y.closed_points().iter().map(|c| closed_value(c, params)).collect();
        lhs = lhs + w.clone() * normalized_schur_values(nu, &vals, &pk)?;
    }
    let xv: Vec<F> = x.closed_points().iter().map(|c| closed_value(c, params)).collect();
    let rhs = normalized_schur_values(nu, &xv, &pn)?;
    Ok(MomentResidual { residual: (lhs - rhs).abs_val(), tail_bound: m.tail_bound })
}

pub(crate) fn closed_value<F: RealField>(c: &ClosedPoint, params: &QParams) -> F {
    match c {
        ClosedPoint::Zero => F::zero(),
        ClosedPoint::Point(p) => F::of_point(p, params),
    }
}

/// `(1-q)(q;q)_inf / prod_{i>=0} (1+q^i)`, rounded down by its error.
pub fn extreme_mass_bound(params: &QParams) -> f64 {
    let q = params.q_f64();
    let a = q_pochhammer_inf_f64(q, q, 1e-15);
    let b = q_pochhammer_inf_f64(-1.0, q, 1e-15);
    let lo = (a.value - a.error) * (1.0 - q) / (b.value + b.error);
    lo * (1.0 - 1e-12)
}

/// `Λ^N_1(X, x_0)` at every coordinate of maximal absolute value.
pub fn extreme_point_masses(x: &ExtConfig, params: &QParams) -> Result<Vec<(LatticePoint, Rational)>> {
    let pts = x.nonzero.points();
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(Error::InvalidConfig("configuration has no nonzero point".into()));
    };
    let a = crate::lattice::value(first, params);
    let b = crate::lattice::value(last, params);
    let ends: Vec<LatticePoint> = match (-a.clone()).cmp(&b) {
        std::cmp::Ordering::Greater => vec![*first],
        std::cmp::Ordering::Less => vec![*last],
        std::cmp::Ordering::Equal if first == last => vec![*first],
        std::cmp::Ordering::Equal => vec![*first, *last],
    };
    let form = ClosedForm::<Rational>::new(x, 1, params)?;
    Ok(ends
        .into_iter()
        .map(|p| {
            let w = form.eval(&Config::from_sorted_unchecked(vec![p]), params);
            (p, w)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::link_measure_ext;
    use crate::scalar::{int, rat};

    fn ext(s: &str) -> ExtConfig {
        s.parse().unwrap()
    }

    #[test]
    fn n1_examples() {
        let p = QParams::canonical();
        let x = ext("+:2,+:0");
        let w: Rational = lambda_closed_n1(&x, &LatticePoint::plus(0), &p).unwrap();
        assert_eq!(w, rat(2, 3));
        let w: Rational = lambda_closed_n1(&x, &LatticePoint::plus(1), &p).unwrap();
        assert_eq!(w, rat(1, 3));
        let w: Rational = lambda_closed_n1(&x, &LatticePoint::plus(3), &p).unwrap();
        assert_eq!(w, int(0));
        let w: Rational = lambda_closed_n1(&x, &LatticePoint::plus(-1), &p).unwrap();
        assert_eq!(w, int(0));
    }

    #[test]
    fn closed_matches_telescope_positive() {
        let p = QParams::canonical();
        let x = ext("+:3,+:2,+:0");
        for k in 1..3 {
            let tel: DiscreteMeasure<Rational> = telescope(&x, k, &int(0), 0.0, &p).unwrap();
            let cl: DiscreteMeasure<Rational> = closed_measure(&x, k, &int(0), &p).unwrap();
            assert_eq!(tel.atoms, cl.atoms, "K = {k}");
        }
    }

    #[test]
    fn closed_matches_telescope_negative_and_mixed() {
        let p = QParams::canonical();
        for s in ["-:0,-:1,-:3", "-:0,-:2,+:1,+:0"] {
            let x = ext(s);
            for k in 1..x.level() {
                let min_abs = rat(1, 1 << 24);
                let tel: DiscreteMeasure<f64> = telescope(&x, k, &min_abs, 0.0, &p).unwrap();
                let cl: DiscreteMeasure<f64> = closed_measure(&x, k, &min_abs, &p).unwrap();
                for (y, w) in &tel.atoms {
                    let c = cl.mass(y);
                    assert!((c - w).abs() <= tel.tail_bound + 1e-12, "{s} K={k} Y={y}: {c} vs {w}");
                }
                assert!(tel.tail_bound < 1e-4);
            }
        }
    }

    #[test]
    fn closed_with_zeros_matches_extended_links() {
        let p = QParams::canonical();
        let x = ext("+:2,+:0,0");
        let link: DiscreteMeasure<Rational> = link_measure_ext(&x, &rat(1, 1 << 20), &p).unwrap();
        let form = ClosedForm::<Rational>::new(&x, 2, &p).unwrap();
        for (y, w) in &link.atoms {
            if !y.has_zeros() {
                assert_eq!(&form.eval(&y.nonzero, &p), w, "{y}");
            }
        }
    }

    #[test]
    fn extreme_mass_bound_value() {
        let c = extreme_mass_bound(&QParams::canonical());
        assert!((c - 0.030281).abs() < 1e-5, "{c}");
    }

    #[test]
    fn candidates_stay_in_hull() {
        let p = QParams::canonical();
        let x = ext("+:4,+:2,+:0");
        let c = support_candidates(&x, 2, &int(0), &p).unwrap();
        assert!(c.iter().all(|y| y.points()[0] >= LatticePoint::plus(4) && y.points()[1] <= LatticePoint::plus(0)));
    }
}
