//! Coherent families of measures, the extreme families attached to finite
//! boundary configurations, and limits along regular sequences.

use crate::error::{Error, Result};
use crate::kernels::{
    lambda_inf_residue, extreme_mass_bound, regular_limit_of, DiscreteMeasure, InfiniteKernel, LimitTrace, Link,
    MomentResidual,
};
use crate::lattice::{Config, ExtConfig, LatticePoint, QParams};
use crate::scalar::{rat_to_f64, Rational};
use crate::symfunc::{normalized_schur_inf, normalized_schur_values, schur_principal, Partition};
use num_traits::Signed;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Measures `M_K` on `GG_K` for finitely many levels.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentFamily {
    pub levels: BTreeMap<usize, DiscreteMeasure<f64>>,
    /// The boundary configuration the family was built from.
    pub provenance: Option<Config>,
}

impl CoherentFamily {
    pub fn level(&self, k: usize) -> Option<&DiscreteMeasure<f64>> {
        self.levels.get(&k)
    }

    pub fn k_max(&self) -> usize {
        self.levels.keys().next_back().copied().unwrap_or(0)
    }

    /// Adds `eps` to the weight of `atom` at level `k`.
    pub fn perturb(&mut self, k: usize, atom: &ExtConfig, eps: f64) -> Result<()> {
        let m = self.levels.get_mut(&k).ok_or_else(|| Error::InvalidParams(format!("level {k} is not materialized")))?;
        m.add(atom.clone(), eps);
        Ok(())
    }
}

/// Smallest cut below which the remaining mass of `Λ^∞_K(X, ·)` is at
/// most `tol`, tried down to `2^-60`.
fn boundary_measure(ker: &InfiniteKernel, k: usize, tol: f64, params: &QParams) -> Result<DiscreteMeasure<f64>> {
    let step = params.q.pow(4);
    let mut cut = params.q.pow(8) * params.zeta_plus.clone().min(-params.zeta_minus.clone());
    let floor = Rational::new(1.into(), num_bigint::BigInt::from(1u64 << 60));
    loop {
        let m = ker.measure(k, &cut)?;
        if m.tail_bound <= tol {
            return Ok(m);
        }
        if cut < floor {
            return Err(Error::NoConvergence(format!(
                "level {k} mass deficit {} above {tol} at the deepest cut",
                m.tail_bound
            )));
        }
        cut *= &step;
    }
}

/// The extreme family `M^(X)` with `M_K = Λ^∞_K(X, ·)` for `K = 1..=k_max`,
/// each level enumerated until its missing mass is at most `tol`.
pub fn extreme_family(x: &Config, k_max: usize, tol: f64, params: &QParams) -> Result<CoherentFamily> {
    let ker = InfiniteKernel::new(x, params);
    let levels = (1..=k_max)
        .into_par_iter()
        .map(|k| Ok((k, boundary_measure(&ker, k, tol, params)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(CoherentFamily { levels, provenance: Some(x.clone()) })
}

/// Result of a coherence check between two materialized levels.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceReport {
    /// `max_Y |(M_(K+1) Λ^(K+1)_K)(Y) - M_K(Y)|` over the test atoms.
    pub residual: f64,
    /// Mass of `M_(K+1)` that was not enumerated.
    pub tail_bound: f64,
    pub test_atoms: usize,
}

/// Compares `M_(K+1) Λ^(K+1)_K` with `M_K` on the heaviest `max_tests`
/// atoms of `M_K`.
pub fn coherence_check(fam: &CoherentFamily, k: usize, max_tests: usize, params: &QParams) -> Result<CoherenceReport> {
    let lower = fam.level(k).ok_or_else(|| Error::InvalidParams(format!("level {k} is not materialized")))?;
    let upper = fam.level(k + 1).ok_or_else(|| Error::InvalidParams(format!("level {} is not materialized", k + 1)))?;
    let mut tests: Vec<(&ExtConfig, f64)> = lower.atoms.iter().map(|(y, w)| (y, *w)).collect();
    tests.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(b.0)));
    tests.truncate(max_tests);
    let upper_atoms: Vec<(&ExtConfig, f64)> = upper.atoms.iter().map(|(x, w)| (x, *w)).collect();
    let pushed: Vec<Vec<f64>> = upper_atoms
        .par_iter()
        .map(|(x, w)| {
            let link = Link::<f64>::new(x, params);
            tests.iter().map(|(y, _)| w * link.weight_of(y, params)).collect()
        })
        .collect();
    let mut residual = 0.0f64;
    for (j, (_, m)) in tests.iter().enumerate() {
        let img: f64 = pushed.iter().map(|row| row[j]).sum();
        residual = residual.max((img - m).abs());
    }
    Ok(CoherenceReport { residual, tail_bound: upper.tail_bound, test_atoms: tests.len() })
}

/// `|sum_Y M^(X)_K(Y) S~_ν|K(Y) - S~_ν|∞(X)|`.
pub fn boundary_moment_check(
    x: &Config,
    k: usize,
    nu: &Partition,
    tol: f64,
    params: &QParams,
) -> Result<MomentResidual<f64>> {
    if nu.len() > k {
        return Err(Error::PartitionTooLong { len: nu.len(), level: k });
    }
    let ker = InfiniteKernel::new(x, params);
    let m = boundary_measure(&ker, k, tol, params)?;
    let pk = schur_principal(nu, k, &params.q)?;
    let mut lhs = 0.0;
    for (y, w) in &m.atoms {
        let vals = y.values_f64(params);
        lhs += w * normalized_schur_values(nu, &vals, &pk)?;
    }
    let rhs = rat_to_f64(&normalized_schur_inf(nu, &ExtConfig::from(x.clone()), params, 1e-18, 40)?);
    Ok(MomentResidual { residual: (lhs - rhs).abs(), tail_bound: m.tail_bound })
}

/// `lim_N Λ^N_K(X(N), Y)` along a sequence that must coincide with its
/// first term outside `(-eps, eps)`; stops once two successive increments
/// are below `tol`.
pub fn regular_limit(
    seq: &dyn Fn(usize) -> Result<ExtConfig>,
    start: usize,
    eps: &Rational,
    y: &Config,
    tol: f64,
    params: &QParams,
) -> Result<LimitTrace> {
    let outside = |c: &ExtConfig| -> Vec<LatticePoint> {
        c.nonzero
            .points()
            .iter()
            .filter(|p| crate::lattice::value(p, params).abs() >= *eps)
            .copied()
            .collect()
    };
    let head = outside(&seq(start)?);
    let checked = |n: usize| -> Result<ExtConfig> {
        let c = seq(n)?;
        if c.level() != n {
            return Err(Error::SizeMismatch { expected: n, got: c.level() });
        }
        if outside(&c) != head {
            return Err(Error::InvalidConfig(format!("X({n}) = ({c}) differs from X({start}) outside (-eps, eps)")));
        }
        Ok(c)
    };
    regular_limit_of(checked, start, y, tol, params)
}

/// `Λ^∞_1(X, x_0)` at each point of `X` of maximal absolute value,
/// together with the lower bound it must exceed.
pub fn tightness_witness(x: &Config, params: &QParams) -> Result<(Vec<(LatticePoint, f64)>, f64)> {
    let pts = x.points();
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(Error::InvalidConfig("empty configuration".into()));
    };
    let a = crate::lattice::value(first, params).abs();
    let b = crate::lattice::value(last, params).abs();
    let ends: Vec<LatticePoint> = if first == last || a != b {
        vec![if a > b { *first } else { *last }]
    } else {
        vec![*first, *last]
    };
    let masses = ends
        .into_iter()
        .map(|p| (p, lambda_inf_residue(x, &Config::from_sorted_unchecked(vec![p]), params).value))
        .collect();
    Ok((masses, extreme_mass_bound(params)))
}

/// `true` when the level-1 measures of two families differ at some atom
/// by more than `tol`.
pub fn families_differ(a: &CoherentFamily, b: &CoherentFamily, tol: f64) -> bool {
    let (Some(ma), Some(mb)) = (a.level(1), b.level(1)) else { return false };
    ma.atoms.keys().chain(mb.atoms.keys()).any(|y| (ma.mass(y) - mb.mass(y)).abs() > tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::lambda_inf;
    use crate::qcalc::q_pochhammer_inf_f64;
    use crate::scalar::rat;
    use proptest::prelude::*;

    fn qp() -> QParams {
        QParams::canonical()
    }

    fn cfg(s: &str) -> Config {
        s.parse().unwrap()
    }

    #[test]
    fn single_point_family() {
        let p = qp();
        let fam = extreme_family(&cfg("+:0"), 2, 1e-10, &p).unwrap();
        let m1 = fam.level(1).unwrap();
        assert!((m1.total() - 1.0).abs() < 1e-10);
        for n in 0..10 {
            let y = ExtConfig::from(cfg(&format!("+:{n}")));
            let want = 0.5f64.powi(n) * q_pochhammer_inf_f64(0.5f64.powi(n + 1), 0.5, 1e-16).value;
            assert!((m1.mass(&y) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_family_is_trivial() {
        let p = qp();
        let fam = extreme_family(&Config::empty(), 3, 1e-10, &p).unwrap();
        for k in 1..=3 {
            assert_eq!(fam.level(k).unwrap().mass(&ExtConfig::zeros(k)), 1.0);
        }
        for k in 1..3 {
            assert_eq!(coherence_check(&fam, k, 100, &p).unwrap().residual, 0.0);
        }
        let nu: Partition = "[1]".parse().unwrap();
        let r = boundary_moment_check(&Config::empty(), 2, &nu, 1e-10, &p).unwrap();
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn coherence_on_examples() {
        let p = qp();
        for xs in ["+:0", "-:0,+:1", "+:0,+:2,+:3", "-:1,-:0,+:2"] {
            let fam = extreme_family(&cfg(xs), 3, 1e-10, &p).unwrap();
            for k in 1..3 {
                let r = coherence_check(&fam, k, 200, &p).unwrap();
                assert!(r.residual < 1e-8, "{xs} K={k}: {}", r.residual);
            }
        }
    }

    #[test]
    fn perturbation_is_detected() {
        let p = qp();
        let mut fam = extreme_family(&cfg("+:0"), 2, 1e-10, &p).unwrap();
        let eps = 1e-4;
        let y = ExtConfig::from(cfg("+:0"));
        fam.perturb(1, &y, eps).unwrap();
        let r = coherence_check(&fam, 1, 50, &p).unwrap();
        assert!(r.residual >= eps * 0.99);
        // perturbing the upper level shows up through the link weights
        let mut fam = extreme_family(&cfg("+:0"), 2, 1e-10, &p).unwrap();
        let x2: ExtConfig = "+:0,0".parse().unwrap();
        fam.perturb(2, &x2, eps).unwrap();
        let link = Link::<f64>::new(&x2, &p);
        let min_w = fam.level(1).unwrap().atoms.keys().take(5).map(|y| link.weight_of(y, &p)).filter(|w| *w > 0.0).fold(1.0f64, f64::min);
        let r = coherence_check(&fam, 1, 50, &p).unwrap();
        assert!(r.residual >= eps * min_w * 0.99, "{} < {}", r.residual, eps * min_w);
    }

    #[test]
    fn moment_examples() {
        let p = qp();
        let x = cfg("+:0");
        let nu: Partition = "[1]".parse().unwrap();
        let r = boundary_moment_check(&x, 1, &nu, 1e-12, &p).unwrap();
        assert!(r.residual < 1e-10, "{}", r.residual);
        let rhs = rat_to_f64(&normalized_schur_inf(&nu, &ExtConfig::from(x.clone()), &p, 1e-18, 40).unwrap());
        assert!((rhs - 0.5).abs() < 1e-15);
        for nu in ["[2]", "[]"] {
            let nu: Partition = nu.parse().unwrap();
            assert!(boundary_moment_check(&x, 1, &nu, 1e-12, &p).unwrap().residual < 1e-10);
        }
        assert!(boundary_moment_check(&x, 1, &"[1,1]".parse().unwrap(), 1e-12, &p).is_err());
    }

    #[test]
    fn moments_on_mixed_configs() {
        let p = qp();
        for xs in ["-:0,+:1", "-:2,+:0,+:1"] {
            for k in 1..=3 {
                for nu in Partition::up_to_size(3, k) {
                    let r = boundary_moment_check(&cfg(xs), k, &nu, 1e-10, &p).unwrap();
                    assert!(r.residual < 1e-7, "{xs} K={k} {nu}: {}", r.residual);
                }
            }
        }
    }

    #[test]
    fn regular_limits() {
        let p = qp();
        let y = cfg("+:0");
        let zeros = |n: usize| Ok(ExtConfig::new(cfg("+:0"), n - 1));
        let t = regular_limit(&zeros, 2, &rat(1, 2), &y, 1e-12, &p).unwrap();
        assert!((t.value - crate::kernels::qq_inf(&p).value).abs() < 1e-10);
        // shrinking points give the same limit
        let shrink = |n: usize| {
            let mut pts = vec![LatticePoint::plus(0)];
            pts.extend((0..n - 1).map(|i| LatticePoint::plus((n + i) as i32)));
            Ok(ExtConfig::from(Config::from_unsorted(pts)?))
        };
        let s = regular_limit(&shrink, 2, &rat(1, 2), &y, 1e-12, &p).unwrap();
        assert!((s.value - t.value).abs() < 1e-9);
        assert!(t.empirical_rate().is_none_or(|r| r < 1.0));
        // outside the hull
        let z = regular_limit(&zeros, 2, &rat(1, 2), &cfg("+:-1"), 1e-12, &p).unwrap();
        assert_eq!(z.value, 0.0);
        // a sequence that moves outside (-eps, eps) is rejected
        let moving = |n: usize| Ok(ExtConfig::new(cfg(&format!("+:{}", n % 2)), n - 1));
        assert!(regular_limit(&moving, 2, &rat(1, 4), &y, 1e-12, &p).is_err());
        let lim = lambda_inf(&cfg("+:0"), &y, 1e-12, &p).unwrap();
        assert!((lim.value - t.value).abs() < 1e-10);
    }

    #[test]
    fn tightness() {
        let p = qp();
        for xs in ["+:0", "-:0,+:0", "-:3,+:0,+:1", "-:0,-:5,+:2"] {
            let (masses, c) = tightness_witness(&cfg(xs), &p).unwrap();
            for (pt, m) in masses {
                assert!(m >= c, "{xs} at {pt}: {m} < {c}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn distinct_points_distinct_families(
            a in proptest::collection::btree_set((any::<bool>(), 0i32..4), 1..=2),
            b in proptest::collection::btree_set((any::<bool>(), 0i32..4), 1..=2),
        ) {
            prop_assume!(a != b);
            let p = qp();
            let mk = |s: &std::collections::BTreeSet<(bool, i32)>| {
                Config::from_unsorted(s.iter().map(|&(sg, e)| if sg { LatticePoint::plus(e) } else { LatticePoint::minus(e) }).collect()).unwrap()
            };
            let fa = extreme_family(&mk(&a), 1, 1e-9, &p).unwrap();
            let fb = extreme_family(&mk(&b), 1, 1e-9, &p).unwrap();
            prop_assert!(families_differ(&fa, &fb, 1e-9));
        }
    }
}
