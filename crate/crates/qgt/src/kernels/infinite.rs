//! The kernels `Λ^∞_K` from a finite boundary configuration.

use super::closed::{support_candidates, ClosedForm};
use super::{qq_table, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::lattice::{value_f64, Config, ExtConfig, LatticePoint, QParams};
use crate::linalg::{det, vandermonde};
use crate::qcalc::{q_pochhammer_inf_f64, Certified};
use crate::scalar::{rat_to_f64, Rational};
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::collections::HashMap;

/// `(q;q)_inf` in floating point with its error.
pub fn qq_inf(params: &QParams) -> Certified<f64> {
    let q = params.q_f64();
    q_pochhammer_inf_f64(q, q, 1e-16)
}

/// `Λ^∞_K(X, ·)` for a finite configuration `X` with `k` points.
///
/// On `G_K` every atom is an exact rational times `(q;q)_inf^K`; for
/// `K >= k` the measure lives on `Y° ∪ 0^(K-k)` with `Y°` in `G_k`, and
/// each atom is a rational times `(q;q)_inf^k`.
pub struct InfiniteKernel {
    x: Config,
    xs: Vec<Rational>,
    inv_denoms: Vec<Rational>,
    xs_f64: Vec<f64>,
    inv_denoms_f64: Vec<f64>,
    qq: Certified<f64>,
    params: QParams,
}

impl InfiniteKernel {
    pub fn new(x: &Config, params: &QParams) -> Self {
        let xs = x.values(params);
        let inv_denoms: Vec<Rational> = xs
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                let d = xs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .fold(Rational::one(), |a, (_, xj)| a * (xi - xj));
                Rational::one() / d
            })
            .collect();
        let xs_f64 = xs.iter().map(rat_to_f64).collect();
        let inv_denoms_f64 = inv_denoms.iter().map(rat_to_f64).collect();
        InfiniteKernel { x: x.clone(), xs, inv_denoms, xs_f64, inv_denoms_f64, qq: qq_inf(params), params: params.clone() }
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    /// The rational `c` with `Λ^∞_K(X, Y) = c (q;q)_inf^K`, `Y` in `G_K`.
    pub fn coefficient(&self, y: &Config) -> Rational {
        let kk = y.len();
        let k = self.k() as i64;
        let qq: Vec<Rational> = qq_table(self.max_r(y) + kk, &self.params);
        let cols: Vec<Vec<Rational>> = y
            .points()
            .iter()
            .map(|yp| {
                let yv = crate::lattice::value(yp, &self.params);
                let mut col = vec![Rational::zero(); kk];
                for ((xp, xv), inv) in self.x.points().iter().zip(&self.xs).zip(&self.inv_denoms) {
                    if xp.sign != yp.sign || xp.exponent > yp.exponent {
                        continue;
                    }
                    let r = (yp.exponent - xp.exponent) as usize;
                    let base = inv / &qq[r];
                    for (i, c) in col.iter_mut().enumerate() {
                        let e = (i as i64 + 1) + k - kk as i64 - 2;
                        *c += &base * xv.pow(e as i32);
                    }
                }
                col.into_iter().map(|c| c * &yv).collect()
            })
            .collect();
        let m: Vec<Vec<Rational>> = (0..kk).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        let mut pre = Rational::one();
        for i in 1..=kk {
            pre /= &qq[kk - i];
        }
        pre * vandermonde(&y.values(&self.params)) * det(m)
    }

    fn max_r(&self, y: &Config) -> usize {
        let lo = self.x.points().iter().map(|p| p.exponent).min().unwrap_or(0);
        y.points().iter().map(|p| (p.exponent - lo).max(0) as usize).max().unwrap_or(0)
    }

    /// The rational `c` with `Λ^∞_K(X, Y° ∪ 0^(K-k)) = c (q;q)_inf^k`.
    pub fn zero_coefficient(&self, y0: &Config, kk: usize) -> Result<Rational> {
        let k = self.k();
        if y0.len() != k || kk < k {
            return Err(Error::SizeMismatch { expected: k, got: y0.len() });
        }
        let q = &self.params.q;
        let shift = kk - k;
        let b = q.pow((shift + 1) as i32);
        let qq: Vec<Rational> = qq_table(self.max_r(y0) + kk + 1, &self.params);
        // (b;q)_inf = (q;q)_inf / (q;q)_shift
        let m: Vec<Vec<Rational>> = self
            .x
            .points()
            .iter()
            .map(|xp| {
                y0.points()
                    .iter()
                    .map(|yp| {
                        if xp.sign != yp.sign || xp.exponent > yp.exponent {
                            return Rational::zero();
                        }
                        let r = (yp.exponent - xp.exponent) as usize;
                        b.pow(r as i32) / (&qq[r] * &qq[shift])
                    })
                    .collect()
            })
            .collect();
        let mut pre = Rational::one();
        // prod_i 1/(b;q)_(k-i)
        for i in 1..=k {
            let mut bq = Rational::one();
            for j in 0..k - i {
                bq *= Rational::one() - &b * q.pow(j as i32);
            }
            pre /= bq;
        }
        Ok(pre * vandermonde(&y0.values(&self.params)) / vandermonde(&self.xs) * det(m))
    }

    /// `Λ^∞_K(X, Y)` for any `Y` in `GG_K`.
    pub fn atom(&self, y: &ExtConfig) -> Result<Certified<f64>> {
        let kk = y.level();
        let k = self.k();
        let (c, power) = if kk < k {
            if y.has_zeros() {
                return Ok(Certified { value: 0.0, error: 0.0 });
            }
            (self.coefficient(&y.nonzero), kk)
        } else {
            if y.zero_mult != kk - k {
                return Ok(Certified { value: 0.0, error: 0.0 });
            }
            (self.zero_coefficient(&y.nonzero, kk)?, k)
        };
        Ok(self.scale(&c, power))
    }

    fn scale(&self, c: &Rational, power: usize) -> Certified<f64> {
        let cf = rat_to_f64(c);
        let p = self.qq.value.powi(power as i32);
        let rel = power as f64 * self.qq.error / self.qq.value;
        Certified { value: cf * p, error: (cf * p).abs() * (rel * 1.01 + 4.0 * f64::EPSILON) }
    }

    /// Column of the `K < k` determinant at `y`, in floating point.
    fn column_f64(&self, yp: &LatticePoint, kk: usize, qq: &[f64]) -> Vec<f64> {
        let k = self.k() as i64;
        let yv = value_f64(yp, &self.params);
        let mut col = vec![0.0; kk];
        for ((xp, xv), inv) in self.x.points().iter().zip(&self.xs_f64).zip(&self.inv_denoms_f64) {
            if xp.sign != yp.sign || xp.exponent > yp.exponent {
                continue;
            }
            let r = (yp.exponent - xp.exponent) as usize;
            let base = inv / qq[r.min(qq.len() - 1)];
            for (i, c) in col.iter_mut().enumerate() {
                let e = (i as i64 + 1) + k - kk as i64 - 2;
                *c += base * xv.powi(e as i32);
            }
        }
        col.iter().map(|c| c * yv).collect()
    }

    /// Atoms of `Λ^∞_K(X, ·)` with every nonzero coordinate at least
    /// `min_abs` in absolute value, evaluated in floating point;
    /// `tail_bound` is the mass deficit.
    pub fn measure(&self, kk: usize, min_abs: &Rational) -> Result<DiscreteMeasure<f64>> {
        let k = self.k();
        let mut out = DiscreteMeasure::new();
        if k == 0 {
            out.atoms.insert(ExtConfig::zeros(kk), 1.0);
            return Ok(out);
        }
        let padded = ExtConfig::new(self.x.clone(), kk.max(k) + 1);
        let q = self.params.q_f64();
        // (q;q)_r, constant past the point where it has converged
        let mut qq = vec![1.0f64];
        let mut qi = q;
        while qq.len() < 4096 && qi > 1e-18 {
            let last = *qq.last().unwrap();
            qq.push(last * (1.0 - qi));
            qi *= q;
        }
        let cands = support_candidates(&padded, kk.min(k), min_abs, &self.params)?;
        let mut pts: Vec<LatticePoint> = cands.iter().flat_map(|c| c.points().iter().copied()).collect();
        pts.sort();
        pts.dedup();
        let atoms: Vec<(ExtConfig, f64)> = if kk < k {
            let cache: HashMap<LatticePoint, Vec<f64>> =
                pts.par_iter().map(|p| (*p, self.column_f64(p, kk, &qq))).collect();
            let mut pre = 1.0;
            for i in 1..=kk {
                pre /= qq[kk - i];
            }
            let scale = pre * self.qq.value.powi(kk as i32);
            cands
                .into_par_iter()
                .filter_map(|y| {
                    let cols: Vec<&Vec<f64>> = y.points().iter().map(|p| &cache[p]).collect();
                    if cols.iter().any(|c| c.iter().all(|v| *v == 0.0)) {
                        return None;
                    }
                    let m: Vec<Vec<f64>> = (0..kk).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
                    let v = scale * vandermonde(&y.values_f64(&self.params)) * det(m);
                    (v != 0.0).then(|| (ExtConfig::from(y), v))
                })
                .collect()
        } else {
            let shift = kk - k;
            let b = q.powi(shift as i32 + 1);
            let qq_shift = qq[shift.min(qq.len() - 1)];
            // rows indexed by x, columns by y
            let cache: HashMap<LatticePoint, Vec<f64>> = pts
                .par_iter()
                .map(|yp| {
                    let col = self
                        .x
                        .points()
                        .iter()
                        .map(|xp| {
                            if xp.sign != yp.sign || xp.exponent > yp.exponent {
                                return 0.0;
                            }
                            let r = (yp.exponent - xp.exponent) as usize;
                            b.powi(r as i32) / (qq[r.min(qq.len() - 1)] * qq_shift)
                        })
                        .collect();
                    (*yp, col)
                })
                .collect();
            let mut pre = 1.0;
            for i in 1..=k {
                let mut bq = 1.0;
                for j in 0..k - i {
                    bq *= 1.0 - b * q.powi(j as i32);
                }
                pre /= bq;
            }
            let scale = pre / vandermonde(&self.xs_f64) * self.qq.value.powi(k as i32);
            cands
                .into_par_iter()
                .filter_map(|y0| {
                    let cols: Vec<&Vec<f64>> = y0.points().iter().map(|p| &cache[p]).collect();
                    let m: Vec<Vec<f64>> = (0..k).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
                    let v = scale * vandermonde(&y0.values_f64(&self.params)) * det(m);
                    (v != 0.0).then(|| (ExtConfig::new(y0, shift), v))
                })
                .collect()
        };
        out.atoms.extend(atoms);
        out.tail_bound = (1.0 - out.total()).abs();
        Ok(out)
    }
}

/// Successive values of `Λ^N_K(X ∪ 0^(N-k), Y)` and where they settled.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitTrace {
    pub value: f64,
    pub levels: Vec<usize>,
    pub values: Vec<f64>,
}

impl LimitTrace {
    /// Absolute differences of consecutive values.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }

    /// Geometric mean of the ratios of consecutive nonzero increments.
    pub fn empirical_rate(&self) -> Option<f64> {
        let inc: Vec<f64> = self.increments().into_iter().filter(|d| *d > 0.0).collect();
        if inc.len() < 2 {
            return None;
        }
        let logs: f64 = inc.windows(2).map(|w| (w[1] / w[0]).ln()).sum();
        Some((logs / (inc.len() - 1) as f64).exp())
    }
}

/// `Λ^∞_K(X, Y)` as the limit of the finite kernels at the zero-padded
/// configurations, stopped once two successive increments are below `tol`.
pub fn lambda_inf(x: &Config, y: &Config, tol: f64, params: &QParams) -> Result<LimitTrace> {
    regular_limit_of(|n| Ok(ExtConfig::new(x.clone(), n - x.len())), x.len() + y.len() + 1, y, tol, params)
}

pub(crate) fn regular_limit_of(
    seq: impl Fn(usize) -> Result<ExtConfig>,
    start: usize,
    y: &Config,
    tol: f64,
    params: &QParams,
) -> Result<LimitTrace> {
    let mut trace = LimitTrace { value: 0.0, levels: Vec::new(), values: Vec::new() };
    for n in start..start + 400 {
        let xn = seq(n)?;
        let v = ClosedForm::<f64>::new(&xn, y.len(), params)?.eval(y, params);
        trace.levels.push(n);
        trace.values.push(v);
        let inc = trace.increments();
        if inc.len() >= 2 && inc[inc.len() - 1] < tol && inc[inc.len() - 2] < tol {
            trace.value = v;
            return Ok(trace);
        }
    }
    Err(Error::NoConvergence(format!("kernel values at Y = ({y}) did not settle within {tol}")))
}

/// `Λ^∞_K(X, Y)` for `Y` in `G_K` from the residue form.
pub fn lambda_inf_residue(x: &Config, y: &Config, params: &QParams) -> Certified<f64> {
    let ker = InfiniteKernel::new(x, params);
    ker.scale(&ker.coefficient(y), y.len())
}

/// `Λ^∞_K(X, Y° ∪ 0^(K-k))` for `K >= k = |X|`.
pub fn lambda_inf_zero_atom(x: &Config, y0: &Config, kk: usize, params: &QParams) -> Result<Certified<f64>> {
    let ker = InfiniteKernel::new(x, params);
    Ok(ker.scale(&ker.zero_coefficient(y0, kk)?, x.len()))
}

/// Candidate configurations on `G_K` for `Λ^∞_K(X, ·)`.
pub fn infinite_support_candidates(x: &Config, kk: usize, min_abs: &Rational, params: &QParams) -> Result<Vec<Config>> {
    support_candidates(&ExtConfig::new(x.clone(), kk + 1), kk, min_abs, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn cfg(s: &str) -> Config {
        s.parse().unwrap()
    }

    #[test]
    fn single_point_boundary() {
        let p = QParams::canonical();
        let qq = qq_inf(&p).value;
        assert!((qq - 0.288788095086602).abs() < 1e-12);
        let x = cfg("+:0");
        let a = lambda_inf_residue(&x, &cfg("+:0"), &p);
        assert!((a.value - qq).abs() < 1e-12);
        // q^n (q^(n+1); q)_inf
        for n in 0..6 {
            let v = lambda_inf_residue(&x, &cfg(&format!("+:{n}")), &p).value;
            let expected = 0.5f64.powi(n) * q_pochhammer_inf_f64(0.5f64.powi(n + 1), 0.5, 1e-16).value;
            assert!((v - expected).abs() < 1e-12, "n = {n}");
        }
        assert_eq!(lambda_inf_residue(&x, &cfg("-:0"), &p).value, 0.0);
    }

    #[test]
    fn limit_matches_residue() {
        let p = QParams::canonical();
        for (xs, ys) in [("+:0", "+:0"), ("+:0", "+:3"), ("-:1,+:0", "-:2"), ("-:1,+:0,+:2", "-:1,+:1")] {
            let x = cfg(xs);
            let y = cfg(ys);
            let lim = lambda_inf(&x, &y, 1e-13, &p).unwrap();
            let res = lambda_inf_residue(&x, &y, &p);
            assert!((lim.value - res.value).abs() < 1e-10, "{xs} {ys}: {} vs {}", lim.value, res.value);
        }
    }

    #[test]
    fn zero_atom_formula_agrees_at_top() {
        let p = QParams::canonical();
        let x = cfg("-:0,+:1");
        let ker = InfiniteKernel::new(&x, &p);
        for ys in ["-:0,+:1", "-:2,+:3", "-:1,+:2"] {
            let y = cfg(ys);
            assert_eq!(ker.coefficient(&y), ker.zero_coefficient(&y, 2).unwrap(), "{ys}");
        }
    }

    #[test]
    fn measures_have_unit_mass() {
        let p = QParams::canonical();
        for xs in ["+:0", "-:0,+:1", "+:0,+:2"] {
            let ker = InfiniteKernel::new(&cfg(xs), &p);
            for kk in 1..=3 {
                let m = ker.measure(kk, &rat(1, 1 << 26)).unwrap();
                assert!(m.tail_bound < 1e-6, "{xs} K={kk}: {}", m.tail_bound);
            }
        }
    }

    #[test]
    fn float_measure_matches_exact_atoms() {
        let p = QParams::canonical();
        for xs in ["-:0,+:1", "-:1,+:0,+:2", "+:0,+:3"] {
            let x = cfg(xs);
            let ker = InfiniteKernel::new(&x, &p);
            for kk in 1..=4 {
                let m = ker.measure(kk, &rat(1, 1 << 12)).unwrap();
                for (y, w) in &m.atoms {
                    let exact = ker.atom(y).unwrap();
                    assert!((w - exact.value).abs() < 1e-12 + exact.error, "{xs} K={kk} {y}: {w} vs {}", exact.value);
                }
            }
        }
    }
}
