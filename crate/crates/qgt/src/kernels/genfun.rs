//! The test functions `f_{Z,N,K}` and `f_{A|Z,N,K}` and the closed forms
//! of their images under `Λ^N_K`.

use super::closed::{closed_measure, ClosedForm};
use super::{qq_table, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::lattice::{value, ClosedPoint, Config, ExtConfig, QParams};
use crate::linalg::det;
use crate::qcalc::q_pochhammer;
use crate::scalar::{rat_to_c64, CRational, ComplexField, Field, Rational};
use num_complex::Complex;
use num_traits::{One, Zero};

/// Pairwise distinct points off the real axis.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoints {
    z: Vec<CRational>,
}

impl EvalPoints {
    pub fn new(z: Vec<CRational>) -> Result<Self> {
        if z.iter().any(|w| w.im.is_zero()) {
            return Err(Error::InvalidParams("evaluation points must be off the real axis".into()));
        }
        for i in 0..z.len() {
            if z[i + 1..].contains(&z[i]) {
                return Err(Error::InvalidParams("evaluation points must be distinct".into()));
            }
        }
        Ok(EvalPoints { z })
    }

    pub fn points(&self) -> &[CRational] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn to_c64(&self) -> Vec<Complex<f64>> {
        self.z.iter().map(rat_to_c64).collect()
    }

    fn lift<C: ComplexField>(&self) -> Vec<C> {
        self.z.iter().map(C::from_crat).collect()
    }
}

/// `prod_{i=1}^K (q;q)_(N-i) / ((q;q)_(N-K) (q;q)_(K-i))`.
fn level_constant(n: usize, k: usize, params: &QParams) -> Rational {
    let qq: Vec<Rational> = qq_table(n, params);
    (1..=k).fold(Rational::one(), |acc, i| acc * &qq[n - i] / (&qq[n - k] * &qq[k - i]))
}

fn coords<C: ComplexField>(y: &ExtConfig, params: &QParams) -> Vec<C> {
    y.closed_points()
        .iter()
        .map(|c| match c {
            ClosedPoint::Zero => C::zero(),
            ClosedPoint::Point(p) => C::from_rational(&value(p, params)),
        })
        .collect()
}

/// `det[g_j(y_i)] / V(y)` for `g_j(y) = 1/(y z_j^-1; q)_M`, continued to
/// repeated zeros through divided differences:
/// `(-1)^(n(n-1)/2) det[g_j[y_1..y_l]]`.
fn pochhammer_ratio<C: ComplexField>(ys: &[C], zinv: &[C], m: usize, q: &Rational) -> C {
    let n = ys.len();
    if n == 0 {
        return C::one();
    }
    let distinct = (0..n).all(|i| (i + 1..n).all(|j| ys[i] != ys[j]));
    let g = |y: &C, zi: &C| C::one() / q_pochhammer(&(y.clone() * zi.clone()), q, m);
    if distinct {
        let mat: Vec<Vec<C>> = ys.iter().map(|y| zinv.iter().map(|zi| g(y, zi)).collect()).collect();
        return det(mat) / crate::linalg::vandermonde(ys);
    }
    // Taylor coefficients at 0: 1/(y w;q)_M = sum_r (q^M;q)_r/(q;q)_r (y w)^r
    let qm = q.pow(m as i32);
    let qq: Vec<Rational> = (0..n).scan(Rational::one(), |acc, r| {
        let out = acc.clone();
        *acc *= (Rational::one() - &qm * q.pow(r as i32)) / (Rational::one() - q.pow(r as i32 + 1));
        Some(out)
    }).collect();
    let dd = |zi: &C| -> Vec<C> {
        // Newton table along ys (zeros first so equal knots are adjacent)
        let mut order: Vec<&C> = ys.iter().filter(|y| y.is_zero()).collect();
        order.extend(ys.iter().filter(|y| !y.is_zero()));
        let mut table: Vec<C> = order.iter().map(|y| g(y, zi)).collect();
        let mut out = vec![table[0].clone()];
        for w in 1..n {
            for i in 0..n - w {
                table[i] = if order[i].is_zero() && order[i + w].is_zero() {
                    C::from_rational(&qq[w]) * pow(zi, w)
                } else {
                    (table[i + 1].clone() - table[i].clone()) / (order[i + w].clone() - order[i].clone())
                };
            }
            out.push(table[0].clone());
        }
        out
    };
    let cols: Vec<Vec<C>> = zinv.iter().map(dd).collect();
    let mat: Vec<Vec<C>> = (0..n).map(|l| cols.iter().map(|c| c[l].clone()).collect()).collect();
    let d = det(mat);
    if (n * (n - 1) / 2) % 2 == 1 {
        -d
    } else {
        d
    }
}

fn pow<C: Field>(x: &C, n: usize) -> C {
    (0..n).fold(C::one(), |a, _| a * x.clone())
}

/// `f_{Z,N,K}(Y) = det[1/(y_i z_j^-1; q)_(N-K+1)] / (V(Y) V(Z^-1))`,
/// continuous at configurations with zeros.
pub fn eval_f_z<C: ComplexField>(z: &EvalPoints, y: &ExtConfig, n: usize, params: &QParams) -> Result<C> {
    eval_f_az(&Config::empty(), z, y, n, params)
}

/// `f_{A|Z,N,K}(Y)`: zero unless `A ⊂ Y`; otherwise the determinant over
/// `Y \ A` divided by `V(Y \ A) V(Z^-1) prod (y_s - a_r)`.
pub fn eval_f_az<C: ComplexField>(
    a: &Config,
    z: &EvalPoints,
    y: &ExtConfig,
    n: usize,
    params: &QParams,
) -> Result<C> {
    let k = y.level();
    if a.len() + z.len() != k {
        return Err(Error::SizeMismatch { expected: a.len() + z.len(), got: k });
    }
    if k > n {
        return Err(Error::InvalidParams(format!("K = {k} exceeds N = {n}")));
    }
    if !a.points().iter().all(|p| y.nonzero.contains(p)) {
        return Ok(C::zero());
    }
    let rest_pts: Vec<_> = y.nonzero.points().iter().filter(|p| !a.contains(p)).copied().collect();
    let rest = ExtConfig::new(Config::from_sorted_unchecked(rest_pts), y.zero_mult);
    let ys: Vec<C> = coords(&rest, params);
    let zinv: Vec<C> = z.lift::<C>().into_iter().map(|w| C::one() / w).collect();
    let num = pochhammer_ratio(&ys, &zinv, n - k + 1, &params.q);
    let mut den = crate::linalg::vandermonde(&zinv);
    for av in a.values(params) {
        let av = C::from_rational(&av);
        for ys_ in &ys {
            den = den * (ys_.clone() - av.clone());
        }
    }
    Ok(num / den)
}

/// `C_{N,K} prod_{x in X} prod_j 1/(1 - x z_j^-1)`.
pub fn f_z_closed_image<C: ComplexField>(x: &ExtConfig, z: &EvalPoints, params: &QParams) -> Result<C> {
    let n = x.level();
    let k = z.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParams(format!("need 1 <= K < N, got K = {k}, N = {n}")));
    }
    let mut v = C::from_rational(&level_constant(n, k, params));
    for xv in x.nonzero.values(params) {
        let xv = C::from_rational(&xv);
        for zj in z.lift::<C>() {
            v = v / (C::one() - xv.clone() / zj);
        }
    }
    Ok(v)
}

/// Closed form of `(Λ^N_K f_{A|Z,N,K})(X)` for `|A| <= 1` or `A` of full
/// size `K`.
pub fn f_az_closed_image<C: ComplexField>(x: &ExtConfig, a: &Config, z: &EvalPoints, params: &QParams) -> Result<C> {
    let n = x.level();
    let m = a.len();
    let k = m + z.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParams(format!("need 1 <= K < N, got K = {k}, N = {n}")));
    }
    if m == 0 {
        return f_z_closed_image(x, z, params);
    }
    if m == k {
        let form = ClosedForm::<Rational>::new(x, k, params)?;
        return Ok(C::from_rational(&form.eval(a, params)));
    }
    if m > 1 {
        return Err(Error::Unsupported(format!("closed form for |A| = {m} with |Z| = {}", z.len())));
    }
    let ap = a.points()[0];
    let av = C::from_rational(&value(&ap, params));
    let zs = z.lift::<C>();
    let xs: Vec<(crate::lattice::LatticePoint, C)> = x
        .nonzero
        .points()
        .iter()
        .map(|p| (*p, C::from_rational(&value(p, params))))
        .collect();
    let q_pows: Vec<C> = (0..n).map(|l| C::from_rational(&params.q.pow(l as i32))).collect();
    let mut sum = C::zero();
    for (i, (p, xv)) in xs.iter().enumerate() {
        if p.sign != ap.sign || p.exponent > ap.exponent {
            continue;
        }
        let mut t = C::one();
        for zs_ in &zs {
            t = t * (xv.clone() - zs_.clone()) / zs_.clone();
        }
        for l in 1..n - k {
            t = t * (xv.clone() - av.clone() * q_pows[l].clone());
        }
        for (j, (_, xw)) in xs.iter().enumerate() {
            if i != j {
                t = t / (xv.clone() - xw.clone());
            }
        }
        for _ in 0..x.zero_mult {
            t = t / xv.clone();
        }
        sum = sum + t;
    }
    let one_minus = C::from_rational(&(Rational::one() - params.q.pow((n - k) as i32)));
    let mut v = C::from_rational(&level_constant(n, k, params)) * one_minus * av * sum;
    for (_, xv) in &xs {
        for zs_ in &zs {
            v = v / (C::one() - xv.clone() / zs_.clone());
        }
    }
    Ok(v)
}

/// `sum_Y M(Y) f_{A|Z,N,K}(Y)` over the atoms of `M`.
pub fn integrate_f_az<C: ComplexField>(
    measure: &DiscreteMeasure<C::Real>,
    a: &Config,
    z: &EvalPoints,
    n: usize,
    params: &QParams,
) -> Result<C> {
    let mut acc = C::zero();
    for (y, w) in &measure.atoms {
        acc = acc + C::from_real(w) * eval_f_az::<C>(a, z, y, n, params)?;
    }
    Ok(acc)
}

/// Outcome of checking a generating-function identity.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub residual: f64,
    pub tail_bound: f64,
    /// Computed in exact complex rationals.
    pub exact: bool,
}

/// `|sum_Y Λ^N_K(X, Y) f_Z(Y) - C_{N,K} prod (1 - x/z_j)^-1|`.
///
/// Single-sign `X` is handled in exact arithmetic, where the residual is
/// exactly 0 when the identity holds.
pub fn verify_f_z_image(x: &Config, z: &EvalPoints, min_abs: &Rational, params: &QParams) -> Result<IdentityCheck> {
    verify_f_az_image(x, &Config::empty(), z, min_abs, params)
}

/// [`verify_f_z_image`] for `f_{A|Z,N,K}`.
pub fn verify_f_az_image(
    x: &Config,
    a: &Config,
    z: &EvalPoints,
    min_abs: &Rational,
    params: &QParams,
) -> Result<IdentityCheck> {
    let xe = ExtConfig::from(x.clone());
    let n = x.len();
    let k = a.len() + z.len();
    if x.is_single_sign() {
        let m: DiscreteMeasure<Rational> = closed_measure(&xe, k, &Rational::zero(), params)?;
        let lhs: CRational = integrate_f_az(&m, a, z, n, params)?;
        let rhs: CRational = f_az_closed_image(&xe, a, z, params)?;
        let d = lhs - rhs;
        return Ok(IdentityCheck { residual: d.magnitude(), tail_bound: 0.0, exact: true });
    }
    let m: DiscreteMeasure<f64> = closed_measure(&xe, k, min_abs, params)?;
    let lhs: Complex<f64> = integrate_f_az(&m, a, z, n, params)?;
    let rhs: Complex<f64> = f_az_closed_image(&xe, a, z, params)?;
    Ok(IdentityCheck { residual: (lhs - rhs).norm(), tail_bound: m.tail_bound, exact: false })
}
