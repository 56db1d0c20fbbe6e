//! q-arithmetic: Pochhammer symbols, q-integers, the q-derivative, the
//! q-integral against the canonical measure, divided differences.

use crate::error::{Error, Result};
use crate::lattice::{gap_points, ClosedPoint, LatticePoint, QParams, Sign};
use crate::scalar::{rat_to_f64, round_digits, Field, Rational};
use num_complex::Complex;
use num_traits::{One, Signed, Zero};

/// A value together with an absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Certified<T> {
    pub value: T,
    pub error: f64,
}

/// `(a; q)_n = prod_{i<n} (1 - a q^i)`.
pub fn q_pochhammer<F: Field>(a: &F, q: &Rational, n: usize) -> F {
    let mut acc = F::one();
    let mut qi = Rational::one();
    for _ in 0..n {
        acc = acc * (F::one() - a.clone() * F::from_rational(&qi));
        qi *= q;
    }
    acc
}

/// Truncation index and log-remainder bound for `(a; q)_inf`: the smallest
/// `T` with `sum_{i>=T} |a|q^i/(1-|a|q^i) <= target`.
fn truncation(abs_a: f64, q: f64, target: f64) -> (usize, f64) {
    let mut t = 0usize;
    let mut aq = abs_a;
    loop {
        if aq < 0.5 {
            let l = aq / ((1.0 - q) * (1.0 - aq));
            if l <= target || t > 100_000 {
                return (t, l);
            }
        }
        aq *= q;
        t += 1;
    }
}

/// `(a; q)_inf` in rounded rational arithmetic at `digits` decimal digits,
/// with total error at most `tol` plus the rounding unit.
pub fn q_pochhammer_inf(a: &Rational, q: &Rational, tol: f64, digits: u32) -> Certified<Rational> {
    let abs_a = rat_to_f64(&a.abs());
    let qf = rat_to_f64(q);
    let bound_a = abs_a.max(1.0);
    // |P_T| <= prod (1 + |a|q^i) <= exp(|a|/(1-q))
    let size = (bound_a / (1.0 - qf)).exp();
    let (t, l) = truncation(abs_a, qf, (tol / (4.0 * size)).min(0.25));
    let exact = q_pochhammer(a, q, t);
    let tail = rat_to_f64(&exact.abs()) * l / (1.0 - l);
    let value = round_digits(&exact, digits + 4);
    let ulp = 10f64.powi(-(digits as i32 + 4));
    Certified { value, error: tail * (1.0 + 1e-12) + ulp }
}

pub fn q_pochhammer_inf_f64(a: f64, q: f64, tol: f64) -> Certified<f64> {
    let (t, l) = truncation(a.abs(), q, (tol / 4.0).max(1e-17));
    let mut acc = 1.0;
    let mut aq = a;
    for _ in 0..t {
        acc *= 1.0 - aq;
        aq *= q;
    }
    let tail = acc.abs() * l / (1.0 - l);
    Certified { value: acc, error: tail + 4.0 * t as f64 * f64::EPSILON * acc.abs() }
}

pub fn q_pochhammer_inf_c64(a: Complex<f64>, q: f64, tol: f64) -> Certified<Complex<f64>> {
    let (t, l) = truncation(a.norm(), q, (tol / 4.0).max(1e-17));
    let mut acc = Complex::new(1.0, 0.0);
    let mut aq = a;
    for _ in 0..t {
        acc *= Complex::new(1.0, 0.0) - aq;
        aq *= q;
    }
    let tail = acc.norm() * l / (1.0 - l);
    Certified { value: acc, error: tail + 8.0 * t as f64 * f64::EPSILON * acc.norm() }
}

/// `[n]_q = (1 - q^n)/(1 - q)`.
pub fn q_number(n: usize, q: &Rational) -> Rational {
    (Rational::one() - q.pow(n as i32)) / (Rational::one() - q)
}

/// `[m]_q! = [1]_q ... [m]_q`.
pub fn q_factorial(m: usize, q: &Rational) -> Rational {
    (1..=m).fold(Rational::one(), |acc, k| acc * q_number(k, q))
}

/// `[m]_q!` via `(q;q)_m / (1-q)^m`.
pub fn q_factorial_pochhammer(m: usize, q: &Rational) -> Rational {
    q_pochhammer(q, q, m) / (Rational::one() - q).pow(m as i32)
}

/// A scalar function on the closed lattice, evaluated at exact point values.
pub trait GridFunction<F: Field>: Sync {
    fn eval(&self, t: &Rational) -> F;

    /// `D_q^order f(0)` when a closed form is known.
    fn derivative_at_zero(&self, _order: usize, _q: &Rational) -> Option<F> {
        None
    }
}

impl<F: Field, G: Fn(&Rational) -> F + Sync> GridFunction<F> for G {
    fn eval(&self, t: &Rational) -> F {
        self(t)
    }
}

/// A polynomial `sum c_k t^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<F> {
    pub coeffs: Vec<F>,
}

impl<F: Field> Polynomial<F> {
    pub fn new(coeffs: Vec<F>) -> Self {
        Polynomial { coeffs }
    }

    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![F::zero(); n + 1];
        coeffs[n] = F::one();
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }
}

impl<F: Field> GridFunction<F> for Polynomial<F> {
    fn eval(&self, t: &Rational) -> F {
        let tf = F::from_rational(t);
        self.coeffs.iter().rev().fold(F::zero(), |acc, c| acc * tf.clone() + c.clone())
    }

    fn derivative_at_zero(&self, order: usize, q: &Rational) -> Option<F> {
        let c = self.coeffs.get(order).cloned().unwrap_or_else(F::zero);
        Some(c * F::from_rational(&q_factorial(order, q)))
    }
}

/// `D_q^order f(t)` at a nonzero point, from the values `f(t q^k)`, `k <= order`.
pub fn q_derivative<F: Field>(f: &dyn GridFunction<F>, t: &Rational, order: usize, q: &Rational) -> F {
    let mut pts = Vec::with_capacity(order + 1);
    let mut tk = t.clone();
    for _ in 0..=order {
        pts.push(tk.clone());
        tk *= q;
    }
    let mut g: Vec<F> = pts.iter().map(|p| f.eval(p)).collect();
    let one_minus_q = Rational::one() - q;
    for level in 0..order {
        for k in 0..order - level {
            let denom = F::from_rational(&(&pts[k] * &one_minus_q));
            g[k] = (g[k].clone() - g[k + 1].clone()) / denom;
        }
    }
    g.swap_remove(0)
}

/// `D_q^order f(0)`, either from a closed form supplied by `f` or as the
/// limit along `t = zeta_+ q^n`; converged once three successive values
/// differ by less than `tol`.
pub fn q_derivative_at_zero<F: Field>(
    f: &dyn GridFunction<F>,
    order: usize,
    tol: f64,
    params: &QParams,
) -> Result<F> {
    if let Some(v) = f.derivative_at_zero(order, &params.q) {
        return Ok(v);
    }
    if order == 0 {
        return Ok(f.eval(&Rational::zero()));
    }
    let mut prev: Vec<F> = Vec::new();
    for n in 0..400 {
        let t = &params.zeta_plus * params.q.pow(n);
        let d = q_derivative(f, &t, order, &params.q);
        prev.push(d);
        let k = prev.len();
        if k >= 3
            && (prev[k - 1].clone() - prev[k - 2].clone()).magnitude() < tol
            && (prev[k - 2].clone() - prev[k - 3].clone()).magnitude() < tol
        {
            return Ok(prev.pop().unwrap());
        }
    }
    Err(Error::NoConvergence(format!("D_q^{order} f at 0 did not settle within {tol}")))
}

/// `int_a^b f d_qt`: the signed sum of `f(t)(1-q)|t|` over `I(a, b)`.
///
/// Intervals reaching 0 are cut at `min_abs`; the reported error is the
/// canonical mass below the cut times the largest `|f|` seen on probes
/// below it.
pub fn q_integral<F: Field>(
    f: &dyn GridFunction<F>,
    a: &ClosedPoint,
    b: &ClosedPoint,
    min_abs: &Rational,
    params: &QParams,
) -> Result<Certified<F>> {
    if a == b {
        return Ok(Certified { value: F::zero(), error: 0.0 });
    }
    if a > b {
        let r = q_integral(f, b, a, min_abs, params)?;
        return Ok(Certified { value: -r.value, error: r.error });
    }
    let pts = gap_points(a, b, min_abs, params)?;
    let one_minus_q = Rational::one() - &params.q;
    let mut acc = F::zero();
    for p in &pts {
        let t = crate::lattice::value(p, params);
        acc = acc + f.eval(&t) * F::from_rational(&(&one_minus_q * t.abs()));
    }
    let mut error = 0.0;
    for sign in [Sign::Minus, Sign::Plus] {
        let reaches_zero = match sign {
            Sign::Minus => a.signum() < 0 && b.signum() >= 0,
            Sign::Plus => b.signum() > 0 && a.signum() <= 0,
        };
        if !reaches_zero {
            continue;
        }
        let c = params.exponent_cutoff(sign, min_abs).ok_or(Error::InfiniteInterval)?;
        let first = LatticePoint::new(sign, c + 1);
        let mass = rat_to_f64(&crate::lattice::value(&first, params).abs());
        let probe = |k: i32| {
            let t = crate::lattice::value(&first.shift(k), params);
            let v = f.eval(&t).magnitude();
            (v, v * rat_to_f64(&t.abs()))
        };
        let (v0, w0) = probe(0);
        let (v1, _) = probe(10);
        let (v2, w2) = probe(40);
        if !(w2 <= w0 * 1.0001 + 1e-300) || !v2.is_finite() {
            return Err(Error::NoConvergence("integrand is unbounded near 0".into()));
        }
        error += mass * v0.max(v1).max(v2) * 2.0;
    }
    Ok(Certified { value: acc, error })
}

/// Recursive divided difference `f[x_1, ..., x_N]` on distinct knots.
pub fn divided_difference<F: Field>(f: &dyn GridFunction<F>, knots: &[Rational]) -> Result<F> {
    for i in 0..knots.len() {
        for j in i + 1..knots.len() {
            if knots[i] == knots[j] {
                return Err(Error::RepeatedKnots);
            }
        }
    }
    if knots.is_empty() {
        return Err(Error::InvalidConfig("no knots".into()));
    }
    let n = knots.len();
    let mut table: Vec<F> = knots.iter().map(|x| f.eval(x)).collect();
    for width in 1..n {
        for i in 0..n - width {
            let denom = F::from_rational(&(&knots[i + width] - &knots[i]));
            table[i] = (table[i + 1].clone() - table[i].clone()) / denom;
        }
    }
    Ok(table.swap_remove(0))
}

/// `V(A) = prod_{i<j} (a_i - a_j)`.
pub fn vandermonde(a: &[Rational]) -> Rational {
    crate::linalg::vandermonde(a)
}

/// `|A| = |a_1| ... |a_M|`.
pub fn abs_prod(a: &[Rational]) -> Rational {
    a.iter().fold(Rational::one(), |acc, x| acc * x.abs())
}
