//! The truncated and full q-Laplace transforms on the lattice and their
//! inverses by contour quadrature.

use crate::error::{Error, Result};
use crate::kernels::DiscreteMeasure;
use crate::lattice::{value_f64, LatticePoint, QParams};
use crate::qcalc::{q_pochhammer, q_pochhammer_inf_c64, Certified};
use crate::scalar::{ComplexField, RealField};
use num_complex::Complex;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

type C64 = Complex<f64>;

/// Truncation order of the transform: `L_N` or `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Order::Infinite),
            t => {
                let n: usize = t.parse().map_err(|_| Error::Parse(format!("bad order `{t}`")))?;
                if n < 2 {
                    return Err(Error::InvalidParams(format!("N = {n} must be at least 2")));
                }
                Ok(Order::Finite(n))
            }
        }
    }
}

/// A vertical line `Re z = abscissa` separating `y` from `yq`, run from
/// top to bottom.
///
/// The line is parametrized as `z = a + i R tan(θ)`, `θ ∈ (-π/2, π/2)`,
/// which turns an integrand of order `|z|^-2` into a smooth periodic one,
/// so the trapezoid rule needs no truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub anchor: LatticePoint,
    pub abscissa: f64,
    /// Scale `R` of the tangent map.
    pub half_height: f64,
    /// Initial trapezoid step in `θ`.
    pub step: f64,
}

impl Contour {
    /// Abscissa at `sign(y) sqrt(|y| |yq|)`, scale `|a|`.
    pub fn default_for(y: &LatticePoint, params: &QParams) -> Self {
        let yv = value_f64(y, params);
        let a = yv * params.q_f64().sqrt();
        Contour { anchor: *y, abscissa: a, half_height: a.abs(), step: PI / 32.0 }
    }

    pub fn with_abscissa(mut self, a: f64) -> Self {
        self.abscissa = a;
        self
    }

    pub fn with_half_height(mut self, r: f64) -> Self {
        self.half_height = r;
        self
    }

    fn validate(&self, params: &QParams) -> Result<()> {
        let y = value_f64(&self.anchor, params);
        let yq = y * params.q_f64();
        let (lo, hi) = if y > 0.0 { (yq, y) } else { (y, yq) };
        if !(self.abscissa > lo && self.abscissa < hi) {
            return Err(Error::InvalidParams(format!(
                "abscissa {} does not separate {y} and {yq}",
                self.abscissa
            )));
        }
        if !(self.half_height > 0.0 && self.step > 0.0) {
            return Err(Error::InvalidParams("contour scale and step must be positive".into()));
        }
        Ok(())
    }
}

/// `1/(y/z; q)_N` in an exact complex field.
fn kernel_exact<C: ComplexField>(y: &C, z: &C, n: usize, params: &QParams) -> C {
    C::one() / q_pochhammer(&(y.clone() / z.clone()), &params.q, n)
}

/// `(L_N M)(z) = sum_y M(y) / (y/z; q)_N`, exact for rational data.
pub fn qlaplace_exact<C: ComplexField>(mu: &DiscreteMeasure<C::Real>, z: &C, n: usize, params: &QParams) -> C {
    mu.atoms.iter().fold(C::zero(), |acc, (y, w)| {
        let yv = match y.nonzero.first() {
            Some(p) => C::from_real(&C::Real::of_point(p, params)),
            None => C::zero(),
        };
        acc + C::from_real(w) * kernel_exact(&yv, z, n, params)
    })
}

/// `sup |1/(a; q)_N|` over `|a| <= r`, or over the whole line when the
/// bound is unavailable; `z` is the evaluation point.
fn kernel_bound(r: f64, z: C64, order: Order, q: f64) -> f64 {
    let ratio = z.norm() / z.im.abs();
    let terms = match order {
        Order::Finite(n) => n,
        Order::Infinite => 2000,
    };
    let mut b = 1.0;
    let mut aq = r;
    for _ in 0..terms {
        b *= if aq < 0.5 { 1.0 / (1.0 - aq) } else { ratio };
        aq *= q;
        if aq < 1e-18 {
            break;
        }
    }
    b
}

/// `L_N M(z)` or `L M(z)` in floating point.
///
/// The error covers the tail mass of `M`, placed anywhere nearer to 0
/// than its smallest atom, and the truncation of `(y/z; q)_inf`.
pub fn qlaplace(mu: &DiscreteMeasure<f64>, z: C64, order: Order, tol: f64, params: &QParams) -> Result<Certified<C64>> {
    if z.im == 0.0 {
        return Err(Error::InvalidParams("z must be off the real axis".into()));
    }
    let q = params.q_f64();
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut smallest = f64::INFINITY;
    for (y, w) in &mu.atoms {
        let yv = y.nonzero.first().map_or(0.0, |p| value_f64(p, params));
        if yv != 0.0 {
            smallest = smallest.min(yv.abs());
        }
        let a = C64::new(yv, 0.0) / z;
        let (k, e) = match order {
            Order::Finite(n) => {
                let mut p = C64::new(1.0, 0.0);
                let mut aq = a;
                for _ in 0..n {
                    p *= C64::new(1.0, 0.0) - aq;
                    aq *= q;
                }
                (C64::new(1.0, 0.0) / p, 0.0)
            }
            Order::Infinite => {
                let p = q_pochhammer_inf_c64(a, q, tol / 10.0);
                let k = C64::new(1.0, 0.0) / p.value;
                (k, p.error * k.norm() / (p.value.norm() - p.error).max(f64::MIN_POSITIVE))
            }
        };
        value += k * *w;
        error += e * w.abs();
    }
    if mu.tail_bound > 0.0 {
        let r = if smallest.is_finite() { smallest / z.norm() } else { 0.0 };
        error += mu.tail_bound * kernel_bound(r, z, order, q);
    }
    Ok(Certified { value, error })
}

/// `(yq/z; q)_(N-2)` and the prefactor `(1-q^(N-1))|y|`, or their limits.
fn inverse_kernel(y: f64, z: C64, order: Order, q: f64, tol: f64) -> C64 {
    let a = C64::new(y * q, 0.0) / z;
    match order {
        Order::Finite(n) => {
            let mut p = C64::new(1.0, 0.0);
            let mut aq = a;
            for _ in 0..n - 2 {
                p *= C64::new(1.0, 0.0) - aq;
                aq *= q;
            }
            p
        }
        Order::Infinite => q_pochhammer_inf_c64(a, q, tol).value,
    }
}

/// `M(y)` from `φ = L_N M` (or `L M`) by the trapezoid rule on the
/// contour, halving the step until two successive sums agree within
/// `tol / 10`. The reported error is the last difference.
pub fn inv_qlaplace(
    phi: &(dyn Fn(C64) -> C64 + Sync),
    y: &LatticePoint,
    order: Order,
    contour: Option<&Contour>,
    tol: f64,
    params: &QParams,
) -> Result<Certified<C64>> {
    if let Order::Finite(n) = order {
        if n < 2 {
            return Err(Error::InvalidParams(format!("N = {n} must be at least 2")));
        }
    }
    let contour = contour.cloned().unwrap_or_else(|| Contour::default_for(y, params));
    contour.validate(params)?;
    let q = params.q_f64();
    let yv = value_f64(y, params);
    let pre = match order {
        Order::Finite(n) => (1.0 - q.powi(n as i32 - 1)) * yv.abs(),
        Order::Infinite => yv.abs(),
    };
    let (a, r) = (contour.abscissa, contour.half_height);
    let ktol = tol * 1e-3;
    let integrand = |theta: f64| -> C64 {
        let (s, c) = theta.sin_cos();
        let z = C64::new(a, r * s / c);
        // dz = i R sec^2(θ) dθ
        let dz = C64::new(0.0, r / (c * c));
        inverse_kernel(yv, z, order, q, ktol) * phi(z) * dz / (z * z)
    };
    // the integrand must stay bounded as z -> ∞ along the line
    let far = |t: f64| {
        let z = C64::new(a, t * r);
        (inverse_kernel(yv, z, order, q, ktol) * phi(z)).norm()
    };
    let (f1, f2) = (far(1e6), far(1e9));
    if !f2.is_finite() || f2 > 2.0 * f1 + 1.0 {
        return Err(Error::NoConvergence("transform does not decay along the contour".into()));
    }
    let sum = |n: usize| -> C64 {
        let h = PI / n as f64;
        let vals: Vec<C64> =
            (0..n).into_par_iter().map(|k| integrand(-PI / 2.0 + (k as f64 + 0.5) * h)).collect();
        vals.iter().fold(C64::new(0.0, 0.0), |acc, v| acc + v) * h
    };
    // M(y) = pre / (2πi) ∫ top-to-bottom = -pre/(2πi) ∫ bottom-to-top
    let scale = C64::new(0.0, pre / (2.0 * PI));
    let mut n = ((PI / contour.step).ceil() as usize).max(4);
    let mut prev = sum(n) * scale;
    loop {
        n *= 2;
        let cur = sum(n) * scale;
        let diff = (cur - prev).norm();
        if diff < tol / 10.0 {
            return Ok(Certified { value: cur, error: diff });
        }
        if n > 1 << 20 {
            return Err(Error::NoConvergence(format!("quadrature did not settle: last change {diff}")));
        }
        prev = cur;
    }
}

/// `z -> (L_N M)(z)` as a closure, for feeding [`inv_qlaplace`].
pub fn transform_fn<'a>(mu: &'a DiscreteMeasure<f64>, order: Order, tol: f64, params: &'a QParams) -> impl Fn(C64) -> C64 + Sync + 'a {
    move |z| qlaplace(mu, z, order, tol, params).map(|c| c.value).unwrap_or(C64::new(f64::NAN, f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::orthogonality_residue;
    use crate::lattice::{Config, ExtConfig};
    use crate::scalar::{crat, int, rat, rat_to_f64, CRational, Rational};
    use crate::splines::qbspline;
    use proptest::prelude::*;

    fn qp() -> QParams {
        QParams::canonical()
    }

    fn delta(p: LatticePoint) -> DiscreteMeasure<f64> {
        let mut m = DiscreteMeasure::new();
        m.atoms.insert(ExtConfig::from(Config::new(vec![p]).unwrap()), 1.0);
        m
    }

    #[test]
    fn forward_examples() {
        let p = qp();
        let z = crat(int(0), int(2));
        let mut m: DiscreteMeasure<Rational> = DiscreteMeasure::new();
        m.atoms.insert(ExtConfig::from(Config::new(vec![LatticePoint::plus(0)]).unwrap()), int(1));
        let v: CRational = qlaplace_exact(&m, &z, 2, &p);
        let one = crat(int(1), int(0));
        let a = one.clone() / z.clone();
        let want = one.clone() / ((one.clone() - a.clone()) * (one.clone() - a * crat(rat(1, 2), int(0))));
        assert_eq!(v, want);
        let empty: DiscreteMeasure<Rational> = DiscreteMeasure::new();
        assert_eq!(qlaplace_exact::<CRational>(&empty, &z, 3, &p), crat(int(0), int(0)));
    }

    #[test]
    fn spline_transform_is_product() {
        let p = qp();
        let x: ExtConfig = "+:2,+:0".parse().unwrap();
        let b = qbspline::<Rational>(&x, &rat(1, 8), &p).unwrap();
        let z = crat(int(0), int(2));
        let v: CRational = qlaplace_exact(&b, &z, 2, &p);
        let one = crat(int(1), int(0));
        let mut want = one.clone();
        for xv in x.values(&p) {
            want = want / (one.clone() - crat(xv, int(0)) / z.clone());
        }
        assert_eq!(v, want);
    }

    #[test]
    fn inverse_is_delta() {
        let p = qp();
        for n in [Order::Finite(2), Order::Finite(4), Order::Infinite] {
            for (u, y) in [(0, 0), (0, 1), (1, 0), (3, -2), (-2, -2)] {
                let mu = delta(LatticePoint::plus(u));
                let phi = transform_fn(&mu, n, 1e-12, &p);
                let r = inv_qlaplace(&phi, &LatticePoint::plus(y), n, None, 1e-8, &p).unwrap();
                let want = if u == y { 1.0 } else { 0.0 };
                assert!((r.value - C64::new(want, 0.0)).norm() < 1e-6, "{n} u={u} y={y}: {}", r.value);
            }
        }
    }

    #[test]
    fn quadrature_matches_residues() {
        let p = qp();
        let pts = [LatticePoint::plus(0), LatticePoint::plus(2), LatticePoint::minus(1), LatticePoint::minus(-1)];
        for n in 2..=5 {
            for u in &pts {
                let mu = delta(*u);
                let phi = transform_fn(&mu, Order::Finite(n), 1e-12, &p);
                for y in &pts {
                    let exact = rat_to_f64(&orthogonality_residue(u, y, n, &p).unwrap());
                    let r = inv_qlaplace(&phi, y, Order::Finite(n), None, 1e-8, &p).unwrap();
                    assert!((r.value.re - exact).abs() < 1e-6 && r.value.im.abs() < 1e-6, "N={n} {u} {y}");
                }
            }
        }
    }

    #[test]
    fn contour_validation() {
        let p = qp();
        let y = LatticePoint::plus(0);
        let c = Contour::default_for(&y, &p).with_abscissa(2.0);
        let phi = |_: C64| C64::new(0.0, 0.0);
        assert!(inv_qlaplace(&phi, &y, Order::Finite(3), Some(&c), 1e-6, &p).is_err());
        let grow = |z: C64| z * z;
        assert!(inv_qlaplace(&grow, &y, Order::Finite(3), None, 1e-6, &p).is_err());
        assert!("1".parse::<Order>().is_err());
        assert_eq!("inf".parse::<Order>().unwrap(), Order::Infinite);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn round_trip(
            atoms in proptest::collection::btree_map((any::<bool>(), -4i32..12), -3.0f64..3.0, 1..=4),
            finite in any::<bool>(),
            n in 2usize..6,
        ) {
            let p = qp();
            let order = if finite { Order::Finite(n) } else { Order::Infinite };
            let mut mu = DiscreteMeasure::new();
            for ((s, e), w) in &atoms {
                let pt = if *s { LatticePoint::plus(*e) } else { LatticePoint::minus(*e) };
                mu.atoms.insert(ExtConfig::from(Config::new(vec![pt]).unwrap()), *w);
            }
            let phi = transform_fn(&mu, order, 1e-12, &p);
            for ((s, e), w) in &atoms {
                let pt = if *s { LatticePoint::plus(*e) } else { LatticePoint::minus(*e) };
                let base = inv_qlaplace(&phi, &pt, order, None, 1e-7, &p).unwrap();
                prop_assert!((base.value.re - w).abs() < 1e-6 && base.value.im.abs() < 1e-6);
                // contour independence
                let c = Contour::default_for(&pt, &p);
                let yv = value_f64(&pt, &p);
                let moved = c.clone().with_abscissa(yv * (1.0 + p.q_f64()) / 2.0);
                let taller = c.clone().with_half_height(2.0 * c.half_height);
                for alt in [moved, taller] {
                    let r = inv_qlaplace(&phi, &pt, order, Some(&alt), 1e-7, &p).unwrap();
                    prop_assert!((r.value - base.value).norm() < 2e-6);
                }
            }
        }
    }
}
