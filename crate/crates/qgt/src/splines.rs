//! q-B-splines, their moments, the q-Hermite–Genocchi formula and the
//! continuous extension of Vandermonde ratios to configurations with
//! repeated zeros.

use crate::error::{Error, Result};
use crate::kernels::{support_candidates, ClosedForm, DiscreteMeasure};
use crate::lattice::{ClosedPoint, Config, ExtConfig, LatticePoint, QParams};
use crate::linalg::det;
use crate::qcalc::{q_derivative, q_derivative_at_zero, q_factorial, q_pochhammer, Certified, GridFunction};
use crate::scalar::{Field, RealField, Rational};
use crate::symfunc::h_m;
use num_traits::{One, Signed, Zero};

/// `B^q_N(X)` on the closed lattice, atoms keyed by level-1 configurations.
///
/// Atoms away from 0 come from the `K = 1` closed form. The spline only
/// charges 0 when `X = 0^N`; otherwise the mass below `min_abs` is
/// reported as `tail_bound`.
pub fn qbspline<F: RealField>(x: &ExtConfig, min_abs: &Rational, params: &QParams) -> Result<DiscreteMeasure<F>> {
    let n = x.level();
    if n == 0 {
        return Err(Error::InvalidConfig("a spline needs at least one knot".into()));
    }
    let mut out = DiscreteMeasure::new();
    if n == 1 || x.nonzero.is_empty() {
        let atom = match x.nonzero.first() {
            Some(p) => ExtConfig::from(Config::from_sorted_unchecked(vec![*p])),
            None => ExtConfig::zeros(1),
        };
        out.atoms.insert(atom, F::one());
        return Ok(out);
    }
    let form = ClosedForm::<F>::new(x, 1, params)?;
    // a single-sign hull without zeros is finite
    let cut = match (x.has_zeros() || !x.is_single_sign(), x.values(params).iter().map(|v| v.abs()).min()) {
        (false, Some(m)) if m < *min_abs => m,
        _ => min_abs.clone(),
    };
    for y in support_candidates(x, 1, &cut, params)? {
        let w = form.eval(&y, params);
        if !w.is_zero() {
            out.atoms.insert(ExtConfig::from(y), w);
        }
    }
    let deficit = F::one() - out.total();
    if deficit.as_f64() < -1e-12 {
        return Err(Error::NoConvergence(format!("spline mass exceeds 1 by {}", -deficit.as_f64())));
    }
    out.tail_bound = deficit.abs_val();
    Ok(out)
}

/// `<t^m, B^q_N(X)> = [m]_q! [N-1]_q! / [m+N-1]_q! h_m(X)`.
pub fn qbspline_moment(x: &ExtConfig, m: usize, params: &QParams) -> Rational {
    let n = x.level();
    let q = &params.q;
    let c = q_factorial(m, q) * q_factorial(n.saturating_sub(1), q) / q_factorial(m + n.saturating_sub(1), q);
    c * h_m(m, x, params)
}

/// `<t^m, M>` for a measure on level-1 configurations.
pub fn measure_moment<F: RealField>(mu: &DiscreteMeasure<F>, m: usize, params: &QParams) -> F {
    mu.atoms.iter().fold(F::zero(), |acc, (y, w)| {
        let t = match y.nonzero.first() {
            Some(p) => F::of_point(p, params),
            None => F::zero(),
        };
        let mut tm = F::one();
        for _ in 0..m {
            tm = tm * t.clone();
        }
        acc + w.clone() * tm
    })
}

/// `f[x_1, ..., x_N] = <D_q^(N-1) f, B^q_N(X)> / [N-1]_q!`.
///
/// The derivative is taken only at the atoms of the spline. The error
/// bound is the spline tail times twice the largest `|D_q^(N-1) f|` met on
/// the atoms.
pub fn hermite_genocchi<F: RealField>(
    f: &dyn GridFunction<F>,
    x: &ExtConfig,
    min_abs: &Rational,
    tol: f64,
    params: &QParams,
) -> Result<Certified<F>> {
    let n = x.level();
    if n == 0 {
        return Err(Error::InvalidConfig("empty knot set".into()));
    }
    let order = n - 1;
    let fact = F::from_rational(&q_factorial(order, &params.q));
    let spline = qbspline::<F>(x, min_abs, params)?;
    let mut acc = F::zero();
    let mut sup = 0.0f64;
    for (y, w) in &spline.atoms {
        let d = match y.nonzero.first() {
            Some(p) => q_derivative(f, &crate::lattice::value(p, params), order, &params.q),
            None => q_derivative_at_zero(f, order, tol, params)?,
        };
        sup = sup.max(d.as_f64().abs());
        acc = acc + w.clone() * d;
    }
    let error = 2.0 * spline.tail_bound.as_f64() * sup / fact.as_f64();
    Ok(Certified { value: acc / fact, error })
}

/// Normalizing factorials in the determinant of spline pairings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factorials {
    /// `[l-1]_q!`, consistent with the q-Hermite–Genocchi formula.
    Q,
    /// Ordinary `(l-1)!`.
    Ordinary,
}

/// `F(X) = det[f_j(x_i)] / V(X)` and its continuous extension.
///
/// With at most one zero the ratio is evaluated directly. With a repeated
/// zero it is `(-1)^(n(n-1)/2) det[f_j[x_1..x_l]]`, the divided
/// differences taken by [`hermite_genocchi`] over prefixes that list the
/// zeros first.
pub fn vandermonde_ratio<F: RealField>(
    fs: &[&dyn GridFunction<F>],
    x: &ExtConfig,
    min_abs: &Rational,
    tol: f64,
    params: &QParams,
) -> Result<Certified<F>> {
    let n = x.level();
    if fs.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: fs.len() });
    }
    if n == 0 {
        return Ok(Certified { value: F::one(), error: 0.0 });
    }
    if x.zero_mult <= 1 {
        let vals = x.values(params);
        let m: Vec<Vec<F>> = vals.iter().map(|v| fs.iter().map(|f| f.eval(v)).collect()).collect();
        let v = F::from_rational(&crate::linalg::vandermonde(&vals));
        return Ok(Certified { value: det(m) / v, error: 0.0 });
    }
    vandermonde_ratio_with(fs, x, Factorials::Q, min_abs, tol, params)
}

/// `(-1)^(n(n-1)/2) / prod_l c_(l-1) * det[<D_q^(l-1) f_j, B^q_l(x_1..x_l)>]`
/// with `c` the chosen factorials.
pub fn vandermonde_ratio_with<F: RealField>(
    fs: &[&dyn GridFunction<F>],
    x: &ExtConfig,
    factorials: Factorials,
    min_abs: &Rational,
    tol: f64,
    params: &QParams,
) -> Result<Certified<F>> {
    let n = x.level();
    if fs.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: fs.len() });
    }
    let mut order: Vec<ClosedPoint> = vec![ClosedPoint::Zero; x.zero_mult];
    let mut rest: Vec<LatticePoint> = x.nonzero.points().to_vec();
    rest.sort_by_key(|p| std::cmp::Reverse(p.exponent));
    order.extend(rest.into_iter().map(ClosedPoint::Point));

    let mut rows = Vec::with_capacity(n);
    let mut err_rows = Vec::with_capacity(n);
    for l in 1..=n {
        let prefix = prefix_config(&order[..l]);
        let qf = F::from_rational(&q_factorial(l - 1, &params.q));
        let c = match factorials {
            Factorials::Q => qf.clone(),
            Factorials::Ordinary => F::from_i64((1..l as i64).product()),
        };
        let mut row = Vec::with_capacity(n);
        let mut err = 0.0f64;
        for f in fs {
            let hg = hermite_genocchi(*f, &prefix, min_abs, tol, params)?;
            // <D^(l-1) f, B_l> / c_(l-1)
            row.push(hg.value * qf.clone() / c.clone());
            err = err.max(hg.error * qf.as_f64() / c.as_f64());
        }
        rows.push(row);
        err_rows.push(err);
    }
    let sign = if (n * (n - 1) / 2) % 2 == 0 { F::one() } else { -F::one() };
    let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v.as_f64().abs()).sum::<f64>()).collect();
    let value = sign * det(rows);
    // first-order perturbation of the determinant, Hadamard-bounded
    let mut error = 0.0;
    for (i, e) in err_rows.iter().enumerate() {
        let others: f64 = norms.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.max(1e-300)).product();
        error += e * n as f64 * others;
    }
    Ok(Certified { value, error })
}

fn prefix_config(pts: &[ClosedPoint]) -> ExtConfig {
    let zeros = pts.iter().filter(|p| matches!(p, ClosedPoint::Zero)).count();
    let mut nz: Vec<LatticePoint> = pts
        .iter()
        .filter_map(|p| match p {
            ClosedPoint::Point(lp) => Some(*lp),
            ClosedPoint::Zero => None,
        })
        .collect();
    nz.sort();
    ExtConfig::new(Config::from_sorted_unchecked(nz), zeros)
}

/// `t -> 1 / (t/z; q)_M` for real `z != 0`, with its `D_q` jet at 0 in
/// closed form: `D_q^l f(0) = [l]_q! (q^M; q)_l / ((q; q)_l z^l)`.
#[derive(Clone, Debug)]
pub struct PochhammerRecip {
    pub z: Rational,
    pub m: usize,
    q: Rational,
}

impl PochhammerRecip {
    pub fn new(z: Rational, m: usize, params: &QParams) -> Result<Self> {
        if z.is_zero() {
            return Err(Error::InvalidParams("z must be nonzero".into()));
        }
        Ok(PochhammerRecip { z, m, q: params.q.clone() })
    }
}

impl<F: Field> GridFunction<F> for PochhammerRecip {
    fn eval(&self, t: &Rational) -> F {
        F::from_rational(&(Rational::one() / q_pochhammer(&(t / &self.z), &self.q, self.m)))
    }

    fn derivative_at_zero(&self, order: usize, q: &Rational) -> Option<F> {
        if *q != self.q {
            return None;
        }
        let qm = q.pow(self.m as i32);
        let c = q_pochhammer(&qm, q, order) / q_pochhammer(q, q, order) / self.z.pow(order as i32);
        Some(F::from_rational(&(q_factorial(order, q) * c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcalc::{divided_difference, Polynomial};
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn qp() -> QParams {
        QParams::canonical()
    }

    fn ext(s: &str) -> ExtConfig {
        s.parse().unwrap()
    }

    fn pt(e: i32) -> ExtConfig {
        ExtConfig::from(Config::new(vec![LatticePoint::plus(e)]).unwrap())
    }

    #[test]
    fn two_knot_spline() {
        let p = qp();
        let b = qbspline::<Rational>(&ext("+:2,+:0"), &rat(1, 1 << 20), &p).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.mass(&pt(1)), rat(1, 3));
        assert_eq!(b.mass(&pt(0)), rat(2, 3));
        assert!(b.tail_bound.is_zero());
    }

    #[test]
    fn degenerate_splines() {
        let p = qp();
        let b = qbspline::<Rational>(&ExtConfig::zeros(3), &rat(1, 8), &p).unwrap();
        assert_eq!(b.mass(&ExtConfig::zeros(1)), int(1));
        let b = qbspline::<Rational>(&ext("-:3"), &rat(1, 8), &p).unwrap();
        assert_eq!(b.total(), int(1));
        assert_eq!(b.len(), 1);
        assert!(qbspline::<Rational>(&ExtConfig::zeros(0), &rat(1, 8), &p).is_err());
    }

    #[test]
    fn moment_examples() {
        let p = qp();
        let x = ext("+:2,+:0");
        assert_eq!(qbspline_moment(&x, 0, &p), int(1));
        assert_eq!(qbspline_moment(&x, 1, &p), rat(5, 6));
        let b = qbspline::<Rational>(&x, &rat(1, 8), &p).unwrap();
        assert_eq!(measure_moment(&b, 1, &p), rat(5, 6));
        assert_eq!(qbspline_moment(&ExtConfig::zeros(4), 3, &p), int(0));
    }

    #[test]
    fn moments_match_measure() {
        let p = qp();
        for s in ["+:0,+:1,+:3", "-:0,-:2", "-:1,+:0,+:2", "-:0,0,+:1", "+:0,0^2"] {
            let x = ext(s);
            let b = qbspline::<Rational>(&x, &rat(1, 1 << 24), &p).unwrap();
            for m in 0..=8 {
                let d = crate::scalar::rat_to_f64(&(measure_moment(&b, m, &p) - qbspline_moment(&x, m, &p)));
                let tail = crate::scalar::rat_to_f64(&b.tail_bound);
                if x.is_single_sign() && !x.has_zeros() {
                    assert_eq!(d, 0.0, "{s} m = {m}");
                } else {
                    assert!(d.abs() <= tail + 1e-12, "{s} m = {m}: {d} > {tail}");
                }
            }
        }
    }

    #[test]
    fn support_in_hull() {
        let p = qp();
        for s in ["-:1,+:0,+:2", "+:1,+:4", "-:0,0"] {
            let x = ext(s);
            let b = qbspline::<f64>(&x, &rat(1, 1 << 16), &p).unwrap();
            assert!(b.support_within(&x, &x, &p), "{s}");
        }
    }

    #[test]
    fn hermite_genocchi_examples() {
        let p = qp();
        let cube = Polynomial::<Rational>::monomial(3);
        let x = ext("+:2,+:1,+:0");
        let hg = hermite_genocchi(&cube, &x, &rat(1, 8), 1e-12, &p).unwrap();
        assert_eq!(hg.value, rat(7, 4));
        let knots = x.values(&p);
        assert_eq!(divided_difference(&cube, &knots).unwrap(), rat(7, 4));
        // top monomial at 0^N
        for n in 1..6 {
            let f = Polynomial::<Rational>::monomial(n - 1);
            let hg = hermite_genocchi(&f, &ExtConfig::zeros(n), &rat(1, 8), 1e-12, &p).unwrap();
            assert_eq!(hg.value, int(1));
        }
        // low monomials are annihilated
        let f = Polynomial::<Rational>::monomial(1);
        let hg = hermite_genocchi(&f, &ext("+:0,+:2,+:5"), &rat(1, 8), 1e-12, &p).unwrap();
        assert_eq!(hg.value, int(0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn hermite_genocchi_is_divided_difference(
            exps in proptest::collection::btree_set(-3i32..6, 1..=6),
            neg in any::<bool>(),
            coeffs in proptest::collection::vec(-5i64..6, 1..=9),
        ) {
            let p = qp();
            let pts: Vec<LatticePoint> = exps.iter().map(|&e| if neg { LatticePoint::minus(e) } else { LatticePoint::plus(e) }).collect();
            let x = ExtConfig::from(Config::from_unsorted(pts).unwrap());
            let f = Polynomial::new(coeffs.iter().map(|&c| int(c)).collect());
            let hg = hermite_genocchi(&f, &x, &rat(1, 8), 1e-12, &p).unwrap();
            prop_assert_eq!(hg.value, divided_difference(&f, &x.values(&p)).unwrap());
        }

        #[test]
        fn newton_determinant_identity(
            exps in proptest::collection::btree_set(-3i32..5, 1..=4),
            seed in proptest::collection::vec(-4i64..5, 16),
        ) {
            // det[f_j(x_i)] = (-1)^(n(n-1)/2) V(X) det[f_j[x_1..x_l]]
            let p = qp();
            let pts: Vec<LatticePoint> = exps.iter().map(|&e| if e % 2 == 0 { LatticePoint::plus(e) } else { LatticePoint::minus(e) }).collect();
            let x = Config::from_unsorted(pts).unwrap();
            let vals = x.values(&p);
            let n = vals.len();
            let fs: Vec<Polynomial<Rational>> = (0..n).map(|j| Polynomial::new(seed[4 * j..4 * j + 4].iter().map(|&c| int(c)).collect())).collect();
            let lhs = det(vals.iter().map(|v| fs.iter().map(|f| f.eval(v)).collect()).collect());
            let dd: Vec<Vec<Rational>> = (1..=n).map(|l| fs.iter().map(|f| divided_difference(f, &vals[..l]).unwrap()).collect()).collect();
            let sign = if (n * (n - 1) / 2) % 2 == 0 { int(1) } else { int(-1) };
            prop_assert_eq!(lhs, sign * crate::linalg::vandermonde(&vals) * det(dd));
        }
    }

    #[test]
    fn vandermonde_ratio_examples() {
        let p = qp();
        let one = Polynomial::<Rational>::monomial(0);
        let t = Polynomial::<Rational>::monomial(1);
        let fs: [&dyn GridFunction<Rational>; 2] = [&one, &t];
        let r = vandermonde_ratio(&fs, &ext("+:0,+:3"), &rat(1, 8), 1e-12, &p).unwrap();
        assert_eq!(r.value, int(-1));
        let r = vandermonde_ratio(&fs, &ExtConfig::zeros(2), &rat(1, 8), 1e-12, &p).unwrap();
        assert_eq!(r.value, int(-1));
        let r = vandermonde_ratio(&fs[..1], &ext("+:2"), &rat(1, 8), 1e-12, &p).unwrap();
        assert_eq!(r.value, int(1));
    }

    #[test]
    fn continuous_extension_at_zeros() {
        // F at 0^2 ∪ {x} against distinct approximants X_j -> 0^2 ∪ {x}
        let p = qp();
        let fs_owned: Vec<PochhammerRecip> =
            [(rat(3, 1), 1), (rat(-5, 2), 2), (rat(7, 3), 3)].into_iter().map(|(z, m)| PochhammerRecip::new(z, m, &p).unwrap()).collect();
        let fs: Vec<&dyn GridFunction<Rational>> = fs_owned.iter().map(|f| f as &dyn GridFunction<Rational>).collect();
        let target = vandermonde_ratio(&fs, &ext("+:0,0^2"), &rat(1, 1 << 30), 1e-14, &p).unwrap();
        let j = 30;
        let approx = ext(&format!("+:0,+:{j},-:{j}"));
        let near = vandermonde_ratio(&fs, &approx, &rat(1, 8), 1e-14, &p).unwrap();
        let d = crate::scalar::rat_to_f64(&(&target.value - &near.value));
        assert!(d.abs() < 1e-6 + target.error, "{d}");
    }

    #[test]
    fn factorial_convention_adjudication() {
        // only the q-factorials reproduce the direct ratio in the limit
        let p = qp();
        let fs_owned: Vec<PochhammerRecip> =
            [(rat(3, 1), 1), (rat(-5, 2), 2), (rat(7, 3), 4)].into_iter().map(|(z, m)| PochhammerRecip::new(z, m, &p).unwrap()).collect();
        let fs: Vec<&dyn GridFunction<Rational>> = fs_owned.iter().map(|f| f as &dyn GridFunction<Rational>).collect();
        let x = ExtConfig::zeros(3);
        let near = vandermonde_ratio(&fs, &ext("+:40,-:40,+:41"), &rat(1, 8), 1e-14, &p).unwrap().value;
        let qv = vandermonde_ratio_with(&fs, &x, Factorials::Q, &rat(1, 8), 1e-14, &p).unwrap().value;
        let ov = vandermonde_ratio_with(&fs, &x, Factorials::Ordinary, &rat(1, 8), 1e-14, &p).unwrap().value;
        let dq = crate::scalar::rat_to_f64(&(&qv - &near)).abs();
        let dord = crate::scalar::rat_to_f64(&(&ov - &near)).abs();
        assert!(dq < 1e-9, "{dq}");
        assert!(dord > 1e-3, "{dord}");
        // the two conventions differ by 2!/[2]_q!
        assert_eq!(qv / ov, int(2) / q_factorial(2, &p.q));
    }

    #[test]
    fn merging_limit() {
        // f = 1/(1 - t/2): f[x_1..x_N] -> D^(N-1) f(0)/[N-1]! = 2^-(N-1)
        let p = qp();
        let f = PochhammerRecip::new(int(2), 1, &p).unwrap();
        for n in 1..=5usize {
            let lim = hermite_genocchi::<Rational>(&f, &ExtConfig::zeros(n), &rat(1, 8), 1e-14, &p).unwrap().value;
            assert_eq!(lim, Rational::one() / int(2).pow(n as i32 - 1));
            let mut prev = f64::INFINITY;
            for j in [4, 8, 16, 24] {
                let knots: Vec<Rational> = (0..n as i32).map(|i| p.q.pow(j + i)).collect();
                let dd: Rational = divided_difference(&f, &knots).unwrap();
                let rel = crate::scalar::rat_to_f64(&((&dd - &lim) / &lim)).abs();
                assert!(rel <= prev);
                prev = rel;
            }
            assert!(prev < 1e-6, "N = {n}: {prev}");
        }
    }

    #[test]
    fn weak_continuity_of_splines() {
        let p = qp();
        let target = ext("-:1,+:0,0^2");
        for m in 0..=8 {
            let want = crate::scalar::rat_to_f64(&qbspline_moment(&target, m, &p));
            let j = 26;
            let xj = ext(&format!("-:1,+:0,+:{j},+:{}", j + 1));
            let b = qbspline::<f64>(&xj, &rat(1, 1 << 30), &p).unwrap();
            let got = measure_moment(&b, m, &p);
            assert!((got - want).abs() < 1e-6, "m = {m}: {got} vs {want}");
        }
    }
}
