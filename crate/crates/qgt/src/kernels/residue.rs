//! The orthogonality relation behind the inversion of the generating
//! functions, evaluated as a finite residue sum.

use crate::error::{Error, Result};
use crate::lattice::{value, LatticePoint, QParams, Sign};
use crate::scalar::Rational;
use num_traits::{One, Signed, Zero};

/// `(1-q^(N-1)) |y| / (2 pi i) ∮_{C(y)} (y z^-1 q; q)_(N-2) / (u z^-1; q)_N dz / z^2`
/// as the sum of residues on the far side of the contour from 0.
pub fn orthogonality_residue(u: &LatticePoint, y: &LatticePoint, n: usize, params: &QParams) -> Result<Rational> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("N = {n} must be at least 2")));
    }
    let q = &params.q;
    let yv = value(y, params);
    let uv = value(u, params);
    let poles: Vec<Rational> = (0..n).map(|l| &uv * q.pow(l as i32)).collect();
    let zeros: Vec<Rational> = (1..n - 1).map(|l| &yv * q.pow(l as i32)).collect();
    let ypos = y.sign == Sign::Plus;
    let mut sum = Rational::zero();
    for (l, p) in poles.iter().enumerate() {
        // enclosed poles: beyond y, away from 0
        let enclosed = if ypos { *p >= yv } else { *p <= yv };
        if !enclosed {
            continue;
        }
        let mut num = Rational::one();
        for z in &zeros {
            num *= p - z;
        }
        if num.is_zero() {
            continue;
        }
        let mut den = Rational::one();
        for (m, p2) in poles.iter().enumerate() {
            if m != l {
                den *= p - p2;
            }
        }
        sum += num / den;
    }
    let pre = (Rational::one() - q.pow((n - 1) as i32)) * yv.abs();
    let sgn = if ypos { Rational::one() } else { -Rational::one() };
    Ok(pre * sgn * sum)
}

/// Pairs `(u, y)` from the window `±zeta q^e`, `e` in `exps`, where the
/// residue sum differs from the Kronecker delta.
pub fn orthogonality_window(
    n: usize,
    exps: std::ops::Range<i32>,
    params: &QParams,
) -> Result<Vec<(LatticePoint, LatticePoint)>> {
    let pts: Vec<LatticePoint> = exps
        .clone()
        .map(LatticePoint::minus)
        .chain(exps.map(LatticePoint::plus))
        .collect();
    let mut bad = Vec::new();
    for u in &pts {
        for y in &pts {
            let r = orthogonality_residue(u, y, n, params)?;
            let expected = if u == y { Rational::one() } else { Rational::zero() };
            if r != expected {
                bad.push((*u, *y));
            }
        }
    }
    Ok(bad)
}
