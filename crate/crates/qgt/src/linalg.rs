//! Dense determinants over any [`Field`].

use crate::scalar::Field;

/// Determinant of a square matrix given row-major, by Gaussian elimination
/// with magnitude pivoting.
pub fn det<F: Field>(mut a: Vec<Vec<F>>) -> F {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n));
    let mut d = F::one();
    for col in 0..n {
        let mut piv = None;
        let mut best = 0.0;
        for (r, row) in a.iter().enumerate().skip(col) {
            if row[col].is_zero() {
                continue;
            }
            let m = row[col].magnitude();
            if piv.is_none() || m > best {
                piv = Some(r);
                best = m;
            }
        }
        let Some(p) = piv else { return F::zero() };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        let pivot = a[col][col].clone();
        d = d * pivot.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pivot.clone();
            for c in col + 1..n {
                let t = factor.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - t;
            }
        }
    }
    d
}

/// `V(a) = prod_{i<j} (a_i - a_j)`.
pub fn vandermonde<F: Field>(a: &[F]) -> F {
    let mut v = F::one();
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            v = v * (a[i].clone() - a[j].clone());
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, Rational};

    #[test]
    fn small_determinants() {
        let m = vec![vec![int(1), int(2)], vec![int(3), int(4)]];
        assert_eq!(det(m), int(-2));
        let m = vec![vec![int(0), int(1), int(0)], vec![int(1), int(0), int(0)], vec![int(0), int(0), int(5)]];
        assert_eq!(det(m), int(-5));
        let empty: Vec<Vec<Rational>> = vec![];
        assert_eq!(det(empty), int(1));
        let sing = vec![vec![rat(1, 2), int(1)], vec![int(1), int(2)]];
        assert_eq!(det(sing), int(0));
    }

    #[test]
    fn vandermonde_matches_det() {
        let a = [rat(1, 4), int(1), rat(-1, 2)];
        let m: Vec<Vec<Rational>> = a
            .iter()
            .map(|x| (0..3).rev().map(|k| x.pow(k)).collect())
            .collect();
        assert_eq!(det(m), vandermonde(&a));
    }

    #[test]
    fn float_matches_exact() {
        let m = vec![vec![2.0, 1.0, 0.5], vec![1.0, 3.0, 1.0], vec![0.5, 1.0, 4.0]];
        assert!((det(m) - 18.25).abs() < 1e-12);
    }
}
