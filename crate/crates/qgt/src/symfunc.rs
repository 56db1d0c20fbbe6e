//! Complete homogeneous and Schur symmetric functions.

use crate::error::{Error, Result};
use crate::lattice::{ExtConfig, QParams};
use crate::linalg::det;
use crate::qcalc::q_pochhammer;
use crate::scalar::{rat_to_f64, round_digits, Field, Rational};
use num_traits::{One, Zero};
use std::fmt;
use std::str::FromStr;

/// A partition `nu_1 >= nu_2 >= ... > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Parse("partition parts must be weakly decreasing".into()));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition { parts })
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `nu_i`, zero past the length.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// All partitions of `n` with at most `max_len` parts.
    pub fn all_of_size(n: usize, max_len: usize) -> Vec<Partition> {
        fn go(n: usize, max_part: usize, max_len: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if n == 0 {
                out.push(Partition { parts: cur.clone() });
                return;
            }
            if cur.len() == max_len {
                return;
            }
            for p in (1..=max_part.min(n)).rev() {
                cur.push(p);
                go(n - p, p, max_len, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(n, n, max_len, &mut Vec::new(), &mut out);
        out
    }

    /// All partitions of size at most `n` and length at most `max_len`.
    pub fn up_to_size(n: usize, max_len: usize) -> Vec<Partition> {
        (0..=n).flat_map(|k| Partition::all_of_size(k, max_len)).collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.parts.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", p.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// `[3,1]`, `3,1` or `[]`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let parts = inner
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad partition `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

/// `h_0, ..., h_m` of the given values.
pub fn h_all<F: Field>(m: usize, xs: &[F]) -> Vec<F> {
    let mut h = vec![F::zero(); m + 1];
    h[0] = F::one();
    for x in xs {
        if x.is_zero() {
            continue;
        }
        for k in 1..=m {
            let t = h[k - 1].clone() * x.clone();
            h[k] = h[k].clone() + t;
        }
    }
    h
}

/// Complete homogeneous symmetric function `h_m` of the values.
pub fn h_values<F: Field>(m: usize, xs: &[F]) -> F {
    h_all(m, xs).swap_remove(m)
}

/// `h_m` at the coordinates of `X`.
pub fn h_m(m: usize, x: &ExtConfig, params: &QParams) -> Rational {
    h_values(m, &x.values(params))
}

/// `h_m(1, q, ..., q^{N-1}) = (q^N; q)_m / (q; q)_m`.
pub fn h_principal(m: usize, n: usize, q: &Rational) -> Rational {
    q_pochhammer(&q.pow(n as i32), q, m) / q_pochhammer(q, q, m)
}

/// Schur polynomial by the Jacobi-Trudi determinant `det[h_{nu_i - i + j}]`.
pub fn schur_values<F: Field>(nu: &Partition, xs: &[F]) -> Result<F> {
    if nu.len() > xs.len() {
        return Err(Error::PartitionTooLong { len: nu.len(), level: xs.len() });
    }
    Ok(jacobi_trudi(nu, xs))
}

fn jacobi_trudi<F: Field>(nu: &Partition, xs: &[F]) -> F {
    let l = nu.len();
    if l == 0 {
        return F::one();
    }
    let top = nu.part(0) + l;
    let h = h_all(top, xs);
    let m: Vec<Vec<F>> = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| {
                    let k = nu.part(i) as i64 - i as i64 + j as i64;
                    if k < 0 {
                        F::zero()
                    } else {
                        h[k as usize].clone()
                    }
                })
                .collect()
        })
        .collect();
    det(m)
}

/// `S_{nu|N}` at the coordinates of `X` (level `N`).
pub fn schur(nu: &Partition, x: &ExtConfig, params: &QParams) -> Result<Rational> {
    schur_values(nu, &x.values(params))
}

/// `S_{nu|N}(1, q, ..., q^{N-1})`.
pub fn schur_principal(nu: &Partition, n: usize, q: &Rational) -> Result<Rational> {
    schur_values(nu, &geometric(n, q))
}

fn geometric(n: usize, q: &Rational) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n);
    let mut t = Rational::one();
    for _ in 0..n {
        out.push(t.clone());
        t *= q;
    }
    out
}

/// Normalized Schur function `S_{nu|N}(X) / S_{nu|N}(1, ..., q^{N-1})`.
pub fn normalized_schur(nu: &Partition, x: &ExtConfig, params: &QParams) -> Result<Rational> {
    let n = x.level();
    Ok(schur(nu, x, params)? / schur_principal(nu, n, &params.q)?)
}

/// Normalized Schur function for already-evaluated coordinates at level
/// `xs.len()`, with the principal value supplied.
pub fn normalized_schur_values<F: Field>(nu: &Partition, xs: &[F], principal: &Rational) -> Result<F> {
    Ok(schur_values(nu, xs)? / F::from_rational(principal))
}

/// `S_nu(1, q, q^2, ...)` by truncating the progression, stopping when one
/// more term changes the value by less than `tol` relative. Rounded to
/// `digits` decimal digits.
pub fn schur_principal_inf(nu: &Partition, q: &Rational, tol: f64, digits: u32) -> Result<Rational> {
    if nu.is_empty() {
        return Ok(Rational::one());
    }
    let mut n = nu.len().max(1);
    let mut prev = schur_principal(nu, n, q)?;
    loop {
        n += 1;
        let cur = schur_principal(nu, n, q)?;
        let rel = rat_to_f64(&((&cur - &prev) / &cur));
        if rel.abs() < tol {
            return Ok(round_digits(&cur, digits));
        }
        if n > 20_000 {
            return Err(Error::NoConvergence("principal specialization".into()));
        }
        prev = cur;
    }
}

/// `S_nu(X) / S_nu(1, q, q^2, ...)` for a finite configuration `X`.
pub fn normalized_schur_inf(
    nu: &Partition,
    x: &ExtConfig,
    params: &QParams,
    tol: f64,
    digits: u32,
) -> Result<Rational> {
    let xs = x.nonzero.values(params);
    // pad with zeros so long partitions evaluate to 0 rather than erroring
    let mut padded = xs.clone();
    padded.resize(xs.len().max(nu.len()), Rational::zero());
    let num = jacobi_trudi(nu, &padded);
    if num.is_zero() {
        return Ok(num);
    }
    Ok(num / schur_principal_inf(nu, &params.q, tol, digits)?)
}

/// Hook-content formula for `S_nu(1, q, ..., q^{N-1})`; `N = None` for the
/// infinite progression. Independent of the determinant path.
pub fn schur_principal_hook(nu: &Partition, n: Option<usize>, q: &Rational) -> Rational {
    let conj: Vec<usize> = (0..nu.part(0)).map(|j| nu.parts().iter().filter(|&&p| p > j).count()).collect();
    let n_nu: usize = nu.parts().iter().enumerate().map(|(i, p)| i * p).sum();
    let mut v = q.pow(n_nu as i32);
    for (i, &row) in nu.parts().iter().enumerate() {
        for j in 0..row {
            let hook = (row - j) + (conj[j] - i) - 1;
            let mut num = Rational::one();
            if let Some(n) = n {
                let content = j as i64 - i as i64;
                num = Rational::one() - q.pow((n as i64 + content) as i32);
            }
            v = v * num / (Rational::one() - q.pow(hook as i32));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Config, LatticePoint};
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn pos(exps: &[i32]) -> ExtConfig {
        Config::from_unsorted(exps.iter().map(|&n| LatticePoint::plus(n)).collect()).unwrap().into()
    }

    fn part(p: &[usize]) -> Partition {
        Partition::new(p.to_vec()).unwrap()
    }

    #[test]
    fn h_examples() {
        let qp = QParams::canonical();
        assert_eq!(h_m(0, &pos(&[2, 0]), &qp), int(1));
        assert_eq!(h_m(1, &pos(&[2, 0]), &qp), rat(5, 4));
        assert_eq!(h_m(2, &pos(&[1, 0]), &qp), rat(7, 4));
        let mut z = pos(&[1, 0]);
        z.zero_mult = 3;
        assert_eq!(h_m(2, &z, &qp), rat(7, 4));
    }

    #[test]
    fn principal_examples() {
        let q = rat(1, 2);
        assert_eq!(h_principal(0, 3, &q), int(1));
        assert_eq!(h_principal(1, 2, &q), rat(3, 2));
        assert_eq!(h_principal(2, 2, &q), rat(7, 4));
        for m in 0..6 {
            for n in 1..6 {
                assert_eq!(h_principal(m, n, &q), h_values(m, &geometric(n, &q)));
            }
        }
    }

    #[test]
    fn schur_examples() {
        let qp = QParams::canonical();
        let x = pos(&[0, 1]);
        assert_eq!(schur(&Partition::empty(), &x, &qp).unwrap(), int(1));
        assert_eq!(schur(&part(&[1]), &x, &qp).unwrap(), rat(3, 2));
        assert_eq!(schur(&part(&[1, 1]), &x, &qp).unwrap(), rat(1, 2));
        assert!(schur(&part(&[1, 1, 1]), &x, &qp).is_err());
        assert_eq!(schur_principal(&part(&[1]), 2, &qp.q).unwrap(), rat(3, 2));
        assert_eq!(normalized_schur(&part(&[1]), &x, &qp).unwrap(), int(1));
        assert_eq!(normalized_schur(&Partition::empty(), &pos(&[3, 5]), &qp).unwrap(), int(1));
    }

    #[test]
    fn infinite_specialization() {
        let qp = QParams::canonical();
        let v = schur_principal_inf(&part(&[1]), &qp.q, 1e-15, 40).unwrap();
        assert!((rat_to_f64(&v) - 2.0).abs() < 1e-13);
        let w = normalized_schur_inf(&part(&[1]), &pos(&[0]), &qp, 1e-15, 40).unwrap();
        assert!((rat_to_f64(&w) - 0.5).abs() < 1e-13);
        for nu in Partition::up_to_size(4, 4) {
            let trunc = rat_to_f64(&schur_principal_inf(&nu, &qp.q, 1e-14, 40).unwrap());
            let hook = rat_to_f64(&schur_principal_hook(&nu, None, &qp.q));
            assert!((trunc / hook - 1.0).abs() < 1e-12, "{nu}");
        }
        // a partition longer than X gives 0
        assert_eq!(normalized_schur_inf(&part(&[1, 1]), &pos(&[0]), &qp, 1e-9, 40).unwrap(), int(0));
    }

    #[test]
    fn partitions_enumerate() {
        assert_eq!(Partition::all_of_size(4, 4).len(), 5);
        assert_eq!(Partition::all_of_size(4, 2).len(), 3);
        assert_eq!(Partition::up_to_size(3, 3).len(), 7);
        assert_eq!("[2,1,0]".parse::<Partition>().unwrap(), part(&[2, 1]));
        assert!("[1,2]".parse::<Partition>().is_err());
    }

    fn bialternant(nu: &Partition, xs: &[Rational]) -> Rational {
        let n = xs.len();
        let num: Vec<Vec<Rational>> = xs
            .iter()
            .map(|x| (0..n).map(|i| x.pow((nu.part(i) + n - 1 - i) as i32)).collect())
            .collect();
        let den: Vec<Vec<Rational>> =
            xs.iter().map(|x| (0..n).map(|i| x.pow((n - 1 - i) as i32)).collect()).collect();
        det(num) / det(den)
    }

    fn arb_partition(max_size: usize, max_len: usize) -> impl Strategy<Value = Partition> {
        (0..=max_size).prop_flat_map(move |n| {
            let all = Partition::all_of_size(n, max_len);
            proptest::sample::select(all)
        })
    }

    proptest! {
        #[test]
        fn jacobi_trudi_matches_bialternant(
            xs in proptest::collection::btree_set(-12i64..12, 1..6),
            nu in arb_partition(6, 5),
        ) {
            let xs: Vec<Rational> = xs.into_iter().map(|k| rat(k, 4)).collect();
            prop_assume!(nu.len() <= xs.len());
            prop_assert_eq!(schur_values(&nu, &xs).unwrap(), bialternant(&nu, &xs));
        }

        #[test]
        fn principal_ratio_identity(nu in arb_partition(5, 3), k in 1usize..5, extra in 1usize..3) {
            let q = rat(1, 2);
            let n = k + extra;
            prop_assume!(nu.len() <= k && n <= 6);
            let lhs = schur_principal(&nu, n, &q).unwrap() / schur_principal(&nu, k, &q).unwrap();
            let mut rhs = Rational::one();
            for i in 1..=k {
                rhs = rhs * q_pochhammer(&q, &q, k - i) * q_pochhammer(&q, &q, n - k)
                    / q_pochhammer(&q, &q, n - i);
                let ni = nu.part(i - 1) + k - i;
                rhs = rhs * q_pochhammer(&q.pow((n - k + 1) as i32), &q, ni) / q_pochhammer(&q, &q, ni);
            }
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn hook_formula_agrees(nu in arb_partition(6, 4), n in 4usize..7) {
            let q = rat(2, 5);
            prop_assert_eq!(schur_principal(&nu, n, &q).unwrap(), schur_principal_hook(&nu, Some(n), &q));
        }

        #[test]
        fn continuity_at_zero(nu in arb_partition(4, 3), depth in 10i32..30) {
            let qp = QParams::canonical();
            let head = [LatticePoint::plus(0), LatticePoint::plus(2)];
            let mut approx: Vec<LatticePoint> = head.to_vec();
            approx.push(LatticePoint::plus(depth));
            let near = ExtConfig::from(Config::from_unsorted(approx).unwrap());
            let limit = ExtConfig::new(Config::from_unsorted(head.to_vec()).unwrap(), 1);
            prop_assume!(nu.len() <= 3);
            let a = schur(&nu, &near, &qp).unwrap();
            let b = schur(&nu, &limit, &qp).unwrap();
            let gap = rat_to_f64(&(a - b)).abs();
            prop_assert!(gap <= 8.0 * 2f64.powi(-depth));
        }
    }
}
