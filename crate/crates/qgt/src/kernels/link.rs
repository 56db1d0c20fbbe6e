//! Link kernels between consecutive levels and their compositions.

use super::{qq_table, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::lattice::{gap_contains, gap_points, ClosedPoint, Config, ExtConfig, LatticePoint, QParams, Sign};
use crate::scalar::{rat_to_f64, RealField, Rational};
use num_traits::{One, Signed, Zero};

/// `(q;q)_N |Y| |V(Y)| / |V(X)|` when `Y` interlaces `X`, else 0.
pub fn link_weight(x: &Config, y: &Config, params: &QParams) -> Result<Rational> {
    link_weight_ext(&x.clone().into(), &y.clone().into(), params)
}

/// The link kernel extended to configurations with zeros.
///
/// For `X = X° ∪ 0^m` with `m >= 1` the only reachable `Y` are
/// `Y° ∪ 0^(m-1)` where `Y°` interlaces `X° ∪ {0}`, with weight
/// `(q;q)_N/(q;q)_(m-1) |Y°|^m |V(Y°)| / (|V(X°)| |X°|^m)`.
pub fn link_weight_ext(x: &ExtConfig, y: &ExtConfig, params: &QParams) -> Result<Rational> {
    if x.level() != y.level() + 1 {
        return Err(Error::SizeMismatch { expected: y.level() + 1, got: x.level() });
    }
    let link = Link::<Rational>::new(x, params);
    let expected_zeros = x.zero_mult.saturating_sub(1);
    if y.zero_mult != expected_zeros {
        return Ok(Rational::zero());
    }
    let ys = y.nonzero.points();
    if ys.len() != link.gaps.len() {
        return Ok(Rational::zero());
    }
    if !ys.iter().zip(&link.gaps).all(|(p, (a, b))| gap_contains(a, b, p)) {
        return Ok(Rational::zero());
    }
    Ok(link.weight(ys, params))
}

/// Precomputed data of one link step out of `X`.
pub(crate) struct Link<F> {
    pub(crate) gaps: Vec<(ClosedPoint, ClosedPoint)>,
    /// Power of `|Y°|` in the weight.
    power: u32,
    /// `(q;q)_N / ((q;q)_(m-1) |V(X°)| |X°|^m)`.
    scale: F,
    scale_f64: f64,
    level: usize,
    zeros: usize,
}

impl<F: RealField> Link<F> {
    pub(crate) fn new(x: &ExtConfig, params: &QParams) -> Self {
        let m = x.zero_mult;
        let mut c: Vec<ClosedPoint> = x.nonzero.points().iter().map(|&p| p.into()).collect();
        if m > 0 {
            let split = c.iter().position(|p| p.signum() > 0).unwrap_or(c.len());
            c.insert(split, ClosedPoint::Zero);
        }
        let gaps: Vec<_> = c.windows(2).map(|w| (w[0], w[1])).collect();
        let n = x.level().saturating_sub(1);
        let qq: Vec<Rational> = qq_table(n, params);
        let xs = x.nonzero.values(params);
        let vx = crate::linalg::vandermonde(&xs).abs();
        let px: Rational = xs.iter().fold(Rational::one(), |a, v| a * v.abs());
        let denom_qq = if m > 0 { qq[m - 1].clone() } else { Rational::one() };
        let scale_r = &qq[n] / (denom_qq * vx * px.pow(m as i32));
        Link {
            gaps,
            power: m.max(1) as u32,
            scale: F::from_rational(&scale_r),
            scale_f64: rat_to_f64(&scale_r),
            level: n,
            zeros: m.saturating_sub(1),
        }
    }

    /// Weight of an admissible `Y°` (one point per gap, not checked).
    pub(crate) fn weight(&self, ys: &[LatticePoint], params: &QParams) -> F {
        let vals: Vec<F> = ys.iter().map(|p| F::of_point(p, params)).collect();
        let mut w = self.scale.clone();
        for (i, a) in vals.iter().enumerate() {
            let mut t = a.abs_val();
            for _ in 1..self.power {
                t = t * a.abs_val();
            }
            w = w * t;
            for b in &vals[i + 1..] {
                w = w * (b.clone() - a.clone());
            }
        }
        w
    }

    /// `Λ(X, Y)` for any `Y` one level down, 0 when `Y` is not reachable.
    pub(crate) fn weight_of(&self, y: &ExtConfig, params: &QParams) -> F {
        let ys = y.nonzero.points();
        if y.zero_mult != self.zeros
            || ys.len() != self.gaps.len()
            || !ys.iter().zip(&self.gaps).all(|(p, (a, b))| gap_contains(a, b, p))
        {
            return F::zero();
        }
        self.weight(ys, params)
    }

    fn is_zero_gap(&self, g: usize) -> bool {
        let (a, b) = &self.gaps[g];
        a.signum() <= 0 && b.signum() >= 0
    }

    /// The points of every gap; gaps touching 0 are cut at `min_abs`.
    fn gap_lists(&self, min_abs: &Rational, params: &QParams) -> Result<Vec<Vec<LatticePoint>>> {
        self.gaps
            .iter()
            .enumerate()
            .map(|(g, (a, b))| {
                let cut = if self.is_zero_gap(g) { min_abs.clone() } else { Rational::zero() };
                gap_points(a, b, &cut, params)
            })
            .collect()
    }

    /// The measure `Λ(X, ·)` restricted to the enumerated points, with a
    /// bound on the mass of everything else.
    pub(crate) fn measure(&self, min_abs: &Rational, params: &QParams) -> Result<DiscreteMeasure<F>> {
        let lists = self.gap_lists(min_abs, params)?;
        let mut out = DiscreteMeasure::new();
        let vals: Vec<Vec<F>> = lists
            .iter()
            .map(|l| l.iter().map(|p| F::of_point(p, params)).collect())
            .collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(lists.len());
        let mut chosen_vals: Vec<F> = Vec::with_capacity(lists.len());
        self.enumerate(&lists, &vals, &mut chosen, &mut chosen_vals, self.scale.clone(), &mut |idx, w| {
            let pts: Vec<LatticePoint> = idx.iter().enumerate().map(|(g, &i)| lists[g][i]).collect();
            let y = ExtConfig::new(Config::from_sorted_unchecked(pts), self.zeros);
            out.atoms.insert(y, w);
        });
        out.tail_bound = F::from_f64(self.tail_bound(min_abs, params)?);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        lists: &[Vec<LatticePoint>],
        vals: &[Vec<F>],
        chosen: &mut Vec<usize>,
        chosen_vals: &mut Vec<F>,
        acc: F,
        emit: &mut dyn FnMut(&[usize], F),
    ) {
        let g = chosen.len();
        if g == lists.len() {
            emit(chosen, acc);
            return;
        }
        for (i, v) in vals[g].iter().enumerate() {
            let mut w = acc.clone();
            let a = v.abs_val();
            for _ in 0..self.power {
                w = w * a.clone();
            }
            for u in chosen_vals.iter() {
                w = w * (v.clone() - u.clone());
            }
            chosen.push(i);
            chosen_vals.push(v.clone());
            self.enumerate(lists, vals, chosen, chosen_vals, w, emit);
            chosen.pop();
            chosen_vals.pop();
        }
    }

    /// Union bound over the gaps touching 0 of the mass carried by `Y`
    /// whose coordinate in that gap is below `min_abs`.
    fn tail_bound(&self, min_abs: &Rational, params: &QParams) -> Result<f64> {
        let zero_gaps: Vec<usize> = (0..self.gaps.len()).filter(|&g| self.is_zero_gap(g)).collect();
        if zero_gaps.is_empty() {
            return Ok(0.0);
        }
        let q = params.q_f64();
        let p = self.power as i32;
        let deep = min_abs * Rational::new(1.into(), num_bigint::BigInt::one() << 40usize);
        let mut total = 0.0;
        for &g in &zero_gaps {
            let (tiny_g, t_max) = self.tiny(g, min_abs, params)?;
            if tiny_g == 0.0 {
                continue;
            }
            // all other coordinates, the other zero gap cut deeper
            let mut lists = Vec::new();
            for (h, (a, b)) in self.gaps.iter().enumerate() {
                if h == g {
                    continue;
                }
                let cut = if self.is_zero_gap(h) { deep.clone() } else { Rational::zero() };
                lists.push(gap_points(a, b, &cut, params)?);
            }
            let vals: Vec<Vec<f64>> = lists
                .iter()
                .map(|l| l.iter().map(|pt| crate::lattice::value_f64(pt, params)).collect())
                .collect();
            let s = enumerate_bound(&vals, p, t_max);
            total += self.scale_f64 * tiny_g * s;
            // both zero-gap coordinates small: crude bound
            for &h in zero_gaps.iter().filter(|&&h| h != g) {
                let (tiny_h, _) = self.tiny(h, &deep, params)?;
                let r = self.max_abs(params);
                let n = self.gaps.len() as i32;
                let mut crude = self.scale_f64 * tiny_g * tiny_h * (2.0 * r).powi(n * (n - 1) / 2);
                for (k, (a, b)) in self.gaps.iter().enumerate() {
                    if k == g || k == h {
                        continue;
                    }
                    let cnt = gap_points(a, b, &Rational::zero(), params)?.len() as f64;
                    crude *= cnt * r.powi(p);
                }
                total += crude;
            }
        }
        let _ = q;
        Ok(total * (1.0 + 1e-9) + f64::MIN_POSITIVE)
    }

    /// `sum |y|^p` over the points of gap `g` below `min_abs`, and the
    /// largest such `|y|`.
    fn tiny(&self, g: usize, min_abs: &Rational, params: &QParams) -> Result<(f64, f64)> {
        let (a, b) = &self.gaps[g];
        let q = params.q_f64();
        let p = self.power as i32;
        let mut sum = 0.0;
        let mut t_max: f64 = 0.0;
        for sign in [Sign::Minus, Sign::Plus] {
            let first = match (sign, a, b) {
                (Sign::Minus, ClosedPoint::Point(pa), _) if !pa.is_positive() => pa.exponent,
                (Sign::Plus, _, ClosedPoint::Point(pb)) if pb.is_positive() => pb.exponent,
                _ => continue,
            };
            let cut = params.exponent_cutoff(sign, min_abs).ok_or(Error::InfiniteInterval)?;
            let e = first.max(cut + 1);
            let t = crate::lattice::value_f64(&LatticePoint::new(sign, e), params).abs();
            sum += t.powi(p) / (1.0 - q.powi(p));
            t_max = t_max.max(t);
        }
        Ok((sum, t_max))
    }

    fn max_abs(&self, params: &QParams) -> f64 {
        self.gaps
            .iter()
            .flat_map(|(a, b)| [a.value_f64(params).abs(), b.value_f64(params).abs()])
            .fold(0.0, f64::max)
    }
}

/// `sum over one point per list of |Y|^p |V(Y)| prod (|y_j| + t)`.
fn enumerate_bound(vals: &[Vec<f64>], p: i32, t: f64) -> f64 {
    fn rec(vals: &[Vec<f64>], chosen: &mut Vec<f64>, acc: f64, p: i32, t: f64) -> f64 {
        let g = chosen.len();
        if g == vals.len() {
            return acc;
        }
        let mut s = 0.0;
        for &v in &vals[g] {
            let mut w = acc * v.abs().powi(p) * (v.abs() + t);
            for &u in chosen.iter() {
                w *= (v - u).abs();
            }
            chosen.push(v);
            s += rec(vals, chosen, w, p, t);
            chosen.pop();
        }
        s
    }
    rec(vals, &mut Vec::new(), 1.0, p, t)
}

/// `Λ^(N+1)_N(X, ·)` on ordinary configurations.
///
/// Gaps reaching 0 are cut at `min_abs`; `tail_bound` bounds the mass of
/// the configurations left out.
pub fn link_measure<F: RealField>(x: &Config, min_abs: &Rational, params: &QParams) -> Result<DiscreteMeasure<F>> {
    link_measure_ext(&x.clone().into(), min_abs, params)
}

/// [`link_measure`] for configurations with zeros.
pub fn link_measure_ext<F: RealField>(
    x: &ExtConfig,
    min_abs: &Rational,
    params: &QParams,
) -> Result<DiscreteMeasure<F>> {
    if x.level() == 0 {
        return Err(Error::InvalidConfig("cannot descend from level 0".into()));
    }
    let link = Link::<F>::new(x, params);
    debug_assert_eq!(link.level + 1, x.level());
    link.measure(min_abs, params)
}

/// `Λ^N_K(X, ·)` as the composition of link measures.
///
/// Atoms lighter than `prune` are dropped at every level and their mass
/// is added to the tail bound, as is the tail of every link step.
pub fn telescope<F: RealField>(
    x: &ExtConfig,
    k: usize,
    min_abs: &Rational,
    prune: f64,
    params: &QParams,
) -> Result<DiscreteMeasure<F>> {
    let n = x.level();
    if k > n {
        return Err(Error::InvalidParams(format!("K = {k} exceeds N = {n}")));
    }
    let mut cur = DiscreteMeasure::new();
    cur.atoms.insert(x.clone(), F::one());
    let prune_f = F::from_f64(prune);
    for _ in k..n {
        let mut next: DiscreteMeasure<F> = DiscreteMeasure::new();
        next.tail_bound = cur.tail_bound.clone();
        for (w, mass) in &cur.atoms {
            let step = link_measure_ext::<F>(w, min_abs, params)?;
            next.tail_bound = next.tail_bound.clone() + mass.clone() * step.tail_bound;
            for (y, v) in step.atoms {
                next.add(y, mass.clone() * v);
            }
        }
        if prune > 0.0 {
            let mut dropped = F::zero();
            next.atoms.retain(|_, v| {
                if *v < prune_f {
                    dropped = dropped.clone() + v.clone();
                    false
                } else {
                    true
                }
            });
            next.tail_bound = next.tail_bound.clone() + dropped;
        }
        cur = next;
    }
    Ok(cur)
}
