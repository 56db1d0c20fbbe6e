//! The two-sided q-lattice, its points, intervals and configurations.
//!
//! Points are stored symbolically as `(sign, exponent)`. Ordering and
//! equality never touch numeric values.

use crate::error::{Error, Result};
use crate::scalar::{int, rat_to_f64, Rational};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// The parameters `(q, zeta_plus, zeta_minus)` of the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct QParams {
    pub q: Rational,
    pub zeta_plus: Rational,
    pub zeta_minus: Rational,
    qf: f64,
    zpf: f64,
    zmf: f64,
}

impl QParams {
    pub fn new(q: Rational, zeta_plus: Rational, zeta_minus: Rational) -> Result<Self> {
        if !(q > Rational::zero() && q < Rational::one()) {
            return Err(Error::InvalidParams(format!("q = {q} must lie in (0, 1)")));
        }
        if !zeta_plus.is_positive() {
            return Err(Error::InvalidParams(format!("zeta_plus = {zeta_plus} must be positive")));
        }
        if !zeta_minus.is_negative() {
            return Err(Error::InvalidParams(format!("zeta_minus = {zeta_minus} must be negative")));
        }
        let (qf, zpf, zmf) = (rat_to_f64(&q), rat_to_f64(&zeta_plus), rat_to_f64(&zeta_minus));
        Ok(QParams { q, zeta_plus, zeta_minus, qf, zpf, zmf })
    }

    /// q = 1/2, zeta_plus = 1, zeta_minus = -1.
    pub fn canonical() -> Self {
        QParams::new(crate::scalar::rat(1, 2), int(1), int(-1)).unwrap()
    }

    pub fn q_f64(&self) -> f64 {
        self.qf
    }

    pub fn zeta(&self, sign: Sign) -> &Rational {
        match sign {
            Sign::Plus => &self.zeta_plus,
            Sign::Minus => &self.zeta_minus,
        }
    }

    fn zeta_f64(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.zpf,
            Sign::Minus => self.zmf,
        }
    }

    /// `q^n` for any integer `n`.
    pub fn q_pow(&self, n: i64) -> Rational {
        self.q.pow(n as i32)
    }

    /// Largest exponent `n` with `|zeta_sign| q^n >= min_abs`, or `None`
    /// when `min_abs <= 0`.
    pub fn exponent_cutoff(&self, sign: Sign, min_abs: &Rational) -> Option<i32> {
        if !min_abs.is_positive() {
            return None;
        }
        let z = self.zeta(sign).abs();
        let est = ((rat_to_f64(&z) / rat_to_f64(min_abs)).ln() / (1.0 / self.qf).ln()).floor();
        let mut n = if est.is_finite() { est as i32 } else { 0 };
        let ok = |n: i32| &z * self.q.pow(n) >= *min_abs;
        while !ok(n) {
            n -= 1;
        }
        while ok(n + 1) {
            n += 1;
        }
        Some(n)
    }
}

impl Default for QParams {
    fn default() -> Self {
        QParams::canonical()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

/// A point `zeta_sign * q^exponent` of the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    pub sign: Sign,
    pub exponent: i32,
}

impl LatticePoint {
    pub const fn plus(exponent: i32) -> Self {
        LatticePoint { sign: Sign::Plus, exponent }
    }

    pub const fn minus(exponent: i32) -> Self {
        LatticePoint { sign: Sign::Minus, exponent }
    }

    pub fn new(sign: Sign, exponent: i32) -> Self {
        LatticePoint { sign, exponent }
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Plus
    }

    /// The point `self * q^k`.
    pub fn shift(&self, k: i32) -> Self {
        LatticePoint { sign: self.sign, exponent: self.exponent + k }
    }

    /// Mirror image under the reflection `x -> -x` with the zetas swapped.
    pub fn reflect(&self) -> Self {
        let sign = match self.sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        LatticePoint { sign, exponent: self.exponent }
    }
}

impl Ord for LatticePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.sign, other.sign) {
            (Sign::Minus, Sign::Plus) => Ordering::Less,
            (Sign::Plus, Sign::Minus) => Ordering::Greater,
            (Sign::Plus, Sign::Plus) => other.exponent.cmp(&self.exponent),
            (Sign::Minus, Sign::Minus) => self.exponent.cmp(&other.exponent),
        }
    }
}

impl PartialOrd for LatticePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.is_positive() { '+' } else { '-' };
        write!(f, "{s}:{}", self.exponent)
    }
}

impl FromStr for LatticePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sg, n) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("point `{s}` is not of the form +:n or -:n")))?;
        let sign = match sg {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            _ => return Err(Error::Parse(format!("bad sign in point `{s}`"))),
        };
        let exponent = n
            .trim()
            .parse::<i32>()
            .map_err(|_| Error::Parse(format!("bad exponent in point `{s}`")))?;
        Ok(LatticePoint { sign, exponent })
    }
}

/// Exact value `zeta_sign q^n`.
pub fn value(p: &LatticePoint, params: &QParams) -> Rational {
    params.zeta(p.sign) * params.q.pow(p.exponent)
}

pub fn value_f64(p: &LatticePoint, params: &QParams) -> f64 {
    params.zeta_f64(p.sign) * params.qf.powi(p.exponent)
}

/// A point of the closed lattice: a lattice point or the accumulation point 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClosedPoint {
    Zero,
    Point(LatticePoint),
}

impl ClosedPoint {
    pub fn value(&self, params: &QParams) -> Rational {
        match self {
            ClosedPoint::Zero => Rational::zero(),
            ClosedPoint::Point(p) => value(p, params),
        }
    }

    pub fn value_f64(&self, params: &QParams) -> f64 {
        match self {
            ClosedPoint::Zero => 0.0,
            ClosedPoint::Point(p) => value_f64(p, params),
        }
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        match self {
            ClosedPoint::Zero => 0,
            ClosedPoint::Point(p) if p.is_positive() => 1,
            ClosedPoint::Point(_) => -1,
        }
    }
}

impl Ord for ClosedPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ClosedPoint::Point(a), ClosedPoint::Point(b)) => a.cmp(b),
            _ => self.signum().cmp(&other.signum()),
        }
    }
}

impl PartialOrd for ClosedPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ClosedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedPoint::Zero => write!(f, "0"),
            ClosedPoint::Point(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for ClosedPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "0" {
            Ok(ClosedPoint::Zero)
        } else {
            s.parse().map(ClosedPoint::Point)
        }
    }
}

impl From<LatticePoint> for ClosedPoint {
    fn from(p: LatticePoint) -> Self {
        ClosedPoint::Point(p)
    }
}

/// Whether `y` lies in the interval `I(a, b)`.
///
/// `[a, b)` for `a < b < 0`, `[a, b]` for `a < 0 < b`, `(a, b]` for `0 < a < b`.
pub fn interval_contains(a: &LatticePoint, b: &LatticePoint, y: &LatticePoint) -> Result<bool> {
    if a >= b {
        return Err(Error::EmptyInterval);
    }
    Ok(gap_contains(&ClosedPoint::Point(*a), &ClosedPoint::Point(*b), y))
}

/// Interval rule extended to closed-lattice endpoints: the endpoint nearer
/// to 0 is excluded when both lie on one side, and 0 itself is never a
/// member. Assumes `a < b`.
pub(crate) fn gap_contains(a: &ClosedPoint, b: &ClosedPoint, y: &LatticePoint) -> bool {
    let yc = ClosedPoint::Point(*y);
    if yc < *a || yc > *b {
        return false;
    }
    if a.signum() >= 0 && yc == *a {
        return false;
    }
    if b.signum() <= 0 && yc == *b {
        return false;
    }
    true
}

/// Whether `Y` interlaces `X`, i.e. `y_i` lies in `I(x_i, x_{i+1})`.
pub fn interlaces(x: &Config, y: &Config) -> Result<bool> {
    if x.len() != y.len() + 1 {
        return Err(Error::SizeMismatch { expected: y.len() + 1, got: x.len() });
    }
    Ok(y
        .points()
        .iter()
        .enumerate()
        .all(|(i, yi)| gap_contains(&x.points[i].into(), &x.points[i + 1].into(), yi)))
}

/// The points of `I(a, b)` with `|value| >= min_abs`, ascending.
pub fn enumerate_interval(
    a: &LatticePoint,
    b: &LatticePoint,
    min_abs: &Rational,
    params: &QParams,
) -> Result<Vec<LatticePoint>> {
    if a >= b {
        return Err(Error::EmptyInterval);
    }
    gap_points(&(*a).into(), &(*b).into(), min_abs, params)
}

/// Members of the generalized interval between closed points `a < b`
/// with `|value| >= min_abs`, ascending.
pub(crate) fn gap_points(
    a: &ClosedPoint,
    b: &ClosedPoint,
    min_abs: &Rational,
    params: &QParams,
) -> Result<Vec<LatticePoint>> {
    range_points(a, b, min_abs, params).map(|v| {
        v.into_iter().filter(|y| gap_contains(a, b, y)).collect()
    })
}

/// All lattice points in the closed range `[a, b]` with `|value| >= min_abs`.
pub(crate) fn range_points(
    a: &ClosedPoint,
    b: &ClosedPoint,
    min_abs: &Rational,
    params: &QParams,
) -> Result<Vec<LatticePoint>> {
    let mut out = Vec::new();
    // negative ray: value in [a, b] <=> exponent in [lo, hi]
    if a.signum() < 0 {
        let lo = match a {
            ClosedPoint::Point(p) => p.exponent,
            ClosedPoint::Zero => unreachable!(),
        };
        let hi = match b {
            ClosedPoint::Point(p) if !p.is_positive() => Some(p.exponent),
            _ => params.exponent_cutoff(Sign::Minus, min_abs),
        };
        let hi = match (hi, b.signum() < 0) {
            (Some(h), true) => h.min(params.exponent_cutoff(Sign::Minus, min_abs).unwrap_or(h)),
            (Some(h), false) => h,
            (None, _) => return Err(Error::InfiniteInterval),
        };
        out.extend((lo..=hi).map(LatticePoint::minus));
    }
    if b.signum() > 0 {
        let lo = match b {
            ClosedPoint::Point(p) => p.exponent,
            ClosedPoint::Zero => unreachable!(),
        };
        let hi = match a {
            ClosedPoint::Point(p) if p.is_positive() => {
                let h = p.exponent;
                Some(params.exponent_cutoff(Sign::Plus, min_abs).map_or(h, |c| c.min(h)))
            }
            _ => params.exponent_cutoff(Sign::Plus, min_abs),
        };
        let hi = hi.ok_or(Error::InfiniteInterval)?;
        out.extend((lo..=hi).rev().map(LatticePoint::plus));
    }
    Ok(out)
}

/// A strictly increasing finite configuration of lattice points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Config {
    points: Vec<LatticePoint>,
}

impl Config {
    /// Builds a configuration from strictly increasing points.
    pub fn new(points: Vec<LatticePoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("points must be strictly increasing".into()));
        }
        Ok(Config { points })
    }

    /// Sorts the points; repeated points are rejected.
    pub fn from_unsorted(mut points: Vec<LatticePoint>) -> Result<Self> {
        points.sort();
        Config::new(points)
    }

    pub(crate) fn from_sorted_unchecked(points: Vec<LatticePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Config { points }
    }

    pub fn empty() -> Self {
        Config { points: Vec::new() }
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self, params: &QParams) -> Vec<Rational> {
        self.points.iter().map(|p| value(p, params)).collect()
    }

    pub fn values_f64(&self, params: &QParams) -> Vec<f64> {
        self.points.iter().map(|p| value_f64(p, params)).collect()
    }

    pub fn is_single_sign(&self) -> bool {
        self.points.iter().all(|p| p.is_positive()) || self.points.iter().all(|p| !p.is_positive())
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn first(&self) -> Option<&LatticePoint> {
        self.points.first()
    }

    pub fn last(&self) -> Option<&LatticePoint> {
        self.points.last()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", codes.join(","))
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let e: ExtConfig = s.parse()?;
        if e.zero_mult > 0 {
            return Err(Error::Parse(format!("`{s}` contains zeros")));
        }
        Ok(e.nonzero)
    }
}

/// A configuration of the closed lattice: nonzero points plus a zero of
/// multiplicity `zero_mult`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ExtConfig {
    pub nonzero: Config,
    pub zero_mult: usize,
}

impl ExtConfig {
    pub fn new(nonzero: Config, zero_mult: usize) -> Self {
        ExtConfig { nonzero, zero_mult }
    }

    pub fn zeros(m: usize) -> Self {
        ExtConfig { nonzero: Config::empty(), zero_mult: m }
    }

    /// The level `N = |X°| + m`.
    pub fn level(&self) -> usize {
        self.nonzero.len() + self.zero_mult
    }

    pub fn has_zeros(&self) -> bool {
        self.zero_mult > 0
    }

    /// All coordinates, ascending, zeros included with multiplicity.
    pub fn closed_points(&self) -> Vec<ClosedPoint> {
        let pts = self.nonzero.points();
        let split = pts.iter().position(|p| p.is_positive()).unwrap_or(pts.len());
        let mut out: Vec<ClosedPoint> = pts[..split].iter().map(|&p| p.into()).collect();
        out.extend(std::iter::repeat(ClosedPoint::Zero).take(self.zero_mult));
        out.extend(pts[split..].iter().map(|&p| ClosedPoint::from(p)));
        out
    }

    pub fn values(&self, params: &QParams) -> Vec<Rational> {
        self.closed_points().iter().map(|c| c.value(params)).collect()
    }

    pub fn values_f64(&self, params: &QParams) -> Vec<f64> {
        self.closed_points().iter().map(|c| c.value_f64(params)).collect()
    }

    /// Smallest and largest coordinates, or `None` at level 0.
    pub fn bounds(&self) -> Option<(ClosedPoint, ClosedPoint)> {
        let c = self.closed_points();
        Some((*c.first()?, *c.last()?))
    }

    pub fn is_single_sign(&self) -> bool {
        self.nonzero.is_single_sign()
    }
}

impl From<Config> for ExtConfig {
    fn from(c: Config) -> Self {
        ExtConfig { nonzero: c, zero_mult: 0 }
    }
}

impl fmt::Display for ExtConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<String> = self.closed_points().iter().map(|p| p.to_string()).collect();
        write!(f, "{}", codes.join(","))
    }
}

impl FromStr for ExtConfig {
    type Err = Error;

    /// Comma-separated codes `+:n`, `-:n`, `0` or `0^m`; order is free.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut pts = Vec::new();
        let mut zeros = 0usize;
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "0" {
                zeros += 1;
            } else if let Some(m) = tok.strip_prefix("0^") {
                zeros += m.parse::<usize>().map_err(|_| Error::Parse(format!("bad zero block `{tok}`")))?;
            } else {
                pts.push(tok.parse::<LatticePoint>()?);
            }
        }
        let nonzero = Config::from_unsorted(pts)
            .map_err(|_| Error::Parse(format!("repeated point in `{s}`")))?;
        Ok(ExtConfig { nonzero, zero_mult: zeros })
    }
}
