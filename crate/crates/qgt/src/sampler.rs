//! Exact sampling of the down-chain `X -> Y` through link kernels, and
//! statistical checks against exact atom tables and moment identities.

use crate::error::{Error, Result};
use crate::kernels::{link_measure_ext, DiscreteMeasure};
use crate::lattice::{interlaces, Config, ExtConfig, QParams};
use crate::scalar::{rat_to_f64, Rational};
use crate::symfunc::{normalized_schur, normalized_schur_values, schur_principal, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

/// Samples per independent stream in batch sampling.
const CHUNK: usize = 1024;

/// Deterministic random stream: ChaCha8 keyed by `seed`, one stream per
/// chain.
#[derive(Clone, Debug)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, stream, rng }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Atoms sorted by decreasing weight with running sums.
#[derive(Debug)]
struct Cdf {
    atoms: Vec<ExtConfig>,
    cumulative: Vec<f64>,
    /// Bound on the mass not enumerated.
    deficit: f64,
    min_abs: Rational,
}

impl Cdf {
    fn build(m: DiscreteMeasure<f64>, min_abs: Rational) -> Self {
        let mut atoms: Vec<(ExtConfig, f64)> = m.atoms.into_iter().collect();
        atoms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (_, w) in &atoms {
            acc += w;
            cumulative.push(acc);
        }
        let deficit = m.tail_bound.max(1.0 - acc).max(0.0);
        Cdf { atoms: atoms.into_iter().map(|a| a.0).collect(), cumulative, deficit, min_abs }
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn find(&self, u: f64) -> Option<&ExtConfig> {
        let i = self.cumulative.partition_point(|c| *c <= u);
        self.atoms.get(i)
    }
}

/// Link sampler with a shared cache of inverse CDFs per configuration.
pub struct Sampler {
    params: QParams,
    min_abs: Rational,
    cache: RwLock<HashMap<ExtConfig, Arc<Cdf>>>,
}

impl Sampler {
    /// `min_abs` is the first cut for gaps that reach 0; it is deepened on
    /// demand.
    pub fn new(params: &QParams, min_abs: &Rational) -> Self {
        Sampler { params: params.clone(), min_abs: min_abs.clone(), cache: RwLock::new(HashMap::new()) }
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    fn cdf(&self, x: &ExtConfig, deeper_than: Option<&Rational>) -> Result<Arc<Cdf>> {
        if let Some(c) = self.cache.read().expect("sampler cache poisoned").get(x) {
            if deeper_than.is_none_or(|d| c.min_abs < *d) {
                return Ok(c.clone());
            }
        }
        let min_abs = match deeper_than {
            Some(d) => d * self.params.q.pow(8),
            None => self.min_abs.clone(),
        };
        let m = link_measure_ext::<f64>(x, &min_abs, &self.params)?;
        let cdf = Arc::new(Cdf::build(m, min_abs));
        self.cache.write().expect("sampler cache poisoned").insert(x.clone(), cdf.clone());
        Ok(cdf)
    }

    /// One draw from `Λ^(N+1)_N(X, ·)`.
    ///
    /// When the uniform lands in the mass that was not enumerated, the cut
    /// near 0 is deepened until it is covered or the missing mass is below
    /// `2^-60`.
    pub fn sample_link_ext(&self, x: &ExtConfig, rng: &mut RngState) -> Result<ExtConfig> {
        let u = rng.uniform();
        let mut cdf = self.cdf(x, None)?;
        loop {
            if u < cdf.total() {
                return Ok(cdf.find(u).expect("u below total mass").clone());
            }
            if cdf.deficit < 2f64.powi(-60) || cdf.min_abs.numer() == &0.into() {
                return cdf
                    .atoms
                    .last()
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig(format!("no configuration below ({x})")));
            }
            let d = cdf.min_abs.clone();
            cdf = self.cdf(x, Some(&d))?;
        }
    }

    pub fn sample_link(&self, x: &Config, rng: &mut RngState) -> Result<Config> {
        let y = self.sample_link_ext(&ExtConfig::from(x.clone()), rng)?;
        Ok(y.nonzero)
    }

    /// `X = X_N -> X_(N-1) -> ... -> X_K`; every step is checked to
    /// interlace.
    pub fn sample_chain(&self, x: &Config, k: usize, rng: &mut RngState) -> Result<Trajectory> {
        let n = x.len();
        if k == 0 || k >= n {
            return Err(Error::InvalidParams(format!("need 1 <= K < N, got K = {k}, N = {n}")));
        }
        let mut levels = vec![x.clone()];
        let mut cur = x.clone();
        for _ in k..n {
            let y = self.sample_link(&cur, rng)?;
            assert!(interlaces(&cur, &y)?, "sampled ({y}) does not interlace ({cur})");
            levels.push(y.clone());
            cur = y;
        }
        Ok(Trajectory { levels })
    }

    /// `n` independent draws of the level-`K` endpoint. Draw `i` uses
    /// stream `i / 1024` of `seed`, so the result does not depend on the
    /// thread count.
    pub fn sample_many(&self, x: &Config, k: usize, n: usize, seed: u64) -> Result<Vec<Config>> {
        let chunks: Vec<Vec<Config>> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = RngState::with_stream(seed, c as u64);
                let len = CHUNK.min(n - c * CHUNK);
                (0..len)
                    .map(|_| Ok(self.sample_chain(x, k, &mut rng)?.levels.pop().expect("nonempty")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }
}

/// Configurations visited by one chain, from level `N` down to `K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub levels: Vec<Config>,
}

impl Trajectory {
    pub fn end(&self) -> &Config {
        self.levels.last().expect("trajectory is never empty")
    }
}

impl fmt::Display for Trajectory {
    /// One line per level: `level<TAB>config`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.levels {
            writeln!(f, "{}\t{}", c.len(), c)?;
        }
        Ok(())
    }
}

impl FromStr for Trajectory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut levels = Vec::new();
        for line in s.lines().filter(|l| !l.trim().is_empty()) {
            let (lvl, cfg) = line.split_once('\t').ok_or_else(|| Error::Parse(format!("bad record `{line}`")))?;
            let lvl: usize = lvl.trim().parse().map_err(|_| Error::Parse(format!("bad level `{lvl}`")))?;
            let c: Config = cfg.parse()?;
            if c.len() != lvl {
                return Err(Error::SizeMismatch { expected: lvl, got: c.len() });
            }
            levels.push(c);
        }
        if levels.is_empty() {
            return Err(Error::Parse("empty trajectory".into()));
        }
        Ok(Trajectory { levels })
    }
}

/// Outcome of a moment test.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTest {
    pub mean: f64,
    pub target: f64,
    pub std_err: f64,
    pub z: f64,
}

/// `(mean of S~_ν|K(Y) - S~_ν|N(X)) / standard error` over `n` draws.
pub fn empirical_moment_test(
    sampler: &Sampler,
    x: &Config,
    k: usize,
    nu: &Partition,
    n: usize,
    seed: u64,
) -> Result<MomentTest> {
    if nu.len() > k {
        return Err(Error::PartitionTooLong { len: nu.len(), level: k });
    }
    if n < 2 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    let params = sampler.params();
    let target = rat_to_f64(&normalized_schur(nu, &ExtConfig::from(x.clone()), params)?);
    let pk = schur_principal(nu, k, &params.q)?;
    let ys = sampler.sample_many(x, k, n, seed)?;
    let stats: Vec<f64> = ys
        .iter()
        .map(|y| normalized_schur_values(nu, &y.values_f64(params), &pk))
        .collect::<Result<_>>()?;
    let mean = stats.iter().sum::<f64>() / n as f64;
    let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
    let std_err = (var / n as f64).sqrt();
    let z = if std_err == 0.0 {
        if mean == target {
            0.0
        } else {
            f64::INFINITY.copysign(mean - target)
        }
    } else {
        (mean - target) / std_err
    };
    Ok(MomentTest { mean, target, std_err, z })
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson test of `n` draws against an exact atom table. Atoms with
/// expected count below 5 are pooled together with the unenumerated mass.
pub fn chi_square_test(
    sampler: &Sampler,
    x: &Config,
    k: usize,
    exact: &DiscreteMeasure<f64>,
    n: usize,
    seed: u64,
) -> Result<ChiSquareTest> {
    let ys = sampler.sample_many(x, k, n, seed)?;
    let mut counts: BTreeMap<ExtConfig, usize> = BTreeMap::new();
    for y in ys {
        *counts.entry(ExtConfig::from(y)).or_default() += 1;
    }
    let nf = n as f64;
    let mut expected = Vec::new();
    let mut observed = Vec::new();
    let mut pooled_e = (1.0 - exact.total()).max(0.0) * nf;
    let mut pooled_o = 0usize;
    for (y, w) in &exact.atoms {
        let o = counts.remove(y).unwrap_or(0);
        if w * nf >= 5.0 {
            expected.push(w * nf);
            observed.push(o as f64);
        } else {
            pooled_e += w * nf;
            pooled_o += o;
        }
    }
    pooled_o += counts.values().sum::<usize>();
    if pooled_e > 0.0 || pooled_o > 0 {
        expected.push(pooled_e.max(f64::MIN_POSITIVE));
        observed.push(pooled_o as f64);
    }
    let statistic: f64 = expected.iter().zip(&observed).map(|(e, o)| (o - e) * (o - e) / e).sum();
    let bins = expected.len();
    if bins < 2 {
        return Ok(ChiSquareTest { statistic, dof: 0, p_value: 1.0, bins });
    }
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidParams(e.to_string()))?;
    Ok(ChiSquareTest { statistic, dof, p_value: dist.sf(statistic), bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::telescope;
    use crate::lattice::LatticePoint;
    use crate::scalar::rat;

    fn qp() -> QParams {
        QParams::canonical()
    }

    fn cfg(s: &str) -> Config {
        s.parse().unwrap()
    }

    #[test]
    fn seeds_are_reproducible() {
        let s = Sampler::new(&qp(), &rat(1, 1 << 20));
        let x = cfg("-:0,+:2,+:0");
        let a = s.sample_many(&x, 1, 3000, 7).unwrap();
        let b = Sampler::new(&qp(), &rat(1, 1 << 20)).sample_many(&x, 1, 3000, 7).unwrap();
        assert_eq!(a, b);
        let c = s.sample_many(&x, 1, 3000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn two_point_link_frequencies() {
        let s = Sampler::new(&qp(), &rat(1, 1 << 20));
        let x = cfg("+:2,+:0");
        let ys = s.sample_many(&x, 1, 30000, 1).unwrap();
        let ones = ys.iter().filter(|y| **y == cfg("+:0")).count() as f64 / 30000.0;
        assert!((ones - 2.0 / 3.0).abs() < 0.01, "{ones}");
    }

    #[test]
    fn deterministic_support() {
        let s = Sampler::new(&qp(), &rat(1, 1 << 20));
        let x = cfg("+:1,+:0");
        let mut rng = RngState::new(3);
        let first = s.sample_link(&x, &mut rng).unwrap();
        for _ in 0..100 {
            assert_eq!(s.sample_link(&x, &mut rng).unwrap(), first);
        }
        assert_eq!(first.len(), 1);
    }

    #[test]
    fn chains_interlace_and_round_trip() {
        let s = Sampler::new(&qp(), &rat(1, 1 << 20));
        let x = cfg("-:1,-:3,+:4,+:0");
        let mut rng = RngState::new(11);
        for _ in 0..200 {
            let t = s.sample_chain(&x, 1, &mut rng).unwrap();
            assert_eq!(t.levels.len(), 4);
            for w in t.levels.windows(2) {
                assert!(interlaces(&w[0], &w[1]).unwrap());
            }
            let back: Trajectory = t.to_string().parse().unwrap();
            assert_eq!(back, t);
        }
        let t = s.sample_chain(&cfg("+:1,+:0"), 1, &mut rng).unwrap();
        assert_eq!(t.levels.len(), 2);
        assert!(s.sample_chain(&x, 4, &mut rng).is_err());
    }

    #[test]
    fn deficit_triggers_deepening() {
        // a coarse first cut forces the sampler to deepen
        let s = Sampler::new(&qp(), &rat(1, 4));
        let x = cfg("-:0,+:0");
        let ys = s.sample_many(&x, 1, 5000, 5).unwrap();
        assert!(ys.iter().any(|y| y.points()[0].exponent > 3));
        let deep = s.cache.read().unwrap()[&ExtConfig::from(x)].min_abs.clone();
        assert!(deep < rat(1, 4));
    }

    #[test]
    fn chi_square_against_telescope() {
        let p = qp();
        let s = Sampler::new(&p, &rat(1, 1 << 20));
        let x = cfg("+:3,+:2,+:0");
        let exact = telescope::<Rational>(&ExtConfig::from(x.clone()), 1, &rat(1, 8), 0.0, &p).unwrap().to_f64();
        let t = chi_square_test(&s, &x, 1, &exact, 30000, 2).unwrap();
        assert!(t.p_value > 0.001, "{t:?}");
        assert!(t.bins >= 2);
        // a wrong table is rejected
        let mut wrong = exact.clone();
        let key = ExtConfig::from(Config::new(vec![LatticePoint::plus(0)]).unwrap());
        let w = wrong.atoms[&key];
        wrong.atoms.insert(key, w * 0.8);
        let t = chi_square_test(&s, &x, 1, &wrong, 30000, 2).unwrap();
        assert!(t.p_value < 1e-6);
    }

    #[test]
    fn moment_z_scores() {
        let s = Sampler::new(&qp(), &rat(1, 1 << 24));
        let empty = Partition::empty();
        let t = empirical_moment_test(&s, &cfg("+:3,+:2,+:0"), 2, &empty, 100, 1).unwrap();
        assert_eq!(t.z, 0.0);
        let one: Partition = "[1]".parse().unwrap();
        let t = empirical_moment_test(&s, &cfg("+:3,+:2,+:0"), 2, &one, 20000, 4).unwrap();
        assert!(t.z.abs() < 4.0, "{t:?}");
        let t = empirical_moment_test(&s, &cfg("-:0,+:0"), 1, &one, 20000, 4).unwrap();
        assert!(t.z.abs() < 4.0, "{t:?}");
    }
}
