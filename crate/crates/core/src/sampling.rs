//! Prior and posterior densities on the physical probability space and MCMC
//! sampling from them.
//!
//! The sampler is a Metropolis–Hastings random walk on the open simplex with a
//! Dirichlet proposal centred on the current point. The concentration `κ` is
//! drawn from a fixed ladder at every step, so the kernel is a mixture of
//! reversible kernels and adapts to targets of very different widths (prior
//! samples versus posteriors for a few hundred clicks) without tuning.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::properties::Property;
use crate::state::{log_point_likelihood, physicality_unchecked, Counts, Scheme};

/// Proposal components below this are rejected; keeps the walk on the open simplex.
const MIN_COMPONENT: f64 = 1e-300;

/// Base prior densities on the probability space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasePrior {
    /// Uniform over the physical region.
    Primitive,
    /// `∝ (p_1 ⋯ p_K)^(-1/2)` on the physical region.
    Jeffreys,
}

impl std::str::FromStr for BasePrior {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primitive" => Ok(BasePrior::Primitive),
            "jeffreys" => Ok(BasePrior::Jeffreys),
            other => Err(Error::InvalidInput(format!("unknown prior '{other}'"))),
        }
    }
}

impl fmt::Display for BasePrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasePrior::Primitive => "primitive",
            BasePrior::Jeffreys => "jeffreys",
        })
    }
}

/// Divisor `W(f(p))` applied to the base density during the marginal iteration.
#[derive(Clone)]
pub struct Reweight {
    pub property: Property,
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Reweight {
    pub fn new(property: Property, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { property, density: Arc::new(density) }
    }

    pub fn eval(&self, f: f64) -> f64 {
        (self.density)(f)
    }
}

impl fmt::Debug for Reweight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reweight").field("property", &self.property).finish_non_exhaustive()
    }
}

/// Target density: base prior, optional reweighting divisor, optional likelihood.
#[derive(Debug, Clone)]
pub struct DensitySpec {
    pub scheme: Scheme,
    pub base: BasePrior,
    pub reweight: Option<Reweight>,
    pub counts: Option<Counts>,
}

impl DensitySpec {
    pub fn prior(scheme: Scheme, base: BasePrior) -> Self {
        Self { scheme, base, reweight: None, counts: None }
    }

    pub fn with_counts(mut self, counts: Counts) -> Self {
        self.counts = Some(counts);
        self
    }

    pub fn with_reweight(mut self, reweight: Reweight) -> Self {
        self.reweight = Some(reweight);
        self
    }

    /// Short human-readable description for sample metadata.
    pub fn describe(&self) -> String {
        let mut s = format!("{}:{}", self.scheme, self.base);
        if let Some(r) = &self.reweight {
            s.push_str(&format!("/W({})", r.property));
        }
        if let Some(c) = &self.counts {
            s.push_str(&format!("*L(N={})", c.total()));
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let k = self.scheme.outcomes();
        if let Some(c) = &self.counts {
            if c.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: c.len() });
            }
        }
        if let Some(r) = &self.reweight {
            if let Some(s) = r.property.scheme() {
                if s != self.scheme {
                    return Err(Error::InvalidInput(format!(
                        "property {} does not belong to scheme {}",
                        r.property, self.scheme
                    )));
                }
            }
        }
        Ok(())
    }

    /// Log target density (up to a constant) and the stored constraint weight,
    /// or `None` outside the support.
    ///
    /// The constraint weight (the feasible `q`-range for TAT) is not part of the
    /// target; it is carried as a sample weight and removed by
    /// [`bootstrap_unweight`] or by weighted estimators.
    pub fn log_density(&self, p: &[f64]) -> Option<(f64, f64)> {
        let phys = physicality_unchecked(p, self.scheme);
        if !phys.physical {
            return None;
        }
        let mut lt = 0.0;
        if self.base == BasePrior::Jeffreys {
            lt -= 0.5 * p.iter().map(|x| x.ln()).sum::<f64>();
        }
        if let Some(c) = &self.counts {
            lt += log_point_likelihood(p, c);
        }
        if let Some(r) = &self.reweight {
            let w = r.eval(r.property.eval(p));
            if !(w > 0.0) {
                return None;
            }
            lt -= w.ln();
        }
        lt.is_finite().then_some((lt, phys.weight))
    }
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_points: usize,
    /// Fraction of each chain discarded as burn-in.
    pub burn_in: f64,
    /// Steps between retained points; `None` picks it from a pilot run so that
    /// the effective sample size is at least `n_points / 10`.
    pub thin: Option<usize>,
    pub n_chains: usize,
    pub seed: u64,
    /// Dirichlet concentrations mixed by the proposal.
    pub kappa_ladder: Vec<f64>,
    pub pilot_steps: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_points: 500_000,
            burn_in: 0.1,
            thin: None,
            n_chains: 4,
            seed: 1,
            kappa_ladder: vec![30.0, 100.0, 300.0, 1e3, 3e3, 1e4, 3e4, 1e5],
            pilot_steps: 40_000,
        }
    }
}

impl SamplerConfig {
    pub fn new(n_points: usize, seed: u64) -> Self {
        Self { n_points, seed, ..Self::default() }
    }
}

/// Chain diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub acceptance_rate: f64,
    /// Effective sample size of the monitored scalar, summed over chains.
    pub ess: f64,
    pub thin: usize,
    pub burn_in_steps: usize,
    pub n_chains: usize,
    /// Integrated autocorrelation time of the monitor, in raw steps (pilot estimate).
    pub tau_pilot: f64,
    pub monitor: String,
    /// Whether `ess ≥ n_points / 10`.
    pub converged: bool,
}

/// A sample of probability vectors with constraint weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub scheme: Scheme,
    pub density: String,
    pub seed: u64,
    points: Vec<f64>,
    pub weights: Vec<f64>,
    pub diagnostics: Option<Diagnostics>,
}

impl SampleSet {
    /// Assemble a sample from flat row-major points.
    pub fn from_points(scheme: Scheme, points: Vec<f64>, weights: Vec<f64>, density: String, seed: u64) -> Result<Self> {
        let k = scheme.outcomes();
        if points.len() != k * weights.len() {
            return Err(Error::DimensionMismatch { expected: k * weights.len(), got: points.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("negative sample weight".into()));
        }
        Ok(Self { scheme, density, seed, points, weights, diagnostics: None })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.scheme.outcomes()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let k = self.dim();
        &self.points[i * k..(i + 1) * k]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim())
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.iter().any(|&w| w != self.weights[0])
    }

    pub fn property_values(&self, f: Property) -> Vec<f64> {
        self.points().map(|p| f.eval(p)).collect()
    }

    /// Error if the sampler flagged insufficient effective sample size.
    pub fn check_convergence(&self) -> Result<()> {
        match &self.diagnostics {
            Some(d) if !d.converged => Err(Error::Numerical(format!(
                "effective sample size {:.0} below {} for {}",
                d.ess,
                self.len() / 10,
                self.density
            ))),
            _ => Ok(()),
        }
    }
}

/// Resample proportionally to the weights; the result has unit weights.
pub fn bootstrap_unweight(s: &SampleSet, n_out: usize, seed: u64) -> Result<SampleSet> {
    if !s.weights.iter().any(|&w| w > 0.0) {
        return Err(Error::InvalidInput("all sample weights are zero".into()));
    }
    let k = s.dim();
    let mut points = Vec::with_capacity(n_out * k);
    if n_out > 0 {
        let alias = WeightedAliasIndex::new(s.weights.clone())
            .map_err(|e| Error::InvalidInput(format!("bad weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_out {
            points.extend_from_slice(s.point(alias.sample(&mut rng)));
        }
    }
    Ok(SampleSet {
        scheme: s.scheme,
        density: s.density.clone(),
        seed,
        points,
        weights: vec![1.0; n_out],
        diagnostics: s.diagnostics.clone(),
    })
}

struct Chain<'a> {
    spec: &'a DensitySpec,
    ladder: &'a [f64],
    rng: ChaCha8Rng,
    p: Vec<f64>,
    logt: f64,
    weight: f64,
    prop: Vec<f64>,
    accepted: u64,
    proposed: u64,
}

impl<'a> Chain<'a> {
    fn new(spec: &'a DensitySpec, ladder: &'a [f64], seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let p = initial_point(spec, &mut rng)?;
        let (logt, weight) = spec.log_density(&p).expect("initial point is in the support");
        let k = p.len();
        Ok(Self { spec, ladder, rng, p, logt, weight, prop: vec![0.0; k], accepted: 0, proposed: 0 })
    }

    fn step(&mut self) {
        self.proposed += 1;
        let kappa = self.ladder[self.rng.random_range(0..self.ladder.len())];
        let mut total = 0.0;
        for (x, &pi) in self.prop.iter_mut().zip(&self.p) {
            let g = Gamma::new(kappa * pi, 1.0).map_or(0.0, |d| d.sample(&mut self.rng));
            *x = g;
            total += g;
        }
        if !(total > 0.0) || !total.is_finite() {
            return;
        }
        for x in &mut self.prop {
            *x /= total;
        }
        if self.prop.iter().any(|&x| !(x > MIN_COMPONENT)) {
            return;
        }
        let Some((lt_new, w_new)) = self.spec.log_density(&self.prop) else {
            return;
        };
        // log q(p | p') - log q(p' | p) for the Dirichlet(κ·centre) proposal.
        let mut hastings = 0.0;
        for (&a, &b) in self.p.iter().zip(&self.prop) {
            hastings += -ln_gamma(kappa * b) + (kappa * b - 1.0) * a.ln();
            hastings -= -ln_gamma(kappa * a) + (kappa * a - 1.0) * b.ln();
        }
        let log_alpha = lt_new - self.logt + hastings;
        if log_alpha >= 0.0 || self.rng.random::<f64>().ln() < log_alpha {
            std::mem::swap(&mut self.p, &mut self.prop);
            self.logt = lt_new;
            self.weight = w_new;
            self.accepted += 1;
        }
    }
}

/// A random admissible point near the smoothed relative frequencies (or the
/// uniform point for a prior). The random offset keeps chains away from
/// isolated points where the reweighted target is singular.
fn initial_point(spec: &DensitySpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let k = spec.scheme.outcomes();
    let uniform = vec![1.0 / k as f64; k];
    let centre: Vec<f64> = match &spec.counts {
        Some(c) => {
            let n = c.total() as f64;
            c.counts.iter().map(|&x| (x as f64 + 1.0) / (n + k as f64)).collect()
        }
        None => uniform.clone(),
    };
    let unit = Gamma::new(1.0, 1.0).expect("valid shape");
    for t in (0..=10).map(|i| i as f64 / 10.0) {
        let base: Vec<f64> = centre.iter().zip(&uniform).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        for scale in [0.3, 0.1, 0.03, 0.01] {
            for _ in 0..20 {
                let d: Vec<f64> = (0..k).map(|_| unit.sample(rng)).collect();
                let sum: f64 = d.iter().sum();
                let p: Vec<f64> = base.iter().zip(&d).map(|(b, x)| (1.0 - scale) * b + scale * x / sum).collect();
                if spec.log_density(&p).is_some() {
                    return Ok(p);
                }
            }
        }
    }
    Err(Error::InvalidInput(format!("no admissible starting point for {}", spec.describe())))
}

fn monitor_value(spec: &DensitySpec, p: &[f64]) -> f64 {
    match &spec.reweight {
        Some(r) => r.property.eval(p),
        None => p[0],
    }
}

/// Integrated autocorrelation time with Geyer's initial positive sequence.
pub fn integrated_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let acf = |lag: usize| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * c0);
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n / 2 {
        let g = acf(2 * m) + acf(2 * m + 1);
        if g <= 0.0 {
            break;
        }
        // Initial monotone sequence.
        let g = g.min(prev);
        tau += 2.0 * g;
        prev = g;
        m += 1;
    }
    tau.max(1.0)
}

/// Effective sample size of a correlated sequence.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    x.len() as f64 / integrated_autocorrelation(x)
}

struct ChainRun {
    points: Vec<f64>,
    weights: Vec<f64>,
    monitor: Vec<f64>,
    accepted: u64,
    proposed: u64,
}

/// Draw an MCMC sample from `spec`; deterministic given `cfg.seed`.
pub fn sample(spec: &DensitySpec, cfg: &SamplerConfig) -> Result<SampleSet> {
    if cfg.n_points == 0 {
        return Err(Error::InvalidInput("n_points must be at least 1".into()));
    }
    if cfg.n_chains == 0 || cfg.kappa_ladder.is_empty() || !(0.0..1.0).contains(&cfg.burn_in) {
        return Err(Error::InvalidInput("invalid sampler configuration".into()));
    }
    spec.validate()?;
    let ladder = &cfg.kappa_ladder;

    let (thin, tau_pilot) = {
        let mut pilot = Chain::new(spec, ladder, cfg.seed, u64::MAX)?;
        let steps = cfg.pilot_steps.max(100);
        for _ in 0..steps / 2 {
            pilot.step();
        }
        let trace: Vec<f64> = (0..steps / 2)
            .map(|_| {
                pilot.step();
                monitor_value(spec, &pilot.p)
            })
            .collect();
        let tau = integrated_autocorrelation(&trace);
        let thin = cfg.thin.unwrap_or_else(|| (1.5 * tau / 10.0).ceil().max(1.0) as usize);
        (thin, tau)
    };

    let n_chains = cfg.n_chains.min(cfg.n_points);
    let runs: Vec<ChainRun> = (0..n_chains)
        .into_par_iter()
        .map(|c| -> Result<ChainRun> {
            let n_keep = cfg.n_points / n_chains + usize::from(c < cfg.n_points % n_chains);
            let mut chain = Chain::new(spec, ladder, cfg.seed, c as u64)?;
            let burn = ((n_keep * thin) as f64 * cfg.burn_in / (1.0 - cfg.burn_in)).ceil() as usize;
            for _ in 0..burn {
                chain.step();
            }
            let k = spec.scheme.outcomes();
            let mut run = ChainRun {
                points: Vec::with_capacity(n_keep * k),
                weights: Vec::with_capacity(n_keep),
                monitor: Vec::with_capacity(n_keep),
                accepted: 0,
                proposed: 0,
            };
            chain.accepted = 0;
            chain.proposed = 0;
            for _ in 0..n_keep {
                for _ in 0..thin {
                    chain.step();
                }
                run.points.extend_from_slice(&chain.p);
                run.weights.push(chain.weight);
                run.monitor.push(monitor_value(spec, &chain.p));
            }
            run.accepted = chain.accepted;
            run.proposed = chain.proposed;
            Ok(run)
        })
        .collect::<Result<_>>()?;

    let burn_in_steps = ((cfg.n_points / n_chains * thin) as f64 * cfg.burn_in / (1.0 - cfg.burn_in)).ceil() as usize;
    let ess: f64 = runs.iter().map(|r| effective_sample_size(&r.monitor)).sum();
    let accepted: u64 = runs.iter().map(|r| r.accepted).sum();
    let proposed: u64 = runs.iter().map(|r| r.proposed).sum();
    let mut points = Vec::with_capacity(cfg.n_points * spec.scheme.outcomes());
    let mut weights = Vec::with_capacity(cfg.n_points);
    for r in runs {
        points.extend(r.points);
        weights.extend(r.weights);
    }
    let diagnostics = Diagnostics {
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        ess,
        thin,
        burn_in_steps,
        n_chains,
        tau_pilot,
        monitor: spec.reweight.as_ref().map_or("p1".to_string(), |r| r.property.to_string()),
        converged: ess >= cfg.n_points as f64 / 10.0,
    };
    Ok(SampleSet {
        scheme: spec.scheme,
        density: spec.describe(),
        seed: cfg.seed,
        points,
        weights,
        diagnostics: Some(diagnostics),
    })
}
