//! Prior and posterior content curves, the iterative construction of a
//! reference density that is flat in `F`, and the F-likelihood.
//!
//! Round `n` of the iteration samples `w_r(p)/W⁽ⁿ⁾(f(p))`, measures the content
//! curve `P⁽ⁿ⁾(F)` of that sample, stops if it is within `tolerance` of the
//! straight line, and otherwise fits it and multiplies its derivative into
//! the reference: `W⁽ⁿ⁺¹⁾ = W⁽ⁿ⁾ · dP⁽ⁿ⁾/du`. The product of all factors is the
//! induced prior density `W_r,0(F)`.
//!
//! A posterior sample drawn with the same divisor has the F-density
//! `L(D|F) · W_r,0(F)/W⁽ⁿ⁾(F)`, so the F-likelihood is the density of the
//! posterior sample with respect to the prior content of the last round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_beta_mixture, fit_fourier_positive, BetaMixtureSpec, FitModel, FourierOptions, Parity};
use crate::properties::Property;
use crate::sampling::{sample, BasePrior, DensitySpec, Diagnostics, Reweight, SampleSet, SamplerConfig};
use crate::state::Counts;

/// Default number of grid points per property range.
pub const GRID_SIZE: usize = 201;

/// Prior content slopes below this (in `u` units) mark excluded likelihood points.
const RATIO_FLOOR: f64 = 1e-12;

/// Empirical content `P(F)` on an equally spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentCurve {
    pub f_min: f64,
    pub f_max: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub mc_sigma: Vec<f64>,
    /// Effective number of sample points behind the estimate.
    pub n_sample: f64,
    pub fit: Option<FitModel>,
}

impl ContentCurve {
    pub fn unit_grid(&self) -> Vec<f64> {
        self.grid.iter().map(|f| (f - self.f_min) / (self.f_max - self.f_min)).collect()
    }

    /// `sup |P(F) - u(F)|` over the grid.
    pub fn sup_deviation_from_line(&self) -> f64 {
        self.unit_grid()
            .iter()
            .zip(&self.values)
            .map(|(u, p)| (p - u).abs())
            .fold(0.0, f64::max)
    }

    /// Fitted density `W(F)`; requires a fit.
    pub fn density(&self, f: f64) -> Result<f64> {
        self.fit
            .as_ref()
            .map(|m| m.density(f))
            .ok_or_else(|| Error::InvalidInput("content curve has no fit".into()))
    }

    /// Weighted mean and variance of `u` implied by the curve.
    pub fn unit_moments(&self) -> (f64, f64) {
        let u = self.unit_grid();
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 1..u.len() {
            let dp = self.values[i] - self.values[i - 1];
            let mid = 0.5 * (u[i] + u[i - 1]);
            m1 += dp * mid;
            m2 += dp * mid * mid;
        }
        let tot = self.values[u.len() - 1] - self.values[0];
        let m = m1 / tot;
        (m, (m2 / tot - m * m).max(1e-12))
    }
}

/// Weighted empirical content of `values` on a `grid_size`-point grid over `range`.
pub fn content_from_values(values: &[f64], weights: &[f64], range: (f64, f64), grid_size: usize) -> Result<ContentCurve> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::InvalidInput("empty or mismatched sample".into()));
    }
    if grid_size < 2 || !(range.1 > range.0) {
        return Err(Error::InvalidInput("invalid content grid".into()));
    }
    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("sample weights sum to zero".into()));
    }
    let n_eff = total * total / sum_sq;
    let (lo, hi) = range;
    let grid: Vec<f64> = (0..grid_size).map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64).collect();
    let mut values_out = Vec::with_capacity(grid_size);
    let mut acc = 0.0;
    let mut j = 0;
    for (i, &f) in grid.iter().enumerate() {
        let last = i + 1 == grid_size;
        while j < pairs.len() && (pairs[j].0 <= f || last) {
            acc += pairs[j].1;
            j += 1;
        }
        values_out.push((acc / total).clamp(0.0, 1.0));
    }
    let mc_sigma = values_out.iter().map(|p| (p * (1.0 - p) / n_eff).sqrt()).collect();
    Ok(ContentCurve { f_min: lo, f_max: hi, grid, values: values_out, mc_sigma, n_sample: n_eff, fit: None })
}

/// `P(F)` = weighted fraction of the sample with `f(p) ≤ F`.
pub fn empirical_content(s: &SampleSet, f: Property, grid_size: usize) -> Result<ContentCurve> {
    if s.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let mut c = content_from_values(&s.property_values(f), &s.weights, f.range(), grid_size)?;
    // Chain correlation shrinks the effective size below the weight-based one.
    if let Some(d) = &s.diagnostics {
        let ratio = (d.ess / s.len() as f64).clamp(f64::MIN_POSITIVE, 1.0);
        c.n_sample *= ratio;
        c.mc_sigma.iter_mut().for_each(|sigma| *sigma /= ratio.sqrt());
    }
    Ok(c)
}

/// Model family and structure for a content fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitSpec {
    Fourier(FourierOptions),
    BetaMixture(BetaMixtureSpec),
    /// Beta mixture with `terms` free terms, exponents `≥ min`, started from the curve's moments.
    FreeBeta { terms: usize, min: f64 },
}

/// Fit a content curve; the fit is also stored in the curve.
pub fn fit_content(curve: &mut ContentCurve, spec: &FitSpec) -> Result<FitModel> {
    let u = curve.unit_grid();
    let range = (curve.f_min, curve.f_max);
    let model = match spec {
        FitSpec::Fourier(opts) => fit_fourier_positive(range, &u, &curve.values, opts)?.0,
        FitSpec::BetaMixture(b) => fit_beta_mixture(range, &u, &curve.values, b)?,
        FitSpec::FreeBeta { terms, min } => {
            let (m, v) = curve.unit_moments();
            fit_beta_mixture(range, &u, &curve.values, &BetaMixtureSpec::free(*terms, *min, m, v))?
        }
    };
    curve.fit = Some(model.clone());
    Ok(model)
}

/// Product of fitted unit densities, floored relative to its mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDensity {
    pub f_min: f64,
    pub f_max: f64,
    pub factors: Vec<FitModel>,
    /// Lower bound on the product, as a fraction of its mean over the range.
    pub floor: f64,
    floor_abs: f64,
    /// `∫ W du` of the floored product.
    norm: f64,
}

impl ReferenceDensity {
    pub fn flat(range: (f64, f64), floor: f64) -> Self {
        Self { f_min: range.0, f_max: range.1, factors: Vec::new(), floor, floor_abs: 0.0, norm: 1.0 }
    }

    pub fn times(&self, factor: FitModel) -> Self {
        let mut factors = self.factors.clone();
        factors.push(factor);
        let mut r = Self { factors, ..self.clone() };
        let n = 4000;
        let raw: Vec<f64> = (0..n).map(|i| r.raw_unit((i as f64 + 0.5) / n as f64)).collect();
        let mean = raw.iter().map(|v| v.max(0.0)).sum::<f64>() / n as f64;
        r.floor_abs = r.floor * mean;
        r.norm = raw.iter().map(|v| v.max(r.floor_abs)).sum::<f64>() / n as f64;
        r
    }

    fn raw_unit(&self, u: f64) -> f64 {
        self.factors.iter().map(|m| m.density_unit(u)).product::<f64>()
    }

    /// Normalized density in `u` (mean 1 over `[0, 1]`).
    pub fn density_unit(&self, u: f64) -> f64 {
        self.raw_unit(u.clamp(0.0, 1.0)).max(self.floor_abs) / self.norm
    }

    /// Normalized density `W(F)` (integrates to 1 over the range).
    pub fn density(&self, f: f64) -> f64 {
        self.density_unit((f - self.f_min) / (self.f_max - self.f_min)) / (self.f_max - self.f_min)
    }
}

/// Settings of the reference-density iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationConfig {
    /// Maximum number of density updates; at most `rounds + 1` prior samples are drawn.
    pub rounds: usize,
    /// Escape when `sup |P⁽ⁿ⁾ - line| ≤ tolerance`.
    pub tolerance: f64,
    pub grid_size: usize,
    /// Model for the first prior round; later rounds use `fourier`.
    pub first_fit: Option<FitSpec>,
    pub fourier: FourierOptions,
    pub posterior_fit: FitSpec,
    /// Floor of the reference divisor relative to its mean.
    pub reference_floor: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            rounds: 3,
            tolerance: 0.01,
            grid_size: GRID_SIZE,
            first_fit: None,
            fourier: FourierOptions::default(),
            posterior_fit: FitSpec::FreeBeta { terms: 3, min: 0.0 },
            reference_floor: 1e-6,
        }
    }
}

impl IterationConfig {
    /// Defaults tailored to a property: beta mixtures for the first round and
    /// even-only Fourier terms for the symmetric CHSH quantity.
    pub fn for_property(f: Property) -> Self {
        let mut c = Self::default();
        match f {
            Property::Chsh => {
                c.first_fit = Some(FitSpec::BetaMixture(BetaMixtureSpec::chsh()));
                c.fourier.parity = Parity::Even;
            }
            Property::ChshOpt => c.first_fit = Some(FitSpec::BetaMixture(BetaMixtureSpec::chsh_opt())),
            // Qubit contents can have integrable singularities at the ends.
            Property::Fidelity | Property::Purity => c.first_fit = Some(FitSpec::FreeBeta { terms: 3, min: 0.0 }),
            Property::Component(_) => {}
        }
        c
    }
}

/// Record of one prior round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub n: usize,
    pub sup_dev: f64,
    pub n_sample: usize,
    pub fit: FitModel,
    /// Order cap of an accepted Fourier fit if it had to be lowered for positivity.
    pub reduced_order: Option<usize>,
    pub diagnostics: Option<Diagnostics>,
}

/// Outcome of the prior-side iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationResult {
    pub property: Property,
    pub base: BasePrior,
    /// Divisor used in the last round, `W⁽ⁿ⁾`.
    pub reference: ReferenceDensity,
    /// Content curve of the last round with its fit.
    pub last_curve: ContentCurve,
    /// First-round content curve with its fit (the plain prior content).
    pub first_curve: ContentCurve,
    pub trace: Vec<RoundTrace>,
    pub converged: bool,
}

impl IterationResult {
    /// Induced prior density `W_r,0 ∝ W⁽ⁿ⁾ · dP⁽ⁿ⁾/du`, with the last content
    /// taken as tabulated so that it matches the likelihood's prior map.
    pub fn induced_prior(&self) -> ReferenceDensity {
        let map = prior_content_map(&self.last_curve).expect("content curves run from 0 to 1");
        self.reference.times(map)
    }
}

fn reweight_for(property: Property, reference: &ReferenceDensity) -> Option<Reweight> {
    if reference.factors.is_empty() {
        return None;
    }
    let r = reference.clone();
    Some(Reweight::new(property, move |f| r.density(f)))
}

/// Sampler configuration for round `n`: distinct seeds per round.
fn round_sampler(base: &SamplerConfig, n: usize) -> SamplerConfig {
    SamplerConfig { seed: base.seed.wrapping_add(1000 * n as u64), ..base.clone() }
}

/// Run the prior-side iteration for `property` under the base prior.
pub fn iterate_reference(
    property: Property,
    base: BasePrior,
    cfg: &IterationConfig,
    sampler: &SamplerConfig,
) -> Result<IterationResult> {
    let scheme = property
        .scheme()
        .ok_or_else(|| Error::InvalidInput(format!("property {property} needs an explicit scheme")))?;
    iterate_reference_on(scheme, property, base, cfg, sampler)
}

/// [`iterate_reference`] with an explicit scheme, for scheme-agnostic properties.
pub fn iterate_reference_on(
    scheme: crate::state::Scheme,
    property: Property,
    base: BasePrior,
    cfg: &IterationConfig,
    sampler: &SamplerConfig,
) -> Result<IterationResult> {
    let range = property.range();
    let mut reference = ReferenceDensity::flat(range, cfg.reference_floor);
    let mut trace = Vec::new();
    let mut first_curve: Option<ContentCurve> = None;
    for n in 0..=cfg.rounds {
        let mut spec = DensitySpec::prior(scheme, base);
        spec.reweight = reweight_for(property, &reference);
        let s = sample(&spec, &round_sampler(sampler, n))?;
        let mut curve = empirical_content(&s, property, cfg.grid_size)?;
        let sup_dev = curve.sup_deviation_from_line();
        let escape = sup_dev <= cfg.tolerance;
        let (fit, reduced_order) = match (&cfg.first_fit, n) {
            (Some(first), 0) if !escape => (fit_content(&mut curve, first)?, None),
            _ => {
                let u = curve.unit_grid();
                let (m, order) = fit_fourier_positive(range, &u, &curve.values, &cfg.fourier)?;
                curve.fit = Some(m.clone());
                (m, (order < cfg.fourier.max_order).then_some(order))
            }
        };
        trace.push(RoundTrace {
            n,
            sup_dev,
            n_sample: s.len(),
            fit: fit.clone(),
            reduced_order,
            diagnostics: s.diagnostics.clone(),
        });
        if n == 0 {
            first_curve = Some(curve.clone());
        }
        if escape || n == cfg.rounds {
            return Ok(IterationResult {
                property,
                base,
                reference,
                last_curve: curve,
                first_curve: first_curve.expect("first round recorded"),
                trace,
                converged: escape,
            });
        }
        reference = reference.times(fit);
    }
    unreachable!("loop returns on its last round")
}

/// Normalized F-likelihood `L(D|F)/L_max`.
///
/// `L = dP_D/dP_0`, the posterior density taken with respect to the prior
/// content. The prior content `v = P_0(F)` of the last prior round is kept as
/// a tabulated map and the posterior content is fitted as a function of `v`,
/// so `L(F) = g'(P_0(F))`. This is the ratio `W_r,D/W_r,0` without dividing by
/// a separately fitted prior density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodCurve {
    pub f_min: f64,
    pub f_max: f64,
    /// `v = P_0(F)` of the prior sample.
    pub prior_content: FitModel,
    /// Posterior content as a function of `v`, on `[0, 1]`.
    pub posterior: FitModel,
    /// Multiplier making the maximum equal to 1.
    pub scale: f64,
    pub argmax: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Grid indices without prior mass nearby; their values are limits from
    /// the neighbouring prior content.
    pub excluded: Vec<usize>,
}

impl LikelihoodCurve {
    /// A flat likelihood, as for an empty data set.
    pub fn constant(range: (f64, f64), grid_size: usize) -> Self {
        Self::from_models(FitModel::line(range.0, range.1), FitModel::line(0.0, 1.0), grid_size)
    }

    fn raw(prior_content: &FitModel, posterior: &FitModel, u: f64) -> f64 {
        posterior.density_unit(prior_content.content_unit(u)).max(0.0)
    }

    /// Tabulate `g'(P_0(F))` and normalize its maximum to 1.
    pub fn from_models(prior_content: FitModel, posterior: FitModel, grid_size: usize) -> Self {
        let (lo, hi) = prior_content.range();
        let grid: Vec<f64> = (0..grid_size).map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64).collect();
        let unit = |f: f64| ((f - lo) / (hi - lo)).clamp(0.0, 1.0);
        let raw: Vec<f64> = grid.iter().map(|&f| Self::raw(&prior_content, &posterior, unit(f))).collect();
        let excluded = grid
            .iter()
            .enumerate()
            .filter(|(_, &f)| prior_content.density_unit(unit(f)) < RATIO_FLOOR)
            .map(|(i, _)| i)
            .collect();
        // Refine the maximum by golden-section search around the best grid point.
        let imax = raw.iter().enumerate().fold(0, |b, (i, &v)| if v > raw[b] { i } else { b });
        let ratio = |f: f64| Self::raw(&prior_content, &posterior, unit(f));
        let (mut a, mut b) = (grid[imax.saturating_sub(1)], grid[(imax + 1).min(grid_size - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if ratio(c) >= ratio(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let mut argmax = 0.5 * (a + b);
        let mut peak = ratio(argmax);
        if raw[imax] > peak {
            argmax = grid[imax];
            peak = raw[imax];
        }
        let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        let values = raw.iter().map(|v| (v * scale).min(1.0)).collect();
        Self { f_min: lo, f_max: hi, prior_content, posterior, scale, argmax, grid, values, excluded }
    }

    /// `L(D|F)/L_max` from the fitted models, off-grid.
    pub fn eval(&self, f: f64) -> f64 {
        if !(self.f_min..=self.f_max).contains(&f) {
            return 0.0;
        }
        let u = (f - self.f_min) / (self.f_max - self.f_min);
        (Self::raw(&self.prior_content, &self.posterior, u) * self.scale).min(1.0)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.f_min, self.f_max)
    }
}

/// Monotone tabulated map `v = P_0(F)` from a prior content curve.
pub fn prior_content_map(prior: &ContentCurve) -> Result<FitModel> {
    FitModel::tabulated(prior.f_min, prior.f_max, &prior.values)
}

/// Content of `values` measured in the prior-content variable `v`.
pub fn relative_content(map: &FitModel, values: &[f64], weights: &[f64], grid_size: usize) -> Result<ContentCurve> {
    let v: Vec<f64> = values.iter().map(|&f| map.content(f)).collect();
    content_from_values(&v, weights, (0.0, 1.0), grid_size)
}

/// `L(D|F) = W_r,D(F)/W_r,0(F)`, normalized to maximum 1.
///
/// `prior` is the prior content curve of the sample whose reference density
/// was also used for the posterior; `relative` is the fitted posterior content
/// in the prior-content variable (see [`relative_content`]).
pub fn f_likelihood(prior: &ContentCurve, relative: &ContentCurve) -> Result<LikelihoodCurve> {
    let Some(g) = &relative.fit else {
        return Err(Error::InvalidInput("the relative posterior content needs a fit".into()));
    };
    if relative.f_min != 0.0 || relative.f_max != 1.0 {
        return Err(Error::InvalidInput("the relative posterior content must live on [0, 1]".into()));
    }
    Ok(LikelihoodCurve::from_models(prior_content_map(prior)?, g.clone(), prior.grid.len()))
}

/// Posterior side of the estimation.
#[derive(Debug, Clone)]
pub struct PosteriorResult {
    /// Posterior content in `F`, unfitted.
    pub curve: ContentCurve,
    /// Posterior content in the prior-content variable, with its fit.
    pub relative: ContentCurve,
    pub likelihood: LikelihoodCurve,
    pub sample: SampleSet,
}

impl PosteriorResult {
    /// Fitted posterior density of the sample, `d g(P_0(F))/dF`.
    pub fn fitted_density(&self, f: f64) -> f64 {
        let l = &self.likelihood;
        let span = l.f_max - l.f_min;
        let u = ((f - l.f_min) / span).clamp(0.0, 1.0);
        l.posterior.density_unit(l.prior_content.content_unit(u)) * l.prior_content.density_unit(u) / span
    }
}

/// Sample the posterior under the final reference divisor, fit its content
/// relative to the last prior round and form the F-likelihood.
pub fn posterior_likelihood(
    it: &IterationResult,
    counts: &Counts,
    cfg: &IterationConfig,
    sampler: &SamplerConfig,
) -> Result<PosteriorResult> {
    let scheme = match it.property.scheme() {
        Some(s) => s,
        None => crate::state::Scheme::Simplex(counts.len()),
    };
    posterior_likelihood_on(scheme, it, counts, cfg, sampler)
}

/// [`posterior_likelihood`] with an explicit scheme.
pub fn posterior_likelihood_on(
    scheme: crate::state::Scheme,
    it: &IterationResult,
    counts: &Counts,
    cfg: &IterationConfig,
    sampler: &SamplerConfig,
) -> Result<PosteriorResult> {
    let range = it.property.range();
    if counts.total() == 0 {
        let mut relative = content_from_values(&[0.5], &[1.0], (0.0, 1.0), cfg.grid_size)?;
        relative.fit = Some(FitModel::line(0.0, 1.0));
        return Ok(PosteriorResult {
            curve: it.last_curve.clone(),
            relative,
            likelihood: LikelihoodCurve::constant(range, cfg.grid_size),
            sample: SampleSet::from_points(scheme, Vec::new(), Vec::new(), "empty".into(), sampler.seed)?,
        });
    }
    let mut spec = DensitySpec::prior(scheme, it.base).with_counts(counts.clone());
    spec.reweight = reweight_for(it.property, &it.reference);
    let s = sample(&spec, sampler)?;
    let values = s.property_values(it.property);
    let curve = content_from_values(&values, &s.weights, range, cfg.grid_size)?;
    let map = prior_content_map(&it.last_curve)?;
    let mut relative = relative_content(&map, &values, &s.weights, cfg.grid_size)?;
    fit_content(&mut relative, &cfg.posterior_fit)?;
    let likelihood = f_likelihood(&it.last_curve, &relative)?;
    Ok(PosteriorResult { curve, relative, likelihood, sample: s })
}

/// Which end of the range a tail exponent refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Lower,
    Upper,
}

/// Log-log slope of the fitted content near one end of the range.
///
/// For `Tail::Lower` this regresses `ln P` on `ln d` with `d = F - F_min`; for
/// `Tail::Upper` it uses `1 - P` and `d = F_max - F`. The distances are
/// log-spaced over `[window/100, window]`, `window` being a fraction of the range.
pub fn tail_exponent(model: &FitModel, tail: Tail, window: f64) -> f64 {
    let n = 60;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let d = window * 10f64.powf(-2.0 + 2.0 * i as f64 / (n - 1) as f64);
        let y = match tail {
            Tail::Lower => model.content_unit(d),
            Tail::Upper => model.survival_unit(1.0 - d),
        };
        if !(y > 0.0) {
            continue;
        }
        let (x, y) = (d.ln(), y.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Log-log slope of an empirical tail: regresses `ln P` on `ln d` over the
/// sample points in the outer `window` fraction of the range.
pub fn empirical_tail_exponent(values: &[f64], weights: &[f64], range: (f64, f64), tail: Tail, window: f64) -> Option<f64> {
    let span = range.1 - range.0;
    let total: f64 = weights.iter().sum();
    let mut d: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .map(|(&v, &w)| (match tail { Tail::Lower => v - range.0, Tail::Upper => range.1 - v } / span, w))
        .filter(|(x, _)| *x > 0.0 && *x <= window)
        .collect();
    if d.len() < 20 {
        return None;
    }
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut acc = 0.0;
    for (x, w) in d {
        acc += w;
        let (lx, ly) = (x.ln(), (acc / total).ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        m += 1.0;
    }
    Some((m * sxy - sx * sy) / (m * sxx - sx * sx))
}
