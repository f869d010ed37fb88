//! Bounded-likelihood intervals and everything derived from them.
//!
//! A bounded-likelihood interval (BLI) is the superlevel set
//! `I_λ = {F : L(D|F) ≥ λ L_max}`. Its size `s_λ` is the prior content and its
//! credibility `c_λ` the posterior content. Smallest credible intervals (SCIs)
//! and maximum-likelihood intervals (MLIs) are BLIs picked by their
//! credibility or size. The plausible interval is the BLI at
//! `λ_crit = L(D)/L_max = ∫₀¹ s_λ dλ`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::marginal::{LikelihoodCurve, ReferenceDensity};
use crate::properties::Property;
use crate::sampling::SampleSet;
use crate::state::{log_point_likelihood, Counts};

/// Default number of λ grid points.
pub const LAMBDA_GRID: usize = 401;

/// Allowed gap between the two λ_crit computations.
pub const LAMBDA_CRIT_TOL: f64 = 0.01;

/// Fine quadrature grid for sizes and credibilities.
const QUAD_POINTS: usize = 4001;

/// Union of disjoint, ascending segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    pub segments: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn single(lo: f64, hi: f64) -> Self {
        Self { segments: vec![(lo, hi)] }
    }

    pub fn contains(&self, f: f64) -> bool {
        self.segments.iter().any(|&(a, b)| a <= f && f <= b)
    }

    /// `true` if every segment of `other` lies inside `self`.
    pub fn covers(&self, other: &IntervalUnion) -> bool {
        other
            .segments
            .iter()
            .all(|&(a, b)| self.segments.iter().any(|&(c, d)| c <= a && b <= d))
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|(a, b)| b - a).sum()
    }

    pub fn lower(&self) -> f64 {
        self.segments.first().map_or(f64::NAN, |s| s.0)
    }

    pub fn upper(&self) -> f64 {
        self.segments.last().map_or(f64::NAN, |s| s.1)
    }
}

/// Prior density `W_0(F)` of the property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropertyPrior {
    Flat { f_min: f64, f_max: f64 },
    /// Induced by the reference prior on the probability space.
    Induced { reference: ReferenceDensity },
}

impl PropertyPrior {
    pub fn flat(range: (f64, f64)) -> Self {
        PropertyPrior::Flat { f_min: range.0, f_max: range.1 }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            PropertyPrior::Flat { f_min, f_max } => (*f_min, *f_max),
            PropertyPrior::Induced { reference } => (reference.f_min, reference.f_max),
        }
    }

    pub fn density(&self, f: f64) -> f64 {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&f) {
            return 0.0;
        }
        match self {
            PropertyPrior::Flat { .. } => 1.0 / (hi - lo),
            PropertyPrior::Induced { reference } => reference.density(f),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PropertyPrior::Flat { .. } => "flat",
            PropertyPrior::Induced { .. } => "induced",
        }
    }
}

/// Superlevel sets of a likelihood curve, solved on a fine grid with
/// bisection refinement of every crossing.
struct LevelSets<'a> {
    l: &'a LikelihoodCurve,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> LevelSets<'a> {
    fn new(l: &'a LikelihoodCurve) -> Self {
        let (lo, hi) = l.range();
        let n = QUAD_POINTS;
        let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let values = grid.iter().map(|&f| l.eval(f)).collect();
        Self { l, grid, values }
    }

    fn crossing(&self, mut a: f64, mut b: f64, lambda: f64) -> f64 {
        // L(a) and L(b) sit on opposite sides of λ.
        let rising = self.l.eval(b) >= lambda;
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if (self.l.eval(m) >= lambda) == rising {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    fn bli(&self, lambda: f64) -> IntervalUnion {
        let (lo, hi) = self.l.range();
        if lambda <= 0.0 {
            return IntervalUnion::single(lo, hi);
        }
        // The maximum is normalized to 1; admit rounding at the top level.
        let lambda = lambda.min(1.0 - 1e-12);
        let mut segments = Vec::new();
        let mut start: Option<f64> = None;
        for i in 0..self.grid.len() {
            let inside = self.values[i] >= lambda;
            match (start, inside) {
                (None, true) => {
                    start = Some(if i == 0 { self.grid[0] } else { self.crossing(self.grid[i - 1], self.grid[i], lambda) });
                }
                (Some(s), false) => {
                    segments.push((s, self.crossing(self.grid[i - 1], self.grid[i], lambda)));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            segments.push((s, hi));
        }
        // The refined maximum can sit between grid points above a level that no grid point reaches.
        if segments.is_empty() {
            segments.push((self.l.argmax, self.l.argmax));
        }
        IntervalUnion { segments }
    }
}

/// `I_λ = {F : L(D|F) ≥ λ L_max}`.
pub fn bli(l: &LikelihoodCurve, lambda: f64) -> IntervalUnion {
    LevelSets::new(l).bli(lambda)
}

/// Cumulative integrals of `W_0` and `W_0 L` on the fine grid.
struct Quadrature {
    grid: Vec<f64>,
    cum_w: Vec<f64>,
    cum_wl: Vec<f64>,
}

impl Quadrature {
    fn new(l: &LikelihoodCurve, w0: &PropertyPrior) -> Self {
        let (lo, hi) = l.range();
        let n = QUAD_POINTS;
        let h = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let mut cum_w = vec![0.0; n];
        let mut cum_wl = vec![0.0; n];
        // Simpson's rule per cell using the cell midpoint.
        let mut prev = (w0.density(grid[0]), l.eval(grid[0]));
        for i in 1..n {
            let mid = 0.5 * (grid[i - 1] + grid[i]);
            let (wm, lm) = (w0.density(mid), l.eval(mid));
            let cur = (w0.density(grid[i]), l.eval(grid[i]));
            cum_w[i] = cum_w[i - 1] + h / 6.0 * (prev.0 + 4.0 * wm + cur.0);
            cum_wl[i] = cum_wl[i - 1] + h / 6.0 * (prev.0 * prev.1 + 4.0 * wm * lm + cur.0 * cur.1);
            prev = cur;
        }
        Self { grid, cum_w, cum_wl }
    }

    fn at(&self, cum: &[f64], f: f64) -> f64 {
        let n = self.grid.len();
        let (lo, hi) = (self.grid[0], self.grid[n - 1]);
        let x = ((f - lo) / (hi - lo) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let t = x - i as f64;
        cum[i] + t * (cum[i + 1] - cum[i])
    }

    fn over(&self, cum: &[f64], iu: &IntervalUnion) -> f64 {
        iu.segments.iter().map(|&(a, b)| self.at(cum, b) - self.at(cum, a)).sum()
    }

    fn total_w(&self) -> f64 {
        *self.cum_w.last().expect("grid is non-empty")
    }

    fn total_wl(&self) -> f64 {
        *self.cum_wl.last().expect("grid is non-empty")
    }
}

/// BLIs with size and credibility over a λ grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalFamily {
    /// Descending from 1 to 0.
    pub lambdas: Vec<f64>,
    pub intervals: Vec<IntervalUnion>,
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    /// `L(D)/L_max = ∫ W_0 L dF` with `L` normalized to maximum 1.
    pub lambda_crit_ratio: f64,
    /// `∫₀¹ s_λ dλ` by the trapezoid rule.
    pub lambda_crit_integral: f64,
    pub f_ml: f64,
    pub f_bm: f64,
    pub likelihood: LikelihoodCurve,
    pub prior: PropertyPrior,
}

/// Compute the BLI family on a uniform grid of `n_lambda` values.
pub fn size_credibility(l: &LikelihoodCurve, w0: &PropertyPrior, n_lambda: usize) -> Result<IntervalFamily> {
    if n_lambda < 2 {
        return Err(Error::InvalidInput("λ grid needs at least two points".into()));
    }
    if l.range() != w0.range() {
        return Err(Error::InvalidInput("likelihood and prior cover different ranges".into()));
    }
    let quad = Quadrature::new(l, w0);
    let norm = quad.total_w();
    if !((norm - 1.0).abs() < 1e-3) {
        return Err(Error::Numerical(format!("property prior integrates to {norm:.6}")));
    }
    let evidence = quad.total_wl() / norm;
    if !(evidence > 0.0) {
        return Err(Error::Numerical("likelihood vanishes under the prior".into()));
    }
    let sets = LevelSets::new(l);
    // Quadratic spacing resolves s(λ) near λ = 0, where sharp likelihoods put
    // all of the prior content.
    let lambdas: Vec<f64> = (0..n_lambda).map(|i| (1.0 - i as f64 / (n_lambda - 1) as f64).powi(2)).collect();
    let mut intervals = Vec::with_capacity(n_lambda);
    let mut s = Vec::with_capacity(n_lambda);
    let mut c = Vec::with_capacity(n_lambda);
    for &lam in &lambdas {
        let iu = sets.bli(lam);
        s.push((quad.over(&quad.cum_w, &iu) / norm).clamp(0.0, 1.0));
        c.push((quad.over(&quad.cum_wl, &iu) / (evidence * norm)).clamp(0.0, 1.0));
        intervals.push(iu);
    }
    // Enforce the monotonicity that the exact quantities have; quadrature of
    // nested sets can only violate it by rounding.
    for i in 1..n_lambda {
        s[i] = s[i].max(s[i - 1]);
        c[i] = c[i].max(c[i - 1]);
    }
    let integral = trapezoid(&lambdas, &s);
    let f_bm = {
        let mut acc = 0.0;
        for i in 1..quad.grid.len() {
            let (a, b) = (quad.grid[i - 1], quad.grid[i]);
            acc += 0.5 * (a + b) * (quad.cum_wl[i] - quad.cum_wl[i - 1]);
        }
        acc / quad.total_wl()
    };
    Ok(IntervalFamily {
        lambdas,
        intervals,
        s,
        c,
        lambda_crit_ratio: evidence,
        lambda_crit_integral: integral,
        f_ml: l.argmax,
        f_bm,
        likelihood: l.clone(),
        prior: w0.clone(),
    })
}

/// `∫ y dx` for a possibly descending `x`, returned with positive orientation.
fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[0] - xs[1]).abs())
        .sum()
}

/// Lookup target for [`interval_for_target`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Smallest credible interval with the given credibility.
    Credibility,
    /// Maximum-likelihood interval with the given size.
    Size,
}

impl IntervalFamily {
    /// λ at which the chosen curve takes `value`, by linear interpolation.
    pub fn lambda_for(&self, target: Target, value: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidInput(format!("target value {value} outside [0, 1]")));
        }
        let ys = match target {
            Target::Credibility => &self.c,
            Target::Size => &self.s,
        };
        let (first, last) = (ys[0], ys[ys.len() - 1]);
        if value < first - 1e-12 || value > last + 1e-12 {
            return Err(Error::InvalidInput(format!("target value {value} outside achieved range [{first}, {last}]")));
        }
        if value >= last {
            // The curve may reach its final value before λ = 0; take the largest such λ.
            let i = ys.iter().position(|&y| y >= last).expect("last value is attained");
            return Ok(self.lambdas[i]);
        }
        for i in 1..ys.len() {
            if ys[i] >= value {
                let (y0, y1) = (ys[i - 1], ys[i]);
                let t = if y1 > y0 { (value - y0) / (y1 - y0) } else { 1.0 };
                return Ok(self.lambdas[i - 1] + t * (self.lambdas[i] - self.lambdas[i - 1]));
            }
        }
        Ok(0.0)
    }

    /// Plausible interval bounds and its λ; fails if the two λ_crit
    /// computations disagree by more than [`LAMBDA_CRIT_TOL`].
    pub fn plausible_interval(&self) -> Result<Plausible> {
        let gap = (self.lambda_crit_ratio - self.lambda_crit_integral).abs();
        if gap > LAMBDA_CRIT_TOL {
            return Err(Error::Numerical(format!(
                "λ_crit mismatch: L(D)/L_max = {:.4}, ∫s dλ = {:.4}",
                self.lambda_crit_ratio, self.lambda_crit_integral
            )));
        }
        let lambda = self.lambda_crit_ratio;
        let interval = bli(&self.likelihood, lambda);
        let quad = Quadrature::new(&self.likelihood, &self.prior);
        let norm = quad.total_w();
        Ok(Plausible {
            lambda_crit: lambda,
            s: quad.over(&quad.cum_w, &interval) / norm,
            c: quad.over(&quad.cum_wl, &interval) / quad.total_wl(),
            interval,
        })
    }

    /// Largest deviation between `c_λ` and `(λ s_λ + ∫_λ¹ s dλ')/∫₀¹ s dλ'`.
    pub fn consistency_residual(&self) -> f64 {
        let total = self.lambda_crit_integral;
        let mut tail = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..self.lambdas.len() {
            if i > 0 {
                tail += 0.5 * (self.s[i] + self.s[i - 1]) * (self.lambdas[i - 1] - self.lambdas[i]);
            }
            let rhs = (self.lambdas[i] * self.s[i] + tail) / total;
            worst = worst.max((self.c[i] - rhs).abs());
        }
        worst
    }

    /// Largest credibility whose SCI lies entirely above `threshold`; `None`
    /// if even the top of the likelihood does not.
    pub fn max_credibility_above(&self, threshold: f64) -> Option<f64> {
        let above = |iu: &IntervalUnion| iu.lower() > threshold;
        let last = self.intervals.iter().take_while(|iu| above(iu)).count();
        if last == 0 {
            return None;
        }
        if last == self.intervals.len() {
            return Some(self.c[last - 1]);
        }
        // Intervals are nested, so the crossing sits between two grid λ.
        let sets = LevelSets::new(&self.likelihood);
        let (mut hi, mut lo) = (self.lambdas[last - 1], self.lambdas[last]);
        for _ in 0..50 {
            let m = 0.5 * (hi + lo);
            if above(&sets.bli(m)) {
                hi = m;
            } else {
                lo = m;
            }
        }
        let quad = Quadrature::new(&self.likelihood, &self.prior);
        Some(quad.over(&quad.cum_wl, &sets.bli(hi)) / quad.total_wl())
    }

    /// λ where `c_λ - s_λ` is largest.
    pub fn lambda_of_max_evidence_gap(&self) -> f64 {
        let i = (0..self.lambdas.len())
            .max_by(|&a, &b| (self.c[a] - self.s[a]).total_cmp(&(self.c[b] - self.s[b])))
            .expect("grid is non-empty");
        self.lambdas[i]
    }
}

/// SCI (by credibility) or MLI (by size).
pub fn interval_for_target(fam: &IntervalFamily, target: Target, value: f64) -> Result<IntervalUnion> {
    let lam = fam.lambda_for(target, value)?;
    Ok(bli(&fam.likelihood, lam))
}

/// The plausible interval with its size and credibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plausible {
    pub lambda_crit: f64,
    pub interval: IntervalUnion,
    pub s: f64,
    pub c: f64,
}

/// `λ_crit` and the plausible interval.
pub fn plausible_interval(fam: &IntervalFamily) -> Result<(f64, IntervalUnion)> {
    let p = fam.plausible_interval()?;
    Ok((p.lambda_crit, p.interval))
}

/// Maximum-likelihood and Bayesian-mean estimators of `F`.
pub fn point_estimators(l: &LikelihoodCurve, w0: &PropertyPrior) -> (f64, f64) {
    let quad = Quadrature::new(l, w0);
    let mut acc = 0.0;
    for i in 1..quad.grid.len() {
        acc += 0.5 * (quad.grid[i - 1] + quad.grid[i]) * (quad.cum_wl[i] - quad.cum_wl[i - 1]);
    }
    (l.argmax, acc / quad.total_wl())
}

/// Large-`N` approximations for a Gaussian likelihood of width `α/√N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianAsymptotics {
    pub lambda_crit: f64,
    pub s: f64,
    pub c: f64,
}

pub fn gaussian_asymptotics(w0_at_fml: f64, alpha: f64, n: u64) -> Result<GaussianAsymptotics> {
    if n == 0 || !(alpha > 0.0) {
        return Err(Error::InvalidInput("need N ≥ 1 and α > 0".into()));
    }
    let lambda_crit = w0_at_fml * alpha * (2.0 * std::f64::consts::PI / n as f64).sqrt();
    if !(lambda_crit < 1.0) {
        return Err(Error::InvalidInput(format!("λ_crit = {lambda_crit:.4} ≥ 1: asymptotics inapplicable")));
    }
    let ln = (1.0 / lambda_crit).ln();
    Ok(GaussianAsymptotics {
        lambda_crit,
        s: 2.0 * lambda_crit * (ln / std::f64::consts::PI).sqrt(),
        c: erf(ln.sqrt()),
    })
}

/// Property range read off a state-space bounded-likelihood region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IspeResult {
    pub interval: IntervalUnion,
    pub lambda: f64,
    /// Prior-sample fraction inside the region.
    pub size: f64,
    /// Posterior-sample fraction inside the region.
    pub credibility: f64,
    pub n_in_region: usize,
    /// Set when fewer than 100 posterior points fall into the region.
    pub too_few_points: bool,
}

/// Indirect estimate: the range of `f` over the state-space region
/// `{p : L(D|p) ≥ λ L_max}` whose posterior content is `credibility`.
pub fn ispe_range(
    prior_sample: &SampleSet,
    posterior_sample: &SampleSet,
    counts: &Counts,
    f: Property,
    credibility: f64,
) -> Result<IspeResult> {
    if prior_sample.scheme != posterior_sample.scheme {
        return Err(Error::InvalidInput("samples belong to different schemes".into()));
    }
    if !(0.0..=1.0).contains(&credibility) || posterior_sample.is_empty() {
        return Err(Error::InvalidInput("need a posterior sample and a credibility in [0, 1]".into()));
    }
    let post: Vec<(f64, f64, f64)> = posterior_sample
        .points()
        .zip(&posterior_sample.weights)
        .map(|(p, &w)| (log_point_likelihood(p, counts), w, f.eval(p)))
        .collect();
    let prior_ll: Vec<(f64, f64)> = prior_sample
        .points()
        .zip(&prior_sample.weights)
        .map(|(p, &w)| (log_point_likelihood(p, counts), w))
        .collect();
    let ll_max = post.iter().map(|t| t.0).chain(prior_ll.iter().map(|t| t.0)).fold(f64::NEG_INFINITY, f64::max);

    // Threshold = weighted (1 - credibility)-quantile of the posterior log-likelihoods.
    let mut sorted = post.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = sorted.iter().map(|t| t.1).sum();
    let mut acc = 0.0;
    let mut threshold = f64::NEG_INFINITY;
    for t in &sorted {
        acc += t.1;
        threshold = t.0;
        if acc >= credibility * total {
            break;
        }
    }
    if credibility == 0.0 {
        threshold = ll_max;
    }
    let inside: Vec<&(f64, f64, f64)> = post.iter().filter(|t| t.0 >= threshold).collect();
    let lo = inside.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
    let hi = inside.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    let cred = inside.iter().map(|t| t.1).sum::<f64>() / total;
    let prior_total: f64 = prior_ll.iter().map(|t| t.1).sum();
    let size = prior_ll.iter().filter(|t| t.0 >= threshold).map(|t| t.1).sum::<f64>() / prior_total.max(f64::MIN_POSITIVE);
    Ok(IspeResult {
        interval: IntervalUnion::single(lo, hi),
        lambda: (threshold - ll_max).exp(),
        size,
        credibility: cred,
        n_in_region: inside.len(),
        too_few_points: inside.len() < 100,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{BetaTerm, FitModel};

    /// Likelihood curve with the shape of a beta density over a flat prior content.
    fn beta_curve(alpha: f64, beta: f64, range: (f64, f64)) -> LikelihoodCurve {
        let g = FitModel::BetaMixture { f_min: 0.0, f_max: 1.0, terms: vec![BetaTerm { w: 1.0, alpha, beta }], rmse: 0.0 };
        LikelihoodCurve::from_models(FitModel::line(range.0, range.1), g, 201)
    }

    #[test]
    fn bli_extremes() {
        let l = beta_curve(20.0, 20.0, (0.0, 1.0));
        assert_eq!(bli(&l, 0.0), IntervalUnion::single(0.0, 1.0));
        let top = bli(&l, 1.0);
        assert!((top.lower() - 0.5).abs() < 1e-4 && top.length() < 1e-4);
        let half = bli(&l, 0.5);
        assert_eq!(half.segments.len(), 1);
        assert!(half.contains(0.5));
    }

    #[test]
    fn flat_likelihood_gives_full_range() {
        let l = LikelihoodCurve::constant((0.0, 1.0), 201);
        let fam = size_credibility(&l, &PropertyPrior::flat((0.0, 1.0)), LAMBDA_GRID).unwrap();
        let p = fam.plausible_interval().unwrap();
        assert!((p.lambda_crit - 1.0).abs() < 1e-9);
        assert!((p.interval.length() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sci_of_full_credibility_is_full_range() {
        let l = beta_curve(8.0, 12.0, (0.0, 1.0));
        let fam = size_credibility(&l, &PropertyPrior::flat((0.0, 1.0)), LAMBDA_GRID).unwrap();
        let full = interval_for_target(&fam, Target::Credibility, 1.0).unwrap();
        assert!(full.lower() < 1e-3 && full.upper() > 0.999);
        assert!(interval_for_target(&fam, Target::Credibility, 1.5).is_err());
        assert_eq!(fam.s[fam.s.len() - 1], 1.0);
        assert!((fam.c[fam.c.len() - 1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_asymptotics_examples() {
        let n = (2.0 * std::f64::consts::PI * 1e4).round() as u64;
        let g = gaussian_asymptotics(1.0, 1.0, n).unwrap();
        assert!((g.lambda_crit - 0.01).abs() < 1e-6);
        let g4 = gaussian_asymptotics(1.0, 1.0, 4 * n).unwrap();
        assert!((g4.lambda_crit / g.lambda_crit - 0.5).abs() < 1e-6);
        assert!(gaussian_asymptotics(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn credibility_above_threshold_of_symmetric_beta() {
        use statrs::function::beta::beta_reg;
        let l = beta_curve(20.0, 20.0, (0.0, 1.0));
        let fam = size_credibility(&l, &PropertyPrior::flat((0.0, 1.0)), LAMBDA_GRID).unwrap();
        // Terms are u^α (1-u)^β, a Beta(21, 21) posterior under the flat prior.
        // The SCI is symmetric about 1/2, so it clears 0.4 until it reaches [0.4, 0.6].
        let expected = beta_reg(21.0, 21.0, 0.6) - beta_reg(21.0, 21.0, 0.4);
        let got = fam.max_credibility_above(0.4).unwrap();
        assert!((got - expected).abs() < 1e-3, "{got} vs {expected}");
        assert_eq!(fam.max_credibility_above(0.7), None);
    }
}
