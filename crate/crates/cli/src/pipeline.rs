//! The stages of a run. Each stage reuses the files of earlier stages when
//! they were written under the same config hash and recomputes them otherwise.

use serde::{Deserialize, Serialize};
use spe_core::{
    intervals::{size_credibility, IntervalFamily, IntervalUnion, Plausible, PropertyPrior, Target, LAMBDA_CRIT_TOL, LAMBDA_GRID},
    marginal::{iterate_reference_on, posterior_likelihood_on, ContentCurve, IterationResult, LikelihoodCurve},
    sampling::{sample, DensitySpec, Diagnostics, SampleSet},
    state::{simulate_clicks, Counts},
};

use crate::config::{true_probabilities, DataSource, PipelineConfig, PriorKind, Resolved, Stage};
use crate::error::CliError;
use crate::output::OutputDir;

/// Largest allowed sup-norm residual of the size/credibility identity.
pub const CONSISTENCY_TOL: f64 = 0.01;

/// Rounding slack for `c_λ ≥ s_λ`.
const ORDER_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsFile {
    pub counts: Vec<u64>,
    pub true_probabilities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleFile {
    pub scheme: String,
    pub density: String,
    pub seed: u64,
    pub n_points: usize,
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalFile {
    pub iteration: IterationResult,
    pub likelihood: LikelihoodCurve,
    /// Posterior content in `F`.
    pub posterior_content: ContentCurve,
    /// Posterior content against the prior content, with its fit.
    pub relative_content: ContentCurve,
    pub posterior_diagnostics: Option<Diagnostics>,
}

/// Numerical cross-checks of an interval family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub lambda_crit_gap: f64,
    pub consistency_residual: f64,
    pub min_c_minus_s: f64,
    pub failures: Vec<String>,
}

impl Checks {
    pub fn of(fam: &IntervalFamily) -> Self {
        let lambda_crit_gap = (fam.lambda_crit_ratio - fam.lambda_crit_integral).abs();
        let consistency_residual = fam.consistency_residual();
        let min_c_minus_s = fam.c.iter().zip(&fam.s).map(|(c, s)| c - s).fold(f64::INFINITY, f64::min);
        let mut failures = Vec::new();
        if lambda_crit_gap > LAMBDA_CRIT_TOL {
            failures.push(format!(
                "λ_crit mismatch: ratio {:.4} vs ∫s dλ {:.4}",
                fam.lambda_crit_ratio, fam.lambda_crit_integral
            ));
        }
        if consistency_residual > CONSISTENCY_TOL {
            failures.push(format!("size/credibility residual {consistency_residual:.4} exceeds {CONSISTENCY_TOL}"));
        }
        if min_c_minus_s < -ORDER_SLACK {
            failures.push(format!("credibility below size by {:.2e}", -min_c_minus_s));
        }
        Self { lambda_crit_gap, consistency_residual, min_c_minus_s, failures }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// One smallest credible interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SciRow {
    pub credibility: f64,
    pub lambda: f64,
    pub size: f64,
    pub interval: IntervalUnion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    /// Largest credibility whose SCI lies above the threshold.
    pub max_credibility: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalsFile {
    pub family: IntervalFamily,
    pub plausible: Option<Plausible>,
    pub scis: Vec<SciRow>,
    pub threshold: Option<ThresholdRow>,
    pub checks: Checks,
}

/// The report: everything a reader needs without the curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub property: String,
    pub scheme: String,
    pub reference_prior: String,
    pub property_prior: PriorKind,
    pub counts: Vec<u64>,
    pub prior_rounds: usize,
    pub iteration_converged: bool,
    pub final_sup_dev: f64,
    pub f_ml: f64,
    pub f_bm: f64,
    pub lambda_crit: f64,
    pub lambda_crit_integral: f64,
    pub plausible: Option<Plausible>,
    pub scis: Vec<SciRow>,
    pub threshold: Option<ThresholdRow>,
    pub checks: Checks,
}

pub struct Pipeline {
    pub cfg: Resolved,
    pub out: OutputDir,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    // `xs` descends from 1 to 0.
    for i in 1..xs.len() {
        if xs[i] <= x {
            let t = if xs[i - 1] > xs[i] { (xs[i - 1] - x) / (xs[i - 1] - xs[i]) } else { 0.0 };
            return ys[i - 1] + t * (ys[i] - ys[i - 1]);
        }
    }
    ys[ys.len() - 1]
}

fn segments_text(iu: &IntervalUnion) -> String {
    iu.segments.iter().map(|(a, b)| format!("[{a:.4}, {b:.4}]")).collect::<Vec<_>>().join(" ∪ ")
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, CliError> {
        let outputs = cfg.outputs.clone();
        let cfg = cfg.resolve()?;
        let out = OutputDir::create(&outputs, &cfg.hash)?;
        Ok(Self { cfg, out })
    }

    /// Counts from the config, from `counts.json`, or simulated afresh.
    pub fn counts(&self) -> Result<CountsFile, CliError> {
        if let Some(c) = self.cfg.given_counts() {
            return Ok(CountsFile { counts: c.counts, true_probabilities: None });
        }
        match self.out.read_json("counts.json")? {
            Some(c) => Ok(c),
            None => self.simulate(),
        }
    }

    pub fn simulate(&self) -> Result<CountsFile, CliError> {
        let DataSource::Simulate(sim) = &self.cfg.raw.data else {
            return Err(CliError::Config("simulate needs a `simulate` data source".into()));
        };
        let p = true_probabilities(&sim.true_state, self.cfg.scheme)?;
        let counts = simulate_clicks(&p, sim.n, sim.seed);
        let file = CountsFile { counts: counts.counts, true_probabilities: Some(p.into()) };
        self.out.write_json("counts.json", Stage::Simulate.name(), &file)?;
        Ok(file)
    }

    /// Posterior sample under the reference prior, without the F-reweighting.
    pub fn sample(&self) -> Result<SampleSet, CliError> {
        let counts = Counts::new(self.counts()?.counts);
        let spec = DensitySpec::prior(self.cfg.scheme, self.cfg.raw.reference_prior).with_counts(counts);
        let s = sample(&spec, &self.cfg.sampler(Stage::Sample)).map_err(CliError::stage("sample"))?;
        let k = s.dim();
        let mut header: Vec<String> = (1..=k).map(|i| format!("p{i}")).collect();
        header.extend(["weight".to_string(), self.cfg.property.to_string()]);
        let rows = s.points().zip(&s.weights).map(|(p, &w)| {
            let mut row = p.to_vec();
            row.extend([w, self.cfg.property.eval(p)]);
            row
        });
        self.out.write_table("sample.csv", &header, rows)?;
        let meta = SampleFile {
            scheme: s.scheme.to_string(),
            density: s.density.clone(),
            seed: s.seed,
            n_points: s.len(),
            diagnostics: s.diagnostics.clone(),
        };
        self.out.write_json("sample.json", Stage::Sample.name(), &meta)?;
        Ok(s)
    }

    pub fn marginal(&self) -> Result<MarginalFile, CliError> {
        let counts = Counts::new(self.counts()?.counts);
        let c = &self.cfg;
        let iter_cfg = c.iteration();
        let prior_sampler = c.sampler(Stage::Marginal);
        let it = iterate_reference_on(c.scheme, c.property, c.raw.reference_prior, &iter_cfg, &prior_sampler)
            .map_err(CliError::stage("marginal"))?;
        // Prior rounds use seed + 1000n, so seed + 1 is free for the posterior.
        let mut post_sampler = prior_sampler.clone();
        post_sampler.seed = prior_sampler.seed.wrapping_add(1);
        let post = posterior_likelihood_on(c.scheme, &it, &counts, &iter_cfg, &post_sampler)
            .map_err(CliError::stage("marginal"))?;
        let file = MarginalFile {
            likelihood: post.likelihood,
            posterior_content: post.curve,
            relative_content: post.relative,
            posterior_diagnostics: post.sample.diagnostics,
            iteration: it,
        };
        self.write_marginal(&file)?;
        Ok(file)
    }

    fn write_marginal(&self, m: &MarginalFile) -> Result<(), CliError> {
        self.out.write_json("marginal.json", Stage::Marginal.name(), m)?;
        let it = &m.iteration;
        let header = ["f", "prior_content_first", "prior_content_last", "posterior_content"].map(String::from);
        let rows = (0..it.last_curve.grid.len()).map(|i| {
            vec![it.last_curve.grid[i], it.first_curve.values[i], it.last_curve.values[i], m.posterior_content.values[i]]
        });
        self.out.write_table("content.csv", &header, rows)?;
        let induced = it.induced_prior();
        let l = &m.likelihood;
        let header = ["f", "likelihood", "induced_prior_density"].map(String::from);
        let rows = l.grid.iter().zip(&l.values).map(|(&f, &v)| vec![f, v, induced.density(f)]);
        self.out.write_table("likelihood.csv", &header, rows)
    }

    fn load_marginal(&self) -> Result<MarginalFile, CliError> {
        match self.out.read_json("marginal.json")? {
            Some(m) => Ok(m),
            None => self.marginal(),
        }
    }

    /// Interval family, SCIs and checks; files are written before a failed
    /// check is reported.
    pub fn intervals(&self) -> Result<IntervalsFile, CliError> {
        let file = self.compute_intervals()?;
        Self::require(&file.checks)?;
        Ok(file)
    }

    fn require(checks: &Checks) -> Result<(), CliError> {
        if checks.passed() {
            Ok(())
        } else {
            Err(CliError::Diagnostic(checks.failures.join("; ")))
        }
    }

    fn compute_intervals(&self) -> Result<IntervalsFile, CliError> {
        let m = self.load_marginal()?;
        let prior = match self.cfg.raw.property_prior {
            PriorKind::Flat => PropertyPrior::flat(self.cfg.property.range()),
            PriorKind::Induced => PropertyPrior::Induced { reference: m.iteration.induced_prior() },
        };
        let fam = size_credibility(&m.likelihood, &prior, LAMBDA_GRID).map_err(CliError::stage("intervals"))?;
        let checks = Checks::of(&fam);
        let plausible = fam.plausible_interval().ok();
        let scis = self
            .cfg
            .raw
            .credibilities
            .iter()
            .map(|&c| {
                let lambda = match fam.lambda_for(Target::Credibility, c) {
                    Ok(l) => l,
                    // A flat likelihood gives every BLI full credibility; the tightest one is the SCI.
                    Err(_) if fam.c[0] >= c => fam.lambdas[0],
                    Err(e) => return Err(e),
                };
                Ok(SciRow {
                    credibility: c,
                    lambda,
                    size: interp(&fam.lambdas, &fam.s, lambda),
                    interval: spe_core::intervals::bli(&fam.likelihood, lambda),
                })
            })
            .collect::<spe_core::error::Result<Vec<_>>>()
            .map_err(CliError::stage("intervals"))?;
        let threshold =
            self.cfg.raw.threshold.map(|t| ThresholdRow { threshold: t, max_credibility: fam.max_credibility_above(t) });
        let file = IntervalsFile { family: fam, plausible, scis, threshold, checks };
        self.out.write_json("intervals.json", Stage::Intervals.name(), &file)?;
        let fam = &file.family;
        let header = ["lambda", "size", "credibility", "lower", "upper", "segments"].map(String::from);
        let rows = (0..fam.lambdas.len()).map(|i| {
            let iu = &fam.intervals[i];
            vec![fam.lambdas[i], fam.s[i], fam.c[i], iu.lower(), iu.upper(), iu.segments.len() as f64]
        });
        self.out.write_table("intervals.csv", &header, rows)?;
        Ok(file)
    }

    /// Full run: every missing stage, then `summary.json` and `summary.txt`.
    pub fn report(&self) -> Result<Summary, CliError> {
        let counts = self.counts()?;
        let m = self.load_marginal()?;
        let iv = match self.out.read_json::<IntervalsFile>("intervals.json")? {
            Some(iv) => iv,
            None => self.compute_intervals()?,
        };
        let it = &m.iteration;
        let summary = Summary {
            property: self.cfg.property.to_string(),
            scheme: self.cfg.scheme.to_string(),
            reference_prior: self.cfg.raw.reference_prior.to_string(),
            property_prior: self.cfg.raw.property_prior,
            counts: counts.counts,
            prior_rounds: it.trace.len(),
            iteration_converged: it.converged,
            final_sup_dev: it.trace.last().map_or(f64::NAN, |r| r.sup_dev),
            f_ml: iv.family.f_ml,
            f_bm: iv.family.f_bm,
            lambda_crit: iv.family.lambda_crit_ratio,
            lambda_crit_integral: iv.family.lambda_crit_integral,
            plausible: iv.plausible.clone(),
            scis: iv.scis.clone(),
            threshold: iv.threshold.clone(),
            checks: iv.checks.clone(),
        };
        self.out.write_json("summary.json", Stage::Report.name(), &summary)?;
        self.out.write_text("summary.txt", &render_summary(&summary))?;
        Self::require(&summary.checks)?;
        Ok(summary)
    }
}

/// Aligned plain-text report.
pub fn render_summary(s: &Summary) -> String {
    let mut t = String::new();
    let line = |t: &mut String, k: &str, v: String| t.push_str(&format!("{k:<24}{v}\n"));
    line(&mut t, "property", format!("{} on {}", s.property, s.scheme));
    line(&mut t, "reference prior", s.reference_prior.clone());
    line(&mut t, "property prior", format!("{:?}", s.property_prior).to_lowercase());
    line(&mut t, "counts", format!("{:?}", s.counts));
    line(&mut t, "prior rounds", format!("{} (converged: {}, sup dev {:.4})", s.prior_rounds, s.iteration_converged, s.final_sup_dev));
    line(&mut t, "F_ML / F_BM", format!("{:.4} / {:.4}", s.f_ml, s.f_bm));
    line(&mut t, "lambda_crit", format!("{:.4} (integral {:.4})", s.lambda_crit, s.lambda_crit_integral));
    match &s.plausible {
        Some(p) => line(&mut t, "plausible interval", format!("{}  size {:.3}  credibility {:.3}", segments_text(&p.interval), p.s, p.c)),
        None => line(&mut t, "plausible interval", "unavailable".into()),
    }
    if let Some(th) = &s.threshold {
        let v = th.max_credibility.map_or("none".to_string(), |c| format!("{c:.4}"));
        line(&mut t, &format!("SCI above {}", th.threshold), format!("up to credibility {v}"));
    }
    t.push_str(&format!("\n{:>12}{:>10}{:>10}  interval\n", "credibility", "lambda", "size"));
    for r in &s.scis {
        t.push_str(&format!("{:>12.3}{:>10.4}{:>10.4}  {}\n", r.credibility, r.lambda, r.size, segments_text(&r.interval)));
    }
    t.push('\n');
    line(&mut t, "lambda_crit gap", format!("{:.2e}", s.checks.lambda_crit_gap));
    line(&mut t, "consistency residual", format!("{:.2e}", s.checks.consistency_residual));
    line(&mut t, "min c - s", format!("{:.2e}", s.checks.min_c_minus_s));
    if s.checks.failures.is_empty() {
        line(&mut t, "checks", "passed".into());
    } else {
        for f in &s.checks.failures {
            line(&mut t, "FAILED", f.clone());
        }
    }
    t
}
