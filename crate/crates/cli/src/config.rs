//! Pipeline configuration: a single JSON document, validated up front.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spe_core::{
    marginal::IterationConfig,
    properties::Property,
    sampling::{BasePrior, SamplerConfig},
    state::{born_probabilities, physicality, Counts, DensityMatrix, ProbVector, Scheme},
};

use crate::error::CliError;

/// Pipeline stages; the index offsets the base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate = 0,
    Sample = 1,
    Marginal = 2,
    Intervals = 3,
    Report = 4,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Sample => "sample",
            Stage::Marginal => "marginal",
            Stage::Intervals => "intervals",
            Stage::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Flat,
    Induced,
}

/// State that generates simulated clicks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TrueState {
    Probabilities(Vec<f64>),
    /// Qubit Bloch vector.
    Bloch([f64; 3]),
    /// Two-qubit state with correlation diagonal `(x, y, z)`.
    BellDiagonal([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub true_state: TrueState,
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Counts(Vec<u64>),
    Simulate(SimulationSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    pub n_points: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Base seed; stage `k` uses `seed + k`.
    pub seed: u64,
    #[serde(default)]
    pub thin: Option<usize>,
    #[serde(default = "default_chains")]
    pub n_chains: usize,
}

fn default_burn_in() -> f64 {
    0.1
}

fn default_chains() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationSettings {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_rounds() -> usize {
    3
}

fn default_tolerance() -> f64 {
    0.01
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self { rounds: default_rounds(), tolerance: default_tolerance() }
    }
}

fn default_credibilities() -> Vec<f64> {
    vec![0.5, 0.68, 0.8, 0.9, 0.95, 0.99]
}

/// The JSON configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Needed only for properties that apply to any scheme, such as `p1`.
    #[serde(default)]
    pub scheme: Option<String>,
    pub property: String,
    pub reference_prior: BasePrior,
    pub property_prior: PriorKind,
    pub data: DataSource,
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub iteration: IterationSettings,
    /// Credibilities tabulated in the report.
    #[serde(default = "default_credibilities")]
    pub credibilities: Vec<f64>,
    /// Report the largest credibility whose SCI lies above this value.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Output directory; not part of the config hash.
    #[serde(skip_serializing)]
    pub outputs: PathBuf,
}

/// A validated configuration with names resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: PipelineConfig,
    pub scheme: Scheme,
    pub property: Property,
    pub hash: String,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    /// Replace every seed by `seed + stage index`.
    pub fn override_seed(&mut self, seed: u64) {
        self.sampler.seed = seed;
        if let DataSource::Simulate(sim) = &mut self.data {
            sim.seed = seed + Stage::Simulate as u64;
        }
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let property: Property = self.property.parse().map_err(|e| invalid(format!("{e}")))?;
        let scheme = match (&self.scheme, property.scheme()) {
            (Some(s), fixed) => {
                let s: Scheme = s.parse().map_err(|e| invalid(format!("{e}")))?;
                if fixed.is_some_and(|f| f != s) {
                    return Err(invalid(format!("property {property} is not defined on scheme {s}")));
                }
                if let Property::Component(k) = property {
                    if k >= s.outcomes() {
                        return Err(invalid(format!("{property} exceeds the {} outcomes of {s}", s.outcomes())));
                    }
                }
                s
            }
            (None, Some(s)) => s,
            (None, None) => return Err(invalid(format!("property {property} needs an explicit scheme"))),
        };
        let k = scheme.outcomes();
        match &self.data {
            DataSource::Counts(c) if c.len() != k => {
                return Err(invalid(format!("expected {k} counts for {scheme}, got {}", c.len())))
            }
            DataSource::Simulate(sim) => {
                true_probabilities(&sim.true_state, scheme)?;
            }
            _ => {}
        }
        let s = &self.sampler;
        if s.n_points == 0 || s.n_chains == 0 {
            return Err(invalid("sampler needs n_points ≥ 1 and n_chains ≥ 1"));
        }
        if !(0.0..1.0).contains(&s.burn_in) {
            return Err(invalid(format!("burn_in must lie in [0, 1), got {}", s.burn_in)));
        }
        if s.thin == Some(0) {
            return Err(invalid("thin must be at least 1"));
        }
        if !(self.iteration.tolerance > 0.0) {
            return Err(invalid("iteration tolerance must be positive"));
        }
        if let Some(c) = self.credibilities.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
            return Err(invalid(format!("credibilities must lie in (0, 1), got {c}")));
        }
        let (lo, hi) = property.range();
        if let Some(t) = self.threshold.filter(|t| !(lo..=hi).contains(t)) {
            return Err(invalid(format!("threshold {t} outside the range [{lo}, {hi}] of {property}")));
        }
        let hash = self.hash();
        Ok(Resolved { raw: self, scheme, property, hash })
    }
}

/// Probabilities of the configured true state under `scheme`.
pub fn true_probabilities(state: &TrueState, scheme: Scheme) -> Result<ProbVector, CliError> {
    let rho = match state {
        TrueState::Probabilities(p) => {
            let p = ProbVector::new(p.clone()).map_err(|e| invalid(format!("true state: {e}")))?;
            let phys = physicality(p.as_slice(), scheme).map_err(|e| invalid(format!("true state: {e}")))?;
            if !phys.physical {
                return Err(invalid("true state probabilities are not physical"));
            }
            return Ok(p);
        }
        TrueState::Bloch(r) => DensityMatrix::qubit(*r),
        TrueState::BellDiagonal([x, y, z]) => DensityMatrix::bell_diagonal(*x, *y, *z),
    }
    .map_err(|e| invalid(format!("true state: {e}")))?;
    let pom = scheme.pom().ok_or_else(|| invalid(format!("scheme {scheme} has no measurement for a density matrix")))?;
    born_probabilities(&rho, &pom).map_err(|e| invalid(format!("true state: {e}")))
}

impl Resolved {
    pub fn stage_seed(&self, stage: Stage) -> u64 {
        self.raw.sampler.seed.wrapping_add(stage as u64)
    }

    pub fn sampler(&self, stage: Stage) -> SamplerConfig {
        let s = &self.raw.sampler;
        SamplerConfig {
            burn_in: s.burn_in,
            thin: s.thin,
            n_chains: s.n_chains,
            ..SamplerConfig::new(s.n_points, self.stage_seed(stage))
        }
    }

    pub fn iteration(&self) -> IterationConfig {
        let mut c = IterationConfig::for_property(self.property);
        c.rounds = self.raw.iteration.rounds;
        c.tolerance = self.raw.iteration.tolerance;
        c
    }

    pub fn given_counts(&self) -> Option<Counts> {
        match &self.raw.data {
            DataSource::Counts(c) => Some(Counts::new(c.clone())),
            DataSource::Simulate(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit_json() -> serde_json::Value {
        serde_json::json!({
            "property": "purity",
            "reference_prior": "primitive",
            "property_prior": "induced",
            "data": {"counts": [2, 10, 11, 13]},
            "sampler": {"n_points": 1000, "seed": 3},
            "outputs": "out"
        })
    }

    fn parse(v: serde_json::Value) -> Result<Resolved, CliError> {
        serde_json::from_value::<PipelineConfig>(v).map_err(|e| invalid(e.to_string()))?.resolve()
    }

    #[test]
    fn resolves_scheme_from_property() {
        let r = parse(qubit_json()).unwrap();
        assert_eq!(r.scheme, Scheme::Tetrahedron);
        assert_eq!(r.stage_seed(Stage::Marginal), 5);
        assert_eq!(r.raw.iteration.rounds, 3);
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = parse(qubit_json()).unwrap();
        let mut v = qubit_json();
        v["outputs"] = "elsewhere".into();
        assert_eq!(a.hash, parse(v).unwrap().hash);
        let mut v = qubit_json();
        v["sampler"]["seed"] = 4.into();
        assert_ne!(a.hash, parse(v).unwrap().hash);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let mut v = qubit_json();
        v["data"]["counts"] = serde_json::json!([1, 2, 3]);
        assert!(parse(v).is_err());
        let mut v = qubit_json();
        v["property"] = "chsh".into();
        v["scheme"] = "qubit".into();
        assert!(parse(v).is_err());
        let mut v = qubit_json();
        v["sampler"] = serde_json::json!({"n_points": 10});
        assert!(parse(v).is_err(), "seeds are mandatory");
        let mut v = qubit_json();
        v["credibilities"] = serde_json::json!([1.0]);
        assert!(parse(v).is_err());
    }

    #[test]
    fn seed_override_reaches_simulation() {
        let mut v = qubit_json();
        v["data"] = serde_json::json!({"simulate": {"true_state": {"bloch": [0.0, 0.0, 0.9]}, "n": 50, "seed": 1}});
        let mut cfg: PipelineConfig = serde_json::from_value(v).unwrap();
        cfg.override_seed(100);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.stage_seed(Stage::Sample), 101);
        match r.raw.data {
            DataSource::Simulate(s) => assert_eq!(s.seed, 100),
            DataSource::Counts(_) => unreachable!(),
        }
    }
}
