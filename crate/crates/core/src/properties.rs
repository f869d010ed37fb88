//! Scalar state properties `f(p)` with their ranges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Scheme, TatParams};

const SQRT8: f64 = 2.828_427_124_746_190_3;
const RADICAND_TOL: f64 = 1e-12;

/// The properties estimated by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// Fidelity with the qubit target `|0⟩`, `√(1 - 2p_1)`.
    Fidelity,
    /// Normalized qubit purity `12 Σ p_k² - 3`.
    Purity,
    /// CHSH quantity for fixed settings, `√8 (3(p_1 + p_5 + p_9) - 1)`.
    Chsh,
    /// CHSH quantity for optimized settings.
    ChshOpt,
    /// A single probability `p_k` (zero-based index), on any scheme.
    Component(usize),
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Fidelity => "fidelity",
            Property::Purity => "purity",
            Property::Chsh => "chsh",
            Property::ChshOpt => "chsh_opt",
            Property::Component(_) => "component",
        }
    }

    /// The scheme the property is defined on; `None` if it applies to any.
    pub fn scheme(self) -> Option<Scheme> {
        match self {
            Property::Fidelity | Property::Purity => Some(Scheme::Tetrahedron),
            Property::Chsh | Property::ChshOpt => Some(Scheme::Tat),
            Property::Component(_) => None,
        }
    }

    /// `[F_min, F_max]`.
    pub fn range(self) -> (f64, f64) {
        match self {
            Property::Fidelity | Property::Purity | Property::Component(_) => (0.0, 1.0),
            Property::Chsh => (-SQRT8, SQRT8),
            Property::ChshOpt => (0.0, SQRT8),
        }
    }

    /// Whether the primitive prior content obeys `P(F) + P(-F) = 1`.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Property::Chsh)
    }

    /// Evaluate on a physical probability vector. Tiny overshoots from rounding
    /// are clamped to the range.
    pub fn eval(self, p: &[f64]) -> f64 {
        let v = match self {
            Property::Fidelity => (1.0 - 2.0 * p[0]).max(0.0).sqrt(),
            Property::Purity => purity_raw(p),
            Property::Chsh => chsh_fixed_raw(p),
            Property::ChshOpt => chsh_optimized_raw(p).max(0.0).sqrt(),
            Property::Component(k) => p[k],
        };
        let (lo, hi) = self.range();
        v.clamp(lo, hi)
    }

    /// Checked evaluation.
    pub fn try_eval(self, p: &[f64]) -> Result<f64> {
        let k = match self {
            Property::Component(k) => k + 1,
            _ => self.scheme().map_or(0, Scheme::outcomes),
        };
        if p.len() < k || (self.scheme().is_some() && p.len() != k) {
            return Err(Error::DimensionMismatch { expected: k, got: p.len() });
        }
        match self {
            Property::Fidelity => fidelity_qubit(p),
            Property::Purity => Ok(purity_qubit(p)),
            Property::Chsh => Ok(chsh_fixed(p)),
            Property::ChshOpt => chsh_optimized(p),
            Property::Component(k) => Ok(p[k]),
        }
    }
}

impl std::str::FromStr for Property {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fidelity" => Ok(Property::Fidelity),
            "purity" => Ok(Property::Purity),
            "chsh" => Ok(Property::Chsh),
            "chsh_opt" => Ok(Property::ChshOpt),
            other => match other.strip_prefix("p").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(Property::Component(k - 1)),
                _ => Err(Error::InvalidInput(format!("unknown property '{other}'"))),
            },
        }
    }
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Property::Component(k) => write!(f, "p{}", k + 1),
            other => f.write_str(other.name()),
        }
    }
}

/// `√(1 - 2p_1)`; rejects a radicand below `-1e-12`.
pub fn fidelity_qubit(p: &[f64]) -> Result<f64> {
    let rad = 1.0 - 2.0 * p[0];
    if rad < -RADICAND_TOL {
        return Err(Error::Unphysical(format!("fidelity radicand {rad:e} is negative")));
    }
    Ok(rad.max(0.0).sqrt())
}

/// `12 Σ p_k² - 3`.
pub fn purity_qubit(p: &[f64]) -> f64 {
    purity_raw(p)
}

fn purity_raw(p: &[f64]) -> f64 {
    12.0 * p.iter().map(|x| x * x).sum::<f64>() - 3.0
}

/// `√8 (3(p_1 + p_5 + p_9) - 1)`, affine in `p`.
pub fn chsh_fixed(p: &[f64]) -> f64 {
    chsh_fixed_raw(p)
}

fn chsh_fixed_raw(p: &[f64]) -> f64 {
    SQRT8 * (3.0 * (p[0] + p[4] + p[8]) - 1.0)
}

/// `2 ‖Y‖_F`, where `Y` is the xz-block of the correlation matrix.
pub fn chsh_optimized(p: &[f64]) -> Result<f64> {
    let rad = chsh_optimized_raw(p);
    if rad < -RADICAND_TOL {
        return Err(Error::Unphysical(format!("radicand {rad:e} is negative")));
    }
    Ok(rad.max(0.0).sqrt())
}

fn chsh_optimized_raw(p: &[f64]) -> f64 {
    let y = TatParams::from_probs(p).y;
    4.0 * y.iter().map(|v| v * v).sum::<f64>()
}

/// Fidelity between a qubit with Bloch vector `r` and a target with Bloch vector `t`.
pub fn fidelity_bloch(r: [f64; 3], t: [f64; 3]) -> f64 {
    let dot: f64 = r.iter().zip(&t).map(|(a, b)| a * b).sum();
    let r2: f64 = r.iter().map(|x| x * x).sum();
    let t2: f64 = t.iter().map(|x| x * x).sum();
    (0.5 * (1.0 + dot) + 0.5 * (1.0 - r2).max(0.0).sqrt() * (1.0 - t2).max(0.0).sqrt())
        .max(0.0)
        .sqrt()
}

/// Lower bound `√((1 - |t|)/2)` on [`fidelity_bloch`] for any `r`.
pub fn fidelity_lower_bound(t: [f64; 3]) -> f64 {
    let len = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    (0.5 * (1.0 - len)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRUE_TAT: [f64; 9] = [
        2.0 / 60.0, 9.0 / 60.0, 9.0 / 60.0, 9.0 / 60.0, 10.0 / 60.0,
        1.0 / 60.0, 9.0 / 60.0, 1.0 / 60.0, 10.0 / 60.0,
    ];
    const DATA_TAT: [f64; 9] = [9., 28., 30., 28., 27., 3., 29., 1., 25.];

    fn freqs() -> Vec<f64> {
        DATA_TAT.iter().map(|n| n / 180.0).collect()
    }

    #[test]
    fn fidelity_values() {
        let p = [0.025, 0.325, 0.325, 0.325];
        assert!((fidelity_qubit(&p).unwrap() - 0.95f64.sqrt()).abs() < 1e-15);
        assert!((fidelity_qubit(&p).unwrap() - 0.9747).abs() < 5e-5);
        assert_eq!(fidelity_qubit(&[0.5, 0.5, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(fidelity_qubit(&[0.0, 0.5, 0.5, 0.0]).unwrap(), 1.0);
        assert!(fidelity_qubit(&[0.6, 0.4, 0.0, 0.0]).is_err());
    }

    #[test]
    fn purity_values() {
        assert!(purity_qubit(&[0.25; 4]).abs() < 1e-15);
        assert!((purity_qubit(&[0.025, 0.325, 0.325, 0.325]) - 0.81).abs() < 1e-14);
        assert!((purity_qubit(&[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chsh_values() {
        assert!((chsh_fixed(&TRUE_TAT) - 0.2f64 * 2f64.sqrt()).abs() < 1e-14);
        assert!((chsh_fixed(&freqs()) - 2f64.sqrt() / 30.0).abs() < 1e-14);
        assert!(chsh_fixed(&[1.0 / 9.0; 9]).abs() < 1e-15);
    }

    #[test]
    fn chsh_opt_values() {
        assert!((chsh_optimized(&TRUE_TAT).unwrap() - 2.0 * 1.3f64.sqrt()).abs() < 1e-14);
        let want = 16.0 * 39f64.sqrt() / 45.0;
        assert!((chsh_optimized(&freqs()).unwrap() - want).abs() < 1e-13);
        assert!((want - 2.2204).abs() < 5e-5);
        assert!(chsh_optimized(&[1.0 / 9.0; 9]).unwrap().abs() < 1e-7);
    }

    #[test]
    fn bell_states_saturate() {
        for y in [[1.0, 0.0, 0.0, 1.0], [-1.0, 0.0, 0.0, -1.0]] {
            let p = TatParams { x: [0.0; 4], y }.probs();
            assert!((chsh_fixed(&p).abs() - SQRT8).abs() < 1e-12);
            assert!((chsh_optimized(&p).unwrap() - SQRT8).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_bloch_matches_p1_form() {
        let r = [0.3, -0.2, 0.5];
        let p = crate::state::tetra_probs(r);
        let a = fidelity_bloch(r, [0.0, 0.0, 1.0]);
        assert!((a - fidelity_qubit(&p).unwrap()).abs() < 1e-12);
        assert!(fidelity_lower_bound([0.0, 0.0, 1.0]) == 0.0);
    }

    #[test]
    fn names_round_trip() {
        for p in [Property::Fidelity, Property::Purity, Property::Chsh, Property::ChshOpt] {
            assert_eq!(p.name().parse::<Property>().unwrap(), p);
        }
    }
}
