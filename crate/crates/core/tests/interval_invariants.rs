use proptest::prelude::*;
use statrs::function::beta::beta_reg;
use spe_core::fit::{BetaTerm, FitModel};
use spe_core::intervals::{bli, interval_for_target, size_credibility, IntervalFamily, IntervalUnion, PropertyPrior, Target, LAMBDA_GRID};
use spe_core::marginal::{LikelihoodCurve, ReferenceDensity};

const RANGE: (f64, f64) = (-1.0, 2.0);

fn mixture(terms: &[(f64, f64, f64)]) -> FitModel {
    let total: f64 = terms.iter().map(|t| t.0).sum();
    FitModel::BetaMixture {
        f_min: 0.0,
        f_max: 1.0,
        terms: terms.iter().map(|&(w, alpha, beta)| BetaTerm { w: w / total, alpha, beta }).collect(),
        rmse: 0.0,
    }
}

fn likelihood_strategy() -> impl Strategy<Value = LikelihoodCurve> {
    prop::collection::vec((0.2f64..1.0, 0.0f64..40.0, 0.0f64..40.0), 1..3)
        .prop_map(|t| LikelihoodCurve::from_models(FitModel::line(RANGE.0, RANGE.1), mixture(&t), 201))
}

fn prior_strategy() -> impl Strategy<Value = PropertyPrior> {
    prop_oneof![
        Just(PropertyPrior::flat(RANGE)),
        (0.0f64..4.0, 0.0f64..4.0).prop_map(|(a, b)| PropertyPrior::Induced {
            reference: ReferenceDensity::flat(RANGE, 1e-6).times(mixture(&[(1.0, a, b)])),
        }),
    ]
}

fn family() -> impl Strategy<Value = IntervalFamily> {
    (likelihood_strategy(), prior_strategy()).prop_map(|(l, w)| size_credibility(&l, &w, LAMBDA_GRID).unwrap())
}

/// Largest λ spacing next to index `i`.
fn local_step(lambdas: &[f64], i: usize) -> f64 {
    let lo = if i > 0 { lambdas[i - 1] - lambdas[i] } else { 0.0 };
    let hi = if i + 1 < lambdas.len() { lambdas[i] - lambdas[i + 1] } else { 0.0 };
    lo.max(hi)
}

fn widened(iu: &IntervalUnion, eps: f64) -> IntervalUnion {
    IntervalUnion { segments: iu.segments.iter().map(|&(a, b)| (a - eps, b + eps)).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn blis_are_nested(l in likelihood_strategy(), pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 50)) {
        for (a, b) in pairs {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(widened(&bli(&l, lo), 1e-12).covers(&bli(&l, hi)), "λ = {lo} vs {hi}");
        }
    }

    #[test]
    fn ml_estimate_lies_in_every_bli(l in likelihood_strategy(), lams in prop::collection::vec(0.0f64..0.999, 20)) {
        for lam in lams {
            prop_assert!(widened(&bli(&l, lam), 1e-9).contains(l.argmax));
        }
    }

    #[test]
    fn credibility_follows_from_sizes(fam in family()) {
        prop_assert!(fam.consistency_residual() <= 0.01, "residual {}", fam.consistency_residual());
        prop_assert!((fam.lambda_crit_ratio - fam.lambda_crit_integral).abs() <= 0.01);
    }

    #[test]
    fn evidence_gap_peaks_at_lambda_crit(fam in family()) {
        for (c, s) in fam.c.iter().zip(&fam.s) {
            prop_assert!(c - s >= -1e-9);
        }
        let at = fam.lambda_of_max_evidence_gap();
        let i = fam.lambdas.iter().position(|&l| l == at).unwrap();
        // The continuous maximum sits within one cell of the grid maximum.
        let step = local_step(&fam.lambdas, i);
        prop_assert!((at - fam.lambda_crit_ratio).abs() <= step + 1e-9, "{at} vs {}", fam.lambda_crit_ratio);
    }

    #[test]
    fn sci_and_mli_are_the_grid_blis(fam in family(), k in 2usize..LAMBDA_GRID - 2) {
        for (target, ys) in [(Target::Credibility, &fam.c), (Target::Size, &fam.s)] {
            prop_assume!(ys[k - 1] < ys[k] && ys[k] < ys[k + 1]);
            let got = interval_for_target(&fam, target, ys[k]).unwrap();
            // Larger λ gives a smaller interval.
            prop_assert!(widened(&got, 1e-9).covers(&fam.intervals[k - 1]));
            prop_assert!(widened(&fam.intervals[k + 1], 1e-9).covers(&got));
        }
    }
}

#[test]
fn binomial_family_matches_closed_form() {
    // Flat prior on p, likelihood p^3 (1-p)^7.
    let (a, b) = (3.0, 7.0);
    let l = LikelihoodCurve::from_models(FitModel::line(0.0, 1.0), mixture(&[(1.0, a, b)]), 201);
    let fam = size_credibility(&l, &PropertyPrior::flat((0.0, 1.0)), LAMBDA_GRID).unwrap();
    let mode = a / (a + b);
    let ln_l = |p: f64| a * (p / mode).ln() + b * ((1.0 - p) / (1.0 - mode)).ln();
    let mut worst: f64 = 0.0;
    for (i, &lam) in fam.lambdas.iter().enumerate().filter(|(_, &lam)| lam > 0.0 && lam < 1.0) {
        let edge = |mut inside: f64, mut outside: f64| {
            for _ in 0..100 {
                let m = 0.5 * (inside + outside);
                if ln_l(m) >= lam.ln() {
                    inside = m;
                } else {
                    outside = m;
                }
            }
            inside
        };
        let (lo, hi) = (edge(mode, 0.0), edge(mode, 1.0));
        let c = beta_reg(a + 1.0, b + 1.0, hi) - beta_reg(a + 1.0, b + 1.0, lo);
        worst = worst.max((fam.s[i] - (hi - lo)).abs()).max((fam.c[i] - c).abs());
    }
    assert!(worst < 0.01, "sup deviation {worst:.2e}");
    // Prior-averaged likelihood over its maximum.
    let exact_crit = statrs::function::beta::beta(a + 1.0, b + 1.0) / (mode.powf(a) * (1.0 - mode).powf(b));
    assert!((fam.lambda_crit_ratio - exact_crit).abs() < 1e-4);
}
