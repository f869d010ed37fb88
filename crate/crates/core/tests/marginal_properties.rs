use spe_core::fit::{FitModel, FourierOptions, Parity};
use spe_core::intervals::{size_credibility, PropertyPrior, LAMBDA_GRID};
use spe_core::marginal::{
    empirical_content, f_likelihood, fit_content, iterate_reference, iterate_reference_on, posterior_likelihood_on,
    prior_content_map, relative_content, FitSpec, IterationConfig, LikelihoodCurve,
};
use spe_core::properties::Property;
use spe_core::sampling::{sample, BasePrior, DensitySpec, Reweight, SamplerConfig};
use spe_core::state::{Counts, Scheme};
use statrs::function::beta::beta_reg;

/// F-likelihood from one prior and one posterior sample, both drawn from
/// the primitive prior multiplied by `tilt(F)`.
fn likelihood_under_tilt(f: Property, counts: &Counts, tilt: Option<fn(f64) -> f64>, seed: u64) -> LikelihoodCurve {
    let mut spec = DensitySpec::prior(Scheme::Tetrahedron, BasePrior::Primitive);
    if let Some(g) = tilt {
        // The reweight is a divisor.
        spec = spec.with_reweight(Reweight::new(f, move |x| 1.0 / g(x)));
    }
    let prior = sample(&spec, &SamplerConfig::new(40_000, seed)).unwrap();
    let prior_curve = empirical_content(&prior, f, 201).unwrap();
    let post = sample(&spec.with_counts(counts.clone()), &SamplerConfig::new(40_000, seed + 1)).unwrap();
    let map = prior_content_map(&prior_curve).unwrap();
    let mut rel = relative_content(&map, &post.property_values(f), &post.weights, 201).unwrap();
    fit_content(&mut rel, &FitSpec::FreeBeta { terms: 3, min: 0.0 }).unwrap();
    f_likelihood(&prior_curve, &rel).unwrap()
}

fn mean_and_sd(curves: &[LikelihoodCurve]) -> (Vec<f64>, Vec<f64>) {
    let n = curves.len() as f64;
    let m = curves[0].values.len();
    let mean: Vec<f64> = (0..m).map(|i| curves.iter().map(|c| c.values[i]).sum::<f64>() / n).collect();
    let sd = (0..m)
        .map(|i| (curves.iter().map(|c| (c.values[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    (mean, sd)
}

#[test]
fn f_likelihood_ignores_prior_reweighting() {
    let counts = Counts::new(vec![2, 10, 11, 13]);
    let tilt: fn(f64) -> f64 = |x| 1.0 + 0.5 * (std::f64::consts::PI * x).sin();
    let f = Property::Purity;
    let reps = 4;
    let plain: Vec<_> = (0..reps).map(|r| likelihood_under_tilt(f, &counts, None, 100 + 10 * r)).collect();
    let tilted: Vec<_> = (0..reps).map(|r| likelihood_under_tilt(f, &counts, Some(tilt), 500 + 10 * r)).collect();
    let (m1, s1) = mean_and_sd(&plain);
    let (m2, s2) = mean_and_sd(&tilted);
    let gap = m1.iter().zip(&m2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // Sup-norm MC error of the difference of two replicate means.
    let sigma = s1.iter().zip(&s2).map(|(a, b)| ((a * a + b * b) / reps as f64).sqrt()).fold(0.0, f64::max);
    assert!(gap <= 3.0 * sigma, "sup gap {gap:.4} vs 3σ = {:.4}", 3.0 * sigma);
}

/// `p^a (1 - p)^b` normalized to maximum 1.
fn binomial_likelihood(a: u64, b: u64, p: f64) -> f64 {
    let mode = a as f64 / (a + b) as f64;
    let log = |x: f64| a as f64 * x.ln() + b as f64 * (1.0 - x).ln();
    if p <= 0.0 || p >= 1.0 {
        return if (a == 0 && p <= 0.0) || (b == 0 && p >= 1.0) { 1.0 } else { 0.0 };
    }
    (log(p) - log(mode)).exp()
}

/// Exact `(s_λ, c_λ)` for a flat prior: the BLI is `[lo, hi]` around the mode.
fn binomial_size_credibility(a: u64, b: u64, lambda: f64) -> (f64, f64) {
    let mode = a as f64 / (a + b) as f64;
    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..100 {
            let m = 0.5 * (inside + outside);
            if binomial_likelihood(a, b, m) >= lambda {
                inside = m;
            } else {
                outside = m;
            }
        }
        inside
    };
    let (lo, hi) = (edge(mode, 0.0), edge(mode, 1.0));
    let cdf = |x: f64| beta_reg(a as f64 + 1.0, b as f64 + 1.0, x);
    (hi - lo, cdf(hi) - cdf(lo))
}

#[test]
fn binomial_pipeline_tracks_quadrature() {
    let (a, b) = (3, 7);
    let counts = Counts::new(vec![a, b]);
    let f = Property::Component(0);
    let cfg = IterationConfig::default();
    let it = iterate_reference_on(Scheme::Simplex(2), f, BasePrior::Primitive, &cfg, &SamplerConfig::new(200_000, 31)).unwrap();
    let post = posterior_likelihood_on(Scheme::Simplex(2), &it, &counts, &cfg, &SamplerConfig::new(200_000, 32)).unwrap();
    let l = &post.likelihood;
    // The curve is a derivative and carries the MC error of the prior content.
    let worst_l = l.grid.iter().zip(&l.values).map(|(&p, &v)| (v - binomial_likelihood(a, b, p)).abs()).fold(0.0, f64::max);
    assert!(worst_l < 0.05, "likelihood sup deviation {worst_l:.4}");
    let prior = PropertyPrior::Induced { reference: it.induced_prior() };
    let fam = size_credibility(l, &prior, LAMBDA_GRID).unwrap();
    let mut worst: f64 = 0.0;
    for (i, &lam) in fam.lambdas.iter().enumerate().filter(|(_, &lam)| lam > 0.0 && lam < 1.0) {
        let (s, c) = binomial_size_credibility(a, b, lam);
        worst = worst.max((fam.s[i] - s).abs()).max((fam.c[i] - c).abs());
    }
    // Seed-to-seed spread at this size is about 0.015, mostly from locating the mode.
    assert!(worst <= 0.04, "size/credibility sup deviation {worst:.4}");
}

fn assert_nonnegative_density(m: &FitModel) {
    for i in 0..=2000 {
        let u = i as f64 / 2000.0;
        assert!(m.density_unit(u) >= 0.0, "{m:?} negative at u = {u}");
    }
}

#[test]
fn qubit_reference_fits_are_densities() {
    for f in [Property::Fidelity, Property::Purity] {
        let it = iterate_reference(f, BasePrior::Primitive, &IterationConfig::for_property(f), &SamplerConfig::new(30_000, 4)).unwrap();
        for round in &it.trace {
            assert_nonnegative_density(&round.fit);
        }
    }
}

#[test]
fn chsh_prior_content_is_symmetric() {
    let s = sample(&DensitySpec::prior(Scheme::Tat, BasePrior::Primitive), &SamplerConfig::new(20_000, 12)).unwrap();
    let mut curve = empirical_content(&s, Property::Chsh, 201).unwrap();
    let n = curve.values.len();
    for i in 0..n {
        let j = n - 1 - i;
        // P(-Θ) on the grid is the content strictly below -Θ; the gap is the atom at -Θ, which has measure zero.
        let dev = curve.values[i] + curve.values[j] - 1.0;
        let tol = 2.0 * (curve.mc_sigma[i] + curve.mc_sigma[j]) + 1e-12;
        assert!(dev.abs() <= tol, "Θ = {:.3}: {dev:.4} > {tol:.4}", curve.grid[i]);
    }
    let opts = FourierOptions { parity: Parity::Even, ..FourierOptions::default() };
    let fit = fit_content(&mut curve, &FitSpec::Fourier(opts)).unwrap();
    let FitModel::FourierLine { terms, .. } = &fit else { panic!("expected a Fourier fit") };
    assert!(terms.iter().all(|t| t.k % 2 == 0), "{terms:?}");
    assert_nonnegative_density(&fit);
}
