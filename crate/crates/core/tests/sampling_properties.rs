use spe_core::properties::Property;
use spe_core::sampling::{sample, BasePrior, DensitySpec, SampleSet, SamplerConfig};
use spe_core::state::{log_point_likelihood, physicality, Counts, Scheme};

fn data() -> Counts {
    Counts::new(vec![2, 10, 11, 13])
}

/// Effective size of a weighted MCMC sample: Kish size scaled by the chain ESS ratio.
fn effective_size(s: &SampleSet) -> f64 {
    let ess_ratio = s.diagnostics.as_ref().map_or(1.0, |d| (d.ess / s.len() as f64).min(1.0));
    let (sw, sw2) = s.weights.iter().fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
    sw * sw / sw2 * ess_ratio
}

fn histogram(values: &[f64], weights: &[f64], bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for (v, w) in values.iter().zip(weights) {
        h[((v * bins as f64) as usize).min(bins - 1)] += w;
    }
    let total: f64 = h.iter().sum();
    h.iter().map(|x| x / total).collect()
}

#[test]
fn serialized_sample_is_reproducible() {
    let spec = DensitySpec::prior(Scheme::Tetrahedron, BasePrior::Jeffreys).with_counts(data());
    let cfg = SamplerConfig::new(2000, 17);
    let a = serde_json::to_string(&sample(&spec, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&sample(&spec, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reweighted_prior_reproduces_posterior() {
    let prior = sample(&DensitySpec::prior(Scheme::Tetrahedron, BasePrior::Primitive), &SamplerConfig::new(60_000, 3)).unwrap();
    let post_spec = DensitySpec::prior(Scheme::Tetrahedron, BasePrior::Primitive).with_counts(data());
    let post = sample(&post_spec, &SamplerConfig::new(60_000, 4)).unwrap();

    let ll: Vec<f64> = prior.points().map(|p| log_point_likelihood(p, &data())).collect();
    let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ll.iter().zip(&prior.weights).map(|(l, w)| w * (l - top).exp()).collect();
    let mut reweighted = SampleSet::from_points(Scheme::Tetrahedron, prior.points().flatten().copied().collect(), w, "reweighted".into(), 3).unwrap();
    reweighted.diagnostics = prior.diagnostics.clone();

    let f = Property::Purity;
    let bins = 20;
    let h1 = histogram(&reweighted.property_values(f), &reweighted.weights, bins);
    let h2 = histogram(&post.property_values(f), &post.weights, bins);
    let (n1, n2) = (effective_size(&reweighted), effective_size(&post));
    for (i, (a, b)) in h1.iter().zip(&h2).enumerate() {
        let m = 0.5 * (a + b);
        let sigma = (m * (1.0 - m) * (1.0 / n1 + 1.0 / n2)).sqrt().max(1e-4);
        assert!((a - b).abs() <= 3.0 * sigma, "bin {i}: {a:.4} vs {b:.4}, σ = {sigma:.4}");
    }
}

#[test]
fn jeffreys_on_two_outcomes_is_arcsine() {
    let s = sample(&DensitySpec::prior(Scheme::Simplex(2), BasePrior::Jeffreys), &SamplerConfig::new(50_000, 9)).unwrap();
    let p1 = s.property_values(Property::Component(0));
    let n = effective_size(&s);
    // Deciles of Beta(1/2, 1/2): x = sin²(πq/2).
    let edges: Vec<f64> = (0..=10).map(|i| (std::f64::consts::FRAC_PI_2 * i as f64 / 10.0).sin().powi(2)).collect();
    let total: f64 = s.weights.iter().sum();
    let sigma = (0.1 * 0.9 / n).sqrt();
    for w in edges.windows(2) {
        let frac: f64 = p1.iter().zip(&s.weights).filter(|(v, _)| **v >= w[0] && **v < w[1]).map(|(_, w)| w).sum::<f64>() / total;
        assert!((frac - 0.1).abs() <= 3.0 * sigma, "[{:.3}, {:.3}): {frac:.4}", w[0], w[1]);
    }
}

#[test]
fn retained_points_are_physical() {
    for scheme in [Scheme::Tetrahedron, Scheme::Tat] {
        let s = sample(&DensitySpec::prior(scheme, BasePrior::Primitive), &SamplerConfig::new(3000, 2)).unwrap();
        for (p, &w) in s.points().zip(&s.weights) {
            let phys = physicality(p, scheme).unwrap();
            assert!(phys.physical && phys.weight > 0.0, "{scheme}: {p:?}");
            assert!(w > 0.0);
        }
    }
}
