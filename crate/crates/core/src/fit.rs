//! Smooth parameterizations of content curves `P(F)`.
//!
//! Both models live on the normalized coordinate `u = (F - F_min)/(F_max - F_min)`:
//!
//! - Fourier line: `P(u) = u + Σ a_k sin(kπu)`, exact at both endpoints.
//! - Beta mixture: `P(u) = Σ w_l I_u(α_l + 1, β_l + 1)` with `Σ w_l = 1`, where
//!   `I` is the regularized incomplete beta function. Near the endpoints the
//!   density behaves like `u^α_min` and `(1 - u)^β_min`, which is how power-law
//!   tails are built into the fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};

/// Fitted densities below this (in `u` units) count as negative.
pub const DENSITY_FLOOR: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: usize,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaTerm {
    pub w: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BetaTerm {
    fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            beta_reg(self.alpha + 1.0, self.beta + 1.0, u)
        }
    }

    fn sf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            1.0
        } else if u >= 1.0 {
            0.0
        } else {
            beta_reg(self.beta + 1.0, self.alpha + 1.0, 1.0 - u)
        }
    }

    fn pdf(&self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        let lb = ln_beta(self.alpha + 1.0, self.beta + 1.0);
        let a = if self.alpha == 0.0 { 0.0 } else { self.alpha * u.ln() };
        let b = if self.beta == 0.0 { 0.0 } else { self.beta * (1.0 - u).ln() };
        (a + b - lb).exp()
    }
}

/// A smooth model of a content curve on `[f_min, f_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FitModel {
    FourierLine { f_min: f64, f_max: f64, terms: Vec<FourierTerm>, rmse: f64 },
    BetaMixture { f_min: f64, f_max: f64, terms: Vec<BetaTerm>, rmse: f64 },
    /// Piecewise-linear content through equally spaced nodes.
    Tabulated { f_min: f64, f_max: f64, values: Vec<f64> },
}

impl FitModel {
    /// The straight line `P(F) = u`.
    pub fn line(f_min: f64, f_max: f64) -> Self {
        FitModel::FourierLine { f_min, f_max, terms: Vec::new(), rmse: 0.0 }
    }

    /// Monotone piecewise-linear content through `values`, rescaled to run
    /// from 0 to 1.
    pub fn tabulated(f_min: f64, f_max: f64, values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("a tabulated content needs two nodes".into()));
        }
        let mut v = values.to_vec();
        for i in 1..v.len() {
            v[i] = v[i].max(v[i - 1]);
        }
        let (lo, hi) = (v[0], v[v.len() - 1]);
        if !(hi > lo) {
            return Err(Error::InvalidInput("tabulated content is constant".into()));
        }
        v.iter_mut().for_each(|x| *x = (*x - lo) / (hi - lo));
        Ok(FitModel::Tabulated { f_min, f_max, values: v })
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            FitModel::FourierLine { f_min, f_max, .. }
            | FitModel::BetaMixture { f_min, f_max, .. }
            | FitModel::Tabulated { f_min, f_max, .. } => (*f_min, *f_max),
        }
    }

    pub fn rmse(&self) -> f64 {
        match self {
            FitModel::FourierLine { rmse, .. } | FitModel::BetaMixture { rmse, .. } => *rmse,
            FitModel::Tabulated { .. } => 0.0,
        }
    }

    pub fn to_unit(&self, f: f64) -> f64 {
        let (lo, hi) = self.range();
        (f - lo) / (hi - lo)
    }

    /// `P(u)`.
    pub fn content_unit(&self, u: f64) -> f64 {
        match self {
            FitModel::FourierLine { terms, .. } => {
                let u = u.clamp(0.0, 1.0);
                u + terms.iter().map(|t| t.a * (t.k as f64 * std::f64::consts::PI * u).sin()).sum::<f64>()
            }
            FitModel::BetaMixture { terms, .. } => terms.iter().map(|t| t.w * t.cdf(u)).sum(),
            FitModel::Tabulated { values, .. } => {
                let (i, t) = cell(values.len(), u);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// `1 - P(u)`, without cancellation for beta mixtures.
    pub fn survival_unit(&self, u: f64) -> f64 {
        match self {
            FitModel::BetaMixture { terms, .. } => terms.iter().map(|t| t.w * t.sf(u)).sum(),
            FitModel::FourierLine { .. } | FitModel::Tabulated { .. } => 1.0 - self.content_unit(u),
        }
    }

    /// `dP/du`; integrates to 1 over `[0, 1]`.
    pub fn density_unit(&self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            FitModel::FourierLine { terms, .. } => {
                let pi = std::f64::consts::PI;
                1.0 + terms.iter().map(|t| t.a * t.k as f64 * pi * (t.k as f64 * pi * u).cos()).sum::<f64>()
            }
            FitModel::BetaMixture { terms, .. } => terms.iter().map(|t| t.w * t.pdf(u)).sum(),
            FitModel::Tabulated { values, .. } => {
                let (i, _) = cell(values.len(), u);
                (values[i + 1] - values[i]) * (values.len() - 1) as f64
            }
        }
    }

    /// `P(F)`.
    pub fn content(&self, f: f64) -> f64 {
        self.content_unit(self.to_unit(f))
    }

    /// `W(F) = dP/dF`.
    pub fn density(&self, f: f64) -> f64 {
        let (lo, hi) = self.range();
        self.density_unit(self.to_unit(f)) / (hi - lo)
    }

    /// Smallest density (in `u` units) on an `n`-point grid including the endpoints.
    pub fn min_density_unit(&self, n: usize) -> f64 {
        (0..n)
            .map(|i| self.density_unit(i as f64 / (n - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cell index and offset of `u` on an `n`-node grid over `[0, 1]`.
fn cell(n: usize, u: f64) -> (usize, f64) {
    let x = u.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (x.floor() as usize).min(n - 2);
    (i, x - i as f64)
}

/// Which Fourier orders a fit may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    #[default]
    All,
    /// Only even `k`; enforces `P(u) + P(1 - u) = 1`.
    Even,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FourierOptions {
    pub max_order: usize,
    pub parity: Parity,
    /// Amplitudes below this fraction of the largest one are dropped.
    pub truncate: f64,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self { max_order: 16, parity: Parity::All, truncate: 0.01 }
    }
}

fn least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    design
        .clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))
}

fn rmse_of(model: &FitModel, u: &[f64], p: &[f64]) -> f64 {
    let ss: f64 = u.iter().zip(p).map(|(&x, &y)| (model.content_unit(x) - y).powi(2)).sum();
    (ss / u.len() as f64).sqrt()
}

/// Least-squares Fourier-line fit to `(u_i, P_i)`.
///
/// All admissible orders up to `max_order` are fitted, small amplitudes are
/// filtered out and the survivors refitted. A fit whose density dips below
/// [`DENSITY_FLOOR`] is rejected.
pub fn fit_fourier(f_range: (f64, f64), u: &[f64], p: &[f64], opts: &FourierOptions) -> Result<FitModel> {
    if u.len() != p.len() || u.is_empty() {
        return Err(Error::InvalidInput("fit data are empty or mismatched".into()));
    }
    let orders: Vec<usize> = (1..=opts.max_order)
        .filter(|k| opts.parity == Parity::All || k % 2 == 0)
        .collect();
    let y = DVector::from_iterator(u.len(), u.iter().zip(p).map(|(x, y)| y - x));
    let solve = |ks: &[usize]| -> Result<Vec<FourierTerm>> {
        if ks.is_empty() {
            return Ok(Vec::new());
        }
        let pi = std::f64::consts::PI;
        let design = DMatrix::from_fn(u.len(), ks.len(), |i, j| (ks[j] as f64 * pi * u[i]).sin());
        let a = least_squares(&design, &y)?;
        Ok(ks.iter().zip(a.iter()).map(|(&k, &a)| FourierTerm { k, a }).collect())
    };
    let full = solve(&orders)?;
    let largest = full.iter().map(|t| t.a.abs()).fold(0.0, f64::max);
    let kept: Vec<usize> = full
        .iter()
        .filter(|t| largest > 0.0 && t.a.abs() >= opts.truncate * largest)
        .map(|t| t.k)
        .collect();
    let terms = solve(&kept)?;
    let mut model = FitModel::FourierLine { f_min: f_range.0, f_max: f_range.1, terms, rmse: 0.0 };
    let rmse = rmse_of(&model, u, p);
    if let FitModel::FourierLine { rmse: r, .. } = &mut model {
        *r = rmse;
    }
    let dmin = model.min_density_unit(2001);
    if dmin < DENSITY_FLOOR {
        return Err(Error::Numerical(format!("Fourier fit has negative density {dmin:.3e}")));
    }
    Ok(model)
}

/// Fourier fit that lowers the order cap until the density is non-negative.
///
/// Returns the model and the order cap that was finally used.
pub fn fit_fourier_positive(f_range: (f64, f64), u: &[f64], p: &[f64], opts: &FourierOptions) -> Result<(FitModel, usize)> {
    let step = if opts.parity == Parity::Even { 2 } else { 1 };
    let mut order = opts.max_order;
    loop {
        let o = FourierOptions { max_order: order, ..opts.clone() };
        match fit_fourier(f_range, u, p, &o) {
            Ok(m) => return Ok((m, order)),
            Err(Error::Numerical(_)) if order > step => order -= step,
            Err(Error::Numerical(_)) => return Ok((FitModel::line(f_range.0, f_range.1), 0)),
            Err(e) => return Err(e),
        }
    }
}

/// Constraint on one exponent of a beta-mixture term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Fixed(f64),
    Free { min: f64, init: f64 },
    /// `β = α`: the term is symmetric about `u = 1/2`.
    SameAsAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub w_init: f64,
}

/// Structure of a beta-mixture fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaMixtureSpec {
    pub terms: Vec<TermSpec>,
    /// Require all weights to be positive.
    #[serde(default)]
    pub positive_weights: bool,
}

impl BetaMixtureSpec {
    /// Three symmetric terms with the smallest exponent pinned; suited to the
    /// fixed-setting CHSH quantity, whose prior density vanishes like
    /// `(8 - Θ²)^(11/2)` at the ends.
    pub fn chsh() -> Self {
        let free = |init| Exponent::Free { min: 5.5, init };
        Self {
            terms: vec![
                TermSpec { alpha: Exponent::Fixed(5.5), beta: Exponent::SameAsAlpha, w_init: 0.47 },
                TermSpec { alpha: free(7.2), beta: Exponent::SameAsAlpha, w_init: 0.22 },
                TermSpec { alpha: free(11.0), beta: Exponent::SameAsAlpha, w_init: 0.31 },
            ],
            positive_weights: false,
        }
    }

    /// Five terms with exponents at least 3 (at `Θ_opt = 0`) and 5 (at `√8`),
    /// one of each pinned to its floor.
    pub fn chsh_opt() -> Self {
        let a = |init| Exponent::Free { min: 3.0, init };
        let b = |init| Exponent::Free { min: 5.0, init };
        Self {
            terms: vec![
                TermSpec { alpha: Exponent::Fixed(3.0), beta: b(5.25), w_init: 0.22 },
                TermSpec { alpha: a(5.22), beta: Exponent::Fixed(5.0), w_init: 0.25 },
                TermSpec { alpha: a(14.2), beta: b(11.8), w_init: 0.31 },
                TermSpec { alpha: a(8.0), beta: b(11.8), w_init: 0.25 },
                TermSpec { alpha: a(37.5), beta: b(15.75), w_init: -0.03 },
            ],
            positive_weights: false,
        }
    }

    /// `n` terms with free exponents `≥ min`, initialized around a single beta
    /// matched to the mean and variance `(mean, var)` of the curve.
    pub fn free(n: usize, min: f64, mean: f64, var: f64) -> Self {
        let m = mean.clamp(1e-3, 1.0 - 1e-3);
        let v = var.clamp(1e-9, m * (1.0 - m) * 0.99);
        let s = m * (1.0 - m) / v - 1.0;
        let a0 = (m * s - 1.0).max(min + 0.1);
        let b0 = ((1.0 - m) * s - 1.0).max(min + 0.1);
        let terms = (0..n)
            .map(|l| {
                // Spread the starting shapes: sharper and broader copies.
                let f = 1.6f64.powf(l as f64 - (n as f64 - 1.0) / 2.0);
                let init = |x: f64| (min + (x - min) * f).max(min + 0.05);
                TermSpec {
                    alpha: Exponent::Free { min, init: init(a0) },
                    beta: Exponent::Free { min, init: init(b0) },
                    w_init: 1.0 / n as f64,
                }
            })
            .collect();
        Self { terms, positive_weights: true }
    }
}

struct Layout<'a> {
    spec: &'a BetaMixtureSpec,
}

impl Layout<'_> {
    fn n_weights(&self) -> usize {
        let n = self.spec.terms.len();
        if self.spec.positive_weights { n } else { n - 1 }
    }

    fn decode(&self, x: &[f64]) -> Vec<BetaTerm> {
        let n = self.spec.terms.len();
        let nw = self.n_weights();
        let weights: Vec<f64> = if self.spec.positive_weights {
            let m = x[..nw].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let e: Vec<f64> = x[..nw].iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        } else {
            let mut w = x[..nw].to_vec();
            w.push(1.0 - w.iter().sum::<f64>());
            w
        };
        let mut i = nw;
        let mut next = |e: &Exponent| match *e {
            Exponent::Fixed(v) => v,
            Exponent::Free { min, .. } => {
                let v = min + x[i].exp();
                i += 1;
                v
            }
            Exponent::SameAsAlpha => f64::NAN,
        };
        (0..n)
            .map(|l| {
                let t = &self.spec.terms[l];
                let alpha = next(&t.alpha);
                let beta = if t.beta == Exponent::SameAsAlpha { alpha } else { next(&t.beta) };
                BetaTerm { w: weights[l], alpha, beta }
            })
            .collect()
    }

    fn initial(&self) -> Vec<f64> {
        let mut x = Vec::new();
        let terms = &self.spec.terms;
        if self.spec.positive_weights {
            x.extend(terms.iter().map(|t| t.w_init.max(1e-3).ln()));
        } else {
            x.extend(terms[..terms.len() - 1].iter().map(|t| t.w_init));
        }
        for t in terms {
            for e in [&t.alpha, &t.beta] {
                if let Exponent::Free { min, init } = *e {
                    x.push((init - min).max(1e-3).ln());
                }
            }
        }
        x
    }
}

/// Levenberg–Marquardt on `Σ r_i(x)²` with a forward-difference Jacobian.
fn levenberg_marquardt(residuals: impl Fn(&[f64]) -> Vec<f64>, x0: Vec<f64>, max_iter: usize) -> (Vec<f64>, f64) {
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut x = x0;
    let mut r = residuals(&x);
    let mut c = cost(&r);
    if !c.is_finite() {
        return (x, c);
    }
    let mut mu = 1e-3;
    let n = x.len();
    let m = r.len();
    for _ in 0..max_iter {
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xh = x.clone();
            xh[j] += h;
            let rh = residuals(&xh);
            for i in 0..m {
                jac[(i, j)] = (rh[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for d in 0..n {
                a[(d, d)] += mu * (jtj[(d, d)] + 1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = residuals(&xn);
            let cn = cost(&rn);
            if cn.is_finite() && cn < c {
                let rel = (c - cn) / c.max(1e-300);
                x = xn;
                r = rn;
                c = cn;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-12 {
                    return (x, c);
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (x, c)
}

/// Least-squares beta-mixture fit to `(u_i, P_i)`; bounds hold by construction.
///
/// A fit with mixed-sign weights whose density dips below [`DENSITY_FLOOR`]
/// is redone with positive weights.
pub fn fit_beta_mixture(f_range: (f64, f64), u: &[f64], p: &[f64], spec: &BetaMixtureSpec) -> Result<FitModel> {
    if u.len() != p.len() || u.is_empty() {
        return Err(Error::InvalidInput("fit data are empty or mismatched".into()));
    }
    if spec.terms.is_empty() {
        return Err(Error::InvalidInput("beta mixture without terms".into()));
    }
    let layout = Layout { spec };
    let residuals = |x: &[f64]| -> Vec<f64> {
        let terms = layout.decode(x);
        u.iter()
            .zip(p)
            .map(|(&ui, &pi)| terms.iter().map(|t| t.w * t.cdf(ui)).sum::<f64>() - pi)
            .collect()
    };
    let (x, cost) = levenberg_marquardt(residuals, layout.initial(), 400);
    if !cost.is_finite() {
        return Err(Error::Numerical("beta-mixture fit diverged".into()));
    }
    let terms = layout.decode(&x);
    let model = FitModel::BetaMixture {
        f_min: f_range.0,
        f_max: f_range.1,
        terms,
        rmse: (cost / u.len() as f64).sqrt(),
    };
    if model.min_density_unit(2001) < DENSITY_FLOOR {
        if spec.positive_weights {
            return Err(Error::Numerical("beta-mixture fit has negative density".into()));
        }
        let positive = BetaMixtureSpec { positive_weights: true, ..spec.clone() };
        return fit_beta_mixture(f_range, u, p, &positive);
    }
    Ok(model)
}
