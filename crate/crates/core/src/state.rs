//! Quantum states, probability-operator measurements and the probability space.
//!
//! The probability vector `p` with `p_k = tr{Π_k ρ}` is the basic coordinate used
//! throughout the crate. Two measurement schemes are supported with dedicated
//! physicality checks: the four-outcome tetrahedron measurement on a qubit and
//! the nine-outcome trine-antitrine (TAT) product measurement on two qubits.


use nalgebra::{Complex, DMatrix, Matrix4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues at or above this count as non-negative.
pub const EIGEN_FLOOR: f64 = -1e-10;

const HERMITIAN_TOL: f64 = 1e-12;
const POM_TOL: f64 = 1e-10;

/// Tetrahedron axes `a_k`; they sum to zero and satisfy `a_j·a_k = -1/3` for `j != k`.
pub const TETRA_AXES: [[f64; 3]; 4] = {
    const S8_3: f64 = 0.942_809_041_582_063_4; // √8/3
    const S2_3: f64 = 0.816_496_580_927_726; // √(2/3)
    const S2_3B: f64 = 0.471_404_520_791_031_7; // √2/3
    [
        [0.0, 0.0, -1.0],
        [0.0, S8_3, 1.0 / 3.0],
        [S2_3, -S2_3B, 1.0 / 3.0],
        [-S2_3, -S2_3B, 1.0 / 3.0],
    ]
};

/// Trine directions in the xz-plane as `(x, z)` components.
pub const TRINE: [[f64; 2]; 3] = {
    const H: f64 = 0.866_025_403_784_438_6; // √3/2
    [[0.0, 1.0], [H, -0.5], [-H, -0.5]]
};

fn pauli() -> [CMatrix; 4] {
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ]
}

fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    // Embed the Hermitian matrix as a real symmetric one of twice the size;
    // every eigenvalue then appears twice.
    let d = m.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i + d, j + d)] = z.re;
            r[(i, j + d)] = -z.im;
            r[(i + d, j)] = z.im;
        }
    }
    let mut ev: Vec<f64> = r.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || d == 0 {
            return Err(Error::InvalidInput("density matrix must be square".into()));
        }
        if (&m - m.adjoint()).iter().any(|z| z.norm() > HERMITIAN_TOL) {
            return Err(Error::InvalidInput("density matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("trace {tr} differs from 1")));
        }
        let rho = Self { m };
        let lmin = rho.min_eigenvalue();
        if lmin < EIGEN_FLOOR {
            return Err(Error::Unphysical(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(rho)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim) / C64::from(dim as f64),
        }
    }

    /// Qubit state `(1 + r·σ)/2`.
    pub fn qubit(r: [f64; 3]) -> Result<Self> {
        let s = pauli();
        let m = (&s[0] + &s[1] * C64::from(r[0]) + &s[2] * C64::from(r[1]) + &s[3] * C64::from(r[2]))
            * C64::from(0.5);
        Self::new(m)
    }

    /// Two-qubit state with real xz-plane Pauli expectations and `q = ⟨σy⊗σy⟩`.
    ///
    /// `x = (⟨σx⊗1⟩, ⟨σz⊗1⟩, ⟨1⊗σx⟩, ⟨1⊗σz⟩)`, `y = (⟨σx⊗σx⟩, ⟨σx⊗σz⟩, ⟨σz⊗σx⟩, ⟨σz⊗σz⟩)`.
    pub fn two_qubit_xz(x: [f64; 4], y: [f64; 4], q: f64) -> Result<Self> {
        let s = pauli();
        let kron = |a: &CMatrix, b: &CMatrix| a.kronecker(b);
        let (i, sx, sy, sz) = (&s[0], &s[1], &s[2], &s[3]);
        let terms = [
            (kron(i, i), 1.0),
            (kron(sx, i), x[0]),
            (kron(sz, i), x[1]),
            (kron(i, sx), x[2]),
            (kron(i, sz), x[3]),
            (kron(sx, sx), y[0]),
            (kron(sx, sz), y[1]),
            (kron(sz, sx), y[2]),
            (kron(sz, sz), y[3]),
            (kron(sy, sy), q),
        ];
        let mut m = CMatrix::zeros(4, 4);
        for (op, c) in terms {
            m += op * C64::from(c / 4.0);
        }
        Self::new(m)
    }

    /// Bell-diagonal state `(1 - x σx⊗σx - y σy⊗σy - z σz⊗σz)/4`.
    pub fn bell_diagonal(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::two_qubit_xz([0.0; 4], [-x, 0.0, 0.0, -z], -y)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.m)[0]
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim() });
        }
        let s = pauli();
        Ok([1, 2, 3].map(|k| (&s[k] * &self.m).trace().re))
    }
}

/// A probability-operator measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Pom {
    outcomes: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Pom {
    pub fn new(outcomes: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = outcomes.first() else {
            return Err(Error::InvalidInput("POM without outcomes".into()));
        };
        let d = first.nrows();
        if labels.len() != outcomes.len() {
            return Err(Error::DimensionMismatch { expected: outcomes.len(), got: labels.len() });
        }
        let mut sum = CMatrix::zeros(d, d);
        for pi in &outcomes {
            if pi.nrows() != d || pi.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: pi.nrows() });
            }
            if (pi - pi.adjoint()).iter().any(|z| z.norm() > POM_TOL) {
                return Err(Error::InvalidInput("POM outcome is not Hermitian".into()));
            }
            if hermitian_eigenvalues(pi)[0] < -POM_TOL {
                return Err(Error::InvalidInput("POM outcome is not positive".into()));
            }
            sum += pi;
        }
        if (sum - CMatrix::identity(d, d)).iter().any(|z| z.norm() > POM_TOL) {
            return Err(Error::InvalidInput("POM outcomes do not sum to the identity".into()));
        }
        Ok(Self { outcomes, labels })
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[CMatrix] {
        &self.outcomes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn to_document(&self) -> PomDocument {
        PomDocument {
            dim: self.dim(),
            outcomes: self
                .outcomes
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                        .collect()
                })
                .collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_document(doc: &PomDocument) -> Result<Self> {
        let outcomes = doc
            .outcomes
            .iter()
            .map(|rows| {
                if rows.len() != doc.dim || rows.iter().any(|r| r.len() != doc.dim) {
                    return Err(Error::DimensionMismatch { expected: doc.dim, got: rows.len() });
                }
                Ok(CMatrix::from_fn(doc.dim, doc.dim, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(outcomes, doc.labels.clone())
    }
}

/// Serialized POM: each outcome is a list of rows of `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomDocument {
    pub dim: usize,
    pub outcomes: Vec<Vec<Vec<[f64; 2]>>>,
    pub labels: Vec<String>,
}

/// The symmetric four-outcome qubit measurement with `Π_k = (1 + a_k·σ)/4`.
pub fn tetrahedron_pom() -> Pom {
    let s = pauli();
    let outcomes = TETRA_AXES
        .iter()
        .map(|a| {
            (&s[0] + &s[1] * C64::from(a[0]) + &s[2] * C64::from(a[1]) + &s[3] * C64::from(a[2]))
                * C64::from(0.25)
        })
        .collect();
    let labels = (1..=4).map(|k| format!("tetra{k}")).collect();
    Pom::new(outcomes, labels).expect("tetrahedron POM is valid")
}

/// Trine-antitrine product measurement, outcome index `k = 3(j-1) + j'`.
///
/// The first qubit is measured with the trine `(1 + t_j·σ)/3`, the second
/// with the antitrine `(1 - t_j'·σ)/3`, both in the xz-plane.
pub fn tat_pom() -> Pom {
    let s = pauli();
    let trine = |t: &[f64; 2], sign: f64| {
        (&s[0] + (&s[1] * C64::from(t[0]) + &s[3] * C64::from(t[1])) * C64::from(sign)) / C64::from(3.0)
    };
    let mut outcomes = Vec::with_capacity(9);
    let mut labels = Vec::with_capacity(9);
    for (j, tj) in TRINE.iter().enumerate() {
        for (jp, tjp) in TRINE.iter().enumerate() {
            outcomes.push(trine(tj, 1.0).kronecker(&trine(tjp, -1.0)));
            labels.push(format!("T{}A{}", j + 1, jp + 1));
        }
    }
    Pom::new(outcomes, labels).expect("TAT POM is valid")
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidInput("probability outside [0, 1]".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {s}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Click counts `n_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub counts: Vec<u64>,
}

impl Counts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Relative frequencies `n_k/N`.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// `p_k = Re tr{Π_k ρ}`.
pub fn born_probabilities(rho: &DensityMatrix, pom: &Pom) -> Result<ProbVector> {
    if rho.dim() != pom.dim() {
        return Err(Error::DimensionMismatch { expected: pom.dim(), got: rho.dim() });
    }
    let mut p: Vec<f64> = pom
        .outcomes()
        .iter()
        .map(|pi| (pi * rho.matrix()).trace().re.max(0.0))
        .collect();
    // Absorb rounding so that the sum is 1 to machine precision.
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x = (*x / s).min(1.0));
    ProbVector::new(p)
}

/// Bloch vector `r = 3 Σ p_k a_k` for the tetrahedron measurement.
pub fn tetra_bloch(p: &[f64]) -> [f64; 3] {
    let mut r = [0.0; 3];
    for (pk, a) in p.iter().zip(TETRA_AXES.iter()) {
        for i in 0..3 {
            r[i] += 3.0 * pk * a[i];
        }
    }
    r
}

/// Tetrahedron probabilities `p_k = (1 + r·a_k)/4`.
pub fn tetra_probs(r: [f64; 3]) -> [f64; 4] {
    TETRA_AXES.map(|a| 0.25 * (1.0 + r[0] * a[0] + r[1] * a[1] + r[2] * a[2]))
}

/// Full state reconstruction from tetrahedron probabilities.
pub fn reconstruct_qubit(p: &ProbVector) -> Result<DensityMatrix> {
    if p.len() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: p.len() });
    }
    let r = tetra_bloch(p.as_slice());
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1.0 + 1e-10 {
        return Err(Error::Unphysical(format!("Bloch vector length {norm:.6} exceeds 1")));
    }
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    DensityMatrix::qubit(r.map(|x| x * scale))
}

/// Pauli expectations seen by the TAT measurement.
///
/// `x = (⟨σx⊗1⟩, ⟨σz⊗1⟩, ⟨1⊗σx⟩, ⟨1⊗σz⟩)` and
/// `y = (⟨σx⊗σx⟩, ⟨σx⊗σz⟩, ⟨σz⊗σx⟩, ⟨σz⊗σz⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TatParams {
    pub x: [f64; 4],
    pub y: [f64; 4],
}

impl TatParams {
    /// Linear inversion of the TAT Born rule.
    pub fn from_probs(p: &[f64]) -> Self {
        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        for (j, tj) in TRINE.iter().enumerate() {
            for (jp, tjp) in TRINE.iter().enumerate() {
                let pk = p[3 * j + jp];
                x[0] += 2.0 * pk * tj[0];
                x[1] += 2.0 * pk * tj[1];
                x[2] -= 2.0 * pk * tjp[0];
                x[3] -= 2.0 * pk * tjp[1];
                y[0] -= 4.0 * pk * tj[0] * tjp[0];
                y[1] -= 4.0 * pk * tj[0] * tjp[1];
                y[2] -= 4.0 * pk * tj[1] * tjp[0];
                y[3] -= 4.0 * pk * tj[1] * tjp[1];
            }
        }
        Self { x, y }
    }

    /// `p_jj' = (1 + t_j·X1 - t_j'·X2 - t_jᵀ Y t_j')/9`.
    pub fn probs(&self) -> [f64; 9] {
        let (x, y) = (&self.x, &self.y);
        let mut p = [0.0; 9];
        for (j, t) in TRINE.iter().enumerate() {
            for (jp, u) in TRINE.iter().enumerate() {
                let corr = t[0] * (y[0] * u[0] + y[1] * u[1]) + t[1] * (y[2] * u[0] + y[3] * u[1]);
                p[3 * j + jp] =
                    (1.0 + t[0] * x[0] + t[1] * x[1] - u[0] * x[2] - u[1] * x[3] - corr) / 9.0;
            }
        }
        p
    }

    /// `4ρ` in the σx-eigenbasis, a real symmetric matrix affine in `q = ⟨σy⊗σy⟩`.
    pub fn b4(&self, q: f64) -> Matrix4<f64> {
        let [x1, x2, x3, x4] = self.x;
        let [y1, y2, y3, y4] = self.y;
        Matrix4::new(
            1.0 + x1 + x3 + y1, x2 + y3, x4 + y2, y4 - q,
            x2 + y3, 1.0 - x1 + x3 - y1, y4 + q, x4 - y2,
            x4 + y2, y4 + q, 1.0 + x1 - x3 - y1, x2 - y3,
            y4 - q, x4 - y2, x2 - y3, 1.0 - x1 - x3 + y1,
        )
    }

    /// Feasible `q`-interval, i.e. where `b4(q)` is positive semidefinite.
    ///
    /// The `q`-free 2×2 principal minors on rows (0, 3) and (1, 2) bound `q`.
    /// Inside that bracket the smallest eigenvalue is concave in `q`, so a
    /// one-dimensional cutting-plane search either finds a strictly feasible
    /// `q0` or proves there is none. From `q0` the interval follows exactly
    /// from the pencil `b4(q0) + t·B1`.
    pub fn q_interval(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.q_bracket()?;
        let det_y = self.y[0] * self.y[3] - self.y[1] * self.y[2];
        // Cheap guesses first: the maximally mixed and Bell-state values.
        for q0 in [0.0, -det_y, 0.5 * (lo + hi)] {
            if (lo..=hi).contains(&q0) {
                if let Some(iv) = self.q_pencil(q0) {
                    return Some(iv);
                }
            }
        }
        self.q_pencil(self.q_search(lo, hi)?)
    }

    /// Outer bound on the feasible `q` from the diagonal and the 2×2 minors.
    fn q_bracket(&self) -> Option<(f64, f64)> {
        let b = self.b4(0.0);
        let d = [b[(0, 0)], b[(1, 1)], b[(2, 2)], b[(3, 3)]];
        let tol = -4.0 * EIGEN_FLOOR;
        if d.iter().any(|&x| x < -tol) {
            return None;
        }
        let minor = |i: usize, j: usize| d[i] * d[j] - b[(i, j)] * b[(i, j)] >= -tol;
        if !(minor(0, 1) && minor(0, 2) && minor(1, 3) && minor(2, 3)) {
            return None;
        }
        // |y4 - q| ≤ √(d0 d3) and |y4 + q| ≤ √(d1 d2).
        let y4 = self.y[3];
        let r03 = (d[0] * d[3]).max(0.0).sqrt() + tol;
        let r12 = (d[1] * d[2]).max(0.0).sqrt() + tol;
        let lo = (y4 - r03).max(-y4 - r12).max(-1.0);
        let hi = (y4 + r03).min(-y4 + r12).min(1.0);
        (lo <= hi).then_some((lo, hi))
    }

    /// Exact interval around `q0` if `b4(q0)` clears the floor strictly.
    fn q_pencil(&self, q0: f64) -> Option<(f64, f64)> {
        let base = self.b4(q0) - Matrix4::identity() * (4.0 * EIGEN_FLOOR);
        let l_inv = base.cholesky()?.l().try_inverse()?;
        let ev = (l_inv * Self::q_direction() * l_inv.transpose()).symmetric_eigenvalues();
        let (mu_min, mu_max) = (ev.min(), ev.max());
        let lo = if mu_max > 0.0 { q0 - 1.0 / mu_max } else { -1.0 };
        let hi = if mu_min < 0.0 { q0 - 1.0 / mu_min } else { 1.0 };
        Some((lo.max(-1.0), hi.min(1.0)))
    }

    /// `d b4 / dq`, a constant matrix with entries ±1.
    fn q_direction() -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m[(0, 3)] = -1.0;
        m[(3, 0)] = -1.0;
        m[(1, 2)] = 1.0;
        m[(2, 1)] = 1.0;
        m
    }

    /// Smallest eigenvalue of `b4(q)/4` above the floor, with a supergradient.
    fn floor_margin(&self, q: f64) -> (f64, f64) {
        let e = self.b4(q).symmetric_eigen();
        let i = e.eigenvalues.imin();
        let v = e.eigenvectors.column(i);
        (e.eigenvalues[i] / 4.0 - EIGEN_FLOOR, (v.transpose() * Self::q_direction() * v)[(0, 0)] / 4.0)
    }

    /// A `q` in `[lo, hi]` with a nonnegative floor margin, if one exists.
    ///
    /// Kelley's cutting planes in one dimension: tangents from both sides
    /// bound the concave margin from above, and their crossing is the next
    /// query point.
    fn q_search(&self, lo: f64, hi: f64) -> Option<f64> {
        let (fa, sa) = self.floor_margin(lo);
        if fa >= 0.0 {
            return Some(lo);
        }
        let (fb, sb) = self.floor_margin(hi);
        if fb >= 0.0 {
            return Some(hi);
        }
        if sa <= 0.0 || sb >= 0.0 {
            return None;
        }
        let (mut left, mut right) = ((lo, fa, sa), (hi, fb, sb));
        for _ in 0..100 {
            let ((ql, fl, sl), (qr, fr, sr)) = (left, right);
            let q = ((fr - sr * qr) - (fl - sl * ql)) / (sl - sr);
            if !(ql..=qr).contains(&q) || fl + sl * (q - ql) < 0.0 || qr - ql < 1e-15 {
                return None;
            }
            let (f, s) = self.floor_margin(q);
            if f >= 0.0 {
                return Some(q);
            }
            if s > 0.0 {
                left = (q, f, s);
            } else {
                right = (q, f, s);
            }
        }
        None
    }
}

/// Measurement schemes with dedicated physicality checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Tetrahedron,
    Tat,
    /// The unconstrained simplex with `K` outcomes; every point is physical.
    Simplex(usize),
}

impl Scheme {
    /// Number of outcomes `K`.
    pub fn outcomes(self) -> usize {
        match self {
            Scheme::Tetrahedron => 4,
            Scheme::Tat => 9,
            Scheme::Simplex(k) => k,
        }
    }

    /// The measurement behind the scheme; `None` for the bare simplex.
    pub fn pom(self) -> Option<Pom> {
        match self {
            Scheme::Tetrahedron => Some(tetrahedron_pom()),
            Scheme::Tat => Some(tat_pom()),
            Scheme::Simplex(_) => None,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tetrahedron" | "tetra" | "qubit" => Ok(Scheme::Tetrahedron),
            "tat" | "two-qubit" => Ok(Scheme::Tat),
            other => match other.strip_prefix("simplex:").map(str::parse) {
                Some(Ok(k)) if k >= 2 => Ok(Scheme::Simplex(k)),
                _ => Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
            },
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Tetrahedron => write!(f, "tetrahedron"),
            Scheme::Tat => write!(f, "tat"),
            Scheme::Simplex(k) => write!(f, "simplex:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhysicalityDetail {
    /// Length of the reconstructed Bloch vector.
    BlochLength(f64),
    /// Feasible range of `⟨σy⊗σy⟩`.
    QInterval { lo: f64, hi: f64 },
}

/// Outcome of a physicality check; `weight` is the constraint factor up to normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityResult {
    pub physical: bool,
    pub weight: f64,
    pub detail: Option<PhysicalityDetail>,
}

impl PhysicalityResult {
    const REJECT: Self = Self { physical: false, weight: 0.0, detail: None };
}

/// Physicality of `p` and its constraint weight.
///
/// Tetrahedron: physical iff `|r| ≤ 1`, unit weight. TAT: physical iff some
/// `q ∈ [-1, 1]` makes the two-qubit matrix positive; the weight is the length
/// of the feasible `q`-interval.
pub fn physicality(p: &[f64], scheme: Scheme) -> Result<PhysicalityResult> {
    if p.len() != scheme.outcomes() {
        return Err(Error::DimensionMismatch { expected: scheme.outcomes(), got: p.len() });
    }
    Ok(physicality_unchecked(p, scheme))
}

pub(crate) fn physicality_unchecked(p: &[f64], scheme: Scheme) -> PhysicalityResult {
    if p.iter().any(|&x| x < 0.0) {
        return PhysicalityResult::REJECT;
    }
    match scheme {
        Scheme::Simplex(_) => PhysicalityResult { physical: true, weight: 1.0, detail: None },
        Scheme::Tetrahedron => {
            let r = tetra_bloch(p);
            let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            // |r|² ≤ 1 ⇔ eigenvalues (1 ± |r|)/2 ≥ floor.
            if 0.5 * (1.0 - len) >= EIGEN_FLOOR {
                PhysicalityResult {
                    physical: true,
                    weight: 1.0,
                    detail: Some(PhysicalityDetail::BlochLength(len)),
                }
            } else {
                PhysicalityResult::REJECT
            }
        }
        Scheme::Tat => match TatParams::from_probs(p).q_interval() {
            Some((lo, hi)) if hi > lo => PhysicalityResult {
                physical: true,
                weight: hi - lo,
                detail: Some(PhysicalityDetail::QInterval { lo, hi }),
            },
            _ => PhysicalityResult::REJECT,
        },
    }
}

/// Multinomial draw of `n` clicks with probabilities `p`.
pub fn simulate_clicks(p: &ProbVector, n: u64, seed: u64) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut left = n;
    let mut mass = 1.0;
    let k = p.len();
    let mut counts = vec![0u64; k];
    for (i, &pi) in p.as_slice().iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == k {
            counts[i] = left;
            break;
        }
        let prob = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, prob).expect("valid binomial").sample(&mut rng);
        counts[i] = c;
        left -= c;
        mass -= pi;
    }
    Counts::new(counts)
}

/// `Σ n_k ln p_k`, with `0·ln 0 = 0` and `-∞` when a clicked outcome has `p_k = 0`.
pub fn log_point_likelihood(p: &[f64], d: &Counts) -> f64 {
    p.iter()
        .zip(&d.counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&pk, &n)| if pk > 0.0 { n as f64 * pk.ln() } else { f64::NEG_INFINITY })
        .sum()
}
