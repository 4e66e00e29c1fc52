//! Qubit linear algebra: Hermitian 2×2 and 4×4 matrices, Bloch states,
//! fidelity, angles and the operator / Hilbert–Schmidt / trace norms.
//!
//! The Bloch parameterisation follows the channel literature convention
//! `ρ = ½[[1 − r_z, r_x − i r_y], [r_x + i r_y, 1 + r_z]]`, so `r_z = +1` is
//! the excited state `|1⟩⟨1|` and `r_z = −1` the ground state `|0⟩⟨0|`.

use std::ops::{Add, Mul, Neg, Sub};

pub use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};

/// Slack allowed on `|r|² ≤ 1` before a Bloch vector is rejected.
pub const BLOCH_NORM_MARGIN: f64 = 1e-12;
/// `|r|²` within this distance of one counts as a pure state.
pub const PURITY_TOLERANCE: f64 = 1e-9;
/// Eigenvalues this close to zero are treated as exact zeros before square roots.
pub const EIGEN_ZERO: f64 = 1e-12;

const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
const ONE: Complex = Complex { re: 1.0, im: 0.0 };

/// `acos` with the argument clamped into `[-1, 1]`.
pub fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// General complex 2×2 matrix, used for intermediate products that are not
/// Hermitian (`σ₋ρ`, `|i⟩⟨j|`, ...).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex; 2]; 2]);

impl Matrix2 {
    pub const fn zero() -> Self {
        Matrix2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Matrix2([[ONE, ZERO], [ZERO, ONE]])
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn unit(i: usize, j: usize) -> Self {
        let mut m = Self::zero();
        m.0[i][j] = ONE;
        m
    }

    pub fn sigma_x() -> Self {
        Matrix2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Self {
        let i = Complex::new(0.0, 1.0);
        Matrix2([[ZERO, -i], [i, ZERO]])
    }

    pub fn sigma_z() -> Self {
        Matrix2([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// `σ₋ = ½(σ_x + iσ_y) = |0⟩⟨1|`, lowering `|1⟩ → |0⟩`.
    pub fn sigma_minus() -> Self {
        Self::unit(0, 1)
    }

    /// `σ₊ = ½(σ_x − iσ_y) = |1⟩⟨0|`.
    pub fn sigma_plus() -> Self {
        Self::unit(1, 0)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Matrix2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = &self.0;
        Matrix2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Largest deviation from `M = M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.0;
        let d = [
            m[0][0].im.abs(),
            m[1][1].im.abs(),
            (m[0][1] - m[1][0].conj()).norm(),
        ];
        d.into_iter().fold(0.0, f64::max)
    }

    /// The Hermitian part `½(M + M†)`.
    pub fn hermitian_part(&self) -> HermitianMatrix2 {
        let m = &self.0;
        HermitianMatrix2::new(m[0][0].re, m[1][1].re, (m[1][0] + m[0][1].conj()) * 0.5)
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        Matrix2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, rhs: Matrix2) -> Matrix2 {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    #[allow(clippy::needless_range_loop)]
    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = Matrix2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

/// 2×2 Hermitian matrix stored as two real diagonals plus the lower
/// off-diagonal `m10`; `m01 = conj(m10)` holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianMatrix2 {
    d0: f64,
    d1: f64,
    lower: Complex,
}

/// Spectral decomposition of a [`HermitianMatrix2`]: ascending eigenvalues and
/// the matching orthonormal eigenvectors (`vectors[k]` belongs to `values[k]`).
#[derive(Debug, Clone, Copy)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: [[Complex; 2]; 2],
}

impl Eigen2 {
    /// Unitary whose columns are the eigenvectors.
    pub fn unitary(&self) -> Matrix2 {
        let v = &self.vectors;
        Matrix2([[v[0][0], v[1][0]], [v[0][1], v[1][1]]])
    }
}

/// Operator, Hilbert–Schmidt and trace norms of a Hermitian matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub op: f64,
    pub hs: f64,
    pub tr: f64,
}

impl HermitianMatrix2 {
    pub const fn new(d0: f64, d1: f64, lower: Complex) -> Self {
        HermitianMatrix2 { d0, d1, lower }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, ZERO)
    }

    pub const fn diag(d0: f64, d1: f64) -> Self {
        Self::new(d0, d1, ZERO)
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Complex {
        match (i, j) {
            (0, 0) => Complex::new(self.d0, 0.0),
            (1, 1) => Complex::new(self.d1, 0.0),
            (1, 0) => self.lower,
            (0, 1) => self.lower.conj(),
            _ => panic!("index ({i}, {j}) out of range for a 2x2 matrix"),
        }
    }

    pub fn diagonal(&self) -> [f64; 2] {
        [self.d0, self.d1]
    }

    /// The lower off-diagonal entry `m10`.
    pub fn off_diagonal(&self) -> Complex {
        self.lower
    }

    pub fn to_matrix(&self) -> Matrix2 {
        Matrix2([
            [self.get(0, 0), self.get(0, 1)],
            [self.get(1, 0), self.get(1, 1)],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.d0 + self.d1
    }

    pub fn det(&self) -> f64 {
        self.d0 * self.d1 - self.lower.norm_sqr()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.d0 * s, self.d1 * s, self.lower * s)
    }

    /// `tr(AB)`, real for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &HermitianMatrix2) -> f64 {
        self.d0 * other.d0 + self.d1 * other.d1 + 2.0 * (self.lower * other.lower.conj()).re
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix2) -> f64 {
        [
            (self.d0 - other.d0).abs(),
            (self.d1 - other.d1).abs(),
            (self.lower - other.lower).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.d0.is_finite()
            && self.d1.is_finite()
            && self.lower.re.is_finite()
            && self.lower.im.is_finite()
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.d0 + self.d1);
        let r = (0.5 * (self.d0 - self.d1)).hypot(self.lower.norm());
        [mean - r, mean + r]
    }

    pub fn eigen(&self) -> Eigen2 {
        let values = self.eigenvalues();
        if values[1] - values[0] <= f64::EPSILON * (values[0].abs() + values[1].abs()) {
            // (numerically) a multiple of the identity
            return Eigen2 {
                values,
                vectors: [[ONE, ZERO], [ZERO, ONE]],
            };
        }
        // For λ, both (conj(b), λ − a) and (λ − d, b) solve (M − λ)v = 0 with
        // a = m00, d = m11, b = m10; take the better conditioned one.
        let hi = values[1];
        let c1 = [self.lower.conj(), Complex::new(hi - self.d0, 0.0)];
        let c2 = [Complex::new(hi - self.d1, 0.0), self.lower];
        let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
        let n2 = c2[0].norm_sqr() + c2[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
        let n = n.sqrt();
        let v_hi = [v[0] / n, v[1] / n];
        let v_lo = [-v_hi[1].conj(), v_hi[0].conj()];
        Eigen2 {
            values,
            vectors: [v_lo, v_hi],
        }
    }

    pub fn norms(&self) -> Norms {
        let [lo, hi] = self.eigenvalues();
        Norms {
            op: lo.abs().max(hi.abs()),
            hs: (self.d0 * self.d0 + self.d1 * self.d1 + 2.0 * self.lower.norm_sqr()).sqrt(),
            tr: lo.abs() + hi.abs(),
        }
    }

    /// Principal square root of a positive semidefinite matrix; eigenvalues
    /// within [`EIGEN_ZERO`] of zero (or below) are clamped to zero.
    pub fn sqrt_psd(&self) -> HermitianMatrix2 {
        let e = self.eigen();
        let s = e
            .values
            .map(|l| if l > EIGEN_ZERO { l.sqrt() } else { 0.0 });
        let u = e.unitary();
        let d = Matrix2([
            [Complex::new(s[0], 0.0), ZERO],
            [ZERO, Complex::new(s[1], 0.0)],
        ]);
        (u * d * u.adjoint()).hermitian_part()
    }

    /// Bloch vector `(tr ρσ_x, tr ρσ_y, m11 − m00)`.
    pub fn to_bloch(&self) -> BlochState {
        BlochState {
            rx: 2.0 * self.lower.re,
            ry: 2.0 * self.lower.im,
            rz: self.d1 - self.d0,
        }
    }
}

impl Add for HermitianMatrix2 {
    type Output = HermitianMatrix2;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.d0 + rhs.d0, self.d1 + rhs.d1, self.lower + rhs.lower)
    }
}

impl Sub for HermitianMatrix2 {
    type Output = HermitianMatrix2;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.d0 - rhs.d0, self.d1 - rhs.d1, self.lower - rhs.lower)
    }
}

impl Neg for HermitianMatrix2 {
    type Output = HermitianMatrix2;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Bloch vector of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BlochState {
    pub fn new(rx: f64, ry: f64, rz: f64) -> Result<Self> {
        let s = BlochState { rx, ry, rz };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rx.is_finite() && self.ry.is_finite() && self.rz.is_finite()) {
            return Err(QslError::InvalidParameter(
                "Bloch vector has non-finite components".into(),
            ));
        }
        let norm_sq = self.norm_sq();
        if norm_sq > 1.0 + BLOCH_NORM_MARGIN {
            return Err(QslError::InvalidState { norm_sq });
        }
        Ok(())
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub const fn plus() -> Self {
        BlochState {
            rx: 1.0,
            ry: 0.0,
            rz: 0.0,
        }
    }

    /// `|1⟩⟨1|`.
    pub const fn excited() -> Self {
        BlochState {
            rx: 0.0,
            ry: 0.0,
            rz: 1.0,
        }
    }

    /// `|0⟩⟨0|`.
    pub const fn ground() -> Self {
        BlochState {
            rx: 0.0,
            ry: 0.0,
            rz: -1.0,
        }
    }

    pub const fn maximally_mixed() -> Self {
        BlochState {
            rx: 0.0,
            ry: 0.0,
            rz: 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.rx * self.rx + self.ry * self.ry + self.rz * self.rz
    }

    /// `r_x² + r_y²`, the weight that dephasing acts on.
    pub fn transverse_sq(&self) -> f64 {
        self.rx * self.rx + self.ry * self.ry
    }

    pub fn is_pure(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= PURITY_TOLERANCE
    }
}

impl std::fmt::Display for BlochState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rx={};ry={};rz={}", self.rx, self.ry, self.rz)
    }
}

pub fn bloch_to_rho(s: &BlochState) -> Result<HermitianMatrix2> {
    s.validate()?;
    Ok(HermitianMatrix2::new(
        0.5 * (1.0 - s.rz),
        0.5 * (1.0 + s.rz),
        Complex::new(0.5 * s.rx, 0.5 * s.ry),
    ))
}

/// `tr ρ²`.
pub fn purity(rho: &HermitianMatrix2) -> f64 {
    rho.trace_product(rho)
}

/// `tr(ρ_t ρ_0) / tr(ρ_0²)`.
pub fn relative_purity(rho0: &HermitianMatrix2, rho_t: &HermitianMatrix2) -> f64 {
    rho_t.trace_product(rho0) / purity(rho0)
}

/// Bures (Uhlmann) fidelity of two qubit density matrices, via the
/// two-dimensional identity `F = tr(ρσ) + 2√(det ρ det σ)`.
pub fn bures_fidelity(rho0: &HermitianMatrix2, rho_t: &HermitianMatrix2) -> f64 {
    let d0 = rho0.det().max(0.0);
    let d1 = rho_t.det().max(0.0);
    (rho0.trace_product(rho_t) + 2.0 * (d0 * d1).sqrt()).clamp(0.0, 1.0)
}

/// Bures angle `arccos √F` in `[0, π/2]`.
pub fn bures_angle(rho0: &HermitianMatrix2, rho_t: &HermitianMatrix2) -> f64 {
    clamped_acos(bures_fidelity(rho0, rho_t).sqrt())
}

pub fn norms(m: &HermitianMatrix2) -> Norms {
    m.norms()
}

/// 4×4 Hermitian matrix: real diagonal plus the six upper-triangle entries
/// (row-major `(0,1) (0,2) (0,3) (1,2) (1,3) (2,3)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianMatrix4 {
    diag: [f64; 4],
    upper: [Complex; 6],
}

fn upper_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < 4);
    match (i, j) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        _ => 5,
    }
}

impl HermitianMatrix4 {
    pub fn zero() -> Self {
        HermitianMatrix4 {
            diag: [0.0; 4],
            upper: [ZERO; 6],
        }
    }

    pub fn from_diag(diag: [f64; 4]) -> Self {
        HermitianMatrix4 {
            diag,
            upper: [ZERO; 6],
        }
    }

    /// Builds from a full matrix, rejecting inputs that are not Hermitian
    /// within `tol`. The stored matrix is the Hermitian part.
    #[allow(clippy::needless_range_loop)]
    pub fn from_full(m: &[[Complex; 4]; 4], tol: f64) -> Result<Self> {
        let mut out = Self::zero();
        for i in 0..4 {
            if m[i][i].im.abs() > tol {
                return Err(QslError::InvalidParameter(format!(
                    "diagonal entry {i} is not real"
                )));
            }
            out.diag[i] = m[i][i].re;
            for j in (i + 1)..4 {
                if (m[i][j] - m[j][i].conj()).norm() > tol {
                    return Err(QslError::InvalidParameter(format!(
                        "entries ({i},{j}) and ({j},{i}) are not conjugate"
                    )));
                }
                out.upper[upper_index(i, j)] = (m[i][j] + m[j][i].conj()) * 0.5;
            }
        }
        Ok(out)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Complex::new(self.diag[i], 0.0),
            Less => self.upper[upper_index(i, j)],
            Greater => self.upper[upper_index(j, i)].conj(),
        }
    }

    pub fn to_full(&self) -> [[Complex; 4]; 4] {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    /// Ascending eigenvalues. The complex Hermitian matrix `A + iB` is mapped
    /// to the real symmetric `[[A, −B], [B, A]]`, whose spectrum is that of
    /// the original with every eigenvalue doubled; cyclic Jacobi does the rest.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut s = [[0.0f64; 8]; 8];
        for i in 0..4 {
            for j in 0..4 {
                let z = self.get(i, j);
                s[i][j] = z.re;
                s[i + 4][j + 4] = z.re;
                s[i][j + 4] = -z.im;
                s[i + 4][j] = z.im;
            }
        }
        let mut ev = jacobi_eigenvalues(s);
        ev.sort_by(|a, b| a.total_cmp(b));
        [ev[0], ev[2], ev[4], ev[6]]
    }
}

/// Cyclic Jacobi for an 8×8 real symmetric matrix; returns the diagonal after
/// the off-diagonal mass has been driven below rounding level.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigenvalues(mut a: [[f64; 8]; 8]) -> [f64; 8] {
    const N: usize = 8;
    let frob: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return [0.0; N];
    }
    for _sweep in 0..64 {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * frob {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::array::from_fn(|i| a[i][i])
}

/// Trace norm `Σ|λᵢ|` of a 4×4 Hermitian matrix.
pub fn trace_norm_4(m: &HermitianMatrix4) -> f64 {
    m.eigenvalues().iter().map(|l| l.abs()).sum()
}
