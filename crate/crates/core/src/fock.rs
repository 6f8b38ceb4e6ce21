//! Truncated single-mode and two-mode Fock-space linear algebra: ladder
//! operators, coherent / thermal / displaced-thermal states, and tensor
//! extension with an ancilla vacuum mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default tolerance on the trace mass lost to truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Dense complex operator on a truncated Fock space, either a single
/// system mode (`dim_b == 0`) or system ⊗ ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dim_a: usize,
    dim_b: usize,
    mat: CMatrix,
}

impl FockOperator {
    /// Wraps a square matrix acting on the system mode alone.
    pub fn from_matrix(dim_a: usize, mat: CMatrix) -> Result<Self> {
        Self::from_matrix_two_mode(dim_a, 0, mat)
    }

    /// Wraps a square matrix on system ⊗ ancilla (`dim_b == 0` means no ancilla).
    pub fn from_matrix_two_mode(dim_a: usize, dim_b: usize, mat: CMatrix) -> Result<Self> {
        let total = dim_a * dim_b.max(1);
        if mat.nrows() != total || mat.ncols() != total {
            return Err(Error::DimensionMismatch {
                left: total,
                right: mat.nrows(),
            });
        }
        Ok(Self { dim_a, dim_b, mat })
    }

    pub fn zeros(dim_a: usize, dim_b: usize) -> Self {
        let total = dim_a * dim_b.max(1);
        Self {
            dim_a,
            dim_b,
            mat: CMatrix::zeros(total, total),
        }
    }

    pub fn identity(dim_a: usize, dim_b: usize) -> Self {
        let total = dim_a * dim_b.max(1);
        Self {
            dim_a,
            dim_b,
            mat: CMatrix::identity(total, total),
        }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Total matrix dimension `dim_a * max(dim_b, 1)`.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b.max(1)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat: &self.mat * c,
        }
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_norm_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude of `self - other` restricted to the leading
    /// `rows x rows` block (used to mask truncation-edge artifacts).
    pub fn max_norm_diff_block(&self, other: &Self, rows: usize) -> f64 {
        let n = rows.min(self.dim());
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        m
    }

    /// Deviation from Hermiticity, `‖X − X†‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        m
    }

    /// `(X + X†)/2`.
    pub fn hermitized(&self) -> Self {
        let h = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat: h,
        }
    }
}

impl std::ops::Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        FockOperator {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        FockOperator {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        FockOperator {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// Density operator together with the trace mass lost to truncation.
///
/// States with an analytically known spectral decomposition (the displaced
/// thermal family) carry it along, so downstream solvers can divide by
/// exponentially small eigenvalues without the noise floor of a numerical
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: FockOperator,
    trace_deficit: f64,
    eigensystem: Option<(CMatrix, Vec<f64>)>,
}

impl DensityOperator {
    /// Wraps an operator as a state. Hermitizes the matrix and records
    /// `1 - Tr` as the truncation deficit; fails if the deficit exceeds
    /// `tail_tol`.
    pub fn new(op: FockOperator, tail_tol: f64) -> Result<Self> {
        let op = op.hermitized();
        let deficit = 1.0 - op.trace().re;
        if deficit >= tail_tol {
            return Err(Error::TruncationTooSmall {
                deficit,
                tolerance: tail_tol,
            });
        }
        Ok(Self {
            op,
            trace_deficit: deficit.max(0.0),
            eigensystem: None,
        })
    }

    /// Attaches an exact spectral decomposition `ρ = U diag(λ) U†`.
    pub fn with_exact_eigensystem(mut self, u: CMatrix, lambdas: Vec<f64>) -> Self {
        debug_assert_eq!(u.nrows(), self.dim());
        debug_assert_eq!(lambdas.len(), self.dim());
        self.eigensystem = Some((u, lambdas));
        self
    }

    /// Exact eigensystem, when the state was built from a closed form.
    pub fn eigensystem(&self) -> Option<(&CMatrix, &[f64])> {
        self.eigensystem.as_ref().map(|(u, l)| (u, l.as_slice()))
    }

    pub fn op(&self) -> &FockOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn dim_a(&self) -> usize {
        self.op.dim_a()
    }

    pub fn dim_b(&self) -> usize {
        self.op.dim_b()
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    /// `Tr[ρ X]`.
    pub fn expectation(&self, x: &FockOperator) -> C64 {
        assert_eq!(self.dim(), x.dim(), "operator dimension mismatch");
        (self.op.matrix() * x.matrix()).trace()
    }
}

/// Annihilation operator on a `dim`-dimensional truncated Fock space:
/// `(a)_{n-1,n} = sqrt(n)`.
pub fn annihilation(dim: usize) -> Result<FockOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "annihilation operator needs dim >= 2",
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    FockOperator::from_matrix(dim, m)
}

/// Creation operator, the adjoint of [`annihilation`].
pub fn creation(dim: usize) -> Result<FockOperator> {
    Ok(annihilation(dim)?.adjoint())
}

/// Truncated coherent state vector together with its norm deficit
/// `1 - ‖v‖²`.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<(CVector, f64)> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "state needs dim >= 1",
        });
    }
    let mut v = CVector::zeros(dim);
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    let mut term = C64::new(pref, 0.0);
    v[0] = term;
    for n in 1..dim {
        term *= alpha / C64::new((n as f64).sqrt(), 0.0);
        v[n] = term;
    }
    let deficit = 1.0 - v.norm_squared();
    Ok((v, deficit))
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    // 1-norm controls the Taylor remainder.
    let norm = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = m / C64::new(2f64.powi(s as i32), 0.0);
    let mut sum = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=40u32 {
        term = (&term * &a) / C64::new(k as f64, 0.0);
        sum += &term;
        let t = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if t < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Displacement operator `D(ζ) = exp(ζ a† − ζ̄ a)` from its closed-form
/// matrix elements
/// `⟨m|D|n⟩ = e^{−|ζ|²/2} √(n!/m!) ζ^{m−n} L_n^{(m−n)}(|ζ|²)` (m ≥ n),
/// built per diagonal with the associated-Laguerre recurrence. Unlike a
/// matrix exponential, this keeps the exponentially small entries
/// relatively accurate, which the tail of the displaced thermal spectrum
/// depends on.
pub fn displacement(zeta: C64, dim: usize) -> Result<FockOperator> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "displacement needs dim >= 1",
        });
    }
    let x = zeta.norm_sqr();
    let e = (-0.5 * x).exp();
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        // Prefactors √(n!/(n+k)!) ζ^k at n = 0 for the lower diagonal and
        // its (−ζ̄)^k mirror for the upper one.
        let mut p_lo = C64::new(e, 0.0);
        let mut p_hi = C64::new(e, 0.0);
        for j in 1..=k {
            p_lo *= zeta / (j as f64).sqrt();
            p_hi *= -zeta.conj() / (j as f64).sqrt();
        }
        let mut l_prev = 0.0;
        let mut l_cur = 1.0; // L_0^{(k)}(x)
        for t in 0..dim - k {
            m[(t + k, t)] = p_lo * l_cur;
            if k > 0 {
                m[(t, t + k)] = p_hi * l_cur;
            }
            let l_next = (((2 * t + 1 + k) as f64 - x) * l_cur - (t + k) as f64 * l_prev)
                / (t + 1) as f64;
            l_prev = l_cur;
            l_cur = l_next;
            let ratio = ((t + 1) as f64 / (t + 1 + k) as f64).sqrt();
            p_lo *= ratio;
            p_hi *= ratio;
        }
    }
    FockOperator::from_matrix(dim, m)
}

/// Thermal state of mean photon number `n_bar`, diagonal
/// `(1/(N+1)) (N/(N+1))^n`.
pub fn thermal_diagonal(n_bar: f64, dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    let ratio = n_bar / (n_bar + 1.0);
    let mut p = 1.0 / (n_bar + 1.0);
    for n in 0..dim {
        m[(n, n)] = C64::new(p, 0.0);
        p *= ratio;
    }
    m
}

/// Displaced thermal (quantum Gaussian) state `D(ζ) ρ_th D(ζ)†`, checked
/// against the default tail tolerance.
pub fn displaced_thermal(n_bar: f64, zeta: C64, dim: usize) -> Result<DensityOperator> {
    displaced_thermal_with_tol(n_bar, zeta, dim, DEFAULT_TAIL_TOL)
}

/// As [`displaced_thermal`], with an explicit tail tolerance
/// (`f64::INFINITY` disables the check).
pub fn displaced_thermal_with_tol(
    n_bar: f64,
    zeta: C64,
    dim: usize,
    tail_tol: f64,
) -> Result<DensityOperator> {
    if n_bar <= 0.0 {
        return Err(Error::InconsistentInputs(format!(
            "thermal photon number must be positive, got {n_bar}"
        )));
    }
    let th = thermal_diagonal(n_bar, dim);
    let lambdas: Vec<f64> = (0..dim).map(|n| th[(n, n)].re).collect();
    let (rho, u) = if zeta.norm() == 0.0 {
        (th, CMatrix::identity(dim, dim))
    } else {
        let d = displacement(zeta, dim)?;
        let u = d.into_matrix();
        (&u * th * u.adjoint(), u)
    };
    Ok(DensityOperator::new(FockOperator::from_matrix(dim, rho)?, tail_tol)?
        .with_exact_eigensystem(u, lambdas))
}

/// Truncation heuristic for the displaced thermal state:
/// `ceil(8 (N + |ζ|² + 2|ζ|√N + 1))`, raised when the pure thermal tail
/// alone would still exceed the default tolerance, plus a small pad for the
/// norm the truncated displacement loses on its highest columns.
pub fn suggested_dim(n_bar: f64, zeta: C64) -> usize {
    let z = zeta.norm();
    let heuristic = (8.0 * (n_bar + z * z + 2.0 * z * n_bar.sqrt() + 1.0)).ceil() as usize;
    // Geometric tail of the thermal diagonal: (N/(N+1))^dim < tol.
    let ratio = n_bar / (n_bar + 1.0);
    let thermal_floor = (DEFAULT_TAIL_TOL.ln() / ratio.ln()).ceil() as usize + 1;
    heuristic.max(thermal_floor) + 8
}

/// `x ⊗ I` on system ⊗ ancilla; `x` must be single-mode.
pub fn extend_with_ancilla(x: &FockOperator, dim_b: usize) -> Result<FockOperator> {
    if x.dim_b() != 0 {
        return Err(Error::InconsistentInputs(
            "operator already carries an ancilla mode".into(),
        ));
    }
    if dim_b < 1 {
        return Err(Error::InvalidDimension {
            dim: dim_b,
            reason: "ancilla needs dim_b >= 1",
        });
    }
    let id_b = CMatrix::identity(dim_b, dim_b);
    FockOperator::from_matrix_two_mode(x.dim_a(), dim_b, x.matrix().kronecker(&id_b))
}

/// The ancilla annihilation operator `b = I ⊗ a` on system ⊗ ancilla.
pub fn ancilla_annihilation(dim_a: usize, dim_b: usize) -> Result<FockOperator> {
    let a_b = annihilation(dim_b)?;
    let id_a = CMatrix::identity(dim_a, dim_a);
    FockOperator::from_matrix_two_mode(dim_a, dim_b, id_a.kronecker(a_b.matrix()))
}

/// Extends a system state to `ρ ⊗ f₀f₀†` (ancilla in vacuum).
pub fn extend_state(rho: &DensityOperator, dim_b: usize) -> Result<DensityOperator> {
    if rho.dim_b() != 0 {
        return Err(Error::InconsistentInputs(
            "state already carries an ancilla mode".into(),
        ));
    }
    let mut vac = CMatrix::zeros(dim_b, dim_b);
    vac[(0, 0)] = C64::new(1.0, 0.0);
    let op =
        FockOperator::from_matrix_two_mode(rho.dim_a(), dim_b, rho.matrix().kronecker(&vac))?;
    // Deficit carried over from the system state; ancilla vacuum is exact.
    Ok(DensityOperator {
        trace_deficit: rho.trace_deficit(),
        op,
        eigensystem: None,
    })
}
