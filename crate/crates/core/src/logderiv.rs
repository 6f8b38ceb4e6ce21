//! Symmetric, right, and left logarithmic-derivative vectors: numerical
//! solvers working in the eigenbasis of ρ, plus the displaced-thermal
//! closed forms.

use num_complex::Complex64 as C64;

use crate::fock::{CMatrix, DensityOperator, FockOperator};
use crate::model::{DerivativeStack, StackKind};
use crate::poly::{binomial, factorial, NormalOrderedPoly};
use crate::{Error, Result};

/// Relative eigenvalue floor applied to ρ before division.
pub const EIGENVALUE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDerivFlavor {
    /// Symmetric: dρ = (ρL + Lρ)/2.
    S,
    /// Right: dρ = ρL.
    R,
    /// Left: dρ = Lρ.
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDerivSource {
    Numerical,
    GaussianClosedForm,
}

/// Ordered vector of logarithmic-derivative operators, one per entry of the
/// generating [`DerivativeStack`].
#[derive(Debug, Clone)]
pub struct LogDerivVector {
    pub flavor: LogDerivFlavor,
    pub order: usize,
    pub entries: Vec<FockOperator>,
    pub source: LogDerivSource,
    /// Notes attached by the solver, e.g. eigenvalue flooring.
    pub warnings: Vec<String>,
}

struct FlooredEigen {
    u: CMatrix,
    lambdas: Vec<f64>,
    clamped: usize,
}

fn floored_eigen(rho: &DensityOperator) -> Result<FlooredEigen> {
    // Prefer an exact spectral decomposition carried by the state; the
    // inversion below divides by eigenvalues far beneath the noise floor of
    // a numerical eigendecomposition.
    let (u, raw, exact): (CMatrix, Vec<f64>, bool) = match rho.eigensystem() {
        Some((u, l)) => (u.clone(), l.to_vec(), true),
        None => {
            let eig = rho.matrix().clone().symmetric_eigen();
            let l = eig.eigenvalues.iter().cloned().collect();
            (eig.eigenvectors, l, false)
        }
    };
    let lambda_max = raw.iter().cloned().fold(f64::MIN, f64::max);
    if !(lambda_max > 0.0) {
        return Err(Error::SingularState { lambda_max });
    }
    // Exact spectra are positive by construction and safe to divide by;
    // the relative floor only guards numerically obtained eigenvalues,
    // whose tail is dominated by round-off.
    let tau = if exact {
        f64::MIN_POSITIVE
    } else {
        EIGENVALUE_FLOOR * lambda_max
    };
    let mut clamped = 0;
    let lambdas: Vec<f64> = raw
        .iter()
        .map(|&l| {
            if l < tau {
                clamped += 1;
                tau
            } else {
                l
            }
        })
        .collect();
    Ok(FlooredEigen { u, lambdas, clamped })
}

fn solve_in_eigenbasis(
    rho: &DensityOperator,
    stack: &DerivativeStack,
    expected_kind: StackKind,
    flavor: LogDerivFlavor,
) -> Result<LogDerivVector> {
    if stack.kind != expected_kind {
        return Err(Error::FlavorMismatch(format!(
            "{:?} solver needs a {:?} derivative stack, got {:?}",
            flavor, expected_kind, stack.kind
        )));
    }
    let eig = floored_eigen(rho)?;
    let n = rho.matrix().nrows();
    let u_h = eig.u.adjoint();
    let mut entries = Vec::with_capacity(stack.entries.len());
    for d in &stack.entries {
        if d.dim() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: d.dim(),
            });
        }
        let d_tilde = &u_h * d.matrix() * &eig.u;
        let mut l_tilde = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let denom = match flavor {
                    LogDerivFlavor::S => (eig.lambdas[i] + eig.lambdas[j]) / 2.0,
                    LogDerivFlavor::R => eig.lambdas[i],
                    LogDerivFlavor::L => eig.lambdas[j],
                };
                l_tilde[(i, j)] = d_tilde[(i, j)] / denom;
            }
        }
        let l = &eig.u * l_tilde * &u_h;
        let op = FockOperator::from_matrix_two_mode(rho.dim_a(), rho.dim_b(), l)?;
        entries.push(if flavor == LogDerivFlavor::S {
            op.hermitized()
        } else {
            op
        });
    }
    let mut warnings = Vec::new();
    if eig.clamped > 0 {
        warnings.push(format!(
            "{} eigenvalues of the state clamped to the relative floor {EIGENVALUE_FLOOR:e}",
            eig.clamped
        ));
    }
    Ok(LogDerivVector {
        flavor,
        order: stack.order,
        entries,
        source: LogDerivSource::Numerical,
        warnings,
    })
}

/// Solve `d^jρ = (ρ L_j + L_j ρ)/2` for each entry of a real stack.
pub fn solve_sld(rho: &DensityOperator, stack: &DerivativeStack) -> Result<LogDerivVector> {
    solve_in_eigenbasis(rho, stack, StackKind::Real, LogDerivFlavor::S)
}

/// Solve `D_j = ρ L_j` for each entry of a complex (Wirtinger) stack.
pub fn solve_rld(rho: &DensityOperator, stack: &DerivativeStack) -> Result<LogDerivVector> {
    solve_in_eigenbasis(rho, stack, StackKind::Complex, LogDerivFlavor::R)
}

/// Solve `D_j = L_j ρ` for each entry of a complex (Wirtinger) stack.
pub fn solve_lld(rho: &DensityOperator, stack: &DerivativeStack) -> Result<LogDerivVector> {
    solve_in_eigenbasis(rho, stack, StackKind::Complex, LogDerivFlavor::L)
}

fn gaussian_lr_closed_form(
    n_bar: f64,
    zeta: C64,
    p: u32,
    q: u32,
    right: bool,
) -> NormalOrderedPoly {
    assert!(p + q >= 1, "closed form needs p + q >= 1");
    let lo = p.min(q);
    let hi = p.max(q);
    let a_shift = NormalOrderedPoly::a().sub(&NormalOrderedPoly::constant(zeta));
    let adag_shift = NormalOrderedPoly::a_dag().sub(&NormalOrderedPoly::constant(zeta.conj()));
    let mut out = NormalOrderedPoly::zero();
    for r in 0..=lo {
        let alpha = r + q.saturating_sub(p);
        let beta = r + p.saturating_sub(q);
        let sign = if (lo - r) % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = binomial(hi, lo - r) * factorial(lo) / factorial(r);
        let denom = if right {
            n_bar.powi(p as i32) * (n_bar + 1.0).powi(alpha as i32)
        } else {
            n_bar.powi(q as i32) * (n_bar + 1.0).powi(beta as i32)
        };
        let term = a_shift
            .pow(alpha)
            .multiply(&adag_shift.pow(beta))
            .scale(C64::new(sign * coeff / denom, 0.0));
        out = out.add(&term);
    }
    out
}

/// Closed-form right-logarithmic-derivative entry for the displaced thermal
/// state: `d^{p+q}ρ_ζ/dζ^p dζ̄^q = ρ_ζ · L` with the returned `L`.
pub fn gaussian_rld_closed_form(n_bar: f64, zeta: C64, p: u32, q: u32) -> NormalOrderedPoly {
    gaussian_lr_closed_form(n_bar, zeta, p, q, true)
}

/// Left counterpart: `d^{p+q}ρ_ζ/dζ^p dζ̄^q = L · ρ_ζ`.
pub fn gaussian_lld_closed_form(n_bar: f64, zeta: C64, p: u32, q: u32) -> NormalOrderedPoly {
    gaussian_lr_closed_form(n_bar, zeta, p, q, false)
}
