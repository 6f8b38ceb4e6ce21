//! Information matrices for the three logarithmic-derivative flavors and
//! the higher-order variance lower bounds built from them.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::fock::{CMatrix, DensityOperator};
use crate::logderiv::{LogDerivFlavor, LogDerivVector};
use crate::model::wirtinger_orders;
use crate::poly::factorial;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JFlavor {
    S,
    R,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JSource {
    Numerical,
    GaussianClosedForm,
}

/// Information matrix of one flavor at one derivative order: `k×k` for the
/// symmetric flavor, `K×K` with `K = k(k+3)/2` for the right/left flavors.
#[derive(Debug, Clone)]
pub struct InfoMatrix {
    pub flavor: JFlavor,
    pub order: usize,
    pub matrix: CMatrix,
    pub source: JSource,
}

impl InfoMatrix {
    pub fn new(flavor: JFlavor, order: usize, matrix: CMatrix, source: JSource) -> Result<Self> {
        let herm_residual = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_residual > 1e-9 {
            return Err(Error::InconsistentInputs(format!(
                "information matrix not Hermitian: residual {herm_residual:e}"
            )));
        }
        let eigs = matrix.clone().symmetric_eigen().eigenvalues;
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -1e-9 {
                return Err(Error::InconsistentInputs(format!(
                    "information matrix not positive semidefinite: min eigenvalue {min:e}"
                )));
            }
        }
        Ok(Self {
            flavor,
            order,
            matrix,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ratio of the largest to smallest eigenvalue magnitude.
    pub fn condition_number(&self) -> f64 {
        let eigs = self.matrix.clone().symmetric_eigen().eigenvalues;
        let max = eigs.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let min = eigs.iter().fold(f64::MAX, |a, &l| a.min(l.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Pseudo-inverse: eigenvalues below `1e-12·λ_max` are dropped.
    pub fn pseudo_inverse(&self) -> CMatrix {
        let eig = self.matrix.clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let cutoff = 1e-12 * lambda_max;
        let n = self.matrix.nrows();
        let mut diag = CMatrix::zeros(n, n);
        for i in 0..n {
            let l = eig.eigenvalues[i];
            if l.abs() > cutoff {
                diag[(i, i)] = C64::new(1.0 / l, 0.0);
            }
        }
        &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
    }
}

fn expected_flavor(l: LogDerivFlavor) -> JFlavor {
    match l {
        LogDerivFlavor::S => JFlavor::S,
        LogDerivFlavor::R => JFlavor::R,
        LogDerivFlavor::L => JFlavor::L,
    }
}

/// Assemble the information matrix from a solved logarithmic-derivative
/// vector: `Tr[ρ L_i L_j]` (S), `Tr[ρ L_i L_j†]` (R), `Tr[L_i ρ L_j†]` (L).
pub fn j_matrix(rho: &DensityOperator, l: &LogDerivVector) -> Result<InfoMatrix> {
    let n = l.entries.len();
    let mut j = CMatrix::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            let entry = match l.flavor {
                LogDerivFlavor::S => rho.expectation(&(&l.entries[row] * &l.entries[col])),
                LogDerivFlavor::R => {
                    rho.expectation(&(&l.entries[row] * &l.entries[col].adjoint()))
                }
                LogDerivFlavor::L => (&(&l.entries[row] * rho.op()) * &l.entries[col].adjoint())
                    .trace(),
            };
            j[(row, col)] = entry;
        }
    }
    let asym = (&j - j.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if asym > 1e-7 {
        return Err(Error::InconsistentInputs(format!(
            "information-matrix asymmetry {asym:e} exceeds 1e-7"
        )));
    }
    let j = (&j + j.adjoint()) * C64::new(0.5, 0.0);
    InfoMatrix::new(expected_flavor(l.flavor), l.order, j, JSource::Numerical)
}

/// Closed-form information matrix of the displaced-thermal model.
///
/// R/L flavors are diagonal with entries `p!q!/(N^p(N+1)^q)` and
/// `p!q!/(N^q(N+1)^p)`; the symmetric flavor is the explicit diagonal
/// matrix known for `k ≤ 3`.
pub fn gaussian_j_closed_form(n_bar: f64, k: usize, flavor: JFlavor) -> Result<InfoMatrix> {
    let np1 = n_bar + 1.0;
    match flavor {
        JFlavor::S => {
            if k == 0 || k > 3 {
                return Err(Error::UnsupportedOrder { order: k, max: 3 });
            }
            let diag = [
                4.0 / (2.0 * n_bar + 1.0),
                8.0 / (n_bar * n_bar + np1 * np1) + 4.0 / (n_bar * np1),
                24.0 / (n_bar.powi(3) + np1.powi(3))
                    + 72.0 / (n_bar * np1 * (2.0 * n_bar + 1.0)),
            ];
            let mut m = CMatrix::zeros(k, k);
            for i in 0..k {
                m[(i, i)] = C64::new(diag[i], 0.0);
            }
            InfoMatrix::new(flavor, k, m, JSource::GaussianClosedForm)
        }
        JFlavor::R | JFlavor::L => {
            if k == 0 {
                return Err(Error::UnsupportedOrder { order: k, max: 3 });
            }
            let orders = wirtinger_orders(k);
            let kk = orders.len();
            let mut m = CMatrix::zeros(kk, kk);
            for (i, &(p, q)) in orders.iter().enumerate() {
                let (ep, eq) = if flavor == JFlavor::R { (p, q) } else { (q, p) };
                let val = factorial(p) * factorial(q)
                    / (n_bar.powi(ep as i32) * np1.powi(eq as i32));
                m[(i, i)] = C64::new(val, 0.0);
            }
            InfoMatrix::new(flavor, k, m, JSource::GaussianClosedForm)
        }
    }
}

/// Function of the parameter whose value is being estimated: a real
/// polynomial in θ, or a polynomial in ζ and ζ̄ with coefficient table
/// `c_{m,n}` for the monomial `ζ^m ζ̄^n`.
#[derive(Debug, Clone)]
pub enum GFunction {
    RealPoly(Vec<f64>),
    ComplexPoly(BTreeMap<(u32, u32), C64>),
}

fn falling(m: u32, j: u32) -> f64 {
    if j > m {
        return 0.0;
    }
    (m - j + 1..=m).map(|v| v as f64).product()
}

fn powz(z: C64, e: u32) -> C64 {
    z.powu(e)
}

impl GFunction {
    pub fn real(coeffs: Vec<f64>) -> Self {
        GFunction::RealPoly(coeffs)
    }

    pub fn complex(terms: impl IntoIterator<Item = ((u32, u32), C64)>) -> Self {
        let mut map = BTreeMap::new();
        for (k, v) in terms {
            *map.entry(k).or_insert(C64::new(0.0, 0.0)) += v;
        }
        map.retain(|_, v| v.norm() > 0.0);
        GFunction::ComplexPoly(map)
    }

    /// A complex polynomial is real-valued iff `c_{m,n} = conj(c_{n,m})`.
    pub fn is_real_valued(&self) -> bool {
        match self {
            GFunction::RealPoly(_) => true,
            GFunction::ComplexPoly(c) => c.iter().all(|(&(m, n), &v)| {
                let mirror = c.get(&(n, m)).cloned().unwrap_or(C64::new(0.0, 0.0));
                (v - mirror.conj()).norm() < 1e-12
            }),
        }
    }

    /// All `c_{m,n}` with `n > 0` vanish.
    pub fn is_holomorphic(&self) -> bool {
        match self {
            GFunction::RealPoly(_) => false,
            GFunction::ComplexPoly(c) => c.keys().all(|&(_, n)| n == 0),
        }
    }

    pub fn is_antiholomorphic(&self) -> bool {
        match self {
            GFunction::RealPoly(_) => false,
            GFunction::ComplexPoly(c) => c.keys().all(|&(m, _)| m == 0),
        }
    }

    pub fn eval_real(&self, theta: f64) -> Result<f64> {
        match self {
            GFunction::RealPoly(coeffs) => Ok(coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| c * theta.powi(j as i32))
                .sum()),
            GFunction::ComplexPoly(_) => Err(Error::FlavorMismatch(
                "complex-polynomial g evaluated at a real-only call site".into(),
            )),
        }
    }

    pub fn eval_complex(&self, zeta: C64) -> C64 {
        match self {
            GFunction::RealPoly(coeffs) => coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| C64::new(c, 0.0) * powz(zeta, j as u32))
                .sum(),
            GFunction::ComplexPoly(c) => c
                .iter()
                .map(|(&(m, n), &v)| v * powz(zeta, m) * powz(zeta.conj(), n))
                .sum(),
        }
    }

    /// Vector of derivatives `g^{(j)}(θ)`, `j = 1..=k`.
    pub fn real_derivative_vector(&self, theta: f64, k: usize) -> Result<Vec<f64>> {
        let coeffs = match self {
            GFunction::RealPoly(c) => c,
            GFunction::ComplexPoly(_) => {
                return Err(Error::FlavorMismatch(
                    "symmetric-flavor bound needs a real polynomial g".into(),
                ))
            }
        };
        let mut out = Vec::with_capacity(k);
        for j in 1..=k as u32 {
            let mut d = 0.0;
            for (m, &c) in coeffs.iter().enumerate() {
                let m = m as u32;
                if m >= j {
                    d += c * falling(m, j) * theta.powi((m - j) as i32);
                }
            }
            out.push(d);
        }
        Ok(out)
    }

    fn complex_terms(&self) -> Result<&BTreeMap<(u32, u32), C64>> {
        match self {
            GFunction::ComplexPoly(c) => Ok(c),
            GFunction::RealPoly(_) => Err(Error::FlavorMismatch(
                "right/left-flavor bound needs a g given in ζ, ζ̄".into(),
            )),
        }
    }

    /// Row vector entry at position (p,q): `∂^{p+q} g / ∂ζ^q ∂ζ̄^p`.
    pub fn complex_left_vector(&self, zeta: C64, k: usize) -> Result<Vec<C64>> {
        let c = self.complex_terms()?;
        Ok(wirtinger_orders(k)
            .into_iter()
            .map(|(p, q)| {
                c.iter()
                    .map(|(&(m, n), &v)| {
                        if m < q || n < p {
                            C64::new(0.0, 0.0)
                        } else {
                            v * C64::new(falling(m, q) * falling(n, p), 0.0)
                                * powz(zeta, m - q)
                                * powz(zeta.conj(), n - p)
                        }
                    })
                    .sum()
            })
            .collect())
    }

    /// Column vector entry at position (p,q): `∂^{p+q} ḡ... ` the same
    /// derivative applied to the argument-conjugated polynomial
    /// `Σ c_{m,n} ζ̄^m ζ^n`.
    pub fn complex_right_vector(&self, zeta: C64, k: usize) -> Result<Vec<C64>> {
        let c = self.complex_terms()?;
        Ok(wirtinger_orders(k)
            .into_iter()
            .map(|(p, q)| {
                c.iter()
                    .map(|(&(m, n), &v)| {
                        if n < p || m < q {
                            C64::new(0.0, 0.0)
                        } else {
                            v * C64::new(falling(n, p) * falling(m, q), 0.0)
                                * powz(zeta, n - p)
                                * powz(zeta.conj(), m - q)
                        }
                    })
                    .sum()
            })
            .collect())
    }
}

/// Evaluated lower bound plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub value: f64,
    pub condition_number: f64,
    pub warnings: Vec<String>,
}

/// Variance lower bound for estimating `g` at the given parameter point,
/// using an information matrix of matching flavor.
///
/// Symmetric flavor: `ᵗD_k[g] (J^S_k)⁻¹ D_k[g]` with the ordinary
/// derivative vector. Right/left flavors: the quadratic form pairing the
/// (p,q)-indexed Wirtinger derivative vectors of `g(ζ)` and `g(ζ̄)`.
pub fn bound(g: &GFunction, param: C64, j: &InfoMatrix) -> Result<BoundResult> {
    let k = j.order;
    let j_inv = j.pseudo_inverse();
    let mut warnings = Vec::new();
    let condition_number = j.condition_number();
    if condition_number > 1e12 {
        warnings.push(format!(
            "information matrix ill conditioned: condition number {condition_number:e}"
        ));
    }
    let raw = match j.flavor {
        JFlavor::S => {
            if param.im.abs() > 1e-12 {
                return Err(Error::FlavorMismatch(
                    "symmetric-flavor bound evaluated at a non-real parameter".into(),
                ));
            }
            let d = g.real_derivative_vector(param.re, k)?;
            if d.len() != j.dim() {
                return Err(Error::DimensionMismatch {
                    left: d.len(),
                    right: j.dim(),
                });
            }
            let dv = CMatrix::from_fn(d.len(), 1, |i, _| C64::new(d[i], 0.0));
            (dv.adjoint() * &j_inv * dv)[(0, 0)]
        }
        JFlavor::R | JFlavor::L => {
            let left = g.complex_left_vector(param, k)?;
            let right = g.complex_right_vector(param, k)?;
            if left.len() != j.dim() {
                return Err(Error::DimensionMismatch {
                    left: left.len(),
                    right: j.dim(),
                });
            }
            let lv = CMatrix::from_fn(1, left.len(), |_, i| left[i]);
            let rv = CMatrix::from_fn(right.len(), 1, |i, _| right[i]);
            (lv * &j_inv * rv)[(0, 0)]
        }
    };
    if raw.im.abs() > 1e-9 {
        return Err(Error::InconsistentInputs(format!(
            "bound has imaginary residue {:e}",
            raw.im
        )));
    }
    Ok(BoundResult {
        value: raw.re.max(0.0),
        condition_number,
        warnings,
    })
}

/// Bound values for a nested sequence of information matrices, in order.
pub fn bound_monotonicity_report(
    g: &GFunction,
    param: C64,
    j_sequence: &[InfoMatrix],
) -> Result<Vec<f64>> {
    j_sequence.iter().map(|j| Ok(bound(g, param, j)?.value)).collect()
}
