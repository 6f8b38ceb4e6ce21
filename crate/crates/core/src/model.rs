//! Parametric models ρ(parameter) with a real or complex scalar parameter,
//! and their derivative stacks: finite-difference stacks (with one
//! Richardson level) and Gaussian closed-form stacks.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::fock::{displaced_thermal_with_tol, CMatrix, DensityOperator, FockOperator, DEFAULT_TAIL_TOL};
use crate::logderiv::gaussian_rld_closed_form;
use crate::poly::binomial;
use crate::{Error, Result};

/// Maximum derivative order supported by the finite-difference stacks.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackKind {
    Real,
    Complex,
}

/// Ordered vector of parameter-derivatives of ρ.
///
/// Real kind: length `k`, entry `j-1` is `d^j ρ / dθ^j`.
/// Complex kind: length `K = k(k+3)/2`, entry at [`wirtinger_index`]`(p, q)`
/// is `d^{p+q} ρ / dζ^p dζ̄^q`, in the order (1,0), (0,1), (2,0), (1,1),
/// (0,2), ... down to (0,k).
#[derive(Debug, Clone)]
pub struct DerivativeStack {
    pub kind: StackKind,
    pub order: usize,
    pub entries: Vec<FockOperator>,
}

impl DerivativeStack {
    /// Entry `d^{p+q} ρ / dζ^p dζ̄^q` of a complex stack.
    pub fn wirtinger_entry(&self, p: u32, q: u32) -> &FockOperator {
        assert_eq!(self.kind, StackKind::Complex);
        &self.entries[wirtinger_index(p, q)]
    }
}

/// Position (0-based) of `d^{p+q}/dζ^p dζ̄^q` in the complex derivative
/// vector: `(p+q−1)(p+q+2)/2 + q`.
pub fn wirtinger_index(p: u32, q: u32) -> usize {
    let m = p + q;
    assert!(m >= 1, "wirtinger_index needs p + q >= 1");
    ((m - 1) * (m + 2) / 2 + q) as usize
}

/// The (p, q) orders of the complex derivative vector for total orders
/// 1..=k, in vector order.
pub fn wirtinger_orders(k: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(k * (k + 3) / 2);
    for m in 1..=k as u32 {
        for q in 0..=m {
            out.push((m - q, q));
        }
    }
    out
}

type RealFn = Arc<dyn Fn(f64) -> Result<DensityOperator> + Send + Sync>;
type ComplexFn = Arc<dyn Fn(C64) -> Result<DensityOperator> + Send + Sync>;

/// One-parameter model with a real parameter.
#[derive(Clone)]
pub struct RealModel {
    state_fn: RealFn,
}

impl RealModel {
    pub fn new(state_fn: impl Fn(f64) -> Result<DensityOperator> + Send + Sync + 'static) -> Self {
        Self {
            state_fn: Arc::new(state_fn),
        }
    }

    /// Displaced thermal state with the amplitude restricted to the real axis.
    pub fn gaussian(n_bar: f64, dim: usize) -> Self {
        Self::new(move |theta| {
            displaced_thermal_with_tol(n_bar, C64::new(theta, 0.0), dim, DEFAULT_TAIL_TOL)
        })
    }

    pub fn state(&self, theta: f64) -> Result<DensityOperator> {
        (self.state_fn)(theta)
    }
}

/// One-parameter model with a complex parameter.
#[derive(Clone)]
pub struct ComplexModel {
    state_fn: ComplexFn,
}

impl ComplexModel {
    pub fn new(state_fn: impl Fn(C64) -> Result<DensityOperator> + Send + Sync + 'static) -> Self {
        Self {
            state_fn: Arc::new(state_fn),
        }
    }

    pub fn gaussian(n_bar: f64, dim: usize) -> Self {
        Self::new(move |zeta| displaced_thermal_with_tol(n_bar, zeta, dim, DEFAULT_TAIL_TOL))
    }

    pub fn state(&self, zeta: C64) -> Result<DensityOperator> {
        (self.state_fn)(zeta)
    }
}

/// Default finite-difference step `1e-3 · max(1, |parameter|)`.
pub fn default_step(param_magnitude: f64) -> f64 {
    1e-3 * param_magnitude.max(1.0)
}

/// Order-2 central stencil for the `j`-th derivative, as (offset, weight)
/// pairs; weights are divided by `h^j` by the caller.
fn stencil(j: usize) -> &'static [(i32, f64)] {
    match j {
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => unreachable!("stencil order capped at 3"),
    }
}

fn check_order(k: usize) -> Result<()> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::UnsupportedOrder {
            order: k,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// Finite-difference derivative stack `d^j ρ/dθ^j`, `j = 1..=k`, with one
/// Richardson extrapolation level; entries Hermitized.
pub fn real_derivatives(model: &RealModel, theta: f64, k: usize, h: f64) -> Result<DerivativeStack> {
    check_order(k)?;
    let half = h / 2.0;
    // One shared probe lattice at θ + i·(h/2), i ∈ -4..=4, covers both the
    // h and h/2 stencils of every order.
    let mut probes: Vec<Option<CMatrix>> = vec![None; 9];
    let probe = |i: i32, probes: &mut Vec<Option<CMatrix>>| -> Result<CMatrix> {
        let idx = (i + 4) as usize;
        if probes[idx].is_none() {
            let rho = model.state(theta + i as f64 * half)?;
            probes[idx] = Some(rho.matrix().clone());
        }
        Ok(probes[idx].clone().unwrap())
    };

    let mut entries = Vec::with_capacity(k);
    let (dim_a, dim_b) = {
        let rho = model.state(theta)?;
        (rho.dim_a(), rho.dim_b())
    };
    for j in 1..=k {
        let mut at_step = |step_units: i32, step: f64| -> Result<CMatrix> {
            let mut acc: Option<CMatrix> = None;
            for &(off, w) in stencil(j) {
                let m = probe(off * step_units, &mut probes)?;
                let term = m * C64::new(w / step.powi(j as i32), 0.0);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a + term,
                });
            }
            Ok(acc.unwrap())
        };
        let coarse = at_step(2, h)?;
        let fine = at_step(1, half)?;
        let richardson = (fine * C64::new(4.0, 0.0) - coarse) / C64::new(3.0, 0.0);
        let op = FockOperator::from_matrix_two_mode(dim_a, dim_b, richardson)?;
        entries.push(op.hermitized());
    }
    Ok(DerivativeStack {
        kind: StackKind::Real,
        order: k,
        entries,
    })
}

/// Finite-difference Wirtinger derivative stack
/// `d^{p+q} ρ/dζ^p dζ̄^q` for all `1 ≤ p+q ≤ k`, via mixed x/y central
/// stencils combined per `d/dζ = (∂x − i∂y)/2`, `d/dζ̄ = (∂x + i∂y)/2`,
/// with one Richardson level.
pub fn wirtinger_derivatives(
    model: &ComplexModel,
    zeta: C64,
    k: usize,
    h: f64,
) -> Result<DerivativeStack> {
    check_order(k)?;
    let half = h / 2.0;
    let mut probes: Vec<Option<CMatrix>> = vec![None; 81];
    let probe = |ix: i32, iy: i32, probes: &mut Vec<Option<CMatrix>>| -> Result<CMatrix> {
        let idx = ((ix + 4) * 9 + (iy + 4)) as usize;
        if probes[idx].is_none() {
            let z = zeta + C64::new(ix as f64 * half, iy as f64 * half);
            probes[idx] = Some(model.state(z)?.matrix().clone());
        }
        Ok(probes[idx].clone().unwrap())
    };
    let (dim_a, dim_b) = {
        let rho = model.state(zeta)?;
        (rho.dim_a(), rho.dim_b())
    };

    // Mixed partials ∂x^s ∂y^t ρ for 1 ≤ s+t ≤ k, Richardson-extrapolated.
    let mut mixed: Vec<Vec<Option<CMatrix>>> = vec![vec![None; k + 1]; k + 1];
    for s in 0..=k {
        for t in 0..=k {
            if s + t == 0 || s + t > k {
                continue;
            }
            let mut at_step = |units: i32, step: f64| -> Result<CMatrix> {
                let sx: &[(i32, f64)] = if s == 0 { &[(0, 1.0)] } else { stencil(s) };
                let sy: &[(i32, f64)] = if t == 0 { &[(0, 1.0)] } else { stencil(t) };
                let scale = step.powi(s as i32) * step.powi(t as i32);
                let mut acc: Option<CMatrix> = None;
                for &(ox, wx) in sx {
                    for &(oy, wy) in sy {
                        let m = probe(ox * units, oy * units, &mut probes)?;
                        let term = m * C64::new(wx * wy / scale, 0.0);
                        acc = Some(match acc {
                            None => term,
                            Some(a) => a + term,
                        });
                    }
                }
                Ok(acc.unwrap())
            };
            let coarse = at_step(2, h)?;
            let fine = at_step(1, half)?;
            mixed[s][t] = Some((fine * C64::new(4.0, 0.0) - coarse) / C64::new(3.0, 0.0));
        }
    }

    let mut entries = Vec::new();
    for (p, q) in wirtinger_orders(k) {
        let m_tot = p + q;
        let mut acc = CMatrix::zeros(dim_a * dim_b.max(1), dim_a * dim_b.max(1));
        // (∂x − i∂y)^p (∂x + i∂y)^q / 2^{p+q}
        for i in 0..=p {
            for j in 0..=q {
                let coeff = C64::new(binomial(p, i) * binomial(q, j), 0.0)
                    * C64::new(0.0, -1.0).powu(p - i)
                    * C64::new(0.0, 1.0).powu(q - j);
                let s = (i + j) as usize;
                let t = (m_tot - i - j) as usize;
                acc += mixed[s][t].as_ref().unwrap() * coeff;
            }
        }
        acc /= C64::new(2f64.powi(m_tot as i32), 0.0);
        entries.push(FockOperator::from_matrix_two_mode(dim_a, dim_b, acc)?);
    }
    Ok(DerivativeStack {
        kind: StackKind::Complex,
        order: k,
        entries,
    })
}

/// Exact (to truncation) Gaussian derivative `d^{p+q} ρ_ζ / dζ^p dζ̄^q`,
/// built operator-side as `ρ_ζ · L^R_{(p,q)}` with the closed-form
/// right-logarithmic-derivative entry.
pub fn gaussian_derivative_closed_form(
    n_bar: f64,
    zeta: C64,
    p: u32,
    q: u32,
    dim: usize,
) -> Result<FockOperator> {
    if p + q == 0 {
        return Err(Error::UnsupportedOrder { order: 0, max: MAX_ORDER });
    }
    let rho = displaced_thermal_with_tol(n_bar, zeta, dim, f64::INFINITY)?;
    let l_op = gaussian_rld_closed_form(n_bar, zeta, p, q).materialize(dim, 0)?;
    Ok(rho.op() * &l_op)
}

/// Full closed-form complex derivative stack for the Gaussian model.
pub fn gaussian_wirtinger_stack_closed_form(
    n_bar: f64,
    zeta: C64,
    k: usize,
    dim: usize,
) -> Result<DerivativeStack> {
    check_order(k)?;
    let entries = wirtinger_orders(k)
        .into_iter()
        .map(|(p, q)| gaussian_derivative_closed_form(n_bar, zeta, p, q, dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(DerivativeStack {
        kind: StackKind::Complex,
        order: k,
        entries,
    })
}

/// Closed-form real-parameter stack via `d/dθ = d/dζ + d/dζ̄` applied to
/// the Wirtinger closed forms.
pub fn gaussian_real_stack_closed_form(
    n_bar: f64,
    theta: f64,
    k: usize,
    dim: usize,
) -> Result<DerivativeStack> {
    check_order(k)?;
    let zeta = C64::new(theta, 0.0);
    let mut entries = Vec::with_capacity(k);
    for j in 1..=k as u32 {
        // (d/dζ + d/dζ̄)^j = Σ_p C(j,p) d^j/dζ^p dζ̄^{j-p}
        let mut acc: Option<FockOperator> = None;
        for p in 0..=j {
            let d = gaussian_derivative_closed_form(n_bar, zeta, p, j - p, dim)?;
            let term = d.scale(C64::new(binomial(j, p), 0.0));
            acc = Some(match acc {
                None => term,
                Some(a) => &a + &term,
            });
        }
        entries.push(acc.unwrap().hermitized());
    }
    Ok(DerivativeStack {
        kind: StackKind::Real,
        order: k,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn index_map_matches_listing() {
        // §-ordering: (1,0),(0,1),(2,0),(1,1),(0,2),(3,0),(2,1),(1,2),(0,3)
        let orders = wirtinger_orders(3);
        assert_eq!(
            orders,
            vec![
                (1, 0),
                (0, 1),
                (2, 0),
                (1, 1),
                (0, 2),
                (3, 0),
                (2, 1),
                (1, 2),
                (0, 3)
            ]
        );
        for (i, &(p, q)) in orders.iter().enumerate() {
            assert_eq!(wirtinger_index(p, q), i);
        }
        assert_eq!(orders.len(), 3 * (3 + 3) / 2);
    }

    #[test]
    fn trace_preserved_under_differentiation() {
        let model = RealModel::gaussian(1.0, 40);
        let stack = real_derivatives(&model, 0.0, 2, default_step(0.0)).unwrap();
        for d in &stack.entries {
            assert!(d.trace().norm() < 1e-8, "trace {}", d.trace());
        }
    }

    #[test]
    fn constant_model_has_zero_derivatives() {
        let rho0 = crate::fock::displaced_thermal(1.0, c(0.0, 0.0), 40).unwrap();
        let model = RealModel::new(move |_| Ok(rho0.clone()));
        let stack = real_derivatives(&model, 0.3, 3, 1e-3).unwrap();
        for d in &stack.entries {
            assert!(d.max_norm() < 1e-9);
        }
    }

    #[test]
    fn order_cap() {
        let model = RealModel::gaussian(1.0, 30);
        assert!(matches!(
            real_derivatives(&model, 0.0, 4, 1e-3),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn real_entries_hermitian() {
        let model = RealModel::gaussian(1.0, 40);
        let stack = real_derivatives(&model, 0.3, 3, 1e-3).unwrap();
        for d in &stack.entries {
            assert!(d.hermiticity_residual() < 5e-8);
        }
    }

    #[test]
    fn wirtinger_trace_and_adjoint_symmetry() {
        let model = ComplexModel::gaussian(1.0, 40);
        let stack = wirtinger_derivatives(&model, c(0.2, 0.1), 2, 1e-3).unwrap();
        for d in &stack.entries {
            assert!(d.trace().norm() < 1e-7, "trace {}", d.trace());
        }
        for (p, q) in wirtinger_orders(2) {
            let d_pq = stack.wirtinger_entry(p, q);
            let d_qp = stack.wirtinger_entry(q, p);
            assert!(d_pq.max_norm_diff(&d_qp.adjoint()) < 5e-8);
        }
    }

    #[test]
    fn real_fd_matches_closed_form() {
        let dim = 60;
        let n_bar = 1.0;
        let theta = 0.3;
        let model = RealModel::gaussian(n_bar, dim);
        let fd = real_derivatives(&model, theta, 2, default_step(theta)).unwrap();
        let cf = gaussian_real_stack_closed_form(n_bar, theta, 2, dim).unwrap();
        for (d_fd, d_cf) in fd.entries.iter().zip(&cf.entries) {
            assert!(
                d_fd.max_norm_diff(d_cf) < 1e-6,
                "diff {}",
                d_fd.max_norm_diff(d_cf)
            );
        }
    }

    #[test]
    fn wirtinger_fd_matches_closed_form_11() {
        let dim = 60;
        let model = ComplexModel::gaussian(1.0, dim);
        let zeta = c(0.2, 0.1);
        let fd = wirtinger_derivatives(&model, zeta, 2, default_step(zeta.norm())).unwrap();
        let cf = gaussian_derivative_closed_form(1.0, zeta, 1, 1, dim).unwrap();
        let diff = fd.wirtinger_entry(1, 1).max_norm_diff(&cf);
        assert!(diff < 1e-6, "diff {diff}");
    }

    #[test]
    fn fd_closed_form_agreement_sweep() {
        let dim = 60;
        for &n_bar in &[0.5, 1.0, 2.0] {
            let zeta = c(0.3, -0.2);
            let model = ComplexModel::gaussian(n_bar, dim);
            let h = default_step(zeta.norm());
            let fd = wirtinger_derivatives(&model, zeta, 3, h).unwrap();
            let cf = gaussian_wirtinger_stack_closed_form(n_bar, zeta, 3, dim).unwrap();
            let tol = (1e3 * h * h).max(1e-6);
            for ((p, q), (d_fd, d_cf)) in
                wirtinger_orders(3).into_iter().zip(fd.entries.iter().zip(&cf.entries))
            {
                let diff = d_fd.max_norm_diff(d_cf);
                assert!(diff < tol, "N={n_bar} (p,q)=({p},{q}) diff {diff}");
            }
        }
    }

    #[test]
    fn first_rld_closed_form_derivative() {
        // (p,q)=(1,0): dρ/dζ = ρ (a† − ζ̄)/N
        let dim = 60;
        let n_bar = 1.0;
        let zeta = c(0.2, 0.0);
        let d = gaussian_derivative_closed_form(n_bar, zeta, 1, 0, dim).unwrap();
        let rho = crate::fock::displaced_thermal(n_bar, zeta, dim).unwrap();
        let adag = crate::fock::creation(dim).unwrap();
        let shift = &adag - &FockOperator::identity(dim, 0).scale(zeta.conj());
        let expect = (rho.op() * &shift).scale(c(1.0 / n_bar, 0.0));
        assert!(d.max_norm_diff(&expect) < 1e-12);
    }
}
