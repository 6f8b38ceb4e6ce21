//! Optimal unbiased estimators for the displaced-thermal model and a
//! verification harness checking bias, variance, normality, and lower-bound
//! attainment on parameter grids.

use num_complex::Complex64 as C64;

use crate::bhatt::{bound, GFunction, InfoMatrix, JFlavor};
use crate::fock::{displaced_thermal_with_tol, extend_state, FockOperator};
use crate::logderiv::{LogDerivFlavor, LogDerivVector};
use crate::poly::NormalOrderedPoly;
use crate::{Error, Result};

/// Polynomial observable proposed as an estimator; the ancilla mode `b`
/// starts in vacuum when present.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub poly: NormalOrderedPoly,
    pub label: String,
    pub requires_ancilla: bool,
}

impl Estimator {
    pub fn new(poly: NormalOrderedPoly, label: impl Into<String>) -> Self {
        let requires_ancilla = poly.uses_ancilla();
        Self {
            poly,
            label: label.into(),
            requires_ancilla,
        }
    }

    pub fn self_adjointness_residual(&self) -> f64 {
        self.poly.max_coeff_diff(&self.poly.adjoint())
    }

    /// Coefficient norm of `TT† − T†T`.
    pub fn normality_residual(&self) -> f64 {
        let adj = self.poly.adjoint();
        self.poly
            .multiply(&adj)
            .sub(&adj.multiply(&self.poly))
            .max_coeff_diff(&NormalOrderedPoly::zero())
    }
}

/// One verified parameter point.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub param: C64,
    pub bias_symbolic: C64,
    pub bias_numeric: C64,
    /// `Tr[ρ (T−g)(T−g)†]`.
    pub v1: f64,
    /// `Tr[ρ (T−g)†(T−g)]`.
    pub v2: f64,
    pub bound: f64,
    /// `v1 − bound`.
    pub gap: f64,
    pub normality_residual: f64,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub label: String,
    pub rows: Vec<GridPoint>,
}

fn g_value(g: &GFunction, param: C64) -> Result<C64> {
    match g {
        GFunction::RealPoly(_) => {
            if param.im.abs() > 1e-12 {
                return Err(Error::FlavorMismatch(
                    "real polynomial g evaluated at a non-real parameter".into(),
                ));
            }
            Ok(C64::new(g.eval_real(param.re)?, 0.0))
        }
        GFunction::ComplexPoly(_) => Ok(g.eval_complex(param)),
    }
}

/// The generic bound-attaining candidate `T = ᵗD[g] J⁻¹ L + g·1` evaluated
/// at one parameter point, as a concrete operator.
pub fn optimal_candidate(
    g: &GFunction,
    param: C64,
    j: &InfoMatrix,
    l: &LogDerivVector,
) -> Result<FockOperator> {
    let flavor_ok = matches!(
        (j.flavor, l.flavor),
        (JFlavor::S, LogDerivFlavor::S)
            | (JFlavor::R, LogDerivFlavor::R)
            | (JFlavor::L, LogDerivFlavor::L)
    );
    if !flavor_ok {
        return Err(Error::FlavorMismatch(format!(
            "information matrix flavor {:?} does not match log-derivative flavor {:?}",
            j.flavor, l.flavor
        )));
    }
    if l.entries.len() != j.dim() {
        return Err(Error::DimensionMismatch {
            left: l.entries.len(),
            right: j.dim(),
        });
    }
    let left: Vec<C64> = match j.flavor {
        JFlavor::S => g
            .real_derivative_vector(param.re, j.order)?
            .into_iter()
            .map(|d| C64::new(d, 0.0))
            .collect(),
        JFlavor::R | JFlavor::L => g.complex_left_vector(param, j.order)?,
    };
    let j_inv = j.pseudo_inverse();
    let n = j.dim();
    let dim_a = l.entries[0].dim_a();
    let dim_b = l.entries[0].dim_b();
    let mut t = FockOperator::zeros(dim_a, dim_b);
    for col in 0..n {
        let mut weight = C64::new(0.0, 0.0);
        for row in 0..n {
            weight += left[row] * j_inv[(row, col)];
        }
        t = &t + &l.entries[col].scale(weight);
    }
    let gval = g_value(g, param)?;
    Ok(&t + &FockOperator::identity(dim_a, dim_b).scale(gval))
}

/// Parameter-free unbiased estimator of θ² attaining the order-2 symmetric
/// bound: `N(N+1)/(2N+1)²(a²+a†²) + (N²+(N+1)²)/(2N+1)² a†a −
/// N(N²+(N+1)²)/(2N+1)²`.
pub fn theorem3_square_estimator(n_bar: f64) -> Estimator {
    let np1 = n_bar + 1.0;
    let denom = (2.0 * n_bar + 1.0).powi(2);
    let sum_sq = n_bar * n_bar + np1 * np1;
    let a = NormalOrderedPoly::a();
    let ad = NormalOrderedPoly::a_dag();
    let poly = a
        .pow(2)
        .add(&ad.pow(2))
        .scale(C64::new(n_bar * np1 / denom, 0.0))
        .add(&ad.multiply(&a).scale(C64::new(sum_sq / denom, 0.0)))
        .sub(&NormalOrderedPoly::constant(C64::new(
            n_bar * sum_sq / denom,
            0.0,
        )));
    Estimator::new(poly, "square-displacement")
}

/// Coefficients (u, v, w, x, y, z) of the locally optimal unbiased
/// estimator of θ³.
pub fn cubic_coefficients(n_bar: f64, theta: f64) -> (f64, f64, f64, f64, f64, f64) {
    let np1 = n_bar + 1.0;
    let q = 4.0 * n_bar * n_bar + 4.0 * n_bar + 3.0;
    let tw = (2.0 * n_bar + 1.0).powi(2);
    let u = n_bar * np1 / (2.0 * q);
    let v = 3.0 * (n_bar * n_bar + n_bar + 1.0) / (2.0 * q);
    let w = -3.0 * theta / (2.0 * tw * q);
    let x = 3.0 * theta / (tw * q);
    let y = -3.0 * (n_bar * n_bar + n_bar + 1.0) * np1 / q;
    let z = -3.0 * np1 * theta / (tw * q);
    (u, v, w, x, y, z)
}

/// Locally optimal unbiased estimator of θ³ at the given θ:
/// `u(a³+a†³) + v(a a†² + a² a†) + w(a²+a†²) + x a a† + y(a+a†) + z`,
/// products taken annihilator-first. The coefficients w, x, z depend on θ,
/// so no single operator attains the order-3 bound uniformly.
pub fn theorem3_cubic_local(n_bar: f64, theta: f64) -> Estimator {
    let (u, v, w, x, y, z) = cubic_coefficients(n_bar, theta);
    let r = |v: f64| C64::new(v, 0.0);
    let mono = |m: u32, n: u32, s: f64| NormalOrderedPoly::monomial((m, n, 0, 0), r(s));
    let poly = mono(3, 0, u)
        .add(&mono(0, 3, u))
        .add(&mono(1, 2, v))
        .add(&mono(2, 1, v))
        .add(&mono(2, 0, w))
        .add(&mono(0, 2, w))
        .add(&mono(1, 1, x))
        .add(&mono(1, 0, y))
        .add(&mono(0, 1, y))
        .add(&NormalOrderedPoly::constant(r(z)));
    Estimator::new(poly, format!("cubic-displacement@{theta}"))
}

fn channel_poly(sys: NormalOrderedPoly, anc: NormalOrderedPoly) -> NormalOrderedPoly {
    sys.add(&anc)
}

/// `T = g(a + b†)` for holomorphic g; normal, ancilla-assisted, attains the
/// right-flavor bound uniformly.
pub fn theorem4_holomorphic(g: &GFunction) -> Result<Estimator> {
    if !g.is_holomorphic() {
        return Err(Error::BadGFunction(
            format!("{g:?}"),
            "holomorphic estimator needs all conjugate-variable coefficients to vanish",
        ));
    }
    let arg = channel_poly(NormalOrderedPoly::a(), NormalOrderedPoly::b_dag());
    let terms = match g {
        GFunction::ComplexPoly(c) => c,
        GFunction::RealPoly(_) => unreachable!("holomorphy test rejects real kind"),
    };
    let mut poly = NormalOrderedPoly::zero();
    for (&(m, _), &coeff) in terms {
        poly = poly.add(&arg.pow(m).scale(coeff));
    }
    Ok(Estimator::new(poly, "holomorphic-channel"))
}

/// `T = g` with `ζ̄ ↦ a† + b` for antiholomorphic g.
pub fn theorem4_antiholomorphic(g: &GFunction) -> Result<Estimator> {
    if !g.is_antiholomorphic() {
        return Err(Error::BadGFunction(
            format!("{g:?}"),
            "antiholomorphic estimator needs all holomorphic coefficients to vanish",
        ));
    }
    let arg = channel_poly(NormalOrderedPoly::a_dag(), NormalOrderedPoly::b());
    let terms = match g {
        GFunction::ComplexPoly(c) => c,
        GFunction::RealPoly(_) => unreachable!("holomorphy test rejects real kind"),
    };
    let mut poly = NormalOrderedPoly::zero();
    for (&(_, n), &coeff) in terms {
        poly = poly.add(&arg.pow(n).scale(coeff));
    }
    Ok(Estimator::new(poly, "antiholomorphic-channel"))
}

/// Ancilla-free self-adjoint estimator for real-valued g, attaining both
/// right- and left-flavor bounds:
/// `Σ c_{m,n}(N+1)^n Σ_r (−1)^{min−r} C(max, min−r)(min!/r!)
///  (a/(N+1))^{r+max(0,n−m)} a†^{r+max(0,m−n)}`.
pub fn theorem4_realvalued(g: &GFunction, n_bar: f64) -> Result<Estimator> {
    if !g.is_real_valued() {
        return Err(Error::BadGFunction(
            format!("{g:?}"),
            "real-valued estimator needs c_{m,n} = conj(c_{n,m})",
        ));
    }
    let terms = match g {
        GFunction::ComplexPoly(c) => c,
        GFunction::RealPoly(_) => {
            return Err(Error::BadGFunction(
                format!("{g:?}"),
                "expected a polynomial in ζ, ζ̄",
            ))
        }
    };
    let np1 = n_bar + 1.0;
    let a = NormalOrderedPoly::a();
    let ad = NormalOrderedPoly::a_dag();
    let mut poly = NormalOrderedPoly::zero();
    for (&(m, n), &coeff) in terms {
        let lo = m.min(n);
        let hi = m.max(n);
        for r in 0..=lo {
            let alpha = r + n.saturating_sub(m);
            let beta = r + m.saturating_sub(n);
            let sign = if (lo - r) % 2 == 0 { 1.0 } else { -1.0 };
            let scalar = sign
                * crate::poly::binomial(hi, lo - r)
                * crate::poly::factorial(lo)
                / crate::poly::factorial(r)
                * np1.powi(n as i32)
                / np1.powi(alpha as i32);
            let term = a.pow(alpha).multiply(&ad.pow(beta)).scale(coeff * C64::new(scalar, 0.0));
            poly = poly.add(&term);
        }
    }
    Ok(Estimator::new(poly, "real-valued-counting-family"))
}

/// Evaluate bias (symbolically via moments and numerically via the
/// materialized trace), both variance orderings, lower bound, attainment
/// gap, and normality residual on a grid of parameter points.
pub fn verify(
    est: &Estimator,
    n_bar: f64,
    g: &GFunction,
    grid: &[C64],
    dim_a: usize,
    dim_b: usize,
    j: &InfoMatrix,
) -> Result<VerificationReport> {
    let dim_b_eff = if est.poly.uses_ancilla() { dim_b } else { 0 };
    let t = est.poly.materialize(dim_a, dim_b_eff)?;
    let normality_residual = est.normality_residual();
    let mut rows = Vec::with_capacity(grid.len());
    for &param in grid {
        let gval = g_value(g, param)?;
        let delta = est.poly.sub(&NormalOrderedPoly::constant(gval));
        let delta_adj = delta.adjoint();
        let v1 = delta
            .multiply(&delta_adj)
            .gaussian_expectation(n_bar, param)
            .re;
        let v2 = delta_adj
            .multiply(&delta)
            .gaussian_expectation(n_bar, param)
            .re;
        let bias_symbolic = est.poly.gaussian_expectation(n_bar, param) - gval;

        let rho = displaced_thermal_with_tol(n_bar, param, dim_a, f64::INFINITY)?;
        let rho = if dim_b_eff > 0 {
            extend_state(&rho, dim_b_eff)?
        } else {
            rho
        };
        let bias_numeric = rho.expectation(&t) - gval;
        let b = bound(g, param, j)?;
        rows.push(GridPoint {
            param,
            bias_symbolic,
            bias_numeric,
            v1,
            v2,
            bound: b.value,
            gap: v1 - b.value,
            normality_residual,
        });
    }
    Ok(VerificationReport {
        label: est.label.clone(),
        rows,
    })
}

/// Residual of fitting the θ² estimator as `α·b†b + β` with the squeezed
/// mode `b = ((N+1)a + Na†)/√(2N+1)`; the fit is exact, witnessing the
/// counting-after-squeezing implementation.
pub fn squeeze_decomposition_check(n_bar: f64) -> f64 {
    let np1 = n_bar + 1.0;
    let norm = (2.0 * n_bar + 1.0).sqrt();
    let b = NormalOrderedPoly::a()
        .scale(C64::new(np1 / norm, 0.0))
        .add(&NormalOrderedPoly::a_dag().scale(C64::new(n_bar / norm, 0.0)));
    let number = b.adjoint().multiply(&b);
    let t = theorem3_square_estimator(n_bar).poly;
    let key_a2 = (2u32, 0u32, 0u32, 0u32);
    let alpha = t.terms().get(&key_a2).copied().unwrap_or_default()
        / number.terms().get(&key_a2).copied().unwrap_or(C64::new(1.0, 0.0));
    let key_const = (0u32, 0u32, 0u32, 0u32);
    let beta = t.terms().get(&key_const).copied().unwrap_or_default()
        - alpha * number.terms().get(&key_const).copied().unwrap_or_default();
    let fit = number.scale(alpha).add(&NormalOrderedPoly::constant(beta));
    t.max_coeff_diff(&fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bhatt::gaussian_j_closed_form;
    use crate::logderiv::solve_sld;
    use crate::model::{real_derivatives, RealModel};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_estimator_coefficients_at_unit_occupation() {
        let t = theorem3_square_estimator(1.0).poly;
        let get = |k: (u32, u32, u32, u32)| t.terms().get(&k).copied().unwrap_or_default();
        assert!((get((2, 0, 0, 0)) - c(2.0 / 9.0, 0.0)).norm() < 1e-14);
        assert!((get((0, 2, 0, 0)) - c(2.0 / 9.0, 0.0)).norm() < 1e-14);
        // a†a = aa† − 1, so the (1,1) key carries 5/9 and the constant
        // absorbs −5/9 − 5/9.
        assert!((get((1, 1, 0, 0)) - c(5.0 / 9.0, 0.0)).norm() < 1e-14);
        assert!((get((0, 0, 0, 0)) - c(-5.0 / 9.0 - 5.0 / 9.0, 0.0)).norm() < 1e-14);
        assert!(theorem3_square_estimator(0.7).self_adjointness_residual() < 1e-14);
    }

    #[test]
    fn square_estimator_unbiased_and_attains_order2_bound() {
        let n_bar = 1.0;
        let est = theorem3_square_estimator(n_bar);
        let g = GFunction::real(vec![0.0, 0.0, 1.0]);
        let j = gaussian_j_closed_form(n_bar, 2, JFlavor::S).unwrap();
        let grid: Vec<C64> = [-0.6, -0.3, 0.0, 0.4, 0.6]
            .iter()
            .map(|&t| c(t, 0.0))
            .collect();
        let report = verify(&est, n_bar, &g, &grid, 60, 0, &j).unwrap();
        for row in &report.rows {
            assert!(row.bias_symbolic.norm() < 1e-9, "θ={}", row.param.re);
            assert!(row.bias_numeric.norm() < 1e-6);
            assert!((row.v1 - row.v2).abs() < 1e-10);
            assert!(row.gap.abs() < 1e-6, "θ={} gap {}", row.param.re, row.gap);
        }
    }

    #[test]
    fn cubic_estimator_unbiased_identity() {
        // Tr[ρ_θ T] − θ³ vanishes identically in θ (degree-3 polynomial
        // checked on 5 nodes).
        for &n_bar in &[0.5, 1.0, 2.0] {
            for &theta0 in &[0.2, 0.5] {
                let est = theorem3_cubic_local(n_bar, theta0);
                assert!(est.self_adjointness_residual() < 1e-12);
                for &theta in &[-0.7, -0.2, 0.0, 0.3, 0.8] {
                    let e = est.poly.gaussian_expectation(n_bar, c(theta, 0.0));
                    assert!(
                        (e - c(theta * theta * theta, 0.0)).norm() < 1e-10,
                        "N={n_bar} θ0={theta0} θ={theta}: {e}"
                    );
                }
            }
        }
    }

    #[test]
    fn cubic_estimator_attains_order3_bound_locally() {
        let n_bar = 1.0;
        let theta = 0.5;
        let est = theorem3_cubic_local(n_bar, theta);
        let g = GFunction::real(vec![0.0, 0.0, 0.0, 1.0]);
        let j = gaussian_j_closed_form(n_bar, 3, JFlavor::S).unwrap();
        let report = verify(&est, n_bar, &g, &[c(theta, 0.0)], 60, 0, &j).unwrap();
        let row = &report.rows[0];
        assert!(row.bias_symbolic.norm() < 1e-10);
        assert!(row.gap.abs() < 1e-6, "gap {}", row.gap);
    }

    #[test]
    fn cubic_coefficients_drift_with_theta() {
        let (_, _, w2, x2, _, z2) = cubic_coefficients(1.0, 0.2);
        let (_, _, w4, x4, _, z4) = cubic_coefficients(1.0, 0.4);
        assert!((w4 / w2 - 2.0).abs() < 1e-12);
        assert!((x4 / x2 - 2.0).abs() < 1e-12);
        assert!((z4 / z2 - 2.0).abs() < 1e-12);
        let (u, v, w, x, y, z) = cubic_coefficients(1.0, 0.5);
        // Unbiasedness ties.
        assert!((u - (0.5 - v)).abs() < 1e-12);
        assert!((w + x / 2.0).abs() < 1e-12);
        assert!((y + 2.0 * 2.0 * v).abs() < 1e-12);
        assert!((z + 2.0 * x).abs() < 1e-12);
        // Closed values at N=1.
        assert!((u - 1.0 / 11.0).abs() < 1e-12);
        assert!((v - 9.0 / 22.0).abs() < 1e-12);
    }

    #[test]
    fn candidate_for_linear_g_is_homodyne() {
        // Displacements up to 0.6 push the truncation boundary layer deep
        // into the basis; dim 72 keeps the compared block clean.  The wider
        // step trades a little bias for much less round-off in the
        // second-order stencils.
        let dim = 72;
        let n_bar = 1.0;
        let model = RealModel::gaussian(n_bar, dim);
        let g = GFunction::real(vec![0.0, 1.0]);
        let mut ops = Vec::new();
        for &theta in &[0.0, 0.3, 0.6] {
            let rho = model.state(theta).unwrap();
            let stack = real_derivatives(&model, theta, 1, 3e-3).unwrap();
            let l = solve_sld(&rho, &stack).unwrap();
            let j = crate::bhatt::j_matrix(&rho, &l).unwrap();
            ops.push(optimal_candidate(&g, c(theta, 0.0), &j, &l).unwrap());
        }
        let homodyne = NormalOrderedPoly::a()
            .add(&NormalOrderedPoly::a_dag())
            .scale(c(0.5, 0.0))
            .materialize(dim, 0)
            .unwrap();
        let rows = dim * 2 / 3;
        for op in &ops {
            assert!(op.max_norm_diff_block(&homodyne, rows) < 1e-4);
        }
        for pair in ops.windows(2) {
            assert!(pair[0].max_norm_diff_block(&pair[1], rows) < 1e-5);
        }
    }

    #[test]
    fn candidate_for_square_g_is_parameter_free() {
        let dim = 72;
        let n_bar = 1.0;
        let model = RealModel::gaussian(n_bar, dim);
        let g = GFunction::real(vec![0.0, 0.0, 1.0]);
        let reference = theorem3_square_estimator(n_bar)
            .poly
            .materialize(dim, 0)
            .unwrap();
        let rows = dim * 2 / 3;
        let mut ops = Vec::new();
        for &theta in &[0.0, 0.3, 0.6] {
            let rho = model.state(theta).unwrap();
            let stack = real_derivatives(&model, theta, 2, 3e-3).unwrap();
            let l = solve_sld(&rho, &stack).unwrap();
            let j = crate::bhatt::j_matrix(&rho, &l).unwrap();
            let t = optimal_candidate(&g, c(theta, 0.0), &j, &l).unwrap();
            assert!(
                t.max_norm_diff_block(&reference, rows) < 1e-4,
                "θ={theta} diff {}",
                t.max_norm_diff_block(&reference, rows)
            );
            ops.push(t);
        }
        for pair in ops.windows(2) {
            assert!(pair[0].max_norm_diff_block(&pair[1], rows) < 1e-6);
        }
    }

    #[test]
    fn candidate_for_cubic_g_drifts() {
        let dim = 60;
        let n_bar = 1.0;
        let model = RealModel::gaussian(n_bar, dim);
        let g = GFunction::real(vec![0.0, 0.0, 0.0, 1.0]);
        let rows = dim * 4 / 5;
        let thetas = [0.2, 0.5];
        let mut ops = Vec::new();
        for &theta in &thetas {
            let rho = model.state(theta).unwrap();
            let stack = real_derivatives(&model, theta, 3, 1e-3).unwrap();
            let l = solve_sld(&rho, &stack).unwrap();
            let j = crate::bhatt::j_matrix(&rho, &l).unwrap();
            ops.push(optimal_candidate(&g, c(theta, 0.0), &j, &l).unwrap());
        }
        let drift = ops[0].max_norm_diff_block(&ops[1], rows);
        assert!(
            drift >= 0.01 * (thetas[1] - thetas[0]),
            "drift {drift} too small"
        );
    }

    #[test]
    fn heterodyne_estimator() {
        let g = GFunction::complex([((1, 0), c(1.0, 0.0))]);
        let est = theorem4_holomorphic(&g).unwrap();
        assert!(est.requires_ancilla);
        assert!(est.normality_residual() < 1e-14);
        let n_bar = 1.0;
        let j = gaussian_j_closed_form(n_bar, 1, JFlavor::R).unwrap();
        let report = verify(&est, n_bar, &g, &[c(0.3, 0.2)], 60, 8, &j).unwrap();
        let row = &report.rows[0];
        assert!(row.bias_symbolic.norm() < 1e-12);
        assert!(row.bias_numeric.norm() < 1e-8);
        // Heterodyne variance N+1 equals the order-1 right-flavor bound.
        assert!((row.v1 - (n_bar + 1.0)).abs() < 1e-10);
        assert!(row.gap.abs() < 1e-10);
    }

    #[test]
    fn holomorphic_square_attains_right_bound() {
        let g = GFunction::complex([((2, 0), c(1.0, 0.0))]);
        let est = theorem4_holomorphic(&g).unwrap();
        let n_bar = 1.0;
        let j = gaussian_j_closed_form(n_bar, 2, JFlavor::R).unwrap();
        let report = verify(&est, n_bar, &g, &[c(0.3, 0.0)], 60, 8, &j).unwrap();
        let row = &report.rows[0];
        assert!(row.bias_symbolic.norm() < 1e-12);
        assert!(row.gap.abs() < 1e-5, "gap {}", row.gap);
        // Materialized commutator, masked away from the truncation edge of
        // both modes.
        let (dim_a, dim_b) = (40usize, 10usize);
        let t = est.poly.materialize(dim_a, dim_b).unwrap();
        let comm = &(&t * &t.adjoint()) - &(&t.adjoint() * &t);
        let keep = |idx: usize| {
            let (sys, anc) = (idx / dim_b, idx % dim_b);
            sys < dim_a * 4 / 5 && anc < dim_b * 4 / 5
        };
        let mut worst = 0.0f64;
        for row in 0..dim_a * dim_b {
            for col in 0..dim_a * dim_b {
                if keep(row) && keep(col) {
                    worst = worst.max(comm.matrix()[(row, col)].norm());
                }
            }
        }
        assert!(worst < 1e-8, "commutator residual {worst:e}");
    }

    #[test]
    fn antiholomorphic_mirror() {
        let g = GFunction::complex([((0, 2), c(1.0, 0.0))]);
        let est = theorem4_antiholomorphic(&g).unwrap();
        assert!(est.requires_ancilla);
        let n_bar = 1.0;
        let j = gaussian_j_closed_form(n_bar, 2, JFlavor::L).unwrap();
        let report = verify(&est, n_bar, &g, &[c(0.3, -0.1)], 60, 8, &j).unwrap();
        let row = &report.rows[0];
        assert!(row.bias_symbolic.norm() < 1e-12);
        // V2 pairs with the left-flavor bound for the conjugated channel.
        assert!((row.v2 - row.bound).abs() < 1e-5, "v2 {} bound {}", row.v2, row.bound);
    }

    #[test]
    fn holomorphy_guard() {
        let g = GFunction::complex([((1, 1), c(1.0, 0.0))]);
        assert!(theorem4_holomorphic(&g).is_err());
        assert!(theorem4_antiholomorphic(&g).is_err());
    }

    #[test]
    fn counting_estimator_from_realvalued_form() {
        let g = GFunction::complex([((1, 1), c(1.0, 0.0))]);
        let n_bar = 1.0;
        let est = theorem4_realvalued(&g, n_bar).unwrap();
        // a a† − (N+1), i.e. a†a − N.
        let expect = NormalOrderedPoly::a()
            .multiply(&NormalOrderedPoly::a_dag())
            .sub(&NormalOrderedPoly::constant(c(n_bar + 1.0, 0.0)));
        assert!(est.poly.max_coeff_diff(&expect) < 1e-13);
        assert!(!est.requires_ancilla);
        assert!(est.self_adjointness_residual() < 1e-13);
    }

    #[test]
    fn squared_homodyne_from_realvalued_form() {
        // g = Re(ζ)² = (ζ² + 2ζζ̄ + ζ̄²)/4 → (a+a†)²/4 − (2N+1)/4.
        let n_bar = 1.0;
        let g = GFunction::complex([
            ((2, 0), c(0.25, 0.0)),
            ((1, 1), c(0.5, 0.0)),
            ((0, 2), c(0.25, 0.0)),
        ]);
        let est = theorem4_realvalued(&g, n_bar).unwrap();
        let expect = NormalOrderedPoly::a()
            .add(&NormalOrderedPoly::a_dag())
            .pow(2)
            .scale(c(0.25, 0.0))
            .sub(&NormalOrderedPoly::constant(c(
                (2.0 * n_bar + 1.0) / 4.0,
                0.0,
            )));
        assert!(est.poly.max_coeff_diff(&expect) < 1e-13);
    }

    #[test]
    fn counting_attains_both_flavors() {
        let g = GFunction::complex([((1, 1), c(1.0, 0.0))]);
        let n_bar = 1.0;
        let zeta = c(0.5, 0.0);
        let est = theorem4_realvalued(&g, n_bar).unwrap();
        let jr = gaussian_j_closed_form(n_bar, 2, JFlavor::R).unwrap();
        let jl = gaussian_j_closed_form(n_bar, 2, JFlavor::L).unwrap();
        let rep_r = verify(&est, n_bar, &g, &[zeta], 60, 0, &jr).unwrap();
        let rep_l = verify(&est, n_bar, &g, &[zeta], 60, 0, &jl).unwrap();
        let row_r = &rep_r.rows[0];
        assert!(row_r.bias_symbolic.norm() < 1e-12);
        assert!((row_r.v1 - row_r.bound).abs() < 1e-5);
        let row_l = &rep_l.rows[0];
        assert!((row_l.v2 - row_l.bound).abs() < 1e-5);
        assert!((row_r.v1 - row_r.v2).abs() < 1e-10);
    }

    #[test]
    fn realness_guard() {
        let g = GFunction::complex([((2, 0), c(1.0, 0.0))]);
        assert!(theorem4_realvalued(&g, 1.0).is_err());
    }

    #[test]
    fn homodyne_report_closes_gap() {
        let n_bar = 1.0;
        let g = GFunction::real(vec![0.0, 1.0]);
        let est = Estimator::new(
            NormalOrderedPoly::a()
                .add(&NormalOrderedPoly::a_dag())
                .scale(c(0.5, 0.0)),
            "homodyne",
        );
        let j = gaussian_j_closed_form(n_bar, 1, JFlavor::S).unwrap();
        let grid: Vec<C64> = [0.0, 0.3, -0.3, 0.6, -0.6].iter().map(|&t| c(t, 0.0)).collect();
        let report = verify(&est, n_bar, &g, &grid, 60, 0, &j).unwrap();
        for row in &report.rows {
            assert!(row.bias_symbolic.norm() < 1e-12);
            assert!(row.gap.abs() < 1e-6);
        }
    }

    #[test]
    fn deliberately_biased_counting() {
        // a†a has expectation |ζ|² + N, so the bias against g = ζζ̄ is N.
        let n_bar = 0.8;
        let g = GFunction::complex([((1, 1), c(1.0, 0.0))]);
        let est = Estimator::new(
            NormalOrderedPoly::a_dag().multiply(&NormalOrderedPoly::a()),
            "raw-counting",
        );
        let j = gaussian_j_closed_form(n_bar, 2, JFlavor::R).unwrap();
        let mut grid = Vec::new();
        for &re in &[-0.3, 0.0, 0.3] {
            for &im in &[-0.2, 0.0, 0.2] {
                grid.push(c(re, im));
            }
        }
        let report = verify(&est, n_bar, &g, &grid, 60, 0, &j).unwrap();
        for row in &report.rows {
            assert!((row.bias_symbolic - c(n_bar, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn squeeze_decomposition_is_exact() {
        for &n_bar in &[0.5, 1.0, 2.0] {
            assert!(squeeze_decomposition_check(n_bar) < 1e-12, "N={n_bar}");
        }
        // The scale forced by the a² coefficients is 1/(2N+1).
        let n_bar: f64 = 1.0;
        let np1 = n_bar + 1.0;
        let norm = (2.0 * n_bar + 1.0).sqrt();
        let b = NormalOrderedPoly::a()
            .scale(c(np1 / norm, 0.0))
            .add(&NormalOrderedPoly::a_dag().scale(c(n_bar / norm, 0.0)));
        let number = b.adjoint().multiply(&b);
        let t = theorem3_square_estimator(n_bar).poly;
        let key = (2u32, 0u32, 0u32, 0u32);
        let alpha = t.terms()[&key] / number.terms()[&key];
        assert!((alpha - c(1.0 / 3.0, 0.0)).norm() < 1e-13);
    }
}
