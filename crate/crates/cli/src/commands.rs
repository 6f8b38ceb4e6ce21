//! The three subcommands: bound sweeps, estimator verification, and
//! information-matrix dumps.

use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64 as C64;
use qbhatt::bhatt::{bound, gaussian_j_closed_form, j_matrix, GFunction, InfoMatrix, JFlavor, JSource};
use qbhatt::estimators::{
    theorem3_cubic_local, theorem3_square_estimator, theorem4_antiholomorphic,
    theorem4_holomorphic, theorem4_realvalued, verify, Estimator,
};
use qbhatt::fock::{displaced_thermal_with_tol, DEFAULT_TAIL_TOL};
use qbhatt::logderiv::{solve_lld, solve_rld, solve_sld};
use qbhatt::model::{
    default_step, real_derivatives, wirtinger_derivatives, wirtinger_orders, ComplexModel,
    RealModel,
};
use qbhatt::{Error, Result};
use rayon::prelude::*;

use crate::modelfile::{self, LoadedModel, ModelKind};
use crate::output::{BoundsRow, JmatrixRow, Meta, Report, SummaryLine, VerifyRow};
use crate::spec::{parse_estimator, parse_g, parse_grid, ParsedG};

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Model: `gaussian` or `file:<path>` (JSON sample lattice).
    #[arg(long, default_value = "gaussian")]
    pub model: String,

    /// Thermal photon number N of the gaussian model.
    #[arg(long = "N", default_value_t = 1.0)]
    pub n: f64,

    /// System-mode truncation.
    #[arg(long, default_value_t = 60)]
    pub dim: usize,

    /// Ancilla-mode truncation for channel estimators.
    #[arg(long = "dim-b", default_value_t = 8)]
    pub dim_b: usize,

    /// Trace-deficit tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output format: json | csv.
    #[arg(long, default_value = "json")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Target function, e.g. `theta^2` or `zeta*conj(zeta)`.
    #[arg(long)]
    pub g: String,

    /// Highest derivative order (bounds for 1..=k are reported).
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Bound flavor: s | r | l | all.
    #[arg(long, default_value = "all")]
    pub flavor: String,

    /// Comma-separated parameter points, e.g. `0,0.3,0.3+0.2i`.
    #[arg(long, default_value = "0,0.3,0.6")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Named estimator (theorem3-square, theorem3-cubic, counting,
    /// heterodyne) or an operator literal such as `adag*a`.
    #[arg(long)]
    pub estimator: String,

    /// Target function; defaults depend on the estimator.
    #[arg(long)]
    pub g: Option<String>,

    /// Derivative order of the compared bound (literal estimators only;
    /// named ones fix their own).
    #[arg(long)]
    pub k: Option<usize>,

    /// Bound flavor override: s | r | l.
    #[arg(long)]
    pub flavor: Option<String>,

    /// Comma-separated parameter points.
    #[arg(long, default_value = "0,0.3,0.6")]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct JmatrixArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Matrix flavor: s | r | l.
    #[arg(long, default_value = "s")]
    pub flavor: String,

    /// Derivative order.
    #[arg(long, default_value_t = 2)]
    pub k: usize,

    /// Parameter point the pipeline is evaluated at.
    #[arg(long, default_value = "0.3")]
    pub at: String,
}

enum Model {
    Gaussian { n_bar: f64 },
    File(LoadedModel),
}

fn load_model(common: &CommonArgs) -> Result<Model> {
    let tol = common.tol.unwrap_or(DEFAULT_TAIL_TOL);
    if common.model == "gaussian" {
        if !(common.n > 0.0) {
            return Err(Error::InconsistentInputs(format!(
                "gaussian model needs N > 0, got {}",
                common.n
            )));
        }
        Ok(Model::Gaussian { n_bar: common.n })
    } else if let Some(path) = common.model.strip_prefix("file:") {
        Ok(Model::File(modelfile::load(path.as_ref(), tol)?))
    } else {
        Err(Error::Parse(format!(
            "unknown model `{}` (expected `gaussian` or `file:<path>`)",
            common.model
        )))
    }
}

fn parse_flavor(token: &str) -> Result<JFlavor> {
    match token {
        "s" | "S" => Ok(JFlavor::S),
        "r" | "R" => Ok(JFlavor::R),
        "l" | "L" => Ok(JFlavor::L),
        other => Err(Error::Parse(format!(
            "unknown flavor `{other}` (expected s, r, l)"
        ))),
    }
}

fn flavor_name(f: JFlavor) -> &'static str {
    match f {
        JFlavor::S => "s",
        JFlavor::R => "r",
        JFlavor::L => "l",
    }
}

fn source_name(s: JSource) -> &'static str {
    match s {
        JSource::Numerical => "numerical",
        JSource::GaussianClosedForm => "closed-form",
    }
}

/// Flavors compatible with the g kind; `all` silently narrows, an explicit
/// request that conflicts is an error.
fn resolve_flavors(selector: &str, g: &ParsedG) -> Result<Vec<JFlavor>> {
    let all: Vec<JFlavor> = if g.is_real_kind() {
        vec![JFlavor::S]
    } else if g.is_complex_kind() {
        vec![JFlavor::R, JFlavor::L]
    } else {
        vec![JFlavor::S, JFlavor::R, JFlavor::L]
    };
    if selector == "all" {
        return Ok(all);
    }
    let f = parse_flavor(selector)?;
    if !all.contains(&f) {
        return Err(Error::FlavorMismatch(format!(
            "flavor {selector} is incompatible with the g kind ({})",
            if g.is_real_kind() {
                "real: only s"
            } else {
                "complex: only r or l"
            }
        )));
    }
    Ok(vec![f])
}

fn g_for(parsed: &ParsedG, flavor: JFlavor) -> Result<GFunction> {
    match flavor {
        JFlavor::S => parsed.clone().into_real(),
        JFlavor::R | JFlavor::L => parsed.clone().into_complex(),
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InconsistentInputs(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn gaussian_real_model(n_bar: f64, dim: usize, tol: f64) -> RealModel {
    RealModel::new(move |theta| displaced_thermal_with_tol(n_bar, C64::new(theta, 0.0), dim, tol))
}

fn gaussian_complex_model(n_bar: f64, dim: usize, tol: f64) -> ComplexModel {
    ComplexModel::new(move |zeta| displaced_thermal_with_tol(n_bar, zeta, dim, tol))
}

fn require_real(param: C64) -> Result<f64> {
    if param.im.abs() > 1e-12 {
        return Err(Error::FlavorMismatch(format!(
            "symmetric-flavor evaluation needs a real parameter, got {param}"
        )));
    }
    Ok(param.re)
}

/// Numerical information matrix straight from the pipeline.
fn numerical_j(
    model: &Model,
    common: &CommonArgs,
    param: C64,
    k: usize,
    flavor: JFlavor,
) -> Result<InfoMatrix> {
    let tol = common.tol.unwrap_or(DEFAULT_TAIL_TOL);
    match (model, flavor) {
        (Model::Gaussian { n_bar }, JFlavor::S) => {
            let theta = require_real(param)?;
            let m = gaussian_real_model(*n_bar, common.dim, tol);
            let rho = m.state(theta)?;
            let stack = real_derivatives(&m, theta, k, default_step(theta.abs()))?;
            j_matrix(&rho, &solve_sld(&rho, &stack)?)
        }
        (Model::Gaussian { n_bar }, _) => {
            let m = gaussian_complex_model(*n_bar, common.dim, tol);
            let rho = m.state(param)?;
            let stack = wirtinger_derivatives(&m, param, k, default_step(param.norm()))?;
            let l = match flavor {
                JFlavor::R => solve_rld(&rho, &stack)?,
                _ => solve_lld(&rho, &stack)?,
            };
            j_matrix(&rho, &l)
        }
        (Model::File(loaded), JFlavor::S) => match &loaded.kind {
            ModelKind::Real(m) => {
                let theta = require_real(param)?;
                let rho = m.state(theta)?;
                let stack = real_derivatives(m, theta, k, loaded.step)?;
                j_matrix(&rho, &solve_sld(&rho, &stack)?)
            }
            ModelKind::Complex(_) => Err(Error::FlavorMismatch(
                "symmetric flavor needs a real-parameter model file".into(),
            )),
        },
        (Model::File(loaded), _) => match &loaded.kind {
            ModelKind::Complex(m) => {
                let rho = m.state(param)?;
                let stack = wirtinger_derivatives(m, param, k, loaded.step)?;
                let l = match flavor {
                    JFlavor::R => solve_rld(&rho, &stack)?,
                    _ => solve_lld(&rho, &stack)?,
                };
                j_matrix(&rho, &l)
            }
            ModelKind::Real(_) => Err(Error::FlavorMismatch(
                "right/left flavors need a complex-parameter model file".into(),
            )),
        },
    }
}

fn meta(
    common: &CommonArgs,
    command: &str,
    g: Option<String>,
    estimator: Option<String>,
    k: usize,
    grid: &[C64],
) -> Meta {
    Meta {
        schema_version: 1,
        command: command.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        model: if common.model == "gaussian" {
            format!("gaussian(N={})", common.n)
        } else {
            common.model.clone()
        },
        g,
        estimator,
        k,
        dim: common.dim,
        dim_b: common.dim_b,
        grid: grid.iter().map(|z| [z.re, z.im]).collect(),
    }
}

pub fn run_bounds(args: &BoundsArgs) -> Result<Report<BoundsRow>> {
    let grid = parse_grid(&args.grid)?;
    if args.k == 0 || args.k > 3 {
        return Err(Error::UnsupportedOrder {
            order: args.k,
            max: 3,
        });
    }
    let parsed = parse_g(&args.g)?;
    let flavors = resolve_flavors(&args.flavor, &parsed)?;
    let model = load_model(&args.common)?;

    let per_param = |&param: &C64| -> Result<Vec<BoundsRow>> {
        let mut rows = Vec::new();
        for k in 1..=args.k {
            for &flavor in &flavors {
                let g = g_for(&parsed, flavor)?;
                if flavor == JFlavor::S {
                    require_real(param)?;
                }
                let j = match &model {
                    Model::Gaussian { n_bar } => gaussian_j_closed_form(*n_bar, k, flavor)?,
                    Model::File(_) => numerical_j(&model, &args.common, param, k, flavor)?,
                };
                let b = bound(&g, param, &j)?;
                rows.push(BoundsRow {
                    param: [param.re, param.im],
                    k,
                    flavor: flavor_name(flavor).into(),
                    bound: b.value,
                    condition_number: b.condition_number,
                    source: source_name(j.source).into(),
                });
            }
        }
        Ok(rows)
    };
    let nested: Vec<Vec<BoundsRow>> = with_pool(args.common.jobs, || {
        grid.par_iter().map(per_param).collect::<Result<_>>()
    })??;
    Ok(Report {
        meta: meta(
            &args.common,
            "bounds",
            Some(args.g.clone()),
            None,
            args.k,
            &grid,
        ),
        rows: nested.into_iter().flatten().collect(),
        summary: Vec::new(),
    })
}

struct Selected {
    estimator: Option<Estimator>,
    /// Rebuilt per grid point when the construction is parameter-local.
    local: Option<fn(f64, f64) -> Estimator>,
    g: GFunction,
    g_text: String,
    flavor: JFlavor,
    k: usize,
}

fn select_estimator(args: &VerifyArgs, n_bar: f64) -> Result<Selected> {
    let g_text = |default: &str| args.g.clone().unwrap_or_else(|| default.to_string());
    match args.estimator.as_str() {
        "theorem3-square" => {
            let text = g_text("theta^2");
            Ok(Selected {
                estimator: Some(theorem3_square_estimator(n_bar)),
                local: None,
                g: parse_g(&text)?.into_real()?,
                g_text: text,
                flavor: JFlavor::S,
                k: args.k.unwrap_or(2),
            })
        }
        "theorem3-cubic" => {
            let text = g_text("theta^3");
            Ok(Selected {
                estimator: None,
                local: Some(theorem3_cubic_local),
                g: parse_g(&text)?.into_real()?,
                g_text: text,
                flavor: JFlavor::S,
                k: args.k.unwrap_or(3),
            })
        }
        "counting" => {
            let text = g_text("zeta*conj(zeta)");
            let g = parse_g(&text)?.into_complex()?;
            let flavor = match args.flavor.as_deref() {
                Some(f) => parse_flavor(f)?,
                None => JFlavor::R,
            };
            Ok(Selected {
                estimator: Some(theorem4_realvalued(&g, n_bar)?),
                local: None,
                g,
                g_text: text,
                flavor,
                k: args.k.unwrap_or(2),
            })
        }
        "heterodyne" | "holomorphic" => {
            let text = g_text("zeta");
            let g = parse_g(&text)?.into_complex()?;
            Ok(Selected {
                estimator: Some(theorem4_holomorphic(&g)?),
                local: None,
                g,
                g_text: text,
                flavor: JFlavor::R,
                k: args.k.unwrap_or(1),
            })
        }
        "antiholomorphic" => {
            let text = g_text("conj(zeta)");
            let g = parse_g(&text)?.into_complex()?;
            Ok(Selected {
                estimator: Some(theorem4_antiholomorphic(&g)?),
                local: None,
                g,
                g_text: text,
                flavor: JFlavor::L,
                k: args.k.unwrap_or(1),
            })
        }
        literal => {
            let poly = parse_estimator(literal)?;
            let text = g_text("zeta*conj(zeta)");
            let parsed = parse_g(&text)?;
            let flavor = match args.flavor.as_deref() {
                Some(f) => parse_flavor(f)?,
                None if parsed.is_real_kind() => JFlavor::S,
                None => JFlavor::R,
            };
            let g = g_for(&parsed, flavor)?;
            // Antiholomorphic targets pair with the left flavor naturally.
            let flavor = if args.flavor.is_none() && g.is_antiholomorphic() {
                JFlavor::L
            } else {
                flavor
            };
            Ok(Selected {
                estimator: Some(Estimator::new(poly, literal)),
                local: None,
                g,
                g_text: text,
                flavor,
                k: args.k.unwrap_or(2),
            })
        }
    }
}

pub fn run_verify(args: &VerifyArgs) -> Result<Report<VerifyRow>> {
    let grid = parse_grid(&args.grid)?;
    let model = load_model(&args.common)?;
    let n_bar = match model {
        Model::Gaussian { n_bar } => n_bar,
        Model::File(_) => {
            return Err(Error::FlavorMismatch(
                "verify needs the gaussian model: the estimator closed forms are specific to it"
                    .into(),
            ));
        }
    };
    let sel = select_estimator(args, n_bar)?;
    let j = gaussian_j_closed_form(n_bar, sel.k, sel.flavor)?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut self_adjoint_res = 0.0_f64;
    let mut normality_res = 0.0_f64;
    let per_point = |param: C64| -> Result<(VerifyRow, f64, f64)> {
        let est = match (&sel.estimator, sel.local) {
            (Some(e), _) => e.clone(),
            (None, Some(build)) => build(n_bar, require_real(param)?),
            _ => unreachable!("selector produced no estimator"),
        };
        let rep = verify(
            &est,
            n_bar,
            &sel.g,
            &[param],
            args.common.dim,
            args.common.dim_b,
            &j,
        )?;
        let r = &rep.rows[0];
        let v = if sel.flavor == JFlavor::L { r.v2 } else { r.v1 };
        Ok((
            VerifyRow {
                param: [param.re, param.im],
                bias_symbolic: [r.bias_symbolic.re, r.bias_symbolic.im],
                bias_numeric: [r.bias_numeric.re, r.bias_numeric.im],
                v1: r.v1,
                v2: r.v2,
                bound: r.bound,
                gap: v - r.bound,
                normality_residual: r.normality_residual,
            },
            est.self_adjointness_residual(),
            est.normality_residual(),
        ))
    };
    let computed: Vec<(VerifyRow, f64, f64)> = with_pool(args.common.jobs, || {
        grid.par_iter().map(|&p| per_point(p)).collect::<Result<_>>()
    })??;
    for (row, sa, no) in computed {
        self_adjoint_res = self_adjoint_res.max(sa);
        normality_res = normality_res.max(no);
        rows.push(row);
    }

    let max_bias_sym = rows
        .iter()
        .map(|r| (r.bias_symbolic[0].powi(2) + r.bias_symbolic[1].powi(2)).sqrt())
        .fold(0.0, f64::max);
    let max_bias_num = rows
        .iter()
        .map(|r| (r.bias_numeric[0].powi(2) + r.bias_numeric[1].powi(2)).sqrt())
        .fold(0.0, f64::max);
    let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let max_abs_gap = rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    let summary = vec![
        SummaryLine {
            invariant: "unbiased-symbolic".into(),
            pass: max_bias_sym < 1e-8,
            detail: format!("max |bias| = {max_bias_sym:.3e}"),
        },
        SummaryLine {
            invariant: "unbiased-numeric".into(),
            pass: max_bias_num < 1e-6,
            detail: format!("max |bias| = {max_bias_num:.3e}"),
        },
        SummaryLine {
            invariant: "self-adjoint-or-normal".into(),
            pass: self_adjoint_res < 1e-10 || normality_res < 1e-8,
            detail: format!(
                "self-adjointness {self_adjoint_res:.3e}, normality {normality_res:.3e}"
            ),
        },
        SummaryLine {
            invariant: "bound-respected".into(),
            pass: min_gap >= -1e-5,
            detail: format!("min gap = {min_gap:.3e}"),
        },
        SummaryLine {
            invariant: "bound-attained".into(),
            pass: max_abs_gap < 1e-5,
            detail: format!("max |gap| = {max_abs_gap:.3e}"),
        },
    ];
    Ok(Report {
        meta: meta(
            &args.common,
            "verify",
            Some(sel.g_text.clone()),
            Some(args.estimator.clone()),
            sel.k,
            &grid,
        ),
        rows,
        summary,
    })
}

pub fn run_jmatrix(args: &JmatrixArgs) -> Result<Report<JmatrixRow>> {
    let flavor = parse_flavor(&args.flavor)?;
    let param = crate::spec::parse_complex(&args.at)?;
    let model = load_model(&args.common)?;
    let j = numerical_j(&model, &args.common, param, args.k, flavor)?;
    let closed = match &model {
        Model::Gaussian { n_bar } => Some(gaussian_j_closed_form(*n_bar, args.k, flavor)?),
        Model::File(_) => None,
    };
    let labels: Vec<String> = match flavor {
        JFlavor::S => (1..=args.k).map(|j| format!("d{j}")).collect(),
        _ => wirtinger_orders(args.k)
            .into_iter()
            .map(|(p, q)| format!("({p},{q})"))
            .collect(),
    };
    let mut rows = Vec::new();
    for r in 0..j.dim() {
        for c in 0..j.dim() {
            let v = j.matrix[(r, c)];
            let cf = closed.as_ref().map(|m| m.matrix[(r, c)]);
            rows.push(JmatrixRow {
                row: r,
                col: c,
                row_label: labels[r].clone(),
                col_label: labels[c].clone(),
                re: v.re,
                im: v.im,
                closed_form_re: cf.map(|z| z.re),
                closed_form_im: cf.map(|z| z.im),
                delta: cf.map(|z| (v - z).norm()),
            });
        }
    }
    Ok(Report {
        meta: meta(
            &args.common,
            "jmatrix",
            None,
            None,
            args.k,
            &[param],
        ),
        rows,
        summary: Vec::new(),
    })
}
