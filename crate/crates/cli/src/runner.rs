//! Executes the checks declared in a scenario. Checks run in declaration
//! order (optionally on a thread pool with a deterministic merge); a failing
//! check never aborts the following ones.

use crate::report::{CheckRecord, CheckStatus, ReportDocument, SlackRow};
use crate::scenario::{compile_chart_expr, compile_time_expr, CheckSpec, PotentialSpec, Scenario};
use rayon::prelude::*;
use srf_core::dynconv::{
    build_min_geodesic, check_evi, quadratic_potential, DynConvexityCheck, DynConvexityReport,
    DynForm, TabulatedPotential,
};
use srf_core::flowcheck::{
    check_averaged_flow, check_super_n_ricci, check_super_ricci_moderate,
    check_super_ricci_strong, check_upper_ricci_static, check_weak_sub_ricci,
    default_measure_corpus, FlowVerdict, LambdaSource, TdMmSpace,
};
use srf_core::gamma::{
    check_gradient_estimate, check_n_gradient_estimate, check_srf_gamma, GeneratorFamily,
    Propagator,
};
use srf_core::linalg::Mat;
use srf_core::riemann::{
    check_distance_expansion, check_evi_riemann, check_n_srf_tensor, check_srf_tensor,
    check_sub_rf_tensor, check_weight_identity, gradient_flow, ChartMetric, RiemannianFamily,
    TensorVerdict,
};
use srf_core::space::estimate_controls;
use srf_core::transport::{wasserstein, ProbabilityVector};
use srf_core::{Error, Real};
use std::path::{Path, PathBuf};

pub struct RunContext {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
    pub bytes: Vec<u8>,
    pub seed: u64,
    pub tol_override: Option<Real>,
    pub threads: usize,
}

const FLOW_OPS: &[&str] = &[
    "controls",
    "wasserstein",
    "super_ricci_strong",
    "super_ricci_moderate",
    "super_n_ricci",
    "averaged_flow",
    "weak_sub_ricci",
    "upper_ricci_static",
    "dynamic_convexity",
    "dynamic_n_convexity",
    "min_geodesic",
    "evi",
];
const GAMMA_OPS: &[&str] = &["srf_gamma", "gradient_estimate", "n_gradient_estimate"];
const RIEMANN_OPS: &[&str] = &[
    "srf_tensor",
    "sub_rf_tensor",
    "n_srf_tensor",
    "weight_identity",
    "gradient_flow_evi",
    "distance_expansion",
];

pub fn run(ctx: &RunContext) -> Result<ReportDocument, Error> {
    // static validation: every op exists and its instance section is present
    let needs_flow = ctx.scenario.checks.iter().any(|c| FLOW_OPS.contains(&c.op.as_str()));
    let needs_gamma = ctx.scenario.checks.iter().any(|c| GAMMA_OPS.contains(&c.op.as_str()));
    let needs_chart = ctx.scenario.checks.iter().any(|c| RIEMANN_OPS.contains(&c.op.as_str()));
    for check in &ctx.scenario.checks {
        let known = FLOW_OPS.contains(&check.op.as_str())
            || GAMMA_OPS.contains(&check.op.as_str())
            || RIEMANN_OPS.contains(&check.op.as_str());
        if !known {
            return Err(Error::Config(format!("unknown op '{}'", check.op)));
        }
    }
    let tdmm = if needs_flow { Some(ctx.scenario.build_tdmm(&ctx.base_dir)?) } else { None };
    let gamma_env = if needs_gamma { Some(build_generator(&ctx.scenario)?) } else { None };
    let chart = if needs_chart { Some(build_chart(&ctx.scenario)?) } else { None };

    let jobs: Vec<(usize, CheckSpec)> =
        ctx.scenario.checks.iter().cloned().enumerate().collect();
    let execute = |(index, spec): &(usize, CheckSpec)| -> CheckRecord {
        let id = spec.id.clone().unwrap_or_else(|| format!("check-{}", index));
        match run_check(ctx, spec, &id, tdmm.as_ref(), gamma_env.as_ref(), chart.as_ref()) {
            Ok(rec) => rec,
            Err(e) => {
                let status = match e {
                    Error::Stalled { .. } | Error::StiffStep { .. } => {
                        CheckStatus::NumericalFailure
                    }
                    _ => CheckStatus::ConfigError,
                };
                CheckRecord {
                    id,
                    op: spec.op.clone(),
                    status,
                    min_slack: None,
                    notes: vec![e.to_string()],
                    details: serde_json::Value::Null,
                    slack_rows: vec![],
                }
            }
        }
    };
    let checks: Vec<CheckRecord> = if ctx.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(execute).collect())
    } else {
        jobs.iter().map(execute).collect()
    };
    Ok(ReportDocument::new(&ctx.bytes, ctx.seed, checks))
}

struct GammaEnv {
    family: GeneratorFamily<Real>,
    propagator: Propagator<Real>,
    test_functions: Vec<Vec<Real>>,
}

fn build_generator(scenario: &Scenario) -> Result<GammaEnv, Error> {
    let spec = scenario
        .generator
        .as_ref()
        .ok_or_else(|| Error::Config("missing [generator]".into()))?;
    let grid = scenario.build_grid()?;
    let family = match spec.builder.as_str() {
        "two-point" => GeneratorFamily::two_point(grid),
        "circle-laplacian" => {
            let n = spec.n.ok_or_else(|| Error::Config("circle-laplacian needs n".into()))?;
            let scale = compile_time_expr(spec.scale.as_deref().unwrap_or("1"))?;
            GeneratorFamily::circle_laplacian(grid, n, scale)?
        }
        "path-laplacian" => {
            let n = spec.n.ok_or_else(|| Error::Config("path-laplacian needs n".into()))?;
            let mesh = spec.mesh.unwrap_or(1.0 / n as Real);
            let scale = compile_time_expr(spec.scale.as_deref().unwrap_or("1"))?;
            GeneratorFamily::path_laplacian(grid, n, mesh, scale)?
        }
        "matrix" => {
            let mats = spec
                .matrices
                .as_ref()
                .ok_or_else(|| Error::Config("matrix builder needs matrices".into()))?;
            let mats: Vec<Mat<Real>> = mats.iter().map(|m| Mat::from_rows(m)).collect();
            GeneratorFamily::new(grid, mats, spec.markov.unwrap_or(true))?
        }
        other => return Err(Error::Config(format!("unknown generator builder '{}'", other))),
    };
    let propagator = Propagator::build(&family, spec.substeps.unwrap_or(20))?;
    let n = family.n_states();
    // deterministic corpus: basis vectors plus two fixed smooth profiles
    let mut test_functions: Vec<Vec<Real>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    test_functions.push((0..n).map(|i| (i as Real / n as Real * std::f64::consts::TAU).sin()).collect());
    test_functions.push((0..n).map(|i| (i as Real).powi(2) / (n as Real)).collect());
    Ok(GammaEnv { family, propagator, test_functions })
}

fn build_chart(scenario: &Scenario) -> Result<RiemannianFamily<Real>, Error> {
    let spec =
        scenario.chart.as_ref().ok_or_else(|| Error::Config("missing [chart]".into()))?;
    let grid = scenario.build_grid()?;
    let metric = match spec.metric.as_str() {
        "flat" => ChartMetric::Flat { dim: spec.dim.unwrap_or(2) },
        "sphere" => ChartMetric::Sphere { radius: spec.radius.unwrap_or(1.0) },
        "hyperbolic" => ChartMetric::HyperbolicHalfPlane,
        other => return Err(Error::Config(format!("unknown metric '{}'", other))),
    };
    if spec.chart_box.len() != metric.dim() {
        return Err(Error::Config("box dimension must match the metric dimension".into()));
    }
    let lo: Vec<Real> = spec.chart_box.iter().map(|b| b[0]).collect();
    let hi: Vec<Real> = spec.chart_box.iter().map(|b| b[1]).collect();
    let mut fam = RiemannianFamily::new(metric, lo, hi, grid);
    if let Some(src) = &spec.scale {
        let f = compile_time_expr(src)?;
        fam.scale = Box::new(f);
        fam.scale_dot = None;
    }
    if let Some(src) = &spec.scale_dot {
        let f = compile_time_expr(src)?;
        fam.scale_dot = Some(Box::new(f));
    }
    if let Some(src) = &spec.weight {
        let f = compile_chart_expr(src)?;
        fam.weight = Box::new(move |t, x| f(t, x));
    }
    if let Some(h) = spec.fd_step {
        fam.fd_step = h;
    }
    Ok(fam)
}

fn build_potential(
    spec: &PotentialSpec,
    tdmm: &TdMmSpace<Real>,
) -> Result<TabulatedPotential<Real>, Error> {
    match spec.kind.as_str() {
        "quadratic" => quadratic_potential(
            &tdmm.space,
            spec.coeff.unwrap_or(1.0),
            spec.center.unwrap_or(0.0),
        ),
        "tabulated" => {
            let values = spec
                .values
                .clone()
                .ok_or_else(|| Error::Config("tabulated potential needs values".into()))?;
            Ok(TabulatedPotential { values })
        }
        "entropy" => Ok(srf_core::dynconv::entropy_delegate_potential(
            tdmm.reference().weights(),
            tdmm.weights(),
        )),
        other => Err(Error::Config(format!("unknown potential kind '{}'", other))),
    }
}

fn resolve_pairs(
    scenario: &Scenario,
    spec: &CheckSpec,
    tdmm: &TdMmSpace<Real>,
    t_idx: usize,
) -> Result<Vec<(ProbabilityVector<Real>, ProbabilityVector<Real>)>, Error> {
    match &spec.pairs {
        None => Ok(default_measure_corpus(tdmm, t_idx)),
        Some(named) => {
            let mut out = Vec::new();
            for (a, b) in named {
                out.push((
                    scenario.build_measure(a, &tdmm.space, t_idx)?,
                    scenario.build_measure(b, &tdmm.space, t_idx)?,
                ));
            }
            Ok(out)
        }
    }
}

fn lambda_source(spec: &CheckSpec) -> Result<LambdaSource<Real>, Error> {
    match &spec.lambda {
        None => Ok(LambdaSource::Estimated),
        Some(toml::Value::String(s)) if s == "estimated" => Ok(LambdaSource::Estimated),
        Some(toml::Value::Float(f)) => Ok(LambdaSource::Explicit(*f)),
        Some(toml::Value::Integer(i)) => Ok(LambdaSource::Explicit(*i as Real)),
        Some(other) => Err(Error::Config(format!("bad lambda spec: {}", other))),
    }
}

fn run_check(
    ctx: &RunContext,
    spec: &CheckSpec,
    id: &str,
    tdmm: Option<&TdMmSpace<Real>>,
    gamma_env: Option<&GammaEnv>,
    chart: Option<&RiemannianFamily<Real>>,
) -> Result<CheckRecord, Error> {
    let scenario = &ctx.scenario;
    let tol = ctx.tol_override.or(spec.tol).unwrap_or_else(|| scenario.default_tol());
    let op = spec.op.as_str();
    if FLOW_OPS.contains(&op) {
        let tdmm = tdmm.expect("flow instance built");
        return run_flow_check(scenario, spec, id, tdmm, tol);
    }
    if GAMMA_OPS.contains(&op) {
        let env = gamma_env.expect("generator built");
        return run_gamma_check(spec, id, env, tol);
    }
    let fam = chart.expect("chart built");
    let per_axis = ctx.scenario.chart.as_ref().and_then(|c| c.samples_per_axis).unwrap_or(5);
    run_riemann_check(spec, id, fam, per_axis, tol)
}

fn run_flow_check(
    scenario: &Scenario,
    spec: &CheckSpec,
    id: &str,
    tdmm: &TdMmSpace<Real>,
    tol: Real,
) -> Result<CheckRecord, Error> {
    let t_idx = spec.t_index.unwrap_or(1);
    let tau_points = spec.tau_points.unwrap_or(17);
    let times = tdmm.space.grid().times().to_vec();
    match spec.op.as_str() {
        "controls" => {
            let c = estimate_controls(&tdmm.space)?;
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: CheckStatus::Pass,
                min_slack: None,
                notes: vec![],
                details: serde_json::json!({ "kappa": c.kappa, "lambda": c.lambda }),
                slack_rows: vec![],
            })
        }
        "wasserstein" => {
            let pairs = resolve_pairs(scenario, spec, tdmm, t_idx)?;
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for (pair_id, (mu, nu)) in pairs.iter().enumerate() {
                let (w, coupling) = wasserstein(&tdmm.space, t_idx, mu, nu)?;
                if let Some(prefix) = &spec.export_couplings {
                    let mut csv = String::new();
                    for row in &coupling.matrix {
                        let cells: Vec<String> = row.iter().map(|q| format!("{}", q)).collect();
                        csv.push_str(&cells.join(","));
                        csv.push('\n');
                    }
                    let path = format!("{}-pair{}.csv", prefix, pair_id);
                    std::fs::write(&path, csv)
                        .map_err(|e| Error::Config(format!("cannot write {}: {}", path, e)))?;
                }
                values.push(w);
                rows.push(SlackRow {
                    t: Some(times[t_idx]),
                    pair_id: Some(pair_id),
                    tau: None,
                    slack: w,
                });
            }
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: CheckStatus::Pass,
                min_slack: None,
                notes: vec![],
                details: serde_json::json!({ "distances": values }),
                slack_rows: rows,
            })
        }
        "super_ricci_strong" => {
            let pairs = resolve_pairs(scenario, spec, tdmm, t_idx)?;
            let v = check_super_ricci_strong(tdmm, t_idx, &pairs, tau_points, tol)?;
            Ok(flow_record(id, spec, v, times[t_idx], tdmm.space.mesh(t_idx)))
        }
        "super_ricci_moderate" => {
            let pairs = resolve_pairs(scenario, spec, tdmm, t_idx)?;
            let lam = lambda_source(spec)?;
            let v = check_super_ricci_moderate(tdmm, t_idx, lam, &pairs, tau_points, tol)?;
            Ok(flow_record(id, spec, v, times[t_idx], tdmm.space.mesh(t_idx)))
        }
        "super_n_ricci" => {
            let pairs = resolve_pairs(scenario, spec, tdmm, t_idx)?;
            let n = spec.n.unwrap_or(Real::INFINITY);
            let lam = spec.lambda.as_ref().map(|_| lambda_source(spec)).transpose()?;
            let v = check_super_n_ricci(tdmm, t_idx, n, lam, &pairs, tau_points, tol)?;
            Ok(flow_record(id, spec, v, times[t_idx], tdmm.space.mesh(t_idx)))
        }
        "averaged_flow" => {
            let pairs = resolve_pairs(scenario, spec, tdmm, t_idx)?;
            let j = spec.j.ok_or_else(|| Error::Config("averaged_flow needs j = [r, s]".into()))?;
            let n = spec.n.unwrap_or(Real::INFINITY);
            let lam = lambda_source(spec)?;
            let v = check_averaged_flow(tdmm, j, n, lam, &pairs, tau_points, tol)?;
            Ok(flow_record(id, spec, v, times[j.1], tdmm.space.mesh(j.1)))
        }
        "weak_sub_ricci" => {
            let partition = spec
                .partition
                .clone()
                .ok_or_else(|| Error::Config("weak_sub_ricci needs partition".into()))?;
            let set_pairs = spec
                .set_pairs
                .clone()
                .ok_or_else(|| Error::Config("weak_sub_ricci needs set_pairs".into()))?;
            let eps = spec.epsilon.unwrap_or(1e-2);
            let v = check_weak_sub_ricci(tdmm, t_idx, eps, &partition, &set_pairs, tau_points, tol)?;
            Ok(flow_record(id, spec, v, times[t_idx], tdmm.space.mesh(t_idx)))
        }
        "upper_ricci_static" => {
            let covering = spec
                .covering
                .clone()
                .ok_or_else(|| Error::Config("upper_ricci_static needs covering".into()))?;
            let set_pairs = spec
                .set_pairs
                .clone()
                .ok_or_else(|| Error::Config("upper_ricci_static needs set_pairs".into()))?;
            let k = spec.k.unwrap_or(0.0);
            let k_prime = spec.k_prime.unwrap_or(k + 0.1);
            let v = check_upper_ricci_static(
                tdmm, t_idx, k, k_prime, &covering, &set_pairs, tau_points, None, tol,
            )?;
            Ok(flow_record(id, spec, v, times[t_idx], tdmm.space.mesh(t_idx)))
        }
        "dynamic_convexity" | "dynamic_n_convexity" => {
            let pot_spec = spec
                .potential
                .as_ref()
                .ok_or_else(|| Error::Config("dynamic convexity needs a potential".into()))?;
            let potential = build_potential(pot_spec, tdmm)?;
            let form = parse_form(spec.form.as_deref().unwrap_or("slope"))?;
            let mut check = DynConvexityCheck::new(&tdmm.space, t_idx, tol);
            if let Ok(LambdaSource::Explicit(l)) = lambda_source(spec) {
                check.lambda = Some(l);
            }
            let report = if spec.op == "dynamic_convexity" {
                check.check(&potential, form)?
            } else {
                check.check_n(&potential, spec.n.unwrap_or(Real::INFINITY), form)?
            };
            Ok(dyn_record(id, spec, report, times[t_idx]))
        }
        "min_geodesic" => {
            let pot_spec = spec
                .potential
                .as_ref()
                .ok_or_else(|| Error::Config("min_geodesic needs a potential".into()))?;
            let potential = build_potential(pot_spec, tdmm)?;
            let pair = spec
                .set_pairs
                .as_ref()
                .and_then(|p| p.first())
                .ok_or_else(|| Error::Config("min_geodesic needs set_pairs = [[x0],[x1]]".into()))?;
            let mesh = tdmm.space.mesh(t_idx);
            let g = build_min_geodesic(
                &tdmm.space,
                &potential,
                t_idx,
                pair.0[0],
                pair.1[0],
                4,
                mesh * 0.6,
            )?;
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: CheckStatus::Pass,
                min_slack: None,
                notes: vec![],
                details: serde_json::json!({ "points": g.points, "params": g.params }),
                slack_rows: vec![],
            })
        }
        "evi" => {
            let pot_spec = spec
                .potential
                .as_ref()
                .ok_or_else(|| Error::Config("evi needs a potential".into()))?;
            let potential = build_potential(pot_spec, tdmm)?;
            let traj = spec
                .trajectory
                .clone()
                .ok_or_else(|| Error::Config("evi needs trajectory".into()))?;
            let comparisons = spec
                .comparisons
                .clone()
                .ok_or_else(|| Error::Config("evi needs comparisons".into()))?;
            let slacks = check_evi(&tdmm.space, &potential, &traj, &comparisons, 16)?;
            let min = slacks.iter().map(|r| r.slack).fold(Real::INFINITY, Real::min);
            let rows = slacks
                .iter()
                .map(|r| SlackRow {
                    t: Some(times[r.t_idx]),
                    pair_id: Some(r.z),
                    tau: None,
                    slack: r.slack,
                })
                .collect();
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: if min >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
                min_slack: Some(min),
                notes: vec![],
                details: serde_json::Value::Null,
                slack_rows: rows,
            })
        }
        other => Err(Error::Config(format!("unknown op '{}'", other))),
    }
}

fn parse_form(name: &str) -> Result<DynForm, Error> {
    Ok(match name {
        "slope" => DynForm::Slope,
        "strain" => DynForm::Strain,
        "integrated" => DynForm::Integrated,
        "moderate" => DynForm::Moderate,
        "triple" => DynForm::Triple,
        "single-slope" => DynForm::SingleSlope,
        other => return Err(Error::Config(format!("unknown form '{}'", other))),
    })
}

fn flow_record(id: &str, spec: &CheckSpec, v: FlowVerdict<Real>, t: Real, mesh: Real) -> CheckRecord {
    let status = if v.holds {
        CheckStatus::Pass
    } else if v.undetermined {
        CheckStatus::Undetermined
    } else {
        CheckStatus::Fail
    };
    let rows = v
        .slacks
        .iter()
        .map(|s| SlackRow { t: Some(t), pair_id: Some(s.pair_id), tau: s.tau, slack: s.slack })
        .collect();
    CheckRecord {
        id: id.into(),
        op: spec.op.clone(),
        status,
        min_slack: Some(v.min_slack),
        notes: v.notes.clone(),
        details: serde_json::json!({
            "flavor": format!("{:?}", v.flavor),
            "n": v.n_param,
            "lambda": v.lambda,
            "mesh": mesh,
            "skipped": v.skipped,
            "witness": v.witness.as_ref().map(|w| serde_json::json!({
                "pair_id": w.pair_id, "tau": w.tau, "slack": w.slack,
            })),
        }),
        slack_rows: rows,
    }
}

fn dyn_record(id: &str, spec: &CheckSpec, v: DynConvexityReport<Real>, t: Real) -> CheckRecord {
    let rows = v
        .slacks
        .iter()
        .map(|s| SlackRow { t: Some(t), pair_id: Some(s.pair.0 * 10_000 + s.pair.1), tau: s.tau, slack: s.slack })
        .collect();
    CheckRecord {
        id: id.into(),
        op: spec.op.clone(),
        status: if v.holds { CheckStatus::Pass } else { CheckStatus::Fail },
        min_slack: Some(v.min_slack),
        notes: vec![],
        details: serde_json::json!({
            "form": format!("{:?}", v.form),
            "n": v.n_param,
            "skipped": v.skipped,
        }),
        slack_rows: rows,
    }
}

fn run_gamma_check(
    spec: &CheckSpec,
    id: &str,
    env: &GammaEnv,
    tol: Real,
) -> Result<CheckRecord, Error> {
    let times = env.family.grid().times().to_vec();
    match spec.op.as_str() {
        "srf_gamma" => {
            // all interior slices unless one is requested
            let slice_range: Vec<usize> = match spec.t_index {
                Some(t) => vec![t],
                None => (1..times.len() - 1).collect(),
            };
            let mut rows = Vec::new();
            let mut min = Real::INFINITY;
            let mut notes = Vec::new();
            for t_idx in slice_range {
                let v = check_srf_gamma(&env.family, t_idx, tol)?;
                if v.order1 {
                    notes.push(format!("slice {}: one-sided time difference", t_idx));
                }
                min = min.min(v.min_eig);
                rows.push(SlackRow {
                    t: Some(times[t_idx]),
                    pair_id: Some(v.witness_state),
                    tau: None,
                    slack: v.min_eig,
                });
            }
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: if min >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
                min_slack: Some(min),
                notes,
                details: serde_json::Value::Null,
                slack_rows: rows,
            })
        }
        "gradient_estimate" | "n_gradient_estimate" => {
            let s_idx = spec.s_index.unwrap_or(0);
            let t_idx = spec.t_index.unwrap_or(times.len() - 1);
            let v = if spec.op == "gradient_estimate" {
                check_gradient_estimate(&env.family, &env.propagator, s_idx, t_idx, &env.test_functions, tol)?
            } else {
                check_n_gradient_estimate(
                    &env.family,
                    &env.propagator,
                    s_idx,
                    t_idx,
                    spec.n.unwrap_or(Real::INFINITY),
                    &env.test_functions,
                    tol,
                )?
            };
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: if v.pass { CheckStatus::Pass } else { CheckStatus::Fail },
                min_slack: Some(v.min_slack),
                notes: vec![],
                details: serde_json::json!({
                    "witness_u": v.witness_u,
                    "witness_state": v.witness_state,
                }),
                slack_rows: vec![SlackRow {
                    t: Some(times[t_idx]),
                    pair_id: Some(v.witness_state),
                    tau: None,
                    slack: v.min_slack,
                }],
            })
        }
        other => Err(Error::Config(format!("unknown op '{}'", other))),
    }
}

fn run_riemann_check(
    spec: &CheckSpec,
    id: &str,
    fam: &RiemannianFamily<Real>,
    per_axis: usize,
    tol: Real,
) -> Result<CheckRecord, Error> {
    let samples = fam.default_samples(per_axis);
    match spec.op.as_str() {
        "srf_tensor" => tensor_record(id, spec, check_srf_tensor(fam, &samples, tol)?),
        "sub_rf_tensor" => tensor_record(id, spec, check_sub_rf_tensor(fam, &samples, tol)?),
        "n_srf_tensor" => {
            let n = spec.n.ok_or_else(|| Error::Config("n_srf_tensor needs n".into()))?;
            tensor_record(id, spec, check_n_srf_tensor(fam, n, &samples, tol)?)
        }
        "weight_identity" => tensor_record(id, spec, check_weight_identity(fam, &samples, tol)?),
        "gradient_flow_evi" => {
            let pot = spec
                .potential
                .as_ref()
                .and_then(|p| p.expr.clone())
                .ok_or_else(|| Error::Config("gradient_flow_evi needs potential.expr".into()))?;
            let v = compile_chart_expr(&pot)?;
            let terminal = spec
                .terminal
                .clone()
                .ok_or_else(|| Error::Config("gradient_flow_evi needs terminal".into()))?;
            let t_terminal = spec
                .terminal_time
                .unwrap_or_else(|| *fam.grid.times().last().unwrap());
            let dt = spec.dt.unwrap_or(0.01);
            let traj = gradient_flow(fam, &v, (t_terminal, terminal), dt)?;
            let comparisons: Vec<Vec<Real>> = spec
                .terminals
                .clone()
                .ok_or_else(|| Error::Config("gradient_flow_evi needs terminals (comparison points)".into()))?;
            let slacks = check_evi_riemann(fam, &v, &traj, &comparisons)?;
            let min = slacks.iter().map(|(_, s)| *s).fold(Real::INFINITY, Real::min);
            let rows = slacks
                .iter()
                .map(|(t, s)| SlackRow { t: Some(*t), pair_id: None, tau: None, slack: *s })
                .collect();
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: if min >= -tol { CheckStatus::Pass } else { CheckStatus::Fail },
                min_slack: Some(min),
                notes: if traj.truncated { vec!["trajectory truncated at the chart boundary".into()] } else { vec![] },
                details: serde_json::Value::Null,
                slack_rows: rows,
            })
        }
        "distance_expansion" => {
            let pot = spec
                .potential
                .as_ref()
                .and_then(|p| p.expr.clone())
                .ok_or_else(|| Error::Config("distance_expansion needs potential.expr".into()))?;
            let v = compile_chart_expr(&pot)?;
            let terminals = spec
                .terminals
                .clone()
                .ok_or_else(|| Error::Config("distance_expansion needs terminals".into()))?;
            if terminals.len() != 2 {
                return Err(Error::Config("distance_expansion needs exactly two terminals".into()));
            }
            let t_terminal = spec
                .terminal_time
                .unwrap_or_else(|| *fam.grid.times().last().unwrap());
            let dt = spec.dt.unwrap_or(0.01);
            let a = gradient_flow(fam, &v, (t_terminal, terminals[0].clone()), dt)?;
            let b = gradient_flow(fam, &v, (t_terminal, terminals[1].clone()), dt)?;
            let verdict = check_distance_expansion(fam, &a, &b, tol)?;
            let rows = verdict
                .distances
                .iter()
                .map(|(t, d)| SlackRow { t: Some(*t), pair_id: None, tau: None, slack: *d })
                .collect();
            Ok(CheckRecord {
                id: id.into(),
                op: spec.op.clone(),
                status: if verdict.nondecreasing { CheckStatus::Pass } else { CheckStatus::Fail },
                min_slack: Some(-verdict.worst_drop),
                notes: verdict
                    .witness_t
                    .map(|t| vec![format!("distance drops after t = {}", t)])
                    .unwrap_or_default(),
                details: serde_json::Value::Null,
                slack_rows: rows,
            })
        }
        other => Err(Error::Config(format!("unknown op '{}'", other))),
    }
}

fn tensor_record(id: &str, spec: &CheckSpec, v: TensorVerdict<Real>) -> Result<CheckRecord, Error> {
    Ok(CheckRecord {
        id: id.into(),
        op: spec.op.clone(),
        status: if v.pass { CheckStatus::Pass } else { CheckStatus::Fail },
        min_slack: Some(v.extreme),
        notes: v.notes.clone(),
        details: serde_json::json!({
            "witness_t": v.witness_t,
            "witness_x": v.witness_x,
            "samples": v.samples,
        }),
        slack_rows: vec![SlackRow { t: Some(v.witness_t), pair_id: None, tau: None, slack: v.extreme }],
    })
}

/// Runs the `ddi` subcommand: loads two instance scenarios, computes the
/// upper bound and the slice-comparison checks.
pub fn run_ddi(
    a_path: &Path,
    b_path: &Path,
    rounds: usize,
    tol: Real,
    seed: u64,
) -> Result<ReportDocument, Error> {
    let (sa, bytes_a) = Scenario::load(a_path)?;
    let (sb, bytes_b) = Scenario::load(b_path)?;
    let base_a = a_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let base_b = b_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let ta = sa.build_tdmm(&base_a)?;
    let tb = sb.build_tdmm(&base_b)?;
    let ia = srf_core::ddi::DdiInstance::from_tdmm(&ta, None)?;
    let ib = srf_core::ddi::DdiInstance::from_tdmm(&tb, None)?;
    let result = srf_core::ddi::ddi_distance(&ia, &ib, rounds, 1e-9)?;
    let modulus = srf_core::ddi::linear_modulus(&ia, &ib);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (ti, &t) in ia.times.iter().enumerate() {
        let rep = srf_core::ddi::check_slice_bound(&ia, &ib, ti, |r| modulus * r, rounds, tol)?;
        rows.push(SlackRow {
            t: Some(t),
            pair_id: Some(ti),
            tau: None,
            slack: rep.bound - rep.slice_distance,
        });
        if !rep.holds {
            checks.push(format!("slice bound violated at t = {}", t));
        }
    }
    let status = if result.stalled {
        CheckStatus::NumericalFailure
    } else if checks.is_empty() {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let record = CheckRecord {
        id: "ddi".into(),
        op: "ddi_distance".into(),
        status,
        min_slack: None,
        notes: checks,
        details: serde_json::json!({
            "value": result.value,
            "transport_term": result.transport_term,
            "weight_term": result.weight_term,
            "rounds": result.rounds,
            "stalled": result.stalled,
            "m_hat": result.m_hat,
        }),
        slack_rows: rows,
    };
    let mut bytes = bytes_a;
    bytes.extend_from_slice(&bytes_b);
    Ok(ReportDocument::new(&bytes, seed, vec![record]))
}
