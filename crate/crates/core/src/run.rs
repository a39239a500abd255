//! End-to-end runs: config → mesh → solver → files and report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde_json::{json, Value};

use crate::case1::{solve_case1, CaseIOptions, CaseIReport};
use crate::case2::{prepare_case2, solve_case2_with, CaseIIOptions, CaseIIReport, GeometryOptions, Status};
use crate::config::{CaseKind, LambdaSpec, RunConfig};
use crate::energy::{CaseIISpec, CaseISpec};
use crate::error::{Result, SplError, StageExt};
use crate::mesh::{build_mesh, write_fields_csv, DiscreteSpace};
use crate::weights::{assess_weight, default_morrey, BallSampling, Weight, WeightReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;

/// Certificate keys of a Case I report.
pub const CASE1_CERTIFICATES: [&str; 9] = [
    "energy_minimal",
    "monotone_continuation",
    "monotone_descent",
    "order",
    "positivity",
    "residual",
    "subsolution",
    "supersolution",
    "weight_admissible",
];

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    pub certificates: BTreeMap<String, Status>,
    /// Full report as written to `report.json`.
    pub report: Value,
    pub output: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.status == Status::Fail {
            EXIT_CERTIFICATE
        } else {
            EXIT_OK
        }
    }
}

pub fn error_exit_code(e: &SplError) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_SOLVER
    }
}

struct Prepared {
    space: DiscreteSpace,
    weight_report: Option<WeightReport>,
    weight_error: Option<String>,
}

fn prepare(cfg: &RunConfig) -> Result<(Prepared, Weight)> {
    let n = cfg.domain.dim();
    let weight = cfg.weight.build(n, cfg.p).stage("weight")?;
    let mesh = build_mesh(&cfg.domain, cfg.resolution).stage("mesh")?;
    let space = DiscreteSpace::new(mesh, &weight).stage("mesh")?;
    let (mq, ma) = default_morrey(&weight);
    let sampling = BallSampling {
        centers_per_axis: 16,
        radii: 8,
        depth: 24,
    };
    // an unassessable weight is reported, not fatal
    let (weight_report, weight_error) = match assess_weight(&weight, &cfg.domain, cfg.s, mq, ma, &sampling) {
        Ok(r) => (Some(r), None),
        Err(e) if !e.is_config() => (None, Some(e.to_string())),
        Err(e) => return Err(e).stage("weight"),
    };
    Ok((
        Prepared {
            space,
            weight_report,
            weight_error,
        },
        weight,
    ))
}

/// Runs the configured case and writes all outputs to `cfg.output`.
/// On error a minimal `report.json` with the failing stage is still written
/// when the output directory can be created.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let out = cfg.output.clone();
    match run_inner(cfg) {
        Ok(o) => Ok(o),
        Err(e) => {
            let report = json!({
                "config": cfg,
                "status": "error",
                "exit_code": error_exit_code(&e),
                "stage": e.stage(),
                "message": e.to_string(),
            });
            if std::fs::create_dir_all(&out).is_ok() {
                let _ = write_json(&out.join("report.json"), &report);
            }
            Err(e)
        }
    }
}

fn run_inner(cfg: &RunConfig) -> Result<RunOutcome> {
    let clock = Instant::now();
    let (prep, _weight) = prepare(cfg)?;
    let setup_seconds = clock.elapsed().as_secs_f64();
    std::fs::create_dir_all(&cfg.output).map_err(|e| SplError::io(&cfg.output, e)).stage("output")?;
    prep.space.mesh().write_csv(&cfg.output).stage("output")?;
    let weight_status = Status::soft(prep.weight_report.as_ref().is_some_and(WeightReport::admissible));
    let weight_json = json!({
        "report": prep.weight_report,
        "error": prep.weight_error,
    });
    let (mut certificates, mut report) = match cfg.case {
        CaseKind::I => run_case1(cfg, &prep.space)?,
        CaseKind::II => run_case2(cfg, &prep.space)?,
    };
    certificates.insert("weight_admissible".into(), weight_status);
    let status = worst(&certificates);
    let obj = report.as_object_mut().expect("report is an object");
    obj.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    obj.insert("weight".into(), weight_json);
    obj.insert("certificates".into(), serde_json::to_value(&certificates).expect("map serializes"));
    obj.insert("status".into(), serde_json::to_value(status).expect("status serializes"));
    obj.insert(
        "exit_code".into(),
        json!(if status == Status::Fail { EXIT_CERTIFICATE } else { EXIT_OK }),
    );
    obj.insert(
        "mesh".into(),
        json!({"nodes": prep.space.len(), "elements": prep.space.mesh().element_count()}),
    );
    if let Some(Value::Object(t)) = obj.get_mut("timings") {
        t.insert("setup".into(), json!(setup_seconds));
        t.insert("total".into(), json!(clock.elapsed().as_secs_f64()));
    }
    write_json(&cfg.output.join("report.json"), &report).stage("output")?;
    info!("status {status:?}, outputs in {}", cfg.output.display());
    Ok(RunOutcome {
        status,
        certificates,
        report,
        output: cfg.output.clone(),
    })
}

fn worst(c: &BTreeMap<String, Status>) -> Status {
    if c.values().any(|s| *s == Status::Fail) {
        Status::Fail
    } else if c.values().any(|s| *s == Status::Warn) {
        Status::Warn
    } else {
        Status::Pass
    }
}

fn timings_json(t: &[(&'static str, f64)]) -> Value {
    Value::Object(t.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("json value serializes");
    std::fs::write(path, text + "\n").map_err(|e| SplError::io(path, e))
}

fn run_case1(cfg: &RunConfig, space: &DiscreteSpace) -> Result<(BTreeMap<String, Status>, Value)> {
    let lambda = match cfg.lambda {
        LambdaSpec::Absolute(l) => l,
        LambdaSpec::Relative(_) => unreachable!("rejected by config validation"),
    };
    let f = cfg.f.as_ref().expect("case I has f").build().stage("validate")?;
    let spec = CaseISpec { p: cfg.p, q: cfg.q, lambda, f };
    let opts = CaseIOptions {
        residual_tol: cfg.tolerances.residual,
        defect_tol: cfg.tolerances.defect,
        continuation_tol: cfg.tolerances.continuation,
        ..CaseIOptions::default()
    };
    let r = solve_case1(space, &spec, &opts)?;
    write_case1_fields(space, &r, &cfg.output)?;
    let c = &r.certificates;
    let mut certs = BTreeMap::new();
    for (k, ok) in [
        ("energy_minimal", c.energy_minimal),
        ("monotone_continuation", c.monotone_continuation),
        ("monotone_descent", c.monotone_descent),
        ("order", c.order),
        ("positivity", c.positivity),
        ("residual", c.residual),
        ("subsolution", c.subsolution),
        ("supersolution", c.supersolution),
    ] {
        certs.insert(k.to_string(), Status::from_bool(ok));
    }
    let report = json!({
        "case": "I",
        "lambda": lambda,
        "constants": {
            "lambda1": r.eigen.lambda1,
            "a_lambda": r.a_lambda,
            "capital_a_lambda": r.capital_a_lambda,
            "order_repairs": r.order_repairs,
            "c_k": r.c_k,
            "v0_sup": r.v0.v0.sup_norm(),
        },
        "energies": {
            "solution": r.energy,
            "lower": r.energy_lower,
            "upper": r.energy_upper,
        },
        "residuals": {
            "solution": r.residual,
            "eigen": r.eigen.residual,
            "v0": r.v0.residual,
            "projected": r.minimization.projected_residual,
        },
        "defects": {
            "subsolution_max": r.sub_defect_max,
            "supersolution_min": r.super_defect_min,
        },
        "solution": {
            "sup": r.solution.sup_norm(),
            "min_on_k": r.solution_min_on_k,
            "strictly_inside": r.strictly_inside,
        },
        "stages": {
            "eigen_iterations": r.eigen.iterations,
            "v0_continuation": r.v0.steps,
            "minimize_iterations": r.minimization.iterations,
            "energy_log": r.minimization.energy_log,
        },
        "timings": timings_json(&r.timings),
    });
    Ok((certs, report))
}

fn write_case1_fields(space: &DiscreteSpace, r: &CaseIReport, dir: &Path) -> Result<()> {
    write_fields_csv(
        &dir.join("u.csv"),
        space.mesh(),
        &[
            ("u", &r.solution),
            ("lower", &r.interval.lower),
            ("upper", &r.interval.upper),
            ("v0", &r.v0.v0),
            ("e1", &r.eigen.e1),
        ],
    )
    .stage("output")?;
    r.eigen.write(space, dir).stage("output")
}

fn run_case2(cfg: &RunConfig, space: &DiscreteSpace) -> Result<(BTreeMap<String, Status>, Value)> {
    let exps = cfg.exponents().stage("validate")?;
    let r = cfg.r.expect("case II has r");
    let base = CaseIISpec {
        p: cfg.p,
        q: cfg.q,
        r,
        lambda: 1.0,
        eps: 0.0,
    };
    let geometry = GeometryOptions {
        k: cfg.k,
        seed: cfg.seed,
        ..GeometryOptions::default()
    };
    let setup = prepare_case2(space, &base, &exps, &geometry)?;
    let lambda = match cfg.lambda {
        LambdaSpec::Absolute(l) => l,
        LambdaSpec::Relative(m) => m * setup.geometry.lambda_est,
    };
    info!("lambda = {lambda:e}");
    let opts = CaseIIOptions {
        geometry,
        schedule_floor: cfg.schedule_floor(),
        continuation_tol: cfg.tolerances.continuation,
        residual_tol: cfg.tolerances.residual,
        barrier_tol: cfg.tolerances.barrier,
        ..CaseIIOptions::default()
    };
    let r = solve_case2_with(space, &base.with_lambda(lambda), &exps, setup, &opts)?;
    write_case2_fields(space, &r, &cfg.output)?;
    let certs = r.certificates.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let s = &r.solutions;
    let report = json!({
        "case": "II",
        "lambda": lambda,
        "constants": {
            "lambda1": r.eigen.lambda1,
            "geometry": r.geometry,
            "barrier_c": r.barrier.c,
        },
        "energies": {
            "nu": s.energies.0,
            "zeta": s.energies.1,
        },
        "residuals": {
            "nu": r.residuals.0,
            "zeta": r.residuals.1,
            "eigen": r.eigen.residual,
        },
        "identity_errors": {"nu": r.identity_errors.0, "zeta": r.identity_errors.1},
        "limit_gaps": {"nu": r.limit_gaps.0, "zeta": r.limit_gaps.1},
        "theta": s.theta,
        "separation": s.separation,
        "sphere": r.sphere,
        "stages": {
            "eigen_iterations": r.eigen.iterations,
            "continuation": r.continuation.levels,
            "nu_converged": r.continuation.nu_converged,
            "zeta_converged": r.continuation.zeta_converged,
        },
        "timings": timings_json(&r.timings),
    });
    Ok((certs, report))
}

fn write_case2_fields(space: &DiscreteSpace, r: &CaseIIReport, dir: &Path) -> Result<()> {
    let m = space.mesh();
    write_fields_csv(&dir.join("nu.csv"), m, &[("nu", &r.solutions.nu)]).stage("output")?;
    write_fields_csv(&dir.join("zeta.csv"), m, &[("zeta", &r.solutions.zeta)]).stage("output")?;
    let mut text = String::from("s,energy\n");
    for (s, e) in &r.path_profile {
        let _ = writeln!(text, "{s},{e}");
    }
    let path = dir.join("path_profile.csv");
    std::fs::write(&path, text).map_err(|e| SplError::io(&path, e)).stage("output")?;
    r.eigen.write(space, dir).stage("output")
}
