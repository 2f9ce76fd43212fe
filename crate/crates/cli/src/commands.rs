use serde_json::{json, Value};
use tasep_lk::domain_wall::{
    check_existence, composite_profile, solve_wall, ProfileBranch, WallSolution,
};
use tasep_lk::kmc::{self, compare_to_meanfield, LatticeConfig, ProfileEstimate};
use tasep_lk::meanfield::{Branch, BranchSide};
use tasep_lk::sensitivity::{self, monotonicity_scan, relative_gap, Parameter};
use tasep_lk::{Error, ExistenceVerdict, ModelParams};

use crate::config::{Format, RunConfig};
use crate::output::{header, num, Failure, Sink};

fn branch_name(b: ProfileBranch) -> &'static str {
    match b {
        ProfileBranch::Left => "left",
        ProfileBranch::Right => "right",
        ProfileBranch::Unresolved => "unresolved",
    }
}

fn wall_fields(verdict: &ExistenceVerdict, wall: Option<&WallSolution>) -> Value {
    json!({
        "exists": verdict.exists,
        "regime": verdict.regime,
        "gamma": verdict.gamma,
        "x_s": wall.map(|w| w.x_s),
        "rho_minus": wall.map(|w| w.rho_minus),
        "rho_plus": wall.map(|w| w.rho_plus),
        "height": wall.map(|w| w.height),
        "residual": wall.map(|w| w.residual),
    })
}

fn merge(mut head: serde_json::Map<String, Value>, body: Value) -> Value {
    if let Value::Object(b) = body {
        head.extend(b);
    }
    Value::Object(head)
}

pub fn profile(cfg: &mut RunConfig, sink: &Sink) -> Result<(), Failure> {
    let params = cfg.model_params()?;
    let format = cfg.format_or(Format::Csv, &[Format::Csv, Format::Json])?;
    let n_points = *cfg.points.get_or_insert(101);
    let composite = composite_profile(&params, n_points)?;

    let summary = json!({
        "regime": composite.verdict.regime,
        "kind": composite.kind,
        "exists": composite.verdict.exists,
        "wall": composite.wall.as_ref().map(|w| wall_fields(&composite.verdict, Some(w))),
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["x", "rho", "branch"])?;
            for p in &composite.points {
                let rho = p.rho.map(num).unwrap_or_default();
                w.write_record([num(p.x), rho, branch_name(p.branch).to_string()])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Failure::Other(anyhow::anyhow!("{e}")))?;
            sink.write(&bytes)?;
            sink.write_meta(&merge(header(cfg), summary))?;
        }
        Format::Json => {
            let points: Vec<Value> = composite
                .points
                .iter()
                .map(|p| json!({ "x": p.x, "rho": p.rho, "branch": branch_name(p.branch) }))
                .collect();
            let mut body = summary;
            body["points"] = Value::Array(points);
            sink.write_json(&merge(header(cfg), body))?;
        }
    }

    if !composite.is_resolved() {
        let unresolved = composite.points.iter().filter(|p| p.rho.is_none()).count();
        return Err(Failure::Unresolved(json!({
            "error": "unresolved_profile",
            "regime": composite.verdict.regime,
            "kind": composite.kind,
            "unresolved_points": unresolved,
            "left_reach": Branch::new(&params, BranchSide::Left).reach(),
            "right_reach": Branch::new(&params, BranchSide::Right).reach(),
        })));
    }
    Ok(())
}

/// `wall` and `exist`; `exist` adds the tested inverse positions.
pub fn wall(cfg: &mut RunConfig, sink: &Sink, diagnostics: bool) -> Result<(), Failure> {
    let params = cfg.model_params()?;
    cfg.format_or(Format::Json, &[Format::Json])?;
    let verdict = check_existence(&params);
    let wall = if verdict.exists {
        Some(solve_wall(&params)?)
    } else {
        None
    };
    let mut body = wall_fields(&verdict, wall.as_ref());
    if diagnostics {
        body["diagnostics"] = json!({
            "left_position": verdict.left_position,
            "right_position": verdict.right_position,
            "half_density_positions": verdict.half_density_positions,
            "boundary_margin": verdict.boundary_margin(),
            "untestable": verdict.untestable,
        });
    }
    sink.write_json(&merge(header(cfg), body))
}

fn no_wall_at(params: &ModelParams) -> Failure {
    let verdict = check_existence(params);
    Failure::NoWall(json!({
        "error": "no_wall",
        "regime": verdict.regime,
        "left_position": verdict.left_position,
        "right_position": verdict.right_position,
    }))
}

fn report_entry(
    params: &ModelParams,
    wall: &WallSolution,
    parameter: Parameter,
    step: Option<f64>,
) -> Value {
    let step = step.unwrap_or_else(|| parameter.default_step());
    if let Err(e) = sensitivity::analytic(params, wall, parameter) {
        return json!({
            "parameter": parameter,
            "status": "singular",
            "error": e.to_string(),
            "fd_step": step,
        });
    }
    match sensitivity::finite_difference(params, parameter, step) {
        Ok(r) => {
            let mut v = serde_json::to_value(&r).unwrap_or(Value::Null);
            v["status"] = json!("ok");
            let mut flags = Vec::new();
            if let Some(alt) = r.alt_analytic_xs {
                v["alt_rel_gap_xs"] = json!(relative_gap(alt, r.fd_xs));
                flags.push("alt_analytic_xs uses the factor 2(K+1)(1-2beta); it agrees with the finite difference only at K = 3");
            }
            if let Some(alt) = r.alt_analytic_eps {
                v["alt_rel_gap_eps"] = json!(relative_gap(alt, r.fd_eps));
                v["alt_ratio_eps"] = json!(alt / r.fd_eps);
                flags.push("alt_analytic_eps carries a squared (K+1) factor; its magnitude is off by K+1, the sign is right");
            }
            v["flags"] = json!(flags);
            v
        }
        Err(e) => {
            let analytic = sensitivity::analytic(params, wall, parameter).ok();
            json!({
                "parameter": parameter,
                "status": match e {
                    Error::RegimeCrossed(_) => "regime_crossed",
                    Error::Singular(_) => "singular",
                    _ => "error",
                },
                "error": e.to_string(),
                "analytic_xs": analytic.map(|a| a.0),
                "analytic_eps": analytic.map(|a| a.1),
                "fd_step": step,
            })
        }
    }
}

pub fn sensitivity(cfg: &mut RunConfig, sink: &Sink) -> Result<(), Failure> {
    let params = cfg.model_params()?;
    cfg.format_or(Format::Json, &[Format::Json])?;
    if let Some(h) = cfg.fd_step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Failure::Invalid(format!(
                "--fd-step must be positive, got {h}"
            )));
        }
    }
    let wall = match solve_wall(&params) {
        Ok(w) => w,
        Err(Error::NoWall) => return Err(no_wall_at(&params)),
        Err(e) => return Err(e.into()),
    };
    let reports: Vec<Value> = Parameter::ALL
        .iter()
        .map(|&p| report_entry(&params, &wall, p, cfg.fd_step))
        .collect();
    let verdict = check_existence(&params);
    let body = json!({
        "wall": wall_fields(&verdict, Some(&wall)),
        "reports": reports,
    });
    sink.write_json(&merge(header(cfg), body))
}

fn held_fixed(p: Parameter) -> [&'static str; 3] {
    match p {
        Parameter::OmegaD => ["alpha", "beta", "k"],
        Parameter::K => ["alpha", "beta", "omega_d"],
        Parameter::Alpha => ["beta", "k", "omega_d"],
        Parameter::Beta => ["alpha", "k", "omega_d"],
    }
}

pub fn scan(cfg: &mut RunConfig, sink: &Sink) -> Result<(), Failure> {
    let params = cfg.model_params()?;
    let format = cfg.format_or(Format::Csv, &[Format::Csv, Format::Json])?;
    let name = cfg
        .parameter
        .clone()
        .ok_or_else(|| Failure::Invalid("missing --parameter".into()))?;
    let parameter: Parameter = name.parse().map_err(Failure::Invalid)?;
    cfg.parameter = Some(parameter.name().to_string());
    let from = RunConfig::require(cfg.from, "from")?;
    let to = RunConfig::require(cfg.to, "to")?;
    let steps = *cfg.steps.get_or_insert(41);
    let result = monotonicity_scan(&params, parameter, from, to, steps)?;

    let classification = json!({
        "parameter": parameter,
        "held_fixed": held_fixed(parameter),
        "x_s": result.xs_trend(),
        "height": result.height_trend(),
        "wall_points": result.wall_count(),
        "no_wall_points": result.points.len() - result.wall_count(),
    });
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["param_value", "x_s", "height", "status"])?;
            for p in &result.points {
                let (xs, h, status) = match p.wall {
                    Some((xs, h)) => (num(xs), num(h), "ok"),
                    None => (String::new(), String::new(), "no_wall"),
                };
                w.write_record([num(p.value), xs, h, status.to_string()])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Failure::Other(anyhow::anyhow!("{e}")))?;
            sink.write(&bytes)?;
            sink.write_meta(&merge(
                header(cfg),
                json!({ "classification": classification }),
            ))?;
        }
        Format::Json => {
            let rows: Vec<Value> = result
                .points
                .iter()
                .map(|p| {
                    json!({
                        "param_value": p.value,
                        "x_s": p.wall.map(|w| w.0),
                        "height": p.wall.map(|w| w.1),
                        "status": if p.wall.is_some() { "ok" } else { "no_wall" },
                    })
                })
                .collect();
            let body = json!({ "classification": classification, "rows": rows });
            sink.write_json(&merge(header(cfg), body))?;
        }
    }
    if result.wall_count() == 0 {
        return Err(Failure::NoWall(json!({
            "error": "no_wall",
            "message": "no scanned point has a domain wall",
        })));
    }
    Ok(())
}

/// Mean of independent replicas, with the replica spread as standard error.
fn pool(replicas: &[ProfileEstimate]) -> ProfileEstimate {
    let first = &replicas[0];
    if replicas.len() == 1 {
        return first.clone();
    }
    let r = replicas.len() as f64;
    let n = first.n_sites();
    let mut density = vec![0.0; n];
    let mut std_error = vec![0.0; n];
    for i in 0..n {
        let mean = replicas.iter().map(|p| p.density[i]).sum::<f64>() / r;
        let var = replicas
            .iter()
            .map(|p| (p.density[i] - mean).powi(2))
            .sum::<f64>()
            / (r - 1.0);
        density[i] = mean;
        std_error[i] = (var / r).sqrt();
    }
    let mut counts = first.event_counts;
    for p in &replicas[1..] {
        counts.merge(&p.event_counts);
    }
    ProfileEstimate {
        config: first.config,
        density,
        std_error,
        n_samples: replicas.iter().map(|p| p.n_samples).sum(),
        half_window_gap: replicas
            .iter()
            .map(|p| p.half_window_gap)
            .fold(0.0, f64::max),
        stationary: replicas.iter().all(|p| p.stationary),
        event_counts: counts,
        final_time: first.final_time,
    }
}

fn run_lattice(cfg: &mut RunConfig) -> Result<(ProfileEstimate, Vec<ProfileEstimate>), Failure> {
    cfg.fill_lattice_defaults()?;
    let lattice = cfg.lattice()?;
    let replicas = cfg.replicas.unwrap_or(1);
    if replicas == 0 {
        return Err(Failure::Invalid("--replicas must be at least 1".into()));
    }
    let runs = kmc::run_replicas(&lattice, replicas)?;
    Ok((pool(&runs), runs))
}

fn stationarity_failure(profile: &ProfileEstimate) -> Failure {
    Failure::NotStationary(json!({
        "error": "not_stationary",
        "half_window_gap": profile.half_window_gap,
        "threshold": profile.config.stationarity_threshold,
        "hint": "increase --burn-in or --measure-time",
    }))
}

pub fn simulate(cfg: &mut RunConfig, sink: &Sink) -> Result<(), Failure> {
    cfg.format_or(Format::Csv, &[Format::Csv])?;
    let (pooled, runs) = run_lattice(cfg)?;
    let mut buf = Vec::new();
    kmc::write_profile_csv(&pooled, &mut buf)?;
    sink.write(&buf)?;
    let body = json!({
        "rng": kmc::RNG_ALGORITHM,
        "stationary": pooled.stationary,
        "half_window_gap": pooled.half_window_gap,
        "simulation": runs.iter().map(|p| p.metadata()).collect::<Vec<_>>(),
    });
    sink.write_meta(&merge(header(cfg), body))?;
    if !pooled.stationary {
        return Err(stationarity_failure(&pooled));
    }
    Ok(())
}

/// Reads a `simulate` CSV and the lattice config from its sidecar.
fn read_profile(cfg: &mut RunConfig) -> Result<ProfileEstimate, Failure> {
    let path = cfg.profile.clone().expect("caller checked");
    let meta_path = crate::output::sidecar_path(&path);
    let meta_text = std::fs::read_to_string(&meta_path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", meta_path.display())))?;
    let meta: Value = serde_json::from_str(&meta_text)
        .map_err(|e| Failure::Invalid(format!("{} is not JSON: {e}", meta_path.display())))?;
    let lattice: LatticeConfig = serde_json::from_value(meta["simulation"][0]["config"].clone())
        .map_err(|e| {
            Failure::Invalid(format!(
                "{}: no simulation config ({e})",
                meta_path.display()
            ))
        })?;

    let mut reader = csv::Reader::from_path(&path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let column = reader
        .headers()?
        .iter()
        .position(|h| h == "density")
        .ok_or_else(|| Failure::Invalid(format!("{} has no density column", path.display())))?;
    let mut density = Vec::new();
    for record in reader.records() {
        let record = record?;
        let v: f64 = record[column]
            .parse()
            .map_err(|e| Failure::Invalid(format!("{}: bad density: {e}", path.display())))?;
        density.push(v);
    }
    if density.len() != lattice.n_sites {
        return Err(Failure::Invalid(format!(
            "{} has {} rows but the sidecar says {} sites",
            path.display(),
            density.len(),
            lattice.n_sites
        )));
    }
    // rates not given on the command line come from the sidecar
    cfg.alpha.get_or_insert(lattice.alpha);
    cfg.beta.get_or_insert(lattice.beta);
    cfg.omega_a.get_or_insert(lattice.omega_a_reduced);
    cfg.omega_d.get_or_insert(lattice.omega_d_reduced);
    let n = density.len();
    Ok(ProfileEstimate {
        config: lattice,
        std_error: vec![0.0; n],
        density,
        n_samples: meta["simulation"][0]["n_samples"].as_u64().unwrap_or(0) as usize,
        half_window_gap: meta["half_window_gap"].as_f64().unwrap_or(0.0),
        stationary: meta["stationary"].as_bool().unwrap_or(true),
        event_counts: Default::default(),
        final_time: meta["simulation"][0]["final_time"].as_f64().unwrap_or(0.0),
    })
}

pub fn compare(cfg: &mut RunConfig, sink: &Sink) -> Result<(), Failure> {
    cfg.format_or(Format::Json, &[Format::Json])?;
    let exclusion = *cfg.exclusion.get_or_insert(0.05);
    let simulated = cfg.profile.is_none();
    let profile = if simulated {
        run_lattice(cfg)?.0
    } else {
        read_profile(cfg)?
    };
    let params = cfg.model_params()?;
    let composite = composite_profile(&params, 2)?;
    let cmp = compare_to_meanfield(&profile, &composite, exclusion)?;
    let mut body = serde_json::to_value(&cmp).map_err(|e| Failure::Other(e.into()))?;
    body["regime"] = json!(composite.verdict.regime);
    body["stationary"] = json!(profile.stationary);
    body["half_window_gap"] = json!(profile.half_window_gap);
    sink.write_json(&merge(header(cfg), body))?;
    if simulated && !profile.stationary {
        return Err(stationarity_failure(&profile));
    }
    Ok(())
}
