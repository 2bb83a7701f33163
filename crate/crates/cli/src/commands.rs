use std::path::{Path, PathBuf};

use fcf_core::bloch::{phase_diagram, DiagramSettings};
use fcf_core::drive::{build_family_drive, fourier_components};
use fcf_core::effective::{derive_rates, DEFAULT_ISO_TOL};
use fcf_core::optimizer::{self, OptimizationProblem, SweepRow, SweepTable};
use fcf_core::validate::{compare_effective, deviation_scaling, effective_chern, floquet_chern};
use fcf_core::{DriveFamily, DriveSpec, LatticeGeometry, ModelKind, PropagatorSettings};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::range::{parse_list, parse_range};
use crate::{svg, DriveArgs, FamilyChoice, ModelChoice, SearchArgs};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<String, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(name.to_string())
}

fn value(x: &impl serde::Serialize) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("summary serializes")
}

pub fn load_drive(args: &DriveArgs) -> Result<DriveSpec, CliError> {
    if let Some(path) = &args.drive {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        return Ok(DriveSpec::from_json(&text)?);
    }
    let family: DriveFamily = args
        .family
        .as_deref()
        .ok_or_else(|| CliError::Config("give --drive FILE or --family with --amps".into()))?
        .parse()?;
    let amps = parse_list(args.amps.as_deref().unwrap_or("1.0"), "--amps")?;
    let deltas = match &args.deltas {
        Some(d) => parse_list(d, "--deltas")?,
        None => vec![0.0; amps.len()],
    };
    Ok(build_family_drive(family, args.omega, &amps, &deltas)?)
}

fn families(choice: FamilyChoice) -> Vec<DriveFamily> {
    match choice {
        FamilyChoice::Plus => vec![DriveFamily::Plus],
        FamilyChoice::Minus => vec![DriveFamily::Minus],
        FamilyChoice::Both => vec![DriveFamily::Plus, DriveFamily::Minus],
    }
}

fn template(search: &SearchArgs, phi_target: f64, r_th: f64) -> OptimizationProblem {
    OptimizationProblem {
        n_starts: search.starts,
        seed: search.seed,
        amp_bound: search.amp_bound,
        max_iter: search.max_iter,
        ..OptimizationProblem::new(DriveFamily::Plus, search.harmonics, phi_target, r_th)
    }
}

pub fn rates(args: &DriveArgs, j0: f64, delta: f64, out: Option<&Path>) -> Result<String, CliError> {
    let spec = load_drive(args)?;
    let geom = LatticeGeometry::unit();
    let rates = derive_rates(&fourier_components(&spec, &geom, j0, None)?, DEFAULT_ISO_TOL)?;
    let drive: Value = serde_json::from_str(&spec.to_json()).expect("drive JSON round-trips");
    let text = pretty(&json!({
        "drive": drive,
        "delta": delta,
        "delta_eff": rates.delta_eff(delta),
        "nn_ratio": rates.nn_ratio(),
        "enhancement": rates.enhancement(),
        "rates": value(&rates),
    }));
    if let Some(dir) = out {
        write_file(dir, "rates.json", &(text.clone() + "\n"))?;
    }
    Ok(text)
}

pub fn phase_map(a1: &str, a2: &str, delta2: f64, out: &Path, with_svg: bool) -> Result<String, CliError> {
    let (a1, a2) = (parse_range(a1, "--A1")?, parse_range(a2, "--A2")?);
    if a1.values.iter().chain(&a2.values).any(|&v| v < 0.0) {
        return Err(CliError::Config("amplitudes must be non-negative".into()));
    }
    let map = optimizer::phase_map(&a1, &a2, delta2)?;
    let mut files = vec![write_file(out, "phase_map.csv", &map.to_csv())?];
    if with_svg {
        files.push(write_file(out, "phase_map.svg", &svg::phase_map_svg(&map))?);
    }
    Ok(pretty(&json!({
        "cells": map.cells.len(),
        "undefined_phi": map.cells.iter().filter(|c| c.phi.is_none()).count(),
        "phase_coverage_64_bins": map.phase_coverage(64),
        "components_above_0.25": map.super_level_components(0.25),
        "components_above_0.5": map.super_level_components(0.5),
        "files": files,
    })))
}

pub fn chern_diagram(
    phi: &str,
    ratio: &str,
    kgrid: usize,
    model: ModelChoice,
    j2_over_j1: f64,
    out: &Path,
    with_svg: bool,
) -> Result<String, CliError> {
    let settings = DiagramSettings {
        phi: parse_range(phi, "--phi")?,
        ratio: parse_range(ratio, "--ratio")?,
        n1: kgrid,
        n2: kgrid,
        j2_over_j1,
    };
    let kinds = match model {
        ModelChoice::Driven => vec![ModelKind::DrivenHexagonal],
        ModelChoice::Haldane => vec![ModelKind::HaldaneReference],
        ModelChoice::Both => vec![ModelKind::DrivenHexagonal, ModelKind::HaldaneReference],
    };
    let mut files = Vec::new();
    let mut models = Vec::new();
    for kind in kinds {
        let diagram = phase_diagram(kind, &settings)?;
        let name = format!("chern_{}", kind.label());
        files.push(write_file(out, &format!("{name}.csv"), &diagram.to_csv())?);
        if with_svg {
            files.push(write_file(out, &format!("{name}.svg"), &svg::chern_svg(&diagram))?);
        }
        let count = |c: i32| diagram.cells.iter().filter(|x| x.chern == Some(c)).count();
        models.push(json!({
            "model": kind.label(),
            "cells": diagram.cells.len(),
            "indeterminate": diagram.cells.iter().filter(|x| x.chern.is_none()).count(),
            "chern_minus_one": count(-1),
            "chern_zero": count(0),
            "chern_plus_one": count(1),
        }));
    }
    Ok(pretty(&json!({ "models": models, "files": files })))
}

fn result_json(family: DriveFamily, r: &fcf_core::OptimizationResult) -> Value {
    json!({
        "family": family,
        "R": r.r_value,
        "phi": r.phi_achieved,
        "j1_over_j0": r.j1_over_j0,
        "p_star": r.p_star,
        "feasible": r.feasible,
        "phi_residual": r.phi_residual,
        "threshold_residual": r.threshold_residual,
        "starts_converged": r.starts_converged,
    })
}

pub fn optimize(phi_target: f64, r_th: f64, search: &SearchArgs, out: &Path) -> Result<String, CliError> {
    let base = template(search, phi_target, r_th);
    let mut rows = Vec::new();
    for family in families(search.family) {
        let problem = OptimizationProblem { family, ..base.clone() };
        let result = optimizer::maximize(&problem)?;
        rows.push(SweepRow { family, phi_target, r_threshold: r_th, result, discontinuity: false });
    }
    let table = SweepTable { harmonics: search.harmonics, rows };
    let best = table
        .rows
        .iter()
        .filter(|r| r.result.feasible)
        .max_by(|a, b| a.result.r_value.total_cmp(&b.result.r_value))
        .map(|r| r.family);
    let file = write_file(out, "optimize.csv", &table.to_csv())?;
    Ok(pretty(&json!({
        "phi_target": phi_target,
        "r_th": r_th,
        "results": table.rows.iter().map(|r| result_json(r.family, &r.result)).collect::<Vec<_>>(),
        "best_family": best,
        "files": [file],
    })))
}

pub fn sweep(phi_targets: &str, r_th: &str, search: &SearchArgs, refine: usize, out: &Path) -> Result<String, CliError> {
    let phis = parse_list(phi_targets, "--phi-targets")?;
    let thresholds = parse_list(r_th, "--r-th")?;
    let table = optimizer::sweep_targets(&phis, &thresholds, &families(search.family), &template(search, 0.0, 0.0), refine)?;
    let file = write_file(out, "sweep.csv", &table.to_csv())?;
    Ok(pretty(&json!({
        "rows": table.rows.len(),
        "feasible": table.rows.iter().filter(|r| r.result.feasible).count(),
        "discontinuities": table.rows.iter().filter(|r| r.discontinuity).count(),
        "files": [file],
    })))
}

pub struct ValidateArgs {
    pub drive: DriveArgs,
    pub j0_over_omega: f64,
    pub kgrid: usize,
    pub steps: usize,
    pub delta: f64,
    pub richardson: bool,
    pub ladder: usize,
    pub chern_grid: Option<usize>,
    pub out: PathBuf,
}

pub fn validate(args: &ValidateArgs) -> Result<String, CliError> {
    if !(args.j0_over_omega > 0.0) {
        return Err(CliError::Config("--j0-over-omega must be positive".into()));
    }
    let j0 = 1.0;
    let spec = load_drive(&args.drive)?.with_omega(j0 / args.j0_over_omega)?;
    let geom = LatticeGeometry::unit();
    let settings = PropagatorSettings::new(args.steps, args.richardson)?;
    let report = compare_effective(&spec, &geom, j0, args.delta, args.kgrid, &settings)?;
    let mut files = vec![write_file(&args.out, "validate.csv", &report.to_csv())?];
    let mut summary = json!({
        "omega": spec.omega,
        "j0": j0,
        "kgrid": args.kgrid,
        "steps_per_period": args.steps,
        "max_deviation": report.max_deviation,
        "mean_deviation": report.mean_deviation,
        "max_unitarity_defect": report.max_unitarity_defect,
        "ambiguous_points": report.ambiguous_points,
    });
    if args.ladder >= 2 {
        let omegas: Vec<f64> = (0..args.ladder).map(|i| spec.omega * 2f64.powi(i as i32)).collect();
        let scaling = deviation_scaling(&spec, &geom, j0, args.delta, args.kgrid, &omegas, &settings)?;
        let mut csv = String::from("omega,max_deviation\n");
        for (w, d) in scaling.omegas.iter().zip(&scaling.max_deviations) {
            csv.push_str(&format!("{w},{d}\n"));
        }
        files.push(write_file(&args.out, "validate_scaling.csv", &csv)?);
        summary["scaling"] = value(&scaling);
    }
    if let Some(grid) = args.chern_grid {
        summary["chern"] = json!({
            "floquet": floquet_chern(&spec, &geom, j0, args.delta, grid, &settings)?,
            "effective": effective_chern(&spec, &geom, j0, args.delta, grid)?,
        });
    }
    summary["files"] = json!(files);
    Ok(pretty(&summary))
}
