//! Subcommand implementations behind the `gmdgrid` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmdgrid::coupling::{sequential_gic_ac, write_ac_branch_csv, write_ac_bus_csv, write_qloss_csv};
use gmdgrid::gic::{solve_gic, write_branch_csv, write_bus_csv, FieldInput, GicSolution};
use gmdgrid::scenario::Period;
use gmdgrid::thermal::{simulate, write_trace_csv, ThermalInput};
use gmdgrid::{make_ramp_scenario, parse_case, CaseData, FieldScenario};
use gmdgrid_ots::{build_model, enumerate_solve, solve, verify_plan, write_status_csv, MitigationPlan, OtsError, OtsOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub mod output;

use output::{Format, Meta};

/// Rise and fall of the case-study ramp, minutes.
pub const RAMP_HALF_SPAN_MIN: f64 = 180.0;

#[derive(Debug, Parser)]
#[command(name = "gmdgrid", version, about = "GIC, coupled ac, transformer heating and switching mitigation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasi-dc GIC solve at a uniform field or along a scenario.
    Dc(RunArgs),
    /// GIC reactive losses and ac power flow at one field.
    Ac(RunArgs),
    /// Transformer temperatures along a scenario, nominal topology.
    Thermal(RunArgs),
    /// Optimal switching plan against transformer heating.
    Mitigate(RunArgs),
    /// Re-simulate the plan written by `mitigate` into `--out`.
    Verify(RunArgs),
    /// Write the up-and-down ramp scenario peaking at `--field`.
    Ramp(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Bb,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct RunArgs {
    /// Case file (JSON).
    #[arg(long)]
    pub case: Option<PathBuf>,
    /// Field scenario CSV `t_min,e_mag_vkm,e_dir_deg`.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Uniform field magnitude, V/km (ramp peak for time-extended runs).
    #[arg(long)]
    pub field: Option<f64>,
    /// Field direction, degrees clockwise from geographic north.
    #[arg(long, default_value_t = 90.0)]
    pub dir: f64,
    /// Period length, minutes.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum, default_value_t = Solver::Bb)]
    pub solver: Solver,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4)]
    pub gap: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Evaluate independent time points on all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn core_error(context: &str, e: gmdgrid::Error) -> CliError {
    let msg = format!("{context}: {e}");
    if e.is_input_error() {
        CliError::Input(msg)
    } else {
        CliError::Analysis(msg)
    }
}

fn ots_error(e: OtsError) -> CliError {
    match e {
        OtsError::Case(e) => core_error("case", e),
        OtsError::Json(_) | OtsError::Csv(_) | OtsError::Io(_) | OtsError::Plan(_) | OtsError::CapExceeded { .. } => {
            CliError::Input(e.to_string())
        }
        OtsError::Infeasible { ref probes } => {
            let detail: Vec<String> = probes
                .iter()
                .map(|p| match p.first_violated {
                    Some(c) => format!("{}: first violated class {c}", p.topology),
                    None => format!("{}: feasible", p.topology),
                })
                .collect();
            CliError::Analysis(format!("{e} ({})", detail.join("; ")))
        }
        _ => CliError::Analysis(e.to_string()),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunArgs {
    fn validate(&self) -> Result<()> {
        for p in [&self.case, &self.scenario].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::Input(format!("{}: no such file", p.display())));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(CliError::Input(format!("--dt must be positive, got {dt}")));
            }
        }
        if !(self.gap > 0.0 && self.gap < 1.0) {
            return Err(CliError::Input(format!("--gap must lie in (0, 1), got {}", self.gap)));
        }
        if let Some(f) = self.field {
            if !(f >= 0.0) {
                return Err(CliError::Input(format!("--field must be non-negative, got {f}")));
            }
        }
        Ok(())
    }

    fn load_case(&self) -> Result<(CaseData, String)> {
        let path = self.case.as_ref().ok_or_else(|| CliError::Input("--case is required".into()))?;
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let case = parse_case(&text).map_err(|e| core_error(&path.display().to_string(), e))?;
        Ok((case, sha256_hex(&bytes)))
    }

    /// Scenario from `--scenario`, or the case-study ramp peaking at
    /// `--field`. `--dt` defaults to the sample spacing of the file, or 5 min.
    fn load_scenario(&self) -> Result<(FieldScenario, String)> {
        if let Some(path) = &self.scenario {
            let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
            let dt = match self.dt {
                Some(dt) => dt,
                None => sample_spacing(&bytes).ok_or_else(|| {
                    CliError::Input(format!("{}: cannot infer --dt from fewer than two samples", path.display()))
                })?,
            };
            let sc = FieldScenario::read_field_csv(bytes.as_slice(), dt)
                .map_err(|e| core_error(&path.display().to_string(), e))?;
            return Ok((sc, sha256_hex(&bytes)));
        }
        let peak = self
            .field
            .ok_or_else(|| CliError::Input("either --scenario or --field is required".into()))?;
        let dt = self.dt.unwrap_or(5.0);
        let sc = make_ramp_scenario(peak, RAMP_HALF_SPAN_MIN, RAMP_HALF_SPAN_MIN, dt, self.dir)
            .map_err(|e| core_error("ramp", e))?;
        let mut buf = Vec::new();
        sc.write_field_csv(&mut buf).map_err(|e| core_error("ramp", e))?;
        Ok((sc, sha256_hex(&buf)))
    }

    fn periods(&self, sc: &FieldScenario) -> Result<Vec<Period>> {
        sc.periods().map_err(|e| core_error("scenario", e))
    }

    fn prepare_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))
    }

    fn meta(&self, command: &str, case_sha: &str, scenario_sha: Option<&str>) -> Meta {
        let options = serde_json::to_string(&OptionsEcho { command, args: self }).expect("options serialize");
        Meta {
            tool: format!("gmdgrid {}", env!("CARGO_PKG_VERSION")),
            case_sha256: case_sha.to_string(),
            scenario_sha256: scenario_sha.unwrap_or("none").to_string(),
            options,
        }
    }
}

#[derive(Serialize)]
struct OptionsEcho<'a> {
    command: &'a str,
    #[serde(flatten)]
    args: &'a RunArgs,
}

fn sample_spacing(bytes: &[u8]) -> Option<f64> {
    let sc = FieldScenario::read_field_csv(bytes, 1.0).ok()?;
    let s = &sc.samples;
    (s.len() >= 2).then(|| s[1].t_min - s[0].t_min)
}

/// Runs one subcommand; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Dc(a) => a.validate().and_then(|_| dc(&a)),
        Command::Ac(a) => a.validate().and_then(|_| ac(&a)),
        Command::Thermal(a) => a.validate().and_then(|_| thermal(&a)),
        Command::Mitigate(a) => a.validate().and_then(|_| mitigate(&a)),
        Command::Verify(a) => a.validate().and_then(|_| verify(&a)),
        Command::Ramp(a) => a.validate().and_then(|_| ramp(&a)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn solve_periods(case: &CaseData, periods: &[Period], parallel: bool) -> Result<Vec<GicSolution<f64>>> {
    let one = |p: &Period| {
        solve_gic::<f64>(case, &FieldInput::Field(p.field.clone()), None)
            .map(|s| s.at(p.t_mid))
            .map_err(|e| core_error(&format!("dc solve at t = {} min", p.t_mid), e))
    };
    if parallel {
        periods.par_iter().map(one).collect()
    } else {
        periods.iter().map(one).collect()
    }
}

fn dc(a: &RunArgs) -> Result<()> {
    let (case, case_sha) = a.load_case()?;
    a.prepare_out()?;
    let (sols, meta) = if a.scenario.is_some() {
        let (sc, sc_sha) = a.load_scenario()?;
        let periods = a.periods(&sc)?;
        (solve_periods(&case, &periods, a.parallel)?, a.meta("dc", &case_sha, Some(&sc_sha)))
    } else {
        let e = a.field.ok_or_else(|| CliError::Input("either --scenario or --field is required".into()))?;
        let sol = solve_gic::<f64>(&case, &FieldInput::uniform(e, a.dir), None).map_err(|e| core_error("dc solve", e))?;
        (vec![sol], a.meta("dc", &case_sha, None))
    };
    output::write_table(a, "gic_branch", &meta, |w| write_branch_csv(&case, w, &sols))?;
    output::write_table(a, "gic_bus", &meta, |w| write_bus_csv(w, &sols))?;

    println!("{:>8} {:>14} {:>14}", "t_min", "max|I_dc| A", "max I_eff A");
    for s in &sols {
        let idc = s.branch_currents.values().fold(0.0f64, |m, v| m.max(v.abs()));
        let ieff = s.effective.values().fold(0.0f64, |m, v| m.max(*v));
        println!("{:>8.2} {:>14.4} {:>14.4}", s.t_min, idc, ieff);
    }
    Ok(())
}

fn peak_field(a: &RunArgs) -> Result<(FieldInput, Option<String>)> {
    if a.scenario.is_some() {
        let (sc, sha) = a.load_scenario()?;
        let periods = a.periods(&sc)?;
        let peak = periods
            .iter()
            .max_by(|x, y| x.field.e_mag.total_cmp(&y.field.e_mag))
            .ok_or_else(|| CliError::Input("scenario has no periods".into()))?;
        return Ok((FieldInput::Field(peak.field.clone()), Some(sha)));
    }
    let e = a.field.ok_or_else(|| CliError::Input("either --scenario or --field is required".into()))?;
    Ok((FieldInput::uniform(e, a.dir), None))
}

fn ac(a: &RunArgs) -> Result<()> {
    let (case, case_sha) = a.load_case()?;
    let (field, sc_sha) = peak_field(a)?;
    a.prepare_out()?;
    let (_, losses, sol) = sequential_gic_ac(&case, &field, None).map_err(|e| core_error("ac power flow", e))?;
    let meta = a.meta("ac", &case_sha, sc_sha.as_deref());
    output::write_table(a, "ac_bus", &meta, |w| write_ac_bus_csv(w, &sol))?;
    output::write_table(a, "ac_branch", &meta, |w| write_ac_branch_csv(w, &sol))?;
    output::write_table(a, "qloss", &meta, |w| write_qloss_csv(w, &losses))?;
    println!(
        "converged in {} iterations, mismatch {:.2e} p.u.; GIC reactive loss {:.6} p.u.; generator Q {:.6} p.u.",
        sol.report.iterations,
        sol.report.max_mismatch,
        losses.total(),
        sol.total_q_gen()
    );
    Ok(())
}

fn thermal(a: &RunArgs) -> Result<()> {
    let (case, case_sha) = a.load_case()?;
    let (sc, sc_sha) = a.load_scenario()?;
    let periods = a.periods(&sc)?;
    a.prepare_out()?;
    let one = |p: &Period| {
        sequential_gic_ac(&case, &FieldInput::Field(p.field.clone()), None)
            .map_err(|e| core_error(&format!("coupled solve at t = {} min", p.t_mid), e))
    };
    let states: Vec<_> = if a.parallel {
        periods.par_iter().map(one).collect::<Result<_>>()?
    } else {
        periods.iter().map(one).collect::<Result<_>>()?
    };
    let mut loading: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut i_eff: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (gic, _, acs) in &states {
        for th in &case.thermal {
            let s = acs.flows.get(&th.branch).map(|f| f.p_from.hypot(f.q_from)).unwrap_or(0.0);
            loading.entry(th.branch).or_default().push(s);
            i_eff
                .entry(th.branch)
                .or_default()
                .push(gic.effective.get(&th.branch).copied().unwrap_or(0.0));
        }
    }
    let input = ThermalInput {
        times: periods.iter().map(|p| p.t_mid).collect(),
        dt: sc.dt,
        loading,
        i_eff,
    };
    let trace = simulate(&case, &input).map_err(|e| core_error("thermal", e))?;
    let meta = a.meta("thermal", &case_sha, Some(&sc_sha));
    output::write_table(a, "thermal", &meta, |w| write_trace_csv(w, &trace))?;

    println!("{:>8} {:>12} {:>10} {:>10}", "branch", "peak_hs_C", "limit_C", "violated");
    for (id, pts) in &trace.series {
        let peak = pts.iter().map(|p| p.hotspot).fold(f64::NEG_INFINITY, f64::max);
        let limit = pts.first().map(|p| p.limit).unwrap_or(f64::NAN);
        println!("{id:>8} {peak:>12.2} {limit:>10.1} {:>10}", pts.iter().any(|p| p.violation));
    }
    Ok(())
}

/// Plan file layout: metadata next to the plan itself.
#[derive(Serialize, Deserialize)]
pub struct PlanFile {
    pub meta: Meta,
    pub plan: MitigationPlan,
}

pub const PLAN_FILE: &str = "plan.json";

fn mitigate(a: &RunArgs) -> Result<()> {
    let (case, case_sha) = a.load_case()?;
    let (sc, sc_sha) = a.load_scenario()?;
    a.prepare_out()?;
    let opts = OtsOptions {
        gap: a.gap,
        ..Default::default()
    };
    let start = Instant::now();
    let model = build_model(&case, &sc, &opts).map_err(ots_error)?;
    let plan = match a.solver {
        Solver::Bb => solve(&case, &model),
        Solver::Enum => enumerate_solve(&case, &model),
    }
    .map_err(ots_error)?;
    let wall = start.elapsed().as_secs_f64();
    let meta = a.meta("mitigate", &case_sha, Some(&sc_sha));

    let file = PlanFile { meta: meta.clone(), plan };
    let text = serde_json::to_string_pretty(&file).map_err(|e| CliError::Analysis(e.to_string()))?;
    let path = a.out.join(PLAN_FILE);
    fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    let plan = &file.plan;
    let peak = MitigationPlan::peak_period(&model);
    output::write_table_as(a, "status", Format::Csv, &meta, |w| {
        write_status_csv(w, &case, plan, peak).map_err(|e| gmdgrid::Error::Structure(e.to_string()))
    })?;

    let opened: Vec<String> = case
        .branches
        .iter()
        .filter(|b| plan.z_nom[&b.index] == 1 && plan.z[&b.index] == 0)
        .map(|b| format!("{}-{}-{}", b.f_bus, b.t_bus, b.ckt))
        .collect();
    println!("solver {:?}: {} binaries, {} nodes, {} LPs, {wall:.2} s", a.solver, model.num_binaries(), plan.nodes, plan.lp_solves);
    println!("objective {:.6} (model {:.6}, bound {:.6}, gap {:.2e})", plan.objective, plan.model_objective, plan.bound, plan.gap);
    println!("opened: {}", if opened.is_empty() { "none".to_string() } else { opened.join(", ") });
    // recomputed physics, not the epigraph values stored in the plan
    let report = verify_plan(&case, &sc, plan).map_err(ots_error)?;
    println!("{:>8} {:>12} {:>10}", "branch", "peak_hs_C", "peak_I_eff");
    for (id, peak) in &report.peak_hotspot {
        let ie = report.i_eff[id].iter().copied().fold(0.0, f64::max);
        println!("{id:>8} {peak:>12.2} {ie:>10.2}");
    }
    Ok(())
}

fn verify(a: &RunArgs) -> Result<()> {
    let (case, case_sha) = a.load_case()?;
    let (sc, sc_sha) = a.load_scenario()?;
    let path = a.out.join(PLAN_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let file: PlanFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let report = verify_plan(&case, &sc, &file.plan).map_err(ots_error)?;
    let meta = a.meta("verify", &case_sha, Some(&sc_sha));
    let doc = serde_json::json!({ "meta": meta, "report": report });
    let out = a.out.join("verify.json");
    fs::write(&out, serde_json::to_string_pretty(&doc).expect("report serializes") + "\n")
        .map_err(|e| io_error(&out, e))?;
    for (check, worst) in &report.worst {
        println!("{:<40} worst excess {:.3e}", check.to_string(), worst);
    }
    if report.is_clean() {
        println!("plan verified: no violations");
        Ok(())
    } else {
        for v in &report.violations {
            println!("violation: {v}");
        }
        Err(CliError::Analysis(format!("{} violations", report.violations.len())))
    }
}

fn ramp(a: &RunArgs) -> Result<()> {
    let peak = a.field.unwrap_or(3.2);
    let dt = a.dt.unwrap_or(5.0);
    let sc = make_ramp_scenario(peak, RAMP_HALF_SPAN_MIN, RAMP_HALF_SPAN_MIN, dt, a.dir).map_err(|e| core_error("ramp", e))?;
    a.prepare_out()?;
    let meta = a.meta("ramp", "none", None);
    output::write_table_as(a, "ramp", Format::Csv, &meta, |w| sc.write_field_csv(w))?;
    println!("{} samples, peak {peak} V/km at t = {RAMP_HALF_SPAN_MIN} min", sc.samples.len());
    Ok(())
}
