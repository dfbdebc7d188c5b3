//! Subcommand bodies, kept out of `main` so they can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use geoduio::cases::{run_case_study, CaseOverrides, GraphChoice};
use geoduio::matlin::{eigvals, sort_spectrum, Mat, Tolerances};
use geoduio::plot::{render, Panel, Series};
use geoduio::sim::{simulate, Signals, Trajectory};
use geoduio::synthesis::{check_joint_condition, check_rank_condition, synthesize, DuioDesign, SynthesisOptions};
use geoduio::{DuioError, Result};

use crate::description::SystemDescription;

pub const EXIT_OK: i32 = 0;
/// A platoon acceptance check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_JOINT_CONDITION: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;

/// Environment variable overriding the rank tolerance.
pub const TOL_ENV: &str = "GEO_DUIO_TOL";

pub fn exit_code(err: &DuioError) -> i32 {
    match err {
        DuioError::JointConditionViolated { .. } => EXIT_JOINT_CONDITION,
        DuioError::NumericalBlowup { .. } => EXIT_BLOWUP,
        _ => EXIT_INVALID,
    }
}

/// Default tolerances, with the rank threshold replaced by `value` when given.
pub fn tolerances(value: Option<&str>) -> Result<Tolerances> {
    let tol = Tolerances::default();
    match value {
        None => Ok(tol),
        Some(s) => {
            let rank: f64 = s
                .trim()
                .parse()
                .map_err(|_| DuioError::Invalid(format!("{TOL_ENV} is not a number: `{s}`")))?;
            tol.with_rank(rank)
        }
    }
}

pub fn tolerances_from_env() -> Result<Tolerances> {
    tolerances(std::env::var(TOL_ENV).ok().as_deref())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DuioError + '_ {
    move |e| DuioError::Invalid(format!("{}: {e}", path.display()))
}

pub fn read_description(path: &Path) -> Result<SystemDescription> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    SystemDescription::parse(&text)
}

pub fn design_from(desc: &SystemDescription, tol: &Tolerances) -> Result<DuioDesign> {
    let sys = desc.system()?;
    let opts = SynthesisOptions {
        region: sys.region,
        pole_targets: sys.pole_targets,
        tol: *tol,
        ..SynthesisOptions::default()
    };
    synthesize(&sys.a, &sys.b, &sys.nodes, &sys.graph, sys.u_bar_max, &opts)
}

fn spectrum(m: &Mat) -> Result<Value> {
    let mut ev = eigvals(m)?;
    sort_spectrum(&mut ev);
    Ok(ev.iter().map(|z| json!([z.re, z.im])).collect())
}

fn rows(m: &Mat) -> Value {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect::<Vec<f64>>())
        .collect()
}

/// Structured summary of a synthesized design.
pub fn design_report(design: &DuioDesign, tol: &Tolerances) -> Result<Value> {
    let nodes = design
        .nodes
        .iter()
        .map(|d| {
            Ok(json!({
                "index": d.spec.index + 1,
                "w_dim": d.w_dim(),
                "rank_condition": check_rank_condition(&d.spec, tol),
                "known_inputs": d.spec.known,
                "closed_loop_spectrum": spectrum(&d.closed_loop)?,
                "restricted_spectrum": spectrum(&d.restricted)?,
                "quotient_spectrum": spectrum(&d.induced)?,
                "injection": rows(&d.injection),
                "insertion": rows(&d.insertion),
            }))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "n": design.n(),
        "margin": design.region.margin(),
        "u_bar_max": design.u_bar_max,
        "joint_condition": check_joint_condition(&design.nodes, tol)?,
        "bounds": { "chi": design.bounds.chi, "gamma": design.bounds.gamma },
        "gains": { "chi": design.chi, "gamma": design.gamma },
        "nodes": nodes,
    }))
}

pub fn cmd_synthesize(input: &Path, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let tol = tolerances_from_env()?;
    let desc = read_description(input)?;
    let design = design_from(&desc, &tol)?;
    let text = serde_json::to_string_pretty(&design_report(&design, &tol)?).expect("json values serialize");
    match output {
        Some(path) => fs::write(path, text + "\n").map_err(io_err(path))?,
        None => writeln!(out, "{text}").map_err(|e| DuioError::Invalid(e.to_string()))?,
    }
    Ok(())
}

/// Command-line overrides of the description's simulation section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimFlags {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub integrator: Option<String>,
    pub boundary_layer: Option<f64>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// Gains stored in a design report written by `synthesize`.
pub fn gains_from_report(path: &Path) -> Result<(f64, f64)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| DuioError::Invalid(format!("{}: malformed design report: {e}", path.display())))?;
    let get = |k: &str| {
        v["gains"][k]
            .as_f64()
            .ok_or_else(|| DuioError::Invalid(format!("{}: missing gains.{k}", path.display())))
    };
    Ok((get("chi")?, get("gamma")?))
}

pub fn run_simulation(desc: &SystemDescription, design: &DuioDesign, flags: &SimFlags) -> Result<Trajectory> {
    let sim = desc.simulation_section()?;
    let mut sim = sim.clone();
    if let Some(v) = flags.t_end {
        sim.t_end = v;
    }
    if let Some(v) = flags.dt {
        sim.dt = v;
    }
    if let Some(v) = &flags.integrator {
        sim.integrator = v.clone();
    }
    if let Some(v) = flags.boundary_layer {
        sim.boundary_layer = v;
    }
    let config = sim.config()?;
    let (x0, xhat0) = desc.initial_conditions()?;
    let m = desc.m;
    let inputs = sim.inputs.clone();
    let signals = Signals::new(
        move |t| {
            let mut u = Mat::zeros(m, 1);
            for (j, s) in inputs.iter().enumerate() {
                u[(j, 0)] = s.eval(t);
            }
            u.column(0).into_owned()
        },
        desc.u_bar_max,
    );
    simulate(design, &x0, &xhat0, &signals, &config, None)
}

pub fn simulation_svg(traj: &Trajectory) -> String {
    let errors: Vec<Series> = (0..traj.n_nodes())
        .map(|i| Series::new(format!("node {}", i + 1), traj.error_norms(i)))
        .collect();
    let n = traj.x.first().map_or(0, |x| x.len());
    let states: Vec<Series> = (0..n)
        .map(|k| Series::new(format!("x{}", k + 1), traj.x.iter().map(|x| x[k]).collect()))
        .collect();
    render(
        &traj.times,
        &[
            Panel::new("estimation error norm", errors),
            Panel::new("plant state", states),
        ],
    )
}

pub fn cmd_simulate(input: &Path, design_path: Option<&Path>, flags: &SimFlags, out: &mut dyn Write) -> Result<()> {
    let tol = tolerances_from_env()?;
    let desc = read_description(input)?;
    let mut design = design_from(&desc, &tol)?;
    if let Some(path) = design_path {
        let (chi, gamma) = gains_from_report(path)?;
        design = design.with_gains(chi, gamma);
    }
    let traj = run_simulation(&desc, &design, flags)?;
    if let Some(path) = &flags.csv {
        let file = fs::File::create(path).map_err(io_err(path))?;
        traj.write_csv(std::io::BufWriter::new(file)).map_err(io_err(path))?;
    }
    if let Some(path) = &flags.svg {
        fs::write(path, simulation_svg(&traj)).map_err(io_err(path))?;
    }
    let w = |e: std::io::Error| DuioError::Invalid(e.to_string());
    let last = traj.len() - 1;
    writeln!(out, "t = {:.4} s", traj.times[last]).map_err(w)?;
    for i in 0..traj.n_nodes() {
        writeln!(out, "node {}: final error norm {:.6e}", i + 1, traj.error(last, i).norm()).map_err(w)?;
    }
    if traj.max_unknown_input > desc.u_bar_max {
        writeln!(
            out,
            "note: unknown inputs reached {:.4}, above the declared bound {:.4}",
            traj.max_unknown_input, desc.u_bar_max
        )
        .map_err(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlatoonFlags {
    pub published_gains: bool,
    pub graph: Option<GraphChoice>,
    pub out_dir: Option<PathBuf>,
    pub t_end: Option<f64>,
}

/// Runs the case study and prints its report; `Ok(false)` when a check fails.
pub fn cmd_platoon(flags: &PlatoonFlags, out: &mut dyn Write) -> Result<bool> {
    let mut ov = CaseOverrides {
        published_gains: flags.published_gains,
        output_dir: flags.out_dir.clone(),
        ..CaseOverrides::default()
    };
    if let Some(g) = flags.graph {
        ov.graph = g;
    }
    if let Some(t) = flags.t_end {
        ov.config.t_end = t;
    }
    ov.tol = tolerances_from_env()?;
    let study = run_case_study(&ov)?;
    write!(out, "{}", study.report).map_err(|e| DuioError::Invalid(e.to_string()))?;
    Ok(study.report.all_passed())
}
