//! The four-vehicle platoon: plant, predecessor-following control law and
//! the end-to-end reproduction scenario with its acceptance checks.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use crate::error::{DuioError, Result};
use crate::matlin::{eigvals, kron, spectrum_distance, Mat, Tolerances, Vector};
use crate::netgraph::Graph;
use crate::plot;
use crate::sim::{
    decoupling_mismatch, lyapunov_series, max_rise_after, simulate, transform_errors, ControlContext,
    Controller, SimConfig, Signals, Trajectory,
};
use crate::synthesis::{
    check_joint_condition, check_rank_condition, synthesize, DuioDesign, NodeSpec, SynthesisOptions,
};

/// Coupling gains reported for the published platoon design.
pub const PUBLISHED_CHI: f64 = 82.3039;
pub const PUBLISHED_GAMMA: f64 = 383.1159;

/// States per vehicle: position, velocity, acceleration.
/// States per vehicle: position, velocity, acceleration.
pub const STATES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonParams {
    pub n_vehicles: usize,
    /// Inertial lag of the longitudinal dynamics, seconds.
    pub tau: f64,
    pub k_s: f64,
    pub k_v: f64,
    pub k_a: f64,
    /// Desired gap between neighbours, meters.
    pub d_gap: f64,
    /// Initial `(s, v, a)` triples, leader first.
    pub x0: Vec<f64>,
}

impl Default for PlatoonParams {
    fn default() -> Self {
        PlatoonParams {
            n_vehicles: 4,
            tau: 0.07,
            k_s: 3.5,
            k_v: 4.0,
            k_a: 1.0,
            d_gap: 20.0,
            x0: vec![
                150.0, 22.0, 0.0, 120.0, 21.0, 1.1, 90.0, 21.5, 0.6, 60.0, 20.0, 1.3,
            ],
        }
    }
}

impl PlatoonParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_vehicles == 0 {
            return Err(DuioError::Invalid("platoon needs at least one vehicle".into()));
        }
        if !(self.tau > 0.0) {
            return Err(DuioError::Invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.d_gap > 0.0) {
            return Err(DuioError::Invalid(format!(
                "desired gap must be positive, got {}",
                self.d_gap
            )));
        }
        if self.x0.len() != STATES * self.n_vehicles {
            return Err(DuioError::DimensionMismatch {
                op: "platoon initial state",
                expected: STATES * self.n_vehicles,
                got: self.x0.len(),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        STATES * self.n_vehicles
    }

    /// `d_ij = (i - j) d`, the telescoped gap between vehicles `i` and `j`.
    pub fn desired_distance(&self, i: usize, j: usize) -> f64 {
        (i as f64 - j as f64) * self.d_gap
    }
}

/// Leader acceleration command `A sin(ω t)`, clipped to `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderProfile {
    pub amplitude: f64,
    pub omega: f64,
    pub bound: f64,
}

impl Default for LeaderProfile {
    fn default() -> Self {
        LeaderProfile {
            amplitude: 1.5,
            omega: 0.5,
            bound: 2.0,
        }
    }
}

impl LeaderProfile {
    pub fn input(&self, t: f64) -> f64 {
        (self.amplitude * (self.omega * t).sin()).clamp(-self.bound, self.bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphChoice {
    #[default]
    Path,
    Complete,
}

impl std::str::FromStr for GraphChoice {
    type Err = DuioError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(GraphChoice::Path),
            "complete" => Ok(GraphChoice::Complete),
            other => Err(DuioError::Invalid(format!(
                "unknown graph `{other}` (expected path or complete)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Platoon {
    pub a: Mat,
    pub b: Mat,
    pub nodes: Vec<NodeSpec>,
    pub graph: Graph,
}

/// Vehicle `i` carries node `i`, which measures its own position and
/// velocity and knows only its own input.
pub fn build_platoon(params: &PlatoonParams, graph: GraphChoice) -> Result<Platoon> {
    params.validate()?;
    let nv = params.n_vehicles;
    let n = params.n();
    let block = Mat::from_row_slice(
        3,
        3,
        &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0 / params.tau],
    );
    let a = kron(&Mat::identity(nv, nv), &block);
    let mut b = Mat::zeros(n, nv);
    for i in 0..nv {
        b[(STATES * i + 2, i)] = 1.0 / params.tau;
    }
    let nodes = (0..nv)
        .map(|i| {
            let mut c = Mat::zeros(2, n);
            c[(0, STATES * i)] = 1.0;
            c[(1, STATES * i + 1)] = 1.0;
            NodeSpec::new(i, c, &b, vec![i])
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = match graph {
        GraphChoice::Path => Graph::path(nv),
        GraphChoice::Complete => Graph::complete(nv),
    };
    Ok(Platoon { a, b, nodes, graph })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlLaw {
    /// Every follower uses its own node's estimates and input reconstruction.
    Estimated,
    /// Classic predecessor following with true states and inputs.
    Ideal,
}

#[derive(Debug, Clone)]
pub struct PlatoonController {
    pub params: PlatoonParams,
    pub leader: LeaderProfile,
    pub law: ControlLaw,
    /// Time constant of the low-pass filter on the predecessor input
    /// reconstruction; zero feeds the raw switching signal through.
    pub input_filter: f64,
    filtered: Vec<f64>,
    last_t: Option<f64>,
}

impl PlatoonController {
    pub fn new(params: PlatoonParams, leader: LeaderProfile, law: ControlLaw, input_filter: f64) -> Self {
        let nv = params.n_vehicles;
        PlatoonController {
            params,
            leader,
            law,
            input_filter,
            filtered: vec![0.0; nv],
            last_t: None,
        }
    }

    /// Advance the filtered predecessor inputs to time `t`.
    fn filter_inputs(&mut self, ctx: &ControlContext<'_>) {
        let raw: Vec<f64> = (0..self.params.n_vehicles)
            .map(|i| {
                if i == 0 {
                    return 0.0;
                }
                let spec = &ctx.design.nodes[i].spec;
                let pred = spec
                    .unknown
                    .iter()
                    .position(|&c| c == i - 1)
                    .expect("predecessor input is unknown to a follower");
                ctx.input_estimates[i][pred]
            })
            .collect();
        match self.last_t {
            Some(t0) if self.input_filter > 0.0 => {
                let alpha = 1.0 - (-(ctx.t - t0) / self.input_filter).exp();
                for (f, r) in self.filtered.iter_mut().zip(&raw) {
                    *f += alpha * (r - *f);
                }
            }
            Some(_) => self.filtered = raw,
            // The reconstruction starts from an arbitrary disagreement, so the
            // filter starts from zero rather than from its first sample.
            None if self.input_filter > 0.0 => {}
            None => self.filtered = raw,
        }
        self.last_t = Some(ctx.t);
    }

    fn estimated(&mut self, ctx: &ControlContext<'_>) -> Vector {
        self.filter_inputs(ctx);
        let p = &self.params;
        let mut u = Vector::zeros(p.n_vehicles);
        u[0] = self.leader.input(ctx.t);
        for i in 1..p.n_vehicles {
            let est = &ctx.estimates[i];
            let y = &ctx.outputs[i];
            let (s_i, v_i) = (y[0], y[1]);
            let a_i = est[STATES * i + 2];
            let mut ui = self.filtered[i];
            for j in 0..i {
                ui += p.k_s * (est[STATES * j] - s_i - p.desired_distance(i, j))
                    + p.k_v * (est[STATES * j + 1] - v_i)
                    + p.k_a * (est[STATES * j + 2] - a_i);
            }
            u[i] = ui;
        }
        u
    }

    fn ideal(&self, ctx: &ControlContext<'_>) -> Vector {
        let p = &self.params;
        let x = ctx.plant_state;
        let mut u = Vector::zeros(p.n_vehicles);
        u[0] = self.leader.input(ctx.t);
        for i in 1..p.n_vehicles {
            let (pi, pj) = (STATES * i, STATES * (i - 1));
            u[i] = u[i - 1]
                + p.k_s * (x[pj] - x[pi] - p.d_gap)
                + p.k_v * (x[pj + 1] - x[pi + 1])
                + p.k_a * (x[pj + 2] - x[pi + 2]);
        }
        u
    }
}

impl Controller for PlatoonController {
    fn control(&mut self, ctx: &ControlContext<'_>) -> Vector {
        match self.law {
            ControlLaw::Estimated => self.estimated(ctx),
            ControlLaw::Ideal => self.ideal(ctx),
        }
    }
}

/// Deterministic initial estimates: node `i` starts from `x(0)` with vehicle `j`
/// shifted by `scale (-1)^(i+j) (10 m, 2 m/s, 1 m/s²)`, so neighbouring nodes
/// start out disagreeing.
pub fn initial_estimates(params: &PlatoonParams, scale: f64) -> Vec<Vector> {
    let x0 = Vector::from_column_slice(&params.x0);
    let per_vehicle = [10.0, 2.0, 1.0];
    (0..params.n_vehicles)
        .map(|i| {
            let offset = Vector::from_fn(params.n(), |k, _| {
                let sign = if (i + k / STATES).is_multiple_of(2) { 1.0 } else { -1.0 };
                scale * sign * per_vehicle[k % STATES]
            });
            &x0 + offset
        })
        .collect()
}

/// `max(0.05, 0.02 ‖e(0)‖)`, the level at which an estimation error counts as zero.
pub fn convergence_threshold(initial_error: f64) -> f64 {
    (0.02 * initial_error).max(0.05)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOverrides {
    pub params: PlatoonParams,
    pub leader: LeaderProfile,
    pub graph: GraphChoice,
    /// Substitute the published coupling gains for the synthesized ones.
    pub published_gains: bool,
    /// Replace the gains by this fraction of their lower bounds.
    pub bound_fraction: Option<f64>,
    /// Declared bound on every unknown input.
    pub u_bar_max: f64,
    /// Placement targets for each node's quotient modes.
    pub pole_targets: Vec<f64>,
    /// Multiplier on the initial estimate offsets; zero starts every node at `x(0)`.
    pub estimate_offset: f64,
    /// Low-pass time constant on the input reconstruction used by the followers.
    pub input_filter: f64,
    pub config: SimConfig,
    /// Also run the full-information law for the spacing comparison.
    pub compare_ideal: bool,
    /// Where to write `report.txt`, `trajectory.csv` and `platoon.svg`.
    pub output_dir: Option<PathBuf>,
    pub tol: Tolerances,
}

impl Default for CaseOverrides {
    fn default() -> Self {
        CaseOverrides {
            params: PlatoonParams::default(),
            leader: LeaderProfile::default(),
            graph: GraphChoice::Path,
            published_gains: false,
            bound_fraction: None,
            u_bar_max: DEFAULT_U_BAR_MAX,
            pole_targets: DEFAULT_POLE_TARGETS.to_vec(),
            estimate_offset: 1.0,
            input_filter: DEFAULT_INPUT_FILTER,
            config: SimConfig::default(),
            compare_ideal: true,
            output_dir: None,
            tol: Tolerances::default(),
        }
    }
}

/// Unknown-input bound used for the platoon design. Each node treats the other
/// vehicles' commands as unknown, so the bound has to cover follower commands,
/// not just the leader profile.
pub const DEFAULT_U_BAR_MAX: f64 = 25.0;
/// No smoothing: the controller uses the input estimate as reconstructed.
pub const DEFAULT_INPUT_FILTER: f64 = 0.0;
/// Closed-loop poles placed on each node's quotient (own vehicle) dynamics.
pub const DEFAULT_POLE_TARGETS: [f64; 3] = [-20.0, -22.0, -24.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseReport {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl CaseReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, measured: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            measured,
        });
    }
}

impl fmt::Display for CaseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.measured)?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Measured quantities behind the report, for callers that want numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseMetrics {
    pub initial_errors: Vec<f64>,
    /// Worst `‖e_i(t)‖` over `t ∈ [0.5, t_end]`.
    pub late_errors: Vec<f64>,
    pub max_spacing_deviation: f64,
    pub max_velocity_deviation: f64,
    pub decoupling_mismatch: f64,
    pub lyapunov_rise: f64,
    pub ideal_final_spacing: Option<Vec<f64>>,
    pub final_spacing: Vec<f64>,
}

impl CaseMetrics {
    pub fn estimation_converged(&self) -> bool {
        self.late_errors
            .iter()
            .zip(&self.initial_errors)
            .all(|(late, e0)| *late <= convergence_threshold(*e0))
    }
}

#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub design: DuioDesign,
    pub trajectory: Trajectory,
    pub metrics: CaseMetrics,
    pub report: CaseReport,
}

/// Start of the window in which estimation errors must stay small.
pub const CONVERGENCE_TIME: f64 = 0.5;
/// Start of the window for the spacing and velocity objectives.
pub const TRACKING_TIME: f64 = 4.0;
pub const SPACING_TOLERANCE: f64 = 0.5;
pub const VELOCITY_TOLERANCE: f64 = 0.2;
pub const DECOUPLING_TOLERANCE: f64 = 1e-3;
pub const LYAPUNOV_SKIP: f64 = 0.01;
pub const LYAPUNOV_BAND: f64 = 1e-3;

/// Synthesize the platoon observers with the case-study options.
pub fn design_platoon(ov: &CaseOverrides) -> Result<(Platoon, DuioDesign)> {
    let platoon = build_platoon(&ov.params, ov.graph)?;
    let opts = SynthesisOptions {
        pole_targets: vec![Some(ov.pole_targets.clone()); platoon.nodes.len()],
        tol: ov.tol,
        ..SynthesisOptions::default()
    };
    let mut design = synthesize(
        &platoon.a,
        &platoon.b,
        &platoon.nodes,
        &platoon.graph,
        ov.u_bar_max,
        &opts,
    )?;
    if ov.published_gains {
        design = design.with_gains(PUBLISHED_CHI, PUBLISHED_GAMMA);
    }
    if let Some(frac) = ov.bound_fraction {
        let (chi, gamma) = (design.bounds.chi * frac, design.bounds.gamma * frac);
        design = design.with_gains(chi, gamma);
    }
    Ok((platoon, design))
}

/// Closed-loop platoon run from the case-study initial conditions.
pub fn simulate_platoon(
    ov: &CaseOverrides,
    design: &DuioDesign,
    law: ControlLaw,
) -> Result<Trajectory> {
    let x0 = Vector::from_column_slice(&ov.params.x0);
    let xhat0 = initial_estimates(&ov.params, ov.estimate_offset);
    let mut controller = PlatoonController::new(ov.params.clone(), ov.leader, law, ov.input_filter);
    let signals = Signals::zero(ov.params.n_vehicles);
    simulate(design, &x0, &xhat0, &signals, &ov.config, Some(&mut controller))
}

/// `s_{i-1} - s_i` for every follower at sample `k`.
fn spacings(traj: &Trajectory, k: usize, nv: usize) -> Vec<f64> {
    (1..nv)
        .map(|i| traj.x[k][STATES * (i - 1)] - traj.x[k][STATES * i])
        .collect()
}

fn spectral_check(design: &DuioDesign) -> Result<(f64, f64)> {
    let mut worst_re = f64::NEG_INFINITY;
    let mut worst_split: f64 = 0.0;
    for d in &design.nodes {
        let full = eigvals(&d.closed_loop)?;
        let mut parts = eigvals(&d.restricted)?;
        let induced = eigvals(&d.induced)?;
        worst_re = induced.iter().map(|z| z.re).fold(worst_re, f64::max);
        parts.extend(induced);
        worst_split = worst_split.max(spectrum_distance(&full, &parts));
    }
    Ok((worst_re, worst_split))
}

/// Convergence and tracking measurements of a platoon run.
pub fn measure(ov: &CaseOverrides, design: &DuioDesign, traj: &Trajectory) -> CaseMetrics {
    let nv = ov.params.n_vehicles;
    let initial_errors: Vec<f64> = (0..design.n_nodes())
        .map(|i| traj.error(0, i).norm())
        .collect();
    let mut late_errors = vec![0.0_f64; design.n_nodes()];
    let mut max_spacing_deviation: f64 = 0.0;
    let mut max_velocity_deviation: f64 = 0.0;
    for (k, &t) in traj.times.iter().enumerate() {
        if t + 1e-12 >= CONVERGENCE_TIME {
            for (i, late) in late_errors.iter_mut().enumerate() {
                *late = late.max(traj.error(k, i).norm());
            }
        }
        if t + 1e-12 >= TRACKING_TIME {
            for s in spacings(traj, k, nv) {
                max_spacing_deviation = max_spacing_deviation.max((s - ov.params.d_gap).abs());
            }
            let v_lead = traj.x[k][1];
            for i in 1..nv {
                max_velocity_deviation =
                    max_velocity_deviation.max((traj.x[k][STATES * i + 1] - v_lead).abs());
            }
        }
    }
    let coords = transform_errors(design, traj);
    let v = lyapunov_series(design, &coords.eps_a);
    CaseMetrics {
        initial_errors,
        late_errors,
        max_spacing_deviation,
        max_velocity_deviation,
        decoupling_mismatch: decoupling_mismatch(design, traj, &coords),
        lyapunov_rise: max_rise_after(&traj.times, &v, LYAPUNOV_SKIP),
        ideal_final_spacing: None,
        final_spacing: spacings(traj, traj.len() - 1, nv),
    }
}

/// Build, synthesize, simulate and check the platoon scenario.
pub fn run_case_study(ov: &CaseOverrides) -> Result<CaseStudy> {
    let (platoon, design) = design_platoon(ov)?;
    let traj = simulate_platoon(ov, &design, ControlLaw::Estimated)?;
    let mut metrics = measure(ov, &design, &traj);
    if ov.compare_ideal {
        let ideal = simulate_platoon(ov, &design, ControlLaw::Ideal)?;
        metrics.ideal_final_spacing = Some(spacings(&ideal, ideal.len() - 1, ov.params.n_vehicles));
    }

    let tol = ov.tol;
    let mut report = CaseReport::default();
    let errs: Vec<String> = metrics
        .late_errors
        .iter()
        .zip(&metrics.initial_errors)
        .map(|(l, e0)| format!("{l:.4}/{:.4}", convergence_threshold(*e0)))
        .collect();
    report.push(
        "estimation convergence after 0.5 s",
        metrics.estimation_converged(),
        format!("worst error/threshold per node [{}]", errs.join(", ")),
    );
    report.push(
        "spacing within 20 +/- 0.5 m after 4 s",
        metrics.max_spacing_deviation <= SPACING_TOLERANCE,
        format!("max deviation {:.4} m", metrics.max_spacing_deviation),
    );
    report.push(
        "follower velocity within 0.2 m/s of leader after 4 s",
        metrics.max_velocity_deviation <= VELOCITY_TOLERANCE,
        format!("max deviation {:.4} m/s", metrics.max_velocity_deviation),
    );
    let rank_fails = platoon
        .nodes
        .iter()
        .filter(|s| !check_rank_condition(s, &tol))
        .count();
    report.push(
        "rank condition fails at every node",
        rank_fails == platoon.nodes.len(),
        format!("{rank_fails} of {} nodes fail", platoon.nodes.len()),
    );
    let joint = check_joint_condition(&design.nodes, &tol)?;
    report.push("joint condition holds", joint, format!("{joint}"));
    let (worst_re, worst_split) = spectral_check(&design)?;
    report.push(
        "quotient spectra in the good region",
        worst_re < -design.region.margin() && worst_split <= 1e-6,
        format!("max real part {worst_re:.4}, split mismatch {worst_split:.2e}"),
    );
    report.push(
        "quotient error decoupling",
        metrics.decoupling_mismatch <= DECOUPLING_TOLERANCE,
        format!("max mismatch {:.3e}", metrics.decoupling_mismatch),
    );
    report.push(
        "Lyapunov function non-increasing after 10 ms",
        metrics.lyapunov_rise <= LYAPUNOV_BAND,
        format!("max rise above running minimum {:.3e}", metrics.lyapunov_rise),
    );
    if let Some(ideal) = &metrics.ideal_final_spacing {
        let diff = ideal
            .iter()
            .zip(&metrics.final_spacing)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.push(
            "same equilibrium spacing as the full-information law",
            diff <= SPACING_TOLERANCE,
            format!("max final spacing difference {diff:.4} m"),
        );
    }
    report.notes.push(format!(
        "gains chi = {:.4}, gamma = {:.4} (bounds {:.4}, {:.4})",
        design.chi, design.gamma, design.bounds.chi, design.bounds.gamma
    ));
    report.notes.push(format!(
        "declared unknown-input bound {:.3}, largest unknown input seen {:.3}",
        design.u_bar_max, traj.max_unknown_input
    ));
    report
        .notes
        .push("input matrix uses +1/tau, the sign of the acceleration dynamics".into());

    if let Some(dir) = &ov.output_dir {
        write_artifacts(dir, &ov.params, &traj, &report)?;
    }
    Ok(CaseStudy {
        design,
        trajectory: traj,
        metrics,
        report,
    })
}

fn io_err(e: std::io::Error) -> DuioError {
    DuioError::Invalid(format!("cannot write case-study output: {e}"))
}

fn write_artifacts(dir: &PathBuf, params: &PlatoonParams, traj: &Trajectory, report: &CaseReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err)?;
    fs::write(dir.join("report.txt"), report.to_string()).map_err(io_err)?;
    let csv = fs::File::create(dir.join("trajectory.csv")).map_err(io_err)?;
    traj.write_csv(std::io::BufWriter::new(csv)).map_err(io_err)?;
    fs::write(dir.join("platoon.svg"), platoon_svg(params, traj)).map_err(io_err)?;
    Ok(())
}

/// Error norms, velocities and spacings, one panel each.
pub fn platoon_svg(params: &PlatoonParams, traj: &Trajectory) -> String {
    let nv = params.n_vehicles;
    let errors: Vec<plot::Series> = (0..traj.n_nodes())
        .map(|i| plot::Series::new(format!("node {}", i + 1), traj.error_norms(i)))
        .collect();
    let velocities: Vec<plot::Series> = (0..nv)
        .map(|i| {
            plot::Series::new(
                format!("v{}", i + 1),
                traj.x.iter().map(|x| x[STATES * i + 1]).collect(),
            )
        })
        .collect();
    let gaps: Vec<plot::Series> = (1..nv)
        .map(|i| {
            plot::Series::new(
                format!("s{} - s{}", i, i + 1),
                (0..traj.len()).map(|k| spacings(traj, k, nv)[i - 1]).collect(),
            )
        })
        .collect();
    plot::render(
        &traj.times,
        &[
            plot::Panel::new("estimation error norm", errors),
            plot::Panel::new("velocity (m/s)", velocities),
            plot::Panel::new("inter-vehicle distance (m)", gaps),
        ],
    )
}
