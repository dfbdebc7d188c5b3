//! Fixed-step simulation of the plant together with every node observer,
//! plus the error-coordinate diagnostics used to check the design.

use std::io::Write;

use crate::error::{DuioError, Result};
use crate::matlin::{pinv, Mat, Tolerances, Vector};
use crate::synthesis::DuioDesign;

/// States larger than this abort the run.
pub const BLOWUP_NORM: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl Integrator {
    pub fn order(&self) -> i32 {
        match self {
            Integrator::Euler => 1,
            Integrator::Rk4 => 4,
        }
    }
}

impl std::str::FromStr for Integrator {
    type Err = DuioError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(DuioError::Invalid(format!(
                "unknown integrator `{other}` (expected euler or rk4)"
            ))),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    /// Width of the saturation replacing `sign`; zero means the hard sign.
    pub boundary_layer: f64,
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-4,
            t_end: 5.0,
            integrator: Integrator::Rk4,
            boundary_layer: 1e-3,
            record_stride: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DuioError::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(DuioError::Invalid(format!(
                "t_end must be at least dt, got t_end = {} and dt = {}",
                self.t_end, self.dt
            )));
        }
        if !(self.boundary_layer >= 0.0 && self.boundary_layer.is_finite()) {
            return Err(DuioError::Invalid(format!(
                "boundary layer must be nonnegative, got {}",
                self.boundary_layer
            )));
        }
        if self.boundary_layer == 0.0 && self.dt >= 1e-3 {
            return Err(DuioError::Invalid(format!(
                "the hard sign function needs dt < 1e-3, got {}",
                self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(DuioError::Invalid("record stride must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn switching(&self) -> Switching {
        Switching {
            boundary_layer: self.boundary_layer,
        }
    }
}

/// Component-wise switching function: `sign` with `sign(0) = 0`, or the
/// saturation `clamp(s / ε, -1, 1)` when a boundary layer is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switching {
    pub boundary_layer: f64,
}

impl Switching {
    pub fn hard() -> Self {
        Switching { boundary_layer: 0.0 }
    }

    pub fn scalar(&self, s: f64) -> f64 {
        if self.boundary_layer > 0.0 {
            (s / self.boundary_layer).clamp(-1.0, 1.0)
        } else if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        v.map(|s| self.scalar(s))
    }
}

/// Open-loop plant input `u(t)` and the declared bound on the unknown parts.
pub struct Signals {
    input: Box<dyn Fn(f64) -> Vector + Send + Sync>,
    pub declared_bound: f64,
}

impl Signals {
    pub fn new(input: impl Fn(f64) -> Vector + Send + Sync + 'static, declared_bound: f64) -> Self {
        Signals {
            input: Box::new(input),
            declared_bound,
        }
    }

    pub fn zero(m: usize) -> Self {
        Signals::new(move |_| Vector::zeros(m), 0.0)
    }

    pub fn input(&self, t: f64) -> Vector {
        (self.input)(t)
    }
}

/// What a controller sees at a sampling instant.
pub struct ControlContext<'a> {
    pub t: f64,
    pub design: &'a DuioDesign,
    /// True plant state; only full-information reference laws should read it.
    pub plant_state: &'a Vector,
    /// `y_i = C_i x` for every node.
    pub outputs: &'a [Vector],
    pub estimates: &'a [Vector],
    /// Unknown-input reconstructions, ordered like each node's unknown columns.
    pub input_estimates: &'a [Vector],
}

/// Closed-loop input law, evaluated once per step and held over it.
pub trait Controller {
    fn control(&mut self, ctx: &ControlContext<'_>) -> Vector;
}

/// Recorded samples of one run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vector>,
    /// `xhat[k][i]`: estimate of node `i` at sample `k`.
    pub xhat: Vec<Vec<Vector>>,
    /// `uhat_bar[k][i]`: unknown-input reconstruction of node `i`.
    pub uhat_bar: Vec<Vec<Vector>>,
    /// Plant input applied over the step starting at each sample.
    pub inputs: Vec<Vector>,
    /// Largest `|ū_i|` seen by any node over the run.
    pub max_unknown_input: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.xhat.first().map_or(0, |v| v.len())
    }

    /// `e_i = x - x̂_i` at sample `k`.
    pub fn error(&self, k: usize, node: usize) -> Vector {
        &self.x[k] - &self.xhat[k][node]
    }

    pub fn error_norms(&self, node: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.error(k, node).norm()).collect()
    }

    /// Stacked `col(e_1, ..., e_N)`.
    pub fn stacked_error(&self, k: usize) -> Vector {
        let n = self.x[k].len();
        let nodes = self.n_nodes();
        let mut e = Vector::zeros(n * nodes);
        for i in 0..nodes {
            e.rows_mut(i * n, n).copy_from(&self.error(k, i));
        }
        e
    }

    /// CSV with columns `time, x1..xn`, then per node `xhat{i}_1..n, err_norm_{i},
    /// uhat_bar_{i}_1..`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        let n = self.x[0].len();
        let mut header = vec!["time".to_string()];
        header.extend((1..=n).map(|k| format!("x{k}")));
        for i in 1..=self.n_nodes() {
            header.extend((1..=n).map(|k| format!("xhat{i}_{k}")));
            header.push(format!("err_norm_{i}"));
            header.extend((1..=self.uhat_bar[0][i - 1].len()).map(|k| format!("uhat_bar_{i}_{k}")));
        }
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            push_num(&mut line, self.times[k]);
            for v in self.x[k].iter() {
                line.push(',');
                push_num(&mut line, *v);
            }
            for i in 0..self.n_nodes() {
                for v in self.xhat[k][i].iter() {
                    line.push(',');
                    push_num(&mut line, *v);
                }
                line.push(',');
                push_num(&mut line, self.error(k, i).norm());
                for v in self.uhat_bar[k][i].iter() {
                    line.push(',');
                    push_num(&mut line, *v);
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn push_num(s: &mut String, v: f64) {
    use std::fmt::Write as _;
    write!(s, "{v:.12e}").expect("writing to a String");
}

/// Node matrices needed at every right-hand-side evaluation.
struct NodeKernel {
    closed_loop: Mat,
    injection: Mat,
    c: Mat,
    b_known: Mat,
    known: Vec<usize>,
    unknown: Vec<usize>,
    w: Mat,
    wt: Mat,
    /// `B̄_i† W_i`
    recon: Mat,
}

/// Precomputed observer network, the thing the integrator actually evaluates.
pub struct ObserverNetwork<'a> {
    design: &'a DuioDesign,
    kernels: Vec<NodeKernel>,
    switching: Switching,
}

impl<'a> ObserverNetwork<'a> {
    pub fn new(design: &'a DuioDesign, switching: Switching) -> Self {
        let tol = Tolerances::default();
        let kernels = design
            .nodes
            .iter()
            .map(|d| NodeKernel {
                closed_loop: d.closed_loop.clone(),
                injection: d.injection.clone(),
                c: d.spec.c.clone(),
                b_known: d.spec.b_known.clone(),
                known: d.spec.known.clone(),
                unknown: d.spec.unknown.clone(),
                w: d.insertion.clone(),
                wt: d.insertion.transpose(),
                recon: pinv(&d.spec.b_unknown, &tol) * &d.insertion,
            })
            .collect();
        ObserverNetwork {
            design,
            kernels,
            switching,
        }
    }

    /// `Σ_j a_ij (x̂_j - x̂_i)`
    fn disagreement(&self, i: usize, xhat: &[Vector]) -> Vector {
        let mut s = Vector::zeros(xhat[i].len());
        for j in self.design.graph.neighbors(i) {
            s += &xhat[j] - &xhat[i];
        }
        s
    }

    /// Time derivative of node `i`'s estimate.
    pub fn rhs(&self, i: usize, xhat: &[Vector], y: &Vector, u: &Vector) -> Vector {
        let k = &self.kernels[i];
        let mut d = &k.closed_loop * &xhat[i] - &k.injection * y;
        if !k.known.is_empty() {
            d += &k.b_known * u.select_rows(&k.known);
        }
        if k.w.ncols() > 0 {
            let ws = &k.wt * self.disagreement(i, xhat);
            let chi = self.design.chi;
            let gamma = self.design.gamma;
            d += &k.w * (ws.scale(chi) + self.switching.apply(&ws).scale(gamma));
        }
        d
    }

    /// `γ B̄_i† W_i switch(W_iᵀ Σ_j a_ij (x̂_j - x̂_i))`
    pub fn unknown_input_estimate(&self, i: usize, xhat: &[Vector]) -> Vector {
        let k = &self.kernels[i];
        if k.unknown.is_empty() || k.w.ncols() == 0 {
            return Vector::zeros(k.unknown.len());
        }
        let ws = &k.wt * self.disagreement(i, xhat);
        (&k.recon * self.switching.apply(&ws)).scale(self.design.gamma)
    }

    pub fn outputs(&self, x: &Vector) -> Vec<Vector> {
        self.kernels.iter().map(|k| &k.c * x).collect()
    }

    fn derivative(&self, x: &Vector, xhat: &[Vector], u: &Vector) -> (Vector, Vec<Vector>) {
        let dx = &self.design.a * x + &self.design.b * u;
        let dxhat = (0..self.kernels.len())
            .map(|i| self.rhs(i, xhat, &(&self.kernels[i].c * x), u))
            .collect();
        (dx, dxhat)
    }
}

/// Node `i`'s observer right-hand side with the given switching function.
pub fn observer_rhs(
    design: &DuioDesign,
    node: usize,
    xhat: &[Vector],
    y: &Vector,
    u: &Vector,
    switching: Switching,
) -> Vector {
    ObserverNetwork::new(design, switching).rhs(node, xhat, y, u)
}

/// Unknown-input reconstruction at node `i`.
pub fn estimate_unknown_input(
    design: &DuioDesign,
    node: usize,
    xhat: &[Vector],
    switching: Switching,
) -> Vector {
    ObserverNetwork::new(design, switching).unknown_input_estimate(node, xhat)
}

fn axpy_state(x: &Vector, xhat: &[Vector], h: f64, dx: &Vector, dxhat: &[Vector]) -> (Vector, Vec<Vector>) {
    (
        x + dx.scale(h),
        xhat.iter().zip(dxhat).map(|(a, b)| a + b.scale(h)).collect(),
    )
}

fn state_norm(x: &Vector, xhat: &[Vector]) -> f64 {
    xhat.iter()
        .map(|v| v.amax())
        .fold(x.amax(), f64::max)
}

/// Integrate plant and observers together.
///
/// With a controller the input is computed at the start of each step and held
/// over it; otherwise `signals` is evaluated wherever the integrator needs it.
pub fn simulate(
    design: &DuioDesign,
    plant_init: &Vector,
    estimates_init: &[Vector],
    signals: &Signals,
    config: &SimConfig,
    mut controller: Option<&mut dyn Controller>,
) -> Result<Trajectory> {
    config.validate()?;
    let n = design.n();
    if plant_init.len() != n {
        return Err(DuioError::DimensionMismatch {
            op: "simulate (plant init)",
            expected: n,
            got: plant_init.len(),
        });
    }
    if estimates_init.len() != design.n_nodes() || estimates_init.iter().any(|v| v.len() != n) {
        return Err(DuioError::Invalid(format!(
            "expected {} initial estimates of length {n}",
            design.n_nodes()
        )));
    }
    let net = ObserverNetwork::new(design, config.switching());
    let m = design.b.ncols();
    let dt = config.dt;
    let steps = config.steps();

    let mut x = plant_init.clone();
    let mut xhat: Vec<Vector> = estimates_init.to_vec();
    let mut traj = Trajectory::default();
    let reconstruct = |xh: &[Vector]| -> Vec<Vector> {
        (0..design.n_nodes())
            .map(|i| net.unknown_input_estimate(i, xh))
            .collect()
    };
    // Input estimate the integrator actually applied over the previous step.
    let mut uhat = reconstruct(&xhat);

    for k in 0..=steps {
        let t = k as f64 * dt;
        let u = match controller.as_deref_mut() {
            Some(c) => {
                let outputs = net.outputs(&x);
                c.control(&ControlContext {
                    t,
                    design,
                    plant_state: &x,
                    outputs: &outputs,
                    estimates: &xhat,
                    input_estimates: &uhat,
                })
            }
            None => signals.input(t),
        };
        if u.len() != m {
            return Err(DuioError::DimensionMismatch {
                op: "simulate (input)",
                expected: m,
                got: u.len(),
            });
        }
        for d in &design.nodes {
            for &j in &d.spec.unknown {
                traj.max_unknown_input = traj.max_unknown_input.max(u[j].abs());
            }
        }
        if k % config.record_stride == 0 {
            traj.times.push(t);
            traj.x.push(x.clone());
            traj.xhat.push(xhat.clone());
            traj.uhat_bar.push(uhat.clone());
            traj.inputs.push(u.clone());
        }
        if k == steps {
            break;
        }

        let held = controller.is_some();
        let input_at = |s: f64| if held { u.clone() } else { signals.input(s) };
        (x, xhat) = match config.integrator {
            Integrator::Euler => {
                let (dx, dxh) = net.derivative(&x, &xhat, &u);
                uhat = reconstruct(&xhat);
                axpy_state(&x, &xhat, dt, &dx, &dxh)
            }
            Integrator::Rk4 => {
                let u_mid = input_at(t + 0.5 * dt);
                let u_end = input_at(t + dt);
                let (k1x, k1h) = net.derivative(&x, &xhat, &u);
                let (x2, h2) = axpy_state(&x, &xhat, 0.5 * dt, &k1x, &k1h);
                let (k2x, k2h) = net.derivative(&x2, &h2, &u_mid);
                let (x3, h3) = axpy_state(&x, &xhat, 0.5 * dt, &k2x, &k2h);
                let (k3x, k3h) = net.derivative(&x3, &h3, &u_mid);
                let (x4, h4) = axpy_state(&x, &xhat, dt, &k3x, &k3h);
                let (k4x, k4h) = net.derivative(&x4, &h4, &u_end);
                let comb = |a: &Vector, b: &Vector, c: &Vector, d: &Vector| {
                    (a + b.scale(2.0) + c.scale(2.0) + d).scale(dt / 6.0)
                };
                // A discontinuous switching term can flip sign between stages, so the
                // reconstruction at the grid point alone is not what drove the step.
                let stages = [reconstruct(&xhat), reconstruct(&h2), reconstruct(&h3), reconstruct(&h4)];
                uhat = (0..design.n_nodes())
                    .map(|i| comb(&stages[0][i], &stages[1][i], &stages[2][i], &stages[3][i]).unscale(dt))
                    .collect();
                let nx = &x + comb(&k1x, &k2x, &k3x, &k4x);
                let nh = (0..xhat.len())
                    .map(|i| &xhat[i] + comb(&k1h[i], &k2h[i], &k3h[i], &k4h[i]))
                    .collect();
                (nx, nh)
            }
        };
        let norm = state_norm(&x, &xhat);
        if !norm.is_finite() || norm > BLOWUP_NORM {
            return Err(DuioError::NumericalBlowup {
                t: t + dt,
                norm,
            });
        }
    }
    Ok(traj)
}

/// Error in the coordinates `ε = Tᵀ e`, `T = [W_g  M]`.
#[derive(Debug, Clone)]
pub struct ErrorCoordinates {
    /// Components along `⊕ W*_g,i`.
    pub eps_a: Vec<Vector>,
    /// Components along the quotients.
    pub eps_b: Vec<Vector>,
}

pub fn transform_errors(design: &DuioDesign, traj: &Trajectory) -> ErrorCoordinates {
    let wg_t = design.stacked_insertion().transpose();
    let m_t = design.stacked_complement().transpose();
    let (eps_a, eps_b) = (0..traj.len())
        .map(|k| {
            let e = traj.stacked_error(k);
            (&wg_t * &e, &m_t * &e)
        })
        .unzip();
    ErrorCoordinates { eps_a, eps_b }
}

/// `V(ε_a) = ε_aᵀ Q ε_a`
pub fn lyapunov_series(design: &DuioDesign, eps_a: &[Vector]) -> Vec<f64> {
    eps_a.iter().map(|e| e.dot(&(&design.q * e))).collect()
}

/// Largest max-norm mismatch between the numerical derivative of `ε_b` and
/// `A_b ε_b` over interior samples.
pub fn decoupling_mismatch(design: &DuioDesign, traj: &Trajectory, coords: &ErrorCoordinates) -> f64 {
    let ab = design.quotient_dynamics();
    let e = &coords.eps_b;
    let mut worst: f64 = 0.0;
    // Five-point stencil on uniformly spaced samples; a plain central difference
    // would bury the mismatch under its own O(h^2) truncation error.
    for k in 2..traj.len().saturating_sub(2) {
        let h = (traj.times[k + 2] - traj.times[k - 2]) / 4.0;
        let fd = (&e[k - 2] - &e[k - 1].scale(8.0) + e[k + 1].scale(8.0) - &e[k + 2]) / (12.0 * h);
        let model = &ab * &e[k];
        worst = worst.max((fd - model).amax());
    }
    worst
}

/// Largest rise of `v` above its running minimum, over samples at or after `t_from`.
pub fn max_rise_after(times: &[f64], v: &[f64], t_from: f64) -> f64 {
    let mut running = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for (t, val) in times.iter().zip(v) {
        if *t + 1e-12 < t_from {
            continue;
        }
        running = running.min(*val);
        worst = worst.max(val - running);
    }
    worst
}
