//! TOML system descriptions: explicit dimensions, row-major matrices.

use serde::{Deserialize, Serialize};

use geoduio::cases::{build_platoon, GraphChoice, PlatoonParams, DEFAULT_POLE_TARGETS, DEFAULT_U_BAR_MAX};
use geoduio::geomctl::GoodRegion;
use geoduio::matlin::{Mat, Vector};
use geoduio::netgraph::Graph;
use geoduio::sim::{Integrator, SimConfig};
use geoduio::synthesis::NodeSpec;
use geoduio::{DuioError, Result};

fn default_margin() -> f64 {
    GoodRegion::default().margin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    pub n: usize,
    pub m: usize,
    /// `n x n`, row-major.
    pub a: Vec<f64>,
    /// `n x m`, row-major.
    pub b: Vec<f64>,
    /// Bound on every unknown input component.
    pub u_bar_max: f64,
    /// Good region is `Re z < -margin`.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// `N x N` 0/1 adjacency, row-major, `N` = number of nodes.
    pub adjacency: Vec<f64>,
    pub nodes: Vec<NodeDescription>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDescription {
    /// Number of outputs.
    pub p: usize,
    /// `p x n`, row-major.
    pub c: Vec<f64>,
    /// Columns of B whose inputs this node knows. The rest are unknown to it.
    #[serde(default)]
    pub known: Vec<usize>,
    /// Placement targets for the node's assignable quotient modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<f64>>,
}

/// `u_j(t) = offset + amplitude sin(omega t + phase)`
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSignal {
    pub offset: f64,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl InputSignal {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (self.omega * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationDescription {
    pub t_end: f64,
    pub dt: f64,
    pub integrator: String,
    pub boundary_layer: f64,
    pub record_stride: usize,
    /// Plant initial state, length `n`.
    pub x0: Vec<f64>,
    /// Initial estimate shared by every node; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat0: Option<Vec<f64>>,
    /// One signal per input column; missing trailing columns are zero.
    #[serde(default)]
    pub inputs: Vec<InputSignal>,
}

impl SimulationDescription {
    pub fn config(&self) -> Result<SimConfig> {
        let integrator: Integrator = self.integrator.parse()?;
        let cfg = SimConfig {
            dt: self.dt,
            t_end: self.t_end,
            integrator,
            boundary_layer: self.boundary_layer,
            record_stride: self.record_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Validated matrices ready for synthesis.
#[derive(Debug, Clone)]
pub struct System {
    pub a: Mat,
    pub b: Mat,
    pub nodes: Vec<NodeSpec>,
    pub graph: Graph,
    pub region: GoodRegion,
    pub pole_targets: Vec<Option<Vec<f64>>>,
    pub u_bar_max: f64,
}

fn matrix(name: &str, rows: usize, cols: usize, data: &[f64]) -> Result<Mat> {
    if data.len() != rows * cols {
        return Err(DuioError::Invalid(format!(
            "{name} should hold {rows}x{cols} = {} entries, found {}",
            rows * cols,
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(DuioError::Invalid(format!("{name} has non-finite entries")));
    }
    Ok(Mat::from_row_slice(rows, cols, data))
}

fn row_major(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
    out
}

impl SystemDescription {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1));
            let msg = e.message().trim().replace('\n', " ");
            DuioError::Invalid(match line {
                Some(l) => format!("malformed system description, line {l}: {msg}"),
                None => format!("malformed system description: {msg}"),
            })
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("system descriptions always serialize")
    }

    pub fn system(&self) -> Result<System> {
        if self.n == 0 {
            return Err(DuioError::Invalid("n must be positive".into()));
        }
        let a = matrix("a", self.n, self.n, &self.a)?;
        let b = matrix("b", self.n, self.m, &self.b)?;
        let k = self.nodes.len();
        if k == 0 {
            return Err(DuioError::Invalid("at least one node is required".into()));
        }
        let graph = Graph::new(matrix("adjacency", k, k, &self.adjacency)?)?;
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, nd)| {
                let c = matrix(&format!("nodes[{i}].c"), nd.p, self.n, &nd.c)?;
                NodeSpec::new(i, c, &b, nd.known.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(System {
            a,
            b,
            nodes,
            graph,
            region: GoodRegion::new(self.margin)?,
            pole_targets: self.nodes.iter().map(|nd| nd.poles.clone()).collect(),
            u_bar_max: self.u_bar_max,
        })
    }

    /// Plant initial state and the per-node initial estimates.
    pub fn initial_conditions(&self) -> Result<(Vector, Vec<Vector>)> {
        let sim = self.simulation_section()?;
        let x0 = Vector::from_vec(matrix("simulation.x0", self.n, 1, &sim.x0)?.as_slice().to_vec());
        let xhat0 = match &sim.xhat0 {
            Some(v) => Vector::from_vec(matrix("simulation.xhat0", self.n, 1, v)?.as_slice().to_vec()),
            None => Vector::zeros(self.n),
        };
        if sim.inputs.len() > self.m {
            return Err(DuioError::Invalid(format!(
                "simulation.inputs lists {} signals for {} input columns",
                sim.inputs.len(),
                self.m
            )));
        }
        Ok((x0, vec![xhat0; self.nodes.len()]))
    }

    pub fn simulation_section(&self) -> Result<&SimulationDescription> {
        self.simulation
            .as_ref()
            .ok_or_else(|| DuioError::Invalid("description has no [simulation] section".into()))
    }

    /// The vehicle platoon case study as a description file.
    pub fn platoon(params: &PlatoonParams, graph: GraphChoice) -> Result<Self> {
        let p = build_platoon(params, graph)?;
        let cfg = SimConfig::default();
        Ok(SystemDescription {
            n: p.a.nrows(),
            m: p.b.ncols(),
            a: row_major(&p.a),
            b: row_major(&p.b),
            u_bar_max: DEFAULT_U_BAR_MAX,
            margin: default_margin(),
            adjacency: row_major(p.graph.adjacency()),
            nodes: p
                .nodes
                .iter()
                .map(|s| NodeDescription {
                    p: s.c.nrows(),
                    c: row_major(&s.c),
                    known: s.known.clone(),
                    poles: Some(DEFAULT_POLE_TARGETS.to_vec()),
                })
                .collect(),
            simulation: Some(SimulationDescription {
                t_end: cfg.t_end,
                dt: cfg.dt,
                integrator: cfg.integrator.to_string(),
                boundary_layer: cfg.boundary_layer,
                record_stride: cfg.record_stride,
                x0: params.x0.clone(),
                xhat0: None,
                inputs: vec![InputSignal {
                    amplitude: 1.5,
                    omega: 0.5,
                    ..InputSignal::default()
                }],
            }),
        })
    }
}
