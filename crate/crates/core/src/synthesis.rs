//! Assembly of the full observer network: per-node subspaces and injections,
//! the joint recoverability check, the coupling matrix and the coupling gains.

use crate::error::{DuioError, Result};
use crate::geomctl::{decompose, stabilizing_injection, wstar_g, GoodRegion};
use crate::matlin::{
    block_diag, intersect, kron, norms, rank, spectral_norm, Mat, Subspace, Tolerances,
};
use crate::netgraph::{is_connected, laplacian, Graph};

/// What one sensor node measures and which input channels it knows.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub index: usize,
    /// `p_i x n`
    pub c: Mat,
    /// Columns of the global `B` known at this node.
    pub known: Vec<usize>,
    /// Remaining columns, the unknown inputs of this node.
    pub unknown: Vec<usize>,
    /// `n x l_i`
    pub b_known: Mat,
    /// `n x (m - l_i)`
    pub b_unknown: Mat,
}

impl NodeSpec {
    /// Partition the global input matrix into known and unknown channels.
    pub fn new(index: usize, c: Mat, b: &Mat, known: Vec<usize>) -> Result<Self> {
        let n = b.nrows();
        let m = b.ncols();
        if c.ncols() != n {
            return Err(DuioError::DimensionMismatch {
                op: "NodeSpec (C cols)",
                expected: n,
                got: c.ncols(),
            });
        }
        let mut sorted = known.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != known.len() || sorted.iter().any(|&k| k >= m) {
            return Err(DuioError::Invalid(format!(
                "node {}: known input indices {known:?} must be distinct and below {m}",
                index + 1
            )));
        }
        let p = c.nrows();
        if known.len() > p || p > n {
            return Err(DuioError::Invalid(format!(
                "node {}: need l_i <= p_i <= n, got l_i = {}, p_i = {p}, n = {n}",
                index + 1,
                known.len()
            )));
        }
        let unknown: Vec<usize> = (0..m).filter(|j| !known.contains(j)).collect();
        let b_known = b.select_columns(&known);
        let b_unknown = b.select_columns(&unknown);
        Ok(NodeSpec {
            index,
            c,
            known,
            unknown,
            b_known,
            b_unknown,
        })
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }
}

/// Per-node result of the geometric synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDesign {
    pub spec: NodeSpec,
    /// `W*_g,i`
    pub wg: Subspace,
    /// `n x w`, orthonormal basis of `W*_g,i`.
    pub insertion: Mat,
    /// `(n-w) x n`, canonical projection onto the quotient.
    pub projection: Mat,
    /// Output injection `L_i`, `n x p_i`.
    pub injection: Mat,
    /// `A + L_i C_i`
    pub closed_loop: Mat,
    /// Matrix of `A_L` restricted to `W*_g,i`.
    pub restricted: Mat,
    /// Matrix of the map induced by `A_L` on the quotient.
    pub induced: Mat,
}

impl NodeDesign {
    pub fn w_dim(&self) -> usize {
        self.wg.dim()
    }
}

/// Lower bounds on the coupling gains from the convergence theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    /// `‖Ã_L‖₂ / σ_min(Q)`
    pub chi: f64,
    /// `ū_max · max ‖B̄_i‖₁ · max ‖W_i‖_∞`
    pub gamma: f64,
    pub restricted_norm: f64,
    pub q_sigma_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub chi: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuioDesign {
    pub a: Mat,
    pub b: Mat,
    pub nodes: Vec<NodeDesign>,
    pub graph: Graph,
    pub region: GoodRegion,
    pub chi: f64,
    pub gamma: f64,
    pub u_bar_max: f64,
    /// `W_gᵀ (ℒ ⊗ I_n) W_g`
    pub q: Mat,
    pub bounds: GainBounds,
}

impl DuioDesign {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Same design with the coupling gains replaced.
    pub fn with_gains(mut self, chi: f64, gamma: f64) -> Self {
        self.chi = chi;
        self.gamma = gamma;
        self
    }

    /// `blockdiag(W_1, ..., W_N)`
    pub fn stacked_insertion(&self) -> Mat {
        let blocks: Vec<&Mat> = self.nodes.iter().map(|d| &d.insertion).collect();
        block_diag(&blocks)
    }

    /// `blockdiag(P_1ᵀ, ..., P_Nᵀ)`
    pub fn stacked_complement(&self) -> Mat {
        let ts: Vec<Mat> = self.nodes.iter().map(|d| d.projection.transpose()).collect();
        let blocks: Vec<&Mat> = ts.iter().collect();
        block_diag(&blocks)
    }

    /// `blockdiag(Ā_L1, ..., Ā_LN)`, the decoupled quotient error dynamics.
    pub fn quotient_dynamics(&self) -> Mat {
        let blocks: Vec<&Mat> = self.nodes.iter().map(|d| &d.induced).collect();
        block_diag(&blocks)
    }
}

/// Options for [`synthesize`] beyond the plant and graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub region: GoodRegion,
    /// Per-node placement targets for the assignable quotient modes; `None`
    /// entries (or a missing list) use the region defaults.
    pub pole_targets: Vec<Option<Vec<f64>>>,
    /// Multiplier applied to both gain lower bounds.
    pub safety_factor: f64,
    pub tol: Tolerances,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            region: GoodRegion::default(),
            pole_targets: Vec::new(),
            safety_factor: 1.1,
            tol: Tolerances::default(),
        }
    }
}

/// `rank(C_i B̄_i) = rank(B̄_i)`, the per-node condition this design does not need.
pub fn check_rank_condition(node: &NodeSpec, tol: &Tolerances) -> bool {
    rank(&(&node.c * &node.b_unknown), tol) == rank(&node.b_unknown, tol)
}

/// `⋂ W*_g,i`
pub fn joint_intersection(designs: &[NodeDesign], tol: &Tolerances) -> Result<Subspace> {
    let Some(first) = designs.first() else {
        return Err(DuioError::Invalid("no node designs".into()));
    };
    designs[1..]
        .iter()
        .try_fold(first.wg.clone(), |acc, d| intersect(&acc, &d.wg, tol))
}

pub fn check_joint_condition(designs: &[NodeDesign], tol: &Tolerances) -> Result<bool> {
    Ok(joint_intersection(designs, tol)?.is_zero())
}

/// Synthesize one node: subspace, injection and decomposition.
pub fn design_node(
    a: &Mat,
    spec: &NodeSpec,
    region: &GoodRegion,
    pole_targets: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<NodeDesign> {
    let ws = wstar_g(a, &spec.c, &spec.b_unknown, region, tol)?;
    let injection = stabilizing_injection(a, &spec.c, &ws.wg, region, pole_targets, tol)?;
    let closed_loop = a + &injection * &spec.c;
    let dec = decompose(&closed_loop, &ws.wg, tol)?;
    Ok(NodeDesign {
        spec: spec.clone(),
        wg: ws.wg,
        insertion: dec.insertion,
        projection: dec.projection,
        injection,
        closed_loop,
        restricted: dec.restricted,
        induced: dec.induced,
    })
}

fn check_graph(designs: &[NodeDesign], graph: &Graph) -> Result<usize> {
    let n = designs
        .first()
        .map(|d| d.insertion.nrows())
        .ok_or_else(|| DuioError::Invalid("no node designs".into()))?;
    if graph.n_nodes() != designs.len() {
        return Err(DuioError::DimensionMismatch {
            op: "graph size vs node count",
            expected: designs.len(),
            got: graph.n_nodes(),
        });
    }
    Ok(n)
}

/// `Q = W_gᵀ (ℒ ⊗ I_n) W_g`, required to be positive definite.
pub fn build_q(designs: &[NodeDesign], graph: &Graph) -> Result<Mat> {
    let n = check_graph(designs, graph)?;
    let wg = block_diag(&designs.iter().map(|d| &d.insertion).collect::<Vec<_>>());
    let q = wg.transpose() * kron(&laplacian(graph), &Mat::identity(n, n)) * &wg;
    let q = (&q + q.transpose()) * 0.5;
    if q.nrows() == 0 {
        return Ok(q);
    }
    let eig = q.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(0.0, f64::max);
    if min <= 1e-9 * max.max(1.0) {
        return Err(DuioError::NotPositiveDefinite { min_eig: min });
    }
    Ok(q)
}

/// Right-hand sides of the gain conditions.
pub fn gain_bounds(designs: &[NodeDesign], graph: &Graph, u_bar_max: f64) -> Result<GainBounds> {
    let q = build_q(designs, graph)?;
    let restricted_norm = designs
        .iter()
        .map(|d| spectral_norm(&d.restricted))
        .fold(0.0, f64::max);
    let q_sigma_min = norms(&q).sigma_min;
    let chi = if q.nrows() == 0 {
        0.0
    } else {
        restricted_norm / q_sigma_min
    };
    let bbar_one = designs
        .iter()
        .map(|d| norms(&d.spec.b_unknown).one)
        .fold(0.0, f64::max);
    let w_inf = designs
        .iter()
        .map(|d| norms(&d.insertion).inf)
        .fold(0.0, f64::max);
    Ok(GainBounds {
        chi,
        gamma: u_bar_max * bbar_one * w_inf,
        restricted_norm,
        q_sigma_min,
    })
}

/// Gains strictly above the bounds: each bound times `safety_factor`.
pub fn compute_gains(
    designs: &[NodeDesign],
    graph: &Graph,
    u_bar_max: f64,
    safety_factor: f64,
) -> Result<Gains> {
    if safety_factor <= 1.0 {
        return Err(DuioError::Invalid(format!(
            "safety factor must exceed 1, got {safety_factor}"
        )));
    }
    let b = gain_bounds(designs, graph, u_bar_max)?;
    Ok(Gains {
        chi: b.chi * safety_factor,
        gamma: b.gamma * safety_factor,
    })
}

/// Full network synthesis.
pub fn synthesize(
    a: &Mat,
    b: &Mat,
    nodes: &[NodeSpec],
    graph: &Graph,
    u_bar_max: f64,
    opts: &SynthesisOptions,
) -> Result<DuioDesign> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(DuioError::Invalid(format!(
            "A must be square and B must have {n} rows"
        )));
    }
    if nodes.is_empty() {
        return Err(DuioError::Invalid("at least one sensor node is required".into()));
    }
    if graph.n_nodes() != nodes.len() {
        return Err(DuioError::DimensionMismatch {
            op: "graph size vs node count",
            expected: nodes.len(),
            got: graph.n_nodes(),
        });
    }
    if !is_connected(graph) {
        return Err(DuioError::Invalid(
            "communication graph is not connected (connectivity assumption violated)".into(),
        ));
    }
    if !(u_bar_max.is_finite() && u_bar_max >= 0.0) {
        return Err(DuioError::Invalid(format!(
            "unknown-input bound must be finite and nonnegative, got {u_bar_max}"
        )));
    }
    opts.tol.validate()?;

    let designs = nodes
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let targets = opts.pole_targets.get(i).and_then(|t| t.as_deref());
            design_node(a, spec, &opts.region, targets, &opts.tol)
        })
        .collect::<Result<Vec<_>>>()?;

    let joint = joint_intersection(&designs, &opts.tol)?;
    if !joint.is_zero() {
        return Err(DuioError::JointConditionViolated { dim: joint.dim() });
    }
    let q = build_q(&designs, graph)?;
    let bounds = gain_bounds(&designs, graph, u_bar_max)?;
    let gains = compute_gains(&designs, graph, u_bar_max, opts.safety_factor)?;
    Ok(DuioDesign {
        a: a.clone(),
        b: b.clone(),
        nodes: designs,
        graph: graph.clone(),
        region: opts.region,
        chi: gains.chi,
        gamma: gains.gamma,
        u_bar_max,
        q,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::eigvals;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Double integrator measured in position, two nodes.
    fn observable_pair() -> (Mat, Mat, Mat) {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = Mat::from_row_slice(1, 2, &[1.0, 0.0]);
        (a, b, c)
    }

    #[test]
    fn rank_condition_examples() {
        let (_, b, c) = observable_pair();
        let blind = NodeSpec::new(0, c.clone(), &b, vec![0]).unwrap();
        assert!(blind.b_unknown.ncols() == 0);
        assert!(check_rank_condition(&blind, &tol()));
        let full_c = NodeSpec::new(0, Mat::identity(2, 2), &b, vec![]).unwrap();
        assert!(check_rank_condition(&full_c, &tol()));
        let pos_only = NodeSpec::new(0, c, &b, vec![]).unwrap();
        assert!(!check_rank_condition(&pos_only, &tol()));
    }

    #[test]
    fn node_spec_validation() {
        let (_, b, c) = observable_pair();
        let b2 = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        // l_i = 2 > p_i = 1
        assert!(NodeSpec::new(0, c.clone(), &b2, vec![0, 1]).is_err());
        assert!(NodeSpec::new(0, c.clone(), &b, vec![3]).is_err());
        assert!(NodeSpec::new(0, c, &b, vec![0, 0]).is_err());
    }

    #[test]
    fn no_unknown_inputs_reduces_to_plain_distributed_observer() {
        let (a, b, c) = observable_pair();
        let nodes = vec![
            NodeSpec::new(0, c.clone(), &b, vec![0]).unwrap(),
            NodeSpec::new(1, c, &b, vec![0]).unwrap(),
        ];
        let d = synthesize(&a, &b, &nodes, &Graph::path(2), 1.0, &SynthesisOptions::default())
            .unwrap();
        assert!(d.nodes.iter().all(|n| n.wg.is_zero()));
        assert_eq!(d.gamma, 0.0);
        for node in &d.nodes {
            assert!(eigvals(&node.closed_loop).unwrap().iter().all(|z| z.re < -0.5));
        }
    }

    #[test]
    fn identical_blind_nodes_violate_joint_condition() {
        let (a, b, _) = observable_pair();
        // Velocity measurement only: position is unobservable and stays in W.
        let c = Mat::from_row_slice(1, 2, &[0.0, 1.0]);
        let nodes = vec![
            NodeSpec::new(0, c.clone(), &b, vec![0]).unwrap(),
            NodeSpec::new(1, c, &b, vec![0]).unwrap(),
        ];
        let err = synthesize(&a, &b, &nodes, &Graph::path(2), 1.0, &SynthesisOptions::default())
            .unwrap_err();
        assert!(matches!(err, DuioError::JointConditionViolated { dim: 1 }));
    }

    #[test]
    fn disconnected_graph_rejected() {
        let (a, b, c) = observable_pair();
        let nodes = vec![
            NodeSpec::new(0, c.clone(), &b, vec![0]).unwrap(),
            NodeSpec::new(1, c, &b, vec![0]).unwrap(),
        ];
        let g = Graph::new(Mat::zeros(2, 2)).unwrap();
        let err = synthesize(&a, &b, &nodes, &g, 1.0, &SynthesisOptions::default()).unwrap_err();
        assert!(err.to_string().contains("not connected"));
    }

    fn fake_node(n: usize, w: Subspace) -> NodeDesign {
        let b = Mat::zeros(n, 0);
        let spec = NodeSpec::new(0, Mat::zeros(0, n), &b, vec![]).unwrap();
        let projection = crate::matlin::orthocomplement(&w).basis().transpose();
        NodeDesign {
            spec,
            insertion: w.basis().clone(),
            projection,
            injection: Mat::zeros(n, 0),
            closed_loop: Mat::zeros(n, n),
            restricted: Mat::zeros(w.dim(), w.dim()),
            induced: Mat::zeros(n - w.dim(), n - w.dim()),
            wg: w,
        }
    }

    #[test]
    fn q_single_node_is_singular() {
        let d = vec![fake_node(2, Subspace::full(2))];
        let g = Graph::new(Mat::zeros(1, 1)).unwrap();
        assert!(matches!(build_q(&d, &g), Err(DuioError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn q_full_subspaces_on_k2_has_kronecker_spectrum() {
        let d = vec![fake_node(2, Subspace::full(2)), fake_node(2, Subspace::full(2))];
        let g = Graph::complete(2);
        assert!(matches!(build_q(&d, &g), Err(DuioError::NotPositiveDefinite { .. })));
        let wg = block_diag(&[&d[0].insertion, &d[1].insertion]);
        let q = wg.transpose() * kron(&laplacian(&g), &Mat::identity(2, 2)) * &wg;
        let mut ev: Vec<f64> = q.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expected = [0.0, 0.0, 2.0, 2.0];
        assert!(ev.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn joint_condition_examples() {
        let t = tol();
        let with_zero = vec![
            fake_node(3, Subspace::coordinate(3, &[0, 1])),
            fake_node(3, Subspace::zero(3)),
        ];
        assert!(check_joint_condition(&with_zero, &t).unwrap());
        let same = vec![
            fake_node(3, Subspace::coordinate(3, &[0])),
            fake_node(3, Subspace::coordinate(3, &[0])),
        ];
        assert!(!check_joint_condition(&same, &t).unwrap());
    }

    #[test]
    fn gains_vanish_without_unknown_input_bound() {
        let d = vec![
            fake_node(2, Subspace::coordinate(2, &[0])),
            fake_node(2, Subspace::coordinate(2, &[1])),
        ];
        let g = Graph::path(2);
        let gains = compute_gains(&d, &g, 0.0, 1.1).unwrap();
        assert_eq!(gains.gamma, 0.0);
        assert!(compute_gains(&d, &g, 0.0, 1.0).is_err());
    }
}
