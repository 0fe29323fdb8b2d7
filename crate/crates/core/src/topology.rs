//! Node deployment, positions and distances.
//!
//! Deployment is pure: the same [`DeploymentConfig`] always yields the same
//! node list, bit for bit, on every platform (see [`crate::rng`]).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::SplitMix64;

/// Dense node identifier, assigned at deployment. The base station is
/// always node 0.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// `sqrt((x_i - x_j)^2 + (y_i - y_j)^2)`
pub fn euclidean_distance(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Bs,
    Ch,
    Nch,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Bs => "BS",
            Role::Ch => "CH",
            Role::Nch => "NCH",
        }
    }
}

/// A deployed node. Roles and parent/children links are unassigned until
/// hierarchy construction (`assign_roles`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorNode {
    pub id: NodeId,
    pub pos: Position,
    pub role: Role,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Remaining battery in joules; `None` means unconstrained.
    pub battery_j: Option<f64>,
}

impl SensorNode {
    fn at(id: NodeId, pos: Position) -> Self {
        Self {
            id,
            pos,
            role: Role::Nch,
            parent: None,
            children: Vec::new(),
            battery_j: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeploymentConfig {
    /// Number of nodes, including the base station (node 0).
    pub n: usize,
    /// Side of the deployment square in meters.
    pub l_area: f64,
    pub seed: u64,
    /// Maximum link distance usable by tree discovery.
    pub comm_range: f64,
}

impl DeploymentConfig {
    // `!(x > 0)` deliberately rejects NaN along with out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SimError::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.l_area > 0.0) {
            return Err(SimError::Config(format!(
                "l_area must be > 0, got {}",
                self.l_area
            )));
        }
        if !(self.comm_range > 0.0) {
            return Err(SimError::Config(format!(
                "comm_range must be > 0, got {}",
                self.comm_range
            )));
        }
        Ok(())
    }
}

/// Deploys `n` nodes i.i.d. uniform over the `l_area` square. Node `i`
/// consumes draws `2i` and `2i+1` of the seed's SplitMix64 stream, so the
/// layout is reproducible across implementations.
pub fn deploy_uniform(cfg: &DeploymentConfig) -> Result<Vec<SensorNode>> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let nodes = (0..cfg.n)
        .map(|id| {
            let x = rng.next_f64() * cfg.l_area;
            let y = rng.next_f64() * cfg.l_area;
            SensorNode::at(id, Position::new(x, y))
        })
        .collect();
    Ok(nodes)
}

/// `rows x cols` nodes on a lattice with the given spacing, row-major ids:
/// node `r*cols + c` sits at `(c*spacing, r*spacing)`.
pub fn deploy_grid(rows: usize, cols: usize, spacing: f64) -> Vec<SensorNode> {
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            nodes.push(SensorNode::at(
                id,
                Position::new(c as f64 * spacing, r as f64 * spacing),
            ));
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_pythagorean() {
        let d = euclidean_distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0));
        assert_eq!(d, 5.0);
    }

    #[test]
    fn distance_identity() {
        let p = Position::new(17.5, -2.25);
        assert_eq!(euclidean_distance(p, p), 0.0);
    }

    #[test]
    fn distance_hand_computed() {
        // (1,1)-(4,5): sqrt(9 + 16) = 5
        let d = euclidean_distance(Position::new(1.0, 1.0), Position::new(4.0, 5.0));
        assert_eq!(d, 5.0);
    }

    #[test]
    fn uniform_rejects_single_node() {
        let cfg = DeploymentConfig {
            n: 1,
            l_area: 100.0,
            seed: 0,
            comm_range: 10.0,
        };
        assert!(matches!(deploy_uniform(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn uniform_is_deterministic() {
        let cfg = DeploymentConfig {
            n: 100,
            l_area: 100.0,
            seed: 42,
            comm_range: 10.0,
        };
        let a = deploy_uniform(&cfg).unwrap();
        let b = deploy_uniform(&cfg).unwrap();
        for (na, nb) in a.iter().zip(&b) {
            assert_eq!(na.pos.x.to_bits(), nb.pos.x.to_bits());
            assert_eq!(na.pos.y.to_bits(), nb.pos.y.to_bits());
        }
    }

    #[test]
    fn uniform_mean_moment_check() {
        // Mean of x over 10000 draws must land within 3 sigma of L/2,
        // sigma = L*(1/sqrt(12))/sqrt(10000).
        let cfg = DeploymentConfig {
            n: 10_000,
            l_area: 100.0,
            seed: 7,
            comm_range: 10.0,
        };
        let nodes = deploy_uniform(&cfg).unwrap();
        let mean_x: f64 = nodes.iter().map(|n| n.pos.x).sum::<f64>() / nodes.len() as f64;
        let tol = 3.0 * (1.0 / 12f64.sqrt()) / (10_000f64).sqrt() * 100.0;
        assert!(
            (mean_x - 50.0).abs() <= tol,
            "mean_x = {mean_x}, tol = {tol}"
        );
        // Positions stay inside the square.
        assert!(nodes
            .iter()
            .all(|n| (0.0..=100.0).contains(&n.pos.x) && (0.0..=100.0).contains(&n.pos.y)));
    }

    #[test]
    fn grid_single_node() {
        let nodes = deploy_grid(1, 1, 10.0);
        assert_eq!(nodes.len(), 1);
        assert_eq!((nodes[0].pos.x, nodes[0].pos.y), (0.0, 0.0));
    }

    #[test]
    fn grid_two_by_two() {
        let nodes = deploy_grid(2, 2, 10.0);
        let got: Vec<(f64, f64)> = nodes.iter().map(|n| (n.pos.x, n.pos.y)).collect();
        assert_eq!(
            got,
            vec![(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0)]
        );
    }

    #[test]
    fn grid_four_by_four_max_distance() {
        let nodes = deploy_grid(4, 4, 10.0);
        assert_eq!(nodes.len(), 16);
        let mut max_d = 0.0f64;
        for a in &nodes {
            for b in &nodes {
                max_d = max_d.max(euclidean_distance(a.pos, b.pos));
            }
        }
        // Opposite corners: 30*sqrt(2).
        assert!((max_d - 30.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distance_symmetry_and_triangle() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..500 {
            let p = Position::new(rng.next_f64() * 100.0, rng.next_f64() * 100.0);
            let q = Position::new(rng.next_f64() * 100.0, rng.next_f64() * 100.0);
            let r = Position::new(rng.next_f64() * 100.0, rng.next_f64() * 100.0);
            let pq = euclidean_distance(p, q);
            let qp = euclidean_distance(q, p);
            assert_eq!(pq.to_bits(), qp.to_bits());
            let pr = euclidean_distance(p, r);
            let rq = euclidean_distance(r, q);
            assert!(pq <= pr + rq + 1e-9 * (pq + pr + rq));
        }
    }
}
