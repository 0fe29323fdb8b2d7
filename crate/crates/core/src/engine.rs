//! The synchronous round loop.
//!
//! Each round, every live leaf senses the field and transmits one unit to
//! its head; heads are then stepped deepest-first so a value crosses the
//! whole hierarchy within the round. Heads pay receive energy for every
//! message that actually arrived, processing per the controller outcome and
//! transmit energy when they send. Batteries decrement at the end of a
//! node's turn; a node that cannot afford its round performs no actions and
//! is marked dead. The loop is single-threaded and a pure function of the
//! config; independent runs may execute concurrently.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::{assign_roles, cluster_formation, tree_discovery, ClusterHierarchy};
use crate::config::{DeploymentSpec, SimConfig};
use crate::controller::{adhs_init, adhs_step, ChAction, ChState};
use crate::energy::{process_energy, receive_energy, transmit_energy, EnergyBreakdown};
use crate::error::Result;
use crate::field::{Field, Reading};
use crate::topology::{
    deploy_grid, deploy_uniform, euclidean_distance, DeploymentConfig, NodeId, Position, Role,
    SensorNode,
};

/// The base station is always node 0.
pub const BS_ID: NodeId = 0;

/// Per-node record for one round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRound {
    pub energy: EnergyBreakdown,
    /// Remaining battery after this round; `None` means unconstrained.
    pub battery_after: Option<f64>,
    pub alive: bool,
    /// Present for cluster-heads that acted this round.
    pub action: Option<ChAction>,
    /// Window variance, present on decision rounds.
    pub variance: Option<f64>,
    /// Sampling period after this round, present for cluster-heads.
    pub period_c: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    /// Every non-BS node, in id order.
    pub per_node: BTreeMap<NodeId, NodeRound>,
    /// Values delivered to the base station this round, in arrival order.
    pub bs_received: Vec<(NodeId, f64)>,
    pub e_tot_round: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct FidelityStats {
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    /// Fraction of compared (round, cluster) pairs with zero error.
    pub exact_fraction: f64,
    pub compared: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub rounds: Vec<RoundReport>,
    /// Round index of the first cluster-head death, if any.
    pub lifetime_rounds: Option<u64>,
    pub totals: BTreeMap<NodeId, EnergyBreakdown>,
    pub network_total: EnergyBreakdown,
    /// Readings delivered to a head that was dead when it would have
    /// consumed them.
    pub lost_readings: u64,
    pub fidelity: FidelityStats,
    /// Final node roster: positions, roles, links, remaining battery.
    pub nodes: Vec<SensorNode>,
    pub hierarchy: ClusterHierarchy,
}

fn build_nodes(cfg: &SimConfig) -> Result<Vec<SensorNode>> {
    let mut nodes = match &cfg.deployment {
        DeploymentSpec::Uniform { n, l_area } => deploy_uniform(&DeploymentConfig {
            n: *n,
            l_area: *l_area,
            seed: cfg.seed,
            comm_range: cfg.hierarchy.comm_range,
        })?,
        DeploymentSpec::Grid {
            rows,
            cols,
            spacing,
        } => deploy_grid(*rows, *cols, *spacing),
        DeploymentSpec::Explicit { positions } => positions
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| SensorNode {
                id,
                pos: Position::new(x, y),
                role: Role::Nch,
                parent: None,
                children: Vec::new(),
                battery_j: None,
            })
            .collect(),
    };
    for node in &mut nodes {
        node.battery_j = if node.id == BS_ID {
            None
        } else {
            cfg.battery_j
        };
    }
    Ok(nodes)
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    nodes: Vec<SensorNode>,
    hierarchy: ClusterHierarchy,
    /// Distance from each non-BS node to its routing parent.
    uplink_distance: BTreeMap<NodeId, f64>,
    nch_order: Vec<NodeId>,
    /// Heads deepest-first so children act before their parents.
    ch_order: Vec<NodeId>,
    ch_states: BTreeMap<NodeId, ChState>,
    alive: Vec<bool>,
    lost_readings: u64,
    first_ch_death: Option<u64>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        let mut nodes = build_nodes(cfg)?;
        let tree = tree_discovery(&nodes, BS_ID, cfg.hierarchy.comm_range)?;
        let hierarchy = cluster_formation(&tree, cfg.hierarchy.k);
        assign_roles(&hierarchy, &mut nodes);

        let uplink_distance: BTreeMap<NodeId, f64> = nodes
            .iter()
            .filter_map(|n| {
                n.parent
                    .map(|p| (n.id, euclidean_distance(n.pos, nodes[p].pos)))
            })
            .collect();

        let nch_order: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.role == Role::Nch)
            .map(|n| n.id)
            .collect();

        let mut routing_depth: BTreeMap<NodeId, u32> = BTreeMap::new();
        for node in &nodes {
            let mut d = 0;
            let mut cur = node.id;
            while let Some(p) = nodes[cur].parent {
                d += 1;
                cur = p;
            }
            routing_depth.insert(node.id, d);
        }
        let mut ch_order: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.role == Role::Ch)
            .map(|n| n.id)
            .collect();
        ch_order.sort_by_key(|&id| (std::cmp::Reverse(routing_depth[&id]), id));

        let ch_states: BTreeMap<NodeId, ChState> = ch_order
            .iter()
            .map(|&id| (id, adhs_init(&cfg.adhs)))
            .collect();

        let alive = vec![true; nodes.len()];
        Ok(Self {
            cfg,
            nodes,
            hierarchy,
            uplink_distance,
            nch_order,
            ch_order,
            ch_states,
            alive,
            lost_readings: 0,
            first_ch_death: None,
        })
    }

    fn can_afford(&self, id: NodeId, cost: f64) -> bool {
        match self.nodes[id].battery_j {
            None => true,
            Some(b) => b >= cost,
        }
    }

    fn charge(&mut self, id: NodeId, cost: f64) {
        if let Some(b) = self.nodes[id].battery_j.as_mut() {
            *b -= cost;
        }
    }

    fn mark_dead(&mut self, id: NodeId, round: u64) {
        self.alive[id] = false;
        if self.nodes[id].role == Role::Ch && self.first_ch_death.is_none() {
            self.first_ch_death = Some(round);
        }
    }

    fn run_round(&mut self, round: u64) -> RoundReport {
        let energy = &self.cfg.energy;
        let field = &self.cfg.field;
        let mut per_node: BTreeMap<NodeId, NodeRound> = self
            .nodes
            .iter()
            .filter(|n| n.id != BS_ID)
            .map(|n| {
                (
                    n.id,
                    NodeRound {
                        energy: EnergyBreakdown::default(),
                        battery_after: n.battery_j,
                        alive: self.alive[n.id],
                        action: None,
                        variance: None,
                        period_c: None,
                    },
                )
            })
            .collect();
        let mut inboxes: BTreeMap<NodeId, Vec<Reading>> = BTreeMap::new();
        let mut bs_received: Vec<(NodeId, f64)> = Vec::new();
        let mut e_tot_round = 0.0;

        // Leaves sense and transmit one unit each.
        for i in 0..self.nch_order.len() {
            let id = self.nch_order[i];
            if !self.alive[id] {
                continue;
            }
            let parent = self.nodes[id].parent.expect("leaf has a parent");
            let cost = transmit_energy(energy, energy.bits_per_message, self.uplink_distance[&id]);
            if !self.can_afford(id, cost) {
                self.mark_dead(id, round);
                per_node.get_mut(&id).unwrap().alive = false;
                continue;
            }
            self.charge(id, cost);
            let row = per_node.get_mut(&id).unwrap();
            row.energy.transmit = cost;
            row.battery_after = self.nodes[id].battery_j;
            e_tot_round += cost;
            let value = field.sample(self.nodes[id].pos, round);
            if parent == BS_ID {
                // Degenerate single-node clusters can uplink straight to
                // the base station.
                bs_received.push((id, value));
            } else {
                inboxes.entry(parent).or_default().push(Reading {
                    source: id,
                    round,
                    value,
                });
            }
        }

        // Heads act bottom-up; each sees everything delivered this round.
        for i in 0..self.ch_order.len() {
            let id = self.ch_order[i];
            let arrivals = inboxes.remove(&id).unwrap_or_default();
            if !self.alive[id] {
                self.lost_readings += arrivals.len() as u64;
                continue;
            }
            let own = Reading {
                source: id,
                round,
                value: field.sample(self.nodes[id].pos, round),
            };
            let mut state = self.ch_states[&id].clone();
            let outcome = adhs_step(&mut state, own, &arrivals, &self.cfg.adhs);
            let breakdown = EnergyBreakdown {
                receive: receive_energy(energy, arrivals.len() as f64 * energy.bits_per_message),
                process: process_energy(energy, 1.0 + outcome.processed_child_units as f64),
                transmit: if outcome.outgoing.is_some() {
                    energy.alpha
                        * transmit_energy(
                            energy,
                            energy.bits_per_message,
                            self.uplink_distance[&id],
                        )
                } else {
                    0.0
                },
            };
            let cost = breakdown.total();
            if !self.can_afford(id, cost) {
                self.mark_dead(id, round);
                self.lost_readings += arrivals.len() as u64;
                per_node.get_mut(&id).unwrap().alive = false;
                continue;
            }
            self.ch_states.insert(id, state);
            self.charge(id, cost);
            e_tot_round += cost;
            let row = per_node.get_mut(&id).unwrap();
            row.energy = breakdown;
            row.battery_after = self.nodes[id].battery_j;
            row.action = Some(outcome.action);
            row.variance = outcome.variance;
            row.period_c = Some(self.ch_states[&id].period_c);
            if let Some(value) = outcome.outgoing {
                let parent = self.nodes[id].parent.expect("head has an uplink");
                if parent == BS_ID {
                    bs_received.push((id, value));
                } else {
                    inboxes.entry(parent).or_default().push(Reading {
                        source: id,
                        round,
                        value,
                    });
                }
            }
        }

        // Parents act after their children, so nothing should remain
        // undelivered; count it as lost rather than drop it silently.
        for (_, msgs) in inboxes {
            self.lost_readings += msgs.len() as u64;
        }

        debug_assert!({
            let recomputed: f64 = per_node.values().map(|r| r.energy.total()).sum();
            (recomputed - e_tot_round).abs() <= 1e-12 * e_tot_round.abs().max(1e-300)
        });

        RoundReport {
            round,
            per_node,
            bs_received,
            e_tot_round,
        }
    }
}

/// Deploys, discovers the tree and builds the hierarchy without running any
/// rounds; what `run` does before round 0.
pub fn build_network(cfg: &SimConfig) -> Result<(Vec<SensorNode>, ClusterHierarchy)> {
    cfg.validate()?;
    let mut nodes = build_nodes(cfg)?;
    let tree = tree_discovery(&nodes, BS_ID, cfg.hierarchy.comm_range)?;
    let hierarchy = cluster_formation(&tree, cfg.hierarchy.k);
    assign_roles(&hierarchy, &mut nodes);
    Ok((nodes, hierarchy))
}

/// Runs the configured simulation to completion (all rounds, or until every
/// cluster-head is dead). Deterministic for a fixed config.
pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let mut sim = Sim::new(cfg)?;
    let mut rounds = Vec::with_capacity(cfg.rounds as usize);
    let mut totals: BTreeMap<NodeId, EnergyBreakdown> = sim
        .nodes
        .iter()
        .filter(|n| n.id != BS_ID)
        .map(|n| (n.id, EnergyBreakdown::default()))
        .collect();
    let mut network_total = EnergyBreakdown::default();

    for round in 0..cfg.rounds {
        let report = sim.run_round(round);
        for (&id, row) in &report.per_node {
            totals.get_mut(&id).unwrap().accumulate(&row.energy);
            network_total.accumulate(&row.energy);
        }
        rounds.push(report);
        let any_ch_alive = sim.ch_order.iter().any(|&id| sim.alive[id]);
        if !any_ch_alive {
            break;
        }
    }

    let fid = fidelity(&rounds, &cfg.field, &sim.hierarchy, &sim.nodes);
    Ok(SimReport {
        rounds,
        lifetime_rounds: sim.first_ch_death,
        totals,
        network_total,
        lost_readings: sim.lost_readings,
        fidelity: fid,
        nodes: sim.nodes,
        hierarchy: sim.hierarchy,
    })
}

/// What a fresh end-to-end propagation would deliver for `id`'s subtree this
/// round, aggregating exactly the way the network does (mean of own sample
/// and child contributions, live nodes only).
fn fresh_subtree_aggregate(
    id: NodeId,
    round_alive: &BTreeMap<NodeId, bool>,
    nodes: &[SensorNode],
    field: &Field,
    round: u64,
) -> Option<f64> {
    if !round_alive.get(&id).copied().unwrap_or(false) {
        return None;
    }
    let mut values = vec![field.sample(nodes[id].pos, round)];
    for &c in &nodes[id].children {
        if let Some(v) = fresh_subtree_aggregate(c, round_alive, nodes, field, round) {
            values.push(v);
        }
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Staleness error statistics: for every round and every top-level head, the
/// absolute difference between the last value the base station holds from
/// that head and the fresh subtree aggregate. Pairs before a head's first
/// delivery (or with the head dead) are skipped.
pub fn fidelity(
    rounds: &[RoundReport],
    field: &Field,
    hierarchy: &ClusterHierarchy,
    nodes: &[SensorNode],
) -> FidelityStats {
    let top_heads: Vec<NodeId> = hierarchy
        .uplink
        .iter()
        .filter(|&(_, &up)| up == hierarchy.bs)
        .map(|(&h, _)| h)
        .collect();
    let mut latest: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut errors: Vec<f64> = Vec::new();
    for report in rounds {
        for &(src, value) in &report.bs_received {
            latest.insert(src, value);
        }
        let round_alive: BTreeMap<NodeId, bool> = report
            .per_node
            .iter()
            .map(|(&id, row)| (id, row.alive))
            .collect();
        for &head in &top_heads {
            let (Some(&est), Some(truth)) = (
                latest.get(&head),
                fresh_subtree_aggregate(head, &round_alive, nodes, field, report.round),
            ) else {
                continue;
            };
            errors.push((est - truth).abs());
        }
    }
    if errors.is_empty() {
        return FidelityStats::default();
    }
    let compared = errors.len() as u64;
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let max = errors.iter().cloned().fold(0.0f64, f64::max);
    let exact = errors.iter().filter(|e| **e <= 1e-12).count() as f64 / errors.len() as f64;
    FidelityStats {
        mean_abs_error: mean,
        max_abs_error: max,
        exact_fraction: exact,
        compared,
    }
}
