//! Headline numbers: symbolic per-round cluster-head energy totals of the
//! form `a*E_r + b*E_p + c*alpha*E_t`, and the processing-energy savings
//! ratio between two of them.

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterHierarchy;
use crate::energy::EnergyParams;
use crate::engine::RoundReport;
use crate::error::{Result, SimError};
use crate::topology::{euclidean_distance, SensorNode};

/// Cluster-head energy expressed in unit-message costs at the common uplink
/// distance: `coeff_er * E_r + coeff_ep * E_p + coeff_alpha_et * alpha*E_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolicEnergy {
    pub coeff_er: f64,
    pub coeff_ep: f64,
    pub coeff_alpha_et: f64,
}

impl SymbolicEnergy {
    /// Numeric value of the symbolic total at the given constants and
    /// distance class.
    pub fn evaluate(&self, p: &EnergyParams, d: f64) -> f64 {
        self.coeff_er * p.unit_receive()
            + self.coeff_ep * p.unit_process()
            + self.coeff_alpha_et * p.alpha * p.unit_transmit(d)
    }
}

/// The common cluster-head uplink distance, if there is exactly one.
fn single_distance_class(hierarchy: &ClusterHierarchy, nodes: &[SensorNode]) -> Option<f64> {
    let mut class: Option<f64> = None;
    for (&head, &up) in &hierarchy.uplink {
        let d = euclidean_distance(nodes[head].pos, nodes[up].pos);
        match class {
            None => class = Some(d),
            Some(c) => {
                if (d - c).abs() > 1e-9 * c.abs().max(1.0) {
                    return None;
                }
            }
        }
    }
    class
}

/// Snaps near-rational coefficients (denominator = rounds averaged) so the
/// worked-example totals come out exact.
fn snap(x: f64, denom: f64) -> f64 {
    let r = (x * denom).round() / denom;
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

fn symbolic_over(
    reports: &[&RoundReport],
    hierarchy: &ClusterHierarchy,
    nodes: &[SensorNode],
    params: &EnergyParams,
) -> Option<SymbolicEnergy> {
    if reports.is_empty() {
        return None;
    }
    let d = match single_distance_class(hierarchy, nodes) {
        Some(d) => d,
        None => {
            // BS-only hierarchies have no heads and therefore zero totals.
            return if hierarchy.uplink.is_empty() {
                Some(SymbolicEnergy {
                    coeff_er: 0.0,
                    coeff_ep: 0.0,
                    coeff_alpha_et: 0.0,
                })
            } else {
                None
            };
        }
    };
    let heads = hierarchy.heads();
    let mut receive = 0.0;
    let mut process = 0.0;
    let mut transmit = 0.0;
    for report in reports {
        for &h in &heads {
            if let Some(row) = report.per_node.get(&h) {
                receive += row.energy.receive;
                process += row.energy.process;
                transmit += row.energy.transmit;
            }
        }
    }
    let n = reports.len() as f64;
    Some(SymbolicEnergy {
        coeff_er: snap(receive / n / params.unit_receive(), n),
        coeff_ep: snap(process / n / params.unit_process(), n),
        coeff_alpha_et: snap(transmit / n / (params.alpha * params.unit_transmit(d)), n),
    })
}

/// Symbolic cluster-head total for a single round. `None` when head uplink
/// distances span more than one class (numeric totals still apply then).
pub fn symbolic_ch_total(
    report: &RoundReport,
    hierarchy: &ClusterHierarchy,
    nodes: &[SensorNode],
    params: &EnergyParams,
) -> Option<SymbolicEnergy> {
    symbolic_over(&[report], hierarchy, nodes, params)
}

/// Per-round average over a window of rounds.
pub fn symbolic_ch_window_average(
    reports: &[RoundReport],
    hierarchy: &ClusterHierarchy,
    nodes: &[SensorNode],
    params: &EnergyParams,
) -> Option<SymbolicEnergy> {
    let refs: Vec<&RoundReport> = reports.iter().collect();
    symbolic_over(&refs, hierarchy, nodes, params)
}

/// Fractional reduction of the processing coefficient.
// `!(x > 0)` deliberately rejects NaN along with nonpositive baselines.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn ep_savings_ratio(before: &SymbolicEnergy, after: &SymbolicEnergy) -> Result<f64> {
    if !(before.coeff_ep > 0.0) {
        return Err(SimError::Config(
            "ep_savings_ratio needs a positive baseline processing coefficient".into(),
        ));
    }
    Ok((before.coeff_ep - after.coeff_ep) / before.coeff_ep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(er: f64, ep: f64, et: f64) -> SymbolicEnergy {
        SymbolicEnergy {
            coeff_er: er,
            coeff_ep: ep,
            coeff_alpha_et: et,
        }
    }

    #[test]
    fn savings_worked_example() {
        let r = ep_savings_ratio(&sym(16.0, 21.0, 5.0), &sym(16.0, 14.5, 5.0)).unwrap();
        assert!((r - 6.5 / 21.0).abs() < 1e-15);
        assert!((r - 0.3095).abs() < 0.005);
    }

    #[test]
    fn savings_identical_inputs_zero() {
        let s = sym(16.0, 21.0, 5.0);
        assert_eq!(ep_savings_ratio(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn savings_full_bound() {
        let r = ep_savings_ratio(&sym(16.0, 21.0, 5.0), &sym(16.0, 0.0, 5.0)).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn savings_zero_baseline_is_error() {
        assert!(ep_savings_ratio(&sym(1.0, 0.0, 1.0), &sym(1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn snap_recovers_halves() {
        assert_eq!(snap(14.499999999999998, 2.0), 14.5);
        assert_eq!(snap(16.000000000000004, 1.0), 16.0);
        // Far-off values stay put.
        assert_eq!(snap(14.37, 2.0), 14.37);
    }

    #[test]
    fn bs_only_hierarchy_yields_zero_coefficients() {
        use crate::clustering::{cluster_formation, BfsTree};
        use crate::engine::RoundReport;
        use crate::topology::{Position, Role, SensorNode};

        let hierarchy = cluster_formation(&BfsTree::from_parents(0, &[]), 1);
        assert!(hierarchy.clusters.is_empty());
        let report = RoundReport {
            round: 0,
            per_node: Default::default(),
            bs_received: Vec::new(),
            e_tot_round: 0.0,
        };
        let nodes = vec![SensorNode {
            id: 0,
            pos: Position::new(0.0, 0.0),
            role: Role::Bs,
            parent: None,
            children: Vec::new(),
            battery_j: None,
        }];
        let sym = symbolic_ch_total(&report, &hierarchy, &nodes, &EnergyParams::default()).unwrap();
        assert_eq!(
            (sym.coeff_er, sym.coeff_ep, sym.coeff_alpha_et),
            (0.0, 0.0, 0.0)
        );
    }
}
