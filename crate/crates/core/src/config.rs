//! Run configuration: the fully-resolved simulation config, the shipped
//! scenario presets, config-file loading and `key=value` overrides.
//!
//! A config file is TOML. It is either `preset = "<name>"` on its own
//! (point changes then go through `--set`), or a complete explicit config.
//! A previously written `manifest.json` can be loaded in place of a TOML
//! file and reproduces its run byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::AdhsParams;
use crate::energy::EnergyParams;
use crate::error::{Result, SimError};
use crate::field::{Field, Region, Shape};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DeploymentSpec {
    /// `n` nodes i.i.d. uniform over the `l_area` square (node 0 included).
    Uniform { n: usize, l_area: f64 },
    /// Lattice deployment, row-major ids.
    Grid {
        rows: usize,
        cols: usize,
        spacing: f64,
    },
    /// Explicit positions, index = node id.
    Explicit { positions: Vec<(f64, f64)> },
}

impl DeploymentSpec {
    pub fn node_count(&self) -> usize {
        match self {
            DeploymentSpec::Uniform { n, .. } => *n,
            DeploymentSpec::Grid { rows, cols, .. } => rows * cols,
            DeploymentSpec::Explicit { positions } => positions.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    /// Cluster size parameter.
    pub k: usize,
    /// Maximum usable link distance in meters.
    pub comm_range: f64,
}

/// Fully-resolved simulation configuration. Serializing this to JSON is the
/// run manifest; everything a run does is a pure function of this value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub rounds: u64,
    /// Initial battery per node in joules; absent means unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery_j: Option<f64>,
    pub deployment: DeploymentSpec,
    pub hierarchy: HierarchyConfig,
    pub adhs: AdhsParams,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub field: Field,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

impl SimConfig {
    // `!(x > 0)` deliberately rejects NaN along with out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(SimError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        if self.rounds < 1 {
            return err("rounds must be >= 1".into());
        }
        match &self.deployment {
            DeploymentSpec::Uniform { n, l_area } => {
                if *n < 2 {
                    return err(format!("deployment.n must be >= 2, got {n}"));
                }
                if !(*l_area > 0.0) {
                    return err(format!("deployment.l_area must be > 0, got {l_area}"));
                }
            }
            DeploymentSpec::Grid {
                rows,
                cols,
                spacing,
            } => {
                if *rows < 1 || *cols < 1 {
                    return err("deployment.rows and deployment.cols must be >= 1".into());
                }
                if rows * cols < 2 {
                    return err("grid deployment needs at least 2 nodes".into());
                }
                if !(*spacing > 0.0) {
                    return err(format!("deployment.spacing must be > 0, got {spacing}"));
                }
            }
            DeploymentSpec::Explicit { positions } => {
                if positions.len() < 2 {
                    return err("deployment.positions needs at least 2 nodes".into());
                }
                if positions
                    .iter()
                    .any(|(x, y)| !x.is_finite() || !y.is_finite())
                {
                    return err("deployment.positions must be finite".into());
                }
            }
        }
        if self.hierarchy.k < 1 {
            return err("hierarchy.k must be >= 1".into());
        }
        if !(self.hierarchy.comm_range > 0.0) {
            return err(format!(
                "hierarchy.comm_range must be > 0, got {}",
                self.hierarchy.comm_range
            ));
        }
        self.adhs.validate()?;
        let e = &self.energy;
        if !(e.e_elec > 0.0) {
            return err(format!("energy.e_elec must be > 0, got {}", e.e_elec));
        }
        if !(e.e_p > 0.0) {
            return err(format!("energy.e_p must be > 0, got {}", e.e_p));
        }
        if !(e.eps_fs > 0.0) {
            return err(format!("energy.eps_fs must be > 0, got {}", e.eps_fs));
        }
        if !(e.alpha > 0.0 && e.alpha <= 1.0) {
            return err(format!("energy.alpha must be in (0, 1], got {}", e.alpha));
        }
        if !(e.bits_per_message > 0.0) {
            return err(format!(
                "energy.bits_per_message must be > 0, got {}",
                e.bits_per_message
            ));
        }
        if let Some(b) = self.battery_j {
            if !(b > 0.0) {
                return err(format!("battery_j must be > 0 when set, got {b}"));
            }
        }
        Ok(())
    }

    /// The run manifest: pretty JSON of the resolved config.
    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Shipped scenario presets.
pub fn preset(name: &str) -> Option<SimConfig> {
    match name {
        "fig3" => Some(fig3()),
        "kruger" => Some(kruger()),
        "uniform_random" => Some(uniform_random()),
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &["fig3", "kruger", "uniform_random"];

/// Three-level grid scenario: one top cluster-head over four mid heads with
/// three leaves each, every link exactly 10 m. Field values 10/20/30 leave
/// three mid clusters and the top head quiet under T = 15 while one mid
/// cluster straddles all three regions.
fn fig3() -> SimConfig {
    let positions: Vec<(f64, f64)> = vec![
        (0.0, 0.0),    // 0: base station
        (10.0, 0.0),   // 1: top cluster-head
        (10.0, 10.0),  // 2: mid head (straddling cluster)
        (18.0, 6.0),   // 3: mid head
        (18.0, -6.0),  // 4: mid head
        (10.0, -10.0), // 5: mid head
        (16.0, 18.0),  // 6: leaf of 2, region value 10
        (4.0, 18.0),   // 7: leaf of 2, region value 30
        (10.0, 20.0),  // 8: leaf of 2
        (28.0, 6.0),   // 9..11: leaves of 3
        (26.0, 12.0),
        (24.0, 14.0),
        (28.0, -6.0), // 12..14: leaves of 4
        (26.0, -12.0),
        (24.0, -14.0),
        (16.0, -18.0), // 15..17: leaves of 5
        (4.0, -18.0),
        (10.0, -20.0),
    ];
    SimConfig {
        schema_version: SCHEMA_VERSION,
        seed: 7,
        rounds: 6,
        battery_j: None,
        deployment: DeploymentSpec::Explicit { positions },
        hierarchy: HierarchyConfig {
            k: 4,
            comm_range: 10.5,
        },
        adhs: AdhsParams {
            t_threshold: 15.0,
            l_limit: 2,
            ..AdhsParams::default()
        },
        energy: EnergyParams::default(),
        field: Field {
            regions: vec![
                Region::constant(
                    Shape::Circle {
                        cx: 16.0,
                        cy: 18.0,
                        radius: 2.0,
                    },
                    10.0,
                ),
                Region::constant(
                    Shape::Circle {
                        cx: 4.0,
                        cy: 18.0,
                        radius: 2.0,
                    },
                    30.0,
                ),
            ],
            default_value: 20.0,
        },
    }
}

/// Large grid with a herd-like square region that wanders across it in
/// three hops, leaving most clusters quiet at any given time.
fn kruger() -> SimConfig {
    let herd = |x0: f64, y0: f64, timeline: Vec<(u64, f64)>| Region {
        shape: Shape::Rect {
            x0,
            y0,
            x1: x0 + 29.0,
            y1: y0 + 29.0,
        },
        timeline,
    };
    SimConfig {
        schema_version: SCHEMA_VERSION,
        seed: 11,
        rounds: 200,
        battery_j: Some(0.5),
        deployment: DeploymentSpec::Grid {
            rows: 12,
            cols: 12,
            spacing: 10.0,
        },
        hierarchy: HierarchyConfig {
            k: 4,
            comm_range: 10.0,
        },
        adhs: AdhsParams {
            t_threshold: 15.0,
            l_limit: 8,
            ..AdhsParams::default()
        },
        energy: EnergyParams {
            bits_per_message: 2000.0,
            ..EnergyParams::default()
        },
        field: Field {
            regions: vec![
                herd(5.0, 5.0, vec![(0, 35.0), (65, 20.0)]),
                herd(45.0, 45.0, vec![(0, 20.0), (65, 35.0), (130, 20.0)]),
                herd(85.0, 85.0, vec![(0, 20.0), (130, 35.0)]),
            ],
            default_value: 20.0,
        },
    }
}

/// Uniform deployment over a 100 m square with a few static regions.
fn uniform_random() -> SimConfig {
    SimConfig {
        schema_version: SCHEMA_VERSION,
        seed: 42,
        rounds: 50,
        battery_j: None,
        deployment: DeploymentSpec::Uniform {
            n: 60,
            l_area: 100.0,
        },
        hierarchy: HierarchyConfig {
            k: 4,
            comm_range: 25.0,
        },
        adhs: AdhsParams {
            t_threshold: 15.0,
            l_limit: 4,
            ..AdhsParams::default()
        },
        energy: EnergyParams {
            bits_per_message: 2000.0,
            ..EnergyParams::default()
        },
        field: Field {
            regions: vec![
                Region::constant(
                    Shape::Circle {
                        cx: 30.0,
                        cy: 70.0,
                        radius: 12.0,
                    },
                    32.0,
                ),
                Region::constant(
                    Shape::Circle {
                        cx: 75.0,
                        cy: 20.0,
                        radius: 10.0,
                    },
                    11.0,
                ),
                Region::constant(
                    Shape::Circle {
                        cx: 55.0,
                        cy: 55.0,
                        radius: 8.0,
                    },
                    27.0,
                ),
            ],
            default_value: 20.0,
        },
    }
}

/// Keys settable through `--set`. Structured fields (explicit positions,
/// field regions) are file-only.
const SETTABLE_KEYS: &[&str] = &[
    "schema_version",
    "seed",
    "rounds",
    "battery_j",
    "deployment.kind",
    "deployment.n",
    "deployment.l_area",
    "deployment.rows",
    "deployment.cols",
    "deployment.spacing",
    "hierarchy.k",
    "hierarchy.comm_range",
    "adhs.t_threshold",
    "adhs.l_limit",
    "adhs.literal_mode",
    "adhs.quiet_transmit",
    "adhs.variance_kind",
    "energy.e_elec",
    "energy.e_p",
    "energy.eps_fs",
    "energy.alpha",
    "energy.bits_per_message",
    "field.default_value",
];

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut table) => table.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_one(value: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    if !SETTABLE_KEYS.contains(&key) {
        return Err(SimError::Config(format!(
            "unknown override key `{key}` (settable: {})",
            SETTABLE_KEYS.join(", ")
        )));
    }
    let parts: Vec<&str> = key.split('.').collect();
    let (last, prefix) = parts.split_last().expect("key is nonempty");
    let mut cur = value;
    for part in prefix {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| SimError::Config(format!("`{key}` does not name a settable field")))?;
        cur = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()));
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| SimError::Config(format!("`{key}` does not name a settable field")))?;
    table.insert(last.to_string(), parse_override_value(raw));
    Ok(())
}

/// Applies `key=value` overrides to a resolved config and re-validates.
pub fn apply_overrides(cfg: &SimConfig, sets: &[(String, String)]) -> Result<SimConfig> {
    if sets.is_empty() {
        cfg.validate()?;
        return Ok(cfg.clone());
    }
    let mut value =
        toml::Value::try_from(cfg).map_err(|e| SimError::Config(format!("internal: {e}")))?;
    for (key, raw) in sets {
        apply_one(&mut value, key, raw)?;
    }
    let out: SimConfig = value
        .try_into()
        .map_err(|e| SimError::Config(format!("override produced an invalid config: {e}")))?;
    out.validate()?;
    Ok(out)
}

/// Loads a config file, expands a preset reference if present, applies
/// overrides and validates. `.json` files are parsed as run manifests.
pub fn load_config(path: &Path, sets: &[(String, String)]) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        SimError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let base: SimConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| {
            SimError::Config(format!("manifest {} does not parse: {e}", path.display()))
        })?
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| {
            SimError::Config(format!("config {} does not parse: {e}", path.display()))
        })?;
        if let Some(name) = table.get("preset") {
            let name = name
                .as_str()
                .ok_or_else(|| SimError::Config("preset must be a string".into()))?;
            if table.len() > 1 {
                return Err(SimError::Config(
                    "a preset config takes point changes via --set, not extra keys".into(),
                ));
            }
            preset(name).ok_or_else(|| {
                SimError::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    PRESET_NAMES.join(", ")
                ))
            })?
        } else {
            toml::Value::Table(table)
                .try_into()
                .map_err(|e| SimError::Config(format!("config {}: {e}", path.display())))?
        }
    };
    apply_overrides(&base, sets)
}
