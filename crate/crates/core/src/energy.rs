//! First-order radio and processing energy model.
//!
//! Transmission over distance `d` costs electronics plus a free-space
//! amplifier term quadratic in `d`; receiving costs electronics only;
//! processing costs a constant per unit of data. A "unit" is one message of
//! `bits_per_message` bits. A cluster-head aggregates its whole input to a
//! single unit and compresses it by the ratio `alpha` before transmitting.

use serde::{Deserialize, Serialize};

/// Model constants. Defaults are the published first-order values:
/// `e_elec = 5e-8 J/bit`, `e_p = 5e-9 J/bit/signal`, `eps_fs = 1e-10 J/bit/m^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Electronics energy per bit, paid on both transmit and receive.
    pub e_elec: f64,
    /// Processing energy per bit of each received or sensed unit.
    pub e_p: f64,
    /// Free-space amplifier coefficient (d^2 model), joules per bit per m^2.
    pub eps_fs: f64,
    /// Compression ratio in (0, 1]: a k-bit aggregate leaves as alpha*k bits.
    pub alpha: f64,
    /// Bits per unit message. 1 keeps the symbolic bookkeeping exact;
    /// realistic presets use 2000.
    pub bits_per_message: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            e_elec: 5e-8,
            e_p: 5e-9,
            eps_fs: 1e-10,
            alpha: 1.0,
            bits_per_message: 1.0,
        }
    }
}

impl EnergyParams {
    /// Energy to receive one unit message.
    pub fn unit_receive(&self) -> f64 {
        receive_energy(self, self.bits_per_message)
    }

    /// Energy to process one unit message.
    pub fn unit_process(&self) -> f64 {
        self.bits_per_message * self.e_p
    }

    /// Energy to transmit one uncompressed unit message over distance `d`.
    pub fn unit_transmit(&self, d: f64) -> f64 {
        transmit_energy(self, self.bits_per_message, d)
    }
}

/// `bits * (e_elec + eps_fs * d^2)`
pub fn transmit_energy(p: &EnergyParams, bits: f64, d: f64) -> f64 {
    bits * (p.e_elec + p.eps_fs * d * d)
}

/// `bits * e_elec`
pub fn receive_energy(p: &EnergyParams, bits: f64) -> f64 {
    bits * p.e_elec
}

/// `units * bits_per_message * e_p`
pub fn process_energy(p: &EnergyParams, units: f64) -> f64 {
    units * p.bits_per_message * p.e_p
}

/// Per-node energy for one round, split by radio/processing stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub receive: f64,
    pub process: f64,
    pub transmit: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.receive + self.process + self.transmit
    }

    pub fn accumulate(&mut self, other: &EnergyBreakdown) {
        self.receive += other.receive;
        self.process += other.process;
        self.transmit += other.transmit;
    }
}

/// Cluster-head cost of a full processing round: receive a unit from each of
/// `n_children`, process those plus its own sensed unit, transmit one
/// compressed aggregate upward over `d_up`.
pub fn ch_round_energy_full(p: &EnergyParams, n_children: usize, d_up: f64) -> EnergyBreakdown {
    EnergyBreakdown {
        receive: n_children as f64 * p.unit_receive(),
        process: (n_children as f64 + 1.0) * p.unit_process(),
        transmit: p.alpha * p.unit_transmit(d_up),
    }
}

/// Cluster-head cost of a quiet round: children are still received and the
/// head still processes its own sensed unit, but child data is only buffered;
/// the previous aggregate is re-sent.
pub fn ch_round_energy_quiet(p: &EnergyParams, n_children: usize, d_up: f64) -> EnergyBreakdown {
    EnergyBreakdown {
        receive: n_children as f64 * p.unit_receive(),
        process: p.unit_process(),
        transmit: p.alpha * p.unit_transmit(d_up),
    }
}

/// Average per-round cluster-head cost at sample rate `r` in [0, 1]:
/// full child processing happens in an `r` fraction of rounds, everything
/// else every round.
pub fn ch_avg_energy(p: &EnergyParams, r: f64, n_children: usize, d_up: f64) -> f64 {
    let n = n_children as f64;
    n * p.unit_receive() + (r * n + 1.0) * p.unit_process() + p.alpha * p.unit_transmit(d_up)
}
