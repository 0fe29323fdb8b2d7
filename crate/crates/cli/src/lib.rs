//! Command implementations behind the `wsnsim` binary.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use wsnsim::config::{load_config, preset, SimConfig};
use wsnsim::engine::{build_network, run};
use wsnsim::metrics::{
    ep_savings_ratio, symbolic_ch_total, symbolic_ch_window_average, SymbolicEnergy,
};
use wsnsim::report::{hierarchy_json, summary, write_run_outputs};

/// Splits repeated `--set key=value` arguments.
pub fn parse_sets(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .with_context(|| format!("--set takes key=value, got `{s}`"))
        })
        .collect()
}

fn load(config: &Path, sets: &[(String, String)], seed: Option<u64>) -> Result<SimConfig> {
    let mut sets = sets.to_vec();
    if let Some(seed) = seed {
        sets.push(("seed".into(), seed.to_string()));
    }
    Ok(load_config(config, &sets)?)
}

/// `run`: execute a config and write trace.csv, summary.json, manifest.json.
pub fn cmd_run(
    config: &Path,
    sets: &[(String, String)],
    out: &Path,
    seed: Option<u64>,
    dump_hierarchy: bool,
) -> Result<()> {
    let cfg = load(config, sets, seed)?;
    let report = run(&cfg)?;
    write_run_outputs(out, &cfg, &report, dump_hierarchy)?;
    let s = summary(&report, &cfg);
    println!(
        "ran {} rounds, E_tot = {} J, lifetime = {}, lost readings = {}",
        s.rounds_executed,
        s.e_tot_total,
        s.lifetime_rounds
            .map(|r| r.to_string())
            .unwrap_or_else(|| "none".into()),
        s.lost_readings
    );
    println!("outputs in {}", out.display());
    Ok(())
}

fn fmt_symbolic(s: &SymbolicEnergy) -> String {
    format!(
        "{} E_r + {} E_p + {} alpha*E_t",
        s.coeff_er, s.coeff_ep, s.coeff_alpha_et
    )
}

/// `reproduce-fig3`: run the fig3 preset and compare the round-0 total, the
/// steady two-round window and the processing savings against the expected
/// coefficients. Returns false (exit nonzero) on any deviation.
pub fn cmd_reproduce_fig3(out: Option<&Path>) -> Result<bool> {
    let cfg = preset("fig3").expect("fig3 preset exists");
    let report = run(&cfg)?;
    if let Some(dir) = out {
        write_run_outputs(dir, &cfg, &report, true)?;
    }

    let before = symbolic_ch_total(
        &report.rounds[0],
        &report.hierarchy,
        &report.nodes,
        &cfg.energy,
    )
    .context("fig3 has a single uplink distance class")?;
    let after = symbolic_ch_window_average(
        &report.rounds[1..=2],
        &report.hierarchy,
        &report.nodes,
        &cfg.energy,
    )
    .context("fig3 has a single uplink distance class")?;
    let savings = ep_savings_ratio(&before, &after)?;

    let expect_before = SymbolicEnergy {
        coeff_er: 16.0,
        coeff_ep: 21.0,
        coeff_alpha_et: 5.0,
    };
    let expect_after = SymbolicEnergy {
        coeff_er: 16.0,
        coeff_ep: 14.5,
        coeff_alpha_et: 5.0,
    };
    let expect_savings = 6.5 / 21.0;

    let sym_ok = |got: &SymbolicEnergy, want: &SymbolicEnergy| {
        (got.coeff_er - want.coeff_er).abs() <= 1e-9
            && (got.coeff_ep - want.coeff_ep).abs() <= 1e-9
            && (got.coeff_alpha_et - want.coeff_alpha_et).abs() <= 1e-9
    };
    let ok_before = sym_ok(&before, &expect_before);
    let ok_after = sym_ok(&after, &expect_after);
    let ok_savings = (savings - expect_savings).abs() <= 0.005;

    let line = |label: &str, got: String, want: String, ok: bool| {
        println!(
            "  {label:<22} {got:<34} [expected {want}]  {}",
            if ok { "ok" } else { "DEVIATION" }
        );
    };
    println!("three-level grid reproduction (preset fig3)");
    line(
        "round 0 CH total:",
        fmt_symbolic(&before),
        fmt_symbolic(&expect_before),
        ok_before,
    );
    line(
        "steady 2-round window:",
        fmt_symbolic(&after),
        fmt_symbolic(&expect_after),
        ok_after,
    );
    line(
        "E_p savings:",
        format!("{:.2}%", savings * 100.0),
        "~30.95% +/- 0.5%".into(),
        ok_savings,
    );
    Ok(ok_before && ok_after && ok_savings)
}

const SWEEPABLE: &[(&str, &str)] = &[
    ("T", "adhs.t_threshold"),
    ("L", "adhs.l_limit"),
    ("k", "hierarchy.k"),
    ("alpha", "energy.alpha"),
    ("n", "deployment.n"),
];

/// `sweep`: run the base config once per value of a sweepable parameter and
/// write one CSV row per run.
pub fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &str,
    sets: &[(String, String)],
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let Some((_, path)) = SWEEPABLE.iter().find(|(short, _)| *short == param) else {
        bail!(
            "parameter `{param}` is not sweepable (choose from {})",
            SWEEPABLE
                .iter()
                .map(|(s, _)| *s)
                .collect::<Vec<_>>()
                .join(", ")
        );
    };
    let values: Vec<&str> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        bail!("--values needs at least one value");
    }

    let mut csv = String::from("value,e_tot,lifetime_rounds,fidelity_mean_abs_error\n");
    for value in &values {
        let mut sets = sets.to_vec();
        sets.push((path.to_string(), value.to_string()));
        let cfg = load(config, &sets, seed)?;
        let report = run(&cfg)?;
        let row = format!(
            "{},{},{},{}",
            value,
            report.network_total.total(),
            report
                .lifetime_rounds
                .map(|r| r.to_string())
                .unwrap_or_default(),
            report.fidelity.mean_abs_error
        );
        println!("{row}");
        csv.push_str(&row);
        csv.push('\n');
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("sweep.csv");
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// `dump-hierarchy`: build the network for a config and emit the hierarchy
/// JSON without running any rounds.
pub fn cmd_dump_hierarchy(
    config: &Path,
    sets: &[(String, String)],
    out: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = load(config, sets, seed)?;
    let (nodes, hierarchy) = build_network(&cfg)?;
    let json = hierarchy_json(&nodes, &hierarchy);
    match out {
        Some(path) => {
            std::fs::write(path, json)?;
            println!("wrote {}", path.display());
        }
        None => print!("{json}"),
    }
    Ok(())
}
