//! Tabular output of solutions: CSV for machines, markdown for people.
//!
//! Per-cell CSV columns, in order:
//! `id, n, beta, gamma, x, Theta, theta, x_inf, theta_inf, starved`.
//! Simulation reports append `x_sim, x_sim_se`. In TCP mode `n` is the
//! number of STAs from the topology while `theta` is the AP throughput.

use std::io::Write;

use serde::Serialize;

use crate::ctmc_sim::SimEstimate;
use crate::multicell::FixedPointSolution;
use crate::topology::CellSpec;

pub const CELL_COLUMNS: [&str; 10] = [
    "id",
    "n",
    "beta",
    "gamma",
    "x",
    "Theta",
    "theta",
    "x_inf",
    "theta_inf",
    "starved",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub id: usize,
    pub n: u32,
    pub beta: f64,
    pub gamma: f64,
    pub x: f64,
    #[serde(rename = "Theta")]
    pub theta_cell: f64,
    pub theta: f64,
    pub x_inf: f64,
    pub theta_inf: f64,
    pub starved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub theta_bar: f64,
    pub theta_bar_inf: f64,
    pub jain: f64,
    pub jain_degenerate: bool,
    pub alpha: usize,
    pub eta: u64,
    pub states: usize,
    pub iterations: usize,
    pub residual: f64,
}

pub fn cell_rows(cells: &[CellSpec], s: &FixedPointSolution) -> Vec<CellRow> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| CellRow {
            id: c.id,
            n: c.n_nodes,
            beta: s.beta[i],
            gamma: s.gamma[i],
            x: s.x[i],
            theta_cell: s.theta_cell[i],
            theta: s.theta_node[i],
            x_inf: s.x_inf[i],
            theta_inf: s.theta_node_inf[i],
            starved: s.starved[i],
        })
        .collect()
}

pub fn summary(s: &FixedPointSolution) -> Summary {
    let (jain, jain_degenerate) = s.jain();
    Summary {
        theta_bar: s.theta_bar,
        theta_bar_inf: s.theta_bar_inf,
        jain,
        jain_degenerate,
        alpha: s.family.alpha(),
        eta: s.family.eta(),
        states: s.family.len(),
        iterations: s.iterations,
        residual: s.residual,
    }
}

pub fn write_cells_csv<W: Write>(out: W, rows: &[CellRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SimRow {
    id: usize,
    n: u32,
    beta: f64,
    gamma: f64,
    x: f64,
    #[serde(rename = "Theta")]
    theta_cell: f64,
    theta: f64,
    x_inf: f64,
    theta_inf: f64,
    starved: bool,
    x_sim: f64,
    x_sim_se: f64,
}

pub fn write_sim_csv<W: Write>(out: W, rows: &[CellRow], est: &SimEstimate) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, r) in rows.iter().enumerate() {
        w.serialize(SimRow {
            id: r.id,
            n: r.n,
            beta: r.beta,
            gamma: r.gamma,
            x: r.x,
            theta_cell: r.theta_cell,
            theta: r.theta,
            x_inf: r.x_inf,
            theta_inf: r.theta_inf,
            starved: r.starved,
            x_sim: est.x_hat[i],
            x_sim_se: est.x_se[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One row per state: `state, pi, pi_sim, pi_sim_se`; the state is written
/// as space-separated ids, empty for the idle state.
pub fn write_states_csv<W: Write>(
    out: W,
    s: &FixedPointSolution,
    est: &SimEstimate,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "pi", "pi_sim", "pi_sim_se"])?;
    for (st, p) in s.family.states().iter().zip(&s.pi) {
        let ids: Vec<String> = st.active.ids().iter().map(|i| i.to_string()).collect();
        w.write_record([
            ids.join(" "),
            p.to_string(),
            est.pi_hat_of(&st.active).to_string(),
            est.pi_se_of(&st.active).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, s: &Summary) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.serialize(s)?;
    w.flush()?;
    Ok(())
}

/// Markdown table with the per-cell columns plus a summary line.
pub fn markdown(rows: &[CellRow], s: &Summary) -> String {
    let mut out = String::new();
    out.push_str("| cell | n | beta | gamma | x | Theta | theta | x_inf | theta_inf |\n");
    out.push_str("|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {}{} | {} | {:.4} | {:.4} | {:.4} | {:.2} | {:.2} | {:.4} | {:.2} |\n",
            r.id,
            if r.starved { "*" } else { "" },
            r.n,
            r.beta,
            r.gamma,
            r.x,
            r.theta_cell,
            r.theta,
            r.x_inf,
            r.theta_inf
        ));
    }
    out.push_str(&format!(
        "\nTheta_bar = {:.4} (large-rho {:.0}), J = {:.4}{}, alpha = {}, eta = {}, {} states, {} iterations\n",
        s.theta_bar,
        s.theta_bar_inf,
        s.jain,
        if s.jain_degenerate { " (all zero)" } else { "" },
        s.alpha,
        s.eta,
        s.states,
        s.iterations
    ));
    if rows.iter().any(|r| r.starved) {
        out.push_str("* starved: never in backoff, gamma reported as 1\n");
    }
    out
}
