//! Browser bindings for the cellnet model.
//!
//! Every export takes and returns JSON strings. The plain `*_json`
//! functions hold the logic and are what the native tests call; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cellnet::assign::{is_nash_equilibrium, run_lri, LriConfig, ThetaBarUtility};
use cellnet::config::Topology;
use cellnet::fixtures::{fixture, FIXTURE_NAMES};
use cellnet::multicell::{solve_fixed_point, MultiCellProblem, TrafficMode};
use cellnet::report::{cell_rows, summary, CellRow, Summary};

/// Upper bound on L_R-I steps a page may request.
pub const MAX_LRI_STEPS: u64 = 2_000_000;

fn mode(s: &str) -> Result<TrafficMode, String> {
    match s {
        "sat" | "saturated" => Ok(TrafficMode::Saturated),
        "tcp" => Ok(TrafficMode::TcpDownload),
        other => Err(format!("unknown mode {other:?}; use \"sat\" or \"tcp\"")),
    }
}

fn parse(topology: &str) -> Result<Topology, String> {
    Topology::from_json(topology).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Layout {
    positions: Vec<Option<(f64, f64)>>,
    /// Edges of the graph the analysis ran on (1-based ids).
    edges: Vec<(usize, usize)>,
    assignment: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct Analysis {
    cells: Vec<CellRow>,
    rho: Vec<f64>,
    summary: Summary,
    layout: Layout,
}

pub fn fixture_names_json() -> String {
    serde_json::to_string(&FIXTURE_NAMES).expect("static list")
}

pub fn fixture_json(name: &str) -> Result<String, String> {
    fixture(name)
        .map(|t| t.to_json())
        .ok_or_else(|| format!("unknown fixture {name:?}"))
}

/// Solves the fixed point. `payload_bytes` overrides the MAC payload
/// (the TCP data frame in tcp mode).
pub fn analyze_json(
    topology: &str,
    mode_name: &str,
    payload_bytes: Option<f64>,
) -> Result<String, String> {
    let mut t = parse(topology)?;
    let mode = mode(mode_name)?;
    if let Some(b) = payload_bytes {
        match mode {
            TrafficMode::Saturated => t.mac.payload_bits = 8.0 * b,
            TrafficMode::TcpDownload => t.mac.tcp_data_bits = 8.0 * b,
        }
    }
    let graph = t.analysis_graph().map_err(|e| e.to_string())?;
    let problem = MultiCellProblem::new(graph.clone(), t.cells.clone(), t.mac.clone(), mode)
        .map_err(|e| e.to_string())?;
    let s = solve_fixed_point(&problem).map_err(|e| e.to_string())?;
    to_json(&Analysis {
        cells: cell_rows(&t.cells, &s),
        rho: s.rho.clone(),
        summary: summary(&s),
        layout: Layout {
            positions: t.cells.iter().map(|c| c.position).collect(),
            edges: graph.edges(),
            assignment: t.assignment.as_ref().map(|a| a.channels().to_vec()),
        },
    })
}

#[derive(Serialize)]
struct Sweep {
    payload_bytes: Vec<f64>,
    /// `gamma[k][i]`: cell i+1 at grid point k.
    gamma: Vec<Vec<f64>>,
    x: Vec<Vec<f64>>,
    x_inf: Vec<f64>,
    theta_bar: Vec<f64>,
}

/// x and γ over an evenly spaced payload grid.
pub fn payload_sweep_json(
    topology: &str,
    mode_name: &str,
    from_bytes: f64,
    to_bytes: f64,
    points: usize,
    n_nodes: Option<u32>,
) -> Result<String, String> {
    if !(from_bytes > 0.0 && to_bytes > from_bytes) || !(2..=200).contains(&points) {
        return Err("need 0 < from < to and 2..=200 points".into());
    }
    let mut t = parse(topology)?;
    if let Some(n) = n_nodes {
        for c in &mut t.cells {
            c.n_nodes = n;
        }
    }
    let mode = mode(mode_name)?;
    let graph = t.analysis_graph().map_err(|e| e.to_string())?;
    let mut out = Sweep {
        payload_bytes: Vec::new(),
        gamma: Vec::new(),
        x: Vec::new(),
        x_inf: Vec::new(),
        theta_bar: Vec::new(),
    };
    for k in 0..points {
        let bytes = from_bytes + (to_bytes - from_bytes) * k as f64 / (points - 1) as f64;
        let mut mac = t.mac.clone();
        match mode {
            TrafficMode::Saturated => mac.payload_bits = 8.0 * bytes,
            TrafficMode::TcpDownload => mac.tcp_data_bits = 8.0 * bytes,
        }
        let p = MultiCellProblem::new(graph.clone(), t.cells.clone(), mac, mode)
            .map_err(|e| e.to_string())?;
        let s = solve_fixed_point(&p).map_err(|e| e.to_string())?;
        out.payload_bytes.push(bytes);
        out.gamma.push(s.gamma);
        out.x.push(s.x);
        out.theta_bar.push(s.theta_bar);
        out.x_inf = s.x_inf;
    }
    to_json(&out)
}

#[derive(Serialize)]
struct LriRun {
    assignment: Vec<usize>,
    theta_bar: f64,
    converged: bool,
    steps: u64,
    is_nash: bool,
    /// Block means of the sampled utility, at most `max_points` of them.
    trace: Vec<f64>,
    /// Steps covered by each trace entry.
    block: usize,
    probabilities: Vec<Vec<f64>>,
}

/// Runs L_R-I with the large-ρ utility from a uniform start.
pub fn lri_trace_json(
    topology: &str,
    channels: usize,
    b: f64,
    seed: u64,
    max_steps: u64,
    max_points: usize,
) -> Result<String, String> {
    let t = parse(topology)?;
    if max_steps == 0 || max_steps > MAX_LRI_STEPS {
        return Err(format!("max_steps must be in 1..={MAX_LRI_STEPS}"));
    }
    let n = t.n_cells();
    let utility = ThetaBarUtility {
        physical: t.physical.clone(),
    };
    let cfg = LriConfig {
        channels,
        b,
        max_steps,
        seed,
        ..Default::default()
    };
    let out = run_lri(n, &cfg, None, &utility).map_err(|e| e.to_string())?;
    let nash =
        is_nash_equilibrium(&t.physical, &out.assignment, &utility).map_err(|e| e.to_string())?;
    let block = out.trace.len().div_ceil(max_points.max(1)).max(1);
    let trace = out
        .trace
        .chunks(block)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64 * n as f64)
        .collect();
    to_json(&LriRun {
        assignment: out.assignment.channels().to_vec(),
        theta_bar: out.utility * n as f64,
        converged: out.converged,
        steps: out.state.step,
        is_nash: nash.is_nash,
        trace,
        block,
        probabilities: out.state.p,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fixtureNames)]
pub fn fixture_names() -> String {
    fixture_names_json()
}

#[wasm_bindgen(js_name = fixture)]
pub fn fixture_js(name: &str) -> Result<String, JsError> {
    js(fixture_json(name))
}

#[wasm_bindgen]
pub fn analyze(topology: &str, mode: &str, payload_bytes: Option<f64>) -> Result<String, JsError> {
    js(analyze_json(topology, mode, payload_bytes))
}

#[wasm_bindgen(js_name = payloadSweep)]
pub fn payload_sweep(
    topology: &str,
    mode: &str,
    from_bytes: f64,
    to_bytes: f64,
    points: usize,
    n_nodes: Option<u32>,
) -> Result<String, JsError> {
    js(payload_sweep_json(
        topology, mode, from_bytes, to_bytes, points, n_nodes,
    ))
}

#[wasm_bindgen(js_name = lriTrace)]
pub fn lri_trace(
    topology: &str,
    channels: usize,
    b: f64,
    seed: u32,
    max_steps: u32,
    max_points: usize,
) -> Result<String, JsError> {
    js(lri_trace_json(
        topology,
        channels,
        b,
        seed.into(),
        max_steps.into(),
        max_points,
    ))
}
