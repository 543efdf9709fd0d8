//! `cellnet`: analyse, simulate and plan channels for multi-cell 802.11 WLANs.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cellnet::assign::{
    exhaustive_search, is_nash_equilibrium, misa, run_lri, ChannelAssignment, FiniteRhoUtility,
    LriConfig, OrderPolicy, ThetaBarUtility, Utility, DEFAULT_SEARCH_BUDGET,
};
use cellnet::config::Topology;
use cellnet::ctmc_sim::{
    expected_event_rate, simulate_replications, ActiveTimeDistribution, SimConfig,
};
use cellnet::dcf::{AccessMode, BackoffConvention, MacParams};
use cellnet::fixtures::{fixture, FIXTURE_NAMES};
use cellnet::multicell::{
    solve_fixed_point, stationary_distribution, unblocked_fractions_direct, MultiCellProblem,
    TrafficMode,
};
use cellnet::report;
use cellnet::topology::enumerate_state_space;
use cellnet::ModelError;

#[derive(Parser)]
#[command(
    name = "cellnet",
    version,
    about = "Cell-level model of multi-cell 802.11 WLANs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the fixed point and report per-cell collision probabilities and throughputs.
    Analyze(AnalyzeArgs),
    /// Simulate the cell activity chain with rates from the solved fixed point.
    Simulate(SimulateArgs),
    /// Choose channels with mISA, L_R-I or exhaustive search.
    Assign(AssignArgs),
    /// Sweep payload size or a common rho and emit plot-ready CSV.
    Sweep(SweepArgs),
    /// Write the bundled topologies.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct Source {
    /// Topology JSON file.
    #[arg(
        long,
        short,
        conflicts_with = "fixture",
        required_unless_present = "fixture"
    )]
    input: Option<PathBuf>,
    /// Use a bundled topology instead of a file.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sat,
    Tcp,
}

impl From<Mode> for TrafficMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sat => TrafficMode::Saturated,
            Mode::Tcp => TrafficMode::TcpDownload,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backoff {
    #[value(name = "w-over-2")]
    WOver2,
    #[value(name = "w-minus-1-over-2")]
    WMinus1Over2,
}

/// Overrides applied on top of the topology file's `mac` section.
#[derive(Args, Default)]
struct MacOverrides {
    /// MAC payload in bytes.
    #[arg(long)]
    mac_payload_bytes: Option<f64>,
    /// Backoff slot in microseconds.
    #[arg(long)]
    mac_slot_us: Option<f64>,
    #[arg(long)]
    mac_difs_us: Option<f64>,
    #[arg(long)]
    mac_sifs_us: Option<f64>,
    #[arg(long)]
    mac_phy_header_us: Option<f64>,
    /// Data rate in Mbit/s.
    #[arg(long)]
    mac_data_rate_mbps: Option<f64>,
    /// Control (ACK/RTS/CTS) rate in Mbit/s.
    #[arg(long)]
    mac_control_rate_mbps: Option<f64>,
    /// Minimum contention window W0.
    #[arg(long)]
    mac_cw_min: Option<u32>,
    /// Backoff stage after which the window stops doubling.
    #[arg(long)]
    mac_doubling_cap: Option<u32>,
    /// Retry limit K.
    #[arg(long)]
    mac_retry_limit: Option<u32>,
    /// Use the RTS/CTS handshake.
    #[arg(long)]
    mac_rts: bool,
    #[arg(long, value_enum)]
    mac_backoff: Option<Backoff>,
}

impl MacOverrides {
    fn apply(&self, mac: &mut MacParams) {
        let us = 1e-6;
        let mbps = 1e6;
        if let Some(v) = self.mac_payload_bytes {
            mac.payload_bits = 8.0 * v;
        }
        if let Some(v) = self.mac_slot_us {
            mac.slot_time = v * us;
        }
        if let Some(v) = self.mac_difs_us {
            mac.difs = v * us;
        }
        if let Some(v) = self.mac_sifs_us {
            mac.sifs = v * us;
        }
        if let Some(v) = self.mac_phy_header_us {
            mac.phy_header_time = v * us;
        }
        if let Some(v) = self.mac_data_rate_mbps {
            mac.data_rate = v * mbps;
        }
        if let Some(v) = self.mac_control_rate_mbps {
            mac.control_rate = v * mbps;
        }
        if let Some(v) = self.mac_cw_min {
            mac.cw_min = v;
        }
        if let Some(v) = self.mac_doubling_cap {
            mac.backoff_doubling_cap = v;
        }
        if let Some(v) = self.mac_retry_limit {
            mac.retry_limit = v;
        }
        if self.mac_rts {
            mac.access_mode = AccessMode::Rtscts;
        }
        match self.mac_backoff {
            Some(Backoff::WOver2) => mac.backoff_convention = BackoffConvention::WOver2,
            Some(Backoff::WMinus1Over2) => mac.backoff_convention = BackoffConvention::WMinus1Over2,
            None => {}
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "sat")]
    mode: Mode,
    /// Directory for cells.csv, summary.csv and report.md. Without it the
    /// table goes to stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[command(flatten)]
    mac: MacOverrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum ActiveTime {
    Exp,
    Det,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "sat")]
    mode: Mode,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Expected number of transitions per replication after warmup.
    #[arg(long, default_value_t = 1e6)]
    events: f64,
    #[arg(long, default_value_t = 1)]
    replications: u64,
    #[arg(long, default_value_t = 50)]
    batches: usize,
    #[arg(long, default_value_t = 0.1)]
    warmup: f64,
    /// Distribution of channel holding times.
    #[arg(long, value_enum, default_value = "exp")]
    active_time: ActiveTime,
    #[command(flatten)]
    mac: MacOverrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Misa,
    Lri,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityKind {
    /// Mean η_i/η over cells (the large-rho limit).
    LargeRho,
    /// Mean x from the full fixed point.
    Finite,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Lex,
    Random,
}

#[derive(Args)]
struct AssignArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "misa")]
    method: Method,
    /// Number of channels M; defaults to the file's `channels`, else 3.
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long, value_enum, default_value = "large-rho")]
    utility: UtilityKind,
    /// L_R-I learning rate.
    #[arg(long, default_value_t = 0.01)]
    lri_b: f64,
    /// L_R-I step budget.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Vertex order for mISA.
    #[arg(long, value_enum, default_value = "lex")]
    order: Order,
    /// Exhaustive search budget in assignments.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    budget: u64,
    #[arg(long, value_enum, default_value = "sat")]
    mode: Mode,
    /// Directory for assignment.json and trace.csv.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    mac: MacOverrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    /// MAC payload in bytes (the TCP data frame in tcp mode); solves the
    /// fixed point at each point.
    Payload,
    /// Common rho for every cell; product form only.
    Rho,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Explicit grid, comma separated and increasing.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    values: Option<Vec<f64>>,
    #[arg(long, requires = "to")]
    from: Option<f64>,
    #[arg(long, requires = "from")]
    to: Option<f64>,
    #[arg(long, default_value_t = 20)]
    points: usize,
    /// Space the grid logarithmically.
    #[arg(long)]
    log: bool,
    /// Override every cell's node count.
    #[arg(long)]
    n_nodes: Option<u32>,
    #[arg(long, value_enum, default_value = "sat")]
    mode: Mode,
    /// Output CSV file; stdout if absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    mac: MacOverrides,
}

#[derive(Args)]
struct FixturesArgs {
    /// Directory to write `<name>.json` files into.
    #[arg(long, short, required_unless_present = "name")]
    out: Option<PathBuf>,
    /// Print a single fixture to stdout instead.
    #[arg(long)]
    name: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Assign(a) => assign(a),
        Command::Sweep(a) => sweep(a),
        Command::Fixtures(a) => fixtures(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<ModelError>()) {
        Some(ModelError::NonConvergence { .. }) => 3,
        Some(ModelError::BudgetExceeded { .. }) => 4,
        _ => 2,
    }
}

fn load(source: &Source, mac: &MacOverrides) -> Result<Topology> {
    let mut t = match (&source.input, &source.fixture) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Topology::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(name)) => fixture(name).with_context(|| {
            format!(
                "unknown fixture {name:?}; known: {}",
                FIXTURE_NAMES.join(", ")
            )
        })?,
        (None, None) => bail!("give --input or --fixture"),
    };
    mac.apply(&mut t.mac);
    t.mac.validate()?;
    Ok(t)
}

fn problem(t: &Topology, mode: Mode) -> Result<MultiCellProblem> {
    Ok(MultiCellProblem::new(
        t.analysis_graph()?,
        t.cells.clone(),
        t.mac.clone(),
        mode.into(),
    )?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn file(dir: &Path, name: &str) -> Result<fs::File> {
    let path = dir.join(name);
    fs::File::create(&path).with_context(|| format!("writing {}", path.display()))
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let t = load(&a.source, &a.mac)?;
    let s = solve_fixed_point(&problem(&t, a.mode)?)?;
    let rows = report::cell_rows(&t.cells, &s);
    let summary = report::summary(&s);
    match &a.out {
        Some(dir) => {
            create_dir(dir)?;
            report::write_cells_csv(file(dir, "cells.csv")?, &rows)?;
            report::write_summary_csv(file(dir, "summary.csv")?, &summary)?;
            fs::write(dir.join("report.md"), report::markdown(&rows, &summary))?;
        }
        None => match a.format {
            Format::Csv => report::write_cells_csv(io::stdout().lock(), &rows)?,
            Format::Markdown => print!("{}", report::markdown(&rows, &summary)),
        },
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let t = load(&a.source, &a.mac)?;
    let s = solve_fixed_point(&problem(&t, a.mode)?)?;
    if !(a.events > 0.0) || a.replications == 0 {
        return Err(
            ModelError::Config("--events and --replications must be positive".into()).into(),
        );
    }
    let mu = s.mu();
    let rate = expected_event_rate(&s.family, &s.pi, &s.lambda, &mu);
    let cfg = SimConfig {
        horizon: a.events / rate / (1.0 - a.warmup),
        seed: a.seed,
        warmup_fraction: a.warmup,
        active_time_distribution: match a.active_time {
            ActiveTime::Exp => ActiveTimeDistribution::Exponential,
            ActiveTime::Det => ActiveTimeDistribution::Deterministic,
        },
        batches: a.batches,
    };
    let seeds: Vec<u64> = (0..a.replications)
        .map(|k| a.seed.wrapping_add(k))
        .collect();
    let est = simulate_replications(s.family.graph(), &s.lambda, &mu, &cfg, &seeds)?;
    let rows = report::cell_rows(&t.cells, &s);
    match &a.out {
        Some(dir) => {
            create_dir(dir)?;
            report::write_sim_csv(file(dir, "cells.csv")?, &rows, &est)?;
            report::write_states_csv(file(dir, "states.csv")?, &s, &est)?;
        }
        None => match a.format {
            Format::Csv => report::write_sim_csv(io::stdout().lock(), &rows, &est)?,
            Format::Markdown => {
                let mut out =
                    String::from("| cell | x | x_sim | se | z |\n|---:|---:|---:|---:|---:|\n");
                for (i, r) in rows.iter().enumerate() {
                    let z = (est.x_hat[i] - r.x) / est.x_se[i];
                    out += &format!(
                        "| {} | {:.5} | {:.5} | {:.5} | {:+.2} |\n",
                        r.id, r.x, est.x_hat[i], est.x_se[i], z
                    );
                }
                out += &format!(
                    "\n{} events, horizon {:.1} s\n",
                    est.total_events, cfg.horizon
                );
                print!("{out}");
            }
        },
    }
    Ok(())
}

fn assign(a: AssignArgs) -> Result<()> {
    let mut t = load(&a.source, &a.mac)?;
    let m = a.channels.or(t.channels).unwrap_or(3);
    let physical = t.physical.clone();
    let n = physical.n_cells();
    let utility: Box<dyn Utility> = match a.utility {
        UtilityKind::LargeRho => Box::new(ThetaBarUtility {
            physical: physical.clone(),
        }),
        UtilityKind::Finite => Box::new(FiniteRhoUtility {
            physical: physical.clone(),
            cells: t.cells.clone(),
            mac: t.mac.clone(),
            mode: a.mode.into(),
        }),
    };
    let mut trace = Vec::new();
    let chosen: ChannelAssignment = match a.method {
        Method::Misa => {
            let order = match a.order {
                Order::Lex => OrderPolicy::Lexicographic,
                Order::Random => OrderPolicy::Random(a.seed),
            };
            misa(&physical, m, order)?
        }
        Method::Lri => {
            let cfg = LriConfig {
                channels: m,
                b: a.lri_b,
                max_steps: a.steps,
                seed: a.seed,
                ..Default::default()
            };
            let out = run_lri(n, &cfg, None, utility.as_ref())?;
            if !out.converged {
                eprintln!("warning: L_R-I stopped at the step budget before converging");
            }
            trace = out.trace;
            out.assignment
        }
        Method::Exhaustive => exhaustive_search(&physical, m, utility.as_ref(), a.budget)?.0,
    };
    let nash = is_nash_equilibrium(&physical, &chosen, utility.as_ref())?;
    println!(
        "assignment {:?}, U = {:.6} (Theta_bar = {:.4}), Nash: {}",
        chosen.channels(),
        nash.utility,
        nash.utility * n as f64,
        nash.is_nash
    );
    t.channels = Some(m);
    t.assignment = Some(chosen);
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        fs::write(dir.join("assignment.json"), t.to_json() + "\n")?;
        let mut w = csv::Writer::from_writer(file(dir, "trace.csv")?);
        w.write_record(["step", "utility"])?;
        for (k, u) in trace.iter().enumerate() {
            w.write_record([(k + 1).to_string(), u.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn grid(a: &SweepArgs) -> Result<Vec<f64>> {
    let values = match (&a.values, a.from, a.to) {
        (Some(v), _, _) => v.clone(),
        (None, Some(lo), Some(hi)) => {
            if a.points < 2 {
                bail!(ModelError::Config("--points must be at least 2".into()));
            }
            let k = (a.points - 1) as f64;
            (0..a.points)
                .map(|i| {
                    let f = i as f64 / k;
                    if a.log {
                        (lo.ln() + f * (hi.ln() - lo.ln())).exp()
                    } else {
                        lo + f * (hi - lo)
                    }
                })
                .collect()
        }
        _ => bail!(ModelError::Config("give --values or --from/--to".into())),
    };
    if values.is_empty()
        || values.windows(2).any(|w| w[1] <= w[0])
        || values.iter().any(|v| !(*v > 0.0))
    {
        bail!(ModelError::Config(
            "sweep grid must be positive and strictly increasing".into()
        ));
    }
    Ok(values)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut t = load(&a.source, &a.mac)?;
    if let Some(n) = a.n_nodes {
        for c in &mut t.cells {
            c.n_nodes = n;
        }
    }
    let values = grid(&a)?;
    let n = t.n_cells();
    let sink: Box<dyn Write> = match &a.out {
        Some(path) => {
            Box::new(fs::File::create(path).with_context(|| format!("writing {}", path.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![match a.param {
        SweepParam::Payload => "payload_bytes".to_string(),
        SweepParam::Rho => "rho".to_string(),
    }];
    if let SweepParam::Payload = a.param {
        header.extend((1..=n).map(|i| format!("gamma_{i}")));
    }
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.push("theta_bar".into());
    w.write_record(&header)?;

    match a.param {
        SweepParam::Payload => {
            for &v in &values {
                let mut p = problem(&t, a.mode)?;
                match a.mode {
                    Mode::Sat => p.mac.payload_bits = 8.0 * v,
                    Mode::Tcp => p.mac.tcp_data_bits = 8.0 * v,
                }
                let s = solve_fixed_point(&p)?;
                let mut rec = vec![v.to_string()];
                rec.extend(s.gamma.iter().map(f64::to_string));
                rec.extend(s.x.iter().map(f64::to_string));
                rec.push(s.theta_bar.to_string());
                w.write_record(&rec)?;
            }
        }
        SweepParam::Rho => {
            let fam = enumerate_state_space(&t.analysis_graph()?)?;
            for &v in &values {
                let x =
                    unblocked_fractions_direct(&fam, &stationary_distribution(&fam, &vec![v; n]));
                let mut rec = vec![v.to_string()];
                rec.extend(x.iter().map(f64::to_string));
                rec.push(x.iter().sum::<f64>().to_string());
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn fixtures(a: FixturesArgs) -> Result<()> {
    if let Some(name) = &a.name {
        let t = fixture(name).with_context(|| {
            format!(
                "unknown fixture {name:?}; known: {}",
                FIXTURE_NAMES.join(", ")
            )
        })?;
        println!("{}", t.to_json());
        return Ok(());
    }
    let dir = a
        .out
        .as_deref()
        .expect("clap requires --out without --name");
    create_dir(dir)?;
    for name in FIXTURE_NAMES {
        let t = fixture(name).expect("bundled");
        fs::write(dir.join(format!("{name}.json")), t.to_json() + "\n")?;
        println!("{}", dir.join(format!("{name}.json")).display());
    }
    Ok(())
}
