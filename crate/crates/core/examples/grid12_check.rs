//! Verifies the properties the twelve-cell fixture is built to have:
//! the row design gives three 4-chains, there is a design with every
//! x = 1/3 and one with every x = 1/2, the three-channel optimum, and
//! where L_R-I (b = 0.01) ends up over 20 seeds.

use std::collections::BTreeMap;
use std::time::Instant;

use cellnet::assign::{
    exhaustive_search, run_lri, theta_bar_inf_x, LriConfig, ThetaBarUtility, DEFAULT_SEARCH_BUDGET,
};
use cellnet::fixtures::{fixture, grid12_pairs, grid12_rows, grid12_triangles};
use cellnet::multicell::jain_fairness;
use cellnet::topology::EnumerationBudget;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = fixture("grid12").expect("bundled");
    let g = &t.physical;
    println!("edges: {} (max degree {})", g.n_edges(), g.max_degree());
    println!("{:?}", g.edges());

    for (name, c) in [
        ("rows", grid12_rows()),
        ("triangles", grid12_triangles()),
        ("pairs", grid12_pairs()),
    ] {
        let x = theta_bar_inf_x(g, &c, EnumerationBudget::default())?;
        let (j, _) = jain_fairness(&x);
        let xs: Vec<String> = x.iter().map(|v| format!("{v:.3}")).collect();
        println!(
            "{name:>9}: Theta_bar {:.4}, J {:.4}, x = [{}]",
            x.iter().sum::<f64>(),
            j,
            xs.join(", ")
        );
    }

    let u = ThetaBarUtility {
        physical: g.clone(),
    };
    let start = Instant::now();
    let (best, bu) = exhaustive_search(g, 3, &u, DEFAULT_SEARCH_BUDGET)?;
    println!(
        "exhaustive M=3: Theta_bar {:.4} at {:?} ({:.1?})",
        bu * 12.0,
        best.channels(),
        start.elapsed()
    );

    let mut modes: BTreeMap<String, usize> = BTreeMap::new();
    for seed in 1..=20u64 {
        let cfg = LriConfig {
            channels: 3,
            b: 0.01,
            seed,
            ..Default::default()
        };
        let start = Instant::now();
        let out = run_lri(12, &cfg, None, &u)?;
        let tb = out.utility * 12.0;
        println!(
            "seed {seed:>2}: Theta_bar {tb:.3} converged {} after {} steps ({:.1?}) {:?}",
            out.converged,
            out.state.step,
            start.elapsed(),
            out.assignment.channels()
        );
        *modes.entry(format!("{tb:.3}")).or_default() += 1;
    }
    println!("L_R-I outcomes: {modes:?}");
    Ok(())
}
