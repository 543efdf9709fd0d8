//! Prints the analytical tables for the bundled fixtures.

use cellnet::dcf::{single_cell, tcp_equivalent_cell, MacParams};
use cellnet::fixtures::fixture;
use cellnet::multicell::{solve_fixed_point, MultiCellProblem, TrafficMode};
use cellnet::report::{cell_rows, markdown, summary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mac = MacParams::default();
    println!("single cell (saturated)");
    println!("| n | gamma | theta |");
    for n in [1, 2, 3, 4, 5, 6, 7, 8, 10] {
        let r = single_cell(n, &mac)?;
        println!(
            "| {n} | {:.4} | {:.2} |",
            r.gamma,
            r.throughput_pps / n as f64
        );
    }
    let (n, eff) = tcp_equivalent_cell(&mac);
    let r = single_cell(n, &eff)?;
    println!(
        "TCP AP: gamma {:.4}, theta {:.2}\n",
        r.gamma,
        r.throughput_pps / n as f64
    );

    for (name, mode) in [
        ("path4", TrafficMode::Saturated),
        ("path5", TrafficMode::Saturated),
        ("hex7", TrafficMode::Saturated),
        ("arbitrary7", TrafficMode::Saturated),
        ("path4", TrafficMode::TcpDownload),
        ("path5", TrafficMode::TcpDownload),
        ("arbitrary7", TrafficMode::TcpDownload),
    ] {
        let t = fixture(name).expect("bundled");
        let p = MultiCellProblem::new(t.physical.clone(), t.cells.clone(), t.mac.clone(), mode)?;
        let s = solve_fixed_point(&p)?;
        println!("{name} ({mode:?})");
        println!("{}", markdown(&cell_rows(&t.cells, &s), &summary(&s)));
    }
    Ok(())
}
