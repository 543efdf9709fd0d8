//! Bundled reference topologies.

use crate::assign::ChannelAssignment;
use crate::config::Topology;
use crate::dcf::MacParams;
use crate::topology::{build_physical_graph, CellSpec, ContentionGraph, GraphKind};

pub const FIXTURE_NAMES: [&str; 5] = ["path4", "path5", "hex7", "arbitrary7", "grid12"];

/// Carrier-sense range used by the geometric fixtures, meters.
pub const R_CS: f64 = 150.0;

pub fn fixture(name: &str) -> Option<Topology> {
    match name {
        "path4" => Some(line(
            4,
            5,
            "Four cells on a line, 100 m apart; each hears only its neighbours.",
        )),
        "path5" => Some(line(
            5,
            5,
            "Five cells on a line, 100 m apart; each hears only its neighbours.",
        )),
        "hex7" => Some(hex7()),
        "arbitrary7" => Some(arbitrary7()),
        "grid12" => Some(grid12()),
        _ => None,
    }
}

fn geometric(comment: &str, cells: Vec<CellSpec>) -> Topology {
    let physical = build_physical_graph(&cells, R_CS).expect("fixture geometry is valid");
    Topology {
        comment: Some(comment.to_string()),
        cells,
        r_cs: Some(R_CS),
        physical,
        channels: None,
        assignment: None,
        mac: MacParams::default(),
    }
}

fn line(n: usize, n_nodes: u32, comment: &str) -> Topology {
    let cells = (1..=n)
        .map(|i| CellSpec::at(i, n_nodes, 100.0 * (i - 1) as f64, 0.0))
        .collect();
    geometric(comment, cells)
}

fn hex7() -> Topology {
    let mut cells = vec![CellSpec::at(1, 10, 0.0, 0.0)];
    for k in 0..6 {
        let a = std::f64::consts::PI / 3.0 * k as f64;
        cells.push(CellSpec::at(k + 2, 10, 100.0 * a.cos(), 100.0 * a.sin()));
    }
    geometric(
        "Centre cell 1 ringed by cells 2-7 at 100 m; ring neighbours hear each other, \
         opposite ring cells do not.",
        cells,
    )
}

/// Edges of the seven-cell irregular layout.
pub const ARBITRARY7_EDGES: [(usize, usize); 6] = [(1, 3), (2, 3), (3, 4), (4, 5), (4, 6), (6, 7)];

fn arbitrary7() -> Topology {
    let cells = (1..=7).map(|i| CellSpec::new(i, i as u32 + 1)).collect();
    Topology {
        comment: Some(
            "Seven-cell irregular layout given only as an edge list; cell i has i+1 nodes.".into(),
        ),
        cells,
        r_cs: None,
        physical: ContentionGraph::new(7, &ARBITRARY7_EDGES, GraphKind::Physical)
            .expect("fixture edges are valid"),
        channels: Some(2),
        assignment: None,
        mac: MacParams::default(),
    }
}

fn grid12() -> Topology {
    let mut cells = Vec::new();
    for row in 0..3 {
        for col in 0..4 {
            let x = 100.0 * col as f64 + if row == 1 { 50.0 } else { 0.0 };
            cells.push(CellSpec::at(cells.len() + 1, 5, x, 50.0 * row as f64));
        }
    }
    let mut t = geometric(
        "Twelve cells in three rows of four, 100 m apart within a row, rows 50 m apart \
         with the middle row shifted 50 m. Each row is a chain of four.",
        cells,
    );
    t.channels = Some(3);
    t
}

/// Channel-per-row design: three separate 4-cell chains.
pub fn grid12_rows() -> ChannelAssignment {
    ChannelAssignment::new(vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3], 3).expect("valid")
}

/// Design in which every co-channel component is a triangle.
pub fn grid12_triangles() -> ChannelAssignment {
    ChannelAssignment::new(vec![1, 1, 2, 1, 3, 3, 1, 1, 1, 3, 2, 2], 3).expect("valid")
}

/// Design in which every co-channel component is a single edge.
pub fn grid12_pairs() -> ChannelAssignment {
    ChannelAssignment::new(vec![1, 1, 2, 1, 2, 3, 1, 3, 2, 3, 2, 3], 3).expect("valid")
}

/// Two-channel optimum of the seven-cell layout.
pub fn arbitrary7_optimum() -> ChannelAssignment {
    ChannelAssignment::new(vec![1, 1, 2, 1, 2, 2, 1], 2).expect("valid")
}

/// Two-channel assignment of the seven-cell layout that is a Nash
/// equilibrium but not an optimum.
pub fn arbitrary7_local() -> ChannelAssignment {
    ChannelAssignment::new(vec![1, 1, 2, 2, 1, 1, 2], 2).expect("valid")
}
