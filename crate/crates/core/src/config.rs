//! JSON topology files.
//!
//! ```json
//! {
//!   "comment": "optional free text",
//!   "cells": [{"id": 1, "x": 0.0, "y": 0.0, "n_nodes": 5}, ...],
//!   "r_cs": 150.0,
//!   "edges": [[1, 2], [2, 3]],
//!   "channels": 3,
//!   "assignment": [1, 2, 1],
//!   "mac": {"payload_bits": 8000.0}
//! }
//! ```
//!
//! Ids are 1-based. `edges` wins over coordinates when both are given.
//! `assignment` turns the physical graph into the logical one for analysis;
//! without `channels` the largest channel it uses is taken as M. `mac` overrides any subset of [`MacParams`].

use serde::{Deserialize, Serialize};

use crate::assign::ChannelAssignment;
use crate::dcf::MacParams;
use crate::error::{ModelError, Result};
use crate::topology::{build_physical_graph, logical_graph, CellSpec, ContentionGraph, GraphKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    pub n_nodes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub cells: Vec<CellEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_cs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac: Option<MacParams>,
}

/// A parsed and validated topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub comment: Option<String>,
    pub cells: Vec<CellSpec>,
    pub r_cs: Option<f64>,
    pub physical: ContentionGraph,
    pub channels: Option<usize>,
    pub assignment: Option<ChannelAssignment>,
    pub mac: MacParams,
}

impl Topology {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TopologyFile =
            serde_json::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: TopologyFile) -> Result<Self> {
        if file.cells.is_empty() {
            return Err(ModelError::Config("topology has no cells".into()));
        }
        let mut entries = file.cells;
        entries.sort_by_key(|c| c.id);
        let cells: Vec<CellSpec> = entries
            .iter()
            .map(|c| CellSpec {
                id: c.id,
                position: c.x.zip(c.y),
                n_nodes: c.n_nodes,
            })
            .collect();
        crate::topology::validate_cells(&cells)?;
        let physical = match (&file.edges, file.r_cs) {
            (Some(edges), _) => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
                ContentionGraph::new(cells.len(), &pairs, GraphKind::Physical)?
            }
            (None, Some(r)) => build_physical_graph(&cells, r)?,
            (None, None) => {
                if cells.len() == 1 {
                    ContentionGraph::edgeless(1)
                } else {
                    return Err(ModelError::Config(
                        "give either `edges` or `r_cs` with cell coordinates".into(),
                    ));
                }
            }
        };
        let assignment = match &file.assignment {
            Some(a) => {
                if a.len() != cells.len() {
                    return Err(ModelError::LengthMismatch {
                        expected: cells.len(),
                        found: a.len(),
                    });
                }
                let m = file
                    .channels
                    .unwrap_or_else(|| a.iter().copied().max().unwrap_or(1));
                Some(ChannelAssignment::new(a.clone(), m)?)
            }
            None => None,
        };
        let mac = file.mac.unwrap_or_default();
        mac.validate()?;
        Ok(Topology {
            comment: file.comment,
            cells,
            r_cs: file.r_cs,
            physical,
            channels: file.channels,
            assignment,
            mac,
        })
    }

    /// Serializable form. Edges are always written so the file is
    /// self-contained even when the graph came from coordinates.
    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            comment: self.comment.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| CellEntry {
                    id: c.id,
                    x: c.position.map(|p| p.0),
                    y: c.position.map(|p| p.1),
                    n_nodes: c.n_nodes,
                })
                .collect(),
            r_cs: self.r_cs,
            edges: Some(self.physical.edges().iter().map(|&(i, j)| [i, j]).collect()),
            channels: self.channels,
            assignment: self.assignment.as_ref().map(|a| a.channels().to_vec()),
            mac: if self.mac == MacParams::default() {
                None
            } else {
                Some(self.mac.clone())
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("topology serializes")
    }

    /// Graph the model runs on: logical if an assignment is present.
    pub fn analysis_graph(&self) -> Result<ContentionGraph> {
        match &self.assignment {
            Some(a) => logical_graph(&self.physical, a),
            None => Ok(self.physical.clone()),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }
}
