//! Where the exactly removable connections sit in the weight-magnitude ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netio::Network;

/// One weight of the original network: `layers[layer].weights[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

pub fn connections_to_csv(conns: &[Connection]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layer", "row", "col", "weight"])
        .expect("in-memory write");
    for c in conns {
        w.serialize((c.layer, c.row, c.col, c.weight))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn connections_from_csv(text: &str) -> Result<Vec<Connection>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::parse("connection csv", e)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnitudeStats {
    pub total_connections: usize,
    pub removed: usize,
    /// Per removed connection: percent of all connections with `|w'| <= |w|`.
    pub percentiles: Vec<f64>,
    pub max_percentile: Option<f64>,
    /// Fraction of removed connections that pruning the same number of
    /// smallest-magnitude weights would not remove.
    pub missed_by_magnitude: Option<f64>,
}

/// Ranks every removed connection among all nonzero weights of `net`.
pub fn magnitude_analysis(net: &Network, removed: &[Connection]) -> Result<MagnitudeStats> {
    let mut all: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        for (r, row) in layer.weights.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                if *w != 0.0 {
                    all.push((w.abs(), l, r, c));
                }
            }
        }
    }
    for c in removed {
        let actual = net
            .layers()
            .get(c.layer)
            .and_then(|l| l.weights.get(c.row))
            .and_then(|r| r.get(c.col));
        if actual != Some(&c.weight) {
            return Err(Error::Precondition(format!(
                "connection ({}, {}, {}) with weight {} is not in the network",
                c.layer, c.row, c.col, c.weight
            )));
        }
    }
    let total = all.len();
    if removed.is_empty() || total == 0 {
        return Ok(MagnitudeStats {
            total_connections: total,
            removed: removed.len(),
            percentiles: Vec::new(),
            max_percentile: None,
            missed_by_magnitude: None,
        });
    }
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
    let mags: Vec<f64> = all.iter().map(|e| e.0).collect();
    let percentiles: Vec<f64> = removed
        .iter()
        .map(|c| {
            let at_most = mags.partition_point(|m| *m <= c.weight.abs());
            100.0 * at_most as f64 / total as f64
        })
        .collect();
    let pruned: std::collections::HashSet<(usize, usize, usize)> = all
        .iter()
        .take(removed.len())
        .map(|e| (e.1, e.2, e.3))
        .collect();
    let missed = removed
        .iter()
        .filter(|c| c.weight != 0.0 && !pruned.contains(&(c.layer, c.row, c.col)))
        .count();
    Ok(MagnitudeStats {
        total_connections: total,
        removed: removed.len(),
        max_percentile: percentiles.iter().copied().reduce(f64::max),
        percentiles,
        missed_by_magnitude: Some(missed as f64 / removed.len() as f64),
    })
}
