//! Weighted directed AOI graphs, motif enumeration and DOT/JSON export.
//!
//! Nodes are AOIs sized by their fixation totals; edges carry smoothed
//! transition probabilities. Self-loops are kept both as edges and as a
//! per-node annotation so they survive any edge threshold.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{round_json, sig6};
use crate::tna::{Analysis, TransitionCounts, TransitionMatrix};

/// Version tag written into every JSON network export.
pub const NETWORK_SCHEMA: &str = "gaze-tna/network/v1";

/// Edge probability at or above which motifs are reported by default.
pub const DEFAULT_MOTIF_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub aoi: String,
    pub fixation_total: u64,
    /// Unweighted diagonal entry `P[i][i]`.
    pub raw_self_loop_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEdge {
    pub from: String,
    pub to: String,
    pub probability: f64,
    pub raw_count: u64,
}

/// What the network aggregates over and how it was estimated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetadata {
    pub participant: Option<String>,
    pub role: Option<String>,
    pub stage: Option<String>,
    pub alpha: f64,
    pub min_prob: f64,
    pub entropy: Option<f64>,
    pub self_loop_rate: Option<f64>,
    pub n_fixations: u64,
    pub n_transitions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnaNetwork {
    pub schema: String,
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<NetworkEdge>,
    pub metadata: NetworkMetadata,
}

impl TnaNetwork {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.aoi.as_str(), i))
            .collect()
    }
}

/// Builds the graph for one matrix. Edges with positive probability at or
/// above `min_prob` are emitted in row-major AOI order.
pub fn build_network(
    p: &TransitionMatrix,
    c: &TransitionCounts,
    min_prob: f64,
) -> Result<TnaNetwork> {
    if !(0.0..1.0).contains(&min_prob) {
        return Err(Error::Config(format!(
            "min_prob must lie in [0, 1), got {min_prob}"
        )));
    }
    if p.aoi_order() != c.aoi_order() {
        return Err(Error::Config(
            "matrix and counts use different AOI orders".into(),
        ));
    }
    let k = p.k();
    let order = p.aoi_order();
    let mut edges = Vec::new();
    let mut incident = vec![false; k];
    for i in (0..k).filter(|&i| p.has_support(i)) {
        for j in 0..k {
            let prob = p.prob(i, j);
            if prob > 0.0 && prob >= min_prob {
                incident[i] = true;
                incident[j] = true;
                edges.push(NetworkEdge {
                    from: order[i].clone(),
                    to: order[j].clone(),
                    probability: prob,
                    raw_count: c.count(i, j),
                });
            }
        }
    }
    let nodes = (0..k)
        .filter(|&i| c.fixation_totals()[i] > 0 || incident[i])
        .map(|i| NetworkNode {
            aoi: order[i].clone(),
            fixation_total: c.fixation_totals()[i],
            raw_self_loop_prob: p.prob(i, i),
        })
        .collect();
    let self_loop_rate = (c.total_fixations() > 0).then(|| {
        let total = c.total_fixations() as f64;
        (0..k)
            .filter(|&i| p.has_support(i))
            .map(|i| c.fixation_totals()[i] as f64 / total * p.prob(i, i))
            .sum()
    });
    Ok(TnaNetwork {
        schema: NETWORK_SCHEMA.to_string(),
        nodes,
        edges,
        metadata: NetworkMetadata {
            alpha: p.alpha(),
            min_prob,
            self_loop_rate,
            n_fixations: c.total_fixations(),
            n_transitions: c.total_transitions(),
            ..NetworkMetadata::default()
        },
    })
}

/// Network for an analysis, carrying its entropy and self-loop metrics.
pub fn network_from_analysis(analysis: &Analysis, min_prob: f64) -> Result<TnaNetwork> {
    let mut net = build_network(&analysis.matrix, &analysis.counts, min_prob)?;
    net.metadata.entropy = analysis.metrics.entropy;
    net.metadata.self_loop_rate = Some(analysis.metrics.self_loop_rate);
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotifKind {
    Dyad,
    Triad,
}

impl MotifKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MotifKind::Dyad => "dyad",
            MotifKind::Triad => "triad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub kind: MotifKind,
    pub members: Vec<String>,
    /// Weakest edge of the strongest qualifying orientation.
    pub min_edge_prob: f64,
}

/// Bidirectional pairs and closed three-node loops whose edges all reach
/// `threshold`. Self-loops never count toward motif membership.
pub fn find_motifs(net: &TnaNetwork, threshold: f64) -> Result<Vec<Motif>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "motif threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let index = net.node_index();
    let n = net.nodes.len();
    let mut w = vec![0.0f64; n * n];
    for e in net.edges.iter().filter(|e| e.from != e.to) {
        if let (Some(&i), Some(&j)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) {
            w[i * n + j] = e.probability;
        }
    }
    let edge = |a: usize, b: usize| w[a * n + b];
    let strongest_loop = |loops: &[&[(usize, usize)]]| -> Option<f64> {
        loops
            .iter()
            .map(|cycle| {
                cycle
                    .iter()
                    .map(|&(a, b)| edge(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .filter(|&m| m >= threshold)
            .reduce(f64::max)
    };

    let mut found: Vec<(Motif, Vec<usize>)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if let Some(m) = strongest_loop(&[&[(a, b), (b, a)]]) {
                found.push((
                    Motif {
                        kind: MotifKind::Dyad,
                        members: vec![net.nodes[a].aoi.clone(), net.nodes[b].aoi.clone()],
                        min_edge_prob: m,
                    },
                    vec![a, b],
                ));
            }
            for c in b + 1..n {
                let forward: &[(usize, usize)] = &[(a, b), (b, c), (c, a)];
                let backward: &[(usize, usize)] = &[(a, c), (c, b), (b, a)];
                if let Some(m) = strongest_loop(&[forward, backward]) {
                    found.push((
                        Motif {
                            kind: MotifKind::Triad,
                            members: [a, b, c]
                                .iter()
                                .map(|&i| net.nodes[i].aoi.clone())
                                .collect(),
                            min_edge_prob: m,
                        },
                        vec![a, b, c],
                    ));
                }
            }
        }
    }
    found.sort_by(|(x, xi), (y, yi)| {
        y.min_edge_prob
            .total_cmp(&x.min_edge_prob)
            .then(x.kind.cmp(&y.kind))
            .then(xi.cmp(yi))
    });
    Ok(found.into_iter().map(|(m, _)| m).collect())
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz DOT text. Node `width` scales with fixation totals, edge
/// `penwidth` with probability; self-loops are drawn red. Output depends
/// only on the network, so identical inputs give identical bytes.
pub fn export_dot(net: &TnaNetwork) -> String {
    let meta = &net.metadata;
    let mut out = format!("// gaze transition network ({})\n", net.schema);
    let scope: Vec<String> = [
        ("participant", &meta.participant),
        ("role", &meta.role),
        ("stage", &meta.stage),
    ]
    .iter()
    .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k}={v}")))
    .collect();
    let _ = writeln!(
        out,
        "// scope: {} alpha={} min_prob={} fixations={} transitions={}",
        if scope.is_empty() {
            "all".to_string()
        } else {
            scope.join(" ")
        },
        sig6(meta.alpha),
        sig6(meta.min_prob),
        meta.n_fixations,
        meta.n_transitions
    );
    if net.is_empty() {
        out.push_str("digraph tna {}\n");
        return out;
    }
    out.push_str("digraph tna {\n");
    out.push_str("  node [shape=circle, fixedsize=true, fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\", arrowsize=0.6];\n");
    let max_total = net
        .nodes
        .iter()
        .map(|n| n.fixation_total)
        .max()
        .unwrap_or(0)
        .max(1);
    for node in &net.nodes {
        let width = (2.0 * node.fixation_total as f64 / max_total as f64).max(0.05);
        let _ = writeln!(
            out,
            "  \"{id}\" [label=\"{id}\\n{total}\", width={width}, fixations={total}, self_loop={sl}];",
            id = dot_escape(&node.aoi),
            total = node.fixation_total,
            width = sig6(width),
            sl = sig6(node.raw_self_loop_prob),
        );
    }
    for e in &net.edges {
        let colour = if e.from == e.to {
            ", color=\"red\""
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [weight={}, penwidth={}, label=\"{:.2}\", count={}{}];",
            dot_escape(&e.from),
            dot_escape(&e.to),
            sig6(e.probability),
            sig6(8.0 * e.probability),
            e.probability,
            e.raw_count,
            colour
        );
    }
    out.push_str("}\n");
    out
}

/// Canonical compact JSON with sorted keys. Floats are rounded to six
/// significant digits unless `full_precision` is set.
pub fn export_json(net: &TnaNetwork, full_precision: bool) -> Result<String> {
    let mut value = serde_json::to_value(net)?;
    if !full_precision {
        round_json(&mut value);
    }
    Ok(serde_json::to_string(&value)?)
}

pub fn parse_network_json(text: &str) -> Result<TnaNetwork> {
    let net: TnaNetwork = serde_json::from_str(text)?;
    if net.schema != NETWORK_SCHEMA {
        return Err(Error::Config(format!(
            "unsupported network schema `{}`",
            net.schema
        )));
    }
    Ok(net)
}

/// Motif list as CSV `kind,members,min_edge_prob`, members joined by `|`.
pub fn motifs_to_csv(motifs: &[Motif]) -> String {
    let mut out = String::from("kind,members,min_edge_prob\n");
    for m in motifs {
        let _ = writeln!(
            out,
            "{},{},{}",
            m.kind.as_str(),
            m.members.join("|"),
            sig6(m.min_edge_prob)
        );
    }
    out
}
