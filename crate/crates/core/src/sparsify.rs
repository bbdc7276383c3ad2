//! Random sparsification that destroys all short configuration cycles.
//!
//! Keep each edge independently with probability `p = D^(beta/(4g) - 1)`,
//! detect the configurations that survive entirely inside the sample, find
//! every 2-cycle, loose triangle, and loose 4-cycle among them, and delete
//! the ground edges those cycles touch. Any cycle of length at most 4 either
//! is one of those shapes or contains a 2-cycle, so the surviving
//! configuration hypergraph has no cycle shorter than 5 — a structural
//! guarantee asserted on every run, not a statistical one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ConfigHypergraph};
use crate::cycles::{self, CycleWitness};
use crate::designs::{ConfigDetector, DesignError};
use crate::hypergraph::{Hypergraph, HypergraphError};
use crate::rng::{Purpose, Stream};

#[derive(Debug, Error)]
pub enum SparsifyError {
    #[error("invalid sparsifier parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Detector(#[from] DesignError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// How much to delete around each short cycle.
///
/// `Members` removes every ground edge inside any configuration of the cycle
/// (the default; degree loss is easy to account for). `Links` removes only
/// the ground edges where consecutive configurations of the cycle meet —
/// every configuration of the cycle contains at least one link, so one pass
/// still kills all detected cycles, with a smaller bite out of the degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeletionExtent {
    #[default]
    Members,
    Links,
}

/// Counters and diagnostics from one sparsifier run.
///
/// `degree_window_violations` counts vertices whose surviving degree left the
/// expected window `p*deg*(1 ± D^(-beta/(18g))) ± D^(beta/(6g))`; at small
/// scales these are informational, never fatal. `girth_certificate` is the
/// shortest surviving cycle of length at most 4 — always absent, kept in the
/// report shape because consumers check it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparsifyReport {
    pub p: f64,
    pub seed: u64,
    pub input_edges: u32,
    pub sampled_edges: u32,
    pub detected_configs: u32,
    pub short_cycles: u32,
    pub deleted_edges: u32,
    pub surviving_edges: u32,
    pub surviving_configs: u32,
    pub extent: DeletionExtent,
    pub degree_window_violations: u32,
    pub girth_certificate: Option<CycleWitness>,
    pub warnings: Vec<String>,
}

/// Union of the ground edges to delete for the given short cycles.
pub fn deletion_set(
    h0: &ConfigHypergraph,
    witnesses: &[CycleWitness],
    extent: DeletionExtent,
) -> Vec<u32> {
    let mut delete = vec![false; h0.num_ground_edges() as usize];
    for w in witnesses {
        match extent {
            DeletionExtent::Members => {
                for &c in &w.configs {
                    for &m in h0.config(c) {
                        delete[m as usize] = true;
                    }
                }
            }
            DeletionExtent::Links => {
                for &l in &w.links {
                    delete[l as usize] = true;
                }
            }
        }
    }
    (0..h0.num_ground_edges()).filter(|&e| delete[e as usize]).collect()
}

/// Ground edges touched by any 2-cycle, loose triangle, or loose 4-cycle of
/// `h0`, under the `Members` extent.
pub fn short_cycle_edge_set(h0: &ConfigHypergraph) -> Vec<u32> {
    deletion_set(h0, &cycles::find_short_cycles(h0), DeletionExtent::Members)
}

/// Sparsifies `(g, detector)` at degree scale `d` with exponent `beta` and
/// cycle length bound `g_bound`: samples each edge with probability
/// `p = d^(beta/(4*g_bound) - 1)` (stream purpose `EdgeSample`), materializes
/// the configurations inside the sample, deletes the `extent` of every short
/// cycle among them, and returns the surviving graph (same vertex set; edge
/// ids remap — see the report and the returned origin list), the surviving
/// configurations, and the run report.
///
/// The surviving configuration hypergraph having no cycle of length at most 4
/// is asserted, not sampled-for: a failure is an implementation bug.
pub fn sparsify<Det: ConfigDetector + ?Sized>(
    g: &Hypergraph,
    detector: &Det,
    d: f64,
    beta: f64,
    g_bound: u32,
    seed: u64,
    extent: DeletionExtent,
) -> Result<(Hypergraph, ConfigHypergraph, Vec<u32>, SparsifyReport), SparsifyError> {
    if !d.is_finite() || d < 1.0 {
        return Err(SparsifyError::BadParams(format!(
            "degree scale D = {d} must be a finite real >= 1"
        )));
    }
    if !beta.is_finite() || beta <= 0.0 || beta >= 1.0 {
        return Err(SparsifyError::BadParams(format!(
            "exponent beta = {beta} must lie in (0, 1)"
        )));
    }
    if g_bound < 2 {
        return Err(SparsifyError::BadParams(format!(
            "cycle length bound g = {g_bound} must be at least 2"
        )));
    }
    let p = d.powf(beta / (4.0 * g_bound as f64) - 1.0);
    let mut warnings = Vec::new();
    let max_deg = (0..g.num_vertices())
        .map(|v| g.degree(v).expect("vertex id in range"))
        .max()
        .unwrap_or(0);
    if (max_deg as f64) > 2.0 * d {
        warnings.push(format!(
            "maximum degree {max_deg} exceeds 2D = {}; the degree-window \
             prediction assumes it does not",
            2.0 * d
        ));
    }

    // Sample.
    let stream = Stream::new(seed, 0, Purpose::EdgeSample);
    let sampled: Vec<u32> =
        (0..g.num_edges()).filter(|&e| stream.bernoulli(e as u64, p)).collect();

    // Configurations inside the sample, and their short cycles.
    let configs = detector.configs_among(&sampled)?;
    let h0 = ConfigHypergraph::new(g, configs)?;
    let witnesses = cycles::find_short_cycles(&h0);
    let deleted = deletion_set(&h0, &witnesses, extent);
    let mut is_deleted = vec![false; g.num_edges() as usize];
    for &e in &deleted {
        is_deleted[e as usize] = true;
    }

    // Surviving graph: the sample minus the deletions, on the full vertex set.
    let edge_origin: Vec<u32> =
        sampled.iter().copied().filter(|&e| !is_deleted[e as usize]).collect();
    let edges_new: Vec<Vec<u32>> =
        edge_origin.iter().map(|&e| g.edge(e).to_vec()).collect();
    let sparse_g = match g.bipartition() {
        Some(b) => Hypergraph::bipartite(g.num_vertices(), edges_new, &b.side_a())?,
        None => Hypergraph::new(g.num_vertices(), edges_new)?,
    };

    // Surviving configurations: restriction of the detected ones, remapped.
    let mut emap = vec![u32::MAX; g.num_edges() as usize];
    for (k, &e) in edge_origin.iter().enumerate() {
        emap[e as usize] = k as u32;
    }
    let mut kept_configs: Vec<Vec<u32>> = Vec::new();
    'configs: for c in 0..h0.num_configs() {
        let mut members = Vec::with_capacity(h0.config(c).len());
        for &m in h0.config(c) {
            if emap[m as usize] == u32::MAX {
                continue 'configs;
            }
            members.push(emap[m as usize]);
        }
        kept_configs.push(members);
    }
    let sparse_h = ConfigHypergraph::new(&sparse_g, kept_configs)?;

    assert!(
        cycles::girth(&sparse_h, 4)?.is_none(),
        "a cycle of length <= 4 survived sparsification"
    );

    // Degree window diagnostic.
    let lo_hi = |dv: f64| {
        let rel = d.powf(-beta / (18.0 * g_bound as f64));
        let abs = d.powf(beta / (6.0 * g_bound as f64));
        (p * dv * (1.0 - rel) - abs, p * dv * (1.0 + rel) + abs)
    };
    let mut degree_window_violations = 0u32;
    for v in 0..g.num_vertices() {
        let (lo, hi) = lo_hi(g.degree(v).expect("vertex id in range") as f64);
        let dv = sparse_g.degree(v).expect("same vertex set") as f64;
        if dv < lo || dv > hi {
            degree_window_violations += 1;
        }
    }

    let report = SparsifyReport {
        p,
        seed,
        input_edges: g.num_edges(),
        sampled_edges: sampled.len() as u32,
        detected_configs: h0.num_configs(),
        short_cycles: witnesses.len() as u32,
        deleted_edges: deleted.len() as u32,
        surviving_edges: sparse_g.num_edges(),
        surviving_configs: sparse_h.num_configs(),
        extent,
        degree_window_violations,
        girth_certificate: None,
        warnings,
    };
    Ok((sparse_g, sparse_h, edge_origin, report))
}
