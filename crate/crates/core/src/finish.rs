//! Completion of an A-perfect avoiding matching by randomized resampling.
//!
//! Each side-A vertex independently picks one incident edge uniformly at
//! random. Two kinds of bad event can be realized by such a choice set: two
//! chosen edges meet (necessarily in side B, since every edge carries exactly
//! one A-vertex — its chooser), or every member of a forbidden configuration
//! got chosen. While any bad event is realized, the deterministically first
//! one is located and every A-vertex in its witness redraws; when no event
//! remains the choices form an A-perfect avoiding matching. In the regime
//! where A-degrees dominate (minimum A-degree at least `8rD`, B-degrees at
//! most `D`, weighted configuration degree at most 1) the expected number of
//! redraws is bounded, so a generous budget suffices; outside it the loop may
//! exhaust its budget and reports the stuck state instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Avoidance, ConfigError, ConfigHypergraph};
use crate::hypergraph::{Hypergraph, HypergraphError, Matching};
use crate::nibble::{FinisherOutcome, NibbleError};
use crate::rng::{Purpose, Stream};

#[derive(Debug, Error)]
pub enum FinishError {
    #[error("invalid finisher input: {0}")]
    BadInput(String),
    #[error("resample budget exhausted after {} redraws", .0.resamples)]
    BudgetExhausted(Box<FinishFailure>),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One edge choice per side-A vertex, each incident to its chooser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    choice: BTreeMap<u32, u32>,
}

impl Assignment {
    /// Validates that `choice` is total on side A and that every chosen edge
    /// is incident to its chooser.
    pub fn new(g: &Hypergraph, choice: BTreeMap<u32, u32>) -> Result<Self, FinishError> {
        let side_a = bipartite_side_a(g)?;
        if choice.len() != side_a.len() || !side_a.iter().all(|a| choice.contains_key(a)) {
            return Err(FinishError::BadInput(format!(
                "assignment must choose exactly once for each of the {} side-A vertices",
                side_a.len()
            )));
        }
        for (&a, &e) in &choice {
            if e >= g.num_edges() || g.a_vertex(e) != Some(a) {
                return Err(FinishError::BadInput(format!(
                    "vertex {a} chose edge {e}, which is not an incident edge"
                )));
            }
        }
        Ok(Assignment { choice })
    }

    #[must_use]
    pub fn choice(&self) -> &BTreeMap<u32, u32> {
        &self.choice
    }

    /// The chosen edge ids, ascending.
    #[must_use]
    pub fn chosen_edges(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.choice.values().copied().collect();
        ids.sort_unstable();
        ids
    }
}

/// A violation realized by the current choices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BadEvent {
    /// Two chosen edges share a vertex (their A-vertices differ, so the
    /// overlap lies in side B).
    PairConflict { a_vertices: [u32; 2], edges: [u32; 2] },
    /// Every member of this configuration is currently chosen.
    Configuration { config_id: u32, members: Vec<u32> },
}

impl BadEvent {
    /// The A-vertices whose choices realize this event — exactly the set a
    /// resample redraws.
    #[must_use]
    pub fn witness_a_vertices(&self, g: &Hypergraph) -> Vec<u32> {
        match self {
            BadEvent::PairConflict { a_vertices, .. } => a_vertices.to_vec(),
            BadEvent::Configuration { members, .. } => {
                let mut out: Vec<u32> = members
                    .iter()
                    .map(|&m| g.a_vertex(m).expect("config member in a bipartite graph"))
                    .collect();
                out.sort_unstable();
                out
            }
        }
    }
}

/// Success record: the completed matching, the choices that realize it, the
/// number of redraw steps spent, and any hypothesis-margin warnings.
#[derive(Debug, Clone, Serialize)]
pub struct FinishSuccess {
    pub matching: Matching,
    pub assignment: Assignment,
    pub resamples: u64,
    pub warnings: Vec<String>,
}

/// Failure record when the redraw budget runs out: the final choices, every
/// bad event they realize, and the spent budget.
#[derive(Debug, Clone, Serialize)]
pub struct FinishFailure {
    pub assignment: Assignment,
    pub stuck: Vec<BadEvent>,
    pub resamples: u64,
    pub budget: u64,
    pub warnings: Vec<String>,
}

/// Default redraw budget: generous compared to the expected number of
/// resamples in the supported degree regime.
#[must_use]
pub fn default_budget(g: &Hypergraph, h: &ConfigHypergraph) -> u64 {
    let a = g.bipartition().map_or(0, |b| b.side_a().len() as u64);
    1000 * (a + h.num_configs() as u64)
}

fn bipartite_side_a(g: &Hypergraph) -> Result<Vec<u32>, FinishError> {
    match g.bipartition() {
        Some(b) => Ok(b.side_a()),
        None => Err(FinishError::BadInput(
            "the input hypergraph carries no bipartition".into(),
        )),
    }
}

/// Choices as a dense lookup: `by_a[v] = chosen edge` for side-A `v`.
fn dense_choices(g: &Hypergraph, assignment: &Assignment) -> Vec<u32> {
    let mut by_a = vec![u32::MAX; g.num_vertices() as usize];
    for (&a, &e) in assignment.choice() {
        by_a[a as usize] = e;
    }
    by_a
}

/// Scans for the first realized event: pair conflicts ordered by their
/// lexicographic A-vertex pair, then completed configurations by id. Returns
/// at most one event; `None` means the choices already form an A-perfect
/// avoiding matching.
pub fn find_bad_event(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    assignment: &Assignment,
) -> Result<Option<BadEvent>, FinishError> {
    h.check_ground(g)?;
    // Re-validate: the assignment may have been built against another graph.
    let checked = Assignment::new(g, assignment.choice().clone())?;
    let side_a = bipartite_side_a(g)?;
    Ok(scan_events(g, h, &side_a, &dense_choices(g, &checked), false).into_iter().next())
}

/// Same scan as `find_bad_event`, optionally exhaustive (`all = true` keeps
/// going and returns every realized event in scan order).
fn scan_events(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    side_a: &[u32],
    by_a: &[u32],
    all: bool,
) -> Vec<BadEvent> {
    let mut found = Vec::new();
    // Index: B-vertex -> choosers of edges containing it, ascending (side_a
    // is ascending, so pushes arrive in order).
    let mut choosers: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &a in side_a {
        for &v in g.edge(by_a[a as usize]) {
            if v != a {
                choosers.entry(v).or_default().push(a);
            }
        }
    }
    'pairs: for &a1 in side_a {
        let e1 = by_a[a1 as usize];
        let mut best: Option<(u32, u32)> = None;
        for &v in g.edge(e1) {
            if v == a1 {
                continue;
            }
            if let Some(list) = choosers.get(&v) {
                if let Some(&a2) = list.iter().find(|&&a2| a2 > a1) {
                    if best.is_none_or(|(b, _)| a2 < b) {
                        best = Some((a2, by_a[a2 as usize]));
                    }
                }
            }
        }
        if let Some((a2, e2)) = best {
            found.push(BadEvent::PairConflict { a_vertices: [a1, a2], edges: [e1, e2] });
            if !all {
                break 'pairs;
            }
        }
    }
    if found.is_empty() || all {
        let mut chosen = vec![false; g.num_edges() as usize];
        for &a in side_a {
            chosen[by_a[a as usize] as usize] = true;
        }
        for c in 0..h.num_configs() {
            if h.config(c).iter().all(|&m| chosen[m as usize]) {
                found.push(BadEvent::Configuration {
                    config_id: c,
                    members: h.config(c).to_vec(),
                });
                if !all {
                    break;
                }
            }
        }
    }
    found
}

/// Completes an A-perfect matching of bipartite `g` avoiding `h`: every
/// side-A vertex draws one incident edge uniformly at random, and while a bad
/// event is realized the first one (in `find_bad_event` order) has its
/// witness A-vertices redraw. A `None` budget means `default_budget`.
///
/// The degree hypotheses of the supported regime — minimum A-degree at least
/// `8rD`, B-degrees at most `D`, weighted configuration degree at most 1,
/// with `D` taken as the maximum B-degree — are checked and reported as
/// warnings only: small instances often complete far outside them.
///
/// Success output is re-validated: an A-perfect matching realizing no
/// configuration, or the function panics. Budget exhaustion is a soft
/// failure carrying the final choices and every event they realize.
pub fn finish_matching(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    seed: u64,
    budget: Option<u64>,
) -> Result<FinishSuccess, FinishError> {
    h.check_ground(g)?;
    let side_a = bipartite_side_a(g)?;
    for &a in &side_a {
        if g.incident_edges(a).is_empty() {
            return Err(FinishError::BadInput(format!(
                "side-A vertex {a} has no incident edge, so no choice exists"
            )));
        }
    }
    let budget = budget.unwrap_or_else(|| default_budget(g, h));

    // Hypothesis margins (warnings only). D = maximum B-degree, floored at 1
    // so the weighted degree is defined; with that D the B-degree bound holds
    // by construction and the other two margins are the meaningful ones.
    let mut warnings = Vec::new();
    let r = (0..g.num_edges()).map(|e| g.edge(e).len()).max().unwrap_or(1) as f64;
    let d_cap = (0..g.num_vertices())
        .filter(|&v| !g.bipartition().expect("checked above").is_a(v))
        .map(|v| g.degree(v).expect("vertex id in range"))
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let min_a = side_a
        .iter()
        .map(|&a| g.degree(a).expect("vertex id in range"))
        .min()
        .unwrap_or(u32::MAX) as f64;
    if min_a < 8.0 * r * d_cap {
        warnings.push(format!(
            "minimum side-A degree {min_a} is below 8rD = {} (edge size r = {r}, \
             maximum side-B degree D = {d_cap}); completion is not guaranteed \
             in this regime",
            8.0 * r * d_cap
        ));
    }
    let w = h.max_weighted_degree(d_cap)?;
    if w > 1.0 {
        warnings.push(format!(
            "maximum weighted configuration degree {w} exceeds 1 at degree \
             scale D = {d_cap}; completion is not guaranteed in this regime"
        ));
    }

    // Initial draws, then resample-until-clean. Draw k for vertex `a` uses
    // stream index a*2^32 + (redraws of a so far), so the sequence each
    // vertex sees is fixed regardless of which events fire in between.
    let stream = Stream::new(seed, 0, Purpose::Assign);
    let mut draw_count = vec![0u64; g.num_vertices() as usize];
    let mut by_a = vec![u32::MAX; g.num_vertices() as usize];
    let redraw = |a: u32, by_a: &mut Vec<u32>, draw_count: &mut Vec<u64>| {
        let inc = g.incident_edges(a);
        debug_assert!(draw_count[a as usize] < 1 << 32);
        let index = ((a as u64) << 32) | draw_count[a as usize];
        draw_count[a as usize] += 1;
        by_a[a as usize] = inc[stream.below(index, inc.len() as u64) as usize];
    };
    for &a in &side_a {
        redraw(a, &mut by_a, &mut draw_count);
    }

    let mut resamples = 0u64;
    loop {
        let event = scan_events(g, h, &side_a, &by_a, false).into_iter().next();
        let Some(event) = event else {
            let assignment = Assignment::new(
                g,
                side_a.iter().map(|&a| (a, by_a[a as usize])).collect(),
            )?;
            let matching = Matching::new(g, &assignment.chosen_edges())
                .expect("a clean scan leaves pairwise-disjoint choices");
            assert!(matching.is_a_perfect(g), "choices are total on side A");
            assert!(
                matches!(is_avoiding(g, h, &matching)?, Avoidance::Avoiding),
                "a clean scan leaves no completed configuration"
            );
            return Ok(FinishSuccess { matching, assignment, resamples, warnings });
        };
        if resamples >= budget {
            let assignment = Assignment::new(
                g,
                side_a.iter().map(|&a| (a, by_a[a as usize])).collect(),
            )?;
            let stuck = scan_events(g, h, &side_a, &by_a, true);
            return Err(FinishError::BudgetExhausted(Box::new(FinishFailure {
                assignment,
                stuck,
                resamples,
                budget,
                warnings,
            })));
        }
        for a in event.witness_a_vertices(g) {
            redraw(a, &mut by_a, &mut draw_count);
        }
        resamples += 1;
    }
}

fn is_avoiding(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    m: &Matching,
) -> Result<Avoidance, FinishError> {
    Ok(crate::config::is_h_avoiding(g, h, m)?)
}

/// Adapter handing this module to `run_bipartite` as its finishing stage:
/// runs `finish_matching` with the default budget, reporting success as a
/// complete outcome and budget exhaustion as an incomplete one (the driver
/// then records `a_perfect = false` instead of erroring).
pub fn finish_for_nibble(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    seed: u64,
) -> Result<FinisherOutcome, NibbleError> {
    match finish_matching(g, h, seed, None) {
        Ok(success) => Ok(FinisherOutcome {
            chosen: success.matching.edge_ids().to_vec(),
            complete: true,
            detail: serde_json::json!({
                "resamples": success.resamples,
                "warnings": success.warnings,
            }),
        }),
        Err(FinishError::BudgetExhausted(fail)) => Ok(FinisherOutcome {
            chosen: Vec::new(),
            complete: false,
            detail: serde_json::to_value(&*fail).unwrap_or(serde_json::Value::Null),
        }),
        Err(e) => Err(NibbleError::BadFinish(e.to_string())),
    }
}
