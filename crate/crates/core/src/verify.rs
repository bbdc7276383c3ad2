//! Independent verification of produced artifacts.
//!
//! Everything here re-derives its answers from first principles with
//! implementations deliberately separate from the construction modules: the
//! configuration search below uses bitmask spans and plain span bounds (no
//! excess bookkeeping, no pair indexes), and the naive girth oracle explores
//! alternating sequences directly. A bug in a builder and a matching bug here
//! would have to be two independent mistakes.

use crate::combin::binomial;
use crate::config::ConfigHypergraph;
use crate::cycles::{classify_witness, CycleKind, CycleWitness};
use crate::designs::DesignInstance;
use crate::hypergraph::Hypergraph;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("verification guard exceeded: {what} {value} over cap {cap}")]
    GuardExceeded { what: &'static str, value: u64, cap: u64 },
    #[error("invalid verification input: {0}")]
    BadInput(String),
}

/// Default step budget for the configuration search.
pub const VERIFY_DEFAULT_MAX_STEPS: u64 = 2_000_000_000;
/// The naive girth oracle refuses configuration hypergraphs larger than this.
pub const GIRTH_ORACLE_MAX_CONFIGS: u32 = 100_000;

/// Outcome of one verification check, serializable as a stable JSON object
/// (details keys are emitted in sorted order).
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub details: Map<String, Value>,
    pub witness: Option<Value>,
}

impl VerificationReport {
    fn pass(check: &str, details: Map<String, Value>) -> Self {
        VerificationReport { check: check.to_string(), passed: true, details, witness: None }
    }

    fn fail(check: &str, details: Map<String, Value>, witness: Value) -> Self {
        VerificationReport { check: check.to_string(), passed: false, details, witness: Some(witness) }
    }
}

fn details_from(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| ((*k).to_string(), v.clone())).collect()
}

/// Checks that block shapes are well-formed for the instance parameters:
/// sorted, distinct, in range, size q. Returns per-block problems.
fn block_shape_errors(d: &DesignInstance) -> Vec<(usize, String)> {
    let mut errs = Vec::new();
    for (i, b) in d.blocks.iter().enumerate() {
        if b.len() != d.q as usize {
            errs.push((i, format!("has {} points, expected {}", b.len(), d.q)));
            continue;
        }
        if b.windows(2).any(|w| w[0] >= w[1]) {
            errs.push((i, "points not strictly increasing".to_string()));
            continue;
        }
        if *b.last().unwrap() >= d.n {
            errs.push((i, format!("point {} out of range for n={}", b.last().unwrap(), d.n)));
        }
    }
    errs
}

/// Verifies the packing property: every r-subset of points lies in at most
/// one block. Reports coverage statistics against the perfect-design count.
pub fn verify_partial_design(d: &DesignInstance) -> Result<VerificationReport, VerifyError> {
    const MAX_COVER_SETS: u64 = 100_000_000;
    if !(2 <= d.r && d.r < d.q && d.q < d.n) {
        return Ok(VerificationReport::fail(
            "partial_design",
            details_from(&[("n", json!(d.n)), ("q", json!(d.q)), ("r", json!(d.r))]),
            json!({"reason": "parameters violate 2 <= r < q < n"}),
        ));
    }
    let per_block = binomial(d.q as u64, d.r as u64);
    let total = d.blocks.len() as u64 * per_block;
    if total > MAX_COVER_SETS {
        return Err(VerifyError::GuardExceeded { what: "covered r-sets", value: total, cap: MAX_COVER_SETS });
    }

    let shape_errs = block_shape_errors(d);
    if !shape_errs.is_empty() {
        let (i, why) = &shape_errs[0];
        return Ok(VerificationReport::fail(
            "partial_design",
            details_from(&[("num_blocks", json!(d.blocks.len())), ("malformed_blocks", json!(shape_errs.len()))]),
            json!({"block_index": i, "reason": why}),
        ));
    }

    // Every r-subset of every block, recorded with its owner; the recursion is
    // a local index chooser, kept free of shared combinatorics helpers.
    let mut owners: std::collections::HashMap<Vec<u32>, u32> = std::collections::HashMap::new();
    let mut duplicate: Option<(Vec<u32>, u32, u32)> = None;
    'outer: for (bi, b) in d.blocks.iter().enumerate() {
        let mut idx = vec![0usize; d.r as usize];
        let r = d.r as usize;
        // Initialize to the first combination 0,1,..,r-1.
        for (j, slot) in idx.iter_mut().enumerate() {
            *slot = j;
        }
        loop {
            let sub: Vec<u32> = idx.iter().map(|&j| b[j]).collect();
            if let Some(&prev) = owners.get(&sub) {
                duplicate = Some((sub, prev, bi as u32));
                break 'outer;
            }
            owners.insert(sub, bi as u32);
            // Advance the combination over q positions.
            let mut j = r;
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] <= d.q as usize - (r - j) {
                    for k in j + 1..r {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
                if j == 0 {
                    j = usize::MAX;
                    break;
                }
            }
            if j == usize::MAX {
                break;
            }
        }
    }

    let universe = binomial(d.n as u64, d.r as u64);
    let covered = owners.len() as u64;
    let perfect = universe / binomial(d.q as u64, d.r as u64);
    let details = details_from(&[
        ("n", json!(d.n)),
        ("q", json!(d.q)),
        ("r", json!(d.r)),
        ("num_blocks", json!(d.blocks.len())),
        ("covered_r_sets", json!(covered)),
        ("r_set_universe", json!(universe)),
        ("covered_fraction", json!(covered as f64 / universe as f64)),
        ("perfect_design_size", json!(perfect)),
    ]);
    match duplicate {
        Some((sub, a, b)) => Ok(VerificationReport::fail(
            "partial_design",
            details,
            json!({
                "r_set": sub,
                "blocks": [d.blocks[a as usize], d.blocks[b as usize]],
                "block_indices": [a, b],
            }),
        )),
        None => Ok(VerificationReport::pass("partial_design", details)),
    }
}

/// Verifies the girth property of a design: no i blocks spanning at most
/// i(q-r)+r points for any 2 <= i <= g. The search grows connected block
/// families with bitmask spans; any existing configuration contains a minimal
/// one, minimal ones are connected with monotone span, so the bounded search
/// is complete.
pub fn verify_no_configurations(d: &DesignInstance, max_steps: u64) -> Result<VerificationReport, VerifyError> {
    if d.g < 2 {
        return Err(VerifyError::BadInput(format!("need g >= 2, got {}", d.g)));
    }
    let shape_errs = block_shape_errors(d);
    if !shape_errs.is_empty() {
        let (i, why) = &shape_errs[0];
        return Ok(VerificationReport::fail(
            "no_configurations",
            details_from(&[("num_blocks", json!(d.blocks.len())), ("malformed_blocks", json!(shape_errs.len()))]),
            json!({"block_index": i, "reason": why}),
        ));
    }
    let nb = d.blocks.len();
    let words = (d.n as usize).div_ceil(64);
    let mut bits = vec![0u64; nb * words];
    for (i, b) in d.blocks.iter().enumerate() {
        for &p in b {
            bits[i * words + (p / 64) as usize] |= 1u64 << (p % 64);
        }
    }
    // Point -> block ids containing it.
    let mut at_point: Vec<Vec<u32>> = vec![Vec::new(); d.n as usize];
    for (i, b) in d.blocks.iter().enumerate() {
        for &p in b {
            at_point[p as usize].push(i as u32);
        }
    }
    let max_bound = (d.g * (d.q - d.r) + d.r) as usize;
    let mut steps = 0u64;
    let mut witness: Option<Vec<u32>> = None;

    struct Dfs<'a> {
        words: usize,
        bits: &'a [u64],
        at_point: &'a [Vec<u32>],
        g: usize,
        q: usize,
        r: usize,
        max_bound: usize,
        max_steps: u64,
    }

    impl Dfs<'_> {
        fn run(
            &self,
            root: u32,
            chosen: &mut Vec<u32>,
            span: &mut Vec<u64>,
            span_size: usize,
            steps: &mut u64,
            witness: &mut Option<Vec<u32>>,
        ) -> Result<(), VerifyError> {
            let depth = chosen.len();
            if depth >= 2 && span_size <= depth * (self.q - self.r) + self.r {
                *witness = Some(chosen.clone());
                return Ok(());
            }
            if depth == self.g {
                return Ok(());
            }
            // Candidates: blocks meeting the span, id above the root.
            let mut cands: Vec<u32> = Vec::new();
            for w in 0..self.words {
                let mut word = span[w];
                while word != 0 {
                    let p = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    for &c in &self.at_point[p] {
                        if c > root && !chosen.contains(&c) {
                            cands.push(c);
                        }
                    }
                }
            }
            cands.sort_unstable();
            cands.dedup();
            *steps += cands.len() as u64;
            if *steps > self.max_steps {
                return Err(VerifyError::GuardExceeded { what: "search steps", value: *steps, cap: self.max_steps });
            }
            for c in cands {
                let cb = &self.bits[c as usize * self.words..(c as usize + 1) * self.words];
                let mut new_size = 0usize;
                for w in 0..self.words {
                    new_size += (span[w] | cb[w]).count_ones() as usize;
                }
                if new_size > self.max_bound {
                    continue;
                }
                let saved: Vec<u64> = span.clone();
                for w in 0..self.words {
                    span[w] |= cb[w];
                }
                chosen.push(c);
                let res = self.run(root, chosen, span, new_size, steps, witness);
                chosen.pop();
                span.copy_from_slice(&saved);
                res?;
                if witness.is_some() {
                    return Ok(());
                }
            }
            Ok(())
        }
    }

    let dfs = Dfs {
        words,
        bits: &bits,
        at_point: &at_point,
        g: d.g as usize,
        q: d.q as usize,
        r: d.r as usize,
        max_bound,
        max_steps,
    };
    for root in 0..nb as u32 {
        let mut chosen = vec![root];
        let mut span: Vec<u64> = bits[root as usize * words..(root as usize + 1) * words].to_vec();
        dfs.run(root, &mut chosen, &mut span, d.q as usize, &mut steps, &mut witness)?;
        if witness.is_some() {
            break;
        }
    }

    let details = details_from(&[
        ("n", json!(d.n)),
        ("q", json!(d.q)),
        ("r", json!(d.r)),
        ("g", json!(d.g)),
        ("num_blocks", json!(nb)),
        ("search_steps", json!(steps)),
    ]);
    match witness {
        Some(ids) => {
            let blocks: Vec<&Vec<u32>> = ids.iter().map(|&i| &d.blocks[i as usize]).collect();
            let mut pts: Vec<u32> = blocks.iter().flat_map(|b| b.iter().copied()).collect();
            pts.sort_unstable();
            pts.dedup();
            Ok(VerificationReport::fail(
                "no_configurations",
                details,
                json!({
                    "block_indices": ids,
                    "blocks": blocks,
                    "span_size": pts.len(),
                    "size": ids.len(),
                    "bound": ids.len() * (d.q - d.r) as usize + d.r as usize,
                }),
            ))
        }
        None => Ok(VerificationReport::pass("no_configurations", details)),
    }
}

/// Verifies a matching output against its ground instance: ids in range and
/// distinct, vertex-disjointness, avoidance of every configuration, and
/// (optionally) perfection on side A of a bipartition.
pub fn verify_matching_output(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    edge_ids: &[u32],
    require_a_perfect: bool,
) -> Result<VerificationReport, VerifyError> {
    if h.num_ground_edges() != g.num_edges() {
        return Err(VerifyError::BadInput("configuration hypergraph does not match ground".into()));
    }
    let base = details_from(&[
        ("num_selected", json!(edge_ids.len())),
        ("num_ground_edges", json!(g.num_edges())),
        ("num_configs", json!(h.num_configs())),
        ("a_perfect_required", json!(require_a_perfect)),
    ]);
    let mut selected = vec![false; g.num_edges() as usize];
    for &e in edge_ids {
        if e >= g.num_edges() {
            return Ok(VerificationReport::fail(
                "matching_output",
                base,
                json!({"reason": "edge id out of range", "edge": e}),
            ));
        }
        if selected[e as usize] {
            return Ok(VerificationReport::fail(
                "matching_output",
                base,
                json!({"reason": "edge selected twice", "edge": e}),
            ));
        }
        selected[e as usize] = true;
    }
    // Disjointness via vertex occupancy.
    let mut owner: Vec<u32> = vec![u32::MAX; g.num_vertices() as usize];
    for &e in edge_ids {
        for &v in g.edge(e) {
            if owner[v as usize] != u32::MAX {
                return Ok(VerificationReport::fail(
                    "matching_output",
                    base,
                    json!({"reason": "vertex reused", "vertex": v, "edges": [owner[v as usize], e]}),
                ));
            }
            owner[v as usize] = e;
        }
    }
    // Avoidance: no configuration fully selected.
    for c in 0..h.num_configs() {
        let members = h.config(c);
        if members.iter().all(|&e| selected[e as usize]) {
            return Ok(VerificationReport::fail(
                "matching_output",
                base,
                json!({"reason": "configuration present", "config": c, "members": members}),
            ));
        }
    }
    if require_a_perfect {
        let Some(bip) = g.bipartition() else {
            return Ok(VerificationReport::fail(
                "matching_output",
                base,
                json!({"reason": "ground is not bipartite"}),
            ));
        };
        for a in bip.side_a() {
            if owner[a as usize] == u32::MAX {
                return Ok(VerificationReport::fail(
                    "matching_output",
                    base,
                    json!({"reason": "A-vertex unmatched", "vertex": a}),
                ));
            }
        }
    }
    Ok(VerificationReport::pass("matching_output", base))
}

/// Exhaustive girth computation by direct depth-first search over alternating
/// sequences of distinct configurations and distinct shared ground edges.
/// Returns a shortest cycle of length <= `cap`, or None. Complete but
/// exponential in the worst case; guarded by `max_steps` and a hard size cap.
pub fn girth_oracle_naive(
    h: &ConfigHypergraph,
    cap: u32,
    max_steps: u64,
) -> Result<Option<CycleWitness>, VerifyError> {
    if cap < 2 {
        return Err(VerifyError::BadInput(format!("need cap >= 2, got {cap}")));
    }
    if h.num_configs() > GIRTH_ORACLE_MAX_CONFIGS {
        return Err(VerifyError::GuardExceeded {
            what: "configurations",
            value: h.num_configs() as u64,
            cap: GIRTH_ORACLE_MAX_CONFIGS as u64,
        });
    }
    let nc = h.num_configs();
    let mut best: Option<CycleWitness> = None;
    let mut best_len = cap as usize + 1;
    let mut steps = 0u64;

    fn dfs(
        h: &ConfigHypergraph,
        c0: u32,
        path: &mut Vec<u32>,
        links: &mut Vec<u32>,
        best: &mut Option<CycleWitness>,
        best_len: &mut usize,
        cap: usize,
        steps: &mut u64,
        max_steps: u64,
    ) -> Result<(), VerifyError> {
        let last = *path.last().unwrap();
        let k = path.len();
        if k >= 2 {
            // Try to close: a ground edge shared with the start, unused.
            for &e in h.config(last) {
                *steps += 1;
                if h.config(c0).binary_search(&e).is_ok() && !links.contains(&e) && k < *best_len {
                    let mut w = CycleWitness {
                        kind: CycleKind::General,
                        configs: path.clone(),
                        links: {
                            let mut l = links.clone();
                            l.push(e);
                            l
                        },
                    };
                    w.kind = classify_witness(h, &w);
                    *best_len = k;
                    *best = Some(w);
                    break;
                }
            }
        }
        if *steps > max_steps {
            return Err(VerifyError::GuardExceeded { what: "search steps", value: *steps, cap: max_steps });
        }
        if k + 1 >= *best_len || k + 1 > cap {
            return Ok(());
        }
        for &e in h.config(last) {
            if links.contains(&e) {
                continue;
            }
            for &c in h.configs_containing(e) {
                *steps += 1;
                if c <= c0 || path.contains(&c) {
                    continue;
                }
                path.push(c);
                links.push(e);
                let res = dfs(h, c0, path, links, best, best_len, cap, steps, max_steps);
                links.pop();
                path.pop();
                res?;
            }
        }
        Ok(())
    }

    for c0 in 0..nc {
        let mut path = vec![c0];
        let mut links = Vec::new();
        dfs(h, c0, &mut path, &mut links, &mut best, &mut best_len, cap as usize, &mut steps, max_steps)?;
        if best_len == 2 {
            break;
        }
    }
    Ok(best)
}
