//! Auxiliary block-design instances and forbidden-configuration search.
//!
//! `build_steiner_host` turns the approximate-design problem into a matching
//! problem: ground-hypergraph vertices are the r-subsets of an n-point set,
//! one edge per q-point block (its r-shadow), so matchings are exactly partial
//! (n, q, r)-designs. `build_partite_host` is the q-partite analogue over a
//! q x n point grid with transversal blocks.
//!
//! A set of i blocks spanning at most i(q-r)+r points is a forbidden
//! configuration; excluding all of them for 2 <= i <= g is the high-girth
//! condition. `enumerate_minimal_configs` finds every minimal one (containing
//! no smaller configuration) among a given block subset. Minimal
//! configurations with i >= 3 are automatically matchings of the host (a pair
//! of blocks sharing >= r points would be a contained i=2 configuration), and
//! avoiding all minimal configurations avoids all configurations.

use crate::combin::{binomial, for_each_subset, rank_subset};
use crate::config::{ConfigError, ConfigHypergraph};
use crate::hypergraph::{Hypergraph, HypergraphError, Matching};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("search guard exceeded: {what} {value} over cap {cap}; use the sparsified path or raise the limit")]
    GuardExceeded { what: &'static str, value: u64, cap: u64 },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Budget for configuration search. `max_configs` caps emitted
/// configurations; `max_steps` caps examined candidate extensions. Both are
/// enforced at runtime and exceeding either aborts with `GuardExceeded`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchLimits {
    pub max_configs: u64,
    pub max_steps: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_configs: 100_000_000, max_steps: 2_000_000_000 }
    }
}

/// Which family a block host belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HostKind {
    /// Blocks are all q-subsets of an n-point set.
    Steiner { n: u32 },
    /// Blocks are all transversals of a q x n point grid (one point per part).
    Partite { n: u32 },
}

/// A ground hypergraph together with the block structure that produced it.
/// Edge id i of `graph` is the r-shadow of `block(i)`; the alignment is what
/// lets configuration search run on sampled edge subsets at large n without
/// materializing the full configuration hypergraph.
#[derive(Debug, Clone)]
pub struct BlockHost {
    kind: HostKind,
    num_points: u32,
    q: u32,
    r: u32,
    graph: Hypergraph,
    blocks: Vec<u32>,
}

impl BlockHost {
    #[must_use]
    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    #[must_use]
    pub fn kind(&self) -> HostKind {
        self.kind
    }

    #[must_use]
    pub fn num_points(&self) -> u32 {
        self.num_points
    }

    #[must_use]
    pub fn q(&self) -> u32 {
        self.q
    }

    #[must_use]
    pub fn r(&self) -> u32 {
        self.r
    }

    #[must_use]
    pub fn num_blocks(&self) -> u32 {
        self.graph.num_edges()
    }

    /// Sorted points of the block behind edge `e`.
    #[must_use]
    pub fn block(&self, e: u32) -> &[u32] {
        &self.blocks[e as usize * self.q as usize..(e as usize + 1) * self.q as usize]
    }

    /// The uniform vertex degree of the host graph: blocks through a fixed
    /// r-subset. binom(n-r, q-r) for the plain host, n^(q-r) for the partite.
    #[must_use]
    pub fn regular_degree(&self) -> u64 {
        match self.kind {
            HostKind::Steiner { n } => binomial((n - self.r) as u64, (self.q - self.r) as u64),
            HostKind::Partite { n } => (n as u64).pow(self.q - self.r),
        }
    }

    /// Packages a matching of the host graph as a design instance.
    pub fn design_from_matching(
        &self,
        m: &Matching,
        g: u32,
        provenance: Provenance,
    ) -> DesignInstance {
        let mut blocks: Vec<Vec<u32>> = m.edge_ids().iter().map(|&e| self.block(e).to_vec()).collect();
        blocks.sort();
        DesignInstance { n: self.num_points, q: self.q, r: self.r, g, blocks, provenance }
    }
}

/// Where an emitted artifact came from: enough to reproduce it byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
    pub description: String,
}

impl Provenance {
    #[must_use]
    pub fn new(seed: u64, config_hash: impl Into<String>, description: impl Into<String>) -> Self {
        Provenance {
            seed,
            config_hash: config_hash.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            description: description.into(),
        }
    }
}

/// A partial design: blocks are q-subsets of an n-point set with every r-set
/// covered at most once, avoiding configurations up to size g.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignInstance {
    pub n: u32,
    pub q: u32,
    pub r: u32,
    pub g: u32,
    pub blocks: Vec<Vec<u32>>,
    pub provenance: Provenance,
}

fn check_block_params(n: u32, q: u32, r: u32) -> Result<(), DesignError> {
    if !(2 <= r && r < q && q < n) {
        return Err(DesignError::BadParams(format!("need 2 <= r < q < n, got n={n} q={q} r={r}")));
    }
    Ok(())
}

const MAX_HOST_BLOCKS: u64 = 50_000_000;

/// Host over all q-subsets of [n]: vertices are r-subsets ranked by the
/// combinatorial number system, edges are block r-shadows, edge order is
/// lexicographic by vertex list (canonical and stable).
pub fn build_steiner_host(n: u32, q: u32, r: u32) -> Result<BlockHost, DesignError> {
    check_block_params(n, q, r)?;
    let nblocks = binomial(n as u64, q as u64);
    if nblocks > MAX_HOST_BLOCKS {
        return Err(DesignError::GuardExceeded { what: "host blocks", value: nblocks, cap: MAX_HOST_BLOCKS });
    }
    let num_vertices = binomial(n as u64, r as u64);
    if num_vertices > u32::MAX as u64 {
        return Err(DesignError::BadParams("vertex count exceeds u32 range".into()));
    }

    let mut entries: Vec<(Vec<u32>, Vec<u32>)> = Vec::with_capacity(nblocks as usize);
    for_each_subset(n, q, |block| {
        let mut shadow = Vec::with_capacity(binomial(q as u64, r as u64) as usize);
        for_each_subset(q, r, |idx| {
            let sub: Vec<u32> = idx.iter().map(|&i| block[i as usize]).collect();
            shadow.push(rank_subset(&sub) as u32);
        });
        shadow.sort_unstable();
        entries.push((shadow, block.to_vec()));
    });
    finish_host(HostKind::Steiner { n }, n, q, r, num_vertices as u32, entries)
}

/// Host over all transversal blocks of a q x n grid (point (part, i) has id
/// part*n + i): vertices are the partite r-subsets, densely numbered by
/// (part-combination rank, then point indices in base n).
pub fn build_partite_host(n: u32, q: u32, r: u32) -> Result<BlockHost, DesignError> {
    if n < 1 {
        return Err(DesignError::BadParams("need n >= 1".into()));
    }
    if !(2 <= r && r < q) {
        return Err(DesignError::BadParams(format!("need 2 <= r < q, got q={q} r={r}")));
    }
    let nblocks = (n as u64).checked_pow(q).filter(|&b| b <= MAX_HOST_BLOCKS).ok_or(
        DesignError::GuardExceeded { what: "host blocks", value: u64::MAX, cap: MAX_HOST_BLOCKS },
    )?;
    let num_vertices = binomial(q as u64, r as u64) * (n as u64).pow(r);
    if num_vertices > u32::MAX as u64 {
        return Err(DesignError::BadParams("vertex count exceeds u32 range".into()));
    }

    // Vertex id of a partite r-subset given as (part, index) pairs with
    // ascending parts.
    let vertex_id = |pairs: &[(u32, u32)]| -> u32 {
        let parts: Vec<u32> = pairs.iter().map(|&(p, _)| p).collect();
        let mut id = rank_subset(&parts) as u64 * (n as u64).pow(r);
        for (j, &(_, i)) in pairs.iter().enumerate() {
            id += i as u64 * (n as u64).pow(j as u32);
        }
        id as u32
    };

    let mut entries: Vec<(Vec<u32>, Vec<u32>)> = Vec::with_capacity(nblocks as usize);
    let mut idxs = vec![0u32; q as usize];
    loop {
        let block: Vec<u32> = idxs.iter().enumerate().map(|(p, &i)| p as u32 * n + i).collect();
        let mut shadow = Vec::new();
        for_each_subset(q, r, |sel| {
            let pairs: Vec<(u32, u32)> = sel.iter().map(|&p| (p, idxs[p as usize])).collect();
            shadow.push(vertex_id(&pairs));
        });
        shadow.sort_unstable();
        entries.push((shadow, block));
        // Advance the odometer over [n]^q; stop after the last tuple.
        let mut pos = q as usize;
        while pos > 0 {
            idxs[pos - 1] += 1;
            if idxs[pos - 1] < n {
                break;
            }
            idxs[pos - 1] = 0;
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
    }
    finish_host(HostKind::Partite { n }, q * n, q, r, num_vertices as u32, entries)
}

fn finish_host(
    kind: HostKind,
    num_points: u32,
    q: u32,
    r: u32,
    num_vertices: u32,
    mut entries: Vec<(Vec<u32>, Vec<u32>)>,
) -> Result<BlockHost, DesignError> {
    entries.sort();
    let mut edges = Vec::with_capacity(entries.len());
    let mut blocks = Vec::with_capacity(entries.len() * q as usize);
    for (shadow, block) in entries {
        edges.push(shadow);
        blocks.extend_from_slice(&block);
    }
    let graph = Hypergraph::new(num_vertices, edges)?;
    Ok(BlockHost { kind, num_points, q, r, graph, blocks })
}

/// Finds configurations among a subset of a host's blocks. Implementations
/// must be complete: any minimal configuration fully inside the subset is
/// returned. That completeness is what makes sampled-then-searched pipelines
/// sound: a configuration inside the final matching would have been inside the
/// sampled subset, hence found and avoided.
pub trait ConfigDetector: Sync {
    /// Minimal configurations (as sorted global edge-id lists, lex-ordered)
    /// among the given ascending edge ids.
    fn configs_among(&self, edge_ids: &[u32]) -> Result<Vec<Vec<u32>>, DesignError>;
    /// Upper bound on configuration size searched (for reports).
    fn size_bound(&self) -> u32;
}

/// Detector over an explicit configuration hypergraph: restriction to the
/// subset.
pub struct ExplicitDetector<'a> {
    h: &'a ConfigHypergraph,
}

impl<'a> ExplicitDetector<'a> {
    #[must_use]
    pub fn new(h: &'a ConfigHypergraph) -> Self {
        ExplicitDetector { h }
    }
}

impl ConfigDetector for ExplicitDetector<'_> {
    fn configs_among(&self, edge_ids: &[u32]) -> Result<Vec<Vec<u32>>, DesignError> {
        let mut inside = vec![false; self.h.num_ground_edges() as usize];
        for &e in edge_ids {
            if e >= self.h.num_ground_edges() {
                return Err(HypergraphError::EdgeOutOfBounds { edge: e, num_edges: self.h.num_ground_edges() }.into());
            }
            inside[e as usize] = true;
        }
        let mut out: Vec<Vec<u32>> = self
            .h
            .iter_configs()
            .filter(|cfg| cfg.iter().all(|&e| inside[e as usize]))
            .map(<[u32]>::to_vec)
            .collect();
        out.sort();
        Ok(out)
    }

    fn size_bound(&self) -> u32 {
        self.h.max_size().max(2)
    }
}

/// Detector that searches a block host's structure directly; scales to edge
/// subsets of hosts far too large to materialize in full.
pub struct BlockConfigDetector<'a> {
    host: &'a BlockHost,
    g: u32,
    limits: SearchLimits,
}

impl<'a> BlockConfigDetector<'a> {
    pub fn new(host: &'a BlockHost, g: u32, limits: SearchLimits) -> Result<Self, DesignError> {
        if g < 2 {
            return Err(DesignError::BadParams(format!("need g >= 2, got {g}")));
        }
        Ok(BlockConfigDetector { host, g, limits })
    }
}

impl ConfigDetector for BlockConfigDetector<'_> {
    fn configs_among(&self, edge_ids: &[u32]) -> Result<Vec<Vec<u32>>, DesignError> {
        let blocks: Vec<u32> = edge_ids.iter().flat_map(|&e| self.host.block(e).iter().copied()).collect();
        enumerate_minimal_configs(
            self.host.num_points,
            self.host.q,
            self.host.r,
            self.g,
            edge_ids,
            &blocks,
            &self.limits,
        )
    }

    fn size_bound(&self) -> u32 {
        self.g
    }
}

/// Full auxiliary instance: the host plus every minimal configuration of size
/// 3..=g materialized. Practical for small n only (the search guard trips on
/// large hosts; sampled pipelines use `BlockConfigDetector` instead).
pub fn build_steiner_aux(
    n: u32,
    q: u32,
    r: u32,
    g: u32,
    limits: SearchLimits,
) -> Result<(BlockHost, ConfigHypergraph), DesignError> {
    let host = build_steiner_host(n, q, r)?;
    let h = materialize_configs(&host, g, limits)?;
    Ok((host, h))
}

/// Partite analogue of `build_steiner_aux`.
pub fn build_partite_aux(
    n: u32,
    q: u32,
    r: u32,
    g: u32,
    limits: SearchLimits,
) -> Result<(BlockHost, ConfigHypergraph), DesignError> {
    let host = build_partite_host(n, q, r)?;
    let h = materialize_configs(&host, g, limits)?;
    Ok((host, h))
}

fn materialize_configs(host: &BlockHost, g: u32, limits: SearchLimits) -> Result<ConfigHypergraph, DesignError> {
    let detector = BlockConfigDetector::new(host, g, limits)?;
    let all_ids: Vec<u32> = (0..host.num_blocks()).collect();
    let configs = detector.configs_among(&all_ids)?;
    Ok(ConfigHypergraph::new(host.graph(), configs)?)
}

/// Minimal-configuration search over an explicit block list.
///
/// A family of i blocks spanning at most i(q-r)+r points is tracked through
/// its excess: span(P) - (|P|(q-r)+r). Singletons have excess 0; in a minimal
/// configuration every proper sub-family of size >= 2 has excess >= 1 and the
/// whole family has excess <= 0. The search grows connected families from
/// each root block (the family's minimum id; minimal configurations are
/// connected), prunes any prefix whose excess leaves the reachable band, and
/// emits when the excess first drops to 0 or below. Pairs sharing >= r points
/// are excluded throughout (they are i=2 configurations), and emitted families
/// get a final all-subsets minimality check.
pub fn enumerate_minimal_configs(
    num_points: u32,
    q: u32,
    r: u32,
    g: u32,
    ids: &[u32],
    blocks: &[u32],
    limits: &SearchLimits,
) -> Result<Vec<Vec<u32>>, DesignError> {
    if g < 2 {
        return Err(DesignError::BadParams(format!("need g >= 2, got {g}")));
    }
    if blocks.len() != ids.len() * q as usize {
        return Err(DesignError::BadParams("block buffer does not match id list".into()));
    }
    if g == 2 || ids.len() < 3 {
        // Size-2 configurations are intersecting host edges, excluded by
        // matching-ness itself; nothing to materialize.
        return Ok(Vec::new());
    }
    let m = ids.len();
    let qd = q as usize;
    let block_of = |local: usize| -> &[u32] { &blocks[local * qd..(local + 1) * qd] };

    // Point -> local block ids (CSR).
    let mut counts = vec![0u32; num_points as usize + 1];
    for &p in blocks {
        counts[p as usize + 1] += 1;
    }
    for i in 0..num_points as usize {
        counts[i + 1] += counts[i];
    }
    let point_offsets = counts.clone();
    let mut cursor = counts;
    let mut point_blocks = vec![0u32; blocks.len()];
    for local in 0..m {
        for &p in block_of(local) {
            point_blocks[cursor[p as usize] as usize] = local as u32;
            cursor[p as usize] += 1;
        }
    }
    // Point pair -> local block ids, for extensions needing >= 2 shared points.
    let mut pair_index: std::collections::HashMap<(u32, u32), Vec<u32>> = std::collections::HashMap::new();
    for local in 0..m {
        let b = block_of(local);
        for i in 0..qd {
            for j in i + 1..qd {
                pair_index.entry((b[i], b[j])).or_default().push(local as u32);
            }
        }
    }

    let steps = AtomicU64::new(0);
    let emitted = AtomicU64::new(0);
    let qr = (q - r) as i64;

    let worker = Worker {
        q: qd,
        r,
        g,
        qr,
        ids,
        blocks,
        point_offsets: &point_offsets,
        point_blocks: &point_blocks,
        pair_index: &pair_index,
        limits,
        steps: &steps,
        emitted: &emitted,
    };

    use rayon::prelude::*;
    let per_root: Result<Vec<Vec<Vec<u32>>>, DesignError> =
        (0..m).into_par_iter().map(|root| worker.search_from(root)).collect();
    let mut configs: Vec<Vec<u32>> = per_root?.into_iter().flatten().collect();
    configs.sort();
    configs.dedup();
    Ok(configs)
}

struct Worker<'a> {
    q: usize,
    r: u32,
    g: u32,
    qr: i64,
    ids: &'a [u32],
    blocks: &'a [u32],
    point_offsets: &'a [u32],
    point_blocks: &'a [u32],
    pair_index: &'a std::collections::HashMap<(u32, u32), Vec<u32>>,
    limits: &'a SearchLimits,
    steps: &'a AtomicU64,
    emitted: &'a AtomicU64,
}

impl Worker<'_> {
    fn block_of(&self, local: usize) -> &[u32] {
        &self.blocks[local * self.q..(local + 1) * self.q]
    }

    fn blocks_at(&self, p: u32) -> &[u32] {
        &self.point_blocks[self.point_offsets[p as usize] as usize..self.point_offsets[p as usize + 1] as usize]
    }

    fn search_from(&self, root: usize) -> Result<Vec<Vec<u32>>, DesignError> {
        let mut found = Vec::new();
        let mut chosen = vec![root as u32];
        let mut span: Vec<u32> = self.block_of(root).to_vec();
        span.sort_unstable();
        let mut local_steps = 0u64;
        self.extend(root, &mut chosen, &mut span, 0, &mut found, &mut local_steps)?;
        let total = self.steps.fetch_add(local_steps, Ordering::Relaxed) + local_steps;
        if total > self.limits.max_steps {
            return Err(DesignError::GuardExceeded { what: "search steps", value: total, cap: self.limits.max_steps });
        }
        let em = self.emitted.fetch_add(found.len() as u64, Ordering::Relaxed) + found.len() as u64;
        if em > self.limits.max_configs {
            return Err(DesignError::GuardExceeded { what: "configurations", value: em, cap: self.limits.max_configs });
        }
        Ok(found)
    }

    /// Shared-point count between a candidate block and the current span.
    fn sharing(&self, cand: usize, span: &[u32]) -> u32 {
        self.block_of(cand).iter().filter(|p| span.binary_search(p).is_ok()).count() as u32
    }

    /// Pairwise constraint: candidate must share <= r-1 points with every
    /// chosen block (a pair sharing >= r points is an i=2 configuration).
    fn pairwise_ok(&self, cand: usize, chosen: &[u32]) -> bool {
        let cb = self.block_of(cand);
        chosen.iter().all(|&c| {
            let other = self.block_of(c as usize);
            let mut shared = 0u32;
            for p in cb {
                if other.binary_search(p).is_ok() {
                    shared += 1;
                    if shared >= self.r {
                        return false;
                    }
                }
            }
            true
        })
    }

    fn extend(
        &self,
        root: usize,
        chosen: &mut Vec<u32>,
        span: &mut Vec<u32>,
        excess: i64,
        found: &mut Vec<Vec<u32>>,
        local_steps: &mut u64,
    ) -> Result<(), DesignError> {
        let k = chosen.len() as u32;
        if k >= self.g {
            return Ok(());
        }
        // Feasibility floor on sharing: future blocks each lower the excess by
        // at most q-r, so a candidate adding excess r - s must keep
        // excess + r - s <= (g - k - 1)(q - r).
        let s_floor = excess + self.r as i64 - (self.g as i64 - k as i64 - 1) * self.qr;
        let s_min = s_floor.max(1) as u32;

        // Candidate generation: point index for s_min = 1, pair index for
        // s_min >= 2 (a block sharing >= 2 points contains some span pair).
        let mut cands: Vec<u32> = Vec::new();
        if s_min <= 1 {
            for &p in span.iter() {
                cands.extend_from_slice(self.blocks_at(p));
            }
        } else {
            for i in 0..span.len() {
                for j in i + 1..span.len() {
                    if let Some(list) = self.pair_index.get(&(span[i], span[j])) {
                        cands.extend_from_slice(list);
                    }
                }
            }
        }
        cands.sort_unstable();
        cands.dedup();

        *local_steps += cands.len() as u64;
        if *local_steps > self.limits.max_steps {
            return Err(DesignError::GuardExceeded {
                what: "search steps",
                value: *local_steps,
                cap: self.limits.max_steps,
            });
        }

        for cand in cands {
            let cand = cand as usize;
            // Root is the family minimum; avoid duplicates across roots.
            if cand <= root || chosen.contains(&(cand as u32)) {
                continue;
            }
            let s = self.sharing(cand, span);
            if s < s_min {
                continue;
            }
            if !self.pairwise_ok(cand, chosen) {
                continue;
            }
            let new_excess = excess + self.r as i64 - s as i64;
            if new_excess <= 0 {
                // First time at or below the bound: a configuration of size
                // k+1 (>= 3: pairs cannot get here past the pairwise check).
                chosen.push(cand as u32);
                if self.subset_minimal(chosen) {
                    let mut cfg: Vec<u32> = chosen.iter().map(|&l| self.ids[l as usize]).collect();
                    cfg.sort_unstable();
                    found.push(cfg);
                }
                chosen.pop();
                continue;
            }
            // Keep growing: prefix stays strictly above the bound, preserving
            // minimality of anything emitted deeper.
            if k + 1 >= self.g {
                continue;
            }
            let old_span_len = span.len();
            let mut added: Vec<u32> = Vec::new();
            for &p in self.block_of(cand) {
                if span.binary_search(&p).is_err() {
                    added.push(p);
                }
            }
            span.extend_from_slice(&added);
            span.sort_unstable();
            chosen.push(cand as u32);
            let res = self.extend(root, chosen, span, new_excess, found, local_steps);
            chosen.pop();
            // Restore span: remove the added points.
            span.retain(|p| !added.contains(p));
            debug_assert_eq!(span.len(), old_span_len);
            res?;
        }
        Ok(())
    }

    /// Emitted families must contain no smaller configuration: every subset of
    /// size 3..len-1 needs excess >= 1 (size-2 subsets were excluded by the
    /// pairwise check; prefixes were kept at excess >= 1, but non-prefix
    /// subsets must be checked here).
    fn subset_minimal(&self, chosen: &[u32]) -> bool {
        let len = chosen.len();
        if len <= 3 {
            return true;
        }
        let mut pts: Vec<u32> = Vec::new();
        for size in 3..len {
            let mut mask = (1u32 << size) - 1;
            let last = mask << (len - size);
            loop {
                pts.clear();
                for (i, &b) in chosen.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        pts.extend_from_slice(self.block_of(b as usize));
                    }
                }
                pts.sort_unstable();
                pts.dedup();
                let bound = size as i64 * self.qr + self.r as i64;
                if (pts.len() as i64) <= bound {
                    return false;
                }
                if mask == last {
                    break;
                }
                // Next subset of the same size (Gosper's hack).
                let c = mask & mask.wrapping_neg();
                let rr = mask + c;
                mask = (((rr ^ mask) >> 2) / c) | rr;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::is_h_avoiding;

    #[test]
    fn steiner_host_7_3_2_counts() {
        let host = build_steiner_host(7, 3, 2).unwrap();
        let g = host.graph();
        assert_eq!(g.num_vertices(), 21);
        assert_eq!(g.num_edges(), 35);
        assert_eq!(host.regular_degree(), 5);
        for v in 0..21 {
            assert_eq!(g.degree(v).unwrap(), 5);
        }
        // Each edge is a 3-vertex shadow of a 3-point block.
        for e in 0..35 {
            assert_eq!(g.edge(e).len(), 3);
            assert_eq!(host.block(e).len(), 3);
        }
    }

    #[test]
    fn steiner_aux_7_3_2_4_is_all_quadruples() {
        let (host, h) = build_steiner_aux(7, 3, 2, 4, SearchLimits::default()).unwrap();
        // No 3-block family on <= 5 points exists in a triple system, so every
        // configuration has size 4 spanning 6 points; 30 per 6-point set.
        assert_eq!(h.num_configs(), 210);
        for cfg in h.iter_configs() {
            assert_eq!(cfg.len(), 4);
            let mut pts: Vec<u32> = cfg.iter().flat_map(|&e| host.block(e).iter().copied()).collect();
            pts.sort_unstable();
            pts.dedup();
            assert_eq!(pts.len(), 6);
        }
        // The classical quadruple {0,1,2},{0,3,4},{1,3,5},{2,4,5} is present.
        let id_of = |pts: &[u32]| (0..35).find(|&e| host.block(e) == pts).unwrap();
        let quad = vec![
            id_of(&[0, 1, 2]),
            id_of(&[0, 3, 4]),
            id_of(&[1, 3, 5]),
            id_of(&[2, 4, 5]),
        ];
        let mut quad_sorted = quad.clone();
        quad_sorted.sort_unstable();
        assert!(h.iter_configs().any(|c| c == quad_sorted.as_slice()));
        // Size-4 degree through any edge: 210 * 4 / 35 = 24 by symmetry.
        for e in 0..35 {
            assert_eq!(h.i_degree(e, 4).unwrap(), 24);
            assert_eq!(h.i_degree(e, 3).unwrap(), 0);
        }
        // Two blocks sharing a point lie in 2(n-5) = 4 common quadruples;
        // three blocks determine the fourth.
        assert_eq!(h.kl_codegree_max(4, 2).unwrap(), 4);
        assert_eq!(h.kl_codegree_max(4, 3).unwrap(), 1);
    }

    #[test]
    fn steiner_aux_configs_match_brute_force_small() {
        for (n, g) in [(7u32, 4u32), (8, 4)] {
            let (host, h) = build_steiner_aux(n, 3, 2, g, SearchLimits::default()).unwrap();
            let brute = brute_force_minimal(&host, g);
            let fast: Vec<Vec<u32>> = h.iter_configs().map(<[u32]>::to_vec).collect();
            assert_eq!(fast, brute, "mismatch at n={n} g={g}");
        }
    }

    #[test]
    fn steiner_aux_configs_match_brute_force_g5() {
        // g = 5 exercises mixed sizes (i = 4 and i = 5 families).
        let (host, h) = build_steiner_aux(7, 3, 2, 5, SearchLimits::default()).unwrap();
        let brute = brute_force_minimal(&host, 5);
        let fast: Vec<Vec<u32>> = h.iter_configs().map(<[u32]>::to_vec).collect();
        assert_eq!(fast, brute);
        assert!(h.iter_configs().any(|c| c.len() == 5), "expected some size-5 configurations");
    }

    /// Exhaustive reference: all minimal families by direct subset scan.
    fn brute_force_minimal(host: &BlockHost, g: u32) -> Vec<Vec<u32>> {
        let nb = host.num_blocks();
        let span_of = |set: &[u32]| -> usize {
            let mut pts: Vec<u32> = set.iter().flat_map(|&e| host.block(e).iter().copied()).collect();
            pts.sort_unstable();
            pts.dedup();
            pts.len()
        };
        let is_config = |set: &[u32]| -> bool {
            let i = set.len() as i64;
            let bound = i * (host.q() - host.r()) as i64 + host.r() as i64;
            (span_of(set) as i64) <= bound
        };
        let mut all: Vec<Vec<u32>> = Vec::new();
        for i in 3..=g {
            for_each_subset(nb, i, |idx| {
                if !is_config(idx) {
                    return;
                }
                // Minimal: no proper subset of size >= 2 is a configuration.
                for sub_size in 2..i {
                    let mut bad = false;
                    for_each_subset(i, sub_size, |sel| {
                        if bad {
                            return;
                        }
                        let sub: Vec<u32> = sel.iter().map(|&j| idx[j as usize]).collect();
                        if is_config(&sub) {
                            bad = true;
                        }
                    });
                    if bad {
                        return;
                    }
                }
                all.push(idx.to_vec());
            });
        }
        all.sort();
        all
    }

    #[test]
    fn partite_host_2_3_2_counts() {
        let (host, h) = build_partite_aux(2, 3, 2, 2, SearchLimits::default()).unwrap();
        assert_eq!(host.graph().num_vertices(), 12);
        assert_eq!(host.graph().num_edges(), 8);
        assert_eq!(h.num_configs(), 0);
        assert_eq!(host.regular_degree(), 2);
        for v in 0..12 {
            assert_eq!(host.graph().degree(v).unwrap(), 2);
        }
    }

    #[test]
    fn partite_single_column_is_one_block() {
        let host = build_partite_host(1, 3, 2).unwrap();
        assert_eq!(host.graph().num_edges(), 1);
        assert_eq!(host.graph().num_vertices(), 3);
    }

    #[test]
    fn partite_configs_match_brute_force() {
        let (host, h) = build_partite_aux(3, 3, 2, 4, SearchLimits::default()).unwrap();
        let brute = brute_force_minimal(&host, 4);
        let fast: Vec<Vec<u32>> = h.iter_configs().map(<[u32]>::to_vec).collect();
        assert_eq!(fast, brute);
    }

    #[test]
    fn detector_on_subset_is_restriction() {
        let (host, h_full) = build_steiner_aux(7, 3, 2, 4, SearchLimits::default()).unwrap();
        let subset: Vec<u32> = (0..35).filter(|e| e % 2 == 0).collect();
        let det = BlockConfigDetector::new(&host, 4, SearchLimits::default()).unwrap();
        let found = det.configs_among(&subset).unwrap();
        let expl = ExplicitDetector::new(&h_full);
        let expected = expl.configs_among(&subset).unwrap();
        assert_eq!(found, expected);
    }

    #[test]
    fn guard_trips_on_tiny_budget() {
        let err = build_steiner_aux(7, 3, 2, 4, SearchLimits { max_configs: 10, max_steps: u64::MAX })
            .unwrap_err();
        assert!(matches!(err, DesignError::GuardExceeded { what: "configurations", .. }));
        let err = build_steiner_aux(7, 3, 2, 4, SearchLimits { max_configs: u64::MAX, max_steps: 50 })
            .unwrap_err();
        assert!(matches!(err, DesignError::GuardExceeded { what: "search steps", .. }));
    }

    #[test]
    fn bad_params_rejected() {
        assert!(build_steiner_host(3, 3, 2).is_err());
        assert!(build_steiner_host(7, 2, 2).is_err());
        assert!(build_steiner_aux(7, 3, 2, 1, SearchLimits::default()).is_err());
    }

    #[test]
    fn configs_are_matchings_of_the_host() {
        let (host, h) = build_steiner_aux(8, 3, 2, 4, SearchLimits::default()).unwrap();
        // ConfigHypergraph::new validated this; double-check through the
        // avoidance API on a config's own members.
        for c in 0..h.num_configs().min(20) {
            let m = Matching::new(host.graph(), h.config(c)).unwrap();
            assert!(!is_h_avoiding(host.graph(), &h, &m).unwrap().is_avoiding());
        }
    }
}
