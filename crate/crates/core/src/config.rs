//! Forbidden-configuration hypergraph.
//!
//! A `ConfigHypergraph` sits on top of a ground hypergraph G: its vertices are
//! G's edge ids and each of its edges ("configurations") is a set of >= 2
//! pairwise-disjoint G-edges that a matching must not fully contain.
//! Construction normalizes: configurations are sorted, deduplicated, and any
//! configuration containing another is dropped (avoiding the contained one
//! already avoids the container), as are configurations of size < 2.

use crate::hypergraph::{Hypergraph, HypergraphError, Matching};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("configuration {config} references ground edge {edge}, but the ground hypergraph has {num_edges} edges")]
    GroundEdgeOutOfBounds { config: usize, edge: u32, num_edges: u32 },
    #[error("configuration {config} is not a matching of the ground hypergraph: edges {first} and {second} intersect")]
    NotAMatching { config: usize, first: u32, second: u32 },
    #[error("ground mismatch: configurations are over {expected} ground edges, hypergraph has {actual}")]
    GroundMismatch { expected: u32, actual: u32 },
    #[error("degree scale D must be >= 1, got {d}")]
    BadDegreeScale { d: f64 },
    #[error("vertex {vertex} lies inside edge {edge}; the codegree is defined only for v outside e")]
    VertexInsideEdge { vertex: u32, edge: u32 },
    #[error("size parameters must satisfy k > l >= 1, got k={k}, l={l}")]
    BadSizeParams { k: u32, l: u32 },
    #[error(transparent)]
    Ground(#[from] HypergraphError),
}

/// Normalized configuration hypergraph over a ground hypergraph's edge ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigHypergraph {
    num_ground_edges: u32,
    cfg_offsets: Vec<u32>,
    cfg_members: Vec<u32>,
    inc_offsets: Vec<u32>,
    inc_configs: Vec<u32>,
    max_size: u32,
}

impl ConfigHypergraph {
    /// Builds and normalizes. Each configuration must be a matching of `ground`
    /// (pairwise-disjoint edges); containment supersets, duplicates, and
    /// configurations of size < 2 are dropped.
    pub fn new(ground: &Hypergraph, configs: Vec<Vec<u32>>) -> Result<Self, ConfigError> {
        // Validate and sort each configuration.
        let mut sorted: Vec<Vec<u32>> = Vec::with_capacity(configs.len());
        for (idx, mut c) in configs.into_iter().enumerate() {
            c.sort_unstable();
            c.dedup();
            for &e in &c {
                if e >= ground.num_edges() {
                    return Err(ConfigError::GroundEdgeOutOfBounds {
                        config: idx,
                        edge: e,
                        num_edges: ground.num_edges(),
                    });
                }
            }
            // Matching check: mark vertices, find an intersecting pair if any.
            let mut owner: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
            for &e in &c {
                for &v in ground.edge(e) {
                    if let Some(&first) = owner.get(&v) {
                        return Err(ConfigError::NotAMatching { config: idx, first, second: e });
                    }
                    owner.insert(v, e);
                }
            }
            if c.len() >= 2 {
                sorted.push(c);
            }
        }

        // Deduplicate, then drop supersets: process by ascending size; a
        // configuration is kept only if no kept configuration is a subset of
        // it. Subsets are strictly smaller (equals were deduplicated), so when
        // the candidate subset count is small it is cheapest to enumerate the
        // configuration's own sub-tuples of each kept size and look them up
        // directly; dense instances would otherwise pay for scanning every
        // kept configuration that shares a member. The member -> kept-ids scan
        // remains as the fallback for large configurations.
        sorted.sort();
        sorted.dedup();
        sorted.sort_by_key(Vec::len);
        let mut kept: Vec<Vec<u32>> = Vec::with_capacity(sorted.len());
        let mut kept_set: std::collections::HashSet<Vec<u32>> = std::collections::HashSet::new();
        let mut kept_sizes: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
        let mut by_member: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
        let lookup_budget = |c: &[u32], sizes: &std::collections::BTreeSet<usize>| -> Option<u64> {
            if c.len() > 16 {
                return None;
            }
            let mut total = 0u64;
            for &s in sizes.iter().take_while(|&&s| s < c.len()) {
                total += crate::combin::binomial(c.len() as u64, s as u64);
                if total > 4096 {
                    return None;
                }
            }
            Some(total)
        };
        'outer: for c in sorted {
            if lookup_budget(&c, &kept_sizes).is_some() {
                let mut sub = Vec::new();
                for &s in kept_sizes.iter().take_while(|&&s| s < c.len()) {
                    let mut hit = false;
                    crate::combin::for_each_subset(c.len() as u32, s as u32, |ix| {
                        if !hit {
                            sub.clear();
                            sub.extend(ix.iter().map(|&i| c[i as usize]));
                            hit = kept_set.contains(&sub);
                        }
                    });
                    if hit {
                        continue 'outer;
                    }
                }
            } else {
                let mut seen: std::collections::HashSet<u32> = std::collections::HashSet::new();
                for &e in &c {
                    if let Some(ids) = by_member.get(&e) {
                        for &t in ids {
                            if seen.insert(t) && kept[t as usize].iter().all(|m| c.binary_search(m).is_ok()) {
                                continue 'outer; // kept[t] is a subset of c
                            }
                        }
                    }
                }
            }
            let id = kept.len() as u32;
            for &e in &c {
                by_member.entry(e).or_default().push(id);
            }
            kept_sizes.insert(c.len());
            kept_set.insert(c.clone());
            kept.push(c);
        }

        // Canonical order: lexicographic by member list, so identical inputs
        // in any order produce identical serialized forms.
        kept.sort();

        let mut cfg_offsets = Vec::with_capacity(kept.len() + 1);
        cfg_offsets.push(0u32);
        let mut cfg_members = Vec::new();
        let mut max_size = 0u32;
        for c in &kept {
            cfg_members.extend_from_slice(c);
            cfg_offsets.push(cfg_members.len() as u32);
            max_size = max_size.max(c.len() as u32);
        }

        // Ground-edge -> configurations incidence.
        let ne = ground.num_edges() as usize;
        let mut counts = vec![0u32; ne + 1];
        for &e in &cfg_members {
            counts[e as usize + 1] += 1;
        }
        for i in 0..ne {
            counts[i + 1] += counts[i];
        }
        let inc_offsets = counts.clone();
        let mut cursor = counts;
        let mut inc_configs = vec![0u32; cfg_members.len()];
        for c in 0..cfg_offsets.len() - 1 {
            for i in cfg_offsets[c] as usize..cfg_offsets[c + 1] as usize {
                let e = cfg_members[i] as usize;
                inc_configs[cursor[e] as usize] = c as u32;
                cursor[e] += 1;
            }
        }

        Ok(ConfigHypergraph {
            num_ground_edges: ground.num_edges(),
            cfg_offsets,
            cfg_members,
            inc_offsets,
            inc_configs,
            max_size,
        })
    }

    /// An empty configuration hypergraph over `ground`.
    #[must_use]
    pub fn empty(ground: &Hypergraph) -> Self {
        ConfigHypergraph::new(ground, Vec::new()).expect("empty set always valid")
    }

    /// Ensures this configuration hypergraph matches the given ground.
    pub fn check_ground(&self, ground: &Hypergraph) -> Result<(), ConfigError> {
        if self.num_ground_edges != ground.num_edges() {
            return Err(ConfigError::GroundMismatch {
                expected: self.num_ground_edges,
                actual: ground.num_edges(),
            });
        }
        Ok(())
    }

    #[inline]
    #[must_use]
    pub fn num_ground_edges(&self) -> u32 {
        self.num_ground_edges
    }

    #[inline]
    #[must_use]
    pub fn num_configs(&self) -> u32 {
        (self.cfg_offsets.len() - 1) as u32
    }

    /// Sorted ground-edge ids of configuration `c`.
    #[inline]
    #[must_use]
    pub fn config(&self, c: u32) -> &[u32] {
        &self.cfg_members[self.cfg_offsets[c as usize] as usize..self.cfg_offsets[c as usize + 1] as usize]
    }

    /// Ascending ids of configurations containing ground edge `e`.
    #[inline]
    #[must_use]
    pub fn configs_containing(&self, e: u32) -> &[u32] {
        &self.inc_configs[self.inc_offsets[e as usize] as usize..self.inc_offsets[e as usize + 1] as usize]
    }

    /// Largest configuration size (0 when empty).
    #[inline]
    #[must_use]
    pub fn max_size(&self) -> u32 {
        self.max_size
    }

    pub fn iter_configs(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.num_configs()).map(move |c| self.config(c))
    }

    fn check_edge(&self, e: u32) -> Result<(), ConfigError> {
        if e >= self.num_ground_edges {
            return Err(HypergraphError::EdgeOutOfBounds { edge: e, num_edges: self.num_ground_edges }.into());
        }
        Ok(())
    }

    /// Number of size-`i` configurations containing ground edge `e`.
    pub fn i_degree(&self, e: u32, i: u32) -> Result<u32, ConfigError> {
        self.check_edge(e)?;
        Ok(self
            .configs_containing(e)
            .iter()
            .filter(|&&c| self.config(c).len() as u32 == i)
            .count() as u32)
    }

    /// Degree profile of `e`: (size, count) pairs for sizes with count > 0,
    /// ascending by size.
    pub fn degree_profile(&self, e: u32) -> Result<Vec<(u32, u32)>, ConfigError> {
        self.check_edge(e)?;
        let mut counts: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
        for &c in self.configs_containing(e) {
            *counts.entry(self.config(c).len() as u32).or_insert(0) += 1;
        }
        Ok(counts.into_iter().collect())
    }

    /// Number of size-`i` configurations that contain edge `e` together with
    /// at least one edge incident with vertex `v` (v outside e).
    pub fn cross_i_codegree(
        &self,
        ground: &Hypergraph,
        v: u32,
        e: u32,
        i: u32,
    ) -> Result<u32, ConfigError> {
        self.check_ground(ground)?;
        self.check_edge(e)?;
        if v >= ground.num_vertices() {
            return Err(HypergraphError::VertexOutOfBounds { vertex: v, num_vertices: ground.num_vertices() }.into());
        }
        if ground.edge(e).binary_search(&v).is_ok() {
            return Err(ConfigError::VertexInsideEdge { vertex: v, edge: e });
        }
        let count = self
            .configs_containing(e)
            .iter()
            .filter(|&&c| {
                let cfg = self.config(c);
                cfg.len() as u32 == i
                    && cfg.iter().any(|&f| f != e && ground.edge(f).binary_search(&v).is_ok())
            })
            .count();
        Ok(count as u32)
    }

    /// Max over all l-subsets S of ground edges of the number of size-k
    /// configurations containing S. Computed by bucketing each size-k
    /// configuration's l-subsets; 0 when no size-k configuration exists.
    pub fn kl_codegree_max(&self, k: u32, l: u32) -> Result<u32, ConfigError> {
        if l < 1 || k <= l {
            return Err(ConfigError::BadSizeParams { k, l });
        }
        let mut buckets: std::collections::HashMap<Vec<u32>, u32> = std::collections::HashMap::new();
        let mut best = 0u32;
        for c in 0..self.num_configs() {
            let cfg = self.config(c);
            if cfg.len() as u32 != k {
                continue;
            }
            crate::combin::for_each_subset(cfg.len() as u32, l, |idx| {
                let subset: Vec<u32> = idx.iter().map(|&i| cfg[i as usize]).collect();
                let n = buckets.entry(subset).or_insert(0);
                *n += 1;
                best = best.max(*n);
            });
        }
        Ok(best)
    }

    /// Weighted degree of ground edge `e` at degree scale `D`:
    /// sum over sizes i of d_i(e) * (i-1) / D^(i-1).
    pub fn weighted_degree(&self, e: u32, d: f64) -> Result<f64, ConfigError> {
        if !(d >= 1.0) {
            return Err(ConfigError::BadDegreeScale { d });
        }
        self.check_edge(e)?;
        let mut w = 0.0;
        for &c in self.configs_containing(e) {
            let i = self.config(c).len() as f64;
            w += (i - 1.0) / d.powf(i - 1.0);
        }
        Ok(w)
    }

    /// Max weighted degree over all ground edges (0 for an empty ground).
    pub fn max_weighted_degree(&self, d: f64) -> Result<f64, ConfigError> {
        if !(d >= 1.0) {
            return Err(ConfigError::BadDegreeScale { d });
        }
        let mut best = 0.0f64;
        for e in 0..self.num_ground_edges {
            best = best.max(self.weighted_degree(e, d)?);
        }
        Ok(best)
    }

    /// Mean weighted degree over all ground edges (0 for an empty ground).
    pub fn mean_weighted_degree(&self, d: f64) -> Result<f64, ConfigError> {
        if !(d >= 1.0) {
            return Err(ConfigError::BadDegreeScale { d });
        }
        if self.num_ground_edges == 0 {
            return Ok(0.0);
        }
        let mut sum = 0.0f64;
        for e in 0..self.num_ground_edges {
            sum += self.weighted_degree(e, d)?;
        }
        Ok(sum / self.num_ground_edges as f64)
    }
}

/// Result of an avoidance check: either the matching spans no configuration,
/// or a witness configuration it fully contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Avoidance {
    Avoiding,
    Violated { config_id: u32, members: Vec<u32> },
}

impl Avoidance {
    #[must_use]
    pub fn is_avoiding(&self) -> bool {
        matches!(self, Avoidance::Avoiding)
    }
}

/// Checks that matching `m` of `g` spans no configuration of `h`. The matching
/// was validated at construction; ground consistency is re-checked here.
pub fn is_h_avoiding(g: &Hypergraph, h: &ConfigHypergraph, m: &Matching) -> Result<Avoidance, ConfigError> {
    h.check_ground(g)?;
    let mut in_m = vec![false; g.num_edges() as usize];
    for &e in m.edge_ids() {
        if e >= g.num_edges() {
            return Err(HypergraphError::EdgeOutOfBounds { edge: e, num_edges: g.num_edges() }.into());
        }
        in_m[e as usize] = true;
    }
    for c in 0..h.num_configs() {
        let cfg = h.config(c);
        if cfg.iter().all(|&e| in_m[e as usize]) {
            return Ok(Avoidance::Violated { config_id: c, members: cfg.to_vec() });
        }
    }
    Ok(Avoidance::Avoiding)
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfigJson {
    configs: Vec<Vec<u32>>,
}

impl Serialize for ConfigHypergraph {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let configs = self.iter_configs().map(<[u32]>::to_vec).collect();
        ConfigJson { configs }.serialize(ser)
    }
}

/// Deserialized configuration lists cannot be validated without their ground
/// hypergraph; `RawConfigs` carries them until `into_config_hypergraph`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawConfigs {
    pub configs: Vec<Vec<u32>>,
}

impl RawConfigs {
    pub fn into_config_hypergraph(self, ground: &Hypergraph) -> Result<ConfigHypergraph, ConfigError> {
        ConfigHypergraph::new(ground, self.configs)
    }
}
