//! Cycles in configuration hypergraphs.
//!
//! An i-cycle is an alternating sequence of distinct configurations and
//! distinct ground edges c_1, v_1, ..., c_i, v_i with v_j in c_j and in
//! c_{j+1 mod i}. The girth is the length of a shortest cycle. Short cycles
//! (length <= 4) are what the sparsifier must destroy, split into 2-cycles
//! (good/bad by set differences), loose triangles, and loose 4-cycles:
//! "loose" means consecutive configurations share exactly their link and
//! non-consecutive ones are disjoint.

use crate::config::{ConfigError, ConfigHypergraph};
use serde::{Deserialize, Serialize};

/// Classification of a short cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleKind {
    /// Two configurations sharing >= 2 ground edges, where at least one
    /// two-sided difference has >= 2 elements.
    GoodTwoCycle,
    /// Two configurations sharing >= 2 ground edges with both differences of
    /// size exactly 1.
    BadTwoCycle,
    /// Three configurations, consecutive pairs sharing exactly one link each,
    /// all links distinct.
    LooseTriangle,
    /// Four configurations in cyclic order, consecutive pairs sharing exactly
    /// one link, opposite pairs disjoint.
    LooseFourCycle,
    /// A cycle found by the girth search that is none of the above shapes.
    General,
}

/// A concrete cycle: configurations in cyclic order and the linking ground
/// edges, with `links[j]` shared by `configs[j]` and `configs[(j+1) % i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleWitness {
    pub kind: CycleKind,
    pub configs: Vec<u32>,
    pub links: Vec<u32>,
}

impl CycleWitness {
    #[must_use]
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Checks the alternating-sequence conditions against `h`.
    pub fn validate(&self, h: &ConfigHypergraph) -> Result<(), String> {
        let i = self.configs.len();
        if i < 2 || self.links.len() != i {
            return Err(format!("witness has {} configs and {} links", i, self.links.len()));
        }
        let mut cs = self.configs.clone();
        cs.sort_unstable();
        cs.dedup();
        if cs.len() != i {
            return Err("repeated configuration".into());
        }
        let mut ls = self.links.clone();
        ls.sort_unstable();
        ls.dedup();
        if ls.len() != i {
            return Err("repeated link".into());
        }
        for j in 0..i {
            let c = self.configs[j];
            let c_next = self.configs[(j + 1) % i];
            if c >= h.num_configs() || c_next >= h.num_configs() {
                return Err("config id out of range".into());
            }
            let v = self.links[j];
            if h.config(c).binary_search(&v).is_err() || h.config(c_next).binary_search(&v).is_err() {
                return Err(format!("link {v} not shared by configs {c} and {c_next}"));
            }
        }
        Ok(())
    }
}

/// Sorted intersection size of two sorted slices.
fn intersection(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn classify_two_cycle(a: &[u32], b: &[u32], shared: usize) -> CycleKind {
    let diff_a = a.len() - shared;
    let diff_b = b.len() - shared;
    // Normalized configuration hypergraphs never nest, so both differences are
    // nonempty; "good" needs one of them to have >= 2 elements.
    if diff_a >= 2 || diff_b >= 2 {
        CycleKind::GoodTwoCycle
    } else {
        CycleKind::BadTwoCycle
    }
}

/// Shortest cycle of length <= `cap` through any configuration, or None.
///
/// Search runs BFS from each configuration over the bipartite incidence graph
/// (configurations on one side, ground edges on the other); a cycle of length
/// 2i there is an i-cycle here. `cap` must be >= 2. Cycles longer than `cap`
/// are not sought.
pub fn girth(h: &ConfigHypergraph, cap: u32) -> Result<Option<CycleWitness>, ConfigError> {
    if cap < 2 {
        return Err(ConfigError::BadSizeParams { k: cap, l: cap });
    }
    let nc = h.num_configs() as usize;
    if nc < 2 {
        return Ok(None);
    }
    let ne = h.num_ground_edges() as usize;
    // Incidence-graph node ids: configs are 0..nc, ground edge e is nc + e.
    let total = nc + ne;
    let node_neighbors = |u: usize| -> &[u32] {
        if u < nc {
            h.config(u as u32)
        } else {
            h.configs_containing((u - nc) as u32)
        }
    };
    let mut best: Option<CycleWitness> = None;
    let mut best_len = cap as usize + 1;

    let mut level = vec![u32::MAX; total];
    let mut parent = vec![u32::MAX; total];
    let mut queue: Vec<u32> = Vec::new();

    for root in 0..nc {
        // BFS limited to depth cap (incidence depth = 2*cap/2): a cycle
        // through root of hypergraph-length L uses incidence levels up to L.
        level.iter_mut().for_each(|x| *x = u32::MAX);
        parent.iter_mut().for_each(|x| *x = u32::MAX);
        queue.clear();
        queue.push(root as u32);
        level[root] = 0;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            let lu = level[u];
            // A meeting of two branches at incidence depth d closes a cycle of
            // incidence length <= 2d+1; only depths with 2d < 2*best_len matter.
            if lu as usize >= best_len {
                continue;
            }
            let neigh: Vec<usize> = if u < nc {
                node_neighbors(u).iter().map(|&e| nc + e as usize).collect()
            } else {
                node_neighbors(u).iter().map(|&c| c as usize).collect()
            };
            for w in neigh {
                if w == parent[u] as usize {
                    continue;
                }
                if level[w] == u32::MAX {
                    level[w] = lu + 1;
                    parent[w] = u as u32;
                    queue.push(w as u32);
                } else {
                    // Non-tree edge: reconstruct the closed walk through the
                    // two root paths; its length bounds the cycle length.
                    if let Some(wit) = reconstruct(h, nc, &parent, u, w) {
                        if wit.configs.len() <= cap as usize && wit.configs.len() < best_len {
                            best_len = wit.configs.len();
                            best = Some(wit);
                        }
                    }
                }
            }
        }
        if best_len == 2 {
            break; // cannot beat a 2-cycle
        }
    }
    Ok(best.map(|mut w| {
        w.kind = classify_witness(h, &w);
        w
    }))
}

/// Builds a cycle witness from BFS parent chains of two adjacent nodes. Walks
/// both root paths to their lowest common node; the fused loop alternates
/// configs and ground edges by bipartiteness. Returns None for degenerate
/// meetings (same node, or loop shorter than 2 configs).
fn reconstruct(h: &ConfigHypergraph, nc: usize, parent: &[u32], u: usize, w: usize) -> Option<CycleWitness> {
    let path = |mut x: usize| -> Vec<usize> {
        let mut p = vec![x];
        while parent[x] != u32::MAX {
            x = parent[x] as usize;
            p.push(x);
        }
        p
    };
    let pu = path(u);
    let pw = path(w);
    // Trim the common suffix (paths share the tail back to the root).
    let mut iu = pu.len();
    let mut iw = pw.len();
    while iu > 0 && iw > 0 && pu[iu - 1] == pw[iw - 1] {
        iu -= 1;
        iw -= 1;
    }
    // Loop: pu[0..=iu] forward + shared node + pw[0..=iw] backward, closed by
    // the (u,w) edge. pu[iu] == pw[iw] is the meeting node.
    let mut loop_nodes: Vec<usize> = pu[..=iu].to_vec();
    for k in (0..=iw.saturating_sub(1)).rev() {
        loop_nodes.push(pw[k]);
    }
    // Nodes alternate sides; a valid cycle has even length >= 4.
    if loop_nodes.len() < 4 || loop_nodes.len() % 2 != 0 {
        return None;
    }
    // Distinctness check (BFS trees guarantee it below the meeting point, but
    // be defensive: reject duplicates rather than emitting a bad witness).
    let mut seen = loop_nodes.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != loop_nodes.len() {
        return None;
    }
    // Rotate so a configuration is first.
    if loop_nodes[0] >= nc {
        loop_nodes.rotate_left(1);
    }
    let mut configs = Vec::with_capacity(loop_nodes.len() / 2);
    let mut links = Vec::with_capacity(loop_nodes.len() / 2);
    for pair in loop_nodes.chunks(2) {
        if pair[0] >= nc || pair[1] < nc {
            return None;
        }
        configs.push(pair[0] as u32);
        links.push((pair[1] - nc) as u32);
    }
    let wit = CycleWitness { kind: CycleKind::General, configs, links };
    wit.validate(h).ok()?;
    Some(wit)
}

pub(crate) fn classify_witness(h: &ConfigHypergraph, w: &CycleWitness) -> CycleKind {
    match w.configs.len() {
        2 => {
            let a = h.config(w.configs[0]);
            let b = h.config(w.configs[1]);
            let shared = intersection(a, b).len();
            classify_two_cycle(a, b, shared)
        }
        3 | 4 => {
            let i = w.configs.len();
            let loose_consecutive = (0..i).all(|j| {
                intersection(h.config(w.configs[j]), h.config(w.configs[(j + 1) % i])).len() == 1
            });
            let opposite_disjoint = i == 3
                || intersection(h.config(w.configs[0]), h.config(w.configs[2])).is_empty()
                    && intersection(h.config(w.configs[1]), h.config(w.configs[3])).is_empty();
            if loose_consecutive && opposite_disjoint {
                if i == 3 {
                    CycleKind::LooseTriangle
                } else {
                    CycleKind::LooseFourCycle
                }
            } else {
                CycleKind::General
            }
        }
        _ => CycleKind::General,
    }
}

/// All short cycles the sparsifier targets: every 2-cycle (good and bad),
/// every loose triangle, and every loose 4-cycle. Witness lists are
/// deterministic: sorted by (kind order, config ids).
pub fn find_short_cycles(h: &ConfigHypergraph) -> Vec<CycleWitness> {
    let mut out = Vec::new();
    let nc = h.num_configs();

    // --- 2-cycles: pairs of configurations sharing >= 2 ground edges. Found
    // by counting shared members through the incidence lists.
    let mut pair_counts: std::collections::HashMap<(u32, u32), u32> = std::collections::HashMap::new();
    for e in 0..h.num_ground_edges() {
        let cfgs = h.configs_containing(e);
        for (i, &a) in cfgs.iter().enumerate() {
            for &b in &cfgs[i + 1..] {
                *pair_counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let mut two_cycles: Vec<(u32, u32)> = pair_counts
        .iter()
        .filter(|&(_, &cnt)| cnt >= 2)
        .map(|(&k, _)| k)
        .collect();
    two_cycles.sort_unstable();
    for (a, b) in two_cycles {
        let shared = intersection(h.config(a), h.config(b));
        let kind = classify_two_cycle(h.config(a), h.config(b), shared.len());
        out.push(CycleWitness { kind, configs: vec![a, b], links: vec![shared[0], shared[1]] });
    }

    // Adjacency restricted to exactly-one-shared-edge pairs, with the link.
    // adj[c] = sorted list of (other config, link edge).
    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nc as usize];
    {
        let mut link_of: std::collections::HashMap<(u32, u32), (u32, u32)> = std::collections::HashMap::new();
        for e in 0..h.num_ground_edges() {
            let cfgs = h.configs_containing(e);
            for (i, &a) in cfgs.iter().enumerate() {
                for &b in &cfgs[i + 1..] {
                    let entry = link_of.entry((a, b)).or_insert((0, e));
                    entry.0 += 1;
                }
            }
        }
        for ((a, b), (cnt, link)) in link_of {
            if cnt == 1 {
                adj[a as usize].push((b, link));
                adj[b as usize].push((a, link));
            }
        }
        for l in &mut adj {
            l.sort_unstable();
        }
    }

    // --- Loose triangles: c0 < c1 < c2 pairwise loose-adjacent with three
    // distinct links.
    let mut triangles: Vec<CycleWitness> = Vec::new();
    for c0 in 0..nc {
        for &(c1, l01) in &adj[c0 as usize] {
            if c1 <= c0 {
                continue;
            }
            for &(c2, l12) in &adj[c1 as usize] {
                if c2 <= c1 {
                    continue;
                }
                let Some(&(_, l20)) = adj[c2 as usize].iter().find(|&&(x, _)| x == c0) else {
                    continue;
                };
                // Links must be pairwise distinct for an alternating cycle.
                if l01 != l12 && l12 != l20 && l01 != l20 {
                    triangles.push(CycleWitness {
                        kind: CycleKind::LooseTriangle,
                        configs: vec![c0, c1, c2],
                        links: vec![l01, l12, l20],
                    });
                }
            }
        }
    }
    out.extend(triangles);

    // --- Loose 4-cycles: opposite pair (c0, c2) disjoint, two distinct
    // middles c1, c3 loose-adjacent to both, middles disjoint, links distinct.
    // Canonical form: c0 = min config, and c1 < c3 to kill the reflection.
    let mut fours: Vec<CycleWitness> = Vec::new();
    for c0 in 0..nc {
        // Wedges c0 - mid - c2 with c2 > c0.
        let mut wedges: std::collections::HashMap<u32, Vec<(u32, u32, u32)>> = std::collections::HashMap::new();
        for &(mid, l0m) in &adj[c0 as usize] {
            if mid <= c0 {
                // mid may be smaller than c0? Canonicalize on c0 = min of all
                // four, so mid must be > c0 as well.
                continue;
            }
            for &(c2, lm2) in &adj[mid as usize] {
                if c2 <= c0 || c2 == mid {
                    continue;
                }
                wedges.entry(c2).or_default().push((mid, l0m, lm2));
            }
        }
        let mut keys: Vec<u32> = wedges.keys().copied().collect();
        keys.sort_unstable();
        for c2 in keys {
            if !intersection(h.config(c0), h.config(c2)).is_empty() {
                continue;
            }
            let mids = &wedges[&c2];
            for (i, &(m1, l01, l12)) in mids.iter().enumerate() {
                for &(m3, l03, l32) in &mids[i + 1..] {
                    if m1 == m3 || !intersection(h.config(m1), h.config(m3)).is_empty() {
                        continue;
                    }
                    // Four links pairwise distinct.
                    let mut ls = [l01, l12, l32, l03];
                    ls.sort_unstable();
                    if ls.windows(2).any(|w| w[0] == w[1]) {
                        continue;
                    }
                    fours.push(CycleWitness {
                        kind: CycleKind::LooseFourCycle,
                        configs: vec![c0, m1, c2, m3],
                        links: vec![l01, l12, l32, l03],
                    });
                }
            }
        }
    }
    out.extend(fours);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Hypergraph;

    fn free_ground(edges: u32) -> Hypergraph {
        let e = (0..edges).map(|i| vec![2 * i, 2 * i + 1]).collect();
        Hypergraph::new(2 * edges, e).unwrap()
    }

    #[test]
    fn empty_and_single_config_have_no_cycles() {
        let g = free_ground(4);
        let h = ConfigHypergraph::empty(&g);
        assert!(girth(&h, 4).unwrap().is_none());
        let h1 = ConfigHypergraph::new(&g, vec![vec![0, 1, 2]]).unwrap();
        assert!(girth(&h1, 4).unwrap().is_none());
        assert!(find_short_cycles(&h1).is_empty());
    }

    #[test]
    fn two_cycle_detected_and_classified() {
        let g = free_ground(5);
        // {0,1,2} and {0,1,3}: differences both singletons -> bad.
        let h = ConfigHypergraph::new(&g, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let w = girth(&h, 4).unwrap().expect("2-cycle");
        assert_eq!(w.configs.len(), 2);
        assert_eq!(w.kind, CycleKind::BadTwoCycle);
        w.validate(&h).unwrap();

        // {0,1,2,4} and {0,1,3}: one difference has two elements -> good.
        let h2 = ConfigHypergraph::new(&g, vec![vec![0, 1, 2, 4], vec![0, 1, 3]]).unwrap();
        let w2 = girth(&h2, 4).unwrap().expect("2-cycle");
        assert_eq!(w2.kind, CycleKind::GoodTwoCycle);
        let found = find_short_cycles(&h2);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, CycleKind::GoodTwoCycle);
    }

    #[test]
    fn loose_triangle_detected() {
        let g = free_ground(6);
        // Pairwise shares: {0}, {1}, {2}; all distinct links.
        let h = ConfigHypergraph::new(&g, vec![vec![0, 1, 3], vec![1, 2, 4], vec![0, 2, 5]]).unwrap();
        let w = girth(&h, 4).unwrap().expect("triangle");
        assert_eq!(w.configs.len(), 3);
        w.validate(&h).unwrap();
        let found = find_short_cycles(&h);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, CycleKind::LooseTriangle);
        assert_eq!(found[0].configs, vec![0, 1, 2]);
    }

    #[test]
    fn tree_structure_has_large_girth() {
        let g = free_ground(7);
        // A path of configs sharing single distinct edges: no cycle.
        let h = ConfigHypergraph::new(&g, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]).unwrap();
        assert!(girth(&h, 4).unwrap().is_none());
        assert!(find_short_cycles(&h).is_empty());
    }

    #[test]
    fn loose_four_cycle_detected() {
        let g = free_ground(8);
        // Square: c0={0,4,5}? Keep it simple: consecutive single shares,
        // opposite disjoint.
        let h = ConfigHypergraph::new(
            &g,
            vec![
                vec![0, 1, 4], // c0: shares 1 with c1, 0 with c3
                vec![1, 2, 5], // c1: shares 2 with c2
                vec![2, 3, 6], // c2: shares 3 with c3
                vec![0, 3, 7], // c3
            ],
        )
        .unwrap();
        let w = girth(&h, 4).unwrap().expect("4-cycle");
        assert_eq!(w.configs.len(), 4);
        w.validate(&h).unwrap();
        let found = find_short_cycles(&h);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, CycleKind::LooseFourCycle);
        // Girth with cap 3 must not report the 4-cycle.
        assert!(girth(&h, 3).unwrap().is_none());
        assert!(girth(&h, 2).unwrap().is_none());
    }

    #[test]
    fn girth_prefers_shortest() {
        let g = free_ground(10);
        // Both a 2-cycle ({0,1,2},{0,1,3}) and a loose triangle among others.
        let h = ConfigHypergraph::new(
            &g,
            vec![
                vec![0, 1, 2],
                vec![0, 1, 3],
                vec![4, 5, 8],
                vec![5, 6, 9],
                vec![4, 6, 7],
            ],
        )
        .unwrap();
        let w = girth(&h, 4).unwrap().unwrap();
        assert_eq!(w.configs.len(), 2);
    }

    #[test]
    fn cap_validation() {
        let g = free_ground(3);
        let h = ConfigHypergraph::empty(&g);
        assert!(girth(&h, 1).is_err());
    }
}
