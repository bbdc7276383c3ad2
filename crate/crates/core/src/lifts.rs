//! Reductions between matching problems: the rainbow correspondence, the
//! disjoint-matchings lift, the list-coloring lift, B-side regularization, and
//! random weighted edge decrease.
//!
//! Every lift documents its id layout so callers can move between the lifted
//! and base instances without extra tables; each comes with a codec struct
//! whose encode/decode are exact inverses.

use crate::config::ConfigHypergraph;
use crate::designs::DesignError;
use crate::hypergraph::Hypergraph;
use crate::rng::{Purpose, Stream};
use serde::{Deserialize, Serialize};

/// A (not necessarily proper) total edge coloring: `colors[e]` is the color of
/// edge e, each strictly below `num_colors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColoring {
    pub colors: Vec<u32>,
    pub num_colors: u32,
}

impl EdgeColoring {
    fn validate(&self, g: &Hypergraph) -> Result<(), DesignError> {
        if self.colors.len() != g.num_edges() as usize {
            return Err(DesignError::BadParams(format!(
                "coloring covers {} edges, graph has {}",
                self.colors.len(),
                g.num_edges()
            )));
        }
        if let Some(&c) = self.colors.iter().find(|&&c| c >= self.num_colors) {
            return Err(DesignError::BadParams(format!("color {c} out of range {}", self.num_colors)));
        }
        Ok(())
    }
}

/// Lifts a colored hypergraph to the bipartite instance whose matchings are
/// exactly the rainbow matchings: side A is one vertex per color (ids
/// 0..num_colors), side B carries V(G) shifted by num_colors, and edge e
/// becomes {color(e)} ∪ {num_colors + v : v ∈ e} under the same edge id.
pub fn build_rainbow(g: &Hypergraph, phi: &EdgeColoring) -> Result<Hypergraph, DesignError> {
    phi.validate(g)?;
    let c = phi.num_colors;
    let edges: Vec<Vec<u32>> = (0..g.num_edges())
        .map(|e| {
            let mut lifted = vec![phi.colors[e as usize]];
            lifted.extend(g.edge(e).iter().map(|&v| c + v));
            lifted
        })
        .collect();
    let side_a: Vec<u32> = (0..c).collect();
    Ok(Hypergraph::bipartite(c + g.num_vertices(), edges, &side_a)?)
}

/// Id layout of the disjoint-matchings lift: base edge e in copy i becomes
/// lifted edge e*m + i; base vertex v in copy i is v*m + i; after the
/// |V(G)|*m copy vertices comes one hub vertex per base edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointLift {
    pub m: u32,
    pub base_vertices: u32,
    pub base_edges: u32,
}

impl DisjointLift {
    #[must_use]
    pub fn encode(&self, base_edge: u32, copy: u32) -> u32 {
        base_edge * self.m + copy
    }

    #[must_use]
    pub fn decode(&self, lifted_edge: u32) -> (u32, u32) {
        (lifted_edge / self.m, lifted_edge % self.m)
    }

    /// Splits a lifted matching into the per-copy base matchings (sorted base
    /// edge ids, one list per copy). The hub vertices force the lists to be
    /// pairwise disjoint.
    pub fn decode_matching(&self, lifted_edges: &[u32]) -> Result<Vec<Vec<u32>>, DesignError> {
        let mut per_copy: Vec<Vec<u32>> = vec![Vec::new(); self.m as usize];
        for &le in lifted_edges {
            if le >= self.base_edges * self.m {
                return Err(DesignError::BadParams(format!("lifted edge {le} out of range")));
            }
            let (e, i) = self.decode(le);
            per_copy[i as usize].push(e);
        }
        for list in &mut per_copy {
            list.sort_unstable();
        }
        Ok(per_copy)
    }
}

/// The disjoint-matchings lift: A' = A x [m], B' = (B x [m]) ∪ E(G), and each
/// base edge contributes m lifted edges e_i = {(v,i) : v ∈ e} ∪ {e}. An
/// A'-perfect avoiding matching of the lift decodes to m pairwise
/// edge-disjoint A-perfect avoiding matchings of the base: the hub vertex for
/// e admits at most one of its m lifted copies. Configurations are lifted per
/// copy.
pub fn lift_disjoint(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    m: u32,
) -> Result<(Hypergraph, ConfigHypergraph, DisjointLift), DesignError> {
    if m < 1 {
        return Err(DesignError::BadParams("need m >= 1".into()));
    }
    let Some(bip) = g.bipartition() else {
        return Err(DesignError::BadParams("disjoint lift needs a bipartite base".into()));
    };
    h.check_ground(g)?;
    let nv = g.num_vertices();
    let ne = g.num_edges();
    let lift = DisjointLift { m, base_vertices: nv, base_edges: ne };
    let hub = |e: u32| nv * m + e;

    let mut edges: Vec<Vec<u32>> = Vec::with_capacity((ne * m) as usize);
    for e in 0..ne {
        for i in 0..m {
            let mut le: Vec<u32> = g.edge(e).iter().map(|&v| v * m + i).collect();
            le.push(hub(e));
            edges.push(le);
        }
    }
    let side_a: Vec<u32> = bip.side_a().iter().flat_map(|&a| (0..m).map(move |i| a * m + i)).collect();
    let lifted_g = Hypergraph::bipartite(nv * m + ne, edges, &side_a)?;

    let mut configs: Vec<Vec<u32>> = Vec::with_capacity(h.num_configs() as usize * m as usize);
    for s in h.iter_configs() {
        for i in 0..m {
            let mut cfg: Vec<u32> = s.iter().map(|&e| lift.encode(e, i)).collect();
            cfg.sort_unstable();
            configs.push(cfg);
        }
    }
    let lifted_h = ConfigHypergraph::new(&lifted_g, configs)?;
    Ok((lifted_g, lifted_h, lift))
}

/// A total list assignment: `lists[e]` is the nonempty sorted set of colors
/// allowed on edge e, all strictly below `num_colors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListAssignment {
    pub lists: Vec<Vec<u32>>,
    pub num_colors: u32,
}

impl ListAssignment {
    fn validate(&self, g: &Hypergraph) -> Result<(), DesignError> {
        if self.lists.len() != g.num_edges() as usize {
            return Err(DesignError::BadParams(format!(
                "list assignment covers {} edges, graph has {}",
                self.lists.len(),
                g.num_edges()
            )));
        }
        for (e, l) in self.lists.iter().enumerate() {
            if l.is_empty() {
                return Err(DesignError::BadParams(format!("edge {e} has an empty list")));
            }
            if l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DesignError::BadParams(format!("list of edge {e} is not sorted and distinct")));
            }
            if *l.last().unwrap() >= self.num_colors {
                return Err(DesignError::BadParams(format!(
                    "list of edge {e} exceeds color range {}",
                    self.num_colors
                )));
            }
        }
        Ok(())
    }
}

/// Id layout of the list-coloring lift: lifted edge ids group by base edge
/// (offsets into the flattened, sorted color lists); A-side vertex e is base
/// edge e's hub; B-side vertex for (v, c) is |E(G)| + v*num_colors + c.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListLift {
    pub offsets: Vec<u32>,
    pub colors: Vec<u32>,
    pub num_colors: u32,
}

impl ListLift {
    /// Lifted edge id for (base edge, color), if the color is in the list.
    #[must_use]
    pub fn encode(&self, base_edge: u32, color: u32) -> Option<u32> {
        let lo = *self.offsets.get(base_edge as usize)? as usize;
        let hi = *self.offsets.get(base_edge as usize + 1)? as usize;
        self.colors[lo..hi].binary_search(&color).ok().map(|k| (lo + k) as u32)
    }

    #[must_use]
    pub fn decode(&self, lifted_edge: u32) -> (u32, u32) {
        let e = self.offsets.partition_point(|&o| o <= lifted_edge) - 1;
        (e as u32, self.colors[lifted_edge as usize])
    }

    /// Reads a lifted matching as a partial coloring (base edge, color),
    /// sorted by base edge. The hub vertices force each base edge to appear at
    /// most once.
    pub fn decode_matching(&self, lifted_edges: &[u32]) -> Result<Vec<(u32, u32)>, DesignError> {
        let mut out = Vec::with_capacity(lifted_edges.len());
        for &le in lifted_edges {
            if le as usize >= self.colors.len() {
                return Err(DesignError::BadParams(format!("lifted edge {le} out of range")));
            }
            out.push(self.decode(le));
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// The list-coloring lift: side A is E(G) (one hub per base edge), side B is
/// V(G) x colors, and each allowed pair (e, c) becomes the lifted edge
/// {(v,c) : v ∈ e} ∪ {e}. An A-perfect avoiding matching decodes to a total
/// list coloring whose color classes are matchings of G avoiding H; a
/// configuration S is forbidden monochromatically in every common list color.
pub fn lift_list(
    g: &Hypergraph,
    h: &ConfigHypergraph,
    l: &ListAssignment,
) -> Result<(Hypergraph, ConfigHypergraph, ListLift), DesignError> {
    l.validate(g)?;
    h.check_ground(g)?;
    let ne = g.num_edges();
    let c = l.num_colors;
    let mut offsets = Vec::with_capacity(ne as usize + 1);
    offsets.push(0u32);
    let mut colors = Vec::new();
    for list in &l.lists {
        colors.extend_from_slice(list);
        offsets.push(colors.len() as u32);
    }
    let lift = ListLift { offsets, colors, num_colors: c };

    let num_vertices = ne + g.num_vertices() * c;
    let mut edges: Vec<Vec<u32>> = Vec::with_capacity(lift.colors.len());
    for e in 0..ne {
        for &col in &l.lists[e as usize] {
            let mut le = vec![e];
            le.extend(g.edge(e).iter().map(|&v| ne + v * c + col));
            edges.push(le);
        }
    }
    let side_a: Vec<u32> = (0..ne).collect();
    let lifted_g = Hypergraph::bipartite(num_vertices, edges, &side_a)?;

    let mut configs: Vec<Vec<u32>> = Vec::new();
    for s in h.iter_configs() {
        // Colors allowed on every member of the configuration.
        let mut common: Vec<u32> = l.lists[s[0] as usize].clone();
        for &e in &s[1..] {
            let list = &l.lists[e as usize];
            common.retain(|c| list.binary_search(c).is_ok());
            if common.is_empty() {
                break;
            }
        }
        for &col in &common {
            let mut cfg: Vec<u32> =
                s.iter().map(|&e| lift.encode(e, col).expect("color is in every list")).collect();
            cfg.sort_unstable();
            configs.push(cfg);
        }
    }
    let lifted_h = ConfigHypergraph::new(&lifted_g, configs)?;
    Ok((lifted_g, lifted_h, lift))
}

/// Default ceiling on regularization output size.
pub const REGULARIZE_MAX_EDGES: u64 = 10_000_000;

/// Raises every B-side degree to exactly `d_b` while keeping all A-side
/// degrees at `d_a`, by induction on the B-degree deficit: each step takes
/// d_a*(r-1) disjoint copies of the current graph and, per deficient
/// B-vertex x, one fresh A-vertex with d_a new edges, the j-th covering the
/// copies j(r-1)..(j+1)(r-1) of x — so each copy of x gains exactly one edge.
///
/// The input occupies copy 0 at every step, so it sits in the output as an
/// induced subhypergraph under the identity id map (vertex v and edge e of the
/// input are vertex v and edge e of the output).
pub fn regularize(g: &Hypergraph, d_a: u32, d_b: u32) -> Result<Hypergraph, DesignError> {
    regularize_with_limit(g, d_a, d_b, REGULARIZE_MAX_EDGES)
}

pub fn regularize_with_limit(
    g: &Hypergraph,
    d_a: u32,
    d_b: u32,
    max_edges: u64,
) -> Result<Hypergraph, DesignError> {
    let Some(bip) = g.bipartition() else {
        return Err(DesignError::BadParams("regularize needs a bipartite input".into()));
    };
    if d_a < 1 {
        return Err(DesignError::BadParams("need d_a >= 1".into()));
    }
    for a in bip.side_a() {
        let d = g.degree(a)?;
        if d != d_a {
            return Err(DesignError::BadParams(format!("A-vertex {a} has degree {d}, expected {d_a}")));
        }
    }
    let mut min_b = u32::MAX;
    for b in bip.side_b() {
        let d = g.degree(b)?;
        if d > d_b {
            return Err(DesignError::BadParams(format!("B-vertex {b} has degree {d} above target {d_b}")));
        }
        min_b = min_b.min(d);
    }
    if min_b == u32::MAX || min_b == d_b {
        return Ok(g.clone());
    }
    // Raising degrees needs the edge size; uniformity r >= 2 required.
    if g.num_edges() == 0 {
        return Err(DesignError::BadParams("cannot regularize an edgeless graph to positive degree".into()));
    }
    let r = g.edge(0).len() as u32;
    if r < 2 {
        return Err(DesignError::BadParams("need edge size >= 2".into()));
    }
    for e in 0..g.num_edges() {
        if g.edge(e).len() as u32 != r {
            return Err(DesignError::BadParams(format!(
                "edge {e} has size {}, expected uniform {r}",
                g.edge(e).len()
            )));
        }
    }

    let copies = d_a as u64 * (r as u64 - 1);
    let mut cur = g.clone();
    for _ in 0..d_b - min_b {
        let bip = cur.bipartition().expect("bipartition is preserved");
        let deficient: Vec<u32> = bip.side_b().into_iter().filter(|&b| cur.degree(b).unwrap() < d_b).collect();
        let projected =
            copies * cur.num_edges() as u64 + deficient.len() as u64 * d_a as u64;
        if projected > max_edges {
            return Err(DesignError::GuardExceeded { what: "regularized edges", value: projected, cap: max_edges });
        }
        let nv = cur.num_vertices();
        let k = copies as u32;
        // Copy i of vertex v: i*nv + v, so copy 0 keeps the original ids.
        let mut edges: Vec<Vec<u32>> = Vec::with_capacity(projected as usize);
        for i in 0..k {
            for e in 0..cur.num_edges() {
                edges.push(cur.edge(e).iter().map(|&v| i * nv + v).collect());
            }
        }
        let mut side_a: Vec<u32> =
            (0..k).flat_map(|i| bip.side_a().into_iter().map(move |a| i * nv + a)).collect();
        let mut next_vertex = k * nv;
        for &x in &deficient {
            let helper = next_vertex;
            next_vertex += 1;
            side_a.push(helper);
            for j in 0..d_a {
                let mut e = vec![helper];
                for t in 0..r - 1 {
                    let copy = j * (r - 1) + t;
                    e.push(copy * nv + x);
                }
                edges.push(e);
            }
        }
        cur = Hypergraph::bipartite(next_vertex, edges, &side_a)?;
    }
    Ok(cur)
}

/// Keeps each edge independently with its own probability, all coins drawn
/// from the counter stream (seed, round 0, EdgeSample, edge id). Returns the
/// spanning subhypergraph and the kept original edge ids in ascending order.
pub fn random_decrease(
    g: &Hypergraph,
    weights: &[f64],
    seed: u64,
) -> Result<(Hypergraph, Vec<u32>), DesignError> {
    if weights.len() != g.num_edges() as usize {
        return Err(DesignError::BadParams(format!(
            "{} weights for {} edges",
            weights.len(),
            g.num_edges()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w) || w.is_nan()) {
        return Err(DesignError::BadParams(format!("weight {w} outside [0,1]")));
    }
    let stream = Stream::new(seed, 0, Purpose::EdgeSample);
    let kept: Vec<u32> =
        (0..g.num_edges()).filter(|&e| stream.bernoulli(e as u64, weights[e as usize])).collect();
    let edges: Vec<Vec<u32>> = kept.iter().map(|&e| g.edge(e).to_vec()).collect();
    let sub = match g.bipartition() {
        Some(bip) => Hypergraph::bipartite(g.num_vertices(), edges, &bip.side_a())?,
        None => Hypergraph::new(g.num_vertices(), edges)?,
    };
    Ok((sub, kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::Matching;

    fn triangle() -> Hypergraph {
        Hypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
    }

    #[test]
    fn rainbow_single_edge() {
        let g = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let phi = EdgeColoring { colors: vec![0], num_colors: 1 };
        let lifted = build_rainbow(&g, &phi).unwrap();
        assert_eq!(lifted.num_edges(), 1);
        assert_eq!(lifted.edge(0), &[0, 1, 2]);
        assert!(lifted.bipartition().unwrap().is_a(0));
    }

    #[test]
    fn rainbow_same_color_edges_conflict() {
        let g = Hypergraph::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let phi = EdgeColoring { colors: vec![5, 5], num_colors: 6 };
        let lifted = build_rainbow(&g, &phi).unwrap();
        assert_eq!(lifted.num_edges(), 2);
        for e in 0..2 {
            assert_eq!(lifted.edge(e).len(), g.edge(e).len() + 1);
        }
        // Vertex-disjoint in the base, but they share the color vertex.
        assert!(Matching::new(&lifted, &[0, 1]).is_err());
        assert!(Matching::new(&lifted, &[0]).is_ok());
    }

    #[test]
    fn rainbow_rejects_partial_or_out_of_range() {
        let g = triangle();
        assert!(build_rainbow(&g, &EdgeColoring { colors: vec![0, 1], num_colors: 2 }).is_err());
        assert!(build_rainbow(&g, &EdgeColoring { colors: vec![0, 1, 2], num_colors: 2 }).is_err());
    }

    fn small_bipartite() -> (Hypergraph, ConfigHypergraph) {
        // A = {0,1}, B = {2,3,4,5}; two disjoint A-perfect matchings
        // ({e0,e2} and {e1,e3}); both configurations are matchings.
        let g = Hypergraph::bipartite(
            6,
            vec![vec![0, 2], vec![0, 3], vec![1, 4], vec![1, 5]],
            &[0, 1],
        )
        .unwrap();
        let h = ConfigHypergraph::new(&g, vec![vec![0, 3], vec![1, 2]]).unwrap();
        (g, h)
    }

    #[test]
    fn disjoint_lift_shapes_and_roundtrip() {
        let (g, h) = small_bipartite();
        let m = 3;
        let (lg, lh, lift) = lift_disjoint(&g, &h, m).unwrap();
        assert_eq!(lg.num_edges(), g.num_edges() * m);
        // |B'| = |B|*m + e(G), |A'| = |A|*m.
        assert_eq!(lg.num_vertices(), g.num_vertices() * m + g.num_edges());
        let bip = lg.bipartition().unwrap();
        assert_eq!(bip.size_a(), 2 * m);
        assert_eq!(lh.num_configs(), h.num_configs() * m);
        for e in 0..lg.num_edges() {
            let (base, copy) = lift.decode(e);
            assert_eq!(lift.encode(base, copy), e);
            assert_eq!(lg.edge(e).len(), g.edge(base).len() + 1);
        }
    }

    #[test]
    fn disjoint_lift_decodes_to_disjoint_matchings() {
        let (g, h) = small_bipartite();
        let (lg, _lh, lift) = lift_disjoint(&g, &h, 2).unwrap();
        // Copy 0 takes the matching {e0,e2}, copy 1 takes {e1,e3}.
        let lifted = vec![lift.encode(0, 0), lift.encode(2, 0), lift.encode(1, 1), lift.encode(3, 1)];
        let m = Matching::new(&lg, &lifted).unwrap();
        assert!(m.is_a_perfect(&lg));
        let decoded = lift.decode_matching(m.edge_ids()).unwrap();
        assert_eq!(decoded, vec![vec![0, 2], vec![1, 3]]);
        // The same base edge in two copies is blocked by its hub vertex.
        assert!(Matching::new(&lg, &[lift.encode(0, 0), lift.encode(0, 1)]).is_err());
    }

    #[test]
    fn disjoint_lift_rejects_non_bipartite() {
        let g = triangle();
        let h = ConfigHypergraph::empty(&g);
        assert!(lift_disjoint(&g, &h, 2).is_err());
    }

    #[test]
    fn list_lift_shapes_and_decoding() {
        let (g, h) = small_bipartite();
        let l = ListAssignment {
            lists: vec![vec![0, 1], vec![0], vec![1, 2], vec![0, 2]],
            num_colors: 3,
        };
        let (lg, lh, lift) = lift_list(&g, &h, &l).unwrap();
        assert_eq!(lg.num_edges() as usize, 2 + 1 + 2 + 2);
        assert_eq!(lg.num_vertices(), g.num_edges() + g.num_vertices() * 3);
        // Config {0,3} has common colors {0}; config {1,2} has none.
        assert_eq!(lh.num_configs(), 1);
        for e in 0..lg.num_edges() {
            let (base, color) = lift.decode(e);
            assert_eq!(lift.encode(base, color), Some(e));
        }
        assert_eq!(lift.encode(1, 2), None);

        // e2 and e3 share base vertex 1, so the same color collides on (1,c).
        let clash = vec![lift.encode(2, 2).unwrap(), lift.encode(3, 2).unwrap()];
        assert!(Matching::new(&lg, &clash).is_err());

        // 0->1, 1->0, 2->2, 3->0 is proper and list-valid.
        let lifted: Vec<u32> = vec![
            lift.encode(0, 1).unwrap(),
            lift.encode(1, 0).unwrap(),
            lift.encode(2, 2).unwrap(),
            lift.encode(3, 0).unwrap(),
        ];
        let m = Matching::new(&lg, &lifted).unwrap();
        assert!(m.is_a_perfect(&lg));
        let coloring = lift.decode_matching(m.edge_ids()).unwrap();
        assert_eq!(coloring, vec![(0, 1), (1, 0), (2, 2), (3, 0)]);
    }

    #[test]
    fn list_lift_rejects_empty_lists() {
        let (g, h) = small_bipartite();
        let l = ListAssignment { lists: vec![vec![0], vec![], vec![0], vec![0]], num_colors: 1 };
        assert!(lift_list(&g, &h, &l).is_err());
    }

    #[test]
    fn regularize_hand_example() {
        // Single edge {a, b}: one step to raise b from degree 1 to 2.
        let g = Hypergraph::bipartite(2, vec![vec![0, 1]], &[0]).unwrap();
        let out = regularize(&g, 1, 2).unwrap();
        assert_eq!(out.num_vertices(), 3);
        assert_eq!(out.num_edges(), 2);
        assert_eq!(out.edge(0), &[0, 1]); // the input, identity-embedded
        assert_eq!(out.edge(1), &[1, 2]); // helper A-vertex 2 covering b
        let bip = out.bipartition().unwrap();
        assert!(bip.is_a(0) && bip.is_a(2) && !bip.is_a(1));
        assert_eq!(out.degree(1).unwrap(), 2);
    }

    #[test]
    fn regularize_already_regular_is_identity() {
        let g = Hypergraph::bipartite(
            4,
            vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]],
            &[0, 1],
        )
        .unwrap();
        let out = regularize(&g, 2, 2).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn regularize_exact_degrees_r3() {
        // A = {0,1}, B = {2..6}; A-degrees 2, B-degrees in {1, 2}.
        let g = Hypergraph::bipartite(
            7,
            vec![vec![0, 2, 3], vec![0, 4, 5], vec![1, 2, 4], vec![1, 3, 6]],
            &[0, 1],
        )
        .unwrap();
        let d_a = 2;
        let d_b = 3;
        let out = regularize(&g, d_a, d_b).unwrap();
        let bip = out.bipartition().unwrap();
        for a in bip.side_a() {
            assert_eq!(out.degree(a).unwrap(), d_a, "A-vertex {a}");
        }
        for b in bip.side_b() {
            assert_eq!(out.degree(b).unwrap(), d_b, "B-vertex {b}");
        }
        // Identity embedding: the input is induced on its own vertex ids.
        for e in 0..g.num_edges() {
            assert_eq!(out.edge(e), g.edge(e));
        }
        // Induced: no output edge lies fully inside V(G) except the originals.
        for e in g.num_edges()..out.num_edges() {
            assert!(
                out.edge(e).iter().any(|&v| v >= g.num_vertices()),
                "edge {e} should touch a new vertex"
            );
        }
        // Uniformity preserved.
        for e in 0..out.num_edges() {
            assert_eq!(out.edge(e).len(), 3);
        }
    }

    #[test]
    fn regularize_rejects_bad_inputs() {
        let g = Hypergraph::bipartite(2, vec![vec![0, 1]], &[0]).unwrap();
        assert!(regularize(&g, 2, 2).is_err()); // A-degree is 1, not 2
        assert!(regularize(&g, 1, 0).is_err()); // B-degree already above target
        let tri = triangle();
        assert!(regularize(&tri, 1, 2).is_err()); // not bipartite
    }

    #[test]
    fn regularize_guard_trips() {
        // d_a = 3, r = 2: each induction step triples the copy count.
        let g = Hypergraph::bipartite(4, vec![vec![0, 1], vec![0, 2], vec![0, 3]], &[0]).unwrap();
        let err = regularize_with_limit(&g, 3, 10, 100).unwrap_err();
        assert!(matches!(err, DesignError::GuardExceeded { .. }));
    }

    #[test]
    fn random_decrease_extremes() {
        let g = triangle();
        let (all, kept) = random_decrease(&g, &[1.0, 1.0, 1.0], 7).unwrap();
        assert_eq!(all, g);
        assert_eq!(kept, vec![0, 1, 2]);
        let (none, kept) = random_decrease(&g, &[0.0, 0.0, 0.0], 7).unwrap();
        assert_eq!(none.num_edges(), 0);
        assert_eq!(none.num_vertices(), 3);
        assert!(kept.is_empty());
        assert!(random_decrease(&g, &[0.5, 0.5], 7).is_err());
        assert!(random_decrease(&g, &[0.5, 0.5, 1.5], 7).is_err());
    }

    #[test]
    fn random_decrease_mean_degree_matches_weights() {
        // 10^4 parallel pairs at vertex 0, each kept with probability 1/2:
        // expected degree 5000, tolerance 3 binomial standard deviations.
        let n = 10_000u32;
        let edges: Vec<Vec<u32>> = (0..n).map(|_| vec![0, 1]).collect();
        let g = Hypergraph::new(2, edges).unwrap();
        let weights = vec![0.5; n as usize];
        let (sub, _) = random_decrease(&g, &weights, 20240915).unwrap();
        let mean = sub.degree(0).unwrap() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((mean - 5000.0).abs() <= 3.0 * sigma, "degree {mean} too far from 5000");
    }
}
