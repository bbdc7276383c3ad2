//! Host hypergraph data model.
//!
//! A `Hypergraph` is the ground structure whose matchings we construct:
//! vertices are dense u32 ids, edges are sorted vertex sets stored in CSR
//! layout together with a vertex->edge incidence index. An optional
//! bipartition (A, B) marks instances where every edge meets A exactly once
//! and matchings are required to saturate A.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("vertex index {vertex} out of bounds for {num_vertices} vertices")]
    VertexOutOfBounds { vertex: u32, num_vertices: u32 },
    #[error("edge {edge} has a repeated vertex")]
    RepeatedVertex { edge: usize },
    #[error("edge {edge} is empty")]
    EmptyEdge { edge: usize },
    #[error("edge index {edge} out of bounds for {num_edges} edges")]
    EdgeOutOfBounds { edge: u32, num_edges: u32 },
    #[error("bipartition is not a partition of the vertex set")]
    BadBipartition,
    #[error("edge {edge} meets side A in {count} vertices (expected exactly 1)")]
    NotBipartiteEdge { edge: usize, count: usize },
    #[error("edges {first} and {second} share vertex {vertex}, not a matching")]
    NotAMatching { first: u32, second: u32, vertex: u32 },
    #[error("duplicate edge id {edge} in matching")]
    DuplicateEdge { edge: u32 },
}

/// Two-sided vertex partition for bipartite instances. Side A is the side a
/// perfect matching must saturate; every edge meets it in exactly one vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    in_a: Vec<bool>,
    size_a: u32,
}

impl Bipartition {
    /// Builds from the list of A-side vertices; everything else is B.
    pub fn from_side_a(num_vertices: u32, side_a: &[u32]) -> Result<Self, HypergraphError> {
        let mut in_a = vec![false; num_vertices as usize];
        for &v in side_a {
            if v >= num_vertices {
                return Err(HypergraphError::VertexOutOfBounds { vertex: v, num_vertices });
            }
            if in_a[v as usize] {
                return Err(HypergraphError::BadBipartition);
            }
            in_a[v as usize] = true;
        }
        Ok(Bipartition { in_a, size_a: side_a.len() as u32 })
    }

    #[inline]
    #[must_use]
    pub fn is_a(&self, v: u32) -> bool {
        self.in_a[v as usize]
    }

    #[must_use]
    pub fn side_a(&self) -> Vec<u32> {
        (0..self.in_a.len() as u32).filter(|&v| self.in_a[v as usize]).collect()
    }

    #[must_use]
    pub fn side_b(&self) -> Vec<u32> {
        (0..self.in_a.len() as u32).filter(|&v| !self.in_a[v as usize]).collect()
    }

    #[must_use]
    pub fn size_a(&self) -> u32 {
        self.size_a
    }
}

/// Ground hypergraph: dense vertex ids, CSR edge storage, eager incidence
/// index. Edge identity is the index into the edge list and is stable across
/// serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    num_vertices: u32,
    edge_offsets: Vec<u32>,
    edge_vertices: Vec<u32>,
    inc_offsets: Vec<u32>,
    inc_edges: Vec<u32>,
    bipartition: Option<Bipartition>,
}

impl Hypergraph {
    /// Builds from explicit edge lists. Vertices inside each edge are sorted;
    /// edges keep their given order (ids = positions).
    pub fn new(num_vertices: u32, edges: Vec<Vec<u32>>) -> Result<Self, HypergraphError> {
        Self::with_bipartition(num_vertices, edges, None)
    }

    /// Builds a bipartite instance; `side_a` lists the A-side vertices and
    /// every edge must meet A exactly once.
    pub fn bipartite(
        num_vertices: u32,
        edges: Vec<Vec<u32>>,
        side_a: &[u32],
    ) -> Result<Self, HypergraphError> {
        let bip = Bipartition::from_side_a(num_vertices, side_a)?;
        Self::with_bipartition(num_vertices, edges, Some(bip))
    }

    fn with_bipartition(
        num_vertices: u32,
        edges: Vec<Vec<u32>>,
        bipartition: Option<Bipartition>,
    ) -> Result<Self, HypergraphError> {
        let mut edge_offsets = Vec::with_capacity(edges.len() + 1);
        edge_offsets.push(0u32);
        let total: usize = edges.iter().map(Vec::len).sum();
        let mut edge_vertices = Vec::with_capacity(total);
        for (idx, mut e) in edges.into_iter().enumerate() {
            if e.is_empty() {
                return Err(HypergraphError::EmptyEdge { edge: idx });
            }
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(HypergraphError::RepeatedVertex { edge: idx });
            }
            for &v in &e {
                if v >= num_vertices {
                    return Err(HypergraphError::VertexOutOfBounds { vertex: v, num_vertices });
                }
            }
            if let Some(bip) = &bipartition {
                let count = e.iter().filter(|&&v| bip.is_a(v)).count();
                if count != 1 {
                    return Err(HypergraphError::NotBipartiteEdge { edge: idx, count });
                }
            }
            edge_vertices.extend_from_slice(&e);
            edge_offsets.push(edge_vertices.len() as u32);
        }

        // Vertex -> incident edges, CSR via counting sort; edge ids come out
        // ascending within each vertex bucket.
        let mut counts = vec![0u32; num_vertices as usize + 1];
        for &v in &edge_vertices {
            counts[v as usize + 1] += 1;
        }
        for i in 0..num_vertices as usize {
            counts[i + 1] += counts[i];
        }
        let inc_offsets = counts.clone();
        let mut cursor = counts;
        let mut inc_edges = vec![0u32; edge_vertices.len()];
        for e in 0..edge_offsets.len() - 1 {
            for i in edge_offsets[e] as usize..edge_offsets[e + 1] as usize {
                let v = edge_vertices[i] as usize;
                inc_edges[cursor[v] as usize] = e as u32;
                cursor[v] += 1;
            }
        }

        Ok(Hypergraph { num_vertices, edge_offsets, edge_vertices, inc_offsets, inc_edges, bipartition })
    }

    #[inline]
    #[must_use]
    pub fn num_vertices(&self) -> u32 {
        self.num_vertices
    }

    #[inline]
    #[must_use]
    pub fn num_edges(&self) -> u32 {
        (self.edge_offsets.len() - 1) as u32
    }

    /// Sorted vertex list of edge `e`.
    #[inline]
    #[must_use]
    pub fn edge(&self, e: u32) -> &[u32] {
        &self.edge_vertices[self.edge_offsets[e as usize] as usize..self.edge_offsets[e as usize + 1] as usize]
    }

    /// Ascending ids of edges incident with `v`.
    #[inline]
    #[must_use]
    pub fn incident_edges(&self, v: u32) -> &[u32] {
        &self.inc_edges[self.inc_offsets[v as usize] as usize..self.inc_offsets[v as usize + 1] as usize]
    }

    #[must_use]
    pub fn bipartition(&self) -> Option<&Bipartition> {
        self.bipartition.as_ref()
    }

    /// Number of edges containing `v`.
    pub fn degree(&self, v: u32) -> Result<u32, HypergraphError> {
        if v >= self.num_vertices {
            return Err(HypergraphError::VertexOutOfBounds { vertex: v, num_vertices: self.num_vertices });
        }
        Ok(self.incident_edges(v).len() as u32)
    }

    /// Number of edges containing both `u` and `v` (u != v). Merge-count over
    /// the two ascending incidence lists.
    pub fn pair_codegree(&self, u: u32, v: u32) -> Result<u32, HypergraphError> {
        for x in [u, v] {
            if x >= self.num_vertices {
                return Err(HypergraphError::VertexOutOfBounds { vertex: x, num_vertices: self.num_vertices });
            }
        }
        let (a, b) = (self.incident_edges(u), self.incident_edges(v));
        let (mut i, mut j, mut n) = (0usize, 0usize, 0u32);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(n)
    }

    /// The A-side vertex of edge `e` on a bipartite instance.
    #[must_use]
    pub fn a_vertex(&self, e: u32) -> Option<u32> {
        let bip = self.bipartition.as_ref()?;
        self.edge(e).iter().copied().find(|&v| bip.is_a(v))
    }

    /// Checks that the edge ids form a matching (pairwise disjoint edges).
    /// Returns the sorted, deduplicated id list on success.
    pub fn check_matching(&self, edge_ids: &[u32]) -> Result<Vec<u32>, HypergraphError> {
        let mut ids = edge_ids.to_vec();
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(HypergraphError::DuplicateEdge { edge: w[0] });
            }
        }
        let mut owner: Vec<u32> = vec![u32::MAX; self.num_vertices as usize];
        for &e in &ids {
            if e >= self.num_edges() {
                return Err(HypergraphError::EdgeOutOfBounds { edge: e, num_edges: self.num_edges() });
            }
            for &v in self.edge(e) {
                if owner[v as usize] != u32::MAX {
                    return Err(HypergraphError::NotAMatching { first: owner[v as usize], second: e, vertex: v });
                }
                owner[v as usize] = e;
            }
        }
        Ok(ids)
    }
}

/// A validated matching: sorted edge ids, pairwise disjoint in the hypergraph
/// it was checked against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    edge_ids: Vec<u32>,
}

impl Matching {
    pub fn new(g: &Hypergraph, edge_ids: &[u32]) -> Result<Self, HypergraphError> {
        Ok(Matching { edge_ids: g.check_matching(edge_ids)? })
    }

    #[must_use]
    pub fn edge_ids(&self) -> &[u32] {
        &self.edge_ids
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.edge_ids.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.edge_ids.is_empty()
    }

    /// True if every A-side vertex of the bipartite instance is covered.
    #[must_use]
    pub fn is_a_perfect(&self, g: &Hypergraph) -> bool {
        let Some(bip) = g.bipartition() else { return false };
        let mut covered = 0u32;
        for &e in &self.edge_ids {
            covered += g.edge(e).iter().filter(|&&v| bip.is_a(v)).count() as u32;
        }
        covered == bip.size_a()
    }
}

/// Serialized form: explicit edge lists plus optional bipartition sides.
#[derive(Debug, Serialize, Deserialize)]
struct HypergraphJson {
    num_vertices: u32,
    edges: Vec<Vec<u32>>,
    bipartition: Option<BipartitionJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BipartitionJson {
    #[serde(rename = "A")]
    a: Vec<u32>,
    #[serde(rename = "B")]
    b: Vec<u32>,
}

impl Serialize for Hypergraph {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let edges = (0..self.num_edges()).map(|e| self.edge(e).to_vec()).collect();
        let bipartition = self.bipartition.as_ref().map(|b| BipartitionJson { a: b.side_a(), b: b.side_b() });
        HypergraphJson { num_vertices: self.num_vertices, edges, bipartition }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Hypergraph {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = HypergraphJson::deserialize(de)?;
        let g = match raw.bipartition {
            Some(bip) => {
                // Check the declared B side really is the complement of A.
                let g = Hypergraph::bipartite(raw.num_vertices, raw.edges, &bip.a)
                    .map_err(serde::de::Error::custom)?;
                let mut b_expect = g.bipartition().unwrap().side_b();
                b_expect.sort_unstable();
                let mut b_given = bip.b;
                b_given.sort_unstable();
                if b_expect != b_given {
                    return Err(serde::de::Error::custom(HypergraphError::BadBipartition));
                }
                g
            }
            None => Hypergraph::new(raw.num_vertices, raw.edges).map_err(serde::de::Error::custom)?,
        };
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_ish() -> Hypergraph {
        // 3-uniform, 4 vertices, 3 edges, pairwise overlapping.
        Hypergraph::new(4, vec![vec![0, 1, 2], vec![1, 2, 3], vec![0, 2, 3]]).unwrap()
    }

    #[test]
    fn degree_single_edge() {
        let g = Hypergraph::new(3, vec![vec![0, 1, 2]]).unwrap();
        for v in 0..3 {
            assert_eq!(g.degree(v).unwrap(), 1);
        }
    }

    #[test]
    fn degree_empty_graph() {
        let g = Hypergraph::new(5, vec![]).unwrap();
        assert_eq!(g.degree(4).unwrap(), 0);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn degree_out_of_bounds_errors() {
        let g = triangle_ish();
        assert_eq!(
            g.degree(7),
            Err(HypergraphError::VertexOutOfBounds { vertex: 7, num_vertices: 4 })
        );
    }

    #[test]
    fn edges_are_sorted_and_indexed() {
        let g = Hypergraph::new(4, vec![vec![2, 0, 1], vec![3, 1, 2]]).unwrap();
        assert_eq!(g.edge(0), &[0, 1, 2]);
        assert_eq!(g.edge(1), &[1, 2, 3]);
        assert_eq!(g.incident_edges(1), &[0, 1]);
        assert_eq!(g.incident_edges(0), &[0]);
        assert_eq!(g.incident_edges(3), &[1]);
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(matches!(
            Hypergraph::new(3, vec![vec![0, 0, 1]]),
            Err(HypergraphError::RepeatedVertex { edge: 0 })
        ));
        assert!(matches!(Hypergraph::new(3, vec![vec![]]), Err(HypergraphError::EmptyEdge { edge: 0 })));
        assert!(matches!(
            Hypergraph::new(2, vec![vec![0, 5]]),
            Err(HypergraphError::VertexOutOfBounds { vertex: 5, num_vertices: 2 })
        ));
    }

    #[test]
    fn pair_codegree_counts_shared_edges() {
        let g = triangle_ish();
        assert_eq!(g.pair_codegree(1, 2).unwrap(), 2);
        assert_eq!(g.pair_codegree(0, 3).unwrap(), 1);
        assert_eq!(g.pair_codegree(0, 1).unwrap(), 1);
    }

    #[test]
    fn bipartite_validation() {
        // A = {0,1}; each edge exactly one A vertex.
        let g = Hypergraph::bipartite(4, vec![vec![0, 2, 3], vec![1, 2, 3]], &[0, 1]).unwrap();
        assert_eq!(g.a_vertex(0), Some(0));
        assert_eq!(g.a_vertex(1), Some(1));
        // Edge with two A vertices is rejected.
        assert!(matches!(
            Hypergraph::bipartite(4, vec![vec![0, 1, 2]], &[0, 1]),
            Err(HypergraphError::NotBipartiteEdge { edge: 0, count: 2 })
        ));
        // Edge with zero A vertices is rejected.
        assert!(matches!(
            Hypergraph::bipartite(4, vec![vec![2, 3]], &[0, 1]),
            Err(HypergraphError::NotBipartiteEdge { edge: 0, count: 0 })
        ));
    }

    #[test]
    fn matching_validation() {
        let g = Hypergraph::new(6, vec![vec![0, 1, 2], vec![3, 4, 5], vec![2, 3]]).unwrap();
        let m = Matching::new(&g, &[1, 0]).unwrap();
        assert_eq!(m.edge_ids(), &[0, 1]);
        assert!(matches!(
            Matching::new(&g, &[0, 2]),
            Err(HypergraphError::NotAMatching { vertex: 2, .. })
        ));
        assert!(matches!(Matching::new(&g, &[1, 1]), Err(HypergraphError::DuplicateEdge { edge: 1 })));
        assert!(matches!(Matching::new(&g, &[9]), Err(HypergraphError::EdgeOutOfBounds { edge: 9, .. })));
    }

    #[test]
    fn a_perfect_detection() {
        let g = Hypergraph::bipartite(5, vec![vec![0, 2, 3], vec![1, 4], vec![1, 2, 4]], &[0, 1]).unwrap();
        let m = Matching::new(&g, &[0, 1]).unwrap();
        assert!(m.is_a_perfect(&g));
        let m2 = Matching::new(&g, &[0]).unwrap();
        assert!(!m2.is_a_perfect(&g));
    }

    #[test]
    fn json_roundtrip_preserves_identity() {
        let g = Hypergraph::bipartite(4, vec![vec![0, 2, 3], vec![1, 2, 3]], &[0, 1]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: Hypergraph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        let s2 = serde_json::to_string(&back).unwrap();
        assert_eq!(s, s2, "serialization must be byte-stable");
    }

    #[test]
    fn json_rejects_inconsistent_bipartition() {
        let bad = r#"{"num_vertices":3,"edges":[[0,1]],"bipartition":{"A":[0],"B":[1]}}"#;
        assert!(serde_json::from_str::<Hypergraph>(bad).is_err());
    }
}
