use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::Result;
use crate::lattice::{FaceCoord, HexDomain};
use crate::model::boundary::{BoundaryCondition, ResolvedBoundary};

pub const NONE: u32 = u32::MAX;

/// Node-level view of a domain plus its exterior ring under a fixed boundary
/// condition. Nodes `0..n_domain` are the domain faces in domain order, the
/// remaining nodes are ring faces with frozen spins.
#[derive(Debug)]
pub struct SpinGraph {
    domain: Arc<HexDomain>,
    bc: BoundaryCondition,
    n_domain: usize,
    coords: Vec<FaceCoord>,
    /// Neighbours in counterclockwise order; `NONE` outside domain ∪ ring.
    nbrs: Vec<[u32; 6]>,
    /// Triangles (hexagonal vertices) with at least one domain face.
    triangles: Vec<[u32; 3]>,
    ring_spins: Vec<i8>,
    /// Ring node groups merged into one cluster vertex.
    groups: Vec<Vec<u32>>,
    group_of: Vec<u32>,
    n_edges: usize,
}

impl SpinGraph {
    pub fn new(domain: &HexDomain, bc: &BoundaryCondition) -> Result<Arc<Self>> {
        Self::with_shared(Arc::new(domain.clone()), bc)
    }

    pub fn with_shared(domain: Arc<HexDomain>, bc: &BoundaryCondition) -> Result<Arc<Self>> {
        let ResolvedBoundary { ring, spins, groups } = bc.resolve(&domain)?;
        let n_domain = domain.len();
        let coords: Vec<FaceCoord> = domain.faces().iter().copied().chain(ring.iter().copied()).collect();
        let index: HashMap<FaceCoord, u32> = coords.iter().enumerate().map(|(i, &f)| (f, i as u32)).collect();
        let nbrs: Vec<[u32; 6]> = coords
            .iter()
            .map(|f| f.neighbors().map(|g| index.get(&g).copied().unwrap_or(NONE)))
            .collect();

        let mut tri_set = BTreeSet::new();
        for (f, nb) in nbrs.iter().enumerate().take(n_domain) {
            for i in 0..6 {
                let (a, b) = (nb[i], nb[(i + 1) % 6]);
                debug_assert!(a != NONE && b != NONE);
                let mut t = [f as u32, a, b];
                t.sort_unstable();
                tri_set.insert(t);
            }
        }
        let triangles: Vec<[u32; 3]> = tri_set.into_iter().collect();

        let mut group_of = vec![NONE; coords.len()];
        let groups: Vec<Vec<u32>> = groups
            .into_iter()
            .enumerate()
            .map(|(g, members)| {
                members
                    .into_iter()
                    .map(|m| {
                        let node = (n_domain + m) as u32;
                        group_of[node as usize] = g as u32;
                        node
                    })
                    .collect()
            })
            .collect();

        let n_edges = (0..n_domain)
            .map(|f| nbrs[f].iter().filter(|&&g| (g as usize) >= n_domain || (g as usize) > f).count())
            .sum();

        Ok(Arc::new(Self {
            domain,
            bc: bc.clone(),
            n_domain,
            coords,
            nbrs,
            triangles,
            ring_spins: spins,
            groups,
            group_of,
            n_edges,
        }))
    }

    pub fn domain(&self) -> &HexDomain {
        &self.domain
    }

    pub fn shared_domain(&self) -> Arc<HexDomain> {
        Arc::clone(&self.domain)
    }

    pub fn boundary(&self) -> &BoundaryCondition {
        &self.bc
    }

    /// Number of domain faces.
    #[inline]
    pub fn n_domain(&self) -> usize {
        self.n_domain
    }

    /// Domain plus ring nodes.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coord(&self, node: usize) -> FaceCoord {
        self.coords[node]
    }

    #[inline]
    pub fn nbrs(&self, node: usize) -> &[u32; 6] {
        &self.nbrs[node]
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn ring_spins(&self) -> &[i8] {
        &self.ring_spins
    }

    pub fn groups(&self) -> &[Vec<u32>] {
        &self.groups
    }

    #[inline]
    pub fn group_of(&self, node: usize) -> Option<usize> {
        let g = self.group_of[node];
        (g != NONE).then_some(g as usize)
    }

    /// Hexagonal edges bordering at least one domain face.
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_face_graph() {
        let d = HexDomain::hex_box(1, 1).unwrap();
        let g = SpinGraph::new(&d, &BoundaryCondition::Free).unwrap();
        assert_eq!(g.n_domain(), 1);
        assert_eq!(g.n_nodes(), 7);
        assert_eq!(g.triangles().len(), 6);
        assert_eq!(g.n_edges(), 6);
        assert_eq!(g.groups().len(), 1);
        assert!(g.nbrs(0).iter().all(|&n| n != NONE));
    }

    #[test]
    fn hexagon_counts() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let g = SpinGraph::new(&d, &BoundaryCondition::Wired).unwrap();
        assert_eq!(g.n_edges(), 30);
        assert_eq!(g.n_nodes(), 7 + 12);
        // Hexagonal vertices touching the side-1 hexagon: 6 inner + 18 on the rim.
        assert_eq!(g.triangles().len(), 24);
        assert!(g.ring_spins().iter().all(|&s| s == 1));
    }
}
