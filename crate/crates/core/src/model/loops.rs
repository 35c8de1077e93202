use std::collections::{BTreeSet, HashMap};

use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::lattice::{FaceCoord, HexDomain};
use crate::model::params::ModelParams;
use crate::model::spins::SpinConfig;

/// A hexagonal-lattice vertex, named by the three faces meeting there.
pub type Vertex = [FaceCoord; 3];

/// Canonical unordered face pair naming an edge.
pub type EdgeKey = (FaceCoord, FaceCoord);

fn edge_key(a: FaceCoord, b: FaceCoord) -> EdgeKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The two vertices at the ends of the edge between adjacent faces.
pub fn edge_endpoints(a: FaceCoord, b: FaceCoord) -> [Vertex; 2] {
    let d = (b.q - a.q, b.r - a.r);
    let i = FaceCoord::DIRECTIONS
        .iter()
        .position(|&(dq, dr)| (dq, dr) == d)
        .expect("faces are not adjacent");
    let left = FaceCoord::DIRECTIONS[(i + 1) % 6];
    let right = FaceCoord::DIRECTIONS[(i + 5) % 6];
    let mk = |c: (i32, i32)| {
        let mut v = [a, b, a.translate(c.0, c.1)];
        v.sort_unstable();
        v
    };
    [mk(left), mk(right)]
}

/// A set of hexagonal edges of a domain in which every vertex has degree 0
/// or 2, so the edges form disjoint loops.
///
/// A vertex whose third edge runs between two exterior faces lies outside
/// the configurable edge set; [`LoopConfig::with_open_ends`] lets such
/// vertices have degree 1, which is what domain walls look like against a
/// boundary condition that changes sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopConfig {
    edges: BTreeSet<EdgeKey>,
}

impl LoopConfig {
    /// Validates that `edges` are edges of `domain` forming closed loops.
    pub fn new(domain: &HexDomain, edges: impl IntoIterator<Item = EdgeKey>) -> Result<Self> {
        Self::build(domain, edges, false)
    }

    /// As [`Self::new`], but paths may end on the outer rim of the domain.
    pub fn with_open_ends(domain: &HexDomain, edges: impl IntoIterator<Item = EdgeKey>) -> Result<Self> {
        Self::build(domain, edges, true)
    }

    pub fn empty() -> Self {
        Self { edges: BTreeSet::new() }
    }

    fn build(domain: &HexDomain, edges: impl IntoIterator<Item = EdgeKey>, open: bool) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if !a.is_adjacent(b) || !(domain.contains(a) || domain.contains(b)) {
                return Err(Error::InvalidConfig(format!("{a}-{b} is not an edge of the domain")));
            }
            set.insert(edge_key(a, b));
        }
        let config = Self { edges: set };
        for (v, deg) in config.degrees() {
            if deg == 2 {
                continue;
            }
            let rim = v.iter().filter(|f| domain.contains(**f)).count() == 1;
            if !(open && rim && deg == 1) {
                return Err(Error::InvalidConfig(format!(
                    "vertex {},{},{} has degree {deg}",
                    v[0], v[1], v[2]
                )));
            }
        }
        Ok(config)
    }

    fn degrees(&self) -> HashMap<Vertex, usize> {
        let mut deg = HashMap::new();
        for &(a, b) in &self.edges {
            for v in edge_endpoints(a, b) {
                *deg.entry(v).or_insert(0) += 1;
            }
        }
        deg
    }

    pub fn edges(&self) -> &BTreeSet<EdgeKey> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Number of connected components of the edge set. Each is a loop, or a
    /// path ending on the rim for configurations built with open ends.
    pub fn loop_count(&self) -> usize {
        let (index, uf) = self.vertex_forest();
        let mut uf = uf;
        (0..index.len()).filter(|&i| uf.find(i) == i).count()
    }

    /// Independent cycles `|E| - |V| + components`. Equals
    /// [`Self::loop_count`] for closed configurations.
    pub fn cycle_rank(&self) -> usize {
        let (index, uf) = self.vertex_forest();
        let mut uf = uf;
        let comps = (0..index.len()).filter(|&i| uf.find(i) == i).count();
        self.edges.len() + comps - index.len()
    }

    fn vertex_forest(&self) -> (HashMap<Vertex, usize>, UnionFind) {
        let mut index: HashMap<Vertex, usize> = HashMap::new();
        let mut pairs = Vec::with_capacity(self.edges.len());
        for &(a, b) in &self.edges {
            let [u, v] = edge_endpoints(a, b);
            let n = index.len();
            let iu = *index.entry(u).or_insert(n);
            let n = index.len();
            let iv = *index.entry(v).or_insert(n);
            pairs.push((iu, iv));
        }
        let mut uf = UnionFind::new(index.len());
        for (u, v) in pairs {
            uf.union(u, v);
        }
        (index, uf)
    }
}

/// `x^|edges| n^loops`.
pub fn loop_weight(config: &LoopConfig, params: &ModelParams) -> f64 {
    params.x.powi(config.edge_count() as i32) * params.n.powi(config.loop_count() as i32)
}

/// Natural log of [`loop_weight`].
pub fn loop_log_weight(config: &LoopConfig, params: &ModelParams) -> f64 {
    let e = config.edge_count();
    let edge_term = if e == 0 { 0.0 } else { e as f64 * params.x.ln() };
    edge_term + config.loop_count() as f64 * params.ln_n()
}

/// Domain walls of a spin configuration: every edge between unequal spins,
/// edges against the exterior ring included.
pub fn spins_to_loops(config: &SpinConfig) -> LoopConfig {
    let g = config.graph();
    let nd = g.n_domain();
    let mut edges = BTreeSet::new();
    for f in 0..nd {
        for &nb in g.nbrs(f) {
            let nb = nb as usize;
            if (nb >= nd || nb > f) && config.spin(f) != config.spin(nb) {
                edges.insert(edge_key(g.coord(f), g.coord(nb)));
            }
        }
    }
    LoopConfig { edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::boundary::BoundaryCondition;
    use crate::model::graph::SpinGraph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hexagon_edges(f: FaceCoord) -> Vec<EdgeKey> {
        f.neighbors().iter().map(|&g| edge_key(f, g)).collect()
    }

    #[test]
    fn weights_of_small_configs() {
        let d = HexDomain::regular_hexagon(2).unwrap();
        let p = ModelParams::loop_only(2.0, 0.5).unwrap();
        assert_eq!(loop_weight(&LoopConfig::empty(), &p), 1.0);
        assert_eq!(LoopConfig::empty().loop_count(), 0);

        let one = LoopConfig::new(&d, hexagon_edges(FaceCoord::new(0, 0))).unwrap();
        assert_eq!(one.loop_count(), 1);
        assert!((loop_weight(&one, &p) - 0.03125).abs() < 1e-15);

        let mut two = hexagon_edges(FaceCoord::new(-1, -1));
        two.extend(hexagon_edges(FaceCoord::new(1, 1)));
        let two = LoopConfig::new(&d, two).unwrap();
        assert_eq!(two.loop_count(), 2);
        let p = ModelParams::loop_only(1.3, 0.7).unwrap();
        assert!((loop_weight(&two, &p) - 0.7f64.powi(12) * 1.3f64.powi(2)).abs() < 1e-15);
        assert!((loop_log_weight(&two, &p) - loop_weight(&two, &p).ln()).abs() < 1e-12);
    }

    #[test]
    fn odd_vertices_are_rejected() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let mut e = hexagon_edges(FaceCoord::new(0, 0));
        e.pop();
        assert!(LoopConfig::new(&d, e).is_err());
        let far = edge_key(FaceCoord::new(5, 5), FaceCoord::new(6, 5));
        assert!(LoopConfig::new(&d, [far]).is_err());
    }

    #[test]
    fn single_minus_face_gives_elementary_loop() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let g = SpinGraph::new(&d, &BoundaryCondition::Wired).unwrap();
        let mut c = SpinConfig::uniform(g, 1).unwrap();
        assert!(spins_to_loops(&c).is_empty());
        let centre = d.index_of(FaceCoord::new(0, 0)).unwrap();
        c.flip(centre);
        let l = spins_to_loops(&c);
        assert_eq!(l.edge_count(), 6);
        assert_eq!(l.loop_count(), 1);
    }

    #[test]
    fn domain_walls_match_edge_count_exhaustively() {
        for d in [HexDomain::hex_box(4, 3).unwrap(), HexDomain::regular_hexagon(1).unwrap()] {
            for bc in [BoundaryCondition::Free, BoundaryCondition::Wired] {
                let g = SpinGraph::new(&d, &bc).unwrap();
                for bits in 0..(1u64 << d.len()) {
                    let mut c = SpinConfig::from_bits(g.clone(), bits).unwrap();
                    let l = spins_to_loops(&c);
                    assert_eq!(l.edge_count() as i64, c.stats().e);
                    // Constant boundary: walls close up.
                    let closed = LoopConfig::new(&d, l.edges().iter().copied()).unwrap();
                    assert_eq!(closed.loop_count(), closed.cycle_rank());
                }
            }
        }
    }

    #[test]
    fn mixed_boundary_walls_end_on_the_rim() {
        let d = HexDomain::hex_box(3, 3).unwrap();
        let g = SpinGraph::new(&d, &BoundaryCondition::mixed_push_primal()).unwrap();
        let c = SpinConfig::uniform(g, 1).unwrap();
        let l = spins_to_loops(&c);
        assert!(LoopConfig::new(&d, l.edges().iter().copied()).is_err());
        let open = LoopConfig::with_open_ends(&d, l.edges().iter().copied()).unwrap();
        assert!(open.loop_count() >= 1);
    }

    #[test]
    fn component_and_cycle_methods_agree_on_random_even_subgraphs() {
        // Symmetric differences of elementary hexagons span the cycle space.
        let d = HexDomain::regular_hexagon(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let mut set: BTreeSet<EdgeKey> = BTreeSet::new();
            for &f in d.faces() {
                if rng.random_bool(0.5) {
                    for e in hexagon_edges(f) {
                        if !set.remove(&e) {
                            set.insert(e);
                        }
                    }
                }
            }
            let l = LoopConfig::new(&d, set).unwrap();
            assert_eq!(l.loop_count(), l.cycle_rank());
        }
    }
}
