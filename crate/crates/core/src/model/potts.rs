use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HexDomain;

/// Couplings `(q, K1, K2, K3)` of the dilute Potts weight.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiluteParams {
    pub q: u32,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// Occupations `t` in {0, 1} and Potts states `s` in `1..=q` per site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilutePottsConfig {
    pub t: Vec<u8>,
    pub s: Vec<u32>,
}

impl DilutePottsConfig {
    pub fn new(t: Vec<u8>, s: Vec<u32>, q: u32) -> Result<Self> {
        if t.len() != s.len() {
            return Err(Error::InvalidConfig("occupation and state arrays differ in length".into()));
        }
        if t.iter().any(|&ti| ti > 1) {
            return Err(Error::InvalidConfig("occupations must be 0 or 1".into()));
        }
        if s.iter().any(|&si| si == 0 || si > q) {
            return Err(Error::InvalidConfig(format!("states must lie in 1..={q}")));
        }
        Ok(Self { t, s })
    }
}

/// Sites with their nearest-neighbour pairs and elementary triangles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SiteGraph {
    pub n_sites: usize,
    pub edges: Vec<(usize, usize)>,
    pub triangles: Vec<[usize; 3]>,
}

impl SiteGraph {
    /// Triangular lattice on the face centres of a domain, free boundary.
    pub fn from_domain(domain: &HexDomain) -> Self {
        let mut edges = Vec::new();
        let mut triangles = Vec::new();
        for i in 0..domain.len() {
            let f = domain.face(i);
            let nb: Vec<Option<usize>> = f.neighbors().iter().map(|g| domain.index_of(*g)).collect();
            for (d, j) in nb.iter().enumerate() {
                if let Some(j) = *j {
                    if j > i {
                        edges.push((i, j));
                    }
                    // Each triangle is recorded once, from its smallest site.
                    if let Some(k) = nb[(d + 1) % 6] {
                        if i < j && i < k {
                            triangles.push([i, j, k]);
                        }
                    }
                }
            }
        }
        Self {
            n_sites: domain.len(),
            edges,
            triangles,
        }
    }

    /// Three mutually adjacent sites.
    pub fn triangle() -> Self {
        Self {
            n_sites: 3,
            edges: vec![(0, 1), (0, 2), (1, 2)],
            triangles: vec![[0, 1, 2]],
        }
    }
}

/// Log of `prod_{i~j} (1 - t_i t_j + t_i t_j delta(s_i, s_j))
/// * exp(K1 sum t_i + K2 sum t_i t_j + K3 sum t_i t_j t_k)`.
/// Two occupied neighbours in different states give `-inf`.
pub fn dilute_potts_log_weight(config: &DilutePottsConfig, dp: &DiluteParams, graph: &SiteGraph) -> f64 {
    let t = |i: usize| config.t[i] as f64;
    let mut pair_sum = 0.0;
    for &(i, j) in &graph.edges {
        if config.t[i] == 1 && config.t[j] == 1 {
            if config.s[i] != config.s[j] {
                return f64::NEG_INFINITY;
            }
            pair_sum += 1.0;
        }
    }
    let site_sum: f64 = (0..graph.n_sites).map(t).sum();
    let tri_sum: f64 = graph.triangles.iter().map(|&[a, b, c]| t(a) * t(b) * t(c)).sum();
    dp.k1 * site_sum + dp.k2 * pair_sum + dp.k3 * tri_sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_occupation_is_weightless() {
        let g = SiteGraph::triangle();
        let c = DilutePottsConfig::new(vec![0, 0, 0], vec![1, 2, 3], 3).unwrap();
        let dp = DiluteParams {
            q: 3,
            k1: 0.4,
            k2: 1.7,
            k3: -2.0,
        };
        assert_eq!(dilute_potts_log_weight(&c, &dp, &g), 0.0);
    }

    #[test]
    fn full_triangle_counts() {
        let g = SiteGraph::triangle();
        let c = DilutePottsConfig::new(vec![1, 1, 1], vec![2, 2, 2], 3).unwrap();
        let dp = DiluteParams {
            q: 3,
            k1: 0.3,
            k2: 0.5,
            k3: 0.7,
        };
        let expected = 3.0 * 0.3 + 3.0 * 0.5 + 0.7;
        assert!((dilute_potts_log_weight(&c, &dp, &g) - expected).abs() < 1e-15);
    }

    #[test]
    fn unequal_occupied_neighbours_vanish() {
        let g = SiteGraph {
            n_sites: 2,
            edges: vec![(0, 1)],
            triangles: vec![],
        };
        let c = DilutePottsConfig::new(vec![1, 1], vec![1, 2], 2).unwrap();
        let dp = DiluteParams {
            q: 2,
            k1: 0.0,
            k2: 0.0,
            k3: 0.0,
        };
        assert_eq!(dilute_potts_log_weight(&c, &dp, &g), f64::NEG_INFINITY);
    }

    #[test]
    fn domain_site_graph_counts() {
        let d = HexDomain::regular_hexagon(1).unwrap();
        let g = SiteGraph::from_domain(&d);
        assert_eq!(g.edges.len(), 12);
        assert_eq!(g.triangles.len(), 6);
        assert!(DilutePottsConfig::new(vec![1], vec![0], 2).is_err());
    }
}
