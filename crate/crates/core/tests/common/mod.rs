//! Brute-force reference computations built from face coordinates only.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use hexcross::{FaceCoord, HexDomain, ModelParams};

/// Log weight of a configuration with the given exterior spins. Exterior
/// faces that share a spin with each other are merged into one cluster.
pub fn log_weight(domain: &HexDomain, ring: &HashMap<FaceCoord, i8>, spins: &[i8], p: &ModelParams) -> f64 {
    let mut at: HashMap<FaceCoord, i8> = ring.clone();
    for (i, &f) in domain.faces().iter().enumerate() {
        at.insert(f, spins[i]);
    }
    let inside: HashSet<FaceCoord> = domain.faces().iter().copied().collect();
    let mut e = 0u32;
    for &f in domain.faces() {
        for g in f.neighbors() {
            if at[&f] != at[&g] && (!inside.contains(&g) || g > f) {
                e += 1;
            }
        }
    }
    // Clusters: flood fill, then merge those touching the exterior by spin.
    let mut seen: HashSet<FaceCoord> = HashSet::new();
    let mut k = 0u32;
    let mut ring_spins_seen: BTreeSet<i8> = BTreeSet::new();
    let nodes: Vec<FaceCoord> = at.keys().copied().collect();
    for start in nodes {
        if !seen.insert(start) {
            continue;
        }
        let s = at[&start];
        let mut touches = !inside.contains(&start);
        let mut q = VecDeque::from([start]);
        while let Some(f) = q.pop_front() {
            for g in f.neighbors() {
                if at.get(&g) == Some(&s) && seen.insert(g) {
                    touches |= !inside.contains(&g);
                    q.push_back(g);
                }
            }
        }
        if touches {
            if ring_spins_seen.insert(s) {
                k += 1;
            }
        } else {
            k += 1;
        }
    }
    let r: i32 = spins.iter().map(|&s| s as i32).sum();
    let mut triangles = BTreeSet::new();
    for &f in domain.faces() {
        let nb = f.neighbors();
        for i in 0..6 {
            let mut t = [f, nb[i], nb[(i + 1) % 6]];
            t.sort();
            triangles.insert(t);
        }
    }
    let mut rp = 0i32;
    for t in triangles {
        let s = at[&t[0]];
        if s == at[&t[1]] && s == at[&t[2]] {
            rp += s as i32;
        }
    }
    let wall = if e == 0 { 0.0 } else { e as f64 * p.x.ln() };
    k as f64 * p.n.ln() + wall + p.h * r as f64 + 0.5 * p.h_prime * rp as f64
}

/// Exterior ring with a single spin.
pub fn uniform_ring(domain: &HexDomain, spin: i8) -> HashMap<FaceCoord, i8> {
    let inside: HashSet<FaceCoord> = domain.faces().iter().copied().collect();
    let mut ring = HashMap::new();
    for &f in domain.faces() {
        for g in f.neighbors() {
            if !inside.contains(&g) {
                ring.insert(g, spin);
            }
        }
    }
    ring
}

pub type Predicate<'a> = &'a dyn Fn(&[i8]) -> bool;

/// Probabilities of each predicate, by summing weights over all spin
/// assignments.
pub fn probabilities(
    domain: &HexDomain,
    ring: &HashMap<FaceCoord, i8>,
    p: &ModelParams,
    events: &[Predicate],
) -> Vec<f64> {
    let n = domain.len();
    assert!(n <= 16, "oracle limited to small domains");
    let mut lws = Vec::with_capacity(1 << n);
    let mut configs = Vec::with_capacity(1 << n);
    for bits in 0u32..1 << n {
        let s: Vec<i8> = (0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
        lws.push(log_weight(domain, ring, &s, p));
        configs.push(s);
    }
    let m = lws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = lws.iter().map(|l| (l - m).exp()).sum();
    events
        .iter()
        .map(|ev| {
            configs
                .iter()
                .zip(&lws)
                .filter(|(s, _)| ev(s))
                .map(|(_, l)| (l - m).exp())
                .sum::<f64>()
                / z
        })
        .collect()
}

/// `spin` path between two face sets, by breadth-first search over
/// coordinates.
pub fn path_exists(domain: &HexDomain, spins: &[i8], from: &[usize], to: &[usize], spin: i8) -> bool {
    let pos: HashMap<FaceCoord, usize> = domain.faces().iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let target: HashSet<usize> = to.iter().copied().collect();
    let mut seen = vec![false; domain.len()];
    let mut q = VecDeque::new();
    for &f in from {
        if spins[f] == spin && !seen[f] {
            seen[f] = true;
            q.push_back(f);
        }
    }
    while let Some(f) = q.pop_front() {
        if target.contains(&f) {
            return true;
        }
        for g in domain.face(f).neighbors() {
            if let Some(&j) = pos.get(&g) {
                if !seen[j] && spins[j] == spin {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
    }
    false
}

/// Left and right columns of a box, from coordinates.
pub fn box_sides(domain: &HexDomain) -> (Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>) {
    let qs: Vec<i32> = domain.faces().iter().map(|f| f.q).collect();
    let rs: Vec<i32> = domain.faces().iter().map(|f| f.r).collect();
    let (qmin, qmax) = (*qs.iter().min().unwrap(), *qs.iter().max().unwrap());
    let (rmin, rmax) = (*rs.iter().min().unwrap(), *rs.iter().max().unwrap());
    let pick = |f: &dyn Fn(usize) -> bool| (0..domain.len()).filter(|&i| f(i)).collect::<Vec<_>>();
    (
        pick(&|i| qs[i] == qmin),
        pick(&|i| qs[i] == qmax),
        pick(&|i| rs[i] == rmin),
        pick(&|i| rs[i] == rmax),
    )
}
