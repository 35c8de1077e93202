use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ArcLabel, DomainKind, FaceCoord, HexDomain};

/// Spin of one exterior face.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExteriorSpin {
    pub face: FaceCoord,
    pub spin: i8,
}

/// Exterior spin assignment. Free means all `-`, wired all `+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Free,
    Wired,
    /// Spin for every face of the exterior ring, nothing more.
    Explicit { spins: Vec<ExteriorSpin> },
    /// Spin per boundary arc; unlisted arcs are free.
    Mixed { arcs: Vec<(ArcLabel, i8)> },
    /// `+` on the part of the ring whose angular position (fraction of a
    /// turn, counterclockwise from straight down) lies in `[start, end)`,
    /// `-` elsewhere. Wraps when `start > end`.
    Dobrushin { start: f64, end: f64 },
}

impl BoundaryCondition {
    /// Wired on the left, top and right of a box, free at the bottom.
    pub fn mixed_push_primal() -> Self {
        BoundaryCondition::Mixed {
            arcs: vec![(ArcLabel::Left, 1), (ArcLabel::Top, 1), (ArcLabel::Right, 1), (ArcLabel::Bottom, -1)],
        }
    }

    /// Pointwise negation of [`Self::mixed_push_primal`].
    pub fn mixed_push_dual() -> Self {
        BoundaryCondition::Mixed {
            arcs: vec![(ArcLabel::Left, -1), (ArcLabel::Top, -1), (ArcLabel::Right, -1), (ArcLabel::Bottom, 1)],
        }
    }

    pub fn label(&self) -> String {
        match self {
            BoundaryCondition::Free => "free".into(),
            BoundaryCondition::Wired => "wired".into(),
            BoundaryCondition::Explicit { .. } => "explicit".into(),
            BoundaryCondition::Mixed { arcs } => {
                let parts: Vec<String> = arcs
                    .iter()
                    .map(|(a, s)| format!("{a}{}", if *s > 0 { '+' } else { '-' }))
                    .collect();
                format!("mixed:{}", parts.join(","))
            }
            BoundaryCondition::Dobrushin { start, end } => format!("dobrushin:{start},{end}"),
        }
    }

    /// Parses the form printed by [`Self::label`], plus `push-primal` and
    /// `push-dual`. Explicit conditions have no compact form.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad boundary spec {spec:?}"));
        match spec {
            "free" => return Ok(BoundaryCondition::Free),
            "wired" => return Ok(BoundaryCondition::Wired),
            "push-primal" => return Ok(Self::mixed_push_primal()),
            "push-dual" => return Ok(Self::mixed_push_dual()),
            _ => {}
        }
        let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
        match kind {
            "dobrushin" => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                let start: f64 = a.trim().parse().map_err(|_| bad())?;
                let end: f64 = b.trim().parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) {
                    return Err(Error::Parameter(format!("dobrushin fractions must lie in [0, 1]: {spec:?}")));
                }
                Ok(BoundaryCondition::Dobrushin { start, end })
            }
            "mixed" => {
                let arcs = rest
                    .split(',')
                    .map(|item| {
                        let item = item.trim();
                        let spin = match item.chars().last() {
                            Some('+') => 1,
                            Some('-') => -1,
                            _ => return Err(bad()),
                        };
                        let name = &item[..item.len() - 1];
                        let label = match name {
                            "left" => ArcLabel::Left,
                            "right" => ArcLabel::Right,
                            "top" => ArcLabel::Top,
                            "bottom" => ArcLabel::Bottom,
                            "inner" => ArcLabel::Inner,
                            "outer" => ArcLabel::Outer,
                            "boundary" => ArcLabel::Boundary,
                            n => ArcLabel::Side(n.parse().map_err(|_| bad())?),
                        };
                        Ok((label, spin))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BoundaryCondition::Mixed { arcs })
            }
            _ => Err(bad()),
        }
    }

    /// Global spin flip of the boundary condition.
    pub fn flipped(&self) -> Self {
        match self {
            BoundaryCondition::Free => BoundaryCondition::Wired,
            BoundaryCondition::Wired => BoundaryCondition::Free,
            BoundaryCondition::Explicit { spins } => BoundaryCondition::Explicit {
                spins: spins
                    .iter()
                    .map(|s| ExteriorSpin {
                        face: s.face,
                        spin: -s.spin,
                    })
                    .collect(),
            },
            BoundaryCondition::Mixed { arcs } => {
                // Unlisted arcs default to free, so list them all explicitly.
                let mut map: BTreeMap<ArcLabel, i8> = arcs.iter().copied().collect();
                for s in map.values_mut() {
                    *s = -*s;
                }
                BoundaryCondition::Mixed {
                    arcs: map.into_iter().collect(),
                }
            }
            BoundaryCondition::Dobrushin { start, end } => BoundaryCondition::Dobrushin {
                start: *end,
                end: *start,
            },
        }
    }

    /// Resolves the condition into spins on the exterior ring of `domain`.
    pub fn resolve(&self, domain: &HexDomain) -> Result<ResolvedBoundary> {
        let ring = domain.exterior_ring();
        let all: Vec<usize> = (0..ring.len()).collect();
        let (spins, groups) = match self {
            BoundaryCondition::Free => (vec![-1; ring.len()], vec![all]),
            BoundaryCondition::Wired => (vec![1; ring.len()], vec![all]),
            BoundaryCondition::Explicit { spins } => {
                let mut map = HashMap::with_capacity(spins.len());
                for s in spins {
                    if s.spin != 1 && s.spin != -1 {
                        return Err(Error::BoundaryCoverage(format!("spin {} at {} is not +-1", s.spin, s.face)));
                    }
                    if map.insert(s.face, s.spin).is_some() {
                        return Err(Error::BoundaryCoverage(format!("face {} listed twice", s.face)));
                    }
                }
                let mut out = Vec::with_capacity(ring.len());
                for f in &ring {
                    match map.remove(f) {
                        Some(s) => out.push(s),
                        None => return Err(Error::BoundaryCoverage(format!("no spin for exterior face {f}"))),
                    }
                }
                if let Some(extra) = map.keys().min() {
                    return Err(Error::BoundaryCoverage(format!("face {extra} is not on the exterior ring")));
                }
                (out, Vec::new())
            }
            BoundaryCondition::Mixed { arcs } => {
                let signs: BTreeMap<ArcLabel, i8> = arcs.iter().copied().collect();
                for (label, s) in &signs {
                    domain.arc(*label)?;
                    if *s != 1 && *s != -1 {
                        return Err(Error::BoundaryCoverage(format!("arc {label} has spin {s}")));
                    }
                }
                let owners = ring_arc_owners(domain, &ring);
                let spins = owners.iter().map(|a| signs.get(a).copied().unwrap_or(-1)).collect();
                let mut by_arc: BTreeMap<ArcLabel, Vec<usize>> = BTreeMap::new();
                for (i, a) in owners.iter().enumerate() {
                    by_arc.entry(*a).or_default().push(i);
                }
                (spins, by_arc.into_values().collect())
            }
            BoundaryCondition::Dobrushin { start, end } => {
                if !(0.0..=1.0).contains(start) || !(0.0..=1.0).contains(end) {
                    return Err(Error::Parameter("Dobrushin fractions must lie in [0, 1]".into()));
                }
                let (cx, cy) = domain.centroid();
                let spins: Vec<i8> = ring
                    .iter()
                    .map(|f| {
                        let (x, y) = f.pixel();
                        // Angle measured counterclockwise from straight down.
                        let theta = (y - cy).atan2(x - cx) + PI / 2.0;
                        let frac = theta.rem_euclid(2.0 * PI) / (2.0 * PI);
                        let inside = if start <= end {
                            frac >= *start && frac < *end
                        } else {
                            frac >= *start || frac < *end
                        };
                        if inside {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect();
                let plus: Vec<usize> = (0..ring.len()).filter(|&i| spins[i] > 0).collect();
                let minus: Vec<usize> = (0..ring.len()).filter(|&i| spins[i] < 0).collect();
                let groups = [plus, minus].into_iter().filter(|g| !g.is_empty()).collect();
                (spins, groups)
            }
        };
        Ok(ResolvedBoundary { ring, spins, groups })
    }

    /// Pointwise comparison of the resolved exterior spins; `None` when the
    /// two conditions are incomparable.
    pub fn compare(&self, other: &BoundaryCondition, domain: &HexDomain) -> Result<Option<Ordering>> {
        let a = self.resolve(domain)?;
        let b = other.resolve(domain)?;
        let mut less = false;
        let mut greater = false;
        for (x, y) in a.spins.iter().zip(&b.spins) {
            less |= x < y;
            greater |= x > y;
        }
        Ok(match (less, greater) {
            (false, false) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (true, true) => None,
        })
    }
}

/// Assigns every ring face to the arc most of its domain neighbours lie on.
/// Purely geometric, so negating a mixed condition negates every ring spin.
fn ring_arc_owners(domain: &HexDomain, ring: &[FaceCoord]) -> Vec<ArcLabel> {
    // Boxes: rows below and above win over the columns beside.
    if let DomainKind::HexBox { width, height } | DomainKind::Strip { width, length: height } = domain.kind() {
        let q0 = domain.faces().iter().map(|f| f.q).min().unwrap_or(0);
        let r0 = domain.faces().iter().map(|f| f.r).min().unwrap_or(0);
        let (w, h) = (width as i32, height as i32);
        return ring
            .iter()
            .map(|g| {
                let (q, r) = (g.q - q0, g.r - r0);
                if r < 0 {
                    ArcLabel::Bottom
                } else if r >= h {
                    ArcLabel::Top
                } else if q < 0 {
                    ArcLabel::Left
                } else {
                    debug_assert!(q >= w);
                    ArcLabel::Right
                }
            })
            .collect();
    }
    let mut arcs_of: HashMap<usize, Vec<ArcLabel>> = HashMap::new();
    for (label, faces) in domain.arcs() {
        for &i in faces {
            arcs_of.entry(i).or_default().push(*label);
        }
    }
    ring.iter()
        .map(|g| {
            let mut votes: BTreeMap<ArcLabel, usize> = BTreeMap::new();
            for f in g.neighbors() {
                if let Some(i) = domain.index_of(f) {
                    for a in arcs_of.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                        *votes.entry(*a).or_default() += 1;
                    }
                }
            }
            // Highest vote, ties to the smallest label.
            let best = votes.values().copied().max().unwrap_or(0);
            votes
                .into_iter()
                .find(|(_, v)| *v == best)
                .map(|(a, _)| a)
                .unwrap_or(ArcLabel::Boundary)
        })
        .collect()
}

/// Exterior ring spins plus the groups of ring faces that count as a single
/// cluster vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedBoundary {
    pub ring: Vec<FaceCoord>,
    pub spins: Vec<i8>,
    /// Indices into `ring`; every group is single-signed.
    pub groups: Vec<Vec<usize>>,
}
