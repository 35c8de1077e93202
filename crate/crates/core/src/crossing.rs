//! Connectivity predicates on spin configurations: box crossings, the
//! six-arm events around a hexagon and its horizontal translates, and
//! component volumes.
//!
//! Both spins use the six-neighbour adjacency of the triangular lattice, so
//! on a box exactly one of "`+` path left to right" and "`-` path bottom to
//! top" happens in every configuration.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::dsu::UnionFind;
use crate::error::{Error, Result};
use crate::lattice::{union_of, ArcLabel, DomainKind, FaceCoord, HexDomain};
use crate::model::spins::SpinConfig;

/// Spin path from `source` to `target` staying inside `region`. All sets
/// are face indices of one domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub region: Vec<usize>,
    pub spin: i8,
}

impl CrossingEvent {
    /// Sorts and deduplicates the sets and checks `source, target ⊆ region`.
    pub fn new(source: Vec<usize>, target: Vec<usize>, region: Vec<usize>, spin: i8) -> Result<Self> {
        if spin != 1 && spin != -1 {
            return Err(Error::Parameter(format!("path spin must be +-1, got {spin}")));
        }
        let tidy = |mut v: Vec<usize>| {
            v.sort_unstable();
            v.dedup();
            v
        };
        let (source, target, region) = (tidy(source), tidy(target), tidy(region));
        for f in source.iter().chain(&target) {
            if region.binary_search(f).is_err() {
                return Err(Error::Parameter(format!("face {f} lies outside the event region")));
            }
        }
        Ok(Self {
            source,
            target,
            region,
            spin,
        })
    }

    /// Same sets, opposite path spin.
    pub fn with_spin(&self, spin: i8) -> Self {
        Self { spin, ..self.clone() }
    }

    /// Whether a path exists in `spins` (domain face order) under the
    /// adjacency of `domain`.
    pub fn holds(&self, domain: &HexDomain, spins: &[i8]) -> bool {
        thread_local! {
            static SCRATCH: RefCell<(Vec<u8>, Vec<usize>)> = const { RefCell::new((Vec::new(), Vec::new())) };
        }
        SCRATCH.with(|cell| {
            let (state, stack) = &mut *cell.borrow_mut();
            self.search(domain, spins, state, stack)
        })
    }

    fn search(&self, domain: &HexDomain, spins: &[i8], state: &mut Vec<u8>, stack: &mut Vec<usize>) -> bool {
        const REGION: u8 = 1;
        const TARGET: u8 = 2;
        const SEEN: u8 = 4;
        state.clear();
        state.resize(domain.len(), 0);
        stack.clear();
        for &f in &self.region {
            if spins[f] == self.spin {
                state[f] = REGION;
            }
        }
        for &f in &self.target {
            state[f] |= TARGET;
        }
        for &f in &self.source {
            if state[f] & REGION != 0 && state[f] & SEEN == 0 {
                state[f] |= SEEN;
                stack.push(f);
            }
        }
        while let Some(f) = stack.pop() {
            if state[f] & TARGET != 0 {
                return true;
            }
            for g in domain.neighbors(f) {
                if state[g] & (REGION | SEEN) == REGION {
                    state[g] |= SEEN;
                    stack.push(g);
                }
            }
        }
        false
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ev: Self = serde_json::from_str(text)?;
        Self::new(ev.source, ev.target, ev.region, ev.spin)
    }
}

/// [`CrossingEvent::holds`] on a configuration's own domain.
pub fn connected(config: &SpinConfig, ev: &CrossingEvent) -> bool {
    ev.holds(config.graph().domain(), config.domain_spins())
}

fn all_faces(domain: &HexDomain) -> Vec<usize> {
    (0..domain.len()).collect()
}

fn arcs_union(domain: &HexDomain, labels: &[ArcLabel]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &l in labels {
        out.extend_from_slice(domain.arc(l)?);
    }
    Ok(out)
}

/// `+` path joining the left and right sides of a box or strip. On a
/// regular hexagon it joins arcs 2, 3 to arcs 5, 6.
pub fn horizontal_crossing(domain: &HexDomain) -> Result<CrossingEvent> {
    let (from, to) = match domain.kind() {
        DomainKind::HexBox { .. } | DomainKind::Strip { .. } => (vec![ArcLabel::Left], vec![ArcLabel::Right]),
        DomainKind::RegularHexagon { .. } => (
            vec![ArcLabel::Side(5), ArcLabel::Side(6)],
            vec![ArcLabel::Side(2), ArcLabel::Side(3)],
        ),
        k => return Err(Error::Precondition(format!("no horizontal crossing on a {k} domain"))),
    };
    CrossingEvent::new(arcs_union(domain, &from)?, arcs_union(domain, &to)?, all_faces(domain), 1)
}

/// `+` path joining bottom and top; arc 1 to arc 4 on a regular hexagon.
pub fn vertical_crossing(domain: &HexDomain) -> Result<CrossingEvent> {
    let (from, to) = match domain.kind() {
        DomainKind::HexBox { .. } | DomainKind::Strip { .. } => (ArcLabel::Bottom, ArcLabel::Top),
        DomainKind::RegularHexagon { .. } => (ArcLabel::Side(1), ArcLabel::Side(4)),
        k => return Err(Error::Precondition(format!("no vertical crossing on a {k} domain"))),
    };
    CrossingEvent::new(domain.arc(from)?.to_vec(), domain.arc(to)?.to_vec(), all_faces(domain), 1)
}

/// Event whose complement is a vertical crossing; holds iff
/// `vertical_crossing` fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blocking(pub CrossingEvent);

impl Blocking {
    pub fn holds(&self, domain: &HexDomain, spins: &[i8]) -> bool {
        !self.0.holds(domain, spins)
    }
}

/// Six-arm event, optionally with a subtracted event (`primary \ minus`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmEvent {
    pub name: String,
    pub cell: usize,
    pub primary: CrossingEvent,
    pub minus: Option<CrossingEvent>,
}

impl ArmEvent {
    pub fn holds(&self, domain: &HexDomain, spins: &[i8]) -> bool {
        self.primary.holds(domain, spins) && !self.minus.as_ref().is_some_and(|m| m.holds(domain, spins))
    }

    pub fn is_primed(&self) -> bool {
        self.minus.is_some()
    }
}

/// The hexagon `H` of side `j` at the origin with its translates by
/// `-delta'` and `+delta'` along the horizontal axis, on their union.
#[derive(Clone, Debug)]
pub struct HexTriple {
    pub side: u32,
    pub shift: u32,
    pub union: HexDomain,
    /// Left, centre, right hexagons.
    pub parts: [HexDomain; 3],
}

impl HexTriple {
    pub fn new(side: u32, shift: u32) -> Result<Self> {
        if shift == 0 {
            return Err(Error::Parameter("translate shift must be at least 1".into()));
        }
        let s = shift as i32;
        let parts = [
            HexDomain::regular_hexagon_at(side, FaceCoord::new(-s, 0))?,
            HexDomain::regular_hexagon(side)?,
            HexDomain::regular_hexagon_at(side, FaceCoord::new(s, 0))?,
        ];
        let union = union_of(&[&parts[0], &parts[1], &parts[2]])?;
        Ok(Self {
            side,
            shift,
            union,
            parts,
        })
    }

    /// Union indices of the faces of part `p` (0 left, 1 centre, 2 right).
    pub fn part_faces(&self, p: usize) -> Vec<usize> {
        self.map(&self.parts[p], &all_faces(&self.parts[p]))
    }

    /// Union indices of an arc of part `p`.
    pub fn arc(&self, p: usize, label: ArcLabel) -> Result<Vec<usize>> {
        Ok(self.map(&self.parts[p], self.parts[p].arc(label)?))
    }

    /// Union indices of cell `index` of `k` on arc 1 of part `p`.
    pub fn cell(&self, p: usize, k: usize, index: usize) -> Result<Vec<usize>> {
        let cells = self.parts[p].partition_arc(ArcLabel::Side(1), k)?;
        Ok(self.map(&self.parts[p], &cells[index]))
    }

    fn map(&self, part: &HexDomain, idx: &[usize]) -> Vec<usize> {
        idx.iter()
            .map(|&i| self.union.index_of(part.face(i)).expect("part face in union"))
            .collect()
    }

    /// Vertical crossing of the centre hexagon, inside it.
    pub fn centre_vertical(&self) -> Result<CrossingEvent> {
        CrossingEvent::new(
            self.arc(1, ArcLabel::Side(1))?,
            self.arc(1, ArcLabel::Side(4))?,
            self.part_faces(1),
            1,
        )
    }

    /// Arm events from each of the `k` cells of the bottom arc of the
    /// centre hexagon.
    ///
    /// `C2`, `C3` reach arcs 2 and 3 of the left translate, `C5`, `C6` arcs 5
    /// and 6 of the right translate, all inside the union. `C4` reaches the
    /// top arc inside the centre hexagon alone. The primed events aim at
    /// the mirror translate and drop the unprimed event: `C2' = {S -> 2 of
    /// right} \ C2`, and likewise for 3, 5, 6.
    pub fn six_arm_events(&self, k: usize) -> Result<Vec<ArmEvent>> {
        let arc_len = self.parts[1].arc(ArcLabel::Side(1))?.len();
        if k == 0 || k > arc_len {
            return Err(Error::Parameter(format!("cannot split an arc of {arc_len} faces into {k} cells")));
        }
        let everything = all_faces(&self.union);
        let mut out = Vec::with_capacity(9 * k);
        for cell in 0..k {
            let source = self.cell(1, k, cell)?;
            let to = |p: usize, a: u8, region: &Vec<usize>| {
                CrossingEvent::new(source.clone(), self.arc(p, ArcLabel::Side(a))?, region.clone(), 1)
            };
            let mut base = Vec::new();
            for (a, p) in [(2u8, 0usize), (3, 0), (5, 2), (6, 2)] {
                base.push((a, to(p, a, &everything)?));
            }
            base.insert(2, (4, to(1, 4, &self.part_faces(1))?));
            for (a, ev) in &base {
                out.push(ArmEvent {
                    name: format!("C{a}"),
                    cell,
                    primary: ev.clone(),
                    minus: None,
                });
            }
            for (a, p) in [(2u8, 2usize), (3, 2), (5, 0), (6, 0)] {
                let unprimed = base.iter().find(|(b, _)| *b == a).map(|(_, e)| e.clone());
                out.push(ArmEvent {
                    name: format!("C{a}'"),
                    cell,
                    primary: to(p, a, &everything)?,
                    minus: unprimed,
                });
            }
        }
        Ok(out)
    }

    /// `C0`: cell `index` of the left translate's bottom arc joined to the
    /// same cells of the centre and right translates, inside left ∪ right.
    /// Target faces outside that region are dropped.
    pub fn c0_event(&self, k: usize, index: usize) -> Result<CrossingEvent> {
        let mut region = self.part_faces(0);
        region.extend(self.part_faces(2));
        region.sort_unstable();
        region.dedup();
        let mut target = self.cell(1, k, index)?;
        target.extend(self.cell(2, k, index)?);
        target.retain(|f| region.binary_search(f).is_ok());
        CrossingEvent::new(self.cell(0, k, index)?, target, region, 1)
    }
}

/// Sizes of the maximal `spin` components of the configuration, counted on
/// the faces of `annulus` only. Components missing the annulus are omitted.
/// Sorted in decreasing order.
pub fn component_volumes(config: &SpinConfig, annulus: &HexDomain, spin: i8) -> Vec<usize> {
    let domain = config.graph().domain();
    let spins = config.domain_spins();
    let n = domain.len();
    let mut uf = UnionFind::new(n);
    for f in 0..n {
        if spins[f] != spin {
            continue;
        }
        for g in domain.neighbors(f) {
            if g > f && spins[g] == spin {
                uf.union(f, g);
            }
        }
    }
    let mut counts = vec![0usize; n];
    for &c in annulus.faces() {
        if let Some(f) = domain.index_of(c) {
            if spins[f] == spin {
                counts[uf.find(f)] += 1;
            }
        }
    }
    let mut vols: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    vols.sort_unstable_by(|a, b| b.cmp(a));
    vols
}
