//! Hexagonal-face geometry.
//!
//! Spins live on the faces of the hexagonal lattice, equivalently on the sites
//! of the triangular lattice. Faces use axial coordinates `(q, r)` with the
//! "pointy-top" orientation: row `r` grows upward and each row is shifted half
//! a face to the right of the one below it. A face centre sits at
//! `(sqrt(3) * (q + r/2), 1.5 * r)`.
//!
//! Regular hexagons are the sets `max(|q|, |r|, |q + r|) <= side` around a
//! centre. Their six boundary arcs are labelled `1..=6` counterclockwise
//! starting from the bottom row, so arc 1 is the bottom and arc 4 the top.
//! Boxes are parallelograms `0 <= q < width`, `0 <= r < height` whose four
//! arcs are `Left`, `Right`, `Bottom` and `Top`. Corner faces belong to both
//! arcs that meet there.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceCoord {
    pub q: i32,
    pub r: i32,
}

impl FaceCoord {
    /// Neighbour offsets in counterclockwise order starting from east.
    /// Consecutive entries (cyclically) are adjacent to each other, so face
    /// `f` together with neighbours `i` and `i + 1` forms a triangle.
    pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

    pub const fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    pub fn neighbors(self) -> [FaceCoord; 6] {
        Self::DIRECTIONS.map(|(dq, dr)| FaceCoord::new(self.q + dq, self.r + dr))
    }

    pub fn translate(self, dq: i32, dr: i32) -> Self {
        FaceCoord::new(self.q + dq, self.r + dr)
    }

    /// Lattice distance (number of steps between face centres).
    pub fn distance(self, other: FaceCoord) -> i32 {
        let dq = self.q - other.q;
        let dr = self.r - other.r;
        dq.abs().max(dr.abs()).max((dq + dr).abs())
    }

    pub fn is_adjacent(self, other: FaceCoord) -> bool {
        self.distance(other) == 1
    }

    /// Centre of the face in the plane, unit spacing between adjacent centres
    /// scaled by sqrt(3).
    pub fn pixel(self) -> (f64, f64) {
        let q = self.q as f64;
        let r = self.r as f64;
        (3f64.sqrt() * (q + r / 2.0), 1.5 * r)
    }
}

impl fmt::Display for FaceCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

/// Label of a boundary arc.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcLabel {
    /// Side `1..=6` of a regular hexagon, counterclockwise from the bottom.
    Side(u8),
    Left,
    Right,
    Top,
    Bottom,
    /// Inner boundary of an annulus.
    Inner,
    /// Outer boundary of an annulus.
    Outer,
    /// Whole boundary of a domain without named sides.
    Boundary,
}

impl fmt::Display for ArcLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArcLabel::Side(i) => write!(f, "{i}"),
            ArcLabel::Left => f.write_str("left"),
            ArcLabel::Right => f.write_str("right"),
            ArcLabel::Top => f.write_str("top"),
            ArcLabel::Bottom => f.write_str("bottom"),
            ArcLabel::Inner => f.write_str("inner"),
            ArcLabel::Outer => f.write_str("outer"),
            ArcLabel::Boundary => f.write_str("boundary"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    RegularHexagon { side: u32 },
    HexBox { width: u32, height: u32 },
    Strip { width: u32, length: u32 },
    Annulus { side: u32, delta: u32 },
    Custom,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::RegularHexagon { side } => write!(f, "hexagon:{side}"),
            DomainKind::HexBox { width, height } => write!(f, "box:{width}x{height}"),
            DomainKind::Strip { width, length } => write!(f, "strip:{width}x{length}"),
            DomainKind::Annulus { side, delta } => write!(f, "annulus:{side},{delta}"),
            DomainKind::Custom => f.write_str("custom"),
        }
    }
}

/// A finite set of hexagonal faces with labelled boundary arcs.
///
/// Face order is fixed at construction and every index-based API in the crate
/// refers to it.
#[derive(Clone, Debug)]
pub struct HexDomain {
    kind: DomainKind,
    faces: Vec<FaceCoord>,
    index: HashMap<FaceCoord, usize>,
    /// In-domain neighbours per face in direction order, `u32::MAX` outside.
    adjacency: Vec<[u32; 6]>,
    arcs: BTreeMap<ArcLabel, Vec<usize>>,
}

impl PartialEq for HexDomain {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.faces == other.faces && self.arcs == other.arcs
    }
}

/// One hexagonal-lattice edge, identified by the two faces it separates.
/// `outer` lies outside the domain when `exterior` is set.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    pub inner: FaceCoord,
    pub outer: FaceCoord,
    pub exterior: bool,
}

impl DualEdge {
    /// The unordered face pair in canonical (sorted) order.
    pub fn key(&self) -> (FaceCoord, FaceCoord) {
        if self.inner <= self.outer {
            (self.inner, self.outer)
        } else {
            (self.outer, self.inner)
        }
    }
}

/// The `index`-th of `k` near-equal contiguous cells of a boundary arc.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePartition {
    pub arc: ArcLabel,
    pub k: usize,
    pub index: usize,
}

impl EdgePartition {
    pub fn new(arc: ArcLabel, k: usize, index: usize) -> Result<Self> {
        if k == 0 || index >= k {
            return Err(Error::Parameter(format!(
                "partition cell {index} of {k} is not valid"
            )));
        }
        Ok(Self { arc, k, index })
    }

    /// Face indices of this cell within `domain`.
    pub fn cell(&self, domain: &HexDomain) -> Result<Vec<usize>> {
        let cells = domain.partition_arc(self.arc, self.k)?;
        Ok(cells[self.index].clone())
    }
}

fn hexagon_faces(center: FaceCoord, side: i32) -> Vec<FaceCoord> {
    let mut faces = Vec::with_capacity((3 * side * side + 3 * side + 1) as usize);
    for r in -side..=side {
        for q in -side..=side {
            if (q + r).abs() <= side {
                faces.push(center.translate(q, r));
            }
        }
    }
    faces
}

impl HexDomain {
    fn from_parts(kind: DomainKind, faces: Vec<FaceCoord>, arcs: BTreeMap<ArcLabel, Vec<usize>>) -> Self {
        let index: HashMap<FaceCoord, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let adjacency = faces
            .iter()
            .map(|f| f.neighbors().map(|g| index.get(&g).map_or(u32::MAX, |&i| i as u32)))
            .collect();
        Self {
            kind,
            faces,
            index,
            adjacency,
            arcs,
        }
    }

    /// Centred regular hexagon of the given side (3s^2 + 3s + 1 faces).
    pub fn regular_hexagon(side: u32) -> Result<Self> {
        Self::regular_hexagon_at(side, FaceCoord::new(0, 0))
    }

    pub fn regular_hexagon_at(side: u32, center: FaceCoord) -> Result<Self> {
        if side == 0 {
            return Err(Error::Parameter("hexagon side must be at least 1".into()));
        }
        let s = side as i32;
        let faces = hexagon_faces(center, s);
        let local = |f: FaceCoord| (f.q - center.q, f.r - center.r);
        let mut domain = Self::from_parts(DomainKind::RegularHexagon { side }, faces, BTreeMap::new());

        // Walk each side counterclockwise from its starting corner.
        let sides: [((i32, i32), (i32, i32)); 6] = [
            ((0, -s), (1, 0)),
            ((s, -s), (0, 1)),
            ((s, 0), (-1, 1)),
            ((0, s), (-1, 0)),
            ((-s, s), (0, -1)),
            ((-s, 0), (1, -1)),
        ];
        for (label, ((q0, r0), (dq, dr))) in sides.into_iter().enumerate() {
            let arc: Vec<usize> = (0..=s)
                .map(|t| domain.index[&center.translate(q0 + t * dq, r0 + t * dr)])
                .collect();
            debug_assert!(arc.iter().all(|&i| {
                let (q, r) = local(domain.faces[i]);
                q.abs().max(r.abs()).max((q + r).abs()) == s
            }));
            domain.arcs.insert(ArcLabel::Side(label as u8 + 1), arc);
        }
        Ok(domain)
    }

    /// Parallelogram of `width` columns and `height` rows, faces in row-major
    /// order from the bottom-left corner.
    pub fn hex_box(width: u32, height: u32) -> Result<Self> {
        let mut domain = Self::parallelogram(width, height)?;
        domain.kind = DomainKind::HexBox { width, height };
        Ok(domain)
    }

    /// Finite piece of a vertical strip `width` faces wide and `length` rows
    /// long. Same geometry and arcs as a box.
    pub fn strip(width: u32, length: u32) -> Result<Self> {
        let mut domain = Self::parallelogram(width, length)?;
        domain.kind = DomainKind::Strip { width, length };
        Ok(domain)
    }

    fn parallelogram(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter("box dimensions must be at least 1".into()));
        }
        let (w, h) = (width as i32, height as i32);
        let faces: Vec<FaceCoord> = (0..h)
            .flat_map(|r| (0..w).map(move |q| FaceCoord::new(q, r)))
            .collect();
        let at = |q: i32, r: i32| (r * w + q) as usize;
        let mut arcs = BTreeMap::new();
        arcs.insert(ArcLabel::Left, (0..h).map(|r| at(0, r)).collect());
        arcs.insert(ArcLabel::Right, (0..h).map(|r| at(w - 1, r)).collect());
        arcs.insert(ArcLabel::Bottom, (0..w).map(|q| at(q, 0)).collect());
        arcs.insert(ArcLabel::Top, (0..w).map(|q| at(q, h - 1)).collect());
        Ok(Self::from_parts(DomainKind::HexBox { width, height }, faces, arcs))
    }

    /// Faces of the side `side + delta` hexagon not in the side `side` one.
    pub fn annulus(side: u32, delta: u32) -> Result<Self> {
        if delta == 0 {
            return Err(Error::Parameter("annulus width must be at least 1".into()));
        }
        let outer = side as i32 + delta as i32;
        let origin = FaceCoord::new(0, 0);
        let faces: Vec<FaceCoord> = hexagon_faces(origin, outer)
            .into_iter()
            .filter(|f| f.distance(origin) > side as i32)
            .collect();
        let mut domain = Self::from_parts(DomainKind::Annulus { side, delta }, faces, BTreeMap::new());
        let inner: Vec<usize> = (0..domain.faces.len())
            .filter(|&i| domain.faces[i].distance(origin) == side as i32 + 1)
            .collect();
        let outer_arc: Vec<usize> = (0..domain.faces.len())
            .filter(|&i| domain.faces[i].distance(origin) == outer)
            .collect();
        domain.arcs.insert(ArcLabel::Inner, inner);
        domain.arcs.insert(ArcLabel::Outer, outer_arc);
        Ok(domain)
    }

    /// Arbitrary face set; its boundary faces form a single `Boundary` arc.
    /// Duplicates are removed, first occurrence wins.
    pub fn from_faces(faces: impl IntoIterator<Item = FaceCoord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let faces: Vec<FaceCoord> = faces.into_iter().filter(|f| seen.insert(*f)).collect();
        if faces.is_empty() {
            return Err(Error::Parameter("domain must contain at least one face".into()));
        }
        let mut domain = Self::from_parts(DomainKind::Custom, faces, BTreeMap::new());
        let boundary = (0..domain.len()).filter(|&i| domain.is_boundary(i)).collect();
        domain.arcs.insert(ArcLabel::Boundary, boundary);
        Ok(domain)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn faces(&self) -> &[FaceCoord] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face(&self, idx: usize) -> FaceCoord {
        self.faces[idx]
    }

    pub fn index_of(&self, face: FaceCoord) -> Option<usize> {
        self.index.get(&face).copied()
    }

    pub fn contains(&self, face: FaceCoord) -> bool {
        self.index.contains_key(&face)
    }

    pub fn arcs(&self) -> &BTreeMap<ArcLabel, Vec<usize>> {
        &self.arcs
    }

    pub fn arc(&self, label: ArcLabel) -> Result<&[usize]> {
        self.arcs
            .get(&label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Parameter(format!("domain {} has no arc {label}", self.kind)))
    }

    /// Indices of in-domain neighbours of face `idx`.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[idx]
            .into_iter()
            .filter(|&g| g != u32::MAX)
            .map(|g| g as usize)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.faces[idx].neighbors().iter().any(|f| !self.contains(*f))
    }

    /// Faces outside the domain adjacent to at least one domain face, sorted.
    pub fn exterior_ring(&self) -> Vec<FaceCoord> {
        let ring: BTreeSet<FaceCoord> = self
            .faces
            .iter()
            .flat_map(|f| f.neighbors())
            .filter(|f| !self.contains(*f))
            .collect();
        ring.into_iter().collect()
    }

    /// Number of unordered adjacent pairs of domain faces.
    pub fn interior_adjacency_count(&self) -> usize {
        (0..self.len()).map(|i| self.neighbors(i).count()).sum::<usize>() / 2
    }

    /// Every hexagonal edge bordering at least one domain face.
    pub fn dual_edges(&self) -> Vec<DualEdge> {
        let mut edges = Vec::new();
        for (i, &f) in self.faces.iter().enumerate() {
            for g in f.neighbors() {
                match self.index.get(&g) {
                    Some(&j) if j > i => edges.push(DualEdge {
                        inner: f,
                        outer: g,
                        exterior: false,
                    }),
                    Some(_) => {}
                    None => edges.push(DualEdge {
                        inner: f,
                        outer: g,
                        exterior: true,
                    }),
                }
            }
        }
        edges
    }

    /// Copy shifted by a lattice vector. Arc labels and face order carry over.
    pub fn translate(&self, dq: i32, dr: i32) -> Self {
        let faces = self.faces.iter().map(|f| f.translate(dq, dr)).collect();
        Self::from_parts(self.kind, faces, self.arcs.clone())
    }

    /// Splits an arc into `k` contiguous runs whose lengths differ by at most one.
    pub fn partition_arc(&self, label: ArcLabel, k: usize) -> Result<Vec<Vec<usize>>> {
        let arc = self.arc(label)?;
        if k == 0 || k > arc.len() {
            return Err(Error::Parameter(format!(
                "cannot split arc {label} of {} faces into {k} cells",
                arc.len()
            )));
        }
        let (base, extra) = (arc.len() / k, arc.len() % k);
        let mut cells = Vec::with_capacity(k);
        let mut start = 0;
        for c in 0..k {
            let len = base + usize::from(c < extra);
            cells.push(arc[start..start + len].to_vec());
            start += len;
        }
        Ok(cells)
    }

    /// Stable content hash over the face list, as 16 hex digits.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for f in &self.faces {
            hasher.update(f.q.to_le_bytes());
            hasher.update(f.r.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Centroid of the face centres in the plane.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let (sx, sy) = self
            .faces
            .iter()
            .map(|f| f.pixel())
            .fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
        (sx / n, sy / n)
    }

    pub fn description(&self) -> DomainDescription {
        let params = match self.kind {
            DomainKind::RegularHexagon { side } => vec![side as i64],
            DomainKind::HexBox { width, height } => vec![width as i64, height as i64],
            DomainKind::Strip { width, length } => vec![width as i64, length as i64],
            DomainKind::Annulus { side, delta } => vec![side as i64, delta as i64],
            DomainKind::Custom => Vec::new(),
        };
        let kind = match self.kind {
            DomainKind::RegularHexagon { .. } => "hexagon",
            DomainKind::HexBox { .. } => "box",
            DomainKind::Strip { .. } => "strip",
            DomainKind::Annulus { .. } => "annulus",
            DomainKind::Custom => "custom",
        };
        DomainDescription {
            kind: kind.to_string(),
            params,
            faces: self.faces.iter().map(|f| [f.q, f.r]).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.description())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let desc: DomainDescription = serde_json::from_str(text)?;
        Self::from_description(&desc)
    }

    /// Rebuilds a domain. Named kinds are reconstructed from their parameters
    /// (and translated to the stored position); the stored face list must
    /// match the reconstruction.
    pub fn from_description(desc: &DomainDescription) -> Result<Self> {
        let faces: Vec<FaceCoord> = desc.faces.iter().map(|&[q, r]| FaceCoord::new(q, r)).collect();
        let param = |i: usize| -> Result<u32> {
            desc.params
                .get(i)
                .and_then(|&v| u32::try_from(v).ok())
                .ok_or_else(|| Error::Format(format!("{} needs parameter {i}", desc.kind)))
        };
        let built = match desc.kind.as_str() {
            "hexagon" => Self::regular_hexagon(param(0)?)?,
            "box" => Self::hex_box(param(0)?, param(1)?)?,
            "strip" => Self::strip(param(0)?, param(1)?)?,
            "annulus" => Self::annulus(param(0)?, param(1)?)?,
            "custom" => return Self::from_faces(faces),
            other => return Err(Error::Format(format!("unknown domain kind {other:?}"))),
        };
        if faces.is_empty() {
            return Ok(built);
        }
        let (dq, dr) = (faces[0].q - built.faces[0].q, faces[0].r - built.faces[0].r);
        let built = built.translate(dq, dr);
        if built.faces != faces {
            return Err(Error::Format(format!(
                "face list does not match a {} with parameters {:?}",
                desc.kind, desc.params
            )));
        }
        Ok(built)
    }

    /// Parses the compact command-line form: `hexagon:3`, `box:4x3`,
    /// `strip:2x10`, `annulus:2,2`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("domain spec {spec:?} lacks ':'")))?;
        let nums: Vec<u32> = rest
            .split(['x', ','])
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Format(format!("bad number {t:?} in domain spec {spec:?}")))
            })
            .collect::<Result<_>>()?;
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Format(format!("domain spec {spec:?} needs {n} numbers")))
            }
        };
        match kind {
            "hexagon" => {
                want(1)?;
                Self::regular_hexagon(nums[0])
            }
            "box" => {
                want(2)?;
                Self::hex_box(nums[0], nums[1])
            }
            "strip" => {
                want(2)?;
                Self::strip(nums[0], nums[1])
            }
            "annulus" => {
                want(2)?;
                Self::annulus(nums[0], nums[1])
            }
            other => Err(Error::Format(format!("unknown domain kind {other:?}"))),
        }
    }
}

/// JSON form of a domain: `{kind, params, faces}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDescription {
    pub kind: String,
    pub params: Vec<i64>,
    pub faces: Vec<[i32; 2]>,
}

/// Union of several domains as a custom domain, preserving first-seen order.
pub fn union_of(domains: &[&HexDomain]) -> Result<HexDomain> {
    HexDomain::from_faces(domains.iter().flat_map(|d| d.faces().iter().copied()))
}
