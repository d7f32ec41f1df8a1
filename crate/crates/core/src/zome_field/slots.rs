//! The 62 Zomeball slot directions and the nine standard struts.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::golden::{GoldenNumber, GoldenVector, GAMMA};

/// Slot shape on the ball. Each family carries exactly one strut color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotFamily {
    /// Rectangular slots, 2-fold axes, blue struts.
    Rect,
    /// Pentagonal slots, 5-fold axes, red struts.
    Pent,
    /// Triangular slots, 3-fold axes, yellow struts.
    Tri,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrutColor {
    Blue,
    Red,
    Yellow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrutSize {
    S,
    M,
    L,
}

impl StrutColor {
    pub const ALL: [StrutColor; 3] = [StrutColor::Blue, StrutColor::Red, StrutColor::Yellow];

    pub fn family(self) -> SlotFamily {
        match self {
            StrutColor::Blue => SlotFamily::Rect,
            StrutColor::Red => SlotFamily::Pent,
            StrutColor::Yellow => SlotFamily::Tri,
        }
    }

    /// Length of the size-S strut relative to the short blue strut.
    pub fn base_ratio(self) -> f64 {
        match self {
            StrutColor::Blue => 1.0,
            StrutColor::Red => (2.0 + GAMMA).sqrt() / 2.0,
            StrutColor::Yellow => 3f64.sqrt() / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrutColor::Blue => "blue",
            StrutColor::Red => "red",
            StrutColor::Yellow => "yellow",
        }
    }
}

impl StrutSize {
    pub const ALL: [StrutSize; 3] = [StrutSize::S, StrutSize::M, StrutSize::L];

    /// Exact golden scale factor `1`, `γ` or `1 + γ`.
    pub fn factor(self) -> GoldenNumber {
        match self {
            StrutSize::S => GoldenNumber::ONE,
            StrutSize::M => GoldenNumber::GAMMA,
            StrutSize::L => GoldenNumber::GAMMA_SQ,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StrutSize::S => "S",
            StrutSize::M => "M",
            StrutSize::L => "L",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrutSpec {
    pub color: StrutColor,
    pub size: StrutSize,
}

impl StrutSpec {
    pub const BLUE_S: StrutSpec = StrutSpec { color: StrutColor::Blue, size: StrutSize::S };

    pub fn new(color: StrutColor, size: StrutSize) -> Self {
        StrutSpec { color, size }
    }

    /// All nine standard struts, colors outermost.
    pub fn all() -> impl Iterator<Item = StrutSpec> {
        StrutColor::ALL
            .into_iter()
            .flat_map(|c| StrutSize::ALL.into_iter().map(move |s| StrutSpec::new(c, s)))
    }
}

impl fmt::Display for StrutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.color.name(), self.size.name())
    }
}

/// Strut length in units of b₀ (center-to-center of the two balls).
pub fn strut_length(spec: StrutSpec) -> f64 {
    spec.color.base_ratio() * spec.size.factor().eval()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotDirection {
    pub index: usize,
    pub family: SlotFamily,
    pub unit_vector: Vector3<f64>,
    /// Exact displacement of the size-S strut of this family.
    pub step: GoldenVector,
    /// Index of the opposite slot.
    pub antipode: usize,
}

impl SlotDirection {
    pub fn color(&self) -> StrutColor {
        match self.family {
            SlotFamily::Rect => StrutColor::Blue,
            SlotFamily::Pent => StrutColor::Red,
            SlotFamily::Tri => StrutColor::Yellow,
        }
    }

    pub fn lattice_step(&self, size: StrutSize) -> GoldenVector {
        self.step.scale(size.factor())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("strut {spec} does not fit a {family:?} slot (direction {index})")]
pub struct FamilyMismatch {
    pub index: usize,
    pub family: SlotFamily,
    pub spec: StrutSpec,
}

/// Exact displacement produced by a strut of `spec` plugged into `dir`.
pub fn strut_displacement(dir: &SlotDirection, spec: StrutSpec) -> Result<GoldenVector, FamilyMismatch> {
    if dir.family != spec.color.family() {
        return Err(FamilyMismatch { index: dir.index, family: dir.family, spec });
    }
    Ok(dir.lattice_step(spec.size))
}

fn cyclic(v: [GoldenNumber; 3]) -> [[GoldenNumber; 3]; 3] {
    [v, [v[1], v[2], v[0]], [v[2], v[0], v[1]]]
}

fn sign_variants(v: [GoldenNumber; 3]) -> Vec<[GoldenNumber; 3]> {
    let mut out = Vec::with_capacity(8);
    for mask in 0..8u8 {
        let mut w = v;
        let mut skip = false;
        for (k, c) in w.iter_mut().enumerate() {
            if mask & (1 << k) != 0 {
                if *c == GoldenNumber::ZERO {
                    skip = true;
                }
                *c = -*c;
            }
        }
        if !skip {
            out.push(w);
        }
    }
    out
}

fn family_steps(bases: &[[GoldenNumber; 3]]) -> Vec<GoldenVector> {
    let mut steps: Vec<GoldenVector> = Vec::new();
    for base in bases {
        for c in cyclic(*base) {
            for s in sign_variants(c) {
                let v = GoldenVector::new(s[0], s[1], s[2]);
                if !steps.contains(&v) {
                    steps.push(v);
                }
            }
        }
    }
    steps
}

fn build_directions() -> Vec<SlotDirection> {
    let z = GoldenNumber::ZERO;
    let one = GoldenNumber::ONE;
    let half = GoldenNumber::HALF;
    let g_half = GoldenNumber::new(0, 1); // γ/2
    let gm1_half = GoldenNumber::new(-1, 1); // (γ−1)/2

    // Size-S steps. All three families share one icosahedral frame whose
    // 5-fold axes are (0, ±1, ±γ) and cyclic permutations.
    let rect = family_steps(&[[one, z, z], [gm1_half, g_half, half]]);
    let pent = family_steps(&[[z, half, g_half]]);
    let tri = family_steps(&[[half, half, half], [gm1_half, z, g_half]]);
    debug_assert_eq!((rect.len(), pent.len(), tri.len()), (30, 12, 20));

    let mut all: Vec<(SlotFamily, GoldenVector)> = Vec::with_capacity(62);
    all.extend(rect.into_iter().map(|s| (SlotFamily::Rect, s)));
    all.extend(pent.into_iter().map(|s| (SlotFamily::Pent, s)));
    all.extend(tri.into_iter().map(|s| (SlotFamily::Tri, s)));
    // Documented index order: lexicographic on the exact size-S step.
    all.sort_by(|a, b| a.1.cmp(&b.1));

    let mut dirs: Vec<SlotDirection> = all
        .iter()
        .enumerate()
        .map(|(index, (family, step))| {
            let ratio = match family {
                SlotFamily::Rect => StrutColor::Blue,
                SlotFamily::Pent => StrutColor::Red,
                SlotFamily::Tri => StrutColor::Yellow,
            }
            .base_ratio();
            SlotDirection {
                index,
                family: *family,
                unit_vector: step.eval() / ratio,
                step: *step,
                antipode: usize::MAX,
            }
        })
        .collect();
    for i in 0..dirs.len() {
        let neg = -dirs[i].step;
        dirs[i].antipode = all.iter().position(|(_, s)| *s == neg).expect("antipodal closure");
    }
    dirs
}

/// The 62 slot directions in their fixed index order.
pub fn slot_directions() -> &'static [SlotDirection] {
    static DIRS: OnceLock<Vec<SlotDirection>> = OnceLock::new();
    DIRS.get_or_init(build_directions)
}

/// Slot indices of the six axis directions `+x, −x, +y, −y, +z, −z`.
pub fn axis_slots() -> [usize; 6] {
    static AXES: OnceLock<[usize; 6]> = OnceLock::new();
    *AXES.get_or_init(|| {
        let dirs = slot_directions();
        let find = |v: GoldenVector| dirs.iter().position(|d| d.step == v).unwrap();
        [
            find(GoldenVector::int(1, 0, 0)),
            find(GoldenVector::int(-1, 0, 0)),
            find(GoldenVector::int(0, 1, 0)),
            find(GoldenVector::int(0, -1, 0)),
            find(GoldenVector::int(0, 0, 1)),
            find(GoldenVector::int(0, 0, -1)),
        ]
    })
}

/// One concrete strut placement: slot direction plus strut spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub direction: usize,
    pub spec: StrutSpec,
}

/// Every strut displacement on the lattice (62 × 3 entries), keyed by the
/// exact offset it produces.
pub fn displacement_table() -> &'static HashMap<GoldenVector, Placement> {
    static TABLE: OnceLock<HashMap<GoldenVector, Placement>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = HashMap::new();
        for d in slot_directions() {
            for size in StrutSize::ALL {
                let spec = StrutSpec::new(d.color(), size);
                let prev = table.insert(d.lattice_step(size), Placement { direction: d.index, spec });
                assert!(prev.is_none(), "distinct placements share an offset");
            }
        }
        table
    })
}

/// All placements in a deterministic order (direction, then size).
pub fn all_placements() -> &'static [(Placement, GoldenVector)] {
    static LIST: OnceLock<Vec<(Placement, GoldenVector)>> = OnceLock::new();
    LIST.get_or_init(|| {
        let mut v = Vec::with_capacity(186);
        for d in slot_directions() {
            for size in StrutSize::ALL {
                let spec = StrutSpec::new(d.color(), size);
                v.push((Placement { direction: d.index, spec }, d.lattice_step(size)));
            }
        }
        v
    })
}

/// Look up the placement realising an exact offset, if any.
pub fn placement_for(offset: GoldenVector) -> Option<Placement> {
    displacement_table().get(&offset).copied()
}

/// Ordered pairs of placements whose offsets sum to `offset`.
pub fn decompositions(offset: GoldenVector) -> Vec<(Placement, Placement)> {
    all_placements()
        .iter()
        .filter_map(|(p1, d1)| placement_for(offset - *d1).map(|p2| (*p1, p2)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_is_30_12_20() {
        let dirs = slot_directions();
        assert_eq!(dirs.len(), 62);
        let count = |f| dirs.iter().filter(|d| d.family == f).count();
        assert_eq!(count(SlotFamily::Rect), 30);
        assert_eq!(count(SlotFamily::Pent), 12);
        assert_eq!(count(SlotFamily::Tri), 20);
    }

    #[test]
    fn unit_vectors_and_antipodes() {
        for d in slot_directions() {
            assert!((d.unit_vector.norm() - 1.0).abs() < 1e-12, "slot {}", d.index);
            let a = &slot_directions()[d.antipode];
            assert_eq!(a.family, d.family);
            assert_eq!(a.step, -d.step);
            assert_eq!(a.antipode, d.index);
        }
    }

    #[test]
    fn strut_lengths() {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert_eq!(strut_length(StrutSpec::BLUE_S), 1.0);
        assert!((strut_length(StrutSpec::new(StrutColor::Blue, StrutSize::M)) - g).abs() < 1e-12);
        assert!((strut_length(StrutSpec::new(StrutColor::Yellow, StrutSize::S)) - 0.866_025_403_784).abs() < 1e-11);
        assert!((strut_length(StrutSpec::new(StrutColor::Red, StrutSize::S)) - (2.0 + g).sqrt() / 2.0).abs() < 1e-12);
        assert!((strut_length(StrutSpec::new(StrutColor::Red, StrutSize::S)) - 0.951_056_516).abs() < 1e-9);
        // b₂ = b₀ + b₁ per color
        for c in StrutColor::ALL {
            let l = |s| strut_length(StrutSpec::new(c, s));
            assert!((l(StrutSize::L) - l(StrutSize::S) - l(StrutSize::M)).abs() < 1e-12);
            assert_eq!(StrutSize::L.factor(), StrutSize::S.factor() + StrutSize::M.factor());
        }
    }

    #[test]
    fn displacement_examples() {
        let dirs = slot_directions();
        let by_step = |v: GoldenVector| dirs.iter().find(|d| d.step == v).unwrap();
        let x = by_step(GoldenVector::int(1, 0, 0));
        assert_eq!(strut_displacement(x, StrutSpec::BLUE_S).unwrap(), GoldenVector::from_pairs([(2, 0), (0, 0), (0, 0)]));
        assert_eq!(
            strut_displacement(x, StrutSpec::new(StrutColor::Blue, StrutSize::M)).unwrap(),
            GoldenVector::from_pairs([(0, 2), (0, 0), (0, 0)])
        );
        let diag = by_step(GoldenVector::from_pairs([(1, 0), (1, 0), (1, 0)]));
        assert_eq!(diag.family, SlotFamily::Tri);
        assert_eq!(
            strut_displacement(diag, StrutSpec::new(StrutColor::Yellow, StrutSize::M)).unwrap(),
            GoldenVector::from_pairs([(0, 1), (0, 1), (0, 1)])
        );
        let pent = by_step(GoldenVector::from_pairs([(0, 0), (1, 0), (0, 1)]));
        assert_eq!(pent.family, SlotFamily::Pent);
        let g = GAMMA;
        let expect = Vector3::new(0.0, 1.0, g) / (2.0 + g).sqrt();
        assert!((pent.unit_vector - expect).norm() < 1e-12);
        assert!(strut_displacement(x, StrutSpec::new(StrutColor::Red, StrutSize::S)).is_err());
    }

    #[test]
    fn every_placement_has_the_right_length() {
        for d in slot_directions() {
            for spec in StrutSpec::all() {
                match strut_displacement(d, spec) {
                    Ok(v) => assert!((v.eval().norm() - strut_length(spec)).abs() < 1e-12),
                    Err(e) => assert_ne!(e.family, spec.color.family()),
                }
            }
        }
    }

    #[test]
    fn icosahedral_frame_is_consistent() {
        // Every blue axis bisects two adjacent red axes and every yellow axis
        // is the center of a face of the red icosahedron.
        let dirs = slot_directions();
        let reds: Vec<_> = dirs.iter().filter(|d| d.family == SlotFamily::Pent).map(|d| d.unit_vector).collect();
        let near = |u: Vector3<f64>, v: Vector3<f64>| u.dot(&v) > (1.0 / 5f64.sqrt()) - 1e-9 && u.dot(&v) < 1.0 - 1e-9;
        let mut mids = Vec::new();
        let mut faces = Vec::new();
        for i in 0..12 {
            for j in i + 1..12 {
                if near(reds[i], reds[j]) {
                    mids.push((reds[i] + reds[j]).normalize());
                    for k in j + 1..12 {
                        if near(reds[i], reds[k]) && near(reds[j], reds[k]) {
                            faces.push((reds[i] + reds[j] + reds[k]).normalize());
                        }
                    }
                }
            }
        }
        assert_eq!((mids.len(), faces.len()), (30, 20));
        for d in dirs {
            let pool = match d.family {
                SlotFamily::Rect => &mids,
                SlotFamily::Tri => &faces,
                SlotFamily::Pent => continue,
            };
            assert!(pool.iter().any(|m| (m - d.unit_vector).norm() < 1e-9), "slot {} off-frame", d.index);
        }
    }

    #[test]
    fn index_order_is_lexicographic() {
        let dirs = slot_directions();
        for w in dirs.windows(2) {
            assert!(w[0].step < w[1].step);
        }
    }

    #[test]
    fn blue_s_splits_into_two_yellow_s() {
        let decs = decompositions(GoldenVector::int(1, 0, 0));
        let yy = decs
            .iter()
            .filter(|(a, b)| a.spec.color == StrutColor::Yellow && b.spec.color == StrutColor::Yellow)
            .count();
        assert!(yy > 0);
        // A blue L splits into S + M along the same axis.
        let l = GoldenVector::int(1, 0, 0).scale(GoldenNumber::GAMMA_SQ);
        let decs = decompositions(l);
        assert!(decs.iter().any(|(a, b)| a.spec == StrutSpec::BLUE_S
            && b.spec == StrutSpec::new(StrutColor::Blue, StrutSize::M)
            && a.direction == b.direction));
    }
}
