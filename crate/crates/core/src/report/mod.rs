//! Bill of materials, formula-based cost and time estimates, assembly guide.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::connectors::{Axis, ConnectorLayout};
use crate::zome_field::{slot_directions, StrutColor, StrutSize, StrutSpec};
use crate::zome_opt::ZomeStructure;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Prices and rates. All estimates built from these are plain formulas, not
/// slicer simulations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub filament_usd_per_meter: f64,
    pub strut_usd: f64,
    pub ball_usd: f64,
    /// 1.75 mm filament.
    pub filament_cross_section_mm2: f64,
    pub print_speed_mm3_per_hour: f64,
    pub zome_assembly_sec_per_element: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            filament_usd_per_meter: 0.56,
            strut_usd: 0.19,
            ball_usd: 0.29,
            filament_cross_section_mm2: 2.405,
            print_speed_mm3_per_hour: 15000.0,
            zome_assembly_sec_per_element: 30.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.filament_usd_per_meter,
            self.strut_usd,
            self.ball_usd,
            self.filament_cross_section_mm2,
            self.print_speed_mm3_per_hour,
            self.zome_assembly_sec_per_element,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(format!("cost model values must be positive: {self:?}"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BomLine {
    pub color: StrutColor,
    pub size: StrutSize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bom {
    /// All nine strut kinds, zero counts included.
    pub struts: Vec<BomLine>,
    pub total_struts: usize,
    pub total_balls: usize,
    /// (label, printed volume in mm³) per piece.
    pub piece_volumes: Vec<(u32, f64)>,
}

impl Bom {
    pub fn count(&self, spec: StrutSpec) -> usize {
        self.struts.iter().find(|l| l.color == spec.color && l.size == spec.size).map_or(0, |l| l.count)
    }

    pub fn total_elements(&self) -> usize {
        self.total_struts + self.total_balls
    }

    pub fn shell_volume(&self) -> f64 {
        self.piece_volumes.iter().map(|(_, v)| v).sum()
    }

    /// `color,size,count` rows followed by totals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("color,size,count\n");
        for l in &self.struts {
            let _ = writeln!(s, "{},{},{}", l.color.name(), l.size.name(), l.count);
        }
        let _ = writeln!(s, "total,struts,{}", self.total_struts);
        let _ = writeln!(s, "total,balls,{}", self.total_balls);
        s
    }
}

pub fn bom(z: &ZomeStructure) -> Bom {
    let counts = z.spec_counts();
    let struts: Vec<BomLine> = StrutSpec::all()
        .map(|spec| BomLine { color: spec.color, size: spec.size, count: counts.get(&spec).copied().unwrap_or(0) })
        .collect();
    let total_struts = struts.iter().map(|l| l.count).sum();
    Bom { struts, total_struts, total_balls: z.node_count(), piece_volumes: Vec::new() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub strut_usd: f64,
    pub ball_usd: f64,
    pub zome_usd: f64,
    pub filament_m: f64,
    pub print_usd: f64,
    pub total_usd: f64,
    pub basis: String,
}

pub fn cost_estimate(bom: &Bom, shell_volume_mm3: f64, model: &CostModel) -> CostReport {
    let strut_usd = bom.total_struts as f64 * model.strut_usd;
    let ball_usd = bom.total_balls as f64 * model.ball_usd;
    let filament_m = shell_volume_mm3 / model.filament_cross_section_mm2 / 1000.0;
    let print_usd = filament_m * model.filament_usd_per_meter;
    CostReport {
        strut_usd,
        ball_usd,
        zome_usd: strut_usd + ball_usd,
        filament_m,
        print_usd,
        total_usd: strut_usd + ball_usd + print_usd,
        basis: "formula estimate: filament length = solid volume / filament cross-section (no slicer, no infill)".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeReport {
    pub print_hours: f64,
    pub assembly_hours: f64,
    pub overall_hours: f64,
    pub basis: String,
}

pub fn time_estimate(bom: &Bom, shell_volume_mm3: f64, model: &CostModel) -> TimeReport {
    let print_hours = shell_volume_mm3 / model.print_speed_mm3_per_hour;
    let assembly_hours = bom.total_elements() as f64 * model.zome_assembly_sec_per_element / 3600.0;
    TimeReport {
        print_hours,
        assembly_hours,
        overall_hours: print_hours + assembly_hours,
        basis: "formula estimate: volume / print speed plus a fixed time per Zometool element".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideStrut {
    pub slot: usize,
    pub color: StrutColor,
    pub size: StrutSize,
    pub neighbour: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideTenon {
    pub slot: usize,
    pub direction: Axis,
    pub piece: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideEntry {
    pub ball_id: u32,
    pub position_mm: [f64; 3],
    pub struts: Vec<GuideStrut>,
    pub tenons: Vec<GuideTenon>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyGuide {
    pub schema_version: u32,
    /// First ball of each connected component.
    pub roots: Vec<u32>,
    pub entries: Vec<GuideEntry>,
}

/// Balls in breadth-first order from the lowest id of each component,
/// neighbours visited by slot index. Each entry lists its struts by slot and
/// flags the slots that take a tenon.
pub fn assembly_guide(z: &ZomeStructure, layout: Option<&ConnectorLayout>) -> AssemblyGuide {
    let mut tenons: BTreeMap<u32, Vec<GuideTenon>> = BTreeMap::new();
    for pt in layout.map(|l| l.pieces.as_slice()).unwrap_or_default() {
        for t in &pt.tenons {
            tenons.entry(t.ball_id).or_default().push(GuideTenon { slot: t.direction.slot(), direction: t.direction, piece: pt.label });
        }
    }
    let mut seen = BTreeSet::new();
    let mut roots = Vec::new();
    let mut entries = Vec::new();
    for &root in z.nodes().keys() {
        if !seen.insert(root) {
            continue;
        }
        roots.push(root);
        let mut queue = VecDeque::from([root]);
        while let Some(b) = queue.pop_front() {
            let node = &z.nodes()[&b];
            let mut struts = Vec::new();
            for (&slot, &sid) in &node.slots {
                let s = z.strut(sid).expect("slot refers to a strut");
                let other = s.other(b);
                struts.push(GuideStrut { slot, color: s.spec.color, size: s.spec.size, neighbour: other });
                if seen.insert(other) {
                    queue.push_back(other);
                }
            }
            let p = z.node_world(b);
            let mut ts = tenons.remove(&b).unwrap_or_default();
            ts.sort_by_key(|t| t.slot);
            entries.push(GuideEntry { ball_id: b, position_mm: [p.x, p.y, p.z], struts, tenons: ts });
        }
    }
    AssemblyGuide { schema_version: REPORT_SCHEMA_VERSION, roots, entries }
}

impl AssemblyGuide {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Assembly guide: {} balls, start from ball {:?}", self.entries.len(), self.roots);
        for (step, e) in self.entries.iter().enumerate() {
            let [x, y, z] = e.position_mm;
            let _ = writeln!(s, "\n{:4}. ball {} at ({x:.1}, {y:.1}, {z:.1}) mm", step + 1, e.ball_id);
            for st in &e.struts {
                let v = slot_directions()[st.slot].unit_vector;
                let _ = writeln!(
                    s,
                    "      slot {:2} ({:+.3}, {:+.3}, {:+.3}): {}-{} to ball {}",
                    st.slot,
                    v[0],
                    v[1],
                    v[2],
                    st.color.name(),
                    st.size.name(),
                    st.neighbour
                );
            }
            for t in &e.tenons {
                let _ = writeln!(s, "      slot {:2} ({}): tenon of piece {}", t.slot, t.direction.name(), t.piece);
            }
        }
        s
    }
}

/// Everything the report stage writes to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub model: CostModel,
    pub bom: Bom,
    pub cost: CostReport,
    pub time: TimeReport,
    pub tenons: usize,
}

pub fn build_report(z: &ZomeStructure, piece_volumes: Vec<(u32, f64)>, layout: Option<&ConnectorLayout>, model: &CostModel) -> ReportDocument {
    let mut b = bom(z);
    b.piece_volumes = piece_volumes;
    let volume = b.shell_volume();
    ReportDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        model: *model,
        cost: cost_estimate(&b, volume, model),
        time: time_estimate(&b, volume, model),
        tenons: layout.map_or(0, |l| l.total()),
        bom: b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectors::{PieceTenons, Tenon};
    use crate::geometry::Vec3;
    use crate::zome_opt::{propose, OpKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn counts_bom(struts: usize, balls: usize) -> Bom {
        Bom {
            struts: vec![BomLine { color: StrutColor::Blue, size: StrutSize::S, count: struts }],
            total_struts: struts,
            total_balls: balls,
            piece_volumes: Vec::new(),
        }
    }

    #[test]
    fn lattice_bom() {
        let b = bom(&ZomeStructure::cube_lattice(47.3, Vec3::zeros(), 3));
        // 3 axes × 3×3 lines × 2 struts per line
        let expect = 3 * 3 * 3 * 2;
        assert_eq!(expect, 54);
        assert_eq!(b.count(StrutSpec::BLUE_S), expect);
        assert_eq!(b.total_struts, expect);
        assert_eq!(b.total_balls, 27);
        assert_eq!(b.struts.len(), 9);
        assert_eq!(b.struts.iter().map(|l| l.count).sum::<usize>(), b.total_struts);
        let csv = b.to_csv();
        assert!(csv.starts_with("color,size,count\nblue,S,54\n"));
        assert!(csv.ends_with("total,struts,54\ntotal,balls,27\n"));
    }

    #[test]
    fn empty_structure() {
        let b = bom(&ZomeStructure::new(47.3, Vec3::zeros()));
        assert_eq!(b.total_struts + b.total_balls, 0);
        let c = cost_estimate(&b, 0.0, &CostModel::default());
        assert_eq!(c.zome_usd, 0.0);
        assert_eq!(time_estimate(&b, 0.0, &CostModel::default()).assembly_hours, 0.0);
    }

    #[test]
    fn table_counts_at_published_prices() {
        let c = cost_estimate(&counts_bom(252, 73), 0.0, &CostModel::default());
        assert!((c.strut_usd - 47.88).abs() < 1e-9);
        assert!((c.ball_usd - 21.17).abs() < 1e-9);
        assert!((c.zome_usd - 69.05).abs() < 1e-9);
    }

    /// The published per-model Zometool cost for these counts is 70.57, which
    /// the published unit prices do not reproduce. We trust our arithmetic.
    #[test]
    fn published_cost_diverges_from_its_counts() {
        let c = cost_estimate(&counts_bom(252, 73), 0.0, &CostModel::default());
        let published = 70.57;
        assert!((published - c.zome_usd - 1.52).abs() < 1e-9);
    }

    #[test]
    fn print_cost_is_linear() {
        let m = CostModel::default();
        let b = counts_bom(10, 5);
        let one = cost_estimate(&b, 1.0e6, &m);
        let two = cost_estimate(&b, 2.0e6, &m);
        assert!((two.print_usd - 2.0 * one.print_usd).abs() < 1e-9);
        assert_eq!(one.zome_usd, two.zome_usd);
        // 1e6 mm³ of 2.405 mm² filament is 415.8 m
        assert!((one.filament_m - 1.0e6 / 2.405 / 1000.0).abs() < 1e-9);
        assert!((one.total_usd - one.zome_usd - one.print_usd).abs() < 1e-12);
        let t1 = time_estimate(&b, 1.0e6, &m);
        let t2 = time_estimate(&b, 2.0e6, &m);
        assert!((t2.print_hours - 2.0 * t1.print_hours).abs() < 1e-12);
    }

    #[test]
    fn assembly_time() {
        let t = time_estimate(&counts_bom(252, 73), 3.0e5, &CostModel::default());
        assert!((t.assembly_hours - 325.0 * 30.0 / 3600.0).abs() < 1e-12);
        assert!((t.assembly_hours - 2.71).abs() < 0.005);
        assert!((t.print_hours - 20.0).abs() < 1e-12);
        assert_eq!(t.overall_hours, t.print_hours + t.assembly_hours);
    }

    #[test]
    fn cube_guide() {
        let z = ZomeStructure::cube_lattice(47.3, Vec3::zeros(), 2);
        let g = assembly_guide(&z, None);
        assert_eq!(g.entries.len(), 8);
        assert!(g.entries.iter().all(|e| e.struts.len() == 3));
        assert_eq!(g.roots, vec![0]);
        // breadth-first: the root's three neighbours come next
        let first: BTreeSet<u32> = g.entries[1..4].iter().map(|e| e.ball_id).collect();
        let expect: BTreeSet<u32> = g.entries[0].struts.iter().map(|s| s.neighbour).collect();
        assert_eq!(first, expect);
        assert_eq!(g, assembly_guide(&z, None));
        let text = g.to_text();
        assert_eq!(text.matches("blue-S").count(), 24);
    }

    #[test]
    fn guide_handshake_and_tenons() {
        let z = ZomeStructure::cube_lattice(47.3, Vec3::zeros(), 3);
        let layout = ConnectorLayout {
            pieces: vec![PieceTenons {
                label: 0,
                tenons: vec![Tenon { ball_id: 0, direction: Axis::NegX, base_point: [-20.0, 0.0, 0.0], length: 20.0 }],
            }],
            warnings: Vec::new(),
        };
        let g = assembly_guide(&z, Some(&layout));
        assert_eq!(g.entries.iter().map(|e| e.struts.len()).sum::<usize>(), 2 * z.strut_count());
        let ids: BTreeSet<u32> = g.entries.iter().map(|e| e.ball_id).collect();
        assert_eq!(ids.len(), z.node_count());
        let e0 = g.entries.iter().find(|e| e.ball_id == 0).unwrap();
        assert_eq!(e0.tenons.len(), 1);
        assert_eq!(e0.tenons[0].slot, Axis::NegX.slot());
        assert!(g.to_text().contains("tenon of piece 0"));
    }

    #[test]
    fn bom_restored_by_inverse_edits() {
        let mut z = ZomeStructure::cube_lattice(47.3, Vec3::zeros(), 3);
        let before = bom(&z);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut changed = 0;
        for k in 0..200 {
            let kind = OpKind::ALL[k % OpKind::ALL.len()];
            if let Ok(edits) = propose(&mut z, kind, &mut rng) {
                if bom(&z) != before {
                    changed += 1;
                }
                z.undo_all(&edits);
                assert_eq!(bom(&z), before);
            }
        }
        assert!(changed > 0);
    }
}
