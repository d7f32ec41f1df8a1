//! Stage orchestration: configuration, cached stage runs and artifact files.
//!
//! Each stage hashes its inputs (file contents plus the config values it
//! reads) and records the hashes of what it wrote in `state.json`. A stage
//! whose input hash and outputs are unchanged is skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::connectors::{assign_tenons, emit_tenon_geometry, verify_layout, ConnectorLayout, ConnectorParams, LayoutDocument, LAYOUT_SCHEMA_VERSION};
use crate::cut_planes::{build_solid_shell, cut_shell, export_pieces, train_planes, validate_piece_fit, CutPlane, Piece, PlanesDocument, SvmParams};
use crate::mesh::{load_mesh_auto, read_obj, TriangleMesh};
use crate::partition::{
    fit_partitions, load_saliency, nearest_node_labeling, structure_labels, Labeling, LabelingDocument, PartitionProblem, PartitionWeights,
    PrintVolume,
};
use crate::report::{assembly_guide, build_report, CostModel, ReportDocument};
use crate::zome_opt::{
    anneal, estimate_target_tau, init_structure, AnnealParams, CollisionParams, EnergyTerms, EnergyWeights, ForbiddenZone, OpStats, TauEstimate,
    TauParams, ZomeStructure,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "ZOMEFAB_OUTPUT_DIR";

/// Annealing schedule; the seed lives at the top level of the config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSection {
    pub t_init: f64,
    pub t_end: f64,
    pub cooling: f64,
    pub iterations_per_step: usize,
}

impl Default for AnnealSection {
    fn default() -> Self {
        let a = AnnealParams::default();
        AnnealSection { t_init: a.t_init, t_end: a.t_end, cooling: a.cooling, iterations_per_step: a.iterations_per_step }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauSection {
    pub similarity_threshold: f64,
    pub runs: usize,
    pub max_attempts: usize,
}

impl Default for TauSection {
    fn default() -> Self {
        let t = TauParams::default();
        TauSection { similarity_threshold: t.similarity_threshold, runs: t.runs, max_attempts: t.max_attempts }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Shortest blue strut, mm.
    pub b0_mm: f64,
    pub seed: u64,
    pub voxel_cell_mm: f64,
    pub output_dir: PathBuf,
    /// Triangle ids whose region seams must not cross.
    pub saliency_path: Option<PathBuf>,
    pub zone: ForbiddenZone,
    pub energy: EnergyWeights,
    pub anneal: AnnealSection,
    pub tau: TauSection,
    pub collision: CollisionParams,
    pub partition: PartitionWeights,
    pub print_volume: PrintVolume,
    pub svm: SvmParams,
    pub connectors: ConnectorParams,
    pub cost: CostModel,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            b0_mm: 47.3,
            seed: 42,
            voxel_cell_mm: 5.0,
            output_dir: PathBuf::from("zomefab-out"),
            saliency_path: None,
            zone: ForbiddenZone::default(),
            energy: EnergyWeights::default(),
            anneal: AnnealSection::default(),
            tau: TauSection::default(),
            collision: CollisionParams::default(),
            partition: PartitionWeights::default(),
            print_volume: PrintVolume::default(),
            svm: SvmParams::default(),
            connectors: ConnectorParams::default(),
            cost: CostModel::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Input(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn anneal_params(&self) -> AnnealParams {
        let a = &self.anneal;
        AnnealParams { t_init: a.t_init, t_end: a.t_end, cooling: a.cooling, iterations_per_step: a.iterations_per_step, seed: self.seed }
    }

    pub fn tau_params(&self) -> TauParams {
        let t = &self.tau;
        TauParams { similarity_threshold: t.similarity_threshold, runs: t.runs, max_attempts: t.max_attempts, seed: self.seed }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Input(format!("config: {m}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not {SCHEMA_VERSION}", self.schema_version));
        }
        if !(self.b0_mm > 0.0) || !(self.voxel_cell_mm > 0.0) {
            return bad("b0_mm and voxel_cell_mm must be positive".into());
        }
        let checks = [
            self.zone.validate(),
            self.energy.validate(),
            self.anneal_params().validate(),
            self.collision.validate(),
            self.print_volume.validate(),
            self.connectors.validate(),
            self.cost.validate(),
        ];
        for c in checks {
            if let Err(m) = c {
                return bad(m);
            }
        }
        if self.tau.runs == 0 || !(0.0..=1.0).contains(&self.tau.similarity_threshold) {
            return bad("tau needs runs > 0 and a threshold in [0, 1]".into());
        }
        if !(self.svm.c > 0.0 && self.svm.tolerance > 0.0) {
            return bad("svm c and tolerance must be positive".into());
        }
        let w = &self.partition;
        if !(w.w_data >= 0.0 && w.w_smoothness > 0.0 && w.w_saliency >= 0.0) {
            return bad("partition weights must be non-negative with w_smoothness > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("input: {0}")]
    Input(String),
    #[error("optimize: {0}")]
    Optimize(String),
    #[error("partition: {0}")]
    Partition(String),
    #[error("fabricate: {0}")]
    Fabricate(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 2,
            PipelineError::Optimize(_) => 3,
            PipelineError::Partition(_) => 4,
            PipelineError::Fabricate(_) => 5,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input(format!("{}: {e}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub input_hash: String,
    /// Output file (relative to the output directory) → content hash.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub schema_version: u32,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Default for PipelineState {
    fn default() -> Self {
        PipelineState { schema_version: SCHEMA_VERSION, stages: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageOutcome {
    pub stage: &'static str,
    pub cached: bool,
    pub summary: String,
}

/// The output directory and its `state.json`.
pub struct Workspace {
    dir: PathBuf,
    state: PipelineState,
}

impl Workspace {
    /// Create the directory if needed; an unreadable state file starts fresh.
    pub fn open(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let state = std::fs::read_to_string(dir.join("state.json"))
            .ok()
            .and_then(|t| serde_json::from_str::<PipelineState>(&t).ok())
            .filter(|s| s.schema_version == SCHEMA_VERSION)
            .unwrap_or_default();
        Ok(Workspace { dir: dir.to_path_buf(), state })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn state(&self) -> &PipelineState {
        &self.state
    }

    fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        std::fs::write(&p, bytes).map_err(|e| io_err(&p, e))
    }

    fn write_json(&self, rel: &str, value: &impl Serialize) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    fn file_hash(&self, rel: &str) -> Option<String> {
        std::fs::read(self.path(rel)).ok().map(|b| sha256_hex(&b))
    }

    /// Outputs of a previous run with the same inputs, all still intact.
    fn cached(&self, stage: &str, input_hash: &str) -> bool {
        self.state.stages.get(stage).is_some_and(|r| {
            r.input_hash == input_hash && r.outputs.iter().all(|(f, h)| self.file_hash(f).as_deref() == Some(h))
        })
    }

    fn record(&mut self, stage: &str, input_hash: String, outputs: &[String]) -> Result<(), PipelineError> {
        let mut rec = StageRecord { input_hash, outputs: BTreeMap::new() };
        for f in outputs {
            let h = self.file_hash(f).ok_or_else(|| PipelineError::Input(format!("{f} was not written")))?;
            rec.outputs.insert(f.clone(), h);
        }
        self.state.stages.insert(stage.to_string(), rec);
        let state = self.state.clone();
        self.write_json("state.json", &state)
    }

    /// Content hash of every file under the directory, by relative path.
    pub fn artifact_hashes(&self) -> Result<BTreeMap<String, String>, PipelineError> {
        let mut out = BTreeMap::new();
        let mut stack = vec![self.dir.clone()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d).map_err(|e| io_err(&d, e))? {
                let p = entry.map_err(|e| io_err(&d, e))?.path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    let rel = p.strip_prefix(&self.dir).expect("inside dir").to_string_lossy().replace('\\', "/");
                    let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
                    out.insert(rel, sha256_hex(&bytes));
                }
            }
        }
        Ok(out)
    }
}

/// Hash of labelled parts, so distinct inputs never collide by concatenation.
fn input_hash(parts: &[(&str, String)]) -> String {
    let mut h = Sha256::new();
    for (k, v) in parts {
        h.update((k.len() as u64).to_le_bytes());
        h.update(k.as_bytes());
        h.update((v.len() as u64).to_le_bytes());
        h.update(v.as_bytes());
    }
    hex::encode(h.finalize())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn load_input_mesh(path: &Path) -> Result<(TriangleMesh, String), PipelineError> {
    let hash = sha256_hex(&read_bytes(path)?);
    let mesh = load_mesh_auto(path).map_err(|e| io_err(path, e))?;
    mesh.validate_watertight().map_err(|e| io_err(path, e))?;
    Ok((mesh, hash))
}

fn load_structure(path: &Path) -> Result<(ZomeStructure, String), PipelineError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| io_err(path, e))?;
    let z = ZomeStructure::from_json(&text).map_err(|e| io_err(path, e))?;
    Ok((z, sha256_hex(&bytes)))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String), PipelineError> {
    let bytes = read_bytes(path)?;
    let v = serde_json::from_slice(&bytes).map_err(|e| io_err(path, e))?;
    Ok((v, sha256_hex(&bytes)))
}

fn config_json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("config serializes")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    pub schema_version: u32,
    pub tau: TauEstimate,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_terms: EnergyTerms,
    pub iterations: usize,
    pub nodes: usize,
    pub struts: usize,
    pub operators: BTreeMap<String, OpStats>,
}

/// Lattice initialization, element target, annealing. Writes
/// `structure.json`, `energy_trace.csv` and `optimize.json`.
pub fn cmd_optimize(cfg: &PipelineConfig, mesh_path: &Path, ws: &mut Workspace) -> Result<StageOutcome, PipelineError> {
    cfg.validate()?;
    let (mesh, mesh_hash) = load_input_mesh(mesh_path)?;
    let knobs = (cfg.b0_mm, cfg.zone, cfg.energy, cfg.anneal_params(), cfg.tau_params(), cfg.collision);
    let key = input_hash(&[("stage", "optimize".into()), ("mesh", mesh_hash), ("config", config_json(&knobs))]);
    let outputs = ["structure.json", "energy_trace.csv", "optimize.json"].map(String::from);
    if ws.cached("optimize", &key) {
        return Ok(StageOutcome { stage: "optimize", cached: true, summary: "optimize: up to date".into() });
    }
    let index = mesh.index();
    let init = init_structure(&index, cfg.b0_mm, &cfg.zone).map_err(|e| PipelineError::Optimize(e.to_string()))?;
    let tau = estimate_target_tau(&init, &index, &cfg.zone, &cfg.collision, &cfg.tau_params()).map_err(|e| PipelineError::Optimize(e.to_string()))?;
    let res = anneal(&init, &index, &cfg.zone, &cfg.energy, tau.tau as f64, &cfg.anneal_params(), &cfg.collision);
    if res.best_energy > res.initial_energy {
        return Err(PipelineError::Optimize(format!("final energy {} above initial {}", res.best_energy, res.initial_energy)));
    }
    let mut trace = String::from("iteration,temperature,energy,accepted\n");
    for p in &res.trace {
        let _ = writeln!(trace, "{},{},{},{}", p.iteration, p.temperature, p.current, p.accepted);
    }
    let summary = OptimizeSummary {
        schema_version: SCHEMA_VERSION,
        tau,
        initial_energy: res.initial_energy,
        final_energy: res.best_energy,
        final_terms: res.best_terms,
        iterations: res.iterations,
        nodes: res.best.node_count(),
        struts: res.best.strut_count(),
        operators: res.stats.iter().map(|(k, v)| (format!("{k:?}"), *v)).collect(),
    };
    ws.write("structure.json", res.best.to_json().as_bytes())?;
    ws.write("energy_trace.csv", trace.as_bytes())?;
    ws.write_json("optimize.json", &summary)?;
    ws.record("optimize", key, &outputs)?;
    Ok(StageOutcome {
        stage: "optimize",
        cached: false,
        summary: format!(
            "optimize: {} nodes, {} struts, energy {:.3} -> {:.3} (tau {})",
            summary.nodes, summary.struts, summary.initial_energy, summary.final_energy, summary.tau.tau
        ),
    })
}

/// Rebuild the in-memory labeling from its document, checking it against
/// the mesh and structure. The stored energy must match a recomputation.
pub fn labeling_from_document(doc: &LabelingDocument, mesh: &TriangleMesh, z: &ZomeStructure, saliency: BTreeSet<usize>) -> Result<Labeling, String> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(format!("labeling schema_version {} is not {SCHEMA_VERSION}", doc.schema_version));
    }
    if doc.labels.len() != mesh.triangle_count() {
        return Err(format!("{} labels for {} triangles", doc.labels.len(), mesh.triangle_count()));
    }
    let nodes = structure_labels(z);
    if nodes != doc.label_nodes {
        return Err("label nodes differ from the structure's outer nodes".into());
    }
    let pos: BTreeMap<u32, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let indices = doc.labels.iter().map(|l| pos.get(l).copied().ok_or(format!("unknown label {l}"))).collect::<Result<Vec<_>, _>>()?;
    let w = *doc.w_history.last().ok_or("empty w_history")?;
    let p = PartitionProblem::new(mesh, nodes, doc.weights, saliency).map_err(|e| e.to_string())?.with_smoothness(w);
    let (data, smoothness) = p.energy_parts(&indices);
    if (data + smoothness - doc.energy).abs() > 1e-9 * doc.energy.abs().max(1.0) {
        return Err(format!("stored energy {} but the labeling evaluates to {}", doc.energy, data + smoothness));
    }
    Ok(Labeling { labels: doc.labels.clone(), indices, energy: data + smoothness, data, smoothness })
}

fn saliency_input(cfg: &PipelineConfig, mesh: &TriangleMesh) -> Result<(BTreeSet<usize>, String), PipelineError> {
    match &cfg.saliency_path {
        None => Ok((BTreeSet::new(), String::new())),
        Some(p) => {
            let hash = sha256_hex(&read_bytes(p)?);
            let s = load_saliency(p, mesh).map_err(|e| io_err(p, e))?;
            Ok((s, hash))
        }
    }
}

/// Smoothness-fitted graph-cut labeling and one cut plane per adjacent
/// label pair. Writes `labeling.json` and `planes.json`.
pub fn cmd_partition(cfg: &PipelineConfig, mesh_path: &Path, structure_path: &Path, ws: &mut Workspace) -> Result<StageOutcome, PipelineError> {
    cfg.validate()?;
    let (mesh, mesh_hash) = load_input_mesh(mesh_path)?;
    let (z, z_hash) = load_structure(structure_path)?;
    let (saliency, sal_hash) = saliency_input(cfg, &mesh)?;
    let knobs = (cfg.partition, cfg.print_volume, cfg.zone.d_min, cfg.svm);
    let key = input_hash(&[
        ("stage", "partition".into()),
        ("mesh", mesh_hash),
        ("structure", z_hash),
        ("saliency", sal_hash),
        ("config", config_json(&knobs)),
    ]);
    let outputs = ["labeling.json", "planes.json"].map(String::from);
    if ws.cached("partition", &key) {
        return Ok(StageOutcome { stage: "partition", cached: true, summary: "partition: up to date".into() });
    }
    let part = |e: String| PipelineError::Partition(e);
    let labels = structure_labels(&z);
    let problem = PartitionProblem::new(&mesh, labels.clone(), cfg.partition, saliency.clone()).map_err(|e| part(e.to_string()))?;
    let nearest = nearest_node_labeling(&problem).partition_count();
    let fit = fit_partitions(&mesh, &problem, &cfg.print_volume, cfg.zone.d_min).map_err(|e| part(e.to_string()))?;
    let lab = &fit.labeling;
    let doc = LabelingDocument {
        schema_version: SCHEMA_VERSION,
        label_nodes: labels,
        labels: lab.labels.clone(),
        energy: lab.energy,
        data: lab.data,
        smoothness: lab.smoothness,
        weights: cfg.partition,
        w_history: fit.history.clone(),
        partition_counts: fit.partition_counts.clone(),
        nearest_node_partitions: nearest,
    };
    // the stored labeling must reproduce its own energy
    labeling_from_document(&doc, &mesh, &z, saliency).map_err(part)?;
    let planes = train_planes(&mesh, lab, &cfg.svm).map_err(|e| part(e.to_string()))?;
    let pairs = lab.adjacent_pairs(&mesh).len();
    if planes.len() != pairs {
        return Err(part(format!("{} planes for {pairs} adjacent label pairs", planes.len())));
    }
    let planes_doc = PlanesDocument { schema_version: SCHEMA_VERSION, svm: cfg.svm, planes };
    ws.write_json("labeling.json", &doc)?;
    ws.write_json("planes.json", &planes_doc)?;
    ws.record("partition", key, &outputs)?;
    Ok(StageOutcome {
        stage: "partition",
        cached: false,
        summary: format!(
            "partition: {} partitions (nearest node: {nearest}) at w_smoothness {}, {} planes",
            lab.partition_count(),
            fit.w_smoothness,
            planes_doc.planes.len()
        ),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSummary {
    pub label: u32,
    pub file: String,
    pub triangles: usize,
    pub volume_mm3: f64,
    pub tenons: usize,
    pub dropped_tenons: usize,
    pub dropped_components: usize,
    pub misplaced_triangles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FabricateSummary {
    pub schema_version: u32,
    pub shell_volume_mm3: f64,
    pub piece_volume_sum_mm3: f64,
    pub pieces: Vec<PieceSummary>,
    pub tenons: usize,
    pub zome_usd: f64,
    pub print_usd: f64,
    pub overall_hours: f64,
    pub warnings: Vec<String>,
}

const REPORT_FILES: [&str; 4] = ["bom.csv", "report.json", "assembly_guide.json", "assembly_guide.txt"];

fn write_reports(
    ws: &Workspace,
    z: &ZomeStructure,
    volumes: Vec<(u32, f64)>,
    layout: Option<&ConnectorLayout>,
    cost: &CostModel,
) -> Result<ReportDocument, PipelineError> {
    let report = build_report(z, volumes, layout, cost);
    let guide = assembly_guide(z, layout);
    ws.write("bom.csv", report.bom.to_csv().as_bytes())?;
    ws.write_json("report.json", &report)?;
    ws.write_json("assembly_guide.json", &guide)?;
    ws.write("assembly_guide.txt", guide.to_text().as_bytes())?;
    Ok(report)
}

/// Shell, pieces, tenons and reports. Writes `pieces/piece_<label>.obj`,
/// `layout.json`, `fabricate.json` and the report files.
pub fn cmd_fabricate(
    cfg: &PipelineConfig,
    mesh_path: &Path,
    structure_path: &Path,
    labeling_path: &Path,
    planes_path: &Path,
    ws: &mut Workspace,
) -> Result<StageOutcome, PipelineError> {
    cfg.validate()?;
    let (mesh, mesh_hash) = load_input_mesh(mesh_path)?;
    let (z, z_hash) = load_structure(structure_path)?;
    let (lab_doc, lab_hash): (LabelingDocument, String) = load_json(labeling_path)?;
    let (planes_doc, planes_hash): (PlanesDocument, String) = load_json(planes_path)?;
    let (saliency, sal_hash) = saliency_input(cfg, &mesh)?;
    let knobs = (cfg.voxel_cell_mm, cfg.zone.d_min, cfg.collision, cfg.connectors, cfg.cost, cfg.print_volume);
    let key = input_hash(&[
        ("stage", "fabricate".into()),
        ("mesh", mesh_hash),
        ("structure", z_hash),
        ("labeling", lab_hash),
        ("planes", planes_hash),
        ("saliency", sal_hash),
        ("config", config_json(&knobs)),
    ]);
    if ws.cached("fabricate", &key) {
        return Ok(StageOutcome { stage: "fabricate", cached: true, summary: "fabricate: up to date".into() });
    }
    let labeling = labeling_from_document(&lab_doc, &mesh, &z, saliency).map_err(|e| io_err(labeling_path, e))?;
    if planes_doc.schema_version != SCHEMA_VERSION {
        return Err(io_err(planes_path, format!("schema_version {} is not {SCHEMA_VERSION}", planes_doc.schema_version)));
    }
    let planes: Vec<CutPlane> = planes_doc.planes.iter().map(|f| f.plane).collect();
    let fab = |e: String| PipelineError::Fabricate(e);

    let shell = build_solid_shell(&mesh, cfg.voxel_cell_mm, cfg.zone.d_min).map_err(|e| fab(e.to_string()))?;
    let pieces = cut_shell(&shell, &labeling, &planes).map_err(|e| fab(e.to_string()))?;
    for p in &pieces {
        p.validate().map_err(|e| fab(e.to_string()))?;
    }
    let layout = assign_tenons(&z, &pieces, &cfg.collision, &cfg.connectors);
    let problems = verify_layout(&z, &pieces, &layout, &cfg.connectors);
    if !problems.is_empty() {
        return Err(fab(format!("tenon layout fails re-verification: {}", problems.join("; "))));
    }
    let mut finished: Vec<Piece> = Vec::with_capacity(pieces.len());
    let mut kept_layout = ConnectorLayout { pieces: Vec::new(), warnings: layout.warnings.clone() };
    let mut summaries = Vec::new();
    for (p, pt) in pieces.iter().zip(&layout.pieces) {
        let g = emit_tenon_geometry(p, &pt.tenons, &cfg.collision, &cfg.connectors);
        g.mesh.validate_solid().map_err(|e| fab(format!("piece {} with tenons: {e}", p.label)))?;
        if !validate_piece_fit(&g.mesh, &cfg.print_volume) {
            return Err(fab(format!("piece {} does not fit the print volume", p.label)));
        }
        for (t, why) in &g.dropped {
            kept_layout.warnings.push(format!("piece {}: tenon of ball {} {} dropped: {why}", p.label, t.ball_id, t.direction.name()));
        }
        let volume = g.mesh.signed_volume();
        summaries.push(PieceSummary {
            label: p.label,
            file: format!("pieces/piece_{}.obj", p.label),
            triangles: g.mesh.triangle_count(),
            volume_mm3: volume,
            tenons: g.kept.len(),
            dropped_tenons: g.dropped.len(),
            dropped_components: p.dropped_components,
            misplaced_triangles: p.misplaced_triangles,
        });
        kept_layout.pieces.push(crate::connectors::PieceTenons { label: p.label, tenons: g.kept.clone() });
        finished.push(Piece { mesh: g.mesh, origins: g.origins, volume, ..p.clone() });
    }
    export_pieces(&finished, &ws.path("pieces")).map_err(|e| fab(e.to_string()))?;
    let layout_doc = LayoutDocument { schema_version: LAYOUT_SCHEMA_VERSION, params: cfg.connectors, layout: kept_layout.clone() };
    ws.write_json("layout.json", &layout_doc)?;
    let volumes: Vec<(u32, f64)> = summaries.iter().map(|s| (s.label, s.volume_mm3)).collect();
    let report = write_reports(ws, &z, volumes, Some(&kept_layout), &cfg.cost)?;
    let mut warnings = shell.warnings.clone();
    warnings.extend(kept_layout.warnings.iter().cloned());
    let summary = FabricateSummary {
        schema_version: SCHEMA_VERSION,
        shell_volume_mm3: shell.volume(),
        piece_volume_sum_mm3: report.bom.shell_volume(),
        tenons: kept_layout.total(),
        zome_usd: report.cost.zome_usd,
        print_usd: report.cost.print_usd,
        overall_hours: report.time.overall_hours,
        pieces: summaries,
        warnings,
    };
    ws.write_json("fabricate.json", &summary)?;
    let mut outputs: Vec<String> = summary.pieces.iter().map(|p| p.file.clone()).collect();
    outputs.extend(["layout.json", "fabricate.json"].map(String::from));
    outputs.extend(REPORT_FILES.map(String::from));
    ws.record("fabricate", key, &outputs)?;
    Ok(StageOutcome {
        stage: "fabricate",
        cached: false,
        summary: format!(
            "fabricate: {} pieces, {} tenons, {:.0} mm³ printed; zometool {:.2} USD + print {:.2} USD; {:.1} h overall",
            summary.pieces.len(),
            summary.tenons,
            summary.piece_volume_sum_mm3,
            summary.zome_usd,
            summary.print_usd,
            summary.overall_hours
        ),
    })
}

/// BOM, cost, time and assembly guide from a structure, optionally with a
/// tenon layout and a directory of `piece_<label>.obj` files.
pub fn cmd_report(
    cfg: &PipelineConfig,
    structure_path: &Path,
    layout_path: Option<&Path>,
    pieces_dir: Option<&Path>,
    ws: &mut Workspace,
) -> Result<StageOutcome, PipelineError> {
    cfg.validate()?;
    let (z, z_hash) = load_structure(structure_path)?;
    let (layout, layout_hash) = match layout_path {
        Some(p) => {
            let (doc, h): (LayoutDocument, String) = load_json(p)?;
            if doc.schema_version != LAYOUT_SCHEMA_VERSION {
                return Err(io_err(p, format!("schema_version {} is not {LAYOUT_SCHEMA_VERSION}", doc.schema_version)));
            }
            (Some(doc.layout), h)
        }
        None => (None, String::new()),
    };
    let mut volumes = Vec::new();
    let mut piece_hashes = String::new();
    if let Some(dir) = pieces_dir {
        let mut files: Vec<(u32, PathBuf)> = std::fs::read_dir(dir)
            .map_err(|e| io_err(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter_map(|p| {
                let name = p.file_name()?.to_str()?;
                let label = name.strip_prefix("piece_")?.strip_suffix(".obj")?.parse().ok()?;
                Some((label, p))
            })
            .collect();
        files.sort();
        for (label, p) in files {
            let bytes = read_bytes(&p)?;
            piece_hashes.push_str(&sha256_hex(&bytes));
            let text = String::from_utf8(bytes).map_err(|e| io_err(&p, e))?;
            let m = read_obj(&text).map_err(|e| io_err(&p, e))?;
            volumes.push((label, m.signed_volume()));
        }
    }
    let key = input_hash(&[
        ("stage", "report".into()),
        ("structure", z_hash),
        ("layout", layout_hash),
        ("pieces", piece_hashes),
        ("config", config_json(&cfg.cost)),
    ]);
    if ws.cached("report", &key) {
        return Ok(StageOutcome { stage: "report", cached: true, summary: "report: up to date".into() });
    }
    let report = write_reports(ws, &z, volumes, layout.as_ref(), &cfg.cost)?;
    ws.record("report", key, &REPORT_FILES.map(String::from))?;
    Ok(StageOutcome {
        stage: "report",
        cached: false,
        summary: format!(
            "report: {} struts, {} balls; zometool {:.2} USD, print {:.2} USD; {:.1} h overall",
            report.bom.total_struts, report.bom.total_balls, report.cost.zome_usd, report.cost.print_usd, report.time.overall_hours
        ),
    })
}

/// All three stages in order; each is skipped when its inputs are unchanged.
pub fn cmd_pipeline(cfg: &PipelineConfig, mesh_path: &Path, ws: &mut Workspace) -> Result<Vec<StageOutcome>, PipelineError> {
    let mut out = vec![cmd_optimize(cfg, mesh_path, ws)?];
    let structure = ws.path("structure.json");
    out.push(cmd_partition(cfg, mesh_path, &structure, ws)?);
    let (labeling, planes) = (ws.path("labeling.json"), ws.path("planes.json"));
    out.push(cmd_fabricate(cfg, mesh_path, &structure, &labeling, &planes, ws)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        let text = c.to_toml();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), c);
        assert!(text.contains("b0_mm = 47.3"));
        assert!(text.contains("[print_volume]"));
    }

    #[test]
    fn defaults_are_the_published_constants() {
        let c = PipelineConfig::default();
        assert_eq!(c.b0_mm, 47.3);
        assert_eq!((c.zone.d_min, c.zone.d_max, c.zone.f_max, c.zone.f_thick), (16.0, 47.3, 70.0, 90.0));
        assert_eq!((c.energy.w_fid, c.energy.w_reg, c.energy.w_val, c.energy.w_sim), (1.0, 100.0, 1.0, 1.0));
        assert_eq!((c.anneal.t_init, c.anneal.cooling, c.anneal.iterations_per_step), (1.0, 0.99, 100));
        assert_eq!(c.print_volume.dims(), [200.0; 3]);
        assert_eq!((c.partition.w_data, c.partition.w_smoothness, c.partition.w_saliency), (1.0, 10.0, 5.0));
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = PipelineConfig::from_toml("seed = 7\n[zone]\nd_min = 12.0\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.zone.d_min, 12.0);
        assert_eq!(c.zone.d_max, 47.3);
        assert_eq!(c.anneal_params().seed, 7);
        assert_eq!(c.tau_params().seed, 7);
    }

    #[test]
    fn bad_config_is_an_input_error() {
        for text in ["b0_mm = -1.0", "unknown_key = 1", "[anneal]\ncooling = 1.5", "schema_version = 9", "[zone]\nd_min = 50.0"] {
            let e = PipelineConfig::from_toml(text).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{text}: {e}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::Input(String::new()).exit_code(), 2);
        assert_eq!(PipelineError::Optimize(String::new()).exit_code(), 3);
        assert_eq!(PipelineError::Partition(String::new()).exit_code(), 4);
        assert_eq!(PipelineError::Fabricate(String::new()).exit_code(), 5);
    }

    #[test]
    fn input_hash_separates_parts() {
        assert_ne!(input_hash(&[("a", "bc".into())]), input_hash(&[("ab", "c".into())]));
        assert_eq!(input_hash(&[("a", "b".into())]), input_hash(&[("a", "b".into())]));
    }
}
