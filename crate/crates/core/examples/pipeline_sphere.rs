//! Full pipeline on the 150 mm sphere, run twice: the second run is all
//! cache hits and every artifact hash is unchanged.
//!
//! Usage: pipeline_sphere [OUTPUT_DIR]

use std::path::PathBuf;
use std::time::Instant;

use zomefab::mesh::primitives::sphere_fixture;
use zomefab::mesh::write_obj_file;
use zomefab::pipeline::{cmd_pipeline, PipelineConfig, Workspace};

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("zomefab-sphere"));
    std::fs::create_dir_all(&dir).unwrap();
    let mesh_path = dir.join("sphere.obj");
    write_obj_file(&sphere_fixture(), &mesh_path).unwrap();
    let cfg = PipelineConfig { output_dir: dir.join("out"), ..PipelineConfig::default() };

    let mut hashes = Vec::new();
    for run in 1..=2 {
        let t = Instant::now();
        let mut ws = Workspace::open(&cfg.output_dir).unwrap();
        match cmd_pipeline(&cfg, &mesh_path, &mut ws) {
            Ok(stages) => {
                for s in stages {
                    println!("  {}{}", s.summary, if s.cached { " (cached)" } else { "" });
                }
            }
            Err(e) => {
                eprintln!("{e}");
                std::process::exit(e.exit_code());
            }
        }
        println!("run {run}: {:.2} s", t.elapsed().as_secs_f64());
        hashes.push(ws.artifact_hashes().unwrap());
    }
    println!("{} artifacts in {}", hashes[0].len(), cfg.output_dir.display());
    println!("identical hashes: {}", hashes[0] == hashes[1]);
}
