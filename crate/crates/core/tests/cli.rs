//! Drives the `zomefab` binary: exit codes, config round trip, caching.

use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use zomefab::mesh::primitives::geodesic_sphere;
use zomefab::mesh::write_obj_file;
use zomefab::pipeline::{PipelineConfig, PipelineState};

fn zomefab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zomefab"))
        .args(args)
        .env("ZOMEFAB_OUTPUT_DIR", dir.join("out"))
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

/// Small enough to keep the full pipeline quick, large enough for a lattice.
fn write_sphere(dir: &Path, radius: f64, freq: usize) -> String {
    let p = dir.join(format!("sphere_{radius}.obj"));
    write_obj_file(&geodesic_sphere(nalgebra::Vector3::zeros(), radius, freq), &p).unwrap();
    p.to_str().unwrap().to_string()
}

fn state(dir: &Path) -> PipelineState {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/state.json")).unwrap()).unwrap()
}

#[test]
fn dump_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = zomefab(tmp.path(), &["--seed", "5", "dump-config"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let dumped = String::from_utf8(o.stdout).unwrap();
    let cfg = PipelineConfig::from_toml(&dumped).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.output_dir, tmp.path().join("out"));
    let path = tmp.path().join("c.toml");
    std::fs::write(&path, &dumped).unwrap();
    let again = zomefab(tmp.path(), &["--config", path.to_str().unwrap(), "dump-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), dumped);
}

#[test]
fn input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&zomefab(tmp.path(), &["optimize", "/nonexistent/mesh.obj"])), 2);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[zone]\nd_min = \"x\"\n").unwrap();
    assert_eq!(code(&zomefab(tmp.path(), &["--config", bad.to_str().unwrap(), "dump-config"])), 2);
    let mesh = write_sphere(tmp.path(), 100.0, 4);
    let o = zomefab(tmp.path(), &["partition", &mesh]);
    assert_eq!(code(&o), 2, "missing structure: {}", text(&o));
}

#[test]
fn mesh_below_b0_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = write_sphere(tmp.path(), 10.0, 3);
    let o = zomefab(tmp.path(), &["optimize", &mesh]);
    assert_eq!(code(&o), 3, "{}", text(&o));
}

#[test]
fn stages_cache_and_invalidate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mesh = write_sphere(dir, 110.0, 6);

    let o = zomefab(dir, &["pipeline", &mesh]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    for f in ["structure.json", "energy_trace.csv", "labeling.json", "planes.json", "layout.json", "bom.csv", "report.json", "assembly_guide.txt"] {
        assert!(dir.join("out").join(f).is_file(), "{f}");
    }
    let first = state(dir);

    let t = Instant::now();
    let o = zomefab(dir, &["pipeline", &mesh]);
    assert!(t.elapsed().as_secs_f64() < 1.0, "cached rerun took {:?}", t.elapsed());
    assert_eq!(code(&o), 0);
    assert_eq!(text(&o).matches("up to date").count(), 3, "{}", text(&o));
    assert_eq!(state(dir), first);

    // a tampered artifact is regenerated
    std::fs::write(dir.join("out/bom.csv"), "junk").unwrap();
    let o = zomefab(dir, &["pipeline", &mesh]);
    assert_eq!(text(&o).matches("up to date").count(), 2, "{}", text(&o));
    assert_eq!(state(dir), first);

    // report stands alone on the stage outputs
    let o = zomefab(dir, &["report"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).starts_with("report:"));

    let o = zomefab(dir, &["--seed", "7", "pipeline", &mesh]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let reseeded = state(dir);
    for stage in ["optimize", "partition", "fabricate"] {
        assert_ne!(reseeded.stages[stage].input_hash, first.stages[stage].input_hash, "{stage}");
    }
    assert!(!text(&o).contains("up to date"), "{}", text(&o));
}

#[test]
fn fabrication_and_partition_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mesh = write_sphere(dir, 110.0, 6);
    assert_eq!(code(&zomefab(dir, &["optimize", &mesh])), 0);

    let tiny = dir.join("tiny.toml");
    std::fs::write(&tiny, "[print_volume]\nx = 1.0\ny = 1.0\nz = 1.0\n").unwrap();
    let o = zomefab(dir, &["--config", tiny.to_str().unwrap(), "partition", &mesh]);
    assert_eq!(code(&o), 4, "{}", text(&o));

    assert_eq!(code(&zomefab(dir, &["partition", &mesh])), 0);
    let small = dir.join("small.toml");
    std::fs::write(&small, "[print_volume]\nx = 20.0\ny = 20.0\nz = 20.0\n").unwrap();
    let o = zomefab(dir, &["--config", small.to_str().unwrap(), "fabricate", &mesh]);
    assert_eq!(code(&o), 5, "{}", text(&o));
    assert!(text(&o).contains("piece "), "{}", text(&o));
}
