//! Command-line front end over the pipeline stages.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::pipeline::{cmd_fabricate, cmd_optimize, cmd_partition, cmd_pipeline, cmd_report, PipelineConfig, PipelineError, StageOutcome, Workspace, OUTPUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "zomefab", version, about = "Hybrid Zometool + 3D-printed shell fabrication")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override values from the config file.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub b0_mm: Option<f64>,
    #[arg(long, global = true)]
    pub voxel_cell_mm: Option<f64>,
    /// File of triangle ids that partition seams must not cross.
    #[arg(long, global = true)]
    pub saliency: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and anneal the inner Zometool structure.
    Optimize { mesh: PathBuf },
    /// Partition the surface among outer nodes and fit cut planes.
    Partition {
        mesh: PathBuf,
        #[arg(long)]
        structure: Option<PathBuf>,
    },
    /// Cut the shell into pieces, place tenons, write reports.
    Fabricate {
        mesh: PathBuf,
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long)]
        labeling: Option<PathBuf>,
        #[arg(long)]
        planes: Option<PathBuf>,
    },
    /// optimize, partition and fabricate, skipping stages whose inputs are unchanged.
    Pipeline { mesh: PathBuf },
    /// Bill of materials, cost, time and assembly guide for a structure.
    Report {
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Directory of piece_<label>.obj files.
        #[arg(long)]
        pieces: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    DumpConfig,
}

/// Config file, then flags on top.
pub fn effective_config(g: &GlobalArgs) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = &g.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(b) = g.b0_mm {
        cfg.b0_mm = b;
    }
    if let Some(v) = g.voxel_cell_mm {
        cfg.voxel_cell_mm = v;
    }
    if let Some(s) = &g.saliency {
        cfg.saliency_path = Some(s.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn or_default(p: &Option<PathBuf>, ws: &Workspace, name: &str) -> PathBuf {
    p.clone().unwrap_or_else(|| ws.path(name))
}

/// An explicit path, or the default one if it exists.
fn optional(p: &Option<PathBuf>, ws: &Workspace, name: &str) -> Option<PathBuf> {
    p.clone().or_else(|| Some(ws.path(name)).filter(|d| d.exists()))
}

fn execute(cli: &Cli) -> Result<Vec<StageOutcome>, PipelineError> {
    let cfg = effective_config(&cli.global)?;
    if let Command::DumpConfig = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(Vec::new());
    }
    let mut ws = Workspace::open(&cfg.output_dir)?;
    Ok(match &cli.command {
        Command::Optimize { mesh } => vec![cmd_optimize(&cfg, mesh, &mut ws)?],
        Command::Partition { mesh, structure } => {
            let s = or_default(structure, &ws, "structure.json");
            vec![cmd_partition(&cfg, mesh, &s, &mut ws)?]
        }
        Command::Fabricate { mesh, structure, labeling, planes } => {
            let s = or_default(structure, &ws, "structure.json");
            let l = or_default(labeling, &ws, "labeling.json");
            let p = or_default(planes, &ws, "planes.json");
            vec![cmd_fabricate(&cfg, mesh, &s, &l, &p, &mut ws)?]
        }
        Command::Pipeline { mesh } => cmd_pipeline(&cfg, mesh, &mut ws)?,
        Command::Report { structure, layout, pieces } => {
            let s = or_default(structure, &ws, "structure.json");
            let l = optional(layout, &ws, "layout.json");
            let d = optional(pieces, &ws, "pieces");
            vec![cmd_report(&cfg, &s, l.as_deref(), d.as_deref().map(Path::new), &mut ws)?]
        }
        Command::DumpConfig => unreachable!(),
    })
}

/// Parse `args` (program name first) and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(outcomes) => {
            for o in outcomes {
                println!("{}", o.summary);
            }
            0
        }
        Err(e) => {
            eprintln!("zomefab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("zomefab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let cli = parse(&["--seed", "9", "--b0-mm", "30", "optimize", "m.obj"]);
        let cfg = effective_config(&cli.global).unwrap();
        assert_eq!((cfg.seed, cfg.b0_mm), (9, 30.0));
        assert_eq!(cfg.zone, PipelineConfig::default().zone);
    }

    #[test]
    fn all_subcommands_parse() {
        for args in [
            vec!["optimize", "m.obj"],
            vec!["partition", "m.obj", "--structure", "s.json"],
            vec!["fabricate", "m.obj"],
            vec!["pipeline", "m.obj"],
            vec!["report"],
            vec!["dump-config"],
        ] {
            parse(&args);
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["zomefab", "optimize"]), 2);
        assert_eq!(run(["zomefab", "no-such-command"]), 2);
        assert_eq!(run(["zomefab", "--b0-mm=-3", "dump-config"]), 2);
    }
}
