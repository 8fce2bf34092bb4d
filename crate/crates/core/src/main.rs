use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use railzone::cli::{self, RunConfig};

#[derive(Parser)]
#[command(name = "railzone", version, about = "Rail-gauge calibrated critical zones and intrusion checks")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    class_table: Option<PathBuf>,
    /// Red, orange and yellow distances in millimetres, e.g. 600,1000,2000.
    #[arg(long, global = true, value_delimiter = ',', num_args = 3)]
    zone_distances_mm: Option<Vec<f64>>,
    #[arg(long, global = true)]
    patch_size: Option<usize>,
    #[arg(long, global = true)]
    closing_kernel: Option<usize>,
    #[arg(long, global = true)]
    min_gauge_width: Option<usize>,
    #[arg(long, global = true)]
    demotion_levels: Option<u8>,
    #[arg(long, global = true)]
    gauge_mm: Option<f64>,
    /// Do not paint track pixels red.
    #[arg(long, global = true)]
    no_track_in_red: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build zones from a mask and classify detections against them.
    Assess { mask: PathBuf, detections: PathBuf },
    /// Score predicted masks against ground truth, matched by file name.
    EvalSeg { pred_dir: PathBuf, gt_dir: PathBuf },
    /// Score detections against ground truth (mAP at IoU 0.5).
    EvalDet { pred: PathBuf, gt: PathBuf },
    /// Render a synthetic scene with ground truth.
    Synth { spec: PathBuf },
}

fn config(cli: &Cli) -> railzone::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = &cli.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = &o.class_table {
        cfg.class_table = Some(v.clone());
    }
    if let Some(v) = &o.zone_distances_mm {
        cfg.zone_distances_mm = [v[0], v[1], v[2]];
    }
    if let Some(v) = o.patch_size {
        cfg.patch_size = v;
    }
    if let Some(v) = o.closing_kernel {
        cfg.closing_kernel = v;
    }
    if let Some(v) = o.min_gauge_width {
        cfg.min_gauge_width = v;
    }
    if let Some(v) = o.demotion_levels {
        cfg.demotion_levels = v;
    }
    if let Some(v) = o.gauge_mm {
        cfg.gauge_mm = v;
    }
    if o.no_track_in_red {
        cfg.include_track_in_red = false;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> railzone::Result<i32> {
    let cfg = config(cli)?;
    let q = cli.quiet;
    match &cli.command {
        Command::Assess { mask, detections } => cli::cmd_assess(mask, detections, &cfg, q),
        Command::EvalSeg { pred_dir, gt_dir } => cli::cmd_eval_seg(pred_dir, gt_dir, &cfg, q),
        Command::EvalDet { pred, gt } => cli::cmd_eval_det(pred, gt, &cfg, q),
        Command::Synth { spec } => cli::cmd_synth(spec, &cfg, q),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
