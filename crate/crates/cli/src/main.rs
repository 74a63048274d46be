use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perception_entropy::config::{RunConfig, Scenario};
use perception_entropy::entropy::{fit_ap_curve, read_ap_samples};
use perception_entropy::evaluator::{evaluate_with, export_heatmap, EvaluateOptions};
use perception_entropy::optimizer::optimize;
use perception_entropy::Error;

#[derive(Parser)]
#[command(name = "pentropy", version, about = "Perception entropy of LiDAR and camera placements")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one configuration.
    Evaluate {
        #[command(flatten)]
        input: Input,
        /// Report JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write an `x,y,entropy` CSV.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Search sensor placements inside their mount regions.
    Optimize {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Best configuration, in the input's JSON format.
        #[arg(long)]
        out: PathBuf,
        /// Per-round JSON lines (default: next to --out with a `.trace.jsonl` suffix).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        samples_per_round: Option<usize>,
        #[arg(long)]
        decay: Option<f64>,
        #[arg(long)]
        n_init_trans: Option<f64>,
        #[arg(long)]
        n_init_rot_deg: Option<f64>,
        #[arg(long)]
        n_final_trans: Option<f64>,
        #[arg(long)]
        n_final_rot_deg: Option<f64>,
    },
    /// Fit an AP curve to `m_norm,ap` samples.
    FitCurve {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the per-column entropy map of a configuration.
    ExportHeatmap {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's sampling interval, meters.
    #[arg(long)]
    interval: Option<f64>,
}

impl Input {
    fn load(&self) -> Result<(RunConfig, Scenario), Error> {
        let mut rc = RunConfig::load(&self.config)?;
        if let Some(h) = self.interval {
            rc.sampling_interval_m = h;
        }
        let base = self.config.parent().unwrap_or(Path::new("."));
        let scenario = rc.scenario(base)?;
        Ok((rc, scenario))
    }
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Evaluate { input, out, heatmap } => {
            let (_, s) = input.load()?;
            let options = EvaluateOptions {
                retain_voxels: heatmap.is_some(),
            };
            let report = evaluate_with(&s.configuration, &s.prior, &s.space, options)?;
            let mut json = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
            json.push('\n');
            write(&out, &json)?;
            if let Some(path) = heatmap {
                export_heatmap(&report, &path)?;
            }
            println!("total entropy: {:.6}", report.total_entropy);
        }
        Command::Optimize {
            input,
            seed,
            out,
            trace,
            samples_per_round,
            decay,
            n_init_trans,
            n_init_rot_deg,
            n_final_trans,
            n_final_rot_deg,
        } => {
            let mut rc = RunConfig::load(&input.config)?;
            if let Some(h) = input.interval {
                rc.sampling_interval_m = h;
            }
            let o = &mut rc.optimizer;
            o.samples_per_round = samples_per_round.unwrap_or(o.samples_per_round);
            o.decay = decay.unwrap_or(o.decay);
            o.n_init_trans_m = n_init_trans.unwrap_or(o.n_init_trans_m);
            o.n_init_rot_deg = n_init_rot_deg.unwrap_or(o.n_init_rot_deg);
            o.n_final_trans_m = n_final_trans.unwrap_or(o.n_final_trans_m);
            o.n_final_rot_deg = n_final_rot_deg.unwrap_or(o.n_final_rot_deg);
            let base = input.config.parent().unwrap_or(Path::new("."));
            let s = rc.scenario(base)?;
            let (best, history) = optimize(&s.configuration, &s.search, &s.schedule, &s.prior, &s.space, seed)?;
            write(&out, &rc.with_poses_from(&best).to_json_string())?;
            let trace = trace.unwrap_or_else(|| {
                let mut name = out.file_stem().unwrap_or_default().to_os_string();
                name.push(".trace.jsonl");
                out.with_file_name(name)
            });
            write(&trace, &history.to_json_lines())?;
            let final_entropy = history.rounds.last().map_or(history.initial_entropy, |r| r.best_entropy);
            println!("initial entropy: {:.6}", history.initial_entropy);
            println!("final entropy: {:.6}", final_entropy);
        }
        Command::FitCurve { samples, out } => {
            let samples = read_ap_samples(&samples)?;
            let curve = fit_ap_curve(&samples)?;
            let mut json = serde_json::to_string_pretty(&curve).expect("curve serializes");
            json.push('\n');
            write(&out, &json)?;
            println!("a = {:.6}, b = {:.6}", curve.a, curve.b);
        }
        Command::ExportHeatmap { input, out } => {
            let (_, s) = input.load()?;
            let options = EvaluateOptions { retain_voxels: true };
            let report = evaluate_with(&s.configuration, &s.prior, &s.space, options)?;
            export_heatmap(&report, &out)?;
            println!("total entropy: {:.6}", report.total_entropy);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
