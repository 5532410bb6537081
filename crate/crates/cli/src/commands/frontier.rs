//! Compute the information-theoretic frontier (annealed self-consistent
//! updates) or the well-formedness frontier (partition local search) over a
//! chart and write it as a table.

use clap::{Args, ValueEnum};
use ndarray::Array1;
use serde::Serialize;

use colorsig::color::{meaning_distribution, perceptual_similarity};
use colorsig::frontier::{cc_frontier, ib_frontier, log_schedule, IbConfig};
use colorsig::Result;

use crate::manifest::ManifestBuilder;
use crate::output::write_table;
use crate::Cli;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    /// Complexity/accuracy frontier via annealed encoder updates.
    Ib,
    /// Well-formedness frontier via partition local search.
    Cc,
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    /// Which frontier to compute.
    #[arg(value_enum)]
    kind: Kind,

    /// Chart file (id, grid row/col, CIELAB per line).
    #[arg(long)]
    chart: std::path::PathBuf,

    /// Chart file layout.
    #[arg(long, default_value = "simple")]
    layout: String,

    /// Smallest inverse temperature in the annealing schedule.
    #[arg(long, default_value_t = 1.0)]
    beta_min: f64,

    /// Largest inverse temperature.
    #[arg(long, default_value_t = 1024.0)]
    beta_max: f64,

    /// Number of log-spaced betas.
    #[arg(long, default_value_t = 64)]
    beta_steps: usize,

    /// Random restarts (initializations at the first beta, or hill-climb
    /// starts per term count).
    #[arg(long)]
    restarts: Option<usize>,

    /// Convergence threshold on encoder change.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Iteration cap per beta.
    #[arg(long, default_value_t = 300)]
    max_iters: usize,

    /// Smallest term count for the partition search.
    #[arg(long, default_value_t = 1)]
    k_min: usize,

    /// Largest term count for the partition search.
    #[arg(long, default_value_t = 15)]
    k_max: usize,

    /// Also write the best partitions as JSON.
    #[arg(long)]
    store_partitions: bool,
}

#[derive(Serialize)]
struct IbRow {
    beta: f64,
    complexity_nats: f64,
    accuracy_nats: f64,
}

#[derive(Serialize)]
struct CcRow {
    k: usize,
    wellformedness: f64,
}

#[derive(Serialize)]
struct PartitionRow {
    k: usize,
    wellformedness: f64,
    assignment: Vec<usize>,
}

pub fn run(cli: &Cli, args: &FrontierArgs) -> Result<()> {
    let chart = super::load_chart(&args.chart, &args.layout)?;
    let mut manifest = ManifestBuilder::new("frontier", cli.seed);
    manifest.input(&args.chart)?;

    match args.kind {
        Kind::Ib => {
            let meanings = meaning_distribution(&chart);
            let prior = Array1::from_elem(chart.len(), 1.0 / chart.len() as f64);
            let cfg = IbConfig {
                schedule: log_schedule(args.beta_min, args.beta_max, args.beta_steps),
                restarts: args.restarts.unwrap_or(5),
                tol: args.tol,
                max_iters: args.max_iters,
                seed: cli.seed,
                ..IbConfig::default()
            };
            let curve = ib_frontier(&prior, meanings.matrix(), &cfg)?;
            let rows: Vec<IbRow> = curve
                .points()
                .iter()
                .map(|p| IbRow {
                    beta: p.beta,
                    complexity_nats: p.complexity,
                    accuracy_nats: p.accuracy,
                })
                .collect();
            let path = write_table(
                &cli.out_dir,
                "ib_frontier",
                cli.format,
                &["beta", "complexity_nats", "accuracy_nats"],
                &rows,
            )?;
            manifest.output(&path);
        }
        Kind::Cc => {
            let sim = perceptual_similarity(&chart);
            let ks: Vec<usize> = (args.k_min..=args.k_max).collect();
            let front = cc_frontier(&sim, &ks, args.restarts.unwrap_or(8), cli.seed)?;
            let rows: Vec<CcRow> = front
                .points
                .iter()
                .map(|p| CcRow { k: p.k, wellformedness: p.value })
                .collect();
            let path = write_table(
                &cli.out_dir,
                "cc_frontier",
                cli.format,
                &["k", "wellformedness"],
                &rows,
            )?;
            manifest.output(&path);
            if args.store_partitions {
                let parts: Vec<PartitionRow> = front
                    .points
                    .iter()
                    .map(|p| PartitionRow {
                        k: p.k,
                        wellformedness: p.value,
                        assignment: p.partition.assignment.clone(),
                    })
                    .collect();
                let path = cli.out_dir.join("cc_partitions.json");
                std::fs::write(&path, serde_json::to_string_pretty(&parts)?)?;
                manifest.output(&path);
            }
        }
    }
    manifest.write(&cli.out_dir)?;
    Ok(())
}
