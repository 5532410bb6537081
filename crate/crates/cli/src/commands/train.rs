//! Train signaling agents across seeds and variants, then place each run's
//! agent and its raw meaning function on the efficiency plane.

use clap::{Args, ValueEnum};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use colorsig::color::MunsellChart;
use colorsig::exec;
use colorsig::frontier::{frontier_distance, FrontierCurve};
use colorsig::rl::{evaluate, train, EvalInputs, TrainConfig, TrainEnv, TrainVariant};
use colorsig::synth::synthetic_chart;
use colorsig::{Error, Result};

use crate::manifest::ManifestBuilder;
use crate::output::write_table;
use crate::Cli;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Rsa,
    Srsa,
    RlBaseline,
    All,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::All)]
    variant: VariantArg,

    /// Recursion depth for the pragmatic variants.
    #[arg(long, default_value_t = 2)]
    depth: u32,

    /// Number of seeds; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 10)]
    seeds: u64,

    #[arg(long, default_value_t = 10_000)]
    updates: usize,

    #[arg(long, default_value_t = 100)]
    batch: usize,

    #[arg(long, default_value_t = 100)]
    vocab: usize,

    #[arg(long, default_value_t = 0.001)]
    lr: f64,

    #[arg(long, default_value_t = 5.0)]
    alpha: f64,

    #[arg(long, default_value_t = 5)]
    context_size: usize,

    /// Hidden layer width.
    #[arg(long, default_value_t = 25)]
    hidden: usize,

    /// Chart file for contexts and evaluation; defaults to the built-in
    /// synthetic chart.
    #[arg(long)]
    chart: Option<std::path::PathBuf>,

    /// Chart file layout.
    #[arg(long, default_value = "simple")]
    layout: String,

    /// Frontier CSV from `frontier ib`; adds frontier_distance columns.
    #[arg(long)]
    ib_frontier: Option<std::path::PathBuf>,
}

#[derive(Serialize)]
struct LogRow {
    update_idx: usize,
    mean_reward: f64,
    seed: u64,
    variant: String,
    depth: u32,
}

#[derive(Serialize)]
struct EvalRow {
    variant: String,
    depth: u32,
    seed: u64,
    point: String,
    n_terms: usize,
    complexity_nats: f64,
    accuracy_nats: f64,
    wellformedness: f64,
    final_reward: f64,
    nonfinite_events: usize,
    frontier_distance: Option<f64>,
}

#[derive(Serialize)]
struct SummaryRow {
    variant: String,
    depth: u32,
    seeds: usize,
    mean_final_reward: f64,
    ci95_final_reward: Option<f64>,
    mean_agent_complexity: f64,
    ci95_agent_complexity: Option<f64>,
    mean_agent_accuracy: f64,
    ci95_agent_accuracy: Option<f64>,
    mean_meaning_complexity: f64,
    ci95_meaning_complexity: Option<f64>,
    mean_meaning_accuracy: f64,
    ci95_meaning_accuracy: Option<f64>,
    mean_frontier_distance: Option<f64>,
    ci95_frontier_distance: Option<f64>,
}

/// Sample mean and 95% confidence half-width (t-distribution over seeds).
fn mean_ci(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution for n >= 2")
        .inverse_cdf(0.975);
    (mean, Some(t * (var / n as f64).sqrt()))
}

/// Mean reward over the last tenth of updates (at least one).
fn final_reward(log: &[colorsig::rl::UpdateLog]) -> f64 {
    let tail = (log.len() / 10).max(1).min(log.len());
    log[log.len() - tail..].iter().map(|u| u.mean_reward).sum::<f64>() / tail as f64
}

struct SeedOutcome {
    cfg: TrainConfig,
    log_rows: Vec<LogRow>,
    checkpoints: [(String, String); 2],
    eval_rows: Vec<EvalRow>,
}

fn run_seed(
    env: &TrainEnv,
    inputs: &EvalInputs,
    cfg: &TrainConfig,
    curve: Option<&FrontierCurve>,
) -> Result<SeedOutcome> {
    let result = train(env, cfg)?;
    let variant = cfg.variant.to_string();
    let log_rows = result
        .log
        .iter()
        .map(|u| LogRow {
            update_idx: u.update_idx,
            mean_reward: u.mean_reward,
            seed: cfg.seed,
            variant: variant.clone(),
            depth: cfg.depth,
        })
        .collect();
    let reward = final_reward(&result.log);
    let label = format!("{variant}-d{}-s{}", cfg.depth, cfg.seed);
    let (agent_point, meaning_point) = evaluate(&result.agent_a, cfg, inputs, &label)?;
    let mut eval_rows = Vec::new();
    for (kind, point) in [("agent", agent_point), ("meaning-fn", meaning_point)] {
        let distance = match curve {
            Some(curve) => Some(frontier_distance(&point, curve)?),
            None => None,
        };
        eval_rows.push(EvalRow {
            variant: variant.clone(),
            depth: cfg.depth,
            seed: cfg.seed,
            point: kind.to_string(),
            n_terms: point.n_terms,
            complexity_nats: point.complexity,
            accuracy_nats: point.accuracy,
            wellformedness: point.wellformedness,
            final_reward: reward,
            nonfinite_events: result.nonfinite_events,
            frontier_distance: distance,
        });
    }
    Ok(SeedOutcome {
        cfg: cfg.clone(),
        log_rows,
        checkpoints: [
            (
                format!("checkpoint-{variant}-s{}-agent-a.json", cfg.seed),
                result.agent_a.to_json(),
            ),
            (
                format!("checkpoint-{variant}-s{}-agent-b.json", cfg.seed),
                result.agent_b.to_json(),
            ),
        ],
        eval_rows,
    })
}

pub fn run(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("train", cli.seed);
    let chart: MunsellChart = match &args.chart {
        Some(path) => {
            manifest.input(path)?;
            super::load_chart(path, &args.layout)?
        }
        None => synthetic_chart(),
    };
    let curve = match &args.ib_frontier {
        Some(path) => {
            manifest.input(path)?;
            Some(super::read_frontier_csv(path)?)
        }
        None => None,
    };

    let variants: Vec<TrainVariant> = match args.variant {
        VariantArg::Rsa => vec![TrainVariant::Rsa],
        VariantArg::Srsa => vec![TrainVariant::Srsa],
        VariantArg::RlBaseline => vec![TrainVariant::RlBaseline],
        VariantArg::All => vec![TrainVariant::Rsa, TrainVariant::Srsa, TrainVariant::RlBaseline],
    };

    let mut configs = Vec::new();
    for &variant in &variants {
        for s in 0..args.seeds {
            let mut cfg = TrainConfig::new(variant, args.depth, cli.seed + s);
            cfg.alpha = args.alpha;
            cfg.context_size = args.context_size;
            cfg.lr = args.lr;
            cfg.updates = args.updates;
            cfg.batch = args.batch;
            cfg.vocab = args.vocab;
            cfg.hidden = args.hidden;
            cfg.validate()?;
            configs.push(cfg);
        }
    }

    let env = TrainEnv::from_chart(&chart);
    let inputs = EvalInputs::from_chart(&chart);
    let outcomes: Vec<Result<SeedOutcome>> =
        exec::map_slice(&configs, |cfg| run_seed(&env, &inputs, cfg, curve.as_ref()));

    let mut completed: Vec<SeedOutcome> = Vec::new();
    let mut failures = 0usize;
    for (cfg, outcome) in configs.iter().zip(outcomes) {
        match outcome {
            Ok(o) => completed.push(o),
            Err(e) => {
                failures += 1;
                eprintln!("seed {} ({}) failed: {e}", cfg.seed, cfg.variant);
            }
        }
    }
    if completed.is_empty() {
        return Err(Error::InvalidConfig("all training runs failed".into()));
    }

    std::fs::create_dir_all(&cli.out_dir)?;
    let mut eval_rows = Vec::new();
    for outcome in &completed {
        let stem = format!(
            "train_log-{}-s{}",
            outcome.cfg.variant, outcome.cfg.seed
        );
        let path = write_table(
            &cli.out_dir,
            &stem,
            cli.format,
            &["update_idx", "mean_reward", "seed", "variant", "depth"],
            &outcome.log_rows,
        )?;
        manifest.output(&path);
        for (name, json) in &outcome.checkpoints {
            let path = cli.out_dir.join(name);
            std::fs::write(&path, json)?;
            manifest.output(&path);
        }
        eval_rows.extend(outcome.eval_rows.iter().map(|r| EvalRow {
            variant: r.variant.clone(),
            depth: r.depth,
            seed: r.seed,
            point: r.point.clone(),
            n_terms: r.n_terms,
            complexity_nats: r.complexity_nats,
            accuracy_nats: r.accuracy_nats,
            wellformedness: r.wellformedness,
            final_reward: r.final_reward,
            nonfinite_events: r.nonfinite_events,
            frontier_distance: r.frontier_distance,
        }));
    }
    let path = write_table(
        &cli.out_dir,
        "eval",
        cli.format,
        &[
            "variant",
            "depth",
            "seed",
            "point",
            "n_terms",
            "complexity_nats",
            "accuracy_nats",
            "wellformedness",
            "final_reward",
            "nonfinite_events",
            "frontier_distance",
        ],
        &eval_rows,
    )?;
    manifest.output(&path);

    let mut summary = Vec::new();
    for &variant in &variants {
        let name = variant.to_string();
        let of_kind = |kind: &str, f: &dyn Fn(&EvalRow) -> Option<f64>| -> Vec<f64> {
            eval_rows
                .iter()
                .filter(|r| r.variant == name && r.point == kind)
                .filter_map(f)
                .collect()
        };
        let rewards = of_kind("agent", &|r| Some(r.final_reward));
        if rewards.is_empty() {
            continue;
        }
        let agent_c = of_kind("agent", &|r| Some(r.complexity_nats));
        let agent_a = of_kind("agent", &|r| Some(r.accuracy_nats));
        let mean_c = of_kind("meaning-fn", &|r| Some(r.complexity_nats));
        let mean_a = of_kind("meaning-fn", &|r| Some(r.accuracy_nats));
        let dists = of_kind("agent", &|r| r.frontier_distance);
        let (mr, cr) = mean_ci(&rewards);
        let (mac, cac) = mean_ci(&agent_c);
        let (maa, caa) = mean_ci(&agent_a);
        let (mmc, cmc) = mean_ci(&mean_c);
        let (mma, cma) = mean_ci(&mean_a);
        let (md, cd) = if dists.is_empty() {
            (None, None)
        } else {
            let (m, c) = mean_ci(&dists);
            (Some(m), c)
        };
        summary.push(SummaryRow {
            variant: name,
            depth: args.depth,
            seeds: rewards.len(),
            mean_final_reward: mr,
            ci95_final_reward: cr,
            mean_agent_complexity: mac,
            ci95_agent_complexity: cac,
            mean_agent_accuracy: maa,
            ci95_agent_accuracy: caa,
            mean_meaning_complexity: mmc,
            ci95_meaning_complexity: cmc,
            mean_meaning_accuracy: mma,
            ci95_meaning_accuracy: cma,
            mean_frontier_distance: md,
            ci95_frontier_distance: cd,
        });
    }
    let path = write_table(
        &cli.out_dir,
        "summary",
        cli.format,
        &[
            "variant",
            "depth",
            "seeds",
            "mean_final_reward",
            "ci95_final_reward",
            "mean_agent_complexity",
            "ci95_agent_complexity",
            "mean_agent_accuracy",
            "ci95_agent_accuracy",
            "mean_meaning_complexity",
            "ci95_meaning_complexity",
            "mean_meaning_accuracy",
            "ci95_meaning_accuracy",
            "mean_frontier_distance",
            "ci95_frontier_distance",
        ],
        &summary,
    )?;
    manifest.output(&path);
    manifest.write(&cli.out_dir)?;
    if failures > 0 {
        eprintln!("{failures} run(s) failed; summary covers the rest");
    }
    Ok(())
}
