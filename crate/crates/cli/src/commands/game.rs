//! Run one structured signaling game and print the recursion's sender and
//! listener at the requested depth and at the limit.

use clap::{Args, ValueEnum};
use ndarray::{Array1, Array2};
use serde::Deserialize;

use colorsig::game::{Depth, RecursionConfig, StructuredGame, Variant};
use colorsig::recursion::{run_recursion, sim_surprisal};
use colorsig::synth::culina_style_game;
use colorsig::{Error, Result};

use crate::manifest::ManifestBuilder;
use crate::Cli;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Rsa,
    Srsa,
    Both,
}

#[derive(Debug, Args)]
pub struct GameArgs {
    /// Game description JSON: {"context": [ids], "meaning_fn": [[...]],
    /// "similarity": [[...]], "prior": [...]}. Omit to use the built-in
    /// six-color fixture.
    #[arg(long, conflicts_with = "culina")]
    game: Option<std::path::PathBuf>,

    /// Use the built-in six-color fixture (default when --game is absent).
    #[arg(long)]
    culina: bool,

    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,

    #[arg(long, default_value_t = 5.0)]
    alpha: f64,

    /// Finite recursion depth to print alongside the limit.
    #[arg(long, default_value_t = 1)]
    depth: u32,
}

#[derive(Deserialize)]
struct GameSpec {
    context: Vec<u32>,
    meaning_fn: Vec<Vec<f64>>,
    similarity: Vec<Vec<f64>>,
    prior: Vec<f64>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidGame(format!("{what} rows have uneven lengths")));
    }
    Ok(Array2::from_shape_vec((r, c), rows.concat())
        .expect("shape checked above"))
}

fn load_game(args: &GameArgs) -> Result<StructuredGame> {
    match &args.game {
        None => Ok(culina_style_game()),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let spec: GameSpec = serde_json::from_str(&text)?;
            StructuredGame::new(
                spec.context,
                matrix(&spec.meaning_fn, "meaning_fn")?,
                matrix(&spec.similarity, "similarity")?,
                Array1::from_vec(spec.prior),
            )
        }
    }
}

fn print_dist(name: &str, probs: &Array2<f64>, flagged: &[bool]) {
    println!("{name} ({} x {}):", probs.nrows(), probs.ncols());
    for (i, row) in probs.rows().into_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:7.4}")).collect();
        let flag = if flagged[i] { "  [uniform: no support]" } else { "" };
        println!("  {}{flag}", cells.join(" "));
    }
}

fn print_outcome(game: &StructuredGame, variant: Variant, alpha: f64, depth: Depth) -> Result<()> {
    let cfg = RecursionConfig::new(variant, alpha, depth);
    let out = run_recursion(game, &cfg)?;
    let when = match depth {
        Depth::Finite(d) => format!("depth {d}"),
        Depth::Limit => format!("limit ({:?} after {} steps)", out.status, out.iters),
    };
    println!("== {variant:?} alpha={alpha} {when} ==");
    print_dist("sender", &out.sender.probs, &out.sender.flagged);
    print_dist("listener", &out.listener.probs, &out.listener.flagged);
    println!("per-meaning surprisal of the map word under the similarity kernel:");
    for m in 0..game.n_meanings() {
        let row = out.sender.probs.row(m);
        let (w, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (j, &p)| if p > best.1 { (j, p) } else { best });
        println!(
            "  meaning {:>3}: word {w} surprisal {:.4}",
            game.context[m],
            sim_surprisal(&out.listener, game, m, w)
        );
    }
    println!();
    Ok(())
}

pub fn run(cli: &Cli, args: &GameArgs) -> Result<()> {
    let game = load_game(args)?;
    let mut manifest = ManifestBuilder::new("game", cli.seed);
    if let Some(path) = &args.game {
        manifest.input(path)?;
    }
    let variants: &[Variant] = match args.variant {
        VariantArg::Rsa => &[Variant::Rsa],
        VariantArg::Srsa => &[Variant::Srsa],
        VariantArg::Both => &[Variant::Rsa, Variant::Srsa],
    };
    for &variant in variants {
        print_outcome(&game, variant, args.alpha, Depth::Finite(args.depth))?;
        print_outcome(&game, variant, args.alpha, Depth::Limit)?;
    }
    manifest.write(&cli.out_dir)?;
    Ok(())
}
