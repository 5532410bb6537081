//! Per-language efficiency and well-formedness points: the base agent read
//! off the naming counts, plus both recursion variants applied on top of it
//! at each requested depth.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use colorsig::color::MunsellChart;
use colorsig::exec;
use colorsig::frontier::{frontier_distance, FrontierCurve};
use colorsig::game::{Depth, Endpoint, RecursionConfig, Start, StructuredGame, Variant};
use colorsig::metrics::{efficiency_point, mode_map, EfficiencyPoint};
use colorsig::recursion::run_recursion;
use colorsig::wcs::{
    chart_meanings, major_terms, naming_matrix, parse_wcs, wcs_game, NamingMatrix, WcsDataset,
};
use colorsig::{Error, Result};

use crate::grid::render_mode_map;
use crate::manifest::ManifestBuilder;
use crate::output::write_table;
use crate::svg::{Plot, Series};
use crate::Cli;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Rsa,
    Srsa,
    Both,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory with the naming survey (terms.tsv/langs.tsv, or the
    /// classic term.txt/lang.txt names).
    #[arg(long)]
    wcs_dir: PathBuf,

    /// Chart file; defaults to chart.tsv inside --wcs-dir.
    #[arg(long)]
    chart: Option<PathBuf>,

    /// Chart file layout.
    #[arg(long, default_value = "simple")]
    layout: String,

    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,

    #[arg(long, default_value_t = 5.0)]
    alpha: f64,

    /// Comma-separated recursion depths; `inf` (or `limit`) for the fixed
    /// point. The base agent row is always included.
    #[arg(long, default_value = "1,inf")]
    depths: String,

    /// Restrict to these languages (comma-separated ids or names). An empty
    /// value selects no languages.
    #[arg(long)]
    languages: Option<String>,

    /// Language name to mark in the `highlighted` column.
    #[arg(long)]
    highlight: Option<String>,

    /// Write a text-grid mode map per language and point.
    #[arg(long)]
    mode_maps: bool,

    /// Frontier CSV from `frontier ib`; adds a frontier_distance column.
    #[arg(long)]
    ib_frontier: Option<PathBuf>,

    /// Also emit an SVG scatter of all points (with the frontier polyline
    /// when --ib-frontier is given).
    #[arg(long)]
    svg: bool,
}

#[derive(Serialize)]
struct PointRow {
    language_id: u32,
    language_name: String,
    label: String,
    variant: String,
    depth: String,
    alpha: f64,
    n_terms: usize,
    complexity_nats: f64,
    accuracy_nats: f64,
    wellformedness: f64,
    highlighted: bool,
    frontier_distance: Option<f64>,
}

struct LanguageOutput {
    rows: Vec<PointRow>,
    mode_maps: Vec<(String, String)>,
}

fn parse_depths(spec: &str) -> Result<Vec<Depth>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let s = s.trim();
            if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("limit") {
                Ok(Depth::Limit)
            } else {
                s.parse::<u32>().map(Depth::Finite).map_err(|_| {
                    Error::InvalidConfig(format!("bad depth {s:?}; expected integer or inf"))
                })
            }
        })
        .collect()
}

fn depth_strings(depth: Depth) -> (String, String) {
    match depth {
        Depth::Finite(d) => (d.to_string(), d.to_string()),
        Depth::Limit => ("inf".to_string(), "inf".to_string()),
    }
}

fn survey_paths(dir: &std::path::Path) -> Result<(PathBuf, PathBuf)> {
    for (terms, langs) in [("terms.tsv", "langs.tsv"), ("term.txt", "lang.txt")] {
        let t = dir.join(terms);
        if t.exists() {
            return Ok((t, dir.join(langs)));
        }
    }
    Err(Error::FileNotFound(dir.join("terms.tsv")))
}

fn selected_languages(ds: &WcsDataset, filter: Option<&str>) -> Result<Vec<u32>> {
    match filter {
        None => Ok(ds.language_ids()),
        Some(spec) => spec
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                let s = s.trim();
                if let Ok(id) = s.parse::<u32>() {
                    return Ok(id);
                }
                ds.id_for_name(s)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown language {s:?}")))
            })
            .collect(),
    }
}

fn language_points(
    lang: u32,
    name: &str,
    major: &NamingMatrix,
    game: &StructuredGame,
    variants: &[Variant],
    depths: &[Depth],
    alpha: f64,
    curve: Option<&FrontierCurve>,
    highlighted: bool,
    want_maps: bool,
    chart: &MunsellChart,
    meanings: &ndarray::Array2<f64>,
) -> Result<LanguageOutput> {
    let mut points: Vec<(String, String, String, EfficiencyPoint)> = Vec::new();

    // the naming-count sender itself, then each recursion applied on top
    let base_cfg = RecursionConfig::new(Variant::Rsa, alpha, Depth::Finite(0))
        .with_start(Start::LiteralSender)
        .with_endpoint(Endpoint::FinalSender);
    let base = run_recursion(game, &base_cfg)?;
    points.push((
        "base".into(),
        "base".into(),
        "0".into(),
        efficiency_point("base", &base.sender, &game.prior, meanings, &game.similarity),
    ));

    for &variant in variants {
        for &depth in depths {
            let cfg = RecursionConfig::new(variant, alpha, depth)
                .with_start(Start::LiteralSender)
                .with_endpoint(Endpoint::FinalSender);
            let out = run_recursion(game, &cfg)?;
            let vname = match variant {
                Variant::Rsa => "rsa",
                Variant::Srsa => "srsa",
            };
            let (dshort, dcol) = depth_strings(depth);
            let label = format!("{vname}-{dshort}");
            points.push((
                label.clone(),
                vname.into(),
                dcol,
                efficiency_point(&label, &out.sender, &game.prior, meanings, &game.similarity),
            ));
        }
    }

    let mut rows = Vec::with_capacity(points.len());
    let mut maps = Vec::new();
    for (label, variant, depth, point) in points {
        point
            .validate()
            .map_err(|e| Error::InvalidGame(format!("language {lang}: {e}")))?;
        let distance = match curve {
            Some(curve) => Some(
                frontier_distance(&point, curve)
                    .map_err(|e| Error::InvalidGame(format!("language {lang}: {e}")))?,
            ),
            None => None,
        };
        if want_maps {
            // rebuild the sender for this label to render its partition
            let sender = if label == "base" {
                base.sender.clone()
            } else {
                let v = if variant == "rsa" { Variant::Rsa } else { Variant::Srsa };
                let d = if depth == "inf" {
                    Depth::Limit
                } else {
                    Depth::Finite(depth.parse().expect("depth column is numeric"))
                };
                let cfg = RecursionConfig::new(v, alpha, d)
                    .with_start(Start::LiteralSender)
                    .with_endpoint(Endpoint::FinalSender);
                run_recursion(game, &cfg)?.sender
            };
            let map = mode_map(&sender);
            maps.push((
                format!("modemap-{lang:03}-{label}.txt"),
                render_mode_map(chart, &map, Some(&major.terms)),
            ));
        }
        rows.push(PointRow {
            language_id: lang,
            language_name: name.to_string(),
            label,
            variant,
            depth,
            alpha,
            n_terms: point.n_terms,
            complexity_nats: point.complexity,
            accuracy_nats: point.accuracy,
            wellformedness: point.wellformedness,
            highlighted,
            frontier_distance: distance,
        });
    }
    Ok(LanguageOutput { rows, mode_maps: maps })
}

pub fn run(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let (term_path, lang_path) = survey_paths(&args.wcs_dir)?;
    let chart_path = args
        .chart
        .clone()
        .unwrap_or_else(|| args.wcs_dir.join("chart.tsv"));
    let chart = super::load_chart(&chart_path, &args.layout)?;

    let mut manifest = ManifestBuilder::new("analyze-wcs", cli.seed);
    manifest.input(&term_path)?;
    manifest.input(&lang_path)?;
    manifest.input(&chart_path)?;

    let (dataset, report) = parse_wcs(&term_path, Some(&lang_path), chart.len(), false)?;
    if !report.malformed.is_empty() {
        eprintln!("skipped {} malformed survey lines", report.malformed.len());
    }

    let depths = parse_depths(&args.depths)?;
    let variants: Vec<Variant> = match args.variant {
        VariantArg::Rsa => vec![Variant::Rsa],
        VariantArg::Srsa => vec![Variant::Srsa],
        VariantArg::Both => vec![Variant::Rsa, Variant::Srsa],
    };
    let curve = match &args.ib_frontier {
        Some(path) => {
            manifest.input(path)?;
            Some(super::read_frontier_csv(path)?)
        }
        None => None,
    };

    let languages = selected_languages(&dataset, args.languages.as_deref())?;
    let meanings = chart_meanings(&chart);
    let outputs: Vec<Result<LanguageOutput>> = exec::map_slice(&languages, |&lang| {
        let name = dataset.language_name(lang);
        let nm = naming_matrix(&dataset, lang)?;
        let major = major_terms(&nm)?;
        let game = wcs_game(&major, &chart)?;
        language_points(
            lang,
            &name,
            &major,
            &game,
            &variants,
            &depths,
            args.alpha,
            curve.as_ref(),
            args.highlight.as_deref() == Some(name.as_str()),
            args.mode_maps,
            &chart,
            &meanings,
        )
    });

    let mut rows = Vec::new();
    let mut maps = Vec::new();
    for out in outputs {
        let out = out?;
        rows.extend(out.rows);
        maps.extend(out.mode_maps);
    }

    let table = write_table(
        &cli.out_dir,
        "points",
        cli.format,
        &[
            "language_id",
            "language_name",
            "label",
            "variant",
            "depth",
            "alpha",
            "n_terms",
            "complexity_nats",
            "accuracy_nats",
            "wellformedness",
            "highlighted",
            "frontier_distance",
        ],
        &rows,
    )?;
    manifest.output(&table);
    for (file, text) in maps {
        let path = cli.out_dir.join(file);
        std::fs::write(&path, text)?;
        manifest.output(&path);
    }

    if args.svg {
        let path = cli.out_dir.join("points.svg");
        std::fs::write(&path, render_svg(&rows, curve.as_ref()))?;
        manifest.output(&path);
    }
    manifest.write(&cli.out_dir)?;
    eprintln!("wrote {} point rows for {} languages", rows.len(), languages.len());
    Ok(())
}

fn render_svg(rows: &[PointRow], curve: Option<&FrontierCurve>) -> String {
    let mut lines = Vec::new();
    if let Some(curve) = curve {
        lines.push(Series {
            label: "frontier",
            color: "#444444",
            points: curve.points().iter().map(|p| (p.complexity, p.accuracy)).collect(),
        });
    }
    let families = [
        ("base", "#7f7f7f"),
        ("rsa", "#d62728"),
        ("srsa", "#1f77b4"),
    ];
    let scatter = families
        .iter()
        .map(|&(family, color)| Series {
            label: family,
            color,
            points: rows
                .iter()
                .filter(|r| r.variant == family)
                .map(|r| (r.complexity_nats, r.accuracy_nats))
                .collect(),
        })
        .collect();
    Plot {
        title: "language points vs frontier",
        x_label: "complexity (nats)",
        y_label: "accuracy (nats)",
        lines,
        scatter,
    }
    .render()
}
