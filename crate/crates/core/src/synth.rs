//! Deterministic synthetic data: a standard 330-chip chart, a six-color
//! reference game with one perceptual cluster, and a naming survey in the
//! tab-separated format `parse_wcs` reads.
//!
//! The survey has smooth focal-category languages plus one engineered
//! outlier ("Karaja") whose terms interleave across the chart, giving a
//! high-complexity, low-accuracy naming system.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::{ColorChip, MunsellChart};
use crate::error::Result;
use crate::game::StructuredGame;

/// Name given to the interleaved outlier language.
pub const OUTLIER_NAME: &str = "Karaja";

/// Lightness per grid row A (lightest) through J (darkest).
const ROW_L: [f64; 10] = [96.0, 91.0, 81.0, 71.0, 61.0, 51.0, 41.0, 31.0, 21.0, 15.0];
/// Chroma per chromatic row B through I.
const ROW_CHROMA: [f64; 8] = [28.0, 38.0, 46.0, 50.0, 50.0, 44.0, 36.0, 26.0];

/// A 330-chip chart shaped like the standard naming grid: ten achromatic
/// chips in column 0 (rows A-J) and eight chromatic rows (B-I) spanning 40
/// hue columns, laid out on a smooth CIELAB cylinder.
pub fn synthetic_chart() -> MunsellChart {
    let mut chips = Vec::with_capacity(330);
    let mut id = 0u32;
    for (r, &l) in ROW_L.iter().enumerate() {
        let row = (b'A' + r as u8) as char;
        id += 1;
        chips.push(ColorChip {
            id,
            grid_row: row,
            grid_col: 0,
            lab: [l, 0.0, 0.0],
        });
        if (1..=8).contains(&r) {
            let chroma = ROW_CHROMA[r - 1];
            for col in 1..=40u32 {
                let theta = 2.0 * std::f64::consts::PI * (col - 1) as f64 / 40.0;
                id += 1;
                chips.push(ColorChip {
                    id,
                    grid_row: row,
                    grid_col: col,
                    lab: [l, chroma * theta.cos(), chroma * theta.sin()],
                });
            }
        }
    }
    MunsellChart::new(chips).expect("synthetic chart is valid")
}

/// Six colors, four words: distinct words dominate red, yellow and a
/// green-or-blue term; the three blues leave the blue-covering word split
/// with a darkness term. The three blues are mutually similar while green
/// is far from all of them, so similarity-aware reasoning regroups the
/// blues under one word while plain reasoning keeps light blue glued to
/// green's dominant word.
pub fn culina_style_game() -> StructuredGame {
    let labs: [[f64; 3]; 6] = [
        [52.0, 58.0, 40.0],   // red
        [85.0, 5.0, 78.0],    // yellow
        [56.0, -52.0, 40.0],  // green
        [66.0, -16.0, -30.0], // light blue
        [56.0, -10.0, -38.0], // mid blue
        [40.0, -2.0, -42.0],  // dark blue
    ];
    let meaning_fn = ndarray::array![
        [0.92, 0.02, 0.04, 0.02],
        [0.02, 0.92, 0.04, 0.02],
        [0.03, 0.02, 0.92, 0.03],
        [0.02, 0.02, 0.92, 0.04],
        [0.02, 0.02, 0.82, 0.14],
        [0.02, 0.02, 0.56, 0.40],
    ];
    let mut sim = Array2::ones((6, 6));
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                let d2: f64 = (0..3).map(|k| (labs[i][k] - labs[j][k]).powi(2)).sum();
                sim[(i, j)] = (-0.001 * d2).exp();
            }
        }
    }
    StructuredGame::new(
        (1..=6).collect(),
        meaning_fn,
        sim,
        Array1::from_elem(6, 1.0 / 6.0),
    )
    .expect("fixture is a valid game")
}

/// Survey shape: how many languages, speakers per language, which language
/// id carries the interleaved outlier, and the generator seed.
#[derive(Debug, Clone)]
pub struct SurveyConfig {
    pub n_languages: u32,
    pub speakers: u32,
    pub outlier_id: u32,
    pub seed: u64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        SurveyConfig {
            n_languages: 110,
            speakers: 20,
            outlier_id: 55,
            seed: 7,
        }
    }
}

/// Per-chip term distribution of one language.
fn language_term_probs(
    chart: &MunsellChart,
    lang: u32,
    cfg: &SurveyConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    let n = chart.len();
    let chips = chart.chips();
    if lang == cfg.outlier_id {
        // interleaved categories: neighboring chips cycle through the term
        // inventory, so words never cover contiguous regions
        let k = 7usize;
        let lapse = 0.12;
        return chips
            .iter()
            .map(|chip| {
                let r = (chip.grid_row as u8 - b'A') as usize;
                let t = (3 * r + 2 * chip.grid_col as usize) % k;
                let mut p = vec![lapse / k as f64; k];
                p[t] += 1.0 - lapse;
                p
            })
            .collect();
    }
    let k = rng.random_range(3..=10usize);
    // roughly half the extra focals land next to an existing one, yielding
    // near-synonymous terms: structurally wasteful inventories that single
    // reasoning steps sharpen but only iterated reasoning consolidates
    let mut flat: Vec<usize> = vec![rng.random_range(0..n)];
    while flat.len() < k {
        if rng.random::<f64>() < 0.45 {
            let f = flat[rng.random_range(0..flat.len())];
            let near: Vec<usize> = (0..n)
                .filter(|&c| !flat.contains(&c) && chips[c].sq_dist(&chips[f]) < 700.0)
                .collect();
            if !near.is_empty() {
                flat.push(near[rng.random_range(0..near.len())]);
                continue;
            }
        }
        let c = rng.random_range(0..n);
        if !flat.contains(&c) {
            flat.push(c);
        }
    }
    let mut terms: Vec<Vec<usize>> = flat.into_iter().map(|f| vec![f]).collect();
    // every language uses one or two terms for a pair of well-separated
    // regions, as in attested non-contiguous color categories. A single
    // reasoning step keeps both patches (each is locally self-consistent),
    // costing accuracy; iterated reasoning lets concentrated neighboring
    // terms absorb the patches, since the split term spreads its listener
    // mass across both regions.
    let n_split = if rng.random::<f64>() < 0.5 { 2 } else { 1 };
    for _ in 0..n_split {
        let t = rng.random_range(0..terms.len());
        if terms[t].len() > 1 {
            continue;
        }
        let f = terms[t][0];
        let taken: Vec<usize> = terms.iter().flatten().copied().collect();
        let far: Vec<usize> = (0..n)
            .filter(|&c| !taken.contains(&c) && chips[c].sq_dist(&chips[f]) > 2000.0)
            .collect();
        if !far.is_empty() {
            let g = far[rng.random_range(0..far.len())];
            terms[t].push(g);
        }
    }
    let k = terms.len();
    let tau = rng.random_range(40.0..150.0);
    let lapse = rng.random_range(0.04..0.10);
    let probs: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut scores: Vec<f64> = terms
                .iter()
                .map(|fs| {
                    fs.iter()
                        .map(|&f| -chips[c].sq_dist(&chips[f]) / tau)
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - mx).exp();
                sum += *s;
            }
            scores
                .into_iter()
                .map(|s| (1.0 - lapse) * s / sum + lapse / k as f64)
                .collect()
        })
        .collect();
    probs
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Generate the naming survey as file contents: tab-separated term records
/// `language speaker chip term` and the `id name` language index. Each
/// language draws from its own RNG stream, so the output is independent of
/// how many other languages are generated.
pub fn survey_text(chart: &MunsellChart, cfg: &SurveyConfig) -> (String, String) {
    let mut terms = String::new();
    let mut langs = String::new();
    for lang in 1..=cfg.n_languages {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(lang as u64);
        let probs = language_term_probs(chart, lang, cfg, &mut rng);
        for speaker in 1..=cfg.speakers {
            for (c, chip_probs) in probs.iter().enumerate() {
                let t = sample_index(chip_probs, &mut rng);
                let term = (b'a' + t as u8) as char;
                let chip_id = chart.chips()[c].id;
                writeln!(terms, "{lang}\t{speaker}\t{chip_id}\t{term}").unwrap();
            }
        }
        let name = if lang == cfg.outlier_id {
            OUTLIER_NAME.to_string()
        } else {
            format!("lang-{lang:03}")
        };
        writeln!(langs, "{lang}\t{name}").unwrap();
    }
    (terms, langs)
}

/// Chart as a tab-separated file readable by the `simple` chart layout.
pub fn chart_text(chart: &MunsellChart) -> String {
    let mut out = String::from("id\trow\tcol\tL\ta\tb\n");
    for chip in chart.chips() {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}",
            chip.id, chip.grid_row, chip.grid_col, chip.lab[0], chip.lab[1], chip.lab[2]
        )
        .unwrap();
    }
    out
}

/// Write `terms.tsv`, `langs.tsv` and `chart.tsv` under `dir` and return the
/// term and language file paths.
pub fn write_survey(
    dir: &Path,
    chart: &MunsellChart,
    cfg: &SurveyConfig,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let (terms, langs) = survey_text(chart, cfg);
    let term_path = dir.join("terms.tsv");
    let lang_path = dir.join("langs.tsv");
    std::fs::write(&term_path, terms)?;
    std::fs::write(&lang_path, langs)?;
    std::fs::write(dir.join("chart.tsv"), chart_text(chart))?;
    Ok((term_path, lang_path))
}
