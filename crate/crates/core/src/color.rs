//! The color-chip universe: CIELAB geometry, Gaussian meanings, perceptual
//! similarity, and context sampling.

use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample as index_sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MeaningId;

/// Chip count of the standard stimulus grid: 320 chromatic + 10 achromatic.
pub const STANDARD_CHART_SIZE: usize = 330;

/// Gaussian width of the meaning distributions (denominator of the exponent).
pub const MEANING_SCALE: f64 = 64.0;

/// Exponential decay rate of perceptual similarity per unit squared distance.
pub const SIMILARITY_SCALE: f64 = 0.001;

/// Meaning-distribution entries are floored here (before normalization) so
/// log-domain consumers never see an exact zero. The perturbation is ~1e-28
/// per row, far below every tolerance in use.
const MEANING_FLOOR: f64 = 1e-30;

/// One stimulus chip: grid position plus CIELAB coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorChip {
    /// 1-based chip number.
    pub id: MeaningId,
    /// Lightness row letter, A through J.
    pub grid_row: char,
    /// Hue column, 0 (achromatic) through 40.
    pub grid_col: u32,
    /// (L*, a*, b*).
    pub lab: [f64; 3],
}

impl ColorChip {
    pub fn sq_dist(&self, other: &ColorChip) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            let d = self.lab[i] - other.lab[i];
            s += d * d;
        }
        s
    }
}

/// The ordered chip universe. Chips are sorted by id and ids are unique, so
/// row/column i of every derived matrix refers to `chips[i]`.
#[derive(Debug, Clone)]
pub struct MunsellChart {
    chips: Vec<ColorChip>,
}

impl MunsellChart {
    pub fn new(mut chips: Vec<ColorChip>) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::InvalidConfig("empty chart".into()));
        }
        chips.sort_by_key(|c| c.id);
        for pair in chips.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidConfig(format!(
                    "duplicate chip id {}",
                    pair[0].id
                )));
            }
        }
        for c in &chips {
            if !c.lab.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "chip {} has non-finite lab",
                    c.id
                )));
            }
            if !('A'..='J').contains(&c.grid_row) {
                return Err(Error::InvalidConfig(format!(
                    "chip {} grid row {:?}",
                    c.id, c.grid_row
                )));
            }
            if c.grid_col > 40 {
                return Err(Error::InvalidConfig(format!(
                    "chip {} grid col {}",
                    c.id, c.grid_col
                )));
            }
        }
        Ok(MunsellChart { chips })
    }

    pub fn chips(&self) -> &[ColorChip] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// Error unless this is the standard 330-chip grid.
    pub fn require_standard(&self) -> Result<()> {
        if self.len() != STANDARD_CHART_SIZE {
            return Err(Error::InvalidConfig(format!(
                "chart has {} chips, expected {STANDARD_CHART_SIZE}",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<MeaningId> {
        self.chips.iter().map(|c| c.id).collect()
    }

    /// Index of a chip id in the sorted order.
    pub fn index_of(&self, id: MeaningId) -> Option<usize> {
        self.chips.binary_search_by_key(&id, |c| c.id).ok()
    }

    /// Parse a chart from a delimited text file per `layout`.
    pub fn from_file(path: &Path, layout: &ChartLayout) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let reader = BufReader::new(file);
        let mut chips = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if lineno == 0 && layout.has_header {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let chip = layout.parse_line(&line).map_err(|reason| Error::MalformedLine {
                path: path.to_path_buf(),
                line: lineno + 1,
                reason,
            })?;
            chips.push(chip);
        }
        MunsellChart::new(chips)
    }
}

/// Column positions of the chip fields in a delimited chart file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartLayout {
    pub id_col: usize,
    pub row_col: usize,
    pub col_col: usize,
    pub l_col: usize,
    pub a_col: usize,
    pub b_col: usize,
    pub has_header: bool,
}

impl ChartLayout {
    /// Six plain columns after a header line: id, row letter, column, L*, a*, b*.
    pub fn simple() -> Self {
        ChartLayout {
            id_col: 0,
            row_col: 1,
            col_col: 2,
            l_col: 3,
            a_col: 4,
            b_col: 5,
            has_header: true,
        }
    }

    /// The published chip-coordinate table: chip number, grid fields, Munsell
    /// notation columns, then L*, a*, b* at columns 6..8, with a header line.
    pub fn wcs() -> Self {
        ChartLayout {
            id_col: 0,
            row_col: 1,
            col_col: 2,
            l_col: 6,
            a_col: 7,
            b_col: 8,
            has_header: true,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "simple" => Ok(ChartLayout::simple()),
            "wcs" => Ok(ChartLayout::wcs()),
            other => Err(Error::InvalidConfig(format!("unknown chart layout {other}"))),
        }
    }

    fn parse_line(&self, line: &str) -> std::result::Result<ColorChip, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        let need = [
            self.id_col,
            self.row_col,
            self.col_col,
            self.l_col,
            self.a_col,
            self.b_col,
        ]
        .into_iter()
        .max()
        .unwrap();
        if fields.len() <= need {
            return Err(format!("{} fields, need at least {}", fields.len(), need + 1));
        }
        let id: MeaningId = fields[self.id_col]
            .trim()
            .parse()
            .map_err(|_| format!("bad chip id {:?}", fields[self.id_col]))?;
        let row_str = fields[self.row_col].trim();
        let grid_row = match row_str.chars().next() {
            Some(c) if row_str.len() == 1 => c,
            _ => return Err(format!("bad grid row {row_str:?}")),
        };
        let grid_col: u32 = fields[self.col_col]
            .trim()
            .parse()
            .map_err(|_| format!("bad grid column {:?}", fields[self.col_col]))?;
        let mut lab = [0.0; 3];
        for (slot, col) in lab.iter_mut().zip([self.l_col, self.a_col, self.b_col]) {
            *slot = fields[col]
                .trim()
                .parse()
                .map_err(|_| format!("bad lab value {:?}", fields[col]))?;
        }
        Ok(ColorChip {
            id,
            grid_row,
            grid_col,
            lab,
        })
    }
}

/// Row m = the Gaussian meaning of chip m as a distribution over all chips.
#[derive(Debug, Clone)]
pub struct MeaningDistributions {
    matrix: Array2<f64>,
}

impl MeaningDistributions {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }
}

/// Gaussian meanings: row m entry u proportional to `exp(-||x_m - x_u||^2 / 64)`.
pub fn meaning_distribution(chart: &MunsellChart) -> MeaningDistributions {
    let n = chart.len();
    let chips = chart.chips();
    let mut matrix = Array2::zeros((n, n));
    let rows: Vec<Vec<f64>> = crate::exec::map_indexed(n, |m| {
        let mut row = vec![0.0; n];
        let mut sum = 0.0;
        for u in 0..n {
            let v = (-chips[m].sq_dist(&chips[u]) / MEANING_SCALE)
                .exp()
                .max(MEANING_FLOOR);
            row[u] = v;
            sum += v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        row
    });
    for (m, row) in rows.into_iter().enumerate() {
        for (u, v) in row.into_iter().enumerate() {
            matrix[(m, u)] = v;
        }
    }
    MeaningDistributions { matrix }
}

/// Perceptual similarity `exp(-0.001 ||x_m - x_m'||^2)`: symmetric, unit
/// diagonal, entries in (0, 1].
pub fn perceptual_similarity(chart: &MunsellChart) -> Array2<f64> {
    let n = chart.len();
    let chips = chart.chips();
    let mut out = Array2::zeros((n, n));
    let rows: Vec<Vec<f64>> = crate::exec::map_indexed(n, |m| {
        let mut row = vec![0.0; n];
        for (u, slot) in row.iter_mut().enumerate() {
            *slot = (-SIMILARITY_SCALE * chips[m].sq_dist(&chips[u])).exp();
        }
        row
    });
    for (m, row) in rows.into_iter().enumerate() {
        for (u, v) in row.into_iter().enumerate() {
            out[(m, u)] = v;
        }
    }
    out
}

/// Draw `n` distinct chip ids uniformly without replacement.
pub fn sample_context<R: Rng + ?Sized>(
    chart: &MunsellChart,
    n: usize,
    rng: &mut R,
) -> Result<Vec<MeaningId>> {
    if n == 0 || n > chart.len() {
        return Err(Error::ContextTooLarge {
            requested: n,
            available: chart.len(),
        });
    }
    let idx = index_sample(rng, chart.len(), n);
    Ok(idx.into_iter().map(|i| chart.chips()[i].id).collect())
}

/// Draw `n` chip ids uniformly with replacement (duplicates possible).
pub fn sample_context_with_replacement<R: Rng + ?Sized>(
    chart: &MunsellChart,
    n: usize,
    rng: &mut R,
) -> Result<Vec<MeaningId>> {
    if n == 0 {
        return Err(Error::ContextTooLarge {
            requested: n,
            available: chart.len(),
        });
    }
    Ok((0..n)
        .map(|_| chart.chips()[rng.random_range(0..chart.len())].id)
        .collect())
}
