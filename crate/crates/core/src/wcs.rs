//! Naming-survey ingestion: per-language term-count matrices, the major-term
//! filter, and construction of full-chart signaling games from counts.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::color::{meaning_distribution, perceptual_similarity, MunsellChart};
use crate::error::{Error, Result};
use crate::game::StructuredGame;

/// A term is major when it is the per-chip mode category for at least this
/// many chips.
pub const MAJOR_TERM_MIN_CHIPS: usize = 10;

/// One naming response: a speaker of a language named a chip with a term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamingRecord {
    pub language_id: u32,
    pub speaker_id: String,
    /// 1-based chip number.
    pub chip_id: u32,
    pub term: String,
}

/// Lines that failed to parse, kept for reporting instead of silent drops.
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub malformed: Vec<(usize, String)>,
    pub n_records: usize,
}

/// A parsed naming survey: records plus optional language names.
#[derive(Debug, Clone)]
pub struct WcsDataset {
    pub languages: BTreeMap<u32, String>,
    pub naming: Vec<NamingRecord>,
    /// Width of every naming matrix (chip ids are validated against this).
    pub n_chips: usize,
}

impl WcsDataset {
    /// Language ids present in the naming records, ascending.
    pub fn language_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.naming.iter().map(|r| r.language_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn language_name(&self, id: u32) -> String {
        self.languages
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("lang-{id}"))
    }

    pub fn id_for_name(&self, name: &str) -> Option<u32> {
        self.languages
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(&id, _)| id)
    }
}

/// Parse survey files. `term_file` holds tab-separated records
/// `language, speaker, chip, term`; `lang_file` optionally maps language ids
/// to names (first two tab-separated columns). In strict mode the first
/// malformed line is an error; otherwise malformed lines land in the report.
pub fn parse_wcs(
    term_file: &Path,
    lang_file: Option<&Path>,
    n_chips: usize,
    strict: bool,
) -> Result<(WcsDataset, ParseReport)> {
    let mut report = ParseReport::default();
    let mut naming = Vec::new();
    let reader = BufReader::new(open(term_file)?);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_term_line(&line, n_chips) {
            Ok(rec) => {
                naming.push(rec);
                report.n_records += 1;
            }
            Err(reason) => {
                if strict {
                    return Err(Error::MalformedLine {
                        path: term_file.to_path_buf(),
                        line: lineno + 1,
                        reason,
                    });
                }
                report.malformed.push((lineno + 1, reason));
            }
        }
    }

    let mut languages = BTreeMap::new();
    if let Some(path) = lang_file {
        let reader = BufReader::new(open(path)?);
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields.next().and_then(|f| f.trim().parse::<u32>().ok());
            let name = fields.next().map(|f| f.trim().to_string());
            match (id, name) {
                (Some(id), Some(name)) if !name.is_empty() => {
                    languages.insert(id, name);
                }
                _ => {
                    if strict {
                        return Err(Error::MalformedLine {
                            path: path.to_path_buf(),
                            line: lineno + 1,
                            reason: "expected `id<TAB>name`".into(),
                        });
                    }
                    report.malformed.push((lineno + 1, "bad language line".into()));
                }
            }
        }
    }

    Ok((
        WcsDataset {
            languages,
            naming,
            n_chips,
        },
        report,
    ))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_term_line(line: &str, n_chips: usize) -> std::result::Result<NamingRecord, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 4 {
        return Err(format!("{} fields, need 4", fields.len()));
    }
    let language_id: u32 = fields[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad language id {:?}", fields[0]))?;
    let chip_id: u32 = fields[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad chip id {:?}", fields[2]))?;
    if chip_id == 0 || chip_id as usize > n_chips {
        return Err(format!("chip id {chip_id} outside [1, {n_chips}]"));
    }
    let term = fields[3].trim();
    if term.is_empty() {
        return Err("empty term".into());
    }
    Ok(NamingRecord {
        language_id,
        speaker_id: fields[1].trim().to_string(),
        chip_id,
        term: term.to_string(),
    })
}

/// Per-language term counts: `counts[(w, m)]` = responses naming chip m with
/// term w. Terms are sorted lexicographically so row order is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamingMatrix {
    pub language_id: u32,
    pub terms: Vec<String>,
    #[serde(
        serialize_with = "serialize_counts",
        deserialize_with = "deserialize_counts"
    )]
    pub counts: Array2<u32>,
}

fn serialize_counts<S: serde::Serializer>(a: &Array2<u32>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<u32>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
    rows.serialize(s)
}

fn deserialize_counts<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Array2<u32>, D::Error> {
    let rows: Vec<Vec<u32>> = Vec::deserialize(d)?;
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(serde::de::Error::custom("ragged counts matrix"));
    }
    let flat: Vec<u32> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat).map_err(serde::de::Error::custom)
}

impl NamingMatrix {
    pub fn n_terms(&self) -> usize {
        self.counts.nrows()
    }

    pub fn n_chips(&self) -> usize {
        self.counts.ncols()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Per-chip modal term index, or None for chips with no responses. Ties
    /// break toward the term with more total uses, then the lower index.
    pub fn chip_modes(&self) -> Vec<Option<usize>> {
        let totals: Vec<u64> = (0..self.n_terms())
            .map(|w| self.counts.row(w).iter().map(|&c| c as u64).sum())
            .collect();
        (0..self.n_chips())
            .map(|m| {
                let mut best: Option<usize> = None;
                for w in 0..self.n_terms() {
                    let c = self.counts[(w, m)];
                    if c == 0 {
                        continue;
                    }
                    best = match best {
                        None => Some(w),
                        Some(b) => {
                            let cb = self.counts[(b, m)];
                            if c > cb || (c == cb && totals[w] > totals[b]) {
                                Some(w)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
                best
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("naming matrix serialization")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Count a language's responses into a `NamingMatrix`.
pub fn naming_matrix(ds: &WcsDataset, language_id: u32) -> Result<NamingMatrix> {
    let records: Vec<&NamingRecord> = ds
        .naming
        .iter()
        .filter(|r| r.language_id == language_id)
        .collect();
    if records.is_empty() {
        return Err(Error::UnknownLanguage(language_id));
    }
    let mut terms: Vec<String> = records.iter().map(|r| r.term.clone()).collect();
    terms.sort_unstable();
    terms.dedup();
    let mut counts = Array2::zeros((terms.len(), ds.n_chips));
    for r in &records {
        let w = terms.binary_search(&r.term).expect("term from records");
        counts[(w, r.chip_id as usize - 1)] += 1;
    }
    Ok(NamingMatrix {
        language_id,
        terms,
        counts,
    })
}

/// Keep only major terms: rows that are the modal category for at least
/// `MAJOR_TERM_MIN_CHIPS` chips. Surviving counts are untouched.
pub fn major_terms(nm: &NamingMatrix) -> Result<NamingMatrix> {
    let mut mode_hits = vec![0usize; nm.n_terms()];
    for mode in nm.chip_modes().into_iter().flatten() {
        mode_hits[mode] += 1;
    }
    let keep: Vec<usize> = (0..nm.n_terms())
        .filter(|&w| mode_hits[w] >= MAJOR_TERM_MIN_CHIPS)
        .collect();
    if keep.is_empty() {
        return Err(Error::NoMajorTerms(nm.language_id));
    }
    let mut counts = Array2::zeros((keep.len(), nm.n_chips()));
    for (row, &w) in keep.iter().enumerate() {
        counts.row_mut(row).assign(&nm.counts.row(w));
    }
    Ok(NamingMatrix {
        language_id: nm.language_id,
        terms: keep.iter().map(|&w| nm.terms[w].clone()).collect(),
        counts,
    })
}

/// Build the full-chart game for a (filtered) naming matrix: the context is
/// every chip, the meaning function is the per-chip normalized counts,
/// similarity is the perceptual kernel, and the need prior is uniform. Chips
/// with no responses get a uniform meaning-function row and a zero-support
/// flag so metric code can exclude them.
pub fn wcs_game(nm: &NamingMatrix, chart: &MunsellChart) -> Result<StructuredGame> {
    if nm.n_chips() != chart.len() {
        return Err(Error::InvalidConfig(format!(
            "naming matrix covers {} chips, chart has {}",
            nm.n_chips(),
            chart.len()
        )));
    }
    let n = chart.len();
    let k = nm.n_terms();
    let mut meaning_fn = Array2::zeros((n, k));
    let mut zero_support = vec![false; n];
    for m in 0..n {
        let total: u32 = (0..k).map(|w| nm.counts[(w, m)]).sum();
        if total == 0 {
            meaning_fn.row_mut(m).fill(1.0 / k as f64);
            zero_support[m] = true;
        } else {
            for w in 0..k {
                meaning_fn[(m, w)] = nm.counts[(w, m)] as f64 / total as f64;
            }
        }
    }
    let similarity = perceptual_similarity(chart);
    let prior = Array1::from_elem(n, 1.0 / n as f64);
    let mut game = StructuredGame::new(chart.ids(), meaning_fn, similarity, prior)?;
    game.zero_support = zero_support;
    Ok(game)
}

/// Meaning-distribution rows for the same chart, aligned with `wcs_game`
/// contexts (row m = chip m's Gaussian over all chips).
pub fn chart_meanings(chart: &MunsellChart) -> Array2<f64> {
    meaning_distribution(chart).matrix().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::ColorChip;

    fn record(lang: u32, speaker: &str, chip: u32, term: &str) -> NamingRecord {
        NamingRecord {
            language_id: lang,
            speaker_id: speaker.to_string(),
            chip_id: chip,
            term: term.to_string(),
        }
    }

    fn dataset(records: Vec<NamingRecord>, n_chips: usize) -> WcsDataset {
        WcsDataset {
            languages: BTreeMap::new(),
            naming: records,
            n_chips,
        }
    }

    #[test]
    fn parse_term_file() {
        let dir = std::env::temp_dir().join("colorsig_wcs_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("term.txt");
        std::fs::write(&path, "1\t1\t5\tA\n1\t2\t5\tB\n2\t1\t7\tX\n").unwrap();
        let (ds, report) = parse_wcs(&path, None, 330, true).unwrap();
        assert_eq!(report.n_records, 3);
        assert_eq!(ds.language_ids(), vec![1, 2]);
        assert_eq!(ds.naming[0], record(1, "1", 5, "A"));
    }

    #[test]
    fn parse_empty_file_is_empty_dataset() {
        let dir = std::env::temp_dir().join("colorsig_wcs_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("empty.txt");
        std::fs::write(&path, "").unwrap();
        let (ds, report) = parse_wcs(&path, None, 330, true).unwrap();
        assert_eq!(report.n_records, 0);
        assert!(ds.naming.is_empty());
    }

    #[test]
    fn strict_mode_rejects_bad_chip() {
        let dir = std::env::temp_dir().join("colorsig_wcs_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.txt");
        std::fs::write(&path, "1\t1\t999\tA\n").unwrap();
        let err = parse_wcs(&path, None, 330, true).unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        let (_, report) = parse_wcs(&path, None, 330, false).unwrap();
        assert_eq!(report.malformed.len(), 1);
    }

    #[test]
    fn naming_matrix_counts_records() {
        let ds = dataset(
            vec![
                record(1, "1", 5, "A"),
                record(1, "2", 5, "B"),
                record(1, "3", 5, "A"),
                record(1, "1", 6, "B"),
            ],
            10,
        );
        let nm = naming_matrix(&ds, 1).unwrap();
        assert_eq!(nm.terms, vec!["A".to_string(), "B".to_string()]);
        assert_eq!(nm.counts[(0, 4)], 2);
        assert_eq!(nm.counts[(1, 4)], 1);
        assert_eq!(nm.counts[(1, 5)], 1);
        assert_eq!(nm.total_count(), 4, "conservation");
    }

    #[test]
    fn naming_matrix_unknown_language() {
        let ds = dataset(vec![record(1, "1", 5, "A")], 10);
        assert!(matches!(
            naming_matrix(&ds, 9),
            Err(Error::UnknownLanguage(9))
        ));
    }

    #[test]
    fn single_record_makes_single_cell() {
        let ds = dataset(vec![record(3, "1", 2, "Q")], 330);
        let nm = naming_matrix(&ds, 3).unwrap();
        assert_eq!(nm.counts.dim(), (1, 330));
        assert_eq!(nm.counts[(0, 1)], 1);
        assert_eq!(nm.total_count(), 1);
    }

    #[test]
    fn major_terms_threshold() {
        // term A is mode for 10 chips, term B for 9: only A survives
        let mut records = Vec::new();
        for chip in 1..=10 {
            records.push(record(1, "1", chip, "A"));
        }
        for chip in 11..=19 {
            records.push(record(1, "1", chip, "B"));
        }
        let ds = dataset(records, 30);
        let nm = naming_matrix(&ds, 1).unwrap();
        let filtered = major_terms(&nm).unwrap();
        assert_eq!(filtered.terms, vec!["A".to_string()]);
        // surviving counts are the original row
        assert_eq!(filtered.counts.row(0), nm.counts.row(0));
    }

    #[test]
    fn major_terms_none_survive() {
        let ds = dataset(vec![record(1, "1", 1, "A")], 5);
        let nm = naming_matrix(&ds, 1).unwrap();
        assert!(matches!(major_terms(&nm), Err(Error::NoMajorTerms(1))));
    }

    #[test]
    fn major_terms_idempotent_off_boundary() {
        let mut records = Vec::new();
        for chip in 1..=15 {
            records.push(record(1, "1", chip, "A"));
        }
        for chip in 16..=27 {
            records.push(record(1, "1", chip, "B"));
        }
        records.push(record(1, "1", 28, "C"));
        let ds = dataset(records, 30);
        let nm = naming_matrix(&ds, 1).unwrap();
        let once = major_terms(&nm).unwrap();
        let twice = major_terms(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn mode_tie_prefers_larger_total_then_lower_index() {
        // chip 1: A=1, B=1 tie; B has larger total use
        let ds = dataset(
            vec![
                record(1, "1", 1, "A"),
                record(1, "2", 1, "B"),
                record(1, "1", 2, "B"),
            ],
            5,
        );
        let nm = naming_matrix(&ds, 1).unwrap();
        let modes = nm.chip_modes();
        assert_eq!(modes[0], Some(1), "tie goes to B (more total uses)");
        assert_eq!(modes[2], None, "unnamed chip has no mode");
    }

    #[test]
    fn naming_matrix_json_round_trip() {
        let ds = dataset(vec![record(1, "1", 1, "A"), record(1, "2", 2, "B")], 4);
        let nm = naming_matrix(&ds, 1).unwrap();
        let back = NamingMatrix::from_json(&nm.to_json()).unwrap();
        assert_eq!(nm, back);
    }

    #[test]
    fn wcs_game_normalizes_and_flags() {
        let chart = MunsellChart::new(vec![
            ColorChip { id: 1, grid_row: 'B', grid_col: 1, lab: [20.0, 0.0, 0.0] },
            ColorChip { id: 2, grid_row: 'B', grid_col: 2, lab: [40.0, 0.0, 0.0] },
            ColorChip { id: 3, grid_row: 'B', grid_col: 3, lab: [60.0, 0.0, 0.0] },
        ])
        .unwrap();
        let ds = dataset(
            vec![
                record(1, "1", 1, "A"),
                record(1, "2", 1, "B"),
                record(1, "1", 2, "B"),
            ],
            3,
        );
        let nm = naming_matrix(&ds, 1).unwrap();
        let game = wcs_game(&nm, &chart).unwrap();
        assert_eq!(game.meaning_fn[(0, 0)], 0.5);
        assert_eq!(game.meaning_fn[(0, 1)], 0.5);
        assert_eq!(game.meaning_fn[(1, 1)], 1.0);
        assert!(game.zero_support[2], "unnamed chip flagged");
        assert_eq!(game.meaning_fn[(2, 0)], 0.5, "unnamed chip uniform");
        assert_eq!(game.prior[0], 1.0 / 3.0);
        assert_eq!(game.context, vec![1, 2, 3]);
    }

    #[test]
    fn one_term_per_chip_gives_one_hot_rows() {
        let chart = MunsellChart::new(vec![
            ColorChip { id: 1, grid_row: 'B', grid_col: 1, lab: [20.0, 0.0, 0.0] },
            ColorChip { id: 2, grid_row: 'B', grid_col: 2, lab: [40.0, 0.0, 0.0] },
        ])
        .unwrap();
        let ds = dataset(vec![record(1, "1", 1, "A"), record(1, "1", 2, "B")], 2);
        let nm = naming_matrix(&ds, 1).unwrap();
        let game = wcs_game(&nm, &chart).unwrap();
        assert_eq!(game.meaning_fn[(0, 0)], 1.0);
        assert_eq!(game.meaning_fn[(1, 1)], 1.0);
    }
}
