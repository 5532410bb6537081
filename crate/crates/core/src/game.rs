//! Structured signaling games and the distributions the recursion produces.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a meaning in some universe (for color games, the chip id).
pub type MeaningId = u32;

/// Tolerance used by the stochasticity invariants (rows sum to 1, prior sums to 1).
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A context of meanings, a shared meaning function, a shared similarity
/// matrix, and a need prior. The unit every recursion consumes.
#[derive(Debug, Clone)]
pub struct StructuredGame {
    /// Ordered meaning identifiers; length n.
    pub context: Vec<MeaningId>,
    /// `meaning_fn[(m, w)]` = how well utterance `w` describes meaning `m`, in [0, 1]. Shape n x k.
    pub meaning_fn: Array2<f64>,
    /// Symmetric similarity with unit diagonal, entries in [0, 1]. Shape n x n.
    pub similarity: Array2<f64>,
    /// Need prior p(m|C); sums to 1. Length n.
    pub prior: Array1<f64>,
    /// Meanings whose meaning-function row was fabricated (e.g. a chip with no
    /// naming responses replaced by a uniform row). Excluded from metric sums.
    /// Empty means no flags. Not part of the wire format.
    pub zero_support: Vec<bool>,
}

impl StructuredGame {
    /// Build a game and validate every invariant.
    pub fn new(
        context: Vec<MeaningId>,
        meaning_fn: Array2<f64>,
        similarity: Array2<f64>,
        prior: Array1<f64>,
    ) -> Result<Self> {
        let game = StructuredGame {
            context,
            meaning_fn,
            similarity,
            prior,
            zero_support: Vec::new(),
        };
        game.validate()?;
        Ok(game)
    }

    /// Number of meanings in the context.
    pub fn n_meanings(&self) -> usize {
        self.context.len()
    }

    /// Number of utterances.
    pub fn n_words(&self) -> usize {
        self.meaning_fn.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.context.len();
        if n == 0 {
            return Err(Error::InvalidGame("empty context".into()));
        }
        if self.meaning_fn.nrows() != n {
            return Err(Error::InvalidGame(format!(
                "meaning_fn has {} rows for {} meanings",
                self.meaning_fn.nrows(),
                n
            )));
        }
        if self.meaning_fn.ncols() == 0 {
            return Err(Error::InvalidGame("no utterances".into()));
        }
        for (i, row) in self.meaning_fn.rows().into_iter().enumerate() {
            let mut any_pos = false;
            for &v in row {
                if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                    return Err(Error::InvalidGame(format!(
                        "meaning_fn entry {v} in row {i} outside [0, 1]"
                    )));
                }
                any_pos |= v > 0.0;
            }
            if !any_pos {
                return Err(Error::InvalidGame(format!(
                    "meaning_fn row {i} is all zero"
                )));
            }
        }
        if self.similarity.dim() != (n, n) {
            return Err(Error::InvalidGame("similarity shape mismatch".into()));
        }
        for i in 0..n {
            if (self.similarity[(i, i)] - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidGame(format!(
                    "similarity diagonal entry {i} is {}",
                    self.similarity[(i, i)]
                )));
            }
            for j in 0..n {
                let z = self.similarity[(i, j)];
                if !(0.0..=1.0).contains(&z) || !z.is_finite() {
                    return Err(Error::InvalidGame(format!(
                        "similarity entry ({i}, {j}) = {z} outside [0, 1]"
                    )));
                }
                if z != self.similarity[(j, i)] {
                    return Err(Error::InvalidGame(format!(
                        "similarity not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if self.prior.len() != n {
            return Err(Error::InvalidGame("prior length mismatch".into()));
        }
        let mut sum = 0.0;
        for &p in &self.prior {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::InvalidGame(format!("negative prior entry {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidGame(format!("prior sums to {sum}")));
        }
        if !self.zero_support.is_empty() && self.zero_support.len() != n {
            return Err(Error::InvalidGame("zero_support length mismatch".into()));
        }
        Ok(())
    }

    /// Parse the JSON wire format `{context, meaning_fn, similarity, prior}`.
    pub fn from_json(json: &str) -> Result<Self> {
        let wire: GameWire = serde_json::from_str(json)?;
        wire.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GameWire::from(self)).expect("game serialization")
    }
}

/// Wire format for game JSON: plain nested arrays.
#[derive(Debug, Serialize, Deserialize)]
pub struct GameWire {
    pub context: Vec<MeaningId>,
    pub meaning_fn: Vec<Vec<f64>>,
    pub similarity: Vec<Vec<f64>>,
    pub prior: Vec<f64>,
}

impl From<&StructuredGame> for GameWire {
    fn from(g: &StructuredGame) -> Self {
        GameWire {
            context: g.context.clone(),
            meaning_fn: to_nested(&g.meaning_fn),
            similarity: to_nested(&g.similarity),
            prior: g.prior.to_vec(),
        }
    }
}

impl TryFrom<GameWire> for StructuredGame {
    type Error = Error;

    fn try_from(w: GameWire) -> Result<Self> {
        let meaning_fn = from_nested(&w.meaning_fn)?;
        let similarity = from_nested(&w.similarity)?;
        StructuredGame::new(w.context, meaning_fn, similarity, Array1::from(w.prior))
    }
}

fn to_nested(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_nested(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidGame("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidGame("ragged matrix".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat)
        .map_err(|e| Error::InvalidGame(e.to_string()))
}

/// Whether a conditional distribution is a sender S(w|m) or a listener L(m|w).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistKind {
    Sender,
    Listener,
}

/// A row-stochastic conditional distribution.
///
/// Senders are `[n_meanings x n_words]`, listeners `[n_words x n_meanings]`;
/// rows sum to 1. Rows whose conditioning event had zero support were replaced
/// by a uniform row and are marked in `flagged`; metric code excludes them.
#[derive(Debug, Clone)]
pub struct ConditionalDistribution {
    pub kind: DistKind,
    pub probs: Array2<f64>,
    pub flagged: Vec<bool>,
}

impl ConditionalDistribution {
    pub fn new(kind: DistKind, probs: Array2<f64>) -> Self {
        let flagged = vec![false; probs.nrows()];
        ConditionalDistribution {
            kind,
            probs,
            flagged,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.probs.nrows()
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|&f| f)
    }

    /// Max-abs entrywise distance; used for limit detection.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.probs.dim(), other.probs.dim());
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Verify every row sums to 1 within `STOCHASTIC_TOL` and entries are
    /// non-negative (flagged rows included: they are uniform).
    pub fn check_stochastic(&self) -> Result<()> {
        for (i, row) in self.probs.rows().into_iter().enumerate() {
            let mut sum = 0.0;
            for &v in row {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::InvalidGame(format!(
                        "distribution entry {v} in row {i}"
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidGame(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Which reasoning model drives the sender step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Sender soft-maximizes the listener's negative surprisal.
    Rsa,
    /// Sender soft-maximizes the similarity-weighted listener mass.
    Srsa,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Rsa => write!(f, "rsa"),
            Variant::Srsa => write!(f, "srsa"),
        }
    }
}

/// Recursion depth: a fixed number of sender steps or the fixed-point limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Depth {
    Finite(u32),
    Limit,
}

impl std::fmt::Display for Depth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Depth::Finite(d) => write!(f, "{d}"),
            Depth::Limit => write!(f, "inf"),
        }
    }
}

/// Which agent pair `run_recursion` returns at a finite depth.
///
/// `FinalSender` pairs the depth-d sender with the listener it best-responded
/// to; `FinalListener` pairs it with its Bayes inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    FinalSender,
    FinalListener,
}

/// Where the recursion starts.
///
/// `LiteralListener` is the classic form (L0 proportional to the meaning
/// function). `LiteralSender` starts from S0 proportional to the meaning
/// function rows read as naming counts, the form used for naming-survey data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Start {
    LiteralListener,
    LiteralSender,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RecursionConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub depth: Depth,
    pub endpoint: Endpoint,
    pub start: Start,
    pub limit_tol: f64,
    pub limit_max_iters: usize,
}

impl RecursionConfig {
    pub fn new(variant: Variant, alpha: f64, depth: Depth) -> Self {
        RecursionConfig {
            variant,
            alpha,
            depth,
            endpoint: Endpoint::FinalListener,
            start: Start::LiteralListener,
            limit_tol: 1e-10,
            limit_max_iters: 1000,
        }
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn with_endpoint(mut self, endpoint: Endpoint) -> Self {
        self.endpoint = endpoint;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha = {}", self.alpha)));
        }
        if !(self.limit_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "limit_tol = {}",
                self.limit_tol
            )));
        }
        if self.limit_max_iters == 0 {
            return Err(Error::InvalidConfig("limit_max_iters = 0".into()));
        }
        Ok(())
    }
}

/// How a limit run terminated. Non-convergence is reported, never an error:
/// the alternating updates can 2-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergenceStatus {
    /// One-step change of both matrices fell below `limit_tol`.
    Converged,
    /// Two-step change fell below `limit_tol` while the one-step change did
    /// not: the iteration oscillates between two fixed pairs.
    Cycle,
    /// `limit_max_iters` reached.
    MaxIters,
    /// Finite-depth run; convergence is not a question.
    Exact,
}

impl ConvergenceStatus {
    pub fn converged(&self) -> bool {
        matches!(self, ConvergenceStatus::Converged | ConvergenceStatus::Exact)
    }
}

/// Result of `run_recursion`.
#[derive(Debug, Clone)]
pub struct RecursionOutcome {
    pub sender: ConditionalDistribution,
    pub listener: ConditionalDistribution,
    /// Number of sender steps applied.
    pub iters: usize,
    pub status: ConvergenceStatus,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn toy_game() -> StructuredGame {
        StructuredGame::new(
            vec![10, 20],
            array![[1.0, 0.0], [0.5, 0.5]],
            array![[1.0, 0.3], [0.3, 1.0]],
            array![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn valid_game_passes() {
        toy_game();
    }

    #[test]
    fn all_zero_row_rejected() {
        let err = StructuredGame::new(
            vec![1, 2],
            array![[1.0, 0.0], [0.0, 0.0]],
            Array2::eye(2),
            array![0.5, 0.5],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidGame(_)));
    }

    #[test]
    fn asymmetric_similarity_rejected() {
        let err = StructuredGame::new(
            vec![1, 2],
            array![[1.0, 0.0], [0.0, 1.0]],
            array![[1.0, 0.4], [0.3, 1.0]],
            array![0.5, 0.5],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidGame(_)));
    }

    #[test]
    fn prior_must_sum_to_one() {
        let err = StructuredGame::new(
            vec![1, 2],
            array![[1.0, 0.0], [0.0, 1.0]],
            Array2::eye(2),
            array![0.6, 0.5],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidGame(_)));
    }

    #[test]
    fn json_round_trip() {
        let game = toy_game();
        let json = game.to_json();
        let back = StructuredGame::from_json(&json).unwrap();
        assert_eq!(back.context, game.context);
        assert_eq!(back.meaning_fn, game.meaning_fn);
        assert_eq!(back.similarity, game.similarity);
        assert_eq!(back.prior, game.prior);
    }

    #[test]
    fn json_schema_shape() {
        let json = toy_game().to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v.get("context").is_some());
        assert!(v["meaning_fn"].is_array());
        assert!(v["meaning_fn"][0].is_array());
        assert!(v["similarity"].is_array());
        assert!(v["prior"].is_array());
    }
}
