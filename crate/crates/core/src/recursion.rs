//! The pragmatic recursion over structured signaling games.
//!
//! Senders are computed in the log domain (alpha-powers over deep recursions
//! underflow in linear space). All summations over the context run in a
//! canonical order (ascending meaning id), so permuting the context and all
//! game matrices consistently permutes every output bit-for-bit.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::game::{
    ConditionalDistribution, ConvergenceStatus, Depth, DistKind, Endpoint, RecursionConfig,
    RecursionOutcome, Start, StructuredGame, Variant,
};

/// Stable argsort of the context by meaning id. `perm[i]` is the original
/// index of the i-th canonical meaning; `trivial` when already sorted.
struct Canon {
    perm: Vec<usize>,
    trivial: bool,
}

impl Canon {
    fn of(game: &StructuredGame) -> Self {
        let n = game.context.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by_key(|&i| game.context[i]);
        let trivial = perm.iter().enumerate().all(|(i, &p)| i == p);
        Canon { perm, trivial }
    }

    fn gather_rows(&self, a: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(a.dim());
        for (i, &p) in self.perm.iter().enumerate() {
            out.row_mut(i).assign(&a.row(p));
        }
        out
    }

    fn gather_cols(&self, a: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(a.dim());
        for (i, &p) in self.perm.iter().enumerate() {
            out.column_mut(i).assign(&a.column(p));
        }
        out
    }

    fn gather_sym(&self, a: &Array2<f64>) -> Array2<f64> {
        let n = self.perm.len();
        let mut out = Array2::zeros((n, n));
        for (i, &pi) in self.perm.iter().enumerate() {
            for (j, &pj) in self.perm.iter().enumerate() {
                out[(i, j)] = a[(pi, pj)];
            }
        }
        out
    }

    fn gather_vec(&self, v: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter(self.perm.iter().map(|&p| v[p]))
    }

    /// Inverse of `gather_rows`: row i of the canonical result goes back to
    /// original position `perm[i]`.
    fn scatter_rows(&self, a: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(a.dim());
        for (i, &p) in self.perm.iter().enumerate() {
            out.row_mut(p).assign(&a.row(i));
        }
        out
    }

    fn scatter_cols(&self, a: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(a.dim());
        for (i, &p) in self.perm.iter().enumerate() {
            out.column_mut(p).assign(&a.column(i));
        }
        out
    }

    fn scatter_flags(&self, flags: &[bool]) -> Vec<bool> {
        let mut out = vec![false; flags.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = flags[i];
        }
        out
    }
}

/// Bayes-normalize a weight matrix into a listener: `L(m|w) = W(m,w) p(m) / Z_w`.
/// Words with zero total mass get a uniform row and a flag.
fn bayes_listener(weights: &Array2<f64>, prior: &Array1<f64>) -> ConditionalDistribution {
    let (n, k) = weights.dim();
    let mut probs = Array2::zeros((k, n));
    let mut flagged = vec![false; k];
    for w in 0..k {
        let mut denom = 0.0;
        for m in 0..n {
            denom += weights[(m, w)] * prior[m];
        }
        if denom > 0.0 {
            for m in 0..n {
                probs[(w, m)] = weights[(m, w)] * prior[m] / denom;
            }
        } else {
            probs.row_mut(w).fill(1.0 / n as f64);
            flagged[w] = true;
        }
    }
    ConditionalDistribution {
        kind: DistKind::Listener,
        probs,
        flagged,
    }
}

/// Literal listener: `L0(m|w)` proportional to the meaning function times the
/// context prior. Under a uniform prior this is exactly proportionality to the
/// meaning function alone.
pub fn literal_listener(game: &StructuredGame) -> Result<ConditionalDistribution> {
    if game.meaning_fn.iter().all(|&v| v == 0.0) {
        return Err(Error::AllZeroMeaningFunction);
    }
    let canon = Canon::of(game);
    if canon.trivial {
        return Ok(bayes_listener(&game.meaning_fn, &game.prior));
    }
    let weights = canon.gather_rows(&game.meaning_fn);
    let prior = canon.gather_vec(&game.prior);
    let out = bayes_listener(&weights, &prior);
    Ok(ConditionalDistribution {
        kind: DistKind::Listener,
        probs: canon.scatter_cols(&out.probs),
        flagged: out.flagged,
    })
}

/// Literal sender: rows of the meaning function read as naming counts,
/// normalized per meaning. Rows flagged in `game.zero_support` stay flagged.
pub fn literal_sender(game: &StructuredGame) -> Result<ConditionalDistribution> {
    if game.meaning_fn.iter().all(|&v| v == 0.0) {
        return Err(Error::AllZeroMeaningFunction);
    }
    let (n, k) = game.meaning_fn.dim();
    let mut probs = Array2::zeros((n, k));
    let mut flagged = vec![false; n];
    for m in 0..n {
        let row = game.meaning_fn.row(m);
        let sum: f64 = row.sum();
        if sum > 0.0 {
            for w in 0..k {
                probs[(m, w)] = row[w] / sum;
            }
        } else {
            probs.row_mut(m).fill(1.0 / k as f64);
            flagged[m] = true;
        }
        if !game.zero_support.is_empty() && game.zero_support[m] {
            flagged[m] = true;
        }
    }
    Ok(ConditionalDistribution {
        kind: DistKind::Sender,
        probs,
        flagged,
    })
}

/// One sender step: best response to `listener` at rationality `alpha`.
///
/// `Rsa`: S(w|m) proportional to `L(m|w)^alpha`. `Srsa`: S(w|m) proportional
/// to the alpha-power of the similarity-weighted listener mass
/// `sum_m' Z[m,m'] L(m'|w)`. Degenerate rows are replaced by a uniform row
/// and flagged.
pub fn sender_step(
    listener: &ConditionalDistribution,
    game: &StructuredGame,
    variant: Variant,
    alpha: f64,
) -> ConditionalDistribution {
    assert_eq!(listener.kind, DistKind::Listener, "sender_step needs a listener");
    let n = game.n_meanings();
    let k = game.n_words();
    assert_eq!(listener.probs.dim(), (k, n), "listener shape mismatch");

    let canon = Canon::of(game);
    if canon.trivial {
        return sender_step_canonical(&listener.probs, &game.similarity, variant, alpha);
    }
    let l = canon.gather_cols(&listener.probs);
    let z = canon.gather_sym(&game.similarity);
    let out = sender_step_canonical(&l, &z, variant, alpha);
    ConditionalDistribution {
        kind: DistKind::Sender,
        probs: canon.scatter_rows(&out.probs),
        flagged: canon.scatter_flags(&out.flagged),
    }
}

fn sender_step_canonical(
    listener: &Array2<f64>,
    similarity: &Array2<f64>,
    variant: Variant,
    alpha: f64,
) -> ConditionalDistribution {
    let (k, n) = listener.dim();
    // expected listener mass per (meaning, word)
    let mass: Array2<f64> = match variant {
        Variant::Rsa => listener.t().to_owned(),
        Variant::Srsa => similarity.dot(&listener.t()),
    };
    let mut probs = Array2::zeros((n, k));
    let mut flagged = vec![false; n];
    for m in 0..n {
        // log-domain row: alpha * ln(mass), normalized by log-sum-exp
        let row = mass.row(m);
        let mut log_row: Vec<f64> = row.iter().map(|&v| alpha * v.ln()).collect();
        let mx = log_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if mx == f64::NEG_INFINITY {
            probs.row_mut(m).fill(1.0 / k as f64);
            flagged[m] = true;
            continue;
        }
        let mut sum = 0.0;
        for v in log_row.iter_mut() {
            *v = (*v - mx).exp();
            sum += *v;
        }
        for (w, v) in log_row.iter().enumerate() {
            probs[(m, w)] = v / sum;
        }
    }
    ConditionalDistribution {
        kind: DistKind::Sender,
        probs,
        flagged,
    }
}

/// One listener step: Bayes inversion of the sender under the context prior.
pub fn listener_step(
    sender: &ConditionalDistribution,
    game: &StructuredGame,
) -> ConditionalDistribution {
    assert_eq!(sender.kind, DistKind::Sender, "listener_step needs a sender");
    let n = game.n_meanings();
    let k = game.n_words();
    assert_eq!(sender.probs.dim(), (n, k), "sender shape mismatch");

    let canon = Canon::of(game);
    if canon.trivial {
        return bayes_listener(&sender.probs, &game.prior);
    }
    let s = canon.gather_rows(&sender.probs);
    let prior = canon.gather_vec(&game.prior);
    let out = bayes_listener(&s, &prior);
    ConditionalDistribution {
        kind: DistKind::Listener,
        probs: canon.scatter_cols(&out.probs),
        flagged: out.flagged,
    }
}

/// Similarity-sensitive surprisal of a listener: `-ln sum_m' Z[m,m'] L(m'|w)`.
/// Returns `+inf` when the weighted mass is zero. With `Z = I` this is the
/// standard surprisal `-ln L(m|w)`.
pub fn sim_surprisal(
    listener: &ConditionalDistribution,
    game: &StructuredGame,
    m: usize,
    w: usize,
) -> f64 {
    assert_eq!(listener.kind, DistKind::Listener);
    let n = game.n_meanings();
    assert!(m < n && w < listener.probs.nrows(), "index out of range");
    let canon = Canon::of(game);
    let mut sum = 0.0;
    for &pj in &canon.perm {
        sum += game.similarity[(m, pj)] * listener.probs[(w, pj)];
    }
    -sum.ln()
}

/// Build a similarity matrix from a distortion: `Z = exp(-beta * d)`.
pub fn similarity_from_distortion(d: &Array2<f64>, beta: f64) -> Result<Array2<f64>> {
    let (r, c) = d.dim();
    if r != c {
        return Err(Error::InvalidGame("distortion matrix not square".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidConfig(format!("beta = {beta}")));
    }
    for i in 0..r {
        if d[(i, i)] != 0.0 {
            return Err(Error::InvalidGame(format!(
                "distortion diagonal entry {i} is {}",
                d[(i, i)]
            )));
        }
        for j in 0..c {
            let v = d[(i, j)];
            if v < 0.0 {
                return Err(Error::NegativeDistortion {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if v != d[(j, i)] {
                return Err(Error::InvalidGame(format!(
                    "distortion not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(d.mapv(|v| (-beta * v).exp()))
}

/// Run the full recursion per `cfg`.
///
/// With `Start::LiteralListener` the chain is `L0, S1, L1, S2, ...` where
/// `S_t` best-responds to `L_{t-1}` and `L_t` Bayes-inverts `S_t`. With
/// `Start::LiteralSender` the chain is `S0, L1, S1, L2, ...` where `L_t`
/// Bayes-inverts `S_{t-1}` and `S_t` best-responds to `L_t`.
///
/// At finite depth d the returned pair follows `cfg.endpoint`:
/// `FinalSender` pairs `S_d` with the listener it best-responded to,
/// `FinalListener` with its Bayes inverse. Depth 0 pairs are the starting
/// agents: `(S1, L0)` for the listener start (a sender facing the literal
/// listener) and `(S0, Bayes(S0))` for the sender start (the base agent).
///
/// `Depth::Limit` iterates until the one-step change of both matrices falls
/// below `limit_tol`, reporting a 2-cycle when the two-step change vanishes
/// but the one-step change does not.
pub fn run_recursion(game: &StructuredGame, cfg: &RecursionConfig) -> Result<RecursionOutcome> {
    cfg.validate()?;
    match cfg.start {
        Start::LiteralListener => run_from_literal_listener(game, cfg),
        Start::LiteralSender => run_from_literal_sender(game, cfg),
    }
}

fn run_from_literal_listener(
    game: &StructuredGame,
    cfg: &RecursionConfig,
) -> Result<RecursionOutcome> {
    let l0 = literal_listener(game)?;
    match cfg.depth {
        Depth::Finite(0) => {
            let s1 = sender_step(&l0, game, cfg.variant, cfg.alpha);
            Ok(RecursionOutcome {
                sender: s1,
                listener: l0,
                iters: 1,
                status: ConvergenceStatus::Exact,
            })
        }
        Depth::Finite(d) => {
            let mut listener_prev = l0;
            let mut sender = sender_step(&listener_prev, game, cfg.variant, cfg.alpha);
            for _ in 1..d {
                let listener = listener_step(&sender, game);
                sender = sender_step(&listener, game, cfg.variant, cfg.alpha);
                listener_prev = listener;
            }
            let listener = match cfg.endpoint {
                Endpoint::FinalSender => listener_prev,
                Endpoint::FinalListener => listener_step(&sender, game),
            };
            Ok(RecursionOutcome {
                sender,
                listener,
                iters: d as usize,
                status: ConvergenceStatus::Exact,
            })
        }
        Depth::Limit => {
            let mut listener = l0;
            let mut sender = sender_step(&listener, game, cfg.variant, cfg.alpha);
            run_limit(game, cfg, &mut sender, &mut listener)
        }
    }
}

fn run_from_literal_sender(
    game: &StructuredGame,
    cfg: &RecursionConfig,
) -> Result<RecursionOutcome> {
    let s0 = literal_sender(game)?;
    match cfg.depth {
        Depth::Finite(0) => {
            let l1 = listener_step(&s0, game);
            Ok(RecursionOutcome {
                sender: s0,
                listener: l1,
                iters: 0,
                status: ConvergenceStatus::Exact,
            })
        }
        Depth::Finite(d) => {
            let mut sender = s0;
            let mut listener = listener_step(&sender, game);
            sender = sender_step(&listener, game, cfg.variant, cfg.alpha);
            for _ in 1..d {
                listener = listener_step(&sender, game);
                sender = sender_step(&listener, game, cfg.variant, cfg.alpha);
            }
            let listener = match cfg.endpoint {
                Endpoint::FinalSender => listener,
                Endpoint::FinalListener => listener_step(&sender, game),
            };
            Ok(RecursionOutcome {
                sender,
                listener,
                iters: d as usize,
                status: ConvergenceStatus::Exact,
            })
        }
        Depth::Limit => {
            let mut listener = listener_step(&s0, game);
            let mut sender = sender_step(&listener, game, cfg.variant, cfg.alpha);
            run_limit(game, cfg, &mut sender, &mut listener)
        }
    }
}

/// Iterate (listener_step, sender_step) pairs until fixed point, cycle, or
/// iteration cap. On entry `sender` best-responds to `listener`.
fn run_limit(
    game: &StructuredGame,
    cfg: &RecursionConfig,
    sender: &mut ConditionalDistribution,
    listener: &mut ConditionalDistribution,
) -> Result<RecursionOutcome> {
    let mut iters = 1usize;
    let mut status = ConvergenceStatus::MaxIters;
    // previous iterates for one-step distance, two iterations back for cycles
    let mut sender_prev2: Option<Array2<f64>> = None;
    let mut listener_prev2: Option<Array2<f64>> = None;
    for _ in 1..cfg.limit_max_iters {
        let listener_new = listener_step(sender, game);
        let sender_new = sender_step(&listener_new, game, cfg.variant, cfg.alpha);
        iters += 1;
        let d_sender = max_abs(&sender_new.probs, &sender.probs);
        let d_listener = max_abs(&listener_new.probs, &listener.probs);
        let one_step = d_sender.max(d_listener);

        let two_step = match (&sender_prev2, &listener_prev2) {
            (Some(s2), Some(l2)) => {
                max_abs(&sender_new.probs, s2).max(max_abs(&listener_new.probs, l2))
            }
            _ => f64::INFINITY,
        };

        sender_prev2 = Some(std::mem::replace(&mut sender.probs, Array2::zeros((0, 0))));
        listener_prev2 = Some(std::mem::replace(
            &mut listener.probs,
            Array2::zeros((0, 0)),
        ));
        *sender = sender_new;
        *listener = listener_new;

        if one_step < cfg.limit_tol {
            status = ConvergenceStatus::Converged;
            break;
        }
        if two_step < cfg.limit_tol {
            status = ConvergenceStatus::Cycle;
            break;
        }
    }
    let final_listener = match cfg.endpoint {
        Endpoint::FinalSender => listener.clone(),
        Endpoint::FinalListener => listener_step(sender, game),
    };
    Ok(RecursionOutcome {
        sender: sender.clone(),
        listener: final_listener,
        iters,
        status,
    })
}

fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// A linear-domain sender step, kept as an independent cross-check for the
/// log-domain implementation. Only valid away from underflow.
#[doc(hidden)]
pub fn sender_step_linear_reference(
    listener: &ConditionalDistribution,
    game: &StructuredGame,
    variant: Variant,
    alpha: f64,
) -> ConditionalDistribution {
    let n = game.n_meanings();
    let k = game.n_words();
    let mut probs = Array2::zeros((n, k));
    let mut flagged = vec![false; n];
    for m in 0..n {
        let mut row = vec![0.0; k];
        for w in 0..k {
            let mass = match variant {
                Variant::Rsa => listener.probs[(w, m)],
                Variant::Srsa => (0..n)
                    .map(|m2| game.similarity[(m, m2)] * listener.probs[(w, m2)])
                    .sum(),
            };
            row[w] = mass.powf(alpha);
        }
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            for w in 0..k {
                probs[(m, w)] = row[w] / sum;
            }
        } else {
            probs.row_mut(m).fill(1.0 / k as f64);
            flagged[m] = true;
        }
    }
    ConditionalDistribution {
        kind: DistKind::Sender,
        probs,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn uniform_prior(n: usize) -> Array1<f64> {
        Array1::from_elem(n, 1.0 / n as f64)
    }

    fn game_2x2_identity() -> StructuredGame {
        StructuredGame::new(
            vec![1, 2],
            Array2::eye(2),
            Array2::eye(2),
            uniform_prior(2),
        )
        .unwrap()
    }

    #[test]
    fn literal_listener_identity_meaning_fn() {
        let game = game_2x2_identity();
        let l0 = literal_listener(&game).unwrap();
        assert_eq!(l0.probs, Array2::<f64>::eye(2));
        assert!(!l0.any_flagged());
    }

    #[test]
    fn literal_listener_all_ones_is_uniform() {
        let game = StructuredGame::new(
            vec![1, 2, 3],
            Array2::ones((3, 2)),
            Array2::eye(3),
            uniform_prior(3),
        )
        .unwrap();
        let l0 = literal_listener(&game).unwrap();
        for w in 0..2 {
            for m in 0..3 {
                assert!((l0.probs[(w, m)] - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn literal_listener_hand_normalization() {
        // meaning_fn [[1,0],[0.5,0.5]], uniform prior:
        // column w1 -> (2/3, 1/3); column w2 -> (0, 1)
        let game = StructuredGame::new(
            vec![1, 2],
            array![[1.0, 0.0], [0.5, 0.5]],
            Array2::eye(2),
            uniform_prior(2),
        )
        .unwrap();
        let l0 = literal_listener(&game).unwrap();
        assert!((l0.probs[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((l0.probs[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(l0.probs[(1, 0)], 0.0);
        assert_eq!(l0.probs[(1, 1)], 1.0);
    }

    #[test]
    fn literal_listener_rejects_all_zero() {
        let mut game = game_2x2_identity();
        game.meaning_fn.fill(0.0);
        assert!(matches!(
            literal_listener(&game),
            Err(Error::AllZeroMeaningFunction)
        ));
    }

    #[test]
    fn literal_listener_uses_prior() {
        // non-uniform prior shifts the posterior Bayes-consistently
        let game = StructuredGame::new(
            vec![1, 2],
            array![[0.5, 0.5], [0.5, 0.5]],
            Array2::eye(2),
            array![0.75, 0.25],
        )
        .unwrap();
        let l0 = literal_listener(&game).unwrap();
        assert!((l0.probs[(0, 0)] - 0.75).abs() < 1e-15);
        assert!((l0.probs[(1, 1)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sender_identity_listener_alpha_one() {
        let game = game_2x2_identity();
        let listener = ConditionalDistribution::new(DistKind::Listener, Array2::eye(2));
        let s = sender_step(&listener, &game, Variant::Rsa, 1.0);
        assert_eq!(s.probs, Array2::<f64>::eye(2));
    }

    #[test]
    fn srsa_equals_rsa_with_identity_similarity() {
        let game = StructuredGame::new(
            vec![1, 2, 3],
            array![[0.9, 0.1], [0.4, 0.6], [0.2, 0.8]],
            Array2::eye(3),
            uniform_prior(3),
        )
        .unwrap();
        let l0 = literal_listener(&game).unwrap();
        for &alpha in &[1.0, 5.0] {
            let rsa = sender_step(&l0, &game, Variant::Rsa, alpha);
            let srsa = sender_step(&l0, &game, Variant::Srsa, alpha);
            assert_eq!(rsa.probs, srsa.probs, "must agree exactly at Z = I");
        }
    }

    #[test]
    fn srsa_hand_example() {
        // 3 meanings, 2 words, L(.|w1)=(1,0,0), L(.|w2)=(0,0.5,0.5),
        // Z_23 = 0.9 else I: S(.|m2) prop to (0, 0.95) -> S(w2|m2) = 1
        let mut z = Array2::eye(3);
        z[(1, 2)] = 0.9;
        z[(2, 1)] = 0.9;
        let game = StructuredGame::new(
            vec![1, 2, 3],
            array![[1.0, 0.0], [0.0, 0.5], [0.0, 0.5]],
            z,
            uniform_prior(3),
        )
        .unwrap();
        let listener = ConditionalDistribution::new(
            DistKind::Listener,
            array![[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]],
        );
        let s = sender_step(&listener, &game, Variant::Srsa, 1.0);
        assert_eq!(s.probs[(1, 0)], 0.0);
        assert!((s.probs[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn listener_step_identity_sender() {
        let game = game_2x2_identity();
        let sender = ConditionalDistribution::new(DistKind::Sender, Array2::eye(2));
        let l = listener_step(&sender, &game);
        assert_eq!(l.probs, Array2::<f64>::eye(2));
    }

    #[test]
    fn listener_step_uninformative_sender_returns_prior() {
        let game = StructuredGame::new(
            vec![1, 2],
            array![[0.5, 0.5], [0.5, 0.5]],
            Array2::eye(2),
            array![0.75, 0.25],
        )
        .unwrap();
        let sender =
            ConditionalDistribution::new(DistKind::Sender, array![[0.5, 0.5], [0.5, 0.5]]);
        let l = listener_step(&sender, &game);
        for w in 0..2 {
            assert!((l.probs[(w, 0)] - 0.75).abs() < 1e-15);
            assert!((l.probs[(w, 1)] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn listener_step_hand_bayes() {
        let game = game_2x2_identity();
        let sender =
            ConditionalDistribution::new(DistKind::Sender, array![[1.0, 0.0], [0.5, 0.5]]);
        let l = listener_step(&sender, &game);
        assert!((l.probs[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((l.probs[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(l.probs[(1, 0)], 0.0);
        assert_eq!(l.probs[(1, 1)], 1.0);
    }

    #[test]
    fn zero_mass_word_flagged_uniform() {
        let game = game_2x2_identity();
        let sender =
            ConditionalDistribution::new(DistKind::Sender, array![[1.0, 0.0], [1.0, 0.0]]);
        let l = listener_step(&sender, &game);
        assert!(l.flagged[1]);
        assert!(!l.flagged[0]);
        assert!((l.probs[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn depth_one_identity_game() {
        let game = game_2x2_identity();
        let cfg = RecursionConfig::new(Variant::Rsa, 1.0, Depth::Finite(1));
        let out = run_recursion(&game, &cfg).unwrap();
        assert_eq!(out.sender.probs, Array2::<f64>::eye(2));
        assert_eq!(out.listener.probs, Array2::<f64>::eye(2));
        assert!(out.status.converged());
    }

    #[test]
    fn depth_zero_pairs_sender_with_literal_listener() {
        let game = StructuredGame::new(
            vec![1, 2],
            array![[0.8, 0.2], [0.3, 0.7]],
            Array2::eye(2),
            uniform_prior(2),
        )
        .unwrap();
        let cfg = RecursionConfig::new(Variant::Rsa, 2.0, Depth::Finite(0));
        let out = run_recursion(&game, &cfg).unwrap();
        let l0 = literal_listener(&game).unwrap();
        let s1 = sender_step(&l0, &game, Variant::Rsa, 2.0);
        assert_eq!(out.listener.probs, l0.probs);
        assert_eq!(out.sender.probs, s1.probs);
    }

    #[test]
    fn endpoint_pairing_rules() {
        let game = StructuredGame::new(
            vec![1, 2],
            array![[0.8, 0.2], [0.3, 0.7]],
            Array2::eye(2),
            uniform_prior(2),
        )
        .unwrap();
        let base = RecursionConfig::new(Variant::Rsa, 2.0, Depth::Finite(2));
        let fs = run_recursion(&game, &base.with_endpoint(Endpoint::FinalSender)).unwrap();
        let fl = run_recursion(&game, &base.with_endpoint(Endpoint::FinalListener)).unwrap();
        assert_eq!(fs.sender.probs, fl.sender.probs);
        // FinalListener listener is the Bayes inverse of the sender
        let bayes = listener_step(&fl.sender, &game);
        assert_eq!(fl.listener.probs, bayes.probs);
        // FinalSender listener is the one the sender best-responded to
        let s_again = sender_step(&fs.listener, &game, Variant::Rsa, 2.0);
        assert_eq!(s_again.probs, fs.sender.probs);
    }

    #[test]
    fn limit_reaches_fixed_point() {
        let game = StructuredGame::new(
            vec![1, 2, 3],
            array![[0.9, 0.1, 0.3], [0.2, 0.8, 0.1], [0.3, 0.3, 0.9]],
            array![[1.0, 0.2, 0.1], [0.2, 1.0, 0.4], [0.1, 0.4, 1.0]],
            uniform_prior(3),
        )
        .unwrap();
        let mut cfg = RecursionConfig::new(Variant::Srsa, 5.0, Depth::Limit);
        cfg.endpoint = Endpoint::FinalSender;
        let out = run_recursion(&game, &cfg).unwrap();
        assert!(out.status.converged(), "status = {:?}", out.status);
        // rerunning one step from the fixed point moves by < limit_tol
        let s2 = sender_step(&out.listener, &game, Variant::Srsa, 5.0);
        let l2 = listener_step(&s2, &game);
        assert!(max_abs(&s2.probs, &out.sender.probs) < cfg.limit_tol * 10.0);
        assert!(max_abs(&l2.probs, &out.listener.probs) < cfg.limit_tol * 10.0);
    }

    #[test]
    fn literal_sender_start_base_agent() {
        // depth 0 with the sender start is the normalized naming matrix plus
        // its Bayes inverse
        let game = StructuredGame::new(
            vec![1, 2],
            array![[3.0_f64 / 4.0, 1.0 / 4.0], [0.0, 1.0]],
            Array2::eye(2),
            uniform_prior(2),
        )
        .unwrap();
        let cfg = RecursionConfig::new(Variant::Rsa, 5.0, Depth::Finite(0))
            .with_start(Start::LiteralSender);
        let out = run_recursion(&game, &cfg).unwrap();
        assert!((out.sender.probs[(0, 0)] - 0.75).abs() < 1e-15);
        assert!((out.sender.probs[(0, 1)] - 0.25).abs() < 1e-15);
        let bayes = listener_step(&out.sender, &game);
        assert_eq!(out.listener.probs, bayes.probs);
    }

    #[test]
    fn sim_surprisal_reduces_to_standard_at_identity() {
        let game = game_2x2_identity();
        let listener =
            ConditionalDistribution::new(DistKind::Listener, array![[0.7, 0.3], [0.2, 0.8]]);
        let v = sim_surprisal(&listener, &game, 0, 0);
        assert!((v - (-(0.7_f64).ln())).abs() < 1e-15);
    }

    #[test]
    fn sim_surprisal_certain_listener_is_zero() {
        let game = game_2x2_identity();
        let listener = ConditionalDistribution::new(DistKind::Listener, Array2::eye(2));
        assert_eq!(sim_surprisal(&listener, &game, 0, 0), 0.0);
    }

    #[test]
    fn sim_surprisal_weighted_neighbor() {
        // L(.|w) = (0, 1), Z_12 = 0.5, query m = 1 -> -ln 0.5
        let mut z = Array2::eye(2);
        z[(0, 1)] = 0.5;
        z[(1, 0)] = 0.5;
        let game = StructuredGame::new(
            vec![1, 2],
            array![[1.0, 0.0], [0.0, 1.0]],
            z,
            uniform_prior(2),
        )
        .unwrap();
        let listener =
            ConditionalDistribution::new(DistKind::Listener, array![[0.0, 1.0], [0.0, 1.0]]);
        let v = sim_surprisal(&listener, &game, 0, 0);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn sim_surprisal_zero_mass_is_infinite() {
        let game = game_2x2_identity();
        let listener =
            ConditionalDistribution::new(DistKind::Listener, array![[0.0, 1.0], [0.0, 1.0]]);
        assert!(sim_surprisal(&listener, &game, 0, 0).is_infinite());
    }

    #[test]
    fn distortion_zero_gives_all_ones() {
        let z = similarity_from_distortion(&Array2::zeros((3, 3)), 2.0).unwrap();
        assert_eq!(z, Array2::<f64>::ones((3, 3)));
    }

    #[test]
    fn distortion_ln2_gives_half() {
        let mut d = Array2::zeros((2, 2));
        d[(0, 1)] = std::f64::consts::LN_2;
        d[(1, 0)] = std::f64::consts::LN_2;
        let z = similarity_from_distortion(&d, 1.0).unwrap();
        assert!((z[(0, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(z[(0, 0)], 1.0);
        assert_eq!(z[(1, 1)], 1.0);
    }

    #[test]
    fn distortion_negative_rejected() {
        let mut d = Array2::zeros((2, 2));
        d[(0, 1)] = -0.1;
        d[(1, 0)] = -0.1;
        assert!(matches!(
            similarity_from_distortion(&d, 1.0),
            Err(Error::NegativeDistortion { .. })
        ));
    }

    #[test]
    fn high_alpha_concentrates_on_argmax() {
        // listener row with max-to-second ratio >= 1.1: alpha = 100 puts
        // >= 0.999 mass on the argmax
        let game = StructuredGame::new(
            vec![1, 2],
            array![[0.5, 0.5], [0.5, 0.5]],
            Array2::eye(2),
            uniform_prior(2),
        )
        .unwrap();
        let listener =
            ConditionalDistribution::new(DistKind::Listener, array![[0.55, 0.45], [0.45, 0.55]]);
        let s = sender_step(&listener, &game, Variant::Rsa, 100.0);
        assert!(s.probs[(0, 0)] >= 0.999, "got {}", s.probs[(0, 0)]);
        assert!(s.probs[(1, 1)] >= 0.999);
    }

    #[test]
    fn permuting_context_permutes_outputs_exactly() {
        let game = StructuredGame::new(
            vec![7, 3, 5],
            array![[0.9, 0.1], [0.4, 0.6], [0.25, 0.75]],
            array![[1.0, 0.3, 0.2], [0.3, 1.0, 0.5], [0.2, 0.5, 1.0]],
            array![0.2, 0.5, 0.3],
        )
        .unwrap();
        // permutation sigma: new position i holds old meaning sigma[i]
        let sigma = [2usize, 0, 1];
        let n = 3;
        let mut mf = Array2::zeros((n, 2));
        let mut sim = Array2::zeros((n, n));
        let mut prior = Array1::zeros(n);
        let mut ctx = vec![0; n];
        for i in 0..n {
            ctx[i] = game.context[sigma[i]];
            prior[i] = game.prior[sigma[i]];
            mf.row_mut(i).assign(&game.meaning_fn.row(sigma[i]));
            for j in 0..n {
                sim[(i, j)] = game.similarity[(sigma[i], sigma[j])];
            }
        }
        let permuted = StructuredGame::new(ctx, mf, sim, prior).unwrap();

        let cfg = RecursionConfig::new(Variant::Srsa, 5.0, Depth::Finite(3));
        let a = run_recursion(&game, &cfg).unwrap();
        let b = run_recursion(&permuted, &cfg).unwrap();
        for i in 0..n {
            for w in 0..2 {
                assert_eq!(
                    b.sender.probs[(i, w)],
                    a.sender.probs[(sigma[i], w)],
                    "sender bitwise permutation equivariance"
                );
                assert_eq!(b.listener.probs[(w, i)], a.listener.probs[(w, sigma[i])]);
            }
        }
    }

    #[test]
    fn log_domain_matches_linear_reference() {
        let game = StructuredGame::new(
            vec![1, 2, 3],
            array![[0.9, 0.2, 0.4], [0.3, 0.8, 0.5], [0.1, 0.4, 0.7]],
            array![[1.0, 0.4, 0.2], [0.4, 1.0, 0.6], [0.2, 0.6, 1.0]],
            Array1::from_elem(3, 1.0 / 3.0),
        )
        .unwrap();
        let l0 = literal_listener(&game).unwrap();
        for &variant in &[Variant::Rsa, Variant::Srsa] {
            for &alpha in &[1.0, 2.5, 5.0] {
                let log_dom = sender_step(&l0, &game, variant, alpha);
                let lin = sender_step_linear_reference(&l0, &game, variant, alpha);
                for (a, b) in log_dom.probs.iter().zip(lin.probs.iter()) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
