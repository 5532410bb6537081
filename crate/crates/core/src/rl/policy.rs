//! Action policies for the two agent families: pragmatic agents that run the
//! signaling recursion on top of their network's meaning function, and the
//! softmax baseline that acts on raw network scores.
//!
//! Everything is recorded on a tape so the sampled action's log-probability
//! can be differentiated back to the network parameters.

use ndarray::Array2;
use rand::Rng;

use crate::game::Variant;
use crate::rl::mlp::{MlpHandles, MlpParams};
use crate::rl::tape::{NodeId, Tape};

/// Which endpoint of the recursion the agent will act with. Building only
/// the needed endpoint keeps episode tapes small.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyRole {
    /// Distribution over words given the target meaning: [n x V].
    Sender,
    /// Distribution over context meanings given the heard word: [V x n].
    Listener,
}

/// One agent's recorded policy: the tape, the node holding the acting
/// distribution, and the parameter leaves for gradient extraction.
#[derive(Debug)]
pub struct AgentPolicy {
    pub tape: Tape,
    pub dist: NodeId,
    pub handles: MlpHandles,
}

impl AgentPolicy {
    pub fn dist_value(&self) -> &Array2<f64> {
        self.tape.value(self.dist)
    }

    /// Record ln dist[(row, col)] on the tape and return its node.
    pub fn log_prob(&mut self, row: usize, col: usize) -> NodeId {
        self.tape.log_entry(self.dist, row, col)
    }
}

/// Meaning function -> recursion -> acting distribution, all on tape.
///
/// The recursion starts from the literal listener of the network's meaning
/// function under a uniform context prior. Depth 0 and 1 both act with the
/// first sender; at depth d >= 1 the listener endpoint is the Bayes inverse
/// of the depth-d sender.
pub fn pragmatic_agent_policy(
    params: &MlpParams,
    ctx_lab: &Array2<f64>,
    sim_ctx: &Array2<f64>,
    variant: Variant,
    depth: u32,
    alpha: f64,
    role: PolicyRole,
) -> AgentPolicy {
    let n = ctx_lab.nrows();
    assert_eq!(sim_ctx.dim(), (n, n));
    let mut tape = Tape::new();
    let (meaning, handles) = params.forward_tape(&mut tape, ctx_lab);
    let mt = tape.transpose(meaning);
    let l0 = tape.norm_rows(mt);
    let sender_steps = match role {
        PolicyRole::Sender => depth.max(1),
        PolicyRole::Listener => depth,
    };
    let z = if variant == Variant::Srsa && sender_steps >= 1 {
        Some(tape.leaf(sim_ctx.clone()))
    } else {
        None
    };
    let mut listener = l0;
    let mut sender = None;
    for step in 1..=sender_steps {
        let lt = tape.transpose(listener);
        let mass = match z {
            Some(zn) => tape.matmul(zn, lt),
            None => lt,
        };
        let pw = tape.pow(mass, alpha);
        let s = tape.norm_rows(pw);
        sender = Some(s);
        if step < sender_steps || role == PolicyRole::Listener {
            let st = tape.transpose(s);
            listener = tape.norm_rows(st);
        }
    }
    let dist = match role {
        PolicyRole::Sender => sender.expect("at least one sender step"),
        PolicyRole::Listener => listener,
    };
    AgentPolicy { tape, dist, handles }
}

/// Softmax baseline: the sender row for a color is a softmax over that
/// color's V scores; the listener row for a word is a softmax over the
/// context colors' scores at that word's output index.
pub fn baseline_agent_policy(
    params: &MlpParams,
    ctx_lab: &Array2<f64>,
    role: PolicyRole,
) -> AgentPolicy {
    let mut tape = Tape::new();
    let (scores, handles) = params.forward_tape(&mut tape, ctx_lab);
    let dist = match role {
        PolicyRole::Sender => tape.softmax_rows(scores),
        PolicyRole::Listener => {
            let st = tape.transpose(scores);
            tape.softmax_rows(st)
        }
    };
    AgentPolicy { tape, dist, handles }
}

/// Policies for one episode of the pragmatic game: the speaker agent's
/// sender endpoint and the listener agent's listener endpoint, each built
/// from that agent's own parameters.
pub fn pragmatic_policy(
    speaker_params: &MlpParams,
    listener_params: &MlpParams,
    ctx_lab: &Array2<f64>,
    sim_ctx: &Array2<f64>,
    variant: Variant,
    depth: u32,
    alpha: f64,
) -> (AgentPolicy, AgentPolicy) {
    let speaker = pragmatic_agent_policy(
        speaker_params,
        ctx_lab,
        sim_ctx,
        variant,
        depth,
        alpha,
        PolicyRole::Sender,
    );
    let listener = pragmatic_agent_policy(
        listener_params,
        ctx_lab,
        sim_ctx,
        variant,
        depth,
        alpha,
        PolicyRole::Listener,
    );
    (speaker, listener)
}

/// Baseline counterpart of `pragmatic_policy`.
pub fn rl_baseline_policy(
    speaker_params: &MlpParams,
    listener_params: &MlpParams,
    ctx_lab: &Array2<f64>,
) -> (AgentPolicy, AgentPolicy) {
    let speaker = baseline_agent_policy(speaker_params, ctx_lab, PolicyRole::Sender);
    let listener = baseline_agent_policy(listener_params, ctx_lab, PolicyRole::Listener);
    (speaker, listener)
}

/// Sample an index from one row of a stochastic matrix.
pub fn sample_row<R: Rng>(dist: &Array2<f64>, row: usize, rng: &mut R) -> usize {
    let r = dist.row(row);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (idx, &p) in r.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    r.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Depth, Endpoint, RecursionConfig, Start, StructuredGame};
    use crate::recursion::run_recursion;
    use ndarray::{array, Array1, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(vocab: usize, sigmoid: bool, seed: u64) -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MlpParams::init(vocab, 6, sigmoid, &mut rng)
    }

    fn zero_params(vocab: usize, sigmoid: bool) -> MlpParams {
        MlpParams {
            w1: Array2::zeros((6, 3)),
            b1: Array1::zeros(6),
            w2: Array2::zeros((vocab, 6)),
            b2: Array1::zeros(vocab),
            sigmoid_output: sigmoid,
        }
    }

    fn test_context(n: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lab = Array2::<f64>::zeros((n, 3));
        for v in lab.iter_mut() {
            *v = rng.random_range(-0.8..0.8);
        }
        let mut sim = Array2::ones((n, n));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d: f64 = (0..3).map(|k| (lab[(i, k)] - lab[(j, k)]).powi(2)).sum();
                    sim[(i, j)] = (-d).exp();
                }
            }
        }
        (lab, sim)
    }

    #[test]
    fn identity_similarity_reduces_to_plain_recursion() {
        let params = random_params(8, true, 11);
        let (lab, _) = test_context(5, 1);
        let eye = Array2::<f64>::eye(5);
        for role in [PolicyRole::Sender, PolicyRole::Listener] {
            let srsa =
                pragmatic_agent_policy(&params, &lab, &eye, Variant::Srsa, 2, 5.0, role);
            let rsa =
                pragmatic_agent_policy(&params, &lab, &eye, Variant::Rsa, 2, 5.0, role);
            assert_eq!(srsa.dist_value(), rsa.dist_value());
        }
    }

    #[test]
    fn depth_zero_and_one_senders_identical() {
        let params = random_params(8, true, 3);
        let (lab, sim) = test_context(5, 2);
        let d0 = pragmatic_agent_policy(
            &params,
            &lab,
            &sim,
            Variant::Srsa,
            0,
            5.0,
            PolicyRole::Sender,
        );
        let d1 = pragmatic_agent_policy(
            &params,
            &lab,
            &sim,
            Variant::Srsa,
            1,
            5.0,
            PolicyRole::Sender,
        );
        assert_eq!(d0.dist_value(), d1.dist_value());
    }

    #[test]
    fn uniform_meaning_function_gives_uniform_sender() {
        let params = zero_params(10, true);
        let (lab, sim) = test_context(5, 4);
        let pol = pragmatic_agent_policy(
            &params,
            &lab,
            &sim,
            Variant::Rsa,
            0,
            5.0,
            PolicyRole::Sender,
        );
        for &p in pol.dist_value().iter() {
            assert!((p - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn policies_are_stochastic() {
        let params = random_params(12, true, 9);
        let (lab, sim) = test_context(5, 5);
        for depth in 0..=3 {
            for role in [PolicyRole::Sender, PolicyRole::Listener] {
                let pol = pragmatic_agent_policy(
                    &params,
                    &lab,
                    &sim,
                    Variant::Srsa,
                    depth,
                    5.0,
                    role,
                );
                for row in pol.dist_value().rows() {
                    let s: f64 = row.sum();
                    assert!((s - 1.0).abs() < 1e-9);
                    assert!(row.iter().all(|&p| p >= 0.0));
                }
            }
        }
    }

    #[test]
    fn tape_policy_matches_reference_recursion() {
        let params = random_params(7, true, 21);
        let (lab, sim) = test_context(5, 6);
        let meaning = params.forward(&lab);
        let game = StructuredGame::new(
            (0..5).collect(),
            meaning,
            sim.clone(),
            Array1::from_elem(5, 0.2),
        )
        .unwrap();
        for variant in [Variant::Rsa, Variant::Srsa] {
            for depth in 0..=3u32 {
                let cfg = RecursionConfig::new(variant, 5.0, Depth::Finite(depth))
                    .with_start(Start::LiteralListener)
                    .with_endpoint(Endpoint::FinalListener);
                let outcome = run_recursion(&game, &cfg).unwrap();
                let sender = pragmatic_agent_policy(
                    &params,
                    &lab,
                    &sim,
                    variant,
                    depth,
                    5.0,
                    PolicyRole::Sender,
                );
                let listener = pragmatic_agent_policy(
                    &params,
                    &lab,
                    &sim,
                    variant,
                    depth,
                    5.0,
                    PolicyRole::Listener,
                );
                let sdev = sender
                    .dist_value()
                    .iter()
                    .zip(outcome.sender.probs.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                let ldev = listener
                    .dist_value()
                    .iter()
                    .zip(outcome.listener.probs.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(sdev < 1e-9, "{variant:?} d{depth} sender dev {sdev}");
                assert!(ldev < 1e-9, "{variant:?} d{depth} listener dev {ldev}");
            }
        }
    }

    #[test]
    fn baseline_zero_params_uniform_both_ways() {
        let params = zero_params(9, false);
        let (lab, _) = test_context(5, 7);
        let sender = baseline_agent_policy(&params, &lab, PolicyRole::Sender);
        let listener = baseline_agent_policy(&params, &lab, PolicyRole::Listener);
        for &p in sender.dist_value().iter() {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
        for &p in listener.dist_value().iter() {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn baseline_listener_is_columnwise_softmax_of_scores() {
        let params = random_params(6, false, 31);
        let (lab, _) = test_context(5, 8);
        let scores = params.forward(&lab);
        let listener = baseline_agent_policy(&params, &lab, PolicyRole::Listener);
        for w in 0..6 {
            let col: Vec<f64> = (0..5).map(|c| scores[(c, w)]).collect();
            let mx = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = col.iter().map(|&v| (v - mx).exp()).collect();
            let total: f64 = exps.iter().sum();
            for c in 0..5 {
                assert!((listener.dist_value()[(w, c)] - exps[c] / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn baseline_shift_invariance() {
        let params = random_params(6, false, 13);
        let mut shifted = params.clone();
        shifted.b2 += 3.5;
        let (lab, _) = test_context(5, 9);
        for role in [PolicyRole::Sender, PolicyRole::Listener] {
            let a = baseline_agent_policy(&params, &lab, role);
            let b = baseline_agent_policy(&shifted, &lab, role);
            let dev = a
                .dist_value()
                .iter()
                .zip(b.dist_value().iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            assert!(dev < 1e-12);
        }
    }

    #[test]
    fn raising_a_colors_score_raises_its_listener_probability() {
        // the listener softmax runs over context colors at a fixed word:
        // increasing one color's score for that word must increase its share
        let base = array![[0.4, 0.1], [0.2, 0.3], [0.0, -0.1]];
        let mut bumped = base.clone();
        bumped[(1, 0)] *= 2.0;
        let soft = |col: Vec<f64>| {
            let mx = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = col.iter().map(|&v| (v - mx).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let before = soft((0..3).map(|c| base[(c, 0)]).collect());
        let after = soft((0..3).map(|c| bumped[(c, 0)]).collect());
        assert!(after[1] > before[1]);
    }

    #[test]
    fn policy_tapes_replay_exactly() {
        let params = random_params(8, true, 17);
        let (lab, sim) = test_context(5, 10);
        let pol = pragmatic_agent_policy(
            &params,
            &lab,
            &sim,
            Variant::Srsa,
            3,
            5.0,
            PolicyRole::Listener,
        );
        assert_eq!(pol.tape.replay_max_dev(), 0.0);
    }

    #[test]
    fn sample_row_respects_distribution_support() {
        let dist = array![[0.0, 1.0, 0.0], [0.5, 0.0, 0.5]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(sample_row(&dist, 0, &mut rng), 1);
            assert_ne!(sample_row(&dist, 1, &mut rng), 1);
        }
    }
}
