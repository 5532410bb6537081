//! REINFORCE training of two agents on reference games drawn from a color
//! chart. Per episode one agent speaks and the other listens; both receive
//! the listener's binary reward and update their own network through the
//! log-probability of their own action.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::{perceptual_similarity, MunsellChart};
use crate::error::{Error, Result};
use crate::game::Variant;
use crate::rl::mlp::{MlpGrads, MlpParams};
use crate::rl::policy::{
    baseline_agent_policy, pragmatic_agent_policy, sample_row, AgentPolicy, PolicyRole,
};

/// Which policy family the agents act with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainVariant {
    Rsa,
    Srsa,
    RlBaseline,
}

impl TrainVariant {
    /// The recursion variant behind a pragmatic agent, if any.
    pub fn recursion_variant(self) -> Option<Variant> {
        match self {
            TrainVariant::Rsa => Some(Variant::Rsa),
            TrainVariant::Srsa => Some(Variant::Srsa),
            TrainVariant::RlBaseline => None,
        }
    }

    pub fn sigmoid_output(self) -> bool {
        self != TrainVariant::RlBaseline
    }
}

impl std::fmt::Display for TrainVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainVariant::Rsa => write!(f, "rsa"),
            TrainVariant::Srsa => write!(f, "srsa"),
            TrainVariant::RlBaseline => write!(f, "rl-baseline"),
        }
    }
}

impl std::str::FromStr for TrainVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rsa" => Ok(TrainVariant::Rsa),
            "srsa" => Ok(TrainVariant::Srsa),
            "rl-baseline" | "rl" => Ok(TrainVariant::RlBaseline),
            other => Err(Error::InvalidConfig(format!("unknown variant {other}"))),
        }
    }
}

/// Hyperparameters of one training run (one seed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: TrainVariant,
    pub depth: u32,
    pub alpha: f64,
    pub context_size: usize,
    pub lr: f64,
    pub updates: usize,
    pub batch: usize,
    pub vocab: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(variant: TrainVariant, depth: u32, seed: u64) -> Self {
        TrainConfig {
            variant,
            depth,
            alpha: 5.0,
            context_size: 5,
            lr: 0.001,
            updates: 10_000,
            batch: 100,
            vocab: 100,
            hidden: 25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth > 5 {
            return Err(Error::InvalidConfig(format!(
                "depth {} out of range 0-5",
                self.depth
            )));
        }
        if self.alpha <= 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if self.context_size < 2 {
            return Err(Error::InvalidConfig("context needs at least 2 chips".into()));
        }
        if self.lr < 0.0 || !self.lr.is_finite() {
            return Err(Error::InvalidConfig("lr must be non-negative".into()));
        }
        if self.updates == 0 || self.batch == 0 || self.vocab == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig(
                "updates, batch, vocab and hidden must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Precomputed chart quantities shared by every episode: standardized
/// CIELAB inputs (each channel z-scored over the chart, so the network sees
/// zero-mean unit-variance coordinates) and the full perceptual similarity
/// matrix.
#[derive(Debug, Clone)]
pub struct TrainEnv {
    pub labs: Array2<f64>,
    pub sim: Array2<f64>,
}

impl TrainEnv {
    pub fn from_chart(chart: &MunsellChart) -> Self {
        let n = chart.len();
        let mut labs = Array2::zeros((n, 3));
        for (i, chip) in chart.chips().iter().enumerate() {
            for k in 0..3 {
                labs[(i, k)] = chip.lab[k];
            }
        }
        for k in 0..3 {
            let mut col = labs.column_mut(k);
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt().max(1e-12);
            col.mapv_inplace(|v| (v - mean) / sd);
        }
        TrainEnv {
            labs,
            sim: perceptual_similarity(chart),
        }
    }

    pub fn n_chips(&self) -> usize {
        self.labs.nrows()
    }

    fn gather_context(&self, idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let k = idx.len();
        let mut lab = Array2::zeros((k, 3));
        let mut sim = Array2::zeros((k, k));
        for (a, &i) in idx.iter().enumerate() {
            for c in 0..3 {
                lab[(a, c)] = self.labs[(i, c)];
            }
            for (b, &j) in idx.iter().enumerate() {
                sim[(a, b)] = self.sim[(i, j)];
            }
        }
        (lab, sim)
    }
}

/// One reference game. `target` and `guess` index into `context`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Episode {
    pub context: Vec<usize>,
    pub speaker_is_a: bool,
    pub target: usize,
    pub word: usize,
    pub guess: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EpisodeBatch {
    pub episodes: Vec<Episode>,
}

impl EpisodeBatch {
    pub fn mean_reward(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().map(|e| e.reward).sum::<f64>() / self.episodes.len() as f64
    }
}

/// Mean reward of one update step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpdateLog {
    pub update_idx: usize,
    pub mean_reward: f64,
}

#[derive(Debug)]
pub struct TrainResult {
    pub agent_a: MlpParams,
    pub agent_b: MlpParams,
    pub log: Vec<UpdateLog>,
    /// Episodes whose gradient came back non-finite and was dropped.
    pub nonfinite_events: usize,
}

fn build_policy(
    params: &MlpParams,
    cfg: &TrainConfig,
    ctx_lab: &Array2<f64>,
    ctx_sim: &Array2<f64>,
    role: PolicyRole,
) -> AgentPolicy {
    match cfg.variant.recursion_variant() {
        Some(variant) => pragmatic_agent_policy(
            params, ctx_lab, ctx_sim, variant, cfg.depth, cfg.alpha, role,
        ),
        None => baseline_agent_policy(params, ctx_lab, role),
    }
}

/// Single-episode REINFORCE step: params += lr * reward * grad of the
/// action's log-probability. A zero reward is a no-op.
pub fn reinforce_update(
    params: &mut MlpParams,
    policy: &mut AgentPolicy,
    action_row: usize,
    action_col: usize,
    reward: f64,
    lr: f64,
) -> Result<()> {
    if reward == 0.0 {
        return Ok(());
    }
    let logprob = policy.log_prob(action_row, action_col);
    let grads = policy.tape.backward(logprob)?;
    let mut acc = MlpGrads::zeros_like(params);
    acc.accumulate_scaled(&grads, &policy.handles, 1.0);
    if !acc.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    params.add_scaled(&acc, lr * reward);
    Ok(())
}

struct BatchOutcome {
    batch: EpisodeBatch,
    grad_a: MlpGrads,
    grad_b: MlpGrads,
    nonfinite: usize,
}

fn run_batch<R: Rng>(
    env: &TrainEnv,
    agent_a: &MlpParams,
    agent_b: &MlpParams,
    cfg: &TrainConfig,
    rng: &mut R,
    with_grads: bool,
) -> BatchOutcome {
    let mut out = BatchOutcome {
        batch: EpisodeBatch::default(),
        grad_a: MlpGrads::zeros_like(agent_a),
        grad_b: MlpGrads::zeros_like(agent_b),
        nonfinite: 0,
    };
    for _ in 0..cfg.batch {
        let context: Vec<usize> =
            rand::seq::index::sample(rng, env.n_chips(), cfg.context_size).into_vec();
        let (ctx_lab, ctx_sim) = env.gather_context(&context);
        let speaker_is_a = rng.random_range(0..2u8) == 0;
        let (speaker_params, listener_params) = if speaker_is_a {
            (agent_a, agent_b)
        } else {
            (agent_b, agent_a)
        };
        let target = rng.random_range(0..cfg.context_size);
        let mut speaker = build_policy(speaker_params, cfg, &ctx_lab, &ctx_sim, PolicyRole::Sender);
        let word = sample_row(speaker.dist_value(), target, rng);
        let mut listener =
            build_policy(listener_params, cfg, &ctx_lab, &ctx_sim, PolicyRole::Listener);
        let guess = sample_row(listener.dist_value(), word, rng);
        let reward = if guess == target { 1.0 } else { 0.0 };
        if with_grads && reward > 0.0 {
            let (speaker_acc, listener_acc) = if speaker_is_a {
                (&mut out.grad_a, &mut out.grad_b)
            } else {
                (&mut out.grad_b, &mut out.grad_a)
            };
            let s_log = speaker.log_prob(target, word);
            match speaker.tape.backward(s_log) {
                Ok(g) => speaker_acc.accumulate_scaled(&g, &speaker.handles, reward),
                Err(Error::NonFiniteGradient) => out.nonfinite += 1,
                Err(e) => unreachable!("backward only fails on non-finite values: {e}"),
            }
            let l_log = listener.log_prob(word, guess);
            match listener.tape.backward(l_log) {
                Ok(g) => listener_acc.accumulate_scaled(&g, &listener.handles, reward),
                Err(Error::NonFiniteGradient) => out.nonfinite += 1,
                Err(e) => unreachable!("backward only fails on non-finite values: {e}"),
            }
        }
        out.batch.episodes.push(Episode {
            context,
            speaker_is_a,
            target,
            word,
            guess,
            reward,
        });
    }
    out
}

/// Play one batch of reference games without updating anything.
pub fn play_batch<R: Rng>(
    env: &TrainEnv,
    agent_a: &MlpParams,
    agent_b: &MlpParams,
    cfg: &TrainConfig,
    rng: &mut R,
) -> EpisodeBatch {
    run_batch(env, agent_a, agent_b, cfg, rng, false).batch
}

/// Full training run: fresh agents, `cfg.updates` batches, batch-summed
/// REINFORCE updates applied to both agents. Deterministic per `cfg.seed`.
///
/// Gradients are summed, not averaged, over the batch: at lr 0.001 the
/// averaged step is two orders of magnitude too small for the signaling
/// convention to form within the usual update budget.
pub fn train(env: &TrainEnv, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    if cfg.context_size > env.n_chips() {
        return Err(Error::ContextTooLarge {
            requested: cfg.context_size,
            available: env.n_chips(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sigmoid = cfg.variant.sigmoid_output();
    let mut agent_a = MlpParams::init(cfg.vocab, cfg.hidden, sigmoid, &mut rng);
    let mut agent_b = MlpParams::init(cfg.vocab, cfg.hidden, sigmoid, &mut rng);
    let mut log = Vec::with_capacity(cfg.updates);
    let mut nonfinite_events = 0;
    let scale = cfg.lr;
    for update_idx in 0..cfg.updates {
        let outcome = run_batch(env, &agent_a, &agent_b, cfg, &mut rng, true);
        nonfinite_events += outcome.nonfinite;
        agent_a.add_scaled(&outcome.grad_a, scale);
        agent_b.add_scaled(&outcome.grad_b, scale);
        log.push(UpdateLog {
            update_idx,
            mean_reward: outcome.batch.mean_reward(),
        });
    }
    Ok(TrainResult {
        agent_a,
        agent_b,
        log,
        nonfinite_events,
    })
}
