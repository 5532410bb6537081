//! Neural agents that learn meaning functions by reinforcement while acting
//! through the signaling recursion (or a softmax baseline), plus the
//! differentiation tape that backs their updates and full-chart evaluation.

pub mod eval;
pub mod mlp;
pub mod policy;
pub mod tape;
pub mod train;

pub use eval::{evaluate, EvalInputs};
pub use mlp::{MlpGrads, MlpParams};
pub use policy::{
    baseline_agent_policy, pragmatic_agent_policy, pragmatic_policy, rl_baseline_policy,
    AgentPolicy, PolicyRole,
};
pub use tape::{Gradients, NodeId, Tape};
pub use train::{
    play_batch, reinforce_update, train, Episode, EpisodeBatch, TrainConfig, TrainEnv,
    TrainResult, TrainVariant, UpdateLog,
};
