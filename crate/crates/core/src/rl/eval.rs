//! Full-chart evaluation of trained agents: the agent's acting sender over
//! the whole chart, and the bare meaning function it learned, both reduced
//! to efficiency points.

use ndarray::{Array1, Array2};

use crate::color::{meaning_distribution, MunsellChart};
use crate::error::Result;
use crate::game::{ConditionalDistribution, Depth, DistKind, RecursionConfig, StructuredGame};
use crate::metrics::{efficiency_point, EfficiencyPoint};
use crate::recursion::run_recursion;
use crate::rl::mlp::MlpParams;
use crate::rl::train::{TrainConfig, TrainEnv};

/// Chart-level quantities every evaluation reuses: scaled network inputs,
/// similarity, Gaussian meaning distributions and the uniform need prior.
#[derive(Debug, Clone)]
pub struct EvalInputs {
    pub context: Vec<crate::game::MeaningId>,
    pub labs: Array2<f64>,
    pub sim: Array2<f64>,
    pub meanings: Array2<f64>,
    pub prior: Array1<f64>,
}

impl EvalInputs {
    pub fn from_chart(chart: &MunsellChart) -> Self {
        let env = TrainEnv::from_chart(chart);
        let n = chart.len();
        EvalInputs {
            context: chart.ids(),
            labs: env.labs,
            sim: env.sim,
            meanings: meaning_distribution(chart).matrix().clone(),
            prior: Array1::from_elem(n, 1.0 / n as f64),
        }
    }
}

fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - mx).exp();
            sum += *v;
        }
        row /= sum;
    }
    out
}

fn normalize_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let s: f64 = row.sum();
        if s == 0.0 {
            let k = row.len() as f64;
            row.fill(1.0 / k);
        } else {
            row /= s;
        }
    }
    out
}

/// Evaluate one agent over the full chart.
///
/// The agent point runs the agent's own policy with the whole chart as the
/// context: the recursion at `cfg.depth` for pragmatic agents, the score
/// softmax for the baseline. The meaning-function point row-normalizes the
/// raw network outputs into a sender. For the baseline those coincide: the
/// softmax is already the only normalization its scores ever get.
pub fn evaluate(
    params: &MlpParams,
    cfg: &TrainConfig,
    inputs: &EvalInputs,
    label: &str,
) -> Result<(EfficiencyPoint, EfficiencyPoint)> {
    let outputs = params.forward(&inputs.labs);
    match cfg.variant.recursion_variant() {
        Some(variant) => {
            let game = StructuredGame::new(
                inputs.context.clone(),
                outputs.clone(),
                inputs.sim.clone(),
                inputs.prior.clone(),
            )?;
            let rcfg = RecursionConfig::new(variant, cfg.alpha, Depth::Finite(cfg.depth));
            let outcome = run_recursion(&game, &rcfg)?;
            let agent = efficiency_point(
                format!("{label}-agent"),
                &outcome.sender,
                &inputs.prior,
                &inputs.meanings,
                &inputs.sim,
            );
            let meaning_sender =
                ConditionalDistribution::new(DistKind::Sender, normalize_rows(&outputs));
            let meaning_fn = efficiency_point(
                format!("{label}-meaning-fn"),
                &meaning_sender,
                &inputs.prior,
                &inputs.meanings,
                &inputs.sim,
            );
            Ok((agent, meaning_fn))
        }
        None => {
            let sender = ConditionalDistribution::new(DistKind::Sender, softmax_rows(&outputs));
            let agent = efficiency_point(
                format!("{label}-agent"),
                &sender,
                &inputs.prior,
                &inputs.meanings,
                &inputs.sim,
            );
            let mut meaning_fn = agent.clone();
            meaning_fn.label = format!("{label}-meaning-fn");
            Ok((agent, meaning_fn))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::ColorChip;
    use crate::rl::train::TrainVariant;
    use ndarray::Array2 as A2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chart(n: usize) -> MunsellChart {
        let chips = (0..n)
            .map(|i| ColorChip {
                id: i as u32 + 1,
                grid_row: (b'A' + (i % 10) as u8) as char,
                grid_col: (i / 10) as u32 + 1,
                lab: [
                    20.0 + 60.0 * ((i * 13) % 29) as f64 / 29.0,
                    -50.0 + 100.0 * ((i * 17) % 31) as f64 / 31.0,
                    -50.0 + 100.0 * ((i * 23) % 37) as f64 / 37.0,
                ],
            })
            .collect();
        MunsellChart::new(chips).unwrap()
    }

    fn zero_params(vocab: usize, sigmoid: bool) -> MlpParams {
        MlpParams {
            w1: A2::zeros((5, 3)),
            b1: ndarray::Array1::zeros(5),
            w2: A2::zeros((vocab, 5)),
            b2: ndarray::Array1::zeros(vocab),
            sigmoid_output: sigmoid,
        }
    }

    fn cfg(variant: TrainVariant, depth: u32) -> TrainConfig {
        let mut c = TrainConfig::new(variant, depth, 0);
        c.vocab = 10;
        c.hidden = 5;
        c
    }

    #[test]
    fn uniform_network_sits_at_zero_complexity() {
        let ch = chart(30);
        let inputs = EvalInputs::from_chart(&ch);
        let params = zero_params(10, true);
        let (agent, meaning_fn) =
            evaluate(&params, &cfg(TrainVariant::Srsa, 2), &inputs, "t").unwrap();
        assert!(agent.complexity < 1e-9, "{}", agent.complexity);
        assert!(meaning_fn.complexity < 1e-9);
        assert!(agent.accuracy < 1e-9);
    }

    #[test]
    fn depth_zero_and_one_agent_points_coincide() {
        let ch = chart(24);
        let inputs = EvalInputs::from_chart(&ch);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = MlpParams::init(10, 5, true, &mut rng);
        let (a0, _) = evaluate(&params, &cfg(TrainVariant::Srsa, 0), &inputs, "t").unwrap();
        let (a1, _) = evaluate(&params, &cfg(TrainVariant::Srsa, 1), &inputs, "t").unwrap();
        assert!((a0.complexity - a1.complexity).abs() < 1e-12);
        assert!((a0.accuracy - a1.accuracy).abs() < 1e-12);
        assert_eq!(a0.n_terms, a1.n_terms);
    }

    #[test]
    fn baseline_points_coincide() {
        let ch = chart(24);
        let inputs = EvalInputs::from_chart(&ch);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = MlpParams::init(10, 5, false, &mut rng);
        let (agent, meaning_fn) =
            evaluate(&params, &cfg(TrainVariant::RlBaseline, 0), &inputs, "b").unwrap();
        assert_eq!(agent.complexity, meaning_fn.complexity);
        assert_eq!(agent.accuracy, meaning_fn.accuracy);
        assert_eq!(agent.wellformedness, meaning_fn.wellformedness);
    }

    #[test]
    fn evaluation_points_are_internally_consistent() {
        let ch = chart(36);
        let inputs = EvalInputs::from_chart(&ch);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = MlpParams::init(14, 5, true, &mut rng);
        for variant in [TrainVariant::Rsa, TrainVariant::Srsa] {
            for depth in [0, 2] {
                let (agent, meaning_fn) =
                    evaluate(&params, &cfg(variant, depth), &inputs, "x").unwrap();
                agent.validate().unwrap();
                meaning_fn.validate().unwrap();
                assert!(agent.n_terms >= 1);
            }
        }
    }
}
