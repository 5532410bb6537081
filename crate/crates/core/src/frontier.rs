//! Optimality frontiers: the information-theoretic complexity/accuracy curve
//! (self-consistent encoder iterations with a deterministic-annealing
//! schedule) and the best-achievable well-formedness per term count
//! (correlation-clustering local search). Exhaustive brute-force references
//! for both live here too; tests and the acceptance suite compare against
//! them at small sizes.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::{mutual_information, well_formedness, EfficiencyPoint, ModeMap};

/// Logs are clamped here so zero-probability decoder entries stay finite
/// inside matrix products (0 * -inf would poison them with NaN).
const LN_FLOOR: f64 = -708.0;

/// One converged annealing step.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub beta: f64,
    pub complexity: f64,
    pub accuracy: f64,
    /// Stored encoder, when requested.
    pub encoder: Option<Array2<f64>>,
}

/// The upper envelope of achievable (complexity, accuracy) pairs, anchored at
/// the origin: sorted by complexity with strictly increasing accuracy.
#[derive(Debug, Clone)]
pub struct FrontierCurve {
    points: Vec<FrontierPoint>,
}

impl FrontierCurve {
    /// Sort by complexity and drop dominated points (a point is dominated
    /// when an at-most-as-complex point has at least its accuracy).
    pub fn from_points(mut points: Vec<FrontierPoint>) -> Self {
        points.sort_by(|a, b| {
            a.complexity
                .total_cmp(&b.complexity)
                .then(b.accuracy.total_cmp(&a.accuracy))
        });
        let mut kept: Vec<FrontierPoint> = Vec::new();
        for p in points {
            if let Some(last) = kept.last() {
                if p.accuracy <= last.accuracy + 1e-12 {
                    continue;
                }
            }
            kept.push(p);
        }
        FrontierCurve { points: kept }
    }

    pub fn points(&self) -> &[FrontierPoint] {
        &self.points
    }

    pub fn max_complexity(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.complexity)
    }

    /// Accuracy of the curve at a complexity level, linearly interpolated
    /// between neighboring points. The domain is
    /// `[first.complexity, last.complexity]` (with the usual origin anchor,
    /// `[0, max]`); outside it the deficit is undefined.
    pub fn accuracy_at(&self, complexity: f64) -> Result<f64> {
        let first = self
            .points
            .first()
            .ok_or_else(|| Error::InvalidConfig("empty frontier curve".into()))?;
        let last = self.points.last().unwrap();
        let slack = 1e-9;
        if complexity < first.complexity - slack || complexity > last.complexity + slack {
            return Err(Error::OutsideRange {
                value: complexity,
                min: first.complexity,
                max: last.complexity,
            });
        }
        let c = complexity.clamp(first.complexity, last.complexity);
        let hi = match self.points.iter().position(|p| p.complexity >= c) {
            Some(i) => i,
            None => self.points.len() - 1,
        };
        if hi == 0 {
            return Ok(self.points[0].accuracy);
        }
        let (a, b) = (&self.points[hi - 1], &self.points[hi]);
        let span = b.complexity - a.complexity;
        if span <= 0.0 {
            return Ok(b.accuracy);
        }
        let t = (c - a.complexity) / span;
        Ok(a.accuracy + t * (b.accuracy - a.accuracy))
    }

    /// `accuracy_at` with the query clamped into the domain; for comparisons
    /// against points that may sit epsilon beyond the last computed beta.
    pub fn accuracy_at_clamped(&self, complexity: f64) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let c = complexity.clamp(
            self.points[0].complexity,
            self.points[self.points.len() - 1].complexity,
        );
        self.accuracy_at(c).expect("clamped into domain")
    }
}

/// Accuracy deficit of a point below the curve at the point's complexity.
/// Positive means the curve achieves more accuracy at that complexity.
pub fn frontier_distance(point: &EfficiencyPoint, curve: &FrontierCurve) -> Result<f64> {
    Ok(curve.accuracy_at(point.complexity)? - point.accuracy)
}

/// Geometric schedule of `steps` values from `min` to `max` inclusive.
pub fn log_schedule(min: f64, max: f64, steps: usize) -> Vec<f64> {
    assert!(min > 0.0 && max >= min && steps > 0);
    if steps == 1 {
        return vec![min];
    }
    let ratio = (max / min).powf(1.0 / (steps - 1) as f64);
    let mut out = Vec::with_capacity(steps);
    let mut v = min;
    for i in 0..steps {
        out.push(if i + 1 == steps { max } else { v });
        v *= ratio;
    }
    out
}

/// One self-consistent encoder update at inverse temperature `beta`:
/// `q'(w|m)` proportional to `q(w) exp(-beta KL[m || decoder_w])`, normalized
/// per row in the log domain. Words with zero marginal stay dead.
pub fn ib_step(
    encoder: &Array2<f64>,
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
    beta: f64,
) -> Array2<f64> {
    let (n, v) = encoder.dim();
    debug_assert_eq!(prior.len(), n);
    debug_assert_eq!(meanings.nrows(), n);

    // word marginal and decoder rows m̂_w(u) = Σ_m p(m)q(w|m)m(u) / q(w)
    let mut weighted = encoder.clone();
    for (mut row, &p) in weighted.rows_mut().into_iter().zip(prior.iter()) {
        row *= p;
    }
    let qw = weighted.sum_axis(Axis(0));
    let mut ln_decoder = weighted.t().dot(meanings);
    let mut ln_qw = vec![f64::NEG_INFINITY; v];
    for w in 0..v {
        if qw[w] > 0.0 {
            ln_qw[w] = qw[w].ln();
            let q = qw[w];
            ln_decoder
                .row_mut(w)
                .mapv_inplace(|d| (d / q).ln().max(LN_FLOOR));
        } else {
            ln_decoder.row_mut(w).fill(0.0);
        }
    }

    // KL[m || d_w] = -H(m) - Σ_u m(u) ln d_w(u); the entropy part is constant
    // per row and cancels in the softmax, leaving the cross-entropy term
    let ce = meanings.dot(&ln_decoder.t());
    let mut out = Array2::zeros((n, v));
    for m in 0..n {
        let mut mx = f64::NEG_INFINITY;
        for w in 0..v {
            let l = ln_qw[w] + beta * ce[(m, w)];
            if l > mx {
                mx = l;
            }
        }
        debug_assert!(mx.is_finite(), "all words dead in ib_step");
        let mut sum = 0.0;
        for w in 0..v {
            let e = (ln_qw[w] + beta * ce[(m, w)] - mx).exp();
            out[(m, w)] = e;
            sum += e;
        }
        let mut row = out.row_mut(m);
        row /= sum;
    }
    out
}

/// Complexity and accuracy of an encoder under a prior.
pub fn encoder_metrics(
    encoder: &Array2<f64>,
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
) -> (f64, f64) {
    let mut joint_mw = encoder.clone();
    for (mut row, &p) in joint_mw.rows_mut().into_iter().zip(prior.iter()) {
        row *= p;
    }
    let complexity = mutual_information(&joint_mw).expect("joint by construction");
    let joint_wu = joint_mw.t().dot(meanings);
    let accuracy = mutual_information(&joint_wu).expect("joint by construction");
    (complexity, accuracy)
}

/// Annealing configuration for `ib_frontier`.
#[derive(Debug, Clone)]
pub struct IbConfig {
    /// Ascending inverse temperatures.
    pub schedule: Vec<f64>,
    /// Vocabulary size; defaults to one word per universe element.
    pub n_words: Option<usize>,
    /// Random initializations at the first beta; the best (lowest objective)
    /// seeds the annealing chain.
    pub restarts: usize,
    /// Convergence threshold on the max-abs encoder change.
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Uniform mixing weight applied between betas so words that died at low
    /// beta can revive when higher beta favors them.
    pub perturbation: f64,
    pub store_encoders: bool,
}

impl Default for IbConfig {
    fn default() -> Self {
        IbConfig {
            schedule: log_schedule(1.0, 1024.0, 64),
            n_words: None,
            restarts: 5,
            tol: 1e-8,
            max_iters: 300,
            seed: 0,
            perturbation: 1e-2,
            store_encoders: false,
        }
    }
}

/// Iterate `ib_step` to convergence. In debug builds the objective
/// `I(M;W) - beta I(W;U)` is verified non-increasing (every iteration at
/// small sizes, sampled at full-chart sizes to keep tests fast).
fn ib_converge(
    mut encoder: Array2<f64>,
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
    beta: f64,
    tol: f64,
    max_iters: usize,
) -> Array2<f64> {
    #[cfg(debug_assertions)]
    let check_every = if encoder.nrows() <= 64 { 1 } else { 25 };
    #[cfg(debug_assertions)]
    let mut last_obj = f64::INFINITY;
    for _it in 0..max_iters {
        let next = ib_step(&encoder, prior, meanings, beta);
        let delta = encoder
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        encoder = next;
        #[cfg(debug_assertions)]
        if _it % check_every == 0 {
            let (c, a) = encoder_metrics(&encoder, prior, meanings);
            let obj = c - beta * a;
            debug_assert!(
                obj <= last_obj + 1e-7,
                "objective increased: {last_obj} -> {obj} at beta {beta}"
            );
            last_obj = obj;
        }
        if delta < tol {
            break;
        }
    }
    encoder
}

fn random_encoder<R: Rng + ?Sized>(n: usize, v: usize, rng: &mut R) -> Array2<f64> {
    let mut q = Array2::zeros((n, v));
    for m in 0..n {
        let mut sum = 0.0;
        for w in 0..v {
            // Exp(1) draws normalize to a flat Dirichlet row
            let e: f64 = -(1.0 - rng.random::<f64>()).ln();
            q[(m, w)] = e;
            sum += e;
        }
        let mut row = q.row_mut(m);
        row /= sum;
    }
    q
}

fn mix_uniform(encoder: &mut Array2<f64>, eps: f64) {
    let v = encoder.ncols() as f64;
    encoder.mapv_inplace(|x| (1.0 - eps) * x + eps / v);
}

/// Anneal the encoder across `cfg.schedule` (ascending beta, warm starts) and
/// collect the dominated-pruned curve, anchored at the origin.
pub fn ib_frontier(
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
    cfg: &IbConfig,
) -> Result<FrontierCurve> {
    if cfg.schedule.is_empty() {
        return Err(Error::ScheduleEmpty);
    }
    if cfg.schedule.windows(2).any(|w| w[1] < w[0]) || cfg.schedule[0] <= 0.0 {
        return Err(Error::InvalidConfig("schedule must ascend and be positive".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidConfig("restarts = 0".into()));
    }
    let n = meanings.nrows();
    let v = cfg.n_words.unwrap_or(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first_beta = cfg.schedule[0];

    // all restart initializations are drawn up front so the parallel map
    // cannot perturb the RNG sequence
    let inits: Vec<Array2<f64>> = (0..cfg.restarts)
        .map(|_| random_encoder(n, v, &mut rng))
        .collect();
    let converged: Vec<Array2<f64>> = exec::map_slice(&inits, |init| {
        ib_converge(
            init.clone(),
            prior,
            meanings,
            first_beta,
            cfg.tol,
            cfg.max_iters,
        )
    });
    let mut encoder = converged
        .into_iter()
        .map(|q| {
            let (c, a) = encoder_metrics(&q, prior, meanings);
            (c - first_beta * a, q)
        })
        .min_by(|(x, _), (y, _)| x.total_cmp(y))
        .map(|(_, q)| q)
        .unwrap();

    let mut points = Vec::with_capacity(cfg.schedule.len() + 1);
    points.push(FrontierPoint {
        beta: 0.0,
        complexity: 0.0,
        accuracy: 0.0,
        encoder: None,
    });
    for (i, &beta) in cfg.schedule.iter().enumerate() {
        if i > 0 {
            mix_uniform(&mut encoder, cfg.perturbation);
            encoder = ib_converge(
                encoder,
                prior,
                meanings,
                beta,
                cfg.tol,
                cfg.max_iters,
            );
        }
        let (complexity, accuracy) = encoder_metrics(&encoder, prior, meanings);
        points.push(FrontierPoint {
            beta,
            complexity,
            accuracy,
            encoder: cfg.store_encoders.then(|| encoder.clone()),
        });
    }
    Ok(FrontierCurve::from_points(points))
}

/// Best well-formedness and partition found for one term budget.
#[derive(Debug, Clone)]
pub struct CcPoint {
    pub k: usize,
    pub value: f64,
    pub partition: ModeMap,
}

/// Best-known well-formedness per term count K; non-decreasing in K because
/// each K warm-starts from the previous best partition.
#[derive(Debug, Clone)]
pub struct WellformednessFrontier {
    pub points: Vec<CcPoint>,
}

impl WellformednessFrontier {
    pub fn value_at(&self, k: usize) -> Option<f64> {
        self.point_at(k).map(|p| p.value)
    }

    pub fn point_at(&self, k: usize) -> Option<&CcPoint> {
        self.points.iter().find(|p| p.k == k)
    }
}

/// Pair weights for the clustering objective: grouping pair (i, j) changes
/// the well-formedness by `2 sim - 1` relative to separating it.
fn pair_weights(sim: &Array2<f64>) -> Array2<f64> {
    let n = sim.nrows();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[(i, j)] = 2.0 * sim[(i, j)] - 1.0;
            }
        }
    }
    w
}

/// Separation baseline: well-formedness when every chip is alone.
fn separation_value(sim: &Array2<f64>) -> f64 {
    let n = sim.nrows();
    let mut v = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            v += 1.0 - sim[(i, j)];
        }
    }
    v
}

/// Hill-climb `assign` by repeatedly applying the single best chip move.
/// Returns the same-cluster pair weight total of the local optimum.
fn cc_local_search(w: &Array2<f64>, assign: &mut [usize], k: usize) -> f64 {
    let n = assign.len();
    // s[(i, c)] = total pair weight between chip i and cluster c
    let mut s = Array2::<f64>::zeros((n, k));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s[(i, assign[j])] += w[(i, j)];
            }
        }
    }
    loop {
        let mut best_gain = 1e-12;
        let mut best_move: Option<(usize, usize)> = None;
        for i in 0..n {
            let cur = s[(i, assign[i])];
            for c in 0..k {
                if c != assign[i] {
                    let gain = s[(i, c)] - cur;
                    if gain > best_gain {
                        best_gain = gain;
                        best_move = Some((i, c));
                    }
                }
            }
        }
        let Some((i, c)) = best_move else { break };
        let old = assign[i];
        for j in 0..n {
            if j != i {
                s[(j, old)] -= w[(i, j)];
                s[(j, c)] += w[(i, j)];
            }
        }
        assign[i] = c;
    }
    0.5 * (0..n).map(|i| s[(i, assign[i])]).sum::<f64>()
}

/// For each K in `k_range`: maximize well-formedness over partitions into at
/// most K clusters by best-single-move local search from `restarts` random
/// assignments plus the previous K's winner.
pub fn cc_frontier(
    sim: &Array2<f64>,
    k_range: &[usize],
    restarts: usize,
    seed: u64,
) -> Result<WellformednessFrontier> {
    if k_range.is_empty() {
        return Err(Error::ScheduleEmpty);
    }
    if k_range.iter().any(|&k| k == 0) {
        return Err(Error::InvalidConfig("k = 0 in cc_frontier".into()));
    }
    let n = sim.nrows();
    let w = pair_weights(sim);
    let base = separation_value(sim);
    let mut ks: Vec<usize> = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(ks.len());
    let mut warm: Option<Vec<usize>> = None;
    for &k in &ks {
        let mut starts: Vec<Vec<usize>> = Vec::with_capacity(restarts + 1);
        if let Some(prev) = &warm {
            starts.push(prev.clone());
        }
        for _ in 0..restarts {
            starts.push((0..n).map(|_| rng.random_range(0..k)).collect());
        }
        let results: Vec<(f64, Vec<usize>)> = exec::map_slice(&starts, |start| {
            let mut assign = start.clone();
            let pair_value = cc_local_search(&w, &mut assign, k);
            (pair_value, assign)
        });
        let (pair_value, assign) = results
            .into_iter()
            .max_by(|(a, _), (b, _)| a.total_cmp(b))
            .unwrap();
        warm = Some(assign.clone());
        points.push(CcPoint {
            k,
            value: base + pair_value,
            partition: ModeMap { assignment: assign },
        });
    }
    Ok(WellformednessFrontier { points })
}

/// Visit every partition of `{0..n}` into at most `max_k` nonempty blocks as
/// restricted-growth strings. Brute-force reference for desk-scale checks.
pub fn for_each_partition<F: FnMut(&[usize])>(n: usize, max_k: usize, f: &mut F) {
    assert!(n > 0 && max_k > 0);
    fn rec<F: FnMut(&[usize])>(a: &mut Vec<usize>, n: usize, used: usize, max_k: usize, f: &mut F) {
        if a.len() == n {
            f(a);
            return;
        }
        let top = used.min(max_k - 1);
        for c in 0..=top {
            let new_used = used.max(c + 1);
            a.push(c);
            rec(a, n, new_used, max_k, f);
            a.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), n, 0, max_k, f);
}

/// Exhaustive well-formedness optimum over partitions into at most `k`
/// clusters. Only feasible for small n.
pub fn exhaustive_cc(sim: &Array2<f64>, k: usize) -> (f64, ModeMap) {
    let n = sim.nrows();
    let mut best = f64::NEG_INFINITY;
    let mut best_assign = vec![0; n];
    for_each_partition(n, k, &mut |assign| {
        let value = well_formedness(
            &ModeMap {
                assignment: assign.to_vec(),
            },
            sim,
        );
        if value > best {
            best = value;
            best_assign = assign.to_vec();
        }
    });
    (
        best,
        ModeMap {
            assignment: best_assign,
        },
    )
}

/// (complexity, accuracy) of every deterministic encoder (partition of the
/// universe into word groups), for exhaustive frontier checks at small n.
pub fn deterministic_encoder_points(
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
) -> Vec<(f64, f64)> {
    let n = meanings.nrows();
    let mut out = Vec::new();
    for_each_partition(n, n, &mut |assign| {
        let k = assign.iter().max().unwrap() + 1;
        let mut encoder = Array2::zeros((n, k));
        for (m, &c) in assign.iter().enumerate() {
            encoder[(m, c)] = 1.0;
        }
        out.push(encoder_metrics(&encoder, prior, meanings));
    });
    out
}
