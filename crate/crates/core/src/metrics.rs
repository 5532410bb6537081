//! Information-theoretic and perceptual quality measures for senders.
//!
//! All information quantities are in nats. Rows whose conditioning event had
//! zero support (flagged by the recursion or game construction) are excluded
//! from the joint and the prior is renormalized over the remaining rows.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ConditionalDistribution, DistKind};

/// A sender's position in the complexity/accuracy/well-formedness space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub label: String,
    /// Distinct words actually used (mode categories over unflagged meanings).
    pub n_terms: usize,
    /// I(M;W) in nats.
    pub complexity: f64,
    /// I(W;U) in nats.
    pub accuracy: f64,
    /// Raw pair-sum well-formedness of the mode-map partition.
    pub wellformedness: f64,
}

impl EfficiencyPoint {
    /// Check the data-processing relation `accuracy <= complexity` and
    /// non-negativity, with floating-point slack.
    pub fn validate(&self) -> Result<()> {
        if self.complexity < 0.0 || self.accuracy < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "negative information measure in point {}",
                self.label
            )));
        }
        if self.accuracy > self.complexity + 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "accuracy {} exceeds complexity {} in point {}",
                self.accuracy, self.complexity, self.label
            )));
        }
        Ok(())
    }
}

/// Hard partition of the meaning universe: chip index -> term index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeMap {
    pub assignment: Vec<usize>,
}

impl ModeMap {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Number of distinct terms in the assignment.
    pub fn n_terms_used(&self) -> usize {
        let mut terms: Vec<usize> = self.assignment.clone();
        terms.sort_unstable();
        terms.dedup();
        terms.len()
    }
}

/// Mutual information of a joint distribution in nats, with `0 ln 0 := 0`.
/// Tiny negative results from rounding clamp to zero.
pub fn mutual_information(joint: &Array2<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for &v in joint.iter() {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::NotAJoint(format!("entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotAJoint(format!("mass sums to {sum}")));
    }
    let px = joint.sum_axis(ndarray::Axis(1));
    let py = joint.sum_axis(ndarray::Axis(0));
    let mut mi = 0.0;
    for (i, row) in joint.rows().into_iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p.ln() - px[i].ln() - py[j].ln());
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Joint `p'(m) S(w|m)` over unflagged rows, prior renormalized. Returns
/// `None` when every row is flagged.
fn sender_joint(sender: &ConditionalDistribution, prior: &Array1<f64>) -> Option<Array2<f64>> {
    debug_assert_eq!(sender.kind, DistKind::Sender);
    debug_assert_eq!(sender.probs.nrows(), prior.len());
    let mass: f64 = prior
        .iter()
        .zip(&sender.flagged)
        .filter(|(_, &f)| !f)
        .map(|(&p, _)| p)
        .sum();
    if mass <= 0.0 {
        return None;
    }
    let (n, k) = sender.probs.dim();
    let mut joint = Array2::zeros((n, k));
    for m in 0..n {
        if sender.flagged[m] {
            continue;
        }
        let scale = prior[m] / mass;
        for w in 0..k {
            joint[(m, w)] = scale * sender.probs[(m, w)];
        }
    }
    Some(joint)
}

/// Complexity I(M;W): mutual information between meanings and words under the
/// (renormalized) need prior.
pub fn complexity(sender: &ConditionalDistribution, prior: &Array1<f64>) -> f64 {
    match sender_joint(sender, prior) {
        Some(joint) => mutual_information(&joint).expect("joint by construction"),
        None => 0.0,
    }
}

/// Accuracy I(W;U): mutual information between words and the universe chip
/// picked from the Gaussian meaning of the target. `meanings` rows align with
/// sender rows and each row is a distribution over the universe.
pub fn accuracy(
    sender: &ConditionalDistribution,
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
) -> f64 {
    debug_assert_eq!(meanings.nrows(), sender.probs.nrows());
    match sender_joint(sender, prior) {
        // joint over (w, u): J = A^T . meanings where A[(m, w)] = p'(m)S(w|m)
        Some(joint_mw) => {
            let joint_wu = joint_mw.t().dot(meanings);
            mutual_information(&joint_wu).expect("joint by construction")
        }
        None => 0.0,
    }
}

/// Well-formedness of a partition: over unordered chip pairs, similarity when
/// the pair shares a term, dissimilarity `1 - sim` when it does not.
pub fn well_formedness(partition: &ModeMap, sim: &Array2<f64>) -> f64 {
    let n = partition.len();
    debug_assert_eq!(sim.dim(), (n, n));
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = sim[(i, j)];
            total += if partition.assignment[i] == partition.assignment[j] {
                s
            } else {
                1.0 - s
            };
        }
    }
    total
}

/// Number of unordered pairs, for the normalized well-formedness column.
pub fn pair_count(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Per-meaning argmax word; ties go to the lower word index, which also
/// covers fabricated uniform rows.
pub fn mode_map(sender: &ConditionalDistribution) -> ModeMap {
    debug_assert_eq!(sender.kind, DistKind::Sender);
    let assignment = sender
        .probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (w, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = w;
                }
            }
            best
        })
        .collect();
    ModeMap { assignment }
}

/// Bundle the three measures for a sender into one point. `sim` must cover
/// the same meaning set as the sender rows.
pub fn efficiency_point(
    label: impl Into<String>,
    sender: &ConditionalDistribution,
    prior: &Array1<f64>,
    meanings: &Array2<f64>,
    sim: &Array2<f64>,
) -> EfficiencyPoint {
    let map = mode_map(sender);
    let mut used: Vec<usize> = map
        .assignment
        .iter()
        .zip(&sender.flagged)
        .filter(|(_, &f)| !f)
        .map(|(&w, _)| w)
        .collect();
    used.sort_unstable();
    used.dedup();
    EfficiencyPoint {
        label: label.into(),
        n_terms: used.len(),
        complexity: complexity(sender, prior),
        accuracy: accuracy(sender, prior, meanings),
        wellformedness: well_formedness(&map, sim),
    }
}
