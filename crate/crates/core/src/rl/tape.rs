//! A small reverse-mode differentiation tape over 2-d f64 arrays.
//!
//! Every value is an `Array2` (scalars are 1x1, row vectors 1xk). Nodes are
//! appended in evaluation order, so ids are already a topological order and
//! the backward sweep is a single reverse pass. The op set is exactly what
//! the network-plus-recursion forward pass needs.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// A.dot(B)
    MatMul(NodeId, NodeId),
    /// matrix + broadcast row vector (1xk)
    AddRow(NodeId, NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    /// elementwise x^e
    Pow(NodeId, f64),
    Transpose(NodeId),
    /// rows scaled to sum 1; an all-zero row becomes uniform with no gradient
    NormRows(NodeId),
    SoftmaxRows(NodeId),
    /// single entry as a 1x1 value
    Entry(NodeId, usize, usize),
    /// ln of a single entry as a 1x1 value
    LogEntry(NodeId, usize, usize),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Array2<f64>,
}

/// Recorded forward computation with enough structure to replay it and to
/// push vector-Jacobian products back to the leaves.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Array2<f64>) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Array2<f64>) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        self.push(Op::MatMul(a, b), v)
    }

    /// `m + v` with `v` a 1xk row broadcast over the rows of `m`.
    pub fn add_row(&mut self, m: NodeId, v: NodeId) -> NodeId {
        let row = &self.nodes[v.0].value;
        assert_eq!(row.nrows(), 1, "add_row takes a 1xk row vector");
        let out = &self.nodes[m.0].value + &row.row(0);
        self.push(Op::AddRow(m, v), out)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x.0].value.mapv(|a| a.max(0.0));
        self.push(Op::Relu(x), v)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x.0].value.mapv(sigmoid);
        self.push(Op::Sigmoid(x), v)
    }

    pub fn pow(&mut self, x: NodeId, e: f64) -> NodeId {
        let v = self.nodes[x.0].value.mapv(|a| a.powf(e));
        self.push(Op::Pow(x, e), v)
    }

    pub fn transpose(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x.0].value.t().to_owned();
        self.push(Op::Transpose(x), v)
    }

    pub fn norm_rows(&mut self, x: NodeId) -> NodeId {
        let v = norm_rows_value(&self.nodes[x.0].value);
        self.push(Op::NormRows(x), v)
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> NodeId {
        let v = softmax_rows_value(&self.nodes[x.0].value);
        self.push(Op::SoftmaxRows(x), v)
    }

    pub fn entry(&mut self, x: NodeId, i: usize, j: usize) -> NodeId {
        let v = self.nodes[x.0].value[(i, j)];
        self.push(Op::Entry(x, i, j), Array2::from_elem((1, 1), v))
    }

    pub fn log_entry(&mut self, x: NodeId, i: usize, j: usize) -> NodeId {
        let v = self.nodes[x.0].value[(i, j)].ln();
        self.push(Op::LogEntry(x, i, j), Array2::from_elem((1, 1), v))
    }

    /// Gradients of the scalar at `root` with respect to every node.
    /// Errors with `NonFiniteGradient` if any propagated value is not finite.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        let root_val = &self.nodes[root.0].value;
        assert_eq!(root_val.dim(), (1, 1), "backward needs a scalar root");
        if !root_val[(0, 0)].is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Array2::ones((1, 1)));
        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].clone() else { continue };
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteGradient);
            }
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.nodes[b.0].value.t());
                    let gb = self.nodes[a.0].value.t().dot(&g);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::AddRow(m, v) => {
                    let gv = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    accumulate(&mut grads, *m, g.clone());
                    accumulate(&mut grads, *v, gv);
                }
                Op::Relu(x) => {
                    let mask = self.nodes[x.0].value.mapv(|a| if a > 0.0 { 1.0 } else { 0.0 });
                    accumulate(&mut grads, *x, g * mask);
                }
                Op::Sigmoid(x) => {
                    let s = &self.nodes[idx].value;
                    accumulate(&mut grads, *x, g * s * (1.0 - s));
                }
                Op::Pow(x, e) => {
                    let base = &self.nodes[x.0].value;
                    let gx = g * *e * base.mapv(|a| a.powf(e - 1.0));
                    accumulate(&mut grads, *x, gx);
                }
                Op::Transpose(x) => {
                    accumulate(&mut grads, *x, g.t().to_owned());
                }
                Op::NormRows(x) => {
                    let input = &self.nodes[x.0].value;
                    let output = &self.nodes[idx].value;
                    let mut gx = Array2::zeros(input.dim());
                    for (i, row) in input.rows().into_iter().enumerate() {
                        let s: f64 = row.sum();
                        if s == 0.0 {
                            continue; // fabricated uniform row: no gradient
                        }
                        let dot: f64 = g
                            .row(i)
                            .iter()
                            .zip(output.row(i).iter())
                            .map(|(a, b)| a * b)
                            .sum();
                        for j in 0..input.ncols() {
                            gx[(i, j)] = (g[(i, j)] - dot) / s;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::SoftmaxRows(x) => {
                    let output = &self.nodes[idx].value;
                    let mut gx = Array2::zeros(output.dim());
                    for i in 0..output.nrows() {
                        let dot: f64 = g
                            .row(i)
                            .iter()
                            .zip(output.row(i).iter())
                            .map(|(a, b)| a * b)
                            .sum();
                        for j in 0..output.ncols() {
                            gx[(i, j)] = output[(i, j)] * (g[(i, j)] - dot);
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::Entry(x, i, j) => {
                    let mut gx = Array2::zeros(self.nodes[x.0].value.dim());
                    gx[(*i, *j)] = g[(0, 0)];
                    accumulate(&mut grads, *x, gx);
                }
                Op::LogEntry(x, i, j) => {
                    let mut gx = Array2::zeros(self.nodes[x.0].value.dim());
                    gx[(*i, *j)] = g[(0, 0)] / self.nodes[x.0].value[(*i, *j)];
                    if !gx[(*i, *j)].is_finite() {
                        return Err(Error::NonFiniteGradient);
                    }
                    accumulate(&mut grads, *x, gx);
                }
            }
        }
        Ok(Gradients {
            grads: grads
                .into_iter()
                .map(|g| g.unwrap_or_else(|| Array2::zeros((0, 0))))
                .collect(),
        })
    }

    /// Recompute every non-leaf value from its inputs and return the largest
    /// absolute deviation from the recorded value.
    pub fn replay_max_dev(&self) -> f64 {
        let mut worst = 0.0f64;
        for idx in 0..self.nodes.len() {
            let recomputed = match &self.nodes[idx].op {
                Op::Leaf => continue,
                Op::MatMul(a, b) => self.nodes[a.0].value.dot(&self.nodes[b.0].value),
                Op::AddRow(m, v) => &self.nodes[m.0].value + &self.nodes[v.0].value.row(0),
                Op::Relu(x) => self.nodes[x.0].value.mapv(|a| a.max(0.0)),
                Op::Sigmoid(x) => self.nodes[x.0].value.mapv(sigmoid),
                Op::Pow(x, e) => self.nodes[x.0].value.mapv(|a| a.powf(*e)),
                Op::Transpose(x) => self.nodes[x.0].value.t().to_owned(),
                Op::NormRows(x) => norm_rows_value(&self.nodes[x.0].value),
                Op::SoftmaxRows(x) => softmax_rows_value(&self.nodes[x.0].value),
                Op::Entry(x, i, j) => {
                    Array2::from_elem((1, 1), self.nodes[x.0].value[(*i, *j)])
                }
                Op::LogEntry(x, i, j) => {
                    Array2::from_elem((1, 1), self.nodes[x.0].value[(*i, *j)].ln())
                }
            };
            for (a, b) in recomputed.iter().zip(self.nodes[idx].value.iter()) {
                let d = (a - b).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Per-node gradients produced by `Tape::backward`. Nodes the root does not
/// depend on have an empty gradient.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Array2<f64>>,
}

impl Gradients {
    /// Gradient with respect to a node, zero-shaped if the root does not
    /// depend on it.
    pub fn wrt(&self, id: NodeId) -> &Array2<f64> {
        &self.grads[id.0]
    }
}

fn accumulate(grads: &mut [Option<Array2<f64>>], id: NodeId, g: Array2<f64>) {
    match &mut grads[id.0] {
        Some(acc) => *acc += &g,
        slot => *slot = Some(g),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn norm_rows_value(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    let k = x.ncols() as f64;
    for mut row in out.rows_mut() {
        let s: f64 = row.sum();
        if s == 0.0 {
            row.fill(1.0 / k);
        } else {
            row /= s;
        }
    }
    out
}

fn softmax_rows_value(x: &Array2<f64>) -> Array2<f64> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central finite difference of `f` at `x`, perturbing one entry.
    fn central_diff<F: Fn(&Array2<f64>) -> f64>(
        f: F,
        x: &Array2<f64>,
        i: usize,
        j: usize,
        h: f64,
    ) -> f64 {
        let mut plus = x.clone();
        plus[(i, j)] += h;
        let mut minus = x.clone();
        minus[(i, j)] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    fn assert_grad_matches<F: Fn(&Array2<f64>) -> f64 + Copy>(
        f: F,
        x: &Array2<f64>,
        analytic: &Array2<f64>,
    ) {
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                let fd = central_diff(f, x, i, j, 1e-5);
                let an = analytic[(i, j)];
                let denom = fd.abs().max(an.abs()).max(1e-8);
                assert!(
                    ((fd - an) / denom).abs() < 1e-4,
                    "({i},{j}): fd {fd} vs analytic {an}"
                );
            }
        }
    }

    #[test]
    fn matmul_grads() {
        let a = array![[1.0, 2.0], [3.0, -1.0]];
        let b = array![[0.5, -0.5, 2.0], [1.5, 1.0, 0.0]];
        let mut tape = Tape::new();
        let na = tape.leaf(a.clone());
        let nb = tape.leaf(b.clone());
        let prod = tape.matmul(na, nb);
        let root = tape.entry(prod, 1, 2);
        let grads = tape.backward(root).unwrap();
        let f_a = |x: &Array2<f64>| x.dot(&b)[(1, 2)];
        let f_b = |x: &Array2<f64>| a.dot(x)[(1, 2)];
        assert_grad_matches(f_a, &a, grads.wrt(na));
        assert_grad_matches(f_b, &b, grads.wrt(nb));
    }

    #[test]
    fn softmax_log_entry_grads() {
        let x = array![[0.3, -1.2, 0.7], [2.0, 0.1, -0.4]];
        let mut tape = Tape::new();
        let nx = tape.leaf(x.clone());
        let sm = tape.softmax_rows(nx);
        let root = tape.log_entry(sm, 0, 2);
        let grads = tape.backward(root).unwrap();
        let f = |v: &Array2<f64>| softmax_rows_value(v)[(0, 2)].ln();
        assert_grad_matches(f, &x, grads.wrt(nx));
    }

    #[test]
    fn norm_rows_grads() {
        let x = array![[0.2, 0.5, 0.9], [0.4, 0.4, 0.4]];
        let mut tape = Tape::new();
        let nx = tape.leaf(x.clone());
        let nr = tape.norm_rows(nx);
        let root = tape.log_entry(nr, 1, 0);
        let grads = tape.backward(root).unwrap();
        let f = |v: &Array2<f64>| norm_rows_value(v)[(1, 0)].ln();
        assert_grad_matches(f, &x, grads.wrt(nx));
    }

    #[test]
    fn chained_ops_match_finite_differences() {
        // a miniature of the real use: sigmoid net output -> transpose ->
        // normalize -> power -> normalize -> log prob of one entry
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut x = Array2::zeros((4, 3));
        for v in x.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let forward = |inp: &Array2<f64>| {
            let s = inp.mapv(sigmoid);
            let l0 = norm_rows_value(&s.t().to_owned());
            let mass = l0.t().to_owned();
            let pw = mass.mapv(|a| a.powf(5.0));
            let sender = norm_rows_value(&pw);
            sender[(2, 1)].ln()
        };
        let mut tape = Tape::new();
        let nx = tape.leaf(x.clone());
        let s = tape.sigmoid(nx);
        let st = tape.transpose(s);
        let l0 = tape.norm_rows(st);
        let mass = tape.transpose(l0);
        let pw = tape.pow(mass, 5.0);
        let sender = tape.norm_rows(pw);
        let root = tape.log_entry(sender, 2, 1);
        assert!((tape.value(root)[(0, 0)] - forward(&x)).abs() < 1e-12);
        let grads = tape.backward(root).unwrap();
        assert_grad_matches(forward, &x, grads.wrt(nx));
    }

    #[test]
    fn relu_and_bias_grads() {
        let x = array![[0.5, -0.3], [1.2, 0.8]];
        let b = array![[0.1, -0.2]];
        let mut tape = Tape::new();
        let nx = tape.leaf(x.clone());
        let nb = tape.leaf(b.clone());
        let sum = tape.add_row(nx, nb);
        let r = tape.relu(sum);
        let root = tape.entry(r, 0, 1);
        let grads = tape.backward(root).unwrap();
        // x[(0,1)] + b[(0,1)] = -0.5 < 0: gradient gated to zero
        assert_eq!(grads.wrt(nx)[(0, 1)], 0.0);
        assert_eq!(grads.wrt(nb)[(0, 1)], 0.0);
        let root2 = tape.entry(r, 1, 1);
        let grads2 = tape.backward(root2).unwrap();
        assert_eq!(grads2.wrt(nx)[(1, 1)], 1.0);
        assert_eq!(grads2.wrt(nb)[(0, 1)], 1.0);
    }

    #[test]
    fn zero_sum_row_normalizes_uniform_without_gradient() {
        let x = array![[0.0, 0.0], [0.3, 0.1]];
        let mut tape = Tape::new();
        let nx = tape.leaf(x.clone());
        let nr = tape.norm_rows(nx);
        assert_eq!(tape.value(nr)[(0, 0)], 0.5);
        let root = tape.entry(nr, 0, 0);
        let grads = tape.backward(root).unwrap();
        assert!(grads.wrt(nx).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn log_of_zero_entry_is_nonfinite_gradient() {
        let x = array![[0.0, 1.0]];
        let mut tape = Tape::new();
        let nx = tape.leaf(x);
        let root = tape.log_entry(nx, 0, 0);
        assert!(matches!(
            tape.backward(root),
            Err(Error::NonFiniteGradient)
        ));
    }

    #[test]
    fn replay_reproduces_recorded_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = Array2::zeros((5, 4));
        for v in x.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        let mut tape = Tape::new();
        let nx = tape.leaf(x);
        let s = tape.sigmoid(nx);
        let t = tape.transpose(s);
        let n = tape.norm_rows(t);
        let p = tape.pow(n, 3.0);
        let sm = tape.softmax_rows(p);
        let _ = tape.log_entry(sm, 1, 2);
        assert_eq!(tape.replay_max_dev(), 0.0);
    }

    #[test]
    fn gradient_flows_through_both_matmul_args_once_each() {
        // y = x . x^T; d y[0,0] / d x must combine both paths
        let x = array![[1.0, 2.0]];
        let mut tape = Tape::new();
        let nx = tape.leaf(x.clone());
        let xt = tape.transpose(nx);
        let y = tape.matmul(nx, xt);
        let root = tape.entry(y, 0, 0);
        let grads = tape.backward(root).unwrap();
        // y[0,0] = x0^2 + x1^2, gradient (2 x0, 2 x1)
        assert!((grads.wrt(nx)[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((grads.wrt(nx)[(0, 1)] - 4.0).abs() < 1e-12);
    }
}
