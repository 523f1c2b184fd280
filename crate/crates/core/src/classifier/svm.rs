//! Binary support vector machines over sparse feature rows.
//!
//! Labels are `+1.0` (Req) and `-1.0` (NonReq). Per-sample costs scale the
//! hinge loss (linear) or the box constraint (rbf), which is how class
//! weighting enters both solvers.

use std::collections::{HashMap, VecDeque};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;

/// KKT gap at which SMO stops.
pub const SMO_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;
const KERNEL_CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(x: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                indices.push(i as u32);
                values.push(v);
            }
        }
        SparseVector { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().map(|&i| i as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn dot_dense(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * w[i]).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `‖self − other‖²`, summed over the union of non-zero positions.
    pub fn squared_distance(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Equal => {
                    let d = self.values[a] - other.values[b];
                    sum += d * d;
                    a += 1;
                    b += 1;
                }
                std::cmp::Ordering::Less => {
                    sum += self.values[a] * self.values[a];
                    a += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += other.values[b] * other.values[b];
                    b += 1;
                }
            }
        }
        sum += self.values[a..].iter().map(|v| v * v).sum::<f64>();
        sum += other.values[b..].iter().map(|v| v * v).sum::<f64>();
        sum
    }
}

impl From<&FeatureVector> for SparseVector {
    fn from(x: &FeatureVector) -> Self {
        SparseVector::from_dense(x.components())
    }
}

/// `exp(−gamma · ‖x − z‖²)`.
pub fn rbf_kernel(gamma: f64, x: &SparseVector, z: &SparseVector) -> f64 {
    (-gamma * x.squared_distance(z)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum SvmModel {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Rbf {
        gamma: f64,
        support_vectors: Vec<SparseVector>,
        /// `alpha_i · y_i` for each support vector.
        dual_coefficients: Vec<f64>,
        bias: f64,
    },
}

impl SvmModel {
    pub fn bias(&self) -> f64 {
        match self {
            SvmModel::Linear { bias, .. } | SvmModel::Rbf { bias, .. } => *bias,
        }
    }

    /// Signed decision value; positive means Req.
    pub fn decision(&self, x: &SparseVector) -> f64 {
        match self {
            SvmModel::Linear { weights, bias } => x.dot_dense(weights) + bias,
            SvmModel::Rbf {
                gamma,
                support_vectors,
                dual_coefficients,
                bias,
            } => {
                support_vectors
                    .iter()
                    .zip(dual_coefficients)
                    .map(|(sv, coef)| coef * rbf_kernel(*gamma, sv, x))
                    .sum::<f64>()
                    + bias
            }
        }
    }

    /// Largest feature index the model touches, plus one.
    pub fn input_dimension(&self) -> usize {
        match self {
            SvmModel::Linear { weights, .. } => weights.len(),
            SvmModel::Rbf {
                support_vectors, ..
            } => support_vectors
                .iter()
                .filter_map(SparseVector::max_index)
                .max()
                .map_or(0, |m| m + 1),
        }
    }
}

pub struct LinearFit {
    pub model: SvmModel,
    /// Training objective after initialization and after each epoch.
    pub objective_trace: Vec<f64>,
}

pub struct LinearParams {
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// `λ/2 ‖w‖² + (1/n) Σ cost_i · max(0, 1 − y_i (w·x_i + b))` with `λ = 1/(C·n)`.
pub fn linear_objective(
    xs: &[SparseVector],
    ys: &[f64],
    costs: &[f64],
    c: f64,
    weights: &[f64],
    bias: f64,
) -> f64 {
    let n = xs.len() as f64;
    let lambda = 1.0 / (c * n);
    let reg = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .zip(costs)
        .map(|((x, y), cost)| cost * (1.0 - y * (x.dot_dense(weights) + bias)).max(0.0))
        .sum();
    reg + loss / n
}

/// Stochastic subgradient descent on the L2-regularized hinge loss.
///
/// Each epoch visits the samples in a seeded random order. An epoch whose
/// objective ends above the previous one is rolled back and the step size
/// halved, so the recorded objective never increases.
pub fn fit_linear(
    xs: &[SparseVector],
    ys: &[f64],
    costs: &[f64],
    dimension: usize,
    params: &LinearParams,
) -> LinearFit {
    let n = xs.len();
    assert!(n > 0 && ys.len() == n && costs.len() == n);
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut weights = vec![0.0; dimension];
    let mut bias = 0.0;
    let mut best = linear_objective(xs, ys, costs, params.c, &weights, bias);
    let mut trace = vec![best];
    let mut rate = params.learning_rate;

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let eta = rate / ((epoch + 1) as f64).sqrt();
        // w = scale · v keeps the shrink step O(1) for sparse rows.
        let mut v = weights.clone();
        let mut scale = 1.0;
        let mut b = bias;
        let shrink = (1.0 - eta * lambda).max(0.0);
        for &i in &order {
            let margin = ys[i] * (scale * xs[i].dot_dense(&v) + b);
            scale *= shrink;
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
            if margin < 1.0 {
                let step = eta * costs[i] * ys[i];
                for (j, x) in xs[i].iter() {
                    v[j] += step * x / scale;
                }
                b += step;
            }
        }
        v.iter_mut().for_each(|w| *w *= scale);

        let objective = linear_objective(xs, ys, costs, params.c, &v, b);
        if objective.is_finite() && objective <= best {
            weights = v;
            bias = b;
            best = objective;
        } else {
            rate *= 0.5;
        }
        trace.push(best);
    }

    LinearFit {
        model: SvmModel::Linear { weights, bias },
        objective_trace: trace,
    }
}

struct KernelCache<'a> {
    xs: &'a [SparseVector],
    gamma: f64,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(xs: &'a [SparseVector], gamma: f64) -> Self {
        let row_bytes = xs.len().max(1) * std::mem::size_of::<f64>();
        KernelCache {
            xs,
            gamma,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity: (KERNEL_CACHE_BYTES / row_bytes).max(2),
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = &self.xs[i];
            let row = self
                .xs
                .iter()
                .map(|xj| rbf_kernel(self.gamma, xi, xj))
                .collect();
            self.rows.insert(i, row);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

pub struct RbfParams {
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl RbfParams {
    pub fn new(gamma: f64, n: usize) -> Self {
        RbfParams {
            gamma,
            tolerance: SMO_TOLERANCE,
            max_iterations: 100 * n.max(1000),
        }
    }
}

/// Dual SMO with second-order working-set selection (no shrinking).
///
/// `bounds[i]` is the box constraint `C_i` on `alpha_i`.
pub fn fit_rbf(xs: &[SparseVector], ys: &[f64], bounds: &[f64], params: &RbfParams) -> SvmModel {
    let n = xs.len();
    assert!(n > 0 && ys.len() == n && bounds.len() == n);
    let mut cache = KernelCache::new(xs, params.gamma);
    let diag: Vec<f64> = xs.iter().map(|x| rbf_kernel(params.gamma, x, x)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let mut iterations = 0;
    loop {
        if iterations >= params.max_iterations {
            warn!("SMO stopped after {iterations} iterations without reaching tolerance");
            break;
        }
        let Some((i, j)) = select_working_set(
            &mut cache,
            &diag,
            ys,
            bounds,
            &alpha,
            &grad,
            params.tolerance,
        ) else {
            break;
        };
        iterations += 1;

        let k_ij = cache.row(i)[j];
        let quad = {
            let q = diag[i] + diag[j] - 2.0 * k_ij;
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        let (ci, cj) = (bounds[i], bounds[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);

        if ys[i] != ys[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let (di, dj) = (ai - old_i, aj - old_j);
        let (yi, yj) = (ys[i], ys[j]);
        let row_i = cache.row(i).to_vec();
        let row_j = cache.row(j);
        for k in 0..n {
            grad[k] += ys[k] * (yi * row_i[k] * di + yj * row_j[k] * dj);
        }
    }

    let rho = compute_rho(ys, bounds, &alpha, &grad);
    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for k in 0..n {
        if alpha[k] > 0.0 {
            support_vectors.push(xs[k].clone());
            dual_coefficients.push(alpha[k] * ys[k]);
        }
    }
    SvmModel::Rbf {
        gamma: params.gamma,
        support_vectors,
        dual_coefficients,
        bias: -rho,
    }
}

fn select_working_set(
    cache: &mut KernelCache<'_>,
    diag: &[f64],
    ys: &[f64],
    bounds: &[f64],
    alpha: &[f64],
    grad: &[f64],
    tolerance: f64,
) -> Option<(usize, usize)> {
    let n = ys.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut i_sel = None;
    for t in 0..n {
        if ys[t] > 0.0 {
            if alpha[t] < bounds[t] && -grad[t] >= gmax {
                gmax = -grad[t];
                i_sel = Some(t);
            }
        } else if alpha[t] > 0.0 && grad[t] >= gmax {
            gmax = grad[t];
            i_sel = Some(t);
        }
    }
    let i = i_sel?;
    let row_i = cache.row(i);

    let mut gmax2 = f64::NEG_INFINITY;
    let mut j_sel = None;
    let mut best = f64::INFINITY;
    for t in 0..n {
        let grad_diff = if ys[t] > 0.0 {
            if alpha[t] <= 0.0 {
                continue;
            }
            gmax2 = gmax2.max(grad[t]);
            gmax + grad[t]
        } else {
            if alpha[t] >= bounds[t] {
                continue;
            }
            gmax2 = gmax2.max(-grad[t]);
            gmax - grad[t]
        };
        if grad_diff > 0.0 {
            let quad = diag[i] + diag[t] - 2.0 * row_i[t];
            let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
            if obj <= best {
                best = obj;
                j_sel = Some(t);
            }
        }
    }
    if gmax + gmax2 < tolerance {
        return None;
    }
    j_sel.map(|j| (i, j))
}

fn compute_rho(ys: &[f64], bounds: &[f64], alpha: &[f64], grad: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut free = 0usize;
    for k in 0..ys.len() {
        let yg = ys[k] * grad[k];
        if alpha[k] >= bounds[k] {
            if ys[k] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[k] <= 0.0 {
            if ys[k] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
