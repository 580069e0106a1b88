//! Exact and entropic discrete optimal transport between weighted point clouds.
//!
//! The exact solver is a network simplex on the bipartite transportation
//! graph; the entropic solver runs log-domain Sinkhorn iterations. A sorted
//! 1-D matching routine serves as an independent oracle for testing.

mod simplex;
mod sinkhorn;

pub use sinkhorn::{sinkhorn_divergence, solve_sinkhorn, SinkhornResult};

use crate::error::{Error, Result};

/// Tolerance for "weights sum to 1" on input.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance for marginal feasibility of returned plans.
pub const MARGINAL_TOL: f64 = 1e-9;

/// A discrete measure: support points with nonnegative weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("point cloud"));
        }
        if points.len() != weights.len() {
            return Err(Error::SizeMismatch("points and weights differ in length"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        // Compensated sum: naive accumulation drifts past the tolerance for
        // uniform weights over ~1e5 points.
        let sum = crate::kernel::kahan_sum(weights.iter().cloned());
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > WEIGHT_SUM_TOL
        {
            return Err(Error::InvalidWeights(sum));
        }
        Ok(Self { points, weights })
    }

    /// Uniform weights 1/n over the given points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::EmptyInput("point cloud"));
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Pairwise ground costs ‖x_i − y_j‖^p.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    entries: Vec<f64>,
    rows: usize,
    cols: usize,
    order: f64,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// An optimal coupling together with its objective value W_p^p.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub plan: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub value: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.rows];
        for i in 0..self.rows {
            for j in 0..self.cols {
                sums[i] += self.get(i, j);
            }
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                sums[j] += self.get(i, j);
            }
        }
        sums
    }
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Builds the cost matrix D_ij = ‖x_i − y_j‖^p.
pub fn cost_matrix(xs: &[Vec<f64>], ys: &[Vec<f64>], p: f64) -> Result<CostMatrix> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("cost matrix support"));
    }
    if p < 1.0 {
        return Err(Error::InvalidOrder(p));
    }
    let dim = xs[0].len();
    for (i, pt) in xs.iter().chain(ys.iter()).enumerate() {
        if pt.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: pt.len() });
        }
        if pt.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
    }
    let (m, n) = (xs.len(), ys.len());
    let mut entries = Vec::with_capacity(m * n);
    for x in xs {
        for y in ys {
            let d = euclidean(x, y);
            entries.push(if p == 2.0 {
                d * d
            } else if p == 1.0 {
                d
            } else {
                d.powf(p)
            });
        }
    }
    Ok(CostMatrix { entries, rows: m, cols: n, order: p })
}

/// Solves the discrete transportation problem exactly.
///
/// Returns the optimal coupling and its value Σ D_ij π_ij = W_p^p.
pub fn solve_exact(cost: &CostMatrix, wx: &[f64], wy: &[f64]) -> Result<TransportPlan> {
    if wx.len() != cost.rows() || wy.len() != cost.cols() {
        return Err(Error::SizeMismatch("weights do not match cost dimensions"));
    }
    let sx: f64 = wx.iter().sum();
    let sy: f64 = wy.iter().sum();
    if (sx - sy).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals((sx - sy).abs()));
    }
    simplex::solve(cost, wx, wy)
}

/// The p-Wasserstein distance between two weighted point clouds.
pub fn wasserstein_p(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let cost = cost_matrix(a.points(), b.points(), p)?;
    let plan = solve_exact(&cost, a.weights(), b.weights())?;
    Ok(plan.value.max(0.0).powf(1.0 / p))
}

/// 1-D oracle: for equal-size uniform samples, sorted order-statistics
/// matching is the optimal coupling.
pub fn wasserstein_1d_sorted(a: &PointCloud, b: &PointCloud, p: f64) -> Result<f64> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: a.dim().max(b.dim()) });
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch("1-D oracle requires equal sizes"));
    }
    let uniform = 1.0 / a.len() as f64;
    if a.weights().iter().chain(b.weights()).any(|w| (w - uniform).abs() > 1e-9) {
        return Err(Error::SizeMismatch("1-D oracle requires uniform weights"));
    }
    if p < 1.0 {
        return Err(Error::InvalidOrder(p));
    }
    let mut xs: Vec<f64> = a.points().iter().map(|pt| pt[0]).collect();
    let mut ys: Vec<f64> = b.points().iter().map(|pt| pt[0]).collect();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let sum: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - y).abs().powf(p))
        .sum::<f64>()
        / xs.len() as f64;
    Ok(sum.powf(1.0 / p))
}

#[cfg(test)]
mod tests;
