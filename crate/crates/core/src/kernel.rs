//! ITD aggregation over clients: sample-size weights, the weighted p-mean of
//! per-client Wasserstein distances, and the diagnostic quantities used by
//! the variance and concentration checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::{wasserstein_p, PointCloud};

/// One client's pair of labeled samples.
#[derive(Debug, Clone)]
pub struct ClientSample {
    pub client_id: u64,
    pub xs: PointCloud,
    pub ys: PointCloud,
}

impl ClientSample {
    pub fn new(client_id: u64, xs: PointCloud, ys: PointCloud) -> Result<Self> {
        if xs.dim() != ys.dim() {
            return Err(Error::DimensionMismatch { expected: xs.dim(), got: ys.dim() });
        }
        Ok(Self { client_id, xs, ys })
    }
}

/// Positive per-client weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientWeightVector(Vec<f64>);

impl ClientWeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput("client weights"));
        }
        let sum = kahan_sum(weights.iter().cloned());
        if weights.iter().any(|w| *w <= 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(sum));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyInput("client weights"));
        }
        let mut w = vec![1.0 / k as f64; k];
        renormalize(&mut w);
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Weighted aggregate of per-client squared W2 distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ITDStatistic {
    /// ITD² = Σ w_k · W2²(P_m^k, Q_n^k).
    pub value: f64,
    /// Per-client W2² contributions, in weight order.
    pub per_client: Vec<ClientDistance>,
}

/// One client's squared distance, tagged with its id. Kept as a named pair
/// so serialized reports stay flat: ids and scalars, never coordinate lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientDistance {
    pub client_id: u64,
    pub w2_squared: f64,
}

/// Compensated summation; order-stable to well below 1e-12.
pub fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn renormalize(w: &mut [f64]) {
    let sum = kahan_sum(w.iter().cloned());
    for x in w.iter_mut() {
        *x /= sum;
    }
}

/// Sample-size weights ω_k = m_k/(2M) + n_k/(2N), renormalized to kill
/// rounding drift. Equal sizes reduce to 1/K.
pub fn client_weights(m_sizes: &[usize], n_sizes: &[usize]) -> Result<ClientWeightVector> {
    if m_sizes.is_empty() {
        return Err(Error::EmptyInput("client sizes"));
    }
    if m_sizes.len() != n_sizes.len() {
        return Err(Error::SizeMismatch("m and n size lists differ in length"));
    }
    if m_sizes.iter().chain(n_sizes).any(|&s| s == 0) {
        return Err(Error::InvalidParameter("client sample sizes must be >= 1"));
    }
    let total_m: usize = m_sizes.iter().sum();
    let total_n: usize = n_sizes.iter().sum();
    let mut w: Vec<f64> = m_sizes
        .iter()
        .zip(n_sizes)
        .map(|(&m, &n)| m as f64 / (2.0 * total_m as f64) + n as f64 / (2.0 * total_n as f64))
        .collect();
    renormalize(&mut w);
    ClientWeightVector::new(w)
}

/// Weighted p-mean (Σ w_k d_k^p)^(1/p) of per-client W_p distances.
pub fn itd_p(distances: &[f64], weights: &ClientWeightVector, p: f64) -> Result<f64> {
    if distances.len() != weights.len() {
        return Err(Error::SizeMismatch("distances and weights differ in length"));
    }
    if p < 1.0 {
        return Err(Error::InvalidOrder(p));
    }
    if let Some(&d) = distances.iter().find(|&&d| d < 0.0) {
        return Err(Error::NegativeDistance(d));
    }
    let sum = kahan_sum(
        distances
            .iter()
            .zip(weights.as_slice())
            .map(|(d, w)| w * d.powf(p)),
    );
    Ok(sum.max(0.0).powf(1.0 / p))
}

/// The second-order empirical ITD: per-client exact W2² aggregated with the
/// client weights.
pub fn empirical_itd2(
    clients: &[ClientSample],
    weights: &ClientWeightVector,
) -> Result<ITDStatistic> {
    if clients.is_empty() {
        return Err(Error::EmptyInput("clients"));
    }
    if clients.len() != weights.len() {
        return Err(Error::SizeMismatch("clients and weights differ in length"));
    }
    let mut per_client = Vec::with_capacity(clients.len());
    for client in clients {
        let w2 = wasserstein_p(&client.xs, &client.ys, 2.0)?;
        per_client.push(ClientDistance { client_id: client.client_id, w2_squared: w2 * w2 });
    }
    Ok(aggregate_itd2(per_client, weights))
}

/// Aggregates already-computed per-client W2² values (the coordinator path,
/// where distances arrive as scalars).
pub fn aggregate_itd2(per_client: Vec<ClientDistance>, weights: &ClientWeightVector) -> ITDStatistic {
    let value = kahan_sum(
        per_client
            .iter()
            .zip(weights.as_slice())
            .map(|(d, w)| w * d.w2_squared),
    );
    ITDStatistic { value, per_client }
}

/// Variance of the limiting Gaussian: Σ w_k (v_k − ITD^p)².
pub fn clt_variance(
    per_client_values: &[f64],
    weights: &ClientWeightVector,
    itd_p_value: f64,
) -> Result<f64> {
    if per_client_values.len() != weights.len() {
        return Err(Error::SizeMismatch("values and weights differ in length"));
    }
    Ok(kahan_sum(
        per_client_values
            .iter()
            .zip(weights.as_slice())
            .map(|(v, w)| w * (v - itd_p_value) * (v - itd_p_value)),
    )
    .max(0.0))
}

/// Large-deviation bound on P(ITD² − E[ITD²] > t):
/// exp(−K m n t² / (2 (m+n) (Dx+Dy)²)).
pub fn concentration_bound(
    clients: usize,
    m: usize,
    n: usize,
    dx: f64,
    dy: f64,
    t: f64,
) -> Result<f64> {
    if clients == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidParameter("K, m, n must be positive"));
    }
    if dx <= 0.0 || dy <= 0.0 || t < 0.0 {
        return Err(Error::InvalidParameter("Dx, Dy must be positive and t >= 0"));
    }
    let (k, m, n) = (clients as f64, m as f64, n as f64);
    let exponent = -(k * m * n * t * t) / (2.0 * (m + n) * (dx + dy) * (dx + dy));
    Ok(exponent.exp().clamp(0.0, 1.0))
}
