//! Seeded generators for the simulation designs: three base distributions
//! crossed with four location/scale shift models, plus a synthetic
//! mixture-drift scenario and CSV ingestion for real data.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ClientSample;
use crate::permtest::client_from_points;
use crate::seed;

/// Shift structure across the X and Y generators of each client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Same mean, same variance.
    A,
    /// Same mean, different variance.
    B,
    /// Different mean, same variance.
    C,
    /// Different mean, different variance.
    D,
}

/// Base distribution family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dist {
    Normal,
    LogNormal,
    /// Multivariate t with 5 degrees of freedom.
    T5,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    pub model: Model,
    pub dist: Dist,
    pub clients: usize,
    pub dim: usize,
    pub m: usize,
    pub n: usize,
    /// Standard deviation of the per-client mean/variance shifts.
    pub shift_sd: f64,
    pub seed: u64,
}

impl ModelConfig {
    fn validate(&self) -> Result<()> {
        if self.clients == 0 || self.dim == 0 || self.m == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("K, d, m, n must be >= 1"));
        }
        if self.shift_sd < 0.0 {
            return Err(Error::InvalidParameter("shift_sd must be >= 0"));
        }
        Ok(())
    }
}

/// Per-client generator parameters: mean vector, scale (standard deviation)
/// vector, and the shifts applied to the Y side.
struct ClientParams {
    mean: Vec<f64>,
    scale: Vec<f64>,
    mean_shift: Vec<f64>,
    scale_shift: Vec<f64>,
}

/// Scales stay bounded away from zero when a negative shift would otherwise
/// push r_k + ε_k below it.
const MIN_SD: f64 = 1e-3;

fn draw_params(cfg: &ModelConfig, rng: &mut impl Rng) -> ClientParams {
    let mean_dist = Uniform::new_inclusive(-1.0, 1.0);
    let scale_dist = Uniform::new_inclusive(0.8, 1.2);
    let d = cfg.dim;
    let mean: Vec<f64> = (0..d).map(|_| mean_dist.sample(rng)).collect();
    let scale: Vec<f64> = (0..d).map(|_| scale_dist.sample(rng)).collect();
    let normal_shift =
        |rng: &mut dyn rand::RngCore| -> f64 {
            let z: f64 = StandardNormal.sample(rng);
            z * cfg.shift_sd
        };
    let (mut mean_shift, mut scale_shift) = (vec![0.0; d], vec![0.0; d]);
    if matches!(cfg.model, Model::C | Model::D) {
        mean_shift = (0..d).map(|_| normal_shift(rng)).collect();
    }
    if matches!(cfg.model, Model::B | Model::D) {
        scale_shift = (0..d).map(|_| normal_shift(rng)).collect();
    }
    ClientParams { mean, scale, mean_shift, scale_shift }
}

fn sample_points(
    dist: Dist,
    mean: &[f64],
    scale: &[f64],
    count: usize,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    let d = mean.len();
    let sd: Vec<f64> = scale.iter().map(|v| v.max(MIN_SD)).collect();
    let chi5 = ChiSquared::new(5.0).unwrap();
    (0..count)
        .map(|_| {
            // t5 scaling is shared across coordinates of one point.
            let t_scale = match dist {
                Dist::T5 => {
                    let chi: f64 = chi5.sample(rng);
                    (5.0 / chi).sqrt()
                }
                _ => 1.0,
            };
            (0..d)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(rng);
                    let g = mean[i] + sd[i] * z * t_scale;
                    match dist {
                        Dist::LogNormal => g.exp(),
                        _ => g,
                    }
                })
                .collect()
        })
        .collect()
}

/// Draws K clients under the configured model. Shifts for log-normal clients
/// apply to the underlying normal parameters.
pub fn sample_model(cfg: &ModelConfig) -> Result<Vec<ClientSample>> {
    cfg.validate()?;
    let mut clients = Vec::with_capacity(cfg.clients);
    for k in 0..cfg.clients {
        let mut rng = seed::rng(seed::derive(cfg.seed, k as u64));
        let params = draw_params(cfg, &mut rng);
        let y_mean: Vec<f64> = params
            .mean
            .iter()
            .zip(&params.mean_shift)
            .map(|(u, e)| u + e)
            .collect();
        let y_scale: Vec<f64> = params
            .scale
            .iter()
            .zip(&params.scale_shift)
            .map(|(r, e)| (r + e).max(MIN_SD))
            .collect();
        let xs = sample_points(cfg.dist, &params.mean, &params.scale, cfg.m, &mut rng);
        let ys = sample_points(cfg.dist, &y_mean, &y_scale, cfg.n, &mut rng);
        clients.push(client_from_points(k as u64, xs, ys)?);
    }
    Ok(clients)
}

/// Mixture-drift scenario: each client owns one Gaussian component; the Y
/// sample keeps the client's component with probability epsilon and falls
/// back to the global mixture otherwise.
#[derive(Debug, Clone)]
pub struct DriftConfig {
    pub clients: usize,
    /// Probability of drawing from the client's own component.
    pub epsilon: f64,
    /// Component mean per client (all share `component_sd`).
    pub component_means: Vec<Vec<f64>>,
    pub component_sd: f64,
    pub sample_size: usize,
    pub seed: u64,
}

impl DriftConfig {
    /// K well-separated 2-D components on a circle, the default layout.
    pub fn circle(clients: usize, epsilon: f64, sample_size: usize, seed: u64) -> Self {
        let component_means = (0..clients)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / clients as f64;
                vec![3.0 * angle.cos(), 3.0 * angle.sin()]
            })
            .collect();
        DriftConfig { clients, epsilon, component_means, component_sd: 1.0, sample_size, seed }
    }
}

pub fn sample_drift(cfg: &DriftConfig) -> Result<Vec<ClientSample>> {
    if cfg.clients == 0 || cfg.sample_size == 0 {
        return Err(Error::InvalidParameter("K and m must be >= 1"));
    }
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(Error::InvalidParameter("epsilon must be in [0, 1]"));
    }
    if cfg.component_means.len() != cfg.clients {
        return Err(Error::SizeMismatch("one component mean per client required"));
    }
    let d = cfg.component_means[0].len();
    let gaussian = |mean: &[f64], rng: &mut dyn rand::RngCore| -> Vec<f64> {
        mean.iter()
            .map(|mu| {
                let z: f64 = StandardNormal.sample(rng);
                mu + cfg.component_sd * z
            })
            .collect()
    };
    let mut clients = Vec::with_capacity(cfg.clients);
    for k in 0..cfg.clients {
        if cfg.component_means[k].len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: cfg.component_means[k].len() });
        }
        let mut rng = seed::rng(seed::derive(cfg.seed, k as u64));
        let xs: Vec<Vec<f64>> = (0..cfg.sample_size)
            .map(|_| gaussian(&cfg.component_means[k], &mut rng))
            .collect();
        let ys: Vec<Vec<f64>> = (0..cfg.sample_size)
            .map(|_| {
                if rng.gen::<f64>() < cfg.epsilon {
                    gaussian(&cfg.component_means[k], &mut rng)
                } else {
                    let pick = rng.gen_range(0..cfg.clients);
                    gaussian(&cfg.component_means[pick], &mut rng)
                }
            })
            .collect();
        clients.push(client_from_points(k as u64, xs, ys)?);
    }
    Ok(clients)
}

/// Loads one client's sample pair from two CSV files (header row, one point
/// per line).
pub fn load_client_csv(
    client_id: u64,
    xs_path: &std::path::Path,
    ys_path: &std::path::Path,
) -> Result<ClientSample> {
    let xs = read_points(xs_path)?;
    let ys = read_points(ys_path)?;
    client_from_points(client_id, xs, ys)
}

fn read_points(path: &std::path::Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        let point: std::result::Result<Vec<f64>, _> =
            record.iter().map(|field| field.trim().parse::<f64>()).collect();
        points.push(point.map_err(|e| Error::CsvParse(format!("{}: {e}", path.display())))?);
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("csv file has no data rows"));
    }
    Ok(points)
}
