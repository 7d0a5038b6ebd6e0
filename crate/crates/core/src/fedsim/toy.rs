//! A small exact federated fine-tuning problem.
//!
//! A fixed random linear map stands in for the frozen backbone; only a
//! linear head on top of it is trained. Each round every satellite takes one
//! gradient step on its own data and the heads are averaged hierarchically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

use super::aggregate::hierarchical_aggregate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `(phi . w - y)^2 / 2`
    Quadratic,
    /// `log(1 + exp(-y phi . w))` with labels in `{-1, 1}`
    Logistic,
}

/// Frozen random linear feature map, `phi = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub input_dim: usize,
    pub feature_dim: usize,
    weights: Vec<f64>,
}

impl FeatureMap {
    pub fn random(input_dim: usize, feature_dim: usize, rng: &mut impl Rng) -> Self {
        let scale = 1.0 / (input_dim as f64).sqrt();
        let weights = (0..input_dim * feature_dim).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        Self { input_dim, feature_dim, weights }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.feature_dim)
            .map(|k| self.weights[k * self.input_dim..(k + 1) * self.input_dim].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// One satellite's samples, already passed through the feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl LocalDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean loss of head `w` on `data`.
pub fn loss(w: &[f64], data: &LocalDataset, kind: Loss) -> f64 {
    let total: f64 = data
        .features
        .iter()
        .zip(&data.targets)
        .map(|(phi, &y)| {
            let z = dot(phi, w);
            match kind {
                Loss::Quadratic => 0.5 * (z - y).powi(2),
                Loss::Logistic => softplus(-y * z),
            }
        })
        .sum();
    total / data.len() as f64
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
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

/// Analytic gradient of [`loss`].
pub fn gradient(w: &[f64], data: &LocalDataset, kind: Loss) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    for (phi, &y) in data.features.iter().zip(&data.targets) {
        let z = dot(phi, w);
        let coef = match kind {
            Loss::Quadratic => z - y,
            Loss::Logistic => -y * sigmoid(-y * z),
        };
        g.iter_mut().zip(phi).for_each(|(gi, p)| *gi += coef * p);
    }
    let m = data.len() as f64;
    g.iter_mut().for_each(|gi| *gi /= m);
    g
}

/// Federated problem laid out as `datasets[plane][slot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyProblem {
    pub feature_map: FeatureMap,
    pub datasets: Vec<Vec<LocalDataset>>,
    pub loss: Loss,
}

impl ToyProblem {
    /// Synthetic data from a hidden linear teacher plus noise.
    pub fn synthetic(
        seed: u64,
        planes: usize,
        sats_per_plane: usize,
        samples: usize,
        input_dim: usize,
        feature_dim: usize,
        loss: Loss,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feature_map = FeatureMap::random(input_dim, feature_dim, &mut rng);
        let teacher: Vec<f64> = (0..feature_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let datasets = (0..planes)
            .map(|_| {
                (0..sats_per_plane)
                    .map(|_| {
                        let mut features = Vec::with_capacity(samples);
                        let mut targets = Vec::with_capacity(samples);
                        for _ in 0..samples {
                            let x: Vec<f64> = (0..input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                            let phi = feature_map.apply(&x);
                            let clean = dot(&phi, &teacher);
                            let y = match loss {
                                Loss::Quadratic => clean + 0.1 * rng.random_range(-1.0..1.0),
                                Loss::Logistic => {
                                    if rng.random::<f64>() < sigmoid(4.0 * clean) {
                                        1.0
                                    } else {
                                        -1.0
                                    }
                                }
                            };
                            features.push(phi);
                            targets.push(y);
                        }
                        LocalDataset { features, targets }
                    })
                    .collect()
            })
            .collect();
        Self { feature_map, datasets, loss }
    }

    /// Local sample counts, `[plane][slot]`.
    pub fn sample_counts(&self) -> Vec<Vec<f64>> {
        self.datasets.iter().map(|o| o.iter().map(|d| d.len() as f64).collect()).collect()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_map.feature_dim
    }

    /// Every sample pooled, as a central server would see them.
    pub fn pooled(&self) -> LocalDataset {
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for d in self.datasets.iter().flatten() {
            features.extend(d.features.iter().cloned());
            targets.extend(d.targets.iter().copied());
        }
        LocalDataset { features, targets }
    }

    /// Sample-weighted loss over all satellites.
    pub fn global_loss(&self, w: &[f64]) -> f64 {
        loss(w, &self.pooled(), self.loss)
    }

    /// Smoothness constant of the pooled objective: the largest eigenvalue
    /// of the feature second-moment matrix (a quarter of it for logistic).
    pub fn smoothness(&self) -> f64 {
        let pooled = self.pooled();
        let d = self.feature_dim();
        let mut v = vec![1.0 / (d as f64).sqrt(); d];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut next = vec![0.0; d];
            for phi in &pooled.features {
                let c = dot(phi, &v);
                next.iter_mut().zip(phi).for_each(|(n, p)| *n += c * p);
            }
            next.iter_mut().for_each(|n| *n /= pooled.len() as f64);
            let norm = dot(&next, &next).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let converged = (norm - lambda).abs() <= 1e-12 * norm;
            lambda = norm;
            v = next.into_iter().map(|x| x / norm).collect();
            if converged {
                break;
            }
        }
        match self.loss {
            Loss::Quadratic => lambda,
            Loss::Logistic => 0.25 * lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRound {
    /// Aggregated head, now held by every satellite.
    pub global_head: Vec<f64>,
    /// Local losses before the step, `[plane][slot]`.
    pub local_losses: Vec<Vec<f64>>,
    /// Pooled loss of the aggregated head.
    pub global_loss: f64,
}

/// One local gradient step per satellite followed by hierarchical averaging.
/// `weights`, if given, are per-satellite aggregation weights.
pub fn toy_fedavg_round(
    problem: &ToyProblem,
    heads: &[Vec<Vec<f64>>],
    eta: f64,
    weights: Option<&[Vec<f64>]>,
) -> Result<ToyRound, SimError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(SimError::InvalidInput(format!("learning rate must be positive, got {eta}")));
    }
    if heads.len() != problem.datasets.len() || heads.iter().zip(&problem.datasets).any(|(h, d)| h.len() != d.len()) {
        return Err(SimError::InvalidInput("heads must match the dataset layout".into()));
    }
    let mut local_losses = Vec::with_capacity(heads.len());
    let updated: Vec<Vec<Vec<f64>>> = heads
        .iter()
        .zip(&problem.datasets)
        .map(|(orbit, data)| {
            let mut losses = Vec::with_capacity(orbit.len());
            let next = orbit
                .iter()
                .zip(data)
                .map(|(w, d)| {
                    losses.push(loss(w, d, problem.loss));
                    let g = gradient(w, d, problem.loss);
                    w.iter().zip(&g).map(|(wi, gi)| wi - eta * gi).collect()
                })
                .collect();
            local_losses.push(losses);
            next
        })
        .collect();
    let global_head = hierarchical_aggregate(&updated, weights)?;
    let global_loss = problem.global_loss(&global_head);
    Ok(ToyRound { global_head, local_losses, global_loss })
}

/// Runs `rounds` rounds from a zero head. Returns the pooled loss before
/// the first round followed by the loss after each round.
pub fn run_toy_fedavg(
    problem: &ToyProblem,
    eta: f64,
    rounds: usize,
    weights: Option<&[Vec<f64>]>,
) -> Result<Vec<f64>, SimError> {
    let d = problem.feature_dim();
    let mut head = vec![0.0; d];
    let mut out = vec![problem.global_loss(&head)];
    for _ in 0..rounds {
        let heads: Vec<Vec<Vec<f64>>> = problem.datasets.iter().map(|o| vec![head.clone(); o.len()]).collect();
        let r = toy_fedavg_round(problem, &heads, eta, weights)?;
        head = r.global_head;
        out.push(r.global_loss);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_decreases_with_safe_step() {
        let p = ToyProblem::synthetic(7, 2, 3, 10, 6, 4, Loss::Quadratic);
        let eta = 0.5 / p.smoothness();
        let losses = run_toy_fedavg(&p, eta, 20, None).unwrap();
        assert!(losses.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn non_positive_rate_rejected() {
        let p = ToyProblem::synthetic(1, 1, 2, 4, 3, 2, Loss::Logistic);
        let heads = vec![vec![vec![0.0; 2]; 2]];
        assert!(toy_fedavg_round(&p, &heads, 0.0, None).is_err());
        assert!(toy_fedavg_round(&p, &heads, -1.0, None).is_err());
    }

    #[test]
    fn gradient_matches_central_difference() {
        for kind in [Loss::Quadratic, Loss::Logistic] {
            let p = ToyProblem::synthetic(3, 1, 1, 12, 5, 4, kind);
            let d = &p.datasets[0][0];
            let w = vec![0.3, -0.2, 0.7, 0.1];
            let g = gradient(&w, d, kind);
            for i in 0..w.len() {
                let h = 1e-5;
                let mut up = w.clone();
                let mut dn = w.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (loss(&up, d, kind) - loss(&dn, d, kind)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3), "{kind:?} {i}: {fd} vs {}", g[i]);
            }
        }
    }
}
