//! Two-level head averaging: within each orbit, then across orbits.

use crate::error::SimError;

/// Running (weighted) mean. Averaging identical vectors returns them exactly.
#[derive(Debug, Clone)]
struct RunningMean {
    mean: Vec<f64>,
    weight: f64,
}

impl RunningMean {
    fn new(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], weight: 0.0 }
    }

    fn push(&mut self, x: &[f64], w: f64) {
        if w == 0.0 {
            return;
        }
        self.weight += w;
        let k = w / self.weight;
        for (m, v) in self.mean.iter_mut().zip(x) {
            *m += k * (v - *m);
        }
    }
}

/// Averages `heads[p][n]` first per orbit, then over orbits.
///
/// Without weights both levels are plain means. With per-satellite weights
/// (dataset sizes) the orbit mean uses `m_pn / m_p` and the global mean
/// `m_p / m`, which equals the flat weighted average.
pub fn hierarchical_aggregate(heads: &[Vec<Vec<f64>>], weights: Option<&[Vec<f64>]>) -> Result<Vec<f64>, SimError> {
    let dim = heads
        .iter()
        .flat_map(|orbit| orbit.first())
        .map(Vec::len)
        .next()
        .ok_or_else(|| SimError::InvalidInput("no heads to aggregate".into()))?;
    if let Some(w) = weights {
        if w.len() != heads.len() || w.iter().zip(heads).any(|(wo, ho)| wo.len() != ho.len()) {
            return Err(SimError::InvalidInput("weights must match the head layout".into()));
        }
        if w.iter().flatten().any(|&x| !(x >= 0.0)) {
            return Err(SimError::InvalidInput("weights must be non-negative".into()));
        }
    }
    let mut global = RunningMean::new(dim);
    for (p, orbit) in heads.iter().enumerate() {
        if orbit.is_empty() {
            return Err(SimError::InvalidInput(format!("orbit {} has no heads", p + 1)));
        }
        let mut local = RunningMean::new(dim);
        for (n, head) in orbit.iter().enumerate() {
            if head.len() != dim {
                return Err(SimError::InvalidInput(format!(
                    "head of satellite {}.{} has dimension {}, expected {dim}",
                    p + 1,
                    n + 1,
                    head.len()
                )));
            }
            local.push(head, weights.map_or(1.0, |w| w[p][n]));
        }
        let orbit_weight = if weights.is_some() { local.weight } else { 1.0 };
        global.push(&local.mean, orbit_weight);
    }
    if global.weight == 0.0 {
        return Err(SimError::InvalidInput("all weights are zero".into()));
    }
    Ok(global.mean)
}

/// Plain mean of every head, used as a reference.
pub fn flat_mean(heads: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let all: Vec<&Vec<f64>> = heads.iter().flatten().collect();
    let dim = all.first().map_or(0, |h| h.len());
    let mut out = vec![0.0; dim];
    for h in &all {
        for (o, v) in out.iter_mut().zip(h.iter()) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= all.len() as f64);
    out
}
