use rand::Rng;

use super::component::uniform_component;
use super::{CorrectionOutcome, Repair};
use crate::base::{Bounds, PopulationStats};
use crate::rng::Dist;

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Per-component Beta shapes matching the population's normalised mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFitParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Normalised mean, kept in `[epsilon, 1 - epsilon]`.
    pub m: Vec<f64>,
    /// Normalised variance.
    pub v: Vec<f64>,
    pub epsilon: f64,
    /// Components whose moments are not Beta-representable; they resample uniformly.
    pub fallback_mask: Vec<bool>,
}

/// Method-of-moments Beta fit:
/// `alpha = m (m (1 - m) / v - 1)`, `beta = alpha (1 - m) / m`.
pub fn fit_beta_params(stats: &PopulationStats, bounds: &Bounds, epsilon: f64) -> BetaFitParams {
    let n = bounds.dim();
    let mut out = BetaFitParams {
        alpha: vec![0.0; n],
        beta: vec![0.0; n],
        m: vec![0.0; n],
        v: vec![0.0; n],
        epsilon,
        fallback_mask: vec![false; n],
    };
    for i in 0..n {
        let (a, w) = (bounds.lower()[i], bounds.width(i));
        let m = ((stats.mean[i] - a) / w).clamp(epsilon, 1.0 - epsilon);
        let v = stats.variance[i] / (w * w);
        let alpha = m * (m * (1.0 - m) / v - 1.0);
        let beta = alpha * (1.0 - m) / m;
        out.m[i] = m;
        out.v[i] = v;
        out.alpha[i] = alpha;
        out.beta[i] = beta;
        out.fallback_mask[i] = !(v > 0.0 && alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite());
    }
    out
}

/// Replace every violated component with `a + B (b - a)`, `B ~ Beta(alpha_i, beta_i)`.
pub fn beta_correct<R: Rng + ?Sized>(
    y: &[f64],
    bounds: &Bounds,
    params: &BetaFitParams,
    rng: &mut R,
) -> CorrectionOutcome {
    let mut c = y.to_vec();
    let mut changed = 0;
    for (i, v) in c.iter_mut().enumerate() {
        if bounds.component_feasible(i, *v) {
            continue;
        }
        changed += 1;
        let (a, b) = (bounds.lower()[i], bounds.upper()[i]);
        if params.fallback_mask[i] {
            *v = uniform_component(a, b, rng);
        } else {
            let dist = Dist::Beta { alpha: params.alpha[i], beta: params.beta[i] };
            *v = (a + dist.sample(rng) * (b - a)).clamp(a, b);
        }
    }
    CorrectionOutcome { result: Repair::Corrected(c), components_corrected: changed, vector_alpha: None }
}
