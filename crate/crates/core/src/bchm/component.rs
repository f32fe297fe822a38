use rand::Rng;

use super::CorrectionOutcome;
use crate::base::Bounds;
use crate::error::Result;

/// Map each violated component with `f(i, y_i)`; feasible components are copied.
fn per_component(y: &[f64], bounds: &Bounds, mut f: impl FnMut(usize, f64) -> f64) -> CorrectionOutcome {
    let mut changed = 0;
    let c = y
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if bounds.component_feasible(i, v) {
                v
            } else {
                changed += 1;
                f(i, v)
            }
        })
        .collect();
    CorrectionOutcome { result: super::Repair::Corrected(c), components_corrected: changed, vector_alpha: None }
}

/// Put every violated component on the bound it crossed.
pub fn saturate(y: &[f64], bounds: &Bounds) -> CorrectionOutcome {
    per_component(y, bounds, |i, v| v.clamp(bounds.lower()[i], bounds.upper()[i]))
}

/// Reflect `v` into `[a, b]`.
///
/// One reflection (`2a - v` or `2b - v`) handles any violation shorter than
/// the interval width. Longer violations keep reflecting off alternate bounds,
/// which is the same as folding `v - a` modulo `2(b - a)`.
pub fn mirror_component(v: f64, a: f64, b: f64) -> f64 {
    let once = if v < a {
        2.0 * a - v
    } else if v > b {
        2.0 * b - v
    } else {
        v
    };
    if (a..=b).contains(&once) {
        return once;
    }
    let w = b - a;
    let t = (v - a).rem_euclid(2.0 * w);
    let folded = if t > w { a + (2.0 * w - t) } else { a + t };
    folded.clamp(a, b)
}

pub fn mirror(y: &[f64], bounds: &Bounds) -> CorrectionOutcome {
    per_component(y, bounds, |i, v| mirror_component(v, bounds.lower()[i], bounds.upper()[i]))
}

/// Replace every violated component by a uniform draw over its interval.
pub fn uniform_resample<R: Rng + ?Sized>(y: &[f64], bounds: &Bounds, rng: &mut R) -> CorrectionOutcome {
    per_component(y, bounds, |i, _| uniform_component(bounds.lower()[i], bounds.upper()[i], rng))
}

pub(super) fn uniform_component<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (a + (b - a) * u).clamp(a, b)
}

/// Exponentially confined value for one violated component, given the unit draw `r`.
///
/// Lower violations land in `[a, reference]` with density decaying away from
/// `a`; upper violations land in `[reference, b]`. `r = 0` gives the violated
/// lower bound and `r = 1` the reference (mirrored roles for the upper bound).
pub fn exp_confined_component(y: f64, a: f64, b: f64, reference: f64, r: f64) -> f64 {
    let c = if y < a {
        a - (r * (a - reference).exp_m1()).ln_1p()
    } else if y > b {
        b + ((1.0 - r) * (reference - b).exp_m1()).ln_1p()
    } else {
        return y;
    };
    c.clamp(a, b)
}

pub fn exp_confined<R: Rng + ?Sized>(
    y: &[f64],
    bounds: &Bounds,
    reference: &[f64],
    rng: &mut R,
) -> Result<CorrectionOutcome> {
    bounds.check_dim(reference)?;
    Ok(per_component(y, bounds, |i, v| {
        let r: f64 = rng.random();
        exp_confined_component(v, bounds.lower()[i], bounds.upper()[i], reference[i], r)
    }))
}
