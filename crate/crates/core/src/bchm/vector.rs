use super::{CorrectionOutcome, Repair};
use crate::base::Bounds;
use crate::error::{Error, Result};

/// Largest step along `reference -> y` that stays in the box.
///
/// Per component: `(R_i - a_i) / (R_i - y_i)` below the box,
/// `(b_i - R_i) / (y_i - R_i)` above it, and 1 when feasible; the result is
/// the minimum over components.
pub fn vector_alpha(y: &[f64], reference: &[f64], bounds: &Bounds) -> Result<f64> {
    bounds.check_dim(y)?;
    bounds.check_dim(reference)?;
    let mut alpha: f64 = 1.0;
    for i in 0..y.len() {
        let (a, b) = (bounds.lower()[i], bounds.upper()[i]);
        let (yi, ri) = (y[i], reference[i]);
        let ai = if yi < a {
            if ri == yi {
                return Err(Error::DegenerateReference(i));
            }
            (ri - a) / (ri - yi)
        } else if yi > b {
            if ri == yi {
                return Err(Error::DegenerateReference(i));
            }
            (b - ri) / (yi - ri)
        } else {
            1.0
        };
        alpha = alpha.min(ai);
    }
    Ok(alpha.clamp(0.0, 1.0))
}

/// `c = alpha y + (1 - alpha) R`: the point where the segment from the
/// reference to `y` leaves the box. Moves every component.
pub fn vector_correct(y: &[f64], reference: &[f64], bounds: &Bounds) -> Result<CorrectionOutcome> {
    let alpha = vector_alpha(y, reference, bounds)?;
    let mut c: Vec<f64> = y.iter().zip(reference).map(|(yi, ri)| alpha * yi + (1.0 - alpha) * ri).collect();
    // absorbs last-ulp overshoot on the binding component
    bounds.clamp_in_place(&mut c);
    let mut out = CorrectionOutcome::corrected(y, c);
    out.vector_alpha = Some(alpha);
    debug_assert!(matches!(out.result, Repair::Corrected(_)));
    Ok(out)
}
