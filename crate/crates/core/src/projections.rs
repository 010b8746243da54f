//! Feasible-set projections used by the solver: probability simplex, scalar
//! box, total-power ball, and the unit sphere.
//!
//! The simplex projection follows the shifted-threshold characterization
//! `y(ι) = [x − ι]⁺` with `ι` found by bisection on the sum constraint. The
//! power-ball projection uses the analytic radial form instead of a root
//! search — projecting onto a Euclidean ball is exactly a uniform rescale.

use crate::error::{Error, Result};
use crate::numerics::CVec;
use crate::sop::BeamformerSet;

/// Euclidean projection onto `{y ≥ 0, Σ y_i = 1}`.
pub fn project_simplex(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::InvalidDimension(
            "cannot project an empty vector onto the simplex".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("simplex projection needs finite input".into()));
    }
    let sum_at = |iota: f64| -> f64 { x.iter().map(|v| (v - iota).max(0.0)).sum() };
    let mut lo = x.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // sum_at(lo) ≥ 1 + n·0 ≥ 1 ≥ sum_at(hi) = 0; sum_at is decreasing. The
    // tolerance is relative to the bracket magnitude — an absolute tolerance
    // below the floating-point spacing would never be reached for large
    // inputs — and the iteration count is capped (each step halves the
    // bracket, so 200 steps exhaust f64 resolution from any starting width).
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sum_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let iota = 0.5 * (lo + hi);
    let mut y: Vec<f64> = x.iter().map(|v| (v - iota).max(0.0)).collect();
    // Repair residual bisection slack so the sum is exact.
    let s: f64 = y.iter().sum();
    if s > 0.0 {
        for v in &mut y {
            *v /= s;
        }
    }
    Ok(y)
}

/// Clamp `c` into `[lo, hi]`.
pub fn project_box(c: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::Interface(format!(
            "box bounds are inverted: [{lo}, {hi}]"
        )));
    }
    Ok(c.clamp(lo, hi))
}

/// Project a beamformer set onto the total-power ball `Σ‖w_l‖² ≤ budget`.
pub fn project_power_ball(set: &BeamformerSet, budget: f64) -> Result<BeamformerSet> {
    if !(budget > 0.0) {
        return Err(Error::Domain(format!(
            "power budget must be positive, got {budget}"
        )));
    }
    let total = set.total_power();
    if total <= budget {
        return Ok(set.clone());
    }
    let scale = (budget / total).sqrt();
    BeamformerSet::new(set.vectors().iter().map(|w| w.scaled_re(scale)).collect())
}

/// Normalize onto the unit sphere.
pub fn project_unit_sphere(v: &CVec) -> Result<CVec> {
    let norm = v.norm();
    if norm < 1e-300 {
        return Err(Error::Numeric(
            "cannot normalize a zero receive filter".into(),
        ));
    }
    Ok(v.scaled_re(1.0 / norm))
}
