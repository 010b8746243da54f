//! Achievable rates, secrecy utilities and their gradients.
//!
//! User `i` decodes against interference from every other beam including the
//! artificial one: `R_i = log₂(1 + |h_iᵀw_{i+1}|² / (Σ_{l≠i+1}|h_iᵀw_l|² + σ_i²))`.
//! The secrecy utility subtracts the implicit redundancy rate from the
//! secrecy-outage chain, `ψ_i = R_i − D_i`, and may be negative; no clamping
//! is applied so the optimizer sees the true landscape. Channels apply by
//! plain transpose, never conjugated.

use crate::error::Result;
use crate::numerics::CVec;
use crate::scenario::Scenario;
use crate::sop::{redundancy_gradient, solve_redundancy_rate, BeamformerSet, DEFAULT_TOL_BITS};

/// Per-user utilities `ψ_i` in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector {
    pub psi: Vec<f64>,
}

fn signal_and_interference(set: &BeamformerSet, i: usize, scenario: &Scenario) -> (f64, f64) {
    let h = &scenario.user_channels[i];
    let mut interference = scenario.noise_user[i];
    let mut signal = 0.0;
    for (l, w) in set.vectors().iter().enumerate() {
        let p = h.tdot(w).norm_sqr();
        if l == i + 1 {
            signal = p;
        } else {
            interference += p;
        }
    }
    (signal, interference)
}

/// Downlink rate of user `i` under the full beamformer set.
pub fn achievable_rate(set: &BeamformerSet, i: usize, scenario: &Scenario) -> f64 {
    let (signal, interference) = signal_and_interference(set, i, scenario);
    (1.0 + signal / interference).log2()
}

/// Gradients `∇_{w_l} R_i` for `l = 0..I`, in the real-coordinate convention
/// (`g.re`/`g.im` are the partials with respect to `Re w`/`Im w`).
pub fn rate_gradient(set: &BeamformerSet, i: usize, scenario: &Scenario) -> Vec<CVec> {
    let h = &scenario.user_channels[i];
    let hbar = h.conj();
    let (signal, interference) = signal_and_interference(set, i, scenario);
    let total = signal + interference;
    let mut grads = Vec::with_capacity(set.vectors().len());
    for (l, w) in set.vectors().iter().enumerate() {
        let response = h.tdot(w);
        let coeff = if l == i + 1 {
            2.0 / (total * std::f64::consts::LN_2)
        } else {
            // Beam l raises both the total and the interference floor.
            (2.0 / std::f64::consts::LN_2) * (1.0 / total - 1.0 / interference)
        };
        grads.push(hbar.scaled(response * coeff));
    }
    grads
}

/// Utilities of all users: secrecy rates `R_i − D_i` when `secrecy` is set,
/// otherwise plain rates.
pub fn utility_vector(
    set: &BeamformerSet,
    scenario: &Scenario,
    secrecy: bool,
) -> Result<UtilityVector> {
    let mut psi = Vec::with_capacity(scenario.n_users);
    for i in 0..scenario.n_users {
        let r = achievable_rate(set, i, scenario);
        let d = if secrecy {
            solve_redundancy_rate(set, i, scenario, DEFAULT_TOL_BITS)?
        } else {
            0.0
        };
        psi.push(r - d);
    }
    Ok(UtilityVector { psi })
}

/// Per-user utility gradients: `jac[i][l] = ∇_{w_l} ψ_i`.
pub fn utility_jacobian(
    set: &BeamformerSet,
    scenario: &Scenario,
    secrecy: bool,
) -> Result<Vec<Vec<CVec>>> {
    let mut jac = Vec::with_capacity(scenario.n_users);
    for i in 0..scenario.n_users {
        let mut blocks = rate_gradient(set, i, scenario);
        if secrecy {
            let dgrad = redundancy_gradient(set, i, scenario)?;
            for (b, g) in blocks.iter_mut().zip(&dgrad) {
                b.axpy((-1.0).into(), g);
            }
        }
        jac.push(blocks);
    }
    Ok(jac)
}
