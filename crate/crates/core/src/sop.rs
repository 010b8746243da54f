//! Secrecy-outage machinery.
//!
//! The redundancy rate `D_i` protecting user `i` is defined implicitly: it is
//! the largest rate whose secrecy-outage probability against the strongest
//! eavesdropper equals the target `η_i`. With only statistical eavesdropper
//! CSI the outage probability admits a closed deterministic form, so `D_i` is
//! the unique root of a strictly increasing residual and is found by
//! bisection. The analytic gradient follows from implicit differentiation,
//! and [`monte_carlo_sop`] provides an independent sampling oracle for the
//! whole chain.
//!
//! User indices are zero-based throughout: user `i` owns beamformer
//! `vectors[i + 1]`, channel `user_channels[i]` and outage target
//! `outage_targets[i]`; `vectors[0]` is the artificial/sensing beam.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::CVec;
use crate::rng::substream;
use crate::scenario::Scenario;

/// Relative threshold below which a beamformer counts as switched off.
pub const DEGENERATE_REL_THRESHOLD: f64 = 1e-12;

/// Default bisection tolerance in bits.
pub const DEFAULT_TOL_BITS: f64 = 1e-10;

const MAX_REDUNDANCY_BITS: f64 = 64.0;

/// The full transmit strategy: `vectors[0]` is the artificial/sensing beam,
/// `vectors[1..]` serve the users.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    vectors: Vec<CVec>,
}

impl BeamformerSet {
    pub fn new(vectors: Vec<CVec>) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::InvalidDimension(
                "beamformer set needs the artificial beam plus at least one user".into(),
            ));
        }
        let n = vectors[0].len();
        for (l, w) in vectors.iter().enumerate() {
            if w.len() != n {
                return Err(Error::InvalidDimension(format!(
                    "beamformer {} has length {}, expected {}",
                    l,
                    w.len(),
                    n
                )));
            }
        }
        Ok(Self { vectors })
    }

    pub fn zeros(n_antennas: usize, n_users: usize) -> Result<Self> {
        Self::new(vec![CVec::zeros(n_antennas)?; n_users + 1])
    }

    pub fn n_antennas(&self) -> usize {
        self.vectors[0].len()
    }

    /// Number of served users `I` (one less than the number of beams).
    pub fn n_users(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [CVec] {
        &mut self.vectors
    }

    /// Beamformer of user `i` (zero-based).
    pub fn user_beam(&self, i: usize) -> &CVec {
        &self.vectors[i + 1]
    }

    /// `Σ_l ‖w_l‖²`.
    pub fn total_power(&self) -> f64 {
        self.vectors.iter().map(|w| w.norm_sq()).sum()
    }

    /// Interleaved real coordinates of all beams, `2N(I+1)` values.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n_antennas() * self.vectors.len());
        for w in &self.vectors {
            w.flatten_into(&mut out);
        }
        out
    }

    /// Inverse of [`BeamformerSet::flatten`].
    pub fn from_real_coords(coords: &[f64], n_antennas: usize) -> Result<Self> {
        let per = 2 * n_antennas;
        if per == 0 || coords.len() % per != 0 || coords.len() / per < 2 {
            return Err(Error::InvalidDimension(format!(
                "cannot reshape {} coordinates into beams of {} antennas",
                coords.len(),
                n_antennas
            )));
        }
        Self::new(
            coords
                .chunks_exact(per)
                .map(CVec::from_real_coords)
                .collect::<Result<_>>()?,
        )
    }

    /// Random complex-Gaussian beams rescaled so the total power equals
    /// `power` exactly.
    pub fn random_feasible<R: Rng>(
        rng: &mut R,
        n_antennas: usize,
        n_users: usize,
        power: f64,
    ) -> Result<Self> {
        let mut set = Self::zeros(n_antennas, n_users)?;
        for w in &mut set.vectors {
            for z in w.as_mut_slice() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z = Complex64::new(re, im);
            }
        }
        let scale = (power / set.total_power()).sqrt();
        for w in &mut set.vectors {
            *w = w.scaled_re(scale);
        }
        Ok(set)
    }

    /// Random beams with mutually orthogonal directions (Gram-Schmidt of a
    /// Gaussian draw) and the per-beam powers of that draw, rescaled to a
    /// total of `power`. Requires `n_antennas > n_users`.
    pub fn random_orthogonal<R: Rng>(
        rng: &mut R,
        n_antennas: usize,
        n_users: usize,
        power: f64,
    ) -> Result<Self> {
        if n_antennas < n_users + 1 {
            return Err(Error::InvalidDimension(format!(
                "{} antennas cannot host {} orthogonal beams",
                n_antennas,
                n_users + 1
            )));
        }
        let raw = Self::random_feasible(rng, n_antennas, n_users, power)?;
        let powers: Vec<f64> = raw.vectors.iter().map(|w| w.norm_sq()).collect();
        let mut basis: Vec<CVec> = Vec::with_capacity(raw.vectors.len());
        for w in &raw.vectors {
            let mut q = w.clone();
            for b in &basis {
                let proj = b.hdot(&q);
                q.axpy(-proj, b);
            }
            let norm = q.norm();
            if norm < 1e-9 {
                return Err(Error::Numeric(
                    "Gram-Schmidt produced a near-dependent direction".into(),
                ));
            }
            basis.push(q.scaled_re(1.0 / norm));
        }
        Self::new(
            basis
                .into_iter()
                .zip(powers)
                .map(|(q, p)| q.scaled_re(p.sqrt()))
                .collect(),
        )
    }
}

fn check_user(set: &BeamformerSet, scenario: &Scenario, i: usize) -> Result<()> {
    if set.n_users() != scenario.n_users || set.n_antennas() != scenario.n_antennas {
        return Err(Error::InvalidDimension(format!(
            "beamformer set is {}x{}, scenario expects {}x{}",
            set.n_users(),
            set.n_antennas(),
            scenario.n_users,
            scenario.n_antennas
        )));
    }
    if i >= scenario.n_users {
        return Err(Error::InvalidDimension(format!(
            "user index {} out of range for {} users",
            i, scenario.n_users
        )));
    }
    Ok(())
}

fn degenerate(set: &BeamformerSet, scenario: &Scenario, i: usize) -> bool {
    set.user_beam(i).norm_sq() < DEGENERATE_REL_THRESHOLD * scenario.power_budget
}

/// Deterministic secrecy-outage residual at redundancy rate `d` for user `i`:
/// `ln η_i + (2^d − 1)/(snr_max ‖w_i‖²) + Σ_{l≠i} ln(1 + (2^d − 1)‖w_l‖²/‖w_i‖²)`.
/// Strictly increasing in `d`; its root is the exact-outage redundancy rate.
pub fn sop_residual(d: f64, set: &BeamformerSet, i: usize, scenario: &Scenario) -> Result<f64> {
    check_user(set, scenario, i)?;
    if d < 0.0 {
        return Err(Error::Domain(format!(
            "redundancy rate must be nonnegative, got {d}"
        )));
    }
    let p_i = set.user_beam(i).norm_sq();
    if degenerate(set, scenario, i) {
        return Err(Error::DegenerateBeam { user: i, norm_sq: p_i });
    }
    let snr = scenario.max_eve_snr().ok_or_else(|| {
        Error::Interface("secrecy residual needs at least one eavesdropper".into())
    })?;
    let s = (2f64).powf(d) - 1.0;
    let mut r = scenario.outage_targets[i].ln() + s / (snr * p_i);
    for (l, w) in set.vectors.iter().enumerate() {
        if l != i + 1 {
            r += (1.0 + s * w.norm_sq() / p_i).ln();
        }
    }
    Ok(r)
}

/// Solve the implicit redundancy rate `D_i ≥ 0` with `sop_residual(D_i) = 0`
/// by bracket-expanding bisection. Returns 0 when `η_i = 1` or the user's
/// beam is degenerate.
pub fn solve_redundancy_rate(
    set: &BeamformerSet,
    i: usize,
    scenario: &Scenario,
    tol: f64,
) -> Result<f64> {
    check_user(set, scenario, i)?;
    if scenario.outage_targets[i] >= 1.0 || degenerate(set, scenario, i) {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while sop_residual(hi, set, i, scenario)? <= 0.0 {
        hi *= 2.0;
        if hi > MAX_REDUNDANCY_BITS {
            return Err(Error::Numeric(format!(
                "redundancy-rate bracket for user {i} exceeded {MAX_REDUNDANCY_BITS} bits"
            )));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if sop_residual(mid, set, i, scenario)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Analytic gradients `∇_{w_l} D_i` for `l = 0..I`, via implicit
/// differentiation of the residual at the solved root. Zero everywhere when
/// `D_i = 0` (degenerate beam or `η_i = 1`).
pub fn redundancy_gradient(
    set: &BeamformerSet,
    i: usize,
    scenario: &Scenario,
) -> Result<Vec<CVec>> {
    check_user(set, scenario, i)?;
    let n = set.n_antennas();
    let zeros = vec![CVec::zeros(n)?; set.vectors.len()];
    if scenario.outage_targets[i] >= 1.0 || degenerate(set, scenario, i) {
        return Ok(zeros);
    }
    let d = solve_redundancy_rate(set, i, scenario, DEFAULT_TOL_BITS)?;
    if d == 0.0 {
        return Ok(zeros);
    }
    let snr = scenario.max_eve_snr().ok_or_else(|| {
        Error::Interface("secrecy gradient needs at least one eavesdropper".into())
    })?;
    let p_i = set.user_beam(i).norm_sq();
    let s = (2f64).powf(d) - 1.0;
    let pow2 = s + 1.0;

    // τ_{i,l} = ‖w_i‖² + (2^D − 1)‖w_l‖²; ∂residual/∂D shared by every block.
    let tau: Vec<f64> = set
        .vectors
        .iter()
        .map(|w| p_i + s * w.norm_sq())
        .collect();
    let mut dres_dd = 1.0 / (snr * p_i);
    for (l, w) in set.vectors.iter().enumerate() {
        if l != i + 1 {
            dres_dd += w.norm_sq() / tau[l];
        }
    }
    dres_dd *= std::f64::consts::LN_2 * pow2;

    let mut grads = Vec::with_capacity(set.vectors.len());
    for (l, w) in set.vectors.iter().enumerate() {
        if l == i + 1 {
            // ∂residual/∂‖w_i‖² = −(s/‖w_i‖²)·(dres_dd / (ln2·2^D)); the
            // shared bracket cancels, leaving a positive multiple of w_i.
            grads.push(w.scaled_re(2.0 * s / (p_i * pow2 * std::f64::consts::LN_2)));
        } else {
            grads.push(w.scaled_re(-2.0 * s / (tau[l] * dres_dd)));
        }
    }
    Ok(grads)
}

/// Empirical secrecy-outage probability of rate `d` for user `i`: draws
/// eavesdropper channels `g_j` with per-antenna variance `ρ_j²`, computes each
/// eavesdropping rate and returns the fraction of draws where the best
/// eavesdropper reaches `d`. Deterministic given `seed`.
pub fn monte_carlo_sop(
    set: &BeamformerSet,
    d: f64,
    i: usize,
    scenario: &Scenario,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_user(set, scenario, i)?;
    if n_samples == 0 {
        return Err(Error::Domain("need at least one Monte Carlo sample".into()));
    }
    if scenario.n_eves == 0 {
        return Err(Error::Interface(
            "outage sampling needs at least one eavesdropper".into(),
        ));
    }
    let n = set.n_antennas();
    let mut rng = substream(seed, "sop-monte-carlo");
    let mut outages = 0usize;
    let mut g = CVec::zeros(n)?;
    for _ in 0..n_samples {
        let mut worst = f64::NEG_INFINITY;
        for &snr in &scenario.eve_snr {
            // Normalized draw: C_j depends only on ρ_j²/ς_j².
            for z in g.as_mut_slice() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z = Complex64::new(re, im) / 2f64.sqrt();
            }
            let sig = g.tdot(set.user_beam(i)).norm_sqr();
            let mut interf = 0.0;
            for (l, w) in set.vectors.iter().enumerate() {
                if l != i + 1 {
                    interf += g.tdot(w).norm_sqr();
                }
            }
            let rate = (1.0 + snr * sig / (snr * interf + 1.0)).log2();
            worst = worst.max(rate);
        }
        if worst >= d {
            outages += 1;
        }
    }
    Ok(outages as f64 / n_samples as f64)
}
