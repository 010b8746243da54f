//! Pluggable sensing metrics `S({w_l}, v)`.
//!
//! Every metric is encoded so that `S ≥ 0` exactly when the underlying sensing
//! constraint is satisfied: radar SINR above a threshold, beampattern-matching
//! MSE below an allowance, detection probability above a target, or sensing
//! mutual information above a floor. Only the SINR metric optimizes an
//! auxiliary receive filter `v` (kept on the unit sphere); its noise term is
//! written with a constant `σ_BS²` under that normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{q_inverse, CVec};
use crate::projections::project_unit_sphere;
use crate::scenario::Scenario;
use crate::sop::BeamformerSet;

/// Sensing-constraint descriptor. All thresholds are linear quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensingMetric {
    /// Radar SINR at the filtered BS receiver must reach `gamma`.
    Sinr { gamma: f64 },
    /// Mean squared deviation from a desired transmit beampattern, sampled at
    /// `desired = [(θ_t, P_d(θ_t))]`, must stay below `gamma_mse`. An empty
    /// `desired` list means "resolve to the default pattern for the scenario"
    /// and must be filled in (see [`SensingMetric::default_beampattern`])
    /// before use.
    Beampattern {
        gamma_mse: f64,
        #[serde(default)]
        desired: Vec<(f64, f64)>,
    },
    /// Target detection probability at false-alarm rate `p_fa` must reach
    /// `phi`.
    Detection { p_fa: f64, phi: f64 },
    /// Sensing mutual information must reach `delta` bits.
    MutualInfo { delta: f64 },
}

impl SensingMetric {
    pub fn validate(&self) -> Result<()> {
        match self {
            SensingMetric::Sinr { gamma } if *gamma > 0.0 => Ok(()),
            SensingMetric::Sinr { gamma } => Err(Error::Domain(format!(
                "SINR threshold must be positive, got {gamma}"
            ))),
            SensingMetric::Beampattern { gamma_mse, desired } => {
                if !(*gamma_mse > 0.0) {
                    return Err(Error::Domain(format!(
                        "beampattern MSE allowance must be positive, got {gamma_mse}"
                    )));
                }
                if desired.is_empty() {
                    return Err(Error::InvalidDimension(
                        "desired beampattern needs at least one sample angle".into(),
                    ));
                }
                Ok(())
            }
            SensingMetric::Detection { p_fa, phi } => {
                for (name, p) in [("false-alarm rate", p_fa), ("detection target", phi)] {
                    if !(*p > 0.0 && *p < 1.0) {
                        return Err(Error::Domain(format!("{name} must lie in (0, 1), got {p}")));
                    }
                }
                Ok(())
            }
            SensingMetric::MutualInfo { delta } if *delta > 0.0 => Ok(()),
            SensingMetric::MutualInfo { delta } => Err(Error::Domain(format!(
                "mutual-information floor must be positive, got {delta}"
            ))),
        }
    }

    /// Whether this metric optimizes a receive filter.
    pub fn uses_v(&self) -> bool {
        matches!(self, SensingMetric::Sinr { .. })
    }

    /// Rectangular desired beampattern: `T = 181` uniform angles over
    /// `[−90°, 90°]`, a 10°-wide mainlobe centered on the target angle at a
    /// level that radiates `P_BS · N` in total, zero elsewhere.
    pub fn default_beampattern(
        gamma_mse: f64,
        target_angle: f64,
        n_antennas: usize,
        power_budget: f64,
    ) -> Result<Self> {
        let t = 181usize;
        let half_width = 5f64.to_radians();
        let angles: Vec<f64> = (0..t)
            .map(|k| (-90.0 + k as f64 * 180.0 / (t - 1) as f64).to_radians())
            .collect();
        let n_main = angles
            .iter()
            .filter(|a| (**a - target_angle).abs() <= half_width + 1e-12)
            .count();
        if n_main == 0 {
            return Err(Error::Domain(format!(
                "target angle {target_angle} rad leaves an empty mainlobe"
            )));
        }
        let level = power_budget * n_antennas as f64 / n_main as f64;
        let desired = angles
            .into_iter()
            .map(|a| {
                let p = if (a - target_angle).abs() <= half_width + 1e-12 {
                    level
                } else {
                    0.0
                };
                (a, p)
            })
            .collect();
        let metric = SensingMetric::Beampattern { gamma_mse, desired };
        metric.validate()?;
        Ok(metric)
    }

    /// Natural magnitude of the constraint slack for this metric and
    /// scenario — roughly `|S|` at `w = 0`. The solver divides `S` and its
    /// gradients by this scale so that the penalty schedules, whose constants
    /// are dimensionless, behave identically whether the slack is measured in
    /// watts (SINR, beampattern) or in probability/bit units (detection, MI).
    pub fn constraint_scale(&self, scenario: &Scenario) -> Result<f64> {
        self.validate()?;
        let scale = match self {
            SensingMetric::Sinr { gamma } => gamma * scenario.noise_bs,
            SensingMetric::Beampattern { gamma_mse, .. } => *gamma_mse,
            SensingMetric::Detection { p_fa, phi } => {
                let b0 = scenario.sensing_channels[0].beta.norm();
                if b0 == 0.0 {
                    return Err(Error::Domain(
                        "detection metric needs a nonzero target gain".into(),
                    ));
                }
                // |Q⁻¹(p_fa) − Q⁻¹(φ)| can vanish when φ = p_fa; keep the
                // per-unit-deflection scale as a floor.
                scenario.noise_bs * (q_inverse(*p_fa)? - q_inverse(*phi)?).abs().max(1.0)
                    / (2.0 * b0)
            }
            SensingMetric::MutualInfo { delta } => *delta,
        };
        if scale > 0.0 && scale.is_finite() {
            Ok(scale)
        } else {
            Err(Error::Numeric(format!(
                "constraint scale {scale} is not a positive finite number"
            )))
        }
    }

    fn check_v(&self, v: Option<&CVec>, scenario: &Scenario) -> Result<()> {
        match (self.uses_v(), v) {
            (true, Some(v)) if v.len() == scenario.n_antennas => Ok(()),
            (true, Some(v)) => Err(Error::Interface(format!(
                "receive filter has length {}, expected {}",
                v.len(),
                scenario.n_antennas
            ))),
            (true, None) => Err(Error::Interface(
                "this metric needs a receive filter".into(),
            )),
            (false, None) => Ok(()),
            (false, Some(_)) => Err(Error::Interface(
                "this metric does not take a receive filter".into(),
            )),
        }
    }

    /// Constraint slack `S`; nonnegative iff the sensing constraint holds.
    pub fn metric_value(
        &self,
        set: &BeamformerSet,
        v: Option<&CVec>,
        scenario: &Scenario,
    ) -> Result<f64> {
        self.check_v(v, scenario)?;
        let mats = scenario.sensing_matrices();
        match self {
            SensingMetric::Sinr { gamma } => {
                let v = v.unwrap();
                let mut signal = 0.0;
                let mut clutter = 0.0;
                for w in set.vectors() {
                    signal += mats[0].bilinear_t(v, w).norm_sqr();
                    for m in &mats[1..] {
                        clutter += m.bilinear_t(v, w).norm_sqr();
                    }
                }
                Ok(signal - gamma * (clutter + scenario.noise_bs))
            }
            SensingMetric::Beampattern { gamma_mse, desired } => {
                Ok(gamma_mse - beampattern_mse(set, desired))
            }
            SensingMetric::Detection { p_fa, phi } => {
                let b0 = mats[0].beta().norm();
                if b0 == 0.0 {
                    return Err(Error::Domain(
                        "detection metric needs a nonzero target gain".into(),
                    ));
                }
                let mut power = 0.0;
                for w in set.vectors() {
                    power += mats[0].steer_response(w).norm_sqr();
                }
                let offset =
                    scenario.noise_bs * (q_inverse(*p_fa)? - q_inverse(*phi)?) / (2.0 * b0);
                Ok(b0 * power - offset)
            }
            SensingMetric::MutualInfo { delta } => {
                Ok(mutual_information(set, scenario) - delta)
            }
        }
    }

    /// Gradients `∇_{w_l} S` for `l = 0..I` (real-coordinate convention).
    pub fn metric_grad_w(
        &self,
        set: &BeamformerSet,
        v: Option<&CVec>,
        scenario: &Scenario,
    ) -> Result<Vec<CVec>> {
        self.check_v(v, scenario)?;
        let mats = scenario.sensing_matrices();
        let mut grads = Vec::with_capacity(set.vectors().len());
        match self {
            SensingMetric::Sinr { gamma } => {
                let v = v.unwrap();
                // Per rank-one channel A = β a aᴴ: ∇|vᵀA w|² = 2|β|²|vᵀa|² a (aᴴw).
                let weights: Vec<f64> = mats
                    .iter()
                    .enumerate()
                    .map(|(m, mat)| {
                        let base = mat.beta().norm_sqr() * v.tdot(mat.steer()).norm_sqr();
                        if m == 0 {
                            2.0 * base
                        } else {
                            -2.0 * gamma * base
                        }
                    })
                    .collect();
                for w in set.vectors() {
                    let mut g = CVec::zeros(set.n_antennas())?;
                    for (mat, wt) in mats.iter().zip(&weights) {
                        g.axpy((wt * mat.steer_response(w)).into(), mat.steer());
                    }
                    grads.push(g);
                }
            }
            SensingMetric::Beampattern { desired, .. } => {
                let steers: Vec<CVec> = desired
                    .iter()
                    .map(|(theta, _)| {
                        crate::numerics::steering_vector(
                            *theta,
                            set.n_antennas(),
                            crate::scenario::ANTENNA_SPACING,
                        )
                    })
                    .collect::<Result<_>>()?;
                let t = desired.len() as f64;
                // e_t = P_d(θ_t) − Σ_l |a_tᴴ w_l|²; ∇ MSE = −(4/T) Σ_t e_t a_t (a_tᴴ w_l).
                let errs: Vec<f64> = desired
                    .iter()
                    .zip(&steers)
                    .map(|((_, p_d), a)| {
                        p_d - set
                            .vectors()
                            .iter()
                            .map(|w| a.hdot(w).norm_sqr())
                            .sum::<f64>()
                    })
                    .collect();
                for w in set.vectors() {
                    let mut g = CVec::zeros(set.n_antennas())?;
                    for (a, e) in steers.iter().zip(&errs) {
                        g.axpy(((4.0 / t) * e * a.hdot(w)).into(), a);
                    }
                    grads.push(g);
                }
            }
            SensingMetric::Detection { .. } => {
                let b0 = mats[0].beta().norm();
                for w in set.vectors() {
                    grads.push(
                        mats[0]
                            .steer()
                            .scaled((2.0 * b0 * mats[0].steer_response(w)).into()),
                    );
                }
            }
            SensingMetric::MutualInfo { .. } => {
                let denom = scenario.noise_bs + echo_energy(set, scenario);
                let coeff = 2.0 / (std::f64::consts::LN_2 * denom);
                for w in set.vectors() {
                    let mut g = CVec::zeros(set.n_antennas())?;
                    for mat in &mats {
                        // AᴴA = |β|² N a aᴴ for a rank-one channel.
                        let wt = mat.beta().norm_sqr() * mat.steer().norm_sq();
                        g.axpy((coeff * wt * mat.steer_response(w)).into(), mat.steer());
                    }
                    grads.push(g);
                }
            }
        }
        Ok(grads)
    }

    /// Gradient `∇_v S` for metrics that optimize a receive filter; `None`
    /// otherwise is an interface error.
    pub fn metric_grad_v(
        &self,
        set: &BeamformerSet,
        v: Option<&CVec>,
        scenario: &Scenario,
    ) -> Result<CVec> {
        if !self.uses_v() {
            return Err(Error::Interface(
                "this metric has no receive-filter gradient".into(),
            ));
        }
        self.check_v(v, scenario)?;
        let v = v.unwrap();
        let SensingMetric::Sinr { gamma } = self else {
            unreachable!()
        };
        let mats = scenario.sensing_matrices();
        let mut g = CVec::zeros(scenario.n_antennas)?;
        for (m, mat) in mats.iter().enumerate() {
            // ∇_v |vᵀ A w|² = 2|β|² |aᴴw|² (aᵀv) conj(a).
            let sign = if m == 0 { 2.0 } else { -2.0 * gamma };
            let energy: f64 = set
                .vectors()
                .iter()
                .map(|w| mat.steer_response(w).norm_sqr())
                .sum();
            let coeff = sign * mat.beta().norm_sqr() * energy * v.tdot(mat.steer());
            g.axpy(coeff, &mat.steer().conj());
        }
        Ok(g)
    }

    /// Normalize a receive-filter candidate onto the unit sphere.
    pub fn project_v(&self, candidate: &CVec) -> Result<CVec> {
        if !self.uses_v() {
            return Err(Error::Interface(
                "this metric does not take a receive filter".into(),
            ));
        }
        project_unit_sphere(candidate)
    }
}

fn beampattern_mse(set: &BeamformerSet, desired: &[(f64, f64)]) -> f64 {
    let mut mse = 0.0;
    for (theta, p_d) in desired {
        let a = crate::numerics::steering_vector(
            *theta,
            set.n_antennas(),
            crate::scenario::ANTENNA_SPACING,
        )
        .expect("n >= 1");
        let synthesized: f64 = set.vectors().iter().map(|w| a.hdot(w).norm_sqr()).sum();
        let e = p_d - synthesized;
        mse += e * e;
    }
    mse / desired.len() as f64
}

fn echo_energy(set: &BeamformerSet, scenario: &Scenario) -> f64 {
    let mut total = 0.0;
    for mat in scenario.sensing_matrices() {
        let wt = mat.beta().norm_sqr() * mat.steer().norm_sq();
        for w in set.vectors() {
            total += wt * mat.steer_response(w).norm_sqr();
        }
    }
    total
}

/// Sensing mutual information in bits: `log₂(1 + Σ_l w_lᴴ(Σ_m A_mᴴA_m)w_l / σ_BS²)`.
pub fn mutual_information(set: &BeamformerSet, scenario: &Scenario) -> f64 {
    (1.0 + echo_energy(set, scenario) / scenario.noise_bs).log2()
}

/// Radar output SINR for a given receive filter, invariant to the scale of
/// `v`: target echo power over clutter-plus-noise after filtering.
pub fn sensing_sinr(set: &BeamformerSet, v: &CVec, scenario: &Scenario) -> f64 {
    let mats = scenario.sensing_matrices();
    let mut signal = 0.0;
    let mut clutter = 0.0;
    for w in set.vectors() {
        signal += mats[0].bilinear_t(v, w).norm_sqr();
        for m in &mats[1..] {
            clutter += m.bilinear_t(v, w).norm_sqr();
        }
    }
    signal / (clutter + scenario.noise_bs * v.norm_sq())
}

/// Detection probability of the target at false-alarm rate `p_fa`, under the
/// same gain normalization as the detection metric.
pub fn detection_probability(
    set: &BeamformerSet,
    scenario: &Scenario,
    p_fa: f64,
) -> Result<f64> {
    let target = scenario.target_matrix();
    let b0 = target.beta().norm();
    let power: f64 = set
        .vectors()
        .iter()
        .map(|w| target.steer_response(w).norm_sqr())
        .sum();
    let deflection = 2.0 * b0 * b0 * power / scenario.noise_bs;
    Ok(crate::numerics::q_function(q_inverse(p_fa)? - deflection))
}
