//! Problem-instance generation and serialization.
//!
//! A [`Scenario`] is an immutable snapshot of one network draw: user channels,
//! eavesdropper statistics, sensing target and scattering channels, noise
//! powers and the power budget. [`generate_scenario`] draws one from a
//! [`GeometryConfig`] deterministically given the seed; positions are uniform
//! in a disk with the base station at the center, user channels are Rician
//! with a steering-vector line-of-sight component, and scattering coefficients
//! attenuate with round-trip distance.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{steering_vector, CMat, CVec};
use crate::rng::substream;

/// Adjacent antenna spacing normalized by the wavelength (half-wavelength
/// uniform linear array).
pub const ANTENNA_SPACING: f64 = 0.5;

/// One rank-one sensing channel `A_m = β_m a(θ_m) a^H(θ_m)`; index 0 in
/// [`Scenario::sensing_channels`] is the target, the rest are scatterings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingPath {
    #[serde(with = "serde_complex")]
    pub beta: Complex64,
    pub theta: f64,
}

mod serde_complex {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let p = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(p[0], p[1]))
    }
}

/// Immutable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_eves: usize,
    pub n_scatterers: usize,
    /// `h_i`, linear amplitude, length `n_antennas` each.
    pub user_channels: Vec<CVec>,
    /// Statistical SNR `ρ_j²/ς_j²` per eavesdropper (linear).
    pub eve_snr: Vec<f64>,
    /// Target (index 0) followed by `n_scatterers` scattering paths.
    pub sensing_channels: Vec<SensingPath>,
    /// `σ_i²` in watts.
    pub noise_user: Vec<f64>,
    /// `σ_BS²` in watts.
    pub noise_bs: f64,
    /// `P_BS` in watts.
    pub power_budget: f64,
    /// `η_i ∈ (0, 1]` per user.
    pub outage_targets: Vec<f64>,
}

impl Scenario {
    /// Validate all structural invariants, naming the offending field/index.
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_users == 0 {
            return Err(Error::InvalidDimension(
                "scenario needs at least one antenna and one user".into(),
            ));
        }
        if self.user_channels.len() != self.n_users {
            return Err(Error::InvalidDimension(format!(
                "expected {} user channels, found {}",
                self.n_users,
                self.user_channels.len()
            )));
        }
        for (i, h) in self.user_channels.iter().enumerate() {
            if h.len() != self.n_antennas {
                return Err(Error::InvalidDimension(format!(
                    "user channel {} has length {}, expected {}",
                    i,
                    h.len(),
                    self.n_antennas
                )));
            }
        }
        if self.eve_snr.len() != self.n_eves {
            return Err(Error::InvalidDimension(format!(
                "expected {} eavesdropper SNRs, found {}",
                self.n_eves,
                self.eve_snr.len()
            )));
        }
        for (j, s) in self.eve_snr.iter().enumerate() {
            if !(*s > 0.0) {
                return Err(Error::Domain(format!(
                    "eavesdropper {j} statistical SNR must be positive, got {s}"
                )));
            }
        }
        if self.sensing_channels.len() != self.n_scatterers + 1 {
            return Err(Error::InvalidDimension(format!(
                "expected {} sensing channels (target + scatterings), found {}",
                self.n_scatterers + 1,
                self.sensing_channels.len()
            )));
        }
        if self.noise_user.len() != self.n_users {
            return Err(Error::InvalidDimension(format!(
                "expected {} user noise powers, found {}",
                self.n_users,
                self.noise_user.len()
            )));
        }
        if !(self.power_budget > 0.0) {
            return Err(Error::Domain(format!(
                "power budget must be positive, got {}",
                self.power_budget
            )));
        }
        if self.outage_targets.len() != self.n_users {
            return Err(Error::InvalidDimension(format!(
                "expected {} outage targets, found {}",
                self.n_users,
                self.outage_targets.len()
            )));
        }
        for (i, eta) in self.outage_targets.iter().enumerate() {
            if !(*eta > 0.0 && *eta <= 1.0) {
                return Err(Error::Domain(format!(
                    "outage target {i} must lie in (0, 1], got {eta}"
                )));
            }
        }
        Ok(())
    }

    /// The target channel matrix `A_0`.
    pub fn target_matrix(&self) -> CMat {
        let p = &self.sensing_channels[0];
        sensing_channel(p.beta, p.theta, self.n_antennas)
    }

    /// All sensing channel matrices, target first.
    pub fn sensing_matrices(&self) -> Vec<CMat> {
        self.sensing_channels
            .iter()
            .map(|p| sensing_channel(p.beta, p.theta, self.n_antennas))
            .collect()
    }

    /// Largest statistical SNR over all eavesdroppers, if any are present.
    pub fn max_eve_snr(&self) -> Option<f64> {
        self.eve_snr
            .iter()
            .copied()
            .fold(None, |acc, s| Some(acc.map_or(s, |m: f64| m.max(s))))
    }
}

/// Geometry and large-scale channel parameters for scenario generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    /// Radius of the circular deployment area in meters.
    pub area_radius: f64,
    /// Carrier frequency in Hz.
    pub carrier: f64,
    /// Bandwidth in Hz.
    pub bandwidth: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_psd: f64,
    /// Pathloss at the 1 m reference distance, in dB (negative = loss).
    pub pathloss_ref: f64,
    /// Pathloss exponent for the BS-user link.
    pub pathloss_exp: f64,
    /// Rician factor of the BS-user link.
    pub rician_k: f64,
    /// Total transmit power budget in dBm.
    pub power_budget_dbm: f64,
    /// Target secrecy outage probability applied to every user.
    pub outage_target: f64,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            area_radius: 100.0,
            carrier: 3.5e9,
            bandwidth: 10.0e6,
            noise_psd: -96.0,
            pathloss_ref: -30.0,
            pathloss_exp: 2.0,
            rician_k: 5.0,
            power_budget_dbm: 20.0,
            outage_target: 0.1,
            seed: 0,
        }
    }
}

impl GeometryConfig {
    fn validate(&self) -> Result<()> {
        if !(self.area_radius > 0.0 && self.carrier > 0.0 && self.bandwidth > 0.0) {
            return Err(Error::Domain(
                "area radius, carrier and bandwidth must be positive".into(),
            ));
        }
        if self.rician_k < 0.0 {
            return Err(Error::Domain(format!(
                "Rician factor must be nonnegative, got {}",
                self.rician_k
            )));
        }
        if !(self.outage_target > 0.0 && self.outage_target <= 1.0) {
            return Err(Error::Domain(format!(
                "outage target must lie in (0, 1], got {}",
                self.outage_target
            )));
        }
        Ok(())
    }

    /// Noise power in watts over the configured bandwidth.
    pub fn noise_watts(&self) -> f64 {
        10f64.powf((self.noise_psd - 30.0) / 10.0) * self.bandwidth
    }
}

/// Problem sizes `(N, I, J, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_eves: usize,
    pub n_scatterers: usize,
}

/// `A = β a(θ) a^H(θ)` for a half-wavelength-spaced array of `n` antennas.
pub fn sensing_channel(beta: Complex64, theta: f64, n: usize) -> CMat {
    let steer = steering_vector(theta, n, ANTENNA_SPACING).expect("n >= 1");
    CMat::new(beta, steer)
}

fn draw_disk_distance<R: Rng>(rng: &mut R, radius: f64) -> f64 {
    // Uniform over the disk area; keep a 1 m exclusion so pathloss stays sane.
    (radius * rng.gen::<f64>().sqrt()).max(1.0)
}

fn draw_complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

/// Draw one Rician-fading scenario. Deterministic given `config.seed`.
pub fn generate_scenario(config: &GeometryConfig, sizes: Sizes) -> Result<Scenario> {
    config.validate()?;
    if sizes.n_antennas == 0 || sizes.n_users == 0 {
        return Err(Error::InvalidDimension(
            "need at least one antenna and one user".into(),
        ));
    }
    let n = sizes.n_antennas;
    let noise = config.noise_watts();
    let l0 = 10f64.powf(config.pathloss_ref / 10.0);

    let mut pos_rng = substream(config.seed, "positions");
    let mut angle_rng = substream(config.seed, "los-angles");
    let mut nlos_rng = substream(config.seed, "nlos");

    // Users: Rician channel with steering-vector LoS at a random angle.
    let mut user_channels = Vec::with_capacity(sizes.n_users);
    for _ in 0..sizes.n_users {
        let d = draw_disk_distance(&mut pos_rng, config.area_radius);
        let gain = l0 * d.powf(-config.pathloss_exp);
        let amp = (gain / (config.rician_k + 1.0)).sqrt();
        let omega = angle_rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let los = steering_vector(omega, n, ANTENNA_SPACING)?;
        let mut h = los.scaled_re(amp * config.rician_k.sqrt());
        for entry in h.as_mut_slice() {
            *entry += amp * draw_complex_normal(&mut nlos_rng);
        }
        user_channels.push(h);
    }

    // Eavesdroppers: only the statistical SNR rho^2 / varsigma^2 is known,
    // with rho^2 following the same pathloss law as the user channels.
    let mut eve_snr = Vec::with_capacity(sizes.n_eves);
    for _ in 0..sizes.n_eves {
        let d = draw_disk_distance(&mut pos_rng, config.area_radius);
        eve_snr.push(l0 * d.powf(-config.pathloss_exp) / noise);
    }

    // Target (index 0) and scatterings: beta_m(dB) = 20 + 20 log10(d_m),
    // interpreted as a round-trip loss.
    let mut sensing_channels = Vec::with_capacity(sizes.n_scatterers + 1);
    for _ in 0..=sizes.n_scatterers {
        let d = draw_disk_distance(&mut pos_rng, config.area_radius);
        let beta_db = 20.0 + 20.0 * d.log10();
        let beta = 10f64.powf(-beta_db / 20.0);
        let theta = (angle_rng.gen::<f64>() - 0.5) * std::f64::consts::PI;
        sensing_channels.push(SensingPath {
            beta: Complex64::new(beta, 0.0),
            theta,
        });
    }

    let scenario = Scenario {
        n_antennas: n,
        n_users: sizes.n_users,
        n_eves: sizes.n_eves,
        n_scatterers: sizes.n_scatterers,
        user_channels,
        eve_snr,
        sensing_channels,
        noise_user: vec![noise; sizes.n_users],
        noise_bs: noise,
        power_budget: 10f64.powf((config.power_budget_dbm - 30.0) / 10.0),
        outage_targets: vec![config.outage_target; sizes.n_users],
    };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    units: BTreeMap<String, String>,
    #[serde(flatten)]
    scenario: Scenario,
}

fn units_header() -> BTreeMap<String, String> {
    [
        ("user_channels", "linear amplitude, complex as [re, im]"),
        ("eve_snr", "linear power ratio"),
        ("sensing_channels.beta", "linear round-trip amplitude, complex as [re, im]"),
        ("sensing_channels.theta", "radians"),
        ("noise_user", "watts"),
        ("noise_bs", "watts"),
        ("power_budget", "watts"),
        ("outage_targets", "probability in (0, 1]"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    let file = ScenarioFile {
        units: units_header(),
        scenario: scenario.clone(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Parse(format!("serializing scenario: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| {
        Error::Parse(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    file.scenario.validate()?;
    Ok(file.scenario)
}
