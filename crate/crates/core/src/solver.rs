//! Regularized alternating max-min solver.
//!
//! Each iteration first minimizes the regularized inner problem in closed
//! form — the penalty weight `c` by a box-clamped scalar update, the
//! user-selection weights `y` by a simplex projection — and then takes one
//! projected gradient ascent step on the beamformers (power ball) and, for
//! metrics that use one, the receive filter (unit sphere). Step sizes and
//! regularization weights follow fixed power-law schedules in the iteration
//! index. The raw objective `yᵀψ + cS` is not monotone; the returned solution
//! is the best iterate that satisfied the sensing constraint, tracked
//! explicitly.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::numerics::{steering_vector, CVec};
use crate::projections::{project_box, project_power_ball, project_simplex, project_unit_sphere};
use crate::rates::{utility_jacobian, utility_vector};
use crate::rng::substream;
use crate::scenario::{Scenario, ANTENNA_SPACING};
use crate::sensing::SensingMetric;
use crate::sop::BeamformerSet;

/// Outer objective: worst user or a fixed weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "weights", rename_all = "snake_case")]
pub enum Objective {
    WorstUser,
    Weighted(Vec<f64>),
}

impl Objective {
    /// `min_{y ∈ Ω_y} yᵀψ`: the worst entry, or the fixed weighted sum.
    pub fn min_obj(&self, psi: &[f64]) -> f64 {
        match self {
            Objective::WorstUser => psi.iter().cloned().fold(f64::INFINITY, f64::min),
            Objective::Weighted(w) => w.iter().zip(psi).map(|(a, b)| a * b).sum(),
        }
    }

    fn validate(&self, n_users: usize) -> Result<()> {
        if let Objective::Weighted(w) = self {
            if w.len() != n_users {
                return Err(Error::InvalidDimension(format!(
                    "{} weights for {} users",
                    w.len(),
                    n_users
                )));
            }
            if w.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::Domain("weights must be finite and nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Schedule constants; the laws are `λᵏ = lambda_scale·k^{-1/4}`,
/// `βᵏ = beta_scale·k^{-3}`, `αᵏ = alpha_scale·k^{1/3}`,
/// `Cᵏ = c_cap_base + ln k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedules {
    pub lambda_scale: f64,
    pub beta_scale: f64,
    pub alpha_scale: f64,
    pub c_cap_base: f64,
}

impl Default for Schedules {
    fn default() -> Self {
        Self {
            lambda_scale: 1.0,
            beta_scale: 1.0,
            alpha_scale: 1.0,
            c_cap_base: 10.0,
        }
    }
}

impl Schedules {
    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda_scale * (k as f64).powf(-0.25)
    }
    pub fn beta(&self, k: usize) -> f64 {
        self.beta_scale * (k as f64).powi(-3)
    }
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha_scale * (k as f64).cbrt()
    }
    pub fn c_cap(&self, k: usize) -> f64 {
        self.c_cap_base + (k as f64).ln()
    }

    fn validate(&self) -> Result<()> {
        if self.lambda_scale > 0.0
            && self.beta_scale > 0.0
            && self.alpha_scale > 0.0
            && self.c_cap_base > 0.0
        {
            Ok(())
        } else {
            Err(Error::Domain("schedule constants must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub objective: Objective,
    pub schedules: Schedules,
    /// With regularization off, the inner updates use the raw unregularized
    /// minimizers (bang-bang `c`, vertex `y`) — the ablation mode.
    pub regularize: bool,
    pub tol_bisect: f64,
    pub seed: u64,
    pub log_every: usize,
    /// Cap on the length of one projected-gradient move, as a fraction of the
    /// feasible-set radius per block. `f64::INFINITY` disables clipping and
    /// runs the raw schedule-driven steps.
    pub max_step_fraction: f64,
    /// Hold the artificial beam at zero (no dedicated sensing/jamming beam).
    pub pin_artificial: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            objective: Objective::WorstUser,
            schedules: Schedules::default(),
            regularize: true,
            tol_bisect: 1e-10,
            seed: 0,
            log_every: 100,
            max_step_fraction: MAX_STEP_FRACTION,
            pin_artificial: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n_users: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Domain("need at least one iteration".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Domain("log_every must be at least 1".into()));
        }
        if !(self.max_step_fraction > 0.0) {
            return Err(Error::Domain("max_step_fraction must be positive".into()));
        }
        self.schedules.validate()?;
        self.objective.validate(n_users)
    }
}

/// Live iterate of the alternating iteration.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub w: BeamformerSet,
    pub v: Option<CVec>,
    pub c: f64,
    pub y: Vec<f64>,
    pub k: usize,
}

/// One logged trajectory point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: usize,
    /// Raw penalized objective `yᵀψ + cS` at this iterate (non-monotone).
    pub objective: f64,
    pub s_value: f64,
    pub c: f64,
    pub best_obj: f64,
    pub stationarity: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub best_w: BeamformerSet,
    pub best_v: Option<CVec>,
    /// `min_y yᵀψ` at the best feasible iterate; `−∞` if none was feasible.
    pub best_obj: f64,
    pub feasible_found: bool,
    pub trajectory: Vec<TrajectoryRecord>,
}

/// Longest move `outer_update` takes in one iteration, as a fraction of the
/// feasible-set radius of each block (the power-ball radius for the
/// beamformers, 1 for the unit-sphere filter).
pub const MAX_STEP_FRACTION: f64 = 0.3;

/// Best-iterate tracking accepts candidates whose normalized slack is within
/// this tolerance of feasibility; iterates that converge to the constraint
/// boundary from below land within it.
pub const BEST_FEASIBILITY_TOL: f64 = 1e-6;

/// Closed-form inner minimization at iteration `k`: returns `(c_next, y_next)`.
pub fn inner_update(
    psi: &[f64],
    s: f64,
    c: f64,
    objective: &Objective,
    regularize: bool,
    lambda: f64,
    beta: f64,
    cap: f64,
) -> Result<(f64, Vec<f64>)> {
    let c_next = if regularize {
        project_box((beta * c - s) / (lambda + beta), 0.0, cap)?
    } else {
        // Raw minimizer of c·S over [0, cap]: bang-bang in the sign of S.
        if s > 0.0 {
            0.0
        } else {
            cap
        }
    };
    let y_next = match objective {
        Objective::Weighted(w) => w.clone(),
        Objective::WorstUser => {
            if regularize {
                let shifted: Vec<f64> = psi.iter().map(|p| -p / lambda).collect();
                project_simplex(&shifted)?
            } else {
                // Vertex at the worst user; lowest index on ties.
                let mut arg = 0;
                for (i, p) in psi.iter().enumerate() {
                    if *p < psi[arg] {
                        arg = i;
                    }
                }
                let mut y = vec![0.0; psi.len()];
                y[arg] = 1.0;
                y
            }
        }
    };
    Ok((c_next, y_next))
}

/// One projected gradient ascent step on `(w, v)` with inner variables fixed.
#[allow(clippy::too_many_arguments)]
pub fn outer_update(
    set: &BeamformerSet,
    v: Option<&CVec>,
    scenario: &Scenario,
    metric: &SensingMetric,
    secrecy: bool,
    c_next: f64,
    y_next: &[f64],
    alpha: f64,
    max_step_fraction: f64,
    pin_artificial: bool,
) -> Result<(BeamformerSet, Option<CVec>)> {
    let jac = utility_jacobian(set, scenario, secrecy)?;
    let s_grad = metric.metric_grad_w(set, v, scenario)?;

    // Assemble the ascent direction, then take a clipped step: the move is at
    // most `MAX_STEP_FRACTION` of the feasible-set radius per block. Gradient
    // magnitudes vary over orders of magnitude between the utility and
    // penalty terms, and an unclipped step can throw the iterate across the
    // ball into a useless oscillation when the penalty weight is large.
    let mut dirs: Vec<CVec> = Vec::with_capacity(set.vectors().len());
    let mut dir_sq = 0.0;
    for l in 0..set.vectors().len() {
        let mut dir = CVec::zeros(set.n_antennas())?;
        if !(pin_artificial && l == 0) {
            for (i, &yi) in y_next.iter().enumerate() {
                if yi != 0.0 {
                    dir.axpy(yi.into(), &jac[i][l]);
                }
            }
            dir.axpy(c_next.into(), &s_grad[l]);
        }
        dir_sq += dir.norm_sq();
        dirs.push(dir);
    }
    let radius = scenario.power_budget.sqrt();
    let mut step = 1.0 / alpha;
    let move_len = step * dir_sq.sqrt();
    if move_len > max_step_fraction * radius {
        step *= max_step_fraction * radius / move_len;
    }
    let mut next = set.clone();
    for (l, w) in next.vectors_mut().iter_mut().enumerate() {
        w.axpy(step.into(), &dirs[l]);
    }
    let w_next = project_power_ball(&next, scenario.power_budget)?;
    let v_next = match v {
        Some(v) if metric.uses_v() => {
            let g = metric.metric_grad_v(set, Some(v), scenario)?;
            let mut v_step = c_next / alpha;
            let v_move = v_step * g.norm();
            if v_move > max_step_fraction {
                v_step *= max_step_fraction / v_move;
            }
            let mut cand = v.clone();
            cand.axpy(v_step.into(), &g);
            Some(project_unit_sphere(&cand)?)
        }
        other => other.cloned(),
    };
    Ok((w_next, v_next))
}

/// Unit-step proximal-residual surrogate for stationarity: distance each
/// block moves under its own update with reference step 1. Zero exactly at a
/// joint fixed point.
pub fn stationarity_norm(
    state: &SolverState,
    scenario: &Scenario,
    metric: &SensingMetric,
    config: &SolverConfig,
) -> Result<f64> {
    let secrecy = scenario.n_eves > 0;
    let s_scale = metric.constraint_scale(scenario)?;
    let psi = utility_vector(&state.w, scenario, secrecy)?.psi;
    let s = metric.metric_value(&state.w, state.v.as_ref(), scenario)? / s_scale;
    let c_eff = state.c / s_scale;
    let jac = utility_jacobian(&state.w, scenario, secrecy)?;
    let s_grad = metric.metric_grad_w(&state.w, state.v.as_ref(), scenario)?;

    let mut stepped = state.w.clone();
    for (l, w) in stepped.vectors_mut().iter_mut().enumerate() {
        if config.pin_artificial && l == 0 {
            continue;
        }
        for (i, &yi) in state.y.iter().enumerate() {
            if yi != 0.0 {
                w.axpy(yi.into(), &jac[i][l]);
            }
        }
        w.axpy(c_eff.into(), &s_grad[l]);
    }
    let projected = project_power_ball(&stepped, scenario.power_budget)?;
    let mut total: f64 = state
        .w
        .flatten()
        .iter()
        .zip(projected.flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    if let Some(v) = &state.v {
        let g = metric.metric_grad_v(&state.w, Some(v), scenario)?;
        let mut cand = v.clone();
        cand.axpy(c_eff.into(), &g);
        let pv = project_unit_sphere(&cand)?;
        let mut flat_v = Vec::new();
        v.flatten_into(&mut flat_v);
        let mut flat_pv = Vec::new();
        pv.flatten_into(&mut flat_pv);
        total += flat_v
            .iter()
            .zip(&flat_pv)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }

    if matches!(config.objective, Objective::WorstUser) {
        let shifted: Vec<f64> = state.y.iter().zip(&psi).map(|(y, p)| y - p).collect();
        let py = project_simplex(&shifted)?;
        total += state
            .y
            .iter()
            .zip(&py)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }

    let cap = config.schedules.c_cap(state.k.max(1));
    let pc = project_box(state.c - s, 0.0, cap)?;
    total += (state.c - pc) * (state.c - pc);
    Ok(total.sqrt())
}

/// Run the full alternating iteration for `config.max_iters` steps.
pub fn run(
    scenario: &Scenario,
    metric: &SensingMetric,
    config: &SolverConfig,
) -> Result<SolverResult> {
    scenario.validate()?;
    metric.validate()?;
    config.validate(scenario.n_users)?;
    let secrecy = scenario.n_eves > 0;
    // Precondition the penalty term: the schedule constants are dimensionless,
    // so the slack entering the `c` update and the penalty gradient entering
    // the ascent step are normalized by the metric's natural scale. Logged
    // `s_value`s and the feasibility test `S ≥ 0` stay in original units.
    let s_scale = metric.constraint_scale(scenario)?;
    let start = Instant::now();

    let mut rng = substream(config.seed, "solver-init");
    let mut w = BeamformerSet::random_feasible(
        &mut rng,
        scenario.n_antennas,
        scenario.n_users,
        0.9 * scenario.power_budget,
    )?;
    if config.pin_artificial {
        w.vectors_mut()[0] = CVec::zeros(scenario.n_antennas)?;
    }
    let mut v = if metric.uses_v() {
        let target = steering_vector(
            scenario.sensing_channels[0].theta,
            scenario.n_antennas,
            ANTENNA_SPACING,
        )?;
        Some(project_unit_sphere(&target)?)
    } else {
        None
    };
    let mut c = 1.0;
    let mut y = match &config.objective {
        Objective::Weighted(wts) => wts.clone(),
        Objective::WorstUser => vec![1.0 / scenario.n_users as f64; scenario.n_users],
    };

    let mut psi = utility_vector(&w, scenario, secrecy)?.psi;
    let mut s = metric.metric_value(&w, v.as_ref(), scenario)?;

    let mut best_w = w.clone();
    let mut best_v = v.clone();
    let mut best_obj = f64::NEG_INFINITY;
    let mut feasible_found = false;
    let mut trajectory = Vec::new();

    // Record the starting point so trajectories always cover k = 0.
    trajectory.push(TrajectoryRecord {
        k: 0,
        objective: y.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>() + c * s / s_scale,
        s_value: s,
        c,
        best_obj,
        stationarity: stationarity_norm(
            &SolverState {
                w: w.clone(),
                v: v.clone(),
                c,
                y: y.clone(),
                k: 0,
            },
            scenario,
            metric,
            config,
        )?,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    });

    for k in 1..=config.max_iters {
        let (c_next, y_next) = inner_update(
            &psi,
            s / s_scale,
            c,
            &config.objective,
            config.regularize,
            config.schedules.lambda(k),
            config.schedules.beta(k),
            config.schedules.c_cap(k),
        )?;
        let (w_next, v_next) = outer_update(
            &w,
            v.as_ref(),
            scenario,
            metric,
            secrecy,
            c_next / s_scale,
            &y_next,
            config.schedules.alpha(k),
            config.max_step_fraction,
            config.pin_artificial,
        )?;

        let psi_next = utility_vector(&w_next, scenario, secrecy)?.psi;
        let s_next = metric.metric_value(&w_next, v_next.as_ref(), scenario)?;
        if s_next >= -BEST_FEASIBILITY_TOL * s_scale {
            let cand = config.objective.min_obj(&psi_next);
            if cand >= best_obj {
                best_obj = cand;
                best_w = w_next.clone();
                best_v = v_next.clone();
                feasible_found = true;
            }
        }

        w = w_next;
        v = v_next;
        c = c_next;
        y = y_next;
        psi = psi_next;
        s = s_next;

        if k % config.log_every == 0 || k == config.max_iters || k == 1 {
            let state = SolverState {
                w: w.clone(),
                v: v.clone(),
                c,
                y: y.clone(),
                k,
            };
            let raw = y.iter().zip(&psi).map(|(a, b)| a * b).sum::<f64>() + c * s / s_scale;
            trajectory.push(TrajectoryRecord {
                k,
                objective: raw,
                s_value: s,
                c,
                best_obj,
                stationarity: stationarity_norm(&state, scenario, metric, config)?,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }

    Ok(SolverResult {
        best_w,
        best_v,
        best_obj,
        feasible_found,
        trajectory,
    })
}
