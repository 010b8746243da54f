//! Experiment runner and verification harness for the secure ISAC
//! beamforming optimizer.
//!
//! Subcommands:
//! - `run`: Monte Carlo experiment loop — generate scenarios, run the solver
//!   over trials (optionally sweeping one parameter), write a CSV of per-trial
//!   rows plus a JSON summary.
//! - `gradcheck`: compare every analytic gradient family against central
//!   finite differences at random feasible points.
//! - `sopcheck`: validate the closed-form secrecy-outage chain against Monte
//!   Carlo eavesdropper draws.
//!
//! Exit codes: 0 success, 1 config error, 2 verification failure, 3 numeric
//! failure.

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

use isac_opt::numerics::finite_diff_gradient;
use isac_opt::projections::project_unit_sphere;
use isac_opt::rates::{achievable_rate, rate_gradient};
use isac_opt::rng::{substream, trial_seed};
use isac_opt::scenario::{generate_scenario, GeometryConfig, Scenario, Sizes};
use isac_opt::sop::{
    monte_carlo_sop, redundancy_gradient, solve_redundancy_rate, BeamformerSet,
};
use isac_opt::{CVec, SensingMetric, SolverConfig};

#[derive(Parser)]
#[command(name = "isac-opt", about = "Secure ISAC beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment loop described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path; the JSON summary lands next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        log_every: Option<usize>,
    },
    /// Check analytic gradients against finite differences.
    Gradcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Self-test: corrupt one gradient family and expect failure.
        #[arg(long, hide = true)]
        corrupt_rate_gradient: bool,
    },
    /// Check the closed-form secrecy-outage chain against Monte Carlo draws.
    Sopcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Top-level experiment description, JSON on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct ExperimentConfig {
    geometry: GeometryConfig,
    sizes: Sizes,
    metric: SensingMetric,
    solver: SolverConfig,
    trials: usize,
    sweep: Option<Sweep>,
    output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            sizes: Sizes {
                n_antennas: 8,
                n_users: 3,
                n_eves: 3,
                n_scatterers: 2,
            },
            metric: SensingMetric::Sinr { gamma: 10.0 },
            solver: SolverConfig::default(),
            trials: 1,
            sweep: None,
            output_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sweep {
    parameter: SweepParameter,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SweepParameter {
    /// Sensing SINR threshold in dB (SINR metric only).
    GammaDb,
    /// Beampattern MSE allowance (beampattern metric only).
    GammaMse,
    /// Detection-probability target (detection metric only).
    Phi,
    NAntennas,
    NEves,
    PowerDbm,
}

enum Failure {
    Config(String),
    Verification(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Verification(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<isac_opt::Error> for Failure {
    fn from(e: isac_opt::Error) -> Self {
        match e {
            isac_opt::Error::Numeric(_) | isac_opt::Error::DegenerateBeam { .. } => {
                Failure::Numeric(e.to_string())
            }
            other => Failure::Config(other.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            trials,
            seed,
            threads,
            log_every,
        } => cmd_run(&config, out, trials, seed, threads, log_every),
        Command::Gradcheck {
            config,
            points,
            seed,
            corrupt_rate_gradient,
        } => cmd_gradcheck(config.as_deref(), points, seed, corrupt_rate_gradient),
        Command::Sopcheck {
            config,
            samples,
            trials,
            seed,
        } => cmd_sopcheck(config.as_deref(), samples, trials, seed),
    };
    if let Err(f) = outcome {
        eprintln!("error: {}", f.message());
        std::process::exit(f.code());
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Resolve a metric against a concrete scenario: an empty desired beampattern
/// becomes the default rectangular pattern around the target angle.
fn resolve_metric(metric: &SensingMetric, scenario: &Scenario) -> Result<SensingMetric, Failure> {
    let resolved = match metric {
        SensingMetric::Beampattern { gamma_mse, desired } if desired.is_empty() => {
            SensingMetric::default_beampattern(
                *gamma_mse,
                scenario.sensing_channels[0].theta,
                scenario.n_antennas,
                scenario.power_budget,
            )?
        }
        other => other.clone(),
    };
    resolved.validate()?;
    Ok(resolved)
}

fn apply_sweep(
    config: &ExperimentConfig,
    value: f64,
) -> Result<(GeometryConfig, Sizes, SensingMetric), Failure> {
    let mut geometry = config.geometry.clone();
    let mut sizes = config.sizes;
    let mut metric = config.metric.clone();
    let Some(sweep) = &config.sweep else {
        return Ok((geometry, sizes, metric));
    };
    match sweep.parameter {
        SweepParameter::GammaDb => match &mut metric {
            SensingMetric::Sinr { gamma } => *gamma = 10f64.powf(value / 10.0),
            _ => {
                return Err(Failure::Config(
                    "gamma_db sweep requires the SINR metric".into(),
                ))
            }
        },
        SweepParameter::GammaMse => match &mut metric {
            SensingMetric::Beampattern { gamma_mse, .. } => *gamma_mse = value,
            _ => {
                return Err(Failure::Config(
                    "gamma_mse sweep requires the beampattern metric".into(),
                ))
            }
        },
        SweepParameter::Phi => match &mut metric {
            SensingMetric::Detection { phi, .. } => *phi = value,
            _ => {
                return Err(Failure::Config(
                    "phi sweep requires the detection metric".into(),
                ))
            }
        },
        SweepParameter::NAntennas => sizes.n_antennas = value as usize,
        SweepParameter::NEves => sizes.n_eves = value as usize,
        SweepParameter::PowerDbm => geometry.power_budget_dbm = value,
    }
    Ok((geometry, sizes, metric))
}

struct TrialRow {
    sweep_value: Option<f64>,
    trial: usize,
    seed: u64,
    best_obj: f64,
    realized_s: f64,
    iterations: usize,
    wall_ms: f64,
}

fn run_one_trial(
    geometry: &GeometryConfig,
    sizes: Sizes,
    metric: &SensingMetric,
    solver: &SolverConfig,
    sweep_value: Option<f64>,
    trial: usize,
    seed: u64,
) -> Result<TrialRow, Failure> {
    let mut geometry = geometry.clone();
    geometry.seed = seed;
    let scenario = generate_scenario(&geometry, sizes)?;
    let metric = resolve_metric(metric, &scenario)?;
    let mut solver = solver.clone();
    solver.seed = seed;
    let result = isac_opt::solver::run(&scenario, &metric, &solver)?;
    let realized_s = metric.metric_value(&result.best_w, result.best_v.as_ref(), &scenario)?;
    let wall_ms = result.trajectory.last().map_or(0.0, |r| r.wall_ms);
    Ok(TrialRow {
        sweep_value,
        trial,
        seed,
        best_obj: result.best_obj,
        realized_s,
        iterations: solver.max_iters,
        wall_ms,
    })
}

fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    trials: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    log_every: Option<usize>,
) -> Result<(), Failure> {
    let mut config = load_config(Some(config_path))?;
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(s) = seed {
        config.geometry.seed = s;
    }
    if let Some(k) = log_every {
        config.solver.log_every = k;
    }
    if config.trials == 0 {
        return Err(Failure::Config("trials must be at least 1".into()));
    }
    let out = out
        .or(config.output_path.clone())
        .ok_or_else(|| Failure::Config("no output path (use --out or output_path)".into()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;

    let sweep_values: Vec<Option<f64>> = match &config.sweep {
        Some(s) if !s.values.is_empty() => s.values.iter().copied().map(Some).collect(),
        Some(_) => return Err(Failure::Config("sweep value list is empty".into())),
        None => vec![None],
    };

    let mut rows: Vec<TrialRow> = Vec::new();
    for (sweep_idx, sweep_value) in sweep_values.iter().enumerate() {
        let (geometry, sizes, metric) =
            apply_sweep(&config, sweep_value.unwrap_or(f64::NAN))?;
        let sweep_seed = trial_seed(config.geometry.seed, sweep_idx as u64);
        // Trials run in parallel; collection preserves trial order.
        let batch: Vec<Result<TrialRow, Failure>> = pool.install(|| {
            use rayon::prelude::*;
            (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    run_one_trial(
                        &geometry,
                        sizes,
                        &metric,
                        &config.solver,
                        *sweep_value,
                        trial,
                        trial_seed(sweep_seed, trial as u64),
                    )
                })
                .collect()
        });
        for row in batch {
            rows.push(row?);
        }
    }

    write_csv(&out, &rows)?;
    write_summary(&out, &sweep_values, &rows, config.trials)?;
    println!(
        "wrote {} rows to {} (summary: {})",
        rows.len(),
        out.display(),
        summary_path(&out).display()
    );
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.12e}")
    }
}

fn write_csv(path: &Path, rows: &[TrialRow]) -> Result<(), Failure> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut text = String::from("sweep_value,trial,seed,best_obj,realized_s,iterations,wall_ms\n");
    for r in rows {
        let sweep = r.sweep_value.map_or(String::new(), |v| format!("{v}"));
        text.push_str(&format!(
            "{},{},{},{},{},{},{:.3}\n",
            sweep,
            r.trial,
            r.seed,
            fmt_f64(r.best_obj),
            fmt_f64(r.realized_s),
            r.iterations,
            r.wall_ms
        ));
    }
    file.write_all(text.as_bytes())
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn summary_path(csv: &Path) -> PathBuf {
    let mut name = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    name.push_str(".summary.json");
    csv.with_file_name(name)
}

fn write_summary(
    csv: &Path,
    sweep_values: &[Option<f64>],
    rows: &[TrialRow],
    trials: usize,
) -> Result<(), Failure> {
    let mut entries = Vec::new();
    for (i, sv) in sweep_values.iter().enumerate() {
        let chunk = &rows[i * trials..(i + 1) * trials];
        let feasible: Vec<f64> = chunk
            .iter()
            .map(|r| r.best_obj)
            .filter(|v| v.is_finite())
            .collect();
        let n = feasible.len();
        let mean = if n > 0 {
            Some(feasible.iter().sum::<f64>() / n as f64)
        } else {
            None
        };
        let stderr = match (n, mean) {
            (n, Some(m)) if n > 1 => {
                let var =
                    feasible.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
                Some((var / n as f64).sqrt())
            }
            _ => None,
        };
        entries.push(serde_json::json!({
            "sweep_value": sv,
            "n_trials": trials,
            "n_feasible": n,
            "mean_best_obj": mean,
            "stderr_best_obj": stderr,
        }));
    }
    let path = summary_path(csv);
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&serde_json::json!({ "points": entries }))
            .map_err(|e| Failure::Config(e.to_string()))?,
    )
    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Max relative deviation between an analytic gradient and its
/// finite-difference counterpart, normalized by the analytic sup norm.
fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .fold(0f64, |m, v| m.max(v.abs()))
        .max(1e-9);
    analytic
        .iter()
        .zip(fd)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

fn flatten_blocks(blocks: &[CVec]) -> Vec<f64> {
    let mut out = Vec::new();
    for b in blocks {
        b.flatten_into(&mut out);
    }
    out
}

fn cmd_gradcheck(
    config_path: Option<&Path>,
    points: usize,
    seed: Option<u64>,
    corrupt_rate_gradient: bool,
) -> Result<(), Failure> {
    let mut config = load_config(config_path)?;
    if let Some(s) = seed {
        config.geometry.seed = s;
    }
    if points == 0 {
        return Err(Failure::Config("need at least one sample point".into()));
    }
    let scenario = generate_scenario(&config.geometry, config.sizes)?;
    let n = scenario.n_antennas;
    let p = scenario.power_budget;
    let theta0 = scenario.sensing_channels[0].theta;
    let metrics: Vec<(&str, SensingMetric)> = vec![
        ("sinr", SensingMetric::Sinr { gamma: 2.0 }),
        (
            "beampattern",
            SensingMetric::default_beampattern(1.0, theta0, n, p)?,
        ),
        (
            "detection",
            SensingMetric::Detection {
                p_fa: 0.01,
                phi: 0.8,
            },
        ),
        ("mutual_info", SensingMetric::MutualInfo { delta: 1.0 }),
    ];

    let mut worst: Vec<(String, f64)> = Vec::new();
    let record = |family: &str, err: f64, worst: &mut Vec<(String, f64)>| {
        match worst.iter_mut().find(|(f, _)| f == family) {
            Some((_, e)) => *e = e.max(err),
            None => worst.push((family.to_string(), err)),
        }
    };

    let mut rng = substream(config.geometry.seed, "gradcheck");
    for _ in 0..points {
        let set = BeamformerSet::random_feasible(&mut rng, n, scenario.n_users, 0.8 * p)?;
        let v_raw = BeamformerSet::random_feasible(&mut rng, n, 1, 1.0)?;
        let v = project_unit_sphere(&v_raw.vectors()[0])?;
        let flat = set.flatten();

        for i in 0..scenario.n_users {
            let mut analytic = flatten_blocks(&rate_gradient(&set, i, &scenario));
            if corrupt_rate_gradient {
                for g in &mut analytic {
                    *g = -*g;
                }
            }
            let fd = finite_diff_gradient(
                |x| {
                    achievable_rate(&BeamformerSet::from_real_coords(x, n).unwrap(), i, &scenario)
                },
                &flat,
                1e-6,
            )?;
            record("rate", max_rel_err(&analytic, &fd), &mut worst);

            if scenario.n_eves > 0 {
                let analytic = flatten_blocks(&redundancy_gradient(&set, i, &scenario)?);
                let fd = finite_diff_gradient(
                    |x| {
                        solve_redundancy_rate(
                            &BeamformerSet::from_real_coords(x, n).unwrap(),
                            i,
                            &scenario,
                            1e-12,
                        )
                        .unwrap()
                    },
                    &flat,
                    1e-5,
                )?;
                record("redundancy", max_rel_err(&analytic, &fd), &mut worst);
            }
        }

        for (name, metric) in &metrics {
            let vv = metric.uses_v().then_some(&v);
            let analytic = flatten_blocks(&metric.metric_grad_w(&set, vv, &scenario)?);
            let fd = finite_diff_gradient(
                |x| {
                    metric
                        .metric_value(&BeamformerSet::from_real_coords(x, n).unwrap(), vv, &scenario)
                        .unwrap()
                },
                &flat,
                1e-6,
            )?;
            record(name, max_rel_err(&analytic, &fd), &mut worst);

            if metric.uses_v() {
                let g = metric.metric_grad_v(&set, Some(&v), &scenario)?;
                let mut analytic = Vec::new();
                g.flatten_into(&mut analytic);
                let mut flat_v = Vec::new();
                v.flatten_into(&mut flat_v);
                let fd = finite_diff_gradient(
                    |x| {
                        metric
                            .metric_value(&set, Some(&CVec::from_real_coords(x).unwrap()), &scenario)
                            .unwrap()
                    },
                    &flat_v,
                    1e-6,
                )?;
                record("sinr_filter", max_rel_err(&analytic, &fd), &mut worst);
            }
        }
    }

    let mut failed = false;
    for (family, err) in &worst {
        let limit = if family == "detection" { 1e-5 } else { 1e-4 };
        let ok = *err <= limit;
        failed |= !ok;
        println!(
            "{family}: max relative error {err:.3e} (limit {limit:.0e}) {}",
            if ok { "ok" } else { "FAIL" }
        );
    }
    if failed {
        return Err(Failure::Verification(
            "at least one gradient family exceeded its tolerance".into(),
        ));
    }
    Ok(())
}

fn cmd_sopcheck(
    config_path: Option<&Path>,
    samples: usize,
    trials: usize,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let mut config = load_config(config_path)?;
    if let Some(s) = seed {
        config.geometry.seed = s;
    }
    if samples < 10_000 {
        return Err(Failure::Config(
            "need at least 10000 Monte Carlo samples for a meaningful gate".into(),
        ));
    }
    let scenario = generate_scenario(&config.geometry, config.sizes)?;
    if scenario.n_eves == 0 {
        return Err(Failure::Config("sopcheck needs at least one eavesdropper".into()));
    }
    if scenario.n_antennas <= scenario.n_users {
        return Err(Failure::Config(
            "sopcheck samples orthogonal beam directions and needs more antennas than beams"
                .into(),
        ));
    }
    // The closed-form outage expression is exact for orthogonal beam
    // directions, so calibration draws are orthogonalized.
    let mut rng = substream(config.geometry.seed, "sopcheck");
    // Dominant-pair view: only the strongest eavesdropper enters the gate.
    let mut dominant = scenario.clone();
    dominant.eve_snr = vec![scenario.max_eve_snr().unwrap()];
    dominant.n_eves = 1;

    let mut failed = false;
    for trial in 0..trials {
        let set = BeamformerSet::random_orthogonal(
            &mut rng,
            scenario.n_antennas,
            scenario.n_users,
            0.9 * scenario.power_budget,
        )?;
        for i in 0..scenario.n_users {
            let eta = scenario.outage_targets[i];
            let d = solve_redundancy_rate(&set, i, &scenario, 1e-10)?;
            if eta >= 1.0 || d == 0.0 {
                println!("trial {trial} user {i}: eta {eta} -> degenerate (D = 0)");
                continue;
            }
            let mc_seed = trial_seed(config.geometry.seed, (trial * 101 + i) as u64);
            let empirical = monte_carlo_sop(&set, d, i, &dominant, samples, mc_seed)?;
            let tol = 4.0 * (eta * (1.0 - eta) / samples as f64).sqrt();
            let ok = (empirical - eta).abs() <= tol;
            failed |= !ok;
            let all = monte_carlo_sop(&set, d, i, &scenario, samples, mc_seed)?;
            println!(
                "trial {trial} user {i}: D {d:.4} bits, dominant-pair outage {empirical:.4} \
                 (target {eta} ± {tol:.4}), all-eavesdropper outage {all:.4} {}",
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    if failed {
        return Err(Failure::Verification(
            "empirical outage deviated from the target beyond binomial noise".into(),
        ));
    }
    Ok(())
}
