//! Monte Carlo statistics, moment-formula verification, and convergence
//! studies tying simulated paths to the closed-form expectations.
//!
//! Targets that depend on the law of `E_t` are computed from an ensemble
//! on an independent seed lane, so target and estimate errors are
//! uncorrelated. Ensembles parallelize per path with deterministic
//! per-path streams and reduce in path order, making every report
//! reproducible bit-for-bit regardless of thread count.

use crate::closed_form::{fundamental_solution, preset_solution, LinearCoeffs, ModelPreset, PresetName};
use crate::error::{Error, Result};
use crate::path::MonotonePath;
use crate::rng::{self, LANE_PRIMARY, LANE_TARGET};
use crate::sde::{make_driver, solve_duality, solve_euler, DrivingTriple, SdeSpec};
use crate::special::{adaptive_gl, fractional_integral, gamma_fn, mittag_leffler, MittagLefflerParams};
use crate::timechange::{identity_pair, inverse_stable_pair, TimeChangePair};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Clock family for an ensemble.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ClockSpec {
    /// `E_t = t`.
    Identity,
    /// `E_t = R t` with `R` drawn uniformly from `[low, high]` per path.
    Scaled { low: f64, high: f64 },
    /// First hitting time process of a stable subordinator of index `beta`.
    InverseStable { beta: f64 },
    /// A user-supplied nondecreasing path, shared by every path of the
    /// ensemble.
    UserPath(MonotonePath),
}

/// How an ensemble's clocks and drivers are generated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairConfig {
    pub clock: ClockSpec,
    /// Outer grid spacing.
    pub step: f64,
    /// Subordinator grid spacing (inverse-stable clocks).
    pub inner_step: f64,
    pub seed: u64,
}

impl PairConfig {
    pub fn inverse_stable(beta: f64, step: f64, seed: u64) -> Self {
        Self {
            clock: ClockSpec::InverseStable { beta },
            step,
            inner_step: step,
            seed,
        }
    }

    pub fn pair(&self, horizon: f64, lane: u64, index: usize) -> Result<TimeChangePair> {
        let mut gen = rng::stream(self.seed, rng::path_stream(lane, index));
        match &self.clock {
            ClockSpec::Identity => identity_pair(self.step, horizon),
            ClockSpec::Scaled { low, high } => {
                if !(high >= low && *low > 0.0) {
                    return Err(Error::config("scaled clock needs 0 < low <= high"));
                }
                let r = low + (high - low) * gen.random::<f64>();
                crate::timechange::scaled_pair(r, self.step, horizon)
            }
            ClockSpec::InverseStable { beta } => {
                inverse_stable_pair(*beta, self.inner_step, self.step, horizon, &mut gen)
            }
            ClockSpec::UserPath(d) => {
                let out = crate::path::uniform_grid(self.step, horizon)?;
                TimeChangePair::make_on(d.clone(), &out)
            }
        }
    }

    pub fn driver(&self, horizon: f64, lane: u64, index: usize) -> Result<DrivingTriple> {
        let mut gen = rng::stream(self.seed, rng::path_stream(lane, index));
        let pair = match &self.clock {
            ClockSpec::Identity => identity_pair(self.step, horizon)?,
            ClockSpec::Scaled { low, high } => {
                if !(high >= low && *low > 0.0) {
                    return Err(Error::config("scaled clock needs 0 < low <= high"));
                }
                let r = low + (high - low) * gen.random::<f64>();
                crate::timechange::scaled_pair(r, self.step, horizon)?
            }
            ClockSpec::InverseStable { beta } => {
                inverse_stable_pair(*beta, self.inner_step, self.step, horizon, &mut gen)?
            }
            ClockSpec::UserPath(d) => {
                let out = crate::path::uniform_grid(self.step, horizon)?;
                TimeChangePair::make_on(d.clone(), &out)?
            }
        };
        make_driver(pair, &mut gen)
    }
}

/// Monte Carlo point estimate with its standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
    pub variance: f64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::config("need at least 2 samples"));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance =
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            std_error: (variance / n as f64).sqrt(),
            n,
            seed,
            variance,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetProvenance {
    ClosedForm,
    Quadrature,
    MittagLeffler,
    Oracle,
}

/// One moment comparison: estimate against an independently derived
/// target, summarized by its z-score.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub estimate: McEstimate,
    pub target: f64,
    pub target_provenance: TargetProvenance,
    pub z_score: f64,
}

impl MomentCheck {
    fn new(
        name: impl Into<String>,
        estimate: McEstimate,
        target: f64,
        provenance: TargetProvenance,
    ) -> Self {
        let z_score = (estimate.mean - target) / estimate.std_error;
        Self {
            name: name.into(),
            estimate,
            target,
            target_provenance: provenance,
            z_score,
        }
    }

    pub fn passes(&self, z_limit: f64) -> bool {
        self.z_score.abs() <= z_limit
    }

    /// Report row in the external JSON shape.
    pub fn report_row(&self) -> serde_json::Value {
        serde_json::json!({
            "check_name": self.name,
            "n": self.estimate.n,
            "seed": self.estimate.seed,
            "estimate": self.estimate.mean,
            "se": self.estimate.std_error,
            "target": self.target,
            "provenance": self.target_provenance,
            "z": self.z_score,
        })
    }
}

/// Deterministic parallel map over path indices: results are collected in
/// path order, so reductions do not depend on the thread schedule.
pub fn par_map_paths<T: Send>(
    n: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

fn integral_table(f: &(dyn Fn(f64) -> f64 + Sync), upto: f64, nodes: usize) -> Vec<(f64, f64)> {
    // Cumulative trapezoid of a smooth function on a uniform grid.
    let h = upto / nodes as f64;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(nodes + 1);
    out.push((0.0, 0.0));
    let mut prev = f(0.0);
    for i in 1..=nodes {
        let x = i as f64 * h;
        let cur = f(x);
        acc += 0.5 * (prev + cur) * h;
        prev = cur;
        out.push((x, acc));
    }
    out
}

fn table_lookup(table: &[(f64, f64)], x: f64) -> f64 {
    let n = table.len();
    if x <= 0.0 {
        return 0.0;
    }
    if x >= table[n - 1].0 {
        return table[n - 1].1;
    }
    let h = table[1].0 - table[0].0;
    let i = ((x / h) as usize).min(n - 2);
    let (x0, y0) = table[i];
    let (x1, y1) = table[i + 1];
    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
}

/// Sample `E_t` over an ensemble on the given lane.
fn sample_clock_values(
    cfg: &PairConfig,
    t: f64,
    n: usize,
    lane: u64,
) -> Result<Vec<f64>> {
    par_map_paths(n, |i| {
        let pair = cfg.pair(t, lane, i)?;
        Ok(pair.e().value_at(t))
    })
}

/// Mean check for the homogeneous linear SDE
/// `dX = rho(t) X dt + mu(E) X dE + sigma(E) X dB_E`:
/// `E[X_t] = x0 exp(int_0^t rho) int exp(int_0^v mu) p_t(dv)`
/// with `p_t` the law of `E_t`, estimated from an independent clock
/// ensemble.
#[allow(clippy::too_many_arguments)]
pub fn check_mean_homogeneous(
    rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    x0: f64,
    cfg: &PairConfig,
    t: f64,
    n_paths: usize,
) -> Result<MomentCheck> {
    let rho_int = adaptive_gl(&|s| rho(s), 0.0, t, 1e-12, 64);
    let lead = x0 * rho_int.exp();

    // Estimate: full pathwise closed-form solution.
    let rho_f = rho.clone();
    let mu_f = mu.clone();
    let sig_f = sigma.clone();
    let xs = par_map_paths(n_paths, move |i| {
        let drv = cfg.driver(t, LANE_PRIMARY, i)?;
        let coeffs = LinearCoeffs::homogeneous(
            {
                let rho_f = rho_f.clone();
                Arc::new(move |s, _| rho_f(s))
            },
            {
                let mu_f = mu_f.clone();
                Arc::new(move |_, u| mu_f(u))
            },
            {
                let sig_f = sig_f.clone();
                Arc::new(move |_, u| sig_f(u))
            },
            x0,
        );
        Ok(fundamental_solution(&coeffs, &drv)?.end_value())
    })?;
    let estimate = McEstimate::from_samples(&xs, cfg.seed)?;

    // Target from an independent clock ensemble (twice the paths: clocks
    // are cheap and a tight target keeps the spec's z formula honest).
    let clock_values = sample_clock_values(cfg, t, 2 * n_paths, LANE_TARGET)?;
    let vmax = clock_values.iter().copied().fold(0.0, f64::max).max(1e-9);
    let mu_table = integral_table(&*mu, vmax, 8192);
    let target = lead
        * clock_values
            .iter()
            .map(|&v| table_lookup(&mu_table, v).exp())
            .sum::<f64>()
        / clock_values.len() as f64;

    Ok(MomentCheck::new(
        "mean_homogeneous",
        estimate,
        target,
        TargetProvenance::Quadrature,
    ))
}

/// Mittag-Leffler mean check for `mu = -lambda` on an inverse stable
/// clock: `E[X_t] = x0 exp(int rho) E_beta(-lambda t^beta)`. Reports both
/// the Laplace-form estimator (`sigma` integrated out exactly) and the
/// full simulated path estimator.
pub fn check_mittag_leffler(
    lambda: f64,
    beta: f64,
    rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    x0: f64,
    step: f64,
    seed: u64,
    t: f64,
    n_paths: usize,
) -> Result<(MomentCheck, MomentCheck)> {
    if !(lambda > 0.0) {
        return Err(Error::config("lambda must be positive"));
    }
    let cfg = PairConfig::inverse_stable(beta, step, seed);
    let rho_int = adaptive_gl(&|s| rho(s), 0.0, t, 1e-12, 64);
    let lead = x0 * rho_int.exp();
    let sigma = 1.0f64;

    let samples = par_map_paths(n_paths, |i| {
        let drv = cfg.driver(t, LANE_PRIMARY, i)?;
        let e_t = drv.pair.e().value_at(t);
        let b_t = drv.b_of_e.value_at(t);
        let laplace = lead * (-lambda * e_t).exp();
        let full = lead * ((-lambda - 0.5 * sigma * sigma) * e_t + sigma * b_t).exp();
        Ok((laplace, full))
    })?;
    let laplace: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let full: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let ml = mittag_leffler(&MittagLefflerParams::new(beta, -lambda * t.powf(beta)))?;
    let target = lead * ml;

    Ok((
        MomentCheck::new(
            "mittag_leffler_mean_laplace",
            McEstimate::from_samples(&laplace, seed)?,
            target,
            TargetProvenance::MittagLeffler,
        ),
        MomentCheck::new(
            "mittag_leffler_mean_full",
            McEstimate::from_samples(&full, seed)?,
            target,
            TargetProvenance::MittagLeffler,
        ),
    ))
}

/// Ornstein-Uhlenbeck analogue mean check:
/// `E[X_t] = e^{-alpha t} (x0 + mu E[int_0^t e^{alpha s} dE_s])`,
/// the expectation estimated from an independent clock ensemble, or in
/// closed form for the scaled clock.
pub fn check_ou_mean(
    alpha: f64,
    mu: f64,
    sigma: f64,
    x0: f64,
    cfg: &PairConfig,
    t: f64,
    n_paths: usize,
) -> Result<MomentCheck> {
    let preset = ModelPreset::new(
        PresetName::OrnsteinUhlenbeckAnalogue,
        &[("alpha", alpha), ("mu", mu), ("sigma", sigma), ("x0", x0)],
    );
    let xs = par_map_paths(n_paths, |i| {
        let drv = cfg.driver(t, LANE_PRIMARY, i)?;
        Ok(preset_solution(&preset, &drv)?.end_value())
    })?;
    let estimate = McEstimate::from_samples(&xs, cfg.seed)?;

    let (target, provenance) = match &cfg.clock {
        ClockSpec::Scaled { low, high } => {
            // E[R] (1 - e^{-alpha t}) mu / alpha + x0 e^{-alpha t}.
            let mean_r = 0.5 * (low + high);
            (
                x0 * (-alpha * t).exp() + mu * mean_r / alpha * (1.0 - (-alpha * t).exp()),
                TargetProvenance::ClosedForm,
            )
        }
        _ => {
            let weights = par_map_paths(2 * n_paths, |i| {
                let pair = cfg.pair(t, LANE_TARGET, i)?;
                let e = pair.e();
                let (grid, ev) = (e.grid(), e.values());
                let mut acc = 0.0;
                for k in 1..grid.len() {
                    if grid[k] > t + 1e-12 {
                        break;
                    }
                    acc += (alpha * grid[k - 1]).exp() * (ev[k] - ev[k - 1]);
                }
                Ok(acc)
            })?;
            let mean_w = weights.iter().sum::<f64>() / weights.len() as f64;
            (
                (-alpha * t).exp() * (x0 + mu * mean_w),
                TargetProvenance::Quadrature,
            )
        }
    };

    Ok(MomentCheck::new("ou_mean", estimate, target, provenance))
}

/// Alternative OU target through the fractional integral route:
/// `E[X_t] = e^{-alpha t} (x0 + mu beta c Gamma(beta) (J^beta g_{alpha,t})(t))`
/// with `g_{alpha,t}(r) = e^{alpha (t - r)}` and `c` estimated from the
/// clock ensemble via `E[E_t] = c t^beta`.
pub fn ou_mean_fractional_target(
    alpha: f64,
    mu: f64,
    x0: f64,
    beta: f64,
    cfg: &PairConfig,
    t: f64,
    n_paths: usize,
) -> Result<(f64, f64)> {
    let clock_values = sample_clock_values(cfg, t, n_paths, LANE_TARGET)?;
    let est = McEstimate::from_samples(&clock_values, cfg.seed)?;
    let c = est.mean / t.powf(beta);
    let c_se = est.std_error / t.powf(beta);
    let j = fractional_integral(|r| (alpha * (t - r)).exp(), beta, t, 2048)?;
    let g = gamma_fn(beta)?;
    let target = (-alpha * t).exp() * (x0 + mu * beta * c * g * j);
    let target_se = ((-alpha * t).exp() * mu * beta * g * j * c_se).abs();
    Ok((target, target_se))
}

/// Variance check for the homogeneous linear SDE:
/// `V[X_t] = x0^2 e^{2 int rho} [ int e^{2 int mu + int sigma^2} p_t(dv)
///   - (int e^{int mu} p_t(dv))^2 ]`.
/// The estimator's standard error is the leave-one-out jackknife of the
/// sample variance.
#[allow(clippy::too_many_arguments)]
pub fn check_variance_homogeneous(
    rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    x0: f64,
    cfg: &PairConfig,
    t: f64,
    n_paths: usize,
) -> Result<MomentCheck> {
    let rho_int = adaptive_gl(&|s| rho(s), 0.0, t, 1e-12, 64);
    let lead = x0 * rho_int.exp();

    let rho_f = rho.clone();
    let mu_f = mu.clone();
    let sig_f = sigma.clone();
    let xs = par_map_paths(n_paths, move |i| {
        let drv = cfg.driver(t, LANE_PRIMARY, i)?;
        let coeffs = LinearCoeffs::homogeneous(
            {
                let rho_f = rho_f.clone();
                Arc::new(move |s, _| rho_f(s))
            },
            {
                let mu_f = mu_f.clone();
                Arc::new(move |_, u| mu_f(u))
            },
            {
                let sig_f = sig_f.clone();
                Arc::new(move |_, u| sig_f(u))
            },
            x0,
        );
        Ok(fundamental_solution(&coeffs, &drv)?.end_value())
    })?;

    let n = xs.len() as f64;
    let s1: f64 = xs.iter().sum();
    let s2: f64 = xs.iter().map(|x| x * x).sum();
    let mean = s1 / n;
    let var = (s2 - n * mean * mean) / (n - 1.0);
    // Leave-one-out jackknife of the sample variance.
    let mut jk_sum = 0.0;
    let mut jk_sq = 0.0;
    for &x in &xs {
        let mean_i = (s1 - x) / (n - 1.0);
        let var_i = (s2 - x * x - (n - 1.0) * mean_i * mean_i) / (n - 2.0);
        jk_sum += var_i;
        jk_sq += var_i * var_i;
    }
    let m = xs.len() as f64;
    let jk_mean = jk_sum / m;
    let jk_se = ((m - 1.0) / m * (jk_sq - m * jk_mean * jk_mean)).sqrt();

    let estimate = McEstimate {
        mean: var,
        std_error: jk_se,
        n: xs.len(),
        seed: cfg.seed,
        variance: var,
    };

    let clock_values = sample_clock_values(cfg, t, 2 * n_paths, LANE_TARGET)?;
    let vmax = clock_values.iter().copied().fold(0.0, f64::max).max(1e-9);
    let mu_table = integral_table(&*mu, vmax, 8192);
    let mu2_sig2_table = integral_table(
        &move |u| 2.0 * mu(u) + sigma(u) * sigma(u),
        vmax,
        8192,
    );
    let (mut first, mut second) = (0.0, 0.0);
    for &v in &clock_values {
        first += table_lookup(&mu2_sig2_table, v).exp();
        second += table_lookup(&mu_table, v).exp();
    }
    first /= clock_values.len() as f64;
    second /= clock_values.len() as f64;
    let target = lead * lead * (first - second * second);

    Ok(MomentCheck::new(
        "variance_homogeneous",
        estimate,
        target,
        TargetProvenance::Quadrature,
    ))
}

/// One row of a convergence study.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub step: f64,
    pub strong_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
}

/// Log-log least-squares slope of strong error against step.
fn loglog_slope(rows: &[ConvergenceRow]) -> f64 {
    let n = rows.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let x = r.step.ln();
        let y = r.strong_error.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Strong error of the Euler scheme against the exact linear solution on
/// shared noise, across a ladder of steps.
pub fn convergence_study_linear(
    rho: f64,
    mu: f64,
    sigma: f64,
    x0: f64,
    beta: f64,
    seed: u64,
    steps: &[f64],
    n_paths: usize,
    t_final: f64,
) -> Result<ConvergenceStudy> {
    let mut rows = Vec::with_capacity(steps.len());
    for &h in steps {
        let cfg = PairConfig::inverse_stable(beta, h, seed);
        let spec = SdeSpec::linear_const(rho, mu, sigma, x0);
        let preset = ModelPreset::new(
            PresetName::BlackScholesAnalogue,
            &[("rho", rho), ("mu", mu), ("sigma", sigma), ("x0", x0)],
        );
        let sq = par_map_paths(n_paths, |i| {
            let drv = cfg.driver(t_final, LANE_PRIMARY, i)?;
            let euler = solve_euler(&spec, &drv)?.path.end_value();
            let exact = preset_solution(&preset, &drv)?.end_value();
            Ok((euler - exact) * (euler - exact))
        })?;
        let strong_error = (sq.iter().sum::<f64>() / n_paths as f64).sqrt();
        rows.push(ConvergenceRow {
            step: h,
            strong_error,
        });
    }
    let slope = loglog_slope(&rows);
    Ok(ConvergenceStudy { rows, slope })
}

/// Deterministic fixture (`sigma = 0`, linear drift in clock time):
/// Euler order one.
pub fn convergence_study_deterministic(
    rho: f64,
    x0: f64,
    steps: &[f64],
    t_final: f64,
) -> Result<ConvergenceStudy> {
    let mut rows = Vec::with_capacity(steps.len());
    for &h in steps {
        let pair = identity_pair(h, t_final)?;
        let mut gen = rng::stream(0, 0);
        let drv = make_driver(pair, &mut gen)?;
        let spec = SdeSpec::new(move |_, _, x| rho * x, |_, _, _| 0.0, |_, _, _| 0.0, x0);
        let euler = solve_euler(&spec, &drv)?.path.end_value();
        let exact = x0 * (rho * t_final).exp();
        rows.push(ConvergenceRow {
            step: h,
            strong_error: (euler - exact).abs(),
        });
    }
    let slope = loglog_slope(&rows);
    Ok(ConvergenceStudy { rows, slope })
}

/// Duality-vs-direct strong gap on shared noise across a step ladder.
pub fn convergence_study_duality(
    mu: f64,
    sigma: f64,
    x0: f64,
    beta: f64,
    seed: u64,
    steps: &[f64],
    n_paths: usize,
    t_final: f64,
) -> Result<ConvergenceStudy> {
    let mut rows = Vec::with_capacity(steps.len());
    for &h in steps {
        let cfg = PairConfig::inverse_stable(beta, h, seed);
        let spec = SdeSpec::linear_const(0.0, mu, sigma, x0);
        let sq = par_map_paths(n_paths, |i| {
            let drv = cfg.driver(t_final, LANE_PRIMARY, i)?;
            let direct = solve_euler(&spec, &drv)?.path.end_value();
            let dual = solve_duality(&spec, &drv)?.path.end_value();
            Ok((direct - dual) * (direct - dual))
        })?;
        rows.push(ConvergenceRow {
            step: h,
            strong_error: (sq.iter().sum::<f64>() / n_paths as f64).sqrt(),
        });
    }
    let slope = loglog_slope(&rows);
    Ok(ConvergenceStudy { rows, slope })
}

/// Log-log regression of the sample mean of `E_t` against `t`: the slope
/// recovers the index `beta`, the intercept the (estimated, never
/// assumed) constant `c(beta)`.
pub struct ScalingFit {
    pub slope: f64,
    pub c_estimate: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn clock_scaling_fit(
    beta: f64,
    step: f64,
    seed: u64,
    n_paths: usize,
    times: &[f64],
) -> Result<ScalingFit> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let cfg = PairConfig::inverse_stable(beta, step, seed);
    let sums = par_map_paths(n_paths, |i| {
        let pair = cfg.pair(horizon, LANE_PRIMARY, i)?;
        Ok(times.iter().map(|&t| pair.e().value_at(t)).collect::<Vec<f64>>())
    })?;
    let mut points = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let mean = sums.iter().map(|row| row[k]).sum::<f64>() / n_paths as f64;
        points.push((t, mean));
    }
    let rows: Vec<ConvergenceRow> = points
        .iter()
        .map(|&(t, m)| ConvergenceRow {
            step: t,
            strong_error: m,
        })
        .collect();
    let slope = loglog_slope(&rows);
    // c from the final point: E[E_t] = c t^beta.
    let (t_last, m_last) = *points.last().unwrap();
    let c_estimate = m_last / t_last.powf(beta);
    Ok(ScalingFit {
        slope,
        c_estimate,
        points,
    })
}

/// Fraction of outer grid cells on which the inverse stable clock is
/// exactly flat, averaged over an ensemble.
pub fn flat_fraction(
    beta: f64,
    inner_step: f64,
    step: f64,
    horizon: f64,
    seed: u64,
    n_paths: usize,
) -> Result<f64> {
    let fractions = par_map_paths(n_paths, |i| {
        let mut gen = rng::stream(seed, rng::path_stream(LANE_PRIMARY, i));
        let pair = inverse_stable_pair(beta, inner_step, step, horizon, &mut gen)?;
        let ev = pair.e().values();
        let flat = ev.windows(2).filter(|w| w[1] == w[0]).count();
        Ok(flat as f64 / (ev.len() - 1) as f64)
    })?;
    Ok(fractions.iter().sum::<f64>() / n_paths as f64)
}
