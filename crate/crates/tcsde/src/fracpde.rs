//! Finite-difference solver for the time-fractional Fokker-Planck
//! equation driving the density of `dX = mu(X) dE + sigma(X) dB_E`, and
//! the Monte Carlo histogram it is cross-validated against.
//!
//! Time discretization: L1 rule for the Caputo derivative of order `beta`
//! (weights `(k+1)^{1-beta} - k^{1-beta}` on past increments). Space:
//! implicit finite-volume flux form with zero-flux boundaries, solved by
//! the Thomas algorithm each step; the flux form makes mass conservation
//! exact up to solver rounding. The Dirac initial condition is mollified
//! to a two-cell Gaussian, a modeling choice consistent with the PDE
//! holding in the weak sense.

use crate::error::{Error, Result};
use crate::experiments::par_map_paths;
use crate::rng::{self, LANE_PRIMARY};
use crate::sde::{make_driver, solve_duality, SdeSpec};
use crate::special::gamma_fn;
use crate::timechange::inverse_stable_pair;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type StateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Problem statement for the time-fractional Fokker-Planck solve.
#[derive(Clone)]
pub struct FracPdeProblem {
    pub beta: f64,
    pub mu_fn: StateFn,
    pub sigma_fn: StateFn,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
    pub t_final: f64,
    pub nt: usize,
    pub x_init: f64,
}

impl FracPdeProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config(format!(
                "beta must be in (0,1), got {}",
                self.beta
            )));
        }
        if !(self.y_min < self.x_init && self.x_init < self.y_max) {
            return Err(Error::config("x_init must lie inside the y domain"));
        }
        if self.ny < 64 || self.nt < 64 {
            return Err(Error::config("ny and nt must be at least 64"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::config("t_final must be positive"));
        }
        let h = (self.y_max - self.y_min) / (self.ny - 1) as f64;
        for j in 0..self.ny {
            let y = self.y_min + j as f64 * h;
            if !((self.sigma_fn)(y) > 0.0) {
                return Err(Error::config(format!(
                    "sigma must be positive on the domain, got {} at y = {y}",
                    (self.sigma_fn)(y)
                )));
            }
        }
        Ok(())
    }

    /// Domain wide enough that boundary mass is negligible:
    /// `x_init +- 8 sigma_max sqrt(t_final)`.
    pub fn auto_domain(
        beta: f64,
        mu_fn: StateFn,
        sigma_fn: StateFn,
        x_init: f64,
        t_final: f64,
        ny: usize,
        nt: usize,
    ) -> Self {
        let mut sigma_max = 0.0f64;
        for j in 0..=64 {
            let y = x_init - 4.0 + 8.0 * j as f64 / 64.0;
            sigma_max = sigma_max.max(sigma_fn(y).abs());
        }
        let half = 8.0 * sigma_max.max(1e-6) * t_final.sqrt();
        Self {
            beta,
            mu_fn,
            sigma_fn,
            y_min: x_init - half,
            y_max: x_init + half,
            ny,
            t_final,
            nt,
            x_init,
        }
    }
}

/// A density snapshot on uniform spatial nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityGrid {
    pub y_nodes: Vec<f64>,
    pub masses: Vec<f64>,
    pub time: f64,
}

impl DensityGrid {
    pub fn cell_width(&self) -> f64 {
        self.y_nodes[1] - self.y_nodes[0]
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum::<f64>() * self.cell_width()
    }

    pub fn mean(&self) -> f64 {
        let h = self.cell_width();
        self.y_nodes
            .iter()
            .zip(&self.masses)
            .map(|(y, p)| y * p * h)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let h = self.cell_width();
        self.y_nodes
            .iter()
            .zip(&self.masses)
            .map(|(y, p)| (y - m) * (y - m) * p * h)
            .sum()
    }

    /// Linear interpolation of the density, zero outside the covered range.
    pub fn density_at(&self, y: f64) -> f64 {
        let n = self.y_nodes.len();
        if y < self.y_nodes[0] || y > self.y_nodes[n - 1] {
            return 0.0;
        }
        let h = self.cell_width();
        let pos = (y - self.y_nodes[0]) / h;
        let i = (pos as usize).min(n - 2);
        let w = pos - i as f64;
        self.masses[i] * (1.0 - w) + self.masses[i + 1] * w
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,mass\n");
        for (y, m) in self.y_nodes.iter().zip(&self.masses) {
            out.push_str(&format!("{y},{m}\n"));
        }
        out
    }
}

/// Full solve output: snapshots at every time level plus accuracy
/// metadata.
pub struct CaputoSolution {
    pub snapshots: Vec<DensityGrid>,
    /// Total mass removed by nonnegativity clipping (before
    /// renormalization), accumulated over the run.
    pub clip_total: f64,
    /// Worst deviation of total mass from 1 observed before clipping.
    pub mass_drift: f64,
    pub warnings: Vec<String>,
}

fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut den = diag[0];
    if den == 0.0 {
        return Err(Error::config("tridiagonal solve failure: zero pivot"));
    }
    c[0] = sup[0] / den;
    d[0] = rhs[0] / den;
    for i in 1..n {
        den = diag[i] - sub[i] * c[i - 1];
        if den == 0.0 || !den.is_finite() {
            return Err(Error::config("tridiagonal solve failure: zero pivot"));
        }
        if i < n - 1 {
            c[i] = sup[i] / den;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// L1/implicit solve of
/// `D*^beta p = -d_y(mu p) + 1/2 d_yy(sigma^2 p)`
/// from a mollified point mass at `x_init`. Returns density snapshots at
/// every time level.
pub fn solve_caputo_fpe(prob: &FracPdeProblem) -> Result<CaputoSolution> {
    prob.validate()?;
    let ny = prob.ny;
    let nt = prob.nt;
    let h = (prob.y_max - prob.y_min) / (ny - 1) as f64;
    let dt = prob.t_final / nt as f64;
    let beta = prob.beta;
    let nodes: Vec<f64> = (0..ny).map(|j| prob.y_min + j as f64 * h).collect();

    // Mollified delta: Gaussian of width 2 cells.
    let w0 = 2.0 * h;
    let mut p: Vec<f64> = nodes
        .iter()
        .map(|y| (-(y - prob.x_init) * (y - prob.x_init) / (2.0 * w0 * w0)).exp())
        .collect();
    let norm: f64 = p.iter().sum::<f64>() * h;
    p.iter_mut().for_each(|v| *v /= norm);

    // Flux coefficients: F_{j+1/2} = c1[j] p_j + c2[j] p_{j+1}.
    let mut c1 = vec![0.0; ny - 1];
    let mut c2 = vec![0.0; ny - 1];
    for j in 0..ny - 1 {
        let ym = 0.5 * (nodes[j] + nodes[j + 1]);
        let mu_m = (prob.mu_fn)(ym);
        let a_j = 0.5 * (prob.sigma_fn)(nodes[j]).powi(2);
        let a_j1 = 0.5 * (prob.sigma_fn)(nodes[j + 1]).powi(2);
        c1[j] = 0.5 * mu_m + a_j / h;
        c2[j] = 0.5 * mu_m - a_j1 / h;
    }

    // A = I - r L rows.
    let r = gamma_fn(2.0 - beta)? * dt.powf(beta);
    let mut sub = vec![0.0; ny];
    let mut diag = vec![0.0; ny];
    let mut sup = vec![0.0; ny];
    for j in 0..ny {
        if j == 0 {
            diag[0] = 1.0 + r * c1[0] / h;
            sup[0] = r * c2[0] / h;
        } else if j == ny - 1 {
            sub[j] = -r * c1[j - 1] / h;
            diag[j] = 1.0 - r * c2[j - 1] / h;
        } else {
            sub[j] = -r * c1[j - 1] / h;
            diag[j] = 1.0 + r * (c1[j] - c2[j - 1]) / h;
            sup[j] = r * c2[j] / h;
        }
    }

    // L1 weights on past increments.
    let weights: Vec<f64> = (0..nt)
        .map(|k| ((k + 1) as f64).powf(1.0 - beta) - (k as f64).powf(1.0 - beta))
        .collect();

    let mut snapshots = Vec::with_capacity(nt + 1);
    snapshots.push(DensityGrid {
        y_nodes: nodes.clone(),
        masses: p.clone(),
        time: 0.0,
    });
    let mut increments: Vec<Vec<f64>> = Vec::with_capacity(nt);
    let mut clip_total = 0.0f64;
    let mut mass_drift = 0.0f64;
    let mut warnings = Vec::new();

    for n in 1..=nt {
        let mut rhs = p.clone();
        for k in 1..n {
            let w = weights[k];
            let dpast = &increments[n - k - 1];
            for j in 0..ny {
                rhs[j] -= w * dpast[j];
            }
        }
        let mut next = thomas_solve(&sub, &diag, &sup, &rhs)?;

        let mass: f64 = next.iter().sum::<f64>() * h;
        mass_drift = mass_drift.max((mass - 1.0).abs());

        // Nonnegativity by clipping with renormalization.
        let mut clipped = 0.0;
        for v in next.iter_mut() {
            if *v < 0.0 {
                clipped += -*v * h;
                *v = 0.0;
            }
        }
        clip_total += clipped;
        let m2: f64 = next.iter().sum::<f64>() * h;
        if m2 > 0.0 {
            let scale = mass / m2;
            next.iter_mut().for_each(|v| *v *= scale);
        }

        let inc: Vec<f64> = next.iter().zip(&p).map(|(a, b)| a - b).collect();
        increments.push(inc);
        p = next;
        snapshots.push(DensityGrid {
            y_nodes: nodes.clone(),
            masses: p.clone(),
            time: n as f64 * dt,
        });
    }

    if clip_total > 1e-2 {
        warnings.push(format!(
            "nonnegativity clipping removed {clip_total:.3e} total mass (> 1e-2)"
        ));
    }
    Ok(CaputoSolution {
        snapshots,
        clip_total,
        mass_drift,
        warnings,
    })
}

/// Histogram density of `X_{t_final}` for the drift-free SDE
/// `dX = mu(X) dE + sigma(X) dB_E`, from duality-route simulations over
/// independent drivers.
#[allow(clippy::too_many_arguments)]
pub fn mc_density(
    mu_fn: StateFn,
    sigma_fn: StateFn,
    x_init: f64,
    beta: f64,
    inner_step: f64,
    seed: u64,
    n_paths: usize,
    t_final: f64,
    y_min: f64,
    y_max: f64,
    bins: usize,
) -> Result<DensityGrid> {
    if n_paths < 2 || bins < 2 {
        return Err(Error::config("need at least 2 paths and 2 bins"));
    }
    let spec = SdeSpec::new(
        |_, _, _| 0.0,
        {
            let f = mu_fn.clone();
            move |_, _, x| f(x)
        },
        {
            let f = sigma_fn.clone();
            move |_, _, x| f(x)
        },
        x_init,
    );
    let outer_step = t_final / 8.0;
    let endpoints = par_map_paths(n_paths, |i| {
        let mut gen = rng::stream(seed, rng::path_stream(LANE_PRIMARY, i));
        let pair = inverse_stable_pair(beta, inner_step, outer_step, t_final, &mut gen)?;
        let drv = make_driver(pair, &mut gen)?;
        Ok(solve_duality(&spec, &drv)?.path.end_value())
    })?;

    let width = (y_max - y_min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &endpoints {
        let k = (((x - y_min) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        counts[k] += 1;
    }
    let y_nodes: Vec<f64> = (0..bins).map(|k| y_min + (k as f64 + 0.5) * width).collect();
    let masses: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (n_paths as f64 * width))
        .collect();
    Ok(DensityGrid {
        y_nodes,
        masses,
        time: t_final,
    })
}

/// L1 distance and Kolmogorov-Smirnov statistic between two densities on
/// a common grid (linear rebinning onto the union range).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DensityDistance {
    pub l1: f64,
    pub ks: f64,
}

pub fn compare_densities(a: &DensityGrid, b: &DensityGrid) -> DensityDistance {
    let lo = a.y_nodes[0].min(b.y_nodes[0]);
    let hi = a.y_nodes[a.y_nodes.len() - 1].max(b.y_nodes[b.y_nodes.len() - 1]);
    // The common grid must resolve the finest input cell.
    let fine = a.cell_width().min(b.cell_width());
    let n = (((hi - lo) / fine).ceil() as usize * 2).clamp(16, 1 << 20);
    let h = (hi - lo) / (n - 1) as f64;
    let mut l1 = 0.0;
    let mut cdf_a = 0.0;
    let mut cdf_b = 0.0;
    let mut ks = 0.0f64;
    for i in 0..n {
        let y = lo + i as f64 * h;
        let pa = a.density_at(y);
        let pb = b.density_at(y);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        l1 += w * (pa - pb).abs() * h;
        cdf_a += w * pa * h;
        cdf_b += w * pb * h;
        ks = ks.max((cdf_a - cdf_b).abs());
    }
    DensityDistance { l1, ks }
}

/// Exact heat kernel snapshot (the classical degeneration oracle).
pub fn heat_kernel_grid(x_init: f64, t: f64, y_min: f64, y_max: f64, n: usize) -> DensityGrid {
    let h = (y_max - y_min) / (n - 1) as f64;
    let y_nodes: Vec<f64> = (0..n).map(|j| y_min + j as f64 * h).collect();
    let masses = y_nodes
        .iter()
        .map(|y| {
            (-(y - x_init) * (y - x_init) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
        })
        .collect();
    DensityGrid {
        y_nodes,
        masses,
        time: t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_problem(beta: f64, ny: usize, nt: usize) -> FracPdeProblem {
        FracPdeProblem {
            beta,
            mu_fn: Arc::new(|_| 0.0),
            sigma_fn: Arc::new(|_| 1.0),
            y_min: -8.0,
            y_max: 8.0,
            ny,
            t_final: 1.0,
            nt,
            x_init: 0.0,
        }
    }

    #[test]
    fn validation_rejects_bad_problems() {
        let mut p = unit_problem(0.5, 128, 128);
        p.x_init = 9.0;
        assert!(p.validate().is_err());
        let mut p = unit_problem(1.2, 128, 128);
        p.x_init = 0.0;
        assert!(p.validate().is_err());
        let p = unit_problem(0.5, 32, 128);
        assert!(p.validate().is_err());
    }

    #[test]
    fn near_classical_limit_recovers_heat_kernel() {
        let prob = unit_problem(0.999, 256, 256);
        let sol = solve_caputo_fpe(&prob).unwrap();
        let last = sol.snapshots.last().unwrap();
        let kernel = heat_kernel_grid(0.0, 1.0, -8.0, 8.0, 256);
        let d = compare_densities(last, &kernel);
        assert!(d.l1 <= 0.02, "l1 {}", d.l1);
        assert!(sol.mass_drift <= 1e-3, "drift {}", sol.mass_drift);
        assert!(sol.clip_total <= 1e-2, "clip {}", sol.clip_total);
    }

    #[test]
    fn solver_mass_is_conserved() {
        let prob = unit_problem(0.5, 128, 128);
        let sol = solve_caputo_fpe(&prob).unwrap();
        for snap in &sol.snapshots {
            assert!((snap.total_mass() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn symmetric_problem_stays_symmetric() {
        let prob = unit_problem(0.5, 129, 128);
        let sol = solve_caputo_fpe(&prob).unwrap();
        let last = sol.snapshots.last().unwrap();
        let n = last.masses.len();
        let mut worst = 0.0f64;
        for j in 0..n / 2 {
            worst = worst.max((last.masses[j] - last.masses[n - 1 - j]).abs());
        }
        assert!(worst < 1e-8, "asymmetry {worst}");
    }

    #[test]
    fn subdiffusive_variance_slope_matches_beta() {
        let prob = unit_problem(0.5, 256, 256);
        let sol = solve_caputo_fpe(&prob).unwrap();
        // Slope of log Var against log t over the second half of the run.
        let pts: Vec<(f64, f64)> = sol
            .snapshots
            .iter()
            .filter(|s| s.time >= 0.2)
            .map(|s| (s.time.ln(), s.variance().ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope - 0.5).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn identical_densities_compare_to_zero() {
        let a = heat_kernel_grid(0.0, 1.0, -6.0, 6.0, 128);
        let d = compare_densities(&a, &a);
        assert_eq!(d.l1, 0.0);
        assert_eq!(d.ks, 0.0);
    }

    #[test]
    fn disjoint_point_masses_have_l1_two() {
        let spike = |center: f64| {
            let h = 0.01;
            let y_nodes: Vec<f64> = (0..64).map(|j| center - 0.32 + j as f64 * h).collect();
            let mut masses = vec![0.0; 64];
            masses[32] = 1.0 / h;
            DensityGrid {
                y_nodes,
                masses,
                time: 1.0,
            }
        };
        let d = compare_densities(&spike(-5.0), &spike(5.0));
        assert!((d.l1 - 2.0).abs() < 0.05, "l1 {}", d.l1);
    }

    #[test]
    fn deterministic_shift_matches_clock_histogram() {
        // sigma = 0, mu = 1: X_t = x_init + E_t, so the density is the
        // inverse-stable law shifted by x_init.
        let n = 20_000;
        let grid = mc_density(
            Arc::new(|_| 1.0),
            Arc::new(|_| 0.0001),
            2.0,
            0.5,
            1e-3,
            41,
            n,
            1.0,
            1.5,
            8.0,
            64,
        )
        .unwrap();
        // Oracle: histogram of E_1 + 2 sampled directly from clock paths.
        let clock_vals = par_map_paths(n, |i| {
            let mut gen = rng::stream(977, rng::path_stream(LANE_PRIMARY, i));
            let pair = inverse_stable_pair(0.5, 1e-3, 0.125, 1.0, &mut gen)?;
            Ok(2.0 + pair.e().end_value())
        })
        .unwrap();
        let width = (8.0 - 1.5) / 64.0;
        let mut counts = vec![0usize; 64];
        for &x in &clock_vals {
            let k = (((x - 1.5) / width).floor() as i64).clamp(0, 63) as usize;
            counts[k] += 1;
        }
        let oracle = DensityGrid {
            y_nodes: (0..64).map(|k| 1.5 + (k as f64 + 0.5) * width).collect(),
            masses: counts.iter().map(|&c| c as f64 / (n as f64 * width)).collect(),
            time: 1.0,
        };
        let d = compare_densities(&grid, &oracle);
        assert!(d.l1 <= 0.05, "l1 {}", d.l1);
    }

    #[test]
    fn mc_close_to_heat_kernel_near_classical_beta() {
        let grid = mc_density(
            Arc::new(|_| 0.0),
            Arc::new(|_| 1.0),
            0.0,
            0.999,
            1e-3,
            43,
            20_000,
            1.0,
            -8.0,
            8.0,
            64,
        )
        .unwrap();
        let kernel = heat_kernel_grid(0.0, 1.0, -8.0, 8.0, 256);
        let d = compare_densities(&grid, &kernel);
        assert!(d.l1 <= 0.06, "l1 {}", d.l1);
    }
}
