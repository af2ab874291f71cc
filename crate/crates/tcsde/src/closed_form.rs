//! Exact solution evaluators for the linear SDE class driven by
//! `(dt, dE, dB o E)`, and the integrating-factor reduction for semilinear
//! equations, all evaluated pathwise on simulated drivers.
//!
//! Quadrature split: deterministic `ds` integrals by trapezoid on smooth
//! integrands; `dE` and `d(B o E)` integrals strictly by left-point forward
//! sums (the Ito convention) — mixing rules would bias the `sigma^2/2`
//! correction. Exponents are accumulated in log space and exponentiated
//! per point.

use crate::error::{Error, Result};
use crate::path::{CadlagPath, Interp};
use crate::sde::{DrivingTriple, SdeSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

pub type Coeff2Fn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Linear SDE coefficients, each a function of `(t, u)`:
/// `dX = (rho1 + rho2 X) dt + (mu1 + mu2 X) dE + (sigma1 + sigma2 X) dB_E`.
#[derive(Clone)]
pub struct LinearCoeffs {
    pub rho1: Coeff2Fn,
    pub rho2: Coeff2Fn,
    pub mu1: Coeff2Fn,
    pub mu2: Coeff2Fn,
    pub sigma1: Coeff2Fn,
    pub sigma2: Coeff2Fn,
    pub x0: f64,
}

fn zero2() -> Coeff2Fn {
    Arc::new(|_, _| 0.0)
}

fn const2(c: f64) -> Coeff2Fn {
    Arc::new(move |_, _| c)
}

impl LinearCoeffs {
    /// Homogeneous coefficients (`rho1 = mu1 = sigma1 = 0`).
    pub fn homogeneous(rho2: Coeff2Fn, mu2: Coeff2Fn, sigma2: Coeff2Fn, x0: f64) -> Self {
        Self {
            rho1: zero2(),
            rho2,
            mu1: zero2(),
            mu2,
            sigma1: zero2(),
            sigma2,
            x0,
        }
    }

    pub fn homogeneous_const(rho: f64, mu: f64, sigma: f64, x0: f64) -> Self {
        Self::homogeneous(const2(rho), const2(mu), const2(sigma), x0)
    }

    /// Ornstein-Uhlenbeck analogue: `dX = -alpha X dt + mu dE + sigma dB_E`.
    pub fn ou(alpha: f64, mu: f64, sigma: f64, x0: f64) -> Self {
        Self {
            rho1: zero2(),
            rho2: const2(-alpha),
            mu1: const2(mu),
            mu2: zero2(),
            sigma1: const2(sigma),
            sigma2: zero2(),
            x0,
        }
    }

    /// Bridge coefficients:
    /// `dX = (b/(1-t) - gamma X/(1-t)) dt + (c/(1-E) - eta X/(1-E)) dE + dB_E`.
    pub fn bridge(a: f64, b: f64, c: f64, gamma: f64, eta: f64) -> Self {
        Self {
            rho1: Arc::new(move |t, _| b / (1.0 - t)),
            rho2: Arc::new(move |t, _| -gamma / (1.0 - t)),
            mu1: Arc::new(move |_, u| c / (1.0 - u)),
            mu2: Arc::new(move |_, u| -eta / (1.0 - u)),
            sigma1: const2(1.0),
            sigma2: zero2(),
            x0: a,
        }
    }
}

struct DriverView<'a> {
    grid: &'a [f64],
    e: &'a [f64],
    b: &'a [f64],
}

fn view(driver: &DrivingTriple) -> Result<DriverView<'_>> {
    if !driver.pair.is_double() {
        return Err(Error::Unsupported(
            "closed forms require a Double pair".into(),
        ));
    }
    Ok(DriverView {
        grid: driver.pair.e().grid(),
        e: driver.pair.e().values(),
        b: driver.b_of_e.values(),
    })
}

/// Exponent of the fundamental solution:
/// `int rho2 ds + int (mu2 - sigma2^2/2) dE + int sigma2 dB_E`,
/// trapezoid for `ds`, left sums for the rest.
fn homogeneous_exponent(c: &LinearCoeffs, v: &DriverView) -> Vec<f64> {
    let n = v.grid.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0f64;
    out.push(0.0);
    for i in 1..n {
        let (t0, u0) = (v.grid[i - 1], v.e[i - 1]);
        let (t1, u1) = (v.grid[i], v.e[i]);
        let dt = t1 - t0;
        let de = u1 - u0;
        let db = v.b[i] - v.b[i - 1];
        let rho_tr = 0.5 * ((c.rho2)(t0, u0) + (c.rho2)(t1, u1));
        let s2 = (c.sigma2)(t0, u0);
        acc += rho_tr * dt + ((c.mu2)(t0, u0) - 0.5 * s2 * s2) * de + s2 * db;
        out.push(acc);
    }
    out
}

/// Fundamental solution of the homogeneous linear SDE,
/// `Phi_t = x0 exp{ int rho2 ds + int (mu2 - sigma2^2/2) dE + int sigma2 dB_E }`,
/// strictly positive on every path.
pub fn fundamental_solution(c: &LinearCoeffs, driver: &DrivingTriple) -> Result<CadlagPath> {
    let v = view(driver)?;
    let expo = homogeneous_exponent(c, &v);
    let values: Vec<f64> = expo.iter().map(|a| c.x0 * a.exp()).collect();
    CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
}

/// General linear solution by variation of constants:
/// `X = Phi [ x0 + int rho1/Phi ds + int (mu1 - sigma2 sigma1)/Phi dE
///            + int sigma1/Phi dB_E ]`
/// with `Phi` the fundamental solution started at 1.
pub fn general_linear_solution(c: &LinearCoeffs, driver: &DrivingTriple) -> Result<CadlagPath> {
    let v = view(driver)?;
    let expo = homogeneous_exponent(c, &v);
    let n = v.grid.len();

    let phi_at = |i: usize| -> Result<f64> {
        let a = expo[i];
        if a < -690.0 {
            return Err(Error::Scaling(format!(
                "fundamental solution underflow: exponent {a:.1} at t = {}",
                v.grid[i]
            )));
        }
        Ok(a.exp())
    };

    let mut bracket = c.x0;
    let mut values = Vec::with_capacity(n);
    values.push(phi_at(0)? * bracket);
    for i in 1..n {
        let (t0, u0) = (v.grid[i - 1], v.e[i - 1]);
        let (t1, u1) = (v.grid[i], v.e[i]);
        let dt = t1 - t0;
        let de = u1 - u0;
        let db = v.b[i] - v.b[i - 1];
        let phi0 = phi_at(i - 1)?;
        let phi1 = phi_at(i)?;
        let rho_tr = 0.5 * ((c.rho1)(t0, u0) / phi0 + (c.rho1)(t1, u1) / phi1);
        bracket += rho_tr * dt
            + ((c.mu1)(t0, u0) - (c.sigma2)(t0, u0) * (c.sigma1)(t0, u0)) / phi0 * de
            + (c.sigma1)(t0, u0) / phi0 * db;
        values.push(phi1 * bracket);
    }
    CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
}

/// Inner-clock form of the general linear solution: the `dE` and `dB_E`
/// integrals are transported to the inner clock via the second
/// change-of-variable formula (`integrand at D(s-)`, forward sums against
/// `ds` and `dB`, composed back with `E`). Used as a regression companion
/// to [`general_linear_solution`]; the two forms agree up to grid
/// resolution.
pub fn general_linear_solution_inner(
    c: &LinearCoeffs,
    driver: &DrivingTriple,
) -> Result<CadlagPath> {
    let v = view(driver)?;
    let expo = homogeneous_exponent(c, &v);
    let n = v.grid.len();
    let outer = v.grid;

    let phi_path = CadlagPath::new(
        outer.to_vec(),
        expo.iter().map(|a| a.exp()).collect(),
        Interp::Linear,
    )?;

    // rho1/Phi ds stays on the outer clock (trapezoid).
    let mut rho_acc = vec![0.0f64; n];
    for i in 1..n {
        let (t0, u0) = (outer[i - 1], v.e[i - 1]);
        let (t1, u1) = (outer[i], v.e[i]);
        let dt = t1 - t0;
        let f0 = (c.rho1)(t0, u0) / phi_path.values()[i - 1];
        let f1 = (c.rho1)(t1, u1) / phi_path.values()[i];
        rho_acc[i] = rho_acc[i - 1] + 0.5 * (f0 + f1) * dt;
    }

    // Inner-clock forward sums of the transported integrands.
    let d = driver.pair.d();
    let inner = driver.inner_b.grid();
    let bv = driver.inner_b.values();
    let e_outer = driver.pair.e();
    let mut acc_de = 0.0f64;
    let mut acc_db = 0.0f64;
    let mut inner_de = Vec::with_capacity(inner.len());
    let mut inner_db = Vec::with_capacity(inner.len());
    inner_de.push(0.0);
    inner_db.push(0.0);
    for i in 1..inner.len() {
        let s0 = inner[i - 1];
        let ds = inner[i] - inner[i - 1];
        let dbr = bv[i] - bv[i - 1];
        // Physical time and time-change value seen from the inner clock.
        let t_phys = d.left_limit_at(s0);
        let u_val = s0;
        let phi = phi_path.value_at(t_phys);
        acc_de += ((c.mu1)(t_phys, u_val) - (c.sigma2)(t_phys, u_val) * (c.sigma1)(t_phys, u_val))
            / phi
            * ds;
        acc_db += (c.sigma1)(t_phys, u_val) / phi * dbr;
        inner_de.push(acc_de);
        inner_db.push(acc_db);
    }
    let de_path = CadlagPath::new(inner.to_vec(), inner_de, Interp::Linear)?;
    let db_path = CadlagPath::new(inner.to_vec(), inner_db, Interp::Linear)?;
    let de_outer = crate::calculus::compose(&de_path, e_outer)?;
    let db_outer = crate::calculus::compose(&db_path, e_outer)?;

    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let bracket = c.x0 + rho_acc[i] + de_outer.values()[i] + db_outer.values()[i];
        values.push(phi_path.values()[i] * bracket);
    }
    CadlagPath::new(outer.to_vec(), values, Interp::Linear)
}

/// Semilinear spec for the integrating-factor reduction:
/// `dX = rho(t, E, X) dt + mu2(t, E) X dE + sigma2(t, E) X dB_E`.
#[derive(Clone)]
pub struct ReducibleSpec {
    pub rho: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    pub mu2: Coeff2Fn,
    pub sigma2: Coeff2Fn,
    pub x0: f64,
}

impl ReducibleSpec {
    pub fn new(
        rho: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        mu2: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sigma2: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        x0: f64,
    ) -> Self {
        Self {
            rho: Arc::new(rho),
            mu2: Arc::new(mu2),
            sigma2: Arc::new(sigma2),
            x0,
        }
    }
}

/// Integrating-factor reduction: build
/// `U_t = exp{ int (sigma2^2/2 - mu2) dE - int sigma2 dB_E }`
/// by left-point quadrature, integrate the path-by-path ODE
/// `dW/dt = U rho(t, E, U^{-1} W)` with fourth-order Runge-Kutta
/// (driver values frozen per cell), and return `X = U^{-1} W`.
pub fn reduce_and_solve(
    spec: &ReducibleSpec,
    driver: &DrivingTriple,
    ode_substeps: usize,
) -> Result<CadlagPath> {
    if ode_substeps == 0 {
        return Err(Error::config("ode_substeps must be at least 1"));
    }
    let v = view(driver)?;
    let n = v.grid.len();

    // Exponent of U by left sums.
    let mut log_u = Vec::with_capacity(n);
    let mut acc = 0.0f64;
    log_u.push(0.0);
    for i in 1..n {
        let (t0, u0) = (v.grid[i - 1], v.e[i - 1]);
        let de = v.e[i] - v.e[i - 1];
        let db = v.b[i] - v.b[i - 1];
        let s2 = (spec.sigma2)(t0, u0);
        acc += (0.5 * s2 * s2 - (spec.mu2)(t0, u0)) * de - s2 * db;
        log_u.push(acc);
    }

    let mut w = spec.x0;
    let mut values = Vec::with_capacity(n);
    values.push(spec.x0);
    for i in 1..n {
        let dt_cell = v.grid[i] - v.grid[i - 1];
        // Freeze U and E at their left values across the cell; t varies.
        let u_fac = log_u[i - 1].exp();
        let e_val = v.e[i - 1];
        let f = |t: f64, w: f64| u_fac * (spec.rho)(t, e_val, w / u_fac);
        let h = dt_cell / ode_substeps as f64;
        let mut t = v.grid[i - 1];
        for _ in 0..ode_substeps {
            let k1 = f(t, w);
            let k2 = f(t + 0.5 * h, w + 0.5 * h * k1);
            let k3 = f(t + 0.5 * h, w + 0.5 * h * k2);
            let k4 = f(t + h, w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
            if !w.is_finite() {
                return Err(Error::Divergence {
                    step: i,
                    t,
                    value: w,
                });
            }
        }
        values.push(w / log_u[i].exp());
    }
    CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
}

/// Named closed-form model from the example zoo.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    BlackScholesAnalogue,
    MittagLefflerDecay,
    TimeChangedBridge,
    OrnsteinUhlenbeckAnalogue,
    LogisticGrowth,
}

impl PresetName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "black_scholes" | "black_scholes_analogue" => Ok(Self::BlackScholesAnalogue),
            "mittag_leffler_decay" => Ok(Self::MittagLefflerDecay),
            "time_changed_bridge" | "bridge" => Ok(Self::TimeChangedBridge),
            "ornstein_uhlenbeck" | "ornstein_uhlenbeck_analogue" | "ou" => {
                Ok(Self::OrnsteinUhlenbeckAnalogue)
            }
            "logistic_growth" | "logistic" => Ok(Self::LogisticGrowth),
            other => Err(Error::config(format!("unknown preset '{other}'"))),
        }
    }
}

/// A preset with its named parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelPreset {
    pub name: PresetName,
    pub parameters: BTreeMap<String, f64>,
}

impl ModelPreset {
    pub fn new(name: PresetName, parameters: &[(&str, f64)]) -> Self {
        Self {
            name,
            parameters: parameters
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.parameters
            .get(key)
            .copied()
            .ok_or_else(|| Error::config(format!("preset missing parameter '{key}'")))
    }

    fn param_or(&self, key: &str, default: f64) -> f64 {
        self.parameters.get(key).copied().unwrap_or(default)
    }

    /// Equivalent coefficient spec for the direct Euler solver.
    pub fn sde_spec(&self) -> Result<SdeSpec> {
        match self.name {
            PresetName::BlackScholesAnalogue => {
                let rho = self.param_or("rho", 0.0);
                let mu = self.param_or("mu", 0.0);
                let sigma = self.param("sigma")?;
                let x0 = self.param("x0")?;
                Ok(SdeSpec::linear_const(rho, mu, sigma, x0))
            }
            PresetName::MittagLefflerDecay => {
                let lambda = self.param("lambda")?;
                let rho = self.param_or("rho", 0.0);
                let sigma = self.param_or("sigma", 0.0);
                let x0 = self.param("x0")?;
                Ok(SdeSpec::linear_const(rho, -lambda, sigma, x0))
            }
            PresetName::OrnsteinUhlenbeckAnalogue => {
                let alpha = self.param("alpha")?;
                let mu = self.param_or("mu", 0.0);
                let sigma = self.param("sigma")?;
                let x0 = self.param("x0")?;
                Ok(SdeSpec::new(
                    move |_, _, x| -alpha * x,
                    move |_, _, _| mu,
                    move |_, _, _| sigma,
                    x0,
                )
                .with_lipschitz_hint(alpha))
            }
            PresetName::TimeChangedBridge => {
                let b = self.param_or("b", 0.0);
                let c = self.param_or("c", 0.0);
                let gamma = self.param_or("gamma", 0.0);
                let eta = self.param_or("eta", 1.0);
                let a = self.param_or("a", 0.0);
                Ok(SdeSpec::new(
                    move |t, _, x| (b - gamma * x) / (1.0 - t),
                    move |_, u, x| (c - eta * x) / (1.0 - u),
                    |_, _, _| 1.0,
                    a,
                ))
            }
            PresetName::LogisticGrowth => {
                let q = self.param("q")?;
                let k = self.param("capacity")?;
                let mu = self.param_or("mu", 0.0);
                let sigma = self.param_or("sigma", 0.0);
                let x0 = self.param("x0")?;
                Ok(SdeSpec::new(
                    move |_, _, x| q * x * (k - x),
                    move |_, _, x| mu * x,
                    move |_, _, x| sigma * x,
                    x0,
                ))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self.name {
            PresetName::BlackScholesAnalogue => {
                if !(self.param("sigma")? > 0.0) {
                    return Err(Error::config("black_scholes: sigma must be positive"));
                }
                if !(self.param("x0")? > 0.0) {
                    return Err(Error::config("black_scholes: x0 must be positive"));
                }
            }
            PresetName::MittagLefflerDecay => {
                if !(self.param("lambda")? > 0.0) {
                    return Err(Error::config("mittag_leffler_decay: lambda must be positive"));
                }
                if !(self.param("x0")? > 0.0) {
                    return Err(Error::config("mittag_leffler_decay: x0 must be positive"));
                }
            }
            PresetName::OrnsteinUhlenbeckAnalogue => {
                if !(self.param("alpha")? > 0.0) || !(self.param("sigma")? > 0.0) {
                    return Err(Error::config(
                        "ornstein_uhlenbeck: alpha and sigma must be positive",
                    ));
                }
            }
            PresetName::TimeChangedBridge => {}
            PresetName::LogisticGrowth => {
                for key in ["q", "capacity", "x0"] {
                    if !(self.param(key)? > 0.0) {
                        return Err(Error::config(format!(
                            "logistic_growth: {key} must be positive"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Evaluate the preset's explicit solution pathwise on the driver.
pub fn preset_solution(m: &ModelPreset, driver: &DrivingTriple) -> Result<CadlagPath> {
    m.validate()?;
    let v = view(driver)?;
    match m.name {
        PresetName::BlackScholesAnalogue => {
            // x0 exp{rho t + (mu - sigma^2/2) E_t + sigma B_{E_t}}.
            let rho = m.param_or("rho", 0.0);
            let mu = m.param_or("mu", 0.0);
            let sigma = m.param("sigma")?;
            let x0 = m.param("x0")?;
            let values = (0..v.grid.len())
                .map(|i| {
                    x0 * (rho * v.grid[i] + (mu - 0.5 * sigma * sigma) * v.e[i] + sigma * v.b[i])
                        .exp()
                })
                .collect();
            CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
        }
        PresetName::MittagLefflerDecay => {
            let lambda = m.param("lambda")?;
            let rho = m.param_or("rho", 0.0);
            let sigma = m.param_or("sigma", 0.0);
            let x0 = m.param("x0")?;
            let values = (0..v.grid.len())
                .map(|i| {
                    x0 * (rho * v.grid[i] - (lambda + 0.5 * sigma * sigma) * v.e[i]
                        + sigma * v.b[i])
                        .exp()
                })
                .collect();
            CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
        }
        PresetName::OrnsteinUhlenbeckAnalogue => {
            // e^{-alpha t} { x0 + mu int e^{alpha s} dE + sigma int e^{alpha s} dB_E }.
            let alpha = m.param("alpha")?;
            let mu = m.param_or("mu", 0.0);
            let sigma = m.param("sigma")?;
            let x0 = m.param("x0")?;
            let n = v.grid.len();
            let mut acc_e = 0.0f64;
            let mut acc_b = 0.0f64;
            let mut values = Vec::with_capacity(n);
            values.push(x0);
            for i in 1..n {
                let w = (alpha * v.grid[i - 1]).exp();
                acc_e += w * (v.e[i] - v.e[i - 1]);
                acc_b += w * (v.b[i] - v.b[i - 1]);
                values.push((-alpha * v.grid[i]).exp() * (x0 + mu * acc_e + sigma * acc_b));
            }
            CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
        }
        PresetName::TimeChangedBridge => {
            let a = m.param_or("a", 0.0);
            let b = m.param_or("b", 0.0);
            let c = m.param_or("c", 0.0);
            let gamma = m.param_or("gamma", 0.0);
            let eta = m.param_or("eta", 1.0);
            if b == 0.0 && gamma == 0.0 && eta == 1.0 {
                // The pure time-changed Brownian bridge is the classical
                // bridge run on the new clock. Assembling it on the inner
                // clock keeps the pull integrand smooth even when the
                // time-change gains macroscopic mass inside single outer
                // cells, which defeats outer-grid quadrature.
                let inner = driver.inner_b.grid();
                let bv = driver.inner_b.values();
                let mut acc = 0.0f64;
                let mut y = Vec::with_capacity(inner.len());
                y.push(a);
                for i in 1..inner.len() {
                    let s = inner[i - 1];
                    let u = inner[i];
                    if u >= 1.0 {
                        y.push(*y.last().unwrap());
                        continue;
                    }
                    acc += (bv[i] - bv[i - 1]) / (1.0 - s);
                    y.push(a * (1.0 - u) + c * u + (1.0 - u) * acc);
                }
                let y_path = CadlagPath::new(inner.to_vec(), y, Interp::Linear)?;
                return crate::calculus::compose(&y_path, driver.pair.e());
            }
            let coeffs = LinearCoeffs::bridge(a, b, c, gamma, eta);
            general_linear_solution(&coeffs, driver)
        }
        PresetName::LogisticGrowth => {
            // exp{qKt + (mu - sigma^2/2) E + sigma B_E}
            //   / (x0^{-1} + q int_0^t exp{qKs + (mu - sigma^2/2) E_s + sigma B_{E_s}} ds).
            let q = m.param("q")?;
            let cap = m.param("capacity")?;
            let mu = m.param_or("mu", 0.0);
            let sigma = m.param_or("sigma", 0.0);
            let x0 = m.param("x0")?;
            let n = v.grid.len();
            let expo = |i: usize| {
                q * cap * v.grid[i] + (mu - 0.5 * sigma * sigma) * v.e[i] + sigma * v.b[i]
            };
            let mut denom = 1.0 / x0;
            let mut values = Vec::with_capacity(n);
            values.push(x0);
            for i in 1..n {
                let dt = v.grid[i] - v.grid[i - 1];
                // Trapezoid on the smooth ds integrand.
                denom += q * 0.5 * (expo(i - 1).exp() + expo(i).exp()) * dt;
                values.push(expo(i).exp() / denom);
            }
            CadlagPath::new(v.grid.to_vec(), values, Interp::Linear)
        }
    }
}
