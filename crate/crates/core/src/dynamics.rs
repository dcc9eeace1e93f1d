//! Time integration of the lattice equations of motion `u_i'' = F_i`.
//!
//! General models are stepped with velocity Verlet. Linear periodic models can
//! instead be propagated exactly, mode by mode, through the discrete Fourier
//! transform; nonlinear periodic models on very fine lattices use a
//! Strang splitting of the exact linear flow and nonlinear kicks.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{sample, Lattice, LatticeField};
use crate::model::{Boundary, InitialField, ModelSpec, PolynomialR};
use crate::synthesis::{force_from_network, StiffnessNetwork};

/// Relative threshold below which a mode is treated as a zero-frequency drift.
pub const ZERO_MODE_TOL: f64 = 1e-12;
pub const DEFAULT_CFL_LINEAR: f64 = 0.25;
pub const DEFAULT_CFL_NONLINEAR: f64 = 0.125;

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: LatticeField,
    pub v: LatticeField,
}

impl SimState {
    /// Sampled initial data `u_i(0) = u0(i eps)`, `v_i(0) = v0(i eps)`.
    pub fn initial(model: &ModelSpec, lattice: Lattice) -> Result<Self> {
        if (lattice.length() - model.length).abs() > 1e-12 * model.length {
            return Err(Error::Shape(format!(
                "lattice length {} differs from model length {}",
                lattice.length(),
                model.length
            )));
        }
        let data = &model.initial;
        let len = model.length;
        let u = sample(|x| data.eval(len, InitialField::Displacement, x, 0), lattice, model.order)?;
        let v = sample(|x| data.eval(len, InitialField::Velocity, x, 0), lattice, model.order)?;
        Ok(Self { t: 0.0, u, v })
    }

    pub fn zeros(lattice: Lattice) -> Self {
        Self { t: 0.0, u: LatticeField::zeros(lattice), v: LatticeField::zeros(lattice) }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub quadratic: f64,
    pub nonlinear: f64,
    pub total: f64,
}

fn check_state_lattice(net: &StiffnessNetwork, u: &LatticeField) -> Result<()> {
    if net.lattice() != u.lattice() {
        return Err(Error::Shape("state and network live on different lattices".into()));
    }
    Ok(())
}

/// Nonlinear force `-[dR/dxi0(u, D+u) - D-(dR/dxi1(u, D+u))]` on the stored sites.
fn nonlinear_force(r: &PolynomialR, u: &LatticeField, order: usize) -> Vec<f64> {
    let lat = *u.lattice();
    let m = lat.num_values();
    let h = 1.0 / lat.eps();
    // r1[k] holds dR/dxi1 at site k - 1, so D- needs r1[i + 1] - r1[i].
    let mut r0 = vec![0.0; m];
    let mut r1 = vec![0.0; m + 1];
    for k in 0..=m {
        let i = k as isize - 1;
        let ui = u.get(i);
        let d = r.eval(ui, (u.get(i + 1) - ui) * h);
        if k >= 1 {
            r0[k - 1] = d.d0;
        }
        r1[k] = d.d1;
    }
    (0..m)
        .map(|i| {
            if lat.is_frozen(i, order) {
                0.0
            } else {
                -(r0[i] - (r1[i + 1] - r1[i]) * h)
            }
        })
        .collect()
}

/// Total force: network force plus the nonlinear contribution of `R`.
pub fn total_force(model: &ModelSpec, net: &StiffnessNetwork, u: &LatticeField) -> Result<LatticeField> {
    check_state_lattice(net, u)?;
    let mut f = force_from_network(net, u)?;
    if !model.nonlinearity.is_zero() {
        let nl = nonlinear_force(&model.nonlinearity, u, model.order);
        for (a, b) in f.values_mut().iter_mut().zip(nl) {
            *a += b;
        }
    }
    Ok(f)
}

/// Band-edge frequency `omega_max^2 = sum_a max(A_a, 0) (4 / eps^2)^a`.
pub fn band_edge_omega(coefficients: &[f64], eps: f64) -> f64 {
    let s = 4.0 / (eps * eps);
    coefficients
        .iter()
        .enumerate()
        .map(|(a, &c)| c.max(0.0) * s.powi(a as i32))
        .sum::<f64>()
        .sqrt()
}

pub fn default_cfl(model: &ModelSpec) -> f64 {
    if model.is_linear() {
        DEFAULT_CFL_LINEAR
    } else {
        DEFAULT_CFL_NONLINEAR
    }
}

/// Explicit step size `cfl * 2 / omega_max`.
pub fn stable_dt(coefficients: &[f64], eps: f64, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Config(format!("cfl must lie in (0, 1], got {cfl}")));
    }
    if coefficients.iter().all(|&a| a == 0.0) {
        return Err(Error::NoDynamics);
    }
    let w = band_edge_omega(coefficients, eps);
    if w == 0.0 {
        return Err(Error::NoDynamics);
    }
    Ok(cfl * 2.0 / w)
}

/// One velocity-Verlet step.
pub fn step_verlet(model: &ModelSpec, net: &StiffnessNetwork, state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let mut stepper = Verlet::new(model, net, state.clone())?;
    stepper.step(dt)?;
    Ok(stepper.state)
}

/// Verlet stepper that carries the force between steps.
struct Verlet<'a> {
    model: &'a ModelSpec,
    net: &'a StiffnessNetwork,
    state: SimState,
    force: LatticeField,
}

impl<'a> Verlet<'a> {
    fn new(model: &'a ModelSpec, net: &'a StiffnessNetwork, state: SimState) -> Result<Self> {
        check_state_lattice(net, &state.u)?;
        check_state_lattice(net, &state.v)?;
        let force = total_force(model, net, &state.u)?;
        Ok(Self { model, net, state, force })
    }

    fn step(&mut self, dt: f64) -> Result<()> {
        let lat = *self.state.u.lattice();
        let order = self.model.order;
        let half = 0.5 * dt;
        {
            let v = self.state.v.values_mut();
            for (vi, fi) in v.iter_mut().zip(self.force.values()) {
                *vi += half * fi;
            }
        }
        {
            let vals: Vec<f64> = self.state.v.values().to_vec();
            let u = self.state.u.values_mut();
            for (i, (ui, vi)) in u.iter_mut().zip(vals).enumerate() {
                if !lat.is_frozen(i, order) {
                    *ui += dt * vi;
                }
            }
        }
        self.force = total_force(self.model, self.net, &self.state.u)?;
        {
            let v = self.state.v.values_mut();
            for (vi, fi) in v.iter_mut().zip(self.force.values()) {
                *vi += half * fi;
            }
        }
        let t0 = self.state.t;
        self.state.t += dt;
        if !self.state.is_finite() {
            return Err(Error::Divergence { last_finite_time: t0 });
        }
        Ok(())
    }
}

/// Exact flow of a linear periodic lattice in Fourier space.
#[derive(Clone)]
pub struct LinearPropagator {
    lattice: Lattice,
    omega: Vec<f64>,
    omega_max: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LinearPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearPropagator").field("lattice", &self.lattice).finish()
    }
}

/// `s_eps(k) = (4 / eps^2) sin^2(k eps / 2)`, the lattice symbol of `-Lap`.
pub fn lattice_symbol(k: f64, eps: f64) -> f64 {
    let s = (0.5 * k * eps).sin();
    4.0 / (eps * eps) * s * s
}

/// Discrete dispersion `omega_eps(k)^2 = sum_a A_a s_eps(k)^a`.
pub fn discrete_omega(coefficients: &[f64], k: f64, eps: f64) -> Result<f64> {
    let s = lattice_symbol(k, eps);
    let w2: f64 = coefficients.iter().enumerate().map(|(a, &c)| c * s.powi(a as i32)).sum();
    if w2 < 0.0 {
        return Err(Error::ImaginaryFrequency { k, omega_sq: w2 });
    }
    Ok(w2.sqrt())
}

impl LinearPropagator {
    pub fn new(coefficients: &[f64], lattice: Lattice) -> Result<Self> {
        if lattice.boundary() != Boundary::Periodic {
            return Err(Error::Unsupported("exact propagation needs a periodic lattice".into()));
        }
        if coefficients.iter().all(|&a| a == 0.0) {
            return Err(Error::NoDynamics);
        }
        let n = lattice.sites();
        let eps = lattice.eps();
        let omega_max = band_edge_omega(coefficients, eps);
        let mut omega = Vec::with_capacity(n);
        for j in 0..n {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let k = 2.0 * std::f64::consts::PI * m / lattice.length();
            let s = lattice_symbol(k, eps);
            let w2: f64 = coefficients.iter().enumerate().map(|(a, &c)| c * s.powi(a as i32)).sum();
            if w2 < -1e-14 * omega_max * omega_max {
                return Err(Error::ImaginaryFrequency { k, omega_sq: w2 });
            }
            omega.push(w2.max(0.0).sqrt());
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            lattice,
            omega,
            omega_max,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Advance `(u, v)` by `tau` in place.
    pub fn propagate(&self, u: &mut [f64], v: &mut [f64], tau: f64) {
        let n = u.len();
        let mut uh: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(x, 0.0)).collect();
        let mut vh: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut uh);
        self.forward.process(&mut vh);
        let floor = ZERO_MODE_TOL * self.omega_max;
        for ((a, b), &w) in uh.iter_mut().zip(vh.iter_mut()).zip(&self.omega) {
            if w < floor {
                *a += *b * tau;
            } else {
                let (s, c) = (w * tau).sin_cos();
                let (a0, b0) = (*a, *b);
                *a = a0 * c + b0 * (s / w);
                *b = b0 * c - a0 * (w * s);
            }
        }
        self.inverse.process(&mut uh);
        self.inverse.process(&mut vh);
        let scale = 1.0 / n as f64;
        for (x, z) in u.iter_mut().zip(&uh) {
            *x = z.re * scale;
        }
        for (x, z) in v.iter_mut().zip(&vh) {
            *x = z.re * scale;
        }
    }
}

/// Exact mode-wise propagation of a linear periodic model to time `t`.
pub fn exact_linear_propagate(model: &ModelSpec, state: &SimState, t: f64) -> Result<SimState> {
    if !model.is_linear() {
        return Err(Error::Unsupported("exact propagation requires R = 0".into()));
    }
    if model.boundary != Boundary::Periodic || state.u.lattice().boundary() != Boundary::Periodic {
        return Err(Error::Unsupported("exact propagation requires periodic boundaries".into()));
    }
    let prop = LinearPropagator::new(&model.coefficients()?, *state.u.lattice())?;
    let mut out = state.clone();
    let tau = t - state.t;
    {
        let mut v = out.v.values().to_vec();
        prop.propagate(out.u.values_mut(), &mut v, tau);
        out.v.values_mut().copy_from_slice(&v);
    }
    out.t = t;
    Ok(out)
}

/// Strang splitting for nonlinear periodic models: half nonlinear kick, exact
/// linear flow, half nonlinear kick. Symplectic and second order in time.
#[derive(Clone, Debug)]
pub struct SplitPropagator {
    linear: LinearPropagator,
    r: PolynomialR,
}

impl SplitPropagator {
    pub fn new(model: &ModelSpec, lattice: Lattice) -> Result<Self> {
        Ok(Self { linear: LinearPropagator::new(&model.coefficients()?, lattice)?, r: model.nonlinearity.clone() })
    }

    /// Stable step from the nonlinear stiffness of `u`:
    /// `omega_nl^2 ~ max|R00| + 2 max|R01| (2/eps) + max|R11| (4/eps^2)`.
    pub fn step_size(&self, u: &LatticeField, cfl: f64, max_step: f64) -> f64 {
        let eps = self.linear.lattice.eps();
        let (mut r00, mut r01, mut r11) = (0.0_f64, 0.0_f64, 0.0_f64);
        for i in 0..u.values().len() as isize {
            let ui = u.get(i);
            let d = self.r.eval(ui, (u.get(i + 1) - ui) / eps);
            r00 = r00.max(d.d00.abs());
            r01 = r01.max(d.d01.abs());
            r11 = r11.max(d.d11.abs());
        }
        let w2 = r00 + 2.0 * r01 * (2.0 / eps) + r11 * 4.0 / (eps * eps);
        if w2 > 0.0 {
            (cfl * 2.0 / w2.sqrt()).min(max_step)
        } else {
            max_step
        }
    }

    /// Advance `state` to time `t` with steps no larger than `dt`.
    pub fn advance(&self, state: &mut SimState, t: f64, dt: f64) -> Result<()> {
        let span = t - state.t;
        if span <= 0.0 {
            return Ok(());
        }
        let steps = (span / dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let mut u = state.u.values().to_vec();
        let mut v = state.v.values().to_vec();
        let lat = *state.u.lattice();
        let kick = |u: &[f64], v: &mut [f64], tau: f64| {
            let field = LatticeField::new(lat, u.to_vec()).expect("sized to the lattice");
            for (vi, f) in v.iter_mut().zip(nonlinear_force(&self.r, &field, 0)) {
                *vi += tau * f;
            }
        };
        let t0 = state.t;
        for step in 0..steps {
            kick(&u, &mut v, 0.5 * h);
            self.linear.propagate(&mut u, &mut v, h);
            kick(&u, &mut v, 0.5 * h);
            if !u.iter().chain(&v).all(|x| x.is_finite()) {
                return Err(Error::Divergence { last_finite_time: t0 + step as f64 * h });
            }
        }
        state.u.values_mut().copy_from_slice(&u);
        state.v.values_mut().copy_from_slice(&v);
        state.t = t;
        Ok(())
    }
}

/// Energy `eps/2 sum v^2 + eps/2 sum_a A_a sum |D^a u|^2 + eps sum R(u, D+u)`.
pub fn energy(model: &ModelSpec, state: &SimState) -> Result<EnergyBreakdown> {
    let a = model.coefficients()?;
    let eps = state.u.eps();
    let kinetic = 0.5 * state.v.norm_sq();
    let mut quadratic = 0.0;
    for (alpha, &c) in a.iter().enumerate() {
        if c != 0.0 {
            quadratic += 0.5 * c * state.u.dalpha(alpha).norm_sq();
        }
    }
    let mut nonlinear = 0.0;
    if !model.nonlinearity.is_zero() {
        let du = state.u.dplus();
        let (lo, hi) = du.support();
        let (u0, _) = state.u.support();
        let lo = lo.min(u0);
        nonlinear = eps * (lo..hi).map(|i| model.nonlinearity.eval(state.u.get(i), du.get(i)).value).sum::<f64>();
    }
    Ok(EnergyBreakdown { kinetic, quadratic, nonlinear, total: kinetic + quadratic + nonlinear })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Verlet,
    Exact,
}

/// Samples of a trajectory at the requested times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub energies: Vec<EnergyBreakdown>,
    /// Nominal Verlet step (`None` for the exact propagator).
    pub dt: Option<f64>,
    pub steps: usize,
}

impl Trajectory {
    /// Largest `|E(t) - E(0)| / |E(0)|` over the samples (absolute if `E(0) = 0`).
    pub fn energy_drift(&self) -> f64 {
        let Some(e0) = self.energies.first().map(|e| e.total) else {
            return 0.0;
        };
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        self.energies.iter().map(|e| (e.total - e0).abs() / scale).fold(0.0, f64::max)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Config("sample times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// Integrate from the sampled initial data and record the state at `times`.
///
/// Between consecutive sample times the Verlet step is shrunk to divide the
/// interval evenly, so every sample lands exactly on a step.
pub fn simulate(
    model: &ModelSpec,
    net: &StiffnessNetwork,
    integrator: Integrator,
    cfl: Option<f64>,
    times: &[f64],
) -> Result<Trajectory> {
    check_times(times)?;
    let lattice = *net.lattice();
    let initial = SimState::initial(model, lattice)?;
    let mut states = Vec::with_capacity(times.len());
    let mut steps = 0;
    let dt = match integrator {
        Integrator::Exact => {
            let prop = LinearPropagator::new(&model.coefficients()?, lattice)?;
            if !model.is_linear() {
                return Err(Error::Unsupported("exact propagation requires R = 0".into()));
            }
            for &t in times {
                let mut s = initial.clone();
                let mut v = s.v.values().to_vec();
                prop.propagate(s.u.values_mut(), &mut v, t);
                s.v.values_mut().copy_from_slice(&v);
                s.t = t;
                states.push(s);
            }
            None
        }
        Integrator::Verlet => {
            let a = model.coefficients()?;
            let dt = stable_dt(&a, lattice.eps(), cfl.unwrap_or_else(|| default_cfl(model)))?;
            let mut stepper = Verlet::new(model, net, initial)?;
            for &t in times {
                let span = t - stepper.state.t;
                if span > 0.0 {
                    let m = (span / dt).ceil() as usize;
                    let h = span / m as f64;
                    for _ in 0..m {
                        stepper.step(h)?;
                    }
                    steps += m;
                }
                stepper.state.t = t;
                states.push(stepper.state.clone());
            }
            Some(dt)
        }
    };
    let energies = states.iter().map(|s| energy(model, s)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { states, energies, dt, steps })
}
