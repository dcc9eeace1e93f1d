//! Deviation functionals between lattice trajectories and continuum
//! references, mesh-refinement sweeps and convergence-order fits.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{
    spectral_solve, ClampedModalSolution, FineGridOracle, OracleOptions, Reference, DEFAULT_CLAMPED_MODES,
    DEFAULT_CLAMPED_PANELS,
};
use crate::dynamics::{simulate, Integrator, SimState};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeField};
use crate::model::{Boundary, InitialData, ModelSpec};
use crate::synthesis::assemble_stiffness;

/// Rows with `W` below this are excluded from order fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-22;

/// Weights of `W = 1/2 d |du|^2 + 1/2 w |dv|^2 + 1/2 sum_a c_a |D^a du|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationWeights {
    pub displacement: f64,
    pub velocity: f64,
    /// `c_0..c_n`.
    pub derivative: Vec<f64>,
}

impl DeviationWeights {
    /// Periodic elastica: displacement, velocity and `|Lap du|^2`.
    pub fn elastica() -> Self {
        Self { displacement: 1.0, velocity: 1.0, derivative: vec![0.0, 0.0, 1.0] }
    }

    /// General model: `c_a = 2 A_a`.
    pub fn general(coefficients: &[f64]) -> Self {
        Self { displacement: 1.0, velocity: 1.0, derivative: coefficients.iter().map(|a| 2.0 * a).collect() }
    }

    /// Clamped model on the whole line: velocity plus `c_a = A_a`.
    pub fn clamped(coefficients: &[f64]) -> Self {
        Self { displacement: 0.0, velocity: 1.0, derivative: coefficients.to_vec() }
    }

    pub fn for_model(model: &ModelSpec) -> Result<Self> {
        let a = model.coefficients()?;
        Ok(match model.boundary {
            Boundary::Dirichlet => Self::clamped(&a),
            Boundary::Periodic if a == [0.0, 0.0, 1.0] && model.is_linear() => Self::elastica(),
            Boundary::Periodic => Self::general(&a),
        })
    }
}

fn weighted(du: &LatticeField, dv: &LatticeField, w: &DeviationWeights, norm: impl Fn(&LatticeField) -> f64) -> f64 {
    let mut acc = w.displacement * norm(du) + w.velocity * norm(dv);
    for (alpha, &c) in w.derivative.iter().enumerate() {
        if c != 0.0 {
            acc += c * norm(&du.dalpha(alpha));
        }
    }
    0.5 * acc
}

fn differences(reference: &dyn Reference, state: &SimState) -> Result<(LatticeField, LatticeField)> {
    let (ur, vr) = reference.sample(state.u.lattice(), state.t)?;
    Ok((ur.sub(&state.u)?, vr.sub(&state.v)?))
}

/// `W` at the state's time. Dirichlet fields are extended by zero, so the
/// derivative terms include the stencil overhang beyond `[0, L]`.
pub fn deviation_w(reference: &dyn Reference, state: &SimState, weights: &DeviationWeights) -> Result<f64> {
    let (du, dv) = differences(reference, state)?;
    Ok(weighted(&du, &dv, weights, LatticeField::norm_sq))
}

/// Same as [`deviation_w`] with every sum restricted to the sites `0..=N`.
pub fn deviation_w_restricted(reference: &dyn Reference, state: &SimState, weights: &DeviationWeights) -> Result<f64> {
    let (du, dv) = differences(reference, state)?;
    let hi = state.u.lattice().num_values() as isize;
    Ok(weighted(&du, &dv, weights, |f| f.norm_sq_on(0, hi)))
}

/// Boundary contribution `eps * sum v_ref * (Lap^n u)` over the frozen sites of
/// a clamped lattice, the part of the energy balance the interior equations
/// do not see.
pub fn boundary_term(reference: &dyn Reference, state: &SimState, order: usize) -> Result<f64> {
    let lat = *state.u.lattice();
    let (_, vr) = reference.sample(&lat, state.t)?;
    let power = state.u.dalpha(2 * order);
    let sum: f64 = (0..lat.num_values())
        .filter(|&i| lat.is_frozen(i, order))
        .map(|i| vr.get(i as isize) * power.get(i as isize))
        .sum();
    Ok((lat.eps() * sum).abs())
}

/// Least-squares fit `log y = slope * log x + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of a point from the fitted line (log scale).
    pub residual: f64,
    pub points: usize,
}

/// Fit over the pairs with `y > floor`; at least three are required.
pub fn fit_order(x: &[f64], y: &[f64], floor: f64) -> Result<OrderFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > floor)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData { usable: pts.len(), required: 3 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { usable: 1, required: 3 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
    Ok(OrderFit { slope, intercept, residual, points: pts.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub sites: usize,
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    pub energy: Vec<f64>,
    pub energy_drift: f64,
    /// `max_t max_i |D^n u| / sqrt(2 E_0 / (A_n eps))`; at most 1 by energy conservation.
    pub bound_ratio: f64,
    /// Clamped lattices only: boundary contribution at each sample time.
    pub boundary_term: Option<Vec<f64>>,
    pub steps: usize,
    pub wall_s: f64,
    pub error: Option<String>,
}

impl ConvergenceRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// `W` at the last sample time.
    pub fn terminal_w(&self) -> Option<f64> {
        if self.failed() {
            None
        } else {
            self.w.last().copied()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub rows: Vec<ConvergenceRow>,
    pub fit: Option<OrderFit>,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    /// Terminal `W` strictly decreasing along the rows (all rows must succeed).
    pub fn strictly_decreasing(&self) -> bool {
        let w: Option<Vec<f64>> = self.rows.iter().map(ConvergenceRow::terminal_w).collect();
        match w {
            Some(w) => w.windows(2).all(|p| p[1] < p[0]),
            None => false,
        }
    }
}

/// Order fit of terminal `W` against `eps` over the usable rows.
pub fn estimate_order(report: &ConvergenceReport) -> Result<OrderFit> {
    let (eps, w): (Vec<f64>, Vec<f64>) =
        report.rows.iter().filter_map(|r| r.terminal_w().map(|w| (r.eps, w))).unzip();
    fit_order(&eps, &w, ROUNDOFF_FLOOR)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Closed form when available, fine lattice otherwise.
    #[default]
    Auto,
    FineGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub times: Vec<f64>,
    /// `None` picks the exact propagator whenever it applies.
    pub integrator: Option<Integrator>,
    pub cfl: Option<f64>,
    /// Fine lattice size relative to the finest row.
    pub ratio: usize,
    pub reference: ReferenceKind,
    pub weights: Option<DeviationWeights>,
}

/// Default sample times `0, T/4, T/2, 3T/4, T`.
pub fn default_times(horizon: f64) -> Vec<f64> {
    (0..5).map(|j| horizon * j as f64 / 4.0).collect()
}

impl SweepOptions {
    pub fn for_model(model: &ModelSpec) -> Self {
        Self {
            times: default_times(model.horizon),
            integrator: None,
            cfl: None,
            ratio: 16,
            reference: ReferenceKind::Auto,
            weights: None,
        }
    }
}

fn exact_applies(model: &ModelSpec) -> bool {
    model.is_linear() && model.boundary == Boundary::Periodic
}

/// Build the reference used by [`sweep`] for lattices of up to `max_sites` sites.
pub fn build_reference(model: &ModelSpec, max_sites: usize, opts: &SweepOptions) -> Result<Box<dyn Reference>> {
    let a = model.coefficients()?;
    if opts.reference == ReferenceKind::Auto {
        if exact_applies(model) && matches!(model.initial, InitialData::Trig { .. }) {
            return Ok(Box::new(spectral_solve(model)?));
        }
        if model.boundary == Boundary::Dirichlet && model.is_linear() && model.order == 2 && a[1] == 0.0 {
            let modes = DEFAULT_CLAMPED_MODES.max(2 * max_sites);
            let panels = DEFAULT_CLAMPED_PANELS.max(2 * max_sites);
            return Ok(Box::new(ClampedModalSolution::new(model, modes, panels)?));
        }
    }
    let coarse = Lattice::new(model.length, max_sites, model.boundary)?;
    let oracle_opts = OracleOptions { cfl: opts.cfl, ..OracleOptions::default() };
    Ok(Box::new(FineGridOracle::build(model, &coarse, opts.ratio, &opts.times, oracle_opts)?))
}

fn run_row(
    model: &ModelSpec,
    sites: usize,
    opts: &SweepOptions,
    integrator: Integrator,
    weights: &DeviationWeights,
    reference: &dyn Reference,
) -> Result<ConvergenceRow> {
    let start = Instant::now();
    let a = model.coefficients()?;
    let lattice = Lattice::new(model.length, sites, model.boundary)?;
    let net = assemble_stiffness(&a, &lattice)?;
    let traj = simulate(model, &net, integrator, opts.cfl, &opts.times)?;
    let w = traj.states.iter().map(|s| deviation_w(reference, s, weights)).collect::<Result<Vec<_>>>()?;
    let n = model.order;
    let e0 = traj.energies.first().map_or(0.0, |e| e.total);
    let bound = (2.0 * e0 / (a[n].abs() * lattice.eps())).sqrt();
    let peak = traj.states.iter().map(|s| s.u.dalpha(n).max_abs()).fold(0.0, f64::max);
    let bound_ratio = if bound > 0.0 { peak / bound } else { 0.0 };
    let boundary = if model.boundary == Boundary::Dirichlet {
        Some(traj.states.iter().map(|s| boundary_term(reference, s, n)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    Ok(ConvergenceRow {
        eps: lattice.eps(),
        sites,
        times: opts.times.clone(),
        w,
        energy: traj.energies.iter().map(|e| e.total).collect(),
        energy_drift: traj.energy_drift(),
        bound_ratio,
        boundary_term: boundary,
        steps: traj.steps,
        wall_s: start.elapsed().as_secs_f64(),
        error: None,
    })
}

/// Run the model on each lattice size and measure `W` against `reference`.
/// Rows run in parallel; a failing row is recorded and the sweep continues.
pub fn sweep_with_reference(
    scenario: &str,
    model: &ModelSpec,
    sites: &[usize],
    opts: &SweepOptions,
    reference: &dyn Reference,
) -> Result<ConvergenceReport> {
    if sites.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("lattice sizes must be strictly increasing (eps strictly decreasing)".into()));
    }
    if opts.times.is_empty() {
        return Err(Error::Config("at least one sample time is required".into()));
    }
    let integrator = match opts.integrator {
        Some(Integrator::Exact) if !exact_applies(model) => {
            return Err(Error::Unsupported("the exact integrator needs a linear periodic model".into()))
        }
        Some(i) => i,
        None if exact_applies(model) => Integrator::Exact,
        None => Integrator::Verlet,
    };
    let weights = match &opts.weights {
        Some(w) => w.clone(),
        None => DeviationWeights::for_model(model)?,
    };
    let rows: Vec<ConvergenceRow> = sites
        .par_iter()
        .map(|&n| {
            run_row(model, n, opts, integrator, &weights, reference).unwrap_or_else(|e| ConvergenceRow {
                eps: model.length / n as f64,
                sites: n,
                times: opts.times.clone(),
                w: Vec::new(),
                energy: Vec::new(),
                energy_drift: f64::NAN,
                bound_ratio: f64::NAN,
                boundary_term: None,
                steps: 0,
                wall_s: 0.0,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let mut notes = Vec::new();
    if model.boundary == Boundary::Dirichlet && model.order != 2 {
        notes.push("extrapolated scenario: clamped model of order other than 2".into());
    }
    let mut report = ConvergenceReport { scenario: scenario.to_string(), rows, fit: None, notes };
    report.fit = estimate_order(&report).ok();
    Ok(report)
}

/// [`sweep_with_reference`] with the reference chosen by [`build_reference`].
pub fn sweep(scenario: &str, model: &ModelSpec, sites: &[usize], opts: &SweepOptions) -> Result<ConvergenceReport> {
    if sites.is_empty() {
        return Ok(ConvergenceReport { scenario: scenario.to_string(), rows: Vec::new(), fit: None, notes: Vec::new() });
    }
    let max = *sites.iter().max().expect("nonempty");
    let reference = build_reference(model, max, opts)?;
    sweep_with_reference(scenario, model, sites, opts, reference.as_ref())
}

/// Lattice sizes for a list of mesh sizes, each required to divide `L` exactly.
pub fn sites_from_eps(length: f64, eps: &[f64], boundary: Boundary) -> Result<Vec<usize>> {
    eps.iter().map(|&e| Lattice::from_eps(length, e, boundary).map(|l| l.sites())).collect()
}

/// `W` between two references on `lattice` at time `t`, treating `b` as the state.
pub fn reference_gap(a: &dyn Reference, b: &dyn Reference, lattice: &Lattice, t: f64, weights: &DeviationWeights) -> Result<f64> {
    let (u, v) = b.sample(lattice, t)?;
    deviation_w(a, &SimState { t, u, v }, weights)
}
