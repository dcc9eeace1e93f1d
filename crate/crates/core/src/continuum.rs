//! Reference solutions of the macroscopic equation
//! `u_tt + sum (-1)^a A_a d^{2a} u / dx^{2a} + (nonlinear terms) = 0`.
//!
//! Linear periodic problems with trigonometric data are solved exactly mode by
//! mode. Linear clamped beams use an expansion in clamped-clamped eigenmodes.
//! Everything else falls back to a much finer lattice integrated on its own.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;

use crate::dynamics::{default_cfl, simulate, Integrator, SimState, SplitPropagator};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeField};
use crate::model::{Boundary, InitialData, InitialField, ModelSpec};
use crate::synthesis::assemble_stiffness;

/// Continuum dispersion `omega(k) = sqrt(sum_a A_a k^(2a))`.
pub fn dispersion_omega(coefficients: &[f64], k: f64) -> Result<f64> {
    let k2 = k * k;
    let w2: f64 = coefficients.iter().enumerate().map(|(a, &c)| c * k2.powi(a as i32)).sum();
    if w2 < 0.0 {
        return Err(Error::ImaginaryFrequency { k, omega_sq: w2 });
    }
    Ok(w2.sqrt())
}

/// Anything that can produce reference displacement and velocity values at
/// the points of a lattice. Dirichlet fields are returned on `0..=N` and are
/// understood to vanish outside `[0, L]`.
pub trait Reference: Sync {
    fn sample(&self, lattice: &Lattice, t: f64) -> Result<(LatticeField, LatticeField)>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralMode {
    pub m: u32,
    pub k: f64,
    pub omega: f64,
    /// Complex amplitudes at `t = 0`: the mode is `Re(amp * exp(i k x))`.
    pub u: Complex<f64>,
    pub v: Complex<f64>,
}

/// Exact solution of a linear periodic problem with trigonometric data.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSolution {
    pub length: f64,
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub modes: Vec<SpectralMode>,
}

pub fn spectral_solve(model: &ModelSpec) -> Result<SpectralSolution> {
    if !model.is_linear() {
        return Err(Error::Unsupported("spectral solution requires R = 0".into()));
    }
    if model.boundary != Boundary::Periodic {
        return Err(Error::Unsupported("spectral solution requires periodic boundaries".into()));
    }
    let InitialData::Trig { u0, v0 } = &model.initial else {
        return Err(Error::Unsupported("spectral solution requires trigonometric initial data".into()));
    };
    let a = model.coefficients()?;
    let top = u0.max_mode().max(v0.max_mode());
    let mut modes = Vec::new();
    for m in 0..=top {
        let amp = |s: &crate::model::TrigSeries| {
            let c: f64 = s.cos.iter().filter(|(j, _)| *j == m).map(|(_, c)| c).sum();
            let b: f64 = s.sin.iter().filter(|(j, _)| *j == m && m > 0).map(|(_, c)| c).sum();
            Complex::new(c, -b)
        };
        let (u, v) = (amp(u0), amp(v0));
        if u == Complex::new(0.0, 0.0) && v == Complex::new(0.0, 0.0) {
            continue;
        }
        let k = 2.0 * PI * m as f64 / model.length;
        modes.push(SpectralMode { m, k, omega: dispersion_omega(&a, k)?, u, v });
    }
    Ok(SpectralSolution { length: model.length, order: model.order, coefficients: a, modes })
}

impl SpectralMode {
    /// Complex amplitudes of displacement and velocity at time `t`.
    pub fn at(&self, t: f64) -> (Complex<f64>, Complex<f64>) {
        if self.omega == 0.0 {
            (self.u + self.v * t, self.v)
        } else {
            let (s, c) = (self.omega * t).sin_cos();
            (self.u * c + self.v * (s / self.omega), self.v * c - self.u * (self.omega * s))
        }
    }
}

impl SpectralSolution {
    fn eval_field(&self, x: f64, t: f64, d: u32, field: InitialField) -> Result<f64> {
        let max_d = 2 * self.order as u32 + 1;
        if d > max_d {
            return Err(Error::Domain(format!("derivative order {d} exceeds 2n + 1 = {max_d}")));
        }
        Ok(self
            .modes
            .iter()
            .map(|m| {
                let (u, v) = m.at(t);
                let amp = if field == InitialField::Displacement { u } else { v };
                let ik = Complex::new(0.0, m.k).powu(d);
                (amp * ik * Complex::from_polar(1.0, m.k * x)).re
            })
            .sum())
    }

    /// Continuum energy `1/2 int (u_t^2 + sum_a A_a |d^a u|^2)`, mode by mode.
    pub fn energy(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (u, v) = m.at(t);
                let stiff: f64 = self.coefficients.iter().enumerate().map(|(a, &c)| c * m.k.powi(2 * a as i32)).sum();
                let weight = if m.m == 0 { self.length } else { 0.5 * self.length };
                let (u2, v2) = if m.m == 0 { (u.re * u.re, v.re * v.re) } else { (u.norm_sqr(), v.norm_sqr()) };
                0.5 * weight * (v2 + stiff * u2)
            })
            .sum()
    }
}

/// `d`-th spatial derivative of the displacement at `(x, t)`, `d <= 2n + 1`.
pub fn eval_reference(sol: &SpectralSolution, x: f64, t: f64, d: u32) -> Result<f64> {
    sol.eval_field(x, t, d, InitialField::Displacement)
}

/// `d`-th spatial derivative of the velocity at `(x, t)`.
pub fn eval_reference_velocity(sol: &SpectralSolution, x: f64, t: f64, d: u32) -> Result<f64> {
    sol.eval_field(x, t, d, InitialField::Velocity)
}

impl Reference for SpectralSolution {
    fn sample(&self, lattice: &Lattice, t: f64) -> Result<(LatticeField, LatticeField)> {
        let u = LatticeField::from_fn(*lattice, |x| self.eval_field(x, t, 0, InitialField::Displacement).unwrap_or(0.0));
        let v = LatticeField::from_fn(*lattice, |x| self.eval_field(x, t, 0, InitialField::Velocity).unwrap_or(0.0));
        Ok((u, v))
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `k`-th positive root (k >= 1) of `cos z cosh z = 1`.
pub fn clamped_root(k: usize) -> f64 {
    let mut z = (k as f64 + 0.5) * PI;
    for _ in 0..60 {
        let sech = 1.0 / z.cosh();
        let f = z.cos() - sech;
        let df = -z.sin() + sech * z.tanh();
        let dz = f / df;
        z -= dz;
        if dz.abs() < 1e-15 * z {
            break;
        }
    }
    z
}

/// One clamped-clamped beam eigenfunction on `[0, L]`, evaluated in a form
/// that stays bounded for large wavenumbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClampedMode {
    pub beta: f64,
    length: f64,
    sigma: f64,
    /// Coefficient of `exp(beta (x - L))`.
    right: f64,
}

impl ClampedMode {
    pub fn new(k: usize, length: f64) -> Self {
        let z = clamped_root(k);
        let e = (-z).exp();
        let (s, c) = z.sin_cos();
        let den = 1.0 - e * e - 2.0 * s * e;
        let sigma = (1.0 + e * e - 2.0 * c * e) / den;
        let right = (c - s - e) / den;
        Self { beta: z / length, length, sigma, right }
    }

    /// `cosh(bx) - cos(bx) - sigma (sinh(bx) - sin(bx))`.
    pub fn eval(&self, x: f64) -> f64 {
        let b = self.beta;
        let (s, c) = (b * x).sin_cos();
        self.right * (b * (x - self.length)).exp() + 0.5 * (1.0 + self.sigma) * (-b * x).exp() - c + self.sigma * s
    }
}

/// Modal solution of the linear clamped beam `u_tt = -A_2 u'''' - A_0 u`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampedModalSolution {
    pub length: f64,
    pub modes: Vec<ClampedMode>,
    pub omega: Vec<f64>,
    /// Projections of the initial displacement and velocity.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub const DEFAULT_CLAMPED_MODES: usize = 2048;
pub const DEFAULT_CLAMPED_PANELS: usize = 2048;

impl ClampedModalSolution {
    pub fn new(model: &ModelSpec, modes: usize, panels: usize) -> Result<Self> {
        if model.boundary != Boundary::Dirichlet || model.order != 2 || !model.is_linear() {
            return Err(Error::Unsupported("modal reference covers linear clamped beams of order 2".into()));
        }
        let a = model.coefficients()?;
        if a[1] != 0.0 {
            return Err(Error::Unsupported("modal reference requires A_1 = 0".into()));
        }
        if modes == 0 || panels == 0 {
            return Err(Error::Config("modal reference needs at least one mode and panel".into()));
        }
        let length = model.length;
        let (gx, gw) = gauss_legendre(16);
        let h = length / panels as f64;
        let mut xs = Vec::with_capacity(panels * gx.len());
        let mut ws = Vec::with_capacity(panels * gx.len());
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(&gw) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        let u0: Vec<f64> = xs.iter().map(|&x| model.initial.eval(length, InitialField::Displacement, x, 0)).collect();
        let v0: Vec<f64> = xs.iter().map(|&x| model.initial.eval(length, InitialField::Velocity, x, 0)).collect();
        let built: Vec<(ClampedMode, f64, f64, f64)> = {
            use rayon::prelude::*;
            (1..=modes)
                .into_par_iter()
                .map(|k| {
                    let mode = ClampedMode::new(k, length);
                    let (mut nn, mut nu, mut nv) = (0.0, 0.0, 0.0);
                    for ((x, w), (a, b)) in xs.iter().zip(&ws).zip(u0.iter().zip(&v0)) {
                        let phi = mode.eval(*x);
                        nn += w * phi * phi;
                        nu += w * phi * a;
                        nv += w * phi * b;
                    }
                    (mode, nn, nu / nn, nv / nn)
                })
                .collect()
        };
        let mut out = Self { length, modes: Vec::new(), omega: Vec::new(), u: Vec::new(), v: Vec::new() };
        for (mode, _, cu, cv) in built {
            let w2 = a[0] + a[2] * mode.beta.powi(4);
            if w2 < 0.0 {
                return Err(Error::ImaginaryFrequency { k: mode.beta, omega_sq: w2 });
            }
            out.omega.push(w2.sqrt());
            out.modes.push(mode);
            out.u.push(cu);
            out.v.push(cv);
        }
        Ok(out)
    }

    /// Displacement and velocity at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        if x <= 0.0 || x >= self.length {
            return (0.0, 0.0);
        }
        let (mut u, mut v) = (0.0, 0.0);
        for (((mode, &w), &a), &b) in self.modes.iter().zip(&self.omega).zip(&self.u).zip(&self.v) {
            let (s, c) = (w * t).sin_cos();
            let phi = mode.eval(x);
            let sw = if w > 0.0 { s / w } else { t };
            u += phi * (a * c + b * sw);
            v += phi * (b * c - a * w * s);
        }
        (u, v)
    }
}

impl Reference for ClampedModalSolution {
    fn sample(&self, lattice: &Lattice, t: f64) -> Result<(LatticeField, LatticeField)> {
        use rayon::prelude::*;
        let pts: Vec<(f64, f64)> = (0..lattice.num_values())
            .into_par_iter()
            .map(|i| self.eval(lattice.x(i as isize), t))
            .collect();
        let u = LatticeField::new(*lattice, pts.iter().map(|p| p.0).collect())?;
        let v = LatticeField::new(*lattice, pts.iter().map(|p| p.1).collect())?;
        Ok((u, v))
    }
}

/// Options for the fine-lattice reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub cfl: Option<f64>,
    /// Upper bound on the split-step size for nonlinear periodic runs.
    pub max_step: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { cfl: None, max_step: 2e-3 }
    }
}

/// Smallest accepted refinement ratio.
pub const MIN_RATIO: usize = 8;

/// Trajectory of the same model on a much finer lattice, stored at fixed times.
#[derive(Clone, Debug)]
pub struct FineGridOracle {
    pub lattice: Lattice,
    pub times: Vec<f64>,
    pub states: Vec<SimState>,
}

/// Fine-lattice reference with `ratio` times as many sites as `coarse`.
pub fn fine_grid_oracle(model: &ModelSpec, coarse: &Lattice, ratio: usize, times: &[f64]) -> Result<FineGridOracle> {
    FineGridOracle::build(model, coarse, ratio, times, OracleOptions::default())
}

impl FineGridOracle {
    pub fn build(model: &ModelSpec, coarse: &Lattice, ratio: usize, times: &[f64], opts: OracleOptions) -> Result<Self> {
        if ratio < MIN_RATIO {
            return Err(Error::Config(format!("refinement ratio must be an integer >= {MIN_RATIO}, got {ratio}")));
        }
        let lattice = coarse.refined(ratio)?;
        let a = model.coefficients()?;
        let states = match (lattice.boundary(), model.is_linear()) {
            (Boundary::Periodic, true) => {
                let net = assemble_stiffness(&a, &lattice)?;
                simulate(model, &net, Integrator::Exact, None, times)?.states
            }
            (Boundary::Periodic, false) => {
                let split = SplitPropagator::new(model, lattice)?;
                let mut state = SimState::initial(model, lattice)?;
                let cfl = opts.cfl.unwrap_or_else(|| default_cfl(model));
                let mut out = Vec::with_capacity(times.len());
                for &t in times {
                    let dt = split.step_size(&state.u, cfl, opts.max_step);
                    split.advance(&mut state, t, dt)?;
                    out.push(state.clone());
                }
                out
            }
            (Boundary::Dirichlet, _) => {
                let net = assemble_stiffness(&a, &lattice)?;
                simulate(model, &net, Integrator::Verlet, opts.cfl, times)?.states
            }
        };
        Ok(Self { lattice, times: times.to_vec(), states })
    }

    pub fn ratio_to(&self, coarse: &Lattice) -> Result<usize> {
        let (nf, nc) = (self.lattice.sites(), coarse.sites());
        if nc == 0 || nf % nc != 0 || coarse.boundary() != self.lattice.boundary() {
            return Err(Error::Config(format!("lattice with N = {nc} is not a coarsening of N = {nf}")));
        }
        Ok(nf / nc)
    }
}

impl Reference for FineGridOracle {
    fn sample(&self, lattice: &Lattice, t: f64) -> Result<(LatticeField, LatticeField)> {
        let r = self.ratio_to(lattice)? as isize;
        let idx = self
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::TimeMismatch(t))?;
        let s = &self.states[idx];
        let pick = |f: &LatticeField| -> Result<LatticeField> {
            LatticeField::new(*lattice, (0..lattice.num_values() as isize).map(|i| f.get(i * r)).collect())
        };
        Ok((pick(&s.u)?, pick(&s.v)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{discrete_omega, energy};
    use crate::model::{PolynomialR, Quadratic, RTerm, TrigSeries};

    fn periodic(a: Vec<f64>, u0: TrigSeries, v0: TrigSeries) -> ModelSpec {
        ModelSpec {
            length: 2.0 * PI,
            order: a.len() - 1,
            boundary: Boundary::Periodic,
            quadratic: Quadratic::Coefficients(a),
            nonlinearity: PolynomialR::zero(),
            initial: InitialData::Trig { u0, v0 },
            horizon: 1.0,
            kappa_mesh: None,
        }
    }

    #[test]
    fn dispersion_examples() {
        for k in [0.5, 1.0, 3.0] {
            assert!((dispersion_omega(&[0.0, 0.0, 1.0], k).unwrap() - k * k).abs() < 1e-14);
            assert!((dispersion_omega(&[0.0, 1.0], k).unwrap() - k).abs() < 1e-15);
            assert!((dispersion_omega(&[1.0, 0.0, 1.0], k).unwrap().powi(2) - (1.0 + k.powi(4))).abs() < 1e-12);
        }
        assert!(matches!(dispersion_omega(&[0.0, -1.0, 0.1], 1.0), Err(Error::ImaginaryFrequency { .. })));
    }

    #[test]
    fn elastica_single_mode() {
        let m = periodic(vec![0.0, 0.0, 1.0], TrigSeries::sin_mode(1, 1.0), TrigSeries::default());
        let sol = spectral_solve(&m).unwrap();
        for &(x, t) in &[(0.3, 0.0), (1.1, 0.7), (4.0, 2.5)] {
            let u = eval_reference(&sol, x, t, 0).unwrap();
            assert!((u - t.cos() * x.sin()).abs() < 1e-14);
            let utt = -(t.cos()) * x.sin();
            let u4 = eval_reference(&sol, x, t, 4).unwrap();
            assert!((utt + u4).abs() < 1e-13);
        }
        assert!(eval_reference(&sol, 0.0, 0.0, 6).is_err());
        assert!(eval_reference(&sol, 0.0, 0.0, 5).is_ok());
    }

    #[test]
    fn initial_time_reproduces_data() {
        let mut u0 = TrigSeries::sin_mode(2, 0.4);
        u0.cos.push((0, 0.2));
        u0.cos.push((3, -0.7));
        let v0 = TrigSeries::sin_mode(1, 0.5);
        let m = periodic(vec![1.0, 1.0, 0.0, 1.0], u0.clone(), v0.clone());
        let sol = spectral_solve(&m).unwrap();
        for i in 0..20 {
            let x = i as f64 * 0.3;
            for d in 0..=7 {
                let a = eval_reference(&sol, x, 0.0, d).unwrap();
                assert!((a - u0.eval(m.length, x, d)).abs() < 1e-11, "d = {d}");
                let b = eval_reference_velocity(&sol, x, 0.0, d).unwrap();
                assert!((b - v0.eval(m.length, x, d)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn continuum_energy_is_constant() {
        let mut u0 = TrigSeries::sin_mode(1, 1.0);
        u0.cos.push((2, 0.5));
        let m = periodic(vec![1.0, 0.0, 1.0], u0, TrigSeries::constant(0.3));
        let sol = spectral_solve(&m).unwrap();
        let e0 = sol.energy(0.0);
        for t in [0.3, 1.0, 7.0] {
            assert!((sol.energy(t) - e0).abs() <= 1e-12 * e0);
        }
        // Cross-check against a fine lattice Riemann sum of the same integrand.
        let lat = Lattice::new(m.length, 512, Boundary::Periodic).unwrap();
        let (u, v) = sol.sample(&lat, 0.0).unwrap();
        let du2 = LatticeField::from_fn(lat, |x| eval_reference(&sol, x, 0.0, 2).unwrap());
        let quad = 0.5 * (v.norm_sq() + u.norm_sq() + du2.norm_sq());
        assert!((quad - e0).abs() < 1e-10 * e0);
    }

    #[test]
    fn derivatives_are_consistent() {
        let mut u0 = TrigSeries::sin_mode(1, 1.0);
        u0.cos.push((2, 0.5));
        let m = periodic(vec![0.0, 0.0, 1.0], u0, TrigSeries::default());
        let sol = spectral_solve(&m).unwrap();
        let h = 1e-4;
        for d in 0..5 {
            let fd = (eval_reference(&sol, 1.0 + h, 0.4, d).unwrap() - eval_reference(&sol, 1.0 - h, 0.4, d).unwrap()) / (2.0 * h);
            let exact = eval_reference(&sol, 1.0, 0.4, d + 1).unwrap();
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn discrete_dispersion_converges_at_second_order() {
        let mut errs = Vec::new();
        for n in [16usize, 32, 64, 128] {
            let eps = 2.0 * PI / n as f64;
            errs.push((discrete_omega(&[0.0, 0.0, 1.0], 2.0, eps).unwrap() - 4.0).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9);
        }
    }

    #[test]
    fn unsupported_models() {
        let mut m = periodic(vec![0.0, 0.0, 1.0], TrigSeries::sin_mode(1, 1.0), TrigSeries::default());
        m.nonlinearity = PolynomialR::new(vec![RTerm { p: 4, q: 0, c: 1.0 }]);
        assert!(matches!(spectral_solve(&m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gauss_legendre_rule() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for p in 0..32 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn clamped_modes() {
        assert!((clamped_root(1) - 4.730_040_744_862_704).abs() < 1e-12);
        assert!((clamped_root(2) - 7.853_204_624_095_838).abs() < 1e-12);
        for k in [1, 2, 5, 50, 500] {
            let z = clamped_root(k);
            assert!((z.cos() - 1.0 / z.cosh()).abs() < 1e-12);
            let mode = ClampedMode::new(k, 2.0);
            let h = 1e-6;
            assert!(mode.eval(0.0).abs() < 1e-9 && mode.eval(2.0).abs() < 1e-9);
            assert!(((mode.eval(h) - mode.eval(0.0)) / h).abs() < 1e-3 * mode.beta);
            assert!(((mode.eval(2.0) - mode.eval(2.0 - h)) / h).abs() < 1e-3 * mode.beta);
            // Fourth derivative equals beta^4 times the mode.
            let x = 0.731;
            let d = 0.02 / mode.beta;
            let d4 = (mode.eval(x + 2.0 * d) - 4.0 * mode.eval(x + d) + 6.0 * mode.eval(x) - 4.0 * mode.eval(x - d)
                + mode.eval(x - 2.0 * d))
                / d.powi(4);
            if k <= 5 {
                assert!((d4 - mode.beta.powi(4) * mode.eval(x)).abs() < 1e-3 * mode.beta.powi(4));
            }
        }
    }

    fn clamped_model(length: f64) -> ModelSpec {
        ModelSpec {
            length,
            order: 2,
            boundary: Boundary::Dirichlet,
            quadratic: Quadratic::Coefficients(vec![0.0, 0.0, 1.0]),
            nonlinearity: PolynomialR::zero(),
            initial: InitialData::Clamped { envelope: 2, u0: TrigSeries::constant(1.0), v0: TrigSeries::default() },
            horizon: 1.0,
            kappa_mesh: None,
        }
    }

    #[test]
    fn clamped_modal_reproduces_initial_data_and_energy() {
        let m = clamped_model(2.0 * PI);
        let sol = ClampedModalSolution::new(&m, 256, 512).unwrap();
        for i in 1..20 {
            let x = i as f64 * m.length / 20.0;
            let (u, v) = sol.eval(x, 0.0);
            let exact = m.initial.eval(m.length, InitialField::Displacement, x, 0);
            assert!((u - exact).abs() < 1e-9, "{u} vs {exact}");
            assert_eq!(v, 0.0);
        }
        // The modal energy is constant; compare with a fine lattice at two times.
        let lat = Lattice::new(m.length, 2048, Boundary::Dirichlet).unwrap();
        let e = |t: f64| {
            let (u, v) = sol.sample(&lat, t).unwrap();
            energy(&m, &SimState { t, u, v }).unwrap().total
        };
        let (e0, e1) = (e(0.0), e(0.8));
        assert!((e0 - e1).abs() < 1e-3 * e0, "{e0} vs {e1}");
    }

    #[test]
    fn fine_grid_matches_spectral() {
        let m = periodic(vec![0.0, 0.0, 1.0], TrigSeries::sin_mode(1, 1.0), TrigSeries::default());
        let coarse = Lattice::new(m.length, 32, Boundary::Periodic).unwrap();
        let oracle = fine_grid_oracle(&m, &coarse, 16, &[0.5, 1.0]).unwrap();
        let sol = spectral_solve(&m).unwrap();
        let (u, _) = oracle.sample(&coarse, 1.0).unwrap();
        let (us, _) = sol.sample(&coarse, 1.0).unwrap();
        assert!(u.sub(&us).unwrap().max_abs() < 1e-4);
        assert!(matches!(oracle.sample(&coarse, 0.7), Err(Error::TimeMismatch(_))));
        assert!(fine_grid_oracle(&m, &coarse, 1, &[1.0]).is_err());
        assert!(oracle.sample(&Lattice::new(m.length, 48, Boundary::Periodic).unwrap(), 1.0).is_err());
    }
}
