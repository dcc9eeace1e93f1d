//! Randomized property suites for the lattice calculus and the synthesized
//! networks. All data come from a seeded generator, so a given seed always
//! exercises the same fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::lattice::{inner, Lattice, LatticeField};
use crate::model::{reduce_quadratic, Boundary, TrigSeries};
use crate::synthesis::{
    assemble_stiffness, force_from_network, laplacian_power_coeffs, network_energy, operator_force,
    verify_realizability, StiffnessNetwork,
};

/// Network builder under test; swapped out by fixtures that inject faults.
pub type Assembler = fn(&[f64], &Lattice) -> Result<StiffnessNetwork>;

#[derive(Clone, Copy, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Random fields per suite.
    pub fields: usize,
    pub sites: usize,
    pub assembler: Assembler,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { seed: 0, fields: 100, sites: 64, assembler: assemble_stiffness }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the suite's metric.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &str, worst: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: worst <= tolerance, worst, tolerance, detail: detail.into() }
    }
}

fn rng(cfg: &SelftestConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_field(lattice: Lattice, rng: &mut ChaCha8Rng) -> LatticeField {
    LatticeField::from_fn(lattice, |_| rng.gen_range(-1.0..1.0))
}

/// Random Dirichlet field supported strictly inside the frozen margins.
fn random_compact(lattice: Lattice, margin: usize, rng: &mut ChaCha8Rng) -> LatticeField {
    let mut f = random_field(lattice, rng);
    for (i, v) in f.values_mut().iter_mut().enumerate() {
        if lattice.is_frozen(i, margin) {
            *v = 0.0;
        }
    }
    f
}

fn periodic(cfg: &SelftestConfig, length: f64) -> Lattice {
    Lattice::new(length, cfg.sites, Boundary::Periodic).expect("valid lattice")
}

/// `inner(f, D+ g) + inner(D- f, g) = 0` for periodic and compactly supported fields.
pub fn integration_by_parts(cfg: &SelftestConfig) -> SuiteResult {
    let mut r = rng(cfg, 1);
    let mut worst = 0.0_f64;
    for bc in [Boundary::Periodic, Boundary::Dirichlet] {
        let lat = Lattice::new(3.0, cfg.sites, bc).expect("valid lattice");
        for _ in 0..cfg.fields {
            let (f, g) = match bc {
                Boundary::Periodic => (random_field(lat, &mut r), random_field(lat, &mut r)),
                Boundary::Dirichlet => (random_compact(lat, 2, &mut r), random_compact(lat, 2, &mut r)),
            };
            let (dpg, dmf) = (g.dplus(), f.dminus());
            let lhs = inner(&f, &dpg).unwrap_or(f64::NAN) + inner(&dmf, &g).unwrap_or(f64::NAN);
            let scale = f.norm_sq().sqrt() * dpg.norm_sq().sqrt() + dmf.norm_sq().sqrt() * g.norm_sq().sqrt();
            worst = worst.max(lhs.abs() / scale);
        }
    }
    SuiteResult::new("integration-by-parts", worst, 1e-13, "relative residual of the summation-by-parts identity")
}

/// `max|f|^2 <= (1/L + 1) (||f||^2 + ||D+ f||^2)`; the metric is the largest ratio of the two sides.
pub fn sobolev(cfg: &SelftestConfig) -> SuiteResult {
    let mut r = rng(cfg, 2);
    let mut worst = 0.0_f64;
    for length in [0.5, 1.0, 2.0 * PI, 20.0] {
        let lat = periodic(cfg, length);
        for j in 0..cfg.fields {
            // Mix rough fields with smooth ones plus an offset, which are closer to the extremal case.
            let f = if j % 2 == 0 {
                random_field(lat, &mut r)
            } else {
                let (a, b, m) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(1..4) as f64);
                LatticeField::from_fn(lat, |x| a + b * (2.0 * PI * m * x / length).sin())
            };
            let lhs = f.max_abs().powi(2);
            let rhs = (1.0 / length + 1.0) * (f.norm_sq() + f.dplus().norm_sq());
            worst = worst.max(lhs / rhs);
        }
    }
    SuiteResult::new("sobolev", worst, 1.0, "largest max|f|^2 / ((1/L + 1) ||f||_H1^2)")
}

/// `(max, min)` of `cos` over `[a, b]`.
fn cos_range(a: f64, b: f64) -> (f64, f64) {
    let (lo, hi) = (a.min(b), a.max(b));
    let mut max = lo.cos().max(hi.cos());
    let mut min = lo.cos().min(hi.cos());
    let first = (lo / PI).ceil() as i64;
    let last = (hi / PI).floor() as i64;
    for j in first..=last {
        if j.rem_euclid(2) == 0 {
            max = 1.0;
        } else {
            min = -1.0;
        }
    }
    (max, min)
}

/// Discrete chain rule: `|D+(f o g)_i| <= sup |f'| |D+ g_i|` on `[g_i, g_{i+1}]`,
/// plus the mean-value bracket `min f' <= difference quotient <= max f'`.
pub fn chain_rule(cfg: &SelftestConfig) -> SuiteResult {
    type Pair = (fn(f64) -> f64, fn(f64, f64) -> (f64, f64));
    fn cube_slope(a: f64, b: f64) -> (f64, f64) {
        let hi = 3.0 * a.abs().max(b.abs()).powi(2);
        let lo = if a * b <= 0.0 { 0.0 } else { 3.0 * a.abs().min(b.abs()).powi(2) };
        (hi, lo)
    }
    let cases: [Pair; 2] = [(f64::sin, cos_range), (|x| x * x * x, cube_slope)];
    let mut r = rng(cfg, 3);
    let lat = periodic(cfg, 2.0);
    let mut worst = 0.0_f64;
    for _ in 0..cfg.fields {
        let g = LatticeField::from_fn(lat, |_| r.gen_range(-4.0..4.0));
        let dg = g.dplus();
        for (f, slope) in cases {
            let fg = LatticeField::new(lat, g.values().iter().map(|&x| f(x)).collect()).expect("same lattice");
            let dfg = fg.dplus();
            for i in 0..lat.sites() as isize {
                let (a, b) = (g.get(i), g.get(i + 1));
                let (hi, lo) = slope(a, b);
                let sup = hi.abs().max(lo.abs());
                let bound = sup * dg.get(i).abs();
                worst = worst.max(dfg.get(i).abs() - bound - 1e-12 * (1.0 + bound));
                if a != b {
                    let ratio = (f(b) - f(a)) / (b - a);
                    let tol = 1e-12 * (1.0 + sup);
                    worst = worst.max(lo - ratio - tol).max(ratio - hi - tol);
                }
            }
        }
    }
    SuiteResult::new("chain-rule", worst.max(0.0), 0.0, "largest violation of the chain-rule and mean-value bounds")
}

fn random_coefficients(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    let mut a: Vec<f64> = (0..=n).map(|_| r.gen_range(0.0..1.0)).collect();
    a[n] = r.gen_range(0.5..1.5);
    a
}

/// Network force against the operator form for `n = 1..=4`; band and symmetry exact.
pub fn force_equivalence(cfg: &SelftestConfig) -> SuiteResult {
    let mut r = rng(cfg, 4);
    let lat = periodic(cfg, 5.0);
    let mut worst = 0.0_f64;
    let mut structure = Vec::new();
    for n in 1..=4 {
        let a = random_coefficients(n, &mut r);
        let net = match (cfg.assembler)(&a, &lat) {
            Ok(net) => net,
            Err(e) => return SuiteResult::new("force-equivalence", f64::INFINITY, 1e-10, e.to_string()),
        };
        let rep = verify_realizability(&net);
        if !rep.band_ok || !rep.symmetric || !rep.translation_invariant {
            structure.push(format!("n = {n}: {}", rep.issues.join("; ")));
        }
        for _ in 0..cfg.fields {
            let u = random_field(lat, &mut r);
            let direct = operator_force(&a, &u);
            let f = force_from_network(&net, &u).expect("same lattice");
            worst = worst.max(f.sub(&direct).expect("same lattice").max_abs() / direct.max_abs());
        }
    }
    if !structure.is_empty() {
        return SuiteResult::new("force-equivalence", f64::INFINITY, 1e-10, structure.join(" | "));
    }
    SuiteResult::new("force-equivalence", worst, 1e-10, "relative max-norm gap, network vs operator force")
}

/// `U` against the quadratic energy and `F = -(1/eps) grad U` by central differences.
pub fn energy_consistency(cfg: &SelftestConfig) -> SuiteResult {
    let mut r = rng(cfg, 5);
    let lat = periodic(cfg, 3.0);
    let mut worst_energy = 0.0_f64;
    let mut worst_grad = 0.0_f64;
    for n in 1..=4 {
        let a = random_coefficients(n, &mut r);
        let net = match (cfg.assembler)(&a, &lat) {
            Ok(net) => net,
            Err(e) => return SuiteResult::new("energy-consistency", f64::INFINITY, 1e-6, e.to_string()),
        };
        for j in 0..cfg.fields {
            let u = random_field(lat, &mut r);
            let quad: f64 = a.iter().enumerate().map(|(al, c)| 0.5 * c * u.dalpha(al).norm_sq()).sum();
            let un = network_energy(&net, &u).expect("same lattice");
            worst_energy = worst_energy.max((un - quad).abs() / quad.abs());
            if j < 3 {
                let f = force_from_network(&net, &u).expect("same lattice");
                let h = 1e-6;
                for i in 0..lat.sites() {
                    let mut up = u.clone();
                    up.values_mut()[i] += h;
                    let mut dn = u.clone();
                    dn.values_mut()[i] -= h;
                    let grad = (network_energy(&net, &up).unwrap_or(f64::NAN) - network_energy(&net, &dn).unwrap_or(f64::NAN))
                        / (2.0 * h);
                    let target = -lat.eps() * f.get(i as isize);
                    worst_grad = worst_grad.max((grad - target).abs() / (lat.eps() * f.max_abs()));
                }
            }
        }
    }
    // Energies must agree to 1e-10; the gradient check is limited by differencing.
    let worst = (worst_energy / 1e-10).max(worst_grad / 1e-6) * 1e-6;
    SuiteResult::new(
        "energy-consistency",
        worst,
        1e-6,
        format!("energy gap {worst_energy:.3e} (tol 1e-10), gradient gap {worst_grad:.3e} (tol 1e-6)"),
    )
}

/// Pairwise form of `Lap^p` against repeated stencil application, `p = 1..=4`.
pub fn recursion_equivalence(cfg: &SelftestConfig) -> SuiteResult {
    let mut r = rng(cfg, 6);
    let lat = periodic(cfg, 4.0);
    let mut worst = 0.0_f64;
    for p in 1..=4 {
        let kp = match laplacian_power_coeffs(p, &lat, 4) {
            Ok(k) => k,
            Err(e) => return SuiteResult::new("recursion-equivalence", f64::INFINITY, 1e-11, e.to_string()),
        };
        for _ in 0..cfg.fields {
            let u = random_field(lat, &mut r);
            let direct = u.dalpha(2 * p);
            worst = worst.max(kp.apply(&u).sub(&direct).expect("same lattice").max_abs() / direct.max_abs());
        }
    }
    SuiteResult::new("recursion-equivalence", worst, 1e-11, "relative max-norm gap, pairwise vs stencil powers")
}

/// Energy from a random symmetric `Q` against `1/2 sum A_g int |d^g u|^2` on trig fields.
pub fn quadratic_reduction(cfg: &SelftestConfig) -> SuiteResult {
    let mut r = rng(cfg, 7);
    let length = 2.0 * PI;
    let points = 256;
    let h = length / points as f64;
    let mut worst = 0.0_f64;
    let count = cfg.fields.div_ceil(2);
    for _ in 0..count {
        let n = r.gen_range(1..=4usize);
        let mut q = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..=n {
            for j in i..=n {
                let v = r.gen_range(-1.0..1.0);
                q[i][j] = v;
                q[j][i] = v;
            }
        }
        let a = match reduce_quadratic(&q) {
            Ok(a) => a,
            Err(e) => return SuiteResult::new("quadratic-reduction", f64::INFINITY, 1e-8, e.to_string()),
        };
        let mut u = TrigSeries::default();
        for m in 0..6u32 {
            u.cos.push((m, r.gen_range(-1.0..1.0)));
            if m > 0 {
                u.sin.push((m, r.gen_range(-1.0..1.0)));
            }
        }
        // Trapezoid sums are exact for trig polynomials of degree below `points`.
        let d: Vec<Vec<f64>> = (0..=n as u32)
            .map(|k| (0..points).map(|i| u.eval(length, i as f64 * h, k)).collect())
            .collect();
        let integral = |x: &[f64], y: &[f64]| h * x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let mut from_q = 0.0;
        let mut scale = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                from_q += 0.5 * q[i][j] * integral(&d[i], &d[j]);
                scale += 0.5 * (q[i][j] * integral(&d[i], &d[i]).sqrt() * integral(&d[j], &d[j]).sqrt()).abs();
            }
        }
        let from_a: f64 = a.iter().enumerate().map(|(g, c)| 0.5 * c * integral(&d[g], &d[g])).sum();
        worst = worst.max((from_q - from_a).abs() / scale);
    }
    SuiteResult::new("quadratic-reduction", worst, 1e-8, "relative gap between Q-energy and reduced energy")
}

/// Every suite in order.
pub fn run_all(cfg: &SelftestConfig) -> Vec<SuiteResult> {
    vec![
        integration_by_parts(cfg),
        sobolev(cfg),
        chain_rule(cfg),
        force_equivalence(cfg),
        energy_consistency(cfg),
        recursion_equivalence(cfg),
        quadratic_reduction(cfg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_build_passes() {
        let cfg = SelftestConfig { fields: 10, ..SelftestConfig::default() };
        for s in run_all(&cfg) {
            assert!(s.passed, "{s:?}");
        }
    }

    #[test]
    fn cos_range_cases() {
        assert_eq!(cos_range(-0.5, 0.5).0, 1.0);
        assert_eq!(cos_range(3.0, 3.5).1, -1.0);
        let (hi, lo) = cos_range(0.5, 1.0);
        assert_eq!((hi, lo), (0.5f64.cos(), 1.0f64.cos()));
    }

    fn flipped(a: &[f64], lat: &Lattice) -> Result<StiffnessNetwork> {
        let mut net = assemble_stiffness(a, lat)?;
        let n = lat.sites();
        for i in 0..n {
            for d in 1..a.len() {
                let j = (i + d) % n;
                let k = net.k(i, j);
                net.set_coupling(i, j, -k)?;
                net.set_coupling(j, i, -k)?;
            }
        }
        Ok(net)
    }

    #[test]
    fn sign_flip_is_caught() {
        let cfg = SelftestConfig { fields: 5, assembler: flipped, ..SelftestConfig::default() };
        assert!(!force_equivalence(&cfg).passed);
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = SelftestConfig { fields: 5, seed: 42, ..SelftestConfig::default() };
        assert_eq!(run_all(&cfg), run_all(&cfg));
    }
}
