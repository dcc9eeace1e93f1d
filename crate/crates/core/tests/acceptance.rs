//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Run with `cargo test -p gradnet --test acceptance -- --nocapture` or just
//! `cargo test --workspace`.

use std::f64::consts::PI;
use std::time::Instant;

use gradnet::continuum::{dispersion_omega, FineGridOracle, OracleOptions, Reference};
use gradnet::convergence::{reference_gap, sweep_with_reference, build_reference, ConvergenceReport, DeviationWeights};
use gradnet::dynamics::{discrete_omega, simulate, Integrator};
use gradnet::lattice::{Lattice, LatticeField};
use gradnet::model::Boundary;
use gradnet::scenario::Scenario;
use gradnet::selftest::{self, SelftestConfig};
use gradnet::synthesis::{assemble_stiffness, force_from_network};
use gradnet::convergence::fit_order;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn terminal(report: &ConvergenceReport) -> Vec<f64> {
    report.rows.iter().map(|r| r.terminal_w().unwrap_or(f64::NAN)).collect()
}

fn fmt_w(w: &[f64]) -> String {
    w.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn recursion() -> Outcome {
    let s = selftest::recursion_equivalence(&SelftestConfig::default());
    outcome(s.passed, format!("max relative error {:.2e} (tol 1e-11)", s.worst))
}

fn force_equivalence() -> Outcome {
    let s = selftest::force_equivalence(&SelftestConfig::default());
    outcome(s.passed, format!("max relative error {:.2e} (tol 1e-10); {}", s.worst, s.detail))
}

fn elastica_stencil() -> Outcome {
    let lat = Lattice::new(8.0, 16, Boundary::Periodic).unwrap();
    let net = assemble_stiffness(&[0.0, 0.0, 1.0], &lat).unwrap();
    let mut v = vec![0.0; 16];
    v[0] = 1.0;
    let f = force_from_network(&net, &LatticeField::new(lat, v).unwrap()).unwrap();
    let e4 = lat.eps().powi(-4);
    let got: Vec<f64> = (-2..=2).map(|d| f.get(d) / e4).collect();
    let rest_zero = (3..14).all(|i| f.get(i) == 0.0);
    outcome(got == [-1.0, 4.0, -6.0, 4.0, -1.0] && rest_zero, format!("impulse response / eps^-4 = {got:?}"))
}

struct Sweeps {
    elastica: ConvergenceReport,
    dirichlet: ConvergenceReport,
    general: ConvergenceReport,
    nonlinear: ConvergenceReport,
    self_check: (f64, f64),
}

fn run_scenario(id: &str) -> (Scenario, ConvergenceReport, Box<dyn Reference>) {
    let s = Scenario::builtin(id).unwrap();
    let max = *s.sites.last().unwrap();
    let reference = build_reference(&s.model, max, &s.options).unwrap();
    let report = sweep_with_reference(s.id, &s.model, &s.sites, &s.options, reference.as_ref()).unwrap();
    (s, report, reference)
}

fn run_sweeps() -> Sweeps {
    let (_, elastica, _) = run_scenario("elastica-periodic");
    let (_, dirichlet, _) = run_scenario("elastica-dirichlet");
    let (_, general, _) = run_scenario("general-linear");
    let (s, nonlinear, oracle16) = run_scenario("nonlinear");
    let finest = *s.sites.last().unwrap();
    let coarse = Lattice::new(s.model.length, finest, Boundary::Periodic).unwrap();
    let oracle32 = FineGridOracle::build(&s.model, &coarse, 32, &s.options.times, OracleOptions::default()).unwrap();
    let weights = DeviationWeights::for_model(&s.model).unwrap();
    let t = *s.options.times.last().unwrap();
    let gap = reference_gap(oracle16.as_ref(), &oracle32, &coarse, t, &weights).unwrap();
    let smallest = terminal(&nonlinear).into_iter().fold(f64::INFINITY, f64::min);
    Sweeps { elastica, dirichlet, general, nonlinear, self_check: (gap, smallest) }
}

fn order_of(r: &ConvergenceReport) -> f64 {
    r.fit.map_or(f64::NAN, |f| f.slope)
}

fn elastica_periodic(s: &Sweeps) -> Outcome {
    let w = terminal(&s.elastica);
    let order = order_of(&s.elastica);
    let ratio = w[w.len() - 1] / w[0];
    outcome(
        s.elastica.strictly_decreasing() && order >= 1.9 && ratio <= 1e-4,
        format!("W(T) = [{}], order {order:.3}, W(512)/W(32) = {ratio:.2e}", fmt_w(&w)),
    )
}

fn elastica_dirichlet(s: &Sweeps) -> Outcome {
    let w = terminal(&s.dirichlet);
    let order = order_of(&s.dirichlet);
    let bound = s.dirichlet.rows.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
    outcome(
        s.dirichlet.strictly_decreasing() && order >= 0.45 && bound <= 1.0,
        format!("W(T) = [{}], order {order:.3}, max |Lap u| / sqrt(2 E0 / eps) = {bound:.3}", fmt_w(&w)),
    )
}

fn general_linear(s: &Sweeps) -> Outcome {
    let w = terminal(&s.general);
    let order = order_of(&s.general);
    outcome(s.general.strictly_decreasing() && order >= 1.9, format!("W(T) = [{}], order {order:.3}", fmt_w(&w)))
}

fn nonlinear(s: &Sweeps) -> Outcome {
    let w = terminal(&s.nonlinear);
    let (gap, smallest) = s.self_check;
    outcome(
        s.nonlinear.strictly_decreasing() && gap < 0.1 * smallest,
        format!(
            "W(T) = [{}], order {:.3}, oracle gap 16 vs 32 = {gap:.2e} vs smallest W {smallest:.2e}",
            fmt_w(&w),
            order_of(&s.nonlinear)
        ),
    )
}

fn energy(s: &Sweeps) -> Outcome {
    let max_drift = |r: &ConvergenceReport| r.rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max);
    let exact = max_drift(&s.elastica).max(max_drift(&s.general));
    let mut verlet = vec![("clamped elastica", max_drift(&s.dirichlet)), ("nonlinear", max_drift(&s.nonlinear))];
    for id in ["elastica-periodic", "general-linear"] {
        let sc = Scenario::builtin(id).unwrap();
        let a = sc.model.coefficients().unwrap();
        let mut worst = 0.0_f64;
        for n in [32, 64, 128] {
            let lat = Lattice::new(sc.model.length, n, Boundary::Periodic).unwrap();
            let net = assemble_stiffness(&a, &lat).unwrap();
            let tr = simulate(&sc.model, &net, Integrator::Verlet, None, &sc.options.times).unwrap();
            worst = worst.max(tr.energy_drift());
        }
        verlet.push((id, worst));
    }
    let passed = exact <= 1e-12 && verlet.iter().all(|v| v.1 <= 1e-4);
    let per = verlet.iter().map(|(id, d)| format!("{id} {d:.2e}")).collect::<Vec<_>>().join(", ");
    outcome(passed, format!("exact drift {exact:.2e} (tol 1e-12); Verlet drift (tol 1e-4): {per}"))
}

fn identities() -> Outcome {
    let cfg = SelftestConfig::default();
    let suites = [selftest::integration_by_parts(&cfg), selftest::sobolev(&cfg), selftest::chain_rule(&cfg)];
    let detail = suites.iter().map(|s| format!("{} {:.2e}/{:.0e}", s.name, s.worst, s.tolerance)).collect::<Vec<_>>();
    outcome(suites.iter().all(|s| s.passed), detail.join(", "))
}

fn dispersion() -> Outcome {
    let mut passed = true;
    let mut detail = Vec::new();
    for a in [vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 1.0]] {
        for k in [1.0, 2.0, 3.0] {
            let (eps, err): (Vec<f64>, Vec<f64>) = (0..5)
                .map(|j| {
                    let eps = 2.0 * PI / (32 << j) as f64;
                    (eps, (discrete_omega(&a, k, eps).unwrap() - dispersion_omega(&a, k).unwrap()).abs())
                })
                .unzip();
            let order = fit_order(&eps, &err, 0.0).map_or(f64::NAN, |f| f.slope);
            let decreasing = err.windows(2).all(|w| w[1] < w[0]);
            passed &= decreasing && order >= 1.9;
            detail.push(format!("A={a:?} k={k}: {order:.3}"));
        }
    }
    outcome(passed, detail.join("; "))
}

fn quadratic_reduction() -> Outcome {
    let s = selftest::quadratic_reduction(&SelftestConfig::default());
    outcome(s.passed, format!("max relative gap {:.2e} over 50 matrices (tol 1e-8)", s.worst))
}

fn main() {
    let start = Instant::now();
    let sweeps = run_sweeps();
    let results: Vec<(&str, Outcome)> = vec![
        ("stiffness recursion", recursion()),
        ("force equivalence", force_equivalence()),
        ("elastica stencil", elastica_stencil()),
        ("periodic elastica convergence", elastica_periodic(&sweeps)),
        ("clamped elastica convergence", elastica_dirichlet(&sweeps)),
        ("general linear convergence", general_linear(&sweeps)),
        ("nonlinear convergence", nonlinear(&sweeps)),
        ("energy conservation", energy(&sweeps)),
        ("discrete identities", identities()),
        ("dispersion consistency", dispersion()),
        ("quadratic reduction", quadratic_reduction()),
    ];
    let mut failures = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name}: {}", i + 1, o.detail);
        failures += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed in {:.1} s", results.len() - failures, results.len(), start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
