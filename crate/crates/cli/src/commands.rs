use std::path::Path;

use gradnet::convergence::{sweep, ConvergenceReport, OrderFit};
use gradnet::dynamics::{simulate as integrate, Integrator};
use gradnet::lattice::Lattice;
use gradnet::model::{validate_model, ModelSpec, ValidationReport};
use gradnet::scenario::{judge, Verdict};
use gradnet::selftest::{self, SelftestConfig, SuiteResult};
use gradnet::synthesis::{assemble_stiffness, netlist, verify_realizability, StiffnessNetwork};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::output::{num, write_json, Table};
use crate::{CliError, CliResult};

pub fn validate(cfg: &RunConfig) -> CliResult<ValidationReport> {
    let model = cfg.model()?;
    let report = validate_model(&model);
    if report.passed {
        Ok(report)
    } else {
        Err(CliError::Model(report.to_string()))
    }
}

fn admissible(cfg: &RunConfig) -> CliResult<ModelSpec> {
    validate(cfg)?;
    cfg.model()
}

fn network(model: &ModelSpec, sites: usize) -> CliResult<StiffnessNetwork> {
    let lattice = Lattice::new(model.length, sites, model.boundary)?;
    Ok(assemble_stiffness(&model.coefficients()?, &lattice)?)
}

pub fn synthesize(cfg: &RunConfig, out: &Path) -> CliResult<String> {
    let model = admissible(cfg)?;
    let sites = cfg.synthesize_sites(&model)?;
    let net = network(&model, sites)?;
    let report = verify_realizability(&net);
    let rows = netlist(&net);
    if cfg.output.wants(Format::Csv) {
        let mut t = Table::new(&["i", "j", "k_ij"]);
        for r in &rows {
            t.row(&[r.i.to_string(), r.j.to_string(), num(r.k)]);
        }
        t.write(&out.join("netlist.csv"))?;
    }
    if cfg.output.wants(Format::Json) {
        write_json(&out.join("realizability.json"), &report)?;
    }
    let summary = format!(
        "N = {sites}: {} springs, grounding {}, force residual {:.2e}, {} negative spring(s)",
        rows.len(),
        net.grounding(),
        report.force_residual,
        report.negative_springs.len()
    );
    if report.passed {
        Ok(summary)
    } else {
        Err(CliError::CheckFailed(format!("realizability: {}", report.issues.join("; "))))
    }
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> CliResult<String> {
    let model = admissible(cfg)?;
    let (sites, times, integrator, cfl) = cfg.resolve_simulate(&model)?;
    let net = network(&model, sites)?;
    let tr = integrate(&model, &net, integrator, cfl, &times)?;
    if cfg.output.wants(Format::Csv) {
        let mut traj = Table::new(&["t", "i", "u_i", "v_i"]);
        for s in &tr.states {
            let (lo, hi) = s.u.support();
            for i in lo.max(0)..hi {
                traj.row(&[num(s.t), i.to_string(), num(s.u.get(i)), num(s.v.get(i))]);
            }
        }
        traj.write(&out.join("trajectory.csv"))?;
        let mut en = Table::new(&["t", "kinetic", "quadratic", "nonlinear", "total"]);
        for (s, e) in tr.states.iter().zip(&tr.energies) {
            en.row(&[num(s.t), num(e.kinetic), num(e.quadratic), num(e.nonlinear), num(e.total)]);
        }
        en.write(&out.join("energy.csv"))?;
    }
    let how = match integrator {
        Integrator::Exact => "exact propagator".to_string(),
        Integrator::Verlet => format!("Verlet, {} steps", tr.steps),
    };
    Ok(format!("N = {sites}, {} samples ({how}), relative energy drift {:.3e}", tr.states.len(), tr.energy_drift()))
}

#[derive(Debug, Serialize)]
struct ConvergeSummary<'a> {
    scenario: &'a str,
    sites: Vec<usize>,
    fit: Option<OrderFit>,
    verdict: Verdict,
    notes: &'a [String],
    failures: Vec<RowFailure<'a>>,
}

#[derive(Debug, Serialize)]
struct RowFailure<'a> {
    sites: usize,
    error: &'a str,
}

fn convergence_table(report: &ConvergenceReport, timing: bool) -> Table {
    let mut t = Table::new(&["scenario", "eps", "N", "t", "W", "E_total", "E_drift_rel", "wall_s"]);
    for r in report.rows.iter().filter(|r| !r.failed()) {
        let e0 = r.energy.first().copied().unwrap_or(0.0);
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        let wall = if timing { num(r.wall_s) } else { String::new() };
        for ((t_k, w), e) in r.times.iter().zip(&r.w).zip(&r.energy) {
            t.row(&[
                report.scenario.clone(),
                num(r.eps),
                r.sites.to_string(),
                num(*t_k),
                num(*w),
                num(*e),
                num((e - e0).abs() / scale),
                wall.clone(),
            ]);
        }
    }
    t
}

pub fn converge(cfg: &RunConfig, out: &Path) -> CliResult<String> {
    validate(cfg)?;
    let sw = cfg.resolve_sweep()?;
    let report = sweep(&sw.name, &sw.model, &sw.sites, &sw.options)?;
    let verdict = judge(&report, sw.min_order);
    if cfg.output.wants(Format::Csv) {
        convergence_table(&report, cfg.output.timing).write(&out.join("convergence.csv"))?;
    }
    if cfg.output.wants(Format::Json) {
        let failures = report
            .rows
            .iter()
            .filter_map(|r| r.error.as_deref().map(|error| RowFailure { sites: r.sites, error }))
            .collect();
        let summary = ConvergeSummary {
            scenario: &report.scenario,
            sites: sw.sites.clone(),
            fit: report.fit,
            verdict: verdict.clone(),
            notes: &report.notes,
            failures,
        };
        write_json(&out.join("summary.json"), &summary)?;
    }
    let Some(fit) = report.fit else {
        let usable = report.rows.iter().filter(|r| r.terminal_w().is_some_and(|w| w > 0.0)).count();
        return Err(CliError::Insufficient(format!("{usable} usable row(s); an order fit needs at least 3")));
    };
    let line = format!(
        "{}: order {:.3} (min {}), residual {:.2e}, strictly decreasing: {}, failed rows: {}",
        report.scenario, fit.slope, sw.min_order, fit.residual, verdict.strictly_decreasing, verdict.failed_rows
    );
    if verdict.passed {
        Ok(line)
    } else {
        Err(CliError::CheckFailed(line))
    }
}

pub fn run_selftest(seed: u64, out: Option<&Path>) -> CliResult<Vec<SuiteResult>> {
    let cfg = SelftestConfig { seed, ..SelftestConfig::default() };
    let suites = selftest::run_all(&cfg);
    if let Some(dir) = out {
        write_json(&dir.join("selftest.json"), &suites)?;
    }
    Ok(suites)
}
