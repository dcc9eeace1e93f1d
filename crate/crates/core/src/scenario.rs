//! Built-in convergence scenarios and their pass thresholds.

use std::f64::consts::PI;

use serde::Serialize;

use crate::convergence::{sweep, ConvergenceReport, SweepOptions};
use crate::dynamics::Integrator;
use crate::error::{Error, Result};
use crate::model::{Boundary, InitialData, ModelSpec, PolynomialR, Quadratic, RTerm, TrigSeries};

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: &'static str,
    pub model: ModelSpec,
    pub sites: Vec<usize>,
    pub options: SweepOptions,
    /// Minimum fitted order of `W` in `eps`.
    pub min_order: f64,
}

pub const SCENARIO_IDS: [&str; 5] =
    ["elastica-periodic", "elastica-dirichlet", "general-linear", "nonlinear", "harmonic-chain"];

fn model(a: Vec<f64>, boundary: Boundary, initial: InitialData) -> ModelSpec {
    ModelSpec {
        length: 2.0 * PI,
        order: a.len() - 1,
        boundary,
        quadratic: Quadratic::Coefficients(a),
        nonlinearity: PolynomialR::zero(),
        initial,
        horizon: 1.0,
        kappa_mesh: None,
    }
}

fn trig(u0: TrigSeries) -> InitialData {
    InitialData::Trig { u0, v0: TrigSeries::default() }
}

fn halvings(from: usize) -> Vec<usize> {
    (0..5).map(|j| from << j).collect()
}

impl Scenario {
    pub fn builtin(id: &str) -> Result<Self> {
        let (model, sites, integrator, min_order) = match id {
            "elastica-periodic" => {
                let m = model(vec![0.0, 0.0, 1.0], Boundary::Periodic, trig(TrigSeries::sin_mode(1, 1.0)));
                (m, halvings(32), Some(Integrator::Exact), 1.9)
            }
            "elastica-dirichlet" => {
                let data = InitialData::Clamped { envelope: 2, u0: TrigSeries::constant(1.0), v0: TrigSeries::default() };
                let m = model(vec![0.0, 0.0, 1.0], Boundary::Dirichlet, data);
                (m, halvings(64), Some(Integrator::Verlet), 0.45)
            }
            "general-linear" => {
                let mut u0 = TrigSeries::sin_mode(1, 1.0);
                u0.cos.push((2, 0.5));
                let data = InitialData::Trig { u0, v0: TrigSeries::sin_mode(1, 0.25) };
                let m = model(vec![1.0, 1.0, 0.0, 1.0], Boundary::Periodic, data);
                (m, halvings(32), Some(Integrator::Exact), 1.9)
            }
            "nonlinear" => {
                let mut m = model(vec![1.0, 0.0, 1.0], Boundary::Periodic, trig(TrigSeries::sin_mode(1, 0.5)));
                m.nonlinearity = PolynomialR::new(vec![RTerm { p: 4, q: 0, c: 0.1 }, RTerm { p: 0, q: 4, c: 0.1 }]);
                (m, halvings(32), Some(Integrator::Verlet), 1.9)
            }
            "harmonic-chain" => {
                let m = model(vec![1.0, 1.0], Boundary::Periodic, trig(TrigSeries::sin_mode(1, 1.0)));
                (m, halvings(32), Some(Integrator::Exact), 1.9)
            }
            other => return Err(Error::Config(format!("unknown scenario `{other}`; known: {}", SCENARIO_IDS.join(", ")))),
        };
        let mut options = SweepOptions::for_model(&model);
        options.integrator = integrator;
        Ok(Self { id: SCENARIO_IDS.iter().find(|s| **s == id).copied().unwrap_or("custom"), model, sites, options, min_order })
    }

    pub fn run(&self) -> Result<ConvergenceReport> {
        sweep(self.id, &self.model, &self.sites, &self.options)
    }
}

/// Pass/fail summary of a convergence report against a threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub strictly_decreasing: bool,
    pub order: Option<f64>,
    pub min_order: f64,
    pub failed_rows: usize,
}

pub fn judge(report: &ConvergenceReport, min_order: f64) -> Verdict {
    let strictly_decreasing = report.strictly_decreasing();
    let order = report.fit.map(|f| f.slope);
    let failed_rows = report.rows.iter().filter(|r| r.failed()).count();
    Verdict {
        passed: strictly_decreasing && failed_rows == 0 && order.is_some_and(|o| o >= min_order),
        strictly_decreasing,
        order,
        min_order,
        failed_rows,
    }
}
