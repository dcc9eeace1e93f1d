use std::path::{Path, PathBuf};

use gradnet::convergence::{default_times, sites_from_eps, DeviationWeights, ReferenceKind, SweepOptions};
use gradnet::dynamics::Integrator;
use gradnet::model::{Boundary, ModelSpec};
use gradnet::scenario::Scenario;
use serde::Deserialize;

use crate::{CliError, CliResult};

/// Top-level JSON run configuration.
///
/// Either `model` or `scenario` must be present. A scenario supplies the
/// model, lattice sizes and pass threshold; explicit blocks override it.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub synthesize: Option<SynthesizeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Lattice sizes `N`; mutually exclusive with `eps`.
    pub sites: Option<Vec<usize>>,
    pub eps: Option<Vec<f64>>,
    /// Overrides the model horizon.
    pub horizon: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub integrator: Option<Integrator>,
    pub cfl: Option<f64>,
    /// Refinement ratio of a fine-lattice reference.
    pub ratio: Option<f64>,
    pub reference: Option<ReferenceKind>,
    pub weights: Option<DeviationWeights>,
    pub min_order: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub sites: Option<usize>,
    pub eps: Option<f64>,
    pub horizon: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub integrator: Option<Integrator>,
    pub cfl: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub sites: Option<usize>,
    pub eps: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
    /// Write measured wall-clock times. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, formats: all_formats(), timing: false }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> CliResult<RunConfig> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// A sweep ready to run: model, sizes, options and threshold.
#[derive(Clone, Debug)]
pub struct ResolvedSweep {
    pub name: String,
    pub model: ModelSpec,
    pub sites: Vec<usize>,
    pub options: SweepOptions,
    pub min_order: f64,
}

fn default_min_order(boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Periodic => 1.9,
        Boundary::Dirichlet => 0.45,
    }
}

fn integral_ratio(r: f64) -> CliResult<usize> {
    if !(r.is_finite() && r.fract() == 0.0 && r >= 1.0) {
        return Err(CliError::Config(format!("refinement ratio must be a positive integer, got {r}")));
    }
    Ok(r as usize)
}

fn check_horizon(t: f64) -> CliResult<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(CliError::Config(format!("horizon must be positive, got {t}")));
    }
    Ok(t)
}

impl RunConfig {
    fn base(&self) -> CliResult<Option<Scenario>> {
        self.scenario.as_deref().map(Scenario::builtin).transpose().map_err(CliError::from)
    }

    pub fn model(&self) -> CliResult<ModelSpec> {
        if let Some(m) = &self.model {
            return Ok(m.clone());
        }
        match self.base()? {
            Some(s) => Ok(s.model),
            None => Err(CliError::Config("configuration needs a `model` block or a `scenario` id".into())),
        }
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf).or_else(|| self.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn resolve_sweep(&self) -> CliResult<ResolvedSweep> {
        let base = self.base()?;
        let model = self.model()?;
        let sc = self.sweep.clone().unwrap_or_default();
        let mut options = match &base {
            Some(s) if self.model.is_none() => s.options.clone(),
            _ => SweepOptions::for_model(&model),
        };
        let sites = match (&sc.sites, &sc.eps) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either `sites` or `eps`, not both".into())),
            (Some(n), None) => n.clone(),
            (None, Some(e)) => sites_from_eps(model.length, e, model.boundary)?,
            (None, None) => match &base {
                Some(s) => s.sites.clone(),
                None => return Err(CliError::Config("sweep needs `sites` or `eps`".into())),
            },
        };
        if let Some(t) = sc.times {
            options.times = t;
        } else if let Some(h) = sc.horizon {
            options.times = default_times(check_horizon(h)?);
        }
        if sc.integrator.is_some() {
            options.integrator = sc.integrator;
        }
        if sc.cfl.is_some() {
            options.cfl = sc.cfl;
        }
        if let Some(r) = sc.ratio {
            options.ratio = integral_ratio(r)?;
        }
        if let Some(r) = sc.reference {
            options.reference = r;
        }
        if sc.weights.is_some() {
            options.weights = sc.weights;
        }
        let min_order = sc
            .min_order
            .or(base.as_ref().filter(|_| self.model.is_none()).map(|s| s.min_order))
            .unwrap_or_else(|| default_min_order(model.boundary));
        let name = self.scenario.clone().unwrap_or_else(|| "custom".into());
        Ok(ResolvedSweep { name, model, sites, options, min_order })
    }

    /// Lattice size for single-lattice commands: explicit block, then the
    /// `simulate` block, then the finest sweep size.
    fn single_sites(&self, sites: Option<usize>, eps: Option<f64>, model: &ModelSpec) -> CliResult<usize> {
        match (sites, eps) {
            (Some(_), Some(_)) => Err(CliError::Config("give either `sites` or `eps`, not both".into())),
            (Some(n), None) => Ok(n),
            (None, Some(e)) => Ok(sites_from_eps(model.length, &[e], model.boundary)?[0]),
            (None, None) => {
                let sweep = self.resolve_sweep().map_err(|_| {
                    CliError::Config("no lattice size given (`sites` or `eps` in the command block)".into())
                })?;
                sweep.sites.last().copied().ok_or_else(|| CliError::Config("empty lattice size list".into()))
            }
        }
    }

    pub fn synthesize_sites(&self, model: &ModelSpec) -> CliResult<usize> {
        let s = self.synthesize.clone().unwrap_or_default();
        if s.sites.is_none() && s.eps.is_none() {
            if let Some(sim) = &self.simulate {
                if sim.sites.is_some() || sim.eps.is_some() {
                    return self.single_sites(sim.sites, sim.eps, model);
                }
            }
        }
        self.single_sites(s.sites, s.eps, model)
    }

    /// Lattice size, sample times, integrator and CFL for `simulate`.
    pub fn resolve_simulate(&self, model: &ModelSpec) -> CliResult<(usize, Vec<f64>, Integrator, Option<f64>)> {
        let s = self.simulate.clone().unwrap_or_default();
        let sites = self.single_sites(s.sites, s.eps, model)?;
        let times = match (s.times, s.horizon) {
            (Some(t), _) => t,
            (None, Some(h)) => default_times(check_horizon(h)?),
            (None, None) => default_times(model.horizon),
        };
        let exact_ok = model.is_linear() && model.boundary == Boundary::Periodic;
        let integrator = match s.integrator {
            Some(Integrator::Exact) if !exact_ok => {
                return Err(CliError::Config("the exact integrator needs a linear periodic model".into()))
            }
            Some(i) => i,
            None if exact_ok => Integrator::Exact,
            None => Integrator::Verlet,
        };
        Ok((sites, times, integrator, s.cfl))
    }
}
