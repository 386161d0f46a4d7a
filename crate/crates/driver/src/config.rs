//! Run configuration: the `run.json` schema and its resolution into live
//! model, payoff and cubature objects.

use recomb_core::cubature::{degree3_formula, WienerCubature};
use recomb_core::models::{Payoff, VectorFieldModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io;

/// How the localization radii `u_2, ..., u_{k-1}` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusRule {
    Named(NamedRule),
    /// A constant radius for every interior step.
    Fixed { fixed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedRule {
    /// `u_j = s_j^(p/2 - a)`.
    Example1,
    /// The matched-error schedule; requires `m = r`.
    Example2,
    /// Recombination disabled: the run reproduces the vanilla tree.
    None,
}

/// The `run.json` document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default)]
    pub model_params: serde_json::Value,
    pub payoff: String,
    #[serde(default)]
    pub payoff_params: Vec<f64>,
    pub x0: Vec<f64>,
    #[serde(rename = "T")]
    pub t: f64,
    pub k: usize,
    pub gamma: f64,
    /// `"degree3"` or a path to a formula file.
    pub cubature: String,
    pub r: u32,
    pub radius_rule: RadiusRule,
    /// Declared Hörmander step of the model.
    pub p: u32,
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    /// Seed for randomized harnesses only; the pipeline itself is
    /// deterministic.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Skip a recombination when the cost model predicts it costs more than
    /// the tree growth it avoids.
    #[serde(default)]
    pub cost_skip: bool,
}

fn default_ode_tol() -> f64 {
    1e-10
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown model '{0}' (expected constant, linear, gbm or heisenberg)")]
    UnknownModel(String),
    #[error("unknown payoff '{0}' (expected one, identity, coord, call or abs)")]
    UnknownPayoff(String),
    #[error("bad parameters for {what}: {msg}")]
    BadParams { what: &'static str, msg: String },
    #[error("{0}")]
    Invariant(String),
    #[error("failed to load cubature formula: {0}")]
    Formula(#[from] io::FormulaError),
}

/// A validated, resolved configuration ready to run.
pub struct RunSetup {
    pub config: RunConfig,
    pub model: VectorFieldModel,
    pub payoff: Payoff,
    pub formula: WienerCubature,
}

impl RunConfig {
    pub fn resolve(self) -> Result<RunSetup, ConfigError> {
        if !(self.t > 0.0) {
            return Err(ConfigError::Invariant("T must be positive".into()));
        }
        if self.k < 2 {
            return Err(ConfigError::Invariant("k must be at least 2".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(ConfigError::Invariant("gamma must be positive".into()));
        }
        if self.r < 1 {
            return Err(ConfigError::Invariant("r must be at least 1".into()));
        }
        if self.p < 1 {
            return Err(ConfigError::Invariant("p must be at least 1".into()));
        }
        if !(self.ode_tol > 0.0) {
            return Err(ConfigError::Invariant("ode_tol must be positive".into()));
        }
        if self.threads < 1 {
            return Err(ConfigError::Invariant("threads must be at least 1".into()));
        }
        if let RadiusRule::Fixed { fixed } = self.radius_rule {
            if !(fixed > 0.0) {
                return Err(ConfigError::Invariant("fixed radius must be positive".into()));
            }
        }

        let model = build_model(&self.model, &self.model_params)?.with_hormander_step(self.p);
        let payoff = build_payoff(&self.payoff, &self.payoff_params)?;

        if self.x0.len() != model.state_dim() {
            return Err(ConfigError::Invariant(format!(
                "x0 has dimension {}, model expects {}",
                self.x0.len(),
                model.state_dim()
            )));
        }

        let formula = if self.cubature == "degree3" {
            degree3_formula(model.driving_dim())
        } else {
            io::load_formula(std::path::Path::new(&self.cubature))?
        };
        if formula.driving_dim() != model.driving_dim() {
            return Err(ConfigError::Invariant(format!(
                "cubature formula drives {} Brownian coordinates, model has {}",
                formula.driving_dim(),
                model.driving_dim()
            )));
        }
        if formula.degree() % 2 == 0 {
            return Err(ConfigError::Invariant(
                "cubature degree must be odd".into(),
            ));
        }

        Ok(RunSetup {
            config: self,
            model,
            payoff,
            formula,
        })
    }
}

fn as_f64_array(v: &serde_json::Value, what: &'static str) -> Result<Vec<f64>, ConfigError> {
    v.as_array()
        .and_then(|a| a.iter().map(|x| x.as_f64()).collect::<Option<Vec<f64>>>())
        .ok_or(ConfigError::BadParams {
            what,
            msg: "expected an array of numbers".into(),
        })
}

fn build_model(name: &str, params: &serde_json::Value) -> Result<VectorFieldModel, ConfigError> {
    match name {
        "gbm" => {
            let p = as_f64_array(params, "gbm")?;
            if p.len() != 1 || !(p[0] > 0.0) {
                return Err(ConfigError::BadParams {
                    what: "gbm",
                    msg: "expected [sigma] with sigma > 0".into(),
                });
            }
            Ok(VectorFieldModel::gbm(p[0]))
        }
        "heisenberg" => Ok(VectorFieldModel::heisenberg()),
        "constant" => {
            let fields: Vec<Vec<f64>> =
                serde_json::from_value(params.clone()).map_err(|e| ConfigError::BadParams {
                    what: "constant",
                    msg: format!("expected [[V0], [V1], ...]: {e}"),
                })?;
            if fields.len() < 2 {
                return Err(ConfigError::BadParams {
                    what: "constant",
                    msg: "need V0 and at least one driving field".into(),
                });
            }
            Ok(VectorFieldModel::constant(fields))
        }
        "linear" => {
            let mats: Vec<Vec<Vec<f64>>> =
                serde_json::from_value(params.clone()).map_err(|e| ConfigError::BadParams {
                    what: "linear",
                    msg: format!("expected [[[A0]], [[A1]], ...]: {e}"),
                })?;
            if mats.len() < 2 {
                return Err(ConfigError::BadParams {
                    what: "linear",
                    msg: "need A0 and at least one driving matrix".into(),
                });
            }
            Ok(VectorFieldModel::linear(mats))
        }
        other => Err(ConfigError::UnknownModel(other.into())),
    }
}

fn build_payoff(name: &str, params: &[f64]) -> Result<Payoff, ConfigError> {
    match name {
        "one" => Ok(Payoff::One),
        "identity" => Ok(Payoff::Coordinate(0)),
        "coord" => {
            let j = params.first().copied().unwrap_or(0.0);
            if j < 0.0 || j.fract() != 0.0 {
                return Err(ConfigError::BadParams {
                    what: "coord",
                    msg: "expected [index]".into(),
                });
            }
            Ok(Payoff::Coordinate(j as usize))
        }
        "call" => params
            .first()
            .map(|&strike| Payoff::Call { strike })
            .ok_or(ConfigError::BadParams {
                what: "call",
                msg: "expected [strike]".into(),
            }),
        "abs" => params
            .first()
            .map(|&strike| Payoff::AbsSpread { strike })
            .ok_or(ConfigError::BadParams {
                what: "abs",
                msg: "expected [strike]".into(),
            }),
        other => Err(ConfigError::UnknownPayoff(other.into())),
    }
}
