//! Experiment configuration files.
//!
//! A configuration is TOML with five sections:
//!
//! ```toml
//! [model]
//! name = "damped-oscillator"   # or "thermo-particles", "thermo-springs"
//! gamma = 0.1
//!
//! [method]
//! name = "dg:gonzalez"         # dg:avf, dg:itoh-abe, herglotz, rk4, dho-closed-form
//!
//! [initial]
//! q = [0.0]
//! p = [10.0]
//! s = 0.0
//!
//! [run]
//! h = 0.1
//! steps = 500
//!
//! [tolerances]                 # optional
//! energy = 1e-9
//! ```
//!
//! Unknown keys are rejected. Every error carries the line it refers to when
//! that line can be located.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use contact_thermo::diagnostics::AuditTolerances;
use contact_thermo::systems::{
    damped_system, entropy_for_temperature, thermo_particles, thermo_springs, FnPotential, Potential,
    QuadraticPotential, ThermoSpringParams,
};
use contact_thermo::{Method, ModelSpec, Solver, State, StepperConfig};
use serde::Deserialize;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub message: String,
    /// Dotted key, e.g. `run.h`.
    pub field: Option<String>,
    /// 1-based line in the configuration text.
    pub line: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " in `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub mass: Option<f64>,
    pub gamma: Option<f64>,
    /// Spring constant of the damped oscillator.
    pub stiffness: Option<f64>,
    /// Coefficient `β` of an added `β|q|⁴/4` term.
    pub quartic: Option<f64>,
    /// Mechanical dimension of the damped oscillator.
    pub dim: Option<usize>,
    pub masses: Option<[f64; 2]>,
    pub capacities: Option<[f64; 2]>,
    pub conductivity: Option<f64>,
    /// Wall springs of the two thermo-springs.
    pub stiffnesses: Option<[f64; 2]>,
    /// Spring between the two thermo-springs.
    pub coupling: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: String,
    pub solver: Option<String>,
    pub tol_solve: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    /// Second position, for the discrete Herglotz method.
    pub q1: Option<Vec<f64>>,
    /// Entropy: a number for simple models, a pair for composed ones.
    pub s: Option<Entropy>,
    pub temperatures: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entropy {
    Single(f64),
    Pair([f64; 2]),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub h: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub energy: Option<f64>,
    pub entropy: Option<f64>,
    pub first_law: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// File stem of the artifacts; defaults to the configuration's file stem.
    pub name: Option<String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub method: MethodSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A validated experiment ready to run.
#[derive(Clone)]
pub struct Experiment {
    pub name: String,
    pub model: ModelSpec,
    pub method: Method,
    pub x0: State,
    pub stepper: StepperConfig,
    pub steps: usize,
    pub tolerances: AuditTolerances,
}

impl fmt::Debug for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Experiment")
            .field("name", &self.name)
            .field("model", &self.model.name())
            .field("method", &self.method)
            .field("x0", &self.x0)
            .field("stepper", &self.stepper)
            .field("steps", &self.steps)
            .finish()
    }
}

pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        message: format!("cannot read {}: {e}", path.display()),
        field: None,
        line: None,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    parse(&text, stem)
}

/// Parses and validates `text`; `default_name` names the artifacts unless
/// `[output] name` is set.
pub fn parse(text: &str, default_name: &str) -> Result<Experiment, ConfigError> {
    let raw: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
        message: e.message().to_string(),
        field: None,
        line: e.span().map(|s| line_of_offset(text, s.start)),
    })?;
    Builder { text }.build(&raw, default_name)
}

struct Builder<'a> {
    text: &'a str,
}

impl Builder<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            message: message.into(),
            field: Some(format!("{section}.{key}")),
            line: locate_key(self.text, section, key),
        }
    }

    fn missing(&self, section: &str, key: &str, why: &str) -> ConfigError {
        ConfigError {
            message: format!("missing `{key}`, required {why}"),
            field: Some(format!("{section}.{key}")),
            line: locate_section(self.text, section),
        }
    }

    fn build(&self, raw: &ExperimentConfig, default_name: &str) -> Result<Experiment, ConfigError> {
        let model = self.model(&raw.model)?;
        let method = self.method(&raw.method, &raw.initial, &model)?;
        let x0 = self.initial(&raw.initial, &model, &method)?;

        if !(raw.run.h > 0.0 && raw.run.h.is_finite()) {
            return Err(self.err("run", "h", format!("step size must be positive, got {}", raw.run.h)));
        }
        let mut stepper = StepperConfig::with_step(raw.run.h);
        if let Some(s) = &raw.method.solver {
            stepper.solver = s.parse::<Solver>().map_err(|e| self.err("method", "solver", e.to_string()))?;
        }
        if let Some(tol) = raw.method.tol_solve {
            stepper.tol_solve = tol;
        }
        if let Some(n) = raw.method.max_iter {
            stepper.max_iter = n;
        }
        stepper.validate().map_err(|e| ConfigError {
            message: e.to_string(),
            field: Some("method".into()),
            line: locate_section(self.text, "method"),
        })?;

        let mut tolerances = AuditTolerances::default();
        let t = &raw.tolerances;
        for (key, value, slot) in [
            ("energy", t.energy, &mut tolerances.energy),
            ("entropy", t.entropy, &mut tolerances.entropy),
        ] {
            if let Some(v) = value {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(self.err("tolerances", key, "must be non-negative"));
                }
                *slot = v;
            }
        }
        if let Some(v) = t.first_law {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(self.err("tolerances", "first_law", "must be non-negative"));
            }
            tolerances.first_law = Some(v);
        }

        let name = raw.output.name.clone().unwrap_or_else(|| default_name.to_string());
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(self.err("output", "name", "must be a plain file stem"));
        }

        Ok(Experiment {
            name,
            model,
            method,
            x0,
            stepper,
            steps: raw.run.steps,
            tolerances,
        })
    }

    fn model(&self, m: &ModelSection) -> Result<ModelSpec, ConfigError> {
        let wrap = |e: contact_thermo::Error| ConfigError {
            message: e.to_string(),
            field: Some("model".into()),
            line: locate_section(self.text, "model"),
        };
        match m.name.as_str() {
            "damped-oscillator" => {
                let dim = m.dim.unwrap_or(1);
                if dim == 0 {
                    return Err(self.err("model", "dim", "must be at least 1"));
                }
                let gamma = m.gamma.ok_or_else(|| self.missing("model", "gamma", "by damped-oscillator"))?;
                let k = m.stiffness.unwrap_or(1.0);
                let potential: Arc<dyn Potential> = match m.quartic {
                    None | Some(0.0) => Arc::new(QuadraticPotential::harmonic(dim, k)),
                    Some(beta) => Arc::new(FnPotential::new(
                        dim,
                        move |q: &[f64]| {
                            let r2: f64 = q.iter().map(|x| x * x).sum();
                            0.5 * k * r2 + 0.25 * beta * r2 * r2
                        },
                        move |q: &[f64]| {
                            let r2: f64 = q.iter().map(|x| x * x).sum();
                            q.iter().map(|x| (k + beta * r2) * x).collect()
                        },
                    )),
                };
                damped_system(m.mass.unwrap_or(1.0), gamma, potential).map_err(wrap)
            }
            "thermo-particles" => {
                let [ca, cb] = m.capacities.unwrap_or([1.0, 1.0]);
                thermo_particles(ca, cb, m.conductivity.unwrap_or(1.0)).map_err(wrap)
            }
            "thermo-springs" => {
                let params = ThermoSpringParams {
                    masses: m.masses.unwrap_or([1.0, 1.0]),
                    capacities: m.capacities.unwrap_or([1.0, 1.0]),
                    conductivity: m.conductivity.unwrap_or(1.0),
                    dims: (1, 1),
                };
                let [ka, kb] = m.stiffnesses.unwrap_or([1.0, 1.0]);
                let potential = QuadraticPotential::coupled_springs(ka, kb, m.coupling.unwrap_or(0.0));
                thermo_springs(&params, Arc::new(potential)).map_err(wrap)
            }
            other => Err(self.err(
                "model",
                "name",
                format!("unknown model `{other}` (expected damped-oscillator, thermo-particles or thermo-springs)"),
            )),
        }
    }

    fn method(&self, m: &MethodSection, init: &InitialSection, model: &ModelSpec) -> Result<Method, ConfigError> {
        let method = m.name.parse::<Method>().map_err(|e| self.err("method", "name", e.to_string()))?;
        let simple_only = matches!(method, Method::Herglotz { .. } | Method::DhoClosedForm);
        if simple_only && model.is_composed() {
            return Err(self.err("method", "name", format!("`{method}` needs a simple model")));
        }
        if method == Method::DhoClosedForm && model.unit_oscillator_gamma().is_none() {
            return Err(self.err(
                "method",
                "name",
                "`dho-closed-form` needs a unit-mass, unit-stiffness oscillator in one dimension",
            ));
        }
        match (method, &init.q1) {
            (Method::Herglotz { .. }, q1) => Ok(Method::Herglotz { q1: q1.clone() }),
            (_, Some(_)) => Err(self.err("initial", "q1", "only used by the herglotz method")),
            (other, None) => Ok(other),
        }
    }

    fn initial(&self, init: &InitialSection, model: &ModelSpec, method: &Method) -> Result<State, ConfigError> {
        let layout = model.layout();
        let dims = layout.mechanical_dims().to_vec();
        let n_mech: usize = dims.iter().sum();
        let vector = |key: &str, v: &Option<Vec<f64>>, required: bool| -> Result<Vec<f64>, ConfigError> {
            match v {
                Some(v) if v.len() == n_mech => Ok(v.clone()),
                Some(v) => Err(self.err("initial", key, format!("expected {n_mech} entries, got {}", v.len()))),
                None if required && n_mech > 0 => Err(self.missing("initial", key, &format!("by `{}`", model.name()))),
                None => Ok(vec![0.0; n_mech]),
            }
        };
        let q = vector("q", &init.q, true)?;
        if let Some(q1) = &init.q1 {
            if q1.len() != n_mech {
                return Err(self.err("initial", "q1", format!("expected {n_mech} entries, got {}", q1.len())));
            }
        }
        let p_required = !matches!(method, Method::Herglotz { q1: Some(_) });
        let p = vector("p", &init.p, p_required)?;

        let s = if model.is_composed() {
            let caps = model.heat_capacities().unwrap_or([1.0, 1.0]);
            match (&init.s, init.temperatures) {
                (Some(_), Some(_)) => {
                    return Err(self.err("initial", "temperatures", "give either `s` or `temperatures`, not both"))
                }
                (Some(Entropy::Pair(s)), None) => s.to_vec(),
                (Some(Entropy::Single(_)), None) => {
                    return Err(self.err("initial", "s", "composed models take a pair of entropies"))
                }
                (None, Some(t)) => {
                    if let Some(bad) = t.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
                        return Err(self.err("initial", "temperatures", format!("must be positive, got {bad}")));
                    }
                    vec![entropy_for_temperature(caps[0], t[0]), entropy_for_temperature(caps[1], t[1])]
                }
                (None, None) => return Err(self.missing("initial", "temperatures", "by composed models")),
            }
        } else {
            if init.temperatures.is_some() {
                return Err(self.err("initial", "temperatures", "only composed models take temperatures"));
            }
            match &init.s {
                Some(Entropy::Single(s)) => vec![*s],
                Some(Entropy::Pair(_)) => return Err(self.err("initial", "s", "simple models take a single entropy")),
                None => vec![0.0],
            }
        };

        let mut x = Vec::with_capacity(layout.dim());
        let mut offset = 0;
        for (a, &n) in dims.iter().enumerate() {
            x.extend_from_slice(&q[offset..offset + n]);
            x.extend_from_slice(&p[offset..offset + n]);
            x.push(s[a]);
            offset += n;
        }
        let x = State::new(x);
        if !x.is_finite() {
            return Err(ConfigError {
                message: "initial state has non-finite entries".into(),
                field: Some("initial".into()),
                line: locate_section(self.text, "initial"),
            });
        }
        Ok(x)
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn section_header(line: &str) -> Option<&str> {
    let t = line.trim();
    t.strip_prefix('[')?.strip_suffix(']').map(str::trim)
}

fn locate_section(text: &str, section: &str) -> Option<usize> {
    text.lines().position(|l| section_header(l) == Some(section)).map(|i| i + 1)
}

fn locate_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(h) = section_header(line) {
            current = Some(h);
            continue;
        }
        if current == Some(section) {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    locate_section(text, section)
}
