//! Resolution of run settings from defaults, a `key = value` file and flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::control::ControlKind;
use crate::experiments::DEFAULT_EPSILONS;
use crate::models::Model;

/// A configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Controls,
    Tails,
    Evolve,
    SweepEps,
    AsymTails,
    LzCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Spectrum,
        Experiment::Controls,
        Experiment::Tails,
        Experiment::Evolve,
        Experiment::SweepEps,
        Experiment::AsymTails,
        Experiment::LzCheck,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Controls => "controls",
            Experiment::Tails => "tails",
            Experiment::Evolve => "evolve",
            Experiment::SweepEps => "sweep-eps",
            Experiment::AsymTails => "asym-tails",
            Experiment::LzCheck => "lz-check",
        }
    }

    /// Built-in values for this experiment.
    fn defaults(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Spectrum => &[("epsilon", "15"), ("tau_start", "-30"), ("tau_end", "30"), ("points", "1201")],
            Experiment::Controls => &[
                ("epsilon", "15"),
                ("control", "exact"),
                ("tau_start", "-30"),
                ("tau_end", "30"),
                ("points", "1201"),
            ],
            Experiment::Tails => &[("epsilon", "15"), ("fit_start", "100"), ("fit_end", "1000"), ("points", "901")],
            Experiment::Evolve => &[
                ("epsilon", "7"),
                ("control", "separated-matrix"),
                ("record_every", "10"),
                ("initial_level", "0"),
                ("verify_step_halving", "false"),
            ],
            Experiment::SweepEps => &[
                ("delta", "1"),
                ("control", "separated-matrix"),
                ("compare", "true"),
                ("threshold_eps", "5"),
                ("oscillation_from", "1"),
                ("oscillation_to", "5"),
                ("oscillation_count", "41"),
                ("record_every", "10"),
            ],
            Experiment::AsymTails => &[("epsilon", "5"), ("delta_alpha", "0.001"), ("points", "400")],
            Experiment::LzCheck => &[
                ("model", "two-level"),
                ("control", "none"),
                ("tau_start", "-200"),
                ("tau_end", "200"),
                ("tolerance", "0.02"),
            ],
        }
    }

    /// Keys that influence this experiment.
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Experiment::Spectrum => &["tau_start", "tau_end", "points"],
            Experiment::Controls => &["control", "tau_start", "tau_end", "points"],
            Experiment::Tails => &["fit_start", "fit_end", "points"],
            Experiment::Evolve => {
                &["control", "tau_start", "tau_end", "step", "record_every", "initial_level", "verify_step_halving"]
            }
            Experiment::SweepEps => &[
                "control",
                "epsilons",
                "eps_from",
                "eps_to",
                "eps_count",
                "fit_start",
                "fit_end",
                "step",
                "compare",
                "threshold_eps",
                "oscillation_from",
                "oscillation_to",
                "oscillation_count",
                "record_every",
            ],
            Experiment::AsymTails => &["fit_start", "fit_end", "late_fit_start", "late_fit_end", "points"],
            Experiment::LzCheck => &["control", "tau_start", "tau_end", "step", "tolerance"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| ConfigError(format!("unknown experiment `{s}`")))
    }
}

const COMMON_DEFAULTS: [(&str, &str); 5] =
    [("model", "three-level"), ("epsilon", "0"), ("alpha", "1"), ("delta", "0.5"), ("output", "out")];

/// Every key accepted in a config file or as a flag.
pub const KNOWN_KEYS: [&str; 29] = [
    "model",
    "epsilon",
    "alpha",
    "delta",
    "delta_delta",
    "delta_alpha",
    "control",
    "tau_start",
    "tau_end",
    "step",
    "points",
    "fit_start",
    "fit_end",
    "late_fit_start",
    "late_fit_end",
    "epsilons",
    "eps_from",
    "eps_to",
    "eps_count",
    "threshold_eps",
    "oscillation_from",
    "oscillation_to",
    "oscillation_count",
    "compare",
    "tolerance",
    "record_every",
    "initial_level",
    "verify_step_halving",
    "output",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!("config line {}: expected `key = value`", number + 1)));
        };
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError(format!("config line {}: unknown key `{key}`", number + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub model: Model,
    pub control: ControlKind,
    /// `None` selects the model's default window.
    pub window: Option<(f64, f64)>,
    /// `None` selects the default step.
    pub step: Option<f64>,
    pub points: usize,
    pub fit_window: Option<(f64, f64)>,
    pub late_fit_window: Option<(f64, f64)>,
    pub epsilons: Vec<f64>,
    pub threshold_epsilon: Option<f64>,
    /// Fine `eps` scan `(from, to, count)`; `None` when disabled.
    pub oscillation: Option<(f64, f64, usize)>,
    pub compare: bool,
    pub tolerance: f64,
    pub record_every: usize,
    pub initial_level: usize,
    pub verify_step_halving: bool,
    pub output: PathBuf,
}

struct Values<'a>(&'a BTreeMap<String, String>);

impl Values<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError(format!("invalid value for `{key}`: `{v}` is not {what}"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let value: Option<f64> = self.parse(key, "a number")?;
        match value {
            Some(x) if !x.is_finite() => Err(ConfigError(format!("invalid value for `{key}`: must be finite"))),
            other => Ok(other),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.real(key)? {
            Some(x) if x <= 0.0 => Err(ConfigError(format!("invalid value for `{key}`: must be positive, got {x}"))),
            other => Ok(other),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse(key, "a non-negative integer")
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parse(key, "`true` or `false`")
    }

    fn pair(&self, lo: &str, hi: &str) -> Result<Option<(f64, f64)>, ConfigError> {
        match (self.real(lo)?, self.real(hi)?) {
            (None, None) => Ok(None),
            (Some(a), Some(b)) if a < b => Ok(Some((a, b))),
            (Some(a), Some(b)) => Err(ConfigError(format!("invalid value for `{lo}`: {a} must be below `{hi}` = {b}"))),
            (Some(_), None) => Err(ConfigError(format!("`{lo}` is set but `{hi}` is missing"))),
            (None, Some(_)) => Err(ConfigError(format!("`{hi}` is set but `{lo}` is missing"))),
        }
    }
}

impl RunConfig {
    /// Merges built-in defaults with `overrides` (file entries, then flags)
    /// and validates the result.
    pub fn resolve(experiment: Experiment, overrides: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<String, String> = COMMON_DEFAULTS
            .iter()
            .chain(experiment.defaults())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        for (k, v) in overrides {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(ConfigError(format!("unknown key `{k}`")));
            }
            kv.insert(k.clone(), v.clone());
        }
        let values = Values(&kv);

        let model = Model::from_kv(&kv).map_err(|e| ConfigError(e.to_string()))?;
        let control = match values.raw("control") {
            Some(v) => v.parse().map_err(|_| {
                ConfigError(format!(
                    "invalid value for `control`: `{v}` (expected exact, separated-matrix, separated-field, \
                     perturbative-small-delta, perturbative-long-time or none)"
                ))
            })?,
            None => ControlKind::None,
        };

        let epsilons = match (values.raw("epsilons"), values.positive("eps_from")?, values.positive("eps_to")?) {
            (Some(list), _, _) => parse_list("epsilons", list)?,
            (None, Some(from), Some(to)) if from < to => {
                let count = values.count("eps_count")?.unwrap_or(DEFAULT_EPSILONS.len());
                if count < 2 {
                    return Err(ConfigError("invalid value for `eps_count`: need at least 2".into()));
                }
                crate::experiments::log_grid(from, to, count)
            }
            (None, Some(from), Some(to)) => {
                return Err(ConfigError(format!("invalid value for `eps_from`: {from} must be below `eps_to` = {to}")))
            }
            (None, None, None) => DEFAULT_EPSILONS.to_vec(),
            (None, _, _) => return Err(ConfigError("`eps_from` and `eps_to` must be given together".into())),
        };
        if experiment == Experiment::SweepEps && epsilons.is_empty() {
            return Err(ConfigError("invalid value for `epsilons`: list is empty".into()));
        }

        let mut fit_window = values.pair("fit_start", "fit_end")?;
        if experiment == Experiment::SweepEps && fit_window.is_none() {
            let lo = epsilons.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = epsilons.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            fit_window = Some((lo, hi));
        }

        let oscillation = match values.count("oscillation_count")?.unwrap_or(0) {
            0 => None,
            1 => return Err(ConfigError("invalid value for `oscillation_count`: need 0 or at least 2".into())),
            n => match values.pair("oscillation_from", "oscillation_to")? {
                Some((a, b)) => Some((a, b, n)),
                None => return Err(ConfigError("`oscillation_count` needs `oscillation_from` and `oscillation_to`".into())),
            },
        };

        let config = RunConfig {
            experiment,
            model,
            control,
            window: values.pair("tau_start", "tau_end")?,
            step: values.positive("step")?,
            points: values.count("points")?.unwrap_or(0),
            fit_window,
            late_fit_window: values.pair("late_fit_start", "late_fit_end")?,
            epsilons,
            threshold_epsilon: match values.raw("threshold_eps") {
                Some("none") => None,
                _ => values.positive("threshold_eps")?,
            },
            oscillation,
            compare: values.flag("compare")?.unwrap_or(false),
            tolerance: values.positive("tolerance")?.unwrap_or(crate::experiments::LZ_TOLERANCE),
            record_every: values.count("record_every")?.unwrap_or(1).max(1),
            initial_level: values.count("initial_level")?.unwrap_or(0),
            verify_step_halving: values.flag("verify_step_halving")?.unwrap_or(false),
            output: PathBuf::from(values.raw("output").unwrap_or("out")),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let needs_points = matches!(
            self.experiment,
            Experiment::Spectrum | Experiment::Controls | Experiment::Tails | Experiment::AsymTails
        );
        if needs_points && self.points < 3 {
            return Err(ConfigError(format!("invalid value for `points`: need at least 3, got {}", self.points)));
        }
        let three_level_only = matches!(
            self.experiment,
            Experiment::Tails | Experiment::SweepEps | Experiment::AsymTails
        );
        if three_level_only && self.model.dim() != 3 {
            return Err(ConfigError(format!("invalid value for `model`: {} needs the three-level model", self.experiment)));
        }
        if self.experiment == Experiment::LzCheck && self.model.dim() != 2 {
            return Err(ConfigError("invalid value for `model`: lz-check needs the two-level model".into()));
        }
        if self.initial_level >= self.model.dim() {
            return Err(ConfigError(format!(
                "invalid value for `initial_level`: {} exceeds the highest level {}",
                self.initial_level,
                self.model.dim() - 1
            )));
        }
        Ok(())
    }

    /// Relevant settings as JSON, including the model.
    pub fn params(&self) -> Map<String, Value> {
        let mut map = Map::new();
        for (k, v) in self.model.to_kv() {
            if k == "epsilon" && self.experiment == Experiment::SweepEps {
                continue;
            }
            map.insert(k, v.parse::<f64>().map(Value::from).unwrap_or(Value::String(v)));
        }
        let pair = |p: Option<(f64, f64)>| p.map_or(Value::Null, |(a, b)| json!([a, b]));
        for &key in self.experiment.keys() {
            let value = match key {
                "control" => json!(self.control.as_str()),
                "tau_start" | "tau_end" => continue,
                "step" => self.step.map_or(Value::Null, Value::from),
                "points" => json!(self.points),
                "fit_start" | "fit_end" => continue,
                "late_fit_start" | "late_fit_end" => continue,
                "epsilons" => json!(self.epsilons),
                "eps_from" | "eps_to" | "eps_count" => continue,
                "threshold_eps" => self.threshold_epsilon.map_or(Value::Null, Value::from),
                "oscillation_from" | "oscillation_to" | "oscillation_count" => continue,
                "compare" => json!(self.compare),
                "tolerance" => json!(self.tolerance),
                "record_every" => json!(self.record_every),
                "initial_level" => json!(self.initial_level),
                "verify_step_halving" => json!(self.verify_step_halving),
                other => unreachable!("unhandled key {other}"),
            };
            map.insert(key.to_string(), value);
        }
        let keys = self.experiment.keys();
        if keys.contains(&"tau_start") {
            map.insert("window".into(), pair(self.window));
        }
        if keys.contains(&"fit_start") {
            map.insert("fit_window".into(), pair(self.fit_window));
        }
        if keys.contains(&"late_fit_start") {
            map.insert("late_fit_window".into(), pair(self.late_fit_window));
        }
        if keys.contains(&"oscillation_count") {
            map.insert(
                "oscillation".into(),
                self.oscillation.map_or(Value::Null, |(a, b, n)| json!({"from": a, "to": b, "count": n})),
            );
        }
        map
    }
}

fn parse_list(key: &str, list: &str) -> Result<Vec<f64>, ConfigError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
            _ => Err(ConfigError(format!("invalid value for `{key}`: `{s}` is not a non-negative number"))),
        })
        .collect()
}
