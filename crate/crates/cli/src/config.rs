//! Flat `key = value` run configuration.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use otoc_core::ModelKind;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindTag {
    OtocInf,
    OtocThermal,
    OtocEq,
    Tpc,
}

impl KindTag {
    pub fn as_str(self) -> &'static str {
        match self {
            KindTag::OtocInf => "otoc-inf",
            KindTag::OtocThermal => "otoc-thermal",
            KindTag::OtocEq => "otoc-eq",
            KindTag::Tpc => "tpc",
        }
    }
}

impl FromStr for KindTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "otoc-inf" => Ok(KindTag::OtocInf),
            "otoc-thermal" => Ok(KindTag::OtocThermal),
            "otoc-eq" => Ok(KindTag::OtocEq),
            "tpc" => Ok(KindTag::Tpc),
            _ => Err(format!("unknown kind '{s}' (otoc-inf, otoc-thermal, otoc-eq, tpc)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    OtocMin,
    SusceptibilityMax,
}

impl Observable {
    fn as_str(self) -> &'static str {
        match self {
            Observable::OtocMin => "otoc-min",
            Observable::SusceptibilityMax => "susceptibility-max",
        }
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "otoc-min" => Ok(Observable::OtocMin),
            "susceptibility-max" => Ok(Observable::SusceptibilityMax),
            _ => Err(format!("unknown observable '{s}' (otoc-min, susceptibility-max)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateTag {
    Ground,
    Thermal,
}

impl FromStr for StateTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ground" => Ok(StateTag::Ground),
            "thermal" => Ok(StateTag::Thermal),
            _ => Err(format!("unknown state '{s}' (ground, thermal)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Beta,
    Eta,
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "beta" => Ok(Sweep::Beta),
            "eta" => Ok(Sweep::Eta),
            _ => Err(format!("unknown sweep '{s}' (beta, eta)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub omega0: f64,
    pub eta: f64,
    pub n: usize,
    pub atoms: usize,
    pub ratio: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ratio_step: f64,
    pub ratios: Vec<f64>,
    pub kind: Vec<KindTag>,
    pub beta: Vec<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub fit_window: Option<(f64, f64)>,
    pub etas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub atoms_list: Vec<usize>,
    pub cutoffs: Vec<usize>,
    pub probe_times: Vec<f64>,
    pub observable: Observable,
    pub search_min: f64,
    pub search_max: f64,
    pub search_step: f64,
    pub search_rel_tol: f64,
    pub local_step: f64,
    pub local_window: f64,
    pub peak_stages: usize,
    pub state: StateTag,
    pub sweep: Sweep,
    pub rescale: bool,
    pub drift: bool,
    pub synthetic: bool,
    pub synthetic_k: f64,
    pub synthetic_intercept: f64,
    pub synthetic_a: f64,
    pub synthetic_b: f64,
    pub synthetic_c: f64,
    pub timing: bool,
    pub output: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Rabi,
            omega0: 1.0,
            eta: 1048576.0,
            n: 80,
            atoms: 1,
            ratio: 1.0,
            ratio_min: 0.5,
            ratio_max: 1.5,
            ratio_step: 0.01,
            ratios: vec![0.8, 0.9, 1.0, 1.1, 1.2],
            kind: vec![KindTag::OtocInf],
            beta: vec![0.1, 1.0, 10.0],
            t_start: 0.0,
            t_end: 500.0,
            dt: 0.1,
            fit_window: None,
            etas: (11..=20).map(|e| 2f64.powi(e)).collect(),
            gammas: (11..=14).map(|e| 2f64.powi(e)).collect(),
            atoms_list: (1..=6).collect(),
            cutoffs: vec![20, 40, 60, 80, 100],
            probe_times: vec![0.0, 50.0],
            observable: Observable::OtocMin,
            search_min: 0.95,
            search_max: 1.1,
            search_step: 0.01,
            search_rel_tol: 0.02,
            local_step: 0.0,
            local_window: 0.03,
            peak_stages: 6,
            state: StateTag::Ground,
            sweep: Sweep::Beta,
            rescale: false,
            drift: false,
            synthetic: false,
            synthetic_k: 0.952,
            synthetic_intercept: 4.87,
            synthetic_a: 0.3,
            synthetic_b: 1.2,
            synthetic_c: 0.05,
            timing: false,
            output: PathBuf::from("out"),
            threads: 0,
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "model",
    "omega0",
    "eta",
    "n",
    "atoms",
    "ratio",
    "ratio_min",
    "ratio_max",
    "ratio_step",
    "ratios",
    "kind",
    "beta",
    "t_start",
    "t_end",
    "dt",
    "fit_window",
    "etas",
    "gammas",
    "atoms_list",
    "cutoffs",
    "probe_times",
    "observable",
    "search_min",
    "search_max",
    "search_step",
    "search_rel_tol",
    "local_step",
    "local_window",
    "peak_stages",
    "state",
    "sweep",
    "rescale",
    "drift",
    "synthetic",
    "synthetic_k",
    "synthetic_intercept",
    "synthetic_a",
    "synthetic_b",
    "synthetic_c",
    "timing",
    "output",
    "threads",
];

/// Keys that only steer where and how fast a run happens; they are left out
/// of the echoed metadata so outputs do not depend on them.
pub const RUNTIME_KEYS: &[&str] = &["output", "threads"];

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| CliError::config(key, format!("'{value}': {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    let value = value.trim();
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| scalar(key, v)).collect()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::config(key, format!("'{other}' is not a boolean"))),
    }
}

/// `--ratio-min` and `ratio_min` name the same key.
pub fn canonical_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = canonical_key(key);
        let k = key.as_str();
        match k {
            "model" => self.model = scalar(k, value)?,
            "omega0" => self.omega0 = scalar(k, value)?,
            "eta" => self.eta = scalar(k, value)?,
            "n" => self.n = scalar(k, value)?,
            "atoms" => self.atoms = scalar(k, value)?,
            "ratio" => self.ratio = scalar(k, value)?,
            "ratio_min" => self.ratio_min = scalar(k, value)?,
            "ratio_max" => self.ratio_max = scalar(k, value)?,
            "ratio_step" => self.ratio_step = scalar(k, value)?,
            "ratios" => self.ratios = list(k, value)?,
            "kind" => self.kind = list(k, value)?,
            "beta" => self.beta = list(k, value)?,
            "t_start" => self.t_start = scalar(k, value)?,
            "t_end" => self.t_end = scalar(k, value)?,
            "dt" => self.dt = scalar(k, value)?,
            "fit_window" => {
                self.fit_window = match value.trim() {
                    "" | "none" => None,
                    v => match list::<f64>(k, v)?.as_slice() {
                        [a, b] => Some((*a, *b)),
                        _ => return Err(CliError::config(k, "expected 'none' or 't0,t1'")),
                    },
                }
            }
            "etas" => self.etas = list(k, value)?,
            "gammas" => self.gammas = list(k, value)?,
            "atoms_list" => self.atoms_list = list(k, value)?,
            "cutoffs" => self.cutoffs = list(k, value)?,
            "probe_times" => self.probe_times = list(k, value)?,
            "observable" => self.observable = scalar(k, value)?,
            "search_min" => self.search_min = scalar(k, value)?,
            "search_max" => self.search_max = scalar(k, value)?,
            "search_step" => self.search_step = scalar(k, value)?,
            "search_rel_tol" => self.search_rel_tol = scalar(k, value)?,
            "local_step" => self.local_step = scalar(k, value)?,
            "local_window" => self.local_window = scalar(k, value)?,
            "peak_stages" => self.peak_stages = scalar(k, value)?,
            "state" => self.state = scalar(k, value)?,
            "sweep" => self.sweep = scalar(k, value)?,
            "rescale" => self.rescale = flag(k, value)?,
            "drift" => self.drift = flag(k, value)?,
            "synthetic" => self.synthetic = flag(k, value)?,
            "synthetic_k" => self.synthetic_k = scalar(k, value)?,
            "synthetic_intercept" => self.synthetic_intercept = scalar(k, value)?,
            "synthetic_a" => self.synthetic_a = scalar(k, value)?,
            "synthetic_b" => self.synthetic_b = scalar(k, value)?,
            "synthetic_c" => self.synthetic_c = scalar(k, value)?,
            "timing" => self.timing = flag(k, value)?,
            "output" => self.output = PathBuf::from(value.trim()),
            "threads" => self.threads = scalar(k, value)?,
            _ => return Err(CliError::config(k, "unknown key")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "model" => self.model.as_str().to_string(),
            "omega0" => self.omega0.to_string(),
            "eta" => self.eta.to_string(),
            "n" => self.n.to_string(),
            "atoms" => self.atoms.to_string(),
            "ratio" => self.ratio.to_string(),
            "ratio_min" => self.ratio_min.to_string(),
            "ratio_max" => self.ratio_max.to_string(),
            "ratio_step" => self.ratio_step.to_string(),
            "ratios" => join(&self.ratios),
            "kind" => self.kind.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","),
            "beta" => join(&self.beta),
            "t_start" => self.t_start.to_string(),
            "t_end" => self.t_end.to_string(),
            "dt" => self.dt.to_string(),
            "fit_window" => match self.fit_window {
                None => "none".into(),
                Some((a, b)) => format!("{a},{b}"),
            },
            "etas" => join(&self.etas),
            "gammas" => join(&self.gammas),
            "atoms_list" => join(&self.atoms_list),
            "cutoffs" => join(&self.cutoffs),
            "probe_times" => join(&self.probe_times),
            "observable" => self.observable.as_str().into(),
            "search_min" => self.search_min.to_string(),
            "search_max" => self.search_max.to_string(),
            "search_step" => self.search_step.to_string(),
            "search_rel_tol" => self.search_rel_tol.to_string(),
            "local_step" => self.local_step.to_string(),
            "local_window" => self.local_window.to_string(),
            "peak_stages" => self.peak_stages.to_string(),
            "state" => match self.state {
                StateTag::Ground => "ground".into(),
                StateTag::Thermal => "thermal".into(),
            },
            "sweep" => match self.sweep {
                Sweep::Beta => "beta".into(),
                Sweep::Eta => "eta".into(),
            },
            "rescale" => self.rescale.to_string(),
            "drift" => self.drift.to_string(),
            "synthetic" => self.synthetic.to_string(),
            "synthetic_k" => self.synthetic_k.to_string(),
            "synthetic_intercept" => self.synthetic_intercept.to_string(),
            "synthetic_a" => self.synthetic_a.to_string(),
            "synthetic_b" => self.synthetic_b.to_string(),
            "synthetic_c" => self.synthetic_c.to_string(),
            "timing" => self.timing.to_string(),
            "output" => self.output.display().to_string(),
            "threads" => self.threads.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// `(key, value)` pairs echoed into output metadata.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .filter(|k| !RUNTIME_KEYS.contains(k))
            .map(|k| (*k, self.get(k).expect("listed key")))
            .collect()
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(
                    &format!("line {}", i + 1),
                    format!("expected 'key = value', got '{line}'"),
                ));
            };
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Defaults, then the `--config` file, then `--key value` overrides.
    pub fn from_args(args: &[String]) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        let mut file = None;
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(stripped) = arg.strip_prefix("--") else {
                return Err(CliError::config(arg, "expected a --key flag"));
            };
            let (key, value) = match stripped.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::config(&canonical_key(stripped), "missing value"))?;
                    (stripped.to_string(), v.clone())
                }
            };
            if canonical_key(&key) == "config" {
                file = Some(PathBuf::from(value));
            } else {
                pairs.push((key, value));
            }
        }
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply_file(&path)?;
        }
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Threads from the config, else `OTOC_THREADS`, else the machine default.
    pub fn resolved_threads(&self) -> Result<usize, CliError> {
        if self.threads > 0 {
            return Ok(self.threads);
        }
        match std::env::var("OTOC_THREADS") {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse::<usize>()
                .map_err(|e| CliError::config("OTOC_THREADS", format!("'{v}': {e}"))),
            _ => Ok(0),
        }
    }
}
