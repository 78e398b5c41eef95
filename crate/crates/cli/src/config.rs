//! Run configuration: JSON file and command-line overrides resolve into
//! one [`RunConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use trotter_bias::{Problem64, Readout, TransitionRule};

use crate::error::{ExperimentError, Result};

/// Where the problem instance comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelSpec {
    /// The built-in degenerate chain with `N` spins.
    Toy(usize),
    File(PathBuf),
}

impl ModelSpec {
    pub fn load(&self) -> Result<Problem64> {
        match self {
            ModelSpec::Toy(n) => Ok(Problem64::toy_model(*n)?),
            ModelSpec::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ExperimentError::Invalid(format!("reading {}: {e}", path.display())))?;
                Ok(Problem64::from_json_str(&text)?)
            }
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Toy(n) => write!(f, "toy:{n}"),
            ModelSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("toy:") {
            Some(n) => n
                .trim()
                .parse()
                .map(ModelSpec::Toy)
                .map_err(|_| ExperimentError::Invalid(format!("bad toy model size in `{s}`"))),
            None if s.is_empty() => Err(ExperimentError::Invalid("empty model spec".into())),
            None => Ok(ModelSpec::File(PathBuf::from(s))),
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inverse temperature convention.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum BetaMode {
    /// `β = M`, so the Trotter coupling depends only on `s`.
    #[default]
    EqualM,
    Fixed(f64),
}

impl BetaMode {
    pub fn beta_for(&self, trotter_m: usize) -> f64 {
        match *self {
            BetaMode::EqualM => trotter_m as f64,
            BetaMode::Fixed(b) => b,
        }
    }
}

impl fmt::Display for BetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaMode::EqualM => f.write_str("equal-m"),
            BetaMode::Fixed(b) => write!(f, "fixed:{b}"),
        }
    }
}

impl FromStr for BetaMode {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || ExperimentError::Invalid(format!("beta mode `{s}`: expected `equal-m` or `fixed:<value>`"));
        if s == "equal-m" {
            return Ok(BetaMode::EqualM);
        }
        let value = s.strip_prefix("fixed:").unwrap_or(s);
        let beta: f64 = value.parse().map_err(|_| bad())?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(bad());
        }
        Ok(BetaMode::Fixed(beta))
    }
}

impl Serialize for BetaMode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BetaMode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Number(b) => Ok(BetaMode::Fixed(b)),
        }
    }
}

/// A scalar or a list in JSON; always a non-empty list once resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Parses `"2,4,8"`, `"2..8"` (inclusive), `"10..400:10"`, or mixes thereof.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || ExperimentError::Invalid(format!("cannot parse sweep item `{part}`"));
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let step: f64 = step.trim().parse().map_err(|_| bad())?;
            if !(step > 0.0) || hi < lo {
                return Err(bad());
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            out.extend((0..=count).map(|j| lo + step * j as f64));
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(ExperimentError::Invalid(format!("empty sweep `{text}`")));
    }
    Ok(out)
}

/// [`parse_sweep`] restricted to non-negative integers.
pub fn parse_int_sweep(text: &str) -> Result<Vec<usize>> {
    parse_sweep(text)?
        .into_iter()
        .map(|x| {
            let r = x.round();
            if (x - r).abs() < 1e-9 && r >= 0.0 {
                Ok(r as usize)
            } else {
                Err(ExperimentError::Invalid(format!("`{x}` in `{text}` is not a non-negative integer")))
            }
        })
        .collect()
}

fn default_model() -> ModelSpec {
    ModelSpec::Toy(2)
}
fn default_m() -> OneOrMany<usize> {
    OneOrMany::One(6)
}
fn default_tau() -> OneOrMany<f64> {
    OneOrMany::One(100.0)
}
fn default_dt() -> f64 {
    trotter_bias::schedule::DEFAULT_DT
}
fn default_tau_sd() -> f64 {
    100.0
}
fn default_dt_sd() -> f64 {
    trotter_bias::schrodinger::DEFAULT_DT_SD
}
fn default_record_every() -> usize {
    20
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_checkpoints() -> Vec<f64> {
    vec![0.1, 0.4, 0.7, 1.0]
}
fn always_true() -> bool {
    true
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default = "default_m")]
    pub trotter_m: OneOrMany<usize>,
    #[serde(default = "default_tau")]
    pub tau: OneOrMany<f64>,
    #[serde(default = "default_rule")]
    pub rule: TransitionRule,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub beta_mode: BetaMode,
    #[serde(default = "default_tau_sd")]
    pub tau_sd_reference: f64,
    #[serde(default = "default_dt_sd")]
    pub dt_sd: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub readout: Readout,
    #[serde(default = "default_checkpoints")]
    pub s_checkpoints: Vec<f64>,
    /// Exact propagation uses no random numbers; kept for provenance.
    #[serde(default = "always_true")]
    pub seedless: bool,
}

fn default_rule() -> TransitionRule {
    TransitionRule::Metropolis
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Invalid(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.trotter_m.to_vec()
    }

    pub fn tau_values(&self) -> Vec<f64> {
        self.tau.to_vec()
    }

    pub fn schedule(&self, tau: f64, trotter_m: usize) -> trotter_bias::Schedule64 {
        trotter_bias::Schedule64::new(tau, trotter_m).with_beta(self.beta_mode.beta_for(trotter_m)).with_dt(self.dt)
    }

    /// Checks every scalar constraint, at every sweep point, for `n_spins`.
    pub fn validate(&self, n_spins: usize) -> Result<()> {
        let ms = self.m_values();
        let taus = self.tau_values();
        if ms.is_empty() || taus.is_empty() {
            return Err(ExperimentError::Invalid("sweep lists must be non-empty".into()));
        }
        if !self.seedless {
            return Err(ExperimentError::Invalid("runs are exact and seedless; `seedless` must be true".into()));
        }
        for &m in &ms {
            if n_spins * m > trotter_bias::qmc::MAX_REPLICA_BITS {
                return Err(ExperimentError::Invalid(format!(
                    "N*M = {} exceeds the 2^{} state-space guard",
                    n_spins * m,
                    trotter_bias::qmc::MAX_REPLICA_BITS
                )));
            }
            for &tau in &taus {
                self.schedule(tau, m)
                    .validate(n_spins)
                    .map_err(|e| ExperimentError::Invalid(format!("sweep point tau={tau}, M={m}: {e}")))?;
            }
        }
        if !(self.tau_sd_reference > 0.0) || !(self.dt_sd > 0.0) {
            return Err(ExperimentError::Invalid("tau_sd_reference and dt_sd must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(ExperimentError::Invalid("record_every must be at least 1".into()));
        }
        if let Some(s) = self.s_checkpoints.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(ExperimentError::Invalid(format!("s checkpoint {s} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_int_sweep("2,4,8").unwrap(), vec![2, 4, 8]);
        assert_eq!(parse_int_sweep("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_sweep("10..40:10, 100").unwrap(), vec![10.0, 20.0, 30.0, 40.0, 100.0]);
        assert!(parse_int_sweep("5..2").is_err());
        assert!(parse_sweep("").is_err());
        assert!(parse_int_sweep("1.5").is_err());
    }

    #[test]
    fn model_and_beta_specs() {
        assert_eq!("toy:3".parse::<ModelSpec>().unwrap(), ModelSpec::Toy(3));
        assert_eq!("p.json".parse::<ModelSpec>().unwrap(), ModelSpec::File("p.json".into()));
        assert!("toy:x".parse::<ModelSpec>().is_err());
        assert_eq!("equal-m".parse::<BetaMode>().unwrap(), BetaMode::EqualM);
        assert_eq!("fixed:4".parse::<BetaMode>().unwrap(), BetaMode::Fixed(4.0));
        assert_eq!("2.5".parse::<BetaMode>().unwrap(), BetaMode::Fixed(2.5));
        assert!("fixed:-1".parse::<BetaMode>().is_err());
    }

    #[test]
    fn json_config_accepts_scalars_and_lists() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"model": "toy:2", "trotter_m": [2, 8], "tau": 50, "rule": "heatbath", "beta_mode": "fixed:3"}"#,
        )
        .unwrap();
        assert_eq!(cfg.m_values(), vec![2, 8]);
        assert_eq!(cfg.tau_values(), vec![50.0]);
        assert_eq!(cfg.rule, TransitionRule::HeatBath);
        assert_eq!(cfg.beta_mode, BetaMode::Fixed(3.0));
        assert_eq!(cfg.dt, 0.05);
        let again: RunConfig = serde_json::from_str(&cfg.to_compact_json()).unwrap();
        assert_eq!(again, cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation_rejects_bad_sweep_points() {
        let mut cfg = RunConfig { trotter_m: OneOrMany::Many(vec![2, 11]), ..RunConfig::default() };
        assert!(cfg.validate(2).is_err());
        cfg.trotter_m = OneOrMany::Many(vec![2, 8]);
        assert!(cfg.validate(2).is_ok());
        cfg.tau = OneOrMany::Many(vec![100.0, 1.03]);
        assert!(cfg.validate(2).is_err());
        cfg.tau = OneOrMany::Many(vec![]);
        assert!(cfg.validate(2).is_err());
    }
}
