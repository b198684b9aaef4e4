//! Run configuration: a JSON object or `key = value` lines, with later
//! sources (command-line flags) overriding earlier ones.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::potential::Variant;
use crate::testsets::BodyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Komlos,
    Testset,
    Banaszczyk,
    Tusnady,
    Multicolor,
}

impl Setting {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "komlos" => Ok(Self::Komlos),
            "testset" => Ok(Self::Testset),
            "banaszczyk" => Ok(Self::Banaszczyk),
            "tusnady" => Ok(Self::Tusnady),
            "multicolor" => Ok(Self::Multicolor),
            other => Err(Error::Config(format!("unknown setting `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Komlos => "komlos",
            Self::Testset => "testset",
            Self::Banaszczyk => "banaszczyk",
            Self::Tusnady => "tusnady",
            Self::Multicolor => "multicolor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Potential,
    Random,
    L2greedy,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "potential" => Ok(Self::Potential),
            "random" => Ok(Self::Random),
            "l2greedy" | "l2-greedy" => Ok(Self::L2greedy),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Potential => "potential",
            Self::Random => "random",
            Self::L2greedy => "l2greedy",
        }
    }
}

/// Seeds of the independent streams; all default to the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub input: u64,
    pub pool: u64,
    pub algorithm: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub setting: Setting,
    /// Vector dimension (unused by `tusnady`).
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Point dimension for `tusnady`.
    pub d: usize,
    /// Color weights for `multicolor`.
    pub weights: Vec<f64>,
    pub eta: Option<f64>,
    pub dist: String,
    pub seed: u64,
    pub seeds: Seeds,
    pub algorithm: Algorithm,
    pub variant: Variant,
    pub lambda: Option<f64>,
    pub kappa: Option<usize>,
    pub beta: Option<f64>,
    /// Frozen input draws standing in for the input distribution.
    pub pool: usize,
    /// Number of random test directions for `testset`.
    pub tests: usize,
    pub body: BodyKind,
    pub cloud: Option<usize>,
    /// Dyadic-generated boxes tracked by `tusnady`.
    pub budget: usize,
    pub checkpoint_ratio: f64,
    pub out: Option<PathBuf>,
    pub net_cache: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "setting", "n", "T", "d", "R", "weights", "eta", "dist", "seed", "input_seed", "pool_seed",
    "algorithm_seed", "algorithm", "variant", "lambda", "kappa", "beta", "pool", "tests", "body",
    "cloud", "budget", "checkpoint_ratio", "out", "net_cache",
];

/// Raw key/value pairs before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(Map<String, Value>);

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// JSON object if the text starts with `{`, otherwise `key = value`
    /// lines with `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            return match serde_json::from_str::<Value>(trimmed)? {
                Value::Object(m) => Ok(Self(m)),
                _ => Err(Error::Config("config JSON must be an object".into())),
            };
        }
        let mut map = Self::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            map.set(k.trim(), v.trim());
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets `key` from a string, reading numbers as numbers.
    pub fn set(&mut self, key: &str, value: &str) {
        let v = if let Ok(i) = value.parse::<u64>() {
            Value::from(i)
        } else if let Ok(f) = value.parse::<f64>() {
            Value::from(f)
        } else {
            Value::from(value)
        };
        self.0.insert(key.to_string(), v);
    }

    pub fn set_value(&mut self, key: &str, value: Value) {
        self.0.insert(key.to_string(), value);
    }

    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(other) => Err(Error::Config(format!("`{key}` must be a string, got {other}"))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => {
                if let Some(u) = n.as_u64() {
                    return Ok(Some(u));
                }
                match n.as_f64() {
                    Some(f) if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(63) => Ok(Some(f as u64)),
                    _ => Err(Error::Config(format!("`{key}` must be a non-negative integer, got {n}"))),
                }
            }
            Some(Value::String(s)) => s
                .parse::<f64>()
                .ok()
                .filter(|f| *f >= 0.0 && f.fract() == 0.0)
                .map(|f| Some(f as u64))
                .ok_or_else(|| Error::Config(format!("`{key}` must be a non-negative integer, got `{s}`"))),
            Some(other) => Err(Error::Config(format!("`{key}` must be an integer, got {other}"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("`{key}` must be a number, got `{s}`"))),
            Some(other) => Err(Error::Config(format!("`{key}` must be a number, got {other}"))),
        }
    }

    fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Error::Config(format!("`{key}` must hold numbers"))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(Value::Number(n)) => Ok(n.as_f64().map(|f| vec![f])),
            Some(Value::String(s)) => s
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number `{c}` in `{key}`"))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => Err(Error::Config(format!("`{key}` must be a list of numbers, got {other}"))),
        }
    }

    fn require_uint(&self, key: &str) -> Result<u64> {
        self.uint(key)?.ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    /// Validates the map into a [`RunConfig`].
    pub fn to_config(&self) -> Result<RunConfig> {
        if let Some(k) = self.0.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let setting =
            Setting::parse(&self.string("setting")?.ok_or_else(|| Error::MissingKey("setting".into()))?)?;
        let horizon = self.require_uint("T")? as usize;
        if horizon == 0 {
            return Err(Error::Config("`T` must be positive".into()));
        }
        let (n, d) = match setting {
            Setting::Tusnady => (0, self.require_uint("d")? as usize),
            _ => (self.require_uint("n")? as usize, 0),
        };
        if setting != Setting::Tusnady && n == 0 {
            return Err(Error::Config("`n` must be positive".into()));
        }
        let weights = match setting {
            Setting::Multicolor => match (self.reals("weights")?, self.uint("R")?) {
                (Some(w), _) => w,
                (None, Some(r)) => vec![1.0; r as usize],
                (None, None) => return Err(Error::MissingKey("weights".into())),
            },
            _ => Vec::new(),
        };
        let dist = match self.string("dist")? {
            Some(s) => s,
            None if setting == Setting::Tusnady => "uniform".into(),
            None => return Err(Error::MissingKey("dist".into())),
        };
        let seed = self.uint("seed")?.unwrap_or(0);
        let seeds = Seeds {
            input: self.uint("input_seed")?.unwrap_or(seed),
            pool: self.uint("pool_seed")?.unwrap_or(seed),
            algorithm: self.uint("algorithm_seed")?.unwrap_or(seed),
        };
        let algorithm = match self.string("algorithm")? {
            Some(s) => Algorithm::parse(&s)?,
            None => Algorithm::Potential,
        };
        let variant = match self.string("variant")?.as_deref() {
            None if setting == Setting::Banaszczyk => Variant::Exp,
            None | Some("cosh") => Variant::Cosh,
            Some("exp") => Variant::Exp,
            Some(other) => return Err(Error::Config(format!("unknown variant `{other}`"))),
        };
        let body = match self.string("body")? {
            Some(s) => BodyKind::parse(&s).map_err(|e| Error::Config(e.to_string()))?,
            None => BodyKind::EuclideanBall,
        };
        let checkpoint_ratio = self.real("checkpoint_ratio")?.unwrap_or(1.25);
        if !(checkpoint_ratio > 1.0) {
            return Err(Error::Config("`checkpoint_ratio` must exceed 1".into()));
        }
        Ok(RunConfig {
            setting,
            n,
            horizon,
            d,
            weights,
            eta: self.real("eta")?,
            dist,
            seed,
            seeds,
            algorithm,
            variant,
            lambda: self.real("lambda")?,
            kappa: self.uint("kappa")?.map(|k| k as usize),
            beta: self.real("beta")?,
            pool: self.uint("pool")?.unwrap_or(256) as usize,
            tests: self.uint("tests")?.map(|t| t as usize).unwrap_or(2 * n.max(1)),
            body,
            cloud: self.uint("cloud")?.map(|c| c as usize),
            budget: self.uint("budget")?.unwrap_or(2048) as usize,
            checkpoint_ratio,
            out: self.string("out")?.map(PathBuf::from),
            net_cache: self.string("net_cache")?.map(PathBuf::from),
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        ConfigMap::parse(text)?.to_config()
    }

    pub fn load(path: &Path) -> Result<Self> {
        ConfigMap::load(path)?.to_config()
    }
}
