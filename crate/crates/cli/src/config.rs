//! Config file loading and flag resolution.
//!
//! Precedence is flags, then the `--config` file, then defaults. The file
//! holds `key = value` lines keyed by long flag names; `#` starts a
//! comment line. `BITPACT_SEED` is consulted when neither source sets a
//! seed.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bitpact::randomness::parse_seed;
use bitpact::{BitString, Mode, ProtocolParams};
use clap::ValueEnum;

use crate::opts::{CommonOpts, SessionOpts};
use crate::{usage, CliError};

pub const SEED_ENV: &str = "BITPACT_SEED";
pub const DEFAULT_N: usize = 1000;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_L: usize = 2;
pub const DEFAULT_TRIALS: usize = 11;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 5.0;
/// Default horizon in units of `n`.
pub const DEFAULT_STEPS_PER_N: u64 = 5;

const KNOWN_KEYS: &[&str] = &[
    "seed", "output", "n", "k", "l", "x0", "init-a", "init-b", "steps", "threshold", "mode", "trials", "dt", "t-end",
    "ks", "ls", "x0s", "targets", "hs", "function", "basis",
];

/// Parsed `key = value` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key=value", no + 1)))?;
            let key = key.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(usage(format!("config line {}: unknown key {key:?}", no + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Flags plus the config file they point at.
#[derive(Debug, Clone)]
pub struct Resolver {
    common: CommonOpts,
    file: ConfigFile,
}

impl Resolver {
    pub fn new(common: &CommonOpts) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Self {
            common: common.clone(),
            file,
        })
    }

    /// The flag if given, else the config value.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .raw(key)
            .map(|s| s.parse::<T>().map_err(|e| usage(format!("config {key}: {e}"))))
            .transpose()
    }

    pub fn pick_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .raw(key)
            .map(|s| T::from_str(s, true).map_err(|e| usage(format!("config {key}: {e}"))))
            .transpose()
    }

    pub fn pick_list<T>(&self, flag: Option<Vec<T>>, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .raw(key)
            .map(|s| {
                s.split(',')
                    .map(|v| v.trim().parse::<T>().map_err(|e| usage(format!("config {key}: {e}"))))
                    .collect()
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        let text = match self.pick(self.common.seed.clone(), "seed")? {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(s) => s,
                Err(_) => return Ok(0),
            },
        };
        parse_seed(&text).map_err(|e| usage(format!("seed {text:?}: {e}")))
    }

    pub fn output(&self) -> Result<Option<PathBuf>, CliError> {
        self.pick(self.common.output.clone(), "output")
    }
}

/// Where a session starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// Random pair with this many agreements.
    Agreements(usize),
    Strings(BitString, BitString),
}

impl Start {
    pub fn agreement_count(&self) -> usize {
        match self {
            Start::Agreements(x) => *x,
            Start::Strings(a, b) => a.agreement_count(b).expect("lengths checked on construction"),
        }
    }
}

/// Fully resolved session flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub params: ProtocolParams,
    pub start: Start,
}

pub fn check_density(name: &str, x: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(usage(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

fn parse_bits(name: &str, s: &str) -> Result<BitString, CliError> {
    s.parse::<BitString>().map_err(|e| usage(format!("{name}: {e}")))
}

/// Both strings or neither.
pub fn string_pair(
    r: &Resolver,
    a: Option<String>,
    b: Option<String>,
) -> Result<Option<(BitString, BitString)>, CliError> {
    match (r.pick(a, "init-a")?, r.pick(b, "init-b")?) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) => {
            let (a, b) = (parse_bits("--init-a", &a)?, parse_bits("--init-b", &b)?);
            if a.len() != b.len() {
                return Err(usage(format!(
                    "--init-a and --init-b differ in length ({} vs {})",
                    a.len(),
                    b.len()
                )));
            }
            Ok(Some((a, b)))
        }
        _ => Err(usage("--init-a and --init-b must be given together")),
    }
}

pub fn resolve_session(opts: &SessionOpts, r: &Resolver) -> Result<SessionConfig, CliError> {
    let x0 = r.pick(opts.x0, "x0")?;
    let strings = string_pair(r, opts.init_a.clone(), opts.init_b.clone())?;
    let n_flag = r.pick(opts.n, "n")?;
    let (n, start) = match (x0, strings) {
        (Some(_), Some(_)) => return Err(usage("give either --x0 or --init-a/--init-b, not both")),
        (None, None) => return Err(usage("one of --x0 or --init-a/--init-b is required")),
        (Some(x0), None) => {
            check_density("--x0", x0)?;
            let n = n_flag.unwrap_or(DEFAULT_N);
            (n, Start::Agreements((x0 * n as f64).round() as usize))
        }
        (None, Some((a, b))) => {
            let n = a.len();
            if n_flag.is_some_and(|m| m != n) {
                return Err(usage(format!("--n {} does not match the initial strings of length {n}", n_flag.unwrap())));
            }
            (n, Start::Strings(a, b))
        }
    };
    let k = r.pick(opts.k, "k")?.unwrap_or(DEFAULT_K);
    let l = r.pick(opts.l, "l")?.unwrap_or(DEFAULT_L);
    let steps = r.pick(opts.steps, "steps")?.unwrap_or(DEFAULT_STEPS_PER_N * n as u64);
    let mode = r.pick::<Mode>(opts.mode, "mode")?.unwrap_or_default();
    let mut params = ProtocolParams::new(n, k, l, steps, r.seed()?).with_mode(mode);
    if let Some(t) = r.pick(opts.threshold, "threshold")? {
        params = params.with_threshold(t);
    }
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(SessionConfig { params, start })
}
