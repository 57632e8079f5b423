//! Experiment configurations and their `key = value` text form.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use revheat::profile::{Profile, ProfileSpec};
use revheat::spectral::DEFAULT_BOOTSTRAP_SEED;
use serde::{Deserialize, Serialize};

/// A configuration that cannot be run as written.
#[derive(Debug, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct InvalidConfig(pub String);

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidConfig(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Profile,
    Phi,
    Geodesic,
    Cutlocus,
    Degeneracy,
    Heat,
    S2Exact,
    VerifyAll,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Profile,
        Command::Phi,
        Command::Geodesic,
        Command::Cutlocus,
        Command::Degeneracy,
        Command::Heat,
        Command::S2Exact,
        Command::VerifyAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Phi => "phi",
            Command::Geodesic => "geodesic",
            Command::Cutlocus => "cutlocus",
            Command::Degeneracy => "degeneracy",
            Command::Heat => "heat",
            Command::S2Exact => "s2-exact",
            Command::VerifyAll => "verify-all",
        }
    }

    /// Parameter keys the command accepts.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Profile => &[],
            Command::Phi => &["nu", "order"],
            Command::Geodesic => &["eta", "t_end"],
            Command::Cutlocus => &["nu_grid", "order"],
            Command::Degeneracy => &["what", "window", "samples", "direction", "theta"],
            Command::Heat => &["x", "y", "t_grid", "n_max", "k_max", "grid"],
            Command::S2Exact => &["t_grid"],
            Command::VerifyAll => &["n_max", "k_max", "grid"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if s == "phi-expansion" {
            return Ok(Command::Phi);
        }
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid(format!("unknown command {s:?}")))
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// `ellipsoid:B,C`, `sphere[:R]` or a JSON profile document.
    pub profile: String,
    pub seed: u64,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// Command parameters, kept verbatim.
    pub params: BTreeMap<String, String>,
}

pub const DEFAULT_PROFILE: &str = "ellipsoid:2,1";

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            profile: DEFAULT_PROFILE.into(),
            seed: DEFAULT_BOOTSTRAP_SEED,
            json: None,
            csv: None,
            svg: None,
            params: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.into(), value.to_string());
    }

    pub fn profile_spec(&self) -> anyhow::Result<ProfileSpec> {
        let text = self.profile.trim();
        let spec = if text.starts_with('{') {
            ProfileSpec::from_json(text)
        } else {
            text.parse()
        };
        spec.map_err(|e| invalid(e.to_string()))
    }

    pub fn build_profile(&self) -> anyhow::Result<Profile> {
        self.profile_spec()?
            .build()
            .map_err(|e| invalid(e.to_string()))
    }

    /// Rejects parameters the command does not know.
    pub fn validate(&self) -> anyhow::Result<()> {
        let allowed = self.command.keys();
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(invalid(format!(
                    "{key:?} is not a parameter of {}; expected one of {allowed:?}",
                    self.command
                )));
            }
        }
        self.profile_spec().map(|_| ())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|e| invalid(format!("{key} = {v:?}: {e}")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> anyhow::Result<T>
    where
        T::Err: fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| invalid(format!("{} needs {key}", self.command)))
    }

    /// Parses the `key = value` text form. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> anyhow::Result<Self> {
        let mut command = None;
        let mut cfg = ExperimentConfig::new(Command::Profile);
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "command" => command = Some(value.parse::<Command>()?),
                "profile" => cfg.profile = value.into(),
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|e| invalid(format!("line {}: seed: {e}", no + 1)))?
                }
                "json" => cfg.json = Some(value.into()),
                "csv" => cfg.csv = Some(value.into()),
                "svg" => cfg.svg = Some(value.into()),
                _ => {
                    if cfg.params.insert(key.into(), value.into()).is_some() {
                        return Err(invalid(format!("line {}: duplicate key {key}", no + 1)));
                    }
                }
            }
        }
        cfg.command = command.ok_or_else(|| invalid("missing command"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The text form read by [`ExperimentConfig::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "command = {}\nprofile = {}\nseed = {}\n",
            self.command, self.profile, self.seed
        );
        for (key, path) in [("json", &self.json), ("csv", &self.csv), ("svg", &self.svg)] {
            if let Some(path) = path {
                out.push_str(&format!("{key} = {}\n", path.display()));
            }
        }
        for (key, value) in &self.params {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }
}

/// Parses `lo:hi:n`.
pub fn parse_grid(text: &str) -> anyhow::Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(invalid(format!("{text:?}: expected lo:hi:n")));
    };
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| invalid(format!("{text:?}: {e}")))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    let n: usize = n.parse().map_err(|e| invalid(format!("{text:?}: {e}")))?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(invalid(format!("{text:?}: need 0 < lo < hi and n >= 2")));
    }
    Ok((lo, hi, n))
}

/// Parses `lo,hi`.
pub fn parse_window(text: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| invalid(format!("{text:?}: expected lo,hi")))?;
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| invalid(format!("{text:?}: {e}")))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("{text:?}: need 0 < lo < hi")));
    }
    Ok((lo, hi))
}

/// Parses a point `r,theta`, where `r` may be `a` for the equator.
pub fn parse_point(text: &str, a: f64) -> anyhow::Result<(f64, f64)> {
    let (r, theta) = text
        .split_once(',')
        .ok_or_else(|| invalid(format!("{text:?}: expected r,theta")))?;
    let r = match r.trim() {
        "a" => a,
        other => other
            .parse::<f64>()
            .map_err(|e| invalid(format!("{text:?}: {e}")))?,
    };
    let theta = theta
        .trim()
        .parse::<f64>()
        .map_err(|e| invalid(format!("{text:?}: {e}")))?;
    if !(r > 0.0 && r < 2.0 * a) {
        return Err(invalid(format!("{text:?}: r must lie in (0, {})", 2.0 * a)));
    }
    Ok((r, theta))
}
