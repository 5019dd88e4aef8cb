//! Plain-text experiment files: one `key=value` per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use gammalab::kernels::Kernel;
use gammalab::ShapeSpec;

const KEYS: &[&str] = &[
    "kernel",
    "dim",
    "gamma",
    "shape",
    "grid",
    "method",
    "epsilons",
    "epsilon",
    "seed",
    "out",
    "theta",
    "steps",
    "t0",
    "decay",
    "record_every",
    "swap_distance",
    "bins",
    "r_max",
    "degree",
    "window",
];

/// Coupling, either absolute or a multiple of the kernel's critical value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Value(f64),
    CritMultiple(f64),
}

impl GammaSpec {
    pub fn resolve(&self, gamma_crit: f64) -> f64 {
        match *self {
            GammaSpec::Value(g) => g,
            GammaSpec::CritMultiple(m) => m * gamma_crit,
        }
    }
}

impl fmt::Display for GammaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSpec::Value(g) => write!(f, "{g}"),
            GammaSpec::CritMultiple(m) if *m == 1.0 => write!(f, "crit"),
            GammaSpec::CritMultiple(m) => write!(f, "{m}crit"),
        }
    }
}

impl FromStr for GammaSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let value = |t: &str| -> Result<f64> {
            let v: f64 = t.parse().map_err(|_| anyhow!("gamma: cannot parse '{s}'"))?;
            if !(v >= 0.0 && v.is_finite()) {
                bail!("gamma must be finite and non-negative, got '{s}'");
            }
            Ok(v)
        };
        match s.strip_suffix("crit") {
            Some("") => Ok(GammaSpec::CritMultiple(1.0)),
            Some(m) => Ok(GammaSpec::CritMultiple(value(m.trim_end_matches('*'))?)),
            None => Ok(GammaSpec::Value(value(s)?)),
        }
    }
}

/// Raw key/value pairs of an experiment file, kept sorted by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value, got '{line}'", i + 1))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key '{k}'", i + 1);
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{k}'", i + 1);
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| anyhow!("missing required key '{key}'"))
    }

    fn number<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key).map(|v| v.parse::<T>().map_err(|_| anyhow!("{key}: cannot parse '{v}'"))).transpose()
    }

    pub fn dim(&self) -> Result<usize> {
        if let Some(d) = self.number::<usize>("dim")? {
            return Ok(d);
        }
        Ok(match self.shape()? {
            Some(s) => s.dim().unwrap_or(2),
            None => 2,
        })
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let spec = self.get("kernel").unwrap_or("helmholtz");
        Ok(Kernel::parse(spec, self.dim()?)?)
    }

    pub fn gamma(&self) -> Result<GammaSpec> {
        self.require("gamma")?.parse()
    }

    pub fn shape(&self) -> Result<Option<ShapeSpec>> {
        self.get("shape").map(|s| s.parse::<ShapeSpec>().map_err(Into::into)).transpose()
    }

    pub fn required_shape(&self) -> Result<ShapeSpec> {
        self.shape()?.ok_or_else(|| anyhow!("missing required key 'shape'"))
    }

    pub fn grid(&self) -> Result<Option<usize>> {
        self.number("grid")
    }

    /// Comma- or space-separated list.
    pub fn epsilons(&self) -> Result<Vec<f64>> {
        let raw = self.require("epsilons")?;
        raw.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| anyhow!("epsilons: cannot parse '{t}'")))
            .collect()
    }

    pub fn epsilon(&self) -> Result<f64> {
        self.number("epsilon")?.ok_or_else(|| anyhow!("missing required key 'epsilon'"))
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.number("seed")?.unwrap_or(0))
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    /// Pairs echoed as `# key=value` headers, in key order.
    pub fn manifest(&self) -> Vec<(String, String)> {
        self.entries.iter().filter(|(k, _)| k.as_str() != "out").map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let c = ExperimentConfig::parse(
            "# square sweep\nkernel = helmholtz\nshape=box lo=(0.25,0.25) hi=(0.75,0.75)  # unit square half\ngamma=0.5\nepsilons=0.2, 0.1,0.05\n",
        )
        .unwrap();
        assert_eq!(c.epsilons().unwrap(), vec![0.2, 0.1, 0.05]);
        assert_eq!(c.dim().unwrap(), 2);
        assert_eq!(c.gamma().unwrap(), GammaSpec::Value(0.5));
        assert!(c.required_shape().is_ok());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(ExperimentConfig::parse("colour=blue").is_err());
        assert!(ExperimentConfig::parse("gamma=1\ngamma=2").is_err());
        assert!(ExperimentConfig::parse("gamma").is_err());
    }

    #[test]
    fn gamma_multiples() {
        assert_eq!("crit".parse::<GammaSpec>().unwrap(), GammaSpec::CritMultiple(1.0));
        assert_eq!("0.5crit".parse::<GammaSpec>().unwrap(), GammaSpec::CritMultiple(0.5));
        assert_eq!("1.5crit".parse::<GammaSpec>().unwrap().resolve(2.0), 3.0);
        assert!("-1".parse::<GammaSpec>().is_err());
        assert!("halfcrit".parse::<GammaSpec>().is_err());
        assert_eq!(GammaSpec::CritMultiple(0.5).to_string(), "0.5crit");
    }

    #[test]
    fn missing_epsilons_is_an_error() {
        let c = ExperimentConfig::parse("gamma=0.5").unwrap();
        assert!(c.epsilons().unwrap_err().to_string().contains("epsilons"));
    }
}
