//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use subwave::ChainParams;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub chain: Option<RawChain>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub midgap: MidgapSection,
    pub sweep: Option<SweepSection>,
    pub stability: Option<StabilitySection>,
    pub modes: Option<ModesSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChain {
    pub preset: Option<String>,
    #[serde(rename = "L")]
    pub cell: Option<f64>,
    pub l: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub cap_b: Option<f64>,
    pub vol1: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MidgapSection {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub exclusion: Option<f64>,
}

impl Default for MidgapSection {
    fn default() -> Self {
        MidgapSection {
            n_max: default_n_max(),
            exclusion: None,
        }
    }
}

fn default_n_max() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub d_grid: Option<Vec<f64>>,
    pub d_range: Option<DRange>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: f64,
    pub sigmas: Option<Vec<f64>>,
    pub trials: usize,
    pub scan_d: Option<Vec<f64>>,
    pub scan_sigma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: f64,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    2001
}

/// A parsed file plus its text, kept for locating keys in error messages.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub params: ChainParams,
    text: String,
    path: PathBuf,
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map(|i| i + 1)
}

struct Locator<'a> {
    text: &'a str,
    path: &'a Path,
}

impl Locator<'_> {
    fn error(&self, field: &str, msg: impl std::fmt::Display) -> CliError {
        let key = field.rsplit('.').next().unwrap_or(field);
        let file = self.path.display();
        match line_of(self.text, key) {
            Some(n) => CliError::Config(format!("{file}:{n}: `{field}`: {msg}")),
            None => CliError::Config(format!("{file}: `{field}`: {msg}")),
        }
    }
}

fn chain_params(raw: &RawConfig, loc: &Locator) -> Result<ChainParams, CliError> {
    let c = raw
        .chain
        .as_ref()
        .ok_or_else(|| loc.error("chain", "missing required section"))?;
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| loc.error(&format!("chain.{name}"), "missing required field"))
    };
    let cell = need(c.cell, "L")?;
    let sep = need(c.l, "l")?;
    let eps = need(c.eps, "eps")?;
    let delta = need(c.delta, "delta")?;
    let params = match c.preset.as_deref() {
        Some("unit-sphere") => {
            if c.cap_b.is_some() || c.vol1.is_some() {
                return Err(loc.error(
                    "chain.preset",
                    "`cap_b` and `vol1` are fixed by the unit-sphere preset",
                ));
            }
            ChainParams::unit_sphere(cell, sep, eps, delta)
        }
        Some(other) => {
            return Err(loc.error(
                "chain.preset",
                format!("unknown preset `{other}` (expected `unit-sphere`)"),
            ))
        }
        None => {
            let cap_b = need(c.cap_b, "cap_b")?;
            let vol1 = need(c.vol1, "vol1")?;
            ChainParams::new(cell, sep, eps, delta, cap_b, vol1)
        }
    };
    params.map_err(|e| match e {
        subwave::Error::InvalidParameter { name, reason } => {
            loc.error(&format!("chain.{name}"), reason)
        }
        other => loc.error("chain", other),
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let params = chain_params(&raw, &Locator { text, path })?;
        let cfg = ExperimentConfig {
            raw,
            params,
            text: text.to_string(),
            path: path.to_path_buf(),
        };
        cfg.validate_sections()?;
        Ok(cfg)
    }

    /// Error naming `field` and, when the key is present, its line.
    pub fn field_error(&self, field: &str, msg: impl std::fmt::Display) -> CliError {
        Locator {
            text: &self.text,
            path: &self.path,
        }
        .error(field, msg)
    }

    fn validate_sections(&self) -> Result<(), CliError> {
        let r = &self.raw;
        if let Some(g) = r.grid {
            if g < 2 {
                return Err(self.field_error("grid", "must be at least 2"));
            }
        }
        if let Some(0) = r.threads {
            return Err(self.field_error("threads", "must be at least 1"));
        }
        if r.midgap.n_max == 0 {
            return Err(self.field_error("midgap.n_max", "must be at least 1"));
        }
        if let Some(x) = r.midgap.exclusion {
            if !(x > 0.0 && x < 0.5) {
                return Err(self.field_error("midgap.exclusion", "must lie in (0, 0.5)"));
            }
        }
        if let Some(s) = &r.sweep {
            if s.d_grid.is_some() == s.d_range.is_some() {
                return Err(self.field_error("sweep", "give exactly one of `d_grid` and `d_range`"));
            }
            if let Some(g) = &s.d_range {
                if g.count < 1 || !(g.start >= 0.0 && g.stop >= g.start) {
                    return Err(
                        self.field_error("sweep.d_range", "need 0 <= start <= stop and count >= 1")
                    );
                }
            }
            if let Some(g) = &s.d_grid {
                check_grid(self, "sweep.d_grid", g)?;
            }
        }
        if let Some(s) = &r.stability {
            if s.trials < 2 {
                return Err(self.field_error("stability.trials", "need at least 2 trials"));
            }
            if !(s.d.is_finite() && s.d >= 0.0) {
                return Err(self.field_error("stability.d", "must be finite and >= 0"));
            }
            if let Some(sig) = &s.sigmas {
                if sig.is_empty() || sig.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(self
                        .field_error("stability.sigmas", "need a non-empty list of values >= 0"));
                }
            }
            if let Some(g) = &s.scan_d {
                check_grid(self, "stability.scan_d", g)?;
            }
            if let Some(x) = s.scan_sigma {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(self.field_error("stability.scan_sigma", "must be >= 0"));
                }
            }
        }
        if let Some(m) = &r.modes {
            if !(m.d.is_finite() && m.d >= 0.0) {
                return Err(self.field_error("modes.d", "must be finite and >= 0"));
            }
            if m.points < 2 {
                return Err(self.field_error("modes.points", "must be at least 2"));
            }
            if let (Some(a), Some(b)) = (m.x_min, m.x_max) {
                if !(a < b) {
                    return Err(self.field_error("modes.x_max", "must exceed `x_min`"));
                }
            }
        }
        Ok(())
    }
}

fn check_grid(cfg: &ExperimentConfig, field: &str, g: &[f64]) -> Result<(), CliError> {
    if g.is_empty() || g.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(cfg.field_error(field, "need a non-empty list of values >= 0"));
    }
    if g.windows(2).any(|w| w[0] > w[1]) {
        return Err(cfg.field_error(field, "must be sorted ascending"));
    }
    Ok(())
}

impl DRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}
