//! Experiment configuration: one TOML file, every key optional.
//!
//! ```toml
//! seed = 20240601
//! functions = ["x", "z_gauss"]      # default: the standard suite
//!
//! [paths]                           # Brownian paths on [0, 1]
//! n_paths = 100000
//! grid = 64                         # cells K
//! substeps = 16                     # fine steps per cell
//!
//! [lsi]
//! betas = [0.0, 1.0]
//! quadrature_nodes = 16             # midpoint nodes in t
//! nus = [0.5, 1.0, 2.0]
//! c_lsi = 4.0
//! corollary_c = 1.7                 # default: fitted from [bridge]
//! finite_ns = [1, 2, 4, 8]
//! finite_n_samples = 100000
//!
//! [clt]
//! ns = [16, 256, 4096]
//! betas = [0.0, 1.0]
//! n_walks = 100000
//! area_substeps = [16, 64, 256]
//! area_paths = 1000000
//!
//! [bridge]
//! n_paths = 200000
//! cells = 10
//! substeps = 100
//! ts = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
//! radii = [0.0, 0.5, 1.0, 1.5, 2.0]
//! heights = [0.0, 0.25, 0.5, 1.0]
//! k = 60                            # default: max(30, n^0.6 / 10)
//!
//! [curvature]
//! points = 1000
//! point_scale = 1.5
//! nus = [0.25, 0.5, 1.0, 2.0, 4.0]
//! bi_invariance_paths = 100000
//!
//! [carnot]
//! n_paths = 100000
//! grid = 64
//! substeps = 16
//!
//! [verdict]
//! holds = 1.0                       # deficit >= -holds * ci
//! violated = 3.0                    # deficit < -violated * ci
//!
//! [output]
//! dir = "out"
//! ```
//!
//! `HEISLAB_SEED` and `HEISLAB_OUT_DIR` override `seed` and `output.dir`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::BridgeDesign;
use crate::inequalities::VerdictRule;
use crate::sampler::PathConfig;
use crate::testfn::{lookup, standard_suite, NamedFunction};
use crate::GroupPoint;

pub const ENV_SEED: &str = "HEISLAB_SEED";
pub const ENV_OUT_DIR: &str = "HEISLAB_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub functions: Option<Vec<String>>,
    pub paths: PathsSection,
    pub lsi: LsiSection,
    pub clt: CltSection,
    pub bridge: BridgeSection,
    pub curvature: CurvatureSection,
    pub carnot: PathsSection,
    pub verdict: VerdictRule,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub n_paths: usize,
    pub grid: usize,
    pub substeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsiSection {
    pub betas: Vec<f64>,
    pub quadrature_nodes: usize,
    pub nus: Vec<f64>,
    pub c_lsi: f64,
    pub corollary_c: Option<f64>,
    pub finite_ns: Vec<usize>,
    pub finite_n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltSection {
    pub ns: Vec<usize>,
    pub betas: Vec<f64>,
    pub n_walks: usize,
    pub area_substeps: Vec<usize>,
    pub area_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeSection {
    pub n_paths: usize,
    pub cells: usize,
    pub substeps: usize,
    pub ts: Vec<f64>,
    pub radii: Vec<f64>,
    pub heights: Vec<f64>,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureSection {
    pub points: usize,
    pub point_scale: f64,
    pub nus: Vec<f64>,
    pub bi_invariance_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20240601,
            functions: None,
            paths: PathsSection::default(),
            lsi: LsiSection::default(),
            clt: CltSection::default(),
            bridge: BridgeSection::default(),
            curvature: CurvatureSection::default(),
            carnot: PathsSection::default(),
            verdict: VerdictRule::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            n_paths: 100_000,
            grid: 64,
            substeps: 16,
        }
    }
}

impl Default for LsiSection {
    fn default() -> Self {
        LsiSection {
            betas: vec![0.0, 1.0],
            quadrature_nodes: 16,
            nus: vec![0.5, 1.0, 2.0],
            c_lsi: 4.0,
            corollary_c: None,
            finite_ns: vec![1, 2, 4, 8],
            finite_n_samples: 100_000,
        }
    }
}

impl Default for CltSection {
    fn default() -> Self {
        CltSection {
            ns: vec![16, 256, 4096],
            betas: vec![0.0, 1.0],
            n_walks: 100_000,
            area_substeps: vec![16, 64, 256],
            area_paths: 1_000_000,
        }
    }
}

impl Default for BridgeSection {
    fn default() -> Self {
        let d = BridgeDesign::default();
        BridgeSection {
            n_paths: d.n_paths,
            cells: d.cells,
            substeps: d.substeps,
            ts: d.ts,
            radii: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            heights: vec![0.0, 0.25, 0.5, 1.0],
            k: d.k,
        }
    }
}

impl Default for CurvatureSection {
    fn default() -> Self {
        CurvatureSection {
            points: 1000,
            point_scale: 1.5,
            nus: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            bi_invariance_paths: 100_000,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// 1-based line of byte `offset` in `text`.
fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]` (top level when `section` is
/// empty), or 0 when the key is absent.
fn key_line(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    0
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn fail(&self, section: &str, key: &str, message: String) -> Error {
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        Error::Parse {
            line: key_line(self.text, section, key),
            message: format!("{full}: {message}"),
        }
    }

    fn positive(&self, section: &str, key: &str, v: usize) -> Result<()> {
        if v == 0 {
            return Err(self.fail(section, key, "must be positive".into()));
        }
        Ok(())
    }

    fn positive_list(&self, section: &str, key: &str, v: &[usize]) -> Result<()> {
        if v.is_empty() || v.contains(&0) {
            return Err(self.fail(section, key, "must be a nonempty list of positive integers".into()));
        }
        Ok(())
    }

    fn reals(&self, section: &str, key: &str, v: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
        if v.is_empty() {
            return Err(self.fail(section, key, "must not be empty".into()));
        }
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && ok(**x))) {
            return Err(self.fail(section, key, format!("{bad} is not {what}")));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Parses and validates `text`, without environment overrides.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_at(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        cfg.validate_against(text)?;
        Ok(cfg)
    }

    /// Reads `path` (or uses the defaults when `None`) and applies the
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p)?)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(s) = get(ENV_SEED) {
            self.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_SEED}={s} is not an unsigned 64-bit integer")))?;
        }
        if let Some(d) = get(ENV_OUT_DIR) {
            if d.is_empty() {
                return Err(Error::Config(format!("{ENV_OUT_DIR} is empty")));
            }
            self.output.dir = d.into();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_against("")
    }

    fn validate_against(&self, text: &str) -> Result<()> {
        let v = Validator { text };
        let pos = |x: f64| x > 0.0;
        let nonneg = |x: f64| x >= 0.0;
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if let Some(names) = &self.functions {
            if names.is_empty() {
                return Err(v.fail("", "functions", "must not be empty".into()));
            }
            for n in names {
                lookup(n).map_err(|e| v.fail("", "functions", e.to_string()))?;
            }
        }
        for (s, p) in [("paths", &self.paths), ("carnot", &self.carnot)] {
            v.positive(s, "n_paths", p.n_paths)?;
            v.positive(s, "grid", p.grid)?;
            v.positive(s, "substeps", p.substeps)?;
        }
        let l = &self.lsi;
        v.reals("lsi", "betas", &l.betas, nonneg, "a nonnegative number")?;
        v.positive("lsi", "quadrature_nodes", l.quadrature_nodes)?;
        if self.paths.grid % (2 * l.quadrature_nodes) != 0 {
            return Err(v.fail(
                "lsi",
                "quadrature_nodes",
                format!(
                    "the midpoint nodes need paths.grid ({}) divisible by 2 * quadrature_nodes",
                    self.paths.grid
                ),
            ));
        }
        v.reals("lsi", "nus", &l.nus, pos, "positive")?;
        v.reals("lsi", "c_lsi", &[l.c_lsi], pos, "positive")?;
        if let Some(c) = l.corollary_c {
            v.reals("lsi", "corollary_c", &[c], pos, "positive")?;
        }
        v.positive_list("lsi", "finite_ns", &l.finite_ns)?;
        v.positive("lsi", "finite_n_samples", l.finite_n_samples)?;
        let c = &self.clt;
        v.positive_list("clt", "ns", &c.ns)?;
        v.reals("clt", "betas", &c.betas, nonneg, "a nonnegative number")?;
        v.positive("clt", "n_walks", c.n_walks)?;
        v.positive_list("clt", "area_substeps", &c.area_substeps)?;
        v.positive("clt", "area_paths", c.area_paths)?;
        let b = &self.bridge;
        v.positive("bridge", "n_paths", b.n_paths)?;
        v.positive("bridge", "cells", b.cells)?;
        v.positive("bridge", "substeps", b.substeps)?;
        v.reals("bridge", "ts", &b.ts, unit, "in (0, 1)")?;
        for t in &b.ts {
            let k = t * b.cells as f64;
            if (k - k.round()).abs() > 1e-9 {
                return Err(v.fail("bridge", "ts", format!("{t} is not a multiple of 1/cells")));
            }
        }
        v.reals("bridge", "radii", &b.radii, nonneg, "a nonnegative number")?;
        v.reals("bridge", "heights", &b.heights, |_| true, "finite")?;
        if let Some(k) = b.k {
            v.positive("bridge", "k", k)?;
            if k > b.n_paths {
                return Err(v.fail("bridge", "k", "exceeds bridge.n_paths".into()));
            }
        }
        let cu = &self.curvature;
        v.positive("curvature", "points", cu.points)?;
        v.reals("curvature", "point_scale", &[cu.point_scale], pos, "positive")?;
        v.reals("curvature", "nus", &cu.nus, pos, "positive")?;
        v.positive("curvature", "bi_invariance_paths", cu.bi_invariance_paths)?;
        let r = &self.verdict;
        v.reals("verdict", "holds", &[r.holds], nonneg, "a nonnegative number")?;
        if !(r.violated.is_finite() && r.violated >= r.holds) {
            return Err(v.fail("verdict", "violated", "must be finite and at least verdict.holds".into()));
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(v.fail("output", "dir", "must not be empty".into()));
        }
        Ok(())
    }

    pub fn functions(&self) -> Result<Vec<NamedFunction>> {
        match &self.functions {
            None => Ok(standard_suite()),
            Some(names) => names.iter().map(|n| lookup(n)).collect(),
        }
    }

    pub fn path_config(&self, beta: f64) -> Result<PathConfig> {
        PathConfig::new(self.paths.grid, self.paths.substeps, beta)
    }

    pub fn bridge_design(&self) -> BridgeDesign {
        let b = &self.bridge;
        let mut targets = Vec::new();
        for &r in &b.radii {
            for &z in &b.heights {
                targets.push(GroupPoint::new(r, 0.0, z));
            }
        }
        BridgeDesign {
            n_paths: b.n_paths,
            cells: b.cells,
            substeps: b.substeps,
            ts: b.ts.clone(),
            targets,
            k: b.k,
        }
    }

    /// The configuration as TOML, with every default spelled out.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
        assert_eq!(ExperimentConfig::default().bridge_design(), BridgeDesign::default());
    }

    #[test]
    fn defaults_round_trip() {
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&d.to_toml().unwrap()).unwrap(), d);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = ExperimentConfig::parse("seed = 1\n[paths]\nn_paths = = 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = ExperimentConfig::parse("seed = 1\n\n[paths]\ncolour = 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
    }

    #[test]
    fn semantic_errors_carry_lines() {
        let e = ExperimentConfig::parse("seed = 1\n[paths]\nn_paths = 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = ExperimentConfig::parse("functions = [\"x\", \"nope\"]\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        let e = ExperimentConfig::parse("[lsi]\n\nquadrature_nodes = 5\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = ExperimentConfig::parse("[lsi]\nbetas = [-1.0]\n").unwrap_err();
        assert!(e.to_string().contains("lsi.betas"), "{e}");
    }

    #[test]
    fn env_overrides_seed_and_dir_only() {
        let mut c = ExperimentConfig::default();
        c.apply_env(|k| match k {
            ENV_SEED => Some("42".into()),
            ENV_OUT_DIR => Some("/tmp/x".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.output.dir, PathBuf::from("/tmp/x"));
        assert!(c.apply_env(|k| (k == ENV_SEED).then(|| "abc".into())).is_err());
    }
}
