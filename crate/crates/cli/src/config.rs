use anyhow::{bail, Context};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use xyff_core::{GaugeParams, ModelParams, C64};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub gauge: GaugeBlock,
    #[serde(default)]
    pub run: RunBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: [f64; 2],
    #[serde(default)]
    pub xi: Xi,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

/// `"homogeneous"`, `"random"` (seeded), or an explicit list of `[re, im]` pairs.
#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum Xi {
    #[default]
    #[serde(skip)]
    Unset,
    Named(String),
    List(Vec<[f64; 2]>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum GaugeBlock {
    #[default]
    #[serde(skip)]
    Unset,
    Named(String),
    Explicit {
        s: [f64; 2],
        t: [f64; 2],
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub suite: Option<String>,
    /// Replaces every verification threshold.
    pub tolerance: Option<f64>,
}

fn c([re, im]: [f64; 2]) -> C64 {
    C64::new(re, im)
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A config for `N` sites with defaults elsewhere.
    pub fn default_for(n: usize) -> Self {
        RunConfig {
            model: ModelBlock { n, tau: [0.3, 0.7], xi: Xi::Unset, seed: 1 },
            gauge: GaugeBlock::Unset,
            run: RunBlock::default(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let m = &self.model;
        if m.n < 2 || !m.n.is_multiple_of(2) {
            bail!("model.N must be even and at least 2, got {}", m.n);
        }
        if m.tau[1].is_nan() || m.tau[1] <= 0.0 {
            bail!("model.tau must have positive imaginary part, got {:?}", m.tau);
        }
        match &m.xi {
            Xi::Named(s) if s != "homogeneous" && s != "random" => {
                bail!("model.xi must be \"homogeneous\", \"random\" or a list, got \"{s}\"")
            }
            Xi::List(v) if v.len() != m.n => bail!("model.xi has {} entries, expected {}", v.len(), m.n),
            _ => {}
        }
        if let GaugeBlock::Named(s) = &self.gauge {
            if s != "random" {
                bail!("gauge must be \"random\" or {{\"s\": [re, im], \"t\": [re, im]}}, got \"{s}\"");
            }
        }
        if let Some(f) = &self.run.format {
            if f != "json" && f != "csv" {
                bail!("run.format must be json or csv, got {f}");
            }
        }
        Ok(())
    }

    pub fn model(&self) -> xyff_core::Result<ModelParams> {
        let m = &self.model;
        let tau = c(m.tau);
        match &m.xi {
            Xi::Named(s) if s == "homogeneous" => ModelParams::homogeneous(m.n, tau),
            Xi::List(v) => ModelParams::new(m.n, tau, v.iter().map(|&z| c(z)).collect()),
            _ => ModelParams::random_inhomogeneous(m.n, tau, m.seed),
        }
    }

    /// Explicit `(s, t)`, if given.
    pub fn explicit_gauge(&self) -> Option<(C64, C64)> {
        match self.gauge {
            GaugeBlock::Explicit { s, t } => Some((c(s), c(t))),
            _ => None,
        }
    }

    pub fn gauge(&self, model: &ModelParams) -> xyff_core::Result<GaugeParams> {
        match self.explicit_gauge() {
            Some((s, t)) => GaugeParams::new(s, t, model),
            None => Ok(GaugeParams::random(self.model.seed, model)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> anyhow::Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn accepts_all_xi_forms() {
        let h = parse(r#"{"model": {"N": 4, "tau": [0, 1], "xi": "homogeneous"}}"#).unwrap();
        assert!(h.model().unwrap().is_homogeneous());
        let l = parse(r#"{"model": {"N": 2, "tau": [0, 1], "xi": [[0.01, 0], [0.02, 0]]}}"#).unwrap();
        assert_eq!(l.model().unwrap().xi().len(), 2);
        let r = parse(r#"{"model": {"N": 4, "tau": [0, 1], "seed": 9}, "gauge": "random"}"#).unwrap();
        assert!(!r.model().unwrap().is_homogeneous());
    }

    #[test]
    fn explicit_gauge() {
        let cfg =
            parse(r#"{"model": {"N": 4, "tau": [0.3, 0.7]}, "gauge": {"s": [0.1, 0.2], "t": [-0.3, 0.1]}}"#).unwrap();
        let g = cfg.gauge(&cfg.model().unwrap()).unwrap();
        assert_eq!(g.s, C64::new(0.1, 0.2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse(r#"{"model": {"N": 3, "tau": [0, 1]}}"#).is_err());
        assert!(parse(r#"{"model": {"N": 4, "tau": [0, 0]}}"#).is_err());
        assert!(parse(r#"{"model": {"N": 4, "tau": [0, 1], "xi": "flat"}}"#).is_err());
        assert!(parse(r#"{"model": {"N": 4, "tau": [0, 1], "xi": [[0, 0]]}}"#).is_err());
        assert!(parse(r#"{"model": {"N": 4, "tau": [0, 1]}, "gauge": "fixed"}"#).is_err());
        assert!(parse(r#"{"model": {"N": 4, "tau": [0, 1]}, "run": {"format": "xml"}}"#).is_err());
    }
}
