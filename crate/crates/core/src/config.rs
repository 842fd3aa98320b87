//! Experiment configuration files (JSON or TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::DensityVariant;
use crate::complex::{BoundarySpec, CellComplex, Rect};
use crate::error::{Error, Result};
use crate::metric::MetricField;

/// A metric component: a number or an expression in `x` and `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Component {
    Number(f64),
    Expr(String),
}

impl Component {
    pub fn text(&self) -> String {
        match self {
            Component::Number(v) => format!("{v:?}"),
            Component::Expr(s) => s.clone(),
        }
    }
}

fn one() -> Component {
    Component::Number(1.0)
}

fn unit_domain() -> [f64; 4] {
    [0.0, 1.0, 0.0, 1.0]
}

fn all_sides() -> BoundarySpec {
    BoundarySpec::all()
}

fn single_cell() -> [usize; 2] {
    [1, 1]
}

/// Metric, domain, boundary and run parameters. Every field has a default, so `{}` is the
/// identity metric on the unit square with all sides Dirichlet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "one")]
    pub gxx: Component,
    #[serde(default = "one")]
    pub gyy: Component,
    /// `[x0, x1, y0, y1]`.
    #[serde(default = "unit_domain")]
    pub domain: [f64; 4],
    #[serde(default = "all_sides")]
    pub dirichlet_sides: BoundarySpec,
    /// Cells of the level-0 complex along x and y.
    #[serde(default = "single_cell")]
    pub base_cells: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<DensityVariant>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gxx: one(),
            gyy: one(),
            domain: unit_domain(),
            dirichlet_sides: all_sides(),
            base_cells: single_cell(),
            levels: None,
            variant: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("json: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("toml: {e}")))
    }

    /// Reads a file; `.toml` and `.json` pick the format, anything else tries JSON then TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let at = |e: Error| Error::Config(format!("{}: {e}", path.display()));
        let cfg = match path.extension().and_then(|s| s.to_str()) {
            Some("toml") => Self::from_toml(&text),
            Some("json") => Self::from_json(&text),
            _ => Self::from_json(&text).or_else(|_| Self::from_toml(&text)),
        }
        .map_err(at)?;
        cfg.validate().map_err(at)?;
        Ok(cfg)
    }

    /// Checks the domain, the metric and the level list.
    pub fn validate(&self) -> Result<()> {
        self.metric()?;
        if self.base_cells.contains(&0) {
            return Err(Error::Config("base_cells must be positive".into()));
        }
        if let Some(levels) = &self.levels {
            check_levels(levels)?;
        }
        Ok(())
    }

    pub fn rect(&self) -> Result<Rect> {
        let [x0, x1, y0, y1] = self.domain;
        Rect::new(x0, x1, y0, y1)
    }

    pub fn metric(&self) -> Result<MetricField> {
        MetricField::parse(&self.gxx.text(), &self.gyy.text(), self.rect()?)
    }

    pub fn base_complex(&self) -> Result<CellComplex> {
        CellComplex::new(self.rect()?, self.base_cells[0], self.base_cells[1])
    }
}

/// Levels must be non-empty and strictly ascending.
pub fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Config("levels must be non-empty".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("levels must be strictly ascending, got {levels:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Side;

    #[test]
    fn empty_is_identity_square() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.metric().unwrap().constant_components(), Some((1.0, 1.0)));
    }

    #[test]
    fn json_and_toml_agree() {
        let j = r#"{"gxx": "(1 + x/2)^2", "gyy": 1, "domain": [0, 2, 0, 1], "dirichlet_sides": ["bottom", "left"]}"#;
        let t = "gxx = \"(1 + x/2)^2\"\ngyy = 1.0\ndomain = [0.0, 2.0, 0.0, 1.0]\ndirichlet_sides = [\"bottom\", \"left\"]\n";
        let (a, b) = (ExperimentConfig::from_json(j).unwrap(), ExperimentConfig::from_toml(t).unwrap());
        assert_eq!(a.metric().unwrap().id(), b.metric().unwrap().id());
        assert_eq!(a.dirichlet_sides, BoundarySpec::new(&[Side::Left, Side::Bottom]).unwrap());
        assert_eq!(a.rect().unwrap(), b.rect().unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_json(r#"{"gxz": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"dirichlet_sides": []}"#).is_err());
        let c = ExperimentConfig { domain: [1.0, 0.0, 0.0, 1.0], ..Default::default() };
        assert!(c.validate().unwrap_err().is_config());
        let c = ExperimentConfig { gxx: Component::Expr("x - 0.5".into()), ..Default::default() };
        assert!(c.validate().unwrap_err().is_config());
        assert!(check_levels(&[3, 3]).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let e = ExperimentConfig::load(Path::new("/nonexistent/metric.json")).unwrap_err();
        assert!(e.is_config() && e.to_string().contains("/nonexistent/metric.json"));
    }

    #[test]
    fn resolved_round_trip() {
        let c = ExperimentConfig { levels: Some(vec![2, 3]), variant: Some(DensityVariant::Corrected), ..Default::default() };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&s).unwrap(), c);
    }
}
