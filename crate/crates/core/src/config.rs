//! JSON run configuration.

use crate::cell_solver::MeshParams;
use crate::error::{Error, Result};
use crate::gamma_validator::ValidatorParams;
use crate::profiles::{FilmGeometry, Profile, Rect, SampledGrid};
use crate::quadrature::{CellRule, PlaneRuleParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Constant,
    Sine2_1d,
    Sine2_2d,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_path: Option<String>,
    /// Added to the profile.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl ProfileSpec {
    pub fn constant(c: f64) -> Self {
        Self { kind: ProfileName::Constant, value: Some(c), grid_path: None, offset: 0.0 }
    }

    pub fn named(kind: ProfileName) -> Self {
        Self { kind, value: None, grid_path: None, offset: 0.0 }
    }

    fn build(&self, base: &Path) -> Result<Profile<f64>> {
        if !self.offset.is_finite() {
            return Err(Error::Config("profile offset must be finite".into()));
        }
        let extra = |field: &str, present: bool| {
            if present {
                Err(Error::Config(format!("`{field}` is not allowed for kind {:?}", self.kind)))
            } else {
                Ok(())
            }
        };
        let p = match self.kind {
            ProfileName::Constant => {
                extra("grid_path", self.grid_path.is_some())?;
                let c = self.value.ok_or_else(|| Error::Config("constant profile needs `value`".into()))?;
                if !c.is_finite() {
                    return Err(Error::Config("constant value must be finite".into()));
                }
                Profile::constant(c)
            }
            ProfileName::Sine2_1d | ProfileName::Sine2_2d => {
                extra("value", self.value.is_some())?;
                extra("grid_path", self.grid_path.is_some())?;
                if self.kind == ProfileName::Sine2_1d {
                    Profile::sine2_1d()
                } else {
                    Profile::sine2_2d()
                }
            }
            ProfileName::Sampled => {
                extra("value", self.value.is_some())?;
                let rel = self
                    .grid_path
                    .as_ref()
                    .ok_or_else(|| Error::Config("sampled profile needs `grid_path`".into()))?;
                Profile::sampled(read_grid(&base.join(rel))?)
            }
        };
        Ok(if self.offset != 0.0 { p.shifted(self.offset) } else { p })
    }
}

/// Reads an N×N comma-separated grid; row `i`, column `j` is `f(i/N, j/N)`.
pub fn read_grid(path: &Path) -> Result<SampledGrid<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), rows.len())))?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{}: grid must be square", path.display())));
    }
    SampledGrid::new(n, rows.into_iter().flatten().collect())
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for RectSpec {
    fn default() -> Self {
        Self { min: [0.0, 0.0], max: [1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub f1: ProfileSpec,
    /// Defaults to `f1 + parallel_offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<ProfileSpec>,
    #[serde(default)]
    pub omega: RectSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_offset: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesConfig {
    #[serde(default)]
    pub plane_rule: PlaneRuleParams,
    #[serde(default)]
    pub cell_rule: CellRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub d: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { d: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    /// Report copy written next to stdout; tables go here for `csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub rules: RulesConfig,
    #[serde(default)]
    pub mesh: MeshParams,
    #[serde(default)]
    pub validator: ValidatorParams,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Config {
    pub fn from_geometry(geometry: GeometryConfig) -> Self {
        Self {
            geometry,
            rules: RulesConfig::default(),
            mesh: MeshParams::default(),
            validator: ValidatorParams::default(),
            params: ParamsConfig::default(),
            output: OutputConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    /// Reads, parses, and validates the geometry so ordering errors surface here.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let c = Self::parse(&text, &base)?;
        c.geometry()?;
        c.params()?;
        Ok(c)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn geometry(&self) -> Result<FilmGeometry<f64>> {
        let g = &self.geometry;
        let omega = Rect::new(g.omega.min, g.omega.max)?;
        let f1 = g.f1.build(&self.base_dir)?;
        match (&g.f2, g.parallel_offset) {
            (None, Some(a)) => FilmGeometry::parallel(f1, a, omega),
            (Some(spec), a) => {
                let f2 = spec.build(&self.base_dir)?;
                let geom = FilmGeometry::new(f1, f2, omega)?;
                if let Some(a) = a {
                    if geom.parallel_offset() != Some(a) {
                        return Err(Error::Config(format!("f2 is not f1 + parallel_offset ({a})")));
                    }
                }
                Ok(geom)
            }
            (None, None) => Err(Error::Config("geometry needs f2 or parallel_offset".into())),
        }
    }

    pub fn params(&self) -> Result<f64> {
        if !(self.params.d > 0.0 && self.params.d.is_finite()) {
            return Err(Error::Config("params.d must be positive".into()));
        }
        Ok(self.params.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = Config::parse(
            r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "parallel_offset": 0.5}}"#,
            Path::new("."),
        )
        .unwrap();
        assert_eq!(c.mesh, MeshParams::default());
        assert_eq!(c.rules.cell_rule.n, 16);
        assert_eq!(c.rules.plane_rule.r_cut, 40.0);
        let g = c.geometry().unwrap();
        assert_eq!(g.parallel_offset(), Some(0.5));
    }

    #[test]
    fn round_trip_is_stable() {
        let text = r#"{
            "geometry": {"f1": {"kind": "constant", "value": 0.0},
                         "f2": {"kind": "sine2_2d", "offset": 1.5},
                         "omega": {"min": [0, 0], "max": [2, 1]}},
            "rules": {"plane_rule": {"R_cut": 20, "n_ang": 64}, "cell_rule": {"n": 8}},
            "mesh": {"n_h": 16, "n_v": 8},
            "params": {"d": 0.3},
            "output": {"format": "csv", "path": "out.csv"}
        }"#;
        let c = Config::parse(text, Path::new(".")).unwrap();
        let canon = c.to_canonical_json();
        let c2 = Config::parse(&canon, Path::new(".")).unwrap();
        assert_eq!(c, c2);
        assert_eq!(canon, c2.to_canonical_json());
        assert_eq!(c.rules.plane_rule.n_ang, 64);
        assert!(canon.contains("\"R_cut\""));
    }

    #[test]
    fn ordering_violation_names_the_point() {
        let c = Config::parse(
            r#"{"geometry": {"f1": {"kind": "sine2_2d"}, "f2": {"kind": "constant", "value": 0.5}}}"#,
            Path::new("."),
        )
        .unwrap();
        match c.geometry() {
            Err(Error::Ordering { x1, x2, .. }) => assert_eq!((x1, x2), (0.5, 0.5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_specs() {
        let bad = [
            r#"{"geometry": {"f1": {"kind": "constant"}, "parallel_offset": 1}}"#,
            r#"{"geometry": {"f1": {"kind": "sine2_1d", "value": 2}, "parallel_offset": 1}}"#,
            r#"{"geometry": {"f1": {"kind": "sine2_1d"}}}"#,
            r#"{"geometry": {"f1": {"kind": "wavy"}, "parallel_offset": 1}}"#,
            r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "parallel_offset": 1, "extra": 0}}"#,
            r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "f2": {"kind": "sine2_2d", "offset": 2}, "parallel_offset": 2}}"#,
        ];
        for b in bad {
            let r = Config::parse(b, Path::new(".")).and_then(|c| c.geometry().map(|_| ()));
            assert!(r.is_err(), "{b}");
        }
    }

    #[test]
    fn sampled_grid_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let n = 8;
        let mut s = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{}", 0.1 * (i as f64) + 0.01 * (j as f64)))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        std::fs::write(dir.path().join("g.csv"), s).unwrap();
        let cfg = r#"{"geometry": {"f1": {"kind": "sampled", "grid_path": "g.csv"}, "parallel_offset": 1}}"#;
        std::fs::write(dir.path().join("c.json"), cfg).unwrap();
        let c = Config::load(&dir.path().join("c.json")).unwrap();
        let g = c.geometry().unwrap();
        assert!((g.f1().eval([3.0 / 8.0, 5.0 / 8.0]) - 0.35).abs() < 1e-12);
        std::fs::write(dir.path().join("g.csv"), "1,2\n3\n").unwrap();
        assert!(Config::load(&dir.path().join("c.json")).is_err());
    }
}
