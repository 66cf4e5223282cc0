use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry_constants::ParamOverrides;
use crate::math::is_prime;
use crate::qmc_rules::interlacing_factor;
use crate::random_field::MeanField;
use crate::spline_fem::FunctionalKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    LatticePod,
    InterlacedSpod,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// `f = 1`, `g = 0`
    #[default]
    Default,
    /// plane wave solution of the realized index
    Manufactured,
}

/// What the cubature integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrandKind {
    /// functional of the FEM solution
    #[default]
    Pde,
    /// `prod_j (1 + j^{-3} (y_j^2 - 1/12))`, exact integral 1
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub n0: MeanField,
    pub amplitude: f64,
    pub theta: f64,
    /// number of materialized modes
    pub s: usize,
}

/// Knobs of the individual studies and subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    /// `kL` values of the `constants` table
    pub kl_list: Vec<f64>,
    /// element counts per direction of the FEM study
    pub meshes: Vec<usize>,
    pub s_list: Vec<usize>,
    pub s_ref: usize,
    /// exponents `m` of the QMC study (`N ~ 2^m`)
    pub m_list: Vec<u32>,
    pub max_order: u32,
    pub dims: usize,
    /// number of random parameter points of the regularity check
    pub n_y: usize,
    pub grid_res: usize,
    pub safety: f64,
    /// propagation angle of the manufactured plane wave
    pub angle: f64,
    /// parameter point of `solve` (zeros when absent)
    pub y: Option<Vec<f64>>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            kl_list: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            meshes: vec![8, 12, 16, 24, 32],
            s_list: vec![2, 4, 8, 16],
            s_ref: 64,
            m_list: (4..=10).collect(),
            max_order: 3,
            dims: 4,
            n_y: 10,
            grid_res: 64,
            safety: 0.99,
            angle: 0.3,
            y: None,
        }
    }
}

/// Complete run description. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k: f64,
    #[serde(default = "default_side")]
    pub side: f64,
    pub p: usize,
    pub m_e: usize,
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R", default = "default_r")]
    pub r: usize,
    pub rule: RuleKind,
    pub field: FieldConfig,
    pub p0: f64,
    pub p1: f64,
    pub delta: f64,
    pub seed: u64,
    #[serde(default)]
    pub functional: FunctionalKind,
    #[serde(default)]
    pub data: DataKind,
    #[serde(default)]
    pub integrand: IntegrandKind,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub study: StudyConfig,
}

fn default_side() -> f64 {
    1.0
}

fn default_r() -> usize {
    8
}

fn cfg_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(v)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a JSON file and applies `key.path=value` overrides before validation.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(name, format!("must be positive and finite, got {v}")))
            }
        };
        pos("k", self.k)?;
        pos("side", self.side)?;
        pos("field.theta", self.field.theta)?;
        if self.p < 2 {
            return Err(cfg_err(
                "p",
                format!("spline degree {} is below the C^1 requirement p >= 2", self.p),
            ));
        }
        if self.m_e == 0 {
            return Err(cfg_err("m_e", "need at least one element"));
        }
        if self.s == 0 || self.s > self.field.s {
            return Err(cfg_err("s", format!("must lie in 1..={} (field.s)", self.field.s)));
        }
        if self.n == 0 {
            return Err(cfg_err("N", "need at least one point"));
        }
        if self.r == 0 {
            return Err(cfg_err("R", "need at least one shift"));
        }
        if !(self.field.amplitude >= 0.0 && self.field.amplitude.is_finite()) {
            return Err(cfg_err("field.amplitude", "must be non-negative"));
        }
        for (name, v) in [("p0", self.p0), ("p1", self.p1)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(cfg_err(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(cfg_err("delta", format!("must lie in (0, 1/2), got {}", self.delta)));
        }
        match self.rule {
            RuleKind::LatticePod if self.n > 1 && !is_prime(self.n as u64) => {
                return Err(cfg_err("N", format!("lattice rules need a prime N, got {}", self.n)))
            }
            RuleKind::InterlacedSpod => {
                if !self.n.is_power_of_two() || !(4..=20).contains(&self.n.trailing_zeros()) {
                    return Err(cfg_err("N", "interlaced rules need N = 2^m with m in [4, 20]"));
                }
                let alpha = interlacing_factor(self.p1)?;
                if alpha * self.n.trailing_zeros() as usize > 63 {
                    return Err(cfg_err("p1", "interlacing factor too large for 64-bit digits"));
                }
            }
            _ => {}
        }
        let st = &self.study;
        if st.meshes.is_empty() || st.meshes.contains(&0) {
            return Err(cfg_err("study.meshes", "need positive element counts"));
        }
        if st.s_list.iter().any(|s| *s == 0 || *s >= st.s_ref) {
            return Err(cfg_err("study.s_list", "entries must lie in 1..s_ref"));
        }
        if !(st.safety > 0.0 && st.safety <= 1.0) {
            return Err(cfg_err("study.safety", "must lie in (0, 1]"));
        }
        if st.grid_res < 16 {
            return Err(cfg_err("study.grid_res", "must be at least 16"));
        }
        if let Some(y) = &st.y {
            if y.len() > self.s || y.iter().any(|v| v.abs() > 0.5) {
                return Err(cfg_err("study.y", "needs at most s entries in [-1/2, 1/2]"));
            }
        }
        Ok(())
    }
}

/// Sets `a.b.c=value`; the value is parsed as JSON and kept as a string otherwise.
pub fn apply_override(v: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let val: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = v;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override '{path}': '{key}' is not inside an object")))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), val);
            return Ok(());
        }
        cur = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{"k":6.2832,"p":2,"m_e":16,"s":8,"N":257,"R":8,"rule":"lattice-pod",
        "field":{"n0":1,"amplitude":0.2,"theta":4,"s":8},"p0":0.5,"p1":0.6,"delta":0.1,"seed":42}"#;

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.n, 257);
        assert_eq!(c.field.n0, MeanField::Constant(1.0));
        assert_eq!(c.study.s_ref, 64);
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_degree_and_unknown_keys() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let e = c.with_overrides(&["p=1".into()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("p:"));
        let e = c.with_overrides(&["meshh=3".into()]).unwrap_err();
        assert!(e.to_string().contains("meshh"), "{e}");
        let e = c.with_overrides(&["study.bogus=3".into()]).unwrap_err();
        assert!(e.to_string().contains("bogus"));
        assert!(c.with_overrides(&["N=256".into()]).is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let d = c
            .with_overrides(&[
                "field.amplitude=0.1".into(),
                "rule=mc".into(),
                "study.meshes=[4,8]".into(),
            ])
            .unwrap();
        assert_eq!(d.field.amplitude, 0.1);
        assert_eq!(d.rule, RuleKind::Mc);
        assert_eq!(d.study.meshes, vec![4, 8]);
    }
}
