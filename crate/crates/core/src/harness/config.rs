use std::fmt;
use std::path::Path;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::emit::Format;
use super::sweep::SweepOptions;
use crate::approximator::{BuildOptions, Strategy};
use crate::convex_core::{Domain, DomainSpec, FunctionSpec, SmoothConvexFunction, WeightFunction, WeightSpec};
use crate::error::{Error, Result};
use crate::functionals::{Provenance, ZadorConstant};
use crate::quadrature::QuadratureSpec;
use crate::scalar::{lit, Scalar};

/// Run description read from a TOML file. Only `function` is required:
///
/// | key              | default                                                 |
/// |------------------|---------------------------------------------------------|
/// | `weight`         | `constant` with `value = 1`                             |
/// | `p`              | `1`                                                     |
/// | `strategy`       | `exact_1d` in 1D, `global_density` otherwise            |
/// | `m_list`         | `[1, 2, 4, …, 512]`                                     |
/// | `quadrature`     | exact rule on intervals, tensor Gauss–Legendre on boxes, Monte Carlo elsewhere |
/// | `seed`           | `0`                                                     |
/// | `output`         | stdout, `csv`                                           |
/// | `build`          | 4 restarts, 200 iterations, tolerance 1e-7              |
/// | `zador_constant` | reference constant, else an empirical estimate          |
/// | `dual.support`   | the function's domain                                   |
///
/// `strategy` is either a name (`"global_density"`) or a table
/// (`{ kind = "paper_partition", l_pieces = 4 }`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub function: FunctionSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default, deserialize_with = "strategy_field", skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub build: BuildOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zador_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpec {
    /// Region standing in for the support of the Monge–Ampère measure.
    pub support: DomainSpec,
}

fn default_p() -> f64 {
    1.0
}

pub fn default_m_list() -> Vec<usize> {
    (0..10).map(|k| 1 << k).collect()
}

fn strategy_field<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Strategy>, D::Error> {
    struct V;

    impl<'de> Visitor<'de> for V {
        type Value = Strategy;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a strategy name or a table with a `kind` key")
        }

        fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Strategy, E> {
            Strategy::from_name(s).map_err(|e| match e {
                Error::Config { message, .. } => E::custom(message),
                other => E::custom(other),
            })
        }

        fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<Strategy, A::Error> {
            Strategy::deserialize(de::value::MapAccessDeserializer::new(map))
        }
    }

    d.deserialize_any(V).map(Some)
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().trim().to_string();
            Error::Config { path: if path == "." { "<root>".into() } else { path }, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks everything that can be checked without running numerics.
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::config("p", "must be positive and finite"));
        }
        if self.m_list.is_empty() {
            return Err(Error::config("m_list", "must not be empty"));
        }
        if let Some(i) = self.m_list.iter().position(|&m| m == 0) {
            return Err(Error::config(format!("m_list[{i}]"), "budgets must be at least 1"));
        }
        let f = self.function::<f64>()?;
        let w = self.weight::<f64>()?;
        w.check_positive_on(f.domain()).map_err(|e| Error::config("weight", e.to_string()))?;
        if let Some(q) = &self.quadrature {
            q.validate()?;
        }
        if matches!(self.strategy(), Strategy::Exact1d) && f.dim() != 1 {
            return Err(Error::config("strategy", "exact_1d needs a one-dimensional function"));
        }
        if let Strategy::PaperPartition { l_pieces: Some(0) } = self.strategy() {
            return Err(Error::config("strategy.l_pieces", "must be at least 1"));
        }
        if self.build.restarts == 0 {
            return Err(Error::config("build.restarts", "must be at least 1"));
        }
        if !(self.build.tolerance > 0.0) {
            return Err(Error::config("build.tolerance", "must be positive"));
        }
        if let Some(z) = self.zador_constant {
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::config("zador_constant", "must be positive and finite"));
            }
        }
        if let Some(d) = &self.dual {
            let supp = Domain::<f64>::from_spec(&d.support).map_err(|e| Error::config("dual.support", e.to_string()))?;
            if supp.dim() != f.dim() {
                return Err(Error::config("dual.support", "dimension differs from the function's"));
            }
        }
        Ok(())
    }

    pub fn function<T: Scalar>(&self) -> Result<SmoothConvexFunction<T>> {
        SmoothConvexFunction::from_spec(&self.function)
    }

    pub fn weight<T: Scalar>(&self) -> Result<WeightFunction<T>> {
        let n = match &self.function.domain {
            DomainSpec::Box { lower, .. } => lower.len(),
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Polytope { normals, .. } => normals.first().map_or(0, Vec::len),
        };
        WeightFunction::from_spec(&self.weight, n)
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.function::<f64>()?.dim())
    }

    /// Configured strategy or the dimension-dependent default.
    pub fn strategy(&self) -> Strategy {
        self.strategy.clone().unwrap_or_else(|| match self.dim() {
            Ok(1) => Strategy::Exact1d,
            _ => Strategy::GlobalDensity,
        })
    }

    pub fn sweep_options<T: Scalar>(&self) -> Result<SweepOptions<T>> {
        let n = self.dim()?;
        Ok(SweepOptions {
            quadrature: self.quadrature.clone(),
            seed: self.seed,
            build: self.build.clone(),
            zador: self.zador_constant.map(|v| ZadorConstant {
                n,
                p: lit(self.p),
                value: lit(v),
                provenance: Provenance::UserSupplied,
                half_width: None,
            }),
        })
    }

    pub fn support<T: Scalar>(&self) -> Result<Domain<T>> {
        match &self.dual {
            Some(d) => Domain::from_spec(&d.support),
            None => Domain::from_spec(&self.function.domain),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    Config::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[function]
catalog_id = "quadratic"
parameters = { a = [[1.0]] }
domain = { kind = "box", lower = [0.0], upper = [1.0] }
"#;

    fn err_path(text: &str) -> (String, String) {
        match Config::from_toml_str(text) {
            Err(Error::Config { path, message }) => (path, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = Config::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.p, 1.0);
        assert_eq!(c.seed, 0);
        assert_eq!(c.m_list, default_m_list());
        assert_eq!(c.weight, WeightSpec::constant(1.0));
        assert_eq!(c.strategy(), Strategy::Exact1d);
        assert_eq!(c.output.format, Format::Csv);
        assert_eq!(c.build, BuildOptions::default());
    }

    #[test]
    fn zero_exponent_rejected() {
        let (path, _) = err_path(&format!("p = 0.0\n{MINIMAL}"));
        assert_eq!(path, "p");
    }

    #[test]
    fn unknown_strategy_lists_alternatives() {
        let (path, msg) = err_path(&format!("strategy = \"lloyd\"\n{MINIMAL}"));
        assert_eq!(path, "strategy");
        assert!(msg.contains("global_density") && msg.contains("exact_1d"), "{msg}");
    }

    #[test]
    fn strategy_as_table() {
        let text = format!("strategy = {{ kind = \"paper_partition\", l_pieces = 3 }}\n{MINIMAL}");
        let c = Config::from_toml_str(&text).unwrap();
        assert_eq!(c.strategy(), Strategy::PaperPartition { l_pieces: Some(3) });
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = MINIMAL.replace("catalog_id = \"quadratic\"", "catalog_id = \"quadratic\"\ncolour = 3");
        let (path, msg) = err_path(&text);
        assert!(path.starts_with("function"), "{path}: {msg}");
        assert!(msg.contains("colour"), "{msg}");
    }

    #[test]
    fn nested_type_error_reports_path() {
        let text = format!("{MINIMAL}\n[build]\nrestarts = \"four\"\n");
        let (path, _) = err_path(&text);
        assert_eq!(path, "build.restarts");
    }

    #[test]
    fn catalog_parameter_errors_keep_their_path() {
        let text = MINIMAL.replace("a = [[1.0]]", "a = [[-1.0]]");
        let (path, _) = err_path(&text);
        assert_eq!(path, "function.parameters.a");
    }

    #[test]
    fn exact_1d_needs_one_dimension() {
        let text = r#"
strategy = "exact_1d"
[function]
catalog_id = "quadratic"
parameters = { a = [[1.0, 0.0], [0.0, 1.0]] }
domain = { kind = "box", lower = [0.0, 0.0], upper = [1.0, 1.0] }
"#;
        let (path, _) = err_path(text);
        assert_eq!(path, "strategy");
    }

    #[test]
    fn toml_round_trip() {
        let text = format!("strategy = \"greedy_insertion\"\nseed = 7\nzador_constant = 0.1\n{MINIMAL}");
        let c = Config::from_toml_str(&text).unwrap();
        let back = Config::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn zero_budget_rejected() {
        let (path, _) = err_path(&format!("m_list = [1, 0]\n{MINIMAL}"));
        assert_eq!(path, "m_list[1]");
    }
}
