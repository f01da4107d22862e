//! JSON run configuration: measures, systems, cubic strings and run options.
//!
//! Rational numbers may be written as `"p/q"` strings, integer strings,
//! decimal strings or plain JSON numbers (decimals are read exactly).

use rug::Rational;
use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::cubic_string::DiscreteCubicString;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::measures::{Measure, Weight};
use crate::nikishin::NikishinSystem;
use crate::samples;
use crate::scalar::{parse_rational, Scalar};

/// Exact rational read from a string or number.
#[derive(Clone, Debug, PartialEq)]
pub struct Q(pub Rational);

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let text = match &v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(de::Error::custom(format!("expected a rational number, found {other}"))),
        };
        parse_rational(&text).map(Q).ok_or_else(|| de::Error::custom(format!("cannot read {text:?} as a rational number")))
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightConfig {
    Constant,
    Lebesgue,
    Jacobi { alpha: Q, beta: Q },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureConfig {
    Discrete {
        atoms: Vec<(Q, Q)>,
        #[serde(default)]
        interval: Option<(Q, Q)>,
    },
    Continuous {
        interval: (Q, Q),
        #[serde(default)]
        weight: Option<WeightConfig>,
        #[serde(default = "one")]
        sign: i32,
    },
}

fn one() -> i32 {
    1
}

impl MeasureConfig {
    pub fn is_discrete(&self) -> bool {
        matches!(self, MeasureConfig::Discrete { .. })
    }

    pub fn build<S: Scalar>(&self, prec: u32) -> Result<Measure<S>> {
        match self {
            MeasureConfig::Discrete { atoms, interval } => {
                let iv = interval.as_ref().map(|(a, b)| Interval::new(a.0.clone(), b.0.clone())).transpose()?;
                let atoms: Vec<(Rational, Rational)> = atoms.iter().map(|(y, g)| (y.0.clone(), g.0.clone())).collect();
                Measure::from_rational_atoms(&atoms, iv, prec)
            }
            MeasureConfig::Continuous { interval, weight, sign } => {
                let w = match weight {
                    None | Some(WeightConfig::Constant) | Some(WeightConfig::Lebesgue) => Weight::Constant,
                    Some(WeightConfig::Jacobi { alpha, beta }) => Weight::Jacobi { alpha: alpha.0.clone(), beta: beta.0.clone() },
                };
                Measure::continuous(Interval::new(interval.0 .0.clone(), interval.1 .0.clone())?, w, *sign, prec)
            }
        }
    }
}

/// Built-in systems selectable by name.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SampleName {
    Worked,
    Reference,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemConfig {
    Sample(SampleName),
    Measures(Vec<MeasureConfig>),
    Random { random: RandomSystem },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomSystem {
    pub seed: u64,
    #[serde(default)]
    pub index: usize,
}

impl<'de> Deserialize<'de> for SystemConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde_json::Value;
        let v = Value::deserialize(d)?;
        let err = |what: String, e: serde_json::Error| de::Error::custom(format!("system{what}: {e}"));
        match v {
            Value::String(_) => serde_json::from_value(v).map(SystemConfig::Sample).map_err(|e| err(String::new(), e)),
            Value::Array(items) => items
                .into_iter()
                .enumerate()
                .map(|(i, m)| serde_json::from_value(m).map_err(|e| err(format!("[{i}]"), e)))
                .collect::<std::result::Result<_, _>>()
                .map(SystemConfig::Measures),
            Value::Object(_) => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Wrapper {
                    random: RandomSystem,
                }
                serde_json::from_value::<Wrapper>(v).map(|w| SystemConfig::Random { random: w.random }).map_err(|e| err(String::new(), e))
            }
            other => Err(de::Error::custom(format!("system: expected a sample name, a list of measures or {{\"random\": ...}}, found {other}"))),
        }
    }
}

impl SystemConfig {
    pub fn all_discrete(&self) -> bool {
        match self {
            SystemConfig::Measures(ms) => ms.iter().all(MeasureConfig::is_discrete),
            _ => true,
        }
    }

    pub fn build<S: Scalar>(&self, prec: u32) -> Result<NikishinSystem<S>> {
        let convert = |sys: NikishinSystem<Rational>| -> Result<NikishinSystem<S>> {
            NikishinSystem::build(sys.generators().iter().map(|g| g.convert(prec)).collect())
        };
        match self {
            SystemConfig::Sample(SampleName::Worked) => convert(samples::worked_system()),
            SystemConfig::Sample(SampleName::Reference) => convert(samples::reference_system()),
            SystemConfig::Random { random } => convert(samples::random_sweep(random.seed, random.index + 1).pop().expect("non-empty sweep")),
            SystemConfig::Measures(ms) => {
                if ms.is_empty() {
                    return Err(Error::Config("system needs at least one measure".into()));
                }
                NikishinSystem::build(ms.iter().map(|m| m.build(prec)).collect::<Result<_>>()?)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StringConfig {
    pub atoms: Vec<(Q, Q)>,
    #[serde(default = "one")]
    pub sign_convention: i32,
}

impl StringConfig {
    pub fn build(&self) -> Result<DiscreteCubicString> {
        DiscreteCubicString::new(self.atoms.iter().map(|(y, g)| (y.0.clone(), g.0.clone())).collect(), self.sign_convention)
    }
}

/// Arithmetic used for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Rational,
    Float(u32),
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "rational" {
            return Ok(Backend::Rational);
        }
        let bits = s
            .strip_prefix('f')
            .or_else(|| s.strip_prefix("bigfloat(").and_then(|r| r.strip_suffix(')')))
            .and_then(|b| b.parse::<u32>().ok())
            .filter(|&b| (64..=4096).contains(&b));
        bits.map(Backend::Float).ok_or_else(|| Error::Config(format!("unknown backend {s:?}; use rational, f256 or f512")))
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Rational => write!(f, "rational"),
            Backend::Float(b) => write!(f, "f{b}"),
        }
    }
}

impl<'de> Deserialize<'de> for Backend {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_margin")]
    pub margin: Q,
}

fn default_steps() -> usize {
    21
}
fn default_margin() -> Q {
    Q(Rational::from((1, 4)))
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { steps: default_steps(), margin: default_margin() }
    }
}

/// Everything a run reads from `--config`; flags override individual fields.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub string: Option<StringConfig>,
    #[serde(default)]
    pub n_min: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub formulation: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl RunConfig {
    /// Parses JSON text; errors carry the line and column of the problem.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Rejects the rational backend for systems with continuous generators.
    pub fn check_backend(&self, backend: Backend) -> Result<()> {
        if backend == Backend::Rational && !self.system.as_ref().is_none_or(SystemConfig::all_discrete) {
            return Err(Error::Config("the rational backend needs every measure to be discrete".into()));
        }
        Ok(())
    }
}
