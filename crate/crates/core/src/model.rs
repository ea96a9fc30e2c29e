//! Domain types shared across ingest, linkage, transforms and analyses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::country::Country;

/// How an indicator's values are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndicatorKind {
    #[serde(rename = "numeric")]
    Numeric,
    #[serde(rename = "class_A_to_E")]
    ClassAToE,
    #[serde(rename = "rank")]
    Rank,
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndicatorKind::Numeric => "numeric",
            IndicatorKind::ClassAToE => "class_A_to_E",
            IndicatorKind::Rank => "rank",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorDef {
    pub name: String,
    pub kind: IndicatorKind,
    pub higher_is_better: bool,
}

impl IndicatorDef {
    pub fn new(name: impl Into<String>, kind: IndicatorKind, higher_is_better: bool) -> Self {
        Self {
            name: name.into(),
            kind,
            higher_is_better,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Self::new(name, IndicatorKind::Numeric, true)
    }
}

/// Identity and indicator inventory of one ranking system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemManifest {
    pub system_id: String,
    pub display_name: String,
    pub year: i32,
    pub indicators: Vec<IndicatorDef>,
}

impl SystemManifest {
    pub fn indicator(&self, name: &str) -> Option<&IndicatorDef> {
        self.indicators.iter().find(|d| d.name == name)
    }
}

/// Performance class, A (best) to E (weakest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerfClass {
    A,
    B,
    C,
    D,
    E,
}

impl PerfClass {
    pub const ALL: [PerfClass; 5] = [PerfClass::A, PerfClass::B, PerfClass::C, PerfClass::D, PerfClass::E];

    /// A=5, B=4, ..., E=1.
    pub fn quantified(self) -> u8 {
        match self {
            PerfClass::A => 5,
            PerfClass::B => 4,
            PerfClass::C => 3,
            PerfClass::D => 2,
            PerfClass::E => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PerfClass::A => "A",
            PerfClass::B => "B",
            PerfClass::C => "C",
            PerfClass::D => "D",
            PerfClass::E => "E",
        }
    }
}

impl FromStr for PerfClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(PerfClass::A),
            "B" => Ok(PerfClass::B),
            "C" => Ok(PerfClass::C),
            "D" => Ok(PerfClass::D),
            "E" => Ok(PerfClass::E),
            other => Err(format!("'{other}' is not a performance class (A-E)")),
        }
    }
}

impl fmt::Display for PerfClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single non-missing indicator value. Missingness is represented by the
/// absence of a `Value` (`Option<Value>`), never by zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Number(f64),
    Rank(u32),
    Class(PerfClass),
}

impl Value {
    /// Numeric reading of the value: ranks as given, classes quantified.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Number(x) => x,
            Value::Rank(r) => f64::from(r),
            Value::Class(c) => f64::from(c.quantified()),
        }
    }

    pub fn kind(&self) -> IndicatorKind {
        match self {
            Value::Number(_) => IndicatorKind::Numeric,
            Value::Rank(_) => IndicatorKind::Rank,
            Value::Class(_) => IndicatorKind::ClassAToE,
        }
    }

    /// Parse a non-empty cell according to the declared kind.
    pub fn parse(cell: &str, kind: IndicatorKind) -> Result<Value, String> {
        let cell = cell.trim();
        match kind {
            IndicatorKind::Numeric => {
                let x: f64 = cell
                    .parse()
                    .map_err(|_| format!("'{cell}' is not a number"))?;
                if !x.is_finite() {
                    return Err(format!("'{cell}' is not a finite number"));
                }
                Ok(Value::Number(x))
            }
            IndicatorKind::Rank => {
                let r: u32 = cell
                    .parse()
                    .map_err(|_| format!("'{cell}' is not a positive integer rank"))?;
                if r == 0 {
                    return Err("rank must be positive".to_string());
                }
                Ok(Value::Rank(r))
            }
            IndicatorKind::ClassAToE => cell.parse().map(Value::Class),
        }
    }

    /// Cell text; `Number` uses the shortest representation that parses back
    /// to the identical `f64`.
    pub fn to_cell(&self) -> String {
        match self {
            Value::Number(x) => format!("{x}"),
            Value::Rank(r) => r.to_string(),
            Value::Class(c) => c.as_str().to_string(),
        }
    }
}

/// Cell literals accepted as "missing" on input. Output always uses the empty cell.
pub fn is_missing_literal(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("n/a")
}

/// `system_id:indicator` reference to one indicator of one system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndicatorRef {
    pub system_id: String,
    pub indicator: String,
}

impl IndicatorRef {
    pub fn new(system_id: impl Into<String>, indicator: impl Into<String>) -> Self {
        Self {
            system_id: system_id.into(),
            indicator: indicator.into(),
        }
    }
}

impl fmt::Display for IndicatorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.system_id, self.indicator)
    }
}

impl FromStr for IndicatorRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some((sys, ind)) if !sys.trim().is_empty() && !ind.trim().is_empty() => {
                Ok(IndicatorRef::new(sys.trim(), ind.trim()))
            }
            _ => Err(format!("indicator reference '{s}' must look like system:indicator")),
        }
    }
}

impl Serialize for IndicatorRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IndicatorRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Stable identifier of a canonical institution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalId(pub String);

impl CanonicalId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CanonicalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CanonicalId {
    fn from(s: &str) -> Self {
        CanonicalId(s.to_string())
    }
}

/// Deduplicated institution as it appears in a linked corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalInstitution {
    pub id: CanonicalId,
    pub name: String,
    pub country: Country,
}
