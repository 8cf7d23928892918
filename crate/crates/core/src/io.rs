//! JSON wire formats: BPS-structure files and `[re, im]` complex numbers.

use crate::bps::{format_rational, parse_rational, BpsStructure, Generator, Lattice, OmegaTable};
use crate::error::{Error, Result};
use crate::numerics::{c, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A BPS structure as stored on disk.
///
/// ```json
/// { "rank": 2, "skew": [[0, 1], [-1, 0]],
///   "central_charge": [[-0.5, 1.0], [0.5, 1.0]],
///   "omega": [{ "class": [1, 0], "value": "1" }, { "class": [-1, 0], "value": "1" }] }
/// ```
///
/// `omega` may instead name a generator, `{"generator": "a1" | "conifold" |
/// "a2", "params": {...}}`. The params may carry the central charges
/// (`z`; `v`, `w`; `z1`, `z2`) in place of `central_charge`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub central_charge: Vec<[f64; 2]>,
    pub omega: OmegaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Explicit(Vec<OmegaEntry>),
    Generator {
        generator: String,
        #[serde(default, skip_serializing_if = "Value::is_null")]
        params: Value,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaEntry {
    pub class: Vec<i64>,
    pub value: String,
}

pub fn to_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn from_pair(p: [f64; 2]) -> C64 {
    c(p[0], p[1])
}

/// A complex number from `[re, im]` or a bare real.
pub fn complex_from_value(v: &Value) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(c(x.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(a) if a.len() == 2 => match (a[0].as_f64(), a[1].as_f64()) {
            (Some(re), Some(im)) => Ok(c(re, im)),
            _ => Err(Error::InvalidInput(format!("not a complex number: {v}"))),
        },
        _ => Err(Error::InvalidInput(format!("not a complex number: {v}"))),
    }
}

fn param(params: &Value, key: &str) -> Result<C64> {
    let v = params.get(key).ok_or_else(|| Error::InvalidInput(format!("generator params lack {key:?}")))?;
    complex_from_value(v)
}

impl StructureFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("structure file: {e}")))
    }

    fn lattice(&self) -> Result<Lattice> {
        match &self.skew {
            Some(s) => {
                if s.len() != self.rank {
                    return Err(Error::Dimension(format!("skew form has {} rows for rank {}", s.len(), self.rank)));
                }
                Lattice::new(s.clone())
            }
            None => Ok(Lattice::trivial(self.rank)),
        }
    }

    fn charges(&self, params: &Value, keys: &[&str]) -> Result<Vec<C64>> {
        if !self.central_charge.is_empty() {
            return Ok(self.central_charge.iter().map(|&p| from_pair(p)).collect());
        }
        keys.iter().map(|k| param(params, k)).collect()
    }

    pub fn build(&self) -> Result<BpsStructure> {
        match &self.omega {
            OmegaSpec::Explicit(list) => {
                let z = self.charges(&Value::Null, &[])?;
                let table = list
                    .iter()
                    .map(|e| Ok((e.class.clone(), parse_rational(&e.value)?)))
                    .collect::<Result<Vec<_>>>()?;
                BpsStructure::new(self.lattice()?, z, OmegaTable::Explicit(table))
            }
            OmegaSpec::Generator { generator, params } => {
                let (g, keys): (Generator, &[&str]) = match generator.to_ascii_lowercase().as_str() {
                    "a1" => (Generator::A1, &["z"]),
                    "conifold" => (Generator::Conifold, &["v", "w"]),
                    "a2" => (Generator::A2, &["z1", "z2"]),
                    other => return Err(Error::InvalidInput(format!("unknown generator {other:?}"))),
                };
                let lattice = match (g, &self.skew) {
                    (Generator::A2, None) => Lattice::new(vec![vec![0, 1], vec![-1, 0]])?,
                    _ => self.lattice()?,
                };
                BpsStructure::new(lattice, self.charges(params, keys)?, OmegaTable::Generator(g))
            }
        }
    }

    /// The file form of `s`, listing active classes up to `cutoff`.
    pub fn from_structure(s: &BpsStructure, cutoff: Option<f64>) -> Result<Self> {
        let skew = s.lattice().skew().to_vec();
        let omega = match s.omega_table() {
            OmegaTable::Generator(g) => OmegaSpec::Generator {
                generator: match g {
                    Generator::A1 => "a1",
                    Generator::Conifold => "conifold",
                    Generator::A2 => "a2",
                }
                .to_string(),
                params: Value::Null,
            },
            _ => OmegaSpec::Explicit(
                s.active_classes(cutoff)?
                    .into_iter()
                    .map(|(class, w)| OmegaEntry { class, value: format_rational(w) })
                    .collect(),
            ),
        };
        Ok(StructureFile {
            rank: s.rank(),
            skew: Some(skew),
            central_charge: s.central_charges().iter().map(|&z| to_pair(z)).collect(),
            omega,
        })
    }
}

pub fn parse_structure(text: &str) -> Result<BpsStructure> {
    StructureFile::parse(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_round_trip() {
        let text = r#"{"rank": 2, "skew": [[0,1],[-1,0]], "central_charge": [[-0.5,1],[0.5,1]],
            "omega": [{"class":[1,0],"value":"1"},{"class":[-1,0],"value":"1"},
                      {"class":[0,1],"value":"1/2"},{"class":[0,-1],"value":"1/2"}]}"#;
        let s = parse_structure(text).unwrap();
        assert_eq!(s.omega(&[0, 1]), num_rational::Rational64::new(1, 2));
        let back = StructureFile::from_structure(&s, None).unwrap().build().unwrap();
        assert_eq!(back.active_classes(None).unwrap(), s.active_classes(None).unwrap());
    }

    #[test]
    fn generators_from_params() {
        let s =
            parse_structure(r#"{"rank":2,"omega":{"generator":"conifold","params":{"v":[0.3,0.5],"w":1}}}"#).unwrap();
        assert_eq!(s.central_charges()[1], c(1.0, 0.0));
        assert!(!s.is_finite());
        let a2 = parse_structure(r#"{"rank":2,"central_charge":[[1,0],[0,1]],"omega":{"generator":"a2"}}"#).unwrap();
        assert_eq!(a2.lattice().skew()[0][1], 1);
    }

    #[test]
    fn malformed_input() {
        assert_eq!(parse_structure("{").unwrap_err().code(), "INVALID_INPUT");
        let bad = r#"{"rank":1,"central_charge":[[1,0]],"omega":[{"class":[1],"value":"x"}]}"#;
        assert_eq!(parse_structure(bad).unwrap_err().code(), "INVALID_INPUT");
        let gen = r#"{"rank":1,"omega":{"generator":"e8"}}"#;
        assert_eq!(parse_structure(gen).unwrap_err().code(), "INVALID_INPUT");
    }
}
