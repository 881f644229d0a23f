//! Model file schema `amerdual/1`.
//!
//! ```json
//! {"schema":"amerdual/1","name":"intro","horizon":2,
//!  "nodes":[{"id":"r","time":0,"parent":null,"assets":["0"]}, ...],
//!  "statics":[{"label":"g","payoff":{"p1":"1/2"},"price":"0"}],
//!  "american":{"1":{"p1":"1"}, "2":{"p1":"-inf"}}}
//! ```
//!
//! Rationals are written as `"p/q"` strings, floats as JSON numbers; both are
//! accepted on input. A date missing from `american` is not exercisable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AmericanPayoff, Market, MarketError, MarketSpec, NodeSpec, StaticSpec};
use crate::scalar::{parse_rational, Mode, Rational, Scalar};

pub const SCHEMA_V1: &str = "amerdual/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberJson {
    Text(String),
    Number(serde_json::Number),
}

impl NumberJson {
    pub fn to_rational(&self) -> Result<Rational, MarketError> {
        let text = match self {
            NumberJson::Text(s) => s.clone(),
            NumberJson::Number(n) => n.to_string(),
        };
        parse_rational(&text).map_err(|e| MarketError::Format(e.to_string()))
    }

    /// `None` for `"-inf"`.
    pub fn to_ext_rational(&self) -> Result<Option<Rational>, MarketError> {
        match self {
            NumberJson::Text(s) if s.trim() == "-inf" => Ok(None),
            NumberJson::Text(s) if s.trim() == "inf" || s.trim() == "+inf" => {
                Err(MarketError::Format("+inf payoff entries are not allowed".into()))
            }
            other => other.to_rational().map(Some),
        }
    }

    pub fn from_scalar<F: Scalar>(v: &F) -> Self {
        match F::MODE {
            Mode::ExactRational => NumberJson::Text(v.render()),
            Mode::Float64 => serde_json::Number::from_f64(v.to_f64())
                .map(NumberJson::Number)
                .unwrap_or_else(|| NumberJson::Text(v.render())),
        }
    }

    pub fn neg_inf() -> Self {
        NumberJson::Text("-inf".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: String,
    pub time: usize,
    #[serde(default)]
    pub parent: Option<String>,
    pub assets: Vec<NumberJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticJson {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    pub payoff: BTreeMap<String, NumberJson>,
    pub price: NumberJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub horizon: usize,
    pub nodes: Vec<NodeJson>,
    #[serde(default)]
    pub statics: Vec<StaticJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub american: Option<BTreeMap<String, BTreeMap<String, NumberJson>>>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, MarketError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| MarketError::Format(e.to_string()))?;
        if file.schema != SCHEMA_V1 {
            return Err(MarketError::Format(format!(
                "unsupported schema `{}` (expected `{SCHEMA_V1}`)",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn spec(&self) -> Result<MarketSpec<Rational>, MarketError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                Ok(NodeSpec {
                    id: n.id.clone(),
                    time: n.time,
                    parent: n.parent.clone(),
                    assets: n.assets.iter().map(NumberJson::to_rational).collect::<Result<_, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, MarketError>>()?;
        let statics = self
            .statics
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(StaticSpec {
                    label: if s.label.is_empty() { format!("g{}", i + 1) } else { s.label.clone() },
                    payoff: s
                        .payoff
                        .iter()
                        .map(|(k, v)| Ok((k.clone(), v.to_rational()?)))
                        .collect::<Result<_, MarketError>>()?,
                    price: s.price.to_rational()?,
                })
            })
            .collect::<Result<Vec<_>, MarketError>>()?;
        Ok(MarketSpec { name: self.name.clone(), horizon: self.horizon, nodes, statics })
    }

    pub fn market(&self) -> Result<Market<Rational>, MarketError> {
        Market::from_spec(&self.spec()?)
    }

    /// The American payoff, if the file has one.
    pub fn american(&self, m: &Market<Rational>) -> Result<Option<AmericanPayoff<Rational>>, MarketError> {
        let Some(dates) = &self.american else { return Ok(None) };
        let mut values = vec![vec![None; m.num_paths()]; m.horizon];
        for (key, row) in dates {
            let k: usize = key
                .parse()
                .map_err(|_| MarketError::Payoff(format!("exercise date `{key}` is not an integer")))?;
            if k == 0 || k > m.horizon {
                return Err(MarketError::Payoff(format!(
                    "exercise date {k} outside 1..={}",
                    m.horizon
                )));
            }
            for (path, v) in row {
                let p = m
                    .path_index(path)
                    .ok_or_else(|| MarketError::Payoff(format!("unknown path `{path}` at date {k}")))?;
                values[k - 1][p] = v.to_ext_rational()?;
            }
            for p in 0..m.num_paths() {
                if !row.contains_key(m.path_id(p)) {
                    return Err(MarketError::Payoff(format!(
                        "date {k} has no entry for path `{}`",
                        m.path_id(p)
                    )));
                }
            }
        }
        Ok(Some(AmericanPayoff::new(values)))
    }

    pub fn from_market<F: Scalar>(m: &Market<F>, phi: Option<&AmericanPayoff<F>>) -> Self {
        let spec = m.to_spec();
        let nodes = spec
            .nodes
            .iter()
            .map(|n| NodeJson {
                id: n.id.clone(),
                time: n.time,
                parent: n.parent.clone(),
                assets: n.assets.iter().map(NumberJson::from_scalar).collect(),
            })
            .collect();
        let statics = spec
            .statics
            .iter()
            .map(|s| StaticJson {
                label: s.label.clone(),
                payoff: s.payoff.iter().map(|(k, v)| (k.clone(), NumberJson::from_scalar(v))).collect(),
                price: NumberJson::from_scalar(&s.price),
            })
            .collect();
        let american = phi.map(|phi| {
            phi.values
                .iter()
                .enumerate()
                .filter(|(_, row)| row.iter().any(Option::is_some))
                .map(|(k, row)| {
                    let entries = row
                        .iter()
                        .enumerate()
                        .map(|(p, v)| {
                            let j = v.as_ref().map_or_else(NumberJson::neg_inf, NumberJson::from_scalar);
                            (m.path_id(p).to_string(), j)
                        })
                        .collect();
                    ((k + 1).to_string(), entries)
                })
                .collect()
        });
        ModelFile { schema: SCHEMA_V1.to_string(), name: m.name.clone(), horizon: m.horizon, nodes, statics, american }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trips_fixtures_with_payoffs() {
        for fx in fixtures::all() {
            let file = ModelFile::from_market(&fx.market, Some(&fx.payoff));
            let text = file.to_json_string();
            let back = ModelFile::parse(&text).unwrap();
            let m = back.market().unwrap();
            assert_eq!(m, fx.market, "{}", fx.name);
            assert_eq!(back.american(&m).unwrap().unwrap(), fx.payoff, "{}", fx.name);
        }
    }

    #[test]
    fn accepts_json_numbers_as_exact_decimals() {
        let text = r#"{"schema":"amerdual/1","horizon":1,
            "nodes":[{"id":"r","time":0,"parent":null,"assets":[0.5]},
                     {"id":"a","time":1,"parent":"r","assets":["1/4"]},
                     {"id":"b","time":1,"parent":"r","assets":[0.75]}],
            "statics":[{"payoff":{"a":1},"price":0.4}],
            "american":{"1":{"a":"-inf","b":2}}}"#;
        let f = ModelFile::parse(text).unwrap();
        let m = f.market().unwrap();
        assert_eq!(m.nodes[0].assets[0], Rational::ratio(1, 2));
        assert_eq!(m.statics[0].price, Rational::ratio(2, 5));
        let phi = f.american(&m).unwrap().unwrap();
        assert_eq!(phi.get(1, 0), &None);
        assert_eq!(phi.get(1, 1), &Some(Rational::ratio(2, 1)));
    }

    #[test]
    fn rejects_wrong_schema_and_missing_entries() {
        let bad = r#"{"schema":"other/2","horizon":1,"nodes":[]}"#;
        assert!(matches!(ModelFile::parse(bad), Err(MarketError::Format(_))));
        let text = r#"{"schema":"amerdual/1","horizon":1,
            "nodes":[{"id":"r","time":0,"assets":[0]},{"id":"a","time":1,"parent":"r","assets":[0]}],
            "american":{"1":{}}}"#;
        let f = ModelFile::parse(text).unwrap();
        let m = f.market().unwrap();
        assert!(matches!(f.american(&m), Err(MarketError::Payoff(_))));
    }
}
