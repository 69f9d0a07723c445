//! JSON network description.
//!
//! ```json
//! {
//!   "vertices": 4,
//!   "source": 1,
//!   "destinations": [4],
//!   "mode": "gaussian",
//!   "edges": [{"from": 1, "to": 2, "power": 15.0}, ...]
//! }
//! ```
//!
//! Finite-field networks use `"mode": "finite-field"`, a prime `field_size`,
//! a nonzero `coeff` per edge and a `channels` object keyed by vertex id:
//! `{"2": {"type": "qsc", "q": 2, "eps": 0.02}}`. Channel types are `qsc`,
//! `identity` and `matrix` (explicit `rows` of `p(y|x)`). Unknown fields are
//! rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChannelModel, RelayNetwork, SOURCE};
use crate::error::{Error, Result};
use crate::finite_field::SymmetricDmc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub vertices: usize,
    #[serde(default = "default_source")]
    pub source: usize,
    pub destinations: Vec<usize>,
    pub mode: Mode,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<BTreeMap<String, ChannelSpec>>,
}

fn default_source() -> usize {
    SOURCE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Gaussian,
    FiniteField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// `q`-ary symmetric channel: correct with probability `1 - eps`, otherwise
    /// uniform over the other `q - 1` symbols.
    Qsc { q: u32, eps: f64 },
    Identity { q: u32 },
    Matrix { rows: Vec<Vec<f64>> },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<SymmetricDmc> {
        match self {
            ChannelSpec::Qsc { q, eps } => SymmetricDmc::qsc(*q as usize, *eps),
            ChannelSpec::Identity { q } => SymmetricDmc::identity(*q as usize),
            ChannelSpec::Matrix { rows } => SymmetricDmc::from_rows(rows.clone()),
        }
    }
}

impl NetworkSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::schema(field_hint(&e), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network spec serializes")
    }

    pub fn build(&self) -> Result<RelayNetwork> {
        if self.source != SOURCE {
            return Err(Error::schema("source", "the source must be vertex 1"));
        }
        match self.mode {
            Mode::Gaussian => {
                if self.field_size.is_some() {
                    return Err(Error::schema("field_size", "not used by gaussian networks"));
                }
                if self.channels.is_some() {
                    return Err(Error::schema("channels", "not used by gaussian networks"));
                }
                let mut edges = Vec::with_capacity(self.edges.len());
                for (i, e) in self.edges.iter().enumerate() {
                    if e.coeff.is_some() {
                        return Err(Error::schema(format!("edges[{i}].coeff"), "gaussian edges carry power"));
                    }
                    let p = e
                        .power
                        .ok_or_else(|| Error::schema(format!("edges[{i}].power"), "missing"))?;
                    edges.push((e.from, e.to, p));
                }
                RelayNetwork::gaussian(self.vertices, &self.destinations, &edges)
            }
            Mode::FiniteField => {
                let q = self
                    .field_size
                    .ok_or_else(|| Error::schema("field_size", "missing"))?;
                let mut edges = Vec::with_capacity(self.edges.len());
                for (i, e) in self.edges.iter().enumerate() {
                    if e.power.is_some() {
                        return Err(Error::schema(format!("edges[{i}].power"), "finite-field edges carry coeff"));
                    }
                    let c = e
                        .coeff
                        .ok_or_else(|| Error::schema(format!("edges[{i}].coeff"), "missing"))?;
                    edges.push((e.from, e.to, c));
                }
                let mut channels = BTreeMap::new();
                for (key, spec) in self.channels.iter().flatten() {
                    let v: usize = key
                        .parse()
                        .map_err(|_| Error::schema(format!("channels.{key}"), "key must be a vertex id"))?;
                    let ch = spec.build().map_err(|e| match e {
                        Error::InvalidArgument { message, .. } | Error::NotSymmetric(message) => {
                            Error::schema(format!("channels.{key}"), message)
                        }
                        other => other,
                    })?;
                    channels.insert(v, ch);
                }
                RelayNetwork::finite_field(self.vertices, &self.destinations, q, &edges, channels)
            }
        }
    }
}

fn field_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    // serde reports "unknown field `x`" / "missing field `x`"
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "document".to_string()
}

impl RelayNetwork {
    /// Parses and validates a JSON network description.
    pub fn from_json(text: &str) -> Result<Self> {
        NetworkSpec::parse(text)?.build()
    }

    /// A description that rebuilds this network.
    pub fn to_spec(&self) -> NetworkSpec {
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v) in &self.edges {
            edges.push(EdgeSpec {
                from: u,
                to: v,
                power: self.power(u, v),
                coeff: self.coefficient(u, v),
            });
        }
        let (mode, field_size, channels) = match &self.model {
            ChannelModel::Gaussian { .. } => (Mode::Gaussian, None, None),
            ChannelModel::FiniteField {
                field_size,
                channels,
                ..
            } => (
                Mode::FiniteField,
                Some(*field_size),
                Some(
                    channels
                        .iter()
                        .map(|(v, ch)| (v.to_string(), ChannelSpec::Matrix { rows: ch.rows().to_vec() }))
                        .collect(),
                ),
            ),
        };
        NetworkSpec {
            vertices: self.vertex_count,
            source: SOURCE,
            destinations: self.destinations.iter().collect(),
            mode,
            edges,
            field_size,
            channels,
        }
    }
}
