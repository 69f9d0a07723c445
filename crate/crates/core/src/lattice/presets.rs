//! Named lattices and the lattice description file.
//!
//! ```json
//! {"preset": "D4"}
//! {"preset": "Zn", "dimension": 3}
//! {"dimension": 2, "generator": [[1.0, 0.0], [0.5, 0.866025403784]]}
//! ```

use serde::{Deserialize, Serialize};

use super::Lattice;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Zn(usize),
    /// Hexagonal lattice with basis `(1, 0), (1/2, √3/2)`.
    A2,
    /// Checkerboard lattice `{x ∈ Z^4 : Σx even}`.
    D4,
    /// Gosset lattice at unit volume.
    E8,
}

impl Preset {
    pub fn parse(name: &str, dimension: Option<usize>) -> Result<Self> {
        match name {
            "Zn" => match dimension {
                Some(n) if n > 0 => Ok(Preset::Zn(n)),
                _ => Err(Error::schema("dimension", "preset Zn needs a positive dimension")),
            },
            "A2" => Ok(Preset::A2),
            "D4" => Ok(Preset::D4),
            "E8" => Ok(Preset::E8),
            other => Err(Error::schema("preset", format!("unknown preset `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Zn(_) => "Zn",
            Preset::A2 => "A2",
            Preset::D4 => "D4",
            Preset::E8 => "E8",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Preset::Zn(n) => n,
            Preset::A2 => 2,
            Preset::D4 => 4,
            Preset::E8 => 8,
        }
    }

    pub fn basis(self) -> Vec<Vec<f64>> {
        match self {
            Preset::Zn(n) => (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            Preset::A2 => vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]],
            Preset::D4 => vec![
                vec![-1.0, -1.0, 0.0, 0.0],
                vec![1.0, -1.0, 0.0, 0.0],
                vec![0.0, 1.0, -1.0, 0.0],
                vec![0.0, 0.0, 1.0, -1.0],
            ],
            Preset::E8 => {
                let mut rows = vec![vec![0.0; 8]; 8];
                rows[0][0] = 2.0;
                for (i, row) in rows.iter_mut().enumerate().take(7).skip(1) {
                    row[i - 1] = -1.0;
                    row[i] = 1.0;
                }
                rows[7] = vec![0.5; 8];
                rows
            }
        }
    }

    pub fn lattice(self) -> Result<Lattice> {
        Lattice::new(self.basis())
    }

    /// Known normalized second moment `G(Λ)`.
    pub fn reference_nsm(self) -> f64 {
        match self {
            Preset::Zn(_) => 1.0 / 12.0,
            Preset::A2 => 5.0 / (36.0 * 3f64.sqrt()),
            Preset::D4 => 0.076_603_235,
            Preset::E8 => 929.0 / 12_960.0,
        }
    }
}

/// Lattice description: a preset name or an explicit generator, optionally scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl LatticeSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::schema("lattice", e.to_string()))
    }

    pub fn preset(preset: Preset) -> Self {
        LatticeSpec {
            preset: Some(preset.name().to_string()),
            dimension: matches!(preset, Preset::Zn(_)).then_some(preset.dimension()),
            generator: None,
            scale: None,
        }
    }

    pub fn build(&self) -> Result<Lattice> {
        let lat = match (&self.preset, &self.generator) {
            (Some(name), None) => {
                let p = Preset::parse(name, self.dimension)?;
                if let Some(d) = self.dimension {
                    if d != p.dimension() {
                        return Err(Error::schema("dimension", format!("{name} has dimension {}", p.dimension())));
                    }
                }
                p.lattice()?
            }
            (None, Some(rows)) => {
                if let Some(d) = self.dimension {
                    if d != rows.len() {
                        return Err(Error::schema("dimension", "does not match generator rows"));
                    }
                }
                Lattice::new(rows.clone()).map_err(|e| Error::schema("generator", e.to_string()))?
            }
            _ => return Err(Error::schema("preset", "give exactly one of `preset` or `generator`")),
        };
        match self.scale {
            None => Ok(lat),
            Some(a) if a > 0.0 && a.is_finite() => lat.scaled(a),
            Some(a) => Err(Error::schema("scale", format!("{a} is not positive"))),
        }
    }
}
