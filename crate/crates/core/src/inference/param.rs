use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the parameter space, p >= 1 finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("parameter point must have at least one coordinate"));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite parameter coordinate {x}")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Compact hyper-rectangle `[lower, upper]` of the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    lower: ParamPoint,
    upper: ParamPoint,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let lower = ParamPoint::new(lower)?;
        let upper = ParamPoint::new(upper)?;
        if lower.dim() != upper.dim() {
            return Err(Error::invalid("box bounds have different dimensions"));
        }
        for (i, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if lo >= hi {
                return Err(Error::invalid(format!(
                    "box coordinate {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    /// True when `other` lies inside `self` (boundaries may touch).
    pub fn contains_box(&self, other: &ParamBox) -> bool {
        self.contains(other.lower()) && self.contains(other.upper())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(self.upper.iter())) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Intersection with another box, `None` when empty.
    pub fn intersect(&self, other: &ParamBox) -> Option<ParamBox> {
        let lower: Vec<f64> = self
            .lower
            .iter()
            .zip(other.lower.iter())
            .map(|(a, b)| a.max(*b))
            .collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(other.upper.iter())
            .map(|(a, b)| a.min(*b))
            .collect();
        ParamBox::new(lower, upper).ok()
    }
}
