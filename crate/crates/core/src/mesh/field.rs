use crate::error::{Result, SplError};

use super::Mesh;

/// Nodal coefficient vector of a P1 function on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    zero_boundary: bool,
}

impl Field {
    pub fn zeros(mesh: &Mesh) -> Self {
        Field {
            values: vec![0.0; mesh.node_count()],
            zero_boundary: true,
        }
    }

    /// Wraps arbitrary nodal values; `zero_boundary` records membership in X.
    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(SplError::invalid(
                "field",
                format!("expected {} nodal values, got {}", mesh.node_count(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SplError::invalid("field", format!("non-finite value at node {i}")));
        }
        let zero_boundary = (0..values.len()).all(|i| !mesh.is_boundary(i) || values[i] == 0.0);
        Ok(Field { values, zero_boundary })
    }

    /// Field in X: boundary values are forced to zero.
    pub fn in_space(mesh: &Mesh, mut values: Vec<f64>) -> Result<Self> {
        if values.len() == mesh.node_count() {
            for (i, v) in values.iter_mut().enumerate() {
                if mesh.is_boundary(i) {
                    *v = 0.0;
                }
            }
        }
        Self::from_values(mesh, values)
    }

    /// Nodal interpolant of `f`, with zero boundary values.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.node_count())
            .map(|i| if mesh.is_boundary(i) { 0.0 } else { f(mesh.point(i)) })
            .collect();
        Field {
            values,
            zero_boundary: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn zero_boundary(&self) -> bool {
        self.zero_boundary
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| c * v).collect(),
            zero_boundary: self.zero_boundary,
        }
    }

    /// Minimum over interior nodes.
    pub fn interior_min(&self, mesh: &Mesh) -> f64 {
        mesh.interior_nodes().map(|i| self.values[i]).fold(f64::INFINITY, f64::min)
    }

    /// Largest max(other - self, 0) over all nodes; zero iff self ≥ other.
    pub fn shortfall_below(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (b - a).max(0.0)).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}
