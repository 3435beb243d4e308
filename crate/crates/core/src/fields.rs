//! Per-vertex and per-cell data living on a [`SampledManifold`].
//!
//! Fields do not borrow their manifold; every operation that combines a field
//! with a manifold checks the sizes first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::SampledManifold;
use crate::tensor::{Covector, SymTensor};

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, got })
    }
}

/// One finite real per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite field value at vertex {i}")));
        }
        Ok(ScalarField(values))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        ScalarField(values)
    }

    pub fn constant(m: &SampledManifold, c: f64) -> Self {
        ScalarField(vec![c; m.vertex_count()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        ScalarField::new(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn check_on(&self, m: &SampledManifold) -> Result<()> {
        check_len(m.vertex_count(), self.len())
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-cell constant covectors in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovectorField {
    dim: usize,
    components: Vec<Covector>,
}

impl CovectorField {
    pub fn new(dim: usize, components: Vec<Covector>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Dimension(format!("covector dimension {dim}")));
        }
        if components.iter().any(|w| !w[0].is_finite() || !w[1].is_finite()) {
            return Err(Error::Validation("non-finite covector component".into()));
        }
        if dim == 1 && components.iter().any(|w| w[1] != 0.0) {
            return Err(Error::Dimension("1-D covector with a second component".into()));
        }
        Ok(CovectorField { dim, components })
    }

    pub fn zeros(m: &SampledManifold) -> Self {
        CovectorField {
            dim: m.dim(),
            components: vec![[0.0, 0.0]; m.cell_count()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Covector] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn check_on(&self, m: &SampledManifold) -> Result<()> {
        if self.dim != m.dim() {
            return Err(Error::Dimension(format!(
                "covector field of dimension {} on a {}-manifold",
                self.dim,
                m.dim()
            )));
        }
        check_len(m.cell_count(), self.len())
    }
}

/// Per-cell symmetric bilinear forms; holds both g and the modified metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    dim: usize,
    tensors: Vec<SymTensor>,
}

impl MetricField {
    pub fn new(dim: usize, tensors: Vec<SymTensor>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Dimension(format!("metric dimension {dim}")));
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.dim() != dim {
                return Err(Error::Dimension(format!("cell {i} carries a {}-D tensor", t.dim())));
            }
            if !t.is_finite() {
                return Err(Error::Validation(format!("non-finite metric on cell {i}")));
            }
        }
        Ok(MetricField { dim, tensors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tensors(&self) -> &[SymTensor] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn check_on(&self, m: &SampledManifold) -> Result<()> {
        if self.dim != m.dim() {
            return Err(Error::Dimension(format!(
                "metric field of dimension {} on a {}-manifold",
                self.dim,
                m.dim()
            )));
        }
        check_len(m.cell_count(), self.len())
    }
}

impl std::ops::Index<usize> for MetricField {
    type Output = SymTensor;

    fn index(&self, i: usize) -> &SymTensor {
        &self.tensors[i]
    }
}

/// Per-vertex coordinates in `E^m`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMap {
    ambient_dim: usize,
    coords: Vec<f64>,
}

impl EmbeddingMap {
    pub fn new(ambient_dim: usize, coords: Vec<f64>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::Dimension("ambient dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(ambient_dim) {
            return Err(Error::Dimension(format!(
                "{} coordinates do not split into points of dimension {ambient_dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("non-finite embedding coordinate".into()));
        }
        Ok(EmbeddingMap { ambient_dim, coords })
    }

    pub fn from_points(ambient_dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != ambient_dim) {
            return Err(Error::Dimension(format!(
                "point of dimension {} in a map to E^{ambient_dim}",
                p.len()
            )));
        }
        EmbeddingMap::new(ambient_dim, points.concat())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / self.ambient_dim
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.coords[v * self.ambient_dim..(v + 1) * self.ambient_dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.ambient_dim)
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        dist(self.point(u), self.point(v))
    }

    pub fn check_on(&self, m: &SampledManifold) -> Result<()> {
        check_len(m.vertex_count(), self.vertex_count())
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
