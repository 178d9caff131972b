//! Regular grids and scalar fields sampled on them.
//!
//! Samples are stored flat in x-fastest order: the linear index of voxel
//! `(i, j, k)` is `i + nx * (j + ny * k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate axis of a [`Grid3`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    #[serde(default)]
    pub origin: [f64; 3],
}

impl Grid3 {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let grid = Grid3 {
            dims,
            spacing,
            origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Unit-spaced grid at the origin.
    pub fn unit(dims: [usize; 3]) -> Self {
        Grid3 {
            dims,
            spacing: [1.0; 3],
            origin: [0.0; 3],
        }
    }

    /// Checks the structural invariants. Degenerate (size-1) axes are
    /// permitted so that 1D and 2D slabs can flow through the same code;
    /// operations with stricter needs check them on their own.
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGrid(format!("zero dimension in {:?}", self.dims)));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Physical position of a voxel center.
    #[inline]
    pub fn position(&self, ijk: [usize; 3]) -> [f64; 3] {
        [
            self.origin[0] + ijk[0] as f64 * self.spacing[0],
            self.origin[1] + ijk[1] as f64 * self.spacing[1],
            self.origin[2] + ijk[2] as f64 * self.spacing[2],
        ]
    }

    /// Physical extent `n * spacing` along each axis.
    pub fn lengths(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    pub fn voxel_diagonal(&self) -> f64 {
        self.spacing.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Same sampling, ignoring origin.
    pub fn same_shape(&self, other: &Grid3) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid3,
    pub name: String,
    pub units: String,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid3, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        let name = name.into();
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field `{name}` has {} values for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: name, index });
        }
        Ok(ScalarField {
            grid,
            name,
            units: String::new(),
            values,
        })
    }

    pub fn from_fn(
        grid: Grid3,
        name: impl Into<String>,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.dims[2] {
            for j in 0..grid.dims[1] {
                for i in 0..grid.dims[0] {
                    values.push(f(i, j, k));
                }
            }
        }
        ScalarField {
            grid,
            name: name.into(),
            units: String::new(),
            values,
        }
    }

    pub fn constant(grid: Grid3, name: impl Into<String>, value: f64) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            name: name.into(),
            units: String::new(),
            values: vec![value; n],
        }
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    /// Copy of this field's metadata carrying new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.grid.len());
        ScalarField {
            grid: self.grid.clone(),
            name: self.name.clone(),
            units: self.units.clone(),
            values,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}
