use crate::error::{KgsError, Result};
use crate::model::grid::{CartesianGrid, Coordinates, Grid, RadialGrid};

/// Nodal values on a grid. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: impl Into<Grid>, values: Vec<f64>) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.len() {
            return Err(KgsError::Structural(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(KgsError::Structural(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: impl Into<Grid>) -> Self {
        let grid = grid.into();
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: impl Into<Grid>, value: f64) -> Self {
        let grid = grid.into();
        Self {
            values: vec![value; grid.len()],
            grid,
        }
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: impl Into<Grid>, f: impl Fn(Coordinates) -> f64) -> Result<Self> {
        let grid = grid.into();
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn radial_from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.radii().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn radial_grid(&self) -> Option<RadialGrid> {
        match self.grid {
            Grid::Radial(g) => Some(g),
            Grid::Cartesian(_) => None,
        }
    }

    pub fn cartesian_grid(&self) -> Option<CartesianGrid> {
        match self.grid {
            Grid::Cartesian(g) => Some(g),
            Grid::Radial(_) => None,
        }
    }

    /// New field on the same grid with `f` applied to each value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(KgsError::Structural(
                "fields live on different grids".into(),
            ));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Accumulator::default();
    for x in it {
        acc.add(x);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch_and_nan() {
        let g = RadialGrid::new(1.0, 10).unwrap();
        assert!(matches!(
            Field::new(g, vec![0.0; 9]),
            Err(KgsError::Structural(_))
        ));
        let mut v = vec![0.0; 10];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(KgsError::Structural(_))));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(xs);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
