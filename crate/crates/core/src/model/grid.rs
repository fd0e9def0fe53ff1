use std::f64::consts::PI;

use crate::error::{KgsError, Result};

/// Point in ℝ³. Radial nodes are reported on the positive x₁ axis.
pub type Coordinates = [f64; 3];

/// Uniform radial grid with nodes `r_i = i·h`, `i = 1..=n`, `h = R/n`.
///
/// The node at `r = R` carries the homogeneous Dirichlet value in solver
/// runs; the origin is not stored (regularity `v'(0) = 0` is imposed by a
/// zero-gradient first cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_dom: f64,
    n: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(r_dom: f64, n: usize) -> Result<Self> {
        if !(r_dom.is_finite() && r_dom > 0.0) {
            return Err(KgsError::Domain(format!(
                "radial domain must be positive, got {r_dom}"
            )));
        }
        if n < 2 {
            return Err(KgsError::Domain(format!(
                "radial grid needs at least 2 nodes, got {n}"
            )));
        }
        Ok(Self {
            r_dom,
            n,
            h: r_dom / n as f64,
        })
    }

    pub fn r_dom(&self) -> f64 {
        self.r_dom
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Radius of storage index `idx` (node `i = idx + 1`).
    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        if idx + 1 == self.n {
            self.r_dom
        } else {
            (idx + 1) as f64 * self.h
        }
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.radius(i))
    }

    /// Same spacing, domain scaled by `factor` (rounded to whole cells).
    pub fn enlarged(&self, factor: f64) -> Result<Self> {
        let n = ((self.n as f64) * factor).ceil() as usize;
        Self::new(n as f64 * self.h, n)
    }
}

/// Uniform Cartesian grid on `[-L, L]³` with `m` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid {
    half_width: f64,
    m: usize,
    h: f64,
}

impl CartesianGrid {
    pub fn new(half_width: f64, m: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(KgsError::Domain(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if m < 3 {
            return Err(KgsError::Domain(format!(
                "cartesian grid needs at least 3 nodes per axis, got {m}"
            )));
        }
        Ok(Self {
            half_width,
            m,
            h: 2.0 * half_width / (m - 1) as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along one axis.
    #[inline]
    pub fn axis(&self, i: usize) -> f64 {
        if i + 1 == self.m {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.h
        }
    }

    /// Row-major flat index, x slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.m + j) * self.m + k
    }

    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.m;
        let j = (idx / self.m) % self.m;
        let i = idx / (self.m * self.m);
        (i, j, k)
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Coordinates {
        let (i, j, k) = self.unflatten(idx);
        [self.axis(i), self.axis(j), self.axis(k)]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let last = self.m - 1;
        i == 0 || j == 0 || k == 0 || i == last || j == last || k == last
    }

    /// The same node lattice with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.half_width * factor, self.m)
    }
}

/// Either grid kind; fields carry one by value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Cartesian(CartesianGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.n(),
            Grid::Cartesian(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.h(),
            Grid::Cartesian(g) => g.h(),
        }
    }

    pub fn point(&self, idx: usize) -> Coordinates {
        match self {
            Grid::Radial(g) => [g.radius(idx), 0.0, 0.0],
            Grid::Cartesian(g) => g.point(idx),
        }
    }

    /// Distance of node `idx` from the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.radius(idx),
            Grid::Cartesian(g) => norm(g.point(idx)),
        }
    }

    /// Trapezoidal quadrature weights (with the 4πr² Jacobian on radial grids).
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Grid::Radial(g) => {
                let h = g.h();
                (0..g.n())
                    .map(|i| {
                        let r = g.radius(i);
                        let w = 4.0 * PI * r * r * h;
                        if i + 1 == g.n() {
                            0.5 * w
                        } else {
                            w
                        }
                    })
                    .collect()
            }
            Grid::Cartesian(g) => {
                let m = g.m();
                let h3 = g.h().powi(3);
                let f = |i: usize| if i == 0 || i + 1 == m { 0.5 } else { 1.0 };
                let mut w = Vec::with_capacity(g.len());
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            w.push(h3 * f(i) * f(j) * f(k));
                        }
                    }
                }
                w
            }
        }
    }

    /// `true` for nodes pinned by the homogeneous Dirichlet condition.
    pub fn dirichlet_mask(&self) -> Vec<bool> {
        match self {
            Grid::Radial(g) => (0..g.n()).map(|i| i + 1 == g.n()).collect(),
            Grid::Cartesian(g) => (0..g.len())
                .map(|idx| {
                    let (i, j, k) = g.unflatten(idx);
                    g.is_boundary(i, j, k)
                })
                .collect(),
        }
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}

impl From<CartesianGrid> for Grid {
    fn from(g: CartesianGrid) -> Self {
        Grid::Cartesian(g)
    }
}

pub fn norm(x: Coordinates) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

pub fn distance(x: Coordinates, y: Coordinates) -> f64 {
    norm([x[0] - y[0], x[1] - y[1], x[2] - y[2]])
}
