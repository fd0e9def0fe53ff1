//! Sobolev preconditioner `(κK + σM)⁻¹` restricted to the free (non-Dirichlet) nodes.

use std::f64::consts::PI;

use crate::model::{radial_cell_coeff, CartesianGrid, Grid, RadialGrid};

#[derive(Debug, Clone)]
pub(crate) enum Preconditioner {
    Radial {
        grid: RadialGrid,
        cells: Vec<f64>,
        mass: Vec<f64>,
    },
    Cartesian {
        grid: CartesianGrid,
        sines: Vec<f64>,
        eig: Vec<f64>,
    },
}

impl Preconditioner {
    pub(crate) fn new(grid: &Grid) -> Self {
        match *grid {
            Grid::Radial(g) => {
                let cells = (0..g.n() - 1).map(|i| radial_cell_coeff(&g, i)).collect();
                Preconditioner::Radial {
                    grid: g,
                    cells,
                    mass: grid.weights(),
                }
            }
            Grid::Cartesian(g) => {
                let n = g.m() - 2;
                let np1 = (n + 1) as f64;
                let mut sines = vec![0.0; n * n];
                for j in 0..n {
                    for k in 0..n {
                        sines[j * n + k] = (PI * ((j + 1) * (k + 1)) as f64 / np1).sin();
                    }
                }
                let eig = (0..n)
                    .map(|j| 2.0 - 2.0 * (PI * (j + 1) as f64 / np1).cos())
                    .collect();
                Preconditioner::Cartesian {
                    grid: g,
                    sines,
                    eig,
                }
            }
        }
    }

    /// Solves `(κK + σM) z = rhs` on free nodes; Dirichlet entries of `z` are zero.
    pub(crate) fn apply(&self, kappa: f64, sigma: f64, rhs: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Radial { grid, cells, mass } => {
                radial_solve(grid.n() - 1, cells, mass, kappa, sigma, rhs)
            }
            Preconditioner::Cartesian { grid, sines, eig } => {
                cartesian_solve(grid, sines, eig, kappa, sigma, rhs)
            }
        }
    }
}

/// Thomas algorithm on the `free × free` tridiagonal block.
fn radial_solve(
    free: usize,
    cells: &[f64],
    mass: &[f64],
    kappa: f64,
    sigma: f64,
    rhs: &[f64],
) -> Vec<f64> {
    let diag = |i: usize| {
        let left = if i == 0 { 0.0 } else { cells[i - 1] };
        kappa * (left + cells[i]) + sigma * mass[i]
    };
    let off = |i: usize| -kappa * cells[i];
    let mut c = vec![0.0; free];
    let mut d = vec![0.0; free];
    let mut beta = diag(0);
    c[0] = off(0) / beta;
    d[0] = rhs[0] / beta;
    for i in 1..free {
        beta = diag(i) - off(i - 1) * c[i - 1];
        c[i] = if i + 1 < free { off(i) / beta } else { 0.0 };
        d[i] = (rhs[i] - off(i - 1) * d[i - 1]) / beta;
    }
    let mut z = vec![0.0; rhs.len()];
    z[free - 1] = d[free - 1];
    for i in (0..free - 1).rev() {
        z[i] = d[i] - c[i] * z[i + 1];
    }
    z
}

/// Applies the 1-D sine matrix along one axis of an `n³` interior block.
fn transform_axis(
    data: &mut [f64],
    n: usize,
    axis: usize,
    sines: &[f64],
    line: &mut [f64],
    out: &mut [f64],
) {
    let stride = [n * n, n, 1][axis];
    for a in 0..n {
        for b in 0..n {
            let base = match axis {
                0 => a * n + b,
                1 => a * n * n + b,
                _ => (a * n + b) * n,
            };
            for t in 0..n {
                line[t] = data[base + t * stride];
            }
            for j in 0..n {
                let row = &sines[j * n..(j + 1) * n];
                out[j] = row.iter().zip(line.iter()).map(|(s, x)| s * x).sum();
            }
            for t in 0..n {
                data[base + t * stride] = out[t];
            }
        }
    }
}

/// Interior operator is `κh·L₃ + σh³` with `L₃` the 7-point Laplacian, diagonal in the DST-I basis.
fn cartesian_solve(
    g: &CartesianGrid,
    sines: &[f64],
    eig: &[f64],
    kappa: f64,
    sigma: f64,
    rhs: &[f64],
) -> Vec<f64> {
    let m = g.m();
    let n = m - 2;
    let h = g.h();
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                data[(i * n + j) * n + k] = rhs[g.index(i + 1, j + 1, k + 1)];
            }
        }
    }
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    for axis in 0..3 {
        transform_axis(&mut data, n, axis, sines, &mut line, &mut out);
    }
    let norm = (2.0 / (n + 1) as f64).powi(3);
    let h3 = h * h * h;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lam = kappa * h * (eig[i] + eig[j] + eig[k]) + sigma * h3;
                data[(i * n + j) * n + k] *= norm / lam;
            }
        }
    }
    for axis in 0..3 {
        transform_axis(&mut data, n, axis, sines, &mut line, &mut out);
    }
    let mut z = vec![0.0; rhs.len()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                z[g.index(i + 1, j + 1, k + 1)] = data[(i * n + j) * n + k];
            }
        }
    }
    z
}
