//! Quadrature and the discrete gradient energy.
//!
//! The gradient energy is assembled edge by edge so that its derivative is
//! exactly `2·K·v` for the stiffness matrix applied by [`stiffness_apply`];
//! the discrete Laplacian is then `-M⁻¹K` with `M` the (diagonal) trapezoid
//! mass. On radial grids the last node also carries the exterior term
//! `4πR·v(R)²`, the Dirichlet energy of the harmonic extension `v(R)·R/r`
//! beyond the truncation radius. It vanishes for Dirichlet fields.

use std::f64::consts::PI;

use crate::error::{KgsError, Result};
use crate::model::field::{compensated_sum, Accumulator, Field};
use crate::model::grid::{CartesianGrid, Grid, RadialGrid};
use crate::model::params::KirchhoffParams;

/// Trapezoidal quadrature of `f` over the truncated domain.
pub fn integrate(f: &Field) -> f64 {
    let w = f.grid().weights();
    compensated_sum(w.iter().zip(f.values()).map(|(w, v)| w * v))
}

/// Quadrature inner product `∫ f·g`.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.ensure_same_grid(g)?;
    let w = f.grid().weights();
    Ok(compensated_sum(
        w.iter()
            .zip(f.values())
            .zip(g.values())
            .map(|((w, a), b)| w * a * b),
    ))
}

/// `∫|∇v|²` for the edge-based stencil.
pub fn grad_norm_sq(v: &Field) -> f64 {
    match v.grid() {
        Grid::Radial(g) => radial_grad_norm_sq(g, v.values()),
        Grid::Cartesian(g) => cartesian_grad_norm_sq(g, v.values()),
    }
}

/// `a·∫|∇v|² + ∫V v²`.
pub fn weighted_norm_sq(v: &Field, params: &KirchhoffParams, potential: &Field) -> Result<f64> {
    v.ensure_same_grid(potential)?;
    if let Some(i) = potential.values().iter().position(|&x| x <= 0.0) {
        return Err(KgsError::Domain(format!(
            "potential must be strictly positive, found {} at node {i}",
            potential.values()[i]
        )));
    }
    let w = v.grid().weights();
    let quad = compensated_sum(
        w.iter()
            .zip(v.values())
            .zip(potential.values())
            .map(|((w, x), p)| w * p * x * x),
    );
    Ok(params.a() * grad_norm_sq(v) + quad)
}

/// Returns `K·v`, so that `grad_norm_sq(v) = v·(K·v)` and `∂/∂v grad_norm_sq = 2K·v`.
pub fn stiffness_apply(v: &Field) -> Vec<f64> {
    match v.grid() {
        Grid::Radial(g) => radial_stiffness(g, v.values()),
        Grid::Cartesian(g) => cartesian_stiffness(g, v.values()),
    }
}

/// Discrete `-Δv = M⁻¹K·v`.
pub fn neg_laplacian(v: &Field) -> Field {
    let kv = stiffness_apply(v);
    let w = v.grid().weights();
    let values = kv.iter().zip(&w).map(|(k, w)| k / w).collect();
    Field::new(*v.grid(), values).expect("laplacian of a finite field is finite")
}

#[inline]
pub(crate) fn radial_cell_coeff(g: &RadialGrid, i: usize) -> f64 {
    let mid = 0.5 * (g.radius(i) + g.radius(i + 1));
    4.0 * PI * mid * mid / g.h()
}

fn radial_grad_norm_sq(g: &RadialGrid, v: &[f64]) -> f64 {
    let n = g.n();
    let mut acc = Accumulator::default();
    for i in 0..n - 1 {
        let d = v[i + 1] - v[i];
        acc.add(radial_cell_coeff(g, i) * d * d);
    }
    acc.add(4.0 * PI * g.r_dom() * v[n - 1] * v[n - 1]);
    acc.total()
}

fn radial_stiffness(g: &RadialGrid, v: &[f64]) -> Vec<f64> {
    let n = g.n();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let flux = radial_cell_coeff(g, i) * (v[i + 1] - v[i]);
        out[i] -= flux;
        out[i + 1] += flux;
    }
    out[n - 1] += 4.0 * PI * g.r_dom() * v[n - 1];
    out
}

#[inline]
fn trap(i: usize, m: usize) -> f64 {
    if i == 0 || i + 1 == m {
        0.5
    } else {
        1.0
    }
}

/// Visits every edge once as `(lower node, upper node, weight)`.
fn for_each_edge(g: &CartesianGrid, mut f: impl FnMut(usize, usize, f64)) {
    let m = g.m();
    let h = g.h();
    let strides = [m * m, m, 1];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let idx = g.index(i, j, k);
                let ijk = [i, j, k];
                for axis in 0..3 {
                    if ijk[axis] + 1 == m {
                        continue;
                    }
                    let t: f64 = (0..3)
                        .filter(|&d| d != axis)
                        .map(|d| trap(ijk[d], m))
                        .product();
                    f(idx, idx + strides[axis], h * t);
                }
            }
        }
    }
}

fn cartesian_grad_norm_sq(g: &CartesianGrid, v: &[f64]) -> f64 {
    let mut acc = Accumulator::default();
    for_each_edge(g, |p, q, c| {
        let d = v[q] - v[p];
        acc.add(c * d * d);
    });
    acc.total()
}

fn cartesian_stiffness(g: &CartesianGrid, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for_each_edge(g, |p, q, c| {
        let flux = c * (v[q] - v[p]);
        out[p] -= flux;
        out[q] += flux;
    });
    out
}
