//! Ground states on the Nehari manifold: constant, variable and truncated coefficients.

mod engine;
mod precond;

use rayon::prelude::*;

use crate::error::{KgsError, Result};
use crate::functional::EnergyFunctional;
use crate::model::{
    distance, CartesianGrid, Coordinates, Field, Grid, KirchhoffParams, RadialGrid,
};
use crate::potentials::{admissible_sets, check_conditions, PotentialTripleSpec};

pub use engine::{minimize_on_nehari, SolverOptions};

/// `V ≡ k`, `P ≡ τ`, `Q ≡ ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub k: f64,
    pub tau: f64,
    pub nu: f64,
}

impl ConstantCoefficients {
    pub fn new(k: f64, tau: f64, nu: f64) -> Result<Self> {
        for (name, x) in [("k", k), ("tau", tau), ("nu", nu)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(KgsError::Domain(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        Ok(Self { k, tau, nu })
    }

    /// `self` has level at most `other`'s: `k ≤ k'`, `τ ≥ τ'`, `ν ≥ ν'`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        other.k >= self.k && self.tau >= other.tau && self.nu >= other.nu
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateReport {
    pub field: Field,
    pub level: f64,
    pub nehari_residual: f64,
    /// `‖v‖²_ε` at the solution.
    pub norm_sq: f64,
    /// Max-norm of the Sobolev gradient `((a+bG)K + V_min·M)⁻¹∂J`, the stopping quantity.
    pub grad_sup: f64,
    /// Max-norm of the nodal residual `M⁻¹∂J` over free nodes.
    pub pde_residual_sup: f64,
    pub max_point: Coordinates,
    pub iterations: usize,
    pub converged: bool,
    /// Levels reached from the other multi-start seeds.
    pub alternate_levels: Vec<f64>,
    pub trace: Vec<f64>,
}

impl GroundStateReport {
    fn from_solution(
        f: &EnergyFunctional,
        field: Field,
        grad_sup: f64,
        pde_residual_sup: f64,
        iterations: usize,
        converged: bool,
        trace: Vec<f64>,
    ) -> Result<Self> {
        let m = f.moments(&field)?;
        let idx = argmax(field.values());
        Ok(Self {
            level: f.energy_of(&m),
            nehari_residual: f.nehari_residual_of(&m),
            norm_sq: f.norm_sq_of(&m),
            max_point: field.grid().point(idx),
            field,
            grad_sup,
            pde_residual_sup,
            iterations,
            converged,
            alternate_levels: Vec::new(),
            trace,
        })
    }
}

/// First index of the largest value.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in values.iter().enumerate() {
        if x > values[best] {
            best = i;
        }
    }
    best
}

/// `exp(−|x − c|²/w²)`; radial grids ignore `center`.
pub fn gaussian_seed(grid: impl Into<Grid>, center: Coordinates, width: f64) -> Result<Field> {
    let grid = grid.into();
    let c = match grid {
        Grid::Radial(_) => [0.0; 3],
        Grid::Cartesian(_) => center,
    };
    Field::from_fn(grid, |x| (-(distance(x, c) / width).powi(2)).exp())
}

pub const SEED_WIDTHS: [f64; 2] = [1.0, 2.0];

/// Runs one solve per seed width and keeps the lowest converged level.
pub fn multi_start(
    f: &EnergyFunctional,
    center: Coordinates,
    widths: &[f64],
    opts: &SolverOptions,
) -> Result<GroundStateReport> {
    let mut reports = Vec::with_capacity(widths.len());
    let mut last_err = None;
    for &w in widths {
        let seed = gaussian_seed(*f.grid(), center, w)?;
        match minimize_on_nehari(f, &seed, opts) {
            Ok(r) => reports.push(r),
            Err(e) => last_err = Some(e),
        }
    }
    if reports.is_empty() {
        return Err(last_err.unwrap_or_else(|| KgsError::Domain("no seed widths given".into())));
    }
    // Prefer converged runs, then the lower level.
    reports.sort_by(|x, y| {
        y.converged
            .cmp(&x.converged)
            .then(x.level.total_cmp(&y.level))
    });
    let mut best = reports.remove(0);
    best.alternate_levels = reports.iter().map(|r| r.level).collect();
    Ok(best)
}

/// The discrete `m*_{kτν}` on a radial grid.
pub fn solve_constant(
    cc: ConstantCoefficients,
    params: KirchhoffParams,
    grid: RadialGrid,
    opts: &SolverOptions,
) -> Result<GroundStateReport> {
    solve_constant_on(cc, params, grid, opts)
}

/// The constant-coefficient problem on any grid, seeded at the origin.
pub fn solve_constant_on(
    cc: ConstantCoefficients,
    params: KirchhoffParams,
    grid: impl Into<Grid>,
    opts: &SolverOptions,
) -> Result<GroundStateReport> {
    let f = EnergyFunctional::constant(params, grid, cc.k, cc.tau, cc.nu)?;
    multi_start(&f, [0.0; 3], &SEED_WIDTHS, opts)
}

/// Clamp levels for `V^c = max(c, V)`, `P^d = min(d, P)`, `Q^e = min(e, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevels {
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl TruncationLevels {
    pub fn new(c: f64, d: f64, e: f64, spec: &PotentialTripleSpec) -> Result<Self> {
        let (v, p, q) = (spec.v_limits(), spec.p_limits(), spec.q_limits());
        for (name, x, lo, hi) in [
            ("c", c, v.min, v.max),
            ("d", d, p.min, p.max),
            ("e", e, q.min, q.max),
        ] {
            if !(x >= lo && x <= hi) {
                return Err(KgsError::Domain(format!(
                    "truncation level {name} = {x} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { c, d, e })
    }

    /// `(V_min, P_max, Q_max)`: every clamp inactive.
    pub fn inactive(spec: &PotentialTripleSpec) -> Self {
        Self {
            c: spec.v_limits().min,
            d: spec.p_limits().max,
            e: spec.q_limits().max,
        }
    }
}

/// Physical grid on which the standing conditions and admissible sets are evaluated.
pub fn check_grid(spec: &PotentialTripleSpec) -> Result<CartesianGrid> {
    CartesianGrid::new(2.0 * spec.r_cond, 41)
}

/// The rescaled functional `J_ε` on `grid`, optionally with clamped coefficients.
pub fn variable_functional(
    params: KirchhoffParams,
    spec: &PotentialTripleSpec,
    epsilon: f64,
    grid: CartesianGrid,
    truncation: Option<TruncationLevels>,
) -> Result<EnergyFunctional> {
    let (v, p, q) = spec.sample(grid, epsilon)?;
    let (v, p, q) = match truncation {
        None => (v, p, q),
        Some(t) => (
            v.map(|x| x.max(t.c))?,
            p.map(|x| x.min(t.d))?,
            q.map(|x| x.min(t.e))?,
        ),
    };
    EnergyFunctional::new(params, v, p, q)
}

/// Rescaled seed center: the discrete `x*` of whichever condition pair holds, divided by `ε`.
pub fn seed_center(
    spec: &PotentialTripleSpec,
    epsilon: f64,
    grid: &CartesianGrid,
) -> Result<Coordinates> {
    let check = check_grid(spec)?;
    let report = check_conditions(spec, &check)?;
    let sets = admissible_sets(spec, &check, None)?;
    let x = if report.pq_holds() {
        sets.x_star_pq
    } else if report.vq_holds() {
        sets.x_star_vq
    } else {
        return Err(KgsError::Precondition(
            "the potential triple satisfies neither (PQ1)+(PQ2) nor (VQ1)+(VQ2)".into(),
        ));
    };
    let x = check.point(x.expect("condition pair holds only with a witness"));
    let c = [x[0] / epsilon, x[1] / epsilon, x[2] / epsilon];
    let l = grid.half_width();
    if c.iter().any(|t| t.abs() >= l) {
        return Err(KgsError::Precondition(format!(
            "rescaled candidate point {c:?} lies outside the box of half width {l}"
        )));
    }
    Ok(c)
}

/// The discrete `c_ε` on the rescaled box.
pub fn solve_variable(
    params: KirchhoffParams,
    spec: &PotentialTripleSpec,
    epsilon: f64,
    grid: CartesianGrid,
    opts: &SolverOptions,
) -> Result<GroundStateReport> {
    let center = seed_center(spec, epsilon, &grid)?;
    let f = variable_functional(params, spec, epsilon, grid, None)?;
    multi_start(&f, center, &SEED_WIDTHS, opts)
}

/// The discrete `c^{cde}_ε` with clamped coefficients.
pub fn solve_truncated(
    levels: TruncationLevels,
    params: KirchhoffParams,
    spec: &PotentialTripleSpec,
    epsilon: f64,
    grid: CartesianGrid,
    opts: &SolverOptions,
) -> Result<GroundStateReport> {
    let center = seed_center(spec, epsilon, &grid)?;
    let f = variable_functional(params, spec, epsilon, grid, Some(levels))?;
    multi_start(&f, center, &SEED_WIDTHS, opts)
}

/// Shifts a Cartesian field by whole nodes, filling with zeros.
pub fn shift_nodes(field: &Field, offset: [i64; 3]) -> Result<Field> {
    let g = field
        .cartesian_grid()
        .ok_or_else(|| KgsError::Structural("node shifts need a Cartesian field".into()))?;
    let m = g.m() as i64;
    let mut out = vec![0.0; g.len()];
    for (idx, &x) in field.values().iter().enumerate() {
        let (i, j, k) = g.unflatten(idx);
        let (a, b, c) = (
            i as i64 + offset[0],
            j as i64 + offset[1],
            k as i64 + offset[2],
        );
        if (0..m).contains(&a) && (0..m).contains(&b) && (0..m).contains(&c) {
            out[g.index(a as usize, b as usize, c as usize)] = x;
        }
    }
    for (x, fixed) in out.iter_mut().zip(Grid::Cartesian(g).dirichlet_mask()) {
        if fixed {
            *x = 0.0;
        }
    }
    Field::new(g, out)
}

/// `max_t J_ε(t·v_y(· − y/ε))` for a constant-problem profile translated to the
/// rescaled point `y/ε` (rounded to the nearest node offset).
pub fn translated_ray_bound(
    f: &EnergyFunctional,
    profile: &Field,
    y: Coordinates,
    epsilon: f64,
) -> Result<f64> {
    let g = profile.cartesian_grid().ok_or_else(|| {
        KgsError::Structural("translated witnesses need a Cartesian field".into())
    })?;
    let offset = y.map(|t| (t / epsilon / g.h()).round() as i64);
    f.ray_maximum(&shift_nodes(profile, offset)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelPair {
    /// Index of the triple with the smaller predicted level.
    pub lower: usize,
    pub upper: usize,
    /// `m*(upper) − m*(lower)`, non-negative when ordered.
    pub gap: f64,
    /// The triples differ, so the ordering must be strict.
    pub strict: bool,
    pub violation: bool,
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub lattice: Vec<ConstantCoefficients>,
    pub levels: Vec<f64>,
    pub converged: Vec<bool>,
    pub pairs: Vec<LevelPair>,
    pub tolerance: f64,
}

impl MonotonicityReport {
    pub fn violations(&self) -> impl Iterator<Item = &LevelPair> {
        self.pairs.iter().filter(|p| p.violation)
    }

    pub fn is_consistent(&self) -> bool {
        self.violations().next().is_none() && self.converged.iter().all(|&c| c)
    }
}

/// Solves every lattice point and checks `m*` along all comparable pairs.
/// A pair violates when it is out of order by more than `2·tol`, or, for
/// distinct triples, when its gap does not exceed `2·tol`.
pub fn compare_levels(
    lattice: &[ConstantCoefficients],
    params: KirchhoffParams,
    grid: RadialGrid,
    opts: &SolverOptions,
) -> Result<MonotonicityReport> {
    let reports: Vec<GroundStateReport> = lattice
        .par_iter()
        .map(|&cc| solve_constant(cc, params, grid, opts))
        .collect::<Result<_>>()?;
    let levels: Vec<f64> = reports.iter().map(|r| r.level).collect();
    let tolerance = 2.0 * opts.tol;
    let mut pairs = Vec::new();
    for (i, lo) in lattice.iter().enumerate() {
        for (j, hi) in lattice.iter().enumerate() {
            if i == j || !lo.dominated_by(hi) {
                continue;
            }
            let strict = lo != hi;
            if !strict && j < i {
                continue;
            }
            let gap = levels[j] - levels[i];
            let violation = if strict {
                gap <= tolerance
            } else {
                gap.abs() > tolerance
            };
            pairs.push(LevelPair {
                lower: i,
                upper: j,
                gap,
                strict,
                violation,
            });
        }
    }
    Ok(MonotonicityReport {
        lattice: lattice.to_vec(),
        converged: reports.iter().map(|r| r.converged).collect(),
        levels,
        pairs,
        tolerance,
    })
}

/// `{0.5, 1, 2}³`.
pub fn default_lattice() -> Vec<ConstantCoefficients> {
    let vals = [0.5, 1.0, 2.0];
    let mut out = Vec::with_capacity(27);
    for &k in &vals {
        for &tau in &vals {
            for &nu in &vals {
                out.push(ConstantCoefficients { k, tau, nu });
            }
        }
    }
    out
}
