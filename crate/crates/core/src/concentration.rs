//! ε-sweeps: maximum points, distance to the admissible set, exponential decay
//! of `u_ε` and convergence of the rescaled profile `ũ_ε(x) = u_ε(εx + x̃_ε)`.
//!
//! Each solve runs on a fixed rescaled box `[-L, L]³`; the physical field
//! `u_ε(x) = v_ε(x/ε)` carries the same node values on `[-εL, εL]³`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{KgsError, Result};
use crate::groundstate::{
    argmax, check_grid, solve_constant_on, solve_variable, ConstantCoefficients, SolverOptions,
};
use crate::model::{
    distance, grad_norm_sq, integrate, CartesianGrid, Coordinates, Field, Grid, KirchhoffParams,
};
use crate::potentials::{admissible_sets, check_conditions, PotentialTripleSpec};

/// Node of largest value; ties go to the lexicographically smallest index triple.
pub fn max_point(u: &Field) -> Coordinates {
    u.grid().point(argmax(u.values()))
}

/// `u ≈ C·exp(−rate·|x − x_ε|)` in the least-squares sense on `log u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Root-mean-square residual of the line fit, in log units.
    pub residual: f64,
    pub nodes: usize,
}

/// Fewer usable nodes than this is an error.
pub const MIN_FIT_NODES: usize = 10;
const FIT_FLOOR: f64 = 1e-14;

/// Fits every node with `|x − x_ε| ≥ r_min` and `u > 1e−14`.
pub fn decay_fit(u: &Field, x_eps: Coordinates, r_min: f64) -> Result<DecayFit> {
    decay_fit_window(u, x_eps, r_min, f64::INFINITY)
}

/// As [`decay_fit`], restricted to `r_min ≤ |x − x_ε| ≤ r_max`.
pub fn decay_fit_window(u: &Field, x_eps: Coordinates, r_min: f64, r_max: f64) -> Result<DecayFit> {
    if !(r_min.is_finite() && r_min >= 0.0 && r_max > r_min) {
        return Err(KgsError::Domain(format!(
            "decay window [{r_min}, {r_max}] is empty or invalid"
        )));
    }
    let grid = u.grid();
    let samples: Vec<(f64, f64)> = u
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| {
            let r = distance(grid.point(i), x_eps);
            (r >= r_min && r <= r_max && x > FIT_FLOOR).then(|| (r, x.ln()))
        })
        .collect();
    let n = samples.len();
    if n < MIN_FIT_NODES {
        return Err(KgsError::InsufficientData(format!(
            "{n} nodes in the decay window [{r_min}, {r_max}], need {MIN_FIT_NODES}"
        )));
    }
    let nf = n as f64;
    let (mr, my) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), (r, y)| (a + r / nf, b + y / nf));
    let (sxx, sxy) = samples.iter().fold((0.0, 0.0), |(a, b), (r, y)| {
        (a + (r - mr) * (r - mr), b + (r - mr) * (y - my))
    });
    if sxx <= 0.0 {
        return Err(KgsError::InsufficientData(
            "all fitted nodes sit at one distance".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mr;
    let sse: f64 = samples
        .iter()
        .map(|(r, y)| (y - intercept - slope * r).powi(2))
        .sum();
    Ok(DecayFit {
        amplitude: intercept.exp(),
        rate: -slope,
        residual: (sse / nf).sqrt(),
        nodes: n,
    })
}

/// Largest distance from `center` to a node where `u` is at least half its maximum.
pub fn half_width(u: &Field, center: Coordinates) -> f64 {
    let half = 0.5 * u.max_abs();
    let grid = u.grid();
    u.values()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= half)
        .map(|(i, _)| distance(grid.point(i), center))
        .fold(0.0, f64::max)
}

/// Cell index and fraction of `x` along one axis, snapping near-nodes onto the node.
fn locate(g: &CartesianGrid, x: f64) -> Option<(usize, f64)> {
    let mut t = (x + g.half_width()) / g.h();
    let nearest = t.round();
    if (t - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        t = nearest;
    }
    let last = (g.m() - 1) as f64;
    if !(0.0..=last).contains(&t) {
        return None;
    }
    let i = (t.floor() as usize).min(g.m() - 2);
    Some((i, t - i as f64))
}

/// Samples `u` at `ε·y + x̃` for every node `y` of `target`, trilinearly.
pub fn rescaled_profile(
    u: &Field,
    epsilon: f64,
    x_tilde: Coordinates,
    target: CartesianGrid,
) -> Result<Field> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(KgsError::Domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let g = u
        .cartesian_grid()
        .ok_or_else(|| KgsError::Structural("rescaling needs a Cartesian field".into()))?;
    let vals = u.values();
    let mut out = Vec::with_capacity(target.len());
    for idx in 0..target.len() {
        let y = target.point(idx);
        let z = [0, 1, 2].map(|d| epsilon * y[d] + x_tilde[d]);
        let cells = [0, 1, 2].map(|d| locate(&g, z[d]));
        let [Some((i, fx)), Some((j, fy)), Some((k, fz))] = cells else {
            return Err(KgsError::Domain(format!(
                "rescaled point {z:?} lies outside the field's box of half width {}",
                g.half_width()
            )));
        };
        let mut acc = 0.0;
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
                    let w = wx * wy * wz;
                    if w != 0.0 {
                        acc += w * vals[g.index(i + di, j + dj, k + dk)];
                    }
                }
            }
        }
        out.push(acc);
    }
    Field::new(target, out)
}

/// `(∫|∇(f−g)|² + ∫(f−g)²)^{1/2}` on the common grid.
pub fn h1_distance(f: &Field, g: &Field) -> Result<f64> {
    let d = f.zip_map(g, |a, b| a - b)?;
    let sq = d.map(|x| x * x)?;
    Ok((grad_norm_sq(&d) + integrate(&sq)).sqrt())
}

/// Rescaled box shared by every solve in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub half_width: f64,
    pub nodes: usize,
}

pub const MAX_SWEEP_NODES: usize = 96;

impl SweepGrid {
    pub fn new(half_width: f64, nodes: usize) -> Result<Self> {
        if nodes > MAX_SWEEP_NODES {
            return Err(KgsError::Domain(format!(
                "at most {MAX_SWEEP_NODES} nodes per axis, got {nodes}"
            )));
        }
        if nodes < 9 {
            return Err(KgsError::Domain(format!(
                "a sweep needs at least 9 nodes per axis, got {nodes}"
            )));
        }
        CartesianGrid::new(half_width, nodes)?;
        Ok(Self { half_width, nodes })
    }

    pub fn solve_grid(&self) -> CartesianGrid {
        CartesianGrid::new(self.half_width, self.nodes).expect("validated on construction")
    }

    /// Centered subgrid of about half the width with the same spacing, so that
    /// shifts by a solve-grid node land on nodes.
    pub fn profile_grid(&self) -> CartesianGrid {
        let g = self.solve_grid();
        let cells = (self.nodes - 1) / 4;
        CartesianGrid::new(cells as f64 * g.h(), 2 * cells + 1).expect("at least two cells")
    }
}

/// Which admissible set the distance column refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSet {
    AV,
    AP,
}

#[derive(Debug, Clone)]
pub struct ConcentrationRecord {
    pub epsilon: f64,
    pub x_eps: Coordinates,
    pub dist_av: f64,
    pub decay_amplitude: f64,
    /// `ε·rate`, the constant `c` in `C·exp(−(c/ε)|x − x_ε|)`.
    pub decay_c: f64,
    pub decay_residual: f64,
    pub profile_dist: f64,
    pub level: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Physical node spacing of `u_ε`.
    pub h: f64,
    /// `u_ε` on the physical box.
    pub field: Field,
}

impl ConcentrationRecord {
    /// Physical decay rate `c/ε`.
    pub fn decay_rate(&self) -> f64 {
        self.decay_c / self.epsilon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub epsilon: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub records: Vec<ConcentrationRecord>,
    pub failures: Vec<SweepFailure>,
    pub reference: ReferenceSet,
    /// Limit point: the maximum point at the smallest solved `ε`.
    pub x0: Coordinates,
    pub limit: ConstantCoefficients,
    pub limit_level: f64,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str =
        "epsilon,x1,x2,x3,dist_AV,decay_C,decay_c,profile_dist,level,iterations";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let [x1, x2, x3] = r.x_eps;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                x1,
                x2,
                x3,
                r.dist_av,
                r.decay_amplitude,
                r.decay_c,
                r.profile_dist,
                r.level,
                r.iterations
            );
        }
        s
    }
}

struct Solved {
    epsilon: f64,
    field: Field,
    x_eps: Coordinates,
    fit: DecayFit,
    level: f64,
    iterations: usize,
    converged: bool,
}

fn solve_one(
    params: KirchhoffParams,
    spec: &PotentialTripleSpec,
    epsilon: f64,
    grid: &SweepGrid,
    opts: &SolverOptions,
) -> Result<Solved> {
    let solve_grid = grid.solve_grid();
    let report = solve_variable(params, spec, epsilon, solve_grid, opts)?;
    let field = Field::new(solve_grid.scaled(epsilon)?, report.field.into_values())?;
    let x_eps = max_point(&field);
    let r_min = 2.0 * half_width(&field, x_eps);
    let r_max = 0.75 * epsilon * grid.half_width;
    let fit = decay_fit_window(&field, x_eps, r_min, r_max)?;
    Ok(Solved {
        epsilon,
        field,
        x_eps,
        fit,
        level: report.level,
        iterations: report.iterations,
        converged: report.converged,
    })
}

/// Solves at every `ε` (concurrently), then assembles the records in order.
/// A failed `ε` is recorded in `failures` and the sweep continues.
pub fn epsilon_sweep(
    params: KirchhoffParams,
    spec: &PotentialTripleSpec,
    eps_list: &[f64],
    grid: SweepGrid,
    opts: &SolverOptions,
) -> Result<SweepReport> {
    if eps_list.is_empty() {
        return Err(KgsError::Domain("empty epsilon list".into()));
    }
    if eps_list.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(KgsError::Domain(format!(
            "every epsilon must be positive: {eps_list:?}"
        )));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(KgsError::Domain(format!(
            "epsilon list must be strictly decreasing: {eps_list:?}"
        )));
    }
    let check = check_grid(spec)?;
    let conditions = check_conditions(spec, &check)?;
    let sets = admissible_sets(spec, &check, None)?;
    let (reference, nodes) = if conditions.pq_holds() {
        (ReferenceSet::AV, sets.a_v.clone())
    } else if conditions.vq_holds() {
        (ReferenceSet::AP, sets.a_p.clone())
    } else {
        return Err(KgsError::Precondition(
            "the potential triple satisfies neither (PQ1)+(PQ2) nor (VQ1)+(VQ2)".into(),
        ));
    };
    let nodes = nodes
        .ok_or_else(|| KgsError::Inconsistency("the reference admissible set is empty".into()))?;

    let outcomes: Vec<Result<Solved>> = eps_list
        .par_iter()
        .map(|&e| solve_one(params, spec, e, &grid, opts))
        .collect();
    let mut solved = Vec::new();
    let mut failures = Vec::new();
    for (&epsilon, outcome) in eps_list.iter().zip(outcomes) {
        match outcome {
            Ok(s) => solved.push(s),
            Err(e) => failures.push(SweepFailure {
                epsilon,
                message: e.to_string(),
            }),
        }
    }
    let last = solved.last().ok_or_else(|| KgsError::NonConvergence {
        reason: "every epsilon in the sweep failed".into(),
        trace: vec![],
    })?;

    let x0 = last.x_eps;
    let limit = ConstantCoefficients::new(spec.v.eval(x0), spec.p.eval(x0), spec.q.eval(x0))?;
    let limit_state = solve_constant_on(limit, params, grid.solve_grid(), opts)?;
    let target = grid.profile_grid();
    let limit_profile = rescaled_profile(&limit_state.field, 1.0, [0.0; 3], target)?;

    let mut records = Vec::with_capacity(solved.len());
    for s in solved {
        let profile = match rescaled_profile(&s.field, s.epsilon, s.x_eps, target) {
            Ok(p) => p,
            Err(e) => {
                failures.push(SweepFailure {
                    epsilon: s.epsilon,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let h = match s.field.grid() {
            Grid::Cartesian(g) => g.h(),
            Grid::Radial(g) => g.h(),
        };
        records.push(ConcentrationRecord {
            epsilon: s.epsilon,
            x_eps: s.x_eps,
            dist_av: sets.distance_to(&nodes, s.x_eps),
            decay_amplitude: s.fit.amplitude,
            decay_c: s.fit.rate * s.epsilon,
            decay_residual: s.fit.residual,
            profile_dist: h1_distance(&profile, &limit_profile)?,
            level: s.level,
            iterations: s.iterations,
            converged: s.converged,
            h,
            field: s.field,
        });
    }
    failures.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    Ok(SweepReport {
        records,
        failures,
        reference,
        x0,
        limit,
        limit_level: limit_state.level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::norm;

    fn grid(l: f64, m: usize) -> CartesianGrid {
        CartesianGrid::new(l, m).unwrap()
    }

    #[test]
    fn max_point_finds_the_bump() {
        let g = grid(2.0, 21);
        let c = g.point(g.index(12, 7, 9));
        let u = Field::from_fn(g, |x| (-distance(x, c).powi(2)).exp()).unwrap();
        assert_eq!(max_point(&u), c);
    }

    #[test]
    fn max_point_ties_go_to_the_smaller_index() {
        let g = grid(1.0, 5);
        let mut vals = vec![0.0; g.len()];
        vals[g.index(3, 0, 1)] = 2.0;
        vals[g.index(1, 4, 4)] = 2.0;
        let u = Field::new(g, vals).unwrap();
        assert_eq!(max_point(&u), g.point(g.index(1, 4, 4)));
    }

    #[test]
    fn pure_exponential_is_recovered() {
        let u = Field::from_fn(grid(4.0, 41), |x| (-3.0 * norm(x)).exp()).unwrap();
        let fit = decay_fit(&u, [0.0; 3], 0.5).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-3);
        assert!((fit.amplitude - 1.0).abs() < 1e-3);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn polynomial_prefactor_biases_the_rate_down() {
        let u =
            Field::from_fn(grid(8.0, 41), |x| (1.0 + norm(x)) * (-2.0 * norm(x)).exp()).unwrap();
        let fit = decay_fit(&u, [0.0; 3], 3.0).unwrap();
        assert!(fit.rate >= 1.8 && fit.rate <= 2.0, "rate {}", fit.rate);
    }

    #[test]
    fn too_few_nodes_is_insufficient_data() {
        let u = Field::from_fn(grid(1.0, 5), |x| (-norm(x)).exp()).unwrap();
        assert!(matches!(
            decay_fit(&u, [0.0; 3], 1.6),
            Err(KgsError::InsufficientData(_))
        ));
        assert!(matches!(
            decay_fit(&u, [0.0; 3], -1.0),
            Err(KgsError::Domain(_))
        ));
    }

    #[test]
    fn identity_rescale_copies_bit_for_bit() {
        let g = grid(2.0, 17);
        let u = Field::from_fn(g, |x| (x[0] + 2.0 * x[1]).sin() + x[2].cos()).unwrap();
        let same = rescaled_profile(&u, 1.0, [0.0; 3], g).unwrap();
        assert_eq!(same.values(), u.values());
    }

    #[test]
    fn node_shift_lands_on_nodes() {
        let g = grid(2.0, 17);
        let u = Field::from_fn(g, |x| (0.3 * x[0] - x[1]).exp() * (1.0 + x[2] * x[2])).unwrap();
        let shift = g.point(g.index(10, 6, 8));
        let target = grid(4.0 * g.h(), 9);
        let out = rescaled_profile(&u, 1.0, shift, target).unwrap();
        for idx in 0..target.len() {
            let (i, j, k) = target.unflatten(idx);
            assert_eq!(out.values()[idx], u.values()[g.index(i + 6, j + 2, k + 4)]);
        }
    }

    #[test]
    fn gaussian_rescales_to_a_wider_gaussian() {
        let (w, eps, c) = (1.0, 0.5, [0.4, 0.0, -0.2]);
        let mut errors = Vec::new();
        for m in [41, 81] {
            let g = grid(4.0, m);
            let u = Field::from_fn(g, |x| (-(distance(x, c) / w).powi(2)).exp()).unwrap();
            let target = grid(3.0, 31);
            let out = rescaled_profile(&u, eps, c, target).unwrap();
            let err = (0..target.len())
                .map(|i| {
                    (out.values()[i] - (-(norm(target.point(i)) * eps / w).powi(2)).exp()).abs()
                })
                .fold(0.0, f64::max);
            assert!(err <= g.h() * g.h(), "m = {m}: error {err}");
            errors.push(err);
        }
        assert!(errors[1] < 0.35 * errors[0], "{errors:?}");
    }

    #[test]
    fn out_of_box_target_is_a_domain_error() {
        let u = Field::constant(grid(1.0, 9), 1.0);
        assert!(matches!(
            rescaled_profile(&u, 2.0, [0.0; 3], grid(1.0, 9)),
            Err(KgsError::Domain(_))
        ));
        assert!(matches!(
            rescaled_profile(&u, 1.0, [0.5, 0.0, 0.0], grid(1.0, 9)),
            Err(KgsError::Domain(_))
        ));
        assert!(rescaled_profile(&u, 0.0, [0.0; 3], grid(1.0, 9)).is_err());
    }

    #[test]
    fn sweep_grid_policy() {
        assert!(SweepGrid::new(3.0, 97).is_err());
        assert!(SweepGrid::new(-1.0, 33).is_err());
        let sg = SweepGrid::new(3.0, 63).unwrap();
        let (s, t) = (sg.solve_grid(), sg.profile_grid());
        assert_eq!(t.m(), 31);
        assert!((t.h() - s.h()).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_unordered_epsilons() {
        let params = KirchhoffParams::new(1.0, 0.01, 4.2).unwrap();
        let spec = PotentialTripleSpec::preset("aligned").unwrap();
        let sg = SweepGrid::new(3.0, 17).unwrap();
        let opts = SolverOptions::default();
        assert!(epsilon_sweep(params, &spec, &[0.25, 0.5], sg, &opts).is_err());
        assert!(epsilon_sweep(params, &spec, &[], sg, &opts).is_err());
        let constant = PotentialTripleSpec::preset("constant").unwrap();
        assert!(matches!(
            epsilon_sweep(params, &constant, &[0.5], sg, &opts),
            Err(KgsError::Precondition(_))
        ));
    }
}
