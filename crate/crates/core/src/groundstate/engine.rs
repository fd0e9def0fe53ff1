//! Descent on the Nehari manifold.
//!
//! The iterate is always a projected point `v = t(u)·u`, so the objective is
//! `F(u) = max_t J(t·u)`, whose gradient at `v` is the ordinary energy gradient.
//! Each step is `u = |v − α·P⁻¹∂J(v)|` followed by reprojection, with `α` from
//! the Barzilai–Borwein rule and a nonmonotone Armijo test against the recent
//! maximum of `F`.

use std::collections::VecDeque;

use crate::error::{KgsError, Result};
use crate::functional::EnergyFunctional;
use crate::groundstate::precond::Preconditioner;
use crate::groundstate::GroundStateReport;
use crate::model::{grad_norm_sq, Field};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the max-norm of the Sobolev gradient `P⁻¹∂J` drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(KgsError::Domain(format!(
                "tol must lie in (0, 1e-2], got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(KgsError::Domain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const STEP_MIN: f64 = 1e-3;
const STEP_MAX: f64 = 1e3;
const MAX_BACKTRACK: usize = 40;
const BUBBLE_GROWTH: f64 = 10.0;
const STAGNATION_WINDOW: usize = 200;

struct Iterate {
    v: Field,
    energy: f64,
    grad: Vec<f64>,
    dir: Vec<f64>,
}

struct Workspace<'a> {
    f: &'a EnergyFunctional,
    pc: Preconditioner,
    mask: Vec<bool>,
    weights: Vec<f64>,
    shift: f64,
}

impl Workspace<'_> {
    fn evaluate(&self, v: Field) -> Result<Iterate> {
        let energy = self.f.energy(&v)?;
        let mut grad = self.f.energy_gradient(&v)?.into_values();
        for (g, &fixed) in grad.iter_mut().zip(&self.mask) {
            if fixed {
                *g = 0.0;
            }
        }
        let kappa = self.f.params().a() + self.f.params().b() * grad_norm_sq(&v);
        let rhs: Vec<f64> = grad.iter().zip(&self.weights).map(|(g, w)| g * w).collect();
        let dir = self.pc.apply(kappa, self.shift, &rhs);
        Ok(Iterate {
            v,
            energy,
            grad,
            dir,
        })
    }

    /// Zeroes pinned nodes, takes `|·|` and projects onto the manifold.
    fn admissible(&self, mut u: Field) -> Result<Field> {
        for (x, &fixed) in u.values_mut().iter_mut().zip(&self.mask) {
            *x = if fixed { 0.0 } else { x.abs() };
        }
        Ok(self.f.nehari_project(&u)?.projected)
    }

    fn mass_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }
}

fn sup_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn minimize_on_nehari(
    f: &EnergyFunctional,
    init: &Field,
    opts: &SolverOptions,
) -> Result<GroundStateReport> {
    opts.validate()?;
    if init.grid() != f.grid() {
        return Err(KgsError::Structural(
            "initial field is not on the functional's grid".into(),
        ));
    }
    let shift = f
        .v_coef()
        .values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let ws = Workspace {
        f,
        pc: Preconditioner::new(f.grid()),
        mask: f.grid().dirichlet_mask(),
        weights: f.weights().to_vec(),
        shift,
    };

    let mut cur = ws.evaluate(ws.admissible(init.clone())?)?;
    let initial_energy = cur.energy;
    let initial_max = cur.v.max_abs();
    let mut history: VecDeque<f64> = VecDeque::from([cur.energy]);
    let mut trace = vec![cur.energy];
    let mut alpha = 1.0_f64;
    let mut iterations = 0;
    let mut converged = sup_norm(&cur.dir) < opts.tol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let slope = ws.mass_dot(&cur.grad, &cur.dir);
        let slack = 1e-13 * reference.abs();
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial_vals: Vec<f64> = cur
                .v
                .values()
                .iter()
                .zip(&cur.dir)
                .map(|(v, d)| v - step * d)
                .collect();
            let trial = match Field::new(*cur.v.grid(), trial_vals).and_then(|u| ws.admissible(u)) {
                Ok(t) => t,
                Err(KgsError::NoRoot(_)) => {
                    step *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let energy = f.energy(&trial)?;
            if energy <= reference - ARMIJO * step * slope + slack {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // Line search exhausted: the iterate is stationary to working precision.
            break;
        };
        let next = ws.evaluate(next)?;

        let s: Vec<f64> = next
            .v
            .values()
            .iter()
            .zip(cur.v.values())
            .map(|(a, b)| a - b)
            .collect();
        let dg: Vec<f64> = next
            .grad
            .iter()
            .zip(&cur.grad)
            .map(|(a, b)| a - b)
            .collect();
        let dz: Vec<f64> = next.dir.iter().zip(&cur.dir).map(|(a, b)| a - b).collect();
        let sy = ws.mass_dot(&s, &dg);
        let yz = ws.mass_dot(&dg, &dz);
        alpha = if sy > 0.0 && yz > 0.0 {
            (sy / yz).clamp(STEP_MIN, STEP_MAX)
        } else {
            1.0
        };

        cur = next;
        trace.push(cur.energy);
        history.push_back(cur.energy);
        if history.len() > MEMORY {
            history.pop_front();
        }
        converged = sup_norm(&cur.dir) < opts.tol;

        if cur.v.max_abs() > BUBBLE_GROWTH * initial_max && trace.len() > STAGNATION_WINDOW {
            let old = trace[trace.len() - 1 - STAGNATION_WINDOW];
            if (old - cur.energy).abs() <= 1e-9 * cur.energy.abs() {
                return Err(KgsError::NonConvergence {
                    reason: format!(
                        "iterate maximum grew from {initial_max} to {} while the energy stagnated",
                        cur.v.max_abs()
                    ),
                    trace,
                });
            }
        }
    }

    if !converged && cur.energy > initial_energy {
        return Err(KgsError::NonConvergence {
            reason: format!(
                "energy {} above the initial {initial_energy} after {iterations} iterations",
                cur.energy
            ),
            trace,
        });
    }
    GroundStateReport::from_solution(
        f,
        cur.v,
        sup_norm(&cur.dir),
        sup_norm(&cur.grad),
        iterations,
        converged,
        trace,
    )
}
