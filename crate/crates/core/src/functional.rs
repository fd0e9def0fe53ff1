//! The Kirchhoff energy, its gradient, the Nehari constraint and the fibering map.

use crate::error::{KgsError, Result};
use crate::model::{
    compensated_sum, grad_norm_sq, stiffness_apply, Field, Grid, KirchhoffParams, RadialGrid,
};

/// `|v|^q` with the `v = 0` branch returning 0.
#[inline]
pub fn abs_pow(v: f64, q: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (q * v.abs().ln()).exp()
    }
}

/// `|v|^{q-2}·v`, i.e. `sign(v)·|v|^{q-1}`.
#[inline]
pub fn signed_pow(v: f64, q: f64) -> f64 {
    abs_pow(v, q - 1.0).copysign(v)
}

/// `J(v) = ½‖v‖² + (b/4)(∫|∇v|²)² − (1/p)∫P|v|^p − (1/6)∫Q|v|⁶` with sampled coefficients.
#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    params: KirchhoffParams,
    v_coef: Field,
    p_coef: Field,
    q_coef: Field,
    weights: Vec<f64>,
}

/// The four integrals from which every energy quantity along a ray follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `∫|∇v|²`
    pub grad: f64,
    /// `∫V v²`
    pub potential: f64,
    /// `∫P|v|^p`
    pub p_moment: f64,
    /// `∫Q|v|⁶`
    pub q_moment: f64,
}

#[derive(Debug, Clone)]
pub struct FiberingResult {
    pub t_star: f64,
    pub projected: Field,
    /// `g'(t_star)`
    pub residual: f64,
}

/// `g(t) = J(t·v)` for a fixed `v`, evaluated in O(1) from its moments.
#[derive(Debug, Clone, Copy)]
pub struct FiberingMap {
    norm_sq: f64,
    kirchhoff: f64,
    p_moment: f64,
    q_moment: f64,
    p: f64,
}

impl FiberingMap {
    pub fn value(&self, t: f64) -> f64 {
        let t2 = t * t;
        0.5 * t2 * self.norm_sq + 0.25 * t2 * t2 * self.kirchhoff
            - t.powf(self.p) / self.p * self.p_moment
            - t2 * t2 * t2 / 6.0 * self.q_moment
    }

    /// `g'(t)`
    pub fn derivative(&self, t: f64) -> f64 {
        t * t * t * self.transformed_residual(t)
    }

    /// `‖v‖²/t² + b(∫|∇v|²)² − t^{p−4}∫P|v|^p − t²∫Q|v|⁶`, strictly decreasing in `t`.
    pub fn transformed_residual(&self, t: f64) -> f64 {
        self.norm_sq / (t * t) + self.kirchhoff
            - t.powf(self.p - 4.0) * self.p_moment
            - t * t * self.q_moment
    }

    fn transformed_slope(&self, t: f64) -> f64 {
        -2.0 * self.norm_sq / (t * t * t)
            - (self.p - 4.0) * t.powf(self.p - 5.0) * self.p_moment
            - 2.0 * t * self.q_moment
    }

    /// Unique positive root of the transformed residual: bracket by doubling, then
    /// bisect to relative width 1e-12 and finish with guarded Newton steps.
    pub fn root(&self) -> Result<f64> {
        if !(self.p_moment > 0.0 || self.q_moment > 0.0) {
            return Err(KgsError::NoRoot("both nonlinear moments vanish".into()));
        }
        if self.norm_sq.is_nan() || self.norm_sq <= 0.0 {
            return Err(KgsError::NoRoot("zero profile has no ray".into()));
        }
        let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
        let at_one = self.transformed_residual(1.0);
        if at_one > 0.0 {
            while self.transformed_residual(hi) > 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > 1e150 {
                    return Err(KgsError::NoRoot("upper bracket diverged".into()));
                }
            }
        } else if at_one < 0.0 {
            while self.transformed_residual(lo) < 0.0 {
                hi = lo;
                lo *= 0.5;
                if lo < 1e-150 {
                    return Err(KgsError::NoRoot("lower bracket collapsed".into()));
                }
            }
        } else {
            return Ok(1.0);
        }
        for _ in 0..400 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.transformed_residual(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..3 {
            let step = self.transformed_residual(t) / self.transformed_slope(t);
            let next = t - step;
            if !(next >= lo && next <= hi) || !next.is_finite() {
                break;
            }
            t = next;
        }
        Ok(t)
    }
}

impl EnergyFunctional {
    pub fn new(
        params: KirchhoffParams,
        v_coef: Field,
        p_coef: Field,
        q_coef: Field,
    ) -> Result<Self> {
        v_coef.ensure_same_grid(&p_coef)?;
        v_coef.ensure_same_grid(&q_coef)?;
        for (name, f) in [("V", &v_coef), ("P", &p_coef), ("Q", &q_coef)] {
            if let Some(i) = f.values().iter().position(|&x| x <= 0.0) {
                return Err(KgsError::Domain(format!(
                    "coefficient {name} must be strictly positive, found {} at node {i}",
                    f.values()[i]
                )));
            }
        }
        let weights = v_coef.grid().weights();
        Ok(Self {
            params,
            v_coef,
            p_coef,
            q_coef,
            weights,
        })
    }

    /// Constant coefficients `V ≡ k`, `P ≡ τ`, `Q ≡ ν` on `grid`.
    pub fn constant(
        params: KirchhoffParams,
        grid: impl Into<Grid>,
        k: f64,
        tau: f64,
        nu: f64,
    ) -> Result<Self> {
        let grid = grid.into();
        Self::new(
            params,
            Field::constant(grid, k),
            Field::constant(grid, tau),
            Field::constant(grid, nu),
        )
    }

    pub fn params(&self) -> &KirchhoffParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        self.v_coef.grid()
    }

    pub fn v_coef(&self) -> &Field {
        &self.v_coef
    }

    pub fn p_coef(&self) -> &Field {
        &self.p_coef
    }

    pub fn q_coef(&self) -> &Field {
        &self.q_coef
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, v: &Field) -> Result<()> {
        if v.grid() != self.grid() {
            return Err(KgsError::Structural(
                "field is not on the functional's grid".into(),
            ));
        }
        Ok(())
    }

    pub fn moments(&self, v: &Field) -> Result<Moments> {
        self.check(v)?;
        let p = self.params.p();
        let w = &self.weights;
        let vals = v.values();
        let weighted =
            |f: &dyn Fn(usize) -> f64| compensated_sum((0..vals.len()).map(|i| w[i] * f(i)));
        let vc = self.v_coef.values();
        let pc = self.p_coef.values();
        let qc = self.q_coef.values();
        Ok(Moments {
            grad: grad_norm_sq(v),
            potential: weighted(&|i| vc[i] * vals[i] * vals[i]),
            p_moment: weighted(&|i| pc[i] * abs_pow(vals[i], p)),
            q_moment: weighted(&|i| qc[i] * vals[i].powi(6)),
        })
    }

    /// `‖v‖²_ε = a∫|∇v|² + ∫V v²` from precomputed moments.
    pub fn norm_sq_of(&self, m: &Moments) -> f64 {
        self.params.a() * m.grad + m.potential
    }

    pub fn energy_of(&self, m: &Moments) -> f64 {
        let p = self.params.p();
        0.5 * self.norm_sq_of(m) + 0.25 * self.params.b() * m.grad * m.grad
            - m.p_moment / p
            - m.q_moment / 6.0
    }

    pub fn nehari_residual_of(&self, m: &Moments) -> f64 {
        self.norm_sq_of(m) + self.params.b() * m.grad * m.grad - m.p_moment - m.q_moment
    }

    pub fn energy(&self, v: &Field) -> Result<f64> {
        Ok(self.energy_of(&self.moments(v)?))
    }

    pub fn norm_sq(&self, v: &Field) -> Result<f64> {
        Ok(self.norm_sq_of(&self.moments(v)?))
    }

    /// `⟨J'(v), v⟩`
    pub fn nehari_residual(&self, v: &Field) -> Result<f64> {
        Ok(self.nehari_residual_of(&self.moments(v)?))
    }

    /// The field `g` with `∫g·φ = DJ(v)[φ]`:
    /// `g = −(a + b∫|∇v|²)Δ_h v + Vv − P|v|^{p−2}v − Q|v|⁴v`.
    pub fn energy_gradient(&self, v: &Field) -> Result<Field> {
        self.check(v)?;
        let p = self.params.p();
        let coeff = self.params.a() + self.params.b() * grad_norm_sq(v);
        let kv = stiffness_apply(v);
        let vals = v.values();
        let (vc, pc, qc) = (
            self.v_coef.values(),
            self.p_coef.values(),
            self.q_coef.values(),
        );
        let g = (0..vals.len())
            .map(|i| {
                let x = vals[i];
                coeff * kv[i] / self.weights[i] + vc[i] * x
                    - pc[i] * signed_pow(x, p)
                    - qc[i] * x.powi(5)
            })
            .collect();
        Field::new(*v.grid(), g)
    }

    pub fn fibering_map(&self, v: &Field) -> Result<FiberingMap> {
        let m = self.moments(v)?;
        Ok(FiberingMap {
            norm_sq: self.norm_sq_of(&m),
            kirchhoff: self.params.b() * m.grad * m.grad,
            p_moment: m.p_moment,
            q_moment: m.q_moment,
            p: self.params.p(),
        })
    }

    /// `g(t) = J(t·v)`.
    pub fn fibering(&self, v: &Field, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 0.0 {
            return Err(KgsError::Domain(format!(
                "fibering parameter must be positive, got {t}"
            )));
        }
        Ok(self.fibering_map(v)?.value(t))
    }

    /// Scales `v` onto the Nehari manifold along its ray.
    pub fn nehari_project(&self, v: &Field) -> Result<FiberingResult> {
        let map = self.fibering_map(v)?;
        let t_star = map.root()?;
        Ok(FiberingResult {
            t_star,
            projected: v.scaled(t_star),
            residual: map.derivative(t_star),
        })
    }

    /// `max_{t>0} J(t·v)`: the ray upper bound for the ground-state level.
    pub fn ray_maximum(&self, v: &Field) -> Result<f64> {
        let map = self.fibering_map(v)?;
        Ok(map.value(map.root()?))
    }
}

/// Rayleigh quotient `∫|∇U|² / (∫U⁶)^{1/3}` of the Aubin–Talenti profile `(1+r²)^{−1/2}`.
pub fn sobolev_constant(grid: &RadialGrid) -> f64 {
    talenti_quotient(grid, 1.0)
}

/// Same quotient for the dilation `λ^{1/2}·U(λr)`.
pub fn talenti_quotient(grid: &RadialGrid, lambda: f64) -> f64 {
    let u = Field::radial_from_fn(*grid, |r| {
        lambda.sqrt() / (1.0 + lambda * lambda * r * r).sqrt()
    })
    .expect("Talenti profile is finite");
    let six = u.map(|x| x.powi(6)).expect("finite");
    grad_norm_sq(&u) / crate::model::integrate(&six).cbrt()
}
