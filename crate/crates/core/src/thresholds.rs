//! The two-equation system
//!
//! ```text
//! Φ(t,s) = t − aSλ^{−1/3}(t+s)^{1/3} = 0
//! Ψ(t,s) = s − bS²λ^{−2/3}(t+s)^{2/3} = 0
//! ```
//!
//! and the compactness level
//! `c* = abS³/(4q) + (b²S⁴ + 4qaS)^{3/2}/(24q²) + b³S⁶/(24q²)`.
//!
//! With `w = (t+s)^{1/3}` the system collapses to `w² − Bw − A = 0`,
//! `A = aSλ^{−1/3}`, `B = bS²λ^{−2/3}`, so `t₀ = A·w`, `s₀ = B·w²`.

use crate::error::{KgsError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsSolution {
    pub t0: f64,
    pub s0: f64,
    pub lambda: f64,
    pub sobolev: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdValues {
    pub c_star: f64,
    pub sobolev: f64,
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

fn require_positive(args: &[(&str, f64)]) -> Result<()> {
    for (name, x) in args {
        if !(x.is_finite() && *x > 0.0) {
            return Err(KgsError::Domain(format!(
                "{name} must be positive, got {x}"
            )));
        }
    }
    Ok(())
}

impl TsSolution {
    fn coefficients(&self) -> (f64, f64) {
        let l3 = self.lambda.cbrt();
        (
            self.a * self.sobolev / l3,
            self.b * self.sobolev * self.sobolev / (l3 * l3),
        )
    }

    pub fn phi(&self, t: f64, s: f64) -> f64 {
        let (a, _) = self.coefficients();
        t - a * (t + s).cbrt()
    }

    pub fn psi(&self, t: f64, s: f64) -> f64 {
        let (_, b) = self.coefficients();
        let u = (t + s).cbrt();
        s - b * u * u
    }
}

pub fn solve_ts_system(a: f64, b: f64, sobolev: f64, lambda: f64) -> Result<TsSolution> {
    require_positive(&[("a", a), ("b", b), ("S", sobolev), ("lambda", lambda)])?;
    let l3 = lambda.cbrt();
    let big_a = a * sobolev / l3;
    let big_b = b * sobolev * sobolev / (l3 * l3);
    let w = 0.5 * (big_b + (big_b * big_b + 4.0 * big_a).sqrt());
    Ok(TsSolution {
        t0: big_a * w,
        s0: big_b * w * w,
        lambda,
        sobolev,
        a,
        b,
    })
}

/// `Φ(t,s) ≥ 0 ∧ Ψ(t,s) ≥ 0`; when true, `t ≥ t₀` and `s ≥ s₀` follow.
pub fn dominance_check(t: f64, s: f64, sol: &TsSolution) -> bool {
    sol.phi(t, s) >= 0.0 && sol.psi(t, s) >= 0.0
}

pub fn critical_level(a: f64, b: f64, sobolev: f64, q: f64) -> Result<ThresholdValues> {
    require_positive(&[("a", a), ("b", b), ("S", sobolev), ("q", q)])?;
    let s = sobolev;
    let s3 = s * s * s;
    let c_star = a * b * s3 / (4.0 * q)
        + (b * b * s3 * s + 4.0 * q * a * s).powf(1.5) / (24.0 * q * q)
        + b * b * b * s3 * s3 / (24.0 * q * q);
    Ok(ThresholdValues {
        c_star,
        sobolev,
        a,
        b,
        q,
    })
}

/// `|t₀/3 + s₀/12 − c*| / c*` with `λ = q`.
pub fn threshold_consistency(a: f64, b: f64, sobolev: f64, q: f64) -> Result<f64> {
    let sol = solve_ts_system(a, b, sobolev, q)?;
    let c = critical_level(a, b, sobolev, q)?.c_star;
    Ok((sol.t0 / 3.0 + sol.s0 / 12.0 - c).abs() / c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fixed-point oracle on `u = t + s`: `u ← A u^{1/3} + B u^{2/3}`.
    fn fixed_point(a: f64, b: f64, s: f64, lambda: f64, start: f64) -> (f64, f64) {
        let l3 = lambda.cbrt();
        let (ca, cb) = (a * s / l3, b * s * s / (l3 * l3));
        let mut u = start;
        for _ in 0..10_000 {
            let next = ca * u.cbrt() + cb * u.cbrt().powi(2);
            if (next - u).abs() <= 1e-15 * next {
                u = next;
                break;
            }
            u = next;
        }
        (ca * u.cbrt(), cb * u.cbrt().powi(2))
    }

    #[test]
    fn golden_ratio_case() {
        let sol = solve_ts_system(1.0, 1.0, 1.0, 1.0).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sol.t0 - phi).abs() < 1e-12);
        assert!((sol.s0 - phi * phi).abs() < 1e-12);
        assert!((sol.t0 + sol.s0 - phi.powi(3)).abs() < 1e-12);
        assert!((sol.t0 - 1.6180339887).abs() < 1e-10);
        assert!((sol.s0 - 2.6180339887).abs() < 1e-10);
    }

    #[test]
    fn residuals_vanish_for_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (a, b, s, l) = (
                rng.gen_range(0.1..5.0),
                rng.gen_range(0.1..5.0),
                rng.gen_range(0.5..10.0),
                rng.gen_range(0.1..5.0),
            );
            let sol = solve_ts_system(a, b, s, l).unwrap();
            assert!(sol.phi(sol.t0, sol.s0).abs() < 1e-12 * sol.t0.max(1.0));
            assert!(sol.psi(sol.t0, sol.s0).abs() < 1e-12 * sol.s0.max(1.0));
        }
    }

    #[test]
    fn fixed_point_iteration_agrees_from_many_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sol = solve_ts_system(1.3, 0.7, 5.4779, 2.0).unwrap();
        for _ in 0..20 {
            let (t, s) = fixed_point(1.3, 0.7, 5.4779, 2.0, rng.gen_range(1e-3..1e3));
            assert!((t - sol.t0).abs() < 1e-8 * sol.t0);
            assert!((s - sol.s0).abs() < 1e-8 * sol.s0);
        }
    }

    #[test]
    fn solution_decreases_in_lambda() {
        let mut prev = solve_ts_system(1.0, 1.0, 5.0, 0.125).unwrap();
        for k in -2..6 {
            let sol = solve_ts_system(1.0, 1.0, 5.0, 2f64.powi(k)).unwrap();
            assert!(sol.t0 < prev.t0 && sol.s0 < prev.s0);
            prev = sol;
        }
    }

    #[test]
    fn dominance_cases() {
        let sol = solve_ts_system(1.0, 2.0, 3.0, 1.5).unwrap();
        assert!(dominance_check(
            sol.t0 * (1.0 + 1e-12),
            sol.s0 * (1.0 + 1e-12),
            &sol
        ));
        assert!(dominance_check(2.0 * sol.t0, 2.0 * sol.s0, &sol));
        assert!(!dominance_check(0.5 * sol.t0, 0.5 * sol.s0, &sol));
    }

    #[test]
    fn critical_level_shape() {
        let s = 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0);
        let levels: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&q| critical_level(1.0, 1.0, s, q).unwrap().c_star)
            .collect();
        assert!(levels.windows(2).all(|w| w[1] < w[0]));
        let tiny = critical_level(1.0, 1.0, 1e-9, 1.0).unwrap().c_star;
        assert!(tiny > 0.0 && tiny < 1e-12);
    }

    #[test]
    fn threshold_identity() {
        assert!(threshold_consistency(1.0, 1.0, 1.0, 1.0).unwrap() < 1e-10);
        assert!(threshold_consistency(1.0, 1e-8, 5.4779, 1.0).unwrap() < 1e-8);
        assert!(solve_ts_system(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(critical_level(1.0, 1.0, -1.0, 1.0).is_err());
    }
}
