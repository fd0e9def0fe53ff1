//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kgs::concentration::{epsilon_sweep, ReferenceSet, SweepGrid};
use kgs::functional::{talenti_quotient, EnergyFunctional};
use kgs::groundstate::{
    check_grid, compare_levels, default_lattice, multi_start, solve_constant, solve_truncated,
    solve_variable, ConstantCoefficients, SolverOptions, TruncationLevels, SEED_WIDTHS,
};
use kgs::model::{inner, CartesianGrid, Field, KirchhoffParams, RadialGrid};
use kgs::potentials::{check_conditions, Condition, PotentialTripleSpec};
use kgs::thresholds::{critical_level, solve_ts_system};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn talenti() -> f64 {
    3.0 * (PI / 2.0).powf(4.0 / 3.0)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// Closed form of c* written out independently of the library.
fn c_star_oracle(a: f64, b: f64, s: f64, q: f64) -> f64 {
    a * b * s.powi(3) / (4.0 * q)
        + (b * b * s.powi(4) + 4.0 * q * a * s).powf(1.5) / (24.0 * q * q)
        + b.powi(3) * s.powi(6) / (24.0 * q * q)
}

/// Fixed-point iteration `u ← A u^{1/3} + B u^{2/3}` for `u = t + s`.
fn ts_oracle(a: f64, b: f64, s: f64, lambda: f64) -> (f64, f64) {
    let (big_a, big_b) = (a * s / lambda.cbrt(), b * s * s / lambda.cbrt().powi(2));
    let mut u = (big_a + big_b).max(1.0).powi(3);
    for _ in 0..500 {
        let next = big_a * u.cbrt() + big_b * u.cbrt().powi(2);
        if (next - u).abs() <= 1e-15 * u {
            u = next;
            break;
        }
        u = next;
    }
    (big_a * u.cbrt(), big_b * u.cbrt().powi(2))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut worst_oracle) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let mut draw = || 10f64.powf(rng.gen_range(-2.0..2.0));
        let (a, b, s, q) = (draw(), draw(), draw(), draw());
        let sol = solve_ts_system(a, b, s, q).map_err(err)?;
        let c = critical_level(a, b, s, q).map_err(err)?.c_star;
        worst = worst.max((sol.t0 / 3.0 + sol.s0 / 12.0 - c).abs() / c);
        let (t, u) = ts_oracle(a, b, s, q);
        let c_ref = c_star_oracle(a, b, s, q);
        worst_oracle = worst_oracle
            .max(((t - sol.t0) / t).abs())
            .max(((u - sol.s0) / u).abs())
            .max(((c - c_ref) / c_ref).abs());
    }
    Ok((
        worst < 1e-10 && worst_oracle < 1e-9,
        format!("max identity residual {worst:.2e} (< 1e-10), max deviation from oracles {worst_oracle:.2e}"),
    ))
}

fn criterion_2() -> Outcome {
    let q: Vec<f64> = [3000, 6000, 12000]
        .iter()
        .map(|&n| RadialGrid::new(60.0, n).map(|g| talenti_quotient(&g, 1.0)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let error = (q[2] - talenti()).abs();
    let ratio = (q[0] - q[1]) / (q[1] - q[2]);
    Ok((
        error < 1e-3 && (ratio - 4.0).abs() < 0.5,
        format!("S_h = {:.6} vs {:.6} (error {error:.2e} < 1e-3), Richardson ratio {ratio:.3} (about 4)", q[2], talenti()),
    ))
}

fn random_profile(rng: &mut ChaCha8Rng, grid: RadialGrid) -> Result<Field, String> {
    let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            (
                rng.gen_range(0.1..3.0),
                rng.gen_range(0.0..4.0),
                rng.gen_range(0.3..2.5),
            )
        })
        .collect();
    Field::radial_from_fn(grid, |r| {
        bumps
            .iter()
            .map(|(amp, c, w)| amp * (-((r - c) / w).powi(2)).exp())
            .sum()
    })
    .map_err(err)
}

fn random_functional(rng: &mut ChaCha8Rng, grid: RadialGrid) -> Result<EnergyFunctional, String> {
    let params = KirchhoffParams::new(
        rng.gen_range(0.2..3.0),
        rng.gen_range(0.05..2.0),
        rng.gen_range(4.1..5.9),
    )
    .map_err(err)?;
    let mut coef = |lo: f64, hi: f64| {
        let (base, amp, w) = (
            rng.gen_range(lo..hi),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.5..3.0),
        );
        Field::radial_from_fn(grid, |r| base * (1.0 + amp * (-(r / w).powi(2)).exp())).map_err(err)
    };
    let (v, p, q) = (coef(0.5, 2.0)?, coef(0.5, 2.0)?, coef(0.05, 1.0)?);
    EnergyFunctional::new(params, v, p, q).map_err(err)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = RadialGrid::new(12.0, 600).map_err(err)?;
    let (mut bad_signs, mut worst_root, mut worst_excess) = (0, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..50 {
        let f = random_functional(&mut rng, grid)?;
        let v = random_profile(&mut rng, grid)?;
        let map = f.fibering_map(&v).map_err(err)?;
        let t_star = map.root().map_err(err)?;

        // g and g' rebuilt from the moments.
        let m = f.moments(&v).map_err(err)?;
        let (a, b, p) = (f.params().a(), f.params().b(), f.params().p());
        let norm = a * m.grad + m.potential;
        let g = |t: f64| {
            0.5 * t * t * norm + 0.25 * b * t.powi(4) * m.grad * m.grad
                - t.powf(p) * m.p_moment / p
                - t.powi(6) * m.q_moment / 6.0
        };
        let dg = |t: f64| {
            t * norm + b * t.powi(3) * m.grad * m.grad
                - t.powf(p - 1.0) * m.p_moment
                - t.powi(5) * m.q_moment
        };

        const N: usize = 10_000;
        let (lo, hi) = (1e-6 * t_star, 1e6 * t_star);
        let ts: Vec<f64> = (0..N)
            .map(|i| lo * (hi / lo).powf(i as f64 / (N - 1) as f64))
            .collect();
        let changes = ts
            .windows(2)
            .filter(|w| {
                (map.transformed_residual(w[0]) > 0.0) != (map.transformed_residual(w[1]) > 0.0)
            })
            .count();
        if changes != 1 {
            bad_signs += 1;
        }

        // Brute force: best scan point, then bisection on the sign of g'.
        let best = (0..N)
            .max_by(|&i, &j| g(ts[i]).total_cmp(&g(ts[j])))
            .unwrap();
        let (mut l, mut r) = (ts[best.saturating_sub(1)], ts[(best + 1).min(N - 1)]);
        for _ in 0..200 {
            let mid = 0.5 * (l + r);
            if dg(mid) > 0.0 {
                l = mid;
            } else {
                r = mid;
            }
        }
        worst_root = worst_root.max((0.5 * (l + r) - t_star).abs() / t_star);

        let g_star = g(t_star);
        for _ in 0..200 {
            let t = t_star * 10f64.powf(rng.gen_range(-3.0..3.0));
            worst_excess = worst_excess.max((g(t) - g_star) / g_star.abs());
        }
    }
    Ok((
        bad_signs == 0 && worst_root < 1e-8 && worst_excess <= 1e-12,
        format!(
            "{bad_signs} profiles without exactly one sign change, max |t_brute - t*|/t* {worst_root:.2e} (< 1e-8), max sampled excess {worst_excess:.2e}"
        ),
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = RadialGrid::new(10.0, 400).map_err(err)?;
    let s = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = random_functional(&mut rng, grid)?;
        let v = random_profile(&mut rng, grid)?;
        let phi = random_profile(&mut rng, grid)?;
        let shifted = |sign: f64| {
            v.zip_map(&phi, |x, y| x + sign * s * y)
                .and_then(|w| f.energy(&w))
        };
        let fd = (shifted(1.0).map_err(err)? - shifted(-1.0).map_err(err)?) / (2.0 * s);
        let exact = inner(&f.energy_gradient(&v).map_err(err)?, &phi).map_err(err)?;
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-12));
    }
    Ok((
        worst < 1e-6,
        format!("max relative error {worst:.2e} (< 1e-6)"),
    ))
}

fn criterion_5() -> Outcome {
    let params = KirchhoffParams::new(1.0, 1.0, 5.0).map_err(err)?;
    let grid = RadialGrid::new(20.0, 4000).map_err(err)?;
    let cc = ConstantCoefficients::new(1.0, 1.0, 1.0).map_err(err)?;
    let r = solve_constant(cc, params, grid, &opts()).map_err(err)?;
    let f = EnergyFunctional::constant(params, grid, 1.0, 1.0, 1.0).map_err(err)?;
    let m = f.moments(&r.field).map_err(err)?;
    let p = 5.0;
    let norm = m.grad + m.potential;
    // Energy and Nehari residual from the moments, not from the library.
    let j = 0.5 * norm + 0.25 * m.grad * m.grad - m.p_moment / p - m.q_moment / 6.0;
    let nehari = norm + m.grad * m.grad - m.p_moment - m.q_moment;
    let identity = (0.5 - 1.0 / p) * norm
        + (0.25 - 1.0 / p) * m.grad * m.grad
        + (1.0 / p - 1.0 / 6.0) * m.q_moment;
    let identity_err = (j - nehari / p - identity).abs() / j;
    let c_star = c_star_oracle(1.0, 1.0, talenti(), 1.0);
    let positive = r.field.values().iter().all(|&x| x >= 0.0) && r.field.values()[0] > 0.0;
    let ps_bound = 2.0 * p / (p - 2.0) * r.level + 1e-6;
    let pass = r.converged
        && r.nehari_residual.abs() <= 1e-8 * r.norm_sq
        && nehari.abs() <= 1e-8 * norm
        && (j - r.level).abs() <= 1e-10 * j
        && identity_err <= 1e-8
        && positive
        && norm <= ps_bound
        && r.level < c_star;
    Ok((
        pass,
        format!(
            "m* = {:.6} < c* = {c_star:.3}, converged {}, |I|/|v|^2 = {:.1e}, identity error {identity_err:.1e}, |v|^2 = {norm:.4} <= {ps_bound:.4}, positive {positive}",
            r.level,
            r.converged,
            r.nehari_residual.abs() / r.norm_sq
        ),
    ))
}

fn criterion_6() -> Outcome {
    let params = KirchhoffParams::new(1.0, 1.0, 5.0).map_err(err)?;
    // Triples with large nu sit close to c* and need h well below the default spacing.
    let grid = RadialGrid::new(20.0, 64_000).map_err(err)?;
    let lattice = default_lattice();
    let rep = compare_levels(&lattice, params, grid, &opts()).map_err(err)?;
    // Independent enumeration of comparable pairs by coefficient values.
    let mut expected = 0;
    for (i, x) in lattice.iter().enumerate() {
        for (j, y) in lattice.iter().enumerate() {
            if i != j && x.k <= y.k && x.tau >= y.tau && x.nu >= y.nu {
                expected += 1;
                let gap = rep.levels[j] - rep.levels[i];
                if gap <= 2.0 * opts().tol {
                    return Ok((false, format!("pair {x:?} -> {y:?} has gap {gap:.3e}")));
                }
            }
        }
    }
    let strict = rep.pairs.iter().filter(|p| p.strict).count();
    let min_gap = rep
        .pairs
        .iter()
        .map(|p| p.gap)
        .fold(f64::INFINITY, f64::min);
    Ok((
        rep.is_consistent() && strict == expected && expected == 189,
        format!(
            "{strict} strict pairs (expected {expected}), all converged {}, smallest gap {min_gap:.3e} > {:.0e}",
            rep.converged.iter().all(|&c| c),
            2.0 * opts().tol
        ),
    ))
}

fn desk_params() -> Result<KirchhoffParams, String> {
    KirchhoffParams::new(1.0, 0.01, 4.2).map_err(err)
}

fn criterion_7() -> Outcome {
    let params = desk_params()?;
    let spec = PotentialTripleSpec::preset("competing").map_err(err)?;
    let (eps, grid) = (0.25, CartesianGrid::new(2.0, 49).map_err(err)?);
    let beta = spec.v.eval([0.0; 3]);
    let d = 0.5 * (spec.p_limits().inf + spec.p_limits().max);
    let e = spec.q_limits().max;
    let levels = TruncationLevels::new(beta, d, e, &spec).map_err(err)?;
    let plain = solve_variable(params, &spec, eps, grid, &opts()).map_err(err)?;
    let clamped = solve_truncated(levels, params, &spec, eps, grid, &opts()).map_err(err)?;
    let f = EnergyFunctional::constant(params, grid, beta, d, e).map_err(err)?;
    let limit = multi_start(&f, [0.0; 3], &SEED_WIDTHS, &opts()).map_err(err)?;
    let tol = 1e-8 * clamped.level;
    let upper = clamped.level <= plain.level + tol;
    let lower = clamped.level >= limit.level - tol;
    Ok((
        upper && lower && plain.converged && clamped.converged && limit.converged,
        format!(
            "(c,d,e) = ({beta:.5}, {d}, {e}): truncated {:.4} <= c_eps {:.4}: {upper}; truncated >= constant {:.4}: {lower}",
            clamped.level, plain.level, limit.level
        ),
    ))
}

fn non_increasing(xs: &[f64], slack: f64) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn criterion_8() -> Outcome {
    let params = desk_params()?;
    let spec = PotentialTripleSpec::preset("aligned").map_err(err)?;
    let eps = [0.5, 0.25, 0.125];
    let rep = epsilon_sweep(
        params,
        &spec,
        &eps,
        SweepGrid::new(3.0, 63).map_err(err)?,
        &opts(),
    )
    .map_err(err)?;
    if !rep.failures.is_empty() || rep.records.len() != eps.len() {
        return Ok((false, format!("sweep failures: {:?}", rep.failures)));
    }
    let last = rep.records.last().unwrap();
    let dist: Vec<f64> = rep.records.iter().map(|r| r.dist_av).collect();
    let rates: Vec<f64> = rep.records.iter().map(|r| r.decay_rate()).collect();
    let ratios: Vec<f64> = rates.windows(2).map(|w| w[1] / w[0]).collect();
    let prof: Vec<f64> = rep.records.iter().map(|r| r.profile_dist).collect();
    let pass = rep.reference == ReferenceSet::AV
        && rep.records.iter().all(|r| r.converged)
        && non_increasing(&dist, 1e-12)
        && last.dist_av <= 2.0 * last.h
        && ratios.iter().all(|r| (1.5..=2.5).contains(r))
        && non_increasing(&prof, 0.0);
    Ok((
        pass,
        format!(
            "dist_AV {dist:?} (final <= 2h = {:.4}), rate ratios {:.3?}, profile_dist {prof:.4?}, limit level {:.4}",
            2.0 * last.h,
            ratios,
            rep.limit_level
        ),
    ))
}

fn criterion_9() -> Outcome {
    let report = |name: &str| {
        let spec = PotentialTripleSpec::preset(name).map_err(err)?;
        check_conditions(&spec, &check_grid(&spec).map_err(err)?).map_err(err)
    };
    let (aligned, competing, constant) = (
        report("aligned")?,
        report("competing")?,
        report("constant")?,
    );
    // A holding condition carries a witness point; a failing one names its clause.
    let witnessed = |r: &kgs::potentials::ConditionReport, c: Condition, holds: bool| {
        let x = r.get(c);
        x.holds == holds
            && if holds {
                x.witness.is_some()
            } else {
                x.failed_clause.is_some()
            }
    };
    let checks = [
        ("aligned VQ1", witnessed(&aligned, Condition::Vq1, true)),
        ("aligned VQ2", witnessed(&aligned, Condition::Vq2, true)),
        ("competing PQ1", witnessed(&competing, Condition::Pq1, true)),
        ("competing PQ2", witnessed(&competing, Condition::Pq2, true)),
        (
            "competing not VQ1",
            witnessed(&competing, Condition::Vq1, false),
        ),
        (
            "constant not PQ2",
            witnessed(&constant, Condition::Pq2, false),
        ),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let csv_ok = [&aligned, &competing, &constant]
        .iter()
        .all(|r| r.to_csv().lines().count() == 5 && r.to_csv().starts_with("condition,holds"));
    Ok((
        failed.is_empty() && csv_ok,
        format!(
            "{} checks, failing: {failed:?}, csv rows ok {csv_ok}",
            checks.len()
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("threshold identity", criterion_1, Duration::from_secs(1)),
        ("Sobolev constant", criterion_2, Duration::from_secs(5)),
        ("fibering uniqueness", criterion_3, Duration::from_secs(30)),
        ("gradient consistency", criterion_4, Duration::from_secs(30)),
        (
            "constant ground state",
            criterion_5,
            Duration::from_secs(120),
        ),
        ("level monotonicity", criterion_6, Duration::from_secs(1800)),
        (
            "truncation ordering",
            criterion_7,
            Duration::from_secs(1800),
        ),
        (
            "concentration sweep",
            criterion_8,
            Duration::from_secs(4 * 3600),
        ),
        ("potential conditions", criterion_9, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {}. {name}: {detail} [{:.2} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
