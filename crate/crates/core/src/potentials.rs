//! Potential triples from a closed catalog of shapes, the standing conditions
//! on them, and the discrete extremal and admissible sets.

use std::fmt;

use crate::error::{KgsError, Result};
use crate::model::{distance, norm, CartesianGrid, Coordinates, Field, Grid};

/// Catalog shapes. All are bounded, positive when their declared minimum is,
/// and uniformly continuous; their limits at infinity are known exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Constant {
        value: f64,
    },
    /// `base + height·exp(−|x−c|²/width²)`; `height` may be negative (a well).
    Bump {
        center: Coordinates,
        base: f64,
        height: f64,
        width: f64,
    },
    /// `base + rise·s/(1+s)` with `s = |x−c|²/width²`.
    RationalWell {
        center: Coordinates,
        base: f64,
        rise: f64,
        width: f64,
    },
    /// `base + height·(1 − tanh(|x−c|/width))`.
    TanhBump {
        center: Coordinates,
        base: f64,
        height: f64,
        width: f64,
    },
}

impl Shape {
    pub fn eval(&self, x: Coordinates) -> f64 {
        match *self {
            Shape::Constant { value } => value,
            Shape::Bump {
                center,
                base,
                height,
                width,
            } => base + height * (-(distance(x, center) / width).powi(2)).exp(),
            Shape::RationalWell {
                center,
                base,
                rise,
                width,
            } => {
                let s = (distance(x, center) / width).powi(2);
                base + rise * s / (1.0 + s)
            }
            Shape::TanhBump {
                center,
                base,
                height,
                width,
            } => base + height * (1.0 - (distance(x, center) / width).tanh()),
        }
    }

    /// `lim_{|x|→∞}`.
    pub fn limit_at_infinity(&self) -> f64 {
        match *self {
            Shape::Constant { value } => value,
            Shape::Bump { base, .. } | Shape::TanhBump { base, .. } => base,
            Shape::RationalWell { base, rise, .. } => base + rise,
        }
    }

    /// Exact infimum and supremum over ℝ³.
    pub fn bounds(&self) -> (f64, f64) {
        let (lo, hi) = match *self {
            Shape::Constant { value } => (value, value),
            Shape::Bump { base, height, .. } => (base, base + height),
            Shape::RationalWell { base, rise, .. } => (base, base + rise),
            Shape::TanhBump { base, height, .. } => (base, base + height),
        };
        (lo.min(hi), lo.max(hi))
    }

    fn center(&self) -> Option<Coordinates> {
        match *self {
            Shape::Constant { .. } => None,
            Shape::Bump { center, .. }
            | Shape::RationalWell { center, .. }
            | Shape::TanhBump { center, .. } => Some(center),
        }
    }

    fn width(&self) -> f64 {
        match *self {
            Shape::Constant { .. } => 0.0,
            Shape::Bump { width, .. }
            | Shape::RationalWell { width, .. }
            | Shape::TanhBump { width, .. } => width,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 {
            return Err(KgsError::Domain(format!(
                "shape {self} must be bounded below by a positive constant"
            )));
        }
        if let Some(c) = self.center() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(KgsError::Domain(format!(
                    "shape {self} has a non-finite center"
                )));
            }
            let w = self.width();
            if !(w.is_finite() && w > 0.0) {
                return Err(KgsError::Domain(format!(
                    "shape {self} needs a positive width"
                )));
            }
        }
        Ok(())
    }

    /// Parses `name(key=value, ...)`. Names: `const`, `bump`, `rwell`, `tanhbump`.
    /// `center` accepts a scalar (broadcast) or `(x,y,z)`; omitted keys take
    /// `center=0`, `base=1`, `height=1`, `rise=1`, `width=1`.
    pub fn parse(text: &str) -> Result<Self> {
        let err = |m: String| KgsError::Parse {
            line: 0,
            message: m,
        };
        let text = text.trim();
        let open = text
            .find('(')
            .ok_or_else(|| err(format!("expected name(args) in `{text}`")))?;
        if !text.ends_with(')') {
            return Err(err(format!("missing closing parenthesis in `{text}`")));
        }
        let name = text[..open].trim();
        let body = &text[open + 1..text.len() - 1];
        let mut center = [0.0; 3];
        let mut base = 1.0;
        let mut height = 1.0;
        let mut rise = 1.0;
        let mut width = 1.0;
        let mut value = None;
        for arg in split_top_level(body) {
            let arg = arg.trim();
            if arg.is_empty() {
                continue;
            }
            let (key, val) = match arg.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None if name == "const" => ("value", arg),
                None => return Err(err(format!("argument `{arg}` is not key=value"))),
            };
            let allowed: &[&str] = match name {
                "const" => &["value"],
                "bump" | "tanhbump" => &["center", "base", "height", "width"],
                "rwell" => &["center", "base", "rise", "width"],
                _ => return Err(err(format!("unknown shape `{name}`"))),
            };
            if !allowed.contains(&key) {
                return Err(err(format!("unknown key `{key}` for shape `{name}`")));
            }
            match key {
                "center" => center = parse_point(val).map_err(err)?,
                "base" => base = parse_number(val).map_err(err)?,
                "height" => height = parse_number(val).map_err(err)?,
                "rise" => rise = parse_number(val).map_err(err)?,
                "width" => width = parse_number(val).map_err(err)?,
                _ => value = Some(parse_number(val).map_err(err)?),
            }
        }
        let shape = match name {
            "const" => Shape::Constant {
                value: value.ok_or_else(|| err("const needs a value".into()))?,
            },
            "bump" => Shape::Bump {
                center,
                base,
                height,
                width,
            },
            "rwell" => Shape::RationalWell {
                center,
                base,
                rise,
                width,
            },
            "tanhbump" => Shape::TanhBump {
                center,
                base,
                height,
                width,
            },
            _ => return Err(err(format!("unknown shape `{name}`"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_point(s: &str) -> std::result::Result<Coordinates, String> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("point `{s}` needs three coordinates"));
        }
        Ok([
            parse_number(parts[0])?,
            parse_number(parts[1])?,
            parse_number(parts[2])?,
        ])
    } else {
        let x = parse_number(s)?;
        Ok([x; 3])
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |p: &Coordinates| format!("({},{},{})", p[0], p[1], p[2]);
        match self {
            Shape::Constant { value } => write!(f, "const(value={value})"),
            Shape::Bump {
                center,
                base,
                height,
                width,
            } => {
                write!(
                    f,
                    "bump(center={},base={base},height={height},width={width})",
                    c(center)
                )
            }
            Shape::RationalWell {
                center,
                base,
                rise,
                width,
            } => {
                write!(
                    f,
                    "rwell(center={},base={base},rise={rise},width={width})",
                    c(center)
                )
            }
            Shape::TanhBump {
                center,
                base,
                height,
                width,
            } => {
                write!(
                    f,
                    "tanhbump(center={},base={base},height={height},width={width})",
                    c(center)
                )
            }
        }
    }
}

/// Declared extremes of one coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub min: f64,
    pub max: f64,
    pub inf: f64,
}

impl Limits {
    fn of(shape: &Shape) -> Self {
        let (min, max) = shape.bounds();
        Self {
            min,
            max,
            inf: shape.limit_at_infinity(),
        }
    }
}

/// Critical weight of the catalog presets. Kept small against the subcritical
/// weight so the ground-state core is wider than the grid spacing.
pub const PRESET_Q_SCALE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTripleSpec {
    pub v: Shape,
    pub p: Shape,
    pub q: Shape,
    /// Declared candidate concentration point, used to center seeds.
    pub x_star: Coordinates,
    /// Radius beyond which the exterior comparison is checked.
    pub r_cond: f64,
}

impl PotentialTripleSpec {
    pub fn new(v: Shape, p: Shape, q: Shape, x_star: Coordinates, r_cond: f64) -> Result<Self> {
        for s in [&v, &p, &q] {
            s.validate()?;
        }
        if !(r_cond.is_finite() && r_cond > 0.0) {
            return Err(KgsError::Domain(format!(
                "R must be positive, got {r_cond}"
            )));
        }
        Ok(Self {
            v,
            p,
            q,
            x_star,
            r_cond,
        })
    }

    /// `aligned`, `competing` or `constant`.
    pub fn preset(name: &str) -> Result<Self> {
        let origin = [0.0; 3];
        let p = Shape::TanhBump {
            center: origin,
            base: 1.0,
            height: 1.0,
            width: 1.0,
        };
        let q = Shape::TanhBump {
            center: origin,
            base: PRESET_Q_SCALE,
            height: PRESET_Q_SCALE,
            width: 1.0,
        };
        match name {
            "aligned" => Self::new(
                Shape::RationalWell {
                    center: origin,
                    base: 1.0,
                    rise: 1.0,
                    width: 1.0,
                },
                p,
                q,
                origin,
                1.0,
            ),
            "competing" => Self::new(
                Shape::Bump {
                    center: [1.0, 0.0, 0.0],
                    base: 1.5,
                    height: -0.5,
                    width: 0.5,
                },
                p,
                q,
                origin,
                2.5,
            ),
            "constant" => Self::new(
                Shape::Constant { value: 1.0 },
                Shape::Constant { value: 1.0 },
                Shape::Constant {
                    value: PRESET_Q_SCALE,
                },
                origin,
                1.0,
            ),
            other => Err(KgsError::Domain(format!("unknown preset `{other}`"))),
        }
    }

    pub fn v_limits(&self) -> Limits {
        Limits::of(&self.v)
    }

    pub fn p_limits(&self) -> Limits {
        Limits::of(&self.p)
    }

    pub fn q_limits(&self) -> Limits {
        Limits::of(&self.q)
    }

    /// `V(εx)`, `P(εx)`, `Q(εx)` on `grid`.
    pub fn sample(&self, grid: impl Into<Grid>, epsilon: f64) -> Result<(Field, Field, Field)> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(KgsError::Domain(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let grid = grid.into();
        let at = |s: Shape| {
            Field::from_fn(grid, move |x| {
                s.eval([epsilon * x[0], epsilon * x[1], epsilon * x[2]])
            })
        };
        Ok((at(self.v)?, at(self.p)?, at(self.q)?))
    }

    /// Shifts every shape center and `x_star` by `tau`.
    pub fn translated(&self, tau: Coordinates) -> Self {
        let mv = |s: Shape| match s {
            Shape::Constant { .. } => s,
            Shape::Bump {
                center,
                base,
                height,
                width,
            } => Shape::Bump {
                center: add(center, tau),
                base,
                height,
                width,
            },
            Shape::RationalWell {
                center,
                base,
                rise,
                width,
            } => Shape::RationalWell {
                center: add(center, tau),
                base,
                rise,
                width,
            },
            Shape::TanhBump {
                center,
                base,
                height,
                width,
            } => Shape::TanhBump {
                center: add(center, tau),
                base,
                height,
                width,
            },
        };
        Self {
            v: mv(self.v),
            p: mv(self.p),
            q: mv(self.q),
            x_star: add(self.x_star, tau),
            r_cond: self.r_cond,
        }
    }
}

fn add(a: Coordinates, b: Coordinates) -> Coordinates {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Pq1,
    Pq2,
    Vq1,
    Vq2,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Pq1 => "PQ1",
            Condition::Pq2 => "PQ2",
            Condition::Vq1 => "VQ1",
            Condition::Vq2 => "VQ2",
        })
    }
}

/// One condition with its witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub holds: bool,
    /// Nodes in the discrete intersection (`𝒫∩𝒬` or `𝒱∩𝒬`).
    pub set_size: usize,
    /// The discrete `x*`, when the intersection is nonempty.
    pub witness: Option<Coordinates>,
    /// `P_max − P_∞` or `V_∞ − V_min`, for the second condition of each pair.
    pub gap: Option<f64>,
    /// Worst exterior comparison margin; non-negative when the comparison holds.
    pub exterior_margin: Option<f64>,
    /// The first clause that failed.
    pub failed_clause: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn get(&self, c: Condition) -> &ConditionCheck {
        self.checks
            .iter()
            .find(|x| x.condition == c)
            .expect("all four conditions are reported")
    }

    pub fn pq_holds(&self) -> bool {
        self.get(Condition::Pq1).holds && self.get(Condition::Pq2).holds
    }

    pub fn vq_holds(&self) -> bool {
        self.get(Condition::Vq1).holds && self.get(Condition::Vq2).holds
    }

    pub const CSV_HEADER: &'static str =
        "condition,holds,set_size,x1,x2,x3,gap,exterior_margin,failed_clause";

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.checks {
            let w = c
                .witness
                .map(|w| w.map(|x| format!("{x}")))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.condition,
                c.holds,
                c.set_size,
                w[0],
                w[1],
                w[2],
                opt(c.gap),
                opt(c.exterior_margin),
                c.failed_clause.unwrap_or("")
            ));
        }
        out
    }
}

/// Discrete level sets and admissible sets, as flat node indices in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSets {
    pub grid: CartesianGrid,
    pub v_set: Vec<usize>,
    pub p_set: Vec<usize>,
    pub q_set: Vec<usize>,
    /// `None` when the discrete `𝒫∩𝒬` is empty.
    pub a_v: Option<Vec<usize>>,
    /// `None` when the discrete `𝒱∩𝒬` is empty.
    pub a_p: Option<Vec<usize>>,
    pub x_star_pq: Option<usize>,
    pub x_star_vq: Option<usize>,
    /// Membership tolerances for `V`, `P`, `Q`.
    pub tol_set: [f64; 3],
}

impl ConcentrationSets {
    pub fn points(&self, nodes: &[usize]) -> Vec<Coordinates> {
        nodes.iter().map(|&i| self.grid.point(i)).collect()
    }

    /// Euclidean distance from `x` to the nearest member node.
    pub fn distance_to(&self, nodes: &[usize], x: Coordinates) -> f64 {
        nodes
            .iter()
            .map(|&i| distance(self.grid.point(i), x))
            .fold(f64::INFINITY, f64::min)
    }
}

struct Samples {
    v: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

fn sample(spec: &PotentialTripleSpec, grid: &CartesianGrid) -> Samples {
    let pts: Vec<Coordinates> = (0..grid.len()).map(|i| grid.point(i)).collect();
    Samples {
        v: pts.iter().map(|&x| spec.v.eval(x)).collect(),
        p: pts.iter().map(|&x| spec.p.eval(x)).collect(),
        q: pts.iter().map(|&x| spec.q.eval(x)).collect(),
    }
}

fn extremes(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Default membership tolerance: `1e−6` of the sampled dynamic range.
pub fn default_tolerance(xs: &[f64]) -> f64 {
    let (lo, hi) = extremes(xs);
    1e-6 * (hi - lo)
}

fn ensure_declared(name: &str, xs: &[f64], lim: &Limits) -> Result<()> {
    let (lo, hi) = extremes(xs);
    let slack = 1e-6 * (1.0 + lim.max.abs());
    if lo < lim.min - slack || hi > lim.max + slack {
        return Err(KgsError::Inconsistency(format!(
            "{name} sampled in [{lo}, {hi}] outside its declared range [{}, {}]",
            lim.min, lim.max
        )));
    }
    Ok(())
}

fn check_grid(spec: &PotentialTripleSpec, grid: &CartesianGrid) -> Result<()> {
    if grid.half_width() < 2.0 * spec.r_cond {
        return Err(KgsError::Precondition(format!(
            "check grid half width {} must be at least 2R = {}",
            grid.half_width(),
            2.0 * spec.r_cond
        )));
    }
    Ok(())
}

fn level_set(xs: &[f64], target: f64, tol: f64, upper: bool) -> Vec<usize> {
    (0..xs.len())
        .filter(|&i| {
            if upper {
                xs[i] >= target - tol
            } else {
                xs[i] <= target + tol
            }
        })
        .collect()
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// First index attaining the extreme of `xs` over `nodes`.
fn pick(nodes: &[usize], xs: &[f64], minimize: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &i in nodes {
        best = match best {
            None => Some(i),
            Some(b) if (minimize && xs[i] < xs[b]) || (!minimize && xs[i] > xs[b]) => Some(i),
            keep => keep,
        };
    }
    best
}

struct Levels {
    v_set: Vec<usize>,
    p_set: Vec<usize>,
    q_set: Vec<usize>,
    tol: [f64; 3],
}

fn levels(s: &Samples, tol: Option<[f64; 3]>) -> Levels {
    let tol = tol.unwrap_or([
        default_tolerance(&s.v),
        default_tolerance(&s.p),
        default_tolerance(&s.q),
    ]);
    Levels {
        v_set: level_set(&s.v, extremes(&s.v).0, tol[0], false),
        p_set: level_set(&s.p, extremes(&s.p).1, tol[1], true),
        q_set: level_set(&s.q, extremes(&s.q).1, tol[2], true),
        tol,
    }
}

/// Evaluates the four standing conditions on `grid`.
pub fn check_conditions(
    spec: &PotentialTripleSpec,
    grid: &CartesianGrid,
) -> Result<ConditionReport> {
    check_grid(spec, grid)?;
    let s = sample(spec, grid);
    let (vl, pl, ql) = (spec.v_limits(), spec.p_limits(), spec.q_limits());
    ensure_declared("V", &s.v, &vl)?;
    ensure_declared("P", &s.p, &pl)?;
    ensure_declared("Q", &s.q, &ql)?;
    let lv = levels(&s, None);
    let exterior: Vec<usize> = (0..grid.len())
        .filter(|&i| norm(grid.point(i)) >= spec.r_cond)
        .collect();

    let pq = intersect(&lv.p_set, &lv.q_set);
    let x_pq = pick(&pq, &s.v, true);
    let pq_gap = pl.max - pl.inf;
    let pq_margin = x_pq.map(|x| {
        let vx = s.v[x];
        exterior
            .iter()
            .map(|&i| s.v[i] - vx)
            .fold(vl.inf - vx, f64::min)
    });
    let pq2_ok_ext = pq_margin.map(|m| m >= -lv.tol[0]).unwrap_or(false);

    let vq = intersect(&lv.v_set, &lv.q_set);
    let x_vq = pick(&vq, &s.p, false);
    let vq_gap = vl.inf - vl.min;
    let vq_margin = x_vq.map(|x| {
        let px = s.p[x];
        exterior
            .iter()
            .map(|&i| px - s.p[i])
            .fold(px - pl.inf, f64::min)
    });
    let vq2_ok_ext = vq_margin.map(|m| m >= -lv.tol[1]).unwrap_or(false);

    let first =
        |c: Condition, set: &[usize], x: Option<usize>, clause: &'static str| ConditionCheck {
            condition: c,
            holds: !set.is_empty(),
            set_size: set.len(),
            witness: x.map(|i| grid.point(i)),
            gap: None,
            exterior_margin: None,
            failed_clause: if set.is_empty() { Some(clause) } else { None },
        };
    let second = |c: Condition,
                  size: usize,
                  x: Option<usize>,
                  gap: f64,
                  margin: Option<f64>,
                  ext_ok: bool,
                  gap_clause: &'static str,
                  ext_clause: &'static str| {
        let gap_ok = gap > 0.0;
        let failed = if !gap_ok {
            Some(gap_clause)
        } else if x.is_none() {
            Some("empty intersection: no x*")
        } else if !ext_ok {
            Some(ext_clause)
        } else {
            None
        };
        ConditionCheck {
            condition: c,
            holds: failed.is_none(),
            set_size: size,
            witness: x.map(|i| grid.point(i)),
            gap: Some(gap),
            exterior_margin: margin,
            failed_clause: failed,
        }
    };
    Ok(ConditionReport {
        checks: vec![
            first(Condition::Pq1, &pq, x_pq, "P and Q maxima are disjoint"),
            second(
                Condition::Pq2,
                pq.len(),
                x_pq,
                pq_gap,
                pq_margin,
                pq2_ok_ext,
                "P_max > P_inf",
                "V(x*) <= V(x) for |x| >= R",
            ),
            first(
                Condition::Vq1,
                &vq,
                x_vq,
                "V minima and Q maxima are disjoint",
            ),
            second(
                Condition::Vq2,
                vq.len(),
                x_vq,
                vq_gap,
                vq_margin,
                vq2_ok_ext,
                "V_inf > V_min",
                "P(x*) >= P(x) for |x| >= R",
            ),
        ],
    })
}

/// Discrete `𝒱, 𝒫, 𝒬, A_V, A_P`. `tol_set` overrides the per-coefficient
/// default tolerances `1e−6·(sampled range)`.
pub fn admissible_sets(
    spec: &PotentialTripleSpec,
    grid: &CartesianGrid,
    tol_set: Option<[f64; 3]>,
) -> Result<ConcentrationSets> {
    check_grid(spec, grid)?;
    let s = sample(spec, grid);
    let lv = levels(&s, tol_set);
    let pq = intersect(&lv.p_set, &lv.q_set);
    let vq = intersect(&lv.v_set, &lv.q_set);
    if pq.is_empty() && vq.is_empty() {
        return Err(KgsError::Inconsistency(
            "both discrete intersections are empty".into(),
        ));
    }
    let x_pq = pick(&pq, &s.v, true);
    let x_vq = pick(&vq, &s.p, false);
    let build = |inter: &[usize],
                 x: Option<usize>,
                 xs: &[f64],
                 tol: f64,
                 below: bool|
     -> Option<Vec<usize>> {
        let x = x?;
        let target = xs[x];
        Some(
            (0..xs.len())
                .filter(|&i| {
                    if inter.binary_search(&i).is_ok() {
                        (xs[i] - target).abs() <= tol
                    } else if below {
                        xs[i] < target - tol
                    } else {
                        xs[i] > target + tol
                    }
                })
                .collect(),
        )
    };
    Ok(ConcentrationSets {
        grid: *grid,
        a_v: build(&pq, x_pq, &s.v, lv.tol[0], true),
        a_p: build(&vq, x_vq, &s.p, lv.tol[1], false),
        v_set: lv.v_set,
        p_set: lv.p_set,
        q_set: lv.q_set,
        x_star_pq: x_pq,
        x_star_vq: x_vq,
        tol_set: lv.tol,
    })
}
