//! Flat `key = value` settings with dotted sections.
//!
//! A config file holds one setting per line; `#` starts a comment. Command-line
//! `key=value` arguments are applied after the file and override it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::concentration::SweepGrid;
use crate::error::{KgsError, Result};
use crate::groundstate::{ConstantCoefficients, SolverOptions, TruncationLevels};
use crate::model::{CartesianGrid, Coordinates, KirchhoffParams, RadialGrid};
use crate::potentials::{PotentialTripleSpec, Shape};

/// Every accepted key with its default (empty for "unset").
pub const KEYS: &[(&str, &str)] = &[
    ("a", "1"),
    ("b", "0.01"),
    ("p", "4.2"),
    ("q", "1"),
    ("S", ""),
    ("const.k", "1"),
    ("const.tau", "2"),
    ("const.nu", "0.04"),
    ("grid.R", "20"),
    ("grid.n", "4000"),
    ("grid.L", "3"),
    ("grid.m", "63"),
    ("epsilon", "0.25"),
    ("sweep.eps", "0.5,0.25,0.125"),
    ("potential.preset", "aligned"),
    ("potential.V", ""),
    ("potential.P", ""),
    ("potential.Q", ""),
    ("potential.x_star", ""),
    ("potential.R", ""),
    ("truncation.c", ""),
    ("truncation.d", ""),
    ("truncation.e", ""),
    ("solver.tol", "1e-8"),
    ("solver.max_iter", "50000"),
    ("output.dump", "false"),
    ("seed", "0"),
    ("suite", "all"),
    ("out", "kgs-out"),
];

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    /// 1-based line of the config file.
    File(usize),
    /// 1-based position among the command-line settings.
    Argument(usize),
    Flag,
}

impl Origin {
    fn line(self) -> usize {
        match self {
            Origin::File(l) | Origin::Argument(l) => l,
            Origin::Default | Origin::Flag => 0,
        }
    }

    fn describe(self) -> String {
        match self {
            Origin::Default => "default".into(),
            Origin::File(l) => format!("config line {l}"),
            Origin::Argument(i) => format!("argument {i}"),
            Origin::Flag => "command-line flag".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<&'static str, (String, Origin)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|&(k, v)| (k, (v.to_string(), Origin::Default)))
                .collect(),
        }
    }
}

fn split_setting(text: &str, origin: Origin) -> Result<(&str, &str)> {
    let (k, v) = text.split_once('=').ok_or_else(|| KgsError::Parse {
        line: origin.line(),
        message: format!("expected key=value at {}, got `{text}`", origin.describe()),
    })?;
    Ok((k.trim(), v.trim()))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        let Some(&(known, _)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(KgsError::Parse {
                line: origin.line(),
                message: format!("unknown key `{key}` at {}", origin.describe()),
            });
        };
        self.values.insert(known, (value.to_string(), origin));
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = Origin::File(i + 1);
            let (k, v) = split_setting(line, origin)?;
            self.set(k, v, origin)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn apply_args<S: AsRef<str>>(&mut self, args: &[S]) -> Result<()> {
        for (i, arg) in args.iter().enumerate() {
            let origin = Origin::Argument(i + 1);
            let (k, v) = split_setting(arg.as_ref(), origin)?;
            self.set(k, v, origin)?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        &self
            .values
            .get(key)
            .unwrap_or_else(|| panic!("`{key}` is not a registered key"))
            .0
    }

    fn origin(&self, key: &str) -> Origin {
        self.values[key].1
    }

    fn invalid(&self, key: &str, message: impl std::fmt::Display) -> KgsError {
        let origin = self.origin(key);
        KgsError::Parse {
            line: origin.line(),
            message: format!("invalid `{key}` ({}): {message}", origin.describe()),
        }
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).parse().map_err(|e| self.invalid(key, e))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.parsed(key).map(Some)
        }
    }

    /// Re-labels a domain error from a constructor with the offending key's origin.
    fn checked<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            KgsError::Domain(m) => {
                KgsError::Domain(format!("{m} (`{key}`, {})", self.origin(key).describe()))
            }
            KgsError::Parse { message, .. } => self.invalid(key, message),
            other => other,
        })
    }

    pub fn params(&self) -> Result<KirchhoffParams> {
        let (a, b, p) = (self.parsed("a")?, self.parsed("b")?, self.parsed("p")?);
        self.checked("p", KirchhoffParams::new(a, b, p))
    }

    pub fn q(&self) -> Result<f64> {
        self.parsed("q")
    }

    /// Explicit `S`, or `None` for the continuum constant.
    pub fn sobolev(&self) -> Result<Option<f64>> {
        self.optional("S")
    }

    pub fn coefficients(&self) -> Result<ConstantCoefficients> {
        let r = ConstantCoefficients::new(
            self.parsed("const.k")?,
            self.parsed("const.tau")?,
            self.parsed("const.nu")?,
        );
        self.checked("const.k", r)
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        self.checked(
            "grid.n",
            RadialGrid::new(self.parsed("grid.R")?, self.parsed("grid.n")?),
        )
    }

    pub fn cartesian_grid(&self) -> Result<CartesianGrid> {
        self.checked(
            "grid.m",
            CartesianGrid::new(self.parsed("grid.L")?, self.parsed("grid.m")?),
        )
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        self.checked(
            "grid.m",
            SweepGrid::new(self.parsed("grid.L")?, self.parsed("grid.m")?),
        )
    }

    pub fn epsilon(&self) -> Result<f64> {
        let e: f64 = self.parsed("epsilon")?;
        if !(e.is_finite() && e > 0.0) {
            return Err(KgsError::Domain(format!(
                "epsilon must be positive, got {e}"
            )));
        }
        Ok(e)
    }

    pub fn sweep_eps(&self) -> Result<Vec<f64>> {
        self.raw("sweep.eps")
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| self.invalid("sweep.eps", e))
            })
            .collect()
    }

    pub fn solver(&self) -> Result<SolverOptions> {
        let o = SolverOptions {
            tol: self.parsed("solver.tol")?,
            max_iter: self.parsed("solver.max_iter")?,
        };
        self.checked("solver.tol", o.validate())?;
        Ok(o)
    }

    fn shape(&self, key: &str) -> Result<Option<Shape>> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(None);
        }
        self.checked(key, Shape::parse(raw)).map(Some)
    }

    fn coordinates(&self, key: &str) -> Result<Option<Coordinates>> {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(None);
        }
        let inner = raw.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<f64> = inner
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| self.invalid(key, e)))
            .collect::<Result<_>>()?;
        match parts[..] {
            [x, y, z] => Ok(Some([x, y, z])),
            _ => Err(self.invalid(key, "expected (x,y,z)")),
        }
    }

    /// The preset, with any of `V`, `P`, `Q`, `x_star`, `R` replaced.
    pub fn potential(&self) -> Result<PotentialTripleSpec> {
        let base = self.checked(
            "potential.preset",
            PotentialTripleSpec::preset(self.raw("potential.preset")),
        )?;
        let spec = PotentialTripleSpec::new(
            self.shape("potential.V")?.unwrap_or(base.v),
            self.shape("potential.P")?.unwrap_or(base.p),
            self.shape("potential.Q")?.unwrap_or(base.q),
            self.coordinates("potential.x_star")?.unwrap_or(base.x_star),
            self.optional("potential.R")?.unwrap_or(base.r_cond),
        );
        self.checked("potential.V", spec)
    }

    /// Clamp levels when any of `truncation.c/d/e` is set; unset ones stay inactive.
    pub fn truncation(&self, spec: &PotentialTripleSpec) -> Result<Option<TruncationLevels>> {
        let (c, d, e) = (
            self.optional("truncation.c")?,
            self.optional("truncation.d")?,
            self.optional("truncation.e")?,
        );
        if c.is_none() && d.is_none() && e.is_none() {
            return Ok(None);
        }
        let off = TruncationLevels::inactive(spec);
        let r = TruncationLevels::new(
            c.unwrap_or(off.c),
            d.unwrap_or(off.d),
            e.unwrap_or(off.e),
            spec,
        );
        self.checked("truncation.c", r).map(Some)
    }

    pub fn dump(&self) -> Result<bool> {
        self.parsed("output.dump")
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed("seed")
    }

    pub fn suite(&self) -> &str {
        self.raw("suite")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out"))
    }
}
