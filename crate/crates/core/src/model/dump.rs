//! `KGS1` text dumps of fields.
//!
//! ```text
//! KGS1
//! grid radial n=<n> R=<R>        | grid cartesian m=<m> L=<L>
//! <value>                         one per node, 17 significant digits
//! ```

use std::io::{BufRead, Write};

use crate::error::{KgsError, Result};
use crate::model::field::Field;
use crate::model::grid::{CartesianGrid, Grid, RadialGrid};

pub const MAGIC: &str = "KGS1";

pub fn write_field<W: Write>(out: &mut W, field: &Field) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    match field.grid() {
        Grid::Radial(g) => writeln!(out, "grid radial n={} R={}", g.n(), g.r_dom())?,
        Grid::Cartesian(g) => writeln!(out, "grid cartesian m={} L={}", g.m(), g.half_width())?,
    }
    for v in field.values() {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

pub fn read_field<R: BufRead>(input: R) -> Result<Field> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, message: String| KgsError::Parse {
        line: line + 1,
        message,
    };

    let (ln, magic) = lines.next().ok_or_else(|| bad(0, "empty dump".into()))?;
    if magic?.trim() != MAGIC {
        return Err(bad(ln, format!("expected {MAGIC} header")));
    }
    let (ln, header) = lines
        .next()
        .ok_or_else(|| bad(1, "missing grid line".into()))?;
    let header = header?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let kv = |word: &str, key: &str| -> Option<String> {
        word.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_owned)
    };
    let grid: Grid = match words.as_slice() {
        ["grid", "radial", n, r] => {
            let n = kv(n, "n")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "bad n".into()))?;
            let r = kv(r, "R")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "bad R".into()))?;
            RadialGrid::new(r, n)?.into()
        }
        ["grid", "cartesian", m, l] => {
            let m = kv(m, "m")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "bad m".into()))?;
            let l = kv(l, "L")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(ln, "bad L".into()))?;
            CartesianGrid::new(l, m)?.into()
        }
        _ => return Err(bad(ln, format!("unrecognised grid line `{header}`"))),
    };
    let mut values = Vec::with_capacity(grid.len());
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|e| bad(ln, format!("bad value `{t}`: {e}")))?,
        );
    }
    Field::new(grid, values)
}
