//! Plain-text grid-sample field files.
//!
//! ```text
//! # korn washer field
//! geometry <r> <R> <h> <c>
//! bc <v1|v2|none>
//! grid <n_rho> <n_z>
//! modes <n_0> <n_1> ...
//! mode <n> <a_rho|b_rho|a_theta|b_theta|a_z|b_z>
//! <n_rho + 1 lines of n_z + 1 values: row i is rho_i, column j is z_j>
//! ...
//! ```
//!
//! Every mode lists all six components. Numbers use Rust's shortest
//! round-trip formatting, which is locale independent. Imported coefficient
//! functions are grid samples, differentiated by finite differences.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::cylfield::{BoundaryCondition, FourierField, GridSamples, ModeCoeffs, Profile, WasherGeometry};
use crate::error::{KornError, Result};

const COMPONENTS: [&str; 6] = ["a_rho", "b_rho", "a_theta", "b_theta", "a_z", "b_z"];

fn component(m: &ModeCoeffs, c: usize) -> &Profile {
    match c {
        0 => &m.a_rho,
        1 => &m.b_rho,
        2 => &m.a_theta,
        3 => &m.b_theta,
        4 => &m.a_z,
        _ => &m.b_z,
    }
}

fn component_mut(m: &mut ModeCoeffs, c: usize) -> &mut Profile {
    match c {
        0 => &mut m.a_rho,
        1 => &mut m.b_rho,
        2 => &mut m.a_theta,
        3 => &mut m.b_theta,
        4 => &mut m.a_z,
        _ => &mut m.b_z,
    }
}

/// Writes `field` sampled on an `n_rho x n_z`-cell grid.
pub fn write_field(
    out: &mut impl Write,
    field: &FourierField,
    bc: Option<BoundaryCondition>,
    n_rho: usize,
    n_z: usize,
) -> Result<()> {
    if n_rho == 0 || n_z == 0 {
        return Err(KornError::InvalidArgument("field grid needs at least one cell per axis".into()));
    }
    let g = field.geometry();
    writeln!(out, "# korn washer field")?;
    writeln!(out, "geometry {:e} {:e} {:e} {:e}", g.inner, g.outer, g.thickness, g.thinness)?;
    writeln!(out, "bc {}", bc.map_or("none".to_string(), |b| b.to_string()))?;
    writeln!(out, "grid {n_rho} {n_z}")?;
    let ns: Vec<String> = field.modes().iter().map(|m| m.n.to_string()).collect();
    writeln!(out, "modes {}", ns.join(" "))?;
    for m in field.modes() {
        for (c, name) in COMPONENTS.iter().enumerate() {
            writeln!(out, "mode {} {name}", m.n)?;
            let p = component(m, c);
            for i in 0..=n_rho {
                let rho = crate::cylfield::node(g.inner, g.outer, n_rho, i);
                let row: Vec<String> = (0..=n_z)
                    .map(|j| {
                        let z = crate::cylfield::node(0.0, g.thickness, n_z, j);
                        format!("{:e}", p.eval(rho, z).v)
                    })
                    .collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            let l = self
                .inner
                .next()
                .ok_or_else(|| KornError::Parse { line: self.line, msg: "unexpected end of file".into() })??;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(t.to_string());
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(it.map(str::to_string).collect())
    }

    fn err(&self, msg: String) -> KornError {
        KornError::Parse { line: self.line, msg }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }
}

/// Reads a field file; coefficient functions become [`Profile::Sampled`].
pub fn read_field(input: impl BufRead) -> Result<(FourierField, Option<BoundaryCondition>)> {
    let mut lines = Lines { inner: input.lines(), line: 0 };
    let g = lines.keyed("geometry")?;
    if g.len() != 4 {
        return Err(lines.err("geometry needs r R h c".into()));
    }
    let geom = WasherGeometry::new(lines.num(&g[0])?, lines.num(&g[1])?, lines.num(&g[2])?, lines.num(&g[3])?)?;
    let bc = lines.keyed("bc")?;
    let bc = match bc.first().map(String::as_str) {
        Some("none") => None,
        Some(s) => Some(s.parse::<BoundaryCondition>().map_err(|_| lines.err(format!("unknown bc `{s}`")))?),
        None => return Err(lines.err("missing bc".into())),
    };
    let grid = lines.keyed("grid")?;
    if grid.len() != 2 {
        return Err(lines.err("grid needs n_rho n_z".into()));
    }
    let (n_rho, n_z): (usize, usize) = (lines.num(&grid[0])?, lines.num(&grid[1])?);
    let ns: Vec<u32> = lines.keyed("modes")?.iter().map(|s| lines.num(s)).collect::<Result<_>>()?;
    let mut modes = Vec::with_capacity(ns.len());
    for &n in &ns {
        let mut m = ModeCoeffs::new(n);
        for (c, name) in COMPONENTS.iter().enumerate() {
            let head = lines.keyed("mode")?;
            if head.len() != 2 || lines.num::<u32>(&head[0])? != n || head[1] != *name {
                return Err(lines.err(format!("expected `mode {n} {name}`")));
            }
            let mut values = Vec::with_capacity((n_rho + 1) * (n_z + 1));
            for _ in 0..=n_rho {
                let row = lines.next()?;
                let parsed: Vec<f64> = row.split_whitespace().map(|s| lines.num(s)).collect::<Result<_>>()?;
                if parsed.len() != n_z + 1 {
                    return Err(lines.err(format!("expected {} values, got {}", n_z + 1, parsed.len())));
                }
                values.extend(parsed);
            }
            if values.iter().any(|&v| v != 0.0) {
                let s = GridSamples::new((geom.inner, geom.outer), (0.0, geom.thickness), n_rho, n_z, values)?;
                *component_mut(&mut m, c) = Profile::Sampled(Arc::new(s));
            }
        }
        modes.push(m);
    }
    Ok((FourierField::new(geom, modes)?, bc))
}

pub fn save_field(path: &std::path::Path, field: &FourierField, bc: Option<BoundaryCondition>, n_rho: usize, n_z: usize) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut w, field, bc, n_rho, n_z)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: &std::path::Path) -> Result<(FourierField, Option<BoundaryCondition>)> {
    read_field(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfields::random_washer_field;

    #[test]
    fn round_trip_preserves_nodal_values() {
        let g = WasherGeometry::new(0.5, 1.0, 0.1, 1.0).unwrap();
        let f = random_washer_field(3, &g, BoundaryCondition::V2, 2, 0.5).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f, Some(BoundaryCondition::V2), 8, 4).unwrap();
        let (back, bc) = read_field(buf.as_slice()).unwrap();
        assert_eq!(bc, Some(BoundaryCondition::V2));
        assert_eq!(back.geometry(), f.geometry());
        for i in 0..=8 {
            for j in 0..=4 {
                let (rho, z) = (0.5 + 0.5 * i as f64 / 8.0, 0.1 * j as f64 / 4.0);
                let (rho, z) = (rho.min(1.0), z.min(0.1));
                let a = f.displacement(rho, 0.3, z);
                let b = back.displacement(rho, 0.3, z);
                for c in 0..3 {
                    assert!((a[c] - b[c]).abs() <= 1e-14 * a[c].abs().max(1.0));
                }
            }
        }
        assert!(back.satisfies(BoundaryCondition::V2, 0.0));
    }

    #[test]
    fn malformed_input_reports_line() {
        let text = "# korn washer field\ngeometry 0.5 1 0.1 1\nbc v1\ngrid 2 x\n";
        match read_field(text.as_bytes()) {
            Err(KornError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
