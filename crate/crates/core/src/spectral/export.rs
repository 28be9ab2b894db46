//! Plain-text exports for checking the assembled forms elsewhere.
//!
//! Matrices are written as coordinate triplets:
//!
//! ```text
//! # rows cols nnz
//! row col value
//! ...
//! ```
//!
//! Indices are 0-based; both triangles of a symmetric matrix are listed.

use std::io::{BufRead, Write};

use crate::error::{KornError, Result};
use crate::linalg::{Eigenpair, SymBand};

pub fn write_triplets<W: Write>(out: &mut W, m: &SymBand) -> Result<()> {
    let t = m.triplets();
    writeln!(out, "# {} {} {}", m.dim(), m.dim(), t.len())?;
    for (i, j, v) in t {
        writeln!(out, "{i} {j} {v:e}")?;
    }
    Ok(())
}

/// Reads a symmetric matrix written by [`write_triplets`]. Only the lower
/// triangle is used; an asymmetric upper entry is an error.
pub fn read_triplets<R: BufRead>(input: R) -> Result<SymBand> {
    let mut dims = None;
    let mut entries = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let parse_err = |msg: &str| KornError::Parse {
            line: k + 1,
            msg: msg.to_string(),
        };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('#') {
            if dims.is_none() {
                let f: Vec<usize> = h
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| parse_err("bad header")))
                    .collect::<Result<_>>()?;
                if f.len() != 3 || f[0] != f[1] {
                    return Err(parse_err("header must be `# n n nnz` for a square matrix"));
                }
                dims = Some(f[0]);
            }
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err("expected `row col value`"));
        }
        let i: usize = f[0].parse().map_err(|_| parse_err("bad row"))?;
        let j: usize = f[1].parse().map_err(|_| parse_err("bad col"))?;
        let v: f64 = f[2].parse().map_err(|_| parse_err("bad value"))?;
        entries.push((k + 1, i, j, v));
    }
    let n = dims.ok_or_else(|| KornError::Parse {
        line: 0,
        msg: "missing `# rows cols nnz` header".into(),
    })?;
    let bw = entries.iter().map(|e| e.1.abs_diff(e.2)).max().unwrap_or(0);
    let mut m = SymBand::zeros(n, bw);
    for &(line, i, j, v) in &entries {
        if i >= n || j >= n {
            return Err(KornError::Parse {
                line,
                msg: format!("index ({i}, {j}) outside {n} x {n}"),
            });
        }
        if i >= j {
            m.add(i, j, v);
        }
    }
    for &(line, i, j, v) in &entries {
        if i < j && (m.get(i, j) - v).abs() > 1e-12 * v.abs().max(1.0) {
            return Err(KornError::Parse {
                line,
                msg: format!("entry ({i}, {j}) breaks symmetry"),
            });
        }
    }
    Ok(m)
}

/// `index,value,residual,v0,v1,...` per eigenpair.
pub fn write_eigenpairs_csv<W: Write>(out: W, pairs: &[Eigenpair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = pairs.first().map_or(0, |p| p.vector.len());
    let mut header = vec!["index".to_string(), "value".into(), "residual".into()];
    header.extend((0..dim).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for (k, p) in pairs.iter().enumerate() {
        let mut rec = vec![k.to_string(), format!("{:e}", p.value), format!("{:e}", p.residual)];
        rec.extend(p.vector.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_round_trip() {
        let mut m = SymBand::zeros(5, 2);
        for i in 0..5 {
            m.add(i, i, 2.0 + i as f64);
            if i > 1 {
                m.add(i, i - 2, -0.25 * i as f64);
            }
        }
        let mut buf = Vec::new();
        write_triplets(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# 5 5 11\n"));
        let back = read_triplets(buf.as_slice()).unwrap();
        assert_eq!(back.to_dense(), m.to_dense());
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let text = "# 2 2 3\n0 0 1\n1 0 0.5\n0 1 0.7\n";
        assert!(read_triplets(text.as_bytes()).is_err());
    }
}
