//! Matrix Market export of assembled systems.

use num_complex::Complex64;
use std::io::Write;

use crate::error::Result;
use crate::linalg::BandMatrix;

/// Writes the nonzero band entries in `coordinate complex general` format.
pub fn write_matrix(mut out: impl Write, m: &BandMatrix<Complex64>) -> Result<()> {
    let entries: Vec<_> = m.entries().filter(|(_, _, v)| *v != Complex64::default()).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate complex general")?;
    writeln!(out, "{} {} {}", m.n(), m.n(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
    }
    Ok(())
}

/// Writes a vector as an `n x 1` dense array.
pub fn write_vector(mut out: impl Write, v: &[Complex64]) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array complex general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{:e} {:e}", x.re, x.im)?;
    }
    Ok(())
}

/// `(row, column, value)`, zero-based.
pub type Entry = (usize, usize, Complex64);

/// Reads back a `coordinate complex general` file as `(n, entries)`.
pub fn read_matrix(text: &str) -> Option<(usize, Vec<Entry>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let head: Vec<usize> = lines
        .next()?
        .split_whitespace()
        .map(|t| t.parse().ok())
        .collect::<Option<_>>()?;
    let mut out = Vec::with_capacity(head[2]);
    for l in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        out.push((
            t[0].parse::<usize>().ok()? - 1,
            t[1].parse::<usize>().ok()? - 1,
            Complex64::new(t[2].parse().ok()?, t[3].parse().ok()?),
        ));
    }
    Some((head[0], out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = BandMatrix::zeros(4, 1, 2);
        m.add(0, 0, Complex64::new(1.5, -2.0));
        m.add(2, 3, Complex64::new(1e-17, 3.0));
        m.add(3, 2, Complex64::new(-0.1, 0.0));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let (n, e) = read_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(n, 4);
        assert_eq!(e.len(), 3);
        for (i, j, v) in e {
            assert_eq!(m.get(i, j), v);
        }
    }
}
