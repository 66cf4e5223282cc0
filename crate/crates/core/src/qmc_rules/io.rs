//! Plain-text rule files.
//!
//! ```text
//! lattice N=<n> s=<s> alpha=1 seed=<seed> R=<r>
//! z <z_1> ... <z_s>
//! shift <d_1> ... <d_s>        (R lines)
//!
//! interlaced m=<m> s=<s> alpha=<alpha> seed=0 P=<modulus>
//! q <q_1> ... <q_{alpha s}>    (polynomials as integers, bit k = coefficient of x^k)
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::gf2;
use super::{InterlacedPolyLattice, LatticeRule, QmcRule};
use crate::error::{Error, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("rule file: {}", msg.into()))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_rule(w: &mut impl Write, rule: &QmcRule) -> Result<()> {
    match rule {
        QmcRule::Lattice(r) => {
            writeln!(w, "lattice N={} s={} alpha=1 seed={} R={}", r.n, r.s(), r.seed, r.r())?;
            writeln!(w, "z {}", join(&r.z))?;
            for d in &r.shifts {
                // {:?} keeps the shortest round-tripping representation
                writeln!(
                    w,
                    "shift {}",
                    d.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
                )?;
            }
        }
        QmcRule::Interlaced(r) => {
            writeln!(
                w,
                "interlaced m={} s={} alpha={} seed=0 P={}",
                r.m, r.s, r.alpha, r.modulus
            )?;
            writeln!(w, "q {}", join(&r.q))?;
        }
    }
    Ok(())
}

pub fn read_rule(r: impl BufRead) -> Result<QmcRule> {
    let mut lines = r
        .lines()
        .filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
    let header = lines.next().ok_or_else(|| bad("empty file"))??;
    let mut parts = header.split_whitespace();
    let family = parts.next().ok_or_else(|| bad("missing family"))?.to_string();
    let mut kv = HashMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed header field '{p}'")))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<u64> {
        kv.get(k)
            .ok_or_else(|| bad(format!("header lacks '{k}'")))?
            .parse::<u64>()
            .map_err(|e| bad(format!("header field '{k}': {e}")))
    };
    let mut body = |tag: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| bad(format!("missing '{tag}' line")))??;
        let mut it = line.split_whitespace();
        if it.next() != Some(tag) {
            return Err(bad(format!("expected '{tag}' line, got '{line}'")));
        }
        Ok(it.map(str::to_string).collect())
    };
    let s = get("s")? as usize;
    match family.as_str() {
        "lattice" => {
            let n = get("N")? as usize;
            let nshift = get("R")? as usize;
            let z = body("z")?
                .iter()
                .map(|v| v.parse::<usize>().map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if z.len() != s {
                return Err(bad(format!("expected {s} generating components, got {}", z.len())));
            }
            let mut shifts = Vec::with_capacity(nshift);
            for _ in 0..nshift {
                let d = body("shift")?
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|e| bad(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                shifts.push(d);
            }
            Ok(QmcRule::Lattice(LatticeRule::with_shifts(n, z, shifts, get("seed")?)?))
        }
        "interlaced" => {
            let m = get("m")? as u32;
            let alpha = get("alpha")? as usize;
            let p = get("P")?;
            if gf2::degree(p) != Some(m) || !gf2::is_irreducible(p) {
                return Err(bad("modulus is not an irreducible polynomial of degree m"));
            }
            let q = body("q")?
                .iter()
                .map(|v| v.parse::<u64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if q.len() != alpha * s || q.iter().any(|v| gf2::degree(*v).is_some_and(|d| d >= m)) {
                return Err(bad(
                    "generating polynomials do not match alpha * s components of degree < m",
                ));
            }
            Ok(QmcRule::Interlaced(InterlacedPolyLattice {
                m,
                modulus: p,
                alpha,
                s,
                q,
            }))
        }
        other => Err(bad(format!("unknown family '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_rules::{cbc_poly_lattice, spod_weights};

    #[test]
    fn round_trip() {
        let lat = QmcRule::Lattice(LatticeRule::new(17, vec![1, 5, 7], 3, 99).unwrap());
        let w = spod_weights(&[0.5, 0.2], 2, 2).unwrap();
        let ipl = QmcRule::Interlaced(cbc_poly_lattice(6, 2, &w).unwrap());
        for rule in [lat, ipl] {
            let mut buf = Vec::new();
            write_rule(&mut buf, &rule).unwrap();
            let back = read_rule(buf.as_slice()).unwrap();
            assert_eq!(back, rule);
        }
        assert!(read_rule("mystery s=1\n".as_bytes()).is_err());
        assert!(read_rule("lattice N=5 s=2 alpha=1 seed=0 R=0\nz 1\n".as_bytes()).is_err());
    }
}
