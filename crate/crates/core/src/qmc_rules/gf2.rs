//! Polynomial arithmetic over GF(2); bit `k` of a `u64` holds the coefficient of `x^k`.

use crate::error::{invalid, Result};

/// Primitive polynomials of degree `m = 1..=20`.
const PRIMITIVE: [u64; 20] = [
    0b11, 0b111, 0b1011, 0b10011, 0b100101, 0b1000011, 0b10001001, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B, 0x20009, 0x40081, 0x80027, 0x100009,
];

pub fn modulus(m: u32) -> Result<u64> {
    if !(1..=20).contains(&m) {
        return Err(invalid(format!("no irreducible modulus tabulated for degree {m}")));
    }
    Ok(PRIMITIVE[m as usize - 1])
}

pub fn degree(p: u64) -> Option<u32> {
    (p != 0).then(|| 63 - p.leading_zeros())
}

pub fn rem(mut a: u64, b: u64) -> u64 {
    let db = degree(b).expect("division by zero polynomial");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

pub fn mul_mod(mut a: u64, mut b: u64, p: u64) -> u64 {
    let m = degree(p).unwrap();
    a = rem(a, p);
    let mut out = 0;
    while b != 0 {
        if b & 1 == 1 {
            out ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a >> m & 1 == 1 {
            a ^= p;
        }
    }
    out
}

/// Trial division by every polynomial of degree `1..=deg/2`.
pub fn is_irreducible(p: u64) -> bool {
    let Some(d) = degree(p) else { return false };
    if d == 0 {
        return false;
    }
    (2u64..(1u64 << (d / 2 + 1))).all(|q| rem(p, q) != 0)
}

/// First `m` Laurent digits of `r(x)/P(x)` for `deg r < deg P = m`,
/// packed with `u_1` as the most significant bit.
pub fn laurent_digits(r: u64, p: u64) -> u64 {
    let m = degree(p).unwrap();
    let mut rem = r;
    let mut out = 0;
    for _ in 0..m {
        rem <<= 1;
        out <<= 1;
        if rem >> m & 1 == 1 {
            out |= 1;
            rem ^= p;
        }
    }
    out
}

/// `v_m(r/P)` as a dyadic fraction.
pub fn v_m(r: u64, p: u64) -> f64 {
    let m = degree(p).unwrap();
    laurent_digits(r, p) as f64 / (1u64 << m) as f64
}

/// Discrete log and exp tables of `GF(2)[x]/P`.
#[derive(Debug, Clone)]
pub struct FieldTables {
    pub p: u64,
    pub exp: Vec<u64>,
    pub log: Vec<usize>,
}

impl FieldTables {
    pub fn new(p: u64) -> Result<Self> {
        if !is_irreducible(p) {
            return Err(invalid(format!("modulus {p:#b} is reducible")));
        }
        let m = degree(p).unwrap();
        let order = (1usize << m) - 1;
        for g in 2u64..(1 << m) {
            let mut exp = Vec::with_capacity(order);
            let mut log = vec![usize::MAX; order + 1];
            let mut x = 1u64;
            let mut ok = true;
            for k in 0..order {
                if log[x as usize] != usize::MAX {
                    ok = false;
                    break;
                }
                log[x as usize] = k;
                exp.push(x);
                x = mul_mod(x, g, p);
            }
            if ok && x == 1 {
                return Ok(Self { p, exp, log });
            }
        }
        // m = 1: the group is trivial
        Ok(Self {
            p,
            exp: vec![1],
            log: vec![usize::MAX, 0],
        })
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.exp.len();
        self.exp[(self.log[a as usize] + self.log[b as usize]) % n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_irreducible_and_primitive() {
        for m in 1..=20u32 {
            let p = modulus(m).unwrap();
            assert_eq!(degree(p), Some(m));
            assert!(is_irreducible(p), "m={m}");
            if m <= 16 {
                // x generates the multiplicative group
                let order = (1u64 << m) - 1;
                let mut x = 1u64;
                let mut k = 0;
                loop {
                    x = mul_mod(x, 2, p);
                    k += 1;
                    if x == 1 {
                        break;
                    }
                }
                assert_eq!(k, order, "m={m}");
            }
        }
        assert!(modulus(21).is_err());
        assert!(!is_irreducible(0b101)); // (x+1)^2
    }

    #[test]
    fn laurent_example() {
        assert_eq!(laurent_digits(1, 0b111), 0b01);
        assert_eq!(v_m(1, 0b111), 0.25);
    }

    #[test]
    fn field_tables_multiply() {
        let p = modulus(6).unwrap();
        let t = FieldTables::new(p).unwrap();
        for a in 0..64 {
            for b in 0..64 {
                assert_eq!(t.mul(a, b), mul_mod(a, b, p));
            }
        }
    }
}
