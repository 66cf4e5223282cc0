use serde::{Deserialize, Serialize};

use super::gf2::{self, FieldTables};
use super::weights::{poly_mul, SpodWeights};
use crate::error::{invalid, Result};
use crate::math::factorial;

/// Interlaced polynomial lattice rule with `N = 2^m` points in `[0,1)^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlacedPolyLattice {
    pub m: u32,
    pub modulus: u64,
    pub alpha: usize,
    pub s: usize,
    /// `alpha * s` generating polynomials; component `i` feeds coordinate `i / alpha`.
    pub q: Vec<u64>,
}

/// Interleaves `alpha` streams of `m` digits: output digit `alpha (a-1) + r` is digit `a` of stream `r`.
pub fn interlace(streams: &[u64], m: u32) -> u64 {
    let mut out = 0u64;
    for a in 0..m {
        for s in streams {
            out = out << 1 | (s >> (m - 1 - a) & 1);
        }
    }
    out
}

/// Inverse of [`interlace`].
pub fn deinterlace(x: u64, alpha: usize, m: u32) -> Vec<u64> {
    let total = alpha as u32 * m;
    let mut out = vec![0u64; alpha];
    for pos in 0..total {
        let bit = x >> (total - 1 - pos) & 1;
        out[pos as usize % alpha] = out[pos as usize % alpha] << 1 | bit;
    }
    out
}

/// `sum_{k >= 1} 2^{-alpha a(k)} wal_k(x)` with `a(k)` the bit length of `k`,
/// for `x` given by `m` binary digits.
pub fn walsh_kernel(digits: u64, m: u32, alpha: usize) -> f64 {
    let rho = 2f64.powi(1 - alpha as i32);
    if digits == 0 {
        return 0.5 * rho / (1.0 - rho);
    }
    let t = m - (63 - digits.leading_zeros());
    let rt = rho.powi(t as i32);
    0.5 * ((rho - rt) / (1.0 - rho) - rt)
}

impl InterlacedPolyLattice {
    pub fn n(&self) -> usize {
        1 << self.m
    }

    /// Digits of component `comp` at point index `idx`.
    pub fn component_digits(&self, idx: usize, comp: usize) -> u64 {
        let r = gf2::rem(gf2::mul_mod(idx as u64, self.q[comp], self.modulus), self.modulus);
        gf2::laurent_digits(r, self.modulus)
    }

    /// All `N` points in `[0,1)^s`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let scale = 2f64.powi(-((self.alpha as u32 * self.m) as i32));
        (0..self.n())
            .map(|idx| {
                (0..self.s)
                    .map(|j| {
                        let streams: Vec<u64> = (0..self.alpha)
                            .map(|r| self.component_digits(idx, j * self.alpha + r))
                            .collect();
                        interlace(&streams, self.m) as f64 * scale
                    })
                    .collect()
            })
            .collect()
    }

    /// Criterion value of the full rule (see [`cbc_poly_lattice`]).
    pub fn criterion(&self, weights: &SpodWeights) -> f64 {
        let n = self.n();
        let alpha = self.alpha;
        let total: f64 = (0..n)
            .map(|idx| {
                let mut qn = vec![1.0];
                for j in 0..self.s {
                    let mut pi = 1.0;
                    for r in 0..alpha {
                        let phi = walsh_kernel(self.component_digits(idx, j * alpha + r), self.m, alpha);
                        pi *= 1.0 + component_weight(alpha, r) * phi;
                    }
                    let pj: Vec<f64> = weights.order_poly(j + 1).iter().map(|c| c * (pi - 1.0)).collect();
                    let mut upd = poly_mul(&qn, &pj);
                    for (u, v) in upd.iter_mut().zip(&qn) {
                        *u += v;
                    }
                    qn = upd;
                }
                weighted_tail(&qn)
            })
            .sum();
        total / n as f64
    }
}

/// `c_r = 2^{alpha - r}` for the 1-based position `r` inside a block (`r0 = r - 1`).
fn component_weight(alpha: usize, r0: usize) -> f64 {
    2f64.powi((alpha - 1 - r0) as i32)
}

/// `sum_{l >= 1} l! c_l`.
fn weighted_tail(c: &[f64]) -> f64 {
    c.iter().enumerate().skip(1).map(|(l, v)| factorial(l) * v).sum()
}

/// Greedy component-by-component choice of the `alpha s` generating polynomials.
///
/// Coordinate `j` of the interlaced rule carries the block of components
/// `alpha j .. alpha (j+1)`. The criterion is
/// `(1/N) sum_n sum_{u != 0} gamma_u prod_{j in u} (prod_r (1 + c_r phi(x_{n,j,r})) - 1)`
/// with SPOD `gamma_u`, the Walsh kernel `phi` of [`walsh_kernel`] and `c_r = 2^{alpha-r}`;
/// while a block is incomplete its later components are left out.
pub fn cbc_poly_lattice(m: u32, s: usize, weights: &SpodWeights) -> Result<InterlacedPolyLattice> {
    if !(4..=20).contains(&m) {
        return Err(invalid(format!("m = {m} outside [4, 20]")));
    }
    if s == 0 || s > weights.s() {
        return Err(invalid(format!("s = {s} outside 1..={}", weights.s())));
    }
    let alpha = weights.alpha;
    if alpha as u32 * m > 63 {
        return Err(invalid("alpha * m exceeds 63 interlaced digits"));
    }
    let p = gf2::modulus(m)?;
    let tables = FieldTables::new(p)?;
    let n = 1usize << m;
    // phi at every residue r (the point of residue r is v_m(r/P))
    let phi_res: Vec<f64> = (0..n as u64)
        .map(|r| walsh_kernel(gf2::laurent_digits(r, p), m, alpha))
        .collect();
    let mut qn: Vec<Vec<f64>> = vec![vec![1.0]; n];
    let mut pi = vec![1.0; n];
    let mut q = Vec::with_capacity(alpha * s);
    let order = n - 1;
    for comp in 0..alpha * s {
        let j = comp / alpha;
        let r0 = comp % alpha;
        let c = component_weight(alpha, r0);
        let pj = weights.order_poly(j + 1);
        // W(idx) = c pi(idx) S1(idx); idx = 0 only ever sees residue 0
        let w: Vec<f64> = (0..n)
            .map(|idx| c * pi[idx] * weighted_tail(&poly_mul(&qn[idx], &pj)))
            .collect();
        // gather W by discrete log of the index so that residue = exp[log idx + log q]
        let mut w_by_log = vec![0.0; order];
        for idx in 1..n {
            w_by_log[tables.log[idx]] = w[idx];
        }
        let phi_by_log: Vec<f64> = (0..order).map(|k| phi_res[tables.exp[k] as usize]).collect();
        let mut best = (f64::INFINITY, 0u64);
        let mut values = Vec::with_capacity(order);
        for cand in 1..n as u64 {
            let lq = tables.log[cand as usize];
            let mut acc = w[0] * phi_res[0];
            let (head, tail) = phi_by_log.split_at(lq);
            for (wv, ph) in w_by_log.iter().zip(tail.iter().chain(head)) {
                acc += wv * ph;
            }
            values.push(acc);
            if acc < best.0 {
                best = (acc, cand);
            }
        }
        let tol = 1e-12 * best.0.abs().max(f64::MIN_POSITIVE);
        let chosen = (1..n as u64)
            .zip(&values)
            .find(|(_, v)| **v <= best.0 + tol)
            .map(|(c, _)| c)
            .unwrap();
        for idx in 0..n {
            let res = tables.mul(idx as u64, chosen);
            pi[idx] *= 1.0 + c * phi_res[res as usize];
        }
        if r0 == alpha - 1 {
            for idx in 0..n {
                let pjs: Vec<f64> = pj.iter().map(|v| v * (pi[idx] - 1.0)).collect();
                let mut upd = poly_mul(&qn[idx], &pjs);
                for (u, v) in upd.iter_mut().zip(&qn[idx]) {
                    *u += v;
                }
                qn[idx] = upd;
                pi[idx] = 1.0;
            }
        }
        q.push(chosen);
    }
    Ok(InterlacedPolyLattice {
        m,
        modulus: p,
        alpha,
        s,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_rules::weights::spod_weights;

    #[test]
    fn interlace_examples() {
        assert_eq!(interlace(&[1, 1], 1), 0b11);
        let x = interlace(&[0b1010, 0b0110, 0b1111], 4);
        assert_eq!(deinterlace(x, 3, 4), vec![0b1010, 0b0110, 0b1111]);
    }

    fn walsh_brute(digits: u64, m: u32, alpha: usize, kmax_bits: u32) -> f64 {
        let mut acc = 0.0;
        for k in 1u64..(1 << kmax_bits) {
            let a = 64 - k.leading_zeros();
            // wal_k(x) = (-1)^{sum_i k_i x_{i+1}}
            let mut parity = 0;
            for i in 0..kmax_bits.min(m) {
                let ki = k >> i & 1;
                let xi = digits >> (m - 1 - i) & 1;
                parity ^= ki & xi;
            }
            let sign = if parity == 1 { -1.0 } else { 1.0 };
            acc += 2f64.powi(-(alpha as i32) * a as i32) * sign;
        }
        acc
    }

    #[test]
    fn walsh_kernel_matches_series() {
        for alpha in [2, 3] {
            for d in 0u64..16 {
                let a = walsh_kernel(d, 4, alpha);
                let b = walsh_brute(d, 4, alpha, 20);
                // truncated series tail plus summation rounding over 2^20 terms
                let tail = 2f64.powi((1 - alpha as i32) * 20) + 1e-10;
                assert!((a - b).abs() < tail, "alpha={alpha} d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn digits_recover_components() {
        let w = spod_weights(&[0.5, 0.25, 0.125], 2, 3).unwrap();
        let rule = cbc_poly_lattice(5, 3, &w).unwrap();
        assert_eq!(rule.q.len(), 6);
        let pts = rule.points();
        for (idx, p) in pts.iter().enumerate() {
            for (j, x) in p.iter().enumerate() {
                assert!((0.0..1.0).contains(x));
                let bits = (x * 2f64.powi(10)) as u64;
                let streams = deinterlace(bits, 2, 5);
                for r in 0..2 {
                    assert_eq!(streams[r], rule.component_digits(idx, 2 * j + r));
                }
            }
        }
    }

    #[test]
    fn criterion_matches_subset_enumeration() {
        let w = spod_weights(&[0.6, 0.3, 0.2], 2, 3).unwrap();
        let rule = cbc_poly_lattice(4, 3, &w).unwrap();
        let n = rule.n();
        let comps = 6;
        let mut brute = 0.0;
        for idx in 0..n {
            let phi: Vec<f64> = (0..comps)
                .map(|i| component_weight(2, i % 2) * walsh_kernel(rule.component_digits(idx, i), 4, 2))
                .collect();
            for mask in 1u32..(1 << comps) {
                let v: Vec<usize> = (0..comps).filter(|i| mask >> i & 1 == 1).collect();
                let mut u: Vec<usize> = v.iter().map(|i| i / 2 + 1).collect();
                u.dedup();
                brute += w.gamma(&u) * v.iter().map(|i| phi[*i]).product::<f64>();
            }
        }
        brute /= n as f64;
        let a = rule.criterion(&w);
        assert!((a - brute).abs() < 1e-12 * brute, "{a} vs {brute}");
    }

    #[test]
    fn cbc_choices_are_stepwise_minimal() {
        // re-run the last step exhaustively through the full criterion
        let w = spod_weights(&[0.6, 0.3], 2, 2).unwrap();
        let rule = cbc_poly_lattice(5, 2, &w).unwrap();
        let best = rule.criterion(&w);
        for cand in 1..32u64 {
            let mut alt = rule.clone();
            *alt.q.last_mut().unwrap() = cand;
            assert!(alt.criterion(&w) >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn product_integrand_converges_fast() {
        let s = 6;
        let a: Vec<f64> = (1..=s).map(|j| (j as f64).powi(-3)).collect();
        let w = spod_weights(&a, 2, s).unwrap();
        let mut errs = Vec::new();
        for m in [5, 8] {
            let rule = cbc_poly_lattice(m, s, &w).unwrap();
            let pts = rule.points();
            let q: f64 = pts
                .iter()
                .map(|t| {
                    t.iter()
                        .zip(&a)
                        .map(|(x, aj)| 1.0 + aj * ((x - 0.5).powi(2) - 1.0 / 12.0))
                        .product::<f64>()
                })
                .sum::<f64>()
                / pts.len() as f64;
            errs.push((q - 1.0).abs());
        }
        // 8x more points, expect close to 64x smaller error
        assert!(errs[1] < errs[0] / 20.0, "{errs:?}");
    }
}
