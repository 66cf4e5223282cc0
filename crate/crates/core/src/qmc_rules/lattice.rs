use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::weights::PodWeights;
use crate::error::{invalid, Result};
use crate::math::is_prime;

/// Shift-averaged kernel `omega(x) = x^2 - x + 1/6`.
#[inline]
pub fn omega(x: f64) -> f64 {
    x * x - x + 1.0 / 6.0
}

/// `omega(k/N)` for `k = 0..N`.
fn omega_table(n: usize) -> Vec<f64> {
    (0..n).map(|k| omega(k as f64 / n as f64)).collect()
}

/// Randomly shifted rank-1 lattice rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRule {
    pub n: usize,
    pub z: Vec<usize>,
    pub shifts: Vec<Vec<f64>>,
    pub seed: u64,
}

impl LatticeRule {
    /// Draws `r` uniform shifts in `[0,1)^s` from `seed`.
    pub fn new(n: usize, z: Vec<usize>, r: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = z.len();
        let shifts = (0..r).map(|_| (0..s).map(|_| rng.gen::<f64>()).collect()).collect();
        Self::with_shifts(n, z, shifts, seed)
    }

    pub fn with_shifts(n: usize, z: Vec<usize>, shifts: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("lattice rule needs N >= 1"));
        }
        if shifts
            .iter()
            .any(|d| d.len() != z.len() || d.iter().any(|v| !(0.0..1.0).contains(v)))
        {
            return Err(invalid("shifts must be vectors in [0,1)^s"));
        }
        Ok(Self { n, z, shifts, seed })
    }

    pub fn s(&self) -> usize {
        self.z.len()
    }

    pub fn r(&self) -> usize {
        self.shifts.len()
    }
}

/// `frac(i z / N + Delta) - 1/2` for `i = 1..=N`; `shift_index = None` means `Delta = 0`.
pub fn lattice_points(rule: &LatticeRule, shift_index: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let zero = vec![0.0; rule.s()];
    let delta = match shift_index {
        None => &zero,
        Some(r) => rule
            .shifts
            .get(r)
            .ok_or_else(|| invalid(format!("shift index {r} out of range (R = {})", rule.r())))?,
    };
    let n = rule.n;
    Ok((1..=n)
        .map(|i| {
            rule.z
                .iter()
                .zip(delta)
                .map(|(&z, d)| {
                    let t = ((i as u128 * z as u128) % n as u128) as f64 / n as f64 + d;
                    t - t.floor() - 0.5
                })
                .collect()
        })
        .collect())
}

/// Objective values of one CBC step, indexed by candidate `z - 1`.
#[derive(Debug, Clone)]
pub struct CbcStep {
    pub objective: Vec<f64>,
    pub chosen: usize,
}

/// Greedy CBC construction under POD weights; also returns every step's objectives.
pub fn cbc_lattice_trace(n: usize, s: usize, weights: &PodWeights) -> Result<(Vec<usize>, Vec<CbcStep>)> {
    if !is_prime(n as u64) {
        return Err(invalid(format!("CBC needs prime N, got {n}")));
    }
    if s == 0 || s > weights.s() {
        return Err(invalid(format!("s = {s} outside 1..={}", weights.s())));
    }
    let om = omega_table(n);
    // q[l][i] = e_l(beta_j omega(i z_j / N), j < d)
    let mut q = vec![vec![0.0; n]; s + 1];
    q[0].iter_mut().for_each(|v| *v = 1.0);
    let mut z = Vec::with_capacity(s);
    let mut steps = Vec::with_capacity(s);
    for d in 1..=s {
        let beta = weights.dim_factor[d - 1];
        let wi: Vec<f64> = (0..n)
            .map(|i| (1..=d).map(|l| weights.order_factor[l] * q[l - 1][i]).sum::<f64>())
            .collect();
        let base: f64 = (0..n)
            .map(|i| (1..d).map(|l| weights.order_factor[l] * q[l][i]).sum::<f64>())
            .sum();
        let objective: Vec<f64> = (1..n)
            .map(|c| {
                let mut acc = 0.0;
                let mut k = 0;
                for w in &wi {
                    acc += om[k] * w;
                    k += c;
                    if k >= n {
                        k -= n;
                    }
                }
                (base + beta * acc) / n as f64
            })
            .collect();
        let chosen = argmin_first(&objective) + 1;
        for i in 0..n {
            let o = beta * om[(i * chosen) % n];
            for l in (1..=d).rev() {
                let prev = q[l - 1][i];
                q[l][i] += o * prev;
            }
        }
        z.push(chosen);
        steps.push(CbcStep { objective, chosen });
    }
    Ok((z, steps))
}

/// Index of the smallest value; ties within rounding go to the lowest index.
fn argmin_first(v: &[f64]) -> usize {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * min.abs().max(f64::MIN_POSITIVE);
    v.iter().position(|x| *x <= min + tol).unwrap_or(0)
}

pub fn cbc_lattice(n: usize, s: usize, weights: &PodWeights) -> Result<Vec<usize>> {
    cbc_lattice_trace(n, s, weights).map(|(z, _)| z)
}

/// Squared shift-averaged worst-case error `e^2(z)` via the order recursion.
pub fn worst_case_error_sq(n: usize, z: &[usize], weights: &PodWeights) -> f64 {
    let s = z.len();
    let om = omega_table(n);
    let mut total = 0.0;
    for i in 0..n {
        let mut e = vec![0.0; s + 1];
        e[0] = 1.0;
        for (j, &zj) in z.iter().enumerate() {
            let o = weights.dim_factor[j] * om[(i * zj) % n];
            for l in (1..=j + 1).rev() {
                e[l] += o * e[l - 1];
            }
        }
        total += (1..=s).map(|l| weights.order_factor[l] * e[l]).sum::<f64>();
    }
    total / n as f64
}

/// `e(z)` of a rule, reported next to the a-priori bound.
pub fn worst_case_error(rule: &LatticeRule, weights: &PodWeights) -> (f64, f64) {
    let e = worst_case_error_sq(rule.n, &rule.z, weights).max(0.0).sqrt();
    (e, weights.qmc_bound(rule.s(), rule.n))
}

/// Plain triple sum over all nonempty subsets, points and coordinates.
pub fn worst_case_error_sq_naive(n: usize, z: &[usize], gamma: impl Fn(&[usize]) -> f64) -> f64 {
    let s = z.len();
    let mut total = 0.0;
    for mask in 1u64..(1 << s) {
        let u: Vec<usize> = (1..=s).filter(|j| mask & (1 << (j - 1)) != 0).collect();
        let g = gamma(&u);
        let mut inner = 0.0;
        for i in 0..n {
            let mut p = 1.0;
            for &j in &u {
                let x = ((i * z[j - 1]) % n) as f64 / n as f64;
                p *= omega(x);
            }
            inner += p;
        }
        total += g * inner / n as f64;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_rules::weights::pod_weights;
    use proptest::prelude::*;

    #[test]
    fn point_map_examples() {
        let rule = LatticeRule::with_shifts(4, vec![1, 3], vec![], 0).unwrap();
        let pts = lattice_points(&rule, None).unwrap();
        assert_eq!(pts[0], vec![-0.25, 0.25]);
        assert!(lattice_points(&rule, Some(0)).is_err());
        let rule = LatticeRule::with_shifts(7, vec![3], vec![], 0).unwrap();
        let mut c: Vec<f64> = lattice_points(&rule, None)
            .unwrap()
            .iter()
            .map(|p| p[0] + 0.5)
            .collect();
        c.sort_by(f64::total_cmp);
        for (k, v) in c.iter().enumerate() {
            assert!((v - k as f64 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shifted_points_form_a_shifted_group() {
        let rule = LatticeRule::new(11, vec![1, 4, 7], 1, 5).unwrap();
        let pts = lattice_points(&rule, Some(0)).unwrap();
        let frac = |v: f64| v - v.floor();
        for a in &pts {
            for b in &pts {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| frac(x - y)).collect();
                // every difference is a lattice point t_i
                let hit = (0..11).any(|i| {
                    rule.z.iter().zip(&d).all(|(&z, v)| {
                        let t = ((i * z) % 11) as f64 / 11.0;
                        (t - v).abs() < 1e-12 || (t - v).abs() > 1.0 - 1e-12
                    })
                });
                assert!(hit);
            }
        }
    }

    #[test]
    fn one_dimensional_sum() {
        // (1/N) sum_i omega(i/N) = 1/(6 N^2)
        for n in [5, 13, 101] {
            let w = PodWeights::from_factors(vec![1.0, 1.0], vec![1.0]).unwrap();
            let e2 = worst_case_error_sq(n, &[1], &w);
            assert!((e2 - 1.0 / (6.0 * (n * n) as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn first_component_is_one() {
        let w = pod_weights(&[0.5, 0.2, 0.1], 0.6, 0.1).unwrap();
        let (z, steps) = cbc_lattice_trace(31, 3, &w).unwrap();
        assert_eq!(z[0], 1);
        let o = &steps[0].objective;
        assert!(o.iter().all(|v| (v - o[0]).abs() < 1e-14));
        assert!(cbc_lattice(32, 2, &w).is_err());
    }

    #[test]
    fn zero_weights_give_zero_error() {
        let w = PodWeights::from_factors(vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(worst_case_error_sq(13, &[1, 5], &w), 0.0);
        let w = PodWeights::from_factors(vec![1.0, 1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(worst_case_error_sq(13, &[1, 5], &w), 0.0);
    }

    #[test]
    fn bound_dominates_cbc_error() {
        let ups: Vec<f64> = (1..=6).map(|j| 0.8 / (j * j) as f64).collect();
        let w = pod_weights(&ups, 0.6, 0.1).unwrap();
        for n in [31, 127, 257] {
            let z = cbc_lattice(n, 6, &w).unwrap();
            let rule = LatticeRule::new(n, z, 1, 0).unwrap();
            let (e, b) = worst_case_error(&rule, &w);
            assert!(e <= b, "N={n}: {e} > {b}");
        }
    }

    proptest! {
        #[test]
        fn recursion_matches_naive(z in proptest::collection::vec(1usize..17, 3),
                                   ups in proptest::collection::vec(0.0f64..3.0, 3)) {
            let w = pod_weights(&ups, 0.7, 0.1).unwrap();
            let a = worst_case_error_sq(17, &z, &w);
            let b = worst_case_error_sq_naive(17, &z, |u| w.gamma(u));
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }

        #[test]
        fn reflection_symmetry(z in proptest::collection::vec(1usize..13, 3)) {
            let w = pod_weights(&[0.9, 0.4, 0.2], 0.6, 0.1).unwrap();
            let zr: Vec<usize> = z.iter().map(|v| 13 - v).collect();
            let a = worst_case_error_sq(13, &z, &w);
            let b = worst_case_error_sq(13, &zr, &w);
            prop_assert!((a - b).abs() <= 1e-14 * a);
        }
    }
}
