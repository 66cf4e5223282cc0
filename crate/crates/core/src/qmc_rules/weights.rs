use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{invalid, Result};
use crate::math::{factorial, zeta};

/// `lambda` as a function of the summability exponent `p1` and the slack `delta`.
pub fn lambda_rule(p1: f64, delta: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(invalid(format!("p1 = {p1} must lie in (0, 1)")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(invalid(format!("delta = {delta} must lie in (0, 1/2)")));
    }
    Ok(if p1 <= 2.0 / 3.0 {
        1.0 / (2.0 - 2.0 * delta)
    } else {
        p1 / (2.0 - p1)
    })
}

/// `rho(lambda) = 2 zeta(2 lambda) / (2 pi^2)^lambda`.
pub fn rho(lambda: f64) -> Result<f64> {
    if !(lambda > 0.5 && lambda <= 1.0) {
        return Err(invalid(format!("lambda = {lambda} must lie in (1/2, 1]")));
    }
    let two_pi2 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    Ok(2.0 * zeta(2.0 * lambda)? / two_pi2.powf(lambda))
}

/// Product and order dependent weights `gamma_u = Gamma_|u| prod_{j in u} beta_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodWeights {
    pub lambda: f64,
    pub rho: f64,
    pub upsilon: Vec<f64>,
    /// `Gamma_l = (l!)^{2/(1+lambda)}`, `l = 0..=s`
    pub order_factor: Vec<f64>,
    /// `beta_j = (Upsilon_j / sqrt(rho))^{2/(1+lambda)}`, 0-based
    pub dim_factor: Vec<f64>,
}

pub fn pod_weights(upsilon: &[f64], p1: f64, delta: f64) -> Result<PodWeights> {
    let lambda = lambda_rule(p1, delta)?;
    pod_weights_with_lambda(upsilon, lambda)
}

pub fn pod_weights_with_lambda(upsilon: &[f64], lambda: f64) -> Result<PodWeights> {
    if upsilon.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
        return Err(invalid("Upsilon entries must be finite and non-negative"));
    }
    let rho = rho(lambda)?;
    let e = 2.0 / (1.0 + lambda);
    Ok(PodWeights {
        lambda,
        rho,
        upsilon: upsilon.to_vec(),
        order_factor: (0..=upsilon.len()).map(|l| factorial(l).powf(e)).collect(),
        dim_factor: upsilon.iter().map(|u| (u / rho.sqrt()).powf(e)).collect(),
    })
}

impl PodWeights {
    /// Explicit order and product factors, e.g. for tests with fixed weights.
    pub fn from_factors(order_factor: Vec<f64>, dim_factor: Vec<f64>) -> Result<Self> {
        if order_factor.len() != dim_factor.len() + 1 {
            return Err(invalid("need s + 1 order factors for s dimension factors"));
        }
        Ok(Self {
            lambda: 1.0,
            rho: 1.0 / 6.0,
            upsilon: Vec::new(),
            order_factor,
            dim_factor,
        })
    }

    pub fn s(&self) -> usize {
        self.dim_factor.len()
    }

    /// `gamma_u` for a set of 1-based indices.
    pub fn gamma(&self, u: &[usize]) -> f64 {
        self.order_factor[u.len()] * u.iter().map(|j| self.dim_factor[j - 1]).product::<f64>()
    }

    /// `sum_{empty != u in 1..=s} gamma_u^lambda rho^|u|` by elementary symmetric sums.
    pub fn bound_sum(&self, s: usize) -> f64 {
        let lam = self.lambda;
        let mut e = vec![0.0; s + 1];
        e[0] = 1.0;
        for j in 0..s {
            let b = self.dim_factor[j].powf(lam) * self.rho;
            for l in (1..=j + 1).rev() {
                e[l] += b * e[l - 1];
            }
        }
        (1..=s).map(|l| self.order_factor[l].powf(lam) * e[l]).sum()
    }

    /// Shift-averaged root-mean-square bound `(2/N sum gamma_u^lambda rho^|u|)^{1/(2 lambda)}`.
    pub fn qmc_bound(&self, s: usize, n: usize) -> f64 {
        (2.0 / n as f64 * self.bound_sum(s)).powf(0.5 / self.lambda)
    }

    /// Rate the bound predicts: `N^{-1/(2 lambda)}`.
    pub fn rate(&self) -> f64 {
        0.5 / self.lambda
    }
}

/// Smoothness-driven product and order dependent weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpodWeights {
    pub alpha: usize,
    pub upsilon: Vec<f64>,
}

/// `alpha = floor(1/p1) + 1`.
pub fn interlacing_factor(p1: f64) -> Result<usize> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(invalid(format!("p1 = {p1} must lie in (0, 1)")));
    }
    Ok((1.0 / p1).floor() as usize + 1)
}

pub fn spod_weights(upsilon: &[f64], alpha: usize, trunc: usize) -> Result<SpodWeights> {
    if alpha < 2 {
        return Err(invalid("interlacing factor must be at least 2"));
    }
    if upsilon.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
        return Err(invalid("Upsilon entries must be finite and non-negative"));
    }
    let n = trunc.min(upsilon.len());
    Ok(SpodWeights {
        alpha,
        upsilon: upsilon[..n].to_vec(),
    })
}

impl SpodWeights {
    pub fn s(&self) -> usize {
        self.upsilon.len()
    }

    /// `P_j(t) = sum_{nu=1}^alpha 2^{delta(nu, alpha)} Upsilon_j^nu t^nu`, coefficients `0..=alpha`.
    pub fn order_poly(&self, j: usize) -> Vec<f64> {
        let u = self.upsilon[j - 1];
        let mut c = vec![0.0; self.alpha + 1];
        for nu in 1..=self.alpha {
            c[nu] = u.powi(nu as i32) * if nu == self.alpha { 2.0 } else { 1.0 };
        }
        c
    }

    /// `gamma_u` via a product of order polynomials, `sum_l l! [t^l] prod_j P_j(t)`.
    pub fn gamma(&self, u: &[usize]) -> f64 {
        let mut poly = vec![1.0];
        for &j in u {
            poly = poly_mul(&poly, &self.order_poly(j));
        }
        poly.iter().enumerate().map(|(l, c)| factorial(l) * c).sum()
    }
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Writes `u,gamma` rows for every nonempty `u` with `|u| <= max_order` over `1..=s`;
/// `u` is the sorted index list joined by `;`.
pub fn write_weights_csv(
    w: &mut impl Write,
    s: usize,
    max_order: usize,
    gamma: impl Fn(&[usize]) -> f64,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["u", "gamma"])?;
    let mut stack: Vec<Vec<usize>> = (1..=s).rev().map(|j| vec![j]).collect();
    let mut rows = Vec::new();
    while let Some(u) = stack.pop() {
        rows.push(u.clone());
        if u.len() < max_order {
            for j in (u[u.len() - 1] + 1..=s).rev() {
                let mut v = u.clone();
                v.push(j);
                stack.push(v);
            }
        }
    }
    rows.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    for u in rows {
        let key = u.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(";");
        out.write_record([key, format!("{:e}", gamma(&u))])?;
    }
    out.flush()?;
    Ok(())
}
