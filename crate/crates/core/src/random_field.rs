//! Affine-parametric squared refractive index `n(x, y) = n0(x) + sum_j y_j psi_j(x)`
//! on the centred square, together with the assumption checks and the
//! dimension-truncation quantities.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry_constants::{Constants, DomainGeometry, FieldBounds};

/// Mean field `n0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeanField {
    Constant(f64),
    /// `base + amp * exp(-|x|^2 / width^2)`
    Gaussian {
        base: f64,
        amp: f64,
        width: f64,
    },
}

impl MeanField {
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        match *self {
            MeanField::Constant(c) => (c, [0.0, 0.0]),
            MeanField::Gaussian { base, amp, width } => {
                let w2 = width * width;
                let e = amp * (-(x[0] * x[0] + x[1] * x[1]) / w2).exp();
                (base + e, [-2.0 * x[0] / w2 * e, -2.0 * x[1] / w2 * e])
            }
        }
    }
}

/// Frequency pairs `(j1, j2) != (0, 0)` ordered by `j1 + j2`, then lexicographically.
pub fn mode_map(count: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(count);
    let mut t = 1u32;
    while out.len() < count {
        for j1 in 0..=t {
            if out.len() == count {
                break;
            }
            out.push((j1, t - j1));
        }
        t += 1;
    }
    out
}

/// `n0 + sum_j y_j c j^-theta cos(j1 pi (x1/a + 1/2)) cos(j2 pi (x2/a + 1/2))` on the
/// square of side `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    pub n0: MeanField,
    pub amplitude: f64,
    pub theta: f64,
    pub side: f64,
    pub s_max: usize,
    freqs: Vec<(u32, u32)>,
}

impl AffineField {
    pub fn new(n0: MeanField, amplitude: f64, theta: f64, side: f64, s_max: usize) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(invalid(format!("amplitude must be >= 0, got {amplitude}")));
        }
        if !(theta > 1.0) || !theta.is_finite() {
            return Err(invalid(format!("decay exponent theta must exceed 1, got {theta}")));
        }
        if !(side > 0.0) {
            return Err(invalid("side must be positive"));
        }
        if s_max == 0 {
            return Err(invalid("field needs at least one mode"));
        }
        Ok(Self {
            n0,
            amplitude,
            theta,
            side,
            s_max,
            freqs: mode_map(s_max),
        })
    }

    /// Same field with `s_max` extended (or shrunk) to `s`.
    pub fn with_modes(&self, s: usize) -> Result<Self> {
        Self::new(self.n0, self.amplitude, self.theta, self.side, s)
    }

    pub fn frequency(&self, j: usize) -> (u32, u32) {
        self.freqs[j - 1]
    }

    fn coef(&self, j: usize) -> f64 {
        self.amplitude * (j as f64).powf(-self.theta)
    }

    /// `psi_j(x)` and its gradient, `j >= 1`.
    pub fn mode(&self, j: usize, x: [f64; 2]) -> (f64, [f64; 2]) {
        let (j1, j2) = self.freqs[j - 1];
        let c = self.coef(j);
        let w1 = j1 as f64 * PI / self.side;
        let w2 = j2 as f64 * PI / self.side;
        let a1 = w1 * (x[0] + self.side / 2.0);
        let a2 = w2 * (x[1] + self.side / 2.0);
        let (s1, c1) = a1.sin_cos();
        let (s2, c2) = a2.sin_cos();
        (c * c1 * c2, [-c * w1 * s1 * c2, -c * w2 * c1 * s2])
    }

    /// `||psi_j||_inf`, exact.
    pub fn mode_sup(&self, j: usize) -> f64 {
        self.coef(j)
    }

    /// `||grad psi_j||_inf`, exact.
    pub fn mode_grad_sup(&self, j: usize) -> f64 {
        let (j1, j2) = self.freqs[j - 1];
        self.coef(j) * PI / self.side * j1.max(j2) as f64
    }

    /// `max{||psi_j||_inf, L ||grad psi_j||_inf}`.
    pub fn mode_w1inf(&self, j: usize, l: f64) -> f64 {
        self.mode_sup(j).max(l * self.mode_grad_sup(j))
    }

    fn check_point(&self, x: [f64; 2]) -> Result<()> {
        let h = self.side / 2.0 * (1.0 + 1e-12);
        if !(x[0].abs() <= h && x[1].abs() <= h) {
            return Err(invalid(format!("point {x:?} outside the domain")));
        }
        Ok(())
    }

    /// `(n(x, y), grad n(x, y))`.
    pub fn evaluate(&self, y: &ParamVector, x: [f64; 2]) -> Result<(f64, [f64; 2])> {
        self.check_point(x)?;
        if y.s() > self.s_max {
            return Err(invalid(format!(
                "parameter dimension {} exceeds materialized modes {}",
                y.s(),
                self.s_max
            )));
        }
        let (mut n, mut g) = self.n0.eval(x);
        for (j, &yj) in y.values().iter().enumerate() {
            if yj == 0.0 {
                continue;
            }
            let (p, dp) = self.mode(j + 1, x);
            n += yj * p;
            g[0] += yj * dp[0];
            g[1] += yj * dp[1];
        }
        Ok((n, g))
    }

    /// Worst-case envelope bounds over all `y` on a `grid_res x grid_res` grid.
    ///
    /// The half-widths of both envelopes are inflated by `1 / safety`.
    pub fn verify_a1(&self, s: usize, grid_res: usize, safety: f64) -> Result<FieldBounds> {
        if grid_res < 16 {
            return Err(invalid(format!("grid_res must be >= 16, got {grid_res}")));
        }
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(invalid(format!("safety factor must lie in (0, 1], got {safety}")));
        }
        if s > self.s_max {
            return Err(invalid("s exceeds materialized modes"));
        }
        let d = 2.0;
        let h = self.side / 2.0;
        let mut out = FieldBounds {
            n_min: f64::INFINITY,
            n_max: f64::NEG_INFINITY,
            b_min: f64::INFINITY,
            b_max: f64::NEG_INFINITY,
        };
        let mut worst_n = [0.0; 2];
        let mut worst_b = [0.0; 2];
        for iy in 0..grid_res {
            for ix in 0..grid_res {
                let x = [
                    -h + self.side * ix as f64 / (grid_res - 1) as f64,
                    -h + self.side * iy as f64 / (grid_res - 1) as f64,
                ];
                let (n0, g0) = self.n0.eval(x);
                let b0 = d * n0 + x[0] * g0[0] + x[1] * g0[1];
                let mut en = 0.0;
                let mut eb = 0.0;
                for j in 1..=s {
                    let (p, dp) = self.mode(j, x);
                    en += p.abs();
                    eb += (d * p + x[0] * dp[0] + x[1] * dp[1]).abs();
                }
                en *= 0.5 / safety;
                eb *= 0.5 / safety;
                if n0 - en < out.n_min {
                    out.n_min = n0 - en;
                    worst_n = x;
                }
                out.n_max = out.n_max.max(n0 + en);
                if b0 - eb < out.b_min {
                    out.b_min = b0 - eb;
                    worst_b = x;
                }
                out.b_max = out.b_max.max(b0 + eb);
            }
        }
        if !(out.n_min > 0.0) {
            return Err(Error::AssumptionViolation(format!(
                "n_min > 0 fails at x = {worst_n:?}: envelope gives n_min = {}",
                out.n_min
            )));
        }
        if !(out.b_min > (d - 2.0) * out.n_max) {
            return Err(Error::AssumptionViolation(format!(
                "b_min > (d-2) n_max fails at x = {worst_b:?}: envelope gives b_min = {}",
                out.b_min
            )));
        }
        Ok(out)
    }

    /// Partial sums of `((kL+1) ||psi_j||_inf)^p0` and
    /// `((kL + 1/kL) ||psi_j||_{W1,inf})^p1` up to `j_max`.
    pub fn summability(&self, p0: f64, p1: f64, kl: f64, l: f64, j_max: usize) -> Result<Summability> {
        check_exponent("p0", p0)?;
        check_exponent("p1", p1)?;
        if j_max == 0 || !(kl > 0.0) {
            return Err(invalid("summability needs j_max >= 1 and kL > 0"));
        }
        let f = if j_max > self.s_max {
            self.with_modes(j_max)?
        } else {
            self.clone()
        };
        let mut k0 = 0.0;
        let mut k1 = 0.0;
        for j in 1..=j_max {
            k0 += ((kl + 1.0) * f.mode_sup(j)).powf(p0);
            k1 += ((kl + 1.0 / kl) * f.mode_w1inf(j, l)).powf(p1);
        }
        Ok(Summability {
            k0_partial: k0,
            k1_partial: k1,
            k0_converges: self.amplitude == 0.0 || self.theta * p0 > 1.0,
            k1_converges: self.amplitude == 0.0 || (self.theta - 0.5) * p1 > 1.0,
        })
    }

    /// Checks `||psi_j||_inf` is nonincreasing for the materialized modes.
    pub fn check_ordering(&self) -> Result<()> {
        for j in 1..self.s_max {
            if self.mode_sup(j + 1) > self.mode_sup(j) {
                return Err(Error::AssumptionViolation(format!(
                    "modes {j} and {} out of order",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Dimension-truncation quantities for the given constants.
    ///
    /// `s_star` is `None` when the series diverges or the bound only drops
    /// below one half beyond `1e12` terms.
    pub fn truncation_quantities(&self, constants: &Constants, p0: f64, s: usize) -> Result<TruncationReport> {
        check_exponent("p0", p0)?;
        self.check_ordering()?;
        let kl = constants.kl;
        let scale = kl * constants.c_func / constants.c_coer;
        let b: Vec<f64> = (1..=self.s_max).map(|j| scale * self.mode_sup(j)).collect();
        let sum_p: f64 = b.iter().map(|v| v.powf(p0)).sum();
        let norm_p = sum_p.powf(1.0 / p0);
        let pref1 = (1.0 / (1.0 / p0 - 1.0)).min(1.0);
        let tail1 = |s: f64| pref1 * norm_p * s.powf(1.0 - 1.0 / p0);
        let tail2 = |s: f64| norm_p * norm_p / (2.0 / p0 - 1.0) * s.powf(1.0 - 2.0 / p0);
        let s_star = if self.amplitude == 0.0 {
            Some(1)
        } else if self.theta * p0 > 1.0 {
            // smallest s with tail1(s) <= 1/2
            let t = (0.5 / (pref1 * norm_p)).powf(1.0 / (1.0 - 1.0 / p0));
            if t.is_finite() && t < 1e12 {
                let mut cand = (t.ceil() as usize).max(1);
                while cand > 1 && tail1((cand - 1) as f64) <= 0.5 {
                    cand -= 1;
                }
                while tail1(cand as f64) > 0.5 {
                    cand += 1;
                }
                Some(cand)
            } else {
                None
            }
        } else {
            None
        };
        let s_eff = s.max(1) as f64;
        Ok(TruncationReport {
            tail1_bound: tail1(s_eff),
            tail2_bound: tail2(s_eff),
            s_star,
            ell_star: ell_star(p0)?,
            pert_margin: 0.5 * b.iter().sum::<f64>(),
            pert_margin_kl: kl * (1..=self.s_max).map(|j| self.mode_sup(j)).sum::<f64>(),
            b,
        })
    }
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("{name} must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// `ceil((2 - p0) / (2 - 2 p0))`.
pub fn ell_star(p0: f64) -> Result<usize> {
    check_exponent("p0", p0)?;
    let r = (2.0 - p0) / (2.0 - 2.0 * p0);
    // guard against 1.5000000000000002 style round-up
    let c = (r - 1e-12).ceil();
    Ok(c as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summability {
    pub k0_partial: f64,
    pub k1_partial: f64,
    pub k0_converges: bool,
    pub k1_converges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub b: Vec<f64>,
    pub tail1_bound: f64,
    pub tail2_bound: f64,
    pub s_star: Option<usize>,
    pub ell_star: usize,
    pub pert_margin: f64,
    pub pert_margin_kl: f64,
}

impl TruncationReport {
    /// Bound on `sum_{j>s} b_j`.
    pub fn tail1_at(&self, p0: f64, s: usize) -> f64 {
        let norm_p = self.b.iter().map(|v| v.powf(p0)).sum::<f64>().powf(1.0 / p0);
        (1.0 / (1.0 / p0 - 1.0)).min(1.0) * norm_p * (s as f64).powf(1.0 - 1.0 / p0)
    }

    /// Bound on `sum_{j>s} b_j^2`.
    pub fn tail2_at(&self, p0: f64, s: usize) -> f64 {
        let norm_p = self.b.iter().map(|v| v.powf(p0)).sum::<f64>().powf(1.0 / p0);
        norm_p * norm_p / (2.0 / p0 - 1.0) * (s as f64).powf(1.0 - 2.0 / p0)
    }
}

/// Parameter vector `y_1..y_s` with every `|y_j| <= 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.abs() <= 0.5 + 1e-14)) {
            return Err(invalid(format!("y_{} = {v} outside [-1/2, 1/2]", j + 1)));
        }
        Ok(Self(values))
    }

    pub fn zeros(s: usize) -> Self {
        Self(vec![0.0; s])
    }

    pub fn s(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0.get(j - 1).copied().unwrap_or(0.0)
    }

    /// Copy with `y_j` replaced (extending with zeros as needed).
    pub fn with(&self, j: usize, v: f64) -> Self {
        let mut out = self.0.clone();
        if out.len() < j {
            out.resize(j, 0.0);
        }
        out[j - 1] = v;
        Self(out)
    }
}

/// Builds the field and bounds for the square domain of `geom`.
pub fn square_field(
    geom: &DomainGeometry,
    n0: MeanField,
    amplitude: f64,
    theta: f64,
    s_max: usize,
) -> Result<AffineField> {
    let side = geom.side.ok_or_else(|| invalid("field needs the square domain"))?;
    AffineField::new(n0, amplitude, theta, side, s_max)
}
