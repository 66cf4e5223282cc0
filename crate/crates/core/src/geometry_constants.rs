//! Domain geometry, the free parameters of the coercive form, and the
//! wavenumber-explicit constants built from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Star-shaped Lipschitz domain described by its size `L = sup |x|` and the
/// bounds `gamma_hat L <= x.n <= mu_hat L` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    pub d: usize,
    pub l: f64,
    pub gamma_hat: f64,
    pub mu_hat: f64,
    /// Side length when the domain is the axis-aligned square centred at the origin.
    pub side: Option<f64>,
}

impl DomainGeometry {
    /// The square `(-side/2, side/2)^2`.
    pub fn square(side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(invalid(format!("square side must be positive, got {side}")));
        }
        let l = side * std::f64::consts::SQRT_2 / 2.0;
        Ok(Self {
            d: 2,
            l,
            gamma_hat: (side / 2.0) / l,
            mu_hat: (side / 2.0) / l,
            side: Some(side),
        })
    }

    /// A bare geometry used only for the scalar formulas (e.g. `d = 3`).
    pub fn abstract_domain(d: usize, l: f64, gamma_hat: f64, mu_hat: f64) -> Result<Self> {
        if d < 1 || !(l > 0.0) || !(gamma_hat > 0.0) || !(mu_hat > 0.0) {
            return Err(invalid(
                "abstract domain needs d >= 1 and positive L, gamma_hat, mu_hat",
            ));
        }
        Ok(Self {
            d,
            l,
            gamma_hat,
            mu_hat,
            side: None,
        })
    }

    pub fn half_side(&self) -> Result<f64> {
        self.side
            .map(|s| s / 2.0)
            .ok_or_else(|| invalid("this operation needs the square domain"))
    }

    pub fn kl(&self, k: f64) -> f64 {
        k * self.l
    }
}

/// Uniform bounds of the refractive index over the parameter box.
///
/// `b` is `div(x n) = d n + x . grad n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub n_min: f64,
    pub n_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

/// The free parameters of the coercive sesquilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub a: f64,
    pub beta1_hat: f64,
    pub beta2_hat: f64,
}

/// Optional user overrides of [`FormParams`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub beta1_hat: Option<f64>,
    pub beta2_hat: Option<f64>,
}

impl FormParams {
    /// Derived coefficients `xi1, xi2, xi3` of the volume and boundary terms.
    pub fn xi(&self, d: usize, kl: f64) -> (Complex64, Complex64, Complex64) {
        let i = Complex64::i();
        let db = self.beta1_hat - self.beta2_hat;
        let xi1 = Complex64::from(2.0 - d as f64 + self.alpha1 + self.alpha2) + i * kl * db;
        let xi2 = Complex64::from(-self.alpha1 - self.alpha2) - i * kl * db;
        let xi3 = Complex64::from(self.alpha2) - i * kl * self.beta2_hat;
        (xi1, xi2, xi3)
    }
}

fn beta1_lower(geom: &DomainGeometry, bounds: &FieldBounds) -> f64 {
    bounds.n_max * geom.mu_hat / 2.0 + 2.0 * geom.mu_hat * geom.mu_hat / geom.gamma_hat + geom.gamma_hat / 2.0
}

fn check_bounds(geom: &DomainGeometry, bounds: &FieldBounds) -> Result<()> {
    let ok = [bounds.n_min, bounds.n_max, bounds.b_min, bounds.b_max]
        .iter()
        .all(|v| v.is_finite());
    if !ok || !(bounds.n_min > 0.0) || bounds.n_max < bounds.n_min {
        return Err(invalid(format!("bad field bounds {bounds:?}")));
    }
    if !(bounds.b_min > (geom.d as f64 - 2.0) * bounds.n_max) {
        return Err(Error::AssumptionViolation(format!(
            "b_min = {} must exceed (d-2) n_max = {}",
            bounds.b_min,
            (geom.d as f64 - 2.0) * bounds.n_max
        )));
    }
    Ok(())
}

/// Midpoints of the admissible intervals for `alpha1` and `A`, the lower
/// bound for `beta1_hat`, and `alpha2 = alpha1`, `beta2_hat = beta1_hat`.
pub fn select_parameters(geom: &DomainGeometry, bounds: &FieldBounds) -> Result<FormParams> {
    check_bounds(geom, bounds)?;
    let lo = (geom.d as f64 - 2.0) / 2.0;
    let hi = bounds.b_min / (2.0 * bounds.n_max);
    let alpha1 = 0.5 * (lo + hi);
    let a_hi = (bounds.b_min - 2.0 * alpha1 * bounds.n_max) / (2.0 * bounds.n_max * bounds.n_max);
    let a = 0.5 * a_hi;
    let beta1_hat = beta1_lower(geom, bounds);
    Ok(FormParams {
        alpha1,
        alpha2: alpha1,
        a,
        beta1_hat,
        beta2_hat: beta1_hat,
    })
}

/// Applies overrides on top of the default selection, then validates.
pub fn parameters_with_overrides(
    geom: &DomainGeometry,
    bounds: &FieldBounds,
    ov: &ParamOverrides,
) -> Result<FormParams> {
    let mut p = select_parameters(geom, bounds)?;
    if let Some(v) = ov.alpha1 {
        p.alpha1 = v;
        if ov.alpha2.is_none() {
            p.alpha2 = v;
        }
    }
    if let Some(v) = ov.a {
        p.a = v;
    }
    if let Some(v) = ov.beta1_hat {
        p.beta1_hat = v;
        if ov.beta2_hat.is_none() {
            p.beta2_hat = v;
        }
    }
    if let Some(v) = ov.alpha2 {
        p.alpha2 = v;
    }
    if let Some(v) = ov.beta2_hat {
        p.beta2_hat = v;
    }
    validate_parameters(geom, bounds, &p)?;
    Ok(p)
}

/// Checks the three coercivity restrictions.
pub fn validate_parameters(geom: &DomainGeometry, bounds: &FieldBounds, p: &FormParams) -> Result<()> {
    check_bounds(geom, bounds)?;
    let all_finite = [p.alpha1, p.alpha2, p.a, p.beta1_hat, p.beta2_hat]
        .iter()
        .all(|v| v.is_finite());
    if !all_finite {
        return Err(invalid("form parameters must be finite"));
    }
    let lo = (geom.d as f64 - 2.0) / 2.0;
    let hi = bounds.b_min / (2.0 * bounds.n_max);
    if !(p.alpha1 > lo && p.alpha1 < hi) {
        return Err(Error::AssumptionViolation(format!(
            "alpha1 = {} outside ({lo}, {hi})",
            p.alpha1
        )));
    }
    let a_hi = (bounds.b_min - 2.0 * p.alpha1 * bounds.n_max) / (2.0 * bounds.n_max * bounds.n_max);
    if !(p.a > 0.0 && p.a < a_hi) {
        return Err(Error::AssumptionViolation(format!("A = {} outside (0, {a_hi})", p.a)));
    }
    let b_lo = beta1_lower(geom, bounds);
    if p.beta1_hat < b_lo * (1.0 - 1e-14) {
        return Err(Error::AssumptionViolation(format!(
            "beta1_hat = {} below {b_lo}",
            p.beta1_hat
        )));
    }
    Ok(())
}

/// Constants of coercivity, continuity, functional bound and derivative regularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kl: f64,
    pub c_coer: f64,
    pub c_cont: f64,
    pub c_func: f64,
    pub c_r: f64,
    pub c_regu: f64,
}

pub fn coercivity_constant(geom: &DomainGeometry, bounds: &FieldBounds, p: &FormParams) -> f64 {
    let d = geom.d as f64;
    let nm = bounds.n_max;
    0.5 * [
        2.0 - d + 2.0 * p.alpha1,
        bounds.b_min - 2.0 * p.alpha1 * nm - 2.0 * p.a * nm * nm,
        p.a,
        geom.gamma_hat / 2.0,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

pub fn compute_constants(geom: &DomainGeometry, bounds: &FieldBounds, p: &FormParams, kl: f64) -> Result<Constants> {
    if !(kl > 0.0) || !kl.is_finite() {
        return Err(invalid(format!("kL must be positive, got {kl}")));
    }
    validate_parameters(geom, bounds, p)?;
    let d = geom.d as f64;
    let nm = bounds.n_max;
    let mu = geom.mu_hat;
    let i = Complex64::i();
    let a2b2 = (Complex64::from(p.alpha2) - i * kl * p.beta2_hat).norm();
    let db = (p.beta1_hat - p.beta2_hat).abs();
    let sqrt3 = 3f64.sqrt();

    let c_coer = coercivity_constant(geom, bounds, p);

    let cont_terms = [
        (2.0 - d + p.alpha1 + p.alpha2).abs() + kl * db,
        p.a * nm + a2b2 + kl + p.a,
        p.alpha1 / kl + p.beta1_hat + nm * mu,
        p.alpha2.abs() / kl + p.beta2_hat.abs() + 2.0 * mu,
        2.0,
        ((p.alpha1 + p.alpha2).abs() + bounds.b_max + kl * db) * nm + (p.a * nm * nm + nm * a2b2) + kl * nm + p.a * nm,
    ];
    let c_cont = sqrt3 * cont_terms.into_iter().fold(0.0, f64::max);

    let c_func = sqrt3
        * [1.0, p.a / kl, (p.alpha1 + p.a * nm) / kl + p.beta1_hat]
            .into_iter()
            .fold(0.0, f64::max);

    let xi2 = Complex64::from(-p.alpha1 - p.alpha2) - i * kl * (p.beta1_hat - p.beta2_hat);
    let c_r = 2.0 * p.a * (1.0 + nm) + kl * (1.0 + p.beta2_hat) + p.alpha2.abs() + xi2.norm() + d + 1.0 + mu;

    let c_regu = [
        c_r / c_coer + p.a / (kl * c_func),
        2.0 * c_r / c_coer,
        (2.0 * p.a / c_coer).sqrt(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let out = Constants {
        kl,
        c_coer,
        c_cont,
        c_func,
        c_r,
        c_regu,
    };
    if [c_coer, c_cont, c_func, c_r, c_regu]
        .iter()
        .any(|v| !(*v > 0.0) || !v.is_finite())
    {
        return Err(Error::NumericalFailure(format!("non-positive constant in {out:?}")));
    }
    Ok(out)
}
