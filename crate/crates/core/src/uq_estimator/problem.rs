use num_complex::Complex64;
use std::sync::Arc;

use super::config::{DataKind, RunConfig};
use crate::error::{Error, Result};
use crate::geometry_constants::{
    compute_constants, parameters_with_overrides, Constants, DomainGeometry, FieldBounds, FormParams,
};
use crate::math::gauss_legendre;
use crate::parametric_derivatives::upsilon;
use crate::random_field::{square_field, AffineField, ParamVector};
use crate::spline_fem::{
    assemble_system, check_finite, solve, DefaultData, FieldTable, Functional, FunctionalKind, Physics, PlaneWave,
    SourceData, SplineSpace,
};

/// Everything needed to evaluate `G(u_{s,h}(y))`.
pub struct Problem {
    pub geom: DomainGeometry,
    pub field: AffineField,
    pub bounds: FieldBounds,
    pub params: FormParams,
    pub constants: Constants,
    pub space: SplineSpace,
    pub table: FieldTable,
    pub ph: Physics,
    pub functional: Functional,
    pub data: Arc<dyn SourceData>,
    pub plane_wave: Option<PlaneWave>,
    pub s: usize,
}

impl Problem {
    /// Builds the discretization with `s` active modes and `m_e` elements per direction.
    pub fn build(cfg: &RunConfig, s: usize, m_e: usize) -> Result<Self> {
        let geom = DomainGeometry::square(cfg.side)?;
        let modes = s.max(cfg.field.s);
        let field = square_field(&geom, cfg.field.n0, cfg.field.amplitude, cfg.field.theta, modes)?;
        let bounds = field.verify_a1(s, cfg.study.grid_res, cfg.study.safety)?;
        let params = parameters_with_overrides(&geom, &bounds, &cfg.params)?;
        let k = cfg.k;
        let constants = compute_constants(&geom, &bounds, &params, geom.kl(k))?;
        let space = SplineSpace::new(cfg.p, m_e, &geom)?;
        let table = FieldTable::new(&space, &field, s)?;
        let ph = Physics { k, geom, params };
        let functional = Functional::new(cfg.functional, &space, k);
        let (data, plane_wave): (Arc<dyn SourceData>, _) = match cfg.data {
            DataKind::Default => (Arc::new(DefaultData), None),
            DataKind::Manufactured => {
                let pw = PlaneWave::new(k, cfg.study.angle);
                (Arc::new(pw), Some(pw))
            }
        };
        Ok(Self {
            geom,
            field,
            bounds,
            params,
            constants,
            space,
            table,
            ph,
            functional,
            data,
            plane_wave,
            s,
        })
    }

    pub fn l(&self) -> f64 {
        self.geom.l
    }

    /// `Upsilon_j`, `j = 1..=s`.
    pub fn upsilon(&self) -> Vec<f64> {
        upsilon(&self.field, &self.constants, self.l(), self.s)
    }

    /// Galerkin coefficients at `y` (entries beyond `s` must be zero or absent).
    pub fn solve_at(&self, y: &[f64]) -> Result<Vec<Complex64>> {
        let yv = ParamVector::new(y.to_vec())?;
        let sys = assemble_system(&self.space, &self.table, &yv, &self.ph, self.data.as_ref())?;
        let sol = solve(&sys)?;
        check_finite(&sol.coeffs)?;
        Ok(sol.coeffs)
    }

    pub fn qoi(&self, y: &[f64]) -> Result<Complex64> {
        self.solve_at(y).map(|c| self.functional.apply(&c))
    }

    /// `G(u)` of the manufactured solution.
    pub fn exact_qoi(&self) -> Result<Complex64> {
        let pw = self
            .plane_wave
            .as_ref()
            .ok_or_else(|| Error::InvalidState("exact functional needs manufactured data".into()))?;
        match self.functional.kind {
            FunctionalKind::Mean => Ok(pw.exact_mean_integral(self.space.side)),
            FunctionalKind::Weighted => {
                // separable weight and plane wave: tensor Gauss quadrature
                let (x, w) = gauss_legendre(48);
                let h = self.space.side / 2.0;
                let mut acc = Complex64::default();
                for (xi, wi) in x.iter().zip(&w) {
                    for (xj, wj) in x.iter().zip(&w) {
                        let p = [h * xi, h * xj];
                        acc += wi * wj * h * h * self.functional.kind.weight(p, self.space.side) * pw.u(p);
                    }
                }
                Ok(acc)
            }
        }
    }
}
