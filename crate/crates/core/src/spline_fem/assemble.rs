use num_complex::Complex64;

use super::data::SourceData;
use super::space::{Edge, EdgePoint, SplineSpace, VolumePoint};
use crate::error::{invalid, Error, Result};
use crate::geometry_constants::{DomainGeometry, FormParams};
use crate::linalg::BandMatrix;
use crate::random_field::{AffineField, ParamVector};

/// Wavenumber, geometry and form parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub k: f64,
    pub geom: DomainGeometry,
    pub params: FormParams,
}

impl Physics {
    pub fn kl(&self) -> f64 {
        self.k * self.geom.l
    }

    /// `alpha1 + i kL beta1_hat`, the zeroth-order part of `conj(M1 phi)` for real `phi`.
    pub fn m1_conj_shift(&self) -> Complex64 {
        Complex64::new(self.params.alpha1, self.kl() * self.params.beta1_hat)
    }
}

/// `n0`, `grad n0`, `psi_j`, `grad psi_j` at every quadrature point.
#[derive(Debug, Clone)]
pub struct FieldTable {
    pub s: usize,
    vol: Vec<[f64; 3]>,
    vol_modes: Vec<[f64; 3]>,
    edge: Vec<[f64; 3]>,
    edge_modes: Vec<[f64; 3]>,
}

impl FieldTable {
    pub fn new(space: &SplineSpace, field: &AffineField, s: usize) -> Result<Self> {
        if s > field.s_max {
            return Err(invalid(format!("s = {s} exceeds materialized modes {}", field.s_max)));
        }
        if (field.side - space.side).abs() > 1e-14 * space.side {
            return Err(invalid("field and space live on different squares"));
        }
        let mut vol = Vec::with_capacity(space.n_volume_qp());
        let mut vol_modes = Vec::with_capacity(space.n_volume_qp() * s);
        let mut vp = VolumePoint::default();
        for ey in 0..space.m_e {
            for ex in 0..space.m_e {
                for qy in 0..space.nq {
                    for qx in 0..space.nq {
                        space.volume_point(ex, ey, qx, qy, &mut vp);
                        let (n0, g0) = field.n0.eval(vp.x);
                        vol.push([n0, g0[0], g0[1]]);
                        for j in 1..=s {
                            let (p, dp) = field.mode(j, vp.x);
                            vol_modes.push([p, dp[0], dp[1]]);
                        }
                    }
                }
            }
        }
        let mut edge = Vec::with_capacity(space.n_edge_qp());
        let mut edge_modes = Vec::with_capacity(space.n_edge_qp() * s);
        let mut ep = EdgePoint::default();
        for e_ in Edge::ALL {
            for e in 0..space.m_e {
                for q in 0..space.nq {
                    space.edge_point(e_, e, q, &mut ep);
                    let (n0, g0) = field.n0.eval(ep.x);
                    edge.push([n0, g0[0], g0[1]]);
                    for j in 1..=s {
                        let (p, dp) = field.mode(j, ep.x);
                        edge_modes.push([p, dp[0], dp[1]]);
                    }
                }
            }
        }
        Ok(Self {
            s,
            vol,
            vol_modes,
            edge,
            edge_modes,
        })
    }

    fn combine(base: [f64; 3], modes: &[[f64; 3]], y: &[f64]) -> [f64; 3] {
        let mut out = base;
        for (m, &yj) in modes.iter().zip(y) {
            out[0] += yj * m[0];
            out[1] += yj * m[1];
            out[2] += yj * m[2];
        }
        out
    }

    /// `(n, dn/dx1, dn/dx2)` at a volume point for parameters `y` (entries beyond `s` ignored).
    #[inline]
    pub fn vol_n(&self, qp: usize, y: &[f64]) -> [f64; 3] {
        let m = &self.vol_modes[qp * self.s..(qp + 1) * self.s];
        Self::combine(self.vol[qp], m, y)
    }

    #[inline]
    pub fn edge_n(&self, qp: usize, y: &[f64]) -> [f64; 3] {
        let m = &self.edge_modes[qp * self.s..(qp + 1) * self.s];
        Self::combine(self.edge[qp], m, y)
    }

    /// `(psi_j, grad psi_j)` at a volume point, `j >= 1`.
    #[inline]
    pub fn vol_mode(&self, qp: usize, j: usize) -> [f64; 3] {
        self.vol_modes[qp * self.s + j - 1]
    }

    #[inline]
    pub fn edge_mode(&self, qp: usize, j: usize) -> [f64; 3] {
        self.edge_modes[qp * self.s + j - 1]
    }
}

/// Galerkin matrix and load vector: `matrix[b][a] = B(phi_a, phi_b)`,
/// `rhs[b] = G(phi_b)`, so `B(v, w) = w^H matrix v`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: BandMatrix<Complex64>,
    pub rhs: Vec<Complex64>,
    pub xi: (Complex64, Complex64, Complex64),
    pub y: Vec<f64>,
}

fn clip_y(table: &FieldTable, y: &ParamVector) -> Result<Vec<f64>> {
    if y.s() > table.s && y.values()[table.s..].iter().any(|v| *v != 0.0) {
        return Err(invalid(format!(
            "parameter vector has {} entries but the table holds {} modes",
            y.s(),
            table.s
        )));
    }
    let mut v = y.values().to_vec();
    v.resize(table.s, 0.0);
    Ok(v)
}

pub fn assemble_matrix(
    space: &SplineSpace,
    table: &FieldTable,
    y: &ParamVector,
    ph: &Physics,
) -> Result<BandMatrix<Complex64>> {
    let yv = clip_y(table, y)?;
    let k = ph.k;
    let k2 = k * k;
    let kl = ph.kl();
    let a_k2 = ph.params.a / k2;
    let (xi1, xi2, xi3) = ph.params.xi(2, kl);
    let m1c = ph.m1_conj_shift();
    let ik = Complex64::new(0.0, k);
    let bw = space.bandwidth();
    let mut mat = BandMatrix::zeros(space.dof, bw, bw);
    let nl = space.nloc();
    let mut loc = vec![Complex64::default(); nl * nl];
    let mut vp = VolumePoint::default();
    let mut t_a = vec![Complex64::default(); nl];
    let mut l_b = vec![0.0; nl];
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            loc.iter_mut().for_each(|v| *v = Complex64::default());
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let qp = space.volume_qp_id(ex, ey, qx, qy);
                    let [n, nx, ny] = table.vol_n(qp, &yv);
                    let x = vp.x;
                    let divxn = 2.0 * n + x[0] * nx + x[1] * ny;
                    let kappa = xi2 * (k2 * n) + k2 * divxn;
                    let w = vp.w;
                    for a in 0..nl {
                        let lphi = vp.lap[a] + k2 * n * vp.val[a];
                        l_b[a] = lphi;
                        t_a[a] = Complex64::from(x[0] * vp.dx[a] + x[1] * vp.dy[a] + a_k2 * lphi) + xi3 * vp.val[a];
                    }
                    for b in 0..nl {
                        let row = &mut loc[b * nl..(b + 1) * nl];
                        let (lb, bx, by, bv) = (l_b[b], vp.dx[b], vp.dy[b], vp.val[b]);
                        for a in 0..nl {
                            let grad = vp.dx[a] * bx + vp.dy[a] * by;
                            row[a] += w * (t_a[a] * lb + xi1 * grad + kappa * (vp.val[a] * bv));
                        }
                    }
                }
            }
            for b in 0..nl {
                for a in 0..nl {
                    mat.add(vp.idx[b], vp.idx[a], loc[b * nl + a]);
                }
            }
        }
    }
    let mut ep = EdgePoint::default();
    let mut m1b = vec![Complex64::default(); nl];
    for edge in Edge::ALL {
        for e in 0..space.m_e {
            loc.iter_mut().for_each(|v| *v = Complex64::default());
            for q in 0..space.nq {
                space.edge_point(edge, e, q, &mut ep);
                let qp = space.edge_qp_id(edge, e, q);
                let n = table.edge_n(qp, &yv)[0];
                let x = ep.x;
                let xt = x[0] * ep.tangent[0] + x[1] * ep.tangent[1];
                let xn = x[0] * ep.normal[0] + x[1] * ep.normal[1];
                let w = ep.w;
                for b in 0..nl {
                    m1b[b] = Complex64::from(xt * ep.dt[b] + xn * ep.dn[b]) + m1c * ep.val[b];
                }
                for b in 0..nl {
                    let row = &mut loc[b * nl..(b + 1) * nl];
                    for a in 0..nl {
                        let term = m1b[b] * ik * ep.val[a]
                            + (Complex64::from(xt * ep.dt[a]) + xi3 * ep.val[a]) * ep.dn[b]
                            + xn * (k2 * n * ep.val[a] * ep.val[b] - ep.dt[a] * ep.dt[b]);
                        row[a] -= w * term;
                    }
                }
            }
            for b in 0..nl {
                for a in 0..nl {
                    mat.add(ep.idx[b], ep.idx[a], loc[b * nl + a]);
                }
            }
        }
    }
    if mat.entries().any(|(_, _, v)| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite matrix entry after assembly".into()));
    }
    Ok(mat)
}

/// Per-point coefficients of a load functional
/// `l(phi) = int val phi + grad . grad phi + lap * lap phi + int_boundary (val phi + dt d_t phi + dn d_n phi)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadCoeffs {
    pub val: Complex64,
    pub grad: [Complex64; 2],
    pub lap: Complex64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeLoadCoeffs {
    pub val: Complex64,
    pub dt: Complex64,
    pub dn: Complex64,
}

/// Context handed to load-coefficient callbacks.
pub struct QpInfo {
    pub qp: usize,
    pub x: [f64; 2],
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

pub fn assemble_load(
    space: &SplineSpace,
    mut vol: impl FnMut(&QpInfo) -> LoadCoeffs,
    mut edge_fn: impl FnMut(&QpInfo) -> EdgeLoadCoeffs,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); space.dof];
    let nl = space.nloc();
    let mut vp = VolumePoint::default();
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let info = QpInfo {
                        qp: space.volume_qp_id(ex, ey, qx, qy),
                        x: vp.x,
                        normal: [0.0; 2],
                        tangent: [0.0; 2],
                    };
                    let c = vol(&info);
                    let w = vp.w;
                    for b in 0..nl {
                        out[vp.idx[b]] +=
                            w * (c.val * vp.val[b] + c.grad[0] * vp.dx[b] + c.grad[1] * vp.dy[b] + c.lap * vp.lap[b]);
                    }
                }
            }
        }
    }
    let mut ep = EdgePoint::default();
    for edge in Edge::ALL {
        for e in 0..space.m_e {
            for q in 0..space.nq {
                space.edge_point(edge, e, q, &mut ep);
                let info = QpInfo {
                    qp: space.edge_qp_id(edge, e, q),
                    x: ep.x,
                    normal: ep.normal,
                    tangent: ep.tangent,
                };
                let c = edge_fn(&info);
                let w = ep.w;
                for b in 0..nl {
                    out[ep.idx[b]] += w * (c.val * ep.val[b] + c.dt * ep.dt[b] + c.dn * ep.dn[b]);
                }
            }
        }
    }
    out
}

/// Load vector of `G(w) = int (conj(M1 w) - A/k^2 conj(L w)) f + int_boundary conj(M1 w) g`.
pub fn assemble_rhs(
    space: &SplineSpace,
    table: &FieldTable,
    y: &ParamVector,
    ph: &Physics,
    data: &dyn SourceData,
) -> Result<Vec<Complex64>> {
    let yv = clip_y(table, y)?;
    let k2 = ph.k * ph.k;
    let a = ph.params.a;
    let m1c = ph.m1_conj_shift();
    let rhs = assemble_load(
        space,
        |q| {
            let n = table.vol_n(q.qp, &yv)[0];
            let f = data.f(q.x, n);
            LoadCoeffs {
                val: f * m1c - a * n * f,
                grad: [f * q.x[0], f * q.x[1]],
                lap: -(a / k2) * f,
            }
        },
        |q| {
            let g = data.g(q.x, q.normal);
            let xt = q.x[0] * q.tangent[0] + q.x[1] * q.tangent[1];
            let xn = q.x[0] * q.normal[0] + q.x[1] * q.normal[1];
            EdgeLoadCoeffs {
                val: g * m1c,
                dt: g * xt,
                dn: g * xn,
            }
        },
    );
    if rhs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite load vector".into()));
    }
    Ok(rhs)
}

pub fn assemble_system(
    space: &SplineSpace,
    table: &FieldTable,
    y: &ParamVector,
    ph: &Physics,
    data: &dyn SourceData,
) -> Result<AssembledSystem> {
    let matrix = assemble_matrix(space, table, y, ph)?;
    let rhs = assemble_rhs(space, table, y, ph, data)?;
    Ok(AssembledSystem {
        matrix,
        rhs,
        xi: ph.params.xi(2, ph.kl()),
        y: clip_y(table, y)?,
    })
}

/// Gram matrix of the squared V-norm.
pub fn assemble_vnorm_gram(space: &SplineSpace, k: f64, geom: &DomainGeometry) -> BandMatrix<f64> {
    let k2 = k * k;
    let l = geom.l;
    let bw = space.bandwidth();
    let mut g = BandMatrix::zeros(space.dof, bw, bw);
    let nl = space.nloc();
    let mut vp = VolumePoint::default();
    let mut loc = vec![0.0; nl * nl];
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            loc.iter_mut().for_each(|v| *v = 0.0);
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let w = vp.w;
                    for b in 0..nl {
                        for a in 0..nl {
                            loc[b * nl + a] += w
                                * (k2 * vp.val[a] * vp.val[b]
                                    + vp.dx[a] * vp.dx[b]
                                    + vp.dy[a] * vp.dy[b]
                                    + vp.lap[a] * vp.lap[b] / k2);
                        }
                    }
                }
            }
            for b in 0..nl {
                for a in 0..nl {
                    g.add(vp.idx[b], vp.idx[a], loc[b * nl + a]);
                }
            }
        }
    }
    let mut ep = EdgePoint::default();
    for edge in Edge::ALL {
        for e in 0..space.m_e {
            loc.iter_mut().for_each(|v| *v = 0.0);
            for q in 0..space.nq {
                space.edge_point(edge, e, q, &mut ep);
                let w = ep.w * l;
                for b in 0..nl {
                    for a in 0..nl {
                        loc[b * nl + a] += w * (k2 * ep.val[a] * ep.val[b] + ep.dt[a] * ep.dt[b] + ep.dn[a] * ep.dn[b]);
                    }
                }
            }
            for b in 0..nl {
                for a in 0..nl {
                    g.add(ep.idx[b], ep.idx[a], loc[b * nl + a]);
                }
            }
        }
    }
    g
}
