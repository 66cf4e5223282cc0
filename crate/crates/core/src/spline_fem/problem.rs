use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble_load, AssembledSystem, EdgeLoadCoeffs, FieldTable, LoadCoeffs, Physics};
use super::data::SourceData;
use super::space::{Edge, EdgePoint, SplineSpace, VolumePoint};
use crate::error::{Error, Result};
use crate::linalg::{norm2, BandLu};
use crate::random_field::ParamVector;

/// Solved Galerkin system; keeps the factorization for further right-hand sides.
#[derive(Debug, Clone)]
pub struct Solution {
    pub coeffs: Vec<Complex64>,
    pub lu: BandLu,
}

pub fn solve(system: &AssembledSystem) -> Result<Solution> {
    let lu = BandLu::factor(system.matrix.clone())?;
    let coeffs = lu.solve(&system.rhs)?;
    Ok(Solution { coeffs, lu })
}

/// `||A x - b|| / ||b||` (returns the absolute residual when `b = 0`).
pub fn relative_residual(system: &AssembledSystem, x: &[Complex64]) -> f64 {
    relative_residual_with(system, x, &system.rhs)
}

pub fn relative_residual_with(system: &AssembledSystem, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = system.matrix.matvec(x);
    let r: Vec<Complex64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Quantity of interest `int_D w(x) u(x) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    /// `w = 1`
    #[default]
    Mean,
    /// `w = cos(pi x1 / a) cos(pi x2 / a)`
    Weighted,
}

impl FunctionalKind {
    pub fn weight(self, x: [f64; 2], side: f64) -> f64 {
        match self {
            FunctionalKind::Mean => 1.0,
            FunctionalKind::Weighted => {
                let c = std::f64::consts::PI / side;
                (c * x[0]).cos() * (c * x[1]).cos()
            }
        }
    }

    /// `||w||_{L^2(D)}`.
    pub fn weight_l2(self, side: f64) -> f64 {
        match self {
            FunctionalKind::Mean => side,
            FunctionalKind::Weighted => side / 2.0,
        }
    }
}

/// Linear functional precomputed as a coefficient vector.
#[derive(Debug, Clone)]
pub struct Functional {
    pub kind: FunctionalKind,
    /// `|G(w)| <= dual_bound ||w||_V`
    pub dual_bound: f64,
    weights: Vec<Complex64>,
}

impl Functional {
    pub fn new(kind: FunctionalKind, space: &SplineSpace, k: f64) -> Self {
        let side = space.side;
        let weights = assemble_load(
            space,
            |q| LoadCoeffs {
                val: Complex64::from(kind.weight(q.x, side)),
                ..Default::default()
            },
            |_| EdgeLoadCoeffs::default(),
        );
        Self {
            kind,
            dual_bound: kind.weight_l2(side) / k,
            weights,
        }
    }

    pub fn apply(&self, c: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(c).map(|(w, v)| w * v).sum()
    }
}

/// `||v - u||_V^2` pieces for a spline `v` and an exact `u`.
pub fn vnorm_error(
    space: &SplineSpace,
    c: &[Complex64],
    k: f64,
    l: f64,
    exact: impl Fn([f64; 2]) -> (Complex64, [Complex64; 2], Complex64),
) -> f64 {
    let k2 = k * k;
    let mut acc = 0.0;
    let mut vp = VolumePoint::default();
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let (mut v, mut gx, mut gy, mut lap) = (
                        Complex64::default(),
                        Complex64::default(),
                        Complex64::default(),
                        Complex64::default(),
                    );
                    for (a, &i) in vp.idx.iter().enumerate() {
                        v += c[i] * vp.val[a];
                        gx += c[i] * vp.dx[a];
                        gy += c[i] * vp.dy[a];
                        lap += c[i] * vp.lap[a];
                    }
                    let (u, g, lu): (Complex64, [Complex64; 2], Complex64) = exact(vp.x);
                    acc += vp.w
                        * (k2 * (v - u).norm_sqr()
                            + (gx - g[0]).norm_sqr()
                            + (gy - g[1]).norm_sqr()
                            + (lap - lu).norm_sqr() / k2);
                }
            }
        }
    }
    let mut ep = EdgePoint::default();
    for edge in Edge::ALL {
        for e in 0..space.m_e {
            for q in 0..space.nq {
                space.edge_point(edge, e, q, &mut ep);
                let (mut v, mut dt, mut dn) = (Complex64::default(), Complex64::default(), Complex64::default());
                for (a, &i) in ep.idx.iter().enumerate() {
                    v += c[i] * ep.val[a];
                    dt += c[i] * ep.dt[a];
                    dn += c[i] * ep.dn[a];
                }
                let (u, g, _) = exact(ep.x);
                let ut = g[0] * ep.tangent[0] + g[1] * ep.tangent[1];
                let un = g[0] * ep.normal[0] + g[1] * ep.normal[1];
                acc += l * ep.w * (k2 * (v - u).norm_sqr() + (dt - ut).norm_sqr() + (dn - un).norm_sqr());
            }
        }
    }
    acc.sqrt()
}

/// `(||f||_{L^2(D)}, ||g||_{L^2(boundary)})` by quadrature at parameter `y`.
pub fn data_norms(space: &SplineSpace, table: &FieldTable, y: &ParamVector, data: &dyn SourceData) -> (f64, f64) {
    let mut yv = y.values().to_vec();
    yv.resize(table.s, 0.0);
    let mut fsq = 0.0;
    let mut vp = VolumePoint::default();
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let n = table.vol_n(space.volume_qp_id(ex, ey, qx, qy), &yv)[0];
                    fsq += vp.w * data.f(vp.x, n).norm_sqr();
                }
            }
        }
    }
    let mut gsq = 0.0;
    let mut ep = EdgePoint::default();
    for edge in Edge::ALL {
        for e in 0..space.m_e {
            for q in 0..space.nq {
                space.edge_point(edge, e, q, &mut ep);
                gsq += ep.w * data.g(ep.x, ep.normal).norm_sqr();
            }
        }
    }
    (fsq.sqrt(), gsq.sqrt())
}

/// Reference evaluation of `B(v, w)` straight from the integrand, without
/// the element matrices.
pub fn form_direct(
    space: &SplineSpace,
    table: &FieldTable,
    y: &ParamVector,
    ph: &Physics,
    v: &[Complex64],
    w: &[Complex64],
) -> Complex64 {
    let mut yv = y.values().to_vec();
    yv.resize(table.s, 0.0);
    let k = ph.k;
    let k2 = k * k;
    let kl = ph.kl();
    let p = &ph.params;
    let i = Complex64::i();
    let (xi1, xi2, xi3) = p.xi(2, kl);
    let mut acc = Complex64::default();
    let mut vp = VolumePoint::default();
    let ev = |c: &[Complex64], vp: &VolumePoint| {
        let mut o = [Complex64::default(); 4];
        for (a, &ix) in vp.idx.iter().enumerate() {
            o[0] += c[ix] * vp.val[a];
            o[1] += c[ix] * vp.dx[a];
            o[2] += c[ix] * vp.dy[a];
            o[3] += c[ix] * vp.lap[a];
        }
        o
    };
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let [n, nx, ny] = table.vol_n(space.volume_qp_id(ex, ey, qx, qy), &yv);
                    let x = vp.x;
                    let [v0, vx, vy, vl] = ev(v, &vp);
                    let [w0, wx, wy, wl] = ev(w, &vp);
                    let lv = vl + k2 * n * v0;
                    let lw = wl + k2 * n * w0;
                    let m2v = x[0] * vx + x[1] * vy - i * kl * p.beta2_hat * v0 + p.alpha2 * v0;
                    let div = 2.0 * n + x[0] * nx + x[1] * ny;
                    let integrand = (m2v + p.a / k2 * lv) * lw.conj()
                        + xi1 * (vx * wx.conj() + vy * wy.conj())
                        + (xi2 * k2 * n + k2 * div) * v0 * w0.conj();
                    acc += vp.w * integrand;
                }
            }
        }
    }
    let mut ep = EdgePoint::default();
    for edge in Edge::ALL {
        for e in 0..space.m_e {
            for q in 0..space.nq {
                space.edge_point(edge, e, q, &mut ep);
                let n = table.edge_n(space.edge_qp_id(edge, e, q), &yv)[0];
                let x = ep.x;
                let (mut v0, mut vt, mut vn): (Complex64, Complex64, Complex64) = Default::default();
                let (mut w0, mut wt, mut wn): (Complex64, Complex64, Complex64) = Default::default();
                for (a, &ix) in ep.idx.iter().enumerate() {
                    v0 += v[ix] * ep.val[a];
                    vt += v[ix] * ep.dt[a];
                    vn += v[ix] * ep.dn[a];
                    w0 += w[ix] * ep.val[a];
                    wt += w[ix] * ep.dt[a];
                    wn += w[ix] * ep.dn[a];
                }
                let xt = x[0] * ep.tangent[0] + x[1] * ep.tangent[1];
                let xn = x[0] * ep.normal[0] + x[1] * ep.normal[1];
                let x_grad_w = xt * wt + xn * wn;
                let m1w = x_grad_w - i * kl * p.beta1_hat * w0 + p.alpha1 * w0;
                let integrand = m1w.conj() * i * k * v0
                    + (xt * vt + xi3 * v0) * wn.conj()
                    + xn * (k2 * n * v0 * w0.conj() - vt * wt.conj());
                acc -= ep.w * integrand;
            }
        }
    }
    acc
}

/// Checks a solution for non-finite values.
pub fn check_finite(c: &[Complex64]) -> Result<()> {
    if c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite coefficients".into()));
    }
    Ok(())
}
