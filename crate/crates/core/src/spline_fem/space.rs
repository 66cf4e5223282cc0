use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::geometry_constants::DomainGeometry;
use crate::math::gauss_legendre;

/// One of the four edges of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn normal(self) -> [f64; 2] {
        match self {
            Edge::Bottom => [0.0, -1.0],
            Edge::Right => [1.0, 0.0],
            Edge::Top => [0.0, 1.0],
            Edge::Left => [-1.0, 0.0],
        }
    }

    /// Counter-clockwise unit tangent.
    pub fn tangent(self) -> [f64; 2] {
        let n = self.normal();
        [-n[1], n[0]]
    }
}

/// Univariate open uniform B-spline basis of degree `p` with `m_e` spans.
#[derive(Debug, Clone)]
pub struct BSpline1d {
    pub p: usize,
    pub m_e: usize,
    pub knots: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl BSpline1d {
    pub fn new(p: usize, m_e: usize, lo: f64, hi: f64) -> Self {
        let mut knots = vec![lo; p + 1];
        for i in 1..m_e {
            knots.push(lo + (hi - lo) * i as f64 / m_e as f64);
        }
        knots.extend(std::iter::repeat_n(hi, p + 1));
        Self { p, m_e, knots, lo, hi }
    }

    pub fn n_basis(&self) -> usize {
        self.m_e + self.p
    }

    /// Span containing `u` (the last span owns the right end point).
    pub fn span_of(&self, u: f64) -> usize {
        let t = ((u - self.lo) / (self.hi - self.lo) * self.m_e as f64).floor();
        (t.max(0.0) as usize).min(self.m_e - 1)
    }

    /// Values and derivatives up to order `nd` of the `p + 1` functions
    /// supported on span `e`, as `out[a][k]`. Global index of `a` is `e + a`.
    pub fn ders(&self, e: usize, u: f64, nd: usize) -> Vec<Vec<f64>> {
        let p = self.p;
        let i = e + p;
        let k = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[i + 1 - j];
            right[j] = k[i + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut out = vec![vec![0.0; nd + 1]; p + 1];
        for j in 0..=p {
            out[j][0] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for kk in 1..=nd.min(p) {
                let mut d = 0.0;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                out[r][kk] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for kk in 1..=nd.min(p) {
            for row in out.iter_mut() {
                row[kk] *= fac;
            }
            fac *= (p - kk) as f64;
        }
        out
    }
}

/// Tensor-product `C^{p-1}` spline space on the centred square with Gauss
/// tables for the volume and the four edges.
#[derive(Debug, Clone)]
pub struct SplineSpace {
    pub p: usize,
    pub m_e: usize,
    pub side: f64,
    pub h: f64,
    pub n1d: usize,
    pub dof: usize,
    /// Gauss points per span and axis.
    pub nq: usize,
    pub basis: BSpline1d,
    /// Physical Gauss nodes and weights along one axis, span-major.
    pub qx: Vec<f64>,
    pub qw: Vec<f64>,
    /// `tab[(e * nq + q) * (p + 1) * 3 + a * 3 + k]`
    tab: Vec<f64>,
    /// Value and first derivative of the end-span functions at `-side/2` and `side/2`.
    end_lo: Vec<[f64; 2]>,
    end_hi: Vec<[f64; 2]>,
    /// Greville abscissae.
    pub greville: Vec<f64>,
}

/// Basis data at one volume quadrature point.
#[derive(Debug, Clone, Default)]
pub struct VolumePoint {
    pub x: [f64; 2],
    pub w: f64,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub lap: Vec<f64>,
}

/// Basis data at one boundary quadrature point.
#[derive(Debug, Clone, Default)]
pub struct EdgePoint {
    pub x: [f64; 2],
    pub w: f64,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub dt: Vec<f64>,
    pub dn: Vec<f64>,
}

impl SplineSpace {
    pub fn new(p: usize, m_e: usize, geom: &DomainGeometry) -> Result<Self> {
        if p < 2 {
            return Err(invalid(format!(
                "spline degree must be >= 2 for H^2 conformity, got {p}"
            )));
        }
        if m_e < 2 {
            return Err(invalid(format!("need at least 2 elements per axis, got {m_e}")));
        }
        let side = geom
            .side
            .ok_or_else(|| invalid("spline space needs the square domain"))?;
        let half = side / 2.0;
        let basis = BSpline1d::new(p, m_e, -half, half);
        let h = side / m_e as f64;
        let nq = p + 2;
        let (gx, gw) = gauss_legendre(nq);
        let mut qx = Vec::with_capacity(m_e * nq);
        let mut qw = Vec::with_capacity(m_e * nq);
        let mut tab = Vec::with_capacity(m_e * nq * (p + 1) * 3);
        for e in 0..m_e {
            let a = -half + e as f64 * h;
            for q in 0..nq {
                let u = a + 0.5 * h * (gx[q] + 1.0);
                qx.push(u);
                qw.push(0.5 * h * gw[q]);
                let d = basis.ders(e, u, 2);
                for row in &d {
                    tab.extend_from_slice(&row[..3]);
                }
            }
        }
        let end = |e: usize, u: f64| -> Vec<[f64; 2]> { basis.ders(e, u, 1).iter().map(|r| [r[0], r[1]]).collect() };
        let end_lo = end(0, -half);
        let end_hi = end(m_e - 1, half);
        let n1d = m_e + p;
        let greville = (0..n1d)
            .map(|i| basis.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect();
        Ok(Self {
            p,
            m_e,
            side,
            h,
            n1d,
            dof: n1d * n1d,
            nq,
            basis,
            qx,
            qw,
            tab,
            end_lo,
            end_hi,
            greville,
        })
    }

    pub fn half(&self) -> f64 {
        self.side / 2.0
    }

    pub fn nloc(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    /// Band half-width of matrices on this space.
    pub fn bandwidth(&self) -> usize {
        self.p * (self.n1d + 1)
    }

    pub fn n_volume_qp(&self) -> usize {
        self.m_e * self.m_e * self.nq * self.nq
    }

    pub fn n_edge_qp(&self) -> usize {
        4 * self.m_e * self.nq
    }

    #[inline]
    pub fn volume_qp_id(&self, ex: usize, ey: usize, qx: usize, qy: usize) -> usize {
        ((ey * self.m_e + ex) * self.nq + qy) * self.nq + qx
    }

    #[inline]
    pub fn edge_qp_id(&self, edge: Edge, e: usize, q: usize) -> usize {
        (edge.index() * self.m_e + e) * self.nq + q
    }

    #[inline]
    fn t(&self, e: usize, q: usize, a: usize, k: usize) -> f64 {
        self.tab[((e * self.nq + q) * (self.p + 1) + a) * 3 + k]
    }

    pub fn volume_point(&self, ex: usize, ey: usize, qx: usize, qy: usize, out: &mut VolumePoint) {
        let p1 = self.p + 1;
        let nl = p1 * p1;
        for v in [&mut out.val, &mut out.dx, &mut out.dy, &mut out.lap] {
            v.resize(nl, 0.0);
        }
        out.idx.resize(nl, 0);
        let ix = ex * self.nq + qx;
        let iy = ey * self.nq + qy;
        out.x = [self.qx[ix], self.qx[iy]];
        out.w = self.qw[ix] * self.qw[iy];
        for ay in 0..p1 {
            let ny0 = self.t(ey, qy, ay, 0);
            let ny1 = self.t(ey, qy, ay, 1);
            let ny2 = self.t(ey, qy, ay, 2);
            for ax in 0..p1 {
                let nx0 = self.t(ex, qx, ax, 0);
                let nx1 = self.t(ex, qx, ax, 1);
                let nx2 = self.t(ex, qx, ax, 2);
                let l = ay * p1 + ax;
                out.idx[l] = (ex + ax) + self.n1d * (ey + ay);
                out.val[l] = nx0 * ny0;
                out.dx[l] = nx1 * ny0;
                out.dy[l] = nx0 * ny1;
                out.lap[l] = nx2 * ny0 + nx0 * ny2;
            }
        }
    }

    pub fn edge_point(&self, edge: Edge, e: usize, q: usize, out: &mut EdgePoint) {
        let p1 = self.p + 1;
        let nl = p1 * p1;
        for v in [&mut out.val, &mut out.dt, &mut out.dn] {
            v.resize(nl, 0.0);
        }
        out.idx.resize(nl, 0);
        let half = self.half();
        let along = self.qx[e * self.nq + q];
        out.w = self.qw[e * self.nq + q];
        out.normal = edge.normal();
        out.tangent = edge.tangent();
        // (fixed coordinate value, end table, first index in the normal direction)
        let (fixed, end, e_fixed) = match edge {
            Edge::Bottom | Edge::Left => (-half, &self.end_lo, 0),
            Edge::Top | Edge::Right => (half, &self.end_hi, self.m_e - 1),
        };
        let horizontal = matches!(edge, Edge::Bottom | Edge::Top);
        out.x = if horizontal { [along, fixed] } else { [fixed, along] };
        let (nv, tv) = (out.normal, out.tangent);
        for b in 0..p1 {
            let (f0, f1) = (end[b][0], end[b][1]);
            for a in 0..p1 {
                let g0 = self.t(e, q, a, 0);
                let g1 = self.t(e, q, a, 1);
                let (ix, iy, val, dx, dy) = if horizontal {
                    (e + a, e_fixed + b, g0 * f0, g1 * f0, g0 * f1)
                } else {
                    (e_fixed + b, e + a, f0 * g0, f1 * g0, f0 * g1)
                };
                let l = b * p1 + a;
                out.idx[l] = ix + self.n1d * iy;
                out.val[l] = val;
                out.dt[l] = tv[0] * dx + tv[1] * dy;
                out.dn[l] = nv[0] * dx + nv[1] * dy;
            }
        }
    }

    /// Value, gradient and Laplacian of `sum_i c_i phi_i` at an arbitrary point.
    pub fn eval(&self, c: &[Complex64], x: [f64; 2]) -> (Complex64, [Complex64; 2], Complex64) {
        let ex = self.basis.span_of(x[0]);
        let ey = self.basis.span_of(x[1]);
        let bx = self.basis.ders(ex, x[0], 2);
        let by = self.basis.ders(ey, x[1], 2);
        let mut v = Complex64::default();
        let mut g = [Complex64::default(); 2];
        let mut l = Complex64::default();
        for (ay, ny) in by.iter().enumerate() {
            for (ax, nx) in bx.iter().enumerate() {
                let ci = c[(ex + ax) + self.n1d * (ey + ay)];
                v += ci * (nx[0] * ny[0]);
                g[0] += ci * (nx[1] * ny[0]);
                g[1] += ci * (nx[0] * ny[1]);
                l += ci * (nx[2] * ny[0] + nx[0] * ny[2]);
            }
        }
        (v, g, l)
    }

    /// Coefficients interpolating `f` at the tensor Greville points.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> Complex64) -> Result<Vec<Complex64>> {
        use crate::linalg::{BandLu, BandMatrix};
        let n = self.n1d;
        let mut col = BandMatrix::zeros(n, self.p, self.p);
        for (i, &u) in self.greville.iter().enumerate() {
            let e = self.basis.span_of(u);
            for (a, d) in self.basis.ders(e, u, 0).iter().enumerate() {
                col.add(i, e + a, Complex64::from(d[0]));
            }
        }
        let lu = BandLu::factor(col)?;
        // tensor solve: first along x for each row, then along y
        let mut rhs = vec![Complex64::default(); n * n];
        for iy in 0..n {
            for ix in 0..n {
                rhs[ix + n * iy] = f([self.greville[ix], self.greville[iy]]);
            }
        }
        for iy in 0..n {
            let row = lu.solve(&rhs[iy * n..(iy + 1) * n])?;
            rhs[iy * n..(iy + 1) * n].copy_from_slice(&row);
        }
        for ix in 0..n {
            let colv: Vec<Complex64> = (0..n).map(|iy| rhs[ix + n * iy]).collect();
            let s = lu.solve(&colv)?;
            for iy in 0..n {
                rhs[ix + n * iy] = s[iy];
            }
        }
        Ok(rhs)
    }
}
