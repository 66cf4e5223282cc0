//! Mixed parametric derivatives `d^nu u` of the discrete solution via the
//! derivative recursion, their a-priori bound, and the scalar recursion lemma
//! behind that bound.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::geometry_constants::Constants;
use crate::linalg::{BandLu, BandMatrix};
use crate::math::factorial;
use crate::random_field::{AffineField, ParamVector};
use crate::spline_fem::{
    assemble_load, assemble_system, relative_residual_with, AssembledSystem, EdgeLoadCoeffs, FieldTable, LoadCoeffs,
    Physics, SourceData, SplineSpace,
};

/// Finitely supported multi-index; keys are 1-based dimensions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(BTreeMap<usize, u32>);

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(j: usize) -> Self {
        assert!(j >= 1);
        Self(BTreeMap::from([(j, 1)]))
    }

    /// From dense orders `nu_1, nu_2, ...`.
    pub fn from_dense(orders: &[u32]) -> Self {
        Self(
            orders
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > 0)
                .map(|(j, v)| (j + 1, *v))
                .collect(),
        )
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0.get(&j).copied().unwrap_or(0)
    }

    pub fn order(&self) -> u32 {
        self.0.values().sum()
    }

    /// `prod nu_j!`
    pub fn factorial(&self) -> f64 {
        self.0.values().map(|v| factorial(*v as usize)).product()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn max_dim(&self) -> usize {
        self.0.keys().next_back().copied().unwrap_or(0)
    }

    pub fn plus(&self, j: usize) -> Self {
        let mut m = self.0.clone();
        *m.entry(j).or_insert(0) += 1;
        Self(m)
    }

    /// `self - e_j`, or `None` if `nu_j = 0`.
    pub fn minus(&self, j: usize) -> Option<Self> {
        let mut m = self.0.clone();
        let v = m.get_mut(&j)?;
        *v -= 1;
        if *v == 0 {
            m.remove(&j);
        }
        Some(Self(m))
    }

    /// Comma-separated dense orders over the first `dims` dimensions.
    pub fn dense_string(&self, dims: usize) -> String {
        (1..=dims.max(self.max_dim()))
            .map(|j| self.get(j).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// All multi-indices with `1 <= |nu| <= max_order` supported in `1..=dims`, graded by order.
    pub fn all_up_to(max_order: u32, dims: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut wave = vec![MultiIndex::zero()];
        for _ in 0..max_order {
            let mut next: Vec<MultiIndex> = wave.iter().flat_map(|m| (1..=dims).map(move |j| m.plus(j))).collect();
            next.sort();
            next.dedup();
            out.extend(next.iter().cloned());
            wave = next;
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.dense_string(self.max_dim()))
    }
}

/// Everything needed to evaluate the right-hand sides of the derivative
/// recursion, plus the memo of solved derivatives.
pub struct DerivativeContext<'a> {
    pub space: &'a SplineSpace,
    pub table: &'a FieldTable,
    pub ph: Physics,
    pub data: &'a dyn SourceData,
    pub y: Vec<f64>,
    pub system: AssembledSystem,
    lu: BandLu,
    memo: HashMap<MultiIndex, Vec<Complex64>>,
}

/// Values of a spline at all volume points (`val, dx, dy, lap`) and edge points.
struct PointValues {
    vol: Vec<[Complex64; 4]>,
    edge: Vec<Complex64>,
}

fn point_values(space: &SplineSpace, c: &[Complex64]) -> PointValues {
    use crate::spline_fem::{Edge, EdgePoint, VolumePoint};
    let mut vol = vec![[Complex64::default(); 4]; space.n_volume_qp()];
    let mut vp = VolumePoint::default();
    for ey in 0..space.m_e {
        for ex in 0..space.m_e {
            for qy in 0..space.nq {
                for qx in 0..space.nq {
                    space.volume_point(ex, ey, qx, qy, &mut vp);
                    let o = &mut vol[space.volume_qp_id(ex, ey, qx, qy)];
                    for (a, &i) in vp.idx.iter().enumerate() {
                        o[0] += c[i] * vp.val[a];
                        o[1] += c[i] * vp.dx[a];
                        o[2] += c[i] * vp.dy[a];
                        o[3] += c[i] * vp.lap[a];
                    }
                }
            }
        }
    }
    let mut edge = vec![Complex64::default(); space.n_edge_qp()];
    let mut ep = EdgePoint::default();
    for e_ in Edge::ALL {
        for e in 0..space.m_e {
            for q in 0..space.nq {
                space.edge_point(e_, e, q, &mut ep);
                let o = &mut edge[space.edge_qp_id(e_, e, q)];
                for (a, &i) in ep.idx.iter().enumerate() {
                    *o += c[i] * ep.val[a];
                }
            }
        }
    }
    PointValues { vol, edge }
}

impl<'a> DerivativeContext<'a> {
    pub fn new(
        space: &'a SplineSpace,
        table: &'a FieldTable,
        y: &ParamVector,
        ph: Physics,
        data: &'a dyn SourceData,
    ) -> Result<Self> {
        if data.field_dependent() {
            return Err(invalid(
                "derivative recursion needs data that does not depend on the field",
            ));
        }
        let system = assemble_system(space, table, y, &ph, data)?;
        let lu = BandLu::factor(system.matrix.clone())?;
        let u0 = lu.solve(&system.rhs)?;
        let mut memo = HashMap::new();
        memo.insert(MultiIndex::zero(), u0);
        let mut yv = y.values().to_vec();
        yv.resize(table.s, 0.0);
        Ok(Self {
            space,
            table,
            ph,
            data,
            y: yv,
            system,
            lu,
            memo,
        })
    }

    pub fn matrix(&self) -> &BandMatrix<Complex64> {
        &self.system.matrix
    }

    pub fn get(&self, nu: &MultiIndex) -> Option<&Vec<Complex64>> {
        self.memo.get(nu)
    }

    fn check_dims(&self, nu: &MultiIndex) -> Result<()> {
        if nu.max_dim() > self.table.s {
            return Err(invalid(format!(
                "multi-index {nu} reaches beyond the {} tabulated modes",
                self.table.s
            )));
        }
        Ok(())
    }

    /// Load vector of the recursion for `nu`; every lower entry must already be solved.
    pub fn derivative_rhs(&self, nu: &MultiIndex) -> Result<Vec<Complex64>> {
        self.check_dims(nu)?;
        if nu.order() == 0 {
            return Ok(self.system.rhs.clone());
        }
        let need = |m: &MultiIndex| -> Result<&Vec<Complex64>> {
            self.memo
                .get(m)
                .ok_or_else(|| Error::InvalidState(format!("derivative {m} needed for {nu} is missing")))
        };
        let k2 = self.ph.k * self.ph.k;
        let a = self.ph.params.a;
        let kl = self.ph.kl();
        let (_, xi2, xi3) = self.ph.params.xi(2, kl);
        let y = &self.y;
        let table = self.table;

        // R_j terms: (nu_j, j, values of d^{nu - e_j} u)
        let mut r_terms = Vec::new();
        for j in nu.support() {
            let lower = nu.minus(j).unwrap();
            r_terms.push((nu.get(j) as f64, j, point_values(self.space, need(&lower)?)));
        }
        // S_nu terms: (coef, j, l, values of d^{nu - e_j - e_l} u)
        let mut s_terms = Vec::new();
        if nu.order() >= 2 {
            for j in nu.support() {
                let nj = nu.minus(j).unwrap();
                for l in nj.support() {
                    let coef = nu.get(j) as f64 * nj.get(l) as f64;
                    let lower = nj.minus(l).unwrap();
                    s_terms.push((coef, j, l, point_values(self.space, need(&lower)?)));
                }
            }
        }
        let t_unit = if nu.order() == 1 { nu.support().next() } else { None };
        let data = self.data;

        let out = assemble_load(
            self.space,
            |q| {
                let [n, _, _] = table.vol_n(q.qp, y);
                let x = q.x;
                let mut c = LoadCoeffs::default();
                for (nj, j, pv) in &r_terms {
                    let [psi, px, py] = table.vol_mode(q.qp, *j);
                    let [z, zx, zy, zl] = pv.vol[q.qp];
                    let m2z = x[0] * zx + x[1] * zy + xi3 * z;
                    let lz = zl + k2 * n * z;
                    let divxpsi = 2.0 * psi + x[0] * px + x[1] * py;
                    // -[A psi z conj(L w) + (M2 z + A/k^2 L z) k^2 psi conj(w) + xi2 k^2 psi z conj(w) + k^2 div(x psi) z conj(w)]
                    c.lap -= *nj * a * psi * z;
                    c.val -= *nj
                        * (a * psi * z * k2 * n
                            + (m2z + a / k2 * lz) * k2 * psi
                            + xi2 * k2 * psi * z
                            + k2 * divxpsi * z);
                }
                for (coef, j, l, pv) in &s_terms {
                    let pj = table.vol_mode(q.qp, *j)[0];
                    let pl = table.vol_mode(q.qp, *l)[0];
                    c.val -= *coef * a * k2 * pj * pl * pv.vol[q.qp][0];
                }
                if let Some(j) = t_unit {
                    let psi = table.vol_mode(q.qp, j)[0];
                    c.val -= a * psi * data.f(x, n);
                }
                c
            },
            |q| {
                let xn = q.x[0] * q.normal[0] + q.x[1] * q.normal[1];
                let mut c = EdgeLoadCoeffs::default();
                for (nj, j, pv) in &r_terms {
                    let psi = table.edge_mode(q.qp, *j)[0];
                    c.val += *nj * k2 * xn * psi * pv.edge[q.qp];
                }
                c
            },
        );
        Ok(out)
    }

    fn solve_one(&self, nu: &MultiIndex) -> Result<Vec<Complex64>> {
        let rhs = self.derivative_rhs(nu)?;
        self.lu.solve(&rhs)
    }

    /// Solves `d^nu u`, filling every missing lower entry first.
    pub fn solve_derivative(&mut self, nu: &MultiIndex) -> Result<Vec<Complex64>> {
        self.check_dims(nu)?;
        if let Some(v) = self.memo.get(nu) {
            return Ok(v.clone());
        }
        // solving every nu - e_j also fills every nu - e_j - e_l
        for j in nu.support().collect::<Vec<_>>() {
            self.solve_derivative(&nu.minus(j).unwrap())?;
        }
        let v = self.solve_one(nu)?;
        self.memo.insert(nu.clone(), v.clone());
        Ok(v)
    }

    /// Fills all `|nu| <= max_order` over `dims` dimensions wave by wave;
    /// entries of one wave are solved in parallel.
    pub fn fill_graded(&mut self, max_order: u32, dims: usize) -> Result<()> {
        let all = MultiIndex::all_up_to(max_order, dims);
        for order in 1..=max_order {
            let wave: Vec<&MultiIndex> = all
                .iter()
                .filter(|m| m.order() == order && !self.memo.contains_key(*m))
                .collect();
            let solved: Vec<Result<(MultiIndex, Vec<Complex64>)>> = wave
                .par_iter()
                .map(|m| self.solve_one(m).map(|v| ((*m).clone(), v)))
                .collect();
            for r in solved {
                let (m, v) = r?;
                self.memo.insert(m, v);
            }
        }
        Ok(())
    }

    /// Relative Galerkin residual of a memo entry against its recursion rhs.
    pub fn residual(&self, nu: &MultiIndex) -> Result<f64> {
        let v = self
            .memo
            .get(nu)
            .ok_or_else(|| Error::InvalidState(format!("{nu} not solved")))?;
        let rhs = self.derivative_rhs(nu)?;
        Ok(relative_residual_with(&self.system, v, &rhs))
    }
}

/// Result of checking `||d^nu u||_V` against its a-priori bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub lhs: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// `Upsilon_j = C_regu ||psi_j||_{W1,inf}`.
pub fn upsilon(field: &AffineField, constants: &Constants, l: f64, s: usize) -> Vec<f64> {
    (1..=s).map(|j| constants.c_regu * field.mode_w1inf(j, l)).collect()
}

/// `(C_func / C_coer)(L ||f|| + sqrt(L) ||g||) |nu|! Upsilon^nu`.
pub fn derivative_bound(nu: &MultiIndex, constants: &Constants, l: f64, f_norm: f64, g_norm: f64, ups: &[f64]) -> f64 {
    let base = constants.c_func / constants.c_coer * (l * f_norm + l.sqrt() * g_norm);
    let prod: f64 = nu.support().map(|j| ups[j - 1].powi(nu.get(j) as i32)).product();
    base * factorial(nu.order() as usize) * prod
}

pub fn regularity_certificate(
    nu: &MultiIndex,
    constants: &Constants,
    l: f64,
    data_norms: (f64, f64),
    ups: &[f64],
    coeffs: &[Complex64],
    gram: &BandMatrix<f64>,
) -> Certificate {
    let lhs = gram.form(coeffs, coeffs).re.max(0.0).sqrt();
    let bound = derivative_bound(nu, constants, l, data_norms.0, data_norms.1, ups);
    let ratio = if bound > 0.0 {
        lhs / bound
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Certificate {
        lhs,
        bound,
        ratio,
        pass: lhs <= bound * (1.0 + 1e-6),
    }
}

/// Extremal sequence of the scalar recursion lemma and its closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCheck {
    pub a_nu: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn recursion_oracle(c0: f64, c1: f64, c2: f64, psi: &[f64], b: f64, nu: &MultiIndex) -> Result<RecursionCheck> {
    if [c0, c1, c2, b].iter().chain(psi).any(|v| !(*v >= 0.0)) {
        return Err(invalid("recursion oracle needs non-negative inputs"));
    }
    if nu.max_dim() > psi.len() {
        return Err(invalid("multi-index exceeds the length of psi"));
    }
    fn rec(nu: &MultiIndex, c: (f64, f64, f64), psi: &[f64], b: f64, memo: &mut HashMap<MultiIndex, f64>) -> f64 {
        if let Some(v) = memo.get(nu) {
            return *v;
        }
        let v = match nu.order() {
            0 => b,
            1 => c.0 * psi[nu.max_dim() - 1] * b,
            _ => {
                let mut acc = 0.0;
                for j in nu.support() {
                    let nj = nu.minus(j).unwrap();
                    acc += c.1 * nu.get(j) as f64 * psi[j - 1] * rec(&nj, c, psi, b, memo);
                    for l in nj.support() {
                        let nl = nj.minus(l).unwrap();
                        acc += c.2
                            * nu.get(j) as f64
                            * nj.get(l) as f64
                            * psi[j - 1]
                            * psi[l - 1]
                            * rec(&nl, c, psi, b, memo);
                    }
                }
                acc
            }
        };
        memo.insert(nu.clone(), v);
        v
    }
    let mut memo = HashMap::new();
    let a_nu = rec(nu, (c0, c1, c2), psi, b, &mut memo);
    let cmax = c0.max(2.0 * c1).max((2.0 * c2).sqrt());
    let prod: f64 = nu
        .support()
        .map(|j| (cmax * psi[j - 1]).powi(nu.get(j) as i32))
        .product();
    let bound = factorial(nu.order() as usize) * prod * b;
    Ok(RecursionCheck {
        a_nu,
        bound,
        pass: a_nu <= bound * (1.0 + 1e-12),
    })
}
