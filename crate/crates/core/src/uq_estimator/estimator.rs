use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{IntegrandKind, RuleKind, RunConfig};
use super::problem::Problem;
use crate::error::{invalid, Error, Result};
use crate::math::pairwise_sum_c;
use crate::qmc_rules::{
    cbc_lattice, cbc_poly_lattice, interlacing_factor, lattice_points, pod_weights, spod_weights, LatticeRule, QmcRule,
};

/// A function of `y in [-1/2, 1/2]^s`.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64]) -> Result<Complex64>;
    /// `Upsilon_j` driving the QMC weights.
    fn upsilon(&self) -> Vec<f64>;
}

impl Integrand for Problem {
    fn dim(&self) -> usize {
        self.s
    }

    fn eval(&self, y: &[f64]) -> Result<Complex64> {
        self.qoi(y)
    }

    fn upsilon(&self) -> Vec<f64> {
        Problem::upsilon(self)
    }
}

/// `F(y) = prod_j (1 + a_j (y_j^2 - 1/12))` with `a_j = j^{-3}`; the exact integral is 1.
#[derive(Debug, Clone)]
pub struct ProductIntegrand {
    pub a: Vec<f64>,
}

impl ProductIntegrand {
    pub fn new(s: usize) -> Self {
        Self {
            a: (1..=s).map(|j| (j as f64).powi(-3)).collect(),
        }
    }
}

impl Integrand for ProductIntegrand {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn eval(&self, y: &[f64]) -> Result<Complex64> {
        Ok(Complex64::from(
            self.a
                .iter()
                .zip(y)
                .map(|(a, v)| 1.0 + a * (v * v - 1.0 / 12.0))
                .product::<f64>(),
        ))
    }

    fn upsilon(&self) -> Vec<f64> {
        // first-order bound |d_j F| <= a_j |F / (1 + a_j ...)| on [-1/2, 1/2]^s; the larger
        // choice 2 a_j inflates the factorial interaction weights enough that CBC reuses
        // generators inside an interlacing block
        self.a.clone()
    }
}

/// Restricts an integrand to its first `s` variables by zeroing the rest.
pub struct Truncated<'a, I: Integrand> {
    pub inner: &'a I,
    pub s: usize,
}

impl<I: Integrand> Integrand for Truncated<'_, I> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<Complex64> {
        let mut z = y.to_vec();
        z.iter_mut().skip(self.s).for_each(|v| *v = 0.0);
        self.inner.eval(&z)
    }

    fn upsilon(&self) -> Vec<f64> {
        self.inner.upsilon()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Complex64,
    /// `None` for deterministic rules or a single replicate
    pub rmse: Option<f64>,
    pub replicates: Vec<Complex64>,
    pub n: usize,
}

/// Point sets of a rule (one per shift or replicate), mapped to `[-1/2, 1/2]^s`.
pub struct PointPlan {
    pub kind: RuleKind,
    pub sets: Vec<Vec<Vec<f64>>>,
    pub rule: Option<QmcRule>,
}

/// Constructs the cubature of `kind` with `n` points in `s` dimensions.
#[allow(clippy::too_many_arguments)]
pub fn build_plan(
    kind: RuleKind,
    n: usize,
    r: usize,
    s: usize,
    seed: u64,
    upsilon: &[f64],
    p1: f64,
    delta: f64,
) -> Result<PointPlan> {
    match kind {
        RuleKind::Mc => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sets = (0..r)
                .map(|_| {
                    (0..n)
                        .map(|_| (0..s).map(|_| rng.gen::<f64>() - 0.5).collect())
                        .collect()
                })
                .collect();
            Ok(PointPlan { kind, sets, rule: None })
        }
        RuleKind::LatticePod => {
            let z = if n == 1 {
                vec![1; s]
            } else {
                let w = pod_weights(&upsilon[..s], p1, delta)?;
                cbc_lattice(n, s, &w)?
            };
            let rule = LatticeRule::new(n, z, r, seed)?;
            let sets = (0..r)
                .map(|i| lattice_points(&rule, Some(i)))
                .collect::<Result<Vec<_>>>()?;
            Ok(PointPlan {
                kind,
                sets,
                rule: Some(QmcRule::Lattice(rule)),
            })
        }
        RuleKind::InterlacedSpod => {
            if !n.is_power_of_two() {
                return Err(invalid(format!("interlaced rules need N = 2^m, got {n}")));
            }
            let alpha = interlacing_factor(p1)?;
            let w = spod_weights(upsilon, alpha, s)?;
            let rule = cbc_poly_lattice(n.trailing_zeros(), s, &w)?;
            Ok(plan_from_rule(QmcRule::Interlaced(rule)))
        }
    }
}

/// Point sets of an existing rule.
pub fn plan_from_rule(rule: QmcRule) -> PointPlan {
    match &rule {
        QmcRule::Lattice(l) => PointPlan {
            kind: RuleKind::LatticePod,
            sets: if l.r() == 0 {
                vec![lattice_points(l, None).expect("unshifted points")]
            } else {
                (0..l.r())
                    .map(|i| lattice_points(l, Some(i)).expect("valid shift"))
                    .collect()
            },
            rule: Some(rule),
        },
        QmcRule::Interlaced(ip) => {
            let pts = ip
                .points()
                .into_iter()
                .map(|p| p.into_iter().map(|t| t - 0.5).collect())
                .collect();
            PointPlan {
                kind: RuleKind::InterlacedSpod,
                sets: vec![pts],
                rule: Some(rule),
            }
        }
    }
}

/// Averages over every point set; samples run in parallel, sums are pairwise.
pub fn estimate_points(f: &(impl Integrand + ?Sized), plan: &PointPlan) -> Result<Estimate> {
    let mut replicates = Vec::with_capacity(plan.sets.len());
    let mut n = 0;
    for set in &plan.sets {
        n = set.len();
        let vals: Vec<Complex64> = set
            .par_iter()
            .map(|y| {
                f.eval(y).map_err(|e| match e {
                    Error::NumericalFailure(m) => Error::NumericalFailure(format!("{m} at y = {y:?}")),
                    Error::AssumptionViolation(m) => Error::AssumptionViolation(format!("{m} at y = {y:?}")),
                    other => Error::InvalidState(format!("sample y = {y:?} failed: {other}")),
                })
            })
            .collect::<Result<_>>()?;
        replicates.push(pairwise_sum_c(&vals) / set.len() as f64);
    }
    let r = replicates.len();
    let mean = pairwise_sum_c(&replicates) / r as f64;
    let rmse = (r >= 2 && plan.kind != RuleKind::InterlacedSpod).then(|| {
        let ss: f64 = replicates.iter().map(|q| (q - mean).norm_sqr()).sum();
        (ss / (r * (r - 1)) as f64).sqrt()
    });
    Ok(Estimate {
        mean,
        rmse,
        replicates,
        n,
    })
}

/// The integrand selected by the config: the FEM functional or the product test function.
pub enum AnyIntegrand {
    Pde(Box<Problem>),
    Product(ProductIntegrand),
}

impl AnyIntegrand {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Ok(match cfg.integrand {
            IntegrandKind::Pde => AnyIntegrand::Pde(Box::new(Problem::build(cfg, cfg.s, cfg.m_e)?)),
            IntegrandKind::Product => AnyIntegrand::Product(ProductIntegrand::new(cfg.s)),
        })
    }

    pub fn as_dyn(&self) -> &dyn Integrand {
        match self {
            AnyIntegrand::Pde(p) => p.as_ref(),
            AnyIntegrand::Product(p) => p,
        }
    }
}

/// Runs the configured rule once: mean and RMSE over the shifts.
pub fn estimate(cfg: &RunConfig) -> Result<Estimate> {
    let f = AnyIntegrand::from_config(cfg)?;
    let f = f.as_dyn();
    let r = if cfg.rule == RuleKind::InterlacedSpod { 1 } else { cfg.r };
    let plan = build_plan(cfg.rule, cfg.n, r, cfg.s, cfg.seed, &f.upsilon(), cfg.p1, cfg.delta)?;
    estimate_points(f, &plan)
}
