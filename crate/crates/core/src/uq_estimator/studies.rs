use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

use super::config::{DataKind, IntegrandKind, RuleKind, RunConfig};
use super::estimator::{build_plan, estimate_points, AnyIntegrand, Integrand, Truncated};
use super::problem::Problem;
use crate::error::{invalid, Error, Result};
use crate::geometry_constants::Constants;
use crate::math::{loglog_fit, next_prime, pairwise_sum_c, prev_prime, LogLogFit};
use crate::parametric_derivatives::{regularity_certificate, Certificate, DerivativeContext, MultiIndex};
use crate::random_field::{ParamVector, TruncationReport};
use crate::spline_fem::{assemble_vnorm_gram, data_norms, vnorm_error};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub control: f64,
    pub value: Complex64,
    pub error: f64,
}

/// Table of (control, estimate, error) with a least-squares log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub study: String,
    pub rows: Vec<StudyRow>,
    pub fit: LogLogFit,
    pub predicted_slope: f64,
}

impl StudyResult {
    fn new(study: &str, rows: Vec<StudyRow>, predicted_slope: f64) -> Result<Self> {
        let (x, y): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.error > 0.0)
            .map(|r| (r.control, r.error))
            .unzip();
        if x.len() < 2 {
            return Err(Error::NumericalFailure(format!(
                "{study}: fewer than two nonzero errors to fit"
            )));
        }
        Ok(Self {
            study: study.to_string(),
            fit: loglog_fit(&x, &y)?,
            rows,
            predicted_slope,
        })
    }
}

/// Writes the results as CSV; the config and seed travel in `#` comment lines.
pub fn write_study_csv(w: &mut impl Write, cfg: &RunConfig, results: &[StudyResult]) -> Result<()> {
    writeln!(w, "# config: {}", cfg.to_json())?;
    writeln!(w, "# seed: {}", cfg.seed)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "study",
        "control",
        "value",
        "value_im",
        "error",
        "slope",
        "slope_band",
        "r2",
        "predicted_slope",
    ])?;
    for res in results {
        for r in &res.rows {
            out.write_record([
                res.study.clone(),
                r.control.to_string(),
                r.value.re.to_string(),
                r.value.im.to_string(),
                r.error.to_string(),
                res.fit.slope.to_string(),
                res.fit.band().to_string(),
                res.fit.r2.to_string(),
                res.predicted_slope.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `|Q_ref - Q_s|` for each `s` in `s_list`, with common random numbers.
///
/// One shifted lattice rule in `s_ref` dimensions with `N_ref = nextprime(4 N)`
/// points is applied to the integrand at full dimension and with the
/// coordinates beyond `s` set to zero.
pub fn truncation_study(cfg: &RunConfig, s_list: &[usize], s_ref: usize) -> Result<StudyResult> {
    if cfg.field.amplitude == 0.0 {
        return Err(invalid(
            "degenerate field (amplitude 0): every truncation error vanishes",
        ));
    }
    if s_list.iter().any(|s| *s >= s_ref) {
        return Err(invalid("every s must be below s_ref"));
    }
    let mut c = cfg.clone();
    c.field.s = c.field.s.max(s_ref);
    let problem = Problem::build(&c, s_ref, cfg.m_e)?;
    let n_ref = next_prime(4 * cfg.n as u64) as usize;
    let plan = build_plan(
        RuleKind::LatticePod,
        n_ref,
        1,
        s_ref,
        cfg.seed,
        &problem.upsilon(),
        cfg.p1,
        cfg.delta,
    )?;
    let reference = estimate_points(&problem, &plan)?.mean;
    let mut rows = Vec::new();
    for &s in s_list {
        let q = estimate_points(&Truncated { inner: &problem, s }, &plan)?.mean;
        rows.push(StudyRow {
            control: s as f64,
            value: q,
            error: (q - reference).norm(),
        });
    }
    rows.push(StudyRow {
        control: s_ref as f64,
        value: reference,
        error: 0.0,
    });
    StudyResult::new("truncation", rows, -(2.0 / cfg.p0 - 1.0))
}

/// V-norm and functional errors of the manufactured plane wave for each mesh.
pub fn fem_study(cfg: &RunConfig, meshes: &[usize]) -> Result<(StudyResult, StudyResult)> {
    if cfg.data != DataKind::Manufactured {
        return Err(invalid("the FEM study needs manufactured data"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let y: Vec<f64> = (0..cfg.s).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let rows: Vec<(StudyRow, StudyRow)> = meshes
        .par_iter()
        .map(|&m| {
            let pr = Problem::build(cfg, cfg.s, m)?;
            let c = pr.solve_at(&y)?;
            let pw = pr.plane_wave.expect("manufactured data");
            let ev = vnorm_error(&pr.space, &c, pr.ph.k, pr.l(), |x| pw.u_ders(x));
            let g = pr.functional.apply(&c);
            let h = pr.space.h;
            Ok((
                StudyRow {
                    control: h,
                    value: Complex64::from(ev),
                    error: ev,
                },
                StudyRow {
                    control: h,
                    value: g,
                    error: (g - pr.exact_qoi()?).norm(),
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (v, f): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let p = cfg.p as f64;
    Ok((
        StudyResult::new("fem-vnorm", v, p - 1.0)?,
        StudyResult::new("fem-functional", f, p)?,
    ))
}

/// Point counts of the QMC study: primes just below `2^m` for lattices, `2^m` otherwise.
pub fn n_list(kind: RuleKind, m_list: &[u32]) -> Vec<usize> {
    m_list
        .iter()
        .map(|&m| match kind {
            RuleKind::LatticePod => prev_prime((1u64 << m) + 1).unwrap_or(2) as usize,
            _ => 1usize << m,
        })
        .collect()
}

/// Rate the theory predicts for a rule kind.
pub fn predicted_qmc_rate(kind: RuleKind, p1: f64, delta: f64) -> f64 {
    match kind {
        RuleKind::Mc => 0.5,
        RuleKind::LatticePod => (1.0 / p1 - 0.5).min(1.0 - delta),
        RuleKind::InterlacedSpod => 1.0 / p1,
    }
}

/// Error vs `N`: RMSE over shifts, or for interlaced rules the distance to the
/// exact integral (product integrand) or to a rule four times finer.
pub fn qmc_rate_study(cfg: &RunConfig, m_list: &[u32]) -> Result<StudyResult> {
    let f = AnyIntegrand::from_config(cfg)?;
    let f = f.as_dyn();
    let ups = f.upsilon();
    let ns = n_list(cfg.rule, m_list);
    let r = if cfg.rule == RuleKind::InterlacedSpod { 1 } else { cfg.r };
    let reference = match (cfg.rule, cfg.integrand) {
        (RuleKind::InterlacedSpod, IntegrandKind::Product) => Some(Complex64::from(1.0)),
        (RuleKind::InterlacedSpod, IntegrandKind::Pde) => {
            let n = 4 * ns.iter().max().copied().unwrap_or(16);
            let plan = build_plan(cfg.rule, n, 1, cfg.s, cfg.seed, &ups, cfg.p1, cfg.delta)?;
            Some(estimate_points(f, &plan)?.mean)
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for n in ns {
        let plan = build_plan(cfg.rule, n, r, cfg.s, cfg.seed, &ups, cfg.p1, cfg.delta)?;
        let est = estimate_points(f, &plan)?;
        let error = match reference {
            Some(q) => (est.mean - q).norm(),
            None => est.rmse.ok_or_else(|| invalid("RMSE needs R >= 2 replicates"))?,
        };
        rows.push(StudyRow {
            control: n as f64,
            value: est.mean,
            error,
        });
    }
    let name = match cfg.rule {
        RuleKind::Mc => "qmc-mc",
        RuleKind::LatticePod => "qmc-lattice-pod",
        RuleKind::InterlacedSpod => "qmc-interlaced-spod",
    };
    StudyResult::new(name, rows, -predicted_qmc_rate(cfg.rule, cfg.p1, cfg.delta))
}

/// Unscaled components of the total error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    /// `1 + 1/kL`
    pub prefactor: f64,
    /// `s^{-2/p0 + 1}`
    pub truncation: f64,
    /// `(kL + 1) h^p`
    pub fem: f64,
    /// `N^{-rate}`
    pub qmc: f64,
    pub qmc_rate: f64,
    /// bound on the first-order truncation tail at the same `s`
    pub tail_bound: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn error_budget(
    constants: &Constants,
    report: &TruncationReport,
    s: usize,
    h: f64,
    p: usize,
    n: usize,
    p0: f64,
    p1: f64,
    delta: f64,
    rule: RuleKind,
) -> Result<ErrorBudget> {
    if s == 0 || n == 0 || !(h > 0.0) || !(p0 > 0.0 && p0 < 1.0) {
        return Err(invalid("error budget needs s, N >= 1, h > 0 and p0 in (0,1)"));
    }
    let kl = constants.kl;
    let rate = predicted_qmc_rate(rule, p1, delta);
    Ok(ErrorBudget {
        prefactor: 1.0 + 1.0 / kl,
        truncation: (s as f64).powf(1.0 - 2.0 / p0),
        fem: (kl + 1.0) * h.powi(p as i32),
        qmc: (n as f64).powf(-rate),
        qmc_rate: rate,
        tail_bound: report.tail1_bound,
    })
}

/// One certificate of the derivative bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityRow {
    pub sample: usize,
    pub nu: MultiIndex,
    pub cert: Certificate,
    pub residual: f64,
}

/// Checks the derivative bound for every `1 <= |nu| <= max_order` over `dims`
/// dimensions (and `nu = 0`) at `n_y` random parameter points.
pub fn regularity_sweep(cfg: &RunConfig, max_order: u32, dims: usize, n_y: usize) -> Result<Vec<RegularityRow>> {
    if cfg.data != DataKind::Default {
        return Err(invalid("the derivative recursion needs the default data"));
    }
    let s = cfg.s.max(dims);
    let mut c = cfg.clone();
    c.field.s = c.field.s.max(s);
    let pr = Problem::build(&c, s, cfg.m_e)?;
    let gram = assemble_vnorm_gram(&pr.space, pr.ph.k, &pr.geom);
    let ups = pr.upsilon();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ys: Vec<ParamVector> = (0..n_y)
        .map(|_| ParamVector::new((0..s).map(|_| rng.gen_range(-0.5..0.5)).collect()))
        .collect::<Result<_>>()?;
    let mut all = vec![MultiIndex::zero()];
    all.extend(MultiIndex::all_up_to(max_order, dims));
    let per_y: Vec<Vec<RegularityRow>> = ys
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let mut ctx = DerivativeContext::new(&pr.space, &pr.table, y, pr.ph, pr.data.as_ref())?;
            ctx.fill_graded(max_order, dims)?;
            let norms = data_norms(&pr.space, &pr.table, y, pr.data.as_ref());
            all.iter()
                .map(|nu| {
                    let cert =
                        regularity_certificate(nu, &pr.constants, pr.l(), norms, &ups, ctx.get(nu).unwrap(), &gram);
                    Ok(RegularityRow {
                        sample: i,
                        nu: nu.clone(),
                        cert,
                        residual: ctx.residual(nu)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_y.into_iter().flatten().collect())
}

/// Plain mean of an integrand over explicit points (used by the degenerate-rule checks).
pub fn mean_over(f: &dyn Integrand, pts: &[Vec<f64>]) -> Result<Complex64> {
    let v: Vec<Complex64> = pts.iter().map(|y| f.eval(y)).collect::<Result<_>>()?;
    Ok(pairwise_sum_c(&v) / pts.len() as f64)
}
