use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use hqmc::geometry_constants::{compute_constants, parameters_with_overrides, DomainGeometry};
use hqmc::qmc_rules::{
    interlacing_factor, pod_weights, read_rule, spod_weights, worst_case_error, write_rule, write_weights_csv, QmcRule,
};
use hqmc::random_field::{square_field, ParamVector};
use hqmc::spline_fem::{assemble_system, check_finite, mm, relative_residual, solve};
use hqmc::uq_estimator::{
    build_plan, estimate_points, fem_study, plan_from_rule, qmc_rate_study, regularity_sweep, truncation_study,
    write_study_csv, AnyIntegrand, DataKind, Problem, RuleKind, RunConfig,
};
use hqmc::{Error, Result};

const CONFIG_HELP: &str = "\
Configuration file (JSON, unknown keys are rejected):

  k          wavenumber                                   (required)
  side       side length of the square domain              default 1
  p          spline degree, at least 2                    (required)
  m_e        elements per direction                       (required)
  s          truncation dimension, at most field.s         (required)
  N          points per rule: prime for lattice-pod,
             2^m (4 <= m <= 20) for interlaced-spod        (required)
  R          random shifts / MC replicates                 default 8
  rule       lattice-pod | interlaced-spod | mc            (required)
  field      {n0, amplitude, theta, s}; n0 is a number or
             {base, amp, width} for a Gaussian bump        (required)
  p0, p1     summability exponents in (0, 1)               (required)
  delta      lattice rate slack in (0, 1/2)                (required)
  seed       RNG seed for shifts and MC points             (required)
  functional mean | weighted                               default mean
  data       default (f = 1, g = 0) | manufactured         default default
  integrand  pde | product                                 default pde
  params     {alpha1, alpha2, A, beta1_hat, beta2_hat}     default: selected
  output     output directory (overridden by --out)        default: stdout
  study.kl_list    [1, 2, 4, 8, 16]
  study.meshes     [8, 12, 16, 24, 32]
  study.s_list     [2, 4, 8, 16]      study.s_ref  64
  study.m_list     [4, 5, ..., 10]
  study.max_order  3   study.dims 4   study.n_y 10
  study.grid_res   64  study.safety 0.99  study.angle 0.3
  study.y          parameter point of `solve`, default zeros

Exit codes: 0 success, 2 configuration or input error, 3 violated model
assumption, 4 numerical failure.";

#[derive(Parser)]
#[command(
    name = "hqmc",
    version,
    about = "QMC-FEM studies for the stochastic Helmholtz equation"
)]
#[command(after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; CSV goes to stdout when neither this nor `output` is set
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config entry, e.g. `--set field.amplitude=0.1` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Coercivity, continuity, functional and regularity constants for each study.kl_list entry
    Constants(Common),
    /// Field envelope, summability and truncation quantities
    CheckField(Common),
    /// One FEM solve at study.y and its functional value
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write system.mtx and rhs.mtx (Matrix Market)
        #[arg(long)]
        dump_system: bool,
    },
    /// Manufactured-solution errors over study.meshes
    FemConvergence(Common),
    /// Truncation errors over study.s_list against study.s_ref
    TruncStudy(Common),
    /// Cubature error against N over study.m_list
    QmcConvergence(Common),
    /// Builds the configured rule, or applies an imported one to the integrand
    CbcConstruct {
        #[command(flatten)]
        common: Common,
        /// Write the rule in text form
        #[arg(long)]
        export_rule: Option<PathBuf>,
        /// Read a rule instead of constructing one and estimate with it
        #[arg(long)]
        import_rule: Option<PathBuf>,
        /// Write the weights gamma_u for |u| <= study.max_order as CSV
        #[arg(long)]
        export_weights: Option<PathBuf>,
    },
    /// Certifies the parametric derivative bound up to study.max_order
    RegularityCheck(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Constants(c)
            | Command::CheckField(c)
            | Command::FemConvergence(c)
            | Command::TruncStudy(c)
            | Command::QmcConvergence(c)
            | Command::RegularityCheck(c) => c,
            Command::Solve { common, .. } | Command::CbcConstruct { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::CheckField(_) => "check-field",
            Command::Solve { .. } => "solve",
            Command::FemConvergence(_) => "fem-convergence",
            Command::TruncStudy(_) => "trunc-study",
            Command::QmcConvergence(_) => "qmc-convergence",
            Command::CbcConstruct { .. } => "cbc-construct",
            Command::RegularityCheck(_) => "regularity-check",
        }
    }
}

/// Destination of one subcommand's files.
struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    fn open(&self, name: &str) -> Result<Box<dyn Write>> {
        match &self.dir {
            Some(d) => {
                std::fs::create_dir_all(d)?;
                Ok(Box::new(BufWriter::new(File::create(d.join(name))?)))
            }
            None => Ok(Box::new(std::io::stdout().lock())),
        }
    }

    /// Where side files (Matrix Market, rules) go when no explicit path is given.
    fn side_path(&self, name: &str) -> Result<PathBuf> {
        let dir = self.dir.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir.join(name))
    }
}

/// CSV with the config and seed echoed as `#` comments.
fn write_table(w: &mut dyn Write, cfg: &RunConfig, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(w, "# config: {}", cfg.to_json())?;
    writeln!(w, "# seed: {}", cfg.seed)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

fn fmt_y(y: &[f64]) -> String {
    y.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn constants(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let geom = DomainGeometry::square(cfg.side)?;
    let field = square_field(&geom, cfg.field.n0, cfg.field.amplitude, cfg.field.theta, cfg.field.s)?;
    let bounds = field.verify_a1(cfg.s, cfg.study.grid_res, cfg.study.safety)?;
    let p = parameters_with_overrides(&geom, &bounds, &cfg.params)?;
    let mut rows = Vec::new();
    for &kl in &cfg.study.kl_list {
        let c = compute_constants(&geom, &bounds, &p, kl)?;
        rows.push(
            [
                kl,
                c.c_coer,
                c.c_cont,
                c.c_func,
                c.c_r,
                c.c_regu,
                p.alpha1,
                p.alpha2,
                p.a,
                p.beta1_hat,
                p.beta2_hat,
            ]
            .iter()
            .map(|v| v.to_string())
            .collect(),
        );
    }
    let header = [
        "kL",
        "c_coer",
        "c_cont",
        "c_func",
        "c_r",
        "c_regu",
        "alpha1",
        "alpha2",
        "A",
        "beta1_hat",
        "beta2_hat",
    ];
    write_table(&mut *sink.open("constants.csv")?, cfg, &header, &rows)
}

fn check_field(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let geom = DomainGeometry::square(cfg.side)?;
    let field = square_field(&geom, cfg.field.n0, cfg.field.amplitude, cfg.field.theta, cfg.field.s)?;
    let bounds = field.verify_a1(cfg.s, cfg.study.grid_res, cfg.study.safety)?;
    let p = parameters_with_overrides(&geom, &bounds, &cfg.params)?;
    let kl = geom.kl(cfg.k);
    let c = compute_constants(&geom, &bounds, &p, kl)?;
    let sum = field.summability(cfg.p0, cfg.p1, kl, geom.l, cfg.field.s)?;
    let tr = field.truncation_quantities(&c, cfg.p0, cfg.s)?;
    let row = vec![
        kl.to_string(),
        bounds.n_min.to_string(),
        bounds.n_max.to_string(),
        bounds.b_min.to_string(),
        bounds.b_max.to_string(),
        sum.k0_partial.to_string(),
        sum.k1_partial.to_string(),
        sum.k0_converges.to_string(),
        sum.k1_converges.to_string(),
        tr.tail1_bound.to_string(),
        tr.tail2_bound.to_string(),
        tr.s_star.map(|v| v.to_string()).unwrap_or_default(),
        tr.ell_star.to_string(),
        tr.pert_margin.to_string(),
    ];
    let header = [
        "kL",
        "n_min",
        "n_max",
        "b_min",
        "b_max",
        "k0_partial",
        "k1_partial",
        "k0_converges",
        "k1_converges",
        "tail1_bound",
        "tail2_bound",
        "s_star",
        "ell_star",
        "pert_margin",
    ];
    write_table(&mut *sink.open("check-field.csv")?, cfg, &header, &[row])
}

fn solve_cmd(cfg: &RunConfig, sink: &Sink, dump: bool) -> Result<()> {
    let pr = Problem::build(cfg, cfg.s, cfg.m_e)?;
    let y = cfg.study.y.clone().unwrap_or_else(|| vec![0.0; cfg.s]);
    let yv = ParamVector::new(y.clone())?;
    let sys = assemble_system(&pr.space, &pr.table, &yv, &pr.ph, pr.data.as_ref())?;
    let sol = solve(&sys)?;
    check_finite(&sol.coeffs)?;
    if dump {
        mm::write_matrix(
            BufWriter::new(File::create(sink.side_path("system.mtx")?)?),
            &sys.matrix,
        )?;
        mm::write_vector(BufWriter::new(File::create(sink.side_path("rhs.mtx")?)?), &sys.rhs)?;
    }
    let g = pr.functional.apply(&sol.coeffs);
    let mut row = vec![
        fmt_y(&y),
        pr.space.dof.to_string(),
        g.re.to_string(),
        g.im.to_string(),
        relative_residual(&sys, &sol.coeffs).to_string(),
        pr.constants.c_coer.to_string(),
    ];
    let exact = if cfg.data == DataKind::Manufactured {
        pr.exact_qoi()?
    } else {
        Complex64::new(f64::NAN, f64::NAN)
    };
    row.push(if exact.re.is_nan() {
        String::new()
    } else {
        (g - exact).norm().to_string()
    });
    let header = ["y", "dof", "qoi", "qoi_im", "residual", "c_coer", "error"];
    write_table(&mut *sink.open("solve.csv")?, cfg, &header, &[row])
}

struct RuleFiles<'a> {
    export: Option<&'a Path>,
    import: Option<&'a Path>,
    weights: Option<&'a Path>,
}

fn export_weights(path: Option<&Path>, cfg: &RunConfig, gamma: impl Fn(&[usize]) -> f64) -> Result<()> {
    if let Some(path) = path {
        let mut w = BufWriter::new(File::create(path)?);
        write_weights_csv(&mut w, cfg.s, cfg.study.max_order as usize, gamma)?;
        w.flush()?;
    }
    Ok(())
}

fn cbc_construct(cfg: &RunConfig, sink: &Sink, files: RuleFiles) -> Result<()> {
    let f = AnyIntegrand::from_config(cfg)?;
    let f = f.as_dyn();
    if let Some(path) = files.import {
        let rule = read_rule(BufReader::new(File::open(path)?))?;
        if rule.s() < cfg.s {
            return Err(Error::Config(format!(
                "imported rule has s = {} but the config needs s = {}",
                rule.s(),
                cfg.s
            )));
        }
        let kind = match rule {
            QmcRule::Lattice(_) => "lattice",
            QmcRule::Interlaced(_) => "interlaced",
        };
        let n = rule.n();
        let mut plan = plan_from_rule(rule);
        for set in &mut plan.sets {
            for y in set.iter_mut() {
                y.truncate(cfg.s);
            }
        }
        let est = estimate_points(f, &plan)?;
        let row = vec![
            kind.to_string(),
            n.to_string(),
            cfg.s.to_string(),
            est.mean.re.to_string(),
            est.mean.im.to_string(),
            est.rmse.map(|v| v.to_string()).unwrap_or_default(),
        ];
        let header = ["rule", "N", "s", "value", "value_im", "rmse"];
        return write_table(&mut *sink.open("cbc-estimate.csv")?, cfg, &header, &[row]);
    }
    if cfg.rule == RuleKind::Mc {
        return Err(Error::Config(
            "rule: cbc-construct needs lattice-pod or interlaced-spod".into(),
        ));
    }
    let ups = f.upsilon();
    let r = if cfg.rule == RuleKind::InterlacedSpod { 1 } else { cfg.r };
    let plan = build_plan(cfg.rule, cfg.n, r, cfg.s, cfg.seed, &ups, cfg.p1, cfg.delta)?;
    let rule = plan.rule.expect("QMC plans carry their rule");
    let (kind, quality, bound, gen) = match &rule {
        QmcRule::Lattice(l) => {
            let w = pod_weights(&ups[..cfg.s], cfg.p1, cfg.delta)?;
            export_weights(files.weights, cfg, |u| w.gamma(u))?;
            let (e, b) = worst_case_error(l, &w);
            ("lattice", e, b.to_string(), fmt_gen(&l.z))
        }
        QmcRule::Interlaced(ip) => {
            let w = spod_weights(&ups, interlacing_factor(cfg.p1)?, cfg.s)?;
            export_weights(files.weights, cfg, |u| w.gamma(u))?;
            let q: Vec<usize> = ip.q.iter().map(|v| *v as usize).collect();
            ("interlaced", ip.criterion(&w), String::new(), fmt_gen(&q))
        }
    };
    if let Some(path) = files.export {
        let mut w = BufWriter::new(File::create(path)?);
        write_rule(&mut w, &rule)?;
        w.flush()?;
    }
    let row = vec![
        kind.to_string(),
        rule.n().to_string(),
        rule.s().to_string(),
        quality.to_string(),
        bound,
        gen,
    ];
    let header = ["rule", "N", "s", "criterion", "bound", "generator"];
    write_table(&mut *sink.open("cbc-construct.csv")?, cfg, &header, &[row])
}

fn fmt_gen(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn regularity_check(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let st = &cfg.study;
    let rows = regularity_sweep(cfg, st.max_order, st.dims, st.n_y)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sample.to_string(),
                r.nu.dense_string(st.dims),
                r.nu.order().to_string(),
                r.cert.lhs.to_string(),
                r.cert.bound.to_string(),
                r.cert.ratio.to_string(),
                r.cert.pass.to_string(),
                r.residual.to_string(),
            ]
        })
        .collect();
    let header = ["sample", "nu", "order", "lhs", "bound", "ratio", "pass", "residual"];
    write_table(&mut *sink.open("regularity-check.csv")?, cfg, &header, &table)?;
    if let Some(bad) = rows.iter().find(|r| !r.cert.pass) {
        return Err(Error::AssumptionViolation(format!(
            "derivative bound fails for nu = ({}) at sample {}: {} > {}",
            bad.nu.dense_string(st.dims),
            bad.sample,
            bad.cert.lhs,
            bad.cert.bound
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    let mut cfg = RunConfig::load(&common.config, &common.overrides)?;
    if matches!(cli.command, Command::FemConvergence(_)) && cfg.data != DataKind::Manufactured {
        // the study needs a known solution; the echoed config records the switch
        cfg = cfg.with_overrides(&["data=manufactured".to_string()])?;
    }
    let sink = Sink {
        dir: common.out.clone().or_else(|| cfg.output.clone().map(PathBuf::from)),
    };
    let study_csv = |results: &[_]| -> Result<()> {
        let mut w = sink.open(&format!("{}.csv", cli.command.name()))?;
        write_study_csv(&mut w, &cfg, results)?;
        w.flush()?;
        Ok(())
    };
    match &cli.command {
        Command::Constants(_) => constants(&cfg, &sink),
        Command::CheckField(_) => check_field(&cfg, &sink),
        Command::Solve { dump_system, .. } => solve_cmd(&cfg, &sink, *dump_system),
        Command::FemConvergence(_) => {
            let (v, g) = fem_study(&cfg, &cfg.study.meshes)?;
            study_csv(&[v, g])
        }
        Command::TruncStudy(_) => study_csv(&[truncation_study(&cfg, &cfg.study.s_list, cfg.study.s_ref)?]),
        Command::QmcConvergence(_) => study_csv(&[qmc_rate_study(&cfg, &cfg.study.m_list)?]),
        Command::CbcConstruct {
            export_rule,
            import_rule,
            export_weights,
            ..
        } => cbc_construct(
            &cfg,
            &sink,
            RuleFiles {
                export: export_rule.as_deref(),
                import: import_rule.as_deref(),
                weights: export_weights.as_deref(),
            },
        ),
        Command::RegularityCheck(_) => regularity_check(&cfg, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hqmc {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
