//! Estimator `Q_{s,N}(G(u_{s,h}))`, its Monte Carlo baseline, and the
//! truncation, discretization and cubature convergence studies.

mod config;
mod estimator;
mod problem;
mod studies;

pub use config::{apply_override, DataKind, FieldConfig, IntegrandKind, RuleKind, RunConfig, StudyConfig};
pub use estimator::{
    build_plan, estimate, estimate_points, plan_from_rule, AnyIntegrand, Estimate, Integrand, PointPlan,
    ProductIntegrand, Truncated,
};
pub use problem::Problem;
pub use studies::{
    error_budget, fem_study, mean_over, n_list, predicted_qmc_rate, qmc_rate_study, regularity_sweep, truncation_study,
    write_study_csv, ErrorBudget, RegularityRow, StudyResult, StudyRow,
};
