//! Command dispatch and artifact layout.

use std::hash::Hasher;
use std::io::Write;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use serde::Serialize;

use fracspde_core::analysis::Axis;
use fracspde_core::Error as CoreError;
use fracspde_core::GridSpec;

use crate::config::RunConfig;
use crate::error::{Result, RunError};
use crate::fbm2::Fbm2;
use crate::output::{Staging, DIAGNOSTICS, METADATA, RESOLVED_CONFIG};
use crate::study;

/// Pass thresholds of `validate-kernel`.
pub const HEAT_RESIDUAL_TOL: f64 = 1e-8;
pub const SEMIGROUP_TOL: f64 = 1e-3;
pub const SEMIGROUP_POINTS: usize = 200;
pub const ISOMETRY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    SampleField,
    Solve,
    SolveCoupled,
    SweepTheta,
    ValidateCovariance,
    ValidateKernel,
    EstimateHolder,
    VarianceGrowth,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SampleField => "sample-field",
            Command::Solve => "solve",
            Command::SolveCoupled => "solve-coupled",
            Command::SweepTheta => "sweep-theta",
            Command::ValidateCovariance => "validate-covariance",
            Command::ValidateKernel => "validate-kernel",
            Command::EstimateHolder => "estimate-holder",
            Command::VarianceGrowth => "variance-growth",
        }
    }
}

#[derive(Serialize)]
struct GridMeta {
    horizon: f64,
    length: f64,
    n_t: usize,
    n_x: usize,
    dt: f64,
    dx: f64,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    h1: f64,
    h2: f64,
    seed: u64,
    ensemble_size: usize,
    theta: f64,
    grid: GridMeta,
    c_h: Option<f64>,
    config_hash: String,
    solver_digest: String,
}

fn config_hash(resolved: &str) -> String {
    let mut h = FnvHasher::default();
    h.write(resolved.as_bytes());
    format!("{:016x}", h.finish())
}

fn metadata<'a>(cmd: Command, cfg: &RunConfig, c_h: Option<f64>, resolved: &str) -> Result<Metadata<'a>> {
    let grid = cfg.grid()?;
    let solver = cfg.solver_config()?;
    Ok(Metadata {
        command: cmd.name(),
        h1: cfg.h1,
        h2: cfg.h2,
        seed: cfg.seed,
        ensemble_size: cfg.ensemble_size,
        theta: solver.theta(),
        grid: GridMeta {
            horizon: grid.horizon(),
            length: grid.length(),
            n_t: grid.n_t(),
            n_x: grid.n_x(),
            dt: grid.dt(),
            dx: grid.dx(),
        },
        c_h,
        config_hash: config_hash(resolved),
        solver_digest: format!("{:016x}", solver.digest()),
    })
}

/// Runs `cmd` and commits its output directory. On a numerical failure the
/// directory holds only the resolved config and `diagnostics.json`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let c_h = study::calibrated_c_h(cfg)?;
    let resolved = cfg.resolved(c_h)?;
    let meta = metadata(cmd, cfg, c_h, &resolved)?;
    let staging = Staging::new(&cfg.output_dir)?;
    match produce(cmd, cfg, &staging) {
        Ok(()) => {
            staging.write_bytes(RESOLVED_CONFIG, resolved.as_bytes())?;
            staging.write_json(METADATA, &meta)?;
            staging.commit()
        }
        Err(e @ RunError::Numerical { .. }) => {
            drop(staging);
            let failed = Staging::new(&cfg.output_dir)?;
            failed.write_bytes(RESOLVED_CONFIG, resolved.as_bytes())?;
            failed.write_json(DIAGNOSTICS, &diagnostics(cmd, &e))?;
            failed.commit()?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

#[derive(Serialize)]
struct Diagnostics {
    command: &'static str,
    kind: &'static str,
    message: String,
    member: Option<usize>,
    t_index: Option<usize>,
    x_index: Option<usize>,
    value: Option<String>,
    picard_trace: Option<Vec<f64>>,
}

fn diagnostics(cmd: Command, e: &RunError) -> Diagnostics {
    let mut d = Diagnostics {
        command: cmd.name(),
        kind: e.kind(),
        message: e.to_string(),
        member: None,
        t_index: None,
        x_index: None,
        value: None,
        picard_trace: None,
    };
    if let RunError::Numerical { source, member } = e {
        d.member = *member;
        match source {
            CoreError::BlowUp {
                t_index,
                x_index,
                value,
            } => {
                d.t_index = Some(*t_index);
                d.x_index = Some(*x_index);
                // JSON has no NaN or infinity
                d.value = Some(value.to_string());
            }
            CoreError::NonConvergence { trace } => d.picard_trace = Some(trace.clone()),
            _ => {}
        }
    }
    d
}

fn produce(cmd: Command, cfg: &RunConfig, out: &Staging) -> Result<()> {
    match cmd {
        Command::SampleField => sample_field(cfg, out),
        Command::Solve => solve(cfg, out, false),
        Command::SolveCoupled => solve(cfg, out, true),
        Command::SweepTheta => sweep_theta(cfg, out),
        Command::ValidateCovariance => validate_covariance(cfg, out),
        Command::ValidateKernel => validate_kernel(cfg, out),
        Command::EstimateHolder => estimate_holder(cfg, out),
        Command::VarianceGrowth => variance_growth(cfg, out),
    }
}

pub fn field_file_name(member: usize) -> String {
    format!("field_{member:04}.fbm2")
}

fn node_rows<'a>(grid: &'a GridSpec) -> impl Iterator<Item = (usize, usize, f64, f64)> + 'a {
    (0..=grid.n_t()).flat_map(move |n| (0..=grid.n_x()).map(move |j| (n, j, grid.t(n), grid.x(j))))
}

fn sample_field(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let fields = study::sample_fields(cfg)?;
    for (k, f) in fields.iter().enumerate() {
        let dump = Fbm2 {
            h1: cfg.h1,
            h2: cfg.h2,
            horizon: cfg.horizon,
            length: cfg.length,
            seed: f.seed(),
            values: f.values().clone(),
        };
        out.write_with(&field_file_name(k), |w| dump.write(w))?;
    }
    let first = &fields[0];
    let grid = *first.grid();
    out.write_with("field.csv", |w| {
        writeln!(w, "t,x,value")?;
        let mut c = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for (n, j, t, x) in node_rows(&grid) {
            c.serialize((t, x, first.values()[[n, j]])).map_err(std::io::Error::other)?;
        }
        c.flush()
    })
}

fn solve(cfg: &RunConfig, out: &Staging, coupled: bool) -> Result<()> {
    let s = study::solve(cfg, coupled)?;
    let f = &s.fields[0];
    let grid = *f.grid();
    let kind = f.companion_kind().name();
    out.write_with("solution.csv", |w| {
        writeln!(w, "t,x,u,companion,companion_kind")?;
        let mut c = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for (n, j, t, x) in node_rows(&grid) {
            c.serialize((t, x, f.u()[[n, j]], f.companion()[[n, j]], kind))
                .map_err(std::io::Error::other)?;
        }
        c.flush()
    })?;
    if let Some(trace) = &s.trace {
        #[derive(Serialize)]
        struct Row {
            iteration: usize,
            sup_step: f64,
        }
        out.write_csv(
            "picard_trace.csv",
            trace.iter().enumerate().map(|(i, &d)| Row {
                iteration: i + 1,
                sup_step: d,
            }),
        )?;
    }
    if s.fields.len() > 1 {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            x: f64,
            u_mean: f64,
            u_var: f64,
            companion_mean: f64,
            companion_var: f64,
        }
        let m = s.fields.len() as f64;
        let stats = |a: &dyn Fn(&fracspde_core::spde_solver::SolutionField) -> f64| {
            let mean = s.fields.iter().map(a).sum::<f64>() / m;
            let var = s.fields.iter().map(|f| (a(f) - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (mean, var)
        };
        out.write_csv(
            "ensemble_stats.csv",
            node_rows(&grid).map(|(n, j, t, x)| {
                let (u_mean, u_var) = stats(&|f| f.u()[[n, j]]);
                let (companion_mean, companion_var) = stats(&|f| f.companion()[[n, j]]);
                Row {
                    t,
                    x,
                    u_mean,
                    u_var,
                    companion_mean,
                    companion_var,
                }
            }),
        )?;
    }
    Ok(())
}

fn sweep_theta(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let s = study::theta_sweep(cfg)?;
    let d = &s.distances;
    #[derive(Serialize)]
    struct Pair {
        theta_a: f64,
        theta_b: f64,
        d2: f64,
    }
    let k = d.thetas.len();
    out.write_csv(
        "theta_distances.csv",
        (0..k).flat_map(|a| ((a + 1)..k).map(move |b| (a, b))).map(|(a, b)| Pair {
            theta_a: d.thetas[a],
            theta_b: d.thetas[b],
            d2: d.d2[[a, b]],
        }),
    )?;
    #[derive(Serialize)]
    struct ToGradient {
        theta: f64,
        d2: f64,
    }
    out.write_csv(
        "gradient_distances.csv",
        s.to_gradient.iter().map(|&(theta, d2)| ToGradient { theta, d2 }),
    )?;
    if let Some(r) = &s.rate {
        let (lo, hi) = r.fit.ci();
        out.write_csv(
            "theta_rate.csv",
            [FitRow {
                slope: r.fit.slope,
                ci_low: lo,
                ci_high: hi,
                r_squared: r.fit.r_squared,
                pairs: r.pairs.len(),
                non_monotone: r.non_monotone,
            }],
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    slope: f64,
    ci_low: f64,
    ci_high: f64,
    r_squared: f64,
    pairs: usize,
    non_monotone: bool,
}

#[derive(Debug, Serialize)]
pub struct CovarianceSummary {
    pub samples: usize,
    pub nodes: usize,
    pub entries: usize,
    pub exceedances: usize,
    pub expected_false_positives: f64,
    pub max_abs_error: f64,
    pub verdict: &'static str,
}

fn validate_covariance(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let r = study::covariance_check(cfg)?;
    let grid = cfg.grid()?;
    #[derive(Serialize)]
    struct Entry {
        t_a: f64,
        x_a: f64,
        t_b: f64,
        x_b: f64,
        empirical: f64,
        analytic: f64,
        standard_error: f64,
        exceeds: bool,
    }
    let k = r.nodes.len();
    out.write_csv(
        "covariance_entries.csv",
        (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).map(|(a, b)| {
            let ((ia, ja), (ib, jb)) = (r.nodes[a], r.nodes[b]);
            let diff = (r.empirical[[a, b]] - r.analytic[[a, b]]).abs();
            Entry {
                t_a: grid.t(ia),
                x_a: grid.x(ja),
                t_b: grid.t(ib),
                x_b: grid.x(jb),
                empirical: r.empirical[[a, b]],
                analytic: r.analytic[[a, b]],
                standard_error: r.standard_error[[a, b]],
                exceeds: diff > 4.0 * r.standard_error[[a, b]],
            }
        }),
    )?;
    let summary = CovarianceSummary {
        samples: r.samples,
        nodes: k,
        entries: r.distinct_entries(),
        exceedances: r.exceedances,
        expected_false_positives: r.expected_false_positives(),
        max_abs_error: r.max_abs_error,
        verdict: if r.passes() { "pass" } else { "fail" },
    };
    out.write_csv("covariance_report.csv", [&summary])?;
    out.write_json("covariance_report.json", &summary)
}

fn validate_kernel(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let grid = cfg.grid()?;
    let bounds = study::kernel_bounds(cfg.kernel_samples, cfg.seed, cfg.horizon, cfg.length)?;
    out.write_csv("kernel_bounds.csv", &bounds)?;
    let heat = study::heat_equation_residual(cfg.kernel_samples, cfg.seed, cfg.horizon, cfg.length)?;
    let semi = study::semigroup_error(SEMIGROUP_POINTS, cfg.seed, &grid)?;
    #[derive(Serialize)]
    struct Identity {
        check: &'static str,
        value: f64,
        tolerance: f64,
        pass: bool,
    }
    out.write_csv(
        "identities.csv",
        [
            Identity {
                check: "heat_equation_rel",
                value: heat,
                tolerance: HEAT_RESIDUAL_TOL,
                pass: heat <= HEAT_RESIDUAL_TOL,
            },
            Identity {
                check: "semigroup_abs",
                value: semi,
                tolerance: SEMIGROUP_TOL,
                pass: semi <= SEMIGROUP_TOL,
            },
        ],
    )?;
    let (c_h, pairs) = study::isometry_check(cfg.solver_hurst()?, cfg.horizon, cfg.length)?;
    #[derive(Serialize)]
    struct IsoRow {
        t_a: f64,
        x_a: f64,
        t_b: f64,
        x_b: f64,
        gram: f64,
        covariance: f64,
        rel_error: f64,
        c_h: f64,
        pass: bool,
    }
    out.write_csv(
        "isometry.csv",
        pairs.iter().map(|p| IsoRow {
            t_a: p.t_a,
            x_a: p.x_a,
            t_b: p.t_b,
            x_b: p.x_b,
            gram: p.gram,
            covariance: p.covariance,
            rel_error: p.rel_error,
            c_h,
            pass: p.rel_error <= ISOMETRY_TOL,
        }),
    )
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::Space => "space",
        Axis::Time => "time",
    }
}

fn estimate_holder(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let rows = study::holder_study(cfg)?;
    #[derive(Serialize)]
    struct Moment {
        lag: f64,
        moment: f64,
        count: usize,
    }
    #[derive(Serialize)]
    struct Fit {
        field: &'static str,
        axis: &'static str,
        exponent: f64,
        ci_low: f64,
        ci_high: f64,
        slope: f64,
        r_squared: f64,
    }
    for r in &rows {
        let sf = &r.structure;
        out.write_csv(
            &format!("structure_{}_{}.csv", r.field, axis_name(r.axis)),
            sf.lags.iter().zip(&sf.moments).zip(&sf.counts).map(|((&lag, &moment), &count)| Moment {
                lag,
                moment,
                count,
            }),
        )?;
    }
    out.write_csv(
        "holder_fits.csv",
        rows.iter().map(|r| Fit {
            field: r.field,
            axis: axis_name(r.axis),
            exponent: r.fit.exponent,
            ci_low: r.fit.exponent - r.fit.ci_halfwidth,
            ci_high: r.fit.exponent + r.fit.ci_halfwidth,
            slope: r.fit.log_log.slope,
            r_squared: r.fit.log_log.r_squared,
        }),
    )
}

fn variance_growth(cfg: &RunConfig, out: &Staging) -> Result<()> {
    let g = study::variance_growth(cfg)?;
    #[derive(Serialize)]
    struct Row {
        t: f64,
        variance: f64,
    }
    out.write_csv(
        "variance_profile.csv",
        g.profile.times.iter().zip(&g.profile.variances).map(|(&t, &variance)| Row { t, variance }),
    )?;
    #[derive(Serialize)]
    struct Fit {
        x: f64,
        slope: f64,
        ci_low: f64,
        ci_high: f64,
        r_squared: f64,
        expected: f64,
    }
    let (ci_low, ci_high) = g.fit.ci();
    out.write_csv(
        "growth_fit.csv",
        [Fit {
            x: g.x,
            slope: g.fit.slope,
            ci_low,
            ci_high,
            r_squared: g.fit.r_squared,
            expected: g.expected,
        }],
    )
}

/// Reads and parses a config file, mapping read failures to config errors.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text)
}
