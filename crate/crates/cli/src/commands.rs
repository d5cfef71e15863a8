use std::cell::RefCell;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use zndstab::evans::{evans, EvansRecord, Method};
use zndstab::modelbench::{
    reproduce_table_with, trend_checks, Direction, Table, TableEntry, TrendCheck, DEFAULT_DOMAIN,
};
use zndstab::numerics::{SolveStats, DEFAULT_TOL};
use zndstab::stability::{count_unstable_with, sweep_roots, RootTrace, SweepOptions, WindingReport};
use zndstab::znd::{build_wave, GasWaveConfig, ProblemFile, SteadyWave, DEFAULT_EPS_Y, MIN_DOMAIN};

use crate::args::{parse_values, Cli, Command};
use crate::error::CliError;
use crate::manifest::{config_hash, manifest_path, timestamp, RunManifest, StatsSummary, TolSource};
use crate::output::{fmt17, write_csv, write_json};

pub const TOL_ENV: &str = "ZNDSTAB_TOL";

#[derive(Debug, Serialize, Deserialize)]
pub struct EvansOutput {
    #[serde(flatten)]
    pub record: EvansRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContourOutput {
    #[serde(flatten)]
    pub report: WindingReport,
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RootsOutput {
    #[serde(flatten)]
    pub trace: RootTrace,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

struct Context<'a> {
    cli: &'a Cli,
    problem: ProblemFile,
    tol: f64,
    tol_source: TolSource,
    stats: RefCell<Vec<StatsSummary>>,
}

fn resolve_tol(cli: &Cli, file_tol: Option<f64>) -> Result<(f64, TolSource), CliError> {
    let (tol, source) = if let Some(t) = cli.tol {
        (t, TolSource::Flag)
    } else if let Ok(v) = std::env::var(TOL_ENV) {
        let t = v
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("{TOL_ENV}=`{v}` is not a number")))?;
        (t, TolSource::Env)
    } else if let Some(t) = file_tol {
        (t, TolSource::Config)
    } else {
        (DEFAULT_TOL, TolSource::Default)
    };
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Usage(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    Ok((tol, source))
}

impl<'a> Context<'a> {
    fn new(cli: &'a Cli) -> Result<Self, CliError> {
        let problem = match &cli.config {
            Some(path) => ProblemFile::load(path)?,
            None => ProblemFile {
                gas: GasWaveConfig::default(),
                tol: None,
                eps_y: None,
            },
        };
        // The benchmark is independent of the problem file.
        let file_tol = match cli.command {
            Command::Bench { .. } => None,
            _ => problem.tol,
        };
        let (tol, tol_source) = resolve_tol(cli, file_tol)?;
        if let Some(m) = cli.m {
            if !(m.is_finite() && m > 0.0) {
                return Err(CliError::Usage(format!("--M must be positive, got {m}")));
            }
        }
        if let Some(jobs) = cli.jobs {
            if jobs == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            // Fails only if a pool already exists, in which case it is reused.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
        }
        Ok(Self {
            cli,
            problem,
            tol,
            tol_source,
            stats: RefCell::new(Vec::new()),
        })
    }

    fn out(&self) -> Option<&Path> {
        self.cli.out.as_deref()
    }

    fn wave(&self) -> Result<SteadyWave, CliError> {
        Ok(build_wave(&self.problem.gas)?)
    }

    fn domain(&self, wave: &SteadyWave) -> f64 {
        self.cli.m.unwrap_or_else(|| {
            wave.reaction_length(self.problem.eps_y.unwrap_or(DEFAULT_EPS_Y))
                .max(MIN_DOMAIN)
        })
    }

    fn record_stats(&self, operation: &str, stats: &SolveStats) {
        let mut all = self.stats.borrow_mut();
        let entry = match all.iter_mut().position(|s| s.operation == operation) {
            Some(i) => &mut all[i],
            None => {
                all.push(StatsSummary {
                    operation: operation.to_string(),
                    ..StatsSummary::default()
                });
                all.last_mut().expect("just pushed")
            }
        };
        entry.runs += 1;
        entry.accepted_steps += stats.accepted_steps;
        entry.rejected_steps += stats.rejected_steps;
        entry.rhs_evaluations += stats.rhs_evaluations;
    }

    fn manifest_name(&self) -> Option<String> {
        self.out().map(|p| {
            manifest_path(p)
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
    }

    fn finish(&self, outputs: &[PathBuf], m: Option<f64>, checks: Vec<TrendCheck>) -> Result<(), CliError> {
        let Some(out) = self.out() else {
            return Ok(());
        };
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            subcommand: self.cli.command.name().to_string(),
            config_hash: config_hash(&self.problem)?,
            config: self.problem,
            tol: self.tol,
            tol_source: self.tol_source,
            m,
            method: self.cli.method,
            jobs: self.cli.jobs,
            timestamp: timestamp(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            stats: self.stats.take(),
            checks,
        };
        manifest.write(&manifest_path(out))
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Profile { points } => profile(&ctx, *points),
        Command::Evans { lambda } => evans_cmd(&ctx, *lambda),
        Command::Contour { radius, density } => contour(&ctx, *radius, *density),
        Command::Roots {
            parameter,
            values,
            seed,
            newton_tol,
        } => {
            let values = parse_values(values).map_err(CliError::Usage)?;
            roots(&ctx, *parameter, &values, *seed, *newton_tol)
        }
        Command::Bench { table } => bench(&ctx, *table),
    }
}

fn outputs_of(ctx: &Context) -> Vec<PathBuf> {
    ctx.out().map(Path::to_path_buf).into_iter().collect()
}

fn profile(ctx: &Context, points: usize) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let wave = ctx.wave()?;
    let m = ctx.domain(&wave);
    let rows = wave.sample_profile(&SteadyWave::log_grid(points, m))?;
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| [r.y, r.x, r.rho, r.u, r.e, r.reactant, r.p, r.temperature].map(fmt17).to_vec())
        .collect();
    write_csv(ctx.out(), &["y", "x", "rho", "u", "e", "Y", "p", "T"], &body)?;
    ctx.finish(&outputs_of(ctx), Some(m), vec![])
}

fn evans_cmd(ctx: &Context, lambda: Complex64) -> Result<(), CliError> {
    let wave = ctx.wave()?;
    let m = ctx.domain(&wave);
    let r = evans(&wave, lambda, ctx.cli.method, m, ctx.tol)?;
    ctx.record_stats("evans", &r.stats);
    let out = EvansOutput {
        record: r.record(),
        manifest: ctx.manifest_name(),
    };
    write_json(ctx.out(), &out)?;
    ctx.finish(&outputs_of(ctx), Some(m), vec![])
}

fn contour(ctx: &Context, radius: f64, density: usize) -> Result<(), CliError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(CliError::Usage(format!("--radius must be positive, got {radius}")));
    }
    if density == 0 {
        return Err(CliError::Usage("--density must be at least 1".into()));
    }
    let wave = ctx.wave()?;
    let m = ctx.domain(&wave);
    let report = count_unstable_with(&wave, radius, ctx.cli.method, m, ctx.tol, density)?;
    let w = report.work;
    {
        let mut all = ctx.stats.borrow_mut();
        all.push(StatsSummary {
            operation: "evans".into(),
            runs: w.evaluations,
            accepted_steps: w.accepted_steps,
            rejected_steps: w.rejected_steps,
            rhs_evaluations: w.rhs_evaluations,
        });
    }
    eprintln!("winding number {} ({} samples)", report.winding, report.n_samples);
    let output = ContourOutput {
        report,
        radius,
        manifest: ctx.manifest_name(),
    };
    match ctx.out() {
        Some(csv_path) => {
            let rows: Vec<Vec<String>> = output
                .report
                .samples
                .iter()
                .map(|s| [s.lambda.re, s.lambda.im, s.value.re, s.value.im].map(fmt17).to_vec())
                .collect();
            write_csv(Some(csv_path), &["re_lambda", "im_lambda", "re_D", "im_D"], &rows)?;
            let report_path = report_path(csv_path);
            write_json(Some(&report_path), &output)?;
            ctx.finish(&[csv_path.to_path_buf(), report_path], Some(m), vec![])
        }
        None => write_json(None, &output),
    }
}

/// `<out stem>.report.json` beside the sample CSV.
pub fn report_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("report.json")
}

fn roots(ctx: &Context, parameter: zndstab::stability::SweepParameter, values: &[f64], seed: Complex64, newton_tol: f64) -> Result<(), CliError> {
    if !(newton_tol > 0.0) {
        return Err(CliError::Usage(format!("--newton-tol must be positive, got {newton_tol}")));
    }
    let base = ctx.problem.gas;
    let opts = SweepOptions {
        newton_tol,
        ..SweepOptions::default()
    };
    let method = ctx.cli.method;
    let trace = sweep_roots(&parameter.to_string(), values, seed, &opts, |p, lambda| {
        let wave = build_wave(&parameter.apply(&base, p))?;
        let m = ctx.domain(&wave);
        let r = evans(&wave, lambda, method, m, ctx.tol)?;
        ctx.record_stats("evans", &r.stats);
        Ok(r.normalized())
    })?;
    let out = RootsOutput {
        trace,
        method,
        manifest: ctx.manifest_name(),
    };
    write_json(ctx.out(), &out)?;
    ctx.finish(&outputs_of(ctx), ctx.cli.m, vec![])
}

pub const BENCH_HEADER: [&str; 11] = [
    "row",
    "lambda_re",
    "lambda_im",
    "c",
    "direction",
    "mesh_points",
    "reference_count",
    "ratio_to_reference",
    "endpoint_re",
    "endpoint_im",
    "overflow_at",
];

fn bench_row(e: &TableEntry) -> Vec<String> {
    let c = &e.cell;
    vec![
        e.row.to_string(),
        fmt17(c.params.lambda.re),
        fmt17(c.params.lambda.im),
        fmt17(c.params.c_decay),
        match c.direction {
            Direction::Forward => "forward".into(),
            Direction::Backward => "backward".into(),
        },
        c.mesh_points.to_string(),
        e.reference_count.to_string(),
        fmt17(e.ratio_to_reference()),
        fmt17(c.endpoint[1].re),
        fmt17(c.endpoint[1].im),
        c.overflow_at.map(fmt17).unwrap_or_default(),
    ]
}

fn bench(ctx: &Context, table: u32) -> Result<(), CliError> {
    let table = Table::from_number(table)?;
    let m = ctx.cli.m.unwrap_or(DEFAULT_DOMAIN);
    let entries = reproduce_table_with(table, ctx.tol, m)?;
    let factored = match table {
        Table::Factored => None,
        Table::Unfactored => Some(reproduce_table_with(Table::Factored, ctx.tol, m)?),
    };
    for e in entries.iter().chain(factored.iter().flatten()) {
        ctx.record_stats(&format!("{:?}/{:?}", e.cell.variant, e.cell.direction).to_lowercase(), &e.cell.stats);
    }
    let checks = trend_checks(table, &entries, factored.as_deref());
    let rows: Vec<Vec<String>> = entries.iter().map(bench_row).collect();
    write_csv(ctx.out(), &BENCH_HEADER, &rows)?;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    ctx.finish(&outputs_of(ctx), Some(m), checks)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Trend(failed.join(", ")))
    }
}
