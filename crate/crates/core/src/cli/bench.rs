//! Method comparison against kernel ridge regression. Each method's major
//! parameter doubles from a floor until the test error improves by less than
//! 2% of the KRR error; every setting is averaged over seeded trials.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use super::args::{BenchArgs, FitArgs, PolicyArg, SolverArg};
use super::commands::{fit_tm, load, loss_of, open_out, predict_all, require};
use super::{CliResult, Failure, Stage};
use crate::baselines::{
    apply_map, craftmaps_project, fm2_eval, fm2_fit, kk_map, krr_poly, ridge_on_features,
    DegreePolicy, FmFitConfig, KrrConfig,
};
use crate::data::{metric, preprocess, synth_tm_task, Dataset};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

const SATURATION: f64 = 0.02;

/// `(err − err_krr) / err_krr`
pub fn rel_err(err: f64, err_krr: f64) -> f64 {
    (err - err_krr) / err_krr
}

/// `time / time_krr`
pub fn rel_time(seconds: f64, seconds_krr: f64) -> f64 {
    seconds / seconds_krr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    TmBatch,
    TmStochastic,
    Kk,
    Craftmaps,
    Krr,
    Fm2,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "tm-batch" => Method::TmBatch,
            "tm-stochastic" => Method::TmStochastic,
            "kk" => Method::Kk,
            "craftmaps" => Method::Craftmaps,
            "krr" => Method::Krr,
            "fm2" => Method::Fm2,
            other => return Err(Error::invalid(format!("unknown method `{other}`"))),
        })
    }
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::TmBatch => "tm-batch",
            Method::TmStochastic => "tm-stochastic",
            Method::Kk => "kk",
            Method::Craftmaps => "craftmaps",
            Method::Krr => "krr",
            Method::Fm2 => "fm2",
        }
    }

    /// First value of the doubling sweep, `None` for methods without one.
    fn floor(self) -> Option<usize> {
        match self {
            Method::TmBatch => Some(25),
            Method::TmStochastic => Some(5),
            Method::Kk | Method::Craftmaps => Some(64),
            Method::Fm2 => Some(2),
            Method::Krr => None,
        }
    }
}

struct Ctx<'a> {
    args: &'a BenchArgs,
    train: Dataset,
    test: Dataset,
}

fn features_err(ctx: &Ctx, z_train: &Matrix, z_test: &Matrix) -> Result<f64> {
    let w = ridge_on_features(
        z_train,
        ctx.train.y(),
        ctx.args.ridge_lambda,
        ctx.train.task(),
    )?;
    let pred: Vec<f64> = z_test.iter_rows().map(|r| dot(r, &w)).collect();
    Ok(metric(&pred, ctx.test.y(), ctx.test.task())?.value())
}

/// Test error of one trial.
fn run_once(ctx: &Ctx, m: Method, major: usize, seed: u64) -> CliResult<f64> {
    let a = ctx.args;
    let (train, test) = (&ctx.train, &ctx.test);
    let policy = match a.kk_policy {
        PolicyArg::Homogeneous => DegreePolicy::Homogeneous,
        PolicyArg::Stratified => DegreePolicy::Stratified,
    };
    let q = a.fit.degree;
    match m {
        Method::TmBatch | Method::TmStochastic => {
            let fit = FitArgs {
                solver: if m == Method::TmBatch {
                    SolverArg::Batch
                } else {
                    SolverArg::Stochastic
                },
                iters: major,
                epochs: major,
                ..a.fit.clone()
            };
            let (params, _) = fit_tm(train, &fit, seed)?;
            let pred = predict_all(&params, test)?;
            metric(&pred, test.y(), test.task())
                .data_stage()
                .map(|m| m.value())
        }
        Method::Kk => {
            let map = kk_map(seed, train.dim(), q, major, policy).data_stage()?;
            let zt = apply_map(&map, train.x()).data_stage()?;
            let ze = apply_map(&map, test.x()).data_stage()?;
            features_err(ctx, &zt, &ze).solver_stage()
        }
        Method::Craftmaps => {
            let up = kk_map(seed, train.dim(), q, 4 * major, policy).data_stage()?;
            let map = craftmaps_project(&up, seed ^ 0x9e37_79b9_7f4a_7c15).data_stage()?;
            let zt = apply_map(&map, train.x()).data_stage()?;
            let ze = apply_map(&map, test.x()).data_stage()?;
            features_err(ctx, &zt, &ze).solver_stage()
        }
        Method::Krr => {
            let cfg = KrrConfig {
                degree: q,
                lambda: a.ridge_lambda,
                cap: a.krr_cap,
                seed,
            };
            let pred = krr_poly(train.x(), train.y(), test.x(), &cfg).solver_stage()?;
            metric(&pred, test.y(), test.task())
                .data_stage()
                .map(|m| m.value())
        }
        Method::Fm2 => {
            let mut cfg = FmFitConfig::new(major, a.fit.lambda, loss_of(train.task()));
            cfg.seed = seed;
            cfg.init_scale = a.fit.alpha;
            cfg.lbfgs.max_iters = a.fit.iters;
            let (p, _) = fm2_fit(train, &cfg).solver_stage()?;
            let pred = (0..test.len())
                .map(|i| fm2_eval(&p, test.row(i)))
                .collect::<Result<Vec<_>>>()
                .data_stage()?;
            metric(&pred, test.y(), test.task())
                .data_stage()
                .map(|m| m.value())
        }
    }
}

/// Mean error and mean seconds over the configured trials.
fn run_trials(ctx: &Ctx, m: Method, major: usize) -> CliResult<(f64, f64)> {
    let (mut err, mut secs) = (0.0, 0.0);
    for t in 0..ctx.args.trials {
        let started = Instant::now();
        err += run_once(ctx, m, major, ctx.args.fit.seed.wrapping_add(t as u64))?;
        secs += started.elapsed().as_secs_f64();
    }
    let k = ctx.args.trials as f64;
    Ok((err / k, secs / k))
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    method: Method,
    err: f64,
    seconds: f64,
    major: Option<usize>,
    status: String,
}

fn sweep(ctx: &Ctx, m: Method, err_krr: f64) -> Row {
    let failed = |f: Failure, major| Row {
        method: m,
        err: f64::NAN,
        seconds: f64::NAN,
        major,
        status: format!("failed: {}", f.message.replace([',', '\n'], ";")),
    };
    let Some(floor) = m.floor() else {
        return match run_trials(ctx, m, 0) {
            Ok((err, seconds)) => Row {
                method: m,
                err,
                seconds,
                major: None,
                status: "ok".into(),
            },
            Err(f) => failed(f, None),
        };
    };
    let mut prev: Option<f64> = None;
    let mut major = floor;
    for s in 0..ctx.args.max_sweeps {
        let (err, seconds) = match run_trials(ctx, m, major) {
            Ok(v) => v,
            Err(f) => return failed(f, Some(major)),
        };
        let saturated = prev.is_some_and(|p| p - err < SATURATION * err_krr);
        if saturated || s + 1 == ctx.args.max_sweeps {
            return Row {
                method: m,
                err,
                seconds,
                major: Some(major),
                status: if saturated { "saturated" } else { "max_sweeps" }.into(),
            };
        }
        prev = Some(err);
        major *= 2;
    }
    unreachable!("max_sweeps is at least 1")
}

fn prepare(a: &BenchArgs) -> CliResult<(Dataset, Dataset)> {
    if a.synth {
        let t = synth_tm_task(
            a.fit.seed,
            a.synth_dim,
            a.fit.degree,
            a.synth_rank,
            a.synth_train,
            a.synth_test,
            a.synth_noise,
        )
        .data_stage()?;
        return Ok((t.train, t.test));
    }
    let train = load(require(&a.data.data, "--data")?, &a.data)?;
    let test = load(require(&a.data.test, "--test")?, &a.data)?;
    let d = train.dim().max(test.dim());
    let (train, test) = (
        train.pad_to_dim(d).data_stage()?,
        test.pad_to_dim(d).data_stage()?,
    );
    if a.data.no_preprocess {
        Ok((train, test))
    } else {
        preprocess(&train, &test).data_stage()
    }
}

pub(super) fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let methods = a
        .methods
        .iter()
        .map(|s| s.parse::<Method>())
        .collect::<Result<Vec<_>>>()
        .data_stage()?;
    if !methods.contains(&Method::Krr) {
        return Err(Failure::data("--methods must include krr"));
    }
    if a.trials == 0 || a.max_sweeps == 0 {
        return Err(Failure::data("--trials and --max-sweeps must be positive"));
    }
    let (train, test) = prepare(a)?;
    let ctx = Ctx {
        args: a,
        train,
        test,
    };

    let krr = sweep(&ctx, Method::Krr, f64::NAN);
    let rows: Vec<Row> = methods
        .iter()
        .map(|&m| {
            if m == Method::Krr {
                krr.clone()
            } else {
                sweep(&ctx, m, krr.err)
            }
        })
        .collect();

    let mut out = open_out(&a.out)?;
    let io = |e: std::io::Error| Failure::data(e);
    writeln!(out, "method,err,seconds,relerr,reltime,major_param,status").map_err(io)?;
    for r in &rows {
        writeln!(
            out,
            "{},{:.6e},{:.4},{:.6e},{:.4},{},{}",
            r.method.name(),
            r.err,
            r.seconds,
            rel_err(r.err, krr.err),
            rel_time(r.seconds, krr.seconds),
            r.major.map_or_else(|| "-".to_string(), |v| v.to_string()),
            r.status
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)?;
    if !krr.err.is_finite() {
        return Err(Failure::solver(
            "kernel ridge regression failed; relerr and reltime are undefined",
        ));
    }
    Ok(())
}
