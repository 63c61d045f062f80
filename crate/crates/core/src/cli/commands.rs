use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::args::{
    Cli, Command, CvArgs, DataArgs, DecayArg, EvalArgs, FitArgs, Format, RademacherArgs, SolverArg,
    SynthArgs, TaskArg, TrainArgs,
};
use super::{bench, CliResult, Failure, Stage};
use crate::data::{
    metric, parse_csv, parse_sparse_text, preprocess, preprocess_train, preprocess_with_norms,
    synth_tm_task, write_sparse_text, Dataset, LabelColumn, Task,
};
use crate::generalization::{
    bound_rank_one, bound_rank_r, draw_signs, empirical_rademacher_lower,
    empirical_rademacher_upper, max_entry_check, AscentConfig, BoundInputs,
};
use crate::matrix::{norm2, Matrix};
use crate::model::{ModelMeta, TmParams, TmShape};
use crate::objective::{Loss, ObjectiveConfig};
use crate::solvers::{
    fit_batch, fit_stochastic, BatchSolverConfig, FitReport, LbfgsConfig, StepDecay,
    StochasticSolverConfig,
};
use crate::tensor::PowerIteration;

pub(super) fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
        Command::Rademacher(a) => cmd_rademacher(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

pub(super) fn task_of(t: TaskArg) -> Task {
    match t {
        TaskArg::Reg => Task::Regression,
        TaskArg::Cls => Task::Binary,
    }
}

pub(super) fn loss_of(t: Task) -> Loss {
    match t {
        Task::Regression => Loss::Squared,
        Task::Binary => Loss::Logistic,
    }
}

pub(super) fn load(path: &Path, args: &DataArgs) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let task = task_of(args.task);
    let parsed = match args.format {
        Format::Svm => parse_sparse_text(BufReader::new(file), task),
        Format::Csv => {
            let label: LabelColumn = args.label_col.parse().data_stage()?;
            parse_csv(file, label, task)
        }
    };
    parsed.map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

pub(super) fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Failure::data(format!("{flag} is required")))
}

/// Pads `data` with zero columns up to `d`; a wider file is an error.
pub(super) fn align(data: Dataset, d: usize) -> CliResult<Dataset> {
    if data.dim() == d {
        Ok(data)
    } else {
        data.pad_to_dim(d).data_stage()
    }
}

pub(super) fn open_out(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn io_fail(e: io::Error) -> Failure {
    Failure::data(e)
}

/// Fits a Tensor Machine on already prepared training data.
pub(super) fn fit_tm(
    train: &Dataset,
    fit: &FitArgs,
    seed: u64,
) -> CliResult<(TmParams, FitReport)> {
    let shape = TmShape::new(train.dim(), fit.degree, fit.rank).data_stage()?;
    let init = TmParams::init_random(shape, fit.alpha, seed).data_stage()?;
    let obj = ObjectiveConfig::new(fit.lambda, loss_of(train.task())).data_stage()?;
    let out = match fit.solver {
        SolverArg::Batch => {
            let cfg = BatchSolverConfig {
                lbfgs: LbfgsConfig {
                    max_iters: fit.iters,
                    ..LbfgsConfig::default()
                },
                seed,
            };
            fit_batch(&init, train, &obj, &cfg)
        }
        SolverArg::Stochastic => {
            let cfg = StochasticSolverConfig {
                epochs: fit.epochs,
                minibatch_count: fit.minibatches,
                base_step: fit.step,
                decay: match fit.decay {
                    DecayArg::Constant => StepDecay::Constant,
                    DecayArg::InverseSqrt => StepDecay::InverseSqrt,
                },
                adaptive: !fit.no_adaptive,
                seed,
            };
            fit_stochastic(&init, train, &obj, &cfg)
        }
    };
    let (params, report) = out.solver_stage()?;
    if report.status.line_search_failed() {
        log::warn!("line search failed; keeping the best point found");
    }
    Ok((params, report))
}

pub(super) fn predict_all(params: &TmParams, data: &Dataset) -> CliResult<Vec<f64>> {
    (0..data.len())
        .map(|i| params.evaluate(data.row(i)))
        .collect::<crate::error::Result<Vec<_>>>()
        .data_stage()
}

fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let raw = load(require(&a.data.data, "--data")?, &a.data)?;
    let train = if a.data.no_preprocess {
        raw
    } else {
        preprocess_train(&raw)
    };
    let (params, report) = fit_tm(&train, &a.fit, a.fit.seed)?;

    let mut model = Vec::new();
    params
        .write_model(
            &ModelMeta {
                alpha: a.fit.alpha,
                seed: a.fit.seed,
            },
            &mut model,
        )
        .data_stage()?;
    write_file(&a.out, &model)?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut s = a.out.clone().into_os_string();
        s.push(".report.csv");
        PathBuf::from(s)
    });
    write_file(&report_path, report.to_csv_reproducible().as_bytes())?;
    if let Some(t) = &a.timing {
        write_file(t, report.to_csv().as_bytes())?;
    }
    eprint!("{}", report.to_log());
    Ok(())
}

/// Model plus the test set prepared the way its training data was.
fn model_and_test(a: &EvalArgs) -> CliResult<(TmParams, Dataset)> {
    let file =
        File::open(&a.model).map_err(|e| Failure::data(format!("{}: {e}", a.model.display())))?;
    let (params, _) = TmParams::read_model(BufReader::new(file)).data_stage()?;
    let d = params.shape().dim;
    let test = align(load(require(&a.data.test, "--test")?, &a.data)?, d)?;
    if a.data.no_preprocess {
        return Ok((params, test));
    }
    let Some(train_path) = &a.data.data else {
        return Err(Failure::data(
            "--data (the training file) is needed to reproduce the column scaling; \
             pass --no-preprocess if the model was trained on raw features",
        ));
    };
    let train = align(load(train_path, &a.data)?, d)?;
    let norms = preprocess_train(&train)
        .column_norms()
        .map(<[f64]>::to_vec)
        .unwrap_or_default();
    Ok((params, preprocess_with_norms(&test, &norms).data_stage()?))
}

fn cmd_predict(a: &EvalArgs) -> CliResult<()> {
    let (params, test) = model_and_test(a)?;
    let pred = predict_all(&params, &test)?;
    let mut out = open_out(&a.out)?;
    for p in pred {
        writeln!(out, "{p:?}").map_err(io_fail)?;
    }
    out.flush().map_err(io_fail)
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let (params, test) = model_and_test(a)?;
    let pred = predict_all(&params, &test)?;
    let m = metric(&pred, test.y(), test.task()).data_stage()?;
    let mut out = open_out(&a.out)?;
    writeln!(out, "{:.5e}", m.value()).map_err(io_fail)?;
    out.flush().map_err(io_fail)
}

#[derive(Debug, Clone, PartialEq)]
struct CvCell {
    lambda: f64,
    alpha: f64,
    folds: Vec<f64>,
    mean: f64,
}

/// Lowest mean metric; ties go to the larger lambda, then the smaller alpha.
fn select(cells: &[CvCell]) -> Option<&CvCell> {
    cells.iter().filter(|c| c.mean.is_finite()).min_by(|a, b| {
        a.mean
            .total_cmp(&b.mean)
            .then(b.lambda.total_cmp(&a.lambda))
            .then(a.alpha.total_cmp(&b.alpha))
    })
}

fn cmd_cv(a: &CvArgs) -> CliResult<()> {
    if a.lambdas.is_empty() || a.alphas.is_empty() {
        return Err(Failure::data("lambda and alpha grids must be nonempty"));
    }
    let data = load(require(&a.data.data, "--data")?, &a.data)?;
    let folds = crate::data::kfold(data.len(), a.folds, a.fit.seed).data_stage()?;
    let mut cells = Vec::new();
    for &lambda in &a.lambdas {
        for &alpha in &a.alphas {
            let fit = FitArgs {
                lambda,
                alpha,
                ..a.fit.clone()
            };
            let mut scores = Vec::with_capacity(folds.len());
            for (k, val_idx) in folds.iter().enumerate() {
                let mut train_idx: Vec<usize> = folds
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .flat_map(|(_, f)| f.iter().copied())
                    .collect();
                train_idx.sort_unstable();
                let mut val_sorted = val_idx.clone();
                val_sorted.sort_unstable();
                let (tr, va) = (data.subset(&train_idx), data.subset(&val_sorted));
                let (tr, va) = if a.data.no_preprocess {
                    (tr, va)
                } else {
                    preprocess(&tr, &va).data_stage()?
                };
                let score = match fit_tm(&tr, &fit, a.fit.seed) {
                    Ok((params, _)) => {
                        let pred = predict_all(&params, &va)?;
                        metric(&pred, va.y(), va.task()).data_stage()?.value()
                    }
                    Err(f) if f.code == super::EXIT_SOLVER => {
                        log::warn!("lambda={lambda:?} alpha={alpha:?} fold {k}: {}", f.message);
                        f64::NAN
                    }
                    Err(f) => return Err(f),
                };
                scores.push(score);
            }
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            cells.push(CvCell {
                lambda,
                alpha,
                folds: scores,
                mean,
            });
        }
    }

    let mut out = open_out(&a.out)?;
    writeln!(out, "lambda,alpha,fold,metric").map_err(io_fail)?;
    for c in &cells {
        for (k, s) in c.folds.iter().enumerate() {
            writeln!(out, "{:?},{:?},{k},{s:?}", c.lambda, c.alpha).map_err(io_fail)?;
        }
        writeln!(out, "{:?},{:?},mean,{:?}", c.lambda, c.alpha, c.mean).map_err(io_fail)?;
    }
    let best = select(&cells);
    match best {
        Some(b) => writeln!(
            out,
            "# selected lambda={:?} alpha={:?} metric={:?}",
            b.lambda, b.alpha, b.mean
        ),
        None => writeln!(out, "# selected none"),
    }
    .map_err(io_fail)?;
    out.flush().map_err(io_fail)?;
    if best.is_none() {
        return Err(Failure::solver("every grid cell failed"));
    }
    Ok(())
}

fn gaussian_points(n: usize, d: usize, seed: u64) -> CliResult<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Matrix::from_vec(n, d, data).data_stage()
}

fn cmd_rademacher(a: &RademacherArgs) -> CliResult<()> {
    let points = match &a.data.data {
        Some(p) => {
            let raw = load(p, &a.data)?;
            let ds = if a.data.no_preprocess {
                raw
            } else {
                preprocess_train(&raw)
            };
            ds.x().clone()
        }
        None => {
            if a.points == 0 || a.dim == 0 {
                return Err(Failure::data("--points and --dim must be positive"));
            }
            gaussian_points(a.points, a.dim, a.seed)?
        }
    };
    let (n, d) = (points.rows(), points.cols());
    let signs = draw_signs(n, a.draws, a.seed.wrapping_add(1));
    let upper = empirical_rademacher_upper(
        &points,
        a.degree,
        a.radius,
        &signs,
        &PowerIteration::default(),
    )
    .data_stage()?;
    let lower = empirical_rademacher_lower(
        &points,
        a.degree,
        a.radius,
        &signs,
        &AscentConfig {
            restarts: a.restarts,
            seed: a.seed.wrapping_add(2),
            ..AscentConfig::default()
        },
    )
    .data_stage()?;
    let entries = max_entry_check(&points, a.degree, &signs).data_stage()?;

    let mut out = open_out(&a.out)?;
    writeln!(out, "draw,lower,upper,max_entry_lhs,rhs").map_err(io_fail)?;
    for k in 0..signs.len() {
        writeln!(
            out,
            "{k},{:?},{:?},{:?},{:?}",
            lower.per_draw[k], upper.per_draw[k], entries.lhs.per_draw[k], entries.rhs
        )
        .map_err(io_fail)?;
    }
    writeln!(
        out,
        "mean,{:?},{:?},{:?},{:?}",
        lower.mean, upper.mean, entries.lhs.mean, entries.rhs
    )
    .map_err(io_fail)?;
    let b_x = points.iter_rows().map(norm2).fold(0.0_f64, f64::max);
    if b_x > 0.0 {
        let inp = BoundInputs::new(d, a.degree, 1, a.radius, b_x, n).data_stage()?;
        writeln!(
            out,
            "# bound_rank_r={:?} bound_rank_one={:?} (c=1, r=1, B_x={:?})",
            bound_rank_r(&inp).data_stage()?,
            bound_rank_one(&inp).data_stage()?,
            b_x
        )
        .map_err(io_fail)?;
    }
    out.flush().map_err(io_fail)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let task = synth_tm_task(
        a.seed, a.dim, a.degree, a.rank, a.n_train, a.n_test, a.noise,
    )
    .data_stage()?;
    for (suffix, ds) in [(".train.svm", &task.train), (".test.svm", &task.test)] {
        let mut buf = Vec::new();
        write_sparse_text(ds, &mut buf).data_stage()?;
        write_file(&with_suffix(&a.out, suffix), &buf)?;
    }
    let mut buf = Vec::new();
    task.truth
        .write_model(
            &ModelMeta {
                alpha: 1.0,
                seed: a.seed,
            },
            &mut buf,
        )
        .data_stage()?;
    write_file(&with_suffix(&a.out, ".truth.tm"), &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(lambda: f64, alpha: f64, mean: f64) -> CvCell {
        CvCell {
            lambda,
            alpha,
            folds: vec![mean],
            mean,
        }
    }

    #[test]
    fn selection_tie_breaks() {
        let cells = vec![
            cell(1e-5, 0.1, 0.2),
            cell(1e-3, 1.0, 0.2),
            cell(1e-3, 0.1, 0.2),
            cell(1e-4, 0.1, f64::NAN),
        ];
        let b = select(&cells).unwrap();
        assert_eq!((b.lambda, b.alpha), (1e-3, 0.1));
        let cells = vec![cell(1e-5, 0.1, 0.1), cell(1e-3, 0.1, 0.2)];
        assert_eq!(select(&cells).unwrap().lambda, 1e-5);
        assert!(select(&[cell(1.0, 1.0, f64::NAN)]).is_none());
    }
}
