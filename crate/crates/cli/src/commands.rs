use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use svddbw_core::data::{load_csv, write_csv, LabelColumn};
use svddbw_core::evaluation::{confusion, f1, f1_sweep, grid_score_2d, GridBounds};
use svddbw_core::pspline::write_band_csv;
use svddbw_core::rng;
use svddbw_core::sampling::{sample_train_with, SamplingTrainConfig};
use svddbw_core::selector::{
    full_peak, objective_curve, randomized_sweep, sampling_peak, ConvergenceParams, KernelMethod,
    RandomizedSweepConfig, SamplingPeakConfig,
};
use svddbw_core::svdd::solve_dual_with_stats;
use svddbw_core::{train_curve, Dataset, Label, SmootherParams, SvddConfig, SvddModel, SweepGrid};

use crate::args::*;
use crate::config::{FileConfig, DEFAULT_REPEATS, DEFAULT_RESOLUTION};
use crate::error::CliError;
use crate::report::{with_suffix, RunReport};

type Outcome = Result<(), CliError>;

fn load(d: &DataArgs) -> Result<Dataset, CliError> {
    let label = d.label_column.as_ref().map(|c| LabelColumn::new(c, &d.target));
    Ok(load_csv(&d.data, label.as_ref())?)
}

/// Rows of the target class when labels are present, otherwise all rows.
fn targets_only(data: Dataset) -> Result<Dataset, CliError> {
    match data.labels() {
        Some(_) => Ok(data.filter_label(Label::Target)?),
        None => Ok(data),
    }
}

fn write_table(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Outcome {
    let err = |e| CliError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    writeln!(w, "{header}").map_err(err)?;
    for row in rows {
        writeln!(w, "{row}").map_err(err)?;
    }
    w.flush().map_err(err)
}

fn smoother(cfg: &FileConfig, knots: Option<usize>) -> SmootherParams {
    let base = SmootherParams::default();
    match knots.or(cfg.knots) {
        Some(k) => base.with_knots(k),
        None => base,
    }
}

pub fn gen_data(a: &GenDataArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let seed = cfg.seed(a.seed, "gen-data")?;
    let data = report.stage("generate", || a.shape.generate(a.n, seed))?;
    report.stage("write", || write_csv(&data, &a.out))?;
    let meta_path = with_suffix(&a.out, ".meta.json");
    let meta = json!({
        "shape": a.shape,
        "n": a.n,
        "seed": seed,
        "params": a.shape.params(),
    });
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("plain json"))
        .map_err(|e| CliError::io(&meta_path, e))?;
    report.output(&a.out);
    report.output(&meta_path);
    report.config = json!({"shape": a.shape, "n": a.n, "seed": seed});
    report.result = json!({"rows": data.n(), "columns": data.m()});
    Ok(())
}

pub fn train(a: &TrainArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let s = a.s.or(cfg.s).ok_or_else(|| CliError::usage("train needs --s"))?;
    let f = cfg.f(a.f);
    let data = targets_only(report.stage("load", || load(&a.data))?)?;
    let config = SvddConfig::new(s, f);
    let (model, stats) = report.stage("train", || solve_dual_with_stats(&data, &config))?;
    report.stage("write", || model.save(&a.out))?;
    report.output(&a.out);
    report.config = json!({"s": s, "f": f, "rows": data.n()});
    report.result = json!({
        "oof": model.oof(),
        "nsv": model.nsv(),
        "r_squared": model.r_squared(),
        "penalty": model.penalty(),
        "iterations": stats.iterations,
        "max_violation": stats.max_violation,
    });
    Ok(())
}

pub fn score(a: &ScoreArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let model = report.stage("load model", || SvddModel::load(&a.model))?;
    let data = report.stage("load data", || load(&a.data))?;
    let scores = report.stage("score", || model.score_all(&data))?;
    let outliers = scores.iter().filter(|r| r.is_outlier).count();
    let mut result = json!({
        "rows": data.n(),
        "outliers": outliers,
        "outlier_fraction": outliers as f64 / data.n() as f64,
    });
    if let Some(labels) = data.labels() {
        let inside: Vec<bool> = scores.iter().map(|r| !r.is_outlier).collect();
        let counts = confusion(labels, &inside)?;
        result["confusion"] = json!(counts);
        result["f1"] = json!(f1(&counts));
    }
    if let Some(out) = &a.out {
        let rows = scores
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{i},{},{}", r.distance_sq, u8::from(r.is_outlier)));
        report.stage("write scores", || write_table(out, "row,distance_sq,outlier", rows))?;
        report.output(out);
    }
    if let Some(svg) = &a.svg {
        let resolution = a.resolution.or(cfg.resolution).unwrap_or(DEFAULT_RESOLUTION);
        let grid = report.stage("grid", || {
            GridBounds::around(&data).and_then(|b| grid_score_2d(&model, b, resolution))
        })?;
        grid.write_svg(svg)?;
        report.output(svg);
    }
    report.config = json!({"model": a.model, "s": model.bandwidth(), "f": model.outlier_fraction()});
    report.result = result;
    Ok(())
}

pub fn select(a: &SelectArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let data = targets_only(report.stage("load", || load(&a.data))?)?;
    let grid = cfg.grid(&a.grid, SweepGrid::default_2d())?;
    let f = cfg.f(a.f);
    let smoother = smoother(cfg, a.knots);
    match a.method {
        Method::FullPeak => {
            let peak = report.stage("full peak", || full_peak(&data, &grid, f, &smoother))?;
            let an = &peak.analysis;
            if let Some(prefix) = &a.out_prefix {
                let curve_path = with_suffix(prefix, "_curve.csv");
                let t = &peak.training;
                let rows = (0..t.s.len()).map(|i| format!("{},{},{},{}", t.s[i], t.oof[i], t.nsv[i], t.seconds[i]));
                write_table(&curve_path, "s,oof,nsv,seconds", rows)?;
                let d1 = with_suffix(prefix, "_first_difference.csv");
                let d2 = with_suffix(prefix, "_second_difference.csv");
                write_band_csv(&d1, &an.first_difference, &an.first_fit)?;
                write_band_csv(&d2, &an.second_difference, &an.second_fit)?;
                for p in [&curve_path, &d1, &d2] {
                    report.output(p);
                }
            }
            report.config = json!({"method": "full-peak", "grid": grid, "f": f, "smoother": smoother});
            report.result = json!({
                "s_opt": an.first_max.or(an.band_zero),
                "first_difference_max": an.first_max,
                "second_difference_band_zero": an.band_zero,
                "total_training_seconds": peak.training.total_seconds(),
            });
        }
        Method::SamplingPeak => {
            let seed = cfg.seed(a.seed, "select --method sampling-peak")?;
            let schedule = cfg.schedule(&a.schedule, data.n(), seed)?;
            let mut sp = SamplingPeakConfig::new(schedule, grid, f);
            sp.smoother = smoother;
            sp.shared_stream = !a.per_s_streams;
            sp.conv = ConvergenceParams::new(
                a.eps_s.or(cfg.eps_s).unwrap_or(sp.conv.eps_s),
                a.u.or(cfg.u).unwrap_or(sp.conv.u),
            )
            .map_err(|e| CliError::usage(e.to_string()))?;
            let trace = report.stage("sampling peak", || sampling_peak(&data, &sp))?;
            if let Some(prefix) = &a.out_prefix {
                let path = with_suffix(prefix, "_trace.csv");
                trace.write_csv(&path)?;
                report.output(&path);
            }
            report.config = json!({"method": "sampling-peak", "sampling": sp});
            report.result = json!({
                "s_opt": trace.final_s,
                "converged": trace.converged,
                "converged_at": trace.converged_at,
                "trace": trace.entries,
            });
        }
        Method::Cv | Method::Dfn => {
            let method = if a.method == Method::Cv { KernelMethod::Cv } else { KernelMethod::Dfn };
            let curve = report.stage("objective", || objective_curve(&data, &grid, method))?;
            let best = curve
                .iter()
                .fold(None::<(f64, f64)>, |b, &(s, v)| match b {
                    Some((_, bv)) if bv >= v => b,
                    _ => Some((s, v)),
                })
                .expect("grid is not empty");
            if let Some(prefix) = &a.out_prefix {
                let path = with_suffix(prefix, "_objective.csv");
                write_table(&path, "s,objective", curve.iter().map(|(s, v)| format!("{s},{v}")))?;
                report.output(&path);
            }
            report.config = json!({"method": method.to_string(), "grid": grid});
            report.result = json!({"s_opt": best.0, "objective": best.1});
        }
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let seed = cfg.seed(a.seed, "sweep")?;
    let data = targets_only(report.stage("load", || load(&a.data))?)?;
    let grid = cfg.grid(&a.grid, SweepGrid::default_2d())?;
    let schedule = cfg.schedule(&a.schedule, data.n(), seed)?;
    let method = match a.method {
        SweepMethod::Cv => KernelMethod::Cv,
        SweepMethod::Dfn => KernelMethod::Dfn,
    };
    let repeats = a.repeats.or(cfg.repeats).unwrap_or(DEFAULT_REPEATS);
    let mut sc = RandomizedSweepConfig::new(repeats, schedule, method, grid);
    sc.with_replacement = !a.without_replacement;
    let out = report.stage("sweep", || randomized_sweep(&data, &sc))?;
    if let Some(prefix) = &a.out_prefix {
        let stats = with_suffix(prefix, "_stats.csv");
        let draws = with_suffix(prefix, "_draws.csv");
        out.write_csv(&stats)?;
        out.write_draws_csv(&draws)?;
        report.output(&stats);
        report.output(&draws);
    }
    report.config = json!({"sweep": sc});
    report.result = json!({
        "sizes": out.sizes.iter().map(|z| json!({"n": z.n, "mean": z.mean, "variance": z.variance})).collect::<Vec<_>>(),
    });
    Ok(())
}

pub fn f1_sweep_cmd(a: &F1SweepArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let label = LabelColumn::new(&a.label_column, &a.target);
    let (train, score) = report.stage("load", || -> Result<_, CliError> {
        let train = match load_csv(&a.train, Some(&label)) {
            Ok(d) => d.filter_label(Label::Target)?,
            // training files without the label column are all target rows
            Err(svddbw_core::Error::Csv { .. }) => load_csv(&a.train, None)?,
            Err(e) => return Err(e.into()),
        };
        Ok((train, load_csv(&a.score, Some(&label))?))
    })?;
    let grid = cfg.grid(&a.grid, SweepGrid::default_2d())?;
    let f = cfg.f(a.f);
    let curve = report.stage("f1 sweep", || f1_sweep(&train, &score, &grid, f))?;
    if let Some(out) = &a.out {
        curve.write_csv(out)?;
        report.output(out);
    }
    report.config = json!({"grid": grid, "f": f, "train_rows": train.n(), "score_rows": score.n()});
    report.result = json!({"best_s": curve.best_s, "best_f1": curve.f1_at(curve.best_s)});
    Ok(())
}

pub fn timing(a: &TimingArgs, cfg: &FileConfig, report: &mut RunReport) -> Outcome {
    let seed = cfg.seed(a.seed, "timing")?;
    let data = targets_only(report.stage("load", || load(&a.data))?)?;
    let grid = cfg.grid(&a.grid, SweepGrid::default_2d())?;
    let schedule = cfg.schedule(&a.schedule, data.n(), seed)?;
    let f = cfg.f(a.f);
    let s_values = grid.values();

    let mut rows = Vec::new();
    for (n_idx, n) in schedule.values().into_iter().enumerate() {
        let tc = SamplingTrainConfig::new(n, seed);
        let start = Instant::now();
        s_values
            .par_iter()
            .map(|&s| {
                let mut r = rng::stream(seed, n_idx as u32, 0);
                sample_train_with(&data, s, f, &tc, &mut r).map(|_| ())
            })
            .collect::<Result<Vec<()>, _>>()?;
        let secs = start.elapsed().as_secs_f64();
        eprintln!("[timing] n = {n}: {secs:.3}s");
        rows.push(("sampling", n, secs));
    }
    let full = report.stage("full training", || {
        let start = Instant::now();
        train_curve(&data, &grid, f).map(|_| start.elapsed().as_secs_f64())
    })?;
    rows.push(("full", data.n(), full));

    write_table(&a.out, "kind,n_i,seconds", rows.iter().map(|(k, n, t)| format!("{k},{n},{t}")))?;
    report.output(&a.out);
    report.config = json!({"grid": grid, "schedule": schedule, "f": f});
    report.result = json!({
        "sampling": rows.iter().filter(|r| r.0 == "sampling").map(|r| json!({"n": r.1, "seconds": r.2})).collect::<Vec<_>>(),
        "full_seconds": full,
    });
    Ok(())
}
