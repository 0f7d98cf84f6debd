use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use dynabg::detection::{binarize, detect_traced, DetectionError};
use dynabg::evaluation::{
    accumulate, find_temporal_roi, metrics, synth_scene, write_metrics_csv, SceneConfig,
    VideoMetrics,
};
use dynabg::fixtures::{group_sparse_instance, relative_error, sparse_instance};
use dynabg::gmp::pool_sequence;
use dynabg::imaging::load_sequence;
use dynabg::segmentation::segment_video_traced;
use dynabg::solver::{solve_rpca, solve_sc_rpca, SolverError, TraceRow};
use dynabg::{DetectionConfig, FrameSequence, GroupPartition, MaskSequence};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BenchArgs, DetectArgs, EvalArgs, InputArgs, PoolArgs, SegmentArgs, Size, SynthArgs,
};
use crate::report::{write_json, write_report, Timings};

/// Frame directory and filename pattern for an input argument. A directory
/// with an `input/` subdirectory is read as a CDNET video.
fn resolve_input(input: &InputArgs) -> (PathBuf, String) {
    let cdnet = input.input.join("input");
    if cdnet.is_dir() {
        (cdnet, input.pattern.clone().unwrap_or_else(|| "in*".into()))
    } else {
        (
            input.input.clone(),
            input.pattern.clone().unwrap_or_else(|| "*".into()),
        )
    }
}

fn load_input(input: &InputArgs, timings: &mut Timings) -> anyhow::Result<FrameSequence> {
    let (dir, pattern) = resolve_input(input);
    let seq = timings.time("load", || load_sequence(&dir, &pattern, input.downscale))?;
    log::info!(
        "loaded {} frames of {}x{} from {}",
        seq.len(),
        seq.width(),
        seq.height(),
        dir.display()
    );
    Ok(seq)
}

fn input_json(input: &InputArgs, seq: &FrameSequence) -> serde_json::Value {
    let (dir, pattern) = resolve_input(input);
    json!({
        "dir": dir,
        "pattern": pattern,
        "downscale": input.downscale,
        "frames": seq.len(),
        "width": seq.width(),
        "height": seq.height(),
    })
}

fn write_partition(
    dir: &Path,
    partition: &GroupPartition,
    extra: serde_json::Value,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("partition.txt");
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    partition.write_text(&mut w)?;
    w.flush()?;
    let mut summary = serde_json::to_value(partition.stats())?;
    if let (Some(map), serde_json::Value::Object(more)) = (summary.as_object_mut(), extra) {
        map.extend(more);
    }
    write_json(&dir.join("partition.json"), &summary)?;
    Ok(())
}

pub fn pool(args: PoolArgs) -> anyhow::Result<()> {
    let config = args.pooling.config()?;
    let mut timings = Timings::start();
    let seq = load_input(&args.input, &mut timings)?;
    let pooled = timings.time("pool", || pool_sequence(&seq, &config));
    let written = pooled.save_numbered(&args.out, "pool", "png")?;
    write_report(
        &args.out,
        "pool_report.json",
        "pool",
        &json!({ "input": input_json(&args.input, &seq), "pooling": config }),
        &timings,
        json!({ "frames_written": written.len() }),
    )?;
    Ok(())
}

pub fn segment(args: SegmentArgs) -> anyhow::Result<()> {
    let pooling = args.pooling.config()?;
    let config = args.segmentation.config()?;
    let mut timings = Timings::start();
    let seq = load_input(&args.input, &mut timings)?;
    let stable = if args.no_pool {
        seq.clone()
    } else {
        timings.time("pool", || pool_sequence(&seq, &pooling))
    };
    let outcome = timings.time("segment", || segment_video_traced(&stable, &config))?;
    let shape = json!({
        "width": seq.width(),
        "height": seq.height(),
        "frames": seq.len(),
        "merges": outcome.group_counts.len().saturating_sub(1),
        "groups_before_merging": outcome.group_counts.first(),
    });
    write_partition(&args.out, &outcome.partition, shape)?;
    write_report(
        &args.out,
        "segment_report.json",
        "segment",
        &json!({
            "input": input_json(&args.input, &seq),
            "pooled": !args.no_pool,
            "pooling": pooling,
            "segmentation": config,
        }),
        &timings,
        json!({ "groups": outcome.partition.group_count() }),
    )?;
    println!("{} groups", outcome.partition.group_count());
    Ok(())
}

pub fn detect(args: DetectArgs) -> anyhow::Result<()> {
    let config = DetectionConfig {
        mode: args.mode,
        pooling: args.pooling.config()?,
        segmentation: args.segmentation.config()?,
        solver: args.solver.config()?,
        epsilon: args.epsilon,
        weight_mode: args.solver.weight_mode,
    };
    config.validate()?;
    let mut timings = Timings::start();
    let seq = load_input(&args.input, &mut timings)?;
    let partition = match &args.partition {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let p =
                GroupPartition::read_text(BufReader::new(file), seq.pixels_per_frame(), seq.len())
                    .with_context(|| format!("reading {}", path.display()))?;
            Some(p)
        }
        None => None,
    };

    let mut trace = Vec::new();
    let outcome = timings.time("detect", || {
        detect_traced(&seq, &config, partition, |s| {
            if args.trace.is_some() {
                trace.push(TraceRow::from(s));
            }
        })
    });
    let (masks, decomposition, converged_output) = match outcome {
        Ok(out) => (out.masks.clone(), out.decomposition.clone(), Some(out)),
        Err(DetectionError::Solver(SolverError::NotConverged { decomposition, .. })) => {
            let masks = binarize(&decomposition.e, config.epsilon, seq.width(), seq.height())?;
            (masks, *decomposition, None)
        }
        Err(e) => return Err(e.into()),
    };

    masks.save(&args.out)?;
    if let Some(path) = &args.trace {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        for row in &trace {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    let groups = converged_output
        .as_ref()
        .and_then(|o| o.partition.as_ref())
        .map(|p| p.group_count());
    if args.dump {
        if let Some(out) = &converged_output {
            out.solver_input
                .save_numbered(&args.out.join("solver_input"), "in", "png")?;
            if let Some(p) = &out.partition {
                write_partition(&args.out.join("partition"), p, json!({}))?;
            }
        }
    }

    let d = &decomposition;
    write_report(
        &args.out,
        "detect_report.json",
        "detect",
        &json!({
            "input": input_json(&args.input, &seq),
            "partition_file": args.partition,
            "detection": config,
        }),
        &timings,
        json!({
            "converged": d.converged,
            "iterations": d.iterations,
            "residual": d.final_residual,
            "objective": d.objective,
            "rank": d.rank,
            "lambda": d.lambda,
            "groups": groups,
            "foreground_pixels": masks.foreground_pixels(),
            "masks": masks.len(),
        }),
    )?;
    if !d.converged {
        bail!(
            "solver did not converge in {} iterations (relative residual {:.3e}); masks written to {}",
            d.iterations,
            d.final_residual,
            args.out.display()
        );
    }
    println!(
        "{} masks, {} iterations, residual {:.3e}, rank {}",
        masks.len(),
        d.iterations,
        d.final_residual,
        d.rank
    );
    Ok(())
}

fn video_name(args: &EvalArgs) -> String {
    if let Some(v) = &args.video {
        return v.clone();
    }
    let name_of = |p: &Path| {
        std::fs::canonicalize(p)
            .ok()
            .and_then(|c| c.file_name().map(|n| n.to_string_lossy().into_owned()))
    };
    args.groundtruth
        .parent()
        .and_then(|p| {
            name_of(if p.as_os_str().is_empty() {
                Path::new(".")
            } else {
                p
            })
        })
        .or_else(|| name_of(&args.masks))
        .unwrap_or_else(|| "video".into())
}

pub fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut timings = Timings::start();
    let masks = timings.time("load", || MaskSequence::load(&args.masks))?;
    let roi = find_temporal_roi(&args.groundtruth)?;
    let counts = timings.time("compare", || accumulate(&masks, &args.groundtruth, roi))?;
    let report = metrics(&counts);
    let row = VideoMetrics::new(video_name(&args), &report);

    let mut csv_text = Vec::new();
    write_metrics_csv(&mut csv_text, std::slice::from_ref(&row))?;
    std::io::stdout().write_all(&csv_text)?;

    let out = args.out.clone().unwrap_or_else(|| args.masks.clone());
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("metrics.csv"), &csv_text)?;
    write_json(
        &out.join("metrics.json"),
        &json!({ "video": row.video, "metrics": report }),
    )?;
    write_report(
        &out,
        "eval_report.json",
        "eval",
        &json!({
            "masks": args.masks,
            "groundtruth": args.groundtruth,
            "temporal_roi": roi,
        }),
        &timings,
        json!({ "frames": masks.len(), "metrics": row }),
    )?;
    Ok(())
}

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let config = SceneConfig {
        width: args.width,
        height: args.height,
        frames: args.frames,
        noise_sigma: args.noise,
        seed: args.seed,
        ..SceneConfig::with_kind(args.kind)
    };
    config.validate()?;
    let mut timings = Timings::start();
    let scene = timings.time("generate", || synth_scene(&config))?;
    scene
        .frames
        .save_numbered(&args.out.join("input"), "in", "png")?;
    let truth = FrameSequence::new(scene.ground_truth.frames().to_vec())?;
    truth.save_numbered(&args.out.join("groundtruth"), "gt", "png")?;
    write_report(
        &args.out,
        "synth_report.json",
        "synth",
        &config,
        &timings,
        json!({
            "frames": scene.frames.len(),
            "foreground_pixels": scene.ground_truth.foreground_pixels(),
        }),
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchRow {
    solver: &'static str,
    rows: usize,
    cols: usize,
    iterations: usize,
    seconds: f64,
    residual: f64,
    error_a: f64,
    error_e: f64,
    converged: bool,
}

pub fn bench(args: BenchArgs) -> anyhow::Result<()> {
    let config = args.solver.config()?;
    let timings = Timings::start();
    let mut rows = Vec::new();
    for &Size { rows: m, cols: n } in &args.sizes {
        if n < 2 || m < 2 {
            bail!("bench size must be at least 2x2 (got {m}x{n})");
        }
        let plain = sparse_instance(m, n, 2, 0.05, 50.0, args.seed);
        let t = Instant::now();
        let dec = match solve_rpca(&plain.d, &config) {
            Ok(d) => d,
            Err(SolverError::NotConverged { decomposition, .. }) => *decomposition,
            Err(e) => return Err(e.into()),
        };
        rows.push(BenchRow {
            solver: "rpca",
            rows: m,
            cols: n,
            iterations: dec.iterations,
            seconds: t.elapsed().as_secs_f64(),
            residual: dec.final_residual,
            error_a: relative_error(&dec.a, &plain.low_rank),
            error_e: relative_error(&dec.e, &plain.sparse),
            converged: dec.converged,
        });

        let groups = n.min(m * n / 4).max(3);
        let inst = group_sparse_instance(m, n, 2, groups, 3, 5.0, args.seed);
        let t = Instant::now();
        let dec = match solve_sc_rpca(&inst.d, &inst.partition, &config, args.solver.weight_mode) {
            Ok(d) => d,
            Err(SolverError::NotConverged { decomposition, .. }) => *decomposition,
            Err(e) => return Err(e.into()),
        };
        rows.push(BenchRow {
            solver: "sc-rpca",
            rows: m,
            cols: n,
            iterations: dec.iterations,
            seconds: t.elapsed().as_secs_f64(),
            residual: dec.final_residual,
            error_a: relative_error(&dec.a, &inst.low_rank),
            error_e: relative_error(&dec.e, &inst.sparse),
            converged: dec.converged,
        });
    }

    println!(
        "{:<8} {:>9} {:>6} {:>9} {:>10} {:>10} {:>10}",
        "solver", "size", "iters", "seconds", "residual", "err_A", "err_E"
    );
    for r in &rows {
        println!(
            "{:<8} {:>9} {:>6} {:>9.3} {:>10.2e} {:>10.2e} {:>10.2e}",
            r.solver,
            format!("{}x{}", r.rows, r.cols),
            r.iterations,
            r.seconds,
            r.residual,
            r.error_a,
            r.error_e
        );
    }
    write_report(
        &args.out,
        "bench_report.json",
        "bench",
        &json!({
            "seed": args.seed,
            "sizes": args.sizes,
            "solver": config,
            "weight_mode": args.solver.weight_mode,
        }),
        &timings,
        json!({ "rows": rows }),
    )?;
    Ok(())
}
