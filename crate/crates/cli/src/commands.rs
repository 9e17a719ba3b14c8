//! Command implementations.

use std::fs;
use std::path::Path;

use serde::Serialize;

use facerx_core::data::{
    gen_synthetic, oracle_f1, segment_face, CropGeometry, Dataset, RgbImage, SignalSpec,
};
use facerx_core::harness::{
    cross_validate, decode_prescription, evaluate, summary_table, threshold_sweep, train,
    write_report_table, FoldPlan, TrainConfig,
};
use facerx_core::models::{load_checkpoint, save_checkpoint, Model, ModelInput};
use facerx_core::{Error, Result, Rng};

use crate::config::{
    self, augment_params, resolve_arch, resolve_common, resolve_train, Cli, Command, FileConfig,
};

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let common = resolve_common(cli.seed, cli.threads, cli.out, &file);

    match cli.command {
        Command::GenSynthetic(args) => gen_synthetic_cmd(args, &file, &common),
        Command::Train(args) => train_cmd(args, &file, &common),
        Command::Evaluate(args) => evaluate_cmd(args, &file, &common),
        Command::Sweep(args) => sweep_cmd(args, &common),
        Command::Crossval(args) => crossval_cmd(args, &file, &common),
        Command::Predict(args) => predict_cmd(args, &file, &common),
        Command::Augment(args) => augment_cmd(args, &file, &common),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("cannot create output {}: {e}", dir.display())))
}

fn write_snapshot<T: Serialize>(out: &Path, snapshot: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(snapshot)
        .map_err(|e| Error::Data(format!("cannot encode config snapshot: {e}")))?;
    fs::write(out.join("config.json"), text)?;
    Ok(())
}

fn gen_synthetic_cmd(
    args: config::GenSyntheticArgs,
    file: &FileConfig,
    common: &config::Resolved,
) -> Result<()> {
    let count = args.count.or(file.count).unwrap_or(1000);
    let herbs = args.herbs.or(file.herbs).unwrap_or(20);
    let size = args.size.or(file.size).unwrap_or(64);
    let spec = match &args.signal_spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<SignalSpec>(&text)
                .map_err(|e| Error::Config(format!("bad signal spec {}: {e}", path.display())))?
        }
        None => SignalSpec::default_for(herbs)?,
    };
    let geometry = CropGeometry::default();

    ensure_out(&common.out)?;
    let dataset = gen_synthetic(count, herbs, size, &spec, &geometry, &Rng::new(common.seed))?;
    dataset.save(&common.out)?;

    // Decodability self-test: the labels must be recoverable from pixels
    // before anyone trains on them.
    let oracle = oracle_f1(&dataset, &spec, &geometry)?;

    #[derive(Serialize)]
    struct Provenance<'a> {
        seed: u64,
        count: usize,
        herbs: usize,
        size: usize,
        oracle_f1: f64,
        signal_spec: &'a SignalSpec,
    }
    let provenance = Provenance { seed: common.seed, count, herbs, size, oracle_f1: oracle, signal_spec: &spec };
    fs::write(
        common.out.join("provenance.json"),
        serde_json::to_string_pretty(&provenance)
            .map_err(|e| Error::Data(format!("cannot encode provenance: {e}")))?,
    )?;
    write_snapshot(&common.out, &provenance)?;

    println!(
        "generated {count} samples ({herbs} herbs, {size}x{size}) at {}; pixel-rule oracle f1 {oracle:.4}",
        common.out.display()
    );
    Ok(())
}

fn train_cmd(args: config::TrainArgs, file: &FileConfig, common: &config::Resolved) -> Result<()> {
    let arch = resolve_arch(args.arch.as_deref(), file)?;
    let train_config = resolve_train(&args.train, file, common.seed, common.threads);
    let factor = args.augment_factor.or(file.augment_factor).unwrap_or(1.0);
    let geometry = CropGeometry::default();

    ensure_out(&common.out)?;
    let mut dataset = Dataset::load(&args.data)?;
    if factor > 1.0 {
        dataset = dataset.expand(factor, &augment_params(), &Rng::new(common.seed ^ 0xa6))?;
    }

    let mut model =
        Model::build(arch, dataset.herb_count(), dataset.image_size, &mut Rng::new(common.seed))?;
    let history = train(&mut model, &dataset, &geometry, &train_config)?;
    history.save(&common.out.join("history.tsv"))?;
    save_checkpoint(&model, None, &common.out.join("model.ckpt"))?;

    #[derive(Serialize)]
    struct Snapshot<'a> {
        command: &'static str,
        data: &'a Path,
        architecture: String,
        augment_factor: f64,
        train: &'a TrainConfig,
        seed: u64,
        threads: usize,
    }
    write_snapshot(
        &common.out,
        &Snapshot {
            command: "train",
            data: &args.data,
            architecture: arch.to_string(),
            augment_factor: factor,
            train: &train_config,
            seed: common.seed,
            threads: common.threads,
        },
    )?;

    println!(
        "trained {arch} for {} epochs (best {}, early stop {}); checkpoint at {}",
        history.epochs.len(),
        history.best_epoch,
        history.stopped_early,
        common.out.join("model.ckpt").display()
    );
    Ok(())
}

fn evaluate_cmd(
    args: config::EvaluateArgs,
    file: &FileConfig,
    common: &config::Resolved,
) -> Result<()> {
    let threshold = args.threshold.or(file.threshold).unwrap_or(0.25);
    let geometry = CropGeometry::default();
    let dataset = Dataset::load(&args.data)?;
    let (model, _) = load_checkpoint(&args.checkpoint)?;
    check_compatible(&model, &dataset)?;

    ensure_out(&common.out)?;
    let report = evaluate(&model, &dataset, &geometry, threshold, common.threads)?;
    write_report_table(std::slice::from_ref(&report), &common.out.join("report.tsv"))?;

    println!(
        "threshold {:.2}: precision {:.4} recall {:.4} f1 {:.4} over {} samples",
        threshold,
        report.precision,
        report.recall,
        report.f1,
        report.per_sample.len()
    );
    Ok(())
}

fn sweep_cmd(args: config::SweepArgs, common: &config::Resolved) -> Result<()> {
    let thresholds = config::parse_threshold_range(&args.thresholds)?;
    let geometry = CropGeometry::default();
    let dataset = Dataset::load(&args.data)?;
    let (model, _) = load_checkpoint(&args.checkpoint)?;
    check_compatible(&model, &dataset)?;

    ensure_out(&common.out)?;
    let reports = threshold_sweep(&model, &dataset, &geometry, &thresholds, common.threads)?;
    write_report_table(&reports, &common.out.join("sweep.tsv"))?;

    println!("threshold\tprecision\trecall\tf1");
    for r in &reports {
        println!("{:.2}\t{:.4}\t{:.4}\t{:.4}", r.threshold, r.precision, r.recall, r.f1);
    }
    Ok(())
}

fn crossval_cmd(
    args: config::CrossvalArgs,
    file: &FileConfig,
    common: &config::Resolved,
) -> Result<()> {
    let arch = resolve_arch(args.arch.as_deref(), file)?;
    let train_config = resolve_train(&args.train, file, common.seed, common.threads);
    let factor = args.augment_factor.or(file.augment_factor).unwrap_or(1.0);
    let folds = args.folds.or(file.folds).unwrap_or(5);
    let geometry = CropGeometry::default();

    ensure_out(&common.out)?;
    let dataset = Dataset::load(&args.data)?;
    let mut plan_rng = Rng::new(common.seed);
    let plan = FoldPlan::new(
        dataset.len(),
        folds,
        args.test_size.or(file.test_size),
        &mut plan_rng,
    )?;
    let augment = (factor > 1.0).then(|| (factor, augment_params()));
    let summary = cross_validate(&dataset, &plan, arch, &geometry, &train_config, augment)?;

    for outcome in &summary.outcomes {
        outcome
            .history
            .save(&common.out.join(format!("fold{}_history.tsv", outcome.fold)))?;
    }
    let table = summary_table(std::slice::from_ref(&summary));
    fs::write(common.out.join("summary.tsv"), &table)?;

    #[derive(Serialize)]
    struct Snapshot<'a> {
        command: &'static str,
        data: &'a Path,
        architecture: String,
        augment_factor: f64,
        folds: usize,
        train: &'a TrainConfig,
        seed: u64,
    }
    write_snapshot(
        &common.out,
        &Snapshot {
            command: "crossval",
            data: &args.data,
            architecture: arch.to_string(),
            augment_factor: factor,
            folds,
            train: &train_config,
            seed: common.seed,
        },
    )?;

    print!("{table}");
    Ok(())
}

fn predict_cmd(
    args: config::PredictArgs,
    file: &FileConfig,
    common: &config::Resolved,
) -> Result<()> {
    let threshold = args.threshold.or(file.threshold).unwrap_or(0.25);
    let geometry = CropGeometry::default();
    let (model, _) = load_checkpoint(&args.checkpoint)?;

    let image = RgbImage::load(&args.image)?;
    let mut face = image.to_tensor();
    let s = model.input_size();
    if face.shape()[0] != s || face.shape()[1] != s {
        face = facerx_core::data::resize_bilinear(&face, s, s)?;
    }
    let crops = segment_face(&face, &geometry)?;
    let input = ModelInput { face, organs: crops.organs.clone(), regions: crops.regions.clone() };
    let probs = model.decision_probs(&input)?;

    let dictionary = match &args.dictionary {
        Some(path) => Some(facerx_core::data::HerbDictionary::load(path)?),
        None => None,
    };

    // Herbs above threshold, sorted by descending probability.
    let mut decoded: Vec<(usize, f32)> = probs
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(i, &p)| (i, p))
        .collect();
    decoded.sort_by(|a, b| b.1.total_cmp(&a.1));

    if let Some(dict) = &dictionary {
        if dict.len() != probs.len() {
            return Err(Error::Data(format!(
                "dictionary has {} herbs, model predicts {}",
                dict.len(),
                probs.len()
            )));
        }
        // Sanity: the decoded set equals threshold decoding over the dict.
        debug_assert_eq!(
            decode_prescription(&probs, threshold, dict)?.len(),
            decoded.len()
        );
    }

    if decoded.is_empty() {
        println!("no herb exceeds threshold {threshold:.2}");
    }
    for (index, p) in &decoded {
        match &dictionary {
            Some(dict) => println!("{}\t{p:.4}", dict.name(*index).unwrap()),
            None => println!("herb {index}\t{p:.4}"),
        }
    }

    if args.show_crops {
        ensure_out(&common.out)?;
        let names = ["left_eye", "right_eye", "nose", "mouth", "left_cheek", "right_cheek", "chin"];
        for (tensor, name) in crops.organs.iter().chain(crops.regions.iter()).zip(names) {
            RgbImage::from_tensor(tensor)?
                .save(&common.out.join(format!("crop_{name}.png")))?;
        }
        println!("crops written to {}", common.out.display());
    }
    let _ = file;
    Ok(())
}

fn augment_cmd(args: config::AugmentArgs, file: &FileConfig, common: &config::Resolved) -> Result<()> {
    let factor = args.factor.or(file.augment_factor).unwrap_or(1.91);
    let dataset = Dataset::load(&args.data)?;
    ensure_out(&common.out)?;
    let expanded = dataset.expand(factor, &augment_params(), &Rng::new(common.seed))?;
    expanded.save(&common.out)?;
    println!(
        "expanded {} samples to {} at {}",
        dataset.len(),
        expanded.len(),
        common.out.display()
    );
    Ok(())
}

fn check_compatible(model: &Model<f32>, dataset: &Dataset) -> Result<()> {
    if model.input_size() != dataset.image_size {
        return Err(Error::Checkpoint(format!(
            "checkpoint expects {0}x{0} faces, dataset is {1}x{1}",
            model.input_size(),
            dataset.image_size
        )));
    }
    if model.herb_count() != dataset.herb_count() {
        return Err(Error::Checkpoint(format!(
            "checkpoint predicts {} herbs, dataset has {}",
            model.herb_count(),
            dataset.herb_count()
        )));
    }
    Ok(())
}
