use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use infospec::ann::{one_hot_targets, train_repeated, MlpTopology, TrainConfig};
use infospec::eval::{evaluate_transform, TransformEvaluation};
use infospec::fit::{fit_apply, fit_apply_library, fit_train, hot_regions, FitModel};
use infospec::io;
use infospec::spectrum::vector_normalize;
use infospec::synth::gen_library;
use infospec::{ClassMultiplicities, SpectrumLibrary};
use serde_json::json;

use crate::config::{self, PipelineConfig, ThresholdSetting};
use crate::{AnnArgs, Cli, Command, EvalArgs, FitApplyArgs, FitCommand, FitOptions, FitTrainArgs, SynthArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad input, bad configuration or unreadable files.
    Usage(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<infospec::Error> for CliError {
    fn from(e: infospec::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<String> for CliError {
    fn from(e: String) -> Self {
        CliError::Usage(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Context {
    cfg: PipelineConfig,
    seed: Option<u64>,
    out: PathBuf,
}

impl Context {
    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn library_path(&self, flag: &Option<PathBuf>) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| self.cfg.paths.library.clone())
            .ok_or_else(|| CliError::Usage("no library given (use --library or paths.library)".into()))
    }

    fn model_path(&self, flag: &Option<PathBuf>) -> Option<PathBuf> {
        flag.clone().or_else(|| self.cfg.paths.model.clone())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = config::load(cli.config.as_deref())?;
    let out = cli.out.clone().or_else(|| cfg.paths.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))?;
    let ctx = Context { cfg, seed: cli.seed, out };
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Fit(FitCommand::Train(a)) => fit_train_cmd(&ctx, a),
        Command::Fit(FitCommand::Apply(a)) => fit_apply_cmd(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Ann(a) => ann(&ctx, a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    io::write_text(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn read_library(path: &Path) -> Result<SpectrumLibrary> {
    io::read_library(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<FitModel> {
    io::read_model(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn fit_params(ctx: &Context, opts: &FitOptions) -> Result<infospec::FitParams> {
    let mut fc = ctx.cfg.fit.clone();
    if let Some(b) = opts.bins {
        fc.n_bins = b;
    }
    if let Some(t) = &opts.threshold {
        fc.threshold = ThresholdSetting::parse(t)?;
    }
    if opts.no_suppress_solvent {
        fc.suppress_solvent = false;
    }
    Ok(fc.params()?)
}

fn synth(ctx: &Context, a: &SynthArgs) -> Result<()> {
    let sc = &ctx.cfg.synth;
    let seed = ctx
        .seed
        .or(sc.seed)
        .ok_or_else(|| CliError::Usage("synth needs a seed: pass --seed <u64> or set synth.seed".into()))?;
    let mult = ClassMultiplicities::new(a.multiplicities.clone().unwrap_or_else(|| sc.multiplicities.clone()))?;
    let mut grid = sc.grid;
    if let Some(n) = a.channels {
        grid.n_channels = n;
    }
    let lib = gen_library(mult.n_classes(), &mult, &sc.variation, &grid.grid()?, seed)?;
    let path = ctx.out_file("library.json");
    write_file(&path, &io::library_to_json(&lib)?)?;
    println!("{} spectra, {} classes -> {}", lib.len(), mult.n_classes(), path.display());
    Ok(())
}

fn fit_train_cmd(ctx: &Context, a: &FitTrainArgs) -> Result<()> {
    let lib = read_library(&ctx.library_path(&a.library)?)?;
    let model = fit_train(&lib, &fit_params(ctx, &a.fit)?)?;
    let path = ctx.out_file("model.json");
    write_file(&path, &io::model_to_json(&model)?)?;
    println!(
        "model: {} channels, {} bins, threshold {:.6e}, {} spectra -> {}",
        model.grid().n_channels(),
        model.n_bins(),
        model.max_threshold(),
        model.library_size(),
        path.display()
    );
    for r in hot_regions(&model, &lib, 0.02)?.iter().take(5) {
        println!("  hot region {:.4}..{:.4} ppm  mean information {:.3}", r.interval.lo, r.interval.hi, r.mean_information);
    }
    Ok(())
}

fn safe_name(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn fit_apply_cmd(ctx: &Context, a: &FitApplyArgs) -> Result<()> {
    let model_path =
        ctx.model_path(&a.model).ok_or_else(|| CliError::Usage("no model given (use --model or paths.model)".into()))?;
    let model = read_model(&model_path)?;
    if let Some(sp) = &a.spectrum {
        let s = io::read_spectrum(sp).map_err(|e| CliError::Usage(format!("{}: {e}", sp.display())))?;
        let fis = fit_apply(&model, &s)?;
        let stem = sp.file_stem().and_then(|s| s.to_str()).unwrap_or("spectrum");
        let path = ctx.out_file(&format!("{stem}.fis.csv"));
        io::write_information_csv(create(&path)?, &fis)?;
        println!("-> {}", path.display());
        return Ok(());
    }
    let lib_path = ctx.library_path(&a.library)?;
    let lib = read_library(&lib_path)?;
    let all = fit_apply_library(&model, &lib)?;
    let dir = ctx.out_file("fis");
    fs::create_dir_all(&dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    for (i, (fis, entry)) in all.iter().zip(lib.entries()).enumerate() {
        let path = dir.join(format!("{:03}_{}.csv", i, safe_name(&entry.label)));
        io::write_information_csv(create(&path)?, fis)?;
    }
    println!("{} information spectra -> {}", all.len(), dir.display());
    Ok(())
}

fn write_correlations(path: &Path, ev: &TransformEvaluation) -> Result<()> {
    let part = ev.partition.as_ref().ok_or_else(|| CliError::Internal("evaluation without partition".into()))?;
    let mut w = create(path)?;
    let io_err = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    writeln!(w, "set,i,j,correlation").map_err(io_err)?;
    for (set, pairs, values) in [("intra", &part.intra, &ev.intra_samples), ("inter", &part.inter, &ev.inter_samples)] {
        for (&(i, j), v) in pairs.iter().zip(values.iter()) {
            writeln!(w, "{set},{i},{j},{}", io::format_f64(*v)).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

fn eval(ctx: &Context, a: &EvalArgs) -> Result<()> {
    let lib = read_library(&ctx.library_path(&a.library)?)?;
    let mult = lib.multiplicities()?;
    let mut ec = ctx.cfg.eval.clone();
    if let Some(b) = a.bayes_bins {
        ec.bayes_bins = b;
    }
    let bayes = ec.bayes();

    let raw: Vec<&[f64]> = lib.spectra().map(|s| s.intensities()).collect();
    let raw_ev = evaluate_transform(&lib, &raw, &mult, &bayes)?;
    let model = match ctx.model_path(&a.model) {
        Some(p) => read_model(&p)?,
        None => fit_train(&lib, &fit_params(ctx, &a.fit)?)?,
    };
    let fis: Vec<Vec<f64>> = fit_apply_library(&model, &lib)?.into_iter().map(|f| f.info).collect();
    // Degenerate libraries can leave FIS with no variance; report that instead of failing.
    let fit_ev = match evaluate_transform(&lib, &fis, &mult, &bayes) {
        Ok(ev) => Some(ev),
        Err(e) => {
            eprintln!("warning: FIT spectra could not be evaluated: {e}");
            None
        }
    };

    let report = json!({
        "n_spectra": lib.len(),
        "n_classes": mult.n_classes(),
        "raw": raw_ev,
        "fit": fit_ev,
    });
    let path = ctx.out_file("eval_report.json");
    write_file(&path, &serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?)?;
    write_correlations(&ctx.out_file("correlations_raw.csv"), &raw_ev)?;
    if let Some(ev) = &fit_ev {
        write_correlations(&ctx.out_file("correlations_fit.csv"), ev)?;
    }

    let show = |name: &str, ev: &TransformEvaluation| {
        println!(
            "{name}: d_intra {:.4} d_inter {:.4} d_avg {:.5} bayes error {:.4} (threshold {:.4})",
            ev.distances.d_intra, ev.distances.d_inter, ev.distances.d_avg, ev.bayes.error_probability, ev.bayes.threshold
        )
    };
    show("raw", &raw_ev);
    if let Some(ev) = &fit_ev {
        show("fit", ev);
    }
    println!("-> {}", path.display());
    Ok(())
}

fn ann(ctx: &Context, a: &AnnArgs) -> Result<()> {
    let ac = &ctx.cfg.ann;
    let mut lib = read_library(&ctx.library_path(&a.library)?)?;
    if let Some(n) = a.channels.or(ac.channels) {
        let g = lib.grid();
        lib = lib.resampled(infospec::PpmGrid::new(g.start_ppm(), g.end_ppm(), n)?)?;
    }
    let seeds = match (&a.seeds, ctx.seed) {
        (Some(s), _) => s.clone(),
        // A master seed stands in for a run of consecutive seeds.
        (None, Some(s)) => (0..ac.seeds.len() as u64).map(|k| s.wrapping_add(k)).collect(),
        (None, None) => ac.seeds.clone(),
    };
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let cfg = TrainConfig {
        step_size: a.step_size.unwrap_or(ac.step_size),
        momentum: 0.0,
        max_epochs: a.epochs.unwrap_or(ac.max_epochs),
        target_max_bit_error: a.target.or(ac.target_max_bit_error),
        n_repeats: seeds.len(),
    };
    cfg.validate()?;

    let inputs: Vec<Vec<f64>> = match a.features {
        crate::Features::Raw => {
            lib.spectra().map(|s| vector_normalize(s).map(|v| v.into_intensities())).collect::<infospec::Result<_>>()?
        }
        crate::Features::Fit => {
            let model = fit_train(&lib, &fit_params(ctx, &a.fit)?)?;
            fit_apply_library(&model, &lib)?.into_iter().map(|f| f.info).collect()
        }
    };
    let classes = lib.class_indices();
    let n_classes = lib.class_labels().len();
    let targets = one_hot_targets(&classes, n_classes);
    let topo = MlpTopology::new(lib.grid().n_channels(), a.hidden.unwrap_or(ac.hidden), n_classes)?;
    let runs = train_repeated(topo, &inputs, &targets, &cfg, &seeds)?;

    let name = a.features.name();
    let curve_path = ctx.out_file(&format!("learning_curve_{name}.csv"));
    io::write_curve_csv(create(&curve_path)?, &runs.averaged)?;
    for ((net, _), seed) in runs.runs.iter().zip(&seeds) {
        write_file(&ctx.out_file(&format!("network_{name}_seed{seed}.json")), &io::network_to_json(net)?)?;
    }
    let reached = cfg
        .target_max_bit_error
        .and_then(|t| runs.averaged.epochs_to_reach(t).map(|e| format!(", target reached at epoch {e}")))
        .unwrap_or_default();
    println!(
        "{name}: {} epochs, final max bit error {:.4}, training accuracy {:.3}{reached} -> {}",
        runs.averaged.epochs(),
        runs.averaged.final_error(),
        runs.averaged.accuracy,
        curve_path.display()
    );
    Ok(())
}
