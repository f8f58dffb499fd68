//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use unet_af_core::degrade::{degrade, DegradationSpec};
use unet_af_core::metrics::{psnr, ssim, EquivReport};
use unet_af_core::model::{ModelConfig, Preset, Unet, WeightStore};
use unet_af_core::{Precision, Tensor};

use crate::bench::fps_bench;
use crate::config_file::{load_config, parse_preset};
use crate::error::{exit, Error, Result};
use crate::experiment::{
    ablation_csv, ablation_markdown, horizontal_sweep, par_adversarial, par_equiv, run_ablation, Protocol,
};
use crate::image_io::{crop_to_multiple, list_pngs, read_png, write_png, Depth};
use crate::report::{write_equiv_report, write_file};
use crate::selftest::run_selftest;
use crate::weights_io::{load_weights, save_weights};

#[derive(Debug, Parser)]
#[command(name = "unet-af", version, about = "Alias-free UNets and translation-equivariance measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep horizontal displacements and record the equivariance error.
    EquivSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5.0)]
        max_disp: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Degrade the inputs first; restoration PSNR is then scored against
        /// the clean images.
        #[arg(long, value_enum)]
        degrade: Option<Task>,
    },
    /// Worst-case restoration PSNR over a square displacement grid.
    Adversarial {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        max_disp: f64,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long, value_enum, default_value_t = Task::CircularDeblur)]
        degrade: Task,
    },
    /// One-axis-at-a-time ablation around the first model.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8.0)]
        max_disp: f64,
        /// Random displacements per variant.
        #[arg(long, default_value_t = 16)]
        displacements: usize,
    },
    /// Forward-pass throughput in images per second.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 3)]
        iters: usize,
    },
    /// Degrade images, reconstruct them and score the result.
    Restore {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Task::CircularDeblur)]
        task: Task,
    },
    /// Run the invariant suite; exits 1 if any check fails.
    Selftest {
        #[arg(long, value_parser = ["f32", "f64"], default_value = "f64")]
        precision: String,
    },
    /// Write seeded initial weights for a model to `--weights`.
    Init {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    CircularDeblur,
    ValidDeblur,
    Denoise,
    None,
}

impl Task {
    pub fn spec(self) -> Option<DegradationSpec> {
        match self {
            Task::CircularDeblur => Some(DegradationSpec::circular_deblur()),
            Task::ValidDeblur => Some(DegradationSpec::valid_deblur()),
            Task::Denoise => Some(DegradationSpec::denoise()),
            Task::None => None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model preset; repeat for side-by-side runs.
    #[arg(long = "preset", default_value = "af")]
    pub presets: Vec<String>,
    /// Key-value model file; `--precision` overrides it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = ["f32", "f64"])]
    pub precision: Option<String>,
    /// Output directory (must exist).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Directory of PNG inputs.
    #[arg(long, conflicts_with = "synthetic")]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Seeded synthetic inputs: image count and side.
    #[arg(long, num_args = 2, value_names = ["N", "SIZE"])]
    pub synthetic: Option<Vec<usize>>,
}

struct Model {
    name: String,
    config: ModelConfig,
}

/// A named input batch; PNG inputs come one image per batch.
struct Input {
    name: String,
    x: Tensor,
}

impl Common {
    fn models(&self) -> Result<Vec<Model>> {
        let precision = match self.precision.as_deref() {
            Some("f32") => Some(Precision::Single),
            Some(_) => Some(Precision::Double),
            None => None,
        };
        let mut models = Vec::new();
        if let Some(path) = &self.config {
            let base = ModelConfig::preset(parse_preset(&self.presets[0])?);
            let name = path.file_stem().map_or("config".into(), |s| s.to_string_lossy().into_owned());
            models.push(Model { name, config: load_config(path, base)? });
        } else {
            for p in &self.presets {
                let preset: Preset = parse_preset(p)?;
                if models.iter().any(|m: &Model| m.name == preset.name()) {
                    continue;
                }
                models.push(Model { name: preset.name().into(), config: ModelConfig::preset(preset) });
            }
        }
        if let Some(p) = precision {
            models.iter_mut().for_each(|m| m.config.precision = p);
        }
        for m in &models {
            m.config.validate()?;
        }
        Ok(models)
    }

    fn protocol(&self, default_images: usize, default_size: usize) -> Protocol {
        let (images, size) = match self.synthetic.as_deref() {
            Some(&[n, s]) => (n, s),
            _ => (default_images, default_size),
        };
        Protocol { seed: self.seed, images, size, ..Protocol::default() }
    }

    fn inputs(&self, config: &ModelConfig, protocol: &Protocol) -> Result<Vec<Input>> {
        let Some(dir) = &self.images else {
            return Ok(vec![Input { name: "synthetic".into(), x: protocol.images(config.in_channels)? }]);
        };
        let files = list_pngs(dir)?;
        if files.is_empty() {
            return Err(Error::format(dir, "no PNG files found"));
        }
        if config.in_channels != 3 {
            return Err(Error::Config(format!("PNG inputs are RGB; model takes {} channels", config.in_channels)));
        }
        files
            .iter()
            .map(|path| {
                let x = crop_to_multiple(&read_png(path)?, config.size_multiple(), None);
                let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                Ok(Input { name, x })
            })
            .collect()
    }

    fn network(&self, model: &Model, protocol: &Protocol, single_model: bool) -> Result<Unet> {
        let store: WeightStore = match &self.weights {
            Some(path) if single_model => load_weights(path)?,
            Some(_) => return Err(Error::Config("--weights needs exactly one model".into())),
            None => protocol.weights(&model.config)?,
        };
        Unet::new(model.config, &store).map_err(|e| match &self.weights {
            Some(path) => Error::format(path, e.to_string()),
            None => e.into(),
        })
    }

    fn check_out_dir(&self) -> Result<()> {
        if self.out.is_dir() {
            Ok(())
        } else {
            let e = std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist");
            Err(Error::io(&self.out, e))
        }
    }
}

fn degraded(x: &Tensor, task: Option<Task>, protocol: &Protocol) -> Result<Tensor> {
    match task.and_then(Task::spec) {
        Some(spec) => Ok(degrade(x, &spec, &mut protocol.noise_rng())?),
        None => Ok(x.clone()),
    }
}

fn fmt_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".into()
    } else {
        format!("{db:.2}")
    }
}

fn equiv_sweep(common: &Common, max_disp: f64, step: f64, task: Option<Task>, log: &mut dyn Write) -> Result<i32> {
    common.check_out_dir()?;
    let models = common.models()?;
    let protocol = common.protocol(1, 64);
    let gs = horizontal_sweep(max_disp, step);
    for model in &models {
        let net = common.network(model, &protocol, models.len() == 1)?;
        let f = |t: &Tensor| net.forward(t);
        let reports = common
            .inputs(&model.config, &protocol)?
            .iter()
            .map(|input| {
                let x = degraded(&input.x, task, &protocol)?;
                let reference = task.is_some().then_some(&input.x);
                par_equiv(&f, &x, &gs, reference)
            })
            .collect::<Result<Vec<EquivReport>>>()?;
        let report = EquivReport::merge(&reports);
        write_equiv_report(&common.out, &format!("{}_sweep", model.name), &report)?;
        let _ = writeln!(log, "{}: EQUIV {} ± {:.2} dB over {} displacements", model.name, fmt_db(report.mean_db), report.std_db, report.n);
    }
    Ok(exit::SUCCESS)
}

fn adversarial(common: &Common, max_disp: f64, step: f64, task: Task, log: &mut dyn Write) -> Result<i32> {
    common.check_out_dir()?;
    let models = common.models()?;
    let protocol = common.protocol(1, 64);
    for model in &models {
        let net = common.network(model, &protocol, models.len() == 1)?;
        let f = |t: &Tensor| net.forward(t);
        for input in common.inputs(&model.config, &protocol)? {
            let x = degraded(&input.x, Some(task), &protocol)?;
            let report = par_adversarial(&f, &x, &input.x, max_disp, step)?;
            let stem = if common.images.is_some() {
                format!("{}_{}_adversarial", model.name, input.name)
            } else {
                format!("{}_adversarial", model.name)
            };
            write_equiv_report(&common.out, &stem, &report)?;
            for level in &report.adversarial {
                let _ = writeln!(log, "{}: worst PSNR within {:.2} px: {} dB", model.name, level.max_disp, fmt_db(level.worst_db));
            }
        }
    }
    Ok(exit::SUCCESS)
}

fn ablate(common: &Common, max_disp: f64, displacements: usize, log: &mut dyn Write) -> Result<i32> {
    common.check_out_dir()?;
    if common.images.is_some() || common.weights.is_some() {
        return Err(Error::Config("ablate uses seeded synthetic images and weights only".into()));
    }
    let base = common.models()?.remove(0);
    let protocol = Protocol { displacements, max_disp, ..common.protocol(2, 64) };
    let rows = run_ablation(base.config, &protocol)?;
    write_file(common.out.join("ablation.csv"), &ablation_csv(&rows)?)?;
    let markdown = ablation_markdown(&rows);
    write_file(common.out.join("ablation.md"), markdown.as_bytes())?;
    let _ = write!(log, "{markdown}");
    Ok(exit::SUCCESS)
}

fn bench(common: &Common, warmup: usize, iters: usize, log: &mut dyn Write) -> Result<i32> {
    common.check_out_dir()?;
    let models = common.models()?;
    let protocol = common.protocol(1, 64);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "images", "height", "width", "fps"])?;
    for model in &models {
        let net = common.network(model, &protocol, models.len() == 1)?;
        for input in common.inputs(&model.config, &protocol)? {
            let fps = fps_bench(|t: &Tensor| net.forward(t), &input.x, warmup, iters)?;
            let s = input.x.shape();
            w.write_record([
                model.name.clone(),
                s.batch.to_string(),
                s.height.to_string(),
                s.width.to_string(),
                format!("{fps:.4}"),
            ])?;
            let _ = writeln!(log, "{}: {fps:.2} images/s at {}x{}", model.name, s.height, s.width);
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    write_file(common.out.join("bench.csv"), &bytes)?;
    Ok(exit::SUCCESS)
}

fn restore(common: &Common, task: Task, log: &mut dyn Write) -> Result<i32> {
    common.check_out_dir()?;
    if common.weights.is_none() {
        return Err(Error::Config("restore needs --weights".into()));
    }
    let models = common.models()?;
    if models.len() != 1 {
        return Err(Error::Config("restore takes exactly one model".into()));
    }
    let model = &models[0];
    let protocol = common.protocol(1, 64);
    let net = common.network(model, &protocol, true)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image", "sample", "degraded_psnr_db", "degraded_ssim", "restored_psnr_db", "restored_ssim", "restored_vs_input_psnr_db"])?;
    for input in common.inputs(&model.config, &protocol)? {
        let y = degraded(&input.x, Some(task), &protocol)?;
        let restored = net.forward(&y)?;
        for b in 0..input.x.shape().batch {
            let (clean, deg, out) = (input.x.sample_tensor(b), y.sample_tensor(b), restored.sample_tensor(b));
            let name = if input.x.shape().batch == 1 { input.name.clone() } else { format!("{}_{b}", input.name) };
            write_png(common.out.join(format!("{name}_restored.png")), &out, Depth::Sixteen)?;
            let scores = [
                psnr(&deg, &clean, 1.0)?,
                ssim(&deg, &clean)?,
                psnr(&out, &clean, 1.0)?,
                ssim(&out, &clean)?,
                psnr(&out, &deg, 1.0)?,
            ];
            w.write_record(
                [input.name.clone(), b.to_string()]
                    .into_iter()
                    .chain(scores.iter().map(|v| if v.is_infinite() { "inf".into() } else { format!("{v:.6}") })),
            )?;
            let _ = writeln!(log, "{name}: PSNR {} -> {} dB", fmt_db(scores[0]), fmt_db(scores[2]));
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    write_file(common.out.join("restore.csv"), &bytes)?;
    Ok(exit::SUCCESS)
}

fn selftest(precision: &str, log: &mut dyn Write) -> i32 {
    let precision = if precision == "f32" { Precision::Single } else { Precision::Double };
    let checks = run_selftest(precision);
    let mut failures = 0;
    for c in &checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        failures += usize::from(!c.passed);
        let _ = writeln!(log, "[{status}] {} {}", c.name, c.detail);
    }
    let _ = writeln!(log, "{} of {} checks passed", checks.len() - failures, checks.len());
    if failures == 0 {
        exit::SUCCESS
    } else {
        exit::INVARIANT_FAILURE
    }
}

fn init(common: &Common, log: &mut dyn Write) -> Result<i32> {
    let path: &Path = common
        .weights
        .as_deref()
        .ok_or_else(|| Error::Config("init needs --weights PATH for the output file".into()))?;
    let models = common.models()?;
    if models.len() != 1 {
        return Err(Error::Config("init takes exactly one model".into()));
    }
    let store = common.protocol(1, 64).weights(&models[0].config)?;
    save_weights(&store, path)?;
    let _ = writeln!(log, "{}: {} parameters written to {}", models[0].name, store.parameter_count(), path.display());
    Ok(exit::SUCCESS)
}

/// Runs one parsed command, logging progress to `log`, and returns the
/// exit code.
pub fn run(cli: &Cli, log: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::EquivSweep { common, max_disp, step, degrade } => equiv_sweep(common, *max_disp, *step, *degrade, log),
        Command::Adversarial { common, max_disp, step, degrade } => adversarial(common, *max_disp, *step, *degrade, log),
        Command::Ablate { common, max_disp, displacements } => ablate(common, *max_disp, *displacements, log),
        Command::Bench { common, warmup, iters } => bench(common, *warmup, *iters, log),
        Command::Restore { common, task } => restore(common, *task, log),
        Command::Selftest { precision } => Ok(selftest(precision, log)),
        Command::Init { common } => init(common, log),
    }
}

/// Parses `args` and runs the command; errors are reported on `err`.
pub fn main_with_args<I, T>(args: I, log: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return exit::USAGE;
            }
            let _ = write!(log, "{}", e.render());
            return exit::SUCCESS;
        }
    };
    match run(&cli, log) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
