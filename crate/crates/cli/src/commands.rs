//! One function per subcommand. Each writes its outputs plus a `.config`
//! record of the resolved flags, which `--config` accepts to repeat the run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anisosmooth::imaging::DEFAULT_IMAGE_RANGE_MULTIPLIER;
use anisosmooth::montecarlo::{AlcSelection, DEFAULT_RANGE_MULTIPLIER};
use anisosmooth::{
    fit as fit_spec, load_image, mese, rate_check, read_points_csv, run_monte_carlo, simulate_dataset,
    simulate_fire_video, Channel, Dataset, Dgp, DgpSpec, EstimatorKind, FireSpec, ImageFrame, ImageSmoother, McConfig,
    McEstimator, PipelineConfig, RateConfig, RateExponent,
};
use clap::{Args, ValueEnum};

use crate::opts::{join, name, push, Exponent, Fill, Kernel, List, Selection, SmoothingOpts};
use crate::Failure;

type Record = Vec<(String, String)>;

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn write_record(path: &Path, command: &str, record: &Record) -> Result<(), Failure> {
    let mut text = format!("# anisosmooth {} {command}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in record {
        text.push_str(&format!("{k}={v}\n"));
    }
    write_file(path, text)
}

/// `<path>.config` next to a file output.
fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Lc,
    Alc,
    Alct,
}

impl From<Estimator> for McEstimator {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Lc => McEstimator::Lc,
            Estimator::Alc => McEstimator::Alc,
            Estimator::Alct => McEstimator::Alct,
        }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// piecewise, continuous, continuous-jump[:J], constant[:c] or fire2d.
    #[arg(long)]
    pub dgp: Dgp,

    /// Sample size (one-dimensional processes).
    #[arg(long, default_value_t = 400)]
    pub n: usize,

    /// Noise SD. Defaults to 0.5, or √20 for fire2d.
    #[arg(long)]
    pub sigma: Option<f64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV, or output directory for fire2d.
    #[arg(long)]
    pub out: PathBuf,

    /// Number of fire2d frames.
    #[arg(long, default_value_t = 70)]
    pub frames: u32,

    /// Also write each fire2d frame as a grayscale PNG.
    #[arg(long)]
    pub png: bool,
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let mut rec = Record::new();
    push(&mut rec, "dgp", a.dgp);
    push(&mut rec, "seed", a.seed);
    push(&mut rec, "out", path_str(&a.out));
    if let Dgp::Fire2D { fire, .. } = a.dgp {
        if a.frames == 0 {
            return Err(Failure::usage("--frames must be at least 1"));
        }
        let sigma = a.sigma.unwrap_or_else(FireSpec::default_sigma);
        let fire = FireSpec {
            frames: a.frames,
            ..fire
        };
        let video = simulate_fire_video(&fire, sigma, a.seed)?;
        create_dir(&a.out)?;
        for (k, frame) in video.iter().enumerate() {
            let stem = format!("frame_{:03}", k + 1);
            frame.save(&a.out.join(format!("{stem}.csv")))?;
            if a.png {
                ImageFrame::gray(fire.width, fire.height, frame.y().to_vec())?
                    .save_png(&a.out.join(format!("{stem}.png")))?;
            }
        }
        push(&mut rec, "sigma", fmt_f64(sigma));
        push(&mut rec, "frames", a.frames);
        push(&mut rec, "png", a.png);
        write_record(&a.out.join("simulate.config"), "simulate", &rec)?;
        println!("wrote {} frames to {}", video.len(), a.out.display());
        return Ok(());
    }
    let sigma = a.sigma.unwrap_or(0.5);
    let data = simulate_dataset(&DgpSpec {
        dgp: a.dgp,
        n: a.n,
        sigma,
        seed: a.seed,
    })?;
    data.save(&a.out)?;
    push(&mut rec, "n", a.n);
    push(&mut rec, "sigma", fmt_f64(sigma));
    write_record(&sidecar(&a.out), "simulate", &rec)?;
    println!("wrote {} observations to {}", data.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV with columns x_1..x_q,y.
    #[arg(long)]
    pub data: PathBuf,

    /// CSV of target points (leading x_1..x_q columns). Defaults to the data points.
    #[arg(long)]
    pub targets: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Estimator::Lc)]
    pub estimator: Estimator,

    /// True process: the ALCT pilot, and the reference for the reported MESE.
    #[arg(long)]
    pub truth: Option<Dgp>,

    #[command(flatten)]
    pub smoothing: SmoothingOpts,

    /// How ALC and ALCT choose their domain bandwidth under auto selection.
    /// `scaled` fits them at the selected LC bandwidth times the inflation.
    #[arg(long, value_enum, default_value_t = Selection::Scaled)]
    pub alc_selection: Selection,

    /// Impute undefined targets from the nearest defined target.
    #[arg(long, value_enum)]
    pub fill: Option<Fill>,

    /// Output CSV with columns x_1..x_q,ghat,undefined.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn fit(a: &FitArgs) -> Result<(), Failure> {
    let data = Dataset::load(&a.data)?;
    let targets = match &a.targets {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Failure::io(p, e))?;
            read_points_csv(std::io::BufReader::new(f))?
        }
        None => data.x().clone(),
    };
    if a.estimator == Estimator::Alct && a.truth.is_none() {
        return Err(Failure::usage("--estimator alct needs --truth"));
    }
    if let Some(t) = a.truth {
        if t.dim() != data.dim() {
            return Err(Failure::usage(format!(
                "--truth {t} is {}-dimensional but the data are {}-dimensional",
                t.dim(),
                data.dim()
            )));
        }
    }
    let plan = a
        .smoothing
        .plan(data.dim(), DEFAULT_RANGE_MULTIPLIER)
        .map_err(Failure::usage)?;
    let pipeline = PipelineConfig {
        kernel: a.smoothing.kernel.into(),
        range_kernel: a.smoothing.range_kernel.into(),
        plan,
        alc_selection: a.alc_selection.into(),
        iterations: a.smoothing.iterations,
    };
    let h = pipeline.plan.resolve_domain(&data, pipeline.kernel)?;
    let spec = pipeline.spec_for(a.estimator.into(), a.truth, &data, &h)?;
    let result = fit_spec(&data, &targets, &spec)?;
    let filled = a.fill.map(|_| result.fill_nearest());
    result.save(&a.out, filled.as_deref())?;

    let mut rec = Record::new();
    push(&mut rec, "data", path_str(&a.data));
    if let Some(t) = &a.targets {
        push(&mut rec, "targets", path_str(t));
    }
    push(&mut rec, "estimator", name(a.estimator));
    if let Some(t) = a.truth {
        push(&mut rec, "truth", t);
    }
    a.smoothing.record(&mut rec);
    push(&mut rec, "alc-selection", name(a.alc_selection));
    if a.fill.is_some() {
        push(&mut rec, "fill", "nearest");
    }
    push(&mut rec, "out", path_str(&a.out));
    write_record(&sidecar(&a.out), "fit", &rec)?;

    println!("estimator: {}", McEstimator::from(a.estimator));
    println!("selected bandwidth: {}", join(&h));
    if spec.kind == EstimatorKind::Alc {
        println!("domain bandwidth: {}", join(&spec.domain));
        if let Some(r) = result.range_bandwidth() {
            println!("range bandwidth: {}", fmt_f64(r));
        }
    }
    println!("undefined targets: {} of {}", result.undefined_count(), result.len());
    if let Some(t) = a.truth {
        let truth: Vec<f64> = targets.rows().map(|x| t.value(x)).collect();
        let m = match &filled {
            Some(v) => {
                let undefined: Vec<bool> = v.iter().map(|x| x.is_nan()).collect();
                mese(&truth, v, &undefined)?
            }
            None => mese(&truth, result.estimates(), result.undefined_mask())?,
        };
        println!("mese: {}", fmt_f64(m));
    }
    Ok(())
}

// ---------------------------------------------------------------- mc

#[derive(Debug, Args)]
pub struct McArgs {
    /// One-dimensional test process.
    #[arg(long, default_value = "piecewise")]
    pub dgp: Dgp,

    #[arg(long, default_value = "400,800,1600")]
    pub ns: List<usize>,

    #[arg(long, default_value = "0.1,0.5,1,2")]
    pub sigmas: List<f64>,

    #[arg(long, default_value_t = 125)]
    pub replicates: usize,

    #[arg(long, default_value = "lc,alc,alct")]
    pub estimators: List<McEstimator>,

    /// Base seed; every replicate's stream is derived from it.
    #[arg(long)]
    pub seed: u64,

    #[command(flatten)]
    pub smoothing: SmoothingOpts,

    /// How ALC and ALCT choose their domain bandwidth under auto selection.
    #[arg(long, value_enum, default_value_t = Selection::Selected)]
    pub alc_selection: Selection,

    /// Directory for mc.csv, mean.csv, sd.csv, mean.txt, sd.txt and mc.config.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Also write every replicate's MESE to replicates.csv.
    #[arg(long)]
    pub dump_replicates: bool,
}

pub fn mc(a: &McArgs) -> Result<(), Failure> {
    if a.dgp.dim() != 1 {
        return Err(Failure::usage("mc uses the one-dimensional processes"));
    }
    let plan = a.smoothing.plan(1, DEFAULT_RANGE_MULTIPLIER).map_err(Failure::usage)?;
    let cfg = McConfig {
        dgp: a.dgp,
        ns: a.ns.0.clone(),
        sigmas: a.sigmas.0.clone(),
        replicates: a.replicates,
        estimators: a.estimators.0.clone(),
        base_seed: a.seed,
        pipeline: PipelineConfig {
            kernel: a.smoothing.kernel.into(),
            range_kernel: a.smoothing.range_kernel.into(),
            plan,
            alc_selection: AlcSelection::from(a.alc_selection),
            iterations: a.smoothing.iterations,
        },
    };
    let table = run_monte_carlo(&cfg)?;

    create_dir(&a.out_dir)?;
    let csv = |file: &str, f: &dyn Fn(&mut Vec<u8>) -> anisosmooth::Result<()>| -> Result<(), Failure> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        write_file(&a.out_dir.join(file), buf)
    };
    csv("mc.csv", &|b| table.write_csv(b))?;
    csv("mean.csv", &|b| table.write_wide_csv(b, false))?;
    csv("sd.csv", &|b| table.write_wide_csv(b, true))?;
    if a.dump_replicates {
        csv("replicates.csv", &|b| table.write_replicates_csv(b))?;
    }
    let mean = table.render(false);
    write_file(&a.out_dir.join("mean.txt"), &mean)?;
    write_file(&a.out_dir.join("sd.txt"), table.render(true))?;

    let mut rec = Record::new();
    push(&mut rec, "dgp", a.dgp);
    push(&mut rec, "ns", &a.ns);
    push(&mut rec, "sigmas", &a.sigmas);
    push(&mut rec, "replicates", a.replicates);
    push(&mut rec, "estimators", &a.estimators);
    push(&mut rec, "seed", a.seed);
    a.smoothing.record(&mut rec);
    push(&mut rec, "alc-selection", name(a.alc_selection));
    push(&mut rec, "out-dir", path_str(&a.out_dir));
    push(&mut rec, "dump-replicates", a.dump_replicates);
    write_record(&a.out_dir.join("mc.config"), "mc", &rec)?;

    let failures: usize = table.rows.iter().map(|r| r.failures).sum();
    print!("{mean}");
    if failures > 0 {
        println!("{failures} estimator-replicate fits failed and were excluded (see mc.csv)");
    }
    std::io::stdout().flush().ok();
    Ok(())
}

// ---------------------------------------------------------------- smooth-image

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageEstimator {
    Lc,
    Alc,
}

#[derive(Debug, Args)]
pub struct SmoothImageArgs {
    /// PNG or binary PPM image.
    #[arg(long)]
    pub input: PathBuf,

    /// Output directory (default: the input's directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = ImageEstimator::Alc)]
    pub estimator: ImageEstimator,

    /// Channels to smooth; the others are copied through.
    #[arg(long, default_value = "r,g,b")]
    pub channels: List<Channel>,

    #[command(flatten)]
    pub smoothing: SmoothingOpts,

    #[arg(long, value_enum)]
    pub fill: Option<Fill>,

    /// Also write `<stem>.<channel>.csv` with smoothed values and residuals.
    #[arg(long)]
    pub csv: bool,
}

pub fn smooth_image(a: &SmoothImageArgs) -> Result<(), Failure> {
    let frame = load_image(&a.input)?;
    let plan = a
        .smoothing
        .plan(2, DEFAULT_IMAGE_RANGE_MULTIPLIER)
        .map_err(Failure::usage)?;
    let smoother = ImageSmoother {
        kind: match a.estimator {
            ImageEstimator::Lc => EstimatorKind::Lc,
            ImageEstimator::Alc => EstimatorKind::Alc,
        },
        kernel: a.smoothing.kernel.into(),
        range_kernel: a.smoothing.range_kernel.into(),
        plan,
        iterations: a.smoothing.iterations,
        fill_nearest: a.fill.is_some(),
    };
    let mut channels: Vec<Channel> = Vec::new();
    for c in &a.channels.0 {
        if !channels.contains(c) {
            channels.push(*c);
        }
    }
    let out = smoother.smooth(&frame, &channels)?;

    let dir = match &a.out_dir {
        Some(d) => d.clone(),
        None => a.input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    let stem = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    out.smoothed.save_png(&dir.join(format!("{stem}.smoothed.png")))?;
    out.residual.save_png(&dir.join(format!("{stem}.residual.png")))?;
    if a.csv {
        for (c, cs) in &out.channels {
            let path = dir.join(format!("{stem}.{}.csv", c.to_string().to_lowercase()));
            let mut text = String::from("x_1,x_2,smoothed,residual,undefined\n");
            for (i, (s, r)) in cs.smoothed.iter().zip(&cs.residuals).enumerate() {
                let (col, row) = (i % frame.width(), i / frame.width());
                text.push_str(&format!(
                    "{col},{row},{},{},{}\n",
                    fmt_f64(*s),
                    fmt_f64(*r),
                    u8::from(cs.undefined[i])
                ));
            }
            write_file(&path, text)?;
        }
    }

    let mut rec = Record::new();
    push(&mut rec, "input", path_str(&a.input));
    if let Some(d) = &a.out_dir {
        push(&mut rec, "out-dir", path_str(d));
    }
    push(&mut rec, "estimator", name(a.estimator));
    push(&mut rec, "channels", join(&channels));
    a.smoothing.record(&mut rec);
    if a.fill.is_some() {
        push(&mut rec, "fill", "nearest");
    }
    push(&mut rec, "csv", a.csv);
    write_record(&dir.join(format!("{stem}.smooth-image.config")), "smooth-image", &rec)?;

    for (c, cs) in &out.channels {
        let range = cs.range_bandwidth.map_or("-".to_string(), fmt_f64);
        let undefined = cs.undefined.iter().filter(|u| **u).count();
        println!(
            "channel {c}: domain bandwidth {} px, range bandwidth {range}, undefined pixels {undefined}",
            join(&cs.domain_bandwidth)
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- rate

#[derive(Debug, Args)]
pub struct RateArgs {
    /// One-dimensional test process.
    #[arg(long, default_value = "piecewise")]
    pub dgp: Dgp,

    #[arg(long, value_enum, default_value_t = Estimator::Alct)]
    pub estimator: Estimator,

    #[arg(long, value_enum, default_value_t = Kernel::Uniform)]
    pub kernel: Kernel,

    /// Constant c in h = c · n^(-1/(q+2)) or c · n^(-1/(q+4)). Default 1 or 0.2.
    #[arg(long, value_name = "C")]
    pub rate_rule: Option<f64>,

    /// Default: isotropic for lc, anisotropic otherwise.
    #[arg(long, value_enum)]
    pub rate_exponent: Option<Exponent>,

    /// Range bandwidth multiplier on the pilot SD.
    #[arg(long, default_value_t = DEFAULT_RANGE_MULTIPLIER)]
    pub range_multiplier: f64,

    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,

    #[arg(long, default_value_t = 50)]
    pub replicates: usize,

    #[arg(long, default_value = "400,1600,6400,25600")]
    pub ns: List<usize>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Optional CSV of `n,mean_mese`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rate-rule constants used when `--rate-rule` is omitted. The isotropic
/// constant is smaller so that the interior terms dominate the boundary bias
/// over the default sample sizes.
pub const DEFAULT_RATE_CONSTANT_ANISOTROPIC: f64 = 1.0;
pub const DEFAULT_RATE_CONSTANT_ISOTROPIC: f64 = 0.2;

pub fn rate(a: &RateArgs) -> Result<(), Failure> {
    if a.ns.0.len() < 3 {
        return Err(Failure::usage("rate needs at least three sample sizes"));
    }
    if a.dgp.dim() != 1 {
        return Err(Failure::usage("rate uses the one-dimensional processes"));
    }
    let exponent = a.rate_exponent.unwrap_or(match a.estimator {
        Estimator::Lc => Exponent::Isotropic,
        _ => Exponent::Anisotropic,
    });
    let c = a.rate_rule.unwrap_or(match exponent {
        Exponent::Anisotropic => DEFAULT_RATE_CONSTANT_ANISOTROPIC,
        Exponent::Isotropic => DEFAULT_RATE_CONSTANT_ISOTROPIC,
    });
    if !(c.is_finite() && c > 0.0) {
        return Err(Failure::usage("--rate-rule must be positive"));
    }
    let cfg = RateConfig {
        dgp: a.dgp,
        estimator: a.estimator.into(),
        kernel: a.kernel.into(),
        c,
        exponent: RateExponent::from(exponent),
        range_multiplier: a.range_multiplier,
        sigma: a.sigma,
        replicates: a.replicates,
        ns: a.ns.0.clone(),
        base_seed: a.seed,
    };
    let report = rate_check(&cfg)?;
    // MSE ~ h² (anisotropic, bias O(h)) or h⁴ (isotropic, bias O(h²)).
    let bias_order = match exponent {
        Exponent::Anisotropic => 2.0,
        Exponent::Isotropic => 4.0,
    };
    let theory = bias_order * RateExponent::from(exponent).exponent(1);
    for (n, m) in &report.per_n {
        println!("n={n} mean_mese={}", fmt_f64(*m));
    }
    println!("slope: {:.4} (theoretical {:.4})", report.slope, theory);

    if let Some(out) = &a.out {
        let mut text = String::from("n,mean_mese\n");
        for (n, m) in &report.per_n {
            text.push_str(&format!("{n},{}\n", fmt_f64(*m)));
        }
        write_file(out, text)?;
        let mut rec = Record::new();
        push(&mut rec, "dgp", a.dgp);
        push(&mut rec, "estimator", name(a.estimator));
        push(&mut rec, "kernel", name(a.kernel));
        push(&mut rec, "rate-rule", fmt_f64(c));
        push(&mut rec, "rate-exponent", name(exponent));
        push(&mut rec, "range-multiplier", fmt_f64(a.range_multiplier));
        push(&mut rec, "sigma", fmt_f64(a.sigma));
        push(&mut rec, "replicates", a.replicates);
        push(&mut rec, "ns", &a.ns);
        push(&mut rec, "seed", a.seed);
        push(&mut rec, "out", path_str(out));
        write_record(&sidecar(out), "rate", &rec)?;
    }
    Ok(())
}
