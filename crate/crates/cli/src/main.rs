use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mixsplat::control::{kind_totals, prune_pass};
use mixsplat::fit::{fit_with, mae, psnr, ssim, write_log_csv, FitConfig, GradientMode, LearningRates};
use mixsplat::init::{initialize_with_subsets, load_point_cloud, subset_histogram};
use mixsplat::io::{debug_sketch_svg, load_camera, load_image, load_scene, save_image, save_scene};
use mixsplat::model::{ColorMetric, Linkage};
use mixsplat::splat::{render, RenderMode};
use mixsplat::{Config, Error, Scene};

#[derive(Parser)]
#[command(name = "mixsplat", version, about = "Render, initialize and fit mixed-primitive splat scenes")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene from one camera to PPM/PGM (or PNG by extension).
    Render(RenderArgs),
    /// Seed a scene from a colored point cloud (PLY).
    Init(InitArgs),
    /// Fit a scene to one or more posed target images.
    Fit(FitArgs),
    /// Apply vertex and opacity pruning and print what changed.
    PruneReport(PruneArgs),
    /// Compare two images (MAE, PSNR, SSIM) and print JSON.
    Metrics(MetricsArgs),
    /// Write an SVG of the boundary sketch of every visible primitive.
    DebugSketch(SketchArgs),
}

#[derive(Args)]
struct Cutoff {
    /// Gaussian value at the truncation boundary.
    #[arg(long, default_value_t = 1.0 / 255.0)]
    cutoff: f64,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    #[arg(long, default_value = "rgb")]
    mode: RenderMode,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    cutoff: Cutoff,
}

#[derive(Args)]
struct InitArgs {
    /// Input point cloud.
    #[arg(long)]
    ply: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    omega_color: f64,
    #[arg(long, default_value = "average")]
    linkage: Linkage,
    #[arg(long, default_value = "redmean")]
    color_metric: ColorMetric,
    #[arg(long, default_value_t = 0)]
    sh_order: usize,
}

#[derive(Args)]
struct PruneThresholds {
    #[arg(long, default_value_t = 0.5)]
    omega_dist: f64,
    #[arg(long, default_value_t = 0.9)]
    omega_pear: f64,
    /// Primitives with lower opacity are removed.
    #[arg(long, default_value_t = 0.005)]
    opacity_prune: f64,
}

#[derive(Args)]
struct FitArgs {
    /// Starting scene.
    #[arg(long)]
    scene: PathBuf,
    /// Camera of each view; pair the n-th camera with the n-th target.
    #[arg(long, required = true)]
    camera: Vec<PathBuf>,
    #[arg(long, required = true)]
    target: Vec<PathBuf>,
    /// Fitted scene.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 2e-4)]
    lr_mu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Densify and prune every this many iterations.
    #[arg(long, default_value_t = 100)]
    interval: usize,
    #[arg(long, default_value_t = 2e-4)]
    densify_threshold: f64,
    #[arg(long)]
    no_densify: bool,
    #[arg(long)]
    no_prune: bool,
    #[arg(long, default_value = "auto")]
    gradient: GradientMode,
    /// CSV log: iteration, loss and primitive counts by kind.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write `<checkpoint-dir>/iter_<n>.json` every this many iterations.
    #[arg(long, requires = "checkpoint_dir")]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    #[command(flatten)]
    prune: PruneThresholds,
    #[command(flatten)]
    cutoff: Cutoff,
}

#[derive(Args)]
struct PruneArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Where to write the pruned scene.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    prune: PruneThresholds,
}

#[derive(Args)]
struct MetricsArgs {
    image_a: PathBuf,
    image_b: PathBuf,
}

#[derive(Args)]
struct SketchArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    cutoff: Cutoff,
}

/// 2: bad input, 3: file system, 4: numerical failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::DegenerateCovariance
        | Error::SingularConic
        | Error::InfiniteIntersection
        | Error::NotTangent(_)
        | Error::DegenerateSketch(_)
        | Error::Numerical(_) => 4,
        _ => 2,
    }
}

fn write_text(path: &Path, text: &str) -> mixsplat::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn counts(scene: &Scene) -> String {
    let (e, l, t) = kind_totals(scene);
    format!("{} primitives (ellipse {e}, line {l}, triangle {t})", scene.primitives.len())
}

fn prune_config(p: &PruneThresholds, cutoff: f64) -> Config {
    Config {
        omega_dist: p.omega_dist,
        omega_pear: p.omega_pear,
        opacity_prune: p.opacity_prune,
        cutoff,
        ..Config::default()
    }
}

fn cmd_render(a: &RenderArgs) -> mixsplat::Result<()> {
    let scene = load_scene(&a.scene)?;
    let cam = load_camera(&a.camera)?;
    let t = Instant::now();
    let mut img = render(&scene, &cam, a.mode, a.cutoff.cutoff)?;
    let elapsed = t.elapsed();
    if a.mode == RenderMode::Depth {
        for v in &mut img.data {
            *v /= cam.far;
        }
    }
    save_image(&a.out, &img)?;
    eprintln!("{}", counts(&scene));
    eprintln!("rendered {}x{} {:?} in {:.3} s", cam.width, cam.height, a.mode, elapsed.as_secs_f64());
    Ok(())
}

fn cmd_init(a: &InitArgs) -> mixsplat::Result<()> {
    let cloud = load_point_cloud(&a.ply)?;
    let config = Config {
        omega_color: a.omega_color,
        linkage: a.linkage,
        color_metric: a.color_metric,
        sh_order: a.sh_order,
        ..Config::default()
    };
    let (scene, subsets) = initialize_with_subsets(&cloud, &config)?;
    save_scene(&a.out, &scene)?;
    let h = subset_histogram(&subsets);
    eprintln!("{} points -> {} subsets", cloud.len(), subsets.len());
    eprintln!("subset sizes: {{1: {}, 2: {}, 3: {}}}", h[0], h[1], h[2]);
    eprintln!("{}", counts(&scene));
    Ok(())
}

fn cmd_fit(a: &FitArgs, threads: Option<usize>) -> mixsplat::Result<()> {
    if a.camera.len() != a.target.len() {
        return Err(Error::InvalidConfig(format!(
            "{} cameras but {} targets",
            a.camera.len(),
            a.target.len()
        )));
    }
    let scene = load_scene(&a.scene)?;
    let mut views = Vec::with_capacity(a.camera.len());
    for (c, t) in a.camera.iter().zip(&a.target) {
        let cam = load_camera(c)?;
        let img = load_image(t)?;
        if img.channels != 3 || img.width != cam.width || img.height != cam.height {
            return Err(Error::Image(format!(
                "{}: expected a {}x{} RGB image",
                t.display(),
                cam.width,
                cam.height
            )));
        }
        views.push((cam, img));
    }
    let cfg = FitConfig {
        iterations: a.iters,
        lr: LearningRates {
            position: a.lr_mu,
            ..LearningRates::default()
        },
        gradient: a.gradient,
        interval: a.interval,
        densify: !a.no_densify,
        prune: !a.no_prune,
        control: Config {
            densify_grad_threshold: a.densify_threshold,
            ..prune_config(&a.prune, a.cutoff.cutoff)
        },
        seed: a.seed,
        ..FitConfig::default()
    };
    if let Some(dir) = &a.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
    }
    eprintln!("fitting {} to {} view(s), {} iterations, {} thread(s)", counts(&scene), views.len(), a.iters, threads.unwrap_or_else(rayon::current_num_threads));
    let t = Instant::now();
    let result = fit_with(&scene, &views, &cfg, |rec, s| {
        if rec.iteration % 50 == 0 {
            log::info!("iter {} loss {:.6}", rec.iteration, rec.loss);
        }
        if let (Some(every), Some(dir)) = (a.checkpoint_every, &a.checkpoint_dir) {
            if every > 0 && (rec.iteration + 1) % every == 0 {
                save_scene(dir.join(format!("iter_{}.json", rec.iteration + 1)), s)?;
            }
        }
        Ok(())
    })?;
    save_scene(&a.out, &result.scene)?;
    if let Some(path) = &a.log {
        let mut buf = Vec::new();
        write_log_csv(&mut buf, &result.records).expect("writing to memory");
        std::fs::write(path, buf).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    let first = result.history.first().copied().unwrap_or(f64::NAN);
    eprintln!("loss {first:.6} -> {:.6} in {:.1} s", result.final_loss, t.elapsed().as_secs_f64());
    eprintln!("{}", counts(&result.scene));
    Ok(())
}

fn cmd_prune(a: &PruneArgs) -> mixsplat::Result<()> {
    let mut scene = load_scene(&a.scene)?;
    let config = prune_config(&a.prune, 1.0 / 255.0);
    config.validate()?;
    let before = counts(&scene);
    let report = prune_pass(&mut scene, &config);
    if let Some(out) = &a.out {
        save_scene(out, &scene)?;
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    eprintln!("before: {before}");
    eprintln!("after: {}", counts(&scene));
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> mixsplat::Result<()> {
    let x = load_image(&a.image_a)?;
    let y = load_image(&a.image_b)?;
    let p = psnr(&x, &y)?;
    let out = serde_json::json!({
        "mae": mae(&x, &y)?,
        "psnr": if p.is_finite() { serde_json::json!(p) } else { serde_json::json!("inf") },
        "ssim": ssim(&x, &y)?,
    });
    println!("{out}");
    Ok(())
}

fn cmd_sketch(a: &SketchArgs) -> mixsplat::Result<()> {
    let scene = load_scene(&a.scene)?;
    let cam = load_camera(&a.camera)?;
    let svg = debug_sketch_svg(&scene, &cam, a.cutoff.cutoff)?;
    write_text(&a.out, &svg)?;
    eprintln!("{}", counts(&scene));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MIXSPLAT_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Render(a) => cmd_render(a),
        Command::Init(a) => cmd_init(a),
        Command::Fit(a) => cmd_fit(a, cli.threads),
        Command::PruneReport(a) => cmd_prune(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::DebugSketch(a) => cmd_sketch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
