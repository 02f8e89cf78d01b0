//! `levelset`: extract objects with binary level-set evolutions, render
//! synthetic scenes, score masks, and serve the interactive API.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levelset_core::io::{
    load_image, parse_scene_file, parse_seed_file, read_mask, write_image, write_json, write_mask,
    write_report,
};
use levelset_core::synth::NOISE_ALGORITHM;
use levelset_core::{
    add_gaussian_noise, evaluate, render_scene, Evolution, EngineError, ModelKind, ParamOverrides,
};
use serde_json::json;

/// Exit status for a numerically unstable evolution.
const EXIT_INSTABILITY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "levelset", version, about = "Fast level-set object extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a level set from seed polygons and write the object mask.
    Extract(ExtractArgs),
    /// Render a synthetic scene and its ground truth.
    Synth(SynthArgs),
    /// Score a mask against ground truth.
    Eval(EvalArgs),
    /// Run the session HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// 8-bit grayscale or RGB PNG/PGM.
    #[arg(long)]
    image: PathBuf,
    /// Seed polygon file.
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long, default_value = "region")]
    model: ModelKind,
    /// Time step (default 15; 0.8 for cv).
    #[arg(long)]
    dt: Option<f64>,
    /// Edge-function pre-smoothing scale.
    #[arg(long)]
    sigma1: Option<f64>,
    /// Regularization scale.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Odd template size for both Gaussians.
    #[arg(long)]
    ts: Option<usize>,
    /// Binarize every N iterations; 0 never (default 1; 20 for cv).
    #[arg(long)]
    reinit_period: Option<usize>,
    #[arg(long)]
    reg_period: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Curvature weight (cv).
    #[arg(long)]
    mu: Option<f64>,
    /// Speed constant (zhang).
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    /// Output mask; PNG if the name ends in .png, PGM otherwise.
    #[arg(long)]
    out: PathBuf,
    /// Write the zero level curve of every checkpoint here.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long)]
    out_image: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    /// Directory served under `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Instability(EngineError),
    Other(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
        Command::Serve(a) => serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Instability(e)) => {
            eprintln!("error: {e}; try a time step of at most 25");
            ExitCode::from(EXIT_INSTABILITY)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn extract(a: ExtractArgs) -> Result<(), Failure> {
    let image = load_image(&a.image)?;
    let seeds = parse_seed_file(&a.seeds)?;
    let overrides = ParamOverrides {
        dt: a.dt,
        sigma1: a.sigma1,
        sigma2: a.sigma2,
        ts: a.ts,
        reinit_period: a.reinit_period,
        reg_period: a.reg_period,
        max_iters: a.max_iters,
        mu: a.mu,
        nu: a.nu,
        edge_scale: None,
    };
    let params = overrides.apply(a.model);
    for w in params.warnings() {
        eprintln!("warning: {w}");
    }
    let mut evo = Evolution::new(image, &seeds, params)?;
    if a.trace_dir.is_some() {
        evo = evo.with_trace();
    }
    match evo.advance(params.max_iters) {
        Ok(_) => {}
        Err(e @ EngineError::Instability { .. }) => return Err(Failure::Instability(e)),
        Err(e) => return Err(e.into()),
    }
    let result = evo.into_result();
    write_mask(&result.mask, &a.out)?;
    if let (Some(dir), Some(trace)) = (&a.trace_dir, &result.trace) {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for frame in trace {
            write_json(frame, &dir.join(format!("iter_{:06}.json", frame.iter)))?;
        }
    }
    if !result.converged {
        eprintln!(
            "warning: not converged after {} iterations; raise --max-iters or check the seeds",
            result.iterations
        );
    }
    if result.degenerate {
        eprintln!("warning: evolution stopped early because one region became empty or uniform");
    }
    println!(
        "model={} iterations={} converged={} degenerate={} object_sign={} object_pixels={} wall_time={:.4}s",
        a.model,
        result.iterations,
        result.converged,
        result.degenerate,
        result.object_sign.value(),
        result.mask.count(),
        result.wall_time
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let scene = parse_scene_file(&a.scene)?;
    let (clean, truth) = render_scene(&scene)?;
    let image = add_gaussian_noise(&clean, a.noise_sigma, a.rng_seed)?;
    write_image(&image, &a.out_image)?;
    write_mask(&truth, &a.out_truth)?;
    let meta = json!({
        "scene": scene,
        "noise_sigma": a.noise_sigma,
        "rng_seed": a.rng_seed,
        "noise_algorithm": NOISE_ALGORITHM,
    });
    write_json(&meta, &sidecar(&a.out_image))?;
    println!(
        "{}x{} scene, {} object pixels, noise sigma {}",
        image.width(),
        image.height(),
        truth.count(),
        a.noise_sigma
    );
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let mask = read_mask(&a.mask)?;
    let truth = read_mask(&a.truth)?;
    let report = evaluate(&mask, &truth)?;
    if let Some(path) = &a.out_report {
        write_report(&report, path)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let addr = SocketAddr::new(a.bind, a.port);
    let config = levelset_service::Config {
        static_dir: a.static_dir,
        ..Default::default()
    };
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(levelset_service::serve(addr, config))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn sidecar_appends_json() {
        assert_eq!(sidecar(Path::new("out/img.png")), PathBuf::from("out/img.png.json"));
    }

    #[test]
    fn extract_defaults_follow_the_model() {
        let cli = Cli::try_parse_from(["levelset", "extract", "--image", "i", "--seeds", "s", "--out", "o"]).unwrap();
        let Command::Extract(a) = cli.command else { panic!() };
        assert_eq!(a.model, ModelKind::Region);
        assert!(a.dt.is_none() && a.trace_dir.is_none());
    }
}
