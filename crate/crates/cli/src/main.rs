use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use semihyp::path_metric::Bbox;
use semihyp::render::{Layer, RenderSpec, DEFAULT_MAX_ITER};
use semihyp::report::{self, ExperimentConfig};
use semihyp::Complex64;

/// Singular expanding metrics for semihyperbolic polynomials z^d + c.
#[derive(Parser)]
#[command(name = "semihyp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the critical orbit and summarize the postcritical cloud.
    Classify(Common),
    /// Expansion ratios and pullback shrinking along seeded backward orbits.
    Expansion(Common),
    /// Hölder fit and audits for the grid path metric.
    Holder(Common),
    /// External rays, John constants and rho-lengths.
    Rays {
        #[command(flatten)]
        common: Common,
        /// Angles in turns, each in [0, 1).
        #[arg(long, value_delimiter = ',', default_value = "0,0.5", allow_hyphen_values = true)]
        angles: Vec<f64>,
    },
    /// Write a P6 pixmap of one layer with optional ray overlays.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = LayerArg::EscapeTime)]
        layer: LayerArg,
        #[arg(long, default_value_t = 800)]
        width: usize,
        #[arg(long, default_value_t = 800)]
        height: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        center_re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        center_im: f64,
        /// Half the side of the square view.
        #[arg(long, default_value_t = 2.5)]
        half_width: f64,
        /// Ray angles to overlay, in turns.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rays: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    EscapeTime,
    DensityRho,
    DensitySigma,
    DistanceToP,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Self {
        match l {
            LayerArg::EscapeTime => Layer::EscapeTime,
            LayerArg::DensityRho => Layer::DensityRho,
            LayerArg::DensitySigma => Layer::DensitySigma,
            LayerArg::DistanceToP => Layer::DistanceToP,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Degree of z^d + c.
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    c_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c_im: Option<f64>,
    /// Critical-orbit iterates used for the cloud and classification.
    #[arg(long)]
    orbit_n: Option<usize>,
    /// Base disk radius for backward orbits.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    grid_res: Option<usize>,
    #[arg(long)]
    orbits: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SEMIHYP_OUT_DIR")]
    out: Option<PathBuf>,
    /// JSON file whose keys override the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { cfg.$f = v; })* };
        }
        take!(d, c_re, c_im, orbit_n, grid_res, orbits, depth, seed, out);
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            cfg = cfg.with_overlay_json(&text).with_context(|| format!("in config {}", path.display()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify(common) => print(&report::cmd_classify(&common.resolve()?)?),
        Command::Expansion(common) => print(&report::cmd_expansion(&common.resolve()?)?),
        Command::Holder(common) => print(&report::cmd_holder(&common.resolve()?)?),
        Command::Rays { common, angles } => {
            report::validate_angles(&angles).context("--angles")?;
            print(&report::cmd_rays(&common.resolve()?, &angles)?)
        }
        Command::Render { common, layer, width, height, center_re, center_im, half_width, rays, max_iter } => {
            let spec = RenderSpec {
                bbox: Bbox::square(Complex64::new(center_re, center_im), half_width).context("view box")?,
                width,
                height,
                layer: layer.into(),
                rays,
                max_iter,
            };
            print(&report::cmd_render(&common.resolve()?, &spec)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
