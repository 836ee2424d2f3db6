use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qus", version, about = "Speckle phantom simulation and envelope statistics")]
pub struct Cli {
    /// Print machine-readable results as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of QUSD samples and a manifest.
    Generate(GenerateArgs),
    /// Simulate a single frame.
    Simulate(SimulateArgs),
    /// Compute a sliding-window parametric image from an envelope.
    Stats(StatsArgs),
    /// Label windows of SNR maps against a reference phantom.
    Classify(ClassifyArgs),
    /// Measure the resolution cell from the envelope autocovariance.
    Rescell(RescellArgs),
    /// Time scatterer map, RF and envelope generation.
    Bench(BenchArgs),
}

/// `HxW` pair, e.g. `64x64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair(pub usize, pub usize);

pub fn parse_pair(s: &str) -> Result<Pair, String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    let (h, w) = (parse(h)?, parse(w)?);
    if h == 0 || w == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok(Pair(h, w))
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        Ok(v) => Err(format!("must be non-negative, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Total number of samples (train + test).
    #[arg(long, value_parser = count)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Samples held out for testing (default: count / 6).
    #[arg(long)]
    pub test_count: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    pub axial: usize,
    #[arg(long, default_value_t = 256)]
    pub lateral: usize,
    /// Distinct train mask shapes to cycle through (default: one per sample).
    #[arg(long)]
    pub train_masks: Option<usize>,
    /// Distinct test mask shapes to cycle through (default: one per sample).
    #[arg(long)]
    pub test_masks: Option<usize>,
    /// Omit the RF tensor from samples.
    #[arg(long)]
    pub no_rf: bool,
    /// Omit the Nakagami m map from samples.
    #[arg(long)]
    pub no_nakagami: bool,
}

#[derive(Debug, Args)]
pub struct PhysicsArgs {
    /// Centre frequency, MHz.
    #[arg(long, value_parser = positive)]
    pub fc: Option<f64>,
    /// Sampling frequency, MHz.
    #[arg(long, value_parser = positive)]
    pub fs: Option<f64>,
    /// Speed of sound, m/s.
    #[arg(long, value_parser = positive)]
    pub sound_speed: Option<f64>,
    /// Axial PSF standard deviation, mm.
    #[arg(long, value_parser = positive)]
    pub sigma_a: Option<f64>,
    /// Lateral PSF standard deviation, mm.
    #[arg(long, value_parser = positive)]
    pub sigma_l: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub f_number: Option<f64>,
    /// Pulse length in carrier cycles; sets the axial PSF support.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub pulses: Option<u32>,
    /// Noise standard deviation relative to the RF RMS.
    #[arg(long, value_parser = non_negative)]
    pub noise: Option<f64>,
    /// Lateral pixel pitch, mm.
    #[arg(long, value_parser = positive, default_value_t = 0.1)]
    pub lateral_pitch: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2048)]
    pub axial: usize,
    #[arg(long, default_value_t = 256)]
    pub lateral: usize,
    /// Homogeneous phantom with this many scatterers per resolution cell.
    /// Without it, random region masks and densities are drawn.
    #[arg(long, value_parser = non_negative)]
    pub density: Option<f64>,
    /// Mean scatterer amplitude of a homogeneous phantom.
    #[arg(long, value_parser = non_negative, default_value_t = 1.0)]
    pub mu_s: f64,
    /// Scatterer amplitude standard deviation of a homogeneous phantom.
    #[arg(long, value_parser = non_negative, default_value_t = 0.03)]
    pub sigma_s: f64,
    /// Draw unspecified imaging parameters from the dataset ranges instead
    /// of the fixed defaults.
    #[arg(long)]
    pub random_params: bool,
    #[arg(long, value_parser = positive, default_value_t = 50.0)]
    pub dynamic_range: f64,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Snr,
    Skewness,
    Nakagami,
    NakagamiOmega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CellSource {
    /// -6 dB widths of the PSF recorded with the frame.
    Psf,
    /// Autocovariance measurement of the envelope.
    Measured,
    /// Skip the window size check.
    None,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub estimator: Estimator,
    #[arg(long, value_parser = parse_pair)]
    pub window: Pair,
    /// Window step (default: a quarter of the window).
    #[arg(long, value_parser = parse_pair)]
    pub stride: Option<Pair>,
    /// Output path (default: `<input stem>.<estimator>.qusd` beside the input).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Minimum resolution cells per window.
    #[arg(long, value_parser = positive, default_value_t = 8.0)]
    pub min_cell_multiple: f64,
    /// Resolution cell used for the window size check.
    #[arg(long, value_enum, default_value_t = CellSource::Psf)]
    pub cell: CellSource,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Test SNR maps; several are averaged.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Reference SNR maps.
    #[arg(long = "ref", required = true, num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// Relative tolerance band around the reference SNR.
    #[arg(long, value_parser = non_negative, default_value_t = 0.03)]
    pub tolerance: f64,
    /// Output path (default: `<first input stem>.class.qusd`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RescellArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 2048)]
    pub axial: usize,
    #[arg(long, default_value_t = 256)]
    pub lateral: usize,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = non_negative, default_value_t = 12.0)]
    pub density: f64,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("64x32"), Ok(Pair(64, 32)));
        assert_eq!(parse_pair("8X8"), Ok(Pair(8, 8)));
        assert!(parse_pair("64").is_err());
        assert!(parse_pair("0x4").is_err());
        assert!(parse_pair("ax4").is_err());
    }
}
