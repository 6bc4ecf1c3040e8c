use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use slalom_core::amplitude::{Navigator, DEFAULT_HORIZON_PERIODS};
use slalom_core::contour::VALIDATION_SAMPLES;
use slalom_core::spectrum::DEFAULT_PX_MULTIPLIER;
use slalom_core::units::{LabParams, NEAR_IR_LAMBDA_UM, REFERENCE_INTENSITY_W_CM2};
use slalom_core::FieldParams;

#[derive(Debug, Parser)]
#[command(name = "slalom", version, about = "Coulomb-corrected strong-field ionization amplitudes and spectra")]
pub struct Cli {
    /// Worker threads for grid commands (default: logical cores).
    #[arg(long, global = true, env = "SLALOM_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ionization saddle time for one momentum.
    Saddle(PointArgs),
    /// Exact and linearized soft-recollision momenta with family ratios.
    ClassicalSr(ClassicalArgs),
    /// Complex closest-approach times with their gate rules.
    Tca(TcaArgs),
    /// Branch-cut map with traced cuts and gate topology.
    Cuts(CutsArgs),
    /// Navigated (or standard) contour with its continuity report.
    Contour(ContourArgs),
    /// Amplitude breakdown for one momentum.
    Amp(AmpArgs),
    /// Photoelectron momentum map on a (p_x, p_z) grid.
    Spectrum(SpectrumArgs),
    /// Yield over (wavelength, p_z) at fixed intensity, with classical loci.
    ScanWavelength(ScanArgs),
    /// Run the HTTP exploration service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    H,
    He,
    Ne,
    Ar,
    Kr,
    Xe,
}

impl Target {
    /// First ionization potential in eV.
    pub fn ip_ev(self) -> f64 {
        match self {
            Target::H => 13.598_434,
            Target::He => 24.587_389,
            Target::Ne => 21.564_54,
            Target::Ar => slalom_core::units::ARGON_IP_EV,
            Target::Kr => 13.999_605,
            Target::Xe => 12.129_84,
        }
    }
}

/// Target and laser in human units; converted to atomic units at the boundary.
#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Target atom; sets the ionization potential.
    #[arg(long, value_enum, ignore_case = true, default_value = "ar")]
    pub target: Target,
    /// Ionization potential in eV (overrides --target).
    #[arg(long)]
    pub ip_ev: Option<f64>,
    /// Peak intensity in W/cm².
    #[arg(long, default_value_t = REFERENCE_INTENSITY_W_CM2)]
    pub intensity: f64,
    /// Wavelength in µm.
    #[arg(long, conflicts_with = "gamma")]
    pub lambda_um: Option<f64>,
    /// Keldysh parameter; sets the wavelength at the given intensity.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Asymptotic charge of the parent ion.
    #[arg(long, default_value_t = 1.0)]
    pub charge: f64,
}

impl FieldArgs {
    pub fn ip(&self) -> f64 {
        self.ip_ev.unwrap_or_else(|| self.target.ip_ev())
    }

    pub fn lab(&self) -> slalom_core::Result<LabParams> {
        match self.gamma {
            Some(g) => LabParams::with_gamma(self.ip(), self.intensity, g),
            None => Ok(LabParams {
                ip_ev: self.ip(),
                intensity_w_cm2: self.intensity,
                lambda_um: self.lambda_um.unwrap_or(NEAR_IR_LAMBDA_UM),
            }),
        }
    }

    pub fn resolve(&self) -> slalom_core::Result<FieldParams> {
        self.lab()?.to_field()?.with_charge(self.charge)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Directory for artifacts and the run manifest (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MomentumArgs {
    /// Transverse momentum (a.u.).
    #[arg(long, allow_negative_numbers = true)]
    pub px: f64,
    /// Momentum along the polarization (a.u.).
    #[arg(long, allow_negative_numbers = true)]
    pub pz: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub p: MomentumArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Recollision indices: `1..6` (inclusive), `2,4,6` or `3`.
    #[arg(long, value_parser = parse_orders, default_value = "1..6")]
    pub n: Orders,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HorizonArgs {
    /// Detection time after t0, in laser periods.
    #[arg(long, default_value_t = DEFAULT_HORIZON_PERIODS)]
    pub horizon_periods: f64,
}

/// Complex-time window in units of laser phase: `ωt` on both axes.
#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Lower edge of Re ωt.
    #[arg(long, allow_negative_numbers = true, requires_all = ["phase_max", "im_min", "im_max"])]
    pub phase_min: Option<f64>,
    /// Upper edge of Re ωt.
    #[arg(long, allow_negative_numbers = true)]
    pub phase_max: Option<f64>,
    /// Lower edge of Im ωt.
    #[arg(long, allow_negative_numbers = true)]
    pub im_min: Option<f64>,
    /// Upper edge of Im ωt.
    #[arg(long, allow_negative_numbers = true)]
    pub im_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TcaArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CutsArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Distance-field columns along Re t.
    #[arg(long, default_value_t = 300)]
    pub nx: usize,
    /// Distance-field rows along Im t.
    #[arg(long, default_value_t = 200)]
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NavigatorArg {
    Auto,
    Standard,
}

impl NavigatorArg {
    pub fn navigator(self) -> Navigator {
        match self {
            NavigatorArg::Auto => Navigator::Auto,
            NavigatorArg::Standard => Navigator::Standard,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ContourArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Contour construction: branch-cut navigation or the straight standard path.
    #[arg(long, value_enum, default_value = "auto")]
    pub navigator: NavigatorArg,
    /// Samples of the continuity audit.
    #[arg(long, default_value_t = VALIDATION_SAMPLES)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct AmpArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Contour construction: branch-cut navigation or the straight standard path.
    #[arg(long, value_enum, default_value = "auto")]
    pub navigator: NavigatorArg,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Smallest transverse momentum (a.u.).
    #[arg(long, allow_negative_numbers = true, default_value_t = -0.0295)]
    pub px_min: f64,
    /// Largest transverse momentum (a.u.).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0295)]
    pub px_max: f64,
    /// Grid points along p_x.
    #[arg(long, default_value_t = 60)]
    pub px_n: usize,
    /// Smallest longitudinal momentum (a.u.).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.70)]
    pub pz_min: f64,
    /// Largest longitudinal momentum (a.u.).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.858)]
    pub pz_max: f64,
    /// Grid points along p_z.
    #[arg(long, default_value_t = 80)]
    pub pz_n: usize,
    /// Directory for spectrum.csv and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Target atom; sets the ionization potential.
    #[arg(long, value_enum, ignore_case = true, default_value = "ar")]
    pub target: Target,
    /// Ionization potential in eV (overrides --target).
    #[arg(long)]
    pub ip_ev: Option<f64>,
    /// Peak intensity in W/cm².
    #[arg(long, default_value_t = REFERENCE_INTENSITY_W_CM2)]
    pub intensity: f64,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Shortest wavelength in µm.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_min: f64,
    /// Longest wavelength in µm.
    #[arg(long, default_value_t = 4.0)]
    pub lambda_max: f64,
    /// Wavelengths in the scan.
    #[arg(long, default_value_t = 15)]
    pub lambda_n: usize,
    /// Smallest longitudinal momentum (a.u.).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0025)]
    pub pz_min: f64,
    /// Largest longitudinal momentum (a.u.).
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub pz_max: f64,
    /// Grid points along p_z.
    #[arg(long, default_value_t = 400)]
    pub pz_n: usize,
    /// Transverse offset at the first soft recollision, in units of 1/κ.
    #[arg(long, default_value_t = DEFAULT_PX_MULTIPLIER)]
    pub px_multiplier: f64,
    /// Classical loci to emit.
    #[arg(long, value_parser = parse_orders, default_value = "1..4")]
    pub orders: Orders,
    /// Smallest yield drop between neighbouring cells reported as a locus, in decades.
    #[arg(long, default_value_t = 1.0)]
    pub min_drop: f64,
    /// Output directory for the scan tables and run manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Listen port.
    #[arg(long, default_value_t = 8737)]
    pub port: u16,
    /// Per-request compute budget in milliseconds.
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    /// Distance-field resolution cap along Re t (at most 1200).
    #[arg(long, default_value_t = 1200)]
    pub max_nx: usize,
    /// Distance-field resolution cap along Im t (at most 800).
    #[arg(long, default_value_t = 800)]
    pub max_ny: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orders(pub Vec<u32>);

/// `a..b` and `a..=b` (both inclusive), `a,b,c`, or a single index; all ≥ 1.
pub fn parse_orders(s: &str) -> Result<Orders, String> {
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("bad index {v:?}: {e}"));
    let out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
        if b < a {
            return Err(format!("empty range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(parse).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) || out.len() > 64 {
        return Err(format!("indices must be 1..=64 entries starting at 1, got {s}"));
    }
    Ok(Orders(out))
}
