//! Command-line front end. Every subcommand writes its report to the given
//! writer so the binary stays a thin dispatcher and tests can capture output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{calibrated_view, extract_g0_full, extract_g0_simple, measure_tone, Method, ModeHint};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::oracle_equivalence;
use crate::fit::BackgroundModel;
use crate::modeshift::{fabry_perot, freq_shift_linearized, g_from_shift, wgm_ring, Preset, FABRY_PEROT_CELLS, WGM_RING_CELLS};
use crate::physics::units;
use crate::spectrum::Spectrum;
use crate::synth::{synth_frequency_noise_view, synth_trace};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Keys analysis may take from trace metadata.
pub const ANALYSIS_KEYS: &[&str] = &[
    "detection",
    "kappa_hz",
    "eta_c",
    "detuning_hz",
    "lo_power_ratio",
    "omega_m_hz",
    "temperature_k",
    "phi0_rad",
    "f_mod_hz",
    "window",
    "rbw_hz",
];
/// Largest oracle error `selftest` accepts.
pub const SELFTEST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "g0cal", version, about = "Frequency-noise calibration of the optomechanical coupling rate g0")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a detector spectrum from a run configuration.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the noiseless frequency-noise view (S_ww, single-sided).
        #[arg(long)]
        view_out: Option<PathBuf>,
        /// Write the view in Hz^2/Hz instead of (rad/s)^2/Hz.
        #[arg(long)]
        hz2: bool,
    },
    /// Extract g0 from a measured or synthesized trace.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Full)]
        method: MethodArg,
        /// Background model of the Lorentzian fit.
        #[arg(long, value_enum, default_value_t = FitBackground::Flat)]
        fit_background: FitBackground,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the calibrated frequency-noise spectrum S_nu (Hz^2/Hz).
        #[arg(long)]
        view_out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Tabulate the transduction function K(f) as CSV.
    Transduction {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e3)]
        f_start_hz: f64,
        #[arg(long, default_value_t = 1e11)]
        f_stop_hz: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Linearly spaced grid instead of logarithmic.
        #[arg(long)]
        linear: bool,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Coupling parameter G from a mode-shift preset.
    Modeshift {
        #[arg(long, value_enum)]
        preset: PresetArg,
        /// One resolution; default runs the whole refinement ladder.
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Compare closed-form transduction against the sideband field model.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Simple,
    Full,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Simple => Method::Simple,
            MethodArg::Full => Method::FullK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitBackground {
    Flat,
    /// Flat plus a power law with fitted exponent.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    FabryPerot,
    WgmRing,
}

/// Per-key overrides; they take precedence over the config file, which takes
/// precedence over trace metadata.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamFlags {
    #[arg(long)]
    pub detection: Option<String>,
    #[arg(long, alias = "kappa_hz")]
    pub kappa_hz: Option<String>,
    #[arg(long, alias = "eta_c")]
    pub eta_c: Option<String>,
    #[arg(long, alias = "detuning_hz")]
    pub detuning_hz: Option<String>,
    #[arg(long, alias = "lo_power_ratio")]
    pub lo_power_ratio: Option<String>,
    #[arg(long, alias = "omega_m_hz")]
    pub omega_m_hz: Option<String>,
    #[arg(long, alias = "temperature_k")]
    pub temperature_k: Option<String>,
    #[arg(long, alias = "phi0_rad")]
    pub phi0_rad: Option<String>,
    #[arg(long, alias = "f_mod_hz")]
    pub f_mod_hz: Option<String>,
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, alias = "rbw_hz")]
    pub rbw_hz: Option<String>,
}

impl ParamFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 11] {
        [
            ("detection", &self.detection),
            ("kappa_hz", &self.kappa_hz),
            ("eta_c", &self.eta_c),
            ("detuning_hz", &self.detuning_hz),
            ("lo_power_ratio", &self.lo_power_ratio),
            ("omega_m_hz", &self.omega_m_hz),
            ("temperature_k", &self.temperature_k),
            ("phi0_rad", &self.phi0_rad),
            ("f_mod_hz", &self.f_mod_hz),
            ("window", &self.window),
            ("rbw_hz", &self.rbw_hz),
        ]
    }

    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        for (k, v) in self.pairs() {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth {
            config,
            out: path,
            view_out,
            hz2,
        } => cmd_synth(&config, &path, view_out.as_deref(), hz2, out),
        Command::Analyze {
            trace,
            config,
            method,
            fit_background,
            out: report_path,
            view_out,
            params,
        } => cmd_analyze(
            &trace,
            config.as_deref(),
            method.into(),
            fit_background,
            &params,
            report_path.as_deref(),
            view_out.as_deref(),
            out,
        ),
        Command::Transduction {
            config,
            out: path,
            f_start_hz,
            f_stop_hz,
            points,
            linear,
            params,
        } => cmd_transduction(
            config.as_deref(),
            &params,
            (f_start_hz, f_stop_hz, points, linear),
            path.as_deref(),
            out,
        ),
        Command::Modeshift { preset, cells } => cmd_modeshift(preset, cells, out),
        Command::Selftest { samples, seed } => cmd_selftest(samples, seed, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_spectrum(s: &Spectrum, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    s.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Spectrum> {
    let f = File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Spectrum::read_csv(BufReader::new(f))
}

fn with_config_echo(mut s: Spectrum, cfg: &RunConfig) -> Spectrum {
    for (k, v) in cfg.echo() {
        s = s.with_meta(&format!("config.{k}"), v);
    }
    s.with_meta("tool", format!("g0cal {VERSION}"))
}

pub fn cmd_synth(config: &Path, path: &Path, view_out: Option<&Path>, hz2: bool, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let synth = cfg.synth_config()?;
    for w in synth.validate()? {
        writeln!(out, "warning = {w}")?;
    }
    let trace = with_config_echo(synth_trace(&synth)?, &cfg);
    write_spectrum(&trace, path)?;
    writeln!(out, "trace = {}", path.display())?;
    writeln!(out, "points = {}", trace.len())?;
    if let Some(vp) = view_out {
        let view = synth_frequency_noise_view(&synth)?;
        let s = if hz2 { view.in_hz2() } else { view.spectrum };
        write_spectrum(&with_config_echo(s, &cfg), vp)?;
        writeln!(out, "view = {}", vp.display())?;
    }
    Ok(())
}

/// Effective parameters for analysis: flags, then config file, then trace
/// metadata (`enbw_hz` there stands in for `rbw_hz`).
pub fn analysis_params(trace: &Spectrum, config: Option<&Path>, flags: &ParamFlags) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    flags.apply(&mut cfg)?;
    let mut meta: BTreeMap<String, String> = trace.meta.clone();
    if let Some(e) = meta.get("enbw_hz").cloned() {
        meta.entry("rbw_hz".into()).or_insert(e);
    }
    cfg.fill_from(&meta, ANALYSIS_KEYS);
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_analyze(
    trace_path: &Path,
    config: Option<&Path>,
    method: Method,
    fit_background: FitBackground,
    flags: &ParamFlags,
    report_path: Option<&Path>,
    view_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let trace = read_trace(trace_path)?;
    let cfg = analysis_params(&trace, config, flags)?;
    let f_mod: f64 = cfg.required("f_mod_hz")?;
    let phi0: f64 = cfg.required("phi0_rad")?;
    let analyzer = cfg.analyzer(None)?;
    let mut hint = ModeHint::new(cfg.temperature()?);
    hint.f_m_guess = cfg.parse_as("omega_m_hz")?;
    if fit_background == FitBackground::PowerLaw {
        hint.background = BackgroundModel::PowerLaw {
            exponent: -1.0,
            fit_exponent: true,
        };
    }
    let result = match method {
        Method::Simple => extract_g0_simple(&trace, f_mod, phi0, &analyzer, &hint)?,
        Method::FullK => extract_g0_full(&trace, f_mod, phi0, &analyzer, &cfg.scheme()?, &hint)?,
    };

    let mut text = String::new();
    writeln!(text, "input.trace = {}", trace_path.display()).expect("string write");
    writeln!(text, "input.method = {method}").expect("string write");
    for (k, v) in cfg.echo() {
        writeln!(text, "input.{k} = {v}").expect("string write");
    }
    for (k, v) in result.report() {
        writeln!(text, "{k} = {v}").expect("string write");
    }
    out.write_all(text.as_bytes())?;
    if let Some(p) = report_path {
        let mut w = create(p)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
    }
    if let Some(vp) = view_out {
        let scheme = cfg.scheme()?;
        let tone = measure_tone(&trace, f_mod, &analyzer)?;
        let view = calibrated_view(&trace, &tone, f_mod, phi0, &scheme)?;
        let s = view
            .in_hz2()
            .with_meta("method", method)
            .with_meta("g0_hz", units::ordinary(result.g0))
            .with_meta("tool", format!("g0cal {VERSION}"));
        write_spectrum(&s, vp)?;
    }
    Ok(())
}

pub fn cmd_transduction(
    config: Option<&Path>,
    flags: &ParamFlags,
    (f_start, f_stop, points, linear): (f64, f64, usize, bool),
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    flags.apply(&mut cfg)?;
    let scheme = cfg.scheme()?;
    if !(f_start > 0.0 && f_stop > f_start && points >= 2) {
        return Err(Error::Config {
            line: 0,
            key: "f_start_hz".into(),
            msg: "need 0 < f_start < f_stop and at least 2 points".into(),
        });
    }
    let mut text = String::new();
    let p = scheme.params;
    writeln!(text, "# detection = {}", scheme.kind.as_str()).expect("string write");
    writeln!(text, "# kappa_hz = {}", units::ordinary(p.kappa)).expect("string write");
    writeln!(text, "# eta_c = {}", p.eta_c).expect("string write");
    writeln!(text, "# detuning_hz = {}", units::ordinary(p.detuning)).expect("string write");
    writeln!(text, "# tool = g0cal {VERSION}").expect("string write");
    text.push_str("frequency_hz,k\n");
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let f = if linear {
            f_start + t * (f_stop - f_start)
        } else {
            f_start * (f_stop / f_start).powf(t)
        };
        writeln!(text, "{f:e},{:e}", scheme.k(units::angular(f))).expect("string write");
    }
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn modeshift_line(out: &mut dyn Write, p: &Preset, cells: usize) -> Result<f64> {
    let g = g_from_shift(&p.grid, p.probe_amplitude, p.omega_c)?;
    let g_lin = p.omega_c * freq_shift_linearized(&p.grid)?;
    let ratio = g / p.g_exact;
    writeln!(
        out,
        "{} cells = {cells} g = {g:e} g_linearized = {g_lin:e} g_exact = {:e} ratio = {ratio:.9} boundary_ratio = {:e}",
        p.name,
        p.g_exact,
        p.grid.boundary_ratio()
    )?;
    Ok(ratio)
}

pub fn cmd_modeshift(preset: PresetArg, cells: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let build = |n: usize| match preset {
        PresetArg::FabryPerot => fabry_perot(n),
        PresetArg::WgmRing => wgm_ring(n),
    };
    let ladder: Vec<usize> = match (cells, preset) {
        (Some(n), _) => vec![n],
        (None, PresetArg::FabryPerot) => FABRY_PEROT_CELLS.to_vec(),
        (None, PresetArg::WgmRing) => WGM_RING_CELLS.to_vec(),
    };
    let mut errors = Vec::new();
    for n in ladder {
        let p = build(n)?;
        errors.push((modeshift_line(out, &p, n)? - 1.0).abs());
    }
    if errors.len() > 1 {
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        writeln!(out, "monotone_convergence = {monotone}")?;
    }
    Ok(())
}

pub fn cmd_selftest(samples: usize, seed: u64, out: &mut dyn Write) -> Result<()> {
    let r = oracle_equivalence(samples, seed)?;
    let pass = r.max_error() < SELFTEST_TOLERANCE;
    writeln!(out, "samples = {}", r.samples)?;
    writeln!(out, "max_rel_direct = {:e}", r.max_rel_direct)?;
    writeln!(out, "max_rel_homodyne = {:e}", r.max_rel_homodyne)?;
    writeln!(out, "max_rel_mech_vs_phase = {:e}", r.max_rel_mech_vs_phase)?;
    writeln!(out, "max_lock_dc = {:e}", r.max_lock_dc)?;
    writeln!(out, "max_error = {:e}", r.max_error())?;
    writeln!(out, "result = {}", if pass { "pass" } else { "fail" })?;
    if pass {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "oracle error {:e} exceeds {SELFTEST_TOLERANCE:e}",
            r.max_error()
        )))
    }
}
