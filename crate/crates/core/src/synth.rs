//! Forward model of the measured detector spectrum: transduced thermal
//! frequency noise, the phase-modulation calibration tone rendered through
//! the analyzer filter, additive backgrounds and optional periodogram
//! scatter.
//!
//! Traces are single-sided in detector units: the detector power scale
//! (P_in² for direct, P_in·P_LO for homodyne detection) times dimensionless
//! transduction, per Hz.
//!
//! Random scatter uses one `ChaCha20Rng` stream per trace, seeded through
//! `SeedableRng::seed_from_u64` (PCG32 expansion of the 64-bit seed into the
//! 256-bit ChaCha key, nonce 0). Bins draw one `Gamma(n_avg, 1/n_avg)` variate
//! each, in ascending frequency order. A port that reproduces ChaCha20 and
//! the Marsaglia-Tsang gamma sampler of `rand_distr` reproduces the stream.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::physics::{s_ww_thermal, units, MechMode, ThermalForm};
use crate::specest::{convolve_tone, AnalyzerModel};
use crate::spectrum::{Sidedness, Spectrum, SpectrumUnit};
use crate::transduction::DetectionScheme;

/// Reference frequency of power-law backgrounds, Hz.
pub const POWER_LAW_REF_HZ: f64 = 1e6;

/// Largest phase-modulation depth accepted as linear.
pub const MAX_PHI0: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BackgroundTerm {
    /// Flat detection noise (shot noise), in trace units (signal²/Hz).
    White { level: f64 },
    /// Single-sided cavity frequency noise A·(f / 1 MHz)^p in rad²s⁻²/Hz,
    /// transduced like the mechanical signal.
    PowerLaw { amplitude: f64, exponent: f64 },
}

impl fmt::Display for BackgroundTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackgroundTerm::White { level } => write!(f, "white:{level:e}"),
            BackgroundTerm::PowerLaw { amplitude, exponent } => {
                write!(f, "power_law:{amplitude:e}:{exponent}")
            }
        }
    }
}

impl FromStr for BackgroundTerm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad number `{t}` in background `{s}`")))
        };
        let term = match parts.as_slice() {
            ["white", level] => BackgroundTerm::White { level: num(level)? },
            ["power_law", a] => BackgroundTerm::PowerLaw {
                amplitude: num(a)?,
                exponent: -1.0,
            },
            ["power_law", a, p] => BackgroundTerm::PowerLaw {
                amplitude: num(a)?,
                exponent: num(p)?,
            },
            _ => return Err(Error::Format(format!("unknown background `{s}`"))),
        };
        term.validate()?;
        Ok(term)
    }
}

impl BackgroundTerm {
    pub fn validate(&self) -> Result<()> {
        let (v, e) = match *self {
            BackgroundTerm::White { level } => (level, 0.0),
            BackgroundTerm::PowerLaw { amplitude, exponent } => (amplitude, exponent),
        };
        if !(v >= 0.0) || !e.is_finite() || !v.is_finite() {
            return Err(Error::Domain(format!("background `{self}` must be finite and >= 0")));
        }
        Ok(())
    }

    /// Parse a comma-separated list; `none` or empty gives no terms.
    pub fn parse_list(s: &str) -> Result<Vec<BackgroundTerm>> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Vec::new());
        }
        s.split(',').map(str::parse).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseRealization {
    #[default]
    None,
    /// Per-bin Gamma scatter of a power average over `n_avg` periodograms.
    Chi2 { seed: u64, n_avg: u32 },
}

/// Uniform frequency grid, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn centered(center: f64, span: f64, n_points: usize) -> Self {
        FrequencyGrid {
            start: center - span / 2.0,
            stop: center + span / 2.0,
            n_points,
        }
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.n_points)
            .map(|i| self.start + i as f64 * step)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 || !(self.start > 0.0) || !(self.stop > self.start) {
            return Err(Error::Domain(format!(
                "grid needs 0 < start < stop and >= 2 points (start {}, stop {}, n {})",
                self.start, self.stop, self.n_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub scheme: DetectionScheme,
    pub mode: MechMode,
    /// Input probe power, W.
    pub p_in: f64,
    /// Phase-modulation depth, rad.
    pub phi0: f64,
    /// Calibration-tone frequency, rad/s.
    pub omega_mod: f64,
    pub analyzer: AnalyzerModel,
    pub grid: FrequencyGrid,
    pub backgrounds: Vec<BackgroundTerm>,
    pub noise: NoiseRealization,
}

/// Tone offset below Ω_m used when none is configured: 20·max(Γ_m/2π, ENBW), Hz.
pub fn default_tone_offset(mode: &MechMode, analyzer: &AnalyzerModel) -> f64 {
    20.0 * units::ordinary(mode.gamma_m).max(analyzer.enbw)
}

impl SynthConfig {
    /// Check the configuration. Hard violations are errors; returned strings
    /// are warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.scheme.validate()?;
        self.mode.validate()?;
        self.grid.validate()?;
        for b in &self.backgrounds {
            b.validate()?;
        }
        if !(self.p_in > 0.0) {
            return Err(Error::Domain(format!("p_in must be > 0, got {}", self.p_in)));
        }
        if !(self.phi0 >= 0.0) {
            return Err(Error::Domain(format!("phi0 must be >= 0, got {}", self.phi0)));
        }
        if self.phi0 >= MAX_PHI0 {
            return Err(Error::Linearization {
                depth: self.phi0,
                limit: MAX_PHI0,
            });
        }
        if let NoiseRealization::Chi2 { n_avg: 0, .. } = self.noise {
            return Err(Error::Domain("n_avg must be >= 1".into()));
        }
        let f_mod = units::ordinary(self.omega_mod);
        if !(self.grid.start..=self.grid.stop).contains(&f_mod) {
            return Err(Error::Domain(format!(
                "tone at {f_mod} Hz lies outside the grid [{}, {}] Hz",
                self.grid.start, self.grid.stop
            )));
        }
        let mut warnings = Vec::new();
        let f_m = units::ordinary(self.mode.omega_m);
        let clearance = 3.0 * units::ordinary(self.mode.gamma_m).max(self.analyzer.enbw);
        if (f_mod - f_m).abs() < clearance {
            warnings.push(format!(
                "tone at {f_mod} Hz within {clearance} Hz of the mechanical peak; peak and tone overlap"
            ));
        }
        let flags = self.scheme.flags();
        if flags.degenerate {
            warnings.push("direct detection on resonance: K vanishes, no signal".into());
        }
        if flags.half_coupling_limit {
            warnings.push("homodyne transduction taken in its eta_c = 1/2, detuning = 0 limit".into());
        }
        if units::ordinary(self.mode.gamma_m) < 5.0 * self.analyzer.enbw {
            warnings.push(
                "ENBW not much narrower than the mechanical linewidth; the continuum is not filter-convolved".into(),
            );
        }
        Ok(warnings)
    }

    pub fn f_mod(&self) -> f64 {
        units::ordinary(self.omega_mod)
    }

    /// Mean-square weight of the tone in the trace, (φ₀²/2)·K(Ω_mod)·power scale.
    pub fn tone_weight(&self) -> f64 {
        self.scheme.power_scale(self.p_in) * 0.5 * self.phi0 * self.phi0 * self.scheme.k(self.omega_mod)
    }

    /// Single-sided frequency-noise density (rad²s⁻²/Hz) of everything that
    /// is transduced: thermal mechanics plus power-law backgrounds.
    pub fn frequency_noise(&self, f: f64) -> f64 {
        let omega = units::angular(f);
        let mech = 2.0 * s_ww_thermal(&self.mode, omega, ThermalForm::HighTemperature);
        let bg: f64 = self
            .backgrounds
            .iter()
            .map(|b| match *b {
                BackgroundTerm::PowerLaw { amplitude, exponent } => {
                    amplitude * (f / POWER_LAW_REF_HZ).powf(exponent)
                }
                BackgroundTerm::White { .. } => 0.0,
            })
            .sum();
        mech + bg
    }

    fn white_level(&self) -> f64 {
        self.backgrounds
            .iter()
            .map(|b| match *b {
                BackgroundTerm::White { level } => level,
                BackgroundTerm::PowerLaw { .. } => 0.0,
            })
            .sum()
    }

    fn describe(&self, s: Spectrum) -> Spectrum {
        let p = &self.scheme.params;
        let backgrounds = if self.backgrounds.is_empty() {
            "none".to_string()
        } else {
            self.backgrounds
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        s.with_meta("detection", self.scheme.kind.as_str())
            .with_meta("kappa_hz", units::ordinary(p.kappa))
            .with_meta("eta_c", p.eta_c)
            .with_meta("detuning_hz", units::ordinary(p.detuning))
            .with_meta("lo_power_ratio", self.scheme.lo_power_ratio)
            .with_meta("omega_m_hz", units::ordinary(self.mode.omega_m))
            .with_meta("gamma_m_hz", units::ordinary(self.mode.gamma_m))
            .with_meta("temperature_k", self.mode.temperature)
            .with_meta("g0_hz", units::ordinary(self.mode.g0()))
            .with_meta("p_in_w", self.p_in)
            .with_meta("phi0_rad", self.phi0)
            .with_meta("f_mod_hz", self.f_mod())
            .with_meta("window", self.analyzer.window)
            .with_meta("enbw_hz", self.analyzer.enbw)
            .with_meta("backgrounds", backgrounds)
    }
}

/// Synthesize the single-sided detector spectrum.
pub fn synth_trace(cfg: &SynthConfig) -> Result<Spectrum> {
    let warnings = cfg.validate()?;
    let freqs = cfg.grid.points();
    let scale = cfg.scheme.power_scale(cfg.p_in);
    let white = cfg.white_level();
    let values = freqs
        .iter()
        .map(|&f| {
            let omega = units::angular(f);
            scale * cfg.scheme.k(omega) / (omega * omega) * cfg.frequency_noise(f) + white
        })
        .collect();
    let clean = Spectrum::new(freqs, values, Sidedness::Single, SpectrumUnit::DetectorSignal)?;
    let mut trace = convolve_tone(&clean, cfg.f_mod(), cfg.tone_weight(), &cfg.analyzer)?;
    match cfg.noise {
        NoiseRealization::None => {
            trace = trace.with_meta("noise", "none");
        }
        NoiseRealization::Chi2 { seed, n_avg } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let n = n_avg as f64;
            let gamma = Gamma::new(n, 1.0 / n).map_err(|e| Error::Domain(e.to_string()))?;
            for v in trace.values.iter_mut() {
                *v *= gamma.sample(&mut rng);
            }
            trace = trace
                .with_meta("noise", "chi2")
                .with_meta("seed", seed)
                .with_meta("n_avg", n_avg);
        }
    }
    if !warnings.is_empty() {
        trace = trace.with_meta("warnings", warnings.join("; "));
    }
    Ok(cfg.describe(trace))
}

/// Frequency-noise view of a trace with its mask of bins where K vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyNoiseView {
    /// Single-sided S_ωω in rad²s⁻²/Hz; masked bins hold 0.
    pub spectrum: Spectrum,
    pub masked: Vec<bool>,
}

impl FrequencyNoiseView {
    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|m| **m).count()
    }

    /// The same view in Hz²/Hz (frequency noise of ν = ω/2π).
    pub fn in_hz2(&self) -> Spectrum {
        let mut s = self.spectrum.clone();
        for v in s.values.iter_mut() {
            *v = units::freq_noise_to_hz2(*v);
        }
        s.unit = SpectrumUnit::FrequencyNoiseHz;
        s
    }
}

/// Undo the transduction: trace·Ω²/(scale·K(Ω)), where `scale` is the detector
/// power scale (known in synthesis, tone-derived in analysis).
pub fn frequency_noise_view(
    trace: &Spectrum,
    scheme: &DetectionScheme,
    scale: f64,
) -> Result<FrequencyNoiseView> {
    if trace.sidedness != Sidedness::Single {
        return Err(Error::Domain("frequency-noise view needs a single-sided trace".into()));
    }
    let mut spectrum = trace.clone();
    spectrum.unit = SpectrumUnit::FrequencyNoiseAngular;
    let mut masked = vec![false; trace.len()];
    for (i, (&f, v)) in trace.freqs.iter().zip(spectrum.values.iter_mut()).enumerate() {
        let omega = units::angular(f);
        let k = scheme.k(omega);
        if !(k > 0.0) || !(omega > 0.0) {
            masked[i] = true;
            *v = 0.0;
        } else {
            *v *= omega * omega / (scale * k);
        }
    }
    let n_masked = masked.iter().filter(|m| **m).count();
    let spectrum = spectrum.with_meta("masked_bins", n_masked);
    Ok(FrequencyNoiseView { spectrum, masked })
}

/// The synthesized trace divided by the exact transduction.
pub fn synth_frequency_noise_view(cfg: &SynthConfig) -> Result<FrequencyNoiseView> {
    let trace = synth_trace(cfg)?;
    frequency_noise_view(&trace, &cfg.scheme, cfg.scheme.power_scale(cfg.p_in))
}

/// Homodyne or direct detection preset helper: the tone sits
/// `default_tone_offset` below Ω_m, and the grid spans `half_width` Hz around
/// the midpoint of mode and tone.
pub fn preset(
    scheme: DetectionScheme,
    mode: MechMode,
    analyzer: AnalyzerModel,
    half_width: f64,
    points_per_enbw: f64,
) -> SynthConfig {
    let f_m = units::ordinary(mode.omega_m);
    let f_mod = f_m - default_tone_offset(&mode, &analyzer);
    let center = 0.5 * (f_m + f_mod);
    let span = (f_m - f_mod) + 2.0 * half_width;
    let n_points = (span / analyzer.enbw * points_per_enbw).ceil() as usize + 1;
    SynthConfig {
        scheme,
        mode,
        p_in: 1e-3,
        phi0: 0.01,
        omega_mod: 2.0 * PI * f_mod,
        analyzer,
        grid: FrequencyGrid::centered(center, span, n_points),
        backgrounds: Vec::new(),
        noise: NoiseRealization::None,
    }
}

/// Whether K/Ω² changes by less than `tol` between tone and mode, the
/// condition under which the flat-K extraction is exact.
pub fn flat_k_holds(cfg: &SynthConfig, tol: f64) -> bool {
    let a = cfg.scheme.k(cfg.mode.omega_m) / cfg.mode.omega_m.powi(2);
    let b = cfg.scheme.k(cfg.omega_mod) / cfg.omega_mod.powi(2);
    ((a - b) / b).abs() < tol
}
