//! Inverse pipeline: quantify the calibration tone, fit the mechanical
//! Lorentzian and convert the ratio of their areas into g₀.
//!
//! Both methods compare areas in the same single-sided trace, so the detector
//! power scale and the overall normalization of K drop out. With A_t the tone
//! area and A_L the Lorentzian area,
//!
//! * simple: ⟨δω_c²⟩ = (φ₀²Ω_mod²/2)·A_L/A_t, exact when K(Ω)/Ω² is flat
//!   between tone and mode;
//! * full: the trace is first mapped to single-sided S_ωω with the known
//!   shape of K, then ⟨δω_c²⟩ is the fitted area there.
//!
//! In both cases g₀ = √(⟨δω_c²⟩ / 2⟨n_m⟩) with the high-temperature occupation.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::fit::{fit_lorentzian, fit_template, BackgroundModel, FitOptions, FitResult};
use crate::physics::{occupation, units, MechMode};
use crate::specest::AnalyzerModel;
use crate::spectrum::{Sidedness, Spectrum};
use crate::synth::{frequency_noise_view, FrequencyNoiseView};
use crate::transduction::DetectionScheme;

/// Half-width of the tone fit region, in ENBW.
pub const TONE_FIT_ENBW: f64 = 4.0;
/// Half-width of the region around the tone left out of the Lorentzian fit.
pub const TONE_MASK_ENBW: f64 = 5.0;
/// Half-width of the automatic Lorentzian fit window, in FWHM.
pub const FIT_HALF_WIDTH_FWHM: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Simple,
    FullK,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Simple => "simple",
            Method::FullK => "full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Method::Simple),
            "full" | "full_k" => Ok(Method::FullK),
            _ => Err(Error::Format(format!("unknown method `{s}` (simple|full)"))),
        }
    }
}

/// What the analysis is told about the mechanical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeHint {
    /// Bath temperature, K.
    pub temperature: f64,
    /// Rough mode frequency, Hz; the fit window is searched around it.
    pub f_m_guess: Option<f64>,
    /// Explicit fit window, Hz.
    pub window: Option<(f64, f64)>,
    pub background: BackgroundModel,
}

impl ModeHint {
    pub fn new(temperature: f64) -> Self {
        ModeHint {
            temperature,
            f_m_guess: None,
            window: None,
            background: BackgroundModel::Flat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneMeasurement {
    /// Background-subtracted displayed peak, trace units.
    pub peak_height: f64,
    /// peak_height·ENBW, the tone's mean-square weight.
    pub area: f64,
    pub area_stderr: f64,
    /// Local background level under the tone.
    pub background: f64,
}

/// Quantify the tone at `f_mod` by a least-squares fit of the analyzer
/// filter shape plus a quadratic local background within ±4 ENBW.
pub fn measure_tone(trace: &Spectrum, f_mod: f64, analyzer: &AnalyzerModel) -> Result<ToneMeasurement> {
    let half = TONE_FIT_ENBW * analyzer.enbw;
    let range = trace.index_range(f_mod - half, f_mod + half);
    let freqs = &trace.freqs[range.clone()];
    let values = &trace.values[range];
    if freqs.len() < 4 {
        return Err(Error::WeakTone(format!(
            "only {} grid points within ±{half} Hz of the tone at {f_mod} Hz",
            freqs.len()
        )));
    }
    let fit = fit_template(freqs, values, f_mod, |x| analyzer.filter(x))?;
    let peak_height = fit.amplitude * analyzer.filter(0.0);
    if !(peak_height > 0.0) || peak_height < 3.0 * fit.background.max(0.0) {
        return Err(Error::WeakTone(format!(
            "tone height {peak_height:e} at {f_mod} Hz below 3x local background {:e}",
            fit.background
        )));
    }
    Ok(ToneMeasurement {
        peak_height,
        area: peak_height * analyzer.enbw,
        area_stderr: fit.amplitude_stderr * analyzer.filter(0.0) * analyzer.enbw,
        background: fit.background,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub method: Method,
    /// Tone-derived detector-scale transduction at Ω_mod, 2A_t/φ₀².
    pub k_at_mod: f64,
    pub tone_area: f64,
    /// Fitted mode frequency and linewidth, Hz.
    pub f_m: f64,
    pub gamma_m_hz: f64,
    /// Lorentzian area in the fitted spectrum (trace or S_ωω view).
    pub lorentzian_area: f64,
    /// ⟨δω_c²⟩, rad²/s².
    pub delta_omega_sq: f64,
    pub n_m: f64,
    /// rad/s.
    pub g0: f64,
    pub g0_stderr: f64,
    pub reduced_chi2: f64,
    pub assumptions: Vec<String>,
    pub warnings: Vec<String>,
    pub fit: FitResult,
}

impl CalibrationResult {
    /// Flat `key = value` report lines, frequencies in Hz.
    pub fn report(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("method".to_string(), self.method.to_string()),
            ("g0_hz".into(), format!("{:e}", units::ordinary(self.g0))),
            ("g0_stderr_hz".into(), format!("{:e}", units::ordinary(self.g0_stderr))),
            (
                "delta_omega_sq_rad2_s2".into(),
                format!("{:e}", self.delta_omega_sq),
            ),
            (
                "delta_nu_rms_hz".into(),
                format!("{:e}", units::ordinary(self.delta_omega_sq.sqrt())),
            ),
            ("n_m".into(), format!("{:e}", self.n_m)),
            ("k_at_mod".into(), format!("{:e}", self.k_at_mod)),
            ("tone_area".into(), format!("{:e}", self.tone_area)),
            ("lorentzian_area".into(), format!("{:e}", self.lorentzian_area)),
            ("fit_center_hz".into(), format!("{:e}", self.f_m)),
            ("fit_fwhm_hz".into(), format!("{:e}", self.gamma_m_hz)),
            ("fit_reduced_chi2".into(), format!("{:e}", self.reduced_chi2)),
        ];
        for (i, a) in self.assumptions.iter().enumerate() {
            out.push((format!("assumption_{i}"), a.clone()));
        }
        for (i, w) in self.warnings.iter().enumerate() {
            out.push((format!("warning_{i}"), w.clone()));
        }
        out
    }
}

fn check_trace(trace: &Spectrum, phi0: f64, hint: &ModeHint) -> Result<()> {
    if trace.sidedness != Sidedness::Single {
        return Err(Error::Domain("analysis expects a single-sided trace".into()));
    }
    if !(phi0 > 0.0) {
        return Err(Error::Domain(format!("phi0 must be > 0, got {phi0}")));
    }
    if !(hint.temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be > 0, got {}",
            hint.temperature
        )));
    }
    Ok(())
}

/// Lorentzian fit with the tone region masked. Without an explicit window
/// the peak is located on the whole trace (or ±`FIT_HALF_WIDTH_FWHM` of the
/// guess), then refitted within ±`FIT_HALF_WIDTH_FWHM` FWHM of it.
fn fit_mode(spectrum: &Spectrum, f_mod: f64, analyzer: &AnalyzerModel, hint: &ModeHint) -> Result<FitResult> {
    let lo = spectrum.freqs[0];
    let hi = spectrum.freqs[spectrum.len() - 1];
    let mask = (
        f_mod - TONE_MASK_ENBW * analyzer.enbw,
        f_mod + TONE_MASK_ENBW * analyzer.enbw,
    );
    let mut opts = FitOptions::new(hint.window.unwrap_or((lo, hi)));
    opts.exclude.push(mask);
    opts.background = hint.background;
    if hint.window.is_some() {
        return fit_lorentzian(spectrum, &opts);
    }
    let first = fit_lorentzian(spectrum, &opts)?;
    let l = first.model.lorentzian;
    let center = hint.f_m_guess.map_or(l.center, |g| {
        if (g - l.center).abs() < 10.0 * l.fwhm {
            l.center
        } else {
            g
        }
    });
    let half = FIT_HALF_WIDTH_FWHM * l.fwhm;
    opts.window = ((center - half).max(lo), (center + half).min(hi));
    opts.initial = Some(first.model);
    fit_lorentzian(spectrum, &opts)
}

fn n_m_for(f_m: f64, temperature: f64) -> Result<f64> {
    let mode = MechMode::with_g0(units::angular(f_m), 1.0, temperature, 1.0)?;
    Ok(occupation(&mode)?.high_temperature)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    method: Method,
    tone: ToneMeasurement,
    phi0: f64,
    fit: FitResult,
    delta_omega_sq: f64,
    temperature: f64,
    mut assumptions: Vec<String>,
    mut warnings: Vec<String>,
    analyzer: &AnalyzerModel,
) -> Result<CalibrationResult> {
    let l = fit.model.lorentzian;
    let n_m = n_m_for(l.center, temperature)?;
    let g0 = (delta_omega_sq / (2.0 * n_m)).sqrt();
    let rel_tone = (tone.area_stderr / tone.area).powi(2);
    let g0_stderr = 0.5 * g0 * (fit.area_relative_variance() + rel_tone).sqrt();
    assumptions.insert(0, format!("T = {temperature} K assumed"));
    assumptions.push("occupation k_B T / (hbar Omega_m)".into());
    assumptions.push("tone referenced to a local quadratic background within +-4 ENBW".into());
    if l.fwhm < 5.0 * analyzer.enbw {
        warnings.push(format!(
            "fitted FWHM {} Hz not much wider than the ENBW {} Hz",
            l.fwhm, analyzer.enbw
        ));
    }
    Ok(CalibrationResult {
        method,
        k_at_mod: 2.0 * tone.area / (phi0 * phi0),
        tone_area: tone.area,
        f_m: l.center,
        gamma_m_hz: l.fwhm,
        lorentzian_area: l.area(),
        delta_omega_sq: 2.0 * n_m * g0 * g0,
        n_m,
        g0,
        g0_stderr,
        reduced_chi2: fit.reduced_chi2,
        assumptions,
        warnings,
        fit,
    })
}

/// Flat-K extraction: g₀² = (1/2⟨n⟩)(φ₀²Ω_mod²/2)·A_L/A_t.
pub fn extract_g0_simple(
    trace: &Spectrum,
    f_mod: f64,
    phi0: f64,
    analyzer: &AnalyzerModel,
    hint: &ModeHint,
) -> Result<CalibrationResult> {
    check_trace(trace, phi0, hint)?;
    let tone = measure_tone(trace, f_mod, analyzer)?;
    let fit = fit_mode(trace, f_mod, analyzer, hint)?;
    let l = fit.model.lorentzian;
    let omega_mod = units::angular(f_mod);
    let delta_omega_sq = 0.5 * phi0 * phi0 * omega_mod * omega_mod * l.area() / tone.area;
    let mut warnings = Vec::new();
    if (l.center - f_mod).abs() / l.center > 0.1 {
        warnings.push("tone more than 10% away from the mode; flat-K assumption doubtful".into());
    }
    if l.fwhm / l.center > 0.01 {
        warnings.push("mechanical linewidth not small against its frequency".into());
    }
    assemble(
        Method::Simple,
        tone,
        phi0,
        fit,
        delta_omega_sq,
        hint.temperature,
        vec!["K(Omega)/Omega^2 flat between tone and mode".into()],
        warnings,
        analyzer,
    )
}

/// Single-sided S_ωω view of a trace, scaled by the tone.
pub fn calibrated_view(
    trace: &Spectrum,
    tone: &ToneMeasurement,
    f_mod: f64,
    phi0: f64,
    scheme: &DetectionScheme,
) -> Result<FrequencyNoiseView> {
    let k_mod = scheme.k(units::angular(f_mod));
    if !(k_mod > 0.0) {
        return Err(Error::MaskedBins { count: trace.len() });
    }
    let scale = 2.0 * tone.area / (phi0 * phi0 * k_mod);
    frequency_noise_view(trace, scheme, scale)
}

/// Frequency-dependent-K extraction through the calibrated S_ωω view.
pub fn extract_g0_full(
    trace: &Spectrum,
    f_mod: f64,
    phi0: f64,
    analyzer: &AnalyzerModel,
    scheme: &DetectionScheme,
    hint: &ModeHint,
) -> Result<CalibrationResult> {
    check_trace(trace, phi0, hint)?;
    scheme.validate()?;
    let tone = measure_tone(trace, f_mod, analyzer)?;
    let view = calibrated_view(trace, &tone, f_mod, phi0, scheme)?;
    // fit only where K is finite and non-zero
    let usable: Vec<usize> = (0..view.masked.len()).filter(|&i| !view.masked[i]).collect();
    if usable.len() < 10 {
        return Err(Error::MaskedBins {
            count: view.masked_count(),
        });
    }
    let fit = fit_mode(&view.spectrum, f_mod, analyzer, hint)?;
    let (lo, hi) = hint.window.unwrap_or({
        let l = fit.model.lorentzian;
        let half = FIT_HALF_WIDTH_FWHM * l.fwhm;
        (l.center - half, l.center + half)
    });
    let masked_in_window = view
        .spectrum
        .freqs
        .iter()
        .zip(&view.masked)
        .filter(|(f, m)| **m && **f >= lo && **f <= hi)
        .count();
    if masked_in_window > 0 {
        return Err(Error::MaskedBins {
            count: masked_in_window,
        });
    }
    let delta_omega_sq = fit.model.lorentzian.area();
    let p = scheme.params;
    assemble(
        Method::FullK,
        tone,
        phi0,
        fit,
        delta_omega_sq,
        hint.temperature,
        vec![format!(
            "{} detection, kappa = {:e} Hz, eta_c = {}, detuning = {:e} Hz",
            scheme.kind.as_str(),
            units::ordinary(p.kappa),
            p.eta_c,
            units::ordinary(p.detuning)
        )],
        Vec::new(),
        analyzer,
    )
}

/// g₀ from a quoted frequency variance, temperature and mode frequency, all
/// in ordinary units: returns (g₀/2π in Hz, ⟨n_m⟩).
pub fn g0_from_quoted(delta_nu_rms_hz: f64, temperature: f64, f_m: f64) -> Result<(f64, f64)> {
    let n = n_m_for(f_m, temperature)?;
    let var = (2.0 * PI * delta_nu_rms_hz).powi(2);
    Ok((units::ordinary((var / (2.0 * n)).sqrt()), n))
}
