//! Physical constants, cavity and mechanical-mode records, and the thermal
//! noise spectra of a mechanical oscillator as seen through the cavity.
//!
//! All rates and frequencies here are angular (rad/s). Spectral densities are
//! double-sided, normalized so that `∫ S(Ω) dΩ/2π` over the whole real line is
//! the variance.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad;

/// CODATA 2018 constants (both exact in the 2019 SI).
#[derive(Debug, Clone, Copy)]
pub struct PhysConsts;

impl PhysConsts {
    /// Planck constant, J·s.
    pub const PLANCK: f64 = 6.626_070_15e-34;
    /// Reduced Planck constant h/2π = 1.054 571 817... × 10⁻³⁴ J·s.
    pub const HBAR: f64 = Self::PLANCK / (2.0 * PI);
    /// Boltzmann constant, J/K.
    pub const K_B: f64 = 1.380_649e-23;
}

pub const HBAR: f64 = PhysConsts::HBAR;
pub const K_B: f64 = PhysConsts::K_B;

/// Unit conversions between the angular quantities used internally and the
/// ordinary-frequency quantities used in files and on the command line.
pub mod units {
    use std::f64::consts::PI;

    /// Hz → rad/s.
    #[inline]
    pub fn angular(f_hz: f64) -> f64 {
        2.0 * PI * f_hz
    }

    /// rad/s → Hz.
    #[inline]
    pub fn ordinary(omega: f64) -> f64 {
        omega / (2.0 * PI)
    }

    /// Frequency-noise density (rad/s)²/Hz → Hz²/Hz.
    #[inline]
    pub fn freq_noise_to_hz2(s_ww: f64) -> f64 {
        s_ww / (4.0 * PI * PI)
    }

    /// Frequency-noise density Hz²/Hz → (rad/s)²/Hz.
    #[inline]
    pub fn freq_noise_from_hz2(s_nn: f64) -> f64 {
        s_nn * 4.0 * PI * PI
    }
}

/// Optical cavity and probe parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Total energy loss rate κ (rad/s).
    pub kappa: f64,
    /// Coupling fraction κ_ex/κ.
    pub eta_c: f64,
    /// Laser detuning ω_l − ω_c (rad/s).
    pub detuning: f64,
    /// Optical carrier frequency (rad/s); only used for reporting.
    pub omega_c: Option<f64>,
}

impl CavityParams {
    pub fn new(kappa: f64, eta_c: f64, detuning: f64) -> Result<Self> {
        let p = CavityParams {
            kappa,
            eta_c,
            detuning,
            omega_c: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        CavityParams { detuning, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(0.0..=1.0).contains(&self.eta_c) {
            return Err(Error::Domain(format!(
                "eta_c must lie in [0, 1], got {}",
                self.eta_c
            )));
        }
        if !self.detuning.is_finite() {
            return Err(Error::Domain("detuning must be finite".into()));
        }
        Ok(())
    }
}

/// How the mechanical mode's coupling is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassSpec {
    /// Effective mass (kg) and coupling parameter G = dω_c/dx (rad/s per m)
    /// for one particular choice of displacement normalization.
    Effective { m_eff: f64, g_coupling: f64 },
    /// Vacuum coupling rate g₀ (rad/s), normalization free.
    VacuumRate { g0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechMode {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub temperature: f64,
    pub mass: MassSpec,
}

impl MechMode {
    pub fn with_g0(omega_m: f64, gamma_m: f64, temperature: f64, g0: f64) -> Result<Self> {
        let m = MechMode {
            omega_m,
            gamma_m,
            temperature,
            mass: MassSpec::VacuumRate { g0 },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_mass(
        omega_m: f64,
        gamma_m: f64,
        temperature: f64,
        m_eff: f64,
        g_coupling: f64,
    ) -> Result<Self> {
        let m = MechMode {
            omega_m,
            gamma_m,
            temperature,
            mass: MassSpec::Effective { m_eff, g_coupling },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_m > 0.0) {
            return Err(Error::Domain(format!("omega_m must be > 0, got {}", self.omega_m)));
        }
        if !(self.gamma_m > 0.0) {
            return Err(Error::Domain(format!("gamma_m must be > 0, got {}", self.gamma_m)));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        match self.mass {
            MassSpec::Effective { m_eff, g_coupling } => {
                if !(m_eff > 0.0) {
                    return Err(Error::Domain(format!("m_eff must be > 0, got {m_eff}")));
                }
                if !g_coupling.is_finite() {
                    return Err(Error::Domain("G must be finite".into()));
                }
            }
            MassSpec::VacuumRate { g0 } => {
                if !(g0 >= 0.0) || !g0.is_finite() {
                    return Err(Error::Domain(format!("g0 must be >= 0, got {g0}")));
                }
            }
        }
        Ok(())
    }

    /// Vacuum coupling rate g₀ = G·x_zpf, whichever branch is stored.
    pub fn g0(&self) -> f64 {
        match self.mass {
            MassSpec::VacuumRate { g0 } => g0,
            MassSpec::Effective { m_eff, g_coupling } => {
                (g_coupling * zero_point_amplitude(m_eff, self.omega_m)).abs()
            }
        }
    }

    /// Same mode expressed through g₀ only.
    pub fn to_vacuum_rate(&self) -> MechMode {
        MechMode {
            mass: MassSpec::VacuumRate { g0: self.g0() },
            ..*self
        }
    }

    /// Same mode expressed in the displacement normalization with coupling
    /// parameter `g_coupling`; the effective mass follows from g₀ = G·x_zpf.
    pub fn to_effective(&self, g_coupling: f64) -> Result<MechMode> {
        let g0 = self.g0();
        if g0 == 0.0 || g_coupling == 0.0 {
            return Err(Error::Domain(
                "cannot choose a mass normalization with g0 = 0 or G = 0".into(),
            ));
        }
        let m_eff = HBAR * g_coupling * g_coupling / (2.0 * self.omega_m * g0 * g0);
        Ok(MechMode {
            mass: MassSpec::Effective { m_eff, g_coupling },
            ..*self
        })
    }

    /// Rescale the displacement coordinate x → αx: G → G/α, m_eff → m_eff/α².
    pub fn renormalized(&self, alpha: f64) -> MechMode {
        match self.mass {
            MassSpec::Effective { m_eff, g_coupling } => MechMode {
                mass: MassSpec::Effective {
                    m_eff: m_eff / (alpha * alpha),
                    g_coupling: g_coupling / alpha,
                },
                ..*self
            },
            MassSpec::VacuumRate { .. } => *self,
        }
    }
}

fn zero_point_amplitude(m_eff: f64, omega_m: f64) -> f64 {
    (HBAR / (2.0 * m_eff * omega_m)).sqrt()
}

/// Zero-point fluctuation amplitude √(ħ / 2 m_eff Ω_m) in metres.
pub fn x_zpf(mode: &MechMode) -> Result<f64> {
    match mode.mass {
        MassSpec::Effective { m_eff, .. } => {
            if !(m_eff > 0.0) || !(mode.omega_m > 0.0) {
                return Err(Error::Domain("x_zpf needs m_eff > 0 and omega_m > 0".into()));
            }
            Ok(zero_point_amplitude(m_eff, mode.omega_m))
        }
        MassSpec::VacuumRate { .. } => Err(Error::Domain(
            "x_zpf needs an effective mass; convert with to_effective".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OccupationForm {
    /// k_B T / ħΩ_m
    #[default]
    HighTemperature,
    /// 1 / (exp(ħΩ_m / k_B T) − 1)
    Bose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupation {
    pub high_temperature: f64,
    pub bose: f64,
    /// Raised when the high-temperature value differs from the Bose value by
    /// more than 1 % (always raised at T = 0).
    pub approximation_flag: bool,
}

impl Occupation {
    pub fn value(&self, form: OccupationForm) -> f64 {
        match form {
            OccupationForm::HighTemperature => self.high_temperature,
            OccupationForm::Bose => self.bose,
        }
    }
}

pub fn occupation(mode: &MechMode) -> Result<Occupation> {
    if !(mode.temperature >= 0.0) {
        return Err(Error::Domain("temperature must be >= 0".into()));
    }
    if mode.temperature == 0.0 {
        return Ok(Occupation {
            high_temperature: 0.0,
            bose: 0.0,
            approximation_flag: true,
        });
    }
    let x = HBAR * mode.omega_m / (K_B * mode.temperature);
    let high_temperature = 1.0 / x;
    let bose = 1.0 / x.exp_m1();
    let approximation_flag = ((high_temperature - bose) / bose).abs() > 0.01;
    Ok(Occupation {
        high_temperature,
        bose,
        approximation_flag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThermalForm {
    /// Fluctuation-dissipation form with ħΩ coth(ħΩ / 2k_BT).
    ExactCoth,
    /// Classical limit 2 k_B T.
    #[default]
    HighTemperature,
}

/// Ω·coth(ħΩ / 2k_BT), with its Ω → 0 and T → 0 limits.
fn omega_coth(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return omega.abs();
    }
    let x = HBAR * omega / (2.0 * K_B * temperature);
    if x.abs() < 1e-6 {
        2.0 * K_B * temperature / HBAR * (1.0 + x * x / 3.0)
    } else {
        omega / x.tanh()
    }
}

/// m_eff·S_xx(Ω): the mass-independent part of the displacement spectrum.
fn mass_weighted_sxx(mode: &MechMode, omega: f64, form: ThermalForm) -> f64 {
    let w2 = omega * omega;
    let detune = w2 - mode.omega_m * mode.omega_m;
    let denom = detune * detune + mode.gamma_m * mode.gamma_m * w2;
    let numer = match form {
        ThermalForm::ExactCoth => mode.gamma_m * HBAR * omega_coth(omega, mode.temperature),
        ThermalForm::HighTemperature => 2.0 * mode.gamma_m * K_B * mode.temperature,
    };
    numer / denom
}

/// Double-sided displacement spectral density (m²/Hz).
pub fn s_xx_thermal(mode: &MechMode, omega: f64, form: ThermalForm) -> Result<f64> {
    let m_eff = match mode.mass {
        MassSpec::Effective { m_eff, .. } => m_eff,
        MassSpec::VacuumRate { .. } => {
            return Err(Error::Domain(
                "S_xx needs an effective mass; convert with to_effective".into(),
            ))
        }
    };
    Ok(mass_weighted_sxx(mode, omega, form) / m_eff)
}

/// Double-sided cavity frequency-noise spectral density ((rad/s)²/Hz).
///
/// Evaluated as G²·S_xx when the mode carries a mass normalization, otherwise
/// as g₀²·(2Ω_m/ħ)·m_eff·S_xx.
pub fn s_ww_thermal(mode: &MechMode, omega: f64, form: ThermalForm) -> f64 {
    match mode.mass {
        MassSpec::Effective { m_eff, g_coupling } => {
            g_coupling * g_coupling * mass_weighted_sxx(mode, omega, form) / m_eff
        }
        MassSpec::VacuumRate { g0 } => {
            g0 * g0 * (2.0 * mode.omega_m / HBAR) * mass_weighted_sxx(mode, omega, form)
        }
    }
}

/// Three routes to the cavity frequency variance ⟨δω_c²⟩ of a thermal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyVariance {
    /// ∫ S_ωω dΩ/2π over the real line by adaptive quadrature.
    pub quadrature: f64,
    /// S_ωω(Ω_m)·Γ_m/2.
    pub peak_times_width: f64,
    /// 2⟨n_m⟩g₀² with the high-temperature occupation.
    pub occupation_form: f64,
    /// Raised when Γ_m ≥ Ω_m/10.
    pub broad_resonance: bool,
}

impl FrequencyVariance {
    pub fn max_relative_spread(&self) -> f64 {
        let v = [self.quadrature, self.peak_times_width, self.occupation_form];
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / hi.abs()
    }
}

/// Integrated frequency noise of the high-temperature spectrum, by quadrature
/// and by the two closed forms.
pub fn integrate_lorentzian_identity(mode: &MechMode) -> Result<FrequencyVariance> {
    mode.validate()?;
    let form = ThermalForm::HighTemperature;
    let wm = mode.omega_m;
    let gm = mode.gamma_m;
    let f = |w: f64| s_ww_thermal(mode, w, form);
    // even integrand: twice the positive half-line, split around the peak
    let core = quad::integrate_piecewise(
        f,
        &[
            0.0,
            (wm - 200.0 * gm).max(0.5 * wm),
            (wm - 5.0 * gm).max(0.5 * wm),
            wm,
            wm + 5.0 * gm,
            wm + 200.0 * gm,
            2.0 * wm,
        ],
        1e-12,
    );
    let (tail, _) = quad::integrate_to_inf(f, 2.0 * wm + 200.0 * gm, 1e-12);
    let (gap, _) = quad::integrate(f, 2.0 * wm, 2.0 * wm + 200.0 * gm, 1e-12);
    let quadrature = 2.0 * (core + gap + tail) / (2.0 * PI);
    let peak_times_width = s_ww_thermal(mode, wm, form) * gm / 2.0;
    let n = occupation(mode)?.high_temperature;
    let g0 = mode.g0();
    Ok(FrequencyVariance {
        quadrature,
        peak_times_width,
        occupation_form: 2.0 * n * g0 * g0,
        broad_resonance: gm >= wm / 10.0,
    })
}

/// g₀ from a measured frequency variance and occupation: √(⟨δω²⟩ / 2⟨n⟩).
pub fn g0_from_variance(delta_omega_sq: f64, n_m: f64) -> Result<f64> {
    if !(n_m > 0.0) || !(delta_omega_sq >= 0.0) {
        return Err(Error::Domain(format!(
            "need n_m > 0 and variance >= 0 (n_m = {n_m}, variance = {delta_omega_sq})"
        )));
    }
    Ok((delta_omega_sq / (2.0 * n_m)).sqrt())
}
