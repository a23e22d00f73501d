//! Closed-form transduction functions K(Ω) that map cavity phase (or input
//! phase-modulation) noise onto the detected signal spectrum.
//!
//! Both functions are dimensionless: K_D = S_PP / (P_in² S_ψψ) for direct
//! detection of the transmitted power, K_H = S_HH / (P_in P_LO S_ψψ) for
//! balanced homodyne detection with the local oscillator locked to zero d.c.

use crate::error::{Error, Result};
use crate::physics::CavityParams;

/// Half-width of the (η_c = 1/2, Δ = 0) neighbourhood, in units of κ and of η_c.
const HALF_COUPLING_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionKind {
    Direct,
    Homodyne,
}

impl DetectionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectionKind::Direct => "direct",
            DetectionKind::Homodyne => "homodyne",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionScheme {
    pub kind: DetectionKind,
    pub params: CavityParams,
    /// P_LO / P_in, homodyne only.
    pub lo_power_ratio: f64,
}

/// Conditions worth reporting about a detection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SchemeFlags {
    /// Direct detection on resonance: K_D vanishes identically.
    pub degenerate: bool,
    /// Homodyne at critical coupling on resonance: K_H is taken as a limit.
    pub half_coupling_limit: bool,
}

impl DetectionScheme {
    pub fn direct(params: CavityParams) -> Self {
        DetectionScheme {
            kind: DetectionKind::Direct,
            params,
            lo_power_ratio: 0.0,
        }
    }

    pub fn homodyne(params: CavityParams, lo_power_ratio: f64) -> Self {
        DetectionScheme {
            kind: DetectionKind::Homodyne,
            params,
            lo_power_ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.kind == DetectionKind::Homodyne && !(self.lo_power_ratio > 0.0) {
            return Err(Error::Domain(format!(
                "homodyne detection needs lo_power_ratio > 0, got {}",
                self.lo_power_ratio
            )));
        }
        Ok(())
    }

    pub fn flags(&self) -> SchemeFlags {
        let p = &self.params;
        match self.kind {
            DetectionKind::Direct => SchemeFlags {
                degenerate: p.detuning == 0.0,
                half_coupling_limit: false,
            },
            DetectionKind::Homodyne => SchemeFlags {
                degenerate: false,
                half_coupling_limit: in_half_coupling_corner(p),
            },
        }
    }

    /// Dimensionless transduction at angular Fourier frequency `omega`.
    pub fn k(&self, omega: f64) -> f64 {
        match self.kind {
            DetectionKind::Direct => k_direct(&self.params, omega),
            DetectionKind::Homodyne => k_homodyne(&self.params, omega),
        }
    }

    /// Detector power scale multiplying K: P_in² (direct) or P_in·P_LO (homodyne).
    pub fn power_scale(&self, p_in: f64) -> f64 {
        match self.kind {
            DetectionKind::Direct => p_in * p_in,
            DetectionKind::Homodyne => p_in * p_in * self.lo_power_ratio,
        }
    }
}

fn in_half_coupling_corner(p: &CavityParams) -> bool {
    (p.eta_c - 0.5).abs() < HALF_COUPLING_EPS && p.detuning.abs() < HALF_COUPLING_EPS * p.kappa
}

/// Direct-detection transduction K_D(Ω).
pub fn k_direct(p: &CavityParams, omega: f64) -> f64 {
    let (k, e, d, w) = (p.kappa, p.eta_c, p.detuning, omega);
    let k2 = k * k;
    let q = k2 / 4.0;
    let num = 4.0 * e * e * k2 * d * d * w * w * (w * w + k2 * (1.0 - e) * (1.0 - e));
    let l0 = d * d + q;
    let den = ((w + d) * (w + d) + q) * ((w - d) * (w - d) + q) * l0 * l0;
    num / den
}

/// Resonant-probe form of the homodyne transduction, 16η_c²Ω²/(Ω² + κ²/4).
pub fn k_homodyne_resonant(kappa: f64, eta_c: f64, omega: f64) -> f64 {
    16.0 * eta_c * eta_c * omega * omega / (omega * omega + kappa * kappa / 4.0)
}

/// Balanced-homodyne transduction K_H(Ω) with the LO phase locked to null
/// the d.c. signal.
pub fn k_homodyne(p: &CavityParams, omega: f64) -> f64 {
    if in_half_coupling_corner(p) {
        return k_homodyne_resonant(p.kappa, p.eta_c, omega);
    }
    let (k, e, d, w) = (p.kappa, p.eta_c, p.detuning, omega);
    let k2 = k * k;
    let q = k2 / 4.0;
    let a = 1.0 - 2.0 * e;
    let d2 = d * d;
    let inner = d2 - a * q;
    let num = 4.0 * k2 * e * e * w * w * (w * w * a * a * q + inner * inner);
    let den = ((d - w) * (d - w) + q) * ((d + w) * (d + w) + q) * (d2 + a * a * q) * (d2 + q);
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsbApprox {
    /// 4η_c²(1 + κ²(16η_c − 13)/(16Ω_m²)) with Ω_m = |Δ|.
    pub value: f64,
    /// k_homodyne evaluated at Ω = |Δ|.
    pub exact: f64,
    /// (value − exact) / exact.
    pub relative_residual: f64,
    /// Raised when |Δ| ≤ 3κ.
    pub outside_validity: bool,
}

/// Resolved-sideband approximation of K_H(±Ω_m) for a probe detuned by
/// |Δ| = Ω_m.
pub fn k_homodyne_rsb(p: &CavityParams) -> RsbApprox {
    let wm = p.detuning.abs();
    let e = p.eta_c;
    let value = 4.0 * e * e * (1.0 + p.kappa * p.kappa * (16.0 * e - 13.0) / (16.0 * wm * wm));
    let exact = k_homodyne(p, wm);
    RsbApprox {
        value,
        exact,
        relative_residual: (value - exact) / exact,
        outside_validity: !(wm > 3.0 * p.kappa),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningBranch {
    /// Probe on the slope of the cavity resonance.
    Slope,
    /// Probe on a mechanical sideband.
    Sideband,
    /// Single optimum below Ω = √2κ.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalDetuning {
    pub branch: DetuningBranch,
    pub detuning: f64,
    /// k_direct at this detuning.
    pub k: f64,
    /// The closed-form optimum value quoted for this branch.
    pub k_closed_form: f64,
}

/// Stationary detunings maximizing K_D at Fourier frequency `omega`, both
/// signs, with K_D evaluated exactly at each.
pub fn optimal_detuning_direct(kappa: f64, eta_c: f64, omega: f64) -> Result<Vec<OptimalDetuning>> {
    if !(kappa > 0.0) || !(omega > 0.0) {
        return Err(Error::Domain("optimal detuning needs kappa > 0 and omega > 0".into()));
    }
    let params = |d: f64| CavityParams {
        kappa,
        eta_c,
        detuning: d,
        omega_c: None,
    };
    let k2 = kappa * kappa;
    let w2 = omega * omega;
    let mut out = Vec::with_capacity(4);
    if omega > 2f64.sqrt() * kappa {
        let root = (w2 * w2 - 2.0 * k2 * w2).sqrt();
        let closed = 4.0 * eta_c * eta_c * (1.0 + k2 * (1.0 - eta_c) * (1.0 - eta_c) / w2);
        for (branch, inner) in [
            (DetuningBranch::Slope, 2.0 * w2 - k2 - 2.0 * root),
            (DetuningBranch::Sideband, 2.0 * w2 - k2 + 2.0 * root),
        ] {
            let d = 0.5 * inner.max(0.0).sqrt();
            for s in [1.0, -1.0] {
                out.push(OptimalDetuning {
                    branch,
                    detuning: s * d,
                    k: k_direct(&params(s * d), omega),
                    k_closed_form: closed,
                });
            }
        }
    } else {
        let d = (12.0 * w2 + 3.0 * k2).sqrt() / 6.0;
        let closed = 27.0 * w2 * eta_c * eta_c * k2 * (w2 + k2 * (1.0 - eta_c) * (1.0 - eta_c))
            / (w2 + k2).powi(3);
        for s in [1.0, -1.0] {
            out.push(OptimalDetuning {
                branch: DetuningBranch::Single,
                detuning: s * d,
                k: k_direct(&params(s * d), omega),
                k_closed_form: closed,
            });
        }
    }
    Ok(out)
}
