//! Sideband-amplitude model of the driven cavity, used as a brute-force
//! reference for the closed-form transduction functions.
//!
//! Fields are represented by three spectral components, a carrier and the two
//! first-order sidebands at e^{-iΩt} ("upper") and e^{+iΩt} ("lower"), plus an
//! optional common phase modulation e^{-iφ₀ cos Ωt} that multiplies the whole
//! field. Keeping the common modulation separate means a purely phase-modulated
//! field has exactly zero residual sidebands, so beat notes computed from it
//! carry no cancellation error.
//!
//! Fields are normalized so that |s|² is a photon flux; powers below are in
//! units of ħω.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::physics::CavityParams;
use crate::transduction::{k_direct, k_homodyne};

const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_DEPTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandField {
    pub carrier: Complex64,
    /// Residual component at e^{-iΩt}, excluding the common phase modulation.
    pub upper: Complex64,
    /// Residual component at e^{+iΩt}, excluding the common phase modulation.
    pub lower: Complex64,
    /// Modulation angular frequency Ω.
    pub omega: f64,
    /// Depth φ₀ of a phase modulation e^{-iφ₀ cos Ωt} applied to the whole field.
    pub phase_index: f64,
}

impl SidebandField {
    pub fn carrier_only(carrier: Complex64, omega: f64) -> Self {
        SidebandField {
            carrier,
            upper: Complex64::new(0.0, 0.0),
            lower: Complex64::new(0.0, 0.0),
            omega,
            phase_index: 0.0,
        }
    }

    /// Full first-order component at e^{-iΩt}.
    pub fn total_upper(&self) -> Complex64 {
        self.upper - I * (self.phase_index / 2.0) * self.carrier
    }

    /// Full first-order component at e^{+iΩt}.
    pub fn total_lower(&self) -> Complex64 {
        self.lower - I * (self.phase_index / 2.0) * self.carrier
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        SidebandField {
            carrier: self.carrier * factor,
            upper: self.upper * factor,
            lower: self.lower * factor,
            ..*self
        }
    }

    /// Largest sideband-to-carrier modulus ratio.
    pub fn modulation_ratio(&self) -> f64 {
        self.total_upper().norm().max(self.total_lower().norm()) / self.carrier.norm()
    }
}

/// Complex cavity response 𝓛(Ω) = 1/(−i(Δ+Ω) + κ/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianResponse(pub Complex64);

impl LorentzianResponse {
    pub fn value(&self) -> Complex64 {
        self.0
    }
}

pub fn cavity_response(p: &CavityParams, omega: f64) -> LorentzianResponse {
    LorentzianResponse(1.0 / Complex64::new(p.kappa / 2.0, -(p.detuning + omega)))
}

fn check_depth(depth: f64) -> Result<()> {
    if !(depth.abs() < MAX_DEPTH) {
        return Err(Error::Linearization {
            depth,
            limit: MAX_DEPTH,
        });
    }
    Ok(())
}

fn output_field(p: &CavityParams, input: &SidebandField, internal: &SidebandField) -> SidebandField {
    let g = (p.eta_c * p.kappa).sqrt();
    SidebandField {
        carrier: input.carrier - g * internal.carrier,
        upper: input.upper - g * internal.upper,
        lower: input.lower - g * internal.lower,
        omega: internal.omega,
        phase_index: internal.phase_index,
    }
}

/// Fields of a cavity whose resonance is modulated by harmonic motion
/// x₀cos(Ω_m t), expressed through the intracavity phase depth ψ₀ = x₀G/Ω_m.
///
/// Returns the intracavity and the output field.
pub fn sidebands_mechanical(
    p: &CavityParams,
    psi0: f64,
    omega_m: f64,
    s_in: Complex64,
) -> Result<(SidebandField, SidebandField)> {
    check_depth(psi0)?;
    let g = (p.eta_c * p.kappa).sqrt();
    let a0 = g * cavity_response(p, 0.0).value() * s_in;
    let kick = -I * (psi0 * omega_m / 2.0);
    let internal = SidebandField {
        carrier: a0,
        upper: kick * cavity_response(p, omega_m).value() * a0,
        lower: kick * cavity_response(p, -omega_m).value() * a0,
        omega: omega_m,
        phase_index: 0.0,
    };
    let input = SidebandField::carrier_only(s_in, omega_m);
    let output = output_field(p, &input, &internal);
    Ok((internal, output))
}

/// Fields for an input weakly phase modulated as e^{-iφ₀ cos Ω t}.
///
/// Returns the input, intracavity and output fields.
pub fn sidebands_phase_mod(
    p: &CavityParams,
    phi0: f64,
    omega_mod: f64,
    s_in: Complex64,
) -> Result<(SidebandField, SidebandField, SidebandField)> {
    check_depth(phi0)?;
    let g = (p.eta_c * p.kappa).sqrt();
    let l0 = cavity_response(p, 0.0).value();
    let lp = cavity_response(p, omega_mod).value();
    let lm = cavity_response(p, -omega_mod).value();
    let side = -I * (phi0 / 2.0) * g * s_in;
    // 𝓛(±Ω) − 𝓛(0) = ±iΩ 𝓛(±Ω)𝓛(0): the part not following the common modulation
    let input = SidebandField {
        phase_index: phi0,
        ..SidebandField::carrier_only(s_in, omega_mod)
    };
    let internal = SidebandField {
        carrier: g * l0 * s_in,
        upper: side * (I * omega_mod) * lp * l0,
        lower: side * (-I * omega_mod) * lm * l0,
        omega: omega_mod,
        phase_index: phi0,
    };
    let output = output_field(p, &input, &internal);
    Ok((input, internal, output))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beat {
    /// Time-averaged signal.
    pub dc: f64,
    /// Coefficient b of b·e^{-iΩt} + c.c. in the signal.
    pub amplitude: Complex64,
}

impl Beat {
    /// Mean-square value of the oscillating part, 2|b|².
    pub fn mean_square(&self) -> f64 {
        2.0 * self.amplitude.norm_sqr()
    }
}

/// Detected power |s_out|² to first order in the sidebands.
pub fn direct_power_beat(output: &SidebandField) -> Beat {
    // a common phase modulation leaves |s|² unchanged
    let c = output.carrier;
    Beat {
        dc: c.norm_sqr(),
        amplitude: c.conj() * output.upper + c * output.lower.conj(),
    }
}

/// Local oscillator split off the input: amplitude scaled to the requested
/// power ratio, inheriting any input phase modulation.
pub fn local_oscillator(input: &SidebandField, lo_power_ratio: f64) -> SidebandField {
    input.scaled(Complex64::new(lo_power_ratio.sqrt(), 0.0))
}

/// Balanced homodyne difference signal H/ħω₀ = i(s_LO s*_out − s*_LO s_out)
/// with the local oscillator rotated by `phi_lo`.
pub fn homodyne_beat(output: &SidebandField, lo: &SidebandField, phi_lo: f64) -> Beat {
    let rot = Complex64::from_polar(1.0, phi_lo);
    let lo = lo.scaled(rot);
    // only the relative phase modulation of signal and LO matters
    let rel = SidebandField {
        phase_index: output.phase_index - lo.phase_index,
        ..*output
    };
    let (c, u, l) = (rel.carrier, rel.total_upper(), rel.total_lower());
    let (cl, ul, ll) = (lo.carrier, lo.upper, lo.lower);
    let dc = (I * (cl * c.conj() - cl.conj() * c)).re;
    let amplitude = I * ((ul * c.conj() + cl * l.conj()) - (cl.conj() * u + ll.conj() * c));
    Beat { dc, amplitude }
}

/// Local-oscillator phase that nulls the homodyne d.c. signal.
pub fn lo_phase_lock(p: &CavityParams) -> f64 {
    let d = p.detuning;
    let den = d * d + (1.0 - 2.0 * p.eta_c) * p.kappa * p.kappa / 4.0;
    let num = p.eta_c * p.kappa * d;
    if den == 0.0 {
        if d == 0.0 {
            return 0.0;
        }
        return -d.signum() * std::f64::consts::FRAC_PI_2;
    }
    -(num / den).atan()
}

/// Which physical modulation drives the sidebands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Mechanical,
    InputPhase,
}

/// Probe depth used by the reference computations; any value well inside the
/// linear regime gives the same K.
const PROBE_DEPTH: f64 = 1e-3;

fn probe_fields(p: &CavityParams, omega: f64, src: Modulation) -> Result<(SidebandField, SidebandField)> {
    let s_in = Complex64::new(1.0, 0.0);
    match src {
        Modulation::Mechanical => {
            let (_, out) = sidebands_mechanical(p, PROBE_DEPTH, omega, s_in)?;
            Ok((SidebandField::carrier_only(s_in, omega), out))
        }
        Modulation::InputPhase => {
            let (input, _, out) = sidebands_phase_mod(p, PROBE_DEPTH, omega, s_in)?;
            Ok((input, out))
        }
    }
}

/// K_D from the sideband model: detected mean-square power over P_in² times
/// the mean-square modulation depth.
pub fn oracle_k_direct(p: &CavityParams, omega: f64, src: Modulation) -> Result<f64> {
    let (_, out) = probe_fields(p, omega, src)?;
    let beat = direct_power_beat(&out);
    Ok(beat.mean_square() / (PROBE_DEPTH * PROBE_DEPTH / 2.0))
}

/// K_H from the sideband model with the LO split from the input and locked.
pub fn oracle_k_homodyne(p: &CavityParams, omega: f64, src: Modulation) -> Result<f64> {
    let (input, out) = probe_fields(p, omega, src)?;
    let lo = local_oscillator(&input, 1.0);
    let beat = homodyne_beat(&out, &lo, lo_phase_lock(p));
    Ok(beat.mean_square() / (PROBE_DEPTH * PROBE_DEPTH / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleReport {
    pub samples: usize,
    /// max |K_oracle/K_closed − 1| over both modulation sources, direct detection.
    pub max_rel_direct: f64,
    /// Same for homodyne detection.
    pub max_rel_homodyne: f64,
    /// max |K_mechanical/K_phase − 1| over both detection schemes.
    pub max_rel_mech_vs_phase: f64,
    /// Largest |dc| of the locked homodyne signal relative to √(P_in P_LO).
    pub max_lock_dc: f64,
}

impl OracleReport {
    pub fn max_error(&self) -> f64 {
        self.max_rel_direct
            .max(self.max_rel_homodyne)
            .max(self.max_rel_mech_vs_phase)
    }
}

/// Random parameter tuple in the oracle test box: log-uniform κ, Ω and |Δ|
/// spanning six decades around κ, random sign of Δ, η_c ∈ [0.01, 0.99].
pub fn random_tuple<R: Rng>(rng: &mut R) -> (CavityParams, f64) {
    let kappa = 10f64.powf(rng.random_range(-1.0..7.0));
    let d = kappa * 10f64.powf(rng.random_range(-3.0..3.0));
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let omega = kappa * 10f64.powf(rng.random_range(-3.0..3.0));
    let eta_c = rng.random_range(0.01..0.99);
    (
        CavityParams {
            kappa,
            eta_c,
            detuning: sign * d,
            omega_c: None,
        },
        omega,
    )
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Compare sideband-model K values against the closed forms on `n` random
/// parameter tuples drawn from a ChaCha20 stream seeded with `seed`.
pub fn oracle_equivalence(n: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = OracleReport {
        samples: n,
        ..Default::default()
    };
    for _ in 0..n {
        let (p, w) = random_tuple(&mut rng);
        let kd = k_direct(&p, w);
        let kh = k_homodyne(&p, w);
        let kd_m = oracle_k_direct(&p, w, Modulation::Mechanical)?;
        let kd_p = oracle_k_direct(&p, w, Modulation::InputPhase)?;
        let kh_m = oracle_k_homodyne(&p, w, Modulation::Mechanical)?;
        let kh_p = oracle_k_homodyne(&p, w, Modulation::InputPhase)?;
        rep.max_rel_direct = rep.max_rel_direct.max(rel(kd_m, kd)).max(rel(kd_p, kd));
        rep.max_rel_homodyne = rep.max_rel_homodyne.max(rel(kh_m, kh)).max(rel(kh_p, kh));
        rep.max_rel_mech_vs_phase = rep
            .max_rel_mech_vs_phase
            .max(rel(kd_m, kd_p))
            .max(rel(kh_m, kh_p));

        let (_, out) = sidebands_mechanical(&p, 0.0, w, Complex64::new(1.0, 0.0))?;
        let lo = SidebandField::carrier_only(Complex64::new(1.0, 0.0), w);
        let dc = homodyne_beat(&out, &lo, lo_phase_lock(&p)).dc;
        rep.max_lock_dc = rep.max_lock_dc.max(dc.abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cav(kappa: f64, eta_c: f64, detuning: f64) -> CavityParams {
        CavityParams {
            kappa,
            eta_c,
            detuning,
            omega_c: None,
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn lorentzian_values() {
        let p = cav(2.0, 0.5, 0.0);
        assert_eq!(cavity_response(&p, 0.0).value(), c(1.0));
        let p = cav(2.0, 0.5, 3.0);
        let l = cavity_response(&p, -3.0).value();
        assert_eq!(l, c(1.0));
        for w in [-5.0, -1.0, 0.5, 4.0] {
            assert!(cavity_response(&p, w).value().norm() < 1.0);
        }
        let p = cav(2.0, 0.5, 0.0);
        let w = 1.7;
        let l2 = cavity_response(&p, w).value().norm_sqr();
        assert!((l2 - 1.0 / (w * w + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn no_modulation_no_sidebands() {
        let p = cav(1.0, 0.3, 0.4);
        let (int, out) = sidebands_mechanical(&p, 0.0, 2.0, c(1.0)).unwrap();
        assert_eq!(int.upper, c(0.0));
        assert_eq!(int.lower, c(0.0));
        let g = (0.3f64).sqrt();
        assert!((int.carrier - g * cavity_response(&p, 0.0).value()).norm() < 1e-15);
        assert_eq!(direct_power_beat(&out).amplitude, c(0.0));

        let (inp, int, out) = sidebands_phase_mod(&p, 0.0, 2.0, c(1.0)).unwrap();
        for f in [inp, int, out] {
            assert_eq!(f.total_upper(), c(0.0));
            assert_eq!(f.total_lower(), c(0.0));
        }
    }

    #[test]
    fn depth_is_guarded() {
        let p = cav(1.0, 0.3, 0.4);
        assert!(matches!(
            sidebands_mechanical(&p, 0.1, 1.0, c(1.0)),
            Err(Error::Linearization { .. })
        ));
        assert!(sidebands_phase_mod(&p, 0.2, 1.0, c(1.0)).is_err());
    }

    #[test]
    fn resonant_probe_symmetric_sidebands_and_no_direct_signal() {
        let p = cav(1.0, 0.8, 0.0);
        let (int, out) = sidebands_mechanical(&p, 1e-4, 0.7, c(1.0)).unwrap();
        assert!((int.upper.norm() - int.lower.norm()).abs() < 1e-18);
        assert!(int.modulation_ratio() < 1e-3);
        assert!(direct_power_beat(&out).amplitude.norm() < 1e-18);
    }

    #[test]
    fn phase_mod_internal_sidebands_follow_lorentzian() {
        let p = cav(1.3, 0.6, 0.2);
        let (phi, w) = (1e-3, 0.9);
        let (inp, int, _) = sidebands_phase_mod(&p, phi, w, c(1.0)).unwrap();
        let g = (p.eta_c * p.kappa).sqrt();
        let expect_u = g * (-I * phi / 2.0) * cavity_response(&p, w).value();
        let expect_l = g * (-I * phi / 2.0) * cavity_response(&p, -w).value();
        assert!((int.total_upper() - expect_u).norm() < 1e-15);
        assert!((int.total_lower() - expect_l).norm() < 1e-15);
        assert!((inp.total_upper() - (-I * phi / 2.0)).norm() < 1e-18);
    }

    #[test]
    fn far_detuned_cavity_is_transparent() {
        let p = cav(1.0, 0.7, 100.0);
        let (inp, _, out) = sidebands_phase_mod(&p, 1e-3, 0.5, c(1.0)).unwrap();
        let du = (out.total_upper() - inp.total_upper()).norm() / inp.total_upper().norm();
        let dl = (out.total_lower() - inp.total_lower()).norm() / inp.total_lower().norm();
        assert!(du < 2.0 * p.eta_c * p.kappa / 99.0, "{du}");
        assert!(dl < 2.0 * p.eta_c * p.kappa / 99.0, "{dl}");
        assert!(du > 1e-3);
    }

    #[test]
    fn lossless_port_conserves_photons() {
        for d in [0.0, 0.3, -2.0, 40.0] {
            let p = cav(1.7, 1.0, d);
            let (_, out) = sidebands_mechanical(&p, 0.0, 1.0, c(1.0)).unwrap();
            assert!((out.carrier.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lock_phase_nulls_dc() {
        let p = cav(1.0, 0.3, 0.0);
        assert_eq!(lo_phase_lock(&p), 0.0);
        let p = cav(1.0, 0.5, 0.6);
        let phi = lo_phase_lock(&p);
        assert!((phi + (p.eta_c * p.kappa / 0.6).atan()).abs() < 1e-15);
        let (_, out) = sidebands_mechanical(&p, 0.0, 1.0, c(1.0)).unwrap();
        let lo = SidebandField::carrier_only(c(1.0), 1.0);
        // root of the dc signal by bisection, compared against the closed form
        let dc = |x: f64| homodyne_beat(&out, &lo, x).dc;
        let (mut a, mut b) = (phi - 0.5, phi + 0.5);
        assert!(dc(a) * dc(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if dc(a) * dc(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        assert!((0.5 * (a + b) - phi).abs() < 1e-12);
    }

    #[test]
    fn lock_phase_singular_denominator() {
        let kappa = 2.0;
        let eta = 0.75;
        let d = ((2.0 * eta - 1.0) * kappa * kappa / 4.0f64).sqrt();
        let p = cav(kappa, eta, d);
        let phi = lo_phase_lock(&p);
        assert!((phi.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
        let (_, out) = sidebands_mechanical(&p, 0.0, 1.0, c(1.0)).unwrap();
        let lo = SidebandField::carrier_only(c(1.0), 1.0);
        assert!(homodyne_beat(&out, &lo, phi).dc.abs() < 1e-12);
    }

    #[test]
    fn resonant_homodyne_reads_internal_phase() {
        let p = cav(1.0, 0.9, 0.0);
        let w = 0.35;
        let k = oracle_k_homodyne(&p, w, Modulation::Mechanical).unwrap();
        let closed = crate::transduction::k_homodyne_resonant(1.0, 0.9, w);
        assert!((k / closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beats_are_linear_in_depth() {
        let p = cav(1.0, 0.4, 0.7);
        let w = 1.3;
        let lo = SidebandField::carrier_only(c(1.0), w);
        let (_, o1) = sidebands_mechanical(&p, 1e-4, w, c(1.0)).unwrap();
        let (_, o2) = sidebands_mechanical(&p, 3e-4, w, c(1.0)).unwrap();
        let r = direct_power_beat(&o2).amplitude / direct_power_beat(&o1).amplitude;
        assert!((r - 3.0).norm() < 3e-9);
        let phi = lo_phase_lock(&p);
        let r = homodyne_beat(&o2, &lo, phi).amplitude / homodyne_beat(&o1, &lo, phi).amplitude;
        assert!((r - 3.0).norm() < 3e-9);

        let (i1, _, q1) = sidebands_phase_mod(&p, 1e-4, w, c(1.0)).unwrap();
        let (i2, _, q2) = sidebands_phase_mod(&p, 3e-4, w, c(1.0)).unwrap();
        let r = direct_power_beat(&q2).amplitude / direct_power_beat(&q1).amplitude;
        assert!((r - 3.0).norm() < 3e-9);
        let r = homodyne_beat(&q2, &i2, phi).amplitude / homodyne_beat(&q1, &i1, phi).amplitude;
        assert!((r - 3.0).norm() < 3e-9);
    }

    #[test]
    fn oracle_matches_closed_forms() {
        let rep = oracle_equivalence(500, 7).unwrap();
        assert!(rep.max_error() < 1e-9, "{rep:?}");
        assert!(rep.max_lock_dc < 1e-12, "{rep:?}");
    }
}
