//! The nanobeam numbers: g₀ from the quoted frequency variance at 300 K, and a
//! synthetic trace of the same device with the calibration tone at 8 MHz.

use std::f64::consts::PI;

use g0cal::analysis::{extract_g0_full, g0_from_quoted, ModeHint};
use g0cal::physics::{CavityParams, MechMode};
use g0cal::specest::AnalyzerModel;
use g0cal::synth::{preset, synth_trace, FrequencyGrid};
use g0cal::transduction::DetectionScheme;

fn main() -> g0cal::Result<()> {
    let (g0_hz, n) = g0_from_quoted(530e3, 300.0, 8.3e6)?;
    println!("<dw^2> = (2pi*530 kHz)^2, <n> = {n:.4e} at 300 K -> g0 = 2pi*{g0_hz:.1} Hz");

    let cav = CavityParams::new(2.0 * PI * 1e9, 0.5, 0.0)?;
    let mode = MechMode::with_g0(2.0 * PI * 8.3e6, 2.0 * PI * 2e3, 300.0, 2.0 * PI * 420.0)?;
    let an = AnalyzerModel::gaussian_enbw(100.0)?;
    let mut cfg = preset(DetectionScheme::homodyne(cav, 1.0), mode, an, 40e3, 4.0);
    cfg.omega_mod = 2.0 * PI * 8e6;
    cfg.grid = FrequencyGrid::centered(8.15e6, 500e3, 20001);
    let trace = synth_trace(&cfg)?;
    let r = extract_g0_full(&trace, 8e6, cfg.phi0, &cfg.analyzer, &cfg.scheme, &ModeHint::new(300.0))?;
    println!(
        "synthetic trace, tone at 8 MHz: g0 = 2pi*{:.2} Hz, delta_nu_rms = {:.1} kHz",
        r.g0 / (2.0 * PI),
        (r.delta_omega_sq.sqrt() / (2.0 * PI)) / 1e3
    );
    Ok(())
}
