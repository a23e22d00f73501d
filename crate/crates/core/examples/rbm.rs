//! Radial-breathing-mode style measurement: direct detection on the cavity
//! slope with the calibration tone at 71.38 MHz.

use std::f64::consts::PI;

use g0cal::analysis::{extract_g0_full, extract_g0_simple, ModeHint};
use g0cal::physics::{CavityParams, MechMode};
use g0cal::specest::AnalyzerModel;
use g0cal::synth::{preset, synth_trace, BackgroundTerm, FrequencyGrid, NoiseRealization};
use g0cal::transduction::{optimal_detuning_direct, DetectionScheme};

fn main() -> g0cal::Result<()> {
    let kappa = 2.0 * PI * 30e6;
    let mode = MechMode::with_g0(2.0 * PI * 71.5e6, 2.0 * PI * 20e3, 300.0, 2.0 * PI * 570.0)?;
    let opt = optimal_detuning_direct(kappa, 0.5, mode.omega_m)?;
    let cav = CavityParams::new(kappa, 0.5, opt[0].detuning)?;
    println!("slope detuning {:.3} MHz ({:?})", opt[0].detuning / (2.0 * PI * 1e6), opt[0].branch);

    let an = AnalyzerModel::gaussian_enbw(500.0)?;
    let mut cfg = preset(DetectionScheme::direct(cav), mode, an, 400e3, 3.0);
    cfg.omega_mod = 2.0 * PI * 71.38e6;
    cfg.grid = FrequencyGrid::centered(71.44e6, 920e3, 5521);
    cfg.backgrounds = vec![BackgroundTerm::PowerLaw {
        amplitude: 1e8,
        exponent: -1.0,
    }];
    cfg.noise = NoiseRealization::Chi2 { seed: 3, n_avg: 200 };
    let trace = synth_trace(&cfg)?;
    let hint = ModeHint::new(300.0);
    let simple = extract_g0_simple(&trace, 71.38e6, cfg.phi0, &cfg.analyzer, &hint)?;
    let full = extract_g0_full(&trace, 71.38e6, cfg.phi0, &cfg.analyzer, &cfg.scheme, &hint)?;
    for r in [simple, full] {
        println!(
            "{:>6}: g0 = 2pi*({:.1} +- {:.1}) Hz, reduced chi2 {:.3}",
            r.method.to_string(),
            r.g0 / (2.0 * PI),
            r.g0_stderr / (2.0 * PI),
            r.reduced_chi2
        );
    }
    Ok(())
}
