//! Synthesize a homodyne trace with a thermorefractive-like background and a
//! shot-noise floor, then recover g₀ with both extraction methods.

use std::f64::consts::PI;

use g0cal::analysis::{extract_g0_full, extract_g0_simple, ModeHint};
use g0cal::physics::{CavityParams, MechMode};
use g0cal::specest::AnalyzerModel;
use g0cal::synth::{preset, synth_trace, BackgroundTerm};
use g0cal::transduction::DetectionScheme;

fn main() -> g0cal::Result<()> {
    let cav = CavityParams::new(2.0 * PI * 200e6, 0.6, 0.0)?;
    let mode = MechMode::with_g0(2.0 * PI * 12e6, 2.0 * PI * 3e3, 300.0, 2.0 * PI * 800.0)?;
    let analyzer = AnalyzerModel::gaussian_enbw(60.0)?;
    let mut cfg = preset(DetectionScheme::homodyne(cav, 1.0), mode, analyzer, 60e3, 4.0);
    cfg.backgrounds = vec![
        BackgroundTerm::PowerLaw {
            amplitude: 5e8,
            exponent: -1.0,
        },
        BackgroundTerm::White { level: 1e-22 },
    ];
    for w in cfg.validate()? {
        println!("warning: {w}");
    }
    let trace = synth_trace(&cfg)?;
    let hint = ModeHint::new(300.0);
    let simple = extract_g0_simple(&trace, cfg.f_mod(), cfg.phi0, &cfg.analyzer, &hint)?;
    let full = extract_g0_full(&trace, cfg.f_mod(), cfg.phi0, &cfg.analyzer, &cfg.scheme, &hint)?;
    println!("configured g0 = 2pi*{:.2} Hz", cfg.mode.g0() / (2.0 * PI));
    for r in [simple, full] {
        println!("\n[{}]", r.method);
        for (k, v) in r.report() {
            println!("{k} = {v}");
        }
    }
    Ok(())
}
