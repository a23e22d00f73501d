//! Scatter of the extracted g₀ over seeded noise realizations compared with
//! the standard error the fit reports.

use std::f64::consts::PI;

use g0cal::analysis::{extract_g0_full, ModeHint};
use g0cal::physics::{CavityParams, MechMode};
use g0cal::specest::AnalyzerModel;
use g0cal::synth::{preset, synth_trace, NoiseRealization};
use g0cal::transduction::DetectionScheme;

fn main() -> g0cal::Result<()> {
    let cav = CavityParams::new(2.0 * PI * 1e9, 0.5, 0.0)?;
    let mode = MechMode::with_g0(2.0 * PI * 8.3e6, 2.0 * PI * 2e3, 300.0, 2.0 * PI * 420.0)?;
    let an = AnalyzerModel::gaussian_enbw(50.0)?;
    let mut cfg = preset(DetectionScheme::homodyne(cav, 1.0), mode, an, 40e3, 4.0);
    for n_avg in [1, 10, 100, 1000] {
        let (mut g, mut se) = (Vec::new(), Vec::new());
        for seed in 0..40 {
            cfg.noise = NoiseRealization::Chi2 { seed, n_avg };
            let r = extract_g0_full(&synth_trace(&cfg)?, cfg.f_mod(), cfg.phi0, &cfg.analyzer, &cfg.scheme, &ModeHint::new(300.0))?;
            g.push(r.g0 / (2.0 * PI));
            se.push(r.g0_stderr / (2.0 * PI));
        }
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        let sd = (g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let rep = se.iter().sum::<f64>() / n;
        println!("n_avg {n_avg:>5}: mean g0 2pi*{mean:.3} Hz, scatter {sd:.3} Hz, reported {rep:.3} Hz");
    }
    Ok(())
}
