//! ENBW bookkeeping: a sampled phase-modulated signal, its Welch estimate, and
//! the tone area read back as peak height times ENBW.

use std::f64::consts::PI;

use g0cal::analysis::measure_tone;
use g0cal::specest::{enbw_of, welch, AnalyzerModel, WindowKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

fn main() -> g0cal::Result<()> {
    let fs = 100e3;
    let n = 1 << 18;
    let seg = 4096;
    let (f0, amp) = (12_345.0, 0.01);
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = rng.sample(StandardNormal);
            amp * (2.0 * PI * f0 * i as f64 / fs).sin() + 1e-4 * e
        })
        .collect();
    println!("expected mean square {:.6e}", amp * amp / 2.0);
    for window in [WindowKind::Rectangular, WindowKind::Hann, WindowKind::Flattop] {
        let s = welch(&x, fs, window, seg, seg / 2)?;
        let enbw = enbw_of(window, seg, fs);
        let tone = measure_tone(&s, f0, &AnalyzerModel::new(window, enbw)?)?;
        let i = s.nearest_index(f0);
        println!(
            "{window:>12}: ENBW {:.4} bins, peak*ENBW {:.6e}, template area {:.6e}",
            enbw * seg as f64 / fs,
            s.values[i] * enbw,
            tone.area
        );
    }
    Ok(())
}
