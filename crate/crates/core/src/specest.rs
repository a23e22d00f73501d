//! Spectrum-analyzer model: resolution-bandwidth filter shapes, effective noise
//! bandwidth, rendering of a spectrally pure tone through the filter, and a
//! windowed periodogram for time-domain cross-checks.
//!
//! Filters are normalized so that ∫ F(f) df = 1 with f in Hz, which makes the
//! displayed height of a tone of mean-square weight w equal to w·F(0) =
//! w / ENBW.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::spectrum::{Sidedness, Spectrum, SpectrumUnit};

const FLATTOP: [f64; 5] = [
    0.215_578_95,
    0.416_631_58,
    0.277_263_158,
    0.083_578_947,
    0.006_947_368,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowKind {
    Rectangular,
    Hann,
    /// Gaussian resolution filter with standard deviation `sigma_hz`.
    GaussianRbw { sigma_hz: f64 },
    Flattop,
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowKind::Rectangular => write!(f, "rectangular"),
            WindowKind::Hann => write!(f, "hann"),
            WindowKind::GaussianRbw { sigma_hz } => write!(f, "gaussian:{sigma_hz}"),
            WindowKind::Flattop => write!(f, "flattop"),
        }
    }
}

impl FromStr for WindowKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "rectangular" => WindowKind::Rectangular,
            "hann" => WindowKind::Hann,
            "flattop" => WindowKind::Flattop,
            _ => {
                let sigma = s
                    .strip_prefix("gaussian:")
                    .ok_or_else(|| Error::Format(format!("unknown window `{s}`")))?;
                let sigma_hz: f64 = sigma
                    .parse()
                    .map_err(|_| Error::Format(format!("bad gaussian sigma `{sigma}`")))?;
                if !(sigma_hz > 0.0) {
                    return Err(Error::Format(format!("gaussian sigma must be > 0, got {sigma_hz}")));
                }
                WindowKind::GaussianRbw { sigma_hz }
            }
        })
    }
}

impl WindowKind {
    /// Coefficients a_k of the centred cosine-sum form Σ a_k cos(2πk t/T).
    fn cosine_terms(&self) -> Option<&'static [f64]> {
        match self {
            WindowKind::Rectangular => Some(&[1.0]),
            WindowKind::Hann => Some(&[0.5, 0.5]),
            WindowKind::Flattop => Some(&FLATTOP),
            WindowKind::GaussianRbw { .. } => None,
        }
    }

    /// Analytic ENBW in DFT bins of a cosine-sum window; `None` for the
    /// Gaussian filter, which is specified directly in Hz.
    pub fn enbw_bins(&self) -> Option<f64> {
        let a = self.cosine_terms()?;
        let sq: f64 = a[0] * a[0] + 0.5 * a[1..].iter().map(|x| x * x).sum::<f64>();
        Some(sq / (a[0] * a[0]))
    }

    /// Sampled window of length `n`. `periodic` selects the DFT-even form
    /// (period n) instead of the symmetric form (period n − 1).
    pub fn samples(&self, n: usize, periodic: bool, fs: f64) -> Vec<f64> {
        let period = if periodic || n < 2 { n as f64 } else { (n - 1) as f64 };
        match self.cosine_terms() {
            Some(a) => (0..n)
                .map(|i| {
                    let x = 2.0 * PI * i as f64 / period;
                    a.iter()
                        .enumerate()
                        .map(|(k, &ak)| if k % 2 == 0 { ak } else { -ak } * (k as f64 * x).cos())
                        .sum()
                })
                .collect(),
            None => {
                let WindowKind::GaussianRbw { sigma_hz } = *self else { unreachable!() };
                // |FT|² of exp(-t²/2τ²) is a Gaussian in f with σ = 1/(2√2 π τ)
                let tau = 1.0 / (2.0 * 2f64.sqrt() * PI * sigma_hz);
                let mid = period / 2.0;
                (0..n)
                    .map(|i| {
                        let t = (i as f64 - mid) / fs;
                        (-t * t / (2.0 * tau * tau)).exp()
                    })
                    .collect()
            }
        }
    }
}

/// Discrete ENBW of a sampled window, f_s·Σw²/(Σw)² in Hz.
pub fn enbw_of_samples(w: &[f64], fs: f64) -> f64 {
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    fs * s2 / (s1 * s1)
}

/// ENBW in Hz: for cosine-sum windows of `n` samples at `fs`, the discrete
/// value of the symmetric window; for the Gaussian filter σ√(2π).
pub fn enbw_of(window: WindowKind, n: usize, fs: f64) -> f64 {
    match window {
        WindowKind::GaussianRbw { sigma_hz } => sigma_hz * (2.0 * PI).sqrt(),
        _ => enbw_of_samples(&window.samples(n, false, fs), fs),
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Resolution filter of an analyzer: window shape plus its ENBW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerModel {
    pub window: WindowKind,
    /// Effective noise bandwidth, Hz.
    pub enbw: f64,
}

impl AnalyzerModel {
    /// Analyzer with the given window and ENBW. For a Gaussian window the
    /// ENBW must match σ√(2π).
    pub fn new(window: WindowKind, enbw: f64) -> Result<Self> {
        if !(enbw > 0.0) {
            return Err(Error::Domain(format!("ENBW must be > 0, got {enbw}")));
        }
        if let WindowKind::GaussianRbw { sigma_hz } = window {
            let expect = sigma_hz * (2.0 * PI).sqrt();
            if ((enbw - expect) / expect).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "gaussian sigma {sigma_hz} Hz implies ENBW {expect} Hz, not {enbw} Hz"
                )));
            }
        }
        Ok(AnalyzerModel { window, enbw })
    }

    pub fn gaussian(sigma_hz: f64) -> Result<Self> {
        Self::new(
            WindowKind::GaussianRbw { sigma_hz },
            sigma_hz * (2.0 * PI).sqrt(),
        )
    }

    /// Gaussian analyzer with the requested ENBW.
    pub fn gaussian_enbw(enbw: f64) -> Result<Self> {
        Self::gaussian(enbw / (2.0 * PI).sqrt())
    }

    /// Record duration T for a cosine-sum window.
    fn duration(&self) -> Option<f64> {
        self.window.enbw_bins().map(|b| b / self.enbw)
    }

    /// Filter lineshape F(f), normalized to unit area in Hz.
    pub fn filter(&self, f: f64) -> f64 {
        match self.window {
            WindowKind::GaussianRbw { sigma_hz } => {
                (-f * f / (2.0 * sigma_hz * sigma_hz)).exp() / (sigma_hz * (2.0 * PI).sqrt())
            }
            _ => {
                let a = self.window.cosine_terms().expect("cosine window");
                let t = self.duration().expect("cosine window");
                let x = f * t;
                let amp = a[0] * sinc(x)
                    + a[1..]
                        .iter()
                        .enumerate()
                        .map(|(j, ak)| {
                            let k = (j + 1) as f64;
                            0.5 * ak * (sinc(x - k) + sinc(x + k))
                        })
                        .sum::<f64>();
                let norm = a[0] * a[0] + 0.5 * a[1..].iter().map(|v| v * v).sum::<f64>();
                t * amp * amp / norm
            }
        }
    }
}

/// Add the filter-shaped image of a pure tone of mean-square weight `weight`
/// (the tone's two delta lines at ±f_tone each carry half of it).
pub fn convolve_tone(
    spectrum: &Spectrum,
    tone_freq: f64,
    weight: f64,
    analyzer: &AnalyzerModel,
) -> Result<Spectrum> {
    let lo = spectrum.freqs[0];
    let hi = spectrum.freqs[spectrum.len() - 1];
    let inside = match spectrum.sidedness {
        Sidedness::Single => (lo..=hi).contains(&tone_freq),
        Sidedness::Double => (lo..=hi).contains(&tone_freq) || (lo..=hi).contains(&-tone_freq),
    };
    if !inside {
        return Err(Error::Domain(format!(
            "tone at {tone_freq} Hz lies outside the grid [{lo}, {hi}] Hz"
        )));
    }
    let scale = match spectrum.sidedness {
        Sidedness::Single => weight,
        Sidedness::Double => 0.5 * weight,
    };
    let mut out = spectrum.clone();
    for (v, &f) in out.values.iter_mut().zip(&spectrum.freqs) {
        *v += scale * (analyzer.filter(f - tone_freq) + analyzer.filter(f + tone_freq));
    }
    Ok(out)
}

/// Single-sided periodogram of a real series with DC and Nyquist bins not
/// doubled. Scaled so that Σ PSD·Δf equals Σ(x w)² / Σ w².
pub fn periodogram(samples: &[f64], fs: f64, window: WindowKind) -> Result<Spectrum> {
    welch(samples, fs, window, samples.len(), 0)
}

/// Average of windowed periodograms over segments of `seg_len` samples that
/// overlap by `overlap` samples.
pub fn welch(
    samples: &[f64],
    fs: f64,
    window: WindowKind,
    seg_len: usize,
    overlap: usize,
) -> Result<Spectrum> {
    if samples.len() < 2 || seg_len < 2 {
        return Err(Error::Domain("periodogram needs at least 2 samples".into()));
    }
    if !(fs > 0.0) {
        return Err(Error::Domain(format!("sample rate must be > 0, got {fs}")));
    }
    if seg_len > samples.len() || overlap >= seg_len {
        return Err(Error::Domain(format!(
            "segment length {seg_len} / overlap {overlap} incompatible with {} samples",
            samples.len()
        )));
    }
    let w = window.samples(seg_len, true, fs);
    let s2: f64 = w.iter().map(|x| x * x).sum();
    let n_bins = seg_len / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg_len);
    let hop = seg_len - overlap;
    let mut acc = vec![0.0; n_bins];
    let mut count = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); seg_len];
    let mut start = 0;
    while start + seg_len <= samples.len() {
        for (b, (x, wi)) in buf.iter_mut().zip(samples[start..start + seg_len].iter().zip(&w)) {
            *b = Complex64::new(x * wi, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let nyquist = seg_len.is_multiple_of(2);
    let values = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (nyquist && k == n_bins - 1) { 1.0 } else { 2.0 };
            one_sided * a / (count as f64 * fs * s2)
        })
        .collect();
    let df = fs / seg_len as f64;
    let freqs = (0..n_bins).map(|k| k as f64 * df).collect();
    let enbw = enbw_of_samples(&w, fs);
    Ok(Spectrum::new(freqs, values, Sidedness::Single, SpectrumUnit::Dimensionless)?
        .with_meta("window", window)
        .with_meta("enbw_hz", enbw)
        .with_meta("segments", count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Normal};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn window_names_round_trip() {
        for s in ["rectangular", "hann", "flattop", "gaussian:12.5"] {
            let w: WindowKind = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        assert!("hamming".parse::<WindowKind>().is_err());
        assert!("gaussian:-1".parse::<WindowKind>().is_err());
    }

    #[test]
    fn rectangular_enbw_is_one_bin() {
        let fs = 1000.0;
        assert!(rel(enbw_of(WindowKind::Rectangular, 250, fs), fs / 250.0) < 1e-15);
    }

    #[test]
    fn hann_enbw_converges_to_one_and_a_half_bins() {
        let mut prev = f64::INFINITY;
        for p in 10..=16 {
            let n = 1usize << p;
            let bins = enbw_of(WindowKind::Hann, n, 1.0) * n as f64;
            let err = (bins - 1.5).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
        assert_eq!(WindowKind::Hann.enbw_bins(), Some(1.5));
    }

    #[test]
    fn flattop_enbw_converges() {
        let exact = WindowKind::Flattop.enbw_bins().unwrap();
        assert!((exact - 3.77).abs() < 0.01);
        let mut prev = f64::INFINITY;
        for p in 10..=16 {
            let n = 1usize << p;
            let err = (enbw_of(WindowKind::Flattop, n, 1.0) * n as f64 - exact).abs();
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn gaussian_enbw_matches_quadrature() {
        let an = AnalyzerModel::gaussian(37.0).unwrap();
        let (area, _) = crate::quad::integrate(|f| an.filter(f), -800.0, 800.0, 1e-13);
        assert!(rel(area, 1.0) < 1e-10);
        assert!(rel(1.0 / an.filter(0.0), 37.0 * (2.0 * PI).sqrt()) < 1e-12);
        assert!(AnalyzerModel::new(WindowKind::GaussianRbw { sigma_hz: 1.0 }, 3.0).is_err());
    }

    #[test]
    fn cosine_filters_have_unit_area_and_peak_over_enbw() {
        for w in [WindowKind::Hann, WindowKind::Flattop] {
            let an = AnalyzerModel::new(w, 10.0).unwrap();
            assert!(rel(an.filter(0.0), 0.1) < 1e-12);
            let t = an.duration().unwrap();
            // sampled on a 1/T grid the kernel sums to its area at any offset
            for off in [0.0, 0.3, 0.5] {
                let s: f64 = (-400..=400).map(|k| an.filter((k as f64 + off) / t) / t).sum();
                assert!(rel(s, 1.0) < 1e-6, "{w} {off} {s}");
            }
        }
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Spectrum {
        let step = (hi - lo) / (n - 1) as f64;
        Spectrum::new(
            (0..n).map(|i| lo + i as f64 * step).collect(),
            vec![0.0; n],
            Sidedness::Single,
            SpectrumUnit::DetectorSignal,
        )
        .unwrap()
    }

    #[test]
    fn rectangular_tone_is_a_single_bin() {
        let an = AnalyzerModel::new(WindowKind::Rectangular, 1.0).unwrap();
        let s = convolve_tone(&grid(0.0, 100.0, 101), 40.0, 2.5, &an).unwrap();
        assert!(rel(s.values[40], 2.5) < 1e-15);
        assert!(s.values[39].abs() < 1e-28 && s.values[41].abs() < 1e-28);
    }

    #[test]
    fn tone_area_and_height() {
        let an = AnalyzerModel::gaussian_enbw(10.0).unwrap();
        let s = convolve_tone(&grid(900.0, 1100.0, 2001), 1000.03, 3.0, &an).unwrap();
        let area: f64 = s.values.iter().sum::<f64>() * s.step();
        assert!(rel(area, 3.0) < 1e-6, "{area}");
        let an2 = AnalyzerModel::gaussian_enbw(20.0).unwrap();
        let s2 = convolve_tone(&grid(900.0, 1100.0, 2001), 1000.0, 3.0, &an2).unwrap();
        let s1 = convolve_tone(&grid(900.0, 1100.0, 2001), 1000.0, 3.0, &an).unwrap();
        assert!(rel(s2.values[1000] / s1.values[1000], 0.5) < 1e-12);
        assert!(rel(s1.values[1000], 0.3) < 1e-12);
        let a2: f64 = s2.values.iter().sum::<f64>() * s2.step();
        assert!(rel(a2, 3.0) < 1e-6);
    }

    #[test]
    fn tone_outside_grid_is_rejected() {
        let an = AnalyzerModel::gaussian_enbw(10.0).unwrap();
        assert!(convolve_tone(&grid(0.0, 10.0, 11), 20.0, 1.0, &an).is_err());
    }

    #[test]
    fn periodogram_parseval_and_sine() {
        let n = 4096;
        let fs = 1000.0;
        let k0 = 100.0;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * k0 * i as f64 / n as f64).sin())
            .collect();
        let p = periodogram(&x, fs, WindowKind::Rectangular).unwrap();
        let area: f64 = p.values.iter().sum::<f64>() * fs / n as f64;
        assert!(rel(area, 0.5) < 1e-10);

        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..n).map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
        for win in [WindowKind::Hann, WindowKind::Flattop, WindowKind::Rectangular] {
            let p = periodogram(&noise, fs, win).unwrap();
            let w = win.samples(n, true, fs);
            let ms: f64 = noise.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum::<f64>()
                / w.iter().map(|b| b * b).sum::<f64>();
            let area: f64 = p.values.iter().sum::<f64>() * fs / n as f64;
            assert!(rel(area, ms) < 1e-10);
        }
    }

    #[test]
    fn white_noise_level() {
        let fs = 2000.0;
        let sigma: f64 = 0.7;
        let seg = 512;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let dist = Normal::new(0.0, sigma).unwrap();
        let x: Vec<f64> = (0..seg * 200).map(|_| dist.sample(&mut rng)).collect();
        let p = welch(&x, fs, WindowKind::Hann, seg, 0).unwrap();
        let level = sigma * sigma / (fs / 2.0);
        let inner = &p.values[1..p.len() - 1];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!(rel(mean, level) < 0.02);
        // 200 averages: per-bin scatter ~7 %; bins stay within ±30 %
        assert!(inner.iter().all(|v| rel(*v, level) < 0.3));
    }

    #[test]
    fn periodogram_tone_height_matches_rendered_tone() {
        let fs = 1024.0;
        let n = 1024;
        let phi0 = 0.01;
        let x: Vec<f64> = (0..n)
            .map(|i| phi0 * (2.0 * PI * 200.0 * i as f64 / fs).cos())
            .collect();
        let p = periodogram(&x, fs, WindowKind::Hann).unwrap();
        let enbw: f64 = p.meta["enbw_hz"].parse().unwrap();
        assert!(rel(enbw, 1.5) < 1e-12);
        let an = AnalyzerModel::new(WindowKind::Hann, enbw).unwrap();
        let rendered = convolve_tone(&p.clone().tap_zero(), 200.0, phi0 * phi0 / 2.0, &an).unwrap();
        for k in 195..=205 {
            assert!((p.values[k] - rendered.values[k]).abs() < 1e-12 * rendered.values[200]);
        }
        assert!(rel(p.values[200], phi0 * phi0 / 2.0 / enbw) < 1e-12);
    }

    trait TapZero {
        fn tap_zero(self) -> Self;
    }
    impl TapZero for Spectrum {
        fn tap_zero(mut self) -> Self {
            self.values.iter_mut().for_each(|v| *v = 0.0);
            self
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(periodogram(&[], 1.0, WindowKind::Hann).is_err());
        assert!(periodogram(&[1.0], 1.0, WindowKind::Hann).is_err());
    }
}
