//! Lorentzian-plus-background least squares (Levenberg-Marquardt) and the
//! linear template fit used to quantify the calibration tone.
//!
//! Residuals are weighted by the current model (σ_i ∝ model_i), which is the
//! right noise model for power-averaged periodograms. Weights are refreshed a
//! fixed number of times so results are deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Levenberg-Marquardt iterations per weighting pass.
const MAX_ITER: usize = 500;
const REWEIGHT_PASSES: usize = 3;
/// Smallest |model| used for the 1/model weights, relative to the peak.
const WEIGHT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    pub center: f64,
    /// Full width at half maximum, Hz.
    pub fwhm: f64,
    pub height: f64,
}

impl Lorentzian {
    pub fn eval(&self, f: f64) -> f64 {
        let g = 0.5 * self.fwhm;
        let x = f - self.center;
        self.height * g * g / (x * x + g * g)
    }

    /// ∫ over all frequencies, π/2·height·FWHM.
    pub fn area(&self) -> f64 {
        0.5 * std::f64::consts::PI * self.height * self.fwhm
    }
}

/// Background terms added to the Lorentzian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub flat: f64,
    /// (amplitude at `reference_hz`, exponent, reference_hz).
    pub power_law: Option<(f64, f64, f64)>,
}

impl Background {
    pub fn eval(&self, f: f64) -> f64 {
        self.flat
            + self
                .power_law
                .map(|(a, p, r)| a * (f / r).powf(p))
                .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitModel {
    pub lorentzian: Lorentzian,
    pub background: Background,
}

impl FitModel {
    pub fn eval(&self, f: f64) -> f64 {
        self.lorentzian.eval(f) + self.background.eval(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BackgroundModel {
    #[default]
    Flat,
    /// Flat plus A·(f/f_c)^p with f_c the window centre. The exponent is
    /// held at `exponent` unless `fit_exponent` is set.
    PowerLaw { exponent: f64, fit_exponent: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub window: (f64, f64),
    /// Frequency ranges left out of the fit (e.g. around a tone).
    pub exclude: Vec<(f64, f64)>,
    pub background: BackgroundModel,
    pub initial: Option<FitModel>,
}

impl FitOptions {
    pub fn new(window: (f64, f64)) -> Self {
        FitOptions {
            window,
            exclude: Vec::new(),
            background: BackgroundModel::Flat,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    /// Parameter names in covariance order.
    pub names: Vec<&'static str>,
    pub covariance: DMatrix<f64>,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub n_points: usize,
}

impl FitResult {
    fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| *n == name).expect("parameter")
    }

    pub fn stderr(&self, name: &str) -> f64 {
        let i = self.index(name);
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    /// Relative variance of the Lorentzian area from height and FWHM.
    pub fn area_relative_variance(&self) -> f64 {
        let (h, w) = (self.index("height"), self.index("fwhm"));
        let l = &self.model.lorentzian;
        let c = &self.covariance;
        (c[(h, h)] / (l.height * l.height)
            + c[(w, w)] / (l.fwhm * l.fwhm)
            + 2.0 * c[(h, w)] / (l.height * l.fwhm))
            .max(0.0)
    }
}

fn selected(trace: &Spectrum, opts: &FitOptions) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = opts.window;
    trace
        .freqs
        .iter()
        .zip(&trace.values)
        .filter(|(f, _)| **f >= lo && **f <= hi && !opts.exclude.iter().any(|(a, b)| **f >= *a && **f <= *b))
        .map(|(f, v)| (*f, *v))
        .unzip()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Starting values from the data: median background, argmax of the
/// 5-bin-smoothed, background-subtracted data (lowest frequency on ties) and
/// half-height crossings.
pub fn auto_init(freqs: &[f64], values: &[f64]) -> Result<FitModel> {
    let n = values.len();
    if n < 3 {
        return Err(Error::NoPeak(format!("only {n} points")));
    }
    let bg = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - bg).abs()).collect();
    let spread = 1.4826 * median(&dev);
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let a = i.saturating_sub(2);
            let b = (i + 3).min(n);
            values[a..b].iter().sum::<f64>() / (b - a) as f64 - bg
        })
        .collect();
    let mut imax = 0;
    for i in 1..n {
        if smooth[i] > smooth[imax] {
            imax = i;
        }
    }
    let height = smooth[imax];
    if !(height > 0.0) || height < 3.0 * spread {
        return Err(Error::NoPeak(format!(
            "largest excess {height:e} is below 3x the background spread {spread:e}"
        )));
    }
    let half = 0.5 * height;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if smooth[i] < half {
                let t = (smooth[prev] - half) / (smooth[prev] - smooth[i]);
                return Some(freqs[prev] + t * (freqs[i] - freqs[prev]));
            }
            prev = i;
        }
        None
    };
    let left = cross(&mut (0..imax).rev());
    let right = cross(&mut (imax + 1..n));
    let step = (freqs[n - 1] - freqs[0]) / (n - 1) as f64;
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (freqs[imax] - l),
        (None, Some(r)) => 2.0 * (r - freqs[imax]),
        (None, None) => 4.0 * step,
    }
    .max(step);
    let raw = values[imax] - bg;
    Ok(FitModel {
        lorentzian: Lorentzian {
            center: freqs[imax],
            fwhm,
            height: if raw > 0.0 { raw } else { height },
        },
        background: Background {
            flat: bg,
            power_law: None,
        },
    })
}

struct Problem<'a> {
    freqs: &'a [f64],
    values: &'a [f64],
    f_origin: f64,
    f_ref: f64,
    background: BackgroundModel,
}

impl Problem<'_> {
    fn names(&self) -> Vec<&'static str> {
        let mut n = vec!["center", "fwhm", "height", "flat"];
        match self.background {
            BackgroundModel::Flat => {}
            BackgroundModel::PowerLaw { fit_exponent, .. } => {
                n.push("power_law_amplitude");
                if fit_exponent {
                    n.push("power_law_exponent");
                }
            }
        }
        n
    }

    fn exponent(&self, p: &[f64]) -> f64 {
        match self.background {
            BackgroundModel::PowerLaw { exponent, fit_exponent } => {
                if fit_exponent {
                    p[5]
                } else {
                    exponent
                }
            }
            BackgroundModel::Flat => 0.0,
        }
    }

    fn model(&self, p: &[f64]) -> FitModel {
        FitModel {
            lorentzian: Lorentzian {
                center: self.f_origin + p[0],
                fwhm: p[1],
                height: p[2],
            },
            background: Background {
                flat: p[3],
                power_law: match self.background {
                    BackgroundModel::Flat => None,
                    BackgroundModel::PowerLaw { .. } => Some((p[4], self.exponent(p), self.f_ref)),
                },
            },
        }
    }

    fn pack(&self, m: &FitModel) -> Vec<f64> {
        let mut p = vec![
            m.lorentzian.center - self.f_origin,
            m.lorentzian.fwhm,
            m.lorentzian.height,
            m.background.flat,
        ];
        if let BackgroundModel::PowerLaw { exponent, fit_exponent } = self.background {
            let (a, e) = match m.background.power_law {
                Some((a, e, r)) => (a * (self.f_ref / r).powf(e), e),
                None => (0.0, exponent),
            };
            p.push(a);
            if fit_exponent {
                p.push(e);
            }
        }
        p
    }

    /// Model values and Jacobian rows.
    fn eval(&self, p: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.freqs.len();
        let mut jac = DMatrix::zeros(n, p.len());
        let mut m = Vec::with_capacity(n);
        let g = 0.5 * p[1];
        let e = self.exponent(p);
        for (i, &f) in self.freqs.iter().enumerate() {
            let x = f - self.f_origin - p[0];
            let d = x * x + g * g;
            let shape = g * g / d;
            let mut v = p[2] * shape + p[3];
            jac[(i, 0)] = p[2] * g * g * 2.0 * x / (d * d);
            jac[(i, 1)] = p[2] * g * x * x / (d * d);
            jac[(i, 2)] = shape;
            jac[(i, 3)] = 1.0;
            if p.len() > 4 {
                let r = f / self.f_ref;
                let pw = r.powf(e);
                v += p[4] * pw;
                jac[(i, 4)] = pw;
                if p.len() > 5 {
                    jac[(i, 5)] = p[4] * pw * r.ln();
                }
            }
            m.push(v);
        }
        (m, jac)
    }

    fn chi2(&self, p: &[f64], w: &[f64]) -> f64 {
        let (m, _) = self.eval(p);
        m.iter()
            .zip(self.values)
            .zip(w)
            .map(|((mi, yi), wi)| ((yi - mi) * wi).powi(2))
            .sum()
    }
}

fn admissible(p: &[f64]) -> bool {
    p.iter().all(|v| v.is_finite()) && p[1] > 0.0 && p[2] > 0.0
}

/// Solve the Marquardt-scaled normal equations; returns (JᵀJ)⁻¹ as well when
/// `lambda` is zero.
fn scaled_solve(jac: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let jtj = jac.transpose() * jac;
    let d: Vec<f64> = (0..jtj.nrows())
        .map(|i| {
            let v = jtj[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let dm = DMatrix::from_diagonal(&DVector::from_vec(d));
    let mut a = &dm * &jtj * &dm;
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    let g = &dm * (jac.transpose() * r);
    let inv = match a.clone().cholesky() {
        Some(c) => c.inverse(),
        None => a.pseudo_inverse(1e-15).ok()?,
    };
    let step = &dm * (&inv * g);
    Some((step, &dm * inv * &dm))
}

/// Levenberg-Marquardt fit of a Lorentzian plus background inside
/// `opts.window`.
pub fn fit_lorentzian(trace: &Spectrum, opts: &FitOptions) -> Result<FitResult> {
    let (freqs, values) = selected(trace, opts);
    if freqs.len() < 10 {
        return Err(Error::Domain(format!(
            "fit window [{}, {}] Hz holds {} usable points, need >= 10",
            opts.window.0,
            opts.window.1,
            freqs.len()
        )));
    }
    let init = match opts.initial {
        Some(m) => m,
        None => auto_init(&freqs, &values)?,
    };
    let span = freqs[freqs.len() - 1] - freqs[0];
    if span < 3.0 * init.lorentzian.fwhm {
        return Err(Error::Domain(format!(
            "fit window spans {span} Hz, less than 3 FWHM ({} Hz)",
            init.lorentzian.fwhm
        )));
    }
    let prob = Problem {
        freqs: &freqs,
        values: &values,
        f_origin: init.lorentzian.center,
        f_ref: 0.5 * (opts.window.0 + opts.window.1),
        background: opts.background,
    };
    let mut p = prob.pack(&init);
    let npar = p.len();
    let mut iterations = 0;
    let mut w: Vec<f64> = vec![1.0 / values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE); values.len()];
    for pass in 0..=REWEIGHT_PASSES {
        if pass > 0 {
            let (m, _) = prob.eval(&p);
            // a background that dips towards zero must not turn a few wing
            // bins into the whole fit
            let floor = m.iter().fold(0.0f64, |a, v| a.max(v.abs())) * WEIGHT_FLOOR;
            w = m.iter().map(|v| 1.0 / v.abs().max(floor).max(f64::MIN_POSITIVE)).collect();
        }
        let mut lambda = 1e-3;
        let mut chi2 = prob.chi2(&p, &w);
        let mut converged = false;
        for _ in 0..MAX_ITER {
            iterations += 1;
            let (m, j) = prob.eval(&p);
            let r = DVector::from_iterator(
                m.len(),
                m.iter().zip(&values).zip(&w).map(|((mi, yi), wi)| (yi - mi) * wi),
            );
            let jw = DMatrix::from_fn(j.nrows(), npar, |i, k| j[(i, k)] * w[i]);
            let mut accepted = false;
            while lambda < 1e20 {
                if let Some((step, _)) = scaled_solve(&jw, &r, lambda) {
                    let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                    if admissible(&trial) {
                        let c = prob.chi2(&trial, &w);
                        if c <= chi2 {
                            let drop = chi2 - c;
                            p = trial;
                            chi2 = c;
                            lambda = (lambda * 0.1).max(1e-12);
                            accepted = true;
                            if drop <= 1e-10 * c || c == 0.0 {
                                converged = true;
                            }
                            break;
                        }
                    }
                }
                lambda *= 10.0;
            }
            if !accepted || converged {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                iterations,
                chi2,
                best: prob.pack(&prob.model(&p)),
            });
        }
    }
    let (m, j) = prob.eval(&p);
    let jw = DMatrix::from_fn(j.nrows(), npar, |i, k| j[(i, k)] * w[i]);
    let chi2 = prob.chi2(&p, &w);
    let dof = (freqs.len() - npar).max(1) as f64;
    let reduced_chi2 = chi2 / dof;
    let r = DVector::from_iterator(m.len(), m.iter().zip(&values).map(|(a, b)| b - a));
    let (_, inv) = scaled_solve(&jw, &r, 0.0)
        .ok_or_else(|| Error::Numerical("singular normal matrix at the optimum".into()))?;
    Ok(FitResult {
        model: prob.model(&p),
        names: prob.names(),
        covariance: inv * reduced_chi2,
        reduced_chi2,
        iterations,
        n_points: freqs.len(),
    })
}

/// Result of the linear fit `a·F(f − f0) + c0 + c1·(f − f0) + c2·(f − f0)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateFit {
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    /// c0, the background level at f0.
    pub background: f64,
    pub n_points: usize,
}

/// Weighted linear least squares of a fixed template plus a quadratic
/// background over the given points.
pub fn fit_template(freqs: &[f64], values: &[f64], f0: f64, template: impl Fn(f64) -> f64) -> Result<TemplateFit> {
    let n = freqs.len();
    const NB: usize = 4;
    if n < NB + 2 {
        return Err(Error::Domain(format!("template fit needs >= {} points, got {n}", NB + 2)));
    }
    let scale = freqs.iter().map(|f| (f - f0).abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let basis = DMatrix::from_fn(n, NB, |i, k| match k {
        0 => template(freqs[i] - f0),
        1 => 1.0,
        _ => ((freqs[i] - f0) / scale).powi(k as i32 - 1),
    });
    let y = DVector::from_column_slice(values);
    let ymax = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut w = vec![1.0 / ymax; n];
    let mut coef = DVector::zeros(NB);
    let mut cov = DMatrix::zeros(NB, NB);
    for _ in 0..=REWEIGHT_PASSES {
        let a = DMatrix::from_fn(n, NB, |i, k| basis[(i, k)] * w[i]);
        let b = DVector::from_fn(n, |i, _| y[i] * w[i]);
        let ata = a.transpose() * &a;
        let inv = ata
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .or_else(|| ata.pseudo_inverse(1e-15).ok())
            .ok_or_else(|| Error::Numerical("singular template fit".into()))?;
        coef = &inv * (a.transpose() * &b);
        let model = &basis * &coef;
        let chi2: f64 = (0..n).map(|i| ((y[i] - model[i]) * w[i]).powi(2)).sum();
        cov = inv * (chi2 / (n - NB) as f64);
        let floor = model.iter().fold(0.0f64, |a, v| a.max(v.abs())) * WEIGHT_FLOOR;
        w = model.iter().map(|v| 1.0 / v.abs().max(floor).max(f64::MIN_POSITIVE)).collect();
    }
    Ok(TemplateFit {
        amplitude: coef[0],
        amplitude_stderr: cov[(0, 0)].max(0.0).sqrt(),
        background: coef[1],
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{Sidedness, SpectrumUnit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Gamma};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn trace(model: &FitModel, lo: f64, hi: f64, n: usize) -> Spectrum {
        let step = (hi - lo) / (n - 1) as f64;
        let freqs: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
        let values = freqs.iter().map(|f| model.eval(*f)).collect();
        Spectrum::new(freqs, values, Sidedness::Single, SpectrumUnit::DetectorSignal).unwrap()
    }

    fn truth() -> FitModel {
        FitModel {
            lorentzian: Lorentzian {
                center: 1.0013e6,
                fwhm: 850.0,
                height: 3e-9,
            },
            background: Background {
                flat: 2e-11,
                power_law: None,
            },
        }
    }

    #[test]
    fn area_closed_form() {
        let l = truth().lorentzian;
        let (a, _) = crate::quad::integrate_to_inf(|x| l.eval(l.center + x), 0.0, 1e-12);
        assert!(rel(2.0 * a, l.area()) < 1e-9);
    }

    #[test]
    fn noiseless_recovery() {
        let m = truth();
        let t = trace(&m, 0.99e6, 1.01e6, 2001);
        let r = fit_lorentzian(&t, &FitOptions::new((0.99e6, 1.01e6))).unwrap();
        let l = r.model.lorentzian;
        assert!((l.center - m.lorentzian.center).abs() < 1e-6 * m.lorentzian.fwhm);
        assert!(rel(l.fwhm, m.lorentzian.fwhm) < 1e-6);
        assert!(rel(l.height, m.lorentzian.height) < 1e-6);
        assert!(rel(r.model.background.flat, m.background.flat) < 1e-6);
    }

    #[test]
    fn power_law_background_recovery() {
        let mut m = truth();
        m.background.power_law = Some((5e-11, -1.0, 1e6));
        let t = trace(&m, 0.99e6, 1.01e6, 2001);
        let mut o = FitOptions::new((0.99e6, 1.01e6));
        o.background = BackgroundModel::PowerLaw {
            exponent: -1.0,
            fit_exponent: false,
        };
        let r = fit_lorentzian(&t, &o).unwrap();
        assert!(rel(r.model.lorentzian.area(), m.lorentzian.area()) < 1e-6);
        let bg_true = m.background.eval(1.0e6);
        assert!(rel(r.model.background.eval(1.0e6), bg_true) < 1e-6);
    }

    #[test]
    fn flat_trace_has_no_peak() {
        let mut m = truth();
        m.lorentzian.height = 1e-300;
        let t = trace(&m, 0.99e6, 1.01e6, 500);
        let e = fit_lorentzian(&t, &FitOptions::new((0.99e6, 1.01e6))).unwrap_err();
        assert!(matches!(e, Error::NoPeak(_)), "{e:?}");

        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let g = Gamma::new(100.0, 0.01).unwrap();
        let mut t = t;
        for v in t.values.iter_mut() {
            *v = 1.0 * g.sample(&mut rng);
        }
        assert!(matches!(
            fit_lorentzian(&t, &FitOptions::new((0.99e6, 1.01e6))),
            Err(Error::NoPeak(_))
        ));
    }

    #[test]
    fn window_preconditions() {
        let t = trace(&truth(), 0.99e6, 1.01e6, 2001);
        assert!(fit_lorentzian(&t, &FitOptions::new((1.0e6, 1.00009e6))).is_err());
        assert!(fit_lorentzian(&t, &FitOptions::new((1.0009e6, 1.0017e6))).is_err());
    }

    #[test]
    fn excluded_ranges_are_ignored() {
        let m = truth();
        let mut t = trace(&m, 0.99e6, 1.01e6, 2001);
        let i = t.nearest_index(0.995e6);
        t.values[i] *= 1e4;
        let mut o = FitOptions::new((0.99e6, 1.01e6));
        o.exclude.push((0.9949e6, 0.9951e6));
        let r = fit_lorentzian(&t, &o).unwrap();
        assert!(rel(r.model.lorentzian.area(), m.lorentzian.area()) < 1e-6);
    }

    #[test]
    fn noisy_fits_scatter_consistently() {
        let m = truth();
        let clean = trace(&m, 0.99e6, 1.01e6, 2001);
        let g = Gamma::new(100.0, 0.01).unwrap();
        let mut areas = Vec::new();
        let mut errs = Vec::new();
        for seed in 0..20 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut t = clean.clone();
            for v in t.values.iter_mut() {
                *v *= g.sample(&mut rng);
            }
            let r = fit_lorentzian(&t, &FitOptions::new((0.99e6, 1.01e6))).unwrap();
            assert!((r.model.lorentzian.center - m.lorentzian.center).abs() < m.lorentzian.fwhm / 10.0);
            areas.push(r.model.lorentzian.area());
            errs.push(r.area_relative_variance().sqrt());
            assert!((r.reduced_chi2 - 0.01).abs() < 0.002);
        }
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        let sd = (areas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 19.0).sqrt() / mean;
        let reported = errs.iter().sum::<f64>() / errs.len() as f64;
        assert!(rel(mean, m.lorentzian.area()) < 0.03);
        assert!(reported / sd > 0.5 && reported / sd < 2.0, "{reported} vs {sd}");
    }

    #[test]
    fn template_fit_is_exact_on_exact_data() {
        let tmpl = |x: f64| (-x * x / 200.0).exp();
        let freqs: Vec<f64> = (0..81).map(|i| 1000.0 + i as f64 - 40.0).collect();
        let values: Vec<f64> = freqs
            .iter()
            .map(|f| 7.0 * tmpl(f - 1000.0) + 0.5 + 1e-3 * (f - 1000.0))
            .collect();
        let t = fit_template(&freqs, &values, 1000.0, tmpl).unwrap();
        assert!(rel(t.amplitude, 7.0) < 1e-12);
        assert!(rel(t.background, 0.5) < 1e-12);
    }
}
