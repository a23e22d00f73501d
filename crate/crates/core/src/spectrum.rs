//! Sampled spectral densities and their CSV representation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    Single,
    Double,
}

impl Sidedness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sidedness::Single => "single",
            Sidedness::Double => "double",
        }
    }
}

impl FromStr for Sidedness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Sidedness::Single),
            "double" => Ok(Sidedness::Double),
            other => Err(Error::Format(format!("unknown sidedness `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumUnit {
    /// Frequency noise in ordinary frequency, Hz²/Hz.
    FrequencyNoiseHz,
    /// Frequency noise in angular frequency, (rad/s)²/Hz.
    FrequencyNoiseAngular,
    /// Phase noise, rad²/Hz.
    Phase,
    /// Displacement, m²/Hz.
    Displacement,
    /// Detector signal (W² for direct detection, W² for balanced homodyne), per Hz.
    DetectorSignal,
    Dimensionless,
}

impl SpectrumUnit {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumUnit::FrequencyNoiseHz => "Hz^2/Hz",
            SpectrumUnit::FrequencyNoiseAngular => "rad^2/s^2/Hz",
            SpectrumUnit::Phase => "rad^2/Hz",
            SpectrumUnit::Displacement => "m^2/Hz",
            SpectrumUnit::DetectorSignal => "signal^2/Hz",
            SpectrumUnit::Dimensionless => "1",
        }
    }
}

impl FromStr for SpectrumUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Hz^2/Hz" => SpectrumUnit::FrequencyNoiseHz,
            "rad^2/s^2/Hz" => SpectrumUnit::FrequencyNoiseAngular,
            "rad^2/Hz" => SpectrumUnit::Phase,
            "m^2/Hz" => SpectrumUnit::Displacement,
            "signal^2/Hz" => SpectrumUnit::DetectorSignal,
            "1" => SpectrumUnit::Dimensionless,
            other => return Err(Error::Format(format!("unknown unit `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ordinary frequency grid, Hz, strictly increasing.
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    pub sidedness: Sidedness,
    pub unit: SpectrumUnit,
    pub meta: BTreeMap<String, String>,
}

impl Spectrum {
    pub fn new(
        freqs: Vec<f64>,
        values: Vec<f64>,
        sidedness: Sidedness,
        unit: SpectrumUnit,
    ) -> Result<Self> {
        let s = Spectrum {
            freqs,
            values,
            sidedness,
            unit,
            meta: BTreeMap::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.len() != self.values.len() {
            return Err(Error::Format(format!(
                "{} frequencies but {} values",
                self.freqs.len(),
                self.values.len()
            )));
        }
        if self.freqs.is_empty() {
            return Err(Error::Format("empty spectrum".into()));
        }
        if let Some(w) = self.freqs.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Format(format!(
                "frequency grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if self.sidedness == Sidedness::Single && self.freqs[0] < 0.0 {
            return Err(Error::Format("single-sided spectrum with negative frequency".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Mean grid step (Hz).
    pub fn step(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        (self.freqs[self.len() - 1] - self.freqs[0]) / (self.len() - 1) as f64
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    /// Trapezoidal integral of the samples over the grid.
    pub fn integral(&self) -> f64 {
        self.freqs
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(f, v)| 0.5 * (f[1] - f[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Indices whose frequency lies in `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.freqs.partition_point(|&f| f < lo);
        let b = self.freqs.partition_point(|&f| f <= hi);
        a..b.max(a)
    }

    /// Index of the grid point nearest to `f`.
    pub fn nearest_index(&self, f: f64) -> usize {
        let i = self.freqs.partition_point(|&x| x < f);
        if i == 0 {
            0
        } else if i >= self.len() {
            self.len() - 1
        } else if (self.freqs[i] - f) < (f - self.freqs[i - 1]) {
            i
        } else {
            i - 1
        }
    }

    /// Single-sided view: non-negative frequencies only, values doubled except
    /// at exactly zero frequency.
    pub fn to_single_sided(&self) -> Spectrum {
        if self.sidedness == Sidedness::Single {
            return self.clone();
        }
        let (freqs, values) = self
            .freqs
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= 0.0)
            .map(|(&f, &v)| (f, if f == 0.0 { v } else { 2.0 * v }))
            .unzip();
        Spectrum {
            freqs,
            values,
            sidedness: Sidedness::Single,
            unit: self.unit,
            meta: self.meta.clone(),
        }
    }

    /// Double-sided view: the positive half is halved and mirrored to negative
    /// frequencies.
    pub fn to_double_sided(&self) -> Spectrum {
        if self.sidedness == Sidedness::Double {
            return self.clone();
        }
        let mut freqs = Vec::with_capacity(2 * self.len());
        let mut values = Vec::with_capacity(2 * self.len());
        for (&f, &v) in self.freqs.iter().zip(&self.values).rev() {
            if f > 0.0 {
                freqs.push(-f);
                values.push(0.5 * v);
            }
        }
        for (&f, &v) in self.freqs.iter().zip(&self.values) {
            freqs.push(f);
            values.push(if f == 0.0 { v } else { 0.5 * v });
        }
        Spectrum {
            freqs,
            values,
            sidedness: Sidedness::Double,
            unit: self.unit,
            meta: self.meta.clone(),
        }
    }

    /// Serialize: `# key = value` metadata lines, a `frequency_hz,psd` header,
    /// then one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::new();
        let mut meta = self.meta.clone();
        meta.insert("unit".into(), self.unit.as_str().into());
        meta.insert("sidedness".into(), self.sidedness.as_str().into());
        for (k, v) in &meta {
            writeln!(out, "# {k} = {v}").expect("string write");
        }
        out.push_str("frequency_hz,psd\n");
        for (f, v) in self.freqs.iter().zip(&self.values) {
            writeln!(out, "{f:e},{v:e}").expect("string write");
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Spectrum> {
        let mut meta = BTreeMap::new();
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !seen_header {
                if line != "frequency_hz,psd" {
                    return Err(Error::Format(format!(
                        "line {}: expected header `frequency_hz,psd`, found `{line}`",
                        lineno + 1
                    )));
                }
                seen_header = true;
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| {
                Error::Format(format!("line {}: expected two columns", lineno + 1))
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: bad number `{s}`: {e}", lineno + 1))
                })
            };
            freqs.push(parse(a)?);
            values.push(parse(b)?);
        }
        if !seen_header {
            return Err(Error::Format("missing `frequency_hz,psd` header".into()));
        }
        let unit = match meta.remove("unit") {
            Some(u) => u.parse()?,
            None => SpectrumUnit::DetectorSignal,
        };
        let sidedness = match meta.remove("sidedness") {
            Some(s) => s.parse()?,
            None => Sidedness::Single,
        };
        let s = Spectrum {
            freqs,
            values,
            sidedness,
            unit,
            meta,
        };
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Spectrum {
        Spectrum::new(
            vec![0.0, 1.0, 2.5, 4.0],
            vec![1.0, 2.0, 3.0, 0.5],
            Sidedness::Single,
            SpectrumUnit::Phase,
        )
        .unwrap()
        .with_meta("source", "test")
    }

    #[test]
    fn rejects_non_increasing_grid() {
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0], Sidedness::Single, SpectrumUnit::Phase).is_err());
        assert!(Spectrum::new(vec![1.0], vec![0.0, 0.0], Sidedness::Single, SpectrumUnit::Phase).is_err());
    }

    #[test]
    fn double_sided_halves_and_mirrors() {
        let d = sample().to_double_sided();
        assert_eq!(d.freqs, vec![-4.0, -2.5, -1.0, 0.0, 1.0, 2.5, 4.0]);
        assert_eq!(d.values, vec![0.25, 1.5, 1.0, 1.0, 1.0, 1.5, 0.25]);
    }

    #[test]
    fn csv_round_trip() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("# unit = rad^2/Hz"));
        assert!(text.contains("frequency_hz,psd\n"));
        let back = Spectrum::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_errors() {
        assert!(Spectrum::read_csv("1,2\n".as_bytes()).is_err());
        assert!(Spectrum::read_csv("frequency_hz,psd\n1,x\n".as_bytes()).is_err());
        assert!(Spectrum::read_csv("frequency_hz,psd\n2,1\n1,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn sidedness_round_trip_is_exact(
            steps in prop::collection::vec(1e-3f64..10.0, 1..40),
            vals in prop::collection::vec(0.0f64..1e6, 40),
            start in 0.0f64..5.0,
        ) {
            let mut f = start;
            let freqs: Vec<f64> = steps.iter().map(|d| { f += d; f }).collect();
            let values = vals[..freqs.len()].to_vec();
            let s = Spectrum::new(freqs, values, Sidedness::Single, SpectrumUnit::Phase).unwrap();
            let once = s.to_double_sided().to_single_sided();
            prop_assert_eq!(&once, &s);
            prop_assert_eq!(&once.to_double_sided().to_single_sided(), &s);
        }
    }
}
