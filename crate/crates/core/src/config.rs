//! Flat `key = value` run configuration. Physical quantities are entered in
//! ordinary frequency (Hz) with the unit in the key name; `#` starts a
//! comment. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::physics::{units, CavityParams, MechMode};
use crate::specest::{AnalyzerModel, WindowKind};
use crate::synth::{default_tone_offset, BackgroundTerm, FrequencyGrid, NoiseRealization, SynthConfig};
use crate::transduction::{optimal_detuning_direct, DetectionKind, DetectionScheme};

pub const KEYS: &[&str] = &[
    "kappa_hz",
    "eta_c",
    "detuning_hz",
    "omega_m_hz",
    "gamma_m_hz",
    "temperature_k",
    "g0_hz",
    "meff_kg",
    "g_hz_per_m",
    "phi0_rad",
    "f_mod_hz",
    "window",
    "rbw_hz",
    "span_hz",
    "center_hz",
    "n_points",
    "detection",
    "lo_power_ratio",
    "p_in_w",
    "backgrounds",
    "seed",
    "n_avg",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    /// key → (value, line number; 0 for entries set programmatically).
    entries: BTreeMap<String, (String, usize)>,
}

impl FromStr for RunConfig {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                key: body.to_string(),
                msg: "expected `key = value`".into(),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config {
                    line,
                    key: k.into(),
                    msg: "unknown key".into(),
                });
            }
            if v.is_empty() {
                return Err(Error::Config {
                    line,
                    key: k.into(),
                    msg: "empty value".into(),
                });
            }
            if let Some((_, first)) = entries.insert(k.to_string(), (v.to_string(), line)) {
                return Err(Error::Config {
                    line,
                    key: k.into(),
                    msg: format!("repeated (first set on line {first})"),
                });
            }
        }
        Ok(RunConfig { entries })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    /// Set or override a key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line: 0,
                key: key.into(),
                msg: "unknown key".into(),
            });
        }
        self.entries.insert(key.into(), (value.to_string(), 0));
        Ok(())
    }

    /// Fill the listed keys not yet present from `other`.
    pub fn fill_from(&mut self, other: &BTreeMap<String, String>, keys: &[&str]) {
        for k in keys {
            if let Some(v) = other.get(*k) {
                self.entries.entry(k.to_string()).or_insert((v.clone(), 0));
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// All entries in key order, as given.
    pub fn echo(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::Config {
            line: self.entries.get(key).map_or(0, |(_, l)| *l),
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn parse_as<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_as(key)?.ok_or_else(|| self.err(key, "required key missing"))
    }

    /// Attach the key and its line to a non-config error.
    fn checked<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Config { .. } => e,
            other => self.err(key, other.to_string()),
        })
    }

    pub fn detection(&self) -> Result<DetectionKind> {
        match self.get("detection") {
            Some("direct") => Ok(DetectionKind::Direct),
            Some("homodyne") => Ok(DetectionKind::Homodyne),
            Some(v) => Err(self.err("detection", format!("`{v}` is not direct|homodyne"))),
            None => Err(self.err("detection", "required key missing")),
        }
    }

    /// Detection scheme; `detuning_hz = optimal` picks the direct-detection
    /// optimum at the mechanical frequency (slope or single branch).
    pub fn scheme(&self) -> Result<DetectionScheme> {
        let kind = self.detection()?;
        let kappa = units::angular(self.required::<f64>("kappa_hz")?);
        let eta_c: f64 = self.required("eta_c")?;
        let detuning = match self.get("detuning_hz") {
            Some("optimal") => {
                let omega_m = units::angular(self.required::<f64>("omega_m_hz")?);
                let opts = self.checked("detuning_hz", optimal_detuning_direct(kappa, eta_c, omega_m))?;
                opts[0].detuning
            }
            _ => units::angular(self.parse_as::<f64>("detuning_hz")?.unwrap_or(0.0)),
        };
        let params = self.checked("kappa_hz", CavityParams::new(kappa, eta_c, detuning))?;
        let scheme = match kind {
            DetectionKind::Direct => DetectionScheme::direct(params),
            DetectionKind::Homodyne => {
                DetectionScheme::homodyne(params, self.parse_as("lo_power_ratio")?.unwrap_or(1.0))
            }
        };
        self.checked("lo_power_ratio", scheme.validate())?;
        Ok(scheme)
    }

    pub fn temperature(&self) -> Result<f64> {
        Ok(self.parse_as("temperature_k")?.unwrap_or(300.0))
    }

    pub fn mode(&self) -> Result<MechMode> {
        let omega_m = units::angular(self.required::<f64>("omega_m_hz")?);
        let gamma_m = units::angular(self.required::<f64>("gamma_m_hz")?);
        let t = self.temperature()?;
        let g0: Option<f64> = self.parse_as("g0_hz")?;
        let meff: Option<f64> = self.parse_as("meff_kg")?;
        let g: Option<f64> = self.parse_as("g_hz_per_m")?;
        let mode = match (g0, meff, g) {
            (Some(g0), None, None) => MechMode::with_g0(omega_m, gamma_m, t, units::angular(g0)),
            (None, Some(m), Some(g)) => MechMode::with_mass(omega_m, gamma_m, t, m, units::angular(g)),
            _ => return Err(self.err("g0_hz", "give either g0_hz or both meff_kg and g_hz_per_m")),
        };
        self.checked("omega_m_hz", mode)
    }

    /// Analyzer from `window` and `rbw_hz` (the ENBW). `window = gaussian`
    /// takes its σ from the ENBW; `gaussian:<sigma_hz>` fixes it directly.
    pub fn analyzer(&self, default_enbw: Option<f64>) -> Result<AnalyzerModel> {
        let window = self.get("window").unwrap_or("gaussian");
        let enbw: Option<f64> = self.parse_as("rbw_hz")?;
        let r = if window == "gaussian" {
            let enbw = enbw
                .or(default_enbw)
                .ok_or_else(|| self.err("rbw_hz", "required key missing"))?;
            AnalyzerModel::gaussian_enbw(enbw)
        } else {
            let kind: WindowKind = self.checked("window", window.parse())?;
            match (kind, enbw.or(default_enbw)) {
                (WindowKind::GaussianRbw { sigma_hz }, None) => AnalyzerModel::gaussian(sigma_hz),
                (kind, Some(e)) => AnalyzerModel::new(kind, e),
                (_, None) => return Err(self.err("rbw_hz", "required key missing")),
            }
        };
        self.checked("rbw_hz", r)
    }

    pub fn noise(&self) -> Result<NoiseRealization> {
        Ok(match self.parse_as::<u32>("n_avg")? {
            None => NoiseRealization::None,
            Some(n_avg) => NoiseRealization::Chi2 {
                seed: self.parse_as("seed")?.unwrap_or(0),
                n_avg,
            },
        })
    }

    /// Forward-model configuration with defaults: T = 300 K, φ₀ = 0.01 rad,
    /// P_in = 1 mW, ENBW = Γ_m/40, tone 20·max(Γ_m, ENBW) below the mode, a
    /// grid covering tone and mode with ±20 linewidths and 4 points per ENBW.
    pub fn synth_config(&self) -> Result<SynthConfig> {
        let scheme = self.scheme()?;
        let mode = self.mode()?;
        let gamma_hz = units::ordinary(mode.gamma_m);
        let f_m = units::ordinary(mode.omega_m);
        let analyzer = self.analyzer(Some(gamma_hz / 40.0))?;
        let f_mod = self
            .parse_as("f_mod_hz")?
            .unwrap_or(f_m - default_tone_offset(&mode, &analyzer));
        let span = self
            .parse_as("span_hz")?
            .unwrap_or((f_m - f_mod).abs() + 40.0 * gamma_hz);
        let center = self.parse_as("center_hz")?.unwrap_or(0.5 * (f_m + f_mod));
        let n_points = self
            .parse_as("n_points")?
            .unwrap_or((4.0 * span / analyzer.enbw).ceil() as usize + 1);
        let cfg = SynthConfig {
            scheme,
            mode,
            p_in: self.parse_as("p_in_w")?.unwrap_or(1e-3),
            phi0: self.parse_as("phi0_rad")?.unwrap_or(0.01),
            omega_mod: 2.0 * PI * f_mod,
            analyzer,
            grid: FrequencyGrid::centered(center, span, n_points),
            backgrounds: self.checked(
                "backgrounds",
                BackgroundTerm::parse_list(self.get("backgrounds").unwrap_or("none")),
            )?,
            noise: self.noise()?,
        };
        self.checked("span_hz", cfg.grid.validate())?;
        if !(cfg.p_in > 0.0) {
            return Err(self.err("p_in_w", "must be > 0"));
        }
        if let NoiseRealization::Chi2 { n_avg: 0, .. } = cfg.noise {
            return Err(self.err("n_avg", "must be >= 1"));
        }
        match cfg.validate() {
            Ok(_) => Ok(cfg),
            Err(e @ Error::Linearization { .. }) => Err(self.err("phi0_rad", e.to_string())),
            Err(e) if e.to_string().contains("phi0") => Err(self.err("phi0_rad", e.to_string())),
            Err(e) => Err(self.err("f_mod_hz", e.to_string())),
        }
    }
}
