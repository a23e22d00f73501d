//! Canonical geometries with analytic fields and known G.

use std::f64::consts::PI;

use super::bessel::{jn, jn_with_derivative, yn, yn_with_derivative};
use super::{FieldGrid, Geometry};
use crate::error::{Error, Result};

const C: f64 = 299_792_458.0;

/// Cells across the Fabry-Pérot gap for the three preset resolutions.
pub const FABRY_PEROT_CELLS: [usize; 3] = [4000, 8000, 16000];
/// Cells per ring radius for the three preset resolutions.
pub const WGM_RING_CELLS: [usize; 3] = [2000, 4000, 8000];

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub grid: FieldGrid,
    /// Optical resonance, rad/s.
    pub omega_c: f64,
    /// Gap length L or ring radius R, m.
    pub length: f64,
    /// −ω_c / length.
    pub g_exact: f64,
    /// Displacement used to probe the shift, m (a hundredth of a cell).
    pub probe_amplitude: f64,
}

/// Planar cavity of gap L = 10 µm between non-dispersive plasma mirrors
/// (ε = −4), 13th longitudinal order. The right mirror moves with u = 1.
///
/// Inside the gap E ∝ sin(k₀x + θ) with tan θ = 1/√|ε|; in the mirrors the
/// field decays as e^{−q|x|}, q = k₀√|ε|, so k₀L = 13π − 2θ and G = −ω_c/L
/// exactly.
pub fn fabry_perot(cells: usize) -> Result<Preset> {
    if cells < 10 {
        return Err(Error::Domain(format!("need >= 10 gap cells, got {cells}")));
    }
    let length = 10e-6;
    let eps_m: f64 = -4.0;
    let order = 13.0;
    let theta = (1.0 / eps_m.abs().sqrt()).atan();
    let k0 = (order * PI - 2.0 * theta) / length;
    let q = k0 * eps_m.abs().sqrt();
    let h = length / cells as f64;
    let mirror = (8.0 / q / h).ceil() as usize;
    let n = cells + 2 * mirror;
    let x0 = -(mirror as f64) * h;
    let s2 = theta.sin().powi(2);
    let mut eps = Vec::with_capacity(n);
    let mut e_sq = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0 + (i as f64 + 0.5) * h;
        let (e, f) = if x < 0.0 {
            (eps_m, s2 * (2.0 * q * x).exp())
        } else if x > length {
            (eps_m, s2 * (-2.0 * q * (x - length)).exp())
        } else {
            (1.0, (k0 * x + theta).sin().powi(2))
        };
        eps.push(e);
        e_sq.push(f);
        u.push(if x > 0.5 * length { [1.0, 0.0] } else { [0.0, 0.0] });
    }
    let omega_c = C * k0;
    Ok(Preset {
        name: "fabry_perot",
        grid: FieldGrid {
            geometry: Geometry::Line { x0, h },
            eps,
            e_sq,
            u,
        },
        omega_c,
        length,
        g_exact: -omega_c / length,
        probe_amplitude: 0.01 * h,
    })
}

/// Characteristic function of a TM whispering-gallery mode of a dielectric
/// disk (index n) with x = n·k·R: n·J_m'(x)·Y_m(x/n) − Y_m'(x/n)·J_m(x).
fn wgm_characteristic(m: u32, n: f64, x: f64) -> f64 {
    let (j, dj) = jn_with_derivative(m, x);
    let (y, dy) = yn_with_derivative(m, x / n);
    n * dj * y - dy * j
}

/// Lowest radial-order root x = n·k·R above x = m.
pub fn wgm_root(m: u32, n: f64) -> Result<f64> {
    let f = |x: f64| wgm_characteristic(m, n, x);
    let mut a = m as f64 + 1e-3;
    let mut fa = f(a);
    let step = 0.05;
    while a < m as f64 + 40.0 {
        let b = a + step;
        let fb = f(b);
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * hi {
                    break;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Err(Error::Numerical(format!("no WGM root for m = {m}, n = {n}")))
}

/// Dielectric disk of radius R = 10 µm and ε = 4, TM mode with azimuthal
/// order 40, on an axisymmetric grid reaching 1.5R. The field is J_m(nkr)
/// inside and the matched Y_m(kr) outside; the boundary moves radially
/// outward with u = 1. Scale invariance gives G = −ω_c/R.
pub fn wgm_ring(cells_per_radius: usize) -> Result<Preset> {
    if cells_per_radius < 10 || !cells_per_radius.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "need an even cell count >= 10 per radius, got {cells_per_radius}"
        )));
    }
    let m = 40;
    let index: f64 = 2.0;
    let radius = 10e-6;
    let x = wgm_root(m, index)?;
    let k = x / (index * radius);
    let h = radius / cells_per_radius as f64;
    let nr = 3 * cells_per_radius / 2;
    let match_amp = jn(m, x) / yn(m, k * radius);
    let mut eps = Vec::with_capacity(nr);
    let mut e_sq = Vec::with_capacity(nr);
    for i in 0..nr {
        let r = (i as f64 + 0.5) * h;
        if r < radius {
            eps.push(index * index);
            e_sq.push(jn(m, index * k * r).powi(2));
        } else {
            eps.push(1.0);
            e_sq.push((match_amp * yn(m, k * r)).powi(2));
        }
    }
    let omega_c = C * k;
    Ok(Preset {
        name: "wgm_ring",
        grid: FieldGrid {
            geometry: Geometry::Axisymmetric {
                dr: h,
                dz: 1.0,
                nr,
                nz: 1,
            },
            eps,
            e_sq,
            u: vec![[1.0, 0.0]; nr],
        },
        omega_c,
        length: radius,
        g_exact: -omega_c / radius,
        probe_amplitude: 0.01 * h,
    })
}
