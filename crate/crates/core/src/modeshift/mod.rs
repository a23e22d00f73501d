//! Cavity frequency shift from a dielectric boundary displacement,
//! Δω_c/ω_c = −½ ∫|E|²(ε' − ε) / ∫ε|E|², evaluated cell by cell on a grid,
//! and the resulting coupling G = dω_c/dx.
//!
//! The displaced distribution is ε'(r) = ε(r − a·u(r)), sampled by linear
//! interpolation between cell centres. To first order in a this is the
//! ε(r + u) − ε(r) overlap with the sign fixed such that an outward moving
//! boundary of a high-ε region lowers ω_c.

pub mod bessel;
mod presets;

pub use presets::{fabry_perot, wgm_ring, Preset, FABRY_PEROT_CELLS, WGM_RING_CELLS};

use crate::error::{Error, Result};

/// Largest tolerated |E|² on the outer boundary relative to the maximum.
pub const BOUNDARY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Cells of width `h` starting at `x0`.
    Line { x0: f64, h: f64 },
    /// Axisymmetric (r, z) cells; volume weight 2πr·dr·dz. With nz = 1 the
    /// problem is z-invariant.
    Axisymmetric { dr: f64, dz: f64, nr: usize, nz: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub geometry: Geometry,
    /// Dielectric constant per cell.
    pub eps: Vec<f64>,
    /// |E|² per cell, arbitrary units.
    pub e_sq: Vec<f64>,
    /// Displacement per unit amplitude, (x or r, z) components.
    pub u: Vec<[f64; 2]>,
}

impl FieldGrid {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.eps.len();
        if n < 2 || self.e_sq.len() != n || self.u.len() != n {
            return Err(Error::Domain(format!(
                "grid arrays must be congruent with >= 2 cells (eps {}, e_sq {}, u {})",
                n,
                self.e_sq.len(),
                self.u.len()
            )));
        }
        if let Geometry::Axisymmetric { nr, nz, .. } = self.geometry {
            if nr * nz != n {
                return Err(Error::Domain(format!("{nr}x{nz} grid with {n} cells")));
            }
        }
        if self.e_sq.iter().any(|v| !(*v >= 0.0) || !v.is_finite())
            || self.eps.iter().any(|v| !v.is_finite())
            || self.u.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::Domain("grid values must be finite with e_sq >= 0".into()));
        }
        Ok(())
    }

    fn weight(&self, i: usize) -> f64 {
        match self.geometry {
            Geometry::Line { h, .. } => h,
            Geometry::Axisymmetric { dr, dz, nr, .. } => {
                let r = (i % nr) as f64 * dr + 0.5 * dr;
                2.0 * std::f64::consts::PI * r * dr * dz
            }
        }
    }

    /// Index coordinates of cell `i` (continuous, cell centre = integer).
    fn cell(&self, i: usize) -> (usize, usize) {
        match self.geometry {
            Geometry::Line { .. } => (i, 0),
            Geometry::Axisymmetric { nr, .. } => (i % nr, i / nr),
        }
    }

    fn dims(&self) -> (usize, usize, f64, f64) {
        match self.geometry {
            Geometry::Line { h, .. } => (self.len(), 1, h, 1.0),
            Geometry::Axisymmetric { dr, dz, nr, nz } => (nr, nz, dr, dz),
        }
    }

    fn eps_ij(&self, i: usize, j: usize) -> f64 {
        let (n0, _, _, _) = self.dims();
        self.eps[j * n0 + i]
    }

    /// ε at fractional cell-index position, linear in each direction and
    /// clamped to the edge cells.
    fn eps_interp(&self, p: f64, q: f64) -> f64 {
        let (n0, n1, _, _) = self.dims();
        let lerp_axis = |x: f64, n: usize| -> (usize, usize, f64) {
            let x = x.clamp(0.0, (n - 1) as f64);
            let i = (x.floor() as usize).min(n.saturating_sub(2));
            if n == 1 {
                (0, 0, 0.0)
            } else {
                (i, i + 1, x - i as f64)
            }
        };
        let (i0, i1, tx) = lerp_axis(p, n0);
        let (j0, j1, ty) = lerp_axis(q, n1);
        let a = self.eps_ij(i0, j0) * (1.0 - tx) + self.eps_ij(i1, j0) * tx;
        let b = self.eps_ij(i0, j1) * (1.0 - tx) + self.eps_ij(i1, j1) * tx;
        a * (1.0 - ty) + b * ty
    }

    /// max |E|² on outer boundary cells over max |E|² anywhere. The axis of
    /// an axisymmetric grid is not a boundary, nor are the z faces when nz = 1.
    pub fn boundary_ratio(&self) -> f64 {
        let (n0, n1, _, _) = self.dims();
        let axisym = matches!(self.geometry, Geometry::Axisymmetric { .. });
        let max = self.e_sq.iter().cloned().fold(0.0, f64::max);
        let edge = (0..self.len())
            .filter(|&k| {
                let (i, j) = self.cell(k);
                (i == n0 - 1) || (!axisym && i == 0) || (n1 > 1 && (j == 0 || j == n1 - 1))
            })
            .map(|k| self.e_sq[k])
            .fold(0.0, f64::max);
        if max > 0.0 {
            edge / max
        } else {
            0.0
        }
    }

    fn check_closed(&self) -> Result<()> {
        self.validate()?;
        let ratio = self.boundary_ratio();
        if !(ratio < BOUNDARY_LIMIT) {
            return Err(Error::OpenDomain {
                ratio,
                limit: BOUNDARY_LIMIT,
            });
        }
        Ok(())
    }

    fn energy(&self) -> Result<f64> {
        let den: f64 = (0..self.len())
            .map(|i| self.weight(i) * self.eps[i] * self.e_sq[i])
            .sum();
        if den == 0.0 || !den.is_finite() {
            return Err(Error::Numerical(format!("mode energy integral is {den}")));
        }
        Ok(den)
    }
}

/// Relative shift Δω_c/ω_c for boundary displacement `amplitude`·u.
pub fn freq_shift(grid: &FieldGrid, amplitude: f64) -> Result<f64> {
    grid.check_closed()?;
    let (_, _, h0, h1) = grid.dims();
    let num: f64 = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.cell(k);
            let u = grid.u[k];
            if u == [0.0, 0.0] || grid.e_sq[k] == 0.0 {
                return 0.0;
            }
            let moved = grid.eps_interp(i as f64 - amplitude * u[0] / h0, j as f64 - amplitude * u[1] / h1);
            grid.weight(k) * grid.e_sq[k] * (moved - grid.eps[k])
        })
        .sum();
    Ok(-0.5 * num / grid.energy()?)
}

/// d(Δω_c/ω_c)/da at a = 0 from ½∫|E|² u·∇ε / ∫ε|E|² with central
/// differences for ∇ε (the surface-integral form in volume guise).
pub fn freq_shift_linearized(grid: &FieldGrid) -> Result<f64> {
    grid.check_closed()?;
    let (n0, n1, h0, h1) = grid.dims();
    let grad = |i: usize, j: usize, n: usize, step: f64, along0: bool| -> f64 {
        let idx = if along0 { i } else { j };
        if n < 2 {
            return 0.0;
        }
        let (lo, hi) = (idx.saturating_sub(1), (idx + 1).min(n - 1));
        let e = |t: usize| {
            if along0 {
                grid.eps_ij(t, j)
            } else {
                grid.eps_ij(i, t)
            }
        };
        (e(hi) - e(lo)) / ((hi - lo) as f64 * step)
    };
    let num: f64 = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.cell(k);
            let u = grid.u[k];
            let g = u[0] * grad(i, j, n0, h0, true) + u[1] * grad(i, j, n1, h1, false);
            grid.weight(k) * grid.e_sq[k] * g
        })
        .sum();
    Ok(0.5 * num / grid.energy()?)
}

/// G = ω_c·(Δω_c/ω_c)/a, requiring shift(2a)/shift(a) ∈ [1.99, 2.01].
pub fn g_from_shift(grid: &FieldGrid, probe_amplitude: f64, omega_c: f64) -> Result<f64> {
    if !(probe_amplitude > 0.0) {
        return Err(Error::Domain(format!(
            "probe amplitude must be > 0, got {probe_amplitude}"
        )));
    }
    let s1 = freq_shift(grid, probe_amplitude)?;
    let s2 = freq_shift(grid, 2.0 * probe_amplitude)?;
    if s1 == 0.0 && s2 == 0.0 {
        return Ok(0.0);
    }
    let ratio = s2 / s1;
    if !(1.99..=2.01).contains(&ratio) {
        return Err(Error::Nonlinear { ratio });
    }
    Ok(omega_c * s1 / probe_amplitude)
}
