//! Coupling parameter G from the dielectric-perturbation frequency shift for
//! the Fabry-Perot and whispering-gallery presets under grid refinement.

use g0cal::modeshift::{
    fabry_perot, freq_shift_linearized, g_from_shift, wgm_ring, FABRY_PEROT_CELLS, WGM_RING_CELLS,
};

fn main() -> g0cal::Result<()> {
    for (name, cells, build) in [
        ("fabry-perot", FABRY_PEROT_CELLS, fabry_perot as fn(usize) -> g0cal::Result<_>),
        ("wgm ring", WGM_RING_CELLS, wgm_ring),
    ] {
        println!("{name}");
        for n in cells {
            let p = build(n)?;
            let g = g_from_shift(&p.grid, p.probe_amplitude, p.omega_c)?;
            let lin = p.omega_c * freq_shift_linearized(&p.grid)?;
            println!(
                "  {n:>6} cells: G/G_exact = {:.6} (finite shift), {:.6} (surface form)",
                g / p.g_exact,
                lin / p.g_exact
            );
        }
    }
    Ok(())
}
