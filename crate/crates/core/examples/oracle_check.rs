//! Closed-form transduction functions against the sideband-amplitude model of
//! the driven cavity, for mechanical and input phase modulation.

use g0cal::field::{oracle_equivalence, oracle_k_direct, oracle_k_homodyne, Modulation};
use g0cal::physics::CavityParams;
use g0cal::transduction::{k_direct, k_homodyne};

fn main() -> g0cal::Result<()> {
    let p = CavityParams::new(1.0, 0.4, 0.6)?;
    for w in [0.1, 1.0, 5.0] {
        println!(
            "Omega = {w}: K_D closed {:.12e} mech {:.12e} phase {:.12e}",
            k_direct(&p, w),
            oracle_k_direct(&p, w, Modulation::Mechanical)?,
            oracle_k_direct(&p, w, Modulation::InputPhase)?
        );
        println!(
            "          K_H closed {:.12e} mech {:.12e} phase {:.12e}",
            k_homodyne(&p, w),
            oracle_k_homodyne(&p, w, Modulation::Mechanical)?,
            oracle_k_homodyne(&p, w, Modulation::InputPhase)?
        );
    }
    let r = oracle_equivalence(5000, 42)?;
    println!(
        "\n{} random tuples: max rel error direct {:.2e}, homodyne {:.2e}, mech vs phase {:.2e}",
        r.samples, r.max_rel_direct, r.max_rel_homodyne, r.max_rel_mech_vs_phase
    );
    Ok(())
}
