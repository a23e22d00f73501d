//! K(Ω) for direct and homodyne detection, and the optimal direct-detection
//! detuning on either side of Ω = √2κ.

use g0cal::physics::CavityParams;
use g0cal::transduction::{k_direct, k_homodyne, optimal_detuning_direct};

fn main() -> g0cal::Result<()> {
    let kappa = 1.0;
    let eta_c = 0.5;
    println!("{:>10} {:>12} {:>12} {:>12}", "Omega/k", "K_H(D=0)", "K_D(D=k/2)", "K_D(opt)");
    for i in 0..13 {
        let w = kappa * 10f64.powf(-2.0 + i as f64 / 3.0);
        let hom = k_homodyne(&CavityParams::new(kappa, eta_c, 0.0)?, w);
        let slope = k_direct(&CavityParams::new(kappa, eta_c, 0.5 * kappa)?, w);
        let best = optimal_detuning_direct(kappa, eta_c, w)?;
        println!("{:>10.4} {:>12.5e} {:>12.5e} {:>12.5e}", w / kappa, hom, slope, best[0].k);
    }

    println!();
    for w in [0.5, 1.0, 3.0, 10.0] {
        for o in optimal_detuning_direct(kappa, eta_c, w)?.iter().filter(|o| o.detuning > 0.0) {
            println!(
                "Omega = {w:>4} kappa: {:?} branch at Delta = {:.6} kappa, K_D = {:.6} (closed form {:.6})",
                o.branch, o.detuning, o.k, o.k_closed_form
            );
        }
    }
    Ok(())
}
