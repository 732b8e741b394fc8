//! Off-diagonal decay of the Fermi projection: one realization, then the
//! ensemble mean of `|P(0, r)|` with an exponential fit.

use eelab::ensemble::projection_decay_scan;
use eelab::lattice::build_hamiltonian;
use eelab::prelude::*;
use eelab::spectral::projection_decay_profile;

fn main() -> Result<()> {
    let geometry = BoxGeometry::line(256, 0)?;
    let density = DensityModel::exponential(1.0);

    let field = sample_potential(&density, geometry, 5, 0)?;
    let p = fermi_projection_direct(&build_hamiltonian(&field), 1.0)?;
    println!("rank {} of {}", p.rank, geometry.num_sites());
    for (r, v) in projection_decay_profile(&p, geometry.origin(), 10)? {
        println!("  |P(0,{r})| = {v:.3e}");
    }

    let config = EnsembleConfig::new(geometry, density, 1.0, 300, 5);
    let scan = projection_decay_scan(&config, 20)?;
    println!(
        "mean |P(0,r)| decays at rate {:.3} (r² {:.4})",
        scan.fit.rate, scan.fit.r_squared
    );
    Ok(())
}
