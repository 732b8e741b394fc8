//! Without disorder the block entropy grows like `(1/3) ln L`; with disorder
//! it saturates.

use eelab::lattice::{build_hamiltonian, PotentialField};
use eelab::prelude::*;
use eelab::spectral::fermi_projection_unguarded;

fn main() -> Result<()> {
    let geometry = BoxGeometry::line(400, 0)?;
    let clean = fermi_projection_unguarded(
        &eig_sym(&build_hamiltonian(&PotentialField::zero(geometry)))?,
        2.0,
    )?;
    let field = sample_potential(&DensityModel::exponential(1.0), geometry, 1, 0)?;
    let dirty = fermi_projection_direct(&build_hamiltonian(&field), 2.0)?;
    println!("   L   clean S   (1/3) ln L   disordered S");
    for m in [5, 10, 20, 40, 80] {
        let l = 2 * m + 1;
        println!(
            "{l:>4}   {:.4}    {:.4}       {:.4}",
            block_entropy(&clean, m)?.value,
            (l as f64).ln() / 3.0,
            block_entropy(&dirty, m)?.value
        );
    }
    Ok(())
}
