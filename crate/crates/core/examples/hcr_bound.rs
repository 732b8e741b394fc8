//! The shift functional `F(t)` for the built-in densities, the Jensen bound,
//! and a Monte Carlo check of `Var ξ ≥ t²/F(t)`.

use eelab::densities::{hcr_toy_check, j_of_t, jensen_lower_bound};
use eelab::prelude::*;

fn main() -> Result<()> {
    let models = [
        DensityModel::exponential(1.0),
        DensityModel::exponential(2.0),
        DensityModel::half_gaussian(1.0),
    ];
    for model in &models {
        match model.mean() {
            Some(mean) => println!("{} (mean {mean:.4})", model.name()),
            None => println!("{}", model.name()),
        }
        for t in [0.5, 1.0, 2.0] {
            let toy = hcr_toy_check(model, t, 100_000, 1)?;
            println!(
                "  t = {t}: F = {:.5}, J = {:.5} >= {:.5}; Var = {:.4} vs t²/F = {:.4}",
                f_of_t(model, t)?,
                j_of_t(model, t)?,
                jensen_lower_bound(model, t)?,
                toy.lhs_variance,
                toy.rhs_bound,
            );
        }
    }

    // With no measured ε the bound prefers the smallest t on the grid.
    let grid: Vec<f64> = (1..=10).map(f64::from).collect();
    let bound = hcr_bound(0.2, &models[0], &grid, None)?;
    println!("A = {:.5} at t0 = {}", bound.a, bound.t0);
    Ok(())
}
