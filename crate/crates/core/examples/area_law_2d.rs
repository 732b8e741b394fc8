//! In two dimensions the entropy per unit boundary settles and its variance
//! shrinks with the block, unlike the one-dimensional plateau.

use eelab::ensemble::area_law_scan_2d;
use eelab::prelude::*;

fn main() -> Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(100);
    let config = EnsembleConfig::new(
        BoxGeometry::new(2, 12, 0)?,
        DensityModel::exponential(0.5),
        1.5,
        n,
        20240917,
    );
    for row in area_law_scan_2d(&config, &[4, 6, 8])? {
        let s = &row.stats;
        println!(
            "L = {:>2}: mean S/L = {:.4} [{:.4}, {:.4}], Var S/L = {:.5}",
            row.l, s.mean, s.mean_ci.0, s.mean_ci.1, s.variance
        );
    }
    Ok(())
}
