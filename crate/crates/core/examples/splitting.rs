//! The block entropy splits into its two single-cut pieces once the block is
//! long compared to the localization length.

use eelab::ensemble::{mixing_covariance, splitting_scan};
use eelab::prelude::*;

fn main() -> Result<()> {
    let config = EnsembleConfig::new(
        BoxGeometry::line(128, 0)?,
        DensityModel::exponential(1.0),
        1.0,
        200,
        9,
    );
    for row in splitting_scan(&config, &[5, 10, 20, 40])? {
        println!(
            "M = {:>2}: median |residual| = {:.2e}",
            row.m, row.median_abs
        );
    }
    for row in mixing_covariance(&config, &[2, 10, 40])? {
        println!(
            "M = {:>2}: cov(S+ at M, S- at -M) = {:+.2e} ± {:.1e}",
            row.m, row.covariance, row.covariance_stderr
        );
    }
    Ok(())
}
