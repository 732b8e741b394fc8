//! How the half-line entropy dies out when the potential at the origin is
//! raised by `t`.

use eelab::ensemble::shift_decay_scan;
use eelab::prelude::*;

fn main() -> Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(200);
    let config = EnsembleConfig::new(
        BoxGeometry::line(128, 0)?,
        DensityModel::exponential(1.0),
        1.0,
        n,
        7,
    );
    let scan = shift_decay_scan(&config, &[2.0, 5.0, 10.0, 20.0, 50.0])?;
    println!("t = 0: E S- = {:.4}", scan.baseline.mean);
    for ((t, row), eps) in scan.t_list.iter().zip(&scan.rows).zip(&scan.eps) {
        println!(
            "t = {t:>4}: E S- = {:.5}  [{:.5}, {:.5}]  eps = {eps:.4}",
            row.mean, row.mean_ci.0, row.mean_ci.1
        );
    }
    println!(
        "log-log slope against t - E: {:.3} (r² = {:.3})",
        scan.fit.slope, scan.fit.r_squared
    );
    Ok(())
}
