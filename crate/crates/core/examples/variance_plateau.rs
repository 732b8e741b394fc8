//! Block-entropy variance for growing blocks, next to `2·Var{S₋}` and the
//! lower bound `A` built from the measured shift decay.
//!
//! ```text
//! cargo run --release --example variance_plateau -- 400
//! ```

use eelab::ensemble::{shift_decay_scan, variance_scan};
use eelab::prelude::*;

fn main() -> Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(300);
    let geometry = BoxGeometry::line(256, 0)?;
    let density = DensityModel::exponential(1.0);
    let config = EnsembleConfig::new(geometry, density.clone(), 1.0, n, 20240917);

    let scan = variance_scan(&config, &[25, 50, 100])?;
    println!("   M     L   mean S    Var S   95% CI of Var");
    for row in &scan.rows {
        let s = &row.stats;
        println!(
            "{:>4} {:>5} {:>8.4} {:>8.4}   [{:.4}, {:.4}]",
            row.m, row.l, s.mean, s.variance, s.variance_ci.0, s.variance_ci.1
        );
    }
    let (lo, hi) = scan.two_var_s_minus_ci();
    println!(
        "2 Var S-  = {:.4}   [{lo:.4}, {hi:.4}]",
        scan.two_var_s_minus()
    );
    println!(
        "E S- = {:.4}, E S+ = {:.4}",
        scan.s_minus.mean, scan.s_plus.mean
    );
    if let Some(m0) = scan.plateau_onset() {
        println!("variance flat from M = {m0}");
    }

    let t_grid = [2.0, 5.0, 10.0, 20.0, 50.0];
    let shift = shift_decay_scan(&config, &t_grid)?;
    let bound = hcr_bound(scan.s_minus.mean, &density, &t_grid, Some(&shift.eps))?;
    println!(
        "A = {:.5} at t0 = {} (F = {:.3})",
        bound.a, bound.t0, bound.f_value
    );
    Ok(())
}
