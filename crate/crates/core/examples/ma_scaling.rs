//! Radial Monge-Ampère: Eguchi-Hanson from F ≡ 1, and the a² scaling of the neck correction.

use std::sync::Arc;

use kummer::ma_radial::{neck_correction_scan, solve_radial_ma};
use kummer::potentials::{ASYMPTOTIC_A_GRID, DEFAULT_A_GRID, SCALING_DELTA};

fn main() -> kummer::Result<()> {
    let a = 0.5;
    let sol = solve_radial_ma(Arc::new(|_| 1.0), a, (0.0, 4.0))?;
    let worst = sol.grid.iter().zip(&sol.h).map(|(u, h)| (h - (a * a + u * u).sqrt()).abs()).fold(0.0, f64::max);
    println!("F = 1, h(0) = {a}: max |h - sqrt(a^2 + u^2)| = {worst:.1e}");

    for grid in [&DEFAULT_A_GRID[..], &ASYMPTOTIC_A_GRID[..]] {
        let scan = neck_correction_scan(grid, SCALING_DELTA)?;
        println!("delta = {}:", scan.delta);
        println!("{:>8} {:>14} {:>14} {:>14}", "a", "sup|phi|", "sup|lap phi|", "min lap phi");
        for r in &scan.rows {
            println!("{:>8} {:>14.6e} {:>14.6e} {:>14.6e}", r.a, r.sup_phi, r.sup_lap_phi, r.min_lap_phi);
        }
        println!("log-log slopes: sup|phi| {:.4}, sup|lap phi| {:.4}", scan.slope_sup_phi, scan.slope_sup_lap_phi);
    }
    Ok(())
}
