//! Chart assignment on the Kummer patchwork, and its behaviour under homothety.

use kummer::kummer::{homothety_check, locate, KummerSurface};
use kummer::metric::c;

fn main() -> kummer::Result<()> {
    let s = KummerSurface::default();
    let q = s.half_lattice_point(9);
    for (label, d) in [("far", c(2.0, 1.5)), ("neck", c(0.72, 0.0)), ("core", c(0.3, 0.2)), ("near E", c(1e-4, 0.0))] {
        let z = [q[0] + d, q[1] + c(0.0, d.re * 0.5)];
        let p = locate(&s, &z)?;
        println!("{label:>7}: {:?} coords ({:.4}, {:.4})", p.chart, p.coords[0], p.coords[1]);
    }
    let pts = [[c(1.0, 2.0), c(-3.0, 0.5)], [q[0] + c(0.5, 0.1), q[1] + c(0.2, -0.4)]];
    for alpha in [0.5, 2.0, 3.0] {
        println!("alpha = {alpha}: pullback residual {:.1e}", homothety_check(&s, alpha, &pts)?);
    }
    Ok(())
}
