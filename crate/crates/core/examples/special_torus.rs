//! The flat torus M through w₀ = R(1+i)/4: f-invariance, geodesic launches, stability.

use kummer::kummer::{special_torus_checks, KummerSurface};

fn main() -> kummer::Result<()> {
    let s = KummerSurface::default();
    let rep = special_torus_checks(&s, &[0.0, 0.5, 1.3, 2.2, 3.0])?;
    println!("closest approach to a half-lattice point: u = {} (flat beyond {})", rep.min_u, rep.chart_bound);
    println!("inside the flat region: {}", rep.in_flat_region);
    println!("f moves M by {:.1e}; f has order {}", rep.f_fixed_defect, rep.f_order);
    println!("largest normal drift of tangent launches over length 10: {:.1e}", rep.max_normal_drift);
    println!("second variation: min eigenvalue {:+.2e}, nullity {}", rep.min_eigenvalue, rep.nullity_estimate);
    Ok(())
}
