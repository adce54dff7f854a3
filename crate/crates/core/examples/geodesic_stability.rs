//! Geodesics on Eguchi-Hanson, the radial first integral, and second variation of closed geodesics.

use kummer::geodesics::{
    equator_stability_scan, integrate_geodesic, radial_theta_first_integral, second_variation_spectrum, ClosedGeodesic,
    GeodesicState,
};
use kummer::metric::c;
use kummer::potentials::RadialPotentialSpec;

fn main() -> kummer::Result<()> {
    let spec = RadialPotentialSpec::eguchi_hanson(1.0)?;
    let st = GeodesicState::new([c(0.9, 0.2), c(-0.3, 0.5)], [0.2, -0.7, 0.4, 0.1]).normalized(&spec)?;
    let path = integrate_geodesic(&spec, &st, 5.0, 0.01)?;
    println!("geodesic of length {:.3}: energy drift {:.2e}", path.length(), path.energy_drift());

    let theta = radial_theta_first_integral(1.0, 2.0, 2000)?;
    println!("radial profile: sqrt(d) = {:.12}, first-integral residual {:.1e}", theta.sqrt_d, theta.max_residual);

    println!("equator of the exceptional sphere (expected min eigenvalue -4/a):");
    let a_values = [0.5, 1.0, 2.0];
    for (a, (_, min)) in a_values.iter().zip(equator_stability_scan(&a_values, 32)?) {
        println!("  a = {a}: {min:+.10}");
    }

    let flat = RadialPotentialSpec::euclidean();
    let closed = ClosedGeodesic {
        start: GeodesicState::new([c(2.0, 2.0), c(2.0, 2.0)], [1.0, 0.0, 0.0, 0.0]),
        period: 8.0,
        shift: [8.0, 0.0, 0.0, 0.0],
    };
    let rep = second_variation_spectrum(&flat, &closed, 16)?;
    println!("flat torus loop: min eigenvalue {:+.2e}, nullity {}", rep.min_eigenvalue, rep.nullity_estimate);
    Ok(())
}
