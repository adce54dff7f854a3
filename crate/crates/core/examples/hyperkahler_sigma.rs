//! The quaternionic frame (I, J, K) and the σ-invariants of a unit vector.

use kummer::hyperkahler::{angle_coefficients, sectional_from_angles, CurvaturePoint};
use kummer::metric::c;
use kummer::potentials::RadialPotentialSpec;
use nalgebra::Vector4;

fn main() -> kummer::Result<()> {
    let spec = RadialPotentialSpec::eguchi_hanson(1.0)?;
    let z = [c(0.5, 0.3), c(-0.4, 0.6)];
    let pt = CurvaturePoint::new(&spec, &z)?;
    println!("frame relation defect      {:.2e}", pt.frame.relation_defect());
    println!("metric compatibility defect {:.2e}", pt.frame.compatibility_defect(&pt.metric));

    let raw = Vector4::new(0.3, -1.0, 0.5, 0.2);
    let v = raw / pt.norm_sqr(&raw).sqrt();
    let s = pt.sigma(&v)?;
    println!("sigma: II {:+.6} JJ {:+.6} KK {:+.6}", s.ii, s.jj, s.kk);
    println!("       IJ {:+.6} IK {:+.6} JK {:+.6}", s.ij, s.ik, s.jk);
    println!("trace II + JJ + KK = {:.2e}", s.trace());

    // holomorphic sectional curvature of W = cosθ V + sinθ(cosφ JV + sinφ KV) up to the ψ phase
    println!("{:>6} {:>6} {:>14} {:>14}", "theta", "phi", "from sigma", "direct");
    for (theta, phi) in [(0.0, 0.0), (0.4, 1.0), (1.2, 2.5), (std::f64::consts::FRAC_PI_2, 0.3)] {
        let w = pt.combine(&v, &angle_coefficients(theta, phi, 0.7));
        println!("{theta:>6.3} {phi:>6.3} {:>14.10} {:>14.10}", sectional_from_angles(&s, theta, phi), pt.holomorphic_form(&w));
    }
    Ok(())
}
