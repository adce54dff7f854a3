//! Laplacian of R(V, IV, IV, V) along the fixed set {z₂ = 0}, against its closed forms.

use kummer::hyperkahler::laplacian_riemann_identity;
use kummer::metric::c;
use kummer::potentials::RadialPotentialSpec;

fn main() -> kummer::Result<()> {
    println!("{:>4} {:>14} {:>16} {:>16} {:>16} {:>16}", "a", "z1", "jets", "finite diff", "general form", "fixed-set form");
    for (a, z1) in [(1.0, c(0.7, 0.3)), (0.5, c(0.2, 0.6)), (2.0, c(-1.1, 0.4)), (1.0, c(1.0, 0.0))] {
        let spec = RadialPotentialSpec::eguchi_hanson(a)?;
        let r = laplacian_riemann_identity(&spec, &[z1, c(0.0, 0.0)], 1e-3)?;
        println!(
            "{a:>4} {:>14} {:>16.10} {:>16.10} {:>16.10} {:>16.10}",
            format!("{:.1}{:+.1}i", z1.re, z1.im),
            r.composition,
            r.composition_fd,
            r.general_form,
            r.fixed_set_form.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
