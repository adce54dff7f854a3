//! Eguchi-Hanson curvature: Ricci-flatness, the Kretschmann profile and metric eigenvalues.

use kummer::metric::{c, curvature_at, eh_kretschmann, metric_at};
use kummer::potentials::RadialPotentialSpec;

fn main() -> kummer::Result<()> {
    let a = 0.5;
    let spec = RadialPotentialSpec::eguchi_hanson(a)?;
    println!("a = {a}");
    println!("{:>10} {:>22} {:>22} {:>12} {:>24}", "u", "|Rm|^2", "24a^4/(a^2+u^2)^3", "max |Ric|", "eigenvalues");
    for u in [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0] {
        let k = eh_kretschmann(a, u)?;
        let exact = 24.0 * a.powi(4) / (a * a + u * u).powi(3);
        // a generic point with |z|² = u; the orbifold chart is well conditioned for u ≳ a/4
        let r = u.sqrt();
        let z = [c(0.6 * r, 0.0), c(0.0, 0.8 * r)];
        let ric = if u >= 0.25 * a {
            let cb = curvature_at(&spec, &z)?;
            format!("{:.1e}", cb.ricci.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max))
        } else {
            "-".into()
        };
        let ev = metric_at(&spec, &z)?.eigenvalues();
        println!("{u:>10.0e} {k:>22.15e} {exact:>22.15e} {ric:>12} {:>11.6} {:>11.6}", ev[0], ev[1]);
    }
    Ok(())
}
