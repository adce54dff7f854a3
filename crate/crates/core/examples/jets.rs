//! Taylor jets: exact derivatives of composed closed-form functions.

use kummer::jets::Jet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // f(x, y) = exp(x y) / (1 + x²) at (0.3, -0.7), to order 4
    let v = Jet::variables(&[0.3, -0.7], 4)?;
    let (x, y) = (&v[0], &v[1]);
    let f = (x * y).exp().try_div(&(x * x).add_scalar(1.0))?;
    println!("f      = {:.15}", f.value());
    for alpha in [[1, 0], [0, 1], [2, 0], [1, 1], [2, 2], [0, 4]] {
        println!("d^{alpha:?} f = {:+.15e}", f.partial(&alpha));
    }

    // the same value by a finite difference, for scale
    let g = |x: f64, y: f64| (x * y).exp() / (1.0 + x * x);
    let h = 1e-4;
    let fd = (g(0.3 + h, -0.7 + h) - g(0.3 + h, -0.7 - h) - g(0.3 - h, -0.7 + h) + g(0.3 - h, -0.7 - h)) / (4.0 * h * h);
    println!("d^[1, 1] f by central differences: {fd:+.15e}");
    Ok(())
}
