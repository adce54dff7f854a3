//! Neck volume deficits and the Monge-Ampère constant A of a Kummer patchwork.
//! Pass a JSON surface config as the first argument, or use the default surface.

use kummer::kummer::{volumes_and_a, KummerSurface};

fn main() -> kummer::Result<()> {
    let surface = match std::env::args().nth(1) {
        Some(path) => KummerSurface::from_path(path.as_ref())?,
        None => KummerSurface::default(),
    };
    println!("{}", surface.to_json());
    let rep = volumes_and_a(&surface)?;
    println!("{:>4} {:>8} {:>22} {:>22} {:>22}", "neck", "a", "deficit", "boundary form", "pi^2 a^2 / 4");
    for (i, n) in rep.necks.iter().enumerate() {
        println!("{i:>4} {:>8} {:>22.15e} {:>22.15e} {:>22.15e}", n.a, n.deficit, n.deficit_boundary, n.deficit_closed_form);
    }
    println!("torus volume {}, A = {:.15} (closed form {:.15})", rep.vol_euc_torus, rep.a_constant, rep.a_closed_form);
    Ok(())
}
