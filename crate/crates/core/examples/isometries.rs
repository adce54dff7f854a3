//! The isometry group of the patchwork with equal a_i, and the order-four map f.

use std::collections::BTreeMap;

use kummer::kummer::{isometry_group, IsometryElement, KummerSurface};

fn main() -> kummer::Result<()> {
    let s = KummerSurface::default();
    let g = isometry_group(&s)?;
    println!("{} candidate maps, {} isometries, closed under composition: {}", g.raw_count, g.elements.len(), g.closed);
    let mut hist = BTreeMap::new();
    for o in &g.orders {
        *hist.entry(o).or_insert(0) += 1;
    }
    for (o, n) in hist {
        println!("  order {o}: {n}");
    }

    let f = IsometryElement::special_f();
    println!("f = {f:?}");
    println!("order of f: {}, permutation of half-lattice points: {:?}", f.order(), f.half_lattice_permutation(&s));
    Ok(())
}
