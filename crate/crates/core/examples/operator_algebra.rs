//! Operators of L(D, D^x) given by one component: involution, bound
//! constants and the partial product.
//!
//!     cargo run --example operator_algebra

use hscale::generators::e1_system;
use hscale::hspace::{c, real_matrix, CMat};
use hscale::opalg::{component_at, involution, lift, partial_product, support_set, Product};

fn main() -> hscale::Result<()> {
    let s = e1_system();
    let x = lift(&s, "1", &CMat::identity(2, 2))?;
    println!("X_2 = {}", component_at(&s, &x, "2")?);
    for e in support_set(&s, &x)? {
        println!("bound at {}: {:?}", e.index, e.bound);
    }

    let mut m = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
    m[(1, 0)] = c(0.0, 2.0);
    let y = lift(&s, "2", &m)?;
    let yd = involution(&y);
    println!("Y^dagger base component {}", yd.matrix);
    println!("Y^dagger^dagger == Y: {}", involution(&yd) == y);

    match partial_product(&s, &x, &x)? {
        Product::Defined { operator } => println!("X.X defined at {}", operator.base),
        Product::Undefined { residual, lower, upper } => {
            println!("X.X undefined: residual {residual:.3} between {lower} and {upper}")
        }
    }
    let top = lift(&s, "2", &CMat::identity(2, 2))?;
    if let Some(p) = partial_product(&s, &top, &y)?.defined() {
        println!("I_2 . Y = {}", p.matrix);
    }
    Ok(())
}
