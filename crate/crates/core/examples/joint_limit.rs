//! The pair (D, D^x) of a two-step chain: coherent families, classes
//! Theta_a(xi), and the duality form between them.
//!
//!     cargo run --example joint_limit

use hscale::generators::{e1_system, shift_chain};
use hscale::hspace::{c, real_vector};
use hscale::jtl::{check_isometry_equiv, dx_equal, pair, pi, separating_check, theta, DElement};

fn main() -> hscale::Result<()> {
    let s = e1_system();
    println!("indices {:?}, top {}", s.poset().labels(), s.top_label());

    // an element of D is fixed by its top component
    let d = DElement::new(&s, real_vector(&[1.0, 0.0]))?;
    for a in s.poset().labels() {
        let v: Vec<String> = pi(&s, a, &d)?.iter().map(|z| z.to_string()).collect();
        println!("Pi_{a}(d) = [{}]", v.join(", "));
    }

    let x = theta(&s, "1", &real_vector(&[1.0, 0.0]))?;
    println!("B(Theta_1 e1, d) = {}", pair(&s, &x, &d)?);

    // the same class, represented at index 2
    let lifted = theta(&s, "2", &(s.u_idx(0, 1)? * &x.vector))?;
    println!("Theta_1 e1 == Theta_2 U e1: {}", dx_equal(&s, &x, &lifted, 1e-9)?);
    println!("B at index 2 = {}", pair(&s, &lifted, &d)?);

    let y = x.combine(&s, c(0.0, 1.0), &lifted, c(-1.0, 0.0))?;
    println!("i x - x paired with d: {}", pair(&s, &y, &d)?);

    let sep = separating_check(&s);
    println!("separating: {} (margin {:.3e})", sep.pass, sep.margin);

    for (name, sys) in [("chain", e1_system()), ("shift", shift_chain(3, 3)?)] {
        let r = check_isometry_equiv(&sys);
        for p in &r.pairs {
            println!(
                "{name}: {} <= {}: isometry {}, Lambda equal {}",
                p.lower, p.upper, p.isometry, p.lambda_equal
            );
        }
    }
    Ok(())
}
