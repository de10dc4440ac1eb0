//! Build a small system by hand, check the axioms, then break one link.
//!
//!     cargo run --example validate_system

use hscale::hspace::real_matrix;
use hscale::poset::IndexPoset;
use hscale::{validate_system, ContractiveSystem, Link, MetricSpace, Tolerances};

fn main() -> hscale::Result<()> {
    let tol = Tolerances::default();
    // a <= c, b <= c
    let poset = IndexPoset::new(&["a", "b", "c"], &[("a", "c"), ("b", "c")])?;
    let spaces = vec![
        MetricSpace::diagonal(&[1.0, 4.0], &tol)?,
        MetricSpace::diagonal(&[4.0, 1.0], &tol)?,
        MetricSpace::diagonal(&[4.0, 4.0], &tol)?,
    ];
    let links = vec![
        Link::new("a", "c", real_matrix(&[&[0.25, 0.0], &[0.0, 1.0]])),
        Link::new("b", "c", real_matrix(&[&[1.0, 0.0], &[0.0, 0.25]])),
    ];
    let s = ContractiveSystem::new(poset, spaces, links, tol)?;

    let v = validate_system(&s);
    println!("pass: {}", v.pass);
    let (inj, contr, path) = v.margins();
    println!("smallest singular value {inj:.4}, largest norm {contr:.4}, path defect {path:.1e}");

    let bent = s.with_scaled_link("a", "c", 1.01)?;
    let v = validate_system(&bent);
    println!("after scaling U_ca by 1.01: pass {}", v.pass);
    if let Some(w) = &v.contraction.witness {
        println!("  {} -> {} has norm {:.6}", w.from, w.to, w.value);
    }
    Ok(())
}
