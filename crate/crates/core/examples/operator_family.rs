//! Systems generated by a family of operators, and the reconstruction of
//! such a family from an arbitrary system.
//!
//!     cargo run --example operator_family

use hscale::generators::random_ofamily;
use hscale::hspace::{metric_op_norm, spectral_norm};
use hscale::ofamily::{build_system_from_ofamily, validate_ofamily};
use hscale::rhs::{build_h0, intertwiner, reconstruct_ofamily};
use hscale::Tolerances;

fn main() -> hscale::Result<()> {
    let tol = Tolerances::default();
    let f = random_ofamily(7, 3, 4)?;
    let r = validate_ofamily(&f, &tol);
    println!("operators {:?}, directed {}", r.labels, r.directed);

    let s = build_system_from_ofamily(&f, &tol)?;
    println!("index order covers: {:?}", s.poset().covers());
    for (a, b, u) in s.links() {
        let n = metric_op_norm(u, s.space_idx(a), s.space_idx(b));
        println!("U_{}{} has norm {n:.4}", s.label(b), s.label(a));
    }

    let h0 = build_h0(&s)?;
    let fam = reconstruct_ofamily(&s, &h0)?;
    println!("reconstructed grams agree to {:.2e}", fam.gram_defect);
    for label in &fam.labels {
        println!("||A_{label}|| = {:.4}", spectral_norm(fam.a_of(label)?));
    }

    let rebuilt = fam.to_system(s.poset(), &tol)?;
    let t = intertwiner(&s, &rebuilt)?;
    println!("intertwiner discrepancy {:.2e} (pass {})", t.discrepancy, t.pass);

    let bent = fam.perturb(s.top_label(), 1.01, &tol)?.to_system(s.poset(), &tol)?;
    let t = intertwiner(&s, &bent)?;
    println!("after a 1% change: {:.2e} (pass {})", t.discrepancy, t.pass);
    Ok(())
}
