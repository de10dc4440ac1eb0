//! Without a least index, inf_a ||.||_a need not be a Hilbert norm.
//!
//!     cargo run --example parallelogram_counterexample

use hscale::generators::diamond_counterexample;
use hscale::rhs::{build_h0, check_parallelogram};
use hscale::Error;

fn main() {
    let s = diamond_counterexample();
    let r = check_parallelogram(&s, 200, 42);
    println!("worst parallelogram defect {:.6} over {} pairs", r.max_violation, r.pairs);
    if let Some(w) = &r.witness {
        let show = |v: &hscale::CVec| v.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(", ");
        println!("at d = [{}], e = [{}]", show(&w.d), show(&w.e));
    }
    match build_h0(&s) {
        Err(Error::ParallelogramViolation { violation, .. }) => println!("no central space: defect {violation}"),
        Err(e) => println!("no central space: {e}"),
        Ok(h) => println!("unexpected central space {:?}", h.provenance),
    }
}
