//! The central space H_0 and the embeddings D -> H_0 -> D^x.
//!
//!     cargo run --example rigged_space

use hscale::generators::{e1_system, weighted_grid, WeightForm};
use hscale::hspace::real_vector;
use hscale::jtl::{pair, DElement};
use hscale::rhs::{build_h0, check_condition_a, check_condition_c, j_embed, norm0, sigma};

fn main() -> hscale::Result<()> {
    let s = e1_system();
    let a = check_condition_a(&s, 100, 42);
    let cc = check_condition_c(&s, 100, 42);
    println!("condition A: {} ({})", a.verdict, a.note);
    println!("condition C: {} ({})", cc.verdict, cc.note);

    let h0 = build_h0(&s)?;
    println!("H_0 from {:?}, gram {}", h0.provenance, h0.gram());

    let d = DElement::new(&s, real_vector(&[1.0, 1.0]))?;
    println!("||d||_0 = {:.6}", norm0(&s, &d)?);

    let sig = sigma(&s, &h0, "2")?;
    println!("sigma_2 lower bound {:.4}", sig.lower_bound());

    let eta = real_vector(&[0.5, -1.0]);
    let j = j_embed(&s, &h0, &eta)?;
    println!("B(J eta, d) = {}, <d, eta>_0 = {}", pair(&s, &j, &d)?, h0.space.inner(&d.vector, &eta)?);

    // a family not bounded below: the conditions are checked on samples only
    let g = weighted_grid(-1.0, 1.0, 11, &[0.0, 1.0, 2.0], WeightForm::OnePlusAbsPow)?;
    let a = check_condition_a(&g, 100, 42);
    println!("weighted grid, condition A: {} ({})", a.verdict, a.note);
    Ok(())
}
