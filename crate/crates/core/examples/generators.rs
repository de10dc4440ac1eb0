//! The built-in families: shift chains, weighted grids, random systems.
//!
//!     cargo run --example generators

use hscale::format::SystemFile;
use hscale::generators::{random_fuzz_system, shift_chain, weighted_grid, WeightForm};
use hscale::jtl::check_isometry_equiv;
use hscale::validate_system;

fn main() -> hscale::Result<()> {
    let s = shift_chain(3, 4)?;
    let iso = check_isometry_equiv(&s);
    println!("shift chain: {} pairs, all isometric {}", iso.pairs.len(), iso.pairs.iter().all(|p| p.isometry));

    let g = weighted_grid(-1.0, 1.0, 21, &[0.0, 0.5, 1.0, 1.5, 2.0], WeightForm::OnePlusAbsPow)?;
    println!("weighted grid: {} spaces of dim {}, valid {}", g.len(), g.dim_idx(0), validate_system(&g).pass);

    // 1 + |x|^a is not increasing in a for |x| < 1
    let additive = weighted_grid(-0.5, 0.5, 3, &[0.0, 2.0], WeightForm::OnePlusPow)?;
    let v = validate_system(&additive);
    println!("1 + |x|^a weight: valid {}", v.pass);
    for p in v.contraction.witness.iter().flat_map(|w| &w.coordinates) {
        println!("  x = {:?}: energy ratio {:.3}", p.position, p.energy_ratio);
    }

    for seed in 0..3 {
        let r = random_fuzz_system(seed, 6, 4)?;
        let dims: Vec<usize> = (0..r.len()).map(|a| r.dim_idx(a)).collect();
        println!("random {seed}: covers {:?}, dims {dims:?}", r.poset().covers());
    }

    let text = SystemFile::from_system(&shift_chain(2, 2)?, Some("tiny".into())).to_json();
    println!("{text}");
    Ok(())
}
