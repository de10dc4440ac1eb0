//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use hscale::generators::{
    diamond_counterexample, e1_system, random_fuzz_system, random_ofamily, shift_chain, weighted_grid,
    WeightForm,
};
use hscale::hspace::{metric_adjoint, metric_op_norm, real_diag, spectral_norm, CMat};
use hscale::jtl::{check_isometry_equiv, pairing_drift, separating_check, theta, DElement};
use hscale::ofamily::{build_system_from_ofamily, closed_form_link, simplified_link};
use hscale::opalg::{component_at, form_component, involution, lift, operator_distance, partial_product, Product};
use hscale::rhs::{build_h0, check_parallelogram, intertwiner, order_mismatches, reconstruct_ofamily};
use hscale::sample::{random_cmat, random_cvec, rng};
use hscale::{validate_system, ContractiveSystem, Error, MetricSpace, Tolerances};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fuzz_corpus() -> Vec<ContractiveSystem> {
    (0..50).map(|seed| random_fuzz_system(seed, 6, 8).expect("fuzz system")).collect()
}

fn ofamily_systems(count: u64) -> Vec<ContractiveSystem> {
    (0..count)
        .map(|seed| {
            let f = random_ofamily(1000 + seed, 1 + (seed as usize % 5), 2 + (seed as usize % 4)).expect("family");
            build_system_from_ofamily(&f, &Tolerances::default()).expect("ofamily system")
        })
        .collect()
}

fn grid() -> ContractiveSystem {
    weighted_grid(-1.0, 1.0, 21, &[0.0, 0.5, 1.0, 1.5, 2.0], WeightForm::OnePlusAbsPow).unwrap()
}

fn everything() -> Vec<ContractiveSystem> {
    let mut all = vec![e1_system(), shift_chain(3, 4).unwrap(), grid(), diamond_counterexample()];
    all.extend(fuzz_corpus());
    all.extend(ofamily_systems(20));
    all
}

fn axiom_audit() -> Outcome {
    let mut worst_scaled = f64::INFINITY;
    for (seed, s) in fuzz_corpus().iter().enumerate() {
        ensure(validate_system(s).pass, || format!("seed {seed} fails validation"))?;
        let links: Vec<(usize, usize, f64)> = s
            .links()
            .map(|(a, b, m)| (a, b, metric_op_norm(m, s.space_idx(a), s.space_idx(b))))
            .collect();
        let Some(&(a, b, _)) = links.iter().max_by(|x, y| x.2.total_cmp(&y.2)) else { continue };
        let bent = s.with_scaled_link(s.label(a), s.label(b), 1.01).map_err(|e| e.to_string())?;
        let v = validate_system(&bent);
        ensure(!v.contraction.pass, || format!("seed {seed}: scaled link still contractive"))?;
        worst_scaled = worst_scaled.min(v.contraction.margin);
    }
    ensure(worst_scaled > 1.005, || format!("scaled margin {worst_scaled}"))?;
    Ok(format!("50 systems valid; scaled links fail with margin >= {worst_scaled:.6}"))
}

fn duality() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for s in everything() {
        for (a, b) in s.poset().hasse_covers() {
            let (u, v) = (s.u_idx(a, b).unwrap(), s.v_idx(a, b).unwrap());
            let (sa, sb) = (s.space_idx(a), s.space_idx(b));
            for _ in 0..20 {
                let xi = random_cvec(&mut r, sa.dim());
                let eta = random_cvec(&mut r, sb.dim());
                let lhs = sb.inner(&(u * &xi), &eta).unwrap();
                let rhs = sa.inner(&xi, &(v * &eta)).unwrap();
                worst = worst.max((lhs - rhs).norm());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("defect {worst:e}"))?;
    Ok(format!("max defect {worst:.3e}"))
}

fn pairing_stabilization() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for s in [e1_system(), shift_chain(3, 4).unwrap(), grid()] {
        let n = s.dim_idx(s.top());
        for a in 0..s.len() {
            for _ in 0..10 {
                let x = theta(&s, s.label(a), &random_cvec(&mut r, s.dim_idx(a))).unwrap();
                let d = DElement::new(&s, random_cvec(&mut r, n)).unwrap();
                worst = worst.max(pairing_drift(&s, &x, &d).unwrap());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("drift {worst:e}"))?;
    Ok(format!("max relative drift {worst:.3e}"))
}

fn separating() -> Outcome {
    let mut systems = vec![e1_system()];
    systems.extend(fuzz_corpus());
    let mut worst = f64::INFINITY;
    for s in &systems {
        let r = separating_check(s);
        ensure(r.pass, || format!("not separating: {:?}", r.entries.iter().find(|e| !e.pass)))?;
        for e in &r.entries {
            worst = worst.min(e.min_singular_value / e.norm);
        }
    }
    ensure(worst > 1e-8, || format!("ratio {worst:e}"))?;
    Ok(format!("smallest sigma_min / norm {worst:.3e}"))
}

fn isometry_biconditional() -> Outcome {
    for levels in 1..=4 {
        let r = check_isometry_equiv(&shift_chain(3, levels).unwrap());
        ensure(r.pairs.iter().all(|p| p.isometry && p.lambda_equal), || "shift chain pair not isometric".into())?;
    }
    for s in [e1_system(), grid()] {
        let r = check_isometry_equiv(&s);
        ensure(r.pairs.iter().all(|p| !p.isometry && !p.lambda_equal), || {
            "strict pair reported isometric".into()
        })?;
    }
    let mut pairs = 0;
    for s in everything() {
        let r = check_isometry_equiv(&s);
        ensure(r.pass && r.pairs.iter().all(|p| p.consistent()), || "mixed verdict".into())?;
        pairs += r.pairs.len();
    }
    Ok(format!("no mixed verdicts over {pairs} pairs"))
}

fn closed_form() -> Outcome {
    let tol = Tolerances::default();
    let (mut worst, mut worst_dual, mut noncommuting) = (0.0f64, 0.0f64, 0);
    for seed in 0..100u64 {
        let dim = 1 + (seed as usize % 10);
        let f = random_ofamily(seed, dim, 2).map_err(|e| e.to_string())?;
        let ga = f.graph_gram(f.op("m").unwrap());
        let gb = f.graph_gram(f.op("top").unwrap());
        let (qa, qb) = (&ga - f.base().gram(), &gb - f.base().gram());
        if spectral_norm(&(&qa * &qb - &qb * &qa)) > 1e-6 {
            noncommuting += 1;
        }
        let u = closed_form_link(f.base(), &ga, &gb, &tol).map_err(|e| e.to_string())?;
        worst = worst.max(spectral_norm(&(&u - simplified_link(&ga, &gb).unwrap())));
        let (sa, sb) = (MetricSpace::new(ga, &tol).unwrap(), MetricSpace::new(gb, &tol).unwrap());
        let v = metric_adjoint(&u, &sa, &sb);
        worst_dual = worst_dual.max(spectral_norm(&(v - CMat::identity(dim, dim))));
    }
    ensure(worst <= 1e-9 && worst_dual <= 1e-10 && noncommuting > 50, || {
        format!("formula {worst:e}, adjoint {worst_dual:e}, non-commuting {noncommuting}")
    })?;
    Ok(format!(
        "formula defect {worst:.3e}, adjoint-identity defect {worst_dual:.3e}, {noncommuting} non-commuting pairs"
    ))
}

fn reconstruction() -> Outcome {
    let mut systems = vec![e1_system()];
    systems.extend(ofamily_systems(20));
    let mut worst = 0.0f64;
    for s in &systems {
        ensure(s.poset().minimum().is_some(), || "no minimum".into())?;
        let fam = reconstruct_ofamily(s, &build_h0(s).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max(fam.gram_defect);
        let bad = order_mismatches(s, &fam);
        ensure(bad.is_empty(), || format!("order mismatch {bad:?}"))?;
    }
    ensure(worst <= 1e-8, || format!("gram defect {worst:e}"))?;
    let s = e1_system();
    let fam = reconstruct_ofamily(&s, &build_h0(&s).unwrap()).unwrap();
    let b = real_diag(&[2.5f64.sqrt(), 2f64.sqrt()]);
    let a = real_diag(&[1.5f64.sqrt(), 1.0]);
    let (db, da) = (
        spectral_norm(&(fam.b_of("2").unwrap() - b)),
        spectral_norm(&(fam.a_of("2").unwrap() - a)),
    );
    ensure(db <= 1e-10 && da <= 1e-10, || format!("B_2 off by {db:e}, A_2 off by {da:e}"))?;
    Ok(format!("gram defect {worst:.3e}; E1 B_2 and A_2 within {:.1e}", db.max(da)))
}

fn intertwiners() -> Outcome {
    let tol = Tolerances::default();
    let mut systems = vec![e1_system()];
    systems.extend(ofamily_systems(5));
    let (mut worst_pass, mut worst_fail) = (0.0f64, f64::INFINITY);
    for s in &systems {
        let fam = reconstruct_ofamily(s, &build_h0(s).unwrap()).unwrap();
        let rebuilt = fam.to_system(s.poset(), &tol).map_err(|e| e.to_string())?;
        let r = intertwiner(s, &rebuilt).unwrap();
        ensure(r.pass, || format!("discrepancy {:e}", r.discrepancy))?;
        worst_pass = worst_pass.max(r.discrepancy);
        let bent = fam.perturb(s.top_label(), 1.01, &tol).unwrap().to_system(s.poset(), &tol).unwrap();
        let r = intertwiner(s, &bent).unwrap();
        ensure(!r.pass, || "perturbed system still intertwined".into())?;
        worst_fail = worst_fail.min(r.discrepancy);
    }
    ensure(worst_pass <= 1e-8 && worst_fail >= 1e-3, || format!("{worst_pass:e} / {worst_fail:e}"))?;
    Ok(format!("round trip {worst_pass:.3e}; perturbed at least {worst_fail:.3e}"))
}

fn operator_algebra() -> Outcome {
    let mut r = rng(9);
    let mut systems = vec![e1_system(), shift_chain(2, 3).unwrap()];
    systems.extend(ofamily_systems(5));
    let (mut round_trip, mut reversal, mut defined) = (0.0f64, 0.0f64, 0);
    for s in &systems {
        let ops: Vec<_> = (0..s.len())
            .map(|a| lift(s, s.label(a), &random_cmat(&mut r, s.dim_idx(a), s.dim_idx(a))).unwrap())
            .collect();
        for x in &ops {
            ensure(involution(&involution(x)) == *x, || "double involution differs".into())?;
            let base = s.index(&x.base).unwrap();
            for g in (0..s.len()).filter(|&g| s.poset().leq_idx(base, g)) {
                let comp = component_at(s, x, s.label(g)).unwrap();
                let back = form_component(s, x, s.label(g)).unwrap().ok_or("form not representable")?;
                round_trip = round_trip.max(spectral_norm(&(back - &comp)) / (1.0 + spectral_norm(&comp)));
            }
            for y in &ops {
                if let Some(xy) = partial_product(s, x, y).unwrap().defined() {
                    defined += 1;
                    let yx = partial_product(s, &involution(y), &involution(x))
                        .unwrap()
                        .defined()
                        .ok_or("reversed product undefined")?;
                    reversal = reversal.max(operator_distance(s, &involution(&xy), &yx).unwrap());
                }
            }
        }
    }
    let e1 = e1_system();
    let id = lift(&e1, "1", &CMat::identity(2, 2)).unwrap();
    let Product::Undefined { residual, .. } = partial_product(&e1, &id, &id).unwrap() else {
        return Err("E1 identity product is defined".into());
    };
    ensure(round_trip <= 1e-10 && reversal <= 1e-9 && defined > 0, || {
        format!("round trip {round_trip:e}, reversal {reversal:e}, {defined} defined")
    })?;
    ensure((0.5..=0.6).contains(&residual), || format!("residual {residual}"))?;
    Ok(format!(
        "round trip {round_trip:.3e}; reversal {reversal:.3e} over {defined} products; E1 residual {residual:.15}"
    ))
}

fn parallelogram() -> Outcome {
    let mut chains = vec![e1_system(), shift_chain(3, 4).unwrap(), grid()];
    chains.extend(ofamily_systems(5).into_iter().filter(|s| s.poset().hasse_covers().len() + 1 == s.len()));
    let mut worst = 0.0f64;
    for s in &chains {
        worst = worst.max(check_parallelogram(s, 200, 42).max_violation);
    }
    ensure(worst <= 1e-12, || format!("chain violation {worst:e}"))?;
    let d = diamond_counterexample();
    let r = check_parallelogram(&d, 200, 42);
    ensure((r.max_violation - 6.0).abs() <= 1e-9, || format!("diamond {}", r.max_violation))?;
    match build_h0(&d) {
        Err(Error::ParallelogramViolation { violation, d: x, e: y }) => {
            ensure((violation - 6.0).abs() <= 1e-9, || format!("raised with {violation}"))?;
            let w = r.witness.ok_or("no witness")?;
            ensure(x == w.d && y == w.e, || "witness differs".into())?;
        }
        other => return Err(format!("build_h0 returned {other:?}")),
    }
    Ok(format!("chains {worst:.3e}; diamond {:.12}", r.max_violation))
}

fn weight_flag() -> Outcome {
    let additive = weighted_grid(-0.5, 0.5, 3, &[0.0, 2.0], WeightForm::OnePlusPow).unwrap();
    let v = validate_system(&additive);
    ensure(!v.contraction.pass, || "1 + |x|^a weight passes".into())?;
    let w = v.contraction.witness.ok_or("no witness")?;
    for x in [-0.5, 0.5] {
        let hit = w
            .coordinates
            .iter()
            .find(|p| p.position == Some(x))
            .ok_or_else(|| format!("no witness at {x}"))?;
        ensure((hit.energy_ratio - 1.6).abs() < 1e-12, || format!("ratio {} at {x}", hit.energy_ratio))?;
    }
    let default = weighted_grid(-0.5, 0.5, 3, &[0.0, 2.0], WeightForm::OnePlusAbsPow).unwrap();
    ensure(validate_system(&default).pass, || "default weight fails".into())?;
    Ok(format!("1 + |x|^a weight fails at x = +-0.5 with ratio 1.6 (margin {:.6}); default passes", v.contraction.margin))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("axiom audit", axiom_audit),
        ("duality V = U*", duality),
        ("pairing stabilization", pairing_stabilization),
        ("separating duality", separating),
        ("isometry biconditional", isometry_biconditional),
        ("operator-family closed form", closed_form),
        ("reconstruction round trip", reconstruction),
        ("intertwiner", intertwiners),
        ("operator algebra", operator_algebra),
        ("parallelogram audit", parallelogram),
        ("weight flag", weight_flag),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({ms} ms)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({ms} ms)", k + 1);
            }
        }
    }
    println!("{} criteria, {failed} failed, {:.2} s", criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
