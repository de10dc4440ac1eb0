//! The full verification suite over one system.
//!
//! Every check becomes one [`ReportEntry`]. Mathematical failures are
//! entries with a `FAIL` verdict, never errors; entries come out in a fixed
//! order and are deterministic given the seed.

use serde_json::{json, Value};

use crate::error::Result;
use crate::format::LoadedSystem;
use crate::hspace::{c, metric_op_norm, spectral_norm, whiten, CMat, CVec, C64};
use crate::jtl::{
    check_isometry_equiv, d_basis, lift_to, pair, pairing_drift, pi, projection_lower_bound, riesz_dual,
    separating_check, theta, DElement, DxElement,
};
use crate::ofamily::{closed_form_link, simplified_link, theta_ofamily, validate_ofamily, OFamily};
use crate::opalg::{
    adjoint_component_at, apply, combine, component_at, form_component, involution, lift, operator_distance,
    partial_product, support_set, LimOperator, Product,
};
use crate::report::{Report, ReportEntry, Verdict};
use crate::rhs::{
    build_h0, check_condition_a, check_condition_c, check_parallelogram, intertwiner, j_embed, norm0,
    order_mismatches, reconstruct_ofamily, sigma, CentralSpace, ReconstructedFamily,
    PARALLELOGRAM_TOL,
};
use crate::sample::{random_cmat, random_cvec, rng, SampleRng};
use crate::system::{validate_system, AxiomCheck, ContractiveSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 42, samples: 200 }
    }
}

/// Inner-product identities checked to this relative accuracy.
const IDENTITY_TOL: f64 = 1e-10;
/// Pairing values after re-basing agree to this relative accuracy.
const DRIFT_TOL: f64 = 1e-12;
/// Class equality of operators.
const OPERATOR_TOL: f64 = 1e-9;
/// Gram reproduction by the reconstructed family.
const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Vector pairs per comparable pair in the duality check.
const DUALITY_PAIRS: usize = 20;

type Outcome = (Verdict, f64, Option<Value>);

struct Suite<'a> {
    s: &'a ContractiveSystem,
    report: Report,
    rng: SampleRng,
    samples: usize,
}

fn pass_if(ok: bool, margin: f64, witness: Option<Value>) -> Outcome {
    (Verdict::from_pass(ok), margin, if ok { None } else { witness })
}

impl<'a> Suite<'a> {
    fn run(&mut self, check: &str, claim: &str, f: impl FnOnce(&mut Self) -> Result<Outcome>) {
        let entry = match f(self) {
            Ok((verdict, margin, witness)) => {
                let mut e = ReportEntry::new(check, claim, verdict, margin);
                e.witness = witness;
                e
            }
            Err(err) => ReportEntry::new(check, claim, Verdict::Fail, f64::NAN).with_witness(&json!({ "error": err.to_string() })),
        };
        self.report.push(entry);
    }

    fn skip(&mut self, check: &str, claim: &str, why: &str) {
        self.report
            .push(ReportEntry::new(check, claim, Verdict::Inconclusive, f64::NAN).with_witness(&json!({ "skipped": why })));
    }

    /// Basis of `D` followed by `samples` random elements.
    fn elements(&mut self) -> Vec<DElement> {
        let n = self.s.dim_idx(self.s.top());
        let mut out = d_basis(self.s);
        for _ in 0..self.samples {
            out.push(DElement {
                anchor: self.s.top_label().into(),
                vector: random_cvec(&mut self.rng, n),
            });
        }
        out
    }

    fn vectors(&mut self, dim: usize, count: usize) -> Vec<CVec> {
        (0..count).map(|_| random_cvec(&mut self.rng, dim)).collect()
    }
}

fn axiom(check: &AxiomCheck) -> Outcome {
    (
        Verdict::from_pass(check.pass),
        check.margin,
        check.witness.as_ref().and_then(|w| serde_json::to_value(w).ok()),
    )
}

pub fn verify(loaded: &LoadedSystem, opts: VerifyOptions) -> Report {
    let s = &loaded.system;
    let mut suite = Suite {
        s,
        report: Report::new(loaded.name.clone(), opts.seed, opts.samples),
        rng: rng(opts.seed),
        samples: opts.samples,
    };
    axioms(&mut suite);
    duality(&mut suite);
    limit(&mut suite);
    let h0 = rigging(&mut suite, opts);
    reconstruction(&mut suite, h0.as_ref());
    if let Some(f) = &loaded.ofamily {
        operator_family(&mut suite, f);
    }
    operators(&mut suite, &loaded.operators);
    suite.report
}

fn axioms(suite: &mut Suite) {
    let v = validate_system(suite.s);
    suite.run("axioms.injective", "every linking map U_ba is injective", |_| Ok(axiom(&v.injective)));
    suite.run("axioms.contraction", "every linking map U_ba is a contraction", |_| {
        let mut o = axiom(&v.contraction);
        if v.contraction_marginal {
            o.2 = Some(json!({ "marginal": true }));
        }
        Ok(o)
    });
    suite.run("axioms.identity", "U_aa is the identity of H_a", |_| Ok(axiom(&v.identity)));
    suite.run("axioms.path-independence", "U_ca = U_cb U_ba whenever a <= b <= c", |_| {
        Ok(axiom(&v.path_independence))
    });
}

fn duality(suite: &mut Suite) {
    let s = suite.s;
    let pairs = s.poset().strict_pairs();
    suite.run("duality.adjoint", "V_ab is the adjoint of U_ba", |su| {
        let mut worst = (0.0, None);
        for &(a, b) in &pairs {
            let (u, v) = (s.u_idx(a, b)?, s.v_idx(a, b)?);
            let (sa, sb) = (s.space_idx(a), s.space_idx(b));
            for _ in 0..DUALITY_PAIRS {
                let xi = random_cvec(&mut su.rng, sa.dim());
                let eta = random_cvec(&mut su.rng, sb.dim());
                let lhs = sb.inner(&(u * &xi), &eta)?;
                let rhs = sa.inner(&xi, &(v * &eta))?;
                let d = (lhs - rhs).norm() / (1.0 + sa.norm(&xi)? * sb.norm(&eta)?);
                if d > worst.0 {
                    worst = (d, Some(json!([s.label(a), s.label(b)])));
                }
            }
        }
        Ok(pass_if(worst.0 <= IDENTITY_TOL, worst.0, worst.1))
    });
    suite.run("duality.v-contraction", "every V_ab is a contraction", |_| {
        let mut worst = (0.0, None);
        for &(a, b) in &pairs {
            let n = metric_op_norm(s.v_idx(a, b)?, s.space_idx(b), s.space_idx(a));
            if n > worst.0 {
                worst = (n, Some(json!([s.label(a), s.label(b)])));
            }
        }
        Ok(pass_if(worst.0 <= 1.0 + s.tolerances().contr, worst.0, worst.1))
    });
    suite.run("duality.v-composition", "V_ac = V_ab V_bc whenever a <= b <= c", |_| {
        let mut worst = (0.0, None);
        for &(a, b) in &pairs {
            for &(b2, c2) in &pairs {
                if b2 != b {
                    continue;
                }
                let composed = s.v_idx(a, b)? * s.v_idx(b, c2)?;
                let d = spectral_norm(&whiten(&(composed - s.v_idx(a, c2)?), s.space_idx(c2), s.space_idx(a)));
                if d > worst.0 {
                    worst = (d, Some(json!([s.label(a), s.label(b), s.label(c2)])));
                }
            }
        }
        Ok(pass_if(worst.0 <= s.tolerances().path, worst.0, worst.1))
    });
    suite.run("duality.v-injective", "every V_ab is injective", |_| {
        let mut worst = (1.0f64, None);
        for &(a, b) in &pairs {
            let (sb, sa) = (s.space_idx(b), s.space_idx(a));
            let low = if sb.dim() > sa.dim() {
                0.0
            } else {
                whiten(s.v_idx(a, b)?, sb, sa).singular_values().min()
            };
            if low < worst.0 {
                worst = (low, Some(json!({ "from": s.label(b), "to": s.label(a), "reason": "V_ab has a kernel; U_ba is not onto" })));
            }
        }
        Ok(pass_if(worst.0 > s.tolerances().inj, worst.0, worst.1))
    });
    suite.run("duality.coherent-monotone", "||xi_a|| <= ||xi_b|| for coherent families and a <= b", |su| {
        let mut worst = 0.0f64;
        for d in su.elements() {
            for &(a, b) in &pairs {
                let na = s.space_idx(a).norm(&pi(s, s.label(a), &d)?)?;
                let nb = s.space_idx(b).norm(&pi(s, s.label(b), &d)?)?;
                worst = worst.max((na - nb) / (1.0 + nb));
            }
        }
        Ok(pass_if(worst <= IDENTITY_TOL, worst.max(0.0), None))
    });
}

fn limit(suite: &mut Suite) {
    let s = suite.s;
    let pairs = s.poset().strict_pairs();
    suite.run("jtl.projection-coherence", "Pi_a = V_ab Pi_b", |su| {
        let mut worst = 0.0f64;
        for d in su.elements() {
            for &(a, b) in &pairs {
                let direct = pi(s, s.label(a), &d)?;
                let via = s.v_idx(a, b)? * pi(s, s.label(b), &d)?;
                let sp = s.space_idx(a);
                worst = worst.max(sp.norm(&(direct - via))? / (1.0 + sp.norm(&pi(s, s.label(a), &d)?)?));
            }
        }
        Ok(pass_if(worst <= IDENTITY_TOL, worst, None))
    });
    suite.run("jtl.projection-injective", "every Pi_a is injective on D", |_| {
        let (low, at) = (0..s.len())
            .map(|a| (projection_lower_bound(s, a), a))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
        Ok(pass_if(low > s.tolerances().inj, low, Some(json!({ "index": s.label(at) }))))
    });
    suite.run("jtl.projection-dense", "Pi_a(D) is dense in H_a", |_| {
        let mut worst = (f64::INFINITY, None);
        for a in 0..s.len() {
            let w = whiten(s.v_idx(a, s.top())?, s.space_idx(s.top()), s.space_idx(a));
            // onto iff the rows are independent
            let low = w.adjoint().singular_values().min();
            let low = if w.nrows() > w.ncols() { 0.0 } else { low };
            if low < worst.0 {
                worst = (low, Some(json!({ "index": s.label(a) })));
            }
        }
        Ok(pass_if(worst.0 > s.tolerances().inj, worst.0, worst.1))
    });
    suite.run("jtl.theta-injective", "Theta_a(xi) is not the zero class for xi != 0", |_| {
        let mut worst = f64::INFINITY;
        for a in 0..s.len() {
            let m = s.u_idx(a, s.top())?;
            let low = if m.nrows() < m.ncols() {
                0.0
            } else {
                whiten(m, s.space_idx(a), s.space_idx(s.top())).singular_values().min()
            };
            worst = worst.min(low);
        }
        Ok(pass_if(worst > s.tolerances().inj, worst, None))
    });
    suite.run("jtl.theta-coherence", "Theta_a = Theta_b U_ba", |su| {
        let tol = s.tolerances().equal;
        let mut worst = 0.0f64;
        for &(a, b) in &pairs {
            let (la, lb) = (s.label(a), s.label(b));
            for xi in su.vectors(s.dim_idx(a), su.samples.min(20) + 1) {
                let x = theta(s, la, &xi)?;
                let y = theta(s, lb, &(s.u_idx(a, b)? * &xi))?;
                let (diff, scale) = crate::jtl::dx_distance(s, &x, &y)?;
                worst = worst.max(diff / (1.0 + scale));
            }
        }
        Ok(pass_if(worst <= tol, worst, None))
    });
    suite.run("jtl.pairing-stabilization", "B(Theta_a eta, d) does not depend on the representative", |su| {
        let mut worst = (0.0, None);
        let elements = su.elements();
        for a in 0..s.len() {
            for (k, d) in elements.iter().enumerate().take(su.samples.min(20) + 1) {
                let eta = random_cvec(&mut su.rng, s.dim_idx(a));
                let x = theta(s, s.label(a), &eta)?;
                let drift = pairing_drift(s, &x, d)?;
                if drift > worst.0 {
                    worst = (drift, Some(json!({ "base": s.label(a), "sample": k })));
                }
            }
        }
        Ok(pass_if(worst.0 <= DRIFT_TOL, worst.0, worst.1))
    });
    suite.run("jtl.pairing-sesquilinear", "B is conjugate-linear in D^x and linear in D", |su| {
        let mut worst = 0.0f64;
        let n = s.dim_idx(s.top());
        for a in 0..s.len() {
            let la = s.label(a);
            let dim = s.dim_idx(a);
            let (x, y) = (theta(s, la, &random_cvec(&mut su.rng, dim))?, theta(s, la, &random_cvec(&mut su.rng, dim))?);
            let d = DElement::new(s, random_cvec(&mut su.rng, n))?;
            let e = DElement::new(s, random_cvec(&mut su.rng, n))?;
            let k = c(0.3, -1.7);
            let xy = x.combine(s, k, &y, c(1.0, 0.0))?;
            let lhs = pair(s, &xy, &d)?;
            let rhs = k.conj() * pair(s, &x, &d)? + pair(s, &y, &d)?;
            worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
            let de = d.combine(k, &e, c(1.0, 0.0));
            let lhs = pair(s, &x, &de)?;
            let rhs = k * pair(s, &x, &d)? + pair(s, &x, &e)?;
            worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        }
        Ok(pass_if(worst <= IDENTITY_TOL, worst, None))
    });
    suite.run("jtl.separating", "the duality between D^x and D is separating", |_| {
        let r = separating_check(s);
        let bad = r.entries.iter().find(|e| !e.pass).map(|e| json!({ "index": e.index }));
        Ok(pass_if(r.pass, r.margin, bad))
    });
    suite.run("jtl.isometry-equivalence", "V_ab is an isometry iff Lambda_a = Lambda_b", |_| {
        let r = check_isometry_equiv(s);
        let isometric = r.pairs.iter().filter(|p| p.isometry).count();
        let mixed: Vec<Value> = r
            .pairs
            .iter()
            .filter(|p| !p.consistent())
            .map(|p| json!([p.lower, p.upper, p.isometry, p.lambda_equal]))
            .collect();
        let margin = r.pairs.iter().map(|p| p.isometry_defect).fold(0.0, f64::max);
        let witness = if mixed.is_empty() {
            json!({ "isometric_pairs": isometric, "pairs": r.pairs.len() })
        } else {
            json!({ "mixed": mixed })
        };
        Ok((Verdict::from_pass(r.pass), margin, Some(witness)))
    });
    suite.run("jtl.riesz", "bounded functionals on H_b are represented in D^x", |su| {
        let mut worst = 0.0f64;
        let elements = su.elements();
        for b in 0..s.len() {
            let lb = s.label(b);
            let coeffs = random_cvec(&mut su.rng, s.dim_idx(b));
            let x = riesz_dual(s, lb, &coeffs)?;
            for d in elements.iter().take(su.samples.min(10) + 1) {
                let f: C64 = pi(s, lb, d)?.iter().zip(coeffs.iter()).map(|(p, k)| p * k).sum();
                worst = worst.max((pair(s, &x, d)? - f).norm() / (1.0 + f.norm()));
            }
        }
        Ok(pass_if(worst <= IDENTITY_TOL, worst, None))
    });
}

fn rigging(suite: &mut Suite, opts: VerifyOptions) -> Option<CentralSpace> {
    let s = suite.s;
    suite.run("rhs.condition-a", "no nonzero d in D has inf_a ||Pi_a d||_a = 0", |_| {
        let r = check_condition_a(s, opts.samples, opts.seed);
        Ok((r.verdict, r.margin, Some(json!({ "note": r.note, "witness": r.witness }))))
    });
    suite.run("rhs.condition-c", "0-null sequences with Cauchy components have null components", |_| {
        let r = check_condition_c(s, opts.samples, opts.seed);
        Ok((r.verdict, r.margin, Some(json!({ "note": r.note, "witness": r.witness }))))
    });
    suite.run("rhs.parallelogram", "||.||_0 satisfies the parallelogram law", |_| {
        let r = check_parallelogram(s, opts.samples, opts.seed);
        let ok = r.max_violation <= PARALLELOGRAM_TOL;
        Ok(pass_if(ok, r.max_violation, serde_json::to_value(&r.witness).ok()))
    });
    suite.run("rhs.norm0", "||.||_0 is a norm on D", |su| {
        let elements = su.elements();
        let mut worst = (0.0f64, None);
        for pair_ in elements.chunks(2).filter(|p| p.len() == 2) {
            let (d, e) = (&pair_[0], &pair_[1]);
            let sum = d.combine(c(1.0, 0.0), e, c(1.0, 0.0));
            let (nd, ne, ns) = (norm0(s, d)?, norm0(s, e)?, norm0(s, &sum)?);
            let tri = (ns - nd - ne) / (1.0 + nd + ne);
            if tri > worst.0 {
                worst = (tri, Some(json!({ "d": crate::format::Vector(d.vector.clone()), "e": crate::format::Vector(e.vector.clone()) })));
            }
            let k = c(-0.6, 1.3);
            let scaled = d.combine(k, &DElement::zero(s), c(1.0, 0.0));
            let hom = (norm0(s, &scaled)? - k.norm() * nd).abs() / (1.0 + k.norm() * nd);
            worst.0 = worst.0.max(hom);
        }
        let (lower, _) = (0..s.len())
            .map(|a| (projection_lower_bound(s, a), a))
            .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
        if lower <= s.tolerances().inj {
            return Ok((Verdict::Fail, lower, Some(json!({ "reason": "||.||_0 vanishes on a nonzero element" }))));
        }
        Ok(pass_if(worst.0 <= IDENTITY_TOL, worst.0, worst.1))
    });
    let h0 = build_h0(s);
    suite.run("rhs.h0", "||.||_0 is a Hilbert norm; H_0 is its completion", |_| match &h0 {
        Ok(h) => Ok((Verdict::Pass, spectral_norm(h.gram()), serde_json::to_value(&h.provenance).ok())),
        Err(e) => {
            let w = match e {
                crate::error::Error::ParallelogramViolation { violation, d, e } => json!({
                    "violation": violation,
                    "d": crate::format::Vector(d.clone()),
                    "e": crate::format::Vector(e.clone()),
                }),
                other => json!({ "error": other.to_string() }),
            };
            Ok((Verdict::Fail, f64::NAN, Some(w)))
        }
    });
    let Ok(h0) = h0 else {
        for (check, claim) in H0_DEPENDENT {
            suite.skip(check, claim, "H_0 is not available");
        }
        return None;
    };
    suite.run("rhs.h0-norm", "the norm of H_0 restricted to D is ||.||_0", |su| {
        let mut worst = 0.0f64;
        for d in su.elements() {
            let (a, b) = (h0.space.norm(&d.vector)?, norm0(s, &d)?);
            worst = worst.max((a - b).abs() / (1.0 + b));
        }
        Ok(pass_if(worst <= 1e-9, worst, None))
    });
    suite.run("rhs.sigma", "sigma_b = sigma_a V_ab, each sigma_a injective", |_| {
        let mut worst = 0.0f64;
        let maps = (0..s.len()).map(|a| sigma(s, &h0, s.label(a))).collect::<Result<Vec<_>>>()?;
        for &(a, b) in &s.poset().strict_pairs() {
            let lhs = maps[a].matrix() * s.v_idx(a, b)?;
            let d = spectral_norm(&whiten(&(lhs - maps[b].matrix()), s.space_idx(b), &h0.space));
            worst = worst.max(d);
        }
        let low = maps.iter().map(|m| m.lower_bound()).fold(f64::INFINITY, f64::min);
        let ok = worst <= 1e-9 && low > s.tolerances().inj;
        Ok(pass_if(ok, worst, Some(json!({ "lower_bound": low }))))
    });
    suite.run("rhs.j-embed", "J embeds H_0 in D^x with B(J eta, d) = <d, eta>_0", |su| {
        let n = h0.space.dim();
        let mut worst = 0.0f64;
        let elements = su.elements();
        for d in elements.iter().take(su.samples.min(20) + n) {
            let eta = random_cvec(&mut su.rng, n);
            let lhs = pair(s, &j_embed(s, &h0, &eta)?, d)?;
            let rhs = h0.space.inner(&d.vector, &eta)?;
            worst = worst.max((lhs - rhs).norm() / (1.0 + h0.space.norm(&d.vector)? * h0.space.norm(&eta)?));
            // |<d, eta>_0| <= ||Pi_a d||_a ||eta||_0 at every index
            for a in 0..s.len() {
                let bound = s.space_idx(a).norm(&pi(s, s.label(a), d)?)? * h0.space.norm(&eta)?;
                worst = worst.max((rhs.norm() - bound) / (1.0 + bound));
            }
        }
        Ok(pass_if(worst <= IDENTITY_TOL, worst, None))
    });
    Some(h0)
}

const H0_DEPENDENT: [(&str, &str); 8] = [
    ("rhs.h0-norm", "the norm of H_0 restricted to D is ||.||_0"),
    ("rhs.sigma", "sigma_b = sigma_a V_ab, each sigma_a injective"),
    ("rhs.j-embed", "J embeds H_0 in D^x with B(J eta, d) = <d, eta>_0"),
    ("rhs.reconstruction", "G_a = G_0 + A_a^H G_0 A_a with B_a >= I"),
    ("rhs.reconstruction-order", "a <= b implies A_a <= A_b as forms"),
    ("rhs.reconstruction-fixed-point", "reconstructing the rebuilt system returns the same A_a"),
    ("rhs.intertwiner", "the system and its reconstruction are intertwined by T"),
    ("rhs.intertwiner-sensitivity", "a 1% change of one B_a breaks the intertwiner"),
];

fn reconstruction(suite: &mut Suite, h0: Option<&CentralSpace>) {
    let Some(h0) = h0 else { return };
    let s = suite.s;
    let fam: std::result::Result<ReconstructedFamily, _> = reconstruct_ofamily(s, h0);
    let Ok(fam) = fam else {
        let err = fam.unwrap_err().to_string();
        suite.run(H0_DEPENDENT[3].0, H0_DEPENDENT[3].1, |_| {
            Ok((Verdict::Fail, f64::NAN, Some(json!({ "error": err }))))
        });
        for (check, claim) in &H0_DEPENDENT[4..] {
            suite.skip(check, claim, "no reconstructed family");
        }
        return;
    };
    suite.run(H0_DEPENDENT[3].0, H0_DEPENDENT[3].1, |_| {
        Ok(pass_if(fam.gram_defect <= RECONSTRUCTION_TOL, fam.gram_defect, None))
    });
    suite.run(H0_DEPENDENT[4].0, H0_DEPENDENT[4].1, |_| {
        let (broken, ties): (Vec<_>, Vec<_>) = order_mismatches(s, &fam).into_iter().partition(|(a, b)| {
            let (a, b) = (s.index(a).expect("known label"), s.index(b).expect("known label"));
            s.poset().leq_idx(a, b)
        });
        if !broken.is_empty() {
            return Ok((Verdict::Fail, broken.len() as f64, Some(json!({ "broken": broken }))));
        }
        // forms may tie across incomparable or reversed indices (isometric links)
        let note = (!ties.is_empty()).then(|| json!({ "form_order_without_index_order": ties }));
        Ok((Verdict::Pass, 0.0, note))
    });
    let rebuilt = fam.to_system(s.poset(), s.tolerances());
    suite.run(H0_DEPENDENT[5].0, H0_DEPENDENT[5].1, |_| {
        let rebuilt = rebuilt.clone()?;
        let again = reconstruct_ofamily(&rebuilt, &build_h0(&rebuilt)?)?;
        let worst = fam
            .a
            .iter()
            .zip(&again.a)
            .map(|(x, y)| spectral_norm(&(x - y)) / (1.0 + spectral_norm(x)))
            .fold(0.0, f64::max);
        Ok(pass_if(worst <= RECONSTRUCTION_TOL, worst, None))
    });
    suite.run(H0_DEPENDENT[6].0, H0_DEPENDENT[6].1, |_| {
        let r = intertwiner(s, &rebuilt.clone()?)?;
        Ok(pass_if(r.pass, r.discrepancy, serde_json::to_value(&r.witness).ok()))
    });
    suite.run(H0_DEPENDENT[7].0, H0_DEPENDENT[7].1, |_| {
        let bent = fam.perturb(s.top_label(), 1.01, s.tolerances())?.to_system(s.poset(), s.tolerances())?;
        let r = intertwiner(s, &bent)?;
        Ok(pass_if(!r.pass && r.discrepancy >= 1e-3, r.discrepancy, None))
    });
}

fn operator_family(suite: &mut Suite, f: &OFamily) {
    let s = suite.s;
    let tol = *s.tolerances();
    suite.run("ofamily.directed", "the operator family is directed by A <= B iff ||A xi|| <= ||B xi||", |_| {
        let r = validate_ofamily(f, &tol);
        Ok(pass_if(r.directed, r.missing_upper_bounds.len() as f64, Some(json!(r.missing_upper_bounds))))
    });
    let grams: Vec<CMat> = (0..s.len()).map(|a| s.space_idx(a).gram().clone()).collect();
    suite.run("ofamily.closed-form", "S_B^{-1/2}(S_A^{1/2} S_B^{-1/2})* S_A^{1/2} = S_B^{-1} S_A", |_| {
        let mut worst = 0.0f64;
        for (a, b) in s.poset().strict_pairs() {
            let formula = closed_form_link(f.base(), &grams[a], &grams[b], &tol)?;
            let simple = simplified_link(&grams[a], &grams[b])?;
            worst = worst.max(spectral_norm(&(formula - simple)) / (1.0 + spectral_norm(s.u_idx(a, b)?)));
        }
        Ok(pass_if(worst <= 1e-9, worst, None))
    });
    suite.run("ofamily.dual-identity", "V_AB is the identity of the base space", |_| {
        let mut worst = 0.0f64;
        for (a, b) in s.poset().strict_pairs() {
            let v = s.v_idx(a, b)?;
            worst = worst.max(spectral_norm(&(v - CMat::identity(v.nrows(), v.ncols()))));
        }
        Ok(pass_if(worst <= 1e-10, worst, None))
    });
    suite.run("ofamily.theta-factorization", "Theta_A = (S_A^{1/2})^x S_A^{1/2}", |su| {
        let mut worst = 0.0f64;
        for a in 0..s.len() {
            let xi = random_cvec(&mut su.rng, s.dim_idx(a));
            match theta_ofamily(f, s, s.label(a), &xi) {
                Ok(_) => {}
                Err(crate::error::Error::ClosedFormMismatch(d)) => worst = worst.max(d),
                Err(e) => return Err(e),
            }
        }
        Ok(pass_if(worst <= 1e-10, worst, None))
    });
}

/// Operators from the file plus seeded probes: the identity at the first
/// minimal index and one random operator per index.
fn probes(suite: &mut Suite, declared: &[(String, LimOperator)]) -> Result<Vec<(String, LimOperator)>> {
    let s = suite.s;
    let mut out: Vec<(String, LimOperator)> = declared.to_vec();
    let low = s.poset().minimal_elements()[0];
    let n = s.dim_idx(low);
    out.push((format!("probe:identity@{}", s.label(low)), lift(s, s.label(low), &CMat::identity(n, n))?));
    for a in 0..s.len() {
        let m = random_cmat(&mut suite.rng, s.dim_idx(a), s.dim_idx(a));
        out.push((format!("probe:random@{}", s.label(a)), lift(s, s.label(a), &m)?));
    }
    Ok(out)
}

fn above(s: &ContractiveSystem, base: &str) -> Vec<String> {
    let b = s.index(base).expect("known base");
    (0..s.len()).filter(|&g| s.poset().leq_idx(b, g)).map(|g| s.label(g).to_string()).collect()
}

fn operators(suite: &mut Suite, declared: &[(String, LimOperator)]) {
    let s = suite.s;
    let ops = match probes(suite, declared) {
        Ok(ops) => ops,
        Err(e) => {
            suite.run("opalg.operators", "operators lift to L(D, D^x)", |_| Err(e));
            return;
        }
    };
    suite.run("opalg.form-round-trip", "X_g is recovered from the form of X at every g >= base", |_| {
        let mut worst = 0.0f64;
        for (_, x) in &ops {
            for g in above(s, &x.base) {
                let comp = component_at(s, x, &g)?;
                let back = form_component(s, x, &g)?.ok_or_else(|| crate::error::Error::NotInvertible(g.clone()))?;
                worst = worst.max(spectral_norm(&(back - &comp)) / (1.0 + spectral_norm(&comp)));
            }
        }
        Ok(pass_if(worst <= IDENTITY_TOL, worst, None))
    });
    suite.run("opalg.support", "d(X) and the bound constants of every operator", |_| {
        let listing: Vec<Value> = ops
            .iter()
            .map(|(name, x)| Ok(json!({ "operator": name, "support": support_set(s, x)? })))
            .collect::<Result<_>>()?;
        let all_above = ops.iter().all(|(_, x)| {
            above(s, &x.base)
                .iter()
                .all(|g| crate::opalg::bound_constant(s, x, g).map(|b| b.is_some()).unwrap_or(false))
        });
        Ok((Verdict::from_pass(all_above), 0.0, Some(json!(listing))))
    });
    suite.run("opalg.involution", "X^dagger^dagger = X and B(X^dagger e, d) = conj B(X d, e)", |su| {
        let elements = su.elements();
        let mut worst = 0.0f64;
        let mut exact = true;
        for (_, x) in &ops {
            let xd = involution(x);
            exact &= involution(&xd) == *x;
            for w in elements.windows(2).take(su.samples.min(10) + 1) {
                let (d, e) = (&w[0], &w[1]);
                let lhs = pair(s, &apply(s, &xd, e)?, d)?;
                let rhs = pair(s, &apply(s, x, d)?, e)?.conj();
                worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
            }
        }
        Ok(pass_if(exact && worst <= IDENTITY_TOL, worst, Some(json!({ "exact_double_dagger": exact }))))
    });
    suite.run("opalg.combine-adjoint", "(aX + bY)^dagger = conj(a) X^dagger + conj(b) Y^dagger", |_| {
        let (a, b) = (c(0.5, -2.0), c(-1.25, 0.75));
        let mut worst = 0.0f64;
        for (_, x) in &ops {
            for (_, y) in &ops {
                let lhs = involution(&combine(s, x, y, a, b)?);
                let rhs = combine(s, &involution(x), &involution(y), a.conj(), b.conj())?;
                worst = worst.max(operator_distance(s, &lhs, &rhs)?);
            }
        }
        Ok(pass_if(worst <= OPERATOR_TOL, worst, None))
    });
    suite.run("opalg.lift-compatibility", "Phi_a(M) = Phi_b(U_ba M V_ab)", |_| {
        let mut worst = 0.0f64;
        for (_, x) in &ops {
            for g in above(s, &x.base) {
                let moved = lift(s, &g, &component_at(s, x, &g)?)?;
                worst = worst.max(operator_distance(s, x, &moved)?);
                let adj = adjoint_component_at(s, x, &g)?;
                let sp = s.space(&g)?;
                let direct = crate::hspace::metric_adjoint(&component_at(s, x, &g)?, sp, sp);
                worst = worst.max(spectral_norm(&(adj - &direct)) / (1.0 + spectral_norm(&direct)));
            }
        }
        Ok(pass_if(worst <= OPERATOR_TOL, worst, None))
    });
    // pairwise products, computed once
    let products: Result<Vec<Vec<Option<LimOperator>>>> = ops
        .iter()
        .map(|(_, x)| ops.iter().map(|(_, y)| Ok(partial_product(s, x, y)?.defined())).collect())
        .collect();
    suite.run("opalg.product-adjoint", "(X . Y)^dagger = Y^dagger . X^dagger whenever defined", |_| {
        let products = products.clone()?;
        let mut worst = 0.0f64;
        let mut defined = 0usize;
        for (i, (_, x)) in ops.iter().enumerate() {
            for (j, (_, y)) in ops.iter().enumerate() {
                let Some(xy) = &products[i][j] else { continue };
                defined += 1;
                let Some(yx) = partial_product(s, &involution(y), &involution(x))?.defined() else {
                    return Ok((Verdict::Fail, f64::INFINITY, Some(json!({ "reason": "reversed product undefined" }))));
                };
                worst = worst.max(operator_distance(s, &involution(xy), &yx)?);
            }
        }
        Ok(pass_if(worst <= OPERATOR_TOL, worst, Some(json!({ "defined_products": defined }))))
    });
    suite.run("opalg.product-distributive", "X . (Y + Z) = X . Y + X . Z whenever both are defined", |_| {
        let products = products.clone()?;
        let mut worst = 0.0f64;
        let one = c(1.0, 0.0);
        for (i, (_, x)) in ops.iter().enumerate() {
            for (j, (_, y)) in ops.iter().enumerate() {
                for (k, (_, z)) in ops.iter().enumerate().skip(j + 1) {
                    let (Some(xy), Some(xz)) = (&products[i][j], &products[i][k]) else {
                        continue;
                    };
                    let Some(lhs) = partial_product(s, x, &combine(s, y, z, one, one)?)?.defined() else {
                        return Ok((Verdict::Fail, f64::INFINITY, Some(json!({ "reason": "X . (Y + Z) undefined" }))));
                    };
                    worst = worst.max(operator_distance(s, &lhs, &combine(s, xy, xz, one, one)?)?);
                }
            }
        }
        Ok(pass_if(worst <= OPERATOR_TOL, worst, None))
    });
    let low = s.poset().minimal_elements()[0];
    let probe = &ops[declared.len()].1;
    suite.run(
        "opalg.product-probe",
        "Phi_m(I) . Phi_m(I) at the first minimal index m",
        |_| match partial_product(s, probe, probe)? {
            Product::Defined { .. } => Ok((Verdict::Pass, 0.0, Some(json!({ "index": s.label(low) })))),
            Product::Undefined { residual, lower, upper } => Ok((
                Verdict::Undefined,
                residual,
                Some(json!({ "lower": lower, "upper": upper })),
            )),
        },
    );
}

/// `x` as a class, for printing.
pub fn describe_dx(s: &ContractiveSystem, x: &DxElement) -> Result<Value> {
    let top = lift_to(s, x, s.top_label())?;
    Ok(json!({ "base": x.base, "vector": crate::format::Vector(x.vector.clone()), "at_top": crate::format::Vector(top) }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::load_system;
    use crate::generators::{diamond_counterexample, e1_family, shift_chain};

    fn loaded(s: ContractiveSystem, f: Option<OFamily>) -> LoadedSystem {
        LoadedSystem {
            name: None,
            system: s,
            ofamily: f,
            operators: vec![],
        }
    }

    #[test]
    fn e1_passes_everything() {
        let f = e1_family();
        let s = crate::ofamily::build_system_from_ofamily(&f, &Default::default()).unwrap();
        let r = verify(&loaded(s, Some(f)), VerifyOptions { seed: 1, samples: 20 });
        assert!(r.passed(), "{}", r.render());
        assert_eq!(r.entry("rhs.condition-a").unwrap().verdict, Verdict::PassProved);
        let probe = r.entry("opalg.product-probe").unwrap();
        assert_eq!(probe.verdict, Verdict::Undefined);
        assert!((probe.margin.unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn shift_chain_passes() {
        let r = verify(&loaded(shift_chain(3, 4).unwrap(), None), VerifyOptions { seed: 1, samples: 20 });
        assert!(r.passed(), "{}", r.render());
    }

    #[test]
    fn diamond_fails_parallelogram() {
        let r = verify(&loaded(diamond_counterexample(), None), VerifyOptions { seed: 1, samples: 50 });
        let e = r.entry("rhs.parallelogram").unwrap();
        assert_eq!(e.verdict, Verdict::Fail);
        assert!((e.margin.unwrap() - 6.0).abs() < 1e-9);
        assert_eq!(r.entry("rhs.h0").unwrap().verdict, Verdict::Fail);
        assert_eq!(r.entry("rhs.sigma").unwrap().verdict, Verdict::Inconclusive);
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn deterministic_and_round_trips() {
        let text = r#"{"kind": "generator", "generator": {"type": "random", "seed": 5, "nodes": 4, "max_dim": 3}}"#;
        let l = load_system(text, None).unwrap();
        let a = verify(&l, VerifyOptions { seed: 9, samples: 10 });
        let b = verify(&l, VerifyOptions { seed: 9, samples: 10 });
        assert_eq!(a, b);
        let back: Report = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}
