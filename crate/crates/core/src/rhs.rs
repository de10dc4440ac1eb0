//! The rigged Hilbert space of a system: `||.||_0 = inf_a ||Pi_a .||_a`,
//! the central space `H_0`, the embeddings `sigma_a` and `J`, the operator
//! family `B_a`, `A_a = (B_a^2 - I)^{1/2}` reconstructing the system, and
//! the intertwiner between a system and its reconstruction.
//!
//! `D` is identified with the top space, so `H_0` is `C^{dim top}` with a
//! Gram matrix `G_0` in those coordinates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::cvec_serde;
use crate::hspace::{
    basis_vector, c, hermitian_eigen, hermitian_part, psd_sqrt, psd_sqrt_at_scale, spectral_norm, whiten, CMat, CVec, LinMap,
    MetricSpace, I,
};
use crate::jtl::{pi, projection_lower_bound, theta, DElement, DxElement};
use crate::ofamily::{form_leq, system_from_operators};
use crate::poset::IndexPoset;
use crate::report::Verdict;
use crate::sample::{random_cvec, rng};
use crate::system::{ContractiveSystem, Provenance};
use crate::tolerance::Tolerances;

/// Largest parallelogram defect tolerated before `H_0` is refused.
pub const PARALLELOGRAM_TOL: f64 = 1e-8;
/// Sample pairs used by [`build_h0`] when there is no least index.
pub const H0_SAMPLES: usize = 200;
const H0_SEED: u64 = 0x4830;
/// Norms below this count as zero in the decay heuristics.
const NEGLIGIBLE: f64 = 1e-300;

/// `||d||_0`: the least of the component norms.
pub fn norm0(s: &ContractiveSystem, d: &DElement) -> Result<f64> {
    let mut best = f64::INFINITY;
    for a in 0..s.len() {
        let comp = pi(s, s.label(a), d)?;
        best = best.min(s.space_idx(a).norm_unchecked(&comp));
    }
    Ok(best)
}

fn element(s: &ContractiveSystem, v: CVec) -> DElement {
    DElement {
        anchor: s.top_label().to_string(),
        vector: v,
    }
}

/// `| ||d+e||^2 + ||d-e||^2 - 2||d||^2 - 2||e||^2 |` in `||.||_0`.
pub fn parallelogram_defect(s: &ContractiveSystem, d: &DElement, e: &DElement) -> Result<f64> {
    let sum = element(s, &d.vector + &e.vector);
    let diff = element(s, &d.vector - &e.vector);
    let v = norm0(s, &sum)?.powi(2) + norm0(s, &diff)?.powi(2) - 2.0 * norm0(s, d)?.powi(2) - 2.0 * norm0(s, e)?.powi(2);
    Ok(v.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelogramWitness {
    #[serde(with = "cvec_serde")]
    pub d: CVec,
    #[serde(with = "cvec_serde")]
    pub e: CVec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelogramReport {
    pub max_violation: f64,
    pub pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ParallelogramWitness>,
}

/// Largest parallelogram defect over pairs of `||.||_0`-unit vectors: all
/// pairs of basis vectors of `D` (also with an `i` phase), then
/// `sample_count` seeded random pairs.
pub fn check_parallelogram(s: &ContractiveSystem, sample_count: usize, seed: u64) -> ParallelogramReport {
    let n = s.dim_idx(s.top());
    let unit = |v: CVec| -> Option<CVec> {
        let nv = norm0(s, &element(s, v.clone())).expect("top vector");
        (nv > NEGLIGIBLE).then(|| v.unscale(nv))
    };
    let mut candidates: Vec<(CVec, CVec)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (ei, ej) = (basis_vector(n, i), basis_vector(n, j));
            candidates.push((ei.clone(), ej.clone()));
            candidates.push((ei, ej * I));
        }
    }
    let mut r = rng(seed);
    for _ in 0..sample_count {
        candidates.push((random_cvec(&mut r, n), random_cvec(&mut r, n)));
    }
    let mut report = ParallelogramReport {
        max_violation: 0.0,
        pairs: 0,
        witness: None,
    };
    for (d, e) in candidates {
        let (Some(d), Some(e)) = (unit(d), unit(e)) else {
            continue;
        };
        report.pairs += 1;
        let v = parallelogram_defect(s, &element(s, d.clone()), &element(s, e.clone())).expect("top vectors");
        if v > report.max_violation {
            report.max_violation = v;
            report.witness = Some(ParallelogramWitness { d, e });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "from")]
pub enum H0Provenance {
    /// Pulled back from the least index.
    MinimumElement { index: String },
    /// Recovered from `||.||_0` by polarization.
    Polarization,
}

/// `H_0`, in the coordinates of `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSpace {
    pub space: Arc<MetricSpace>,
    pub provenance: H0Provenance,
}

impl CentralSpace {
    pub fn gram(&self) -> &CMat {
        self.space.gram()
    }
}

/// Unit vector spanning (approximately) the kernel of `Pi_a`.
fn kernel_vector(s: &ContractiveSystem, a: usize) -> CVec {
    let p = s.v_idx(a, s.top()).expect("a <= top");
    let pulled = p.adjoint() * s.space_idx(a).gram() * p;
    let (_, vectors) = hermitian_eigen(&pulled);
    vectors.column(0).into_owned()
}

/// Builds `H_0`. With a least index `m` the Gram matrix is the pullback
/// `Pi_m^H G_m Pi_m`; otherwise `||.||_0` must pass the parallelogram law and
/// `G_0` is obtained by polarization.
pub fn build_h0(s: &ContractiveSystem) -> Result<CentralSpace> {
    let tol = s.tolerances();
    let top = s.top();
    if let Some(m) = s.poset().minimum() {
        let p = s.v_idx(m, top)?;
        let g0 = hermitian_part(&(p.adjoint() * s.space_idx(m).gram() * p));
        return Ok(CentralSpace {
            space: Arc::new(MetricSpace::new(g0, tol)?),
            provenance: H0Provenance::MinimumElement {
                index: s.label(m).into(),
            },
        });
    }
    let check = check_parallelogram(s, H0_SAMPLES, H0_SEED);
    if check.max_violation > PARALLELOGRAM_TOL {
        let w = check.witness.expect("violation has a witness");
        return Err(Error::ParallelogramViolation {
            violation: check.max_violation,
            d: w.d,
            e: w.e,
        });
    }
    let n = s.dim_idx(top);
    let sq = |v: CVec| norm0(s, &element(s, v)).expect("top vector").powi(2);
    let phases = [c(1.0, 0.0), I, c(-1.0, 0.0), -I];
    // G[i][j] = <e_j, e_i>_0 = 1/4 sum_p i^p ||e_j + i^p e_i||^2
    let g0 = CMat::from_fn(n, n, |i, j| {
        phases
            .iter()
            .map(|&ph| ph * sq(basis_vector(n, j) + basis_vector(n, i) * ph))
            .sum::<crate::hspace::C64>()
            * 0.25
    });
    let space = MetricSpace::new(hermitian_part(&g0), tol)?;
    let mut r = rng(H0_SEED + 1);
    for _ in 0..H0_SAMPLES.min(32) {
        let v = random_cvec(&mut r, n);
        let (from_gram, direct) = (space.norm_unchecked(&v), sq(v.clone()).sqrt());
        let gap = (from_gram - direct).abs();
        if gap > 1e-9 * (1.0 + direct) {
            return Err(Error::ParallelogramViolation {
                violation: gap,
                d: v,
                e: CVec::zeros(n),
            });
        }
    }
    Ok(CentralSpace {
        space: Arc::new(space),
        provenance: H0Provenance::Polarization,
    })
}

fn square_projection(s: &ContractiveSystem, a: usize, label: &str) -> Result<CMat> {
    let p = s.v_idx(a, s.top())?;
    if !p.is_square() || projection_lower_bound(s, a) <= s.tolerances().inj {
        return Err(Error::NotInvertible(label.into()));
    }
    Ok(p.clone())
}

/// `sigma_a = Pi_a^{-1}: H_a -> H_0`.
pub fn sigma(s: &ContractiveSystem, h0: &CentralSpace, alpha: &str) -> Result<LinMap> {
    let a = s.index(alpha)?;
    let p = square_projection(s, a, alpha)?;
    let inv = p.try_inverse().ok_or_else(|| Error::NotInvertible(alpha.into()))?;
    LinMap::new(s.space_idx(a).clone(), h0.space.clone(), inv)
}

/// `J(eta)`: the element of `D^x` with `B(J eta, d) = <d, eta>_0` for all `d`,
/// represented at the least index when there is one, else at the top.
pub fn j_embed(s: &ContractiveSystem, h0: &CentralSpace, eta: &CVec) -> Result<DxElement> {
    h0.space.check_vector(eta)?;
    let beta = s
        .poset()
        .minimum()
        .filter(|&m| square_projection(s, m, s.label(m)).is_ok())
        .unwrap_or_else(|| s.top());
    // B(Theta_b y, d) = y^H G_b P_b d, so P_b^H G_b y = G_0 eta
    let lhs = s.v_idx(beta, s.top())?.adjoint() * s.space_idx(beta).gram();
    let y = lhs.lu().solve(&(h0.gram() * eta)).ok_or(Error::SingularGram)?;
    theta(s, s.label(beta), &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelWitness {
    pub index: String,
    /// A nonzero element of `D` (top coordinates) with `Pi_index d = 0`.
    #[serde(with = "cvec_serde")]
    pub vector: CVec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub margin: f64,
    pub note: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<KernelWitness>,
}

/// Smallest lower bound of the projections and the index attaining it.
fn worst_projection(s: &ContractiveSystem) -> (f64, usize) {
    (0..s.len())
        .map(|a| (projection_lower_bound(s, a), a))
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
}

fn kernel_failure(s: &ContractiveSystem, margin: f64, a: usize, what: &str) -> ConditionReport {
    ConditionReport {
        verdict: Verdict::Fail,
        margin,
        note: format!("Pi_{} has a kernel: {what}", s.label(a)),
        witness: Some(KernelWitness {
            index: s.label(a).into(),
            vector: kernel_vector(s, a),
        }),
    }
}

fn generator_chain(s: &ContractiveSystem) -> Option<bool> {
    match s.provenance() {
        Provenance::Generator { bounded_below, .. } => Some(*bounded_below),
        _ => None,
    }
}

/// Condition (A): no nonzero element of `D` has `inf_a ||Pi_a d||_a = 0`.
pub fn check_condition_a(s: &ContractiveSystem, sample_count: usize, seed: u64) -> ConditionReport {
    let (lower, at) = worst_projection(s);
    if lower <= s.tolerances().inj {
        return kernel_failure(s, lower, at, "a nonzero family with zero infimum");
    }
    let Some(bounded_below) = generator_chain(s) else {
        return ConditionReport {
            verdict: Verdict::PassProved,
            margin: lower,
            note: "finitely many norms, each positive on D".into(),
            witness: None,
        };
    };
    if sample_count == 0 {
        return ConditionReport {
            verdict: Verdict::Inconclusive,
            margin: lower,
            note: "no samples".into(),
            witness: None,
        };
    }
    // decay of the norm from the second lowest to the lowest index
    let order = s.poset().topological_order();
    let mut r = rng(seed);
    let n = s.dim_idx(s.top());
    let mut ratio = f64::INFINITY;
    for _ in 0..sample_count {
        let d = element(s, random_cvec(&mut r, n));
        if order.len() >= 2 {
            let low = s.space_idx(order[0]).norm_unchecked(&pi(s, s.label(order[0]), &d).expect("chain"));
            let next = s.space_idx(order[1]).norm_unchecked(&pi(s, s.label(order[1]), &d).expect("chain"));
            if next > NEGLIGIBLE {
                ratio = ratio.min(low / next);
            }
        } else {
            ratio = 1.0;
        }
    }
    let decaying = ratio < 1.0 - s.tolerances().equal;
    let (verdict, note) = if bounded_below {
        (Verdict::PassEmpirical, "least index lies in the evaluated prefix")
    } else if decaying {
        (Verdict::Inconclusive, "norms decrease towards the unevaluated indices")
    } else {
        (Verdict::PassEmpirical, "no decay towards the unevaluated indices")
    };
    ConditionReport {
        verdict,
        margin: ratio,
        note: note.into(),
        witness: None,
    }
}

/// Condition (C): a `||.||_0`-null sequence whose components are Cauchy has
/// components tending to zero.
pub fn check_condition_c(s: &ContractiveSystem, sample_count: usize, seed: u64) -> ConditionReport {
    if sample_count == 0 {
        return ConditionReport {
            verdict: Verdict::Inconclusive,
            margin: 0.0,
            note: "no samples".into(),
            witness: None,
        };
    }
    let (lower, at) = worst_projection(s);
    if lower <= s.tolerances().inj {
        return kernel_failure(s, lower, at, "the constant sequence on it is 0-null with a nonzero limit");
    }
    if generator_chain(s).is_none() {
        return ConditionReport {
            verdict: Verdict::PassProved,
            margin: lower,
            note: "all norms on the finite-dimensional D are equivalent".into(),
            witness: None,
        };
    }
    let mut r = rng(seed);
    let n = s.dim_idx(s.top());
    let steps = 40;
    let mut violation: f64 = 0.0;
    for _ in 0..sample_count {
        let v = random_cvec(&mut r, n);
        let nv = norm0(s, &element(s, v.clone())).expect("top vector");
        if nv <= NEGLIGIBLE {
            continue;
        }
        let last = element(s, v.unscale(nv * 2f64.powi(steps)));
        for a in 0..s.len() {
            let comp = pi(s, s.label(a), &last).expect("a <= top");
            violation = violation.max(s.space_idx(a).norm_unchecked(&comp));
        }
    }
    let pass = violation <= 1e-9;
    ConditionReport {
        verdict: if pass { Verdict::PassEmpirical } else { Verdict::Fail },
        margin: violation,
        note: format!("largest component norm after {steps} halvings of a 0-unit vector"),
        witness: None,
    }
}

/// `B_a` and `A_a = (B_a^2 - I)^{1/2}` on `H_0` for every index, with
/// `||xi||_a = ||B_a xi||_0` and `G_a = G_0 + A_a^H G_0 A_a` (pulled back).
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedFamily {
    pub labels: Vec<String>,
    pub base: Arc<MetricSpace>,
    pub b: Vec<CMat>,
    pub a: Vec<CMat>,
    /// Pulled-back Gram matrices `Pi_a^H G_a Pi_a`.
    pub grams: Vec<CMat>,
    /// Worst relative defect of `G_0 + A^H G_0 A` against the pulled-back Gram.
    pub gram_defect: f64,
}

fn operator_from_b(base: &MetricSpace, b: &CMat, tol: &Tolerances) -> Result<CMat> {
    let (w, w_inv) = (base.gram_sqrt(), base.gram_inv_sqrt());
    let bt = hermitian_part(&(w * b * w_inv));
    let n = bt.nrows();
    let sq = &bt * &bt;
    let scale = 1.0 + spectral_norm(&sq);
    let at = psd_sqrt_at_scale(&hermitian_part(&(sq - CMat::identity(n, n))), tol, scale)?;
    Ok(w_inv * at * w)
}

fn gram_defect(base: &MetricSpace, a: &CMat, target: &CMat) -> f64 {
    let rebuilt = base.gram() + a.adjoint() * base.gram() * a;
    spectral_norm(&(rebuilt - target)) / spectral_norm(target).max(f64::MIN_POSITIVE)
}

impl ReconstructedFamily {
    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.into()))
    }

    pub fn b_of(&self, label: &str) -> Result<&CMat> {
        Ok(&self.b[self.index(label)?])
    }

    pub fn a_of(&self, label: &str) -> Result<&CMat> {
        Ok(&self.a[self.index(label)?])
    }

    /// `A_a^H G_0 A_a`.
    pub fn forms(&self) -> Vec<CMat> {
        self.a
            .iter()
            .map(|a| hermitian_part(&(a.adjoint() * self.base.gram() * a)))
            .collect()
    }

    /// Copy with `B_label` multiplied by `factor` and `A_label` recomputed.
    pub fn perturb(&self, label: &str, factor: f64, tol: &Tolerances) -> Result<Self> {
        let k = self.index(label)?;
        let mut out = self.clone();
        out.b[k] = &self.b[k] * c(factor, 0.0);
        out.a[k] = operator_from_b(&self.base, &out.b[k], tol)?;
        Ok(out)
    }

    /// The system generated by the family `{A_a}` on `H_0` over `poset`.
    pub fn to_system(&self, poset: &IndexPoset, tol: &Tolerances) -> Result<ContractiveSystem> {
        if poset.labels() != self.labels.as_slice() {
            return Err(Error::IndexMismatch("poset labels differ from the family".into()));
        }
        system_from_operators(&self.base, poset.clone(), &self.a, tol)
    }
}

pub fn reconstruct_ofamily(s: &ContractiveSystem, h0: &CentralSpace) -> Result<ReconstructedFamily> {
    let tol = s.tolerances();
    let base = &h0.space;
    let (w, w_inv) = (base.gram_sqrt(), base.gram_inv_sqrt());
    let mut out = ReconstructedFamily {
        labels: s.poset().labels().to_vec(),
        base: base.clone(),
        b: Vec::new(),
        a: Vec::new(),
        grams: Vec::new(),
        gram_defect: 0.0,
    };
    for k in 0..s.len() {
        let p = s.v_idx(k, s.top())?;
        let g_hat = hermitian_part(&(p.adjoint() * s.space_idx(k).gram() * p));
        let bt = psd_sqrt(&hermitian_part(&(w_inv * &g_hat * w_inv)), tol)?;
        let b = w_inv * &bt * w;
        let a = operator_from_b(base, &b, tol)?;
        out.gram_defect = out.gram_defect.max(gram_defect(base, &a, &g_hat));
        out.b.push(b);
        out.a.push(a);
        out.grams.push(g_hat);
    }
    Ok(out)
}

/// Pairs `(a, b)` where the index order and the order of the forms
/// `A^H G_0 A` disagree.
pub fn order_mismatches(s: &ContractiveSystem, fam: &ReconstructedFamily) -> Vec<(String, String)> {
    let forms = fam.forms();
    let mut out = Vec::new();
    for a in 0..s.len() {
        for b in 0..s.len() {
            if a != b && s.poset().leq_idx(a, b) != form_leq(&forms[a], &forms[b], s.tolerances()).0 {
                out.push((s.label(a).to_string(), s.label(b).to_string()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertwinerReport {
    /// Worst `||U'_ba phi_a - phi_b U_ba||` over comparable pairs.
    pub link_discrepancy: f64,
    /// Worst failure of `phi_a` to be isometric (the pairing relation).
    pub isometry_discrepancy: f64,
    pub discrepancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(String, String)>,
    pub pass: bool,
}

pub const INTERTWINER_TOL: f64 = 1e-8;

/// Compares `s` with a system `t` on the same index set whose limit `D`
/// is identified with that of `s` through the top coordinates. The maps
/// `phi_a = Pi'_a Pi_a^{-1}: H_a -> H'_a` define `T(Theta_a xi) = Theta'_a(phi_a xi)`;
/// `T` is well defined when `U'_ba phi_a = phi_b U_ba` for all `a <= b`,
/// and it carries the pairing over when every `phi_a` is isometric.
pub fn intertwiner(s: &ContractiveSystem, t: &ContractiveSystem) -> Result<IntertwinerReport> {
    if s.poset().labels() != t.poset().labels() || s.poset().closure() != t.poset().closure() {
        return Err(Error::IndexMismatch("index sets or orders differ".into()));
    }
    if s.top() != t.top() || s.dim_idx(s.top()) != t.dim_idx(t.top()) {
        return Err(Error::IndexMismatch("top spaces differ in dimension".into()));
    }
    let phis: Vec<CMat> = (0..s.len())
        .map(|a| {
            let p = square_projection(s, a, s.label(a))?;
            let inv = p.try_inverse().ok_or_else(|| Error::NotInvertible(s.label(a).into()))?;
            Ok(t.v_idx(a, t.top())? * inv)
        })
        .collect::<Result<_>>()?;
    let mut report = IntertwinerReport {
        link_discrepancy: 0.0,
        isometry_discrepancy: 0.0,
        discrepancy: 0.0,
        witness: None,
        pass: true,
    };
    for (a, phi) in phis.iter().enumerate() {
        let w = whiten(phi, s.space_idx(a), t.space_idx(a));
        let n = w.ncols();
        let d = spectral_norm(&(w.adjoint() * &w - CMat::identity(n, n)));
        report.isometry_discrepancy = report.isometry_discrepancy.max(d);
        if d > report.discrepancy {
            report.discrepancy = d;
            report.witness = Some((s.label(a).into(), s.label(a).into()));
        }
    }
    for (a, b) in s.poset().strict_pairs() {
        let lhs = t.u_idx(a, b)? * &phis[a];
        let rhs = &phis[b] * s.u_idx(a, b)?;
        let d = spectral_norm(&whiten(&(lhs - rhs), s.space_idx(a), t.space_idx(b)));
        report.link_discrepancy = report.link_discrepancy.max(d);
        if d > report.discrepancy {
            report.discrepancy = d;
            report.witness = Some((s.label(a).into(), s.label(b).into()));
        }
    }
    report.pass = report.discrepancy <= INTERTWINER_TOL;
    Ok(report)
}
