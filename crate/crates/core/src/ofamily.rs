//! Contractive systems generated by a family of operators on one base space.
//!
//! Each operator `A` gives the graph norm `||xi||_A^2 = ||xi||^2 + ||A xi||^2`,
//! i.e. the Gram matrix `G_A = G_0 + A^H G_0 A`. For `A <= B` the linking map
//! is `U_BA = S_B^{-1/2} (S_A^{1/2} S_B^{-1/2})* S_A^{1/2}` with
//! `S_A = G_0^{-1} G_A`; it collapses to `S_B^{-1} S_A`, and its adjoint is
//! the identity of the base coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hspace::{
    hermitian_part, metric_adjoint, min_eigenvalue, psd_sqrt, spectral_norm, CMat, CVec,
    MetricSpace,
};
use crate::jtl::{d_basis, pair, pi, theta, DxElement};
use crate::poset::IndexPoset;
use crate::system::{ContractiveSystem, Link, Provenance};
use crate::tolerance::Tolerances;

/// Agreement demanded between the closed form and `S_B^{-1} S_A`.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Agreement demanded of `V_AB` with the identity.
pub const IDENTITY_DUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OFamily {
    base: MetricSpace,
    ops: Vec<(String, CMat)>,
}

impl OFamily {
    pub fn new(base: MetricSpace, ops: Vec<(String, CMat)>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidParameter("operator family is empty".into()));
        }
        for (i, (name, m)) in ops.iter().enumerate() {
            if m.shape() != (base.dim(), base.dim()) {
                return Err(Error::DimMismatch {
                    expected: base.dim(),
                    found: if m.nrows() != base.dim() { m.nrows() } else { m.ncols() },
                });
            }
            if ops[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateLabel(name.clone()));
            }
        }
        Ok(Self { base, ops })
    }

    pub fn base(&self) -> &MetricSpace {
        &self.base
    }

    pub fn ops(&self) -> &[(String, CMat)] {
        &self.ops
    }

    pub fn op(&self, name: &str) -> Result<&CMat> {
        self.ops
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::UnknownLabel(name.into()))
    }

    /// `A^H G_0 A`: the form `||A xi||^2`.
    pub fn form(&self, a: &CMat) -> CMat {
        hermitian_part(&(a.adjoint() * self.base.gram() * a))
    }

    /// Gram matrix of the graph norm of `a`.
    pub fn graph_gram(&self, a: &CMat) -> CMat {
        hermitian_part(&(self.base.gram() + self.form(a)))
    }
}

/// `A <= B` as forms: `B^H G_0 B - A^H G_0 A` is PSD up to tolerance.
pub fn form_leq(qa: &CMat, qb: &CMat, tol: &Tolerances) -> (bool, f64) {
    let lowest = min_eigenvalue(&(qb - qa));
    let scale = qa.norm().max(qb.norm()).max(1.0);
    (lowest >= -tol.pd * scale, lowest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OFamilyReport {
    pub labels: Vec<String>,
    /// `order[i][j]`: op `i` is dominated by op `j`.
    pub order: Vec<Vec<bool>>,
    /// Pairs with identical graph norms; the second is merged into the first.
    pub ties: Vec<(String, String)>,
    /// Pairs without an upper bound in the family.
    pub missing_upper_bounds: Vec<(String, String)>,
    pub directed: bool,
}

pub fn validate_ofamily(f: &OFamily, tol: &Tolerances) -> OFamilyReport {
    let forms: Vec<CMat> = f.ops.iter().map(|(_, a)| f.form(a)).collect();
    let n = forms.len();
    let order: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || form_leq(&forms[i], &forms[j], tol).0).collect())
        .collect();
    let labels: Vec<String> = f.ops.iter().map(|(n, _)| n.clone()).collect();
    let mut ties = Vec::new();
    let mut missing = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if order[i][j] && order[j][i] {
                ties.push((labels[i].clone(), labels[j].clone()));
            }
            if !(0..n).any(|k| order[i][k] && order[j][k]) {
                missing.push((labels[i].clone(), labels[j].clone()));
            }
        }
    }
    OFamilyReport {
        directed: missing.is_empty(),
        labels,
        order,
        ties,
        missing_upper_bounds: missing,
    }
}

/// `S^{1/2}` and `S^{-1/2}` of the base-self-adjoint operator `S = G_0^{-1} G`.
fn operator_roots(base: &MetricSpace, gram: &CMat, tol: &Tolerances) -> Result<(CMat, CMat)> {
    let w = base.gram_sqrt();
    let w_inv = base.gram_inv_sqrt();
    let whitened = hermitian_part(&(w_inv * gram * w_inv));
    let root = psd_sqrt(&whitened, tol)?;
    let inv_root = MetricSpace::new(whitened, tol)?.gram_inv_sqrt().clone();
    Ok((w_inv * root * w, w_inv * inv_root * w))
}

/// `U_BA` from the square-root formula, checked against `S_B^{-1} S_A`.
pub fn closed_form_link(base: &MetricSpace, gram_a: &CMat, gram_b: &CMat, tol: &Tolerances) -> Result<CMat> {
    let (sa_half, _) = operator_roots(base, gram_a, tol)?;
    let (_, sb_neg_half) = operator_roots(base, gram_b, tol)?;
    let inner = &sa_half * &sb_neg_half;
    let formula = &sb_neg_half * metric_adjoint(&inner, base, base) * &sa_half;
    let simple = simplified_link(gram_a, gram_b)?;
    let defect = spectral_norm(&(&formula - &simple)) / (1.0 + spectral_norm(&simple));
    if defect > CLOSED_FORM_TOL {
        return Err(Error::ClosedFormMismatch(defect));
    }
    Ok(formula)
}

/// `S_B^{-1} S_A = G_B^{-1} G_A`.
pub fn simplified_link(gram_a: &CMat, gram_b: &CMat) -> Result<CMat> {
    gram_b
        .clone()
        .lu()
        .solve(gram_a)
        .ok_or(Error::SingularGram)
}

/// System over a given poset whose index `labels[i]` carries the graph norm
/// of `ops[i]`. Every covering pair must respect the operator order.
pub fn system_from_operators(
    base: &MetricSpace,
    poset: IndexPoset,
    ops: &[CMat],
    tol: &Tolerances,
) -> Result<ContractiveSystem> {
    if ops.len() != poset.len() {
        return Err(Error::IndexMismatch(format!(
            "{} operators for {} indices",
            ops.len(),
            poset.len()
        )));
    }
    let grams: Vec<CMat> = ops
        .iter()
        .map(|a| {
            if a.shape() != (base.dim(), base.dim()) {
                return Err(Error::DimMismatch {
                    expected: base.dim(),
                    found: a.nrows(),
                });
            }
            Ok(hermitian_part(&(base.gram() + a.adjoint() * base.gram() * a)))
        })
        .collect::<Result<_>>()?;
    let spaces = grams
        .iter()
        .map(|g| MetricSpace::new(g.clone(), tol))
        .collect::<Result<Vec<_>>>()?;
    let mut links = Vec::new();
    for &(a, b) in poset.covers() {
        let (ok, lowest) = form_leq(&(&grams[a] - base.gram()), &(&grams[b] - base.gram()), tol);
        if !ok {
            return Err(Error::OrderViolation {
                lower: poset.label(a).into(),
                upper: poset.label(b).into(),
                min_eigenvalue: lowest,
            });
        }
        // the formula is checked; the simplified form is what gets stored
        closed_form_link(base, &grams[a], &grams[b], tol)?;
        let u = simplified_link(&grams[a], &grams[b])?;
        let v = metric_adjoint(&u, &spaces[a], &spaces[b]);
        let defect = spectral_norm(&(v - CMat::identity(base.dim(), base.dim())));
        if defect > IDENTITY_DUAL_TOL {
            return Err(Error::ClosedFormMismatch(defect));
        }
        links.push(Link::new(poset.label(a), poset.label(b), u));
    }
    Ok(ContractiveSystem::new(poset, spaces, links, *tol)?.with_provenance(Provenance::Ofamily))
}

/// Index poset of the operator order: ties merged into the first name,
/// links on the covering pairs.
pub fn build_system_from_ofamily(f: &OFamily, tol: &Tolerances) -> Result<ContractiveSystem> {
    let report = validate_ofamily(f, tol);
    if let Some((a, b)) = report.missing_upper_bounds.first() {
        return Err(Error::NotDirected(a.clone(), b.clone()));
    }
    let n = f.ops.len();
    let kept: Vec<usize> = (0..n)
        .filter(|&i| !(0..i).any(|j| report.order[i][j] && report.order[j][i]))
        .collect();
    let labels: Vec<String> = kept.iter().map(|&i| f.ops[i].0.clone()).collect();
    let strict: Vec<(usize, usize)> = (0..kept.len())
        .flat_map(|i| (0..kept.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && report.order[kept[i]][kept[j]])
        .collect();
    let poset = IndexPoset::from_indices(labels.clone(), strict)?;
    let poset = IndexPoset::from_indices(labels, poset.hasse_covers())?;
    let ops: Vec<CMat> = kept.iter().map(|&i| f.ops[i].1.clone()).collect();
    system_from_operators(&f.base, poset, &ops, tol)
}

/// `Theta_A(xi)`, after checking the factorisation
/// `B(Theta_A xi, d) = <S_A^{1/2} Pi_A d, S_A^{1/2} xi>` on a basis of `D`.
pub fn theta_ofamily(f: &OFamily, s: &ContractiveSystem, name: &str, xi: &CVec) -> Result<DxElement> {
    let a = f.op(name)?;
    let x = theta(s, name, xi)?;
    let (root, _) = operator_roots(&f.base, &f.graph_gram(a), s.tolerances())?;
    let rxi = &root * xi;
    for d in d_basis(s) {
        let via_root = f.base.inner(&(&root * pi(s, name, &d)?), &rxi)?;
        let direct = pair(s, &x, &d)?;
        let defect = (via_root - direct).norm() / (1.0 + direct.norm());
        if defect > IDENTITY_DUAL_TOL {
            return Err(Error::ClosedFormMismatch(defect));
        }
    }
    Ok(x)
}
