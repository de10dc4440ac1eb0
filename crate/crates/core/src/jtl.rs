//! The joint topological limit `(D, D^x)` of a contractive system.
//!
//! A finite directed poset has a greatest index, so a coherent family
//! `(xi_a)` in `D` is fixed by its top component: `xi_a = V_{a,top} xi_top`.
//! [`DElement`] stores exactly that vector. An element of `D^x` is a class
//! `Theta_a(eta_a)`; [`DxElement`] stores one representative `(a, eta_a)`
//! and class equality is decided by lifting both sides to a common upper
//! bound with the `U` maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::cvec_serde;
use crate::hspace::{basis_vector, whiten, CMat, CVec, C64};
use crate::system::ContractiveSystem;

/// A coherent family, stored by its component at the anchor (the top index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DElement {
    pub anchor: String,
    #[serde(with = "cvec_serde")]
    pub vector: CVec,
}

/// Representative `(base, eta_base)` of the class `Theta_base(eta_base)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DxElement {
    pub base: String,
    #[serde(with = "cvec_serde")]
    pub vector: CVec,
}

impl DElement {
    pub fn new(s: &ContractiveSystem, vector: CVec) -> Result<Self> {
        s.space_idx(s.top()).check_vector(&vector)?;
        Ok(Self {
            anchor: s.top_label().to_string(),
            vector,
        })
    }

    pub fn zero(s: &ContractiveSystem) -> Self {
        Self {
            anchor: s.top_label().to_string(),
            vector: CVec::zeros(s.dim_idx(s.top())),
        }
    }

    /// The unique coherent family whose `alpha` component is `xi`.
    pub fn from_component(s: &ContractiveSystem, alpha: &str, xi: &CVec) -> Result<Self> {
        let a = s.index(alpha)?;
        s.space_idx(a).check_vector(xi)?;
        let p = s.v_idx(a, s.top())?;
        if !p.is_square() {
            return Err(Error::NotInvertible(alpha.into()));
        }
        let vector = p
            .clone()
            .lu()
            .solve(xi)
            .ok_or_else(|| Error::NotInvertible(alpha.into()))?;
        Self::new(s, vector)
    }

    pub fn component(&self, s: &ContractiveSystem, alpha: &str) -> Result<CVec> {
        pi(s, alpha, self)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: C64, other: &DElement, b: C64) -> DElement {
        DElement {
            anchor: self.anchor.clone(),
            vector: self.vector.map(|z| z * a) + other.vector.map(|z| z * b),
        }
    }
}

impl DxElement {
    pub fn combine(&self, s: &ContractiveSystem, a: C64, other: &DxElement, b: C64) -> Result<DxElement> {
        let g = s.poset().upper_bound(&self.base, &other.base)?;
        let x = lift_to(s, self, &g)?;
        let y = lift_to(s, other, &g)?;
        Ok(DxElement {
            base: g,
            vector: x.map(|z| z * a) + y.map(|z| z * b),
        })
    }
}

/// `Theta_alpha(xi)`.
pub fn theta(s: &ContractiveSystem, alpha: &str, xi: &CVec) -> Result<DxElement> {
    s.space(alpha)?.check_vector(xi)?;
    Ok(DxElement {
        base: alpha.to_string(),
        vector: xi.clone(),
    })
}

/// Representative of `x` at `gamma >= x.base`.
pub fn lift_to(s: &ContractiveSystem, x: &DxElement, gamma: &str) -> Result<CVec> {
    let (b, g) = (s.index(&x.base)?, s.index(gamma)?);
    s.space_idx(b).check_vector(&x.vector)?;
    Ok(s.u_idx(b, g)? * &x.vector)
}

/// Lifted distance `||x - y||_gamma` and the larger of the two lifted norms,
/// at `gamma = upper_bound(x.base, y.base)`.
pub fn dx_distance(s: &ContractiveSystem, x: &DxElement, y: &DxElement) -> Result<(f64, f64)> {
    let g = s.poset().upper_bound(&x.base, &y.base)?;
    let sp = s.space(&g)?;
    let (lx, ly) = (lift_to(s, x, &g)?, lift_to(s, y, &g)?);
    let scale = sp.norm_unchecked(&lx).max(sp.norm_unchecked(&ly));
    Ok((sp.norm_unchecked(&(lx - ly)), scale))
}

/// Class equality in `D^x`, relative tolerance `tol * (1 + max lifted norm)`.
pub fn dx_equal(s: &ContractiveSystem, x: &DxElement, y: &DxElement, tol: f64) -> Result<bool> {
    let (diff, scale) = dx_distance(s, x, y)?;
    Ok(diff <= tol * (1.0 + scale))
}

/// `Pi_alpha(d) = V_{alpha,anchor} d.vector`.
pub fn pi(s: &ContractiveSystem, alpha: &str, d: &DElement) -> Result<CVec> {
    let (a, t) = (s.index(alpha)?, s.index(&d.anchor)?);
    s.space_idx(t).check_vector(&d.vector)?;
    Ok(s.v_idx(a, t)? * &d.vector)
}

/// The duality form `B(x, d) = <Pi_base d, x.vector>_base`: conjugate-linear
/// in `x`, linear in `d`.
pub fn pair(s: &ContractiveSystem, x: &DxElement, d: &DElement) -> Result<C64> {
    let comp = pi(s, &x.base, d)?;
    s.space(&x.base)?.inner(&comp, &x.vector)
}

/// `Lambda_alpha = Theta_alpha o Pi_alpha`.
pub fn lambda_embed(s: &ContractiveSystem, alpha: &str, d: &DElement) -> Result<DxElement> {
    theta(s, alpha, &pi(s, alpha, d)?)
}

/// `F(xi) = sum_k coeffs[k] xi_k` on `H_beta`, represented as the element
/// `Theta_beta(eta)` with `<xi, eta>_beta = F(xi)`.
pub fn riesz_dual(s: &ContractiveSystem, beta: &str, coeffs: &CVec) -> Result<DxElement> {
    let sp = s.space(beta)?;
    sp.check_vector(coeffs)?;
    let eta = sp.gram_inv() * coeffs.map(|z| z.conj());
    theta(s, beta, &eta)
}

/// Basis of `D`: the families generated by the unit vectors of the top space.
pub fn d_basis(s: &ContractiveSystem) -> Vec<DElement> {
    let n = s.dim_idx(s.top());
    (0..n)
        .map(|k| DElement::new(s, basis_vector(n, k)).expect("basis vector"))
        .collect()
}

/// Smallest whitened singular value of `Pi_alpha` as a map `D -> H_alpha`,
/// with `D` carrying the top norm. Zero when `Pi_alpha` has a kernel.
pub fn projection_lower_bound(s: &ContractiveSystem, a: usize) -> f64 {
    let t = s.top();
    if s.dim_idx(t) > s.dim_idx(a) {
        return 0.0;
    }
    let w = whiten(s.v_idx(a, t).expect("a <= top"), s.space_idx(t), s.space_idx(a));
    w.singular_values().min()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryPair {
    pub lower: String,
    pub upper: String,
    /// `|| W^H W - I ||` for the whitened `V`.
    pub isometry_defect: f64,
    pub isometry: bool,
    pub lambda_equal: bool,
}

impl IsometryPair {
    pub fn consistent(&self) -> bool {
        self.isometry == self.lambda_equal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub pairs: Vec<IsometryPair>,
    pub pass: bool,
}

pub const ISOMETRY_TOL: f64 = 1e-9;

/// For every `a < b`: is `V_ab` an isometry, and do `Lambda_a` and
/// `Lambda_b` agree on a basis of `D`? The two must always agree.
pub fn check_isometry_equiv(s: &ContractiveSystem) -> IsometryReport {
    let basis = d_basis(s);
    let tol = s.tolerances().equal;
    let pairs: Vec<IsometryPair> = s
        .poset()
        .strict_pairs()
        .into_iter()
        .map(|(a, b)| {
            let v = s.v_idx(a, b).expect("comparable");
            let w = whiten(v, s.space_idx(b), s.space_idx(a));
            let gram = w.adjoint() * &w;
            let defect = crate::hspace::spectral_norm(&(gram - CMat::identity(w.ncols(), w.ncols())));
            let (la, lb) = (s.label(a), s.label(b));
            let lambda_equal = basis.iter().all(|d| {
                let x = lambda_embed(s, la, d).expect("a <= top");
                let y = lambda_embed(s, lb, d).expect("b <= top");
                dx_equal(s, &x, &y, tol).expect("directed")
            });
            IsometryPair {
                lower: la.into(),
                upper: lb.into(),
                isometry_defect: defect,
                isometry: defect <= ISOMETRY_TOL,
                lambda_equal,
            }
        })
        .collect();
    let pass = pairs.iter().all(IsometryPair::consistent);
    IsometryReport { pairs, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingEntry {
    pub index: String,
    /// Smallest of the `dim(H_index)` singular values of the pairing matrix.
    pub min_singular_value: f64,
    pub norm: f64,
    /// Whether `D` must also be separated (full row rank) at this index.
    pub square: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingReport {
    pub entries: Vec<SeparatingEntry>,
    /// Worst `min_singular_value / norm`.
    pub margin: f64,
    pub pass: bool,
}

pub const SEPARATING_RATIO: f64 = 1e-8;

/// Pairing matrices `P[i][j] = B(Theta_a f_j, d_i)` over a basis of `D` and
/// of each `H_a`. Columns must be independent for every index (no nonzero
/// class of `D^x` pairs to zero); at the top the matrix is square and must
/// also have independent rows (no nonzero element of `D` pairs to zero).
pub fn separating_check(s: &ContractiveSystem) -> SeparatingReport {
    let basis = d_basis(s);
    let top = s.top();
    let mut entries = Vec::new();
    for a in 0..s.len() {
        let label = s.label(a);
        let dim = s.dim_idx(a);
        let p = CMat::from_fn(basis.len(), dim, |i, j| {
            let x = theta(s, label, &basis_vector(dim, j)).expect("basis");
            pair(s, &x, &basis[i]).expect("a <= top")
        });
        let sv = p.singular_values();
        let norm = sv.max();
        let min_sv = if dim > basis.len() { 0.0 } else { sv.min() };
        let square = a == top;
        let pass = norm > 0.0 && min_sv > SEPARATING_RATIO * norm;
        entries.push(SeparatingEntry {
            index: label.into(),
            min_singular_value: min_sv,
            norm,
            square,
            pass,
        });
    }
    let margin = entries
        .iter()
        .map(|e| if e.norm > 0.0 { e.min_singular_value / e.norm } else { 0.0 })
        .fold(f64::INFINITY, f64::min);
    let pass = entries.iter().all(|e| e.pass);
    SeparatingReport { entries, margin, pass }
}

/// `B(x, d)` evaluated after re-basing `x` at every `gamma >= x.base`;
/// returns the largest relative drift from the value at the base.
pub fn pairing_drift(s: &ContractiveSystem, x: &DxElement, d: &DElement) -> Result<f64> {
    let b = s.index(&x.base)?;
    let reference = pair(s, x, d)?;
    let mut worst: f64 = 0.0;
    for g in 0..s.len() {
        if !s.poset().leq_idx(b, g) {
            continue;
        }
        let label = s.label(g);
        let rebased = theta(s, label, &lift_to(s, x, label)?)?;
        let v = pair(s, &rebased, d)?;
        worst = worst.max((v - reference).norm() / reference.norm().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{e1_system, shift_chain, single_space};
    use crate::hspace::{c, real_vector, ZERO};

    #[test]
    fn theta_examples() {
        let s = e1_system();
        let z = theta(&s, "1", &CVec::zeros(2)).unwrap();
        let zero2 = theta(&s, "2", &CVec::zeros(2)).unwrap();
        assert!(dx_equal(&s, &z, &zero2, 1e-9).unwrap());

        let e = theta(&s, "1", &real_vector(&[1.0, 0.0])).unwrap();
        assert!(!dx_equal(&s, &e, &z, 1e-9).unwrap());

        let xi = real_vector(&[0.3, -1.2]);
        let lifted = theta(&s, "2", &(real_vector(&[0.4, 0.5]).component_mul(&xi))).unwrap();
        assert!(dx_equal(&s, &theta(&s, "1", &xi).unwrap(), &lifted, 1e-9).unwrap());

        assert!(matches!(theta(&s, "1", &CVec::zeros(3)), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn dx_equal_examples() {
        let s = e1_system();
        let x = theta(&s, "1", &real_vector(&[1.0, 0.0])).unwrap();
        assert!(dx_equal(&s, &x, &x, 1e-9).unwrap());
        let y = theta(&s, "2", &real_vector(&[0.4, 0.0])).unwrap();
        assert!(dx_equal(&s, &x, &y, 1e-9).unwrap());
        let w = theta(&s, "2", &real_vector(&[1.0, 0.0])).unwrap();
        assert!(!dx_equal(&s, &x, &w, 1e-9).unwrap());
    }

    #[test]
    fn pi_examples() {
        let s = e1_system();
        let d = DElement::new(&s, real_vector(&[1.0, -2.0])).unwrap();
        assert_eq!(pi(&s, "2", &d).unwrap(), d.vector);
        assert!((pi(&s, "1", &d).unwrap() - &d.vector).norm() < 1e-14);
    }

    #[test]
    fn pair_examples() {
        let s = e1_system();
        let d = DElement::new(&s, real_vector(&[1.0, 1.0])).unwrap();
        let zero = theta(&s, "1", &CVec::zeros(2)).unwrap();
        assert_eq!(pair(&s, &zero, &d).unwrap(), ZERO);

        let x = theta(&s, "1", &real_vector(&[1.0, 0.0])).unwrap();
        assert!((pair(&s, &x, &d).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
        let rebased = theta(&s, "2", &lift_to(&s, &x, "2").unwrap()).unwrap();
        assert!((pair(&s, &rebased, &d).unwrap() - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lambda_examples() {
        let single = single_space();
        let d = DElement::new(&single, real_vector(&[1.0, 2.0])).unwrap();
        let l = lambda_embed(&single, single.top_label(), &d).unwrap();
        assert_eq!(l.vector, d.vector);

        let sc = shift_chain(3, 4).unwrap();
        let d = DElement::new(&sc, real_vector(&[1.0, -0.5, 2.0])).unwrap();
        for a in sc.poset().labels() {
            for b in sc.poset().labels() {
                let (x, y) = (lambda_embed(&sc, a, &d).unwrap(), lambda_embed(&sc, b, &d).unwrap());
                assert!(dx_equal(&sc, &x, &y, 1e-9).unwrap());
            }
        }

        let s = e1_system();
        let d = DElement::new(&s, real_vector(&[1.0, 0.0])).unwrap();
        let (x, y) = (lambda_embed(&s, "1", &d).unwrap(), lambda_embed(&s, "2", &d).unwrap());
        assert!(!dx_equal(&s, &x, &y, 1e-9).unwrap());
    }

    #[test]
    fn isometry_examples() {
        let r = check_isometry_equiv(&shift_chain(3, 4).unwrap());
        assert!(r.pass);
        assert!(r.pairs.iter().all(|p| p.isometry && p.lambda_equal));
        assert_eq!(r.pairs.len(), 6);

        let r = check_isometry_equiv(&e1_system());
        assert!(r.pass);
        assert_eq!(r.pairs.len(), 1);
        assert!(!r.pairs[0].isometry && !r.pairs[0].lambda_equal);

        let r = check_isometry_equiv(&single_space());
        assert!(r.pass && r.pairs.is_empty());
    }

    #[test]
    fn separating_examples() {
        assert!(separating_check(&e1_system()).pass);
        let single = single_space();
        let r = separating_check(&single);
        assert!(r.pass);
        assert!((r.margin - 1.0).abs() < 1e-14);

        // zero out a column of the link: the class Theta_1(e_2) pairs to zero
        let s = e1_system();
        let broken = s.with_links(vec![crate::hspace::real_diag(&[0.4, 0.0])]);
        let r = separating_check(&broken);
        assert!(!r.pass);
        assert!(!r.entries.iter().find(|e| e.index == "1").unwrap().pass);
    }

    #[test]
    fn riesz_examples() {
        let s = e1_system();
        let zero = riesz_dual(&s, "1", &CVec::zeros(2)).unwrap();
        assert_eq!(zero.vector, CVec::zeros(2));

        let x = riesz_dual(&s, "1", &real_vector(&[2.0, 0.0])).unwrap();
        assert!((x.vector - real_vector(&[1.0, 0.0])).norm() < 1e-14);

        // F(xi) = <xi, eta0>: coefficients F(e_k) = eta0^H G e_k
        let eta0 = CVec::from_vec(vec![c(0.5, -1.0), c(2.0, 0.25)]);
        let g = s.space("2").unwrap();
        let coeffs = CVec::from_fn(2, |k, _| g.inner(&basis_vector(2, k), &eta0).unwrap());
        let x = riesz_dual(&s, "2", &coeffs).unwrap();
        assert!((x.vector - eta0).norm() < 1e-13);
    }

    #[test]
    fn pairing_is_sesquilinear() {
        let s = e1_system();
        let d = DElement::new(&s, CVec::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.3)])).unwrap();
        let x = theta(&s, "1", &CVec::from_vec(vec![c(0.2, -1.0), c(1.5, 0.0)])).unwrap();
        let a = c(0.7, -1.3);
        let scaled_x = DxElement {
            base: x.base.clone(),
            vector: x.vector.map(|z| z * a),
        };
        let p = pair(&s, &x, &d).unwrap();
        assert!((pair(&s, &scaled_x, &d).unwrap() - a.conj() * p).norm() < 1e-12);
        let scaled_d = d.combine(a, &DElement::zero(&s), c(1.0, 0.0));
        assert!((pair(&s, &x, &scaled_d).unwrap() - a * p).norm() < 1e-12);
    }
}
