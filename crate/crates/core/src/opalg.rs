//! Inductive-limit operators `X: D -> D^x`.
//!
//! An operator is stored by one component `X_b` on `H_b`; at any `g >= b`
//! its component is `X_g = U_gb X_b V_bg`. The metric adjoint of the stored
//! component is kept alongside, so the involution is an exact swap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::cmat_serde;
use crate::hspace::{metric_adjoint, metric_op_norm, spectral_norm, whiten, CMat, C64};
use crate::jtl::{pi, theta, DElement, DxElement};
use crate::system::ContractiveSystem;

/// Relative slack on the product coherence residual.
pub const PRODUCT_TOL: f64 = 1e-9;
/// Relative slack when reading a component back from the form.
pub const FORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimOperator {
    pub base: String,
    #[serde(with = "cmat_serde")]
    pub matrix: CMat,
    /// Metric adjoint of `matrix` in `H_base`.
    #[serde(with = "cmat_serde")]
    pub adjoint: CMat,
}

/// `Phi_alpha(M)`: the operator with component `M` at `alpha`.
pub fn lift(s: &ContractiveSystem, alpha: &str, m: &CMat) -> Result<LimOperator> {
    let sp = s.space(alpha)?;
    if m.shape() != (sp.dim(), sp.dim()) {
        return Err(Error::DimMismatch {
            expected: sp.dim(),
            found: if m.nrows() != sp.dim() { m.nrows() } else { m.ncols() },
        });
    }
    Ok(LimOperator {
        base: alpha.into(),
        matrix: m.clone(),
        adjoint: metric_adjoint(m, sp, sp),
    })
}

fn transport(s: &ContractiveSystem, base: &str, m: &CMat, beta: &str) -> Result<CMat> {
    let (b, g) = (s.index(base)?, s.index(beta)?);
    Ok(s.u_idx(b, g)? * m * s.v_idx(b, g)?)
}

/// `X_beta = U_{beta,base} X_base V_{base,beta}`.
pub fn component_at(s: &ContractiveSystem, x: &LimOperator, beta: &str) -> Result<CMat> {
    transport(s, &x.base, &x.matrix, beta)
}

/// Component of `X^dagger` at `beta`; equals the metric adjoint of `X_beta`.
pub fn adjoint_component_at(s: &ContractiveSystem, x: &LimOperator, beta: &str) -> Result<CMat> {
    transport(s, &x.base, &x.adjoint, beta)
}

/// `X d = Theta_base(X_base Pi_base d)`.
pub fn apply(s: &ContractiveSystem, x: &LimOperator, d: &DElement) -> Result<DxElement> {
    apply_at(s, x, d, &x.base)
}

/// `X d` evaluated through the component at `beta >= base`.
pub fn apply_at(s: &ContractiveSystem, x: &LimOperator, d: &DElement, beta: &str) -> Result<DxElement> {
    let comp = component_at(s, x, beta)?;
    theta(s, beta, &(comp * pi(s, beta, d)?))
}

/// Matrix `K` of the form `F(d, e) = B(X e, d) = e^H K d`, top coordinates.
pub fn form_matrix(s: &ContractiveSystem, x: &LimOperator) -> Result<CMat> {
    let b = s.index(&x.base)?;
    let p = s.v_idx(b, s.top())?;
    Ok(p.adjoint() * x.matrix.adjoint() * s.space_idx(b).gram() * p)
}

/// The component `X_gamma` read back from the form: the operator on
/// `H_gamma` with `B(X e, d) = <Pi_gamma d, X_gamma Pi_gamma e>_gamma`.
/// `None` when the form does not factor through `Pi_gamma`.
pub fn form_component(s: &ContractiveSystem, x: &LimOperator, gamma: &str) -> Result<Option<CMat>> {
    let g = s.index(gamma)?;
    let k = form_matrix(s, x)?;
    let p = s.v_idx(g, s.top())?;
    let p_plus = p
        .clone()
        .pseudo_inverse(1e-13 * spectral_norm(p).max(f64::MIN_POSITIVE))
        .map_err(|e| Error::NotInvertible(format!("{gamma}: {e}")))?;
    let k_g = p_plus.adjoint() * &k * &p_plus;
    let defect = spectral_norm(&(p.adjoint() * &k_g * p - &k));
    if defect > FORM_TOL * (1.0 + spectral_norm(&k)) {
        return Ok(None);
    }
    Ok(Some(s.space_idx(g).gram_inv() * k_g.adjoint()))
}

/// Norm of `X_gamma` on `H_gamma`: the least `C` with
/// `|B(X e, d)| <= C ||Pi_gamma d|| ||Pi_gamma e||`. `None` outside `d(X)`.
pub fn bound_constant(s: &ContractiveSystem, x: &LimOperator, gamma: &str) -> Result<Option<f64>> {
    let sp = s.space(gamma)?;
    Ok(form_component(s, x, gamma)?.map(|m| metric_op_norm(&m, sp, sp)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub index: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

/// Every index with its bound constant; `d(X)` is the set with a bound.
pub fn support_set(s: &ContractiveSystem, x: &LimOperator) -> Result<Vec<SupportEntry>> {
    s.poset()
        .labels()
        .iter()
        .map(|g| {
            Ok(SupportEntry {
                index: g.clone(),
                bound: bound_constant(s, x, g)?,
            })
        })
        .collect()
}

/// `X^dagger`, same base.
pub fn involution(x: &LimOperator) -> LimOperator {
    LimOperator {
        base: x.base.clone(),
        matrix: x.adjoint.clone(),
        adjoint: x.matrix.clone(),
    }
}

/// `a X + b Y` at the upper bound of the two bases.
pub fn combine(s: &ContractiveSystem, x: &LimOperator, y: &LimOperator, a: C64, b: C64) -> Result<LimOperator> {
    let g = s.poset().upper_bound(&x.base, &y.base)?;
    let matrix = component_at(s, x, &g)? * a + component_at(s, y, &g)? * b;
    let adjoint = adjoint_component_at(s, x, &g)? * a.conj() + adjoint_component_at(s, y, &g)? * b.conj();
    Ok(LimOperator {
        base: g,
        matrix,
        adjoint,
    })
}

/// Whitened distance of the components at the common upper bound, relative
/// to `1 + max norm`.
pub fn operator_distance(s: &ContractiveSystem, x: &LimOperator, y: &LimOperator) -> Result<f64> {
    let g = s.poset().upper_bound(&x.base, &y.base)?;
    let sp = s.space(&g)?;
    let (cx, cy) = (component_at(s, x, &g)?, component_at(s, y, &g)?);
    let scale = metric_op_norm(&cx, sp, sp).max(metric_op_norm(&cy, sp, sp));
    Ok(metric_op_norm(&(cx - cy), sp, sp) / (1.0 + scale))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Product {
    Defined { operator: LimOperator },
    Undefined {
        /// Whitened norm of `X_a (V_ab U_ba - I) Y_a` at the witness pair.
        residual: f64,
        lower: String,
        upper: String,
    },
}

impl Product {
    pub fn defined(self) -> Option<LimOperator> {
        match self {
            Product::Defined { operator } => Some(operator),
            Product::Undefined { .. } => None,
        }
    }
}

/// `X . Y`, defined when the products of components form an inductive-limit
/// family: `X_a (V_ab U_ba - I) Y_a = 0` for all `g0 <= a <= b`, where `g0`
/// is the upper bound of the two bases.
pub fn partial_product(s: &ContractiveSystem, x: &LimOperator, y: &LimOperator) -> Result<Product> {
    let g0 = s.poset().upper_bound(&x.base, &y.base)?;
    let g0i = s.index(&g0)?;
    let mut worst: Option<(f64, f64, usize, usize)> = None;
    for a in 0..s.len() {
        if !s.poset().leq_idx(g0i, a) {
            continue;
        }
        let la = s.label(a);
        let sp = s.space_idx(a);
        let (xa, ya) = (component_at(s, x, la)?, component_at(s, y, la)?);
        let scale = 1.0 + metric_op_norm(&xa, sp, sp) * metric_op_norm(&ya, sp, sp);
        for b in 0..s.len() {
            if a == b || !s.poset().leq_idx(a, b) {
                continue;
            }
            let round = s.v_idx(a, b)? * s.u_idx(a, b)? - CMat::identity(sp.dim(), sp.dim());
            let r = spectral_norm(&whiten(&(&xa * round * &ya), sp, sp));
            if r > PRODUCT_TOL * scale && worst.is_none_or(|w| r / scale > w.0) {
                worst = Some((r / scale, r, a, b));
            }
        }
    }
    if let Some((_, residual, a, b)) = worst {
        return Ok(Product::Undefined {
            residual,
            lower: s.label(a).into(),
            upper: s.label(b).into(),
        });
    }
    let matrix = component_at(s, x, &g0)? * component_at(s, y, &g0)?;
    let adjoint = adjoint_component_at(s, y, &g0)? * adjoint_component_at(s, x, &g0)?;
    Ok(Product::Defined {
        operator: LimOperator {
            base: g0,
            matrix,
            adjoint,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{e1_system, single_space};
    use crate::hspace::{c, max_abs_diff, real_diag, real_matrix, real_vector};
    use crate::jtl::{dx_equal, pair};

    fn id2() -> CMat {
        CMat::identity(2, 2)
    }

    #[test]
    fn lift_and_components() {
        let s = e1_system();
        let z = lift(&s, "1", &CMat::zeros(2, 2)).unwrap();
        assert_eq!(component_at(&s, &z, "2").unwrap(), CMat::zeros(2, 2));
        let x = lift(&s, "1", &real_diag(&[1.0, 0.0])).unwrap();
        assert!(max_abs_diff(&component_at(&s, &x, "2").unwrap(), &real_diag(&[0.4, 0.0])) < 1e-15);
        assert_eq!(component_at(&s, &x, "1").unwrap(), x.matrix);
        let one = lift(&s, "1", &id2()).unwrap();
        assert!(max_abs_diff(&component_at(&s, &one, "2").unwrap(), &real_diag(&[0.4, 0.5])) < 1e-15);
        assert!(matches!(component_at(&s, &lift(&s, "2", &id2()).unwrap(), "1"), Err(Error::NotComparable { .. })));
        assert!(lift(&s, "1", &CMat::zeros(3, 3)).is_err());
    }

    #[test]
    fn apply_examples() {
        let s = e1_system();
        let d = DElement::new(&s, real_vector(&[1.0, 1.0])).unwrap();
        let x = lift(&s, "1", &real_diag(&[1.0, 0.0])).unwrap();
        let xd = apply(&s, &x, &d).unwrap();
        assert_eq!(xd.base, "1");
        assert!((xd.vector.clone() - real_vector(&[1.0, 0.0])).norm() < 1e-15);
        let at2 = apply_at(&s, &x, &d, "2").unwrap();
        assert!(dx_equal(&s, &xd, &at2, 1e-12).unwrap());
    }

    #[test]
    fn bound_examples() {
        let s = e1_system();
        let z = lift(&s, "1", &CMat::zeros(2, 2)).unwrap();
        let sup = support_set(&s, &z).unwrap();
        assert!(sup.iter().all(|e| e.bound == Some(0.0)));
        let one = lift(&s, "1", &id2()).unwrap();
        assert!((bound_constant(&s, &one, "1").unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!((bound_constant(&s, &one, "2").unwrap().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn involution_examples() {
        let s = e1_system();
        let x = lift(&s, "1", &real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        let xd = involution(&x);
        assert!(max_abs_diff(&xd.matrix, &real_matrix(&[&[0.0, 0.0], &[0.4, 0.0]])) < 1e-15);
        assert_eq!(involution(&xd), x);
        let h = lift(&s, "1", &real_diag(&[3.0, -1.0])).unwrap();
        assert!(max_abs_diff(&involution(&h).matrix, &h.matrix) < 1e-15);

        let d = DElement::new(&s, real_vector(&[1.0, -2.0])).unwrap();
        let e = DElement::new(&s, CVec::from_vec(vec![c(0.5, 1.0), c(0.0, -1.0)])).unwrap();
        let lhs = pair(&s, &apply(&s, &xd, &e).unwrap(), &d).unwrap();
        let rhs = pair(&s, &apply(&s, &x, &d).unwrap(), &e).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    use crate::hspace::CVec;

    #[test]
    fn combine_examples() {
        let s = e1_system();
        let x = lift(&s, "1", &real_matrix(&[&[1.0, 2.0], &[0.0, -1.0]])).unwrap();
        let zero = lift(&s, "1", &CMat::zeros(2, 2)).unwrap();
        let sum = combine(&s, &x, &zero, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(operator_distance(&s, &sum, &x).unwrap() < 1e-15);
        let diff = combine(&s, &x, &x, c(1.0, 0.0), c(-1.0, 0.0)).unwrap();
        assert_eq!(diff.matrix, CMat::zeros(2, 2));
        let both = combine(&s, &lift(&s, "1", &id2()).unwrap(), &lift(&s, "2", &id2()).unwrap(), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(both.base, "2");
        assert!(max_abs_diff(&both.matrix, &real_diag(&[1.4, 1.5])) < 1e-15);
    }

    #[test]
    fn product_examples() {
        let single = single_space();
        let a = lift(&single, "0", &real_matrix(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap();
        let b = lift(&single, "0", &real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let p = partial_product(&single, &a, &b).unwrap().defined().unwrap();
        assert_eq!(p.matrix, &a.matrix * &b.matrix);

        let s = e1_system();
        let one = lift(&s, "1", &id2()).unwrap();
        match partial_product(&s, &one, &one).unwrap() {
            Product::Undefined { residual, lower, upper } => {
                assert!((residual - 0.6).abs() < 1e-12);
                assert_eq!((lower.as_str(), upper.as_str()), ("1", "2"));
            }
            other => panic!("{other:?}"),
        }
        let zero = lift(&s, "1", &CMat::zeros(2, 2)).unwrap();
        let p = partial_product(&s, &zero, &one).unwrap().defined().unwrap();
        assert_eq!(p.matrix, CMat::zeros(2, 2));
    }

    #[test]
    fn form_round_trip() {
        let s = e1_system();
        let x = lift(&s, "1", &real_matrix(&[&[1.0, -2.0], &[0.5, 3.0]])).unwrap();
        for g in ["1", "2"] {
            let back = form_component(&s, &x, g).unwrap().unwrap();
            assert!(max_abs_diff(&back, &component_at(&s, &x, g).unwrap()) < 1e-12);
        }
    }
}
