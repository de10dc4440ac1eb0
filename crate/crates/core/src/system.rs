//! Directed contractive systems `{H_a, U_ba}` and their dual maps `V_ab = U_ba*`.
//!
//! Linking maps are stored on covering pairs only. Maps between other
//! comparable indices are composed along a canonical path on first use and
//! memoised; `validate_system` checks that every other path agrees.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hspace::{metric_adjoint, whiten, spectral_norm, CMat, LinMap, MetricSpace};
use crate::poset::IndexPoset;
use crate::tolerance::Tolerances;

/// Where a system came from. Generator chains are finite prefixes of an
/// infinite family, which changes what some checks can conclude.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum Provenance {
    Explicit,
    Ofamily,
    Generator {
        name: String,
        /// Whether the infinite family has a least index inside the prefix.
        bounded_below: bool,
    },
}

/// A linking map on a covering pair, as supplied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: String,
    pub to: String,
    pub matrix: CMat,
}

impl Link {
    pub fn new(from: impl Into<String>, to: impl Into<String>, matrix: CMat) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            matrix,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContractiveSystem {
    poset: IndexPoset,
    spaces: Vec<Arc<MetricSpace>>,
    /// Aligned with `poset.covers()`.
    links: Vec<CMat>,
    outgoing: Vec<Vec<(usize, usize)>>,
    tol: Tolerances,
    provenance: Provenance,
    coords: Option<Vec<f64>>,
    u_cache: Vec<OnceLock<CMat>>,
    v_cache: Vec<OnceLock<CMat>>,
}

impl PartialEq for ContractiveSystem {
    fn eq(&self, other: &Self) -> bool {
        self.poset == other.poset
            && self.spaces == other.spaces
            && self.links == other.links
            && self.tol == other.tol
            && self.provenance == other.provenance
            && self.coords == other.coords
    }
}

impl ContractiveSystem {
    /// `spaces` are in the poset's element order; `links` must cover exactly
    /// the poset's covering pairs.
    pub fn new(
        poset: IndexPoset,
        spaces: Vec<MetricSpace>,
        links: Vec<Link>,
        tol: Tolerances,
    ) -> Result<Self> {
        if poset.is_empty() {
            return Err(Error::InvalidParameter("empty index set".into()));
        }
        if let Some((a, b)) = poset.check_directed() {
            return Err(Error::NotDirected(a, b));
        }
        if spaces.len() != poset.len() {
            return Err(Error::DimMismatch {
                expected: poset.len(),
                found: spaces.len(),
            });
        }
        let mut by_pair: HashMap<(usize, usize), CMat> = HashMap::new();
        for l in links {
            let (a, b) = (poset.index(&l.from)?, poset.index(&l.to)?);
            if !poset.covers().contains(&(a, b)) {
                return Err(Error::BadLink {
                    from: l.from,
                    to: l.to,
                    reason: "not a declared covering pair".into(),
                });
            }
            let (rows, cols) = (spaces[b].dim(), spaces[a].dim());
            if l.matrix.shape() != (rows, cols) {
                return Err(Error::BadLink {
                    from: l.from,
                    to: l.to,
                    reason: format!("shape {:?}, expected ({rows}, {cols})", l.matrix.shape()),
                });
            }
            if by_pair.insert((a, b), l.matrix).is_some() {
                return Err(Error::BadLink {
                    from: poset.label(a).into(),
                    to: poset.label(b).into(),
                    reason: "duplicate linking map".into(),
                });
            }
        }
        let mut ordered = Vec::with_capacity(poset.covers().len());
        let mut outgoing = vec![Vec::new(); poset.len()];
        for (k, &(a, b)) in poset.covers().iter().enumerate() {
            let m = by_pair.remove(&(a, b)).ok_or_else(|| Error::BadLink {
                from: poset.label(a).into(),
                to: poset.label(b).into(),
                reason: "missing linking map".into(),
            })?;
            ordered.push(m);
            outgoing[a].push((b, k));
        }
        let n = poset.len();
        Ok(Self {
            spaces: spaces.into_iter().map(Arc::new).collect(),
            links: ordered,
            outgoing,
            tol,
            provenance: Provenance::Explicit,
            coords: None,
            u_cache: (0..n * n).map(|_| OnceLock::new()).collect(),
            v_cache: (0..n * n).map(|_| OnceLock::new()).collect(),
            poset,
        })
    }

    /// One space, no links.
    pub fn single(label: &str, space: MetricSpace, tol: Tolerances) -> Self {
        Self::new(IndexPoset::singleton(label), vec![space], vec![], tol)
            .expect("single-space system")
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Attach a position to each basis coordinate (grid systems), used to
    /// label contraction witnesses.
    pub fn with_coordinates(mut self, coords: Vec<f64>) -> Self {
        self.coords = Some(coords);
        self
    }

    pub fn with_tolerances(&self, tol: Tolerances) -> Self {
        let mut s = self.clone();
        s.tol = tol;
        s
    }

    /// Copy with the link `from -> to` multiplied by `factor`.
    pub fn with_scaled_link(&self, from: &str, to: &str, factor: f64) -> Result<Self> {
        let (a, b) = (self.poset.index(from)?, self.poset.index(to)?);
        let k = self
            .poset
            .covers()
            .iter()
            .position(|&p| p == (a, b))
            .ok_or_else(|| Error::BadLink {
                from: from.into(),
                to: to.into(),
                reason: "not a covering pair".into(),
            })?;
        let mut links = self.links.clone();
        links[k] *= crate::hspace::c(factor, 0.0);
        Ok(self.with_links(links))
    }

    /// Copy with the covering links replaced (same order as `covers()`).
    pub(crate) fn with_links(&self, links: Vec<CMat>) -> Self {
        let n = self.poset.len();
        Self {
            links,
            u_cache: (0..n * n).map(|_| OnceLock::new()).collect(),
            v_cache: (0..n * n).map(|_| OnceLock::new()).collect(),
            ..self.clone()
        }
    }

    pub fn poset(&self) -> &IndexPoset {
        &self.poset
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn coordinates(&self) -> Option<&[f64]> {
        self.coords.as_deref()
    }

    pub fn len(&self) -> usize {
        self.poset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poset.is_empty()
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.poset.index(label)
    }

    pub fn label(&self, i: usize) -> &str {
        self.poset.label(i)
    }

    pub fn space(&self, label: &str) -> Result<&Arc<MetricSpace>> {
        Ok(&self.spaces[self.index(label)?])
    }

    pub fn space_idx(&self, i: usize) -> &Arc<MetricSpace> {
        &self.spaces[i]
    }

    pub fn dim_idx(&self, i: usize) -> usize {
        self.spaces[i].dim()
    }

    /// Greatest index; D is modelled in its coordinates.
    pub fn top(&self) -> usize {
        self.poset.top().expect("directed finite poset has a top")
    }

    pub fn top_label(&self) -> &str {
        self.label(self.top())
    }

    /// Covering links as `(lower, upper, matrix)`.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize, &CMat)> + '_ {
        self.poset
            .covers()
            .iter()
            .zip(&self.links)
            .map(|(&(a, b), m)| (a, b, m))
    }

    pub(crate) fn check_leq(&self, a: usize, b: usize) -> Result<()> {
        if self.poset.leq_idx(a, b) {
            Ok(())
        } else {
            Err(Error::NotComparable {
                from: self.label(a).into(),
                to: self.label(b).into(),
            })
        }
    }

    /// Composed `U_ba` for `a <= b`.
    pub fn u_idx(&self, a: usize, b: usize) -> Result<&CMat> {
        self.check_leq(a, b)?;
        Ok(self.u_unchecked(a, b))
    }

    fn u_unchecked(&self, a: usize, b: usize) -> &CMat {
        let n = self.len();
        self.u_cache[a * n + b].get_or_init(|| {
            if a == b {
                let d = self.dim_idx(a);
                return CMat::identity(d, d);
            }
            let &(mid, k) = self.outgoing[a]
                .iter()
                .find(|&&(m, _)| self.poset.leq_idx(m, b))
                .expect("a < b implies a covering step towards b");
            self.u_unchecked(mid, b) * &self.links[k]
        })
    }

    /// `V_ab = U_ba*` for `a <= b`, mapping `H_b -> H_a`.
    pub fn v_idx(&self, a: usize, b: usize) -> Result<&CMat> {
        self.check_leq(a, b)?;
        let n = self.len();
        Ok(self.v_cache[a * n + b].get_or_init(|| {
            metric_adjoint(self.u_unchecked(a, b), &self.spaces[a], &self.spaces[b])
        }))
    }

    pub fn u_map(&self, alpha: &str, beta: &str) -> Result<LinMap> {
        let (a, b) = (self.index(alpha)?, self.index(beta)?);
        LinMap::new(
            self.spaces[a].clone(),
            self.spaces[b].clone(),
            self.u_idx(a, b)?.clone(),
        )
    }

    pub fn v_map(&self, alpha: &str, beta: &str) -> Result<LinMap> {
        let (a, b) = (self.index(alpha)?, self.index(beta)?);
        LinMap::new(
            self.spaces[b].clone(),
            self.spaces[a].clone(),
            self.v_idx(a, b)?.clone(),
        )
    }

    pub(crate) fn link_map(&self, a: usize, b: usize, m: &CMat) -> LinMap {
        LinMap::new(self.spaces[a].clone(), self.spaces[b].clone(), m.clone())
            .expect("link shapes checked at construction")
    }
}

/// A single basis direction on which a linking map expands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateWitness {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<f64>,
    /// `||U e_i||^2 / ||e_i||^2`.
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkWitness {
    pub from: String,
    pub to: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coordinates: Vec<CoordinateWitness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub pass: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LinkWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Smallest whitened singular value over the links.
    pub injective: AxiomCheck,
    /// Largest whitened norm over the links.
    pub contraction: AxiomCheck,
    /// Norm in `(1, 1 + tol_contr]`: accepted, flagged.
    pub contraction_marginal: bool,
    pub identity: AxiomCheck,
    /// Worst disagreement between two covering paths.
    pub path_independence: AxiomCheck,
    /// Injectivity of the dual maps. Reported, not part of `pass`: it holds
    /// exactly when every composed `U` is onto.
    pub dual_injective: AxiomCheck,
    pub pass: bool,
}

impl ValidationReport {
    /// Axiom margins `(injective, contraction, path)`.
    pub fn margins(&self) -> (f64, f64, f64) {
        (
            self.injective.margin,
            self.contraction.margin,
            self.path_independence.margin,
        )
    }
}

fn expanding_coordinates(s: &ContractiveSystem, a: usize, b: usize, m: &CMat) -> Vec<CoordinateWitness> {
    let (src, dst) = (&s.spaces[a], &s.spaces[b]);
    (0..src.dim())
        .filter_map(|i| {
            let e = crate::hspace::basis_vector(src.dim(), i);
            let ratio = dst.norm_unchecked(&(m * &e)).powi(2) / src.norm_unchecked(&e).powi(2);
            (ratio > 1.0 + s.tol.contr).then(|| CoordinateWitness {
                index: i,
                position: s.coords.as_ref().and_then(|c| c.get(i).copied()),
                energy_ratio: ratio,
            })
        })
        .collect()
}

pub fn validate_system(s: &ContractiveSystem) -> ValidationReport {
    let tol = s.tol;
    let links: Vec<(usize, usize, &CMat)> = s.links().collect();

    let mut injective = AxiomCheck {
        pass: true,
        margin: 1.0,
        witness: None,
    };
    let mut contraction = AxiomCheck {
        pass: true,
        margin: if links.is_empty() { 1.0 } else { 0.0 },
        witness: None,
    };
    let mut worst_lower = f64::INFINITY;
    for &(a, b, m) in &links {
        let map = s.link_map(a, b, m);
        let lower = map.lower_bound();
        if lower < worst_lower {
            worst_lower = lower;
            injective.margin = lower;
            if lower <= tol.inj {
                injective.witness = Some(LinkWitness {
                    from: s.label(a).into(),
                    to: s.label(b).into(),
                    value: lower,
                    coordinates: vec![],
                    via: None,
                });
            }
        }
        let norm = map.op_norm();
        if norm > contraction.margin {
            contraction.margin = norm;
            if norm > 1.0 + tol.contr {
                contraction.witness = Some(LinkWitness {
                    from: s.label(a).into(),
                    to: s.label(b).into(),
                    value: norm,
                    coordinates: expanding_coordinates(s, a, b, m),
                    via: None,
                });
            }
        }
    }
    injective.pass = injective.margin > tol.inj;
    contraction.pass = contraction.margin <= 1.0 + tol.contr;
    let contraction_marginal = contraction.pass && contraction.margin > 1.0;

    // Every covering path agrees with the canonical composition iff, for
    // each a < b and each cover a -> m with m <= b, U_bm U_ma = U_ba.
    let mut path = AxiomCheck {
        pass: true,
        margin: 0.0,
        witness: None,
    };
    for &(a, m, link) in &links {
        for b in 0..s.len() {
            if !s.poset.leq_idx(m, b) {
                continue;
            }
            let via = s.u_unchecked(m, b) * link;
            let diff = spectral_norm(&whiten(&(via - s.u_unchecked(a, b)), &s.spaces[a], &s.spaces[b]));
            if diff > path.margin {
                path.margin = diff;
                path.witness = Some(LinkWitness {
                    from: s.label(a).into(),
                    to: s.label(b).into(),
                    value: diff,
                    coordinates: vec![],
                    via: Some(s.label(m).into()),
                });
            }
        }
    }
    path.pass = path.margin <= tol.path;
    if path.pass {
        path.witness = None;
    }

    let mut dual_injective = AxiomCheck {
        pass: true,
        margin: 1.0,
        witness: None,
    };
    for (a, b) in s.poset.strict_pairs() {
        let v = LinMap::new(
            s.spaces[b].clone(),
            s.spaces[a].clone(),
            s.v_idx(a, b).expect("comparable").clone(),
        )
        .expect("shapes");
        let lower = v.lower_bound();
        if lower < dual_injective.margin {
            dual_injective.margin = lower;
            dual_injective.witness = Some(LinkWitness {
                from: s.label(b).into(),
                to: s.label(a).into(),
                value: lower,
                coordinates: vec![],
                via: None,
            });
        }
    }
    dual_injective.pass = dual_injective.margin > tol.inj;
    if dual_injective.pass {
        dual_injective.witness = None;
    }

    let identity = AxiomCheck {
        pass: true,
        margin: 0.0,
        witness: None,
    };
    let pass = injective.pass && contraction.pass && identity.pass && path.pass;
    ValidationReport {
        injective,
        contraction,
        contraction_marginal,
        identity,
        path_independence: path,
        dual_injective,
        pass,
    }
}

pub fn u_map(s: &ContractiveSystem, alpha: &str, beta: &str) -> Result<LinMap> {
    s.u_map(alpha, beta)
}

pub fn v_map(s: &ContractiveSystem, alpha: &str, beta: &str) -> Result<LinMap> {
    s.v_map(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hspace::{max_abs_diff, real_diag};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn e1() -> ContractiveSystem {
        let t = tol();
        ContractiveSystem::new(
            IndexPoset::chain(&["1", "2"]).unwrap(),
            vec![
                MetricSpace::diagonal(&[2.0, 5.0], &t).unwrap(),
                MetricSpace::diagonal(&[5.0, 10.0], &t).unwrap(),
            ],
            vec![Link::new("1", "2", real_diag(&[0.4, 0.5]))],
            t,
        )
        .unwrap()
    }

    #[test]
    fn single_space_margins() {
        let s = ContractiveSystem::single("x", MetricSpace::identity(2), tol());
        let r = validate_system(&s);
        assert!(r.pass);
        assert_eq!(r.margins(), (1.0, 1.0, 0.0));
    }

    #[test]
    fn e1_passes_with_contraction_margin() {
        let r = validate_system(&e1());
        assert!(r.pass, "{r:?}");
        assert!((r.contraction.margin - 0.5f64 * 2f64.sqrt()).abs() < 1e-12);
        assert!(!r.contraction_marginal);
    }

    #[test]
    fn scaled_link_fails_contraction() {
        let s = e1().with_scaled_link("1", "2", 1.5).unwrap();
        let r = validate_system(&s);
        assert!(!r.pass);
        assert!(!r.contraction.pass);
        assert!((r.contraction.margin - 1.5 * 0.5 * 2f64.sqrt()).abs() < 1e-12);
        let w = r.contraction.witness.unwrap();
        assert_eq!((w.from.as_str(), w.to.as_str()), ("1", "2"));
    }

    #[test]
    fn u_and_v_maps() {
        let s = e1();
        assert!(max_abs_diff(s.u_map("1", "1").unwrap().matrix(), &CMat::identity(2, 2)) == 0.0);
        assert!(max_abs_diff(s.v_map("1", "2").unwrap().matrix(), &CMat::identity(2, 2)) < 1e-14);
        assert!(matches!(s.u_map("2", "1"), Err(Error::NotComparable { .. })));
    }

    #[test]
    fn chain_composition() {
        let t = tol();
        let s = ContractiveSystem::new(
            IndexPoset::chain(&["0", "1", "2"]).unwrap(),
            vec![MetricSpace::identity(2), MetricSpace::identity(2), MetricSpace::identity(2)],
            vec![
                Link::new("0", "1", real_diag(&[0.5, 0.9])),
                Link::new("1", "2", real_diag(&[0.8, 0.3])),
            ],
            t,
        )
        .unwrap();
        let u02 = s.u_map("0", "2").unwrap();
        let expected = real_diag(&[0.8, 0.3]) * real_diag(&[0.5, 0.9]);
        assert!(max_abs_diff(u02.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn path_dependence_is_detected() {
        let t = tol();
        let p = IndexPoset::new(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap();
        let id = || MetricSpace::identity(1);
        let one = || real_diag(&[1.0]);
        let s = ContractiveSystem::new(
            p,
            vec![id(), id(), id(), id()],
            vec![
                Link::new("a", "b", one()),
                Link::new("a", "c", real_diag(&[0.5])),
                Link::new("b", "d", one()),
                Link::new("c", "d", one()),
            ],
            t,
        )
        .unwrap();
        let r = validate_system(&s);
        assert!(!r.path_independence.pass);
        assert!((r.path_independence.margin - 0.5).abs() < 1e-14);
        assert!(!r.pass);
    }

    #[test]
    fn missing_or_misshapen_links_are_rejected() {
        let t = tol();
        let p = || IndexPoset::chain(&["1", "2"]).unwrap();
        let spaces = || vec![MetricSpace::identity(2), MetricSpace::identity(3)];
        assert!(matches!(
            ContractiveSystem::new(p(), spaces(), vec![], t),
            Err(Error::BadLink { .. })
        ));
        assert!(matches!(
            ContractiveSystem::new(p(), spaces(), vec![Link::new("1", "2", CMat::zeros(2, 2))], t),
            Err(Error::BadLink { .. })
        ));
    }

    #[test]
    fn non_injective_link_fails() {
        let t = tol();
        let s = ContractiveSystem::new(
            IndexPoset::chain(&["1", "2"]).unwrap(),
            vec![MetricSpace::identity(2), MetricSpace::identity(2)],
            vec![Link::new("1", "2", real_diag(&[1.0, 0.0]))],
            t,
        )
        .unwrap();
        let r = validate_system(&s);
        assert!(!r.injective.pass);
        assert!(r.injective.witness.is_some());
    }
}
