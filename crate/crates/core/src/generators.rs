//! Built-in systems: the shift chain, weighted grids, operator-family
//! seeds, the diamond counterexample and seeded random systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hspace::{c, hermitian_part, psd_sqrt, real_diag, whiten, CMat, MetricSpace};
use crate::ofamily::{build_system_from_ofamily, OFamily};
use crate::poset::IndexPoset;
use crate::sample::{random_cmat, random_gram, random_unitary, rng, SampleRng};
use crate::system::{ContractiveSystem, Link, Provenance};
use crate::tolerance::Tolerances;
use rand::Rng;

/// Operator family `{diag(1,2), diag(2,3)}` on `C^2`.
pub fn e1_family() -> OFamily {
    OFamily::new(
        MetricSpace::identity(2),
        vec![
            ("1".into(), real_diag(&[1.0, 2.0])),
            ("2".into(), real_diag(&[2.0, 3.0])),
        ],
    )
    .expect("valid family")
}

/// The two-index system of [`e1_family`]: Grams `diag(2,5)`, `diag(5,10)`,
/// `U_21 = diag(0.4, 0.5)`.
pub fn e1_system() -> ContractiveSystem {
    build_system_from_ofamily(&e1_family(), &Tolerances::default()).expect("E1 builds")
}

/// `C^2` with the identity metric, one index.
pub fn single_space() -> ContractiveSystem {
    ContractiveSystem::single("0", MetricSpace::identity(2), Tolerances::default())
}

fn cyclic_shift(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| if i == (j + 1) % dim { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// Chain `0 < 1 < ... < levels-1` of copies of `C^dim` with identity metrics
/// and the cyclic shift as every link. All links are unitary.
pub fn shift_chain(dim: usize, levels: usize) -> Result<ContractiveSystem> {
    if dim == 0 || levels == 0 {
        return Err(Error::InvalidParameter("shift chain needs dim, levels >= 1".into()));
    }
    let labels: Vec<String> = (0..levels).map(|k| k.to_string()).collect();
    let poset = IndexPoset::chain(&labels)?;
    let links = (1..levels)
        .map(|k| Link::new(labels[k - 1].clone(), labels[k].clone(), cyclic_shift(dim)))
        .collect();
    let spaces = vec![MetricSpace::identity(dim); levels];
    Ok(ContractiveSystem::new(poset, spaces, links, Tolerances::default())?.with_provenance(
        Provenance::Generator {
            name: "shift-chain".into(),
            bounded_below: false,
        },
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightForm {
    /// `(1 + |x|)^a`, increasing in `a` at every point.
    #[default]
    OnePlusAbsPow,
    /// `1 + |x|^a`, which decreases in `a` where `|x| < 1`.
    OnePlusPow,
}

impl WeightForm {
    pub fn weight(self, x: f64, alpha: f64) -> f64 {
        match self {
            WeightForm::OnePlusAbsPow => (1.0 + x.abs()).powf(alpha),
            // powf gives 0^0 = 1
            WeightForm::OnePlusPow => 1.0 + x.abs().powf(alpha),
        }
    }
}

/// Evenly spaced grid on `[xmin, xmax]`; one point means `xmin`.
pub fn grid(xmin: f64, xmax: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![xmin];
    }
    let step = (xmax - xmin) / (points - 1) as f64;
    (0..points)
        .map(|k| if k + 1 == points { xmax } else { xmin + step * k as f64 })
        .collect()
}

/// Chain over the exponents, each space `C^points` with Gram `diag(w_a(x_j))`
/// and links `diag(w_a / w_b)`. The dual maps are identities.
pub fn weighted_grid(
    xmin: f64,
    xmax: f64,
    points: usize,
    alphas: &[f64],
    form: WeightForm,
) -> Result<ContractiveSystem> {
    if points == 0 || alphas.is_empty() {
        return Err(Error::InvalidParameter("weighted grid needs points and exponents".into()));
    }
    if !(xmin.is_finite() && xmax.is_finite() && xmin <= xmax) {
        return Err(Error::InvalidParameter(format!("bad grid bounds [{xmin}, {xmax}]")));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) || alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "exponents must be non-negative and strictly increasing".into(),
        ));
    }
    let xs = grid(xmin, xmax, points);
    let tol = Tolerances::default();
    let weights: Vec<Vec<f64>> = alphas
        .iter()
        .map(|&a| xs.iter().map(|&x| form.weight(x, a)).collect())
        .collect();
    let labels: Vec<String> = alphas.iter().map(|a| a.to_string()).collect();
    let poset = IndexPoset::chain(&labels)?;
    let spaces = weights
        .iter()
        .map(|w| MetricSpace::diagonal(w, &tol))
        .collect::<Result<Vec<_>>>()?;
    let links = (1..alphas.len())
        .map(|k| {
            let ratio: Vec<f64> = weights[k - 1].iter().zip(&weights[k]).map(|(a, b)| a / b).collect();
            Link::new(labels[k - 1].clone(), labels[k].clone(), real_diag(&ratio))
        })
        .collect();
    Ok(ContractiveSystem::new(poset, spaces, links, tol)?
        .with_provenance(Provenance::Generator {
            name: "weighted-grid".into(),
            bounded_below: true,
        })
        .with_coordinates(xs))
}

/// Two minimal indices `a`, `b` below a top `c`, all on `C^2`:
/// `G_a = diag(1,4)`, `G_b = diag(4,1)`, `G_c = diag(4,4)`, links
/// `G_c^{-1} G_a` and `G_c^{-1} G_b`. Both dual maps are the identity, and
/// `min(||.||_a, ||.||_b)` is not a Hilbert norm.
pub fn diamond_counterexample() -> ContractiveSystem {
    let tol = Tolerances::default();
    let poset = IndexPoset::new(&["a", "b", "c"], &[("a", "c"), ("b", "c")]).expect("diamond");
    let spaces = vec![
        MetricSpace::diagonal(&[1.0, 4.0], &tol).expect("pd"),
        MetricSpace::diagonal(&[4.0, 1.0], &tol).expect("pd"),
        MetricSpace::diagonal(&[4.0, 4.0], &tol).expect("pd"),
    ];
    let links = vec![
        Link::new("a", "c", real_diag(&[0.25, 1.0])),
        Link::new("b", "c", real_diag(&[1.0, 0.25])),
    ];
    ContractiveSystem::new(poset, spaces, links, tol).expect("diamond system")
}

/// Random DAG on `n` nodes labelled `0..n`. Edges only go from lower to
/// higher labels and every node but the last has one, so `n-1` is the top.
pub fn random_poset(r: &mut SampleRng, n: usize) -> Result<IndexPoset> {
    if n == 0 {
        return Err(Error::InvalidParameter("empty poset".into()));
    }
    let labels: Vec<String> = (0..n).map(|k| k.to_string()).collect();
    let mut edges = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let forced = r.random_range(i + 1..n);
        edges.push((i, forced));
        for j in (i + 1)..n {
            if j != forced && r.random_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    let p = IndexPoset::from_indices(labels.clone(), edges)?;
    IndexPoset::from_indices(labels, p.hasse_covers())
}

/// Smallest acceptable whitened singular value of a random link.
const MIN_LINK_SV: f64 = 0.1;
const MAX_ATTEMPTS: usize = 200;

fn well_conditioned(r: &mut SampleRng, n: usize) -> CMat {
    let mut m = random_cmat(r, n, n) * c(0.35 / (n as f64).sqrt(), 0.0);
    for i in 0..n {
        m[(i, i)] += c(1.0, 0.0);
    }
    m
}

/// Deterministic random system over `poset` with `dims[i]` the dimension of
/// index `i`. Links factor through a common ambient space, which makes every
/// pair of paths agree; each index is rescaled so its links have whitened
/// norm at most a random `rho` in `[0.5, 1]`, with one link of norm exactly 1.
pub fn random_system(seed: u64, dims: &[usize], poset: &IndexPoset) -> Result<ContractiveSystem> {
    let n = poset.len();
    if dims.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: dims.len(),
        });
    }
    if dims.contains(&0) {
        return Err(Error::InvalidParameter("dimensions must be positive".into()));
    }
    for &(a, b) in poset.covers() {
        if dims[a] > dims[b] {
            return Err(Error::DimOrderViolation {
                lower: poset.label(a).into(),
                lower_dim: dims[a],
                upper: poset.label(b).into(),
                upper_dim: dims[b],
            });
        }
    }
    if let Some((a, b)) = poset.check_directed() {
        return Err(Error::NotDirected(a, b));
    }
    let tol = Tolerances::default();
    let mut r = rng(seed);
    let order = poset.topological_order();
    for _ in 0..MAX_ATTEMPTS {
        let grams: Vec<CMat> = dims.iter().map(|&d| random_gram(&mut r, d, 1.0)).collect();
        let spaces = grams
            .iter()
            .map(|g| MetricSpace::new(g.clone(), &tol))
            .collect::<Result<Vec<_>>>()?;
        let factors: Vec<CMat> = dims.iter().map(|&d| well_conditioned(&mut r, d)).collect();
        let raw: Vec<CMat> = poset
            .covers()
            .iter()
            .map(|&(a, b)| {
                let inv = factors[b].clone().try_inverse().expect("well conditioned");
                let incl = CMat::from_fn(dims[b], dims[a], |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
                inv * incl * &factors[a]
            })
            .collect();
        let norms: Vec<f64> = poset
            .covers()
            .iter()
            .zip(&raw)
            .map(|(&(a, b), m)| crate::hspace::metric_op_norm(m, &spaces[a], &spaces[b]))
            .collect();
        let mut scale = vec![1.0; n];
        let mut saturated = false;
        for &a in order.iter().rev() {
            let outs: Vec<usize> = (0..raw.len()).filter(|&k| poset.covers()[k].0 == a).collect();
            if outs.is_empty() {
                continue;
            }
            let rho = if saturated { r.random_range(0.5..=1.0) } else { 1.0 };
            saturated = true;
            scale[a] = outs
                .iter()
                .map(|&k| rho * scale[poset.covers()[k].1] / norms[k])
                .fold(f64::INFINITY, f64::min);
        }
        let links: Vec<CMat> = poset
            .covers()
            .iter()
            .zip(raw)
            .map(|(&(a, b), m)| m * c(scale[a] / scale[b], 0.0))
            .collect();
        let ok = poset.covers().iter().zip(&links).all(|(&(a, b), m)| {
            whiten(m, &spaces[a], &spaces[b]).singular_values().min() >= MIN_LINK_SV
        });
        if !ok {
            continue;
        }
        let links = poset
            .covers()
            .iter()
            .zip(links)
            .map(|(&(a, b), m)| Link::new(poset.label(a), poset.label(b), m))
            .collect();
        return ContractiveSystem::new(poset.clone(), spaces, links, tol);
    }
    Err(Error::InvalidParameter(format!(
        "no well-conditioned system found for seed {seed}"
    )))
}

/// Random poset on up to `max_nodes` nodes with non-decreasing random
/// dimensions up to `max_dim`, then [`random_system`].
pub fn random_fuzz_system(seed: u64, max_nodes: usize, max_dim: usize) -> Result<ContractiveSystem> {
    if max_nodes == 0 || max_dim == 0 {
        return Err(Error::InvalidParameter("need at least one node and dimension".into()));
    }
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = r.random_range(1..=max_nodes);
    let poset = random_poset(&mut r, n)?;
    let mut dims: Vec<usize> = (0..n).map(|_| r.random_range(1..=max_dim)).collect();
    dims.sort_unstable();
    random_system(seed, &dims, &poset)
}

fn random_psd(r: &mut SampleRng, dim: usize, rank: usize, scale: f64) -> CMat {
    let f = random_cmat(r, dim, rank);
    hermitian_part(&(&f * f.adjoint() * c(scale / rank as f64, 0.0)))
}

/// Operator family with a least and a greatest element: forms
/// `Q_m = P_0`, `Q_k = P_0 + P_k`, `Q_top = P_0 + sum P_k`, each realised by
/// an operator `A = W^{-1} Z Q^{1/2}` with `W = G_0^{1/2}` and `Z` unitary,
/// so that `A^H G_0 A = Q` while the `A` do not commute.
pub fn random_ofamily(seed: u64, dim: usize, count: usize) -> Result<OFamily> {
    if dim == 0 || count == 0 {
        return Err(Error::InvalidParameter("need dim, count >= 1".into()));
    }
    let tol = Tolerances::default();
    let mut r = rng(seed);
    let base = MetricSpace::new(random_gram(&mut r, dim, 1.0), &tol)?;
    let p0 = random_psd(&mut r, dim, dim, 0.5);
    let middle: Vec<CMat> = (0..count.saturating_sub(2))
        .map(|_| {
            let rank = r.random_range(1..=dim);
            random_psd(&mut r, dim, rank, 1.0)
        })
        .collect();
    let mut forms = vec![("m".to_string(), p0.clone())];
    for (k, p) in middle.iter().enumerate() {
        forms.push((format!("a{}", k + 1), &p0 + p));
    }
    if count >= 2 {
        let extra = random_psd(&mut r, dim, 1, 0.5);
        let top = middle.iter().fold(&p0 + extra, |acc, p| acc + p);
        forms.push(("top".to_string(), top));
    }
    let ops = forms
        .into_iter()
        .map(|(name, q)| {
            let z = random_unitary(&mut r, dim);
            Ok((name, base.gram_inv_sqrt() * z * psd_sqrt(&q, &tol)?))
        })
        .collect::<Result<Vec<_>>>()?;
    OFamily::new(base, ops)
}

/// Generator kinds addressable from system files and the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    ShiftChain {
        dim: usize,
        levels: usize,
    },
    WeightedGrid {
        xmin: f64,
        xmax: f64,
        points: usize,
        alphas: Vec<f64>,
        #[serde(default)]
        weight: WeightForm,
    },
    OfamilySeed {
        seed: u64,
        dim: usize,
        count: usize,
    },
    Random {
        seed: u64,
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_max_dim")]
        max_dim: usize,
    },
    E1,
    Diamond,
}

fn default_nodes() -> usize {
    6
}

fn default_max_dim() -> usize {
    8
}

impl GeneratorSpec {
    /// The system, and the operator family when there is one. Generated
    /// systems take `tol` for their later checks.
    pub fn build(&self, tol: &Tolerances) -> Result<(ContractiveSystem, Option<OFamily>)> {
        let (s, f) = match self {
            GeneratorSpec::ShiftChain { dim, levels } => (shift_chain(*dim, *levels)?, None),
            GeneratorSpec::WeightedGrid {
                xmin,
                xmax,
                points,
                alphas,
                weight,
            } => (weighted_grid(*xmin, *xmax, *points, alphas, *weight)?, None),
            GeneratorSpec::OfamilySeed { seed, dim, count } => {
                let f = random_ofamily(*seed, *dim, *count)?;
                (build_system_from_ofamily(&f, tol)?, Some(f))
            }
            GeneratorSpec::Random { seed, nodes, max_dim } => (random_fuzz_system(*seed, *nodes, *max_dim)?, None),
            GeneratorSpec::E1 => {
                let f = e1_family();
                (build_system_from_ofamily(&f, tol)?, Some(f))
            }
            GeneratorSpec::Diamond => (diamond_counterexample(), None),
        };
        Ok((s.with_tolerances(*tol), f))
    }
}
