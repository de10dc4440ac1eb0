//! Seeded random vectors and matrices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hspace::{c, CMat, CVec, C64};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut SampleRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard complex Gaussian entry (unit variance per component).
pub fn complex_gaussian(rng: &mut SampleRng) -> C64 {
    c(gaussian(rng), gaussian(rng))
}

pub fn random_cvec(rng: &mut SampleRng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn random_cmat(rng: &mut SampleRng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary(rng: &mut SampleRng, n: usize) -> CMat {
    let g = random_cmat(rng, n, n);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution does not depend on QR sign conventions
    let phases = CVec::from_fn(n, |i, _| {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        }
    });
    q * CMat::from_diagonal(&phases)
}

/// Hermitian positive-definite `I + R R^H / n * spread`.
pub fn random_gram(rng: &mut SampleRng, n: usize, spread: f64) -> CMat {
    let r = random_cmat(rng, n, n);
    let mut g = &r * r.adjoint() * c(spread / (2.0 * n as f64), 0.0);
    for i in 0..n {
        g[(i, i)] += c(1.0, 0.0);
    }
    crate::hspace::hermitian_part(&g)
}
