//! Seeded random ensembles of states, unitaries, POVMs and channels.
//!
//! All generators take an explicit `Rng`; use [`seeded`] or [`derived`] to get
//! reproducible streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::state::DensityOperator;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sample `index` under a global `seed`.
pub fn derived(seed: u64, index: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ensemble {
    /// `GG†/tr(GG†)` with square complex Gaussian `G`.
    HilbertSchmidt,
    HaarPure,
    /// Induced measure of rank `k`: `G` is `dim × k`.
    Rank(usize),
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(dim, |_, _| complex_normal(rng));
    let n = v.norm();
    v / c(n, 0.0)
}

pub fn random_density<R: Rng + ?Sized>(dim: usize, ensemble: Ensemble, rng: &mut R) -> Result<DensityOperator> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let rank = match ensemble {
        Ensemble::HilbertSchmidt => dim,
        Ensemble::HaarPure => 1,
        Ensemble::Rank(k) if k == 0 || k > dim => return Err(Error::InvalidRank { rank: k, dim }),
        Ensemble::Rank(k) => k,
    };
    let g = ginibre(dim, rank, rng);
    let m = &g * g.adjoint();
    let t = linalg::trace_re(&m);
    Ok(DensityOperator::from_trusted(m / c(t, 0.0)))
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let qr = ginibre(dim, dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { linalg::ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `k` weights drawn uniformly from the probability simplex.
pub fn dirichlet<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-300).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Random POVM with `outcomes` full-rank elements on `dim`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Vec<CMat> {
    let raw: Vec<CMat> = (0..outcomes)
        .map(|_| {
            let g = ginibre(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let total = raw.iter().fold(CMat::zeros(dim, dim), |acc, x| acc + x);
    let inv_sqrt = linalg::hermitian_map(&total, |x| 1.0 / x.sqrt());
    raw.iter().map(|x| linalg::hermitian_part(&(&inv_sqrt * x * &inv_sqrt))).collect()
}

/// Kraus operators of a random channel with the given Kraus rank, from a
/// random Stinespring isometry. The rank is raised to `⌈d_in/d_out⌉` when
/// smaller, since no isometry exists below that.
pub fn random_kraus<R: Rng + ?Sized>(d_in: usize, d_out: usize, kraus_rank: usize, rng: &mut R) -> Vec<CMat> {
    let kraus_rank = kraus_rank.max(d_in.div_ceil(d_out));
    let g = ginibre(d_out * kraus_rank, d_in, rng);
    let gram = g.adjoint() * &g;
    let v = &g * linalg::hermitian_map(&gram, |x| 1.0 / x.sqrt());
    (0..kraus_rank).map(|k| v.rows(k * d_out, d_out).into_owned()).collect()
}
