//! Seeded samplers for group and stabilizer elements.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, `stream = trial`),
//! so results do not depend on evaluation order or worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::C64;
use crate::spaces::{SpaceId, SpaceSpec};

/// Resample when `||x||_F ||x^-1||_F` exceeds this.
pub const CONDITION_CAP: f64 = 1e6;
/// Bound on internal resampling loops.
pub const MAX_RESAMPLES: usize = 1000;

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut impl Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

fn uniform_c(rng: &mut impl Rng) -> C64 {
    C64::new(uniform(rng), uniform(rng))
}

pub fn real_ginibre(n: usize, rng: &mut impl Rng) -> Mat<f64> {
    Mat::from_fn(n, n, |_, _| uniform(rng))
}

pub fn complex_ginibre(n: usize, rng: &mut impl Rng) -> Mat<C64> {
    Mat::from_fn(n, n, |_, _| uniform_c(rng))
}

/// Column Gram-Schmidt; the triangular factor has a positive real diagonal.
fn orthonormalize_columns(a: &Mat<C64>) -> Option<Mat<C64>> {
    let n = a.rows();
    let mut cols: Vec<Vec<C64>> = (0..a.cols())
        .map(|j| (0..n).map(|i| a[(i, j)]).collect())
        .collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for p in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let u = &done[p];
                let proj: C64 = u
                    .iter()
                    .zip(rest[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (w, ui) in rest[0].iter_mut().zip(u) {
                    *w -= proj * ui;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        for w in cols[j].iter_mut() {
            *w /= norm;
        }
    }
    Some(Mat::from_fn(n, cols.len(), |i, j| cols[j][i]))
}

fn bounded<T>(what: &str, mut attempt: impl FnMut() -> Option<T>) -> Result<T> {
    for _ in 0..MAX_RESAMPLES {
        if let Some(v) = attempt() {
            return Ok(v);
        }
    }
    Err(Error::SamplingFailure {
        attempts: MAX_RESAMPLES,
        what: what.to_string(),
    })
}

/// Real orthogonal matrix (determinant of either sign), used to rotate bases.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Result<Mat<f64>> {
    bounded("orthogonal matrix", || {
        orthonormalize_columns(&real_ginibre(n, rng).to_c64()).map(|q| q.map(|z| z.re))
    })
}

pub fn sample_special_orthogonal(n: usize, rng: &mut impl Rng) -> Result<Mat<C64>> {
    let q = random_orthogonal(n, rng)?.to_c64();
    if q.det()?.re < 0.0 {
        Ok(flip_first_column(&q))
    } else {
        Ok(q)
    }
}

pub fn sample_special_unitary(n: usize, rng: &mut impl Rng) -> Result<Mat<C64>> {
    let q = bounded("unitary matrix", || {
        orthonormalize_columns(&complex_ginibre(n, rng))
    })?;
    let det = q.det()?;
    // det has modulus one; divide out an n-th root of its phase.
    let phase = C64::from_polar(1.0, -det.arg() / n as f64);
    Ok(q.scale(&phase))
}

/// `exp` of a random element of `sp(n)`; stays inside `Sp(n) = SU(2n) ∩ U*(2n)`.
pub fn sample_compact_symplectic(n: usize, rng: &mut impl Rng) -> Result<Mat<C64>> {
    let a = complex_ginibre(n, rng);
    let skew_herm = (&a - &a.adjoint()).scale_real(0.5);
    let b = complex_ginibre(n, rng);
    let sym = (&b + &b.transpose()).scale_real(0.5);
    let gen = Mat::block2(&skew_herm, &sym, &(-&sym.conj()), &skew_herm.conj())?;
    gen.scale_real(2.0).exp()
}

fn flip_first_column(x: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(x.rows(), x.cols(), |i, j| {
        if j == 0 {
            -x[(i, j)]
        } else {
            x[(i, j)]
        }
    })
}

fn sample_slr(n: usize, rng: &mut impl Rng) -> Result<Mat<C64>> {
    bounded("SL(n,R) point", || {
        let mut x = real_ginibre(n, rng).to_c64();
        let det = x.det().ok()?.re;
        if det == 0.0 {
            return None;
        }
        if det < 0.0 {
            x = flip_first_column(&x);
        }
        let x = x.scale_real(det.abs().powf(-1.0 / n as f64));
        (x.condition_estimate() <= CONDITION_CAP).then_some(x)
    })
}

fn sample_slc(n: usize, rng: &mut impl Rng) -> Result<Mat<C64>> {
    bounded("SL(n,C) point", || {
        let x = complex_ginibre(n, rng);
        let det = x.det().ok()?;
        if det.norm() == 0.0 {
            return None;
        }
        let x = x.scale(&det.powf(-1.0 / n as f64));
        (x.condition_estimate() <= CONDITION_CAP).then_some(x)
    })
}

/// `exp` of a random element of `u*(2n)`, normalized to determinant one.
fn sample_ustar(n: usize, rng: &mut impl Rng) -> Result<Mat<C64>> {
    bounded("U*(2n) point", || {
        let a = complex_ginibre(n, rng);
        let b = complex_ginibre(n, rng);
        let gen = Mat::block2(&a, &b, &(-&b.conj()), &a.conj()).ok()?;
        let x = gen.exp().ok()?;
        let det = x.det().ok()?;
        if det.re <= 0.0 {
            return None;
        }
        let x = x.scale_real(det.re.powf(-1.0 / (2 * n) as f64));
        (x.condition_estimate() <= CONDITION_CAP).then_some(x)
    })
}

/// Random member of the group `G` of `space`, drawn from `rng`.
pub fn group_point(space: &SpaceSpec, rng: &mut impl Rng) -> Result<Mat<C64>> {
    let n = space.n();
    match space.id() {
        SpaceId::SlrSo => sample_slr(n, rng),
        SpaceId::SusSp => sample_ustar(n, rng),
        SpaceId::SuSo => sample_special_unitary(n, rng),
        SpaceId::SuSp => sample_special_unitary(2 * n, rng),
        SpaceId::SlcSu => sample_slc(n, rng),
    }
}

/// Random member of the stabilizer `K` of `space`, drawn from `rng`.
pub fn stabilizer_point(space: &SpaceSpec, rng: &mut impl Rng) -> Result<Mat<C64>> {
    let n = space.n();
    match space.id() {
        SpaceId::SlrSo | SpaceId::SuSo => sample_special_orthogonal(n, rng),
        SpaceId::SusSp | SpaceId::SuSp => sample_compact_symplectic(n, rng),
        SpaceId::SlcSu => sample_special_unitary(n, rng),
    }
}

pub fn sample_group_point(space: &SpaceSpec, rng_seed: u64) -> Result<Mat<C64>> {
    group_point(space, &mut trial_rng(rng_seed, 0))
}

pub fn sample_stabilizer_point(space: &SpaceSpec, rng_seed: u64) -> Result<Mat<C64>> {
    stabilizer_point(space, &mut trial_rng(rng_seed, 1))
}
