//! Seeded random generators for property checks.
//!
//! Symplectic and orthogonal samples are exponentials of random Lie algebra
//! elements with entries uniform in `[−1, 1]` scaled by `0.5`, which keeps
//! them well-conditioned.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{embed_unitary, SiegelPoint, SymMat, SymplecticMatrix2d};
use crate::wavepacket::ReducedState;

const LIE_SCALE: f64 = 0.5;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn vector(&mut self, d: usize, scale: f64) -> DVector<f64> {
        DVector::from_fn(d, |_, _| scale * self.rng.gen_range(-1.0..1.0))
    }

    pub fn matrix(&mut self, n: usize, m: usize, scale: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, _| scale * self.rng.gen_range(-1.0..1.0))
    }

    pub fn symmetric(&mut self, d: usize, scale: f64) -> DMatrix<f64> {
        let m = self.matrix(d, d, scale);
        (&m + m.transpose()) * 0.5
    }

    pub fn antisymmetric(&mut self, d: usize, scale: f64) -> DMatrix<f64> {
        let m = self.matrix(d, d, scale);
        (&m - m.transpose()) * 0.5
    }

    /// Symmetric positive-definite matrix with eigenvalues in about `[0.4, 2.5]`.
    pub fn spd(&mut self, d: usize) -> DMatrix<f64> {
        let s = self.symmetric(d, 0.9);
        let m = s.exp();
        (&m + m.transpose()) * 0.5
    }

    pub fn siegel(&mut self, d: usize) -> SiegelPoint {
        let a = self.symmetric(d, 1.0);
        let b = self.spd(d);
        SiegelPoint::new(SymMat::new(a).unwrap(), SymMat::new(b).unwrap()).unwrap()
    }

    /// `exp(ξ)` for a random `ξ ∈ so(d)`.
    pub fn rotation(&mut self, d: usize) -> DMatrix<f64> {
        let xi = self.antisymmetric(d, 2.0);
        xi.exp()
    }

    /// A random element of `sp(2d)`: `[a, b; c, −aᵀ]` with `b`, `c` symmetric.
    pub fn sp_algebra(&mut self, d: usize) -> DMatrix<f64> {
        let a = self.matrix(d, d, LIE_SCALE);
        let b = self.symmetric(d, LIE_SCALE);
        let c = self.symmetric(d, LIE_SCALE);
        let mut xi = DMatrix::zeros(2 * d, 2 * d);
        xi.view_mut((0, 0), (d, d)).copy_from(&a);
        xi.view_mut((0, d), (d, d)).copy_from(&b);
        xi.view_mut((d, 0), (d, d)).copy_from(&c);
        xi.view_mut((d, d), (d, d)).copy_from(&(-a.transpose()));
        xi
    }

    pub fn symplectic(&mut self, d: usize) -> SymplecticMatrix2d {
        SymplecticMatrix2d::new(self.sp_algebra(d).exp()).unwrap()
    }

    /// A random unitary `exp(S + iT)` (`S` antisymmetric, `T` symmetric),
    /// embedded in `Sp(2d) ∩ O(2d)`.
    pub fn unitary_embedded(&mut self, d: usize) -> SymplecticMatrix2d {
        let s = self.antisymmetric(d, 2.0);
        let t = self.symmetric(d, 2.0);
        let mut k = DMatrix::zeros(2 * d, 2 * d);
        k.view_mut((0, 0), (d, d)).copy_from(&s);
        k.view_mut((0, d), (d, d)).copy_from(&t);
        k.view_mut((d, 0), (d, d)).copy_from(&(-&t));
        k.view_mut((d, d), (d, d)).copy_from(&s);
        let e = k.exp();
        let u = e.view((0, 0), (d, d)).into_owned();
        let v = e.view((0, d), (d, d)).into_owned();
        embed_unitary(&u, &v).unwrap()
    }

    pub fn reduced_state(&mut self, d: usize) -> ReducedState {
        let q = self.vector(d, 1.0);
        let p = self.vector(d, 1.0);
        let c = self.siegel(d);
        ReducedState::new(q, p, c).unwrap()
    }
}
