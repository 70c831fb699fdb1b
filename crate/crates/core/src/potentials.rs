//! Potential models with derivatives up to fourth order, and Gaussian
//! averages `⟨V⟩`, `⟨∇V⟩`, `⟨∇²V⟩` with respect to `|ψ₀|²`.
//!
//! The Gaussian weight `exp(−(x−q)ᵀB(x−q)/ħ)` has covariance `Σ = (ħ/2) B⁻¹`.
//! For polynomials of degree at most four the averages are closed-form in the
//! derivatives at `q`:
//!
//! ```text
//! ⟨V⟩     = V + ½ Σ_ij ∂_ij V + ⅛ Σ_ij Σ_kl ∂_ijkl V
//! ⟨∂_k V⟩ = ∂_k V + ½ Σ_ij ∂_ijk V
//! ⟨∂_kl V⟩ = ∂_kl V + ½ Σ_ij ∂_ijkl V
//! ```

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GwpError, Result};
use crate::geometry::{sym_function, sym_inv_sqrt};

/// Dense symmetric 3-tensor, row-major `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.data[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    /// `v_k = Σ_ij M_ij T_ijk`.
    pub fn contract_matrix(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += m[(i, j)] * self.get(i, j, k);
                }
            }
            s
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// Dense symmetric 4-tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim.pow(4)];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        data[((i * dim + j) * dim + k) * dim + l] = f(i, j, k, l);
                    }
                }
            }
        }
        Self { dim, data }
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.data[((i * d + j) * d + k) * d + l]
    }

    /// `M'_kl = Σ_ij M_ij T_ijkl`.
    pub fn contract_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |k, l| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += m[(i, j)] * self.get(i, j, k, l);
                }
            }
            s
        })
    }
}

/// A scalar potential on `ℝ^d`.
pub trait PotentialModel: Debug + Send + Sync {
    /// Fixed dimension, or `None` when the model is defined for any `d`.
    fn dim(&self) -> Option<usize>;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Third derivatives. The default differentiates [`Self::hessian`]
    /// centrally with step `1e-5·(1 + |x|)`.
    fn third(&self, x: &DVector<f64>) -> Tensor3 {
        let d = x.len();
        let h = 1e-5 * (1.0 + x.norm());
        let slices: Vec<DMatrix<f64>> = (0..d)
            .map(|k| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                (self.hessian(&xp) - self.hessian(&xm)) / (2.0 * h)
            })
            .collect();
        let raw = Tensor3::from_fn(d, |i, j, k| slices[k][(i, j)]);
        // average over index permutations
        Tensor3::from_fn(d, |i, j, k| {
            (raw.get(i, j, k)
                + raw.get(i, k, j)
                + raw.get(j, i, k)
                + raw.get(j, k, i)
                + raw.get(k, i, j)
                + raw.get(k, j, i))
                / 6.0
        })
    }

    /// Fourth derivatives, when available in closed form.
    fn fourth(&self, _x: &DVector<f64>) -> Option<Tensor4> {
        None
    }

    /// Total degree when the model is a polynomial.
    fn polynomial_degree(&self) -> Option<u32> {
        None
    }

    /// Whether closed-form Gaussian averages apply.
    fn has_analytic_averages(&self) -> bool {
        matches!(self.polynomial_degree(), Some(deg) if deg <= 4)
    }
}

/// `(V, ∇V, ∇²V, ∇³V)` at `x`.
pub fn potential_derivatives(
    model: &dyn PotentialModel,
    x: &DVector<f64>,
) -> (f64, DVector<f64>, DMatrix<f64>, Tensor3) {
    (
        model.value(x),
        model.gradient(x),
        model.hessian(x),
        model.third(x),
    )
}

/// `V = ½ xᵀ K x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    k: DMatrix<f64>,
}

impl Harmonic {
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        if !k.is_square() {
            return Err(GwpError::DimensionMismatch("K must be square".into()));
        }
        let sym = crate::geometry::SymMat::new(k)?;
        let eig = SymmetricEigen::new(sym.matrix().clone());
        if eig.eigenvalues.min() <= 0.0 {
            return Err(GwpError::NotPositiveDefinite {
                min_eig: eig.eigenvalues.min(),
                max_eig: eig.eigenvalues.max(),
            });
        }
        Ok(Self {
            k: sym.into_inner(),
        })
    }

    pub fn isotropic(d: usize, k: f64) -> Self {
        Self {
            k: DMatrix::identity(d, d) * k,
        }
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.k
    }
}

impl PotentialModel for Harmonic {
    fn dim(&self) -> Option<usize> {
        Some(self.k.nrows())
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.k * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.k * x
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.k.clone()
    }

    fn third(&self, x: &DVector<f64>) -> Tensor3 {
        Tensor3::zeros(x.len())
    }

    fn fourth(&self, x: &DVector<f64>) -> Option<Tensor4> {
        Some(Tensor4::from_fn(x.len(), |_, _, _, _| 0.0))
    }

    fn polynomial_degree(&self) -> Option<u32> {
        Some(2)
    }
}

/// Axisymmetric `V(x) = r²/2 + r⁴/4`, `r = |x|`, in any dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuarticRadial;

fn kron(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl PotentialModel for QuarticRadial {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r2 = x.norm_squared();
        0.5 * r2 + 0.25 * r2 * r2
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x * (1.0 + x.norm_squared())
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = x.len();
        DMatrix::identity(d, d) * (1.0 + x.norm_squared()) + 2.0 * x * x.transpose()
    }

    fn third(&self, x: &DVector<f64>) -> Tensor3 {
        Tensor3::from_fn(x.len(), |i, j, k| {
            2.0 * (kron(i, j) * x[k] + kron(i, k) * x[j] + kron(j, k) * x[i])
        })
    }

    fn fourth(&self, x: &DVector<f64>) -> Option<Tensor4> {
        Some(Tensor4::from_fn(x.len(), |i, j, k, l| {
            2.0 * (kron(i, j) * kron(k, l) + kron(i, k) * kron(j, l) + kron(i, l) * kron(j, k))
        }))
    }

    fn polynomial_degree(&self) -> Option<u32> {
        Some(4)
    }
}

/// One term `coef · Π x_i^{powers_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    /// Mixed partial derivative along the listed axes.
    fn derivative(&self, x: &DVector<f64>, axes: &[usize]) -> f64 {
        let mut counts = vec![0u32; self.powers.len()];
        for &a in axes {
            counts[a] += 1;
        }
        let mut out = self.coef;
        for (i, (&pw, &c)) in self.powers.iter().zip(&counts).enumerate() {
            if c > pw {
                return 0.0;
            }
            let falling: u32 = ((pw - c + 1)..=pw).product();
            out *= falling as f64 * x[i].powi((pw - c) as i32);
        }
        out
    }
}

/// Sum of monomials in a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    dim: usize,
    terms: Vec<Monomial>,
}

impl PolynomialPotential {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.powers.len() != dim) {
            return Err(GwpError::DimensionMismatch(format!(
                "monomial with {} exponents in dimension {}",
                t.powers.len(),
                dim
            )));
        }
        Ok(Self { dim, terms })
    }

    /// `|x|²/2 + ε·(x₁²x₂ + x₁³/3)`-style perturbation of the isotropic
    /// oscillator that breaks rotation symmetry; `d ≥ 2`.
    pub fn broken_symmetry(dim: usize, eps: f64) -> Self {
        let mut terms = Vec::new();
        for i in 0..dim {
            let mut powers = vec![0; dim];
            powers[i] = 2;
            terms.push(Monomial { coef: 0.5, powers });
        }
        let mut cubic = vec![0; dim];
        cubic[0] = 2;
        cubic[1] = 1;
        terms.push(Monomial {
            coef: eps,
            powers: cubic,
        });
        let mut quartic = vec![0; dim];
        quartic[0] = 4;
        terms.push(Monomial {
            coef: eps,
            powers: quartic,
        });
        Self { dim, terms }
    }

    fn partial(&self, x: &DVector<f64>, axes: &[usize]) -> f64 {
        self.terms.iter().map(|t| t.derivative(x, axes)).sum()
    }
}

impl PotentialModel for PolynomialPotential {
    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.partial(x, &[])
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| self.partial(x, &[i]))
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.partial(x, &[i, j]))
    }

    fn third(&self, x: &DVector<f64>) -> Tensor3 {
        Tensor3::from_fn(self.dim, |i, j, k| self.partial(x, &[i, j, k]))
    }

    fn fourth(&self, x: &DVector<f64>) -> Option<Tensor4> {
        Some(Tensor4::from_fn(self.dim, |i, j, k, l| {
            self.partial(x, &[i, j, k, l])
        }))
    }

    fn polynomial_degree(&self) -> Option<u32> {
        Some(self.terms.iter().map(Monomial::degree).max().unwrap_or(0))
    }
}

/// Serializable description of a built-in potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `½ xᵀKx`; `k` defaults to the identity.
    Harmonic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<Vec<Vec<f64>>>,
    },
    QuarticRadial {},
    Polynomial { terms: Vec<Monomial> },
}

impl PotentialSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.build(dim).map(|_| ())
    }

    pub fn build(&self, dim: usize) -> Result<Box<dyn PotentialModel>> {
        match self {
            PotentialSpec::Harmonic { k: None } => Ok(Box::new(Harmonic::isotropic(dim, 1.0))),
            PotentialSpec::Harmonic { k: Some(rows) } => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(GwpError::InvalidConfig(format!(
                        "harmonic K must be {dim}x{dim}"
                    )));
                }
                let k = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
                Ok(Box::new(Harmonic::new(k).map_err(|e| {
                    GwpError::InvalidConfig(format!("harmonic K: {e}"))
                })?))
            }
            PotentialSpec::QuarticRadial {} => Ok(Box::new(QuarticRadial)),
            PotentialSpec::Polynomial { terms } => Ok(Box::new(
                PolynomialPotential::new(dim, terms.clone())
                    .map_err(|e| GwpError::InvalidConfig(format!("polynomial: {e}")))?,
            )),
        }
    }

    /// Whether the model is invariant under all rotations.
    pub fn is_rotation_invariant(&self) -> bool {
        match self {
            PotentialSpec::Harmonic { k: None } | PotentialSpec::QuarticRadial {} => true,
            PotentialSpec::Harmonic { k: Some(rows) } => {
                let d = rows.len();
                let c = rows.first().and_then(|r| r.first()).copied().unwrap_or(0.0);
                (0..d).all(|i| (0..d).all(|j| rows[i][j] == if i == j { c } else { 0.0 }))
            }
            PotentialSpec::Polynomial { .. } => false,
        }
    }
}

/// How Gaussian averages are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum AverageMethod {
    /// Closed-form moments; polynomial models of degree ≤ 4 only.
    #[default]
    Analytic,
    /// Gauss–Hermite quadrature of the given order per axis.
    Quadrature { order: usize },
    /// Analytic when available, otherwise quadrature.
    Auto { order: usize },
}

/// `(⟨V⟩, ⟨∇V⟩, ⟨∇²V⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianAverages {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Covariance `Σ = (ħ/2) B⁻¹`.
pub fn covariance(b: &DMatrix<f64>, hbar: f64) -> DMatrix<f64> {
    sym_function(b, |x| 1.0 / x) * (0.5 * hbar)
}

/// Gaussian averages of `model` centred at `q` with width `B`.
pub fn gaussian_average(
    model: &dyn PotentialModel,
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    hbar: f64,
    method: AverageMethod,
) -> Result<GaussianAverages> {
    match method {
        AverageMethod::Analytic => analytic_average(model, q, b, hbar),
        AverageMethod::Quadrature { order } => quadrature_average(model, q, b, hbar, order),
        AverageMethod::Auto { order } => {
            if model.has_analytic_averages() {
                analytic_average(model, q, b, hbar)
            } else {
                quadrature_average(model, q, b, hbar, order)
            }
        }
    }
}

fn analytic_average(
    model: &dyn PotentialModel,
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    hbar: f64,
) -> Result<GaussianAverages> {
    let fourth = match (model.has_analytic_averages(), model.fourth(q)) {
        (true, Some(t)) => t,
        _ => {
            return Err(GwpError::Unsupported(
                "analytic Gaussian averages need a polynomial of degree <= 4; select quadrature".into(),
            ))
        }
    };
    let sigma = covariance(b, hbar);
    let hess = model.hessian(q);
    let third = model.third(q);
    let sigma_v4 = fourth.contract_matrix(&sigma);
    let value = model.value(q)
        + 0.5 * sigma.component_mul(&hess).sum()
        + 0.125 * sigma.component_mul(&sigma_v4).sum();
    let gradient = model.gradient(q) + 0.5 * third.contract_matrix(&sigma);
    let hessian = &hess + 0.5 * &sigma_v4;
    Ok(GaussianAverages {
        value,
        gradient,
        hessian: (&hessian + hessian.transpose()) * 0.5,
    })
}

fn quadrature_average(
    model: &dyn PotentialModel,
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    hbar: f64,
    order: usize,
) -> Result<GaussianAverages> {
    let d = q.len();
    let out = gauss_hermite_expectation_vec(
        |x| {
            let mut v = Vec::with_capacity(1 + d + d * d);
            v.push(model.value(x));
            v.extend(model.gradient(x).iter());
            v.extend(model.hessian(x).iter());
            v
        },
        q,
        b,
        hbar,
        order,
    )?;
    let hessian = DMatrix::from_column_slice(d, d, &out[1 + d..]);
    Ok(GaussianAverages {
        value: out[0],
        gradient: DVector::from_column_slice(&out[1..1 + d]),
        hessian: (&hessian + hessian.transpose()) * 0.5,
    })
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the weight
/// `e^{−t²}` (Golub–Welsch).
pub fn gauss_hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jac[(k - 1, k)] = off;
        jac[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrize against eigen-solver roundoff
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let t = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-t, w);
        pairs[j] = (t, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Expectation of a vector-valued `f` under the Gaussian of covariance
/// `(ħ/2)B⁻¹` centred at `q`, by a tensor-product Gauss–Hermite rule after
/// whitening with the symmetric square root `B^{-1/2}`.
pub fn gauss_hermite_expectation_vec(
    f: impl Fn(&DVector<f64>) -> Vec<f64>,
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    hbar: f64,
    order: usize,
) -> Result<Vec<f64>> {
    let d = q.len();
    if order == 0 {
        return Err(GwpError::InvalidConfig("quadrature order must be >= 1".into()));
    }
    if d > 4 && order > 30 {
        return Err(GwpError::QuadratureCost { dim: d, order });
    }
    if b.shape() != (d, d) {
        return Err(GwpError::DimensionMismatch(format!(
            "B is {:?} for q of length {d}",
            b.shape()
        )));
    }
    let (nodes, weights) = gauss_hermite_rule(order);
    let map = sym_inv_sqrt(b)? * hbar.sqrt();
    let norm = PI.powf(-0.5 * d as f64);
    let mut idx = vec![0usize; d];
    let mut acc: Option<Vec<f64>> = None;
    loop {
        let t = DVector::from_fn(d, |i, _| nodes[idx[i]]);
        let w: f64 = idx.iter().map(|&i| weights[i]).product::<f64>() * norm;
        let x = q + &map * t;
        let val = f(&x);
        match acc.as_mut() {
            None => acc = Some(val.into_iter().map(|v| w * v).collect()),
            Some(a) => {
                for (ai, vi) in a.iter_mut().zip(val) {
                    *ai += w * vi;
                }
            }
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == d {
                return Ok(acc.unwrap_or_default());
            }
            idx[axis] += 1;
            if idx[axis] < order {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Scalar version of [`gauss_hermite_expectation_vec`].
pub fn gauss_hermite_expectation(
    f: impl Fn(&DVector<f64>) -> f64,
    q: &DVector<f64>,
    b: &DMatrix<f64>,
    hbar: f64,
    order: usize,
) -> Result<f64> {
    Ok(gauss_hermite_expectation_vec(|x| vec![f(x)], q, b, hbar, order)?[0])
}
