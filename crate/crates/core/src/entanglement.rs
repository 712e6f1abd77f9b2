//! Concurrence and entanglement of formation of two-qubit states.

use nalgebra::{Complex, Matrix4};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, abs};

const CLIP_TOL: f64 = 1e-8;

/// `-x log2 x - (1 - x) log2(1 - x)`, zero at both endpoints.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::domain("x", x.as_f64(), "[0, 1]"));
    }
    let term = |p: T| {
        if p == T::zero() {
            T::zero()
        } else {
            -p * p.log2()
        }
    };
    Ok(term(x) + term(T::one() - x))
}

/// `sigma_y (x) sigma_y` in the computational basis used by [`DensityMatrix`].
pub fn spin_flip<T: Real>() -> Matrix4<Complex<T>> {
    let o = Complex::new(T::one(), T::zero());
    let mut m = Matrix4::zeros();
    m[(0, 3)] = -o;
    m[(1, 2)] = o;
    m[(2, 1)] = o;
    m[(3, 0)] = -o;
    m
}

/// Eigenvalues of `rho (sy (x) sy) rho* (sy (x) sy)` in decreasing order.
///
/// The product is not Hermitian; its spectrum is real and non-negative for
/// a valid state, so small imaginary parts and small negative real parts
/// are treated as rounding and clipped.
pub fn spin_flip_eigenvalues<T: Real>(rho: &DensityMatrix<T>) -> Result<[T; 4]> {
    let s = spin_flip::<T>();
    let r = rho.matrix();
    let product = r * s * r.map(|z| z.conj()) * s;
    let schur = product
        .try_schur(T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Numerical("spin-flip eigensolver did not converge".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("spin-flip Schur form is not triangular".into()))?;

    // Eigenvalues at the rounding level of the product are exact zeros:
    // pure states have a rank-one product whose null eigenvalues come out
    // of the solver as O(eps) complex numbers.
    let scale = product
        .iter()
        .fold(T::zero(), |a, z| a + z.norm_sqr())
        .sqrt();
    let floor = T::of(256.0) * T::default_epsilon() * scale;
    let tol = T::tolerance(CLIP_TOL);

    let mut out = [T::zero(); 4];
    for (slot, z) in out.iter_mut().zip(eig.iter()) {
        if z.norm_sqr().sqrt() <= floor {
            continue;
        }
        if abs(z.im) > tol || z.re < -tol {
            return Err(Error::InvalidState(format!(
                "spin-flip eigenvalue {} + {}i is not a non-negative real",
                z.re, z.im
            )));
        }
        *slot = z.re.max(T::zero());
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

fn concurrence_from_eigenvalues<T: Real>(l: &[T; 4]) -> T {
    let s = l.map(|x| x.sqrt());
    (s[0] - s[1] - s[2] - s[3]).max(T::zero()).min(T::one())
}

/// `C = max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4))`.
pub fn concurrence<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    Ok(concurrence_from_eigenvalues(&spin_flip_eigenvalues(rho)?))
}

/// `E = h((1 + sqrt(1 - C^2)) / 2)`.
pub fn eof_from_concurrence<T: Real>(c: T) -> Result<T> {
    if !(c >= T::zero() && c <= T::one()) {
        return Err(Error::domain("concurrence", c.as_f64(), "[0, 1]"));
    }
    let x = (T::one() + (T::one() - c * c).max(T::zero()).sqrt()) / T::of(2.0);
    binary_entropy(x)
}

pub fn eof<T: Real>(rho: &DensityMatrix<T>) -> Result<T> {
    eof_from_concurrence(concurrence(rho)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport<T> {
    pub concurrence: T,
    pub eof: T,
    /// Decreasing.
    pub spin_flip_eigenvalues: [T; 4],
}

impl<T: Real> EntanglementReport<T> {
    pub fn evaluate(rho: &DensityMatrix<T>) -> Result<Self> {
        let spin_flip_eigenvalues = spin_flip_eigenvalues(rho)?;
        let concurrence = concurrence_from_eigenvalues(&spin_flip_eigenvalues);
        Ok(Self {
            concurrence,
            eof: eof_from_concurrence(concurrence)?,
            spin_flip_eigenvalues,
        })
    }
}
