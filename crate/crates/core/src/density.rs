//! Two-qubit density matrices over the `{|-l>, |+l>}` OAM subspaces.

use nalgebra::{Complex, Matrix4, RealField, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, abs};

/// Ordering of the two-photon basis, arm A first.
pub const BASIS_LABELS: [&str; 4] = ["-l,-l", "-l,+l", "+l,-l", "+l,+l"];

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, positive semidefinite 4x4 matrix in the basis
/// [`BASIS_LABELS`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    m: Matrix4<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: Matrix4<Complex<T>>) -> Result<Self> {
        validate(&m)?;
        Ok(Self { m })
    }

    /// Hermitizes `m`, divides by its trace and validates.
    pub fn from_unnormalized(m: &Matrix4<Complex<T>>) -> Result<Self> {
        let h = hermitian_part(m);
        let tr = trace(&h);
        if !(tr > T::zero()) || !tr.is_finite() {
            return Err(Error::InvalidState(format!(
                "trace {tr} cannot be normalized"
            )));
        }
        Self::new(h / Complex::new(tr, T::zero()))
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn from_pure(psi: &Vector4<Complex<T>>) -> Result<Self> {
        Self::from_unnormalized(&(psi * psi.adjoint()))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Matrix4::identity() * Complex::new(T::of(0.25), T::zero()),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex<T>> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix4<Complex<T>> {
        self.m
    }

    pub fn trace(&self) -> T {
        trace(&self.m)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [T; 4] {
        sorted_eigenvalues(&self.m)
    }

    /// `<v| rho |v>`.
    pub fn expectation(&self, v: &Vector4<Complex<T>>) -> T {
        (v.adjoint() * self.m * v)[(0, 0)].re
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs(&(self.m - other.m))
    }

    /// `a * self + (1 - a) * other` for `a` in `[0, 1]`.
    pub fn mix(&self, other: &Self, a: T) -> Result<Self> {
        if !(a >= T::zero() && a <= T::one()) {
            return Err(Error::domain("mixing weight", a.as_f64(), "[0, 1]"));
        }
        let m =
            self.m * Complex::new(a, T::zero()) + other.m * Complex::new(T::one() - a, T::zero());
        Self::new(hermitian_part(&m))
    }

    /// `U rho U^dagger` for a unitary `U`.
    pub fn conjugated_by(&self, u: &Matrix4<Complex<T>>) -> Result<Self> {
        Self::from_unnormalized(&(u * self.m * u.adjoint()))
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        DensityMatrixJson::from_matrix(&self.m)
    }
}

/// Serialized form: real and imaginary parts as row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub basis: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensityMatrixJson {
    pub fn from_matrix<T: Real>(m: &Matrix4<Complex<T>>) -> Self {
        let part = |f: &dyn Fn(&Complex<T>) -> T| {
            (0..4)
                .map(|r| (0..4).map(|c| f(&m[(r, c)]).as_f64()).collect())
                .collect()
        };
        Self {
            basis: BASIS_LABELS.iter().map(|s| s.to_string()).collect(),
            re: part(&|z| z.re),
            im: part(&|z| z.im),
        }
    }

    pub fn to_density<T: Real>(&self) -> Result<DensityMatrix<T>> {
        let ok = |p: &Vec<Vec<f64>>| p.len() == 4 && p.iter().all(|r| r.len() == 4);
        if !ok(&self.re) || !ok(&self.im) {
            return Err(Error::InvalidState(
                "expected 4x4 real and imaginary parts".into(),
            ));
        }
        let m = Matrix4::from_fn(|r, c| Complex::new(T::of(self.re[r][c]), T::of(self.im[r][c])));
        DensityMatrix::new(m)
    }
}

pub(crate) fn trace<T: Real>(m: &Matrix4<Complex<T>>) -> T {
    (0..4).fold(T::zero(), |a, i| a + m[(i, i)].re)
}

pub(crate) fn hermitian_part<T: Real>(m: &Matrix4<Complex<T>>) -> Matrix4<Complex<T>> {
    (m + m.adjoint()) * Complex::new(T::of(0.5), T::zero())
}

pub(crate) fn max_abs<T: Real>(m: &Matrix4<Complex<T>>) -> T {
    m.iter()
        .fold(T::zero(), |a, z| RealField::max(a, z.norm_sqr().sqrt()))
}

pub(crate) fn sorted_eigenvalues<T: Real>(m: &Matrix4<Complex<T>>) -> [T; 4] {
    let e = hermitian_part(m).symmetric_eigen().eigenvalues;
    let mut v = [e[0], e[1], e[2], e[3]];
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

fn validate<T: Real>(m: &Matrix4<Complex<T>>) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    let herm = max_abs(&(m - m.adjoint()));
    if herm > T::tolerance(HERMITIAN_TOL) {
        return Err(Error::InvalidState(format!(
            "not Hermitian (deviation {herm:e})"
        )));
    }
    let tr = trace(m);
    if abs(tr - T::one()) > T::tolerance(TRACE_TOL) {
        return Err(Error::InvalidState(format!("trace {tr} != 1")));
    }
    let min = sorted_eigenvalues(m)[0];
    if min < -T::tolerance(EIGEN_TOL) {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// `a (x) b` for two single-qubit vectors, arm A as the major index.
pub fn kron2<T: Real>(a: &Vector2<Complex<T>>, b: &Vector2<Complex<T>>) -> Vector4<Complex<T>> {
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let r = DensityMatrix::<f64>::maximally_mixed();
        assert!(DensityMatrix::new(*r.matrix()).is_ok());
        assert_eq!(r.eigenvalues(), [0.25; 4]);
    }

    #[test]
    fn rejects_invariant_violations() {
        let mut m = Matrix4::<Complex<f64>>::identity() * c(0.25, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err()); // not Hermitian
        let m = Matrix4::<Complex<f64>>::identity() * c(0.3, 0.0);
        assert!(DensityMatrix::new(m).is_err()); // trace 1.2
        let m = Matrix4::from_diagonal(&Vector4::new(
            c(0.6, 0.0),
            c(0.6, 0.0),
            c(-0.2, 0.0),
            c(0.0, 0.0),
        ));
        assert!(DensityMatrix::new(m).is_err()); // negative eigenvalue
        let mut m = Matrix4::<Complex<f64>>::identity() * c(0.25, 0.0);
        m[(2, 2)] = c(f64::NAN, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn pure_state_normalizes() {
        let psi = Vector4::new(c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(-1.0, 1.0));
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.expectation(&(psi / c(7f64.sqrt(), 0.0))) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let psi = Vector4::new(c(0.3, 0.1), c(0.5, -0.2), c(0.1, 0.0), c(-0.4, 0.6));
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let text = serde_json::to_string(&rho.to_json()).unwrap();
        let back: DensityMatrixJson = serde_json::from_str(&text).unwrap();
        let back = back.to_density::<f64>().unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-15);
        assert_eq!(back.to_json().basis[1], "-l,+l");
    }

    #[test]
    fn kron_orders_arm_a_major() {
        let a = Vector2::new(c(1.0, 0.0), c(2.0, 0.0));
        let b = Vector2::new(c(3.0, 0.0), c(5.0, 0.0));
        let k = kron2(&a, &b);
        assert_eq!(
            k,
            Vector4::new(c(3.0, 0.0), c(5.0, 0.0), c(6.0, 0.0), c(10.0, 0.0))
        );
    }
}
