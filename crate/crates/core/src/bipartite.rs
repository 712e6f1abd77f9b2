//! Two-photon OAM state through independent per-arm screens, post-selected
//! onto the `{|-l>, |+l>}` qubit subspaces and averaged over realizations.

use nalgebra::{Complex, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::channel::TransferMatrix;
use crate::density::{DensityMatrix, hermitian_part, trace};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `(|-l,+l> + |+l,-l>) / sqrt2` in the [`crate::density::BASIS_LABELS`] ordering.
pub fn bell_vector<T: Real>() -> Vector4<Complex<T>> {
    let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let z = Complex::new(T::zero(), T::zero());
    Vector4::new(z, h, h, z)
}

/// Density matrix of the anti-correlated Bell state.
pub fn ideal_bell_state<T: Real>() -> DensityMatrix<T> {
    let psi = bell_vector::<T>();
    DensityMatrix::new(psi * psi.adjoint()).expect("Bell state is a valid density matrix")
}

/// `p |Bell><Bell| + (1 - p) I/4`.
pub fn werner_state<T: Real>(p: T) -> Result<DensityMatrix<T>> {
    ideal_bell_state().mix(&DensityMatrix::maximally_mixed(), p)
}

/// Post-selected, unnormalized two-photon state for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult<T: Real> {
    /// `(A (x) B) rho_ideal (A (x) B)^dagger`; its trace is the probability
    /// that both photons stay inside the qubit subspace.
    pub rho_unnormalized: Matrix4<Complex<T>>,
    /// Screen seeds for arms A and B, when known.
    pub seeds: Option<(u64, u64)>,
}

impl<T: Real> RealizationResult<T> {
    pub fn postselection_probability(&self) -> T {
        trace(&self.rho_unnormalized)
    }

    pub fn with_seeds(mut self, a: u64, b: u64) -> Self {
        self.seeds = Some((a, b));
        self
    }
}

fn qubit_ell<T: Real>(m: &TransferMatrix<T>) -> Result<i32> {
    match *m.basis() {
        [lo, hi] if lo == -hi && hi != 0 => Ok(hi),
        _ => Err(Error::Config(format!(
            "expected a 2x2 transfer matrix on {{-l, +l}}, got basis {:?}",
            m.basis()
        ))),
    }
}

/// Propagates the Bell state through one screen per arm.
pub fn evolve_realization<T: Real>(
    a: &TransferMatrix<T>,
    b: &TransferMatrix<T>,
) -> Result<RealizationResult<T>> {
    let ell_a = qubit_ell(a)?;
    let ell_b = qubit_ell(b)?;
    if ell_a != ell_b {
        return Err(Error::Config(format!(
            "arms use different subspaces: l = {ell_a} vs l = {ell_b}"
        )));
    }
    let (ma, mb) = (a.matrix(), b.matrix());
    let k = Matrix4::from_fn(|r, c| ma[(r / 2, c / 2)] * mb[(r % 2, c % 2)]);
    let ideal = ideal_bell_state::<T>();
    let rho = k * ideal.matrix() * k.adjoint();
    Ok(RealizationResult {
        rho_unnormalized: hermitian_part(&rho),
        seeds: None,
    })
}

/// How realizations are combined into a mean state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Sum the unnormalized states and normalize once, as accumulated
    /// coincidence counts would.
    #[default]
    CountWeighted,
    /// Normalize each realization first, then take the plain mean.
    Uniform,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count_weighted" => Ok(Averaging::CountWeighted),
            "uniform" => Ok(Averaging::Uniform),
            other => Err(Error::Config(format!(
                "unknown averaging '{other}' (expected count_weighted or uniform)"
            ))),
        }
    }
}

/// Mean density matrix of an ensemble of realizations.
pub fn average_realizations<T: Real>(
    results: &[RealizationResult<T>],
    averaging: Averaging,
) -> Result<DensityMatrix<T>> {
    average_matrices(results.iter().map(|r| &r.rho_unnormalized), averaging)
}

pub(crate) fn average_matrices<'a, T: Real>(
    matrices: impl Iterator<Item = &'a Matrix4<Complex<T>>>,
    averaging: Averaging,
) -> Result<DensityMatrix<T>> {
    let mut sum = Matrix4::<Complex<T>>::zeros();
    let mut count = 0usize;
    for m in matrices {
        count += 1;
        match averaging {
            Averaging::CountWeighted => sum += m,
            Averaging::Uniform => {
                let tr = trace(m);
                if tr > T::zero() {
                    sum += m / Complex::new(tr, T::zero());
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Config("cannot average an empty ensemble".into()));
    }
    if !(trace(&sum) > T::zero()) {
        return Err(Error::DegenerateEnsemble(format!(
            "no coincidences survive post-selection in {count} realizations"
        )));
    }
    DensityMatrix::from_unnormalized(&sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn tm(basis: [i32; 2], m: [[Complex<f64>; 2]; 2]) -> TransferMatrix<f64> {
        TransferMatrix::new(basis.to_vec(), DMatrix::from_fn(2, 2, |r, c| m[r][c])).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn ideal_state_examples() {
        let rho = ideal_bell_state::<f64>();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.matrix()[(1, 2)] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(rho.matrix()[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn identity_channel_preserves_state() {
        let id = TransferMatrix::<f64>::identity(vec![-1, 1]).unwrap();
        let r = evolve_realization(&id, &id).unwrap();
        assert!((r.postselection_probability() - 1.0).abs() < 1e-15);
        let rho = DensityMatrix::from_unnormalized(&r.rho_unnormalized).unwrap();
        assert!(rho.max_abs_diff(&ideal_bell_state()) < 1e-15);
    }

    #[test]
    fn global_phase_cancels() {
        let ph = c(0.3f64.cos(), 0.3f64.sin());
        let a = tm([-2, 2], [[ph, c(0.0, 0.0)], [c(0.0, 0.0), ph]]);
        let id = TransferMatrix::identity(vec![-2, 2]).unwrap();
        let r = evolve_realization(&a, &id).unwrap();
        let diff = r.rho_unnormalized - ideal_bell_state::<f64>().matrix();
        assert!(diff.norm() < 1e-15);
    }

    #[test]
    fn projecting_both_arms_onto_minus_l_kills_the_state() {
        // (P (x) P)(|-l,+l> + |+l,-l>) = 0 for P = |-l><-l|
        let p = tm(
            [-1, 1],
            [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]],
        );
        let r = evolve_realization(&p, &p).unwrap();
        assert_eq!(r.postselection_probability(), 0.0);
        assert!(matches!(
            average_realizations(&[r], Averaging::CountWeighted),
            Err(Error::DegenerateEnsemble(_))
        ));
    }

    #[test]
    fn basis_checks() {
        let id3 = TransferMatrix::<f64>::identity(vec![-1, 0, 1]).unwrap();
        let id = TransferMatrix::<f64>::identity(vec![-1, 1]).unwrap();
        assert!(evolve_realization(&id3, &id).is_err());
        let other = TransferMatrix::<f64>::identity(vec![-3, 3]).unwrap();
        assert!(evolve_realization(&id, &other).is_err());
        let skew = TransferMatrix::<f64>::identity(vec![1, 2]).unwrap();
        assert!(evolve_realization(&skew, &skew).is_err());
    }

    #[test]
    fn averaging_is_linear() {
        let r1 = RealizationResult {
            rho_unnormalized: *ideal_bell_state::<f64>().matrix() * c(0.5, 0.0),
            seeds: None,
        };
        let mixed = DensityMatrix::<f64>::maximally_mixed();
        let r2 = RealizationResult {
            rho_unnormalized: *mixed.matrix() * c(0.5, 0.0),
            seeds: None,
        };
        let avg =
            average_realizations(&[r1.clone(), r2.clone()], Averaging::CountWeighted).unwrap();
        let expected = ideal_bell_state().mix(&mixed, 0.5).unwrap();
        assert!(avg.max_abs_diff(&expected) < 1e-15);
        let uni = average_realizations(&[r1, r2], Averaging::Uniform).unwrap();
        assert!(uni.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn weighting_conventions_differ_for_unequal_traces() {
        let r1 = RealizationResult {
            rho_unnormalized: *ideal_bell_state::<f64>().matrix() * c(0.9, 0.0),
            seeds: None,
        };
        let r2 = RealizationResult {
            rho_unnormalized: *DensityMatrix::<f64>::maximally_mixed().matrix() * c(0.1, 0.0),
            seeds: None,
        };
        let cw = average_realizations(&[r1.clone(), r2.clone()], Averaging::CountWeighted).unwrap();
        let un = average_realizations(&[r1, r2], Averaging::Uniform).unwrap();
        assert!((cw.matrix()[(1, 2)].re - 0.45).abs() < 1e-15);
        assert!((un.matrix()[(1, 2)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn empty_ensemble_rejected() {
        assert!(average_realizations::<f64>(&[], Averaging::CountWeighted).is_err());
    }

    #[test]
    fn werner_state_is_valid() {
        for p in [0.0, 0.3, 1.0] {
            let w = werner_state::<f64>(p).unwrap();
            assert!((w.matrix()[(1, 2)].re - p / 2.0).abs() < 1e-15);
        }
        assert!(werner_state::<f64>(1.5).is_err());
    }
}
