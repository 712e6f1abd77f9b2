//! Mode-overlap transfer matrices through a phase screen and the
//! multi-mode coincidence (crosstalk) matrix.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::modes::{OamModeSpec, OpticalField, sample_lg_mode};
use crate::scalar::Real;
use crate::turbulence::{GridGeometry, PhaseScreen};

/// `m[i][j] = <basis[i]| exp(i theta) |basis[j]>` for one screen.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<T: Real> {
    basis: Vec<i32>,
    m: DMatrix<Complex<T>>,
}

impl<T: Real> TransferMatrix<T> {
    pub fn new(basis: Vec<i32>, m: DMatrix<Complex<T>>) -> Result<Self> {
        if m.nrows() != basis.len() || m.ncols() != basis.len() {
            return Err(Error::Config(format!(
                "transfer matrix is {}x{} but the basis has {} modes",
                m.nrows(),
                m.ncols(),
                basis.len()
            )));
        }
        ensure_distinct(&basis)?;
        Ok(Self { basis, m })
    }

    pub fn identity(basis: Vec<i32>) -> Result<Self> {
        let n = basis.len();
        Self::new(basis, DMatrix::identity(n, n))
    }

    pub fn basis(&self) -> &[i32] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.m
    }

    pub fn index_of(&self, ell: i32) -> Option<usize> {
        self.basis.iter().position(|&b| b == ell)
    }

    /// Amplitude for `ell_in` scattering into `ell_out`.
    pub fn amplitude(&self, ell_out: i32, ell_in: i32) -> Option<Complex<T>> {
        Some(self.m[(self.index_of(ell_out)?, self.index_of(ell_in)?)])
    }

    /// `sum_i |m[i][j]|^2`, the probability of staying inside the basis.
    pub fn column_power(&self, j: usize) -> T {
        self.m
            .column(j)
            .iter()
            .fold(T::zero(), |a, z| a + z.norm_sqr())
    }
}

fn ensure_distinct(basis: &[i32]) -> Result<()> {
    for (i, a) in basis.iter().enumerate() {
        if basis[i + 1..].contains(a) {
            return Err(Error::Config(format!("OAM index {a} repeated in basis")));
        }
    }
    Ok(())
}

/// Sampled modes for a fixed basis, reusable across many screens.
#[derive(Debug, Clone)]
pub struct ModeBasis<T: Real> {
    ells: Vec<i32>,
    modes: Vec<OpticalField<T>>,
    geometry: GridGeometry<T>,
}

impl<T: Real> ModeBasis<T> {
    pub fn new(ells: &[i32], w0: T, geometry: &GridGeometry<T>) -> Result<Self> {
        ensure_distinct(ells)?;
        let modes = ells
            .iter()
            .map(|&ell| sample_lg_mode(&OamModeSpec::new(ell, w0)?, geometry))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ells: ells.to_vec(),
            modes,
            geometry: *geometry,
        })
    }

    pub fn ells(&self) -> &[i32] {
        &self.ells
    }

    pub fn modes(&self) -> &[OpticalField<T>] {
        &self.modes
    }

    pub fn transfer_matrix(&self, screen: &PhaseScreen<T>) -> Result<TransferMatrix<T>> {
        self.transfer_matrix_scaled(screen, T::one())
    }

    /// Transfer matrix through the screen `scale * theta` without
    /// materializing the scaled screen.
    pub fn transfer_matrix_scaled(
        &self,
        screen: &PhaseScreen<T>,
        scale: T,
    ) -> Result<TransferMatrix<T>> {
        self.geometry
            .ensure_same(screen.geometry(), "transfer_matrix")?;
        let dx = self.geometry.cell_size();
        let phasor: Vec<Complex<T>> = screen
            .values()
            .iter()
            .map(|&theta| {
                let (s, c) = (theta * scale).sin_cos();
                Complex::new(c, s)
            })
            .collect();

        let b = self.modes.len();
        let mut m = DMatrix::from_element(b, b, Complex::new(T::zero(), T::zero()));
        let mut modulated = vec![Complex::new(T::zero(), T::zero()); phasor.len()];
        for (j, input) in self.modes.iter().enumerate() {
            for ((out, &u), &p) in modulated.iter_mut().zip(input.values()).zip(&phasor) {
                *out = u * p;
            }
            for (i, output) in self.modes.iter().enumerate() {
                let s = output
                    .values()
                    .iter()
                    .zip(&modulated)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (u, v)| {
                        acc + u.conj() * v
                    });
                m[(i, j)] = s * (dx * dx);
            }
        }
        Ok(TransferMatrix {
            basis: self.ells.clone(),
            m,
        })
    }
}

/// Transfer matrix of `screen` over the OAM indices in `basis`.
pub fn transfer_matrix<T: Real>(
    screen: &PhaseScreen<T>,
    basis: &[i32],
    w0: T,
) -> Result<TransferMatrix<T>> {
    ModeBasis::new(basis, w0, screen.geometry())?.transfer_matrix(screen)
}

/// OAM amplitudes `c_m` of the down-converted pair, `m` in `[-ell_max, ell_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralSpectrum<T> {
    ell_max: i32,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> SpiralSpectrum<T> {
    /// Normalizes `coefficients` (ordered from `-ell_max` to `ell_max`).
    pub fn new(ell_max: i32, coefficients: Vec<Complex<T>>) -> Result<Self> {
        if ell_max < 0 {
            return Err(Error::Config(format!(
                "ell_max must be >= 0, got {ell_max}"
            )));
        }
        let expected = (2 * ell_max + 1) as usize;
        if coefficients.len() != expected {
            return Err(Error::Config(format!(
                "spiral spectrum over [-{ell_max}, {ell_max}] needs {expected} coefficients, got {}",
                coefficients.len()
            )));
        }
        let total = coefficients.iter().fold(T::zero(), |a, c| a + c.norm_sqr());
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::Config("spiral spectrum has no power".into()));
        }
        let inv = T::one() / total.sqrt();
        Ok(Self {
            ell_max,
            coefficients: coefficients.into_iter().map(|c| c * inv).collect(),
        })
    }

    pub fn flat(ell_max: i32) -> Result<Self> {
        let len = (2 * ell_max.max(0) + 1) as usize;
        Self::new(ell_max, vec![Complex::new(T::one(), T::zero()); len])
    }

    /// All power in the single index `m`.
    pub fn single(m: i32, ell_max: i32) -> Result<Self> {
        if m.abs() > ell_max {
            return Err(Error::Config(format!(
                "index {m} outside [-{ell_max}, {ell_max}]"
            )));
        }
        let mut c = vec![Complex::new(T::zero(), T::zero()); (2 * ell_max + 1) as usize];
        c[(m + ell_max) as usize] = Complex::new(T::one(), T::zero());
        Self::new(ell_max, c)
    }

    pub fn ell_max(&self) -> i32 {
        self.ell_max
    }

    pub fn coefficient(&self, m: i32) -> Complex<T> {
        self.coefficients[(m + self.ell_max) as usize]
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }
}

/// OAM indices `-ell_max..=ell_max`.
pub fn oam_range(ell_max: i32) -> Vec<i32> {
    (-ell_max..=ell_max).collect()
}

/// `C[a][b] = |sum_m c_m A[a][m] B[b][-m]|^2` with rows indexed by `ell_A`
/// and columns by `ell_B`, both running from `-ell_max` to `ell_max`.
pub fn coincidence_from_transfer<T: Real>(
    a: &TransferMatrix<T>,
    b: &TransferMatrix<T>,
    spectrum: &SpiralSpectrum<T>,
) -> Result<DMatrix<T>> {
    let range = oam_range(spectrum.ell_max());
    if a.basis() != range.as_slice() || b.basis() != range.as_slice() {
        return Err(Error::Config(format!(
            "transfer matrices must span [-{0}, {0}] in order",
            spectrum.ell_max()
        )));
    }
    let d = range.len();
    let mut c = DMatrix::zeros(d, d);
    for ia in 0..d {
        for ib in 0..d {
            let mut amp = Complex::new(T::zero(), T::zero());
            for (im, &m) in range.iter().enumerate() {
                let partner = d - 1 - im; // index of -m
                amp += spectrum.coefficient(m) * a.matrix()[(ia, im)] * b.matrix()[(ib, partner)];
            }
            c[(ia, ib)] = amp.norm_sqr();
        }
    }
    Ok(c)
}

/// Coincidence matrix for one pair of screens.
pub fn coincidence_matrix<T: Real>(
    screen_a: &PhaseScreen<T>,
    screen_b: &PhaseScreen<T>,
    ell_max: i32,
    spectrum: &SpiralSpectrum<T>,
    w0: T,
) -> Result<DMatrix<T>> {
    if spectrum.ell_max() != ell_max {
        return Err(Error::Config(format!(
            "spiral spectrum spans [-{0}, {0}] but the range is [-{ell_max}, {ell_max}]",
            spectrum.ell_max()
        )));
    }
    screen_a
        .geometry()
        .ensure_same(screen_b.geometry(), "coincidence_matrix")?;
    let basis = ModeBasis::new(&oam_range(ell_max), w0, screen_a.geometry())?;
    let a = basis.transfer_matrix(screen_a)?;
    let b = basis.transfer_matrix(screen_b)?;
    coincidence_from_transfer(&a, &b, spectrum)
}

/// Fraction of the total coincidence mass on the anti-diagonal `ell_A = -ell_B`.
pub fn anti_diagonal_fraction<T: Real>(c: &DMatrix<T>) -> T {
    let d = c.nrows();
    let total = c.iter().fold(T::zero(), |a, &v| a + v);
    if total == T::zero() {
        return T::zero();
    }
    let anti = (0..d).fold(T::zero(), |a, i| a + c[(i, d - 1 - i)]);
    anti / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turbulence::{ScreenSynthesizer, TurbulenceSpec};

    fn geom() -> GridGeometry<f64> {
        GridGeometry::new(128, 10.0).unwrap()
    }

    #[test]
    fn zero_screen_gives_identity() {
        let t = transfer_matrix(&PhaseScreen::zeros(geom()), &[-1, 1], 1.0).unwrap();
        let id = DMatrix::<Complex<f64>>::identity(2, 2);
        assert!((t.matrix() - id).norm() < 1e-10);
    }

    #[test]
    fn constant_screen_gives_phase_times_identity() {
        let c: f64 = 0.4;
        let t = transfer_matrix(&PhaseScreen::constant(geom(), c), &[-3, 3], 1.0).unwrap();
        let expected = DMatrix::<Complex<f64>>::identity(2, 2) * Complex::new(c.cos(), c.sin());
        assert!((t.matrix() - expected).norm() < 1e-10);
    }

    #[test]
    fn entries_match_overlap_definition() {
        use crate::modes::{apply_phase, inner_product};
        let g = geom();
        let spec = TurbulenceSpec::new(1.0, 1e-3).unwrap();
        let synth = ScreenSynthesizer::new(g, 2).unwrap();
        let screen = synth.generate(&spec, 4);
        let basis = [-2, 1, 3];
        let t = transfer_matrix(&screen, &basis, 1.0).unwrap();
        for (i, &lo) in basis.iter().enumerate() {
            for (j, &li) in basis.iter().enumerate() {
                let u_out = sample_lg_mode(&OamModeSpec::new(lo, 1.0).unwrap(), &g).unwrap();
                let u_in = sample_lg_mode(&OamModeSpec::new(li, 1.0).unwrap(), &g).unwrap();
                let direct = inner_product(&u_out, &apply_phase(&u_in, &screen).unwrap()).unwrap();
                assert!((t.matrix()[(i, j)] - direct).norm() < 1e-12);
            }
        }
        assert_eq!(t.amplitude(3, -2), Some(t.matrix()[(2, 0)]));
        assert_eq!(t.amplitude(5, -2), None);
    }

    #[test]
    fn columns_are_contractions() {
        let g = geom();
        let synth = ScreenSynthesizer::new(g, 4).unwrap();
        let basis = ModeBasis::new(&oam_range(3), 1.0, &g).unwrap();
        let spec = TurbulenceSpec::new(1.0, 1e-2).unwrap();
        for seed in 0..10 {
            let t = basis.transfer_matrix(&synth.generate(&spec, seed)).unwrap();
            for j in 0..7 {
                assert!(t.column_power(j) <= 1.0 + 1e-8);
            }
            let sv = t.matrix().clone().singular_values();
            assert!(sv.iter().all(|&s| s <= 1.0 + 1e-8));
        }
    }

    #[test]
    fn scaled_matches_materialized_screen() {
        let g = geom();
        let synth = ScreenSynthesizer::new(g, 2).unwrap();
        let unit = synth.unit_screen(9);
        let basis = ModeBasis::new(&[-1, 1], 1.0, &g).unwrap();
        let a = basis.transfer_matrix_scaled(&unit, 0.3).unwrap();
        let b = basis.transfer_matrix(&unit.scaled(0.3)).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-14);
    }

    #[test]
    fn repeated_basis_rejected() {
        assert!(transfer_matrix(&PhaseScreen::zeros(geom()), &[1, 1], 1.0).is_err());
    }

    #[test]
    fn spiral_spectrum_normalizes() {
        let s = SpiralSpectrum::<f64>::flat(3).unwrap();
        let total: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let custom = SpiralSpectrum::new(
            1,
            vec![
                Complex::new(1.0, 0.0),
                Complex::new(0.0, 2.0),
                Complex::new(3.0, 0.0),
            ],
        )
        .unwrap();
        let total: f64 = custom.coefficients().iter().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(SpiralSpectrum::<f64>::new(1, vec![Complex::new(0.0, 0.0); 3]).is_err());
        assert!(SpiralSpectrum::<f64>::new(1, vec![Complex::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn zero_screens_give_anti_diagonal() {
        let g = geom();
        let z = PhaseScreen::zeros(g);
        let c = coincidence_matrix(&z, &z, 3, &SpiralSpectrum::flat(3).unwrap(), 1.0).unwrap();
        for a in 0..7 {
            for b in 0..7 {
                if a + b == 6 {
                    assert!((c[(a, b)] - 1.0 / 7.0).abs() < 1e-10);
                } else {
                    assert!(c[(a, b)] < 1e-20, "({a},{b}) = {}", c[(a, b)]);
                }
            }
        }
        assert!((anti_diagonal_fraction(&c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_term_spectrum_lights_one_cell() {
        let g = geom();
        let z = PhaseScreen::zeros(g);
        let c = coincidence_matrix(&z, &z, 2, &SpiralSpectrum::single(1, 2).unwrap(), 1.0).unwrap();
        // rows ell_A = -2..2, columns ell_B = -2..2; (1, -1) -> (3, 1)
        for a in 0..5 {
            for b in 0..5 {
                if (a, b) == (3, 1) {
                    assert!((c[(a, b)] - 1.0).abs() < 1e-10);
                } else {
                    assert!(c[(a, b)] < 1e-20);
                }
            }
        }
    }

    #[test]
    fn range_mismatch_rejected() {
        let z = PhaseScreen::zeros(geom());
        assert!(coincidence_matrix(&z, &z, 2, &SpiralSpectrum::flat(3).unwrap(), 1.0).is_err());
    }
}
