//! Kolmogorov phase screens synthesized in the Fourier domain.
//!
//! A screen is the real part of an inverse FFT of delta-correlated complex
//! Gaussian noise shaped by the square root of the phase power spectrum,
//! plus a set of subharmonic components that restore the large-scale power
//! the periodic FFT grid cannot represent.
//!
//! # Normalization
//!
//! For a Fourier cell centred on `k` with side `dk` the phase variance is
//!
//! ```text
//! var(k) = 2 pi k0^2 * Phi_n(|k|; C_n^2 L) * dk^2
//! ```
//!
//! where `Phi_n(k; c) = 0.033 c k^(-11/3)`. Only the path-integrated product
//! `C_n^2 L` enters. The coefficients are fed to an *unnormalized* inverse FFT
//! (`sum_k c_k exp(+i k.x)`). Relative to the continuum expression with
//! prefactor `k0 sqrt(2 pi L) / dk`, this is the `(1/n^2)`-normalized inverse
//! transform multiplied by `dk^2 n^2`; that factor is the only convention
//! constant in the module.
//!
//! The noise `chi` is full complex (not Hermitian-symmetrized) with
//! `E|chi|^2 = 1`; taking the real part halves the variance, which is
//! restored by a factor `sqrt(2)`.
//!
//! Cells adjacent to DC and all subharmonic cells use second-moment matched
//! variances `var = 2 pi k0^2 0.033 C_n^2 L * int_cell |k|^(-5/3) d^2k / |k_c|^2`,
//! which reproduces the small-separation (tilt) part of the structure
//! function exactly for each ring of eight cells. The DC cell itself is
//! zero and the grid mean is subtracted, so screens carry no piston.

use std::sync::Arc;

use nalgebra::{Complex, RealField};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{Real, abs};

/// Coefficient of the Kolmogorov refractive-index spectrum.
pub const KOLMOGOROV_COEFFICIENT: f64 = 0.033;

/// Smallest grid on which screen statistics are meaningful.
pub const MIN_SCREEN_GRID: usize = 16;

pub const DEFAULT_SUBHARMONIC_LEVELS: usize = 8;

/// Quadrature points per side for the cell moment integrals.
const CELL_QUADRATURE: usize = 16;

/// Square sampling grid shared by screens and fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry<T> {
    n: usize,
    window: T,
}

impl<T: Real> GridGeometry<T> {
    /// `n` samples per side (a power of two, at least 2) over a `window` metres wide.
    pub fn new(n: usize, window: T) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 2, got {n}"
            )));
        }
        if !(window > T::zero()) || !window.is_finite() {
            return Err(Error::Config(format!(
                "grid window must be positive, got {window}"
            )));
        }
        Ok(Self { n, window })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> T {
        self.window
    }

    /// Sample spacing `window / n`.
    pub fn cell_size(&self) -> T {
        self.window / T::of_usize(self.n)
    }

    /// Frequency-domain sampling interval `2 pi / window` in rad/m.
    pub fn freq_step(&self) -> T {
        T::two_pi() / self.window
    }

    /// Centred coordinate of sample `i`; the origin sits between the four
    /// central samples.
    pub fn coordinate(&self, i: usize) -> T {
        (T::of_usize(i) - T::of_usize(self.n / 2) + T::of(0.5)) * self.cell_size()
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Always false: a valid grid has at least `MIN_SCREEN_GRID^2` samples.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub(crate) fn ensure_same(&self, other: &Self, what: &str) -> Result<()> {
        if self.n != other.n || self.window != other.window {
            return Err(Error::GeometryMismatch(format!(
                "{what}: {}x{} over {} vs {}x{} over {}",
                self.n, self.n, self.window, other.n, other.n, other.window
            )));
        }
        Ok(())
    }
}

/// Optical wavelength and path-integrated turbulence strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceSpec<T> {
    wavelength: T,
    cn2_path: T,
}

impl<T: Real> TurbulenceSpec<T> {
    /// `cn2_path` is `C_n^2 * L` in m^(1/3).
    pub fn new(wavelength: T, cn2_path: T) -> Result<Self> {
        if !(wavelength > T::zero()) || !wavelength.is_finite() {
            return Err(Error::domain("wavelength", wavelength.as_f64(), "(0, inf)"));
        }
        if !(cn2_path >= T::zero()) || !cn2_path.is_finite() {
            return Err(Error::domain("cn2_path", cn2_path.as_f64(), "[0, inf)"));
        }
        Ok(Self {
            wavelength,
            cn2_path,
        })
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    pub fn cn2_path(&self) -> T {
        self.cn2_path
    }

    pub fn wavenumber(&self) -> T {
        T::two_pi() / self.wavelength
    }

    /// Factor mapping a unit screen (`k0^2 C_n^2 L = 1`) onto this spec.
    pub fn screen_scale(&self) -> T {
        self.wavenumber() * self.cn2_path.sqrt()
    }
}

/// Kolmogorov refractive-index power spectral density `0.033 cn2 k^(-11/3)`.
///
/// The `k = 0` singularity is mapped to zero (piston is discarded).
pub fn kolmogorov_psd<T: Real>(k_mag: T, cn2: T) -> T {
    if k_mag <= T::zero() {
        return T::zero();
    }
    T::of(KOLMOGOROV_COEFFICIENT) * cn2 * k_mag.powf(T::of(-11.0 / 3.0))
}

/// Turbulence-induced phase on a grid, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen<T> {
    geometry: GridGeometry<T>,
    values: Vec<T>,
}

impl<T: Real> PhaseScreen<T> {
    pub fn zeros(geometry: GridGeometry<T>) -> Self {
        Self {
            geometry,
            values: vec![T::zero(); geometry.len()],
        }
    }

    pub fn constant(geometry: GridGeometry<T>, value: T) -> Self {
        Self {
            geometry,
            values: vec![value; geometry.len()],
        }
    }

    /// Wraps row-major values (`values[iy * n + ix]`).
    pub fn from_values(geometry: GridGeometry<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "expected {} samples, got {}",
                geometry.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "phase screen contains non-finite values".into(),
            ));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &GridGeometry<T> {
        &self.geometry
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> T {
        self.values[iy * self.geometry.n + ix]
    }

    pub fn mean(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &v| a + v) / T::of_usize(self.values.len())
    }

    /// Every sample multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-T::one())
    }
}

#[derive(Debug, Clone, Copy)]
struct Subharmonic<T> {
    /// Frequency offset in units of the level's cell, each in {-1, 0, 1}.
    i: i32,
    j: i32,
    level: usize,
    amplitude: T,
}

/// Reusable screen generator for one grid geometry.
///
/// Holds the FFT plan and the per-cell amplitudes so that generating many
/// screens costs one random draw and one 2-D inverse FFT each.
pub struct ScreenSynthesizer<T: Real> {
    geometry: GridGeometry<T>,
    subharmonic_levels: usize,
    /// Standard deviation of each FFT cell for a unit screen, row-major over
    /// (ky index, kx index) in FFT order.
    amplitudes: Vec<T>,
    subharmonics: Vec<Subharmonic<T>>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> ScreenSynthesizer<T> {
    pub fn new(geometry: GridGeometry<T>, subharmonic_levels: usize) -> Result<Self> {
        let n = geometry.n();
        if n < MIN_SCREEN_GRID {
            return Err(Error::Config(format!(
                "phase screens need n >= {MIN_SCREEN_GRID}, got {n}"
            )));
        }
        let dk = geometry.freq_step();
        let two_pi = T::two_pi();
        let mut amplitudes = vec![T::zero(); n * n];
        for row in 0..n {
            let my = fft_index(row, n);
            for col in 0..n {
                let mx = fft_index(col, n);
                let var = if mx == 0 && my == 0 {
                    T::zero()
                } else if mx.abs() <= 1 && my.abs() <= 1 {
                    matched_cell_variance(mx, my, dk)
                } else {
                    let k = (T::of(mx as f64) * dk).hypot(T::of(my as f64) * dk);
                    two_pi * kolmogorov_psd(k, T::one()) * dk * dk
                };
                amplitudes[row * n + col] = var.sqrt();
            }
        }

        let mut subharmonics = Vec::with_capacity(8 * subharmonic_levels);
        for level in 1..=subharmonic_levels {
            let dkp = dk / T::of(3f64.powi(level as i32));
            for j in -1..=1 {
                for i in -1..=1 {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let amplitude = matched_cell_variance(i, j, dkp).sqrt();
                    subharmonics.push(Subharmonic {
                        i,
                        j,
                        level,
                        amplitude,
                    });
                }
            }
        }

        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self {
            geometry,
            subharmonic_levels,
            amplitudes,
            subharmonics,
            fft,
        })
    }

    pub fn geometry(&self) -> &GridGeometry<T> {
        &self.geometry
    }

    pub fn subharmonic_levels(&self) -> usize {
        self.subharmonic_levels
    }

    /// Screen for `k0^2 C_n^2 L = 1`; scale by [`TurbulenceSpec::screen_scale`].
    pub fn unit_screen(&self, seed: u64) -> PhaseScreen<T> {
        let n = self.geometry.n();
        let mut rng = rng::stream(seed);
        let mut spectrum: Vec<Complex<T>> = self
            .amplitudes
            .iter()
            .map(|&a| complex_normal(&mut rng) * a)
            .collect();

        inverse_fft_2d(self.fft.as_ref(), &mut spectrum, n);

        let sqrt2 = T::SQRT_2();
        let mut values: Vec<T> = spectrum.iter().map(|c| c.re * sqrt2).collect();

        if !self.subharmonics.is_empty() {
            self.add_subharmonics(&mut values, &mut rng);
        }

        let mean = values.iter().fold(T::zero(), |a, &v| a + v) / T::of_usize(values.len());
        for v in &mut values {
            *v -= mean;
        }
        PhaseScreen {
            geometry: self.geometry,
            values,
        }
    }

    /// Screen for `spec`, a deterministic function of `(spec, geometry, seed)`.
    pub fn generate(&self, spec: &TurbulenceSpec<T>, seed: u64) -> PhaseScreen<T> {
        let scale = spec.screen_scale();
        if scale == T::zero() {
            return PhaseScreen::zeros(self.geometry);
        }
        self.unit_screen(seed).scaled(scale)
    }

    fn add_subharmonics(&self, values: &mut [T], rng: &mut rng::StreamRng) {
        let n = self.geometry.n();
        let dx = self.geometry.cell_size();
        let dk = self.geometry.freq_step();
        let sqrt2 = T::SQRT_2();
        for level in 1..=self.subharmonic_levels {
            let dkp = dk / T::of(3f64.powi(level as i32));
            // exp(i m dkp x) for m = -1, 0, 1 along one axis.
            let phasors: Vec<[Complex<T>; 3]> = (0..n)
                .map(|p| {
                    let x = T::of_usize(p) * dx;
                    let (s, c) = (dkp * x).sin_cos();
                    [
                        Complex::new(c, -s),
                        Complex::new(T::one(), T::zero()),
                        Complex::new(c, s),
                    ]
                })
                .collect();
            let coeffs: Vec<(usize, usize, Complex<T>)> = self
                .subharmonics
                .iter()
                .filter(|s| s.level == level)
                .map(|s| {
                    let c = complex_normal(rng) * (s.amplitude * sqrt2);
                    ((s.i + 1) as usize, (s.j + 1) as usize, c)
                })
                .collect();
            for (row, py) in phasors.iter().enumerate() {
                for (col, px) in phasors.iter().enumerate() {
                    let mut acc = T::zero();
                    for &(ix, iy, c) in &coeffs {
                        acc += (c * px[ix] * py[iy]).re;
                    }
                    values[row * n + col] += acc;
                }
            }
        }
    }
}

/// Convenience wrapper building a synthesizer with the default subharmonic
/// depth for a single screen.
pub fn generate_screen<T: Real>(
    spec: &TurbulenceSpec<T>,
    geometry: &GridGeometry<T>,
    seed: u64,
) -> Result<PhaseScreen<T>> {
    let synth = ScreenSynthesizer::new(*geometry, DEFAULT_SUBHARMONIC_LEVELS)?;
    Ok(synth.generate(spec, seed))
}

/// Ensemble- and space-averaged phase structure function
/// `D(r) = <[theta(x + r) - theta(x)]^2>` along both grid axes.
///
/// Separations must be positive multiples of the sample spacing smaller than
/// the window. Pairs are taken without wrap-around.
pub fn structure_function<T: Real>(
    screens: &[PhaseScreen<T>],
    separations: &[T],
) -> Result<Vec<(T, T)>> {
    if screens.len() < 2 {
        return Err(Error::Config(format!(
            "structure function needs at least 2 screens, got {}",
            screens.len()
        )));
    }
    let geometry = *screens[0].geometry();
    for s in &screens[1..] {
        s.geometry().ensure_same(&geometry, "structure_function")?;
    }
    let n = geometry.n();
    let dx = geometry.cell_size();

    let mut out = Vec::with_capacity(separations.len());
    for &r in separations {
        let steps = r / dx;
        let m = steps.round();
        if !(m >= T::one()) || abs(steps - m) > T::of(1e-9) * RealField::max(steps, T::one()) {
            return Err(Error::Config(format!(
                "separation {r} is not a positive multiple of the cell size {dx}"
            )));
        }
        let m = m.as_f64() as usize;
        if m >= n {
            return Err(Error::Config(format!("separation {r} exceeds the window")));
        }
        let mut total = T::zero();
        for screen in screens {
            let v = screen.values();
            let mut acc = T::zero();
            for row in 0..n {
                for col in 0..n - m {
                    let dxv = v[row * n + col + m] - v[row * n + col];
                    acc += dxv * dxv;
                }
            }
            for row in 0..n - m {
                for col in 0..n {
                    let dyv = v[(row + m) * n + col] - v[row * n + col];
                    acc += dyv * dyv;
                }
            }
            total += acc / T::of_usize(2 * n * (n - m));
        }
        out.push((r, total / T::of_usize(screens.len())));
    }
    Ok(out)
}

/// Signed frequency index of FFT bin `i` on an `n`-point grid.
fn fft_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Second-moment matched variance of the unit screen for the cell centred
/// at `(i, j) * d` with side `d`.
fn matched_cell_variance<T: Real>(i: impl Into<i64>, j: impl Into<i64>, d: T) -> T {
    let (i, j) = (i.into(), j.into());
    let cx = T::of(i as f64) * d;
    let cy = T::of(j as f64) * d;
    let q = CELL_QUADRATURE;
    let h = d / T::of_usize(q);
    let mut moment = T::zero();
    for a in 0..q {
        let kx = cx - d * T::of(0.5) + h * (T::of_usize(a) + T::of(0.5));
        for b in 0..q {
            let ky = cy - d * T::of(0.5) + h * (T::of_usize(b) + T::of(0.5));
            let k2 = kx * kx + ky * ky;
            moment += k2.powf(T::of(-5.0 / 6.0));
        }
    }
    moment *= h * h;
    T::two_pi() * T::of(KOLMOGOROV_COEFFICIENT) * moment / (cx * cx + cy * cy)
}

/// Complex Gaussian with independent N(0, 1/2) parts, so `E|z|^2 = 1`.
fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::of(re * s), T::of(im * s))
}

/// In-place unnormalized 2-D inverse FFT of a row-major `n x n` buffer.
fn inverse_fft_2d<T: Real>(fft: &dyn Fft<T>, data: &mut [Complex<T>], n: usize) {
    fft.process(data);
    transpose_square(data, n);
    fft.process(data);
    transpose_square(data, n);
}

fn transpose_square<T: Copy>(data: &mut [T], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}
