//! Helical (Laguerre-Gaussian, p = 0) modes sampled on a grid.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::turbulence::{GridGeometry, PhaseScreen};

/// OAM index and waist radius of a p = 0 Laguerre-Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OamModeSpec<T> {
    pub ell: i32,
    pub w0: T,
}

impl<T: Real> OamModeSpec<T> {
    pub fn new(ell: i32, w0: T) -> Result<Self> {
        if !(w0 > T::zero()) || !w0.is_finite() {
            return Err(Error::domain("w0", w0.as_f64(), "(0, inf)"));
        }
        Ok(Self { ell, w0 })
    }

    /// Radius of peak intensity, `w0 sqrt(|ell| / 2)`.
    pub fn ring_radius(&self) -> T {
        self.w0 * (T::of(self.ell.unsigned_abs() as f64) / T::of(2.0)).sqrt()
    }
}

/// Complex transverse field sampled on a [`GridGeometry`].
///
/// Values are row-major (`values[iy * n + ix]`) and carry units of 1/m so
/// that a normalized field has `sum |u|^2 dx^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalField<T> {
    geometry: GridGeometry<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> OpticalField<T> {
    pub fn zeros(geometry: GridGeometry<T>) -> Self {
        Self {
            geometry,
            values: vec![Complex::new(T::zero(), T::zero()); geometry.len()],
        }
    }

    pub fn from_values(geometry: GridGeometry<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "expected {} samples, got {}",
                geometry.len(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Numerical("field contains non-finite values".into()));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &GridGeometry<T> {
        &self.geometry
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex<T> {
        self.values[iy * self.geometry.n() + ix]
    }

    /// `sqrt(sum |u|^2 dx^2)`.
    pub fn norm(&self) -> T {
        let dx = self.geometry.cell_size();
        let s = self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr());
        (s * dx * dx).sqrt()
    }

    pub fn intensity(&self) -> Vec<T> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }
}

/// Waist-plane LG(p=0, ell) mode `(sqrt2 r / w0)^|ell| exp(-r^2/w0^2) exp(i ell phi)`,
/// normalized on the grid.
///
/// The azimuthal factor is built as a power of `(x +/- i y)`, so the modes
/// for `ell` and `-ell` are exact complex conjugates of each other.
pub fn sample_lg_mode<T: Real>(
    mode: &OamModeSpec<T>,
    geometry: &GridGeometry<T>,
) -> Result<OpticalField<T>> {
    if mode.ring_radius() > geometry.window() / T::of(4.0) {
        return Err(Error::Config(format!(
            "OAM mode ell = {} (ring radius {}) is clipped by a window of {}",
            mode.ell,
            mode.ring_radius(),
            geometry.window()
        )));
    }
    let n = geometry.n();
    let order = mode.ell.unsigned_abs();
    let sign = if mode.ell < 0 { -T::one() } else { T::one() };
    let scale = T::SQRT_2() / mode.w0;
    let coords: Vec<T> = (0..n).map(|i| geometry.coordinate(i)).collect();

    let mut values = Vec::with_capacity(n * n);
    for &y in &coords {
        for &x in &coords {
            let z = Complex::new(x * scale, sign * y * scale);
            let mut p = Complex::new(T::one(), T::zero());
            for _ in 0..order {
                p *= z;
            }
            let r2 = (x * x + y * y) / (mode.w0 * mode.w0);
            values.push(p * (-r2).exp());
        }
    }
    let field = OpticalField {
        geometry: *geometry,
        values,
    };
    let norm = field.norm();
    Ok(field.scaled(Complex::new(T::one() / norm, T::zero())))
}

/// Discrete overlap `sum conj(a) b dx^2`.
pub fn inner_product<T: Real>(a: &OpticalField<T>, b: &OpticalField<T>) -> Result<Complex<T>> {
    a.geometry.ensure_same(&b.geometry, "inner_product")?;
    let dx = a.geometry.cell_size();
    let s = a
        .values
        .iter()
        .zip(&b.values)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (u, v)| {
            acc + u.conj() * v
        });
    Ok(s * (dx * dx))
}

/// Pointwise multiplication by `exp(i theta)`.
pub fn apply_phase<T: Real>(
    field: &OpticalField<T>,
    screen: &PhaseScreen<T>,
) -> Result<OpticalField<T>> {
    field
        .geometry
        .ensure_same(screen.geometry(), "apply_phase")?;
    let values = field
        .values
        .iter()
        .zip(screen.values())
        .map(|(&u, &theta)| {
            let (s, c) = theta.sin_cos();
            u * Complex::new(c, s)
        })
        .collect();
    Ok(OpticalField {
        geometry: field.geometry,
        values,
    })
}
