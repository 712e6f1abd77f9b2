//! Link budget: Fried parameter, scintillation strength and the
//! concurrence decay distance.

use crate::error::{Error, Result};
use crate::scalar::Real;

const FRIED_COEFFICIENT: f64 = 0.185;
const DECAY_COEFFICIENT: f64 = 0.06;

fn positive<T: Real>(name: &'static str, v: T) -> Result<T> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(name, v.as_f64(), "(0, inf)"))
    }
}

/// Plane-wave Fried parameter `r0 = 0.185 (lambda^2 / (cn2 L))^(3/5)`.
pub fn fried_parameter<T: Real>(wavelength: T, cn2: T, length: T) -> Result<T> {
    let wavelength = positive("wavelength", wavelength)?;
    let cn2_path = positive("cn2", cn2)? * positive("length", length)?;
    Ok(fried_parameter_path(wavelength, cn2_path))
}

/// Fried parameter from the path-integrated strength `cn2 * L`.
pub fn fried_parameter_path<T: Real>(wavelength: T, cn2_path: T) -> T {
    T::of(FRIED_COEFFICIENT) * (wavelength * wavelength / cn2_path).powf(T::of(0.6))
}

/// Dimensionless scintillation strength `W = w0 / r0`.
pub fn scintillation_strength<T: Real>(w0: T, r0: T) -> Result<T> {
    let w0 = positive("w0", w0)?;
    if !r0.is_finite() && r0 > T::zero() {
        return Ok(T::zero());
    }
    Ok(w0 / positive("r0", r0)?)
}

/// Path-integrated strength `cn2 * L = lambda^2 (0.185 W / w0)^(5/3)` that
/// produces scintillation strength `w`. `w = 0` maps to zero turbulence.
pub fn cn2l_for_w<T: Real>(w: T, w0: T, wavelength: T) -> Result<T> {
    if !(w >= T::zero()) || !w.is_finite() {
        return Err(Error::domain("W", w.as_f64(), "[0, inf)"));
    }
    let w0 = positive("w0", w0)?;
    let wavelength = positive("wavelength", wavelength)?;
    if w == T::zero() {
        return Ok(T::zero());
    }
    Ok(wavelength * wavelength * (T::of(FRIED_COEFFICIENT) * w / w0).powf(T::of(5.0 / 3.0)))
}

/// Rayleigh range `pi w0^2 / lambda`.
pub fn rayleigh_range<T: Real>(w0: T, wavelength: T) -> T {
    T::pi() * w0 * w0 / wavelength
}

/// Concurrence decay distance with its weak-scintillation validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayDistance<T> {
    pub distance: T,
    pub rayleigh_range: T,
    /// The estimate exceeds the Rayleigh range, where a single-screen
    /// weak-scintillation model stops being reliable.
    pub beyond_rayleigh_range: bool,
}

/// `L_dec = 0.06 lambda^2 ell^(5/6) / (w0^(5/3) cn2)`.
pub fn decay_distance<T: Real>(wavelength: T, ell: u32, w0: T, cn2: T) -> Result<DecayDistance<T>> {
    let wavelength = positive("wavelength", wavelength)?;
    let w0 = positive("w0", w0)?;
    let cn2 = positive("cn2", cn2)?;
    if ell == 0 {
        return Err(Error::domain("ell", 0.0, "ell >= 1"));
    }
    let distance = T::of(DECAY_COEFFICIENT)
        * wavelength
        * wavelength
        * T::of(ell as f64).powf(T::of(5.0 / 6.0))
        / (w0.powf(T::of(5.0 / 3.0)) * cn2);
    let rayleigh = rayleigh_range(w0, wavelength);
    Ok(DecayDistance {
        distance,
        rayleigh_range: rayleigh,
        beyond_rayleigh_range: distance > rayleigh,
    })
}

/// Smallest OAM index whose decay distance reaches `target` metres.
pub fn minimal_ell_for_distance<T: Real>(wavelength: T, w0: T, cn2: T, target: T) -> Result<u32> {
    let target = positive("target", target)?;
    let base = decay_distance(wavelength, 1, w0, cn2)?.distance;
    // ell^(5/6) >= target / base; the estimate is refined with exact evaluations.
    let estimate = (target / base).powf(T::of(1.2)).floor().as_f64().max(1.0) as u32;
    let mut ell = estimate.saturating_sub(1).max(1);
    while decay_distance(wavelength, ell, w0, cn2)?.distance < target {
        ell += 1;
    }
    while ell > 1 && decay_distance(wavelength, ell - 1, w0, cn2)?.distance >= target {
        ell -= 1;
    }
    Ok(ell)
}

/// Physical link parameters with derived `r0` and `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub wavelength: T,
    pub cn2: T,
    pub length: T,
    pub w0: T,
    pub r0: T,
    pub w: T,
}

impl<T: Real> LinkBudget<T> {
    pub fn new(wavelength: T, cn2: T, length: T, w0: T) -> Result<Self> {
        let r0 = fried_parameter(wavelength, cn2, length)?;
        let w = scintillation_strength(w0, r0)?;
        Ok(Self {
            wavelength,
            cn2,
            length,
            w0,
            r0,
            w,
        })
    }

    pub fn decay_distance(&self, ell: u32) -> Result<DecayDistance<T>> {
        decay_distance(self.wavelength, ell, self.w0, self.cn2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 710e-9;
    const CN2: f64 = 5e-16;
    const LENGTH: f64 = 144e3;
    const W0: f64 = 50e-3;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fried_parameter_examples() {
        let r0 = fried_parameter(LAMBDA, CN2, LENGTH).unwrap();
        // 0.185 * (5.041e-13 / 7.2e-11)^0.6 = 9.42502e-3 (high-precision evaluation)
        assert!(rel(r0, 9.425019317e-3) < 1e-9);
        assert!(rel(r0, 9.42e-3) < 1e-3);

        let halved = fried_parameter(LAMBDA, CN2 * 2f64.powf(5.0 / 3.0), LENGTH).unwrap();
        assert!(rel(halved, r0 / 2.0) < 1e-12);
        let doubled = fried_parameter(2.0 * LAMBDA, CN2, LENGTH).unwrap();
        assert!(rel(doubled, r0 * 2f64.powf(1.2)) < 1e-12);
    }

    #[test]
    fn scintillation_examples() {
        let w = scintillation_strength(W0, 9.42e-3).unwrap();
        assert!((w - 5.31).abs() < 5e-3);
        assert_eq!(scintillation_strength(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(scintillation_strength(0.3, f64::INFINITY).unwrap(), 0.0);
        assert!(scintillation_strength(0.0, 1.0).is_err());
        assert!(scintillation_strength(1.0, -1.0).is_err());
    }

    #[test]
    fn cn2l_inverts_w() {
        assert_eq!(cn2l_for_w(0.0, W0, LAMBDA).unwrap(), 0.0);
        let cn2l = cn2l_for_w(5.31, W0, LAMBDA).unwrap();
        assert!(rel(cn2l, 7.2e-11) < 0.01);
        for &c in &[1e-16, 3e-13, 7.2e-11, 1e-9] {
            let r0 = fried_parameter_path(LAMBDA, c);
            let w = scintillation_strength(W0, r0).unwrap();
            let back = cn2l_for_w(w, W0, LAMBDA).unwrap();
            assert!(rel(back, c) < 1e-10);
        }
        assert!(cn2l_for_w(-1.0, W0, LAMBDA).is_err());
    }

    #[test]
    fn decay_distance_examples() {
        let d = decay_distance(LAMBDA, 1, W0, CN2).unwrap();
        // 0.06 * 5.041e-13 / (0.05^(5/3) * 5e-16) = 8914.177 m
        assert!(rel(d.distance, 8914.1773366) < 1e-9);
        assert!(rel(d.distance, 8.9e3) < 0.01);
        let d64 = decay_distance(LAMBDA, 64, W0, CN2).unwrap();
        assert!(rel(d64.distance / d.distance, 32.0) < 1e-12);
        assert!(decay_distance(LAMBDA, 0, W0, CN2).is_err());
        assert!(decay_distance(LAMBDA, 1, 0.0, CN2).is_err());
    }

    #[test]
    fn minimal_ell_matches_brute_force() {
        // Oracle: linear scan of the decay formula.
        let base = 0.06 * LAMBDA * LAMBDA / (W0.powf(5.0 / 3.0) * CN2);
        let oracle = (1u32..)
            .find(|&l| base * (l as f64).powf(5.0 / 6.0) >= LENGTH)
            .unwrap();
        assert_eq!(oracle, 29);
        assert_eq!(
            minimal_ell_for_distance(LAMBDA, W0, CN2, LENGTH).unwrap(),
            oracle
        );
        assert!(oracle > 25);
        assert_eq!(minimal_ell_for_distance(LAMBDA, W0, CN2, 1.0).unwrap(), 1);
    }

    #[test]
    fn rayleigh_flag() {
        let d = decay_distance(LAMBDA, 1, W0, CN2).unwrap();
        // pi * 0.05^2 / 710e-9 = 11.06 km
        assert!(rel(d.rayleigh_range, 11062.0) < 1e-3);
        assert!(!d.beyond_rayleigh_range);
        assert!(
            decay_distance(LAMBDA, 2, W0, CN2)
                .unwrap()
                .beyond_rayleigh_range
        );
    }

    #[test]
    fn monotone_in_each_argument() {
        let grid = [0.5, 0.9, 1.0, 1.7, 3.0];
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert!(
                fried_parameter(a * LAMBDA, CN2, LENGTH).unwrap()
                    < fried_parameter(b * LAMBDA, CN2, LENGTH).unwrap()
            );
            assert!(
                fried_parameter(LAMBDA, a * CN2, LENGTH).unwrap()
                    > fried_parameter(LAMBDA, b * CN2, LENGTH).unwrap()
            );
            assert!(
                fried_parameter(LAMBDA, CN2, a * LENGTH).unwrap()
                    > fried_parameter(LAMBDA, CN2, b * LENGTH).unwrap()
            );
            assert!(
                scintillation_strength(a * W0, 0.01).unwrap()
                    < scintillation_strength(b * W0, 0.01).unwrap()
            );
            assert!(
                scintillation_strength(W0, a * 0.01).unwrap()
                    > scintillation_strength(W0, b * 0.01).unwrap()
            );
            assert!(cn2l_for_w(a, W0, LAMBDA).unwrap() < cn2l_for_w(b, W0, LAMBDA).unwrap());
            let dd = |l: f64, w0: f64, c: f64| {
                decay_distance(l * LAMBDA, 1, w0 * W0, c * CN2)
                    .unwrap()
                    .distance
            };
            assert!(dd(a, 1.0, 1.0) < dd(b, 1.0, 1.0));
            assert!(dd(1.0, a, 1.0) > dd(1.0, b, 1.0));
            assert!(dd(1.0, 1.0, a) > dd(1.0, 1.0, b));
        }
        for l in 1..40 {
            assert!(
                decay_distance(LAMBDA, l, W0, CN2).unwrap().distance
                    < decay_distance(LAMBDA, l + 1, W0, CN2).unwrap().distance
            );
        }
    }

    #[test]
    fn link_budget_is_consistent() {
        let lb = LinkBudget::new(LAMBDA, CN2, LENGTH, W0).unwrap();
        assert!(rel(lb.r0, 0.185 * (LAMBDA * LAMBDA / (CN2 * LENGTH)).powf(0.6)) < 1e-12);
        assert!(rel(lb.w, W0 / lb.r0) < 1e-12);
        assert!((lb.w - 5.305).abs() < 1e-3);
    }
}
