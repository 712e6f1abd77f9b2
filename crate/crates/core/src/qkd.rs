//! OAM mutually unbiased bases, QBER and asymptotic key rates for E91 and
//! the six-state protocol.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, Matrix2, RealField, Vector2};
use serde::{Deserialize, Serialize};

use crate::bipartite::ideal_bell_state;
use crate::density::{DensityMatrix, kron2};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn pauli_x<T: Real>() -> Matrix2<Complex<T>> {
    let (o, z) = (
        Complex::new(T::one(), T::zero()),
        Complex::new(T::zero(), T::zero()),
    );
    Matrix2::new(z, o, o, z)
}

pub fn pauli_y<T: Real>() -> Matrix2<Complex<T>> {
    let (i, z) = (
        Complex::new(T::zero(), T::one()),
        Complex::new(T::zero(), T::zero()),
    );
    Matrix2::new(z, -i, i, z)
}

pub fn pauli_z<T: Real>() -> Matrix2<Complex<T>> {
    let (o, z) = (
        Complex::new(T::one(), T::zero()),
        Complex::new(T::zero(), T::zero()),
    );
    Matrix2::new(o, z, z, -o)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MubLabel {
    M1,
    M2,
    M3,
}

impl MubLabel {
    pub const ALL: [MubLabel; 3] = [MubLabel::M1, MubLabel::M2, MubLabel::M3];

    /// The two states of this basis over `{|-l>, |+l>}`.
    ///
    /// M1 is the OAM basis, M2 = `(|-l> +/- |+l>)/sqrt2` and
    /// M3 = `(|-l> +/- i|+l>)/sqrt2`.
    pub fn vectors<T: Real>(self) -> [Vector2<Complex<T>>; 2] {
        let z = T::zero();
        let o = T::one();
        let h = T::FRAC_1_SQRT_2();
        let c = Complex::new;
        match self {
            MubLabel::M1 => [
                Vector2::new(c(o, z), c(z, z)),
                Vector2::new(c(z, z), c(o, z)),
            ],
            MubLabel::M2 => [
                Vector2::new(c(h, z), c(h, z)),
                Vector2::new(c(h, z), c(-h, z)),
            ],
            MubLabel::M3 => [
                Vector2::new(c(h, z), c(z, h)),
                Vector2::new(c(h, z), c(z, -h)),
            ],
        }
    }

    /// Pauli operator whose eigenbasis this is.
    pub fn observable<T: Real>(self) -> Matrix2<Complex<T>> {
        match self {
            MubLabel::M1 => pauli_z(),
            MubLabel::M2 => pauli_x(),
            MubLabel::M3 => pauli_y(),
        }
    }
}

impl fmt::Display for MubLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MubLabel::M1 => "M1",
            MubLabel::M2 => "M2",
            MubLabel::M3 => "M3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mub<T: Real> {
    pub label: MubLabel,
    pub vectors: [Vector2<Complex<T>>; 2],
}

pub fn build_mubs<T: Real>() -> [Mub<T>; 3] {
    MubLabel::ALL.map(|label| Mub {
        label,
        vectors: label.vectors(),
    })
}

/// QKD protocol variant. The E91 variants differ in their pair of bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// E91 with {M1, M3}.
    E91a,
    /// E91 with {M1, M2}.
    E91b,
    /// E91 with {M2, M3}.
    E91c,
    SixState,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::E91a,
        Protocol::E91b,
        Protocol::E91c,
        Protocol::SixState,
    ];

    pub fn bases(self) -> &'static [MubLabel] {
        use MubLabel::*;
        match self {
            Protocol::E91a => &[M1, M3],
            Protocol::E91b => &[M1, M2],
            Protocol::E91c => &[M2, M3],
            Protocol::SixState => &[M1, M2, M3],
        }
    }

    /// Number of bases available to each party.
    pub fn basis_count(self) -> usize {
        self.bases().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::E91a => "e91a",
            Protocol::E91b => "e91b",
            Protocol::E91c => "e91c",
            Protocol::SixState => "six_state",
        }
    }

    /// Key rate for this protocol's family.
    pub fn key_rate<T: Real>(self, q: T) -> Result<T> {
        match self {
            Protocol::SixState => key_rate_six_state(q),
            _ => key_rate_e91(q),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown protocol '{s}' (expected e91a, e91b, e91c or six_state)"
                ))
            })
    }
}

/// Outcome pairs `(k_A, k_B)` that count as errors in basis `b`: those the
/// ideal state never produces. M1 is anti-correlated, M2 and M3 correlated.
pub fn error_pairs(b: MubLabel) -> [(usize, usize); 2] {
    let ideal = ideal_bell_state::<f64>();
    let v = b.vectors::<f64>();
    let mut out = [(0, 0); 2];
    let mut n = 0;
    for ka in 0..2 {
        for kb in 0..2 {
            if ideal.expectation(&kron2(&v[ka], &v[kb])) < 1e-12 {
                out[n] = (ka, kb);
                n += 1;
            }
        }
    }
    debug_assert_eq!(n, 2);
    out
}

/// Joint probability `tr[(|a><a| (x) |b><b|) rho]`.
pub fn joint_probability<T: Real>(
    rho: &DensityMatrix<T>,
    a: &Vector2<Complex<T>>,
    b: &Vector2<Complex<T>>,
) -> T {
    rho.expectation(&kron2(a, b))
}

/// Basis-averaged probability of an outcome disagreeing with the ideal
/// correlation pattern.
pub fn qber<T: Real>(rho: &DensityMatrix<T>, protocol: Protocol) -> T {
    let bases = protocol.bases();
    let mut total = T::zero();
    for &b in bases {
        let v = b.vectors::<T>();
        for (ka, kb) in error_pairs(b) {
            total += joint_probability(rho, &v[ka], &v[kb]);
        }
    }
    let q = total / T::of_usize(bases.len());
    RealField::clamp(q, T::zero(), T::one())
}

/// `x log2 x` with the limit 0 at `x = 0`.
fn xlog2x<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * x.log2()
    }
}

/// `r = 1 + 2(1 - Q) log2(1 - Q) + 2 Q log2 Q`.
pub fn key_rate_e91<T: Real>(q: T) -> Result<T> {
    if !(q >= T::zero() && q <= T::one()) {
        return Err(Error::domain("Q", q.as_f64(), "[0, 1]"));
    }
    let two = T::of(2.0);
    Ok(T::one() + two * xlog2x(T::one() - q) + two * xlog2x(q))
}

/// `r = 1 + (3/2) Q log2(Q/2) + (1 - 3Q/2) log2(1 - 3Q/2)`.
pub fn key_rate_six_state<T: Real>(q: T) -> Result<T> {
    if !(q >= T::zero() && q <= T::of(2.0 / 3.0)) {
        return Err(Error::domain("Q", q.as_f64(), "[0, 2/3]"));
    }
    let a = T::of(1.5) * q;
    let half = q / T::of(2.0);
    // (3/2) Q log2(Q/2) = 3 * (Q/2) log2(Q/2)
    let rest = (T::one() - a).max(T::zero());
    Ok(T::one() + T::of(3.0) * xlog2x(half) + xlog2x(rest))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport<T> {
    pub q: T,
    pub r_min: T,
    pub r_min_clamped: T,
}

impl<T: Real> KeyRateReport<T> {
    pub fn new(protocol: Protocol, q: T) -> Result<Self> {
        let r_min = protocol.key_rate(q)?;
        Ok(Self {
            q,
            r_min,
            r_min_clamped: r_min.max(T::zero()),
        })
    }

    /// QBER and key rate of `rho` under `protocol`.
    pub fn evaluate(rho: &DensityMatrix<T>, protocol: Protocol) -> Result<Self> {
        let mut q = qber(rho, protocol);
        if protocol == Protocol::SixState {
            // physical states satisfy Q <= 2/3; absorb rounding at the boundary
            q = q.min(T::of(2.0 / 3.0));
        }
        Self::new(protocol, q)
    }
}

/// Root of a decreasing rate function on `[lo, hi]` by bisection.
pub fn zero_rate_threshold(
    rate: impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    if rate(lo)? < 0.0 || rate(hi)? > 0.0 {
        return Err(Error::Numerical(
            "rate does not change sign on the bracket".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
