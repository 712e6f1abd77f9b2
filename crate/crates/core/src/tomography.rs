//! Simulated projective coincidence measurements and linear-inversion
//! state reconstruction.
//!
//! Each arm is projected onto the six states of the three mutually unbiased
//! bases, giving 36 joint settings. Reconstruction fits the 16 two-qubit
//! Pauli coefficients by least squares, then projects the result onto the
//! positive semidefinite cone.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix4, RealField, Vector2};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, hermitian_part, kron2, trace};
use crate::error::{Error, Result};
use crate::qkd::{MubLabel, pauli_x, pauli_y, pauli_z};
use crate::rng::{Domain, derive_seed, stream};
use crate::scalar::Real;

/// One of the six single-photon projection states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Projector {
    pub basis: MubLabel,
    /// 0 or 1, the index within the basis.
    pub outcome: usize,
}

impl Projector {
    pub const ALL: [Projector; 6] = [
        Projector::new(MubLabel::M1, 0),
        Projector::new(MubLabel::M1, 1),
        Projector::new(MubLabel::M2, 0),
        Projector::new(MubLabel::M2, 1),
        Projector::new(MubLabel::M3, 0),
        Projector::new(MubLabel::M3, 1),
    ];

    pub const fn new(basis: MubLabel, outcome: usize) -> Self {
        Self { basis, outcome }
    }

    pub fn vector<T: Real>(self) -> Vector2<Complex<T>> {
        self.basis.vectors()[self.outcome]
    }

    /// `-l`, `+l`, `d`, `a`, `r`, `l`: OAM states, then the real and
    /// imaginary superpositions.
    pub fn label(self) -> &'static str {
        const LABELS: [&str; 6] = ["-l", "+l", "d", "a", "r", "l"];
        LABELS[self.index()]
    }

    pub fn index(self) -> usize {
        let b = match self.basis {
            MubLabel::M1 => 0,
            MubLabel::M2 => 1,
            MubLabel::M3 => 2,
        };
        2 * b + self.outcome
    }
}

impl fmt::Display for Projector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Projector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Projector::ALL
            .into_iter()
            .find(|p| p.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown projector label '{s}'")))
    }
}

/// Measured or predicted data for one joint setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyEntry<T> {
    pub a: Projector,
    pub b: Projector,
    pub probability: T,
    pub counts: Option<u64>,
}

/// All 36 joint settings, ordered arm A major.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord<T> {
    entries: Vec<TomographyEntry<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    #[serde(rename = "projA_label")]
    proj_a: String,
    #[serde(rename = "projB_label")]
    proj_b: String,
    probability: f64,
    counts: Option<u64>,
}

impl<T: Real> TomographyRecord<T> {
    /// Accepts the 36 settings in any order; each must appear exactly once.
    pub fn new(entries: Vec<TomographyEntry<T>>) -> Result<Self> {
        let mut slots: Vec<Option<TomographyEntry<T>>> = vec![None; 36];
        for e in entries {
            if !(e.probability >= T::zero() && e.probability <= T::one()) {
                return Err(Error::domain(
                    "probability",
                    e.probability.as_f64(),
                    "[0, 1]",
                ));
            }
            let k = 6 * e.a.index() + e.b.index();
            if slots[k].replace(e).is_some() {
                return Err(Error::Config(format!(
                    "duplicate setting ({}, {})",
                    e.a, e.b
                )));
            }
        }
        let entries: Option<Vec<_>> = slots.into_iter().collect();
        let entries = entries
            .ok_or_else(|| Error::Config("tomography needs all 36 projector pairs".into()))?;
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[TomographyEntry<T>] {
        &self.entries
    }

    pub fn get(&self, a: Projector, b: Projector) -> &TomographyEntry<T> {
        &self.entries[6 * a.index() + b.index()]
    }

    pub fn has_counts(&self) -> bool {
        self.entries.iter().all(|e| e.counts.is_some())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for e in &self.entries {
            w.serialize(CsvRow {
                proj_a: e.a.label().into(),
                proj_b: e.b.label().into(),
                probability: e.probability.as_f64(),
                counts: e.counts,
            })
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let mut entries = Vec::with_capacity(36);
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| csv_error(path, e))?;
            let parse = |s: &str| {
                s.parse::<Projector>().map_err(|e| Error::Parse {
                    path: path.into(),
                    message: e.to_string(),
                })
            };
            entries.push(TomographyEntry {
                a: parse(&row.proj_a)?,
                b: parse(&row.proj_b)?,
                probability: T::of(row.probability),
                counts: row.counts,
            });
        }
        Self::new(entries).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.into(),
        message: e.to_string(),
    }
}

/// Predicted probabilities for every setting; with `shots`, independent
/// Poisson counts with mean `shots * probability`, reproducible from `seed`.
pub fn simulate_measurements<T: Real>(
    rho: &DensityMatrix<T>,
    shots: Option<u64>,
    seed: u64,
) -> TomographyRecord<T> {
    let mut rng = stream(derive_seed(seed, Domain::Counts, &[]));
    let mut entries = Vec::with_capacity(36);
    for a in Projector::ALL {
        for b in Projector::ALL {
            let p = rho
                .expectation(&kron2(&a.vector(), &b.vector()))
                .max(T::zero())
                .min(T::one());
            let counts = shots.map(|n| {
                let mean = n as f64 * p.as_f64();
                if mean > 0.0 {
                    Poisson::new(mean)
                        .map(|d| d.sample(&mut rng) as u64)
                        .unwrap_or(0)
                } else {
                    0
                }
            });
            entries.push(TomographyEntry {
                a,
                b,
                probability: p,
                counts,
            });
        }
    }
    TomographyRecord { entries }
}

fn pauli_basis<T: Real>() -> [Matrix2<Complex<T>>; 4] {
    [Matrix2::identity(), pauli_x(), pauli_y(), pauli_z()]
}

/// Observed relative frequencies. With counts, each of the 9 basis settings
/// is normalized by its own total; settings without any counts are dropped.
fn frequencies<T: Real>(record: &TomographyRecord<T>) -> Vec<(Projector, Projector, T)> {
    if !record.has_counts() {
        return record
            .entries
            .iter()
            .map(|e| (e.a, e.b, e.probability))
            .collect();
    }
    let mut out = Vec::with_capacity(36);
    for ba in MubLabel::ALL {
        for bb in MubLabel::ALL {
            let group: Vec<_> = record
                .entries
                .iter()
                .filter(|e| e.a.basis == ba && e.b.basis == bb)
                .collect();
            let total: u64 = group.iter().map(|e| e.counts.unwrap_or(0)).sum();
            if total == 0 {
                continue;
            }
            for e in group {
                let f = T::of(e.counts.unwrap_or(0) as f64 / total as f64);
                out.push((e.a, e.b, f));
            }
        }
    }
    out
}

/// Least-squares linear inversion followed by projection onto valid states.
pub fn reconstruct<T: Real>(record: &TomographyRecord<T>) -> Result<DensityMatrix<T>> {
    let paulis = pauli_basis::<T>();
    // <psi| sigma |psi> for every projector and Pauli operator
    let expect = |p: Projector, s: &Matrix2<Complex<T>>| {
        let v = p.vector::<T>();
        (v.adjoint() * s * v)[(0, 0)].re
    };
    let data = frequencies(record);
    let quarter = T::of(0.25);
    let design = DMatrix::from_fn(data.len(), 16, |row, col| {
        let (a, b, _) = data[row];
        expect(a, &paulis[col / 4]) * expect(b, &paulis[col % 4]) * quarter
    });
    let rhs = DVector::from_iterator(data.len(), data.iter().map(|d| d.2));

    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.iter().cloned().fold(T::zero(), RealField::max);
    let min = sv.iter().cloned().fold(max, RealField::min);
    if data.len() < 16 || !(min > max * T::of(1e-10)) {
        return Err(Error::Config(format!(
            "tomography design matrix is rank deficient ({} usable settings)",
            data.len()
        )));
    }
    let coeffs = svd
        .solve(&rhs, T::zero())
        .map_err(|e| Error::Numerical(format!("least-squares solve failed: {e}")))?;

    let quarter_c = Complex::new(quarter, T::zero());
    let mut m = Matrix4::<Complex<T>>::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            let (sa, sb) = (&paulis[mu], &paulis[nu]);
            let k = Matrix4::from_fn(|r, c| sa[(r / 2, c / 2)] * sb[(r % 2, c % 2)]);
            m += k * Complex::new(coeffs[4 * mu + nu], T::zero()) * quarter_c;
        }
    }
    project_to_state(&m)
}

/// Hermitizes, clips negative eigenvalues and renormalizes.
pub fn project_to_state<T: Real>(m: &Matrix4<Complex<T>>) -> Result<DensityMatrix<T>> {
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    let clipped = eig
        .eigenvalues
        .map(|l| Complex::new(l.max(T::zero()), T::zero()));
    let v = &eig.eigenvectors;
    let rebuilt = v * Matrix4::from_diagonal(&clipped) * v.adjoint();
    if !(trace(&rebuilt) > T::zero()) {
        return Err(Error::InvalidState("no positive spectral weight".into()));
    }
    DensityMatrix::from_unnormalized(&rebuilt)
}
