//! Monte-Carlo simulator of entanglement-based QKD with OAM qubits sent
//! through Kolmogorov turbulence.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the `*64` / `*32` aliases below fix it.

// `!(x > 0)` style checks are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bipartite;
pub mod channel;
pub mod config;
pub mod density;
pub mod entanglement;
pub mod error;
pub mod link;
pub mod modes;
pub mod qkd;
pub mod rng;
pub mod scalar;
pub mod sweep;
pub mod tomography;
pub mod turbulence;

pub use bipartite::{Averaging, RealizationResult};
pub use channel::{ModeBasis, SpiralSpectrum, TransferMatrix};
pub use config::SweepConfig;
pub use density::DensityMatrix;
pub use entanglement::EntanglementReport;
pub use error::{Error, Result};
pub use link::{DecayDistance, LinkBudget};
pub use modes::{OamModeSpec, OpticalField};
pub use qkd::{KeyRateReport, MubLabel, Protocol};
pub use scalar::Real;
pub use sweep::{CrosstalkResult, SweepRecord};
pub use tomography::{Projector, TomographyRecord};
pub use turbulence::{GridGeometry, PhaseScreen, ScreenSynthesizer, TurbulenceSpec};

pub type GridGeometry64 = GridGeometry<f64>;
pub type PhaseScreen64 = PhaseScreen<f64>;
pub type ScreenSynthesizer64 = ScreenSynthesizer<f64>;
pub type TurbulenceSpec64 = TurbulenceSpec<f64>;
pub type OamModeSpec64 = OamModeSpec<f64>;
pub type OpticalField64 = OpticalField<f64>;
pub type TransferMatrix64 = TransferMatrix<f64>;
pub type ModeBasis64 = ModeBasis<f64>;
pub type SpiralSpectrum64 = SpiralSpectrum<f64>;
pub type LinkBudget64 = LinkBudget<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type RealizationResult64 = RealizationResult<f64>;
pub type KeyRateReport64 = KeyRateReport<f64>;
pub type EntanglementReport64 = EntanglementReport<f64>;
pub type TomographyRecord64 = TomographyRecord<f64>;
pub type SweepRecord64 = SweepRecord<f64>;
pub type CrosstalkResult64 = CrosstalkResult<f64>;

pub type GridGeometry32 = GridGeometry<f32>;
pub type PhaseScreen32 = PhaseScreen<f32>;
pub type ScreenSynthesizer32 = ScreenSynthesizer<f32>;
pub type TurbulenceSpec32 = TurbulenceSpec<f32>;
pub type OamModeSpec32 = OamModeSpec<f32>;
pub type OpticalField32 = OpticalField<f32>;
pub type TransferMatrix32 = TransferMatrix<f32>;
pub type ModeBasis32 = ModeBasis<f32>;
pub type SpiralSpectrum32 = SpiralSpectrum<f32>;
pub type LinkBudget32 = LinkBudget<f32>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type RealizationResult32 = RealizationResult<f32>;
pub type KeyRateReport32 = KeyRateReport<f32>;
pub type EntanglementReport32 = EntanglementReport<f32>;
pub type TomographyRecord32 = TomographyRecord<f32>;
pub type SweepRecord32 = SweepRecord<f32>;
pub type CrosstalkResult32 = CrosstalkResult<f32>;
