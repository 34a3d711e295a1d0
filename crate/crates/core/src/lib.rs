//! Resonance fluorescence of a two-level emitter under combined optical and
//! acoustic driving.

pub mod cooling;
pub mod dressed;
pub mod error;
pub mod fitting;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod spectrum;

pub use cooling::{CoolingMap, CoolingPoint, LindbladConfig, MapGrid, SteadyStateResult};
pub use dressed::{Group, MixingAngles, OverlayLine, TransitionRecord};
pub use error::{Error, Result};
pub use fitting::{AbsorptionModel, ExtinctionRatio, Extrapolation, FitReport};
pub use floquet::{BlochGenerator, BlochState, FloquetSolution};
pub use spectrum::{CorrelatorSeries, InstrumentModel, SpectrumOptions};
pub use model::{
    AcousticCavity, CoherentLine, DriveConfig, EmitterParams, Frequency, FrequencyGrid, Spectrum,
};
