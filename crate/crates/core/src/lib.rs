pub mod alpha;
pub mod cosine;
pub mod extrapolate;
pub mod fourier;
pub mod limit_curve;
pub mod ode;
pub mod painleve;
pub mod pseries;
pub mod quad;
pub mod separatrix;
pub mod stats;
