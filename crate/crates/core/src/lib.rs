//! Blending-operator splines, vanishing-moment spline wavelets and a
//! streaming synchrosqueezed wavelet transform, with the respiratory
//! indices built on them.

pub mod blending;
pub mod edr;
pub mod features;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod simgen;
pub mod splines;
pub mod stats;
pub mod sst;
pub mod vmwav;

pub use scalar::Real;

/// f64 instantiations of the generic types.
pub mod f64 {
    pub type KnotSequence = crate::splines::KnotSequence<f64>;
    pub type SplineCurve = crate::splines::SplineCurve<f64>;
    pub type BlendingModel = crate::blending::BlendingModel<f64>;
    pub type StreamState = crate::blending::StreamState<f64>;
    pub type VMWavelet = crate::vmwav::VMWavelet<f64>;
    pub type AnalyticVm = crate::vmwav::AnalyticVm<f64>;
    pub type SstConfig = crate::sst::SstConfig<f64>;
    pub type SstEngine = crate::sst::SstEngine<f64>;
    pub type TfMap = crate::sst::TfMap<f64>;
    pub type RidgeCurve = crate::features::RidgeCurve<f64>;
    pub type PowerSplit = crate::features::PowerSplit<f64>;
    pub type ShapeModel = crate::features::ShapeModel<f64>;
}
