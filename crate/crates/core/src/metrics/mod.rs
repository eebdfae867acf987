//! No-reference quality measures and the score table they feed.

pub mod brisque;
pub mod focus;
pub mod niqe;
pub mod table;
pub mod wavelet;

pub use brisque::{brisque_features, brisque_score, SvrModel};
pub use focus::{lapm, lapv};
pub use niqe::{niqe_fit, niqe_score, NiqeOptions, PristineModel};
pub use table::{
    ingest_external_scores, MethodDescriptor, MethodRegistry, Normalization, Polarity, ScoreTable,
};
pub use wavelet::{wavs, wavs_with, Wavelet};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::GrayImage;

/// Anything that maps an image to a scalar quality score.
pub trait Scorer: Send + Sync {
    fn id(&self) -> &str;
    fn score(&self, img: &GrayImage) -> Result<f64>;
}

/// Built-in statistical methods.
#[derive(Clone, Debug)]
pub enum Metric {
    Lapv,
    Lapm,
    Wavs(Wavelet),
    Brisque(Arc<SvrModel>),
    Niqe(Arc<PristineModel>),
}

impl Metric {
    /// Resolves a method id. BRISQUE and NIQE need their models.
    pub fn from_id(
        id: &str,
        svr: Option<&Arc<SvrModel>>,
        pristine: Option<&Arc<PristineModel>>,
    ) -> Result<Self> {
        match id {
            "lapv" => Ok(Metric::Lapv),
            "lapm" => Ok(Metric::Lapm),
            "wavs" => Ok(Metric::Wavs(Wavelet::Db6)),
            "wavs:haar" => Ok(Metric::Wavs(Wavelet::Haar)),
            "brisque" => svr
                .cloned()
                .map(Metric::Brisque)
                .ok_or_else(|| Error::ModelUnavailable("brisque needs an SVR model file".into())),
            "niqe" => pristine
                .cloned()
                .map(Metric::Niqe)
                .ok_or_else(|| Error::ModelUnavailable("niqe needs a pristine model".into())),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

impl Scorer for Metric {
    fn id(&self) -> &str {
        match self {
            Metric::Lapv => "lapv",
            Metric::Lapm => "lapm",
            Metric::Wavs(Wavelet::Db6) => "wavs",
            Metric::Wavs(Wavelet::Haar) => "wavs:haar",
            Metric::Brisque(_) => "brisque",
            Metric::Niqe(_) => "niqe",
        }
    }

    fn score(&self, img: &GrayImage) -> Result<f64> {
        match self {
            Metric::Lapv => lapv(img),
            Metric::Lapm => lapm(img),
            Metric::Wavs(w) => wavs_with(img, *w),
            Metric::Brisque(model) => brisque_score(&brisque_features(img)?, Some(model)),
            Metric::Niqe(model) => niqe_score(img, model),
        }
    }
}
