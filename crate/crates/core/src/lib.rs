// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Spatio-temporal analysis of trending-topic snapshot logs.
//!
//! Start from [`model`] to load a catalog and a log, build a
//! [`model::TrendEpisodeTable`], and hand it to the analysis modules. The
//! [`pipeline`] module runs everything and writes plot-ready files; the
//! [`synth`] module generates logs with known structure.

pub mod backbone;
pub mod depnet;
pub mod error;
pub mod export;
pub mod geocluster;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod trendsetters;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/spread.md")]
    mod spread {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/backbone.md")]
    mod backbone {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/trendsetters.md")]
    mod trendsetters {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
