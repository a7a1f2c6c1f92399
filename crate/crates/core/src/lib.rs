//! Information-driven shrinkage for generalized linear models.
//!
//! A target data set is fitted while borrowing a dial-controlled amount of
//! information from an already analyzed source data set through a
//! Kullback–Leibler penalty. The dial `λ` runs from `0` (target MLE) to `∞`
//! (source fit), and is chosen by minimizing a plug-in estimate of the MSE.
//!
//! ```
//! use infoshrink::prelude::*;
//! use nalgebra::{DMatrix, DVector};
//!
//! let x = DMatrix::from_row_slice(2, 6, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
//!                                          -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]);
//! let target = Dataset::new(x.clone(), DVector::from_vec(vec![0.1, 0.4, 1.1, 1.4, 2.2, 2.4])).unwrap();
//! let source = Dataset::new(x, DVector::from_vec(vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5])).unwrap();
//!
//! let summary = SourceSummary::fit(GlmFamily::Gaussian, &source).unwrap();
//! let est = solve_dial_estimate(GlmFamily::Gaussian, &target, &summary, 1.0).unwrap();
//! assert_eq!(est.beta_tilde.len(), 2);
//! ```

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod family;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod mle;
pub mod multi_source;
pub mod select;
pub mod shrink;
pub mod sim;

pub mod prelude {
    pub use crate::data::Dataset;
    pub use crate::error::{Error, Result};
    pub use crate::family::GlmFamily;
    pub use crate::inference::{confidence_intervals, wald_intervals, IntervalSet};
    pub use crate::mle::{fit_mle, MleFit};
    pub use crate::select::{MseCurve, PluginMse};
    pub use crate::shrink::{
        solve_dial_estimate, solve_dial_estimate_with_fit, DialEstimate, SourceSummary,
    };
}
