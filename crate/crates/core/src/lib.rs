//! Inference for matched case-control data.
//!
//! The crate covers the classical paired tests (McNemar, paired
//! Hotelling/Student), conditional logistic regression (likelihood, score,
//! information, Newton fitting, score/Wald/likelihood-ratio tests, and the
//! general-strata conditional likelihood), and a Monte Carlo lab comparing the
//! Hotelling and CLR score statistics under local alternatives.
//!
//! ```
//! use matchstat_core::matched_data::PairedDifferences;
//! use matchstat_core::classic_tests::{hotelling_paired, PValueMode};
//! use matchstat_core::clr::score_test;
//!
//! let z = PairedDifferences::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
//! let hot = hotelling_paired(&z, PValueMode::ChiSquare).unwrap();
//! let sc = score_test(&z).unwrap();
//! assert!((hot.statistic - 12.0).abs() < 1e-12);
//! assert!((sc.statistic - 18.0 / 7.0).abs() < 1e-12);
//! ```

pub mod clr;
pub mod equivalence_lab;
mod error;
pub mod matched_data;
pub mod numerics;

pub use error::{Error, Result};
