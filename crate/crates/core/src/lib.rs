//! Point counts, motivic classes and two-dimensional representations for the
//! quaternionic Sklyanin algebra and its level-two DT series coefficient.

#![allow(clippy::needless_range_loop)]

pub mod clifford;
pub mod count;
pub mod field;
pub mod motive;
pub mod poly;
pub mod series;
pub mod strata;
pub mod verify;

pub use clifford::{build_rep, diagonalize, verify_rep, CliffordError, DiagCase, DiagResult, Rep2, Sign, SymmetricForm3};
pub use count::{CountError, CountResult, CountTask, Strategy};
pub use field::{make_field, make_field_of_size, FieldContext, FieldElement, FieldError};
pub use motive::{parse_motive, print_motive, ClassSymbol, CountBundle, MotiveError, MotiveExpr};
pub use poly::{Monomial, Poly};
pub use series::{CoeffReport, DiscrepancyReport, Mu3Mode, SeriesError};
pub use strata::{Stratum, StratumName, StrataError};
pub use verify::{CountCache, Grid, Lemma, LemmaReport, VerifyError, VerifyOptions};
