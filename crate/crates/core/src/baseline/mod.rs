//! Reference engines: an exhaustive scan used as ground truth and an
//! IER-style competitor over a Euclidean rectangle tree.

mod brute;
mod ier;
mod rtree;

pub use brute::{brute_force_fann, BRUTE_FORCE_LIMIT};
pub use ier::{audit_euclid_aggregate, ier_fann_search, EuclidBoundViolation};
pub use rtree::{MbrViolation, Rect, RectEntry, RectKind, RectNode, RectTree};
