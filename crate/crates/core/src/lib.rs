//! Exact-arithmetic toolkit for Palatini scrolls.
//!
//! An m-dimensional space of skew forms on a 2k-dimensional space V defines
//! an m×2k matrix of linear forms F on P(V) whose maximal minors cut out the
//! scroll X, and a 2k×2k skew matrix of linear forms M on P(U) whose
//! pfaffian cuts out the base hypersurface Y. The modules below build these
//! objects exactly over finite fields or ℚ, sample the incidence
//! correspondence between Y and X, compare two degree computations, and
//! compute the dimension of the Hilbert scheme tangent space at X.

pub mod chow;
pub mod field;
pub mod incidence;
pub mod linalg;
pub mod modp;
pub mod poly;
pub mod scroll;
pub mod tangent;
pub mod unipoly;

pub use field::{Field, FieldError, FieldKind, Scalar};
pub use linalg::{LinalgError, Matrix};
pub use poly::{LinFormMatrix, MultiPoly, PolyError};
pub use scroll::{PalatiniInstance, ScrollError, SkewSystem};
pub use unipoly::UniPoly;

/// Toolkit version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Caps the global worker pool at `PALATINI_THREADS` when that variable
/// holds a positive integer. Results never depend on the worker count.
/// Returns the pool size in effect.
pub fn configure_threads() -> usize {
    if let Some(n) = std::env::var("PALATINI_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            // fails only if the pool already exists, in which case it is kept
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    rayon::current_num_threads()
}
