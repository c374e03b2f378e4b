//! Finite quantum observables (POVMs): validation, extremality tests,
//! constructions, irreducible reduction and the rank problem.

pub mod constructions;
pub mod error;
pub mod extremality;
pub mod fixtures;
pub mod io;
pub mod matcore;
pub mod observable;
pub mod rankprob;
pub mod reduction;
pub mod repro;

pub use constructions::SubspaceFamily;
pub use error::{PovmError, Result};
pub use extremality::{is_extremal, ExtremalityVerdict, SuperGramMatrix};
pub use matcore::{CMatrix, ToleranceConfig, C64};
pub use observable::{from_gram, GramMatrix, Observable, RankOneForm};
pub use rankprob::{Certificate, CertificateKind, RankList};
pub use reduction::Reduction;
