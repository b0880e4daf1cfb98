//! Computations with finite-dimensional representations of free-group
//! algebra elements and finite matrix-fiber mapping telescopes.
//!
//! The crate has four layers:
//!
//! * [`word`] — reduced free-group words, balancedness, endpoint
//!   normalization, and formal complex combinations of words;
//! * [`perm`] — the exact permutation construction placing -1 in the
//!   spectrum of a balanced word's image, with cycle-type spectra;
//! * [`unitary`] — numerical work over tuples of unitaries: word maps,
//!   seminorm lower bounds by manifold ascent, spectral-arc estimates,
//!   eigenvalue realization by path continuation, binomial norm
//!   certificates, and singular-value clamping;
//! * [`telescope`] — piecewise scalar-profile elements of finite
//!   mapping telescopes with exact seminorm sequences.

pub mod error;
pub mod perm;
pub mod serial;
pub mod telescope;
pub mod unitary;
pub mod word;

pub use error::{Error, Result};
pub use perm::{
    build_perm_rep, build_perm_rep_with_degree, perm_to_unitary, permutation_spectrum,
    word_on_permutations, PartialPermutation, PermRepCertificate, Permutation, RootOfUnity,
};
pub use telescope::{
    construct_prescribed, counterexample_additive, counterexample_multiplicative, fdi_witness,
    EmbeddingTag, Profile, Segment, SegmentForm, SeminormSequence, TelescopeElement,
    TelescopeShape, Window,
};
pub use unitary::{
    apply_element, arc_estimate, arc_scan, binomial_certificate, eigenvalues, fnt_bound_compare,
    norm_clamp, operator_norm, realize_eigenvalue, seminorm_lower_bound, word_map, ArcEstimate,
    BinomialBranch, BinomialCertificate, EigenvalueCertificate, FntComparison, SearchBudget,
    SeminormEstimate, UnitaryTuple, UNITARITY_TOL,
};
pub use word::{GroupAlgebraElement, Letter, NormalizedWord, Word};
