use serde::Serialize;
use thiserror::Error;

/// Evidence that a twisted operator fails to be a weak isomorphism.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonAcyclicCertificate {
    /// Size of the (restricted) square matrix whose commutative determinant vanished.
    pub restricted_size: usize,
    /// Number of lattice variables of the restricted matrix.
    pub variables: usize,
    /// Normalized kernel dimension estimate, as a decimal string of the exact fraction.
    pub kernel_dimension: String,
}

#[derive(Clone, Debug, Error)]
pub enum Error {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator index {index} out of range (presentation has {count} generators)")]
    GeneratorIndex { index: usize, count: usize },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("relator {index} does not map to the identity under the homomorphism")]
    RelatorNotKilled { index: usize },
    #[error("homomorphism rank {hom_rank} is smaller than the free rank {free_rank} of H1")]
    RankMismatch { hom_rank: usize, free_rank: usize },
    #[error("homomorphism does not factor the projection onto H1_f")]
    NotLarge,
    #[error("presentation has deficiency {0}, expected 1")]
    Deficiency(i64),
    #[error("every generator is torsion in H1")]
    NoFreeGenerator,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("no admissible marking: {0}")]
    NoAdmissibleMarking(String),
    #[error("word weight {got:?} does not match requested shift {expected:?}")]
    WeightMismatch { expected: Vec<i64>, got: Vec<i64> },
    #[error("finite quotient has more than {bound} elements")]
    QuotientTooLarge { bound: usize },
    #[error("class vanishes on the lattice while nonzero on the quotient")]
    PhiVanishesOnLattice,
    #[error("interpolation grid insufficient after enlargement")]
    InterpolationFailed,
    #[error("numeric integration did not converge: last difference {last_diff:e} above tolerance {tol:e}")]
    NoConvergence { last_diff: f64, tol: f64 },
    #[error("operator is not a weak isomorphism (commutative determinant vanishes)")]
    NonAcyclic(NonAcyclicCertificate),
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("exact univariate path unavailable: determinant involves {0} variables")]
    NotUnivariate(usize),
    #[error("grid must span at least {needed} decades with {min_samples} samples per end decade")]
    GridSpan { needed: f64, min_samples: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("tower chain invalid: {0}")]
    Tower(String),
    #[error("positive parameter required, got {0}")]
    NonPositive(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
