//! Numerical layer over tuples of unitaries: word-map evaluation,
//! operator norms and spectra, singular-value clamping, and the
//! dimension-bound comparison for binomials.

mod continuation;
mod optimize;

pub use continuation::{
    binomial_certificate, realize_eigenvalue, BinomialBranch, BinomialCertificate,
    EigenvalueCertificate,
};
pub use optimize::{arc_estimate, arc_scan, seminorm_lower_bound, ArcEstimate, SearchBudget, SeminormEstimate};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{perm_to_unitary, Permutation};
use crate::serial::{matrix_to_rows, rows_to_matrix};
use crate::word::{GroupAlgebraElement, Word};

/// Largest allowed spectral-norm residual of `U U* - I`.
pub const UNITARITY_TOL: f64 = 1e-10;

/// `n` complex `d×d` matrices, unitary within [`UNITARITY_TOL`]; the
/// data of a representation of the rank-`n` free group restricted to
/// its generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TupleData", into = "TupleData")]
pub struct UnitaryTuple {
    dimension: usize,
    matrices: Vec<DMatrix<Complex64>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct TupleData {
    dimension: usize,
    matrices: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<UnitaryTuple> for TupleData {
    fn from(t: UnitaryTuple) -> Self {
        TupleData {
            dimension: t.dimension,
            matrices: t.matrices.iter().map(matrix_to_rows).collect(),
        }
    }
}

impl TryFrom<TupleData> for UnitaryTuple {
    type Error = Error;
    fn try_from(d: TupleData) -> Result<Self> {
        let matrices = d
            .matrices
            .iter()
            .map(|rows| rows_to_matrix(rows))
            .collect::<Result<Vec<_>>>()?;
        let tuple = UnitaryTuple::new_with_dimension(d.dimension, matrices)?;
        Ok(tuple)
    }
}

impl UnitaryTuple {
    pub fn new(matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let dimension = matrices
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidBudget("empty tuple needs an explicit dimension".into()))?;
        Self::new_with_dimension(dimension, matrices)
    }

    /// Builds and validates; `dimension` must be given explicitly so the
    /// rank-0 tuple (no generators) still knows its matrix size.
    pub fn new_with_dimension(dimension: usize, matrices: Vec<DMatrix<Complex64>>) -> Result<Self> {
        for m in &matrices {
            if m.nrows() != dimension || m.ncols() != dimension {
                return Err(Error::DimensionMismatch {
                    left: dimension,
                    right: m.nrows().max(m.ncols()),
                });
            }
        }
        let tuple = UnitaryTuple {
            dimension,
            matrices,
        };
        let residual = tuple.unitarity_residual();
        if residual > UNITARITY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(tuple)
    }

    pub(crate) fn new_unchecked(dimension: usize, matrices: Vec<DMatrix<Complex64>>) -> Self {
        UnitaryTuple {
            dimension,
            matrices,
        }
    }

    /// All generators mapped to the identity matrix.
    pub fn trivial(rank: usize, dimension: usize) -> Self {
        UnitaryTuple {
            dimension,
            matrices: (0..rank).map(|_| DMatrix::identity(dimension, dimension)).collect(),
        }
    }

    pub fn from_permutations(perms: &[Permutation]) -> Result<Self> {
        let dimension = perms
            .first()
            .map(Permutation::degree)
            .ok_or_else(|| Error::InvalidBudget("empty permutation tuple".into()))?;
        for p in perms {
            if p.degree() != dimension {
                return Err(Error::DimensionMismatch {
                    left: dimension,
                    right: p.degree(),
                });
            }
        }
        Ok(UnitaryTuple {
            dimension,
            matrices: perms.iter().map(perm_to_unitary).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rank(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.matrices
    }

    /// Matrix of the 1-based generator `index`.
    pub fn matrix(&self, index: u32) -> &DMatrix<Complex64> {
        &self.matrices[(index - 1) as usize]
    }

    /// Max over generators of the spectral norm of `U U* - I`.
    pub fn unitarity_residual(&self) -> f64 {
        self.matrices
            .iter()
            .map(|u| {
                let mut g = u * u.adjoint();
                for i in 0..self.dimension {
                    g[(i, i)] -= Complex64::new(1.0, 0.0);
                }
                operator_norm(&g)
            })
            .fold(0.0, f64::max)
    }

    /// Block extension `U ⊕ I` to a larger dimension; preserves every
    /// attained norm and eigenvalue and adds the eigenvalue 1.
    pub fn extend(&self, dimension: usize) -> Result<Self> {
        if dimension < self.dimension {
            return Err(Error::DimensionMismatch {
                left: self.dimension,
                right: dimension,
            });
        }
        let matrices = self
            .matrices
            .iter()
            .map(|u| {
                let mut big = DMatrix::<Complex64>::identity(dimension, dimension);
                big.view_mut((0, 0), (self.dimension, self.dimension)).copy_from(u);
                big
            })
            .collect();
        Ok(UnitaryTuple {
            dimension,
            matrices,
        })
    }

    /// Entrywise complex conjugate; conjugates the spectrum of every
    /// word image.
    pub fn entrywise_conjugate(&self) -> Self {
        UnitaryTuple {
            dimension: self.dimension,
            matrices: self.matrices.iter().map(|u| u.map(|z| z.conj())).collect(),
        }
    }
}

/// Evaluates the word on the tuple, rightmost letter acting first; the
/// identity word gives the identity matrix.
pub fn word_map(w: &Word, u: &UnitaryTuple) -> Result<DMatrix<Complex64>> {
    if w.rank() as usize != u.rank() {
        return Err(Error::RankMismatch {
            left: w.rank(),
            right: u.rank() as u32,
        });
    }
    let d = u.dimension();
    let mut adjoints: Vec<Option<DMatrix<Complex64>>> = vec![None; u.rank()];
    let mut result = DMatrix::<Complex64>::identity(d, d);
    for l in w.letters() {
        let g = (l.generator() - 1) as usize;
        if l.sign() == 1 {
            result *= &u.matrices[g];
        } else {
            if adjoints[g].is_none() {
                adjoints[g] = Some(u.matrices[g].adjoint());
            }
            result *= adjoints[g].as_ref().unwrap();
        }
    }
    Ok(result)
}

/// `Σ coefficient · word_map(word, U)`.
pub fn apply_element(a: &GroupAlgebraElement, u: &UnitaryTuple) -> Result<DMatrix<Complex64>> {
    if a.rank() as usize != u.rank() {
        return Err(Error::RankMismatch {
            left: a.rank(),
            right: u.rank() as u32,
        });
    }
    let d = u.dimension();
    let mut sum = DMatrix::<Complex64>::zeros(d, d);
    for (w, c) in a.terms() {
        sum += word_map(w, u)? * *c;
    }
    Ok(sum)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().copied().fold(0.0, f64::max)
}

/// Eigenvalues via a complex Schur decomposition.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 20_000)
        .ok_or(Error::EigenSolverFailed)?;
    let eigs: DVector<Complex64> = schur.eigenvalues().ok_or(Error::EigenSolverFailed)?;
    Ok(eigs.iter().copied().collect())
}

/// Clamps the singular values of `a` at level `c`, keeping the singular
/// vectors. The result `b` satisfies `‖b‖ = min(‖a‖, c)` and
/// `‖a - b‖ = max(0, ‖a‖ - c)`, both attained with equality.
pub fn norm_clamp(a: &DMatrix<Complex64>, c: f64) -> Result<DMatrix<Complex64>> {
    if c < 0.0 {
        return Err(Error::NegativeClampLevel(c));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(a.clone());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax <= c {
        return Ok(a.clone());
    }
    let u = svd.u.as_ref().expect("svd with u requested");
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let clamped = DVector::from_iterator(
        svd.singular_values.len(),
        svd.singular_values.iter().map(|&s| Complex64::new(s.min(c), 0.0)),
    );
    Ok(u * DMatrix::from_diagonal(&clamped) * v_t)
}

/// Dimension needed by this construction (`2ℓ` with `ℓ` the length of
/// the reduced word `w2^{-1} w1`) against the general `4 n^L` bound,
/// where `L` is the longer input word's length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FntComparison {
    pub two_ell: u64,
    pub fnt: u128,
    pub reduced_length: u64,
    pub max_word_length: u64,
    pub rank: u32,
}

pub fn fnt_bound_compare(w1: &Word, w2: &Word) -> Result<FntComparison> {
    let rank = w1.rank().max(w2.rank());
    let difference = w2.inverse().concat(w1)?;
    let reduced_length = difference.len() as u64;
    let max_word_length = w1.len().max(w2.len()) as u64;
    let fnt = (rank as u128)
        .checked_pow(u32::try_from(max_word_length).map_err(|_| Error::BoundOverflow {
            rank,
            length: max_word_length as usize,
        })?)
        .and_then(|p| p.checked_mul(4))
        .ok_or(Error::BoundOverflow {
            rank,
            length: max_word_length as usize,
        })?;
    Ok(FntComparison {
        two_ell: 2 * reduced_length,
        fnt,
        reduced_length,
        max_word_length,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::build_perm_rep;

    fn w(text: &str) -> Word {
        Word::parse(text, None).unwrap()
    }

    fn commutator() -> Word {
        w("x1 x2 x1^-1 x2^-1")
    }

    #[test]
    fn word_map_at_identity_tuple() {
        let u = UnitaryTuple::trivial(2, 3);
        let m = word_map(&commutator(), &u).unwrap();
        assert_eq!(m, DMatrix::<Complex64>::identity(3, 3));
    }

    #[test]
    fn balanced_word_at_commuting_diagonals_is_identity() {
        let d1 = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -1.2),
        ]));
        let d2 = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::from_polar(1.0, 2.1),
            Complex64::from_polar(1.0, 0.7),
        ]));
        let u = UnitaryTuple::new(vec![d1, d2]).unwrap();
        for word in ["x1 x2 x1^-1 x2^-1", "x1 x2 x2 x1^-1 x2^-1 x2^-1"] {
            let m = word_map(&w(word), &u).unwrap();
            let err = (&m - DMatrix::<Complex64>::identity(2, 2)).norm();
            assert!(err < 1e-12, "{word}: {err}");
        }
    }

    #[test]
    fn word_map_of_inverse_is_adjoint() {
        let cert = build_perm_rep(&commutator()).unwrap();
        let u = UnitaryTuple::from_permutations(&cert.sigmas).unwrap();
        let word = w("x1 x2 x2 x1^-1 x2^-1 x2^-1");
        let m = word_map(&word, &u).unwrap();
        let minv = word_map(&word.inverse(), &u).unwrap();
        let err = (minv - m.adjoint()).map(|z| z.norm()).max();
        assert!(err <= 1e-12);
    }

    #[test]
    fn word_map_commutator_on_certificate_has_two_cycle() {
        let cert = build_perm_rep(&commutator()).unwrap();
        let u = UnitaryTuple::from_permutations(&cert.sigmas).unwrap();
        let m = word_map(&commutator(), &u).unwrap();
        // permutation matrix containing the two-cycle (1,5): e_1 -> e_5, e_5 -> e_1
        assert_eq!(m[(4, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(0, 4)], Complex64::new(1.0, 0.0));
        assert_eq!(m, perm_to_unitary(&cert.word_image().unwrap()));
    }

    #[test]
    fn apply_element_examples() {
        let u = UnitaryTuple::trivial(2, 4);
        let one = GroupAlgebraElement::from_terms([(Word::identity(2), Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(apply_element(&one, &u).unwrap(), DMatrix::identity(4, 4));

        // w1 - w2 at the trivial tuple vanishes
        let diff = GroupAlgebraElement::from_terms([
            (w("x1 x2"), Complex64::new(1.0, 0.0)),
            (w("x2 x1"), Complex64::new(-1.0, 0.0)),
        ])
        .unwrap();
        assert_eq!(apply_element(&diff, &u).unwrap(), DMatrix::zeros(4, 4));
    }

    #[test]
    fn one_minus_commutator_attains_two_on_certificate() {
        let cert = build_perm_rep(&commutator()).unwrap();
        let u = UnitaryTuple::from_permutations(&cert.sigmas).unwrap();
        let a = GroupAlgebraElement::from_terms([
            (Word::identity(2), Complex64::new(1.0, 0.0)),
            (commutator(), Complex64::new(-1.0, 0.0)),
        ])
        .unwrap();
        let norm = operator_norm(&apply_element(&a, &u).unwrap());
        assert!((norm - 2.0).abs() < 1e-12, "norm = {norm}");
    }

    #[test]
    fn eigenvalues_of_certificate_word_image_contain_minus_one() {
        let cert = build_perm_rep(&commutator()).unwrap();
        let u = UnitaryTuple::from_permutations(&cert.sigmas).unwrap();
        let eigs = eigenvalues(&word_map(&commutator(), &u).unwrap()).unwrap();
        let closest = eigs.iter().map(|z| (z - Complex64::new(-1.0, 0.0)).norm()).fold(f64::MAX, f64::min);
        assert!(closest < 1e-10);
    }

    #[test]
    fn norm_clamp_identities() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        let b = norm_clamp(&a, 2.0).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]));
        assert!((&b - expected).norm() < 1e-12);
        assert!((operator_norm(&b) - 2.0).abs() < 1e-12);
        assert!((operator_norm(&(&a - &b)) - 1.0).abs() < 1e-12);

        // c above the norm leaves the matrix untouched
        let b2 = norm_clamp(&a, 5.0).unwrap();
        assert_eq!(b2, a);

        // zero matrix stays zero
        let z = DMatrix::<Complex64>::zeros(3, 3);
        assert_eq!(norm_clamp(&z, 0.7).unwrap(), z);

        assert!(matches!(norm_clamp(&a, -1.0), Err(Error::NegativeClampLevel(_))));
    }

    #[test]
    fn clamp_is_idempotent_at_level() {
        let a = DMatrix::from_fn(4, 4, |i, j| Complex64::new((i * 7 + j) as f64 * 0.3 - 1.0, (j as f64) * 0.2));
        let c = 1.1;
        let b = norm_clamp(&a, c).unwrap();
        let bb = norm_clamp(&b, c).unwrap();
        assert!((&bb - &b).norm() < 1e-10);
    }

    #[test]
    fn fnt_comparison_examples() {
        // commutator via w1 = x1 x2, w2 = x2 x1: l = 4, L = 2, rank 2
        let cmp = fnt_bound_compare(&w("x1 x2"), &w("x2 x1")).unwrap();
        assert_eq!(cmp.two_ell, 8);
        assert_eq!(cmp.fnt, 16);

        // length-4 words with no cancellation: l = 8, L = 4, rank 2
        let cmp = fnt_bound_compare(&w("x1 x2 x1 x2"), &w("x2 x1 x2 x1")).unwrap();
        assert_eq!(cmp.reduced_length, 8);
        assert_eq!(cmp.two_ell, 16);
        assert_eq!(cmp.fnt, 4 * 2u128.pow(4));

        // rank 1 still reports the formulas
        let cmp = fnt_bound_compare(&Word::parse("x1 x1", None).unwrap(), &Word::parse("x1", None).unwrap()).unwrap();
        assert_eq!(cmp.two_ell, 2);
        assert_eq!(cmp.fnt, 4);
    }

    #[test]
    fn tuple_validation_and_extension() {
        let bad = DMatrix::from_fn(2, 2, |i, j| Complex64::new((i + j) as f64, 0.0));
        assert!(matches!(UnitaryTuple::new(vec![bad]), Err(Error::NotUnitary { .. })));

        let cert = build_perm_rep(&commutator()).unwrap();
        let u = UnitaryTuple::from_permutations(&cert.sigmas).unwrap();
        assert_eq!(u.unitarity_residual(), 0.0);
        let big = u.extend(11).unwrap();
        assert_eq!(big.dimension(), 11);
        assert!(big.unitarity_residual() <= 1e-12);
        let m = word_map(&commutator(), &big).unwrap();
        let eigs = eigenvalues(&m).unwrap();
        assert!(eigs.iter().any(|z| (z - Complex64::new(-1.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn tuple_json_round_trip() {
        let cert = build_perm_rep(&commutator()).unwrap();
        let u = UnitaryTuple::from_permutations(&cert.sigmas).unwrap();
        let js = serde_json::to_string(&u).unwrap();
        let back: UnitaryTuple = serde_json::from_str(&js).unwrap();
        assert_eq!(back, u);
    }
}
