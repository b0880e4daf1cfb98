//! Eigenvalue realization by path continuation.
//!
//! The permutation certificate gives a tuple where the word's image has
//! -1 as an eigenvalue; the trivial tuple gives eigenvalue 1. Each
//! permutation matrix `P = V D V*` is interpolated along
//! `U(t) = V exp(t log D) V*` with eigenvalue logs on the branch
//! `arg ∈ (-π, π]` (so -1 travels the upper half circle). The function
//! `g(t) = min Re σ(w(U(t)))` is continuous with `g(0) = 1` and
//! `g(1) = -1`, so bisection lands on any prescribed real part, and the
//! conjugation symmetry of spectra fixes the imaginary sign.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{build_perm_rep, permutation_spectrum, PermRepCertificate, RootOfUnity};
use crate::serial::cpx_serde;
use crate::unitary::{
    apply_element, eigenvalues, fnt_bound_compare, operator_norm, word_map, FntComparison,
    UnitaryTuple,
};
use crate::word::{GroupAlgebraElement, Word};

const BISECTION_CAP: usize = 200;

/// Tuple realizing a prescribed unit eigenvalue for a balanced word.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenvalueCertificate {
    pub word: Word,
    #[serde(with = "cpx_serde")]
    pub target: Complex64,
    #[serde(with = "cpx_serde")]
    pub achieved: Complex64,
    pub residual: f64,
    pub tolerance: f64,
    pub dimension: usize,
    /// Continuation parameter of the returned tuple (0 = trivial,
    /// 1 = permutation certificate).
    pub path_parameter: f64,
    /// `g(0)` and `g(1)`, the path's endpoint minimum real parts.
    pub endpoint_values: (f64, f64),
    /// Whether the tuple was replaced by its entrywise conjugate to fix
    /// the imaginary sign.
    pub conjugated_tuple: bool,
    pub tuple: UnitaryTuple,
}

struct ContinuationPath {
    dimension: usize,
    factors: Vec<(DMatrix<Complex64>, Vec<f64>)>,
}

impl ContinuationPath {
    fn new(cert: &PermRepCertificate) -> Self {
        let factors = cert
            .sigmas
            .iter()
            .map(|p| p.spectral_decomposition())
            .collect();
        ContinuationPath {
            dimension: cert.dimension,
            factors,
        }
    }

    fn tuple_at(&self, t: f64) -> UnitaryTuple {
        let matrices = self
            .factors
            .iter()
            .map(|(v, thetas)| {
                let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    thetas.len(),
                    thetas.iter().map(|&th| Complex64::from_polar(1.0, t * th)),
                ));
                v * diag * v.adjoint()
            })
            .collect();
        UnitaryTuple::new_unchecked(self.dimension, matrices)
    }

    fn min_real_part(&self, word: &Word, t: f64) -> Result<f64> {
        let m = word_map(word, &self.tuple_at(t))?;
        let eigs = eigenvalues(&m)?;
        Ok(eigs.iter().map(|z| z.re).fold(f64::MAX, f64::min))
    }
}

fn argmin_re(eigs: &[Complex64]) -> Complex64 {
    *eigs
        .iter()
        .min_by(|a, b| a.re.total_cmp(&b.re))
        .expect("nonempty spectrum")
}

fn closest_to(eigs: &[Complex64], target: Complex64) -> Complex64 {
    *eigs
        .iter()
        .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
        .expect("nonempty spectrum")
}

/// Finds a dimension-2ℓ tuple whose word image has an eigenvalue within
/// `tolerance` of the unit target λ.
pub fn realize_eigenvalue(w: &Word, lambda: Complex64, tolerance: f64) -> Result<EigenvalueCertificate> {
    if tolerance <= 0.0 {
        return Err(Error::InvalidBudget("tolerance must be positive".into()));
    }
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::TargetNotUnitModulus(lambda.norm()));
    }
    let cert = build_perm_rep(w)?;
    // the adjoint reduction conjugates spectra, so chase the conjugated target
    let target = if cert.conjugated { lambda.conj() } else { lambda };
    let core = cert.word.clone();
    let path = ContinuationPath::new(&cert);
    let g0 = path.min_real_part(&core, 0.0)?;
    let g1 = path.min_real_part(&core, 1.0)?;

    if lambda == Complex64::new(1.0, 0.0) {
        // trivial tuple: every balanced word maps to the identity exactly
        let tuple = UnitaryTuple::trivial(w.rank() as usize, cert.dimension);
        return Ok(EigenvalueCertificate {
            word: w.clone(),
            target: lambda,
            achieved: Complex64::new(1.0, 0.0),
            residual: 0.0,
            tolerance,
            dimension: cert.dimension,
            path_parameter: 0.0,
            endpoint_values: (g0, g1),
            conjugated_tuple: false,
            tuple,
        });
    }
    if lambda == Complex64::new(-1.0, 0.0) {
        // exact endpoint: -1 sits in the cycle-type spectrum of the
        // certificate, for the original word as much as for the core
        let phi = cert.word_image()?;
        debug_assert!(permutation_spectrum(&phi).iter().any(RootOfUnity::is_minus_one));
        let tuple = UnitaryTuple::from_permutations(&cert.sigmas)?;
        return Ok(EigenvalueCertificate {
            word: w.clone(),
            target: lambda,
            achieved: Complex64::new(-1.0, 0.0),
            residual: 0.0,
            tolerance,
            dimension: cert.dimension,
            path_parameter: 1.0,
            endpoint_values: (g0, g1),
            conjugated_tuple: false,
            tuple,
        });
    }

    let target_re = target.re.clamp(-1.0, 1.0);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut best: Option<(f64, f64, bool)> = None; // residual, t, conjugate
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        let m = word_map(&core, &path.tuple_at(mid))?;
        let eigs = eigenvalues(&m)?;
        let mu = argmin_re(&eigs);
        let conjugate = (mu.im >= 0.0) != (target.im >= 0.0);
        let mu_fixed = if conjugate { mu.conj() } else { mu };
        let residual = (mu_fixed - target).norm();
        if best.map_or(true, |(r, _, _)| residual < r) {
            best = Some((residual, mid, conjugate));
        }
        if residual <= tolerance {
            break;
        }
        if mu.re > target_re {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (core_residual, t_star, conjugate) = best.expect("at least one bisection step");
    if core_residual > tolerance {
        return Err(Error::ToleranceNotReached {
            tolerance,
            iterations: BISECTION_CAP,
            best: core_residual,
        });
    }
    let mut tuple = path.tuple_at(t_star);
    if conjugate {
        tuple = tuple.entrywise_conjugate();
    }
    // restate the claim on the original word from the raw matrices
    let eigs = eigenvalues(&word_map(w, &tuple)?)?;
    let achieved = closest_to(&eigs, lambda);
    let residual = (achieved - lambda).norm();
    if residual > tolerance {
        return Err(Error::ToleranceNotReached {
            tolerance,
            iterations: BISECTION_CAP,
            best: residual,
        });
    }
    let tuple = UnitaryTuple::new_with_dimension(tuple.dimension(), tuple.matrices().to_vec())?;
    Ok(EigenvalueCertificate {
        word: w.clone(),
        target: lambda,
        achieved,
        residual,
        tolerance,
        dimension: cert.dimension,
        path_parameter: t_star,
        endpoint_values: (g0, g1),
        conjugated_tuple: conjugate,
        tuple,
    })
}

/// Which construction produced a binomial certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinomialBranch {
    /// α = 0 or β = 0: any representation attains max(|α|, |β|).
    ZeroCoefficient,
    /// w1 = w2: the element is scalar, norm |α + β|.
    EqualWords,
    /// w2^{-1} w1 unbalanced: a one-dimensional representation aligns
    /// the phases.
    UnbalancedDifference,
    /// w2^{-1} w1 balanced: eigenvalue realization in dimension 2ℓ.
    BalancedDifference,
}

/// Representation attaining `‖α w1 + β w2‖ = |α| + |β|` (or the scalar
/// value in the degenerate branches).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinomialCertificate {
    #[serde(with = "cpx_serde")]
    pub alpha: Complex64,
    #[serde(with = "cpx_serde")]
    pub beta: Complex64,
    pub w1: Word,
    pub w2: Word,
    /// Reduced `w2^{-1} w1`.
    pub difference: Word,
    pub branch: BinomialBranch,
    pub dimension: usize,
    pub attained_norm: f64,
    pub target_norm: f64,
    pub tolerance: f64,
    pub eigenvalue_residual: Option<f64>,
    pub fnt: FntComparison,
    pub representation: UnitaryTuple,
}

fn sgn(z: Complex64) -> Complex64 {
    z / z.norm()
}

fn attained_on(
    alpha: Complex64,
    beta: Complex64,
    w1: &Word,
    w2: &Word,
    tuple: &UnitaryTuple,
) -> Result<f64> {
    let elem = GroupAlgebraElement::from_terms([(w1.clone(), alpha), (w2.clone(), beta)])?;
    Ok(operator_norm(&apply_element(&elem, tuple)?))
}

/// Builds a representation attaining the binomial norm. The balanced
/// branch realizes the eigenvalue `sgn(β)/sgn(α)` in dimension 2ℓ; the
/// other branches are one-dimensional.
pub fn binomial_certificate(
    alpha: Complex64,
    beta: Complex64,
    w1: &Word,
    w2: &Word,
    tolerance: f64,
) -> Result<BinomialCertificate> {
    if tolerance <= 0.0 {
        return Err(Error::InvalidBudget("tolerance must be positive".into()));
    }
    let rank = w1.rank().max(w2.rank());
    let w1 = w1.with_rank(rank)?;
    let w2 = w2.with_rank(rank)?;
    let difference = w2.inverse().concat(&w1)?;
    let fnt = fnt_bound_compare(&w1, &w2)?;
    let zero = Complex64::new(0.0, 0.0);

    let mut finish = |branch: BinomialBranch,
                      representation: UnitaryTuple,
                      target_norm: f64,
                      eigenvalue_residual: Option<f64>|
     -> Result<BinomialCertificate> {
        let attained_norm = attained_on(alpha, beta, &w1, &w2, &representation)?;
        if (attained_norm - target_norm).abs() > tolerance {
            return Err(Error::ToleranceNotReached {
                tolerance,
                iterations: 0,
                best: (attained_norm - target_norm).abs(),
            });
        }
        Ok(BinomialCertificate {
            alpha,
            beta,
            w1: w1.clone(),
            w2: w2.clone(),
            difference: difference.clone(),
            branch,
            dimension: representation.dimension(),
            attained_norm,
            target_norm,
            tolerance,
            eigenvalue_residual,
            fnt,
            representation,
        })
    };

    if alpha == zero || beta == zero {
        let rep = UnitaryTuple::trivial(rank as usize, 1);
        return finish(BinomialBranch::ZeroCoefficient, rep, (alpha + beta).norm(), None);
    }
    if w1 == w2 {
        let rep = UnitaryTuple::trivial(rank as usize, 1);
        return finish(BinomialBranch::EqualWords, rep, (alpha + beta).norm(), None);
    }

    let mu = sgn(beta) / sgn(alpha);
    let target_norm = alpha.norm() + beta.norm();

    if !difference.is_balanced() {
        // send the first unbalanced generator to the e_j-th root of μ,
        // everything else to 1; the difference word then evaluates to μ
        let sums = difference.exponent_sums();
        let (j, e) = sums
            .iter()
            .enumerate()
            .find(|(_, &e)| e != 0)
            .map(|(j, &e)| (j, e))
            .expect("unbalanced word has a nonzero exponent sum");
        let phi = mu.arg();
        let mut matrices = vec![DMatrix::<Complex64>::identity(1, 1); rank as usize];
        matrices[j][(0, 0)] = Complex64::from_polar(1.0, phi / e as f64);
        let rep = UnitaryTuple::new_with_dimension(1, matrices)?;
        return finish(BinomialBranch::UnbalancedDifference, rep, target_norm, None);
    }

    // balanced branch: |α μ + β| = |α| + |β| exactly at μ = sgn(β)/sgn(α)
    let eig_tolerance = (tolerance / alpha.norm()).min(tolerance).max(1e-14);
    let eig = realize_eigenvalue(&difference, mu, eig_tolerance)?;
    finish(
        BinomialBranch::BalancedDifference,
        eig.tuple.clone(),
        target_norm,
        Some(eig.residual),
    )
}
