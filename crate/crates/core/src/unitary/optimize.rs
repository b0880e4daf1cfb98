//! Multi-restart ascent over products of unitary groups.
//!
//! Moves are geodesic: `U ↦ U · exp(t X)` with `X` skew-Hermitian. The
//! objective (largest singular value, or largest eigenvalue argument)
//! is nonsmooth, so the search direction comes from finite-difference
//! directional derivatives over a skew-Hermitian basis, with the basis
//! factors `exp(h B)` applied in closed form. Restarts are independent
//! and run in parallel; each draws its starting point from a seed
//! derived from the root seed and the restart index, and the reduction
//! keeps the first restart attaining the maximum, so results do not
//! depend on scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::build_perm_rep;
use crate::unitary::{apply_element, eigenvalues, operator_norm, word_map, UnitaryTuple};
use crate::word::{GroupAlgebraElement, Word};

const FD_STEP: f64 = 1e-6;

/// Restart/iteration budget with the root seed; identical budgets give
/// identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            restarts: 8,
            max_iterations: 60,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidBudget("restarts must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidBudget("max_iterations must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn derive_seed(root: u64, index: usize) -> u64 {
    let mut z = root
        .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// QR-orthonormalized random complex matrix with the R-diagonal phase
/// fix, so the distribution does not privilege the standard basis.
fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 1e-12 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn random_tuple(seed: u64, rank: usize, d: usize) -> UnitaryTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrices = (0..rank).map(|_| random_unitary(&mut rng, d)).collect();
    UnitaryTuple::new_unchecked(d, matrices)
}

/// One skew-Hermitian basis direction together with its closed-form
/// one-parameter factor.
#[derive(Clone, Copy)]
enum BasisMove {
    /// `E_ab - E_ba`: plane rotation.
    Real(usize, usize),
    /// `i (E_ab + E_ba)`.
    Imag(usize, usize),
    /// `i E_aa`: phase.
    Phase(usize),
}

impl BasisMove {
    fn all(d: usize) -> Vec<BasisMove> {
        let mut moves = Vec::with_capacity(d * d);
        for a in 0..d {
            moves.push(BasisMove::Phase(a));
        }
        for a in 0..d {
            for b in (a + 1)..d {
                moves.push(BasisMove::Real(a, b));
                moves.push(BasisMove::Imag(a, b));
            }
        }
        moves
    }

    /// Right-multiplies `u` by `exp(h B)` (column operations on a copy).
    fn applied(&self, u: &DMatrix<Complex64>, h: f64) -> DMatrix<Complex64> {
        let mut m = u.clone();
        match *self {
            BasisMove::Phase(a) => {
                let phase = Complex64::from_polar(1.0, h);
                for i in 0..m.nrows() {
                    m[(i, a)] *= phase;
                }
            }
            BasisMove::Real(a, b) => {
                let (c, s) = (h.cos(), h.sin());
                for i in 0..m.nrows() {
                    let (ua, ub) = (u[(i, a)], u[(i, b)]);
                    m[(i, a)] = ua * c - ub * s;
                    m[(i, b)] = ua * s + ub * c;
                }
            }
            BasisMove::Imag(a, b) => {
                let c = Complex64::new(h.cos(), 0.0);
                let is = Complex64::new(0.0, h.sin());
                for i in 0..m.nrows() {
                    let (ua, ub) = (u[(i, a)], u[(i, b)]);
                    m[(i, a)] = ua * c + ub * is;
                    m[(i, b)] = ua * is + ub * c;
                }
            }
        }
        m
    }

    fn add_to(&self, grad: &mut DMatrix<Complex64>, coeff: f64) {
        match *self {
            BasisMove::Phase(a) => grad[(a, a)] += Complex64::new(0.0, coeff),
            BasisMove::Real(a, b) => {
                grad[(a, b)] += Complex64::new(coeff, 0.0);
                grad[(b, a)] -= Complex64::new(coeff, 0.0);
            }
            BasisMove::Imag(a, b) => {
                grad[(a, b)] += Complex64::new(0.0, coeff);
                grad[(b, a)] += Complex64::new(0.0, coeff);
            }
        }
    }
}

/// `exp(X)` for skew-Hermitian `X`, via the Hermitian eigendecomposition
/// of `-iX`; the result is unitary to machine precision.
fn exp_skew(x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let d = x.nrows();
    let h = x.map(|z| z * Complex64::new(0.0, -1.0));
    let se = nalgebra::linalg::SymmetricEigen::try_new(h, 1e-13, 10_000)
        .ok_or(Error::EigenSolverFailed)?;
    let phases = DMatrix::from_diagonal(&se.eigenvalues.map(|lam| Complex64::from_polar(1.0, lam)));
    Ok(&se.eigenvectors * phases * se.eigenvectors.adjoint())
}

fn move_tuple(u: &UnitaryTuple, direction: &[DMatrix<Complex64>], t: f64) -> Result<UnitaryTuple> {
    let matrices = u
        .matrices()
        .iter()
        .zip(direction)
        .map(|(m, dir)| Ok(m * exp_skew(&(dir * Complex64::new(t, 0.0)))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitaryTuple::new_unchecked(u.dimension(), matrices))
}

/// Nearest unitary (polar factor); repairs drift accumulated by moves.
fn polar_repair(u: &UnitaryTuple) -> UnitaryTuple {
    let matrices = u
        .matrices()
        .iter()
        .map(|m| {
            let svd = m.clone().svd(true, true);
            svd.u.as_ref().expect("svd") * svd.v_t.as_ref().expect("svd")
        })
        .collect();
    UnitaryTuple::new_unchecked(u.dimension(), matrices)
}

struct RestartResult {
    value: f64,
    witness: UnitaryTuple,
}

fn ascend<F>(objective: &F, init: UnitaryTuple, max_iterations: usize) -> RestartResult
where
    F: Fn(&UnitaryTuple) -> f64,
{
    let rank = init.rank();
    let d = init.dimension();
    let mut current = init;
    let mut f_current = objective(&current);
    let mut best = RestartResult {
        value: f_current,
        witness: current.clone(),
    };
    if rank == 0 || d == 0 {
        return best;
    }
    let moves = BasisMove::all(d);
    let mut step = 0.5;
    for _ in 0..max_iterations {
        // finite-difference gradient over the skew-Hermitian basis
        let mut direction: Vec<DMatrix<Complex64>> = (0..rank).map(|_| DMatrix::zeros(d, d)).collect();
        let mut gnorm2 = 0.0;
        for (i, dir) in direction.iter_mut().enumerate() {
            for mv in &moves {
                let mut matrices = current.matrices().to_vec();
                matrices[i] = mv.applied(&current.matrices()[i], FD_STEP);
                let trial = UnitaryTuple::new_unchecked(d, matrices);
                let ft = objective(&trial);
                if ft > best.value {
                    best = RestartResult {
                        value: ft,
                        witness: trial.clone(),
                    };
                }
                let g = (ft - f_current) / FD_STEP;
                if g != 0.0 {
                    mv.add_to(dir, g);
                    gnorm2 += g * g;
                }
            }
        }
        if gnorm2.sqrt() < 1e-10 {
            break;
        }
        let scale = 1.0 / gnorm2.sqrt();
        for dir in &mut direction {
            dir.iter_mut().for_each(|z| *z *= Complex64::new(scale, 0.0));
        }
        // geodesic line search over a fixed step ladder
        let mut best_step = 0.0;
        let mut best_ft = f_current;
        let mut best_trial: Option<UnitaryTuple> = None;
        for mult in [4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.04, 0.015] {
            let t = step * mult;
            let Ok(trial) = move_tuple(&current, &direction, t) else {
                continue;
            };
            let ft = objective(&trial);
            if ft > best_ft {
                best_ft = ft;
                best_step = t;
                best_trial = Some(trial);
            }
        }
        match best_trial {
            Some(trial) => {
                current = trial;
                f_current = best_ft;
                step = best_step.clamp(1e-7, 16.0);
                if f_current > best.value {
                    best = RestartResult {
                        value: f_current,
                        witness: current.clone(),
                    };
                }
            }
            None => {
                step *= 0.2;
                if step < 1e-9 {
                    break;
                }
            }
        }
    }
    best
}

/// Maximizes `objective` over rank-tuples of `d×d` unitaries: evaluates
/// every seed and `budget.restarts` starting points, ascending from
/// each, and returns the largest value seen with its witness.
pub(crate) fn maximize<F>(
    rank: usize,
    dimension: usize,
    objective: &F,
    budget: &SearchBudget,
    seeds: &[UnitaryTuple],
) -> Result<(f64, UnitaryTuple)>
where
    F: Fn(&UnitaryTuple) -> f64 + Sync,
{
    budget.validate()?;
    if dimension == 0 {
        return Err(Error::InvalidBudget("dimension must be >= 1".into()));
    }
    for s in seeds {
        if s.dimension() != dimension {
            return Err(Error::DimensionMismatch {
                left: s.dimension(),
                right: dimension,
            });
        }
        if s.rank() != rank {
            return Err(Error::RankMismatch {
                left: s.rank() as u32,
                right: rank as u32,
            });
        }
    }
    if rank == 0 {
        let trivial = UnitaryTuple::trivial(0, dimension);
        let value = objective(&trivial);
        return Ok((value, trivial));
    }
    let total = budget.restarts.max(seeds.len());
    let results: Vec<RestartResult> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let init = seeds
                .get(idx)
                .cloned()
                .unwrap_or_else(|| random_tuple(derive_seed(budget.seed, idx), rank, dimension));
            ascend(objective, init, budget.max_iterations)
        })
        .collect();
    // order-independent reduction: strictly greater wins, ties keep the
    // earliest restart index
    let mut best_idx = 0;
    for (i, r) in results.iter().enumerate() {
        if r.value.total_cmp(&results[best_idx].value) == std::cmp::Ordering::Greater {
            best_idx = i;
        }
    }
    let chosen = &results[best_idx];
    let witness = if chosen.witness.unitarity_residual() > crate::unitary::UNITARITY_TOL * 0.3 {
        polar_repair(&chosen.witness)
    } else {
        chosen.witness.clone()
    };
    Ok((chosen.value, witness))
}

/// Certified lower bound for the dimension-`d` seminorm of `a`, with the
/// tuple attaining it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub dimension: usize,
    pub seed: u64,
    pub witness: UnitaryTuple,
}

/// Lower bound on `sup ‖π(a)‖` over dimension-`d` representations:
/// the max of `‖apply_element(a, U)‖` over every tuple the ascent
/// evaluated. Monotone in budget and seeds by construction.
pub fn seminorm_lower_bound(
    a: &GroupAlgebraElement,
    dimension: usize,
    budget: &SearchBudget,
    seeds: &[UnitaryTuple],
) -> Result<SeminormEstimate> {
    let rank = a.rank() as usize;
    let objective = |u: &UnitaryTuple| match apply_element(a, u) {
        Ok(m) => operator_norm(&m),
        Err(_) => 0.0,
    };
    let (value, witness) = maximize(rank, dimension, &objective, budget, seeds)?;
    Ok(SeminormEstimate {
        value,
        dimension,
        seed: budget.seed,
        witness,
    })
}

/// Lower-bound estimate of the spectral arc angle at one dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArcEstimate {
    pub theta: f64,
    pub dimension: usize,
    pub seed: u64,
    pub witness: UnitaryTuple,
}

fn max_eigen_argument(w: &Word, u: &UnitaryTuple) -> f64 {
    word_map(w, u)
        .and_then(|m| eigenvalues(&m))
        .map(|eigs| eigs.iter().map(|z| z.arg().abs()).fold(0.0, f64::max))
        .unwrap_or(0.0)
}

/// Estimates the largest eigenvalue argument reachable for `w` at one
/// dimension. At `d = 1` balanced words evaluate to 1 at every tuple, so
/// the answer is exactly 0. From `d >= 2ℓ` on, the permutation
/// certificate is always included as a seed, pinning the estimate at π.
pub fn arc_estimate(
    w: &Word,
    dimension: usize,
    budget: &SearchBudget,
    seeds: &[UnitaryTuple],
) -> Result<ArcEstimate> {
    if w.is_identity() {
        return Err(Error::TrivialWord);
    }
    if !w.is_balanced() {
        return Err(Error::UnbalancedWord(w.to_string()));
    }
    budget.validate()?;
    let rank = w.rank() as usize;
    if dimension == 1 {
        return Ok(ArcEstimate {
            theta: 0.0,
            dimension: 1,
            seed: budget.seed,
            witness: UnitaryTuple::trivial(rank, 1),
        });
    }
    let mut all_seeds = seeds.to_vec();
    let cert = build_perm_rep(w)?;
    if cert.dimension <= dimension {
        all_seeds.push(UnitaryTuple::from_permutations(&cert.sigmas)?.extend(dimension)?);
    }
    let objective = |u: &UnitaryTuple| max_eigen_argument(w, u);
    let (theta, witness) = maximize(rank, dimension, &objective, budget, &all_seeds)?;
    Ok(ArcEstimate {
        theta,
        dimension,
        seed: budget.seed,
        witness,
    })
}

/// Arc estimates for a range of dimensions, each seeded with the block
/// extension of the previous witness so the sequence is nondecreasing.
pub fn arc_scan(
    w: &Word,
    dimensions: std::ops::RangeInclusive<usize>,
    budget: &SearchBudget,
) -> Result<Vec<ArcEstimate>> {
    let mut out: Vec<ArcEstimate> = Vec::new();
    for d in dimensions {
        let seeds = match out.last() {
            Some(prev) => vec![prev.witness.extend(d)?],
            None => Vec::new(),
        };
        let mut est = arc_estimate(w, d, budget, &seeds)?;
        if let Some(prev) = out.last() {
            if prev.theta > est.theta {
                est.theta = prev.theta;
            }
        }
        out.push(est);
    }
    Ok(out)
}
