//! Permutation representations realizing -1 in the spectrum of a
//! balanced word.
//!
//! Given a reduced, balanced, nontrivial word of normalized length l,
//! generators are sent to permutations of 2l points chosen so that the
//! word's image contains the two-cycle (1, l+1). The associated 0/1
//! matrices are unitaries whose spectra are known exactly from cycle
//! structure, so -1 being an eigenvalue is an equality check, not a
//! numerical one.
//!
//! Point bookkeeping follows the word's right-to-left positions: the
//! letter applied k-th pushes point k to k+1 (first track) and point
//! l+k to l+k+1 (second track), and the last letter closes 2l back to
//! 1. Freedom left by those constraints is filled greedily so the
//! output is deterministic.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{NormalizedWord, Word};

/// A bijection of `{1, …, d}`, stored 0-based: `images[i]` is the image
/// of point `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PermData", into = "PermData")]
pub struct Permutation {
    images: Vec<usize>,
}

/// JSON form: 1-based image array `[σ(1), …, σ(d)]`.
#[derive(Serialize, Deserialize, Clone)]
struct PermData(Vec<usize>);

impl From<Permutation> for PermData {
    fn from(p: Permutation) -> Self {
        PermData(p.images.iter().map(|i| i + 1).collect())
    }
}

impl TryFrom<PermData> for Permutation {
    type Error = Error;
    fn try_from(d: PermData) -> Result<Self> {
        let images: Vec<usize> = d
            .0
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| Error::InvalidPermutation("images are 1-based".into()))
            })
            .collect::<Result<_>>()?;
        Permutation::from_images(images)
    }
}

impl Permutation {
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &i in &images {
            if i >= d {
                return Err(Error::InvalidPermutation(format!(
                    "image {} out of range for degree {}",
                    i + 1,
                    d
                )));
            }
            if seen[i] {
                return Err(Error::InvalidPermutation(format!(
                    "image {} repeated",
                    i + 1
                )));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(degree: usize) -> Self {
        Permutation {
            images: (0..degree).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, point: usize) -> usize {
        self.images[point]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (i, &img) in self.images.iter().enumerate() {
            inv[img] = i;
        }
        Permutation { images: inv }
    }

    /// `(self ∘ rhs)(x) = self(rhs(x))`.
    pub fn compose(&self, rhs: &Permutation) -> Permutation {
        assert_eq!(self.degree(), rhs.degree());
        Permutation {
            images: rhs.images.iter().map(|&x| self.images[x]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &img)| i == img)
    }

    /// Cycle decomposition; each cycle starts at its smallest point and
    /// follows the orbit, cycles ordered by smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let d = self.degree();
        let mut seen = vec![false; d];
        let mut cycles = Vec::new();
        for start in 0..d {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut p = self.images[start];
            while p != start {
                seen[p] = true;
                cycle.push(p);
                p = self.images[p];
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Multiset of cycle lengths, descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(|c| c.len()).collect();
        t.sort_unstable_by(|a, b| b.cmp(a));
        t
    }

    /// True when `self(a) == b` and `self(b) == a` for distinct `a, b`
    /// (0-based points).
    pub fn has_two_cycle(&self, a: usize, b: usize) -> bool {
        a != b && self.images[a] == b && self.images[b] == a
    }

    /// Exact unitary diagonalization `P = V diag(e^{iθ}) V*` assembled
    /// cycle by cycle: an m-cycle contributes the m-th roots of unity
    /// with discrete-Fourier eigenvectors. The angles lie in (-π, π]
    /// with -1 mapped to +π, the branch used for path interpolation.
    pub fn spectral_decomposition(&self) -> (DMatrix<Complex64>, Vec<f64>) {
        let d = self.degree();
        let mut v = DMatrix::<Complex64>::zeros(d, d);
        let mut thetas = Vec::with_capacity(d);
        let mut col = 0;
        for cycle in self.cycles() {
            let m = cycle.len();
            let norm = 1.0 / (m as f64).sqrt();
            for j in 0..m {
                let theta = if 2 * j <= m {
                    2.0 * std::f64::consts::PI * j as f64 / m as f64
                } else {
                    2.0 * std::f64::consts::PI * (j as f64 / m as f64 - 1.0)
                };
                for (k, &point) in cycle.iter().enumerate() {
                    let phase = -2.0 * std::f64::consts::PI * (j * k % m) as f64 / m as f64;
                    v[(point, col)] = Complex64::from_polar(norm, phase);
                }
                thetas.push(theta);
                col += 1;
            }
        }
        (v, thetas)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        let mut wrote = false;
        for c in cycles.iter().filter(|c| c.len() > 1) {
            write!(f, "(")?;
            for (i, p) in c.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", p + 1)?;
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "id")?;
        }
        Ok(())
    }
}

/// Injective partial map on `{1, …, d}` accumulating the construction's
/// constraints; forward and backward indexes keep injectivity checks O(1).
#[derive(Debug, Clone)]
pub struct PartialPermutation {
    forward: Vec<Option<usize>>,
    backward: Vec<Option<usize>>,
}

impl PartialPermutation {
    pub fn new(degree: usize) -> Self {
        PartialPermutation {
            forward: vec![None; degree],
            backward: vec![None; degree],
        }
    }

    pub fn degree(&self) -> usize {
        self.forward.len()
    }

    pub fn get(&self, from: usize) -> Option<usize> {
        self.forward[from]
    }

    /// Requires `σ(from) = to` (0-based); identical repeats are fine,
    /// contradictions are reported. A conflict here signals a
    /// non-reduced or mis-normalized word.
    pub fn assign(&mut self, from: usize, to: usize) -> Result<()> {
        match self.forward[from] {
            Some(existing) if existing == to => return Ok(()),
            Some(existing) => {
                return Err(Error::ConstraintConflict(format!(
                    "point {} already maps to {}, cannot also map to {}",
                    from + 1,
                    existing + 1,
                    to + 1
                )));
            }
            None => {}
        }
        if let Some(prev) = self.backward[to] {
            return Err(Error::ConstraintConflict(format!(
                "point {} already has preimage {}, cannot also take {}",
                to + 1,
                prev + 1,
                from + 1
            )));
        }
        self.forward[from] = Some(to);
        self.backward[to] = Some(from);
        Ok(())
    }

    /// Fills every free slot: smallest unassigned domain point gets the
    /// smallest unused range point. Deterministic.
    pub fn complete_greedy(&self) -> Permutation {
        let d = self.degree();
        let mut images: Vec<usize> = vec![usize::MAX; d];
        let mut taken = vec![false; d];
        for i in 0..d {
            if let Some(img) = self.forward[i] {
                images[i] = img;
                taken[img] = true;
            }
        }
        let mut next_free = 0;
        for i in 0..d {
            if images[i] == usize::MAX {
                while taken[next_free] {
                    next_free += 1;
                }
                images[i] = next_free;
                taken[next_free] = true;
            }
        }
        Permutation { images }
    }
}

/// Exact eigenvalue `e^{2πi·index/order}` of a permutation matrix,
/// stored as a reduced fraction of the full turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootOfUnity {
    pub order: u64,
    pub index: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl RootOfUnity {
    pub fn new(order: u64, index: u64) -> Self {
        debug_assert!(order > 0);
        let index = index % order;
        if index == 0 {
            return RootOfUnity { order: 1, index: 0 };
        }
        let g = gcd(order, index);
        RootOfUnity {
            order: order / g,
            index: index / g,
        }
    }

    pub fn is_one(&self) -> bool {
        self.index == 0
    }

    pub fn is_minus_one(&self) -> bool {
        self.order == 2 && self.index == 1
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(
            1.0,
            2.0 * std::f64::consts::PI * self.index as f64 / self.order as f64,
        )
    }

    /// Fraction of the full turn in [0, 1).
    fn turn(&self) -> (u64, u64) {
        (self.index, self.order)
    }
}

impl PartialOrd for RootOfUnity {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RootOfUnity {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a, b) = self.turn();
        let (c, d) = other.turn();
        (a as u128 * d as u128).cmp(&(c as u128 * b as u128))
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.order, self.index) {
            (1, _) => write!(f, "1"),
            (2, _) => write!(f, "-1"),
            (o, i) => write!(f, "e^(2πi·{i}/{o})"),
        }
    }
}

/// Exact spectrum of the permutation matrix of `p`: every m-cycle
/// contributes all m-th roots of unity. Sorted multiset of `degree`
/// eigenvalues; -1 appears iff some cycle has even length.
pub fn permutation_spectrum(p: &Permutation) -> Vec<RootOfUnity> {
    let mut spectrum = Vec::with_capacity(p.degree());
    for cycle in p.cycles() {
        let m = cycle.len() as u64;
        for j in 0..m {
            spectrum.push(RootOfUnity::new(m, j));
        }
    }
    spectrum.sort_unstable();
    spectrum
}

/// 0/1 unitary with `M[p(j), j] = 1`.
pub fn perm_to_unitary(p: &Permutation) -> DMatrix<Complex64> {
    let d = p.degree();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        m[(p.apply(j), j)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Image of a word under the map sending generator `i` to `sigmas[i-1]`,
/// rightmost letter applied first.
pub fn word_on_permutations(w: &Word, sigmas: &[Permutation]) -> Result<Permutation> {
    if w.rank() as usize != sigmas.len() {
        return Err(Error::RankMismatch {
            left: w.rank(),
            right: sigmas.len() as u32,
        });
    }
    let degree = sigmas.first().map(Permutation::degree).unwrap_or(0);
    for s in sigmas {
        if s.degree() != degree {
            return Err(Error::DimensionMismatch {
                left: degree,
                right: s.degree(),
            });
        }
    }
    let inverses: Vec<Permutation> = sigmas.iter().map(Permutation::inverse).collect();
    let images = (0..degree)
        .map(|start| {
            let mut p = start;
            for k in 1..=w.len() {
                let letter = w.letter_from_right(k);
                let g = (letter.generator() - 1) as usize;
                p = if letter.sign() == 1 {
                    sigmas[g].apply(p)
                } else {
                    inverses[g].apply(p)
                };
            }
            p
        })
        .collect();
    // the image of a bijection composition is a bijection unless the
    // sigmas were inconsistent, which from_images would catch
    Permutation::from_images(images)
}

/// Witness that the word's image contains the two-cycle `(1, l+1)` and
/// hence has -1 in its spectrum. `word` is the normalized core actually
/// used; `conjugator`/`conjugated` carry the normalization provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermRepCertificate {
    pub word: Word,
    pub original: Word,
    pub conjugator: Word,
    pub conjugated: bool,
    pub dimension: usize,
    pub sigmas: Vec<Permutation>,
    /// 1-based pair swapped by the word image.
    pub two_cycle: (usize, usize),
}

impl PermRepCertificate {
    /// Recomputes the word image from the stored permutations.
    pub fn word_image(&self) -> Result<Permutation> {
        word_on_permutations(&self.word, &self.sigmas)
    }

    /// Checks the whole claim from raw data: the stored permutations
    /// send the core to a permutation with the recorded two-cycle, -1
    /// is in the exact spectrum, and the conjugation provenance rebuilds
    /// the original word.
    pub fn verify(&self) -> Result<()> {
        let phi = self.word_image()?;
        let (a, b) = self.two_cycle;
        if !phi.has_two_cycle(a - 1, b - 1) {
            return Err(Error::TwoCycleNotRealized {
                degree: self.dimension,
                point: b,
            });
        }
        if !permutation_spectrum(&phi).iter().any(RootOfUnity::is_minus_one) {
            return Err(Error::TwoCycleNotRealized {
                degree: self.dimension,
                point: b,
            });
        }
        let rebuilt = NormalizedWord {
            original: self.original.clone(),
            core: self.word.clone(),
            conjugator: self.conjugator.clone(),
            conjugated: self.conjugated,
        }
        .reconstruct()?;
        let expected = if self.conjugated {
            self.original.inverse()
        } else {
            self.original.clone()
        };
        if rebuilt != expected {
            return Err(Error::InvalidPermutation(
                "conjugation provenance does not rebuild the original word".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the degree-2l certificate for a reduced, balanced, nontrivial
/// word (l is the length of the normalized core). Constraint conflicts
/// cannot occur for valid inputs; they surface only when the
/// reducedness invariant was bypassed.
pub fn build_perm_rep(w: &Word) -> Result<PermRepCertificate> {
    let normalized = w.normalize_endpoints()?;
    let degree = 2 * normalized.core.len();
    build_from_normalized(normalized, degree)
}

/// Same constraint scheme at an arbitrary target degree >= l+1. The
/// construction is only guaranteed at 2l; for smaller degrees the
/// two-cycle is checked after the fact and its absence is an error.
pub fn build_perm_rep_with_degree(w: &Word, degree: usize) -> Result<PermRepCertificate> {
    let normalized = w.normalize_endpoints()?;
    let minimum = normalized.core.len() + 1;
    if degree < minimum {
        return Err(Error::DegreeTooSmall { degree, minimum });
    }
    build_from_normalized(normalized, degree)
}

fn build_from_normalized(normalized: NormalizedWord, degree: usize) -> Result<PermRepCertificate> {
    let core = &normalized.core;
    let ell = core.len();
    let rank = core.rank() as usize;
    let mut partials: Vec<PartialPermutation> =
        (0..rank).map(|_| PartialPermutation::new(degree)).collect();

    // constraint on σ_g: with ε=+1 require σ_g(from)=to, with ε=-1 the
    // inverse must push from→to, i.e. σ_g(to)=from
    let mut constrain = |g: u32, sign: i8, from: usize, to: usize| -> Result<()> {
        let p = &mut partials[(g - 1) as usize];
        if sign == 1 {
            p.assign(from - 1, to - 1)
        } else {
            p.assign(to - 1, from - 1)
        }
    };

    // first track: 1 → 2 → … → l+1
    for k in 1..=ell {
        let letter = core.letter_from_right(k);
        constrain(letter.generator(), letter.sign(), k, k + 1)?;
    }
    // second track: l+1 → l+2 → … (as far as the degree allows)
    for k in 1..ell {
        if ell + k + 1 <= degree {
            let letter = core.letter_from_right(k);
            constrain(letter.generator(), letter.sign(), ell + k, ell + k + 1)?;
        }
    }
    // closing step: the last letter returns the top point to 1
    let last = core.letter_from_right(ell);
    constrain(last.generator(), last.sign(), degree, 1)?;

    let sigmas: Vec<Permutation> = partials.iter().map(PartialPermutation::complete_greedy).collect();
    let phi = word_on_permutations(core, &sigmas)?;
    if !phi.has_two_cycle(0, ell) {
        return Err(Error::TwoCycleNotRealized {
            degree,
            point: ell + 1,
        });
    }
    Ok(PermRepCertificate {
        word: core.clone(),
        original: normalized.original,
        conjugator: normalized.conjugator,
        conjugated: normalized.conjugated,
        dimension: degree,
        sigmas,
        two_cycle: (1, ell + 1),
    })
}
