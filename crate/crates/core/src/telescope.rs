//! Desk-scale model of finite matrix-fiber mapping telescopes.
//!
//! Elements are finite sums of (scalar profile) · (fixed matrix from
//! the smallest fiber), a form every construction here needs; the fiber
//! constraint is then automatic. Profiles are piecewise functions from
//! a small catalog (linear, constant, exponential approach) whose
//! segments are monotone, so suprema of single-term elements are read
//! off segment endpoints; sums and products fall back to sampling plus
//! golden-section refinement. The point at infinity is explicit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serial::{matrix_to_rows, rows_to_matrix};
use crate::unitary::operator_norm;

/// Continuity slack for profile validation.
const CONTINUITY_TOL: f64 = 1e-9;
/// Golden-section refinement width.
const GOLDEN_TOL: f64 = 1e-9;
/// Horizon beyond the last breakpoint when searching unbounded tails;
/// exponential tails are flat to ~1e-21 past it.
const TAIL_HORIZON: f64 = 48.0;

/// How each fiber embeds into the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingTag {
    /// `a ↦ a ⊕ 0`.
    Corner,
    /// `a ↦ a ⊕ a`; requires doubling dimensions.
    Diagonal,
}

/// Strictly increasing matrix-fiber sizes with the embedding used
/// between consecutive levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShapeData", into = "ShapeData")]
pub struct TelescopeShape {
    dims: Vec<u32>,
    embedding: EmbeddingTag,
}

#[derive(Serialize, Deserialize, Clone)]
struct ShapeData {
    dims: Vec<u32>,
    embedding: EmbeddingTag,
}

impl From<TelescopeShape> for ShapeData {
    fn from(s: TelescopeShape) -> Self {
        ShapeData {
            dims: s.dims,
            embedding: s.embedding,
        }
    }
}

impl TryFrom<ShapeData> for TelescopeShape {
    type Error = Error;
    fn try_from(d: ShapeData) -> Result<Self> {
        TelescopeShape::new(d.dims, d.embedding)
    }
}

impl TelescopeShape {
    pub fn new(dims: Vec<u32>, embedding: EmbeddingTag) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("need at least one fiber".into()));
        }
        if dims[0] == 0 {
            return Err(Error::InvalidShape("fiber dimensions must be positive".into()));
        }
        for pair in dims.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidShape(format!(
                    "dimensions must strictly increase, got {} after {}",
                    pair[1], pair[0]
                )));
            }
            if embedding == EmbeddingTag::Diagonal && pair[1] != 2 * pair[0] {
                return Err(Error::InvalidShape(format!(
                    "diagonal embedding needs doubling dimensions, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        Ok(TelescopeShape { dims, embedding })
    }

    pub fn corner(dims: Vec<u32>) -> Result<Self> {
        TelescopeShape::new(dims, EmbeddingTag::Corner)
    }

    pub fn diagonal(dims: Vec<u32>) -> Result<Self> {
        TelescopeShape::new(dims, EmbeddingTag::Diagonal)
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn embedding(&self) -> EmbeddingTag {
        self.embedding
    }

    /// Number of levels N.
    pub fn levels(&self) -> usize {
        self.dims.len()
    }

    pub fn base_dimension(&self) -> u32 {
        self.dims[0]
    }

    pub fn top_dimension(&self) -> u32 {
        *self.dims.last().expect("nonempty dims")
    }

    /// Embeds a base-fiber matrix into the top fiber.
    pub fn embed(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n1 = self.base_dimension() as usize;
        let nn = self.top_dimension() as usize;
        let mut big = DMatrix::<Complex64>::zeros(nn, nn);
        match self.embedding {
            EmbeddingTag::Corner => {
                big.view_mut((0, 0), (n1, n1)).copy_from(b);
            }
            EmbeddingTag::Diagonal => {
                let copies = nn / n1;
                for k in 0..copies {
                    big.view_mut((k * n1, k * n1), (n1, n1)).copy_from(b);
                }
            }
        }
        big
    }
}

/// One piece of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SegmentForm {
    Constant { value: f64 },
    Linear { intercept: f64, slope: f64 },
    /// `scale · (1 - e^{shift - t})`.
    ExpApproach { scale: f64, shift: f64 },
    /// Pointwise product, produced by element multiplication.
    Product {
        left: Box<SegmentForm>,
        right: Box<SegmentForm>,
    },
}

impl SegmentForm {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            SegmentForm::Constant { value } => *value,
            SegmentForm::Linear { intercept, slope } => intercept + slope * t,
            SegmentForm::ExpApproach { scale, shift } => scale * (1.0 - (shift - t).exp()),
            SegmentForm::Product { left, right } => left.value(t) * right.value(t),
        }
    }

    /// Limit as t → ∞, when finite.
    pub fn limit_at_infinity(&self) -> Option<f64> {
        match self {
            SegmentForm::Constant { value } => Some(*value),
            SegmentForm::Linear { intercept, slope } => {
                if *slope == 0.0 {
                    Some(*intercept)
                } else {
                    None
                }
            }
            SegmentForm::ExpApproach { scale, .. } => Some(*scale),
            SegmentForm::Product { left, right } => {
                Some(left.limit_at_infinity()? * right.limit_at_infinity()?)
            }
        }
    }

    /// Catalog atoms are monotone on any interval, so their absolute
    /// value on a segment peaks at an endpoint.
    fn is_atom(&self) -> bool {
        !matches!(self, SegmentForm::Product { .. })
    }
}

/// Interval `(start, end]`, or `(start, ∞)` when `end` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: Option<f64>,
    pub form: SegmentForm,
}

/// Piecewise scalar profile on `(0, ∞]` vanishing at 0, with an
/// explicit value at ∞ matching the tail's limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileData", into = "ProfileData")]
pub struct Profile {
    segments: Vec<Segment>,
    value_at_infinity: f64,
}

#[derive(Serialize, Deserialize, Clone)]
struct ProfileData {
    segments: Vec<Segment>,
    value_at_infinity: f64,
}

impl From<Profile> for ProfileData {
    fn from(p: Profile) -> Self {
        ProfileData {
            segments: p.segments,
            value_at_infinity: p.value_at_infinity,
        }
    }
}

impl TryFrom<ProfileData> for Profile {
    type Error = Error;
    fn try_from(d: ProfileData) -> Result<Self> {
        Profile::new(d.segments, d.value_at_infinity)
    }
}

impl Profile {
    pub fn new(segments: Vec<Segment>, value_at_infinity: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidProfile("no segments".into()));
        }
        if segments[0].start != 0.0 {
            return Err(Error::InvalidProfile("first segment must start at 0".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            let is_last = i + 1 == segments.len();
            match seg.end {
                Some(end) => {
                    if is_last {
                        return Err(Error::InvalidProfile(
                            "last segment must extend to infinity".into(),
                        ));
                    }
                    if !(end > seg.start) {
                        return Err(Error::InvalidProfile(format!(
                            "segment end {} not after start {}",
                            end, seg.start
                        )));
                    }
                    if segments[i + 1].start != end {
                        return Err(Error::InvalidProfile(format!(
                            "gap between segment end {} and next start {}",
                            end,
                            segments[i + 1].start
                        )));
                    }
                    let here = seg.form.value(end);
                    let there = segments[i + 1].form.value(end);
                    if (here - there).abs() > CONTINUITY_TOL * here.abs().max(1.0) {
                        return Err(Error::InvalidProfile(format!(
                            "discontinuity at {}: {} vs {}",
                            end, here, there
                        )));
                    }
                }
                None => {
                    if !is_last {
                        return Err(Error::InvalidProfile(
                            "only the last segment may be unbounded".into(),
                        ));
                    }
                }
            }
        }
        let at_zero = segments[0].form.value(0.0);
        if at_zero.abs() > CONTINUITY_TOL {
            return Err(Error::InvalidProfile(format!(
                "profile must vanish at 0, got {at_zero}"
            )));
        }
        let tail = segments.last().expect("nonempty");
        let limit = tail.form.limit_at_infinity().ok_or_else(|| {
            Error::InvalidProfile("unbounded tail must have a finite limit".into())
        })?;
        if (limit - value_at_infinity).abs() > CONTINUITY_TOL * limit.abs().max(1.0) {
            return Err(Error::InvalidProfile(format!(
                "tail limit {limit} does not match value at infinity {value_at_infinity}"
            )));
        }
        Ok(Profile {
            segments,
            value_at_infinity,
        })
    }

    /// Constant-zero profile.
    pub fn zero() -> Self {
        Profile {
            segments: vec![Segment {
                start: 0.0,
                end: None,
                form: SegmentForm::Constant { value: 0.0 },
            }],
            value_at_infinity: 0.0,
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn at_infinity(&self) -> f64 {
        self.value_at_infinity
    }

    fn form_at(&self, t: f64) -> &SegmentForm {
        for seg in &self.segments {
            match seg.end {
                Some(end) if t <= end => return &seg.form,
                None => return &seg.form,
                _ => {}
            }
        }
        &self.segments.last().expect("nonempty").form
    }

    /// Value at a finite point; `f64::INFINITY` reads the stored value.
    pub fn value(&self, t: f64) -> f64 {
        if t.is_infinite() {
            return self.value_at_infinity;
        }
        self.form_at(t).value(t)
    }

    /// Interior breakpoints (strictly positive segment starts).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    fn all_atoms(&self) -> bool {
        self.segments.iter().all(|s| s.form.is_atom())
    }

    /// Pointwise product, segments refined to the union of breakpoints.
    pub fn product(&self, other: &Profile) -> Profile {
        let mut cuts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .chain(other.breakpoints())
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut segments = Vec::with_capacity(cuts.len() + 1);
        let mut start = 0.0;
        for &cut in &cuts {
            let probe = 0.5 * (start + cut);
            segments.push(Segment {
                start,
                end: Some(cut),
                form: SegmentForm::Product {
                    left: Box::new(self.form_at(probe).clone()),
                    right: Box::new(other.form_at(probe).clone()),
                },
            });
            start = cut;
        }
        let probe = start + 1.0;
        segments.push(Segment {
            start,
            end: None,
            form: SegmentForm::Product {
                left: Box::new(self.form_at(probe).clone()),
                right: Box::new(other.form_at(probe).clone()),
            },
        });
        Profile {
            segments,
            value_at_infinity: self.value_at_infinity * other.value_at_infinity,
        }
    }
}

/// Sub-interval `(lo, hi]` of `(0, ∞]`; `hi = f64::INFINITY` includes
/// the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0) || !(hi > lo) {
            return Err(Error::InvalidWindow(format!("bad window ({lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    /// `(0, t]`.
    pub fn up_to(t: f64) -> Result<Self> {
        Window::new(0.0, t)
    }

    /// `(0, ∞]`.
    pub fn full() -> Self {
        Window {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn includes_infinity(&self) -> bool {
        self.hi.is_infinite()
    }
}

/// Nondecreasing seminorm values per level plus the total norm
/// (supremum including the point at infinity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormSequence {
    pub values: Vec<f64>,
    pub total_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TermData {
    profile: Profile,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Finite sum of (scalar profile) · (fixed base-fiber matrix) on a
/// telescope shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementData", into = "ElementData")]
pub struct TelescopeElement {
    shape: TelescopeShape,
    terms: Vec<(Profile, DMatrix<Complex64>)>,
}

#[derive(Serialize, Deserialize, Clone)]
struct ElementData {
    shape: TelescopeShape,
    terms: Vec<TermData>,
}

impl From<TelescopeElement> for ElementData {
    fn from(e: TelescopeElement) -> Self {
        ElementData {
            shape: e.shape,
            terms: e
                .terms
                .iter()
                .map(|(p, b)| TermData {
                    profile: p.clone(),
                    matrix: matrix_to_rows(b),
                })
                .collect(),
        }
    }
}

impl TryFrom<ElementData> for TelescopeElement {
    type Error = Error;
    fn try_from(d: ElementData) -> Result<Self> {
        let terms = d
            .terms
            .iter()
            .map(|t| Ok((t.profile.clone(), rows_to_matrix(&t.matrix)?)))
            .collect::<Result<Vec<_>>>()?;
        TelescopeElement::new(d.shape, terms)
    }
}

impl TelescopeElement {
    pub fn new(shape: TelescopeShape, terms: Vec<(Profile, DMatrix<Complex64>)>) -> Result<Self> {
        let n1 = shape.base_dimension() as usize;
        let levels = shape.levels() as f64;
        for (profile, b) in &terms {
            if b.nrows() != n1 || b.ncols() != n1 {
                return Err(Error::InvalidShape(format!(
                    "term matrix is {}x{}, base fiber is {}x{}",
                    b.nrows(),
                    b.ncols(),
                    n1,
                    n1
                )));
            }
            for cut in profile.breakpoints() {
                if cut > levels + CONTINUITY_TOL {
                    return Err(Error::InvalidProfile(format!(
                        "breakpoint {cut} beyond the top level {levels}"
                    )));
                }
            }
        }
        Ok(TelescopeElement { shape, terms })
    }

    pub fn single(shape: TelescopeShape, profile: Profile, b: DMatrix<Complex64>) -> Result<Self> {
        TelescopeElement::new(shape, vec![(profile, b)])
    }

    pub fn shape(&self) -> &TelescopeShape {
        &self.shape
    }

    pub fn terms(&self) -> &[(Profile, DMatrix<Complex64>)] {
        &self.terms
    }

    /// Fiber value at `t ∈ (0, ∞]` embedded into the top fiber.
    pub fn eval_at(&self, t: f64) -> Result<DMatrix<Complex64>> {
        Ok(self.shape.embed(&self.base_value(t)?))
    }

    fn base_value(&self, t: f64) -> Result<DMatrix<Complex64>> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::PointOutOfDomain(t));
        }
        let n1 = self.shape.base_dimension() as usize;
        let mut sum = DMatrix::<Complex64>::zeros(n1, n1);
        for (p, b) in &self.terms {
            sum += b * Complex64::new(p.value(t), 0.0);
        }
        Ok(sum)
    }

    /// `‖f(t)‖`; embeddings preserve the norm, so this is computed in
    /// the base fiber.
    pub fn norm_at(&self, t: f64) -> Result<f64> {
        Ok(operator_norm(&self.base_value(t)?))
    }

    /// Scales every term matrix.
    pub fn scale(&self, factor: f64) -> Self {
        TelescopeElement {
            shape: self.shape.clone(),
            terms: self
                .terms
                .iter()
                .map(|(p, b)| (p.clone(), b * Complex64::new(factor, 0.0)))
                .collect(),
        }
    }

    /// Pointwise sum; shapes must agree.
    pub fn add(&self, other: &TelescopeElement) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::InvalidShape("cannot add elements on different shapes".into()));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        TelescopeElement::new(self.shape.clone(), terms)
    }

    /// Pointwise product; profiles multiply piecewise and matrices
    /// multiply in the base fiber.
    pub fn mul(&self, other: &TelescopeElement) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::InvalidShape("cannot multiply elements on different shapes".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (p, b) in &self.terms {
            for (q, c) in &other.terms {
                terms.push((p.product(q), b * c));
            }
        }
        TelescopeElement::new(self.shape.clone(), terms)
    }

    /// Supremum of `‖f(t)‖` over the window. Single-term elements with
    /// catalog profiles are evaluated at segment endpoints; anything
    /// else is sampled per piece and refined by golden section.
    pub fn sup_norm(&self, window: Window) -> f64 {
        let lo = window.lo();
        let hi = window.hi();
        let mut sup: f64 = 0.0;
        if window.includes_infinity() {
            sup = operator_norm(&self.infinity_base_value());
        }
        // piece boundaries: union of term breakpoints inside the window
        let mut cuts: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|(p, _)| p.breakpoints())
            .filter(|&c| c > lo && c < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let analytic = self.terms.len() == 1 && self.terms[0].0.all_atoms();
        if analytic {
            let (profile, b) = &self.terms[0];
            let bnorm = operator_norm(b);
            let mut start = lo;
            for &cut in &cuts {
                sup = sup.max(bnorm * profile.value(start).abs());
                sup = sup.max(bnorm * profile.value(cut).abs());
                start = cut;
            }
            sup = sup.max(bnorm * profile.value(start).abs());
            if hi.is_finite() {
                sup = sup.max(bnorm * profile.value(hi).abs());
            } else {
                let tail_limit = profile
                    .segments()
                    .last()
                    .and_then(|s| s.form.limit_at_infinity())
                    .unwrap_or(profile.at_infinity());
                sup = sup.max(bnorm * tail_limit.abs());
            }
            return sup;
        }

        let norm_of = |t: f64| self.norm_at(t).unwrap_or(0.0);
        let mut start = lo;
        for &cut in &cuts {
            sup = sup.max(numeric_max(&norm_of, start, cut));
            start = cut;
        }
        let last_hi = if hi.is_finite() { hi } else { start + TAIL_HORIZON };
        sup = sup.max(numeric_max(&norm_of, start, last_hi));
        sup
    }

    fn infinity_base_value(&self) -> DMatrix<Complex64> {
        let n1 = self.shape.base_dimension() as usize;
        let mut sum = DMatrix::<Complex64>::zeros(n1, n1);
        for (p, b) in &self.terms {
            sum += b * Complex64::new(p.at_infinity(), 0.0);
        }
        sum
    }

    /// Per-level seminorms `sup over (0, k]` plus the total norm over
    /// `(0, ∞]`. Valid when the fibers are simple and distinct, which
    /// the strictly increasing shape guarantees.
    pub fn seminorm_sequence(&self) -> SeminormSequence {
        let values = (1..=self.shape.levels())
            .map(|k| self.sup_norm(Window::up_to(k as f64).expect("positive level")))
            .collect();
        SeminormSequence {
            values,
            total_norm: self.sup_norm(Window::full()),
        }
    }
}

/// Dense sample followed by golden-section refinement around the best
/// bracket; `f` is evaluated on `[a, b]` including both ends.
fn numeric_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    debug_assert!(b > a);
    let n = 64usize;
    let width = b - a;
    let mut best_i = 0;
    let mut best = f64::MIN;
    for i in 0..=n {
        let t = a + width * (i as f64) / (n as f64);
        let v = f(t);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let left = a + width * ((best_i.saturating_sub(1)) as f64) / (n as f64);
    let right = a + width * ((best_i + 1).min(n) as f64) / (n as f64);
    best.max(golden_max(f, left, right))
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

fn e11(n: usize) -> DMatrix<Complex64> {
    let mut b = DMatrix::<Complex64>::zeros(n, n);
    b[(0, 0)] = Complex64::new(1.0, 0.0);
    b
}

/// Element whose seminorm sequence is exactly `lambdas` with total norm
/// `lambda_total`: piecewise-linear through `(k, λ_k)`, then constant,
/// or a strictly increasing exponential tail when `strict_at_infinity`
/// asks for a total norm attained only at infinity.
pub fn construct_prescribed(
    shape: &TelescopeShape,
    lambdas: &[f64],
    strict_at_infinity: bool,
    lambda_total: Option<f64>,
) -> Result<TelescopeElement> {
    let n = shape.levels();
    if lambdas.len() != n {
        return Err(Error::InvalidSequence(format!(
            "expected {n} values for this shape, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::InvalidSequence("values must be nonnegative".into()));
    }
    if lambdas.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::InvalidSequence("values must be nondecreasing".into()));
    }
    let last = *lambdas.last().expect("nonempty");
    let mut segments = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for (k, &lam) in lambdas.iter().enumerate() {
        let slope = lam - prev;
        let intercept = prev - slope * k as f64;
        segments.push(Segment {
            start: k as f64,
            end: Some((k + 1) as f64),
            form: SegmentForm::Linear { intercept, slope },
        });
        prev = lam;
    }
    let value_at_infinity;
    if strict_at_infinity {
        let total = lambda_total.ok_or_else(|| {
            Error::InvalidSequence("strict variant needs a total norm".into())
        })?;
        if !(total > last) {
            return Err(Error::InvalidSequence(format!(
                "strict total norm {total} must exceed the last value {last}"
            )));
        }
        // total·(1 - e^{shift - t}) equals `last` at t = N and climbs to
        // `total` only at infinity
        let shift = n as f64 + (1.0 - last / total).ln();
        segments.push(Segment {
            start: n as f64,
            end: None,
            form: SegmentForm::ExpApproach {
                scale: total,
                shift,
            },
        });
        value_at_infinity = total;
    } else {
        if let Some(total) = lambda_total {
            if total != last {
                return Err(Error::InvalidSequence(format!(
                    "non-strict total norm {total} must equal the last value {last}"
                )));
            }
        }
        segments.push(Segment {
            start: n as f64,
            end: None,
            form: SegmentForm::Constant { value: last },
        });
        value_at_infinity = last;
    }
    let profile = Profile::new(segments, value_at_infinity)?;
    TelescopeElement::single(shape.clone(), profile, e11(shape.base_dimension() as usize))
}

/// `f(t) = (1 - e^{-t}) · e11`: every finite window's supremum stays
/// strictly below the total norm 1, attained only at infinity.
pub fn fdi_witness(shape: &TelescopeShape) -> TelescopeElement {
    let profile = Profile {
        segments: vec![Segment {
            start: 0.0,
            end: None,
            form: SegmentForm::ExpApproach {
                scale: 1.0,
                shift: 0.0,
            },
        }],
        value_at_infinity: 1.0,
    };
    TelescopeElement::single(shape.clone(), profile, e11(shape.base_dimension() as usize))
        .expect("witness profile is valid on any shape")
}

/// Pair whose members attain their norms at `t = n` while the sum
/// vanishes on `(0, 2n]` and creeps up to 1 only at infinity.
pub fn counterexample_additive(
    shape: &TelescopeShape,
    n: u32,
) -> Result<(TelescopeElement, TelescopeElement)> {
    if n < 1 {
        return Err(Error::InvalidShape("need n >= 1".into()));
    }
    if (2 * n) as usize > shape.levels() {
        return Err(Error::InvalidShape(format!(
            "profiles reach t = {} but the shape has {} levels",
            2 * n,
            shape.levels()
        )));
    }
    let nf = n as f64;
    let f1 = Profile::new(
        vec![
            Segment {
                start: 0.0,
                end: Some(nf),
                form: SegmentForm::Linear {
                    intercept: 0.0,
                    slope: 2.0 / nf,
                },
            },
            Segment {
                start: nf,
                end: Some(2.0 * nf),
                form: SegmentForm::Linear {
                    intercept: 4.0,
                    slope: -2.0 / nf,
                },
            },
            Segment {
                start: 2.0 * nf,
                end: None,
                form: SegmentForm::ExpApproach {
                    scale: 1.0,
                    shift: 2.0 * nf,
                },
            },
        ],
        1.0,
    )?;
    let f2 = Profile::new(
        vec![
            Segment {
                start: 0.0,
                end: Some(nf),
                form: SegmentForm::Linear {
                    intercept: 0.0,
                    slope: -2.0 / nf,
                },
            },
            Segment {
                start: nf,
                end: Some(2.0 * nf),
                form: SegmentForm::Linear {
                    intercept: -4.0,
                    slope: 2.0 / nf,
                },
            },
            Segment {
                start: 2.0 * nf,
                end: None,
                form: SegmentForm::Constant { value: 0.0 },
            },
        ],
        0.0,
    )?;
    let b = e11(shape.base_dimension() as usize);
    Ok((
        TelescopeElement::single(shape.clone(), f1, b.clone())?,
        TelescopeElement::single(shape.clone(), f2, b)?,
    ))
}

/// Pair with `‖f_i‖ = ‖f_i(n_i)‖ = 1` whose product has norm below 1 at
/// every finite point and exactly 1 at infinity.
pub fn counterexample_multiplicative(
    shape: &TelescopeShape,
    n1: u32,
    n2: u32,
) -> Result<(TelescopeElement, TelescopeElement)> {
    if n1 < 1 || n2 <= n1 {
        return Err(Error::InvalidShape("need 1 <= n1 < n2".into()));
    }
    if n2 as usize > shape.levels() {
        return Err(Error::InvalidShape(format!(
            "profiles reach t = {} but the shape has {} levels",
            n2,
            shape.levels()
        )));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let f1 = Profile::new(
        vec![
            Segment {
                start: 0.0,
                end: Some(a),
                form: SegmentForm::Linear {
                    intercept: 0.0,
                    slope: 1.0 / a,
                },
            },
            Segment {
                start: a,
                end: Some(b),
                form: SegmentForm::Linear {
                    intercept: b / (b - a),
                    slope: -1.0 / (b - a),
                },
            },
            Segment {
                start: b,
                end: None,
                form: SegmentForm::ExpApproach {
                    scale: 1.0,
                    shift: b,
                },
            },
        ],
        1.0,
    )?;
    let f2 = Profile::new(
        vec![
            Segment {
                start: 0.0,
                end: Some(b),
                form: SegmentForm::Linear {
                    intercept: 0.0,
                    slope: 1.0 / b,
                },
            },
            Segment {
                start: b,
                end: None,
                form: SegmentForm::Constant { value: 1.0 },
            },
        ],
        1.0,
    )?;
    let base = e11(shape.base_dimension() as usize);
    Ok((
        TelescopeElement::single(shape.clone(), f1, base.clone())?,
        TelescopeElement::single(shape.clone(), f2, base)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape4() -> TelescopeShape {
        TelescopeShape::corner(vec![1, 2, 3, 4]).unwrap()
    }

    fn ramp_then_flat() -> TelescopeElement {
        // linear ramp to 1 on (0,1], constant after
        let profile = Profile::new(
            vec![
                Segment {
                    start: 0.0,
                    end: Some(1.0),
                    form: SegmentForm::Linear {
                        intercept: 0.0,
                        slope: 1.0,
                    },
                },
                Segment {
                    start: 1.0,
                    end: None,
                    form: SegmentForm::Constant { value: 1.0 },
                },
            ],
            1.0,
        )
        .unwrap();
        TelescopeElement::single(shape4(), profile, e11(1)).unwrap()
    }

    #[test]
    fn eval_at_ramp() {
        let f = ramp_then_flat();
        let m = f.eval_at(0.5).unwrap();
        assert_eq!(m.nrows(), 4);
        assert!((m[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((f.norm_at(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(f.eval_at(0.0).is_err());
        assert!(f.eval_at(-1.0).is_err());
    }

    #[test]
    fn eval_at_infinity_gives_the_limit_matrix() {
        let shape = shape4();
        let f = fdi_witness(&shape);
        let m = f.eval_at(f64::INFINITY).unwrap();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_and_diagonal_embeddings_share_norms() {
        let corner = TelescopeShape::corner(vec![2, 4, 8]).unwrap();
        let diagonal = TelescopeShape::diagonal(vec![2, 4, 8]).unwrap();
        let mut b = DMatrix::<Complex64>::zeros(2, 2);
        b[(0, 0)] = Complex64::new(0.7, 0.0);
        b[(1, 0)] = Complex64::new(0.0, -1.3);
        let profile = Profile::new(
            vec![Segment {
                start: 0.0,
                end: None,
                form: SegmentForm::ExpApproach {
                    scale: 2.0,
                    shift: 0.0,
                },
            }],
            2.0,
        )
        .unwrap();
        let fc = TelescopeElement::single(corner, profile.clone(), b.clone()).unwrap();
        let fd = TelescopeElement::single(diagonal, profile, b).unwrap();
        let sc = fc.seminorm_sequence();
        let sd = fd.seminorm_sequence();
        for (a, b) in sc.values.iter().zip(&sd.values) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!((sc.total_norm - sd.total_norm).abs() <= 1e-12);
        // at any point the two embedded values have the same norm
        assert!(
            (operator_norm(&fc.eval_at(2.5).unwrap()) - operator_norm(&fd.eval_at(2.5).unwrap())).abs()
                <= 1e-12
        );
    }

    #[test]
    fn sup_norm_monotone_profile_reads_right_endpoint() {
        let f = ramp_then_flat();
        assert!((f.sup_norm(Window::up_to(0.5).unwrap()) - 0.5).abs() < 1e-15);
        assert!((f.sup_norm(Window::up_to(3.0).unwrap()) - 1.0).abs() < 1e-15);
        assert_eq!(f.sup_norm(Window::full()), 1.0);
    }

    #[test]
    fn sup_norm_of_zero_element() {
        let f = TelescopeElement::single(shape4(), Profile::zero(), e11(1)).unwrap();
        assert_eq!(f.sup_norm(Window::full()), 0.0);
    }

    #[test]
    fn prescribed_sequence_round_trip() {
        let shape = TelescopeShape::corner(vec![2, 4, 8]).unwrap();
        let f = construct_prescribed(&shape, &[1.0, 2.0, 3.0], false, None).unwrap();
        let seq = f.seminorm_sequence();
        assert_eq!(seq.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(seq.total_norm, 3.0);
    }

    #[test]
    fn prescribed_all_zero_sequence() {
        let shape = TelescopeShape::corner(vec![1, 2]).unwrap();
        let f = construct_prescribed(&shape, &[0.0, 0.0], false, None).unwrap();
        let seq = f.seminorm_sequence();
        assert_eq!(seq.values, vec![0.0, 0.0]);
        assert_eq!(seq.total_norm, 0.0);
    }

    #[test]
    fn prescribed_strict_tail_keeps_finite_sups_below_total() {
        let shape = TelescopeShape::corner(vec![1, 2]).unwrap();
        let f = construct_prescribed(&shape, &[1.0, 1.0], true, Some(2.0)).unwrap();
        let seq = f.seminorm_sequence();
        assert!((seq.values[0] - 1.0).abs() <= 1e-12);
        assert!((seq.values[1] - 1.0).abs() <= 1e-12);
        assert!((seq.total_norm - 2.0).abs() <= 1e-12);
        for t in [3.0, 5.0, 10.0, 40.0] {
            let sup = f.sup_norm(Window::up_to(t).unwrap());
            assert!(sup < 2.0, "sup over (0,{t}] = {sup} not < 2");
        }
    }

    #[test]
    fn prescribed_rejects_bad_input() {
        let shape = TelescopeShape::corner(vec![1, 2]).unwrap();
        assert!(construct_prescribed(&shape, &[2.0, 1.0], false, None).is_err());
        assert!(construct_prescribed(&shape, &[-1.0, 1.0], false, None).is_err());
        assert!(construct_prescribed(&shape, &[1.0], false, None).is_err());
        assert!(construct_prescribed(&shape, &[1.0, 1.0], true, Some(1.0)).is_err());
        assert!(construct_prescribed(&shape, &[1.0, 1.0], true, None).is_err());
    }

    #[test]
    fn fdi_witness_gap() {
        let f = fdi_witness(&shape4());
        for t in [1.0, 5.0, 20.0] {
            let sup = f.sup_norm(Window::up_to(t).unwrap());
            let expected = 1.0 - (-t).exp();
            assert!((sup - expected).abs() <= 1e-12, "T={t}: {sup} vs {expected}");
            assert!(sup < 1.0);
        }
        let seq = f.seminorm_sequence();
        assert!(seq.values.iter().all(|v| *v < seq.total_norm));
        assert_eq!(seq.total_norm, 1.0);
    }

    #[test]
    fn fdi_witness_scales_homogeneously() {
        let f = fdi_witness(&shape4()).scale(3.0);
        for t in [1.0, 5.0] {
            let sup = f.sup_norm(Window::up_to(t).unwrap());
            assert!((sup - 3.0 * (1.0 - (-t).exp())).abs() <= 1e-12);
        }
        assert!((f.seminorm_sequence().total_norm - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn additive_counterexample_contract() {
        let shape = shape4();
        let (f1, f2) = counterexample_additive(&shape, 2).unwrap();
        assert!((f1.norm_at(2.0).unwrap() - 2.0).abs() <= 1e-12);
        assert!((f2.norm_at(2.0).unwrap() - 2.0).abs() <= 1e-12);
        assert!((f1.sup_norm(Window::full()) - 2.0).abs() <= 1e-12);
        assert!((f2.sup_norm(Window::full()) - 2.0).abs() <= 1e-12);
        assert_eq!(f2.terms()[0].0.at_infinity(), 0.0);

        let sum = f1.add(&f2).unwrap();
        for t in [0.5, 1.0, 2.5, 4.0] {
            assert!(sum.norm_at(t).unwrap() <= 1e-12, "sum nonzero at {t}");
        }
        for big_t in [6.0, 10.0] {
            let sup = sum.sup_norm(Window::up_to(big_t).unwrap());
            let expected = 1.0 - (4.0 - big_t).exp();
            assert!((sup - expected).abs() <= 1e-9, "T={big_t}: {sup} vs {expected}");
        }
        assert!((sum.sup_norm(Window::full()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn multiplicative_counterexample_contract() {
        let shape = TelescopeShape::corner(vec![1, 2]).unwrap();
        let (f1, f2) = counterexample_multiplicative(&shape, 1, 2).unwrap();
        assert!((f1.norm_at(1.0).unwrap() - 1.0).abs() <= 1e-12);
        assert!((f2.norm_at(2.0).unwrap() - 1.0).abs() <= 1e-12);
        assert!((f1.sup_norm(Window::full()) - 1.0).abs() <= 1e-12);
        assert!((f2.sup_norm(Window::full()) - 1.0).abs() <= 1e-12);

        let prod = f1.mul(&f2).unwrap();
        // (f1 f2)(n1) = (1/n2) b² for n1 = 1, n2 = 2
        assert!((prod.norm_at(1.0).unwrap() - 0.5).abs() <= 1e-12);
        assert!((prod.sup_norm(Window::full()) - 1.0).abs() <= 1e-12);
        for big_t in [4.0, 10.0] {
            let sup = prod.sup_norm(Window::up_to(big_t).unwrap());
            let bound = 1.0 - (2.0 - big_t).exp();
            assert!(sup <= bound + 1e-9, "T={big_t}: {sup} > {bound}");
            assert!(sup < 1.0);
        }
    }

    #[test]
    fn multiplicative_interior_maximum_is_found() {
        // n2 > 2 n1 puts the product's hump strictly inside (n1, n2]
        let shape = TelescopeShape::corner(vec![1, 2, 3]).unwrap();
        let (f1, f2) = counterexample_multiplicative(&shape, 1, 3).unwrap();
        let prod = f1.mul(&f2).unwrap();
        // on (1,3]: (3-t)/2 · t/3 peaks at t = 1.5 with value 0.375
        let sup = prod.sup_norm(Window::new(1.0, 3.0).unwrap());
        assert!((sup - 0.375).abs() <= 1e-9, "sup = {sup}");
    }

    #[test]
    fn grid_oracle_matches_sup_norm() {
        // brute force: dense grid of ‖f(t)‖ from the embedded matrices
        let shape = shape4();
        let (f1, f2) = counterexample_additive(&shape, 2).unwrap();
        let sum = f1.add(&f2).unwrap();
        let msshape = TelescopeShape::corner(vec![1, 2]).unwrap();
        let (g1, g2) = counterexample_multiplicative(&msshape, 1, 2).unwrap();
        let prod = g1.mul(&g2).unwrap();
        let strict = construct_prescribed(
            &TelescopeShape::corner(vec![1, 2]).unwrap(),
            &[0.5, 1.25],
            true,
            Some(2.0),
        )
        .unwrap();
        let corpus: Vec<(&TelescopeElement, usize)> = vec![
            (&f1, 4),
            (&f2, 4),
            (&sum, 4),
            (&g1, 2),
            (&g2, 2),
            (&prod, 2),
            (&strict, 2),
        ];
        for (f, levels) in corpus {
            let n = levels as f64;
            let steps = (n / 1e-4) as usize;
            let mut grid_max: f64 = 0.0;
            for i in 1..=steps {
                let t = i as f64 * 1e-4;
                grid_max = grid_max.max(operator_norm(&f.eval_at(t).unwrap()));
            }
            let sup = f.sup_norm(Window::up_to(n).unwrap());
            assert!(
                (grid_max - sup).abs() <= 1e-6,
                "grid {grid_max} vs sup {sup}"
            );
        }
    }

    #[test]
    fn seminorm_sequences_are_nondecreasing() {
        let shape = shape4();
        let (f1, f2) = counterexample_additive(&shape, 2).unwrap();
        let sum = f1.add(&f2).unwrap();
        for f in [&f1, &f2, &sum, &fdi_witness(&shape)] {
            let seq = f.seminorm_sequence();
            for pair in seq.values.windows(2) {
                assert!(pair[0] <= pair[1] + 1e-12);
            }
            assert!(seq.total_norm >= *seq.values.last().unwrap() - 1e-12);
        }
    }

    #[test]
    fn element_json_round_trip() {
        let shape = shape4();
        let f = construct_prescribed(&shape, &[0.5, 1.0, 1.0, 2.5], false, None).unwrap();
        let js = serde_json::to_string(&f).unwrap();
        let back: TelescopeElement = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.seminorm_sequence(), f.seminorm_sequence());
    }

    #[test]
    fn profile_validation_catches_breaks() {
        // discontinuous pair
        let bad = Profile::new(
            vec![
                Segment {
                    start: 0.0,
                    end: Some(1.0),
                    form: SegmentForm::Linear {
                        intercept: 0.0,
                        slope: 1.0,
                    },
                },
                Segment {
                    start: 1.0,
                    end: None,
                    form: SegmentForm::Constant { value: 2.0 },
                },
            ],
            2.0,
        );
        assert!(bad.is_err());
        // must vanish at zero
        let bad = Profile::new(
            vec![Segment {
                start: 0.0,
                end: None,
                form: SegmentForm::Constant { value: 1.0 },
            }],
            1.0,
        );
        assert!(bad.is_err());
        // unbounded linear tail has no limit
        let bad = Profile::new(
            vec![Segment {
                start: 0.0,
                end: None,
                form: SegmentForm::Linear {
                    intercept: 0.0,
                    slope: 1.0,
                },
            }],
            1.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn shape_validation() {
        assert!(TelescopeShape::corner(vec![]).is_err());
        assert!(TelescopeShape::corner(vec![2, 2]).is_err());
        assert!(TelescopeShape::diagonal(vec![2, 4, 8]).is_ok());
        assert!(TelescopeShape::diagonal(vec![2, 4, 6]).is_err());
    }
}
