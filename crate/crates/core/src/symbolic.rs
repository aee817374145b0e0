//! Bernoulli measures on the symbolic space `Σ = I^∞ × J^∞`.
//!
//! A [`BernoulliSpec`] holds the weight matrix `p[i][j]` over the horizontal
//! alphabet `I = {0..m}` and the vertical alphabet `J = {0..n}`. Cylinder
//! masses, conditional (fiber) masses and the magnified measures that appear
//! along the scenery orbit are all computed in exact rational arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `"a/b"`, `"a"` or `"-a/b"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Config(format!("not a rational: {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational as `"a/b"` (or `"a"` for integers).
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Product of rationals with a single reduction at the end.
fn product<'a>(factors: impl IntoIterator<Item = &'a Rational>) -> Rational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for f in factors {
        if f.is_zero() {
            return Rational::zero();
        }
        num *= f.numer();
        den *= f.denom();
    }
    Rational::new(num, den)
}

/// Marker for the horizontal alphabet `I`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Horizontal;

/// Marker for the vertical alphabet `J`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertical;

pub trait AlphabetTag {
    const NAME: &'static str;
}

impl AlphabetTag for Horizontal {
    const NAME: &'static str = "I";
}

impl AlphabetTag for Vertical {
    const NAME: &'static str = "J";
}

/// A finite word over one of the two alphabets.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word<A> {
    digits: Vec<u8>,
    _alphabet: PhantomData<A>,
}

pub type IWord = Word<Horizontal>;
pub type JWord = Word<Vertical>;

impl<A> Word<A> {
    pub fn new(digits: Vec<u8>) -> Self {
        Word {
            digits,
            _alphabet: PhantomData,
        }
    }

    pub fn empty() -> Self {
        Word::new(Vec::new())
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u8> {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// The left shift `σ`: drops the first letter.
    pub fn shift(&self) -> Self {
        self.shift_by(1)
    }

    pub fn shift_by(&self, k: usize) -> Self {
        Word::new(self.digits[k.min(self.len())..].to_vec())
    }

    /// The prefix `w|_k`.
    pub fn prefix(&self, k: usize) -> Self {
        Word::new(self.digits[..k.min(self.len())].to_vec())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&other.digits);
        Word::new(digits)
    }
}

impl<A> From<Vec<u8>> for Word<A> {
    fn from(digits: Vec<u8>) -> Self {
        Word::new(digits)
    }
}

impl<A> From<&[u8]> for Word<A> {
    fn from(digits: &[u8]) -> Self {
        Word::new(digits.to_vec())
    }
}

impl<A: AlphabetTag> fmt::Debug for Word<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", A::NAME, self.digits)
    }
}

/// A point of `Σ` truncated to a working depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicPoint {
    pub i: IWord,
    pub j: JWord,
}

/// The weight matrix of a Bernoulli measure together with its exact marginals.
///
/// The row marginals `q`, column marginals `r` and conditional rows `p_i(·)`
/// are derived once at construction and the type is immutable afterwards.
#[derive(Clone)]
pub struct BernoulliSpec {
    m: usize,
    n: usize,
    weights: Vec<Rational>,
    q: Vec<Rational>,
    r: Vec<Rational>,
    conditional: Vec<Rational>,
    row_class: Vec<usize>,
    line_supported: bool,
    sampler: WeightedIndex<f64>,
    row_sampler: WeightedIndex<f64>,
    conditional_f64: Vec<f64>,
}

impl fmt::Debug for BernoulliSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BernoulliSpec")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("weights", &self.weights_string())
            .finish()
    }
}

impl PartialEq for BernoulliSpec {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.n == other.n && self.weights == other.weights
    }
}

impl Eq for BernoulliSpec {}

impl BernoulliSpec {
    /// Validates an `m × n` weight matrix.
    pub fn new(m: usize, n: usize, weights: Vec<Vec<Rational>>) -> Result<Self> {
        if m < 2 || m >= n || n > u8::MAX as usize {
            return Err(Error::OrderViolation { m, n });
        }
        if weights.len() != m || weights.iter().any(|row| row.len() != n) {
            return Err(Error::BadShape {
                rows: weights.len(),
                cols: weights.first().map_or(0, Vec::len),
                m,
                n,
            });
        }
        for (i, row) in weights.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                if w.is_negative() {
                    return Err(Error::NegativeWeight {
                        i,
                        j,
                        value: format_rational(w),
                    });
                }
            }
        }
        let flat: Vec<Rational> = weights.into_iter().flatten().collect();
        let total: Rational = flat.iter().sum();
        if !total.is_one() {
            return Err(Error::SumNotOne {
                sum: format_rational(&total),
            });
        }

        let q: Vec<Rational> = (0..m)
            .map(|i| flat[i * n..(i + 1) * n].iter().sum())
            .collect();
        let r: Vec<Rational> = (0..n)
            .map(|j| (0..m).map(|i| &flat[i * n + j]).sum())
            .collect();
        let mut conditional = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                if q[i].is_zero() {
                    conditional.push(Rational::zero());
                } else {
                    conditional.push(&flat[i * n + j] / &q[i]);
                }
            }
        }
        let row_class = (0..m)
            .map(|i| {
                (0..=i)
                    .find(|&c| conditional[c * n..(c + 1) * n] == conditional[i * n..(i + 1) * n])
                    .unwrap_or(i)
            })
            .collect();
        let positive_rows = q.iter().filter(|x| x.is_positive()).count();
        let positive_cols = r.iter().filter(|x| x.is_positive()).count();
        let line_supported = positive_rows == 1 || positive_cols == 1;

        let flat_f64: Vec<f64> = flat.iter().map(rational_to_f64).collect();
        let sampler = WeightedIndex::new(&flat_f64).map_err(|e| Error::Config(e.to_string()))?;
        let q_f64: Vec<f64> = q.iter().map(rational_to_f64).collect();
        let row_sampler = WeightedIndex::new(&q_f64).map_err(|e| Error::Config(e.to_string()))?;
        let conditional_f64 = conditional.iter().map(rational_to_f64).collect();

        Ok(BernoulliSpec {
            m,
            n,
            weights: flat,
            q,
            r,
            conditional,
            row_class,
            line_supported,
            sampler,
            row_sampler,
            conditional_f64,
        })
    }

    /// Parses rows of `"a/b"` strings.
    pub fn from_strings<S: AsRef<str>>(m: usize, n: usize, rows: &[Vec<S>]) -> Result<Self> {
        let weights = rows
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s.as_ref())).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        Self::new(m, n, weights)
    }

    /// Uniform weights `1/(mn)`.
    pub fn uniform(m: usize, n: usize) -> Result<Self> {
        let w = Rational::new(BigInt::one(), BigInt::from(m * n));
        Self::new(m, n, vec![vec![w; n]; m])
    }

    /// Uniform weights on the listed digit pairs, zero elsewhere.
    pub fn carpet(m: usize, n: usize, pattern: &[(u8, u8)]) -> Result<Self> {
        let mut weights = vec![vec![Rational::zero(); n]; m];
        let w = Rational::new(BigInt::one(), BigInt::from(pattern.len().max(1)));
        for &(i, j) in pattern {
            if i as usize >= m {
                return Err(Error::DigitOutOfRange { digit: i, size: m });
            }
            if j as usize >= n {
                return Err(Error::DigitOutOfRange { digit: j, size: n });
            }
            weights[i as usize][j as usize] = w.clone();
        }
        Self::new(m, n, weights)
    }

    /// Integer weights drawn from `0..=scale`, each zero with probability
    /// `zero_prob`, then normalized.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, scale: u32, zero_prob: f64) -> Result<Self> {
        let mut raw: Vec<Vec<u32>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.gen_bool(zero_prob) { 0 } else { rng.gen_range(1..=scale.max(1)) })
                    .collect()
            })
            .collect();
        let total: u32 = raw.iter().flatten().sum();
        if total == 0 {
            raw[rng.gen_range(0..m)][rng.gen_range(0..n)] = 1;
        }
        let total = BigInt::from(raw.iter().flatten().sum::<u32>());
        let weights = raw
            .into_iter()
            .map(|row| row.into_iter().map(|w| Rational::new(BigInt::from(w), total.clone())).collect())
            .collect();
        Self::new(m, n, weights)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> &Rational {
        &self.weights[i * self.n + j]
    }

    /// Row marginal `q_i`.
    pub fn q(&self, i: usize) -> &Rational {
        &self.q[i]
    }

    /// Column marginal `r_j`.
    pub fn r(&self, j: usize) -> &Rational {
        &self.r[j]
    }

    /// Conditional row entry `p_i(j)`.
    pub fn conditional(&self, i: usize, j: usize) -> &Rational {
        &self.conditional[i * self.n + j]
    }

    pub fn conditional_f64(&self, i: usize, j: usize) -> f64 {
        self.conditional_f64[i * self.n + j]
    }

    pub fn conditional_row(&self, i: usize) -> &[Rational] {
        &self.conditional[i * self.n..(i + 1) * self.n]
    }

    /// Smallest letter whose conditional row equals that of `i`.
    pub fn row_class(&self, i: usize) -> usize {
        self.row_class[i]
    }

    /// Number of distinct conditional rows among letters of positive mass.
    pub fn positive_row_classes(&self) -> usize {
        let mut classes: Vec<usize> = (0..self.m)
            .filter(|&i| self.q[i].is_positive())
            .map(|i| self.row_class[i])
            .collect();
        classes.sort_unstable();
        classes.dedup();
        classes.len()
    }

    pub fn is_line_supported(&self) -> bool {
        self.line_supported
    }

    /// True when exactly one row carries mass (the measure lives on a vertical line).
    pub fn is_vertical_line(&self) -> bool {
        self.q.iter().filter(|x| x.is_positive()).count() == 1
    }

    /// True when exactly one column carries mass (the measure lives on a horizontal line).
    pub fn is_horizontal_line(&self) -> bool {
        self.r.iter().filter(|x| x.is_positive()).count() == 1
    }

    pub fn weights_string(&self) -> String {
        (0..self.m)
            .map(|i| {
                (0..self.n)
                    .map(|j| format_rational(self.weight(i, j)))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn check_i(&self, digits: &[u8]) -> Result<()> {
        match digits.iter().find(|&&d| d as usize >= self.m) {
            Some(&digit) => Err(Error::DigitOutOfRange {
                digit,
                size: self.m,
            }),
            None => Ok(()),
        }
    }

    pub fn check_j(&self, digits: &[u8]) -> Result<()> {
        match digits.iter().find(|&&d| d as usize >= self.n) {
            Some(&digit) => Err(Error::DigitOutOfRange {
                digit,
                size: self.n,
            }),
            None => Ok(()),
        }
    }

    /// `μ([i] × [j])`.
    pub fn cylinder_mass(&self, i: &IWord, j: &JWord) -> Rational {
        self.cylinder_mass_digits(i.digits(), j.digits())
    }

    pub fn cylinder_mass_digits(&self, i: &[u8], j: &[u8]) -> Rational {
        let common = i.len().min(j.len());
        let paired = (0..common).map(|l| self.weight(i[l] as usize, j[l] as usize));
        let tail_i = i[common..].iter().map(|&a| &self.q[a as usize]);
        let tail_j = j[common..].iter().map(|&b| &self.r[b as usize]);
        product(paired.chain(tail_i).chain(tail_j))
    }

    /// `π₁μ([i]) = ∏ q_{i_l}`.
    pub fn horizontal_mass(&self, i: &[u8]) -> Rational {
        product(i.iter().map(|&a| &self.q[a as usize]))
    }

    /// The fiber mass `μ_i([j])`.
    pub fn fiber_cylinder_mass(&self, i: &IWord, j: &JWord) -> Result<Rational> {
        self.fiber_mass_digits(i.digits(), j.digits())
    }

    pub fn fiber_mass_digits(&self, i: &[u8], j: &[u8]) -> Result<Rational> {
        if i.len() < j.len() {
            return Err(Error::DepthMismatch {
                i_len: i.len(),
                j_len: j.len(),
            });
        }
        Ok(product(
            j.iter()
                .zip(i)
                .map(|(&b, &a)| self.conditional(a as usize, b as usize)),
        ))
    }

    /// Draws `(i, j)` with i.i.d. digit pairs of law `p`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize) -> SymbolicPoint {
        let mut i = Vec::with_capacity(depth);
        let mut j = Vec::with_capacity(depth);
        for _ in 0..depth {
            let cell = self.sampler.sample(rng);
            i.push((cell / self.n) as u8);
            j.push((cell % self.n) as u8);
        }
        SymbolicPoint {
            i: Word::new(i),
            j: Word::new(j),
        }
    }

    /// Draws a horizontal word from `π₁μ`.
    pub fn sample_horizontal<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize) -> IWord {
        Word::new((0..depth).map(|_| self.row_sampler.sample(rng) as u8).collect())
    }

    /// Shannon entropy of `p` in nats.
    pub fn entropy_pairs(&self) -> f64 {
        entropy(self.weights.iter().map(rational_to_f64))
    }

    /// Shannon entropy of the row marginal `q` in nats.
    pub fn entropy_rows(&self) -> f64 {
        entropy(self.q.iter().map(rational_to_f64))
    }

    /// Shannon entropy of the column marginal `r` in nats.
    pub fn entropy_columns(&self) -> f64 {
        entropy(self.r.iter().map(rational_to_f64))
    }
}

pub(crate) fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// How a conditional row is determined at one position of a Ψ-type measure.
///
/// `Fixed(c)`: the row of letter class `c`. `Dependent(d)`: the row of the
/// `d`-th letter of the horizontal cylinder word being evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowDesc {
    Fixed(usize),
    Dependent(usize),
}

#[derive(Clone, Debug)]
enum Repr {
    Bernoulli,
    /// `Ψ(w)`: stores `w|_h`.
    Psi { word: Vec<u8> },
    /// `Ψ_k(w)`: stores `w|_k`.
    PsiK { word: Vec<u8> },
    Blowup {
        parent: Arc<CylinderMeasure>,
        i: Vec<u8>,
        j: Vec<u8>,
        norm: Rational,
    },
    Table(BTreeMap<(Vec<u8>, Vec<u8>), Rational>),
}

/// A probability measure on `Σ` known exactly on all cylinders `[i'] × [j']`
/// with `|i'|, |j'| <= generation`.
///
/// Measures of the form `Ψ(w)`, `Ψ_k(w)` and blow-ups are held by their
/// defining parameters; tables are only built on request.
#[derive(Clone, Debug)]
pub struct CylinderMeasure {
    spec: Arc<BernoulliSpec>,
    generation: usize,
    repr: Repr,
}

/// Parameters identifying a Ψ-type measure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PsiParams {
    /// `Ψ(w)` with the stored prefix of `w`.
    Full(Vec<u8>),
    /// `Ψ_k(w)` with `k = word.len()`.
    Truncated(Vec<u8>),
}

impl CylinderMeasure {
    /// The Bernoulli measure `μ` itself.
    pub fn bernoulli(spec: Arc<BernoulliSpec>, generation: usize) -> Self {
        CylinderMeasure {
            spec,
            generation,
            repr: Repr::Bernoulli,
        }
    }

    /// `Ψ(i) = π₁μ × μ_i` (when `k` is `None`) or `Ψ_k(i)`.
    pub fn psi(
        spec: Arc<BernoulliSpec>,
        i: &[u8],
        k: Option<usize>,
        generation: usize,
    ) -> Result<Self> {
        spec.check_i(i)?;
        let needed = k.unwrap_or(generation);
        if i.len() < needed {
            return Err(Error::InsufficientDepth {
                needed,
                available: i.len(),
            });
        }
        let word = i[..needed].to_vec();
        if word.iter().any(|&a| spec.q(a as usize).is_zero()) {
            return Err(Error::ZeroMassCylinder);
        }
        let repr = match k {
            None => Repr::Psi { word },
            Some(0) => Repr::Bernoulli,
            Some(_) => Repr::PsiK { word },
        };
        Ok(CylinderMeasure {
            spec,
            generation,
            repr,
        })
    }

    /// Materializes an explicit table; masses are trusted as given.
    pub fn from_table(
        spec: Arc<BernoulliSpec>,
        generation: usize,
        table: BTreeMap<(Vec<u8>, Vec<u8>), Rational>,
    ) -> Self {
        CylinderMeasure {
            spec,
            generation,
            repr: Repr::Table(table),
        }
    }

    pub fn spec(&self) -> &Arc<BernoulliSpec> {
        &self.spec
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Returns a copy with a lower generation cap.
    pub fn truncate(&self, generation: usize) -> Self {
        let mut out = self.clone();
        out.generation = generation.min(self.generation);
        if let Repr::Psi { word } = &mut out.repr {
            word.truncate(out.generation);
        }
        out
    }

    /// Ψ parameters, when the measure is held in that form.
    pub fn psi_params(&self) -> Option<PsiParams> {
        match &self.repr {
            Repr::Bernoulli => Some(PsiParams::Truncated(Vec::new())),
            Repr::Psi { word } => Some(PsiParams::Full(word.clone())),
            Repr::PsiK { word } => Some(PsiParams::Truncated(word.clone())),
            _ => None,
        }
    }

    /// `ν([i'] × [j'])`.
    pub fn mass(&self, i: &[u8], j: &[u8]) -> Result<Rational> {
        let requested = i.len().max(j.len());
        if requested > self.generation {
            return Err(Error::GenerationExceeded {
                requested,
                generation: self.generation,
            });
        }
        self.mass_unchecked(i, j)
    }

    fn mass_unchecked(&self, i: &[u8], j: &[u8]) -> Result<Rational> {
        let spec = &*self.spec;
        match &self.repr {
            Repr::Bernoulli => Ok(spec.cylinder_mass_digits(i, j)),
            Repr::Psi { word } => {
                if j.len() > word.len() {
                    return Err(Error::InsufficientDepth {
                        needed: j.len(),
                        available: word.len(),
                    });
                }
                let rows = j
                    .iter()
                    .zip(word)
                    .map(|(&b, &a)| spec.conditional(a as usize, b as usize));
                let horizontal = i.iter().map(|&a| spec.q(a as usize));
                Ok(product(horizontal.chain(rows)))
            }
            Repr::PsiK { word } => {
                let k = word.len();
                let rows = j.iter().enumerate().map(|(l, &b)| {
                    if l < k {
                        spec.conditional(word[l] as usize, b as usize)
                    } else if l - k < i.len() {
                        spec.conditional(i[l - k] as usize, b as usize)
                    } else {
                        spec.r(b as usize)
                    }
                });
                let horizontal = i.iter().map(|&a| spec.q(a as usize));
                Ok(product(horizontal.chain(rows)))
            }
            Repr::Blowup {
                parent,
                i: ci,
                j: cj,
                norm,
            } => {
                let mut ii = ci.clone();
                ii.extend_from_slice(i);
                let mut jj = cj.clone();
                jj.extend_from_slice(j);
                Ok(parent.mass_unchecked(&ii, &jj)? / norm)
            }
            Repr::Table(table) => table
                .get(&(i.to_vec(), j.to_vec()))
                .cloned()
                .ok_or(Error::GenerationExceeded {
                    requested: i.len().max(j.len()),
                    generation: self.generation,
                }),
        }
    }

    /// Every cylinder `(i', j')` with `|i'|, |j'| <= generation`, in a fixed order.
    pub fn materialize(&self) -> Result<BTreeMap<(Vec<u8>, Vec<u8>), Rational>> {
        let mut table = BTreeMap::new();
        let iw = words_up_to(self.spec.m(), self.generation);
        let jw = words_up_to(self.spec.n(), self.generation);
        for i in &iw {
            for j in &jw {
                table.insert((i.clone(), j.clone()), self.mass(i, j)?);
            }
        }
        Ok(table)
    }

    /// Exact agreement on every cylinder with `|i'| = |j'| = g`
    /// (and hence, by additivity, on all shorter ones).
    pub fn agrees_through(&self, other: &CylinderMeasure, g: usize) -> Result<bool> {
        if self.spec.m() != other.spec.m() || self.spec.n() != other.spec.n() {
            return Err(Error::IncompatibleSpecs);
        }
        for i in words_of_length(self.spec.m(), g) {
            for j in words_of_length(self.spec.n(), g) {
                if self.mass(&i, &j)? != other.mass(&i, &j)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Row descriptors for positions `0..g`, canonicalized so that two Ψ-type
    /// measures agree through generation `g` exactly when their profiles match.
    pub fn row_profile(&self, g: usize) -> Result<Vec<RowDesc>> {
        if g > self.generation {
            return Err(Error::GenerationExceeded {
                requested: g,
                generation: self.generation,
            });
        }
        let spec = &*self.spec;
        let single_class = spec.positive_row_classes() == 1;
        let canonical_single = (0..spec.m())
            .find(|&a| spec.q(a).is_positive())
            .map(|a| spec.row_class(a))
            .unwrap_or(0);
        let fixed_prefix: &[u8] = match &self.repr {
            Repr::Bernoulli => &[],
            Repr::Psi { word } | Repr::PsiK { word } => word,
            _ => return Err(Error::NotPsiForm),
        };
        let full = matches!(self.repr, Repr::Psi { .. });
        let k = fixed_prefix.len();
        Ok((0..g)
            .map(|l| {
                if single_class {
                    RowDesc::Fixed(canonical_single)
                } else if l < k || full {
                    RowDesc::Fixed(spec.row_class(fixed_prefix[l] as usize))
                } else {
                    RowDesc::Dependent(l - k)
                }
            })
            .collect())
    }
}

/// `ν^C` for `C = [i] × [j]`, rescaled back to the root.
pub fn blowup(nu: &Arc<CylinderMeasure>, i: &IWord, j: &JWord) -> Result<CylinderMeasure> {
    if i.is_empty() && j.is_empty() {
        return Ok((**nu).clone());
    }
    let depth = i.len().max(j.len());
    let norm = nu.mass(i.digits(), j.digits())?;
    if norm.is_zero() {
        return Err(Error::ZeroMassCylinder);
    }
    Ok(CylinderMeasure {
        spec: nu.spec.clone(),
        generation: nu.generation - depth,
        repr: Repr::Blowup {
            parent: nu.clone(),
            i: i.digits().to_vec(),
            j: j.digits().to_vec(),
            norm,
        },
    })
}

/// `Ψ(i)` or `Ψ_k(i)` with generation cap `h`.
pub fn psi_measure(
    spec: &Arc<BernoulliSpec>,
    i: &IWord,
    k: Option<usize>,
    h: usize,
) -> Result<CylinderMeasure> {
    CylinderMeasure::psi(spec.clone(), i.digits(), k, h)
}

/// All words over `{0..size}` of exactly `len` letters, lexicographic.
pub fn words_of_length(size: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..size as u8).map(move |d| {
                    let mut v = w.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out
}

/// All words of length `0..=len`.
pub fn words_up_to(size: usize, len: usize) -> Vec<Vec<u8>> {
    (0..=len).flat_map(|l| words_of_length(size, l)).collect()
}
