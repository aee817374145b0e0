//! The eccentricity phase: rotation by `α = log m / log n` on the circle.
//!
//! `α` is classified as rational or irrational by exact integer arithmetic.
//! Irrational angles are carried as a pair of fixed-point bounds at a
//! configurable precision; rational angles are carried exactly. Every phase
//! query either returns a certified answer or fails with
//! [`Error::PrecisionExhausted`].

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::symbolic::Rational;

pub const DEFAULT_PRECISION_BITS: usize = 256;

/// A fixed-point fraction in `[0, 1)`: `value = Σ limbs[i] 2^{64 i} / 2^bits`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frac {
    limbs: Vec<u64>,
}

impl Frac {
    pub fn zero(bits: usize) -> Self {
        Frac {
            limbs: vec![0; limbs_for(bits)],
        }
    }

    pub fn bits(&self) -> usize {
        self.limbs.len() * 64
    }

    /// Reduces `n` modulo `2^bits`.
    pub fn from_biguint(n: &BigUint, bits: usize) -> Self {
        let mut limbs = n.to_u64_digits();
        limbs.resize(limbs_for(bits), 0);
        Frac { limbs }
    }

    pub fn to_biguint(&self) -> BigUint {
        let mut bytes = Vec::with_capacity(self.limbs.len() * 8);
        for limb in &self.limbs {
            bytes.extend_from_slice(&limb.to_le_bytes());
        }
        BigUint::from_bytes_le(&bytes)
    }

    /// `floor(frac(r) · 2^bits)`.
    pub fn from_rational_floor(r: &Rational, bits: usize) -> Self {
        let bits = limbs_for(bits) * 64;
        let frac = r - r.floor();
        let scaled = (frac.numer() << bits) / frac.denom();
        Frac::from_biguint(&scaled.to_biguint().unwrap_or_default(), bits)
    }

    /// `ceil(frac(r) · 2^bits)`, saturating just below one.
    pub fn from_rational_ceil(r: &Rational, bits: usize) -> Self {
        let bits = limbs_for(bits) * 64;
        let frac = r - r.floor();
        let (q, rem) = (frac.numer() << bits).div_rem(frac.denom());
        let q = if rem.is_zero() { q } else { q + 1 };
        let max = (BigInt::one() << bits) - 1;
        Frac::from_biguint(&q.min(max).to_biguint().unwrap_or_default(), bits)
    }

    pub fn from_f64(x: f64, bits: usize) -> Self {
        let x = x.rem_euclid(1.0);
        let mut f = Frac::zero(bits);
        let top = (x * 2f64.powi(64)) as u64;
        *f.limbs.last_mut().unwrap() = top;
        f
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, bits: usize) -> Self {
        Frac {
            limbs: (0..limbs_for(bits)).map(|_| rng.gen()).collect(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        let top = *self.limbs.last().unwrap() as f64;
        let next = if self.limbs.len() > 1 {
            self.limbs[self.limbs.len() - 2] as f64
        } else {
            0.0
        };
        (top + next / 2f64.powi(64)) / 2f64.powi(64)
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(
            BigInt::from(self.to_biguint()),
            BigInt::one() << self.bits(),
        )
    }

    /// Wrapping addition; returns the carry out of the top limb.
    pub fn add_assign_carry(&mut self, other: &Frac) -> bool {
        debug_assert_eq!(self.limbs.len(), other.limbs.len());
        let mut carry = false;
        for (a, &b) in self.limbs.iter_mut().zip(&other.limbs) {
            let (s1, c1) = a.overflowing_add(b);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *a = s2;
            carry = c1 || c2;
        }
        carry
    }

    fn offset(&self, delta: i64) -> Frac {
        let bits = self.bits();
        let modulus = BigInt::one() << bits;
        let v = (BigInt::from(self.to_biguint()) + delta).mod_floor(&modulus);
        Frac::from_biguint(&v.to_biguint().unwrap(), bits)
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        self.limbs.iter().rev().cmp(other.limbs.iter().rev())
    }
}

fn limbs_for(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

/// `2·atanh(a/b) · 2^w`, truncated term by term.
fn two_atanh_fixed(a: u64, b: u64, w: usize) -> BigUint {
    let a2 = BigUint::from(a) * a;
    let b2 = BigUint::from(b) * b;
    let mut power = (BigUint::one() << (w + 1)) * a / b;
    let mut sum = BigUint::zero();
    let mut denom = 1u64;
    while !power.is_zero() {
        sum += &power / denom;
        power = power * &a2 / &b2;
        denom += 2;
    }
    sum
}

/// `ln(x) · 2^w` for an integer `1 <= x < 2^63`, within a few hundred units in the last place.
fn ln_fixed(x: u64, w: usize) -> BigUint {
    let k = 63 - x.leading_zeros() as u64;
    let ln2 = two_atanh_fixed(1, 3, w);
    let base = 1u64 << k;
    let rest = if x == base {
        BigUint::zero()
    } else {
        // ln(x / 2^k) = 2 atanh((x - 2^k) / (x + 2^k))
        two_atanh_fixed(x - base, x + base, w)
    };
    ln2 * k + rest
}

/// Exact-arithmetic classification of `α = log m / log n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaCertificate {
    /// `α = num/den` in lowest terms (`m = b^num·c`, `n = b^den·c` for a common base).
    Rational { num: u64, den: u64 },
    Irrational,
}

/// Writes `x = base^exp` with `base` not a perfect power.
fn primitive_power(x: u64) -> (u64, u64) {
    for exp in (2..=63u32).rev() {
        let root = x.nth_root(exp);
        if root >= 2 && root.checked_pow(exp) == Some(x) {
            let (b, e) = primitive_power(root);
            return (b, e * exp as u64);
        }
    }
    (x, 1)
}

/// `α` is rational iff `m` and `n` are powers of a common base.
pub fn classify_alpha(m: u64, n: u64) -> Result<AlphaCertificate> {
    if m < 2 || m >= n {
        return Err(Error::OrderViolation {
            m: m as usize,
            n: n as usize,
        });
    }
    let (bm, em) = primitive_power(m);
    let (bn, en) = primitive_power(n);
    if bm == bn {
        let g = em.gcd(&en);
        Ok(AlphaCertificate::Rational {
            num: em / g,
            den: en / g,
        })
    } else {
        Ok(AlphaCertificate::Irrational)
    }
}

#[derive(Clone, Debug)]
enum AngleKind {
    Rational { num: u64, den: u64 },
    /// `α ∈ [lo, hi]` as fixed-point fractions.
    Irrational { lo: Frac, hi: Frac },
}

/// The rotation angle `α = log m / log n` at a working precision.
#[derive(Clone, Debug)]
pub struct Angle {
    m: u64,
    n: u64,
    bits: usize,
    kind: AngleKind,
}

impl Angle {
    pub fn new(m: u64, n: u64, bits: usize) -> Result<Self> {
        let bits = limbs_for(bits) * 64;
        let kind = match classify_alpha(m, n)? {
            AlphaCertificate::Rational { num, den } => AngleKind::Rational { num, den },
            AlphaCertificate::Irrational => {
                let w = bits + 64;
                let ln_m = ln_fixed(m, w);
                let ln_n = ln_fixed(n, w);
                let centre = Frac::from_biguint(&((ln_m << bits) / ln_n), bits);
                AngleKind::Irrational {
                    lo: centre.offset(-2),
                    hi: centre.offset(2),
                }
            }
        };
        Ok(Angle { m, n, bits, kind })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn certificate(&self) -> AlphaCertificate {
        match self.kind {
            AngleKind::Rational { num, den } => AlphaCertificate::Rational { num, den },
            AngleKind::Irrational { .. } => AlphaCertificate::Irrational,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.kind {
            AngleKind::Rational { num, den } => *num as f64 / *den as f64,
            AngleKind::Irrational { lo, .. } => lo.to_f64(),
        }
    }

    /// Bounds `(lo, hi)` on `α · 2^bits` (equal when `α` is dyadic, never for these angles).
    pub fn fixed_bounds(&self) -> Option<(&Frac, &Frac)> {
        match &self.kind {
            AngleKind::Irrational { lo, hi } => Some((lo, hi)),
            AngleKind::Rational { .. } => None,
        }
    }
}

/// The value `φ^k(t) = frac(t + kα)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhaseValue {
    /// Certified to lie in `[lo, hi]`.
    Interval { lo: Frac, hi: Frac },
    Exact(Rational),
}

impl PhaseValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            PhaseValue::Interval { lo, .. } => lo.to_f64(),
            PhaseValue::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Compares with a rational in `[0, 1]`; `None` when the bounds straddle it.
    pub fn cmp_rational(&self, r: &Rational) -> Option<Ordering> {
        match self {
            PhaseValue::Exact(v) => Some(v.cmp(r)),
            PhaseValue::Interval { lo, hi } => {
                let lo = lo.to_rational();
                let hi = hi.to_rational();
                if &lo > r {
                    Some(Ordering::Greater)
                } else if &hi < r {
                    Some(Ordering::Less)
                } else if &lo == r && &hi == r {
                    Some(Ordering::Equal)
                } else {
                    None
                }
            }
        }
    }
}

/// The phase `φ^k(t)` of the rotation, held as the start `t` and the step count `k`.
#[derive(Clone, Debug)]
pub struct PhaseState {
    angle: Arc<Angle>,
    start: Frac,
    steps: u64,
}

impl PhaseState {
    pub fn new(angle: Arc<Angle>, start: Frac) -> Self {
        let start = Frac::from_biguint(&start.to_biguint(), angle.bits);
        PhaseState {
            angle,
            start,
            steps: 0,
        }
    }

    pub fn from_rational(angle: Arc<Angle>, t: &Rational) -> Self {
        let bits = angle.bits;
        Self::new(angle, Frac::from_rational_floor(t, bits))
    }

    pub fn angle(&self) -> &Arc<Angle> {
        &self.angle
    }

    pub fn start(&self) -> &Frac {
        &self.start
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// The state `k` further steps along the orbit.
    pub fn advanced(&self, k: u64) -> Self {
        PhaseState {
            angle: self.angle.clone(),
            start: self.start.clone(),
            steps: self.steps + k,
        }
    }

    /// `(φ^k(t), ℓ_t(k))` for `k = self.steps()`, with `ℓ` computed both as
    /// `⌊αk + t⌋` and as `#{k' < k : φ^{k'}(t) >= 1 - α}`.
    pub fn rotate_and_count(&self) -> Result<(PhaseValue, u64)> {
        let (value, floor) = self.floor_formula()?;
        let hits = self.hit_count()?;
        if floor != hits {
            return Err(Error::CounterMismatch {
                step: self.steps,
                floor,
                hits,
            });
        }
        Ok((value, floor))
    }

    /// `⌊αk + t⌋` and `frac(αk + t)` by one multiplication.
    pub fn floor_formula(&self) -> Result<(PhaseValue, u64)> {
        let bits = self.angle.bits;
        let k = self.steps;
        let t = self.start.to_biguint();
        match &self.angle.kind {
            AngleKind::Irrational { lo, hi } => {
                let total_lo = &t + lo.to_biguint() * k;
                let total_hi = &t + hi.to_biguint() * k;
                let floor_lo = (&total_lo >> bits).to_u64().unwrap();
                let floor_hi = (&total_hi >> bits).to_u64().unwrap();
                if floor_lo != floor_hi {
                    return Err(Error::PrecisionExhausted { bits, step: k });
                }
                Ok((
                    PhaseValue::Interval {
                        lo: Frac::from_biguint(&total_lo, bits),
                        hi: Frac::from_biguint(&total_hi, bits),
                    },
                    floor_lo,
                ))
            }
            AngleKind::Rational { num, den } => {
                let total = Rational::new(BigInt::from(t), BigInt::one() << bits)
                    + Rational::new(BigInt::from(*num) * k, BigInt::from(*den));
                let floor = total.floor();
                Ok((
                    PhaseValue::Exact(&total - &floor),
                    floor.to_integer().to_u64().unwrap(),
                ))
            }
        }
    }

    /// Counts visits of `φ^{k'}(t)` to `[1 - α, 1)` one step at a time.
    pub fn hit_count(&self) -> Result<u64> {
        let mut cursor = PhaseCursor::new(&PhaseState {
            steps: 0,
            ..self.clone()
        })?;
        let mut hits = 0;
        for _ in 0..self.steps {
            if cursor.at_or_above_threshold()? {
                hits += 1;
            }
            cursor.step()?;
        }
        Ok(hits)
    }

    /// True iff the current phase is at least `1 - α` (the next step wraps).
    pub fn wraps(&self) -> Result<bool> {
        PhaseCursor::new(self)?.at_or_above_threshold()
    }

    /// Current phase value.
    pub fn value(&self) -> Result<PhaseValue> {
        self.floor_formula().map(|(v, _)| v)
    }

    pub fn lift(&self) -> Result<u64> {
        self.floor_formula().map(|(_, l)| l)
    }
}

#[derive(Clone, Debug)]
enum CursorState {
    Irrational { lo: Frac, hi: Frac },
    Rational { residue: u64 },
}

/// Incremental walk along the rotation orbit: O(precision) per step.
#[derive(Clone, Debug)]
pub struct PhaseCursor {
    angle: Arc<Angle>,
    steps: u64,
    lift: u64,
    state: CursorState,
    /// Rational angles: `frac(t + r/den)` and the wrap flag per residue `r`.
    residue_values: Arc<Vec<(Rational, bool)>>,
}

impl PhaseCursor {
    pub fn new(phase: &PhaseState) -> Result<Self> {
        let angle = phase.angle.clone();
        let (value, lift) = phase.floor_formula()?;
        let cursor = match (&angle.kind, value) {
            (AngleKind::Irrational { .. }, PhaseValue::Interval { lo, hi }) => PhaseCursor {
                angle: angle.clone(),
                steps: phase.steps,
                lift,
                state: CursorState::Irrational { lo, hi },
                residue_values: Arc::new(Vec::new()),
            },
            (AngleKind::Rational { num, den }, _) => {
                let t = phase.start.to_rational();
                let alpha = Rational::new(BigInt::from(*num), BigInt::from(*den));
                let one = Rational::one();
                let values = (0..*den)
                    .map(|r| {
                        let v = &t + Rational::new(BigInt::from(r), BigInt::from(*den));
                        let v = &v - v.floor();
                        let wraps = &v + &alpha >= one;
                        (v, wraps)
                    })
                    .collect();
                let residue = ((phase.steps as u128 * *num as u128) % *den as u128) as u64;
                PhaseCursor {
                    angle: angle.clone(),
                    steps: phase.steps,
                    lift,
                    state: CursorState::Rational { residue },
                    residue_values: Arc::new(values),
                }
            }
            _ => unreachable!("phase value matches its angle"),
        };
        Ok(cursor)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `ℓ_t(k)` for the current `k`.
    pub fn lift(&self) -> u64 {
        self.lift
    }

    pub fn angle(&self) -> &Arc<Angle> {
        &self.angle
    }

    /// True iff `φ^k(t) >= 1 - α`.
    pub fn at_or_above_threshold(&self) -> Result<bool> {
        match &self.state {
            CursorState::Irrational { lo, hi } => {
                let (alo, ahi) = self.angle.fixed_bounds().unwrap();
                let mut a = lo.clone();
                let mut b = hi.clone();
                let c_lo = a.add_assign_carry(alo);
                let c_hi = b.add_assign_carry(ahi);
                if c_lo != c_hi {
                    return Err(Error::PrecisionExhausted {
                        bits: self.angle.bits,
                        step: self.steps,
                    });
                }
                Ok(c_lo)
            }
            CursorState::Rational { residue } => Ok(self.residue_values[*residue as usize].1),
        }
    }

    /// Advances one step; returns true when `ℓ` increased.
    pub fn step(&mut self) -> Result<bool> {
        let bits = self.angle.bits;
        let steps = self.steps;
        let wrapped = match (&mut self.state, &self.angle.kind) {
            (CursorState::Irrational { lo, hi }, AngleKind::Irrational { lo: alo, hi: ahi }) => {
                let c_lo = lo.add_assign_carry(alo);
                let c_hi = hi.add_assign_carry(ahi);
                if c_lo != c_hi {
                    return Err(Error::PrecisionExhausted { bits, step: steps });
                }
                c_lo
            }
            (CursorState::Rational { residue }, AngleKind::Rational { num, den }) => {
                let wrapped = self.residue_values[*residue as usize].1;
                *residue = (*residue + num) % den;
                wrapped
            }
            _ => unreachable!("cursor state matches its angle"),
        };
        self.steps += 1;
        self.lift += wrapped as u64;
        Ok(wrapped)
    }

    pub fn advance(&mut self, k: u64) -> Result<()> {
        for _ in 0..k {
            self.step()?;
        }
        Ok(())
    }

    pub fn value(&self) -> PhaseValue {
        match &self.state {
            CursorState::Irrational { lo, hi } => PhaseValue::Interval {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            CursorState::Rational { residue } => {
                PhaseValue::Exact(self.residue_values[*residue as usize].0.clone())
            }
        }
    }

    pub fn value_f64(&self) -> f64 {
        match &self.state {
            CursorState::Irrational { lo, .. } => lo.to_f64(),
            CursorState::Rational { residue } => self.residue_values[*residue as usize]
                .0
                .to_f64()
                .unwrap_or(f64::NAN),
        }
    }

    /// For rational angles, the residue `r` with `φ^k(t) = frac(t + r/den)`.
    pub fn residue(&self) -> Option<u64> {
        match self.state {
            CursorState::Rational { residue } => Some(residue),
            CursorState::Irrational { .. } => None,
        }
    }

    pub fn residue_value(&self, residue: u64) -> Option<&Rational> {
        self.residue_values.get(residue as usize).map(|(v, _)| v)
    }
}

/// The indicator of a phase interval `[a, b) ⊂ [0, 1]`, prepared for fast orbit tests.
#[derive(Clone, Debug)]
pub struct PhaseWindow {
    a: Rational,
    b: Rational,
    a_lo: Frac,
    a_hi: Frac,
    b_lo: Frac,
    b_hi: Frac,
    b_is_one: bool,
    residues: Option<Vec<bool>>,
}

impl PhaseWindow {
    pub fn new(cursor: &PhaseCursor, a: &Rational, b: &Rational) -> Self {
        let bits = cursor.angle.bits;
        let residues = if cursor.residue_values.is_empty() {
            None
        } else {
            Some(
                cursor
                    .residue_values
                    .iter()
                    .map(|(v, _)| v >= a && v < b)
                    .collect(),
            )
        };
        PhaseWindow {
            a: a.clone(),
            b: b.clone(),
            a_lo: Frac::from_rational_floor(a, bits),
            a_hi: Frac::from_rational_ceil(a, bits),
            b_lo: Frac::from_rational_floor(b, bits),
            b_hi: Frac::from_rational_ceil(b, bits),
            b_is_one: b >= &Rational::one(),
            residues,
        }
    }

    pub fn bounds(&self) -> (&Rational, &Rational) {
        (&self.a, &self.b)
    }

    pub fn contains(&self, cursor: &PhaseCursor) -> Result<bool> {
        match &cursor.state {
            CursorState::Rational { residue } => Ok(self.residues.as_ref().unwrap()[*residue as usize]),
            CursorState::Irrational { lo, hi } => {
                let ambiguous = || Error::PrecisionExhausted {
                    bits: cursor.angle.bits,
                    step: cursor.steps,
                };
                let above_a = if lo >= &self.a_hi {
                    true
                } else if hi < &self.a_lo {
                    false
                } else {
                    return Err(ambiguous());
                };
                if !above_a {
                    return Ok(false);
                }
                if self.b_is_one {
                    return Ok(true);
                }
                if hi < &self.b_lo {
                    Ok(true)
                } else if lo >= &self.b_hi {
                    Ok(false)
                } else {
                    Err(ambiguous())
                }
            }
        }
    }
}
