//! Approximate squares, the partition operator `Δ`, and the magnification
//! skew product `Z(t, i, j, μ) = (φ(t), σi, σ_t j, μ^{C_t(i,j)})`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::phase::{PhaseCursor, PhaseState, PhaseValue};
use crate::symbolic::{
    blowup, rational_to_f64, BernoulliSpec, CylinderMeasure, IWord, JWord, Rational,
    SymbolicPoint,
};

/// `Σ_l d_l b^{-l-1}` exactly.
pub fn adic_value(digits: &[u8], base: usize) -> Rational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for &d in digits {
        num = num * base + d;
        den *= base;
    }
    Rational::new(num, den)
}

pub fn adic_value_f64(digits: &[u8], base: usize) -> f64 {
    let b = base as f64;
    digits.iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / b)
}

/// `ξ(i, j)` truncated to the stored digits.
pub fn xi(m: usize, n: usize, i: &[u8], j: &[u8]) -> (Rational, Rational) {
    (adic_value(i, m), adic_value(j, n))
}

pub fn xi_f64(m: usize, n: usize, i: &[u8], j: &[u8]) -> (f64, f64) {
    (adic_value_f64(i, m), adic_value_f64(j, n))
}

/// The rectangle `R(i|_k, j|_ℓ) = [a, a + m^{-k}) × [c, c + n^{-ℓ})` in the
/// unit square, with `ℓ = ℓ_t(k)`.
///
/// Cells are upper-right half-open except along the boundary of the unit
/// square, where they are closed.
#[derive(Clone, Debug)]
pub struct ApproxSquare {
    i: Vec<u8>,
    j: Vec<u8>,
    phase: PhaseState,
}

impl ApproxSquare {
    /// The unit square at phase `t`.
    pub fn root(start: &PhaseState) -> Self {
        ApproxSquare {
            i: Vec::new(),
            j: Vec::new(),
            phase: PhaseState::new(start.angle().clone(), start.start().clone()),
        }
    }

    /// The depth-`k` cell `Δ^k` containing the point coded by `(i, j)`.
    pub fn containing(start: &PhaseState, i: &[u8], j: &[u8], k: u64) -> Result<Self> {
        let root = Self::root(start);
        let phase = root.phase.advanced(k);
        let ell = phase.lift()? as usize;
        let k = k as usize;
        if i.len() < k {
            return Err(Error::InsufficientDepth {
                needed: k,
                available: i.len(),
            });
        }
        if j.len() < ell {
            return Err(Error::InsufficientDepth {
                needed: ell,
                available: j.len(),
            });
        }
        Ok(ApproxSquare {
            i: i[..k].to_vec(),
            j: j[..ell].to_vec(),
            phase,
        })
    }

    pub fn m(&self) -> usize {
        self.phase.angle().m() as usize
    }

    pub fn n(&self) -> usize {
        self.phase.angle().n() as usize
    }

    pub fn k(&self) -> usize {
        self.i.len()
    }

    pub fn ell(&self) -> usize {
        self.j.len()
    }

    pub fn i_prefix(&self) -> &[u8] {
        &self.i
    }

    pub fn j_prefix(&self) -> &[u8] {
        &self.j
    }

    pub fn phase(&self) -> &PhaseState {
        &self.phase
    }

    /// `φ^k(t)`, the phase of the normalized shape `R_{φ^k(t)}`.
    pub fn shape_phase(&self) -> Result<PhaseValue> {
        self.phase.value()
    }

    /// Height over width of the normalized shape, `n^{φ^k(t)} ∈ [1, n)`.
    pub fn eccentricity(&self) -> Result<f64> {
        Ok((self.n() as f64).powf(self.shape_phase()?.to_f64()))
    }

    /// Width and height in the frame of the root box `R_t = [0,1] × [0, n^t]`.
    pub fn normalized_size(&self) -> Result<(f64, f64)> {
        let w = (self.m() as f64).powi(-(self.k() as i32));
        Ok((w, w * self.eccentricity()?))
    }

    pub fn x_range(&self) -> (Rational, Rational) {
        let a = adic_value(&self.i, self.m());
        let w = Rational::new(BigInt::one(), BigInt::from(self.m()).pow(self.k() as u32));
        let b = &a + w;
        (a, b)
    }

    pub fn y_range(&self) -> (Rational, Rational) {
        let c = adic_value(&self.j, self.n());
        let h = Rational::new(BigInt::one(), BigInt::from(self.n()).pow(self.ell() as u32));
        let d = &c + h;
        (c, d)
    }

    /// Lower-left corner as floats.
    pub fn corner_f64(&self) -> (f64, f64) {
        xi_f64(self.m(), self.n(), &self.i, &self.j)
    }

    /// True when the cell touches the right edge of the unit square.
    pub fn closed_right(&self) -> bool {
        self.i.iter().all(|&d| d as usize == self.m() - 1)
    }

    pub fn closed_top(&self) -> bool {
        self.j.iter().all(|&d| d as usize == self.n() - 1)
    }

    pub fn contains(&self, x: &Rational, y: &Rational) -> bool {
        let (a, b) = self.x_range();
        let (c, d) = self.y_range();
        let in_x = x >= &a && (x < &b || (self.closed_right() && x == &b));
        let in_y = y >= &c && (y < &d || (self.closed_top() && y == &d));
        in_x && in_y
    }

    /// True when `Δ` splits this cell vertically as well (`φ^k(t) >= 1 - α`).
    pub fn splits_vertically(&self) -> Result<bool> {
        self.phase.wraps()
    }

    /// `Δ(R)`: `m` children, or `mn` when the phase has reached `1 - α`.
    pub fn children(&self) -> Result<Vec<ApproxSquare>> {
        let phase = self.phase.advanced(1);
        let vertical = self.splits_vertically()?;
        let (m, n) = (self.m() as u8, self.n() as u8);
        let mut out = Vec::with_capacity(if vertical { m as usize * n as usize } else { m as usize });
        for a in 0..m {
            let mut i = self.i.clone();
            i.push(a);
            if vertical {
                for b in 0..n {
                    let mut j = self.j.clone();
                    j.push(b);
                    out.push(ApproxSquare {
                        i: i.clone(),
                        j,
                        phase: phase.clone(),
                    });
                }
            } else {
                out.push(ApproxSquare {
                    i,
                    j: self.j.clone(),
                    phase: phase.clone(),
                });
            }
        }
        Ok(out)
    }
}

impl PartialEq for ApproxSquare {
    fn eq(&self, other: &Self) -> bool {
        self.i == other.i
            && self.j == other.j
            && self.phase.steps() == other.phase.steps()
            && self.phase.start() == other.phase.start()
    }
}

pub fn partition_children(square: &ApproxSquare) -> Result<Vec<ApproxSquare>> {
    square.children()
}

/// One state `Z^k(t, i, j, μ)` of the skew product, held as offsets into
/// the base words.
#[derive(Clone, Debug)]
pub struct SceneryState {
    spec: Arc<BernoulliSpec>,
    base: Arc<SymbolicPoint>,
    cursor: PhaseCursor,
}

impl SceneryState {
    pub fn new(spec: Arc<BernoulliSpec>, base: Arc<SymbolicPoint>, start: &PhaseState) -> Result<Self> {
        Ok(SceneryState {
            spec,
            base,
            cursor: PhaseCursor::new(start)?,
        })
    }

    pub fn spec(&self) -> &Arc<BernoulliSpec> {
        &self.spec
    }

    pub fn base(&self) -> &Arc<SymbolicPoint> {
        &self.base
    }

    /// The step count `k`, which is also the offset into `i`.
    pub fn k(&self) -> usize {
        self.cursor.steps() as usize
    }

    /// `ℓ_t(k)`, the offset into `j`.
    pub fn ell(&self) -> usize {
        self.cursor.lift() as usize
    }

    pub fn cursor(&self) -> &PhaseCursor {
        &self.cursor
    }

    pub fn phase(&self) -> PhaseValue {
        self.cursor.value()
    }

    pub fn phase_f64(&self) -> f64 {
        self.cursor.value_f64()
    }

    /// `σ^k i`.
    pub fn i_tail(&self) -> &[u8] {
        &self.base.i.digits()[self.k().min(self.base.i.len())..]
    }

    /// `σ^{ℓ} j`.
    pub fn j_tail(&self) -> &[u8] {
        &self.base.j.digits()[self.ell().min(self.base.j.len())..]
    }

    /// The word `i_ℓ … i_{k-1}` generating the minimeasure `Ψ_{k-ℓ}(σ^ℓ i)`.
    pub fn minimeasure_word(&self) -> Result<&[u8]> {
        let (k, ell) = (self.k(), self.ell());
        if self.base.i.len() < k {
            return Err(Error::InsufficientDepth {
                needed: k,
                available: self.base.i.len(),
            });
        }
        Ok(&self.base.i.digits()[ell..k])
    }

    /// The measure coordinate `μ^{C_t^k(i,j)} = Ψ_{k-ℓ}(σ^ℓ i)`.
    pub fn minimeasure(&self, h: usize) -> Result<CylinderMeasure> {
        let word = self.minimeasure_word()?;
        CylinderMeasure::psi(self.spec.clone(), word, Some(word.len()), h)
    }

    /// Applies `Z` once.
    pub fn step(&self) -> Result<SceneryState> {
        let mut next = self.clone();
        next.cursor.step()?;
        Ok(next)
    }

    /// Applies `Z` `q` times.
    pub fn advance(&mut self, q: u64) -> Result<()> {
        self.cursor.advance(q)
    }
}

/// The `q`-sparse orbit `Z^{qr}(t, i, j, μ)` for `r = 0, 1, …, steps - 1`.
pub struct SceneryOrbit {
    state: SceneryState,
    q: u64,
    remaining: usize,
}

impl Iterator for SceneryOrbit {
    type Item = Result<SceneryState>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.state.clone();
        if self.remaining > 0 {
            if let Err(e) = self.state.advance(self.q) {
                self.remaining = 0;
                return Some(Err(e));
            }
        }
        Some(Ok(out))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Lazily walks the `q`-sparse orbit of length `steps`.
pub fn z_orbit_iter(
    spec: &Arc<BernoulliSpec>,
    start: &PhaseState,
    point: Arc<SymbolicPoint>,
    steps: usize,
    q: u64,
) -> Result<SceneryOrbit> {
    let q = q.max(1);
    let last = q * steps as u64;
    if (point.i.len() as u64) < last {
        return Err(Error::InsufficientDepth {
            needed: last as usize,
            available: point.i.len(),
        });
    }
    let ell = start.advanced(last).lift()? as usize;
    if point.j.len() < ell {
        return Err(Error::InsufficientDepth {
            needed: ell,
            available: point.j.len(),
        });
    }
    Ok(SceneryOrbit {
        state: SceneryState::new(spec.clone(), point, start)?,
        q,
        remaining: steps,
    })
}

pub fn z_orbit(
    spec: &Arc<BernoulliSpec>,
    start: &PhaseState,
    point: Arc<SymbolicPoint>,
    steps: usize,
    q: u64,
) -> Result<Vec<SceneryState>> {
    z_orbit_iter(spec, start, point, steps, q)?.collect()
}

/// `Ψ_{k-ℓ}(σ^ℓ i)` with `ℓ = ℓ_t(k)`, after checking that `(i, j)` charges the cell.
pub fn minimeasure(
    spec: &Arc<BernoulliSpec>,
    start: &PhaseState,
    point: &SymbolicPoint,
    k: u64,
    h: usize,
) -> Result<CylinderMeasure> {
    let ell = start.advanced(k).lift()? as usize;
    let k = k as usize;
    check_cell(spec, point, k, ell)?;
    let word = &point.i.digits()[ell..k];
    CylinderMeasure::psi(spec.clone(), word, Some(k - ell), h)
}

/// The same measure computed as the blow-up of `μ` at `[i|_k] × [j|_ℓ]`.
pub fn minimeasure_by_blowup(
    spec: &Arc<BernoulliSpec>,
    start: &PhaseState,
    point: &SymbolicPoint,
    k: u64,
    h: usize,
) -> Result<CylinderMeasure> {
    let ell = start.advanced(k).lift()? as usize;
    let k = k as usize;
    check_cell(spec, point, k, ell)?;
    let mu = Arc::new(CylinderMeasure::bernoulli(spec.clone(), k + h));
    blowup(&mu, &point.i.prefix(k), &point.j.prefix(ell))
}

fn check_cell(spec: &BernoulliSpec, point: &SymbolicPoint, k: usize, ell: usize) -> Result<()> {
    if point.i.len() < k {
        return Err(Error::InsufficientDepth {
            needed: k,
            available: point.i.len(),
        });
    }
    if point.j.len() < ell {
        return Err(Error::InsufficientDepth {
            needed: ell,
            available: point.j.len(),
        });
    }
    if spec
        .cylinder_mass_digits(&point.i.digits()[..k], &point.j.digits()[..ell])
        .is_zero()
    {
        return Err(Error::ZeroMassCylinder);
    }
    Ok(())
}

/// The coded point, its depth-`k` cell and its position after normalizing the
/// cell to `R*_{φ^k(t)} = S_{φ^k(t)}([0,1]²)`.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub xi: (Rational, Rational),
    pub square: ApproxSquare,
    pub rescaled: (f64, f64),
}

pub fn embed(
    spec: &BernoulliSpec,
    start: &PhaseState,
    i: &IWord,
    j: &JWord,
    k: u64,
) -> Result<Embedding> {
    let (m, n) = (spec.m(), spec.n());
    let xi = xi(m, n, i.digits(), j.digits());
    let square = ApproxSquare::containing(start, i.digits(), j.digits(), k)?;
    let (a, _) = square.x_range();
    let (c, _) = square.y_range();
    let u = (&xi.0 - a) * Rational::from(BigInt::from(m).pow(square.k() as u32));
    let v = (&xi.1 - c) * Rational::from(BigInt::from(n).pow(square.ell() as u32));
    let s = square.shape_phase()?.to_f64();
    let nf = n as f64;
    let rescaled = (
        nf.powf(-s / 2.0) * rational_to_f64(&u),
        nf.powf(s / 2.0) * rational_to_f64(&v),
    );
    Ok(Embedding {
        xi,
        square,
        rescaled,
    })
}
