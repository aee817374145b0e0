//! Entropy and dimension estimators: partition entropy over `Δ^k`, the
//! closed-form dimension, `r`-entropy of discrete measures, projections and
//! the `E_q` estimator.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::phase::{AlphaCertificate, Angle, Frac, PhaseState};
use crate::symbolic::{entropy, BernoulliSpec, Rational};
use crate::util::{chunks, slope, stream_rng};

pub const DEFAULT_ATOM_BUDGET: u128 = 1 << 24;

/// Lower-left corner and mass of a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub x: f64,
    pub y: f64,
    pub mass: f64,
}

/// Number of positive-mass cells `[i|_k] × [j|_ℓ]`.
pub fn cell_count(spec: &BernoulliSpec, k: usize, ell: usize) -> u128 {
    let pairs = (0..spec.m())
        .flat_map(|a| (0..spec.n()).map(move |b| (a, b)))
        .filter(|&(a, b)| !spec.weight(a, b).is_zero())
        .count() as u128;
    let rows = (0..spec.m()).filter(|&a| !spec.q(a).is_zero()).count() as u128;
    let common = ell.min(k);
    let mut count: u128 = 1;
    for l in 0..k.max(ell) {
        let f = if l < common {
            pairs
        } else if l < k {
            rows
        } else {
            (0..spec.n()).filter(|&b| !spec.r(b).is_zero()).count() as u128
        };
        count = count.saturating_mul(f);
    }
    count
}

/// All positive-mass cells `[i|_k] × [j|_ℓ]` of the unit square.
pub fn depth_cells(spec: &BernoulliSpec, k: usize, ell: usize, budget: u128) -> Result<Vec<Cell>> {
    let needed = cell_count(spec, k, ell);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let (m, n) = (spec.m(), spec.n());
    let w: Vec<f64> = (0..m * n).map(|x| spec.weight(x / n, x % n).to_f64().unwrap()).collect();
    let q: Vec<f64> = (0..m).map(|a| spec.q(a).to_f64().unwrap()).collect();
    let r: Vec<f64> = (0..n).map(|b| spec.r(b).to_f64().unwrap()).collect();
    let mut cells = vec![Cell {
        x: 0.0,
        y: 0.0,
        mass: 1.0,
    }];
    let common = ell.min(k);
    for l in 0..k.max(ell) {
        let sx = (m as f64).powi(-(l as i32 + 1));
        let sy = (n as f64).powi(-(l as i32 + 1));
        let mut next = Vec::with_capacity(cells.len() * m);
        for c in &cells {
            if l < common {
                for a in 0..m {
                    for b in 0..n {
                        let p = w[a * n + b];
                        if p > 0.0 {
                            next.push(Cell {
                                x: c.x + a as f64 * sx,
                                y: c.y + b as f64 * sy,
                                mass: c.mass * p,
                            });
                        }
                    }
                }
            } else if l < k {
                for (a, &p) in q.iter().enumerate() {
                    if p > 0.0 {
                        next.push(Cell {
                            x: c.x + a as f64 * sx,
                            mass: c.mass * p,
                            ..*c
                        });
                    }
                }
            } else {
                for (b, &p) in r.iter().enumerate() {
                    if p > 0.0 {
                        next.push(Cell {
                            y: c.y + b as f64 * sy,
                            mass: c.mass * p,
                            ..*c
                        });
                    }
                }
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// `H(μ, Δ^k)` by the chain rule: `ℓ H(p) + (k - ℓ) H(q)` with `ℓ = ℓ_t(k)`.
pub fn partition_entropy(spec: &BernoulliSpec, k: usize, start: &PhaseState) -> Result<f64> {
    let ell = start.advanced(k as u64).lift()? as f64;
    Ok(ell * spec.entropy_pairs() + (k as f64 - ell) * spec.entropy_rows())
}

/// `H(μ, Δ^k)` summed over the exact masses of all cells.
pub fn partition_entropy_enumerated(
    spec: &BernoulliSpec,
    k: usize,
    start: &PhaseState,
    budget: u128,
) -> Result<f64> {
    let ell = start.advanced(k as u64).lift()? as usize;
    let needed = cell_count(spec, k, ell);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut masses = vec![Rational::from_integer(1.into())];
    for l in 0..k {
        let factors: Vec<&Rational> = if l < ell {
            (0..spec.m())
                .flat_map(|a| (0..spec.n()).map(move |b| (a, b)))
                .map(|(a, b)| spec.weight(a, b))
                .filter(|p| !p.is_zero())
                .collect()
        } else {
            (0..spec.m()).map(|a| spec.q(a)).filter(|p| !p.is_zero()).collect()
        };
        masses = masses
            .iter()
            .flat_map(|x| factors.iter().map(move |&p| x * p))
            .collect();
    }
    Ok(entropy(masses.iter().map(|x| x.to_f64().unwrap())))
}

/// Monte Carlo estimate of `H(μ, Δ^k) = E[-log μ(Δ^k(x))]`.
pub fn partition_entropy_monte_carlo(
    spec: &BernoulliSpec,
    k: usize,
    start: &PhaseState,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let ell = start.advanced(k as u64).lift()? as usize;
    let mut rng = stream_rng(seed, 0);
    let mut total = 0.0;
    for _ in 0..samples {
        let p = spec.sample_point(&mut rng, k);
        let (i, j) = (p.i.digits(), p.j.digits());
        let mut log_mass = 0.0;
        for l in 0..k {
            let a = i[l] as usize;
            log_mass += if l < ell {
                spec.weight(a, j[l] as usize).to_f64().unwrap().ln()
            } else {
                spec.q(a).to_f64().unwrap().ln()
            };
        }
        total -= log_mass;
    }
    Ok(total / samples.max(1) as f64)
}

/// `H(μ, Δ^k)` averaged over the phases `t = (r + 1/2)/phases`.
pub fn phase_averaged_entropy(
    spec: &BernoulliSpec,
    angle: &Arc<Angle>,
    k: usize,
    phases: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for r in 0..phases {
        let t = (r as f64 + 0.5) / phases as f64;
        let start = PhaseState::new(angle.clone(), Frac::from_f64(t, angle.bits()));
        total += partition_entropy(spec, k, &start)?;
    }
    Ok(total / phases as f64)
}

/// Least-squares slope of the phase-averaged `H(μ, Δ^k)` against `k log m`.
pub fn entropy_slope_dimension(
    spec: &BernoulliSpec,
    angle: &Arc<Angle>,
    ks: std::ops::RangeInclusive<usize>,
    phases: usize,
) -> Result<f64> {
    let logm = (spec.m() as f64).ln();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in ks {
        xs.push(k as f64 * logm);
        ys.push(phase_averaged_entropy(spec, angle, k, phases)?);
    }
    slope(&xs, &ys).ok_or_else(|| Error::DegenerateRange("need two depths".into()))
}

/// `dim μ = H(p)/log n + (1/log m - 1/log n) H(q)`.
pub fn exact_dimension(spec: &BernoulliSpec) -> f64 {
    let (lm, ln) = ((spec.m() as f64).ln(), (spec.n() as f64).ln());
    spec.entropy_pairs() / ln + (1.0 / lm - 1.0 / ln) * spec.entropy_rows()
}

/// `dim π₁μ = H(q)/log m`.
pub fn horizontal_dimension(spec: &BernoulliSpec) -> f64 {
    spec.entropy_rows() / (spec.m() as f64).ln()
}

/// `dim π₂μ = H(r)/log n`.
pub fn vertical_dimension(spec: &BernoulliSpec) -> f64 {
    spec.entropy_columns() / (spec.n() as f64).ln()
}

/// Dimension of the fibre measures `μ_x`: `(H(p) - H(q))/log n`.
pub fn fiber_dimension(spec: &BernoulliSpec) -> f64 {
    (spec.entropy_pairs() - spec.entropy_rows()) / (spec.n() as f64).ln()
}

/// Atoms on the line at a stated resolution.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure1D {
    atoms: Vec<(f64, f64)>,
    sorted: Vec<f64>,
    prefix: Vec<f64>,
    resolution: f64,
}

impl DiscreteMeasure1D {
    /// `atoms` are `(location, weight)`; their order is kept as given.
    pub fn new(atoms: Vec<(f64, f64)>, resolution: f64) -> Self {
        let mut order: Vec<(f64, f64)> = atoms.clone();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let sorted = order.iter().map(|a| a.0).collect();
        let mut prefix = Vec::with_capacity(order.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for a in &order {
            acc += a.1;
            prefix.push(acc);
        }
        DiscreteMeasure1D {
            atoms,
            sorted,
            prefix,
            resolution,
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn total_mass(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// `H_r(ν) = -Σ_a w_a log ν(B(x_a, r))` with `B(x, r) = {y : |y - x| < r/2}`,
    /// the open interval of length `r` centred at `x`.
    pub fn r_entropy(&self, r: f64) -> Result<f64> {
        if r <= self.resolution {
            return Err(Error::ResolutionTooCoarse {
                r,
                resolution: self.resolution,
            });
        }
        let half = r / 2.0;
        let xs = &self.sorted;
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut h = 0.0;
        for (idx, &x) in xs.iter().enumerate() {
            while xs[lo] <= x - half {
                lo += 1;
            }
            while hi < xs.len() && xs[hi] < x + half {
                hi += 1;
            }
            let w = self.prefix[idx + 1] - self.prefix[idx];
            if w > 0.0 {
                h -= w * (self.prefix[hi] - self.prefix[lo]).ln();
            }
        }
        Ok(h)
    }
}

/// Atoms in the plane at a stated resolution.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure2D {
    atoms: Vec<(f64, f64, f64)>,
    resolution: f64,
}

impl DiscreteMeasure2D {
    pub fn new(atoms: Vec<(f64, f64, f64)>, resolution: f64) -> Self {
        DiscreteMeasure2D { atoms, resolution }
    }

    pub fn atoms(&self) -> &[(f64, f64, f64)] {
        &self.atoms
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn project(&self, proj: &Projection, n: usize) -> DiscreteMeasure1D {
        DiscreteMeasure1D::new(
            self.atoms
                .iter()
                .map(|&(x, y, w)| (proj.apply(n, x, y), w))
                .collect(),
            self.resolution * proj.lipschitz(n),
        )
    }

    /// `r`-entropy for open sup-norm balls of diameter `r`.
    pub fn r_entropy(&self, r: f64) -> Result<f64> {
        if r <= self.resolution {
            return Err(Error::ResolutionTooCoarse {
                r,
                resolution: self.resolution,
            });
        }
        let half = r / 2.0;
        let key = |x: f64| (x / r).floor() as i64;
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (idx, &(x, y, _)) in self.atoms.iter().enumerate() {
            grid.entry((key(x), key(y))).or_default().push(idx);
        }
        let mut h = 0.0;
        for &(x, y, w) in &self.atoms {
            if w <= 0.0 {
                continue;
            }
            let (gx, gy) = (key(x), key(y));
            let mut ball = 0.0;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = grid.get(&(gx + dx, gy + dy)) {
                        for &b in ids {
                            let (bx, by, bw) = self.atoms[b];
                            if (bx - x).abs() < half && (by - y).abs() < half {
                                ball += bw;
                            }
                        }
                    }
                }
            }
            h -= w * ball.ln();
        }
        Ok(h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Linear maps `ℝ² → ℝ`: the coordinate projections and `π_s^±(x, y) = x ± n^{-s} y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Projection {
    Pi1,
    Pi2,
    Sloped { sign: Sign, s: f64 },
}

impl Projection {
    pub fn apply(&self, n: usize, x: f64, y: f64) -> f64 {
        match *self {
            Projection::Pi1 => x,
            Projection::Pi2 => y,
            Projection::Sloped { sign, s } => x + sign.factor() * (n as f64).powf(-s) * y,
        }
    }

    /// Coefficients `(c_x, c_y)` with `π(x, y) = c_x x + c_y y`.
    pub fn coefficients(&self, n: usize) -> (f64, f64) {
        match *self {
            Projection::Pi1 => (1.0, 0.0),
            Projection::Pi2 => (0.0, 1.0),
            Projection::Sloped { sign, s } => (1.0, sign.factor() * (n as f64).powf(-s)),
        }
    }

    fn lipschitz(&self, n: usize) -> f64 {
        let (a, b) = self.coefficients(n);
        a.abs() + b.abs()
    }

    /// `π_s ∘ S_t = n^{-t/2} π_{s-t}`; coordinate projections only rescale.
    pub fn shifted(&self, t: f64) -> Projection {
        match *self {
            Projection::Sloped { sign, s } => Projection::Sloped { sign, s: s - t },
            other => other,
        }
    }

    /// `s` as written in CSV output: `inf` for `π₁` and `-inf` for `π₂`.
    pub fn s_label(&self) -> String {
        match self {
            Projection::Pi1 => "inf".into(),
            Projection::Pi2 => "-inf".into(),
            Projection::Sloped { s, .. } => format!("{s}"),
        }
    }

    pub fn sign_label(&self) -> String {
        match self {
            Projection::Sloped { sign, .. } => sign.to_string(),
            _ => "+".into(),
        }
    }
}

/// `S_s(x, y) = (n^{-s/2} x, n^{s/2} y)`.
pub fn hyperbolic(n: usize, s: f64, x: f64, y: f64) -> (f64, f64) {
    let nf = n as f64;
    (nf.powf(-s / 2.0) * x, nf.powf(s / 2.0) * y)
}

/// `π(μ_k)` (or `π(S_s μ_k)` when `rescale = Some(s)`), with one atom at the
/// lower-left corner of each depth-`k` cell of `Δ^k`.
pub fn project_measure(
    spec: &BernoulliSpec,
    k: usize,
    start: &PhaseState,
    proj: &Projection,
    rescale: Option<f64>,
    budget: u128,
) -> Result<DiscreteMeasure1D> {
    let ell = start.advanced(k as u64).lift()? as usize;
    let cells = depth_cells(spec, k, ell, budget)?;
    let n = spec.n();
    let (sx, sy) = match rescale {
        Some(s) => hyperbolic(n, s, 1.0, 1.0),
        None => (1.0, 1.0),
    };
    let atoms = cells
        .iter()
        .map(|c| (proj.apply(n, sx * c.x, sy * c.y), c.mass))
        .collect();
    let resolution = (spec.m() as f64).powi(-(k as i32)) * sx.max(sy) * proj.lipschitz(n);
    Ok(DiscreteMeasure1D::new(atoms, resolution))
}

/// Scale window `j ∈ [2, k - 4]` for the direct estimator at depth `k`: finer
/// scales sit too close to the cell width of the corner-atom approximation.
pub fn default_window(depth: usize) -> (usize, usize) {
    (2, depth.saturating_sub(4).max(3))
}

/// Slope of `H_{m^{-j}}(π μ_k)` against `j log m` over `j ∈ window`.
pub fn direct_dimension(
    spec: &BernoulliSpec,
    k: usize,
    start: &PhaseState,
    proj: &Projection,
    window: (usize, usize),
    budget: u128,
) -> Result<f64> {
    let nu = project_measure(spec, k, start, proj, None, budget)?;
    let logm = (spec.m() as f64).ln();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in window.0..=window.1 {
        xs.push(j as f64 * logm);
        ys.push(nu.r_entropy((spec.m() as f64).powi(-(j as i32)))?);
    }
    slope(&xs, &ys).ok_or_else(|| Error::DegenerateRange(format!("window {window:?}")))
}

/// Histogram of `scale · Σ_l d_l b^{-l-1}`, `d_l ~ level(l)`, at bin width `w`.
///
/// Returns the index of the first bin and the bin masses; each leaf cylinder
/// is resolved below `w` and placed at its midpoint.
fn adic_histogram(
    base: usize,
    scale: f64,
    w: f64,
    level: impl Fn(usize) -> Vec<f64>,
) -> (i64, Vec<f64>) {
    let (lo, hi) = if scale >= 0.0 { (0.0, scale) } else { (scale, 0.0) };
    let first = (lo / w).floor() as i64;
    let last = (hi / w).floor() as i64;
    let mut bins = vec![0.0; (last - first + 1) as usize];
    let b = base as f64;
    let mut depth = 0;
    while scale.abs() * b.powi(-(depth as i32)) > w {
        depth += 1;
    }
    let laws: Vec<Vec<f64>> = (0..depth).map(&level).collect();
    // iterative DFS over (level, position, mass)
    let mut stack = vec![(0usize, 0.0f64, 1.0f64)];
    while let Some((l, pos, mass)) = stack.pop() {
        if l == depth {
            let mid = pos + scale * b.powi(-(depth as i32)) / 2.0;
            let idx = ((mid / w).floor() as i64 - first).clamp(0, bins.len() as i64 - 1);
            bins[idx as usize] += mass;
            continue;
        }
        let step = scale * b.powi(-(l as i32 + 1));
        for (d, &p) in laws[l].iter().enumerate() {
            if p > 0.0 {
                stack.push((l + 1, pos + d as f64 * step, mass * p));
            }
        }
    }
    (first, bins)
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            if x != 0.0 {
                for (j, &y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
        }
        return out;
    }
    let size = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| {
        let mut c: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        c.resize(size, Complex::new(0.0, 0.0));
        c
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    fa[..len]
        .iter()
        .map(|c| (c.re / size as f64).max(0.0))
        .collect()
}

/// `r`-entropy of a histogram with `r = 2·half_width·w`: the ball around a
/// bin covers the bins within `half_width - 1` fully and the next ones by half.
fn binned_r_entropy(bins: &[f64], half_width: usize) -> f64 {
    let total: f64 = bins.iter().sum();
    let mut prefix = Vec::with_capacity(bins.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &x in bins {
        acc += x / total;
        prefix.push(acc);
    }
    let len = bins.len() as i64;
    let at = |i: i64| -> f64 {
        if (0..len).contains(&i) {
            bins[i as usize] / total
        } else {
            0.0
        }
    };
    let sum = |lo: i64, hi: i64| prefix[hi.clamp(0, len) as usize] - prefix[lo.clamp(0, len) as usize];
    let hw = half_width as i64;
    let mut h = 0.0;
    for (i, &x) in bins.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let i = i as i64;
        let ball = sum(i - hw + 1, i + hw) + 0.5 * (at(i - hw) + at(i + hw));
        if ball > 0.0 {
            h -= x / total * ball.ln();
        }
    }
    h
}

/// Bins per entropy scale in the `E_q` estimator.
pub const EQ_BINS_PER_SCALE: usize = 8;

/// `(1/(q log m)) H_{m^{-q}}(π S_t(π₁μ × μ_i))` for one draw of `(i, t)`.
pub fn eq_sample(spec: &BernoulliSpec, proj: &Projection, q: u32, i: &[u8], t: f64) -> Result<f64> {
    let (m, n) = (spec.m(), spec.n());
    let r = (m as f64).powi(-(q as i32));
    let w = r / EQ_BINS_PER_SCALE as f64;
    let (sx, sy) = hyperbolic(n, t, 1.0, 1.0);
    let (cx, cy) = proj.coefficients(n);
    let q_law: Vec<f64> = (0..m).map(|a| spec.q(a).to_f64().unwrap()).collect();
    let (_, hx) = adic_histogram(m, cx * sx, w, |_| q_law.clone());
    let scale_y = cy * sy;
    let mut depth_y = 0;
    while scale_y.abs() * (n as f64).powi(-(depth_y as i32)) > w {
        depth_y += 1;
    }
    if i.len() < depth_y {
        return Err(Error::InsufficientDepth {
            needed: depth_y,
            available: i.len(),
        });
    }
    let (_, hy) = adic_histogram(n, scale_y, w, |l| {
        (0..n).map(|b| spec.conditional_f64(i[l] as usize, b)).collect()
    });
    let conv = convolve(&hx, &hy);
    let h = binned_r_entropy(&conv, EQ_BINS_PER_SCALE / 2);
    Ok(h / (q as f64 * (m as f64).ln()))
}

/// Samples per independent random stream in Monte Carlo loops.
pub const SAMPLES_PER_CHUNK: usize = 16;

/// Monte Carlo estimate of `E_q(π)` over `i ~ π₁μ` and `t ~ λ` (irrational
/// `α`) or `t` uniform on `{r/q'}` (rational `α = p'/q'`).
pub fn estimate_eq(
    spec: &BernoulliSpec,
    angle: &Angle,
    proj: &Projection,
    q: u32,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let depth = word_depth(spec, q);
    let per_chunk: Vec<Result<f64>> = chunks(samples, SAMPLES_PER_CHUNK)
        .into_par_iter()
        .enumerate()
        .map(|(c, range)| {
            let mut rng = stream_rng(seed, c as u64);
            let mut acc = 0.0;
            for _ in range {
                let t = match angle.certificate() {
                    AlphaCertificate::Irrational => rng.gen::<f64>(),
                    AlphaCertificate::Rational { den, .. } => rng.gen_range(0..den) as f64 / den as f64,
                };
                let i = spec.sample_horizontal(&mut rng, depth);
                acc += eq_sample(spec, proj, q, i.digits(), t)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for part in per_chunk {
        total += part?;
    }
    Ok(total / samples.max(1) as f64)
}

/// Digits of `i` needed to resolve the fibre at scale `m^{-q}/8` for every `t`.
fn word_depth(spec: &BernoulliSpec, q: u32) -> usize {
    let (m, n) = (spec.m() as f64, spec.n() as f64);
    let w = m.powi(-(q as i32)) / EQ_BINS_PER_SCALE as f64;
    // the largest vertical scale is n^{1/2}
    ((n.sqrt() / w).ln() / n.ln()).ceil() as usize + 1
}

/// Atoms of `S_t(π₁μ × μ_i)` at depth `(kx, ky)`.
pub fn fiber_product_measure(
    spec: &BernoulliSpec,
    i: &[u8],
    t: f64,
    kx: usize,
    ky: usize,
) -> Result<DiscreteMeasure2D> {
    if i.len() < ky {
        return Err(Error::InsufficientDepth {
            needed: ky,
            available: i.len(),
        });
    }
    let (m, n) = (spec.m(), spec.n());
    let mut xs = vec![(0.0, 1.0)];
    for l in 0..kx {
        let s = (m as f64).powi(-(l as i32 + 1));
        xs = xs
            .iter()
            .flat_map(|&(x, w)| {
                (0..m).filter_map(move |a| {
                    let p = spec.q(a).to_f64().unwrap();
                    (p > 0.0).then(|| (x + a as f64 * s, w * p))
                })
            })
            .collect();
    }
    let mut ys = vec![(0.0, 1.0)];
    for (l, &a) in i.iter().take(ky).enumerate() {
        let s = (n as f64).powi(-(l as i32 + 1));
        ys = ys
            .iter()
            .flat_map(|&(y, w)| {
                (0..n).filter_map(move |b| {
                    let p = spec.conditional_f64(a as usize, b);
                    (p > 0.0).then(|| (y + b as f64 * s, w * p))
                })
            })
            .collect();
    }
    let (sx, sy) = hyperbolic(n, t, 1.0, 1.0);
    let atoms = xs
        .iter()
        .flat_map(|&(x, wx)| ys.iter().map(move |&(y, wy)| (sx * x, sy * y, wx * wy)))
        .collect();
    let res = (sx * (m as f64).powi(-(kx as i32))).max(sy * (n as f64).powi(-(ky as i32)));
    Ok(DiscreteMeasure2D::new(atoms, res))
}

/// Parameters of a Marstrand sweep.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub s_grid: Vec<f64>,
    pub signs: Vec<Sign>,
    pub include_axes: bool,
    pub q: u32,
    pub samples: usize,
    pub seed: u64,
    pub depth: usize,
    pub window: (usize, usize),
    pub budget: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub projection: Projection,
    pub q: u32,
    pub eq_estimate: f64,
    pub direct_estimate: f64,
    pub samples: usize,
    pub seed: u64,
    /// Set for line-supported specs, whose rows carry the one-dimensional formula.
    pub flag: bool,
}

impl SweepRow {
    pub const HEADER: [&'static str; 8] = [
        "s",
        "sign",
        "q",
        "E_q_estimate",
        "direct_dim_estimate",
        "samples",
        "seed",
        "flag",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.projection.s_label(),
            self.projection.sign_label(),
            self.q.to_string(),
            format!("{:.6}", self.eq_estimate),
            format!("{:.6}", self.direct_estimate),
            self.samples.to_string(),
            self.seed.to_string(),
            (self.flag as u8).to_string(),
        ]
    }
}

/// Dimension of `πμ` for a measure carried by a line.
pub fn line_projection_dimension(spec: &BernoulliSpec, proj: &Projection) -> f64 {
    let d = exact_dimension(spec);
    match proj {
        Projection::Pi1 if spec.is_vertical_line() => 0.0,
        Projection::Pi2 if spec.is_horizontal_line() && !spec.is_vertical_line() => 0.0,
        _ => d,
    }
}

/// Both estimators for `π₁`, `π₂` (optionally) and `π_s^±` over the grid.
pub fn marstrand_sweep(spec: &BernoulliSpec, angle: &Angle, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.s_grid.is_empty() && !config.include_axes {
        return Err(Error::Config("empty projection grid".into()));
    }
    let mut projections = Vec::new();
    if config.include_axes {
        projections.push(Projection::Pi1);
        projections.push(Projection::Pi2);
    }
    for &sign in &config.signs {
        for &s in &config.s_grid {
            projections.push(Projection::Sloped { sign, s });
        }
    }
    let start = PhaseState::new(Arc::new(angle.clone()), Frac::zero(angle.bits()));
    projections
        .into_iter()
        .map(|proj| {
            let (eq, direct, flag) = if spec.is_line_supported() {
                let d = line_projection_dimension(spec, &proj);
                (d, d, true)
            } else {
                let eq = estimate_eq(spec, angle, &proj, config.q, config.samples, config.seed)?;
                let direct = direct_dimension(spec, config.depth, &start, &proj, config.window, config.budget)?;
                (eq, direct, false)
            };
            Ok(SweepRow {
                projection: proj,
                q: config.q,
                eq_estimate: eq,
                direct_estimate: direct,
                samples: config.samples,
                seed: config.seed,
                flag,
            })
        })
        .collect()
}
