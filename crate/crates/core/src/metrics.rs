//! Distances between cylinder measures, metric balls, empirical scenery
//! distributions and simple test functions along the scenery flow.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::phase::{AlphaCertificate, PhaseCursor, PhaseState, PhaseValue, PhaseWindow};
use crate::scenery::{z_orbit_iter, SceneryState};
use crate::symbolic::{rational_to_f64, BernoulliSpec, CylinderMeasure, Rational, RowDesc, SymbolicPoint};

/// The smallest `h₀ >= 0` with `m^{-h₀}` below every nonzero gap
/// `|p_i(j) - p_{i'}(j)|`; zero when all rows coincide.
pub fn h0(spec: &BernoulliSpec) -> usize {
    let mut gap: Option<Rational> = None;
    for i in 0..spec.m() {
        for i2 in (i + 1)..spec.m() {
            for j in 0..spec.n() {
                let d = (spec.conditional(i, j) - spec.conditional(i2, j)).abs();
                if d.is_positive() && gap.as_ref().map_or(true, |g| &d < g) {
                    gap = Some(d);
                }
            }
        }
    }
    let Some(gap) = gap else { return 0 };
    let m = BigInt::from(spec.m());
    let mut h = 0u32;
    while Rational::new(BigInt::one(), m.pow(h)) >= gap {
        h += 1;
    }
    h as usize
}

/// `d(ν₁, ν₂) = m^{-g}` where `g` is the first generation on which the two
/// measures disagree, and `0` if they agree through the common generation cap.
///
/// For `h` below the cap, `d < m^{-h}` holds exactly when the measures agree
/// on every cylinder of generation `h`.
pub fn prokhorov_distance(nu1: &CylinderMeasure, nu2: &CylinderMeasure) -> Result<f64> {
    let g = first_disagreement(nu1, nu2)?;
    let m = nu1.spec().m() as f64;
    Ok(g.map_or(0.0, |g| m.powi(-(g as i32))))
}

/// The first generation of disagreement, or `None` through the common cap.
pub fn first_disagreement(nu1: &CylinderMeasure, nu2: &CylinderMeasure) -> Result<Option<usize>> {
    let (s1, s2) = (nu1.spec(), nu2.spec());
    if s1.m() != s2.m() || s1.n() != s2.n() {
        return Err(Error::IncompatibleSpecs);
    }
    let cap = nu1.generation().min(nu2.generation());
    if s1 == s2 {
        if let (Ok(p1), Ok(p2)) = (nu1.row_profile(cap), nu2.row_profile(cap)) {
            return Ok(p1.iter().zip(&p2).position(|(a, b)| a != b).map(|l| l + 1));
        }
    }
    first_disagreement_by_tables(nu1, nu2)
}

/// Same as [`first_disagreement`], comparing cylinder masses one generation at a time.
pub fn first_disagreement_by_tables(
    nu1: &CylinderMeasure,
    nu2: &CylinderMeasure,
) -> Result<Option<usize>> {
    let cap = nu1.generation().min(nu2.generation());
    for g in 1..=cap {
        if !nu1.agrees_through(nu2, g)? {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

/// `ν ∈ 𝓑(v, h)`: `ν` agrees with `Ψ(v)` on all cylinders of generation `h`.
pub fn ball_membership(nu: &CylinderMeasure, v: &[u8], h: usize) -> Result<bool> {
    if h == 0 {
        return Ok(true);
    }
    let profile = nu.row_profile(h)?;
    Ok(profile == centre_profile(nu.spec(), v, h)?)
}

fn centre_profile(spec: &Arc<BernoulliSpec>, v: &[u8], h: usize) -> Result<Vec<RowDesc>> {
    CylinderMeasure::psi(spec.clone(), v, None, h)?.row_profile(h)
}

/// The phase coordinate of an empirical scenery distribution.
#[derive(Clone, Debug)]
pub enum PhaseMarginal {
    /// Phase samples in orbit order (irrational rotation).
    Continuous(Vec<f64>),
    /// Exact atoms with visit counts (rational rotation).
    Atoms(BTreeMap<Rational, u64>),
}

impl PhaseMarginal {
    /// Kolmogorov-Smirnov distance to Lebesgue measure on `[0, 1)`.
    pub fn ks_uniform(&self) -> f64 {
        match self {
            PhaseMarginal::Continuous(values) => ks_uniform(values),
            PhaseMarginal::Atoms(atoms) => {
                let total: u64 = atoms.values().sum();
                let mut acc = 0u64;
                let mut worst: f64 = 0.0;
                for (x, &c) in atoms {
                    let x = rational_to_f64(x);
                    worst = worst.max((acc as f64 / total as f64 - x).abs());
                    acc += c;
                    worst = worst.max((acc as f64 / total as f64 - x).abs());
                }
                worst
            }
        }
    }
}

/// Kolmogorov-Smirnov distance of samples in `[0,1)` to the uniform law.
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

/// A finitely supported distribution on Ψ-type measures, keyed by their
/// restriction to a generation cap.
#[derive(Clone, Debug)]
pub struct EmpiricalDistribution {
    spec: Arc<BernoulliSpec>,
    cap: usize,
    atoms: BTreeMap<Vec<RowDesc>, Atom>,
    total: u64,
    phases: Option<PhaseMarginal>,
}

#[derive(Clone, Debug)]
struct Atom {
    count: u64,
    representative: CylinderMeasure,
}

impl EmpiricalDistribution {
    pub fn new(spec: Arc<BernoulliSpec>, cap: usize) -> Self {
        EmpiricalDistribution {
            spec,
            cap,
            atoms: BTreeMap::new(),
            total: 0,
            phases: None,
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn spec(&self) -> &Arc<BernoulliSpec> {
        &self.spec
    }

    /// Adds one unit of mass at `ν`; measures agreeing through the cap share an atom.
    pub fn push(&mut self, nu: CylinderMeasure) -> Result<()> {
        let key = nu.row_profile(self.cap)?;
        self.total += 1;
        self.atoms
            .entry(key)
            .or_insert_with(|| Atom {
                count: 0,
                representative: nu.truncate(self.cap),
            })
            .count += 1;
        Ok(())
    }

    /// Merges another distribution over the same spec and cap.
    pub fn merge(&mut self, other: EmpiricalDistribution) -> Result<()> {
        if self.spec != other.spec || self.cap != other.cap {
            return Err(Error::IncompatibleSpecs);
        }
        self.total += other.total;
        for (key, atom) in other.atoms {
            match self.atoms.get_mut(&key) {
                Some(a) => a.count += atom.count,
                None => {
                    self.atoms.insert(key, atom);
                }
            }
        }
        self.phases = match (self.phases.take(), other.phases) {
            (Some(PhaseMarginal::Continuous(mut a)), Some(PhaseMarginal::Continuous(b))) => {
                a.extend(b);
                Some(PhaseMarginal::Continuous(a))
            }
            (Some(PhaseMarginal::Atoms(mut a)), Some(PhaseMarginal::Atoms(b))) => {
                for (x, c) in b {
                    *a.entry(x).or_default() += c;
                }
                Some(PhaseMarginal::Atoms(a))
            }
            (a, None) => a,
            (None, b) => b,
            _ => return Err(Error::IncompatibleSpecs),
        };
        Ok(())
    }

    pub fn set_phases(&mut self, phases: PhaseMarginal) {
        self.phases = Some(phases);
    }

    pub fn phases(&self) -> Option<&PhaseMarginal> {
        self.phases.as_ref()
    }

    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    /// `(representative measure, weight)` pairs in key order.
    pub fn atoms(&self) -> impl Iterator<Item = (&CylinderMeasure, f64)> {
        let total = self.total as f64;
        self.atoms
            .values()
            .map(move |a| (&a.representative, a.count as f64 / total))
    }

    /// `∫ f dP`.
    pub fn expectation(&self, mut f: impl FnMut(&CylinderMeasure) -> f64) -> f64 {
        self.atoms().map(|(nu, w)| w * f(nu)).sum()
    }

    /// Mass of the atoms whose first `g` row descriptors equal `profile`.
    fn classes(&self, g: usize) -> BTreeMap<&[RowDesc], u64> {
        let mut out: BTreeMap<&[RowDesc], u64> = BTreeMap::new();
        for (key, atom) in &self.atoms {
            *out.entry(&key[..g]).or_default() += atom.count;
        }
        out
    }

    /// Prokhorov distance between the two distributions for the metric
    /// [`prokhorov_distance`] on measures.
    ///
    /// Balls of that metric at radius in `(m^{-G-1}, m^{-G}]` are the classes
    /// of measures agreeing through generation `G`, so the distance is
    /// `min_G max(TV_G, m^{-G-1})`, where `TV_G` is the total variation
    /// between the class masses, and `TV_cap` past the cap.
    pub fn prokhorov(&self, other: &EmpiricalDistribution) -> Result<f64> {
        if self.spec.m() != other.spec.m() || self.spec.n() != other.spec.n() {
            return Err(Error::IncompatibleSpecs);
        }
        let cap = self.cap.min(other.cap);
        let m = self.spec.m() as f64;
        let mut best = f64::INFINITY;
        for g in 0..=cap {
            let a = self.classes(g);
            let b = other.classes(g);
            let (ta, tb) = (self.total as f64, other.total as f64);
            let mut tv = 0.0;
            for (key, &ca) in &a {
                let pb = b.get(key).map_or(0.0, |&c| c as f64 / tb);
                tv += (ca as f64 / ta - pb).max(0.0);
            }
            let radius = if g == cap { 0.0 } else { m.powi(-(g as i32 + 1)) };
            if tv <= m.powi(-(g as i32)) {
                best = best.min(tv.max(radius));
            }
        }
        Ok(best)
    }
}

/// Empirical distribution of the measure coordinates of `Z^{qk}`, `k < steps`,
/// together with the phase marginal.
pub fn scenery_distribution(
    spec: &Arc<BernoulliSpec>,
    start: &PhaseState,
    point: Arc<SymbolicPoint>,
    steps: usize,
    q: u64,
    cap: usize,
) -> Result<EmpiricalDistribution> {
    let mut dist = EmpiricalDistribution::new(spec.clone(), cap);
    let rational = matches!(start.angle().certificate(), AlphaCertificate::Rational { .. });
    let mut continuous = Vec::new();
    let mut atoms: BTreeMap<Rational, u64> = BTreeMap::new();
    for state in z_orbit_iter(spec, start, point, steps, q)? {
        let state = state?;
        dist.push(state.minimeasure(cap)?)?;
        match state.phase() {
            PhaseValue::Exact(x) if rational => *atoms.entry(x).or_default() += 1,
            v => continuous.push(v.to_f64()),
        }
    }
    dist.set_phases(if rational {
        PhaseMarginal::Atoms(atoms)
    } else {
        PhaseMarginal::Continuous(continuous)
    });
    Ok(dist)
}

/// `g = χ_{[a,b) × [i'] × [j'] × 𝓑(v,h)}` on `𝕋 × Σ × P(Σ)`.
#[derive(Clone, Debug)]
pub struct SimpleTestFunction {
    pub a: Rational,
    pub b: Rational,
    pub i_word: Vec<u8>,
    pub j_word: Vec<u8>,
    pub v: Vec<u8>,
    pub h: usize,
}

impl SimpleTestFunction {
    pub fn new(
        spec: &BernoulliSpec,
        a: Rational,
        b: Rational,
        i_word: Vec<u8>,
        j_word: Vec<u8>,
        v: Vec<u8>,
        h: usize,
    ) -> Result<Self> {
        spec.check_i(&i_word)?;
        spec.check_j(&j_word)?;
        spec.check_i(&v)?;
        if v.len() < h {
            return Err(Error::InsufficientDepth {
                needed: h,
                available: v.len(),
            });
        }
        if a.is_negative() || b > Rational::one() || a > b {
            return Err(Error::Config(format!("bad phase interval [{a}, {b})")));
        }
        if v[..h].iter().any(|&d| spec.q(d as usize).is_zero()) {
            return Err(Error::ZeroMassCylinder);
        }
        Ok(SimpleTestFunction {
            a,
            b,
            i_word,
            j_word,
            v,
            h,
        })
    }

    /// `g(Z^k(t, i, j, μ))`, reading the state's offsets.
    pub fn eval(&self, spec: &BernoulliSpec, state: &SceneryState, window: &PhaseWindow) -> Result<bool> {
        if !window.contains(state.cursor())? {
            return Ok(false);
        }
        let i = state.base().i.digits();
        let j = state.base().j.digits();
        let (k, ell) = (state.k(), state.ell());
        if !i[k..].starts_with(&self.i_word) || !j[ell..].starts_with(&self.j_word) {
            return Ok(false);
        }
        Ok(self.ball_holds(spec, k - ell, &i[ell..]))
    }

    /// Whether `Ψ_{gap}(w) ∈ 𝓑(v, h)`.
    fn ball_holds(&self, spec: &BernoulliSpec, gap: usize, w: &[u8]) -> bool {
        if self.h == 0 || spec.positive_row_classes() <= 1 {
            return true;
        }
        gap >= self.h
            && (0..self.h).all(|l| spec.row_class(w[l] as usize) == spec.row_class(self.v[l] as usize))
    }

    /// `π₁μ[i'] · ∫_{B(v,h)} μ_w[j'] dπ₁μ(w)` exactly.
    pub fn rho(&self, spec: &BernoulliSpec) -> Rational {
        let mut out: Rational = self.i_word.iter().map(|&a| spec.q(a as usize)).product();
        let len = self.h.max(self.j_word.len());
        for l in 0..len {
            let factor: Rational = if l < self.h {
                let class = spec.row_class(self.v[l] as usize);
                (0..spec.m())
                    .filter(|&a| spec.row_class(a) == class)
                    .map(|a| match self.j_word.get(l) {
                        Some(&b) => spec.weight(a, b as usize).clone(),
                        None => spec.q(a).clone(),
                    })
                    .sum()
            } else {
                spec.r(self.j_word[l] as usize).clone()
            };
            out *= factor;
        }
        out
    }

    /// `τ([a,b)) · ρ` with `τ` Lebesgue for irrational `α` and the
    /// equidistributed measure on the `q`-sparse orbit of `t` otherwise.
    pub fn exact_limit(&self, spec: &BernoulliSpec, start: &PhaseState, q: u64) -> Result<Rational> {
        Ok(phase_measure(start, q, &self.a, &self.b)? * self.rho(spec))
    }
}

/// `λ[a,b)` for irrational `α`; `τ_{t,q}[a,b)` for rational `α = p'/q'`,
/// which is uniform on the `q'/gcd(q,q')` points `frac(t + r·gcd(q,q')/q')`.
pub fn phase_measure(start: &PhaseState, q: u64, a: &Rational, b: &Rational) -> Result<Rational> {
    match start.angle().certificate() {
        AlphaCertificate::Irrational => Ok(b - a),
        AlphaCertificate::Rational { den, .. } => {
            let step = q.max(1).gcd(&den);
            let size = den / step;
            let cursor = PhaseCursor::new(&PhaseState::new(start.angle().clone(), start.start().clone()))?;
            let mut hits = 0u64;
            for r in 0..size {
                let x = cursor.residue_value(r * step).expect("rational cursor");
                if x >= a && x < b {
                    hits += 1;
                }
            }
            Ok(Rational::new(BigInt::from(hits), BigInt::from(size)))
        }
    }
}

/// Empirical averages of several simple test functions along one `q`-sparse orbit.
pub fn simple_test_averages(
    spec: &Arc<BernoulliSpec>,
    gs: &[SimpleTestFunction],
    start: &PhaseState,
    point: Arc<SymbolicPoint>,
    steps: usize,
    q: u64,
) -> Result<Vec<f64>> {
    let base_cursor = PhaseCursor::new(start)?;
    let windows: Vec<PhaseWindow> = gs
        .iter()
        .map(|g| PhaseWindow::new(&base_cursor, &g.a, &g.b))
        .collect();
    let mut hits = vec![0u64; gs.len()];
    let mut seen = 0u64;
    for state in z_orbit_iter(spec, start, point, steps, q)? {
        let state = state?;
        seen += 1;
        for ((g, w), h) in gs.iter().zip(&windows).zip(hits.iter_mut()) {
            if g.eval(spec, &state, w)? {
                *h += 1;
            }
        }
    }
    Ok(hits.iter().map(|&h| h as f64 / seen.max(1) as f64).collect())
}

/// `(empirical mean, exact limit)` of one simple test function.
pub fn simple_test_average(
    spec: &Arc<BernoulliSpec>,
    g: &SimpleTestFunction,
    start: &PhaseState,
    point: Arc<SymbolicPoint>,
    steps: usize,
    q: u64,
) -> Result<(f64, Rational)> {
    let empirical = simple_test_averages(spec, std::slice::from_ref(g), start, point, steps, q)?[0];
    Ok((empirical, g.exact_limit(spec, start, q)?))
}
