//! Randomized checks of the exact identities the library relies on.
//!
//! Each check pits two independent computations against each other on random
//! inputs and counts disagreements; a correct build reports zero failures.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dimension::{cell_count, partition_entropy, partition_entropy_enumerated, project_measure, Projection, Sign};
use crate::error::Result;
use crate::metrics::{ball_membership, first_disagreement_by_tables, h0};
use crate::phase::{Angle, Frac, PhaseState};
use crate::scenery::{minimeasure, minimeasure_by_blowup};
use crate::symbolic::{BernoulliSpec, CylinderMeasure, Rational};
use crate::util::stream_rng;

/// Digit sizes used for random specs.
pub const SHAPES: [(usize, usize); 6] = [(2, 3), (2, 4), (2, 5), (3, 4), (3, 5), (4, 8)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityReport {
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
}

impl IdentityReport {
    pub const HEADER: [&'static str; 3] = ["identity", "cases", "failures"];

    pub fn record(&self) -> Vec<String> {
        vec![self.name.into(), self.cases.to_string(), self.failures.to_string()]
    }
}

type Check = fn(&Arc<BernoulliSpec>, &Arc<Angle>, &mut ChaCha8Rng) -> Result<bool>;

pub const IDENTITIES: [(&str, Check); 7] = [
    ("minimeasure_fast_path_equals_blowup", minimeasure_paths),
    ("truncated_psi_agrees_with_psi", truncated_psi),
    ("rotation_floor_equals_hit_count", rotation_counter),
    ("ball_membership_equals_table_agreement", ball_lemma),
    ("projection_scaling_identity", scaling_identity),
    ("entropy_chain_rule_equals_enumeration", entropy_routes),
    ("cylinder_mass_additivity", mass_additivity),
];

fn random_start<R: Rng>(angle: &Arc<Angle>, rng: &mut R) -> PhaseState {
    PhaseState::new(angle.clone(), Frac::random(rng, angle.bits()))
}

/// The largest depth `<= k` whose partition has at most `limit` cells.
fn fit_depth(spec: &BernoulliSpec, start: &PhaseState, mut k: usize, limit: u128) -> Result<usize> {
    while k > 1 && cell_count(spec, k, start.advanced(k as u64).lift()? as usize) > limit {
        k -= 1;
    }
    Ok(k)
}

/// The largest generation whose cylinder tables stay below a few thousand entries.
fn table_cap(spec: &BernoulliSpec) -> usize {
    let size = spec.m() * spec.n();
    (1..).take_while(|&h| size.pow(h as u32) <= 2000).last().unwrap_or(1)
}

fn minimeasure_paths(spec: &Arc<BernoulliSpec>, angle: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let point = spec.sample_point(rng, 16);
    let k = rng.gen_range(0..=8);
    let h = rng.gen_range(1..=table_cap(spec).min(2));
    let start = random_start(angle, rng);
    let fast = minimeasure(spec, &start, &point, k, h)?;
    let slow = minimeasure_by_blowup(spec, &start, &point, k, h)?;
    Ok(fast.materialize()? == slow.materialize()?)
}

fn truncated_psi(spec: &Arc<BernoulliSpec>, _: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let word = spec.sample_horizontal(rng, 8);
    let k = rng.gen_range(1..=3);
    let a = CylinderMeasure::psi(spec.clone(), word.digits(), Some(k), k)?;
    let b = CylinderMeasure::psi(spec.clone(), word.digits(), None, k)?;
    (1..=k).try_fold(true, |ok, g| Ok(ok && a.agrees_through(&b, g)?))
}

fn rotation_counter(_: &Arc<BernoulliSpec>, angle: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let k = rng.gen_range(0..2000);
    let state = random_start(angle, rng).advanced(k);
    Ok(state.floor_formula()?.1 == state.hit_count()?)
}

fn ball_lemma(spec: &Arc<BernoulliSpec>, _: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let h = (h0(spec) + rng.gen_range(0..=1)).min(table_cap(spec));
    let w = spec.sample_horizontal(rng, h + 4);
    let nu = if rng.gen_bool(0.5) {
        CylinderMeasure::psi(spec.clone(), w.digits(), None, h)?
    } else {
        CylinderMeasure::psi(spec.clone(), w.digits(), Some(h + rng.gen_range(0..=3)), h)?
    };
    // a centre equal to w on most letters so both outcomes occur
    let mut v = w.digits()[..h].to_vec();
    if h > 0 && rng.gen_bool(0.5) {
        let l = rng.gen_range(0..h);
        v[l] = spec.sample_horizontal(rng, 1).digits()[0];
    }
    let centre = CylinderMeasure::psi(spec.clone(), &v, None, h)?;
    let inside = first_disagreement_by_tables(&nu, &centre)?.is_none();
    Ok(ball_membership(&nu, &v, h)? == inside)
}

fn scaling_identity(spec: &Arc<BernoulliSpec>, angle: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let s: f64 = rng.gen();
    let t: f64 = rng.gen();
    let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let proj = Projection::Sloped { sign, s };
    let start = random_start(angle, rng);
    let k = fit_depth(spec, &start, rng.gen_range(1..=8), 1 << 16)?;
    let scaled = project_measure(spec, k, &start, &proj, Some(t), 1 << 20)?;
    let shifted = project_measure(spec, k, &start, &proj.shifted(t), None, 1 << 20)?;
    let c = (spec.n() as f64).powf(t / 2.0);
    Ok(scaled.atoms().len() == shifted.atoms().len()
        && scaled
            .atoms()
            .iter()
            .zip(shifted.atoms())
            .all(|(a, b)| (a.0 * c - b.0).abs() <= 1e-12 * b.0.abs().max(1.0) && a.1 == b.1))
}

fn entropy_routes(spec: &Arc<BernoulliSpec>, angle: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let start = random_start(angle, rng);
    let k = fit_depth(spec, &start, rng.gen_range(1..=6), 1 << 14)?;
    let closed = partition_entropy(spec, k, &start)?;
    let enumerated = partition_entropy_enumerated(spec, k, &start, 1 << 20)?;
    Ok((closed - enumerated).abs() <= 1e-9 * closed.abs().max(1.0))
}

fn mass_additivity(spec: &Arc<BernoulliSpec>, _: &Arc<Angle>, rng: &mut ChaCha8Rng) -> Result<bool> {
    let p = spec.sample_point(rng, 6);
    let li = rng.gen_range(0..=5);
    let lj = rng.gen_range(0..=li);
    let i = &p.i.digits()[..li];
    let j = &p.j.digits()[..lj];
    let parent = spec.cylinder_mass_digits(i, j);
    let by_i: Rational = (0..spec.m() as u8)
        .map(|a| spec.cylinder_mass_digits(&[i, &[a]].concat(), j))
        .sum();
    let by_j: Rational = (0..spec.n() as u8)
        .map(|b| spec.cylinder_mass_digits(i, &[j, &[b]].concat()))
        .sum();
    Ok(parent == by_i && parent == by_j)
}

/// Runs every identity `cases` times on the given spec and on `random_specs`
/// further random specs.
pub fn verify_suite(
    base: &BernoulliSpec,
    random_specs: usize,
    cases: usize,
    precision: usize,
    seed: u64,
) -> Result<Vec<IdentityReport>> {
    let mut specs = vec![base.clone()];
    let mut rng = stream_rng(seed, 0);
    for _ in 0..random_specs {
        let (m, n) = SHAPES[rng.gen_range(0..SHAPES.len())];
        specs.push(BernoulliSpec::random(&mut rng, m, n, 4, 0.3)?);
    }
    let mut reports: Vec<IdentityReport> = IDENTITIES
        .iter()
        .map(|(name, _)| IdentityReport {
            name,
            cases: 0,
            failures: 0,
        })
        .collect();
    for (s, spec) in specs.into_iter().enumerate() {
        let spec = Arc::new(spec);
        let angle = Arc::new(Angle::new(spec.m() as u64, spec.n() as u64, precision)?);
        for (c, (_, check)) in IDENTITIES.iter().enumerate() {
            let mut rng = stream_rng(seed, 1 + (s * IDENTITIES.len() + c) as u64);
            for _ in 0..cases {
                reports[c].cases += 1;
                if !check(&spec, &angle, &mut rng)? {
                    reports[c].failures += 1;
                }
            }
        }
    }
    Ok(reports)
}
