//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! `cargo test -p cpchain --test acceptance`

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cpchain::dimension::{
    default_window, entropy_slope_dimension, exact_dimension, fiber_dimension, marstrand_sweep, project_measure,
    Projection, Sign, SweepConfig,
};
use cpchain::distance::{
    box_dim_estimate, cantor_endpoints, distset_experiment, geometric_scales, DistsetConfig, SupportMode,
    DEFAULT_PAIR_BUDGET,
};
use cpchain::metrics::{ball_membership, first_disagreement_by_tables, h0, prokhorov_distance, SimpleTestFunction};
use cpchain::metrics::simple_test_averages;
use cpchain::phase::{Angle, Frac, PhaseCursor, PhaseState, PhaseValue};
use cpchain::scenery::{minimeasure, minimeasure_by_blowup};
use cpchain::symbolic::{parse_rational, rational_to_f64, BernoulliSpec, CylinderMeasure, Rational};
use cpchain::util::median;
use num_integer::Integer;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPES: [(usize, usize); 6] = [(2, 3), (2, 4), (2, 5), (3, 4), (3, 5), (4, 8)];

const MINIMEASURE_CASES: usize = 1000;
const MINIMEASURE_TIME: Duration = Duration::from_secs(30);
const TRUNCATION_CASES: usize = 1000;
const ROTATION_CASES: usize = 10_000;
const ROTATION_BITS: usize = 256;
const BALL_SPECS: usize = 100;
const BALL_MEASURES: usize = 1000;
const ERGODIC_TOL: f64 = 0.02;
const ERGODIC_SEEDS: u64 = 10;
const ERGODIC_STEPS: usize = 100_000;
const HALVING_RANGE: (f64, f64) = (1.5, 2.5);
const ERGODIC_TIME: Duration = Duration::from_secs(120);
const ATOM_STEPS: usize = 100_000;
const ATOM_FREQ_TOL: f64 = 1e-3;
const DIM_SPECS: usize = 20;
const DIM_TOL: f64 = 0.05;
const SLOPED_FLOOR: f64 = 0.9;
const AXIS_TOL: f64 = 0.05;
const SCALING_CASES: usize = 100;
const SCALING_REL: f64 = 1e-12;
const CANTOR_TOL: f64 = 0.08;
const C1_FLOOR: f64 = 0.85;
const U_FLOOR: f64 = 0.9;

type Outcome = (bool, String);

fn s1() -> Arc<BernoulliSpec> {
    Arc::new(BernoulliSpec::from_strings(2, 3, &[vec!["1/2", "1/4", "0"], vec!["0", "1/8", "1/8"]]).unwrap())
}

fn random_spec(rng: &mut ChaCha8Rng, shapes: &[(usize, usize)], scale: u32) -> Arc<BernoulliSpec> {
    let (m, n) = shapes[rng.gen_range(0..shapes.len())];
    Arc::new(BernoulliSpec::random(rng, m, n, scale, 0.3).unwrap())
}

fn angle_for(spec: &BernoulliSpec, bits: usize) -> Arc<Angle> {
    Arc::new(Angle::new(spec.m() as u64, spec.n() as u64, bits).unwrap())
}

fn random_start(angle: &Arc<Angle>, rng: &mut ChaCha8Rng) -> PhaseState {
    PhaseState::new(angle.clone(), Frac::random(rng, angle.bits()))
}

fn entropy(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

fn minimeasure_paths() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let clock = Instant::now();
    let mut bad = 0;
    for _ in 0..MINIMEASURE_CASES {
        let spec = random_spec(&mut rng, &SHAPES, 5);
        let angle = angle_for(&spec, 256);
        let point = spec.sample_point(&mut rng, 16);
        let k = rng.gen_range(0..=12);
        let h = if spec.m() * spec.n() > 12 { 1 } else { rng.gen_range(1..=2) };
        let start = random_start(&angle, &mut rng);
        let fast = minimeasure(&spec, &start, &point, k, h).unwrap();
        let slow = minimeasure_by_blowup(&spec, &start, &point, k, h).unwrap();
        if fast.materialize().unwrap() != slow.materialize().unwrap() {
            bad += 1;
        }
    }
    let took = clock.elapsed();
    (
        bad == 0 && took < MINIMEASURE_TIME,
        format!("{bad} mismatches in {MINIMEASURE_CASES} cases, {:.1} s", took.as_secs_f64()),
    )
}

fn truncation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut bad = 0;
    for _ in 0..TRUNCATION_CASES {
        let spec = random_spec(&mut rng, &SHAPES, 5);
        let word = spec.sample_horizontal(&mut rng, 10);
        let size = spec.m() * spec.n();
        let kmax = (1..=4).take_while(|&k| size.pow(k as u32) <= 5000).last().unwrap_or(1);
        let k = rng.gen_range(1..=kmax);
        let a = CylinderMeasure::psi(spec.clone(), word.digits(), Some(k), k).unwrap();
        let b = CylinderMeasure::psi(spec.clone(), word.digits(), None, k).unwrap();
        if !(1..=k).all(|g| a.agrees_through(&b, g).unwrap()) {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} mismatches in {TRUNCATION_CASES} cases"))
}

fn rotation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let pairs = [(2u64, 3u64), (2, 5), (3, 5), (3, 7), (5, 7)];
    let mut bad = 0;
    for _ in 0..ROTATION_CASES {
        let (m, n) = pairs[rng.gen_range(0..pairs.len())];
        let angle = Arc::new(Angle::new(m, n, ROTATION_BITS).unwrap());
        let k = rng.gen_range(0..=10_000);
        let state = random_start(&angle, &mut rng).advanced(k);
        if state.floor_formula().unwrap().1 != state.hit_count().unwrap() {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} mismatches in {ROTATION_CASES} cases at {ROTATION_BITS} bits"))
}

fn distinct_rows(spec: &BernoulliSpec) -> bool {
    (0..spec.m()).all(|i| !spec.q(i).is_zero())
        && (0..spec.m()).all(|i| (i + 1..spec.m()).all(|i2| spec.conditional_row(i) != spec.conditional_row(i2)))
}

fn ball_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let shapes = [(2, 3), (2, 4), (3, 4), (2, 5)];
    let (mut bad, mut inside, mut tabled, mut specs) = (0, 0, 0, 0);
    while specs < BALL_SPECS {
        let spec = random_spec(&mut rng, &shapes, 3);
        if !distinct_rows(&spec) {
            continue;
        }
        specs += 1;
        let base = h0(&spec);
        let m = spec.m() as f64;
        for _ in 0..BALL_MEASURES {
            let h = base + rng.gen_range(0..=3);
            let w = spec.sample_horizontal(&mut rng, h + 6);
            let nu = match rng.gen_range(0..3) {
                0 => CylinderMeasure::psi(spec.clone(), w.digits(), None, h).unwrap(),
                _ => {
                    let k = rng.gen_range(h.saturating_sub(2)..=h + 4);
                    CylinderMeasure::psi(spec.clone(), w.digits(), Some(k), h).unwrap()
                }
            };
            let mut v = w.digits()[..h].to_vec();
            if h > 0 && rng.gen_bool(0.5) {
                let l = rng.gen_range(0..h);
                v[l] = spec.sample_horizontal(&mut rng, 1).digits()[0];
            }
            let centre = CylinderMeasure::psi(spec.clone(), &v, None, h).unwrap();
            let member = ball_membership(&nu, &v, h).unwrap();
            let near = prokhorov_distance(&nu, &centre).unwrap() < m.powi(-(h as i32));
            let mut ok = member == near;
            if (spec.m() * spec.n()).pow(h as u32) <= 1300 {
                tabled += 1;
                ok &= member == first_disagreement_by_tables(&nu, &centre).unwrap().is_none();
            }
            inside += member as usize;
            if !ok {
                bad += 1;
            }
        }
    }
    let total = BALL_SPECS * BALL_MEASURES;
    (
        bad == 0,
        format!("{bad} mismatches in {total} measures ({inside} inside, {tabled} also checked on tables)"),
    )
}

fn s1_tests(spec: &BernoulliSpec) -> Vec<SimpleTestFunction> {
    let r = |s: &str| parse_rational(s).unwrap();
    let w = |s: &str| s.bytes().map(|b| b - b'0').collect::<Vec<u8>>();
    [
        ("0", "1/2", "0", "", "", 0),
        ("1/4", "3/4", "1", "1", "", 0),
        ("0", "1", "", "0", "000", 3),
        ("1/3", "1", "0", "12", "010", 3),
        ("0", "2/3", "10", "2", "101", 3),
    ]
    .iter()
    .map(|&(a, b, i, j, v, h)| SimpleTestFunction::new(spec, r(a), r(b), w(i), w(j), w(v), h).unwrap())
    .collect()
}

fn ergodic_averages() -> Outcome {
    let spec = s1();
    let start = PhaseState::from_rational(angle_for(&spec, 256), &Rational::zero());
    let gs = s1_tests(&spec);
    let clock = Instant::now();
    let (mut worst, mut log_ratio, mut ratios) = (0f64, 0f64, 0usize);
    for q in 1..=3u64 {
        let limits: Vec<f64> = gs
            .iter()
            .map(|g| rational_to_f64(&g.exact_limit(&spec, &start, q).unwrap()))
            .collect();
        let runs: Vec<(Vec<f64>, Vec<f64>)> = {
            use rayon::prelude::*;
            (0..ERGODIC_SEEDS)
                .into_par_iter()
                .map(|seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 * q + seed);
                    let point = Arc::new(spec.sample_point(&mut rng, 4 * ERGODIC_STEPS * q as usize + 16));
                    let short = simple_test_averages(&spec, &gs, &start, point.clone(), ERGODIC_STEPS, q).unwrap();
                    let long = simple_test_averages(&spec, &gs, &start, point, 4 * ERGODIC_STEPS, q).unwrap();
                    (short, long)
                })
                .collect()
        };
        for (g, limit) in limits.iter().enumerate() {
            let mut short: Vec<f64> = runs.iter().map(|r| (r.0[g] - limit).abs()).collect();
            let mut long: Vec<f64> = runs.iter().map(|r| (r.1[g] - limit).abs()).collect();
            let (a, b) = (median(&mut short), median(&mut long));
            worst = worst.max(a);
            log_ratio += (a / b).ln();
            ratios += 1;
        }
    }
    let ratio = (log_ratio / ratios as f64).exp();
    let took = clock.elapsed();
    (
        worst <= ERGODIC_TOL && (HALVING_RANGE.0..=HALVING_RANGE.1).contains(&ratio) && took < ERGODIC_TIME,
        format!(
            "worst median error {worst:.5} at N={ERGODIC_STEPS}, error ratio N->4N {ratio:.3}, {:.1} s",
            took.as_secs_f64()
        ),
    )
}

fn rational_atoms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut bad = Vec::new();
    for (m, n) in [(2u64, 4u64), (4, 8)] {
        let angle = Arc::new(Angle::new(m, n, 256).unwrap());
        // alpha = log m / log n as a reduced fraction
        let (a, b) = ((m as f64).log2().round() as u64, (n as f64).log2().round() as u64);
        let den = b / a.gcd(&b);
        for q in 1..=3u64 {
            let start = random_start(&angle, &mut rng);
            let t = start.start().to_rational();
            let step = q.gcd(&den);
            let size = den / step;
            let predicted: Vec<Rational> = (0..size)
                .map(|r| {
                    let x = &t + Rational::new((r * step).into(), den.into());
                    &x - x.floor()
                })
                .collect();
            let mut counts = vec![0usize; predicted.len()];
            let mut cursor = PhaseCursor::new(&start).unwrap();
            let mut stray = 0;
            for _ in 0..ATOM_STEPS {
                match cursor.value() {
                    PhaseValue::Exact(x) => match predicted.iter().position(|p| p == &x) {
                        Some(p) => counts[p] += 1,
                        None => stray += 1,
                    },
                    _ => stray += 1,
                }
                cursor.advance(q).unwrap();
            }
            let expected = 1.0 / size as f64;
            let freq_ok = counts
                .iter()
                .all(|&c| c > 0 && (c as f64 / ATOM_STEPS as f64 - expected).abs() <= ATOM_FREQ_TOL);
            if stray > 0 || !freq_ok {
                bad.push(format!("({m},{n}) q={q}"));
            }
        }
    }
    (bad.is_empty(), format!("6 orbits checked, failures: {bad:?}"))
}

fn dimension_slopes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut specs = vec![s1(), Arc::new(BernoulliSpec::uniform(2, 3).unwrap())];
    while specs.len() < DIM_SPECS {
        specs.push(random_spec(&mut rng, &SHAPES, 6));
    }
    let mut worst = 0f64;
    let mut notes = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        let angle = angle_for(spec, 128);
        let slope = entropy_slope_dimension(spec, &angle, 8..=14, 64).unwrap();
        // independent closed form from the weights
        let (m, n) = (spec.m() as f64, spec.n() as f64);
        let hp = entropy((0..spec.m()).flat_map(|i| (0..spec.n()).map(move |j| (i, j))).map(|(i, j)| {
            rational_to_f64(spec.weight(i, j))
        }));
        let hq = entropy((0..spec.m()).map(|i| rational_to_f64(spec.q(i))));
        let oracle = hp / n.ln() + (1.0 / m.ln() - 1.0 / n.ln()) * hq;
        worst = worst.max((slope - oracle).abs());
        if idx < 2 {
            notes.push(format!("{slope:.4} vs {oracle:.4}"));
        }
    }
    let s1_ok = (exact_dimension(&s1()) - 1.40355).abs() < 1e-4;
    let u_ok = (exact_dimension(&BernoulliSpec::uniform(2, 3).unwrap()) - 2.0).abs() < 1e-12;
    (
        worst <= DIM_TOL && s1_ok && u_ok,
        format!("worst |slope - dim| {worst:.2e} over {DIM_SPECS} specs; S1 {}, U {}", notes[0], notes[1]),
    )
}

fn projections() -> Outcome {
    let spec = s1();
    let angle = Angle::new(2, 3, 256).unwrap();
    let config = SweepConfig {
        s_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
        signs: vec![Sign::Plus, Sign::Minus],
        include_axes: true,
        q: 8,
        samples: 200,
        seed: 1,
        depth: 12,
        window: default_window(12),
        budget: 1 << 24,
    };
    let rows = marstrand_sweep(&spec, &angle, &config).unwrap();
    let hq = entropy([0.75, 0.25]);
    let hr = entropy([0.5, 0.375, 0.125]);
    let hp = entropy([0.5, 0.25, 0.125, 0.125]);
    let (pi1, pi2, fiber) = (hq / 2f64.ln(), hr / 3f64.ln(), (hp - hq) / 3f64.ln());
    let mut ok = (fiber - fiber_dimension(&spec)).abs() < 1e-12;
    let mut low = f64::INFINITY;
    let mut axes = String::new();
    for row in &rows {
        match row.projection {
            Projection::Pi1 => {
                ok &= (row.eq_estimate - pi1).abs() <= AXIS_TOL && (row.direct_estimate - pi1).abs() <= AXIS_TOL;
                axes += &format!("pi1 E={:.3} direct={:.3} (target {pi1:.4}); ", row.eq_estimate, row.direct_estimate);
            }
            Projection::Pi2 => {
                ok &= (row.direct_estimate - pi2).abs() <= AXIS_TOL && (row.eq_estimate - fiber).abs() <= AXIS_TOL;
                axes += &format!(
                    "pi2 direct={:.3} (target {pi2:.4}) E={:.3} (fibre {fiber:.4}); ",
                    row.direct_estimate, row.eq_estimate
                );
            }
            Projection::Sloped { .. } => {
                low = low.min(row.eq_estimate).min(row.direct_estimate);
            }
        }
    }
    ok &= low >= SLOPED_FLOOR;
    (ok, format!("{axes}lowest sloped estimate {low:.3}"))
}

fn scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut bad = 0;
    for _ in 0..SCALING_CASES {
        let spec = random_spec(&mut rng, &[(2, 3), (2, 4), (3, 4), (2, 5)], 5);
        let angle = angle_for(&spec, 128);
        let start = random_start(&angle, &mut rng);
        let s: f64 = rng.gen();
        let t: f64 = rng.gen();
        let sign = if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let proj = Projection::Sloped { sign, s };
        let mut k = rng.gen_range(1..=8);
        // keep the atom count manageable on wide digit sets
        while k > 1 && (spec.m() * spec.n()).pow(k as u32) > 1 << 16 {
            k -= 1;
        }
        let scaled = project_measure(&spec, k, &start, &proj, Some(t), 1 << 20).unwrap();
        let shifted = project_measure(&spec, k, &start, &proj.shifted(t), None, 1 << 20).unwrap();
        let c = (spec.n() as f64).powf(t / 2.0);
        let same = scaled.atoms().len() == shifted.atoms().len()
            && scaled
                .atoms()
                .iter()
                .zip(shifted.atoms())
                .all(|(a, b)| (a.0 * c - b.0).abs() <= SCALING_REL * b.0.abs().max(1.0) && a.1 == b.1);
        if !same {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} mismatches in {SCALING_CASES} cases"))
}

fn distance_sets() -> Outcome {
    let cantor = box_dim_estimate(&cantor_endpoints(10), &geometric_scales(3f64.powi(-8), 3f64.powi(-3), 11)).unwrap();
    let cantor_target = 2f64.ln() / 3f64.ln();
    let config = DistsetConfig {
        mode: SupportMode::Exhaustive { k: 9, t: 0.0 },
        eps_min: 2f64.powi(-9),
        eps_max: 2f64.powi(-4),
        scale_count: 6,
        pair_budget: DEFAULT_PAIR_BUDGET,
        budget: 1 << 22,
    };
    let c1 = BernoulliSpec::carpet(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap();
    let u = BernoulliSpec::uniform(2, 3).unwrap();
    let d1 = distset_experiment(&c1, &config, 1).unwrap().dim_d_estimate;
    let du = distset_experiment(&u, &config, 1).unwrap().dim_d_estimate;
    (
        (cantor - cantor_target).abs() <= CANTOR_TOL && d1 >= C1_FLOOR && du >= U_FLOOR,
        format!("Cantor {cantor:.3} (target {cantor_target:.4}), C1 {d1:.3}, U {du:.3}"),
    )
}

const SMALL_CONFIG: &str = "\
[spec]
m = 2
n = 3
weights = 1/2 1/4 0; 0 1/8 1/8

[run]
seed = 7
threads = 3

[dim]
k_min = 4
k_max = 8
phases = 8

[scenery]
steps = 4000
q = 1 2

[project]
s_grid = 0.3 0.7
samples = 12
depth = 8
q = 4

[distset]
mode = monte-carlo
points = 300
depth = 9

[render]
depth = 5
width = 32
height = 32

[verify]
specs = 3
cases = 4
";

fn run_cli(config: &Path, out: &Path, command: &str) -> Option<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_cpchain"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .ok()?;
    if !status.status.success() {
        return None;
    }
    std::fs::read(out.join(format!("{command}.csv"))).ok()
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.ini");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let mut bad = Vec::new();
    for command in ["dim", "scenery", "project", "distset", "render", "verify"] {
        let a = run_cli(&config, &dir.path().join("a"), command);
        let b = run_cli(&config, &dir.path().join("b"), command);
        if a.is_none() || a != b {
            bad.push(command);
        }
    }
    (bad.is_empty(), format!("6 commands run twice, differing or failing: {bad:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("minimeasure fast path equals blow-up", minimeasure_paths),
        ("truncated Psi agrees with Psi", truncation),
        ("rotation floor formula equals hit count", rotation),
        ("ball membership equals Psi_h agreement", ball_lemma),
        ("scenery ergodic averages on S1", ergodic_averages),
        ("rational phases sit on predicted atoms", rational_atoms),
        ("entropy slope matches exact dimension", dimension_slopes),
        ("projection dimensions on S1", projections),
        ("projection scaling identity", scaling),
        ("distance set dimensions", distance_sets),
        ("CLI output is reproducible", reproducibility),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        let number = idx + 1;
        if only.is_some_and(|o| o != number) {
            continue;
        }
        let clock = Instant::now();
        let (pass, detail) = check();
        println!(
            "{} criterion {number}: {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64()
        );
        failed += !pass as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
