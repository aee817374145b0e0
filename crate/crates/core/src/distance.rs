//! Distance sets of finite approximations to `spt μ` and box-counting
//! estimates of their dimension.

use std::f64::consts::PI;
use std::sync::Arc;

use num_integer::Integer;
use rand::Rng;
use rayon::prelude::*;

use crate::dimension::{depth_cells, exact_dimension};
use crate::error::{Error, Result};
use crate::phase::{Angle, Frac, PhaseState};
use crate::scenery::xi_f64;
use crate::symbolic::BernoulliSpec;
use crate::util::{chunks, slope, stream_rng};

pub const DIRECTION_ARCS: usize = 64;
pub const DEFAULT_PAIR_BUDGET: u64 = 10_000_000;
const PAIRS_PER_CHUNK: usize = 1 << 16;

/// How to pick points of the support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportMode {
    /// `count` points `ξ(i, j)` with `(i, j) ~ μ` to `depth` digits.
    MonteCarlo { count: usize, depth: usize },
    /// One corner point per positive-mass cell of `Δ^k` at phase `t`.
    Exhaustive { k: usize, t: f64 },
    /// One corner point per positive-mass cell `[i|_k] × [j|_k]`.
    Markov { k: usize },
}

/// Distinct points of `[0,1]²`.
#[derive(Clone, Debug)]
pub struct PointCloud {
    points: Vec<(f64, f64)>,
    depth: usize,
    seed: Option<u64>,
}

impl PointCloud {
    /// Sorts and removes duplicate points.
    pub fn new(mut points: Vec<(f64, f64)>, depth: usize, seed: Option<u64>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        points.dedup();
        PointCloud {
            points,
            depth,
            seed,
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn union(&self, other: &PointCloud) -> PointCloud {
        let mut pts = self.points.clone();
        pts.extend_from_slice(&other.points);
        PointCloud::new(pts, self.depth.max(other.depth), self.seed)
    }

    /// Image under `x ↦ R_θ x + v`.
    pub fn isometry(&self, theta: f64, shift: (f64, f64)) -> PointCloud {
        let (s, c) = theta.sin_cos();
        let pts = self
            .points
            .iter()
            .map(|&(x, y)| (c * x - s * y + shift.0, s * x + c * y + shift.1))
            .collect();
        PointCloud::new(pts, self.depth, self.seed)
    }
}

pub fn sample_support(spec: &BernoulliSpec, mode: SupportMode, seed: u64, budget: u128) -> Result<PointCloud> {
    let (m, n) = (spec.m(), spec.n());
    match mode {
        SupportMode::MonteCarlo { count, depth } => {
            let mut rng = stream_rng(seed, 0);
            let pts = (0..count)
                .map(|_| {
                    let p = spec.sample_point(&mut rng, depth);
                    xi_f64(m, n, p.i.digits(), p.j.digits())
                })
                .collect();
            Ok(PointCloud::new(pts, depth, Some(seed)))
        }
        SupportMode::Exhaustive { k, t } => {
            let angle = Arc::new(Angle::new(m as u64, n as u64, 128)?);
            let start = PhaseState::new(angle, Frac::from_f64(t, 128));
            let ell = start.advanced(k as u64).lift()? as usize;
            let cells = depth_cells(spec, k, ell, budget)?;
            Ok(PointCloud::new(cells.iter().map(|c| (c.x, c.y)).collect(), k, None))
        }
        SupportMode::Markov { k } => {
            let cells = depth_cells(spec, k, k, budget)?;
            Ok(PointCloud::new(cells.iter().map(|c| (c.x, c.y)).collect(), k, None))
        }
    }
}

/// Pairwise distances with direction diagnostics.
#[derive(Clone, Debug)]
pub struct DistanceSet {
    distances: Vec<f64>,
    arcs: Vec<u64>,
    pairs: u64,
    exhaustive: bool,
}

impl DistanceSet {
    /// Sorted distances.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Visit counts of the `64` arcs of `S¹` by the directions `±(y - x)/|y - x|`.
    pub fn arcs(&self) -> &[u64] {
        &self.arcs
    }

    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    /// True when every pair was used.
    pub fn exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// True when the sampled directions meet every arc.
    pub fn direction_coverage(&self) -> bool {
        self.arcs.iter().all(|&c| c > 0)
    }

    pub fn covered_arcs(&self) -> usize {
        self.arcs.iter().filter(|&&c| c > 0).count()
    }
}

/// The `idx`-th pair `(i, j)`, `i < j`, in the order `(0,1), (0,2), (1,2), (0,3), …`.
fn pair_at(idx: u64) -> (usize, usize) {
    let mut j = ((1.0 + (1.0 + 8.0 * idx as f64).sqrt()) / 2.0) as u64;
    while j * (j - 1) / 2 > idx {
        j -= 1;
    }
    while (j + 1) * j / 2 <= idx {
        j += 1;
    }
    let i = idx - j * (j - 1) / 2;
    (i as usize, j as usize)
}

fn arc_of(dx: f64, dy: f64) -> usize {
    let theta = dy.atan2(dx).rem_euclid(2.0 * PI);
    ((theta / (2.0 * PI) * DIRECTION_ARCS as f64) as usize).min(DIRECTION_ARCS - 1)
}

/// Distances over all pairs, or over `pair_budget` pairs drawn without
/// replacement by a random affine bijection of the pair index set.
pub fn distance_set_build(cloud: &PointCloud, pair_budget: u64, seed: u64) -> Result<DistanceSet> {
    let n = cloud.len() as u64;
    if n < 2 {
        return Err(Error::TooFewPoints(n as usize));
    }
    let total = n * (n - 1) / 2;
    let exhaustive = total <= pair_budget;
    let used = total.min(pair_budget);
    let (a, b) = if exhaustive {
        (1, 0)
    } else {
        let mut rng = stream_rng(seed, u64::MAX);
        let mut a = rng.gen_range(1..total);
        while a.gcd(&total) != 1 {
            a = rng.gen_range(1..total);
        }
        (a, rng.gen_range(0..total))
    };
    let pts = cloud.points();
    let parts: Vec<(Vec<f64>, Vec<u64>)> = chunks(used as usize, PAIRS_PER_CHUNK)
        .into_par_iter()
        .map(|range| {
            let mut d = Vec::with_capacity(range.len());
            let mut arcs = vec![0u64; DIRECTION_ARCS];
            for r in range {
                let idx = ((a as u128 * r as u128 + b as u128) % total as u128) as u64;
                let (i, j) = pair_at(idx);
                let (dx, dy) = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
                d.push(dx.hypot(dy));
                arcs[arc_of(dx, dy)] += 1;
                arcs[arc_of(-dx, -dy)] += 1;
            }
            (d, arcs)
        })
        .collect();
    let mut distances = Vec::with_capacity(used as usize);
    let mut arcs = vec![0u64; DIRECTION_ARCS];
    for (d, a) in parts {
        distances.extend(d);
        for (x, y) in arcs.iter_mut().zip(a) {
            *x += y;
        }
    }
    distances.par_sort_unstable_by(f64::total_cmp);
    Ok(DistanceSet {
        distances,
        arcs,
        pairs: used,
        exhaustive,
    })
}

/// A pair whose direction is within `eps` of `theta` modulo `π`.
pub fn select_pair(cloud: &PointCloud, theta: f64, eps: f64) -> Option<(usize, usize)> {
    let pts = cloud.points();
    for j in 1..pts.len() {
        for i in 0..j {
            let (dx, dy) = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
            let diff = (dy.atan2(dx) - theta).rem_euclid(PI);
            if diff.min(PI - diff) < eps {
                return Some((i, j));
            }
        }
    }
    None
}

/// `count` scales spaced geometrically from `eps_min` to `eps_max`.
pub fn geometric_scales(eps_min: f64, eps_max: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![eps_min];
    }
    let ratio = (eps_max / eps_min).ln() / (count - 1) as f64;
    (0..count).map(|c| eps_min * (ratio * c as f64).exp()).collect()
}

/// Number of grid cells `[kε, (k+1)ε)` met by the sorted values.
///
/// Values within `1e-9` cells below a grid line are counted in the cell above it.
pub fn occupied_cells(values: &[f64], eps: f64) -> usize {
    let mut count = 0;
    let mut last = None;
    for &v in values {
        let cell = (v / eps + 1e-9).floor() as i64;
        if last != Some(cell) {
            count += 1;
            last = Some(cell);
        }
    }
    count
}

/// Least-squares slope of `log N_ε` against `log(1/ε)`.
pub fn box_dim_estimate(values: &[f64], scales: &[f64]) -> Result<f64> {
    if scales.len() < 2 {
        return Err(Error::DegenerateRange(format!("{} scales", scales.len())));
    }
    if values.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    let mut sorted;
    let values = if values.windows(2).all(|w| w[0] <= w[1]) {
        values
    } else {
        sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        &sorted[..]
    };
    let xs: Vec<f64> = scales.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = scales.iter().map(|&e| (occupied_cells(values, e) as f64).ln()).collect();
    slope(&xs, &ys).ok_or_else(|| Error::DegenerateRange("scales coincide".into()))
}

/// `dim K = log_m Σ_i t_i^{log m / log n}` for the carpet with `t_i` chosen
/// cells in column `i`.
pub fn carpet_dimension(spec: &BernoulliSpec) -> f64 {
    let (m, n) = (spec.m() as f64, spec.n() as f64);
    let theta = m.ln() / n.ln();
    let sum: f64 = (0..spec.m())
        .map(|i| {
            let t = (0..spec.n()).filter(|&j| !num_traits::Zero::is_zero(spec.weight(i, j))).count();
            (t as f64).powf(theta)
        })
        .sum();
    sum.ln() / m.ln()
}

#[derive(Clone, Debug)]
pub struct DistsetConfig {
    pub mode: SupportMode,
    pub eps_min: f64,
    pub eps_max: f64,
    pub scale_count: usize,
    pub pair_budget: u64,
    pub budget: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistsetReport {
    pub m: usize,
    pub n: usize,
    pub dim_mu_exact: f64,
    pub depth: usize,
    pub n_points: usize,
    pub n_pairs: u64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub dim_d_estimate: f64,
    pub direction_coverage: bool,
    pub covered_arcs: usize,
    pub seed: u64,
}

impl DistsetReport {
    pub const HEADER: [&'static str; 11] = [
        "m",
        "n",
        "dim_mu_exact",
        "depth",
        "n_points",
        "n_pairs",
        "eps_min",
        "eps_max",
        "dim_D_estimate",
        "direction_coverage",
        "seed",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.m.to_string(),
            self.n.to_string(),
            format!("{:.6}", self.dim_mu_exact),
            self.depth.to_string(),
            self.n_points.to_string(),
            self.n_pairs.to_string(),
            format!("{:e}", self.eps_min),
            format!("{:e}", self.eps_max),
            format!("{:.6}", self.dim_d_estimate),
            self.direction_coverage.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Box-counting estimate of `dim D(spt μ)`; a single point gives `0`.
pub fn distset_experiment(spec: &BernoulliSpec, config: &DistsetConfig, seed: u64) -> Result<DistsetReport> {
    let cloud = sample_support(spec, config.mode, seed, config.budget)?;
    let scales = geometric_scales(config.eps_min, config.eps_max, config.scale_count);
    let (dim, pairs, coverage, arcs) = if cloud.len() < 2 {
        (0.0, 0, false, 0)
    } else {
        let d = distance_set_build(&cloud, config.pair_budget, seed)?;
        (
            box_dim_estimate(d.distances(), &scales)?,
            d.pairs(),
            d.direction_coverage(),
            d.covered_arcs(),
        )
    };
    Ok(DistsetReport {
        m: spec.m(),
        n: spec.n(),
        dim_mu_exact: exact_dimension(spec),
        depth: cloud.depth(),
        n_points: cloud.len(),
        n_pairs: pairs,
        eps_min: config.eps_min,
        eps_max: config.eps_max,
        dim_d_estimate: dim,
        direction_coverage: coverage,
        covered_arcs: arcs,
        seed,
    })
}

/// Left and right endpoints of the depth-`k` middle-thirds intervals.
pub fn cantor_endpoints(k: usize) -> Vec<f64> {
    let mut left = vec![0.0];
    for l in 0..k {
        let s = 3f64.powi(-(l as i32 + 1));
        left = left.iter().flat_map(|&x| [x, x + 2.0 * s]).collect();
    }
    let w = 3f64.powi(-(k as i32));
    let mut out: Vec<f64> = left.iter().flat_map(|&x| [x, x + w]).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c1() -> BernoulliSpec {
        BernoulliSpec::carpet(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap()
    }

    #[test]
    fn support_counts() {
        let u = BernoulliSpec::uniform(2, 3).unwrap();
        let cloud = sample_support(&u, SupportMode::Exhaustive { k: 3, t: 0.0 }, 0, 1 << 20).unwrap();
        assert_eq!(cloud.len(), 2 * 6 * 2);
        for k in 1..6 {
            let c = sample_support(&c1(), SupportMode::Markov { k }, 0, 1 << 20).unwrap();
            assert_eq!(c.len(), 3usize.pow(k as u32));
        }
        let point = BernoulliSpec::carpet(2, 3, &[(1, 1)]).unwrap();
        let c = sample_support(&point, SupportMode::MonteCarlo { count: 50, depth: 8 }, 1, 1 << 20).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn two_point_cloud() {
        let cloud = PointCloud::new(vec![(0.0, 0.0), (1.0, 1.0)], 0, None);
        let d = distance_set_build(&cloud, 10, 0).unwrap();
        assert_eq!(d.distances(), &[2f64.sqrt()]);
        assert_eq!(d.covered_arcs(), 2);
        assert!(matches!(
            distance_set_build(&PointCloud::new(vec![(0.0, 0.0)], 0, None), 10, 0),
            Err(Error::TooFewPoints(1))
        ));
    }

    #[test]
    fn coverage_flags() {
        let u = BernoulliSpec::uniform(2, 3).unwrap();
        let cloud = sample_support(&u, SupportMode::MonteCarlo { count: 400, depth: 12 }, 0, 1 << 20).unwrap();
        assert!(distance_set_build(&cloud, 1 << 20, 0).unwrap().direction_coverage());
        let line = PointCloud::new((0..20).map(|i| (i as f64 / 20.0, 0.0)).collect(), 0, None);
        assert!(!distance_set_build(&line, 1 << 20, 0).unwrap().direction_coverage());
    }

    #[test]
    fn sampled_pairs_are_distinct() {
        let cloud = PointCloud::new((0..300).map(|i| (i as f64, (i * i) as f64)).collect(), 0, None);
        let d = distance_set_build(&cloud, 5000, 3).unwrap();
        assert_eq!(d.pairs(), 5000);
        let mut v = d.distances().to_vec();
        v.dedup();
        assert_eq!(v.len(), 5000);
    }

    #[test]
    fn pair_index_roundtrip() {
        let mut idx = 0;
        for j in 1..200usize {
            for i in 0..j {
                assert_eq!(pair_at(idx), (i, j));
                idx += 1;
            }
        }
    }

    #[test]
    fn box_counting_oracles() {
        let finite = [0.1, 0.5, 0.9];
        let d = box_dim_estimate(&finite, &geometric_scales(1e-4, 1e-2, 5)).unwrap();
        assert!(d.abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut uniform: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        uniform.sort_by(f64::total_cmp);
        let d = box_dim_estimate(&uniform, &geometric_scales(2f64.powi(-10), 2f64.powi(-4), 7)).unwrap();
        assert!((d - 1.0).abs() < 0.05, "{d}");

        let cantor = cantor_endpoints(10);
        let d = box_dim_estimate(&cantor, &geometric_scales(3f64.powi(-8), 3f64.powi(-3), 11)).unwrap();
        assert!((d - 2f64.ln() / 3f64.ln()).abs() < 0.08, "{d}");
        assert!(matches!(box_dim_estimate(&cantor, &[0.1]), Err(Error::DegenerateRange(_))));
    }

    #[test]
    fn carpet_dimension_of_c1() {
        assert!((carpet_dimension(&c1()) - 1.3497).abs() < 1e-3);
    }

    #[test]
    fn point_mass_experiment() {
        let point = BernoulliSpec::carpet(2, 3, &[(1, 1)]).unwrap();
        let config = DistsetConfig {
            mode: SupportMode::Markov { k: 5 },
            eps_min: 2f64.powi(-9),
            eps_max: 2f64.powi(-4),
            scale_count: 6,
            pair_budget: DEFAULT_PAIR_BUDGET,
            budget: 1 << 20,
        };
        let r = distset_experiment(&point, &config, 0).unwrap();
        assert_eq!(r.dim_d_estimate, 0.0);
        assert_eq!(r.n_points, 1);
    }
}
