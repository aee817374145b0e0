//! Config-driven experiment runs.
//!
//! Every run writes `<command>.csv`, `<command>.manifest.txt` and
//! `config.resolved.ini` into the output directory. CSV bytes depend only on
//! the resolved config, never on the worker count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, TestSpec};
use crate::dimension::{
    default_window, entropy_slope_dimension, exact_dimension, fiber_dimension, horizontal_dimension,
    marstrand_sweep, SweepConfig, SweepRow,
};
use crate::distance::{distset_experiment, DistsetConfig, DistsetReport};
use crate::error::{Error, Result};
use crate::metrics::{scenery_distribution, simple_test_averages, PhaseMarginal, SimpleTestFunction};
use crate::phase::{Angle, PhaseState};
use crate::render::render_heatmap;
use crate::symbolic::{format_rational, rational_to_f64, BernoulliSpec};
use crate::util::stream_rng;
use crate::verify::{verify_suite, IdentityReport, IDENTITIES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Dim,
    Scenery,
    Project,
    Distset,
    Render,
    Verify,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Dim,
        Command::Scenery,
        Command::Project,
        Command::Distset,
        Command::Render,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Dim => "dim",
            Command::Scenery => "scenery",
            Command::Project => "project",
            Command::Distset => "distset",
            Command::Render => "render",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

/// Paths written by a successful run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub resolved_config: PathBuf,
    pub extra: Vec<PathBuf>,
    pub rows: usize,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: ToString>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(ToString::to_string).collect(),
            rows: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Output {
    main: Table,
    side: Vec<(String, Table)>,
    files: Vec<PathBuf>,
    identities: Vec<IdentityReport>,
}

impl Output {
    fn single(main: Table) -> Self {
        Output {
            main,
            side: Vec::new(),
            files: Vec::new(),
            identities: Vec::new(),
        }
    }
}

/// Hex SHA-256 of `m`, `n` and the canonical weight string.
pub fn spec_hash(spec: &BernoulliSpec) -> String {
    let digest = Sha256::digest(format!("{} {} {}", spec.m(), spec.n(), spec.weights_string()));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs `command` and writes its artifacts under `out`.
pub fn run(command: Command, config: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let spec = Arc::new(config.spec()?);
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let output = pool.install(|| match command {
        Command::Dim => run_dim(&spec, config),
        Command::Scenery => run_scenery(&spec, config),
        Command::Project => run_project(&spec, config),
        Command::Distset => run_distset(&spec, config),
        Command::Render => run_render(&spec, config, out),
        Command::Verify => run_verify(&spec, config),
    })?;

    let csv = out.join(format!("{command}.csv"));
    output.main.write(&csv)?;
    let mut extra = output.files.clone();
    for (name, table) in &output.side {
        let path = out.join(name);
        table.write(&path)?;
        extra.push(path);
    }
    let resolved_config = out.join("config.resolved.ini");
    fs::write(&resolved_config, config.to_ini())?;
    let manifest = out.join(format!("{command}.manifest.txt"));
    fs::write(&manifest, manifest_text(command, config, &spec, &output, &csv, &extra))?;

    let failed: Vec<&str> = output
        .identities
        .iter()
        .filter(|r| r.failures > 0)
        .map(|r| r.name)
        .collect();
    if !failed.is_empty() {
        return Err(Error::IdentityViolations(failed.join(", ")));
    }
    Ok(RunOutcome {
        csv,
        manifest,
        resolved_config,
        extra,
        rows: output.main.rows.len(),
    })
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

fn manifest_text(
    command: Command,
    config: &ExperimentConfig,
    spec: &BernoulliSpec,
    output: &Output,
    csv: &Path,
    extra: &[PathBuf],
) -> String {
    let mut lines = vec![
        format!("command = {command}"),
        format!("version = {}", env!("CARGO_PKG_VERSION")),
        format!("spec_sha256 = {}", spec_hash(spec)),
        format!("m = {}", spec.m()),
        format!("n = {}", spec.n()),
        format!("weights = {}", spec.weights_string()),
        format!("precision_bits = {}", config.precision),
        format!("seed = {}", config.seed),
        format!("threads = {}", config.threads),
        format!("csv = {}", file_name(csv)),
        "config = config.resolved.ini".to_string(),
    ];
    for path in extra {
        lines.push(format!("artifact = {}", file_name(path)));
    }
    for r in &output.identities {
        lines.push(format!("identity = {} cases={} failures={}", r.name, r.cases, r.failures));
    }
    lines.push(String::new());
    lines.join("\n")
}

fn angle(spec: &BernoulliSpec, config: &ExperimentConfig) -> Result<Arc<Angle>> {
    Ok(Arc::new(Angle::new(spec.m() as u64, spec.n() as u64, config.precision)?))
}

fn run_dim(spec: &BernoulliSpec, config: &ExperimentConfig) -> Result<Output> {
    let d = &config.dim;
    let slope = entropy_slope_dimension(spec, &angle(spec, config)?, d.k_min..=d.k_max, d.phases)?;
    let exact = exact_dimension(spec);
    let mut table = Table::new(&[
        "m",
        "n",
        "dim_exact",
        "dim_slope",
        "abs_error",
        "dim_horizontal",
        "dim_fiber",
        "k_min",
        "k_max",
        "phases",
    ]);
    table.rows.push(vec![
        spec.m().to_string(),
        spec.n().to_string(),
        format!("{exact:.6}"),
        format!("{slope:.6}"),
        format!("{:.6}", (exact - slope).abs()),
        format!("{:.6}", horizontal_dimension(spec)),
        format!("{:.6}", fiber_dimension(spec)),
        d.k_min.to_string(),
        d.k_max.to_string(),
        d.phases.to_string(),
    ]);
    Ok(Output::single(table))
}

fn simple_function(spec: &BernoulliSpec, t: &TestSpec) -> Result<SimpleTestFunction> {
    SimpleTestFunction::new(
        spec,
        t.a.clone(),
        t.b.clone(),
        t.i_word.clone(),
        t.j_word.clone(),
        t.v.clone(),
        t.h,
    )
}

fn word_label(w: &[u8]) -> String {
    if w.is_empty() {
        "-".into()
    } else {
        w.iter().map(|d| char::from(b'0' + d)).collect()
    }
}

fn run_scenery(spec: &Arc<BernoulliSpec>, config: &ExperimentConfig) -> Result<Output> {
    let p = &config.scenery;
    let start = PhaseState::from_rational(angle(spec, config)?, &p.t);
    let gs = p
        .tests
        .iter()
        .map(|t| simple_function(spec, t))
        .collect::<Result<Vec<_>>>()?;
    let mut tests = Table::new(&[
        "q",
        "test",
        "a",
        "b",
        "i_word",
        "j_word",
        "v",
        "h",
        "steps",
        "empirical",
        "exact_limit",
        "exact_limit_value",
        "abs_error",
    ]);
    let mut dist = Table::new(&["q", "steps", "cap", "support_size", "phase_atoms", "phase_ks"]);
    for &q in &p.q {
        let depth = q as usize * p.steps + p.cap + 1;
        let point = Arc::new(spec.sample_point(&mut stream_rng(config.seed, q), depth));
        let d = scenery_distribution(spec, &start, point.clone(), p.steps, q, p.cap)?;
        let (atoms, ks) = match d.phases() {
            Some(m @ PhaseMarginal::Atoms(a)) => (a.len(), m.ks_uniform()),
            Some(m) => (0, m.ks_uniform()),
            None => (0, f64::NAN),
        };
        dist.rows.push(vec![
            q.to_string(),
            p.steps.to_string(),
            p.cap.to_string(),
            d.support_size().to_string(),
            atoms.to_string(),
            format!("{ks:.6}"),
        ]);
        if gs.is_empty() {
            continue;
        }
        let averages = simple_test_averages(spec, &gs, &start, point, p.steps, q)?;
        for (idx, (g, avg)) in gs.iter().zip(averages).enumerate() {
            let exact = g.exact_limit(spec, &start, q)?;
            let value = rational_to_f64(&exact);
            tests.rows.push(vec![
                q.to_string(),
                idx.to_string(),
                format_rational(&g.a),
                format_rational(&g.b),
                word_label(&g.i_word),
                word_label(&g.j_word),
                word_label(&g.v),
                g.h.to_string(),
                p.steps.to_string(),
                format!("{avg:.6}"),
                format_rational(&exact),
                format!("{value:.6}"),
                format!("{:.6}", (avg - value).abs()),
            ]);
        }
    }
    Ok(Output {
        main: tests,
        side: vec![("scenery_distribution.csv".into(), dist)],
        files: Vec::new(),
        identities: Vec::new(),
    })
}

fn run_project(spec: &BernoulliSpec, config: &ExperimentConfig) -> Result<Output> {
    let p = &config.project;
    let sweep = SweepConfig {
        s_grid: p.s_grid.clone(),
        signs: p.signs.clone(),
        include_axes: p.include_axes,
        q: p.q,
        samples: p.samples,
        seed: config.seed,
        depth: p.depth,
        window: p.window.unwrap_or_else(|| default_window(p.depth)),
        budget: config.budget,
    };
    let rows = marstrand_sweep(spec, &*angle(spec, config)?, &sweep)?;
    let mut table = Table::new(&SweepRow::HEADER);
    table.rows = rows.iter().map(SweepRow::record).collect();
    Ok(Output::single(table))
}

fn run_distset(spec: &BernoulliSpec, config: &ExperimentConfig) -> Result<Output> {
    let d = &config.distset;
    let cfg = DistsetConfig {
        mode: d.mode,
        eps_min: d.eps_min,
        eps_max: d.eps_max,
        scale_count: d.scales,
        pair_budget: d.pair_budget,
        budget: config.budget,
    };
    let report = distset_experiment(spec, &cfg, config.seed)?;
    let mut table = Table::new(&DistsetReport::HEADER);
    table.rows.push(report.record());
    Ok(Output::single(table))
}

fn run_render(spec: &BernoulliSpec, config: &ExperimentConfig, out: &Path) -> Result<Output> {
    let r = &config.render;
    let start = PhaseState::from_rational(angle(spec, config)?, &r.t);
    let path = out.join(&r.file);
    let map = render_heatmap(spec, r.depth, &start, r.width, r.height, &path)?;
    let mut table = Table::new(&["file", "width", "height", "depth", "t", "max_mass", "min_positive_mass"]);
    table.rows.push(vec![
        r.file.clone(),
        r.width.to_string(),
        r.height.to_string(),
        r.depth.to_string(),
        format_rational(&r.t),
        format!("{:e}", map.max_mass),
        format!("{:e}", map.min_positive_mass),
    ]);
    let mut output = Output::single(table);
    output.files.push(path);
    Ok(output)
}

fn run_verify(spec: &BernoulliSpec, config: &ExperimentConfig) -> Result<Output> {
    let v = &config.verify;
    let reports = verify_suite(spec, v.specs, v.cases, config.precision, config.seed)?;
    debug_assert_eq!(reports.len(), IDENTITIES.len());
    let mut table = Table::new(&IdentityReport::HEADER);
    table.rows = reports.iter().map(IdentityReport::record).collect();
    Ok(Output {
        main: table,
        side: Vec::new(),
        files: Vec::new(),
        identities: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        let s1 = BernoulliSpec::from_strings(2, 3, &[vec!["1/2", "1/4", "0"], vec!["0", "1/8", "1/8"]]).unwrap();
        let mut c = ExperimentConfig::with_spec(&s1);
        c.dim.k_min = 4;
        c.dim.k_max = 8;
        c.dim.phases = 8;
        c.scenery.steps = 500;
        c.project.s_grid = vec![0.5];
        c.project.samples = 8;
        c.project.q = 4;
        c.project.depth = 8;
        c.distset.mode = crate::distance::SupportMode::Exhaustive { k: 5, t: 0.0 };
        c.render.width = 16;
        c.render.height = 16;
        c.verify.specs = 2;
        c.verify.cases = 2;
        c
    }

    #[test]
    fn command_names_roundtrip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("plot".parse::<Command>().is_err());
    }

    #[test]
    fn every_command_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let c = config();
        for cmd in Command::ALL {
            let out = run(cmd, &c, dir.path()).unwrap();
            assert!(out.csv.exists() && out.manifest.exists() && out.resolved_config.exists());
            let manifest = fs::read_to_string(&out.manifest).unwrap();
            assert!(manifest.contains("spec_sha256 = "));
            assert!(manifest.contains("precision_bits = 256"));
        }
        let verify = fs::read_to_string(dir.path().join("verify.manifest.txt")).unwrap();
        assert_eq!(verify.matches("identity = ").count(), IDENTITIES.len());
        assert!(dir.path().join("heatmap.ppm").exists());
        let resolved = fs::read_to_string(dir.path().join("config.resolved.ini")).unwrap();
        assert_eq!(ExperimentConfig::parse(&resolved).unwrap(), c);
    }

    #[test]
    fn validation_and_budget_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config();
        c.render.width = 4;
        let e = run(Command::Render, &c, dir.path()).unwrap_err();
        assert!(!e.is_resource_failure());
        let mut c = config();
        c.budget = 10;
        let e = run(Command::Distset, &c, dir.path()).unwrap_err();
        assert!(e.is_resource_failure(), "{e}");
    }

    #[test]
    fn spec_hash_is_stable() {
        let u = BernoulliSpec::uniform(2, 3).unwrap();
        assert_eq!(spec_hash(&u), spec_hash(&BernoulliSpec::uniform(2, 3).unwrap()));
        assert_ne!(spec_hash(&u), spec_hash(&BernoulliSpec::uniform(2, 4).unwrap()));
        assert_eq!(spec_hash(&u).len(), 64);
    }
}
