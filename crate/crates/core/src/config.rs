//! INI experiment configuration.
//!
//! ```ini
//! [spec]
//! m = 2
//! n = 3
//! weights = 1/2 1/4 0; 0 1/8 1/8
//!
//! [run]
//! seed = 1
//!
//! [project]
//! s_grid = 0.1 0.5 0.9
//! ```
//!
//! Every section except `[spec]` is optional; missing keys take their
//! defaults. Unknown sections and keys are rejected.

use std::fmt::Display;
use std::str::FromStr;

use ini::Ini;
use num_traits::{One, Signed, Zero};

use crate::dimension::Sign;
use crate::distance::{SupportMode, DEFAULT_PAIR_BUDGET};
use crate::error::{Error, Result};
use crate::symbolic::{format_rational, parse_rational, BernoulliSpec, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct DimParams {
    pub k_min: usize,
    pub k_max: usize,
    pub phases: usize,
}

/// One simple test function `χ_{[a,b) × [i'] × [j'] × 𝓑(v,h)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSpec {
    pub a: Rational,
    pub b: Rational,
    pub i_word: Vec<u8>,
    pub j_word: Vec<u8>,
    pub v: Vec<u8>,
    pub h: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneryParams {
    pub t: Rational,
    pub steps: usize,
    pub q: Vec<u64>,
    pub cap: usize,
    pub tests: Vec<TestSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectParams {
    pub s_grid: Vec<f64>,
    pub signs: Vec<Sign>,
    pub include_axes: bool,
    pub q: u32,
    pub samples: usize,
    pub depth: usize,
    /// `None` selects the default window for `depth`.
    pub window: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistsetParams {
    pub mode: SupportMode,
    pub eps_min: f64,
    pub eps_max: f64,
    pub scales: usize,
    pub pair_budget: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderParams {
    pub depth: usize,
    pub t: Rational,
    pub width: usize,
    pub height: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyParams {
    pub specs: usize,
    pub cases: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub weights: Vec<Vec<Rational>>,
    pub seed: u64,
    pub precision: usize,
    /// Worker threads; `0` uses every core.
    pub threads: usize,
    pub budget: u128,
    pub out_dir: String,
    pub dim: DimParams,
    pub scenery: SceneryParams,
    pub project: ProjectParams,
    pub distset: DistsetParams,
    pub render: RenderParams,
    pub verify: VerifyParams,
}

impl ExperimentConfig {
    /// Defaults around the given spec.
    pub fn with_spec(spec: &BernoulliSpec) -> Self {
        let zero = Rational::zero();
        ExperimentConfig {
            m: spec.m(),
            n: spec.n(),
            weights: (0..spec.m())
                .map(|i| (0..spec.n()).map(|j| spec.weight(i, j).clone()).collect())
                .collect(),
            seed: 1,
            precision: 256,
            threads: 0,
            budget: 1 << 24,
            out_dir: "out".into(),
            dim: DimParams {
                k_min: 8,
                k_max: 14,
                phases: 64,
            },
            scenery: SceneryParams {
                t: zero.clone(),
                steps: 10_000,
                q: vec![1],
                cap: 3,
                tests: default_tests(spec),
            },
            project: ProjectParams {
                s_grid: (1..=9).map(|s| s as f64 / 10.0).collect(),
                signs: vec![Sign::Plus, Sign::Minus],
                include_axes: true,
                q: 8,
                samples: 200,
                depth: 12,
                window: None,
            },
            distset: DistsetParams {
                mode: SupportMode::Exhaustive { k: 9, t: 0.0 },
                eps_min: 2f64.powi(-9),
                eps_max: 2f64.powi(-4),
                scales: 6,
                pair_budget: DEFAULT_PAIR_BUDGET,
            },
            render: RenderParams {
                depth: 6,
                t: zero,
                width: 256,
                height: 256,
                file: "heatmap.ppm".into(),
            },
            verify: VerifyParams { specs: 50, cases: 20 },
        }
    }

    pub fn spec(&self) -> Result<BernoulliSpec> {
        BernoulliSpec::new(self.m, self.n, self.weights.clone())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let reader = Reader { ini: &ini };
        reader.check_keys()?;
        let m: usize = reader.required("spec", "m")?;
        let n: usize = reader.required("spec", "n")?;
        let weights_text: String = reader.required("spec", "weights")?;
        let weights = parse_weights(&weights_text)?;
        let spec = BernoulliSpec::new(m, n, weights)?;
        let mut c = ExperimentConfig::with_spec(&spec);
        let r = &reader;

        r.set("run", "seed", &mut c.seed)?;
        r.set("run", "precision", &mut c.precision)?;
        r.set("run", "threads", &mut c.threads)?;
        r.set("run", "budget", &mut c.budget)?;
        r.set("run", "out", &mut c.out_dir)?;

        r.set("dim", "k_min", &mut c.dim.k_min)?;
        r.set("dim", "k_max", &mut c.dim.k_max)?;
        r.set("dim", "phases", &mut c.dim.phases)?;

        if let Some(t) = r.get("scenery", "t") {
            c.scenery.t = parse_rational(t)?;
        }
        r.set("scenery", "steps", &mut c.scenery.steps)?;
        if let Some(q) = r.get("scenery", "q") {
            c.scenery.q = parse_list(q)?;
        }
        r.set("scenery", "cap", &mut c.scenery.cap)?;
        if let Some(tests) = r.get("scenery", "tests") {
            c.scenery.tests = tests
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_test)
                .collect::<Result<_>>()?;
        }

        if let Some(s) = r.get("project", "s_grid") {
            c.project.s_grid = parse_list(s)?;
        }
        if let Some(s) = r.get("project", "signs") {
            c.project.signs = s.split_whitespace().map(parse_sign).collect::<Result<_>>()?;
        }
        r.set("project", "include_axes", &mut c.project.include_axes)?;
        r.set("project", "q", &mut c.project.q)?;
        r.set("project", "samples", &mut c.project.samples)?;
        r.set("project", "depth", &mut c.project.depth)?;
        if let Some(w) = r.get("project", "window") {
            let w: Vec<usize> = parse_list(w)?;
            match w[..] {
                [lo, hi] => c.project.window = Some((lo, hi)),
                [] => c.project.window = None,
                _ => return Err(Error::Config(format!("window needs two values, got {w:?}"))),
            }
        }

        let mode = r.get("distset", "mode").unwrap_or(mode_name(&c.distset.mode)).to_string();
        let mut depth = mode_depth(&c.distset.mode);
        r.set("distset", "depth", &mut depth)?;
        let mut points = 4000usize;
        r.set("distset", "points", &mut points)?;
        let mut t = 0.0f64;
        r.set("distset", "t", &mut t)?;
        c.distset.mode = match mode.as_str() {
            "exhaustive" => SupportMode::Exhaustive { k: depth, t },
            "markov" => SupportMode::Markov { k: depth },
            "monte-carlo" => SupportMode::MonteCarlo { count: points, depth },
            other => return Err(Error::Config(format!("unknown distset mode {other:?}"))),
        };
        r.set("distset", "eps_min", &mut c.distset.eps_min)?;
        r.set("distset", "eps_max", &mut c.distset.eps_max)?;
        r.set("distset", "scales", &mut c.distset.scales)?;
        r.set("distset", "pair_budget", &mut c.distset.pair_budget)?;

        r.set("render", "depth", &mut c.render.depth)?;
        if let Some(t) = r.get("render", "t") {
            c.render.t = parse_rational(t)?;
        }
        r.set("render", "width", &mut c.render.width)?;
        r.set("render", "height", &mut c.render.height)?;
        r.set("render", "file", &mut c.render.file)?;

        r.set("verify", "specs", &mut c.verify.specs)?;
        r.set("verify", "cases", &mut c.verify.cases)?;

        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(64..=1 << 16).contains(&self.precision) {
            return fail(format!("precision {} outside 64..=65536", self.precision));
        }
        if self.dim.k_min >= self.dim.k_max || self.dim.phases == 0 {
            return fail("dim needs k_min < k_max and phases > 0".into());
        }
        if !in_unit_interval(&self.scenery.t) || !in_unit_interval(&self.render.t) {
            return fail("phase t must lie in [0, 1)".into());
        }
        if self.scenery.q.is_empty() || self.scenery.q.contains(&0) {
            return fail("scenery q must be a nonempty list of positive integers".into());
        }
        if self.project.samples == 0 || self.project.q == 0 {
            return fail("project needs q > 0 and samples > 0".into());
        }
        if let Some((lo, hi)) = self.project.window {
            if lo >= hi || hi > self.project.depth {
                return fail(format!("window ({lo}, {hi}) must satisfy lo < hi <= depth"));
            }
        }
        let d = &self.distset;
        if !(d.eps_min > 0.0 && d.eps_min < d.eps_max) || d.scales < 2 {
            return fail("distset needs 0 < eps_min < eps_max and at least two scales".into());
        }
        if self.render.width < 16 || self.render.height < 16 {
            return fail("image dimensions must be at least 16".into());
        }
        Ok(())
    }

    pub fn to_ini(&self) -> String {
        let mut ini = Ini::new();
        let weights = self
            .weights
            .iter()
            .map(|row| row.iter().map(format_rational).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("; ");
        ini.with_section(Some("spec"))
            .set("m", self.m.to_string())
            .set("n", self.n.to_string())
            .set("weights", weights);
        ini.with_section(Some("run"))
            .set("seed", self.seed.to_string())
            .set("precision", self.precision.to_string())
            .set("threads", self.threads.to_string())
            .set("budget", self.budget.to_string())
            .set("out", self.out_dir.clone());
        ini.with_section(Some("dim"))
            .set("k_min", self.dim.k_min.to_string())
            .set("k_max", self.dim.k_max.to_string())
            .set("phases", self.dim.phases.to_string());
        ini.with_section(Some("scenery"))
            .set("t", format_rational(&self.scenery.t))
            .set("steps", self.scenery.steps.to_string())
            .set("q", join(&self.scenery.q))
            .set("cap", self.scenery.cap.to_string())
            .set(
                "tests",
                self.scenery.tests.iter().map(format_test).collect::<Vec<_>>().join("; "),
            );
        let p = &self.project;
        ini.with_section(Some("project"))
            .set("s_grid", join(&p.s_grid))
            .set("signs", join(&p.signs))
            .set("include_axes", p.include_axes.to_string())
            .set("q", p.q.to_string())
            .set("samples", p.samples.to_string())
            .set("depth", p.depth.to_string())
            .set(
                "window",
                p.window.map(|(a, b)| format!("{a} {b}")).unwrap_or_default(),
            );
        let d = &self.distset;
        let mut sec = ini.with_section(Some("distset"));
        sec.set("mode", mode_name(&d.mode)).set("depth", mode_depth(&d.mode).to_string());
        match d.mode {
            SupportMode::Exhaustive { t, .. } => {
                sec.set("t", t.to_string());
            }
            SupportMode::MonteCarlo { count, .. } => {
                sec.set("points", count.to_string());
            }
            SupportMode::Markov { .. } => {}
        }
        sec.set("eps_min", d.eps_min.to_string())
            .set("eps_max", d.eps_max.to_string())
            .set("scales", d.scales.to_string())
            .set("pair_budget", d.pair_budget.to_string());
        ini.with_section(Some("render"))
            .set("depth", self.render.depth.to_string())
            .set("t", format_rational(&self.render.t))
            .set("width", self.render.width.to_string())
            .set("height", self.render.height.to_string())
            .set("file", self.render.file.clone());
        ini.with_section(Some("verify"))
            .set("specs", self.verify.specs.to_string())
            .set("cases", self.verify.cases.to_string());
        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is utf-8")
    }
}

fn in_unit_interval(t: &Rational) -> bool {
    !t.is_negative() && *t < Rational::one()
}

/// Default simple test functions for a spec: a phase window crossed with a
/// first-digit cylinder, with and without a ball condition.
pub fn default_tests(spec: &BernoulliSpec) -> Vec<TestSpec> {
    let a = (0..spec.m()).find(|&i| !spec.q(i).is_zero()).unwrap_or(0) as u8;
    let b = (0..spec.n()).find(|&j| !spec.weight(a as usize, j).is_zero()).unwrap_or(0) as u8;
    let half = parse_rational("1/2").expect("literal");
    let one = parse_rational("1").expect("literal");
    vec![
        TestSpec {
            a: Rational::zero(),
            b: half,
            i_word: vec![a],
            j_word: Vec::new(),
            v: Vec::new(),
            h: 0,
        },
        TestSpec {
            a: Rational::zero(),
            b: one,
            i_word: Vec::new(),
            j_word: vec![b],
            v: vec![a],
            h: 1,
        },
    ]
}

const KEYS: &[(&str, &[&str])] = &[
    ("spec", &["m", "n", "weights"]),
    ("run", &["seed", "precision", "threads", "budget", "out"]),
    ("dim", &["k_min", "k_max", "phases"]),
    ("scenery", &["t", "steps", "q", "cap", "tests"]),
    (
        "project",
        &["s_grid", "signs", "include_axes", "q", "samples", "depth", "window"],
    ),
    (
        "distset",
        &["mode", "depth", "points", "t", "eps_min", "eps_max", "scales", "pair_budget"],
    ),
    ("render", &["depth", "t", "width", "height", "file"]),
    ("verify", &["specs", "cases"]),
];

struct Reader<'a> {
    ini: &'a Ini,
}

impl Reader<'_> {
    fn check_keys(&self) -> Result<()> {
        for (section, props) in self.ini.iter() {
            let Some(name) = section else {
                if props.iter().next().is_some() {
                    return Err(Error::Config("keys outside a section".into()));
                }
                continue;
            };
            let Some((_, known)) = KEYS.iter().find(|(s, _)| *s == name) else {
                return Err(Error::Config(format!("unknown section [{name}]")));
            };
            if let Some((key, _)) = props.iter().find(|(k, _)| !known.contains(k)) {
                return Err(Error::Config(format!("unknown key {key:?} in [{name}]")));
            }
        }
        Ok(())
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.ini.get_from(Some(section), key)
    }

    fn required<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self
            .get(section, key)
            .ok_or_else(|| Error::Config(format!("missing [{section}] {key}")))?;
        parse_value(section, key, raw)
    }

    fn set<T: FromStr>(&self, section: &str, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: Display,
    {
        if let Some(raw) = self.get(section, key) {
            *slot = parse_value(section, key, raw)?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T>
where
    T::Err: Display,
{
    raw.trim()
        .parse()
        .map_err(|e| Error::Config(format!("[{section}] {key} = {raw:?}: {e}")))
}

fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    raw.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| Error::Config(format!("{s:?}: {e}"))))
        .collect()
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Rows separated by `;`, entries by whitespace.
pub fn parse_weights(text: &str) -> Result<Vec<Vec<Rational>>> {
    text.split(';')
        .map(|row| row.split_whitespace().map(parse_rational).collect())
        .collect()
}

fn parse_sign(s: &str) -> Result<Sign> {
    match s {
        "+" | "plus" => Ok(Sign::Plus),
        "-" | "minus" => Ok(Sign::Minus),
        _ => Err(Error::Config(format!("unknown sign {s:?}"))),
    }
}

fn parse_word(s: &str) -> Result<Vec<u8>> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| Error::Config(format!("bad digit word {s:?}")))
        })
        .collect()
}

fn format_word(w: &[u8]) -> String {
    if w.is_empty() {
        "-".into()
    } else {
        w.iter().map(|d| char::from(b'0' + d)).collect()
    }
}

/// `a b i' j' v h`, with `-` for an empty word.
fn parse_test(s: &str) -> Result<TestSpec> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let [a, b, i, j, v, h] = parts[..] else {
        return Err(Error::Config(format!("test {s:?} needs six fields: a b i j v h")));
    };
    Ok(TestSpec {
        a: parse_rational(a)?,
        b: parse_rational(b)?,
        i_word: parse_word(i)?,
        j_word: parse_word(j)?,
        v: parse_word(v)?,
        h: parse_value("scenery", "tests", h)?,
    })
}

fn format_test(t: &TestSpec) -> String {
    format!(
        "{} {} {} {} {} {}",
        format_rational(&t.a),
        format_rational(&t.b),
        format_word(&t.i_word),
        format_word(&t.j_word),
        format_word(&t.v),
        t.h
    )
}

fn mode_name(mode: &SupportMode) -> &'static str {
    match mode {
        SupportMode::Exhaustive { .. } => "exhaustive",
        SupportMode::Markov { .. } => "markov",
        SupportMode::MonteCarlo { .. } => "monte-carlo",
    }
}

fn mode_depth(mode: &SupportMode) -> usize {
    match *mode {
        SupportMode::Exhaustive { k, .. } | SupportMode::Markov { k } => k,
        SupportMode::MonteCarlo { depth, .. } => depth,
    }
}
