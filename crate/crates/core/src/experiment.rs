//! Experiment configuration and the subcommands of the `wce-bridge` binary.
//!
//! Each subcommand has a pure function that returns its results and a
//! `cmd_*` wrapper that also writes artifacts to an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{sample_baseline, BaselineKind};
use crate::bridge::{sample_bridge, sample_bridges, transform_to_bridge, BridgeCoefficients, BridgePath, BridgeSpec};
use crate::chaos::MAX_HERMITE_DEGREE;
use crate::error::{Error, Result};
use crate::multiindex::{enumerate_table_a, IndexScheme, IndexSet};
use crate::basis::BasisSpec;
use crate::models::{ItoCorrection, ModelKind, SdeModel};
use crate::output::{
    endpoint_label, write_json, write_paths_binary, write_paths_csv, write_propagator_csv, ArtifactMeta, KsRecord,
    KsReport, QqReport,
};
use crate::propagator::{solve_propagator, Integrator, PropagatorSolution, SolverOptions, TimeGrid};
use crate::stats::{ks_two_sample, marginal_at, moments, qq_pairs, SampleSet};

/// Model section of the config. `x0` defaults to the bridge start `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl ModelConfig {
    /// Default parameters for a model name: `ou`, `gbm`, `logistic` or
    /// `protein_kinetic`.
    pub fn from_name(name: &str) -> Option<Self> {
        let kind = match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "ou" => ModelKind::Ou { a: 0.5, sigma: 1.0 },
            "gbm" => ModelKind::Gbm { a: 0.2, sigma: 0.3 },
            "logistic" => ModelKind::Logistic { a: 0.2, sigma: 0.7 },
            "protein_kinetic" | "protein" => ModelKind::ProteinKinetic {
                lambda: 0.2,
                sigma: 0.8,
                ito_correction: ItoCorrection::LinearSigma,
            },
            _ => return None,
        };
        Some(ModelConfig { kind, x0: None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinLConfig {
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for MinLConfig {
    fn default() -> Self {
        MinLConfig {
            ladder: default_ladder(),
            repetitions: default_repetitions(),
            threshold: default_threshold(),
        }
    }
}

fn default_ladder() -> Vec<usize> {
    vec![5, 10, 25, 50, 100]
}
fn default_repetitions() -> u64 {
    5
}
fn default_threshold() -> f64 {
    0.05
}
fn default_p() -> u32 {
    12
}
fn default_l() -> usize {
    100
}
fn default_grid() -> usize {
    1000
}
fn default_paths() -> u64 {
    1000
}
fn default_horizon() -> f64 {
    1.0
}
fn default_qq_points() -> usize {
    100
}
fn default_levels() -> Vec<usize> {
    vec![100, 1000, 10000]
}
fn default_model() -> ModelConfig {
    ModelConfig::from_name("ou").unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(rename = "L", default = "default_l")]
    pub l: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_paths")]
    pub n_paths: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: IndexScheme,
    /// Defaults to `T / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_time: Option<f64>,
    #[serde(default)]
    pub baselines: Vec<BaselineKind>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub min_l: MinLConfig,
    /// Truncation levels timed by `benchmark`.
    #[serde(default = "default_levels")]
    pub benchmark_levels: Vec<usize>,
    #[serde(default = "default_qq_points")]
    pub qq_points: usize,
    /// Also write paths as a `WCEB` binary dump.
    #[serde(default)]
    pub write_binary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Command-line values that replace config fields when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<String>,
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub horizon: Option<f64>,
    pub p: Option<u32>,
    pub l: Option<usize>,
    pub grid: Option<usize>,
    pub n_paths: Option<u64>,
    pub seed: Option<u64>,
    pub baseline: Option<String>,
    pub eval_time: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Turns a JSON error into a config error naming the offending field when
/// serde reports one.
fn json_config_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string());
    Error::config(field, msg)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_config_error)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(name) = &o.model {
            let m = ModelConfig::from_name(name)
                .ok_or_else(|| Error::config("model", format!("unknown model `{name}`")))?;
            if m.kind.name() != self.model.kind.name() {
                self.model = m;
            }
        }
        if let Some(name) = &o.baseline {
            let b = BaselineKind::from_name(name)
                .ok_or_else(|| Error::config("baseline", format!("unknown baseline `{name}`")))?;
            self.baselines = vec![b];
        }
        macro_rules! set {
            ($($field:ident <- $src:ident),*) => {
                $(if let Some(v) = o.$src.clone() { self.$field = v; })*
            };
        }
        set!(eta <- eta, theta <- theta, horizon <- horizon, p <- p, l <- l, grid <- grid,
             n_paths <- n_paths, seed <- seed);
        if o.eval_time.is_some() {
            self.eval_time = o.eval_time;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        Ok(())
    }

    pub fn eval_time(&self) -> f64 {
        self.eval_time.unwrap_or(0.5 * self.horizon)
    }

    pub fn spec(&self) -> BridgeSpec {
        BridgeSpec {
            eta: self.eta,
            theta: self.theta,
            horizon: self.horizon,
        }
    }

    pub fn sde(&self) -> SdeModel {
        SdeModel {
            kind: self.model.kind,
            x0: self.model.x0.unwrap_or(self.eta),
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.grid)
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite, got {v}")))
            }
        };
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config("T", format!("must be positive, got {}", self.horizon)));
        }
        finite("eta", self.eta)?;
        finite("theta", self.theta)?;
        if let Some(x0) = self.model.x0 {
            finite("model.x0", x0)?;
        }
        match self.model.kind {
            ModelKind::Ou { a, sigma } | ModelKind::Gbm { a, sigma } | ModelKind::Logistic { a, sigma } => {
                finite("model.a", a)?;
                finite("model.sigma", sigma)?;
            }
            ModelKind::ProteinKinetic { lambda, sigma, .. } => {
                finite("model.lambda", lambda)?;
                finite("model.sigma", sigma)?;
            }
        }
        if self.p > MAX_HERMITE_DEGREE {
            return Err(Error::config("p", format!("must be at most {MAX_HERMITE_DEGREE}, got {}", self.p)));
        }
        if self.grid < 2 {
            return Err(Error::config("grid", format!("must be at least 2, got {}", self.grid)));
        }
        if self.n_paths < 1 {
            return Err(Error::config("n_paths", "must be at least 1"));
        }
        let t = self.eval_time();
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::config("eval_time", format!("must lie in [0, {}], got {t}", self.horizon)));
        }
        if self.qq_points < 2 {
            return Err(Error::config("qq_points", "must be at least 2"));
        }
        if let Integrator::DormandPrince { rtol, atol } = self.solver.integrator {
            if !(rtol > 0.0 && atol > 0.0) {
                return Err(Error::config("solver.integrator", "tolerances must be positive"));
            }
        }
        let ladder = &self.min_l.ladder;
        if ladder.is_empty() || ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("min_l.ladder", "must be nonempty and strictly increasing"));
        }
        if self.min_l.repetitions < 1 {
            return Err(Error::config("min_l.repetitions", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.min_l.threshold) {
            return Err(Error::config("min_l.threshold", "must lie in [0, 1)"));
        }
        if self.benchmark_levels.is_empty() {
            return Err(Error::config("benchmark_levels", "must be nonempty"));
        }
        for b in &self.baselines {
            b.validate().map_err(|e| Error::config("baselines", e.to_string()))?;
        }
        Ok(())
    }

    /// Artifact header for this config.
    /// Artifact header; the output directory does not enter the hash.
    pub fn meta(&self) -> Result<ArtifactMeta> {
        let keyed = ExperimentConfig { out: None, ..self.clone() };
        ArtifactMeta::new(&keyed, self.seed)
    }
}

/// Solves the propagator for truncation level `l` and forms the bridge
/// coefficients.
pub fn build_coefficients(cfg: &ExperimentConfig, l: usize) -> Result<(PropagatorSolution, BridgeCoefficients)> {
    let set = Arc::new(IndexSet::build(cfg.scheme, cfg.p, l)?);
    let basis = BasisSpec::new(cfg.horizon, l.max(1))?;
    let sol = solve_propagator(&cfg.sde(), set, &basis, &cfg.time_grid()?, &cfg.solver)?;
    let coeffs = transform_to_bridge(&sol, &cfg.spec())?;
    Ok((sol, coeffs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub meta: ArtifactMeta,
    pub model: String,
    pub endpoint_pair: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub coefficients: usize,
    pub n_paths: u64,
    pub eval_time: f64,
    pub mean: f64,
    pub variance: f64,
    pub solve_seconds: f64,
    pub seconds_per_bridge: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub paths: Vec<BridgePath>,
    pub summary: SimulationSummary,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let start = Instant::now();
    let (_, coeffs) = build_coefficients(cfg, cfg.l)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let paths = sample_bridges(&coeffs, cfg.seed, 0..cfg.n_paths);
    let sample_seconds = start.elapsed().as_secs_f64();
    let m = moments(&marginal_at(&paths, cfg.eval_time(), "wce")?.values);
    let summary = SimulationSummary {
        meta: cfg.meta()?,
        model: cfg.model.kind.name().into(),
        endpoint_pair: endpoint_label(&cfg.spec()),
        l: cfg.l,
        coefficients: coeffs.index_set.len(),
        n_paths: cfg.n_paths,
        eval_time: cfg.eval_time(),
        mean: m.mean,
        variance: m.variance,
        solve_seconds,
        seconds_per_bridge: sample_seconds / cfg.n_paths as f64,
    };
    Ok(Simulation { paths, summary })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?))
}

fn finish(mut w: BufWriter<File>, dir: &Path, name: &str) -> Result<()> {
    w.flush().map_err(|e| Error::io(dir.join(name), e))
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(dir, name)?;
    body(&mut w).map_err(|e| Error::io(dir.join(name), e))?;
    finish(w, dir, name)
}

fn write_json_file<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    write_json(&mut w, value)?;
    finish(w, dir, name)
}

/// Writes `paths.csv` (and `paths.bin` when requested) and `summary.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulationSummary> {
    let sim = simulate(cfg)?;
    let meta = &sim.summary.meta;
    write_file(out, "paths.csv", |w| write_paths_csv(w, meta, &sim.paths, None))?;
    if cfg.write_binary {
        write_file(out, "paths.bin", |w| write_paths_binary(w, &sim.paths))?;
    }
    write_json_file(out, "summary.json", &sim.summary)?;
    Ok(sim.summary)
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub record: KsRecord,
    pub qq: QqReport,
    pub wce: SampleSet,
    pub baseline: SampleSet,
    /// Mean sampler attempts per baseline path.
    pub mean_attempts: f64,
    pub reflections: usize,
}

/// WCE bridges against one baseline at `eval_time`. The two samplers use
/// separate random lanes of the same seed.
pub fn validate_against(cfg: &ExperimentConfig, baseline: &BaselineKind) -> Result<Validation> {
    cfg.validate()?;
    baseline.check_model(&cfg.sde())?;
    let (_, coeffs) = build_coefficients(cfg, cfg.l)?;
    validate_with_coefficients(cfg, baseline, &coeffs, cfg.seed)
}

fn validate_with_coefficients(
    cfg: &ExperimentConfig,
    baseline: &BaselineKind,
    coeffs: &BridgeCoefficients,
    seed: u64,
) -> Result<Validation> {
    let t = cfg.eval_time();
    let wce_paths = sample_bridges(coeffs, seed, 0..cfg.n_paths);
    let wce = marginal_at(&wce_paths, t, "wce")?;
    drop(wce_paths);
    let samples = sample_baseline(baseline, &cfg.sde(), &cfg.spec(), &cfg.time_grid()?, seed, 0..cfg.n_paths)?;
    let mean_attempts = samples.iter().map(|s| s.attempts as f64).sum::<f64>() / samples.len() as f64;
    let reflections = samples.iter().map(|s| s.reflections).sum();
    let values = samples.iter().map(|s| s.path.at(t)).collect();
    let base = SampleSet::new(values, baseline.name())?;
    let ks = ks_two_sample(&wce, &base)?;
    let comparison = format!("wce_vs_{}", baseline.name());
    let qq = qq_pairs(&wce, &base, cfg.qq_points)?;
    let mut meta = cfg.meta()?;
    meta.seed = seed;
    Ok(Validation {
        record: KsRecord::new(comparison.clone(), &cfg.spec(), coeffs.index_set.bound(), &ks, seed),
        qq: QqReport {
            meta,
            comparison,
            label_a: "wce".into(),
            label_b: baseline.name().into(),
            eval_time: t,
            q_a: qq.iter().map(|q| q.0).collect(),
            q_b: qq.iter().map(|q| q.1).collect(),
        },
        wce,
        baseline: base,
        mean_attempts,
        reflections,
    })
}

fn require_baselines(cfg: &ExperimentConfig) -> Result<&[BaselineKind]> {
    if cfg.baselines.is_empty() {
        return Err(Error::config("baseline", "this command needs at least one baseline"));
    }
    let model = cfg.sde();
    for b in &cfg.baselines {
        b.check_model(&model)?;
    }
    Ok(&cfg.baselines)
}

/// For each baseline writes `ks_<name>.json`, `qq_<name>.json` and
/// `marginal_<name>.csv`.
pub fn cmd_validate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<KsRecord>> {
    cfg.validate()?;
    let baselines = require_baselines(cfg)?;
    let (_, coeffs) = build_coefficients(cfg, cfg.l)?;
    let meta = cfg.meta()?;
    let mut records = Vec::new();
    for b in baselines {
        let v = validate_with_coefficients(cfg, b, &coeffs, cfg.seed)?;
        let name = b.name();
        write_json_file(
            out,
            &format!("ks_{name}.json"),
            &KsReport {
                meta: meta.clone(),
                record: v.record.clone(),
            },
        )?;
        write_json_file(out, &format!("qq_{name}.json"), &v.qq)?;
        write_file(out, &format!("marginal_{name}.csv"), |w| {
            writeln!(w, "# config_hash={}", meta.config_hash)?;
            writeln!(w, "# seed={}", meta.seed)?;
            writeln!(w, "# version={}", meta.version)?;
            writeln!(w, "path_id,wce,{name}")?;
            for (i, (a, b)) in v.wce.values.iter().zip(&v.baseline.values).enumerate() {
                writeln!(w, "{i},{a},{b}")?;
            }
            Ok(())
        })?;
        records.push(v.record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinLRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub p_values: Vec<f64>,
    pub median_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinLReport {
    pub meta: ArtifactMeta,
    pub baseline: String,
    pub endpoint_pair: String,
    pub threshold: f64,
    pub repetitions: u64,
    pub rows: Vec<MinLRow>,
    /// Smallest passing level, `None` when the whole ladder fails.
    #[serde(rename = "min_L")]
    pub min_l: Option<usize>,
    pub status: String,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Walks the ladder upward and stops at the first level whose median
/// p-value over the repetitions exceeds the threshold. Repetition `r` uses
/// seed `seed + r`.
pub fn min_l(cfg: &ExperimentConfig, baseline: &BaselineKind) -> Result<MinLReport> {
    cfg.validate()?;
    baseline.check_model(&cfg.sde())?;
    let mut rows = Vec::new();
    let mut found = None;
    for &l in &cfg.min_l.ladder {
        let (_, coeffs) = build_coefficients(cfg, l)?;
        let p_values = (0..cfg.min_l.repetitions)
            .map(|r| {
                validate_with_coefficients(cfg, baseline, &coeffs, cfg.seed.wrapping_add(r)).map(|v| v.record.p_value)
            })
            .collect::<Result<Vec<_>>>()?;
        let median_p = median(&p_values);
        rows.push(MinLRow { l, p_values, median_p });
        if median_p > cfg.min_l.threshold {
            found = Some(l);
            break;
        }
    }
    Ok(MinLReport {
        meta: cfg.meta()?,
        baseline: baseline.name().into(),
        endpoint_pair: endpoint_label(&cfg.spec()),
        threshold: cfg.min_l.threshold,
        repetitions: cfg.min_l.repetitions,
        rows,
        min_l: found,
        status: match found {
            Some(l) => format!("min L = {l}"),
            None => "none found".into(),
        },
    })
}

/// Writes `min_l_<baseline>.json` for every configured baseline.
pub fn cmd_min_l(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<MinLReport>> {
    cfg.validate()?;
    let mut reports = Vec::new();
    for b in require_baselines(cfg)? {
        let report = min_l(cfg, b)?;
        write_json_file(out, &format!("min_l_{}.json", b.name()), &report)?;
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub coefficients: usize,
    pub solve_seconds: f64,
    pub seconds_per_bridge: f64,
}

/// Times the propagator solve once and `n_paths` bridges one after another
/// on the calling thread, for every level in `benchmark_levels`.
pub fn benchmark(cfg: &ExperimentConfig) -> Result<Vec<BenchmarkRow>> {
    cfg.validate()?;
    cfg.benchmark_levels
        .iter()
        .map(|&l| {
            let start = Instant::now();
            let (_, coeffs) = build_coefficients(cfg, l)?;
            let solve_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            for p in 0..cfg.n_paths {
                std::hint::black_box(sample_bridge(&coeffs, cfg.seed, p));
            }
            Ok(BenchmarkRow {
                l,
                coefficients: coeffs.index_set.len(),
                solve_seconds,
                seconds_per_bridge: start.elapsed().as_secs_f64() / cfg.n_paths as f64,
            })
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Writes `benchmark.csv` with columns `L,coefficients,solve_seconds,seconds_per_bridge`.
pub fn cmd_benchmark(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<BenchmarkRow>> {
    let rows = benchmark(cfg)?;
    let meta = cfg.meta()?;
    write_file(out, "benchmark.csv", |w| {
        writeln!(w, "# config_hash={}", meta.config_hash)?;
        writeln!(w, "# seed={}", meta.seed)?;
        writeln!(w, "# version={}", meta.version)?;
        writeln!(w, "L,coefficients,solve_seconds,seconds_per_bridge")?;
        for r in &rows {
            writeln!(w, "{},{},{:.9},{:.9}", r.l, r.coefficients, r.solve_seconds, r.seconds_per_bridge)?;
        }
        Ok(())
    })?;
    Ok(rows)
}

/// The reference index table as CSV: `index,m_1..m_w,order` with
/// `w = min(L, 16)`.
pub fn table_a_csv(w: &mut impl Write, meta: &ArtifactMeta, p: u32, l: usize) -> std::io::Result<()> {
    let set = enumerate_table_a(p, l);
    let width = l.min(16);
    writeln!(w, "# config_hash={}", meta.config_hash)?;
    writeln!(w, "# seed={}", meta.seed)?;
    writeln!(w, "# version={}", meta.version)?;
    let mut header = vec!["index".to_string()];
    header.extend((1..=width).map(|k| format!("m_{k}")));
    header.push("order".into());
    writeln!(w, "{}", header.join(","))?;
    for (i, m) in set.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(m.dense(width).iter().map(u32::to_string));
        row.push(m.order().to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes `table_a.csv`.
pub fn cmd_table_a(cfg: &ExperimentConfig, out: &Path) -> Result<usize> {
    cfg.validate()?;
    let meta = cfg.meta()?;
    write_file(out, "table_a.csv", |w| table_a_csv(w, &meta, cfg.p, cfg.l))?;
    Ok(enumerate_table_a(cfg.p, cfg.l).len())
}

/// Writes `propagator.csv` with every coefficient on the grid.
pub fn cmd_dump_propagator(cfg: &ExperimentConfig, out: &Path) -> Result<PropagatorSolution> {
    cfg.validate()?;
    let (sol, _) = build_coefficients(cfg, cfg.l)?;
    let meta = cfg.meta()?;
    write_file(out, "propagator.csv", |w| write_propagator_csv(w, &meta, &sol))?;
    Ok(sol)
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::config("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!((c.p, c.grid, c.n_paths), (12, 1000, 1000));
        assert_eq!(c.scheme, IndexScheme::TableA);
        assert_eq!(c.eval_time(), 0.5);
        assert_eq!(c.model.kind.name(), "ou");
        c.validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let text = r#"{"model":{"name":"gbm","a":0.2,"sigma":0.3},"eta":1.0,"theta":1.0,"L":50,
                       "baselines":[{"kind":"doob_h"}]}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.sde(), SdeModel::gbm(0.2, 0.3, 1.0));
        assert_eq!(c.baselines, vec![BaselineKind::DoobH { substeps: 1 }]);
        let again = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);

        match ExperimentConfig::from_json(r#"{"grdi": 10}"#) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grdi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_names_fields() {
        let field = |c: ExperimentConfig| match c.validate() {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        let base = ExperimentConfig::default();
        assert_eq!(field(ExperimentConfig { grid: 1, ..base.clone() }), "grid");
        assert_eq!(field(ExperimentConfig { n_paths: 0, ..base.clone() }), "n_paths");
        assert_eq!(field(ExperimentConfig { horizon: -1.0, ..base.clone() }), "T");
        assert_eq!(field(ExperimentConfig { eval_time: Some(2.0), ..base.clone() }), "eval_time");
        assert_eq!(field(ExperimentConfig { eta: f64::NAN, ..base.clone() }), "eta");
        let mut c = base.clone();
        c.min_l.ladder = vec![10, 5];
        assert_eq!(field(c), "min_l.ladder");
    }

    #[test]
    fn overrides_apply() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            model: Some("gbm".into()),
            theta: Some(2.0),
            l: Some(7),
            baseline: Some("doob-h".into()),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(c.model.kind.name(), "gbm");
        assert_eq!((c.theta, c.l), (2.0, 7));
        assert_eq!(c.baselines.len(), 1);
        assert!(c.apply(&Overrides { model: Some("heston".into()), ..Overrides::default() }).is_err());
    }

    #[test]
    fn single_deterministic_path() {
        let c = ExperimentConfig {
            l: 0,
            n_paths: 1,
            theta: 1.0,
            grid: 100,
            ..ExperimentConfig::default()
        };
        let sim = simulate(&c).unwrap();
        let (_, coeffs) = build_coefficients(&c, 0).unwrap();
        assert_eq!(sim.paths[0].values, coeffs.mean_path());
        assert_eq!(sim.summary.variance, 0.0);
    }

    #[test]
    fn bladt_sorensen_gbm_is_a_mismatch() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            model: Some("gbm".into()),
            eta: Some(1.0),
            theta: Some(1.0),
            baseline: Some("bladt_sorensen".into()),
            ..Overrides::default()
        })
        .unwrap();
        let err = validate_against(&c, &c.baselines[0]).unwrap_err();
        assert!(matches!(err, Error::BaselineMismatch { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn min_l_zero_never_passes() {
        let mut c = ExperimentConfig {
            theta: 1.0,
            n_paths: 200,
            grid: 200,
            ..ExperimentConfig::default()
        };
        c.min_l.ladder = vec![0];
        c.min_l.repetitions = 3;
        let r = min_l(&c, &BaselineKind::ExactOu).unwrap();
        assert_eq!(r.min_l, None);
        assert_eq!(r.status, "none found");
        assert!(r.rows[0].median_p < 1e-10);
    }

    #[test]
    fn r2_of_exact_line() {
        assert!((linear_fit_r2(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!(linear_fit_r2(&[1.0, 2.0, 3.0], &[1.0, -1.0, 1.0]) < 1e-12);
    }

    #[test]
    fn table_a_csv_shape() {
        let meta = ExperimentConfig::default().meta().unwrap();
        let mut buf = Vec::new();
        table_a_csv(&mut buf, &meta, 12, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "index,m_1,m_2,m_3,order");
        assert_eq!(rows[1], "0,0,0,0,0");
        assert_eq!(rows[2], "1,1,0,0,1");
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let c = ExperimentConfig {
            theta: 1.0,
            l: 20,
            n_paths: 64,
            grid: 100,
            ..ExperimentConfig::default()
        };
        let one = with_threads(Some(1), || simulate(&c).unwrap().paths).unwrap();
        let four = with_threads(Some(4), || simulate(&c).unwrap().paths).unwrap();
        assert_eq!(one, four);
        assert!(with_threads(Some(0), || ()).is_err());
    }
}
