//! Declarative experiment configs and the batch commands behind the CLI:
//! order tables, single estimates, seeded Monte Carlo sweeps, and the golden
//! verification suite.
//!
//! Every random stream in a sweep is seeded from a stable hash of the master
//! seed and the stream's coordinates, so reruns are byte-identical no matter
//! how the work is scheduled.

use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::closure::{
    invert_dimension, order_row, AccessibleSet, OrderRow, OrderTable, SystemSpace, TableLimits,
    DEFAULT_CLOSURE_CAP,
};
use crate::dynamics::{add_noise, plan_sampling, simulate_lti, simulate_quantum, SamplingPlan, TimeSeries};
use crate::error::{Error, Result};
use crate::estimation::{
    build_hankel, estimate_dimension, median, noisy_order, svd_ratios, EstimationReport, Mode, PeakPick,
    PeakPolicy, DEFAULT_PEAK_THRESHOLD, DEFAULT_SEARCH_FRACTION,
};
use crate::model::{CouplingType, InteractionModel, DEFAULT_COUPLING_RANGE};
use crate::parallel::{map_indexed, Execution};
use crate::pauli::{PauliString, Symbol, DEFAULT_DENSE_LIMIT};
use crate::realization::{build_realization, discretize, Realization};

/// Instance and draw counts used by `--paper-scale`.
pub const PAPER_SCALE: (usize, usize) = (500, 100);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    pub model: ModelBlock,
    #[serde(default)]
    pub probe: ProbeBlock,
    #[serde(default)]
    pub sampling: SamplingBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    #[serde(default)]
    pub estimation: EstimationBlock,
}

fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub coupling_type: CouplingType,
    #[serde(default)]
    pub transverse_field: bool,
    pub qubits: Qubits,
    #[serde(default = "default_coupling_range")]
    pub coupling_range: [f64; 2],
    /// Exchange model only: draw `A_k` once and reuse it for `B_k`.
    #[serde(default = "yes")]
    pub tie_exchange: bool,
}

fn default_coupling_range() -> [f64; 2] {
    [DEFAULT_COUPLING_RANGE.0, DEFAULT_COUPLING_RANGE.1]
}

fn yes() -> bool {
    true
}

/// A single qubit count or an inclusive range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Qubits {
    Count(usize),
    Range { from: usize, to: usize },
}

impl Qubits {
    pub fn range(self) -> RangeInclusive<usize> {
        match self {
            Qubits::Count(n) => n..=n,
            Qubits::Range { from, to } => from..=to,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    /// Single-site Pauli measured on qubit 1; the model default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBlock {
    /// Largest chain the sampling interval must resolve.
    pub n_max: usize,
    pub coupling_max: f64,
    pub hankel_rows: usize,
    pub hankel_cols: usize,
    pub samples: usize,
}

impl Default for SamplingBlock {
    fn default() -> Self {
        SamplingBlock {
            n_max: 10,
            coupling_max: 100.0,
            hankel_rows: 100,
            hankel_cols: 100,
            samples: 199,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub variances: Vec<f64>,
    pub draws: usize,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        NoiseBlock {
            variances: vec![1e-7, 1e-6, 1e-5, 1e-4],
            draws: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub instances: usize,
    pub seed: u64,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        EnsembleBlock { instances: 50, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Determinant scan for noiseless simulated series, ratio peak otherwise.
    Auto,
    Determinant,
    SvdRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationBlock {
    pub method: MethodChoice,
    pub threshold: f64,
    /// Leading share of the ratio sequence searched for the final peak.
    pub search_fraction: f64,
    /// Largest `N` the order table is extended to when inverting.
    pub n_limit: usize,
    /// Largest order the determinant scan tries.
    pub scan_order_max: usize,
    pub closure_cap: usize,
    pub realization_cap: usize,
}

impl Default for EstimationBlock {
    fn default() -> Self {
        let limits = TableLimits::default();
        EstimationBlock {
            method: MethodChoice::Auto,
            threshold: DEFAULT_PEAK_THRESHOLD,
            search_fraction: DEFAULT_SEARCH_FRACTION,
            n_limit: 10,
            scan_order_max: 30,
            closure_cap: DEFAULT_CLOSURE_CAP,
            realization_cap: limits.realization_cap,
        }
    }
}

impl ExperimentConfig {
    /// Default blocks around the given model descriptor.
    pub fn new(coupling_type: CouplingType, transverse_field: bool, qubits: Qubits) -> Self {
        ExperimentConfig {
            out_dir: default_out_dir(),
            model: ModelBlock {
                coupling_type,
                transverse_field,
                qubits,
                coupling_range: default_coupling_range(),
                tie_exchange: true,
            },
            probe: ProbeBlock::default(),
            sampling: SamplingBlock::default(),
            noise: NoiseBlock::default(),
            ensemble: EnsembleBlock::default(),
            estimation: EstimationBlock::default(),
        }
    }

    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn paper_scale(&mut self) {
        self.ensemble.instances = PAPER_SCALE.0;
        self.noise.draws = PAPER_SCALE.1;
    }

    /// Checks every constraint that can be checked without computing anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let m = &self.model;
        let (from, to) = (*m.qubits.range().start(), *m.qubits.range().end());
        if from == 0 || to < from || to > crate::pauli::MAX_SITES {
            return bad(format!("qubit range {from}..={to} is empty or out of bounds"));
        }
        let [lo, hi] = m.coupling_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad(format!("coupling_range [{lo}, {hi}] must satisfy 0 < lo < hi"));
        }
        self.interaction_model()?;
        self.probe_symbol()?;
        let s = &self.sampling;
        if s.n_max < 2 || !(s.coupling_max > 0.0) || !s.coupling_max.is_finite() {
            return bad("sampling needs n_max >= 2 and a finite coupling_max > 0".into());
        }
        if s.hankel_rows < 2 || s.hankel_cols < 2 {
            return bad("Hankel matrix must be at least 2x2".into());
        }
        let needed = s.hankel_rows + s.hankel_cols - 1;
        if s.samples < needed {
            return bad(format!(
                "samples = {} is below hankel_rows + hankel_cols - 1 = {needed}",
                s.samples
            ));
        }
        if let Some(v) = self.noise.variances.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return bad(format!("noise variance {v} must be finite and >= 0"));
        }
        if self.noise.draws == 0 || self.ensemble.instances == 0 {
            return bad("noise.draws and ensemble.instances must be at least 1".into());
        }
        let e = &self.estimation;
        if !(e.threshold > 0.0) {
            return bad("estimation.threshold must be positive".into());
        }
        if !(e.search_fraction > 0.0 && e.search_fraction <= 1.0) {
            return bad("estimation.search_fraction must be in (0, 1]".into());
        }
        if e.n_limit == 0 || e.scan_order_max == 0 {
            return bad("estimation.n_limit and scan_order_max must be at least 1".into());
        }
        Ok(())
    }

    pub fn interaction_model(&self) -> Result<InteractionModel> {
        InteractionModel::new(self.model.coupling_type, self.model.transverse_field)
    }

    pub fn probe_symbol(&self) -> Result<Symbol> {
        let Some(text) = &self.probe.observable else {
            return Ok(self.interaction_model()?.default_probe());
        };
        let t = text.trim();
        let t = t.strip_suffix('1').unwrap_or(t);
        let mut chars = t.chars();
        match (chars.next().and_then(Symbol::from_char), chars.next()) {
            (Some(s), None) if s != Symbol::I => Ok(s),
            _ => Err(Error::Config(format!(
                "probe observable '{text}' must be one of X, Y, Z on qubit 1"
            ))),
        }
    }

    pub fn space(&self) -> Result<SystemSpace> {
        Ok(SystemSpace::with_probe(self.interaction_model()?, self.probe_symbol()?))
    }

    pub fn limits(&self) -> TableLimits {
        TableLimits {
            closure_cap: self.estimation.closure_cap,
            realization_cap: self.estimation.realization_cap,
        }
    }

    pub fn policy(&self) -> PeakPolicy {
        PeakPolicy {
            threshold: self.estimation.threshold,
            search_fraction: self.estimation.search_fraction,
        }
    }

    pub fn plan(&self) -> Result<SamplingPlan> {
        plan_sampling(&self.interaction_model()?, self.sampling.n_max, self.sampling.coupling_max)
    }

    fn coupling_range(&self) -> (f64, f64) {
        (self.model.coupling_range[0], self.model.coupling_range[1])
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable seed for the stream at `parts`; independent of platform and scheduling.
pub fn stream_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(mix(0x70_726f_6265), |h, &p| mix(h ^ mix(p)))
}

/// Hamiltonian seed for instance `i` of the `n`-qubit chain.
pub fn instance_seed(master: u64, n: usize, i: usize) -> u64 {
    stream_seed(&[master, 1, n as u64, i as u64])
}

/// Noise seed for draw `d` on instance `i` at variance index `v`.
pub fn noise_seed(master: u64, n: usize, v: usize, i: usize, d: usize) -> u64 {
    stream_seed(&[master, 2, n as u64, v as u64, i as u64, d as u64])
}

/// Closure and measured observable for one chain length, shared by all instances.
struct ChainContext {
    n: usize,
    g: AccessibleSet,
    measured: PauliString,
}

impl ChainContext {
    fn new(space: &SystemSpace, n: usize, limits: TableLimits) -> Result<Self> {
        let g = space
            .accessible_set(n, limits.closure_cap)
            .map_err(|e| with_n(e, n))?;
        if g.len() > limits.realization_cap {
            return Err(Error::ResourceLimit(format!(
                "N={n}: accessible set of {} elements exceeds the realization cap {}",
                g.len(),
                limits.realization_cap
            )));
        }
        Ok(ChainContext {
            n,
            g,
            measured: space.measured(n)?,
        })
    }

    fn realization(&self, cfg: &ExperimentConfig, space: &SystemSpace, instance: usize) -> Result<Realization> {
        let inst = space.model.sample_instance(
            self.n,
            instance_seed(cfg.ensemble.seed, self.n, instance),
            cfg.coupling_range(),
            cfg.model.tie_exchange,
        )?;
        build_realization(&inst, &self.g, &self.measured, &space.recipe)
    }

    fn clean_series(&self, cfg: &ExperimentConfig, space: &SystemSpace, dt: f64, instance: usize) -> Result<TimeSeries> {
        let r = self.realization(cfg, space, instance)?;
        Ok(simulate_lti(&discretize(&r, dt)?, &r, cfg.sampling.samples))
    }
}

fn with_n(e: Error, n: usize) -> Error {
    match e {
        Error::ResourceLimit(m) if !m.starts_with("N=") => Error::ResourceLimit(format!("N={n}: {m}")),
        other => other,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "nan".into()
    }
}

/// Ratio-curve CSV: `k, median_ratio, err_bar`.
pub fn ratio_csv(median_ratios: &[f64], err_bars: &[f64]) -> String {
    let mut out = String::from("k,median_ratio,err_bar\n");
    for (k, (m, e)) in median_ratios.iter().zip(err_bars).enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, fmt_f(*m), fmt_f(*e));
    }
    out
}

fn metadata_header(cfg: &ExperimentConfig, command: &str) -> Result<String> {
    let mut s = format!("command = {command}\nmaster_seed = {}\n", cfg.ensemble.seed);
    s.push_str("instance_seed = splitmix fold of (master_seed, 1, N, instance)\n");
    s.push_str("noise_seed = splitmix fold of (master_seed, 2, N, variance_index, instance, draw)\n");
    s.push_str("\n[config]\n");
    s.push_str(&cfg.to_toml_string()?);
    Ok(s)
}

/// Order table for every `N` in the configured range; written to `order_table.csv`.
pub fn cmd_order_table(cfg: &ExperimentConfig, out: &Path, exec: Execution) -> Result<OrderTable> {
    cfg.validate()?;
    let space = cfg.space()?;
    let limits = cfg.limits();
    let ns: Vec<usize> = cfg.model.qubits.range().collect();
    let rows = map_indexed(exec, ns.len(), |i| order_row(&space, ns[i], limits).map_err(|e| with_n(e, ns[i])))
        .into_iter()
        .collect::<Result<Vec<OrderRow>>>()?;
    let table = OrderTable { space, rows };
    write_file(&out.join("order_table.csv"), &table.to_csv())?;
    let mut meta = metadata_header(cfg, "order-table")?;
    let _ = writeln!(
        meta,
        "\ninvertible = {}",
        table.check_invertible().map(|_| "true".to_string()).unwrap_or_else(|e| format!("false ({e})"))
    );
    write_file(&out.join("order_table.txt"), &meta)?;
    Ok(table)
}

/// Where `estimate` gets its series.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesSource {
    /// Instance 0 of the first configured `N`, with the first configured noise variance.
    Simulate,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub report: EstimationReport,
    /// Qubit count used to simulate; `None` for file input.
    pub n_true: Option<usize>,
    pub series: TimeSeries,
}

pub fn cmd_estimate(cfg: &ExperimentConfig, source: &SeriesSource, out: &Path) -> Result<EstimateOutcome> {
    cfg.validate()?;
    let space = cfg.space()?;
    let (series, n_true, noisy) = match source {
        SeriesSource::Simulate => {
            let n = *cfg.model.qubits.range().start();
            let ctx = ChainContext::new(&space, n, cfg.limits())?;
            let clean = ctx.clean_series(cfg, &space, cfg.plan()?.dt, 0)?;
            let variance = cfg.noise.variances.first().copied().unwrap_or(0.0);
            let ts = add_noise(&clean, variance, noise_seed(cfg.ensemble.seed, n, 0, 0, 0))?;
            (ts, Some(n), variance > 0.0)
        }
        SeriesSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            (TimeSeries::from_csv(&text, &path.display().to_string())?, None, true)
        }
    };
    let s = &cfg.sampling;
    let mode = match (cfg.estimation.method, noisy) {
        (MethodChoice::Determinant, _) | (MethodChoice::Auto, false) => {
            let fit = series.len().saturating_sub(1) / 2;
            let n_max = cfg.estimation.scan_order_max.min(fit);
            if n_max == 0 {
                return Err(Error::InsufficientData {
                    needed: 3,
                    available: series.len(),
                });
            }
            Mode::Noiseless { n_max }
        }
        _ => Mode::SvdRatio {
            rows: s.hankel_rows,
            cols: s.hankel_cols,
        },
    };
    let report = estimate_dimension(&space, &series, mode, cfg.policy(), cfg.estimation.n_limit, cfg.limits())?;

    let dir = out.join("estimate");
    let zeros = vec![0.0; report.ratios.len()];
    write_file(&dir.join("ratios.csv"), &ratio_csv(&report.ratios, &zeros))?;
    write_file(&dir.join("series.csv"), &series.to_csv())?;
    let mut text = report.summary();
    if let Some(n) = n_true {
        let _ = writeln!(text, "N_true = {n}");
    }
    write_file(&dir.join("report.txt"), &text)?;
    let mut meta = metadata_header(cfg, "estimate")?;
    meta.push_str("\n[series]\n");
    meta.push_str(&series.metadata());
    if n_true.is_some() {
        let _ = writeln!(meta, "noise_seed = {}", noise_seed(cfg.ensemble.seed, n_true.unwrap_or(0), 0, 0, 0));
    }
    write_file(&dir.join("metadata.txt"), &meta)?;
    Ok(EstimateOutcome { report, n_true, series })
}

/// Aggregated statistics of one `(N, sigma2)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub n_true: usize,
    pub n_hat_mode: usize,
    pub success_rate: f64,
    pub median_margin: f64,
    pub median_ratios: Vec<f64>,
    pub err_bars: Vec<f64>,
    /// Peak of the median-ratio curve.
    pub curve_peak: PeakPick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub n_qubits: usize,
    pub variance: f64,
    pub outcome: std::result::Result<CellStats, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub dt: f64,
    pub cells: Vec<CellReport>,
}

impl SweepSummary {
    pub fn cell(&self, n_qubits: usize, variance: f64) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.n_qubits == n_qubits && c.variance == variance)
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,sigma2,n_true,n_hat_mode,success_rate,median_margin\n");
        for c in &self.cells {
            match &c.outcome {
                Ok(s) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        c.n_qubits,
                        fmt_f(c.variance),
                        s.n_true,
                        s.n_hat_mode,
                        fmt_f(s.success_rate),
                        fmt_f(s.median_margin)
                    );
                }
                Err(_) => {
                    let _ = writeln!(out, "{},{},NA,NA,NA,NA", c.n_qubits, fmt_f(c.variance));
                }
            }
        }
        out
    }
}

/// One trial: ratio curve plus its peak pick.
#[derive(Debug, Clone)]
struct Trial {
    ratios: Vec<f64>,
    pick: PeakPick,
}

/// All draws for one instance, grouped by variance index.
type InstanceTrials = Vec<Vec<Trial>>;

fn run_instance(
    cfg: &ExperimentConfig,
    space: &SystemSpace,
    ctx: &ChainContext,
    dt: f64,
    instance: usize,
) -> Result<InstanceTrials> {
    let clean = ctx.clean_series(cfg, space, dt, instance)?;
    let (r, s) = (cfg.sampling.hankel_rows, cfg.sampling.hankel_cols);
    let policy = cfg.policy();
    cfg.noise
        .variances
        .iter()
        .enumerate()
        .map(|(v, &variance)| {
            (0..cfg.noise.draws)
                .map(|d| {
                    let seed = noise_seed(cfg.ensemble.seed, ctx.n, v, instance, d);
                    let noisy = add_noise(&clean, variance, seed)?;
                    let spec = svd_ratios(&build_hankel(&noisy, r, s)?, None)?;
                    let pick = noisy_order(&spec.ratios, policy)?;
                    Ok(Trial {
                        ratios: spec.ratios,
                        pick,
                    })
                })
                .collect()
        })
        .collect()
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn aggregate(per_instance: &[&[Trial]], n_true: usize, policy: PeakPolicy) -> Result<CellStats> {
    let trials: Vec<&Trial> = per_instance.iter().flat_map(|t| t.iter()).collect();
    let len = trials.iter().map(|t| t.ratios.len()).min().unwrap_or(0);
    if len == 0 {
        return Err(Error::Degenerate("cell produced no ratios".into()));
    }
    let median_ratios: Vec<f64> = (0..len)
        .map(|k| median(&trials.iter().map(|t| t.ratios[k]).collect::<Vec<_>>()))
        .collect();
    let err_bars: Vec<f64> = (0..len)
        .map(|k| {
            let sds: Vec<f64> = per_instance
                .iter()
                .map(|draws| std_dev(&draws.iter().map(|t| t.ratios[k]).collect::<Vec<_>>()))
                .collect();
            median(&sds)
        })
        .collect();
    let mut counts = std::collections::BTreeMap::new();
    for t in &trials {
        *counts.entry(t.pick.order).or_insert(0usize) += 1;
    }
    let n_hat_mode = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&k, _)| k)
        .unwrap_or(0);
    let hits = trials.iter().filter(|t| t.pick.order == n_true).count();
    let margins: Vec<f64> = trials.iter().map(|t| t.pick.margin).collect();
    Ok(CellStats {
        n_true,
        n_hat_mode,
        success_rate: hits as f64 / trials.len() as f64,
        median_margin: median(&margins),
        curve_peak: noisy_order(&median_ratios, policy)?,
        median_ratios,
        err_bars,
    })
}

/// File name of the ratio curve for one cell.
pub fn ratio_file_name(n: usize, variance: f64) -> String {
    format!("ratios_N{n}_sigma2_{}.csv", fmt_f(variance))
}

/// Monte Carlo sweep over every `(N, sigma2)` cell; writes one ratio curve per
/// cell plus `summary.csv` and `metadata.txt`. Failing cells are recorded and
/// the sweep carries on.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, exec: Execution) -> Result<SweepSummary> {
    cfg.validate()?;
    if cfg.noise.variances.is_empty() {
        return Err(Error::Config("sweep needs at least one noise variance".into()));
    }
    let space = cfg.space()?;
    let limits = cfg.limits();
    let dt = cfg.plan()?.dt;
    let ns: Vec<usize> = cfg.model.qubits.range().collect();
    let contexts: Vec<Result<(ChainContext, usize)>> = map_indexed(exec, ns.len(), |i| {
        let n = ns[i];
        let ctx = ChainContext::new(&space, n, limits)?;
        let n_true = order_row(&space, n, limits).map_err(|e| with_n(e, n))?.model_order;
        Ok((ctx, n_true))
    });

    let instances = cfg.ensemble.instances;
    let jobs: Vec<(usize, usize)> = (0..ns.len())
        .filter(|&i| contexts[i].is_ok())
        .flat_map(|i| (0..instances).map(move |k| (i, k)))
        .collect();
    let results: Vec<Result<InstanceTrials>> = map_indexed(exec, jobs.len(), |j| {
        let (i, k) = jobs[j];
        let (ctx, _) = contexts[i].as_ref().expect("filtered above");
        run_instance(cfg, &space, ctx, dt, k)
    });

    let mut cells = Vec::new();
    let mut cursor = 0;
    for (i, &n) in ns.iter().enumerate() {
        let chain = match &contexts[i] {
            Ok((_, n_true)) => {
                let block = &results[cursor..cursor + instances];
                cursor += instances;
                Ok((block, *n_true))
            }
            Err(e) => Err(e.to_string()),
        };
        for (v, &variance) in cfg.noise.variances.iter().enumerate() {
            let outcome = chain.clone().and_then(|(block, n_true)| {
                let per_instance = block
                    .iter()
                    .map(|r| r.as_ref().map(|t| t[v].as_slice()).map_err(|e| e.to_string()))
                    .collect::<std::result::Result<Vec<_>, String>>()?;
                aggregate(&per_instance, n_true, cfg.policy()).map_err(|e| e.to_string())
            });
            cells.push(CellReport {
                n_qubits: n,
                variance,
                outcome,
            });
        }
    }
    let summary = SweepSummary { dt, cells };

    for c in &summary.cells {
        if let Ok(s) = &c.outcome {
            write_file(&out.join(ratio_file_name(c.n_qubits, c.variance)), &ratio_csv(&s.median_ratios, &s.err_bars))?;
        }
    }
    write_file(&out.join("summary.csv"), &summary.to_csv())?;
    let mut meta = metadata_header(cfg, "sweep")?;
    let _ = writeln!(meta, "\n[run]\ndt = {}", fmt_f(dt));
    for &n in &ns {
        let seeds: Vec<String> = (0..instances)
            .map(|i| instance_seed(cfg.ensemble.seed, n, i).to_string())
            .collect();
        let _ = writeln!(meta, "instance_seeds_N{n} = [{}]", seeds.join(", "));
    }
    meta.push_str("\n[cells]\n");
    for c in &summary.cells {
        let line = match &c.outcome {
            Ok(s) => format!(
                "curve_peak = {}, curve_peak_ratio = {}, curve_margin = {}, confident = {}",
                s.curve_peak.order,
                fmt_f(s.curve_peak.peak_ratio),
                fmt_f(s.curve_peak.margin),
                s.curve_peak.confident
            ),
            Err(e) => format!("failed: {e}"),
        };
        let _ = writeln!(meta, "N={} sigma2={}: {line}", c.n_qubits, fmt_f(c.variance));
    }
    write_file(&out.join("metadata.txt"), &meta)?;
    Ok(summary)
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(VerifyCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len());
        out
    }
}

/// Expected order and minimality for one golden table row.
struct Golden {
    label: &'static str,
    coupling: CouplingType,
    field: bool,
    ns: RangeInclusive<usize>,
    order: fn(usize) -> usize,
    minimal: Option<bool>,
}

fn goldens() -> Vec<Golden> {
    use CouplingType::*;
    vec![
        Golden { label: "exchange n = N", coupling: Exchange, field: false, ns: 2..=6, order: |n| n, minimal: None },
        Golden { label: "ising+field n = 2N", coupling: Ising, field: true, ns: 2..=6, order: |n| 2 * n, minimal: Some(true) },
        Golden {
            label: "heisenberg+field n = 2^(2N-1)",
            coupling: Heisenberg,
            field: true,
            ns: 2..=3,
            order: |n| 1 << (2 * n - 1),
            minimal: Some(true),
        },
        Golden {
            label: "heisenberg n = 4^(N-1) (even N), 4^(N-1)-1 (odd N)",
            coupling: Heisenberg,
            field: false,
            ns: 2..=4,
            order: |n| if n % 2 == 0 { 1 << (2 * (n - 1)) } else { (1 << (2 * (n - 1))) - 1 },
            minimal: None,
        },
        Golden { label: "ising n = 2", coupling: Ising, field: false, ns: 2..=6, order: |_| 2, minimal: None },
        Golden {
            label: "appendixB n = 2N-2",
            coupling: AppendixB,
            field: false,
            ns: 2..=5,
            order: |n| 2 * n - 2,
            minimal: Some(false),
        },
    ]
}

/// Oracle-equivalence instances per `(model, N)`.
pub const ORACLE_INSTANCES: usize = 20;
pub const ORACLE_SAMPLES: usize = 200;
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Largest `|y_lti - y_quantum|` over `instances` random instances of one model and size.
pub fn oracle_deviation(model: InteractionModel, n: usize, instances: usize, master: u64) -> Result<f64> {
    let space = SystemSpace::new(model);
    let g = space.accessible_set(n, DEFAULT_CLOSURE_CAP)?;
    let measured = space.measured(n)?;
    let dt = plan_sampling(&model, n.max(2), DEFAULT_COUPLING_RANGE.1)?.dt;
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let inst = model.sample_instance(n, instance_seed(master, n, i), DEFAULT_COUPLING_RANGE, true)?;
        let r = build_realization(&inst, &g, &measured, &space.recipe)?;
        let lti = simulate_lti(&discretize(&r, dt)?, &r, ORACLE_SAMPLES);
        let q = simulate_quantum(&inst, &space.recipe, &measured, dt, ORACLE_SAMPLES, DEFAULT_DENSE_LIMIT)?;
        for (a, b) in lti.samples.iter().zip(&q.samples) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Golden suite: closed-form order tables, oracle equivalence, and the
/// non-minimal counterexample. Failures are results, not errors.
pub fn cmd_verify(cfg: Option<&ExperimentConfig>, exec: Execution) -> VerifyReport {
    let master = cfg.map(|c| c.ensemble.seed).unwrap_or(EnsembleBlock::default().seed);
    let limits = cfg.map(|c| c.limits()).unwrap_or_default();
    let mut report = VerifyReport::default();

    for g in goldens() {
        let model = match InteractionModel::new(g.coupling, g.field) {
            Ok(m) => m,
            Err(e) => {
                report.push(g.label, false, e.to_string());
                continue;
            }
        };
        let space = SystemSpace::new(model);
        let ns: Vec<usize> = g.ns.clone().collect();
        let rows = map_indexed(exec, ns.len(), |i| order_row(&space, ns[i], limits));
        for (&n, row) in ns.iter().zip(rows) {
            let name = format!("{} [N={n}]", g.label);
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    report.push(name, false, e.to_string());
                    continue;
                }
            };
            let expect = (g.order)(n);
            let mut ok = row.model_order == expect;
            let mut detail = format!("n = {} (expected {expect}), |G| = {}", row.model_order, row.accessible_size);
            if let Some(min) = g.minimal {
                ok &= row.minimal == min;
                let _ = write!(detail, ", minimal = {}", row.minimal);
            }
            if g.coupling == CouplingType::AppendixB {
                let deficiency = row.accessible_size - row.model_order;
                ok &= deficiency == 1;
                let _ = write!(detail, ", rank deficiency = {deficiency}");
            }
            report.push(name, ok, detail);
        }
        if g.coupling == CouplingType::Ising && !g.field {
            let table = OrderTable::bracketing(&space, 2, *g.ns.end(), limits);
            let flagged = matches!(
                table.and_then(|t| invert_dimension(&t, 2)),
                Err(Error::NonInvertible(_))
            );
            report.push("ising table flagged non-invertible", flagged, format!("non-invertible = {flagged}"));
        }
    }

    let models = InteractionModel::catalog();
    let jobs: Vec<(InteractionModel, usize)> = models
        .iter()
        .flat_map(|&m| (2..=4).map(move |n| (m, n)))
        .collect();
    let devs = map_indexed(exec, jobs.len(), |j| oracle_deviation(jobs[j].0, jobs[j].1, ORACLE_INSTANCES, master));
    for ((m, n), dev) in jobs.iter().zip(devs) {
        let name = format!(
            "oracle {}{} [N={n}]",
            m.coupling(),
            if m.transverse_field() { "+field" } else { "" }
        );
        match dev {
            Ok(d) => report.push(name, d < ORACLE_TOLERANCE, format!("max deviation {d:.3e} over {ORACLE_INSTANCES} instances")),
            Err(e) => report.push(name, false, e.to_string()),
        }
    }
    report
}

/// Exit-code class for an error: 2 config/parse, 3 model mismatch or
/// non-invertible, 4 resource limit, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) => 2,
        Error::ModelMismatch(_) | Error::NonInvertible(_) => 3,
        Error::ResourceLimit(_) => 4,
        _ => 1,
    }
}
