//! Model-order estimation from Hankel matrices of probe samples, and the final
//! dimension estimate.

use nalgebra::DMatrix;

use crate::closure::{invert_dimension, OrderTable, SystemSpace, TableLimits};
use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};

/// Singular values below `max(r, s) * lambda_1 * RANK_TOLERANCE` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Threshold on the normalized determinant in the noiseless scan.
///
/// The normalized determinant of a `(k+1) x (k+1)` block is `|det H| / (sigma_1 * prod_{i<=k} sigma_i)`,
/// which is `sigma_{k+1} / sigma_1`. Below the true order it stays far above rounding level for
/// Nyquist-rate sampling; at and past it, it sits at `~1e-16`.
pub const DETERMINANT_TOLERANCE: f64 = 1e-13;

/// Default peak threshold, as a multiple of the median ratio.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 5.0;

/// Default share of the ratio sequence searched for a peak.
///
/// The trailing singular values of a square noise-dominated Hankel matrix sit
/// at the hard edge of the spectrum, where `lambda_k / lambda_{k+1}` is
/// heavy-tailed; a search over the whole sequence picks those up as "final" peaks.
pub const DEFAULT_SEARCH_FRACTION: f64 = 0.5;

/// `H[i][k] = y(i + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    pub matrix: DMatrix<f64>,
}

impl HankelMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.matrix.clone().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Numerical rank with the `max(r, s) * lambda_1 * tol` cutoff.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        numerical_rank(&self.singular_values(), self.rows().max(self.cols()), tol)
    }
}

pub fn numerical_rank(sorted_sv: &[f64], max_dim: usize, tol: f64) -> usize {
    let Some(&top) = sorted_sv.first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    let cutoff = max_dim as f64 * top * tol;
    sorted_sv.iter().filter(|&&s| s > cutoff).count()
}

pub fn build_hankel(ts: &TimeSeries, r: usize, s: usize) -> Result<HankelMatrix> {
    build_hankel_from(&ts.samples, r, s)
}

pub fn build_hankel_from(y: &[f64], r: usize, s: usize) -> Result<HankelMatrix> {
    if r == 0 || s == 0 {
        return Err(Error::Config("Hankel dimensions must be at least 1".into()));
    }
    let needed = r + s - 1;
    if y.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: y.len(),
        });
    }
    Ok(HankelMatrix {
        matrix: DMatrix::from_fn(r, s, |i, k| y[i + k]),
    })
}

/// Result of the noiseless determinant scan with its SVD cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiselessOrder {
    pub order: usize,
    /// Number of singular values of `H_{n_max+1, n_max+1}` above `det_tol * sigma_1`.
    pub svd_rank: usize,
    pub agrees: bool,
    /// Normalized determinant at the detected order.
    pub determinant: f64,
}

/// `|det H|` divided by the determinant of its best rank-`(k)` part times `sigma_1`.
fn normalized_determinant(h: &DMatrix<f64>) -> f64 {
    let mut sv: Vec<f64> = h.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv[0];
    if top == 0.0 {
        return 0.0;
    }
    let k = sv.len() - 1;
    let scale: f64 = top * sv[..k].iter().product::<f64>();
    if scale == 0.0 {
        return 0.0;
    }
    h.determinant().abs() / scale
}

/// Smallest `k <= n_max` with a vanishing (normalized) determinant of `H_{k+1,k+1}`.
pub fn noiseless_order(ts: &TimeSeries, n_max: usize) -> Result<NoiselessOrder> {
    noiseless_order_with(ts, n_max, DETERMINANT_TOLERANCE)
}

pub fn noiseless_order_with(ts: &TimeSeries, n_max: usize, det_tol: f64) -> Result<NoiselessOrder> {
    let full = build_hankel(ts, n_max + 1, n_max + 1)?;
    if full.matrix.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all-zero time series".into()));
    }
    let sv = full.singular_values();
    let svd_rank = sv.iter().filter(|&&s| s > det_tol * sv[0]).count();
    for k in 1..=n_max {
        let h = full.matrix.view((0, 0), (k + 1, k + 1)).into_owned();
        let det = normalized_determinant(&h);
        if det < det_tol {
            return Ok(NoiselessOrder {
                order: k,
                svd_rank,
                agrees: svd_rank == k,
                determinant: det,
            });
        }
    }
    Err(Error::OrderExceedsBound(n_max))
}

/// Sorted singular values and consecutive ratios `lambda_k / lambda_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAnalysis {
    pub singular_values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Number of singular values that were raised to the floor.
    pub clamped: usize,
}

impl SpectrumAnalysis {
    /// Ratios computed from an already sorted spectrum, with a floor.
    pub fn from_singular_values(mut sv: Vec<f64>, floor: f64) -> Result<Self> {
        sv.sort_by(|a, b| b.total_cmp(a));
        if sv.len() < 2 {
            return Err(Error::Degenerate("need at least two singular values".into()));
        }
        if sv[0] <= 0.0 {
            return Err(Error::Degenerate("all-zero Hankel matrix".into()));
        }
        let mut clamped = 0;
        let floored: Vec<f64> = sv
            .iter()
            .map(|&s| {
                if s < floor {
                    clamped += 1;
                    floor
                } else {
                    s
                }
            })
            .collect();
        let ratios = floored.windows(2).map(|w| w[0] / w[1]).collect();
        Ok(SpectrumAnalysis {
            singular_values: sv,
            ratios,
            clamped,
        })
    }

    /// True when some ratio hits a floored value, i.e. the matrix is numerically rank deficient.
    pub fn at_rank_edge(&self) -> bool {
        self.clamped > 0
    }
}

/// Default floor `eps * lambda_1 * max(r, s)`.
pub fn default_floor(h: &HankelMatrix, top: f64) -> f64 {
    f64::EPSILON * top * h.rows().max(h.cols()) as f64
}

pub fn svd_ratios(h: &HankelMatrix, floor: Option<f64>) -> Result<SpectrumAnalysis> {
    if h.rows() < 2 || h.cols() < 2 {
        return Err(Error::Config("ratio analysis needs at least a 2x2 Hankel matrix".into()));
    }
    let sv = h.singular_values();
    let top = sv[0];
    if top <= 0.0 {
        return Err(Error::Degenerate("all-zero Hankel matrix".into()));
    }
    let floor = floor.unwrap_or_else(|| default_floor(h, top));
    SpectrumAnalysis::from_singular_values(sv, floor)
}

/// Rule for locating the final sharp peak in a ratio sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPolicy {
    /// Ratios above `threshold * median(ratios)` count as peaks.
    pub threshold: f64,
    /// Only `k <= search_fraction * (len + 1)` is searched (at least one ratio).
    pub search_fraction: f64,
}

impl Default for PeakPolicy {
    fn default() -> Self {
        PeakPolicy {
            threshold: DEFAULT_PEAK_THRESHOLD,
            search_fraction: DEFAULT_SEARCH_FRACTION,
        }
    }
}

impl PeakPolicy {
    /// Number of leading ratios searched out of `len`.
    pub fn search_len(&self, len: usize) -> usize {
        let k = ((len + 1) as f64 * self.search_fraction).floor() as usize;
        k.clamp(1, len.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPick {
    /// 1-based index `k` of the chosen ratio `lambda_k / lambda_{k+1}`.
    pub order: usize,
    pub peak_ratio: f64,
    /// Peak ratio over the largest other ratio.
    pub margin: f64,
    /// False when nothing cleared the threshold and argmax was used.
    pub confident: bool,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Largest index whose ratio clears the threshold; argmax when none does.
/// Only the leading [`PeakPolicy::search_len`] ratios take part.
pub fn noisy_order(ratios: &[f64], policy: PeakPolicy) -> Result<PeakPick> {
    if ratios.is_empty() {
        return Err(Error::Degenerate("empty ratio sequence".into()));
    }
    let ratios = &ratios[..policy.search_len(ratios.len())];
    let cut = policy.threshold * median(ratios);
    let above = ratios.iter().rposition(|&r| r > cut);
    let (idx, confident) = match above {
        Some(i) => (i, true),
        None => {
            let i = ratios
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            (i, false)
        }
    };
    let peak = ratios[idx];
    let other = ratios
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, &r)| r)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = if other.is_finite() && other > 0.0 { peak / other } else { f64::INFINITY };
    Ok(PeakPick {
        order: idx + 1,
        peak_ratio: peak,
        margin,
        confident,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Determinant scan on square Hankel matrices.
    Noiseless { n_max: usize },
    /// Singular-value ratio peak of an `r x s` Hankel matrix.
    SvdRatio { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    NoiselessDet,
    SvdRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub method: Method,
    pub n_hat: usize,
    pub peak_ratio: Option<f64>,
    pub margin: Option<f64>,
    pub confident: bool,
    pub n_qubits: usize,
    pub dimension: u128,
    pub hankel_size: (usize, usize),
    pub ratios: Vec<f64>,
    pub svd_rank: Option<usize>,
    pub table: OrderTable,
}

impl EstimationReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "method = {:?}\nn_hat = {}\nN_hat = {}\ndim = {}\nhankel = {}x{}\n",
            self.method, self.n_hat, self.n_qubits, self.dimension, self.hankel_size.0, self.hankel_size.1
        );
        if let Some(r) = self.peak_ratio {
            s.push_str(&format!("peak_ratio = {r:e}\n"));
        }
        if let Some(m) = self.margin {
            s.push_str(&format!("margin = {m:e}\nconfident = {}\n", self.confident));
        }
        if let Some(k) = self.svd_rank {
            s.push_str(&format!("svd_rank = {k}\n"));
        }
        s
    }
}

/// Full pipeline: Hankel, order detection, then table inversion.
pub fn estimate_dimension(
    space: &SystemSpace,
    ts: &TimeSeries,
    mode: Mode,
    policy: PeakPolicy,
    n_limit: usize,
    limits: TableLimits,
) -> Result<EstimationReport> {
    let (method, n_hat, peak, margin, confident, hankel_size, ratios, svd_rank) = match mode {
        Mode::Noiseless { n_max } => {
            let o = noiseless_order(ts, n_max)?;
            (
                Method::NoiselessDet,
                o.order,
                None,
                None,
                o.agrees,
                (n_max + 1, n_max + 1),
                Vec::new(),
                Some(o.svd_rank),
            )
        }
        Mode::SvdRatio { rows, cols } => {
            let h = build_hankel(ts, rows, cols)?;
            let spec = svd_ratios(&h, None)?;
            let pick = noisy_order(&spec.ratios, policy)?;
            (
                Method::SvdRatio,
                pick.order,
                Some(pick.peak_ratio),
                Some(pick.margin),
                pick.confident,
                (rows, cols),
                spec.ratios,
                None,
            )
        }
    };
    let table = OrderTable::bracketing(space, n_hat, n_limit, limits)?;
    let est = invert_dimension(&table, n_hat)?;
    Ok(EstimationReport {
        method,
        n_hat,
        peak_ratio: peak,
        margin,
        confident,
        n_qubits: est.n_qubits,
        dimension: est.dimension,
        hankel_size,
        ratios,
        svd_rank,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{add_noise, plan_sampling, simulate_lti, Provenance};
    use crate::model::{CouplingType, InteractionModel};
    use crate::realization::{build_realization, discretize};

    fn series(y: Vec<f64>) -> TimeSeries {
        TimeSeries { dt: 1.0, samples: y, provenance: Provenance::Lti }
    }

    fn simulated(c: CouplingType, field: bool, n: usize, seed: u64, count: usize) -> TimeSeries {
        let model = InteractionModel::new(c, field).unwrap();
        let space = SystemSpace::new(model);
        let g = space.accessible_set(n, 100_000).unwrap();
        let inst = model.sample_instance(n, seed, (10.0, 100.0), true).unwrap();
        let r = build_realization(&inst, &g, &space.measured(n).unwrap(), &space.recipe).unwrap();
        let dt = plan_sampling(&model, n.max(2), 100.0).unwrap().dt;
        simulate_lti(&discretize(&r, dt).unwrap(), &r, count)
    }

    #[test]
    fn hankel_layout() {
        let h = build_hankel(&series(vec![1.0, 2.0, 3.0, 4.0, 5.0]), 3, 3).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 3.0, 4.0, 3.0, 4.0, 5.0]);
        assert_eq!(h.matrix, expect);
        let e = build_hankel(&series(vec![1.0; 4]), 3, 3).unwrap_err();
        assert_eq!(e, Error::InsufficientData { needed: 5, available: 4 });
    }

    #[test]
    fn constant_series_is_rank_one() {
        let h = build_hankel(&series(vec![0.7; 20]), 6, 6).unwrap();
        assert_eq!(h.numerical_rank(RANK_TOLERANCE), 1);
        let o = noiseless_order(&series(vec![0.7; 20]), 5).unwrap();
        assert_eq!(o.order, 1);
        assert!(o.agrees);
    }

    #[test]
    fn exchange_two_sites_rank_two() {
        let ts = simulated(CouplingType::Exchange, false, 2, 3, 7);
        let h = build_hankel(&ts, 4, 4).unwrap();
        assert_eq!(h.numerical_rank(RANK_TOLERANCE), 2);
    }

    #[test]
    fn noiseless_orders() {
        let ts = simulated(CouplingType::Exchange, false, 4, 5, 40);
        let o = noiseless_order(&ts, 10).unwrap();
        assert_eq!((o.order, o.svd_rank, o.agrees), (4, 4, true));
        let ts = simulated(CouplingType::Ising, true, 3, 5, 40);
        assert_eq!(noiseless_order(&ts, 10).unwrap().order, 6);
    }

    #[test]
    fn noiseless_order_bound_and_degenerate() {
        let ts = simulated(CouplingType::Ising, true, 3, 5, 40);
        assert_eq!(noiseless_order(&ts, 4).unwrap_err(), Error::OrderExceedsBound(4));
        assert!(matches!(noiseless_order(&series(vec![0.0; 10]), 3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ratios_of_given_spectrum() {
        let s = SpectrumAnalysis::from_singular_values(vec![10.0, 10.0, 1.0, 0.1], 0.0).unwrap();
        let expect = [1.0, 10.0, 10.0];
        for (a, b) in s.ratios.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(s.ratios.iter().all(|&r| r >= 1.0));
    }

    #[test]
    fn rank_one_ratio_is_flagged() {
        let h = build_hankel(&series(vec![0.3; 30]), 10, 10).unwrap();
        let s = svd_ratios(&h, None).unwrap();
        assert!(s.at_rank_edge());
        assert!(s.ratios[0] > 1e10);
        assert!(s.ratios.iter().all(|r| r.is_finite()));
        let zero = build_hankel(&series(vec![0.0; 30]), 10, 10).unwrap();
        assert!(matches!(svd_ratios(&zero, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn peak_policy() {
        let mut r = vec![1.1, 1.0, 40.0, 1.2, 1.1];
        r.extend(std::iter::repeat_n(1.05, 10));
        let p = noisy_order(&r, PeakPolicy::default()).unwrap();
        assert_eq!(p.order, 3);
        assert!(p.confident && p.margin > 30.0);

        let mut r = vec![8.0, 1.1, 7.0, 1.0];
        r.extend(std::iter::repeat_n(1.0, 10));
        assert_eq!(noisy_order(&r, PeakPolicy { threshold: 5.0, ..PeakPolicy::default() }).unwrap().order, 3);

        let p = noisy_order(&[1.0, 1.3, 1.1], PeakPolicy::default()).unwrap();
        assert_eq!(p.order, 2);
        assert!(!p.confident);
        assert!(noisy_order(&[], PeakPolicy::default()).is_err());

        // A spike at the far end of the sequence is outside the searched half.
        let mut r = vec![1.0; 20];
        r[3] = 50.0;
        r[19] = 80.0;
        assert_eq!(noisy_order(&r, PeakPolicy::default()).unwrap().order, 4);
        let whole = PeakPolicy { search_fraction: 1.0, ..PeakPolicy::default() };
        assert_eq!(noisy_order(&r, whole).unwrap().order, 20);
    }

    #[test]
    fn noisy_exchange_four_sites_peaks_at_four() {
        let ts = simulated(CouplingType::Exchange, false, 4, 17, 199);
        let noisy = add_noise(&ts, 1e-7, 5).unwrap();
        let h = build_hankel(&noisy, 100, 100).unwrap();
        let s = svd_ratios(&h, None).unwrap();
        let argmax = s
            .ratios
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax + 1, 4);
    }

    #[test]
    fn scaling_leaves_ratios_unchanged() {
        let ts = add_noise(&simulated(CouplingType::Exchange, false, 3, 2, 79), 1e-6, 1).unwrap();
        let h = build_hankel(&ts, 40, 40).unwrap();
        let scaled = HankelMatrix { matrix: &h.matrix * 3.5 };
        let a = svd_ratios(&h, None).unwrap();
        let b = svd_ratios(&scaled, None).unwrap();
        for (x, y) in a.singular_values.iter().zip(&b.singular_values) {
            assert!((y - 3.5 * x).abs() <= 1e-9 * y.abs().max(1e-300));
        }
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert!((x - y).abs() <= 1e-8 * x);
        }
    }

    #[test]
    fn end_to_end_noiseless_and_mismatch() {
        let space = SystemSpace::new(InteractionModel::new(CouplingType::Exchange, false).unwrap());
        let ts = simulated(CouplingType::Exchange, false, 5, 8, 40);
        let rep = estimate_dimension(
            &space,
            &ts,
            Mode::Noiseless { n_max: 12 },
            PeakPolicy::default(),
            10,
            TableLimits::default(),
        )
        .unwrap();
        assert_eq!((rep.n_hat, rep.n_qubits, rep.dimension), (5, 5, 32));

        let ising = SystemSpace::new(InteractionModel::new(CouplingType::Ising, true).unwrap());
        let e = estimate_dimension(
            &ising,
            &ts,
            Mode::Noiseless { n_max: 12 },
            PeakPolicy::default(),
            10,
            TableLimits::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::ModelMismatch(_)));
    }

    #[test]
    fn end_to_end_noisy_ising_field() {
        let model = InteractionModel::new(CouplingType::Ising, true).unwrap();
        let space = SystemSpace::new(model);
        // The weakest pair of modes here has weight ~2e-2, so keep the noise well below it.
        let ts = simulated(CouplingType::Ising, true, 4, 12, 199);
        let noisy = add_noise(&ts, 1e-10, 3).unwrap();
        let rep = estimate_dimension(
            &space,
            &noisy,
            Mode::SvdRatio { rows: 100, cols: 100 },
            PeakPolicy::default(),
            10,
            TableLimits::default(),
        )
        .unwrap();
        assert_eq!((rep.n_hat, rep.n_qubits, rep.dimension), (8, 4, 16));
    }
}
