//! Probe time series: LTI propagation, the exact density-matrix oracle, and
//! additive Gaussian measurement noise.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{HamiltonianInstance, InteractionModel};
use crate::pauli::{PauliString, DEFAULT_DENSE_LIMIT};
use crate::realization::{DiscreteSystem, InitialStateRecipe, Realization};

/// Where a series came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Lti,
    Quantum,
    Noisy { variance: f64, seed: u64 },
    File(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Lti => write!(f, "lti"),
            Provenance::Quantum => write!(f, "quantum"),
            Provenance::Noisy { variance, seed } => write!(f, "noisy(sigma2={variance:e}, seed={seed})"),
            Provenance::File(p) => write!(f, "file({p})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub provenance: Provenance,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `j,t,y` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,t,y\n");
        for (j, y) in self.samples.iter().enumerate() {
            s.push_str(&format!("{j},{:.17e},{:.17e}\n", j as f64 * self.dt, y));
        }
        s
    }

    /// Human-readable sidecar describing the series.
    pub fn metadata(&self) -> String {
        format!(
            "provenance = \"{}\"\ndt = {:e}\nsamples = {}\n",
            self.provenance,
            self.dt,
            self.samples.len()
        )
    }

    /// Parses the `j,t,y` layout; rows must be consecutive from `j = 0`.
    pub fn from_csv(text: &str, source: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty time-series file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["j", "t", "y"] {
            return Err(Error::Parse(format!(
                "expected header 'j,t,y', found '{header}'"
            )));
        }
        let mut ts = Vec::new();
        let mut samples = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("row {row}: expected 3 columns, found {}", fields.len())));
            }
            let j: usize = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad index '{}'", fields[0])))?;
            if j != row {
                return Err(Error::Parse(format!("row {row}: index {j} out of sequence")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {row}: bad number '{s}'")))
            };
            ts.push(num(fields[1])?);
            samples.push(num(fields[2])?);
        }
        if samples.len() < 2 {
            return Err(Error::Parse("time series needs at least two samples".into()));
        }
        let dt = ts[1] - ts[0];
        if !(dt > 0.0) {
            return Err(Error::Parse("sample times must increase".into()));
        }
        Ok(TimeSeries {
            dt,
            samples,
            provenance: Provenance::File(source.to_string()),
        })
    }
}

/// `dt = pi / omega_max` for a worst-case instance.
///
/// `omega_max` is the largest angular frequency the probe signal can carry:
/// the spread `E_max - E_min` of the Hamiltonian spectrum, or the bound
/// `2 sum_m |theta_m|` (each Pauli string has unit norm) when the chain is too
/// large to diagonalize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    pub omega_max: f64,
    pub dt: f64,
    pub n_max: usize,
    pub coupling_max: f64,
    pub exact: bool,
}

pub fn plan_sampling(model: &InteractionModel, n_max: usize, coupling_max: f64) -> Result<SamplingPlan> {
    plan_sampling_with_limit(model, n_max, coupling_max, DEFAULT_DENSE_LIMIT)
}

pub fn plan_sampling_with_limit(
    model: &InteractionModel,
    n_max: usize,
    coupling_max: f64,
    dense_limit: usize,
) -> Result<SamplingPlan> {
    if n_max < 2 || !(coupling_max > 0.0) {
        return Err(Error::Config(format!(
            "sampling plan needs N_max >= 2 and coupling_max > 0 (got {n_max}, {coupling_max})"
        )));
    }
    let worst = model.uniform_instance(n_max, coupling_max)?;
    let (omega_max, exact) = if n_max <= dense_limit {
        let h = dense_hamiltonian(&worst, dense_limit)?;
        let eig = h.symmetric_eigen();
        let hi = eig.eigenvalues.max();
        let lo = eig.eigenvalues.min();
        (hi - lo, true)
    } else {
        (spectral_bound(&worst), false)
    };
    Ok(SamplingPlan {
        omega_max,
        dt: std::f64::consts::PI / omega_max,
        n_max,
        coupling_max,
        exact,
    })
}

/// Triangle-inequality bound `2 sum |theta_m|` on the spectral spread.
pub fn spectral_bound(instance: &HamiltonianInstance) -> f64 {
    2.0 * instance.terms().iter().map(|t| t.value.abs()).sum::<f64>()
}

/// `y(j) = C A^j x0` for `j = 0..count`.
pub fn simulate_lti(d: &DiscreteSystem, r: &Realization, count: usize) -> TimeSeries {
    let mut x = r.x0.clone();
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        samples.push(x[r.measured_index]);
        x = &d.a_disc * &x;
    }
    TimeSeries {
        dt: d.dt,
        samples,
        provenance: Provenance::Lti,
    }
}

/// Dense `H = sum_m theta_m S_m`.
pub fn dense_hamiltonian(instance: &HamiltonianInstance, limit: usize) -> Result<DMatrix<Complex64>> {
    let n = instance.n_qubits();
    if n > limit {
        return Err(Error::ResourceLimit(format!(
            "{n}-qubit Hamiltonian exceeds the {limit}-qubit dense limit"
        )));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for t in instance.terms() {
        h += t.op.dense_matrix(limit)? * Complex64::new(t.value, 0.0);
    }
    Ok(h)
}

/// `rho0 = |+1><+1|_probe (x) I / 2^{N-1}` for the measured probe observable.
pub fn initial_density(recipe: &InitialStateRecipe, n_qubits: usize, limit: usize) -> Result<DMatrix<Complex64>> {
    let p = PauliString::single(n_qubits, 1, recipe.probe)?.dense_matrix(limit)?;
    let dim = p.nrows();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    Ok((id + p) / Complex64::new(dim as f64, 0.0))
}

/// Exact `tr(M rho(t_j))` with `rho(t) = e^{-iHt} rho0 e^{iHt}`, via the
/// eigendecomposition of `H`.
pub fn simulate_quantum(
    instance: &HamiltonianInstance,
    recipe: &InitialStateRecipe,
    measured: &PauliString,
    dt: f64,
    count: usize,
    limit: usize,
) -> Result<TimeSeries> {
    let h = dense_hamiltonian(instance, limit)?;
    let rho0 = initial_density(recipe, instance.n_qubits(), limit)?;
    let m = measured.dense_matrix(limit)?;
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let vh = v.adjoint();
    let rho_e = &vh * rho0 * v;
    let m_e = &vh * m * v;
    let dim = v.nrows();
    let e: &DVector<f64> = &eig.eigenvalues;
    // y(t) = sum_{a,b} M_ba rho_ab exp(-i (E_a - E_b) t)
    let mut weights = Vec::new();
    for a in 0..dim {
        for b in 0..dim {
            let w = m_e[(b, a)] * rho_e[(a, b)];
            if w.norm() > 0.0 {
                weights.push((w, e[a] - e[b]));
            }
        }
    }
    let samples = (0..count)
        .map(|j| {
            let t = j as f64 * dt;
            weights
                .iter()
                .map(|(w, freq)| (w * Complex64::new(0.0, -freq * t).exp()).re)
                .sum()
        })
        .collect();
    Ok(TimeSeries {
        dt,
        samples,
        provenance: Provenance::Quantum,
    })
}

/// Adds i.i.d. `N(0, variance)` noise, seeded; zero variance is a no-op.
pub fn add_noise(ts: &TimeSeries, variance: f64, seed: u64) -> Result<TimeSeries> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Config(format!("noise variance must be >= 0, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(ts.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = ts.samples.iter().map(|y| y + normal.sample(&mut rng)).collect();
    Ok(TimeSeries {
        dt: ts.dt,
        samples,
        provenance: Provenance::Noisy { variance, seed },
    })
}

/// Signal-to-noise labels for the standard variance grid.
pub fn snr_label_db(variance: f64) -> Option<u32> {
    const TABLE: [(f64, u32); 4] = [(1e-7, 35), (1e-6, 30), (1e-5, 25), (1e-4, 20)];
    TABLE
        .iter()
        .find(|(v, _)| ((variance - v) / v).abs() < 1e-9)
        .map(|&(_, db)| db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::SystemSpace;
    use crate::model::CouplingType::{self, *};
    use crate::model::Term;
    use crate::pauli::Symbol;
    use crate::realization::{build_realization, discretize};

    fn model(c: CouplingType, f: bool) -> InteractionModel {
        InteractionModel::new(c, f).unwrap()
    }

    fn lti(inst: &HamiltonianInstance, space: &SystemSpace, dt: f64, count: usize) -> TimeSeries {
        let n = inst.n_qubits();
        let g = space.accessible_set(n, 100_000).unwrap();
        let r = build_realization(inst, &g, &space.measured(n).unwrap(), &space.recipe).unwrap();
        simulate_lti(&discretize(&r, dt).unwrap(), &r, count)
    }

    #[test]
    fn exact_plan_for_two_site_exchange() {
        let j = 40.0;
        let plan = plan_sampling(&model(Exchange, false), 2, j).unwrap();
        assert!(plan.exact);
        // Independent 4x4 oracle: J (XX + YY) has eigenvalues {0, 0, 2J, -2J}.
        let h = model(Exchange, false).uniform_instance(2, j).unwrap();
        let dense = dense_hamiltonian(&h, 12).unwrap();
        let ev = dense.symmetric_eigen().eigenvalues;
        let mut ev: Vec<f64> = ev.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] + 2.0 * j).abs() < 1e-12 && (ev[3] - 2.0 * j).abs() < 1e-12);
        assert!((plan.omega_max - 4.0 * j).abs() < 1e-10);
        assert!((plan.dt - std::f64::consts::PI / (4.0 * j)).abs() < 1e-15);
    }

    #[test]
    fn doubling_couplings_halves_dt() {
        for m in [model(Exchange, false), model(Ising, true), model(Heisenberg, false)] {
            let a = plan_sampling(&m, 4, 50.0).unwrap();
            let b = plan_sampling(&m, 4, 100.0).unwrap();
            assert!((a.dt / b.dt - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn bound_branch_and_its_validity() {
        let m = model(Exchange, false);
        let plan = plan_sampling(&m, 10, 100.0).unwrap();
        assert!(plan.exact);
        let bound = plan_sampling_with_limit(&m, 10, 100.0, 8).unwrap();
        assert!(!bound.exact);
        // 9 edges, two unit-norm strings each, spread bound doubles the norm bound.
        assert!((bound.omega_max - 2.0 * 18.0 * 100.0).abs() < 1e-9);
        assert!(bound.omega_max >= plan.omega_max);
        let exact6 = plan_sampling(&m, 6, 100.0).unwrap();
        let bound6 = plan_sampling_with_limit(&m, 6, 100.0, 4).unwrap();
        assert!(bound6.omega_max >= exact6.omega_max);
        assert!(bound6.dt <= exact6.dt);
    }

    #[test]
    fn dt_shrinks_with_n_max() {
        let m = model(Ising, true);
        let dts: Vec<f64> = (2..=6).map(|n| plan_sampling(&m, n, 100.0).unwrap().dt).collect();
        assert!(dts.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn plan_rejects_bad_inputs() {
        assert!(plan_sampling(&model(Exchange, false), 1, 10.0).is_err());
        assert!(plan_sampling(&model(Exchange, false), 3, 0.0).is_err());
    }

    #[test]
    fn lti_starts_at_one_and_stays_bounded() {
        for m in InteractionModel::catalog() {
            let space = SystemSpace::new(m);
            let inst = m.sample_instance(4, 9, (10.0, 100.0), true).unwrap();
            let ts = lti(&inst, &space, 1e-3, 500);
            assert_eq!(ts.samples[0], 1.0);
            assert!(ts.samples.iter().all(|y| y.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn rotation_series_is_cosine() {
        let m = model(Exchange, false);
        let j = 25.0;
        let inst = m.uniform_instance(2, j).unwrap();
        let dt = 0.003;
        let ts = lti(&inst, &SystemSpace::new(m), dt, 100);
        for (k, y) in ts.samples.iter().enumerate() {
            assert!((y - (2.0 * j * k as f64 * dt).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_density_matches_plus_state_times_mixed() {
        let rho = initial_density(&InitialStateRecipe::probe_eigenstate(Symbol::X), 3, 12).unwrap();
        let plus = DMatrix::from_element(2, 2, Complex64::new(0.5, 0.0));
        let mixed = DMatrix::<Complex64>::identity(4, 4) / Complex64::new(4.0, 0.0);
        assert!((rho - plus.kronecker(&mixed)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn quantum_series_starts_at_one() {
        let m = model(Heisenberg, true);
        let inst = m.sample_instance(3, 4, (10.0, 100.0), true).unwrap();
        let space = SystemSpace::new(m);
        let ts = simulate_quantum(&inst, &space.recipe, &space.measured(3).unwrap(), 1e-3, 5, 12).unwrap();
        assert!((ts.samples[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_hamiltonian_gives_constant_series() {
        let m = model(Exchange, false);
        let terms = m
            .hamiltonian_terms(3)
            .unwrap()
            .into_iter()
            .map(|(name, op)| Term { name, value: 0.0, op })
            .collect();
        let inst = HamiltonianInstance::unchecked(m, 3, terms);
        let space = SystemSpace::new(m);
        let ts = simulate_quantum(&inst, &space.recipe, &space.measured(3).unwrap(), 0.1, 20, 12).unwrap();
        assert!(ts.samples.iter().all(|y| (y - 1.0).abs() < 1e-14));
    }

    #[test]
    fn quantum_oracle_size_limit() {
        let m = model(Exchange, false);
        let inst = m.uniform_instance(5, 1.0).unwrap();
        let space = SystemSpace::new(m);
        let e = simulate_quantum(&inst, &space.recipe, &space.measured(5).unwrap(), 0.1, 2, 4);
        assert!(matches!(e, Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn lti_matches_quantum_for_three_site_exchange() {
        let m = model(Exchange, false);
        let space = SystemSpace::new(m);
        let inst = m.sample_instance(3, 21, (10.0, 100.0), true).unwrap();
        let dt = plan_sampling(&m, 3, 100.0).unwrap().dt;
        let a = lti(&inst, &space, dt, 200);
        let b = simulate_quantum(&inst, &space.recipe, &space.measured(3).unwrap(), dt, 200, 12).unwrap();
        let dev = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "deviation {dev}");
    }

    fn constant(n: usize) -> TimeSeries {
        TimeSeries { dt: 0.1, samples: vec![0.5; n], provenance: Provenance::Lti }
    }

    #[test]
    fn noise_zero_variance_is_identity() {
        let ts = constant(10);
        assert_eq!(add_noise(&ts, 0.0, 3).unwrap(), ts);
        assert!(matches!(add_noise(&ts, -1e-3, 3), Err(Error::Config(_))));
    }

    #[test]
    fn noise_sample_variance_and_seeds() {
        let ts = constant(10_000);
        let a = add_noise(&ts, 1e-4, 1).unwrap();
        let b = add_noise(&ts, 1e-4, 2).unwrap();
        assert_ne!(a.samples, b.samples);
        for s in [&a, &b] {
            let d: Vec<f64> = s.samples.iter().zip(&ts.samples).map(|(x, y)| x - y).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
            assert!((var / 1e-4 - 1.0).abs() < 0.2, "variance {var}");
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let ts = constant(200);
        let a = add_noise(&ts, 1e-7, 77).unwrap();
        let b = add_noise(&ts, 1e-7, 77).unwrap();
        assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn snr_labels() {
        assert_eq!(snr_label_db(1e-7), Some(35));
        assert_eq!(snr_label_db(1e-4), Some(20));
        assert_eq!(snr_label_db(3e-5), None);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let ts = TimeSeries { dt: 0.25, samples: vec![1.0, -0.5, 0.125], provenance: Provenance::Lti };
        let back = TimeSeries::from_csv(&ts.to_csv(), "mem").unwrap();
        assert_eq!(back.samples, ts.samples);
        assert!((back.dt - 0.25).abs() < 1e-15);
        assert!(TimeSeries::from_csv("t,y\n0,1\n", "x").is_err());
        assert!(TimeSeries::from_csv("j,t,y\n0,0,1\n2,0.1,1\n", "x").is_err());
        assert!(TimeSeries::from_csv("j,t,y\n0,0,1,4\n", "x").is_err());
        assert!(ts.metadata().contains("provenance = \"lti\""));
    }
}
