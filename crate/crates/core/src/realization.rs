//! Classical state-space realization `(A, C, x0)` on accessible-set coordinates.
//!
//! Convention: `d<O>/dt = <i[H, O]>` with `H = sum_m theta_m S_m` written directly
//! in Pauli strings. Any spin-1/2 prefactors are absorbed into `theta_m`. The
//! coherent vector `x_j = <O_j>` then obeys `x' = A x` with `A` real and
//! exactly skew-symmetric.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::closure::AccessibleSet;
use crate::error::{Error, Result};
use crate::model::HamiltonianInstance;
use crate::pauli::{PauliString, Phase, Symbol};

/// Relative threshold on Krylov residuals below which a direction counts as dependent.
pub const KRYLOV_TOLERANCE: f64 = 1e-9;

/// Probe in the +1 eigenstate of the measured observable, every other qubit
/// maximally mixed: `rho0 = (I + P_1) / 2^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitialStateRecipe {
    pub probe: Symbol,
}

impl InitialStateRecipe {
    pub fn probe_eigenstate(probe: Symbol) -> Self {
        InitialStateRecipe { probe }
    }

    /// `<O>` at `t = 0` for a non-identity string `O`.
    pub fn expectation(&self, o: &PauliString) -> f64 {
        let probe = PauliString::single(o.n_sites(), 1, self.probe).expect("valid site count");
        if *o == probe {
            1.0
        } else {
            0.0
        }
    }
}

/// Continuous-time realization.
#[derive(Debug, Clone)]
pub struct Realization {
    pub a_cont: DMatrix<f64>,
    /// Index of the measured element; `C` is the unit row selecting it.
    pub measured_index: usize,
    pub x0: DVector<f64>,
    pub basis: AccessibleSet,
}

impl Realization {
    pub fn size(&self) -> usize {
        self.x0.len()
    }

    pub fn c_out(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.size());
        c[self.measured_index] = 1.0;
        c
    }

    /// Largest `|A_ij + A_ji|`; zero for every realization this module builds.
    pub fn skew_defect(&self) -> f64 {
        (&self.a_cont + self.a_cont.transpose()).amax()
    }

    /// Nonzero positions of `A` as 1-based `(row, col)` pairs, row-major.
    pub fn sparsity(&self) -> Vec<(usize, usize)> {
        let n = self.size();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.a_cont[(i, j)] != 0.0 {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// Coordinate-list dump of `A`: one `row col value` line per nonzero.
    pub fn sparsity_dump(&self) -> String {
        let mut s = String::new();
        for (i, j) in self.sparsity() {
            s.push_str(&format!("{i} {j} {:.6e}\n", self.a_cont[(i - 1, j - 1)]));
        }
        s
    }
}

/// Builds `A` from pairwise commutators of the Hamiltonian terms with the basis.
pub fn build_realization(
    instance: &HamiltonianInstance,
    basis: &AccessibleSet,
    measured: &PauliString,
    recipe: &InitialStateRecipe,
) -> Result<Realization> {
    let measured_index = basis.index_of(measured).ok_or_else(|| {
        Error::InvalidObservable(format!("measured observable {measured} is not in the accessible set"))
    })?;
    let n = basis.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (j, o) in basis.elements().iter().enumerate() {
        for t in instance.terms() {
            if !t.op.anticommutes(o) {
                continue;
            }
            // i[S, O] = 2i S O, and S O = (+-i) P for anticommuting Hermitian strings.
            let (phase, p) = t.op.product(o);
            let coef = match phase {
                Phase::I => -2.0,
                Phase::MINUS_I => 2.0,
                _ => return Err(Error::Internal(format!("real phase for {} * {o}", t.op))),
            };
            let i = basis.index_of(&p).ok_or_else(|| {
                Error::Internal(format!("accessible set is not closed: {p} missing"))
            })?;
            a[(j, i)] += t.value * coef;
        }
    }
    let x0 = DVector::from_iterator(n, basis.elements().iter().map(|o| recipe.expectation(o)));
    if x0.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidObservable(
            "initial coherent vector vanishes on the accessible set".into(),
        ));
    }
    Ok(Realization {
        a_cont: a,
        measured_index,
        x0,
        basis: basis.clone(),
    })
}

/// Sampled system `x(j+1) = A_d x(j)` with `A_d = exp(A dt)`.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub a_disc: DMatrix<f64>,
    pub dt: f64,
}

/// Exact exponential of a real skew-symmetric matrix through the Hermitian
/// eigendecomposition of `iA`.
pub fn expm_skew(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let h: DMatrix<Complex64> = a.map(|v| Complex64::new(0.0, v));
    let eig = h.symmetric_eigen();
    // A = -i V diag(l) V^H  =>  exp(tA) = V diag(exp(-i l t)) V^H
    let phases = eig.eigenvalues.map(|l| Complex64::new(0.0, -l * t).exp());
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    (scaled * eig.eigenvectors.adjoint()).map(|z| z.re)
}

pub fn discretize(r: &Realization, dt: f64) -> Result<DiscreteSystem> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("sampling interval must be positive, got {dt}")));
    }
    Ok(DiscreteSystem {
        a_disc: expm_skew(&r.a_cont, dt),
        dt,
    })
}

impl DiscreteSystem {
    /// Rows `C, C A, ..., C A^{rows-1}`.
    pub fn observability_matrix(&self, r: &Realization, rows: usize) -> DMatrix<f64> {
        let n = r.size();
        let mut o = DMatrix::zeros(rows, n);
        let mut row = r.c_out().transpose();
        for k in 0..rows {
            o.set_row(k, &row);
            row = &row * &self.a_disc;
        }
        o
    }

    /// Columns `x0, A x0, ..., A^{cols-1} x0`.
    pub fn controllability_matrix(&self, r: &Realization, cols: usize) -> DMatrix<f64> {
        let n = r.size();
        let mut c = DMatrix::zeros(n, cols);
        let mut col = r.x0.clone();
        for k in 0..cols {
            c.set_column(k, &col);
            col = &self.a_disc * &col;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimalityReport {
    pub rank_observability: usize,
    pub rank_controllability: usize,
    pub size: usize,
    /// Dimension of the reachable-and-observable part; the model order.
    pub transfer_degree: usize,
    pub minimal: bool,
}

/// Orthonormal basis of the Krylov space `span{v, M v, M^2 v, ...}`.
///
/// Equals the column space of the controllability matrix built from `(M, v)`;
/// double Gram-Schmidt keeps the basis orthonormal where plain powers would not.
pub fn krylov_basis(m: &DMatrix<f64>, v: &DVector<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE) * (n.max(1) as f64);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    basis.push(v / vnorm);
    while basis.len() < n {
        let mut w = m * basis.last().unwrap();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&w);
                w.axpy(-proj, b, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= tol * scale {
            break;
        }
        basis.push(w / norm);
    }
    DMatrix::from_columns(&basis)
}

/// Observability, controllability, and Kalman-reduced order of a realization.
pub fn minimality(r: &Realization) -> MinimalityReport {
    minimality_with_tolerance(r, KRYLOV_TOLERANCE)
}

pub fn minimality_with_tolerance(r: &Realization, tol: f64) -> MinimalityReport {
    let a = &r.a_cont;
    let at = a.transpose();
    let ctrl = krylov_basis(a, &r.x0, tol);
    let obs = krylov_basis(&at, &r.c_out(), tol);
    // Restrict to the reachable subspace, then count what C still sees there.
    let reduced_a = ctrl.transpose() * a * &ctrl;
    let reduced_c = ctrl.transpose() * r.c_out();
    let degree = krylov_basis(&reduced_a.transpose(), &reduced_c, tol).ncols();
    let size = r.size();
    MinimalityReport {
        rank_observability: obs.ncols(),
        rank_controllability: ctrl.ncols(),
        size,
        transfer_degree: degree,
        minimal: obs.ncols() == size && ctrl.ncols() == size,
    }
}
