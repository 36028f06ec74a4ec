//! Interaction models: a coupling type on a recursively grown chain graph,
//! and concrete Hamiltonian instances `H = sum_m theta_m S_m` over Pauli strings.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, Symbol};

/// Default coupling range for random instances, angular-frequency units.
pub const DEFAULT_COUPLING_RANGE: (f64, f64) = (10.0, 100.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingType {
    Ising,
    Exchange,
    Heisenberg,
    /// `Z_k Z_{k+1}` plus `Z_k X_{k+1}` couplings; the non-minimal counterexample.
    #[serde(rename = "appendixb", alias = "appendixB")]
    AppendixB,
}

impl CouplingType {
    pub const ALL: [CouplingType; 4] = [
        CouplingType::Ising,
        CouplingType::Exchange,
        CouplingType::Heisenberg,
        CouplingType::AppendixB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CouplingType::Ising => "ising",
            CouplingType::Exchange => "exchange",
            CouplingType::Heisenberg => "heisenberg",
            CouplingType::AppendixB => "appendixb",
        }
    }
}

impl FromStr for CouplingType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ising" => Ok(CouplingType::Ising),
            "exchange" | "xy" => Ok(CouplingType::Exchange),
            "heisenberg" | "xyz" => Ok(CouplingType::Heisenberg),
            "appendixb" | "appendix_b" | "zz-zx" => Ok(CouplingType::AppendixB),
            other => Err(Error::Config(format!("unknown coupling type '{other}'"))),
        }
    }
}

impl fmt::Display for CouplingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the graph family grows from one member to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrowthStep {
    /// Append one vertex joined to the previous last vertex.
    ChainAppend,
}

/// Coupling type plus a recursively constructible graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InteractionModel {
    coupling: CouplingType,
    transverse_field: bool,
    growth: GrowthStep,
}

impl InteractionModel {
    pub fn new(coupling: CouplingType, transverse_field: bool) -> Result<Self> {
        if coupling == CouplingType::AppendixB && transverse_field {
            return Err(Error::Config(
                "appendixb coupling does not take a transverse field".into(),
            ));
        }
        Ok(InteractionModel {
            coupling,
            transverse_field,
            growth: GrowthStep::ChainAppend,
        })
    }

    /// Every catalog model, used by sweeps over the whole catalog.
    pub fn catalog() -> Vec<InteractionModel> {
        let mut out = Vec::new();
        for c in CouplingType::ALL {
            out.push(InteractionModel::new(c, false).unwrap());
            if c != CouplingType::AppendixB {
                out.push(InteractionModel::new(c, true).unwrap());
            }
        }
        out
    }

    pub fn coupling(&self) -> CouplingType {
        self.coupling
    }

    pub fn transverse_field(&self) -> bool {
        self.transverse_field
    }

    pub fn growth(&self) -> GrowthStep {
        self.growth
    }

    /// Probe observable used when none is configured.
    ///
    /// The field-free Ising chain couples through `X`, which commutes with `X_1`,
    /// so it is probed through `Y_1` instead.
    pub fn default_probe(&self) -> Symbol {
        if self.coupling == CouplingType::Ising && !self.transverse_field {
            Symbol::Y
        } else {
            Symbol::X
        }
    }

    /// Adjacency matrix of the `n`-vertex member of the family.
    pub fn build_adjacency(&self, n: usize) -> AdjacencyMatrix {
        let mut adj = AdjacencyMatrix::single(self.transverse_field);
        for _ in 1..n {
            adj = self.grow(&adj);
        }
        adj
    }

    /// Applies the elementary growth step once.
    pub fn grow(&self, adj: &AdjacencyMatrix) -> AdjacencyMatrix {
        match self.growth {
            GrowthStep::ChainAppend => {
                let n = adj.size();
                let mut next = AdjacencyMatrix::zeros(n + 1);
                for i in 0..n {
                    for j in 0..n {
                        next.entries[i][j] = adj.entries[i][j];
                    }
                }
                next.entries[n][n] = u8::from(self.transverse_field);
                next.entries[n - 1][n] = 1;
                next.entries[n][n - 1] = 1;
                next
            }
        }
    }

    /// Named parameter slots and their operator strings for an `n`-qubit chain.
    ///
    /// Field terms `Omega_k: Z_k` come first, then per-edge couplings in edge order.
    pub fn hamiltonian_terms(&self, n: usize) -> Result<Vec<(String, PauliString)>> {
        use Symbol::*;
        let mut terms = Vec::new();
        if self.transverse_field {
            for k in 1..=n {
                terms.push((format!("Omega_{k}"), PauliString::single(n, k, Z)?));
            }
        }
        let pair = |k: usize, a: Symbol, b: Symbol| PauliString::from_sparse(n, &[(k, a), (k + 1, b)]);
        for k in 1..n {
            match self.coupling {
                CouplingType::Ising => terms.push((format!("J_{k}"), pair(k, X, X)?)),
                CouplingType::Exchange => {
                    terms.push((format!("A_{k}"), pair(k, X, X)?));
                    terms.push((format!("B_{k}"), pair(k, Y, Y)?));
                }
                CouplingType::Heisenberg => {
                    terms.push((format!("A_{k}"), pair(k, X, X)?));
                    terms.push((format!("B_{k}"), pair(k, Y, Y)?));
                    terms.push((format!("C_{k}"), pair(k, Z, Z)?));
                }
                CouplingType::AppendixB => {
                    terms.push((format!("J_{k}"), pair(k, Z, Z)?));
                    terms.push((format!("L_{k}"), pair(k, Z, X)?));
                }
            }
        }
        Ok(terms)
    }

    /// Draws every coupling independently and uniformly from `[lo, hi]`.
    ///
    /// With `tie_exchange` set, the exchange model's `A_k` and `B_k` share one draw.
    pub fn sample_instance(
        &self,
        n: usize,
        seed: u64,
        range: (f64, f64),
        tie_exchange: bool,
    ) -> Result<HamiltonianInstance> {
        let (lo, hi) = range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "coupling range [{lo}, {hi}] must satisfy 0 < lo < hi"
            )));
        }
        let names = self.hamiltonian_terms(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms: Vec<Term> = Vec::with_capacity(names.len());
        for (name, op) in names {
            let value = match (tie_exchange, self.coupling, name.strip_prefix("B_")) {
                (true, CouplingType::Exchange, Some(k)) => {
                    let partner = format!("A_{k}");
                    terms
                        .iter()
                        .find(|t| t.name == partner)
                        .map(|t| t.value)
                        .ok_or_else(|| Error::Internal(format!("missing slot {partner}")))?
                }
                _ => rng.random_range(lo..=hi),
            };
            terms.push(Term { name, value, op });
        }
        HamiltonianInstance::new(*self, n, terms)
    }

    /// Instance with every coupling equal to `value`.
    pub fn uniform_instance(&self, n: usize, value: f64) -> Result<HamiltonianInstance> {
        let terms = self
            .hamiltonian_terms(n)?
            .into_iter()
            .map(|(name, op)| Term { name, value, op })
            .collect();
        HamiltonianInstance::new(*self, n, terms)
    }
}

impl fmt::Display for InteractionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.transverse_field {
            write!(f, "{}+field", self.coupling)
        } else {
            write!(f, "{}", self.coupling)
        }
    }
}

/// Symmetric 0/1 matrix; a diagonal 1 marks a single-qubit energy term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    entries: Vec<Vec<u8>>,
}

impl AdjacencyMatrix {
    fn zeros(n: usize) -> Self {
        AdjacencyMatrix {
            entries: vec![vec![0; n]; n],
        }
    }

    fn single(self_loop: bool) -> Self {
        AdjacencyMatrix {
            entries: vec![vec![u8::from(self_loop)]],
        }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Entry at 1-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i - 1][j - 1]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..n).all(|j| self.entries[i][j] == self.entries[j][i]))
    }

    /// Connectivity over proper (off-diagonal) edges.
    pub fn is_connected(&self) -> bool {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (w, s) in seen.iter_mut().enumerate() {
                if w != v && self.entries[v][w] == 1 && !*s {
                    *s = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// One `theta_m S_m` term.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub value: f64,
    pub op: PauliString,
}

/// A model with concrete real parameter values for `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianInstance {
    model: InteractionModel,
    n_qubits: usize,
    terms: Vec<Term>,
}

impl HamiltonianInstance {
    /// Checks each term against the model's adjacency matrix.
    pub fn new(model: InteractionModel, n_qubits: usize, terms: Vec<Term>) -> Result<Self> {
        let adj = model.build_adjacency(n_qubits);
        for t in &terms {
            if t.op.n_sites() != n_qubits {
                return Err(Error::DimensionMismatch {
                    left: t.op.n_sites(),
                    right: n_qubits,
                });
            }
            if t.value == 0.0 || !t.value.is_finite() {
                return Err(Error::Config(format!(
                    "coupling {} must be finite and nonzero, got {}",
                    t.name, t.value
                )));
            }
            let ok = match t.op.support().as_slice() {
                [i] => adj.get(*i, *i) == 1,
                [i, j] => adj.get(*i, *j) == 1,
                _ => false,
            };
            if !ok {
                return Err(Error::Config(format!(
                    "term {} = {} does not match an edge of the {model} graph",
                    t.name, t.op
                )));
            }
        }
        Ok(HamiltonianInstance {
            model,
            n_qubits,
            terms,
        })
    }

    /// Instance without the adjacency check; zero couplings allowed. Test oracles only.
    #[doc(hidden)]
    pub fn unchecked(model: InteractionModel, n_qubits: usize, terms: Vec<Term>) -> Self {
        HamiltonianInstance {
            model,
            n_qubits,
            terms,
        }
    }

    pub fn model(&self) -> InteractionModel {
        self.model
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// The operator set Gamma.
    pub fn operators(&self) -> Vec<PauliString> {
        self.terms.iter().map(|t| t.op).collect()
    }

    /// Copy of the instance with every coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                value: t.value * factor,
                ..t.clone()
            })
            .collect();
        HamiltonianInstance {
            terms,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CouplingType::*;

    fn m(c: CouplingType, field: bool) -> InteractionModel {
        InteractionModel::new(c, field).unwrap()
    }

    fn render(terms: &[(String, PauliString)]) -> Vec<String> {
        terms.iter().map(|(n, p)| format!("{n}:{p}")).collect()
    }

    #[test]
    fn adjacency_examples() {
        let a = m(Ising, false).build_adjacency(3);
        assert_eq!(a.rows(), &[vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]);
        let b = m(Ising, true).build_adjacency(2);
        assert_eq!(b.rows(), &[vec![1, 1], vec![1, 1]]);
        for model in InteractionModel::catalog() {
            let one = model.build_adjacency(1);
            assert_eq!(one.rows(), &[vec![u8::from(model.transverse_field())]]);
        }
    }

    #[test]
    fn recursive_construction() {
        for model in InteractionModel::catalog() {
            for k in 1..=6 {
                let small = model.build_adjacency(k);
                let big = model.build_adjacency(k + 1);
                assert!(big.is_symmetric() && big.is_connected());
                for i in 1..=k {
                    for j in 1..=k {
                        assert_eq!(small.get(i, j), big.get(i, j));
                    }
                }
                for i in 1..=k + 1 {
                    let expect = if i == k {
                        1
                    } else if i == k + 1 {
                        u8::from(model.transverse_field())
                    } else {
                        0
                    };
                    assert_eq!(big.get(i, k + 1), expect);
                }
            }
        }
    }

    #[test]
    fn term_examples() {
        assert_eq!(
            render(&m(Ising, true).hamiltonian_terms(2).unwrap()),
            ["Omega_1:Z1", "Omega_2:Z2", "J_1:X1 X2"]
        );
        assert_eq!(
            render(&m(AppendixB, false).hamiltonian_terms(3).unwrap()),
            ["J_1:Z1 Z2", "L_1:Z1 X2", "J_2:Z2 Z3", "L_2:Z2 X3"]
        );
        assert_eq!(
            render(&m(Exchange, false).hamiltonian_terms(2).unwrap()),
            ["A_1:X1 X2", "B_1:Y1 Y2"]
        );
        assert!(m(Exchange, false).hamiltonian_terms(1).unwrap().is_empty());
        assert_eq!(m(Ising, true).hamiltonian_terms(1).unwrap().len(), 1);
    }

    #[test]
    fn term_counts_and_locality() {
        for n in 2..=8 {
            assert_eq!(m(Exchange, false).hamiltonian_terms(n).unwrap().len(), 2 * (n - 1));
            assert_eq!(m(Ising, true).hamiltonian_terms(n).unwrap().len(), 2 * n - 1);
            assert_eq!(m(Heisenberg, true).hamiltonian_terms(n).unwrap().len(), 4 * n - 3);
            for model in InteractionModel::catalog() {
                let adj = model.build_adjacency(n);
                for (_, p) in model.hamiltonian_terms(n).unwrap() {
                    assert!(p.weight() <= 2);
                    let s = p.support();
                    let (i, j) = (s[0], *s.last().unwrap());
                    assert_eq!(adj.get(i, j), 1);
                }
            }
        }
    }

    #[test]
    fn unknown_coupling_is_config_error() {
        assert!(matches!("dzyaloshinskii".parse::<CouplingType>(), Err(Error::Config(_))));
        assert!(InteractionModel::new(AppendixB, true).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_bounded() {
        let model = m(Exchange, false);
        let a = model.sample_instance(4, 7, (10.0, 100.0), true).unwrap();
        let b = model.sample_instance(4, 7, (10.0, 100.0), true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.terms().len(), 6);
        let mut per_edge: Vec<f64> = a.terms().chunks(2).map(|c| c[0].value).collect();
        for c in a.terms().chunks(2) {
            assert_eq!(c[0].value, c[1].value);
        }
        per_edge.dedup();
        assert_eq!(per_edge.len(), 3);
        assert!(a.terms().iter().all(|t| (10.0..=100.0).contains(&t.value)));
        let c = model.sample_instance(4, 8, (10.0, 100.0), true).unwrap();
        assert_ne!(a, c);
        let indep = model.sample_instance(4, 7, (10.0, 100.0), false).unwrap();
        assert!(indep.terms().chunks(2).any(|c| c[0].value != c[1].value));
    }

    #[test]
    fn degenerate_range_rejected() {
        let e = m(Exchange, false).sample_instance(2, 3, (50.0, 50.0), true);
        assert!(matches!(e, Err(Error::Config(_))));
        assert!(m(Exchange, false).sample_instance(2, 3, (0.0, 5.0), true).is_err());
    }

    #[test]
    fn heisenberg_field_parameter_count() {
        let inst = m(Heisenberg, true).sample_instance(3, 1, (10.0, 100.0), true).unwrap();
        assert_eq!(inst.terms().len(), m(Heisenberg, true).hamiltonian_terms(3).unwrap().len());
        assert_eq!(inst.terms().len(), 9);
    }

    #[test]
    fn off_graph_term_rejected() {
        let model = m(Exchange, false);
        let bad = Term {
            name: "far".into(),
            value: 1.0,
            op: PauliString::from_sparse(3, &[(1, Symbol::X), (3, Symbol::X)]).unwrap(),
        };
        assert!(HamiltonianInstance::new(model, 3, vec![bad]).is_err());
        let field = Term {
            name: "Omega_1".into(),
            value: 1.0,
            op: PauliString::single(3, 1, Symbol::Z).unwrap(),
        };
        assert!(HamiltonianInstance::new(model, 3, vec![field]).is_err());
    }
}
