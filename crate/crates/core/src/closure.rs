//! Accessible-set saturation, order tables `n(N)`, and their inversion `N = f(n)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::InteractionModel;
use crate::parallel::{map_indexed, Execution};
use crate::pauli::{PauliString, Symbol};
use crate::realization::{build_realization, minimality, InitialStateRecipe};

/// Default cap on accessible-set size before the closure aborts.
pub const DEFAULT_CLOSURE_CAP: usize = 1_000_000;

/// Seed of the reference instance used to evaluate generic model orders.
const REFERENCE_SEED: u64 = 0x5ee_d0f7_ab1e;

/// Explanation attached to non-invertible tables.
pub const NON_INVERTIBLE_REASON: &str =
    "the probe does not become correlated with every qubit, so the model order is not a \
     strictly increasing function of the qubit count and cannot be inverted";

/// Initial observables, each supported only on the probe (site 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet {
    elements: Vec<PauliString>,
}

impl ObservableSet {
    pub fn new(elements: Vec<PauliString>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidObservable("observable set is empty".into()));
        }
        for e in &elements {
            if e.support() != [1] {
                return Err(Error::InvalidObservable(format!(
                    "{e} is not a non-identity operator on the probe site"
                )));
            }
        }
        Ok(ObservableSet { elements })
    }

    /// `{P_1}` on an `n`-site chain.
    pub fn probe(n_sites: usize, symbol: Symbol) -> Result<Self> {
        if symbol == Symbol::I {
            return Err(Error::InvalidObservable("identity is not an observable".into()));
        }
        Self::new(vec![PauliString::single(n_sites, 1, symbol)?])
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }
}

/// Saturated operator set; element order is the coherent-vector coordinate order.
#[derive(Debug, Clone)]
pub struct AccessibleSet {
    elements: Vec<PauliString>,
    generation: Vec<usize>,
    index: HashMap<PauliString, usize>,
}

impl AccessibleSet {
    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    /// Iteration depth at which each element first appeared.
    pub fn generations(&self) -> &[usize] {
        &self.generation
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, p: &PauliString) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn n_sites(&self) -> usize {
        self.elements[0].n_sites()
    }

    /// True when one more commutation step with `gamma` adds nothing.
    pub fn is_closed_under(&self, gamma: &[PauliString]) -> bool {
        self.elements.iter().all(|g| {
            gamma
                .iter()
                .filter(|s| g.anticommutes(s))
                .all(|s| self.index.contains_key(&g.product(s).1))
        })
    }
}

/// Breadth-first saturation of `G0` under commutation with `gamma`.
///
/// Within a generation, elements appear in discovery order: parents in
/// coordinate order, then Hamiltonian terms in catalog order.
pub fn accessible_set(
    g0: &ObservableSet,
    gamma: &[PauliString],
    cap: usize,
) -> Result<AccessibleSet> {
    let n = g0.elements[0].n_sites();
    for p in g0.elements.iter().chain(gamma) {
        if p.n_sites() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: p.n_sites(),
            });
        }
    }
    // With no Hamiltonian terms at all the probe is the whole (static) system.
    if !gamma.is_empty() {
        for o in &g0.elements {
            if !gamma.iter().any(|s| o.anticommutes(s)) {
                return Err(Error::InvalidObservable(format!(
                    "{o} commutes with every Hamiltonian term"
                )));
            }
        }
    }

    saturate(&g0.elements, gamma, cap)
}

/// Saturates an arbitrary seed set of equal-size strings under `gamma`.
pub fn saturate(seed: &[PauliString], gamma: &[PauliString], cap: usize) -> Result<AccessibleSet> {
    let mut set = AccessibleSet {
        elements: Vec::new(),
        generation: Vec::new(),
        index: HashMap::new(),
    };
    for o in seed {
        if !set.index.contains_key(o) {
            set.index.insert(*o, set.elements.len());
            set.elements.push(*o);
            set.generation.push(0);
        }
    }
    let mut frontier = 0..set.elements.len();
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let start = set.elements.len();
        for k in frontier {
            let g = set.elements[k];
            for s in gamma {
                if !g.anticommutes(s) {
                    continue;
                }
                let (_, r) = s.product(&g);
                if set.index.contains_key(&r) {
                    continue;
                }
                if set.elements.len() >= cap {
                    return Err(Error::ResourceLimit(format!(
                        "accessible set exceeds the cap of {cap} elements"
                    )));
                }
                set.index.insert(r, set.elements.len());
                set.elements.push(r);
                set.generation.push(depth);
            }
        }
        frontier = start..set.elements.len();
    }
    Ok(set)
}

/// True iff every site carries a non-identity symbol in some element.
pub fn correlates_all_qubits(g: &AccessibleSet) -> bool {
    let covered = g.elements.iter().fold(0u64, |acc, p| {
        p.support().iter().fold(acc, |a, &s| a | 1 << (s - 1))
    });
    covered.count_ones() as usize == g.n_sites()
}

/// The triple that fixes the order-to-dimension map: probe observable,
/// interaction model, and initial-state recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemSpace {
    pub model: InteractionModel,
    pub probe: Symbol,
    pub recipe: InitialStateRecipe,
}

impl SystemSpace {
    /// Default probe for the model, prepared in its +1 eigenstate.
    pub fn new(model: InteractionModel) -> Self {
        Self::with_probe(model, model.default_probe())
    }

    pub fn with_probe(model: InteractionModel, probe: Symbol) -> Self {
        SystemSpace {
            model,
            probe,
            recipe: InitialStateRecipe::probe_eigenstate(probe),
        }
    }

    pub fn measured(&self, n_qubits: usize) -> Result<PauliString> {
        PauliString::single(n_qubits, 1, self.probe)
    }

    /// Accessible set for the `n`-qubit member of the family.
    pub fn accessible_set(&self, n_qubits: usize, cap: usize) -> Result<AccessibleSet> {
        let g0 = ObservableSet::probe(n_qubits, self.probe)?;
        let gamma: Vec<PauliString> = self
            .model
            .hamiltonian_terms(n_qubits)?
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        accessible_set(&g0, &gamma, cap)
    }
}

/// Limits applied while building table rows.
#[derive(Debug, Clone, Copy)]
pub struct TableLimits {
    pub closure_cap: usize,
    /// Largest accessible set for which a dense realization is built.
    pub realization_cap: usize,
}

impl Default for TableLimits {
    fn default() -> Self {
        TableLimits {
            closure_cap: DEFAULT_CLOSURE_CAP,
            realization_cap: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderRow {
    pub n_qubits: usize,
    pub accessible_size: usize,
    pub model_order: usize,
    pub rank_observability: usize,
    pub rank_controllability: usize,
    pub minimal: bool,
    pub correlates_all: bool,
}

/// Model order per qubit count for one system space.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTable {
    pub space: SystemSpace,
    pub rows: Vec<OrderRow>,
}

/// One row of the order table: closure, realization, and Kalman reduction.
pub fn order_row(space: &SystemSpace, n_qubits: usize, limits: TableLimits) -> Result<OrderRow> {
    let g = space.accessible_set(n_qubits, limits.closure_cap)?;
    if g.len() > limits.realization_cap {
        return Err(Error::ResourceLimit(format!(
            "N={n_qubits}: accessible set of {} elements exceeds the realization cap {}",
            g.len(),
            limits.realization_cap
        )));
    }
    let instance = space.model.sample_instance(
        n_qubits,
        REFERENCE_SEED ^ n_qubits as u64,
        crate::model::DEFAULT_COUPLING_RANGE,
        false,
    )?;
    let measured = space.measured(n_qubits)?;
    let real = build_realization(&instance, &g, &measured, &space.recipe)?;
    let report = minimality(&real);
    Ok(OrderRow {
        n_qubits,
        accessible_size: g.len(),
        model_order: report.transfer_degree,
        rank_observability: report.rank_observability,
        rank_controllability: report.rank_controllability,
        minimal: report.minimal,
        correlates_all: correlates_all_qubits(&g),
    })
}

/// Order table over `n_range`; rows computed independently per `N`.
pub fn order_table(
    space: &SystemSpace,
    n_range: std::ops::RangeInclusive<usize>,
    limits: TableLimits,
    exec: Execution,
) -> Result<OrderTable> {
    let ns: Vec<usize> = n_range.collect();
    if ns.is_empty() || ns[0] == 0 {
        return Err(Error::Config("order table needs a nonempty range of N >= 1".into()));
    }
    let rows = map_indexed(exec, ns.len(), |i| order_row(space, ns[i], limits))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderTable { space: *space, rows })
}

impl OrderTable {
    /// Builds rows from `N = 1` until one row's order exceeds `n_measured`
    /// (which, with a monotone table, brackets the answer) or `n_limit` is reached.
    pub fn bracketing(
        space: &SystemSpace,
        n_measured: usize,
        n_limit: usize,
        limits: TableLimits,
    ) -> Result<OrderTable> {
        let mut rows = Vec::new();
        for n in 1..=n_limit.max(1) {
            let row = order_row(space, n, limits)?;
            let done = row.model_order > n_measured;
            rows.push(row);
            if done {
                break;
            }
        }
        Ok(OrderTable { space: *space, rows })
    }

    /// Whether `N -> n` can be inverted: every row correlates all qubits and
    /// the orders are strictly increasing.
    pub fn check_invertible(&self) -> Result<()> {
        let all_correlated = self.rows.iter().all(|r| r.correlates_all);
        let increasing = self
            .rows
            .windows(2)
            .all(|w| w[1].n_qubits > w[0].n_qubits && w[1].model_order > w[0].model_order);
        if all_correlated && increasing {
            Ok(())
        } else {
            Err(Error::NonInvertible(format!(
                "{} (model {}, probe {:?})",
                NON_INVERTIBLE_REASON, self.space.model, self.space.probe
            )))
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,G,n,minimal,correlates_all\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n_qubits, r.accessible_size, r.model_order, r.minimal, r.correlates_all
            ));
        }
        out
    }
}

/// Recovered qubit count and Hilbert-space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionEstimate {
    pub n_qubits: usize,
    pub dimension: u128,
}

/// Inverts the table: the unique `N` whose model order equals `n_measured`.
pub fn invert_dimension(table: &OrderTable, n_measured: usize) -> Result<DimensionEstimate> {
    table.check_invertible()?;
    table
        .rows
        .iter()
        .find(|r| r.model_order == n_measured)
        .map(|r| DimensionEstimate {
            n_qubits: r.n_qubits,
            dimension: 1u128 << r.n_qubits,
        })
        .ok_or_else(|| {
            let known: Vec<String> = table
                .rows
                .iter()
                .map(|r| format!("N={}:n={}", r.n_qubits, r.model_order))
                .collect();
            Error::ModelMismatch(format!(
                "measured model order {n_measured} matches no row of the {} table [{}]",
                table.space.model,
                known.join(", ")
            ))
        })
}
