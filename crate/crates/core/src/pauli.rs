//! Exact algebra of N-qubit Pauli strings.
//!
//! Strings are packed into two 64-bit masks (`x` and `z` bits per site), so a
//! string is `Copy`, hashable, and its commutation parity is a popcount.
//! Site 1 is the probe and the most significant tensor factor.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported chain length for the packed encoding.
pub const MAX_SITES: usize = 64;

/// Default size limit for dense matrix materialization.
pub const DEFAULT_DENSE_LIMIT: usize = 12;

/// Single-site Pauli symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    I,
    X,
    Y,
    Z,
}

impl Symbol {
    fn bits(self) -> (bool, bool) {
        match self {
            Symbol::I => (false, false),
            Symbol::X => (true, false),
            Symbol::Y => (true, true),
            Symbol::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Symbol::I,
            (true, false) => Symbol::X,
            (true, true) => Symbol::Y,
            (false, true) => Symbol::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::I => 'I',
            Symbol::X => 'X',
            Symbol::Y => 'Y',
            Symbol::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Symbol::I),
            'X' => Some(Symbol::X),
            'Y' => Some(Symbol::Y),
            'Z' => Some(Symbol::Z),
            _ => None,
        }
    }
}

/// A power of `i`: the phases `{1, i, -1, -i}` of the Pauli group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor product of single-site Pauli symbols, with no phase attached.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_sites: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    /// The all-identity string on `n_sites` qubits.
    pub fn identity(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        Ok(PauliString {
            n_sites: n_sites as u8,
            x: 0,
            z: 0,
        })
    }

    pub fn from_symbols(symbols: &[Symbol]) -> Result<Self> {
        check_sites(symbols.len())?;
        let mut p = PauliString {
            n_sites: symbols.len() as u8,
            x: 0,
            z: 0,
        };
        for (k, s) in symbols.iter().enumerate() {
            p.set(k, *s);
        }
        Ok(p)
    }

    /// Builds a string from `(site, symbol)` pairs with 1-based site indices.
    pub fn from_sparse(n_sites: usize, ops: &[(usize, Symbol)]) -> Result<Self> {
        let mut p = Self::identity(n_sites)?;
        for &(site, s) in ops {
            if site == 0 || site > n_sites {
                return Err(Error::Config(format!(
                    "site {site} out of range 1..={n_sites}"
                )));
            }
            p.set(site - 1, s);
        }
        Ok(p)
    }

    /// Single-site operator on a 1-based site.
    pub fn single(n_sites: usize, site: usize, s: Symbol) -> Result<Self> {
        Self::from_sparse(n_sites, &[(site, s)])
    }

    /// Parses the canonical `"X1 Z3"` rendering; `"I"` or an empty string is the identity.
    pub fn parse(text: &str, n_sites: usize) -> Result<Self> {
        let mut ops = Vec::new();
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "I" {
            return Self::identity(n_sites);
        }
        for tok in trimmed.split_whitespace() {
            let mut chars = tok.chars();
            let sym = chars
                .next()
                .and_then(Symbol::from_char)
                .ok_or_else(|| Error::Parse(format!("bad Pauli token '{tok}'")))?;
            let site: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::Parse(format!("bad site index in '{tok}'")))?;
            if ops.iter().any(|&(s, _)| s == site) {
                return Err(Error::Parse(format!("site {site} repeated in '{text}'")));
            }
            ops.push((site, sym));
        }
        Self::from_sparse(n_sites, &ops)
    }

    fn set(&mut self, k: usize, s: Symbol) {
        let (xb, zb) = s.bits();
        let m = 1u64 << k;
        self.x = (self.x & !m) | if xb { m } else { 0 };
        self.z = (self.z & !m) | if zb { m } else { 0 };
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    /// Symbol at 0-based position `k`.
    pub fn symbol(&self, k: usize) -> Symbol {
        let m = 1u64 << k;
        Symbol::from_bits(self.x & m != 0, self.z & m != 0)
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        (0..self.n_sites()).map(|k| self.symbol(k)).collect()
    }

    fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    /// 1-based indices of non-identity sites.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_sites())
            .filter(|&k| self.support_mask() >> k & 1 == 1)
            .map(|k| k + 1)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(Error::DimensionMismatch {
                left: self.n_sites(),
                right: other.n_sites(),
            });
        }
        Ok(())
    }

    /// True when the two strings anticommute (odd number of clashing sites).
    ///
    /// Sizes are assumed equal; use [`PauliString::commutator`] for a checked version.
    pub fn anticommutes(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }

    /// Unchecked product `self * other` as `(phase, string)`.
    pub(crate) fn product(&self, other: &Self) -> (Phase, PauliString) {
        // With P = i^{|x&z|} X^x Z^z, moving Z^{z1} past X^{x2} costs (-1)^{|z1&x2|}.
        let r = PauliString {
            n_sites: self.n_sites,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        let power = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4
            - r.y_count() % 4;
        (Phase::from_power(power), r)
    }

    /// Pauli-group product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<ScaledPauli> {
        self.check_same_size(other)?;
        let (phase, r) = self.product(other);
        Ok(ScaledPauli {
            coefficient: phase.to_complex(),
            string: r,
        })
    }

    /// `[self, other]` collapsed to one scaled string, or `None` when they commute.
    pub fn commutator(&self, other: &Self) -> Result<Option<ScaledPauli>> {
        self.check_same_size(other)?;
        if !self.anticommutes(other) {
            return Ok(None);
        }
        let (phase, r) = self.product(other);
        Ok(Some(ScaledPauli {
            coefficient: phase.to_complex() * 2.0,
            string: r,
        }))
    }

    /// Dense `2^n x 2^n` matrix, site 1 as the leftmost Kronecker factor.
    pub fn dense_matrix(&self, limit: usize) -> Result<DMatrix<Complex64>> {
        let n = self.n_sites();
        if n > limit {
            return Err(Error::ResourceLimit(format!(
                "dense matrix for {n} sites exceeds the {limit}-site limit"
            )));
        }
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        // Each column has exactly one nonzero entry: row = col ^ xmask(bit-reversed).
        for col in 0..dim {
            let mut row = col;
            let mut phase = Phase::ONE;
            for k in 0..n {
                let bit_pos = n - 1 - k;
                let b = (col >> bit_pos) & 1;
                match self.symbol(k) {
                    Symbol::I => {}
                    Symbol::X => row ^= 1 << bit_pos,
                    Symbol::Z => {
                        if b == 1 {
                            phase = phase * Phase::MINUS_ONE;
                        }
                    }
                    Symbol::Y => {
                        row ^= 1 << bit_pos;
                        // Y|0> = i|1>, Y|1> = -i|0>
                        phase = phase * if b == 0 { Phase::I } else { Phase::MINUS_I };
                    }
                }
            }
            m[(row, col)] = phase.to_complex();
        }
        Ok(m)
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::Config(format!(
            "site count {n_sites} outside 1..={MAX_SITES}"
        )));
    }
    Ok(())
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_sites
            .cmp(&other.n_sites)
            .then_with(|| self.symbols().cmp(&other.symbols()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for k in 0..self.n_sites() {
            let s = self.symbol(k);
            if s != Symbol::I {
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}{}", s.as_char(), k + 1)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString[{}]({})", self.n_sites, self)
    }
}

/// A Pauli string with a complex coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPauli {
    pub coefficient: Complex64,
    pub string: PauliString,
}
