//! Finite chains of truth values and the "and" operations they carry.
//!
//! Values are chain indices: `0` is boolean false and `len - 1` is boolean
//! true. Labels only matter for presentation. An [`Algebra`] is a chain with a
//! validated conjunction table; its negation and residuated implication are
//! derived, never supplied.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AlgebraError, EnumerationError};
use crate::interval_algebra::Interval;

/// Index of a truth value on its chain.
pub type Value = usize;

/// Default largest chain accepted by [`enumerate_conj`].
pub const DEFAULT_ENUMERATION_CAP: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Chain {
    labels: Vec<String>,
}

impl Chain {
    pub fn new(labels: Vec<String>) -> Result<Self, AlgebraError> {
        if labels.len() < 2 {
            return Err(AlgebraError::ChainTooShort(labels.len()));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(AlgebraError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Chain { labels })
    }

    /// `0 < {prefix}1 < … < {prefix}{n-2} < 1`.
    pub fn standard(n: usize, prefix: &str) -> Self {
        assert!(n >= 2, "a chain needs at least two values");
        let labels = (0..n)
            .map(|i| match i {
                0 => "0".to_string(),
                i if i == n - 1 => "1".to_string(),
                i => format!("{prefix}{i}"),
            })
            .collect();
        Chain { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn top(&self) -> Value {
        self.labels.len() - 1
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: Value) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &str) -> Option<Value> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn negate(&self, v: Value) -> Value {
        self.labels.len() - 1 - v
    }
}

impl TryFrom<Vec<String>> for Chain {
    type Error = AlgebraError;

    fn try_from(labels: Vec<String>) -> Result<Self, Self::Error> {
        Chain::new(labels)
    }
}

impl From<Chain> for Vec<String> {
    fn from(chain: Chain) -> Self {
        chain.labels
    }
}

/// The unique involutive, order-reversing negation of an `n`-element chain.
pub fn negation(n: usize) -> Vec<Value> {
    (0..n).rev().collect()
}

/// Square conjunction table stored row-major; `get(i, j)` is `T(a_i, a_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Value>>", into = "Vec<Vec<Value>>")]
pub struct ConjTable {
    n: usize,
    entries: Vec<Value>,
}

impl ConjTable {
    /// Checks shape and index range only; use [`validate_conj`] for the axioms.
    pub fn from_rows(rows: Vec<Vec<Value>>) -> Result<Self, AlgebraError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(AlgebraError::DimensionMismatch { n, rows: n, cols: row.len() });
            }
            for (j, v) in row.into_iter().enumerate() {
                if v >= n {
                    return Err(AlgebraError::EntryOutOfRange { row: i, col: j, value: v });
                }
                entries.push(v);
            }
        }
        Ok(ConjTable { n, entries })
    }

    pub fn from_fn(n: usize, f: impl Fn(Value, Value) -> Value) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        ConjTable { n, entries }
    }

    /// The minimum ("Gödel") conjunction.
    pub fn min(n: usize) -> Self {
        ConjTable::from_fn(n, |a, b| a.min(b))
    }

    /// The finite Łukasiewicz conjunction `max(0, a + b - (n-1))`.
    pub fn lukasiewicz(n: usize) -> Self {
        ConjTable::from_fn(n, |a, b| (a + b).saturating_sub(n - 1))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: Value, b: Value) -> Value {
        self.entries[a * self.n + b]
    }

    pub fn rows(&self) -> Vec<Vec<Value>> {
        self.entries.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Number of differing entries; tables of different size differ everywhere.
    pub fn hamming(&self, other: &ConjTable) -> usize {
        if self.n != other.n {
            return self.entries.len().max(other.entries.len());
        }
        self.entries.iter().zip(&other.entries).filter(|(a, b)| a != b).count()
    }
}

impl TryFrom<Vec<Vec<Value>>> for ConjTable {
    type Error = AlgebraError;

    fn try_from(rows: Vec<Vec<Value>>) -> Result<Self, Self::Error> {
        ConjTable::from_rows(rows)
    }
}

impl From<ConjTable> for Vec<Vec<Value>> {
    fn from(t: ConjTable) -> Self {
        t.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axiom {
    /// `T(a,b) = T(b,a)`
    T1,
    /// `T(a,T(b,c)) = T(T(a,b),c)`
    T2,
    /// `T(0,a) = 0`
    T3,
    /// `T(1,a) = a`
    T4,
    /// `a <= b` implies `T(a,c) <= T(b,c)`
    T5,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::T1 => "T1 (commutativity)",
            Axiom::T2 => "T2 (associativity)",
            Axiom::T3 => "T3 (zero annihilates)",
            Axiom::T4 => "T4 (one is the unit)",
            Axiom::T5 => "T5 (monotonicity)",
        };
        f.write_str(name)
    }
}

/// First counterexample found for an axiom in a lexicographic scan.
///
/// Witness arities: T1 `(a,b)`, T2 `(a,b,c)`, T3 `(a)`, T4 `(a)`, T5 `(a,b,c)`
/// with `a <= b` and `T(a,c) > T(b,c)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, axiom: Axiom) -> Option<&Violation> {
        self.violations.iter().find(|v| v.axiom == axiom)
    }

    pub fn summary(&self) -> String {
        if self.passes() {
            return "nothing".to_string();
        }
        self.violations
            .iter()
            .map(|v| format!("{} at {:?}", v.axiom, v.witness))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Exhaustively checks T1–T5, reporting the first witness per violated axiom.
pub fn validate_conj(chain: &Chain, table: &ConjTable) -> Result<ValidationReport, AlgebraError> {
    let n = chain.len();
    if table.size() != n {
        return Err(AlgebraError::DimensionMismatch { n, rows: table.size(), cols: table.size() });
    }
    let t = |a, b| table.get(a, b);
    let top = n - 1;
    let mut violations = Vec::new();

    let t1 = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .find(|&(a, b)| t(a, b) != t(b, a));
    if let Some((a, b)) = t1 {
        violations.push(Violation { axiom: Axiom::T1, witness: vec![a, b] });
    }

    let mut t2 = None;
    'assoc: for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if t(a, t(b, c)) != t(t(a, b), c) {
                    t2 = Some(vec![a, b, c]);
                    break 'assoc;
                }
            }
        }
    }
    if let Some(witness) = t2 {
        violations.push(Violation { axiom: Axiom::T2, witness });
    }

    if let Some(a) = (0..n).find(|&a| t(0, a) != 0) {
        violations.push(Violation { axiom: Axiom::T3, witness: vec![a] });
    }
    if let Some(a) = (0..n).find(|&a| t(top, a) != a) {
        violations.push(Violation { axiom: Axiom::T4, witness: vec![a] });
    }

    let mut t5 = None;
    'mono: for a in 0..n {
        for b in a..n {
            for c in 0..n {
                if t(a, c) > t(b, c) {
                    t5 = Some(vec![a, b, c]);
                    break 'mono;
                }
            }
        }
    }
    if let Some(witness) = t5 {
        violations.push(Violation { axiom: Axiom::T5, witness });
    }

    Ok(ValidationReport { violations })
}

/// A truth-value algebra: a chain with a validated "and" operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AlgebraRepr", into = "AlgebraRepr")]
pub struct Algebra {
    chain: Chain,
    conj: ConjTable,
    neg: Vec<Value>,
    imp: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraRepr {
    chain: Chain,
    conj: ConjTable,
}

impl TryFrom<AlgebraRepr> for Algebra {
    type Error = AlgebraError;

    fn try_from(r: AlgebraRepr) -> Result<Self, Self::Error> {
        Algebra::new(r.chain, r.conj)
    }
}

impl From<Algebra> for AlgebraRepr {
    fn from(a: Algebra) -> Self {
        AlgebraRepr { chain: a.chain, conj: a.conj }
    }
}

impl Algebra {
    pub fn new(chain: Chain, conj: ConjTable) -> Result<Self, AlgebraError> {
        let report = validate_conj(&chain, &conj)?;
        if !report.passes() {
            return Err(AlgebraError::AxiomViolation(report));
        }
        let n = chain.len();
        let neg = negation(n);
        let mut imp = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                // T(a,0) = 0 <= b, so the maximum always exists.
                let c = (0..n).rev().find(|&c| conj.get(a, c) <= b).unwrap_or(0);
                imp.push(c);
            }
        }
        Ok(Algebra { chain, conj, neg, imp })
    }

    /// Min-conjunction algebra on the standard `n`-chain.
    pub fn min(n: usize) -> Self {
        Algebra::new(Chain::standard(n, "a"), ConjTable::min(n)).expect("min is a t-norm")
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn conj_table(&self) -> &ConjTable {
        &self.conj
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn top(&self) -> Value {
        self.chain.top()
    }

    #[inline]
    pub fn conj(&self, a: Value, b: Value) -> Value {
        self.conj.get(a, b)
    }

    #[inline]
    pub fn neg(&self, a: Value) -> Value {
        self.neg[a]
    }

    /// Residuated implication `max{c : T(a,c) <= b}`.
    #[inline]
    pub fn residuum(&self, a: Value, b: Value) -> Value {
        self.imp[a * self.len() + b]
    }

    /// De Morgan dual of the conjunction.
    pub fn disjunction(&self, a: Value, b: Value) -> Value {
        self.neg(self.conj(self.neg(a), self.neg(b)))
    }

    /// Modus ponens weight for a premise of degree `a` and a rule of degree `b`:
    /// the set `{c : I(a,c) = b}` of conclusion degrees compatible with both.
    ///
    /// `None` when `a` and `b` are inconsistent. When `b` is top this is
    /// `[a, 1]`; otherwise its least element is always `T(a,b)`, and it is the
    /// point `T(a,b)` whenever exactly one conclusion degree fits.
    pub fn mp_interval(&self, a: Value, b: Value) -> Option<Interval> {
        // I(a,·) is non-decreasing, so the preimage of b is contiguous.
        let mut hits = (0..self.len()).filter(|&c| self.residuum(a, c) == b);
        let lo = hits.next()?;
        let hi = hits.last().unwrap_or(lo);
        Some(Interval::new_unchecked(lo, hi))
    }

    pub fn sign_partition(&self) -> SignPartition {
        sign_partition(self.len())
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.chain.labels().iter().map(|l| l.len()).max().unwrap_or(1).max(1);
        write!(f, "{:>width$} |", "T")?;
        for l in self.chain.labels() {
            write!(f, " {l:>width$}")?;
        }
        writeln!(f)?;
        for a in 0..self.len() {
            write!(f, "{:>width$} |", self.chain.label(a))?;
            for b in 0..self.len() {
                write!(f, " {:>width$}", self.chain.label(self.conj(a, b)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Negative, fixed and positive elements with respect to the chain negation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPartition {
    pub negatives: Vec<Value>,
    pub fixed: Vec<Value>,
    pub positives: Vec<Value>,
}

pub fn sign_partition(n: usize) -> SignPartition {
    let mut p = SignPartition { negatives: vec![], fixed: vec![], positives: vec![] };
    for x in 0..n {
        let nx = n - 1 - x;
        match x.cmp(&nx) {
            std::cmp::Ordering::Less => p.negatives.push(x),
            std::cmp::Ordering::Equal => p.fixed.push(x),
            std::cmp::Ordering::Greater => p.positives.push(x),
        }
    }
    p
}

/// Lazily enumerates every conjunction table on an `n`-element chain.
///
/// Tables come out in lexicographic order of their free upper-triangle
/// entries (row-major, rows and columns `1..n-1`). Refuses chains longer
/// than `cap`.
pub fn enumerate_conj(n: usize, cap: usize) -> Result<ConjEnumerator, EnumerationError> {
    if n > cap {
        return Err(EnumerationError::CapExceeded { n, cap });
    }
    Ok(ConjEnumerator::new(n))
}

/// Convenience: collect every table for the chain with the default cap.
pub fn all_conj_tables(n: usize) -> Result<Vec<ConjTable>, EnumerationError> {
    Ok(enumerate_conj(n, DEFAULT_ENUMERATION_CAP)?.collect())
}

/// Every algebra on the standard `n`-chain, in enumeration order.
pub fn all_algebras(n: usize, prefix: &str) -> Result<Vec<Algebra>, EnumerationError> {
    let chain = Chain::standard(n, prefix);
    Ok(all_conj_tables(n)?
        .into_iter()
        .map(|t| Algebra::new(chain.clone(), t).expect("enumerated tables are valid"))
        .collect())
}

const UNSET: usize = usize::MAX;

/// Depth-first search over the free cells with monotonicity bounds and
/// associativity pruning on every fully-known triple.
pub struct ConjEnumerator {
    n: usize,
    cells: Vec<(usize, usize)>,
    table: Vec<usize>,
    next_value: Vec<Option<usize>>,
    depth: usize,
    finished: bool,
}

impl ConjEnumerator {
    fn new(n: usize) -> Self {
        let mut table = vec![UNSET; n * n];
        for a in 0..n {
            table[a] = 0;
            table[a * n] = 0;
            table[(n - 1) * n + a] = a;
            table[a * n + n - 1] = a;
        }
        let interior = 1..n.saturating_sub(1);
        let cells: Vec<_> = interior
            .clone()
            .flat_map(|i| (i..n - 1).map(move |j| (i, j)))
            .collect();
        let next_value = vec![None; cells.len() + 1];
        ConjEnumerator { n, cells, table, next_value, depth: 0, finished: false }
    }

    fn get(&self, a: usize, b: usize) -> usize {
        self.table[a * self.n + b]
    }

    fn set(&mut self, a: usize, b: usize, v: usize) {
        self.table[a * self.n + b] = v;
        self.table[b * self.n + a] = v;
    }

    fn bounds(&self, i: usize, j: usize) -> (usize, usize) {
        let above = self.get(i - 1, j);
        let left = self.get(i, j - 1);
        (above.max(left), i.min(j))
    }

    fn associative_so_far(&self) -> bool {
        let n = self.n;
        for a in 1..n - 1 {
            for b in 1..n - 1 {
                let ab = self.get(a, b);
                if ab == UNSET {
                    continue;
                }
                for c in 1..n - 1 {
                    let bc = self.get(b, c);
                    if bc == UNSET {
                        continue;
                    }
                    let left = self.get(a, bc);
                    let right = self.get(ab, c);
                    if left != UNSET && right != UNSET && left != right {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn snapshot(&self) -> ConjTable {
        ConjTable { n: self.n, entries: self.table.clone() }
    }

    /// Step back to the previous cell, clearing the current one.
    fn retreat(&mut self) {
        if self.depth < self.cells.len() {
            let (i, j) = self.cells[self.depth];
            self.set(i, j, UNSET);
        }
        self.next_value[self.depth] = None;
        if self.depth == 0 {
            self.finished = true;
        } else {
            self.depth -= 1;
            let (i, j) = self.cells[self.depth];
            let current = self.get(i, j);
            self.next_value[self.depth] = Some(current + 1);
        }
    }
}

impl Iterator for ConjEnumerator {
    type Item = ConjTable;

    fn next(&mut self) -> Option<ConjTable> {
        while !self.finished {
            if self.depth == self.cells.len() {
                let out = self.snapshot();
                self.retreat();
                return Some(out);
            }
            let (i, j) = self.cells[self.depth];
            let (lo, hi) = self.bounds(i, j);
            let v = self.next_value[self.depth].unwrap_or(lo).max(lo);
            if v > hi {
                self.retreat();
                continue;
            }
            self.set(i, j, v);
            if self.associative_so_far() {
                self.depth += 1;
                self.next_value[self.depth] = None;
            } else {
                self.next_value[self.depth] = Some(v + 1);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn luk4() -> Algebra {
        let t = ConjTable::from_rows(vec![
            vec![0, 0, 0, 0],
            vec![0, 0, 0, 1],
            vec![0, 0, 1, 2],
            vec![0, 1, 2, 3],
        ])
        .unwrap();
        Algebra::new(Chain::standard(4, "a"), t).unwrap()
    }

    /// Independent oracle: all symmetric tables with T3/T4 rows fixed,
    /// filtered by the plain axiom checker.
    fn brute_force_count(n: usize) -> usize {
        let chain = Chain::standard(n, "a");
        let free: Vec<(usize, usize)> =
            (1..n - 1).flat_map(|i| (i..n - 1).map(move |j| (i, j))).collect();
        let total = n.pow(free.len() as u32);
        let mut count = 0;
        for code in 0..total {
            let mut c = code;
            let mut rows = vec![vec![0; n]; n];
            for a in 0..n {
                rows[n - 1][a] = a;
                rows[a][n - 1] = a;
            }
            for &(i, j) in &free {
                rows[i][j] = c % n;
                rows[j][i] = c % n;
                c /= n;
            }
            let t = ConjTable::from_rows(rows).unwrap();
            if validate_conj(&chain, &t).unwrap().passes() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn negation_examples() {
        assert_eq!(negation(4), vec![3, 2, 1, 0]);
        assert_eq!(negation(2), vec![1, 0]);
        assert_eq!(negation(5)[2], 2);
    }

    #[test]
    fn chain_rejects_bad_labels() {
        assert_eq!(Chain::new(vec!["0".into()]), Err(AlgebraError::ChainTooShort(1)));
        assert!(matches!(
            Chain::new(vec!["0".into(), "x".into(), "x".into()]),
            Err(AlgebraError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn luk4_and_min_validate() {
        assert!(validate_conj(luk4().chain(), luk4().conj_table()).unwrap().passes());
        for n in 2..8 {
            let chain = Chain::standard(n, "a");
            assert!(validate_conj(&chain, &ConjTable::min(n)).unwrap().passes());
            assert!(validate_conj(&chain, &ConjTable::lukasiewicz(n)).unwrap().passes());
        }
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let chain = Chain::standard(4, "a");
        assert!(matches!(
            validate_conj(&chain, &ConjTable::min(3)),
            Err(AlgebraError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ConjTable::from_rows(vec![vec![0, 0], vec![0]]),
            Err(AlgebraError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ConjTable::from_rows(vec![vec![0, 0], vec![0, 2]]),
            Err(AlgebraError::EntryOutOfRange { row: 1, col: 1, value: 2 })
        ));
    }

    #[test]
    fn associativity_violation_has_lexicographic_witness() {
        // The Lukasiewicz table with T(a1,a2) raised to a1: a1·(a2·a2) = 0 but (a1·a2)·a2 = a1.
        let mut rows = luk4().conj_table().rows();
        rows[1][2] = 1;
        rows[2][1] = 1;
        let t = ConjTable::from_rows(rows).unwrap();
        let report = validate_conj(&Chain::standard(4, "a"), &t).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = report.violates(Axiom::T2).unwrap();
        // Lexicographic brute force over (a,b,c).
        let tt = |a: usize, b: usize| t.get(a, b);
        let first = (0..4)
            .flat_map(|a| (0..4).flat_map(move |b| (0..4).map(move |c| (a, b, c))))
            .find(|&(a, b, c)| tt(a, tt(b, c)) != tt(tt(a, b), c))
            .unwrap();
        assert_eq!(v.witness, vec![first.0, first.1, first.2]);
        assert_eq!(v.witness, vec![1, 2, 2]);
    }

    #[test]
    fn idempotent_a2_variant_of_luk4_is_still_a_tnorm() {
        let mut rows = luk4().conj_table().rows();
        rows[2][2] = 2;
        let t = ConjTable::from_rows(rows).unwrap();
        assert!(validate_conj(&Chain::standard(4, "a"), &t).unwrap().passes());
    }

    #[test]
    fn other_axiom_witnesses() {
        let chain = Chain::standard(3, "a");
        let t = ConjTable::from_rows(vec![vec![0, 1, 0], vec![0, 1, 1], vec![0, 1, 2]]).unwrap();
        let r = validate_conj(&chain, &t).unwrap();
        assert_eq!(r.violates(Axiom::T1).unwrap().witness, vec![0, 1]);
        assert_eq!(r.violates(Axiom::T3).unwrap().witness, vec![1]);
        assert!(r.violates(Axiom::T4).is_none());
        let t = ConjTable::from_rows(vec![vec![0, 0, 0], vec![0, 0, 0], vec![0, 0, 1]]).unwrap();
        let r = validate_conj(&chain, &t).unwrap();
        assert_eq!(r.violates(Axiom::T4).unwrap().witness, vec![1]);
    }

    #[test]
    fn residuum_examples() {
        let a = luk4();
        for x in 0..4 {
            for y in x..4 {
                assert_eq!(a.residuum(x, y), 3);
            }
        }
        assert_eq!(a.residuum(2, 1), 2);
        assert_eq!(a.residuum(2, 0), 1);
    }

    #[test]
    fn mp_interval_examples() {
        let a = luk4();
        assert_eq!(a.mp_interval(2, 0), None);
        assert_eq!(a.mp_interval(2, 1), Some(Interval::point(0)));
        for x in 0..4 {
            assert_eq!(a.mp_interval(x, 3), Some(Interval::new(x, 3).unwrap()));
        }
    }

    #[test]
    fn disjunction_examples() {
        let a = luk4();
        for x in 0..4 {
            assert_eq!(a.disjunction(0, x), x);
            assert_eq!(a.disjunction(3, x), 3);
        }
        assert_eq!(a.disjunction(1, 2), 3);
    }

    #[test]
    fn sign_partition_examples() {
        let p = sign_partition(4);
        assert_eq!((p.negatives, p.fixed, p.positives), (vec![0, 1], vec![], vec![2, 3]));
        let p = sign_partition(5);
        assert_eq!(p.fixed, vec![2]);
        let p = sign_partition(2);
        assert_eq!((p.negatives, p.positives), (vec![0], vec![1]));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for n in 2..=5 {
            let tables: Vec<_> = enumerate_conj(n, 9).unwrap().collect();
            assert_eq!(tables.len(), brute_force_count(n), "n = {n}");
            let unique: HashSet<_> = tables.iter().cloned().collect();
            assert_eq!(unique.len(), tables.len());
            let chain = Chain::standard(n, "a");
            assert!(tables.iter().all(|t| validate_conj(&chain, t).unwrap().passes()));
        }
    }

    #[test]
    fn enumeration_small_counts_and_members() {
        assert_eq!(enumerate_conj(2, 9).unwrap().count(), 1);
        let three: Vec<_> = enumerate_conj(3, 9).unwrap().collect();
        assert_eq!(three.len(), 2);
        assert_eq!(three[0].get(1, 1), 0);
        assert_eq!(three[1].get(1, 1), 1);
        let four: Vec<_> = enumerate_conj(4, 9).unwrap().collect();
        assert!(four.contains(&ConjTable::min(4)));
        assert!(four.contains(luk4().conj_table()));
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let tables: Vec<_> = enumerate_conj(5, 9).unwrap().collect();
        let key = |t: &ConjTable| -> Vec<usize> {
            (1..4).flat_map(|i| (i..4).map(move |j| (i, j))).map(|(i, j)| t.get(i, j)).collect()
        };
        for w in tables.windows(2) {
            assert!(key(&w[0]) < key(&w[1]));
        }
    }

    #[test]
    fn enumeration_cap() {
        assert_eq!(
            enumerate_conj(10, 9).err(),
            Some(EnumerationError::CapExceeded { n: 10, cap: 9 })
        );
        assert!(enumerate_conj(10, 10).is_ok());
    }

    #[test]
    fn residuation_and_disjunction_laws_on_every_small_algebra() {
        for n in 2..=5 {
            for alg in all_algebras(n, "a").unwrap() {
                for a in 0..n {
                    for b in 0..n {
                        let i = alg.residuum(a, b);
                        assert!(alg.conj(a, i) <= b);
                        assert!((i + 1..n).all(|c| alg.conj(a, c) > b));
                        let image: Vec<_> = (0..n).map(|c| alg.residuum(a, c)).collect();
                        assert_eq!(alg.mp_interval(a, b).is_some(), image.contains(&b));
                        if let Some(mp) = alg.mp_interval(a, b) {
                            assert_eq!(mp.lo(), alg.conj(a, b));
                        }
                        assert_eq!(alg.disjunction(a, b), alg.disjunction(b, a));
                        for c in 0..n {
                            assert_eq!(
                                alg.disjunction(a, alg.disjunction(b, c)),
                                alg.disjunction(alg.disjunction(a, b), c)
                            );
                        }
                    }
                    assert_eq!(alg.disjunction(a, 0), a);
                    assert_eq!(alg.neg(alg.neg(a)), a);
                }
            }
        }
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn negation_is_an_order_reversing_involution(n in 2usize..40) {
            let neg = negation(n);
            for a in 0..n {
                prop_assert_eq!(neg[neg[a]], a);
                if a + 1 < n {
                    prop_assert!(neg[a] > neg[a + 1]);
                }
            }
            let p = sign_partition(n);
            prop_assert!(p.fixed.len() <= 1);
            prop_assert_eq!(p.fixed.is_empty(), n % 2 == 0);
            let mapped: Vec<_> = p.negatives.iter().rev().map(|&x| neg[x]).collect();
            prop_assert_eq!(mapped, p.positives);
        }
    }
}
