//! Morphisms and quasi-morphisms between truth-value algebras.
//!
//! A [`Renaming`] sends each source value to an interval of the target chain.
//! It is a quasi-morphism when it is monotone, keeps `0`, commutes with the
//! negations exactly and sends conjunctions into the lifted target conjunction.
//! Point-valued quasi-morphisms are morphisms.

use serde::{Deserialize, Serialize};

use crate::chain_algebra::{negation, sign_partition, Algebra, Chain, ConjTable, Value};
use crate::error::MorphismError;
use crate::interval_algebra::Interval;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Renaming {
    images: Vec<Interval>,
}

impl Renaming {
    pub fn new(images: Vec<Interval>) -> Self {
        Renaming { images }
    }

    pub fn from_points(map: &[Value]) -> Self {
        Renaming { images: map.iter().map(|&v| Interval::point(v)).collect() }
    }

    pub fn identity(n: usize) -> Self {
        Renaming::from_points(&(0..n).collect::<Vec<_>>())
    }

    pub fn images(&self) -> &[Interval] {
        &self.images
    }

    pub fn image(&self, v: Value) -> Interval {
        self.images[v]
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_pointwise(&self) -> bool {
        self.images.iter().all(Interval::is_point)
    }

    /// Sum of image widths.
    pub fn imprecision(&self) -> usize {
        self.images.iter().map(Interval::width).sum()
    }

    pub fn as_points(&self) -> Option<Vec<Value>> {
        self.is_pointwise().then(|| self.images.iter().map(|i| i.lo()).collect())
    }

    /// Extension to interval weights: `[lo f(lo), hi f(hi)]`.
    pub fn hull(&self, v: Interval) -> Interval {
        Interval::new(self.images[v.lo()].lo(), self.images[v.hi()].hi())
            .expect("monotone renaming keeps endpoints ordered")
    }

    /// Checks totality against a source of `n` values and a target of `m`.
    pub fn check_shape(&self, n: usize, m: usize) -> Result<(), MorphismError> {
        if self.images.len() != n {
            return Err(MorphismError::NotTotal { expected: n, got: self.images.len() });
        }
        for (value, i) in self.images.iter().enumerate() {
            if !i.fits(m) {
                return Err(MorphismError::BadImage { value, lo: i.lo(), hi: i.hi(), len: m });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum QmViolation {
    /// `x <= y` but `f(x)` is not componentwise below `f(y)`.
    NotMonotone { x: Value, y: Value },
    ZeroNotPreserved { image: Interval },
    /// `f(N(x)) != N*(f(x))`
    NegationNotPreserved { x: Value },
    /// `f(T(x,y))` is not contained in `T*(f(x), f(y))`.
    ConjunctionNotContained { x: Value, y: Value },
}

impl QmViolation {
    pub fn condition(&self) -> u8 {
        match self {
            QmViolation::NotMonotone { .. } => 1,
            QmViolation::ZeroNotPreserved { .. } => 2,
            QmViolation::NegationNotPreserved { .. } => 3,
            QmViolation::ConjunctionNotContained { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QmReport {
    pub violations: Vec<QmViolation>,
    /// Pairs where `f(T(x,y)) <=* T*(f(x),f(y))` fails; diagnostic only.
    pub le_star_conjunction_failures: Vec<(Value, Value)>,
    /// `f(1) = 1`, implied by conditions 2 and 3.
    pub top_preserved: bool,
}

impl QmReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fails_condition(&self, c: u8) -> bool {
        self.violations.iter().any(|v| v.condition() == c)
    }
}

pub fn is_quasi_morphism(a: &Algebra, b: &Algebra, f: &Renaming) -> Result<QmReport, MorphismError> {
    f.check_shape(a.len(), b.len())?;
    let n = a.len();
    let mut report = QmReport::default();
    for x in 0..n {
        for y in x + 1..n {
            if !f.image(x).leq_componentwise(&f.image(y)) {
                report.violations.push(QmViolation::NotMonotone { x, y });
            }
        }
    }
    if f.image(0) != Interval::point(0) {
        report.violations.push(QmViolation::ZeroNotPreserved { image: f.image(0) });
    }
    report.violations.extend(negation_violations(a, b, f));
    for x in 0..n {
        for y in x..n {
            let lhs = f.image(a.conj(x, y));
            let rhs = b.conj_star(f.image(x), f.image(y));
            if !lhs.is_subset_of(&rhs) {
                report.violations.push(QmViolation::ConjunctionNotContained { x, y });
            }
            if !lhs.leq_star(&rhs) {
                report.le_star_conjunction_failures.push((x, y));
            }
        }
    }
    report.top_preserved = f.image(a.top()) == Interval::point(b.top());
    Ok(report)
}

fn negation_violations<'a>(
    a: &'a Algebra,
    b: &'a Algebra,
    f: &'a Renaming,
) -> impl Iterator<Item = QmViolation> + 'a {
    (0..a.len())
        .filter(move |&x| f.image(a.neg(x)) != b.neg_star(f.image(x)))
        .map(|x| QmViolation::NegationNotPreserved { x })
}

/// Only conditions 2 and 3, which do not involve either conjunction.
pub fn is_negation_quasi_morphism(n: usize, m: usize, f: &Renaming) -> bool {
    if f.check_shape(n, m).is_err() || f.image(0) != Interval::point(0) {
        return false;
    }
    let (na, nb) = (negation(n), negation(m));
    (0..n).all(|x| {
        let fx = f.image(x);
        f.image(na[x]) == Interval::new_unchecked(nb[fx.hi()], nb[fx.lo()])
    })
}

/// A quasi-morphism all of whose images are points.
pub fn is_morphism(a: &Algebra, b: &Algebra, f: &Renaming) -> Result<bool, MorphismError> {
    Ok(is_quasi_morphism(a, b, f)?.passes() && f.is_pointwise())
}

/// Every order-preserving value map `A_n -> B_m` commuting with the negations
/// and fixing `0`, in lexicographic order of the images of the negative elements.
pub fn negation_morphisms(n: usize, m: usize) -> Vec<Vec<Value>> {
    let (sa, sb) = (sign_partition(n), sign_partition(m));
    if !sa.fixed.is_empty() && sb.fixed.is_empty() {
        return vec![];
    }
    let mut codomain = sb.negatives.clone();
    codomain.extend(&sb.fixed);
    let mut out = vec![];
    let mut partial = vec![0usize];
    extend_negatives(&sa.negatives, &codomain, &mut partial, &mut |f1| {
        let mut f = vec![0; n];
        for (&x, &y) in sa.negatives.iter().zip(f1) {
            f[x] = y;
        }
        for &x in &sa.fixed {
            f[x] = sb.fixed[0];
        }
        for &x in &sa.positives {
            f[x] = m - 1 - f[n - 1 - x];
        }
        out.push(f);
    });
    out
}

fn extend_negatives(
    negatives: &[Value],
    codomain: &[Value],
    partial: &mut Vec<Value>,
    emit: &mut impl FnMut(&[Value]),
) {
    if partial.len() == negatives.len() {
        emit(partial);
        return;
    }
    let last = *partial.last().expect("f1(0) = 0 is always present");
    for &y in codomain.iter().filter(|&&y| y >= last) {
        partial.push(y);
        extend_negatives(negatives, codomain, partial, emit);
        partial.pop();
    }
}

/// `f(a) = f(b)` and `f(c) = f(d)` but `f(T(a,c)) != f(T(b,d))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompatibilityWitness {
    pub a: Value,
    pub b: Value,
    pub c: Value,
    pub d: Value,
}

/// First witness of incompatibility in lexicographic order of `(a, b, c, d)`.
pub fn compatibility_witness(alg: &Algebra, f: &[Value]) -> Option<IncompatibilityWitness> {
    let n = alg.len();
    for a in 0..n {
        for b in (0..n).filter(|&b| f[b] == f[a]) {
            for c in 0..n {
                for d in (0..n).filter(|&d| f[d] == f[c]) {
                    if f[alg.conj(a, c)] != f[alg.conj(b, d)] {
                        return Some(IncompatibilityWitness { a, b, c, d });
                    }
                }
            }
        }
    }
    None
}

pub fn is_compatible(alg: &Algebra, f: &[Value]) -> bool {
    compatibility_witness(alg, f).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub algebra: Algebra,
    /// Class index of every source value; a surjective morphism onto `algebra`.
    pub class_of: Vec<Value>,
}

/// Quotient by the kernel of `f`. Classes are ordered by their least element.
pub fn quotient(alg: &Algebra, f: &[Value]) -> Result<Quotient, MorphismError> {
    let n = alg.len();
    if f.len() != n {
        return Err(MorphismError::MapLength { expected: n, got: f.len() });
    }
    if let Some(w) = compatibility_witness(alg, f) {
        return Err(MorphismError::Incompatible { a: w.a, b: w.b, c: w.c, d: w.d });
    }
    let mut reps: Vec<Value> = vec![];
    let mut class_of = vec![0; n];
    for x in 0..n {
        match reps.iter().position(|&r| f[r] == f[x]) {
            Some(k) => class_of[x] = k,
            None => {
                class_of[x] = reps.len();
                reps.push(x);
            }
        }
    }
    let k = reps.len();
    for x in 0..n {
        if class_of[alg.neg(x)] != k - 1 - class_of[x] {
            return Err(MorphismError::NegationIncompatible { value: x });
        }
    }
    let table = ConjTable::from_fn(k, |i, j| class_of[alg.conj(reps[i], reps[j])]);
    let labels = reps.iter().map(|&r| alg.chain().label(r).to_string()).collect();
    let algebra = Algebra::new(Chain::new(labels)?, table)?;
    Ok(Quotient { algebra, class_of })
}

fn check_order_embedding(embed: &[Value], m: usize) -> Result<(), MorphismError> {
    if embed.first() != Some(&0) || embed.last() != Some(&(m - 1)) {
        return Err(MorphismError::BoundsNotPreserved);
    }
    for (i, w) in embed.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(MorphismError::NotOrderEmbedding(i + 1));
        }
    }
    Ok(())
}

/// Extends the conjunction of `sub` to a chain of `sup_len` values through an
/// order embedding that respects negation, so that `embed` becomes a
/// monomorphism: `T'(p,q) = h(T(p⁻,q⁻))` for `p, q < 1`, where `p⁻` is the
/// largest embedded value below `p`.
pub fn extend_conj(sub: &Algebra, sup_len: usize, embed: &[Value]) -> Result<ConjTable, MorphismError> {
    if embed.len() != sub.len() {
        return Err(MorphismError::MapLength { expected: sub.len(), got: embed.len() });
    }
    if let Some((value, &image)) = embed.iter().enumerate().find(|(_, &e)| e >= sup_len) {
        return Err(MorphismError::MapOutOfRange { value, image, len: sup_len });
    }
    check_order_embedding(embed, sup_len)?;
    for (x, &e) in embed.iter().enumerate() {
        if embed[sub.neg(x)] != sup_len - 1 - e {
            return Err(MorphismError::NegationMismatch(x));
        }
    }
    let below: Vec<Value> = (0..sup_len)
        .map(|p| embed.iter().rposition(|&e| e <= p).expect("embed(0) = 0"))
        .collect();
    let top = sup_len - 1;
    Ok(ConjTable::from_fn(sup_len, |p, q| {
        if q == top {
            p
        } else if p == top {
            q
        } else {
            embed[sub.conj(below[p], below[q])]
        }
    }))
}

/// `h` is an injective order-preserving map from `sub` into `sup` preserving
/// `0`, `1`, the negation and the conjunction.
pub fn check_monomorphism(sub: &Algebra, sup: &Algebra, h: &[Value]) -> Result<(), MorphismError> {
    if h.len() != sub.len() {
        return Err(MorphismError::MapLength { expected: sub.len(), got: h.len() });
    }
    if let Some((value, &image)) = h.iter().enumerate().find(|(_, &e)| e >= sup.len()) {
        return Err(MorphismError::MapOutOfRange { value, image, len: sup.len() });
    }
    check_order_embedding(h, sup.len())?;
    for x in 0..sub.len() {
        if h[sub.neg(x)] != sup.neg(h[x]) {
            return Err(MorphismError::NegationMismatch(x));
        }
        for y in 0..sub.len() {
            if h[sub.conj(x, y)] != sup.conj(h[x], h[y]) {
                return Err(MorphismError::ConjunctionNotPreserved(x, y));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub sub: Algebra,
    /// Position in the ambient algebra of each value of `sub`.
    pub map: Vec<Value>,
}

/// Every subset containing `0` and `1` closed under negation and conjunction,
/// with its induced algebra. Largest first, then lexicographic.
pub fn subalgebras(alg: &Algebra) -> Vec<Embedding> {
    let n = alg.len();
    let inner = n - 2;
    let mut out = vec![];
    for mask in 0u64..(1u64 << inner) {
        let mut members = vec![0];
        members.extend((0..inner).filter(|i| mask & (1 << i) != 0).map(|i| i + 1));
        members.push(n - 1);
        let mut inside = vec![false; n];
        for &x in &members {
            inside[x] = true;
        }
        let closed = members.iter().all(|&x| {
            inside[alg.neg(x)] && members.iter().all(|&y| inside[alg.conj(x, y)])
        });
        if !closed {
            continue;
        }
        let pos = |v: Value| members.iter().position(|&m| m == v).expect("closed");
        let table = ConjTable::from_fn(members.len(), |i, j| pos(alg.conj(members[i], members[j])));
        let labels = members.iter().map(|&m| alg.chain().label(m).to_string()).collect();
        let Ok(chain) = Chain::new(labels) else { continue };
        let sub = Algebra::new(chain, table).expect("closed subsets inherit T1-T5");
        out.push(Embedding { sub, map: members });
    }
    out.sort_by(|x, y| y.map.len().cmp(&x.map.len()).then_with(|| x.map.cmp(&y.map)));
    out
}

/// An algebra embedded into both a source and a target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonSubalgebra {
    pub algebra: Algebra,
    pub into_source: Vec<Value>,
    pub into_target: Vec<Value>,
}

/// Pairs of subalgebras with identical structure, ranked by size (largest
/// first). Always contains the booleans.
pub fn common_subalgebras(a: &Algebra, b: &Algebra) -> Vec<CommonSubalgebra> {
    let (sa, sb) = (subalgebras(a), subalgebras(b));
    let mut out = vec![];
    for x in &sa {
        for y in sb.iter().filter(|y| y.map.len() == x.map.len()) {
            if x.sub.conj_table() == y.sub.conj_table() {
                out.push(CommonSubalgebra {
                    algebra: x.sub.clone(),
                    into_source: x.map.clone(),
                    into_target: y.map.clone(),
                });
            }
        }
    }
    out
}

/// `f(x) = [h2(c⁻), h2(c⁺)]` with `c⁻` the largest and `c⁺` the least element
/// of the common subalgebra whose image under `h1` lies below / above `x`.
pub fn quasi_from_common(
    a: &Algebra,
    b: &Algebra,
    common: &Algebra,
    h1: &[Value],
    h2: &[Value],
) -> Result<Renaming, MorphismError> {
    check_monomorphism(common, a, h1)?;
    check_monomorphism(common, b, h2)?;
    let images = (0..a.len())
        .map(|x| {
            let below = h1.iter().rposition(|&v| v <= x).expect("h1(0) = 0");
            let above = h1.iter().position(|&v| v >= x).expect("h1(1) = 1");
            Interval::new_unchecked(h2[below], h2[above])
        })
        .collect();
    Ok(Renaming::new(images))
}
