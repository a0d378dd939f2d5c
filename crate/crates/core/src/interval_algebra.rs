//! Intervals of a chain and the interval algebra `I(A)` built over them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain_algebra::{Algebra, Value};

/// Closed interval `[lo, hi]` of chain indices; `lo <= hi` always holds.
/// A point interval stands for the value itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[Value; 2]", into = "[Value; 2]")]
pub struct Interval {
    lo: Value,
    hi: Value,
}

impl Interval {
    pub fn new(lo: Value, hi: Value) -> Option<Self> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub(crate) fn new_unchecked(lo: Value, hi: Value) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(v: Value) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn lo(&self) -> Value {
        self.lo
    }

    pub fn hi(&self) -> Value {
        self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo
    }

    pub fn contains(&self, v: Value) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Every element of `self` lies below every element of `other`.
    pub fn leq_star(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    /// Both endpoints no greater than the other's.
    pub fn leq_componentwise(&self, other: &Interval) -> bool {
        self.lo <= other.lo && self.hi <= other.hi
    }

    pub fn fits(&self, chain_len: usize) -> bool {
        self.hi < chain_len
    }

    /// Every interval of an `n`-chain, ordered by `(lo, hi)`.
    pub fn all(n: usize) -> impl Iterator<Item = Interval> {
        (0..n).flat_map(move |lo| (lo..n).map(move |hi| Interval { lo, hi }))
    }
}

impl TryFrom<[Value; 2]> for Interval {
    type Error = String;

    fn try_from([lo, hi]: [Value; 2]) -> Result<Self, Self::Error> {
        Interval::new(lo, hi).ok_or_else(|| format!("interval [{lo}, {hi}] has lo > hi"))
    }
}

impl From<Interval> for [Value; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

impl Algebra {
    /// `N*([a,b]) = [N(b), N(a)]`
    pub fn neg_star(&self, i: Interval) -> Interval {
        Interval::new_unchecked(self.neg(i.hi), self.neg(i.lo))
    }

    /// `T*([a1,b1],[a2,b2]) = [T(a1,a2), T(b1,b2)]`
    pub fn conj_star(&self, x: Interval, y: Interval) -> Interval {
        Interval::new_unchecked(self.conj(x.lo, y.lo), self.conj(x.hi, y.hi))
    }

    pub fn label_interval(&self, i: Interval) -> String {
        let c = self.chain();
        if i.is_point() {
            c.label(i.lo).to_string()
        } else {
            format!("[{},{}]", c.label(i.lo), c.label(i.hi))
        }
    }
}

/// The algebra of all intervals of a chain with lifted negation and conjunction.
#[derive(Debug, Clone)]
pub struct IntervalAlgebra {
    base: Algebra,
    carrier: Vec<Interval>,
    neg: Vec<usize>,
    conj: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignClasses {
    pub negative: Vec<Interval>,
    pub fixed: Vec<Interval>,
    pub positive: Vec<Interval>,
    pub indefinite: Vec<Interval>,
}

impl IntervalAlgebra {
    pub fn build(base: &Algebra) -> Self {
        let n = base.len();
        let carrier: Vec<_> = Interval::all(n).collect();
        let pos = |i: Interval| carrier.binary_search(&i).expect("carrier is complete");
        let neg = carrier.iter().map(|&i| pos(base.neg_star(i))).collect();
        let mut conj = Vec::with_capacity(carrier.len() * carrier.len());
        for &x in &carrier {
            for &y in &carrier {
                conj.push(pos(base.conj_star(x, y)));
            }
        }
        IntervalAlgebra { base: base.clone(), carrier, neg, conj }
    }

    pub fn base(&self) -> &Algebra {
        &self.base
    }

    pub fn carrier(&self) -> &[Interval] {
        &self.carrier
    }

    pub fn position(&self, i: Interval) -> Option<usize> {
        self.carrier.binary_search(&i).ok()
    }

    pub fn neg(&self, i: Interval) -> Interval {
        self.carrier[self.neg[self.position(i).expect("interval over this chain")]]
    }

    pub fn conj(&self, x: Interval, y: Interval) -> Interval {
        let (px, py) = (
            self.position(x).expect("interval over this chain"),
            self.position(y).expect("interval over this chain"),
        );
        self.carrier[self.conj[px * self.carrier.len() + py]]
    }

    /// Lifted negation and conjunction in one call.
    pub fn star_ops(&self, x: Interval, y: Interval) -> (Interval, Interval) {
        (self.neg(x), self.conj(x, y))
    }

    /// Classes by comparison with the lifted negation: fixed when `N*(J) = J`,
    /// negative when `J <=* N*(J)`, positive when `N*(J) <=* J`.
    pub fn sign_classes(&self) -> SignClasses {
        sign_classes(&self.base)
    }

    /// Cover relation of `<=*` on distinct intervals, as `(lower, upper)` pairs.
    pub fn hasse(&self) -> Vec<(Interval, Interval)> {
        cover_edges(&self.carrier, |a, b| a.leq_star(b))
    }
}

pub fn sign_classes(alg: &Algebra) -> SignClasses {
    let mut out = SignClasses { negative: vec![], fixed: vec![], positive: vec![], indefinite: vec![] };
    for j in Interval::all(alg.len()) {
        let nj = alg.neg_star(j);
        if nj == j {
            out.fixed.push(j);
        } else if j.leq_star(&nj) {
            out.negative.push(j);
        } else if nj.leq_star(&j) {
            out.positive.push(j);
        } else {
            out.indefinite.push(j);
        }
    }
    out
}

/// Transitive reduction of a strict order given by `leq` restricted to
/// distinct elements.
pub fn cover_edges<T: Copy>(elems: &[T], leq: impl Fn(&T, &T) -> bool) -> Vec<(T, T)> {
    let k = elems.len();
    let below = |i: usize, j: usize| i != j && leq(&elems[i], &elems[j]);
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if below(i, j) && !(0..k).any(|m| below(i, m) && below(m, j)) {
                edges.push((elems[i], elems[j]));
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_algebra::{Chain, ConjTable};

    fn iv(lo: usize, hi: usize) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn min7() -> Algebra {
        Algebra::new(
            Chain::standard(7, "b"),
            ConjTable::from_fn(7, |a, b| if a == 0 || b == 0 { 0 } else { a.min(b) }),
        )
        .unwrap()
    }

    #[test]
    fn carrier_sizes() {
        for n in 2..=9 {
            let ia = IntervalAlgebra::build(&Algebra::min(n));
            assert_eq!(ia.carrier().len(), n * (n + 1) / 2);
        }
        let two: Vec<_> = IntervalAlgebra::build(&Algebra::min(2)).carrier().to_vec();
        assert_eq!(two, vec![iv(0, 0), iv(0, 1), iv(1, 1)]);
        let lo_hi_pairs = (0..5).flat_map(|a| (0..5).map(move |b| (a, b))).filter(|(a, b)| a <= b);
        assert_eq!(IntervalAlgebra::build(&Algebra::min(5)).carrier().len(), lo_hi_pairs.count());
    }

    #[test]
    fn four_chain_carrier_matches_listing() {
        // 0 < a < b < 1 as indices 0..3
        let expected = [
            (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 0), (1, 1), (2, 2), (3, 3),
        ];
        let ia = IntervalAlgebra::build(&Algebra::min(4));
        let mut got = ia.carrier().to_vec();
        let mut want: Vec<_> = expected.iter().map(|&(a, b)| iv(a, b)).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn leq_star_examples() {
        assert!(iv(0, 0).leq_star(&iv(1, 2)));
        assert!(iv(0, 3).leq_star(&iv(3, 6)));
        assert!(!iv(0, 2).leq_star(&iv(1, 3)));
        assert!(!iv(1, 2).leq_star(&iv(1, 2)));
        assert!(iv(1, 1).leq_star(&iv(1, 1)));
    }

    #[test]
    fn star_ops_examples() {
        let b7 = min7();
        let ia = IntervalAlgebra::build(&b7);
        assert_eq!(ia.neg(iv(0, 6)), iv(0, 6));
        assert_eq!(ia.conj(iv(0, 3), iv(3, 6)), iv(0, 3));
        for i in ia.carrier().to_vec() {
            assert_eq!(ia.conj(i, Interval::point(6)), i);
        }
        assert_eq!(ia.star_ops(iv(0, 3), iv(3, 6)), (iv(3, 6), iv(0, 3)));
    }

    #[test]
    fn sign_class_examples() {
        let four = sign_classes(&Algebra::min(4));
        assert!(four.fixed.contains(&iv(1, 2)));
        assert!(four.indefinite.contains(&iv(0, 2)));
        let seven = sign_classes(&Algebra::min(7));
        assert!(seven.negative.contains(&iv(0, 3)));
        assert!(seven.positive.contains(&iv(3, 6)));
        assert!(seven.fixed.contains(&iv(3, 3)));
    }

    /// Brute-force `<=*` plus transitive reduction, written out without the helper.
    fn oracle_hasse(n: usize) -> Vec<(Interval, Interval)> {
        let all: Vec<_> = Interval::all(n).collect();
        let lt = |a: &Interval, b: &Interval| a != b && a.hi <= b.lo;
        let mut out = vec![];
        for a in &all {
            for b in &all {
                if lt(a, b) && all.iter().all(|c| !(lt(a, c) && lt(c, b))) {
                    out.push((*a, *b));
                }
            }
        }
        out
    }

    #[test]
    fn hasse_against_oracle() {
        for n in 2..=6 {
            let ia = IntervalAlgebra::build(&Algebra::min(n));
            assert_eq!(ia.hasse(), oracle_hasse(n));
        }
        let two = IntervalAlgebra::build(&Algebra::min(2)).hasse();
        assert_eq!(two, vec![(iv(0, 0), iv(0, 1)), (iv(0, 1), iv(1, 1))]);
    }

    #[test]
    fn hasse_subdivides_the_chain_order() {
        // Each proper interval [x,y] sits exactly between the points x and y.
        for n in 2..=6 {
            let edges = IntervalAlgebra::build(&Algebra::min(n)).hasse();
            let proper = n * (n - 1) / 2;
            assert_eq!(edges.len(), 2 * proper);
            for j in Interval::all(n).filter(|j| !j.is_point()) {
                let down: Vec<_> = edges.iter().filter(|e| e.1 == j).map(|e| e.0).collect();
                let up: Vec<_> = edges.iter().filter(|e| e.0 == j).map(|e| e.1).collect();
                assert_eq!(down, vec![Interval::point(j.lo())]);
                assert_eq!(up, vec![Interval::point(j.hi())]);
            }
        }
    }

    #[test]
    fn lifted_conj_is_not_star_monotone() {
        let ia = IntervalAlgebra::build(&Algebra::min(3));
        let (x, y, z) = (iv(0, 1), iv(1, 2), iv(0, 2));
        assert!(x.leq_star(&y));
        assert_eq!(ia.conj(x, z), iv(0, 1));
        assert_eq!(ia.conj(y, z), iv(0, 2));
        assert!(!ia.conj(x, z).leq_star(&ia.conj(y, z)));
        assert!(ia.conj(x, z).leq_componentwise(&ia.conj(y, z)));
    }

    #[test]
    fn lifted_axioms_and_embedding() {
        for n in 2..=6 {
            for alg in crate::chain_algebra::all_algebras(n, "a").unwrap() {
                let ia = IntervalAlgebra::build(&alg);
                let c = ia.carrier().to_vec();
                let (zero, one) = (Interval::point(0), Interval::point(n - 1));
                for &x in &c {
                    assert_eq!(ia.neg(ia.neg(x)), x);
                    assert_eq!(ia.conj(zero, x), zero);
                    assert_eq!(ia.conj(one, x), x);
                    assert!(zero.leq_star(&x) && x.leq_star(&one));
                    for &y in &c {
                        assert_eq!(ia.conj(x, y), ia.conj(y, x));
                        if x != y && x.leq_star(&y) {
                            assert!(ia.neg(y).leq_star(&ia.neg(x)));
                            for &z in &c {
                                let (a, b) = (ia.conj(x, z), ia.conj(y, z));
                                assert!(a.leq_componentwise(&b));
                            }
                        }
                        for &z in &c {
                            assert_eq!(ia.conj(x, ia.conj(y, z)), ia.conj(ia.conj(x, y), z));
                            if x.leq_star(&y) && y.leq_star(&z) {
                                assert!(x.leq_star(&z));
                            }
                        }
                        if x.leq_star(&y) && y.leq_star(&x) {
                            assert_eq!(x, y);
                        }
                    }
                }
                for a in 0..n {
                    let pa = Interval::point(a);
                    assert_eq!(ia.neg(pa), Interval::point(alg.neg(a)));
                    for b in 0..n {
                        assert_eq!(ia.conj(pa, Interval::point(b)), Interval::point(alg.conj(a, b)));
                    }
                }
            }
        }
    }
}
