//! Expert-driven search for a quasi-morphism: check the proposed renaming,
//! then offer alternative renamings, alternative target tables, and finally
//! both, until the expert accepts one or every phase is declined.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::chain_algebra::{enumerate_conj, sign_partition, Algebra, Chain, ConjTable, DEFAULT_ENUMERATION_CAP};
use crate::error::GeneratorError;
use crate::interval_algebra::{sign_classes, Interval};
use crate::morphism::{is_negation_quasi_morphism, is_quasi_morphism, Renaming};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub morphism: bool,
    /// Sum of image widths.
    pub imprecision: usize,
    /// L1 distance of image midpoints from the initial renaming, doubled so
    /// it stays integral.
    pub displacement: usize,
    /// Entries differing from the initial target table, when one was given.
    pub table_distance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    pub renaming: Renaming,
    /// Target table, for candidates that replace it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table: Option<ConjTable>,
    pub metrics: Metrics,
}

fn displacement(f: &Renaming, initial: &Renaming) -> usize {
    f.images()
        .iter()
        .zip(initial.images())
        .map(|(x, y)| (x.lo() + x.hi()).abs_diff(y.lo() + y.hi()))
        .sum()
}

fn metrics(f: &Renaming, table: Option<&ConjTable>, initial: &Renaming, initial_table: Option<&ConjTable>) -> Metrics {
    Metrics {
        morphism: f.is_pointwise(),
        imprecision: f.imprecision(),
        displacement: displacement(f, initial),
        table_distance: table.zip(initial_table).map(|(t, t0)| t.hamming(t0)),
    }
}

fn rank_key(a: &Candidate, b: &Candidate) -> Ordering {
    let (ma, mb) = (&a.metrics, &b.metrics);
    mb.morphism
        .cmp(&ma.morphism)
        .then(ma.imprecision.cmp(&mb.imprecision))
        .then(ma.displacement.cmp(&mb.displacement))
        .then(ma.table_distance.cmp(&mb.table_distance))
        .then_with(|| a.renaming.cmp(&b.renaming))
        .then_with(|| a.table.cmp(&b.table))
}

/// Orders candidates (morphisms first, then by imprecision, displacement,
/// table distance, and lexicographically) and numbers them from 0.
pub fn rank(
    pool: Vec<(Renaming, Option<ConjTable>)>,
    initial: &Renaming,
    initial_table: Option<&ConjTable>,
) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = pool
        .into_iter()
        .map(|(renaming, table)| {
            let metrics = metrics(&renaming, table.as_ref(), initial, initial_table);
            Candidate { id: 0, renaming, table, metrics }
        })
        .collect();
    out.sort_by(rank_key);
    for (i, c) in out.iter_mut().enumerate() {
        c.id = i;
    }
    out
}

/// Renamings built from a monotone choice of negative-or-fixed target
/// intervals for the non-positive source values, extended to the positive
/// values through the negations. Unranked; every entry is a quasi-morphism.
pub fn renaming_pool(a: &Algebra, b: &Algebra) -> Vec<Renaming> {
    let n = a.len();
    let sa = sign_partition(n);
    let sb = sign_classes(b);
    let mut negative_codomain = sb.negative.clone();
    negative_codomain.extend(&sb.fixed);
    negative_codomain.sort();
    let mut out = vec![];
    let mut chosen = vec![Interval::point(0)];
    let domain: Vec<usize> = sa.negatives.iter().chain(&sa.fixed).copied().collect();
    let mut emit = |f1: &[Interval]| {
        let mut images = vec![Interval::point(0); n];
        for (&x, &j) in domain.iter().zip(f1) {
            images[x] = j;
        }
        for &x in &sa.positives {
            images[x] = b.neg_star(images[a.neg(x)]);
        }
        let f = Renaming::new(images);
        if is_quasi_morphism(a, b, &f).is_ok_and(|r| r.passes()) {
            out.push(f);
        }
    };
    choose(&domain, &sa.fixed, &negative_codomain, &sb.fixed, &mut chosen, &mut emit);
    out
}

fn choose(
    domain: &[usize],
    fixed: &[usize],
    negative_codomain: &[Interval],
    fixed_codomain: &[Interval],
    chosen: &mut Vec<Interval>,
    emit: &mut impl FnMut(&[Interval]),
) {
    if chosen.len() == domain.len() {
        emit(chosen);
        return;
    }
    let last = *chosen.last().expect("0 is always chosen");
    let codomain = if fixed.contains(&domain[chosen.len()]) { fixed_codomain } else { negative_codomain };
    for &j in codomain.iter().filter(|j| last.leq_componentwise(j)) {
        chosen.push(j);
        choose(domain, fixed, negative_codomain, fixed_codomain, chosen, emit);
        chosen.pop();
    }
}

/// Ranked alternative renamings from `a` into `b`.
pub fn gen_renamings(a: &Algebra, b: &Algebra, initial: &Renaming) -> Vec<Candidate> {
    let pool = renaming_pool(a, b).into_iter().map(|f| (f, None)).collect();
    rank(pool, initial, None)
}

/// Ranked tables on `chain` under which `f` is a quasi-morphism. Empty when
/// `f` already fails on zero or negation.
pub fn gen_tables(
    a: &Algebra,
    chain: &Chain,
    f: &Renaming,
    initial_table: Option<&ConjTable>,
    cap: usize,
) -> Result<Vec<Candidate>, GeneratorError> {
    if !is_negation_quasi_morphism(a.len(), chain.len(), f) {
        return Ok(vec![]);
    }
    let mut pool = vec![];
    for t in enumerate_conj(chain.len(), cap)? {
        let b = Algebra::new(chain.clone(), t)?;
        if is_quasi_morphism(a, &b, f)?.passes() {
            pool.push((f.clone(), Some(b.conj_table().clone())));
        }
    }
    Ok(rank(pool, f, initial_table))
}

/// Ranked pairs of a table on `chain` and a renaming into it.
pub fn gen_both(
    a: &Algebra,
    chain: &Chain,
    initial: &Renaming,
    initial_table: Option<&ConjTable>,
    cap: usize,
) -> Result<Vec<Candidate>, GeneratorError> {
    let mut pool = vec![];
    for t in enumerate_conj(chain.len(), cap)? {
        let b = Algebra::new(chain.clone(), t)?;
        pool.extend(renaming_pool(a, &b).into_iter().map(|f| (f, Some(b.conj_table().clone()))));
    }
    Ok(rank(pool, initial, initial_table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Check,
    SelectRenaming,
    SelectTable,
    SelectBoth,
    Done,
    Failed,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Check => "check",
            Phase::SelectRenaming => "select_renaming",
            Phase::SelectTable => "select_table",
            Phase::SelectBoth => "select_both",
            Phase::Done => "done",
            Phase::Failed => "failed",
        }
    }

    pub fn is_closed(self) -> bool {
        matches!(self, Phase::Done | Phase::Failed)
    }
}

/// Which of the four accepted results a session produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultShape {
    /// The proposed renaming and target table.
    Initial,
    /// A new renaming into the proposed target.
    Renaming,
    /// The proposed renaming into a new target table.
    Table,
    /// A new renaming into a new target table.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accepted {
    pub shape: ResultShape,
    pub source: Algebra,
    pub target: Algebra,
    pub renaming: Renaming,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInput {
    pub source: Algebra,
    pub target_chain: Chain,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_table: Option<ConjTable>,
    pub renaming: Renaming,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

impl SessionInput {
    pub fn new(source: Algebra, target_chain: Chain, target_table: Option<ConjTable>, renaming: Renaming) -> Self {
        SessionInput { source, target_chain, target_table, renaming, enumeration_cap: DEFAULT_ENUMERATION_CAP }
    }

    fn target(&self) -> Result<Option<Algebra>, GeneratorError> {
        self.target_table
            .clone()
            .map(|t| Algebra::new(self.target_chain.clone(), t))
            .transpose()
            .map_err(Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub phase: Phase,
    /// Chosen candidate id; `None` declines every candidate of the phase.
    pub candidate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub input: SessionInput,
    pub phase: Phase,
    pub candidates: Vec<Candidate>,
    pub history: Vec<Selection>,
    /// `None` while open and when the search failed.
    pub result: Option<Accepted>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePage {
    pub phase: Phase,
    pub total: usize,
    pub morphism_count: usize,
    pub offset: usize,
    pub items: Vec<Candidate>,
}

impl Session {
    /// Checks the proposed renaming; without a target table the renaming
    /// phase is skipped since there is nothing to rename into.
    pub fn start(input: SessionInput) -> Result<Session, GeneratorError> {
        input.renaming.check_shape(input.source.len(), input.target_chain.len())?;
        let target = input.target()?;
        let mut s = Session { input, phase: Phase::Check, candidates: vec![], history: vec![], result: None };
        match target {
            Some(b) => {
                if is_quasi_morphism(&s.input.source, &b, &s.input.renaming)?.passes() {
                    s.finish(ResultShape::Initial, b, s.input.renaming.clone());
                } else {
                    s.enter(Phase::SelectRenaming)?;
                }
            }
            None => s.enter(Phase::SelectTable)?,
        }
        Ok(s)
    }

    fn finish(&mut self, shape: ResultShape, target: Algebra, renaming: Renaming) {
        let source = self.input.source.clone();
        self.phase = Phase::Done;
        self.candidates.clear();
        self.result = Some(Accepted { shape, source, target, renaming });
    }

    fn enter(&mut self, phase: Phase) -> Result<(), GeneratorError> {
        let i = &self.input;
        let table = i.target_table.as_ref();
        self.candidates = match phase {
            Phase::SelectRenaming => {
                let b = i.target()?.expect("renaming phase needs a target table");
                gen_renamings(&i.source, &b, &i.renaming)
            }
            Phase::SelectTable => gen_tables(&i.source, &i.target_chain, &i.renaming, table, i.enumeration_cap)?,
            Phase::SelectBoth => gen_both(&i.source, &i.target_chain, &i.renaming, table, i.enumeration_cap)?,
            _ => vec![],
        };
        self.phase = phase;
        Ok(())
    }

    /// Accepts a candidate of the current phase, or with `None` moves on.
    pub fn select(&mut self, candidate: Option<usize>) -> Result<(), GeneratorError> {
        if self.phase.is_closed() {
            return Err(GeneratorError::Closed(self.phase.name()));
        }
        let phase = self.phase;
        let Some(id) = candidate else {
            self.history.push(Selection { phase, candidate: None });
            return match phase {
                Phase::SelectRenaming => self.enter(Phase::SelectTable),
                Phase::SelectTable => self.enter(Phase::SelectBoth),
                _ => {
                    self.phase = Phase::Failed;
                    self.candidates.clear();
                    Ok(())
                }
            };
        };
        let c = self.candidates.get(id).cloned().ok_or(GeneratorError::UnknownCandidate(id))?;
        let target = match &c.table {
            Some(t) => Algebra::new(self.input.target_chain.clone(), t.clone())?,
            None => self.input.target()?.expect("renaming candidates keep the target table"),
        };
        if !is_quasi_morphism(&self.input.source, &target, &c.renaming)?.passes() {
            return Err(GeneratorError::StaleCandidate(id));
        }
        let shape = match phase {
            Phase::SelectRenaming => ResultShape::Renaming,
            Phase::SelectTable => ResultShape::Table,
            _ => ResultShape::Both,
        };
        self.history.push(Selection { phase, candidate: Some(id) });
        self.finish(shape, target, c.renaming);
        Ok(())
    }

    pub fn page(&self, offset: usize, limit: usize) -> CandidatePage {
        CandidatePage {
            phase: self.phase,
            total: self.candidates.len(),
            morphism_count: self.candidates.iter().filter(|c| c.metrics.morphism).count(),
            offset,
            items: self.candidates.iter().skip(offset).take(limit).cloned().collect(),
        }
    }

    /// Rebuilds a session from its input and a list of selections.
    pub fn replay(input: SessionInput, selections: &[Option<usize>]) -> Result<Session, GeneratorError> {
        let mut s = Session::start(input)?;
        for &c in selections {
            s.select(c)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain_algebra::all_algebras;
    use crate::morphism::{is_morphism, negation_morphisms};

    fn iv(lo: usize, hi: usize) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn luk4() -> Algebra {
        Algebra::new(
            Chain::standard(4, "a"),
            ConjTable::from_rows(vec![vec![0, 0, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 2], vec![0, 1, 2, 3]]).unwrap(),
        )
        .unwrap()
    }

    fn a5() -> Algebra {
        Algebra::new(
            Chain::standard(5, "a"),
            ConjTable::from_rows(vec![
                vec![0, 0, 0, 0, 0],
                vec![0, 0, 1, 1, 1],
                vec![0, 1, 2, 2, 2],
                vec![0, 1, 2, 3, 3],
                vec![0, 1, 2, 3, 4],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn pinched_f() -> Renaming {
        Renaming::new(vec![iv(0, 0), iv(0, 3), iv(3, 3), iv(3, 6), iv(6, 6)])
    }

    fn b7() -> Algebra {
        Algebra::new(Chain::standard(7, "b"), ConjTable::min(7)).unwrap()
    }

    #[test]
    fn renamings_into_three_chains_have_no_morphism() {
        let collapse = Renaming::new(vec![iv(0, 0), iv(0, 2), iv(0, 2), iv(2, 2)]);
        for b in all_algebras(3, "b").unwrap() {
            let r = gen_renamings(&luk4(), &b, &Renaming::from_points(&[0, 0, 2, 2]));
            assert!(!r.is_empty());
            assert!(r.iter().all(|c| !c.metrics.morphism));
            assert!(r.iter().any(|c| c.renaming == collapse));
        }
    }

    #[test]
    fn pinched5_renaming_is_generated() {
        let r = gen_renamings(&a5(), &b7(), &pinched_f());
        let hit = r.iter().find(|c| c.renaming == pinched_f()).unwrap();
        assert_eq!(hit.metrics.displacement, 0);
    }

    #[test]
    fn identity_ranks_first() {
        for a in all_algebras(4, "a").unwrap() {
            let id = Renaming::identity(4);
            let r = gen_renamings(&a, &a, &id);
            assert_eq!(r[0].renaming, id);
            assert!(r.iter().any(|c| !c.metrics.morphism));
        }
    }

    #[test]
    fn ranking_orders_by_each_key() {
        let f = Renaming::identity(3);
        let wide = Renaming::new(vec![iv(0, 0), iv(0, 2), iv(2, 2)]);
        let narrow = Renaming::new(vec![iv(0, 0), iv(1, 2), iv(2, 2)]);
        let r = rank(vec![(wide.clone(), None), (narrow.clone(), None), (f.clone(), None)], &f, None);
        assert_eq!(r.iter().map(|c| &c.renaming).collect::<Vec<_>>(), vec![&f, &narrow, &wide]);
        assert_eq!(r.iter().map(|c| c.id).collect::<Vec<_>>(), vec![0, 1, 2]);
        let again = rank(vec![(f.clone(), None), (wide.clone(), None), (narrow, None)], &f, None);
        assert_eq!(r, again);
    }

    /// Every morphism, found by brute force over negation morphisms, is a candidate.
    #[test]
    fn renamings_contain_every_morphism() {
        let algebras: Vec<Algebra> = (2..=5).flat_map(|n| all_algebras(n, "a").unwrap()).collect();
        for a in &algebras {
            for b in &algebras {
                let pool = renaming_pool(a, b);
                for f in negation_morphisms(a.len(), b.len()) {
                    let f = Renaming::from_points(&f);
                    if is_morphism(a, b, &f).unwrap() {
                        assert!(pool.contains(&f));
                    }
                }
            }
        }
    }

    #[test]
    fn gen_tables_examples() {
        let bad = Renaming::from_points(&[0, 1, 1]);
        assert!(gen_tables(&Algebra::min(3), &Chain::standard(3, "b"), &bad, None, 9).unwrap().is_empty());
        let embed = Renaming::from_points(&[0, 2]);
        let t = gen_tables(&Algebra::min(2), &Chain::standard(3, "b"), &embed, None, 9).unwrap();
        assert_eq!(t.len(), 2);
        for f in negation_morphisms(4, 3) {
            let t = gen_tables(&luk4(), &Chain::standard(3, "b"), &Renaming::from_points(&f), None, 9).unwrap();
            assert!(t.is_empty());
        }
    }

    #[test]
    fn gen_both_examples() {
        let rc = gen_both(&luk4(), &Chain::standard(3, "b"), &Renaming::from_points(&[0, 0, 2, 2]), None, 9).unwrap();
        assert!(!rc.is_empty());
        assert!(rc.iter().all(|c| !c.metrics.morphism));
        let a = luk4();
        let rc = gen_both(&a, a.chain(), &Renaming::identity(4), Some(a.conj_table()), 9).unwrap();
        assert_eq!(rc[0].renaming, Renaming::identity(4));
        assert_eq!(rc[0].table.as_ref(), Some(a.conj_table()));
        assert_eq!(rc[0].metrics.table_distance, Some(0));
        let rc = gen_both(&a5(), b7().chain(), &pinched_f(), None, 9).unwrap();
        assert!(rc.iter().any(|c| c.renaming == pinched_f() && c.table.as_ref() == Some(b7().conj_table())));
    }

    fn a4_b3_input() -> SessionInput {
        SessionInput::new(luk4(), Chain::standard(3, "b"), Some(ConjTable::min(3)), Renaming::from_points(&[0, 0, 2, 2]))
    }

    #[test]
    fn session_done_immediately() {
        let s = Session::start(SessionInput::new(a5(), b7().chain().clone(), Some(ConjTable::min(7)), pinched_f())).unwrap();
        assert_eq!(s.phase, Phase::Done);
        assert_eq!(s.result.unwrap().shape, ResultShape::Initial);
        let a = luk4();
        let s = Session::start(SessionInput::new(a.clone(), a.chain().clone(), Some(a.conj_table().clone()), Renaming::identity(4)))
            .unwrap();
        assert_eq!(s.phase, Phase::Done);
    }

    #[test]
    fn session_declined_everywhere_fails() {
        let mut s = Session::start(a4_b3_input()).unwrap();
        assert_eq!(s.phase, Phase::SelectRenaming);
        assert_eq!(s.page(0, 10).morphism_count, 0);
        s.select(None).unwrap();
        assert_eq!(s.phase, Phase::SelectTable);
        assert!(s.candidates.is_empty());
        s.select(None).unwrap();
        assert_eq!(s.phase, Phase::SelectBoth);
        s.select(None).unwrap();
        assert_eq!(s.phase, Phase::Failed);
        assert!(s.result.is_none());
        assert_eq!(s.select(None), Err(GeneratorError::Closed("failed")));
    }

    #[test]
    fn session_selection_shapes() {
        let mut s = Session::start(a4_b3_input()).unwrap();
        s.select(Some(0)).unwrap();
        let r = s.result.clone().unwrap();
        assert_eq!(r.shape, ResultShape::Renaming);
        assert!(is_quasi_morphism(&r.source, &r.target, &r.renaming).unwrap().passes());
        assert_eq!(s.select(Some(0)), Err(GeneratorError::Closed("done")));

        let mut s = Session::start(a4_b3_input()).unwrap();
        s.select(None).unwrap();
        s.select(None).unwrap();
        assert_eq!(s.select(Some(usize::MAX)), Err(GeneratorError::UnknownCandidate(usize::MAX)));
        s.select(Some(0)).unwrap();
        assert_eq!(s.result.as_ref().unwrap().shape, ResultShape::Both);

        // booleans into three values, table left open
        let input = SessionInput::new(Algebra::min(2), Chain::standard(3, "b"), None, Renaming::from_points(&[0, 2]));
        let mut s = Session::start(input).unwrap();
        assert_eq!(s.phase, Phase::SelectTable);
        assert_eq!(s.candidates.len(), 2);
        s.select(Some(1)).unwrap();
        let r = s.result.unwrap();
        assert_eq!(r.shape, ResultShape::Table);
        assert_eq!(r.renaming, Renaming::from_points(&[0, 2]));
    }

    #[test]
    fn replay_is_deterministic() {
        let a = Session::replay(a4_b3_input(), &[None, None, Some(0)]).unwrap();
        let b = Session::replay(a4_b3_input(), &[None, None, Some(0)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 3);
    }

    #[test]
    fn malformed_initial_renaming_is_rejected() {
        let input = SessionInput::new(luk4(), Chain::standard(3, "b"), None, Renaming::from_points(&[0, 1]));
        assert!(matches!(Session::start(input), Err(GeneratorError::Morphism(_))));
    }

    #[test]
    fn renamings_exist_for_all_small_pairs() {
        let algebras: Vec<Algebra> = (2..=4).flat_map(|n| all_algebras(n, "a").unwrap()).collect();
        for a in &algebras {
            for b in &algebras {
                assert!(!renaming_pool(a, b).is_empty(), "{a:?} -> {b:?}");
            }
        }
    }
}
