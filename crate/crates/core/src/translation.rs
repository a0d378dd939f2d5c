//! Translating sentences along a quasi-morphism and checking that
//! derivability is carried across.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain_algebra::Algebra;
use crate::entailment::{apply_rule, Closure, DerivationTrace, EngineConfig, Formula, Literal, RuleTag, Sentence};
use crate::error::{EntailmentError, TranslationError};
use crate::interval_algebra::Interval;
use crate::morphism::{is_quasi_morphism, QmViolation, Renaming};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bridge {
    source: Algebra,
    target: Algebra,
    renaming: Renaming,
}

impl Bridge {
    pub fn new(source: Algebra, target: Algebra, renaming: Renaming) -> Result<Self, TranslationError> {
        let report = is_quasi_morphism(&source, &target, &renaming)?;
        if !report.passes() {
            let first = report.violations[0].clone();
            return Err(TranslationError::NotQuasiMorphism(format!("{first:?}")));
        }
        Ok(Bridge { source, target, renaming })
    }

    /// Skips the quasi-morphism check; only the shape is validated. For
    /// experimenting with renamings that are known to be defective.
    pub fn new_unchecked(source: Algebra, target: Algebra, renaming: Renaming) -> Result<Self, TranslationError> {
        renaming.check_shape(source.len(), target.len())?;
        Ok(Bridge { source, target, renaming })
    }

    pub fn identity(alg: &Algebra) -> Self {
        Bridge { source: alg.clone(), target: alg.clone(), renaming: Renaming::identity(alg.len()) }
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target(&self) -> &Algebra {
        &self.target
    }

    pub fn renaming(&self) -> &Renaming {
        &self.renaming
    }

    pub fn is_morphism(&self) -> bool {
        self.renaming.is_pointwise()
            && is_quasi_morphism(&self.source, &self.target, &self.renaming).is_ok_and(|r| r.passes())
    }

    pub fn translate_weight(&self, v: Interval) -> Result<Interval, TranslationError> {
        if !v.fits(self.source.len()) {
            let len = self.source.len();
            return Err(EntailmentError::BadWeight { lo: v.lo(), hi: v.hi(), len }.into());
        }
        Ok(self.renaming.hull(v))
    }

    pub fn translate(&self, s: &Sentence) -> Result<Sentence, TranslationError> {
        Ok(Sentence::new(s.formula.clone(), self.translate_weight(s.weight)?))
    }

    pub fn translate_all(&self, gamma: &[Sentence]) -> Result<Vec<Sentence>, TranslationError> {
        gamma.iter().map(|s| self.translate(s)).collect()
    }

    /// Re-runs a target derivation from the translated `gamma` with the
    /// source operators on the untranslated premises.
    pub fn replay_witness(&self, gamma: &[Sentence], trace: &DerivationTrace) -> Result<Sentence, TranslationError> {
        let mut replayed: Vec<Sentence> = Vec::with_capacity(trace.steps.len());
        for (k, step) in trace.steps.iter().enumerate() {
            let s = match step.rule {
                RuleTag::Premise(i) => {
                    let src = gamma.get(i).ok_or(TranslationError::UntraceableLeaf(k))?;
                    if self.translate(src)? != step.sentence {
                        return Err(TranslationError::UntraceableLeaf(k));
                    }
                    src.clone()
                }
                RuleTag::Weakening => {
                    let &[p] = step.premises.as_slice() else { return Err(TranslationError::ReplayFailed(k)) };
                    replayed.get(p).cloned().ok_or(TranslationError::ReplayFailed(k))?
                }
                rule => {
                    let prem: Option<Vec<&Sentence>> = step.premises.iter().map(|&p| replayed.get(p)).collect();
                    let prem = prem.ok_or(TranslationError::ReplayFailed(k))?;
                    apply_rule(&self.source, rule, &prem).ok_or(TranslationError::ReplayFailed(k))?
                }
            };
            replayed.push(s);
        }
        replayed.pop().ok_or(TranslationError::ReplayFailed(0))
    }

    /// `gamma |- e` implies `H(gamma) |- H(e)`.
    pub fn check_map(&self, gamma: &[Sentence], e: &Sentence, cfg: EngineConfig) -> Result<bool, TranslationError> {
        let cfg = widen(cfg, gamma, e);
        if !Closure::derive(&self.source, gamma, cfg).derives(e) {
            return Ok(true);
        }
        let target = Closure::derive(&self.target, &self.translate_all(gamma)?, cfg);
        Ok(target.derives(&self.translate(e)?))
    }

    /// Finds a source witness for `e_prime`, which must be derivable from the
    /// translated `gamma`.
    pub fn check_weak_conservative(
        &self,
        gamma: &[Sentence],
        e_prime: &Sentence,
        cfg: EngineConfig,
    ) -> Result<WeakConservative, TranslationError> {
        let cfg = widen(cfg, gamma, e_prime);
        let target = Closure::derive(&self.target, &self.translate_all(gamma)?, cfg);
        let trace = target.trace(e_prime).ok_or(TranslationError::NotDerivable)?;
        let source = Closure::derive(&self.source, gamma, cfg);
        self.witness(&source, gamma, e_prime, trace, cfg)
    }

    fn witness(
        &self,
        source: &Closure,
        gamma: &[Sentence],
        e_prime: &Sentence,
        trace: DerivationTrace,
        cfg: EngineConfig,
    ) -> Result<WeakConservative, TranslationError> {
        let witness = self.replay_witness(gamma, &trace)?;
        let source_derives = source.derives(&witness);
        let translated = self.translate(&witness)?;
        let reaches = translated.formula == e_prime.formula && translated.weight.is_subset_of(&e_prime.weight)
            || Closure::derive(&self.target, &[translated], cfg).derives(e_prime);
        Ok(WeakConservative { holds: source_derives && reaches, witness, trace })
    }
}

fn widen(mut cfg: EngineConfig, gamma: &[Sentence], goal: &Sentence) -> EngineConfig {
    let default = gamma.iter().map(|s| s.formula.arity()).max().unwrap_or(1).max(2);
    cfg.max_arity = Some(cfg.max_arity.unwrap_or(default).max(goal.formula.arity()));
    cfg
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakConservative {
    pub holds: bool,
    pub witness: Sentence,
    pub trace: DerivationTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Map,
    WeakConservative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub property: Property,
    pub gamma: Vec<Sentence>,
    pub sentence: Sentence,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub premise_sets: usize,
    pub sentences_checked: usize,
    pub failures: Vec<Failure>,
}

impl BridgeReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(mut self, other: BridgeReport) -> BridgeReport {
        self.premise_sets += other.premise_sets;
        self.sentences_checked += other.sentences_checked;
        self.failures.extend(other.failures);
        self
    }
}

/// Which properties a harness run checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    pub weak_conservative: bool,
    pub map: bool,
}

impl Checks {
    pub const BOTH: Checks = Checks { weak_conservative: true, map: true };
    pub const WEAK_CONSERVATIVE: Checks = Checks { weak_conservative: true, map: false };
    pub const MAP: Checks = Checks { weak_conservative: false, map: true };
}

/// Checks one premise set: every minimal target consequence has a source
/// witness, and every minimal source consequence translates to a target
/// consequence. Weakenings follow from the minimal cases.
pub fn check_premise_set(bridge: &Bridge, gamma: &[Sentence], checks: Checks, cfg: EngineConfig) -> BridgeReport {
    let mut report = BridgeReport { premise_sets: 1, ..Default::default() };
    let fail = |property, sentence: &Sentence, detail: String| Failure {
        property,
        gamma: gamma.to_vec(),
        sentence: sentence.clone(),
        detail,
    };
    let translated = match bridge.translate_all(gamma) {
        Ok(t) => t,
        Err(e) => {
            let s = gamma.first().cloned().unwrap_or_else(|| Sentence::new(Formula::atom(0), Interval::point(0)));
            report.failures.push(fail(Property::WeakConservative, &s, e.to_string()));
            return report;
        }
    };
    let source = Closure::derive(bridge.source(), gamma, cfg);
    let cfg = EngineConfig { max_arity: Some(source.max_arity()), ..cfg };
    let target = Closure::derive(bridge.target(), &translated, cfg);
    for e_prime in target.sentences().into_iter().filter(|_| checks.weak_conservative) {
        report.sentences_checked += 1;
        let trace = target.trace(&e_prime).expect("closure sentences have traces");
        match bridge.witness(&source, gamma, &e_prime, trace, cfg) {
            Ok(w) if w.holds => {}
            Ok(w) => report.failures.push(fail(
                Property::WeakConservative,
                &e_prime,
                format!("witness {:?} does not connect", w.witness),
            )),
            Err(e) => report.failures.push(fail(Property::WeakConservative, &e_prime, e.to_string())),
        }
    }
    if checks.map {
        for e in source.sentences() {
            report.sentences_checked += 1;
            let image = bridge.translate(&e).expect("source closure stays on the source chain");
            if !target.derives(&image) {
                report.failures.push(fail(Property::Map, &e, format!("{image:?} not derivable in target")));
            }
        }
    }
    report
}

/// Shapes of small premise sets over atoms `p, q, r` (indices 0, 1, 2)
/// covering every combination of the inference rules.
pub fn skeletons() -> Vec<Vec<Formula>> {
    let (p, q, r) = (Literal::pos(0), Literal::pos(1), Literal::pos(2));
    let lit = Formula::Literal;
    let conj = |ls: &[Literal]| Formula::conjunction(ls.to_vec()).expect("nonempty");
    let rule = |ls: &[Literal], c: usize| Formula::rule(ls.to_vec(), c).expect("nonempty");
    vec![
        vec![lit(p)],
        vec![lit(p.negate())],
        vec![conj(&[p, q])],
        vec![lit(p), lit(q)],
        vec![lit(p), lit(p)],
        vec![lit(p), rule(&[p], 1)],
        vec![lit(p.negate()), rule(&[p.negate()], 1)],
        vec![lit(p), rule(&[p.negate()], 1)],
        vec![lit(p.negate()), rule(&[p], 1)],
        vec![rule(&[p], 1), lit(q.negate())],
        vec![lit(p), rule(&[p], 0)],
        vec![lit(p), rule(&[p, p], 1)],
        vec![conj(&[p, q]), rule(&[p, q], 2)],
        vec![lit(p), lit(q), rule(&[p, q], 2)],
        vec![lit(p), lit(q.negate()), rule(&[p, q.negate()], 2)],
        vec![lit(p), rule(&[p], 1), rule(&[q], 2)],
        vec![lit(p), rule(&[p], 1), rule(&[q.negate()], 2)],
        vec![lit(p), lit(p), rule(&[p], 1)],
        vec![lit(p), rule(&[p], 1), rule(&[p], 1)],
        vec![lit(q), rule(&[p.negate(), q], 2), lit(p)],
        vec![lit(p), lit(q), lit(r)],
        vec![conj(&[p, q.negate()]), lit(r), rule(&[r], 0)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Skeletons with at most this many weight assignments are enumerated
    /// exhaustively; larger ones are sampled.
    pub exhaustive_budget: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { exhaustive_budget: 1000, samples: 200, seed: 0 }
    }
}

/// Premise sets over an `n`-element chain: every skeleton with every weight
/// assignment, or a seeded sample when there are too many.
pub fn premise_sets(n: usize, sampling: SamplingConfig) -> Vec<Vec<Sentence>> {
    premise_sets_over(&Interval::all(n).collect::<Vec<_>>(), sampling)
}

/// As [`premise_sets`] with weights drawn from `weights`.
pub fn premise_sets_over(weights: &[Interval], sampling: SamplingConfig) -> Vec<Vec<Sentence>> {
    let k = weights.len();
    let mut out = vec![];
    for (si, shape) in skeletons().into_iter().enumerate() {
        let total = k.checked_pow(shape.len() as u32).unwrap_or(usize::MAX);
        let build = |code: &[usize]| -> Vec<Sentence> {
            shape.iter().zip(code).map(|(f, &c)| Sentence::new(f.clone(), weights[c])).collect()
        };
        if total <= sampling.exhaustive_budget {
            for mut code in 0..total {
                let digits: Vec<usize> = (0..shape.len())
                    .map(|_| {
                        let d = code % k;
                        code /= k;
                        d
                    })
                    .collect();
                out.push(build(&digits));
            }
        } else {
            let mut rng = StdRng::seed_from_u64(sampling.seed ^ (si as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            for _ in 0..sampling.samples {
                let digits: Vec<usize> = shape.iter().map(|_| rng.gen_range(0..k)).collect();
                out.push(build(&digits));
            }
        }
    }
    out
}

/// Runs [`check_premise_set`] over many premise sets in parallel.
pub fn verify_bridge(bridge: &Bridge, gammas: &[Vec<Sentence>], checks: Checks, cfg: EngineConfig) -> BridgeReport {
    gammas
        .par_iter()
        .map(|g| check_premise_set(bridge, g, checks, cfg))
        .reduce(BridgeReport::default, BridgeReport::merge)
}

/// Looks for a premise set refuting the map property around each pair where
/// the renaming breaks negation or conjunction.
pub fn find_map_counterexample(bridge: &Bridge, cfg: EngineConfig) -> Option<(Vec<Sentence>, Sentence)> {
    let report = is_quasi_morphism(bridge.source(), bridge.target(), bridge.renaming()).ok()?;
    let a = bridge.source();
    let p = Literal::pos(0);
    let q = Literal::pos(1);
    for v in &report.violations {
        let candidates: Vec<(Vec<Sentence>, Sentence)> = match *v {
            QmViolation::ConjunctionNotContained { x, y } => {
                let gamma = vec![
                    Sentence::new(Formula::Literal(p), Interval::point(x)),
                    Sentence::new(Formula::Literal(q), Interval::point(y)),
                ];
                let pq = Formula::conjunction(vec![p, q]).expect("two literals");
                vec![(gamma, Sentence::new(pq, Interval::point(a.conj(x, y))))]
            }
            QmViolation::NegationNotPreserved { x } => {
                let gamma = vec![Sentence::new(Formula::Literal(p), Interval::point(x))];
                vec![(gamma, Sentence::new(Formula::Literal(p.negate()), Interval::point(a.neg(x))))]
            }
            _ => vec![],
        };
        for (gamma, e) in candidates {
            if bridge.check_map(&gamma, &e, cfg) == Ok(false) {
                return Some((gamma, e));
            }
        }
    }
    None
}
