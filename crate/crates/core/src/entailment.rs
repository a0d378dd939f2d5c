//! The restricted graded logic over an algebra: literal conjunctions and
//! rules weighted by intervals, their models, and a saturating derivation
//! engine with traces.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain_algebra::{Algebra, Value};
use crate::error::EntailmentError;
use crate::interval_algebra::Interval;

/// Default bound on signature size for the exhaustive semantic check.
pub const DEFAULT_ATOM_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Atom(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: usize) -> Self {
        Literal { atom: Atom(atom), negated: false }
    }

    pub fn neg(atom: usize) -> Self {
        Literal { atom: Atom(atom), negated: true }
    }

    pub fn negate(self) -> Self {
        Literal { atom: self.atom, negated: !self.negated }
    }

    pub fn eval(&self, alg: &Algebra, v: &[Value]) -> Value {
        let x = v[self.atom.0];
        if self.negated {
            alg.neg(x)
        } else {
            x
        }
    }

    fn render(&self, atoms: &[String]) -> String {
        let name = atoms.get(self.atom.0).cloned().unwrap_or_else(|| format!("#{}", self.atom.0));
        if self.negated {
            format!("!{name}")
        } else {
            name
        }
    }
}

/// Conjunctions are sorted multisets of at least two literals; a one-literal
/// conjunction is stored as the literal itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Literal(Literal),
    Conjunction(Vec<Literal>),
    Rule { premise: Vec<Literal>, conclusion: Atom },
}

impl Formula {
    pub fn atom(a: usize) -> Self {
        Formula::Literal(Literal::pos(a))
    }

    pub fn conjunction(mut lits: Vec<Literal>) -> Result<Self, EntailmentError> {
        match lits.len() {
            0 => Err(EntailmentError::EmptyConjunction),
            1 => Ok(Formula::Literal(lits[0])),
            _ => {
                lits.sort();
                Ok(Formula::Conjunction(lits))
            }
        }
    }

    pub fn rule(mut premise: Vec<Literal>, conclusion: usize) -> Result<Self, EntailmentError> {
        if premise.is_empty() {
            return Err(EntailmentError::EmptyConjunction);
        }
        premise.sort();
        Ok(Formula::Rule { premise, conclusion: Atom(conclusion) })
    }

    /// The literals of a literal or conjunction; `None` for rules.
    pub fn conjuncts(&self) -> Option<&[Literal]> {
        match self {
            Formula::Literal(l) => Some(std::slice::from_ref(l)),
            Formula::Conjunction(ls) => Some(ls),
            Formula::Rule { .. } => None,
        }
    }

    /// Number of literals in a conjunction or rule premise.
    pub fn arity(&self) -> usize {
        match self {
            Formula::Literal(_) => 1,
            Formula::Conjunction(ls) => ls.len(),
            Formula::Rule { premise, .. } => premise.len(),
        }
    }

    pub fn atoms(&self) -> Vec<Atom> {
        match self {
            Formula::Literal(l) => vec![l.atom],
            Formula::Conjunction(ls) => ls.iter().map(|l| l.atom).collect(),
            Formula::Rule { premise, conclusion } => {
                premise.iter().map(|l| l.atom).chain([*conclusion]).collect()
            }
        }
    }

    pub fn eval(&self, alg: &Algebra, v: &[Value]) -> Value {
        let fold = |ls: &[Literal]| ls.iter().fold(alg.top(), |acc, l| alg.conj(acc, l.eval(alg, v)));
        match self {
            Formula::Literal(l) => l.eval(alg, v),
            Formula::Conjunction(ls) => fold(ls),
            Formula::Rule { premise, conclusion } => alg.residuum(fold(premise), v[conclusion.0]),
        }
    }

    pub fn render(&self, atoms: &[String]) -> String {
        let join = |ls: &[Literal]| ls.iter().map(|l| l.render(atoms)).collect::<Vec<_>>().join(" & ");
        match self {
            Formula::Literal(l) => l.render(atoms),
            Formula::Conjunction(ls) => join(ls),
            Formula::Rule { premise, conclusion } => {
                format!("{} -> {}", join(premise), Literal { atom: *conclusion, negated: false }.render(atoms))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sentence {
    pub formula: Formula,
    pub weight: Interval,
}

impl Sentence {
    pub fn new(formula: Formula, weight: Interval) -> Self {
        Sentence { formula, weight }
    }

    pub fn render(&self, alg: &Algebra, atoms: &[String]) -> String {
        format!("({}, {})", self.formula.render(atoms), alg.label_interval(self.weight))
    }
}

/// Values of the atoms, indexed by atom.
pub type Valuation = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeModule {
    pub algebra: Algebra,
    pub atoms: Vec<String>,
    pub sentences: Vec<Sentence>,
}

impl KnowledgeModule {
    pub fn new(algebra: Algebra, atoms: Vec<String>, sentences: Vec<Sentence>) -> Result<Self, EntailmentError> {
        let km = KnowledgeModule { algebra, atoms, sentences };
        for s in &km.sentences {
            km.check_sentence(s)?;
        }
        Ok(km)
    }

    pub fn check_sentence(&self, s: &Sentence) -> Result<(), EntailmentError> {
        check_sentence(&self.algebra, self.atoms.len(), s)
    }

    pub fn atom(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == name)
    }
}

fn check_sentence(alg: &Algebra, atoms: usize, s: &Sentence) -> Result<(), EntailmentError> {
    if let Some(a) = s.formula.atoms().into_iter().find(|a| a.0 >= atoms) {
        return Err(EntailmentError::UndeclaredAtom(a.0));
    }
    if !s.weight.fits(alg.len()) {
        return Err(EntailmentError::BadWeight { lo: s.weight.lo(), hi: s.weight.hi(), len: alg.len() });
    }
    Ok(())
}

pub fn satisfies(alg: &Algebra, v: &[Value], s: &Sentence) -> Result<bool, EntailmentError> {
    if let Some(a) = s.formula.atoms().into_iter().find(|a| a.0 >= v.len()) {
        return Err(EntailmentError::UndeclaredAtom(a.0));
    }
    Ok(s.weight.contains(s.formula.eval(alg, v)))
}

/// All valuations satisfying a premise set, by exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct Models {
    algebra: Algebra,
    valuations: Vec<Valuation>,
}

impl Models {
    pub fn of(km: &KnowledgeModule, cap: usize) -> Result<Self, EntailmentError> {
        Models::of_sentences(&km.algebra, km.atoms.len(), &km.sentences, cap)
    }

    pub fn of_sentences(
        alg: &Algebra,
        atoms: usize,
        gamma: &[Sentence],
        cap: usize,
    ) -> Result<Self, EntailmentError> {
        if atoms > cap {
            return Err(EntailmentError::SignatureTooLarge { atoms, n: alg.len(), cap });
        }
        for s in gamma {
            check_sentence(alg, atoms, s)?;
        }
        let n = alg.len();
        let mut valuations = vec![];
        let mut v = vec![0; atoms];
        loop {
            if gamma.iter().all(|s| s.weight.contains(s.formula.eval(alg, &v))) {
                valuations.push(v.clone());
            }
            let Some(k) = (0..atoms).find(|&k| v[k] + 1 < n) else { break };
            v[k] += 1;
            v[..k].fill(0);
        }
        Ok(Models { algebra: alg.clone(), valuations })
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn is_empty(&self) -> bool {
        self.valuations.is_empty()
    }

    pub fn entails(&self, s: &Sentence) -> bool {
        self.valuations.iter().all(|v| s.weight.contains(s.formula.eval(&self.algebra, v)))
    }

    /// Smallest interval containing every model value of `f`; `None` without models.
    pub fn tightest(&self, f: &Formula) -> Option<Interval> {
        let vals = self.valuations.iter().map(|v| f.eval(&self.algebra, v));
        let (lo, hi) = vals.fold((usize::MAX, 0), |(lo, hi), x| (lo.min(x), hi.max(x)));
        Interval::new(lo, hi)
    }
}

pub fn semantic_entails(km: &KnowledgeModule, s: &Sentence) -> Result<bool, EntailmentError> {
    semantic_entails_capped(km, s, DEFAULT_ATOM_CAP)
}

pub fn semantic_entails_capped(km: &KnowledgeModule, s: &Sentence, cap: usize) -> Result<bool, EntailmentError> {
    km.check_sentence(s)?;
    Ok(Models::of(km, cap)?.entails(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpRule {
    /// `(p,V1), (p->q,V2) |- (q, T*(V1,V2))`
    #[default]
    Modified,
    /// Exact modus ponens: the hull of every consistent `q` value.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EngineConfig {
    pub mp: MpRule,
    /// Largest conjunction built by and-introduction. Defaults to the largest
    /// arity among the premises, and at least 2.
    pub max_arity: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleTag {
    /// Member of the premise set, by index.
    #[serde(rename = "premise")]
    Premise(usize),
    #[serde(rename = "RI-1")]
    Weakening,
    #[serde(rename = "RI-2")]
    NotIntro,
    #[serde(rename = "RI-3")]
    AndIntro,
    #[serde(rename = "RI-4'")]
    ModifiedMp,
    #[serde(rename = "RI-4")]
    StrictMp,
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleTag::Premise(i) => write!(f, "premise {i}"),
            RuleTag::Weakening => f.write_str("RI-1"),
            RuleTag::NotIntro => f.write_str("RI-2"),
            RuleTag::AndIntro => f.write_str("RI-3"),
            RuleTag::ModifiedMp => f.write_str("RI-4'"),
            RuleTag::StrictMp => f.write_str("RI-4"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: RuleTag,
    pub premises: Vec<usize>,
    pub sentence: Sentence,
}

/// Weight of a strict modus ponens conclusion.
pub fn strict_mp(alg: &Algebra, v1: Interval, v2: Interval) -> Option<Interval> {
    let mut out: Option<Interval> = None;
    for a in v1.lo()..=v1.hi() {
        for b in v2.lo()..=v2.hi() {
            if let Some(i) = alg.mp_interval(a, b) {
                out = Some(out.map_or(i, |o| o.hull(&i)));
            }
        }
    }
    out
}

/// Applies an inference rule to premise sentences. `None` when the rule does
/// not fit the premises.
pub fn apply_rule(alg: &Algebra, rule: RuleTag, premises: &[&Sentence]) -> Option<Sentence> {
    match (rule, premises) {
        (RuleTag::NotIntro, [s]) => match s.formula {
            Formula::Literal(l) => Some(Sentence::new(Formula::Literal(l.negate()), alg.neg_star(s.weight))),
            _ => None,
        },
        (RuleTag::AndIntro, [x, y]) => {
            let mut lits = x.formula.conjuncts()?.to_vec();
            lits.extend_from_slice(y.formula.conjuncts()?);
            let f = Formula::conjunction(lits).ok()?;
            Some(Sentence::new(f, alg.conj_star(x.weight, y.weight)))
        }
        (RuleTag::ModifiedMp | RuleTag::StrictMp, [p, r]) => {
            let Formula::Rule { premise, conclusion } = &r.formula else { return None };
            if p.formula.conjuncts()? != premise.as_slice() {
                return None;
            }
            let weight = if rule == RuleTag::ModifiedMp {
                alg.conj_star(p.weight, r.weight)
            } else {
                strict_mp(alg, p.weight, r.weight)?
            };
            Some(Sentence::new(Formula::atom(conclusion.0), weight))
        }
        _ => None,
    }
}

/// A derivation: steps in dependency order, the last one concluding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub steps: Vec<Step>,
}

impl DerivationTrace {
    pub fn conclusion(&self) -> &Sentence {
        &self.steps.last().expect("traces are nonempty").sentence
    }

    pub fn uses(&self, rule: RuleTag) -> bool {
        self.steps.iter().any(|s| s.rule == rule)
    }

    /// Indices into the premise set used as leaves.
    pub fn leaves(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter_map(|s| match s.rule {
                RuleTag::Premise(i) => Some(i),
                _ => None,
            })
            .collect()
    }

    /// Recomputes every step from its premises.
    pub fn replay(&self, alg: &Algebra, gamma: &[Sentence]) -> Result<(), EntailmentError> {
        for (k, step) in self.steps.iter().enumerate() {
            if step.premises.iter().any(|&p| p >= k) {
                return Err(EntailmentError::ReplayMismatch(k));
            }
            let prem: Vec<&Sentence> = step.premises.iter().map(|&p| &self.steps[p].sentence).collect();
            let ok = match step.rule {
                RuleTag::Premise(i) => {
                    let s = gamma.get(i).ok_or(EntailmentError::UnknownPremise(k))?;
                    *s == step.sentence && prem.is_empty()
                }
                RuleTag::Weakening => match prem.as_slice() {
                    [p] => p.formula == step.sentence.formula && p.weight.is_subset_of(&step.sentence.weight),
                    _ => false,
                },
                rule => apply_rule(alg, rule, &prem).as_ref() == Some(&step.sentence),
            };
            if !ok {
                return Err(EntailmentError::ReplayMismatch(k));
            }
        }
        Ok(())
    }
}

/// Saturation of a premise set: for every formula, the antichain (under
/// inclusion) of the least derivable weights.
#[derive(Debug, Clone)]
pub struct Closure {
    algebra: Algebra,
    gamma: Vec<Sentence>,
    mp: MpRule,
    max_arity: usize,
    steps: Vec<Step>,
    minimal: BTreeMap<Formula, Vec<(Interval, usize)>>,
    arity_bound_hit: bool,
    mp_inconsistent: bool,
}

impl Closure {
    pub fn derive(alg: &Algebra, gamma: &[Sentence], config: EngineConfig) -> Self {
        let max_arity = config
            .max_arity
            .unwrap_or_else(|| gamma.iter().map(|s| s.formula.arity()).max().unwrap_or(1).max(2));
        let mut c = Closure {
            algebra: alg.clone(),
            gamma: gamma.to_vec(),
            mp: config.mp,
            max_arity,
            steps: vec![],
            minimal: BTreeMap::new(),
            arity_bound_hit: false,
            mp_inconsistent: false,
        };
        let mut queue = VecDeque::new();
        for (i, s) in gamma.iter().enumerate() {
            let step = Step { rule: RuleTag::Premise(i), premises: vec![], sentence: s.clone() };
            queue.extend(c.insert(step));
        }
        while let Some(id) = queue.pop_front() {
            if !c.is_live(id) {
                continue;
            }
            for step in c.consequences(id) {
                queue.extend(c.insert(step));
            }
        }
        c
    }

    fn is_live(&self, id: usize) -> bool {
        let s = &self.steps[id].sentence;
        self.minimal.get(&s.formula).is_some_and(|v| v.iter().any(|&(_, k)| k == id))
    }

    fn insert(&mut self, step: Step) -> Option<usize> {
        let Sentence { formula, weight } = &step.sentence;
        let entry = self.minimal.entry(formula.clone()).or_default();
        if entry.iter().any(|(w, _)| w.is_subset_of(weight)) {
            return None;
        }
        entry.retain(|(w, _)| !weight.is_subset_of(w));
        let id = self.steps.len();
        entry.push((*weight, id));
        self.steps.push(step);
        Some(id)
    }

    fn consequences(&mut self, id: usize) -> Vec<Step> {
        let alg = &self.algebra;
        let new = &self.steps[id].sentence;
        let mp_tag = match self.mp {
            MpRule::Modified => RuleTag::ModifiedMp,
            MpRule::Strict => RuleTag::StrictMp,
        };
        let mut out = vec![];
        let mut mp_failed = false;
        let mut push_mp = |p: usize, r: usize, out: &mut Vec<Step>| {
            let prem = [&self.steps[p].sentence, &self.steps[r].sentence];
            match apply_rule(alg, mp_tag, &prem) {
                Some(s) => out.push(Step { rule: mp_tag, premises: vec![p, r], sentence: s }),
                None => mp_failed = true,
            }
        };
        if let Some(s) = apply_rule(alg, RuleTag::NotIntro, &[new]) {
            out.push(Step { rule: RuleTag::NotIntro, premises: vec![id], sentence: s });
        }
        let mut hit = false;
        match &new.formula {
            Formula::Rule { premise, .. } => {
                let key = Formula::conjunction(premise.clone()).expect("nonempty premise");
                for &(_, p) in self.minimal.get(&key).into_iter().flatten() {
                    push_mp(p, id, &mut out);
                }
            }
            f => {
                let arity = f.arity();
                for (g, ws) in &self.minimal {
                    match g {
                        Formula::Rule { premise, .. } => {
                            if f.conjuncts() == Some(premise.as_slice()) {
                                for &(_, r) in ws {
                                    push_mp(id, r, &mut out);
                                }
                            }
                        }
                        g if arity + g.arity() > self.max_arity => hit = true,
                        _ => {
                            for &(_, k) in ws {
                                let prem = [new, &self.steps[k].sentence];
                                let s = apply_rule(alg, RuleTag::AndIntro, &prem).expect("conjunctive premises");
                                out.push(Step { rule: RuleTag::AndIntro, premises: vec![id, k], sentence: s });
                            }
                        }
                    }
                }
            }
        }
        self.arity_bound_hit |= hit;
        self.mp_inconsistent |= mp_failed;
        out
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn gamma(&self) -> &[Sentence] {
        &self.gamma
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    /// Some and-introduction was skipped because of the arity bound.
    pub fn arity_bound_hit(&self) -> bool {
        self.arity_bound_hit
    }

    /// Strict modus ponens met premise weights no valuation can realize.
    pub fn mp_inconsistent(&self) -> bool {
        self.mp_inconsistent
    }

    pub fn minimal(&self, f: &Formula) -> Vec<Interval> {
        let mut v: Vec<Interval> = self.minimal.get(f).into_iter().flatten().map(|&(w, _)| w).collect();
        v.sort();
        v
    }

    /// Every minimal derivable sentence, ordered by formula then weight.
    pub fn sentences(&self) -> Vec<Sentence> {
        self.minimal
            .iter()
            .flat_map(|(f, ws)| {
                let mut ws: Vec<Interval> = ws.iter().map(|&(w, _)| w).collect();
                ws.sort();
                ws.into_iter().map(move |w| Sentence::new(f.clone(), w))
            })
            .collect()
    }

    pub fn derives(&self, s: &Sentence) -> bool {
        self.support(s).is_some()
    }

    fn support(&self, s: &Sentence) -> Option<usize> {
        let ws = self.minimal.get(&s.formula)?;
        ws.iter().filter(|(w, _)| w.is_subset_of(&s.weight)).map(|&(_, id)| id).min()
    }

    /// A derivation of `s`, ending in a weakening step when the stored
    /// weight is strictly smaller.
    pub fn trace(&self, s: &Sentence) -> Option<DerivationTrace> {
        let root = self.support(s)?;
        let mut needed = vec![false; root + 1];
        let mut stack = vec![root];
        while let Some(k) = stack.pop() {
            if !needed[k] {
                needed[k] = true;
                stack.extend(&self.steps[k].premises);
            }
        }
        let mut renumber = vec![usize::MAX; root + 1];
        let mut steps = vec![];
        for k in (0..=root).filter(|&k| needed[k]) {
            renumber[k] = steps.len();
            let mut step = self.steps[k].clone();
            step.premises.iter_mut().for_each(|p| *p = renumber[*p]);
            steps.push(step);
        }
        if self.steps[root].sentence.weight != s.weight {
            let premises = vec![steps.len() - 1];
            steps.push(Step { rule: RuleTag::Weakening, premises, sentence: s.clone() });
        }
        Some(DerivationTrace { steps })
    }
}

/// Decides `km |- s`, returning a derivation when it holds.
pub fn entails(km: &KnowledgeModule, s: &Sentence) -> Result<Option<DerivationTrace>, EntailmentError> {
    entails_with(km, s, EngineConfig::default())
}

/// As [`entails`]; the arity bound is raised to cover the goal.
pub fn entails_with(
    km: &KnowledgeModule,
    s: &Sentence,
    mut config: EngineConfig,
) -> Result<Option<DerivationTrace>, EntailmentError> {
    km.check_sentence(s)?;
    let default = km.sentences.iter().map(|s| s.formula.arity()).max().unwrap_or(1).max(2);
    config.max_arity = Some(config.max_arity.unwrap_or(default).max(s.formula.arity()));
    Ok(Closure::derive(&km.algebra, &km.sentences, config).trace(s))
}
