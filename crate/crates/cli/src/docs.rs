//! JSON documents: algebras, chains, renamings, knowledge modules, bridges
//! and session requests. Values may be written as chain indices or labels;
//! canonical output always uses indices.

use std::collections::BTreeMap;

use mvl_core::entailment::{Formula, KnowledgeModule, Literal, Sentence};
use mvl_core::{Algebra, Chain, ConjTable, Interval, Renaming};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

/// A malformed document, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{message} (at {})", if .pointer.is_empty() { "/" } else { .pointer.as_str() })]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    pub fn at(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { pointer: pointer.into(), message: message.into() }
    }

    fn nested(self, prefix: &str) -> Self {
        SchemaError { pointer: format!("{prefix}{}", self.pointer), message: self.message }
    }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|seg| match seg {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{}", escape(key))),
            Segment::Enum { .. } | Segment::Unknown => None,
        })
        .collect()
}

/// Deserializes with the location of the first error.
pub fn from_json<T: DeserializeOwned>(json: &Json) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(json).map_err(|e| SchemaError::at(pointer_of(e.path()), e.inner().to_string()))
}

pub fn parse_text(text: &str) -> Result<Json, SchemaError> {
    serde_json::from_str(text).map_err(|e| SchemaError::at("", format!("invalid JSON: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueRef {
    Index(usize),
    Label(String),
}

fn value(chain: &Chain, v: &ValueRef, pointer: &str) -> Result<usize, SchemaError> {
    match v {
        ValueRef::Index(i) if *i < chain.len() => Ok(*i),
        ValueRef::Index(i) => Err(SchemaError::at(pointer, format!("index {i} outside a {}-element chain", chain.len()))),
        ValueRef::Label(l) => chain
            .index_of(l)
            .ok_or_else(|| SchemaError::at(pointer, format!("`{l}` is not a label of the chain"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightDoc {
    Interval([ValueRef; 2]),
    Point(ValueRef),
}

pub fn weight(chain: &Chain, w: &WeightDoc, pointer: &str) -> Result<Interval, SchemaError> {
    match w {
        WeightDoc::Point(v) => Ok(Interval::point(value(chain, v, pointer)?)),
        WeightDoc::Interval([lo, hi]) => {
            let lo = value(chain, lo, &format!("{pointer}/0"))?;
            let hi = value(chain, hi, &format!("{pointer}/1"))?;
            Interval::new(lo, hi).ok_or_else(|| SchemaError::at(pointer, "interval bounds are reversed"))
        }
    }
}

fn weight_doc(i: Interval) -> WeightDoc {
    WeightDoc::Interval([ValueRef::Index(i.lo()), ValueRef::Index(i.hi())])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    pub chain: Vec<String>,
    pub conj: Vec<Vec<ValueRef>>,
}

fn chain(labels: &[String], pointer: &str) -> Result<Chain, SchemaError> {
    Chain::new(labels.to_vec()).map_err(|e| SchemaError::at(pointer, e.to_string()))
}

fn table(chain: &Chain, rows: &[Vec<ValueRef>], pointer: &str) -> Result<ConjTable, SchemaError> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .iter()
            .enumerate()
            .map(|(j, v)| value(chain, v, &format!("{pointer}/{i}/{j}")))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    ConjTable::from_rows(out).map_err(|e| SchemaError::at(pointer, e.to_string()))
}

impl AlgebraDoc {
    /// Chain and table, without checking the axioms.
    pub fn parts(&self) -> Result<(Chain, ConjTable), SchemaError> {
        let c = chain(&self.chain, "/chain")?;
        let t = table(&c, &self.conj, "/conj")?;
        Ok((c, t))
    }

    pub fn algebra(&self) -> Result<Algebra, SchemaError> {
        let (c, t) = self.parts()?;
        Algebra::new(c, t).map_err(|e| SchemaError::at("/conj", e.to_string()))
    }

    pub fn of(alg: &Algebra) -> Self {
        AlgebraDoc {
            chain: alg.chain().labels().to_vec(),
            conj: alg.conj_table().rows().into_iter().map(|r| r.into_iter().map(ValueRef::Index).collect()).collect(),
        }
    }
}

/// A target chain, optionally with a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainDoc {
    Labels(Vec<String>),
    Object {
        chain: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        conj: Option<Vec<Vec<ValueRef>>>,
    },
}

impl ChainDoc {
    pub fn parts(&self) -> Result<(Chain, Option<ConjTable>), SchemaError> {
        match self {
            ChainDoc::Labels(l) => Ok((chain(l, "")?, None)),
            ChainDoc::Object { chain: l, conj } => {
                let c = chain(l, "/chain")?;
                let t = conj.as_ref().map(|rows| table(&c, rows, "/conj")).transpose()?;
                Ok((c, t))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageDoc {
    List(Vec<WeightDoc>),
    /// Keyed by source index, or by source label for non-numeric keys.
    Map(BTreeMap<String, WeightDoc>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RenamingDoc {
    Wrapped {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(rename = "toChain", default, skip_serializing_if = "Option::is_none")]
        to_chain: Option<Vec<String>>,
        image: ImageDoc,
    },
    Bare(ImageDoc),
}

fn source_key(source: &Chain, key: &str) -> Option<usize> {
    match key.parse::<usize>() {
        Ok(i) => (i < source.len()).then_some(i),
        Err(_) => source.index_of(key),
    }
}

impl RenamingDoc {
    pub fn renaming(&self, source: &Chain, target: &Chain) -> Result<Renaming, SchemaError> {
        let (image, prefix) = match self {
            RenamingDoc::Wrapped { image, to_chain, .. } => {
                if let Some(labels) = to_chain {
                    if labels.as_slice() != target.labels() {
                        return Err(SchemaError::at("/toChain", "does not match the target chain"));
                    }
                }
                (image, "/image")
            }
            RenamingDoc::Bare(image) => (image, ""),
        };
        let images = match image {
            ImageDoc::List(ws) => {
                if ws.len() != source.len() {
                    let msg = format!("{} images for a {}-element source chain", ws.len(), source.len());
                    return Err(SchemaError::at(prefix, msg));
                }
                ws.iter()
                    .enumerate()
                    .map(|(i, w)| weight(target, w, &format!("{prefix}/{i}")))
                    .collect::<Result<Vec<_>, _>>()?
            }
            ImageDoc::Map(m) => {
                let mut slots: Vec<Option<Interval>> = vec![None; source.len()];
                for (k, w) in m {
                    let pointer = format!("{prefix}/{}", escape(k));
                    let i = source_key(source, k).ok_or_else(|| SchemaError::at(&pointer, "not a source value"))?;
                    if slots[i].is_some() {
                        return Err(SchemaError::at(pointer, "value mapped twice"));
                    }
                    slots[i] = Some(weight(target, w, &pointer)?);
                }
                slots
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| s.ok_or_else(|| SchemaError::at(prefix, format!("no image for `{}`", source.label(i)))))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        Ok(Renaming::new(images))
    }

    /// Canonical form: keyed by source index.
    pub fn of(f: &Renaming, target: Option<&Chain>) -> Self {
        RenamingDoc::Wrapped {
            from: None,
            to_chain: target.map(|c| c.labels().to_vec()),
            image: ImageDoc::Map(f.images().iter().enumerate().map(|(i, &w)| (i.to_string(), weight_doc(w))).collect()),
        }
    }
}

/// Either a reference (workspace id or file path) or an inline document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref<T> {
    Id(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceDoc {
    #[serde(rename = "if", default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub then: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_conj: Option<Vec<String>>,
    pub weight: WeightDoc,
}

fn atom(atoms: &[String], name: &str, pointer: &str) -> Result<usize, SchemaError> {
    atoms
        .iter()
        .position(|a| a == name)
        .ok_or_else(|| SchemaError::at(pointer, format!("atom `{name}` is not declared")))
}

fn literal(atoms: &[String], text: &str, pointer: &str) -> Result<Literal, SchemaError> {
    let text = text.trim();
    match text.strip_prefix('!') {
        Some(rest) => literal(atoms, rest, pointer).map(Literal::negate),
        None => Ok(Literal::pos(atom(atoms, text, pointer)?)),
    }
}

fn literals(atoms: &[String], names: &[String], pointer: &str) -> Result<Vec<Literal>, SchemaError> {
    if names.is_empty() {
        return Err(SchemaError::at(pointer, "needs at least one literal"));
    }
    names.iter().enumerate().map(|(i, n)| literal(atoms, n, &format!("{pointer}/{i}"))).collect()
}

fn literal_name(atoms: &[String], l: &Literal) -> String {
    let name = &atoms[l.atom.0];
    if l.negated {
        format!("!{name}")
    } else {
        name.clone()
    }
}

impl SentenceDoc {
    pub fn sentence(&self, atoms: &[String], chain: &Chain, pointer: &str) -> Result<Sentence, SchemaError> {
        let formula = match (&self.premise, &self.then, &self.fact, &self.fact_conj) {
            (Some(p), Some(c), None, None) => {
                let premise = literals(atoms, p, &format!("{pointer}/if"))?;
                let conclusion = atom(atoms, c, &format!("{pointer}/then"))?;
                Formula::rule(premise, conclusion).expect("nonempty premise")
            }
            (None, None, Some(f), None) => Formula::Literal(literal(atoms, f, &format!("{pointer}/fact"))?),
            (None, None, None, Some(fs)) => {
                Formula::conjunction(literals(atoms, fs, &format!("{pointer}/fact_conj"))?).expect("nonempty")
            }
            _ => {
                let msg = "expected exactly one of `if`+`then`, `fact`, or `fact_conj`";
                return Err(SchemaError::at(pointer, msg));
            }
        };
        Ok(Sentence::new(formula, weight(chain, &self.weight, &format!("{pointer}/weight"))?))
    }

    pub fn of(s: &Sentence, atoms: &[String]) -> Self {
        let mut doc = SentenceDoc { premise: None, then: None, fact: None, fact_conj: None, weight: weight_doc(s.weight) };
        match &s.formula {
            Formula::Literal(l) => doc.fact = Some(literal_name(atoms, l)),
            Formula::Conjunction(ls) => doc.fact_conj = Some(ls.iter().map(|l| literal_name(atoms, l)).collect()),
            Formula::Rule { premise, conclusion } => {
                doc.premise = Some(premise.iter().map(|l| literal_name(atoms, l)).collect());
                doc.then = Some(atoms[conclusion.0].clone());
            }
        }
        doc
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub atoms: Vec<String>,
    pub algebra: Ref<AlgebraDoc>,
    #[serde(default)]
    pub sentences: Vec<SentenceDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeDoc {
    pub source: Ref<ModuleDoc>,
    pub target: Ref<ModuleDoc>,
    pub renaming: Ref<RenamingDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDoc {
    pub source: Ref<AlgebraDoc>,
    /// A chain, or a chain with the proposed table.
    pub target: Ref<ChainDoc>,
    pub renaming: Ref<RenamingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration_cap: Option<usize>,
}

/// Looks up referenced documents.
pub trait Resolver {
    fn fetch(&self, reference: &str) -> Result<Json, String>;
}

/// Resolves nothing; every document must be inline.
pub struct NoRefs;

impl Resolver for NoRefs {
    fn fetch(&self, reference: &str) -> Result<Json, String> {
        Err(format!("cannot resolve reference `{reference}`"))
    }
}

pub fn resolve<T: DeserializeOwned + Clone>(r: &Ref<T>, resolver: &dyn Resolver, pointer: &str) -> Result<T, SchemaError> {
    match r {
        Ref::Inline(t) => Ok(t.clone()),
        Ref::Id(id) => {
            let json = resolver.fetch(id).map_err(|e| SchemaError::at(pointer, e))?;
            from_json(&json).map_err(|e| SchemaError::at(pointer, format!("in `{id}`: {e}")))
        }
    }
}

pub fn algebra_from(r: &Ref<AlgebraDoc>, resolver: &dyn Resolver, pointer: &str) -> Result<Algebra, SchemaError> {
    resolve(r, resolver, pointer)?.algebra().map_err(|e| e.nested(pointer))
}

impl ModuleDoc {
    pub fn module(&self, resolver: &dyn Resolver) -> Result<KnowledgeModule, SchemaError> {
        let alg = algebra_from(&self.algebra, resolver, "/algebra")?;
        let mut seen = std::collections::HashSet::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if a.is_empty() || a.starts_with('!') || a.contains(['&', ',', '(', ')', '[', ']']) || a.contains("->") {
                return Err(SchemaError::at(format!("/atoms/{i}"), format!("`{a}` is not a valid atom name")));
            }
            if !seen.insert(a) {
                return Err(SchemaError::at(format!("/atoms/{i}"), format!("duplicate atom `{a}`")));
            }
        }
        let sentences = self
            .sentences
            .iter()
            .enumerate()
            .map(|(i, s)| s.sentence(&self.atoms, alg.chain(), &format!("/sentences/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        KnowledgeModule::new(alg, self.atoms.clone(), sentences).map_err(|e| SchemaError::at("", e.to_string()))
    }

    pub fn of(km: &KnowledgeModule, algebra: Ref<AlgebraDoc>) -> Self {
        ModuleDoc {
            atoms: km.atoms.clone(),
            algebra,
            sentences: km.sentences.iter().map(|s| SentenceDoc::of(s, &km.atoms)).collect(),
        }
    }
}

/// The target module's atoms must include the source's; sentences are
/// carried over by atom name.
pub fn align_atoms(source: &KnowledgeModule, target: &KnowledgeModule) -> Result<(), SchemaError> {
    for (i, a) in source.atoms.iter().enumerate() {
        if target.atoms.get(i) != Some(a) {
            let msg = format!("target module must declare the source atoms in the same order; `{a}` differs");
            return Err(SchemaError::at("/target", msg));
        }
    }
    Ok(())
}

/// Parses `(p & !q -> r, [a1, 1])`, `p & q, a2` and similar.
pub fn parse_sentence(text: &str, atoms: &[String], chain: &Chain) -> Result<Sentence, SchemaError> {
    let t = text.trim();
    if t.starts_with('{') {
        let doc: SentenceDoc = from_json(&parse_text(t)?)?;
        return doc.sentence(atoms, chain, "");
    }
    let t = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')).unwrap_or(t).trim();
    let (formula, w) = match t.rfind('[') {
        Some(k) => {
            let inner = t[k..].strip_prefix('[').and_then(|s| s.strip_suffix(']'));
            let inner = inner.ok_or_else(|| SchemaError::at("", "weight must end with `]`"))?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            let [lo, hi] = parts.as_slice() else {
                return Err(SchemaError::at("", "weight interval needs two bounds"));
            };
            (t[..k].trim().trim_end_matches(',').trim(), WeightDoc::Interval([label_or_index(lo), label_or_index(hi)]))
        }
        None => {
            let (f, w) = t.rsplit_once(',').ok_or_else(|| SchemaError::at("", "expected `formula, weight`"))?;
            (f.trim(), WeightDoc::Point(label_or_index(w.trim())))
        }
    };
    let formula = parse_formula(formula, atoms)?;
    Ok(Sentence::new(formula, weight(chain, &w, "/weight")?))
}

fn label_or_index(s: &str) -> ValueRef {
    ValueRef::Label(s.to_string())
}

pub fn parse_formula(text: &str, atoms: &[String]) -> Result<Formula, SchemaError> {
    let split = |s: &str| s.split('&').map(|x| x.trim().to_string()).collect::<Vec<_>>();
    match text.split_once("->") {
        Some((premise, conclusion)) => {
            let premise = literals(atoms, &split(premise), "/if")?;
            let conclusion = atom(atoms, conclusion.trim(), "/then")?;
            Ok(Formula::rule(premise, conclusion).expect("nonempty premise"))
        }
        None => Ok(Formula::conjunction(literals(atoms, &split(text), "/fact_conj")?).expect("nonempty")),
    }
}
