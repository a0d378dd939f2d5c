//! On-disk store of algebras, renamings, modules, bridges and sessions,
//! addressed by a hash of each entity's canonical JSON.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use mvl_core::generator::{Session, SessionInput};
use mvl_core::{Bridge, GeneratorError, KnowledgeModule};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::docs::{
    self, algebra_from, from_json, resolve, AlgebraDoc, BridgeDoc, ChainDoc, ModuleDoc, Ref, RenamingDoc, Resolver,
    SchemaError, SessionDoc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Algebra,
    Renaming,
    Module,
    Bridge,
    Session,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Algebra, Kind::Renaming, Kind::Module, Kind::Bridge, Kind::Session];

    pub fn prefix(self) -> &'static str {
        match self {
            Kind::Algebra => "alg",
            Kind::Renaming => "ren",
            Kind::Module => "mod",
            Kind::Bridge => "brg",
            Kind::Session => "ses",
        }
    }

    /// Directory name, also the collection name in URLs.
    pub fn plural(self) -> &'static str {
        match self {
            Kind::Algebra => "algebras",
            Kind::Renaming => "renamings",
            Kind::Module => "modules",
            Kind::Bridge => "bridges",
            Kind::Session => "sessions",
        }
    }

    pub fn from_plural(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.plural() == s || k.plural().trim_end_matches('s') == s)
    }

    pub fn of_id(id: &str) -> Option<Kind> {
        let (prefix, hash) = id.split_once('-')?;
        let ok = hash.len() == 16 && hash.bytes().all(|b| b.is_ascii_hexdigit());
        Kind::ALL.into_iter().find(|k| ok && k.prefix() == prefix)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("no entity `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("workspace I/O: {0}")]
    Io(#[from] io::Error),
}

fn transition(e: GeneratorError) -> WorkspaceError {
    WorkspaceError::Conflict(e.to_string())
}

/// Stored session: its input and the selections made so far.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionRecord {
    source: String,
    input: SessionInput,
    selections: Vec<Option<usize>>,
}

pub fn canonical(j: &Json) -> String {
    serde_json::to_string(j).expect("JSON values serialize")
}

pub fn content_id(kind: Kind, j: &Json) -> String {
    let digest = Sha256::digest(canonical(j).as_bytes());
    format!("{}-{}", kind.prefix(), &hex::encode(digest)[..16])
}

pub struct Workspace {
    root: PathBuf,
    /// Serializes every mutation, including session selections.
    write: Mutex<()>,
}

impl Workspace {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, WorkspaceError> {
        let root = root.into();
        for k in Kind::ALL {
            fs::create_dir_all(root.join(k.plural()))?;
        }
        Ok(Workspace { root, write: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, id: &str) -> Result<PathBuf, WorkspaceError> {
        let kind = Kind::of_id(id).ok_or_else(|| WorkspaceError::NotFound(id.to_string()))?;
        Ok(self.root.join(kind.plural()).join(format!("{id}.json")))
    }

    fn names_path(&self) -> PathBuf {
        self.root.join("names.json")
    }

    pub fn names(&self) -> Result<BTreeMap<String, String>, WorkspaceError> {
        match fs::read_to_string(self.names_path()) {
            Ok(s) => Ok(serde_json::from_str(&s).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e.into()),
        }
    }

    /// Resolves a name or an id to an id.
    pub fn lookup(&self, reference: &str) -> Result<String, WorkspaceError> {
        if Kind::of_id(reference).is_some() {
            return Ok(reference.to_string());
        }
        self.names()?.remove(reference).ok_or_else(|| WorkspaceError::NotFound(reference.to_string()))
    }

    pub fn get(&self, reference: &str) -> Result<Json, WorkspaceError> {
        let id = self.lookup(reference)?;
        match fs::read_to_string(self.path(&id)?) {
            Ok(s) => Ok(serde_json::from_str(&s).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(WorkspaceError::NotFound(reference.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn list(&self, kind: Kind) -> Result<Vec<String>, WorkspaceError> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join(kind.plural()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".json")).map(str::to_string))
            .filter(|id| Kind::of_id(id) == Some(kind))
            .collect();
        ids.sort();
        Ok(ids)
    }

    fn store(&self, kind: Kind, doc: &Json) -> Result<String, WorkspaceError> {
        let id = content_id(kind, doc);
        let path = self.path(&id)?;
        if !path.exists() {
            write_atomic(&path, &canonical(doc))?;
        }
        Ok(id)
    }

    fn name(&self, name: &str, id: &str) -> Result<(), WorkspaceError> {
        if Kind::of_id(name).is_some() {
            return Err(SchemaError::at("", format!("`{name}` looks like an id and cannot be a name")).into());
        }
        let mut names = self.names()?;
        names.insert(name.to_string(), id.to_string());
        write_atomic(&self.names_path(), &serde_json::to_string_pretty(&names).expect("serializable"))?;
        Ok(())
    }

    /// Validates, normalizes and stores a document; inline sub-documents are
    /// stored separately and replaced by their ids. Returns the id.
    pub fn add(&self, kind: Kind, doc: &Json, name: Option<&str>, base: Option<&Path>) -> Result<String, WorkspaceError> {
        let _guard = self.write.lock().expect("workspace lock");
        let resolver = Files { base, workspace: Some(self) };
        let id = match kind {
            Kind::Algebra => self.add_algebra(doc)?,
            Kind::Renaming => self.add_renaming(doc, &resolver)?,
            Kind::Module => self.add_module(doc, &resolver)?,
            Kind::Bridge => self.add_bridge(doc, &resolver)?,
            Kind::Session => {
                let d: SessionDoc = from_json(doc)?;
                return self.create_session_locked(&d, &resolver).map(|(id, _)| id);
            }
        };
        if let Some(n) = name {
            self.name(n, &id)?;
        }
        Ok(id)
    }

    fn add_algebra(&self, doc: &Json) -> Result<String, WorkspaceError> {
        let alg = from_json::<AlgebraDoc>(doc)?.algebra()?;
        self.store(Kind::Algebra, &crate::views::algebra(&alg))
    }

    fn algebra_ref(&self, r: &Ref<AlgebraDoc>, resolver: &dyn Resolver, pointer: &str) -> Result<String, WorkspaceError> {
        let alg = algebra_from(r, resolver, pointer)?;
        self.store(Kind::Algebra, &crate::views::algebra(&alg))
    }

    /// Renamings are checked against their source when `from` names one.
    fn add_renaming(&self, doc: &Json, resolver: &dyn Resolver) -> Result<String, WorkspaceError> {
        let d: RenamingDoc = from_json(doc)?;
        let (from, to_chain) = match &d {
            RenamingDoc::Wrapped { from, to_chain, .. } => (from.clone(), to_chain.clone()),
            RenamingDoc::Bare(_) => (None, None),
        };
        let canonical = match (&from, &to_chain) {
            (Some(from), Some(labels)) => {
                let source = algebra_from(&Ref::Id(from.clone()), resolver, "/from")?;
                let target = mvl_core::Chain::new(labels.clone()).map_err(|e| SchemaError::at("/toChain", e.to_string()))?;
                let f = d.renaming(source.chain(), &target)?;
                let from = self.store(Kind::Algebra, &crate::views::algebra(&source))?;
                match RenamingDoc::of(&f, Some(&target)) {
                    RenamingDoc::Wrapped { to_chain, image, .. } => RenamingDoc::Wrapped { from: Some(from), to_chain, image },
                    bare => bare,
                }
            }
            (Some(_), None) => return Err(SchemaError::at("/toChain", "required together with `from`").into()),
            _ => d,
        };
        self.store(Kind::Renaming, &serde_json::to_value(canonical).expect("serializable"))
    }

    fn add_module(&self, doc: &Json, resolver: &dyn Resolver) -> Result<String, WorkspaceError> {
        let d: ModuleDoc = from_json(doc)?;
        let km = d.module(resolver)?;
        let alg = self.algebra_ref(&d.algebra, resolver, "/algebra")?;
        let canonical = ModuleDoc::of(&km, Ref::Id(alg));
        self.store(Kind::Module, &serde_json::to_value(canonical).expect("serializable"))
    }

    fn add_bridge(&self, doc: &Json, resolver: &dyn Resolver) -> Result<String, WorkspaceError> {
        let d: BridgeDoc = from_json(doc)?;
        let parts = bridge_parts(&d, resolver)?;
        let source = self.add_module(&serde_json::to_value(resolve(&d.source, resolver, "/source")?).expect("ok"), resolver)?;
        let target = self.add_module(&serde_json::to_value(resolve(&d.target, resolver, "/target")?).expect("ok"), resolver)?;
        let renaming = self.store(Kind::Renaming, &crate::views::renaming(parts.bridge.renaming(), parts.bridge.target()))?;
        self.store(Kind::Bridge, &json!({ "source": source, "target": target, "renaming": renaming }))
    }

    /// Ids referring to `id`.
    pub fn referrers(&self, id: &str) -> Result<Vec<String>, WorkspaceError> {
        let mut out = vec![];
        for k in Kind::ALL {
            for other in self.list(k)? {
                if other != id && mentions(&self.get(&other)?, id) {
                    out.push(other);
                }
            }
        }
        Ok(out)
    }

    pub fn delete(&self, reference: &str) -> Result<(), WorkspaceError> {
        let _guard = self.write.lock().expect("workspace lock");
        let id = self.lookup(reference)?;
        let path = self.path(&id)?;
        if !path.exists() {
            return Err(WorkspaceError::NotFound(reference.to_string()));
        }
        let refs = self.referrers(&id)?;
        if !refs.is_empty() {
            return Err(WorkspaceError::Conflict(format!("`{id}` is referenced by {}", refs.join(", "))));
        }
        fs::remove_file(path)?;
        let mut names = self.names()?;
        let before = names.len();
        names.retain(|_, v| v != &id);
        if names.len() != before {
            write_atomic(&self.names_path(), &serde_json::to_string_pretty(&names).expect("serializable"))?;
        }
        Ok(())
    }

    pub fn create_session(&self, doc: &SessionDoc, base: Option<&Path>) -> Result<(String, Session), WorkspaceError> {
        let _guard = self.write.lock().expect("workspace lock");
        self.create_session_locked(doc, &Files { base, workspace: Some(self) })
    }

    fn create_session_locked(&self, doc: &SessionDoc, resolver: &dyn Resolver) -> Result<(String, Session), WorkspaceError> {
        let input = session_input(doc, resolver)?;
        let session = Session::start(input.clone()).map_err(|e| SchemaError::at("", e.to_string()))?;
        let source = self.store(Kind::Algebra, &crate::views::algebra(&input.source))?;
        let record = SessionRecord { source, input, selections: vec![] };
        let base = serde_json::to_value(&record).expect("serializable");
        // Identical inputs get successive ids so each session starts fresh.
        let id = (0u64..)
            .map(|n| content_id(Kind::Session, &json!({ "session": base, "n": n })))
            .find(|id| self.path(id).map(|p| !p.exists()).unwrap_or(false))
            .expect("an unused id");
        write_atomic(&self.path(&id)?, &canonical(&base))?;
        Ok((id, session))
    }

    fn record(&self, id: &str) -> Result<SessionRecord, WorkspaceError> {
        if Kind::of_id(id) != Some(Kind::Session) {
            return Err(WorkspaceError::NotFound(id.to_string()));
        }
        let j = self.get(id)?;
        serde_json::from_value(j).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e).into())
    }

    pub fn session(&self, id: &str) -> Result<Session, WorkspaceError> {
        let r = self.record(id)?;
        Session::replay(r.input, &r.selections).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e).into())
    }

    pub fn select(&self, id: &str, candidate: Option<usize>) -> Result<Session, WorkspaceError> {
        let _guard = self.write.lock().expect("workspace lock");
        let mut r = self.record(id)?;
        let mut s = Session::replay(r.input.clone(), &r.selections)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        s.select(candidate).map_err(transition)?;
        r.selections.push(candidate);
        write_atomic(&self.path(id)?, &canonical(&serde_json::to_value(&r).expect("serializable")))?;
        Ok(s)
    }
}

fn mentions(j: &Json, id: &str) -> bool {
    match j {
        Json::String(s) => s == id,
        Json::Array(xs) => xs.iter().any(|x| mentions(x, id)),
        Json::Object(m) => m.values().any(|x| mentions(x, id)),
        _ => false,
    }
}

fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, path)
}

/// Resolves references as workspace ids or names first, then as file paths
/// relative to `base`. Without a base, files are never read.
pub struct Files<'a> {
    pub base: Option<&'a Path>,
    pub workspace: Option<&'a Workspace>,
}

impl Resolver for Files<'_> {
    fn fetch(&self, reference: &str) -> Result<Json, String> {
        if let Some(ws) = self.workspace {
            match ws.get(reference) {
                Ok(j) => return Ok(j),
                Err(WorkspaceError::NotFound(_)) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
        let Some(base) = self.base else {
            return Err(format!("no entity `{reference}`"));
        };
        let path = base.join(reference);
        let text = fs::read_to_string(&path).map_err(|e| format!("cannot resolve `{reference}`: {e}"))?;
        docs::parse_text(&text).map_err(|e| format!("`{reference}`: {e}"))
    }
}

pub struct BridgeParts {
    pub source: KnowledgeModule,
    pub target: KnowledgeModule,
    pub bridge: Bridge,
}

/// Builds a bridge; the renaming must be a quasi-morphism and the target
/// module must declare the source atoms.
pub fn bridge_parts(d: &BridgeDoc, resolver: &dyn Resolver) -> Result<BridgeParts, SchemaError> {
    let module = |r: &Ref<ModuleDoc>, p: &str| -> Result<KnowledgeModule, SchemaError> {
        resolve(r, resolver, p)?.module(resolver).map_err(|e| SchemaError::at(p, e.to_string()))
    };
    let source = module(&d.source, "/source")?;
    let target = module(&d.target, "/target")?;
    docs::align_atoms(&source, &target)?;
    let f = resolve(&d.renaming, resolver, "/renaming")?
        .renaming(source.algebra.chain(), target.algebra.chain())
        .map_err(|e| SchemaError::at(format!("/renaming{}", e.pointer), e.message))?;
    let bridge = Bridge::new(source.algebra.clone(), target.algebra.clone(), f)
        .map_err(|e| SchemaError::at("/renaming", e.to_string()))?;
    Ok(BridgeParts { source, target, bridge })
}

pub fn session_input(d: &SessionDoc, resolver: &dyn Resolver) -> Result<SessionInput, SchemaError> {
    let source = algebra_from(&d.source, resolver, "/source")?;
    let target: ChainDoc = resolve(&d.target, resolver, "/target")?;
    let (chain, table) = target.parts().map_err(|e| SchemaError::at(format!("/target{}", e.pointer), e.message))?;
    let f = resolve(&d.renaming, resolver, "/renaming")?
        .renaming(source.chain(), &chain)
        .map_err(|e| SchemaError::at(format!("/renaming{}", e.pointer), e.message))?;
    f.check_shape(source.len(), chain.len()).map_err(|e| SchemaError::at("/renaming", e.to_string()))?;
    let mut input = SessionInput::new(source, chain, table, f);
    if let Some(cap) = d.enumeration_cap {
        input.enumeration_cap = cap;
    }
    Ok(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn luk4() -> Json {
        json!({"chain": ["0", "a1", "a2", "1"], "conj": [[0,0,0,0],[0,0,0,1],[0,0,1,2],[0,1,2,3]]})
    }

    #[test]
    fn ids_are_content_addressed() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let a = ws.add(Kind::Algebra, &luk4(), Some("luk4"), None).unwrap();
        let labelled = json!({"chain": ["0", "a1", "a2", "1"], "conj": [[0,0,0,0],[0,0,0,"a1"],[0,0,"a1","a2"],[0,1,2,3]]});
        assert_eq!(ws.add(Kind::Algebra, &labelled, None, None).unwrap(), a);
        assert_eq!(Kind::of_id(&a), Some(Kind::Algebra));
        assert_eq!(ws.lookup("luk4").unwrap(), a);
        assert_eq!(ws.get(&a).unwrap(), luk4());
        assert_eq!(ws.list(Kind::Algebra).unwrap(), vec![a]);
    }

    #[test]
    fn references_block_deletion() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let module = json!({"atoms": ["p", "q"], "algebra": luk4(), "sentences": [{"fact": "p", "weight": [2, 3]}]});
        let m = ws.add(Kind::Module, &module, None, None).unwrap();
        let alg = ws.get(&m).unwrap()["algebra"].as_str().unwrap().to_string();
        assert!(matches!(ws.delete(&alg), Err(WorkspaceError::Conflict(_))));
        ws.delete(&m).unwrap();
        ws.delete(&alg).unwrap();
        assert!(matches!(ws.get(&alg), Err(WorkspaceError::NotFound(_))));
        assert!(matches!(ws.delete("alg-0000000000000000"), Err(WorkspaceError::NotFound(_))));
    }

    #[test]
    fn bridges_store_their_parts() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let alg = ws.add(Kind::Algebra, &luk4(), None, None).unwrap();
        let module = json!({"atoms": ["p"], "algebra": alg, "sentences": []});
        let bridge = json!({"source": module, "target": module, "renaming": [0, 1, 2, 3]});
        let b = ws.add(Kind::Bridge, &bridge, None, None).unwrap();
        let stored = ws.get(&b).unwrap();
        for key in ["source", "target", "renaming"] {
            let id = stored[key].as_str().unwrap();
            assert!(ws.get(id).is_ok(), "{key}");
        }
        let bad = json!({"source": module, "target": module, "renaming": [0, 2, 1, 3]});
        let err = ws.add(Kind::Bridge, &bad, None, None).unwrap_err();
        assert!(matches!(err, WorkspaceError::Schema(ref e) if e.pointer == "/renaming"), "{err}");
    }

    #[test]
    fn sessions_persist_selections() {
        let dir = tempfile::tempdir().unwrap();
        let ws = Workspace::open(dir.path()).unwrap();
        let doc: SessionDoc = from_json(&json!({
            "source": luk4(),
            "target": {"chain": ["0", "b", "1"], "conj": [[0,0,0],[0,1,1],[0,1,2]]},
            "renaming": [0, 1, 1, 2]
        }))
        .unwrap();
        let (id, s) = ws.create_session(&doc, None).unwrap();
        let (id2, _) = ws.create_session(&doc, None).unwrap();
        assert_ne!(id, id2);
        assert!(!s.phase.is_closed());
        let after = ws.select(&id, None).unwrap();
        assert_eq!(ws.session(&id).unwrap(), after);
        assert_eq!(ws.session(&id2).unwrap(), s);
    }
}
