//! JSON renderings shared by the command line and the HTTP service, so both
//! surfaces emit the same bytes for the same state.

use mvl_core::entailment::{DerivationTrace, KnowledgeModule};
use mvl_core::generator::{CandidatePage, Session};
use mvl_core::interval_algebra::IntervalAlgebra;
use mvl_core::{Algebra, Interval, Renaming, Sentence};
use serde_json::{json, Value as Json};

use crate::docs::{AlgebraDoc, RenamingDoc, SentenceDoc};

/// Pretty JSON with a trailing newline.
pub fn to_text(j: &Json) -> String {
    let mut s = serde_json::to_string_pretty(j).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn algebra(alg: &Algebra) -> Json {
    serde_json::to_value(AlgebraDoc::of(alg)).expect("serializable")
}

pub fn renaming(f: &Renaming, target: &Algebra) -> Json {
    serde_json::to_value(RenamingDoc::of(f, Some(target.chain()))).expect("serializable")
}

fn positions(ia: &IntervalAlgebra, is: &[Interval]) -> Vec<usize> {
    is.iter().map(|&i| ia.position(i).expect("carrier is complete")).collect()
}

/// Carrier, lifted operations, sign classes and Hasse edges, all by
/// position in `intervals`.
pub fn intervals(alg: &Algebra) -> Json {
    let ia = IntervalAlgebra::build(alg);
    let carrier = ia.carrier();
    let pos = |i: Interval| ia.position(i).expect("carrier is complete");
    let classes = ia.sign_classes();
    json!({
        "chain": alg.chain().labels(),
        "intervals": carrier,
        "labels": carrier.iter().map(|&i| alg.label_interval(i)).collect::<Vec<_>>(),
        "neg": carrier.iter().map(|&i| pos(ia.neg(i))).collect::<Vec<_>>(),
        "conj": carrier.iter().map(|&x| carrier.iter().map(|&y| pos(ia.conj(x, y))).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "sign_classes": {
            "negative": positions(&ia, &classes.negative),
            "fixed": positions(&ia, &classes.fixed),
            "positive": positions(&ia, &classes.positive),
            "indefinite": positions(&ia, &classes.indefinite),
        },
        "hasse": ia.hasse().into_iter().map(|(a, b)| [pos(a), pos(b)]).collect::<Vec<_>>(),
    })
}

pub fn sentence(s: &Sentence, km: &KnowledgeModule) -> Json {
    json!({
        "sentence": SentenceDoc::of(s, &km.atoms),
        "text": s.render(&km.algebra, &km.atoms),
    })
}

pub fn trace(t: &DerivationTrace, km: &KnowledgeModule) -> Json {
    let steps: Vec<Json> = t
        .steps
        .iter()
        .map(|st| {
            json!({
                "rule": st.rule,
                "premises": st.premises,
                "sentence": SentenceDoc::of(&st.sentence, &km.atoms),
                "text": st.sentence.render(&km.algebra, &km.atoms),
            })
        })
        .collect();
    json!({ "steps": steps })
}

pub fn page(p: &CandidatePage) -> Json {
    serde_json::to_value(p).expect("serializable")
}

pub fn session_state(id: &str, s: &Session) -> Json {
    json!({
        "id": id,
        "phase": s.phase,
        "closed": s.phase.is_closed(),
        "history": s.history,
        "candidate_count": s.candidates.len(),
        "morphism_count": s.candidates.iter().filter(|c| c.metrics.morphism).count(),
    })
}

/// The outcome of a closed session; `None` while it is still open.
pub fn session_result(s: &Session) -> Option<Json> {
    if !s.phase.is_closed() {
        return None;
    }
    let accepted = s.result.as_ref().map(|a| {
        json!({
            "shape": a.shape,
            "source": algebra(&a.source),
            "target": algebra(&a.target),
            "renaming": renaming(&a.renaming, &a.target),
            "morphism": a.renaming.is_pointwise(),
        })
    });
    Some(json!({
        "phase": s.phase,
        "history": s.history,
        "result": accepted,
    }))
}
