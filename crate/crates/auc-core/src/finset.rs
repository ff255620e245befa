//! Strict finite-set models of contexts: evaluation, model categories over a
//! carrier bound, and the semantic cross-check oracle.
//!
//! Carriers are skeletal: {0..k−1}. Universals are interpreted canonically —
//! terminal {0}, initial {}, pullback = lexicographically sorted satisfying
//! pairs renumbered from 0, pushout = quotient with classes numbered by least
//! representative.

use crate::context::{Context, ContextExtension, ExtensionStep};
use crate::equiv::{apply_equiv_step, EquivDerivation, EquivStep, FillinData};
use crate::fincat::{FinCat, FinFunctor, FinNatTrans, Mor};
use crate::maps::{ContextMap, TwoCell};
use crate::name::{EdgeId, NodeId};
use crate::report::Report;
use crate::sketch::{Sketch, SketchHom, Universal, ValidationReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FinSetModel {
    /// Carrier sizes; the carrier of a node n is {0..k−1}.
    pub carriers: BTreeMap<NodeId, usize>,
    /// Total function tables, indexed by source element.
    pub actions: BTreeMap<EdgeId, Vec<usize>>,
    pub strict: bool,
}

/// Per-node component functions of a model homomorphism; the endpoint models
/// are tracked by the caller.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelHom {
    pub components: BTreeMap<NodeId, Vec<usize>>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("list universal {subject} with nonempty parameter is not supported")]
    ListNotSupported { subject: NodeId },
    #[error("missing primitive assignment for {0}")]
    MissingAssignment(String),
    #[error("not a model: {0}")]
    NotAModel(String),
    #[error("semantically unsound step {index}: {detail}")]
    UnsoundStep { index: usize, detail: String },
    #[error("not in the truncated universe: {0}")]
    NotInUniverse(String),
}

/// Interpretations of the primitive (non-universal) steps of a context.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrimitiveAssignment {
    pub nodes: BTreeMap<NodeId, usize>,
    pub edges: BTreeMap<EdgeId, Vec<usize>>,
}

impl FinSetModel {
    pub fn carrier(&self, n: &NodeId) -> usize {
        self.carriers[n]
    }

    pub fn action(&self, e: &EdgeId) -> &[usize] {
        &self.actions[e]
    }
}

impl ModelHom {
    pub fn identity(m: &FinSetModel) -> ModelHom {
        ModelHom {
            components: m.carriers.iter().map(|(n, &k)| (n.clone(), (0..k).collect())).collect(),
        }
    }

    /// self then other.
    pub fn then(&self, other: &ModelHom) -> ModelHom {
        ModelHom {
            components: self
                .components
                .iter()
                .map(|(n, f)| (n.clone(), compose_actions(f, &other.components[n])))
                .collect(),
        }
    }

    pub fn is_iso(&self) -> bool {
        self.components.values().all(|f| is_bijection(f, f.len()))
    }

    pub fn inverse(&self) -> Option<ModelHom> {
        let mut components = BTreeMap::new();
        for (n, f) in &self.components {
            components.insert(n.clone(), invert(f, f.len())?);
        }
        Some(ModelHom { components })
    }
}

fn compose_actions(f: &[usize], g: &[usize]) -> Vec<usize> {
    f.iter().map(|&x| g[x]).collect()
}

fn is_bijection(f: &[usize], cod: usize) -> bool {
    if f.len() != cod {
        return false;
    }
    let mut seen = vec![false; cod];
    for &y in f {
        if y >= cod || seen[y] {
            return false;
        }
        seen[y] = true;
    }
    true
}

fn invert(f: &[usize], cod: usize) -> Option<Vec<usize>> {
    if !is_bijection(f, cod) {
        return None;
    }
    let mut inv = vec![0; cod];
    for (x, &y) in f.iter().enumerate() {
        inv[y] = x;
    }
    Some(inv)
}

/// Lexicographically sorted satisfying pairs of a cospan.
fn canonical_pullback_pairs(f: &[usize], g: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..f.len() {
        for j in 0..g.len() {
            if f[i] == g[j] {
                out.push((i, j));
            }
        }
    }
    out
}

/// Quotient of A ⊎ B by s1(c) ~ s2(c); returns (class count, leg1, leg2)
/// with classes numbered by least representative (A first).
fn canonical_pushout(a: usize, b: usize, s1: &[usize], s2: &[usize]) -> (usize, Vec<usize>, Vec<usize>) {
    let n = a + b;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for c in 0..s1.len() {
        let (x, y) = (find(&mut parent, s1[c]), find(&mut parent, a + s2[c]));
        // union by least element so the root is the least representative
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        parent[hi] = lo;
    }
    let mut reps: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    let mut class_of = BTreeMap::new();
    for &r in reps.iter() {
        let next = class_of.len();
        class_of.entry(r).or_insert(next);
    }
    let classes = class_of.len();
    let leg2 = reps.split_off(a).into_iter().map(|r| class_of[&r]).collect();
    let leg1 = reps.into_iter().map(|r| class_of[&r]).collect();
    (classes, leg1, leg2)
}

#[derive(Clone)]
struct ModelBuilder {
    carriers: BTreeMap<NodeId, usize>,
    actions: BTreeMap<EdgeId, Vec<usize>>,
}

impl ModelBuilder {
    fn new() -> ModelBuilder {
        ModelBuilder { carriers: BTreeMap::new(), actions: BTreeMap::new() }
    }

    fn add_node(&mut self, n: &NodeId, size: usize) {
        self.carriers.insert(n.clone(), size);
        self.actions.insert(n.identity_edge(), (0..size).collect());
    }

    fn check_comm(&self, first: &EdgeId, second: &EdgeId, composite: &EdgeId) -> Result<(), ModelError> {
        let lhs = compose_actions(&self.actions[first], &self.actions[second]);
        if lhs != self.actions[composite] {
            return Err(ModelError::NotAModel(format!(
                "commutativity {second}.{first} ~ {composite} fails"
            )));
        }
        Ok(())
    }

    /// Interpret one extension step; `sketch` is any sketch containing the
    /// step's referenced edges (endpoint lookups only).
    fn apply(&mut self, sketch: &Sketch, step: &ExtensionStep, assign: Option<&PrimitiveAssignment>) -> Result<(), ModelError> {
        match step {
            ExtensionStep::AddPrimitiveNode { name } => {
                let size = assign
                    .and_then(|a| a.nodes.get(name))
                    .copied()
                    .ok_or_else(|| ModelError::MissingAssignment(name.to_string()))?;
                self.add_node(name, size);
            }
            ExtensionStep::AddEdge { name, src, tgt } => {
                let f = assign
                    .and_then(|a| a.edges.get(name))
                    .cloned()
                    .ok_or_else(|| ModelError::MissingAssignment(name.to_string()))?;
                if f.len() != self.carriers[src] || f.iter().any(|&y| y >= self.carriers[tgt]) {
                    return Err(ModelError::NotAModel(format!("action for {name} ill-typed")));
                }
                self.actions.insert(name.clone(), f);
            }
            ExtensionStep::AddCommutativity { first, second, composite } => {
                self.check_comm(first, second, composite)?;
            }
            ExtensionStep::AddTerminal { name } => self.add_node(name, 1),
            ExtensionStep::AddInitial { name } => self.add_node(name, 0),
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, diag, cospan1, cospan2 } => {
                let f = self.actions[cospan1].clone();
                let g = self.actions[cospan2].clone();
                let pairs = canonical_pullback_pairs(&f, &g);
                self.add_node(apex, pairs.len());
                self.actions.insert(leg1.clone(), pairs.iter().map(|p| p.0).collect());
                self.actions.insert(leg2.clone(), pairs.iter().map(|p| p.1).collect());
                self.actions.insert(diag.clone(), pairs.iter().map(|p| f[p.0]).collect());
            }
            ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, diag, span1, span2 } => {
                let s1 = self.actions[span1].clone();
                let s2 = self.actions[span2].clone();
                let e1 = sketch.edge(span1).expect("edge exists");
                let e2 = sketch.edge(span2).expect("edge exists");
                let a = self.carriers[&e1.tgt];
                let b = self.carriers[&e2.tgt];
                let (classes, l1, l2) = canonical_pushout(a, b, &s1, &s2);
                self.add_node(apex, classes);
                let d = s1.iter().map(|&x| l1[x]).collect();
                self.actions.insert(leg1.clone(), l1);
                self.actions.insert(leg2.clone(), l2);
                self.actions.insert(diag.clone(), d);
            }
            ExtensionStep::AddListUniversal { param, subject, empty_src, empty, cons_apex, cons_proj1, cons_proj2, cons } => {
                if self.carriers[param] > 0 {
                    return Err(ModelError::ListNotSupported { subject: subject.clone() });
                }
                self.add_node(subject, 1);
                self.add_node(cons_apex, 0);
                self.actions.insert(empty.clone(), vec![0; self.carriers[empty_src]]);
                self.actions.insert(cons_proj1.clone(), vec![]);
                self.actions.insert(cons_proj2.clone(), vec![]);
                self.actions.insert(cons.clone(), vec![]);
            }
        }
        Ok(())
    }

    fn finish(self, strict: bool) -> FinSetModel {
        FinSetModel { carriers: self.carriers, actions: self.actions, strict }
    }
}

/// Replay a context canonically on a primitive assignment.
pub fn eval_strict_model(c: &Context, assign: &PrimitiveAssignment) -> Result<FinSetModel, ModelError> {
    let sketch = c.to_sketch();
    let mut b = ModelBuilder::new();
    for step in &c.steps {
        b.apply(&sketch, step, Some(assign))?;
    }
    Ok(b.finish(true))
}

/// Structural validation of model data against a sketch; when `m.strict`,
/// also checks every universal carries its canonical interpretation.
pub fn validate_model(sketch: &Sketch, m: &FinSetModel) -> ValidationReport {
    let mut r = ValidationReport::default();
    for n in &sketch.nodes {
        if !m.carriers.contains_key(n) {
            r.push(format!("no carrier for node {n}"));
        }
    }
    for (id, e) in &sketch.edges {
        let Some(f) = m.actions.get(id) else {
            r.push(format!("no action for edge {id}"));
            continue;
        };
        let (Some(&s), Some(&t)) = (m.carriers.get(&e.src), m.carriers.get(&e.tgt)) else {
            continue;
        };
        if f.len() != s || f.iter().any(|&y| y >= t) {
            r.push(format!("action for {id} ill-typed"));
        }
    }
    if !r.ok() {
        return r;
    }
    for (n, id) in &sketch.identity {
        if m.actions[id] != (0..m.carriers[n]).collect::<Vec<_>>() {
            r.push(format!("identity action for {n} is not the identity"));
        }
    }
    for c in &sketch.commutativities {
        if compose_actions(&m.actions[&c.first], &m.actions[&c.second]) != m.actions[&c.composite] {
            r.push(format!("commutativity {c} fails"));
        }
    }
    if m.strict {
        for u in &sketch.universals {
            if let Err(e) = check_canonical(sketch, m, u) {
                r.push(e);
            }
        }
    }
    r
}

/// Is the universal's subject interpreted by exactly the canonical
/// construction on its (already interpreted) data?
fn check_canonical(sketch: &Sketch, m: &FinSetModel, u: &Universal) -> Result<(), String> {
    match u {
        Universal::Terminal { subject } => {
            if m.carriers[subject] != 1 {
                return Err(format!("terminal {subject} is not the canonical singleton"));
            }
        }
        Universal::Initial { subject } => {
            if m.carriers[subject] != 0 {
                return Err(format!("initial {subject} is not empty"));
            }
        }
        Universal::Pullback { apex, leg1, leg2, diag, cospan1, cospan2, .. } => {
            let pairs = canonical_pullback_pairs(&m.actions[cospan1], &m.actions[cospan2]);
            let f = &m.actions[cospan1];
            if m.carriers[apex] != pairs.len()
                || m.actions[leg1] != pairs.iter().map(|p| p.0).collect::<Vec<_>>()
                || m.actions[leg2] != pairs.iter().map(|p| p.1).collect::<Vec<_>>()
                || m.actions[diag] != pairs.iter().map(|p| f[p.0]).collect::<Vec<_>>()
            {
                return Err(format!("pullback {apex} is not canonical"));
            }
        }
        Universal::Pushout { apex, leg1, leg2, diag, span1, span2, .. } => {
            let e1 = sketch.edge(span1).expect("edge exists");
            let e2 = sketch.edge(span2).expect("edge exists");
            let (classes, l1, l2) = canonical_pushout(
                m.carriers[&e1.tgt],
                m.carriers[&e2.tgt],
                &m.actions[span1],
                &m.actions[span2],
            );
            let d: Vec<usize> = m.actions[span1].iter().map(|&x| l1[x]).collect();
            if m.carriers[apex] != classes
                || m.actions[leg1] != l1
                || m.actions[leg2] != l2
                || m.actions[diag] != d
            {
                return Err(format!("pushout {apex} is not canonical"));
            }
        }
        Universal::List { param, subject, .. } => {
            if m.carriers[param] > 0 {
                return Err(format!("list {subject} over nonempty parameter unsupported"));
            }
            if m.carriers[subject] != 1 {
                return Err(format!("list {subject} is not the canonical singleton"));
            }
        }
    }
    Ok(())
}

pub fn is_strict(sketch: &Sketch, m: &FinSetModel) -> bool {
    sketch.universals.iter().all(|u| check_canonical(sketch, m, u).is_ok())
}

// ---------------------------------------------------------------------------
// Evaluating equivalence derivations on models
// ---------------------------------------------------------------------------

/// Canonically interpret an equivalence derivation's steps on a strict model
/// of its base.  Steps asserting equalities are *checked*; a violation is
/// reported as `UnsoundStep` (this is the semantic soundness hook for
/// certificates).
pub fn extend_model_along_derivation(
    m: &FinSetModel,
    d: &EquivDerivation,
) -> Result<(FinSetModel, Sketch), ModelError> {
    let mut sketch = d.base.to_sketch();
    let mut b = ModelBuilder { carriers: m.carriers.clone(), actions: m.actions.clone() };
    for (i, step) in d.steps.iter().enumerate() {
        let next = apply_equiv_step(&sketch, i, step)
            .map_err(|e| ModelError::NotAModel(format!("derivation does not replay: {e}")))?;
        match step {
            EquivStep::AddComposite { first, second, name } => {
                let c = compose_actions(&b.actions[first], &b.actions[second]);
                b.actions.insert(name.clone(), c);
            }
            EquivStep::AddCategoryLawCommutativity { goal, .. } => {
                b.check_comm(&goal.first, &goal.second, &goal.composite)
                    .map_err(|e| ModelError::UnsoundStep { index: i, detail: e.to_string() })?;
            }
            EquivStep::AddUniversal { step } => {
                b.apply(&next, step, None)?;
            }
            EquivStep::AddFillin { universal, data, name, .. } => {
                let u = sketch
                    .universal_with_subject(universal)
                    .ok_or_else(|| ModelError::NotAModel(format!("{universal} not universal")))?
                    .clone();
                let f = eval_fillin(&b, &u, data)
                    .map_err(|detail| ModelError::UnsoundStep { index: i, detail })?;
                b.actions.insert(name.clone(), f);
            }
            EquivStep::AddFillinUniqueness { fillin1, fillin2, .. } => {
                if b.actions[fillin1] != b.actions[fillin2] {
                    return Err(ModelError::UnsoundStep {
                        index: i,
                        detail: format!("{fillin1} and {fillin2} differ as functions"),
                    });
                }
            }
            EquivStep::AddInverse { edge, name, .. } => {
                let e = sketch.edge(edge).expect("edge exists");
                let inv = invert(&b.actions[edge], b.carriers[&e.tgt]).ok_or_else(|| {
                    ModelError::UnsoundStep { index: i, detail: format!("{edge} is not a bijection") }
                })?;
                b.actions.insert(name.clone(), inv);
            }
        }
        sketch = next;
    }
    let model = b.finish(false);
    let model = FinSetModel { strict: is_strict(&sketch, &model), ..model };
    Ok((model, sketch))
}

fn eval_fillin(b: &ModelBuilder, u: &Universal, data: &FillinData) -> Result<Vec<usize>, String> {
    match (u, data) {
        (Universal::Terminal { subject }, FillinData::Terminal { src }) => {
            if b.carriers[subject] != 1 {
                return Err(format!("terminal {subject} not a singleton"));
            }
            Ok(vec![0; b.carriers[src]])
        }
        (Universal::Initial { subject }, FillinData::Initial { .. }) => {
            if b.carriers[subject] != 0 {
                return Err(format!("initial {subject} not empty"));
            }
            Ok(vec![])
        }
        (Universal::Pullback { apex, leg1, leg2, .. }, FillinData::Pullback { leg1: v1, leg2: v2, .. }) => {
            let (p1, p2) = (&b.actions[leg1], &b.actions[leg2]);
            let (a1, a2) = (&b.actions[v1], &b.actions[v2]);
            let mut out = Vec::with_capacity(a1.len());
            for x in 0..a1.len() {
                let hits: Vec<usize> = (0..b.carriers[apex])
                    .filter(|&q| p1[q] == a1[x] && p2[q] == a2[x])
                    .collect();
                match hits.as_slice() {
                    [q] => out.push(*q),
                    [] => return Err(format!("no element of {apex} over ({}, {})", a1[x], a2[x])),
                    _ => return Err(format!("ambiguous element of {apex}")),
                }
            }
            Ok(out)
        }
        (Universal::Pushout { apex, leg1, leg2, .. }, FillinData::Pushout { leg1: w1, leg2: w2, .. }) => {
            let (l1, l2) = (&b.actions[leg1], &b.actions[leg2]);
            let (a1, a2) = (&b.actions[w1], &b.actions[w2]);
            let mut out = vec![None; b.carriers[apex]];
            for (x, &p) in l1.iter().enumerate() {
                match out[p] {
                    None => out[p] = Some(a1[x]),
                    Some(v) if v == a1[x] => {}
                    Some(_) => return Err(format!("cocone not constant on a class of {apex}")),
                }
            }
            for (y, &p) in l2.iter().enumerate() {
                match out[p] {
                    None => out[p] = Some(a2[y]),
                    Some(v) if v == a2[y] => {}
                    Some(_) => return Err(format!("cocone not constant on a class of {apex}")),
                }
            }
            out.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| format!("class of {apex} without preimage"))
        }
        _ => Err("fillin kind mismatch".into()),
    }
}

/// Restrict model data along a sketch hom (the direction of model reduction).
fn restrict_model(extended: &FinSetModel, hom: &SketchHom) -> FinSetModel {
    let carriers: BTreeMap<NodeId, usize> = hom
        .node_map
        .iter()
        .map(|(n, img)| (n.clone(), extended.carriers[img]))
        .collect();
    let actions: BTreeMap<EdgeId, Vec<usize>> = hom
        .edge_map
        .iter()
        .map(|(e, img)| (e.clone(), extended.actions[img].clone()))
        .collect();
    let m = FinSetModel { carriers, actions, strict: false };
    FinSetModel { strict: is_strict(&hom.domain, &m), ..m }
}

/// Model reduction M ↦ M·h along a context map h: evaluate h's equivalence
/// derivation canonically, then restrict along its hom.
pub fn reduce_model(m: &FinSetModel, h: &ContextMap) -> Result<FinSetModel, ModelError> {
    let (extended, _) = extend_model_along_derivation(m, &h.derivation)?;
    Ok(restrict_model(&extended, &h.hom))
}

/// Extend a homomorphism's components across universal-construction steps;
/// components at universal subjects are forced (or fail to exist).
/// `sketch` must contain the steps' referenced edges.
fn extend_hom_components(
    sketch: &Sketch,
    dom: &FinSetModel,
    cod: &FinSetModel,
    components: &mut BTreeMap<NodeId, Vec<usize>>,
    steps: &[ExtensionStep],
) -> Result<(), String> {
    for step in steps {
        match step {
            ExtensionStep::AddTerminal { name } => {
                components.insert(name.clone(), vec![0; dom.carriers[name]]);
            }
            ExtensionStep::AddInitial { name } => {
                components.insert(name.clone(), vec![]);
            }
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, cospan1, cospan2, .. } => {
                let foot1 = &sketch.edge(cospan1).expect("edge exists").src;
                let foot2 = &sketch.edge(cospan2).expect("edge exists").src;
                let f1 = components[foot1].clone();
                let f2 = components[foot2].clone();
                let (dl1, dl2) = (&dom.actions[leg1], &dom.actions[leg2]);
                let (cl1, cl2) = (&cod.actions[leg1], &cod.actions[leg2]);
                let mut comp = Vec::with_capacity(dom.carriers[apex]);
                for p in 0..dom.carriers[apex] {
                    let (x, y) = (f1[dl1[p]], f2[dl2[p]]);
                    let hits: Vec<usize> = (0..cod.carriers[apex])
                        .filter(|&q| cl1[q] == x && cl2[q] == y)
                        .collect();
                    match hits.as_slice() {
                        [q] => comp.push(*q),
                        _ => return Err(format!("no forced component at {apex}")),
                    }
                }
                components.insert(apex.clone(), comp);
            }
            ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, span1, span2, .. } => {
                let foot1 = &sketch.edge(span1).expect("edge exists").tgt;
                let foot2 = &sketch.edge(span2).expect("edge exists").tgt;
                let f1 = components[foot1].clone();
                let f2 = components[foot2].clone();
                let (dl1, dl2) = (&dom.actions[leg1], &dom.actions[leg2]);
                let (cl1, cl2) = (&cod.actions[leg1], &cod.actions[leg2]);
                let mut comp = vec![None; dom.carriers[apex]];
                let set = |p: usize, v: usize, comp: &mut Vec<Option<usize>>| match comp[p] {
                    None => {
                        comp[p] = Some(v);
                        Ok(())
                    }
                    Some(w) if w == v => Ok(()),
                    Some(_) => Err(format!("component at {apex} not well defined")),
                };
                for (x, &p) in dl1.iter().enumerate() {
                    set(p, cl1[f1[x]], &mut comp)?;
                }
                for (y, &p) in dl2.iter().enumerate() {
                    set(p, cl2[f2[y]], &mut comp)?;
                }
                let comp = comp
                    .into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| format!("class of {apex} without preimage"))?;
                components.insert(apex.clone(), comp);
            }
            ExtensionStep::AddListUniversal { subject, cons_apex, .. } => {
                components.insert(subject.clone(), vec![0; dom.carriers[subject]]);
                components.insert(cons_apex.clone(), vec![]);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Check a component family as a homomorphism m → n of models of `sketch`.
pub fn validate_hom(sketch: &Sketch, m: &FinSetModel, n: &FinSetModel, h: &ModelHom) -> ValidationReport {
    let mut r = ValidationReport::default();
    for node in &sketch.nodes {
        match h.components.get(node) {
            None => r.push(format!("no component at {node}")),
            Some(f) => {
                if f.len() != m.carriers[node] || f.iter().any(|&y| y >= n.carriers[node]) {
                    r.push(format!("component at {node} ill-typed"));
                }
            }
        }
    }
    if !r.ok() {
        return r;
    }
    for (id, e) in &sketch.edges {
        let lhs = compose_actions(&m.actions[id], &h.components[&e.tgt]);
        let rhs = compose_actions(&h.components[&e.src], &n.actions[id]);
        if lhs != rhs {
            r.push(format!("naturality fails at {id}"));
        }
    }
    r
}

fn all_functions(dom: usize, cod: usize) -> Vec<Vec<usize>> {
    if dom == 0 {
        return vec![vec![]];
    }
    if cod == 0 {
        return vec![];
    }
    let total = (cod as u64).checked_pow(dom as u32).expect("function space too large");
    let mut out = Vec::with_capacity(total as usize);
    for n in 0..total {
        let mut f = vec![0; dom];
        let mut rem = n;
        for i in (0..dom).rev() {
            f[i] = (rem % cod as u64) as usize;
            rem /= cod as u64;
        }
        out.push(f);
    }
    out
}

/// All strict models with primitive carriers ≤ bound, in canonical order
/// (depth-first over the step sequence: carrier sizes ascending, action
/// tables lexicographic).
pub fn enumerate_strict_models(c: &Context, bound: usize) -> Result<Vec<FinSetModel>, ModelError> {
    let sketch = c.to_sketch();
    let mut out = Vec::new();
    fn rec(
        sketch: &Sketch,
        steps: &[ExtensionStep],
        idx: usize,
        b: &ModelBuilder,
        bound: usize,
        out: &mut Vec<FinSetModel>,
    ) -> Result<(), ModelError> {
        let Some(step) = steps.get(idx) else {
            out.push(b.clone().finish(true));
            return Ok(());
        };
        match step {
            ExtensionStep::AddPrimitiveNode { name } => {
                for k in 0..=bound {
                    let mut b2 = b.clone();
                    b2.add_node(name, k);
                    rec(sketch, steps, idx + 1, &b2, bound, out)?;
                }
            }
            ExtensionStep::AddEdge { name, src, tgt } => {
                for f in all_functions(b.carriers[src], b.carriers[tgt]) {
                    let mut b2 = b.clone();
                    b2.actions.insert(name.clone(), f);
                    rec(sketch, steps, idx + 1, &b2, bound, out)?;
                }
            }
            ExtensionStep::AddCommutativity { first, second, composite } => {
                if b.check_comm(first, second, composite).is_ok() {
                    rec(sketch, steps, idx + 1, b, bound, out)?;
                }
            }
            _ => {
                let mut b2 = b.clone();
                b2.apply(sketch, step, None)?;
                rec(sketch, steps, idx + 1, &b2, bound, out)?;
            }
        }
        Ok(())
    }
    rec(&sketch, &c.steps, 0, &ModelBuilder::new(), bound, &mut out)?;
    Ok(out)
}

/// All homomorphisms m → n, in canonical (lexicographic) order.
pub fn enumerate_homs(c: &Context, m: &FinSetModel, n: &FinSetModel) -> Vec<ModelHom> {
    let sketch = c.to_sketch();
    let mut out = Vec::new();
    fn rec(
        sketch: &Sketch,
        steps: &[ExtensionStep],
        idx: usize,
        m: &FinSetModel,
        n: &FinSetModel,
        comps: &BTreeMap<NodeId, Vec<usize>>,
        out: &mut Vec<ModelHom>,
    ) {
        let Some(step) = steps.get(idx) else {
            out.push(ModelHom { components: comps.clone() });
            return;
        };
        // naturality for every edge this step introduces
        let edges_ok = |comps: &BTreeMap<NodeId, Vec<usize>>| {
            step.new_edges().iter().all(|id| {
                let e = sketch.edge(id).expect("edge exists");
                compose_actions(&m.actions[*id], &comps[&e.tgt])
                    == compose_actions(&comps[&e.src], &n.actions[*id])
            })
        };
        match step {
            ExtensionStep::AddPrimitiveNode { name } => {
                for f in all_functions(m.carriers[name], n.carriers[name]) {
                    let mut c2 = comps.clone();
                    c2.insert(name.clone(), f);
                    rec(sketch, steps, idx + 1, m, n, &c2, out);
                }
            }
            ExtensionStep::AddEdge { .. } => {
                if edges_ok(comps) {
                    rec(sketch, steps, idx + 1, m, n, comps, out);
                }
            }
            ExtensionStep::AddCommutativity { .. } => rec(sketch, steps, idx + 1, m, n, comps, out),
            _ => {
                let mut c2 = comps.clone();
                if extend_hom_components(sketch, m, n, &mut c2, std::slice::from_ref(step)).is_ok()
                    && edges_ok(&c2)
                {
                    rec(sketch, steps, idx + 1, m, n, &c2, out);
                }
            }
        }
    }
    rec(&sketch, &c.steps, 0, m, n, &BTreeMap::new(), &mut out);
    out
}

/// The truncated category of strict models, with the enumerated model and
/// homomorphism lists aligned to the FinCat encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModCategory {
    pub context: Context,
    pub bound: usize,
    pub cat: FinCat,
    pub models: Vec<FinSetModel>,
    pub homs: Vec<(usize, usize, ModelHom)>,
}

impl ModCategory {
    pub fn find_model(&self, m: &FinSetModel) -> Option<usize> {
        self.models.iter().position(|x| x == m)
    }

    pub fn find_hom(&self, dom: usize, cod: usize, h: &ModelHom) -> Option<usize> {
        self.homs.iter().position(|(i, j, x)| *i == dom && *j == cod && x == h)
    }
}

pub fn mod_category(c: &Context, bound: usize) -> Result<ModCategory, ModelError> {
    let models = enumerate_strict_models(c, bound)?;
    let mut homs = Vec::new();
    for (i, m) in models.iter().enumerate() {
        for (j, n) in models.iter().enumerate() {
            for h in enumerate_homs(c, m, n) {
                homs.push((i, j, h));
            }
        }
    }
    let index: BTreeMap<(usize, usize, &ModelHom), usize> =
        homs.iter().enumerate().map(|(k, (i, j, h))| ((*i, *j, h), k)).collect();
    let morphisms = homs
        .iter()
        .enumerate()
        .map(|(k, (i, j, _))| Mor { name: format!("h{k}"), src: *i, tgt: *j })
        .collect();
    let identity = models
        .iter()
        .enumerate()
        .map(|(i, m)| index[&(i, i, &ModelHom::identity(m))])
        .collect();
    let mut compose = BTreeMap::new();
    for (k1, (i, j, h1)) in homs.iter().enumerate() {
        for (k2, (j2, l, h2)) in homs.iter().enumerate() {
            if j == j2 {
                compose.insert((k1, k2), index[&(*i, *l, &h1.then(h2))]);
            }
        }
    }
    let cat = FinCat {
        objects: (0..models.len()).map(|i| format!("M{i}")).collect(),
        morphisms,
        identity,
        compose,
    };
    Ok(ModCategory { context: c.clone(), bound, cat, models, homs })
}

/// The functor Mod(h): Mod(T0) → Mod(T1) induced by a context map
/// h: T0 → T1, acting by model reduction.
pub fn mod_functor_between(
    h: &ContextMap,
    from: &ModCategory,
    to: &ModCategory,
) -> Result<FinFunctor, ModelError> {
    let ext_sketch = h.target_sketch();
    let universal_steps: Vec<ExtensionStep> = h
        .derivation
        .steps
        .iter()
        .filter_map(|s| match s {
            EquivStep::AddUniversal { step } => Some(step.clone()),
            _ => None,
        })
        .collect();
    let mut extended = Vec::with_capacity(from.models.len());
    let mut obj_map = Vec::with_capacity(from.models.len());
    for m in &from.models {
        let (ext, _) = extend_model_along_derivation(m, &h.derivation)?;
        let reduced = restrict_model(&ext, &h.hom);
        let idx = to
            .find_model(&reduced)
            .ok_or_else(|| ModelError::NotInUniverse("reduced model not enumerated".into()))?;
        obj_map.push(idx);
        extended.push(ext);
    }
    let mut mor_map = Vec::with_capacity(from.homs.len());
    for (i, j, hom) in &from.homs {
        let mut comps = hom.components.clone();
        extend_hom_components(&ext_sketch, &extended[*i], &extended[*j], &mut comps, &universal_steps)
            .map_err(ModelError::NotAModel)?;
        let reduced = ModelHom {
            components: h
                .hom
                .node_map
                .iter()
                .map(|(n, img)| (n.clone(), comps[img].clone()))
                .collect(),
        };
        let idx = to
            .find_hom(obj_map[*i], obj_map[*j], &reduced)
            .ok_or_else(|| ModelError::NotInUniverse("reduced homomorphism not enumerated".into()))?;
        mor_map.push(idx);
    }
    Ok(FinFunctor { dom: from.cat.clone(), cod: to.cat.clone(), obj_map, mor_map })
}

pub fn mod_functor(h: &ContextMap, bound: usize) -> Result<FinFunctor, ModelError> {
    let from = mod_category(&h.from, bound)?;
    let to = mod_category(&h.to, bound)?;
    mod_functor_between(h, &from, &to)
}

/// The natural transformation Mod(lhs) ⇒ Mod(rhs) induced by a 2-cell: each
/// model's reduction along the body is a model of the hom context, i.e. a
/// homomorphism between the boundary reductions.
pub fn mod_two_cell_between(
    t: &TwoCell,
    from: &ModCategory,
    to: &ModCategory,
) -> Result<FinNatTrans, ModelError> {
    let lhs = mod_functor_between(&t.lhs, from, to)?;
    let rhs = mod_functor_between(&t.rhs, from, to)?;
    let to_sketch = t.lhs.to.to_sketch();
    let mut components = Vec::with_capacity(from.models.len());
    for (i, m) in from.models.iter().enumerate() {
        let arrow_model = reduce_model(m, &t.body)?;
        let hom = ModelHom {
            components: to_sketch
                .nodes
                .iter()
                .map(|n| (n.clone(), arrow_model.actions[&EdgeId(n.0.theta())].clone()))
                .collect(),
        };
        let idx = to
            .find_hom(lhs.obj_map[i], rhs.obj_map[i], &hom)
            .ok_or_else(|| ModelError::NotInUniverse("induced homomorphism not enumerated".into()))?;
        components.push(idx);
    }
    Ok(FinNatTrans { dom: lhs, cod: rhs, components })
}

pub fn mod_two_cell(t: &TwoCell, bound: usize) -> Result<FinNatTrans, ModelError> {
    let from = mod_category(&t.lhs.from, bound)?;
    let to = mod_category(&t.lhs.to, bound)?;
    mod_two_cell_between(t, &from, &to)
}

// ---------------------------------------------------------------------------
// Canonical strict isomorphs
// ---------------------------------------------------------------------------

/// Given a (possibly non-strict) model m1 of the extended context, a strict
/// model m0 of the base and an isomorphism phi: m0 ≅ m1·U, produce the unique
/// (m1strict, phiTilde) with: m1strict strict, m1strict·U = m0 on the nose,
/// phiTilde·U = phi, and phiTilde the identity on the extension's primitive
/// nodes.
pub fn canonical_strict_isomorph(
    u: &ContextExtension,
    m1: &FinSetModel,
    m0: &FinSetModel,
    phi: &ModelHom,
) -> Result<(FinSetModel, ModelHom), ModelError> {
    let ctx1 = u.extended();
    let sketch1 = ctx1.to_sketch();
    let sketch0 = u.base.to_sketch();
    let loose = FinSetModel { strict: false, ..m1.clone() };
    let v = validate_model(&sketch1, &loose);
    if !v.ok() {
        return Err(ModelError::NotAModel(v.violations.join("; ")));
    }
    if !m0.strict || !validate_model(&sketch0, m0).ok() {
        return Err(ModelError::NotAModel("base model is not a valid strict model".into()));
    }
    if !phi.is_iso() {
        return Err(ModelError::NotAModel("phi is not an isomorphism".into()));
    }
    let mut b = ModelBuilder::new();
    let mut tilde: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    let base_len = u.base.steps.len();
    let fail = |msg: String| ModelError::NotAModel(msg);
    for (idx, step) in ctx1.steps.iter().enumerate() {
        if idx < base_len {
            for n in step.new_nodes() {
                b.add_node(n, m0.carriers[n]);
                tilde.insert(
                    n.clone(),
                    phi.components
                        .get(n)
                        .cloned()
                        .ok_or_else(|| fail(format!("phi has no component at {n}")))?,
                );
            }
            for e in step.new_edges() {
                b.actions.insert(e.clone(), m0.actions[e].clone());
            }
            continue;
        }
        match step {
            ExtensionStep::AddPrimitiveNode { name } => {
                b.add_node(name, m1.carriers[name]);
                tilde.insert(name.clone(), (0..m1.carriers[name]).collect());
            }
            ExtensionStep::AddEdge { name, src, tgt } => {
                let t_tgt_inv = invert(&tilde[tgt], m1.carriers[tgt])
                    .ok_or_else(|| fail(format!("component at {tgt} not invertible")))?;
                let transported =
                    compose_actions(&compose_actions(&tilde[src], &m1.actions[name]), &t_tgt_inv);
                b.actions.insert(name.clone(), transported);
            }
            ExtensionStep::AddCommutativity { first, second, composite } => {
                b.check_comm(first, second, composite)?;
            }
            ExtensionStep::AddTerminal { name } => {
                if m1.carriers[name] != 1 {
                    return Err(fail(format!("terminal {name} not a singleton in m1")));
                }
                b.add_node(name, 1);
                tilde.insert(name.clone(), vec![0]);
            }
            ExtensionStep::AddInitial { name } => {
                if m1.carriers[name] != 0 {
                    return Err(fail(format!("initial {name} not empty in m1")));
                }
                b.add_node(name, 0);
                tilde.insert(name.clone(), vec![]);
            }
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, cospan1, cospan2, .. } => {
                b.apply(&sketch1, step, None)?;
                let foot1 = &sketch1.edge(cospan1).expect("edge exists").src;
                let foot2 = &sketch1.edge(cospan2).expect("edge exists").src;
                let (sl1, sl2) = (b.actions[leg1].clone(), b.actions[leg2].clone());
                let (ml1, ml2) = (&m1.actions[leg1], &m1.actions[leg2]);
                let mut comp = Vec::with_capacity(b.carriers[apex]);
                for p in 0..b.carriers[apex] {
                    let (x, y) = (tilde[foot1][sl1[p]], tilde[foot2][sl2[p]]);
                    let hits: Vec<usize> = (0..m1.carriers[apex])
                        .filter(|&q| ml1[q] == x && ml2[q] == y)
                        .collect();
                    match hits.as_slice() {
                        [q] => comp.push(*q),
                        _ => return Err(fail(format!("{apex} in m1 is not a pullback"))),
                    }
                }
                tilde.insert(apex.clone(), comp);
            }
            ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, span1, span2, .. } => {
                b.apply(&sketch1, step, None)?;
                let foot1 = &sketch1.edge(span1).expect("edge exists").tgt;
                let foot2 = &sketch1.edge(span2).expect("edge exists").tgt;
                let (sl1, sl2) = (b.actions[leg1].clone(), b.actions[leg2].clone());
                let (ml1, ml2) = (&m1.actions[leg1], &m1.actions[leg2]);
                let mut comp = vec![None; b.carriers[apex]];
                for (x, &p) in sl1.iter().enumerate() {
                    comp[p].get_or_insert(ml1[tilde[foot1][x]]);
                }
                for (y, &p) in sl2.iter().enumerate() {
                    comp[p].get_or_insert(ml2[tilde[foot2][y]]);
                }
                let comp = comp
                    .into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| fail(format!("class of {apex} without preimage")))?;
                tilde.insert(apex.clone(), comp);
            }
            ExtensionStep::AddListUniversal { subject, cons_apex, .. } => {
                b.apply(&sketch1, step, None)?;
                if m1.carriers[subject] != 1 || m1.carriers[cons_apex] != 0 {
                    return Err(fail(format!("list {subject} not canonical-sized in m1")));
                }
                tilde.insert(subject.clone(), vec![0]);
                tilde.insert(cons_apex.clone(), vec![]);
            }
        }
    }
    let m1strict = b.finish(true);
    let phi_tilde = ModelHom { components: tilde };
    let v = validate_model(&sketch1, &m1strict);
    if !v.ok() {
        return Err(fail(format!("constructed model not strict-valid: {}", v.violations.join("; "))));
    }
    let v = validate_hom(&sketch1, &m1strict, m1, &phi_tilde);
    if !v.ok() || !phi_tilde.is_iso() {
        return Err(fail(format!("constructed comparison not an iso hom: {}", v.violations.join("; "))));
    }
    Ok((m1strict, phi_tilde))
}

/// Re-index carriers by per-node bijections (new = perm[old]); useful for
/// generating non-strict-but-isomorphic model data.
pub fn apply_permutations(
    sketch: &Sketch,
    m: &FinSetModel,
    perms: &BTreeMap<NodeId, Vec<usize>>,
) -> FinSetModel {
    let perm_of = |n: &NodeId| -> Vec<usize> {
        perms.get(n).cloned().unwrap_or_else(|| (0..m.carriers[n]).collect())
    };
    let mut actions = BTreeMap::new();
    for (id, e) in &sketch.edges {
        let (ps, pt) = (perm_of(&e.src), perm_of(&e.tgt));
        let inv_s = invert(&ps, ps.len()).expect("permutation");
        let f = &m.actions[id];
        actions.insert(id.clone(), (0..f.len()).map(|x| pt[f[inv_s[x]]]).collect());
    }
    let out = FinSetModel { carriers: m.carriers.clone(), actions, strict: false };
    FinSetModel { strict: is_strict(sketch, &out), ..out }
}

// ---------------------------------------------------------------------------
// Decoding arrow-context and star-context models
// ---------------------------------------------------------------------------

/// Restrict a model of arrw(T) (or of a context extending it) to one side.
fn restrict_side(m: &FinSetModel, t_sketch: &Sketch, side: u8) -> Option<FinSetModel> {
    let mut carriers = BTreeMap::new();
    for n in &t_sketch.nodes {
        carriers.insert(n.clone(), *m.carriers.get(&NodeId(n.0.copy_suffix(side)))?);
    }
    let mut actions = BTreeMap::new();
    for eid in t_sketch.edges.keys() {
        actions.insert(eid.clone(), m.actions.get(&EdgeId(eid.0.copy_suffix(side)))?.clone());
    }
    let out = FinSetModel { carriers, actions, strict: false };
    Some(FinSetModel { strict: is_strict(t_sketch, &out), ..out })
}

/// The homomorphism packaged in a model of arrw(T): the θ components.
fn theta_hom(m: &FinSetModel, t_sketch: &Sketch) -> Option<ModelHom> {
    let mut components = BTreeMap::new();
    for n in &t_sketch.nodes {
        components.insert(n.clone(), m.actions.get(&EdgeId(n.0.theta()))?.clone());
    }
    Some(ModelHom { components })
}

/// Decode a model of arrw(T) as a morphism of the truncated model category
/// of T, returning the morphism index.
fn decode_arrow_model(m: &FinSetModel, t_sketch: &Sketch, mc: &ModCategory) -> Option<usize> {
    let l = restrict_side(m, t_sketch, 0)?;
    let r = restrict_side(m, t_sketch, 1)?;
    let li = mc.find_model(&l)?;
    let ri = mc.find_model(&r)?;
    mc.find_hom(li, ri, &theta_hom(m, t_sketch)?)
}

/// A lifting problem decoded from a model of dom*/cod*(T1): an object of
/// Mod(T1) together with a downstairs morphism of Mod(T0) attached to its
/// image (into it for side 1, out of it for side 0).
struct StarDecode {
    upstairs: usize,
    downstairs: usize,
}

fn decode_star_model(
    m: &FinSetModel,
    t1_sketch: &Sketch,
    t0_sketch: &Sketch,
    r: &crate::chevalley::ReindexedExtension,
    side: u8,
    mc1: &ModCategory,
    mc0: &ModCategory,
) -> Option<StarDecode> {
    // the T1 structure living over the side-`side` copy
    let mut carriers = BTreeMap::new();
    for n in &t1_sketch.nodes {
        let img = if t0_sketch.nodes.contains(n) {
            NodeId(n.0.copy_suffix(side))
        } else {
            r.added_nodes.get(n)?.clone()
        };
        carriers.insert(n.clone(), *m.carriers.get(&img)?);
    }
    let mut actions = BTreeMap::new();
    for eid in t1_sketch.edges.keys() {
        let img = if t0_sketch.edges.contains_key(eid) {
            EdgeId(eid.0.copy_suffix(side))
        } else if let Some(e) = r.added_edges.get(eid) {
            e.clone()
        } else if t1_sketch.is_identity_edge(eid) {
            let src = &t1_sketch.edge(eid)?.src;
            r.added_nodes.get(src)?.identity_edge()
        } else {
            return None;
        };
        actions.insert(eid.clone(), m.actions.get(&img)?.clone());
    }
    let up = FinSetModel { carriers, actions, strict: false };
    let up = FinSetModel { strict: is_strict(t1_sketch, &up), ..up };
    let upstairs = mc1.find_model(&up)?;
    // the downstairs arrow
    let n0 = restrict_side(m, t0_sketch, 0)?;
    let n1 = restrict_side(m, t0_sketch, 1)?;
    let f = theta_hom(m, t0_sketch)?;
    let downstairs = mc0.find_hom(mc0.find_model(&n0)?, mc0.find_model(&n1)?, &f)?;
    Some(StarDecode { upstairs, downstairs })
}

// ---------------------------------------------------------------------------
// The semantic (op)fibration oracle
// ---------------------------------------------------------------------------

/// Cross-check a Chevalley-style certificate against the truncated model
/// categories: the underlying functor of the extension map must be a
/// Grothendieck (op)fibration, and the functor induced by the certificate's
/// Λ must decode to a complete cleavage of (op)cartesian lifts — exactly one
/// chosen lift per lifting problem, with exact boundaries.
pub fn semantic_oracle(
    e: &ContextExtension,
    cert: &crate::chevalley::ChevalleyCertificate,
    bound: usize,
) -> Report {
    match semantic_oracle_inner(e, cert, bound) {
        Ok(report) => report,
        Err(err @ ModelError::ListNotSupported { .. }) => {
            let mut report = Report::default();
            report.pass("oracle-scope", format!("partial: {err}; semantic items skipped"));
            report
        }
        Err(err) => {
            let mut report = Report::default();
            report.fail("oracle-internal", err.to_string());
            report
        }
    }
}

fn semantic_oracle_inner(
    e: &ContextExtension,
    cert: &crate::chevalley::ChevalleyCertificate,
    bound: usize,
) -> Result<Report, ModelError> {
    use crate::chevalley::Direction;
    use crate::fincat::{
        grothendieck_fibration, grothendieck_opfibration, is_cartesian_morphism,
        is_opcartesian_morphism,
    };
    let mut report = Report::default();
    let fibration = cert.direction == Direction::Fibration;
    let side = if fibration { 1 } else { 0 };
    let t1 = e.extended();
    let mc1 = mod_category(&t1, bound)?;
    let mc0 = mod_category(&e.base, bound)?;
    let u = crate::maps::extension_map(e);
    let ufun = mod_functor_between(&u, &mc1, &mc0)?;

    let (kind, verdict) = if fibration {
        ("fibration", grothendieck_fibration(&ufun))
    } else {
        ("opfibration", grothendieck_opfibration(&ufun))
    };
    report.check(
        format!("underlying-{kind}"),
        verdict.ok,
        match verdict.counterexample {
            None => format!("all lifting problems solvable at bound {bound}"),
            Some((m, f)) => format!(
                "no {}cartesian lift of downstairs morphism h{f} at model M{m}",
                if fibration { "" } else { "op" }
            ),
        },
    );

    let star_kind = if fibration { "cod*" } else { "dom*" };
    let reindexed = match crate::chevalley::reindex_extension(
        e,
        &crate::maps::collapse_map(&e.base, side),
    ) {
        Ok(r) => r,
        Err(err) => {
            report.fail("cleavage-typing", format!("cannot form {star_kind}(T1): {err}"));
            return Ok(report);
        }
    };
    let star_ctx = reindexed.extension.extended();
    let (arrow_t1, _, _) = crate::context::arrow_context(&t1);
    if cert.lambda.from != star_ctx || cert.lambda.to != arrow_t1 {
        report.fail(
            "cleavage-typing",
            format!("Λ is not a map {star_kind}(T1) → T1→ for this direction"),
        );
        return Ok(report);
    }
    report.pass("cleavage-typing", format!("Λ: {star_kind}(T1) → T1→"));

    let mcstar = mod_category(&star_ctx, bound)?;
    let mcarrow = mod_category(&arrow_t1, bound)?;
    let lamfun = mod_functor_between(&cert.lambda, &mcstar, &mcarrow)?;
    let t1_sketch = t1.to_sketch();
    let t0_sketch = e.base.to_sketch();

    let mut boundary_bad = None;
    let mut cartesian_bad = None;
    let mut problems = Vec::with_capacity(mcstar.models.len());
    for (i, m) in mcstar.models.iter().enumerate() {
        let Some(dec) =
            decode_star_model(m, &t1_sketch, &t0_sketch, &reindexed, side, &mc1, &mc0)
        else {
            boundary_bad.get_or_insert(format!("{star_kind} model M{i} does not decode"));
            continue;
        };
        let Some(k) = decode_arrow_model(&mcarrow.models[lamfun.obj_map[i]], &t1_sketch, &mc1)
        else {
            boundary_bad
                .get_or_insert(format!("Λ image of M{i} does not decode to a morphism"));
            continue;
        };
        let anchored = if fibration {
            mc1.cat.tgt(k) == dec.upstairs
        } else {
            mc1.cat.src(k) == dec.upstairs
        };
        if !anchored || ufun.mor_map[k] != dec.downstairs {
            boundary_bad.get_or_insert(format!(
                "Λ image of M{i} is h{k}, not a lift of h{} at M{}",
                dec.downstairs, dec.upstairs
            ));
        }
        let cart = if fibration {
            is_cartesian_morphism(&ufun, k)
        } else {
            is_opcartesian_morphism(&ufun, k)
        };
        if !cart {
            cartesian_bad.get_or_insert(format!(
                "Λ image of M{i} (morphism h{k}) is not {}cartesian",
                if fibration { "" } else { "op" }
            ));
        }
        problems.push((dec.upstairs, dec.downstairs));
    }
    report.check(
        "cleavage-boundary",
        boundary_bad.is_none(),
        boundary_bad
            .unwrap_or_else(|| format!("all {} chosen lifts anchored correctly", problems.len())),
    );
    report.check(
        "cleavage-cartesian",
        cartesian_bad.is_none(),
        cartesian_bad.unwrap_or_else(|| "all chosen lifts are universal".into()),
    );

    let mut wanted = Vec::new();
    for up in 0..mc1.models.len() {
        for k in 0..mc0.cat.morphisms.len() {
            let hit = if fibration {
                mc0.cat.tgt(k) == ufun.obj_map[up]
            } else {
                mc0.cat.src(k) == ufun.obj_map[up]
            };
            if hit {
                wanted.push((up, k));
            }
        }
    }
    let mut seen = problems.clone();
    seen.sort_unstable();
    let dup = seen.windows(2).any(|w| w[0] == w[1]);
    wanted.sort_unstable();
    report.check(
        "cleavage-complete",
        !dup && seen == wanted,
        if !dup && seen == wanted {
            format!("one chosen lift per lifting problem ({} problems)", wanted.len())
        } else if dup {
            "two star models decode to the same lifting problem".into()
        } else {
            format!("{} problems decoded, {} expected", seen.len(), wanted.len())
        },
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// The arrow-context model lemma
// ---------------------------------------------------------------------------

/// The invertible functor pair between the truncated model category of
/// arrw(T) and the arrow category of the truncated model category of T.
pub fn arrow_mod_equivalence(
    t: &Context,
    bound: usize,
) -> Result<(FinFunctor, FinFunctor), ModelError> {
    let (arrow_t, _, _) = crate::context::arrow_context(t);
    let mca = mod_category(&arrow_t, bound)?;
    let mc = mod_category(t, bound)?;
    let arr = crate::fincat::arrow_category(&mc.cat);
    let t_sketch = t.to_sketch();
    let arrow_sketch = arrow_t.to_sketch();
    let missing = || ModelError::NotInUniverse("arrow model does not decode".into());

    let mut fwd_obj = Vec::with_capacity(mca.models.len());
    for m in &mca.models {
        fwd_obj.push(decode_arrow_model(m, &t_sketch, &mc).ok_or_else(missing)?);
    }
    let mut fwd_mor = Vec::with_capacity(mca.homs.len());
    for (i, j, h) in &mca.homs {
        let pick = |side: u8| -> Result<ModelHom, ModelError> {
            let mut components = BTreeMap::new();
            for n in &t_sketch.nodes {
                let c = h
                    .components
                    .get(&NodeId(n.0.copy_suffix(side)))
                    .ok_or_else(missing)?
                    .clone();
                components.insert(n.clone(), c);
            }
            Ok(ModelHom { components })
        };
        let (ki, kj) = (fwd_obj[*i], fwd_obj[*j]);
        let u = mc
            .find_hom(mc.cat.src(ki), mc.cat.src(kj), &pick(0)?)
            .ok_or_else(missing)?;
        let v = mc
            .find_hom(mc.cat.tgt(ki), mc.cat.tgt(kj), &pick(1)?)
            .ok_or_else(missing)?;
        fwd_mor.push(arr.find_square(ki, kj, u, v).ok_or_else(missing)?);
    }
    let fwd = FinFunctor {
        dom: mca.cat.clone(),
        cod: arr.cat.clone(),
        obj_map: fwd_obj,
        mor_map: fwd_mor,
    };

    let mut back_obj = Vec::with_capacity(mc.homs.len());
    for (i, j, h) in &mc.homs {
        let (m0, m1) = (&mc.models[*i], &mc.models[*j]);
        let mut carriers = BTreeMap::new();
        for n in &t_sketch.nodes {
            carriers.insert(NodeId(n.0.copy_suffix(0)), m0.carriers[n]);
            carriers.insert(NodeId(n.0.copy_suffix(1)), m1.carriers[n]);
        }
        let mut actions = BTreeMap::new();
        for (eid, edge) in &t_sketch.edges {
            actions.insert(EdgeId(eid.0.copy_suffix(0)), m0.actions[eid].clone());
            actions.insert(EdgeId(eid.0.copy_suffix(1)), m1.actions[eid].clone());
            if !t_sketch.is_identity_edge(eid) {
                // θ_u = u⁰ then θ_tgt
                actions.insert(
                    EdgeId(eid.0.theta()),
                    compose_actions(&m0.actions[eid], &h.components[&edge.tgt]),
                );
            }
        }
        for n in &t_sketch.nodes {
            actions.insert(EdgeId(n.0.theta()), h.components[n].clone());
        }
        let model = FinSetModel { carriers, actions, strict: false };
        let model = FinSetModel { strict: is_strict(&arrow_sketch, &model), ..model };
        back_obj.push(mca.find_model(&model).ok_or_else(missing)?);
    }
    let mut back_mor = Vec::with_capacity(arr.squares.len());
    for (s, (u, v)) in arr.squares.iter().enumerate() {
        let (hu, hv) = (&mc.homs[*u].2, &mc.homs[*v].2);
        let mut components = BTreeMap::new();
        for n in &t_sketch.nodes {
            components.insert(NodeId(n.0.copy_suffix(0)), hu.components[n].clone());
            components.insert(NodeId(n.0.copy_suffix(1)), hv.components[n].clone());
        }
        let hom = ModelHom { components };
        let (k1, k2) = (arr.cat.src(s), arr.cat.tgt(s));
        back_mor.push(
            mca.find_hom(back_obj[k1], back_obj[k2], &hom).ok_or_else(missing)?,
        );
    }
    let back = FinFunctor {
        dom: arr.cat.clone(),
        cod: mca.cat.clone(),
        obj_map: back_obj,
        mor_map: back_mor,
    };
    Ok((fwd, back))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{object_classifier, pointed_object, pointed_object_extension};
    use crate::maps::extension_map;

    fn opt_assignment(x: usize, point: usize) -> PrimitiveAssignment {
        PrimitiveAssignment {
            nodes: BTreeMap::from([("X".into(), x)]),
            edges: BTreeMap::from([("x".into(), vec![point])]),
        }
    }

    #[test]
    fn pointed_object_eval_uses_canonical_terminal() {
        let m = eval_strict_model(&pointed_object(), &opt_assignment(2, 1)).unwrap();
        assert_eq!(m.carrier(&"1".into()), 1);
        assert_eq!(m.carrier(&"X".into()), 2);
        assert_eq!(m.action(&"x".into()), &[1]);
        assert!(validate_model(&pointed_object().to_sketch(), &m).ok());
    }

    #[test]
    fn canonical_pullback_of_two_maps_to_a_point_is_the_renumbered_product() {
        // cospan of two maps {0,1} → {0}
        let pairs = canonical_pullback_pairs(&[0, 0], &[0, 0]);
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn canonical_pushout_numbers_classes_by_least_representative() {
        // glue {0,1} and {0,1} along a single shared point 1 ~ 0
        let (classes, l1, l2) = canonical_pushout(2, 2, &[1], &[0]);
        assert_eq!(classes, 3);
        assert_eq!(l1, vec![0, 1]);
        assert_eq!(l2, vec![1, 2]);
    }

    #[test]
    fn mod_category_of_the_object_classifier_at_bound_two() {
        let mc = mod_category(&object_classifier(), 2).unwrap();
        assert_eq!(mc.models.len(), 3);
        assert_eq!(mc.homs.len(), 11);
        assert!(mc.cat.validate().ok());
    }

    #[test]
    fn mod_category_of_the_empty_context_is_terminal() {
        let mc = mod_category(&Context::empty(), 2).unwrap();
        assert_eq!(mc.models.len(), 1);
        assert_eq!(mc.homs.len(), 1);
    }

    #[test]
    fn mod_category_of_the_arrow_of_the_classifier_matches_its_arrow_category() {
        let (arrow, _, _) = crate::context::arrow_context(&object_classifier());
        let mc = mod_category(&arrow, 2).unwrap();
        // objects of the arrow category = the 11 functions between sets ≤ 2
        assert_eq!(mc.models.len(), 11);
        assert!(mc.cat.validate().ok());
    }

    #[test]
    fn reduction_along_the_extension_map_forgets_the_point() {
        let u = extension_map(&pointed_object_extension());
        let m = eval_strict_model(&pointed_object(), &opt_assignment(2, 0)).unwrap();
        let r = reduce_model(&m, &u).unwrap();
        assert_eq!(r.carriers, BTreeMap::from([("X".into(), 2)]));
        assert!(r.strict);
    }

    #[test]
    fn reduction_along_the_identity_is_the_identity() {
        let c = pointed_object();
        let h = ContextMap::identity(&c);
        let m = eval_strict_model(&c, &opt_assignment(2, 1)).unwrap();
        assert_eq!(reduce_model(&m, &h).unwrap(), m);
    }

    #[test]
    fn mod_functor_of_the_extension_map_is_the_forgetful_functor() {
        let u = extension_map(&pointed_object_extension());
        let from = mod_category(&u.from, 2).unwrap();
        let to = mod_category(&u.to, 2).unwrap();
        let f = mod_functor_between(&u, &from, &to).unwrap();
        assert!(f.validate().ok());
        // pointed sets at bound 2: X ∈ {1, 2} with a choice of point → 3 models
        assert_eq!(from.models.len(), 3);
        for (i, m) in from.models.iter().enumerate() {
            assert_eq!(to.models[f.obj_map[i]].carriers[&"X".into()], m.carriers[&"X".into()]);
        }
    }

    #[test]
    fn canonical_strict_isomorph_recovers_a_scrambled_terminal() {
        let u = pointed_object_extension();
        let c = u.extended();
        let sketch = c.to_sketch();
        let m1s = eval_strict_model(&c, &opt_assignment(2, 1)).unwrap();
        // swap the two elements of X; the terminal stays a singleton
        let scrambled =
            apply_permutations(&sketch, &m1s, &BTreeMap::from([("X".into(), vec![1, 0])]));
        let m0 = eval_strict_model(&u.base, &PrimitiveAssignment {
            nodes: BTreeMap::from([("X".into(), 2)]),
            edges: BTreeMap::new(),
        })
        .unwrap();
        let phi = ModelHom { components: BTreeMap::from([("X".into(), vec![1, 0])]) };
        let (m1strict, tilde) = canonical_strict_isomorph(&u, &scrambled, &m0, &phi).unwrap();
        assert!(m1strict.strict);
        // the point was 1, scrambling sent it to 0, phi pulls it back to 1
        assert_eq!(m1strict.action(&"x".into()), &[1]);
        assert_eq!(tilde.components[&"X".into()], vec![1, 0]);
        assert_eq!(tilde.components[&"1".into()], vec![0]);
    }

    #[test]
    fn strict_model_with_identity_phi_is_its_own_isomorph() {
        let u = pointed_object_extension();
        let c = u.extended();
        let m1 = eval_strict_model(&c, &opt_assignment(2, 0)).unwrap();
        let m0 = reduce_model(&m1, &extension_map(&u)).unwrap();
        let phi = ModelHom::identity(&m0);
        let (m1s, tilde) = canonical_strict_isomorph(&u, &m1, &m0, &phi).unwrap();
        assert_eq!(m1s, m1);
        assert_eq!(tilde, ModelHom::identity(&m1));
    }

    fn assert_mutually_inverse(fwd: &FinFunctor, back: &FinFunctor) {
        assert!(fwd.validate().ok());
        assert!(back.validate().ok());
        assert_eq!(fwd.then(back), FinFunctor::identity(&fwd.dom));
        assert_eq!(back.then(fwd), FinFunctor::identity(&back.dom));
    }

    #[test]
    fn arrow_models_of_the_classifier_form_its_arrow_category() {
        let (fwd, back) = arrow_mod_equivalence(&object_classifier(), 2).unwrap();
        assert_eq!(fwd.dom.objects.len(), 11);
        assert_mutually_inverse(&fwd, &back);
    }

    #[test]
    fn arrow_models_of_the_pointed_context_form_its_arrow_category() {
        let (fwd, back) = arrow_mod_equivalence(&pointed_object(), 2).unwrap();
        assert_mutually_inverse(&fwd, &back);
    }

    #[test]
    fn oracle_confirms_the_pointed_object_pushforward() {
        let e = pointed_object_extension();
        let cert = crate::corpus::pointed_object_certificate();
        let report = semantic_oracle(&e, &cert, 2);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn oracle_rejects_the_pointed_object_in_the_fibration_direction() {
        let e = pointed_object_extension();
        let mut cert = crate::corpus::pointed_object_certificate();
        cert.direction = crate::chevalley::Direction::Fibration;
        let report = semantic_oracle(&e, &cert, 2);
        assert!(!report.passed());
        let item = &report.items[0];
        assert_eq!(item.name, "underlying-fibration");
        assert_eq!(item.verdict, crate::report::Verdict::Fail);
        assert!(item.detail.contains("no cartesian lift"), "{}", item.detail);
    }

    #[test]
    fn oracle_confirms_the_prime_filter_inverse_image() {
        let e = crate::corpus::spec_extension();
        let cert = crate::corpus::spec_l_certificate();
        let report = semantic_oracle(&e, &cert, 2);
        assert!(report.passed(), "{report}");
    }
}
