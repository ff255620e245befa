//! Context maps (sketch homomorphism into an equivalence extension of the
//! domain), their composition by transport, 2-cells via the hom context, and
//! the objective-equality machinery.

use crate::context::{arrow_context, Context, ContextExtension, ExtensionStep};
use crate::equiv::{
    check_derivation, ClosureCertificate, ClosureEngine, EqCache, EquivDerivation, EquivStep,
    FillinData, IsoCertificate, RewriteStep,
};
use crate::name::{EdgeId, Name, NodeId};
use crate::sketch::{
    check_hom, Commutativity, Sketch, SketchHom, Universal, ValidationReport,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextMap {
    pub from: Context,
    pub to: Context,
    /// Equivalence derivation over `from`.
    pub derivation: EquivDerivation,
    /// Hom from `to_sketch(to)` into the derivation's extended sketch.
    pub hom: SketchHom,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum MapError {
    #[error("composition incomplete at step {step}: {reason}")]
    CompositionIncomplete { step: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

impl ContextMap {
    pub fn identity(c: &Context) -> ContextMap {
        let s = c.to_sketch();
        ContextMap {
            from: c.clone(),
            to: c.clone(),
            derivation: EquivDerivation { base: c.clone(), steps: vec![] },
            hom: SketchHom::identity(&s),
        }
    }

    /// The sketch the hom lands in.
    pub fn target_sketch(&self) -> Sketch {
        check_derivation(&self.derivation).expect("invalid derivation")
    }
}

pub fn check_map(h: &ContextMap) -> ValidationReport {
    let mut report = ValidationReport::default();
    if h.derivation.base != h.from {
        report.push("derivation base is not the map's domain context");
        return report;
    }
    let extended = match check_derivation(&h.derivation) {
        Ok(s) => s,
        Err(e) => {
            report.push(format!("derivation invalid: {e}"));
            return report;
        }
    };
    let to_sketch = match h.to.validate() {
        Ok(s) => s,
        Err(e) => {
            report.push(format!("codomain context invalid: {e}"));
            return report;
        }
    };
    if h.hom.domain != to_sketch {
        report.push("hom domain is not the codomain context's sketch");
    }
    if h.hom.codomain != extended {
        report.push("hom codomain is not the derivation's extended sketch");
    }
    report.violations.extend(check_hom(&h.hom).violations);
    report
}

/// The context map "backwards" along an extension: from the extended context
/// to the base, with the inclusion of the base sketch as its hom.
pub fn extension_map(e: &ContextExtension) -> ContextMap {
    let extended = e.extended();
    let base_sketch = e.base.to_sketch();
    let extended_sketch = extended.to_sketch();
    ContextMap {
        from: extended.clone(),
        to: e.base.clone(),
        derivation: EquivDerivation { base: extended, steps: vec![] },
        hom: SketchHom {
            domain: base_sketch.clone(),
            codomain: extended_sketch,
            node_map: base_sketch.nodes.iter().map(|n| (n.clone(), n.clone())).collect(),
            edge_map: base_sketch.edges.keys().map(|e| (e.clone(), e.clone())).collect(),
        },
    }
}

/// Diagonal π_T: T → T→.  The collapse hom sends both copies of X to X,
/// θ_X to s(X) and θ_u to u; the θ-commutativities land on degenerate unit
/// instances, so no equivalence extension is needed.
pub fn diagonal_map(c: &Context) -> ContextMap {
    let (c_arrow, _, _) = arrow_context(c);
    let sketch = c.to_sketch();
    let arrow_sketch = c_arrow.to_sketch();
    let mut node_map = BTreeMap::new();
    let mut edge_map = BTreeMap::new();
    for n in &sketch.nodes {
        for side in [0, 1] {
            node_map.insert(NodeId(n.0.copy_suffix(side)), n.clone());
        }
        edge_map.insert(EdgeId(n.0.theta()), sketch.identity[n].clone());
    }
    for (id, e) in &sketch.edges {
        for side in [0, 1] {
            edge_map.insert(EdgeId(id.0.copy_suffix(side)), id.clone());
        }
        if !sketch.is_identity_edge(id) {
            edge_map.insert(EdgeId(id.0.theta()), id.clone());
        }
        let _ = e;
    }
    ContextMap {
        from: c.clone(),
        to: c_arrow,
        derivation: EquivDerivation { base: c.clone(), steps: vec![] },
        hom: SketchHom { domain: arrow_sketch, codomain: sketch, node_map, edge_map },
    }
}

/// The collapse arrw(T) → T along one of the copy inclusions (its hom is
/// i_side).  Composing a 2-cell body with this map extracts a boundary.
pub fn collapse_map(c: &Context, side: u8) -> ContextMap {
    let (c_arrow, i0, i1) = arrow_context(c);
    let hom = if side == 0 { i0 } else { i1 };
    ContextMap {
        from: c_arrow.clone(),
        to: c.clone(),
        derivation: EquivDerivation { base: c_arrow, steps: vec![] },
        hom,
    }
}

// ---------------------------------------------------------------------------
// Transport of equivalence derivations (the engine behind composition)
// ---------------------------------------------------------------------------

pub(crate) fn freshen_node(s: &Sketch, candidate: NodeId) -> NodeId {
    let mut n = candidate;
    loop {
        if !s.nodes.contains(&n) && !s.edges.contains_key(&n.identity_edge()) {
            return n;
        }
        n = NodeId(Name::with_index(n.0.path.clone(), n.0.index + 1));
    }
}

pub(crate) fn freshen_edge(s: &Sketch, candidate: EdgeId) -> EdgeId {
    let mut e = candidate;
    loop {
        if !s.edges.contains_key(&e) {
            return e;
        }
        e = EdgeId(Name::with_index(e.0.path.clone(), e.0.index + 1));
    }
}

/// Replays equivalence steps over a new base, translating referenced data
/// through a name translation and re-deriving proof obligations there.
pub struct Transport {
    pub target: Sketch,
    pub out: Vec<EquivStep>,
    pub nodes: BTreeMap<NodeId, NodeId>,
    pub edges: BTreeMap<EdgeId, EdgeId>,
    pub budget: usize,
    /// Preferred transform for fresh names (identity for plain composition).
    pub rename: fn(&Name) -> Name,
    /// Saturation results carried across proof obligations.
    cache: EqCache,
}

fn rename_id(n: &Name) -> Name {
    n.clone()
}

impl Transport {
    pub fn from_hom(hom: &SketchHom, target: Sketch, budget: usize) -> Transport {
        Transport {
            target,
            out: vec![],
            nodes: hom.node_map.clone(),
            edges: hom.edge_map.clone(),
            budget,
            rename: rename_id,
            cache: EqCache::default(),
        }
    }

    pub fn node(&self, n: &NodeId) -> Result<NodeId, MapError> {
        self.nodes.get(n).cloned().ok_or_else(|| MapError::Invalid(format!("untranslated node {n}")))
    }

    pub fn edge(&self, e: &EdgeId) -> Result<EdgeId, MapError> {
        self.edges.get(e).cloned().ok_or_else(|| MapError::Invalid(format!("untranslated edge {e}")))
    }

    fn fresh_node(&mut self, n: &NodeId) -> NodeId {
        let cand = NodeId((self.rename)(&n.0));
        let fresh = freshen_node(&self.target, cand);
        self.nodes.insert(n.clone(), fresh.clone());
        self.edges.insert(n.identity_edge(), fresh.identity_edge());
        fresh
    }

    fn fresh_edge(&mut self, e: &EdgeId) -> EdgeId {
        let cand = EdgeId((self.rename)(&e.0));
        let fresh = freshen_edge(&self.target, cand);
        self.edges.insert(e.clone(), fresh.clone());
        fresh
    }

    fn prove(&mut self, lhs: &[EdgeId], rhs: &[EdgeId], at: usize) -> Result<ClosureCertificate, MapError> {
        let (proof, cache) = {
            let mut engine = ClosureEngine::new(&self.target, self.budget);
            engine.seed(&self.cache);
            let proof = engine.prove(lhs, rhs);
            (proof, engine.cache())
        };
        self.cache = cache;
        proof.ok_or_else(|| MapError::CompositionIncomplete {
            step: at,
            reason: format!("could not re-derive {lhs:?} ~ {rhs:?}"),
        })
    }

    fn push(&mut self, step: EquivStep, at: usize) -> Result<(), MapError> {
        self.target = crate::equiv::apply_equiv_step(&self.target, self.out.len(), &step)
            .map_err(|e| MapError::CompositionIncomplete { step: at, reason: e.to_string() })?;
        self.out.push(step);
        Ok(())
    }

    /// Transport one step; `at` indexes the source derivation (diagnostics).
    pub fn step(&mut self, at: usize, step: &EquivStep) -> Result<(), MapError> {
        match step {
            EquivStep::AddComposite { first, second, name } => {
                let f = self.edge(first)?;
                let g = self.edge(second)?;
                // unit laws: composing with an identity is the other factor
                if self.target.is_identity_edge(&f) {
                    self.edges.insert(name.clone(), g);
                    return Ok(());
                }
                if self.target.is_identity_edge(&g) {
                    self.edges.insert(name.clone(), f);
                    return Ok(());
                }
                // reuse an existing composite edge when one is declared
                if let Some(c) = self
                    .target
                    .commutativities
                    .iter()
                    .find(|c| c.first == f && c.second == g)
                    .map(|c| c.composite.clone())
                {
                    self.edges.insert(name.clone(), c);
                    return Ok(());
                }
                let fresh = self.fresh_edge(name);
                self.push(EquivStep::AddComposite { first: f, second: g, name: fresh }, at)
            }
            EquivStep::AddCategoryLawCommutativity { goal, .. } => {
                let goal = Commutativity {
                    first: self.edge(&goal.first)?,
                    second: self.edge(&goal.second)?,
                    composite: self.edge(&goal.composite)?,
                };
                if self.target.holds_comm(&goal) {
                    return Ok(());
                }
                let proof = self.prove(
                    &[goal.first.clone(), goal.second.clone()],
                    &[goal.composite.clone()],
                    at,
                )?;
                self.push(EquivStep::AddCategoryLawCommutativity { goal, proof }, at)
            }
            EquivStep::AddUniversal { step } => {
                // reuse an existing record over the same translated data
                if self.reuse_universal(step)? {
                    return Ok(());
                }
                let translated = self.translate_universal_step(step)?;
                self.push(EquivStep::AddUniversal { step: translated }, at)
            }
            EquivStep::AddFillin { universal, data, name, .. } => {
                let subject = self.node(universal)?;
                let u = self
                    .target
                    .universal_with_subject(&subject)
                    .ok_or_else(|| MapError::Invalid(format!("{subject} lost universal status")))?
                    .clone();
                let data = match data {
                    FillinData::Terminal { src } => FillinData::Terminal { src: self.node(src)? },
                    FillinData::Initial { tgt } => FillinData::Initial { tgt: self.node(tgt)? },
                    FillinData::Pullback { leg1, leg2, diag } => FillinData::Pullback {
                        leg1: self.edge(leg1)?,
                        leg2: self.edge(leg2)?,
                        diag: self.edge(diag)?,
                    },
                    FillinData::Pushout { leg1, leg2, diag } => FillinData::Pushout {
                        leg1: self.edge(leg1)?,
                        leg2: self.edge(leg2)?,
                        diag: self.edge(diag)?,
                    },
                };
                // reuse an edge already declared to carry the same cone
                if let Some(existing) = self.find_fillin(&u, &data) {
                    self.edges.insert(name.clone(), existing);
                    return Ok(());
                }
                let proofs = match (&data, &u) {
                    (FillinData::Terminal { .. }, _) | (FillinData::Initial { .. }, _) => vec![],
                    (
                        FillinData::Pullback { leg1: v1, leg2: v2, diag: v },
                        Universal::Pullback { cospan1, cospan2, .. },
                    ) => vec![
                        self.prove(&[v1.clone(), cospan1.clone()], &[v.clone()], at)?,
                        self.prove(&[v2.clone(), cospan2.clone()], &[v.clone()], at)?,
                    ],
                    (
                        FillinData::Pushout { leg1: v1, leg2: v2, diag: v },
                        Universal::Pushout { span1, span2, .. },
                    ) => vec![
                        self.prove(&[span1.clone(), v1.clone()], &[v.clone()], at)?,
                        self.prove(&[span2.clone(), v2.clone()], &[v.clone()], at)?,
                    ],
                    _ => return Err(MapError::Invalid("fillin kind mismatch".into())),
                };
                let fresh = self.fresh_edge(name);
                self.push(EquivStep::AddFillin { universal: subject, data, proofs, name: fresh }, at)
            }
            EquivStep::AddFillinUniqueness { universal, fillin1, fillin2, .. } => {
                let subject = self.node(universal)?;
                let (f1, f2) = (self.edge(fillin1)?, self.edge(fillin2)?);
                if f1 == f2 {
                    return Ok(());
                }
                let u = self
                    .target
                    .universal_with_subject(&subject)
                    .ok_or_else(|| MapError::Invalid(format!("{subject} lost universal status")))?
                    .clone();
                let proofs = match &u {
                    Universal::Terminal { .. } | Universal::Initial { .. } => vec![],
                    Universal::Pullback { leg1, leg2, .. } => vec![
                        self.prove(&[f1.clone(), leg1.clone()], &[f2.clone(), leg1.clone()], at)?,
                        self.prove(&[f1.clone(), leg2.clone()], &[f2.clone(), leg2.clone()], at)?,
                    ],
                    Universal::Pushout { leg1, leg2, .. } => vec![
                        self.prove(&[leg1.clone(), f1.clone()], &[leg1.clone(), f2.clone()], at)?,
                        self.prove(&[leg2.clone(), f1.clone()], &[leg2.clone(), f2.clone()], at)?,
                    ],
                    Universal::List { .. } => {
                        return Err(MapError::Invalid("list fillin-uniqueness unsupported".into()))
                    }
                };
                self.push(
                    EquivStep::AddFillinUniqueness { universal: subject, fillin1: f1, fillin2: f2, proofs },
                    at,
                )
            }
            EquivStep::AddInverse { edge, iso, name } => {
                let e = self.edge(edge)?;
                let from_subject = self.node(&iso.from_subject)?;
                let to_subject = self.node(&iso.to_subject)?;
                let uf = self
                    .target
                    .universal_with_subject(&from_subject)
                    .cloned()
                    .ok_or_else(|| MapError::Invalid(format!("{from_subject} lost universal status")))?;
                let ut = self
                    .target
                    .universal_with_subject(&to_subject)
                    .cloned()
                    .ok_or_else(|| MapError::Invalid(format!("{to_subject} lost universal status")))?;
                let (data_eq, compat) = match (&uf, &ut) {
                    (Universal::Terminal { .. }, Universal::Terminal { .. })
                    | (Universal::Initial { .. }, Universal::Initial { .. }) => (vec![], vec![]),
                    (
                        Universal::Pullback { leg1: p1, leg2: p2, cospan1: c1, cospan2: c2, .. },
                        Universal::Pullback { leg1: q1, leg2: q2, cospan1: d1, cospan2: d2, .. },
                    ) => (
                        vec![
                            self.prove(&[c1.clone()], &[d1.clone()], at)?,
                            self.prove(&[c2.clone()], &[d2.clone()], at)?,
                        ],
                        vec![
                            self.prove(&[e.clone(), q1.clone()], &[p1.clone()], at)?,
                            self.prove(&[e.clone(), q2.clone()], &[p2.clone()], at)?,
                        ],
                    ),
                    (
                        Universal::Pushout { leg1: p1, leg2: p2, span1: c1, span2: c2, .. },
                        Universal::Pushout { leg1: q1, leg2: q2, span1: d1, span2: d2, .. },
                    ) => (
                        vec![
                            self.prove(&[c1.clone()], &[d1.clone()], at)?,
                            self.prove(&[c2.clone()], &[d2.clone()], at)?,
                        ],
                        vec![
                            self.prove(&[p1.clone(), e.clone()], &[q1.clone()], at)?,
                            self.prove(&[p2.clone(), e.clone()], &[q2.clone()], at)?,
                        ],
                    ),
                    _ => return Err(MapError::Invalid("inverse pattern mismatch".into())),
                };
                let fresh = self.fresh_edge(name);
                self.push(
                    EquivStep::AddInverse {
                        edge: e,
                        iso: IsoCertificate { from_subject, to_subject, data_eq, compat },
                        name: fresh,
                    },
                    at,
                )
            }
        }
    }

    fn bind_node(&mut self, src: &NodeId, dst: &NodeId) {
        let id = self.target.identity[dst].clone();
        self.nodes.insert(src.clone(), dst.clone());
        self.edges.insert(src.identity_edge(), id);
    }

    /// Bind a transported universal step to an existing record over the same
    /// translated data instead of duplicating the construction.
    fn reuse_universal(&mut self, step: &ExtensionStep) -> Result<bool, MapError> {
        match step {
            ExtensionStep::AddTerminal { name } => {
                let Some(subject) = self.target.universals.iter().find_map(|u| match u {
                    Universal::Terminal { subject } => Some(subject.clone()),
                    _ => None,
                }) else {
                    return Ok(false);
                };
                self.bind_node(name, &subject);
                Ok(true)
            }
            ExtensionStep::AddInitial { name } => {
                let Some(subject) = self.target.universals.iter().find_map(|u| match u {
                    Universal::Initial { subject } => Some(subject.clone()),
                    _ => None,
                }) else {
                    return Ok(false);
                };
                self.bind_node(name, &subject);
                Ok(true)
            }
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, diag, cospan1, cospan2 } => {
                let c1 = self.edge(cospan1)?;
                let c2 = self.edge(cospan2)?;
                let Some((a, l1, l2, d)) = self.target.universals.iter().find_map(|u| match u {
                    Universal::Pullback { apex, leg1, leg2, diag, cospan1, cospan2, .. }
                        if *cospan1 == c1 && *cospan2 == c2 =>
                    {
                        Some((apex.clone(), leg1.clone(), leg2.clone(), diag.clone()))
                    }
                    _ => None,
                }) else {
                    return Ok(false);
                };
                self.bind_node(apex, &a);
                self.edges.insert(leg1.clone(), l1);
                self.edges.insert(leg2.clone(), l2);
                self.edges.insert(diag.clone(), d);
                Ok(true)
            }
            ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, diag, span1, span2 } => {
                let s1 = self.edge(span1)?;
                let s2 = self.edge(span2)?;
                let Some((a, l1, l2, d)) = self.target.universals.iter().find_map(|u| match u {
                    Universal::Pushout { apex, leg1, leg2, diag, span1, span2, .. }
                        if *span1 == s1 && *span2 == s2 =>
                    {
                        Some((apex.clone(), leg1.clone(), leg2.clone(), diag.clone()))
                    }
                    _ => None,
                }) else {
                    return Ok(false);
                };
                self.bind_node(apex, &a);
                self.edges.insert(leg1.clone(), l1);
                self.edges.insert(leg2.clone(), l2);
                self.edges.insert(diag.clone(), d);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    /// Look for an edge already declared (by commutativities) to carry the
    /// same fillin cone into/out of the universal.
    fn find_fillin(&self, u: &Universal, data: &FillinData) -> Option<EdgeId> {
        match (data, u) {
            (FillinData::Terminal { src }, Universal::Terminal { subject })
            | (FillinData::Initial { tgt: src }, Universal::Initial { subject })
                if src == subject =>
            {
                Some(self.target.identity[subject].clone())
            }
            (
                FillinData::Pullback { leg1: v1, leg2: v2, .. },
                Universal::Pullback { apex, leg1, leg2, .. },
            ) if v1 == leg1 && v2 == leg2 => Some(self.target.identity[apex].clone()),
            (
                FillinData::Pullback { leg1: v1, leg2: v2, .. },
                Universal::Pullback { leg1, leg2, .. },
            ) => self
                .target
                .commutativities
                .iter()
                .find(|c| {
                    c.second == *leg1
                        && c.composite == *v1
                        && self.target.commutativities.contains(&Commutativity {
                            first: c.first.clone(),
                            second: leg2.clone(),
                            composite: v2.clone(),
                        })
                })
                .map(|c| c.first.clone()),
            (
                FillinData::Pushout { leg1: v1, leg2: v2, .. },
                Universal::Pushout { apex, leg1, leg2, .. },
            ) if v1 == leg1 && v2 == leg2 => Some(self.target.identity[apex].clone()),
            (
                FillinData::Pushout { leg1: v1, leg2: v2, .. },
                Universal::Pushout { leg1, leg2, .. },
            ) => self
                .target
                .commutativities
                .iter()
                .find(|c| {
                    c.first == *leg1
                        && c.composite == *v1
                        && self.target.commutativities.contains(&Commutativity {
                            first: leg2.clone(),
                            second: c.second.clone(),
                            composite: v2.clone(),
                        })
                })
                .map(|c| c.second.clone()),
            _ => None,
        }
    }

    fn translate_universal_step(&mut self, step: &ExtensionStep) -> Result<ExtensionStep, MapError> {
        Ok(match step {
            ExtensionStep::AddTerminal { name } => {
                ExtensionStep::AddTerminal { name: self.fresh_node(name) }
            }
            ExtensionStep::AddInitial { name } => {
                ExtensionStep::AddInitial { name: self.fresh_node(name) }
            }
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, diag, cospan1, cospan2 } => {
                let c1 = self.edge(cospan1)?;
                let c2 = self.edge(cospan2)?;
                ExtensionStep::AddPullbackUniversal {
                    apex: self.fresh_node(apex),
                    leg1: self.fresh_edge(leg1),
                    leg2: self.fresh_edge(leg2),
                    diag: self.fresh_edge(diag),
                    cospan1: c1,
                    cospan2: c2,
                }
            }
            ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, diag, span1, span2 } => {
                let s1 = self.edge(span1)?;
                let s2 = self.edge(span2)?;
                ExtensionStep::AddPushoutUniversal {
                    apex: self.fresh_node(apex),
                    leg1: self.fresh_edge(leg1),
                    leg2: self.fresh_edge(leg2),
                    diag: self.fresh_edge(diag),
                    span1: s1,
                    span2: s2,
                }
            }
            ExtensionStep::AddListUniversal {
                param,
                subject,
                empty_src,
                empty,
                cons_apex,
                cons_proj1,
                cons_proj2,
                cons,
            } => {
                let param = self.node(param)?;
                let empty_src = self.node(empty_src)?;
                ExtensionStep::AddListUniversal {
                    param,
                    subject: self.fresh_node(subject),
                    empty_src,
                    empty: self.fresh_edge(empty),
                    cons_apex: self.fresh_node(cons_apex),
                    cons_proj1: self.fresh_edge(cons_proj1),
                    cons_proj2: self.fresh_edge(cons_proj2),
                    cons: self.fresh_edge(cons),
                }
            }
            _ => return Err(MapError::Invalid("not a universal step".into())),
        })
    }
}

// ---------------------------------------------------------------------------
// Composition and normalization
// ---------------------------------------------------------------------------

/// Composite T0 → T2 of h: T0→T1 and k: T1→T2 by transporting k's
/// equivalence derivation across h.
pub fn compose_maps(k: &ContextMap, h: &ContextMap) -> Result<ContextMap, MapError> {
    if k.from != h.to {
        return Err(MapError::Invalid("maps do not compose: h.to != k.from".into()));
    }
    let budget = crate::equiv::budget_from_env();
    let h_target = h.target_sketch();
    let mut tr = Transport::from_hom(&h.hom, h_target, budget);
    for (i, step) in k.derivation.steps.iter().enumerate() {
        tr.step(i, step)?;
    }
    let mut node_map = BTreeMap::new();
    let mut edge_map = BTreeMap::new();
    for (n, m) in &k.hom.node_map {
        node_map.insert(n.clone(), tr.node(m)?);
    }
    for (e, m) in &k.hom.edge_map {
        edge_map.insert(e.clone(), tr.edge(m)?);
    }
    let mut steps = h.derivation.steps.clone();
    steps.extend(tr.out);
    let composite = ContextMap {
        from: h.from.clone(),
        to: k.to.clone(),
        derivation: EquivDerivation { base: h.from.clone(), steps },
        hom: SketchHom {
            domain: k.hom.domain.clone(),
            codomain: tr.target,
            node_map,
            edge_map,
        },
    };
    Ok(normalize(&composite))
}

/// Strip unused equivalence-derivation steps (administrative junk from
/// composition) so that composition with identities is syntactically inert.
pub fn normalize(m: &ContextMap) -> ContextMap {
    let base = m.from.to_sketch();
    let mut pr = Prune {
        base: &base,
        cod: &m.hom.codomain,
        needed_edges: m.hom.edge_map.values().cloned().collect(),
        needed_nodes: m.hom.node_map.values().cloned().collect(),
        required_comms: BTreeSet::new(),
        required_records: BTreeSet::new(),
    };
    // obligations the hom itself imposes on the extension
    for c in &m.hom.domain.commutativities {
        if let (Some(f), Some(s), Some(d)) = (
            m.hom.edge_map.get(&c.first),
            m.hom.edge_map.get(&c.second),
            m.hom.edge_map.get(&c.composite),
        ) {
            pr.require_comm(&Commutativity {
                first: f.clone(),
                second: s.clone(),
                composite: d.clone(),
            });
        }
    }
    for u in &m.hom.domain.universals {
        if let Some(img) = m.hom.node_map.get(u.subject()) {
            pr.require_record(img);
        }
    }
    // reverse sweep: dependencies only point backwards, so one pass settles it
    let steps = &m.derivation.steps;
    let mut keep = vec![false; steps.len()];
    for i in (0..steps.len()).rev() {
        if pr.step_needed(&steps[i]) {
            keep[i] = true;
            pr.mark_deps(&steps[i]);
        }
    }
    if keep.iter().all(|&k| k) {
        return m.clone();
    }
    let kept: Vec<EquivStep> =
        steps.iter().zip(&keep).filter(|(_, &k)| k).map(|(s, _)| s.clone()).collect();
    let derivation = EquivDerivation { base: m.from.clone(), steps: kept };
    match check_derivation(&derivation) {
        Ok(extended) => {
            let mut out = m.clone();
            out.derivation = derivation;
            out.hom.codomain = extended;
            out
        }
        Err(_) => m.clone(),
    }
}

/// Marking state for the normalize sweep.
struct Prune<'a> {
    base: &'a Sketch,
    cod: &'a Sketch,
    needed_edges: BTreeSet<EdgeId>,
    needed_nodes: BTreeSet<NodeId>,
    required_comms: BTreeSet<Commutativity>,
    required_records: BTreeSet<NodeId>,
}

impl Prune<'_> {
    fn require_comm(&mut self, c: &Commutativity) {
        self.needed_edges.insert(c.first.clone());
        self.needed_edges.insert(c.second.clone());
        self.needed_edges.insert(c.composite.clone());
        let trivial = (self.cod.is_identity_edge(&c.first) && c.second == c.composite)
            || (self.cod.is_identity_edge(&c.second) && c.first == c.composite);
        if !trivial && !self.base.commutativities.contains(c) {
            self.required_comms.insert(c.clone());
        }
    }

    fn require_record(&mut self, subject: &NodeId) {
        self.needed_nodes.insert(subject.clone());
        if self.base.universal_with_subject(subject).is_none() {
            self.required_records.insert(subject.clone());
        }
    }

    fn cert_deps(&mut self, cert: &ClosureCertificate) {
        self.needed_edges.extend(cert.lhs.iter().cloned());
        self.needed_edges.extend(cert.rhs.iter().cloned());
        for st in &cert.steps {
            match st {
                RewriteStep::UnitIntro { edge, .. } => {
                    self.needed_edges.insert(edge.clone());
                }
                RewriteStep::UnitElim { .. } => {}
                RewriteStep::CommFold { comm, .. } | RewriteStep::CommUnfold { comm, .. } => {
                    self.require_comm(comm)
                }
                RewriteStep::FillinUnique { subject, replacement, proofs, .. } => {
                    self.needed_edges.insert(replacement.clone());
                    self.require_record(subject);
                    for p in proofs {
                        self.cert_deps(p);
                    }
                }
            }
        }
    }

    fn universal_names(step: &ExtensionStep) -> (Vec<&NodeId>, Vec<&EdgeId>) {
        match step {
            ExtensionStep::AddTerminal { name } | ExtensionStep::AddInitial { name } => {
                (vec![name], vec![])
            }
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, diag, .. }
            | ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, diag, .. } => {
                (vec![apex], vec![leg1, leg2, diag])
            }
            ExtensionStep::AddListUniversal {
                subject, cons_apex, empty, cons_proj1, cons_proj2, cons, ..
            } => (vec![subject, cons_apex], vec![empty, cons_proj1, cons_proj2, cons]),
            _ => (vec![], vec![]),
        }
    }

    fn step_needed(&self, step: &EquivStep) -> bool {
        match step {
            EquivStep::AddComposite { name, .. }
            | EquivStep::AddFillin { name, .. }
            | EquivStep::AddInverse { name, .. } => self.needed_edges.contains(name),
            EquivStep::AddCategoryLawCommutativity { goal, .. } => {
                self.required_comms.contains(goal)
            }
            EquivStep::AddUniversal { step } => {
                let (nodes, edges) = Self::universal_names(step);
                nodes.iter().any(|n| {
                    self.needed_nodes.contains(n)
                        || self.needed_edges.contains(&n.identity_edge())
                        || self.required_records.contains(*n)
                }) || edges.iter().any(|e| self.needed_edges.contains(e))
            }
            EquivStep::AddFillinUniqueness { fillin1, fillin2, .. } => {
                let Some(e1) = self.cod.edge(fillin1) else { return false };
                self.required_comms.contains(&Commutativity {
                    first: self.cod.identity[&e1.src].clone(),
                    second: fillin1.clone(),
                    composite: fillin2.clone(),
                })
            }
        }
    }

    fn mark_deps(&mut self, step: &EquivStep) {
        match step {
            EquivStep::AddComposite { first, second, .. } => {
                self.needed_edges.insert(first.clone());
                self.needed_edges.insert(second.clone());
            }
            EquivStep::AddCategoryLawCommutativity { goal, proof } => {
                self.needed_edges.insert(goal.first.clone());
                self.needed_edges.insert(goal.second.clone());
                self.needed_edges.insert(goal.composite.clone());
                self.cert_deps(proof);
            }
            EquivStep::AddUniversal { step } => match step {
                ExtensionStep::AddPullbackUniversal { cospan1, cospan2, .. } => {
                    self.needed_edges.insert(cospan1.clone());
                    self.needed_edges.insert(cospan2.clone());
                }
                ExtensionStep::AddPushoutUniversal { span1, span2, .. } => {
                    self.needed_edges.insert(span1.clone());
                    self.needed_edges.insert(span2.clone());
                }
                ExtensionStep::AddListUniversal { param, empty_src, .. } => {
                    self.needed_nodes.insert(param.clone());
                    self.needed_nodes.insert(empty_src.clone());
                }
                _ => {}
            },
            EquivStep::AddFillin { universal, data, proofs, .. } => {
                self.require_record(universal);
                match data {
                    FillinData::Terminal { src } => {
                        self.needed_nodes.insert(src.clone());
                    }
                    FillinData::Initial { tgt } => {
                        self.needed_nodes.insert(tgt.clone());
                    }
                    FillinData::Pullback { leg1, leg2, diag }
                    | FillinData::Pushout { leg1, leg2, diag } => {
                        self.needed_edges.insert(leg1.clone());
                        self.needed_edges.insert(leg2.clone());
                        self.needed_edges.insert(diag.clone());
                    }
                }
                for p in proofs {
                    self.cert_deps(p);
                }
            }
            EquivStep::AddFillinUniqueness { universal, fillin1, fillin2, proofs } => {
                self.require_record(universal);
                self.needed_edges.insert(fillin1.clone());
                self.needed_edges.insert(fillin2.clone());
                for p in proofs {
                    self.cert_deps(p);
                }
            }
            EquivStep::AddInverse { edge, iso, .. } => {
                self.needed_edges.insert(edge.clone());
                self.require_record(&iso.from_subject);
                self.require_record(&iso.to_subject);
                for p in iso.data_eq.iter().chain(&iso.compat) {
                    self.cert_deps(p);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2-cells and objective equality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoCell {
    pub lhs: ContextMap,
    pub rhs: ContextMap,
    /// Map from `lhs.from` into arrow_context(lhs.to).
    pub body: ContextMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeJustification {
    /// θ_X is interpreted by a literal identity edge.
    Identity,
    /// θ_X is the canonical fillin between two universal constructions of
    /// the same kind on provably equal data.
    DuplicateUniversal,
}

/// Per-node justifications that a 2-cell's θ_X components are forced to be
/// identities in every strict model.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObjEqWitness {
    pub nodes: BTreeMap<NodeId, NodeJustification>,
}

/// Extract a boundary of a 2-cell: compose the body with the collapse along
/// i0/i1.
pub fn whisker_boundary(t: &TwoCell, side: u8) -> Result<ContextMap, MapError> {
    let collapse = collapse_map(&t.lhs.to, side);
    compose_maps(&collapse, &t.body)
}

pub fn check_two_cell(t: &TwoCell) -> ValidationReport {
    let mut report = check_map(&t.body);
    if t.lhs.from != t.rhs.from || t.lhs.to != t.rhs.to {
        report.push("lhs and rhs are not parallel");
        return report;
    }
    for (side, expect) in [(0u8, &t.lhs), (1u8, &t.rhs)] {
        match whisker_boundary(t, side) {
            Ok(b) => {
                if !map_equal(&b, expect) {
                    report.push(format!("boundary {side} does not match"));
                }
            }
            Err(e) => report.push(format!("boundary {side} composition failed: {e}")),
        }
    }
    report
}

/// Merge the equivalence derivations of two parallel maps into a single
/// extension of their common domain, with both homs re-pointed there.
fn merge_parallel(
    h1: &ContextMap,
    h2: &ContextMap,
    budget: usize,
) -> Result<(Vec<EquivStep>, Sketch, SketchHom, SketchHom), MapError> {
    let base_sketch = h1.from.to_sketch();
    let ext1 = h1.target_sketch();
    let mut tr = Transport::from_hom(&SketchHom::identity(&base_sketch), ext1, budget);
    // the first derivation is kept verbatim; re-point the translation table
    // at the already-extended sketch
    for n in tr.target.nodes.clone() {
        tr.nodes.entry(n.clone()).or_insert(n);
    }
    for e in tr.target.edges.keys().cloned().collect::<Vec<_>>() {
        tr.edges.entry(e.clone()).or_insert(e);
    }
    for (i, step) in h2.derivation.steps.iter().enumerate() {
        tr.step(i, step)?;
    }
    let remap = |hom: &SketchHom, tr: &Transport| -> Result<SketchHom, MapError> {
        let mut node_map = BTreeMap::new();
        let mut edge_map = BTreeMap::new();
        for (n, m) in &hom.node_map {
            node_map.insert(n.clone(), tr.node(m)?);
        }
        for (e, m) in &hom.edge_map {
            edge_map.insert(e.clone(), tr.edge(m)?);
        }
        Ok(SketchHom {
            domain: hom.domain.clone(),
            codomain: tr.target.clone(),
            node_map,
            edge_map,
        })
    };
    // h1's hom needs only the codomain refresh (its names are untouched)
    let mut hom1 = h1.hom.clone();
    hom1.codomain = tr.target.clone();
    let hom2 = remap(&h2.hom, &tr)?;
    let mut steps = h1.derivation.steps.clone();
    steps.extend(tr.out.clone());
    Ok((steps, tr.target, hom1, hom2))
}

/// A reference to an edge available while building a 2-cell component:
/// either an existing edge of the merged sketch or the ι of an
/// already-processed node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    Edge(EdgeId),
    Iota(NodeId),
}

/// An auxiliary composite materialized before a fillin component; the final
/// edge is registered under `name` for use in the fillin data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepComposite {
    pub path: Vec<Piece>,
    pub name: EdgeId,
}

/// Recipe for one θ_X component of a 2-cell body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeComponent {
    Identity,
    DuplicateUniversal,
    /// ι_X is a fillin into the rhs image (terminal/pullback) or out of the
    /// lhs image (initial/pushout); cone proofs are derived on the spot.
    Fillin { prep: Vec<PrepComposite>, data: FillinData },
}

/// Construct an objective-equality 2-cell h1 ≐ h2, using supplied per-node
/// justifications when given and the narrow automatic search otherwise.
pub fn build_obj_eq_two_cell(
    h1: &ContextMap,
    h2: &ContextMap,
    witness: Option<&ObjEqWitness>,
    budget: usize,
) -> Result<TwoCell, MapError> {
    let components = witness
        .map(|w| {
            w.nodes
                .iter()
                .map(|(n, j)| {
                    let c = match j {
                        NodeJustification::Identity => NodeComponent::Identity,
                        NodeJustification::DuplicateUniversal => NodeComponent::DuplicateUniversal,
                    };
                    (n.clone(), c)
                })
                .collect()
        })
        .unwrap_or_default();
    build_two_cell_with(h1, h2, &components, budget)
}

/// Construct a (not necessarily invertible) 2-cell h1 ⇒ h2 from per-node
/// component recipes; unsupplied nodes fall back to the objective-equality
/// search (identity when the images agree, duplicate universal otherwise).
pub fn build_two_cell_with(
    h1: &ContextMap,
    h2: &ContextMap,
    components: &BTreeMap<NodeId, NodeComponent>,
    budget: usize,
) -> Result<TwoCell, MapError> {
    if h1.from != h2.from || h1.to != h2.to {
        return Err(MapError::Invalid("maps are not parallel".into()));
    }
    let (mut steps, sketch, hom1, hom2) = merge_parallel(h1, h2, budget)?;
    let to_sketch = h1.to.to_sketch();
    let (arrow_to, _, _) = arrow_context(&h1.to);
    let arrow_sketch = arrow_to.to_sketch();
    let mut target = sketch;
    let mut node_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut edge_map: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    // copies
    for n in &to_sketch.nodes {
        node_map.insert(NodeId(n.0.copy_suffix(0)), hom1.node(n));
        node_map.insert(NodeId(n.0.copy_suffix(1)), hom2.node(n));
    }
    for e in to_sketch.edges.keys() {
        edge_map.insert(EdgeId(e.0.copy_suffix(0)), hom1.edge(e));
        edge_map.insert(EdgeId(e.0.copy_suffix(1)), hom2.edge(e));
    }
    let push = |step: EquivStep, target: &mut Sketch, steps: &mut Vec<EquivStep>| -> Result<(), MapError> {
        *target = crate::equiv::apply_equiv_step(target, steps.len(), &step)
            .map_err(|e| MapError::Invalid(format!("witness construction: {e}")))?;
        steps.push(step);
        Ok(())
    };
    // θ_X components, in introduction order so later fillins can reference
    // the ι of earlier nodes
    let mut cache = EqCache::default();
    let mut iota: BTreeMap<NodeId, EdgeId> = BTreeMap::new();
    for x in h1.to.nodes_in_order() {
        let a = hom1.node(&x);
        let b = hom2.node(&x);
        let component = match components.get(&x) {
            Some(c) => c.clone(),
            None => {
                if a == b {
                    NodeComponent::Identity
                } else {
                    NodeComponent::DuplicateUniversal
                }
            }
        };
        let edge = match component {
            NodeComponent::Identity => {
                if a != b {
                    return Err(MapError::Invalid(format!(
                        "node {x}: identity justification but images {a} and {b} differ"
                    )));
                }
                target.identity[&a].clone()
            }
            NodeComponent::DuplicateUniversal => build_duplicate_universal_iota(
                &mut target, &mut steps, &mut cache, &a, &b, &x, budget,
            )?,
            NodeComponent::Fillin { prep, data } => build_fillin_iota(
                &mut target, &mut steps, &mut cache, &iota, &prep, &data, &a, &b, &x, budget,
            )?,
        };
        iota.insert(x.clone(), edge.clone());
        edge_map.insert(EdgeId(x.0.theta()), edge);
    }
    // θ_u components, in two passes: first adjoin every θ_u ↦ ι_Y ∘ e1
    // together with an auxiliary ι_X ∘ e2 composite (an edge the closure
    // engine can identify with θ_u through universal saturation), then derive
    // the naturality triangles once all composites are available
    let mut goals: Vec<(EdgeId, Commutativity, EdgeId)> = Vec::new();
    for u in to_sketch.non_identity_edges().map(|e| e.clone()).collect::<Vec<_>>() {
        let e1 = hom1.edge(&u.id);
        let e2 = hom2.edge(&u.id);
        let ix = iota[&u.src].clone();
        let iy = iota[&u.tgt].clone();
        let theta_u = EdgeId(u.id.0.theta());
        let ix_identity = target.is_identity_edge(&ix);
        let iy_identity = target.is_identity_edge(&iy);
        if ix_identity && iy_identity && e1 == e2 {
            // θ_u ↦ the common image; both θ-commutativities are unit laws
            edge_map.insert(theta_u, e1);
            continue;
        }
        let name = freshen_edge(&target, EdgeId(u.id.0.theta()));
        push(
            EquivStep::AddComposite { first: e1.clone(), second: iy.clone(), name: name.clone() },
            &mut target,
            &mut steps,
        )?;
        let aux = freshen_edge(&target, EdgeId(Name::new(format!("nat:{}", u.id))));
        push(
            EquivStep::AddComposite { first: ix.clone(), second: e2.clone(), name: aux.clone() },
            &mut target,
            &mut steps,
        )?;
        goals.push((
            u.id.clone(),
            Commutativity { first: ix, second: e2, composite: name.clone() },
            aux,
        ));
        edge_map.insert(theta_u, name);
    }
    let mut pending: Vec<(EdgeId, Commutativity, EdgeId)> =
        goals.into_iter().filter(|(_, g, _)| !target.holds_comm(g)).collect();
    while !pending.is_empty() {
        let mut proved: Vec<(Commutativity, ClosureCertificate)> = Vec::new();
        let mut deferred = Vec::new();
        // the goal is ι_Y ∘ e1 = e2 ∘ ι_X with both sides materialized as
        // composites into/out of a universal image, so try the uniqueness
        // certificate for that one pair before any global search
        for (uid, goal, aux) in pending.drain(..) {
            match naturality_by_uniqueness(&target, &goal, &aux, &mut cache, budget) {
                Some(proof) => proved.push((goal, proof)),
                None => deferred.push((uid, goal, aux)),
            }
        }
        if proved.is_empty() {
            // full prover round, one saturation for all remaining goals
            let mut engine = ClosureEngine::new(&target, budget);
            engine.seed(&cache);
            let mut still = Vec::new();
            for (uid, goal, aux) in deferred.drain(..) {
                match engine
                    .prove(&[goal.first.clone(), goal.second.clone()], &[goal.composite.clone()])
                {
                    Some(proof) => proved.push((goal, proof)),
                    None => still.push((uid, goal, aux)),
                }
            }
            cache = engine.cache();
            deferred = still;
        }
        if proved.is_empty() {
            let (uid, _, _) = &deferred[0];
            return Err(MapError::Invalid(format!("no naturality derivation for edge {uid}")));
        }
        for (goal, proof) in proved {
            push(EquivStep::AddCategoryLawCommutativity { goal, proof }, &mut target, &mut steps)?;
        }
        pending = deferred;
    }
    let body = ContextMap {
        from: h1.from.clone(),
        to: arrow_to,
        derivation: EquivDerivation { base: h1.from.clone(), steps },
        hom: SketchHom { domain: arrow_sketch, codomain: target, node_map, edge_map },
    };
    let report = check_map(&body);
    if !report.ok() {
        return Err(MapError::Invalid(format!(
            "constructed body invalid: {}",
            report.violations.join("; ")
        )));
    }
    Ok(TwoCell { lhs: h1.clone(), rhs: h2.clone(), body })
}

/// Prove with an engine seeded from (and feeding back into) a shared cache.
fn prove_cached(
    target: &Sketch,
    cache: &mut EqCache,
    budget: usize,
    lhs: &[EdgeId],
    rhs: &[EdgeId],
) -> Option<ClosureCertificate> {
    let mut engine = ClosureEngine::new(target, budget);
    engine.seed(cache);
    let proof = engine.prove(lhs, rhs);
    *cache = engine.cache();
    proof
}

/// Certify a naturality goal by the uniqueness of fillins: fold the goal to
/// its materialized composite and identify that with θ_u at the universal
/// image the two land in (or leave), proving the leg composites equal.
fn naturality_by_uniqueness(
    target: &Sketch,
    goal: &Commutativity,
    aux: &EdgeId,
    cache: &mut EqCache,
    budget: usize,
) -> Option<ClosureCertificate> {
    let theta = &goal.composite;
    let e_aux = target.edge(aux)?.clone();
    for (subject, incoming) in [(e_aux.tgt.clone(), true), (e_aux.src.clone(), false)] {
        let Some(u) = target.universal_with_subject(&subject) else { continue };
        let legs: Vec<EdgeId> = match u {
            Universal::Terminal { .. } if incoming => vec![],
            Universal::Initial { .. } if !incoming => vec![],
            Universal::Pullback { leg1, leg2, .. } if incoming => {
                vec![leg1.clone(), leg2.clone()]
            }
            Universal::Pushout { leg1, leg2, .. } if !incoming => {
                vec![leg1.clone(), leg2.clone()]
            }
            _ => continue,
        };
        let mut proofs = Vec::new();
        let mut complete = true;
        for l in &legs {
            let (a, b) = if incoming {
                (vec![aux.clone(), l.clone()], vec![theta.clone(), l.clone()])
            } else {
                (vec![l.clone(), aux.clone()], vec![l.clone(), theta.clone()])
            };
            match prove_cached(target, cache, budget, &a, &b) {
                Some(c) => proofs.push(c),
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            continue;
        }
        return Some(ClosureCertificate {
            lhs: vec![goal.first.clone(), goal.second.clone()],
            rhs: vec![theta.clone()],
            steps: vec![
                RewriteStep::CommFold {
                    at: 0,
                    comm: Commutativity {
                        first: goal.first.clone(),
                        second: goal.second.clone(),
                        composite: aux.clone(),
                    },
                },
                RewriteStep::FillinUnique {
                    at: 0,
                    subject,
                    replacement: theta.clone(),
                    proofs,
                },
            ],
        });
    }
    None
}

/// Build the connecting fillin a → b between two universal constructions of
/// the same kind on provably equal data (and prove the data equal).
fn build_duplicate_universal_iota(
    target: &mut Sketch,
    steps: &mut Vec<EquivStep>,
    cache: &mut EqCache,
    a: &NodeId,
    b: &NodeId,
    x: &NodeId,
    budget: usize,
) -> Result<EdgeId, MapError> {
    let ua = target
        .universal_with_subject(a)
        .cloned()
        .ok_or_else(|| MapError::Invalid(format!("node {x}: image {a} is not a universal subject")))?;
    let ub = target
        .universal_with_subject(b)
        .cloned()
        .ok_or_else(|| MapError::Invalid(format!("node {x}: image {b} is not a universal subject")))?;
    if ua.kind_name() != ub.kind_name() {
        return Err(MapError::Invalid(format!("node {x}: universal kinds differ")));
    }
    let prove = |target: &Sketch,
                     cache: &mut EqCache,
                     lhs: &[EdgeId],
                     rhs: &[EdgeId]|
     -> Result<ClosureCertificate, MapError> {
        prove_cached(target, cache, budget, lhs, rhs).ok_or_else(|| {
            MapError::Invalid(format!("node {x}: data equality {lhs:?} ~ {rhs:?} not derivable"))
        })
    };
    let push = |step: EquivStep, target: &mut Sketch, steps: &mut Vec<EquivStep>| -> Result<(), MapError> {
        *target = crate::equiv::apply_equiv_step(target, steps.len(), &step)
            .map_err(|e| MapError::Invalid(format!("witness construction: {e}")))?;
        steps.push(step);
        Ok(())
    };
    let name = freshen_edge(target, EdgeId(Name::new(format!("iota:{x}"))));
    match (&ua, &ub) {
        (Universal::Terminal { .. }, Universal::Terminal { .. }) => {
            push(
                EquivStep::AddFillin {
                    universal: b.clone(),
                    data: FillinData::Terminal { src: a.clone() },
                    proofs: vec![],
                    name: name.clone(),
                },
                target,
                steps,
            )?;
        }
        (Universal::Initial { .. }, Universal::Initial { .. }) => {
            push(
                EquivStep::AddFillin {
                    universal: a.clone(),
                    data: FillinData::Initial { tgt: b.clone() },
                    proofs: vec![],
                    name: name.clone(),
                },
                target,
                steps,
            )?;
        }
        (
            Universal::Pullback { leg1: p1, leg2: p2, diag: d, cospan1: c1, cospan2: c2, .. },
            Universal::Pullback { cospan1: d1, cospan2: d2, .. },
        ) => {
            prove(target, cache, &[c1.clone()], &[d1.clone()])?;
            prove(target, cache, &[c2.clone()], &[d2.clone()])?;
            let pr1 = prove(target, cache, &[p1.clone(), d1.clone()], &[d.clone()])?;
            let pr2 = prove(target, cache, &[p2.clone(), d2.clone()], &[d.clone()])?;
            push(
                EquivStep::AddFillin {
                    universal: b.clone(),
                    data: FillinData::Pullback { leg1: p1.clone(), leg2: p2.clone(), diag: d.clone() },
                    proofs: vec![pr1, pr2],
                    name: name.clone(),
                },
                target,
                steps,
            )?;
        }
        (
            Universal::Pushout { span1: c1, span2: c2, .. },
            Universal::Pushout { leg1: q1, leg2: q2, diag: e, span1: d1, span2: d2, .. },
        ) => {
            prove(target, cache, &[c1.clone()], &[d1.clone()])?;
            prove(target, cache, &[c2.clone()], &[d2.clone()])?;
            let pr1 = prove(target, cache, &[c1.clone(), q1.clone()], &[e.clone()])?;
            let pr2 = prove(target, cache, &[c2.clone(), q2.clone()], &[e.clone()])?;
            push(
                EquivStep::AddFillin {
                    universal: a.clone(),
                    data: FillinData::Pushout { leg1: q1.clone(), leg2: q2.clone(), diag: e.clone() },
                    proofs: vec![pr1, pr2],
                    name: name.clone(),
                },
                target,
                steps,
            )?;
        }
        _ => {
            return Err(MapError::Invalid(format!(
                "node {x}: duplicate-universal justification unsupported for {} universals",
                ua.kind_name()
            )))
        }
    }
    Ok(name)
}

/// Build an explicitly supplied fillin component ι_X: a → b, materializing
/// auxiliary composites first and deriving the cone proofs on the spot.
#[allow(clippy::too_many_arguments)]
fn build_fillin_iota(
    target: &mut Sketch,
    steps: &mut Vec<EquivStep>,
    cache: &mut EqCache,
    iota: &BTreeMap<NodeId, EdgeId>,
    prep: &[PrepComposite],
    data: &FillinData,
    a: &NodeId,
    b: &NodeId,
    x: &NodeId,
    budget: usize,
) -> Result<EdgeId, MapError> {
    let push = |step: EquivStep, target: &mut Sketch, steps: &mut Vec<EquivStep>| -> Result<(), MapError> {
        *target = crate::equiv::apply_equiv_step(target, steps.len(), &step)
            .map_err(|e| MapError::Invalid(format!("witness construction: {e}")))?;
        steps.push(step);
        Ok(())
    };
    let mut aliases: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    for pc in prep {
        let resolve_piece = |p: &Piece, aliases: &BTreeMap<EdgeId, EdgeId>| -> Result<EdgeId, MapError> {
            match p {
                Piece::Edge(e) => Ok(aliases.get(e).cloned().unwrap_or_else(|| e.clone())),
                Piece::Iota(n) => iota
                    .get(n)
                    .cloned()
                    .ok_or_else(|| MapError::Invalid(format!("node {x}: ι of {n} not yet built"))),
            }
        };
        let Some(first) = pc.path.first() else {
            return Err(MapError::Invalid(format!("node {x}: empty prep path for {}", pc.name)));
        };
        let mut acc = resolve_piece(first, &aliases)?;
        for (i, p) in pc.path[1..].iter().enumerate() {
            let second = resolve_piece(p, &aliases)?;
            let nm = if i + 2 == pc.path.len() {
                freshen_edge(target, pc.name.clone())
            } else {
                freshen_edge(target, EdgeId(Name::new(format!("{}:{i}", pc.name))))
            };
            push(EquivStep::AddComposite { first: acc, second, name: nm.clone() }, target, steps)?;
            acc = nm;
        }
        aliases.insert(pc.name.clone(), acc);
    }
    let resolve = |e: &EdgeId| aliases.get(e).cloned().unwrap_or_else(|| e.clone());
    let prove = |target: &Sketch,
                     cache: &mut EqCache,
                     lhs: &[EdgeId],
                     rhs: &[EdgeId]|
     -> Result<ClosureCertificate, MapError> {
        prove_cached(target, cache, budget, lhs, rhs).ok_or_else(|| {
            MapError::Invalid(format!("node {x}: cone equality {lhs:?} ~ {rhs:?} not derivable"))
        })
    };
    let name = freshen_edge(target, EdgeId(Name::new(format!("iota:{x}"))));
    match data {
        FillinData::Terminal { .. } => push(
            EquivStep::AddFillin {
                universal: b.clone(),
                data: FillinData::Terminal { src: a.clone() },
                proofs: vec![],
                name: name.clone(),
            },
            target,
            steps,
        )?,
        FillinData::Initial { .. } => push(
            EquivStep::AddFillin {
                universal: a.clone(),
                data: FillinData::Initial { tgt: b.clone() },
                proofs: vec![],
                name: name.clone(),
            },
            target,
            steps,
        )?,
        FillinData::Pullback { leg1, leg2, diag } => {
            let (l1, l2, d) = (resolve(leg1), resolve(leg2), resolve(diag));
            let ub = target.universal_with_subject(b).cloned().ok_or_else(|| {
                MapError::Invalid(format!("node {x}: image {b} is not a universal subject"))
            })?;
            let Universal::Pullback { cospan1, cospan2, .. } = &ub else {
                return Err(MapError::Invalid(format!("node {x}: image {b} is not a pullback apex")));
            };
            let pr1 = prove(target, cache, &[l1.clone(), cospan1.clone()], &[d.clone()])?;
            let pr2 = prove(target, cache, &[l2.clone(), cospan2.clone()], &[d.clone()])?;
            push(
                EquivStep::AddFillin {
                    universal: b.clone(),
                    data: FillinData::Pullback { leg1: l1, leg2: l2, diag: d },
                    proofs: vec![pr1, pr2],
                    name: name.clone(),
                },
                target,
                steps,
            )?;
        }
        FillinData::Pushout { leg1, leg2, diag } => {
            let (l1, l2, d) = (resolve(leg1), resolve(leg2), resolve(diag));
            let ua = target.universal_with_subject(a).cloned().ok_or_else(|| {
                MapError::Invalid(format!("node {x}: image {a} is not a universal subject"))
            })?;
            let Universal::Pushout { span1, span2, .. } = &ua else {
                return Err(MapError::Invalid(format!("node {x}: image {a} is not a pushout base")));
            };
            let pr1 = prove(target, cache, &[span1.clone(), l1.clone()], &[d.clone()])?;
            let pr2 = prove(target, cache, &[span2.clone(), l2.clone()], &[d.clone()])?;
            push(
                EquivStep::AddFillin {
                    universal: a.clone(),
                    data: FillinData::Pushout { leg1: l1, leg2: l2, diag: d },
                    proofs: vec![pr1, pr2],
                    name: name.clone(),
                },
                target,
                steps,
            )?;
        }
    }
    Ok(name)
}

/// Validate a supplied objective-equality witness against a 2-cell by
/// inspecting the body's θ_X images.
pub fn check_objective_equality(t: &TwoCell, w: &ObjEqWitness) -> ValidationReport {
    let mut report = ValidationReport::default();
    let to_sketch = t.lhs.to.to_sketch();
    let target = t.body.target_sketch();
    let budget = crate::equiv::budget_from_env();
    for x in &to_sketch.nodes {
        let theta = EdgeId(x.0.theta());
        let Some(img) = t.body.hom.edge_map.get(&theta) else {
            report.push(format!("node {x}: body does not interpret θ"));
            continue;
        };
        let Some(j) = w.nodes.get(x) else {
            report.push(format!("node {x}: no justification supplied"));
            continue;
        };
        match j {
            NodeJustification::Identity => {
                if !target.is_identity_edge(img) {
                    report.push(format!("node {x}: θ image {img} is not an identity edge"));
                }
            }
            NodeJustification::DuplicateUniversal => {
                if let Err(e) = validate_duplicate_universal_edge(&target, img, budget) {
                    report.push(format!("node {x}: {e}"));
                }
            }
        }
    }
    report
}

fn validate_duplicate_universal_edge(s: &Sketch, e: &EdgeId, budget: usize) -> Result<(), String> {
    let edge = s.edge(e).ok_or_else(|| format!("missing edge {e}"))?.clone();
    let ua = s
        .universal_with_subject(&edge.src)
        .ok_or_else(|| format!("{} is not a universal subject", edge.src))?
        .clone();
    let ub = s
        .universal_with_subject(&edge.tgt)
        .ok_or_else(|| format!("{} is not a universal subject", edge.tgt))?
        .clone();
    if ua.kind_name() != ub.kind_name() {
        return Err("universal kinds differ".into());
    }
    let mut engine = ClosureEngine::new(s, budget);
    let mut need = |lhs: &[EdgeId], rhs: &[EdgeId]| -> Result<(), String> {
        engine
            .prove(lhs, rhs)
            .map(|_| ())
            .ok_or_else(|| format!("{lhs:?} ~ {rhs:?} not derivable"))
    };
    match (&ua, &ub) {
        (Universal::Terminal { .. }, Universal::Terminal { .. })
        | (Universal::Initial { .. }, Universal::Initial { .. }) => Ok(()),
        (
            Universal::Pullback { leg1: p1, leg2: p2, cospan1: c1, cospan2: c2, .. },
            Universal::Pullback { leg1: q1, leg2: q2, cospan1: d1, cospan2: d2, .. },
        ) => {
            need(&[c1.clone()], &[d1.clone()])?;
            need(&[c2.clone()], &[d2.clone()])?;
            need(&[e.clone(), q1.clone()], &[p1.clone()])?;
            need(&[e.clone(), q2.clone()], &[p2.clone()])
        }
        (
            Universal::Pushout { leg1: p1, leg2: p2, span1: c1, span2: c2, .. },
            Universal::Pushout { leg1: q1, leg2: q2, span1: d1, span2: d2, .. },
        ) => {
            need(&[c1.clone()], &[d1.clone()])?;
            need(&[c2.clone()], &[d2.clone()])?;
            need(&[p1.clone(), e.clone()], &[q1.clone()])?;
            need(&[p2.clone(), e.clone()], &[q2.clone()])
        }
        _ => Err(format!("unsupported duplicate-universal kind {}", ua.kind_name())),
    }
}

/// 1-cell equality: syntactic after normalization, else objective equality by
/// bounded search (optionally steered by a supplied witness).
pub fn map_equal(h1: &ContextMap, h2: &ContextMap) -> bool {
    map_equal_with(h1, h2, None)
}

pub fn map_equal_with(h1: &ContextMap, h2: &ContextMap, witness: Option<&ObjEqWitness>) -> bool {
    if h1.from != h2.from || h1.to != h2.to {
        return false;
    }
    let n1 = normalize(h1);
    let n2 = normalize(h2);
    if n1.derivation == n2.derivation
        && n1.hom.node_map == n2.hom.node_map
        && n1.hom.edge_map == n2.hom.edge_map
    {
        return true;
    }
    let budget = crate::equiv::budget_from_env();
    build_obj_eq_two_cell(&n1, &n2, witness, budget).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{object_classifier, pointed_object, pointed_object_extension};

    #[test]
    fn identity_and_diagonal_maps_validate() {
        for c in [object_classifier(), pointed_object()] {
            assert!(check_map(&ContextMap::identity(&c)).ok());
            assert!(check_map(&diagonal_map(&c)).ok());
            assert!(check_map(&collapse_map(&c, 0)).ok());
            assert!(check_map(&collapse_map(&c, 1)).ok());
        }
    }

    #[test]
    fn extension_map_validates() {
        assert!(check_map(&extension_map(&pointed_object_extension())).ok());
    }

    #[test]
    fn composition_with_identities_is_inert() {
        let u = extension_map(&pointed_object_extension());
        let left = compose_maps(&ContextMap::identity(&u.to), &u).unwrap();
        let right = compose_maps(&u, &ContextMap::identity(&u.from)).unwrap();
        assert_eq!(left, u);
        assert_eq!(right, u);
    }

    #[test]
    fn map_equal_is_reflexive_and_discriminates() {
        let u = extension_map(&pointed_object_extension());
        assert!(map_equal(&u, &u));
        assert!(!map_equal(&u, &ContextMap::identity(&u.from)));
    }

    #[test]
    fn identity_two_cell_has_identity_boundaries() {
        let c = pointed_object();
        let h = ContextMap::identity(&c);
        let t = build_obj_eq_two_cell(&h, &h, None, 8).unwrap();
        assert!(check_two_cell(&t).ok());
        let w0 = whisker_boundary(&t, 0).unwrap();
        let w1 = whisker_boundary(&t, 1).unwrap();
        assert!(map_equal(&w0, &h));
        assert!(map_equal(&w1, &h));
        // its objective-equality witness is all-identities
        let w = ObjEqWitness {
            nodes: c
                .nodes_in_order()
                .into_iter()
                .map(|n| (n, NodeJustification::Identity))
                .collect(),
        };
        assert!(check_objective_equality(&t, &w).ok());
    }

    #[test]
    fn collapsing_the_diagonal_recovers_the_identity() {
        let c = pointed_object();
        for side in [0, 1] {
            let collapsed = compose_maps(&collapse_map(&c, side), &diagonal_map(&c)).unwrap();
            assert!(map_equal(&collapsed, &ContextMap::identity(&c)));
        }
    }

    #[test]
    fn duplicate_terminals_are_objectively_equal() {
        // two context maps into a two-terminal context, differing by which
        // terminal the generic node hits
        let c2 = crate::context::Context::from_steps([
            crate::context::ExtensionStep::AddTerminal { name: "1".into() },
            crate::context::ExtensionStep::AddTerminal { name: "1'".into() },
        ])
        .unwrap();
        let point = crate::context::Context::from_steps([
            crate::context::ExtensionStep::AddTerminal { name: "t".into() },
        ])
        .unwrap();
        let mk = |target: &str| ContextMap {
            from: c2.clone(),
            to: point.clone(),
            derivation: EquivDerivation { base: c2.clone(), steps: vec![] },
            hom: SketchHom {
                domain: point.to_sketch(),
                codomain: c2.to_sketch(),
                node_map: BTreeMap::from([("t".into(), target.into())]),
                edge_map: BTreeMap::from([(
                    EdgeId::from("s(t)"),
                    NodeId::from(target).identity_edge(),
                )]),
            },
        };
        let h1 = mk("1");
        let h2 = mk("1'");
        assert!(check_map(&h1).ok());
        assert!(check_map(&h2).ok());
        assert!(map_equal(&h1, &h2));
        let t = build_obj_eq_two_cell(&h1, &h2, None, 8).unwrap();
        let w = ObjEqWitness {
            nodes: BTreeMap::from([("t".into(), NodeJustification::DuplicateUniversal)]),
        };
        assert!(check_objective_equality(&t, &w).ok());
        // the semantic transformation it induces is an identity
        let tr = crate::finset::mod_two_cell(&t, 2).unwrap();
        assert!(tr.validate().ok());
        for (i, &comp) in tr.components.iter().enumerate() {
            assert_eq!(tr.dom.obj_map[i], tr.cod.obj_map[i]);
            assert!(tr.dom.cod.is_identity(comp));
        }
    }
}
