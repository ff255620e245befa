//! AU-sketches as finite data: a reflexive graph with commutative triangles
//! and universals, plus sketch homomorphisms.
//!
//! Commutativities are binary triangles `second ∘ first ~ composite`; longer
//! path equalities are expressed by chaining through explicitly adjoined
//! composite edges (see the equiv module).

use crate::name::{EdgeId, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub tgt: NodeId,
}

/// Asserts `second ∘ first ~ composite`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Commutativity {
    pub first: EdgeId,
    pub second: EdgeId,
    pub composite: EdgeId,
}

impl Commutativity {
    pub fn new(first: impl Into<EdgeId>, second: impl Into<EdgeId>, composite: impl Into<EdgeId>) -> Self {
        Commutativity { first: first.into(), second: second.into(), composite: composite.into() }
    }
}

impl fmt::Display for Commutativity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} ~ {}", self.second, self.first, self.composite)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Universal {
    Terminal {
        subject: NodeId,
    },
    Initial {
        subject: NodeId,
    },
    Pullback {
        apex: NodeId,
        leg1: EdgeId,
        leg2: EdgeId,
        diag: EdgeId,
        cospan1: EdgeId,
        cospan2: EdgeId,
        comm1: Commutativity,
        comm2: Commutativity,
    },
    Pushout {
        apex: NodeId,
        leg1: EdgeId,
        leg2: EdgeId,
        diag: EdgeId,
        span1: EdgeId,
        span2: EdgeId,
        comm1: Commutativity,
        comm2: Commutativity,
    },
    List {
        param: NodeId,
        subject: NodeId,
        empty: EdgeId,
        cons_apex: NodeId,
        cons_proj1: EdgeId,
        cons_proj2: EdgeId,
        cons: EdgeId,
    },
}

impl Universal {
    /// The node this universal construction introduces/constrains.
    pub fn subject(&self) -> &NodeId {
        match self {
            Universal::Terminal { subject }
            | Universal::Initial { subject }
            | Universal::List { subject, .. } => subject,
            Universal::Pullback { apex, .. } | Universal::Pushout { apex, .. } => apex,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Universal::Terminal { .. } => "terminal",
            Universal::Initial { .. } => "initial",
            Universal::Pullback { .. } => "pullback",
            Universal::Pushout { .. } => "pushout",
            Universal::List { .. } => "list",
        }
    }

    /// Existing data the universal is built on (empty for terminal/initial).
    pub fn input_edges(&self) -> Vec<&EdgeId> {
        match self {
            Universal::Terminal { .. } | Universal::Initial { .. } => vec![],
            Universal::Pullback { cospan1, cospan2, .. } => vec![cospan1, cospan2],
            Universal::Pushout { span1, span2, .. } => vec![span1, span2],
            Universal::List { empty, .. } => vec![empty], // src of empty is input-ish; param handled separately
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sketch {
    pub nodes: BTreeSet<NodeId>,
    pub identity: BTreeMap<NodeId, EdgeId>,
    pub edges: BTreeMap<EdgeId, Edge>,
    pub commutativities: BTreeSet<Commutativity>,
    pub universals: Vec<Universal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: impl Into<String>) {
        self.violations.push(v.into());
    }
}

impl Sketch {
    pub fn empty() -> Sketch {
        Sketch::default()
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn is_identity_edge(&self, id: &EdgeId) -> bool {
        self.edges
            .get(id)
            .map(|e| self.identity.get(&e.src) == Some(id))
            .unwrap_or(false)
    }

    pub fn has_name(&self, path_owner: &str) -> bool {
        self.nodes.iter().any(|n| n.0.to_string() == path_owner)
            || self.edges.keys().any(|e| e.0.to_string() == path_owner)
    }

    pub fn contains_node_name(&self, n: &NodeId) -> bool {
        self.nodes.contains(n)
    }

    pub fn contains_edge_name(&self, e: &EdgeId) -> bool {
        self.edges.contains_key(e)
    }

    pub fn universal_with_subject(&self, n: &NodeId) -> Option<&Universal> {
        self.universals.iter().find(|u| u.subject() == n)
    }

    /// A commutativity that is an instance of the unit laws and therefore
    /// holds in every model without being declared: `u ∘ s(X) ~ u` or
    /// `s(Y) ∘ u ~ u`.
    pub fn is_trivial_comm(&self, c: &Commutativity) -> bool {
        (self.is_identity_edge(&c.first) && c.second == c.composite)
            || (self.is_identity_edge(&c.second) && c.first == c.composite)
    }

    pub fn holds_comm(&self, c: &Commutativity) -> bool {
        self.commutativities.contains(c) || self.is_trivial_comm(c)
    }

    pub fn non_identity_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(|e| self.identity.get(&e.src) != Some(&e.id))
    }

    fn check_comm_typing(&self, c: &Commutativity, report: &mut ValidationReport, what: &str) {
        let (Some(f), Some(s), Some(comp)) =
            (self.edges.get(&c.first), self.edges.get(&c.second), self.edges.get(&c.composite))
        else {
            report.push(format!("{what}: commutativity {c} references a missing edge"));
            return;
        };
        if f.tgt != s.src {
            report.push(format!("{what}: non-composable pair in {c}"));
        }
        if f.src != comp.src || s.tgt != comp.tgt {
            report.push(format!("{what}: composite edge ill-typed in {c}"));
        }
    }
}

pub fn validate_sketch(s: &Sketch) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (n, id_edge) in &s.identity {
        if !s.nodes.contains(n) {
            report.push(format!("identity map mentions unknown node {n}"));
        }
        match s.edges.get(id_edge) {
            None => report.push(format!("identity edge {id_edge} of {n} missing")),
            Some(e) => {
                if &e.src != n || &e.tgt != n {
                    report.push(format!("identity edge {id_edge} not an endo-edge on {n}"));
                }
            }
        }
    }
    for n in &s.nodes {
        if !s.identity.contains_key(n) {
            report.push(format!("node {n} has no identity edge"));
        }
    }
    for (id, e) in &s.edges {
        if id != &e.id {
            report.push(format!("edge {id} stored under wrong key"));
        }
        if !s.nodes.contains(&e.src) || !s.nodes.contains(&e.tgt) {
            report.push(format!("edge {id} has dangling endpoint"));
        }
    }
    for c in &s.commutativities {
        s.check_comm_typing(c, &mut report, "commutativity");
    }
    let mut subjects = BTreeSet::new();
    for u in &s.universals {
        if !subjects.insert(u.subject().clone()) {
            report.push(format!("node {} is the subject of two universals", u.subject()));
        }
        check_universal(s, u, &mut report);
    }
    report
}

fn check_universal(s: &Sketch, u: &Universal, report: &mut ValidationReport) {
    let kind = u.kind_name();
    let need_node = |n: &NodeId, report: &mut ValidationReport| {
        if !s.nodes.contains(n) {
            report.push(format!("{kind} universal references missing node {n}"));
        }
    };
    let need_edge = |e: &EdgeId, report: &mut ValidationReport| {
        if !s.edges.contains_key(e) {
            report.push(format!("{kind} universal references missing edge {e}"));
        }
    };
    match u {
        Universal::Terminal { subject } | Universal::Initial { subject } => need_node(subject, report),
        Universal::Pullback { apex, leg1, leg2, diag, cospan1, cospan2, comm1, comm2 } => {
            need_node(apex, report);
            for e in [leg1, leg2, diag, cospan1, cospan2] {
                need_edge(e, report);
            }
            // comm1: cospan1 ∘ leg1 ~ diag; comm2: cospan2 ∘ leg2 ~ diag
            let want1 = Commutativity { first: leg1.clone(), second: cospan1.clone(), composite: diag.clone() };
            let want2 = Commutativity { first: leg2.clone(), second: cospan2.clone(), composite: diag.clone() };
            if comm1 != &want1 || comm2 != &want2 {
                report.push(format!("pullback universal on {apex}: commutativities do not relate legs, diag and cospan"));
            }
            s.check_comm_typing(&want1, report, kind);
            s.check_comm_typing(&want2, report, kind);
            if let (Some(c1), Some(c2)) = (s.edges.get(cospan1), s.edges.get(cospan2)) {
                if c1.tgt != c2.tgt {
                    report.push(format!("pullback universal on {apex}: cospan edges have different targets"));
                }
            }
        }
        Universal::Pushout { apex, leg1, leg2, diag, span1, span2, comm1, comm2 } => {
            need_node(apex, report);
            for e in [leg1, leg2, diag, span1, span2] {
                need_edge(e, report);
            }
            // comm1: leg1 ∘ span1 ~ diag; comm2: leg2 ∘ span2 ~ diag
            let want1 = Commutativity { first: span1.clone(), second: leg1.clone(), composite: diag.clone() };
            let want2 = Commutativity { first: span2.clone(), second: leg2.clone(), composite: diag.clone() };
            if comm1 != &want1 || comm2 != &want2 {
                report.push(format!("pushout universal on {apex}: commutativities do not relate legs, diag and span"));
            }
            s.check_comm_typing(&want1, report, kind);
            s.check_comm_typing(&want2, report, kind);
            if let (Some(c1), Some(c2)) = (s.edges.get(span1), s.edges.get(span2)) {
                if c1.src != c2.src {
                    report.push(format!("pushout universal on {apex}: span edges have different sources"));
                }
            }
        }
        Universal::List { param, subject, empty, cons_apex, cons_proj1, cons_proj2, cons } => {
            need_node(param, report);
            need_node(subject, report);
            need_node(cons_apex, report);
            for e in [empty, cons_proj1, cons_proj2, cons] {
                need_edge(e, report);
            }
            let typing_ok = (|| {
                let empty = s.edges.get(empty)?;
                let p1 = s.edges.get(cons_proj1)?;
                let p2 = s.edges.get(cons_proj2)?;
                let cons = s.edges.get(cons)?;
                Some(
                    &empty.tgt == subject
                        && &p1.src == cons_apex
                        && &p1.tgt == subject
                        && &p2.src == cons_apex
                        && &p2.tgt == param
                        && &cons.src == cons_apex
                        && &cons.tgt == subject,
                )
            })()
            .unwrap_or(false);
            if !typing_ok {
                report.push(format!("list universal on {subject}: apparatus ill-typed"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchHom {
    pub domain: Sketch,
    pub codomain: Sketch,
    pub node_map: BTreeMap<NodeId, NodeId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
}

impl SketchHom {
    pub fn identity(s: &Sketch) -> SketchHom {
        SketchHom {
            domain: s.clone(),
            codomain: s.clone(),
            node_map: s.nodes.iter().map(|n| (n.clone(), n.clone())).collect(),
            edge_map: s.edges.keys().map(|e| (e.clone(), e.clone())).collect(),
        }
    }

    pub fn node(&self, n: &NodeId) -> NodeId {
        self.node_map.get(n).cloned().unwrap_or_else(|| panic!("hom undefined on node {n}"))
    }

    pub fn edge(&self, e: &EdgeId) -> EdgeId {
        self.edge_map.get(e).cloned().unwrap_or_else(|| panic!("hom undefined on edge {e}"))
    }

    pub fn map_comm(&self, c: &Commutativity) -> Commutativity {
        Commutativity {
            first: self.edge(&c.first),
            second: self.edge(&c.second),
            composite: self.edge(&c.composite),
        }
    }

    pub fn map_universal(&self, u: &Universal) -> Universal {
        match u {
            Universal::Terminal { subject } => Universal::Terminal { subject: self.node(subject) },
            Universal::Initial { subject } => Universal::Initial { subject: self.node(subject) },
            Universal::Pullback { apex, leg1, leg2, diag, cospan1, cospan2, comm1, comm2 } => Universal::Pullback {
                apex: self.node(apex),
                leg1: self.edge(leg1),
                leg2: self.edge(leg2),
                diag: self.edge(diag),
                cospan1: self.edge(cospan1),
                cospan2: self.edge(cospan2),
                comm1: self.map_comm(comm1),
                comm2: self.map_comm(comm2),
            },
            Universal::Pushout { apex, leg1, leg2, diag, span1, span2, comm1, comm2 } => Universal::Pushout {
                apex: self.node(apex),
                leg1: self.edge(leg1),
                leg2: self.edge(leg2),
                diag: self.edge(diag),
                span1: self.edge(span1),
                span2: self.edge(span2),
                comm1: self.map_comm(comm1),
                comm2: self.map_comm(comm2),
            },
            Universal::List { param, subject, empty, cons_apex, cons_proj1, cons_proj2, cons } => Universal::List {
                param: self.node(param),
                subject: self.node(subject),
                empty: self.edge(empty),
                cons_apex: self.node(cons_apex),
                cons_proj1: self.edge(cons_proj1),
                cons_proj2: self.edge(cons_proj2),
                cons: self.edge(cons),
            },
        }
    }
}

pub fn check_hom(h: &SketchHom) -> ValidationReport {
    let mut report = ValidationReport::default();
    for n in &h.domain.nodes {
        match h.node_map.get(n) {
            None => report.push(format!("hom undefined on node {n}")),
            Some(m) => {
                if !h.codomain.nodes.contains(m) {
                    report.push(format!("node {n} mapped to missing node {m}"));
                }
            }
        }
    }
    for (id, e) in &h.domain.edges {
        let Some(m) = h.edge_map.get(id) else {
            report.push(format!("hom undefined on edge {id}"));
            continue;
        };
        let Some(me) = h.codomain.edges.get(m) else {
            report.push(format!("edge {id} mapped to missing edge {m}"));
            continue;
        };
        let (Some(ms), Some(mt)) = (h.node_map.get(&e.src), h.node_map.get(&e.tgt)) else {
            continue;
        };
        if &me.src != ms || &me.tgt != mt {
            report.push(format!("edge {id} image {m} has wrong endpoints"));
        }
    }
    for (n, id_edge) in &h.domain.identity {
        let (Some(mn), Some(me)) = (h.node_map.get(n), h.edge_map.get(id_edge)) else {
            continue;
        };
        if h.codomain.identity.get(mn) != Some(me) {
            report.push(format!("identity edge of {n} not mapped to identity of {mn}"));
        }
    }
    for c in &h.domain.commutativities {
        if c.first == c.second && c.first == c.composite {
            // fully degenerate self-triangle; image equally degenerate
        }
        if h.edge_map.contains_key(&c.first)
            && h.edge_map.contains_key(&c.second)
            && h.edge_map.contains_key(&c.composite)
        {
            let mc = h.map_comm(c);
            if !h.codomain.holds_comm(&mc) {
                report.push(format!("commutativity {c} not preserved (image {mc} absent)"));
            }
        }
    }
    for u in &h.domain.universals {
        let total = u_refs_defined(h, u);
        if !total {
            continue; // missing-name violations already reported
        }
        let mu = h.map_universal(u);
        if !h.codomain.universals.contains(&mu) {
            report.push(format!("universal on {} not preserved", u.subject()));
        }
    }
    report
}

fn u_refs_defined(h: &SketchHom, u: &Universal) -> bool {
    let nodes_ok = |ns: &[&NodeId]| ns.iter().all(|n| h.node_map.contains_key(n));
    let edges_ok = |es: &[&EdgeId]| es.iter().all(|e| h.edge_map.contains_key(e));
    match u {
        Universal::Terminal { subject } | Universal::Initial { subject } => nodes_ok(&[subject]),
        Universal::Pullback { apex, leg1, leg2, diag, cospan1, cospan2, .. } => {
            nodes_ok(&[apex]) && edges_ok(&[leg1, leg2, diag, cospan1, cospan2])
        }
        Universal::Pushout { apex, leg1, leg2, diag, span1, span2, .. } => {
            nodes_ok(&[apex]) && edges_ok(&[leg1, leg2, diag, span1, span2])
        }
        Universal::List { param, subject, cons_apex, empty, cons_proj1, cons_proj2, cons } => {
            nodes_ok(&[param, subject, cons_apex]) && edges_ok(&[empty, cons_proj1, cons_proj2, cons])
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HomError {
    #[error("domain mismatch: codomain of f is not the domain of g")]
    DomainMismatch,
}

pub fn compose_homs(g: &SketchHom, f: &SketchHom) -> Result<SketchHom, HomError> {
    if f.codomain != g.domain {
        return Err(HomError::DomainMismatch);
    }
    Ok(SketchHom {
        domain: f.domain.clone(),
        codomain: g.codomain.clone(),
        node_map: f.node_map.iter().map(|(n, m)| (n.clone(), g.node(m))).collect(),
        edge_map: f.edge_map.iter().map(|(e, m)| (e.clone(), g.edge(m))).collect(),
    })
}
