//! Equivalence-extension derivations and the bounded congruence-closure
//! engine.
//!
//! The word problem for finitely presented categories is undecidable, so the
//! kernel is certificate-based: `derive_path_eq` searches for a rewrite chain
//! up to a budget and returns a replayable [`ClosureCertificate`];
//! `NotDerivedWithinBudget` is not a refutation.  Rewrite rules are exactly
//! the committed four families: unit laws, associativity (implicit in the
//! path representation plus composite-edge commutativities), declared
//! commutativities, and fillin-uniqueness (with terminal/initial subjects as
//! the degenerate no-cone instances).

use crate::context::{apply_step, Context, ExtensionStep};
use crate::name::{EdgeId, NodeId};
use crate::sketch::{Commutativity, Sketch, Universal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

pub const DEFAULT_BUDGET: usize = 8;
const MAX_STATES: usize = 60_000;
const SUB_MAX_STATES: usize = 10_000;

/// Closure budget: `AUC_BUDGET` env override, else 8.
pub fn budget_from_env() -> usize {
    std::env::var("AUC_BUDGET").ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RewriteStep {
    /// Insert the identity edge `edge` at position `at`.
    UnitIntro { at: usize, edge: EdgeId },
    /// Remove the identity edge at position `at`.
    UnitElim { at: usize },
    /// Replace `[first, second]` starting at `at` by `[composite]`.
    CommFold { at: usize, comm: Commutativity },
    /// Replace `[composite]` at `at` by `[first, second]`.
    CommUnfold { at: usize, comm: Commutativity },
    /// Replace the edge at `at` by `replacement`: both are (degenerate)
    /// fillins for the universal on `subject` with provably equal leg
    /// composites.
    FillinUnique { at: usize, subject: NodeId, replacement: EdgeId, proofs: Vec<ClosureCertificate> },
}

/// A replayable proof that two parallel composable paths are equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureCertificate {
    pub lhs: Vec<EdgeId>,
    pub rhs: Vec<EdgeId>,
    pub steps: Vec<RewriteStep>,
}

impl ClosureCertificate {
    /// A zero-step certificate for syntactically equal paths.
    pub fn refl(path: Vec<EdgeId>) -> ClosureCertificate {
        ClosureCertificate { lhs: path.clone(), rhs: path, steps: vec![] }
    }

    pub fn proves(&self, a: &[EdgeId], b: &[EdgeId]) -> bool {
        (self.lhs == a && self.rhs == b) || (self.lhs == b && self.rhs == a)
    }
}

/// Endpoints of a composable path; `None` when not composable/empty.
pub fn path_endpoints(s: &Sketch, path: &[EdgeId]) -> Option<(NodeId, NodeId)> {
    let first = s.edge(path.first()?)?;
    let mut cur = first.tgt.clone();
    for e in &path[1..] {
        let edge = s.edge(e)?;
        if edge.src != cur {
            return None;
        }
        cur = edge.tgt.clone();
    }
    Some((first.src.clone(), cur))
}

fn apply_rewrite(s: &Sketch, path: &[EdgeId], step: &RewriteStep) -> Result<Vec<EdgeId>, String> {
    let mut out = path.to_vec();
    match step {
        RewriteStep::UnitIntro { at, edge } => {
            if !s.is_identity_edge(edge) {
                return Err(format!("{edge} is not an identity edge"));
            }
            if *at > out.len() {
                return Err("unit intro out of range".into());
            }
            let node = &s.edge(edge).unwrap().src;
            let boundary = if *at < out.len() {
                s.edge(&out[*at]).ok_or("bad path")?.src.clone()
            } else {
                s.edge(out.last().ok_or("empty path")?).ok_or("bad path")?.tgt.clone()
            };
            if node != &boundary {
                return Err("unit intro at wrong boundary".into());
            }
            out.insert(*at, edge.clone());
        }
        RewriteStep::UnitElim { at } => {
            if out.len() < 2 || *at >= out.len() {
                return Err("unit elim out of range".into());
            }
            if !s.is_identity_edge(&out[*at]) {
                return Err(format!("{} is not an identity edge", out[*at]));
            }
            out.remove(*at);
        }
        RewriteStep::CommFold { at, comm } => {
            if !s.commutativities.contains(comm) {
                return Err(format!("commutativity {comm} not declared"));
            }
            if *at + 1 >= out.len() || out[*at] != comm.first || out[*at + 1] != comm.second {
                return Err("comm fold does not match path".into());
            }
            out.splice(*at..*at + 2, [comm.composite.clone()]);
        }
        RewriteStep::CommUnfold { at, comm } => {
            if !s.commutativities.contains(comm) {
                return Err(format!("commutativity {comm} not declared"));
            }
            if *at >= out.len() || out[*at] != comm.composite {
                return Err("comm unfold does not match path".into());
            }
            out.splice(*at..*at + 1, [comm.first.clone(), comm.second.clone()]);
        }
        RewriteStep::FillinUnique { at, subject, replacement, proofs } => {
            if *at >= out.len() {
                return Err("fillin-unique out of range".into());
            }
            check_fillin_unique(s, subject, &out[*at], replacement, proofs)?;
            out[*at] = replacement.clone();
        }
    }
    Ok(out)
}

/// Validate the fillin-uniqueness rule instance identifying `w1` and `w2`.
fn check_fillin_unique(
    s: &Sketch,
    subject: &NodeId,
    w1: &EdgeId,
    w2: &EdgeId,
    proofs: &[ClosureCertificate],
) -> Result<(), String> {
    let e1 = s.edge(w1).ok_or_else(|| format!("missing edge {w1}"))?.clone();
    let e2 = s.edge(w2).ok_or_else(|| format!("missing edge {w2}"))?.clone();
    if e1.src != e2.src || e1.tgt != e2.tgt {
        return Err(format!("{w1} and {w2} are not parallel"));
    }
    let u = s
        .universal_with_subject(subject)
        .ok_or_else(|| format!("{subject} is not a universal subject"))?;
    let need_proof = |pair: (&[EdgeId], &[EdgeId]), proofs: &[ClosureCertificate]| -> Result<(), String> {
        let cert = proofs
            .iter()
            .find(|c| c.proves(pair.0, pair.1))
            .ok_or_else(|| format!("missing leg proof for {:?} ~ {:?}", pair.0, pair.1))?;
        check_certificate(s, cert)
    };
    match u {
        Universal::Terminal { subject } => {
            if &e1.tgt != subject {
                return Err("edges do not land in the terminal subject".into());
            }
        }
        Universal::Initial { subject } => {
            if &e1.src != subject {
                return Err("edges do not leave the initial subject".into());
            }
        }
        Universal::Pullback { apex, leg1, leg2, .. } => {
            if &e1.tgt != apex {
                return Err("edges do not land in the pullback apex".into());
            }
            need_proof(
                (&[w1.clone(), leg1.clone()], &[w2.clone(), leg1.clone()]),
                proofs,
            )?;
            need_proof(
                (&[w1.clone(), leg2.clone()], &[w2.clone(), leg2.clone()]),
                proofs,
            )?;
        }
        Universal::Pushout { apex, leg1, leg2, .. } => {
            if &e1.src != apex {
                return Err("edges do not leave the pushout apex".into());
            }
            need_proof(
                (&[leg1.clone(), w1.clone()], &[leg1.clone(), w2.clone()]),
                proofs,
            )?;
            need_proof(
                (&[leg2.clone(), w1.clone()], &[leg2.clone(), w2.clone()]),
                proofs,
            )?;
        }
        Universal::List { .. } => {
            return Err("fillin-uniqueness for list universals is not supported".into());
        }
    }
    Ok(())
}

/// Replay a certificate against a sketch.
pub fn check_certificate(s: &Sketch, cert: &ClosureCertificate) -> Result<(), String> {
    let lhs_ep = path_endpoints(s, &cert.lhs).ok_or("lhs is not a composable path")?;
    let rhs_ep = path_endpoints(s, &cert.rhs).ok_or("rhs is not a composable path")?;
    if lhs_ep != rhs_ep {
        return Err("certificate endpoints disagree".into());
    }
    let mut cur = cert.lhs.clone();
    for (i, step) in cert.steps.iter().enumerate() {
        cur = apply_rewrite(s, &cur, step).map_err(|e| format!("step {i}: {e}"))?;
    }
    if cur != cert.rhs {
        return Err("certificate does not reach its rhs".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Prover
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct EdgeEquality {
    other: EdgeId,
    subject: NodeId,
    proofs: Vec<ClosureCertificate>,
}

/// Fillin-uniqueness equalities discovered by saturation.  Extensions only
/// add structure, so a cache computed on a smaller sketch stays valid on any
/// extension of it and can be used to seed a fresh engine.
#[derive(Clone, Default)]
pub struct EqCache {
    eqs: BTreeMap<EdgeId, Vec<EdgeEquality>>,
}

/// Bounded congruence-closure prover over one sketch.  Reusable across many
/// goals; the fillin-uniqueness saturation is computed once on demand.
pub struct ClosureEngine<'a> {
    pub sketch: &'a Sketch,
    pub budget: usize,
    fold_index: BTreeMap<(EdgeId, EdgeId), Vec<Commutativity>>,
    unfold_index: BTreeMap<EdgeId, Vec<Commutativity>>,
    equalities: BTreeMap<EdgeId, Vec<EdgeEquality>>,
    saturated: bool,
}

impl<'a> ClosureEngine<'a> {
    pub fn new(sketch: &'a Sketch, budget: usize) -> Self {
        let mut fold_index: BTreeMap<(EdgeId, EdgeId), Vec<Commutativity>> = BTreeMap::new();
        let mut unfold_index: BTreeMap<EdgeId, Vec<Commutativity>> = BTreeMap::new();
        for c in &sketch.commutativities {
            fold_index.entry((c.first.clone(), c.second.clone())).or_default().push(c.clone());
            unfold_index.entry(c.composite.clone()).or_default().push(c.clone());
        }
        ClosureEngine {
            sketch,
            budget,
            fold_index,
            unfold_index,
            equalities: BTreeMap::new(),
            saturated: false,
        }
    }

    /// Start from equalities discovered on an earlier (not larger) sketch.
    pub fn seed(&mut self, cache: &EqCache) {
        for (k, v) in &cache.eqs {
            let slot = self.equalities.entry(k.clone()).or_default();
            for eq in v {
                if !slot.iter().any(|e| e.other == eq.other) {
                    slot.push(eq.clone());
                }
            }
        }
    }

    pub fn cache(&self) -> EqCache {
        EqCache { eqs: self.equalities.clone() }
    }

    pub fn prove(&mut self, lhs: &[EdgeId], rhs: &[EdgeId]) -> Option<ClosureCertificate> {
        if path_endpoints(self.sketch, lhs)? != path_endpoints(self.sketch, rhs)? {
            return None;
        }
        // iterative deepening on the path-length cap: short chains are found
        // in a small state space before the full budget is explored.  The
        // comm-only phase is state-capped low: anything bigger is usually a
        // goal that needs the uniqueness equalities anyway
        let floor = lhs.len().max(rhs.len()).max(2);
        let ceiling = self.budget.max(floor);
        for b in floor..=ceiling {
            if let Some(cert) = self.bfs_capped(lhs, rhs, false, b, SUB_MAX_STATES) {
                return Some(cert);
            }
        }
        self.ensure_equalities();
        for b in floor..=ceiling {
            if let Some(cert) = self.bfs_capped(lhs, rhs, true, b, MAX_STATES) {
                return Some(cert);
            }
        }
        None
    }

    pub fn prove_comm(&mut self, goal: &Commutativity) -> Option<ClosureCertificate> {
        self.prove(&[goal.first.clone(), goal.second.clone()], &[goal.composite.clone()])
    }

    fn neighbors(&self, path: &[EdgeId], with_eqs: bool, budget: usize) -> Vec<(RewriteStep, Vec<EdgeId>)> {
        let s = self.sketch;
        let mut out = Vec::new();
        // unit elimination
        if path.len() >= 2 {
            for at in 0..path.len() {
                if s.is_identity_edge(&path[at]) {
                    let mut p = path.to_vec();
                    p.remove(at);
                    out.push((RewriteStep::UnitElim { at }, p));
                }
            }
        }
        // unit introduction (one identity fits per position)
        if path.len() < budget {
            for at in 0..=path.len() {
                let node = if at < path.len() {
                    s.edge(&path[at]).unwrap().src.clone()
                } else {
                    s.edge(path.last().unwrap()).unwrap().tgt.clone()
                };
                let id_edge = s.identity[&node].clone();
                let mut p = path.to_vec();
                p.insert(at, id_edge.clone());
                out.push((RewriteStep::UnitIntro { at, edge: id_edge }, p));
            }
        }
        // commutativity folds
        for at in 0..path.len().saturating_sub(1) {
            if let Some(cs) = self.fold_index.get(&(path[at].clone(), path[at + 1].clone())) {
                for c in cs {
                    let mut p = path.to_vec();
                    p.splice(at..at + 2, [c.composite.clone()]);
                    out.push((RewriteStep::CommFold { at, comm: c.clone() }, p));
                }
            }
        }
        // commutativity unfolds
        if path.len() < budget {
            for at in 0..path.len() {
                if let Some(cs) = self.unfold_index.get(&path[at]) {
                    for c in cs {
                        let mut p = path.to_vec();
                        p.splice(at..at + 1, [c.first.clone(), c.second.clone()]);
                        out.push((RewriteStep::CommUnfold { at, comm: c.clone() }, p));
                    }
                }
            }
        }
        // fillin-uniqueness substitutions
        if with_eqs {
            for at in 0..path.len() {
                if let Some(partners) = self.equalities.get(&path[at]) {
                    for eq in partners {
                        let mut p = path.to_vec();
                        p[at] = eq.other.clone();
                        out.push((
                            RewriteStep::FillinUnique {
                                at,
                                subject: eq.subject.clone(),
                                replacement: eq.other.clone(),
                                proofs: eq.proofs.clone(),
                            },
                            p,
                        ));
                    }
                }
            }
        }
        out
    }

    fn bfs_capped(
        &self,
        lhs: &[EdgeId],
        rhs: &[EdgeId],
        with_eqs: bool,
        budget: usize,
        max_states: usize,
    ) -> Option<ClosureCertificate> {
        if lhs == rhs {
            return Some(ClosureCertificate::refl(lhs.to_vec()));
        }
        if lhs.len() > budget || rhs.len() > budget {
            return None;
        }
        let mut visited: HashSet<Vec<EdgeId>> = HashSet::new();
        let mut parent: HashMap<Vec<EdgeId>, (Vec<EdgeId>, RewriteStep)> = HashMap::new();
        let mut queue: VecDeque<Vec<EdgeId>> = VecDeque::new();
        visited.insert(lhs.to_vec());
        queue.push_back(lhs.to_vec());
        while let Some(cur) = queue.pop_front() {
            for (step, next) in self.neighbors(&cur, with_eqs, budget) {
                if next.len() > budget || visited.contains(&next) {
                    continue;
                }
                visited.insert(next.clone());
                parent.insert(next.clone(), (cur.clone(), step));
                if next == rhs {
                    // reconstruct
                    let mut steps = Vec::new();
                    let mut at = next;
                    while at != lhs {
                        let (prev, step) = parent.remove(&at).unwrap();
                        steps.push(step);
                        at = prev;
                    }
                    steps.reverse();
                    return Some(ClosureCertificate {
                        lhs: lhs.to_vec(),
                        rhs: rhs.to_vec(),
                        steps,
                    });
                }
                if visited.len() >= max_states {
                    return None;
                }
                queue.push_back(next);
            }
        }
        None
    }

    /// Saturate the "parallel fillins with equal legs are equal" relation.
    fn ensure_equalities(&mut self) {
        if self.saturated {
            return;
        }
        let s = self.sketch;
        let mut eqs = std::mem::take(&mut self.equalities);
        let mut proven: HashSet<(EdgeId, EdgeId)> = eqs
            .iter()
            .flat_map(|(k, v)| v.iter().map(|eq| (k.clone(), eq.other.clone())))
            .collect();
        loop {
            let sub = ClosureEngine {
                sketch: s,
                budget: self.budget,
                fold_index: self.fold_index.clone(),
                unfold_index: self.unfold_index.clone(),
                equalities: eqs.clone(),
                saturated: true,
            };
            let mut new_pairs: Vec<(EdgeId, EdgeId, NodeId, Vec<ClosureCertificate>)> = Vec::new();
            for u in &s.universals {
                // (subject, incoming?, legs needing proofs)
                let (subject, incoming, legs): (&NodeId, bool, Vec<EdgeId>) = match u {
                    Universal::Terminal { subject } => (subject, true, vec![]),
                    Universal::Initial { subject } => (subject, false, vec![]),
                    Universal::Pullback { apex, leg1, leg2, .. } => {
                        (apex, true, vec![leg1.clone(), leg2.clone()])
                    }
                    Universal::Pushout { apex, leg1, leg2, .. } => {
                        (apex, false, vec![leg1.clone(), leg2.clone()])
                    }
                    Universal::List { .. } => continue,
                };
                // group parallel candidates
                let mut groups: BTreeMap<NodeId, Vec<EdgeId>> = BTreeMap::new();
                for e in s.edges.values() {
                    if incoming && &e.tgt == subject {
                        groups.entry(e.src.clone()).or_default().push(e.id.clone());
                    } else if !incoming && &e.src == subject {
                        groups.entry(e.tgt.clone()).or_default().push(e.id.clone());
                    }
                }
                for group in groups.values() {
                    for i in 0..group.len() {
                        for j in i + 1..group.len() {
                            let (w1, w2) = (group[i].clone(), group[j].clone());
                            if proven.contains(&(w1.clone(), w2.clone())) {
                                continue;
                            }
                            let mut proofs = Vec::new();
                            let mut ok = true;
                            for leg in &legs {
                                let (a, b) = if incoming {
                                    (vec![w1.clone(), leg.clone()], vec![w2.clone(), leg.clone()])
                                } else {
                                    (vec![leg.clone(), w1.clone()], vec![leg.clone(), w2.clone()])
                                };
                                match sub.bfs_capped(
                                    &a,
                                    &b,
                                    true,
                                    self.budget.min(a.len().max(b.len()) + 2),
                                    SUB_MAX_STATES,
                                ) {
                                    Some(cert) => proofs.push(cert),
                                    None => {
                                        ok = false;
                                        break;
                                    }
                                }
                            }
                            if ok {
                                new_pairs.push((w1, w2, subject.clone(), proofs));
                            }
                        }
                    }
                }
            }
            if new_pairs.is_empty() {
                break;
            }
            for (w1, w2, subject, proofs) in new_pairs {
                proven.insert((w1.clone(), w2.clone()));
                eqs.entry(w1.clone()).or_default().push(EdgeEquality {
                    other: w2.clone(),
                    subject: subject.clone(),
                    proofs: proofs.clone(),
                });
                eqs.entry(w2).or_default().push(EdgeEquality { other: w1, subject, proofs });
            }
        }
        self.equalities = eqs;
        self.saturated = true;
    }
}

/// One-shot path-equality derivation.
pub fn derive_path_eq(
    s: &Sketch,
    lhs: &[EdgeId],
    rhs: &[EdgeId],
    budget: usize,
) -> Option<ClosureCertificate> {
    ClosureEngine::new(s, budget).prove(lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeriveOutcome {
    Derived(ClosureCertificate),
    NotDerivedWithinBudget,
}

/// Bounded derivation of a commutativity; `NotDerivedWithinBudget` is not a
/// refutation.
pub fn derive_commutativity(s: &Sketch, goal: &Commutativity, budget: usize) -> DeriveOutcome {
    match ClosureEngine::new(s, budget).prove_comm(goal) {
        Some(cert) => DeriveOutcome::Derived(cert),
        None => DeriveOutcome::NotDerivedWithinBudget,
    }
}

// ---------------------------------------------------------------------------
// Equivalence-extension derivations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cone", rename_all = "snake_case")]
pub enum FillinData {
    /// An edge `src → subject` into a terminal subject.
    Terminal { src: NodeId },
    /// An edge `subject → tgt` out of an initial subject.
    Initial { tgt: NodeId },
    /// A commuting cone `(leg1: W→A, leg2: W→B, diag: W→C)` over the
    /// pullback's cospan; the fillin goes `W → apex`.
    Pullback { leg1: EdgeId, leg2: EdgeId, diag: EdgeId },
    /// A commuting cocone under the pushout's span; the fillin goes
    /// `apex → W`.
    Pushout { leg1: EdgeId, leg2: EdgeId, diag: EdgeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoCertificate {
    /// Universal subject equal to the edge's source.
    pub from_subject: NodeId,
    /// Universal subject (same kind) equal to the edge's target.
    pub to_subject: NodeId,
    /// Pairwise equality of the two universals' input data edges.
    pub data_eq: Vec<ClosureCertificate>,
    /// Proofs that the edge is the canonical fillin (leg compatibility).
    pub compat: Vec<ClosureCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "equiv_step", rename_all = "snake_case")]
pub enum EquivStep {
    AddComposite {
        first: EdgeId,
        second: EdgeId,
        name: EdgeId,
    },
    AddCategoryLawCommutativity {
        goal: Commutativity,
        proof: ClosureCertificate,
    },
    /// Re-introduction of a universal on existing data; the inner step must
    /// be one of the universal-adding simple-extension kinds.
    AddUniversal {
        step: ExtensionStep,
    },
    AddFillin {
        universal: NodeId,
        data: FillinData,
        proofs: Vec<ClosureCertificate>,
        name: EdgeId,
    },
    AddFillinUniqueness {
        universal: NodeId,
        fillin1: EdgeId,
        fillin2: EdgeId,
        proofs: Vec<ClosureCertificate>,
    },
    AddInverse {
        edge: EdgeId,
        iso: IsoCertificate,
        name: EdgeId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EquivDerivation {
    pub base: Context,
    pub steps: Vec<EquivStep>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum EquivError {
    #[error("step {index}: invalid justification: {reason}")]
    InvalidJustification { index: usize, reason: String },
    #[error("step {index}: freshness violation: {name}")]
    FreshnessViolation { index: usize, name: String },
}

fn fresh_edge_checked(
    s: &mut Sketch,
    index: usize,
    name: &EdgeId,
    src: NodeId,
    tgt: NodeId,
) -> Result<(), EquivError> {
    if s.edges.contains_key(name) {
        return Err(EquivError::FreshnessViolation { index, name: name.to_string() });
    }
    s.edges.insert(
        name.clone(),
        crate::sketch::Edge { id: name.clone(), src, tgt },
    );
    Ok(())
}

/// Apply a single equivalence step to an accumulated sketch.
pub fn apply_equiv_step(s: &Sketch, index: usize, step: &EquivStep) -> Result<Sketch, EquivError> {
    let bad = |reason: String| EquivError::InvalidJustification { index, reason };
    let mut out = s.clone();
    match step {
        EquivStep::AddComposite { first, second, name } => {
            let f = s.edge(first).ok_or_else(|| bad(format!("missing edge {first}")))?;
            let g = s.edge(second).ok_or_else(|| bad(format!("missing edge {second}")))?;
            if f.tgt != g.src {
                return Err(bad(format!("{first} and {second} do not compose")));
            }
            fresh_edge_checked(&mut out, index, name, f.src.clone(), g.tgt.clone())?;
            out.commutativities.insert(Commutativity {
                first: first.clone(),
                second: second.clone(),
                composite: name.clone(),
            });
        }
        EquivStep::AddCategoryLawCommutativity { goal, proof } => {
            if !proof.proves(
                &[goal.first.clone(), goal.second.clone()],
                &[goal.composite.clone()],
            ) {
                return Err(bad("proof does not match the goal".into()));
            }
            check_certificate(s, proof).map_err(bad)?;
            out.commutativities.insert(goal.clone());
        }
        EquivStep::AddUniversal { step } => {
            match step {
                ExtensionStep::AddTerminal { .. }
                | ExtensionStep::AddInitial { .. }
                | ExtensionStep::AddPullbackUniversal { .. }
                | ExtensionStep::AddPushoutUniversal { .. }
                | ExtensionStep::AddListUniversal { .. } => {}
                _ => return Err(bad("AddUniversal requires a universal-adding step".into())),
            }
            out = apply_step(s, step).map_err(|e| bad(e.to_string()))?;
        }
        EquivStep::AddFillin { universal, data, proofs, name } => {
            let u = s
                .universal_with_subject(universal)
                .ok_or_else(|| bad(format!("{universal} is not a universal subject")))?
                .clone();
            let need = |a: Vec<EdgeId>, b: Vec<EdgeId>| -> Result<(), EquivError> {
                let cert = proofs
                    .iter()
                    .find(|c| c.proves(&a, &b))
                    .ok_or_else(|| bad(format!("missing cone proof {a:?} ~ {b:?}")))?;
                check_certificate(s, cert).map_err(bad)
            };
            match (&u, data) {
                (Universal::Terminal { subject }, FillinData::Terminal { src }) => {
                    if !s.nodes.contains(src) {
                        return Err(bad(format!("missing node {src}")));
                    }
                    fresh_edge_checked(&mut out, index, name, src.clone(), subject.clone())?;
                }
                (Universal::Initial { subject }, FillinData::Initial { tgt }) => {
                    if !s.nodes.contains(tgt) {
                        return Err(bad(format!("missing node {tgt}")));
                    }
                    fresh_edge_checked(&mut out, index, name, subject.clone(), tgt.clone())?;
                }
                (
                    Universal::Pullback { apex, leg1, leg2, cospan1, cospan2, .. },
                    FillinData::Pullback { leg1: v1, leg2: v2, diag: v },
                ) => {
                    let ev1 = s.edge(v1).ok_or_else(|| bad(format!("missing edge {v1}")))?.clone();
                    let ev2 = s.edge(v2).ok_or_else(|| bad(format!("missing edge {v2}")))?.clone();
                    let ev = s.edge(v).ok_or_else(|| bad(format!("missing edge {v}")))?.clone();
                    let ec1 = s.edge(cospan1).unwrap().clone();
                    let ec2 = s.edge(cospan2).unwrap().clone();
                    if ev1.src != ev.src
                        || ev2.src != ev.src
                        || ev1.tgt != ec1.src
                        || ev2.tgt != ec2.src
                        || ev.tgt != ec1.tgt
                    {
                        return Err(bad("cone ill-typed for the pullback".into()));
                    }
                    need(vec![v1.clone(), cospan1.clone()], vec![v.clone()])?;
                    need(vec![v2.clone(), cospan2.clone()], vec![v.clone()])?;
                    fresh_edge_checked(&mut out, index, name, ev.src.clone(), apex.clone())?;
                    out.commutativities.insert(Commutativity {
                        first: name.clone(),
                        second: leg1.clone(),
                        composite: v1.clone(),
                    });
                    out.commutativities.insert(Commutativity {
                        first: name.clone(),
                        second: leg2.clone(),
                        composite: v2.clone(),
                    });
                }
                (
                    Universal::Pushout { apex, leg1, leg2, span1, span2, .. },
                    FillinData::Pushout { leg1: v1, leg2: v2, diag: v },
                ) => {
                    let ev1 = s.edge(v1).ok_or_else(|| bad(format!("missing edge {v1}")))?.clone();
                    let ev2 = s.edge(v2).ok_or_else(|| bad(format!("missing edge {v2}")))?.clone();
                    let ev = s.edge(v).ok_or_else(|| bad(format!("missing edge {v}")))?.clone();
                    let es1 = s.edge(span1).unwrap().clone();
                    let es2 = s.edge(span2).unwrap().clone();
                    if ev1.tgt != ev.tgt
                        || ev2.tgt != ev.tgt
                        || ev1.src != es1.tgt
                        || ev2.src != es2.tgt
                        || ev.src != es1.src
                    {
                        return Err(bad("cocone ill-typed for the pushout".into()));
                    }
                    need(vec![span1.clone(), v1.clone()], vec![v.clone()])?;
                    need(vec![span2.clone(), v2.clone()], vec![v.clone()])?;
                    fresh_edge_checked(&mut out, index, name, apex.clone(), ev.tgt.clone())?;
                    out.commutativities.insert(Commutativity {
                        first: leg1.clone(),
                        second: name.clone(),
                        composite: v1.clone(),
                    });
                    out.commutativities.insert(Commutativity {
                        first: leg2.clone(),
                        second: name.clone(),
                        composite: v2.clone(),
                    });
                }
                (Universal::List { .. }, _) => {
                    return Err(bad("fillins for list universals are not supported".into()));
                }
                _ => return Err(bad("fillin data does not match the universal kind".into())),
            }
        }
        EquivStep::AddFillinUniqueness { universal, fillin1, fillin2, proofs } => {
            check_fillin_unique(s, universal, fillin1, fillin2, proofs).map_err(bad)?;
            let src = s.edge(fillin1).unwrap().src.clone();
            out.commutativities.insert(Commutativity {
                first: s.identity[&src].clone(),
                second: fillin1.clone(),
                composite: fillin2.clone(),
            });
        }
        EquivStep::AddInverse { edge, iso, name } => {
            let e = s.edge(edge).ok_or_else(|| bad(format!("missing edge {edge}")))?.clone();
            if e.src != iso.from_subject || e.tgt != iso.to_subject {
                return Err(bad("iso certificate subjects do not match the edge".into()));
            }
            let u_from = s
                .universal_with_subject(&iso.from_subject)
                .ok_or_else(|| bad(format!("{} is not a universal subject", iso.from_subject)))?;
            let u_to = s
                .universal_with_subject(&iso.to_subject)
                .ok_or_else(|| bad(format!("{} is not a universal subject", iso.to_subject)))?;
            if u_from.kind_name() != u_to.kind_name() {
                return Err(bad("duplicate-universal pattern requires the same kind".into()));
            }
            let need = |a: Vec<EdgeId>, b: Vec<EdgeId>, pool: &[ClosureCertificate]| -> Result<(), EquivError> {
                let cert = pool
                    .iter()
                    .find(|c| c.proves(&a, &b))
                    .ok_or_else(|| bad(format!("missing proof {a:?} ~ {b:?}")))?;
                check_certificate(s, cert).map_err(bad)
            };
            match (u_from, u_to) {
                (Universal::Terminal { .. }, Universal::Terminal { .. })
                | (Universal::Initial { .. }, Universal::Initial { .. }) => {}
                (
                    Universal::Pullback { leg1: p1, leg2: p2, cospan1: c1, cospan2: c2, .. },
                    Universal::Pullback { leg1: q1, leg2: q2, cospan1: d1, cospan2: d2, .. },
                ) => {
                    need(vec![c1.clone()], vec![d1.clone()], &iso.data_eq)?;
                    need(vec![c2.clone()], vec![d2.clone()], &iso.data_eq)?;
                    need(vec![edge.clone(), q1.clone()], vec![p1.clone()], &iso.compat)?;
                    need(vec![edge.clone(), q2.clone()], vec![p2.clone()], &iso.compat)?;
                }
                (
                    Universal::Pushout { leg1: p1, leg2: p2, span1: c1, span2: c2, .. },
                    Universal::Pushout { leg1: q1, leg2: q2, span1: d1, span2: d2, .. },
                ) => {
                    need(vec![c1.clone()], vec![d1.clone()], &iso.data_eq)?;
                    need(vec![c2.clone()], vec![d2.clone()], &iso.data_eq)?;
                    need(vec![p1.clone(), edge.clone()], vec![q1.clone()], &iso.compat)?;
                    need(vec![p2.clone(), edge.clone()], vec![q2.clone()], &iso.compat)?;
                }
                _ => {
                    return Err(bad(
                        "AddInverse supports the duplicate terminal/initial/pullback/pushout patterns only"
                            .into(),
                    ))
                }
            }
            fresh_edge_checked(&mut out, index, name, e.tgt.clone(), e.src.clone())?;
            out.commutativities.insert(Commutativity {
                first: edge.clone(),
                second: name.clone(),
                composite: s.identity[&e.src].clone(),
            });
            out.commutativities.insert(Commutativity {
                first: name.clone(),
                second: edge.clone(),
                composite: s.identity[&e.tgt].clone(),
            });
        }
    }
    Ok(out)
}

/// Replay a derivation; fails atomically on the first invalid step.
pub fn check_derivation(d: &EquivDerivation) -> Result<Sketch, EquivError> {
    let mut s = d.base.to_sketch();
    for (i, step) in d.steps.iter().enumerate() {
        s = apply_equiv_step(&s, i, step)?;
    }
    Ok(s)
}

/// Incremental construction of an equivalence derivation: laws are proved on
/// the spot by the closure engine, fillin cone obligations likewise.
pub struct DerivationBuilder {
    base: Context,
    sketch: Sketch,
    steps: Vec<EquivStep>,
    budget: usize,
    cache: EqCache,
}

impl DerivationBuilder {
    pub fn new(base: &Context, budget: usize) -> Self {
        DerivationBuilder {
            base: base.clone(),
            sketch: base.to_sketch(),
            steps: Vec::new(),
            budget,
            cache: EqCache::default(),
        }
    }

    fn engine(&self) -> ClosureEngine<'_> {
        let mut engine = ClosureEngine::new(&self.sketch, self.budget);
        engine.seed(&self.cache);
        engine
    }

    pub fn sketch(&self) -> &Sketch {
        &self.sketch
    }

    pub fn push(&mut self, step: EquivStep) -> Result<(), EquivError> {
        self.sketch = apply_equiv_step(&self.sketch, self.steps.len(), &step)?;
        self.steps.push(step);
        Ok(())
    }

    pub fn universal(&mut self, step: ExtensionStep) -> Result<(), EquivError> {
        self.push(EquivStep::AddUniversal { step })
    }

    pub fn composite(
        &mut self,
        first: impl Into<EdgeId>,
        second: impl Into<EdgeId>,
        name: impl Into<EdgeId>,
    ) -> Result<EdgeId, EquivError> {
        let name = name.into();
        self.push(EquivStep::AddComposite { first: first.into(), second: second.into(), name: name.clone() })?;
        Ok(name)
    }

    /// Prove `second ∘ first ~ composite` within the budget and record it.
    pub fn law(
        &mut self,
        first: impl Into<EdgeId>,
        second: impl Into<EdgeId>,
        composite: impl Into<EdgeId>,
    ) -> Result<(), EquivError> {
        let goal = Commutativity {
            first: first.into(),
            second: second.into(),
            composite: composite.into(),
        };
        let (proof, cache) = {
            let mut engine = self.engine();
            let proof = engine.prove_comm(&goal);
            (proof, engine.cache())
        };
        self.cache = cache;
        let proof = proof.ok_or_else(|| EquivError::InvalidJustification {
            index: self.steps.len(),
            reason: format!("law {goal} not derivable within budget"),
        })?;
        self.push(EquivStep::AddCategoryLawCommutativity { goal, proof })
    }

    /// Adjoin a fillin for the named universal, deriving the cone proofs.
    pub fn fillin(
        &mut self,
        universal: impl Into<NodeId>,
        data: FillinData,
        name: impl Into<EdgeId>,
    ) -> Result<EdgeId, EquivError> {
        let universal = universal.into();
        let name = name.into();
        let index = self.steps.len();
        let record = self
            .sketch
            .universal_with_subject(&universal)
            .cloned()
            .ok_or_else(|| EquivError::InvalidJustification {
                index,
                reason: format!("{universal} is not a universal subject"),
            })?;
        let obligations: Vec<(Vec<EdgeId>, Vec<EdgeId>)> = match (&record, &data) {
            (crate::sketch::Universal::Terminal { .. }, FillinData::Terminal { .. })
            | (crate::sketch::Universal::Initial { .. }, FillinData::Initial { .. }) => vec![],
            (
                crate::sketch::Universal::Pullback { cospan1, cospan2, .. },
                FillinData::Pullback { leg1, leg2, diag },
            ) => vec![
                (vec![leg1.clone(), cospan1.clone()], vec![diag.clone()]),
                (vec![leg2.clone(), cospan2.clone()], vec![diag.clone()]),
            ],
            (
                crate::sketch::Universal::Pushout { span1, span2, .. },
                FillinData::Pushout { leg1, leg2, diag },
            ) => vec![
                (vec![span1.clone(), leg1.clone()], vec![diag.clone()]),
                (vec![span2.clone(), leg2.clone()], vec![diag.clone()]),
            ],
            _ => {
                return Err(EquivError::InvalidJustification {
                    index,
                    reason: format!("fillin data does not match the {} universal", record.kind_name()),
                })
            }
        };
        let (proofs, cache) = {
            let mut engine = self.engine();
            let mut proofs = Vec::with_capacity(obligations.len());
            let mut failure = None;
            for (lhs, rhs) in obligations {
                match engine.prove(&lhs, &rhs) {
                    Some(proof) => proofs.push(proof),
                    None => {
                        failure = Some(format!(
                            "cone equality {lhs:?} ~ {rhs:?} not derivable within budget"
                        ));
                        break;
                    }
                }
            }
            (failure.map_or(Ok(proofs), Err), engine.cache())
        };
        self.cache = cache;
        let proofs =
            proofs.map_err(|reason| EquivError::InvalidJustification { index, reason })?;
        self.push(EquivStep::AddFillin { universal, data, proofs, name: name.clone() })?;
        Ok(name)
    }

    pub fn finish(self) -> EquivDerivation {
        EquivDerivation { base: self.base, steps: self.steps }
    }
}

/// New edges introduced by an equivalence step (for transport bookkeeping).
impl EquivStep {
    pub fn new_edge(&self) -> Option<&EdgeId> {
        match self {
            EquivStep::AddComposite { name, .. }
            | EquivStep::AddFillin { name, .. }
            | EquivStep::AddInverse { name, .. } => Some(name),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{Context, ExtensionStep};
    use crate::corpus::pointed_object;

    fn terminal_pair_context() -> Context {
        // a node A with two edges into a terminal
        Context::from_steps([
            ExtensionStep::AddPrimitiveNode { name: "A".into() },
            ExtensionStep::AddTerminal { name: "1".into() },
            ExtensionStep::AddEdge { name: "f".into(), src: "A".into(), tgt: "1".into() },
            ExtensionStep::AddEdge { name: "g".into(), src: "A".into(), tgt: "1".into() },
        ])
        .unwrap()
    }

    #[test]
    fn unit_law_is_derivable() {
        let s = pointed_object().to_sketch();
        let cert = derive_path_eq(&s, &["s(1)".into(), "x".into()], &["x".into()], 4).unwrap();
        assert!(cert.proves(&["s(1)".into(), "x".into()], &["x".into()]));
        assert!(check_certificate(&s, &cert).is_ok());
    }

    #[test]
    fn terminal_fillins_are_identified() {
        let s = terminal_pair_context().to_sketch();
        let cert = derive_path_eq(&s, &["f".into()], &["g".into()], 4).expect("uniqueness");
        assert!(check_certificate(&s, &cert).is_ok());
    }

    #[test]
    fn unrelated_parallel_edges_are_not_derived() {
        let c = Context::from_steps([
            ExtensionStep::AddPrimitiveNode { name: "A".into() },
            ExtensionStep::AddPrimitiveNode { name: "B".into() },
            ExtensionStep::AddEdge { name: "f".into(), src: "A".into(), tgt: "B".into() },
            ExtensionStep::AddEdge { name: "g".into(), src: "A".into(), tgt: "B".into() },
        ])
        .unwrap();
        let goal = Commutativity { first: "s(A)".into(), second: "f".into(), composite: "g".into() };
        assert_eq!(
            derive_commutativity(&c.to_sketch(), &goal, 6),
            DeriveOutcome::NotDerivedWithinBudget
        );
    }

    #[test]
    fn pullback_fillins_are_identified_through_leg_equality() {
        // product of X with itself; two pairings of the same pair of maps
        let c = Context::from_steps([
            ExtensionStep::AddPrimitiveNode { name: "X".into() },
            ExtensionStep::AddTerminal { name: "1".into() },
            ExtensionStep::AddEdge { name: "a".into(), src: "X".into(), tgt: "1".into() },
            ExtensionStep::AddPullbackUniversal {
                apex: "P".into(),
                leg1: "p1".into(),
                leg2: "p2".into(),
                diag: "d".into(),
                cospan1: "a".into(),
                cospan2: "a".into(),
            },
            ExtensionStep::AddEdge { name: "w1".into(), src: "X".into(), tgt: "P".into() },
            ExtensionStep::AddEdge { name: "w2".into(), src: "X".into(), tgt: "P".into() },
            // both w1 and w2 project to the identity on each side
            ExtensionStep::AddCommutativity { first: "w1".into(), second: "p1".into(), composite: "s(X)".into() },
            ExtensionStep::AddCommutativity { first: "w1".into(), second: "p2".into(), composite: "s(X)".into() },
            ExtensionStep::AddCommutativity { first: "w2".into(), second: "p1".into(), composite: "s(X)".into() },
            ExtensionStep::AddCommutativity { first: "w2".into(), second: "p2".into(), composite: "s(X)".into() },
        ])
        .unwrap();
        let s = c.to_sketch();
        let cert = derive_path_eq(&s, &["w1".into()], &["w2".into()], 6).expect("fillin uniqueness");
        assert!(check_certificate(&s, &cert).is_ok());
    }

    #[test]
    fn add_composite_and_category_law_replay() {
        let c = pointed_object();
        let s = c.to_sketch();
        let mut steps = vec![EquivStep::AddComposite {
            first: "s(1)".into(),
            second: "x".into(),
            name: "x1".into(),
        }];
        let s1 = apply_equiv_step(&s, 0, &steps[0]).unwrap();
        let goal = Commutativity { first: "s(1)".into(), second: "x1".into(), composite: "x".into() };
        let proof = ClosureEngine::new(&s1, 6).prove_comm(&goal).unwrap();
        steps.push(EquivStep::AddCategoryLawCommutativity { goal, proof });
        let d = EquivDerivation { base: c, steps };
        assert!(check_derivation(&d).is_ok());
    }

    #[test]
    fn bogus_certificates_are_rejected() {
        let s = terminal_pair_context().to_sketch();
        // claims f ~ g with a do-nothing certificate
        let cert = ClosureCertificate { lhs: vec!["f".into()], rhs: vec!["g".into()], steps: vec![] };
        assert!(check_certificate(&s, &cert).is_err());
    }

    #[test]
    fn derived_equalities_are_sound_on_finite_set_models() {
        // every derived equality evaluates to equal functions on every model
        let c = terminal_pair_context();
        let s = c.to_sketch();
        let cert = derive_path_eq(&s, &["f".into()], &["g".into()], 4).unwrap();
        for m in crate::finset::enumerate_strict_models(&c, 2).unwrap() {
            let act = |p: &[EdgeId]| {
                p.iter().fold((0..m.carrier(&"A".into())).collect::<Vec<_>>(), |acc, e| {
                    acc.iter().map(|&x| m.action(e)[x]).collect()
                })
            };
            assert_eq!(act(&cert.lhs), act(&cert.rhs));
        }
    }
}
