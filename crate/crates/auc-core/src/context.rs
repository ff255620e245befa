//! Contexts: ordered sequences of simple extension steps from the empty
//! sketch, with freshness enforcement, plus the hom (arrow) context.

use crate::name::{EdgeId, Name, NodeId};
use crate::sketch::{Commutativity, Edge, Sketch, SketchHom, Universal};
use serde::{Deserialize, Serialize};

/// The eight simple-extension kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ExtensionStep {
    AddPrimitiveNode {
        name: NodeId,
    },
    AddEdge {
        name: EdgeId,
        src: NodeId,
        tgt: NodeId,
    },
    AddCommutativity {
        first: EdgeId,
        second: EdgeId,
        composite: EdgeId,
    },
    AddTerminal {
        name: NodeId,
    },
    AddInitial {
        name: NodeId,
    },
    AddPullbackUniversal {
        apex: NodeId,
        leg1: EdgeId,
        leg2: EdgeId,
        diag: EdgeId,
        cospan1: EdgeId,
        cospan2: EdgeId,
    },
    AddPushoutUniversal {
        apex: NodeId,
        leg1: EdgeId,
        leg2: EdgeId,
        diag: EdgeId,
        span1: EdgeId,
        span2: EdgeId,
    },
    AddListUniversal {
        param: NodeId,
        subject: NodeId,
        empty_src: NodeId,
        empty: EdgeId,
        cons_apex: NodeId,
        cons_proj1: EdgeId,
        cons_proj2: EdgeId,
        cons: EdgeId,
    },
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum StepError {
    #[error("freshness violation: {0} already present")]
    FreshnessViolation(String),
    #[error("dangling reference: {0} not present")]
    DanglingReference(String),
    #[error("ill-typed step: {0}")]
    IllTyped(String),
}

impl ExtensionStep {
    /// Nodes introduced by this step, in introduction order.
    pub fn new_nodes(&self) -> Vec<&NodeId> {
        match self {
            ExtensionStep::AddPrimitiveNode { name }
            | ExtensionStep::AddTerminal { name }
            | ExtensionStep::AddInitial { name } => vec![name],
            ExtensionStep::AddPullbackUniversal { apex, .. }
            | ExtensionStep::AddPushoutUniversal { apex, .. } => vec![apex],
            ExtensionStep::AddListUniversal { subject, cons_apex, .. } => vec![subject, cons_apex],
            _ => vec![],
        }
    }

    /// Non-identity edges introduced by this step, in introduction order.
    pub fn new_edges(&self) -> Vec<&EdgeId> {
        match self {
            ExtensionStep::AddEdge { name, .. } => vec![name],
            ExtensionStep::AddPullbackUniversal { leg1, leg2, diag, .. }
            | ExtensionStep::AddPushoutUniversal { leg1, leg2, diag, .. } => vec![leg1, leg2, diag],
            ExtensionStep::AddListUniversal { empty, cons_proj1, cons_proj2, cons, .. } => {
                vec![empty, cons_proj1, cons_proj2, cons]
            }
            _ => vec![],
        }
    }

    /// Rename every identifier occurring in the step (fresh and referenced).
    pub fn rename(&self, f: &impl Fn(&Name) -> Name) -> ExtensionStep {
        let fe = |e: &EdgeId| EdgeId(f(&e.0));
        let fnn = |n: &NodeId| NodeId(f(&n.0));
        match self {
            ExtensionStep::AddPrimitiveNode { name } => ExtensionStep::AddPrimitiveNode { name: fnn(name) },
            ExtensionStep::AddEdge { name, src, tgt } => {
                ExtensionStep::AddEdge { name: fe(name), src: fnn(src), tgt: fnn(tgt) }
            }
            ExtensionStep::AddCommutativity { first, second, composite } => ExtensionStep::AddCommutativity {
                first: fe(first),
                second: fe(second),
                composite: fe(composite),
            },
            ExtensionStep::AddTerminal { name } => ExtensionStep::AddTerminal { name: fnn(name) },
            ExtensionStep::AddInitial { name } => ExtensionStep::AddInitial { name: fnn(name) },
            ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, diag, cospan1, cospan2 } => {
                ExtensionStep::AddPullbackUniversal {
                    apex: fnn(apex),
                    leg1: fe(leg1),
                    leg2: fe(leg2),
                    diag: fe(diag),
                    cospan1: fe(cospan1),
                    cospan2: fe(cospan2),
                }
            }
            ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, diag, span1, span2 } => {
                ExtensionStep::AddPushoutUniversal {
                    apex: fnn(apex),
                    leg1: fe(leg1),
                    leg2: fe(leg2),
                    diag: fe(diag),
                    span1: fe(span1),
                    span2: fe(span2),
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
            } => ExtensionStep::AddListUniversal {
                param: fnn(param),
                subject: fnn(subject),
                empty_src: fnn(empty_src),
                empty: fe(empty),
                cons_apex: fnn(cons_apex),
                cons_proj1: fe(cons_proj1),
                cons_proj2: fe(cons_proj2),
                cons: fe(cons),
            },
        }
    }
}

fn fresh_node(s: &mut Sketch, n: &NodeId) -> Result<(), StepError> {
    if s.nodes.contains(n) {
        return Err(StepError::FreshnessViolation(n.to_string()));
    }
    let id = n.identity_edge();
    if s.edges.contains_key(&id) {
        return Err(StepError::FreshnessViolation(id.to_string()));
    }
    s.nodes.insert(n.clone());
    s.edges.insert(id.clone(), Edge { id: id.clone(), src: n.clone(), tgt: n.clone() });
    s.identity.insert(n.clone(), id);
    Ok(())
}

fn fresh_edge(s: &mut Sketch, e: &EdgeId, src: &NodeId, tgt: &NodeId) -> Result<(), StepError> {
    if s.edges.contains_key(e) {
        return Err(StepError::FreshnessViolation(e.to_string()));
    }
    if !s.nodes.contains(src) {
        return Err(StepError::DanglingReference(src.to_string()));
    }
    if !s.nodes.contains(tgt) {
        return Err(StepError::DanglingReference(tgt.to_string()));
    }
    s.edges.insert(e.clone(), Edge { id: e.clone(), src: src.clone(), tgt: tgt.clone() });
    Ok(())
}

fn existing_edge(s: &Sketch, e: &EdgeId) -> Result<Edge, StepError> {
    s.edges.get(e).cloned().ok_or_else(|| StepError::DanglingReference(e.to_string()))
}

/// Apply one simple extension step to an accumulated sketch.
pub fn apply_step(s: &Sketch, step: &ExtensionStep) -> Result<Sketch, StepError> {
    let mut s = s.clone();
    match step {
        ExtensionStep::AddPrimitiveNode { name } => fresh_node(&mut s, name)?,
        ExtensionStep::AddEdge { name, src, tgt } => fresh_edge(&mut s, name, src, tgt)?,
        ExtensionStep::AddCommutativity { first, second, composite } => {
            let f = existing_edge(&s, first)?;
            let sec = existing_edge(&s, second)?;
            let c = existing_edge(&s, composite)?;
            if f.tgt != sec.src || f.src != c.src || sec.tgt != c.tgt {
                return Err(StepError::IllTyped(format!(
                    "commutativity {second}.{first} ~ {composite}"
                )));
            }
            s.commutativities.insert(Commutativity {
                first: first.clone(),
                second: second.clone(),
                composite: composite.clone(),
            });
        }
        ExtensionStep::AddTerminal { name } => {
            fresh_node(&mut s, name)?;
            s.universals.push(Universal::Terminal { subject: name.clone() });
        }
        ExtensionStep::AddInitial { name } => {
            fresh_node(&mut s, name)?;
            s.universals.push(Universal::Initial { subject: name.clone() });
        }
        ExtensionStep::AddPullbackUniversal { apex, leg1, leg2, diag, cospan1, cospan2 } => {
            let c1 = existing_edge(&s, cospan1)?;
            let c2 = existing_edge(&s, cospan2)?;
            if c1.tgt != c2.tgt {
                return Err(StepError::IllTyped(format!("cospan {cospan1}, {cospan2}")));
            }
            fresh_node(&mut s, apex)?;
            fresh_edge(&mut s, leg1, apex, &c1.src)?;
            fresh_edge(&mut s, leg2, apex, &c2.src)?;
            fresh_edge(&mut s, diag, apex, &c1.tgt)?;
            let comm1 = Commutativity { first: leg1.clone(), second: cospan1.clone(), composite: diag.clone() };
            let comm2 = Commutativity { first: leg2.clone(), second: cospan2.clone(), composite: diag.clone() };
            s.commutativities.insert(comm1.clone());
            s.commutativities.insert(comm2.clone());
            s.universals.push(Universal::Pullback {
                apex: apex.clone(),
                leg1: leg1.clone(),
                leg2: leg2.clone(),
                diag: diag.clone(),
                cospan1: cospan1.clone(),
                cospan2: cospan2.clone(),
                comm1,
                comm2,
            });
        }
        ExtensionStep::AddPushoutUniversal { apex, leg1, leg2, diag, span1, span2 } => {
            let s1 = existing_edge(&s, span1)?;
            let s2 = existing_edge(&s, span2)?;
            if s1.src != s2.src {
                return Err(StepError::IllTyped(format!("span {span1}, {span2}")));
            }
            fresh_node(&mut s, apex)?;
            fresh_edge(&mut s, leg1, &s1.tgt, apex)?;
            fresh_edge(&mut s, leg2, &s2.tgt, apex)?;
            fresh_edge(&mut s, diag, &s1.src, apex)?;
            let comm1 = Commutativity { first: span1.clone(), second: leg1.clone(), composite: diag.clone() };
            let comm2 = Commutativity { first: span2.clone(), second: leg2.clone(), composite: diag.clone() };
            s.commutativities.insert(comm1.clone());
            s.commutativities.insert(comm2.clone());
            s.universals.push(Universal::Pushout {
                apex: apex.clone(),
                leg1: leg1.clone(),
                leg2: leg2.clone(),
                diag: diag.clone(),
                span1: span1.clone(),
                span2: span2.clone(),
                comm1,
                comm2,
            });
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
            if !s.nodes.contains(param) {
                return Err(StepError::DanglingReference(param.to_string()));
            }
            if !s.nodes.contains(empty_src) {
                return Err(StepError::DanglingReference(empty_src.to_string()));
            }
            fresh_node(&mut s, subject)?;
            fresh_node(&mut s, cons_apex)?;
            fresh_edge(&mut s, empty, empty_src, subject)?;
            fresh_edge(&mut s, cons_proj1, cons_apex, subject)?;
            fresh_edge(&mut s, cons_proj2, cons_apex, param)?;
            fresh_edge(&mut s, cons, cons_apex, subject)?;
            s.universals.push(Universal::List {
                param: param.clone(),
                subject: subject.clone(),
                empty: empty.clone(),
                cons_apex: cons_apex.clone(),
                cons_proj1: cons_proj1.clone(),
                cons_proj2: cons_proj2.clone(),
                cons: cons.clone(),
            });
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Context {
    pub steps: Vec<ExtensionStep>,
}

impl Context {
    pub fn empty() -> Context {
        Context::default()
    }

    pub fn from_steps(steps: impl IntoIterator<Item = ExtensionStep>) -> Result<Context, StepError> {
        let c = Context { steps: steps.into_iter().collect() };
        c.validate()?;
        Ok(c)
    }

    /// Replay the steps, verifying freshness and references.
    pub fn validate(&self) -> Result<Sketch, StepError> {
        let mut s = Sketch::empty();
        for step in &self.steps {
            s = apply_step(&s, step)?;
        }
        Ok(s)
    }

    /// Replay assuming validity (panics on invalid step lists; use
    /// [`Context::validate`] for untrusted input).
    pub fn to_sketch(&self) -> Sketch {
        self.validate().expect("invalid context")
    }

    pub fn extend(&self, step: ExtensionStep) -> Result<Context, StepError> {
        apply_step(&self.to_sketch(), &step)?;
        let mut steps = self.steps.clone();
        steps.push(step);
        Ok(Context { steps })
    }

    /// Nodes in introduction order.
    pub fn nodes_in_order(&self) -> Vec<NodeId> {
        self.steps.iter().flat_map(|s| s.new_nodes().into_iter().cloned()).collect()
    }

    /// Non-identity edges in introduction order.
    pub fn edges_in_order(&self) -> Vec<EdgeId> {
        self.steps.iter().flat_map(|s| s.new_edges().into_iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextExtension {
    pub base: Context,
    pub added: Vec<ExtensionStep>,
}

impl ContextExtension {
    pub fn new(base: Context, added: Vec<ExtensionStep>) -> Result<ContextExtension, StepError> {
        let e = ContextExtension { base, added };
        e.extended().validate()?;
        Ok(e)
    }

    pub fn extended(&self) -> Context {
        let mut steps = self.base.steps.clone();
        steps.extend(self.added.iter().cloned());
        Context { steps }
    }
}

/// The hom context `T→` together with the two copy inclusions.
///
/// Steps: both renamed copies of every step of `c`, then per node X an edge
/// θ_X: X0→X1, then per non-identity edge u: X→Y a connecting edge
/// θ_u: X0→Y1 with the two commutativities  u1 ∘ θ_X ~ θ_u  and
/// θ_Y ∘ u0 ~ θ_u.  (θ over an identity edge is θ_X itself.)
pub fn arrow_context(c: &Context) -> (Context, SketchHom, SketchHom) {
    let sketch = c.to_sketch();
    let mut steps = Vec::new();
    for side in [0u8, 1u8] {
        for step in &c.steps {
            steps.push(step.rename(&|n| n.copy_suffix(side)));
        }
    }
    // θ for an edge id: θ_X for identities, theta(u) otherwise.
    let theta_of = |e: &EdgeId| -> EdgeId {
        let edge = sketch.edge(e).expect("edge exists");
        if sketch.is_identity_edge(e) {
            EdgeId(edge.src.0.theta())
        } else {
            EdgeId(e.0.theta())
        }
    };
    for x in c.nodes_in_order() {
        steps.push(ExtensionStep::AddEdge {
            name: EdgeId(x.0.theta()),
            src: NodeId(x.0.copy_suffix(0)),
            tgt: NodeId(x.0.copy_suffix(1)),
        });
    }
    for u in c.edges_in_order() {
        let edge = sketch.edge(&u).expect("edge exists").clone();
        let theta_u = theta_of(&u);
        let u0 = EdgeId(u.0.copy_suffix(0));
        let u1 = EdgeId(u.0.copy_suffix(1));
        let theta_src = EdgeId(edge.src.0.theta());
        let theta_tgt = EdgeId(edge.tgt.0.theta());
        steps.push(ExtensionStep::AddEdge {
            name: theta_u.clone(),
            src: NodeId(edge.src.0.copy_suffix(0)),
            tgt: NodeId(edge.tgt.0.copy_suffix(1)),
        });
        steps.push(ExtensionStep::AddCommutativity {
            first: theta_src,
            second: u1,
            composite: theta_u.clone(),
        });
        steps.push(ExtensionStep::AddCommutativity {
            first: u0,
            second: theta_tgt,
            composite: theta_u,
        });
    }
    let c_arrow = Context { steps };
    let arrow_sketch = c_arrow.to_sketch();
    let make_inclusion = |side: u8| SketchHom {
        domain: sketch.clone(),
        codomain: arrow_sketch.clone(),
        node_map: sketch.nodes.iter().map(|n| (n.clone(), NodeId(n.0.copy_suffix(side)))).collect(),
        edge_map: sketch.edges.keys().map(|e| (e.clone(), EdgeId(e.0.copy_suffix(side)))).collect(),
    };
    let i0 = make_inclusion(0);
    let i1 = make_inclusion(1);
    (c_arrow, i0, i1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{object_classifier, pointed_object};
    use crate::sketch::{check_hom, validate_sketch};

    #[test]
    fn pointed_object_context_validates() {
        let s = pointed_object().to_sketch();
        assert!(validate_sketch(&s).ok());
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.universals.len(), 1);
    }

    #[test]
    fn arrow_context_of_the_classifier_is_the_walking_arrow() {
        let (arrow, i0, i1) = arrow_context(&object_classifier());
        let s = arrow.to_sketch();
        assert_eq!(s.nodes, ["X#0", "X#1"].map(NodeId::from).into_iter().collect());
        assert!(s.edges.contains_key(&EdgeId::from("theta(X)")));
        assert!(check_hom(&i0).ok());
        assert!(check_hom(&i1).ok());
    }

    #[test]
    fn arrow_context_step_count_invariant() {
        // |steps(T→)| = 2·|steps| + #nodes + 3·#non-identity-edges
        for c in [object_classifier(), pointed_object()] {
            let (arrow, _, _) = arrow_context(&c);
            let expected = 2 * c.steps.len()
                + c.nodes_in_order().len()
                + 3 * c.edges_in_order().len();
            assert_eq!(arrow.steps.len(), expected);
        }
    }

    #[test]
    fn arrow_context_theta_commutativities() {
        let (arrow, _, _) = arrow_context(&pointed_object());
        let s = arrow.to_sketch();
        let has = |f: &str, sec: &str, c: &str| {
            s.commutativities.contains(&Commutativity {
                first: f.into(),
                second: sec.into(),
                composite: c.into(),
            })
        };
        assert!(has("theta(1)", "x#1", "theta(x)"));
        assert!(has("x#0", "theta(X)", "theta(x)"));
    }

    #[test]
    fn freshness_violations_are_rejected() {
        let c = object_classifier();
        assert!(matches!(
            c.extend(ExtensionStep::AddPrimitiveNode { name: "X".into() }),
            Err(StepError::FreshnessViolation(_))
        ));
        assert!(matches!(
            c.extend(ExtensionStep::AddEdge { name: "u".into(), src: "X".into(), tgt: "Y".into() }),
            Err(StepError::DanglingReference(_))
        ));
    }
}
