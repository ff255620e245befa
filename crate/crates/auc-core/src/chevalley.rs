//! Reindexing of extensions along context maps, the comparison maps Γ, and
//! verification of (op)fibration certificates with identity (co)unit.

use crate::context::{arrow_context, ContextExtension, StepError};
use crate::maps::{
    check_map, check_two_cell, collapse_map, compose_maps, diagonal_map, freshen_edge,
    freshen_node, map_equal, map_equal_with, ContextMap, MapError, ObjEqWitness, TwoCell,
};
use crate::name::{EdgeId, Name, NodeId};
use crate::report::Report;
use crate::sketch::SketchHom;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Fibration,
    Opfibration,
}

/// A verified-by-replay certificate that an extension map is a (co)cloven
/// (op)fibration: the explicit Λ, the non-trivial (co)unit 2-cell, and the
/// objective-equality witnesses for the identity (co)unit and both triangle
/// identities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChevalleyCertificate {
    pub direction: Direction,
    /// Λ: cod*(T1) → T1→ for fibrations, dom*(T1) → T1→ for opfibrations.
    pub lambda: ContextMap,
    /// η: id ⇒ ΛΓ for fibrations; dually ε: ΛΓ ⇒ id for opfibrations.
    pub unit: TwoCell,
    /// Per-node justifications for Γ∘Λ ≐ id.
    pub identity_witness: ObjEqWitness,
    /// Optional steering for the two whiskered triangle identities.
    pub triangle_witnesses: (Option<ObjEqWitness>, Option<ObjEqWitness>),
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ChevalleyError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("witness rejected in {check}: {detail}")]
    WitnessRejected { check: String, detail: String },
    #[error("translation incomplete: {0}")]
    TranslationIncomplete(String),
    #[error(transparent)]
    Composition(#[from] MapError),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// A reindexed extension together with the renaming of the added identifiers
/// (base identifiers translate through the hom of the reindexing map).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReindexedExtension {
    pub extension: ContextExtension,
    pub added_nodes: BTreeMap<NodeId, NodeId>,
    pub added_edges: BTreeMap<EdgeId, EdgeId>,
}

/// Pull an extension of T0 back along h: B → T0: replay the added steps over
/// B with every referenced identifier translated through h's hom.  Only homs
/// landing in B proper are supported; an image inside h's equivalence
/// extension is reported as incomplete.
pub fn reindex_extension(
    e: &ContextExtension,
    h: &ContextMap,
) -> Result<ReindexedExtension, ChevalleyError> {
    if h.to != e.base {
        return Err(ChevalleyError::TypeMismatch(
            "reindexing map does not target the extension's base".into(),
        ));
    }
    let base_sketch = e.base.to_sketch();
    let target_base = h.from.to_sketch();
    let mut translation: BTreeMap<Name, Name> = BTreeMap::new();
    for n in &base_sketch.nodes {
        let img = h
            .hom
            .node_map
            .get(n)
            .ok_or_else(|| ChevalleyError::TypeMismatch(format!("hom undefined on {n}")))?;
        if !target_base.nodes.contains(img) {
            return Err(ChevalleyError::TranslationIncomplete(format!(
                "node {n} maps into the equivalence extension ({img})"
            )));
        }
        translation.insert(n.0.clone(), img.0.clone());
    }
    for eid in base_sketch.edges.keys() {
        let img = h
            .hom
            .edge_map
            .get(eid)
            .ok_or_else(|| ChevalleyError::TypeMismatch(format!("hom undefined on {eid}")))?;
        if !target_base.edges.contains_key(img) {
            return Err(ChevalleyError::TranslationIncomplete(format!(
                "edge {eid} maps into the equivalence extension ({img})"
            )));
        }
        translation.insert(eid.0.clone(), img.0.clone());
    }
    let mut sketch = target_base;
    let mut steps = Vec::with_capacity(e.added.len());
    let mut added_nodes = BTreeMap::new();
    let mut added_edges = BTreeMap::new();
    for step in &e.added {
        for n in step.new_nodes() {
            let fresh = freshen_node(&sketch, n.clone());
            translation.insert(n.0.clone(), fresh.0.clone());
            translation.insert(n.identity_edge().0.clone(), fresh.identity_edge().0.clone());
            added_nodes.insert(n.clone(), fresh);
        }
        for eid in step.new_edges() {
            let fresh = freshen_edge(&sketch, eid.clone());
            translation.insert(eid.0.clone(), fresh.0.clone());
            added_edges.insert(eid.clone(), fresh);
        }
        let missing: RefCell<Option<Name>> = RefCell::new(None);
        let renamed = step.rename(&|name| match translation.get(name) {
            Some(t) => t.clone(),
            None => {
                missing.borrow_mut().get_or_insert_with(|| name.clone());
                name.clone()
            }
        });
        if let Some(name) = missing.into_inner() {
            return Err(ChevalleyError::TranslationIncomplete(format!(
                "no translation for {name}"
            )));
        }
        sketch = crate::context::apply_step(&sketch, &renamed)?;
        steps.push(renamed);
    }
    let extension = ContextExtension::new(h.from.clone(), steps)?;
    Ok(ReindexedExtension { extension, added_nodes, added_edges })
}

/// Γ_side: T1→ → dom*/cod*(T1).  Sends a generic arrow of T1-structures to
/// its side-`side` endpoint together with the underlying T0→ arrow; a pure
/// sketch hom, no equivalence extension needed.
pub fn build_gamma(e: &ContextExtension, side: u8) -> Result<ContextMap, ChevalleyError> {
    let t1 = e.extended();
    let r = reindex_extension(e, &collapse_map(&e.base, side))?;
    let rc = r.extension.extended();
    let (arrow_t1, _, _) = arrow_context(&t1);
    let rc_sketch = rc.to_sketch();
    let arrow_sketch = arrow_t1.to_sketch();
    let rev_nodes: BTreeMap<NodeId, NodeId> =
        r.added_nodes.iter().map(|(o, n)| (n.clone(), o.clone())).collect();
    let rev_edges: BTreeMap<EdgeId, EdgeId> =
        r.added_edges.iter().map(|(o, n)| (n.clone(), o.clone())).collect();
    let mut node_map = BTreeMap::new();
    for n in &rc_sketch.nodes {
        let img = match rev_nodes.get(n) {
            Some(orig) => NodeId(orig.0.copy_suffix(side)),
            None => n.clone(),
        };
        node_map.insert(n.clone(), img);
    }
    let mut edge_map = BTreeMap::new();
    for (eid, edge) in &rc_sketch.edges {
        let img = if rc_sketch.is_identity_edge(eid) {
            arrow_sketch.identity[&node_map[&edge.src]].clone()
        } else {
            match rev_edges.get(eid) {
                Some(orig) => EdgeId(orig.0.copy_suffix(side)),
                None => eid.clone(),
            }
        };
        edge_map.insert(eid.clone(), img);
    }
    let gamma = ContextMap {
        from: arrow_t1.clone(),
        to: rc,
        derivation: crate::equiv::EquivDerivation { base: arrow_t1, steps: vec![] },
        hom: SketchHom { domain: rc_sketch, codomain: arrow_sketch, node_map, edge_map },
    };
    let report = check_map(&gamma);
    if !report.ok() {
        return Err(ChevalleyError::TypeMismatch(format!(
            "constructed Γ invalid: {}",
            report.violations.join("; ")
        )));
    }
    Ok(gamma)
}

/// The action of the hom-context construction on a 1-cell: k→: arrw(A) →
/// arrw(B) for k: A → B.  Supported for maps that normalize to a pure sketch
/// hom (every Γ does); the general case would need θ-edges for
/// derivation-added nodes.
pub fn arrow_functor_map(k: &ContextMap) -> Result<ContextMap, ChevalleyError> {
    let k = crate::maps::normalize(k);
    if !k.derivation.steps.is_empty() {
        return Err(ChevalleyError::TranslationIncomplete(
            "arrow functor of a map with a non-trivial equivalence derivation".into(),
        ));
    }
    let (arrow_from, _, _) = arrow_context(&k.from);
    let (arrow_to, _, _) = arrow_context(&k.to);
    let to_sketch = k.to.to_sketch();
    let from_sketch = k.from.to_sketch();
    let arrow_from_sketch = arrow_from.to_sketch();
    let mut node_map = BTreeMap::new();
    let mut edge_map = BTreeMap::new();
    for n in &to_sketch.nodes {
        let img = &k.hom.node_map[n];
        for side in [0, 1] {
            node_map.insert(NodeId(n.0.copy_suffix(side)), NodeId(img.0.copy_suffix(side)));
        }
        edge_map.insert(EdgeId(n.0.theta()), EdgeId(img.0.theta()));
    }
    for eid in to_sketch.edges.keys() {
        let img = &k.hom.edge_map[eid];
        for side in [0, 1] {
            edge_map.insert(EdgeId(eid.0.copy_suffix(side)), EdgeId(img.0.copy_suffix(side)));
        }
        if !to_sketch.is_identity_edge(eid) {
            let theta_img = if from_sketch.is_identity_edge(img) {
                EdgeId(from_sketch.edge(img).expect("edge exists").src.0.theta())
            } else {
                EdgeId(img.0.theta())
            };
            edge_map.insert(EdgeId(eid.0.theta()), theta_img);
        }
    }
    let map = ContextMap {
        from: arrow_from.clone(),
        to: arrow_to.clone(),
        derivation: crate::equiv::EquivDerivation { base: arrow_from, steps: vec![] },
        hom: SketchHom {
            domain: arrow_to.to_sketch(),
            codomain: arrow_from_sketch,
            node_map,
            edge_map,
        },
    };
    let report = check_map(&map);
    if !report.ok() {
        return Err(ChevalleyError::TypeMismatch(format!(
            "constructed arrow functor map invalid: {}",
            report.violations.join("; ")
        )));
    }
    Ok(map)
}

/// Verify a certificate against an extension: (1) Λ typechecks, (2) Γ∘Λ is
/// objectively equal to the identity (the identity (co)unit), (3) the
/// non-trivial (co)unit is a valid 2-cell with the adjunction boundaries,
/// (4) both whiskered triangle identities hold.
pub fn check_certificate(e: &ContextExtension, cert: &ChevalleyCertificate) -> Report {
    let mut report = Report::default();
    let t1 = e.extended();
    let (arrow_t1, _, _) = arrow_context(&t1);
    let side = match cert.direction {
        Direction::Fibration => 1,
        Direction::Opfibration => 0,
    };
    let (unit_name, counit_name) = match cert.direction {
        Direction::Fibration => ("identity-counit", "unit-two-cell"),
        Direction::Opfibration => ("identity-unit", "counit-two-cell"),
    };
    let gamma = match build_gamma(e, side) {
        Ok(g) => g,
        Err(err) => {
            report.fail("lambda-typecheck", format!("cannot build Γ: {err}"));
            return report;
        }
    };
    let reindexed = gamma.to.clone();
    // (1) Λ typechecks against the constructed pullback contexts
    let lambda_rep = check_map(&cert.lambda);
    let typed =
        cert.lambda.from == reindexed && cert.lambda.to == arrow_t1 && lambda_rep.ok();
    report.check(
        "lambda-typecheck",
        typed,
        if typed {
            format!("Λ: {}-pullback → hom context", if side == 0 { "dom" } else { "cod" })
        } else if !lambda_rep.ok() {
            lambda_rep.violations.join("; ")
        } else {
            "Λ boundary contexts do not match the reindexed extension".into()
        },
    );
    if !typed {
        return report;
    }
    // (2) Γ∘Λ ≐ id via the identity witness
    match compose_maps(&gamma, &cert.lambda) {
        Ok(gl) => {
            let id = ContextMap::identity(&reindexed);
            report.check(
                unit_name,
                map_equal_with(&gl, &id, Some(&cert.identity_witness)),
                "Γ∘Λ objectively equal to the identity",
            );
        }
        Err(err) => report.fail(unit_name, format!("Γ∘Λ does not compose: {err}")),
    }
    // (3) the non-trivial (co)unit with boundaries id and ΛΓ
    let lg = match compose_maps(&cert.lambda, &gamma) {
        Ok(lg) => lg,
        Err(err) => {
            report.fail(counit_name, format!("Λ∘Γ does not compose: {err}"));
            return report;
        }
    };
    let id_arrow = ContextMap::identity(&arrow_t1);
    let (lhs_expect, rhs_expect) = match cert.direction {
        Direction::Fibration => (&id_arrow, &lg),
        Direction::Opfibration => (&lg, &id_arrow),
    };
    let cell_rep = check_two_cell(&cert.unit);
    let boundaries_ok = cell_rep.ok()
        && map_equal(&cert.unit.lhs, lhs_expect)
        && map_equal(&cert.unit.rhs, rhs_expect);
    report.check(
        counit_name,
        boundaries_ok,
        if cell_rep.ok() {
            "valid 2-cell with boundaries id and ΛΓ".into()
        } else {
            cell_rep.violations.join("; ")
        },
    );
    // (4) triangle identities, with the identity (co)unit already absorbed:
    // Γ whiskered onto the (co)unit equals id_Γ, and the (co)unit whiskered
    // onto Λ equals id_Λ.
    let triangle = |post: Result<ContextMap, ChevalleyError>,
                    expect: Result<ContextMap, MapError>,
                    witness: Option<&ObjEqWitness>|
     -> Result<bool, String> {
        let got = post.map_err(|e| e.to_string())?;
        let expect = expect.map_err(|e| e.to_string())?;
        Ok(map_equal_with(&got, &expect, witness))
    };
    let t1_check = arrow_functor_map(&gamma)
        .map_err(ChevalleyError::from)
        .and_then(|gf| compose_maps(&gf, &cert.unit.body).map_err(ChevalleyError::from));
    match triangle(
        t1_check,
        compose_maps(&diagonal_map(&reindexed), &gamma),
        cert.triangle_witnesses.0.as_ref(),
    ) {
        Ok(ok) => report.check("triangle-gamma", ok, "Γ-whiskered (co)unit equals id_Γ"),
        Err(err) => report.fail("triangle-gamma", err),
    }
    match triangle(
        compose_maps(&cert.unit.body, &cert.lambda).map_err(ChevalleyError::from),
        compose_maps(&diagonal_map(&arrow_t1), &cert.lambda),
        cert.triangle_witnesses.1.as_ref(),
    ) {
        Ok(ok) => report.check("triangle-lambda", ok, "Λ-whiskered (co)unit equals id_Λ"),
        Err(err) => report.fail("triangle-lambda", err),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{Context, ExtensionStep};
    use crate::corpus::{object_classifier, pointed_object_extension};

    #[test]
    fn reindexing_along_the_identity_is_inert() {
        let e = pointed_object_extension();
        let r = reindex_extension(&e, &ContextMap::identity(&e.base)).unwrap();
        assert_eq!(r.extension, e);
    }

    #[test]
    fn reindexing_the_point_along_dom_and_cod() {
        let e = pointed_object_extension();
        for side in [0u8, 1u8] {
            let r = reindex_extension(&e, &collapse_map(&e.base, side)).unwrap();
            let s = r.extension.extended().to_sketch();
            // nodes 1, X#0, X#1; the point lands on the chosen copy of X
            assert_eq!(s.nodes.len(), 3);
            assert!(s.nodes.contains(&"1".into()));
            let x = s.edge(&"x".into()).unwrap();
            assert_eq!(x.src, "1".into());
            assert_eq!(x.tgt, NodeId::from(if side == 0 { "X#0" } else { "X#1" }));
            // step count and kinds preserved
            assert_eq!(r.extension.added.len(), e.added.len());
        }
    }

    #[test]
    fn gamma_commutes_with_the_reindexed_extension_map() {
        let e = pointed_object_extension();
        for side in [0u8, 1u8] {
            let gamma = build_gamma(&e, side).unwrap();
            let r = reindex_extension(&e, &collapse_map(&e.base, side)).unwrap();
            // ext(r) ∘ Γ : T1→ → arrw(T0) equals arrw(U) followed by nothing
            // but the collapse-free projection: check against the arrow
            // functor of the extension map composed with... directly: both
            // sides send X#i ↦ X#i, so compare with the evident projection.
            let proj = compose_maps(&crate::maps::extension_map(&r.extension), &gamma).unwrap();
            let u_arrow = arrow_functor_map(&crate::maps::extension_map(&e)).unwrap();
            assert!(map_equal(&proj, &u_arrow));
        }
    }

    #[test]
    fn arrow_functor_respects_identities() {
        let c = object_classifier();
        let f = arrow_functor_map(&ContextMap::identity(&c)).unwrap();
        assert!(map_equal(&f, &ContextMap::identity(&f.from)));
    }

    #[test]
    fn trivial_extension_certificate_passes_both_directions() {
        // T1 = T0: Γ and Λ are both the collapse/diagonal pair
        let t0 = object_classifier();
        let e = ContextExtension::new(t0.clone(), vec![]).unwrap();
        for direction in [Direction::Opfibration, Direction::Fibration] {
            let side = if direction == Direction::Fibration { 1 } else { 0 };
            let gamma = build_gamma(&e, side).unwrap();
            // Λ = Γ⁻¹ candidate: the reindexed context is arrw(T0) itself
            let reindexed = gamma.to.clone();
            let lambda = ContextMap {
                from: reindexed.clone(),
                to: gamma.from.clone(),
                derivation: crate::equiv::EquivDerivation { base: reindexed.clone(), steps: vec![] },
                hom: SketchHom {
                    domain: gamma.from.to_sketch(),
                    codomain: reindexed.to_sketch(),
                    node_map: gamma.hom.node_map.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
                    edge_map: gamma.hom.edge_map.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
                },
            };
            let lg = compose_maps(&lambda, &gamma).unwrap();
            let id = ContextMap::identity(&gamma.from);
            let (lhs, rhs) = if direction == Direction::Fibration { (&id, &lg) } else { (&lg, &id) };
            let unit = crate::maps::build_obj_eq_two_cell(lhs, rhs, None, 8).unwrap();
            let witness = ObjEqWitness {
                nodes: reindexed
                    .nodes_in_order()
                    .into_iter()
                    .map(|n| (n, crate::maps::NodeJustification::Identity))
                    .collect(),
            };
            let cert = ChevalleyCertificate {
                direction,
                lambda,
                unit,
                identity_witness: witness,
                triangle_witnesses: (None, None),
            };
            let report = check_certificate(&e, &cert);
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn reindexing_into_an_equivalence_extension_is_refused() {
        // a map whose hom sends the base node into a derivation-added node
        let t0 = object_classifier();
        let e = ContextExtension::new(
            t0.clone(),
            vec![ExtensionStep::AddEdge { name: "u".into(), src: "X".into(), tgt: "X".into() }],
        )
        .unwrap();
        let b = Context::from_steps([ExtensionStep::AddPrimitiveNode { name: "Y".into() }]).unwrap();
        let mut derivation = crate::equiv::EquivDerivation { base: b.clone(), steps: vec![] };
        derivation.steps.push(crate::equiv::EquivStep::AddUniversal {
            step: ExtensionStep::AddTerminal { name: "t".into() },
        });
        let h = ContextMap {
            from: b.clone(),
            to: t0,
            derivation,
            hom: SketchHom {
                domain: object_classifier().to_sketch(),
                codomain: crate::equiv::check_derivation(&crate::equiv::EquivDerivation {
                    base: b,
                    steps: vec![crate::equiv::EquivStep::AddUniversal {
                        step: ExtensionStep::AddTerminal { name: "t".into() },
                    }],
                })
                .unwrap(),
                node_map: BTreeMap::from([("X".into(), "t".into())]),
                edge_map: BTreeMap::from([(EdgeId::from("s(X)"), NodeId::from("t").identity_edge())]),
            },
        };
        assert!(matches!(
            reindex_extension(&e, &h),
            Err(ChevalleyError::TranslationIncomplete(_))
        ));
    }
}
