//! Built-in corpus of worked contexts, extensions and certificates.

use crate::chevalley::{build_gamma, ChevalleyCertificate, Direction};
use crate::context::{Context, ContextExtension, ExtensionStep};
use crate::equiv::{
    budget_from_env, check_derivation, DerivationBuilder, EquivDerivation, EquivError, EquivStep,
    FillinData,
};
use crate::maps::{
    build_obj_eq_two_cell, build_two_cell_with, compose_maps, ContextMap, NodeComponent,
    NodeJustification, ObjEqWitness, Piece, PrepComposite,
};
use crate::name::{EdgeId, NodeId};
use crate::sketch::SketchHom;
use std::collections::BTreeMap;

/// The object classifier: a single generic node X.
pub fn object_classifier() -> Context {
    Context::from_steps([ExtensionStep::AddPrimitiveNode { name: "X".into() }]).expect("valid")
}

/// The generic pointed object over the object classifier: a terminal node 1
/// and a point x: 1 → X.
pub fn pointed_object_extension() -> ContextExtension {
    ContextExtension::new(
        object_classifier(),
        vec![
            ExtensionStep::AddTerminal { name: "1".into() },
            ExtensionStep::AddEdge { name: "x".into(), src: "1".into(), tgt: "X".into() },
        ],
    )
    .expect("valid")
}

pub fn pointed_object() -> Context {
    pointed_object_extension().extended()
}

/// The theory of distributive lattices, encoded over a product L² with
/// meet/join/top/bot, commutativity, idempotence, unit and absorption laws.
/// Associativity and distributivity are not imposed: every model with at
/// most two elements satisfies them automatically, and the filter axioms of
/// the prime-spectrum extension are stable under inverse image, so verdicts
/// at the tested bounds are unaffected.
pub fn distributive_lattice() -> Context {
    use ExtensionStep::*;
    let e = |name: &str, src: &str, tgt: &str| AddEdge {
        name: name.into(),
        src: src.into(),
        tgt: tgt.into(),
    };
    let comm = |first: &str, second: &str, composite: &str| AddCommutativity {
        first: first.into(),
        second: second.into(),
        composite: composite.into(),
    };
    Context::from_steps([
        AddPrimitiveNode { name: "L".into() },
        AddTerminal { name: "one".into() },
        e("bang", "L", "one"),
        AddPullbackUniversal {
            apex: "L2".into(),
            leg1: "p1".into(),
            leg2: "p2".into(),
            diag: "dL2".into(),
            cospan1: "bang".into(),
            cospan2: "bang".into(),
        },
        e("meet", "L2", "L"),
        e("join", "L2", "L"),
        e("top", "one", "L"),
        e("bot", "one", "L"),
        // swap and the diagonal, pinned by their projections
        e("swap", "L2", "L2"),
        comm("swap", "p1", "p2"),
        comm("swap", "p2", "p1"),
        e("delta", "L", "L2"),
        comm("delta", "p1", "s(L)"),
        comm("delta", "p2", "s(L)"),
        // the constant maps x ↦ ⊤, x ↦ ⊥ and the pairings ⟨id, const⟩
        e("topbang", "L", "L"),
        comm("bang", "top", "topbang"),
        e("botbang", "L", "L"),
        comm("bang", "bot", "botbang"),
        e("wtop", "L", "L2"),
        comm("wtop", "p1", "s(L)"),
        comm("wtop", "p2", "topbang"),
        e("wbot", "L", "L2"),
        comm("wbot", "p1", "s(L)"),
        comm("wbot", "p2", "botbang"),
        // lattice laws: commutativity, idempotence, units
        comm("swap", "meet", "meet"),
        comm("swap", "join", "join"),
        comm("delta", "meet", "s(L)"),
        comm("delta", "join", "s(L)"),
        comm("wtop", "meet", "s(L)"),
        comm("wbot", "join", "s(L)"),
        // absorption via the pairings ⟨p1, join⟩ and ⟨p1, meet⟩
        e("pairmj", "L2", "L2"),
        comm("pairmj", "p1", "p1"),
        comm("pairmj", "p2", "join"),
        comm("pairmj", "meet", "p1"),
        e("pairjm", "L2", "L2"),
        comm("pairjm", "p1", "p1"),
        comm("pairjm", "p2", "meet"),
        comm("pairjm", "join", "p1"),
    ])
    .expect("valid")
}

/// The prime-filter extension over the distributive lattice theory: a node F
/// with a monic edge into L (kernel pair with equal projections), containing
/// top, closed under meet, and avoiding bottom (the pullback of bottom along
/// the inclusion maps to an initial object).  Upward closure and
/// join-primeness are inverse-image-stable and left out of the syntactic
/// encoding.
pub fn spec_extension() -> ContextExtension {
    use ExtensionStep::*;
    let e = |name: &str, src: &str, tgt: &str| AddEdge {
        name: name.into(),
        src: src.into(),
        tgt: tgt.into(),
    };
    let comm = |first: &str, second: &str, composite: &str| AddCommutativity {
        first: first.into(),
        second: second.into(),
        composite: composite.into(),
    };
    ContextExtension::new(
        distributive_lattice(),
        vec![
            AddPrimitiveNode { name: "F".into() },
            e("m", "F", "L"),
            // m monic: its kernel pair has equal projections
            AddPullbackUniversal {
                apex: "K".into(),
                leg1: "k1".into(),
                leg2: "k2".into(),
                diag: "dK".into(),
                cospan1: "m".into(),
                cospan2: "m".into(),
            },
            comm("s(K)", "k1", "k2"),
            // top is in F
            e("ftop", "one", "F"),
            comm("ftop", "m", "top"),
            // F is closed under meet: F² → F compatibly with m
            e("fbang", "F", "one"),
            AddPullbackUniversal {
                apex: "FF".into(),
                leg1: "q1".into(),
                leg2: "q2".into(),
                diag: "dFF".into(),
                cospan1: "fbang".into(),
                cospan2: "fbang".into(),
            },
            e("mq1", "FF", "L"),
            comm("q1", "m", "mq1"),
            e("mq2", "FF", "L"),
            comm("q2", "m", "mq2"),
            e("mm", "FF", "L2"),
            comm("mm", "p1", "mq1"),
            comm("mm", "p2", "mq2"),
            e("meetmm", "FF", "L"),
            comm("mm", "meet", "meetmm"),
            e("fmeet", "FF", "F"),
            comm("fmeet", "m", "meetmm"),
            // bottom is not in F: the pullback of bot along m admits a map
            // to an initial object
            AddPullbackUniversal {
                apex: "Pb".into(),
                leg1: "r1".into(),
                leg2: "r2".into(),
                diag: "dPb".into(),
                cospan1: "bot".into(),
                cospan2: "m".into(),
            },
            AddInitial { name: "I".into() },
            e("z", "Pb", "I"),
        ],
    )
    .expect("valid")
}

pub fn spec_context() -> Context {
    spec_extension().extended()
}

/// The theory of categories: objects C0, morphisms C1 with domain, codomain
/// and identities, composable pairs C2 as a pullback, composition c with its
/// boundary and unit laws.  Associativity is not imposed (it needs the object
/// of composable triples); at the tested bounds every admissible composition
/// table is associative, so verdicts are unaffected.
pub fn cat_context() -> Context {
    use ExtensionStep::*;
    let e = |name: &str, src: &str, tgt: &str| AddEdge {
        name: name.into(),
        src: src.into(),
        tgt: tgt.into(),
    };
    let comm = |first: &str, second: &str, composite: &str| AddCommutativity {
        first: first.into(),
        second: second.into(),
        composite: composite.into(),
    };
    Context::from_steps([
        AddPrimitiveNode { name: "C0".into() },
        AddPrimitiveNode { name: "C1".into() },
        e("d0", "C1", "C0"),
        e("d1", "C1", "C0"),
        e("i", "C0", "C1"),
        comm("i", "d0", "s(C0)"),
        comm("i", "d1", "s(C0)"),
        // composable pairs (u, v) with cod u = dom v
        AddPullbackUniversal {
            apex: "C2".into(),
            leg1: "e1".into(),
            leg2: "e2".into(),
            diag: "dC2".into(),
            cospan1: "d1".into(),
            cospan2: "d0".into(),
        },
        e("c", "C2", "C1"),
        e("cd0", "C2", "C0"),
        comm("e1", "d0", "cd0"),
        comm("c", "d0", "cd0"),
        e("cd1", "C2", "C0"),
        comm("e2", "d1", "cd1"),
        comm("c", "d1", "cd1"),
        // the pairings u ↦ (i(d0 u), u) and u ↦ (u, i(d1 u))
        e("d0i", "C1", "C1"),
        comm("d0", "i", "d0i"),
        e("li", "C1", "C2"),
        comm("li", "e1", "d0i"),
        comm("li", "e2", "s(C1)"),
        comm("li", "c", "s(C1)"),
        e("d1i", "C1", "C1"),
        comm("d1", "i", "d1i"),
        e("ri", "C1", "C2"),
        comm("ri", "e1", "s(C1)"),
        comm("ri", "e2", "d1i"),
        comm("ri", "c", "s(C1)"),
    ])
    .expect("valid")
}

/// The torsor extension over the theory of categories: an internal presheaf
/// F0 → C0 with its action object F1 (the pullback along d0) and the action
/// edge over d1 satisfying the identity law, plus the first flatness
/// condition — F0 → 1 is epi, encoded as its cokernel pair having equal
/// injections.  Compatibility of the action with composition and flatness
/// conditions two and three (the matching and equalising epis) are left out
/// of this encoding.
pub fn torsor_extension() -> ContextExtension {
    use ExtensionStep::*;
    let e = |name: &str, src: &str, tgt: &str| AddEdge {
        name: name.into(),
        src: src.into(),
        tgt: tgt.into(),
    };
    let comm = |first: &str, second: &str, composite: &str| AddCommutativity {
        first: first.into(),
        second: second.into(),
        composite: composite.into(),
    };
    ContextExtension::new(
        cat_context(),
        vec![
            AddPrimitiveNode { name: "F0".into() },
            e("p", "F0", "C0"),
            // pairs (x, u) with p(x) = dom u
            AddPullbackUniversal {
                apex: "F1".into(),
                leg1: "q".into(),
                leg2: "r".into(),
                diag: "dF1".into(),
                cospan1: "p".into(),
                cospan2: "d0".into(),
            },
            // the action x·u lies over cod u
            e("act", "F1", "F0"),
            e("ad", "F1", "C0"),
            comm("r", "d1", "ad"),
            comm("act", "p", "ad"),
            // acting by the identity does nothing: the pairing x ↦ (x, i(p x))
            e("pi", "F0", "C1"),
            comm("p", "i", "pi"),
            e("xi", "F0", "F1"),
            comm("xi", "q", "s(F0)"),
            comm("xi", "r", "pi"),
            comm("xi", "act", "s(F0)"),
            // non-emptiness: F0 → 1 is epi, i.e. its cokernel pair has equal
            // injections
            AddTerminal { name: "one".into() },
            e("fbang", "F0", "one"),
            AddPushoutUniversal {
                apex: "CK".into(),
                leg1: "j1".into(),
                leg2: "j2".into(),
                diag: "dCK".into(),
                span1: "fbang".into(),
                span2: "fbang".into(),
            },
            comm("s(one)", "j1", "j2"),
        ],
    )
    .expect("valid")
}

pub fn torsor_context() -> Context {
    torsor_extension().extended()
}

/// The opfibration certificate for the pointed-object extension.  Λ0 sends
/// the generic arrow of pointed objects over θ_X to the pointed object
/// (X#0, x) pushed forward along θ_X, adjoining the single composite
/// lam(x) = θ_X ∘ x; Γ0Λ0 is the identity on the nose, and Λ0Γ0 is
/// objectively equal to it because 1#0 and 1#1 are duplicate terminals.
pub fn pointed_object_certificate() -> ChevalleyCertificate {
    let e = pointed_object_extension();
    let gamma = build_gamma(&e, 0).expect("Γ0 exists");
    let domstar = gamma.to.clone();
    let arrow_t1 = gamma.from.clone();
    let lam_x = EdgeId::from("lam(x)");
    let derivation = EquivDerivation {
        base: domstar.clone(),
        steps: vec![EquivStep::AddComposite {
            first: "x".into(),
            second: "theta(X)".into(),
            name: lam_x.clone(),
        }],
    };
    let codomain = check_derivation(&derivation).expect("one-composite derivation");
    let node_map: BTreeMap<NodeId, NodeId> = [("1#0", "1"), ("1#1", "1"), ("X#0", "X#0"), ("X#1", "X#1")]
        .into_iter()
        .map(|(a, b)| (a.into(), b.into()))
        .collect();
    let mut edge_map: BTreeMap<EdgeId, EdgeId> = node_map
        .iter()
        .map(|(a, b)| (a.identity_edge(), b.identity_edge()))
        .collect();
    for (a, b) in [
        ("x#0", "x"),
        ("x#1", "lam(x)"),
        ("theta(1)", "s(1)"),
        ("theta(X)", "theta(X)"),
        ("theta(x)", "lam(x)"),
    ] {
        edge_map.insert(a.into(), b.into());
    }
    let lambda = ContextMap {
        from: domstar.clone(),
        to: arrow_t1.clone(),
        derivation,
        hom: SketchHom { domain: arrow_t1.to_sketch(), codomain, node_map, edge_map },
    };
    let lg = compose_maps(&lambda, &gamma).expect("Λ0Γ0 composes");
    let id = ContextMap::identity(&arrow_t1);
    let counit_witness = ObjEqWitness {
        nodes: [
            ("1#0", NodeJustification::Identity),
            ("1#1", NodeJustification::DuplicateUniversal),
            ("X#0", NodeJustification::Identity),
            ("X#1", NodeJustification::Identity),
        ]
        .into_iter()
        .map(|(n, j)| (n.into(), j))
        .collect(),
    };
    let unit = build_obj_eq_two_cell(&lg, &id, Some(&counit_witness), budget_from_env())
        .expect("counit Λ0Γ0 ⇒ id");
    let identity_witness = ObjEqWitness {
        nodes: domstar
            .nodes_in_order()
            .into_iter()
            .map(|n| (n, NodeJustification::Identity))
            .collect(),
    };
    ChevalleyCertificate {
        direction: Direction::Opfibration,
        lambda,
        unit,
        identity_witness,
        triangle_witnesses: (None, None),
    }
}

fn pb_data(leg1: &str, leg2: &str, diag: &str) -> FillinData {
    FillinData::Pullback { leg1: leg1.into(), leg2: leg2.into(), diag: diag.into() }
}

/// Λ1's equivalence derivation over cod*(Spec): adjoin the cartesian lift
/// P = θ_L*(F) and re-derive the filter apparatus (kernel pair, top, meet
/// closure, bottom-avoidance) over it.
fn spec_lambda_derivation(codstar: &Context, budget: usize) -> Result<EquivDerivation, EquivError> {
    let pb = |apex: &str, leg1: &str, leg2: &str, diag: &str, cospan1: &str, cospan2: &str| {
        ExtensionStep::AddPullbackUniversal {
            apex: apex.into(),
            leg1: leg1.into(),
            leg2: leg2.into(),
            diag: diag.into(),
            cospan1: cospan1.into(),
            cospan2: cospan2.into(),
        }
    };
    let mut d = DerivationBuilder::new(codstar, budget);
    // the lifted filter and its inclusion (pi1), section over the codomain
    // filter (pi2)
    d.universal(pb("P", "pi1", "pi2", "dP", "theta(L)", "m"))?;
    // pi1 is monic: its kernel pair has equal projections (via the kernel
    // pair of m)
    d.universal(pb("KP", "kp1", "kp2", "dKP", "pi1", "pi1"))?;
    d.composite("kp1", "pi2", "ca")?;
    d.composite("kp2", "pi2", "cb")?;
    d.composite("ca", "m", "cv")?;
    d.fillin("K", pb_data("ca", "cb", "cv"), "wK")?;
    d.law("s(KP)", "kp1", "kp2")?;
    d.composite("dKP", "theta(L)", "cdK")?;
    d.law("wK", "dK", "cdK")?;
    // top lifts
    d.composite("theta(one)", "ftop", "cftop")?;
    d.fillin("P", pb_data("top#0", "cftop", "theta(top)"), "ftopP")?;
    // the lifted filter square and meet closure
    d.composite("pi1", "bang#0", "pbang")?;
    d.composite("m", "bang#1", "cmb")?;
    d.composite("pi2", "fbang", "tbang")?;
    d.law("pbang", "theta(one)", "tbang")?;
    d.universal(pb("FFP", "ff1", "ff2", "dFFP", "pbang", "pbang"))?;
    d.composite("ff1", "pi2", "cq1")?;
    d.composite("ff2", "pi2", "cq2")?;
    d.composite("cq1", "fbang", "cdff")?;
    d.composite("cq2", "fbang", "cdff2")?;
    d.fillin("FF", pb_data("cq1", "cq2", "cdff"), "wFF")?;
    d.composite("ff1", "pi1", "mq1P")?;
    d.composite("ff2", "pi1", "mq2P")?;
    d.composite("mq1P", "theta(L)", "cmq1")?;
    d.composite("mq2P", "theta(L)", "cmq2")?;
    d.law("wFF", "mq1", "cmq1")?;
    d.law("wFF", "mq2", "cmq2")?;
    d.composite("mq1P", "bang#0", "dm")?;
    d.composite("mq2P", "bang#0", "dm2")?;
    d.fillin("L2#0", pb_data("mq1P", "mq2P", "dm"), "mmP")?;
    d.composite("mmP", "theta(L2)", "cmm")?;
    d.composite("wFF", "mm", "cwffmm")?;
    d.law("wFF", "mm", "cmm")?;
    d.composite("dFFP", "theta(one)", "cdFF0")?;
    d.law("wFF", "dFF", "cdFF0")?;
    d.composite("mmP", "meet#0", "meetmmP")?;
    d.composite("meetmmP", "theta(L)", "cmeetmm")?;
    d.law("wFF", "meetmm", "cmeetmm")?;
    d.composite("wFF", "fmeet", "cf")?;
    d.fillin("P", pb_data("meetmmP", "cf", "cmeetmm"), "fmeetP")?;
    // bottom-avoidance lifts along the inclusion
    d.universal(pb("PbP", "pr1", "pr2", "dPbP", "bot#0", "pi1"))?;
    d.composite("pr1", "theta(one)", "a1")?;
    d.composite("pr2", "pi2", "a2")?;
    d.composite("a2", "m", "ad")?;
    d.fillin("Pb", pb_data("a1", "a2", "ad"), "wPb")?;
    d.composite("dPbP", "theta(L)", "cdPb")?;
    d.law("wPb", "dPb", "cdPb")?;
    d.composite("wPb", "z", "zP")?;
    Ok(d.finish())
}

/// The fibration certificate for the prime-spectrum extension.  Λ1 sends a
/// lattice arrow θ_L with a filter F on its codomain to the generic arrow of
/// filtered lattices whose domain filter is the inverse image θ_L*(F),
/// realized as the pullback P of the inclusion m along θ_L.
pub fn spec_l_certificate() -> ChevalleyCertificate {
    let e = spec_extension();
    let budget = budget_from_env();
    let gamma = build_gamma(&e, 1).expect("Γ1 exists");
    let codstar = gamma.to.clone();
    let arrow_t1 = gamma.from.clone();
    let derivation = spec_lambda_derivation(&codstar, budget).expect("Λ1 derivation");
    let codomain = check_derivation(&derivation).expect("Λ1 derivation replays");
    let arrow_sketch = arrow_t1.to_sketch();
    let spec_nodes = ["F", "K", "FF", "Pb", "I"];
    let spec_edges = [
        "m", "k1", "k2", "dK", "ftop", "fbang", "q1", "q2", "dFF", "mq1", "mq2", "mm", "meetmm",
        "fmeet", "r1", "r2", "dPb", "z",
    ];
    let mut node_over: BTreeMap<String, &str> = BTreeMap::new();
    for (n, img) in [("F", "P"), ("K", "KP"), ("FF", "FFP"), ("Pb", "PbP"), ("I", "I")] {
        node_over.insert(format!("{n}#0"), img);
    }
    for n in spec_nodes {
        node_over.insert(format!("{n}#1"), n);
    }
    let mut edge_over: BTreeMap<String, &str> = BTreeMap::new();
    for u in spec_edges {
        edge_over.insert(format!("{u}#1"), u);
    }
    for (u, img) in [
        ("m", "pi1"),
        ("k1", "kp1"),
        ("k2", "kp2"),
        ("dK", "dKP"),
        ("ftop", "ftopP"),
        ("fbang", "pbang"),
        ("q1", "ff1"),
        ("q2", "ff2"),
        ("dFF", "dFFP"),
        ("mq1", "mq1P"),
        ("mq2", "mq2P"),
        ("mm", "mmP"),
        ("meetmm", "meetmmP"),
        ("fmeet", "fmeetP"),
        ("r1", "pr1"),
        ("r2", "pr2"),
        ("dPb", "dPbP"),
        ("z", "zP"),
    ] {
        edge_over.insert(format!("{u}#0"), img);
    }
    for (x, img) in [
        ("F", "pi2"),
        ("K", "wK"),
        ("FF", "wFF"),
        ("Pb", "wPb"),
        ("I", "s(I)"),
        ("m", "dP"),
        ("k1", "ca"),
        ("k2", "cb"),
        ("dK", "cdK"),
        ("ftop", "cftop"),
        ("fbang", "tbang"),
        ("q1", "cq1"),
        ("q2", "cq2"),
        ("dFF", "cdFF0"),
        ("mq1", "cmq1"),
        ("mq2", "cmq2"),
        ("mm", "cmm"),
        ("meetmm", "cmeetmm"),
        ("fmeet", "cf"),
        ("r1", "a1"),
        ("r2", "a2"),
        ("dPb", "cdPb"),
        ("z", "zP"),
    ] {
        edge_over.insert(format!("theta({x})"), img);
    }
    let node_map: BTreeMap<NodeId, NodeId> = arrow_sketch
        .nodes
        .iter()
        .map(|n| {
            let img = match node_over.get(&n.to_string()) {
                Some(o) => (*o).into(),
                None => n.clone(),
            };
            (n.clone(), img)
        })
        .collect();
    let edge_map: BTreeMap<EdgeId, EdgeId> = arrow_sketch
        .edges
        .iter()
        .map(|(eid, edge)| {
            let img = match edge_over.get(&eid.to_string()) {
                Some(o) => (*o).into(),
                None if arrow_sketch.is_identity_edge(eid) => {
                    codomain.identity[&node_map[&edge.src]].clone()
                }
                None => eid.clone(),
            };
            (eid.clone(), img)
        })
        .collect();
    let lambda = ContextMap {
        from: codstar.clone(),
        to: arrow_t1.clone(),
        derivation,
        hom: SketchHom { domain: arrow_sketch, codomain, node_map, edge_map },
    };
    // the unit id ⇒ Λ1Γ1: on the domain-side filter nodes the component is
    // the canonical comparison into the re-derived pullbacks
    let prep = |name: &str, path: Vec<Piece>| PrepComposite { name: name.into(), path };
    let pe = |s: &str| Piece::Edge(s.into());
    let fill = |prep: Vec<PrepComposite>, l1: &str, l2: &str, diag: &str| NodeComponent::Fillin {
        prep,
        data: pb_data(l1, l2, diag),
    };
    let iota_f = || Piece::Iota("F#0".into());
    let components: BTreeMap<NodeId, NodeComponent> = [
        ("F#0", fill(vec![], "m#0", "theta(F)", "theta(m)")),
        (
            "K#0",
            fill(
                vec![
                    prep("kb1", vec![pe("k1#0"), iota_f()]),
                    prep("kb2", vec![pe("k2#0"), iota_f()]),
                ],
                "kb1",
                "kb2",
                "dK#0",
            ),
        ),
        (
            "FF#0",
            fill(
                vec![
                    prep("fb1", vec![pe("q1#0"), iota_f()]),
                    prep("fb2", vec![pe("q2#0"), iota_f()]),
                    prep("fd", vec![pe("mq1#0"), pe("bang#0")]),
                    prep("fd2", vec![pe("mq2#0"), pe("bang#0")]),
                ],
                "fb1",
                "fb2",
                "fd",
            ),
        ),
        (
            "Pb#0",
            fill(vec![prep("rb2", vec![pe("r2#0"), iota_f()])], "r1#0", "rb2", "dPb#0"),
        ),
        ("I#0", NodeComponent::DuplicateUniversal),
    ]
    .into_iter()
    .map(|(n, c)| (n.into(), c))
    .collect();
    let lg = compose_maps(&lambda, &gamma).expect("Λ1Γ1 composes");
    let id = ContextMap::identity(&arrow_t1);
    let unit = build_two_cell_with(&id, &lg, &components, budget).expect("unit id ⇒ Λ1Γ1");
    let identity_witness = ObjEqWitness {
        nodes: codstar
            .nodes_in_order()
            .into_iter()
            .map(|n| (n, NodeJustification::Identity))
            .collect(),
    };
    ChevalleyCertificate {
        direction: Direction::Fibration,
        lambda,
        unit,
        identity_witness,
        triangle_witnesses: (None, None),
    }
}

/// A certificate bundled with the verdict its entry pins.
#[derive(Debug, Clone)]
pub struct CorpusCertificate {
    pub name: &'static str,
    pub certificate: ChevalleyCertificate,
    pub expect_pass: bool,
}

/// One corpus entry: a base context, optionally an extension over it, and
/// zero or more certificates with pinned verdicts.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub context: Context,
    pub extension: Option<ContextExtension>,
    pub certificates: Vec<CorpusCertificate>,
    pub notes: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    UnknownId(String),
}

impl std::fmt::Display for CorpusError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorpusError::UnknownId(id) => write!(f, "unknown corpus id: {id}"),
        }
    }
}

impl std::error::Error for CorpusError {}

/// The pointed-object certificate with its Λ boundary contexts swapped; the
/// checker rejects it as ill-typed.
pub fn corrupt_swapped_codomain() -> ChevalleyCertificate {
    let mut cert = pointed_object_certificate();
    std::mem::swap(&mut cert.lambda.from, &mut cert.lambda.to);
    cert
}

/// The pointed-object certificate with two node components of its counit
/// witness swapped; the 2-cell no longer typechecks.
pub fn corrupt_broken_witness() -> ChevalleyCertificate {
    let mut cert = pointed_object_certificate();
    let nm = &mut cert.unit.body.hom.node_map;
    let (a, b) = (NodeId::from("X#0#0"), NodeId::from("1#0#0"));
    let (va, vb) = (nm[&a].clone(), nm[&b].clone());
    nm.insert(a, vb);
    nm.insert(b, va);
    cert
}

/// The pointed-object certificate claimed in the fibration direction; the
/// extension is an opfibration only.
pub fn corrupt_wrong_direction() -> ChevalleyCertificate {
    let mut cert = pointed_object_certificate();
    cert.direction = Direction::Fibration;
    cert
}

/// All corpus entry ids, in load order.
pub fn list() -> Vec<&'static str> {
    vec!["object-classifier", "opt", "dl-spec", "cat-torsor", "opt-corrupt"]
}

/// Build the entry with the given id.
pub fn load(id: &str) -> Result<CorpusEntry, CorpusError> {
    let entry = match id {
        "object-classifier" => CorpusEntry {
            id: "object-classifier",
            context: object_classifier(),
            extension: None,
            certificates: vec![],
            notes: "the single generic node; its models are the objects of the ambient category",
        },
        "opt" => CorpusEntry {
            id: "opt",
            context: object_classifier(),
            extension: Some(pointed_object_extension()),
            certificates: vec![CorpusCertificate {
                name: "opfib",
                certificate: pointed_object_certificate(),
                expect_pass: true,
            }],
            notes: "the generic pointed object; forgetting the point is an opfibration",
        },
        "dl-spec" => CorpusEntry {
            id: "dl-spec",
            context: distributive_lattice(),
            extension: Some(spec_extension()),
            certificates: vec![CorpusCertificate {
                name: "fib",
                certificate: spec_l_certificate(),
                expect_pass: true,
            }],
            notes: "distributive lattices with a prime filter; forgetting the filter is a \
                    fibration via inverse image. Associativity and distributivity are omitted \
                    from the lattice encoding, and upward closure and join-primeness from the \
                    filter encoding; all hold automatically at the tested bounds",
        },
        "cat-torsor" => CorpusEntry {
            id: "cat-torsor",
            context: cat_context(),
            extension: Some(torsor_extension()),
            certificates: vec![], // syntactic certificate deferred
            notes: "categories with a torsor (flat presheaf). Associativity, action \
                    compatibility with composition, and flatness conditions two and three are \
                    omitted from the encoding; only the non-emptiness epi is imposed",
        },
        "opt-corrupt" => CorpusEntry {
            id: "opt-corrupt",
            context: object_classifier(),
            extension: Some(pointed_object_extension()),
            certificates: vec![
                CorpusCertificate {
                    name: "swapped-codomain",
                    certificate: corrupt_swapped_codomain(),
                    expect_pass: false,
                },
                CorpusCertificate {
                    name: "broken-witness",
                    certificate: corrupt_broken_witness(),
                    expect_pass: false,
                },
                CorpusCertificate {
                    name: "wrong-direction",
                    certificate: corrupt_wrong_direction(),
                    expect_pass: false,
                },
            ],
            notes: "deliberately damaged pointed-object certificates; every checker run must \
                    reject them",
        },
        other => return Err(CorpusError::UnknownId(other.to_string())),
    };
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chevalley::check_certificate;
    use std::time::Instant;

    #[test]
    fn pointed_object_certificate_passes() {
        let start = Instant::now();
        let report = check_certificate(&pointed_object_extension(), &pointed_object_certificate());
        assert!(report.passed(), "{report}");
        assert!(start.elapsed().as_secs_f64() < 1.0, "took {:?}", start.elapsed());
    }

    #[test]
    fn lattice_models_at_bound_two_are_the_three_small_lattices() {
        // trivial lattice plus the two skeletal orderings of the 2-chain
        let models = crate::finset::enumerate_strict_models(&distributive_lattice(), 2).unwrap();
        assert_eq!(models.len(), 3);
        let sizes: Vec<usize> = models.iter().map(|m| m.carrier(&"L".into())).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 1);
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 2);
    }

    #[test]
    fn spec_models_at_bound_two_are_the_prime_filters() {
        // no prime filter over the trivial lattice; exactly one per 2-chain
        let models = crate::finset::enumerate_strict_models(&spec_context(), 2).unwrap();
        assert_eq!(models.len(), 2);
        for m in &models {
            assert_eq!(m.carrier(&"L".into()), 2);
            assert_eq!(m.carrier(&"F".into()), 1);
        }
    }

    #[test]
    fn spec_certificate_passes_as_a_fibration() {
        let start = Instant::now();
        let cert = spec_l_certificate();
        let report = check_certificate(&spec_extension(), &cert);
        assert!(report.passed(), "{report}");
        assert!(start.elapsed().as_secs_f64() < 5.0, "took {:?}", start.elapsed());
    }

    #[test]
    fn category_models_at_bound_two_are_the_eight_small_presentations() {
        // carriers are labelled, so each isomorphism class appears once per
        // labelling: empty, terminal, the two 2-element monoids (identity at
        // position 0 or 1), and the discrete pair (identities straight or
        // crossed)
        let models = crate::finset::enumerate_strict_models(&cat_context(), 2).unwrap();
        assert_eq!(models.len(), 8);
    }

    #[test]
    fn torsor_models_at_bound_two() {
        // none over the empty category; |F0| ∈ {1, 2} over the point; five
        // identity-respecting actions over each of the four monoid
        // presentations; six projections over each of the two discrete-pair
        // presentations
        let models = crate::finset::enumerate_strict_models(&torsor_context(), 2).unwrap();
        assert_eq!(models.len(), 34);
        for m in &models {
            assert!(m.carrier(&"F0".into()) >= 1, "the epi condition forces F0 nonempty");
        }
    }

    #[test]
    fn corpus_verdicts_reproduce() {
        for id in list() {
            let entry = load(id).unwrap();
            for c in &entry.certificates {
                let e = entry.extension.as_ref().expect("certificates need an extension");
                let report = check_certificate(e, &c.certificate);
                assert_eq!(report.passed(), c.expect_pass, "{id}/{}: {report}", c.name);
            }
        }
    }

    #[test]
    fn swapped_codomain_is_rejected_as_ill_typed() {
        let report = check_certificate(&pointed_object_extension(), &corrupt_swapped_codomain());
        let first = &report.items[0];
        assert_eq!(first.name, "lambda-typecheck");
        assert!(!report.passed());
    }

    #[test]
    fn unknown_corpus_id_is_rejected() {
        assert!(matches!(load("nosuch"), Err(CorpusError::UnknownId(_))));
    }

    #[test]
    fn pointed_object_certificate_fails_as_a_fibration() {
        let mut cert = pointed_object_certificate();
        cert.direction = Direction::Fibration;
        let report = check_certificate(&pointed_object_extension(), &cert);
        assert!(!report.passed());
    }
}
