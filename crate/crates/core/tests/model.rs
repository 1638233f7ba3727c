mod common;

use common::{place, Fixture};
use hms_core::graph::{Placement, SceneGraph};
use hms_core::model::{
    featurize_container, featurize_object, featurize_target, message_pass, object_input, score_node, GraphForward, Head,
};
use hms_core::nn::Tape;
use hms_core::{EmbeddingTable, HmsModel, ModelVariant, NodeId};

fn emb() -> EmbeddingTable {
    EmbeddingTable::bundled()
}

fn model(variant: ModelVariant) -> HmsModel {
    HmsModel::glorot(emb().dim(), variant, 7).unwrap()
}

fn container_vec(label: &str, volume: f64) -> Vec<f64> {
    let mut g = SceneGraph::new("house");
    let r = g.add_room("kitchen").unwrap();
    let s = g.add_storage(r, label, volume).unwrap();
    let m = model(ModelVariant::Hms);
    let mut tape = Tape::new();
    let v = featurize_container(&mut tape, &m.params, &emb(), g.node(s).unwrap()).unwrap();
    tape.value(v).to_vec()
}

#[test]
fn container_features_depend_on_label_and_volume() {
    let a = container_vec("fridge", 450.0);
    assert_eq!(a.len(), 100);
    assert_eq!(a, container_vec("fridge", 450.0));
    assert_ne!(container_vec("fridge", 0.0), container_vec("fridge", 500.0));
    assert_ne!(a, container_vec("pantry", 450.0));
}

fn object_graph(labels: &[&str]) -> (SceneGraph, Vec<NodeId>) {
    let mut g = SceneGraph::new("house");
    let r = g.add_room("kitchen").unwrap();
    let s = g.add_storage(r, "pantry", 600.0).unwrap();
    let sh = g.add_shelf(s, "shelf").unwrap();
    let ids = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            g.add_object(sh, l, l, place(0.15 + 0.3 * i as f64, 0.1, 0.2, 0.0, l))
                .unwrap()
        })
        .collect();
    (g, ids)
}

#[test]
fn no_label_variant_ignores_object_labels() {
    let e = emb();
    let m = model(ModelVariant::NoObjectLabel);
    let mut g = SceneGraph::new("house");
    let r = g.add_room("kitchen").unwrap();
    let s = g.add_storage(r, "pantry", 600.0).unwrap();
    let a = g.add_shelf(s, "shelf").unwrap();
    let b = g.add_shelf(s, "shelf").unwrap();
    let x = g.add_object(a, "hats", "Wool Winter Hat", place(0.3, 0.1, 0.2, 0.0, "hats")).unwrap();
    let y = g.add_object(b, "tools", "Claw Hammer", place(0.3, 0.1, 0.2, 0.0, "tools")).unwrap();
    let target = e.embed_phrase("claw hammer").unwrap();
    let mut tape = Tape::new();
    let fx = featurize_object(&mut tape, &m.params, &e, g.node(x).unwrap(), m.variant, &target).unwrap();
    let fy = featurize_object(&mut tape, &m.params, &e, g.node(y).unwrap(), m.variant, &target).unwrap();
    assert_eq!(tape.value(fx).len(), 100);
    assert_eq!(tape.value(fx), tape.value(fy));
    // and the full-label variant tells them apart
    let full = model(ModelVariant::Hms);
    let fx = featurize_object(&mut tape, &full.params, &e, g.node(x).unwrap(), full.variant, &target).unwrap();
    let fy = featurize_object(&mut tape, &full.params, &e, g.node(y).unwrap(), full.variant, &target).unwrap();
    assert_ne!(tape.value(fx), tape.value(fy));
}

#[test]
fn context_vector_input_is_box_plus_cosine() {
    let e = emb();
    let mut g = SceneGraph::new("house");
    let r = g.add_room("closet").unwrap();
    let s = g.add_storage(r, "shelves", 300.0).unwrap();
    let sh = g.add_shelf(s, "shelf").unwrap();
    let p = Placement {
        cx: 0.5,
        cy: 0.5,
        w: 0.2,
        h: 0.3,
        depth: 0.0,
        category: "hats".into(),
    };
    let o = g.add_object(sh, "hats", "Wool Winter Hat", p).unwrap();
    let target = e.embed_phrase("hats").unwrap();
    let x = object_input(&e, g.node(o).unwrap(), ModelVariant::ContextVector, &target).unwrap();
    assert_eq!(x.len(), 5);
    assert_eq!(&x[..4], &[0.5, 0.5, 0.2, 0.3]);
    assert!((x[4] - 1.0).abs() < 1e-12, "cosine {}", x[4]);
}

#[test]
fn one_word_target_is_the_featurizer_of_that_vector() {
    let e = emb();
    let m = model(ModelVariant::Hms);
    let mut tape = Tape::new();
    let a = featurize_target(&mut tape, &m.params, &e, "hats").unwrap();
    let b = featurize_target(&mut tape, &m.params, &e, "hats").unwrap();
    assert_eq!(tape.value(a), tape.value(b));

    let x = tape.input(e.word_vector("hats"));
    let h = tape.linear(&m.params, "feat_target.0", x).unwrap();
    let h = tape.relu(h);
    let manual = tape.linear(&m.params, "feat_target.1", h).unwrap();
    assert_eq!(tape.value(a), tape.value(manual));
}

#[test]
fn message_pass_degenerate_cases() {
    let m = model(ModelVariant::Hms);
    let mut tape = Tape::new();
    let f_p = tape.input((0..100).map(|i| (i as f64 * 0.37).sin()).collect());
    let (same, kids) = message_pass(&mut tape, &m.params, f_p, &[]).unwrap();
    assert_eq!(same, f_p);
    assert!(kids.is_empty());

    let c = tape.input((0..100).map(|i| (i as f64 * 0.11).cos()).collect());
    let (p2, kids) = message_pass(&mut tape, &m.params, f_p, &[c, c]).unwrap();
    assert_eq!(tape.value(kids[0]), tape.value(kids[1]));
    let expected: Vec<f64> = tape
        .value(f_p)
        .iter()
        .zip(tape.value(kids[0]))
        .map(|(a, b)| (a + b) / 2.0)
        .collect();
    for (a, b) in tape.value(p2).iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn message_pass_is_order_invariant() {
    let m = model(ModelVariant::Hms);
    let mut tape = Tape::new();
    let f_p = tape.input((0..100).map(|i| (i as f64 * 0.2).sin()).collect());
    let kids: Vec<_> = (0..4)
        .map(|k| tape.input((0..100).map(|i| ((i * (k + 2)) as f64 * 0.05).cos()).collect()))
        .collect();
    let (a, _) = message_pass(&mut tape, &m.params, f_p, &kids).unwrap();
    let rev: Vec<_> = kids.iter().rev().copied().collect();
    let (b, _) = message_pass(&mut tape, &m.params, f_p, &rev).unwrap();
    for (x, y) in tape.value(a).iter().zip(tape.value(b)) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn zeroed_heads_score_one_half() {
    let e = emb();
    let fx = Fixture::new();
    for variant in ModelVariant::ALL {
        let m = HmsModel::new(e.dim(), variant, 3).unwrap();
        let mut fwd = GraphForward::new(&m, &e, "Swiss Cheese Slices").unwrap();
        for id in [fx.kitchen, fx.fridge, fx.shelf_a, fx.occluder, fx.bystander] {
            let p = fwd.score(&fx.graph, id).unwrap();
            assert_eq!(fwd.value(p), 0.5, "{variant} {id}");
        }
    }
}

#[test]
fn scores_are_strictly_between_zero_and_one() {
    let e = emb();
    let fx = Fixture::new();
    let m = model(ModelVariant::Hms);
    let mut tape = Tape::new();
    let f = tape.input(vec![40.0; 100]);
    let t = tape.input(vec![40.0; 100]);
    let p = score_node(&mut tape, &m.params, f, t, Head::Container).unwrap();
    assert!(tape.value(p)[0] > 0.0 && tape.value(p)[0] < 1.0);
    let mut fwd = GraphForward::new(&m, &e, "Swiss Cheese Slices").unwrap();
    for id in [fx.kitchen, fx.garage, fx.pantry, fx.shelf_d, fx.occluder] {
        let p = fwd.score(&fx.graph, id).unwrap();
        let v = fwd.value(p);
        assert!(v > 0.0 && v < 1.0);
    }
}

#[test]
fn hidden_objects_cannot_be_scored() {
    let e = emb();
    let fx = Fixture::new();
    let m = model(ModelVariant::Hms);
    let mut fwd = GraphForward::new(&m, &e, "Swiss Cheese Slices").unwrap();
    assert!(fwd.score(&fx.graph, fx.target).is_err());
    assert!(fwd.score(&fx.graph, fx.graph.root()).is_err());
}

#[test]
fn empty_shelf_has_no_children_to_score() {
    let e = emb();
    let (mut g, _) = object_graph(&["hats"]);
    let storage = g.ids_of_kind(hms_core::NodeKind::Storage)[0];
    let empty = g.add_shelf(storage, "shelf").unwrap();
    let m = model(ModelVariant::Hms);
    let mut fwd = GraphForward::new(&m, &e, "hats").unwrap();
    assert!(fwd.evaluate_children(&g, empty).unwrap().is_empty());
    let storage_kids = fwd.evaluate_children(&g, storage).unwrap();
    assert_eq!(storage_kids.len(), 2);
}

fn kitchen_scores(variant: ModelVariant, extra_storage: bool) -> (f64, Vec<(NodeId, f64)>) {
    let e = emb();
    let mut fx = Fixture::new();
    if extra_storage {
        fx.graph.add_storage(fx.kitchen, "cabinet", 250.0).unwrap();
    }
    let m = model(variant);
    let mut fwd = GraphForward::new(&m, &e, "Swiss Cheese Slices").unwrap();
    let room = fwd
        .evaluate_children(&fx.graph, fx.graph.root())
        .unwrap()
        .into_iter()
        .find(|(id, _)| *id == fx.kitchen)
        .unwrap()
        .1;
    let kids = fwd.evaluate_children(&fx.graph, fx.kitchen).unwrap();
    (room, kids)
}

#[test]
fn without_message_passing_siblings_do_not_interact() {
    let (room_a, a) = kitchen_scores(ModelVariant::NoMessagePassing, false);
    let (room_b, b) = kitchen_scores(ModelVariant::NoMessagePassing, true);
    assert_eq!(room_a, room_b);
    assert_eq!(b.len(), a.len() + 1);
    assert_eq!(&b[..a.len()], &a[..]);
}

#[test]
fn with_message_passing_a_new_sibling_moves_the_parent() {
    let (room_a, _) = kitchen_scores(ModelVariant::Hms, false);
    let (room_b, _) = kitchen_scores(ModelVariant::Hms, true);
    assert!((room_a - room_b).abs() > 1e-9, "{room_a} vs {room_b}");
}

#[test]
fn storage_insertion_order_does_not_matter() {
    let e = emb();
    let build = |order: &[(&str, f64)]| {
        let mut g = SceneGraph::new("house");
        let r = g.add_room("kitchen").unwrap();
        for (label, vol) in order {
            g.add_storage(r, label, *vol).unwrap();
        }
        (g, r)
    };
    let (g1, r1) = build(&[("fridge", 400.0), ("pantry", 800.0), ("cabinet", 200.0)]);
    let (g2, r2) = build(&[("cabinet", 200.0), ("fridge", 400.0), ("pantry", 800.0)]);
    let m = model(ModelVariant::Hms);
    let mut f1 = GraphForward::new(&m, &e, "Corn Flakes Box").unwrap();
    let mut f2 = GraphForward::new(&m, &e, "Corn Flakes Box").unwrap();
    let p1 = f1.score(&g1, r1).unwrap();
    let p2 = f2.score(&g2, r2).unwrap();
    assert!((f1.value(p1) - f2.value(p2)).abs() < 1e-12);
}

#[test]
fn variants_share_parameter_names() {
    let names: Vec<Vec<String>> = ModelVariant::ALL
        .iter()
        .map(|&v| model(v).params.names().to_vec())
        .collect();
    for n in &names[1..] {
        assert_eq!(n, &names[0]);
    }
}

#[test]
fn checkpoint_round_trip_gives_identical_scores() {
    let e = emb();
    let fx = Fixture::new();
    let dir = tempfile::tempdir().unwrap();
    for variant in ModelVariant::ALL {
        let m = model(variant);
        let path = dir.path().join(format!("{variant}.json"));
        m.save(&path).unwrap();
        let back = HmsModel::load(&path).unwrap();
        assert_eq!(back.variant, variant);
        let mut a = GraphForward::new(&m, &e, "Swiss Cheese Slices").unwrap();
        let mut b = GraphForward::new(&back, &e, "Swiss Cheese Slices").unwrap();
        for id in [fx.kitchen, fx.fridge, fx.shelf_a, fx.occluder] {
            let pa = a.score(&fx.graph, id).unwrap();
            let pb = b.score(&fx.graph, id).unwrap();
            assert_eq!(a.value(pa).to_bits(), b.value(pb).to_bits());
        }
    }
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let m = model(ModelVariant::Hms);
    let mut ck = m.checkpoint();
    ck.architecture_hash = "0".repeat(64);
    assert!(HmsModel::from_checkpoint(&ck).is_err());
    let mut ck = m.checkpoint();
    ck.variant = "context_vector".into();
    assert!(HmsModel::from_checkpoint(&ck).is_err());
}
