use hms_core::graph::{deserialize_graph, serialize_graph, NodeKind, Placement, SceneGraph};
use hms_core::procgen::{
    container_prior, generate_dataset, generate_graph, sample_target, GenConfig, ProcgenError, TargetMode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn hundred_generated_graphs_round_trip() {
    let cfg = GenConfig::default_train();
    let ds = generate_dataset(&cfg, 100, 0).unwrap();
    for g in &ds.graphs {
        let text = serialize_graph(g);
        let back = deserialize_graph(&text).unwrap();
        assert_eq!(&back, g);
        assert_eq!(serialize_graph(&back), text);
    }
}

#[test]
fn placement_failures_are_rare() {
    let cfg = GenConfig::default_train();
    let failures = (0..2000u64)
        .filter(|&s| matches!(generate_graph(&cfg, s), Err(ProcgenError::Placement { .. })))
        .count();
    assert!(failures <= 20, "{failures} of 2000 graphs failed to pack");
}

#[test]
fn uniform_over_four_hidden_objects() {
    let mut g = SceneGraph::new("house");
    let r = g.add_room("kitchen").unwrap();
    let s = g.add_storage(r, "pantry", 700.0).unwrap();
    let sh = g.add_shelf(s, "shelf").unwrap();
    let p = |cx: f64, w: f64, depth: f64| Placement {
        cx,
        cy: 0.2,
        w,
        h: 0.4,
        depth,
        category: "snacks".into(),
    };
    let descriptions = ["Salted Crackers", "Potato Chips Bag", "Pretzel Twists", "Chocolate Cookies"];
    let mut hidden = Vec::new();
    for (i, d) in descriptions.iter().enumerate() {
        let cx = 0.125 + 0.25 * i as f64;
        g.add_object(sh, "snacks", "Popcorn Bag", p(cx, 0.24, 0.0)).unwrap();
        hidden.push(g.add_object(sh, "snacks", d, p(cx, 0.1, 0.5)).unwrap());
    }
    let cfg = GenConfig::default_train();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut counts = [0usize; 4];
    for _ in 0..1000 {
        let t = sample_target(&g, &cfg, TargetMode::Train, &mut rng).unwrap();
        counts[hidden.iter().position(|&h| h == t.object_id).unwrap()] += 1;
    }
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - 250.0).powi(2) / 250.0).sum();
    // 3 degrees of freedom, 99.9th percentile
    assert!(chi2 < 16.27, "chi2 {chi2} counts {counts:?}");
    for c in counts {
        assert!((200..=300).contains(&c), "{counts:?}");
    }
}

/// Empirical frequency of `category` having an instance in rooms labelled
/// `room`, against the closed-form prior.
#[test]
fn room_prior_matches_generation_frequency() {
    let cfg = GenConfig::default_train();
    let n = 10_000u64;
    for room in ["kitchen", "garage"] {
        let mut hits = 0usize;
        let mut graphs = 0usize;
        let mut prior = None;
        for seed in 0..n {
            let Ok(g) = generate_graph(&cfg, seed) else { continue };
            graphs += 1;
            let rid = g
                .ids_of_kind(NodeKind::Room)
                .into_iter()
                .find(|&r| g.node(r).unwrap().label == room)
                .unwrap();
            prior.get_or_insert_with(|| container_prior(&cfg, &g, rid, "dairy").unwrap());
            let has = g
                .ids_of_kind(NodeKind::Object)
                .into_iter()
                .any(|o| g.node(o).unwrap().label == "dairy" && g.in_subtree(rid, o));
            hits += has as usize;
        }
        let freq = hits as f64 / graphs as f64;
        let prior = prior.unwrap();
        assert!((freq - prior).abs() < 0.03, "{room}: frequency {freq} prior {prior}");
    }
    let g = generate_graph(&cfg, 0).unwrap();
    let room = |label: &str| {
        g.ids_of_kind(NodeKind::Room)
            .into_iter()
            .find(|&r| g.node(r).unwrap().label == label)
            .unwrap()
    };
    let kitchen = container_prior(&cfg, &g, room("kitchen"), "dairy").unwrap();
    let garage = container_prior(&cfg, &g, room("garage"), "dairy").unwrap();
    assert!(kitchen > garage);
}

/// The prior of the target's true room and storage, averaged over
/// episodes, beats the same average for a uniformly drawn room and storage.
#[test]
fn true_containers_have_higher_prior_than_random_ones() {
    use rand::Rng;
    let cfg = GenConfig::default_train();
    let ds = generate_dataset(&cfg, 200, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [NodeKind::Room, NodeKind::Storage] {
        let (mut truth, mut random) = (0.0, 0.0);
        for g in &ds.graphs {
            let t = sample_target(g, &cfg, TargetMode::Test, &mut rng).unwrap();
            let anc = g.ancestor_of_kind(t.object_id, kind).unwrap();
            truth += container_prior(&cfg, g, anc, &t.category).unwrap();
            let all = g.ids_of_kind(kind);
            let pick = all[rng.gen_range(0..all.len())];
            random += container_prior(&cfg, g, pick, &t.category).unwrap();
        }
        assert!(truth > random, "{kind:?}: {truth} vs {random}");
    }
}
