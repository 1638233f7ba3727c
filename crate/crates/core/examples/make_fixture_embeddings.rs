//! Regenerates the bundled 50-d embedding fixture.
//!
//! The vocabulary is every token of the default catalog plus common filler
//! words. Vectors are synthetic but structured: each room, storage type and
//! category gets a random direction, storage directions lean towards the
//! rooms they are placed in and category directions lean towards the
//! storage that holds them. A token's vector is the mean direction of every
//! catalog phrase it occurs in plus noise.
//!
//! Usage: cargo run -p hms-core --example make_fixture_embeddings [out_path]

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hms_core::embeddings::tokenize;
use hms_core::procgen::GenConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DIM: usize = 50;
const VOCAB: usize = 500;
const SCALE: f64 = 3.0;
const NOISE: f64 = 0.4;
const LEAN: f64 = 0.6;

const FILLER: &str = "the of and to in is was it for on with as at by from that this be are or an not but which have had were they you one all their there been has would when who will more no if out so said what up its about into than them can only other new some could time these two may then do first any my now such like our over man me even most made after also did many before must through back years where much your way well down should because each just those people how too little state good very make world still own see men work long get here between both life being under never day same another know while last might us great old year off come since against go came right used take three himself few house use during without again place around however home small found thought went say part once general high upon school every don does got united left number course war until always away something fact though water less public put think almost hand enough far took head yet government system better set told nothing night end why called";

fn random_dir(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM)
        .map(|_| StandardNormal.sample(rng))
        .map(|x: f64| x / (DIM as f64).sqrt())
        .collect()
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(y, v)| *y += a * v);
}

fn main() {
    let out_path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/glove-fixture-50d.txt").to_string());
    let cfg = GenConfig::default_train();
    let mut rng = ChaCha8Rng::seed_from_u64(20_200_531);

    let room_dir: BTreeMap<&str, Vec<f64>> =
        cfg.room_types.iter().map(|r| (r.as_str(), random_dir(&mut rng))).collect();
    let mut storage_dir: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for st in &cfg.storage_types {
        let mut v = random_dir(&mut rng);
        for r in &cfg.room_types {
            axpy(&mut v, LEAN * cfg.storage_room_normalized(&st.label, r), &room_dir[r.as_str()]);
        }
        storage_dir.insert(st.label.as_str(), v);
    }
    let mut category_dir: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in &cfg.categories {
        let mut v = random_dir(&mut rng);
        let mass: f64 = cfg.storage_types.iter().map(|s| cfg.category_storage(c, &s.label)).sum();
        for st in &cfg.storage_types {
            let w = cfg.category_storage(c, &st.label) / mass;
            axpy(&mut v, LEAN * w, &storage_dir[st.label.as_str()]);
        }
        category_dir.insert(c.as_str(), v);
    }

    // phrases and the direction each one stands for
    let mut phrases: Vec<(String, &Vec<f64>)> = Vec::new();
    for (r, v) in &room_dir {
        phrases.push((r.to_string(), v));
    }
    for (s, v) in &storage_dir {
        phrases.push((s.to_string(), v));
    }
    for (c, v) in &category_dir {
        phrases.push((c.to_string(), v));
    }
    for a in &cfg.assets {
        phrases.push((a.description.clone(), &category_dir[a.category.as_str()]));
    }

    let mut anchors: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for (text, dir) in &phrases {
        for tok in tokenize(text) {
            let e = anchors.entry(tok).or_insert_with(|| (vec![0.0; DIM], 0));
            axpy(&mut e.0, 1.0, dir);
            e.1 += 1;
        }
    }
    let mut vectors: Vec<(String, Vec<f64>)> = Vec::new();
    for (tok, (sum, n)) in anchors {
        let mut v: Vec<f64> = sum.iter().map(|x| x / n as f64).collect();
        axpy(&mut v, NOISE, &random_dir(&mut rng));
        vectors.push((tok, v));
    }
    for tok in ["shelf", "house"] {
        if !vectors.iter().any(|(t, _)| t == tok) {
            vectors.push((tok.to_string(), random_dir(&mut rng)));
        }
    }
    for tok in FILLER.split_whitespace() {
        if vectors.len() == VOCAB {
            break;
        }
        if !vectors.iter().any(|(t, _)| t == tok) {
            vectors.push((tok.to_string(), random_dir(&mut rng)));
        }
    }
    assert_eq!(vectors.len(), VOCAB, "filler list too short");

    let mut text = String::new();
    for (tok, v) in &vectors {
        text.push_str(tok);
        for x in v {
            write!(text, " {:.5}", x * SCALE).unwrap();
        }
        text.push('\n');
    }
    std::fs::write(&out_path, text).expect("write fixture");
    eprintln!("wrote {} vectors of dim {DIM} to {out_path}", vectors.len());
}
