use std::collections::HashSet;
use std::num::NonZeroI32;
use std::sync::Arc;

use proptest::prelude::*;

use twosys_core::aligner::{pair_scores, score_matrix};
use twosys_core::bank::{augment, BankEntry, ClassifyOptions, EntrySource, TemplateParaphraser, ThinkBank};
use twosys_core::dataset::trajectory_for;
use twosys_core::embedding::{cosine, embed, normalize_text, BuiltinEmbedder, Embedder};
use twosys_core::fast::{parse, ContainerPhrase, FastCommand, ObjectPhrase, Side};
use twosys_core::model::{caption, parse_caption, scene_diff, Cell, Color, Family, Kind, ObjectId, PrimitiveAction, Scene, SystemLabel};
use twosys_core::sim::{apply, gen_scene};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

/// Raw fuzz input for one primitive; resolved against the scene so most actions are plausible.
#[derive(Clone, Debug)]
enum Op {
    Pick(usize),
    Place(u32, u32),
    Rotate(usize, i32),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..32).prop_map(Op::Pick),
        (0u32..20, 0u32..20).prop_map(|(x, y)| Op::Place(x, y)),
        (0usize..32, prop::sample::select(vec![-270, -180, -90, 45, 90, 180, 270, 720])).prop_map(|(i, d)| Op::Rotate(i, d)),
    ]
}

fn resolve(scene: &Scene, op: &Op) -> PrimitiveAction {
    let ids: Vec<ObjectId> = scene.ids().into_iter().collect();
    let id = |i: usize| if i < ids.len() * 2 { ids[i % ids.len()] } else { ObjectId(1000 + i as u32) };
    match *op {
        Op::Pick(i) => PrimitiveAction::Pick { object: id(i) },
        Op::Place(x, y) => PrimitiveAction::Place { cell: Cell::new(x, y) },
        Op::Rotate(i, d) => PrimitiveAction::Rotate { object: id(i), degrees: NonZeroI32::new(d).unwrap() },
    }
}

/// Every scene visited by a walk of accepted actions.
fn walk(seed: u64, family: Family, ops: &[Op]) -> Vec<Scene> {
    let mut s = gen_scene(seed, family).0;
    let mut seen = vec![s.clone()];
    for o in ops {
        if let Ok(next) = apply(&s, resolve(&s, o)) {
            s = next;
            seen.push(s.clone());
        }
    }
    seen
}

fn placement(s: &Scene) -> Vec<(ObjectId, Cell, u32)> {
    let mut v: Vec<_> = s.objects.iter().map(|o| (o.id, o.cell, o.z)).collect();
    v.sort_by_key(|p| p.0);
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn sim_never_breaks_scene_invariants(seed in 0u64..10_000, family in family(), ops in prop::collection::vec(op(), 0..60)) {
        let mut s = gen_scene(seed, family).0;
        let ids = s.ids();
        for o in &ops {
            let a = resolve(&s, o);
            let before = s.clone();
            match apply(&s, a) {
                Ok(next) => {
                    prop_assert!(next.validate().is_ok(), "{a} broke {:?}", next.validate());
                    prop_assert_eq!(next.ids(), ids.clone());
                    s = next;
                }
                Err(e) => {
                    prop_assert_eq!(e.action, a);
                    prop_assert_eq!(&s, &before);
                }
            }
        }
    }

    #[test]
    fn caption_is_pure_and_parses(seed in 0u64..10_000, family in family(), ops in prop::collection::vec(op(), 0..30)) {
        for s in walk(seed, family, &ops) {
            let c = caption(&s);
            prop_assert_eq!(&c, &caption(&s.clone()));
            let ((w, h), clauses) = parse_caption(&c).unwrap();
            prop_assert_eq!((w, h), (s.width, s.height));
            prop_assert_eq!(clauses.len(), s.objects.len());
        }
    }

    #[test]
    fn caption_separates_placements(seed in 0u64..10_000, family in family(), ops in prop::collection::vec(op(), 0..40)) {
        let scenes = walk(seed, family, &ops);
        for a in &scenes {
            for b in &scenes {
                if placement(a) != placement(b) || a.held != b.held {
                    prop_assert_ne!(caption(a), caption(b));
                }
            }
        }
    }

    #[test]
    fn diff_reverses(seed in 0u64..10_000, family in family(), ops in prop::collection::vec(op(), 0..40)) {
        let scenes = walk(seed, family, &ops);
        let (a, b) = (scenes.first().unwrap(), scenes.last().unwrap());
        let ab = scene_diff(a, b).unwrap();
        let ba = scene_diff(b, a).unwrap();
        prop_assert_eq!(ab.iter().map(|m| m.reversed()).collect::<Vec<_>>(), ba);
        prop_assert!(scene_diff(a, a).unwrap().is_empty());
        prop_assert_eq!(ab.is_empty(), placement(a) == placement(b));
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(a in "[a-z ]{1,40}", b in "[a-z ]{1,40}") {
        prop_assume!(!normalize_text(&a).is_empty() && !normalize_text(&b).is_empty());
        let (va, vb) = (embed(&a).unwrap(), embed(&b).unwrap());
        let ab = cosine(&va, &vb).unwrap();
        prop_assert_eq!(ab, cosine(&vb, &va).unwrap());
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
        prop_assert!((cosine(&va, &va).unwrap() - 1.0).abs() < 1e-9);
        let norm: f64 = va.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bank_retrieves_its_own_entries(texts in prop::collection::vec("[a-z]{2,8}( [a-z]{2,8}){0,5}", 1..40)) {
        let mut seen = HashSet::new();
        let entries: Vec<BankEntry> = texts
            .iter()
            .filter(|t| seen.insert(normalize_text(t)))
            .enumerate()
            .map(|(i, t)| BankEntry::new(i as u64, t.clone(), if i % 2 == 0 { SystemLabel::Fast } else { SystemLabel::Slow }, EntrySource::Manual))
            .collect();
        let emb: Arc<dyn Embedder> = Arc::new(BuiltinEmbedder::default());
        let bank = ThinkBank::new(entries.clone(), emb).unwrap();
        for e in &entries {
            let c = bank.classify(&e.text, ClassifyOptions::default()).unwrap();
            prop_assert_eq!(c.label, e.label);
            prop_assert!((c.neighbors[0].score - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn augmented_entries_keep_their_seed_label(iterations in 1usize..4, branching in 1usize..4, cap in prop::option::of(30usize..120)) {
        let seeds = twosys_core::bank::seed_entries();
        let a = augment(&seeds, iterations, &TemplateParaphraser::new(branching), cap).unwrap();
        if let Some(cap) = cap {
            prop_assert!(a.entries.len() <= cap.max(seeds.len()));
        }
        let ids: HashSet<u64> = a.entries.iter().map(|e| e.id).collect();
        prop_assert_eq!(ids.len(), a.entries.len());
        for e in &a.entries {
            let root = a.root(e.id);
            let seed = seeds.iter().find(|s| s.id == root).unwrap();
            prop_assert_eq!(e.label, seed.label);
        }
    }

    #[test]
    fn gaps_grow_with_alpha(seed in 0u64..500, family in prop::sample::select(Family::ALL.iter().copied().filter(|f| !f.is_fast()).collect::<Vec<_>>()), lo in 0.05f64..1.0, hi in 0.05f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let t = trajectory_for(family, seed, 8, 8).unwrap();
        let plan = t.plan.clone().unwrap();
        let steps: Vec<String> = plan.steps.iter().map(|s| s.text.clone()).collect();
        let caps: Vec<String> = t.frames.iter().map(|f| f.caption.clone()).collect();
        let m = score_matrix(&steps, &caps, &BuiltinEmbedder::default()).unwrap();
        prop_assert!(pair_scores(&m, lo).gaps.len() <= pair_scores(&m, hi).gaps.len());
    }
}

/// Fast commands carry no labels or source cells; those belong to plan steps.
fn object_phrase() -> impl Strategy<Value = ObjectPhrase> {
    let kind = prop::sample::select(vec![Kind::Cube, Kind::Toy, Kind::LetterTile, Kind::DigitTile, Kind::Food]);
    let color = prop::option::of(prop::sample::select(Color::PAINTED.to_vec()));
    (color, kind).prop_map(|(color, kind)| ObjectPhrase::new(color, kind))
}

fn fast_command() -> impl Strategy<Value = FastCommand> {
    let color = prop::sample::select(Color::PAINTED.to_vec());
    let side = prop::sample::select(vec![Side::Left, Side::Right]);
    let container = prop_oneof![
        side.clone().prop_map(ContainerPhrase::Side),
        (prop::option::of(prop::sample::select(Color::PAINTED.to_vec())), prop::sample::select(vec![Kind::Box, Kind::Bowl]))
            .prop_map(|(c, k)| ContainerPhrase::Object(ObjectPhrase::new(c, k))),
    ];
    let degrees = prop::sample::select(vec![-270, -180, -90, -45, 30, 90, 180, 270]);
    prop_oneof![
        color.clone().prop_map(|color| FastCommand::PickColorCube { color }),
        (color, side).prop_map(|(color, side)| FastCommand::PickPlaceBox { color, side }),
        (object_phrase(), container).prop_map(|(object, container)| FastCommand::PutInto { object, container }),
        (object_phrase(), degrees).prop_map(|(object, d)| FastCommand::RotateBy { object, degrees: NonZeroI32::new(d).unwrap() }),
    ]
}

proptest! {
    #[test]
    fn fast_render_parses_back(cmd in fast_command()) {
        let text = cmd.render();
        let parsed = parse(&text);
        prop_assert_eq!(parsed, Ok(cmd), "{}", text);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,80}") {
        let _ = parse(&text);
        let _ = twosys_core::fast::step::parse_step(&text);
        let _ = parse_caption(&text);
    }
}
