//! The shipped starter bank and the held-out check set.

use std::collections::BTreeSet;

use crate::embedding::EmbedderSpec;
use crate::model::Family;
use crate::sim::gen_scene;

use super::augment::{augment, Paraphraser, TemplateParaphraser};
use super::{write_bank, BankEntry, EntrySource};

pub const STARTER_BANK: &str = include_str!("../../data/starter_bank.jsonl");
pub const STARTER_ITERATIONS: usize = 2;
pub const STARTER_BRANCHING: usize = 2;

const SEEDS: &[(Family, &str)] = &[
    (Family::MathReasoning, "solve for x in 4 + x = 9"),
    (Family::MathReasoning, "solve the equation 12 × 3 ="),
    (Family::WordCorrection, "fix the word to spell ROBOT"),
    (Family::WordCorrection, "rearrange the letters to spell CAT"),
    (Family::ColorSort, "sort the cubes by color into their zones"),
    (Family::ColorSort, "group each cube with the other cubes of the same color"),
    (Family::IntentRecognition, "I'm allergic to spicy food but I have a sweet tooth"),
    (Family::IntentRecognition, "I am craving something sweet, and throw out whatever has expired"),
    (Family::PickColor, "pick up the red cube"),
    (Family::PickColor, "pick up the green cube"),
    (Family::PickPlaceBox, "pick the blue cube and place it in the left box"),
    (Family::PickPlaceBox, "pick the yellow cube and place it in the right box"),
    (Family::PickToyBox, "put the toy in the box"),
    (Family::PickToyBox, "put the toy into the box"),
    (Family::Rotate, "rotate the red bowl by 90 degrees clockwise"),
    (Family::Rotate, "rotate the blue cube by 45 degrees clockwise"),
    (Family::SimpleManipulation, "put the green cube into the red bowl"),
    (Family::SimpleManipulation, "put the yellow cube into the blue bowl"),
    (Family::Rearrange, "rearrange the scene so that the red cube is at (1,2)"),
    (Family::Rearrange, "rearrange the scene so that the blue toy is at (3,0) and the green bowl is at (5,5)"),
    (Family::VisualReasoningSquare, "place the red cube, the blue bowl, the green toy and the yellow cube on the corners of a square with side 2, clockwise from (1,1)"),
    (Family::VisualReasoningSquare, "place the blue cube, the red toy, the yellow bowl and the green cube on the corners of a square with side 1, clockwise from (4,3)"),
    (Family::StackOrder, "stack the red cube, the green cube and the blue cube from bottom to top"),
    (Family::StackOrder, "stack the yellow cube, the blue cube and the red cube from bottom to top"),
    (Family::StackTexture, "stack the objects that share the same texture"),
    (Family::StackTexture, "pile up the objects with matching textures"),
];

/// The hand-written seeds, two per family, labelled by family.
pub fn seed_entries() -> Vec<BankEntry> {
    SEEDS
        .iter()
        .enumerate()
        .map(|(i, (f, t))| BankEntry::new(i as u64, *t, f.system(), EntrySource::Seed))
        .collect()
}

/// Regenerates the starter bank file contents.
pub fn starter_bank_text() -> String {
    let a = augment(&seed_entries(), STARTER_ITERATIONS, &TemplateParaphraser::new(STARTER_BRANCHING), None)
        .expect("iterations > 0");
    let mut buf = Vec::new();
    write_bank(&mut buf, &EmbedderSpec::default(), &a.entries).expect("writing to memory");
    String::from_utf8(buf).expect("UTF-8")
}

/// Generator instructions and their template paraphrases, `per_family` for each family, none of
/// which appear in `bank_texts`.
pub fn heldout_set(per_family: usize, bank_texts: &BTreeSet<String>) -> Vec<(Family, String)> {
    let wide = TemplateParaphraser::new(usize::MAX);
    let mut out = Vec::new();
    for &family in Family::ALL {
        let mut used = BTreeSet::new();
        let mut i = 0u64;
        while used.len() < per_family && i < 50 * per_family as u64 {
            let (_, spec) = gen_scene(10_000 + i, family);
            let mut pool = vec![spec.instruction_text.clone()];
            for c in wide.paraphrase(&spec.instruction_text).expect("template rewrites are infallible") {
                pool.extend(wide.paraphrase(&c).expect("infallible"));
                pool.push(c);
            }
            let start = (i as usize * 7) % pool.len();
            let pick = (0..pool.len()).map(|j| &pool[(start + j) % pool.len()]).find(|t| !bank_texts.contains(*t) && !used.contains(*t));
            if let Some(t) = pick {
                used.insert(t.clone());
                out.push((family, t.clone()));
            }
            i += 1;
        }
    }
    out
}
