use crate::model::{Cell, Plan, Scene};

use super::{Builder, PlanError};

/// Move one tile from slot `from` into the empty slot `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordMove {
    pub from: usize,
    pub to: usize,
}

/// Shortest move sequence turning `slots` into `target` followed by one empty slot.
///
/// `slots` has `target.len() + 1` entries with exactly one `None`; the last slot is the blank's home.
/// Each move carries a tile into the current blank. With repeated letters every assignment of tiles
/// to target positions is tried and the cheapest kept.
pub fn word_moves(slots: &[Option<char>], target: &[char]) -> Result<Vec<WordMove>, PlanError> {
    let n = target.len();
    let mismatch = || {
        let have: String = slots.iter().flatten().collect();
        PlanError::LetterMultisetMismatch { have, need: target.iter().collect() }
    };
    if slots.len() != n + 1 || slots.iter().filter(|s| s.is_none()).count() != 1 {
        return Err(mismatch());
    }
    let mut have: Vec<char> = slots.iter().flatten().copied().collect();
    let mut need = target.to_vec();
    have.sort_unstable();
    need.sort_unstable();
    if have != need {
        return Err(mismatch());
    }
    let mut best: Option<Vec<usize>> = None;
    let mut best_cost = usize::MAX;
    assignments(slots, target, &mut vec![None; n + 1], &mut vec![false; n], 0, &mut |home| {
        let c = cost(home);
        if c < best_cost {
            best_cost = c;
            best = Some(home.to_vec());
        }
    });
    Ok(execute(slots, best.expect("multisets agree, so an assignment exists")))
}

/// Enumerates `home[slot]` = target position of the tile in `slot` (the blank maps to `n`).
fn assignments(slots: &[Option<char>], target: &[char], home: &mut Vec<Option<usize>>, taken: &mut Vec<bool>, i: usize, f: &mut dyn FnMut(&[usize])) {
    if i == slots.len() {
        let h: Vec<usize> = home.iter().map(|h| h.expect("assigned")).collect();
        f(&h);
        return;
    }
    match slots[i] {
        None => {
            home[i] = Some(target.len());
            assignments(slots, target, home, taken, i + 1, f);
        }
        Some(c) => {
            let mut tried = Vec::new();
            for p in 0..target.len() {
                if taken[p] || target[p] != c {
                    continue;
                }
                if p == i {
                    tried.clear();
                    tried.push(p);
                    break;
                }
                tried.push(p);
            }
            for p in tried {
                taken[p] = true;
                home[i] = Some(p);
                assignments(slots, target, home, taken, i + 1, f);
                taken[p] = false;
            }
            home[i] = None;
        }
    }
}

/// Misplaced tiles plus one per cycle that avoids the blank.
fn cost(home: &[usize]) -> usize {
    let n = home.len();
    let blank = n - 1;
    let mut seen = vec![false; n];
    let mut total = 0;
    for start in 0..n {
        if seen[start] || home[start] == start {
            continue;
        }
        let mut len = 0;
        let mut has_blank = false;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            has_blank |= home[i] == blank;
            len += 1;
            i = home[i];
        }
        total += if has_blank { len - 1 } else { len + 1 };
    }
    total
}

fn execute(slots: &[Option<char>], home: Vec<usize>) -> Vec<WordMove> {
    let n = slots.len();
    let blank_home = n - 1;
    // at[s]: home of the tile in slot s
    let mut at: Vec<Option<usize>> = (0..n).map(|s| slots[s].map(|_| home[s])).collect();
    let mut blank = slots.iter().position(Option::is_none).expect("one blank");
    let mut out = Vec::new();
    loop {
        let from = if blank != blank_home {
            at.iter().position(|h| *h == Some(blank)).expect("tile for every home")
        } else {
            match (0..n).find(|&s| at[s].is_some_and(|h| h != s)) {
                Some(s) => s,
                None => return out,
            }
        };
        at[blank] = at[from].take();
        out.push(WordMove { from, to: blank });
        blank = from;
    }
}

/// Plans for `spell <WORD>` instructions on a scene with `word_row` and `blank_slot` zones.
pub(crate) fn plan_word_instruction(text: &str, scene: &Scene) -> Result<Plan, PlanError> {
    let target = text
        .split_whitespace()
        .skip_while(|w| !w.eq_ignore_ascii_case("spell"))
        .nth(1)
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_uppercase())
        .filter(|w| !w.is_empty())
        .ok_or_else(|| PlanError::UnrecognizedTask(text.to_string()))?;
    plan_word(scene, &target)
}

/// Fixes the tiles in `word_row` so they read `target`, using the single `blank_slot` cell.
pub fn plan_word(scene: &Scene, target: &str) -> Result<Plan, PlanError> {
    let row = *scene.zone("word_row").ok_or_else(|| PlanError::MissingZone("word_row".into()))?;
    let blank = *scene.zone("blank_slot").ok_or_else(|| PlanError::MissingZone("blank_slot".into()))?;
    let mut cells: Vec<_> = (row.y..row.y + row.h).flat_map(|y| (row.x..row.x + row.w).map(move |x| Cell::new(x, y))).collect();
    if blank.area() != 1 {
        return Err(PlanError::GoalInfeasible("blank_slot must be a single cell".into()));
    }
    cells.push(Cell::new(blank.x, blank.y));
    let target: Vec<char> = target.chars().flat_map(char::to_uppercase).collect();
    let occupants: Vec<_> = cells.iter().map(|c| scene.top_at(*c)).collect();
    let slots: Vec<Option<char>> = occupants
        .iter()
        .map(|o| o.and_then(|o| o.label.chars().next()).map(|c| c.to_ascii_uppercase()))
        .collect();
    if occupants.iter().flatten().any(|o| o.label.chars().count() != 1) {
        return Err(PlanError::LetterMultisetMismatch {
            have: occupants.iter().flatten().map(|o| o.label.as_str()).collect(),
            need: target.iter().collect(),
        });
    }
    let moves = word_moves(&slots, &target)?;
    let mut b = Builder::new(scene);
    let mut ids: Vec<_> = occupants.iter().map(|o| o.map(|o| o.id)).collect();
    for m in moves {
        let id = ids[m.from].take().expect("move starts at a tile");
        b.put(id, cells[m.to])?;
        ids[m.to] = Some(id);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Color, Kind, Rect, SceneObject};
    use crate::planner::tests::execute;
    use crate::model::read_zone;
    use std::collections::{HashMap, VecDeque};

    fn slots(word: &str) -> Vec<Option<char>> {
        word.chars().map(|c| (c != '_').then_some(c)).collect()
    }

    fn apply(s: &[Option<char>], m: WordMove) -> Vec<Option<char>> {
        assert!(s[m.to].is_none() && s[m.from].is_some());
        let mut t = s.to_vec();
        t.swap(m.from, m.to);
        t
    }

    /// Distance to the goal from every reachable arrangement.
    fn bfs(target: &[char]) -> HashMap<Vec<Option<char>>, usize> {
        let mut goal: Vec<Option<char>> = target.iter().map(|c| Some(*c)).collect();
        goal.push(None);
        let mut dist = HashMap::from([(goal.clone(), 0)]);
        let mut q = VecDeque::from([goal]);
        while let Some(s) = q.pop_front() {
            let d = dist[&s];
            let blank = s.iter().position(Option::is_none).unwrap();
            for from in 0..s.len() {
                if from != blank {
                    let t = apply(&s, WordMove { from, to: blank });
                    dist.entry(t.clone()).or_insert_with(|| {
                        q.push_back(t);
                        d + 1
                    });
                }
            }
        }
        dist
    }

    #[test]
    fn icar_to_icra_takes_three_moves() {
        let moves = word_moves(&slots("ICAR_"), &['I', 'C', 'R', 'A']).unwrap();
        assert_eq!(moves, [WordMove { from: 2, to: 4 }, WordMove { from: 3, to: 2 }, WordMove { from: 4, to: 3 }]);
    }

    #[test]
    fn identity_and_mismatch() {
        assert!(word_moves(&slots("ARM_"), &['A', 'R', 'M']).unwrap().is_empty());
        assert!(matches!(word_moves(&slots("ARX_"), &['A', 'R', 'M']), Err(PlanError::LetterMultisetMismatch { .. })));
        assert!(matches!(word_moves(&slots("ARM"), &['A', 'R', 'M']), Err(PlanError::LetterMultisetMismatch { .. })));
    }

    #[test]
    fn matches_bfs_on_every_arrangement() {
        for word in ["ICRA", "ABCDE", "AAB", "ABAB", "LEVEL", "Z"] {
            let target: Vec<char> = word.chars().collect();
            let dist = bfs(&target);
            for (state, d) in &dist {
                let moves = word_moves(state, &target).unwrap();
                assert_eq!(moves.len(), *d, "{word} from {state:?}");
                let mut s = state.clone();
                for m in moves {
                    s = apply(&s, m);
                }
                assert_eq!(dist[&s], 0);
            }
        }
    }

    #[test]
    fn scene_plan_reads_target() {
        let mut scene = Scene::new(8, 8).with_zone("word_row", Rect::new(2, 3, 4, 1)).with_zone("blank_slot", Rect::new(2, 5, 1, 1));
        for (i, c) in "ICAR".chars().enumerate() {
            scene.push(SceneObject::new(i as u32 + 1, Kind::LetterTile, Color::None, Cell::new(2 + i as u32, 3)).with_label(c));
        }
        let plan = plan_word(&scene, "ICRA").unwrap();
        let texts: Vec<&str> = plan.steps.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(
            texts,
            ["put the letter_tile 'A' at (2,5,0)", "put the letter_tile 'R' at (4,3,0)", "put the letter_tile 'A' at (5,3,0)"]
        );
        assert_eq!(read_zone(&execute(&plan, &scene), "word_row").unwrap(), "ICRA");
    }

    #[test]
    fn repeated_letters_get_qualified() {
        let mut scene = Scene::new(8, 8).with_zone("word_row", Rect::new(0, 3, 4, 1)).with_zone("blank_slot", Rect::new(0, 5, 1, 1));
        for (i, c) in "BAAB".chars().enumerate() {
            scene.push(SceneObject::new(i as u32 + 1, Kind::LetterTile, Color::None, Cell::new(i as u32, 3)).with_label(c));
        }
        let plan = plan_word(&scene, "ABAB").unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(read_zone(&execute(&plan, &scene), "word_row").unwrap(), "ABAB");
    }
}
