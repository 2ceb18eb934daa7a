//! Seeded scene generation, feasible by construction.

use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::fnv1a64;
use crate::equation::{answer_labels, Equation, EquationError, Op};
use crate::model::{Cell, Color, Family, Kind, ObjectId, Rect, Scene, SceneObject, Texture};

use super::task::{square_corners, Goal, TaskSpec};

/// Smallest grid side the generators lay out on.
pub const MIN_GRID: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unsupported task family `{0}`")]
pub struct UnsupportedFamily(pub String);

/// Target words for word correction; letters within a word are distinct.
pub const WORD_LIST: &[&str] = &[
    "ICRA", "ARM", "CUBE", "GRIP", "PLAN", "FAST", "SLOW", "WORD", "MIND", "BLOCK", "TASK", "HAND", "LIGHT",
    "PAINT", "CHAIR", "TABLE", "BOX", "TOY", "CUP", "BOWL",
];

/// Food items: label, color and attribute tags.
pub const FOOD_CATALOG: &[(&str, Color, &[&str])] = &[
    ("chili", Color::Red, &["spicy"]),
    ("jalapeno", Color::Green, &["spicy"]),
    ("wasabi", Color::Green, &["spicy"]),
    ("pepper", Color::Red, &["spicy"]),
    ("cake", Color::Yellow, &["sweet"]),
    ("candy", Color::Red, &["sweet"]),
    ("honey", Color::Yellow, &["sweet"]),
    ("cookie", Color::None, &["sweet"]),
    ("yogurt", Color::None, &["expired"]),
    ("cheese", Color::Yellow, &["expired"]),
    ("apple", Color::Red, &[]),
    ("bread", Color::Yellow, &[]),
    ("rice", Color::None, &[]),
];

/// Intent sentences the generator issues, with the attribute and zone they resolve to.
pub(crate) const INTENT_SCENARIOS: &[(&str, &str, &str)] = &[
    ("I'm allergic to spicy food", "spicy", "far_zone"),
    ("I can't handle spicy food, keep it away from me", "spicy", "far_zone"),
    ("I have a sweet tooth", "sweet", "near_zone"),
    ("I am craving something sweet", "sweet", "near_zone"),
    ("throw away anything that has expired", "expired", "bin"),
];

pub fn gen_scene(seed: u64, family: Family) -> (Scene, TaskSpec) {
    gen_scene_sized(seed, family, MIN_GRID, MIN_GRID)
}

pub fn gen_scene_named(seed: u64, family: &str) -> Result<(Scene, TaskSpec), UnsupportedFamily> {
    let family = Family::from_str(family).map_err(|_| UnsupportedFamily(family.to_string()))?;
    Ok(gen_scene(seed, family))
}

/// Generates a scene on a `width`×`height` grid; sides under [`MIN_GRID`] are enlarged.
pub fn gen_scene_sized(seed: u64, family: Family, width: u32, height: u32) -> (Scene, TaskSpec) {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(family.as_str().as_bytes())),
        scene: Scene::new(width.max(MIN_GRID), height.max(MIN_GRID)),
    };
    let (goal, text) = match family {
        Family::MathReasoning => return g.math(seed),
        Family::WordCorrection => g.word(),
        Family::ColorSort => g.color_sort(),
        Family::IntentRecognition => g.intent(),
        Family::PickColor => g.pick_color(),
        Family::PickPlaceBox => g.pick_place_box(),
        Family::PickToyBox => g.pick_toy_box(),
        Family::Rotate => g.rotate(),
        Family::SimpleManipulation => g.simple_manipulation(),
        Family::Rearrange => g.rearrange(),
        Family::VisualReasoningSquare => g.square(),
        Family::StackOrder => g.stack_order(),
        Family::StackTexture => g.stack_texture(),
    };
    debug_assert!(g.scene.validate().is_ok());
    (g.scene, TaskSpec::new(family, goal, text))
}

/// Lays out an equation on tiles, widening the grid when the row would not fit.
pub fn scene_for_equation(eq: &Equation, seed: u64, width: u32, height: u32) -> Result<(Scene, TaskSpec), EquationError> {
    let answer = eq.solve()?;
    let ans = answer_labels(answer);
    let tiles = eq.tiles();
    let reserved = if eq.has_unknown() { ans.len() - 1 } else { ans.len() };
    let row_len = tiles.len() as u32 + reserved as u32;
    let distractors = 3usize;
    let width = width.max(MIN_GRID).max(row_len + 2).max(((ans.len() + distractors + 2) as u32).div_ceil(2));
    let height = height.max(MIN_GRID);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(b"math_reasoning"));
    let mut scene = Scene::new(width, height)
        .with_zone("equation_row", Rect::new(0, 1, width, 1))
        .with_zone("tile_pool", Rect::new(0, height - 2, width, 2));
    let mut x = 1;
    for t in &tiles {
        scene.push(tile(scene.next_id(), t, Cell::new(x, 1)));
        x += 1;
        if t == "x" {
            x += reserved as u32;
        }
    }
    let mut pool: Vec<String> = ans.clone();
    for _ in 0..distractors {
        pool.push(rng.random_range(0..10u32).to_string());
    }
    pool.shuffle(&mut rng);
    let mut cells: Vec<Cell> = Rect::new(0, height - 2, width, 2).cells_leftmost_first().collect();
    cells.shuffle(&mut rng);
    for (label, cell) in pool.iter().zip(cells) {
        scene.push(tile(scene.next_id(), label, cell));
    }
    let text = if eq.has_unknown() { format!("solve for x in {eq}") } else { format!("solve the equation {eq}") };
    let goal = Goal::Equation { equation: eq.to_string(), answer, row: eq.solved_row(answer) };
    Ok((scene, TaskSpec::new(Family::MathReasoning, goal, text)))
}

fn tile(id: u32, label: &str, cell: Cell) -> SceneObject {
    let kind = if label.chars().all(|c| c.is_ascii_digit()) { Kind::DigitTile } else { Kind::SymbolTile };
    SceneObject::new(id, kind, Color::None, cell).with_label(label)
}

struct Gen {
    rng: ChaCha8Rng,
    scene: Scene,
}

impl Gen {
    fn w(&self) -> u32 {
        self.scene.width
    }

    fn h(&self) -> u32 {
        self.scene.height
    }

    /// Drops a new object on a random empty cell accepted by `allowed`.
    fn drop_object(&mut self, template: SceneObject, allowed: impl Fn(Cell) -> bool) -> ObjectId {
        let free: Vec<Cell> = (0..self.h())
            .flat_map(|y| (0..self.w()).map(move |x| Cell::new(x, y)))
            .filter(|&c| allowed(c) && self.scene.is_free(c))
            .collect();
        let cell = *free.choose(&mut self.rng).expect("generator layouts leave free cells");
        let id = self.scene.next_id();
        self.scene.push(SceneObject { id: ObjectId(id), cell, z: 0, ..template });
        ObjectId(id)
    }

    fn object(kind: Kind, color: Color) -> SceneObject {
        SceneObject::new(0, kind, color, Cell::new(0, 0))
    }

    fn painted(&mut self) -> Color {
        *Color::PAINTED.choose(&mut self.rng).expect("non-empty")
    }

    /// Distinct (color, kind) pairs drawn from `kinds`.
    fn distinct_phrases(&mut self, kinds: &[Kind], n: usize) -> Vec<(Color, Kind)> {
        let mut all: Vec<(Color, Kind)> =
            kinds.iter().flat_map(|k| Color::PAINTED.iter().map(move |c| (*c, *k))).collect();
        all.shuffle(&mut self.rng);
        all.truncate(n);
        all
    }

    fn math(&mut self, seed: u64) -> (Scene, TaskSpec) {
        let r = &mut self.rng;
        let eq = match r.random_range(0..8u32) {
            0..=3 => {
                let op = Op::ALL[r.random_range(0..4)];
                match op {
                    Op::Div => {
                        let b = r.random_range(1..=12);
                        Equation::Binary { a: b * r.random_range(0..=12), op, b }
                    }
                    _ => Equation::Binary { a: r.random_range(0..100), op, b: r.random_range(0..100) },
                }
            }
            4 => {
                let (a, x) = (r.random_range(0..=20), r.random_range(0..=20));
                Equation::AddX { a, c: a + x }
            }
            5 => {
                let (a, x) = (r.random_range(0..=20), r.random_range(0..=20));
                Equation::XAdd { a, c: a + x }
            }
            6 => {
                let a = r.random_range(0..=20);
                Equation::XSub { a, c: r.random_range(0..=20) }
            }
            _ => {
                let (a, x) = (r.random_range(1..=9), r.random_range(0..=12));
                Equation::MulX { a, c: a * x }
            }
        };
        scene_for_equation(&eq, seed, self.w(), self.h()).expect("generated equations are solvable")
    }

    fn word(&mut self) -> (Goal, String) {
        let target = *WORD_LIST.choose(&mut self.rng).expect("non-empty");
        let mut letters: Vec<char> = target.chars().collect();
        while letters.iter().collect::<String>() == target {
            letters.shuffle(&mut self.rng);
        }
        let n = letters.len() as u32;
        let x0 = (self.w() - n) / 2;
        self.scene = std::mem::replace(&mut self.scene, Scene::new(0, 0))
            .with_zone("word_row", Rect::new(x0, 3, n, 1))
            .with_zone("blank_slot", Rect::new(x0, 5, 1, 1));
        for (i, c) in letters.iter().enumerate() {
            let id = self.scene.next_id();
            self.scene.push(SceneObject::new(id, Kind::LetterTile, Color::None, Cell::new(x0 + i as u32, 3)).with_label(*c));
        }
        let text = match self.rng.random_range(0..2) {
            0 => format!("fix the word to spell {target}"),
            _ => format!("rearrange the letters to spell {target}"),
        };
        (Goal::Word { target: target.to_string() }, text)
    }

    fn color_sort(&mut self) -> (Goal, String) {
        let k = self.rng.random_range(2..=4);
        let mut colors = Color::PAINTED.to_vec();
        colors.shuffle(&mut self.rng);
        colors.truncate(k);
        colors.sort();
        for (i, c) in colors.iter().enumerate() {
            self.scene.zones.insert(format!("{c}_zone"), Rect::new(2 * i as u32, 0, 2, 2));
        }
        for c in &colors {
            for _ in 0..self.rng.random_range(1..=3) {
                self.drop_object(Self::object(Kind::Cube, *c), |cell| cell.y >= 3);
            }
        }
        let text = match self.rng.random_range(0..2) {
            0 => "group each cube with the other cubes of the same color",
            _ => "sort the cubes by color into their zones",
        };
        (Goal::ColorSort, text.to_string())
    }

    fn intent(&mut self) -> (Goal, String) {
        let (w, h) = (self.w(), self.h());
        self.scene.zones.insert("far_zone".into(), Rect::new(0, 0, w, 2));
        self.scene.zones.insert("near_zone".into(), Rect::new(0, h - 2, w, 2));
        self.scene.zones.insert("bin".into(), Rect::new(w - 1, 2, 1, h - 4));
        let (sentence, attribute, zone) = *INTENT_SCENARIOS.choose(&mut self.rng).expect("non-empty");
        let with = |tag: &str| -> Vec<usize> {
            (0..FOOD_CATALOG.len()).filter(|&i| FOOD_CATALOG[i].2.contains(&tag)).collect()
        };
        let plain: Vec<usize> = (0..FOOD_CATALOG.len()).filter(|&i| FOOD_CATALOG[i].2.is_empty()).collect();
        let mut chosen = Vec::new();
        for (pool, count) in [(with("spicy"), 1..=2), (with("sweet"), 1..=2), (with("expired"), 1..=2), (plain, 1..=2)] {
            let n = self.rng.random_range(count);
            chosen.extend(pool.choose_multiple(&mut self.rng, n).copied());
        }
        chosen.sort();
        for i in chosen {
            let (label, color, tags) = FOOD_CATALOG[i];
            let mut o = Self::object(Kind::Food, color).with_label(label);
            for t in tags {
                o = o.with_attribute(*t);
            }
            self.drop_object(o, |c| c.y >= 2 && c.y < h - 2 && c.x < w - 1);
        }
        let goal = Goal::Intent { sentence: sentence.into(), attribute: attribute.into(), zone: zone.into() };
        (goal, sentence.to_string())
    }

    fn pick_color(&mut self) -> (Goal, String) {
        let target = self.painted();
        self.drop_object(Self::object(Kind::Cube, target), |_| true);
        for _ in 0..self.rng.random_range(2..=5) {
            let c = self.painted();
            self.drop_object(Self::object(Kind::Cube, c), |_| true);
        }
        (Goal::PickColor { color: target }, format!("pick up the {target} cube"))
    }

    fn pick_place_box(&mut self) -> (Goal, String) {
        let w = self.w();
        self.scene.zones.insert("left_box".into(), Rect::new(0, 0, 2, 2));
        self.scene.zones.insert("right_box".into(), Rect::new(w - 2, 0, 2, 2));
        let target = self.painted();
        self.drop_object(Self::object(Kind::Cube, target), |c| c.y >= 2);
        for _ in 0..self.rng.random_range(1..=4) {
            let c = self.painted();
            self.drop_object(Self::object(Kind::Cube, c), |c| c.y >= 2);
        }
        let side = if self.rng.random_bool(0.5) { "left" } else { "right" };
        let goal = Goal::PickPlaceBox { color: target, zone: format!("{side}_box") };
        (goal, format!("pick the {target} cube and place it in the {side} box"))
    }

    fn pick_toy_box(&mut self) -> (Goal, String) {
        let (tc, bc) = (self.painted(), self.painted());
        let toy = self.drop_object(Self::object(Kind::Toy, tc), |_| true);
        let bx = self.drop_object(Self::object(Kind::Box, bc), |_| true);
        for _ in 0..self.rng.random_range(1..=3) {
            let c = self.painted();
            self.drop_object(Self::object(Kind::Cube, c), |_| true);
        }
        (Goal::PutInto { object: toy, container: bx }, "put the toy in the box".to_string())
    }

    fn simple_manipulation(&mut self) -> (Goal, String) {
        let mut cube_colors = Color::PAINTED.to_vec();
        cube_colors.shuffle(&mut self.rng);
        let mut bowl_colors = Color::PAINTED.to_vec();
        bowl_colors.shuffle(&mut self.rng);
        let cubes: Vec<ObjectId> = cube_colors[..self.rng.random_range(2..=3)]
            .iter()
            .map(|c| self.drop_object(Self::object(Kind::Cube, *c), |_| true))
            .collect();
        let bowls: Vec<ObjectId> = bowl_colors[..self.rng.random_range(1..=2)]
            .iter()
            .map(|c| self.drop_object(Self::object(Kind::Bowl, *c), |_| true))
            .collect();
        let cube = *cubes.choose(&mut self.rng).expect("non-empty");
        let bowl = *bowls.choose(&mut self.rng).expect("non-empty");
        let (cc, bc) = (self.scene.object(cube).unwrap().color, self.scene.object(bowl).unwrap().color);
        (Goal::PutInto { object: cube, container: bowl }, format!("put the {cc} cube into the {bc} bowl"))
    }

    fn rotate(&mut self) -> (Goal, String) {
        let n = self.rng.random_range(2..=4);
        let phrases = self.distinct_phrases(&[Kind::Cube, Kind::Bowl, Kind::Box, Kind::Toy], n);
        let mut ids = Vec::new();
        for (color, kind) in phrases {
            let deg = 15 * self.rng.random_range(0..24u16);
            ids.push(self.drop_object(Self::object(kind, color).with_orientation(deg), |_| true));
        }
        let id = *ids.choose(&mut self.rng).expect("non-empty");
        let degrees = *[15, 30, 45, 60, 90, 120, 180, 270].choose(&mut self.rng).expect("non-empty");
        let o = self.scene.object(id).expect("just placed");
        let orientation_deg = ((u32::from(o.orientation_deg) + degrees) % 360) as u16;
        let text = format!("rotate the {} {} by {degrees} degrees clockwise", o.color, o.kind);
        (Goal::Rotate { object: id, orientation_deg }, text)
    }

    fn rearrange(&mut self) -> (Goal, String) {
        let n = self.rng.random_range(3..=5);
        let phrases = self.distinct_phrases(&[Kind::Cube, Kind::Bowl, Kind::Toy], n);
        let ids: Vec<ObjectId> = phrases.iter().map(|(c, k)| self.drop_object(Self::object(*k, *c), |_| true)).collect();
        let m = self.rng.random_range(2..=n.min(4));
        let mut movers = ids.clone();
        movers.shuffle(&mut self.rng);
        movers.truncate(m);
        let mut targets: Vec<(ObjectId, Cell)> = Vec::new();
        let cell_of = |s: &Scene, id: ObjectId| s.object(id).unwrap().cell;
        if self.rng.random_bool(0.5) {
            let (a, b) = (movers[0], movers[1]);
            targets.push((a, cell_of(&self.scene, b)));
            targets.push((b, cell_of(&self.scene, a)));
        }
        for &id in &movers {
            if targets.iter().any(|(t, _)| *t == id) {
                continue;
            }
            let taken: Vec<Cell> = targets.iter().map(|(_, c)| *c).collect();
            let cell = loop {
                let c = Cell::new(self.rng.random_range(0..self.w()), self.rng.random_range(0..self.h()));
                if c != cell_of(&self.scene, id) && !taken.contains(&c) {
                    break c;
                }
            };
            targets.push((id, cell));
        }
        targets.sort();
        let clauses: Vec<String> = targets
            .iter()
            .map(|(id, c)| {
                let o = self.scene.object(*id).unwrap();
                format!("the {} {} is at ({},{})", o.color, o.kind, c.x, c.y)
            })
            .collect();
        let text = format!("rearrange the scene so that {}", english_list(&clauses));
        (Goal::Rearrange { targets }, text)
    }

    fn square(&mut self) -> (Goal, String) {
        let side = self.rng.random_range(1..=3);
        let anchor = Cell::new(self.rng.random_range(0..self.w() - side), self.rng.random_range(0..self.h() - side));
        let corners = square_corners(anchor, side);
        let extra = self.rng.random_range(0..=2);
        let phrases = self.distinct_phrases(&[Kind::Cube, Kind::Bowl, Kind::Toy], 4 + extra);
        let mut objects = Vec::new();
        for (i, (c, k)) in phrases.iter().enumerate() {
            let on_corner_ok = i >= 4 && self.rng.random_bool(0.5);
            let id = self.drop_object(Self::object(*k, *c), |cell| on_corner_ok || !corners.contains(&cell));
            if i < 4 {
                objects.push(id);
            }
        }
        let names: Vec<String> = objects
            .iter()
            .map(|id| {
                let o = self.scene.object(*id).unwrap();
                format!("the {} {}", o.color, o.kind)
            })
            .collect();
        let text = format!(
            "place {} on the corners of a square with side {side}, clockwise from ({},{})",
            english_list(&names),
            anchor.x,
            anchor.y
        );
        (Goal::Square { objects, anchor, side }, text)
    }

    fn stack_order(&mut self) -> (Goal, String) {
        let mut colors = Color::PAINTED.to_vec();
        colors.shuffle(&mut self.rng);
        let order: Vec<ObjectId> =
            colors[..3].iter().map(|c| self.drop_object(Self::object(Kind::Cube, *c), |_| true)).collect();
        if self.rng.random_bool(0.5) {
            let c = colors[3];
            self.drop_object(Self::object(Kind::Toy, c), |_| true);
        }
        let mut order = order;
        order.shuffle(&mut self.rng);
        let names: Vec<String> =
            order.iter().map(|id| format!("the {} cube", self.scene.object(*id).unwrap().color)).collect();
        let text = format!("stack {} from bottom to top", english_list(&names));
        (Goal::StackOrder { order }, text)
    }

    fn stack_texture(&mut self) -> (Goal, String) {
        let mut textures = Texture::ALL.to_vec();
        textures.shuffle(&mut self.rng);
        let mut sizes = vec![self.rng.random_range(2..=3), self.rng.random_range(2..=3)];
        if self.rng.random_bool(0.5) {
            sizes.push(1);
        }
        let total: usize = sizes.iter().sum();
        let mut colors = Color::PAINTED.to_vec();
        colors.shuffle(&mut self.rng);
        let mut letters: Vec<char> = "KMPQTVWZ".chars().collect();
        letters.shuffle(&mut self.rng);
        let mut templates: Vec<SceneObject> = Vec::new();
        let cubes = self.rng.random_range(2..=total.min(4));
        for c in colors.iter().take(cubes) {
            templates.push(Self::object(Kind::Cube, *c));
        }
        for l in letters.iter().take(total - cubes) {
            templates.push(Self::object(Kind::LetterTile, Color::None).with_label(*l));
        }
        templates.shuffle(&mut self.rng);
        let mut it = templates.into_iter();
        let mut groups = Vec::new();
        for (size, texture) in sizes.iter().zip(&textures) {
            let mut group = Vec::new();
            for _ in 0..*size {
                let t = it.next().expect("one template per slot").with_texture(*texture);
                group.push(self.drop_object(t, |_| true));
            }
            if group.len() > 1 {
                groups.push(group);
            }
        }
        let text = "stack the objects that share the same texture".to_string();
        (Goal::StackTexture { groups }, text)
    }
}

/// `a`, `a and b`, `a, b and c`.
pub(crate) fn english_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
