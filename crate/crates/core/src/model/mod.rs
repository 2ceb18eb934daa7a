//! Shared domain types: scenes, objects, actions, plans and trajectories.

mod caption;
pub mod codec;
mod diff;
mod predicate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::num::NonZeroI32;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use caption::{
    caption, caption_clauses, object_clause, parse_caption, CaptionClause, CaptionError, CAPTION_GRAMMAR_VERSION,
};
pub use diff::{scene_diff, DiffError, Moved};
pub use predicate::{read_zone, Predicate};

/// Maximum number of objects in one column of the grid.
pub const MAX_STACK_HEIGHT: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Error returned when a closed-vocabulary name does not parse.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown {what} `{value}`")]
pub struct UnknownName {
    pub what: &'static str,
    pub value: String,
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownName;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownName { what: $what, value: s.to_string() }),
                }
            }
        }
    };
}

named_enum!(Kind, "object kind", {
    Cube => "cube",
    LetterTile => "letter_tile",
    DigitTile => "digit_tile",
    SymbolTile => "symbol_tile",
    Toy => "toy",
    Food => "food",
    Box => "box",
    Bowl => "bowl",
});

impl Kind {
    pub fn needs_label(self) -> bool {
        matches!(self, Kind::LetterTile | Kind::DigitTile | Kind::SymbolTile | Kind::Food)
    }

    pub fn is_container(self) -> bool {
        matches!(self, Kind::Box | Kind::Bowl)
    }

    /// Whether another object may rest on top of this one.
    pub fn supports_stacking(self) -> bool {
        !matches!(self, Kind::Toy | Kind::Food)
    }

    /// Containers only sit on the table surface.
    pub fn must_rest_on_table(self) -> bool {
        self.is_container()
    }
}

named_enum!(Color, "color", {
    Red => "red",
    Green => "green",
    Blue => "blue",
    Yellow => "yellow",
    None => "none",
});

impl Color {
    pub const PAINTED: [Color; 4] = [Color::Red, Color::Green, Color::Blue, Color::Yellow];
}

named_enum!(Texture, "texture", {
    Plain => "plain",
    Striped => "striped",
    Dotted => "dotted",
    Wooden => "wooden",
});

named_enum!(
    /// Which of the two processing systems an instruction is routed to.
    SystemLabel, "system label", {
    Fast => "FAST",
    Slow => "SLOW",
});

named_enum!(
    /// Task families. The names are a stable contract shared by config, CLI, API and reports.
    Family, "task family", {
    MathReasoning => "math_reasoning",
    WordCorrection => "word_correction",
    ColorSort => "color_sort",
    IntentRecognition => "intent_recognition",
    PickColor => "pick_color",
    PickPlaceBox => "pick_place_box",
    PickToyBox => "pick_toy_box",
    Rotate => "rotate",
    SimpleManipulation => "simple_manipulation",
    Rearrange => "rearrange",
    VisualReasoningSquare => "visual_reasoning_square",
    StackOrder => "stack_order",
    StackTexture => "stack_texture",
});

impl Family {
    /// The label an instruction of this family should be routed to.
    pub fn system(self) -> SystemLabel {
        match self {
            Family::PickColor | Family::PickPlaceBox | Family::PickToyBox | Family::Rotate | Family::SimpleManipulation => {
                SystemLabel::Fast
            }
            _ => SystemLabel::Slow,
        }
    }

    pub fn is_fast(self) -> bool {
        self.system() == SystemLabel::Fast
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: ObjectId,
    pub kind: Kind,
    pub color: Color,
    #[serde(default = "default_texture")]
    pub texture: Texture,
    #[serde(default)]
    pub label: String,
    pub cell: Cell,
    #[serde(default)]
    pub z: u32,
    #[serde(default)]
    pub orientation_deg: u16,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
}

fn default_texture() -> Texture {
    Texture::Plain
}

impl SceneObject {
    pub fn new(id: u32, kind: Kind, color: Color, cell: Cell) -> Self {
        SceneObject {
            id: ObjectId(id),
            kind,
            color,
            texture: Texture::Plain,
            label: String::new(),
            cell,
            z: 0,
            orientation_deg: 0,
            attributes: BTreeSet::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_texture(mut self, texture: Texture) -> Self {
        self.texture = texture;
        self
    }

    pub fn with_z(mut self, z: u32) -> Self {
        self.z = z;
        self
    }

    pub fn with_attribute(mut self, tag: impl Into<String>) -> Self {
        self.attributes.insert(tag.into());
        self
    }

    pub fn with_orientation(mut self, deg: u16) -> Self {
        self.orientation_deg = deg % 360;
        self
    }
}

/// Axis-aligned rectangle of grid cells, `w` columns by `h` rows starting at (x, y).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x >= self.x
            && cell.y >= self.y
            && cell.x < self.x.saturating_add(self.w)
            && cell.y < self.y.saturating_add(self.h)
    }

    /// Cells ordered leftmost first (by column, then row).
    pub fn cells_leftmost_first(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.x..self.x + self.w).flat_map(move |x| (self.y..self.y + self.h).map(move |y| Cell::new(x, y)))
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }
}

/// Violation of a scene invariant, with the offending field path.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid scene at `{path}`: {reason}")]
pub struct InvalidScene {
    pub path: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub held: Option<ObjectId>,
    #[serde(default)]
    pub zones: BTreeMap<String, Rect>,
}

impl Scene {
    pub fn new(width: u32, height: u32) -> Self {
        Scene { width, height, objects: Vec::new(), held: None, zones: BTreeMap::new() }
    }

    pub fn with_zone(mut self, name: impl Into<String>, rect: Rect) -> Self {
        self.zones.insert(name.into(), rect);
        self
    }

    /// Inserts an object, keeping `objects` ordered by id.
    pub fn push(&mut self, object: SceneObject) {
        let at = self.objects.partition_point(|o| o.id < object.id);
        self.objects.insert(at, object);
    }

    pub fn with_object(mut self, object: SceneObject) -> Self {
        self.push(object);
        self
    }

    pub fn next_id(&self) -> u32 {
        self.objects.last().map_or(1, |o| o.id.0 + 1)
    }

    pub fn object(&self, id: ObjectId) -> Option<&SceneObject> {
        self.objects.binary_search_by_key(&id, |o| o.id).ok().map(|i| &self.objects[i])
    }

    pub fn object_mut(&mut self, id: ObjectId) -> Option<&mut SceneObject> {
        match self.objects.binary_search_by_key(&id, |o| o.id) {
            Ok(i) => Some(&mut self.objects[i]),
            Err(_) => None,
        }
    }

    pub fn is_held(&self, id: ObjectId) -> bool {
        self.held == Some(id)
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Objects resting on the grid (everything except the held object).
    pub fn placed(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.iter().filter(move |o| self.held != Some(o.id))
    }

    /// Objects in the column at `cell`, bottom first.
    pub fn column(&self, cell: Cell) -> Vec<&SceneObject> {
        let mut column: Vec<_> = self.placed().filter(|o| o.cell == cell).collect();
        column.sort_by_key(|o| o.z);
        column
    }

    pub fn column_height(&self, cell: Cell) -> u32 {
        self.placed().filter(|o| o.cell == cell).count() as u32
    }

    pub fn top_at(&self, cell: Cell) -> Option<&SceneObject> {
        self.placed().filter(|o| o.cell == cell).max_by_key(|o| o.z)
    }

    pub fn occupant(&self, cell: Cell, z: u32) -> Option<&SceneObject> {
        self.placed().find(|o| o.cell == cell && o.z == z)
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.column_height(cell) == 0
    }

    /// True when nothing rests on top of the object.
    pub fn is_clear(&self, id: ObjectId) -> bool {
        match self.object(id) {
            Some(o) if !self.is_held(id) => self.occupant(o.cell, o.z + 1).is_none(),
            Some(_) => true,
            None => false,
        }
    }

    pub fn zone(&self, name: &str) -> Option<&Rect> {
        self.zones.get(name)
    }

    /// True when the object rests on the grid inside the named zone.
    pub fn in_zone(&self, id: ObjectId, zone: &str) -> bool {
        match (self.object(id), self.zone(zone)) {
            (Some(o), Some(rect)) => !self.is_held(id) && rect.contains(o.cell),
            _ => false,
        }
    }

    /// Names of the zones containing a cell.
    pub fn zones_at(&self, cell: Cell) -> impl Iterator<Item = &str> {
        self.zones.iter().filter(move |(_, r)| r.contains(cell)).map(|(n, _)| n.as_str())
    }

    /// First empty cell of a zone, scanning leftmost column first.
    pub fn first_free_in_zone(&self, zone: &str) -> Option<Cell> {
        let rect = self.zone(zone)?;
        rect.cells_leftmost_first().find(|&c| self.in_bounds(c) && self.is_free(c))
    }

    pub fn ids(&self) -> BTreeSet<ObjectId> {
        self.objects.iter().map(|o| o.id).collect()
    }

    /// Checks every scene and object invariant.
    pub fn validate(&self) -> Result<(), InvalidScene> {
        let bad = |path: String, reason: &str| Err(InvalidScene { path, reason: reason.to_string() });
        if self.width == 0 || self.height == 0 {
            return bad("width".into(), "grid dimensions must be positive");
        }
        for (name, rect) in &self.zones {
            if name.is_empty() {
                return bad("zones".into(), "zone names must be non-empty");
            }
            if rect.w == 0 || rect.h == 0 {
                return bad(format!("zones.{name}"), "zone must cover at least one cell");
            }
        }
        let mut seen = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            let path = |field: &str| format!("objects[{i}].{field}");
            if !seen.insert(o.id) {
                return bad(path("id"), "duplicate object id");
            }
            if i > 0 && self.objects[i - 1].id > o.id {
                return bad(path("id"), "objects must be ordered by id");
            }
            if o.kind.needs_label() == o.label.is_empty() {
                return bad(path("label"), "label must be set exactly for tiles and food");
            }
            if o.label.chars().any(|c| c == '\'' || c == ';' || c.is_control()) {
                return bad(path("label"), "label contains a reserved character");
            }
            if o.orientation_deg >= 360 {
                return bad(path("orientation_deg"), "orientation must lie in [0, 360)");
            }
            if o.attributes.iter().any(|a| a.is_empty()) {
                return bad(path("attributes"), "attribute tags must be non-empty");
            }
            if !self.in_bounds(o.cell) {
                return bad(path("cell"), "cell outside the grid");
            }
        }
        if let Some(held) = self.held {
            if self.object(held).is_none() {
                return bad("held".into(), "held object is not in the scene");
            }
        }
        let mut occupied = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            if self.is_held(o.id) {
                continue;
            }
            if o.z >= MAX_STACK_HEIGHT {
                return bad(format!("objects[{i}].z"), "stack level exceeds the maximum height");
            }
            if !occupied.insert((o.cell, o.z)) {
                return bad(format!("objects[{i}].cell"), "two objects share a cell and level");
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            if self.is_held(o.id) || o.z == 0 {
                continue;
            }
            match self.occupant(o.cell, o.z - 1) {
                None => return bad(format!("objects[{i}].z"), "object floats above an empty level"),
                Some(below) if !below.kind.supports_stacking() => {
                    return bad(format!("objects[{i}].z"), "object rests on an unstackable object")
                }
                Some(_) if o.kind.must_rest_on_table() => {
                    return bad(format!("objects[{i}].z"), "containers must rest on the table")
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub id: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("instruction text is empty")]
pub struct EmptyInstruction;

impl Instruction {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, EmptyInstruction> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(EmptyInstruction);
        }
        Ok(Instruction { id: id.into(), text })
    }
}

/// One gripper primitive. Rotation degrees are clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveAction {
    Pick { object: ObjectId },
    Place { cell: Cell },
    Rotate { object: ObjectId, degrees: NonZeroI32 },
}

impl fmt::Display for PrimitiveAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimitiveAction::Pick { object } => write!(f, "pick({object})"),
            PrimitiveAction::Place { cell } => write!(f, "place{cell}"),
            PrimitiveAction::Rotate { object, degrees } => write!(f, "rotate({object}, {degrees})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubGoal {
    pub index: usize,
    pub text: String,
    pub predicate: Predicate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    Oracle,
    Remote,
    Manual,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub steps: Vec<SubGoal>,
    pub source: PlanSource,
}

impl Plan {
    pub fn empty(source: PlanSource) -> Self {
        Plan { steps: Vec::new(), source }
    }

    /// Builds a plan from (text, predicate) pairs, numbering steps from zero.
    pub fn from_steps(source: PlanSource, steps: impl IntoIterator<Item = (String, Predicate)>) -> Self {
        let steps = steps
            .into_iter()
            .enumerate()
            .map(|(index, (text, predicate))| SubGoal { index, text, predicate })
            .collect();
        Plan { steps, source }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn indices_contiguous(&self) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| s.index == i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub caption: String,
    pub action: Option<PrimitiveAction>,
}

/// A recorded episode: one frame per observation, each with the action taken from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub id: String,
    pub family: String,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub instruction: String,
    pub frames: Vec<Frame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
}

impl Trajectory {
    pub fn actions(&self) -> impl Iterator<Item = PrimitiveAction> + '_ {
        self.frames.iter().filter_map(|f| f.action)
    }
}
