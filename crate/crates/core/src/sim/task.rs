use serde::{Deserialize, Serialize};

use crate::model::{Cell, Color, Family, ObjectId};

/// Family-specific goal payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Goal {
    /// `row` is the solved equation_row reading, e.g. `11×13=143`.
    Equation { equation: String, answer: i64, row: String },
    Word { target: String },
    ColorSort,
    Intent { sentence: String, attribute: String, zone: String },
    PickColor { color: Color },
    PickPlaceBox { color: Color, zone: String },
    PutInto { object: ObjectId, container: ObjectId },
    Rotate { object: ObjectId, orientation_deg: u16 },
    Rearrange { targets: Vec<(ObjectId, Cell)> },
    Square { objects: Vec<ObjectId>, anchor: Cell, side: u32 },
    StackOrder { order: Vec<ObjectId> },
    StackTexture { groups: Vec<Vec<ObjectId>> },
}

impl Goal {
    pub fn matches(&self, family: Family) -> bool {
        matches!(
            (family, self),
            (Family::MathReasoning, Goal::Equation { .. })
                | (Family::WordCorrection, Goal::Word { .. })
                | (Family::ColorSort, Goal::ColorSort)
                | (Family::IntentRecognition, Goal::Intent { .. })
                | (Family::PickColor, Goal::PickColor { .. })
                | (Family::PickPlaceBox, Goal::PickPlaceBox { .. })
                | (Family::PickToyBox, Goal::PutInto { .. })
                | (Family::SimpleManipulation, Goal::PutInto { .. })
                | (Family::Rotate, Goal::Rotate { .. })
                | (Family::Rearrange, Goal::Rearrange { .. })
                | (Family::VisualReasoningSquare, Goal::Square { .. })
                | (Family::StackOrder, Goal::StackOrder { .. })
                | (Family::StackTexture, Goal::StackTexture { .. })
        )
    }
}

/// Corners of an axis-aligned square, clockwise from the top-left anchor.
pub fn square_corners(anchor: Cell, side: u32) -> [Cell; 4] {
    [
        anchor,
        Cell::new(anchor.x + side, anchor.y),
        Cell::new(anchor.x + side, anchor.y + side),
        Cell::new(anchor.x, anchor.y + side),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub family: Family,
    pub goal: Goal,
    pub instruction_text: String,
}

impl TaskSpec {
    pub fn new(family: Family, goal: Goal, instruction_text: impl Into<String>) -> Self {
        debug_assert!(goal.matches(family));
        TaskSpec { family, goal, instruction_text: instruction_text.into() }
    }
}
