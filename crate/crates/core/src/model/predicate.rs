use serde::{Deserialize, Serialize};

use super::{Cell, Color, Kind, ObjectId, Scene};

/// Symbolic success test for one plan step. Evaluation never mutates the scene.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    Held { object: ObjectId },
    ObjectAt {
        object: ObjectId,
        cell: Cell,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z: Option<u32>,
    },
    InZone { object: ObjectId, zone: String },
    On { object: ObjectId, support: ObjectId },
    Orientation { object: ObjectId, degrees: u16 },
    /// Labels read left to right across a zone equal `text`; empty cells read as spaces and the
    /// reading is trimmed.
    LabelSequence { zone: String, text: String },
    StackedOrder { objects: Vec<ObjectId> },
    /// Every painted cube sits in the zone named `<color>_zone`.
    GroupedByColor,
}

impl Predicate {
    pub fn holds(&self, scene: &Scene) -> bool {
        match self {
            Predicate::Held { object } => scene.is_held(*object),
            Predicate::ObjectAt { object, cell, z } => match scene.object(*object) {
                Some(o) if !scene.is_held(o.id) => o.cell == *cell && z.is_none_or(|z| o.z == z),
                _ => false,
            },
            Predicate::InZone { object, zone } => scene.in_zone(*object, zone),
            Predicate::On { object, support } => match (scene.object(*object), scene.object(*support)) {
                (Some(o), Some(s)) if !scene.is_held(o.id) && !scene.is_held(s.id) => {
                    o.cell == s.cell && o.z == s.z + 1
                }
                _ => false,
            },
            Predicate::Orientation { object, degrees } => {
                scene.object(*object).is_some_and(|o| o.orientation_deg == degrees % 360)
            }
            Predicate::LabelSequence { zone, text } => read_zone(scene, zone).is_some_and(|r| r == *text),
            Predicate::StackedOrder { objects } => stacked_bottom_up(scene, objects),
            Predicate::GroupedByColor => scene
                .objects
                .iter()
                .filter(|o| o.kind == Kind::Cube && o.color != Color::None)
                .all(|o| scene.in_zone(o.id, &format!("{}_zone", o.color))),
        }
    }

    /// Object ids the predicate refers to.
    pub fn objects(&self) -> Vec<ObjectId> {
        match self {
            Predicate::Held { object }
            | Predicate::ObjectAt { object, .. }
            | Predicate::InZone { object, .. }
            | Predicate::Orientation { object, .. } => vec![*object],
            Predicate::On { object, support } => vec![*object, *support],
            Predicate::StackedOrder { objects } => objects.clone(),
            Predicate::LabelSequence { .. } | Predicate::GroupedByColor => Vec::new(),
        }
    }
}

/// Reads the top label of every cell in a zone, row by row, left to right.
pub fn read_zone(scene: &Scene, zone: &str) -> Option<String> {
    let rect = scene.zone(zone)?;
    let mut out = String::new();
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            match scene.top_at(Cell::new(x, y)) {
                Some(o) if !o.label.is_empty() => out.push_str(&o.label),
                Some(_) => out.push('?'),
                None => out.push(' '),
            }
        }
    }
    Some(out.trim().to_string())
}

fn stacked_bottom_up(scene: &Scene, objects: &[ObjectId]) -> bool {
    let Some(base) = objects.first().and_then(|id| scene.object(*id)) else {
        return false;
    };
    objects.iter().enumerate().all(|(level, id)| match scene.object(*id) {
        Some(o) => !scene.is_held(o.id) && o.cell == base.cell && o.z == level as u32,
        None => false,
    })
}
