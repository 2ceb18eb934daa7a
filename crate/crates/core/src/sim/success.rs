use crate::model::{Kind, Predicate, Scene};

use super::task::{square_corners, Goal, TaskSpec};

/// Judges whether the scene completes the task.
pub fn check_success(spec: &TaskSpec, scene: &Scene) -> bool {
    let settled = scene.held.is_none();
    match &spec.goal {
        Goal::PickColor { color } => scene
            .held
            .and_then(|id| scene.object(id))
            .is_some_and(|o| o.kind == Kind::Cube && o.color == *color),
        Goal::Equation { row, .. } => {
            settled && Predicate::LabelSequence { zone: "equation_row".into(), text: row.clone() }.holds(scene)
        }
        Goal::Word { target } => {
            settled
                && Predicate::LabelSequence { zone: "word_row".into(), text: target.clone() }.holds(scene)
                && scene.first_free_in_zone("blank_slot").is_some()
        }
        Goal::ColorSort => settled && Predicate::GroupedByColor.holds(scene),
        Goal::Intent { attribute, zone, .. } => {
            settled
                && scene
                    .objects
                    .iter()
                    .filter(|o| o.attributes.contains(attribute))
                    .all(|o| scene.in_zone(o.id, zone))
        }
        Goal::PickPlaceBox { color, zone } => {
            settled
                && scene
                    .objects
                    .iter()
                    .any(|o| o.kind == Kind::Cube && o.color == *color && scene.in_zone(o.id, zone))
        }
        Goal::PutInto { object, container } => {
            settled && Predicate::On { object: *object, support: *container }.holds(scene)
        }
        Goal::Rotate { object, orientation_deg } => {
            settled && Predicate::Orientation { object: *object, degrees: *orientation_deg }.holds(scene)
        }
        Goal::Rearrange { targets } => {
            settled
                && targets
                    .iter()
                    .all(|(id, cell)| Predicate::ObjectAt { object: *id, cell: *cell, z: None }.holds(scene))
        }
        Goal::Square { objects, anchor, side } => {
            settled
                && objects.len() == 4
                && objects.iter().zip(square_corners(*anchor, *side)).all(|(id, c)| {
                    Predicate::ObjectAt { object: *id, cell: c, z: None }.holds(scene)
                })
        }
        Goal::StackOrder { order } => settled && Predicate::StackedOrder { objects: order.clone() }.holds(scene),
        Goal::StackTexture { groups } => {
            settled
                && groups.iter().all(|g| {
                    let cells: Vec<_> = g.iter().filter_map(|id| scene.object(*id)).map(|o| o.cell).collect();
                    cells.len() == g.len() && cells.windows(2).all(|w| w[0] == w[1])
                })
        }
    }
}
