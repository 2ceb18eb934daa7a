//! Deterministic tabletop simulator: primitive actions, seeded scene generation and success checks.

pub(crate) mod gen;
mod success;
mod task;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{caption, Frame, PrimitiveAction, Scene, MAX_STACK_HEIGHT};

pub use gen::{gen_scene, gen_scene_named, gen_scene_sized, scene_for_equation, UnsupportedFamily, MIN_GRID};
pub use success::check_success;
pub use task::{square_corners, Goal, TaskSpec};

pub mod catalog {
    pub use super::gen::{FOOD_CATALOG, WORD_LIST};
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimErrorKind {
    NotHolding,
    AlreadyHolding,
    /// The target is buried under another object, or the destination column is full.
    CellOccupied,
    NoSuchObject,
    OutOfBounds,
    Unstackable,
}

impl fmt::Display for SimErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SimErrorKind::NotHolding => "not holding anything",
            SimErrorKind::AlreadyHolding => "already holding an object",
            SimErrorKind::CellOccupied => "cell occupied",
            SimErrorKind::NoSuchObject => "no such object",
            SimErrorKind::OutOfBounds => "out of bounds",
            SimErrorKind::Unstackable => "cannot stack there",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{action}: {kind}")]
pub struct SimError {
    pub kind: SimErrorKind,
    pub action: PrimitiveAction,
}

/// Applies one primitive to a scene, returning the successor. The input is never modified.
pub fn apply(scene: &Scene, action: PrimitiveAction) -> Result<Scene, SimError> {
    let fail = |kind| Err(SimError { kind, action });
    let mut next = scene.clone();
    match action {
        PrimitiveAction::Pick { object } => {
            if scene.object(object).is_none() {
                return fail(SimErrorKind::NoSuchObject);
            }
            if scene.held.is_some() {
                return fail(SimErrorKind::AlreadyHolding);
            }
            if !scene.is_clear(object) {
                return fail(SimErrorKind::CellOccupied);
            }
            next.held = Some(object);
        }
        PrimitiveAction::Place { cell } => {
            let Some(held) = scene.held else {
                return fail(SimErrorKind::NotHolding);
            };
            if !scene.in_bounds(cell) {
                return fail(SimErrorKind::OutOfBounds);
            }
            let height = scene.column_height(cell);
            if height >= MAX_STACK_HEIGHT {
                return fail(SimErrorKind::CellOccupied);
            }
            let kind = scene.object(held).map(|o| o.kind).ok_or(SimError { kind: SimErrorKind::NoSuchObject, action })?;
            if height > 0 {
                let below = scene.top_at(cell).map(|o| o.kind);
                if kind.must_rest_on_table() || below.is_some_and(|k| !k.supports_stacking()) {
                    return fail(SimErrorKind::Unstackable);
                }
            }
            let o = next.object_mut(held).expect("held object exists");
            o.cell = cell;
            o.z = height;
            next.held = None;
        }
        PrimitiveAction::Rotate { object, degrees } => {
            let Some(o) = next.object_mut(object) else {
                return fail(SimErrorKind::NoSuchObject);
            };
            o.orientation_deg = (i64::from(o.orientation_deg) + i64::from(degrees.get())).rem_euclid(360) as u16;
        }
    }
    Ok(next)
}

/// Applies actions in order, stopping at the first failure.
pub fn apply_all(scene: &Scene, actions: &[PrimitiveAction]) -> Result<Scene, SimError> {
    actions.iter().try_fold(scene.clone(), |s, a| apply(&s, *a))
}

/// Applies actions while captioning each observation. The last frame carries no action.
pub fn record(scene: &Scene, actions: &[PrimitiveAction]) -> Result<(Vec<Frame>, Scene), SimError> {
    let mut frames = Vec::with_capacity(actions.len() + 1);
    let mut s = scene.clone();
    for a in actions {
        let next = apply(&s, *a)?;
        frames.push(Frame { caption: caption(&s), action: Some(*a) });
        s = next;
    }
    frames.push(Frame { caption: caption(&s), action: None });
    Ok((frames, s))
}

#[cfg(test)]
mod tests {
    use std::num::NonZeroI32;

    use super::*;
    use crate::model::{Cell, Color, Kind, ObjectId, SceneObject};

    fn scene() -> Scene {
        Scene::new(8, 8)
            .with_object(SceneObject::new(1, Kind::Cube, Color::Red, Cell::new(0, 0)))
            .with_object(SceneObject::new(2, Kind::Toy, Color::Green, Cell::new(1, 0)))
            .with_object(SceneObject::new(3, Kind::Cube, Color::Blue, Cell::new(2, 2)))
            .with_object(SceneObject::new(4, Kind::Bowl, Color::Yellow, Cell::new(4, 4)))
    }

    fn pick(id: u32) -> PrimitiveAction {
        PrimitiveAction::Pick { object: ObjectId(id) }
    }

    fn place(x: u32, y: u32) -> PrimitiveAction {
        PrimitiveAction::Place { cell: Cell::new(x, y) }
    }

    fn kind_of(r: Result<Scene, SimError>) -> SimErrorKind {
        r.unwrap_err().kind
    }

    #[test]
    fn pick_then_place() {
        let s = apply_all(&scene(), &[pick(3), place(5, 5)]).unwrap();
        let o = s.object(ObjectId(3)).unwrap();
        assert_eq!((o.cell, o.z, s.held), (Cell::new(5, 5), 0, None));
    }

    #[test]
    fn input_is_untouched() {
        let s = scene();
        let before = s.clone();
        apply(&s, pick(1)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn double_pick_fails() {
        let s = apply(&scene(), pick(1)).unwrap();
        assert_eq!(kind_of(apply(&s, pick(3))), SimErrorKind::AlreadyHolding);
        assert_eq!(kind_of(apply(&scene(), place(1, 1))), SimErrorKind::NotHolding);
        assert_eq!(kind_of(apply(&scene(), pick(99))), SimErrorKind::NoSuchObject);
        assert_eq!(kind_of(apply(&s, place(8, 0))), SimErrorKind::OutOfBounds);
    }

    #[test]
    fn rotation_accumulates_mod_360() {
        let r = |d| PrimitiveAction::Rotate { object: ObjectId(4), degrees: NonZeroI32::new(d).unwrap() };
        let s = apply_all(&scene(), &[r(30), r(30)]).unwrap();
        assert_eq!(s.object(ObjectId(4)).unwrap().orientation_deg, 60);
        let s = apply_all(&s, &[r(-90)]).unwrap();
        assert_eq!(s.object(ObjectId(4)).unwrap().orientation_deg, 330);
    }

    #[test]
    fn stacking_rules() {
        let s = apply_all(&scene(), &[pick(3), place(0, 0)]).unwrap();
        assert_eq!(s.object(ObjectId(3)).unwrap().z, 1);
        assert_eq!(kind_of(apply(&s, pick(1))), SimErrorKind::CellOccupied);
        let onto_toy = apply_all(&scene(), &[pick(1), place(1, 0)]);
        assert_eq!(kind_of(onto_toy), SimErrorKind::Unstackable);
        let bowl_up = apply_all(&scene(), &[pick(4), place(0, 0)]);
        assert_eq!(kind_of(bowl_up), SimErrorKind::Unstackable);
        let into_bowl = apply_all(&scene(), &[pick(1), place(4, 4)]).unwrap();
        assert_eq!(into_bowl.object(ObjectId(1)).unwrap().z, 1);
    }

    #[test]
    fn column_limit() {
        let mut s = Scene::new(8, 8);
        for i in 0..5 {
            s.push(SceneObject::new(i + 1, Kind::Cube, Color::Red, Cell::new(i, 7)));
        }
        for i in 2..=4 {
            s = apply_all(&s, &[pick(i), place(0, 7)]).unwrap();
        }
        assert_eq!(s.column_height(Cell::new(0, 7)), 4);
        let full = apply_all(&s, &[pick(5), place(0, 7)]);
        assert_eq!(kind_of(full), SimErrorKind::CellOccupied);
    }
}
