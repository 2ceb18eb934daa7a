use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Cell, Color, Kind, ObjectId, Scene, SceneObject};

/// A noun phrase naming scene objects: `[color] kind ['label'] [from (x,y[,z])]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectPhrase {
    pub color: Option<Color>,
    pub kind: Kind,
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<(Cell, Option<u32>)>,
}

impl ObjectPhrase {
    pub fn new(color: Option<Color>, kind: Kind) -> Self {
        ObjectPhrase { color, kind, label: None, at: None }
    }

    /// The unqualified phrase that names `o`, omitting `none` colors.
    pub fn describing(o: &SceneObject) -> Self {
        ObjectPhrase {
            color: (o.color != Color::None).then_some(o.color),
            kind: o.kind,
            label: (!o.label.is_empty()).then(|| o.label.clone()),
            at: None,
        }
    }

    pub fn from_cell(mut self, cell: Cell) -> Self {
        self.at = Some((cell, None));
        self
    }

    pub fn matches(&self, scene: &Scene, o: &SceneObject) -> bool {
        o.kind == self.kind
            && self.color.is_none_or(|c| c == o.color)
            && self.label.as_ref().is_none_or(|l| l.eq_ignore_ascii_case(&o.label))
            && self.at.is_none_or(|(cell, z)| !scene.is_held(o.id) && o.cell == cell && z.is_none_or(|z| o.z == z))
    }

    /// Matching objects in ascending id order.
    pub fn candidates<'s>(&self, scene: &'s Scene) -> Vec<&'s SceneObject> {
        scene.objects.iter().filter(|o| self.matches(scene, o)).collect()
    }

    /// Resolves to the lowest matching id.
    pub fn ground(&self, scene: &Scene) -> Result<ObjectId, GroundError> {
        self.candidates(scene).first().map(|o| o.id).ok_or_else(|| GroundError::NoMatch(self.to_string()))
    }
}

impl fmt::Display for ObjectPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.color {
            write!(f, "{c} ")?;
        }
        write!(f, "{}", self.kind)?;
        if let Some(l) = &self.label {
            write!(f, " '{l}'")?;
        }
        if let Some((cell, z)) = self.at {
            match z {
                Some(z) => write!(f, " from ({},{},{z})", cell.x, cell.y)?,
                None => write!(f, " from {cell}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GroundError {
    #[error("nothing matches `{0}`")]
    NoMatch(String),
    #[error("no zone called `{0}`")]
    NoSuchZone(String),
    #[error("zone `{0}` is full")]
    ZoneFull(String),
    #[error("`it` refers to nothing: the gripper is empty")]
    NotHolding,
    #[error("cell {0} is off the table")]
    OffTable(Cell),
}

/// Maps free-form zone words to a zone in the scene.
pub fn resolve_zone(scene: &Scene, words: &[String]) -> Result<String, GroundError> {
    let mut words: Vec<&str> = words.iter().map(String::as_str).collect();
    while words.first() == Some(&"the") {
        words.remove(0);
    }
    let joined = words.join(" ");
    let direct = joined.replace(' ', "_");
    if scene.zone(&direct).is_some() {
        return Ok(direct);
    }
    let alias = match joined.as_str() {
        "empty space" | "empty slot" | "blank" | "blank space" | "blank slot" | "space" | "gap" => "blank_slot",
        "far side" | "far side of the table" | "opposite side" | "opposite side of the table" | "far end" => {
            "far_zone"
        }
        "near side" | "near side of the table" | "near end" | "front" => "near_zone",
        "pool" | "tile pool" | "tiles" => "tile_pool",
        "trash" | "trash bin" | "bin" | "waste bin" => "bin",
        "word row" | "row" => "word_row",
        "equation" | "equation row" => "equation_row",
        _ => {
            let zone = words.iter().rev().skip_while(|w| **w == "zone" || **w == "area").collect::<Vec<_>>();
            match zone.as_slice() {
                [color] if matches!(**color, "red" | "green" | "blue" | "yellow") => {
                    let name = format!("{color}_zone");
                    return if scene.zone(&name).is_some() { Ok(name) } else { Err(GroundError::NoSuchZone(joined)) };
                }
                _ => return Err(GroundError::NoSuchZone(joined)),
            }
        }
    };
    if scene.zone(alias).is_some() {
        Ok(alias.to_string())
    } else {
        Err(GroundError::NoSuchZone(joined))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rect;

    fn scene() -> Scene {
        Scene::new(8, 8)
            .with_zone("blank_slot", Rect::new(1, 5, 1, 1))
            .with_zone("red_zone", Rect::new(0, 0, 2, 2))
            .with_object(SceneObject::new(4, Kind::Cube, Color::Red, Cell::new(3, 3)))
            .with_object(SceneObject::new(9, Kind::Cube, Color::Red, Cell::new(5, 3)))
            .with_object(SceneObject::new(5, Kind::LetterTile, Color::None, Cell::new(6, 6)).with_label("A"))
    }

    #[test]
    fn lowest_id_wins() {
        let p = ObjectPhrase::new(Some(Color::Red), Kind::Cube);
        assert_eq!(p.ground(&scene()).unwrap(), ObjectId(4));
        assert_eq!(p.clone().from_cell(Cell::new(5, 3)).ground(&scene()).unwrap(), ObjectId(9));
        let none = ObjectPhrase::new(Some(Color::Blue), Kind::Cube);
        assert_eq!(none.ground(&scene()), Err(GroundError::NoMatch("blue cube".into())));
    }

    #[test]
    fn labels_match_case_insensitively() {
        let mut p = ObjectPhrase::new(None, Kind::LetterTile);
        p.label = Some("a".into());
        assert_eq!(p.ground(&scene()).unwrap(), ObjectId(5));
        assert_eq!(ObjectPhrase::describing(scene().object(ObjectId(5)).unwrap()).to_string(), "letter_tile 'A'");
    }

    #[test]
    fn zone_aliases() {
        let w = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        let s = scene();
        assert_eq!(resolve_zone(&s, &w("the empty space")).unwrap(), "blank_slot");
        assert_eq!(resolve_zone(&s, &w("blank_slot")).unwrap(), "blank_slot");
        assert_eq!(resolve_zone(&s, &w("red zone")).unwrap(), "red_zone");
        assert_eq!(resolve_zone(&s, &w("red")).unwrap(), "red_zone");
        assert!(resolve_zone(&s, &w("far side of the table")).is_err());
        assert!(resolve_zone(&s, &w("moon")).is_err());
    }
}
