//! Grammar for plan step texts and their resolution to primitives plus a success predicate.
//!
//! ```text
//! step     := pick_put | pick | put | rotate
//! pick     := ("pick" | "grab" | "take") ["up"] ref [("at" | "from") cell]
//! pick_put := pick "and" verb "it" dest
//! put      := verb ("it" | ref ["from" cell]) dest
//! verb     := "put" | "place" | "move"
//! dest     := ("at" | "to") cell | "next" "to" ref | "on" ["top" "of"] ref | ("in" | "into" | "to") zone-words
//! ```

use std::fmt;
use std::num::NonZeroI32;

use serde::{Deserialize, Serialize};

use crate::model::{Cell, ObjectId, Predicate, PrimitiveAction, Scene};

use super::parser::{ParseError, Parser};
use super::phrase::{resolve_zone, GroundError, ObjectPhrase};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjRef {
    It,
    Phrase(ObjectPhrase),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dest {
    Cell { cell: Cell, z: Option<u32> },
    Zone(Vec<String>),
    NextTo(ObjectPhrase),
    On(ObjectPhrase),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepCommand {
    Pick { object: ObjectPhrase },
    Put { object: ObjRef, dest: Dest },
    PickPut { object: ObjectPhrase, dest: Dest },
    Rotate { object: ObjRef, degrees: NonZeroI32 },
}

impl fmt::Display for Dest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dest::Cell { cell, z: Some(z) } => write!(f, "at ({},{},{z})", cell.x, cell.y),
            Dest::Cell { cell, z: None } => write!(f, "at {cell}"),
            Dest::Zone(words) => write!(f, "in the {}", words.join(" ")),
            Dest::NextTo(p) => write!(f, "next to the {p}"),
            Dest::On(p) => write!(f, "on the {p}"),
        }
    }
}

pub fn parse_step(text: &str) -> Result<StepCommand, ParseError> {
    let mut p = Parser::new(text)?;
    let alternatives: [fn(&mut Parser) -> Option<StepCommand>; 4] = [pick_put, pick, put, rotate];
    for alt in alternatives {
        if let Some(cmd) = p.attempt(|p| {
            let cmd = alt(p)?;
            p.end().then_some(cmd)
        }) {
            return Ok(cmd);
        }
    }
    Err(p.error())
}

fn reference(p: &mut Parser, qualifiers: &[&'static str]) -> Option<ObjectPhrase> {
    p.attempt(|p| p.word("the").then_some(()));
    let mut phrase = p.object(true)?;
    if !qualifiers.is_empty() {
        if let Some(at) = p.attempt(|p| {
            p.any_word(qualifiers)?;
            p.coord()
        }) {
            phrase.at = Some(at);
        }
    }
    Some(phrase)
}

fn pick_head(p: &mut Parser) -> Option<ObjectPhrase> {
    p.any_word(&["pick", "grab", "take"])?;
    p.attempt(|p| p.word("up").then_some(()));
    reference(p, &["at", "from"])
}

fn pick(p: &mut Parser) -> Option<StepCommand> {
    pick_head(p).map(|object| StepCommand::Pick { object })
}

fn pick_put(p: &mut Parser) -> Option<StepCommand> {
    let object = pick_head(p)?;
    p.word("and").then_some(())?;
    p.any_word(&["put", "place", "move"])?;
    p.word("it").then_some(())?;
    let dest = dest(p)?;
    Some(StepCommand::PickPut { object, dest })
}

fn put(p: &mut Parser) -> Option<StepCommand> {
    p.any_word(&["put", "place", "move"])?;
    let object = match p.attempt(|p| p.word("it").then_some(())) {
        Some(()) => ObjRef::It,
        None => ObjRef::Phrase(reference(p, &["from"])?),
    };
    let dest = dest(p)?;
    Some(StepCommand::Put { object, dest })
}

fn rotate(p: &mut Parser) -> Option<StepCommand> {
    p.word("rotate").then_some(())?;
    let object = match p.attempt(|p| p.word("it").then_some(())) {
        Some(()) => ObjRef::It,
        None => ObjRef::Phrase(reference(p, &["at", "from"])?),
    };
    p.attempt(|p| p.word("by").then_some(()));
    let degrees = NonZeroI32::new(i32::try_from(p.int()?).ok()?)?;
    p.any_word(&["degrees", "degree"])?;
    p.attempt(|p| p.word("clockwise").then_some(()));
    Some(StepCommand::Rotate { object, degrees })
}

fn dest(p: &mut Parser) -> Option<Dest> {
    if let Some(d) = p.attempt(|p| {
        p.any_word(&["at", "to"])?;
        let (cell, z) = p.coord()?;
        Some(Dest::Cell { cell, z })
    }) {
        return Some(d);
    }
    if let Some(d) = p.attempt(|p| {
        (p.word("next") && p.word("to")).then_some(())?;
        reference(p, &["at", "from"]).map(Dest::NextTo)
    }) {
        return Some(d);
    }
    if let Some(d) = p.attempt(|p| {
        p.any_word(&["on", "onto"])?;
        p.attempt(|p| (p.word("top") && p.word("of")).then_some(()));
        reference(p, &["at", "from"]).map(Dest::On)
    }) {
        return Some(d);
    }
    p.attempt(|p| {
        p.any_word(&["in", "into", "to"])?;
        let words = p.trailing_words();
        if words.is_empty() || words == ["the"] {
            p.fail("a zone name");
            return None;
        }
        Some(Dest::Zone(words))
    })
}

/// A step grounded on a scene.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedStep {
    pub object: ObjectId,
    pub actions: Vec<PrimitiveAction>,
    pub predicate: Predicate,
}

enum Target {
    Cell { cell: Cell, z: Option<u32> },
    Zone { name: String, cell: Cell },
    NextTo(Cell),
    On { support: ObjectId, cell: Cell },
}

impl Target {
    fn cell(&self) -> Cell {
        match self {
            Target::Cell { cell, .. } | Target::Zone { cell, .. } | Target::NextTo(cell) | Target::On { cell, .. } => *cell,
        }
    }
}

/// Candidates in preference order: held first, then unburied, then ascending id.
fn pick_candidate(scene: &Scene, phrase: &ObjectPhrase, avoid: &[ObjectId]) -> Result<ObjectId, GroundError> {
    let mut c: Vec<_> = phrase.candidates(scene).into_iter().filter(|o| !avoid.contains(&o.id)).collect();
    c.sort_by_key(|o| (!scene.is_held(o.id), !scene.is_clear(o.id), o.id));
    c.first().map(|o| o.id).ok_or_else(|| GroundError::NoMatch(phrase.to_string()))
}

fn target(scene: &Scene, dest: &Dest) -> Result<Target, GroundError> {
    let t = match dest {
        Dest::Cell { cell, z } => Target::Cell { cell: *cell, z: *z },
        Dest::Zone(words) => {
            let name = resolve_zone(scene, words)?;
            let cell = scene.first_free_in_zone(&name).ok_or_else(|| GroundError::ZoneFull(name.clone()))?;
            Target::Zone { name, cell }
        }
        Dest::NextTo(p) => {
            let r = scene.object(pick_candidate(scene, p, &[])?).expect("grounded");
            Target::NextTo(Cell::new(r.cell.x + 1, r.cell.y))
        }
        Dest::On(p) => {
            let support = pick_candidate(scene, p, &[])?;
            Target::On { support, cell: scene.object(support).expect("grounded").cell }
        }
    };
    if !scene.in_bounds(t.cell()) {
        return Err(GroundError::OffTable(t.cell()));
    }
    Ok(t)
}

/// Grounds a moving phrase: when the destination lies in a named zone, objects already inside that
/// zone are passed over unless nothing else matches.
pub fn ground_mover(scene: &Scene, phrase: &ObjectPhrase, dest_cell: Cell, avoid: &[ObjectId]) -> Result<ObjectId, GroundError> {
    let zones: Vec<&str> = scene.zones_at(dest_cell).collect();
    if let Some(h) = scene.held.and_then(|h| scene.object(h)) {
        if phrase.matches(scene, h) && !avoid.contains(&h.id) {
            return Ok(h.id);
        }
    }
    if !zones.is_empty() {
        let mut outside: Vec<ObjectId> = phrase
            .candidates(scene)
            .into_iter()
            .filter(|o| !avoid.contains(&o.id) && !zones.iter().any(|z| scene.in_zone(o.id, z)))
            .map(|o| o.id)
            .collect();
        outside.sort_by_key(|id| (!scene.is_clear(*id), *id));
        if let Some(id) = outside.first() {
            return Ok(*id);
        }
    }
    pick_candidate(scene, phrase, avoid)
}

pub fn resolve_step(cmd: &StepCommand, scene: &Scene) -> Result<ResolvedStep, GroundError> {
    let held_or = |r: &ObjRef, f: &dyn Fn(&ObjectPhrase) -> Result<ObjectId, GroundError>| match r {
        ObjRef::It => scene.held.ok_or(GroundError::NotHolding),
        ObjRef::Phrase(p) => f(p),
    };
    match cmd {
        StepCommand::Pick { object } => {
            let id = pick_candidate(scene, object, &[])?;
            let actions = if scene.is_held(id) { vec![] } else { vec![PrimitiveAction::Pick { object: id }] };
            Ok(ResolvedStep { object: id, actions, predicate: Predicate::Held { object: id } })
        }
        StepCommand::Rotate { object, degrees } => {
            let id = held_or(object, &|p| pick_candidate(scene, p, &[]))?;
            let current = scene.object(id).expect("grounded").orientation_deg;
            let after = (i64::from(current) + i64::from(degrees.get())).rem_euclid(360) as u16;
            Ok(ResolvedStep {
                object: id,
                actions: vec![PrimitiveAction::Rotate { object: id, degrees: *degrees }],
                predicate: Predicate::Orientation { object: id, degrees: after },
            })
        }
        StepCommand::Put { object, dest } => {
            let t = target(scene, dest)?;
            let avoid: Vec<ObjectId> = match &t {
                Target::On { support, .. } => vec![*support],
                _ => vec![],
            };
            let id = held_or(object, &|p| ground_mover(scene, p, t.cell(), &avoid))?;
            Ok(place_step(scene, id, t))
        }
        StepCommand::PickPut { object, dest } => {
            let t = target(scene, dest)?;
            let avoid: Vec<ObjectId> = match &t {
                Target::On { support, .. } => vec![*support],
                _ => vec![],
            };
            let id = if object.at.is_some() {
                pick_candidate(scene, object, &avoid)?
            } else {
                ground_mover(scene, object, t.cell(), &avoid)?
            };
            Ok(place_step(scene, id, t))
        }
    }
}

fn place_step(scene: &Scene, id: ObjectId, t: Target) -> ResolvedStep {
    let cell = t.cell();
    let predicate = match t {
        Target::Cell { cell, z } => Predicate::ObjectAt { object: id, cell, z },
        Target::Zone { name, .. } => Predicate::InZone { object: id, zone: name },
        Target::NextTo(cell) => Predicate::ObjectAt { object: id, cell, z: None },
        Target::On { support, .. } => Predicate::On { object: id, support },
    };
    let mut actions = Vec::with_capacity(2);
    if !scene.is_held(id) {
        actions.push(PrimitiveAction::Pick { object: id });
    }
    actions.push(PrimitiveAction::Place { cell });
    ResolvedStep { object: id, actions, predicate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Color, Kind, Rect, SceneObject};
    use crate::sim::apply_all;

    fn icar() -> Scene {
        let mut s = Scene::new(8, 8)
            .with_zone("word_row", Rect::new(2, 3, 4, 1))
            .with_zone("blank_slot", Rect::new(2, 5, 1, 1));
        for (i, c) in "ICAR".chars().enumerate() {
            s.push(SceneObject::new(i as u32 + 1, Kind::LetterTile, Color::None, Cell::new(2 + i as u32, 3)).with_label(c));
        }
        s
    }

    #[test]
    fn parses_plan_phrasings() {
        let cases = [
            "pick the word 'A'",
            "place it in the empty space",
            "pick up the letter_tile 'A' at (4,3) and place it in the blank_slot",
            "move the letter 'R' next to the letter 'C'",
            "put the red cube at (1,2,0)",
            "put the red cube from (3,3) at (1,2)",
            "put the blue cube on top of the red cube.",
            "put the red food 'chili' in the far side of the table",
            "rotate the green bowl by 30 degrees clockwise",
        ];
        for c in cases {
            parse_step(c).unwrap_or_else(|e| panic!("{c}: {e}"));
        }
        assert!(parse_step("dance with the cube").is_err());
        assert!(parse_step("put the red cube").is_err());
        assert!(parse_step("put the red cube in the").is_err());
    }

    #[test]
    fn at_binds_to_destination_in_put() {
        let cmd = parse_step("put the red cube at (1,2,0)").unwrap();
        assert_eq!(
            cmd,
            StepCommand::Put {
                object: ObjRef::Phrase(ObjectPhrase::new(Some(Color::Red), Kind::Cube)),
                dest: Dest::Cell { cell: Cell::new(1, 2), z: Some(0) }
            }
        );
    }

    #[test]
    fn resolves_word_fix_sequence() {
        let mut s = icar();
        for (text, want) in [
            ("pick the word 'A'", Predicate::Held { object: ObjectId(3) }),
            ("place it in the empty space", Predicate::InZone { object: ObjectId(3), zone: "blank_slot".into() }),
            ("move the letter 'R' next to the letter 'C'", Predicate::ObjectAt { object: ObjectId(4), cell: Cell::new(4, 3), z: None }),
            ("put the letter_tile 'A' at (5,3,0)", Predicate::ObjectAt { object: ObjectId(3), cell: Cell::new(5, 3), z: Some(0) }),
        ] {
            let r = resolve_step(&parse_step(text).unwrap(), &s).unwrap();
            assert_eq!(r.predicate, want, "{text}");
            s = apply_all(&s, &r.actions).unwrap();
            assert!(r.predicate.holds(&s), "{text}");
        }
        assert_eq!(crate::model::read_zone(&s, "word_row").unwrap(), "ICRA");
    }

    #[test]
    fn zone_destination_skips_objects_already_inside() {
        let s = Scene::new(8, 8)
            .with_zone("red_zone", Rect::new(0, 0, 2, 2))
            .with_object(SceneObject::new(1, Kind::Cube, Color::Red, Cell::new(0, 0)))
            .with_object(SceneObject::new(2, Kind::Cube, Color::Red, Cell::new(5, 5)));
        let r = resolve_step(&parse_step("put the red cube at (0,1,0)").unwrap(), &s).unwrap();
        assert_eq!(r.object, ObjectId(2));
    }

    #[test]
    fn it_needs_a_held_object() {
        let r = resolve_step(&parse_step("place it at (1,1)").unwrap(), &icar());
        assert_eq!(r, Err(GroundError::NotHolding));
        let r = resolve_step(&parse_step("put the letter 'I' at (9,9)").unwrap(), &icar());
        assert_eq!(r, Err(GroundError::OffTable(Cell::new(9, 9))));
    }
}
