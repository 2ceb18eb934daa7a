//! The fast path: a strict instruction grammar, grounding against the scene, and action emission.
//! The grammar is published in `docs/fast_grammar.ebnf`.

pub(crate) mod lexer;
pub(crate) mod parser;
mod phrase;
pub mod step;

use std::fmt;
use std::num::NonZeroI32;

use serde::{Deserialize, Serialize};

use crate::model::{Color, Kind, ObjectId, PrimitiveAction, Scene};

pub use lexer::{lex, LexError, Tok, Token};
pub use parser::ParseError;
use parser::Parser;
pub use phrase::{resolve_zone, GroundError, ObjectPhrase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn zone(self) -> String {
        format!("{}_box", self.as_str())
    }
}

/// A container named by side (`left box` → zone `left_box`) or by object phrase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerPhrase {
    Side(Side),
    Object(ObjectPhrase),
}

impl fmt::Display for ContainerPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContainerPhrase::Side(s) => write!(f, "{} box", s.as_str()),
            ContainerPhrase::Object(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FastCommand {
    PickColorCube { color: Color },
    PickPlaceBox { color: Color, side: Side },
    PutInto { object: ObjectPhrase, container: ContainerPhrase },
    RotateBy { object: ObjectPhrase, degrees: NonZeroI32 },
}

impl FastCommand {
    /// Canonical surface form; `parse(render(c)) == c`.
    pub fn render(&self) -> String {
        match self {
            FastCommand::PickColorCube { color } => format!("pick up the {color} cube"),
            FastCommand::PickPlaceBox { color, side } => {
                format!("pick the {color} cube and place it in the {} box", side.as_str())
            }
            FastCommand::PutInto { object, container } => format!("put the {object} into the {container}"),
            FastCommand::RotateBy { object, degrees } => format!("rotate the {object} by {degrees} degrees clockwise"),
        }
    }
}

/// Parses a fast instruction. The whole input must match one production.
pub fn parse(text: &str) -> Result<FastCommand, ParseError> {
    let mut p = Parser::new(text)?;
    let alternatives: [fn(&mut Parser) -> Option<FastCommand>; 4] = [pick_place, pick_color, put_into, rotate];
    for alt in alternatives {
        if let Some(cmd) = p.attempt(|p| {
            p.attempt(|p| p.word("please").then_some(()));
            let cmd = alt(p)?;
            p.end().then_some(cmd)
        }) {
            return Ok(cmd);
        }
    }
    Err(p.error())
}

fn pick_color(p: &mut Parser) -> Option<FastCommand> {
    p.word("pick").then_some(())?;
    p.attempt(|p| p.word("up").then_some(()));
    p.attempt(|p| p.word("the").then_some(()));
    let color = p.color()?;
    p.word("cube").then_some(FastCommand::PickColorCube { color })
}

fn pick_place(p: &mut Parser) -> Option<FastCommand> {
    p.word("pick").then_some(())?;
    p.attempt(|p| p.word("the").then_some(()));
    let color = p.color()?;
    (p.word("cube") && p.word("and") && p.word("place")).then_some(())?;
    p.attempt(|p| p.word("it").then_some(()));
    p.any_word(&["in", "into"])?;
    p.word("the").then_some(())?;
    let side = match p.any_word(&["left", "right"])? {
        "left" => Side::Left,
        _ => Side::Right,
    };
    p.word("box").then_some(FastCommand::PickPlaceBox { color, side })
}

fn put_into(p: &mut Parser) -> Option<FastCommand> {
    (p.word("put") && p.word("the")).then_some(())?;
    let object = p.object(false)?;
    p.any_word(&["in", "into"])?;
    p.word("the").then_some(())?;
    let container = p
        .attempt(|p| {
            let side = match p.any_word(&["left", "right"])? {
                "left" => Side::Left,
                _ => Side::Right,
            };
            p.word("box").then_some(ContainerPhrase::Side(side))
        })
        .or_else(|| p.object(false).map(ContainerPhrase::Object))?;
    Some(FastCommand::PutInto { object, container })
}

fn rotate(p: &mut Parser) -> Option<FastCommand> {
    (p.word("rotate") && p.word("the")).then_some(())?;
    let object = p.object(false)?;
    p.attempt(|p| p.word("by").then_some(()));
    let n = p.int()?;
    let degrees = NonZeroI32::new(i32::try_from(n).ok()?).or_else(|| {
        p.fail("a nonzero number");
        None
    })?;
    p.any_word(&["degrees", "degree"])?;
    p.attempt(|p| p.word("clockwise").then_some(()));
    Some(FastCommand::RotateBy { object, degrees })
}

/// Resolved command operands.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grounding {
    pub object: ObjectId,
    pub container: Option<ContainerTarget>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerTarget {
    Zone(String),
    Object(ObjectId),
}

fn cube(color: Color) -> ObjectPhrase {
    ObjectPhrase::new(Some(color), Kind::Cube)
}

pub fn ground(cmd: &FastCommand, scene: &Scene) -> Result<Grounding, GroundError> {
    let container = |c: &ContainerPhrase| -> Result<ContainerTarget, GroundError> {
        match c {
            ContainerPhrase::Side(s) => {
                let zone = s.zone();
                scene.zone(&zone).ok_or_else(|| GroundError::NoSuchZone(zone.clone()))?;
                Ok(ContainerTarget::Zone(zone))
            }
            ContainerPhrase::Object(p) => {
                let zone = p.to_string().replace(' ', "_");
                if p.label.is_none() && scene.zone(&zone).is_some() {
                    return Ok(ContainerTarget::Zone(zone));
                }
                let id = p
                    .candidates(scene)
                    .into_iter()
                    .find(|o| o.kind.is_container() || o.kind.supports_stacking())
                    .map(|o| o.id)
                    .ok_or_else(|| GroundError::NoMatch(p.to_string()))?;
                Ok(ContainerTarget::Object(id))
            }
        }
    };
    Ok(match cmd {
        FastCommand::PickColorCube { color } => Grounding { object: cube(*color).ground(scene)?, container: None },
        FastCommand::PickPlaceBox { color, side } => Grounding {
            object: cube(*color).ground(scene)?,
            container: Some(container(&ContainerPhrase::Side(*side))?),
        },
        FastCommand::PutInto { object, container: c } => {
            Grounding { object: object.ground(scene)?, container: Some(container(c)?) }
        }
        FastCommand::RotateBy { object, .. } => Grounding { object: object.ground(scene)?, container: None },
    })
}

/// Primitive actions that carry out the command on the scene.
pub fn emit(cmd: &FastCommand, scene: &Scene) -> Result<Vec<PrimitiveAction>, GroundError> {
    let g = ground(cmd, scene)?;
    let pick = PrimitiveAction::Pick { object: g.object };
    Ok(match (cmd, g.container) {
        (FastCommand::RotateBy { degrees, .. }, _) => vec![PrimitiveAction::Rotate { object: g.object, degrees: *degrees }],
        (_, None) => vec![pick],
        (_, Some(ContainerTarget::Zone(zone))) => {
            let cell = scene.first_free_in_zone(&zone).ok_or(GroundError::ZoneFull(zone))?;
            vec![pick, PrimitiveAction::Place { cell }]
        }
        (_, Some(ContainerTarget::Object(id))) => {
            let target = scene.object(id).expect("grounded id exists");
            if scene.column_height(target.cell) >= crate::model::MAX_STACK_HEIGHT || !scene.is_clear(id) {
                return Err(GroundError::ZoneFull(ObjectPhrase::describing(target).to_string()));
            }
            vec![pick, PrimitiveAction::Place { cell: target.cell }]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cell, Rect, SceneObject};
    use crate::sim::{apply_all, check_success, gen_scene};
    use crate::model::Family;

    #[test]
    fn grammar_examples() {
        assert_eq!(parse("pick up the red cube").unwrap(), FastCommand::PickColorCube { color: Color::Red });
        assert_eq!(parse("Pick red cube.").unwrap(), FastCommand::PickColorCube { color: Color::Red });
        assert_eq!(
            parse("rotate the bowl by 30 degrees clockwise").unwrap(),
            FastCommand::RotateBy { object: ObjectPhrase::new(None, Kind::Bowl), degrees: NonZeroI32::new(30).unwrap() }
        );
        assert_eq!(
            parse("pick the blue cube and place it in the left box").unwrap(),
            FastCommand::PickPlaceBox { color: Color::Blue, side: Side::Left }
        );
        assert_eq!(
            parse("put the toy in the box").unwrap(),
            FastCommand::PutInto {
                object: ObjectPhrase::new(None, Kind::Toy),
                container: ContainerPhrase::Object(ObjectPhrase::new(None, Kind::Box))
            }
        );
    }

    #[test]
    fn rejects_partial_and_foreign_input() {
        assert!(parse("please do something").is_err());
        let e = parse("pick up the red cube now").unwrap_err();
        assert_eq!(e.position, 21);
        assert!(e.expected.contains("end of input"), "{e}");
        assert!(parse("rotate the bowl by 0 degrees").is_err());
        assert!(parse("").is_err());
        let e = parse("pick up the purple cube").unwrap_err();
        assert_eq!(e.position, 12);
    }

    #[test]
    fn render_round_trip() {
        for text in ["pick up the red cube", "put the toy in the box", "rotate the green bowl by -45 degrees", "put the red cube into the left box"] {
            let cmd = parse(text).unwrap();
            assert_eq!(parse(&cmd.render()).unwrap(), cmd, "{}", cmd.render());
        }
    }

    #[test]
    fn lowest_id_tie_break_and_no_match() {
        let s = Scene::new(8, 8)
            .with_object(SceneObject::new(4, Kind::Cube, Color::Red, Cell::new(1, 1)))
            .with_object(SceneObject::new(9, Kind::Cube, Color::Red, Cell::new(2, 2)));
        let g = ground(&FastCommand::PickColorCube { color: Color::Red }, &s).unwrap();
        assert_eq!(g.object, ObjectId(4));
        assert!(matches!(ground(&FastCommand::PickColorCube { color: Color::Blue }, &s), Err(GroundError::NoMatch(_))));
    }

    #[test]
    fn full_box_zone() {
        let mut s = Scene::new(8, 8).with_zone("left_box", Rect::new(0, 0, 1, 1));
        s.push(SceneObject::new(1, Kind::Cube, Color::Red, Cell::new(0, 0)));
        s.push(SceneObject::new(2, Kind::Cube, Color::Blue, Cell::new(4, 4)));
        let cmd = FastCommand::PickPlaceBox { color: Color::Blue, side: Side::Left };
        assert_eq!(emit(&cmd, &s), Err(GroundError::ZoneFull("left_box".into())));
    }

    #[test]
    fn seeded_fast_scenes_succeed() {
        for f in Family::ALL.iter().filter(|f| f.is_fast()) {
            for seed in 0..100 {
                let (scene, spec) = gen_scene(seed, *f);
                let cmd = parse(&spec.instruction_text).unwrap();
                let actions = emit(&cmd, &scene).unwrap();
                let end = apply_all(&scene, &actions).unwrap();
                assert!(check_success(&spec, &end), "{f} seed {seed}");
            }
        }
    }
}
