//! Canonical scene captioner and its inverse.
//!
//! Grammar (version 1):
//! `table <W>x<H>; ` followed by clauses `<color> <kind>[ '<label>'] at (x,y,z)[ held]`
//! sorted by object id and joined by `"; "`.

use super::{Cell, Color, Kind, Scene, SceneObject};

pub const CAPTION_GRAMMAR_VERSION: u32 = 1;

pub fn object_clause(scene: &Scene, o: &SceneObject) -> String {
    let mut s = String::with_capacity(32);
    s.push_str(o.color.as_str());
    s.push(' ');
    s.push_str(o.kind.as_str());
    if !o.label.is_empty() {
        s.push_str(" '");
        s.push_str(&o.label);
        s.push('\'');
    }
    s.push_str(&format!(" at ({},{},{})", o.cell.x, o.cell.y, o.z));
    if scene.is_held(o.id) {
        s.push_str(" held");
    }
    s
}

pub fn caption_clauses(scene: &Scene) -> Vec<String> {
    let mut objects: Vec<&SceneObject> = scene.objects.iter().collect();
    objects.sort_by_key(|o| o.id);
    objects.into_iter().map(|o| object_clause(scene, o)).collect()
}

pub fn caption(scene: &Scene) -> String {
    format!("table {}x{}; {}", scene.width, scene.height, caption_clauses(scene).join("; "))
}

/// One object as read back from a caption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaptionClause {
    pub color: Color,
    pub kind: Kind,
    pub label: String,
    pub cell: Cell,
    pub z: u32,
    pub held: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("malformed caption at byte {offset}: {reason}")]
pub struct CaptionError {
    pub offset: usize,
    pub reason: &'static str,
}

/// Parses a caption back into its header and clauses.
pub fn parse_caption(text: &str) -> Result<((u32, u32), Vec<CaptionClause>), CaptionError> {
    let err = |offset, reason| CaptionError { offset, reason };
    let rest = text.strip_prefix("table ").ok_or(err(0, "expected `table `"))?;
    let header_end = rest.find("; ").ok_or(err(6, "expected `; ` after the table size"))?;
    let (w, h) = rest[..header_end].split_once('x').ok_or(err(6, "expected `<W>x<H>`"))?;
    let dims = (parse_u32(w).ok_or(err(6, "bad width"))?, parse_u32(h).ok_or(err(6, "bad height"))?);
    let body_start = 6 + header_end + 2;
    let body = &text[body_start..];
    let mut clauses = Vec::new();
    if body.is_empty() {
        return Ok((dims, clauses));
    }
    let mut offset = body_start;
    for part in body.split("; ") {
        clauses.push(parse_clause(part).map_err(|reason| err(offset, reason))?);
        offset += part.len() + 2;
    }
    Ok((dims, clauses))
}

fn parse_u32(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    s.parse().ok()
}

fn parse_clause(part: &str) -> Result<CaptionClause, &'static str> {
    let (color, rest) = part.split_once(' ').ok_or("expected color")?;
    let color = color.parse::<Color>().map_err(|_| "unknown color")?;
    let (kind, mut rest) = rest.split_once(' ').ok_or("expected kind")?;
    let kind = kind.parse::<Kind>().map_err(|_| "unknown kind")?;
    let mut label = String::new();
    if let Some(quoted) = rest.strip_prefix('\'') {
        let end = quoted.find('\'').ok_or("unterminated label")?;
        label = quoted[..end].to_string();
        if label.is_empty() {
            return Err("empty label");
        }
        rest = quoted[end + 1..].strip_prefix(' ').ok_or("expected space after label")?;
    }
    let rest = rest.strip_prefix("at (").ok_or("expected `at (`")?;
    let close = rest.find(')').ok_or("expected `)`")?;
    let coords: Vec<_> = rest[..close].split(',').collect();
    let [x, y, z] = coords.as_slice() else {
        return Err("expected three coordinates");
    };
    let (x, y, z) = (
        parse_u32(x).ok_or("bad x")?,
        parse_u32(y).ok_or("bad y")?,
        parse_u32(z).ok_or("bad z")?,
    );
    let held = match &rest[close + 1..] {
        "" => false,
        " held" => true,
        _ => return Err("unexpected trailing text"),
    };
    Ok(CaptionClause { color, kind, label, cell: Cell::new(x, y), z, held })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjectId, Rect};

    #[test]
    fn empty_scene_caption() {
        assert_eq!(caption(&Scene::new(8, 8)), "table 8x8; ");
    }

    #[test]
    fn single_cube_caption() {
        let s = Scene::new(8, 8).with_object(SceneObject::new(1, Kind::Cube, Color::Red, Cell::new(2, 3)));
        assert_eq!(caption(&s), "table 8x8; red cube at (2,3,0)");
    }

    #[test]
    fn labels_and_held_flag() {
        let mut s = Scene::new(8, 8)
            .with_zone("word_row", Rect::new(2, 3, 4, 1))
            .with_object(SceneObject::new(2, Kind::LetterTile, Color::None, Cell::new(3, 3)).with_label("C"))
            .with_object(SceneObject::new(1, Kind::LetterTile, Color::None, Cell::new(2, 3)).with_label("I"));
        s.held = Some(ObjectId(2));
        assert_eq!(caption(&s), "table 8x8; none letter_tile 'I' at (2,3,0); none letter_tile 'C' at (3,3,0) held");
    }

    #[test]
    fn parse_inverts_caption() {
        let s = Scene::new(9, 8)
            .with_object(SceneObject::new(1, Kind::Food, Color::Red, Cell::new(0, 7)).with_label("chili"))
            .with_object(SceneObject::new(4, Kind::Cube, Color::Blue, Cell::new(8, 0)));
        let (dims, clauses) = parse_caption(&caption(&s)).unwrap();
        assert_eq!(dims, (9, 8));
        assert_eq!(clauses.len(), 2);
        assert_eq!(clauses[0].label, "chili");
        assert_eq!(clauses[1].cell, Cell::new(8, 0));
        assert!(parse_caption("table 8x8;").is_err());
        assert!(parse_caption("table 8x8; red cube at (1,2)").is_err());
        assert!(parse_caption("table 8x8; red cube at (01,2,0)").is_err());
    }
}
