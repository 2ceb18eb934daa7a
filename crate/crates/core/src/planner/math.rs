use crate::equation::{answer_labels, parse_equation, Equation, EquationError};
use crate::model::{read_zone, Cell, ObjectId, Plan, PlanSource, Scene};

use super::{Builder, PlanError};

const ROW: &str = "equation_row";
const POOL: &str = "tile_pool";

/// The longest whitespace-delimited suffix of `text` that parses as an equation.
pub(crate) fn find_equation(text: &str) -> Option<Equation> {
    let starts = std::iter::once(0).chain(text.char_indices().filter(|(_, c)| c.is_whitespace()).map(|(i, c)| i + c.len_utf8()));
    starts.filter_map(|i| parse_equation(&text[i..]).ok()).next()
}

fn equation_for(text: &str, scene: &Scene) -> Result<Equation, PlanError> {
    if let Some(eq) = find_equation(text) {
        return Ok(eq);
    }
    if let Some(eq) = read_zone(scene, ROW).and_then(|row| parse_equation(&row).ok()) {
        return Ok(eq);
    }
    let start = text.char_indices().find(|(_, c)| c.is_ascii_digit()).map_or(0, |(i, _)| i);
    let offset = text[..start].chars().count();
    match parse_equation(&text[start..]) {
        Err(EquationError::Ungrammatical { position, reason }) => {
            Err(PlanError::UngrammaticalEquation { position: offset + position, reason })
        }
        _ => Err(PlanError::UngrammaticalEquation { position: offset, reason: "no equation found".into() }),
    }
}

fn row_tile(scene: &Scene, label: &str) -> Option<ObjectId> {
    scene.placed().find(|o| o.label == label && (scene.zone(ROW).is_none() || scene.in_zone(o.id, ROW))).map(|o| o.id)
}

/// Places answer tiles for the equation in `text` (an instruction or a bare equation).
pub fn plan_math(text: &str, scene: &Scene) -> Result<Plan, PlanError> {
    let eq = equation_for(text, scene)?;
    let answer = eq.solve().map_err(|_| PlanError::NoIntegerSolution(eq.to_string()))?;
    let solved = eq.solved_row(answer);
    if read_zone(scene, ROW).is_some_and(|r| r == solved) {
        return Ok(Plan::empty(PlanSource::Oracle));
    }
    let labels = answer_labels(answer);
    let mut b = Builder::new(scene);
    let first: Cell = if eq.has_unknown() {
        let x = row_tile(scene, "x").ok_or_else(|| PlanError::EquationNotOnTable("no x tile in the row".into()))?;
        let cell = scene.object(x).expect("found").cell;
        b.pick(x)?;
        let park = b.scene.first_free_in_zone(POOL).ok_or_else(|| match scene.zone(POOL) {
            Some(_) => PlanError::ZoneFull(POOL.into()),
            None => PlanError::MissingZone(POOL.into()),
        })?;
        b.put(x, park)?;
        cell
    } else {
        let eq_tile = row_tile(scene, "=").ok_or_else(|| PlanError::EquationNotOnTable("no '=' tile in the row".into()))?;
        let c = scene.object(eq_tile).expect("found").cell;
        Cell::new(c.x + 1, c.y)
    };
    let mut used: Vec<ObjectId> = Vec::new();
    for (j, label) in labels.iter().enumerate() {
        let cell = Cell::new(first.x + j as u32, first.y);
        if !b.scene.in_bounds(cell) {
            return Err(PlanError::EquationNotOnTable(format!("answer cell {cell} is off the table")));
        }
        match b.scene.top_at(cell) {
            Some(o) if o.label == *label => continue,
            Some(o) => return Err(PlanError::EquationNotOnTable(format!("cell {cell} holds '{}'", o.label))),
            None => {}
        }
        let tile = b
            .scene
            .placed()
            .filter(|o| o.label == *label && !used.contains(&o.id) && !b.scene.in_zone(o.id, ROW))
            .min_by_key(|o| (!b.scene.is_clear(o.id), o.id))
            .map(|o| o.id)
            .ok_or_else(|| PlanError::MissingDigitTile(label.clone()))?;
        used.push(tile);
        b.put(tile, cell)?;
    }
    Ok(b.finish())
}
