use std::collections::BTreeMap;

use crate::fast::parser::Parser;
use crate::fast::ObjectPhrase;
use crate::model::{Cell, ObjectId, Plan, Scene};
use crate::sim::square_corners;

use super::{Builder, PlanError};

fn ground(scene: &Scene, phrase: &ObjectPhrase) -> Result<ObjectId, PlanError> {
    phrase.ground(scene).map_err(|e| PlanError::GoalInfeasible(e.to_string()))
}

fn phrase_list(p: &mut Parser) -> Option<Vec<ObjectPhrase>> {
    let mut out = Vec::new();
    loop {
        p.attempt(|p| p.word("the").then_some(()));
        out.push(p.object(true)?);
        if !p.sep() {
            return Some(out);
        }
    }
}

fn unparsed(text: &str) -> PlanError {
    PlanError::UnrecognizedTask(text.to_string())
}

/// `... so that the <obj> is at (x,y), ... and the <obj> is at (x,y)`
fn rearrange_targets(text: &str, scene: &Scene) -> Result<Vec<(ObjectId, Cell)>, PlanError> {
    let mut p = Parser::new(text).map_err(|_| unparsed(text))?;
    let parsed = p.skip_past("that").then(|| {
        let mut out = Vec::new();
        loop {
            p.attempt(|p| p.word("the").then_some(()));
            let obj = p.object(true)?;
            (p.word("is") && p.word("at")).then_some(())?;
            out.push((obj, p.coord()?.0));
            if !p.sep() {
                break;
            }
        }
        p.end().then_some(out)
    });
    let parsed = parsed.flatten().ok_or_else(|| unparsed(text))?;
    parsed.iter().map(|(phrase, cell)| Ok((ground(scene, phrase)?, *cell))).collect()
}

pub(crate) fn plan_rearrange(text: &str, scene: &Scene) -> Result<Plan, PlanError> {
    let targets = rearrange_targets(text, scene)?;
    let mut b = Builder::new(scene);
    place_all(&mut b, &targets)?;
    Ok(b.finish())
}

/// `place A, B, C and D on the corners of a square with side S, clockwise from (x,y)`
pub(crate) fn plan_square(text: &str, scene: &Scene) -> Result<Plan, PlanError> {
    let mut p = Parser::new(text).map_err(|_| unparsed(text))?;
    let parsed = p.skip_past("place").then(|| {
        let objects = phrase_list(&mut p)?;
        p.skip_past("side").then_some(())?;
        let side = u32::try_from(p.int()?).ok()?;
        p.skip_past("from").then_some(())?;
        let anchor = p.coord()?.0;
        p.end().then_some((objects, side, anchor))
    });
    let (objects, side, anchor) = parsed.flatten().ok_or_else(|| unparsed(text))?;
    if objects.len() != 4 || side == 0 {
        return Err(PlanError::GoalInfeasible("a square needs four objects and a positive side".into()));
    }
    let ids = objects.iter().map(|o| ground(scene, o)).collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<(ObjectId, Cell)> = ids.into_iter().zip(square_corners(anchor, side)).collect();
    let mut b = Builder::new(scene);
    place_all(&mut b, &targets)?;
    Ok(b.finish())
}

/// `stack A, B and C from bottom to top` (or `from top to bottom`)
pub(crate) fn plan_stack_order(text: &str, scene: &Scene) -> Result<Plan, PlanError> {
    let mut p = Parser::new(text).map_err(|_| unparsed(text))?;
    let parsed = p.skip_past("stack").then(|| {
        let objects = phrase_list(&mut p)?;
        let top_down = p
            .attempt(|p| {
                p.word("from").then_some(())?;
                let first = p.any_word(&["bottom", "top"])?;
                (p.word("to") && p.any_word(&["top", "bottom"]).is_some()).then_some(first == "top")
            })
            .unwrap_or(false);
        p.end().then_some((objects, top_down))
    });
    let (objects, top_down) = parsed.flatten().ok_or_else(|| unparsed(text))?;
    let mut order = objects.iter().map(|o| ground(scene, o)).collect::<Result<Vec<_>, _>>()?;
    if top_down {
        order.reverse();
    }
    let mut b = Builder::new(scene);
    stack(&mut b, &order, &[])?;
    Ok(b.finish())
}

/// Stacks each group of two or more objects sharing a texture onto its lowest id.
pub(crate) fn plan_stack_texture(scene: &Scene) -> Result<Plan, PlanError> {
    let mut groups: BTreeMap<_, Vec<ObjectId>> = BTreeMap::new();
    for o in &scene.objects {
        groups.entry(o.texture).or_default().push(o.id);
    }
    let groups: Vec<Vec<ObjectId>> = groups.into_values().filter(|g| g.len() > 1).collect();
    let mut b = Builder::new(scene);
    let bases: Vec<Cell> = groups.iter().filter_map(|g| scene.object(g[0])).map(|o| o.cell).collect();
    for g in &groups {
        stack(&mut b, g, &bases)?;
    }
    Ok(b.finish())
}

fn exists(b: &Builder, id: ObjectId) -> Result<&crate::model::SceneObject, PlanError> {
    b.scene.object(id).ok_or_else(|| PlanError::GoalInfeasible(format!("object {id} is missing")))
}

/// Builds `order[0]` (bottom, table level) up to `order[last]` in one column.
fn stack(b: &mut Builder, order: &[ObjectId], reserved: &[Cell]) -> Result<(), PlanError> {
    let Some(&base) = order.first() else { return Ok(()) };
    if order.len() > crate::model::MAX_STACK_HEIGHT as usize {
        return Err(PlanError::GoalInfeasible(format!("{} objects exceed the stack height limit", order.len())));
    }
    if exists(b, base)?.z != 0 || b.scene.is_held(base) {
        b.uncover(base, reserved)?;
        let cell = b.buffer_cell(reserved)?;
        b.put(base, cell)?;
    }
    let cell = exists(b, base)?.cell;
    let mut keep = reserved.to_vec();
    keep.push(cell);
    for (level, &id) in order.iter().enumerate().skip(1) {
        let level = level as u32;
        exists(b, id)?;
        if b.scene.occupant(cell, level).is_some_and(|o| o.id == id) {
            continue;
        }
        b.clear_above(cell, level, &keep)?;
        b.uncover(id, &keep)?;
        if !b.can_place(id, cell) {
            return Err(PlanError::GoalInfeasible(format!("object {id} cannot rest on the stack at {cell}")));
        }
        b.put(id, cell)?;
    }
    Ok(())
}

/// Places each object on its target cell, routing blockers through buffer cells.
fn place_all(b: &mut Builder, targets: &[(ObjectId, Cell)]) -> Result<(), PlanError> {
    let reserved: Vec<Cell> = targets.iter().map(|t| t.1).collect();
    for (id, cell) in targets {
        b.scene.object(*id).ok_or_else(|| PlanError::GoalInfeasible(format!("object {id} is missing")))?;
        if !b.scene.in_bounds(*cell) {
            return Err(PlanError::GoalInfeasible(format!("target {cell} is off the table")));
        }
    }
    let budget = 4 * (targets.len() + b.scene.objects.len()) + 8;
    for _ in 0..budget {
        let pending: Vec<(ObjectId, Cell)> = targets
            .iter()
            .copied()
            .filter(|(id, cell)| b.scene.is_held(*id) || b.scene.object(*id).is_some_and(|o| o.cell != *cell))
            .collect();
        let Some(&(first, first_cell)) = pending.first() else { return Ok(()) };
        let blocks = |b: &Builder, cell: Cell| b.scene.column(cell).iter().any(|o| pending.iter().any(|(p, _)| *p == o.id));
        let ready = pending
            .iter()
            .find(|(id, cell)| b.scene.is_clear(*id) && !blocks(b, *cell) && b.can_place(*id, *cell))
            .copied();
        if let Some((id, cell)) = ready {
            b.put(id, cell)?;
            continue;
        }
        let obstruction = if !b.scene.is_clear(first) {
            let o = b.scene.object(first).expect("exists");
            b.scene.top_at(o.cell).map(|t| t.id)
        } else {
            b.scene.top_at(first_cell).map(|t| t.id)
        };
        let Some(obstruction) = obstruction else {
            return Err(PlanError::GoalInfeasible(format!("object {first} cannot be placed at {first_cell}")));
        };
        let buffer = b.buffer_cell(&reserved)?;
        b.put(obstruction, buffer)?;
    }
    Err(PlanError::GoalInfeasible("placement did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Color, Kind, SceneObject};
    use crate::planner::tests::execute;

    fn obj(id: u32, kind: Kind, c: Color, x: u32, y: u32) -> SceneObject {
        SceneObject::new(id, kind, c, Cell::new(x, y))
    }

    #[test]
    fn mutual_swap_goes_through_a_buffer() {
        let scene = Scene::new(8, 8)
            .with_object(obj(1, Kind::Cube, Color::Red, 2, 2))
            .with_object(obj(2, Kind::Toy, Color::Blue, 5, 5));
        let text = "rearrange the scene so that the red cube is at (5,5) and the blue toy is at (2,2)";
        let plan = plan_rearrange(text, &scene).unwrap();
        assert_eq!(plan.len(), 3, "{:#?}", plan.steps);
        let end = execute(&plan, &scene);
        assert_eq!(end.object(ObjectId(1)).unwrap().cell, Cell::new(5, 5));
        assert_eq!(end.object(ObjectId(2)).unwrap().cell, Cell::new(2, 2));
        assert!(plan_rearrange(text, &end).unwrap().is_empty());
    }

    #[test]
    fn cube_cannot_rest_on_a_toy() {
        let scene = Scene::new(8, 8).with_object(obj(1, Kind::Cube, Color::Red, 2, 2)).with_object(obj(2, Kind::Toy, Color::Blue, 5, 5));
        let plan = plan_rearrange("rearrange the scene so that the red cube is at (5,5)", &scene).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(execute(&plan, &scene).object(ObjectId(1)).unwrap().cell, Cell::new(5, 5));
    }

    #[test]
    fn off_table_target() {
        let scene = Scene::new(8, 8).with_object(obj(1, Kind::Cube, Color::Red, 2, 2));
        let r = plan_rearrange("rearrange the scene so that the red cube is at (9,5)", &scene);
        assert!(matches!(r, Err(PlanError::GoalInfeasible(_))));
    }

    #[test]
    fn three_cube_stack() {
        let scene = Scene::new(8, 8)
            .with_object(obj(1, Kind::Cube, Color::Red, 1, 1))
            .with_object(obj(2, Kind::Cube, Color::Green, 4, 4))
            .with_object(obj(3, Kind::Cube, Color::Blue, 6, 2));
        let plan = plan_stack_order("stack the blue cube, the red cube and the green cube from bottom to top", &scene).unwrap();
        assert_eq!(plan.len(), 2);
        let end = execute(&plan, &scene);
        assert_eq!(end.occupant(Cell::new(6, 2), 2).unwrap().id, ObjectId(2));
        let rev = plan_stack_order("stack the blue cube, the red cube and the green cube from top to bottom", &scene).unwrap();
        assert_eq!(execute(&rev, &scene).occupant(Cell::new(4, 4), 2).unwrap().id, ObjectId(3));
    }

    #[test]
    fn rebuilds_a_wrong_stack() {
        let scene = Scene::new(8, 8)
            .with_object(obj(1, Kind::Cube, Color::Red, 1, 1))
            .with_object(obj(2, Kind::Cube, Color::Green, 1, 1).with_z(1))
            .with_object(obj(3, Kind::Cube, Color::Blue, 1, 1).with_z(2));
        let plan = plan_stack_order("stack the red cube, the blue cube and the green cube from bottom to top", &scene).unwrap();
        let end = execute(&plan, &scene);
        let ids: Vec<u32> = (0..3).map(|z| end.occupant(Cell::new(1, 1), z).unwrap().id.0).collect();
        assert_eq!(ids, [1, 3, 2]);
    }

    #[test]
    fn square_instruction_parses() {
        let scene = Scene::new(8, 8)
            .with_object(obj(1, Kind::Cube, Color::Red, 0, 7))
            .with_object(obj(2, Kind::Bowl, Color::Blue, 1, 7))
            .with_object(obj(3, Kind::Toy, Color::Green, 2, 7))
            .with_object(obj(4, Kind::Cube, Color::Yellow, 3, 7));
        let text = "place the red cube, the blue bowl, the green toy and the yellow cube on the corners of a square with side 2, clockwise from (1,1)";
        let end = execute(&plan_square(text, &scene).unwrap(), &scene);
        let cells: Vec<Cell> = (1..=4).map(|i| end.object(ObjectId(i)).unwrap().cell).collect();
        assert_eq!(cells, square_corners(Cell::new(1, 1), 2));
    }
}
