use crate::model::{Color, Kind, Plan, Scene};

use super::{Builder, IntentLexicon, PlanError};

/// Moves each painted cube outside its `<color>_zone` into the zone's leftmost free cell, by id.
pub(crate) fn plan_color_sort(scene: &Scene) -> Result<Plan, PlanError> {
    let mut b = Builder::new(scene);
    let cubes: Vec<_> = scene.objects.iter().filter(|o| o.kind == Kind::Cube && o.color != Color::None).map(|o| (o.id, o.color)).collect();
    for (id, color) in cubes {
        let zone = format!("{color}_zone");
        if b.scene.zone(&zone).is_none() {
            return Err(PlanError::MissingZone(zone));
        }
        if b.scene.in_zone(id, &zone) {
            continue;
        }
        let cell = b.scene.first_free_in_zone(&zone).ok_or(PlanError::ZoneFull(zone))?;
        b.uncover(id, &[])?;
        b.put(id, cell)?;
    }
    Ok(b.finish())
}

/// Moves every object carrying the matched rule's attribute into the directive's zone, by id.
pub(crate) fn plan_intent(text: &str, scene: &Scene, lexicon: &IntentLexicon) -> Result<Plan, PlanError> {
    let rule = lexicon.find(text).ok_or_else(|| PlanError::UnrecognizedIntent(text.to_string()))?;
    let zone = rule.directive.zone();
    if scene.zone(zone).is_none() {
        return Err(PlanError::MissingZone(zone.into()));
    }
    let mut b = Builder::new(scene);
    let ids: Vec<_> = scene.objects.iter().filter(|o| o.attributes.contains(&rule.attribute)).map(|o| o.id).collect();
    for id in ids {
        if b.scene.in_zone(id, zone) {
            continue;
        }
        let cell = b.scene.first_free_in_zone(zone).ok_or_else(|| PlanError::ZoneFull(zone.into()))?;
        b.uncover(id, &[])?;
        b.put(id, cell)?;
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cell, ObjectId, Rect, SceneObject};
    use crate::planner::tests::execute;
    use crate::sim::{check_success, Goal, TaskSpec};
    use crate::model::Family;

    fn cube(id: u32, c: Color, x: u32, y: u32) -> SceneObject {
        SceneObject::new(id, Kind::Cube, c, Cell::new(x, y))
    }

    #[test]
    fn scrambled_two_colors() {
        let scene = Scene::new(8, 8)
            .with_zone("red_zone", Rect::new(0, 0, 2, 2))
            .with_zone("blue_zone", Rect::new(2, 0, 2, 2))
            .with_object(cube(1, Color::Blue, 0, 0))
            .with_object(cube(2, Color::Red, 3, 1))
            .with_object(cube(3, Color::Red, 5, 5))
            .with_object(cube(4, Color::Blue, 6, 6));
        let plan = plan_color_sort(&scene).unwrap();
        assert!(plan.len() <= 4);
        let spec = TaskSpec::new(Family::ColorSort, Goal::ColorSort, "sort");
        assert!(check_success(&spec, &execute(&plan, &scene)));
        assert!(plan_color_sort(&execute(&plan, &scene)).unwrap().is_empty());
    }

    #[test]
    fn pigeonhole_zone_full() {
        let mut scene = Scene::new(8, 8).with_zone("red_zone", Rect::new(0, 0, 4, 3));
        for i in 0..13 {
            scene.push(cube(i + 1, Color::Red, i % 8, 3 + i / 8));
        }
        assert_eq!(plan_color_sort(&scene), Err(PlanError::ZoneFull("red_zone".into())));
    }

    fn food_scene(spicy: bool) -> Scene {
        let mut s = Scene::new(8, 8).with_zone("far_zone", Rect::new(0, 0, 8, 2));
        s.push(SceneObject::new(1, Kind::Food, Color::Yellow, Cell::new(2, 4)).with_label("cake").with_attribute("sweet"));
        if spicy {
            s.push(SceneObject::new(2, Kind::Food, Color::Red, Cell::new(5, 5)).with_label("chili").with_attribute("spicy"));
        }
        s
    }

    #[test]
    fn allergy_moves_the_chili() {
        let lex = IntentLexicon::bundled();
        let plan = plan_intent("I'm allergic to spicy food", &food_scene(true), &lex).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.steps[0].text, "put the red food 'chili' at (0,0,0)");
        assert!(plan.steps[0].predicate.objects() == [ObjectId(2)]);
        assert!(plan_intent("I'm allergic to spicy food", &food_scene(false), &lex).unwrap().is_empty());
        assert_eq!(
            plan_intent("bring me happiness", &food_scene(true), &lex),
            Err(PlanError::UnrecognizedIntent("bring me happiness".into()))
        );
    }
}
