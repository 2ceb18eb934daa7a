use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Cell, ObjectId, Scene};

/// An object whose placement differs between two scenes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Moved {
    pub object: ObjectId,
    pub from: (Cell, u32),
    pub to: (Cell, u32),
}

impl Moved {
    pub fn reversed(self) -> Moved {
        Moved { object: self.object, from: self.to, to: self.from }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("object id sets differ (only in first: {only_a:?}, only in second: {only_b:?})")]
    IdSetMismatch { only_a: Vec<ObjectId>, only_b: Vec<ObjectId> },
}

/// Objects whose (cell, z) differ, in ascending id order.
pub fn scene_diff(a: &Scene, b: &Scene) -> Result<Vec<Moved>, DiffError> {
    let (ia, ib) = (a.ids(), b.ids());
    if ia != ib {
        return Err(DiffError::IdSetMismatch {
            only_a: ia.difference(&ib).copied().collect(),
            only_b: ib.difference(&ia).copied().collect(),
        });
    }
    let ids: BTreeSet<ObjectId> = ia;
    Ok(ids
        .into_iter()
        .filter_map(|id| {
            let (oa, ob) = (a.object(id)?, b.object(id)?);
            let (from, to) = ((oa.cell, oa.z), (ob.cell, ob.z));
            (from != to).then_some(Moved { object: id, from, to })
        })
        .collect())
}
