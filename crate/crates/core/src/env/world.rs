use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::map::{Tile, TileMap};
use super::{PrimSet, Primitive};

/// An object the agent can interact with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectRef {
    Handle(usize),
    Key,
    Bolt,
    Treasure,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    #[error("primitive {0} is not available in this state")]
    Unavailable(Primitive),
}

/// Full simulator state. Positions are the top-left pixel of the agent's
/// one-tile box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub agent_x: i32,
    pub agent_y: i32,
    /// Toggle state per handle, in [`TileMap::handles`] order.
    pub handles: Vec<bool>,
    /// Open flag per door, derived from handle states and the bolt.
    pub doors_open: Vec<bool>,
    pub key_held: bool,
    pub key_x: i32,
    pub key_y: i32,
    pub bolt_locked: bool,
    pub treasure_held: bool,
    pub treasure_x: i32,
    pub treasure_y: i32,
    /// Handle the agent last operated and has not yet walked away from. An
    /// engaged handle is not actionable, so `interact` does not repeat forever.
    pub engaged: Option<ObjectRef>,
}

/// Fixed-order real encoding of a [`WorldState`], all entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl TileMap {
    /// Initial state: agent at home, handles untoggled, key and treasure in place, bolt locked.
    pub fn reset(&self) -> WorldState {
        let t = self.tile_size();
        let pos = |tile: Option<(usize, usize)>| {
            tile.map(|(c, r)| (c as i32 * t, r as i32 * t)).unwrap_or((0, 0))
        };
        let (agent_x, agent_y) = pos(Some(self.start));
        let (key_x, key_y) = pos(self.key);
        let (treasure_x, treasure_y) = pos(self.treasure);
        let mut state = WorldState {
            agent_x,
            agent_y,
            handles: vec![false; self.handles.len()],
            doors_open: vec![false; self.doors.len()],
            key_held: false,
            key_x,
            key_y,
            bolt_locked: self.bolt.is_some(),
            treasure_held: false,
            treasure_x,
            treasure_y,
            engaged: None,
        };
        self.refresh_doors(&mut state);
        state
    }

    fn refresh_doors(&self, state: &mut WorldState) {
        for open in state.doors_open.iter_mut() {
            *open = false;
        }
        for (h, def) in self.handles.iter().enumerate() {
            if state.handles[h] {
                for &d in &def.doors {
                    state.doors_open[d] = !state.doors_open[d];
                }
            }
        }
        if let Some(d) = self.bolt_door {
            state.doors_open[d] = !state.bolt_locked;
        }
    }

    /// Names of the [`StateVector`] entries, in order.
    pub fn variable_names(&self) -> Vec<String> {
        let mut names = vec!["agent_x".to_string(), "agent_y".to_string()];
        names.extend(self.handles.iter().map(|h| format!("handle_{}", h.label)));
        names.extend(
            [
                "key_held",
                "bolt_locked",
                "treasure_held",
                "key_x",
                "key_y",
                "treasure_x",
                "treasure_y",
            ]
            .map(String::from),
        );
        names
    }

    pub fn vector_len(&self) -> usize {
        2 + self.handles.len() + 7
    }

    /// Index of a named state variable.
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variable_names().iter().position(|n| n == name)
    }

    pub fn state_vector(&self, state: &WorldState) -> StateVector {
        let w = self.width_px() as f64;
        let h = self.height_px() as f64;
        let mut v = Vec::with_capacity(self.vector_len());
        v.push(state.agent_x as f64 / w);
        v.push(state.agent_y as f64 / h);
        v.extend(state.handles.iter().map(|&b| flag(b)));
        v.push(flag(state.key_held));
        v.push(flag(state.bolt_locked));
        v.push(flag(state.treasure_held));
        v.push(state.key_x as f64 / w);
        v.push(state.key_y as f64 / h);
        v.push(state.treasure_x as f64 / w);
        v.push(state.treasure_y as f64 / h);
        StateVector(v)
    }

    fn blocked(&self, state: &WorldState, col: i32, row: i32) -> bool {
        if col < 0 || row < 0 || col as usize >= self.width() || row as usize >= self.height() {
            return true;
        }
        match self.tile(col as usize, row as usize) {
            Tile::Wall => true,
            Tile::Door(d) => !state.doors_open[d],
            Tile::Empty | Tile::Ladder => false,
        }
    }

    /// True when the agent box at `(x, y)` overlaps no wall or closed door.
    pub fn box_free(&self, state: &WorldState, x: i32, y: i32) -> bool {
        let t = self.tile_size();
        if x < 0 || y < 0 {
            return false;
        }
        for row in y / t..=(y + t - 1) / t {
            for col in x / t..=(x + t - 1) / t {
                if self.blocked(state, col, row) {
                    return false;
                }
            }
        }
        true
    }

    /// True when a ladder run aligned with the agent touches the box or the
    /// pixel rows directly above and below it.
    fn on_ladder(&self, x: i32, y: i32) -> bool {
        let t = self.tile_size();
        let cx = x + t / 2;
        let tol = self.ladder_tolerance();
        let row_lo = ((y - 1).max(0)) / t;
        let row_hi = (((y + t) / t) as usize).min(self.height() - 1) as i32;
        for row in row_lo..=row_hi {
            for col in x / t..=(x + t - 1) / t {
                if col < 0 || col as usize >= self.width() {
                    continue;
                }
                if let Some(center) = self.ladder_center(col as usize, row as usize) {
                    if (cx - center).abs() <= tol {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn can_shift(&self, state: &WorldState, p: Primitive, x: i32, y: i32) -> bool {
        let (dx, dy) = p.direction();
        let (nx, ny) = (x + dx, y + dy);
        if !self.box_free(state, nx, ny) {
            return false;
        }
        dy == 0 || self.on_ladder(nx, ny)
    }

    fn object_center(&self, state: &WorldState, obj: ObjectRef) -> (i32, i32) {
        let t = self.tile_size();
        let (x, y) = match obj {
            ObjectRef::Handle(h) => {
                let def = &self.handles[h];
                (def.col as i32 * t, def.row as i32 * t)
            }
            ObjectRef::Key => (state.key_x, state.key_y),
            ObjectRef::Bolt => {
                let (c, r) = self.bolt.expect("bolt exists");
                (c as i32 * t, r as i32 * t)
            }
            ObjectRef::Treasure => (state.treasure_x, state.treasure_y),
        };
        (x + t / 2, y + t / 2)
    }

    fn distance_to(&self, state: &WorldState, obj: ObjectRef) -> i32 {
        let t = self.tile_size();
        let (ox, oy) = self.object_center(state, obj);
        let (ax, ay) = (state.agent_x + t / 2, state.agent_y + t / 2);
        (ox - ax).abs().max((oy - ay).abs())
    }

    fn objects(&self) -> impl Iterator<Item = ObjectRef> + '_ {
        (0..self.handles.len())
            .map(ObjectRef::Handle)
            .chain(self.key.map(|_| ObjectRef::Key))
            .chain(self.bolt.map(|_| ObjectRef::Bolt))
            .chain(self.treasure.map(|_| ObjectRef::Treasure))
    }

    fn actionable(&self, state: &WorldState, obj: ObjectRef) -> bool {
        match obj {
            ObjectRef::Handle(h) => {
                if state.engaged == Some(obj) {
                    return false;
                }
                // never slam a door shut on the agent
                let t = self.tile_size();
                !self.handles[h].doors.iter().any(|&d| {
                    state.doors_open[d]
                        && self.doors[d].tiles.iter().any(|&(c, r)| {
                            let (tx, ty) = (c as i32 * t, r as i32 * t);
                            state.agent_x < tx + t
                                && tx < state.agent_x + t
                                && state.agent_y < ty + t
                                && ty < state.agent_y + t
                        })
                })
            }
            ObjectRef::Key => !state.key_held,
            ObjectRef::Bolt => state.bolt_locked && state.key_held,
            ObjectRef::Treasure => !state.treasure_held,
        }
    }

    /// The object `interact` would operate on, if any.
    pub fn interaction_target(&self, state: &WorldState) -> Option<ObjectRef> {
        let radius = self.interaction_radius();
        self.objects()
            .filter(|&o| self.actionable(state, o))
            .map(|o| (self.distance_to(state, o), o))
            .filter(|&(d, _)| d <= radius)
            .min_by_key(|&(d, _)| d)
            .map(|(_, o)| o)
    }

    pub fn is_available(&self, state: &WorldState, p: Primitive) -> bool {
        match p {
            Primitive::Interact => self.interaction_target(state).is_some(),
            _ => self.can_shift(state, p, state.agent_x, state.agent_y),
        }
    }

    /// Primitives executable in `state`.
    pub fn available_primitives(&self, state: &WorldState) -> PrimSet {
        Primitive::ALL
            .into_iter()
            .filter(|&p| self.is_available(state, p))
            .collect()
    }

    /// Execute `p`, drawing the displacement uniformly from {2, 3, 4} pixels.
    pub fn step_primitive<R: Rng + ?Sized>(
        &self,
        state: &WorldState,
        p: Primitive,
        rng: &mut R,
    ) -> Result<WorldState, StepError> {
        let distance = if p.is_movement() { rng.gen_range(2..=4) } else { 0 };
        self.step_with_distance(state, p, distance)
    }

    /// Deterministic core of [`TileMap::step_primitive`]: movement primitives
    /// advance up to `distance` pixels and stop at the first obstacle.
    pub fn step_with_distance(
        &self,
        state: &WorldState,
        p: Primitive,
        distance: i32,
    ) -> Result<WorldState, StepError> {
        if !self.is_available(state, p) {
            return Err(StepError::Unavailable(p));
        }
        let mut next = state.clone();
        if p == Primitive::Interact {
            let target = self.interaction_target(state).expect("interact is available");
            match target {
                ObjectRef::Handle(h) => {
                    next.handles[h] = !next.handles[h];
                    next.engaged = Some(target);
                }
                ObjectRef::Key => next.key_held = true,
                ObjectRef::Bolt => next.bolt_locked = false,
                ObjectRef::Treasure => next.treasure_held = true,
            }
            self.refresh_doors(&mut next);
            return Ok(next);
        }

        let (dx, dy) = p.direction();
        for _ in 0..distance {
            if !self.can_shift(&next, p, next.agent_x, next.agent_y) {
                break;
            }
            next.agent_x += dx;
            next.agent_y += dy;
        }
        if let Some(obj) = next.engaged {
            if self.distance_to(&next, obj) > self.interaction_radius() {
                next.engaged = None;
            }
        }
        Ok(next)
    }

    /// Pixel position of the home tile.
    pub fn home_px(&self) -> (i32, i32) {
        let t = self.tile_size();
        (self.start.0 as i32 * t, self.start.1 as i32 * t)
    }
}
