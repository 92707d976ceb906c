//! Treasure Game simulator.
//!
//! The world is a tile map walked by a one-tile agent using five primitives.
//! Geometry is deterministic; movement primitives displace the agent by a
//! uniformly drawn 2, 3 or 4 pixels, clamped at the first obstacle.

mod map;
mod world;

pub use map::{load_map, reference_map, DoorDef, HandleDef, MapError, Tile, TileMap, REFERENCE_MAP};
pub use world::{ObjectRef, StateVector, WorldState};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One-step low-level action. Declaration order is the tie-break priority used
/// when several primitives become available at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Primitive {
    GoUp,
    GoDown,
    GoLeft,
    GoRight,
    Interact,
}

impl Primitive {
    pub const ALL: [Primitive; 5] = [
        Primitive::GoUp,
        Primitive::GoDown,
        Primitive::GoLeft,
        Primitive::GoRight,
        Primitive::Interact,
    ];

    pub fn reverse(self) -> Option<Primitive> {
        match self {
            Primitive::GoUp => Some(Primitive::GoDown),
            Primitive::GoDown => Some(Primitive::GoUp),
            Primitive::GoLeft => Some(Primitive::GoRight),
            Primitive::GoRight => Some(Primitive::GoLeft),
            Primitive::Interact => None,
        }
    }

    pub fn is_movement(self) -> bool {
        self != Primitive::Interact
    }

    /// Unit displacement `(dx, dy)` in screen coordinates (y grows downward).
    pub fn direction(self) -> (i32, i32) {
        match self {
            Primitive::GoUp => (0, -1),
            Primitive::GoDown => (0, 1),
            Primitive::GoLeft => (-1, 0),
            Primitive::GoRight => (1, 0),
            Primitive::Interact => (0, 0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Primitive::GoUp => "go_up",
            Primitive::GoDown => "go_down",
            Primitive::GoLeft => "go_left",
            Primitive::GoRight => "go_right",
            Primitive::Interact => "interact",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Primitive {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Primitive::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown primitive `{s}`"))
    }
}

/// Small set of primitives, iterated in priority order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PrimSet(u8);

impl PrimSet {
    pub const EMPTY: PrimSet = PrimSet(0);

    pub fn contains(self, p: Primitive) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn insert(&mut self, p: Primitive) {
        self.0 |= p.bit();
    }

    pub fn remove(&mut self, p: Primitive) {
        self.0 &= !p.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn difference(self, other: PrimSet) -> PrimSet {
        PrimSet(self.0 & !other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Primitive> {
        Primitive::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    /// Highest-priority member, if any.
    pub fn first(self) -> Option<Primitive> {
        self.iter().next()
    }
}

impl FromIterator<Primitive> for PrimSet {
    fn from_iter<I: IntoIterator<Item = Primitive>>(iter: I) -> Self {
        let mut set = PrimSet::EMPTY;
        for p in iter {
            set.insert(p);
        }
        set
    }
}

impl fmt::Display for PrimSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(p.as_str())?;
        }
        f.write_str("}")
    }
}
