use std::collections::BTreeMap;

use thiserror::Error;

/// Contents of the shipped reference layout.
pub const REFERENCE_MAP: &str = include_str!("../../maps/reference.map");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid map: {0}")]
    Semantic(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Wall,
    Empty,
    Ladder,
    /// Door tile; the payload indexes [`TileMap::doors`].
    Door(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandleDef {
    /// The `i` of `h<i>`.
    pub label: u8,
    pub col: usize,
    pub row: usize,
    /// Indices into [`TileMap::doors`].
    pub doors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoorDef {
    pub label: u8,
    pub tiles: Vec<(usize, usize)>,
}

/// Validated Treasure Game layout.
#[derive(Debug, Clone)]
pub struct TileMap {
    width: usize,
    height: usize,
    tile_size: i32,
    tiles: Vec<Tile>,
    /// Pixel x of the horizontal centre of the ladder run each ladder tile belongs to.
    ladder_centers: Vec<Option<i32>>,
    pub(crate) handles: Vec<HandleDef>,
    pub(crate) doors: Vec<DoorDef>,
    pub(crate) bolt_door: Option<usize>,
    pub(crate) start: (usize, usize),
    pub(crate) key: Option<(usize, usize)>,
    pub(crate) bolt: Option<(usize, usize)>,
    pub(crate) treasure: Option<(usize, usize)>,
    floors: Vec<Option<u32>>,
}

/// Parse and validate the reference layout.
pub fn reference_map() -> TileMap {
    load_map(REFERENCE_MAP).expect("reference map is valid")
}

enum Section {
    None,
    Meta,
    Grid,
    Links,
}

#[derive(Clone, Copy)]
enum Token {
    Wall,
    Empty,
    Ladder,
    Start,
    Key,
    Bolt,
    Treasure,
    Handle(u8),
    Door(u8),
}

struct Link {
    line: usize,
    source: LinkSource,
    doors: Vec<u8>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LinkSource {
    Handle(u8),
    Bolt,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> MapError {
    MapError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn semantic(message: impl Into<String>) -> MapError {
    MapError::Semantic(message.into())
}

fn label_digit(c: Option<char>, line: usize, column: usize, what: char) -> Result<u8, MapError> {
    match c {
        Some(d @ '1'..='9') => Ok(d as u8 - b'0'),
        _ => Err(syntax(line, column, format!("`{what}` must be followed by a digit 1-9"))),
    }
}

fn tokenize_row(text: &str, line: usize) -> Result<Vec<Token>, MapError> {
    let mut out = Vec::new();
    let mut chars = text.chars().enumerate().peekable();
    while let Some((i, c)) = chars.next() {
        let column = i + 1;
        let tok = match c {
            'W' => Token::Wall,
            '.' => Token::Empty,
            'L' => Token::Ladder,
            'S' => Token::Start,
            'K' => Token::Key,
            'B' => Token::Bolt,
            'T' => Token::Treasure,
            'h' => Token::Handle(label_digit(chars.next().map(|(_, c)| c), line, column, 'h')?),
            'd' => Token::Door(label_digit(chars.next().map(|(_, c)| c), line, column, 'd')?),
            other => return Err(syntax(line, column, format!("unknown map character `{other}`"))),
        };
        out.push(tok);
    }
    Ok(out)
}

fn parse_link(text: &str, line: usize) -> Result<Link, MapError> {
    let (lhs, rhs) = text
        .split_once(':')
        .ok_or_else(|| syntax(line, 1, "expected `h<i>: d<j>[,d<k>...]`"))?;
    let lhs = lhs.trim();
    let source = if lhs == "B" {
        LinkSource::Bolt
    } else if let Some(rest) = lhs.strip_prefix('h') {
        let mut it = rest.chars();
        let d = label_digit(it.next(), line, 1, 'h')?;
        if it.next().is_some() {
            return Err(syntax(line, 1, format!("bad handle name `{lhs}`")));
        }
        LinkSource::Handle(d)
    } else {
        return Err(syntax(line, 1, format!("bad link source `{lhs}`")));
    };
    let column = text.find(':').unwrap() + 2;
    let mut doors = Vec::new();
    for part in rhs.split(',') {
        let part = part.trim();
        let mut it = part.chars();
        if it.next() != Some('d') {
            return Err(syntax(line, column, format!("bad door name `{part}`")));
        }
        let d = label_digit(it.next(), line, column, 'd')?;
        if it.next().is_some() {
            return Err(syntax(line, column, format!("bad door name `{part}`")));
        }
        doors.push(d);
    }
    Ok(Link { line, source, doors })
}

/// Parse a map file.
///
/// The `[grid]` section holds equal-length rows over `W . L S K B T h1..h9
/// d1..d9`; `[links]` maps each handle (and optionally the bolt, as `B:`) to
/// the doors it operates; `[meta]` carries `tile_size_px`.
pub fn load_map(text: &str) -> Result<TileMap, MapError> {
    let mut section = Section::None;
    let mut rows: Vec<(usize, Vec<Token>)> = Vec::new();
    let mut links: Vec<Link> = Vec::new();
    let mut tile_size: i32 = 16;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.starts_with('[') {
            section = match trimmed {
                "[meta]" => Section::Meta,
                "[grid]" => Section::Grid,
                "[links]" => Section::Links,
                other => return Err(syntax(line, 1, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(syntax(line, 1, "content before the first section")),
            Section::Grid => rows.push((line, tokenize_row(trimmed, line)?)),
            Section::Links => links.push(parse_link(trimmed, line)?),
            Section::Meta => {
                let (k, v) = trimmed
                    .split_once('=')
                    .ok_or_else(|| syntax(line, 1, "expected `key = value`"))?;
                match k.trim() {
                    "tile_size_px" => {
                        tile_size = v.trim().parse().map_err(|_| {
                            syntax(line, k.len() + 2, format!("bad tile size `{}`", v.trim()))
                        })?;
                        if tile_size < 8 || tile_size % 4 != 0 {
                            return Err(syntax(line, 1, "tile_size_px must be a multiple of 4 and >= 8"));
                        }
                    }
                    other => return Err(syntax(line, 1, format!("unknown meta key `{other}`"))),
                }
            }
        }
    }

    build(rows, links, tile_size)
}

fn build(rows: Vec<(usize, Vec<Token>)>, links: Vec<Link>, tile_size: i32) -> Result<TileMap, MapError> {
    let height = rows.len();
    if height < 3 {
        return Err(semantic("grid needs at least 3 rows"));
    }
    let width = rows[0].1.len();
    for (line, row) in &rows {
        if row.len() != width {
            return Err(syntax(
                *line,
                1,
                format!("row has {} tiles, expected {width}", row.len()),
            ));
        }
    }
    if width < 3 {
        return Err(semantic("grid needs at least 3 columns"));
    }

    let mut door_tiles: BTreeMap<u8, Vec<(usize, usize)>> = BTreeMap::new();
    let mut handle_pos: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    let mut start = None;
    let mut key = None;
    let mut bolt = None;
    let mut treasure = None;

    let place = |slot: &mut Option<(usize, usize)>, what: &str, at: (usize, usize), line: usize| {
        if slot.replace(at).is_some() {
            return Err(syntax(line, at.0 + 1, format!("more than one {what}")));
        }
        Ok(())
    };

    for (r, (line, row)) in rows.iter().enumerate() {
        for (c, tok) in row.iter().enumerate() {
            let border = r == 0 || c == 0 || r + 1 == height || c + 1 == width;
            if border && !matches!(tok, Token::Wall) {
                return Err(semantic(format!("outer boundary must be wall (row {r}, column {c})")));
            }
            match *tok {
                Token::Start => place(&mut start, "start", (c, r), *line)?,
                Token::Key => place(&mut key, "key", (c, r), *line)?,
                Token::Bolt => place(&mut bolt, "bolt", (c, r), *line)?,
                Token::Treasure => place(&mut treasure, "treasure", (c, r), *line)?,
                Token::Handle(h) => {
                    if handle_pos.insert(h, (c, r)).is_some() {
                        return Err(syntax(*line, c + 1, format!("handle h{h} appears twice")));
                    }
                }
                Token::Door(d) => door_tiles.entry(d).or_default().push((c, r)),
                _ => {}
            }
        }
    }
    let start = start.ok_or_else(|| semantic("missing start tile `S`"))?;

    let doors: Vec<DoorDef> = door_tiles
        .into_iter()
        .map(|(label, tiles)| DoorDef { label, tiles })
        .collect();
    let door_index = |label: u8| doors.iter().position(|d| d.label == label);

    let mut handle_links: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    let mut bolt_door = None;
    let mut controlled = vec![false; doors.len()];
    for link in &links {
        let mut targets = Vec::new();
        for &d in &link.doors {
            let idx = door_index(d)
                .ok_or_else(|| semantic(format!("line {}: link to nonexistent door d{d}", link.line)))?;
            targets.push(idx);
        }
        match link.source {
            LinkSource::Handle(h) => {
                if !handle_pos.contains_key(&h) {
                    return Err(semantic(format!("line {}: link from nonexistent handle h{h}", link.line)));
                }
                if handle_links.insert(h, targets.clone()).is_some() {
                    return Err(semantic(format!("line {}: handle h{h} linked twice", link.line)));
                }
            }
            LinkSource::Bolt => {
                if bolt.is_none() {
                    return Err(semantic(format!("line {}: bolt link without a bolt tile", link.line)));
                }
                if targets.len() != 1 || bolt_door.is_some() {
                    return Err(semantic(format!("line {}: the bolt operates exactly one door", link.line)));
                }
                bolt_door = Some(targets[0]);
            }
        }
        for t in targets {
            controlled[t] = true;
        }
    }
    if let Some(bd) = bolt_door {
        if handle_links.values().any(|ds| ds.contains(&bd)) {
            return Err(semantic("the bolt door cannot also be linked to a handle"));
        }
    }

    let mut handles = Vec::new();
    for (&label, &(col, row)) in &handle_pos {
        let doors = handle_links
            .remove(&label)
            .filter(|d| !d.is_empty())
            .ok_or_else(|| semantic(format!("handle h{label} is not linked to any door")))?;
        handles.push(HandleDef { label, col, row, doors });
    }

    let mut tiles = Vec::with_capacity(width * height);
    for (_, row) in &rows {
        for tok in row {
            tiles.push(match *tok {
                Token::Wall => Tile::Wall,
                Token::Ladder => Tile::Ladder,
                Token::Door(d) => Tile::Door(door_index(d).unwrap()),
                _ => Tile::Empty,
            });
        }
    }

    let ladder_centers = ladder_centers(&tiles, width, height, tile_size);
    let floors = floor_labels(&tiles, width, height);

    Ok(TileMap {
        width,
        height,
        tile_size,
        tiles,
        ladder_centers,
        handles,
        doors,
        bolt_door,
        start,
        key,
        bolt,
        treasure,
        floors,
    })
}

fn ladder_centers(tiles: &[Tile], width: usize, height: usize, tile: i32) -> Vec<Option<i32>> {
    let mut out = vec![None; tiles.len()];
    for r in 0..height {
        let mut c = 0;
        while c < width {
            if tiles[r * width + c] != Tile::Ladder {
                c += 1;
                continue;
            }
            let begin = c;
            while c < width && tiles[r * width + c] == Tile::Ladder {
                c += 1;
            }
            let center = (begin as i32 * tile + c as i32 * tile) / 2;
            for slot in &mut out[r * width + begin..r * width + c] {
                *slot = Some(center);
            }
        }
    }
    out
}

/// Rows with walkable non-ladder tiles are floors, numbered from the bottom.
fn floor_labels(tiles: &[Tile], width: usize, height: usize) -> Vec<Option<u32>> {
    let mut out = vec![None; height];
    let mut n = 0;
    for r in (0..height).rev() {
        let walkable = (0..width).any(|c| matches!(tiles[r * width + c], Tile::Empty | Tile::Door(_)));
        if walkable {
            n += 1;
            out[r] = Some(n);
        }
    }
    out
}

impl TileMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tile_size(&self) -> i32 {
        self.tile_size
    }

    pub fn width_px(&self) -> i32 {
        self.width as i32 * self.tile_size
    }

    pub fn height_px(&self) -> i32 {
        self.height as i32 * self.tile_size
    }

    /// Chebyshev distance between agent and object centres that still allows `interact`.
    pub fn interaction_radius(&self) -> i32 {
        self.tile_size / 2
    }

    /// Maximum horizontal offset between agent and ladder centres for climbing.
    pub fn ladder_tolerance(&self) -> i32 {
        self.tile_size / 4
    }

    pub fn tile(&self, col: usize, row: usize) -> Tile {
        self.tiles[row * self.width + col]
    }

    pub(crate) fn ladder_center(&self, col: usize, row: usize) -> Option<i32> {
        self.ladder_centers[row * self.width + col]
    }

    pub fn handles(&self) -> &[HandleDef] {
        &self.handles
    }

    pub fn doors(&self) -> &[DoorDef] {
        &self.doors
    }

    pub fn bolt_door(&self) -> Option<usize> {
        self.bolt_door
    }

    pub fn start_tile(&self) -> (usize, usize) {
        self.start
    }

    pub fn key_tile(&self) -> Option<(usize, usize)> {
        self.key
    }

    pub fn bolt_tile(&self) -> Option<(usize, usize)> {
        self.bolt
    }

    pub fn treasure_tile(&self) -> Option<(usize, usize)> {
        self.treasure
    }

    /// Floor number of a tile row (1 = bottom), if the row is walkable.
    pub fn floor_of_row(&self, row: usize) -> Option<u32> {
        self.floors.get(row).copied().flatten()
    }

    pub fn floor_count(&self) -> usize {
        self.floors.iter().flatten().count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_map_topology() {
        let map = reference_map();
        assert_eq!(map.width(), 24);
        assert_eq!(map.height(), 13);
        assert_eq!(map.tile_size(), 16);
        assert!(map.key_tile().is_some());
        assert!(map.bolt_tile().is_some());
        assert!(map.treasure_tile().is_some());
        assert!(map.handles().len() >= 2);
        assert!(map.bolt_door().is_some());
        // five floors plus the home platform
        assert_eq!(map.floor_count(), 6);
        let (_, start_row) = map.start_tile();
        assert_eq!(map.floor_of_row(start_row), Some(6));
        // key on floor 4, bolt on floor 1, treasure on floor 2
        assert_eq!(map.floor_of_row(map.key_tile().unwrap().1), Some(4));
        assert_eq!(map.floor_of_row(map.bolt_tile().unwrap().1), Some(1));
        assert_eq!(map.floor_of_row(map.treasure_tile().unwrap().1), Some(2));
    }

    #[test]
    fn trivial_map_is_valid() {
        let map = load_map("[grid]\nWWW\nWSW\nWWW\n").unwrap();
        assert_eq!(map.start_tile(), (1, 1));
        assert!(map.handles().is_empty());
        assert!(map.treasure_tile().is_none());
    }

    #[test]
    fn dangling_door_link_is_semantic_error() {
        let text = "[grid]\nWWWWW\nWSh1.W\nWWWWW\n[links]\nh1: d9\n";
        match load_map(text) {
            Err(MapError::Semantic(msg)) => assert!(msg.contains("d9"), "{msg}"),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_character_reports_position() {
        let text = "[grid]\nWWWW\nWS?W\nWWWW\n";
        assert_eq!(
            load_map(text).unwrap_err(),
            MapError::Syntax {
                line: 3,
                column: 3,
                message: "unknown map character `?`".into()
            }
        );
    }

    #[test]
    fn missing_start_is_rejected() {
        assert!(matches!(load_map("[grid]\nWWW\nW.W\nWWW\n"), Err(MapError::Semantic(_))));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(
            load_map("[grid]\nWWWW\nWSW\nWWWW\n"),
            Err(MapError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn open_border_is_rejected() {
        assert!(matches!(load_map("[grid]\nWWW\nWS.\nWWW\n"), Err(MapError::Semantic(_))));
    }

    #[test]
    fn unlinked_handle_is_rejected() {
        let text = "[grid]\nWWWWW\nWSh1d1W\nWWWWW\n";
        assert!(matches!(load_map(text), Err(MapError::Semantic(_))));
    }

    #[test]
    fn ladder_centres_follow_runs() {
        let map = reference_map();
        // home ladder occupies columns 4..=6 of row 2: centre of column 5
        assert_eq!(map.ladder_center(4, 2), Some(5 * 16 + 8));
        assert_eq!(map.ladder_center(6, 2), Some(5 * 16 + 8));
        assert_eq!(map.ladder_center(3, 2), None);
    }
}
