//! Plain-text map files.
//!
//! One record per line, fields separated by whitespace, `#` starts a
//! comment. Coordinates are meters.
//!
//! ```text
//! # base stations get ids 0, 1, ... in file order
//! bs        500 265
//! # a road is a polyline of two or more vertices, driven both ways
//! road      0 250  1000 250
//! road      250 0  250 500  600 500
//! # axis-aligned building: xmin ymin xmax ymax
//! obstacle  300 300 440 440
//! ```
//!
//! At least one `bs` and one `road` are required.

use std::path::Path;

use dkucb_core::env::{BaseStation, MapGeometry};
use dkucb_core::geometry::{Point, Polyline, Rect};

use crate::error::SimError;

/// Reads a map file.
pub fn load(path: &Path) -> Result<MapGeometry, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse(&text, path)
}

/// Parses map text; `path` is only used in error messages.
pub fn parse(text: &str, path: &Path) -> Result<MapGeometry, SimError> {
    let err = |line: usize, reason: String| SimError::Geometry {
        path: path.to_owned(),
        line,
        reason,
    };
    let mut map = MapGeometry {
        stations: Vec::new(),
        roads: Vec::new(),
        obstacles: Vec::new(),
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut fields = body.split_whitespace();
        let Some(kind) = fields.next() else { continue };
        let nums = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line, format!("`{f}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match kind {
            "bs" => {
                if nums.len() != 2 {
                    return Err(err(line, format!("bs takes 2 numbers, got {}", nums.len())));
                }
                map.stations.push(BaseStation {
                    id: map.stations.len() as u32,
                    pos: Point::new(nums[0], nums[1]),
                });
            }
            "road" => {
                if nums.len() < 4 || nums.len() % 2 != 0 {
                    return Err(err(
                        line,
                        "road takes an even count of at least 4 numbers".into(),
                    ));
                }
                let pts = nums.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
                let road =
                    Polyline::new(pts).ok_or_else(|| err(line, "road has zero length".into()))?;
                map.roads.push(road);
            }
            "obstacle" => {
                if nums.len() != 4 {
                    return Err(err(
                        line,
                        format!("obstacle takes 4 numbers, got {}", nums.len()),
                    ));
                }
                if nums[0] >= nums[2] || nums[1] >= nums[3] {
                    return Err(err(
                        line,
                        "obstacle needs xmin < xmax and ymin < ymax".into(),
                    ));
                }
                map.obstacles.push(Rect::new(
                    Point::new(nums[0], nums[1]),
                    Point::new(nums[2], nums[3]),
                ));
            }
            other => return Err(err(line, format!("unknown record `{other}`"))),
        }
    }
    if map.stations.is_empty() {
        return Err(err(0, "no `bs` records".into()));
    }
    if map.roads.is_empty() {
        return Err(err(0, "no `road` records".into()));
    }
    Ok(map)
}

/// Writes a map in the same format.
pub fn render(map: &MapGeometry) -> String {
    let mut out = String::new();
    for s in &map.stations {
        out += &format!("bs {} {}\n", s.pos.x, s.pos.y);
    }
    for r in &map.roads {
        out += "road";
        for p in r.points() {
            out += &format!(" {} {}", p.x, p.y);
        }
        out += "\n";
    }
    for o in &map.obstacles {
        out += &format!("obstacle {} {} {} {}\n", o.min.x, o.min.y, o.max.x, o.max.y);
    }
    out
}
