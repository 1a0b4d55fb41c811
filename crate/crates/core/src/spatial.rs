//! CIU positions on the 546×290 picture, quadrants and distances.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::CiuId;

pub const DEFAULT_COORDS_JSON: &str = include_str!("../data/coords.json");

pub const IMAGE_WIDTH: f64 = 546.0;
pub const IMAGE_HEIGHT: f64 = 290.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Quadrant in image coordinates (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    TL,
    TR,
    BL,
    BR,
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quadrant::TL => "TL",
            Quadrant::TR => "TR",
            Quadrant::BL => "BL",
            Quadrant::BR => "BR",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateTable {
    coords: BTreeMap<CiuId, Point>,
    width: f64,
    height: f64,
    center: Point,
}

#[derive(Serialize, Deserialize)]
struct CoordsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    width: f64,
    height: f64,
    #[serde(default)]
    center: Option<[f64; 2]>,
    coords: BTreeMap<String, [f64; 2]>,
}

impl Default for CoordinateTable {
    fn default() -> Self {
        CoordinateTable::from_json(DEFAULT_COORDS_JSON.as_bytes()).expect("bundled coordinates are valid")
    }
}

impl CoordinateTable {
    /// Build a table; every CIU must have a point inside the image.
    pub fn new(coords: BTreeMap<CiuId, Point>, width: f64, height: f64, center: Option<Point>) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::schema(format!("invalid image size {width}x{height}")));
        }
        let center = center.unwrap_or(Point::new(width / 2.0, height / 2.0));
        let table = CoordinateTable {
            coords,
            width,
            height,
            center,
        };
        table.check_bounds(center)?;
        for id in CiuId::all() {
            let p = table.coords.get(&id).ok_or(Error::MissingCoordinate(id.value()))?;
            table.check_bounds(*p)?;
        }
        Ok(table)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let file: CoordsFile = serde_json::from_slice(bytes)?;
        let mut coords = BTreeMap::new();
        for (key, [x, y]) in &file.coords {
            let value: i64 = key
                .trim()
                .parse()
                .map_err(|_| Error::schema(format!("coordinate key {key:?} is not a CIU number")))?;
            coords.insert(CiuId::new(value)?, Point::new(*x, *y));
        }
        let center = file.center.map(|[x, y]| Point::new(x, y));
        CoordinateTable::new(coords, file.width, file.height, center)
    }

    pub fn to_json(&self) -> String {
        let file = CoordsFile {
            note: None,
            width: self.width,
            height: self.height,
            center: Some([self.center.x, self.center.y]),
            coords: self.coords.iter().map(|(id, p)| (id.to_string(), [p.x, p.y])).collect(),
        };
        serde_json::to_string_pretty(&file).expect("coordinates serialize")
    }

    fn check_bounds(&self, p: Point) -> Result<()> {
        let inside = (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y);
        if inside {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn get(&self, id: CiuId) -> Result<Point> {
        self.coords
            .get(&id)
            .copied()
            .ok_or(Error::MissingCoordinate(id.value()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (CiuId, Point)> + '_ {
        self.coords.iter().map(|(&id, &p)| (id, p))
    }

    /// Quadrant of a point. Points on the center lines fall right and bottom.
    pub fn quadrant_of(&self, p: Point) -> Result<Quadrant> {
        self.check_bounds(p)?;
        let left = p.x < self.center.x;
        let top = p.y < self.center.y;
        Ok(match (top, left) {
            (true, true) => Quadrant::TL,
            (true, false) => Quadrant::TR,
            (false, true) => Quadrant::BL,
            (false, false) => Quadrant::BR,
        })
    }

    pub fn quadrant_of_ciu(&self, id: CiuId) -> Result<Quadrant> {
        self.quadrant_of(self.get(id)?)
    }

    /// Same table with every coordinate, the image size and the center
    /// multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scale = |p: Point| Point::new(p.x * factor, p.y * factor);
        CoordinateTable::new(
            self.coords.iter().map(|(&id, &p)| (id, scale(p))).collect(),
            self.width * factor,
            self.height * factor,
            Some(scale(self.center)),
        )
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}
