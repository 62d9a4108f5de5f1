//! Occupancy grids and the collision / visibility queries built on them.
//!
//! Cell `(col, row)` covers the closed square
//! `[ox + col*res, ox + (col+1)*res] x [oy + row*res, oy + (row+1)*res]`
//! where `(ox, oy)` is the grid origin. Rows follow the raster order of the
//! source image: row 0 is the first PGM row and world `y` grows with the row
//! index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gray values strictly below this are occupied.
pub const OCCUPIED_BELOW: u32 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(
            (1.0 - t) * self.x + t * other.x,
            (1.0 - t) * self.y + t * other.y,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point2,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    /// Builds a grid from row-major occupancy flags (`true` = occupied).
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        cells: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid("zero dimension".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidGrid(format!("resolution {resolution}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        if cells.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    /// All-free grid.
    pub fn empty(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            resolution,
            Point2::default(),
            vec![false; width * height],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// World extent `(width*res, height*res)` in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    pub fn area(&self) -> f64 {
        let (w, h) = self.extent();
        w * h
    }

    pub fn contains(&self, p: Point2) -> bool {
        let (w, h) = self.extent();
        let lx = p.x - self.origin.x;
        let ly = p.y - self.origin.y;
        (0.0..=w).contains(&lx) && (0.0..=h).contains(&ly)
    }

    pub fn is_occupied(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set_occupied(&mut self, col: usize, row: usize, occupied: bool) {
        self.cells[row * self.width + col] = occupied;
    }

    /// Marks every cell whose square overlaps the axis-aligned world box.
    pub fn fill_rect(&mut self, min: Point2, max: Point2) {
        let (c0, c1) = self.span(min.x - self.origin.x, max.x - self.origin.x, self.width);
        let (r0, r1) = self.span(min.y - self.origin.y, max.y - self.origin.y, self.height);
        for row in r0..r1 {
            for col in c0..c1 {
                self.set_occupied(col, row, true);
            }
        }
    }

    /// Half-open index range of cells overlapping the open interval `(lo, hi)`
    /// in local coordinates.
    fn span(&self, lo: f64, hi: f64, len: usize) -> (usize, usize) {
        let a = (lo / self.resolution).floor().max(0.0);
        let b = (hi / self.resolution).ceil().min(len as f64);
        if b <= a {
            (0, 0)
        } else {
            (a as usize, b as usize)
        }
    }

    /// Closed index range of cells whose closed extent touches `[lo, hi]`
    /// (local coordinates), clipped to `0..len`. `None` when empty.
    fn closed_span(&self, lo: f64, hi: f64, len: usize) -> Option<(usize, usize)> {
        let first = (lo / self.resolution).ceil() - 1.0;
        let last = (hi / self.resolution).floor();
        let first = first.max(0.0);
        let last = last.min(len as f64 - 1.0);
        if last < first {
            None
        } else {
            Some((first as usize, last as usize))
        }
    }

    /// Squared distance from a local point to the closed square of a cell.
    fn cell_distance_sq(&self, lx: f64, ly: f64, col: usize, row: usize) -> f64 {
        let x0 = col as f64 * self.resolution;
        let y0 = row as f64 * self.resolution;
        let dx = (x0 - lx).max(0.0).max(lx - (x0 + self.resolution));
        let dy = (y0 - ly).max(0.0).max(ly - (y0 + self.resolution));
        dx * dx + dy * dy
    }

    /// True iff `p` is inside the grid and no occupied cell intersects the
    /// closed disk of `radius` around it.
    pub fn point_free(&self, p: Point2, radius: f64) -> bool {
        if !p.is_finite() || !self.contains(p) {
            return false;
        }
        let radius = radius.max(0.0);
        let lx = p.x - self.origin.x;
        let ly = p.y - self.origin.y;
        let Some((c0, c1)) = self.closed_span(lx - radius, lx + radius, self.width) else {
            return true;
        };
        let Some((r0, r1)) = self.closed_span(ly - radius, ly + radius, self.height) else {
            return true;
        };
        let r2 = radius * radius;
        for row in r0..=r1 {
            let base = row * self.width;
            for col in c0..=c1 {
                if self.cells[base + col] && self.cell_distance_sq(lx, ly, col, row) <= r2 {
                    return false;
                }
            }
        }
        true
    }

    /// Disk-swept segment check with samples spaced at most `resolution / 2`.
    pub fn segment_free(&self, a: Point2, b: Point2, radius: f64) -> bool {
        self.segment_free_spaced(a, b, radius, self.resolution / 2.0)
    }

    /// Checks `point_free` at evenly spaced samples (spacing at most
    /// `spacing`) along `[a, b]`, endpoints included.
    /// The step count is rounded up to even so the midpoint is always sampled.
    pub fn segment_free_spaced(&self, a: Point2, b: Point2, radius: f64, spacing: f64) -> bool {
        let (a, b) = canonical(a, b);
        let len = a.distance(&b);
        let steps = if len == 0.0 {
            0
        } else {
            let s = (len / spacing).ceil().max(1.0) as usize;
            s + s % 2
        };
        if !self.point_free(a, radius) || !self.point_free(b, radius) {
            return false;
        }
        (1..steps).all(|k| self.point_free(a.lerp(&b, k as f64 / steps as f64), radius))
    }

    /// Zero-width visibility: true iff no occupied cell's closed square
    /// touches the segment. Cells outside the grid never block.
    pub fn line_of_sight(&self, a: Point2, b: Point2) -> bool {
        let mut blocked = false;
        self.for_each_supercover_cell(a, b, |col, row| {
            if self.is_occupied(col, row) {
                blocked = true;
                false
            } else {
                true
            }
        });
        !blocked
    }

    /// Visits every in-grid cell whose closed square intersects `[a, b]`,
    /// column strip by column strip. The visitor returns `false` to stop.
    pub fn for_each_supercover_cell(
        &self,
        a: Point2,
        b: Point2,
        mut visit: impl FnMut(usize, usize) -> bool,
    ) {
        let res = self.resolution;
        let (a, b) = canonical(a, b);
        let (ax, ay) = (a.x - self.origin.x, a.y - self.origin.y);
        let (bx, by) = (b.x - self.origin.x, b.y - self.origin.y);
        let (xmin, xmax) = (ax.min(bx), ax.max(bx));
        let Some((c0, c1)) = self.closed_span(xmin, xmax, self.width) else {
            return;
        };
        let dx = bx - ax;
        let y_at = |x: f64| {
            if dx == 0.0 {
                ay
            } else {
                ay + (by - ay) * ((x - ax) / dx)
            }
        };
        for col in c0..=c1 {
            let (ylo, yhi) = if dx == 0.0 {
                (ay.min(by), ay.max(by))
            } else {
                let x_lo = (col as f64 * res).max(xmin);
                let x_hi = ((col + 1) as f64 * res).min(xmax);
                let (y1, y2) = (y_at(x_lo), y_at(x_hi));
                (y1.min(y2), y1.max(y2))
            };
            if let Some((r0, r1)) = self.closed_span(ylo, yhi, self.height) {
                for row in r0..=r1 {
                    if !visit(col, row) {
                        return;
                    }
                }
            }
        }
    }
}

/// Parses a P2 (ASCII) or P5 (binary) PGM; occupancy is `gray < 128` on the
/// 0..=255 scale (other maxvals are rescaled).
pub fn load_grid(pgm: &[u8], resolution: f64, origin: Point2) -> Result<OccupancyGrid> {
    let mut pos = 0usize;
    let magic = next_token(pgm, &mut pos).ok_or_else(|| pgm_err("missing magic"))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(pgm_err(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = header_number(pgm, &mut pos, "width")?;
    let height = header_number(pgm, &mut pos, "height")?;
    let maxval = header_number(pgm, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(pgm_err("zero dimensions"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(pgm_err(format!("maxval {maxval} out of range")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| pgm_err("dimensions overflow"))?;
    let occupied = |v: usize| -> Result<bool> {
        if v > maxval {
            return Err(pgm_err(format!("sample {v} exceeds maxval {maxval}")));
        }
        Ok((v as u64) * 255 < (OCCUPIED_BELOW as u64) * (maxval as u64))
    };
    let mut cells = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let bytes_per = if maxval > 255 { 2 } else { 1 };
        let needed = count * bytes_per;
        let data = pgm
            .get(pos..pos + needed)
            .ok_or_else(|| pgm_err("truncated raster"))?;
        for chunk in data.chunks_exact(bytes_per) {
            let v = if bytes_per == 2 {
                u16::from_be_bytes([chunk[0], chunk[1]]) as usize
            } else {
                chunk[0] as usize
            };
            cells.push(occupied(v)?);
        }
    } else {
        for _ in 0..count {
            let tok = next_token(pgm, &mut pos).ok_or_else(|| pgm_err("truncated raster"))?;
            cells.push(occupied(parse_usize(tok)?)?);
        }
    }
    OccupancyGrid::new(width, height, resolution, origin, cells)
}

/// Encodes a grid as binary PGM (occupied = 0, free = 255).
pub fn encode_pgm(grid: &OccupancyGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.extend(grid.cells.iter().map(|&occ| if occ { 0u8 } else { 255u8 }));
    out
}

/// Orders endpoints so queries are exactly symmetric in floating point.
fn canonical(a: Point2, b: Point2) -> (Point2, Point2) {
    if (a.x, a.y) <= (b.x, b.y) {
        (a, b)
    } else {
        (b, a)
    }
}

fn pgm_err(msg: impl Into<String>) -> Error {
    Error::Pgm(msg.into())
}

fn header_number(buf: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(buf, pos).ok_or_else(|| pgm_err(format!("missing {what}")))?;
    parse_usize(tok)
}

fn parse_usize(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| pgm_err(format!("bad number {:?}", String::from_utf8_lossy(tok))))
}

/// Next whitespace-delimited token, skipping `#` comments.
fn next_token<'a>(buf: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < buf.len() && buf[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < buf.len() && buf[*pos] == b'#' {
            while *pos < buf.len() && buf[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= buf.len() {
        return None;
    }
    let start = *pos;
    while *pos < buf.len() && !buf[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&buf[start..*pos])
}
