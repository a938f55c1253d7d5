//! Binary masks and the Euler characteristic of the union of their closed
//! pixel squares.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;

/// Row-major boolean mask; row `j` lies at local height `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryGrid {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    /// Pixel side lengths along the anchor's two axes.
    pub pixel_size: [f64; 2],
    /// Rectangle the mask rasterizes, if any.
    pub anchor: Option<Rect>,
}

impl BinaryGrid {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument("mask dimensions must be positive".into()));
        }
        if mask.len() != width * height {
            return Err(Error::Argument(format!(
                "mask has {} cells, expected {width}×{height}",
                mask.len()
            )));
        }
        Ok(BinaryGrid {
            width,
            height,
            mask,
            pixel_size: [1.0, 1.0],
            anchor: None,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BinaryGrid::new(width, height, vec![value; width * height]).expect("positive dimensions")
    }

    /// Parses rows of `#` (true) and `.` (false); the first row is `j = 0`.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut mask = Vec::with_capacity(width * height);
        for row in rows {
            if row.chars().count() != width {
                return Err(Error::Argument("ragged mask rows".into()));
            }
            for ch in row.chars() {
                mask.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(Error::Argument(format!("unexpected mask character `{other}`"))),
                });
            }
        }
        BinaryGrid::new(width, height, mask)
    }

    pub fn with_anchor(mut self, anchor: Rect) -> Self {
        self.pixel_size = [
            2.0 * anchor.half_widths[0] / self.width as f64,
            2.0 * anchor.half_widths[1] / self.height as f64,
        ];
        self.anchor = Some(anchor);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.mask[j * self.width + i] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Quarter turn counter-clockwise.
    pub fn rotate90(&self) -> BinaryGrid {
        let (w, h) = (self.height, self.width);
        let mut out = BinaryGrid::filled(w, h, false);
        for j in 0..self.height {
            for i in 0..self.width {
                out.set(self.height - 1 - j, i, self.get(i, j));
            }
        }
        out
    }

    /// Copy embedded at offset `(di, dj)` in a larger false canvas.
    pub fn translated(&self, di: usize, dj: usize, width: usize, height: usize) -> Result<BinaryGrid> {
        if di + self.width > width || dj + self.height > height {
            return Err(Error::Argument("translated mask does not fit the canvas".into()));
        }
        let mut out = BinaryGrid::filled(width, height, false);
        for j in 0..self.height {
            for i in 0..self.width {
                out.set(i + di, j + dj, self.get(i, j));
            }
        }
        Ok(out)
    }

    /// Reads a binary PGM (P5); pixels above half the maximum are true.
    pub fn read_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::parse(0, "truncated PGM header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::parse(0, "expected a binary PGM (P5)"));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(0, format!("bad PGM header field `{s}`")))
        };
        let (width, height, max) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if max == 0 || max > 255 {
            return Err(Error::parse(0, "only 8-bit PGM is supported"));
        }
        let data = &bytes[(pos + 1).min(bytes.len())..];
        if data.len() < width * height {
            return Err(Error::parse(0, "PGM pixel data is truncated"));
        }
        let mask = data[..width * height].iter().map(|&b| 2 * b as usize > max).collect();
        BinaryGrid::new(width, height, mask)
    }

    /// Binary PGM (P5): 255 for true, 0 for false, first row on top.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
        w.write_all(&bytes)
    }
}

/// `V − E + F` of the cubical complex made of the closed unit squares of the
/// true pixels. Pixels touching only at a corner are connected through it;
/// holes are 4-connected regions of false pixels.
pub fn euler_characteristic(grid: &BinaryGrid) -> i64 {
    let (w, h) = (grid.width, grid.height);
    let at = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < w && (j as usize) < h && grid.mask[j as usize * w + i as usize]
    };
    let faces = grid.count() as i64;
    let mut vertices = 0i64;
    let mut edges = 0i64;
    for j in 0..=h as isize {
        for i in 0..=w as isize {
            // Vertex (i, j) is the lower-left corner of pixel (i, j).
            let (ll, lr, ul, ur) = (at(i - 1, j - 1), at(i, j - 1), at(i - 1, j), at(i, j));
            if ll || lr || ul || ur {
                vertices += 1;
            }
            // Horizontal edge from (i, j) to (i + 1, j), between pixels (i, j − 1) and (i, j).
            if lr || ur {
                edges += 1;
            }
            // Vertical edge from (i, j) to (i, j + 1), between pixels (i − 1, j) and (i, j).
            if ul || ur {
                edges += 1;
            }
        }
    }
    vertices - edges + faces
}
