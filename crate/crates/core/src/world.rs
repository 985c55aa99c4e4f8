//! Ground-truth world grids and the text format they are stored in.
//!
//! A world file is `width height cell_size` on the first line followed by
//! exactly `height` rows of `#` (occupied), `.` (free) and a single `S`
//! (free start cell). Row 0 of the body is the maximum-y row, so the file
//! reads like a map with y pointing up.

use thiserror::Error;

use crate::geom::Pose;
use crate::scalar::Real;

/// Grid cell index `(ix, iy)`; `iy` grows with world y.
pub type Cell = (usize, usize);

#[derive(Debug, Error, PartialEq)]
pub enum WorldParseError {
    #[error("line {line}: malformed header: {reason}")]
    Header { line: usize, reason: String },
    #[error("line {line}: row has {got} cells, expected {expected}")]
    RaggedRow { line: usize, got: usize, expected: usize },
    #[error("line {line}: unknown cell character {ch:?}")]
    UnknownChar { line: usize, ch: char },
    #[error("line {line}: second start marker (exactly one 'S' allowed)")]
    DuplicateStart { line: usize },
    #[error("line {line}: no start marker 'S' in any row")]
    MissingStart { line: usize },
    #[error("line {line}: expected {expected} rows, found {got}")]
    WrongRowCount { line: usize, expected: usize, got: usize },
    #[error("line {line}: unexpected content after the grid body")]
    TrailingContent { line: usize },
}

/// Static ground-truth occupancy of the simulated environment.
#[derive(Debug, Clone)]
pub struct WorldGrid<S> {
    width: usize,
    height: usize,
    cell_size: S,
    /// Row-major, `true` = occupied.
    occupied: Vec<bool>,
    start: Pose<S>,
}

impl<S: Real> WorldGrid<S> {
    /// Parse a world file.
    pub fn parse(text: &str) -> Result<Self, WorldParseError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| WorldParseError::Header { line: 1, reason: "empty file".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(WorldParseError::Header {
                line: 1,
                reason: format!("expected 'width height cell_size', got {} fields", fields.len()),
            });
        }
        let width: usize = fields[0].parse().map_err(|_| WorldParseError::Header {
            line: 1,
            reason: format!("bad width {:?}", fields[0]),
        })?;
        let height: usize = fields[1].parse().map_err(|_| WorldParseError::Header {
            line: 1,
            reason: format!("bad height {:?}", fields[1]),
        })?;
        let cell_size_f: f64 = fields[2].parse().map_err(|_| WorldParseError::Header {
            line: 1,
            reason: format!("bad cell_size {:?}", fields[2]),
        })?;
        if width == 0 || height == 0 || !(cell_size_f > 0.0) {
            return Err(WorldParseError::Header {
                line: 1,
                reason: "width and height must be >= 1 and cell_size > 0".into(),
            });
        }
        let cell_size = S::val(cell_size_f);

        let mut occupied = vec![false; width * height];
        let mut start_cell: Option<Cell> = None;
        let mut rows_read = 0usize;
        let mut last_line = 1usize;
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let row = raw.strip_suffix('\r').unwrap_or(raw);
            if rows_read == height {
                if row.is_empty() {
                    continue;
                }
                return Err(WorldParseError::TrailingContent { line: line_no });
            }
            let n_chars = row.chars().count();
            if n_chars != width {
                return Err(WorldParseError::RaggedRow {
                    line: line_no,
                    got: n_chars,
                    expected: width,
                });
            }
            // Row 0 of the body is the maximum-y row.
            let iy = height - 1 - rows_read;
            for (ix, ch) in row.chars().enumerate() {
                match ch {
                    '#' => occupied[iy * width + ix] = true,
                    '.' => {}
                    'S' => {
                        if start_cell.is_some() {
                            return Err(WorldParseError::DuplicateStart { line: line_no });
                        }
                        start_cell = Some((ix, iy));
                    }
                    other => {
                        return Err(WorldParseError::UnknownChar { line: line_no, ch: other })
                    }
                }
            }
            rows_read += 1;
            last_line = line_no;
        }
        if rows_read != height {
            return Err(WorldParseError::WrongRowCount {
                line: last_line,
                expected: height,
                got: rows_read,
            });
        }
        let (sx, sy) = start_cell.ok_or(WorldParseError::MissingStart { line: last_line })?;
        let half = cell_size * S::half();
        let start = Pose::new(
            S::from_count(sx) * cell_size + half,
            S::from_count(sy) * cell_size + half,
            S::zero(),
        );
        Ok(WorldGrid { width, height, cell_size, occupied, start })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> S {
        self.cell_size
    }

    pub fn start(&self) -> Pose<S> {
        self.start
    }

    #[inline]
    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.0 < self.width && cell.1 < self.height
    }

    #[inline]
    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupied[cell.1 * self.width + cell.0]
    }

    /// Cell containing a world point, if inside the grid.
    pub fn cell_of(&self, x: S, y: S) -> Option<Cell> {
        if x < S::zero() || y < S::zero() {
            return None;
        }
        let ix = (x / self.cell_size).floor().to_usize()?;
        let iy = (y / self.cell_size).floor().to_usize()?;
        if ix < self.width && iy < self.height {
            Some((ix, iy))
        } else {
            None
        }
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, cell: Cell) -> (S, S) {
        let half = self.cell_size * S::half();
        (
            S::from_count(cell.0) * self.cell_size + half,
            S::from_count(cell.1) * self.cell_size + half,
        )
    }

    /// Free cells 4-connected to the start cell; this is the denominator of
    /// every coverage percentage.
    pub fn reachable_free_mask(&self) -> Vec<bool> {
        let mut reachable = vec![false; self.width * self.height];
        let start = self
            .cell_of(self.start.x, self.start.y)
            .expect("start inside grid");
        let mut stack = vec![start];
        reachable[start.1 * self.width + start.0] = true;
        while let Some((ix, iy)) = stack.pop() {
            let mut push = |nx: usize, ny: usize, stack: &mut Vec<Cell>| {
                let idx = ny * self.width + nx;
                if !reachable[idx] && !self.occupied[idx] {
                    reachable[idx] = true;
                    stack.push((nx, ny));
                }
            };
            if ix > 0 {
                push(ix - 1, iy, &mut stack);
            }
            if ix + 1 < self.width {
                push(ix + 1, iy, &mut stack);
            }
            if iy > 0 {
                push(ix, iy - 1, &mut stack);
            }
            if iy + 1 < self.height {
                push(ix, iy + 1, &mut stack);
            }
        }
        reachable
    }

    /// Construct directly from parts; used by tests that build small worlds.
    pub fn from_parts(
        width: usize,
        height: usize,
        cell_size: S,
        occupied: Vec<bool>,
        start: Cell,
    ) -> Self {
        assert_eq!(occupied.len(), width * height);
        assert!(!occupied[start.1 * width + start.0], "start must be free");
        let half = cell_size * S::half();
        WorldGrid {
            width,
            height,
            cell_size,
            occupied,
            start: Pose::new(
                S::from_count(start.0) * cell_size + half,
                S::from_count(start.1) * cell_size + half,
                S::zero(),
            ),
        }
    }
}
