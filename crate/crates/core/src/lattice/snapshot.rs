//! Text and binary snapshots of a lattice.
//!
//! Text: one line per row, top row first, `A` active, `o` occupied, `.`
//! empty. Binary: magic `PKL1`, then width, height, origin x, origin y as
//! little-endian u32, then 2 bits per cell (0 empty, 1 occupied, 2 active),
//! row-major from the bottom row, four cells per byte starting at the low
//! bits. Stamps and generation are not stored.

use thiserror::Error;

use super::{CellState, Lattice, LatticeError};

pub const MAGIC: &[u8; 4] = b"PKL1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("bad magic")]
    BadMagic,
    #[error("truncated snapshot")]
    Truncated,
    #[error("invalid cell code {0}")]
    BadCell(u8),
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("unexpected character {0:?}")]
    BadChar(char),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub fn to_text(l: &Lattice) -> String {
    let mut s = String::with_capacity((l.width() + 1) * l.height());
    for y in (0..l.height()).rev() {
        for x in 0..l.width() {
            s.push(match l.get(x, y) {
                CellState::Active => 'A',
                CellState::Occupied => 'o',
                CellState::Empty => '.',
            });
        }
        s.push('\n');
    }
    s
}

/// Parses a text grid; `origin` defaults to the center.
pub fn from_text(text: &str, origin: Option<(usize, usize)>) -> Result<Lattice, SnapshotError> {
    let rows: Vec<&str> = text.lines().filter(|r| !r.is_empty()).collect();
    let height = rows.len();
    let width = rows.first().map_or(0, |r| r.chars().count());
    let origin = origin.unwrap_or((width / 2, height / 2));
    let mut l = Lattice::with_origin(width, height, origin)?;
    for (i, row) in rows.iter().enumerate() {
        let y = height - 1 - i;
        let got = row.chars().count();
        if got != width {
            return Err(SnapshotError::RaggedRow {
                row: i,
                got,
                expected: width,
            });
        }
        for (x, c) in row.chars().enumerate() {
            let state = match c {
                'A' => CellState::Active,
                'o' => CellState::Occupied,
                '.' => CellState::Empty,
                other => return Err(SnapshotError::BadChar(other)),
            };
            l.set(x, y, state);
        }
    }
    Ok(l)
}

pub fn to_binary(l: &Lattice) -> Vec<u8> {
    let cells = l.width() * l.height();
    let mut out = Vec::with_capacity(20 + cells.div_ceil(4));
    out.extend_from_slice(MAGIC);
    for v in [l.width(), l.height(), l.origin().0, l.origin().1] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let mut packed = vec![0u8; cells.div_ceil(4)];
    for y in 0..l.height() {
        for x in 0..l.width() {
            let i = y * l.width() + x;
            let code = match l.get(x, y) {
                CellState::Empty => 0u8,
                CellState::Occupied => 1,
                CellState::Active => 2,
            };
            packed[i / 4] |= code << (2 * (i % 4));
        }
    }
    out.extend_from_slice(&packed);
    out
}

pub fn from_binary(bytes: &[u8]) -> Result<Lattice, SnapshotError> {
    if bytes.len() < 4 {
        return Err(SnapshotError::Truncated);
    }
    if &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < 20 {
        return Err(SnapshotError::Truncated);
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes")) as usize;
    let (width, height) = (field(0), field(1));
    let mut l = Lattice::with_origin(width, height, (field(2), field(3)))?;
    let cells = width * height;
    let body = &bytes[20..];
    if body.len() < cells.div_ceil(4) {
        return Err(SnapshotError::Truncated);
    }
    for i in 0..cells {
        let code = body[i / 4] >> (2 * (i % 4)) & 3;
        let state = match code {
            0 => CellState::Empty,
            1 => CellState::Occupied,
            2 => CellState::Active,
            c => return Err(SnapshotError::BadCell(c)),
        };
        l.set(i % width, i / width, state);
    }
    Ok(l)
}
