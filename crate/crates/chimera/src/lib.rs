//! Chimera qubit graphs.
//!
//! A chimera graph is a `rows x cols` grid of cells. Each cell holds eight
//! qubits split into a low side (offsets 0-3) and a high side (offsets 4-7)
//! joined as a complete bipartite K4,4. Low-side qubits couple vertically to
//! the same offset in the cell below; high-side qubits couple horizontally to
//! the same offset in the cell to the right.
//!
//! Qubits are numbered row-major over cells, low side before high side:
//! `index = ((row * cols + col) * 2 + side) * 4 + offset`.
//!
//! Dead qubits are handled with an active mask, so indices never shift when
//! the mask changes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Qubits per cell side.
pub const SHORE_SIZE: usize = 4;
/// Qubits per cell.
pub const CELL_SIZE: usize = 2 * SHORE_SIZE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("grid must have at least one cell row and column, got {rows}x{cols}")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("qubit index {index} out of range (topology has {count} qubits)")]
    QubitOutOfRange { index: usize, count: usize },
    #[error("qubit {0} is inactive")]
    InactiveQubit(usize),
    #[error("coordinate ({row}, {col}, offset {offset}) outside a {rows}x{cols} grid")]
    CoordOutOfRange {
        row: usize,
        col: usize,
        offset: usize,
        rows: usize,
        cols: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Low,
    High,
}

/// Position of a qubit inside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitCoord {
    pub row: usize,
    pub col: usize,
    pub side: Side,
    /// Position within the side, `0..SHORE_SIZE`.
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplerKind {
    Intra,
    Inter,
}

/// An edge of the graph. Always stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coupler {
    pub a: usize,
    pub b: usize,
    pub kind: CouplerKind,
}

/// Serializable description of a topology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub inactive: Vec<usize>,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            inactive: Vec::new(),
        }
    }
}

/// Closed-form `(intra, inter)` coupler counts of a fully active grid.
pub fn full_coupler_counts(rows: usize, cols: usize) -> (usize, usize) {
    let intra = SHORE_SIZE * SHORE_SIZE * rows * cols;
    let inter =
        SHORE_SIZE * rows.saturating_sub(1) * cols + SHORE_SIZE * rows * cols.saturating_sub(1);
    (intra, inter)
}

/// An immutable chimera graph with an active-qubit mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChimeraTopology {
    rows: usize,
    cols: usize,
    active: Vec<bool>,
    inactive: Vec<usize>,
    couplers: Vec<Coupler>,
    /// Per qubit: `(neighbor, coupler index)` over active couplers.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl ChimeraTopology {
    pub fn new(rows: usize, cols: usize, inactive: &[usize]) -> Result<Self, TopologyError> {
        if rows == 0 || cols == 0 {
            return Err(TopologyError::EmptyGrid { rows, cols });
        }
        let count = rows * cols * CELL_SIZE;
        let mut active = vec![true; count];
        for &q in inactive {
            if q >= count {
                return Err(TopologyError::QubitOutOfRange { index: q, count });
            }
            active[q] = false;
        }
        let inactive: Vec<usize> = (0..count).filter(|&q| !active[q]).collect();

        let mut couplers = Vec::new();
        let mut adjacency = vec![Vec::new(); count];
        for c in full_edges(rows, cols) {
            if active[c.a] && active[c.b] {
                let id = couplers.len();
                adjacency[c.a].push((c.b, id));
                adjacency[c.b].push((c.a, id));
                couplers.push(c);
            }
        }
        Ok(Self {
            rows,
            cols,
            active,
            inactive,
            couplers,
            adjacency,
        })
    }

    pub fn from_spec(spec: &TopologySpec) -> Result<Self, TopologyError> {
        Self::new(spec.rows, spec.cols, &spec.inactive)
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            rows: self.rows,
            cols: self.cols,
            inactive: self.inactive.clone(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total qubit count, masked qubits included.
    pub fn num_qubits(&self) -> usize {
        self.active.len()
    }

    pub fn num_active(&self) -> usize {
        self.active.len() - self.inactive.len()
    }

    pub fn is_active(&self, q: usize) -> bool {
        self.active.get(q).copied().unwrap_or(false)
    }

    pub fn active_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(q, _)| q)
    }

    pub fn inactive(&self) -> &[usize] {
        &self.inactive
    }

    /// Active couplers in canonical order: cells row-major, and within a
    /// cell the 16 intra couplers, then the downward and rightward ones.
    pub fn couplers(&self) -> &[Coupler] {
        &self.couplers
    }

    pub fn count_couplers(&self, kind: CouplerKind) -> usize {
        self.couplers.iter().filter(|c| c.kind == kind).count()
    }

    /// Index into [`couplers`](Self::couplers) of the edge joining `a` and `b`.
    pub fn coupler_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, id)| id)
    }

    /// `(neighbor, coupler index)` pairs for `q`. Empty for inactive or
    /// out-of-range qubits.
    pub fn adjacency(&self, q: usize) -> &[(usize, usize)] {
        self.adjacency.get(q).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn neighbors(&self, q: usize) -> Result<Vec<usize>, TopologyError> {
        self.check_active(q)?;
        Ok(self.adjacency[q].iter().map(|&(n, _)| n).collect())
    }

    pub fn check_active(&self, q: usize) -> Result<(), TopologyError> {
        if q >= self.num_qubits() {
            return Err(TopologyError::QubitOutOfRange {
                index: q,
                count: self.num_qubits(),
            });
        }
        if !self.active[q] {
            return Err(TopologyError::InactiveQubit(q));
        }
        Ok(())
    }

    pub fn coord(&self, q: usize) -> Result<QubitCoord, TopologyError> {
        if q >= self.num_qubits() {
            return Err(TopologyError::QubitOutOfRange {
                index: q,
                count: self.num_qubits(),
            });
        }
        let cell = q / CELL_SIZE;
        let within = q % CELL_SIZE;
        Ok(QubitCoord {
            row: cell / self.cols,
            col: cell % self.cols,
            side: if within < SHORE_SIZE {
                Side::Low
            } else {
                Side::High
            },
            offset: within % SHORE_SIZE,
        })
    }

    pub fn index(&self, c: QubitCoord) -> Result<usize, TopologyError> {
        if c.row >= self.rows || c.col >= self.cols || c.offset >= SHORE_SIZE {
            return Err(TopologyError::CoordOutOfRange {
                row: c.row,
                col: c.col,
                offset: c.offset,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(linear_index(self.cols, c))
    }

    /// A maximal set of pairwise disjoint active couplers, chosen greedily in
    /// canonical order. On a fully active grid this is a perfect matching of
    /// intra-cell couplers.
    pub fn disjoint_couplers(&self) -> Vec<(usize, usize)> {
        let mut used = vec![false; self.num_qubits()];
        let mut out = Vec::new();
        for c in &self.couplers {
            if !used[c.a] && !used[c.b] {
                used[c.a] = true;
                used[c.b] = true;
                out.push((c.a, c.b));
            }
        }
        out
    }
}

impl fmt::Display for ChimeraTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "chimera {}x{} ({} of {} qubits active, {} couplers)",
            self.rows,
            self.cols,
            self.num_active(),
            self.num_qubits(),
            self.couplers.len()
        )
    }
}

fn linear_index(cols: usize, c: QubitCoord) -> usize {
    let side = match c.side {
        Side::Low => 0,
        Side::High => 1,
    };
    ((c.row * cols + c.col) * 2 + side) * SHORE_SIZE + c.offset
}

fn full_edges(rows: usize, cols: usize) -> Vec<Coupler> {
    let at = |row, col, side, offset| {
        linear_index(
            cols,
            QubitCoord {
                row,
                col,
                side,
                offset,
            },
        )
    };
    let mut edges = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            for i in 0..SHORE_SIZE {
                for j in 0..SHORE_SIZE {
                    edges.push(Coupler {
                        a: at(row, col, Side::Low, i),
                        b: at(row, col, Side::High, j),
                        kind: CouplerKind::Intra,
                    });
                }
            }
            if row + 1 < rows {
                for k in 0..SHORE_SIZE {
                    edges.push(Coupler {
                        a: at(row, col, Side::Low, k),
                        b: at(row + 1, col, Side::Low, k),
                        kind: CouplerKind::Inter,
                    });
                }
            }
            if col + 1 < cols {
                for k in 0..SHORE_SIZE {
                    edges.push(Coupler {
                        a: at(row, col, Side::High, k),
                        b: at(row, col + 1, Side::High, k),
                        kind: CouplerKind::Inter,
                    });
                }
            }
        }
    }
    edges
}
