use std::sync::Arc;

use qbm_chimera::{ChimeraTopology, QubitCoord, Side, TopologySpec, SHORE_SIZE};
use serde::{Deserialize, Serialize};

use crate::NetworkError;

/// Whether a visible layer carries data in or answers out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibleRole {
    Input,
    Output,
}

/// Physical topology and how many copies of it make up one hidden layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenLayout {
    pub topology: TopologySpec,
    #[serde(default = "one")]
    pub tile_rows: usize,
    #[serde(default = "one")]
    pub tile_cols: usize,
}

fn one() -> usize {
    1
}

impl HiddenLayout {
    pub fn single(topology: TopologySpec) -> Self {
        Self {
            topology,
            tile_rows: 1,
            tile_cols: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LayerKind {
    Visible { size: usize, role: VisibleRole },
    Hidden(HiddenLayout),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: LayerKind,
}

/// A boundary edge between two tiles of one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualCoupler {
    pub tiles: (usize, usize),
    /// Layer unit indices of the two endpoints.
    pub a: usize,
    pub b: usize,
}

/// Unit layout of a hidden layer spread over `tile_rows x tile_cols` copies
/// of one physical topology.
///
/// Units are numbered tile by tile (row-major over tiles), and within a tile
/// by ascending active qubit index.
#[derive(Debug, Clone)]
pub struct Tiling {
    topology: Arc<ChimeraTopology>,
    tile_rows: usize,
    tile_cols: usize,
    /// Active qubit indices in unit order within one tile.
    qubits: Vec<usize>,
    /// Qubit index -> position within a tile, `None` for masked qubits.
    slot: Vec<Option<usize>>,
    virtual_couplers: Vec<VirtualCoupler>,
}

impl Tiling {
    pub fn new(layout: &HiddenLayout) -> Result<Self, NetworkError> {
        if layout.tile_rows == 0 || layout.tile_cols == 0 {
            return Err(NetworkError::InvalidArgument(format!(
                "tiling needs at least one tile, got {}x{}",
                layout.tile_rows, layout.tile_cols
            )));
        }
        let topology = Arc::new(ChimeraTopology::from_spec(&layout.topology)?);
        let qubits: Vec<usize> = topology.active_qubits().collect();
        let mut slot = vec![None; topology.num_qubits()];
        for (i, &q) in qubits.iter().enumerate() {
            slot[q] = Some(i);
        }
        let mut tiling = Self {
            topology,
            tile_rows: layout.tile_rows,
            tile_cols: layout.tile_cols,
            qubits,
            slot,
            virtual_couplers: Vec::new(),
        };
        tiling.virtual_couplers = tiling.boundary_edges()?;
        Ok(tiling)
    }

    /// Edges that would be chimera inter-cell couplers if neighboring tiles
    /// were physically adjacent: high-side qubits across a vertical seam,
    /// low-side qubits across a horizontal one.
    fn boundary_edges(&self) -> Result<Vec<VirtualCoupler>, NetworkError> {
        let topo = &*self.topology;
        let (rows, cols) = (topo.rows(), topo.cols());
        let mut out = Vec::new();
        let mut join =
            |ta: usize, tb: usize, qa: QubitCoord, qb: QubitCoord| -> Result<(), NetworkError> {
                let (qa, qb) = (topo.index(qa)?, topo.index(qb)?);
                if let (Some(a), Some(b)) = (self.unit(ta, qa), self.unit(tb, qb)) {
                    out.push(VirtualCoupler {
                        tiles: (ta, tb),
                        a,
                        b,
                    });
                }
                Ok(())
            };
        let coord = |row, col, side, offset| QubitCoord {
            row,
            col,
            side,
            offset,
        };
        for tr in 0..self.tile_rows {
            for tc in 0..self.tile_cols {
                let t = tr * self.tile_cols + tc;
                if tc + 1 < self.tile_cols {
                    for r in 0..rows {
                        for k in 0..SHORE_SIZE {
                            join(
                                t,
                                t + 1,
                                coord(r, cols - 1, Side::High, k),
                                coord(r, 0, Side::High, k),
                            )?;
                        }
                    }
                }
                if tr + 1 < self.tile_rows {
                    for c in 0..cols {
                        for k in 0..SHORE_SIZE {
                            join(
                                t,
                                t + self.tile_cols,
                                coord(rows - 1, c, Side::Low, k),
                                coord(0, c, Side::Low, k),
                            )?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn topology(&self) -> &Arc<ChimeraTopology> {
        &self.topology
    }

    pub fn num_tiles(&self) -> usize {
        self.tile_rows * self.tile_cols
    }

    pub fn tile_rows(&self) -> usize {
        self.tile_rows
    }

    pub fn tile_cols(&self) -> usize {
        self.tile_cols
    }

    pub fn units_per_tile(&self) -> usize {
        self.qubits.len()
    }

    pub fn num_units(&self) -> usize {
        self.num_tiles() * self.units_per_tile()
    }

    /// `(tile, qubit)` of a unit.
    pub fn locate(&self, unit: usize) -> (usize, usize) {
        let n = self.units_per_tile();
        (unit / n, self.qubits[unit % n])
    }

    /// Unit index of qubit `q` in tile `t`, `None` if the qubit is masked.
    pub fn unit(&self, tile: usize, q: usize) -> Option<usize> {
        self.slot
            .get(q)
            .copied()
            .flatten()
            .map(|s| tile * self.units_per_tile() + s)
    }

    /// Active qubits of one tile in unit order.
    pub fn tile_qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn virtual_couplers(&self) -> &[VirtualCoupler] {
        &self.virtual_couplers
    }
}
