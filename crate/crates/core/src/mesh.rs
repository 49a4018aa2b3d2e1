//! Admissible control-volume meshes and time discretizations.
//!
//! A [`Mesh`] stores only what the two-point flux scheme needs: cell measures,
//! cell centers, and the interior faces with their precomputed
//! transmissibilities `T = m_face / d_centers`. Boundary faces are not stored;
//! homogeneous Neumann conditions make their fluxes vanish.

use std::io::Write;

use crate::error::{Error, Result};

/// Relative tolerance used when checking `T = m/d`.
const TRANSMISSIBILITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    /// Lebesgue measure of the control volume (length, area or volume).
    pub measure: f64,
    /// Cell point `x_K`. Has `dim` coordinates.
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// The two cells sharing this face, `(K, L)`.
    pub cells: (usize, usize),
    /// (d-1)-dimensional measure of `K|L`.
    pub measure: f64,
    /// Distance between the cell points of `K` and `L`.
    pub distance: f64,
    pub transmissibility: f64,
}

impl Face {
    pub fn new(k: usize, l: usize, measure: f64, distance: f64) -> Self {
        Self {
            cells: (k, l),
            measure,
            distance,
            transmissibility: measure / distance,
        }
    }
}

/// Control-volume decomposition with its neighbor graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    cells: Vec<Cell>,
    faces: Vec<Face>,
    /// `adjacency[K]` lists `(L, face index)` for every `L` in `N_K`.
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// A violated admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveCellMeasure { cell: usize, measure: f64 },
    NonPositiveFaceMeasure { face: usize, measure: f64 },
    NonPositiveDistance { face: usize, distance: f64 },
    NonPositiveTransmissibility { face: usize, value: f64 },
    TransmissibilityMismatch { face: usize, stored: f64, expected: f64 },
    DegenerateFace { face: usize, cell: usize },
    DanglingCellReference { face: usize, cell: usize },
    AsymmetricAdjacency { from: usize, to: usize },
    AdjacencyFaceMismatch { cell: usize, face: usize },
    WrongCenterDimension { cell: usize, found: usize },
    CellIdMismatch { index: usize, id: usize },
}

impl Mesh {
    /// Builds a mesh from cells and interior faces, deriving the adjacency,
    /// and rejects it if it is not admissible.
    pub fn new(dim: usize, cells: Vec<Cell>, faces: Vec<Face>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!(
                "spatial dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        let n = cells.len();
        if let Some((i, f)) = faces.iter().enumerate().find(|(_, f)| f.cells.0 >= n || f.cells.1 >= n) {
            return Err(Error::InvalidArgument(format!(
                "face {i} references cell outside 0..{n}: {:?}",
                f.cells
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, f) in faces.iter().enumerate() {
            let (k, l) = f.cells;
            adjacency[k].push((l, i));
            adjacency[l].push((k, i));
        }
        let mesh = Self::from_raw_parts(dim, cells, faces, adjacency);
        let violations = mesh.validate_admissible();
        if !violations.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "mesh is not admissible: {violations:?}"
            )));
        }
        Ok(mesh)
    }

    /// Assembles a mesh without any checking. Use [`Mesh::validate_admissible`]
    /// to inspect the result.
    pub fn from_raw_parts(dim: usize, cells: Vec<Cell>, faces: Vec<Face>, adjacency: Vec<Vec<(usize, usize)>>) -> Self {
        Self {
            dim,
            cells,
            faces,
            adjacency,
        }
    }

    #[allow(clippy::type_complexity)]
    pub fn into_raw_parts(self) -> (usize, Vec<Cell>, Vec<Face>, Vec<Vec<(usize, usize)>>) {
        (self.dim, self.cells, self.faces, self.adjacency)
    }

    /// Uniform partition of `[0, length]` into `n_cells` intervals.
    pub fn uniform_1d(length: f64, n_cells: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "domain length must be positive and finite (got {length})"
            )));
        }
        if n_cells == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one cell".into()));
        }
        let h = length / n_cells as f64;
        let cells = (0..n_cells)
            .map(|i| Cell {
                id: i,
                measure: h,
                center: vec![(i as f64 + 0.5) * h],
            })
            .collect();
        // In 1D the face measure is the 0-dimensional measure of a point.
        let faces = (1..n_cells).map(|i| Face::new(i - 1, i, 1.0, h)).collect();
        Self::new(1, cells, faces)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn measure(&self, cell: usize) -> f64 {
        self.cells[cell].measure
    }

    pub fn measures(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|c| c.measure)
    }

    /// `(L, face index)` pairs for the neighbors of `cell`.
    pub fn neighbors(&self, cell: usize) -> &[(usize, usize)] {
        &self.adjacency[cell]
    }

    /// `size(M)`: the largest cell measure.
    pub fn size(&self) -> f64 {
        self.measures().fold(0.0, f64::max)
    }

    pub fn total_measure(&self) -> f64 {
        self.measures().sum()
    }

    /// Lists every violated admissibility condition; empty for a valid mesh.
    pub fn validate_admissible(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.cells.len();
        for (i, c) in self.cells.iter().enumerate() {
            if c.id != i {
                out.push(Violation::CellIdMismatch { index: i, id: c.id });
            }
            if !(c.measure > 0.0) {
                out.push(Violation::NonPositiveCellMeasure {
                    cell: i,
                    measure: c.measure,
                });
            }
            if c.center.len() != self.dim {
                out.push(Violation::WrongCenterDimension {
                    cell: i,
                    found: c.center.len(),
                });
            }
        }
        for (i, f) in self.faces.iter().enumerate() {
            let (k, l) = f.cells;
            for c in [k, l] {
                if c >= n {
                    out.push(Violation::DanglingCellReference { face: i, cell: c });
                }
            }
            if k == l {
                out.push(Violation::DegenerateFace { face: i, cell: k });
            }
            if !(f.measure > 0.0) {
                out.push(Violation::NonPositiveFaceMeasure {
                    face: i,
                    measure: f.measure,
                });
            }
            if !(f.distance > 0.0) {
                out.push(Violation::NonPositiveDistance {
                    face: i,
                    distance: f.distance,
                });
            }
            if !(f.transmissibility > 0.0) {
                out.push(Violation::NonPositiveTransmissibility {
                    face: i,
                    value: f.transmissibility,
                });
            } else if f.measure > 0.0 && f.distance > 0.0 {
                let expected = f.measure / f.distance;
                if (f.transmissibility - expected).abs() > TRANSMISSIBILITY_RTOL * expected {
                    out.push(Violation::TransmissibilityMismatch {
                        face: i,
                        stored: f.transmissibility,
                        expected,
                    });
                }
            }
        }
        for (k, list) in self.adjacency.iter().enumerate() {
            for &(l, fi) in list {
                let symmetric = self
                    .adjacency
                    .get(l)
                    .is_some_and(|back| back.iter().any(|&(kk, ff)| kk == k && ff == fi));
                if !symmetric {
                    out.push(Violation::AsymmetricAdjacency { from: k, to: l });
                }
                let matches_face = self
                    .faces
                    .get(fi)
                    .is_some_and(|f| f.cells == (k, l) || f.cells == (l, k));
                if !matches_face {
                    out.push(Violation::AdjacencyFaceMismatch { cell: k, face: fi });
                }
            }
        }
        if self.adjacency.len() != n {
            out.push(Violation::AdjacencyFaceMismatch {
                cell: self.adjacency.len(),
                face: usize::MAX,
            });
        }
        out
    }

    /// Writes `cell_id,center,measure` rows (center coordinates joined by `;`
    /// for dimensions above one).
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cell_id", "center", "measure"])?;
        for c in &self.cells {
            let center = c.center.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
            w.write_record([c.id.to_string(), center, format!("{:e}", c.measure)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn ensure_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n_cells() {
            return Err(Error::Mismatch(format!(
                "{what} has {len} entries but the mesh has {} cells",
                self.n_cells()
            )));
        }
        Ok(())
    }
}

/// Strictly increasing time levels `0 = t_0 < ... < t_{N+1} = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    levels: Vec<f64>,
}

impl TimeGrid {
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument("a time grid needs at least two levels".into()));
        }
        if levels[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time grid must start at 0 (got {})",
                levels[0]
            )));
        }
        if let Some(w) = levels.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "time levels must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if !levels[levels.len() - 1].is_finite() {
            return Err(Error::InvalidArgument("final time must be finite".into()));
        }
        Ok(Self { levels })
    }

    pub fn uniform(final_time: f64, n_steps: usize) -> Result<Self> {
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive (got {final_time})"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        let levels = (0..=n_steps)
            .map(|n| {
                if n == n_steps {
                    final_time
                } else {
                    n as f64 * final_time / n_steps as f64
                }
            })
            .collect();
        Self::from_levels(levels)
    }

    /// Geometrically growing steps `t0, t0*growth, ...`; the last step is
    /// shortened so that the final level is exactly `final_time`.
    pub fn ramped(initial_step: f64, growth: f64, final_time: f64) -> Result<Self> {
        if !(initial_step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "initial step must be positive (got {initial_step})"
            )));
        }
        if !(growth >= 1.0) || !growth.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "growth factor must be >= 1 (got {growth})"
            )));
        }
        if !(final_time > initial_step) || !final_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "final time {final_time} must exceed the initial step {initial_step}"
            )));
        }
        let mut levels = vec![0.0];
        let mut t = 0.0;
        let mut step = initial_step;
        loop {
            let next = t + step;
            // Absorb a remainder that is only round-off.
            if next >= final_time || final_time - next <= 1e-9 * step {
                levels.push(final_time);
                break;
            }
            levels.push(next);
            t = next;
            step *= growth;
        }
        Self::from_levels(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of time levels, `N + 2`.
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_steps(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    /// `t^(n+1) - t^(n)`.
    pub fn step(&self, n: usize) -> f64 {
        self.levels[n + 1] - self.levels[n]
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_step(&self) -> f64 {
        self.steps().fold(0.0, f64::max)
    }
}
