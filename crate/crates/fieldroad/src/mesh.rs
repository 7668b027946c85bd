//! Uniform Cartesian finite-volume mesh. Field cells are closed boxes of size
//! hx x hy indexed (i, j) with j = 0 along the road; road cells are the
//! matching intervals of length hx. The flattened unknown ordering is field
//! cells row-major (index j * nx + i) followed by road cells, and every
//! assembly loop in the crate walks cells in that order so summations are
//! reproducible bit for bit.

use crate::error::{Error, Result};
use crate::model::{Geometry, InitialData};

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub geometry: Geometry,
}

/// Discrete state: field averages `v` (length nx * ny, row-major with j = 0
/// first) and road averages `u` (length nx), tagged with the simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

impl State {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self { t: 0.0, v: vec![0.0; mesh.nx * mesh.ny], u: vec![0.0; mesh.nx] }
    }
}

/// Interior face between two cells. Boundary edges carry no flux (zero
/// Neumann) and are not represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    /// Between field cells (i, j) and (i + 1, j).
    FieldX { i: usize, j: usize },
    /// Between field cells (i, j) and (i, j + 1).
    FieldY { i: usize, j: usize },
    /// Between road cells i and i + 1.
    Road { i: usize },
}

impl Mesh {
    pub fn build(geometry: Geometry, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!("mesh must have nx, ny >= 1, got {nx} x {ny}")));
        }
        let hx = geometry.length_road() / nx as f64;
        let hy = geometry.l / ny as f64;
        Ok(Self { nx, ny, hx, hy, geometry })
    }

    pub fn n_field(&self) -> usize {
        self.nx * self.ny
    }

    /// Total unknown count (field cells then road cells).
    pub fn n_unknowns(&self) -> usize {
        self.n_field() + self.nx
    }

    pub fn field_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy
    }

    /// Left x-edge of field/road column i.
    pub fn x_edge(&self, i: usize) -> f64 {
        self.geometry.x_min + i as f64 * self.hx
    }

    /// Bottom y-edge of field row j.
    pub fn y_edge(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    /// Geometric transmissibility of an interior face: face length over
    /// center distance. None for faces that do not exist on this mesh; the
    /// zero-flux boundary carries no transmissibility.
    pub fn transmissibility(&self, face: Face) -> Option<f64> {
        match face {
            Face::FieldX { i, j } => {
                (i + 1 < self.nx && j < self.ny).then(|| self.hy / self.hx)
            }
            Face::FieldY { i, j } => {
                (i < self.nx && j + 1 < self.ny).then(|| self.hx / self.hy)
            }
            Face::Road { i } => (i + 1 < self.nx).then(|| 1.0 / self.hx),
        }
    }

    /// All interior faces in a fixed deterministic order: x-faces row by row,
    /// then y-faces, then road faces.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        let xs = (0..self.ny).flat_map(move |j| {
            (0..self.nx.saturating_sub(1)).map(move |i| Face::FieldX { i, j })
        });
        let ys = (0..self.ny.saturating_sub(1)).flat_map(move |j| {
            (0..self.nx).map(move |i| Face::FieldY { i, j })
        });
        let roads = (0..self.nx.saturating_sub(1)).map(move |i| Face::Road { i });
        xs.chain(ys).chain(roads)
    }

    /// Projects piecewise-constant initial data onto cell averages by exact
    /// rectangle intersection, so the discrete mass equals the continuous
    /// mass up to rounding from step zero.
    pub fn project_initial(&self, data: &InitialData) -> State {
        let mut state = State::zeros(self);
        let overlap = |lo: f64, hi: f64, a: f64, b: f64| -> f64 { (hi.min(b) - lo.max(a)).max(0.0) };
        for piece in &data.field {
            let [yc, yd] = piece.y_interval;
            for j in 0..self.ny {
                let y0 = self.y_edge(j);
                let oy = overlap(y0, y0 + self.hy, yc, yd);
                if oy == 0.0 {
                    continue;
                }
                for i in 0..self.nx {
                    let x0 = self.x_edge(i);
                    let ox: f64 = piece
                        .x_intervals
                        .iter()
                        .map(|w| overlap(x0, x0 + self.hx, w[0], w[1]))
                        .sum();
                    if ox > 0.0 {
                        state.v[self.field_index(i, j)] += piece.value * ox * oy / (self.hx * self.hy);
                    }
                }
            }
        }
        for piece in &data.road {
            for i in 0..self.nx {
                let x0 = self.x_edge(i);
                let ox: f64 = piece
                    .x_intervals
                    .iter()
                    .map(|w| overlap(x0, x0 + self.hx, w[0], w[1]))
                    .sum();
                if ox > 0.0 {
                    state.u[i] += piece.value * ox / self.hx;
                }
            }
        }
        state
    }

    /// Discrete total mass: sum of field averages times hx hy plus road
    /// averages times hx.
    pub fn mass(&self, state: &State) -> f64 {
        self.check_state(state);
        let vol = self.cell_volume();
        let mv: f64 = state.v.iter().sum::<f64>() * vol;
        let mu: f64 = state.u.iter().sum::<f64>() * self.hx;
        mv + mu
    }

    /// Weighted mass (1/alpha) int v + (1/beta) int u; the quantity the
    /// scheme conserves exactly for all exponent pairs.
    pub fn weighted_mass(&self, state: &State, alpha: f64, beta: f64) -> f64 {
        self.check_state(state);
        let vol = self.cell_volume();
        let mv: f64 = state.v.iter().sum::<f64>() * vol;
        let mu: f64 = state.u.iter().sum::<f64>() * self.hx;
        mv / alpha + mu / beta
    }

    pub fn check_state(&self, state: &State) {
        assert_eq!(state.v.len(), self.n_field(), "field vector length mismatch");
        assert_eq!(state.u.len(), self.nx, "road vector length mismatch");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, FieldPiece, RoadPiece};

    fn reference_mesh(nx: usize, ny: usize) -> Mesh {
        let (geom, _) = preset(1).unwrap();
        Mesh::build(geom, nx, ny).unwrap()
    }

    #[test]
    fn spacings_and_counts() {
        let mesh = reference_mesh(4, 2);
        assert_eq!(mesh.hx, 20.0);
        assert_eq!(mesh.hy, 10.0);
        assert_eq!(mesh.n_field(), 8);
        assert_eq!(mesh.n_unknowns(), 12);
        assert_eq!(mesh.field_index(3, 1), 7);
    }

    #[test]
    fn degenerate_mesh_rejected() {
        let (geom, _) = preset(1).unwrap();
        assert!(Mesh::build(geom, 0, 2).is_err());
        assert!(Mesh::build(geom, 2, 0).is_err());
    }

    #[test]
    fn transmissibility_values() {
        // hx = 20, hy = 10: faces measure hy/hx, hx/hy, 1/hx.
        let mesh = reference_mesh(4, 2);
        assert_eq!(mesh.transmissibility(Face::FieldX { i: 0, j: 0 }), Some(0.5));
        assert_eq!(mesh.transmissibility(Face::FieldY { i: 0, j: 0 }), Some(2.0));
        assert_eq!(mesh.transmissibility(Face::Road { i: 2 }), Some(0.05));
        // Last column / top row faces would cross the boundary.
        assert_eq!(mesh.transmissibility(Face::FieldX { i: 3, j: 0 }), None);
        assert_eq!(mesh.transmissibility(Face::FieldY { i: 0, j: 1 }), None);
        assert_eq!(mesh.transmissibility(Face::Road { i: 3 }), None);
    }

    #[test]
    fn face_enumeration_matches_counts() {
        let mesh = reference_mesh(4, 3);
        let faces: Vec<Face> = mesh.faces().collect();
        // (nx-1)*ny x-faces + nx*(ny-1) y-faces + (nx-1) road faces.
        assert_eq!(faces.len(), 3 * 3 + 4 * 2 + 3);
        assert!(mesh.faces().all(|f| mesh.transmissibility(f).is_some()));
    }

    #[test]
    fn single_cell_mesh_has_no_faces() {
        let mesh = reference_mesh(1, 1);
        assert_eq!(mesh.faces().count(), 0);
    }

    #[test]
    fn projection_exact_on_aligned_cells() {
        // On the 160 x 40 reference mesh (hx = hy = 0.5) every block edge is
        // a cell edge, so covered cells read exactly 100.
        let mesh = reference_mesh(160, 40);
        let (geom, data) = preset(1).unwrap();
        let state = mesh.project_initial(&data);
        // Cell centered at x = 3.75, y = 8.75 sits inside [2.5,5] x [7.5,10]:
        // i = (3.5 - (-40))/0.5 = 87, j = 17.
        assert_eq!(state.v[mesh.field_index(87, 17)], 100.0);
        // Cell at x in [0, 0.5] is outside every block.
        assert_eq!(state.v[mesh.field_index(80, 17)], 0.0);
        let _ = geom;
    }

    #[test]
    fn projection_splits_partial_overlap() {
        let geom = Geometry::new(1.0, 0.0, 1.0).unwrap();
        let mesh = Mesh::build(geom, 2, 1).unwrap();
        let data = InitialData {
            field: vec![],
            road: vec![RoadPiece { x_intervals: vec![[0.0, 0.25]], value: 8.0 }],
        };
        let state = mesh.project_initial(&data);
        // Half of the first cell is covered: 8 * 0.25 / 0.5 = 4.
        assert_eq!(state.u, vec![4.0, 0.0]);
    }

    #[test]
    fn projection_conserves_mass_on_unaligned_meshes() {
        for id in [1, 2] {
            let (geom, data) = preset(id).unwrap();
            for (nx, ny) in [(7, 3), (13, 5), (160, 40), (33, 11)] {
                let mesh = Mesh::build(geom, nx, ny).unwrap();
                let state = mesh.project_initial(&data);
                let m = mesh.mass(&state);
                let m0 = data.initial_mass(&geom);
                assert!(
                    (m - m0).abs() <= 1e-12 * m0,
                    "preset {id} on {nx}x{ny}: discrete mass {m} vs {m0}"
                );
                let bound = 100.0 * 2.0;
                assert!(state.v.iter().all(|&v| (0.0..=bound).contains(&v)));
                assert!(state.u.iter().all(|&u| (0.0..=bound).contains(&u)));
            }
        }
    }

    #[test]
    fn projection_of_overlapping_pieces_adds() {
        let geom = Geometry::new(2.0, 0.0, 2.0).unwrap();
        let mesh = Mesh::build(geom, 1, 1).unwrap();
        let data = InitialData {
            field: vec![
                FieldPiece { x_intervals: vec![[0.0, 2.0]], y_interval: [0.0, 2.0], value: 1.5 },
                FieldPiece { x_intervals: vec![[0.0, 1.0]], y_interval: [0.0, 2.0], value: 1.0 },
            ],
            road: vec![],
        };
        let state = mesh.project_initial(&data);
        assert_eq!(state.v[0], 1.5 + 0.5);
    }

    #[test]
    fn weighted_mass_reduces_to_scaled_mass_for_equal_exponents() {
        let mesh = reference_mesh(8, 4);
        let (_, data) = preset(2).unwrap();
        let state = mesh.project_initial(&data);
        let m = mesh.mass(&state);
        let w = mesh.weighted_mass(&state, 2.0, 2.0);
        assert!((w - m / 2.0).abs() <= 1e-12 * m);
    }

    proptest::proptest! {
        #[test]
        fn prop_projection_conserves_mass_for_random_blocks(
            nx in 1usize..40,
            ny in 1usize..12,
            a in -40.0f64..30.0,
            len in 0.5f64..10.0,
            y0 in 0.0f64..15.0,
            depth in 0.5f64..5.0,
            value in 0.1f64..50.0,
        ) {
            let geom = Geometry::new(20.0, -40.0, 40.0).unwrap();
            let b = (a + len).min(40.0);
            let y1 = (y0 + depth).min(20.0);
            let data = InitialData {
                field: vec![FieldPiece {
                    x_intervals: vec![[a, b]],
                    y_interval: [y0, y1],
                    value,
                }],
                road: vec![RoadPiece { x_intervals: vec![[a, b]], value }],
            };
            data.validate(&geom).unwrap();
            let mesh = Mesh::build(geom, nx, ny).unwrap();
            let state = mesh.project_initial(&data);
            let m0 = data.initial_mass(&geom);
            let m = mesh.mass(&state);
            proptest::prop_assert!((m - m0).abs() <= 1e-11 * m0.max(1.0));
        }
    }
}
