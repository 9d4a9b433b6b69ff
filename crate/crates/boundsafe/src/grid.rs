//! Dense 3D voxel containers shared by every pipeline stage.
//!
//! All grids use the same memory layout: C row-major over (z, y, x) with x
//! fastest, i.e. `linear = (z * ny + y) * nx + x`. This matches the on-disk
//! payload order, so a grid's `data` slice can be serialized verbatim.

use serde::{Deserialize, Serialize};

/// Voxel coordinate as (x, y, z) indices.
pub type Coord = [usize; 3];

/// Grid dimensions (nx, ny, nz).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Shape {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Shape {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Shape { nx, ny, nz }
    }

    pub fn cube(n: usize) -> Self {
        Shape::new(n, n, n)
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_dim(&self) -> usize {
        self.nx.min(self.ny).min(self.nz)
    }

    pub fn linear(&self, c: Coord) -> usize {
        debug_assert!(self.contains(c));
        (c[2] * self.ny + c[1]) * self.nx + c[0]
    }

    pub fn coord(&self, linear: usize) -> Coord {
        let x = linear % self.nx;
        let y = (linear / self.nx) % self.ny;
        let z = linear / (self.nx * self.ny);
        [x, y, z]
    }

    pub fn contains(&self, c: Coord) -> bool {
        c[0] < self.nx && c[1] < self.ny && c[2] < self.nz
    }

    /// Iterates every coordinate in memory order (x fastest).
    pub fn iter(&self) -> impl Iterator<Item = Coord> + '_ {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        (0..nz).flat_map(move |z| (0..ny).flat_map(move |y| (0..nx).map(move |x| [x, y, z])))
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }
}

impl From<[usize; 3]> for Shape {
    fn from(d: [usize; 3]) -> Self {
        Shape::new(d[0], d[1], d[2])
    }
}

impl From<Shape> for [usize; 3] {
    fn from(s: Shape) -> Self {
        s.as_array()
    }
}

/// Dense 3D array in (z, y, x) row-major order with x fastest.
#[derive(Clone, PartialEq, Debug)]
pub struct Grid3<T> {
    pub shape: Shape,
    pub data: Vec<T>,
}

impl<T: Clone> Grid3<T> {
    pub fn filled(shape: Shape, value: T) -> Self {
        Grid3 {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Self {
        assert_eq!(shape.len(), data.len(), "shape/data length mismatch");
        Grid3 { shape, data }
    }
}

impl<T> Grid3<T> {
    pub fn get(&self, c: Coord) -> &T {
        &self.data[self.shape.linear(c)]
    }

    pub fn set(&mut self, c: Coord, value: T) {
        let i = self.shape.linear(c);
        self.data[i] = value;
    }
}

impl<T> std::ops::Index<Coord> for Grid3<T> {
    type Output = T;
    fn index(&self, c: Coord) -> &T {
        &self.data[self.shape.linear(c)]
    }
}

impl<T> std::ops::IndexMut<Coord> for Grid3<T> {
    fn index_mut(&mut self, c: Coord) -> &mut T {
        let i = self.shape.linear(c);
        &mut self.data[i]
    }
}

/// Scalar intensity volume. Values live in [0, 1].
pub type VolumeGrid = Grid3<f32>;

/// Binary foreground mask.
pub type OccupancyMask = Grid3<bool>;

/// Per-voxel instance labels: 0 is background, objects are 1-based.
pub type LabelGrid = Grid3<u16>;

/// Euclidean distance to the nearest background voxel center.
///
/// Squared distances are the primary representation: they are exact integers
/// (representable exactly in f64), so comparisons against squared thresholds
/// never round. `distance` exposes the usual metric view.
#[derive(Clone, PartialEq, Debug)]
pub struct DistanceField {
    pub shape: Shape,
    squared: Vec<f64>,
}

impl DistanceField {
    pub(crate) fn from_squared(shape: Shape, squared: Vec<f64>) -> Self {
        assert_eq!(shape.len(), squared.len());
        DistanceField { shape, squared }
    }

    /// Squared distance at a linear index. Exact.
    pub fn squared_at(&self, linear: usize) -> f64 {
        self.squared[linear]
    }

    /// Squared distance at a coordinate. Exact.
    pub fn squared(&self, c: Coord) -> f64 {
        self.squared[self.shape.linear(c)]
    }

    /// Distance at a coordinate (correctly rounded sqrt of the exact square).
    pub fn distance(&self, c: Coord) -> f64 {
        self.squared(c).sqrt()
    }

    pub fn squared_slice(&self) -> &[f64] {
        &self.squared
    }

    /// True iff the voxel is background (distance zero).
    pub fn is_background(&self, c: Coord) -> bool {
        self.squared(c) == 0.0
    }
}

/// The six face-neighbor offsets.
pub const FACE_NEIGHBORS: [[isize; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Offsets the coordinate, returning None when it leaves the domain.
pub fn offset(shape: Shape, c: Coord, d: [isize; 3]) -> Option<Coord> {
    let x = c[0].checked_add_signed(d[0])?;
    let y = c[1].checked_add_signed(d[1])?;
    let z = c[2].checked_add_signed(d[2])?;
    let n = [x, y, z];
    shape.contains(n).then_some(n)
}
