//! Lattices over polydiscs, grid functions and masks.
//!
//! Every complex coordinate contributes two real axes (real part first, then
//! imaginary part). Nodes are stored row-major with the last real axis
//! varying fastest.

mod io;

pub use io::{
    export_csv, load_grid_function, load_grid_function_on, read_grid_function,
    save_grid_function, write_grid_function, FORMAT_VERSION, MAGIC,
};

use serde::{Deserialize, Serialize};
use num_complex::Complex64;
use thiserror::Error;

/// A point of the complex plane.
pub type ComplexPoint = Complex64;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid resolution {0}: must be odd and at least 3")]
    InvalidResolution(usize),
    #[error("invalid polydisc: {0}")]
    InvalidPolydisc(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("value {value} at node {node} is not allowed inside the domain")]
    InvalidValue { node: usize, value: f64 },
    #[error("grid with {0} nodes is too large to materialise")]
    TooLarge(u128),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Product of discs `{|z_j - c_j| < r_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polydisc {
    centers: Vec<ComplexPoint>,
    radii: Vec<f64>,
}

impl Polydisc {
    pub fn new(centers: Vec<ComplexPoint>, radii: Vec<f64>) -> Result<Self, GridError> {
        if centers.is_empty() {
            return Err(GridError::InvalidPolydisc("no coordinates".into()));
        }
        if centers.len() != radii.len() {
            return Err(GridError::InvalidPolydisc(format!(
                "{} centers but {} radii",
                centers.len(),
                radii.len()
            )));
        }
        if centers.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(GridError::InvalidPolydisc("non-finite center".into()));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(GridError::InvalidPolydisc("radii must be positive".into()));
        }
        Ok(Self { centers, radii })
    }

    /// The unit polydisc `E^n`.
    pub fn unit(n: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n], vec![1.0; n])
            .expect("unit polydisc needs n >= 1")
    }

    pub fn disc(center: ComplexPoint, radius: f64) -> Result<Self, GridError> {
        Self::new(vec![center], vec![radius])
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[ComplexPoint] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn contains(&self, z: &[ComplexPoint]) -> bool {
        z.len() == self.dim()
            && z
                .iter()
                .zip(self.centers.iter().zip(&self.radii))
                .all(|(p, (c, r))| (p - c).norm() < *r)
    }

    /// Cartesian product with another polydisc.
    pub fn product(&self, other: &Polydisc) -> Polydisc {
        let mut centers = self.centers.clone();
        centers.extend_from_slice(&other.centers);
        let mut radii = self.radii.clone();
        radii.extend_from_slice(&other.radii);
        Polydisc { centers, radii }
    }

    /// Single-coordinate factor `j`.
    pub fn factor(&self, j: usize) -> Polydisc {
        Polydisc { centers: vec![self.centers[j]], radii: vec![self.radii[j]] }
    }
}

/// Uniform lattice over the bounding box of a polydisc.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    polydisc: Polydisc,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    node_count: usize,
}

/// Builds the lattice with `resolution` nodes along each real axis.
pub fn make_grid(polydisc: Polydisc, resolution: usize) -> Result<Grid, GridError> {
    let axes = 2 * polydisc.dim();
    Grid::with_resolutions(polydisc, vec![resolution; axes])
}

impl Grid {
    pub fn with_resolutions(polydisc: Polydisc, resolution: Vec<usize>) -> Result<Self, GridError> {
        if resolution.len() != 2 * polydisc.dim() {
            return Err(GridError::DimensionMismatch(format!(
                "{} resolutions for {} real axes",
                resolution.len(),
                2 * polydisc.dim()
            )));
        }
        if let Some(&bad) = resolution.iter().find(|&&r| r < 3 || r % 2 == 0) {
            return Err(GridError::InvalidResolution(bad));
        }
        let count: u128 = resolution.iter().map(|&r| r as u128).product();
        if count > usize::MAX as u128 {
            return Err(GridError::TooLarge(count));
        }
        let spacing = resolution
            .iter()
            .enumerate()
            .map(|(axis, &r)| 2.0 * polydisc.radii[axis / 2] / (r - 1) as f64)
            .collect();
        let mut strides = vec![1usize; resolution.len()];
        for axis in (0..resolution.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1].saturating_mul(resolution[axis + 1]);
        }
        Ok(Self { polydisc, resolution, spacing, strides, node_count: count as usize })
    }

    /// Lattice over the product of the two polydiscs, concatenating axes.
    pub fn product(&self, other: &Grid) -> Result<Grid, GridError> {
        let mut res = self.resolution.clone();
        res.extend_from_slice(&other.resolution);
        Grid::with_resolutions(self.polydisc.product(&other.polydisc), res)
    }

    /// Product of `n` copies of `self`.
    pub fn power(&self, n: usize) -> Result<Grid, GridError> {
        let mut out = self.clone();
        for _ in 1..n {
            out = out.product(self)?;
        }
        Ok(out)
    }

    /// Grid on complex coordinate `j` alone.
    pub fn factor(&self, j: usize) -> Grid {
        Grid::with_resolutions(
            self.polydisc.factor(j),
            self.resolution[2 * j..2 * j + 2].to_vec(),
        )
        .expect("factor of a valid grid is valid")
    }

    pub fn polydisc(&self) -> &Polydisc {
        &self.polydisc
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of real axes.
    pub fn ndim(&self) -> usize {
        self.resolution.len()
    }

    /// Number of complex coordinates.
    pub fn complex_dim(&self) -> usize {
        self.polydisc.dim()
    }

    /// Coordinate of lattice position `i` along a real axis. The middle
    /// index maps exactly onto the center component.
    pub fn axis_value(&self, axis: usize, i: usize) -> f64 {
        let c = self.polydisc.centers[axis / 2];
        let base = if axis % 2 == 0 { c.re } else { c.im };
        let mid = (self.resolution[axis] - 1) / 2;
        base + (i as f64 - mid as f64) * self.spacing[axis]
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for (axis, stride) in self.strides.iter().enumerate() {
            idx[axis] = node / stride;
            node %= stride;
        }
        idx
    }

    pub fn node_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Index of the node at the polydisc center.
    pub fn center_node(&self) -> usize {
        let idx: Vec<usize> = self.resolution.iter().map(|r| (r - 1) / 2).collect();
        self.node_index(&idx)
    }

    /// Complex coordinates of a node, written into `out`.
    pub fn coords_into(&self, node: usize, out: &mut [ComplexPoint]) {
        let mut rest = node;
        for j in 0..self.complex_dim() {
            let ire = rest / self.strides[2 * j];
            rest %= self.strides[2 * j];
            let iim = rest / self.strides[2 * j + 1];
            rest %= self.strides[2 * j + 1];
            out[j] = Complex64::new(self.axis_value(2 * j, ire), self.axis_value(2 * j + 1, iim));
        }
    }

    pub fn coords(&self, node: usize) -> Vec<ComplexPoint> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.complex_dim()];
        self.coords_into(node, &mut out);
        out
    }

    /// Index of the node on factor `j` (a 2-axis sub-lattice) that `node` projects to.
    pub fn factor_node(&self, node: usize, j: usize) -> usize {
        let ire = (node / self.strides[2 * j]) % self.resolution[2 * j];
        let iim = (node / self.strides[2 * j + 1]) % self.resolution[2 * j + 1];
        ire * self.resolution[2 * j + 1] + iim
    }

    pub fn in_domain(&self, node: usize) -> bool {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.complex_dim()];
        self.coords_into(node, &mut buf);
        self.polydisc.contains(&buf)
    }

    /// Nodes strictly inside the polydisc.
    pub fn domain_mask(&self) -> Mask {
        self.mask_where(|z| self.polydisc.contains(z))
    }

    /// Mask of nodes whose coordinates satisfy `pred`.
    pub fn mask_where<F: Fn(&[ComplexPoint]) -> bool>(&self, pred: F) -> Mask {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.complex_dim()];
        let bits = (0..self.node_count)
            .map(|node| {
                self.coords_into(node, &mut buf);
                pred(&buf)
            })
            .collect();
        Mask { grid: self.clone(), bits }
    }

    /// Calls `f(neighbor)` for every axis-adjacent node.
    pub fn for_each_neighbor<F: FnMut(usize)>(&self, node: usize, mut f: F) {
        for axis in 0..self.ndim() {
            let i = (node / self.strides[axis]) % self.resolution[axis];
            if i > 0 {
                f(node - self.strides[axis]);
            }
            if i + 1 < self.resolution[axis] {
                f(node + self.strides[axis]);
            }
        }
    }

    /// Fails when materialising `count` values would be unreasonable.
    pub fn ensure_materialisable(&self, limit: usize) -> Result<(), GridError> {
        if self.node_count > limit {
            Err(GridError::TooLarge(self.node_count as u128))
        } else {
            Ok(())
        }
    }
}

/// Boolean flags over the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: Grid,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, bits: Vec<bool>) -> Result<Self, GridError> {
        if bits.len() != grid.node_count() {
            return Err(GridError::DimensionMismatch(format!(
                "{} bits for {} nodes",
                bits.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, bits })
    }

    pub fn empty(grid: &Grid) -> Self {
        Self { bits: vec![false; grid.node_count()], grid: grid.clone() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, node: usize) -> bool {
        self.bits[node]
    }

    pub fn set(&mut self, node: usize, value: bool) {
        self.bits[node] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        self.zip_with(other, |a, b| a && !b)
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.bits.len(), other.bits.len(), "mask sizes differ");
        Mask {
            grid: self.grid.clone(),
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

/// Real values over a lattice with a domain mask. Off-mask entries carry no
/// meaning and are stored as NaN.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl PartialEq for GridFunction {
    /// Bit-level equality, so NaN placeholders compare equal.
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.mask == other.mask
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl GridFunction {
    /// Values must be finite or `-inf` on masked nodes.
    pub fn new(grid: Grid, values: Vec<f64>, mask: Vec<bool>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() || mask.len() != grid.node_count() {
            return Err(GridError::DimensionMismatch(format!(
                "{} values / {} mask bits for {} nodes",
                values.len(),
                mask.len(),
                grid.node_count()
            )));
        }
        if let Some((node, &value)) = values
            .iter()
            .enumerate()
            .find(|(i, v)| mask[*i] && (v.is_nan() || **v == f64::INFINITY))
        {
            return Err(GridError::InvalidValue { node, value });
        }
        Ok(Self { grid, values, mask })
    }

    /// Evaluates `f` on every in-domain node of the grid.
    pub fn from_fn<F: FnMut(&[ComplexPoint]) -> f64>(grid: &Grid, mut f: F) -> Result<Self, GridError> {
        let mask = grid.domain_mask().bits;
        let mut buf = vec![Complex64::new(0.0, 0.0); grid.complex_dim()];
        let values = (0..grid.node_count())
            .map(|node| {
                if mask[node] {
                    grid.coords_into(node, &mut buf);
                    f(&buf)
                } else {
                    f64::NAN
                }
            })
            .collect();
        Self::new(grid.clone(), values, mask)
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self, GridError> {
        Self::from_fn(grid, |_| value)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn domain(&self) -> Mask {
        Mask { grid: self.grid.clone(), bits: self.mask.clone() }
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn in_domain(&self, node: usize) -> bool {
        self.mask[node]
    }

    /// Value at the polydisc center.
    pub fn center_value(&self) -> f64 {
        self.values[self.grid.center_node()]
    }

    /// Maximum over masked nodes with its node, if any node is masked.
    pub fn max_on_domain(&self) -> Option<(usize, f64)> {
        self.masked().fold(None, |best, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
    }

    pub fn min_on_domain(&self) -> Option<(usize, f64)> {
        self.masked().fold(None, |best, (i, v)| match best {
            Some((_, b)) if b <= v => best,
            _ => Some((i, v)),
        })
    }

    /// `(node, value)` over masked nodes.
    pub fn masked(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.mask[*i])
            .map(|(i, v)| (i, *v))
    }

    /// Replaces masked values through `f(node, value)`.
    pub fn map_values<F: FnMut(usize, f64) -> f64>(&self, mut f: F) -> Result<Self, GridError> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if self.mask[i] { f(i, *v) } else { *v })
            .collect();
        Self::new(self.grid.clone(), values, self.mask.clone())
    }

    #[cfg(test)]
    pub(crate) fn into_parts(self) -> (Grid, Vec<f64>, Vec<bool>) {
        (self.grid, self.values, self.mask)
    }
}

/// Sets the bit of every node where `predicate` answers [`Verdict::CertifiedIn`],
/// restricted to the grid's domain.
///
/// [`Verdict::CertifiedIn`]: crate::series::Verdict::CertifiedIn
pub fn sample_mask<F>(predicate: F, grid: &Grid) -> Mask
where
    F: Fn(&[ComplexPoint]) -> crate::series::Verdict,
{
    let poly = grid.polydisc();
    grid.mask_where(|z| poly.contains(z) && predicate(z) == crate::series::Verdict::CertifiedIn)
}
