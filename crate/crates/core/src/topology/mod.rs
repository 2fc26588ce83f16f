//! Connectivity of lattice complements and explicit avoidance paths through
//! the polar set of `u`.

mod path;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use path::{build_path, verify_path, PathCertificate, PathConfig, PathWitness, SegmentLabel};

use crate::grid::{ComplexPoint, Grid, GridError, Mask, Polydisc};
use crate::series::{RegionSpec, SeriesError, TruncatedLogSeries, VSource, Verdict};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("free set is empty at resolution {0}")]
    Degenerate(usize),
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("endpoint {0} is not certified off the obstruction")]
    EndpointNotFree(String),
    #[error("no admissible pole approximation among {0} candidates")]
    SearchExhausted(usize),
    #[error("path certification failed after {0} refinements")]
    Uncertified(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Open box `lower[k] < x_k < upper[k]` over the real axes (real and
/// imaginary part of each complex coordinate in turn).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Cube {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, TopologyError> {
        if lower.len() != upper.len() || lower.is_empty() || lower.len() % 2 != 0 {
            return Err(TopologyError::InvalidCube(format!("{} lower / {} upper bounds", lower.len(), upper.len())));
        }
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] < upper[k])) {
            return Err(TopologyError::InvalidCube(format!("axis {k}: {} >= {}", lower[k], upper[k])));
        }
        Ok(Self { lower, upper })
    }

    /// Product of squares of half-side `half` about `center`.
    pub fn around(center: &[ComplexPoint], half: f64) -> Result<Self, TopologyError> {
        let lower = center.iter().flat_map(|c| [c.re - half, c.im - half]).collect();
        let upper = center.iter().flat_map(|c| [c.re + half, c.im + half]).collect();
        Self::new(lower, upper)
    }

    pub fn complex_dim(&self) -> usize {
        self.lower.len() / 2
    }

    pub fn contains(&self, z: &[ComplexPoint]) -> bool {
        z.len() == self.complex_dim()
            && z.iter().enumerate().all(|(j, p)| {
                self.lower[2 * j] < p.re && p.re < self.upper[2 * j] && self.lower[2 * j + 1] < p.im && p.im < self.upper[2 * j + 1]
            })
    }

    pub fn diameter(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Projection onto complex coordinate `j` contains `p`.
    pub fn contains_coordinate(&self, j: usize, p: ComplexPoint) -> bool {
        self.lower[2 * j] < p.re && p.re < self.upper[2 * j] && self.lower[2 * j + 1] < p.im && p.im < self.upper[2 * j + 1]
    }

    /// Lattice of spacing `2 / (resolution - 1)` (the unit-polydisc lattice at
    /// that resolution) restricted to the closed cube. The cube corners must be
    /// lattice points and every face square.
    pub fn lattice(&self, resolution: usize) -> Result<Grid, TopologyError> {
        let h = 2.0 / (resolution as f64 - 1.0);
        let mut centers = Vec::new();
        let mut radii = Vec::new();
        let mut res = Vec::new();
        for j in 0..self.complex_dim() {
            let (a, b, c, d) = (self.lower[2 * j], self.upper[2 * j], self.lower[2 * j + 1], self.upper[2 * j + 1]);
            if b - a != d - c {
                return Err(TopologyError::InvalidCube(format!("coordinate {j} is not a square")));
            }
            let steps = (b - a) / h;
            let on_lattice = |x: f64| ((x / h) - (x / h).round()).abs() < 1e-9;
            if (steps - steps.round()).abs() > 1e-9 || !on_lattice(a) || !on_lattice(c) || steps.round() as usize % 2 != 0 {
                return Err(TopologyError::InvalidCube(format!(
                    "coordinate {j} does not sit on the resolution-{resolution} lattice with a central node"
                )));
            }
            let r = steps.round() as usize;
            centers.push(ComplexPoint::new(0.5 * (a + b), 0.5 * (c + d)));
            radii.push(0.5 * (b - a));
            res.extend([r + 1, r + 1]);
        }
        Ok(Grid::with_resolutions(Polydisc::new(centers, radii)?, res)?)
    }
}

/// Component labels: `0` off the free set, else `1..=count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub count: usize,
    pub labels: Vec<u32>,
}

/// Axis-adjacent components, labelled in order of first visit in a
/// row-major scan.
pub fn connected_components(free: &Mask) -> Components {
    let grid = free.grid();
    let mut labels = vec![0u32; grid.node_count()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..grid.node_count() {
        if !free.get(start) || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            grid.for_each_neighbor(node, |nb| {
                if free.get(nb) && labels[nb] == 0 {
                    labels[nb] = count;
                    queue.push_back(nb);
                }
            });
        }
    }
    Components { count: count as usize, labels }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionVerdict {
    pub resolution: usize,
    pub nodes: usize,
    pub free_nodes: usize,
    pub components: usize,
    pub connected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub cube: Cube,
    pub per_resolution: Vec<ResolutionVerdict>,
    /// One component at every resolution.
    pub non_separating: bool,
}

/// Nodes strictly inside `cube` and inside the polydisc where `obstruction`
/// is certified out, i.e. the complement of the conservative sampling of the
/// obstruction.
pub fn free_mask<S: VSource + ?Sized>(
    grid: &Grid,
    cube: &Cube,
    ambient: &Polydisc,
    obstruction: &RegionSpec,
    src: &S,
) -> Mask {
    grid.mask_where(|z| {
        cube.contains(z) && ambient.contains(z) && obstruction.member(z, src).verdict == Verdict::CertifiedOut
    })
}

/// Flood fill of `cube ∖ S` on the unit-polydisc lattice at each resolution.
pub fn check_separation<S: VSource + ?Sized>(
    cube: &Cube,
    ambient: &Polydisc,
    obstruction: &RegionSpec,
    resolutions: &[usize],
    src: &S,
) -> Result<SeparationReport, TopologyError> {
    let mut per_resolution = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        let grid = cube.lattice(res)?;
        let free = free_mask(&grid, cube, ambient, obstruction, src);
        if free.is_empty() {
            return Err(TopologyError::Degenerate(res));
        }
        let comps = connected_components(&free);
        per_resolution.push(ResolutionVerdict {
            resolution: res,
            nodes: grid.node_count(),
            free_nodes: free.count(),
            components: comps.count,
            connected: comps.count == 1,
        });
    }
    let non_separating = per_resolution.iter().all(|v| v.connected);
    Ok(SeparationReport { cube: cube.clone(), per_resolution, non_separating })
}

/// Every coordinate projection of `cube` contains a pole lying on the
/// resolution-`resolution` lattice. Off the lattice poles the sublevel sets
/// of `u` are far thinner than a cell, so the lattice sees `𝒜_n` only as
/// slabs through such poles; with no pole in some projection the slabs are
/// parallel and cannot meet inside the cube at any resolution.
pub fn resolvable_cube(cube: &Cube, series: &TruncatedLogSeries, resolution: usize) -> bool {
    let h = 2.0 / (resolution as f64 - 1.0);
    let on_lattice = |x: f64| (x / h).fract() == 0.0;
    (0..cube.complex_dim()).all(|j| {
        series.poles().iter().any(|p| cube.contains_coordinate(j, *p) && on_lattice(p.re) && on_lattice(p.im))
    })
}

/// Deterministic suite of square cubes of half-side `half` inside the unit
/// polydisc of dimension `n`. Centres are multiples of 1/8.
pub fn cube_suite(n: usize, half: f64) -> Vec<Cube> {
    let centers = [
        (0.0, 0.0),
        (0.25, -0.25),
        (-0.375, 0.125),
        (0.125, 0.5),
        (-0.5, -0.5),
        (0.375, 0.25),
        (-0.125, -0.375),
        (0.25, 0.125),
    ];
    let mut out = Vec::new();
    for (k, _) in centers.iter().enumerate() {
        let pt: Vec<ComplexPoint> = (0..n)
            .map(|j| {
                let (re, im) = centers[(k + j) % centers.len()];
                ComplexPoint::new(re, im)
            })
            .collect();
        if pt.iter().all(|p| p.norm() + half * std::f64::consts::SQRT_2 < 1.0) {
            out.push(Cube::around(&pt, half).expect("positive half-side"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn empty_obstruction_one_component() {
        let g = make_grid(Polydisc::unit(2), 7).unwrap();
        let free = g.mask_where(|_| true);
        assert_eq!(connected_components(&free).count, 1);
    }

    #[test]
    fn slab_splits_cube() {
        let g = make_grid(Polydisc::unit(2), 7).unwrap();
        let free = g.mask_where(|z| z[0].re != 0.0);
        let c = connected_components(&free);
        assert_eq!(c.count, 2);
        assert_eq!(c.labels[0], 1);
    }

    #[test]
    fn labels_follow_first_visit() {
        let g = make_grid(Polydisc::unit(1), 5).unwrap();
        let free = g.mask_where(|z| z[0].im != 0.0);
        let c = connected_components(&free);
        assert_eq!(c.count, 2);
        assert_eq!(c.labels[0], 1);
        assert_eq!(c.labels[g.node_count() - 1], 2);
    }

    #[test]
    fn cube_lattice_alignment() {
        let c = Cube::around(&[ComplexPoint::new(0.25, -0.25)], 0.25).unwrap();
        let g = c.lattice(65).unwrap();
        assert_eq!(g.resolution(), &[17, 17]);
        assert_eq!(g.coords(0)[0], ComplexPoint::new(0.0, -0.5));
        assert!(Cube::around(&[ComplexPoint::new(0.1, 0.0)], 0.25).unwrap().lattice(65).is_err());
        assert!(Cube::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn resolvable_needs_a_lattice_pole_per_coordinate() {
        let s = crate::series::TruncatedLogSeries::standard(2000).unwrap();
        // 1/4 sits on the lattice; the square about 0 holds no lattice pole
        let one = Cube::around(&[ComplexPoint::new(0.25, 0.125)], 0.25).unwrap();
        let zero = Cube::around(&[ComplexPoint::new(0.0, 0.0)], 0.25).unwrap();
        assert!(resolvable_cube(&one, &s, 65));
        assert!(!resolvable_cube(&zero, &s, 65));
        let both = Cube::around(&[ComplexPoint::new(0.25, 0.125), ComplexPoint::new(0.0, 0.0)], 0.25).unwrap();
        assert!(!resolvable_cube(&both, &s, 65));
    }

    #[test]
    fn full_obstruction_is_degenerate() {
        let s = crate::series::TruncatedLogSeries::standard(10).unwrap();
        let c = Cube::around(&[ComplexPoint::new(0.0, 0.0)], 0.25).unwrap();
        let all = RegionSpec::whole(1);
        let r = check_separation(&c, &Polydisc::unit(1), &all, &[9], &s);
        assert!(matches!(r, Err(TopologyError::Degenerate(9))));
    }
}
