//! Largest separately subharmonic minorant on a product of planar grids.

use rayon::prelude::*;

use super::stencil::{Method, NodeKind, Stencil};
use super::{lattice_coord, planar, ExtremalError};
use crate::grid::GridFunction;

const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct LineSweepResult {
    pub values: GridFunction,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Alternates planar obstacle solves over each complex coordinate, each time
/// using the current iterate as the obstacle, until a full sweep changes no
/// value by more than `tolerance`. Every plurisubharmonic minorant is
/// separately subharmonic, so the result bounds the envelope from above.
pub fn line_sweep_envelope(obstacle: &GridFunction, tolerance: f64, max_sweeps: usize) -> Result<LineSweepResult, ExtremalError> {
    let grid = obstacle.grid();
    for (node, v) in obstacle.masked() {
        if !(0.0..=1.0).contains(&v) {
            return Err(ExtremalError::BadObstacle { node, value: v });
        }
    }
    let nf = grid.complex_dim();
    let stencils: Vec<Stencil> = (0..nf)
        .map(|j| {
            let fg = grid.factor(j);
            let disc = planar(&fg)?;
            let kind: Vec<NodeKind> = fg
                .domain_mask()
                .bits()
                .iter()
                .map(|&b| if b { NodeKind::Free } else { NodeKind::Outside })
                .collect();
            let (nx, ny) = (fg.resolution()[0], fg.resolution()[1]);
            Ok(Stencil::build(nx, ny, lattice_coord(&fg), &kind, disc, 1.0, None))
        })
        .collect::<Result<_, ExtremalError>>()?;
    let domain = obstacle.mask();
    let mut u: Vec<f64> = obstacle.values().iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
    let strides = grid.strides().to_vec();
    let res = grid.resolution().to_vec();
    let inner_iterations = 100_000;

    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        // slices only need to be solved as accurately as the outer iteration has settled
        let inner_tolerance = tolerance;
        let mut change = 0.0f64;
        for (j, stencil) in stencils.iter().enumerate() {
            let (sx, sy) = (strides[2 * j], strides[2 * j + 1]);
            let (nx, ny) = (res[2 * j], res[2 * j + 1]);
            let (mx, my) = ((nx - 1) / 2, (ny - 1) / 2);
            let bases: Vec<usize> = (0..grid.node_count())
                .filter(|&n| (n / sx) % nx == 0 && (n / sy) % ny == 0 && domain[n + mx * sx + my * sy])
                .collect();
            for chunk in bases.chunks(CHUNK) {
                let snapshot = &u;
                let solved: Vec<(usize, Vec<f64>)> = chunk
                    .par_iter()
                    .map(|&base| {
                        let mut local: Vec<f64> = (0..nx * ny).map(|l| snapshot[base + (l / ny) * sx + (l % ny) * sy]).collect();
                        let cap = local.clone();
                        stencil.relax(&mut local, &cap, Method::RedBlackSor, inner_tolerance, inner_iterations);
                        (base, local)
                    })
                    .collect();
                for (base, local) in solved {
                    for &l in stencil.free_nodes() {
                        let node = base + (l / ny) * sx + (l % ny) * sy;
                        change = change.max((u[node] - local[l]).abs());
                        u[node] = local[l];
                    }
                }
            }
        }
        residual = change;
        if change < tolerance {
            break;
        }
    }
    let values = u.iter().enumerate().map(|(i, v)| if domain[i] { *v } else { f64::NAN }).collect();
    Ok(LineSweepResult {
        values: GridFunction::new(grid.clone(), values, domain.to_vec())?,
        sweeps,
        residual,
        converged: residual < tolerance,
    })
}
