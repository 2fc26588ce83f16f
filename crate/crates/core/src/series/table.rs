//! Memoised series values for the coordinates that occur on a grid.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{SeriesError, TruncatedLogSeries, VBound};
use crate::grid::{ComplexPoint, Grid};

/// Anything that can answer per-coordinate series queries.
pub trait VSource: Sync {
    fn tail(&self) -> f64;
    /// `None` outside the radius-2 disc.
    fn v(&self, z: ComplexPoint) -> Option<VBound>;
    /// Upper bound of `v` on the closed disc of radius `rho` about `z`.
    fn v_cell_upper(&self, z: ComplexPoint, rho: f64) -> Option<f64>;
}

impl VSource for TruncatedLogSeries {
    fn tail(&self) -> f64 {
        self.tail_bound()
    }

    fn v(&self, z: ComplexPoint) -> Option<VBound> {
        self.eval_v(z).ok()
    }

    fn v_cell_upper(&self, z: ComplexPoint, rho: f64) -> Option<f64> {
        TruncatedLogSeries::v_cell_upper(self, z, rho).ok()
    }
}

type Key = (u64, u64);

fn key(z: ComplexPoint) -> Key {
    (z.re.to_bits(), z.im.to_bits())
}

/// Values of `v` (and optionally cell bounds for one radius) precomputed at
/// every coordinate of a grid; other points fall through to the series.
pub struct VTable<'a> {
    series: &'a TruncatedLogSeries,
    values: HashMap<Key, VBound>,
    cells: HashMap<Key, f64>,
    rho: Option<f64>,
}

impl<'a> VTable<'a> {
    pub fn for_grid(series: &'a TruncatedLogSeries, grid: &Grid, rho: Option<f64>) -> Result<Self, SeriesError> {
        let mut points: Vec<ComplexPoint> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for j in 0..grid.complex_dim() {
            let (rx, ry) = (grid.resolution()[2 * j], grid.resolution()[2 * j + 1]);
            for i in 0..rx {
                for k in 0..ry {
                    let z = ComplexPoint::new(grid.axis_value(2 * j, i), grid.axis_value(2 * j + 1, k));
                    if z.norm() < 2.0 && seen.insert(key(z)) {
                        points.push(z);
                    }
                }
            }
        }
        Ok(Self::for_points(series, &points, rho))
    }

    pub fn for_points(series: &'a TruncatedLogSeries, points: &[ComplexPoint], rho: Option<f64>) -> Self {
        let computed: Vec<(Key, Option<VBound>, Option<f64>)> = points
            .par_iter()
            .map(|z| {
                let v = series.eval_v(*z).ok();
                let c = rho.and_then(|r| TruncatedLogSeries::v_cell_upper(series, *z, r).ok());
                (key(*z), v, c)
            })
            .collect();
        let mut values = HashMap::with_capacity(computed.len());
        let mut cells = HashMap::new();
        for (k, v, c) in computed {
            if let Some(v) = v {
                values.insert(k, v);
            }
            if let Some(c) = c {
                cells.insert(k, c);
            }
        }
        Self { series, values, cells, rho }
    }

    pub fn series(&self) -> &TruncatedLogSeries {
        self.series
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl VSource for VTable<'_> {
    fn tail(&self) -> f64 {
        self.series.tail_bound()
    }

    fn v(&self, z: ComplexPoint) -> Option<VBound> {
        match self.values.get(&key(z)) {
            Some(b) => Some(*b),
            None => self.series.eval_v(z).ok(),
        }
    }

    fn v_cell_upper(&self, z: ComplexPoint, rho: f64) -> Option<f64> {
        if self.rho == Some(rho) {
            if let Some(c) = self.cells.get(&key(z)) {
                return Some(*c);
            }
        }
        TruncatedLogSeries::v_cell_upper(self.series, z, rho).ok()
    }
}
