//! The subharmonic series `v(z) = Σ_k log(|z - q_k| / |q_k|) / d_k` over the
//! Gaussian rationals of the radius-2 disc, the plurisubharmonic sum
//! `u(z) = Σ_j v(z_j)`, and the regions built from their sublevel sets.
//!
//! Truncating after `K` poles only ever omits terms `log(|z - q_k| / 4) / d_k`,
//! which are nonpositive on the radius-2 disc, together with the constants
//! `-log(|q_k| / 4) / d_k`, which sum to the tail constant `τ_K`. Hence
//! `v <= v_K + τ_K` and sublevel membership can be certified from above.
//! Non-membership is only certified where the value is exact: at the origin,
//! where every term cancels, and at the poles themselves.

mod enumerate;
mod region;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::{enumerate_gaussian_rationals, Fraction, GaussianRational};
pub use region::{
    build_s_prop_b, build_s_prop_c, certify_ball_inside, max_certified_radius, plurithin_certificate,
    Ball, BallCertificate, CertificationConfig, PlurithinCertificate, PropCSet, RegionSpec,
};
pub use table::{VSource, VTable};

use crate::grid::{ComplexPoint, Grid, GridError, GridFunction};

/// Default truncation length.
pub const DEFAULT_TERMS: usize = 2000;
/// Default safety gap for ball certificates.
pub const DEFAULT_SAFETY_GAP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("pole count must be at least 1")]
    EmptyEnumeration,
    #[error("pole {index} is zero or outside the radius-2 disc")]
    InvalidPole { index: usize },
    #[error("weight {index} is not a positive finite number")]
    InvalidWeight { index: usize },
    #[error("{poles} poles but {weights} weights")]
    LengthMismatch { poles: usize, weights: usize },
    #[error("point {0} lies outside the radius-2 disc")]
    OutOfDomain(ComplexPoint),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid construction: {0}")]
    InvalidConstruction(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Three-valued membership answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedIn,
    CertifiedOut,
    Unknown,
}

impl Verdict {
    pub fn not(self) -> Verdict {
        match self {
            Verdict::CertifiedIn => Verdict::CertifiedOut,
            Verdict::CertifiedOut => Verdict::CertifiedIn,
            Verdict::Unknown => Verdict::Unknown,
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::CertifiedOut, _) | (_, Verdict::CertifiedOut) => Verdict::CertifiedOut,
            (Verdict::CertifiedIn, Verdict::CertifiedIn) => Verdict::CertifiedIn,
            _ => Verdict::Unknown,
        }
    }

    pub fn or(self, other: Verdict) -> Verdict {
        self.not().and(other.not()).not()
    }

    pub fn is_in(self) -> bool {
        self == Verdict::CertifiedIn
    }
}

/// Verdict plus the bound that justified it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub verdict: Verdict,
    #[serde(with = "crate::json::ext_f64")]
    pub bound: f64,
}

impl Membership {
    pub fn new(verdict: Verdict, bound: f64) -> Self {
        Self { verdict, bound }
    }
}

/// Truncated value `v_K(z)` and the certified upper bound `v_K(z) + τ_K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VBound {
    pub value: f64,
    pub upper: f64,
}

/// Rule producing the weights `d_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `d_k = k² (1 + |log(|q_k| / 4)|)`.
    K2log,
}

/// JSON description of a series: `{"pole_count", "weight_rule", "threshold"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub pole_count: usize,
    pub weight_rule: WeightRule,
    pub threshold: f64,
}

impl Default for SeriesSpec {
    fn default() -> Self {
        Self { pole_count: DEFAULT_TERMS, weight_rule: WeightRule::K2log, threshold: -1.0 }
    }
}

impl SeriesSpec {
    pub fn build(&self) -> Result<TruncatedLogSeries, SeriesError> {
        match self.weight_rule {
            WeightRule::K2log => TruncatedLogSeries::standard(self.pole_count),
        }
    }
}

/// First `count` nonzero Gaussian rationals of modulus below 2.
pub fn enumerate_rationals(count: usize) -> Result<Vec<ComplexPoint>, SeriesError> {
    if count == 0 {
        return Err(SeriesError::EmptyEnumeration);
    }
    Ok(enumerate_gaussian_rationals(count).into_iter().map(|p| p.to_complex()).collect())
}

/// `d_k = k² (1 + |log(|q_k| / 4)|)`, so that `|log(|q_k| / 4)| / d_k < 1 / k²`.
pub fn default_weights(poles: &[ComplexPoint]) -> Result<Vec<f64>, SeriesError> {
    poles
        .iter()
        .enumerate()
        .map(|(i, q)| {
            if q.norm() == 0.0 {
                return Err(SeriesError::InvalidPole { index: i });
            }
            let k = (i + 1) as f64;
            Ok(k * k * (1.0 + (q.norm() / 4.0).ln().abs()))
        })
        .collect()
}

/// `Σ_{k > K} 1/k²` bounded by `1/K`; the whole sum when `K = 0`.
pub fn k2log_tail_bound(terms: usize) -> f64 {
    if terms == 0 {
        std::f64::consts::PI * std::f64::consts::PI / 6.0
    } else {
        1.0 / terms as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedLogSeries {
    poles: Vec<ComplexPoint>,
    weights: Vec<f64>,
    pole_sq: Vec<f64>,
    half_inv_weight: Vec<f64>,
    tail: f64,
    rule: Option<WeightRule>,
}

impl TruncatedLogSeries {
    /// Custom pole data; `tail_bound` must dominate the omitted constants.
    pub fn new(poles: Vec<ComplexPoint>, weights: Vec<f64>, tail_bound: f64) -> Result<Self, SeriesError> {
        if poles.len() != weights.len() {
            return Err(SeriesError::LengthMismatch { poles: poles.len(), weights: weights.len() });
        }
        for (index, q) in poles.iter().enumerate() {
            let m = q.norm();
            if !(m > 0.0 && m < 2.0) {
                return Err(SeriesError::InvalidPole { index });
            }
        }
        if let Some(index) = weights.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(SeriesError::InvalidWeight { index });
        }
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(SeriesError::InvalidRegion(format!("tail bound {tail_bound}")));
        }
        let pole_sq = poles.iter().map(|q| q.norm_sqr()).collect();
        let half_inv_weight = weights.iter().map(|d| 0.5 / d).collect();
        Ok(Self { poles, weights, pole_sq, half_inv_weight, tail: tail_bound, rule: None })
    }

    /// Default enumeration with `k2log` weights and the `1/K` tail majorant.
    pub fn standard(terms: usize) -> Result<Self, SeriesError> {
        let poles = enumerate_rationals(terms)?;
        let weights = default_weights(&poles)?;
        let mut s = Self::new(poles, weights, k2log_tail_bound(terms))?;
        s.rule = Some(WeightRule::K2log);
        Ok(s)
    }

    /// First `terms` poles of a standard series, with the matching tail bound.
    pub fn truncated(&self, terms: usize) -> Result<Self, SeriesError> {
        let rule = self.rule.ok_or_else(|| {
            SeriesError::InvalidConstruction("tail bound of a custom series cannot be re-derived".into())
        })?;
        let terms = terms.min(self.len());
        let mut s = Self::new(
            self.poles[..terms].to_vec(),
            self.weights[..terms].to_vec(),
            match rule {
                WeightRule::K2log => k2log_tail_bound(terms),
            },
        )?;
        s.rule = Some(rule);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn poles(&self) -> &[ComplexPoint] {
        &self.poles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    /// Single term `log(|z - q_k| / |q_k|) / d_k` (zero-based `k`).
    pub fn term(&self, k: usize, z: ComplexPoint) -> f64 {
        let d = z - self.poles[k];
        (d.norm_sqr() / self.pole_sq[k]).ln() * self.half_inv_weight[k]
    }

    fn sum_terms(&self, z: ComplexPoint) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.poles.len() {
            acc += self.term(k, z);
        }
        acc
    }

    /// `(v_K(z), v_K(z) + τ_K)`; `-inf` exactly at the enumerated poles.
    pub fn eval_v(&self, z: ComplexPoint) -> Result<VBound, SeriesError> {
        if !(z.norm() < 2.0) {
            return Err(SeriesError::OutOfDomain(z));
        }
        let value = self.sum_terms(z);
        Ok(VBound { value, upper: value + self.tail })
    }

    /// Upper bound for `v` on the closed disc of radius `rho` around `z`.
    pub fn v_cell_upper(&self, z: ComplexPoint, rho: f64) -> Result<f64, SeriesError> {
        if !(z.norm() + rho < 2.0) {
            return Err(SeriesError::OutOfDomain(z));
        }
        let mut acc = 0.0;
        for k in 0..self.poles.len() {
            let r = (z - self.poles[k]).norm() + rho;
            acc += (r * r / self.pole_sq[k]).ln() * self.half_inv_weight[k];
        }
        Ok(acc + self.tail)
    }

    /// `u_K(z) = Σ_j v_K(z_j)` with upper bound `u_K + n τ_K`. Coordinate
    /// values are summed in ascending order so the result is symmetric.
    pub fn eval_u(&self, z: &[ComplexPoint]) -> Result<VBound, SeriesError> {
        let mut parts = z.iter().map(|p| self.eval_v(*p).map(|b| b.value)).collect::<Result<Vec<_>, _>>()?;
        Ok(sum_u_parts(&mut parts, self.tail))
    }

    /// `v_K` at every in-domain node of a one-coordinate grid.
    pub fn v_grid(&self, grid: &Grid) -> Result<GridFunction, SeriesError> {
        let table = VTable::for_grid(self, grid, None)?;
        Ok(GridFunction::from_fn(grid, |z| table.v(z[0]).map(|b| b.value).unwrap_or(f64::NAN))?)
    }

    /// `u_K` over a product grid, assembled from per-coordinate tables.
    pub fn u_grid(&self, grid: &Grid) -> Result<GridFunction, SeriesError> {
        let table = VTable::for_grid(self, grid, None)?;
        let mut parts = Vec::with_capacity(grid.complex_dim());
        Ok(GridFunction::from_fn(grid, |z| {
            parts.clear();
            parts.extend(z.iter().map(|p| table.v(*p).map(|b| b.value).unwrap_or(f64::NAN)));
            sum_u_parts(&mut parts, 0.0).value
        })?)
    }
}

pub(crate) fn sum_u_parts(parts: &mut [f64], tail: f64) -> VBound {
    parts.sort_by(f64::total_cmp);
    let value: f64 = parts.iter().sum();
    VBound { value, upper: value + parts.len() as f64 * tail }
}

/// Coverage of lattice cells by enumerated poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub resolution: usize,
    pub pole_count: usize,
    pub cells: usize,
    pub covered: usize,
}

impl DensityReport {
    pub fn all_covered(&self) -> bool {
        self.cells == self.covered
    }
}

/// Counts the closed lattice cells (all corners in the domain) of a
/// one-coordinate grid that contain at least one pole of `series`.
pub fn pole_density(series: &TruncatedLogSeries, grid: &Grid) -> DensityReport {
    assert_eq!(grid.complex_dim(), 1, "density check runs on a single coordinate");
    let (nx, ny) = (grid.resolution()[0], grid.resolution()[1]);
    let domain = grid.domain_mask();
    let corner_ok = |i: usize, j: usize| {
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
            .iter()
            .all(|&(a, b)| domain.get(grid.node_index(&[a, b])))
    };
    let mut covered = vec![false; (nx - 1) * (ny - 1)];
    let x0 = grid.axis_value(0, 0);
    let y0 = grid.axis_value(1, 0);
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    let cell_range = |t: f64, n: usize| -> Vec<usize> {
        if t < 0.0 || t > (n - 1) as f64 {
            return Vec::new();
        }
        let f = t.floor();
        let i = f as usize;
        let mut out = Vec::new();
        if i < n - 1 {
            out.push(i);
        }
        if t == f && i > 0 {
            out.push(i - 1);
        }
        out
    };
    for q in series.poles() {
        for i in cell_range((q.re - x0) / hx, nx) {
            for j in cell_range((q.im - y0) / hy, ny) {
                covered[i * (ny - 1) + j] = true;
            }
        }
    }
    let mut cells = 0;
    let mut hit = 0;
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            if corner_ok(i, j) {
                cells += 1;
                if covered[i * (ny - 1) + j] {
                    hit += 1;
                }
            }
        }
    }
    DensityReport { resolution: nx, pole_count: series.len(), cells, covered: hit }
}

/// First enumerated pole strictly inside the unit disc.
pub fn first_pole_in_unit_disc(series: &TruncatedLogSeries) -> Option<(usize, ComplexPoint)> {
    series.poles().iter().copied().enumerate().find(|(_, q)| q.norm() < 1.0)
}

#[cfg(test)]
pub(crate) fn zero() -> ComplexPoint {
    ComplexPoint::new(0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Polydisc};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> ComplexPoint {
        ComplexPoint::new(re, im)
    }

    #[test]
    fn enumerate_rejects_zero_count() {
        assert!(matches!(enumerate_rationals(0), Err(SeriesError::EmptyEnumeration)));
    }

    #[test]
    fn enumeration_is_prefix_stable_and_in_range() {
        let long = enumerate_rationals(100).unwrap();
        assert_eq!(enumerate_rationals(10).unwrap(), long[..10].to_vec());
        assert!(long.iter().all(|p| p.norm() > 0.0 && p.norm() < 2.0));
    }

    #[test]
    fn weight_formula() {
        // |q| = 4/e gives |log(|q|/4)| = 1, so d_2 = 4 * 2.
        let q = c(4.0 / std::f64::consts::E, 0.0);
        let w = default_weights(&[c(0.5, 0.0), q]).unwrap();
        assert_relative_eq!(w[1], 8.0, epsilon = 1e-12);
        assert!(default_weights(&[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn weights_give_inverse_square_majorant() {
        let s = TruncatedLogSeries::standard(500).unwrap();
        for (k, (q, d)) in s.poles().iter().zip(s.weights()).enumerate() {
            let kk = (k + 1) as f64;
            assert!(d.is_finite() && *d > 0.0);
            assert!((q.norm() / 4.0).ln().abs() / d < 1.0 / (kk * kk));
        }
        assert!(k2log_tail_bound(10) <= 0.1);
        assert!(k2log_tail_bound(11) <= k2log_tail_bound(10));
    }

    #[test]
    fn v_vanishes_at_origin_for_every_truncation() {
        let s = TruncatedLogSeries::standard(300).unwrap();
        for k in [1, 2, 17, 300] {
            let t = s.truncated(k).unwrap();
            assert_eq!(t.eval_v(zero()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn v_is_minus_infinity_at_poles() {
        let s = TruncatedLogSeries::standard(50).unwrap();
        for q in s.poles() {
            let b = s.eval_v(*q).unwrap();
            assert_eq!(b.value, f64::NEG_INFINITY);
            assert_eq!(b.upper, f64::NEG_INFINITY);
        }
    }

    #[test]
    fn v_rejects_points_outside_radius_two() {
        let s = TruncatedLogSeries::standard(5).unwrap();
        assert!(matches!(s.eval_v(c(2.0, 0.0)), Err(SeriesError::OutOfDomain(_))));
    }

    #[test]
    fn v_at_one_half_regression() {
        // Direct summation over the first 1000 poles, pinned from the first run.
        let s = TruncatedLogSeries::standard(1000).unwrap();
        let b = s.eval_v(c(0.5, 0.0)).unwrap();
        assert_eq!(b.value, f64::NEG_INFINITY, "1/2 is an enumerated pole");
        let off = s.eval_v(c(0.5, 0.1)).unwrap();
        assert!(off.value.is_finite());
        assert_relative_eq!(off.value, V_AT_HALF_PLUS_TENTH_I, epsilon = 1e-12);
    }

    const V_AT_HALF_PLUS_TENTH_I: f64 = 0.1942952451125123;

    #[test]
    fn telescoping_increment() {
        let s = TruncatedLogSeries::standard(200).unwrap();
        let z = c(0.31, -0.47);
        for k in [1usize, 10, 150] {
            let a = s.truncated(k).unwrap().eval_v(z).unwrap().value;
            let b = s.truncated(k + 1).unwrap().eval_v(z).unwrap().value;
            assert_relative_eq!(b - a, s.term(k, z), epsilon = 1e-14);
        }
    }

    #[test]
    fn u_symmetric_and_zero_at_origin() {
        let s = TruncatedLogSeries::standard(200).unwrap();
        assert_eq!(s.eval_u(&[zero(), zero()]).unwrap().value, 0.0);
        let q = s.poles()[0];
        assert_eq!(s.eval_u(&[q, q]).unwrap().value, f64::NEG_INFINITY);
        let (a, b) = (c(0.13, 0.4), c(-0.6, 0.2));
        assert_eq!(s.eval_u(&[a, b]).unwrap(), s.eval_u(&[b, a]).unwrap());
        let (x, y, w) = (c(0.1, 0.2), c(-0.3, 0.7), c(0.5, -0.5));
        assert_eq!(s.eval_u(&[x, y, w]).unwrap(), s.eval_u(&[w, x, y]).unwrap());
    }

    #[test]
    fn cell_upper_dominates_samples() {
        let s = TruncatedLogSeries::standard(300).unwrap();
        let z = c(-0.9, 0.05);
        let rho = 0.01;
        let up = s.v_cell_upper(z, rho).unwrap();
        for k in 0..32 {
            let t = k as f64 / 32.0 * std::f64::consts::TAU;
            for r in [0.0, 0.5 * rho, rho] {
                let w = z + ComplexPoint::from_polar(r, t);
                assert!(s.eval_v(w).unwrap().upper <= up + 1e-15);
            }
        }
    }

    #[test]
    fn density_on_coarse_grid() {
        let s = TruncatedLogSeries::standard(5000).unwrap();
        let g = make_grid(Polydisc::unit(1), 9).unwrap();
        let r = pole_density(&s, &g);
        assert!(r.cells > 0);
        assert!(r.all_covered(), "{r:?}");
    }

    #[test]
    fn first_pole_in_disc() {
        let s = TruncatedLogSeries::standard(100).unwrap();
        let (_, q) = first_pole_in_unit_disc(&s).unwrap();
        assert_eq!(q, c(-0.5, -0.5));
    }
}
