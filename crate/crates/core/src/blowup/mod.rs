//! Finite pole sums `f(z) = Σ c_k / (z - w_k)` with poles on the boundary of
//! a disc: holomorphic inside, unbounded along the approach to each pole.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{ComplexPoint, Grid};

#[derive(Debug, Error)]
pub enum BlowupError {
    #[error("pole {index} at {pole} lies inside the domain")]
    InvalidPole { index: usize, pole: ComplexPoint },
    #[error("coefficient {0} is not positive and finite")]
    InvalidCoefficient(usize),
    #[error("{poles} poles but {coefficients} coefficients")]
    LengthMismatch { poles: usize, coefficients: usize },
    #[error("pole index {index} out of range for {count} poles")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("approach offsets must be positive and strictly decreasing")]
    BadOffsets,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InnerDomain {
    Disc { center: ComplexPoint, radius: f64 },
}

impl InnerDomain {
    pub fn unit_disc() -> Self {
        InnerDomain::Disc { center: ComplexPoint::new(0.0, 0.0), radius: 1.0 }
    }

    fn center(&self) -> ComplexPoint {
        match self {
            InnerDomain::Disc { center, .. } => *center,
        }
    }

    fn radius(&self) -> f64 {
        match self {
            InnerDomain::Disc { radius, .. } => *radius,
        }
    }

    pub fn contains(&self, z: ComplexPoint) -> bool {
        (z - self.center()).norm() < self.radius()
    }

    /// Boundary point at `angle`, pushed outward by a few ulps when rounding
    /// lands it inside.
    pub fn boundary_point(&self, angle: f64) -> ComplexPoint {
        let c = self.center();
        let mut p = c + ComplexPoint::from_polar(self.radius(), angle);
        while self.contains(p) {
            p = c + (p - c) * (1.0 + f64::EPSILON);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `c_k = ratio^(k-1)`, so `c_1 = 1`.
    Geometric { ratio: f64 },
}

impl Default for CoefficientRule {
    fn default() -> Self {
        CoefficientRule::Geometric { ratio: 0.5 }
    }
}

impl CoefficientRule {
    pub fn coefficients(&self, m: usize) -> Vec<f64> {
        match self {
            CoefficientRule::Geometric { ratio } => (0..m).map(|k| ratio.powi(k as i32)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupWitness {
    pub poles: Vec<ComplexPoint>,
    pub coefficients: Vec<f64>,
    pub domain: InnerDomain,
}

impl BlowupWitness {
    pub fn new(domain: InnerDomain, poles: Vec<ComplexPoint>, coefficients: Vec<f64>) -> Result<Self, BlowupError> {
        if !(domain.radius() > 0.0 && domain.radius().is_finite()) {
            return Err(BlowupError::InvalidDomain(format!("radius {}", domain.radius())));
        }
        if poles.len() != coefficients.len() {
            return Err(BlowupError::LengthMismatch { poles: poles.len(), coefficients: coefficients.len() });
        }
        if let Some(index) = poles.iter().position(|w| domain.contains(*w)) {
            return Err(BlowupError::InvalidPole { index, pole: poles[index] });
        }
        if let Some(k) = coefficients.iter().position(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(BlowupError::InvalidCoefficient(k));
        }
        Ok(Self { poles, coefficients, domain })
    }

    pub fn eval(&self, z: ComplexPoint) -> ComplexPoint {
        if self.poles.contains(&z) {
            return ComplexPoint::new(f64::INFINITY, f64::INFINITY);
        }
        self.poles.iter().zip(&self.coefficients).map(|(w, c)| *c / (z - w)).sum()
    }

    pub fn modulus(&self, z: ComplexPoint) -> f64 {
        if self.poles.contains(&z) {
            return f64::INFINITY;
        }
        self.eval(z).norm()
    }

    /// `Σ c_k / δ`, a bound for `|f|` on points at distance `>= δ` from
    /// every pole.
    pub fn compact_bound(&self, delta: f64) -> f64 {
        self.coefficients.iter().sum::<f64>() / delta
    }

    /// Point at distance `offset` from `boundary_point` along the inward
    /// normal.
    pub fn approach_point(&self, boundary_point: ComplexPoint, offset: f64) -> ComplexPoint {
        let c = self.domain.center();
        let n = (boundary_point - c) / (boundary_point - c).norm();
        boundary_point - n * offset
    }
}

/// `m` poles equally spaced on the boundary circle starting at angle 0.
pub fn build_blowup(domain: InnerDomain, m: usize, rule: CoefficientRule) -> Result<BlowupWitness, BlowupError> {
    let poles = (0..m).map(|k| domain.boundary_point(std::f64::consts::TAU * k as f64 / m as f64)).collect();
    BlowupWitness::new(domain, poles, rule.coefficients(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerification {
    pub target: ComplexPoint,
    pub offsets: Vec<f64>,
    pub moduli: Vec<f64>,
    pub threshold: f64,
    pub passes: bool,
}

impl BlowupVerification {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset,modulus\n");
        for (o, m) in self.offsets.iter().zip(&self.moduli) {
            let _ = writeln!(out, "{o:e},{m:e}");
        }
        out
    }
}

/// Passes when the last value exceeds `threshold` and the last half of the
/// table is strictly increasing.
pub fn verify_blowup_at(
    witness: &BlowupWitness,
    target: ComplexPoint,
    offsets: &[f64],
    threshold: f64,
) -> Result<BlowupVerification, BlowupError> {
    if offsets.is_empty() || offsets.iter().any(|o| !(*o > 0.0)) || offsets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BlowupError::BadOffsets);
    }
    let moduli: Vec<f64> = offsets.iter().map(|o| witness.modulus(witness.approach_point(target, *o))).collect();
    let tail = &moduli[moduli.len() / 2..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let passes = increasing && *moduli.last().expect("nonempty") > threshold;
    Ok(BlowupVerification { target, offsets: offsets.to_vec(), moduli, threshold, passes })
}

pub fn verify_blowup(
    witness: &BlowupWitness,
    pole_index: usize,
    offsets: &[f64],
    threshold: f64,
) -> Result<BlowupVerification, BlowupError> {
    let target = *witness
        .poles
        .get(pole_index)
        .ok_or(BlowupError::IndexOutOfRange { index: pole_index, count: witness.poles.len() })?;
    verify_blowup_at(witness, target, offsets, threshold)
}

/// `10^-1, …, 10^-n`.
pub fn decade_offsets(n: u32) -> Vec<f64> {
    (1..=n as i32).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactCheck {
    pub delta: f64,
    pub nodes: usize,
    pub max_modulus: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `max |f|` over grid nodes in the closed disc of radius `radius - δ`.
pub fn check_compact_bound(witness: &BlowupWitness, grid: &Grid, delta: f64) -> CompactCheck {
    let (c, r) = (witness.domain.center(), witness.domain.radius());
    let mut max = 0.0f64;
    let mut nodes = 0;
    for node in 0..grid.node_count() {
        let z = grid.coords(node)[0];
        if (z - c).norm() <= r - delta {
            nodes += 1;
            max = max.max(witness.modulus(z));
        }
    }
    let bound = witness.compact_bound(delta);
    CompactCheck { delta, nodes, max_modulus: max, bound, holds: max <= bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> ComplexPoint {
        ComplexPoint::new(re, im)
    }

    #[test]
    fn empty_sum_is_zero() {
        let w = build_blowup(InnerDomain::unit_disc(), 0, CoefficientRule::default()).unwrap();
        assert_eq!(w.eval(c(0.3, 0.2)), c(0.0, 0.0));
    }

    #[test]
    fn single_pole_arithmetic() {
        let w = build_blowup(InnerDomain::unit_disc(), 1, CoefficientRule::default()).unwrap();
        assert_eq!(w.poles, vec![c(1.0, 0.0)]);
        assert_eq!(w.coefficients, vec![1.0]);
        assert!((w.modulus(c(1.0 - 1e-4, 0.0)) - 1e4).abs() < 1e-6);
        assert_eq!(w.modulus(c(1.0, 0.0)), f64::INFINITY);
        let v = verify_blowup(&w, 0, &decade_offsets(6), 1e3).unwrap();
        assert!(v.passes);
        for (k, m) in v.moduli.iter().enumerate() {
            assert!((m / 10f64.powi(k as i32 + 1) - 1.0).abs() < 1e-9);
        }
        assert!(v.to_csv().starts_with("offset,modulus\n1e-1,"));
    }

    #[test]
    fn non_pole_approach_is_bounded() {
        let w = build_blowup(InnerDomain::unit_disc(), 1, CoefficientRule::default()).unwrap();
        let v = verify_blowup_at(&w, c(-1.0, 0.0), &decade_offsets(6), 1e3).unwrap();
        assert!(!v.passes);
        assert!(v.moduli.iter().all(|m| *m <= 1.0 / 1.0));
    }

    #[test]
    fn ten_poles_pass() {
        let w = build_blowup(InnerDomain::unit_disc(), 10, CoefficientRule::default()).unwrap();
        for k in 0..10 {
            assert!(verify_blowup(&w, k, &decade_offsets(6), 1e3).unwrap().passes, "pole {k}");
        }
    }

    #[test]
    fn boundary_points_stay_outside() {
        let d = InnerDomain::unit_disc();
        for m in 1..200 {
            assert!(build_blowup(d, m, CoefficientRule::default()).is_ok(), "{m} poles");
        }
        let p = d.boundary_point(0.3);
        assert!(!d.contains(p) && (p.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            BlowupWitness::new(InnerDomain::unit_disc(), vec![c(0.5, 0.0)], vec![1.0]),
            Err(BlowupError::InvalidPole { index: 0, .. })
        ));
        let w = build_blowup(InnerDomain::unit_disc(), 2, CoefficientRule::default()).unwrap();
        assert!(matches!(verify_blowup(&w, 2, &[0.1], 1.0), Err(BlowupError::IndexOutOfRange { .. })));
        assert!(matches!(verify_blowup(&w, 0, &[0.1, 0.2], 1.0), Err(BlowupError::BadOffsets)));
    }

    #[test]
    fn witness_json_shape() {
        let w = build_blowup(InnerDomain::unit_disc(), 1, CoefficientRule::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&w).unwrap();
        assert_eq!(v["poles"][0], serde_json::json!([1.0, 0.0]));
        assert_eq!(v["domain"]["type"], "disc");
        assert_eq!(v["domain"]["radius"], 1.0);
    }
}
