//! Three-piece polygonal paths inside a sublevel region: a short segment from
//! each endpoint to a point whose coordinates are all poles, joined by a
//! coordinate-by-coordinate walk that always keeps some coordinate on a pole.

use serde::{Deserialize, Serialize};

use super::{Cube, TopologyError};
use crate::grid::ComplexPoint;
use crate::json::ext_f64;
use crate::series::{RegionSpec, TruncatedLogSeries, VSource, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Gamma1,
    Gamma2,
    Gamma3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCertificate {
    pub verdict: Verdict,
    #[serde(with = "ext_f64")]
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathWitness {
    pub vertices: Vec<Vec<ComplexPoint>>,
    pub labels: Vec<SegmentLabel>,
    pub certificates: Vec<PathCertificate>,
    /// Maximum allowed distance between consecutive vertices.
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    /// Step bound as a fraction of the cube diameter.
    pub step_fraction: f64,
    pub max_refinements: usize,
    /// Nearest poles tried per coordinate.
    pub candidates: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { step_fraction: 1.0 / 256.0, max_refinements: 6, candidates: 8 }
    }
}

fn lerp(a: &[ComplexPoint], b: &[ComplexPoint], t: f64) -> Vec<ComplexPoint> {
    a.iter().zip(b).map(|(p, q)| if t == 1.0 { *q } else { p + (q - p) * t }).collect()
}

fn dist(a: &[ComplexPoint], b: &[ComplexPoint]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
}

/// Samples of the segment `a → b`, endpoints included, no gap above `step`.
fn segment(a: &[ComplexPoint], b: &[ComplexPoint], step: f64) -> Vec<Vec<ComplexPoint>> {
    let pieces = ((dist(a, b) / step).ceil() as usize).max(1);
    (0..=pieces).map(|i| lerp(a, b, i as f64 / pieces as f64)).collect()
}

fn certified<S: VSource + ?Sized>(region: &RegionSpec, pts: &[Vec<ComplexPoint>], src: &S) -> bool {
    pts.iter().all(|z| region.member(z, src).verdict == Verdict::CertifiedIn)
}

/// Index tuples over `lens` ordered by rank sum, then lexicographically.
fn rank_tuples(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for &l in lens {
        out = out.into_iter().flat_map(|t| (0..l).map(move |i| [t.clone(), vec![i]].concat())).collect();
    }
    out.sort_by_key(|t| (t.iter().sum::<usize>(), t.clone()));
    out
}

/// Pole approximation of `z` inside `cube` reachable by a certified segment.
fn approximate<S: VSource + ?Sized>(
    z: &[ComplexPoint],
    cube: &Cube,
    region: &RegionSpec,
    series: &TruncatedLogSeries,
    src: &S,
    step: f64,
    cfg: &PathConfig,
) -> Result<(Vec<ComplexPoint>, Vec<Vec<ComplexPoint>>), TopologyError> {
    let lists: Vec<Vec<ComplexPoint>> = z
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let mut c: Vec<ComplexPoint> =
                series.poles().iter().copied().filter(|q| cube.contains_coordinate(j, *q)).collect();
            c.sort_by(|a, b| (a - p).norm().total_cmp(&(b - p).norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
            c.truncate(cfg.candidates);
            c
        })
        .collect();
    let tuples = rank_tuples(&lists.iter().map(Vec::len).collect::<Vec<_>>());
    for t in &tuples {
        let zp: Vec<ComplexPoint> = t.iter().enumerate().map(|(j, &i)| lists[j][i]).collect();
        let seg = segment(z, &zp, step);
        if certified(region, &seg, src) {
            return Ok((zp, seg));
        }
    }
    Err(TopologyError::SearchExhausted(tuples.len()))
}

/// Walk from `a` to `b` changing one coordinate at a time.
fn coordinate_walk(a: &[ComplexPoint], b: &[ComplexPoint], step: f64) -> Vec<Vec<ComplexPoint>> {
    let mut out = vec![a.to_vec()];
    let mut cur = a.to_vec();
    for j in 0..a.len() {
        let mut next = cur.clone();
        next[j] = b[j];
        out.extend(segment(&cur, &next, step).into_iter().skip(1));
        cur = next;
    }
    out
}

/// Certified polygonal path from `z` to `w` inside `cube ∩ region`.
pub fn build_path<S: VSource + ?Sized>(
    z: &[ComplexPoint],
    w: &[ComplexPoint],
    cube: &Cube,
    region: &RegionSpec,
    series: &TruncatedLogSeries,
    src: &S,
    cfg: &PathConfig,
) -> Result<PathWitness, TopologyError> {
    for p in [z, w] {
        if !cube.contains(p) || region.member(p, src).verdict != Verdict::CertifiedIn {
            return Err(TopologyError::EndpointNotFree(format!("{p:?}")));
        }
    }
    let cert = |v: &[ComplexPoint]| {
        let m = region.member(v, src);
        PathCertificate { verdict: m.verdict, bound: m.bound }
    };
    let mut step = cfg.step_fraction * cube.diameter();
    if z == w {
        return Ok(PathWitness { vertices: vec![z.to_vec()], labels: vec![SegmentLabel::Gamma1], certificates: vec![cert(z)], step });
    }
    for _ in 0..=cfg.max_refinements {
        let found = approximate(z, cube, region, series, src, step, cfg)
            .and_then(|a| approximate(w, cube, region, series, src, step, cfg).map(|b| (a, b)));
        let ((zp, g1), (wp, g3)) = found?;
        let g2 = coordinate_walk(&zp, &wp, step);
        if !certified(region, &g2, src) {
            step *= 0.5;
            continue;
        }
        let mut vertices = g1.clone();
        let mut labels = vec![SegmentLabel::Gamma1; g1.len()];
        vertices.extend(g2.iter().skip(1).cloned());
        labels.extend(std::iter::repeat(SegmentLabel::Gamma2).take(g2.len() - 1));
        vertices.extend(g3.iter().rev().skip(1).cloned());
        labels.extend(std::iter::repeat(SegmentLabel::Gamma3).take(g3.len() - 1));
        let certificates = vertices.iter().map(|v| cert(v)).collect();
        return Ok(PathWitness { vertices, labels, certificates, step });
    }
    Err(TopologyError::Uncertified(cfg.max_refinements))
}

/// Endpoints, step bound, cube membership and every recorded certificate.
pub fn verify_path<S: VSource + ?Sized>(
    witness: &PathWitness,
    z: &[ComplexPoint],
    w: &[ComplexPoint],
    cube: &Cube,
    region: &RegionSpec,
    src: &S,
) -> bool {
    let v = &witness.vertices;
    if v.is_empty() || v.len() != witness.labels.len() || v.len() != witness.certificates.len() {
        return false;
    }
    if v[0] != z || v[v.len() - 1] != w {
        return false;
    }
    if v.windows(2).any(|p| dist(&p[0], &p[1]) > witness.step * (1.0 + 1e-12)) {
        return false;
    }
    v.iter().zip(&witness.certificates).all(|(p, c)| {
        let m = region.member(p, src);
        cube.contains(p) && m.verdict == Verdict::CertifiedIn && c.verdict == m.verdict && c.bound.to_bits() == m.bound.to_bits()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (TruncatedLogSeries, RegionSpec, Cube) {
        let s = TruncatedLogSeries::standard(500).unwrap();
        let cube = Cube::around(&[ComplexPoint::new(0.0, 0.0); 2], 0.5).unwrap();
        (s, RegionSpec::a_n(2), cube)
    }

    #[test]
    fn rank_order() {
        let t = rank_tuples(&[2, 2]);
        assert_eq!(t, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn path_between_pole_planes() {
        let (s, a2, cube) = setup();
        let z = vec![ComplexPoint::new(0.25, 0.0), ComplexPoint::new(0.1, 0.3)];
        let w = vec![ComplexPoint::new(-0.2, 0.1), ComplexPoint::new(-0.25, 0.25)];
        let p = build_path(&z, &w, &cube, &a2, &s, &s, &PathConfig::default()).unwrap();
        assert!(verify_path(&p, &z, &w, &cube, &a2, &s));
        assert_eq!(p.labels[0], SegmentLabel::Gamma1);
        assert_eq!(*p.labels.last().unwrap(), SegmentLabel::Gamma3);
        let mut tampered = p.clone();
        tampered.certificates[1].verdict = Verdict::Unknown;
        assert!(!verify_path(&tampered, &z, &w, &cube, &a2, &s));
    }

    #[test]
    fn identical_endpoints_give_one_vertex() {
        let (s, a2, cube) = setup();
        let z = vec![ComplexPoint::new(0.25, 0.0), ComplexPoint::new(0.1, 0.3)];
        let p = build_path(&z, &z, &cube, &a2, &s, &s, &PathConfig::default()).unwrap();
        assert_eq!(p.vertices.len(), 1);
        assert!(verify_path(&p, &z, &z, &cube, &a2, &s));
    }

    #[test]
    fn no_pole_in_projection_exhausts() {
        let (s, a2, _) = setup();
        let z = vec![ComplexPoint::new(0.25, 0.0), ComplexPoint::new(0.1234567, 0.3456789)];
        let tiny = Cube::around(&z, 1e-4).unwrap();
        let w = vec![z[0], z[1] + ComplexPoint::new(1e-5, 0.0)];
        let r = build_path(&z, &w, &tiny, &a2, &s, &s, &PathConfig::default());
        assert!(matches!(r, Err(TopologyError::SearchExhausted(_))));
    }

    #[test]
    fn endpoint_outside_region_rejected() {
        let (s, a2, cube) = setup();
        let z = vec![ComplexPoint::new(0.3, 0.1), ComplexPoint::new(0.1, 0.3)];
        let r = build_path(&z, &z, &cube, &a2, &s, &s, &PathConfig::default());
        assert!(matches!(r, Err(TopologyError::EndpointNotFree(_))));
    }
}
