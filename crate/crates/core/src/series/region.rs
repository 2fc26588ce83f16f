//! Region descriptions with three-valued membership, the counterexample sets
//! built from them, and sampling certificates for balls and thinness.

use serde::{Deserialize, Serialize};

use super::{sum_u_parts, Membership, SeriesError, TruncatedLogSeries, VSource, Verdict};
use crate::grid::ComplexPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionSpec {
    /// `{u < threshold}` in `dimension` coordinates.
    SublevelOfU {
        #[serde(with = "crate::json::ext_f64")]
        threshold: f64,
        dimension: usize,
    },
    /// `{v < threshold}` in one coordinate.
    SublevelOfV {
        #[serde(with = "crate::json::ext_f64")]
        threshold: f64,
    },
    ClosedBall { center: Vec<ComplexPoint>, radius: f64 },
    OpenBall { center: Vec<ComplexPoint>, radius: f64 },
    ComplementOf { region: Box<RegionSpec> },
    ProductOf { factors: Vec<RegionSpec> },
    UnionOf { members: Vec<RegionSpec> },
    /// Fixed answer; results from slicing a region at a point.
    Constant { verdict: Verdict, dimension: usize },
}

impl RegionSpec {
    /// `𝒜_n = {u < -1}`.
    pub fn a_n(n: usize) -> Self {
        RegionSpec::SublevelOfU { threshold: -1.0, dimension: n }
    }

    /// `ℬ = {v < -1/2}`.
    pub fn b() -> Self {
        RegionSpec::SublevelOfV { threshold: -0.5 }
    }

    pub fn complement(region: RegionSpec) -> Self {
        RegionSpec::ComplementOf { region: Box::new(region) }
    }

    pub fn product(factors: Vec<RegionSpec>) -> Self {
        RegionSpec::ProductOf { factors }
    }

    pub fn union(members: Vec<RegionSpec>) -> Self {
        RegionSpec::UnionOf { members }
    }

    pub fn whole(dimension: usize) -> Self {
        RegionSpec::Constant { verdict: Verdict::CertifiedIn, dimension }
    }

    /// Number of complex coordinates, checking that the parts agree.
    pub fn dimension(&self) -> Result<usize, SeriesError> {
        let bad = |m: String| Err(SeriesError::InvalidRegion(m));
        match self {
            RegionSpec::SublevelOfU { dimension, .. } => {
                if *dimension == 0 {
                    return bad("sublevel of u needs at least one coordinate".into());
                }
                Ok(*dimension)
            }
            RegionSpec::SublevelOfV { .. } => Ok(1),
            RegionSpec::ClosedBall { center, radius } | RegionSpec::OpenBall { center, radius } => {
                if center.is_empty() || !(radius.is_finite() && *radius >= 0.0) {
                    return bad(format!("ball with {} coordinates and radius {radius}", center.len()));
                }
                Ok(center.len())
            }
            RegionSpec::ComplementOf { region } => region.dimension(),
            RegionSpec::ProductOf { factors } => {
                if factors.is_empty() {
                    return bad("empty product".into());
                }
                factors.iter().map(|f| f.dimension()).sum()
            }
            RegionSpec::UnionOf { members } => {
                let Some(first) = members.first() else {
                    return bad("empty union".into());
                };
                let d = first.dimension()?;
                for m in &members[1..] {
                    let e = m.dimension()?;
                    if e != d {
                        return bad(format!("union members of dimension {d} and {e}"));
                    }
                }
                Ok(d)
            }
            RegionSpec::Constant { dimension, .. } => Ok(*dimension),
        }
    }

    fn dim(&self) -> usize {
        self.dimension().unwrap_or(0)
    }

    /// Threshold of a sublevel region.
    pub fn sublevel_threshold(&self) -> Option<f64> {
        match self {
            RegionSpec::SublevelOfU { threshold, .. } | RegionSpec::SublevelOfV { threshold } => Some(*threshold),
            _ => None,
        }
    }

    pub fn member<S: VSource + ?Sized>(&self, z: &[ComplexPoint], src: &S) -> Membership {
        match self {
            RegionSpec::SublevelOfU { threshold, .. } => sublevel_member(z, *threshold, src),
            RegionSpec::SublevelOfV { threshold } => sublevel_member(&z[..1], *threshold, src),
            RegionSpec::ClosedBall { center, radius } => {
                let d = distance(z, center);
                Membership::new(if d <= *radius { Verdict::CertifiedIn } else { Verdict::CertifiedOut }, d)
            }
            RegionSpec::OpenBall { center, radius } => {
                let d = distance(z, center);
                Membership::new(if d < *radius { Verdict::CertifiedIn } else { Verdict::CertifiedOut }, d)
            }
            RegionSpec::ComplementOf { region } => {
                let m = region.member(z, src);
                Membership::new(m.verdict.not(), m.bound)
            }
            RegionSpec::ProductOf { factors } => {
                let mut at = 0;
                let mut out = Membership::new(Verdict::CertifiedIn, f64::NAN);
                let mut decided = false;
                for f in factors {
                    let d = f.dim();
                    let m = f.member(&z[at..at + d], src);
                    at += d;
                    match m.verdict {
                        Verdict::CertifiedOut => return m,
                        Verdict::Unknown if !decided => {
                            out = m;
                            decided = true;
                        }
                        Verdict::CertifiedIn if !decided => out = m,
                        _ => {}
                    }
                }
                out
            }
            RegionSpec::UnionOf { members } => {
                let mut out = Membership::new(Verdict::CertifiedOut, f64::NAN);
                let mut decided = false;
                for r in members {
                    let m = r.member(z, src);
                    match m.verdict {
                        Verdict::CertifiedIn => return m,
                        Verdict::Unknown if !decided => {
                            out = m;
                            decided = true;
                        }
                        Verdict::CertifiedOut if !decided => out = m,
                        _ => {}
                    }
                }
                out
            }
            RegionSpec::Constant { verdict, .. } => Membership::new(*verdict, f64::NAN),
        }
    }

    /// Verdict valid for the whole polydisc of per-coordinate radius `rho`
    /// about `z`.
    pub fn member_cell<S: VSource + ?Sized>(&self, z: &[ComplexPoint], rho: f64, src: &S) -> Verdict {
        match self {
            RegionSpec::SublevelOfU { threshold, .. } => cell_member(z, rho, *threshold, src),
            RegionSpec::SublevelOfV { threshold } => cell_member(&z[..1], rho, *threshold, src),
            RegionSpec::ClosedBall { center, radius } | RegionSpec::OpenBall { center, radius } => {
                let d = distance(z, center);
                let spread = rho * (center.len() as f64).sqrt();
                let closed = matches!(self, RegionSpec::ClosedBall { .. });
                if d + spread < *radius || (closed && d + spread == *radius) {
                    Verdict::CertifiedIn
                } else if d - spread > *radius || (!closed && d - spread == *radius) {
                    Verdict::CertifiedOut
                } else {
                    Verdict::Unknown
                }
            }
            RegionSpec::ComplementOf { region } => region.member_cell(z, rho, src).not(),
            RegionSpec::ProductOf { factors } => {
                let mut at = 0;
                let mut v = Verdict::CertifiedIn;
                for f in factors {
                    let d = f.dim();
                    v = v.and(f.member_cell(&z[at..at + d], rho, src));
                    at += d;
                    if v == Verdict::CertifiedOut {
                        break;
                    }
                }
                v
            }
            RegionSpec::UnionOf { members } => {
                let mut v = Verdict::CertifiedOut;
                for r in members {
                    v = v.or(r.member_cell(z, rho, src));
                    if v == Verdict::CertifiedIn {
                        break;
                    }
                }
                v
            }
            RegionSpec::Constant { verdict, .. } => *verdict,
        }
    }

    /// The slice `{w : (…, a, …) ∈ self}` with `a` fixed at coordinates
    /// `start..start + a.len()`. The fixed block must not split a sublevel
    /// set or ball.
    pub fn fiber<S: VSource + ?Sized>(&self, start: usize, a: &[ComplexPoint], src: &S) -> Result<RegionSpec, SeriesError> {
        let dim = self.dimension()?;
        if start + a.len() > dim {
            return Err(SeriesError::InvalidRegion(format!(
                "fixed block {start}..{} exceeds dimension {dim}",
                start + a.len()
            )));
        }
        Ok(self.slice(0, start, a, src)?.simplify())
    }

    fn slice<S: VSource + ?Sized>(&self, offset: usize, start: usize, a: &[ComplexPoint], src: &S) -> Result<RegionSpec, SeriesError> {
        let dim = self.dim();
        let (lo, hi) = (offset, offset + dim);
        let (blo, bhi) = (start, start + a.len());
        if bhi <= lo || blo >= hi {
            return Ok(self.clone());
        }
        if blo <= lo && hi <= bhi {
            let m = self.member(&a[lo - blo..hi - blo], src);
            return Ok(RegionSpec::Constant { verdict: m.verdict, dimension: 0 });
        }
        match self {
            RegionSpec::ComplementOf { region } => Ok(RegionSpec::complement(region.slice(offset, start, a, src)?)),
            RegionSpec::ProductOf { factors } => {
                let mut at = offset;
                let mut out = Vec::with_capacity(factors.len());
                for f in factors {
                    out.push(f.slice(at, start, a, src)?);
                    at += f.dim();
                }
                Ok(RegionSpec::product(out))
            }
            RegionSpec::UnionOf { members } => Ok(RegionSpec::union(
                members.iter().map(|m| m.slice(offset, start, a, src)).collect::<Result<_, _>>()?,
            )),
            RegionSpec::Constant { verdict, dimension } => {
                let overlap = bhi.min(hi) - blo.max(lo);
                Ok(RegionSpec::Constant { verdict: *verdict, dimension: dimension - overlap })
            }
            _ => Err(SeriesError::InvalidRegion("fixed block splits an indecomposable region".into())),
        }
    }

    fn simplify(self) -> RegionSpec {
        match self {
            RegionSpec::ComplementOf { region } => match region.simplify() {
                RegionSpec::Constant { verdict, dimension } => RegionSpec::Constant { verdict: verdict.not(), dimension },
                r => RegionSpec::complement(r),
            },
            RegionSpec::ProductOf { factors } => {
                let factors: Vec<RegionSpec> = factors.into_iter().map(RegionSpec::simplify).collect();
                let total: usize = factors.iter().map(RegionSpec::dim).sum();
                if factors.iter().any(|f| matches!(f, RegionSpec::Constant { verdict: Verdict::CertifiedOut, .. })) {
                    return RegionSpec::Constant { verdict: Verdict::CertifiedOut, dimension: total };
                }
                let mut kept: Vec<RegionSpec> = factors
                    .into_iter()
                    .filter(|f| !matches!(f, RegionSpec::Constant { verdict: Verdict::CertifiedIn, dimension: 0 }))
                    .collect();
                match kept.len() {
                    0 => RegionSpec::whole(total),
                    1 => kept.pop().expect("one factor"),
                    _ => RegionSpec::product(kept),
                }
            }
            RegionSpec::UnionOf { members } => {
                let members: Vec<RegionSpec> = members.into_iter().map(RegionSpec::simplify).collect();
                let total = members.first().map(RegionSpec::dim).unwrap_or(0);
                if members.iter().any(|m| matches!(m, RegionSpec::Constant { verdict: Verdict::CertifiedIn, .. })) {
                    return RegionSpec::whole(total);
                }
                let mut kept: Vec<RegionSpec> = members
                    .into_iter()
                    .filter(|m| !matches!(m, RegionSpec::Constant { verdict: Verdict::CertifiedOut, .. }))
                    .collect();
                match kept.len() {
                    0 => RegionSpec::Constant { verdict: Verdict::CertifiedOut, dimension: total },
                    1 => kept.pop().expect("one member"),
                    _ => RegionSpec::union(kept),
                }
            }
            r => r,
        }
    }
}

fn distance(z: &[ComplexPoint], c: &[ComplexPoint]) -> f64 {
    z.iter().zip(c).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

fn sublevel_member<S: VSource + ?Sized>(z: &[ComplexPoint], threshold: f64, src: &S) -> Membership {
    let mut parts = Vec::with_capacity(z.len());
    for p in z {
        match src.v(*p) {
            Some(b) => parts.push(b.value),
            None => return Membership::new(Verdict::Unknown, f64::NAN),
        }
    }
    let b = sum_u_parts(&mut parts, src.tail());
    let exact = b.value == f64::NEG_INFINITY || z.iter().all(|p| p.re == 0.0 && p.im == 0.0);
    let verdict = if b.upper < threshold {
        Verdict::CertifiedIn
    } else if exact && b.value >= threshold {
        Verdict::CertifiedOut
    } else {
        Verdict::Unknown
    };
    Membership::new(verdict, b.upper)
}

fn cell_member<S: VSource + ?Sized>(z: &[ComplexPoint], rho: f64, threshold: f64, src: &S) -> Verdict {
    let mut parts = Vec::with_capacity(z.len());
    for p in z {
        match src.v_cell_upper(*p, rho) {
            Some(b) => parts.push(b),
            None => return Verdict::Unknown,
        }
    }
    if sum_u_parts(&mut parts, 0.0).value < threshold {
        Verdict::CertifiedIn
    } else {
        Verdict::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<ComplexPoint>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<ComplexPoint>, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn disc(center: ComplexPoint, radius: f64) -> Self {
        Self { center: vec![center], radius }
    }

    pub fn region(&self) -> RegionSpec {
        RegionSpec::ClosedBall { center: self.center.clone(), radius: self.radius }
    }

    /// `m` deterministic samples: the center, then boundary points spread
    /// over the coordinate directions and equally spaced angles.
    pub fn sample_points(&self, m: usize) -> Vec<Vec<ComplexPoint>> {
        let mut out = vec![self.center.clone()];
        if m <= 1 {
            return out;
        }
        let n = self.center.len();
        let rest = m - 1;
        let per_axis = rest.div_ceil(n);
        for s in 0..rest {
            let (j, k) = (s % n, s / n);
            let theta = std::f64::consts::TAU * k as f64 / per_axis as f64;
            let mut p = self.center.clone();
            p[j] += ComplexPoint::from_polar(self.radius, theta);
            out.push(p);
        }
        out
    }
}

/// Sampling parameters for ball certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationConfig {
    pub samples: usize,
    pub safety_gap: f64,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        Self { samples: 64, safety_gap: super::DEFAULT_SAFETY_GAP }
    }
}

/// Outcome of sampling a ball against a sublevel set. This is evidence from
/// finitely many points, not a proof of containment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCertificate {
    pub certified: bool,
    #[serde(with = "crate::json::ext_f64")]
    pub worst_bound: f64,
    pub samples: usize,
    pub safety_gap: f64,
    pub kind: String,
}

pub fn certify_ball_inside<S: VSource + ?Sized>(
    ball: &Ball,
    region: &RegionSpec,
    config: &CertificationConfig,
    src: &S,
) -> Result<BallCertificate, SeriesError> {
    let threshold = region
        .sublevel_threshold()
        .ok_or_else(|| SeriesError::InvalidRegion("ball certificates need a sublevel region".into()))?;
    if region.dimension()? != ball.center.len() {
        return Err(SeriesError::InvalidRegion("ball and region dimensions differ".into()));
    }
    if config.samples == 0 {
        return Err(SeriesError::InvalidConstruction("sample count must be at least 1".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut certified = true;
    for p in ball.sample_points(config.samples) {
        let m = region.member(&p, src);
        let bound = if m.bound.is_nan() { f64::INFINITY } else { m.bound };
        worst = worst.max(bound);
        if !(m.verdict.is_in() && bound <= threshold - config.safety_gap) {
            certified = false;
        }
    }
    Ok(BallCertificate {
        certified,
        worst_bound: worst,
        samples: config.samples,
        safety_gap: config.safety_gap,
        kind: "sampling".into(),
    })
}

/// Largest radius in `[0, r_max]` found by bisection at which the ball about
/// `center` still certifies. `None` when even radius 0 fails.
pub fn max_certified_radius<S: VSource + ?Sized>(
    center: &[ComplexPoint],
    region: &RegionSpec,
    config: &CertificationConfig,
    src: &S,
    r_max: f64,
    iterations: usize,
) -> Result<Option<f64>, SeriesError> {
    let ok = |r: f64| certify_ball_inside(&Ball::new(center.to_vec(), r), region, config, src).map(|c| c.certified);
    if !ok(0.0)? {
        return Ok(None);
    }
    if ok(r_max)? {
        return Ok(Some(r_max));
    }
    let (mut lo, mut hi) = (0.0, r_max);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

fn require_certified<S: VSource + ?Sized>(
    name: &str,
    ball: &Ball,
    region: &RegionSpec,
    config: &CertificationConfig,
    src: &S,
) -> Result<(), SeriesError> {
    let c = certify_ball_inside(ball, region, config, src)?;
    if !c.certified {
        return Err(SeriesError::InvalidConstruction(format!(
            "{name} is not certified inside the set (worst bound {})",
            c.worst_bound
        )));
    }
    Ok(())
}

/// `(E^p \ 𝒜_p) × F_q ∪ F_p × (E^q \ 𝒜_q)`.
pub fn build_s_prop_b<S: VSource + ?Sized>(
    p: usize,
    q: usize,
    f_p: &Ball,
    f_q: &Ball,
    config: &CertificationConfig,
    src: &S,
) -> Result<RegionSpec, SeriesError> {
    let (a_p, a_q) = (RegionSpec::a_n(p), RegionSpec::a_n(q));
    require_certified("F_p", f_p, &a_p, config, src)?;
    require_certified("F_q", f_q, &a_q, config, src)?;
    Ok(RegionSpec::union(vec![
        RegionSpec::product(vec![RegionSpec::complement(a_p), f_q.region()]),
        RegionSpec::product(vec![f_p.region(), RegionSpec::complement(a_q)]),
    ]))
}

/// The three-fold set built from a ball `F ⊂ ℬ`, with its fibers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropCSet {
    pub s: RegionSpec,
    /// Fiber over `F` in each coordinate: `(E \ ℬ) × (E \ ℬ)`.
    pub fibers: [RegionSpec; 3],
}

pub fn build_s_prop_c<S: VSource + ?Sized>(
    f: &Ball,
    config: &CertificationConfig,
    src: &S,
) -> Result<PropCSet, SeriesError> {
    require_certified("F", f, &RegionSpec::b(), config, src)?;
    let cb = RegionSpec::complement(RegionSpec::b());
    let term = |j: usize| {
        RegionSpec::product((0..3).map(|k| if k == j { f.region() } else { cb.clone() }).collect())
    };
    let fiber = RegionSpec::product(vec![cb.clone(), cb.clone()]);
    Ok(PropCSet {
        s: RegionSpec::union(vec![term(0), term(1), term(2)]),
        fibers: [fiber.clone(), fiber.clone(), fiber],
    })
}

/// Evidence that `{u < u(a)}`-type separation holds near `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlurithinCertificate {
    pub point: Vec<ComplexPoint>,
    #[serde(with = "crate::json::ext_f64")]
    pub value: f64,
    pub value_exact: bool,
    #[serde(with = "crate::json::ext_f64")]
    pub sup_bound: f64,
    pub radius: f64,
    pub sampled: usize,
    pub in_region: usize,
    pub passes: bool,
}

/// Samples the ball of radius `rho` about `point` on a lattice with
/// `samples_per_axis` nodes per real axis, plus the points obtained by moving
/// one coordinate onto a nearby pole, and bounds `u` over the samples that are
/// certified members of `region`.
pub fn plurithin_certificate(
    point: &[ComplexPoint],
    region: &RegionSpec,
    series: &TruncatedLogSeries,
    rho: f64,
    samples_per_axis: usize,
) -> Result<PlurithinCertificate, SeriesError> {
    let n = point.len();
    if region.dimension()? != n {
        return Err(SeriesError::InvalidRegion("region and point dimensions differ".into()));
    }
    let u = series.eval_u(point)?;
    let exact = u.value == f64::NEG_INFINITY || point.iter().all(|p| p.re == 0.0 && p.im == 0.0);

    let mut samples: Vec<Vec<ComplexPoint>> = Vec::new();
    let s = samples_per_axis.max(1);
    let step = if s > 1 { 2.0 * rho / (s - 1) as f64 } else { 0.0 };
    let offset = |i: usize| if s > 1 { -rho + i as f64 * step } else { 0.0 };
    let total = s.pow(2 * n as u32);
    for mut idx in 0..total {
        let mut p = point.to_vec();
        for z in p.iter_mut() {
            let (i, k) = (idx % s, (idx / s) % s);
            idx /= s * s;
            *z += ComplexPoint::new(offset(i), offset(k));
        }
        samples.push(p);
    }
    for j in 0..n {
        for q in series.poles() {
            if (q - point[j]).norm() <= rho {
                let mut p = point.to_vec();
                p[j] = *q;
                samples.push(p);
            }
        }
    }

    let mut sup = f64::NEG_INFINITY;
    let mut sampled = 0;
    let mut in_region = 0;
    for p in &samples {
        if distance(p, point) > rho || p.iter().any(|z| z.norm() >= 2.0) {
            continue;
        }
        sampled += 1;
        let m = region.member(p, series);
        if m.verdict.is_in() {
            in_region += 1;
            sup = sup.max(series.eval_u(p)?.upper);
        }
    }
    let passes = exact && u.value.is_finite() && sup < u.value;
    Ok(PlurithinCertificate {
        point: point.to_vec(),
        value: u.value,
        value_exact: exact,
        sup_bound: sup,
        radius: rho,
        sampled,
        in_region,
        passes,
    })
}
