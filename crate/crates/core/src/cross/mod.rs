//! Crosses, generalized crosses and their envelopes `{Σ ω_j(z_j) < c}`.
//!
//! Envelope masks live on a product of factor grids and are kept lazy: only
//! the factor values are stored and the product mask is materialised on
//! request.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extremal::{certified_cell_mask, certified_point_mask, solve_h, ExtremalError, ObstacleProblem, SolverConfig};
use crate::grid::{ComplexPoint, Grid, GridError, GridFunction, Mask, Polydisc};
use crate::json::ext_f64;
use crate::series::{Membership, RegionSpec, SeriesError, VSource, Verdict};

/// Product masks above this many nodes are never materialised.
pub const MATERIALISE_LIMIT: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum CrossError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("node {node:?} is certified in T but has envelope sum {sum} >= {threshold}")]
    Containment { node: Vec<usize>, sum: f64, threshold: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Extremal(#[from] ExtremalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSpec {
    pub domains: Vec<Polydisc>,
    pub sets: Vec<RegionSpec>,
}

impl CrossSpec {
    pub fn new(domains: Vec<Polydisc>, sets: Vec<RegionSpec>) -> Result<Self, CrossError> {
        if domains.len() < 2 || domains.len() != sets.len() {
            return Err(CrossError::Dimension(format!("{} domains, {} sets", domains.len(), sets.len())));
        }
        for (j, (d, a)) in domains.iter().zip(&sets).enumerate() {
            if a.dimension()? != d.dim() {
                return Err(CrossError::Dimension(format!("factor {j}: set of dimension {} in a domain of dimension {}", a.dimension()?, d.dim())));
            }
        }
        Ok(Self { domains, sets })
    }

    pub fn factors(&self) -> usize {
        self.domains.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.domains.iter().map(Polydisc::dim).collect()
    }
}

/// Cross with exceptional sets `S_j` over the product of the other factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCrossSpec {
    pub cross: CrossSpec,
    pub exceptional: Vec<RegionSpec>,
}

impl GeneralizedCrossSpec {
    pub fn new(cross: CrossSpec, exceptional: Vec<RegionSpec>) -> Result<Self, CrossError> {
        let dims = cross.dims();
        let total: usize = dims.iter().sum();
        if exceptional.len() != dims.len() {
            return Err(CrossError::Dimension(format!("{} exceptional sets for {} factors", exceptional.len(), dims.len())));
        }
        for (j, s) in exceptional.iter().enumerate() {
            if s.dimension()? != total - dims[j] {
                return Err(CrossError::Dimension(format!("S_{} has dimension {}, expected {}", j + 1, s.dimension()?, total - dims[j])));
            }
        }
        Ok(Self { cross, exceptional })
    }

    /// `T(E, …, E; E, …, E; S_1, …, S_n)` with every `S_j = (E \ ℬ)^{n-1}`.
    pub fn prop_c(n: usize) -> Result<Self, CrossError> {
        let cb = RegionSpec::complement(RegionSpec::b());
        let cross = CrossSpec::new(vec![Polydisc::unit(1); n], vec![RegionSpec::whole(1); n])?;
        Self::new(cross, vec![RegionSpec::product(vec![cb; n - 1]); n])
    }
}

fn domain_verdict(d: &Polydisc, z: &[ComplexPoint]) -> Verdict {
    if d.contains(z) { Verdict::CertifiedIn } else { Verdict::CertifiedOut }
}

/// Three-valued membership in the generalized cross. The bound field is not
/// meaningful for unions of slabs and is NaN.
pub fn member_t<S: VSource + ?Sized>(spec: &GeneralizedCrossSpec, point: &[ComplexPoint], src: &S) -> Membership {
    let dims = spec.cross.dims();
    let mut offsets = vec![0];
    for d in &dims {
        offsets.push(offsets.last().unwrap() + d);
    }
    let block = |k: usize| &point[offsets[k]..offsets[k + 1]];
    let mut verdict = Verdict::CertifiedOut;
    for j in 0..dims.len() {
        let mut term = domain_verdict(&spec.cross.domains[j], block(j));
        let mut rest = Vec::with_capacity(point.len() - dims[j]);
        for k in (0..dims.len()).filter(|&k| k != j) {
            term = term
                .and(domain_verdict(&spec.cross.domains[k], block(k)))
                .and(spec.cross.sets[k].member(block(k), src).verdict);
            rest.extend_from_slice(block(k));
        }
        term = term.and(spec.exceptional[j].member(&rest, src).verdict.not());
        verdict = verdict.or(term);
    }
    Membership::new(verdict, f64::NAN)
}

/// `{Σ ω_j(z_j) < threshold}` over the product of the factor grids.
#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub threshold: f64,
    pub omegas: Vec<GridFunction>,
    pub strict: bool,
    /// Factor node indices of the first row-major node with sum `>= threshold`.
    pub witness: Option<Vec<usize>>,
    pub in_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub threshold: f64,
    pub strict: bool,
    pub witness: Option<Vec<ComplexPoint>>,
    #[serde(with = "ext_f64")]
    pub witness_sum: f64,
    pub in_fraction: f64,
}

fn domain_values(f: &GridFunction) -> Vec<f64> {
    f.masked().map(|(_, v)| v).collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Number of `c` in ascending `last` with `s + c < t`.
fn count_below(s: f64, last: &[f64], t: f64) -> usize {
    last.partition_point(|&c| s + c < t)
}

/// Number of tuples with left-to-right sum `< t`, given the partial sum `s`.
fn count_tuples(s: f64, rest: &[Vec<f64>], t: f64) -> u128 {
    match rest.len() {
        0 => u128::from(s < t),
        1 => count_below(s, &rest[0], t) as u128,
        2 => {
            let (b, c) = (&rest[0], &rest[1]);
            let mut j = c.len();
            let mut total = 0u128;
            for &x in b {
                let sb = s + x;
                while j > 0 && sb + c[j - 1] >= t {
                    j -= 1;
                }
                total += j as u128;
            }
            total
        }
        _ => rest[0].iter().map(|&x| count_tuples(s + x, &rest[1..], t)).sum(),
    }
}

impl EnvelopeResult {
    pub fn factor_count(&self) -> usize {
        self.omegas.len()
    }

    /// Left-to-right sum at the given factor nodes.
    pub fn sum_at(&self, nodes: &[usize]) -> f64 {
        self.omegas.iter().zip(nodes).fold(0.0, |s, (f, &n)| s + f.value(n))
    }

    pub fn in_domain(&self, nodes: &[usize]) -> bool {
        self.omegas.iter().zip(nodes).all(|(f, &n)| f.in_domain(n))
    }

    pub fn contains(&self, nodes: &[usize]) -> bool {
        self.in_domain(nodes) && self.sum_at(nodes) < self.threshold
    }

    pub fn product_grid(&self) -> Result<Grid, CrossError> {
        let mut g = self.omegas[0].grid().clone();
        for f in &self.omegas[1..] {
            g = g.product(f.grid())?;
        }
        Ok(g)
    }

    /// Factor node indices of a product node.
    pub fn split_node(&self, mut node: usize) -> Vec<usize> {
        let mut out = vec![0; self.omegas.len()];
        for (j, f) in self.omegas.iter().enumerate().rev() {
            let n = f.grid().node_count();
            out[j] = node % n;
            node /= n;
        }
        out
    }

    pub fn point(&self, nodes: &[usize]) -> Vec<ComplexPoint> {
        self.omegas.iter().zip(nodes).flat_map(|(f, &n)| f.grid().coords(n)).collect()
    }

    /// Full product mask; refuses products above [`MATERIALISE_LIMIT`].
    pub fn mask(&self) -> Result<Mask, CrossError> {
        let grid = self.product_grid()?;
        grid.ensure_materialisable(MATERIALISE_LIMIT)?;
        let bits: Vec<bool> = (0..grid.node_count())
            .into_par_iter()
            .map(|node| self.contains(&self.split_node(node)))
            .collect();
        Ok(Mask::new(grid, bits)?)
    }

    pub fn report(&self) -> EnvelopeReport {
        EnvelopeReport {
            threshold: self.threshold,
            strict: self.strict,
            witness: self.witness.as_ref().map(|w| self.point(w)),
            witness_sum: self.witness.as_ref().map_or(f64::NAN, |w| self.sum_at(w)),
            in_fraction: self.in_fraction,
        }
    }
}

/// Lexicographically first domain tuple with sum `>= t`, using that the sum
/// is monotone in every argument.
fn first_witness(omegas: &[GridFunction], maxima: &[f64], t: f64) -> Option<Vec<usize>> {
    let mut chosen = Vec::with_capacity(omegas.len());
    let mut s = 0.0;
    for (j, f) in omegas.iter().enumerate() {
        let (node, v) = f.masked().find(|&(_, v)| maxima[j + 1..].iter().fold(s + v, |acc, m| acc + m) >= t)?;
        chosen.push(node);
        s += v;
    }
    Some(chosen)
}

pub fn envelope_mask(omegas: Vec<GridFunction>, threshold: f64) -> Result<EnvelopeResult, CrossError> {
    if omegas.is_empty() {
        return Err(CrossError::Dimension("no factors".into()));
    }
    let res = omegas[0].grid().resolution().to_vec();
    if let Some(j) = omegas.iter().position(|f| f.grid().resolution() != res.as_slice()) {
        return Err(CrossError::Dimension(format!("factor {j} has resolution {:?}, expected {res:?}", omegas[j].grid().resolution())));
    }
    let values: Vec<Vec<f64>> = omegas.iter().map(|f| sorted(domain_values(f))).collect();
    let maxima: Vec<f64> = values.iter().map(|v| v.last().copied().unwrap_or(f64::NEG_INFINITY)).collect();
    let total: f64 = values.iter().map(|v| v.len() as f64).product();
    let inside: u128 = if values.len() <= 2 {
        count_tuples(0.0, &values, threshold)
    } else {
        values[0].par_iter().map(|&x| count_tuples(x, &values[1..], threshold)).sum()
    };
    let witness = first_witness(&omegas, &maxima, threshold);
    Ok(EnvelopeResult {
        threshold,
        strict: witness.is_some(),
        witness,
        in_fraction: if total > 0.0 { inside as f64 / total } else { 0.0 },
        omegas,
    })
}

/// Nodes of `a_mask` where `omega > delta`.
pub fn a_point_violations(omega: &GridFunction, a_mask: &Mask, delta: f64) -> Vec<usize> {
    omega.masked().filter(|&(n, v)| a_mask.get(n) && v > delta).map(|(n, _)| n).collect()
}

/// `omega` with value 0 on `a_mask`.
pub fn pin_zero(omega: &GridFunction, a_mask: &Mask) -> Result<GridFunction, CrossError> {
    Ok(omega.map_values(|n, v| if a_mask.get(n) { 0.0 } else { v })?)
}

/// Extremal function of a planar open set sampled on `grid`.
#[derive(Debug, Clone)]
pub struct RegionOmega {
    /// Solution with the pointwise-certified nodes pinned to 0.
    pub omega: GridFunction,
    /// Contact set used by the solver (cells certified inside the region).
    pub contact: Mask,
    /// Nodes certified inside pointwise.
    pub certified: Mask,
    pub iterations: usize,
    pub converged: bool,
}

/// `h*_{A,E}` for a planar region `A`: the obstacle is 0 on grid cells
/// certified inside `A`; nodes certified inside pointwise are then pinned to
/// 0, since the extremal function of an open set vanishes on it.
pub fn omega_for_region<S: VSource + ?Sized>(
    region: &RegionSpec,
    grid: &Grid,
    config: SolverConfig,
    src: &S,
) -> Result<RegionOmega, CrossError> {
    let contact = certified_cell_mask(region, grid, src);
    let certified = certified_point_mask(region, grid, src).and(&grid.domain_mask());
    let sol = solve_h(&ObstacleProblem::new(grid, &contact, config)?)?;
    Ok(RegionOmega {
        omega: pin_zero(&sol.values, &certified)?,
        contact,
        certified,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Fiber verdict at grid scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FiberVerdict {
    EmptyInteriorAtScale,
    /// Lowest corner of the first full cell found.
    ContainsCell { corner: Vec<ComplexPoint> },
}

/// Conservative mask of `region` on `grid`: every domain node not certified
/// out.
pub fn conservative_mask<S: VSource + ?Sized>(region: &RegionSpec, grid: &Grid, src: &S) -> Mask {
    grid.mask_where(|z| region.member(z, src).verdict != Verdict::CertifiedOut).and(&grid.domain_mask())
}

/// First cell whose `2^d` corners all lie in `mask`, as its lowest node.
pub fn first_full_cell(mask: &Mask) -> Option<usize> {
    let g = mask.grid();
    let d = g.ndim();
    let strides = g.strides().to_vec();
    let res = g.resolution().to_vec();
    let offsets: Vec<usize> = (0..1usize << d)
        .map(|bits| (0..d).filter(|k| bits >> k & 1 == 1).map(|k| strides[k]).sum())
        .collect();
    (0..g.node_count()).find(|&node| {
        mask.get(node)
            && g.multi_index(node).iter().zip(&res).all(|(i, r)| i + 1 < *r)
            && offsets.iter().all(|o| mask.get(node + o))
    })
}

/// Samples the fiber `S(a, ·)` with `a` fixed at coordinates
/// `start..start + a.len()` on `grid` and looks for a full cell.
pub fn fiber_empty_interior<S: VSource + ?Sized>(
    region: &RegionSpec,
    a: &[ComplexPoint],
    start: usize,
    grid: &Grid,
    src: &S,
) -> Result<FiberVerdict, CrossError> {
    let fiber = region.fiber(start, a, src)?;
    if fiber.dimension()? != grid.complex_dim() {
        return Err(CrossError::Dimension(format!("fiber of dimension {} on a grid of dimension {}", fiber.dimension()?, grid.complex_dim())));
    }
    let mask = conservative_mask(&fiber, grid, src);
    Ok(match first_full_cell(&mask) {
        Some(node) => FiberVerdict::ContainsCell { corner: grid.coords(node) },
        None => FiberVerdict::EmptyInteriorAtScale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCheck {
    pub envelope: EnvelopeReport,
    pub samples: usize,
    pub t_samples: usize,
    /// Nodes where `ω > 2/3`.
    pub above_two_thirds: usize,
    /// Strictness of `{t : ω(t) < 2/3}` inside the factor domain.
    pub level_set_strict: bool,
}

/// Per-factor sample nodes: a stride through the domain plus the extreme
/// and pinned nodes, which carry the worst cases for containment.
fn factor_samples(omega: &GridFunction, pinned: &Mask, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = omega.masked().map(|(n, _)| n).step_by(stride.max(1)).collect();
    if let Some((n, _)) = omega.max_on_domain() {
        out.push(n);
    }
    let pinned_nodes: Vec<usize> = omega.masked().filter(|&(n, _)| pinned.get(n)).map(|(n, _)| n).collect();
    let step = (pinned_nodes.len() / 16).max(1);
    out.extend(pinned_nodes.into_iter().step_by(step));
    out.sort_unstable();
    out.dedup();
    out
}

/// `Ω = {ω(z) + ω(w) + ω(t) < 2}` from one planar `ω_ℬ`, with `T ⊆ Ω`
/// checked on a sample of product nodes.
pub fn build_domain_prop_c<S: VSource + ?Sized>(
    omega_b: &GridFunction,
    pinned: &Mask,
    stride: usize,
    src: &S,
) -> Result<(EnvelopeResult, DomainCheck), CrossError> {
    let env = envelope_mask(vec![omega_b.clone(); 3], 2.0)?;
    let t = GeneralizedCrossSpec::prop_c(3)?;
    let nodes = factor_samples(omega_b, pinned, stride);
    let grid = omega_b.grid();
    let m = nodes.len();
    let (t_samples, violation) = (0..m * m * m)
        .into_par_iter()
        .map(|k| {
            let idx = [nodes[k / (m * m)], nodes[k / m % m], nodes[k % m]];
            let p: Vec<ComplexPoint> = idx.iter().flat_map(|&n| grid.coords(n)).collect();
            if member_t(&t, &p, src).verdict != Verdict::CertifiedIn {
                (0usize, None)
            } else if env.contains(&idx) {
                (1, None)
            } else {
                (1, Some(k))
            }
        })
        .reduce(|| (0, None), |a, b| (a.0 + b.0, [a.1, b.1].into_iter().flatten().min()));
    if let Some(k) = violation {
        let node = vec![nodes[k / (m * m)], nodes[k / m % m], nodes[k % m]];
        let sum = env.sum_at(&node);
        return Err(CrossError::Containment { node, sum, threshold: 2.0 });
    }
    let above = omega_b.masked().filter(|&(_, v)| v > 2.0 / 3.0).count();
    let level_set_strict = omega_b.masked().any(|(_, v)| !(v < 2.0 / 3.0));
    let check = DomainCheck {
        envelope: env.report(),
        samples: nodes.len().pow(3),
        t_samples,
        above_two_thirds: above,
        level_set_strict,
    };
    Ok((env, check))
}

/// Sampled check of `S_1 = S_2 = S_3 = (E \ ℬ)^2` for the three-fold set
/// built on `F`: for every sampled pair the fiber through slot `j` contains
/// the centre of `F` exactly when the pair is certified in `(E \ ℬ)^2`.
/// Pairs with an undecided verdict are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberIdentity {
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    pub holds: bool,
    pub first_failure: Option<Vec<ComplexPoint>>,
}

pub fn check_fiber_identity<S: VSource + ?Sized>(
    s: &RegionSpec,
    f_center: ComplexPoint,
    samples: &[ComplexPoint],
    src: &S,
) -> Result<FiberIdentity, CrossError> {
    let s_j = RegionSpec::product(vec![RegionSpec::complement(RegionSpec::b()); 2]);
    let (mut checked, mut skipped) = (0, 0);
    for &x in samples {
        for &y in samples {
            let expected = s_j.member(&[x, y], src).verdict;
            if expected == Verdict::Unknown {
                skipped += 1;
                continue;
            }
            for j in 0..3 {
                let fiber = match j {
                    0 => s.fiber(1, &[x, y], src)?,
                    1 => s.fiber(0, &[x], src)?.fiber(1, &[y], src)?,
                    _ => s.fiber(0, &[x, y], src)?,
                };
                if fiber.member(&[f_center], src).verdict != expected {
                    return Ok(FiberIdentity {
                        pairs_checked: checked,
                        pairs_skipped: skipped,
                        holds: false,
                        first_failure: Some(vec![x, y]),
                    });
                }
            }
            checked += 1;
        }
    }
    Ok(FiberIdentity { pairs_checked: checked, pairs_skipped: skipped, holds: true, first_failure: None })
}
