//! Relative extremal functions on one complex coordinate by obstacle
//! relaxation, exhaustion limits, the zero/one dichotomy, envelopes on
//! product grids, and the lower bound coming from the series itself.

mod stencil;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stencil::{DiscShape, Method};
pub use sweep::{line_sweep_envelope, LineSweepResult};

use crate::grid::{ComplexPoint, Grid, GridError, GridFunction, Mask};
use crate::series::{RegionSpec, VSource, Verdict};
use stencil::{NodeKind, Stencil};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200_000;
pub const DEFAULT_DELTA_CLASSIFY: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ExtremalError {
    #[error("solver works on one complex coordinate, grid has {0}")]
    NotPlanar(usize),
    #[error("contact set is not contained in the domain (node {0})")]
    ContactOutsideDomain(usize),
    #[error("obstacle values must lie in [0, 1] (node {node}: {value})")]
    BadObstacle { node: usize, value: f64 },
    #[error("exhaustion needs at least one level")]
    NoLevels,
    #[error("solution did not converge ({iterations} iterations, residual {residual})")]
    Unconverged { iterations: usize, residual: f64 },
    #[error("sup {sup} lies strictly between {delta} and {}", 1.0 - delta)]
    Inconsistent { sup: f64, delta: f64 },
    #[error("grids do not match: {0}")]
    Mismatch(String),
    #[error("witness needs u(0) = 0 on the grid, found {0}")]
    NoOrigin(f64),
    #[error("witness check failed: {0}")]
    WitnessInvalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, max_iterations: DEFAULT_MAX_ITERATIONS, method: Method::RedBlackSor }
    }
}

/// Largest subharmonic function below `obstacle` on `domain`: `0` on the
/// contact set `a_mask`, at most `1` elsewhere, with boundary value `1`.
#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    pub grid: Grid,
    pub domain: Mask,
    pub boundary: DiscShape,
    pub obstacle: GridFunction,
    pub a_mask: Mask,
    /// Exact shape of the contact set when it is a closed disc.
    pub a_shape: Option<DiscShape>,
    pub config: SolverConfig,
}

fn planar(grid: &Grid) -> Result<DiscShape, ExtremalError> {
    if grid.complex_dim() != 1 {
        return Err(ExtremalError::NotPlanar(grid.complex_dim()));
    }
    let p = grid.polydisc();
    Ok(DiscShape { center: p.centers()[0], radius: p.radii()[0] })
}

impl ObstacleProblem {
    /// Ω is the grid's disc, `A = a_mask ∩ Ω`.
    pub fn new(grid: &Grid, a_mask: &Mask, config: SolverConfig) -> Result<Self, ExtremalError> {
        let boundary = planar(grid)?;
        Self::on_disc(grid, boundary, a_mask, None, config)
    }

    /// `A` the closed disc `|z - center| <= radius`, intersected with Ω.
    pub fn disc_in_disc(grid: &Grid, center: ComplexPoint, radius: f64, config: SolverConfig) -> Result<Self, ExtremalError> {
        let boundary = planar(grid)?;
        let shape = DiscShape { center, radius };
        let a = grid.mask_where(|z| (z[0] - center).norm() <= radius);
        Self::on_disc(grid, boundary, &a, Some(shape), config)
    }

    /// Ω any open disc whose nodes lie on `grid`.
    pub fn on_disc(
        grid: &Grid,
        boundary: DiscShape,
        a_mask: &Mask,
        a_shape: Option<DiscShape>,
        config: SolverConfig,
    ) -> Result<Self, ExtremalError> {
        planar(grid)?;
        if a_mask.grid() != grid {
            return Err(ExtremalError::Mismatch("contact mask grid".into()));
        }
        let domain = grid.mask_where(|z| (z[0] - boundary.center).norm() < boundary.radius);
        let a_mask = a_mask.and(&domain);
        let values = (0..grid.node_count())
            .map(|i| if !domain.get(i) { f64::NAN } else if a_mask.get(i) { 0.0 } else { 1.0 })
            .collect();
        let obstacle = GridFunction::new(grid.clone(), values, domain.bits().to_vec())?;
        Ok(Self { grid: grid.clone(), domain, boundary, obstacle, a_mask, a_shape, config })
    }

    /// Same contact set on the concentric disc scaled by `scale`.
    pub fn restricted(&self, scale: f64) -> Result<Self, ExtremalError> {
        let boundary = DiscShape { center: self.boundary.center, radius: self.boundary.radius * scale };
        Self::on_disc(&self.grid, boundary, &self.a_mask, self.a_shape, self.config)
    }

    fn stencil(&self) -> Stencil {
        let g = &self.grid;
        let (nx, ny) = (g.resolution()[0], g.resolution()[1]);
        let kind: Vec<NodeKind> = (0..g.node_count())
            .map(|i| {
                if !self.domain.get(i) {
                    NodeKind::Outside
                } else if self.obstacle.value(i) == 0.0 {
                    NodeKind::Fixed(0.0)
                } else {
                    NodeKind::Free
                }
            })
            .collect();
        Stencil::build(nx, ny, lattice_coord(g), &kind, self.boundary, 1.0, self.a_shape)
    }
}

/// Coordinates of (possibly out-of-range) lattice indices of a planar grid.
pub(crate) fn lattice_coord(g: &Grid) -> impl Fn(isize, isize) -> ComplexPoint + '_ {
    move |i, k| {
        let at = |axis: usize, i: isize| {
            let c = g.polydisc().centers()[0];
            let base = if axis == 0 { c.re } else { c.im };
            let mid = ((g.resolution()[axis] - 1) / 2) as isize;
            base + (i - mid) as f64 * g.spacing()[axis]
        };
        ComplexPoint::new(at(0, i), at(1, k))
    }
}

#[derive(Debug, Clone)]
pub struct ExtremalSolution {
    pub values: GridFunction,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub contact_mask: Mask,
    /// `max(h - stencil mean)` over free nodes.
    pub subharmonic_defect: f64,
}

impl ExtremalSolution {
    pub fn sup(&self) -> f64 {
        self.values.max_on_domain().map_or(0.0, |(_, v)| v)
    }

    pub fn center_value(&self) -> f64 {
        self.values.center_value()
    }
}

pub fn solve_h(problem: &ObstacleProblem) -> Result<ExtremalSolution, ExtremalError> {
    let g = &problem.grid;
    planar(g)?;
    for (node, v) in problem.obstacle.masked() {
        if !(0.0..=1.0).contains(&v) {
            return Err(ExtremalError::BadObstacle { node, value: v });
        }
    }
    if let Some(node) = (0..g.node_count()).find(|&i| problem.a_mask.get(i) && !problem.domain.get(i)) {
        return Err(ExtremalError::ContactOutsideDomain(node));
    }
    let stencil = problem.stencil();
    let cap: Vec<f64> = problem.obstacle.values().iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
    let mut u = cap.clone();
    let cfg = problem.config;
    let out = stencil.relax(&mut u, &cap, cfg.method, cfg.tolerance, cfg.max_iterations);
    let defect = stencil.subharmonic_defect(&u);
    let values: Vec<f64> = u.iter().enumerate().map(|(i, v)| if problem.domain.get(i) { *v } else { f64::NAN }).collect();
    let contact = (0..g.node_count())
        .map(|i| problem.domain.get(i) && (values[i] - cap[i]).abs() <= cfg.tolerance)
        .collect();
    Ok(ExtremalSolution {
        values: GridFunction::new(g.clone(), values, problem.domain.bits().to_vec())?,
        iterations: out.iterations,
        residual: out.residual,
        converged: out.converged,
        contact_mask: Mask::new(g.clone(), contact)?,
        subharmonic_defect: defect,
    })
}

/// Jacobi iterates `u^0 = φ, u^1, …` of a problem, for monotonicity checks.
pub fn jacobi_iterates(problem: &ObstacleProblem, steps: usize) -> Vec<Vec<f64>> {
    let stencil = problem.stencil();
    let cap: Vec<f64> = problem.obstacle.values().iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
    let mut u = cap.clone();
    let mut out = vec![u.clone()];
    for _ in 0..steps {
        for (node, v) in stencil.jacobi_step(&u, &cap) {
            u[node] = v;
        }
        out.push(u.clone());
    }
    out
}

/// One exhaustion level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub level: usize,
    pub radius: f64,
    pub sup: f64,
    pub center: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct OmegaSolution {
    pub solution: ExtremalSolution,
    pub trace: Vec<LevelTrace>,
    /// Center values are non-increasing along the levels (within tolerance).
    pub monotone: bool,
}

/// Solves on `Ω_ℓ = (1 - 2^-ℓ) Ω` for `ℓ = 1..=levels`; the result is the
/// last level.
pub fn solve_omega(problem: &ObstacleProblem, levels: usize) -> Result<OmegaSolution, ExtremalError> {
    if levels == 0 {
        return Err(ExtremalError::NoLevels);
    }
    let mut trace = Vec::with_capacity(levels);
    let mut last = None;
    for level in 1..=levels {
        let scale = 1.0 - 0.5f64.powi(level as i32);
        let p = problem.restricted(scale)?;
        let s = solve_h(&p)?;
        trace.push(LevelTrace {
            level,
            radius: p.boundary.radius,
            sup: s.sup(),
            center: s.center_value(),
            iterations: s.iterations,
            converged: s.converged,
        });
        last = Some(s);
    }
    let tol = problem.config.tolerance.max(1e-12) * 10.0;
    let monotone = trace.windows(2).all(|w| w[1].center <= w[0].center + tol);
    Ok(OmegaSolution { solution: last.expect("levels >= 1"), trace, monotone })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    IdenticallyZero,
    SupOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyVerdict {
    pub verdict: Dichotomy,
    pub sup: f64,
    pub delta: f64,
    pub trace: Vec<LevelTrace>,
}

pub fn classify_dichotomy(omega: &OmegaSolution, delta: f64) -> Result<DichotomyVerdict, ExtremalError> {
    let s = &omega.solution;
    if !s.converged {
        return Err(ExtremalError::Unconverged { iterations: s.iterations, residual: s.residual });
    }
    let sup = s.sup();
    let verdict = if sup <= delta {
        Dichotomy::IdenticallyZero
    } else if sup >= 1.0 - delta {
        Dichotomy::SupOne
    } else {
        return Err(ExtremalError::Inconsistent { sup, delta });
    };
    Ok(DichotomyVerdict { verdict, sup, delta, trace: omega.trace.clone() })
}

/// `{iterations, residual, sup, trace, converged}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual: f64,
    pub sup: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl SolverReport {
    pub fn from_solution(s: &ExtremalSolution) -> Self {
        Self { iterations: s.iterations, residual: s.residual, sup: s.sup(), trace: vec![s.sup()], converged: s.converged }
    }

    pub fn from_omega(o: &OmegaSolution) -> Self {
        let s = &o.solution;
        Self {
            iterations: o.trace.iter().map(|t| t.iterations).sum(),
            residual: s.residual,
            sup: s.sup(),
            trace: o.trace.iter().map(|t| t.sup).collect(),
            converged: o.trace.iter().all(|t| t.converged),
        }
    }
}

/// Nodes of a planar grid whose whole lattice cell (the disc of half-diagonal
/// radius about the node) is certified inside `region`.
pub fn certified_cell_mask<S: VSource + ?Sized>(region: &RegionSpec, grid: &Grid, src: &S) -> Mask {
    let h = grid.spacing();
    let rho = (0..grid.complex_dim()).map(|j| 0.5 * h[2 * j].hypot(h[2 * j + 1])).fold(0.0, f64::max);
    let domain = grid.domain_mask();
    grid.mask_where(|z| region.member_cell(z, rho, src) == Verdict::CertifiedIn).and(&domain)
}

/// Nodes certified inside `region` pointwise.
pub fn certified_point_mask<S: VSource + ?Sized>(region: &RegionSpec, grid: &Grid, src: &S) -> Mask {
    crate::grid::sample_mask(|z| region.member(z, src).verdict, grid)
}

/// `max(h1(z), h2(w))` on the product grid.
pub fn product_envelope(h1: &GridFunction, h2: &GridFunction) -> Result<GridFunction, ExtremalError> {
    let grid = h1.grid().product(h2.grid())?;
    let n2 = h2.grid().node_count();
    let mut values = Vec::with_capacity(grid.node_count());
    let mut mask = Vec::with_capacity(grid.node_count());
    for a in 0..h1.grid().node_count() {
        for b in 0..n2 {
            let inside = h1.in_domain(a) && h2.in_domain(b);
            mask.push(inside);
            values.push(if inside { h1.value(a).max(h2.value(b)) } else { f64::NAN });
        }
    }
    Ok(GridFunction::new(grid, values, mask)?)
}

/// Lower bound `ũ(0) = 1 / (2M + 1)` from `ũ = (u - M) / (M + 1/2) + 1`.
#[derive(Debug, Clone)]
pub struct WitnessCertificate {
    pub m_hat: f64,
    pub u_tilde: GridFunction,
    pub value_at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub m_hat: f64,
    pub value_at_zero: f64,
    pub u_tilde_max: f64,
    pub a_nodes: usize,
}

impl WitnessCertificate {
    pub fn summary(&self, a_mask: &Mask) -> WitnessSummary {
        WitnessSummary {
            m_hat: self.m_hat,
            value_at_zero: self.value_at_zero,
            u_tilde_max: self.u_tilde.max_on_domain().map_or(f64::NAN, |(_, v)| v),
            a_nodes: a_mask.count(),
        }
    }
}

pub fn witness_lower_bound(u_grid: &GridFunction, a_mask: &Mask) -> Result<WitnessCertificate, ExtremalError> {
    let m = u_grid.max_on_domain().map_or(f64::NAN, |(_, v)| v);
    witness_lower_bound_with_max(u_grid, a_mask, m)
}

/// As [`witness_lower_bound`] with `M` supplied, e.g. from a separable bound
/// when `u_grid` is only a slice; `m_hat` must dominate `u_grid`.
pub fn witness_lower_bound_with_max(u_grid: &GridFunction, a_mask: &Mask, m_hat: f64) -> Result<WitnessCertificate, ExtremalError> {
    let origin = u_grid.center_value();
    if origin != 0.0 {
        return Err(ExtremalError::NoOrigin(origin));
    }
    assert!(m_hat >= 0.0, "grid maximum is at least u(0) = 0");
    if let Some((_, top)) = u_grid.max_on_domain() {
        if top > m_hat {
            return Err(ExtremalError::WitnessInvalid(format!("M = {m_hat} below grid value {top}")));
        }
    }
    let u_tilde = u_grid.map_values(|_, u| (u - m_hat) / (m_hat + 0.5) + 1.0)?;
    for (node, v) in u_tilde.masked() {
        if v > 1.0 {
            return Err(ExtremalError::WitnessInvalid(format!("ũ = {v} > 1 at node {node}")));
        }
        if a_mask.get(node) && v > 0.0 {
            return Err(ExtremalError::WitnessInvalid(format!("ũ = {v} > 0 on the set at node {node}")));
        }
    }
    Ok(WitnessCertificate { m_hat, u_tilde, value_at_zero: 1.0 / (2.0 * m_hat + 1.0) })
}

/// Closed-form extremal function of a centered disc of radius `r` in the unit
/// disc: `log(|z| / r) / log(1 / r)`, clamped to `0` inside.
pub fn disc_oracle(z: ComplexPoint, r: f64) -> f64 {
    let m = z.norm();
    if m <= r {
        0.0
    } else {
        (m / r).ln() / (1.0 / r).ln()
    }
}
