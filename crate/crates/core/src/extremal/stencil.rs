//! Five-point stencil on a two-axis lattice over a disc, with boundary-fitted
//! arm lengths where a neighbour lies across the disc boundary or across the
//! boundary of a known disc-shaped contact set.

use serde::{Deserialize, Serialize};

use crate::grid::ComplexPoint;

/// Closed or open disc used to describe the domain or a contact set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscShape {
    pub center: ComplexPoint,
    pub radius: f64,
}

impl DiscShape {
    /// Parameter `t ∈ (0, 1]` at which the segment `p → q` first meets the
    /// circle, or `None` if it does not.
    fn crossing(&self, p: ComplexPoint, q: ComplexPoint) -> Option<f64> {
        let d = q - p;
        let e = p - self.center;
        let a = d.norm_sqr();
        let b = 2.0 * (e.re * d.re + e.im * d.im);
        let c = e.norm_sqr() - self.radius * self.radius;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)]
            .into_iter()
            .filter(|t| *t > 0.0 && *t <= 1.0 + 1e-12)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
    }
}

/// Update rule for the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Red-black projected over-relaxation.
    RedBlackSor,
    /// Full sweeps from the previous iterate only; iterates are monotone.
    Jacobi,
}

/// Role of a lattice node in a stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum NodeKind {
    /// Outside the domain.
    Outside,
    /// Value fixed at the given number (contact set).
    Fixed(f64),
    Free,
}

const MIN_ARM: f64 = 1e-9;

pub(crate) struct Stencil {
    free: Vec<usize>,
    nb: Vec<[usize; 4]>,
    w: Vec<[f64; 4]>,
    c: Vec<f64>,
    omega: f64,
}

pub(crate) struct RelaxOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl Stencil {
    /// `coord(i, k)` maps lattice indices to points, `kind` is row-major over
    /// `nx × ny`. Neighbours outside the domain contribute `boundary_value` at
    /// the crossing with `boundary`; fixed neighbours contribute their value at
    /// the crossing with `contact` when that shape is known, else at the node.
    pub fn build(
        nx: usize,
        ny: usize,
        coord: impl Fn(isize, isize) -> ComplexPoint,
        kind: &[NodeKind],
        boundary: DiscShape,
        boundary_value: f64,
        contact: Option<DiscShape>,
    ) -> Stencil {
        let mut red = Vec::new();
        let mut black = Vec::new();
        for i in 0..nx {
            for k in 0..ny {
                if kind[i * ny + k] == NodeKind::Free {
                    if (i + k) % 2 == 0 { red.push(i * ny + k) } else { black.push(i * ny + k) }
                }
            }
        }
        red.extend(black);
        let free = red;
        let mut nb = Vec::with_capacity(free.len());
        let mut w = Vec::with_capacity(free.len());
        let mut c = Vec::with_capacity(free.len());
        for &node in &free {
            let (i, k) = ((node / ny) as isize, (node % ny) as isize);
            let p = coord(i, k);
            let mut arm = [1.0f64; 4];
            let mut idx = [node; 4];
            let mut fixed = [None::<f64>; 4];
            for (s, (di, dk)) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)].into_iter().enumerate() {
                let (ii, kk) = (i + di, k + dk);
                let inside = ii >= 0 && kk >= 0 && (ii as usize) < nx && (kk as usize) < ny;
                let q = coord(ii, kk);
                let kq = if inside { kind[ii as usize * ny + kk as usize] } else { NodeKind::Outside };
                match kq {
                    NodeKind::Free => idx[s] = ii as usize * ny + kk as usize,
                    NodeKind::Fixed(v) => {
                        fixed[s] = Some(v);
                        if let Some(t) = contact.and_then(|d| d.crossing(p, q)) {
                            arm[s] = t.max(MIN_ARM);
                        }
                    }
                    NodeKind::Outside => {
                        fixed[s] = Some(boundary_value);
                        if let Some(t) = boundary.crossing(p, q) {
                            arm[s] = t.max(MIN_ARM);
                        }
                    }
                }
            }
            let mut wt = [0.0; 4];
            for pair in [0usize, 2] {
                let (a, b) = (arm[pair], arm[pair + 1]);
                wt[pair] = 2.0 / (a * (a + b));
                wt[pair + 1] = 2.0 / (b * (a + b));
            }
            let total: f64 = wt.iter().sum();
            let mut cc = 0.0;
            for s in 0..4 {
                wt[s] /= total;
                if let Some(v) = fixed[s] {
                    cc += wt[s] * v;
                    wt[s] = 0.0;
                }
            }
            nb.push(idx);
            w.push(wt);
            c.push(cc);
        }
        let n = nx.max(ny).max(3);
        let omega = 2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin());
        Stencil { free, nb, w, c, omega }
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    #[inline]
    fn mean(&self, j: usize, u: &[f64]) -> f64 {
        let (nb, w) = (&self.nb[j], &self.w[j]);
        self.c[j] + w[0] * u[nb[0]] + w[1] * u[nb[1]] + w[2] * u[nb[2]] + w[3] * u[nb[3]]
    }

    fn sweep_sor(&self, u: &mut [f64], cap: &[f64]) -> f64 {
        let mut change = 0.0f64;
        for j in 0..self.free.len() {
            let node = self.free[j];
            let old = u[node];
            let m = self.mean(j, u);
            let new = (old + self.omega * (m - old)).clamp(0.0, cap[node]);
            change = change.max((new - old).abs());
            u[node] = new;
        }
        change
    }

    fn sweep_jacobi(&self, u: &mut [f64], cap: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend((0..self.free.len()).map(|j| self.mean(j, u).min(cap[self.free[j]]).max(0.0)));
        let mut change = 0.0f64;
        for (j, &node) in self.free.iter().enumerate() {
            change = change.max((scratch[j] - u[node]).abs());
            u[node] = scratch[j];
        }
        change
    }

    /// Relaxes `u` towards the largest stencil-subharmonic minorant of `cap`
    /// on the free nodes; other entries of `u` are left untouched.
    pub fn relax(&self, u: &mut [f64], cap: &[f64], method: Method, tolerance: f64, max_iterations: usize) -> RelaxOutcome {
        let mut scratch = Vec::new();
        let mut residual = f64::INFINITY;
        for it in 1..=max_iterations {
            residual = match method {
                Method::RedBlackSor => self.sweep_sor(u, cap),
                Method::Jacobi => self.sweep_jacobi(u, cap, &mut scratch),
            };
            if residual < tolerance {
                return RelaxOutcome { iterations: it, residual, converged: true };
            }
        }
        RelaxOutcome { iterations: max_iterations, residual, converged: self.free.is_empty() }
    }

    /// One Jacobi step, returning the new values on free nodes.
    pub fn jacobi_step(&self, u: &[f64], cap: &[f64]) -> Vec<(usize, f64)> {
        (0..self.free.len()).map(|j| (self.free[j], self.mean(j, u).min(cap[self.free[j]]).max(0.0))).collect()
    }

    /// `max(u - stencil mean)` over free nodes.
    pub fn subharmonic_defect(&self, u: &[f64]) -> f64 {
        (0..self.free.len()).map(|j| u[self.free[j]] - self.mean(j, u)).fold(f64::NEG_INFINITY, f64::max)
    }
}
