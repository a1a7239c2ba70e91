//! Monotone wide-stencil discretization of `F(D^2 u, x, y) = 0` with
//! Dirichlet data.
//!
//! Every coefficient matrix of the operator's min-max representation is
//! split by Selling's decomposition into nonnegative weights on lattice
//! directions, so each branch is a positive combination of centered second
//! differences. Arms that leave the region are shortened to the exit point
//! and carry the boundary data there.

use std::collections::HashMap;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use super::grid::{Grid, NodeKind, Region};
use super::selling;
use crate::error::{Error, Result};
use crate::operators::EllipticOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Howard policy iteration with a sparse direct solve per policy.
    PolicyIteration,
    /// Nonlinear Gauss-Seidel with the exact pointwise update.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    /// Number of rotated frames for extremal operators.
    pub angles: usize,
    /// Pointwise residual tolerance in value units.
    pub tol: f64,
    pub max_iterations: usize,
    /// Gauss-Seidel relaxation factor in `(0, 1]`.
    pub damping: f64,
    pub method: Method,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            angles: 8,
            tol: 1e-8,
            max_iterations: 10_000,
            damping: 1.0,
            method: Method::PolicyIteration,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.angles < 2 {
            return Err(Error::Invalid("angular count K must be at least 2".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid("tolerance must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Invalid("damping must lie in (0, 1]".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Arm {
    Node(u32),
    Fixed { slot: u32, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Branch {
    terms: Vec<(u16, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
struct LocalGame {
    families: Vec<Vec<Branch>>,
}

const REGULAR: u32 = u32::MAX;
const NONE: u32 = u32::MAX;
/// Relative margin a policy switch must win by.
const TIE: f64 = 1e-11;

/// A discretized operator on a meshed region, independent of the boundary data.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub grid: Grid,
    pub region: Region,
    pub cfg: SchemeConfig,
    kinds: Vec<NodeKind>,
    unknown_of: Vec<u32>,
    nodes: Vec<u32>,
    pool: Vec<[i32; 2]>,
    shared: Option<LocalGame>,
    per_node: Vec<LocalGame>,
    forcing: Vec<f64>,
    irregular: Vec<u32>,
    arms: Vec<[Arm; 2]>,
    slots: Vec<[f64; 2]>,
    node_slot: Vec<u32>,
}

/// Solution values on every node of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub grid: Grid,
    pub kinds: Vec<NodeKind>,
    /// Solution at interior nodes, data at boundary nodes, 0 at exterior nodes.
    pub values: Vec<f64>,
    /// Boundary data at every point where the scheme reads it.
    pub boundary_trace: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl DiscreteField {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.grid.index(i, j);
        (self.kinds[k] != NodeKind::Exterior).then(|| self.values[k])
    }

    /// Bilinear interpolation at a physical point; `None` if a corner is exterior
    /// or the point is off the grid.
    pub fn sample(&self, p: [f64; 2]) -> Option<f64> {
        let q = self.grid.frame.to_local(self.grid.origin, p);
        let (fx, fy) = (q[0] / self.grid.h, q[1] / self.grid.h);
        let (i0, j0) = (fx.floor(), fy.floor());
        if j0 < 0.0 || j0 as usize + 1 >= self.grid.rows {
            return None;
        }
        let (tx, ty) = (fx - i0, fy - j0);
        let j0 = j0 as usize;
        let col = |i: f64| -> Option<usize> {
            if self.grid.periodic {
                Some((i as i64).rem_euclid(self.grid.cols as i64) as usize)
            } else if i < 0.0 || i as usize >= self.grid.cols {
                None
            } else {
                Some(i as usize)
            }
        };
        let (ia, ib) = (col(i0)?, col(i0 + 1.0)?);
        let v00 = self.value(ia, j0)?;
        let v10 = self.value(ib, j0)?;
        let v01 = self.value(ia, j0 + 1)?;
        let v11 = self.value(ib, j0 + 1)?;
        Some((1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11))
    }

    pub fn max_abs_diff(&self, other: &DiscreteField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&self.kinds)
            .filter(|(_, k)| **k != NodeKind::Exterior)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Outcome of a discrete comparison check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub interior_max: f64,
    pub boundary_max: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Node reached from `(i, j)` along `v`, mirroring across the reflecting
/// face of a strip.
fn endpoint(grid: &Grid, region: &Region, i: usize, j: usize, v: [i32; 2]) -> Option<usize> {
    if let Region::Strip { .. } = region {
        let top = grid.rows as i64 - 1;
        let jj = j as i64 + v[1] as i64;
        if jj > top {
            let mirrored = 2 * top - jj;
            return grid.offset(i, j, [v[0], (mirrored - j as i64) as i32]);
        }
    }
    grid.offset(i, j, v)
}

impl Scheme {
    /// Discretizes `op` with the fast variable equal to the physical point.
    pub fn new(
        op: &EllipticOperator,
        grid: Grid,
        region: Region,
        cfg: SchemeConfig,
    ) -> Result<Self> {
        Self::with_fast_scale(op, grid, region, cfg, 1.0)
    }

    /// Discretizes `op` with coefficients evaluated at `(x, x * fast_scale)`.
    pub fn with_fast_scale(
        op: &EllipticOperator,
        grid: Grid,
        region: Region,
        cfg: SchemeConfig,
        fast_scale: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if matches!(region, Region::Strip { .. }) && !grid.periodic {
            return Err(Error::Invalid(
                "a strip region needs a laterally periodic grid".into(),
            ));
        }
        let n_nodes = grid.len();
        let kinds: Vec<NodeKind> = (0..n_nodes)
            .map(|k| {
                let (i, j) = grid.coords(k);
                region.classify(&grid, i, j)
            })
            .collect();
        let mut unknown_of = vec![NONE; n_nodes];
        let mut nodes = Vec::new();
        for (k, kind) in kinds.iter().enumerate() {
            if *kind == NodeKind::Interior {
                unknown_of[k] = nodes.len() as u32;
                nodes.push(k as u32);
            }
        }
        if nodes.is_empty() {
            return Err(Error::Invalid("region contains no interior nodes".into()));
        }

        let frame = grid.frame;
        let mut pool: Vec<[i32; 2]> = Vec::new();
        let mut pool_index: HashMap<[i32; 2], u16> = HashMap::new();
        let mut local_game = |x: [f64; 2], y: [f64; 2]| -> Result<(LocalGame, f64)> {
            let g = op.game(x, y, cfg.angles);
            let mut families = Vec::with_capacity(g.families.len());
            for fam in &g.families {
                let mut branches = Vec::with_capacity(fam.len());
                for a in fam {
                    let local = a.in_basis(frame.e1, frame.e2);
                    if !(local.det() > 0.0 && local.trace() > 0.0) {
                        return Err(Error::Invalid(format!(
                            "coefficient matrix {a:?} is not positive definite"
                        )));
                    }
                    let mut terms = Vec::with_capacity(3);
                    for (w, v) in selling::decompose(&local) {
                        let next = pool.len() as u16;
                        let idx = *pool_index.entry(v).or_insert_with(|| {
                            pool.push(v);
                            next
                        });
                        terms.push((idx, w));
                    }
                    branches.push(Branch { terms });
                }
                families.push(branches);
            }
            Ok((LocalGame { families }, g.forcing))
        };

        let (shared, per_node, forcing) = if op.is_constant_coefficient() {
            let (g, f) = local_game([0.0; 2], [0.0; 2])?;
            (Some(g), Vec::new(), vec![f; nodes.len()])
        } else {
            let mut games = Vec::with_capacity(nodes.len());
            let mut forcing = Vec::with_capacity(nodes.len());
            for &k in &nodes {
                let (i, j) = grid.coords(k as usize);
                let p = grid.point(i, j);
                let (g, f) = local_game(p, [p[0] * fast_scale, p[1] * fast_scale])?;
                games.push(g);
                forcing.push(f);
            }
            (None, games, forcing)
        };

        for v in &pool {
            let reach = v[0].unsigned_abs().max(v[1].unsigned_abs()) as usize;
            if 2 * reach >= grid.rows.min(grid.cols) {
                return Err(Error::UnderResolved {
                    vector: *v,
                    cols: grid.cols,
                    rows: grid.rows,
                });
            }
        }

        let mut slots = Vec::new();
        let mut node_slot = vec![NONE; n_nodes];
        for (k, kind) in kinds.iter().enumerate() {
            if *kind == NodeKind::Boundary {
                node_slot[k] = slots.len() as u32;
                let (i, j) = grid.coords(k);
                slots.push(grid.point(i, j));
            }
        }

        let mut irregular = vec![REGULAR; nodes.len()];
        let mut arms = Vec::new();
        for (u, &k) in nodes.iter().enumerate() {
            let (i, j) = grid.coords(k as usize);
            let interior_end = |v: [i32; 2]| {
                endpoint(&grid, &region, i, j, v)
                    .map(|m| unknown_of[m] != NONE)
                    .unwrap_or(false)
            };
            if pool
                .iter()
                .all(|&v| interior_end(v) && interior_end([-v[0], -v[1]]))
            {
                continue;
            }
            irregular[u] = (arms.len() / pool.len().max(1)) as u32;
            let q0 = grid.local(i, j);
            for &v in &pool {
                let mut pair = [Arm::Node(0); 2];
                for (side, s) in [1i32, -1].iter().enumerate() {
                    let w = [s * v[0], s * v[1]];
                    let end = endpoint(&grid, &region, i, j, w);
                    pair[side] = match end {
                        Some(m) if unknown_of[m] != NONE => Arm::Node(unknown_of[m]),
                        _ => {
                            let d = [w[0] as f64 * grid.h, w[1] as f64 * grid.h];
                            let t = region.exit(grid.periodic, q0, d).max(1e-12);
                            match end {
                                Some(m) if t >= 1.0 && node_slot[m] != NONE => Arm::Fixed {
                                    slot: node_slot[m],
                                    t: 1.0,
                                },
                                _ => {
                                    let slot = slots.len() as u32;
                                    slots.push(frame.to_physical(
                                        grid.origin,
                                        [q0[0] + t * d[0], q0[1] + t * d[1]],
                                    ));
                                    Arm::Fixed { slot, t }
                                }
                            }
                        }
                    };
                }
                arms.push(pair);
            }
        }

        Ok(Self {
            grid,
            region,
            cfg,
            kinds,
            unknown_of,
            nodes,
            pool,
            shared,
            per_node,
            forcing,
            irregular,
            arms,
            slots,
            node_slot,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Lattice directions used by the stencils.
    pub fn stencil_vectors(&self) -> &[[i32; 2]] {
        &self.pool
    }

    /// Physical points where boundary data is read.
    pub fn boundary_points(&self) -> &[[f64; 2]] {
        &self.slots
    }

    fn game(&self, u: usize) -> &LocalGame {
        match &self.shared {
            Some(g) => g,
            None => &self.per_node[u],
        }
    }

    fn arm_pair(&self, u: usize, p: usize) -> [Arm; 2] {
        let base = self.irregular[u];
        if base == REGULAR {
            let (i, j) = self.grid.coords(self.nodes[u] as usize);
            let v = self.pool[p];
            let f = endpoint(&self.grid, &self.region, i, j, v).expect("regular arm");
            let b = endpoint(&self.grid, &self.region, i, j, [-v[0], -v[1]]).expect("regular arm");
            [Arm::Node(self.unknown_of[f]), Arm::Node(self.unknown_of[b])]
        } else {
            self.arms[base as usize * self.pool.len() + p]
        }
    }

    /// Second-difference weights `(a+, a-)` and values for pool vector `p` at unknown `u`.
    fn second_difference(&self, u: usize, p: usize, x: &[f64], g: &[f64]) -> (f64, f64) {
        let h2 = self.grid.h * self.grid.h;
        let [plus, minus] = self.arm_pair(u, p);
        let read = |a: Arm| match a {
            Arm::Node(m) => (x[m as usize], 1.0),
            Arm::Fixed { slot, t } => (g[slot as usize], t),
        };
        let (vp, tp) = read(plus);
        let (vm, tm) = read(minus);
        let ap = 2.0 / (h2 * tp * (tp + tm));
        let am = 2.0 / (h2 * tm * (tp + tm));
        (ap * vp + am * vm, ap + am)
    }

    fn fill_sums(&self, u: usize, x: &[f64], g: &[f64], s: &mut [f64], d: &mut [f64]) {
        for p in 0..self.pool.len() {
            let (sp, dp) = self.second_difference(u, p, x, g);
            s[p] = sp;
            d[p] = dp;
        }
    }

    fn branch_sums(b: &Branch, s: &[f64], d: &[f64]) -> (f64, f64) {
        b.terms.iter().fold((0.0, 0.0), |(a, c), &(p, w)| {
            (a + w * s[p as usize], c + w * d[p as usize])
        })
    }

    /// Exact pointwise solve `min_beta max_alpha (A - f) / d` of the node equation.
    fn local_update(&self, u: usize, s: &[f64], d: &[f64]) -> f64 {
        let f = self.forcing[u];
        self.game(u)
            .families
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|b| {
                        let (a, c) = Self::branch_sums(b, s, d);
                        (a - f) / c
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn boundary_values(&self, data: &(dyn Fn([f64; 2]) -> f64 + Sync)) -> Result<Vec<f64>> {
        let g: Vec<f64> = self.slots.iter().map(|&p| data(p)).collect();
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "boundary data is not finite at {:?}",
                self.slots[i]
            )));
        }
        Ok(g)
    }

    /// Largest `|u - u*|` over unknowns, `u*` the pointwise exact update.
    fn defect(&self, x: &[f64], g: &[f64]) -> f64 {
        let np = self.pool.len();
        let (mut s, mut d) = (vec![0.0; np], vec![0.0; np]);
        let mut worst = 0.0f64;
        for u in 0..self.nodes.len() {
            self.fill_sums(u, x, g, &mut s, &mut d);
            worst = worst.max((self.local_update(u, &s, &d) - x[u]).abs());
        }
        worst
    }

    /// Scheme residual `F_h[u]` at every unknown for given interior values and
    /// boundary data.
    pub fn apply(
        &self,
        interior: &[f64],
        data: &(dyn Fn([f64; 2]) -> f64 + Sync),
    ) -> Result<Vec<f64>> {
        let g = self.boundary_values(data)?;
        let np = self.pool.len();
        let (mut s, mut d) = (vec![0.0; np], vec![0.0; np]);
        Ok((0..self.nodes.len())
            .map(|u| {
                self.fill_sums(u, interior, &g, &mut s, &mut d);
                let inner = self
                    .game(u)
                    .families
                    .iter()
                    .map(|fam| {
                        fam.iter()
                            .map(|b| {
                                let (a, c) = Self::branch_sums(b, &s, &d);
                                a - c * interior[u]
                            })
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min);
                self.forcing[u] - inner
            })
            .collect())
    }

    /// Samples `f` at the interior nodes, in unknown order.
    pub fn interior_samples(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&k| {
                let (i, j) = self.grid.coords(k as usize);
                f(self.grid.point(i, j))
            })
            .collect()
    }

    /// Solves the Dirichlet problem for the given boundary data.
    pub fn solve_dirichlet(
        &self,
        data: &(dyn Fn([f64; 2]) -> f64 + Sync),
    ) -> Result<DiscreteField> {
        let g = self.boundary_values(data)?;
        let start = g.iter().sum::<f64>() / g.len().max(1) as f64;
        let mut x = vec![start; self.nodes.len()];
        let (iterations, residual) = match self.cfg.method {
            Method::PolicyIteration => self.policy_iteration(&mut x, &g)?,
            Method::GaussSeidel => self.gauss_seidel(&mut x, &g)?,
        };
        Ok(self.field(x, g, iterations, residual))
    }

    fn field(&self, x: Vec<f64>, g: Vec<f64>, iterations: usize, residual: f64) -> DiscreteField {
        let mut values = vec![0.0; self.grid.len()];
        for (u, &k) in self.nodes.iter().enumerate() {
            values[k as usize] = x[u];
        }
        for (k, &s) in self.node_slot.iter().enumerate() {
            if s != NONE {
                values[k] = g[s as usize];
            }
        }
        DiscreteField {
            grid: self.grid.clone(),
            kinds: self.kinds.clone(),
            values,
            boundary_trace: g,
            iterations,
            residual,
        }
    }

    fn gauss_seidel(&self, x: &mut [f64], g: &[f64]) -> Result<(usize, f64)> {
        let np = self.pool.len();
        let (mut s, mut d) = (vec![0.0; np], vec![0.0; np]);
        let w = self.cfg.damping;
        let mut change = f64::INFINITY;
        for sweep in 1..=self.cfg.max_iterations {
            change = 0.0;
            for u in 0..self.nodes.len() {
                self.fill_sums(u, x, g, &mut s, &mut d);
                let target = self.local_update(u, &s, &d);
                change = change.max((target - x[u]).abs());
                x[u] += w * (target - x[u]);
            }
            if change <= self.cfg.tol {
                return Ok((sweep, self.defect(x, g)));
            }
        }
        Err(Error::NotConverged {
            iterations: self.cfg.max_iterations,
            residual: change,
        })
    }

    /// Best control index in `fam` for the current sums: the branch maximizing
    /// `A - d x_u`, keeping `current` on ties.
    fn best_alpha(fam: &[Branch], s: &[f64], d: &[f64], xu: f64, current: usize) -> (usize, f64) {
        let value = |b: &Branch| {
            let (a, c) = Self::branch_sums(b, s, d);
            (a - c * xu, a.abs() + (c * xu).abs())
        };
        let mut best = current.min(fam.len() - 1);
        let (mut best_v, _) = value(&fam[best]);
        for (i, b) in fam.iter().enumerate() {
            let (v, scale) = value(b);
            if v > best_v + TIE * (1.0 + scale) {
                best = i;
                best_v = v;
            }
        }
        (best, best_v)
    }

    fn policy_iteration(&self, x: &mut [f64], g: &[f64]) -> Result<(usize, f64)> {
        let n = self.nodes.len();
        let np = self.pool.len();
        let (mut s, mut d) = (vec![0.0; np], vec![0.0; np]);
        let mut beta = vec![0u16; n];
        let mut alpha = vec![0u16; n];
        let mut solves = 0usize;

        // Initial policy from the starting guess.
        for u in 0..n {
            self.fill_sums(u, x, g, &mut s, &mut d);
            let fams = &self.game(u).families;
            let mut best = (0usize, 0usize, f64::INFINITY);
            for (b, fam) in fams.iter().enumerate() {
                let (a, v) = Self::best_alpha(fam, &s, &d, x[u], 0);
                if v < best.2 {
                    best = (b, a, v);
                }
            }
            beta[u] = best.0 as u16;
            alpha[u] = best.1 as u16;
        }

        loop {
            // Inner loop: maximize over alpha with beta frozen.
            loop {
                if solves >= self.cfg.max_iterations {
                    return Err(Error::NotConverged {
                        iterations: solves,
                        residual: self.defect(x, g),
                    });
                }
                self.solve_policy(&beta, &alpha, g, x)?;
                solves += 1;
                let residual = self.defect(x, g);
                if residual <= self.cfg.tol {
                    return Ok((solves, residual));
                }
                let mut changed = false;
                for u in 0..n {
                    self.fill_sums(u, x, g, &mut s, &mut d);
                    let fam = &self.game(u).families[beta[u] as usize];
                    let (a, _) = Self::best_alpha(fam, &s, &d, x[u], alpha[u] as usize);
                    if a != alpha[u] as usize {
                        alpha[u] = a as u16;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            // Outer step: minimize over beta.
            let mut changed = false;
            for u in 0..n {
                let fams = &self.game(u).families;
                if fams.len() == 1 {
                    continue;
                }
                self.fill_sums(u, x, g, &mut s, &mut d);
                let cur = beta[u] as usize;
                let (ca, cv) = Self::best_alpha(&fams[cur], &s, &d, x[u], alpha[u] as usize);
                let mut best = (cur, ca, cv);
                let scale = x[u].abs() * d.iter().fold(0.0f64, |m, v| m.max(*v));
                for (b, fam) in fams.iter().enumerate() {
                    let (a, v) = Self::best_alpha(fam, &s, &d, x[u], 0);
                    if v < best.2 - TIE * (1.0 + scale + best.2.abs()) {
                        best = (b, a, v);
                    }
                }
                if best.0 != cur {
                    changed = true;
                }
                beta[u] = best.0 as u16;
                alpha[u] = best.1 as u16;
            }
            if !changed {
                break;
            }
        }
        let residual = self.defect(x, g);
        if residual > self.cfg.tol {
            return Err(Error::NotConverged {
                iterations: solves,
                residual,
            });
        }
        Ok((solves, residual))
    }

    /// Solves the linear system of a fixed policy into `x`.
    fn solve_policy(&self, beta: &[u16], alpha: &[u16], g: &[f64], x: &mut [f64]) -> Result<()> {
        let n = self.nodes.len();
        let h2 = self.grid.h * self.grid.h;
        let mut triplets = Vec::with_capacity(n * 7);
        let mut rhs = vec![0.0; n];
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(16);
        for u in 0..n {
            let branch = &self.game(u).families[beta[u] as usize][alpha[u] as usize];
            let mut diag = 0.0;
            let mut b = -self.forcing[u];
            row.clear();
            for &(p, w) in &branch.terms {
                let [plus, minus] = self.arm_pair(u, p as usize);
                let t = |a: Arm| match a {
                    Arm::Node(_) => 1.0,
                    Arm::Fixed { t, .. } => t,
                };
                let (tp, tm) = (t(plus), t(minus));
                for (arm, coef) in [
                    (plus, 2.0 / (h2 * tp * (tp + tm))),
                    (minus, 2.0 / (h2 * tm * (tp + tm))),
                ] {
                    diag += w * coef;
                    match arm {
                        Arm::Node(m) => row.push((m, -w * coef)),
                        Arm::Fixed { slot, .. } => b += w * coef * g[slot as usize],
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            triplets.push(Triplet::new(u, u, diag));
            let mut k = 0;
            while k < row.len() {
                let (c, mut v) = row[k];
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if c as usize == u {
                    // a wrapped arm landing on the node itself
                    triplets.push(Triplet::new(u, u, v));
                } else {
                    triplets.push(Triplet::new(u, c as usize, v));
                }
            }
            rhs[u] = b;
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Linear(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::Linear(format!("{e:?}")))?;
        let mut sol = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(sol.as_mut());
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = sol[(i, 0)];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Linear("non-finite solution".into()));
        }
        Ok(())
    }
}

/// Checks `max_interior (u - v) <= max_boundary (u - v)+ + 2 tol` for two
/// fields solved with the same scheme.
pub fn discrete_comparison_check(
    scheme: &Scheme,
    u: &DiscreteField,
    v: &DiscreteField,
) -> ComparisonReport {
    let interior_max = scheme
        .nodes
        .iter()
        .map(|&k| u.values[k as usize] - v.values[k as usize])
        .fold(f64::NEG_INFINITY, f64::max);
    let boundary_max = u
        .boundary_trace
        .iter()
        .zip(&v.boundary_trace)
        .map(|(a, b)| (a - b).max(0.0))
        .fold(0.0, f64::max);
    let slack = 2.0 * scheme.cfg.tol;
    ComparisonReport {
        interior_max,
        boundary_max,
        slack,
        passed: interior_max <= boundary_max + slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SymMatrix2;
    use crate::solver::grid::Frame;

    fn disk(h: f64) -> (Grid, Region) {
        let n = (1.0 / h).round() as usize + 1;
        let grid = Grid::new([0.0, 0.0], Frame::IDENTITY, h, n, n, false).unwrap();
        let region = Region::Quadric {
            center: [0.5, 0.5],
            form: SymMatrix2::scaled_identity(1.0 / 0.45f64.powi(2)),
        };
        (grid, region)
    }

    fn harmonic(p: [f64; 2]) -> f64 {
        p[0].exp() * p[1].sin()
    }

    fn max_error(field: &DiscreteField, exact: &dyn Fn([f64; 2]) -> f64) -> f64 {
        let mut e = 0.0f64;
        for k in 0..field.grid.len() {
            if field.kinds[k] == NodeKind::Interior {
                let (i, j) = field.grid.coords(k);
                e = e.max((field.values[k] - exact(field.grid.point(i, j))).abs());
            }
        }
        e
    }

    #[test]
    fn laplacian_second_order_on_disk() {
        let mut errs = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0] {
            let (grid, region) = disk(h);
            let s = Scheme::new(
                &EllipticOperator::laplacian(),
                grid,
                region,
                SchemeConfig::default(),
            )
            .unwrap();
            let f = s.solve_dirichlet(&harmonic).unwrap();
            errs.push(max_error(&f, &harmonic));
        }
        let ratio = errs[0] / errs[1];
        assert!(errs[1] < 1e-4, "{errs:?}");
        assert!((2.5..=6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn quadratic_reproduced_exactly() {
        // shortened arms keep the scheme exact on quadratics
        let (grid, region) = disk(1.0 / 24.0);
        let op = EllipticOperator::pucci_plus(1.0, 3.0).unwrap();
        let q = |p: [f64; 2]| p[0] * p[0] - p[1] * p[1] + 0.3 * p[0];
        let s = Scheme::new(&op, grid, region, SchemeConfig::default()).unwrap();
        let x = s.interior_samples(&q);
        let r = s.apply(&x, &q).unwrap();
        // P+ of diag(2, -2) is -(3 * 2 - 1 * 2)
        for v in r {
            assert!((v + 4.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn gauss_seidel_agrees_with_policy_iteration() {
        let n = 17;
        let grid = Grid::new(
            [0.0, 0.0],
            Frame::from_normal([0.6, 0.8]),
            1.0 / 16.0,
            n,
            n,
            false,
        )
        .unwrap();
        let region = Region::Rect {
            width: 1.0,
            depth: 1.0,
        };
        let op = EllipticOperator::pucci_minus(1.0, 2.0).unwrap();
        let data = |p: [f64; 2]| (3.0 * p[0]).sin() + p[1] * p[1];
        let a = Scheme::new(&op, grid.clone(), region.clone(), SchemeConfig::default()).unwrap();
        let cfg = SchemeConfig {
            method: Method::GaussSeidel,
            tol: 1e-11,
            max_iterations: 100_000,
            ..Default::default()
        };
        let b = Scheme::new(&op, grid, region, cfg).unwrap();
        let fa = a.solve_dirichlet(&data).unwrap();
        let fb = b.solve_dirichlet(&data).unwrap();
        assert!(fa.max_abs_diff(&fb) < 1e-8, "{}", fa.max_abs_diff(&fb));
        assert!(fa.residual <= 1e-8);
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let (grid, region) = disk(1.0 / 20.0);
        for op in [
            EllipticOperator::pucci_plus(1.0, 4.0).unwrap(),
            EllipticOperator::example_3_7(3.0, [0.6, 0.8]).unwrap(),
        ] {
            let s =
                Scheme::new(&op, grid.clone(), region.clone(), SchemeConfig::default()).unwrap();
            let f = s.solve_dirichlet(&|_| 0.7).unwrap();
            assert!(f
                .values
                .iter()
                .zip(&f.kinds)
                .all(|(v, k)| *k == NodeKind::Exterior || (v - 0.7).abs() < 1e-10));
        }
    }

    #[test]
    fn monotone_in_neighbors_and_data() {
        let (grid, region) = disk(1.0 / 16.0);
        let op = EllipticOperator::pucci_plus(1.0, 5.0).unwrap();
        let s = Scheme::new(&op, grid, region, SchemeConfig::default()).unwrap();
        let data = |p: [f64; 2]| p[0] * p[1];
        let x = s.interior_samples(&|p| (p[0] * 7.0).cos());
        let base = s.apply(&x, &data).unwrap();
        for m in (0..x.len()).step_by(7) {
            let mut y = x.clone();
            y[m] += 0.1;
            let r = s.apply(&y, &data).unwrap();
            for (u, (a, b)) in base.iter().zip(&r).enumerate() {
                if u != m {
                    assert!(b <= &(a + 1e-9), "node {u} after bump {m}");
                }
            }
        }
        let raised = s.apply(&x, &|p| data(p) + 0.1).unwrap();
        assert!(base.iter().zip(&raised).all(|(a, b)| b <= &(a + 1e-9)));
    }

    #[test]
    fn comparison_holds_for_ordered_data() {
        let (grid, region) = disk(1.0 / 24.0);
        let op = EllipticOperator::example_3_7(4.0, [0.8, 0.6]).unwrap();
        let s = Scheme::new(&op, grid, region, SchemeConfig::default()).unwrap();
        let u = s.solve_dirichlet(&|p| (5.0 * p[0]).sin()).unwrap();
        let v = s
            .solve_dirichlet(&|p| (5.0 * p[0]).sin() + 0.05 * (p[1] * 9.0).cos())
            .unwrap();
        let rep = discrete_comparison_check(&s, &u, &v);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn reflecting_strip_matches_cosh_profile() {
        let (w, depth) = (1.0, 2.0);
        let h = 1.0 / 32.0;
        let grid = Grid::new([0.0, 0.0], Frame::IDENTITY, h, 32, 65, true).unwrap();
        let s = Scheme::new(
            &EllipticOperator::laplacian(),
            grid,
            Region::Strip { depth },
            SchemeConfig::default(),
        )
        .unwrap();
        let r = std::f64::consts::TAU / w;
        let exact =
            |p: [f64; 2]| (r * p[0]).cos() * (r * (p[1] - depth)).cosh() / (r * depth).cosh();
        let f = s.solve_dirichlet(&exact).unwrap();
        assert!(max_error(&f, &exact) < 5e-3, "{}", max_error(&f, &exact));
    }

    #[test]
    fn rejects_coarse_grid_and_bad_data() {
        let grid = Grid::new([0.0, 0.0], Frame::IDENTITY, 0.25, 5, 5, false).unwrap();
        let region = Region::Rect {
            width: 1.0,
            depth: 1.0,
        };
        let op = EllipticOperator::pucci_plus(1.0, 50.0).unwrap();
        let cfg = SchemeConfig {
            angles: 32,
            ..Default::default()
        };
        assert!(matches!(
            Scheme::new(&op, grid.clone(), region.clone(), cfg),
            Err(Error::UnderResolved { .. })
        ));
        let s = Scheme::new(
            &EllipticOperator::laplacian(),
            grid,
            region,
            SchemeConfig::default(),
        )
        .unwrap();
        assert!(s.solve_dirichlet(&|_| f64::NAN).is_err());
    }
}
