//! Uniform grids in a possibly rotated frame, and the convex regions they mesh.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix2;

/// Orthonormal frame `(e1, e2)`; local coordinates `q` map to `origin + q0 e1 + q1 e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        e1: [1.0, 0.0],
        e2: [0.0, 1.0],
    };

    /// Frame with depth axis `e2 = nu` and lateral axis `e1 = (-nu2, nu1)`.
    pub fn from_normal(nu: [f64; 2]) -> Frame {
        Frame {
            e1: [-nu[1], nu[0]],
            e2: nu,
        }
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let d = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        (d(self.e1, self.e1) - 1.0).abs() <= tol
            && (d(self.e2, self.e2) - 1.0).abs() <= tol
            && d(self.e1, self.e2).abs() <= tol
    }

    pub fn to_physical(&self, origin: [f64; 2], q: [f64; 2]) -> [f64; 2] {
        [
            origin[0] + q[0] * self.e1[0] + q[1] * self.e2[0],
            origin[1] + q[0] * self.e1[1] + q[1] * self.e2[1],
        ]
    }

    pub fn to_local(&self, origin: [f64; 2], p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - origin[0], p[1] - origin[1]];
        [
            d[0] * self.e1[0] + d[1] * self.e1[1],
            d[0] * self.e2[0] + d[1] * self.e2[1],
        ]
    }
}

/// `cols x rows` nodes at local positions `(i h, j h)`. A periodic grid
/// identifies column `cols` with column 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: [f64; 2],
    pub frame: Frame,
    pub h: f64,
    pub cols: usize,
    pub rows: usize,
    pub periodic: bool,
}

impl Grid {
    pub fn new(
        origin: [f64; 2],
        frame: Frame,
        h: f64,
        cols: usize,
        rows: usize,
        periodic: bool,
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Invalid(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        if cols < 3 || rows < 3 {
            return Err(Error::Invalid(format!("grid {cols}x{rows} too small")));
        }
        if !frame.is_orthonormal(1e-12) {
            return Err(Error::Invalid("grid frame is not orthonormal".into()));
        }
        Ok(Self {
            origin,
            frame,
            h,
            cols,
            rows,
            periodic,
        })
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cols + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.cols, idx / self.cols)
    }

    pub fn local(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        self.frame.to_physical(self.origin, self.local(i, j))
    }

    /// Node index of `(i, j) + v`, wrapping columns on periodic grids.
    pub fn offset(&self, i: usize, j: usize, v: [i32; 2]) -> Option<usize> {
        let jj = j as i64 + v[1] as i64;
        if jj < 0 || jj >= self.rows as i64 {
            return None;
        }
        let ii = i as i64 + v[0] as i64;
        let ii = if self.periodic {
            ii.rem_euclid(self.cols as i64)
        } else if ii < 0 || ii >= self.cols as i64 {
            return None;
        } else {
            ii
        };
        Some(self.index(ii as usize, jj as usize))
    }
}

/// Convex region in local grid coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    /// `[0, width] x [0, depth]`; the lateral sides are ignored on periodic grids.
    Rect { width: f64, depth: f64 },
    /// `0 <= q2 <= depth` on a periodic grid with data on `q2 = 0` and a
    /// reflecting face at `q2 = depth`.
    Strip { depth: f64 },
    /// `{q : (q - center)^T form (q - center) < 1}` with `form` positive definite.
    Quadric { center: [f64; 2], form: SymMatrix2 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

const LEVEL_TOL: f64 = 1e-12;

impl Region {
    pub fn level(&self, q: [f64; 2]) -> f64 {
        match self {
            Region::Rect { .. } | Region::Strip { .. } => f64::NAN,
            Region::Quadric { center, form } => form.quad([q[0] - center[0], q[1] - center[1]]),
        }
    }

    pub fn classify(&self, grid: &Grid, i: usize, j: usize) -> NodeKind {
        match self {
            Region::Rect { width, depth } => {
                let q = grid.local(i, j);
                let tol = 1e-9 * grid.h;
                let lateral_in = grid.periodic || (q[0] > tol && q[0] < width - tol);
                let lateral_on =
                    !grid.periodic && ((q[0] - width).abs() <= tol || q[0].abs() <= tol);
                let depth_in = q[1] > tol && q[1] < depth - tol;
                let depth_on = q[1].abs() <= tol || (q[1] - depth).abs() <= tol;
                let outside = q[1] < -tol
                    || q[1] > depth + tol
                    || (!grid.periodic && (q[0] < -tol || q[0] > width + tol));
                if outside {
                    NodeKind::Exterior
                } else if lateral_in && depth_in {
                    NodeKind::Interior
                } else if lateral_on || depth_on {
                    NodeKind::Boundary
                } else {
                    NodeKind::Exterior
                }
            }
            Region::Strip { depth } => {
                let q = grid.local(i, j);
                let tol = 1e-9 * grid.h;
                if q[1] < -tol || q[1] > depth + tol {
                    NodeKind::Exterior
                } else if q[1] <= tol {
                    NodeKind::Boundary
                } else {
                    NodeKind::Interior
                }
            }
            Region::Quadric { .. } => {
                let l = self.level(grid.local(i, j));
                if l < 1.0 - LEVEL_TOL {
                    NodeKind::Interior
                } else if l <= 1.0 + LEVEL_TOL {
                    NodeKind::Boundary
                } else {
                    NodeKind::Exterior
                }
            }
        }
    }

    /// First parameter `t` in `(0, 1]` where `q0 + t d` reaches the boundary,
    /// for `q0` strictly inside; 1 if the segment stays inside.
    pub fn exit(&self, periodic: bool, q0: [f64; 2], d: [f64; 2]) -> f64 {
        match self {
            Region::Rect { width, depth } => {
                let mut t = 1.0f64;
                let mut face = |x: f64, dx: f64, hi: f64| {
                    if dx < 0.0 {
                        t = t.min(-x / dx);
                    } else if dx > 0.0 {
                        t = t.min((hi - x) / dx);
                    }
                };
                face(q0[1], d[1], *depth);
                if !periodic {
                    face(q0[0], d[0], *width);
                }
                t
            }
            Region::Strip { .. } => {
                if d[1] < 0.0 {
                    (-q0[1] / d[1]).min(1.0)
                } else {
                    1.0
                }
            }
            Region::Quadric { center, form } => {
                let r = [q0[0] - center[0], q0[1] - center[1]];
                let a = form.quad(d);
                let b = 2.0 * form.bilinear(d, r);
                let c = form.quad(r) - 1.0;
                let disc = (b * b - 4.0 * a * c).max(0.0);
                // numerically stable positive root of a t^2 + b t + c, c < 0
                let t = if b >= 0.0 {
                    -2.0 * c / (b + disc.sqrt())
                } else {
                    (-b + disc.sqrt()) / (2.0 * a)
                };
                t.min(1.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let s = 3f64.sqrt();
        let f = Frame::from_normal([1.0 / s, 2f64.sqrt() / s]);
        assert!(f.is_orthonormal(1e-14));
        let p = f.to_physical([0.3, -1.0], [2.0, 5.0]);
        let q = f.to_local([0.3, -1.0], p);
        assert!((q[0] - 2.0).abs() < 1e-14 && (q[1] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn rect_classification_and_exit() {
        let g = Grid::new([0.0; 2], Frame::IDENTITY, 0.25, 5, 5, false).unwrap();
        let r = Region::Rect {
            width: 1.0,
            depth: 1.0,
        };
        assert_eq!(r.classify(&g, 2, 2), NodeKind::Interior);
        assert_eq!(r.classify(&g, 0, 2), NodeKind::Boundary);
        assert_eq!(r.classify(&g, 2, 4), NodeKind::Boundary);
        let t = r.exit(false, [0.25, 0.25], [-0.5, 0.0]);
        assert!((t - 0.5).abs() < 1e-15);
        assert_eq!(r.exit(true, [0.25, 0.25], [-0.5, 0.0]), 1.0);
    }

    #[test]
    fn disk_exit() {
        let r = Region::Quadric {
            center: [0.0; 2],
            form: SymMatrix2::IDENTITY,
        };
        let t = r.exit(false, [0.5, 0.0], [1.0, 0.0]);
        assert!((t - 0.5).abs() < 1e-15);
        let t = r.exit(false, [0.0, 0.0], [0.0, -2.0]);
        assert!((t - 0.5).abs() < 1e-15);
        assert_eq!(r.exit(false, [0.0, 0.0], [0.1, 0.1]), 1.0);
    }

    #[test]
    fn periodic_offsets_wrap() {
        let g = Grid::new([0.0; 2], Frame::IDENTITY, 0.1, 10, 5, true).unwrap();
        assert_eq!(g.offset(9, 1, [1, 0]), Some(g.index(0, 1)));
        assert_eq!(g.offset(0, 0, [0, -1]), None);
    }
}
