//! Uniform tensor grids for bounded domains with an explicit exterior collar.
//!
//! The Dirichlet condition of the nonlocal problem lives on all of the
//! complement of the domain, so a grid carries interior nodes, an explicit
//! collar of exterior nodes (frozen to zero), and a truncation radius beyond
//! which the kernel tail is handled analytically by the kernel module.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Mirror hyperplane descriptor for a tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hyperplane {
    /// Reflection across `x[axis] = offset`.
    Coordinate { axis: usize, offset: f64 },
    /// Reflection across the diagonal plane through the grid center
    /// (coordinate swap); only a symmetry of square grids.
    DiagonalSwap,
}

/// What the grid was built from; retained for boundary distances and
/// canonical compact subsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainShape {
    Interval { a: f64, b: f64 },
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
    Ball { cx: f64, cy: f64, radius: f64 },
}

/// Discretized bounded domain with exterior-zero Dirichlet encoding.
///
/// Immutable after construction; share via `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    dim: usize,
    /// Nodes per axis; `shape[1] == 1` in 1D.
    shape: [usize; 2],
    origin: [f64; 2],
    spacing: [f64; 2],
    interior: Vec<bool>,
    symmetry_axes: Vec<Hyperplane>,
    truncation_radius: f64,
    shape_desc: DomainShape,
}

impl GridDomain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total node count, interior and exterior collar together.
    pub fn node_count(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn grid_shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    /// Volume of one grid cell (h in 1D, hx*hy in 2D).
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.spacing[0]
        } else {
            self.spacing[0] * self.spacing[1]
        }
    }

    pub fn position(&self, index: usize) -> [f64; 2] {
        let ix = index % self.shape[0];
        let iy = index / self.shape[0];
        [
            self.origin[0] + ix as f64 * self.spacing[0],
            self.origin[1] + iy as f64 * self.spacing[1],
        ]
    }

    pub fn is_interior(&self, index: usize) -> bool {
        self.interior[index]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.interior[i])
            .collect()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    pub fn symmetry_axes(&self) -> &[Hyperplane] {
        &self.symmetry_axes
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn shape_desc(&self) -> DomainShape {
        self.shape_desc
    }

    /// Replace the truncation radius (length units, must stay positive).
    pub fn with_truncation_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Geometry(format!(
                "truncation radius must be finite and positive, got {radius}"
            )));
        }
        self.truncation_radius = radius;
        Ok(self)
    }

    /// Euclidean distance between two nodes.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.position(i);
        let b = self.position(j);
        if self.dim == 1 {
            (a[0] - b[0]).abs()
        } else {
            (a[0] - b[0]).hypot(a[1] - b[1])
        }
    }

    /// Distance from a node to the boundary of the continuum domain.
    pub fn boundary_distance(&self, index: usize) -> f64 {
        let p = self.position(index);
        match self.shape_desc {
            DomainShape::Interval { a, b } => (p[0] - a).min(b - p[0]),
            DomainShape::Rectangle { ax, bx, ay, by } => {
                (p[0] - ax).min(bx - p[0]).min(p[1] - ay).min(by - p[1])
            }
            DomainShape::Ball { cx, cy, radius } => radius - (p[0] - cx).hypot(p[1] - cy),
        }
    }

    /// Geometric center of the continuum domain.
    pub fn center(&self) -> [f64; 2] {
        match self.shape_desc {
            DomainShape::Interval { a, b } => [0.5 * (a + b), 0.0],
            DomainShape::Rectangle { ax, bx, ay, by } => [0.5 * (ax + bx), 0.5 * (ay + by)],
            DomainShape::Ball { cx, cy, .. } => [cx, cy],
        }
    }

    /// Largest pairwise node distance (used for default truncation radii).
    pub fn explicit_diameter(&self) -> f64 {
        let ex = (self.shape[0] - 1) as f64 * self.spacing[0];
        let ey = (self.shape[1] - 1) as f64 * self.spacing[1];
        if self.dim == 1 {
            ex
        } else {
            ex.hypot(ey)
        }
    }

    /// Node permutation realizing the reflection across `axis`.
    ///
    /// Returns `pi` with `pi[pi[i]] == i`; errors when the plane is not a
    /// symmetry of the node set or of the interior mask.
    pub fn reflect(&self, axis: Hyperplane) -> Result<Vec<usize>> {
        let [nx, ny] = self.shape;
        let perm: Vec<usize> = match axis {
            Hyperplane::Coordinate { axis: k, offset } => {
                if k >= self.dim {
                    return Err(Error::Geometry(format!(
                        "axis index {k} out of range for a {}D grid",
                        self.dim
                    )));
                }
                let n = self.shape[k];
                let mid = self.origin[k] + 0.5 * (n - 1) as f64 * self.spacing[k];
                let span = (n - 1) as f64 * self.spacing[k];
                if (offset - mid).abs() > 1e-12 * span.max(1.0) {
                    return Err(Error::Geometry(format!(
                        "axis x{k}={offset} is not a grid symmetry (grid midplane at {mid})"
                    )));
                }
                (0..nx * ny)
                    .map(|i| {
                        let (ix, iy) = (i % nx, i / nx);
                        if k == 0 {
                            (nx - 1 - ix) + nx * iy
                        } else {
                            ix + nx * (ny - 1 - iy)
                        }
                    })
                    .collect()
            }
            Hyperplane::DiagonalSwap => {
                if self.dim != 2 || nx != ny || (self.spacing[0] - self.spacing[1]).abs() > 1e-14 {
                    return Err(Error::Geometry(
                        "diagonal swap requires a square 2D grid with equal spacing".into(),
                    ));
                }
                let rel0 = self.origin[0] - self.center()[0];
                let rel1 = self.origin[1] - self.center()[1];
                if (rel0 - rel1).abs() > 1e-12 {
                    return Err(Error::Geometry(
                        "diagonal plane does not pass through the grid center".into(),
                    ));
                }
                (0..nx * ny)
                    .map(|i| {
                        let (ix, iy) = (i % nx, i / nx);
                        iy + nx * ix
                    })
                    .collect()
            }
        };
        for i in 0..perm.len() {
            if self.interior[perm[i]] != self.interior[i] {
                return Err(Error::Geometry(
                    "interior mask is not invariant under the requested reflection".into(),
                ));
            }
        }
        Ok(perm)
    }

    /// Interior nodes within `frac` of the half-extent of the domain,
    /// measured from its center (the "inner half" for `frac = 0.5`).
    pub fn central_subset(&self, frac: f64) -> Result<CompactSubset> {
        let c = self.center();
        let keep = |i: usize| -> bool {
            let p = self.position(i);
            match self.shape_desc {
                DomainShape::Interval { a, b } => (p[0] - c[0]).abs() <= frac * 0.5 * (b - a),
                DomainShape::Rectangle { ax, bx, ay, by } => {
                    (p[0] - c[0]).abs() <= frac * 0.5 * (bx - ax)
                        && (p[1] - c[1]).abs() <= frac * 0.5 * (by - ay)
                }
                DomainShape::Ball { radius, .. } => {
                    (p[0] - c[0]).hypot(p[1] - c[1]) <= frac * radius
                }
            }
        };
        let indices: Vec<usize> = (0..self.node_count())
            .filter(|&i| self.interior[i] && keep(i))
            .collect();
        CompactSubset::new(self, indices)
    }
}

/// Set of interior nodes compactly contained in the domain.
#[derive(Debug, Clone)]
pub struct CompactSubset {
    node_indices: Vec<usize>,
    margin: f64,
}

impl CompactSubset {
    pub fn new(domain: &GridDomain, node_indices: Vec<usize>) -> Result<Self> {
        if node_indices.is_empty() {
            return Err(Error::Geometry("compact subset must be nonempty".into()));
        }
        let mut margin = f64::INFINITY;
        for &i in &node_indices {
            if i >= domain.node_count() {
                return Err(Error::Geometry(format!("node index {i} out of range")));
            }
            if !domain.is_interior(i) {
                return Err(Error::Geometry(format!(
                    "node {i} of the compact subset is not interior"
                )));
            }
            margin = margin.min(domain.boundary_distance(i));
        }
        if !(margin > 0.0) {
            return Err(Error::Geometry(
                "compact subset touches the boundary (margin must be positive)".into(),
            ));
        }
        Ok(Self {
            node_indices,
            margin,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.node_indices
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}

fn check_bounds(a: f64, b: f64, m: usize, pad: f64) -> Result<()> {
    if !a.is_finite() || !b.is_finite() || !pad.is_finite() {
        return Err(Error::Geometry(
            "domain bounds and pad must be finite".into(),
        ));
    }
    if !(a < b) {
        return Err(Error::Geometry(format!("need a < b, got a={a}, b={b}")));
    }
    if m < 3 {
        return Err(Error::Geometry(format!(
            "need at least 3 nodes across the domain to have an interior, got {m}"
        )));
    }
    if pad < 0.0 {
        return Err(Error::Geometry(format!(
            "pad must be nonnegative, got {pad}"
        )));
    }
    Ok(())
}

fn pad_nodes(pad: f64, h: f64) -> usize {
    if pad <= 0.0 {
        0
    } else {
        ((pad / h) - 1e-9).ceil().max(0.0) as usize
    }
}

/// Uniform grid on `[a - pad, b + pad]` with `m` nodes across `[a, b]`.
///
/// Nodes strictly inside `(a, b)` are interior; the endpoints and the collar
/// carry the exterior zero. The pad widens to a whole number of cells.
pub fn build_interval(a: f64, b: f64, m: usize, pad: f64) -> Result<Arc<GridDomain>> {
    check_bounds(a, b, m, pad)?;
    let h = (b - a) / (m - 1) as f64;
    let np = pad_nodes(pad, h);
    let nx = m + 2 * np;
    let origin = a - np as f64 * h;
    let interior: Vec<bool> = (0..nx)
        .map(|ix| {
            let x = origin + ix as f64 * h;
            x > a + 1e-12 * h && x < b - 1e-12 * h
        })
        .collect();
    let half_span = 0.5 * (nx - 1) as f64 * h;
    let domain = GridDomain {
        dim: 1,
        shape: [nx, 1],
        origin: [origin, 0.0],
        spacing: [h, h],
        interior,
        symmetry_axes: vec![Hyperplane::Coordinate {
            axis: 0,
            offset: 0.5 * (a + b),
        }],
        truncation_radius: half_span + 0.5 * h,
        shape_desc: DomainShape::Interval { a, b },
    };
    Ok(Arc::new(domain))
}

/// Axis-aligned rectangle `(ax,bx) x (ay,by)`, `mx x my` nodes across it.
pub fn build_rectangle(
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    mx: usize,
    my: usize,
    pad: f64,
) -> Result<Arc<GridDomain>> {
    check_bounds(ax, bx, mx, pad)?;
    check_bounds(ay, by, my, pad)?;
    let hx = (bx - ax) / (mx - 1) as f64;
    let hy = (by - ay) / (my - 1) as f64;
    let (npx, npy) = (pad_nodes(pad, hx), pad_nodes(pad, hy));
    let (nx, ny) = (mx + 2 * npx, my + 2 * npy);
    let origin = [ax - npx as f64 * hx, ay - npy as f64 * hy];
    let interior: Vec<bool> = (0..nx * ny)
        .map(|i| {
            let (ix, iy) = (i % nx, i / nx);
            let x = origin[0] + ix as f64 * hx;
            let y = origin[1] + iy as f64 * hy;
            x > ax + 1e-12 * hx && x < bx - 1e-12 * hx && y > ay + 1e-12 * hy && y < by - 1e-12 * hy
        })
        .collect();
    let mut axes = vec![
        Hyperplane::Coordinate {
            axis: 0,
            offset: 0.5 * (ax + bx),
        },
        Hyperplane::Coordinate {
            axis: 1,
            offset: 0.5 * (ay + by),
        },
    ];
    if nx == ny
        && (hx - hy).abs() < 1e-14
        && (origin[0] - 0.5 * (ax + bx)) - (origin[1] - 0.5 * (ay + by)) == 0.0
    {
        axes.push(Hyperplane::DiagonalSwap);
    }
    let ex = 0.5 * (nx - 1) as f64 * hx;
    let ey = 0.5 * (ny - 1) as f64 * hy;
    let domain = GridDomain {
        dim: 2,
        shape: [nx, ny],
        origin,
        spacing: [hx, hy],
        interior,
        symmetry_axes: axes,
        truncation_radius: ex.hypot(ey) + 0.5 * hx.min(hy),
        shape_desc: DomainShape::Rectangle { ax, bx, ay, by },
    };
    Ok(Arc::new(domain))
}

/// Ball of given radius discretized by node-in-ball masking of a square
/// tensor grid with `m` nodes across the diameter.
pub fn build_ball(cx: f64, cy: f64, radius: f64, m: usize, pad: f64) -> Result<Arc<GridDomain>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Geometry(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    check_bounds(cx - radius, cx + radius, m, pad)?;
    let h = 2.0 * radius / (m - 1) as f64;
    let np = pad_nodes(pad, h);
    let n = m + 2 * np;
    let origin = [cx - radius - np as f64 * h, cy - radius - np as f64 * h];
    let interior: Vec<bool> = (0..n * n)
        .map(|i| {
            let (ix, iy) = (i % n, i / n);
            let x = origin[0] + ix as f64 * h;
            let y = origin[1] + iy as f64 * h;
            (x - cx).hypot(y - cy) < radius - 1e-12 * h
        })
        .collect();
    let axes = vec![
        Hyperplane::Coordinate {
            axis: 0,
            offset: cx,
        },
        Hyperplane::Coordinate {
            axis: 1,
            offset: cy,
        },
        Hyperplane::DiagonalSwap,
    ];
    let half = 0.5 * (n - 1) as f64 * h;
    let domain = GridDomain {
        dim: 2,
        shape: [n, n],
        origin,
        spacing: [h, h],
        interior,
        symmetry_axes: axes,
        truncation_radius: half.hypot(half) + 0.5 * h,
        shape_desc: DomainShape::Ball { cx, cy, radius },
    };
    Ok(Arc::new(domain))
}
