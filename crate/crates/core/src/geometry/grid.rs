//! Boundary-fitted structured grid.
//!
//! Computational coordinates `(ξ, ζ) ∈ [x_min, x_max] × [0, 1]` map to the
//! physical plane by
//!
//! ```text
//! x1 = ξ
//! x2 = y(ζ) + f(ξ) b(y(ζ)),   y(ζ) = y_lo + (top - y_lo) s(ζ)
//! ```
//!
//! where `f` is the boundary graph, `s` a monotone grading and `b` a C³ blend
//! that equals one on the boundary and vanishes above the blend height. Above
//! the blend height the grid is Cartesian, so grids of different heights with
//! the same spacing share their nodes.

use super::{BoundaryProfile, GeometryError, Side, TruncatedDomain};

/// Vertical grading `s(ζ) = (ζ + (g - 1) ζ²) / g`; `g = 1` is uniform and
/// larger exponents cluster nodes near the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub exponent: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Self { exponent: 1.0 }
    }
}

impl Grading {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn s(&self, z: f64) -> [f64; 3] {
        let g = self.exponent;
        [(z + (g - 1.0) * z * z) / g, (1.0 + 2.0 * (g - 1.0) * z) / g, 2.0 * (g - 1.0) / g]
    }

    pub fn inverse(&self, s: f64) -> f64 {
        let g = self.exponent;
        if g == 1.0 {
            return s;
        }
        2.0 * g * s / (1.0 + (1.0 + 4.0 * (g - 1.0) * g * s).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Bottom,
    Left,
    Right,
    Top,
}

/// Derivatives of `x2 = X(ξ, ζ)`; `x1 = ξ` has trivial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDerivatives {
    pub x_xi: f64,
    pub x_zeta: f64,
    pub x_xixi: f64,
    pub x_xizeta: f64,
    pub x_zetazeta: f64,
}

/// Derivatives of `ζ(x1, x2)`; `ξ = x1` has trivial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseMetrics {
    pub zeta_x1: f64,
    pub zeta_x2: f64,
    pub zeta_x1x1: f64,
    pub zeta_x1x2: f64,
    pub zeta_x2x2: f64,
}

impl MapDerivatives {
    pub fn jacobian(&self) -> f64 {
        self.x_zeta
    }

    pub fn inverse(&self) -> InverseMetrics {
        let j = self.x_zeta;
        let q = -self.x_xi / j;
        let q_xi = (-self.x_xixi * j + self.x_xi * self.x_xizeta) / (j * j);
        let q_zeta = (-self.x_xizeta * j + self.x_xi * self.x_zetazeta) / (j * j);
        InverseMetrics {
            zeta_x1: q,
            zeta_x2: 1.0 / j,
            zeta_x1x1: q_xi + q * q_zeta,
            zeta_x1x2: q_zeta / j,
            zeta_x2x2: -self.x_zetazeta / (j * j * j),
        }
    }
}

/// Weights on the 3×3 neighbourhood of a node, index `(dj + 1) * 3 + (di + 1)`,
/// for each physical first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stencil {
    pub dx1: [f64; 9],
    pub dx2: [f64; 9],
    pub dx1x1: [f64; 9],
    pub dx1x2: [f64; 9],
    pub dx2x2: [f64; 9],
}

impl Stencil {
    pub const CENTER: usize = 4;

    pub fn offset(k: usize) -> (isize, isize) {
        (k as isize % 3 - 1, k as isize / 3 - 1)
    }

    /// Regular stencil from central differences in computational space.
    fn from_metrics(m: &InverseMetrics, dxi: f64, dzeta: f64) -> Self {
        let mut u_xi = [0.0; 9];
        let mut u_zeta = [0.0; 9];
        let mut u_xixi = [0.0; 9];
        let mut u_zetazeta = [0.0; 9];
        let mut u_xizeta = [0.0; 9];
        u_xi[5] = 0.5 / dxi;
        u_xi[3] = -0.5 / dxi;
        u_zeta[7] = 0.5 / dzeta;
        u_zeta[1] = -0.5 / dzeta;
        u_xixi[3] = 1.0 / (dxi * dxi);
        u_xixi[5] = 1.0 / (dxi * dxi);
        u_xixi[4] = -2.0 / (dxi * dxi);
        u_zetazeta[1] = 1.0 / (dzeta * dzeta);
        u_zetazeta[7] = 1.0 / (dzeta * dzeta);
        u_zetazeta[4] = -2.0 / (dzeta * dzeta);
        let c = 0.25 / (dxi * dzeta);
        u_xizeta[8] = c;
        u_xizeta[0] = c;
        u_xizeta[6] = -c;
        u_xizeta[2] = -c;
        let q = m.zeta_x1;
        let zy = m.zeta_x2;
        let mut s = Stencil::default();
        for k in 0..9 {
            s.dx1[k] = u_xi[k] + q * u_zeta[k];
            s.dx2[k] = zy * u_zeta[k];
            s.dx1x1[k] = u_xixi[k] + 2.0 * q * u_xizeta[k] + q * q * u_zetazeta[k] + m.zeta_x1x1 * u_zeta[k];
            s.dx1x2[k] = zy * u_xizeta[k] + q * zy * u_zetazeta[k] + m.zeta_x1x2 * u_zeta[k];
            s.dx2x2[k] = zy * zy * u_zetazeta[k] + m.zeta_x2x2 * u_zeta[k];
        }
        s
    }

    /// Least-squares quadratic fit in physical coordinates over the
    /// neighbourhood; used where the map is not differentiable in ξ.
    fn least_squares(offsets: &[[f64; 2]; 9]) -> Self {
        let scale = offsets.iter().map(|d| d[0].abs().max(d[1].abs())).fold(0.0f64, f64::max);
        let rows: Vec<[f64; 5]> = (0..9)
            .filter(|&k| k != Self::CENTER)
            .map(|k| {
                let dx = offsets[k][0] / scale;
                let dy = offsets[k][1] / scale;
                [dx, dy, 0.5 * dx * dx, dx * dy, 0.5 * dy * dy]
            })
            .collect();
        let mut normal = [[0.0; 5]; 5];
        for r in &rows {
            for a in 0..5 {
                for b in 0..5 {
                    normal[a][b] += r[a] * r[b];
                }
            }
        }
        // Right-hand sides: A^T, one column per neighbour.
        let mut rhs = [[0.0; 8]; 5];
        for (n, r) in rows.iter().enumerate() {
            for a in 0..5 {
                rhs[a][n] = r[a];
            }
        }
        solve_dense_5(&mut normal, &mut rhs);
        let mut s = Stencil::default();
        let targets: [(&mut [f64; 9], f64); 5] = [
            (&mut s.dx1, scale),
            (&mut s.dx2, scale),
            (&mut s.dx1x1, scale * scale),
            (&mut s.dx1x2, scale * scale),
            (&mut s.dx2x2, scale * scale),
        ];
        for (a, (w, sc)) in targets.into_iter().enumerate() {
            let mut n = 0;
            let mut sum = 0.0;
            for k in 0..9 {
                if k == Self::CENTER {
                    continue;
                }
                w[k] = rhs[a][n] / sc;
                sum += w[k];
                n += 1;
            }
            w[Self::CENTER] = -sum;
        }
        s
    }
}

/// Gaussian elimination with partial pivoting on a 5×5 system with 8
/// right-hand sides; the solution overwrites `rhs`.
fn solve_dense_5(a: &mut [[f64; 5]; 5], rhs: &mut [[f64; 8]; 5]) {
    for col in 0..5 {
        let pivot = (col..5).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap_or(col);
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let d = a[col][col];
        for row in col + 1..5 {
            let f = a[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..8 {
                rhs[row][k] -= f * rhs[col][k];
            }
        }
    }
    for col in (0..5).rev() {
        for k in 0..8 {
            let mut v = rhs[col][k];
            for j in col + 1..5 {
                v -= a[col][j] * rhs[j][k];
            }
            rhs[col][k] = v / a[col][col];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BottomShape {
    Profile(BoundaryProfile),
    Flat,
}

/// Structured boundary-fitted grid with analytic metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvilinearGrid {
    pub nx: usize,
    pub nz: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Level of the reference line the boundary displaces (0 for profiles).
    pub y_lo: f64,
    pub top: f64,
    pub blend_height: f64,
    pub grading: Grading,
    pub dxi: f64,
    pub dzeta: f64,
    shape: BottomShape,
    pub nodes: Vec<[f64; 2]>,
    /// Node metrics; at kink columns the average of the two one-sided values.
    pub metrics: Vec<InverseMetrics>,
    pub tags: Vec<NodeTag>,
    pub kink_columns: Vec<usize>,
    kink_stencils: Vec<Vec<Stencil>>,
}

fn check_counts(nx: usize, nz: usize) -> Result<(), GeometryError> {
    if nx < 9 || nz < 9 || nx.is_multiple_of(2) || nz.is_multiple_of(2) {
        return Err(GeometryError::InvalidGrid(format!("node counts must be odd and at least 9, got {nx}x{nz}")));
    }
    Ok(())
}

/// Grid over a truncated domain. The blend height is `D0 + 1`.
pub fn generate_grid(
    domain: &TruncatedDomain,
    nx: usize,
    nz: usize,
    grading: Grading,
) -> Result<CurvilinearGrid, GeometryError> {
    check_counts(nx, nz)?;
    if !(grading.exponent >= 1.0) {
        return Err(GeometryError::InvalidGrid(format!("grading exponent {} must be >= 1", grading.exponent)));
    }
    let kinks = domain.profile.kinks();
    CurvilinearGrid::build(
        BottomShape::Profile(domain.profile.clone()),
        -domain.r,
        domain.r,
        0.0,
        domain.h,
        domain.blend_height().min(domain.h),
        nx,
        nz,
        grading,
        &kinks,
    )
}

/// Cartesian grid on `[x0, x1] × [y0, y1]`.
pub fn generate_rectangle_grid(
    x: [f64; 2],
    y: [f64; 2],
    nx: usize,
    nz: usize,
    grading: Grading,
) -> Result<CurvilinearGrid, GeometryError> {
    check_counts(nx, nz)?;
    if !(x[1] > x[0] && y[1] > y[0]) {
        return Err(GeometryError::InvalidGrid("empty rectangle".into()));
    }
    CurvilinearGrid::build(BottomShape::Flat, x[0], x[1], y[0], y[1], y[1] - y[0], nx, nz, grading, &[])
}

impl CurvilinearGrid {
    #[allow(clippy::too_many_arguments)]
    fn build(
        shape: BottomShape,
        x_min: f64,
        x_max: f64,
        y_lo: f64,
        top: f64,
        blend_height: f64,
        nx: usize,
        nz: usize,
        grading: Grading,
        kinks: &[f64],
    ) -> Result<Self, GeometryError> {
        let dxi = (x_max - x_min) / (nx - 1) as f64;
        let dzeta = 1.0 / (nz - 1) as f64;
        let mut kink_columns = Vec::new();
        for &k in kinks {
            if k <= x_min || k >= x_max {
                continue;
            }
            let i = ((k - x_min) / dxi).round() as usize;
            let xi = x_min + (x_max - x_min) * i as f64 / (nx - 1) as f64;
            if (xi - k).abs() > 1e-9 * k.abs().max(1.0) {
                return Err(GeometryError::CornerOffGrid { x: k });
            }
            if i == 0 || i == nx - 1 {
                return Err(GeometryError::CornerOffGrid { x: k });
            }
            kink_columns.push(i);
        }
        let mut grid = CurvilinearGrid {
            nx,
            nz,
            x_min,
            x_max,
            y_lo,
            top,
            blend_height,
            grading,
            dxi,
            dzeta,
            shape,
            nodes: Vec::with_capacity(nx * nz),
            metrics: Vec::with_capacity(nx * nz),
            tags: Vec::with_capacity(nx * nz),
            kink_columns,
            kink_stencils: Vec::new(),
        };
        for j in 0..nz {
            for i in 0..nx {
                let xi = grid.xi(i);
                let zeta = grid.zeta(j);
                grid.nodes.push([xi, grid.map_point(xi, zeta)]);
                let left = grid.map_derivatives(xi, zeta, Side::Left);
                let right = grid.map_derivatives(xi, zeta, Side::Right);
                for md in [left, right] {
                    if !(md.jacobian() > 0.0) {
                        return Err(GeometryError::JacobianNonPositive { i, j, value: md.jacobian() });
                    }
                }
                let (l, r) = (left.inverse(), right.inverse());
                grid.metrics.push(InverseMetrics {
                    zeta_x1: 0.5 * (l.zeta_x1 + r.zeta_x1),
                    zeta_x2: 0.5 * (l.zeta_x2 + r.zeta_x2),
                    zeta_x1x1: 0.5 * (l.zeta_x1x1 + r.zeta_x1x1),
                    zeta_x1x2: 0.5 * (l.zeta_x1x2 + r.zeta_x1x2),
                    zeta_x2x2: 0.5 * (l.zeta_x2x2 + r.zeta_x2x2),
                });
                let tag = if j == 0 {
                    NodeTag::Bottom
                } else if j == nz - 1 {
                    NodeTag::Top
                } else if i == 0 {
                    NodeTag::Left
                } else if i == nx - 1 {
                    NodeTag::Right
                } else {
                    NodeTag::Interior
                };
                grid.tags.push(tag);
            }
        }
        let mut kink_stencils = Vec::with_capacity(grid.kink_columns.len());
        for &i in &grid.kink_columns {
            let mut col = vec![Stencil::default(); nz];
            for (j, st) in col.iter_mut().enumerate().take(nz - 1).skip(1) {
                let c = grid.nodes[grid.idx(i, j)];
                let mut offsets = [[0.0; 2]; 9];
                for (k, off) in offsets.iter_mut().enumerate() {
                    let (di, dj) = Stencil::offset(k);
                    let p = grid.nodes[grid.idx((i as isize + di) as usize, (j as isize + dj) as usize)];
                    *off = [p[0] - c[0], p[1] - c[1]];
                }
                *st = Stencil::least_squares(&offsets);
            }
            kink_stencils.push(col);
        }
        grid.kink_stencils = kink_stencils;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn zeta(&self, j: usize) -> f64 {
        j as f64 / (self.nz - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        self.nodes[self.idx(i, j)]
    }

    pub fn tag(&self, i: usize, j: usize) -> NodeTag {
        self.tags[self.idx(i, j)]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.nz - 1
    }

    pub fn is_kink_column(&self, i: usize) -> bool {
        self.kink_columns.contains(&i)
    }

    pub fn profile(&self) -> Option<&BoundaryProfile> {
        match &self.shape {
            BottomShape::Profile(p) => Some(p),
            BottomShape::Flat => None,
        }
    }

    /// Boundary displacement `f` and its derivatives at `ξ`.
    pub fn bottom(&self, xi: f64, side: Side) -> [f64; 3] {
        match &self.shape {
            BottomShape::Profile(p) => p.eval_side(xi, side),
            BottomShape::Flat => [0.0; 3],
        }
    }

    fn blend(&self, y: f64) -> [f64; 3] {
        let t = (y - self.y_lo) / self.blend_height;
        if t >= 1.0 {
            return [0.0; 3];
        }
        // (1 - t)^4 is C³ at t = 1, so second differences across the blend
        // height keep their order.
        let w = 1.0 - t;
        let yb = self.blend_height;
        [w * w * w * w, -4.0 * w * w * w / yb, 12.0 * w * w / (yb * yb)]
    }

    fn reference_height(&self, zeta: f64) -> [f64; 3] {
        let span = self.top - self.y_lo;
        let [s, s1, s2] = self.grading.s(zeta);
        [self.y_lo + span * s, span * s1, span * s2]
    }

    pub fn map_point(&self, xi: f64, zeta: f64) -> f64 {
        let y = self.reference_height(zeta)[0];
        y + self.bottom(xi, Side::Right)[0] * self.blend(y)[0]
    }

    pub fn map_derivatives(&self, xi: f64, zeta: f64, side: Side) -> MapDerivatives {
        let [y, y1, y2] = self.reference_height(zeta);
        let [f, f1, f2] = self.bottom(xi, side);
        let [b, b1, b2] = self.blend(y);
        MapDerivatives {
            x_xi: f1 * b,
            x_zeta: y1 * (1.0 + f * b1),
            x_xixi: f2 * b,
            x_xizeta: f1 * b1 * y1,
            x_zetazeta: y2 * (1.0 + f * b1) + y1 * y1 * f * b2,
        }
    }

    /// Computational coordinates of a physical point, if it lies in the grid.
    pub fn locate(&self, x: [f64; 2]) -> Option<(f64, f64)> {
        let xi = x[0];
        let tol = 1e-12 * (self.x_max - self.x_min);
        if !(xi >= self.x_min - tol && xi <= self.x_max + tol) {
            return None;
        }
        let xi = xi.clamp(self.x_min, self.x_max);
        let f = self.bottom(xi, Side::Right)[0];
        let htol = 1e-12 * (1.0 + self.top.abs());
        if x[1] < self.y_lo + f - htol || x[1] > self.top + htol {
            return None;
        }
        // Solve y + f b(y) = x2 for the monotone reference height y.
        let (mut lo, mut hi) = (self.y_lo, self.top);
        let mut y = (x[1] - f).clamp(lo, hi);
        for _ in 0..100 {
            let [b, b1, _] = self.blend(y);
            let r = y + f * b - x[1];
            if r.abs() <= 1e-15 * (1.0 + x[1].abs()) {
                break;
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let step = r / (1.0 + f * b1);
            let next = y - step;
            y = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (hi - lo) < 1e-15 * (1.0 + y.abs()) {
                break;
            }
        }
        let s = ((y - self.y_lo) / (self.top - self.y_lo)).clamp(0.0, 1.0);
        Some((xi, self.grading.inverse(s)))
    }

    /// Difference stencil at an interior node.
    pub fn stencil(&self, i: usize, j: usize) -> Stencil {
        debug_assert!(!self.is_boundary(i, j));
        if let Some(c) = self.kink_columns.iter().position(|&k| k == i) {
            return self.kink_stencils[c][j];
        }
        Stencil::from_metrics(&self.metrics[self.idx(i, j)], self.dxi, self.dzeta)
    }

    /// Applies a stencil at interior node `(i, j)`: `[u_x1, u_x2, u_x1x1, u_x1x2, u_x2x2]`.
    pub fn derivatives(&self, u: &[f64], i: usize, j: usize) -> [f64; 5] {
        let st = self.stencil(i, j);
        let mut out = [0.0; 5];
        for k in 0..9 {
            let (di, dj) = Stencil::offset(k);
            let v = u[self.idx((i as isize + di) as usize, (j as isize + dj) as usize)];
            out[0] += st.dx1[k] * v;
            out[1] += st.dx2[k] * v;
            out[2] += st.dx1x1[k] * v;
            out[3] += st.dx1x2[k] * v;
            out[4] += st.dx2x2[k] * v;
        }
        out
    }

    fn d_zeta(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let v = |jj: usize| u[self.idx(i, jj)];
        if j == 0 {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * self.dzeta)
        } else if j == self.nz - 1 {
            (3.0 * v(j) - 4.0 * v(j - 1) + v(j - 2)) / (2.0 * self.dzeta)
        } else {
            (v(j + 1) - v(j - 1)) / (2.0 * self.dzeta)
        }
    }

    fn d_xi(&self, u: &[f64], i: usize, j: usize, side: Option<Side>) -> f64 {
        let v = |ii: usize| u[self.idx(ii, j)];
        let backward = |i: usize| (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * self.dxi);
        let forward = |i: usize| (-3.0 * v(i) + 4.0 * v(i + 1) - v(i + 2)) / (2.0 * self.dxi);
        match side {
            Some(Side::Left) => backward(i),
            Some(Side::Right) => forward(i),
            None if i == 0 => forward(i),
            None if i == self.nx - 1 => backward(i),
            None => (v(i + 1) - v(i - 1)) / (2.0 * self.dxi),
        }
    }

    /// Physical gradient at any node: stencils inside, second-order
    /// one-sided differences on the boundary, and the mean of the left and
    /// right one-sided values on boundary nodes of kink columns.
    pub fn gradient(&self, u: &[f64], i: usize, j: usize) -> [f64; 2] {
        if !self.is_boundary(i, j) {
            let d = self.derivatives(u, i, j);
            return [d[0], d[1]];
        }
        let u_zeta = self.d_zeta(u, i, j);
        let xi = self.xi(i);
        let zeta = self.zeta(j);
        if self.is_kink_column(i) {
            let mut g = [0.0; 2];
            for side in [Side::Left, Side::Right] {
                let m = self.map_derivatives(xi, zeta, side).inverse();
                let u_xi = self.d_xi(u, i, j, Some(side));
                g[0] += 0.5 * (u_xi + m.zeta_x1 * u_zeta);
                g[1] += 0.5 * m.zeta_x2 * u_zeta;
            }
            return g;
        }
        let m = &self.metrics[self.idx(i, j)];
        let u_xi = self.d_xi(u, i, j, None);
        [u_xi + m.zeta_x1 * u_zeta, m.zeta_x2 * u_zeta]
    }

    /// Gradient at every node.
    pub fn gradient_field(&self, u: &[f64]) -> Vec<[f64; 2]> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.ij(k);
                self.gradient(u, i, j)
            })
            .collect()
    }

    /// Bilinear interpolation of a node field at computational coordinates.
    pub fn interpolate<T>(&self, field: &[T], xi: f64, zeta: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let fx = ((xi - self.x_min) / self.dxi).clamp(0.0, (self.nx - 1) as f64);
        let fz = (zeta / self.dzeta).clamp(0.0, (self.nz - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fz.floor() as usize).min(self.nz - 2);
        let (a, b) = (fx - i as f64, fz - j as f64);
        field[self.idx(i, j)] * ((1.0 - a) * (1.0 - b))
            + field[self.idx(i + 1, j)] * (a * (1.0 - b))
            + field[self.idx(i, j + 1)] * ((1.0 - a) * b)
            + field[self.idx(i + 1, j + 1)] * (a * b)
    }

    /// Physical coordinates of every node as two flat arrays.
    pub fn coordinates(&self) -> (Vec<f64>, Vec<f64>) {
        self.nodes.iter().map(|p| (p[0], p[1])).unzip()
    }
}
