//! Hyperboloid-model numerics for the plane of curvature `-kappa` and the
//! right-angled equilateral hexagon of side length 1 tiling it.
//!
//! Points live on the upper sheet of the hyperboloid `<x,x> = -1/kappa` in
//! Minkowski signature `(-,+,+)`. The hyperboloid model is used (rather than
//! a disk model) because `arccosh` of large inner products stays log-scale
//! stable for long-range distances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numeric failures of the hyperbolic layer.
#[derive(Debug, Error, PartialEq)]
pub enum HexError {
    #[error("root finding for the hexagon identity did not converge")]
    NoConvergence,
    #[error("inner product {0} outside the distance domain")]
    Domain(f64),
    #[error("coordinates overflowed double precision")]
    Overflow,
}

/// Minkowski inner product with signature `(-,+,+)`.
#[inline]
pub fn mdot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A point on the upper sheet of the hyperboloid for curvature `-kappa`,
/// scaled so that the Minkowski self-product is `-1/kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint(pub [f64; 3]);

impl HPoint {
    /// Rescales a timelike vector onto the sheet.
    pub fn normalize(v: [f64; 3], kappa: f64) -> Result<HPoint, HexError> {
        let q = -mdot(&v, &v);
        if !(q > 0.0) || v[0] <= 0.0 {
            return Err(HexError::Domain(q));
        }
        let c = (kappa * q).sqrt();
        Ok(HPoint([v[0] / c, v[1] / c, v[2] / c]))
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }
}

/// A 3x3 Minkowski-orthogonal matrix preserving the upper sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HIsometry(pub [[f64; 3]; 3]);

impl HIsometry {
    pub const IDENTITY: HIsometry = HIsometry([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Reflection in the geodesic spanned by `a` and `b`.
    ///
    /// The geodesic through two sheet points is the sheet section of the
    /// timelike plane spanned by them; the reflection is the Minkowski
    /// reflection in that plane, `x - 2<x,n>/<n,n> n`, with `n` the
    /// spacelike normal `J(a x b)`.
    pub fn reflection(a: &HPoint, b: &HPoint) -> HIsometry {
        let n = plane_normal(a, b);
        let nn = mdot(&n, &n);
        let mut m = [[0.0; 3]; 3];
        // I - 2 n n^T J / <n,n>  (J = diag(-1,1,1))
        for r in 0..3 {
            for c in 0..3 {
                let jn = if c == 0 { -n[c] } else { n[c] };
                m[r][c] = if r == c { 1.0 } else { 0.0 };
                m[r][c] -= 2.0 * n[r] * jn / nn;
            }
        }
        HIsometry(m)
    }

    pub fn apply(&self, p: &HPoint) -> HPoint {
        let v = self.apply_vec(&p.0);
        HPoint(v)
    }

    pub fn apply_vec(&self, x: &[f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
            m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
            m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2],
        ]
    }

    pub fn compose(&self, other: &HIsometry) -> HIsometry {
        let (a, b) = (&self.0, &other.0);
        let mut m = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c];
            }
        }
        HIsometry(m)
    }

    /// Largest deviation of `M^T J M` from `J`; 0 for an exact isometry.
    pub fn form_defect(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let mut s = -m[0][r] * m[0][c] + m[1][r] * m[1][c] + m[2][r] * m[2][c];
                if r == c {
                    s -= if r == 0 { -1.0 } else { 1.0 };
                }
                worst = worst.max(s.abs());
            }
        }
        worst
    }

    pub fn preserves_sheet(&self) -> bool {
        self.0[0][0] > 0.0
    }
}

/// Spacelike Minkowski normal of the plane through the origin spanned by two
/// sheet points: `J (a x b)` for the Euclidean cross product.
pub fn plane_normal(a: &HPoint, b: &HPoint) -> [f64; 3] {
    let (a, b) = (&a.0, &b.0);
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    [-cross[0], cross[1], cross[2]]
}

/// The hexagon geometry: curvature, vertices, marked-side reflections and the
/// constants `rho` and `delta` used by the covering bounds.
#[derive(Debug, Clone)]
pub struct HexagonGeometry {
    pub kappa: f64,
    pub side_length: f64,
    /// Six vertices in counterclockwise order, vertex 0 on the positive
    /// x1-axis. Side `i` joins vertices `i` and `i+1 (mod 6)`.
    pub vertices: [HPoint; 6],
    /// Alternating side indices carrying reflections: 0, 2, 4.
    pub marked_sides: [usize; 3],
    /// Distance between midpoints of two sides sharing a common adjacent side.
    pub rho: f64,
    /// Diameter of the hexagon.
    pub delta: f64,
    /// Reflections in the marked sides, indexed by letter: letter `i`
    /// reflects in side `2i`.
    pub reflections: [HIsometry; 3],
    /// Outward unit normals of the six side geodesics.
    pub side_normals: [[f64; 3]; 6],
}

/// Equilateral right-angled hexagon identity in curvature -1, all sides `s`:
/// `cosh s = sinh^2 s cosh s - cosh^2 s`. Vanishes exactly at `cosh s = 2`.
fn hexagon_identity(s: f64) -> f64 {
    let (sh, ch) = (s.sinh(), s.cosh());
    sh * sh * ch - ch * ch - ch
}

impl HexagonGeometry {
    /// Solves for the unique geometry with side length 1.
    ///
    /// The curvature-(-1) side length is found by bisection on the hexagon
    /// identity to 1e-12, giving `kappa` as its square; vertices are placed
    /// at circumradius `arccosh(sqrt(3))` around the sheet apex.
    pub fn solve() -> Result<HexagonGeometry, HexError> {
        // bisect until the midpoint collapses onto an endpoint, i.e. to the
        // last representable bit (well past the 1e-12 requirement)
        let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
        if !(hexagon_identity(lo) < 0.0 && hexagon_identity(hi) > 0.0) {
            return Err(HexError::NoConvergence);
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hexagon_identity(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s1 = 0.5 * (lo + hi);
        if (s1.cosh() - 2.0).abs() > 1e-12 {
            return Err(HexError::NoConvergence);
        }
        let kappa = s1 * s1;
        let rk = s1; // sqrt(kappa)

        // Regular hexagon with vertex angle pi/2 in curvature -1:
        // circumradius arccosh(sqrt(3)) from the angle form of the law of
        // cosines, so cosh = sqrt(3) and sinh = sqrt(2) exactly. The
        // sixth-turn sines and cosines are also exact, which keeps the
        // vertex table at machine precision: reflection words amplify any
        // defect in the base data exponentially with displacement.
        let chr = 3.0_f64.sqrt();
        let shr = 2.0_f64.sqrt();
        let half_sqrt3 = 3.0_f64.sqrt() / 2.0;
        let turns: [(f64, f64); 6] = [
            (1.0, 0.0),
            (0.5, half_sqrt3),
            (-0.5, half_sqrt3),
            (-1.0, 0.0),
            (-0.5, -half_sqrt3),
            (0.5, -half_sqrt3),
        ];
        let mut vertices = [HPoint([0.0; 3]); 6];
        for (k, v) in vertices.iter_mut().enumerate() {
            let (c, s) = turns[k];
            *v = HPoint([chr / rk, shr * c / rk, shr * s / rk]);
        }

        let reflections = [
            HIsometry::reflection(&vertices[0], &vertices[1]),
            HIsometry::reflection(&vertices[2], &vertices[3]),
            HIsometry::reflection(&vertices[4], &vertices[5]),
        ];

        let mut side_normals = [[0.0; 3]; 6];
        let center = HPoint::normalize([1.0, 0.0, 0.0], kappa)?;
        for i in 0..6 {
            let mut n = plane_normal(&vertices[i], &vertices[(i + 1) % 6]);
            let nn = mdot(&n, &n).sqrt();
            for c in &mut n {
                *c /= nn;
            }
            // orient outward: negative at the center
            if mdot(&n, &center.0) > 0.0 {
                for c in &mut n {
                    *c = -*c;
                }
            }
            side_normals[i] = n;
        }

        let geo = HexagonGeometry {
            kappa,
            side_length: 1.0,
            vertices,
            marked_sides: [0, 2, 4],
            rho: 0.0,
            delta: 0.0,
            reflections,
            side_normals,
        };

        // rho: midpoints of sides 0 and 2 (common adjacent side 1);
        // delta: the hexagon is convex, so the diameter is attained at
        // vertices; take the max over the 15 pairs.
        let m0 = geo.geodesic_point(&vertices[0], &vertices[1], 0.5)?;
        let m2 = geo.geodesic_point(&vertices[2], &vertices[3], 0.5)?;
        let rho = geo.distance(&m0, &m2)?;
        let mut delta: f64 = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                delta = delta.max(geo.distance(&vertices[i], &vertices[j])?);
            }
        }
        Ok(HexagonGeometry { rho, delta, ..geo })
    }

    /// Distance `(1/sqrt(kappa)) arccosh(-kappa <a,b>)`.
    ///
    /// Near-coincident points go through the chordal form
    /// `2 asinh(sqrt(kappa <a-b,a-b>)/2)` (no `acosh` cancellation at 0);
    /// at range the inner-product form is used, where the chord would
    /// cancel catastrophically. Both are accurate at the switch.
    pub fn distance(&self, a: &HPoint, b: &HPoint) -> Result<f64, HexError> {
        let ip = -self.kappa * mdot(&a.0, &b.0);
        if !ip.is_finite() {
            return Err(HexError::Overflow);
        }
        let rk = self.kappa.sqrt();
        if ip >= 1.0 + 1e-4 {
            return Ok(ip.acosh() / rk);
        }
        if ip < 1.0 - 1e-9 {
            return Err(HexError::Domain(ip));
        }
        let diff = [a.0[0] - b.0[0], a.0[1] - b.0[1], a.0[2] - b.0[2]];
        let q = mdot(&diff, &diff).max(0.0);
        Ok(2.0 * ((rk * q.sqrt()) / 2.0).asinh() / rk)
    }

    /// The point at parameter `t in [0,1]` on the geodesic from `a` to `b`.
    pub fn geodesic_point(&self, a: &HPoint, b: &HPoint, t: f64) -> Result<HPoint, HexError> {
        let d = self.distance(a, b)?;
        if d == 0.0 {
            return Ok(*a);
        }
        let d1 = d * self.kappa.sqrt(); // curvature -1 arclength
        let (wa, wb) = (((1.0 - t) * d1).sinh(), (t * d1).sinh());
        let s = d1.sinh();
        let v = [
            (wa * a.0[0] + wb * b.0[0]) / s,
            (wa * a.0[1] + wb * b.0[1]) / s,
            (wa * a.0[2] + wb * b.0[2]) / s,
        ];
        HPoint::normalize(v, self.kappa)
    }

    /// Hyperbolic midpoint.
    pub fn midpoint(&self, a: &HPoint, b: &HPoint) -> Result<HPoint, HexError> {
        self.geodesic_point(a, b, 0.5)
    }

    /// Signed distance of `p` to the oriented geodesic with unit normal `n`
    /// (positive on the side `n` points to).
    pub fn signed_line_distance(&self, p: &HPoint, n: &[f64; 3]) -> f64 {
        let rk = self.kappa.sqrt();
        (rk * mdot(&p.0, n)).asinh() / rk
    }

    /// Projection of `p` onto the geodesic with unit normal `n`: drop the
    /// normal component and renormalize onto the sheet.
    pub fn project_to_line(&self, p: &HPoint, n: &[f64; 3]) -> Result<HPoint, HexError> {
        let t = mdot(&p.0, n);
        let v = [p.0[0] - t * n[0], p.0[1] - t * n[1], p.0[2] - t * n[2]];
        HPoint::normalize(v, self.kappa)
    }

    /// Distance from `p` to the geodesic with unit normal `n`.
    pub fn line_distance(&self, p: &HPoint, n: &[f64; 3]) -> f64 {
        self.signed_line_distance(p, n).abs()
    }

    /// Distance between two disjoint geodesics given by unit normals;
    /// 0 if they meet.
    pub fn line_line_distance(&self, n1: &[f64; 3], n2: &[f64; 3]) -> f64 {
        let ip = mdot(n1, n2).abs();
        if ip <= 1.0 {
            0.0
        } else {
            ip.acosh() / self.kappa.sqrt()
        }
    }

    /// True if `p` lies in the closed base hexagon within `tol`.
    pub fn contains(&self, p: &HPoint, tol: f64) -> bool {
        self.side_normals
            .iter()
            .all(|n| self.signed_line_distance(p, n) <= tol)
    }

    /// Projection of an exterior point onto the closed base hexagon: the
    /// nearest of the six side-segment projections, or `p` itself if inside.
    pub fn project_to_hexagon(&self, p: &HPoint) -> Result<(HPoint, f64), HexError> {
        if self.contains(p, 1e-12) {
            return Ok((*p, 0.0));
        }
        let mut best: Option<(HPoint, f64)> = None;
        for i in 0..6 {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % 6];
            let q = self.project_to_segment(p, a, b)?;
            let d = self.distance(p, &q)?;
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((q, d));
            }
        }
        Ok(best.unwrap())
    }

    /// Projection of `p` onto the geodesic segment `[a,b]`.
    pub fn project_to_segment(&self, p: &HPoint, a: &HPoint, b: &HPoint) -> Result<HPoint, HexError> {
        let mut n = plane_normal(a, b);
        let nn = mdot(&n, &n).sqrt();
        for c in &mut n {
            *c /= nn;
        }
        let q = self.project_to_line(p, &n)?;
        let dab = self.distance(a, b)?;
        let (da, db) = (self.distance(a, &q)?, self.distance(b, &q)?);
        if da <= dab + 1e-12 && db <= dab + 1e-12 {
            return Ok(q);
        }
        Ok(if da < db { *a } else { *b })
    }

    /// The barycentric-style point `normalize(sum w_i v_i)`; nonnegative
    /// weights land inside the hexagon.
    pub fn barycentric(&self, w: &[f64; 6]) -> Result<HPoint, HexError> {
        let mut v = [0.0; 3];
        for (wi, p) in w.iter().zip(self.vertices.iter()) {
            v[0] += wi * p.0[0];
            v[1] += wi * p.0[1];
            v[2] += wi * p.0[2];
        }
        HPoint::normalize(v, self.kappa)
    }

    pub fn center(&self) -> HPoint {
        HPoint::normalize([1.0, 0.0, 0.0], self.kappa).expect("apex is timelike")
    }
}
