//! The surface `H0` tiled by right-angled hexagons (the orbit of the base
//! hexagon under reflections in its three marked sides), its dual trivalent
//! tree `T0`, boundary lines, and exact plus bounded distances.
//!
//! Hexagons are never enumerated in bulk: the space is addressed lazily by
//! reduced words over the three reflection letters, and every query is
//! path-local on addresses. All metric evaluation is frame-relative: a
//! distance is computed in the chart of one of its endpoints, because
//! absolute coordinates lose all precision to cancellation once points sit
//! far from the frame origin.

use crate::hex::{HexError, HexagonGeometry, HIsometry, HPoint};
use crate::util::golden_min;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThetaError {
    #[error("invalid address: {0}")]
    BadAddress(String),
    #[error("invalid side index {0} (expected 1, 3, or 5)")]
    BadSide(usize),
    #[error("tree distance {0} exceeds the stability horizon {1}")]
    HorizonExceeded(usize, usize),
    #[error("point does not lie on the requested line")]
    NotOnLine,
    #[error("point lies outside the hexagon surface")]
    OutsideSurface,
    #[error(transparent)]
    Hex(#[from] HexError),
}

/// Address of a hexagon: a reduced word over the reflection letters
/// `{0,1,2}` (letter `i` reflects in marked side `2i`); the empty word is
/// the base hexagon. Ordered by `(length, lexicographic)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct HexAddress(Vec<u8>);

impl PartialOrd for HexAddress {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HexAddress {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cmp_canonical(other)
    }
}

impl HexAddress {
    pub const ROOT: HexAddress = HexAddress(Vec::new());

    pub fn new(letters: Vec<u8>) -> Result<HexAddress, ThetaError> {
        if letters.iter().any(|&l| l > 2) {
            return Err(ThetaError::BadAddress("letter out of range".into()));
        }
        if letters.windows(2).any(|w| w[0] == w[1]) {
            return Err(ThetaError::BadAddress("word not reduced".into()));
        }
        Ok(HexAddress(letters))
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    pub fn parent(&self) -> Option<HexAddress> {
        if self.0.is_empty() {
            None
        } else {
            Some(HexAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Appends one letter with cancellation.
    pub fn step(&self, letter: u8) -> HexAddress {
        debug_assert!(letter <= 2);
        let mut w = self.0.clone();
        if w.last() == Some(&letter) {
            w.pop();
        } else {
            w.push(letter);
        }
        HexAddress(w)
    }

    /// Group-concatenation `self * word` with full reduction at the seam.
    pub fn concat(&self, word: &[u8]) -> HexAddress {
        let mut w = self.0.clone();
        for &l in word {
            if w.last() == Some(&l) {
                w.pop();
            } else {
                w.push(l);
            }
        }
        HexAddress(w)
    }

    fn lcp_len(&self, other: &HexAddress) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Word-metric tree distance in `T0`.
    pub fn tree_dist(&self, other: &HexAddress) -> usize {
        let l = self.lcp_len(other);
        (self.0.len() - l) + (other.0.len() - l)
    }

    /// The geodesic word from `self` to `other` (reversed own suffix, then
    /// the other's suffix past the common prefix).
    pub fn rel_word(&self, other: &HexAddress) -> Vec<u8> {
        let l = self.lcp_len(other);
        let mut w: Vec<u8> = self.0[l..].iter().rev().copied().collect();
        w.extend_from_slice(&other.0[l..]);
        w
    }

    /// Vertex at distance `t` from `self` on the geodesic to `other`.
    pub fn path_point(&self, other: &HexAddress, t: usize) -> HexAddress {
        debug_assert!(t <= self.tree_dist(other));
        let l = self.lcp_len(other);
        let up = self.0.len() - l;
        if t <= up {
            HexAddress(self.0[..self.0.len() - t].to_vec())
        } else {
            HexAddress(other.0[..l + (t - up)].to_vec())
        }
    }

    /// True if `x` lies on the geodesic segment `[self, other]`.
    pub fn on_path(&self, other: &HexAddress, x: &HexAddress) -> bool {
        self.tree_dist(x) + x.tree_dist(other) == self.tree_dist(other)
    }

    /// The median vertex of the three pairwise geodesics.
    pub fn tripod_meet(a: &HexAddress, b: &HexAddress, c: &HexAddress) -> HexAddress {
        let (ab, ac, bc) = (a.lcp_len(b), a.lcp_len(c), b.lcp_len(c));
        let m = ab.max(ac).max(bc);
        if ab == m {
            HexAddress(a.0[..ab].to_vec())
        } else if ac == m {
            HexAddress(a.0[..ac].to_vec())
        } else {
            HexAddress(b.0[..bc].to_vec())
        }
    }

    /// `(length, lexicographic)` ordering key comparison.
    pub fn cmp_canonical(&self, other: &HexAddress) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for HexAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.0 {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for HexAddress {
    type Err = ThetaError;

    /// Parses the dot-separated syntax `"0.1.2"`; the empty string is the
    /// base hexagon.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(HexAddress::ROOT);
        }
        if s.len() > 100_000 {
            return Err(ThetaError::BadAddress("address too long".into()));
        }
        let mut letters = Vec::new();
        for part in s.split('.') {
            match part {
                "0" => letters.push(0),
                "1" => letters.push(1),
                "2" => letters.push(2),
                _ => return Err(ThetaError::BadAddress(format!("bad letter {part:?}"))),
            }
        }
        HexAddress::new(letters)
    }
}

impl Serialize for HexAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HexAddress {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The two letters whose marked sides cross the given unmarked side, sorted.
pub fn side_letters(side: usize) -> Result<(u8, u8), ThetaError> {
    match side {
        1 => Ok((0, 1)),
        3 => Ok((1, 2)),
        5 => Ok((0, 2)),
        _ => Err(ThetaError::BadSide(side)),
    }
}

/// Local hexagon vertex shared by unmarked side `side` and the marked side
/// of `letter`.
fn vertex_for(side: usize, letter: u8) -> usize {
    match (side, letter) {
        (1, 0) => 1,
        (1, 1) => 2,
        (3, 1) => 3,
        (3, 2) => 4,
        (5, 0) => 0,
        (5, 2) => 5,
        _ => unreachable!("vertex_for({side},{letter})"),
    }
}

/// A boundary geodesic of the surface, in canonical form: the anchor is the
/// `(length, lex)`-least hexagon whose unmarked side `side` lies on the
/// line. Hexagons along the line are exactly `anchor * v` for alternating
/// words `v` in the side's letter pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryLineRef {
    pub anchor: HexAddress,
    pub side: usize,
}

impl BoundaryLineRef {
    /// Canonicalizes an arbitrary `(hexagon, unmarked side)` incidence.
    pub fn new(hexagon: &HexAddress, side: usize) -> Result<BoundaryLineRef, ThetaError> {
        let (a, b) = side_letters(side)?;
        let w = hexagon.letters();
        let mut cut = w.len();
        while cut > 0 && (w[cut - 1] == a || w[cut - 1] == b) {
            cut -= 1;
        }
        Ok(BoundaryLineRef {
            anchor: HexAddress(w[..cut].to_vec()),
            side,
        })
    }

    pub fn letters(&self) -> (u8, u8) {
        side_letters(self.side).expect("side validated at construction")
    }

    /// Hexagon at integer line coordinate `c` (its boundary segment is
    /// `[c, c+1]`). Coordinates increase away from the anchor's
    /// lower-letter neighbor.
    pub fn vertex_at(&self, c: i64) -> HexAddress {
        let (a, b) = self.letters();
        let (start, n) = if c >= 0 { (b, c as usize) } else { (a, (-c) as usize) };
        let other = |l: u8| if l == a { b } else { a };
        let mut word = Vec::with_capacity(n);
        let mut l = start;
        for _ in 0..n {
            word.push(l);
            l = other(l);
        }
        self.anchor.concat(&word)
    }

    /// Inverse of `vertex_at`, or `None` if the hexagon is off the line.
    pub fn coord_of(&self, hexagon: &HexAddress) -> Option<i64> {
        let (a, b) = self.letters();
        let w = hexagon.letters();
        let anchor = self.anchor.letters();
        if w.len() < anchor.len() || &w[..anchor.len()] != anchor {
            return if hexagon == &self.anchor { Some(0) } else { None };
        }
        let run = &w[anchor.len()..];
        if run.iter().any(|&l| l != a && l != b) {
            return None;
        }
        match run.first() {
            None => Some(0),
            Some(&l) if l == b => Some(run.len() as i64),
            _ => Some(-(run.len() as i64)),
        }
    }

    pub fn contains_vertex(&self, hexagon: &HexAddress) -> bool {
        self.coord_of(hexagon).is_some()
    }

    /// Nearest line vertex to `p` and the distance to it.
    pub fn nearest_vertex(&self, p: &HexAddress) -> (HexAddress, usize) {
        let (a, b) = self.letters();
        let w = p.letters();
        let anchor = self.anchor.letters();
        if w.len() >= anchor.len() && &w[..anchor.len()] == anchor {
            let rest = &w[anchor.len()..];
            let j = rest.iter().take_while(|&&l| l == a || l == b).count();
            let near = HexAddress(w[..anchor.len() + j].to_vec());
            (near, rest.len() - j)
        } else {
            let n = p.tree_dist(&self.anchor);
            (self.anchor.clone(), n)
        }
    }

    /// Local vertex indices `(at coord q, at coord q+1)` of the segment of
    /// the hexagon at coordinate `q`.
    pub fn segment_vertex_indices(&self, q: i64) -> (usize, usize) {
        let (a, b) = self.letters();
        let h = self.vertex_at(q);
        let lower_letter = if q > 0 {
            h.last().expect("positive coordinate has letters")
        } else if q < 0 {
            let last = h.last().expect("negative coordinate has letters");
            if last == a {
                b
            } else {
                a
            }
        } else {
            a
        };
        let upper_letter = if lower_letter == a { b } else { a };
        (vertex_for(self.side, lower_letter), vertex_for(self.side, upper_letter))
    }
}

impl fmt::Display for BoundaryLineRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.anchor, self.side)
    }
}

/// A point of the line factor: `t` with its unit segment `[q, q+1]`,
/// `q = floor(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealFactorPoint {
    pub t: f64,
}

impl RealFactorPoint {
    pub fn segment(&self) -> i64 {
        self.t.floor() as i64
    }

    /// Segment vertices containing `t` (two at integer `t`).
    pub fn segments(&self) -> Vec<i64> {
        let q = self.t.floor() as i64;
        if self.t == self.t.floor() {
            vec![q - 1, q]
        } else {
            vec![q]
        }
    }
}

/// A point of the hexagon surface: an address plus a local point expressed
/// in the base-hexagon frame (the global point is the address isometry
/// applied to it).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPoint {
    pub hex: HexAddress,
    pub local: HPoint,
}

/// Shared context: hexagon geometry, memoized relative isometries, and the
/// stability horizon for exact evaluation.
pub struct ThetaGeometry {
    pub hexagon: HexagonGeometry,
    pub horizon: usize,
    rel_cache: RwLock<HashMap<(Vec<u8>, Vec<u8>), HIsometry>>,
}

/// Spans up to this many tree steps use direct geodesic interpolation; the
/// position error of a directly interpolated point grows exponentially with
/// its distance from the evaluation frame, so longer geodesics are split
/// recursively at portal sides.
const DIRECT_SPAN: usize = 16;

impl ThetaGeometry {
    pub fn new() -> Result<ThetaGeometry, ThetaError> {
        Ok(ThetaGeometry {
            hexagon: HexagonGeometry::solve()?,
            horizon: 400,
            rel_cache: RwLock::new(HashMap::new()),
        })
    }

    /// The chart-change isometry: expresses points of `target`'s chart in
    /// `frame`'s chart (the product of reflections along the tree path).
    pub fn rel_isometry(&self, frame: &HexAddress, target: &HexAddress) -> HIsometry {
        if frame == target {
            return HIsometry::IDENTITY;
        }
        let key = (frame.letters().to_vec(), target.letters().to_vec());
        if let Some(m) = self.rel_cache.read().unwrap().get(&key) {
            return *m;
        }
        let mut iso = HIsometry::IDENTITY;
        for &l in frame.rel_word(target).iter() {
            iso = iso.compose(&self.hexagon.reflections[l as usize]);
        }
        let mut cache = self.rel_cache.write().unwrap();
        if cache.len() >= 4_000_000 {
            cache.clear();
        }
        cache.insert(key, iso);
        iso
    }

    /// The point of `p` expressed in the chart of `frame`.
    pub fn point_in_frame(&self, frame: &HexAddress, p: &ThetaPoint) -> HPoint {
        self.rel_isometry(frame, &p.hex).apply(&p.local)
    }

    /// Base-chart (root-frame) coordinates. Only meaningful for points a
    /// short tree distance from the base hexagon.
    pub fn global(&self, p: &ThetaPoint) -> HPoint {
        self.point_in_frame(&HexAddress::ROOT, p)
    }

    /// The isometry taking the base hexagon chart to the addressed one.
    pub fn isometry(&self, addr: &HexAddress) -> HIsometry {
        self.rel_isometry(&HexAddress::ROOT, addr)
    }

    /// Exact distance in the surface metric (the restriction of the ambient
    /// hyperbolic metric; the surface is convex). Evaluated in the chart of
    /// `x`, which keeps the result accurate at any span below the horizon.
    pub fn distance(&self, x: &ThetaPoint, y: &ThetaPoint) -> Result<f64, ThetaError> {
        let td = x.hex.tree_dist(&y.hex);
        if td > self.horizon {
            return Err(ThetaError::HorizonExceeded(td, self.horizon));
        }
        let yg = self.point_in_frame(&x.hex, y);
        Ok(self.hexagon.distance(&x.local, &yg)?)
    }

    /// Sandwich bounds for any two points of the addressed hexagons:
    /// `m-1 <= d <= (m-1) rho + 2 delta` at tree distance `m >= 1`, and
    /// `(0, delta)` within one hexagon.
    pub fn distance_bounds(&self, p: &HexAddress, q: &HexAddress) -> (f64, f64) {
        let m = p.tree_dist(q);
        if m == 0 {
            (0.0, self.hexagon.delta)
        } else {
            (
                (m - 1) as f64,
                (m - 1) as f64 * self.hexagon.rho + 2.0 * self.hexagon.delta,
            )
        }
    }

    /// Endpoints of the line segment at coordinate `q`, expressed in the
    /// chart of `frame`: `(point at q, point at q+1)`.
    pub fn segment_endpoints_in(
        &self,
        line: &BoundaryLineRef,
        q: i64,
        frame: &HexAddress,
    ) -> (HPoint, HPoint) {
        let h = line.vertex_at(q);
        let (lo, hi) = line.segment_vertex_indices(q);
        let r = self.rel_isometry(frame, &h);
        (
            r.apply(&self.hexagon.vertices[lo]),
            r.apply(&self.hexagon.vertices[hi]),
        )
    }

    /// The surface point at arclength coordinate `c` on a line; ties at
    /// integers resolve into the segment `[floor(c), floor(c)+1]`.
    pub fn point_on_line(&self, line: &BoundaryLineRef, c: f64) -> Result<ThetaPoint, ThetaError> {
        let q = c.floor() as i64;
        let frac = c - q as f64;
        let hex = line.vertex_at(q);
        let (lo, hi) = line.segment_vertex_indices(q);
        let local = self.hexagon.geodesic_point(
            &self.hexagon.vertices[lo],
            &self.hexagon.vertices[hi],
            frac,
        )?;
        Ok(ThetaPoint { hex, local })
    }

    /// Arclength coordinate of a surface point lying on the line.
    pub fn line_coord(&self, line: &BoundaryLineRef, p: &ThetaPoint) -> Result<f64, ThetaError> {
        let q = line.coord_of(&p.hex).ok_or(ThetaError::NotOnLine)?;
        let (lo, _) = line.segment_vertex_indices(q);
        let d = self.hexagon.distance(&self.hexagon.vertices[lo], &p.local)?;
        Ok(q as f64 + d.clamp(0.0, 1.0))
    }

    /// Orthogonal projection of `p` onto a line's geodesic, re-anchored at
    /// the nearest line hexagon for numerical stability. Returns the
    /// arclength coordinate of the projection and the distance to the line.
    pub fn project_to_line(
        &self,
        line: &BoundaryLineRef,
        p: &ThetaPoint,
    ) -> Result<(f64, f64), ThetaError> {
        let (near, _) = line.nearest_vertex(&p.hex);
        let q0 = line.coord_of(&near).expect("nearest vertex lies on the line");
        let (lo, hi) = line.segment_vertex_indices(q0);
        let (v_lo, v_hi) = (&self.hexagon.vertices[lo], &self.hexagon.vertices[hi]);
        let pg = self.point_in_frame(&near, p);
        let mut n = crate::hex::plane_normal(v_lo, v_hi);
        let nn = crate::hex::mdot(&n, &n).sqrt();
        for c in &mut n {
            *c /= nn;
        }
        let dist = self.hexagon.line_distance(&pg, &n);
        let proj = self.hexagon.project_to_line(&pg, &n)?;
        let d0 = self.hexagon.distance(&proj, v_lo)?;
        let d1 = self.hexagon.distance(&proj, v_hi)?;
        let coord = if d1 >= d0 + 1.0 - 1e-9 {
            q0 as f64 - d0
        } else {
            q0 as f64 + d0
        };
        Ok((coord, dist))
    }

    /// Distance from a surface point to a boundary line.
    pub fn distance_to_line(&self, line: &BoundaryLineRef, p: &ThetaPoint) -> Result<f64, ThetaError> {
        Ok(self.project_to_line(line, p)?.1)
    }

    /// Distance between two boundary lines (0 if they meet). Evaluated in a
    /// chart near both lines' closest approach.
    pub fn line_pair_distance(&self, l1: &BoundaryLineRef, l2: &BoundaryLineRef) -> f64 {
        // anchor the computation where the two lines come nearest in the tree
        let (h1, _) = l1.nearest_vertex(&l2.anchor);
        let (h2, _) = l2.nearest_vertex(&h1);
        let (h1, _) = l1.nearest_vertex(&h2);
        let q1 = l1.coord_of(&h1).expect("on line");
        let q2 = l2.coord_of(&h2).expect("on line");
        let (a1, b1) = self.segment_endpoints_in(l1, q1, &h1);
        let (a2, b2) = self.segment_endpoints_in(l2, q2, &h1);
        let unit = |mut n: [f64; 3]| {
            let nn = crate::hex::mdot(&n, &n).sqrt();
            for c in &mut n {
                *c /= nn;
            }
            n
        };
        let n1 = unit(crate::hex::plane_normal(&a1, &b1));
        let n2 = unit(crate::hex::plane_normal(&a2, &b2));
        self.hexagon.line_line_distance(&n1, &n2)
    }

    /// All chart representations of a surface point (two when it lies on a
    /// shared marked side within `tol`), canonical first.
    pub fn representations(&self, p: &ThetaPoint, tol: f64) -> Vec<ThetaPoint> {
        let mut reps = vec![p.clone()];
        for letter in 0..3u8 {
            let n = &self.hexagon.side_normals[2 * letter as usize];
            if self.hexagon.signed_line_distance(&p.local, n).abs() <= tol {
                let hex = p.hex.step(letter);
                let local = self.hexagon.reflections[letter as usize].apply(&p.local);
                reps.push(ThetaPoint { hex, local });
            }
        }
        reps.sort_by(|x, y| x.hex.cmp_canonical(&y.hex));
        reps
    }

    /// Canonical representation: least address among the charts containing
    /// the point.
    pub fn canonicalize(&self, p: &ThetaPoint) -> ThetaPoint {
        self.representations(p, 1e-9).remove(0)
    }

    /// Locates the hexagon containing a point expressed in the chart of
    /// `frame`, walking the tiling from `hint`. Fails if the point is
    /// outside the surface by more than `tol`. Precision degrades with the
    /// point's distance from `frame`; keep spans short.
    pub fn locate(
        &self,
        frame: &HexAddress,
        point: &HPoint,
        hint: &HexAddress,
        tol: f64,
    ) -> Result<ThetaPoint, ThetaError> {
        let mut cur = hint.clone();
        let mut local = self.rel_isometry(hint, frame).apply(point);
        for _ in 0..=self.horizon {
            let mut worst = (f64::NEG_INFINITY, 0usize);
            for (i, n) in self.hexagon.side_normals.iter().enumerate() {
                let s = self.hexagon.signed_line_distance(&local, n);
                if s > worst.0 {
                    worst = (s, i);
                }
            }
            if worst.0 <= tol {
                return Ok(self.canonicalize(&ThetaPoint { hex: cur, local }));
            }
            if worst.1 % 2 != 0 {
                // most-violated side is unmarked: nothing glued beyond it
                return Err(ThetaError::OutsideSurface);
            }
            let letter = (worst.1 / 2) as u8;
            cur = cur.step(letter);
            local = self.hexagon.reflections[letter as usize].apply(&local);
        }
        Err(ThetaError::HorizonExceeded(self.horizon, self.horizon))
    }

    /// The point at arclength `t` from `x` on the geodesic `[x, y]`. Short
    /// spans interpolate directly; long ones split at the marked side in
    /// the middle of the hexagon chain (the chain union is convex, so the
    /// geodesic crosses it) and recurse, which keeps every numeric step
    /// local to its own chart.
    pub fn geodesic_point_at(
        &self,
        x: &ThetaPoint,
        y: &ThetaPoint,
        t: f64,
    ) -> Result<ThetaPoint, ThetaError> {
        let d = self.distance(x, y)?;
        let t = t.clamp(0.0, d);
        let span = x.hex.tree_dist(&y.hex);
        if span <= DIRECT_SPAN {
            if d < 1e-15 {
                return Ok(x.clone());
            }
            let yg = self.point_in_frame(&x.hex, y);
            let m = self.hexagon.geodesic_point(&x.local, &yg, t / d)?;
            return self.locate(&x.hex, &m, &x.hex, 1e-6);
        }
        let z = self.portal_crossing(x, y, span / 2)?;
        let dxz = self.distance(x, &z)?;
        if t <= dxz {
            self.geodesic_point_at(x, &z, t)
        } else {
            self.geodesic_point_at(&z, y, t - dxz)
        }
    }

    /// The crossing point of the geodesic `[x, y]` with the marked side
    /// between the path hexagons at depths `i` and `i+1`, found by a 1D
    /// convex minimization of the two-sided distance along the side.
    fn portal_crossing(
        &self,
        x: &ThetaPoint,
        y: &ThetaPoint,
        i: usize,
    ) -> Result<ThetaPoint, ThetaError> {
        let a = x.hex.path_point(&y.hex, i);
        let b = x.hex.path_point(&y.hex, i + 1);
        // the shared marked side, in the chart of the longer word (where it
        // is the side toward its parent)
        let (host, letter) = if b.len() > a.len() {
            (a.clone(), b.last().unwrap())
        } else {
            (b.clone(), a.last().unwrap())
        };
        let s0 = 2 * letter as usize;
        let (va, vb) = (
            self.hexagon.vertices[s0],
            self.hexagon.vertices[(s0 + 1) % 6],
        );
        let eval = |s: f64| -> ThetaPoint {
            let local = self
                .hexagon
                .geodesic_point(&va, &vb, s)
                .expect("side interpolation");
            ThetaPoint { hex: host.clone(), local }
        };
        let (s_best, _) = golden_min(
            |s| {
                let z = eval(s);
                self.distance(x, &z).unwrap_or(f64::INFINITY)
                    + self.distance(&z, y).unwrap_or(f64::INFINITY)
            },
            0.0,
            1.0,
            1e-11,
        );
        Ok(eval(s_best))
    }

    /// Hyperbolic midpoint of two surface points (the surface is convex,
    /// so it stays inside).
    pub fn midpoint(&self, x: &ThetaPoint, y: &ThetaPoint) -> Result<ThetaPoint, ThetaError> {
        let d = self.distance(x, y)?;
        self.geodesic_point_at(x, y, d / 2.0)
    }

    pub fn hexagon_center(&self, hex: &HexAddress) -> ThetaPoint {
        ThetaPoint {
            hex: hex.clone(),
            local: self.hexagon.center(),
        }
    }
}

/// Enumerates boundary lines in canonical `(anchor length, anchor word,
/// side)` order. The base hexagon carries three lines; every other word `w`
/// carries exactly one, on the unmarked side whose letter pair excludes the
/// last letter of `w`.
pub fn nth_boundary_line(n: usize) -> BoundaryLineRef {
    if n < 3 {
        return BoundaryLineRef {
            anchor: HexAddress::ROOT,
            side: [1, 3, 5][n],
        };
    }
    let mut idx = n - 3;
    let mut len = 1usize;
    let mut count = 3usize; // reduced words of this length
    while idx >= count {
        idx -= count;
        len += 1;
        count *= 2;
    }
    // idx-th reduced word of this length in lex order
    let mut word = Vec::with_capacity(len);
    let mut div = count / 3;
    let mut first = (idx / div) as u8;
    word.push(first);
    let mut rem = idx % div;
    for _ in 1..len {
        div /= 2;
        let choice = rem / div;
        rem %= div;
        let mut options = [0u8, 1, 2].into_iter().filter(|&l| l != first);
        let letter = if choice == 0 {
            options.next().unwrap()
        } else {
            options.nth(1).unwrap()
        };
        word.push(letter);
        first = letter;
    }
    let side = match word.last().unwrap() {
        0 => 3,
        1 => 5,
        _ => 1,
    };
    BoundaryLineRef {
        anchor: HexAddress(word),
        side,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn addr(s: &str) -> HexAddress {
        s.parse().unwrap()
    }

    fn random_addr(rng: &mut impl Rng, max_len: usize) -> HexAddress {
        let len = rng.gen_range(0..=max_len);
        let mut letters: Vec<u8> = Vec::with_capacity(len);
        for _ in 0..len {
            loop {
                let l = rng.gen_range(0..3u8);
                if letters.last() != Some(&l) {
                    letters.push(l);
                    break;
                }
            }
        }
        HexAddress::new(letters).unwrap()
    }

    fn random_theta_point(
        geo: &ThetaGeometry,
        rng: &mut impl Rng,
        max_len: usize,
    ) -> ThetaPoint {
        let hex = random_addr(rng, max_len);
        let mut w = [0.0; 6];
        for x in &mut w {
            *x = rng.gen_range(0.0..1.0);
        }
        ThetaPoint {
            hex,
            local: geo.hexagon.barycentric(&w).unwrap(),
        }
    }

    #[test]
    fn address_parsing_and_reduction() {
        assert_eq!(addr(""), HexAddress::ROOT);
        assert_eq!(addr("0.1.0").letters(), &[0, 1, 0]);
        assert!("0.0".parse::<HexAddress>().is_err());
        assert!("3".parse::<HexAddress>().is_err());
        assert!("0..1".parse::<HexAddress>().is_err());
        assert_eq!(addr("0.1").step(1), addr("0"));
        assert_eq!(addr("0.1").concat(&[1, 0, 2]), addr("2"));
        assert_eq!(addr("0.1.2").to_string(), "0.1.2");
    }

    #[test]
    fn tree_distance_examples() {
        assert_eq!(addr("0.1.2").tree_dist(&addr("0.1.2")), 0);
        assert_eq!(HexAddress::ROOT.tree_dist(&addr("0.1.0")), 3);
        assert_eq!(addr("0.1").tree_dist(&addr("0.2")), 2);
    }

    #[test]
    fn tripod_meet_matches_brute_force() {
        // brute force: enumerate all vertices of a small ball and find the
        // unique one on all three pairwise geodesics
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut vertices = vec![HexAddress::ROOT];
        let mut frontier = vec![HexAddress::ROOT];
        for _ in 0..4 {
            let mut next = vec![];
            for v in &frontier {
                for l in 0..3u8 {
                    let w = v.step(l);
                    if w.len() > v.len() {
                        next.push(w);
                    }
                }
            }
            vertices.extend(next.iter().cloned());
            frontier = next;
        }
        for _ in 0..50 {
            let a = vertices.choose(&mut rng).unwrap();
            let b = vertices.choose(&mut rng).unwrap();
            let c = vertices.choose(&mut rng).unwrap();
            let med = HexAddress::tripod_meet(a, b, c);
            let found: Vec<_> = vertices
                .iter()
                .filter(|m| a.on_path(b, m) && a.on_path(c, m) && b.on_path(c, m))
                .collect();
            assert_eq!(found.len(), 1);
            assert_eq!(found[0], &med);
        }
        assert_eq!(
            HexAddress::tripod_meet(&addr("0.1"), &addr("0.2"), &HexAddress::ROOT),
            addr("0")
        );
    }

    #[test]
    fn theta_distance_respects_bounds() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x = random_theta_point(&geo, &mut rng, 12);
            let y = random_theta_point(&geo, &mut rng, 12);
            let d = geo.distance(&x, &y).unwrap();
            let (lo, hi) = geo.distance_bounds(&x.hex, &y.hex);
            assert!(d >= lo - 1e-8, "{d} < {lo}");
            assert!(d <= hi + 1e-8, "{d} > {hi}");
        }
    }

    #[test]
    fn distance_is_symmetric_and_frame_independent() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..300 {
            let x = random_theta_point(&geo, &mut rng, 30);
            let y = random_theta_point(&geo, &mut rng, 30);
            let d1 = geo.distance(&x, &y).unwrap();
            let d2 = geo.distance(&y, &x).unwrap();
            assert!((d1 - d2).abs() <= 1e-10 * (1.0 + d1));
        }
    }

    #[test]
    fn long_range_distance_matches_line_arclength() {
        // points on a boundary line have exact arclength coordinates,
        // giving an independent long-range oracle
        let geo = ThetaGeometry::new().unwrap();
        let line = BoundaryLineRef::new(&HexAddress::ROOT, 1).unwrap();
        for span in [4i64, 32, 96, 160, 260, 396] {
            let x = geo.point_on_line(&line, 0.25).unwrap();
            let y = geo.point_on_line(&line, span as f64 + 0.25).unwrap();
            let d = geo.distance(&x, &y).unwrap();
            assert!(
                (d - span as f64).abs() <= 1e-9 * (1.0 + span as f64),
                "span {span}: {d}"
            );
        }
    }

    #[test]
    fn adjacent_hexagon_centers_within_star_bound() {
        let geo = ThetaGeometry::new().unwrap();
        let x = geo.hexagon_center(&HexAddress::ROOT);
        let y = geo.hexagon_center(&addr("1"));
        let d = geo.distance(&x, &y).unwrap();
        assert!(d > 0.0 && d <= 2.0 * geo.hexagon.delta);
    }

    #[test]
    fn five_step_bound_example() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let p = random_addr(&mut rng, 8);
            let mut q = p.clone();
            for _ in 0..5 {
                loop {
                    let l = rng.gen_range(0..3u8);
                    let step = q.step(l);
                    if step.tree_dist(&p) > q.tree_dist(&p) {
                        q = step;
                        break;
                    }
                }
            }
            let x = ThetaPoint { hex: p, local: random_theta_point(&geo, &mut rng, 0).local };
            let y = ThetaPoint { hex: q, local: random_theta_point(&geo, &mut rng, 0).local };
            let d = geo.distance(&x, &y).unwrap();
            assert!(d >= 4.0 - 1e-9 && d <= 4.0 * geo.hexagon.rho + 2.0 * geo.hexagon.delta + 1e-9);
        }
    }

    #[test]
    fn line_canonicalization_is_stable_along_the_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let anchor = random_addr(&mut rng, 6);
            for side in [1usize, 3, 5] {
                let line = BoundaryLineRef::new(&anchor, side).unwrap();
                for c in -10..=10i64 {
                    let hex = line.vertex_at(c);
                    let again = BoundaryLineRef::new(&hex, line.side).unwrap();
                    assert_eq!(again, line);
                    assert_eq!(line.coord_of(&hex), Some(c));
                }
            }
        }
    }

    #[test]
    fn line_vertices_form_a_geodesic() {
        let line = BoundaryLineRef::new(&addr("2.1.0"), 1).unwrap();
        for c in -8..8i64 {
            let h1 = line.vertex_at(c);
            let h2 = line.vertex_at(c + 1);
            assert_eq!(h1.tree_dist(&h2), 1);
            assert_eq!(line.vertex_at(-8).tree_dist(&h1), (c + 8) as usize);
        }
    }

    #[test]
    fn nearest_vertex_matches_window_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let line =
                BoundaryLineRef::new(&random_addr(&mut rng, 5), [1, 3, 5][rng.gen_range(0..3)])
                    .unwrap();
            let p = random_addr(&mut rng, 10);
            let (near, n) = line.nearest_vertex(&p);
            let mut best = usize::MAX;
            let mut best_v = None;
            for c in -30..=30i64 {
                let v = line.vertex_at(c);
                let d = v.tree_dist(&p);
                if d < best {
                    best = d;
                    best_v = Some(v);
                }
            }
            assert_eq!(n, best);
            assert_eq!(near, best_v.unwrap());
            assert!(line.contains_vertex(&near));
        }
    }

    #[test]
    fn on_line_point_has_zero_nearest_distance() {
        let line = BoundaryLineRef::new(&addr("0.1"), 3).unwrap();
        let v = line.vertex_at(4);
        let (near, n) = line.nearest_vertex(&v);
        assert_eq!(near, v);
        assert_eq!(n, 0);
    }

    #[test]
    fn line_segments_are_consecutive_unit_intervals() {
        let geo = ThetaGeometry::new().unwrap();
        let line = BoundaryLineRef::new(&addr("1"), 5).unwrap();
        let origin = geo.point_on_line(&line, 0.0).unwrap();
        for c in -5..=5i64 {
            let start = geo.point_on_line(&line, c as f64).unwrap();
            let end = geo.point_on_line(&line, (c + 1) as f64).unwrap();
            assert!((geo.distance(&start, &end).unwrap() - 1.0).abs() < 1e-9);
            let d = geo.distance(&origin, &start).unwrap();
            assert!((d - (c as f64).abs()).abs() < 1e-9, "coord {c} dist {d}");
            assert!((geo.line_coord(&line, &start).unwrap() - c as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn point_on_line_round_trips_coordinates() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let line = BoundaryLineRef::new(&addr("2"), 1).unwrap();
        for _ in 0..100 {
            let c = rng.gen_range(-40.0..40.0);
            let p = geo.point_on_line(&line, c).unwrap();
            let back = geo.line_coord(&line, &p).unwrap();
            assert!((back - c).abs() < 1e-9);
            let (pc, dist) = geo.project_to_line(&line, &p).unwrap();
            assert!((pc - c).abs() < 1e-8, "pc {pc} c {c}");
            assert!(dist < 1e-8);
        }
    }

    #[test]
    fn projection_distance_to_line() {
        let geo = ThetaGeometry::new().unwrap();
        let line = BoundaryLineRef::new(&HexAddress::ROOT, 1).unwrap();
        let center = geo.hexagon_center(&HexAddress::ROOT);
        let (_, d) = geo.project_to_line(&line, &center).unwrap();
        // center-to-side distance is the inradius arccosh(sqrt(2)) rescaled
        let expect = 2.0_f64.sqrt().acosh() / geo.hexagon.kappa.sqrt();
        assert!((d - expect).abs() < 1e-9);
        // distance to a line through a far-away anchor stays stable
        let far_line = BoundaryLineRef::new(&addr("0.2.0.2.0.2.0.2.0.2.0.1"), 3).unwrap();
        let p = geo.point_on_line(&far_line, 3.3).unwrap();
        let (pc, dist) = geo.project_to_line(&far_line, &p).unwrap();
        assert!(dist < 1e-9);
        assert!((pc - 3.3).abs() < 1e-8);
    }

    #[test]
    fn parallel_boundary_lines_at_unit_distance() {
        // two unmarked sides of one hexagon are cut orthogonally by the
        // marked side between them, whose length realizes their distance
        let geo = ThetaGeometry::new().unwrap();
        let l1 = BoundaryLineRef::new(&HexAddress::ROOT, 1).unwrap();
        let l3 = BoundaryLineRef::new(&HexAddress::ROOT, 3).unwrap();
        let l5 = BoundaryLineRef::new(&HexAddress::ROOT, 5).unwrap();
        assert!((geo.line_pair_distance(&l1, &l3) - 1.0).abs() < 1e-9);
        assert!((geo.line_pair_distance(&l3, &l5) - 1.0).abs() < 1e-9);
        assert!((geo.line_pair_distance(&l1, &l5) - 1.0).abs() < 1e-9);
        let far = BoundaryLineRef::new(&addr("0"), 3).unwrap();
        let d = geo.line_pair_distance(&l1, &far);
        assert!(d > 0.0 && d < 2.0);
    }

    #[test]
    fn convex_union_midpoints_stay_inside() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        // a connected vertex set: ball of radius 3 around a random vertex
        for _ in 0..100 {
            let base = random_addr(&mut rng, 4);
            let in_set = |h: &HexAddress| h.tree_dist(&base) <= 3;
            let mut sample = || loop {
                let p = random_theta_point(&geo, &mut rng, 7);
                let p = ThetaPoint {
                    hex: base.concat(p.hex.letters()),
                    local: p.local,
                };
                if in_set(&p.hex) {
                    return p;
                }
            };
            let x = sample();
            let y = sample();
            let mid = geo.midpoint(&x, &y).unwrap();
            let inside = geo
                .representations(&mid, 1e-8)
                .iter()
                .any(|r| in_set(&r.hex));
            assert!(inside, "midpoint of {} and {} escaped", x.hex, y.hex);
        }
    }

    #[test]
    fn midpoint_betweenness_at_long_range() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let x = random_theta_point(&geo, &mut rng, 4);
            let far: Vec<u8> = {
                let mut w = x.hex.letters().to_vec();
                for _ in 0..120 {
                    loop {
                        let l = rng.gen_range(0..3u8);
                        if w.last() != Some(&l) {
                            w.push(l);
                            break;
                        }
                    }
                }
                w
            };
            let y = ThetaPoint {
                hex: HexAddress::new(far).unwrap(),
                local: random_theta_point(&geo, &mut rng, 0).local,
            };
            let d = geo.distance(&x, &y).unwrap();
            let m = geo.midpoint(&x, &y).unwrap();
            let dxm = geo.distance(&x, &m).unwrap();
            let dmy = geo.distance(&m, &y).unwrap();
            assert!(dxm + dmy <= d + 1e-7, "defect {}", dxm + dmy - d);
            assert!((dxm - dmy).abs() <= 1e-6 * (1.0 + d));
        }
    }

    #[test]
    fn canonicalize_prefers_least_address() {
        let geo = ThetaGeometry::new().unwrap();
        // a point on marked side 0 of hexagon "0" is shared with the base
        let on_side = geo
            .hexagon
            .geodesic_point(&geo.hexagon.vertices[0], &geo.hexagon.vertices[1], 0.3)
            .unwrap();
        let p = ThetaPoint { hex: addr("0"), local: on_side };
        let canon = geo.canonicalize(&p);
        assert_eq!(canon.hex, HexAddress::ROOT);
        assert!(geo.distance(&p, &canon).unwrap() < 1e-9);
    }

    #[test]
    fn locate_walks_to_the_right_hexagon() {
        let geo = ThetaGeometry::new().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..100 {
            let p = random_theta_point(&geo, &mut rng, 8);
            // express p in the chart of a nearby frame and locate from there
            let frame = random_addr(&mut rng, 3);
            let in_frame = geo.point_in_frame(&frame, &p);
            let found = geo.locate(&frame, &in_frame, &frame, 1e-9).unwrap();
            assert!(geo.distance(&found, &p).unwrap() < 1e-8);
            assert_eq!(found.hex, geo.canonicalize(&p).hex);
        }
    }

    #[test]
    fn line_enumeration_is_canonical_and_injective() {
        let mut seen = std::collections::HashSet::new();
        let mut prev_key: Option<(usize, Vec<u8>, usize)> = None;
        for n in 0..100 {
            let line = nth_boundary_line(n);
            let (a, b) = line.letters();
            if let Some(last) = line.anchor.last() {
                assert!(last != a && last != b);
            }
            let key = (line.anchor.len(), line.anchor.letters().to_vec(), line.side);
            if let Some(p) = &prev_key {
                assert!(p < &key, "enumeration out of order at {n}");
            }
            prev_key = Some(key);
            assert!(seen.insert(line));
        }
        assert_eq!(nth_boundary_line(0), BoundaryLineRef::new(&HexAddress::ROOT, 1).unwrap());
        assert_eq!(nth_boundary_line(3), BoundaryLineRef::new(&addr("0"), 3).unwrap());
        assert_eq!(nth_boundary_line(5), BoundaryLineRef::new(&addr("2"), 1).unwrap());
    }

    #[test]
    fn real_factor_segments() {
        assert_eq!(RealFactorPoint { t: 2.4 }.segment(), 2);
        assert_eq!(RealFactorPoint { t: -0.5 }.segment(), -1);
        assert_eq!(RealFactorPoint { t: 1.0 }.segments(), vec![0, 1]);
        assert_eq!(RealFactorPoint { t: 1.5 }.segments(), vec![1]);
    }
}
