//! Two-colored coverings of pointed metric trees: a ball around the base
//! vertex plus annular branch classes, in the standard and the phase-shifted
//! (modified) variant. Instantiated for the hexagon tree `T0` (vertices are
//! addresses) and for the segment tree of the real line (vertices are
//! integers), with a brute-force oracle over explicit finite trees.

use crate::theta::HexAddress;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoverError {
    #[error("invalid cover spec: {0}")]
    BadSpec(String),
    #[error("explicit tree too large ({0} vertices)")]
    TreeTooLarge(usize),
}

/// Vertex of either tree instantiation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeVertex {
    Hex(HexAddress),
    Line(i64),
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeVertex::Hex(a) => write!(f, "{a}"),
            TreeVertex::Line(q) => write!(f, "{q}"),
        }
    }
}

/// Parameters of a tree covering: radius `r`, the optional inner radius `d`
/// (absent for the standard covering, `0 < d <= r` for the modified one)
/// and the base vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSpec {
    pub r: i64,
    pub d: Option<i64>,
    pub base: TreeVertex,
}

impl CoverSpec {
    pub fn standard(r: i64, base: TreeVertex) -> Result<CoverSpec, CoverError> {
        if r <= 0 {
            return Err(CoverError::BadSpec(format!("r = {r} must be positive")));
        }
        Ok(CoverSpec { r, d: None, base })
    }

    pub fn modified(r: i64, d: i64, base: TreeVertex) -> Result<CoverSpec, CoverError> {
        if r <= 0 {
            return Err(CoverError::BadSpec(format!("r = {r} must be positive")));
        }
        if d <= 0 || d > r {
            return Err(CoverError::BadSpec(format!("d = {d} outside (0, {r}]")));
        }
        Ok(CoverSpec { r, d: Some(d), base })
    }

    /// Inner radius actually in force (`r` for the standard covering, which
    /// coincides with the modified covering at `d = r`).
    pub fn inner(&self) -> i64 {
        self.d.unwrap_or(self.r)
    }

    /// Doubled threshold distance `2 |zv|_min` of the annulus-`k` relation:
    /// `(k - 1/2) r` standard, `(k - 3/2) r + d` modified. Doubling keeps
    /// the arithmetic in integers (`r` odd makes these half-integers).
    fn doubled_threshold(&self, k: i64) -> i64 {
        match self.d {
            None => (2 * k - 1) * self.r,
            Some(d) => (2 * k - 3) * self.r + 2 * d,
        }
    }

    /// The merged first annulus: all of `B_1` is one class when `d < r/2`.
    pub fn first_annulus_merged(&self) -> bool {
        match self.d {
            None => false,
            Some(d) => 2 * d < self.r,
        }
    }

    /// Annulus radial range `[lo, hi]` of distances from the base;
    /// `k = 0` is the ball.
    pub fn annulus_range(&self, k: i64) -> (i64, i64) {
        let d = self.inner();
        if k == 0 {
            (0, d)
        } else {
            ((k - 1) * self.r + d, k * self.r + d)
        }
    }

    /// All annulus indices whose closed radial range contains `dist`.
    pub fn annuli_of(&self, dist: i64) -> Vec<i64> {
        let d = self.inner();
        let mut ks = Vec::with_capacity(2);
        if dist <= d {
            ks.push(0);
        }
        if dist >= d {
            let k = (dist - d).div_euclid(self.r) + 1;
            let (lo, hi) = self.annulus_range(k);
            debug_assert!(lo <= dist && dist <= hi);
            if dist == lo && k > 1 {
                ks.push(k - 1);
            }
            ks.push(k);
        }
        ks
    }
}

/// The gate of an annulus class: the canonical point of the tree at the
/// threshold distance from the base along the geodesic to the member. With
/// odd `r` and integer `d` it is always an edge midpoint, represented by the
/// edge's outer endpoint (the one away from the base).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gate {
    pub outer: TreeVertex,
}

impl Serialize for TreeVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TreeVertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if let Ok(q) = s.parse::<i64>() {
            return Ok(TreeVertex::Line(q));
        }
        s.parse::<HexAddress>()
            .map(TreeVertex::Hex)
            .map_err(serde::de::Error::custom)
    }
}

/// Identifier of a covering member: color (1 for the ball and even annuli,
/// 2 for odd annuli), annulus index, and the gate point (absent for the
/// ball and for the merged first annulus of the modified covering).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeClassId {
    pub color: u8,
    pub k: i64,
    pub gate: Option<Gate>,
}

impl TreeClassId {
    fn new(k: i64, gate: Option<Gate>) -> TreeClassId {
        TreeClassId {
            color: if k % 2 == 0 { 1 } else { 2 },
            k,
            gate,
        }
    }
}

impl fmt::Display for TreeClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.gate {
            Some(g) => write!(f, "c{}k{}@{}", self.color, self.k, g.outer),
            None => write!(f, "c{}k{}", self.color, self.k),
        }
    }
}

fn hex_class_of(x: &HexAddress, base: &HexAddress, spec: &CoverSpec) -> Vec<TreeClassId> {
    let dist = base.tree_dist(x) as i64;
    spec.annuli_of(dist)
        .into_iter()
        .map(|k| {
            if k == 0 || (k == 1 && spec.first_annulus_merged()) {
                TreeClassId::new(k, None)
            } else {
                // outer gate vertex at distance ceil(threshold) from base
                let t = (spec.doubled_threshold(k) + 1) / 2;
                debug_assert!(t <= dist);
                let outer = base.path_point(x, t as usize);
                TreeClassId::new(k, Some(Gate { outer: TreeVertex::Hex(outer) }))
            }
        })
        .collect()
}

fn line_class_of(x: i64, base: i64, spec: &CoverSpec) -> Vec<TreeClassId> {
    let dist = (x - base).abs();
    spec.annuli_of(dist)
        .into_iter()
        .map(|k| {
            if k == 0 || (k == 1 && spec.first_annulus_merged()) {
                TreeClassId::new(k, None)
            } else {
                let t = (spec.doubled_threshold(k) + 1) / 2;
                let outer = base + t * (x - base).signum();
                TreeClassId::new(k, Some(Gate { outer: TreeVertex::Line(outer) }))
            }
        })
        .collect()
}

/// Classifies a tree vertex under the covering. Returns one id, or two when
/// the vertex sits on a shared annulus boundary. Two vertices lie in one
/// member exactly when their id lists intersect.
pub fn class_of(x: &TreeVertex, spec: &CoverSpec) -> Vec<TreeClassId> {
    match (x, &spec.base) {
        (TreeVertex::Hex(x), TreeVertex::Hex(b)) => hex_class_of(x, b, spec),
        (TreeVertex::Line(x), TreeVertex::Line(b)) => line_class_of(*x, *b, spec),
        _ => panic!("vertex and base from different tree instantiations"),
    }
}

/// The covering induced on a boundary line by a standard covering of the
/// hexagon tree, as a modified covering of the line in its own coordinates:
/// `(r, r - (n mod r), nearest vertex)` where `n` is the distance from the
/// base to the line.
pub fn induced_line_spec(
    spec: &CoverSpec,
    line: &crate::theta::BoundaryLineRef,
) -> Result<(CoverSpec, HexAddress), CoverError> {
    if spec.d.is_some() {
        return Err(CoverError::BadSpec("induced spec needs a standard covering".into()));
    }
    let base = match &spec.base {
        TreeVertex::Hex(b) => b,
        _ => return Err(CoverError::BadSpec("hexagon-tree covering required".into())),
    };
    let (near, n) = line.nearest_vertex(base);
    let k = (n as i64).rem_euclid(spec.r);
    let d = spec.r - k; // in (0, r]
    let coord = line.coord_of(&near).expect("nearest vertex lies on the line");
    Ok((CoverSpec::modified(spec.r, d, TreeVertex::Line(coord))?, near))
}

/// An explicit finite metric tree for oracle checks.
pub struct ExplicitTree {
    pub adj: Vec<Vec<usize>>,
    pub base: usize,
    dist_from_base: Vec<u32>,
    parent: Vec<usize>,
}

impl ExplicitTree {
    pub fn new(adj: Vec<Vec<usize>>, base: usize) -> Result<ExplicitTree, CoverError> {
        let n = adj.len();
        if n > 100_000 {
            return Err(CoverError::TreeTooLarge(n));
        }
        let mut dist = vec![u32::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([base]);
        dist[base] = 0;
        parent[base] = base;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        Ok(ExplicitTree {
            adj,
            base,
            dist_from_base: dist,
            parent,
        })
    }

    /// A path graph on `2n+1` vertices with the base in the middle.
    pub fn path(n: usize) -> ExplicitTree {
        let total = 2 * n + 1;
        let mut adj = vec![vec![]; total];
        for i in 0..total - 1 {
            adj[i].push(i + 1);
            adj[i + 1].push(i);
        }
        ExplicitTree::new(adj, n).unwrap()
    }

    /// A star with `rays` rays of length `len` from the base.
    pub fn star(rays: usize, len: usize) -> ExplicitTree {
        let mut adj = vec![vec![]; 1 + rays * len];
        let mut next = 1;
        for _ in 0..rays {
            let mut prev = 0;
            for _ in 0..len {
                adj[prev].push(next);
                adj[next].push(prev);
                prev = next;
                next += 1;
            }
        }
        ExplicitTree::new(adj, 0).unwrap()
    }

    /// The ball of the given radius in the hexagon tree around the base
    /// word, truncated to at most `cap` vertices in breadth-first
    /// `(length, lex)` order (a subtree, so distances are preserved).
    pub fn theta_ball(radius: usize, cap: usize) -> (ExplicitTree, Vec<HexAddress>) {
        let mut words = vec![HexAddress::ROOT];
        let mut adj: Vec<Vec<usize>> = vec![vec![]];
        let mut frontier = vec![0usize];
        'grow: for _ in 0..radius {
            let mut next = vec![];
            for &i in &frontier {
                let w = words[i].clone();
                for l in 0..3u8 {
                    let child = w.step(l);
                    if child.len() <= w.len() {
                        continue;
                    }
                    if words.len() >= cap {
                        break 'grow;
                    }
                    let j = words.len();
                    words.push(child);
                    adj.push(vec![]);
                    adj[i].push(j);
                    adj[j].push(i);
                    next.push(j);
                }
            }
            frontier = next;
        }
        (ExplicitTree::new(adj, 0).unwrap(), words)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn depth(&self, v: usize) -> i64 {
        self.dist_from_base[v] as i64
    }

    /// Depth of the meet of `x` and `y` relative to the base (the tripod
    /// center distance `|zv|`).
    pub fn meet_depth(&self, x: usize, y: usize) -> i64 {
        let (mut a, mut b) = (x, y);
        while self.dist_from_base[a] > self.dist_from_base[b] {
            a = self.parent[a];
        }
        while self.dist_from_base[b] > self.dist_from_base[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        self.depth(a)
    }

    pub fn dist(&self, x: usize, y: usize) -> i64 {
        self.depth(x) + self.depth(y) - 2 * self.meet_depth(x, y)
    }
}

/// A member of a brute-force covering: its color and vertex set.
#[derive(Debug, Clone)]
pub struct OracleMember {
    pub color: u8,
    pub k: i64,
    pub vertices: Vec<usize>,
}

/// Computes the covering of an explicit tree from the raw pairwise
/// relation: each annulus is split by the transitive closure of the
/// tripod-center condition. Quadratic over annuli up to `pair_cap`
/// vertices, then by threshold-ancestor bucketing (the closure of the
/// relation in a tree).
pub fn brute_force_cover(tree: &ExplicitTree, spec: &CoverSpec) -> Vec<OracleMember> {
    let n = tree.len();
    let mut members = Vec::new();
    let mut by_annulus: HashMap<i64, Vec<usize>> = HashMap::new();
    for v in 0..n {
        for k in spec.annuli_of(tree.depth(v)) {
            by_annulus.entry(k).or_default().push(v);
        }
    }
    let mut keys: Vec<i64> = by_annulus.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let vs = &by_annulus[&k];
        if k == 0 || (k == 1 && spec.first_annulus_merged()) {
            members.push(OracleMember { color: if k % 2 == 0 { 1 } else { 2 }, k, vertices: vs.clone() });
            continue;
        }
        let threshold2 = spec.doubled_threshold(k);
        let related = |x: usize, y: usize| 2 * tree.meet_depth(x, y) >= threshold2;
        let classes: Vec<Vec<usize>> = if vs.len() <= 3000 {
            // honest pairwise transitive closure
            let mut dsu: Vec<usize> = (0..vs.len()).collect();
            fn find(dsu: &mut Vec<usize>, mut i: usize) -> usize {
                while dsu[i] != i {
                    dsu[i] = dsu[dsu[i]];
                    i = dsu[i];
                }
                i
            }
            for i in 0..vs.len() {
                for j in (i + 1)..vs.len() {
                    if related(vs[i], vs[j]) {
                        let (a, b) = (find(&mut dsu, i), find(&mut dsu, j));
                        if a != b {
                            dsu[a] = b;
                        }
                    }
                }
            }
            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for i in 0..vs.len() {
                let root = find(&mut dsu, i);
                groups.entry(root).or_default().push(vs[i]);
            }
            groups.into_values().collect()
        } else {
            // bucket by the ancestor at the threshold depth; in a tree this
            // is exactly the transitive closure of the pairwise relation
            let t = (threshold2 + 1) / 2;
            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for &v in vs {
                let mut a = v;
                while tree.depth(a) > t {
                    a = tree.parent[a];
                }
                groups.entry(a).or_default().push(v);
            }
            groups.into_values().collect()
        };
        for vertices in classes {
            members.push(OracleMember { color: if k % 2 == 0 { 1 } else { 2 }, k, vertices });
        }
    }
    members
}
