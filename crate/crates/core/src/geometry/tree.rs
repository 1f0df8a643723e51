use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeodesicSpace, GeometryError, POINT_EQ_TOL};

/// A point of a metric tree: an edge id and the distance from the edge's
/// first endpoint. Vertices are stored on their smallest incident edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePoint {
    pub edge: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: usize,
    b: usize,
    len: f64,
}

/// A finite ℝ-tree given by a weighted tree graph.
#[derive(Debug, Clone)]
pub struct MetricTree {
    descriptor: String,
    edges: Vec<Edge>,
    vdist: Vec<Vec<f64>>,
    /// `hop[a][b]`: (next vertex, edge) on the path from `a` to `b`.
    hop: Vec<Vec<(usize, usize)>>,
    canon: Vec<TreePoint>,
    total_len: f64,
    diameter: f64,
    m: u64,
}

impl MetricTree {
    /// Builds a tree on vertices `0..n` from `(a, b, length)` edges.
    pub fn new(descriptor: impl Into<String>, n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidModel(m));
        if n < 2 || edges.len() != n - 1 {
            return bad(format!("a tree on {n} vertices needs {} edges, got {}", n.saturating_sub(1), edges.len()));
        }
        let mut adj = vec![Vec::new(); n];
        for (id, &(a, b, len)) in edges.iter().enumerate() {
            if a >= n || b >= n || a == b {
                return bad(format!("edge {id} has invalid endpoints ({a},{b})"));
            }
            if !(len.is_finite() && len > 0.0) {
                return bad(format!("edge {id} has nonpositive length {len}"));
            }
            adj[a].push((b, id));
            adj[b].push((a, id));
        }
        let edges: Vec<Edge> = edges.iter().map(|&(a, b, len)| Edge { a, b, len }).collect();
        let mut vdist = vec![vec![f64::INFINITY; n]; n];
        let mut hop = vec![vec![(usize::MAX, usize::MAX); n]; n];
        for root in 0..n {
            // BFS from `root`; the parent of v is v's next hop toward root.
            vdist[root][root] = 0.0;
            hop[root][root] = (root, usize::MAX);
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for &(w, e) in &adj[v] {
                    if vdist[root][w].is_infinite() {
                        vdist[root][w] = vdist[root][v] + edges[e].len;
                        hop[w][root] = (v, e);
                        queue.push_back(w);
                    }
                }
            }
            if vdist[root].iter().any(|d| d.is_infinite()) {
                return bad("graph is not connected".into());
            }
        }
        let canon = (0..n)
            .map(|v| {
                let e = adj[v].iter().map(|&(_, e)| e).min().expect("connected vertex has an edge");
                let offset = if edges[e].a == v { 0.0 } else { edges[e].len };
                TreePoint { edge: e, offset }
            })
            .collect();
        let diameter = vdist.iter().flatten().cloned().fold(0.0, f64::max);
        let total_len = edges.iter().map(|e| e.len).sum();
        Ok(MetricTree {
            descriptor: descriptor.into(),
            edges,
            vdist,
            hop,
            canon,
            total_len,
            diameter,
            m: diameter.ceil().max(1.0) as u64,
        })
    }

    /// Three legs of the given lengths from a center vertex 0.
    pub fn tripod(a: f64, b: f64, c: f64) -> Result<Self, GeometryError> {
        Self::new(format!("tree:tripod:{a}:{b}:{c}"), 4, &[(0, 1, a), (0, 2, b), (0, 3, c)])
    }

    /// A seeded random tree with `edges` edges, rescaled to the given diameter.
    pub fn random(edges: usize, seed: u64, diameter: f64) -> Result<Self, GeometryError> {
        if edges == 0 || !(diameter.is_finite() && diameter > 0.0) {
            return Err(GeometryError::InvalidModel("random tree needs edges ≥ 1 and a positive diameter".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<(usize, usize, f64)> =
            (1..=edges).map(|v| (rng.gen_range(0..v), v, rng.gen_range(0.2..1.0))).collect();
        let probe = Self::new("", edges + 1, &raw)?;
        let mut scale = diameter / probe.diameter;
        loop {
            let scaled: Vec<_> = raw.iter().map(|&(a, b, l)| (a, b, l * scale)).collect();
            let t = Self::new(format!("tree:random:{edges}:{seed}:{diameter}"), edges + 1, &scaled)?;
            // Rounding may overshoot the target by an ulp; keep the diameter at or below it.
            if t.diameter <= diameter {
                return Ok(t);
            }
            scale *= 1.0 - f64::EPSILON;
        }
    }

    /// Replaces the diameter bound; it must dominate the exact diameter.
    pub fn with_bound(mut self, m: u64) -> Result<Self, GeometryError> {
        if m == 0 || (m as f64) < self.diameter {
            return Err(GeometryError::DiameterBound { declared: m, actual: self.diameter });
        }
        self.m = m;
        Ok(self)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The canonical point for vertex `v`.
    pub fn vertex(&self, v: usize) -> Option<TreePoint> {
        self.canon.get(v).copied()
    }

    /// The point at distance `t` from vertex `from` along the edge to `to`.
    pub fn point_on_edge(&self, from: usize, to: usize, t: f64) -> Result<TreePoint, GeometryError> {
        let e = self
            .edges
            .iter()
            .position(|e| (e.a, e.b) == (from, to) || (e.a, e.b) == (to, from))
            .ok_or_else(|| GeometryError::Argument(format!("no edge between {from} and {to}")))?;
        let len = self.edges[e].len;
        if !(0.0..=len).contains(&t) {
            return Err(GeometryError::Argument(format!("offset {t} outside edge of length {len}")));
        }
        let offset = if self.edges[e].a == from { t } else { len - t };
        Ok(self.canonical(TreePoint { edge: e, offset }))
    }

    fn canonical(&self, p: TreePoint) -> TreePoint {
        let e = self.edges[p.edge];
        if p.offset <= POINT_EQ_TOL {
            self.canon[e.a]
        } else if p.offset >= e.len - POINT_EQ_TOL {
            self.canon[e.b]
        } else {
            p
        }
    }

    /// Endpoints of the point's edge with the distances to them.
    fn ends(&self, p: &TreePoint) -> [(usize, f64); 2] {
        let e = self.edges[p.edge];
        [(e.a, p.offset), (e.b, e.len - p.offset)]
    }

    fn best_route(&self, p: &TreePoint, q: &TreePoint) -> (f64, (usize, f64), (usize, f64)) {
        let mut best = (f64::INFINITY, (0, 0.0), (0, 0.0));
        for (a, da) in self.ends(p) {
            for (b, db) in self.ends(q) {
                let total = da + self.vdist[a][b] + db;
                if total < best.0 {
                    best = (total, (a, da), (b, db));
                }
            }
        }
        best
    }

    fn along_from(&self, edge: usize, vertex: usize, t: f64) -> TreePoint {
        let e = self.edges[edge];
        let t = t.clamp(0.0, e.len);
        let offset = if e.a == vertex { t } else { e.len - t };
        self.canonical(TreePoint { edge, offset })
    }
}

impl GeodesicSpace for MetricTree {
    type Point = TreePoint;

    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }

    fn distance(&self, p: &TreePoint, q: &TreePoint) -> f64 {
        if p.edge == q.edge {
            return (p.offset - q.offset).abs();
        }
        self.best_route(p, q).0
    }

    fn geodesic_point(&self, p: &TreePoint, q: &TreePoint, lambda: f64) -> TreePoint {
        if lambda <= 0.0 {
            return *p;
        }
        if lambda >= 1.0 {
            return *q;
        }
        if p.edge == q.edge {
            let offset = (1.0 - lambda) * p.offset + lambda * q.offset;
            return self.canonical(TreePoint { edge: p.edge, offset });
        }
        let (total, (a, da), (b, db)) = self.best_route(p, q);
        let mut s = lambda * total;
        if s <= da {
            return self.along_from(p.edge, a, da - s);
        }
        s -= da;
        let mut cur = a;
        while cur != b {
            let (next, e) = self.hop[cur][b];
            let len = self.edges[e].len;
            if s <= len {
                return self.along_from(e, cur, s);
            }
            s -= len;
            cur = next;
        }
        self.along_from(q.edge, b, s.min(db))
    }

    fn contains(&self, p: &TreePoint) -> bool {
        p.edge < self.edges.len() && p.offset.is_finite() && (-POINT_EQ_TOL..=self.edges[p.edge].len + POINT_EQ_TOL).contains(&p.offset)
    }

    fn diameter_bound(&self) -> u64 {
        self.m
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> TreePoint {
        let mut t = rng.gen_range(0.0..self.total_len);
        for (id, e) in self.edges.iter().enumerate() {
            if t < e.len {
                return self.canonical(TreePoint { edge: id, offset: t });
            }
            t -= e.len;
        }
        let last = self.edges.len() - 1;
        self.canonical(TreePoint { edge: last, offset: self.edges[last].len })
    }

    fn coordinates(&self, p: &TreePoint) -> Vec<f64> {
        vec![p.edge as f64, p.offset]
    }

    fn origin(&self) -> TreePoint {
        self.canon[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{check_w_axioms, combine, dist};

    #[test]
    fn tripod_examples() {
        let t = MetricTree::tripod(1.0, 2.0, 3.0).unwrap();
        assert_eq!(t.diameter_bound(), 5);
        let a = t.point_on_edge(0, 1, 0.5).unwrap();
        let b = t.point_on_edge(0, 2, 1.5).unwrap();
        assert!((dist(&t, &a, &b).unwrap() - 2.0).abs() < 1e-15);
        let m = combine(&t, &a, &b, 0.5).unwrap();
        let expected = t.point_on_edge(0, 2, 0.5).unwrap();
        assert_eq!(m.edge, expected.edge);
        assert!((m.offset - expected.offset).abs() < 1e-15);
        assert_eq!(dist(&t, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn vertices_are_canonical() {
        let t = MetricTree::tripod(1.0, 2.0, 3.0).unwrap();
        let center_via_b = t.point_on_edge(2, 0, 2.0).unwrap();
        assert_eq!(center_via_b, t.vertex(0).unwrap());
        let a = t.point_on_edge(0, 1, 1.0).unwrap();
        let c = t.point_on_edge(0, 3, 1.0).unwrap();
        // The midpoint of a and c is the center.
        assert_eq!(t.geodesic_point(&a, &c, 0.5), t.vertex(0).unwrap());
    }

    #[test]
    fn random_trees_have_requested_diameter() {
        for seed in 0..20 {
            let t = MetricTree::random(10, seed, 2.0).unwrap();
            assert!((t.diameter() - 2.0).abs() < 1e-12);
            assert_eq!(t.diameter_bound(), 2);
            assert!(check_w_axioms(&t, 300, seed).unwrap().pass());
        }
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(MetricTree::new("x", 3, &[(0, 1, 1.0)]).is_err());
        assert!(MetricTree::new("x", 3, &[(0, 1, 1.0), (0, 1, 1.0)]).is_err());
        assert!(MetricTree::new("x", 2, &[(0, 1, -1.0)]).is_err());
        assert!(MetricTree::tripod(1.0, 1.0, 1.0).unwrap().with_bound(1).is_err());
    }
}
