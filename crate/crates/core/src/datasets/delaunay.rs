//! Incremental Bowyer–Watson Delaunay triangulation on integer points.
//!
//! Predicates are evaluated exactly in `i128`. The convex hull is closed with
//! ghost triangles `(a, b, ∞)`, so no finite super-triangle is needed.

use std::collections::HashMap;

use crate::error::{Error, Result};

const GHOST: usize = usize::MAX;

/// Largest supported coordinate magnitude; keeps the in-circle determinant in `i128`.
pub const MAX_COORD: i64 = 1 << 30;

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
pub fn orient(a: [i64; 2], b: [i64; 2], c: [i64; 2]) -> i128 {
    let (abx, aby) = ((b[0] - a[0]) as i128, (b[1] - a[1]) as i128);
    let (acx, acy) = ((c[0] - a[0]) as i128, (c[1] - a[1]) as i128);
    abx * acy - aby * acx
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `(a, b, c)`.
pub fn in_circle(a: [i64; 2], b: [i64; 2], c: [i64; 2], d: [i64; 2]) -> i128 {
    let row = |p: [i64; 2]| {
        let (x, y) = ((p[0] - d[0]) as i128, (p[1] - d[1]) as i128);
        (x, y, x * x + y * y)
    };
    let (ax, ay, al) = row(a);
    let (bx, by, bl) = row(b);
    let (cx, cy, cl) = row(c);
    ax * (by * cl - bl * cy) - ay * (bx * cl - bl * cx) + al * (bx * cy - by * cx)
}

struct Mesh<'a> {
    pts: &'a [[i64; 2]],
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    /// Directed edge -> triangle holding it in counter-clockwise order.
    edges: HashMap<(usize, usize), usize>,
}

impl Mesh<'_> {
    fn add(&mut self, t: [usize; 3]) {
        let id = self.tris.len();
        self.tris.push(t);
        self.alive.push(true);
        for k in 0..3 {
            self.edges.insert((t[k], t[(k + 1) % 3]), id);
        }
    }

    fn kill(&mut self, id: usize) {
        self.alive[id] = false;
        let t = self.tris[id];
        for k in 0..3 {
            self.edges.remove(&(t[k], t[(k + 1) % 3]));
        }
    }

    /// Whether inserting `p` invalidates triangle `id`.
    fn conflicts(&self, id: usize, p: usize) -> bool {
        let [a, b, c] = self.tris[id];
        let pp = self.pts[p];
        if c == GHOST {
            let (pa, pb) = (self.pts[a], self.pts[b]);
            match orient(pa, pb, pp) {
                o if o > 0 => true,
                0 => {
                    // Strictly inside the hull edge segment.
                    let dot = (pp[0] - pa[0]) as i128 * (pb[0] - pa[0]) as i128
                        + (pp[1] - pa[1]) as i128 * (pb[1] - pa[1]) as i128;
                    let len2 = (pb[0] - pa[0]) as i128 * (pb[0] - pa[0]) as i128
                        + (pb[1] - pa[1]) as i128 * (pb[1] - pa[1]) as i128;
                    dot > 0 && dot < len2
                }
                _ => false,
            }
        } else {
            in_circle(self.pts[a], self.pts[b], self.pts[c], pp) > 0
        }
    }

    fn insert(&mut self, p: usize) -> Result<()> {
        let start = (0..self.tris.len())
            .rev()
            .find(|&id| self.alive[id] && self.conflicts(id, p))
            .ok_or_else(|| Error::DegenerateInput(format!("point {p} duplicates an existing point")))?;
        let mut bad = vec![start];
        let mut state: HashMap<usize, bool> = HashMap::from([(start, true)]);
        let mut boundary = Vec::new();
        let mut i = 0;
        while i < bad.len() {
            let t = self.tris[bad[i]];
            i += 1;
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let nb = self.edges[&(b, a)];
                let is_bad = match state.get(&nb) {
                    Some(&v) => v,
                    None => {
                        let v = self.conflicts(nb, p);
                        state.insert(nb, v);
                        if v {
                            bad.push(nb);
                        }
                        v
                    }
                };
                if !is_bad {
                    boundary.push((a, b));
                }
            }
        }
        for &id in &bad {
            self.kill(id);
        }
        for (a, b) in boundary {
            let t = if a == GHOST {
                [b, p, GHOST]
            } else if b == GHOST {
                [p, a, GHOST]
            } else {
                [a, b, p]
            };
            self.add(t);
        }
        Ok(())
    }
}

/// Delaunay triangles (counter-clockwise vertex triples) of distinct integer
/// points with coordinates bounded by [`MAX_COORD`].
pub fn triangulate(points: &[[i64; 2]]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!("{} points cannot be triangulated", points.len())));
    }
    if points.iter().any(|p| p[0].abs() > MAX_COORD || p[1].abs() > MAX_COORD) {
        return Err(Error::DegenerateInput("coordinate out of range".into()));
    }
    let a = 0;
    let b = (1..points.len())
        .find(|&i| points[i] != points[a])
        .ok_or_else(|| Error::DegenerateInput("all points coincide".into()))?;
    let c = (1..points.len())
        .find(|&i| orient(points[a], points[b], points[i]) != 0)
        .ok_or_else(|| Error::DegenerateInput("all points are collinear".into()))?;
    let (b, c) = if orient(points[a], points[b], points[c]) > 0 { (b, c) } else { (c, b) };

    let mut mesh = Mesh { pts: points, tris: Vec::new(), alive: Vec::new(), edges: HashMap::new() };
    mesh.add([a, b, c]);
    mesh.add([b, a, GHOST]);
    mesh.add([c, b, GHOST]);
    mesh.add([a, c, GHOST]);

    // Spatially coherent insertion keeps the conflict search near the newest triangles.
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| i != a && i != b && i != c).collect();
    order.sort_by_key(|&i| morton(points[i]));
    for p in order {
        mesh.insert(p)?;
    }
    Ok(mesh
        .tris
        .iter()
        .zip(&mesh.alive)
        .filter(|(t, &alive)| alive && t[2] != GHOST)
        .map(|(t, _)| *t)
        .collect())
}

fn morton(p: [i64; 2]) -> u64 {
    let spread = |v: i64| -> u64 {
        let mut x = ((v + MAX_COORD) as u64) >> 10;
        x &= 0x0000_0000_ffff_ffff;
        x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
        x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
        x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
        x = (x | (x << 2)) & 0x3333_3333_3333_3333;
        (x | (x << 1)) & 0x5555_5555_5555_5555
    };
    spread(p[0]) | (spread(p[1]) << 1)
}

/// Undirected edges `(lo, hi)` of a triangle list, sorted.
pub fn triangle_edges(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}
