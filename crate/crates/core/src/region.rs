//! Two-user rate regions as convex polygons in the `(R1, R2)` plane.
//!
//! Vertices are kept counterclockwise, starting from the lexicographically
//! smallest one, with duplicate and collinear points removed. That makes two
//! regions with the same geometry compare equal vertex by vertex.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Absolute tolerance (bits) for vertex merging and slope detection.
pub const TOL: f64 = 1e-9;

/// `a1·R1 + a2·R2 ≤ b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl HalfPlane {
    pub fn new(a1: f64, a2: f64, b: f64) -> Result<Self> {
        ensure_finite("a1", a1)?;
        ensure_finite("a2", a2)?;
        ensure_finite("b", b)?;
        if a1 == 0.0 && a2 == 0.0 {
            return Err(Error::invalid("half-plane", "normal (a1, a2) must be nonzero"));
        }
        Ok(Self { a1, a2, b })
    }

    /// Signed violation; positive outside.
    pub fn excess(&self, p: [f64; 2]) -> f64 {
        self.a1 * p[0] + self.a2 * p[1] - self.b
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.excess(p) <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionTag {
    Theorem1,
    AwgnBox,
    IanBox,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region2D {
    pub tag: RegionTag,
    pub vertices: Vec<[f64; 2]>,
}

impl Region2D {
    pub fn empty(tag: RegionTag) -> Self {
        Self {
            tag,
            vertices: Vec::new(),
        }
    }

    /// Builds a region from any vertex list describing a convex polygon;
    /// the list is normalised to canonical order.
    pub fn from_vertices(tag: RegionTag, vertices: Vec<[f64; 2]>) -> Self {
        Self {
            tag,
            vertices: canonicalize(vertices),
        }
    }

    /// `[0, r1] × [0, r2]`.
    pub fn rect(tag: RegionTag, r1: f64, r2: f64) -> Result<Self> {
        let mut r = build_region(r1, r2, r1 + r2)?;
        r.tag = tag;
        Ok(r)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            s += a[0] * b[1] - b[0] * a[1];
        }
        0.5 * s
    }

    /// Half-planes bounding the polygon, one per edge.
    pub fn half_planes(&self) -> Vec<HalfPlane> {
        let v = &self.vertices;
        if v.len() < 3 {
            return Vec::new();
        }
        (0..v.len())
            .map(|i| {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                // outward normal of a CCW edge is (dy, -dx)
                let (a1, a2) = (b[1] - a[1], a[0] - b[0]);
                HalfPlane {
                    a1,
                    a2,
                    b: a1 * a[0] + a2 * a[1],
                }
            })
            .collect()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => dist(self.vertices[0], p) <= TOL,
            2 => on_segment(self.vertices[0], self.vertices[1], p),
            _ => self.half_planes().iter().all(|h| {
                let n = h.a1.hypot(h.a2);
                h.excess(p) <= TOL * n
            }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Region2D = serde_json::from_str(s)?;
        Ok(Self::from_vertices(r.tag, r.vertices))
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let len = dist(a, b);
    if len <= TOL {
        return dist(a, p) <= TOL;
    }
    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
    (-TOL..=1.0 + TOL).contains(&t) && cross(a, b, p).abs() / len <= TOL
}

/// Removes repeats and collinear points, orients counterclockwise and
/// rotates so the lexicographically smallest vertex comes first.
fn canonicalize(mut v: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    // merge consecutive near-duplicates (cyclically)
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(v.len());
    for p in v.drain(..) {
        if out.last().is_none_or(|q| dist(*q, p) > TOL) {
            out.push(p);
        }
    }
    while out.len() > 1 && dist(out[0], *out.last().unwrap()) <= TOL {
        out.pop();
    }
    // drop collinear middles
    let mut changed = true;
    while changed && out.len() > 2 {
        changed = false;
        for i in 0..out.len() {
            let n = out.len();
            let (a, b, c) = (out[(i + n - 1) % n], out[i], out[(i + 1) % n]);
            let span = dist(a, c).max(TOL);
            if cross(a, b, c).abs() / span <= TOL {
                out.remove(i);
                changed = true;
                break;
            }
        }
    }
    if out.len() == 2 {
        out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        return out;
    }
    if out.len() >= 3 {
        let area2: f64 = (0..out.len())
            .map(|i| {
                let (a, b) = (out[i], out[(i + 1) % out.len()]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum();
        if area2 < 0.0 {
            out.reverse();
        }
        let start = (0..out.len())
            .min_by(|&i, &j| out[i][0].total_cmp(&out[j][0]).then(out[i][1].total_cmp(&out[j][1])))
            .unwrap();
        out.rotate_left(start);
    }
    out
}

/// Sutherland–Hodgman step against one half-plane.
pub fn clip(poly: &[[f64; 2]], h: &HalfPlane) -> Vec<[f64; 2]> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    let scale = h.a1.hypot(h.a2);
    let inside = |p: [f64; 2]| h.excess(p) <= TOL * scale;
    for i in 0..n {
        let cur = poly[i];
        let prev = poly[(i + n - 1) % n];
        let (ci, pi) = (inside(cur), inside(prev));
        if ci != pi {
            let (ep, ec) = (h.excess(prev), h.excess(cur));
            let t = ep / (ep - ec);
            out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
        }
        if ci {
            out.push(cur);
        }
    }
    out
}

/// Intersection of `R1,R2 ≥ 0`, `R1 ≤ u1`, `R2 ≤ u2`, `R1 + R2 ≤ u_sum`.
pub fn build_region(u1: f64, u2: f64, u_sum: f64) -> Result<Region2D> {
    for (name, v) in [("u1", u1), ("u2", u2), ("u_sum", u_sum)] {
        ensure_finite(name, v)?;
        if v < 0.0 {
            return Err(Error::invalid(name, "bounds must be >= 0"));
        }
    }
    let rect = vec![[0.0, 0.0], [u1, 0.0], [u1, u2], [0.0, u2]];
    let clipped = clip(&rect, &HalfPlane { a1: 1.0, a2: 1.0, b: u_sum });
    Ok(Region2D::from_vertices(RegionTag::Theorem1, clipped))
}

/// Midpoint of the slope −1 edge.
pub fn dominant_face_midpoint(region: &Region2D) -> Result<[f64; 2]> {
    let v = &region.vertices;
    let n = v.len();
    let edges: Vec<([f64; 2], [f64; 2])> = match n {
        0 | 1 => Vec::new(),
        2 => vec![(v[0], v[1])],
        _ => (0..n).map(|i| (v[i], v[(i + 1) % n])).collect(),
    };
    edges
        .into_iter()
        .find(|(a, b)| {
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            dx.abs() > TOL && (dx + dy).abs() <= TOL
        })
        .map(|(a, b)| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
        .ok_or(Error::NoDominantFace)
}

pub fn intersect(a: &Region2D, b: &Region2D) -> Region2D {
    let (big, other) = if a.vertices.len() >= 3 { (a, b) } else { (b, a) };
    let verts = if big.vertices.len() >= 3 {
        big.half_planes()
            .iter()
            .fold(other.vertices.clone(), |poly, h| clip(&poly, h))
    } else {
        // both degenerate: keep the points of each lying on the other
        a.vertices
            .iter()
            .filter(|p| b.contains(**p))
            .chain(b.vertices.iter().filter(|p| a.contains(**p)))
            .copied()
            .collect()
    };
    let tag = if a.tag == b.tag { a.tag } else { RegionTag::Custom };
    Region2D::from_vertices(tag, verts)
}

/// Area of `a` lying outside `b`.
pub fn excess_area(a: &Region2D, b: &Region2D) -> f64 {
    (a.area() - intersect(a, b).area()).max(0.0)
}
