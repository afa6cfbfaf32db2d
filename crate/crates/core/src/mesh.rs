//! Conforming triangulations of polygonal domains with tagged boundary sides.
//!
//! Two generators are provided: the structured unit square and Cook's
//! membrane, the latter obtained by a bilinear map of the structured square
//! onto the tapered quadrilateral `C=(0,0), B=(48,44), A=(48,60), D=(0,44)`.
//! Every cell of the structured square is split along its bottom-left to
//! top-right diagonal.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid subdivision count {0}, need n >= 1")]
    InvalidSubdivision(usize),
    #[error("triangle {0} has non-positive signed area {1}")]
    InvertedTriangle(usize, f64),
    #[error("boundary edge {0:?} does not belong to any triangle")]
    OrphanBoundaryEdge([usize; 2]),
    #[error("unknown side tag `{0}`")]
    UnknownSide(String),
    #[error("malformed mesh file at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Index of a polygon side in [`Mesh::sides`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SideId(pub usize);

/// One straight side of the polygonal boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Side {
    pub tag: String,
    pub start: Point,
    pub end: Point,
}

impl Side {
    pub fn length(&self) -> f64 {
        dist(self.start, self.end)
    }
}

/// A boundary edge oriented counter-clockwise around the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub side: SideId,
    pub normal: Point,
    pub tangent: Point,
    /// Owning triangle and the local edge index within it (edge `e` is opposite local vertex `e`).
    pub triangle: usize,
    pub local_edge: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    sides: Vec<Side>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub h_max: f64,
    pub h_min: f64,
    /// max over triangles of `h_K / rho_K`, `rho_K` the inradius.
    pub shape_regularity: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Local vertex pair of edge `e` (opposite vertex `e`).
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

impl Mesh {
    /// Builds a mesh from raw parts. Boundary edges are given as oriented
    /// vertex pairs with a side index; normals, tangents and owning triangles
    /// are computed here.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], SideId)>,
        sides: Vec<Side>,
    ) -> Result<Self, MeshError> {
        for (k, t) in triangles.iter().enumerate() {
            let area = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if area <= 0.0 {
                return Err(MeshError::InvertedTriangle(k, area));
            }
        }
        let mut owner: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for (k, t) in triangles.iter().enumerate() {
            for (e, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                owner.insert((t[*a], t[*b]), (k, e));
            }
        }
        let mut boundary_edges = Vec::with_capacity(boundary.len());
        for ([a, b], side) in boundary {
            let &(triangle, local_edge) = owner
                .get(&(a, b))
                .ok_or(MeshError::OrphanBoundaryEdge([a, b]))?;
            let (pa, pb) = (vertices[a], vertices[b]);
            let len = dist(pa, pb);
            let tangent = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
            let normal = [tangent[1], -tangent[0]];
            boundary_edges.push(BoundaryEdge {
                vertices: [a, b],
                side,
                normal,
                tangent,
                triangle,
                local_edge,
            });
        }
        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges,
            sides,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn side(&self, id: SideId) -> &Side {
        &self.sides[id.0]
    }

    pub fn side_id(&self, tag: &str) -> Result<SideId, MeshError> {
        self.sides
            .iter()
            .position(|s| s.tag == tag)
            .map(SideId)
            .ok_or_else(|| MeshError::UnknownSide(tag.to_string()))
    }

    pub fn all_sides(&self) -> Vec<SideId> {
        (0..self.sides.len()).map(SideId).collect()
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        signed_area(a, b, c)
    }

    /// Diameter of triangle `k` (its longest edge).
    pub fn diameter(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        dist(self.vertices[e.vertices[0]], self.vertices[e.vertices[1]])
    }

    /// Unique undirected edges, sorted lexicographically by `(min, max)` vertex index.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| {
                LOCAL_EDGES.iter().map(move |[a, b]| {
                    let (i, j) = (t[*a], t[*b]);
                    [i.min(j), i.max(j)]
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Boundary edges of one side, in counter-clockwise order.
    pub fn side_edges(&self, side: SideId) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.side == side)
    }

    /// Vertex index closest to `p`.
    pub fn nearest_vertex(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = dist(*v, p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn quality(&self) -> MeshQuality {
        mesh_quality(self)
    }

    /// Plain-text dump: `VERTICES`, `TRIANGLES`, `BOUNDARY_EDGES` sections,
    /// coordinates at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "VERTICES {}", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(out, "{:.16e} {:.16e}", v[0], v[1]).unwrap();
        }
        writeln!(out, "TRIANGLES {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(out, "BOUNDARY_EDGES {}", self.boundary_edges.len()).unwrap();
        for e in &self.boundary_edges {
            writeln!(
                out,
                "{} {} {} {:.16e} {:.16e} {:.16e} {:.16e}",
                e.vertices[0],
                e.vertices[1],
                self.sides[e.side.0].tag,
                e.normal[0],
                e.normal[1],
                e.tangent[0],
                e.tangent[1]
            )
            .unwrap();
        }
        out
    }

    /// Parses the format written by [`Mesh::to_text`]. Normals and tangents
    /// are recomputed from the vertex coordinates; side endpoints are
    /// recovered from the first and last edge carrying each tag.
    pub fn from_text(text: &str) -> Result<Self, MeshError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l))
            .collect();
        let err = |line: usize, msg: &str| MeshError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut cursor = 0;
        let mut next = |what: &str| -> Result<(usize, Vec<&str>), MeshError> {
            let (ln, l) = *lines
                .get(cursor)
                .ok_or_else(|| err(text.lines().count(), &format!("unexpected end of file, expected {what}")))?;
            cursor += 1;
            Ok((ln, l.split_whitespace().collect()))
        };
        fn num<T: FromStr>(ln: usize, s: Option<&&str>) -> Result<T, MeshError> {
            s.and_then(|s| s.parse().ok()).ok_or_else(|| MeshError::Parse {
                line: ln,
                msg: "bad or missing field".into(),
            })
        }
        let section = |(ln, f): (usize, Vec<&str>), name: &str| -> Result<usize, MeshError> {
            if f.first() != Some(&name) {
                return Err(err(ln, &format!("expected section {name}")));
            }
            num(ln, f.get(1))
        };

        let nv = section(next("VERTICES")?, "VERTICES")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, f) = next("vertex")?;
            vertices.push([num(ln, f.first())?, num(ln, f.get(1))?]);
        }

        let nt = section(next("TRIANGLES")?, "TRIANGLES")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, f) = next("triangle")?;
            let t: [usize; 3] = [num(ln, f.first())?, num(ln, f.get(1))?, num(ln, f.get(2))?];
            if t.iter().any(|&i| i >= nv) {
                return Err(err(ln, "vertex index out of range"));
            }
            triangles.push(t);
        }

        let nb = section(next("BOUNDARY_EDGES")?, "BOUNDARY_EDGES")?;
        let mut sides: Vec<Side> = Vec::new();
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, f) = next("boundary edge")?;
            let (a, b): (usize, usize) = (num(ln, f.first())?, num(ln, f.get(1))?);
            let tag = *f.get(2).ok_or_else(|| err(ln, "missing side tag"))?;
            if a >= nv || b >= nv {
                return Err(err(ln, "vertex index out of range"));
            }
            let id = match sides.iter().position(|s| s.tag == tag) {
                Some(i) => {
                    sides[i].end = vertices[b];
                    i
                }
                None => {
                    sides.push(Side {
                        tag: tag.to_string(),
                        start: vertices[a],
                        end: vertices[b],
                    });
                    sides.len() - 1
                }
            };
            boundary.push(([a, b], SideId(id)));
        }
        Mesh::from_parts(vertices, triangles, boundary, sides)
    }
}

/// Structured mesh of `[0,1]^2` with `n` cells per side.
///
/// Side tags, in counter-clockwise order: `bottom`, `right`, `top`, `left`.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    build_mapped_mesh(
        n,
        |s, t| [s, t],
        [
            ("bottom", [0.0, 0.0], [1.0, 0.0]),
            ("right", [1.0, 0.0], [1.0, 1.0]),
            ("top", [1.0, 1.0], [0.0, 1.0]),
            ("left", [0.0, 1.0], [0.0, 0.0]),
        ],
    )
}

pub const COOK_C: Point = [0.0, 0.0];
pub const COOK_B: Point = [48.0, 44.0];
pub const COOK_A: Point = [48.0, 60.0];
pub const COOK_D: Point = [0.0, 44.0];

/// Cook's membrane: bilinear image of the structured unit-square mesh.
///
/// Side tags: `CB` (bottom), `AB` (x = 48, loaded), `DA` (top), `CD` (x = 0, clamped).
pub fn build_cook_mesh(n: usize) -> Result<Mesh, MeshError> {
    let map = |s: f64, t: f64| {
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
        let corners = [COOK_C, COOK_B, COOK_A, COOK_D];
        let mut p = [0.0; 2];
        for (wi, c) in w.iter().zip(corners) {
            p[0] += wi * c[0];
            p[1] += wi * c[1];
        }
        p
    };
    build_mapped_mesh(
        n,
        map,
        [
            ("CB", COOK_C, COOK_B),
            ("AB", COOK_B, COOK_A),
            ("DA", COOK_A, COOK_D),
            ("CD", COOK_D, COOK_C),
        ],
    )
}

fn build_mapped_mesh(
    n: usize,
    map: impl Fn(f64, f64) -> Point,
    sides: [(&str, Point, Point); 4],
) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidSubdivision(n));
    }
    let idx = |i: usize, j: usize| i + j * (n + 1);
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Exact endpoints avoid i * h rounding at the last node.
            let s = if i == n { 1.0 } else { i as f64 * h };
            let t = if j == n { 1.0 } else { j as f64 * h };
            vertices.push(map(s, t));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary.push(([idx(i, 0), idx(i + 1, 0)], SideId(0)));
    }
    for j in 0..n {
        boundary.push(([idx(n, j), idx(n, j + 1)], SideId(1)));
    }
    for i in (0..n).rev() {
        boundary.push(([idx(i + 1, n), idx(i, n)], SideId(2)));
    }
    for j in (0..n).rev() {
        boundary.push(([idx(0, j + 1), idx(0, j)], SideId(3)));
    }
    let sides = sides
        .iter()
        .map(|(tag, start, end)| Side {
            tag: tag.to_string(),
            start: *start,
            end: *end,
        })
        .collect();
    Mesh::from_parts(vertices, triangles, boundary, sides)
}

pub fn mesh_quality(mesh: &Mesh) -> MeshQuality {
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut shape: f64 = 0.0;
    for k in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_points(k);
        let perimeter = dist(a, b) + dist(b, c) + dist(c, a);
        let inradius = 2.0 * signed_area(a, b, c) / perimeter;
        let h = mesh.diameter(k);
        h_max = h_max.max(h);
        h_min = h_min.min(h);
        shape = shape.max(h / inradius);
    }
    MeshQuality {
        h_max,
        h_min,
        shape_regularity: shape,
    }
}

/// The single triangle (0,0), (1,0), (0,1) with one boundary side `all`.
pub fn reference_triangle_mesh() -> Mesh {
    Mesh::from_parts(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        vec![([0, 1], SideId(0)), ([1, 2], SideId(0)), ([2, 0], SideId(0))],
        vec![Side { tag: "all".into(), start: [0.0, 0.0], end: [0.0, 0.0] }],
    )
    .expect("reference triangle is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn total_area(m: &Mesh) -> f64 {
        (0..m.triangles().len()).map(|k| m.area(k)).sum()
    }

    #[test]
    fn square_counts() {
        let m = build_unit_square_mesh(1).unwrap();
        assert_eq!(
            (m.triangles().len(), m.vertices().len(), m.boundary_edges().len()),
            (2, 4, 4)
        );
        let m = build_unit_square_mesh(4).unwrap();
        assert_eq!(
            (m.triangles().len(), m.vertices().len(), m.boundary_edges().len()),
            (32, 25, 16)
        );
        assert!((m.quality().h_max - 2f64.sqrt() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(matches!(build_unit_square_mesh(0), Err(MeshError::InvalidSubdivision(0))));
        assert!(build_cook_mesh(0).is_err());
    }

    #[test]
    fn h_max_halves_under_refinement() {
        let h1 = build_unit_square_mesh(1).unwrap().quality().h_max;
        assert!((h1 - 2f64.sqrt()).abs() < 1e-15);
        let h8 = build_unit_square_mesh(8).unwrap().quality().h_max;
        assert!((h8 - 2f64.sqrt() / 8.0).abs() < 1e-15);
        for n in [3, 5, 12] {
            let a = build_unit_square_mesh(n).unwrap().quality().h_max;
            let b = build_unit_square_mesh(2 * n).unwrap().quality().h_max;
            assert!((a / b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equilateral_shape_regularity() {
        let s3 = 3f64.sqrt();
        let m = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]],
            vec![[0, 1, 2]],
            vec![([0, 1], SideId(0)), ([1, 2], SideId(0)), ([2, 0], SideId(0))],
            vec![Side { tag: "all".into(), start: [0.0, 0.0], end: [0.0, 0.0] }],
        )
        .unwrap();
        // diameter 1 over inradius 1/(2 sqrt 3)
        assert!((m.quality().shape_regularity - 2.0 * s3).abs() < 1e-12);
        for n in [1, 4, 7] {
            let q = build_cook_mesh(n).unwrap().quality();
            assert!(q.h_min <= q.h_max);
            assert!(q.shape_regularity >= 2.0 * s3 - 1e-12);
        }
    }

    #[test]
    fn cook_geometry() {
        let m = build_cook_mesh(1).unwrap();
        assert_eq!(m.triangles().len(), 2);
        assert_eq!(m.vertices()[0], COOK_C);
        assert_eq!(m.vertices()[3], COOK_A);
        assert!((total_area(&m) - 1440.0).abs() < 1e-10 * 1440.0);
        for n in [2, 5, 16] {
            let m = build_cook_mesh(n).unwrap();
            assert!((0..m.triangles().len()).all(|k| m.area(k) > 0.0));
            assert!((total_area(&m) - 1440.0).abs() < 1e-10 * 1440.0);
            let a = m.nearest_vertex(COOK_A);
            assert_eq!(m.vertices()[a], COOK_A);
        }
    }

    #[test]
    fn inverted_triangle_rejected() {
        let r = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![],
            vec![],
        );
        assert!(matches!(r, Err(MeshError::InvertedTriangle(0, _))));
    }

    fn check_invariants(m: &Mesh, area: f64) {
        assert!((total_area(m) - area).abs() < 1e-10 * area);
        // Euler relation for a simply connected triangulation.
        let (v, e, f) = (m.vertices().len() as i64, m.edges().len() as i64, m.triangles().len() as i64);
        assert_eq!(v - e + f, 1);
        // Each interior edge is shared by exactly two triangles with opposite orientation.
        let mut directed = HashSet::new();
        for t in m.triangles() {
            for [a, b] in LOCAL_EDGES {
                assert!(directed.insert((t[a], t[b])), "duplicate directed edge");
            }
        }
        let mut boundary_count = 0;
        for &(a, b) in &directed {
            if !directed.contains(&(b, a)) {
                boundary_count += 1;
                assert!(m.boundary_edges().iter().any(|e| e.vertices == [a, b]));
            }
        }
        assert_eq!(boundary_count, m.boundary_edges().len());
        // Closed loop: each edge ends where the next begins.
        let be = m.boundary_edges();
        for i in 0..be.len() {
            assert_eq!(be[i].vertices[1], be[(i + 1) % be.len()].vertices[0]);
            let (n, t) = (be[i].normal, be[i].tangent);
            assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-12);
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
            assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-12);
        }
        // Side edges reproduce the side endpoints.
        for id in m.all_sides() {
            let edges: Vec<_> = m.side_edges(id).collect();
            let side = m.side(id);
            let first = m.vertices()[edges[0].vertices[0]];
            let last = m.vertices()[edges[edges.len() - 1].vertices[1]];
            assert!(dist(first, side.start) < 1e-12 && dist(last, side.end) < 1e-12);
            let len: f64 = edges.iter().map(|e| m.edge_length(e)).sum();
            assert!((len - side.length()).abs() < 1e-10 * side.length());
        }
    }

    #[test]
    fn structural_invariants() {
        for n in [1, 2, 5, 9] {
            check_invariants(&build_unit_square_mesh(n).unwrap(), 1.0);
            check_invariants(&build_cook_mesh(n).unwrap(), 1440.0);
        }
    }

    #[test]
    fn text_round_trip_is_bit_stable() {
        let m = build_cook_mesh(3).unwrap();
        let text = m.to_text();
        let back = Mesh::from_text(&text).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.sides(), m.sides());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_text_rejected() {
        assert!(Mesh::from_text("VERTICES 1\n0 0\nTRIANGLES 1\n0 1 2\n").is_err());
        assert!(Mesh::from_text("NOPE 3\n").is_err());
    }
}
