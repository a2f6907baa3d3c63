//! Incremental 3D convex hull.
//!
//! Small, deterministic implementation tailored to the lifted landscape
//! points this crate feeds it (at most a few hundred): points are inserted
//! in input order, visible faces are found by signed distance, and the new
//! cone is built over the horizon edges. Face orientation is kept outward by
//! inheriting edge direction from the removed faces and double-checked
//! against an interior reference point.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Triangular hull facet with outward unit normal; `normal · x ≤ offset`
/// holds for every hull point (up to the construction tolerance).
#[derive(Debug, Clone, Copy)]
pub struct Face {
    pub vertices: [usize; 3],
    pub normal: [f64; 3],
    pub offset: f64,
}

impl Face {
    /// Signed distance of `p` above the face plane.
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        dot(self.normal, p) - self.offset
    }
}

/// Convex hull of a 3D point cloud.
#[derive(Debug, Clone)]
pub struct ConvexHull3 {
    /// Deduplicated input points; face vertices index into this list.
    pub points: Vec<[f64; 3]>,
    /// For each deduplicated point, the index it first appeared at in the
    /// original input.
    pub original_indices: Vec<usize>,
    pub faces: Vec<Face>,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Builds the hull of `input`. Errors with [`Error::Degenerate`] when the
/// points do not span three dimensions (fewer than 4 distinct points, or all
/// collinear/coplanar within tolerance).
pub fn convex_hull_3d(input: &[[f64; 3]]) -> Result<ConvexHull3> {
    for (i, p) in input.iter().enumerate() {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite point at index {i}")));
        }
    }
    let scale = input
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    let dedup_tol = 1e-12 * (1.0 + scale);

    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut original_indices = Vec::new();
    'outer: for (i, &p) in input.iter().enumerate() {
        for &q in &points {
            if norm(sub(p, q)) <= dedup_tol {
                continue 'outer;
            }
        }
        points.push(p);
        original_indices.push(i);
    }
    if points.len() < 4 {
        return Err(Error::Degenerate(format!(
            "convex hull needs at least 4 distinct points, got {}",
            points.len()
        )));
    }

    let eps = 1e-10 * (1.0 + 2.0 * scale);
    let (mut faces, interior) = initial_tetrahedron(&points, eps)?;
    let in_tetra: Vec<usize> = faces.iter().flat_map(|f| f.vertices).collect();

    for q_idx in 0..points.len() {
        if in_tetra.contains(&q_idx) {
            continue;
        }
        let q = points[q_idx];
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&fi| faces[fi].signed_distance(q) > eps)
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Horizon: undirected edges used exactly once by the visible set,
        // kept in the direction the visible face traverses them so that the
        // cone faces inherit the outward orientation.
        let mut edge_use: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut directed: Vec<(usize, usize)> = Vec::new();
        for &fi in &visible {
            let [a, b, c] = faces[fi].vertices;
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *edge_use.entry((u.min(v), u.max(v))).or_insert(0) += 1;
                directed.push((u, v));
            }
        }
        let mut new_faces = Vec::new();
        for (u, v) in directed {
            if edge_use[&(u.min(v), u.max(v))] == 1 {
                new_faces.push(make_face(&points, [u, v, q_idx], interior)?);
            }
        }
        if new_faces.is_empty() {
            return Err(Error::Degenerate(
                "hull update produced an empty horizon; input is numerically degenerate".into(),
            ));
        }
        let mut keep = Vec::with_capacity(faces.len() - visible.len() + new_faces.len());
        let mut vi = visible.iter().peekable();
        for (fi, face) in faces.into_iter().enumerate() {
            if vi.peek() == Some(&&fi) {
                vi.next();
            } else {
                keep.push(face);
            }
        }
        keep.extend(new_faces);
        faces = keep;
    }

    Ok(ConvexHull3 { points, original_indices, faces })
}

impl ConvexHull3 {
    /// Largest signed distance of any point above any face; a correct hull
    /// keeps this within the construction tolerance of zero.
    pub fn max_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for face in &self.faces {
            for &p in &self.points {
                worst = worst.max(face.signed_distance(p));
            }
        }
        worst
    }
}

fn make_face(points: &[[f64; 3]], vertices: [usize; 3], interior: [f64; 3]) -> Result<Face> {
    let [a, b, c] = vertices.map(|i| points[i]);
    let n = cross(sub(b, a), sub(c, a));
    let len = norm(n);
    if len < 1e-30 {
        return Err(Error::Degenerate("zero-area hull face".into()));
    }
    let mut normal = [n[0] / len, n[1] / len, n[2] / len];
    let mut offset = dot(normal, a);
    let mut verts = vertices;
    if dot(normal, interior) > offset {
        normal = [-normal[0], -normal[1], -normal[2]];
        offset = -offset;
        verts.swap(1, 2);
    }
    Ok(Face { vertices: verts, normal, offset })
}

/// Picks four affinely independent points (extreme pair, then farthest from
/// the line, then farthest from the plane) and returns the four outward faces
/// plus the tetrahedron centroid as interior reference.
fn initial_tetrahedron(points: &[[f64; 3]], eps: f64) -> Result<(Vec<Face>, [f64; 3])> {
    let mut p0 = 0;
    let mut p1 = 0;
    let mut best = -1.0;
    for axis in 0..3 {
        let lo = (0..points.len())
            .min_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))
            .unwrap();
        let hi = (0..points.len())
            .max_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))
            .unwrap();
        let d = norm(sub(points[hi], points[lo]));
        if d > best {
            best = d;
            p0 = lo;
            p1 = hi;
        }
    }
    if best <= eps {
        return Err(Error::Degenerate("all points coincide".into()));
    }

    let dir = sub(points[p1], points[p0]);
    let p2 = (0..points.len())
        .max_by(|&a, &b| {
            let da = norm(cross(sub(points[a], points[p0]), dir));
            let db = norm(cross(sub(points[b], points[p0]), dir));
            da.total_cmp(&db)
        })
        .unwrap();
    if norm(cross(sub(points[p2], points[p0]), dir)) / norm(dir) <= eps {
        return Err(Error::Degenerate("points are collinear".into()));
    }

    let plane_n = cross(sub(points[p1], points[p0]), sub(points[p2], points[p0]));
    let plane_unit = {
        let l = norm(plane_n);
        [plane_n[0] / l, plane_n[1] / l, plane_n[2] / l]
    };
    let p3 = (0..points.len())
        .max_by(|&a, &b| {
            let da = dot(plane_unit, sub(points[a], points[p0])).abs();
            let db = dot(plane_unit, sub(points[b], points[p0])).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    if dot(plane_unit, sub(points[p3], points[p0])).abs() <= eps {
        return Err(Error::Degenerate("points are coplanar".into()));
    }

    let ids = [p0, p1, p2, p3];
    let centroid = {
        let mut c = [0.0; 3];
        for &i in &ids {
            for k in 0..3 {
                c[k] += points[i][k] / 4.0;
            }
        }
        c
    };
    let faces = [
        [p0, p1, p2],
        [p0, p1, p3],
        [p0, p2, p3],
        [p1, p2, p3],
    ]
    .into_iter()
    .map(|t| make_face(points, t, centroid))
    .collect::<Result<Vec<_>>>()?;
    Ok((faces, centroid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn euler_characteristic(hull: &ConvexHull3) -> (usize, usize, usize) {
        let vertices: BTreeSet<usize> = hull.faces.iter().flat_map(|f| f.vertices).collect();
        let edges: BTreeSet<(usize, usize)> = hull
            .faces
            .iter()
            .flat_map(|f| {
                let [a, b, c] = f.vertices;
                [(a.min(b), a.max(b)), (b.min(c), b.max(c)), (c.min(a), c.max(a))]
            })
            .collect();
        (vertices.len(), edges.len(), hull.faces.len())
    }

    #[test]
    fn tetrahedron_has_four_outward_faces() {
        let pts = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let hull = convex_hull_3d(&pts).unwrap();
        assert_eq!(hull.faces.len(), 4);
        assert!(hull.max_violation() <= 1e-12);
        for face in &hull.faces {
            let n = face.normal;
            assert!((dot(n, n).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_triangulates_to_twelve_faces() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push([x, y, z]);
                }
            }
        }
        let hull = convex_hull_3d(&pts).unwrap();
        let (v, e, f) = euler_characteristic(&hull);
        assert_eq!((v, e, f), (8, 18, 12));
        assert!(hull.max_violation() <= 1e-10);
    }

    #[test]
    fn octahedron_has_eight_faces() {
        let pts = [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        let hull = convex_hull_3d(&pts).unwrap();
        let (v, e, f) = euler_characteristic(&hull);
        assert_eq!((v, e, f), (6, 12, 8));
    }

    #[test]
    fn interior_points_never_become_vertices() {
        let pts = [
            [0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [0.0, 2.0, 0.0],
            [0.0, 0.0, 2.0],
            [0.3, 0.3, 0.3], // inside
        ];
        let hull = convex_hull_3d(&pts).unwrap();
        assert_eq!(hull.faces.len(), 4);
        assert!(hull.faces.iter().all(|f| !f.vertices.contains(&4)));
    }

    #[test]
    fn duplicates_are_removed_before_hulling() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push([x, y, z]);
                    pts.push([x, y, z]);
                }
            }
        }
        let hull = convex_hull_3d(&pts).unwrap();
        assert_eq!(hull.points.len(), 8);
        assert_eq!(hull.faces.len(), 12);
        assert_eq!(hull.original_indices, vec![0, 2, 4, 6, 8, 10, 12, 14]);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(
            convex_hull_3d(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
            Err(Error::Degenerate(_))
        ));
        let collinear: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect();
        assert!(matches!(convex_hull_3d(&collinear), Err(Error::Degenerate(_))));
        let coplanar: Vec<[f64; 3]> = (0..8)
            .map(|i| [(i % 3) as f64, (i / 3) as f64, 1.5])
            .collect();
        assert!(matches!(convex_hull_3d(&coplanar), Err(Error::Degenerate(_))));
        assert!(convex_hull_3d(&[[f64::NAN, 0.0, 0.0]; 4]).is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<[f64; 3]> = (0..40)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let a = convex_hull_3d(&pts).unwrap();
        let b = convex_hull_3d(&pts).unwrap();
        assert_eq!(a.faces.len(), b.faces.len());
        for (fa, fb) in a.faces.iter().zip(&b.faces) {
            assert_eq!(fa.vertices, fb.vertices);
            assert_eq!(fa.offset.to_bits(), fb.offset.to_bits());
        }
    }

    /// Brute-force facet enumeration: a triple is a hull facet iff every
    /// other point lies (weakly) on one side of its plane.
    fn brute_force_facets(pts: &[[f64; 3]]) -> BTreeSet<[usize; 3]> {
        let n = pts.len();
        let mut facets = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let nn = cross(sub(pts[j], pts[i]), sub(pts[k], pts[i]));
                    let len = norm(nn);
                    if len < 1e-12 {
                        continue;
                    }
                    let unit = [nn[0] / len, nn[1] / len, nn[2] / len];
                    let off = dot(unit, pts[i]);
                    let (mut above, mut below) = (false, false);
                    for (m, &p) in pts.iter().enumerate() {
                        if m == i || m == j || m == k {
                            continue;
                        }
                        let d = dot(unit, p) - off;
                        if d > 1e-9 {
                            above = true;
                        }
                        if d < -1e-9 {
                            below = true;
                        }
                    }
                    if !(above && below) {
                        facets.insert([i, j, k]);
                    }
                }
            }
        }
        facets
    }

    #[test]
    fn matches_brute_force_facet_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for round in 0..10 {
            let pts: Vec<[f64; 3]> = (0..12)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect();
            let hull = convex_hull_3d(&pts).unwrap();
            assert!(
                hull.max_violation() <= 1e-9,
                "round {round}: violation {}",
                hull.max_violation()
            );
            let expected = brute_force_facets(&pts);
            let mut got = BTreeSet::new();
            for f in &hull.faces {
                let mut v = f.vertices;
                v.sort_unstable();
                // map deduplicated indices back to input indices
                got.insert([
                    hull.original_indices[v[0]],
                    hull.original_indices[v[1]],
                    hull.original_indices[v[2]],
                ]);
            }
            assert_eq!(got, expected, "round {round}: facet sets differ");
        }
    }

    #[test]
    fn random_clouds_satisfy_euler_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let pts: Vec<[f64; 3]> = (0..60)
                .map(|_| {
                    [
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                    ]
                })
                .collect();
            let hull = convex_hull_3d(&pts).unwrap();
            let (v, e, f) = euler_characteristic(&hull);
            assert_eq!(v + f, e + 2, "Euler formula violated: V={v} E={e} F={f}");
            assert!(hull.max_violation() <= 1e-9);
        }
    }
}
