//! Flux of a point charge through triangulated surfaces.
//!
//! With the normalisation `1/(4 pi eps0) = 1`, the flux of a point charge `Q`
//! through a surface equals `Q * Omega / (4 pi)` where `Omega` is the signed
//! solid angle the surface subtends at the charge. Each triangle's solid
//! angle is evaluated in closed form with the Van Oosterom-Strackee
//! expression using `atan2`, which keeps the correct branch for obtuse
//! subtended angles.
//!
//! Sign convention: a triangle's normal follows its counter-clockwise
//! winding `(b - a) x (c - a)`. Flux is positive when the normal points away
//! from a positive charge and negative when it points toward it.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::formation::LeaderQuad;
use crate::Vec3;

/// Minimum doubled triangle area, in m^2, for a triangle to be non-degenerate.
pub const GEOM_EPS: f64 = 1e-12;

/// A charge closer than this to a surface, in metres, is considered on it.
pub const SURFACE_GUARD: f64 = 1e-9;

pub(crate) fn check_finite(v: &Vec3, what: &'static str) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Result<Self> {
        check_finite(&a, "triangle vertex")?;
        check_finite(&b, "triangle vertex")?;
        check_finite(&c, "triangle vertex")?;
        let tri = Triangle { a, b, c };
        if tri.area_vector().norm() <= GEOM_EPS {
            return Err(Error::DegenerateTriangle);
        }
        Ok(tri)
    }

    /// `(b - a) x (c - a)`: twice the area, along the winding normal.
    pub fn area_vector(&self) -> Vec3 {
        (self.b - self.a).cross(&(self.c - self.a))
    }

    pub fn normal(&self) -> Vec3 {
        self.area_vector().normalize()
    }

    pub fn reversed(&self) -> Self {
        Triangle {
            a: self.a,
            b: self.c,
            c: self.b,
        }
    }

    /// Euclidean distance from `p` to the closest point of the triangle.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        (closest_point(self, p) - p).norm()
    }
}

// Closest point on a triangle by Voronoi-region classification.
fn closest_point(t: &Triangle, p: &Vec3) -> Vec3 {
    let (a, b, c) = (t.a, t.b, t.c);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCharge {
    pub position: Vec3,
    pub charge: f64,
}

impl PointCharge {
    pub fn new(position: Vec3, charge: f64) -> Result<Self> {
        check_finite(&position, "charge position")?;
        if !charge.is_finite() {
            return Err(Error::NonFinite("charge"));
        }
        if charge == 0.0 {
            return Err(Error::ZeroCharge);
        }
        Ok(PointCharge { position, charge })
    }

    /// Unit charge at `position`.
    pub fn unit(position: Vec3) -> Result<Self> {
        Self::new(position, 1.0)
    }
}

/// Ordered triangle list with a consistent winding.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    triangles: Vec<Triangle>,
    closed: bool,
}

type EdgeKey = ([u64; 3], [u64; 3]);

fn vkey(v: &Vec3) -> [u64; 3] {
    // +0.0 and -0.0 must hash the same
    [v.x + 0.0, v.y + 0.0, v.z + 0.0].map(f64::to_bits)
}

impl TriMesh {
    pub fn open(triangles: Vec<Triangle>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok(TriMesh {
            triangles,
            closed: false,
        })
    }

    /// Builds a mesh flagged closed. Every directed edge must be matched by
    /// exactly one opposite edge; vertices are matched by exact coordinates.
    pub fn closed(triangles: Vec<Triangle>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut edges: HashMap<EdgeKey, i32> = HashMap::new();
        for t in &triangles {
            for (u, v) in [(t.a, t.b), (t.b, t.c), (t.c, t.a)] {
                let (ku, kv) = (vkey(&u), vkey(&v));
                *edges.entry((ku, kv)).or_default() += 1;
            }
        }
        let paired = edges
            .iter()
            .all(|(&(u, v), &n)| n == 1 && edges.get(&(v, u)) == Some(&1));
        if !paired {
            return Err(Error::OpenMesh);
        }
        Ok(TriMesh {
            triangles,
            closed: true,
        })
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Outward-wound icosahedron inscribed in the sphere of `radius` about `center`.
    pub fn icosahedron(center: Vec3, radius: f64) -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let verts: Vec<Vec3> = raw
            .iter()
            .map(|r| center + Vec3::new(r[0], r[1], r[2]).normalize() * radius)
            .collect();
        const FACES: [[usize; 3]; 20] = [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let triangles = FACES
            .iter()
            .map(|f| Triangle {
                a: verts[f[0]],
                b: verts[f[1]],
                c: verts[f[2]],
            })
            .collect();
        TriMesh::closed(triangles).expect("icosahedron is closed")
    }

    /// Outward-wound axis-aligned cube, two triangles per face.
    pub fn cube(center: Vec3, side: f64) -> Self {
        let h = side / 2.0;
        let v = |x: f64, y: f64, z: f64| center + Vec3::new(x * h, y * h, z * h);
        // each face listed counter-clockwise seen from outside
        let faces = [
            [v(1., -1., -1.), v(1., 1., -1.), v(1., 1., 1.), v(1., -1., 1.)],
            [v(-1., -1., -1.), v(-1., -1., 1.), v(-1., 1., 1.), v(-1., 1., -1.)],
            [v(-1., 1., -1.), v(-1., 1., 1.), v(1., 1., 1.), v(1., 1., -1.)],
            [v(-1., -1., -1.), v(1., -1., -1.), v(1., -1., 1.), v(-1., -1., 1.)],
            [v(-1., -1., 1.), v(1., -1., 1.), v(1., 1., 1.), v(-1., 1., 1.)],
            [v(-1., -1., -1.), v(-1., 1., -1.), v(1., 1., -1.), v(1., -1., -1.)],
        ];
        let mut triangles = Vec::with_capacity(12);
        for f in faces {
            triangles.push(Triangle { a: f[0], b: f[1], c: f[2] });
            triangles.push(Triangle { a: f[0], b: f[2], c: f[3] });
        }
        TriMesh::closed(triangles).expect("cube is closed")
    }
}

/// Signed solid angle, in steradians, that `tri` subtends at `charge_pos`.
///
/// The result lies in `(-2 pi, 2 pi)` and is positive when the triangle's
/// winding normal points away from `charge_pos`.
pub fn solid_angle_triangle(charge_pos: &Vec3, tri: &Triangle) -> Result<f64> {
    check_finite(charge_pos, "charge position")?;
    if tri.area_vector().norm() <= GEOM_EPS {
        return Err(Error::DegenerateTriangle);
    }
    let distance = tri.distance_to(charge_pos);
    if distance <= SURFACE_GUARD {
        return Err(Error::ChargeOnSurface { distance });
    }
    let a = tri.a - charge_pos;
    let b = tri.b - charge_pos;
    let c = tri.c - charge_pos;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let numerator = a.dot(&b.cross(&c));
    let denominator = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    Ok(2.0 * numerator.atan2(denominator))
}

/// Flux of `charge` through `mesh` under `1/(4 pi eps0) = 1`.
pub fn flux_surface(charge: &PointCharge, mesh: &TriMesh) -> Result<f64> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut omega = 0.0;
    for (index, tri) in mesh.triangles().iter().enumerate() {
        omega += solid_angle_triangle(&charge.position, tri).map_err(|e| Error::at_triangle(index, e))?;
    }
    Ok(charge.charge * omega / (4.0 * PI))
}

/// Flux through the flat cap spanned by the leaders, triangulated along the
/// `p1`-`p3` diagonal.
///
/// For a charge outside the closed formation surface this is the negation
/// of the flux through the curved hemisphere.
pub fn flux_quad_boundary(charge: &PointCharge, quad: &LeaderQuad) -> Result<f64> {
    let [p1, p2, p3, p4] = *quad.points();
    let t1 = Triangle { a: p1, b: p2, c: p3 };
    let t2 = Triangle { a: p1, b: p3, c: p4 };
    let mut omega = 0.0;
    for t in [t1, t2] {
        omega += match solid_angle_triangle(&charge.position, &t) {
            Err(Error::DegenerateTriangle) => return Err(Error::DegenerateQuad),
            other => other?,
        };
    }
    Ok(charge.charge * omega / (4.0 * PI))
}
