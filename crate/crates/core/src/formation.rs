//! Leader quad geometry and the derived hemispherical formation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{check_finite, Triangle, TriMesh, GEOM_EPS};
use crate::{Vec12, Vec3};

/// The four boundary UAVs `p1..p4` in cyclic order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderQuad {
    points: [Vec3; 4],
}

impl LeaderQuad {
    pub fn new(p1: Vec3, p2: Vec3, p3: Vec3, p4: Vec3) -> Result<Self> {
        Self::from_points([p1, p2, p3, p4])
    }

    pub fn from_points(points: [Vec3; 4]) -> Result<Self> {
        for p in &points {
            check_finite(p, "leader position")?;
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (points[i] - points[j]).norm() <= GEOM_EPS {
                    return Err(Error::DegenerateQuad);
                }
            }
        }
        Ok(LeaderQuad { points })
    }

    /// Axis-aligned square of side `side` with lower corner `origin` in the
    /// plane `x = origin.x`, wound so that its normal is `+x`.
    pub fn square_yz(origin: Vec3, side: f64) -> Result<Self> {
        Self::new(
            origin,
            origin + Vec3::new(0.0, side, 0.0),
            origin + Vec3::new(0.0, side, side),
            origin + Vec3::new(0.0, 0.0, side),
        )
    }

    pub fn from_vector(x: &Vec12) -> Result<Self> {
        Self::from_points(std::array::from_fn(|i| {
            Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2])
        }))
    }

    pub fn to_vector(&self) -> Vec12 {
        Vec12::from_fn(|k, _| self.points[k / 3][k % 3])
    }

    pub fn points(&self) -> &[Vec3; 4] {
        &self.points
    }

    pub fn centroid(&self) -> Vec3 {
        self.points.iter().sum::<Vec3>() / 4.0
    }

    /// Edge vectors `p_{i+1} - p_i` in cyclic order.
    pub fn edges(&self) -> [Vec3; 4] {
        std::array::from_fn(|i| self.points[(i + 1) % 4] - self.points[i])
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        Self::from_points(self.points.each_ref().map(f))
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..4 {
            for j in (i + 1)..4 {
                best = best.min((self.points[i] - self.points[j]).norm());
            }
        }
        best
    }

    /// Largest distance from the centroid to a leader.
    pub fn circumradius(&self) -> f64 {
        let c = self.centroid();
        self.points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
    }

    /// Vector area `(p3 - p1) x (p4 - p2)`: the sum of both cap triangles'
    /// doubled area vectors.
    fn doubled_area_vector(&self) -> Vec3 {
        let [p1, p2, p3, p4] = self.points;
        (p3 - p1).cross(&(p4 - p2))
    }

    /// Flat cap `S1` as two triangles split along `p1`-`p3`.
    pub fn cap_triangles(&self) -> [Triangle; 2] {
        let [p1, p2, p3, p4] = self.points;
        [
            Triangle { a: p1, b: p2, c: p3 },
            Triangle { a: p1, b: p3, c: p4 },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFrame {
    pub centroid: Vec3,
    /// Unit normal; `p1 -> p2 -> p3 -> p4` is counter-clockwise seen from it.
    pub normal: Vec3,
    /// Orthonormal in-plane axes; `axes[0] x axes[1] = normal`.
    pub axes: [Vec3; 2],
}

pub fn quad_frame(quad: &LeaderQuad) -> Result<QuadFrame> {
    let area = quad.doubled_area_vector();
    let norm = area.norm();
    if norm <= GEOM_EPS {
        return Err(Error::DegenerateQuad);
    }
    let normal = area / norm;
    let centroid = quad.centroid();
    let [p1, ..] = *quad.points();
    let radial = p1 - centroid;
    let in_plane = radial - normal * normal.dot(&radial);
    let e1 = if in_plane.norm() > GEOM_EPS {
        in_plane.normalize()
    } else {
        normal.cross(&Vec3::x()).try_normalize(GEOM_EPS).unwrap_or_else(|| normal.cross(&Vec3::y()).normalize())
    };
    let e2 = normal.cross(&e1);
    Ok(QuadFrame {
        centroid,
        normal,
        axes: [e1, e2],
    })
}

/// Nine-UAV hemisphere: four leaders on the cap rim, four followers on a
/// ring `r/2` behind the cap and one follower at the pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemisphereFormation {
    pub leaders: LeaderQuad,
    /// `f1..f4` on the ring, then `f5` at the pole.
    pub followers: [Vec3; 5],
    pub radius: f64,
    pub normal: Vec3,
    /// Sphere centre; the leaders' centroid.
    pub center: Vec3,
}

impl HemisphereFormation {
    /// All nine positions, leaders first.
    pub fn positions(&self) -> [Vec3; 9] {
        let l = self.leaders.points();
        let f = &self.followers;
        [l[0], l[1], l[2], l[3], f[0], f[1], f[2], f[3], f[4]]
    }

    /// Curved surface `S2` through all nine UAVs, wound so that together
    /// with the cap it forms an outward-oriented closed surface.
    pub fn curved_surface(&self) -> Result<TriMesh> {
        let p = self.leaders.points();
        let f = &self.followers;
        let mut tris = Vec::with_capacity(12);
        for i in 0..4 {
            let j = (i + 1) % 4;
            tris.push(Triangle::new(p[j], p[i], f[i])?);
            tris.push(Triangle::new(p[j], f[i], f[j])?);
            tris.push(Triangle::new(f[j], f[i], f[4])?);
        }
        TriMesh::open(tris)
    }

    /// Cap plus curved surface as a closed mesh.
    pub fn closed_surface(&self) -> Result<TriMesh> {
        let mut tris = self.leaders.cap_triangles().to_vec();
        tris.extend_from_slice(self.curved_surface()?.triangles());
        TriMesh::closed(tris)
    }
}

/// Ratio of planarity defect to mean side length above which followers are
/// not derived.
pub const MAX_PLANARITY_RATIO: f64 = 0.1;

/// Places the five followers rigidly relative to the leaders.
///
/// The sphere radius `r` is half the mean diagonal. `f1..f4` sit behind the
/// edge midpoints at depth `r/2` on the sphere, so their in-plane radius is
/// `r * sqrt(3) / 2`; `f5` sits at depth `r`.
pub fn derive_followers(quad: &LeaderQuad) -> Result<HemisphereFormation> {
    let frame = quad_frame(quad)?;
    let metrics = shape_metrics(quad);
    let mean_side = metrics.side_lengths.iter().sum::<f64>() / 4.0;
    let limit = MAX_PLANARITY_RATIO * mean_side;
    if metrics.planarity_defect >= limit {
        return Err(Error::NonPlanarQuad {
            defect: metrics.planarity_defect,
            limit,
        });
    }
    let radius = (metrics.diagonals[0] + metrics.diagonals[1]) / 4.0;
    let (c, n) = (frame.centroid, frame.normal);
    let ring_center = c - n * (radius / 2.0);
    let ring_radius = radius * 3f64.sqrt() / 2.0;
    let p = quad.points();
    let mut followers = [Vec3::zeros(); 5];
    for i in 0..4 {
        let mid = (p[i] + p[(i + 1) % 4]) / 2.0 - c;
        let dir = (mid - n * n.dot(&mid)).try_normalize(GEOM_EPS).ok_or(Error::DegenerateQuad)?;
        followers[i] = ring_center + dir * ring_radius;
    }
    followers[4] = c - n * radius;
    Ok(HemisphereFormation {
        leaders: *quad,
        followers,
        radius,
        normal: n,
        center: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMetrics {
    /// `|p2-p1|, |p3-p2|, |p4-p3|, |p1-p4|`.
    pub side_lengths: [f64; 4],
    /// `|p3-p1|, |p4-p2|`.
    pub diagonals: [f64; 2],
    /// Largest leader distance from the plane through the centroid.
    pub planarity_defect: f64,
    pub area: f64,
}

pub fn shape_metrics(quad: &LeaderQuad) -> ShapeMetrics {
    let p = quad.points();
    let side_lengths = quad.edges().map(|e| e.norm());
    let diagonals = [(p[2] - p[0]).norm(), (p[3] - p[1]).norm()];
    let area_vec = quad.doubled_area_vector();
    let (planarity_defect, area) = match area_vec.try_normalize(GEOM_EPS) {
        Some(n) => {
            let c = quad.centroid();
            let defect = p.iter().map(|q| n.dot(&(q - c)).abs()).fold(0.0, f64::max);
            (defect, area_vec.norm() / 2.0)
        }
        None => (0.0, 0.0),
    };
    ShapeMetrics {
        side_lengths,
        diagonals,
        planarity_defect,
        area,
    }
}
