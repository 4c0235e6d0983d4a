//! Independent solid-angle oracle: stratified Monte-Carlo integration of
//! `(r . n) / |r|^3` over the triangle.

use fluxguide::{Triangle, Vec3};
use rand::Rng;

/// Estimates the signed solid angle `tri` subtends at `p` from one random
/// sample in each of `4^depth` congruent sub-triangles.
pub fn monte_carlo_solid_angle(p: &Vec3, tri: &Triangle, depth: u32, rng: &mut impl Rng) -> f64 {
    let normal = tri.normal();
    let mut cells = vec![[tri.a, tri.b, tri.c]];
    for _ in 0..depth {
        cells = cells
            .into_iter()
            .flat_map(|[a, b, c]| {
                let (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0);
                [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
            })
            .collect();
    }
    let cell_area = 0.5 * tri.area_vector().norm() / cells.len() as f64;
    cells
        .iter()
        .map(|[a, b, c]| {
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            let r = a + (b - a) * u + (c - a) * v - p;
            r.dot(&normal) / r.norm().powi(3) * cell_area
        })
        .sum()
}
