use crate::formation::LeaderQuad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub quad: LeaderQuad,
}

/// Leader poses recorded once per planner iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub snapshots: Vec<Snapshot>,
    pub converged: bool,
    /// Sum over the four leaders of their polyline lengths, in metres.
    pub combined_length: f64,
}

impl PlannedPath {
    pub fn new(snapshots: Vec<Snapshot>, converged: bool) -> Self {
        let combined_length = combined_length(&snapshots);
        PlannedPath {
            snapshots,
            converged,
            combined_length,
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn first(&self) -> Option<&LeaderQuad> {
        self.snapshots.first().map(|s| &s.quad)
    }

    pub fn last(&self) -> Option<&LeaderQuad> {
        self.snapshots.last().map(|s| &s.quad)
    }

    pub fn quads(&self) -> impl Iterator<Item = &LeaderQuad> {
        self.snapshots.iter().map(|s| &s.quad)
    }

    /// Per-leader polyline lengths.
    pub fn leader_lengths(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for w in self.snapshots.windows(2) {
            for (i, len) in out.iter_mut().enumerate() {
                *len += (w[1].quad.points()[i] - w[0].quad.points()[i]).norm();
            }
        }
        out
    }
}

fn combined_length(snapshots: &[Snapshot]) -> f64 {
    snapshots
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].quad.points(), w[1].quad.points());
            (0..4).map(|i| (b[i] - a[i]).norm()).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    #[test]
    fn combined_length_sums_each_leader() {
        let q0 = LeaderQuad::square_yz(Vec3::zeros(), 1.0).unwrap();
        let q1 = q0.map(|p| p + Vec3::new(3.0, 0.0, 0.0)).unwrap();
        let q2 = q1.map(|p| p + Vec3::new(0.0, 4.0, 0.0)).unwrap();
        let path = PlannedPath::new(
            [q0, q1, q2]
                .into_iter()
                .enumerate()
                .map(|(iteration, quad)| Snapshot { iteration, quad })
                .collect(),
            true,
        );
        assert_eq!(path.combined_length, 28.0);
        assert_eq!(path.leader_lengths(), [7.0; 4]);
    }
}
