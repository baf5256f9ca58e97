use std::collections::VecDeque;

use rand::Rng;

use crate::error::{reject, Result};
use crate::mdp::GridWorld;
use crate::nnet::Matrix;
use crate::rng::RunRng;

/// The four standard observation channels built for a grid.
pub const CHANNEL_NAMES: [&str; 4] = ["obstacle", "goal_dist", "appearance_a", "appearance_b"];

/// Per-state feature vectors over a grid, one named channel per column,
/// every channel normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    width: usize,
    height: usize,
    dim: usize,
    channel_names: Vec<String>,
    /// Row-major `(state, channel)`.
    data: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(
        width: usize,
        height: usize,
        channel_names: Vec<String>,
        data: Vec<f64>,
    ) -> Result<Self> {
        let dim = channel_names.len();
        if dim == 0 {
            return reject("feature grid needs at least one channel");
        }
        if data.len() != width * height * dim {
            return reject(format!(
                "feature data length {} does not match {}x{} states x {dim} channels",
                data.len(),
                width,
                height
            ));
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return reject("feature values must be finite and in [0, 1]");
        }
        Ok(FeatureGrid {
            width,
            height,
            dim,
            channel_names,
            data,
        })
    }

    /// One-hot (identity) features: channel `i` marks state `i`. Useful in
    /// tests where a linear model's weights are per-state rewards.
    pub fn identity(n_states: usize) -> Self {
        let mut data = vec![0.0; n_states * n_states];
        for s in 0..n_states {
            data[s * n_states + s] = 1.0;
        }
        FeatureGrid {
            width: n_states,
            height: 1,
            dim: n_states,
            channel_names: (0..n_states).map(|i| format!("state_{i}")).collect(),
            data,
        }
    }

    /// Builds the standard channels for a grid: obstacle indicator,
    /// normalized BFS goal distance, and two procedural "appearance"
    /// channels — smooth terrain fields (bilinear noise) blended with the
    /// obstacle and goal-proximity structure so appearance correlates
    /// with terrain class.
    pub fn for_grid(grid: &GridWorld, rng: &mut RunRng) -> Self {
        let n = grid.n_states();
        let obstacle: Vec<f64> = (0..n).map(|s| grid.is_obstacle(s) as u8 as f64).collect();
        let goal_dist = normalized_goal_distance(grid);
        let terrain_a = smooth_noise(grid, rng);
        let terrain_b = smooth_noise(grid, rng);
        let appearance_a: Vec<f64> = (0..n)
            .map(|s| 0.5 * obstacle[s] + 0.5 * terrain_a[s])
            .collect();
        let appearance_b: Vec<f64> = (0..n)
            .map(|s| 0.35 * (1.0 - goal_dist[s]) + 0.65 * terrain_b[s])
            .collect();

        let channels = [
            normalize(obstacle),
            goal_dist,
            normalize(appearance_a),
            normalize(appearance_b),
        ];
        let mut data = vec![0.0; n * 4];
        for s in 0..n {
            for (c, channel) in channels.iter().enumerate() {
                data[s * 4 + c] = channel[s];
            }
        }
        FeatureGrid {
            width: grid.width(),
            height: grid.height(),
            dim: 4,
            channel_names: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            data,
        }
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.dim..(s + 1) * self.dim]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        (0..self.n_states()).map(|s| self.row(s)[c]).collect()
    }

    /// All features as an `(n_states, dim)` matrix.
    pub fn as_matrix(&self) -> Matrix {
        Matrix::from_vec(self.n_states(), self.dim, self.data.clone())
            .expect("validated at construction")
    }
}

/// Spatially smooth noise in `[0, 1]`: bilinear interpolation of a
/// uniform 4x4 lattice, giving terrain-like coherent patches.
fn smooth_noise(grid: &GridWorld, rng: &mut RunRng) -> Vec<f64> {
    const K: usize = 4;
    let lattice: Vec<f64> = (0..K * K).map(|_| rng.gen::<f64>()).collect();
    let (w, h) = (grid.width(), grid.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let fx = if w > 1 {
                x as f64 / (w - 1) as f64 * (K - 1) as f64
            } else {
                0.0
            };
            let fy = if h > 1 {
                y as f64 / (h - 1) as f64 * (K - 1) as f64
            } else {
                0.0
            };
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(K - 1), (y0 + 1).min(K - 1));
            let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
            let top = lattice[y0 * K + x0] * (1.0 - tx) + lattice[y0 * K + x1] * tx;
            let bottom = lattice[y1 * K + x0] * (1.0 - tx) + lattice[y1 * K + x1] * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Min-max normalizes a channel to `[0, 1]`; constant channels pass
/// through clamped.
fn normalize(channel: Vec<f64>) -> Vec<f64> {
    let min = channel.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = channel.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        channel.iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        channel.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    }
}

/// BFS hop distance from the nearest terminal over non-obstacle cells,
/// 4-connected, normalized by the largest finite distance. Obstacles and
/// unreachable cells get 1.0.
fn normalized_goal_distance(grid: &GridWorld) -> Vec<f64> {
    let n = grid.n_states();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if grid.is_terminal(s) {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        let (x, y) = grid.coords(s);
        let mut push = |nx: i64, ny: i64| {
            if nx < 0 || ny < 0 || nx >= grid.width() as i64 || ny >= grid.height() as i64 {
                return;
            }
            let t = grid.index(nx as usize, ny as usize);
            if !grid.is_obstacle(t) && dist[t] == usize::MAX {
                dist[t] = dist[s] + 1;
                queue.push_back(t);
            }
        };
        push(x as i64 + 1, y as i64);
        push(x as i64 - 1, y as i64);
        push(x as i64, y as i64 + 1);
        push(x as i64, y as i64 - 1);
    }
    let max = dist
        .iter()
        .filter(|&&d| d != usize::MAX)
        .max()
        .copied()
        .unwrap_or(0)
        .max(1);
    dist.iter()
        .map(|&d| {
            if d == usize::MAX {
                1.0
            } else {
                d as f64 / max as f64
            }
        })
        .collect()
}

/// Spatially shifts every channel by `(dx, dy)` cells, filling vacated
/// cells with the channel's mean over the original grid. Models a
/// systematic calibration offset between sensing channels.
pub fn apply_miscalibration(features: &FeatureGrid, dx: i64, dy: i64) -> Result<FeatureGrid> {
    let (w, h) = (features.width as i64, features.height as i64);
    if dx.abs() >= w || dy.abs() >= h {
        return reject(format!("shift ({dx}, {dy}) out of range for {w}x{h} grid"));
    }
    let n = features.n_states();
    let dim = features.dim;
    let means: Vec<f64> = (0..dim)
        .map(|c| features.channel(c).iter().sum::<f64>() / n as f64)
        .collect();
    let mut data = vec![0.0; n * dim];
    for y in 0..h {
        for x in 0..w {
            let s = (y * w + x) as usize;
            let (sx, sy) = (x - dx, y - dy);
            for c in 0..dim {
                data[s * dim + c] = if sx >= 0 && sy >= 0 && sx < w && sy < h {
                    let src = (sy * w + sx) as usize;
                    features.row(src)[c]
                } else {
                    means[c]
                };
            }
        }
    }
    FeatureGrid::new(
        features.width,
        features.height,
        features.channel_names.clone(),
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_rng;

    fn fixture_grid() -> GridWorld {
        GridWorld::open(4, 4, 8)
            .with_obstacles(&[(1, 1), (2, 1)])
            .with_terminals(&[(3, 3)])
            .with_start_cells(&[(0, 0)])
    }

    #[test]
    fn channels_are_normalized_and_named() {
        let grid = fixture_grid();
        let f = FeatureGrid::for_grid(&grid, &mut seed_rng(9));
        assert_eq!(f.dim(), 4);
        assert_eq!(f.channel_names()[0], "obstacle");
        for c in 0..4 {
            for v in f.channel(c) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        // Goal distance is zero at the goal and maximal somewhere else.
        let gd = f.channel(1);
        assert_eq!(gd[grid.index(3, 3)], 0.0);
        assert!(gd.iter().cloned().fold(0.0, f64::max) == 1.0);
    }

    #[test]
    fn zero_shift_is_identity() {
        let grid = fixture_grid();
        let f = FeatureGrid::for_grid(&grid, &mut seed_rng(9));
        let shifted = apply_miscalibration(&f, 0, 0).unwrap();
        assert_eq!(f, shifted);
    }

    #[test]
    fn shift_then_inverse_differs_only_at_border_fill() {
        let grid = fixture_grid();
        let f = FeatureGrid::for_grid(&grid, &mut seed_rng(9));
        let there = apply_miscalibration(&f, 1, 0).unwrap();
        let back = apply_miscalibration(&there, -1, 0).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let s = grid.index(x, y);
                // Column x = 3 was vacated by the inverse shift.
                if x == 3 {
                    continue;
                }
                for c in 0..4 {
                    assert!(
                        (f.row(s)[c] - back.row(s)[c]).abs() < 1e-15,
                        "interior cell ({x},{y}) channel {c} changed"
                    );
                }
            }
        }
    }

    #[test]
    fn obstacle_channel_shift_matches_hand_layout() {
        // 4x4 fixture, obstacles at (1,1) and (2,1); shifting by (1, 0)
        // moves the indicator to (2,1) and (3,1); column 0 becomes fill.
        let grid = fixture_grid();
        let f = FeatureGrid::for_grid(&grid, &mut seed_rng(9));
        let shifted = apply_miscalibration(&f, 1, 0).unwrap();
        let fill = 2.0 / 16.0; // channel mean: two obstacle cells
        let ch: Vec<f64> = shifted.channel(0);
        for y in 0..4 {
            for x in 0..4 {
                let expected = if x == 0 {
                    fill
                } else if y == 1 && (x == 2 || x == 3) {
                    1.0
                } else {
                    0.0
                };
                assert!(
                    (ch[grid.index(x, y)] - expected).abs() < 1e-15,
                    "cell ({x},{y}): {} vs {expected}",
                    ch[grid.index(x, y)]
                );
            }
        }
    }

    #[test]
    fn out_of_range_shift_is_rejected() {
        let grid = fixture_grid();
        let f = FeatureGrid::for_grid(&grid, &mut seed_rng(9));
        assert!(apply_miscalibration(&f, 4, 0).is_err());
        assert!(apply_miscalibration(&f, 0, -4).is_err());
    }

    #[test]
    fn identity_features_are_one_hot() {
        let f = FeatureGrid::identity(3);
        assert_eq!(f.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(f.as_matrix(), crate::nnet::Matrix::identity(3));
    }
}
