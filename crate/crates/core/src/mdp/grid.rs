use serde::{Deserialize, Serialize};

use crate::error::{reject, Result};
use crate::mdp::tabular::Mdp;

/// The five gridworld actions. The declaration order `N < S < E < W < STAY`
/// is the fixed tie-break order used by greedy argmax everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    N,
    S,
    E,
    W,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::N, Action::S, Action::E, Action::W, Action::Stay];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        match self {
            Action::N => 0,
            Action::S => 1,
            Action::E => 2,
            Action::W => 3,
            Action::Stay => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Grid displacement. `y` grows downward (row 0 is the top row), so
    /// north is `(0, -1)`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Action::N => (0, -1),
            Action::S => (0, 1),
            Action::E => (1, 0),
            Action::W => (-1, 0),
            Action::Stay => (0, 0),
        }
    }

    /// The two lateral slip directions; `Stay` has none.
    fn laterals(self) -> Option<(Action, Action)> {
        match self {
            Action::N | Action::S => Some((Action::E, Action::W)),
            Action::E | Action::W => Some((Action::N, Action::S)),
            Action::Stay => None,
        }
    }
}

/// A rectangular gridworld with slip noise, an optional action remap,
/// absorbing terminals, and a finite horizon.
///
/// States are indexed row-major: `s = y * width + x` with `(0, 0)` the
/// top-left cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: usize,
    height: usize,
    obstacle: Vec<bool>,
    terminal: Vec<bool>,
    p_slip: f64,
    action_remap: [Action; 5],
    horizon: usize,
    discount: f64,
    start_dist: Vec<f64>,
}

impl GridWorld {
    /// An open grid: no obstacles or terminals, deterministic moves,
    /// `gamma = 1`, start fixed at the top-left cell.
    pub fn open(width: usize, height: usize, horizon: usize) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        let n = width * height;
        let mut start_dist = vec![0.0; n];
        start_dist[0] = 1.0;
        GridWorld {
            width,
            height,
            obstacle: vec![false; n],
            terminal: vec![false; n],
            p_slip: 0.0,
            action_remap: Action::ALL,
            horizon,
            discount: 1.0,
            start_dist,
        }
    }

    pub fn with_obstacles(mut self, cells: &[(usize, usize)]) -> Self {
        for &(x, y) in cells {
            let s = self.index(x, y);
            self.obstacle[s] = true;
        }
        self
    }

    pub fn with_terminals(mut self, cells: &[(usize, usize)]) -> Self {
        for &(x, y) in cells {
            let s = self.index(x, y);
            self.terminal[s] = true;
        }
        self
    }

    pub fn with_p_slip(mut self, p_slip: f64) -> Self {
        self.p_slip = p_slip;
        self
    }

    pub fn with_action_remap(mut self, remap: [Action; 5]) -> Self {
        self.action_remap = remap;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    /// Uniform start distribution over the given cells.
    pub fn with_start_cells(mut self, cells: &[(usize, usize)]) -> Self {
        assert!(!cells.is_empty(), "need at least one start cell");
        self.start_dist = vec![0.0; self.n_states()];
        let w = 1.0 / cells.len() as f64;
        for &(x, y) in cells {
            let s = self.index(x, y);
            self.start_dist[s] += w;
        }
        self
    }

    pub fn with_start_dist(mut self, dist: Vec<f64>) -> Self {
        self.start_dist = dist;
        self
    }

    /// Validates every invariant; call after construction.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if !(self.p_slip >= 0.0 && self.p_slip < 1.0) {
            return reject(format!("p_slip must be in [0,1), got {}", self.p_slip));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return reject(format!("discount must be in (0,1], got {}", self.discount));
        }
        if self.start_dist.len() != n {
            return reject("start_dist length must equal state count");
        }
        let total: f64 = self.start_dist.iter().sum();
        if (total - 1.0).abs() > 1e-12 || self.start_dist.iter().any(|&p| p < 0.0) {
            return reject(format!("start_dist must sum to 1, got {total}"));
        }
        for s in 0..n {
            if self.obstacle[s] && self.terminal[s] {
                return reject(format!("cell {s} is both obstacle and terminal"));
            }
            if self.obstacle[s] && self.start_dist[s] > 0.0 {
                return reject(format!("start_dist places mass on obstacle cell {s}"));
            }
        }
        let mut seen = [false; 5];
        for a in self.action_remap {
            seen[a.index()] = true;
        }
        if seen != [true; 5] {
            return reject("action_remap must be a permutation of the five actions");
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn p_slip(&self) -> f64 {
        self.p_slip
    }

    pub fn start_dist(&self) -> &[f64] {
        &self.start_dist
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        assert!(x < self.width && y < self.height, "cell ({x},{y}) out of bounds");
        y * self.width + x
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        assert!(s < self.n_states(), "state {s} out of bounds");
        (s % self.width, s / self.width)
    }

    pub fn is_obstacle(&self, s: usize) -> bool {
        self.obstacle[s]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn obstacle_mask(&self) -> &[bool] {
        &self.obstacle
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    /// Destination of a single move, with walls and obstacles resolving to
    /// staying put.
    fn resolve_move(&self, s: usize, a: Action) -> usize {
        let (x, y) = self.coords(s);
        let (dx, dy) = a.delta();
        let nx = x as i64 + dx;
        let ny = y as i64 + dy;
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            return s;
        }
        let t = self.index(nx as usize, ny as usize);
        if self.obstacle[t] {
            s
        } else {
            t
        }
    }

    /// Transition distribution for taking `a` in `s`.
    ///
    /// The remapped action's move gets `1 - p_slip` and its two lateral
    /// moves `p_slip / 2` each; `STAY` never slips. Terminal states are
    /// absorbing under every action. The result is sorted by state index
    /// with duplicate outcomes merged.
    pub fn transition(&self, s: usize, a: Action) -> Result<Vec<(usize, f64)>> {
        if s >= self.n_states() {
            return reject(format!("state {s} out of bounds"));
        }
        if self.obstacle[s] {
            return reject(format!("state {s} is an obstacle"));
        }
        if self.terminal[s] {
            return Ok(vec![(s, 1.0)]);
        }
        let executed = self.action_remap[a.index()];
        let mut outcomes: Vec<(usize, f64)> = Vec::with_capacity(3);
        let mut push = |state: usize, p: f64| {
            if p == 0.0 {
                return;
            }
            match outcomes.iter_mut().find(|(t, _)| *t == state) {
                Some((_, q)) => *q += p,
                None => outcomes.push((state, p)),
            }
        };
        match executed.laterals() {
            Some((l1, l2)) if self.p_slip > 0.0 => {
                push(self.resolve_move(s, executed), 1.0 - self.p_slip);
                push(self.resolve_move(s, l1), self.p_slip / 2.0);
                push(self.resolve_move(s, l2), self.p_slip / 2.0);
            }
            _ => push(self.resolve_move(s, executed), 1.0),
        }
        outcomes.sort_by_key(|&(t, _)| t);
        Ok(outcomes)
    }

    /// Compiles the grid to the flat tabular form the solvers consume.
    pub fn to_mdp(&self) -> Result<Mdp> {
        self.validate()?;
        let n = self.n_states();
        let mut transitions = vec![Vec::new(); n * Action::COUNT];
        for s in 0..n {
            if self.obstacle[s] {
                // Unreachable given the invariants; self-loop keeps rows valid.
                for a in 0..Action::COUNT {
                    transitions[s * Action::COUNT + a] = vec![(s, 1.0)];
                }
                continue;
            }
            for a in Action::ALL {
                transitions[s * Action::COUNT + a.index()] = self.transition(s, a)?;
            }
        }
        Mdp::new(
            n,
            Action::COUNT,
            transitions,
            self.terminal.clone(),
            self.horizon,
            self.discount,
            self.start_dist.clone(),
            Action::Stay.index(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_transition_moves_north() {
        let g = GridWorld::open(3, 3, 4);
        let s = g.index(1, 1);
        let t = g.transition(s, Action::N).unwrap();
        assert_eq!(t, vec![(g.index(1, 0), 1.0)]);
    }

    #[test]
    fn terminal_states_absorb() {
        let g = GridWorld::open(3, 3, 4).with_terminals(&[(2, 2)]);
        let s = g.index(2, 2);
        for a in Action::ALL {
            assert_eq!(g.transition(s, a).unwrap(), vec![(s, 1.0)]);
        }
    }

    #[test]
    fn slip_splits_probability_east() {
        let g = GridWorld::open(3, 3, 4).with_p_slip(0.2);
        let s = g.index(1, 1);
        let t = g.transition(s, Action::E).unwrap();
        // east 0.8, north 0.1, south 0.1 — sorted by state index
        assert_eq!(
            t,
            vec![
                (g.index(1, 0), 0.1),
                (g.index(2, 1), 0.8),
                (g.index(1, 2), 0.1)
            ]
        );
    }

    #[test]
    fn wall_bumps_resolve_to_staying() {
        let g = GridWorld::open(2, 2, 4).with_p_slip(0.2);
        let s = g.index(0, 0);
        let t = g.transition(s, Action::N).unwrap();
        // intended north hits the wall (stay), laterals east/west: west also walls
        let total: f64 = t.iter().map(|&(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(t[0].0, s);
        assert!((t[0].1 - 0.9).abs() < 1e-15);
        assert_eq!(t[1], (g.index(1, 0), 0.1));
    }

    #[test]
    fn obstacle_source_is_rejected() {
        let g = GridWorld::open(3, 3, 4).with_obstacles(&[(1, 1)]);
        assert!(g.transition(g.index(1, 1), Action::N).is_err());
    }

    #[test]
    fn stay_never_slips() {
        let g = GridWorld::open(3, 3, 4).with_p_slip(0.5);
        let s = g.index(1, 1);
        assert_eq!(g.transition(s, Action::Stay).unwrap(), vec![(s, 1.0)]);
    }

    #[test]
    fn action_remap_applies_before_dynamics() {
        let flip = [Action::S, Action::N, Action::W, Action::E, Action::Stay];
        let g = GridWorld::open(3, 3, 4).with_action_remap(flip);
        let s = g.index(1, 1);
        assert_eq!(g.transition(s, Action::N).unwrap(), vec![(g.index(1, 2), 1.0)]);
    }

    #[test]
    fn validate_rejects_overlapping_masks() {
        let g = GridWorld::open(2, 2, 4)
            .with_obstacles(&[(0, 1)])
            .with_terminals(&[(0, 1)]);
        assert!(g.validate().is_err());
    }

    #[test]
    fn transitions_sum_to_one_everywhere() {
        let g = GridWorld::open(4, 3, 6)
            .with_p_slip(0.3)
            .with_obstacles(&[(1, 1), (2, 0)])
            .with_terminals(&[(3, 2)])
            .with_start_cells(&[(0, 0)]);
        g.validate().unwrap();
        for s in 0..g.n_states() {
            if g.is_obstacle(s) {
                continue;
            }
            for a in Action::ALL {
                let t = g.transition(s, a).unwrap();
                let total: f64 = t.iter().map(|&(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for (next, p) in t {
                    assert!(p > 0.0);
                    assert!(!g.is_obstacle(next), "support on obstacle cell");
                }
            }
        }
    }
}
