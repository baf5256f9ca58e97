//! From learned rewards to planner-ready cost maps, shortest paths over
//! them, and the evaluation metrics: expected value difference against a
//! ground-truth reward and traversability classification against
//! demonstrations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{reject, Result};
use crate::mdp::{evaluate_greedy, hard_value_iteration, GridWorld, Mdp, RewardField};
use crate::medirl::DemoSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Learned,
    Handcrafted,
}

/// Positive per-cell traversal costs; obstacles carry an infinite
/// sentinel and are excluded from planning.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    pub width: usize,
    pub height: usize,
    pub costs: Vec<f64>,
    pub provenance: Provenance,
}

impl CostMap {
    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// `cost(s) = (max_s r - r(s)) + cost_floor`, with obstacles set to the
/// infinite sentinel. Order-reversing in the reward.
pub fn reward_to_costmap(
    grid: &GridWorld,
    reward: &RewardField,
    cost_floor: f64,
    provenance: Provenance,
) -> Result<CostMap> {
    if !(cost_floor > 0.0) || !cost_floor.is_finite() {
        return reject(format!("cost_floor must be positive, got {cost_floor}"));
    }
    if reward.len() != grid.n_states() {
        return reject("reward length must equal state count");
    }
    let max = reward.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let costs = (0..grid.n_states())
        .map(|s| {
            if grid.is_obstacle(s) {
                f64::INFINITY
            } else {
                (max - reward.values()[s]) + cost_floor
            }
        })
        .collect();
    Ok(CostMap {
        width: grid.width(),
        height: grid.height(),
        costs,
        provenance,
    })
}

/// Planned path: cells from start to goal inclusive, total entered-cell
/// cost (the start cell is free), and whether the goal was reachable.
/// Unreachable goals yield an empty path with zero cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub cells: Vec<usize>,
    pub total_cost: f64,
    pub reachable: bool,
}

/// Frontier entry ordered so the heap pops minimum (cost, row, col).
#[derive(Debug, PartialEq)]
struct FrontierEntry {
    cost: f64,
    row: usize,
    col: usize,
}

impl Eq for FrontierEntry {}

impl Ord for FrontierEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.row.cmp(&self.row))
            .then(other.col.cmp(&self.col))
    }
}

impl PartialOrd for FrontierEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Uniform-cost search over the 4-connected grid, minimizing the sum of
/// entered-cell costs. Frontier pops tie-break by (row, col).
pub fn plan_path(map: &CostMap, start: usize, goal: usize) -> Result<PathResult> {
    let n = map.n_cells();
    if start >= n || goal >= n {
        return reject("start and goal must be in bounds");
    }
    if !map.costs[start].is_finite() || !map.costs[goal].is_finite() {
        return reject("start and goal must be traversable cells");
    }
    if start == goal {
        return Ok(PathResult {
            cells: vec![start],
            total_cost: 0.0,
            reachable: true,
        });
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(FrontierEntry {
        cost: 0.0,
        row: start / map.width,
        col: start % map.width,
    });

    while let Some(entry) = heap.pop() {
        let s = map.index(entry.col, entry.row);
        if done[s] {
            continue;
        }
        done[s] = true;
        if s == goal {
            break;
        }
        let (x, y) = (entry.col as i64, entry.row as i64);
        for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if nx < 0 || ny < 0 || nx >= map.width as i64 || ny >= map.height as i64 {
                continue;
            }
            let t = map.index(nx as usize, ny as usize);
            if done[t] || !map.costs[t].is_finite() {
                continue;
            }
            let candidate = dist[s] + map.costs[t];
            if candidate < dist[t] {
                dist[t] = candidate;
                prev[t] = s;
                heap.push(FrontierEntry {
                    cost: candidate,
                    row: ny as usize,
                    col: nx as usize,
                });
            }
        }
    }

    if !done[goal] {
        return Ok(PathResult {
            cells: Vec::new(),
            total_cost: 0.0,
            reachable: false,
        });
    }
    let mut cells = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        cells.push(cur);
    }
    cells.reverse();
    Ok(PathResult {
        cells,
        total_cost: dist[goal],
        reachable: true,
    })
}

/// Expected value difference: how much return is lost by acting greedily
/// on the learned reward while being scored by the true one.
///
/// `EVD = E_start[V*_{r_true}] - E_start[V^{pi+}_{r_true}]` with `pi+`
/// the greedy policy of `r_learned` (ties by fixed action order).
pub fn evd(mdp: &Mdp, r_true: &RewardField, r_learned: &RewardField) -> Result<f64> {
    let optimal = hard_value_iteration(mdp, r_true)?;
    let greedy_learned = hard_value_iteration(mdp, r_learned)?.greedy;
    let v_cross = evaluate_greedy(mdp, &greedy_learned, r_true)?;
    let gap: f64 = mdp
        .start_dist()
        .iter()
        .enumerate()
        .map(|(s, &p)| p * (optimal.v[0][s] - v_cross[0][s]))
        .sum();
    debug_assert!(gap > -1e-9, "policy evaluation exceeded optimal value: {gap}");
    Ok(gap.max(0.0))
}

/// Cell-level precision/recall/F1 of "low cost" against "visited by any
/// demonstration".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversabilityScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when the prediction set was empty or all cells were predicted.
    pub degenerate: bool,
}

/// Predicts traversable cells as those whose cost is strictly below the
/// `threshold_quantile` empirical quantile (nearest-rank over finite
/// costs); scores them against demo-visited cells.
pub fn traversability_scores(
    map: &CostMap,
    demos: &DemoSet,
    threshold_quantile: f64,
) -> Result<TraversabilityScores> {
    if !(threshold_quantile > 0.0 && threshold_quantile < 1.0) {
        return reject(format!(
            "threshold_quantile must be in (0,1), got {threshold_quantile}"
        ));
    }
    if demos.is_empty() {
        return reject("demo set is empty");
    }
    let mut finite: Vec<f64> = map.costs.iter().cloned().filter(|c| c.is_finite()).collect();
    if finite.is_empty() {
        return reject("cost map has no traversable cells");
    }
    finite.sort_by(f64::total_cmp);
    let rank = ((threshold_quantile * finite.len() as f64).floor() as usize).min(finite.len() - 1);
    let threshold = finite[rank];

    let mut visited = vec![false; map.n_cells()];
    for traj in &demos.trajectories {
        for &s in &traj.states {
            if s >= visited.len() {
                return reject(format!("demo visits cell {s} outside the map"));
            }
            visited[s] = true;
        }
    }

    let predicted: Vec<bool> = map.costs.iter().map(|&c| c < threshold).collect();
    let n_pred = predicted.iter().filter(|&&p| p).count();
    let degenerate = n_pred == 0 || n_pred == map.n_cells();

    let tp = predicted
        .iter()
        .zip(&visited)
        .filter(|&(&p, &v)| p && v)
        .count() as f64;
    let fp = predicted
        .iter()
        .zip(&visited)
        .filter(|&(&p, &v)| p && !v)
        .count() as f64;
    let fn_ = predicted
        .iter()
        .zip(&visited)
        .filter(|&(&p, &v)| !p && v)
        .count() as f64;

    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(TraversabilityScores {
        precision,
        recall,
        f1,
        degenerate,
    })
}
