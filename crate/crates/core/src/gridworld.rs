//! Grid navigation benchmark: a robot on a `width × height` board with
//! lateral slips, wall bounces, a Gaussian reward field around a few reward
//! waypoints, and Gaussian-bump features around a lattice of feature
//! waypoints.
//!
//! Cells are `(x1, x2)` with `(0, 0)` at the south-west corner and state
//! index `x1 + width · x2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{argmax_first, DeterministicPolicy, Mdp};
use crate::policy::FeatureMap;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Moves, in action-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    North = 0,
    East = 1,
    West = 2,
    South = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::East, Action::West, Action::South];

    fn delta(self) -> (i64, i64) {
        match self {
            Action::North => (0, 1),
            Action::East => (1, 0),
            Action::West => (-1, 0),
            Action::South => (0, -1),
        }
    }

    /// The two moves perpendicular to this one.
    fn laterals(self) -> [Action; 2] {
        match self {
            Action::North | Action::South => [Action::West, Action::East],
            Action::East | Action::West => [Action::South, Action::North],
        }
    }

    /// Left-right mirror image.
    pub fn mirrored(self) -> Action {
        match self {
            Action::East => Action::West,
            Action::West => Action::East,
            a => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWaypoint {
    pub x: i64,
    pub y: i64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: i64,
    pub y: i64,
}

/// Board geometry, slip model and waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub intended_prob: f64,
    pub slip_prob: f64,
    pub reward_waypoints: Vec<RewardWaypoint>,
    pub feature_waypoints: Vec<Waypoint>,
}

impl Default for GridSpec {
    /// 13×13 board; 36 feature waypoints on the lattice `{1, 3, …, 11}²`
    /// numbered row by row from the south-west; reward 1 at waypoints 1 and
    /// 36, reward 20 at waypoints 6 and 31.
    fn default() -> Self {
        let lattice = [1, 3, 5, 7, 9, 11];
        let feature_waypoints = lattice
            .iter()
            .flat_map(|&y| lattice.iter().map(move |&x| Waypoint { x, y }))
            .collect();
        GridSpec {
            width: 13,
            height: 13,
            intended_prob: 0.8,
            slip_prob: 0.1,
            reward_waypoints: vec![
                RewardWaypoint { x: 1, y: 1, r: 1.0 },
                RewardWaypoint { x: 11, y: 1, r: 20.0 },
                RewardWaypoint { x: 1, y: 11, r: 20.0 },
                RewardWaypoint { x: 11, y: 11, r: 1.0 },
            ],
            feature_waypoints,
        }
    }
}

fn gaussian_bump(dx: f64, dy: f64) -> f64 {
    INV_SQRT_2PI * (-(dx * dx + dy * dy) / 2.0).exp()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("grid must have at least one cell".into()));
        }
        if self.intended_prob < 0.0
            || self.slip_prob < 0.0
            || (self.intended_prob + 2.0 * self.slip_prob - 1.0).abs() > 1e-12
        {
            return Err(Error::Config(format!(
                "intended_prob + 2 * slip_prob must be 1 (got {} and {})",
                self.intended_prob, self.slip_prob
            )));
        }
        let inside = |x: i64, y: i64| x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height;
        for w in &self.reward_waypoints {
            if !inside(w.x, w.y) || !w.r.is_finite() {
                return Err(Error::Config(format!("reward waypoint ({}, {}) is invalid", w.x, w.y)));
            }
        }
        for w in &self.feature_waypoints {
            if !inside(w.x, w.y) {
                return Err(Error::Config(format!("feature waypoint ({}, {}) outside the grid", w.x, w.y)));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state(&self, x1: usize, x2: usize) -> usize {
        x1 + self.width * x2
    }

    pub fn cell(&self, state: usize) -> (usize, usize) {
        (state % self.width, state / self.width)
    }

    /// Destination of a move, staying put when it would leave the board.
    pub fn step(&self, (x1, x2): (usize, usize), action: Action) -> (usize, usize) {
        let (dx, dy) = action.delta();
        let (nx, ny) = (x1 as i64 + dx, x2 as i64 + dy);
        if nx < 0 || ny < 0 || nx as usize >= self.width || ny as usize >= self.height {
            (x1, x2)
        } else {
            (nx as usize, ny as usize)
        }
    }

    /// Left-right mirror of the whole spec.
    pub fn mirrored(&self) -> GridSpec {
        let flip = |x: i64| self.width as i64 - 1 - x;
        GridSpec {
            reward_waypoints: self
                .reward_waypoints
                .iter()
                .map(|w| RewardWaypoint { x: flip(w.x), ..*w })
                .collect(),
            feature_waypoints: self
                .feature_waypoints
                .iter()
                .map(|w| Waypoint { x: flip(w.x), y: w.y })
                .collect(),
            ..self.clone()
        }
    }
}

/// `f(y) = Σ_x r_x (1/√2π) exp(−‖x − y‖²/2)` over reward waypoints.
pub fn reward_field(spec: &GridSpec, y: (f64, f64)) -> f64 {
    spec.reward_waypoints
        .iter()
        .map(|w| w.r * gaussian_bump(w.x as f64 - y.0, w.y as f64 - y.1))
        .sum()
}

/// Dynamics with slip and bounce; `R(x, a) = Σ_y P(y | x, a) f(y)`.
pub fn build_grid_mdp(spec: &GridSpec) -> Result<Mdp> {
    spec.validate()?;
    let n = spec.num_states();
    let h = Action::ALL.len();
    let field: Vec<f64> = (0..n)
        .map(|s| {
            let (x1, x2) = spec.cell(s);
            reward_field(spec, (x1 as f64, x2 as f64))
        })
        .collect();

    let mut transition = vec![0.0; n * h * n];
    let mut reward = vec![0.0; n * h];
    for s in 0..n {
        let cell = spec.cell(s);
        for action in Action::ALL {
            let a = action as usize;
            let row = &mut transition[(s * h + a) * n..(s * h + a + 1) * n];
            let (ix, iy) = spec.step(cell, action);
            row[spec.state(ix, iy)] += spec.intended_prob;
            for lateral in action.laterals() {
                let (lx, ly) = spec.step(cell, lateral);
                row[spec.state(lx, ly)] += spec.slip_prob;
            }
            reward[s * h + a] = row.iter().zip(&field).map(|(p, f)| p * f).sum();
        }
    }
    Mdp::new(n, h, transition, reward)
}

/// `φ_i(x, a)`: unit-height Gaussian bump of feature waypoint `i` evaluated
/// at the intended (post-bounce) next cell.
pub fn build_feature_map(spec: &GridSpec) -> Result<FeatureMap> {
    spec.validate()?;
    let k = spec.feature_waypoints.len();
    if k == 0 {
        return Err(Error::Config("no feature waypoints".into()));
    }
    let n = spec.num_states();
    let h = Action::ALL.len();
    let mut values = Vec::with_capacity(n * h * k);
    for s in 0..n {
        for action in Action::ALL {
            let (yx, yy) = spec.step(spec.cell(s), action);
            values.extend(
                spec.feature_waypoints
                    .iter()
                    .map(|w| gaussian_bump(w.x as f64 - yx as f64, w.y as f64 - yy as f64)),
            );
        }
    }
    FeatureMap::new(n, h, k, values)
}

/// Myopic baseline: the action with the largest expected next-step reward,
/// ties broken North < East < West < South.
pub fn greedy_policy(mdp: &Mdp) -> DeterministicPolicy {
    let h = mdp.num_actions();
    DeterministicPolicy(
        (0..mdp.num_states())
            .map(|x| argmax_first(&mdp.rewards()[x * h..(x + 1) * h]))
            .collect(),
    )
}
