use rand::Rng as _;

use super::{Environment, StepResult};
use crate::rng::Rng;
use crate::{Error, Result};

const STEP_PENALTY: f64 = 0.1;
const EXIT_REWARD: f64 = 1.0;
const STEP_CAP_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MazeAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl MazeAction {
    pub const ALL: [MazeAction; 4] = [Self::Up, Self::Down, Self::Left, Self::Right];

    pub fn opposite(self) -> Self {
        match self {
            Self::Up => Self::Down,
            Self::Down => Self::Up,
            Self::Left => Self::Right,
            Self::Right => Self::Left,
        }
    }
}

impl TryFrom<usize> for MazeAction {
    type Error = Error;

    fn try_from(action: usize) -> Result<Self> {
        Self::ALL
            .get(action)
            .copied()
            .ok_or(Error::InvalidAction { action, count: 4 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MazePosition {
    pub x: usize,
    pub y: usize,
}

impl MazePosition {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Blocked flags indexed by [`MazeAction`] (up, down, left, right).
pub type Walls = [bool; 4];

/// Perfect maze on an m x m grid. Entry is (0,0), exit is (m-1,m-1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeGrid {
    size: usize,
    walls: Vec<Walls>,
}

impl MazeGrid {
    /// Randomized depth-first backtracker rooted at the entry.
    pub fn generate(size: usize, rng: &mut Rng) -> Result<Self> {
        if size < 2 {
            return Err(Error::MazeTooSmall(size));
        }
        let mut grid = Self::closed(size);
        let mut visited = vec![false; size * size];
        let mut stack = vec![grid.entry()];
        visited[0] = true;

        let mut options = Vec::with_capacity(4);
        while let Some(&cur) = stack.last() {
            options.clear();
            for dir in MazeAction::ALL {
                if let Some(next) = grid.neighbor(cur, dir) {
                    if !visited[grid.index(next)] {
                        options.push((dir, next));
                    }
                }
            }
            if options.is_empty() {
                stack.pop();
                continue;
            }
            let (dir, next) = options[rng.random_range(0..options.len())];
            grid.open(cur, dir);
            visited[grid.index(next)] = true;
            stack.push(next);
        }
        Ok(grid)
    }

    /// Grid with every wall present.
    pub fn closed(size: usize) -> Self {
        Self {
            size,
            walls: vec![[true; 4]; size * size],
        }
    }

    /// Build from explicit per-cell wall flags (row-major).
    pub fn from_walls(size: usize, walls: Vec<Walls>) -> Result<Self> {
        if size < 2 {
            return Err(Error::MazeTooSmall(size));
        }
        if walls.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: walls.len(),
            });
        }
        let grid = Self { size, walls };
        for y in 0..size {
            for x in 0..size {
                let p = MazePosition::new(x, y);
                for dir in MazeAction::ALL {
                    let consistent = match grid.neighbor(p, dir) {
                        None => grid.is_blocked(p, dir),
                        Some(q) => grid.is_blocked(p, dir) == grid.is_blocked(q, dir.opposite()),
                    };
                    if !consistent {
                        return Err(Error::InvalidConfig(format!(
                            "inconsistent wall at ({x},{y}) {dir:?}"
                        )));
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self) -> MazePosition {
        MazePosition::new(0, 0)
    }

    pub fn exit(&self) -> MazePosition {
        MazePosition::new(self.size - 1, self.size - 1)
    }

    pub fn walls(&self, p: MazePosition) -> Walls {
        self.walls[self.index(p)]
    }

    pub fn is_blocked(&self, p: MazePosition, dir: MazeAction) -> bool {
        self.walls[self.index(p)][dir as usize]
    }

    /// In-bounds neighbor ignoring walls.
    pub fn neighbor(&self, p: MazePosition, dir: MazeAction) -> Option<MazePosition> {
        let m = self.size;
        match dir {
            MazeAction::Up if p.y > 0 => Some(MazePosition::new(p.x, p.y - 1)),
            MazeAction::Down if p.y + 1 < m => Some(MazePosition::new(p.x, p.y + 1)),
            MazeAction::Left if p.x > 0 => Some(MazePosition::new(p.x - 1, p.y)),
            MazeAction::Right if p.x + 1 < m => Some(MazePosition::new(p.x + 1, p.y)),
            _ => None,
        }
    }

    /// Cell reached by moving `dir` from `p`, or `None` when a wall blocks it.
    pub fn passage(&self, p: MazePosition, dir: MazeAction) -> Option<MazePosition> {
        if self.is_blocked(p, dir) {
            None
        } else {
            self.neighbor(p, dir)
        }
    }

    /// Number of open internal passages (each counted once).
    pub fn passage_count(&self) -> usize {
        let mut n = 0;
        for y in 0..self.size {
            for x in 0..self.size {
                let p = MazePosition::new(x, y);
                n += usize::from(!self.is_blocked(p, MazeAction::Right));
                n += usize::from(!self.is_blocked(p, MazeAction::Down));
            }
        }
        n
    }

    pub fn contains(&self, p: MazePosition) -> bool {
        p.x < self.size && p.y < self.size
    }

    /// Normalized (x/(m-1), y/(m-1)) observation.
    pub fn observe(&self, p: MazePosition) -> Vec<f64> {
        let scale = (self.size - 1) as f64;
        vec![p.x as f64 / scale, p.y as f64 / scale]
    }

    pub fn step_penalty(&self) -> f64 {
        -STEP_PENALTY / (self.size * self.size) as f64
    }

    pub fn step_cap(&self) -> usize {
        STEP_CAP_FACTOR * self.size * self.size
    }

    /// Pure transition: new position and reward. Blocked moves stay put.
    pub fn transition(&self, p: MazePosition, dir: MazeAction) -> (MazePosition, f64) {
        let next = self.passage(p, dir).unwrap_or(p);
        let reward = if next == self.exit() {
            EXIT_REWARD
        } else {
            self.step_penalty()
        };
        (next, reward)
    }

    fn index(&self, p: MazePosition) -> usize {
        p.y * self.size + p.x
    }

    fn open(&mut self, p: MazePosition, dir: MazeAction) {
        let q = self.neighbor(p, dir).expect("opening a boundary wall");
        let (ip, iq) = (self.index(p), self.index(q));
        self.walls[ip][dir as usize] = false;
        self.walls[iq][dir.opposite() as usize] = false;
    }
}

/// Maze navigation episode on a fixed grid.
#[derive(Debug, Clone)]
pub struct Maze {
    grid: MazeGrid,
    pos: MazePosition,
    steps: usize,
    done: bool,
}

impl Maze {
    pub fn new(grid: MazeGrid) -> Self {
        let pos = grid.entry();
        Self {
            grid,
            pos,
            steps: 0,
            done: true,
        }
    }

    pub fn generate(size: usize, rng: &mut Rng) -> Result<Self> {
        Ok(Self::new(MazeGrid::generate(size, rng)?))
    }

    pub fn grid(&self) -> &MazeGrid {
        &self.grid
    }

    pub fn position(&self) -> MazePosition {
        self.pos
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Start a live episode at an arbitrary cell.
    pub fn set_position(&mut self, pos: MazePosition) -> Result<()> {
        if !self.grid.contains(pos) {
            return Err(Error::InvalidConfig(format!("position {pos:?} out of bounds")));
        }
        self.pos = pos;
        self.steps = 0;
        self.done = false;
        Ok(())
    }

    pub fn step_action(&mut self, dir: MazeAction) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let (next, reward) = self.grid.transition(self.pos, dir);
        self.pos = next;
        self.steps += 1;
        self.done = next == self.grid.exit() || self.steps >= self.grid.step_cap();
        Ok(StepResult {
            observation: self.grid.observe(next),
            reward,
            done: self.done,
            steps_taken: self.steps,
        })
    }
}

impl Environment for Maze {
    fn obs_dim(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        4
    }

    fn reset(&mut self) -> Vec<f64> {
        self.pos = self.grid.entry();
        self.steps = 0;
        self.done = false;
        self.grid.observe(self.pos)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        self.step_action(MazeAction::try_from(action)?)
    }

    fn observe(&self) -> Vec<f64> {
        self.grid.observe(self.pos)
    }

    fn max_episode_steps(&self) -> usize {
        self.grid.step_cap()
    }
}
