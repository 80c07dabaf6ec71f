//! Decentralized formation building: consensus-variable averaging over a
//! time-varying communication graph, the fictitious-target steering law, and
//! the randomized anonymous slot-assignment algorithm.
//!
//! Each robot keeps four consensus variables (heading, anchored origin x/y,
//! speed), averaged with its neighbors at integer communication instants and
//! held constant in between. The control law expresses everything in the
//! robot's own frame rotated to its heading estimate and chases a fictitious
//! target placed a fixed lead beyond the robot's formation slot, which keeps
//! the demanded turning rate bounded.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math::{turn_sign, ControlInput, RobotLimits, Vec2};
use crate::report::{CheckItem, ValidationReport};

/// Per-robot consensus variables, piecewise constant between instants.
/// The x/y entries are world-frame offsets; the anchored sums x + x_ofs and
/// y + y_ofs are the quantities that reach consensus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusState {
    /// Heading estimate (rad); initial values must lie in [0, pi).
    pub theta: f64,
    pub x_ofs: f64,
    pub y_ofs: f64,
    /// Common-speed estimate (m/s).
    pub v: f64,
}

/// Formation configuration shared by every robot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationConfig {
    /// Slot coordinates (X_i, Y_i) of the desired configuration.
    pub slots: Vec<Vec2>,
    /// Fictitious-target lead c; must exceed 2 V_max / omega_max.
    pub lead: f64,
    /// Robot detection range R for the anonymous variant.
    pub detection_range: f64,
    /// Vacancy radius epsilon, in (0, R/2).
    pub epsilon: f64,
    /// Communication periods per reassignment round (N).
    pub periods_per_round: usize,
}

impl FormationConfig {
    pub fn validate(&self, limits: &RobotLimits) -> ValidationReport {
        let mut report = ValidationReport::new("formation");
        let bound = 2.0 * limits.v_max / limits.u_max;
        report.items.push(CheckItem::new(
            "lead c > 2 V_max / omega_max (strict)",
            self.lead > bound,
            self.lead - bound,
        ));
        report.items.push(CheckItem::new(
            "0 < epsilon < R/2",
            self.epsilon > 0.0 && self.epsilon < self.detection_range / 2.0,
            (self.detection_range / 2.0 - self.epsilon).min(self.epsilon),
        ));
        let (_, connected) = slot_graph(self);
        report.items.push(CheckItem::new(
            "slot graph connected (edges where |slot_i - slot_j| <= R - 2 eps)",
            connected,
            if connected { 1.0 } else { -1.0 },
        ));
        report
    }
}

/// Neighbor lists of an undirected graph over n robots.
pub type Adjacency = Vec<Vec<usize>>;

/// One synchronous averaging round: every variable becomes the mean over
/// {self} + neighbors; the position-anchored offsets average the sums
/// (x_j + x_ofs_j) and subtract the robot's own position at k+1.
pub fn consensus_step(
    states: &[ConsensusState],
    positions_k: &[Vec2],
    positions_k1: &[Vec2],
    graph: &Adjacency,
) -> Vec<ConsensusState> {
    let n = states.len();
    assert!(positions_k.len() == n && positions_k1.len() == n && graph.len() == n);
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let mut theta = states[i].theta;
        let mut v = states[i].v;
        let mut sx = positions_k[i].x + states[i].x_ofs;
        let mut sy = positions_k[i].y + states[i].y_ofs;
        for &j in &graph[i] {
            theta += states[j].theta;
            v += states[j].v;
            sx += positions_k[j].x + states[j].x_ofs;
            sy += positions_k[j].y + states[j].y_ofs;
        }
        let count = (1 + graph[i].len()) as f64;
        next.push(ConsensusState {
            theta: theta / count,
            v: v / count,
            x_ofs: sx / count - positions_k1[i].x,
            y_ofs: sy / count - positions_k1[i].y,
        });
    }
    next
}

/// Rotated-frame quantities for one robot's steering decision.
#[derive(Debug, Clone, Copy)]
pub struct TargetFrame {
    /// Fictitious target in the theta-estimate-aligned frame.
    pub target: Vec2,
    /// Drifting slot abscissa h_i in that frame.
    pub h: f64,
    /// Robot position in that frame.
    pub position: Vec2,
    /// Frame rotation (the robot's heading estimate).
    pub rotation: f64,
}

/// World point -> coordinates in the frame rotated by `rotation`.
pub fn world_to_frame(p: Vec2, rotation: f64) -> Vec2 {
    p.rotated(-rotation)
}

/// Frame vector -> world coordinates.
pub fn frame_to_world(p: Vec2, rotation: f64) -> Vec2 {
    p.rotated(rotation)
}

/// Place the fictitious target for a robot: its slot anchored at the consensus
/// origin, drifting at the consensus speed, led by `c` along the frame x-axis.
pub fn fictitious_target(
    state: &ConsensusState,
    position_world: Vec2,
    slot: Vec2,
    lead: f64,
    t: f64,
) -> TargetFrame {
    let rotation = state.theta;
    let anchor_world = position_world + Vec2::new(state.x_ofs, state.y_ofs);
    let anchor = world_to_frame(anchor_world, rotation);
    let z = world_to_frame(position_world, rotation);
    let h = anchor.x + slot.x + t * state.v;
    let gx = if z.x <= h { h + lead } else { z.x + lead };
    let gy = anchor.y + slot.y;
    TargetFrame {
        target: Vec2::new(gx, gy),
        h,
        position: z,
        rotation,
    }
}

/// The steering law: full speed while behind the drifting slot abscissa, slow
/// otherwise; bang-bang turn of the velocity vector toward the fictitious
/// target.
pub fn formation_control(
    frame: &TargetFrame,
    velocity_world: Vec2,
    limits: &RobotLimits,
) -> ControlInput {
    let v = if frame.position.x <= frame.h {
        limits.v_max
    } else {
        limits.v_min
    };
    let d_world = frame_to_world(frame.target - frame.position, frame.rotation);
    let u = limits.u_max * f64::from(turn_sign(velocity_world, d_world));
    ControlInput::new(v, u)
}

/// Slot graph: vertices are slots, edges where the slot distance is at most
/// R - 2 epsilon. Returns the adjacency and a connectivity verdict.
pub fn slot_graph(config: &FormationConfig) -> (Adjacency, bool) {
    let n = config.slots.len();
    let reach = config.detection_range - 2.0 * config.epsilon;
    let mut adj: Adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if config.slots[i].distance(config.slots[j]) <= reach {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    (adj.clone(), is_connected(&adj))
}

fn is_connected(adj: &Adjacency) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// World-frame point of slot `j` as robot `i` projects it at time `t`.
pub fn slot_world_point(state: &ConsensusState, position_world: Vec2, slot: Vec2, t: f64) -> Vec2 {
    let anchor_world = position_world + Vec2::new(state.x_ofs, state.y_ofs);
    anchor_world + frame_to_world(Vec2::new(slot.x + t * state.v, slot.y), state.theta)
}

/// Outcome of one reassignment round.
#[derive(Debug, Clone)]
pub struct ReassignOutcome {
    pub assignment: Vec<usize>,
    /// Robots whose own slot was contested this round (b_i = 1).
    pub contested: Vec<usize>,
    /// Robots that drew a new index.
    pub changed: Vec<usize>,
}

/// One round of the randomized anonymous slot assignment.
///
/// A robot keeps its index unless another robot sits within epsilon of its
/// own projected slot point; then it draws uniformly among its current index
/// and the vacant slot-graph neighbors of that index.
pub fn reassign_slots<R: Rng>(
    assignment: &[usize],
    positions_world: &[Vec2],
    states: &[ConsensusState],
    config: &FormationConfig,
    slot_adj: &Adjacency,
    t: f64,
    rng: &mut R,
) -> ReassignOutcome {
    let n = assignment.len();
    let mut next = assignment.to_vec();
    let mut contested = Vec::new();
    let mut changed = Vec::new();
    for i in 0..n {
        let own_point = slot_world_point(
            &states[i],
            positions_world[i],
            config.slots[assignment[i]],
            t,
        );
        let busy =
            (0..n).any(|m| m != i && positions_world[m].distance(own_point) <= config.epsilon);
        if !busy {
            continue;
        }
        contested.push(i);
        let mut candidates = vec![assignment[i]];
        for &j in &slot_adj[assignment[i]] {
            let p = slot_world_point(&states[i], positions_world[i], config.slots[j], t);
            let vacant = (0..n).all(|m| positions_world[m].distance(p) > config.epsilon);
            if vacant {
                candidates.push(j);
            }
        }
        if candidates.len() == 1 {
            continue;
        }
        let pick = candidates[rng.gen_range(0..candidates.len())];
        if pick != assignment[i] {
            changed.push(i);
        }
        next[i] = pick;
    }
    ReassignOutcome {
        assignment: next,
        contested,
        changed,
    }
}

/// Communication graph schedules for the consensus rounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphSchedule {
    Complete,
    Ring,
    /// Random per-instant edges, repaired so every window of `window` instants
    /// is jointly connected: a random spanning tree is scattered over each
    /// window, plus independent extra edges.
    RandomJointlyConnected {
        window: usize,
        extra_edge_prob: f64,
    },
}

impl GraphSchedule {
    pub fn adjacency(&self, n: usize, instant: usize, seed: u64) -> Adjacency {
        match self {
            GraphSchedule::Complete => (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
            GraphSchedule::Ring => {
                if n == 1 {
                    return vec![Vec::new()];
                }
                (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect()
            }
            GraphSchedule::RandomJointlyConnected {
                window,
                extra_edge_prob,
            } => {
                use rand::SeedableRng;
                let window = (*window).max(1);
                let w = instant / window;
                let mut tree_rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                    seed ^ (w as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                );
                // Random spanning tree: node i attaches to a random earlier node.
                let mut edges: Vec<(usize, usize, usize)> = Vec::new();
                for i in 1..n {
                    let parent = tree_rng.gen_range(0..i);
                    let at = w * window + tree_rng.gen_range(0..window);
                    edges.push((i, parent, at));
                }
                let mut adj: Adjacency = vec![Vec::new(); n];
                for (a, b, at) in edges {
                    if at == instant {
                        adj[a].push(b);
                        adj[b].push(a);
                    }
                }
                let mut extra_rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                    seed ^ 0xabcd_ef12_3456_789a
                        ^ (instant as u64).wrapping_mul(0x2545_f491_4f6c_dd1d),
                );
                for i in 0..n {
                    for j in (i + 1)..n {
                        if extra_rng.gen_bool(*extra_edge_prob) && !adj[i].contains(&j) {
                            adj[i].push(j);
                            adj[j].push(i);
                        }
                    }
                }
                adj
            }
        }
    }

    /// Verify joint connectivity of graph unions over consecutive windows.
    pub fn jointly_connected(&self, n: usize, instants: usize, window: usize, seed: u64) -> bool {
        let mut k = 0;
        while k < instants {
            let mut union: Adjacency = vec![Vec::new(); n];
            for step in k..(k + window).min(instants) {
                for (i, nbrs) in self.adjacency(n, step, seed).into_iter().enumerate() {
                    for j in nbrs {
                        if !union[i].contains(&j) {
                            union[i].push(j);
                        }
                    }
                }
            }
            if !is_connected(&union) {
                return false;
            }
            k += window;
        }
        true
    }
}
