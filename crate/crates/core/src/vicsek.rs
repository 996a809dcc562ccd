//! Generalized Vicsek model: each agent's heading and displacement are
//! passed through a per-agent, per-step rotation, which steers the whole
//! swarm along a prescribed curve while neighbors keep aligning.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::trajectory::TrajectorySet;

/// Half-width of the square that initial positions are drawn from.
pub const INITIAL_SPREAD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Agent count.
    pub n: usize,
    /// Step count (columns of the trajectory matrix).
    pub steps: usize,
    /// Interaction radius.
    pub radius: f64,
    /// Speed per step.
    pub speed: f64,
    /// Step size.
    pub delta: f64,
    /// Noise amplitude; each draw is uniform in `[-eps/2, eps/2]`.
    pub noise: f64,
    pub domain_half_width: f64,
    pub periodic: bool,
    /// Average the rotated heading vectors of neighbours when aligning,
    /// instead of the raw headings. The rotations then feed back into the
    /// headings and accumulate from step to step.
    pub rotate_alignment: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 20,
            steps: 200,
            radius: 1.0,
            speed: 0.05,
            delta: 1.0,
            noise: 0.01,
            domain_half_width: 20.0,
            periodic: false,
            rotate_alignment: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.n >= 1, "n must be >= 1"),
            (self.steps >= 2, "steps must be >= 2"),
            (self.radius > 0.0 && self.radius.is_finite(), "radius must be > 0"),
            (self.speed >= 0.0 && self.speed.is_finite(), "speed must be >= 0"),
            (self.delta > 0.0 && self.delta.is_finite(), "delta must be > 0"),
            (self.noise >= 0.0 && self.noise.is_finite(), "noise must be >= 0"),
            (
                self.domain_half_width > 0.0 && self.domain_half_width.is_finite(),
                "domain_half_width must be > 0",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::invalid(*msg)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Classic,
    Spiral,
    Obstacle,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classic" => Ok(ScheduleKind::Classic),
            "spiral" => Ok(ScheduleKind::Spiral),
            "obstacle" => Ok(ScheduleKind::Obstacle),
            other => Err(Error::invalid(format!("unknown schedule kind `{other}`"))),
        }
    }
}

/// Constants of the bell-shaped obstacle curve
/// `amplitude * (sigmoid(slope*t/T - rise) - sigmoid(slope*t/T - fall))`,
/// with the horizontal axis spanning `[-half_span, half_span]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleShape {
    pub slope: f64,
    pub rise: f64,
    pub fall: f64,
    pub amplitude: f64,
    pub half_span: f64,
}

impl Default for ObstacleShape {
    fn default() -> Self {
        ObstacleShape { slope: 12.0, rise: 4.0, fall: 8.0, amplitude: 5.0, half_span: 6.0 }
    }
}

/// Anticlockwise Archimedean spiral turning through 3*pi with radius 1 -> 4.
pub fn spiral_curve(steps: usize) -> Result<Vec<[f64; 2]>> {
    if steps < 2 {
        return Err(Error::invalid("spiral curve needs at least 2 steps"));
    }
    let t_max = steps as f64;
    Ok((0..steps)
        .map(|k| {
            let k = k as f64;
            let r = 1.0 + 3.0 * k / (t_max - 1.0);
            let kappa = 3.0 * PI * k / t_max;
            [r * kappa.cos(), r * kappa.sin()]
        })
        .collect())
}

pub fn obstacle_curve(steps: usize) -> Result<Vec<[f64; 2]>> {
    obstacle_curve_with(steps, &ObstacleShape::default())
}

pub fn obstacle_curve_with(steps: usize, shape: &ObstacleShape) -> Result<Vec<[f64; 2]>> {
    if steps < 2 {
        return Err(Error::invalid("obstacle curve needs at least 2 steps"));
    }
    let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
    let t_max = steps as f64;
    Ok((1..=steps)
        .map(|t| {
            let t = t as f64;
            let c1 = shape.half_span * (2.0 * t - t_max - 1.0) / (t_max - 1.0);
            let z = shape.slope * t / t_max;
            let c2 = shape.amplitude * (sigmoid(z - shape.rise) - sigmoid(z - shape.fall));
            [c1, c2]
        })
        .collect())
}

/// Direction of each curve segment; entry `k` is the angle of the step from
/// point `k` to point `k + 1`, in `(-pi, pi]`.
pub fn rotation_angles(curve: &[[f64; 2]]) -> Result<Vec<f64>> {
    if curve.len() < 2 {
        return Err(Error::invalid("rotation angles need at least 2 curve points"));
    }
    curve
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            if dx == 0.0 && dy == 0.0 {
                return Err(Error::DegenerateStep { t: k + 1 });
            }
            let g = dy.atan2(dx);
            // atan2 returns -pi for (-x, -0.0); fold it onto +pi.
            Ok(if g == -PI { PI } else { g })
        })
        .collect()
}

pub type Rotation = [[f64; 2]; 2];

pub fn rotation(angle: f64) -> Rotation {
    let (s, c) = angle.sin_cos();
    [[c, -s], [s, c]]
}

fn apply(r: &Rotation, v: [f64; 2]) -> [f64; 2] {
    [r[0][0] * v[0] + r[0][1] * v[1], r[1][0] * v[0] + r[1][1] * v[1]]
}

/// Rotation matrices for every (agent, step), agent-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSchedule {
    kind: ScheduleKind,
    agents: usize,
    steps: usize,
    matrices: Vec<Rotation>,
}

impl RotationSchedule {
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    /// Rotation for `agent` at step `t` (both 0-based).
    pub fn get(&self, agent: usize, t: usize) -> &Rotation {
        &self.matrices[agent * self.steps + t]
    }

    fn from_angles(kind: ScheduleKind, agents: usize, steps: usize, angle: impl Fn(usize, usize) -> f64) -> Self {
        let mut matrices = Vec::with_capacity(agents * steps);
        for i in 0..agents {
            for t in 0..steps {
                matrices.push(if t == 0 { rotation(0.0) } else { rotation(angle(i, t)) });
            }
        }
        RotationSchedule { kind, agents, steps, matrices }
    }
}

pub fn build_rotation_schedule(kind: ScheduleKind, n: usize, steps: usize) -> Result<RotationSchedule> {
    build_rotation_schedule_with(kind, n, steps, &ObstacleShape::default())
}

/// Classic: identity everywhere. Spiral: every agent rotates by `-gamma(t)` of
/// the spiral. Obstacle: the first `floor(n/2)` agents rotate by `+gamma(t)` of
/// the bell curve and the rest by `-gamma(t)`. Step 1 is always the identity.
pub fn build_rotation_schedule_with(
    kind: ScheduleKind,
    n: usize,
    steps: usize,
    shape: &ObstacleShape,
) -> Result<RotationSchedule> {
    if n < 1 || steps < 2 {
        return Err(Error::invalid("rotation schedule needs n >= 1 and T >= 2"));
    }
    let schedule = match kind {
        ScheduleKind::Classic => RotationSchedule {
            kind,
            agents: n,
            steps,
            matrices: vec![rotation(0.0); n * steps],
        },
        ScheduleKind::Spiral => {
            let gamma = rotation_angles(&spiral_curve(steps)?)?;
            RotationSchedule::from_angles(kind, n, steps, |_, t| -gamma[t - 1])
        }
        ScheduleKind::Obstacle => {
            let gamma = rotation_angles(&obstacle_curve_with(steps, shape)?)?;
            let upper = n / 2;
            RotationSchedule::from_angles(kind, n, steps, |i, t| {
                if i < upper {
                    gamma[t - 1]
                } else {
                    -gamma[t - 1]
                }
            })
        }
    };
    Ok(schedule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<[f64; 2]>,
    /// Wrapped into `[-pi, pi]`.
    pub headings: Vec<f64>,
}

impl SwarmState {
    /// Positions uniform in `[-2, 2]^2`, headings uniform in `[-pi, pi]`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..n)
            .map(|_| [rng.gen_range(-INITIAL_SPREAD..=INITIAL_SPREAD), rng.gen_range(-INITIAL_SPREAD..=INITIAL_SPREAD)])
            .collect();
        let headings = (0..n).map(|_| rng.gen_range(-PI..=PI)).collect();
        SwarmState { positions, headings }
    }

    /// Magnitude of the mean heading unit vector.
    pub fn polar_order(&self) -> f64 {
        let n = self.headings.len() as f64;
        let (sx, sy) = self.headings.iter().fold((0.0, 0.0), |(sx, sy), h| (sx + h.cos(), sy + h.sin()));
        (sx * sx + sy * sy).sqrt() / n
    }
}

/// Counter-based noise: the draw for (agent, step) does not depend on how
/// many other draws were made, so per-agent work can run in any order.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    amplitude: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, amplitude: f64) -> Self {
        NoiseSource { seed, amplitude }
    }

    pub fn draw(&self, agent: usize, t: usize) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        // one u64 consumes two 32-bit words
        rng.set_word_pos(2 * agent as u128);
        (rng.gen::<f64>() - 0.5) * self.amplitude
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w < -PI {
        w = -PI;
    }
    w
}

fn wrap_coord(v: f64, half: f64) -> f64 {
    (v + half).rem_euclid(2.0 * half) - half
}

fn separation(a: [f64; 2], b: [f64; 2], cfg: &SimConfig) -> f64 {
    let mut dx = a[0] - b[0];
    let mut dy = a[1] - b[1];
    if cfg.periodic {
        let w = 2.0 * cfg.domain_half_width;
        dx -= w * (dx / w).round();
        dy -= w * (dy / w).round();
    }
    (dx * dx + dy * dy).sqrt()
}

/// Advances the swarm from step `t` to `t + 1` (0-based `t`).
///
/// Each agent averages the heading vectors of every agent within `radius`
/// (itself included), takes the angle of that mean plus noise as its next
/// heading, and moves `speed * delta` along its current heading rotated by its
/// own matrix. A zero mean vector keeps the current heading. With
/// `rotate_alignment` the averaged vectors are the rotated ones.
pub fn step(state: &SwarmState, cfg: &SimConfig, sched: &RotationSchedule, t: usize, noise: &NoiseSource) -> Result<SwarmState> {
    let n = state.positions.len();
    if n != sched.agent_count() || state.headings.len() != n {
        return Err(Error::dim(format!(
            "state has {n} agents, schedule has {}",
            sched.agent_count()
        )));
    }
    if t + 1 >= sched.step_count() {
        return Err(Error::invalid(format!(
            "step index {t} outside 0..{}",
            sched.step_count() - 1
        )));
    }
    let unit: Vec<[f64; 2]> = state.headings.iter().map(|h| [h.cos(), h.sin()]).collect();
    let rotated: Vec<[f64; 2]> = (0..n).map(|j| apply(sched.get(j, t), unit[j])).collect();
    let aligned = if cfg.rotate_alignment { &rotated } else { &unit };

    let mut positions = Vec::with_capacity(n);
    let mut headings = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = [0.0, 0.0];
        let mut count = 0usize;
        for j in 0..n {
            if separation(state.positions[i], state.positions[j], cfg) <= cfg.radius {
                sum[0] += aligned[j][0];
                sum[1] += aligned[j][1];
                count += 1;
            }
        }
        let mean = [sum[0] / count as f64, sum[1] / count as f64];
        let heading = if mean == [0.0, 0.0] {
            state.headings[i]
        } else {
            wrap_angle(mean[1].atan2(mean[0]) + noise.draw(i, t))
        };
        headings.push(heading);

        let stride = cfg.speed * cfg.delta;
        let p = state.positions[i];
        let mut next = [p[0] + stride * rotated[i][0], p[1] + stride * rotated[i][1]];
        if cfg.periodic {
            next = [wrap_coord(next[0], cfg.domain_half_width), wrap_coord(next[1], cfg.domain_half_width)];
        }
        positions.push(next);
    }
    Ok(SwarmState { positions, headings })
}

/// Runs the model from [`SwarmState::random`] and records positions; column
/// `t` holds the swarm after `t` steps.
pub fn simulate(cfg: &SimConfig, sched: &RotationSchedule) -> Result<TrajectorySet> {
    simulate_from(cfg, sched, SwarmState::random(cfg.n, cfg.seed))
}

pub fn simulate_from(cfg: &SimConfig, sched: &RotationSchedule, initial: SwarmState) -> Result<TrajectorySet> {
    Ok(simulate_states(cfg, sched, initial)?.0)
}

/// As [`simulate_from`], also returning every intermediate state.
pub fn simulate_states(
    cfg: &SimConfig,
    sched: &RotationSchedule,
    initial: SwarmState,
) -> Result<(TrajectorySet, Vec<SwarmState>)> {
    cfg.validate()?;
    if sched.agent_count() != cfg.n || sched.step_count() != cfg.steps {
        return Err(Error::invalid(format!(
            "schedule is {}x{}, config asks for {} agents x {} steps",
            sched.agent_count(),
            sched.step_count(),
            cfg.n,
            cfg.steps
        )));
    }
    if initial.positions.len() != cfg.n {
        return Err(Error::invalid("initial state agent count differs from config"));
    }
    // Noise gets its own stream, separate from the initial-condition draws.
    let noise = NoiseSource::new(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, cfg.noise);
    let mut states = Vec::with_capacity(cfg.steps);
    states.push(initial);
    for t in 0..cfg.steps - 1 {
        let next = step(&states[t], cfg, sched, t, &noise)?;
        states.push(next);
    }
    let mut coords = Matrix::zeros(2 * cfg.n, cfg.steps);
    for (t, state) in states.iter().enumerate() {
        for (i, p) in state.positions.iter().enumerate() {
            coords[(2 * i, t)] = p[0];
            coords[(2 * i + 1, t)] = p[1];
        }
    }
    Ok((TrajectorySet::new(coords)?, states))
}
