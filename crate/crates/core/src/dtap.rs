//! Distributed task allocation on a grid of learning agents.
//!
//! Tasks arrive at source agents. Every tick, each agent decides for each
//! task it received that tick whether to queue it locally or forward it to a
//! neighbour. Queues are FIFO with one server per agent. When a task
//! finishes, the cost of each decision (ticks from receipt to completion)
//! flows back along the forwarding chain as UPDATE messages, one hop at a
//! time, and every agent on the chain learns from it.

use std::collections::{HashMap, VecDeque};

use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{Algorithm, LearnerSpec, LearnerState, Policy};
use crate::rng::{stream, StreamRng};

pub type TaskId = u64;
pub type AgentId = usize;

/// Agent positions and undirected links with their delays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub positions: Vec<(f64, f64)>,
    /// Per agent: `(neighbour, delay)` in a fixed order.
    pub links: Vec<Vec<(AgentId, u64)>>,
}

impl Topology {
    /// Links `edges` with delay `unit_delay` per unit of Euclidean distance,
    /// rounded to the nearest tick (at least one).
    pub fn new(
        positions: Vec<(f64, f64)>,
        edges: &[(AgentId, AgentId)],
        unit_delay: u64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Config("topology without agents".into()));
        }
        if unit_delay == 0 {
            return Err(Error::Config("link delay must be at least one tick".into()));
        }
        let n = positions.len();
        let mut links = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::Config(format!("bad link {a}-{b} for {n} agents")));
            }
            if links[a].iter().any(|&(x, _)| x == b) {
                continue;
            }
            let (pa, pb) = (positions[a], positions[b]);
            let dist = (pa.0 - pb.0).hypot(pa.1 - pb.1);
            let delay = ((unit_delay as f64 * dist).round() as u64).max(1);
            links[a].push((b, delay));
            links[b].push((a, delay));
        }
        Ok(Self { positions, links })
    }

    /// 4-adjacency grid; agent `y * width + x` sits at `(x, y)`.
    pub fn grid(width: usize, height: usize, adjacent_delay: u64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config("grid needs positive width and height".into()));
        }
        let id = |x: usize, y: usize| y * width + x;
        let positions = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x as f64, y as f64)))
            .collect();
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < height {
                    edges.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        Self::new(positions, &edges, adjacent_delay)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.links.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Rectangle of source agents on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl SourceBlock {
    /// A `size x size` block centred on a `width x height` grid.
    pub fn centred(width: usize, height: usize, size: usize) -> Self {
        Self {
            x: width.saturating_sub(size) / 2,
            y: height.saturating_sub(size) / 2,
            width: size.min(width),
            height: size.min(height),
        }
    }

    fn agents(&self, grid_width: usize) -> Vec<AgentId> {
        (self.y..self.y + self.height)
            .flat_map(|y| (self.x..self.x + self.width).map(move |x| y * grid_width + x))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtapConfig {
    pub width: usize,
    pub height: usize,
    pub adjacent_delay: u64,
    /// Tasks per tick one agent can execute (service durations are
    /// exponential with this rate, rounded up to whole ticks).
    pub service_rate: f64,
    pub sources: SourceBlock,
    /// Poisson arrivals per tick at each source agent.
    pub arrival_rate: f64,
    pub learner: LearnerSpec,
    pub horizon: u64,
    /// ATST window length in ticks.
    pub tau: u64,
    pub seed: u64,
}

impl Default for DtapConfig {
    fn default() -> Self {
        Self::paper(Algorithm::Wpl)
    }
}

impl DtapConfig {
    /// 10x10 grid, delay 2, service rate 0.1, central 4x4 sources at 0.5
    /// each, value learning rate 1, policy learning rate 1e-4.
    pub fn paper(algo: Algorithm) -> Self {
        Self {
            width: 10,
            height: 10,
            adjacent_delay: 2,
            service_rate: 0.1,
            sources: SourceBlock::centred(10, 10, 4),
            arrival_rate: 0.5,
            learner: LearnerSpec::new(algo)
                .alpha(1.0)
                .eta(1e-4)
                .epsilon(DEFAULT_EPSILON),
            horizon: 200_000,
            tau: 500,
            seed: 0,
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.width == 0 || self.height == 0 {
            out.push("grid width and height must be positive".into());
        }
        if self.adjacent_delay == 0 {
            out.push("adjacent_delay must be at least 1".into());
        }
        if !(self.service_rate > 0.0 && self.service_rate.is_finite()) {
            out.push(format!(
                "service_rate must be positive, got {}",
                self.service_rate
            ));
        }
        if !(self.arrival_rate >= 0.0 && self.arrival_rate.is_finite()) {
            out.push(format!(
                "arrival_rate must be non-negative, got {}",
                self.arrival_rate
            ));
        }
        let s = &self.sources;
        if s.width == 0
            || s.height == 0
            || s.x + s.width > self.width
            || s.y + s.height > self.height
        {
            out.push(format!("source block {s:?} does not fit the grid"));
        }
        if self.tau == 0 {
            out.push("tau must be positive".into());
        }
        if self.horizon == 0 {
            out.push("horizon must be positive".into());
        }
        out.extend(self.learner.problems());
        if self.learner.algo.needs_oracle() {
            out.push(format!(
                "{} needs an equilibrium oracle, unavailable here",
                self.learner.algo
            ));
        }
        let most = 1 + Topology::grid(self.width.max(1), self.height.max(1), 1)
            .map(|t| t.max_degree())
            .unwrap_or(0);
        if self.learner.epsilon * most as f64 > 1.0 {
            out.push(format!(
                "epsilon {} is infeasible for agents with {most} actions",
                self.learner.epsilon
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Exploration floor of the paper scenario.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// One visit of a task to an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub agent: AgentId,
    pub received: u64,
    /// Action index chosen there (0 = execute locally).
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: TaskId,
    pub birth: u64,
    pub hops: Vec<Hop>,
    /// Sum of link delays travelled.
    pub routing: u64,
    pub enqueued: Option<u64>,
    pub service_start: Option<u64>,
    pub service_end: Option<u64>,
}

/// Summary kept for every finished task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub task: TaskId,
    pub end: u64,
    pub tst: u64,
    pub routing: u64,
    pub wait: u64,
    pub service: u64,
    /// Number of forwards.
    pub hops: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Request {
        task: TaskId,
    },
    /// `chain` holds the hops still to be informed; its last entry belongs
    /// to the recipient.
    Update {
        task: TaskId,
        r: u64,
        chain: Vec<Hop>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub from: AgentId,
    pub to: AgentId,
    pub send: u64,
    pub deliver: u64,
    pub payload: Payload,
}

/// Entries of the optional event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogEvent {
    Arrival {
        tick: u64,
        agent: AgentId,
        task: TaskId,
    },
    Delivered {
        tick: u64,
        from: AgentId,
        to: AgentId,
        send: u64,
        update: bool,
        task: TaskId,
    },
    Enqueue {
        tick: u64,
        agent: AgentId,
        task: TaskId,
    },
    Forward {
        tick: u64,
        agent: AgentId,
        to: AgentId,
        task: TaskId,
    },
    ServiceStart {
        tick: u64,
        agent: AgentId,
        task: TaskId,
        duration: u64,
    },
    Complete {
        tick: u64,
        agent: AgentId,
        task: TaskId,
    },
    Reward {
        tick: u64,
        agent: AgentId,
        task: TaskId,
        action: usize,
        cost: u64,
    },
}

#[derive(Debug, Clone)]
pub struct AgentNode {
    pub id: AgentId,
    pub position: (f64, f64),
    /// Action `k + 1` forwards to `neighbours[k].0`.
    pub neighbours: Vec<(AgentId, u64)>,
    pub queue: VecDeque<TaskId>,
    pub in_service: Option<(TaskId, u64)>,
    pub learner: LearnerState,
    pub service_rate: f64,
    inbox: Vec<TaskId>,
    rng: StreamRng,
}

/// Counts of where every generated task currently is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub generated: u64,
    pub completed: u64,
    pub queued: u64,
    pub in_service: u64,
    pub in_transit: u64,
}

impl Census {
    pub fn balanced(&self) -> bool {
        self.generated == self.completed + self.queued + self.in_service + self.in_transit
    }
}

#[derive(Clone)]
pub struct DtapWorld {
    clock: u64,
    agents: Vec<AgentNode>,
    sources: Vec<AgentId>,
    arrival_rate: f64,
    tau: u64,
    active: HashMap<TaskId, TaskInstance>,
    completions: Vec<Completion>,
    /// Messages bucketed by delivery tick.
    wires: VecDeque<Vec<WireMessage>>,
    pending_arrivals: Vec<AgentId>,
    rewards: Vec<(AgentId, TaskId, usize, u64)>,
    next_task: TaskId,
    env_rng: StreamRng,
    log: Option<Vec<LogEvent>>,
}

impl DtapWorld {
    pub fn new(config: &DtapConfig) -> Result<Self> {
        config.validate()?;
        let topology = Topology::grid(config.width, config.height, config.adjacent_delay)?;
        Self::with_topology(config, topology, config.sources.agents(config.width))
    }

    /// World over an arbitrary topology; grid-specific fields of `config`
    /// (dimensions, delay, source block) are ignored.
    pub fn with_topology(
        config: &DtapConfig,
        topology: Topology,
        sources: Vec<AgentId>,
    ) -> Result<Self> {
        let mut problems = config.learner.problems();
        if !(config.service_rate > 0.0) {
            problems.push("service_rate must be positive".into());
        }
        if !(config.arrival_rate >= 0.0) {
            problems.push("arrival_rate must be non-negative".into());
        }
        if config.tau == 0 {
            problems.push("tau must be positive".into());
        }
        if let Some(s) = sources.iter().find(|&&s| s >= topology.len()) {
            problems.push(format!("source {s} is not an agent"));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let agents = topology
            .links
            .iter()
            .enumerate()
            .map(|(id, links)| {
                let learner = config
                    .learner
                    .build(&Policy::uniform(links.len() + 1), None)?;
                Ok(AgentNode {
                    id,
                    position: topology.positions[id],
                    neighbours: links.clone(),
                    queue: VecDeque::new(),
                    in_service: None,
                    learner,
                    service_rate: config.service_rate,
                    inbox: Vec::new(),
                    rng: stream(config.seed, &[1, id as u64]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let max_delay = topology
            .links
            .iter()
            .flatten()
            .map(|l| l.1)
            .max()
            .unwrap_or(1);
        Ok(Self {
            clock: 0,
            agents,
            sources,
            arrival_rate: config.arrival_rate,
            tau: config.tau,
            active: HashMap::new(),
            completions: Vec::new(),
            wires: (0..=max_delay).map(|_| Vec::new()).collect(),
            pending_arrivals: Vec::new(),
            rewards: Vec::new(),
            next_task: 0,
            env_rng: stream(config.seed, &[0]),
            log: None,
        })
    }

    pub fn record_events(&mut self, on: bool) {
        self.log = on.then(Vec::new);
    }

    pub fn events(&self) -> &[LogEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn agents(&self) -> &[AgentNode] {
        &self.agents
    }

    pub fn set_policy(&mut self, agent: AgentId, policy: Policy) -> Result<()> {
        let node = self
            .agents
            .get_mut(agent)
            .ok_or_else(|| Error::Config(format!("no agent {agent}")))?;
        if policy.len() != node.learner.num_actions() {
            return Err(Error::Shape(format!(
                "agent {agent} has {} actions",
                node.learner.num_actions()
            )));
        }
        node.learner.policy = policy;
        Ok(())
    }

    /// Adds one task arriving at `agent` in the next tick, on top of the
    /// random arrivals.
    pub fn inject_task(&mut self, agent: AgentId) -> Result<()> {
        if agent >= self.agents.len() {
            return Err(Error::Config(format!("no agent {agent}")));
        }
        self.pending_arrivals.push(agent);
        Ok(())
    }

    pub fn completions(&self) -> &[Completion] {
        &self.completions
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn census(&self) -> Census {
        let queued = self.agents.iter().map(|a| a.queue.len() as u64).sum();
        let in_service = self
            .agents
            .iter()
            .filter(|a| a.in_service.is_some())
            .count() as u64;
        let in_transit = self
            .wires
            .iter()
            .flatten()
            .filter(|m| matches!(m.payload, Payload::Request { .. }))
            .count() as u64;
        Census {
            generated: self.next_task,
            completed: self.completions.len() as u64,
            queued,
            in_service,
            in_transit,
        }
    }

    fn emit(&mut self, event: LogEvent) {
        if let Some(log) = &mut self.log {
            log.push(event);
        }
    }

    fn send(&mut self, from: AgentId, to: AgentId, delay: u64, payload: Payload) {
        let msg = WireMessage {
            from,
            to,
            send: self.clock,
            deliver: self.clock + delay,
            payload,
        };
        self.wires[delay as usize].push(msg);
    }

    fn link_delay(&self, from: AgentId, to: AgentId) -> u64 {
        self.agents[from]
            .neighbours
            .iter()
            .find(|l| l.0 == to)
            .map(|l| l.1)
            .expect("messages only travel along links")
    }

    /// Advances the clock by one tick.
    pub fn step(&mut self) -> Result<()> {
        self.clock += 1;
        let now = self.clock;

        // Deliver.
        self.wires.rotate_left(1);
        let slot = self.wires.len() - 1;
        let due = std::mem::take(&mut self.wires[0]);
        // Bucket 0 is now "due this tick"; the recycled last bucket is empty.
        debug_assert!(self.wires[slot].is_empty());
        for msg in due {
            debug_assert_eq!(msg.deliver, now);
            let update = matches!(msg.payload, Payload::Update { .. });
            let task = match &msg.payload {
                Payload::Request { task } | Payload::Update { task, .. } => *task,
            };
            self.emit(LogEvent::Delivered {
                tick: now,
                from: msg.from,
                to: msg.to,
                send: msg.send,
                update,
                task,
            });
            match msg.payload {
                Payload::Request { task } => {
                    let t = self.active.get_mut(&task).expect("task in transit");
                    t.hops.push(Hop {
                        agent: msg.to,
                        received: now,
                        action: 0,
                    });
                    self.agents[msg.to].inbox.push(task);
                }
                Payload::Update { task, r, mut chain } => {
                    let hop = chain.pop().expect("update names its recipient");
                    debug_assert_eq!(hop.agent, msg.to);
                    let cost = msg.deliver - msg.send + r;
                    self.rewards.push((msg.to, task, hop.action, cost));
                    if let Some(prev) = chain.last() {
                        let (to, delay) = (prev.agent, self.link_delay(msg.to, prev.agent));
                        self.send(
                            msg.to,
                            to,
                            delay,
                            Payload::Update {
                                task,
                                r: cost,
                                chain,
                            },
                        );
                    }
                }
            }
        }

        // Arrivals.
        let mut arrivals = std::mem::take(&mut self.pending_arrivals);
        if self.arrival_rate > 0.0 {
            let poisson =
                Poisson::new(self.arrival_rate).map_err(|e| Error::Config(e.to_string()))?;
            for &s in &self.sources {
                let n = poisson.sample(&mut self.env_rng) as usize;
                arrivals.extend(std::iter::repeat_n(s, n));
            }
        }
        for agent in arrivals {
            let id = self.next_task;
            self.next_task += 1;
            self.active.insert(
                id,
                TaskInstance {
                    id,
                    birth: now,
                    hops: vec![Hop {
                        agent,
                        received: now,
                        action: 0,
                    }],
                    routing: 0,
                    enqueued: None,
                    service_start: None,
                    service_end: None,
                },
            );
            self.agents[agent].inbox.push(id);
            self.emit(LogEvent::Arrival {
                tick: now,
                agent,
                task: id,
            });
        }

        // Decisions.
        for a in 0..self.agents.len() {
            let inbox = std::mem::take(&mut self.agents[a].inbox);
            for task in inbox {
                let node = &mut self.agents[a];
                let action = node.learner.policy.sample(&mut node.rng);
                let t = self.active.get_mut(&task).expect("received task");
                t.hops.last_mut().expect("hop recorded on receipt").action = action;
                if action == 0 {
                    t.enqueued = Some(now);
                    node.queue.push_back(task);
                    self.emit(LogEvent::Enqueue {
                        tick: now,
                        agent: a,
                        task,
                    });
                } else {
                    let (to, delay) = node.neighbours[action - 1];
                    t.routing += delay;
                    self.send(a, to, delay, Payload::Request { task });
                    self.emit(LogEvent::Forward {
                        tick: now,
                        agent: a,
                        to,
                        task,
                    });
                }
            }
        }

        // Service and completion.
        for a in 0..self.agents.len() {
            if let Some((task, end)) = self.agents[a].in_service {
                if end == now {
                    self.agents[a].in_service = None;
                    self.complete(a, task);
                }
            }
            if self.agents[a].in_service.is_none() {
                if let Some(task) = self.agents[a].queue.pop_front() {
                    let exp = Exp::new(self.agents[a].service_rate)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    let draw: f64 = exp.sample(&mut self.env_rng);
                    let duration = (draw.ceil() as u64).max(1);
                    self.agents[a].in_service = Some((task, now + duration));
                    let t = self.active.get_mut(&task).expect("queued task");
                    t.service_start = Some(now);
                    t.service_end = Some(now + duration);
                    self.emit(LogEvent::ServiceStart {
                        tick: now,
                        agent: a,
                        task,
                        duration,
                    });
                }
            }
        }

        // Learning.
        let rewards = std::mem::take(&mut self.rewards);
        for &(agent, task, action, cost) in &rewards {
            self.emit(LogEvent::Reward {
                tick: now,
                agent,
                task,
                action,
                cost,
            });
            let learner = &mut self.agents[agent].learner;
            learner.observe(action, -(cost as f64))?;
            let g = learner.estimate_gradient();
            learner.step(&g, None)?;
        }
        self.rewards = rewards;
        self.rewards.clear();
        Ok(())
    }

    fn complete(&mut self, agent: AgentId, task: TaskId) {
        let now = self.clock;
        let mut t = self.active.remove(&task).expect("task in service");
        let start = t.service_start.expect("started");
        let enqueued = t.enqueued.expect("queued");
        self.completions.push(Completion {
            task,
            end: now,
            tst: now - t.birth,
            routing: t.routing,
            wait: start - enqueued,
            service: now - start,
            hops: (t.hops.len() - 1) as u32,
        });
        self.emit(LogEvent::Complete {
            tick: now,
            agent,
            task,
        });
        let last = t.hops.pop().expect("executing hop");
        let r = now - last.received;
        self.rewards.push((agent, task, last.action, r));
        if let Some(prev) = t.hops.last() {
            let (to, delay) = (prev.agent, self.link_delay(agent, prev.agent));
            self.send(
                agent,
                to,
                delay,
                Payload::Update {
                    task,
                    r,
                    chain: t.hops,
                },
            );
        }
    }

    /// Completions with `end` in `(window_end - tau, window_end]`.
    fn window(&self, window_end: u64) -> &[Completion] {
        let from = window_end.saturating_sub(self.tau);
        let lo = self.completions.partition_point(|c| c.end <= from);
        let hi = self.completions.partition_point(|c| c.end <= window_end);
        &self.completions[lo..hi]
    }
}

/// Mean total service time of tasks completed in `(window_end - tau, window_end]`.
pub fn atst(world: &DtapWorld, window_end: u64) -> Result<Option<f64>> {
    if window_end > world.clock {
        return Err(Error::Domain(format!(
            "window end {window_end} is past the clock {}",
            world.clock
        )));
    }
    let done = world.window(window_end);
    if done.is_empty() {
        return Ok(None);
    }
    Ok(Some(
        done.iter().map(|c| c.tst as f64).sum::<f64>() / done.len() as f64,
    ))
}

/// Grid world with no arrivals and default learners.
pub fn build_grid(width: usize, height: usize, adjacent_delay: u64) -> Result<DtapWorld> {
    let config = DtapConfig {
        width,
        height,
        adjacent_delay,
        sources: SourceBlock::centred(width, height, 1),
        arrival_rate: 0.0,
        ..DtapConfig::default()
    };
    DtapWorld::new(&config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtstSample {
    pub window_end: u64,
    pub atst: Option<f64>,
    pub completed: usize,
    pub max_hops: u32,
}

/// Runs the scenario and reports ATST every `tau` ticks.
pub fn run_experiment(config: &DtapConfig) -> Result<Vec<AtstSample>> {
    let mut world = DtapWorld::new(config)?;
    let mut out = Vec::with_capacity((config.horizon / config.tau) as usize);
    while world.clock < config.horizon {
        world.step()?;
        if world.clock % config.tau == 0 {
            let done = world.window(world.clock);
            out.push(AtstSample {
                window_end: world.clock,
                atst: atst(&world, world.clock)?,
                completed: done.len(),
                max_hops: done.iter().map(|c| c.hops).max().unwrap_or(0),
            });
        }
    }
    Ok(out)
}

/// Mean of the window ATSTs over the final `fraction` of the samples.
pub fn steady_atst(samples: &[AtstSample], fraction: f64) -> Option<f64> {
    let n = ((samples.len() as f64 * fraction).ceil() as usize).clamp(1, samples.len().max(1));
    let tail: Vec<f64> = samples
        .iter()
        .rev()
        .take(n)
        .filter_map(|s| s.atst)
        .collect();
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}
