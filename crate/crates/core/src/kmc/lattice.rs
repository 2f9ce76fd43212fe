use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::{InitialCondition, LatticeConfig};
use crate::error::{Error, Result};

/// Set of site indices with O(1) insert, remove and uniform sampling.
#[derive(Debug, Clone)]
struct IndexSet {
    members: Vec<usize>,
    slot: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl IndexSet {
    fn new(capacity: usize) -> Self {
        Self {
            members: Vec::with_capacity(capacity),
            slot: vec![ABSENT; capacity],
        }
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    #[cfg(test)]
    fn contains(&self, i: usize) -> bool {
        self.slot[i] != ABSENT
    }

    fn insert(&mut self, i: usize) {
        if self.slot[i] == ABSENT {
            self.slot[i] = self.members.len();
            self.members.push(i);
        }
    }

    fn remove(&mut self, i: usize) {
        let s = self.slot[i];
        if s == ABSENT {
            return;
        }
        let last = self.members.pop().expect("non-empty");
        if last != i {
            self.members[s] = last;
            self.slot[last] = s;
        }
        self.slot[i] = ABSENT;
    }

    fn set(&mut self, i: usize, present: bool) {
        if present {
            self.insert(i)
        } else {
            self.remove(i)
        }
    }

    fn get(&self, k: usize) -> usize {
        self.members[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Hop,
    Entry,
    Exit,
    Attach,
    Detach,
}

/// One transition; sites are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// Particle moves from the site to the next one.
    Hop(usize),
    Entry,
    Exit,
    Attach(usize),
    Detach(usize),
}

impl Event {
    pub fn kind(self) -> EventKind {
        match self {
            Event::Hop(_) => EventKind::Hop,
            Event::Entry => EventKind::Entry,
            Event::Exit => EventKind::Exit,
            Event::Attach(_) => EventKind::Attach,
            Event::Detach(_) => EventKind::Detach,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EventCounts {
    pub hop: u64,
    pub entry: u64,
    pub exit: u64,
    pub attach: u64,
    pub detach: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.hop + self.entry + self.exit + self.attach + self.detach
    }

    fn record(&mut self, kind: EventKind) {
        match kind {
            EventKind::Hop => self.hop += 1,
            EventKind::Entry => self.entry += 1,
            EventKind::Exit => self.exit += 1,
            EventKind::Attach => self.attach += 1,
            EventKind::Detach => self.detach += 1,
        }
    }

    pub fn merge(&mut self, other: &EventCounts) {
        self.hop += other.hop;
        self.entry += other.entry;
        self.exit += other.exit;
        self.attach += other.attach;
        self.detach += other.detach;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub occupation: Vec<u8>,
    pub time: f64,
    pub event_counts: EventCounts,
}

impl LatticeState {
    pub fn new(occupation: Vec<u8>) -> Self {
        Self {
            occupation,
            time: 0.0,
            event_counts: EventCounts::default(),
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    pub fn full(n: usize) -> Self {
        Self::new(vec![1; n])
    }
}

/// Every enabled transition of `state` with its rate, in site order.
///
/// This is the reference table; [`Simulator`] keeps the same information
/// incrementally.
pub fn enabled_events(state: &LatticeState, config: &LatticeConfig) -> Vec<(Event, f64)> {
    let n = &state.occupation;
    let last = n.len() - 1;
    let mut events = Vec::new();
    if n[0] == 0 && config.alpha > 0.0 {
        events.push((Event::Entry, config.alpha));
    }
    for i in 0..last {
        if n[i] == 1 && n[i + 1] == 0 {
            events.push((Event::Hop(i), 1.0));
        }
    }
    if n[last] == 1 && config.beta > 0.0 {
        events.push((Event::Exit, config.beta));
    }
    for (i, &occ) in n.iter().enumerate() {
        if occ == 0 && config.omega_a() > 0.0 {
            events.push((Event::Attach(i), config.omega_a()));
        } else if occ == 1 && config.omega_d() > 0.0 {
            events.push((Event::Detach(i), config.omega_d()));
        }
    }
    events
}

/// Gillespie simulator holding a lattice state and its event index.
#[derive(Debug, Clone)]
pub struct Simulator {
    alpha: f64,
    beta: f64,
    omega_a: f64,
    omega_d: f64,
    state: LatticeState,
    /// Sites `i` with `n_i = 1, n_{i+1} = 0`.
    hops: IndexSet,
    occupied: IndexSet,
    empty: IndexSet,
}

impl Simulator {
    pub fn new(config: &LatticeConfig, state: LatticeState) -> Result<Self> {
        config.validate()?;
        if state.occupation.len() != config.n_sites || state.occupation.iter().any(|&v| v > 1) {
            return Err(Error::InvalidConfig(
                "occupation must have n_sites entries, each 0 or 1".into(),
            ));
        }
        let n = config.n_sites;
        let mut sim = Self {
            alpha: config.alpha,
            beta: config.beta,
            omega_a: config.omega_a(),
            omega_d: config.omega_d(),
            state,
            hops: IndexSet::new(n),
            occupied: IndexSet::new(n),
            empty: IndexSet::new(n),
        };
        for i in 0..n {
            sim.refresh_site(i);
        }
        for i in 0..n - 1 {
            sim.refresh_hop(i);
        }
        Ok(sim)
    }

    /// Simulator started from the config's initial condition.
    pub fn from_config<R: Rng>(config: &LatticeConfig, rng: &mut R) -> Result<Self> {
        let n = config.n_sites;
        let state = match config.initial {
            InitialCondition::Empty => LatticeState::empty(n),
            InitialCondition::Full => LatticeState::full(n),
            InitialCondition::Product { density } => LatticeState::new(
                (0..n)
                    .map(|_| u8::from(rng.random::<f64>() < density))
                    .collect(),
            ),
        };
        Self::new(config, state)
    }

    pub fn state(&self) -> &LatticeState {
        &self.state
    }

    pub fn into_state(self) -> LatticeState {
        self.state
    }

    pub fn occupation(&self) -> &[u8] {
        &self.state.occupation
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    fn n(&self) -> usize {
        self.state.occupation.len()
    }

    fn refresh_site(&mut self, i: usize) {
        let occ = self.state.occupation[i] == 1;
        self.occupied.set(i, occ);
        self.empty.set(i, !occ);
    }

    fn refresh_hop(&mut self, i: usize) {
        let n = &self.state.occupation;
        let enabled = n[i] == 1 && n[i + 1] == 0;
        self.hops.set(i, enabled);
    }

    fn entry_rate(&self) -> f64 {
        if self.state.occupation[0] == 0 {
            self.alpha
        } else {
            0.0
        }
    }

    fn exit_rate(&self) -> f64 {
        if self.state.occupation[self.n() - 1] == 1 {
            self.beta
        } else {
            0.0
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.hops.len() as f64
            + self.entry_rate()
            + self.exit_rate()
            + self.omega_a * self.empty.len() as f64
            + self.omega_d * self.occupied.len() as f64
    }

    /// Draws the next event in proportion to its rate without applying it.
    pub fn sample_event<R: Rng>(&self, rng: &mut R) -> Result<Event> {
        let rates = [
            self.hops.len() as f64,
            self.entry_rate(),
            self.exit_rate(),
            self.omega_a * self.empty.len() as f64,
            self.omega_d * self.occupied.len() as f64,
        ];
        let total: f64 = rates.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Absorbing);
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = None;
        for (c, &r) in rates.iter().enumerate() {
            if r > 0.0 {
                if u < r {
                    chosen = Some(c);
                    break;
                }
                u -= r;
            }
        }
        // rounding can leave u just past the last category
        let c = chosen.unwrap_or_else(|| {
            let c = rates.iter().rposition(|&r| r > 0.0).expect("total > 0");
            u = rates[c] * (1.0 - f64::EPSILON);
            c
        });
        let pick = |set: &IndexSet, scaled: f64| set.get((scaled as usize).min(set.len() - 1));
        Ok(match c {
            0 => Event::Hop(pick(&self.hops, u)),
            1 => Event::Entry,
            2 => Event::Exit,
            3 => Event::Attach(pick(&self.empty, u / self.omega_a)),
            _ => Event::Detach(pick(&self.occupied, u / self.omega_d)),
        })
    }

    fn is_enabled(&self, event: Event) -> bool {
        let n = &self.state.occupation;
        match event {
            Event::Hop(i) => i + 1 < n.len() && n[i] == 1 && n[i + 1] == 0,
            Event::Entry => n[0] == 0 && self.alpha > 0.0,
            Event::Exit => n[n.len() - 1] == 1 && self.beta > 0.0,
            Event::Attach(i) => n[i] == 0 && self.omega_a > 0.0,
            Event::Detach(i) => n[i] == 1 && self.omega_d > 0.0,
        }
    }

    /// Applies `event` and returns the sites whose occupation changed.
    pub fn apply(&mut self, event: Event) -> [Option<usize>; 2] {
        assert!(self.is_enabled(event), "{event:?} fired while disabled");
        let last = self.n() - 1;
        let changed = match event {
            Event::Hop(i) => {
                self.state.occupation[i] = 0;
                self.state.occupation[i + 1] = 1;
                [Some(i), Some(i + 1)]
            }
            Event::Entry => {
                self.state.occupation[0] = 1;
                [Some(0), None]
            }
            Event::Exit => {
                self.state.occupation[last] = 0;
                [Some(last), None]
            }
            Event::Attach(i) => {
                self.state.occupation[i] = 1;
                [Some(i), None]
            }
            Event::Detach(i) => {
                self.state.occupation[i] = 0;
                [Some(i), None]
            }
        };
        for i in changed.into_iter().flatten() {
            self.refresh_site(i);
            if i > 0 {
                self.refresh_hop(i - 1);
            }
            if i < last {
                self.refresh_hop(i);
            }
        }
        self.state.event_counts.record(event.kind());
        changed
    }

    /// Waiting time until the next event, drawn at the current total rate.
    pub fn sample_waiting_time<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return Err(Error::Absorbing);
        }
        let e: f64 = rng.sample(Exp1);
        Ok(e / total)
    }

    /// One Gillespie step: advance time, then fire one event.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> Result<Event> {
        let dt = self.sample_waiting_time(rng)?;
        let event = self.sample_event(rng)?;
        self.state.time += dt;
        self.apply(event);
        Ok(event)
    }

    #[cfg(test)]
    fn check_index(&self) {
        let n = self.n();
        for i in 0..n {
            assert_eq!(self.occupied.contains(i), self.state.occupation[i] == 1);
            assert_eq!(self.empty.contains(i), self.state.occupation[i] == 0);
        }
        for i in 0..n - 1 {
            let n = &self.state.occupation;
            assert_eq!(self.hops.contains(i), n[i] == 1 && n[i + 1] == 0);
        }
    }
}
