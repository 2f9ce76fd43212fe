use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lattice::{EventCounts, Simulator};
use super::LatticeConfig;
use crate::error::Result;

/// Generator used for every trajectory, seeded with `seed_from_u64`.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, seed_from_u64)";

/// Time-averaged site occupations of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileEstimate {
    pub config: LatticeConfig,
    pub density: Vec<f64>,
    /// Standard error of each site's density from the block means.
    pub std_error: Vec<f64>,
    /// Number of averaging blocks.
    pub n_samples: usize,
    /// Largest difference between first-half and second-half averages.
    pub half_window_gap: f64,
    pub stationary: bool,
    /// Events over burn-in and measurement.
    pub event_counts: EventCounts,
    pub final_time: f64,
}

impl ProfileEstimate {
    pub fn n_sites(&self) -> usize {
        self.density.len()
    }

    /// Position `(i - 1/2)/N` of 1-based site `i`.
    pub fn site_x(&self, index: usize) -> f64 {
        (index as f64 + 0.5) / self.n_sites() as f64
    }

    pub fn metadata(&self) -> SimulationMetadata {
        SimulationMetadata {
            config: self.config,
            seed: self.config.seed,
            rng: RNG_ALGORITHM,
            event_counts: self.event_counts,
            half_window_gap: self.half_window_gap,
            stationary: self.stationary,
            n_samples: self.n_samples,
            final_time: self.final_time,
        }
    }
}

/// Sidecar record describing a simulated profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationMetadata {
    pub config: LatticeConfig,
    pub seed: u64,
    pub rng: &'static str,
    pub event_counts: EventCounts,
    pub half_window_gap: f64,
    pub stationary: bool,
    pub n_samples: usize,
    pub final_time: f64,
}

/// Per-site occupation integrals, updated only when a site changes.
struct Accumulator {
    since: Vec<f64>,
    block: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize, start: f64) -> Self {
        Self {
            since: vec![start; n],
            block: vec![0.0; n],
        }
    }

    fn touch(&mut self, site: usize, occupied: bool, now: f64) {
        if occupied {
            self.block[site] += now - self.since[site];
        }
        self.since[site] = now;
    }

    /// Closes a block ending at `end` and returns its site means.
    fn close(&mut self, occupation: &[u8], end: f64, length: f64) -> Vec<f64> {
        let mut means = Vec::with_capacity(occupation.len());
        for (i, &occ) in occupation.iter().enumerate() {
            self.touch(i, occ == 1, end);
            means.push(self.block[i] / length);
            self.block[i] = 0.0;
        }
        means
    }
}

/// Waiting time to the next event; an absorbing state never changes again.
fn wait<R: rand::Rng>(sim: &Simulator, rng: &mut R) -> f64 {
    sim.sample_waiting_time(rng).unwrap_or(f64::INFINITY)
}

/// Runs one trajectory: burn-in, then time-weighted averaging over
/// `measure_time` split into blocks of `sample_interval`.
///
/// The result depends only on the config (including its seed).
pub fn run(config: &LatticeConfig) -> Result<ProfileEstimate> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sim = Simulator::from_config(config, &mut rng)?;
    let n = config.n_sites;

    // Burn-in: the state is constant between events, so the state at the
    // first event time past the horizon is the state at the horizon.
    let start = config.burn_in_time;
    let mut next = sim.time() + wait(&sim, &mut rng);
    while next < start {
        let event = sim.sample_event(&mut rng)?;
        sim.apply(event);
        next += wait(&sim, &mut rng);
    }

    let n_blocks = config.n_blocks();
    let length = config.measure_time / n_blocks as f64;
    let mut acc = Accumulator::new(n, start);
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(n_blocks);
    let mut block_end = start + length;
    loop {
        while next >= block_end {
            blocks.push(acc.close(sim.occupation(), block_end, length));
            if blocks.len() == n_blocks {
                let counts = sim.state().event_counts;
                return Ok(summarize(config, &blocks, counts, block_end));
            }
            block_end = start + length * (blocks.len() + 1) as f64;
        }
        let event = sim.sample_event(&mut rng)?;
        let occ = sim.occupation();
        let changed = match event {
            super::Event::Hop(i) => [Some(i), Some(i + 1)],
            super::Event::Entry => [Some(0), None],
            super::Event::Exit => [Some(n - 1), None],
            super::Event::Attach(i) | super::Event::Detach(i) => [Some(i), None],
        };
        for i in changed.into_iter().flatten() {
            acc.touch(i, occ[i] == 1, next);
        }
        sim.apply(event);
        next += wait(&sim, &mut rng);
    }
}

fn summarize(
    config: &LatticeConfig,
    blocks: &[Vec<f64>],
    counts: EventCounts,
    end: f64,
) -> ProfileEstimate {
    let n = config.n_sites;
    let b = blocks.len();
    let half = b / 2;
    let mut density = vec![0.0; n];
    let mut std_error = vec![0.0; n];
    let mut half_window_gap: f64 = 0.0;
    for i in 0..n {
        let column = blocks.iter().map(|blk| blk[i]);
        let mean = column.clone().sum::<f64>() / b as f64;
        density[i] = mean.clamp(0.0, 1.0);
        if b > 1 {
            let var = column.map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            std_error[i] = (var / b as f64).sqrt();
        }
        if half > 0 {
            let first = blocks[..half].iter().map(|blk| blk[i]).sum::<f64>() / half as f64;
            let second = blocks[b - half..].iter().map(|blk| blk[i]).sum::<f64>() / half as f64;
            half_window_gap = half_window_gap.max((first - second).abs());
        }
    }
    ProfileEstimate {
        config: *config,
        density,
        std_error,
        n_samples: b,
        half_window_gap,
        stationary: half_window_gap <= config.stationarity_threshold,
        event_counts: counts,
        final_time: end,
    }
}

/// Independent runs with seeds `base.seed, base.seed + 1, ...`, in seed
/// order regardless of scheduling.
pub fn run_replicas(base: &LatticeConfig, replicas: usize) -> Result<Vec<ProfileEstimate>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            run(&LatticeConfig {
                seed: base.seed.wrapping_add(r),
                ..*base
            })
        })
        .collect()
}

/// Formats `value` with `digits` significant digits, dropping trailing
/// zeros.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{value:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes `site,x,density` rows, `x` with 12 significant digits and the
/// density at full round-trip precision.
pub fn write_profile_csv<W: Write>(profile: &ProfileEstimate, mut out: W) -> std::io::Result<()> {
    writeln!(out, "site,x,density")?;
    for (i, rho) in profile.density.iter().enumerate() {
        writeln!(
            out,
            "{},{},{}",
            i + 1,
            format_significant(profile.site_x(i), 12),
            rho
        )?;
    }
    Ok(())
}
