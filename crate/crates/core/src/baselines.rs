//! Comparison strategies: All-in-End, Greedy, brute force, binary PSO and GA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evaluate::{DecisionVector, Evaluator};
use crate::solver::{OffloadPlan, SolveConfig};
use crate::wdg::{add_virtual_nodes, Placement, Wdg};

/// Largest offloadable task count `brute_force` accepts.
pub const BRUTE_FORCE_LIMIT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub particles: usize,
    pub iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia: f64,
    /// Velocity clamp; with unit inertia velocities otherwise grow without bound.
    pub max_velocity: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            particles: 30,
            iterations: 100,
            c1: 2.0,
            c2: 2.0,
            inertia: 1.0,
            max_velocity: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub iterations: usize,
    pub cross_rate: f64,
    /// Probability that an offspring gets one random bit flipped.
    pub mutation_rate: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 50,
            iterations: 100,
            cross_rate: 0.8,
            mutation_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaheuristicConfig {
    pub pso: PsoParams,
    pub ga: GaParams,
    pub repeats: usize,
    pub seed: u64,
    /// Joules added per second of deadline overrun.
    pub penalty: f64,
}

impl Default for MetaheuristicConfig {
    fn default() -> Self {
        Self {
            pso: PsoParams::default(),
            ga: GaParams::default(),
            repeats: 10,
            seed: 0,
            penalty: 1e6,
        }
    }
}

impl MetaheuristicConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("pso.particles", self.pso.particles),
            ("pso.iterations", self.pso.iterations),
            ("ga.population", self.ga.population),
            ("ga.iterations", self.ga.iterations),
            ("repeats", self.repeats),
        ];
        for (field, n) in counts {
            if n == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        for (field, p) in [("ga.cross_rate", self.ga.cross_rate), ("ga.mutation_rate", self.ga.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, "must lie in [0, 1]"));
            }
        }
        for (field, v) in [
            ("pso.c1", self.pso.c1),
            ("pso.c2", self.pso.c2),
            ("pso.inertia", self.pso.inertia),
            ("pso.max_velocity", self.pso.max_velocity),
            ("penalty", self.penalty),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(field, "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    fn repeat_seed(&self, repeat: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(repeat as u64 + 1)
    }
}

pub fn all_in_end(wdg: &Wdg) -> DecisionVector {
    wdg.real_tasks().map(|ix| (wdg.id(ix), Placement::Local)).collect()
}

/// Offloads each task whose own transfer-plus-edge energy beats running it
/// locally. Ties stay local.
pub fn greedy(wdg: &Wdg, env: &crate::env::EnvParams) -> DecisionVector {
    wdg.real_tasks()
        .map(|ix| {
            let node = wdg.node(ix);
            let a = wdg.attributes(ix, env);
            let place = if !node.local_only && a.x + a.y < a.z {
                Placement::Offload
            } else {
                Placement::Local
            };
            (node.id, place)
        })
        .collect()
}

/// Exhaustive minimum over every decision vector of the offloadable tasks.
pub fn brute_force(wdg: &Wdg, cfg: &SolveConfig) -> Result<OffloadPlan> {
    cfg.validate()?;
    let wdg = add_virtual_nodes(wdg)?;
    let ev = Evaluator::new(&wdg, &cfg.env);
    let m = ev.offloadable().len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            offloadable: m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let deadline = cfg.resolve_deadline(&wdg);
    let slots = ev.offloadable().to_vec();
    let mut placements = ev.all_local();
    let mut best: Option<(f64, u64)> = None;
    for mask in 0..(1u64 << m) {
        for (k, &ix) in slots.iter().enumerate() {
            placements[ix] = if mask >> k & 1 == 1 {
                Placement::Offload
            } else {
                Placement::Local
            };
        }
        let e = ev.energy(&placements);
        if best.is_some_and(|(b, _)| e >= b) {
            continue;
        }
        if deadline.is_finite() && ev.makespan(&placements) > deadline {
            continue;
        }
        best = Some((e, mask));
    }
    Ok(match best {
        Some((_, mask)) => OffloadPlan::evaluate(&ev, &ev.with_offloaded(|k| mask >> k & 1 == 1), deadline),
        None => OffloadPlan::evaluate(&ev, &ev.all_local(), deadline),
    })
}

struct Fitness<'a> {
    ev: Evaluator<'a>,
    deadline: f64,
    penalty: f64,
}

impl Fitness<'_> {
    fn placements(&self, bits: &[bool]) -> Vec<Placement> {
        self.ev.with_offloaded(|k| bits[k])
    }

    fn score(&self, bits: &[bool]) -> f64 {
        let p = self.placements(bits);
        let e = self.ev.energy(&p);
        if self.deadline.is_finite() {
            e + (self.ev.makespan(&p) - self.deadline).max(0.0) * self.penalty
        } else {
            e
        }
    }
}

fn best_of_repeats(
    wdg: &Wdg,
    cfg: &SolveConfig,
    mh: &MetaheuristicConfig,
    run: impl Fn(&Fitness, usize, &mut ChaCha8Rng) -> (f64, Vec<bool>) + Sync,
) -> Result<OffloadPlan> {
    cfg.validate()?;
    mh.validate()?;
    let wdg = add_virtual_nodes(wdg)?;
    let fitness = Fitness {
        ev: Evaluator::new(&wdg, &cfg.env),
        deadline: cfg.resolve_deadline(&wdg),
        penalty: mh.penalty,
    };
    let m = fitness.ev.offloadable().len();
    if m == 0 {
        return Ok(OffloadPlan::evaluate(&fitness.ev, &fitness.ev.all_local(), fitness.deadline));
    }
    let results: Vec<(f64, Vec<bool>)> = (0..mh.repeats)
        .into_par_iter()
        .map(|r| run(&fitness, m, &mut ChaCha8Rng::seed_from_u64(mh.repeat_seed(r))))
        .collect();
    let (_, bits) = results
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .unwrap();
    Ok(OffloadPlan::evaluate(&fitness.ev, &fitness.placements(&bits), fitness.deadline))
}

/// Binary PSO: velocities pass through a sigmoid and positions are the
/// bits whose sigmoid exceeds 0.5.
pub fn pso(wdg: &Wdg, cfg: &SolveConfig, mh: &MetaheuristicConfig) -> Result<OffloadPlan> {
    let p = mh.pso;
    best_of_repeats(wdg, cfg, mh, |fit, m, rng| {
        let vmax = p.max_velocity;
        let mut vel: Vec<Vec<f64>> = (0..p.particles)
            .map(|_| (0..m).map(|_| rng.gen_range(-vmax..=vmax)).collect())
            .collect();
        let mut pos: Vec<Vec<bool>> = vel.iter().map(|v| v.iter().map(|&x| sigmoid(x) > 0.5).collect()).collect();
        let mut pbest = pos.clone();
        let mut pbest_score: Vec<f64> = pos.iter().map(|x| fit.score(x)).collect();
        let mut g = argmin(&pbest_score);
        for _ in 0..p.iterations {
            for i in 0..p.particles {
                for k in 0..m {
                    let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                    let x = pos[i][k] as u8 as f64;
                    let v = p.inertia * vel[i][k]
                        + p.c1 * r1 * (pbest[i][k] as u8 as f64 - x)
                        + p.c2 * r2 * (pbest[g][k] as u8 as f64 - x);
                    vel[i][k] = v.clamp(-vmax, vmax);
                    pos[i][k] = sigmoid(vel[i][k]) > 0.5;
                }
                let s = fit.score(&pos[i]);
                if s < pbest_score[i] {
                    pbest_score[i] = s;
                    pbest[i] = pos[i].clone();
                }
            }
            g = argmin(&pbest_score);
        }
        (pbest_score[g], pbest[g].clone())
    })
}

/// GA with binary tournament selection, single-point crossover, one-bit
/// mutation and single-individual elitism.
pub fn ga(wdg: &Wdg, cfg: &SolveConfig, mh: &MetaheuristicConfig) -> Result<OffloadPlan> {
    let p = mh.ga;
    best_of_repeats(wdg, cfg, mh, |fit, m, rng| {
        let mut pop: Vec<Vec<bool>> = (0..p.population).map(|_| (0..m).map(|_| rng.gen()).collect()).collect();
        let mut score: Vec<f64> = pop.iter().map(|x| fit.score(x)).collect();
        for _ in 0..p.iterations {
            let elite = argmin(&score);
            let mut next = vec![pop[elite].clone()];
            while next.len() < p.population {
                let a = tournament(&score, rng);
                let b = tournament(&score, rng);
                let (mut c1, mut c2) = (pop[a].clone(), pop[b].clone());
                if m > 1 && rng.gen::<f64>() < p.cross_rate {
                    let cut = rng.gen_range(1..m);
                    c1[cut..].swap_with_slice(&mut c2[cut..]);
                }
                for child in [c1, c2] {
                    if next.len() == p.population {
                        break;
                    }
                    let mut child = child;
                    if rng.gen::<f64>() < p.mutation_rate {
                        let k = rng.gen_range(0..m);
                        child[k] = !child[k];
                    }
                    next.push(child);
                }
            }
            pop = next;
            score = pop.iter().map(|x| fit.score(x)).collect();
        }
        let best = argmin(&score);
        (score[best], pop[best].clone())
    })
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

fn tournament(score: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.gen_range(0..score.len());
    let b = rng.gen_range(0..score.len());
    if score[b] < score[a] {
        b
    } else {
        a
    }
}
