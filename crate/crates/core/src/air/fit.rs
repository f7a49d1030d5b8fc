//! Genetic search for the phase-model parameters that maximize the training AIR.
//!
//! Every candidate is scored with the same particle seed (common random
//! numbers), so differences in fitness reflect the parameters rather than
//! filter noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{air_particle, check_pairs, AuxChannelParams, GaConfig, ParticleConfig, PhaseModel, Receiver};
use crate::error::{Error, Result};
use crate::rng::stream;

const ELITES: usize = 2;
const TOURNAMENT: usize = 3;
const MUTATION_RATE: f64 = 0.25;
/// Smallest training block relative to the largest allowed `l0`.
pub const TRAINING_PER_LAG: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    pub params: AuxChannelParams,
    /// AIR on the training block at the optimum (bits/symbol).
    pub training_air: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Genome {
    log_sigma: f64,
    a_mix: f64,
    l0: usize,
}

struct Space {
    variant: Receiver,
    ls: (f64, f64),
    a: (f64, f64),
    l0: (usize, usize),
}

impl Space {
    fn model(&self, g: &Genome) -> PhaseModel {
        let sigma_z = g.log_sigma.exp();
        match self.variant {
            Receiver::Ar1 => PhaseModel::Ar1 { sigma_z },
            _ => PhaseModel::Hoar {
                sigma_z,
                a_mix: g.a_mix,
                l0: g.l0,
            },
        }
    }

    fn clamp(&self, mut g: Genome) -> Genome {
        g.log_sigma = g.log_sigma.clamp(self.ls.0, self.ls.1);
        g.a_mix = g.a_mix.clamp(self.a.0, self.a.1);
        g.l0 = g.l0.clamp(self.l0.0, self.l0.1);
        g
    }

    fn random<R: Rng>(&self, rng: &mut R) -> Genome {
        Genome {
            log_sigma: uniform(rng, self.ls),
            a_mix: uniform(rng, self.a),
            l0: rng.random_range(self.l0.0..=self.l0.1),
        }
    }

    fn genome_of(&self, m: &PhaseModel) -> Genome {
        let (sigma_z, a_mix, l0) = match *m {
            PhaseModel::Awgn => (0.0, 1.0, self.l0.0),
            PhaseModel::Ar1 { sigma_z } => (sigma_z, 1.0, self.l0.0),
            PhaseModel::Hoar { sigma_z, a_mix, l0 } => (sigma_z, a_mix, l0),
        };
        self.clamp(Genome {
            log_sigma: sigma_z.max(f64::MIN_POSITIVE).ln(),
            a_mix,
            l0,
        })
    }

    fn crossover<R: Rng>(&self, p: &Genome, q: &Genome, rng: &mut R) -> Genome {
        let w: f64 = rng.random();
        let v: f64 = rng.random();
        Genome {
            log_sigma: w * p.log_sigma + (1.0 - w) * q.log_sigma,
            a_mix: v * p.a_mix + (1.0 - v) * q.a_mix,
            l0: if rng.random::<bool>() { p.l0 } else { q.l0 },
        }
    }

    fn mutate<R: Rng>(&self, mut g: Genome, rng: &mut R) -> Genome {
        if rng.random::<f64>() < MUTATION_RATE {
            let z: f64 = rng.sample(StandardNormal);
            g.log_sigma += 0.1 * (self.ls.1 - self.ls.0) * z;
        }
        if rng.random::<f64>() < MUTATION_RATE {
            let z: f64 = rng.sample(StandardNormal);
            g.a_mix += 0.15 * (self.a.1 - self.a.0) * z;
        }
        if rng.random::<f64>() < MUTATION_RATE {
            let span = ((self.l0.1 - self.l0.0) / 8).max(1) as i64;
            let step = rng.random_range(-span..=span);
            g.l0 = (g.l0 as i64 + step).max(0) as usize;
        }
        self.clamp(g)
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Fits the AR1 or HOAR phase model on a training block.
pub fn fit_phase_model(
    x: &[Complex64],
    y: &[Complex64],
    variant: Receiver,
    h0: f64,
    sigma_n: f64,
    ga: &GaConfig,
    particles: &ParticleConfig,
) -> Result<PhaseFit> {
    fit_phase_model_seeded(x, y, variant, h0, sigma_n, ga, particles, &[])
}

/// Like [`fit_phase_model`] with extra starting candidates in the first
/// generation (for example an AR1 optimum when fitting HOAR).
#[allow(clippy::too_many_arguments)]
pub fn fit_phase_model_seeded(
    x: &[Complex64],
    y: &[Complex64],
    variant: Receiver,
    h0: f64,
    sigma_n: f64,
    ga: &GaConfig,
    particles: &ParticleConfig,
    seeds: &[PhaseModel],
) -> Result<PhaseFit> {
    ga.validate()?;
    particles.validate()?;
    if variant == Receiver::Awgn {
        return Err(Error::InvalidGa("the AWGN receiver has no phase parameters".into()));
    }
    let base = AuxChannelParams::awgn(h0, sigma_n);
    base.validate()?;
    let min_len = if variant == Receiver::Hoar {
        TRAINING_PER_LAG * ga.l0_bounds.1
    } else {
        TRAINING_PER_LAG
    };
    check_pairs(x, y, min_len)?;

    let (a_bounds, l0_bounds) = match variant {
        Receiver::Ar1 => ((1.0, 1.0), (ga.l0_bounds.0, ga.l0_bounds.0)),
        _ => (ga.a_mix_bounds, ga.l0_bounds),
    };
    let space = Space {
        variant,
        ls: (ga.sigma_z_bounds.0.ln(), ga.sigma_z_bounds.1.ln()),
        a: a_bounds,
        l0: l0_bounds,
    };
    let fitness = |g: &Genome| -> f64 {
        let p = base.with_phase(space.model(g));
        air_particle(x, y, &p, particles).map(|r| r.air).unwrap_or(f64::NEG_INFINITY)
    };
    let score = |gs: Vec<Genome>| -> Vec<(Genome, f64)> {
        let f: Vec<f64> = gs.par_iter().map(&fitness).collect();
        gs.into_iter().zip(f).collect()
    };

    let mut rng = stream(ga.seed);
    let mut initial: Vec<Genome> = seeds.iter().take(ga.population).map(|m| space.genome_of(m)).collect();
    while initial.len() < ga.population {
        initial.push(space.random(&mut rng));
    }
    let mut evaluations = initial.len();
    let mut pop = score(initial);

    for _ in 1..ga.generations {
        pop.sort_by(|a, b| b.1.total_cmp(&a.1));
        let pick = |rng: &mut crate::rng::SimRng, pop: &[(Genome, f64)]| -> Genome {
            let mut best = rng.random_range(0..pop.len());
            for _ in 1..TOURNAMENT {
                let c = rng.random_range(0..pop.len());
                if pop[c].1 > pop[best].1 {
                    best = c;
                }
            }
            pop[best].0
        };
        let children: Vec<Genome> = (ELITES..ga.population)
            .map(|_| {
                let p = pick(&mut rng, &pop);
                let q = pick(&mut rng, &pop);
                let c = space.crossover(&p, &q, &mut rng);
                space.mutate(c, &mut rng)
            })
            .collect();
        evaluations += children.len();
        let mut next: Vec<(Genome, f64)> = pop[..ELITES].to_vec();
        next.extend(score(children));
        pop = next;
    }
    let (best, air) = pop
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("population is non-empty");
    if !air.is_finite() {
        return Err(Error::InvalidGa("every candidate failed to evaluate".into()));
    }
    Ok(PhaseFit {
        params: base.with_phase(space.model(&best)),
        training_air: air,
        evaluations,
    })
}
