//! Seeded derivative-free maximizer over an axis-aligned box.
//!
//! Evaluations alternate between two proposal streams. Even steps take the
//! next point of a randomly shifted Halton sequence covering the whole box;
//! odd steps perturb the incumbent, either one coordinate with a Cauchy step
//! or a random subset with Gaussian steps, at a scale that grows on success
//! and shrinks on failure. Local moves that tie the incumbent replace it, so
//! the search drifts across plateaus. The proposal at step `k` depends only
//! on steps `0..k`, so a run with a larger budget replays a smaller one and
//! then continues.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, StandardNormal};

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
/// Initial perturbation scale, as a fraction of the box side.
const START_RADIUS: f64 = 0.2;
const MIN_RADIUS: f64 = 1.0 / 512.0;
const MAX_RADIUS: f64 = 0.5;

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    value
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pending {
    Global,
    Local,
}

#[derive(Debug, Clone)]
pub struct BoxMaximizer {
    lower: Vec<f64>,
    upper: Vec<f64>,
    shift: Vec<f64>,
    rng: ChaCha8Rng,
    halton_index: u64,
    steps: usize,
    best: Option<(Vec<f64>, f64)>,
    radius: f64,
    pending: Option<(Vec<f64>, Pending)>,
}

impl BoxMaximizer {
    /// # Panics
    /// If the bounds differ in length, are empty, exceed the supported
    /// dimension, or have `lower > upper` on some axis.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, seed: u64) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(!lower.is_empty() && lower.len() <= PRIMES.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..lower.len()).map(|_| rng.gen::<f64>()).collect();
        Self {
            lower,
            upper,
            shift,
            rng,
            halton_index: 0,
            steps: 0,
            best: None,
            radius: START_RADIUS,
            pending: None,
        }
    }

    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, f)| (x.as_slice(), *f))
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Next point to evaluate. Must be followed by [`BoxMaximizer::tell`].
    pub fn ask(&mut self) -> Vec<f64> {
        assert!(self.pending.is_none(), "ask called twice without tell");
        let (x, kind) = if self.steps.is_multiple_of(2) || self.best.is_none() {
            (self.halton_point(), Pending::Global)
        } else {
            (self.local_point(), Pending::Local)
        };
        self.pending = Some((x.clone(), kind));
        x
    }

    pub fn tell(&mut self, value: f64) {
        let (x, kind) = self.pending.take().expect("tell called without ask");
        self.steps += 1;
        let current = self.best.as_ref().map(|b| b.1);
        let accept = match (kind, current) {
            (_, None) => true,
            (Pending::Global, Some(f)) => value > f,
            // Equal values are accepted so the search can drift along plateaus.
            (Pending::Local, Some(f)) => value >= f,
        };
        if kind == Pending::Local {
            let f = current.expect("local steps follow an incumbent");
            if value > f {
                self.radius = (self.radius * 1.5).min(MAX_RADIUS);
            } else if value < f {
                self.radius *= 0.85;
                if self.radius < MIN_RADIUS {
                    self.radius = START_RADIUS;
                }
            }
        } else if accept {
            self.radius = START_RADIUS;
        }
        if accept {
            self.best = Some((x, value));
        }
    }

    fn halton_point(&mut self) -> Vec<f64> {
        self.halton_index += 1;
        (0..self.lower.len())
            .map(|j| {
                let u = (radical_inverse(self.halton_index, PRIMES[j]) + self.shift[j]).fract();
                (self.lower[j] + u * (self.upper[j] - self.lower[j]))
                    .clamp(self.lower[j], self.upper[j])
            })
            .collect()
    }

    fn local_point(&mut self) -> Vec<f64> {
        let mut x = self.best.as_ref().expect("incumbent exists").0.clone();
        let dim = x.len();
        // Half the moves change one coordinate with a heavy-tailed step, so
        // a single badly placed coordinate can jump anywhere in its range.
        // The rest change a random nonempty subset with Gaussian steps.
        let single = self.rng.gen_bool(0.5);
        let mask: Vec<bool> = if single {
            let j = self.rng.gen_range(0..dim);
            (0..dim).map(|i| i == j).collect()
        } else {
            let mut m: Vec<bool> = (0..dim).map(|_| self.rng.gen_bool(0.5)).collect();
            if !m.iter().any(|&b| b) {
                m[self.rng.gen_range(0..dim)] = true;
            }
            m
        };
        for j in 0..dim {
            if !mask[j] {
                continue;
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let z: f64 = if single {
                self.rng.sample(Cauchy::new(0.0, 1.0).expect("unit scale"))
            } else {
                self.rng.sample(StandardNormal)
            };
            let mut t = x[j] + z * self.radius * (hi - lo);
            // Reflect once off each wall, then clamp.
            if t < lo {
                t = 2.0 * lo - t;
            }
            if t > hi {
                t = 2.0 * hi - t;
            }
            x[j] = t.clamp(lo, hi);
        }
        x
    }
}
