//! Gaussian naive Bayes over contexts, with running (Welford) moments.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{bail, check_dimension, Result};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayes {
    dimension: usize,
    contexts: BTreeMap<usize, Moments>,
    total: u64,
}

impl NaiveBayes {
    pub fn new(dimension: usize) -> Self {
        NaiveBayes {
            dimension,
            contexts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn train(&mut self, x: &[f64], context: usize) -> Result<()> {
        check_dimension(self.dimension, x)?;
        let d = self.dimension;
        let m = self.contexts.entry(context).or_insert_with(|| Moments {
            count: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        });
        m.count += 1;
        let n = m.count as f64;
        for i in 0..d {
            let delta = x[i] - m.mean[i];
            m.mean[i] += delta / n;
            m.m2[i] += delta * (x[i] - m.mean[i]);
        }
        self.total += 1;
        Ok(())
    }

    /// Training instances seen across all contexts.
    pub fn observations(&self) -> u64 {
        self.total
    }

    pub fn contexts(&self) -> impl Iterator<Item = usize> + '_ {
        self.contexts.keys().copied()
    }

    pub fn prior(&self, context: usize) -> Option<f64> {
        self.contexts
            .get(&context)
            .map(|m| m.count as f64 / self.total as f64)
    }

    pub fn mean(&self, context: usize) -> Option<&[f64]> {
        self.contexts.get(&context).map(|m| m.mean.as_slice())
    }

    /// Population variance per feature, floored.
    pub fn variance(&self, context: usize) -> Option<Vec<f64>> {
        self.contexts.get(&context).map(|m| {
            m.m2.iter()
                .map(|v| (v / m.count as f64).max(VARIANCE_FLOOR))
                .collect()
        })
    }

    /// `log P(c) + Σ log N(x_i; μ_ci, σ²_ci)` for every context.
    pub fn log_joint(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        check_dimension(self.dimension, x)?;
        Ok(self
            .contexts
            .iter()
            .map(|(id, m)| {
                let prior = libm::log(m.count as f64 / self.total as f64);
                let ll: f64 = (0..self.dimension)
                    .map(|i| {
                        let var = (m.m2[i] / m.count as f64).max(VARIANCE_FLOOR);
                        let z = x[i] - m.mean[i];
                        -0.5 * (libm::log(2.0 * PI * var) + z * z / var)
                    })
                    .sum();
                (*id, prior + ll)
            })
            .collect())
    }

    /// Most probable context; ties go to the lowest id.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (id, s) in self.log_joint(x)? {
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((id, s));
            }
        }
        match best {
            Some((id, _)) => Ok(id),
            None => bail!(State, "naive Bayes has not seen any context"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_context_always_wins() {
        let mut nb = NaiveBayes::new(2);
        nb.train(&[0.0, 1.0], 4).unwrap();
        nb.train(&[1.0, 0.0], 4).unwrap();
        assert_eq!(nb.predict(&[100.0, -7.0]).unwrap(), 4);
        assert!(NaiveBayes::new(1).predict(&[0.0]).is_err());
    }

    #[test]
    fn welford_matches_two_pass_moments() {
        let xs = [1.0, 4.0, 4.0, 7.5, -2.0];
        let mut nb = NaiveBayes::new(1);
        for x in xs {
            nb.train(&[x], 0).unwrap();
        }
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert!((nb.mean(0).unwrap()[0] - mean).abs() < 1e-12);
        assert!((nb.variance(0).unwrap()[0] - var).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_uses_the_floor() {
        let mut nb = NaiveBayes::new(2);
        for v in [0.0, 1.0, 2.0] {
            nb.train(&[5.0, v], 0).unwrap();
            nb.train(&[6.0, v], 1).unwrap();
        }
        assert_eq!(nb.variance(0).unwrap()[0], VARIANCE_FLOOR);
        assert!(nb
            .log_joint(&[5.5, 1.0])
            .unwrap()
            .iter()
            .all(|(_, s)| s.is_finite()));
    }

    #[test]
    fn closed_form_posterior() {
        // means 0 and 10, unit variance, equal priors: x = 2 is far closer to 0
        let mut nb = NaiveBayes::new(1);
        for v in [-1.0, 1.0] {
            nb.train(&[v], 0).unwrap();
            nb.train(&[10.0 + v], 1).unwrap();
        }
        assert_eq!(nb.predict(&[2.0]).unwrap(), 0);
        let lj = nb.log_joint(&[2.0]).unwrap();
        let expected =
            |mu: f64| libm::log(0.5) - 0.5 * (libm::log(2.0 * PI) + (2.0 - mu) * (2.0 - mu));
        assert!((lj[0].1 - expected(0.0)).abs() < 1e-12);
        assert!((lj[1].1 - expected(10.0)).abs() < 1e-12);
        // midpoint of identical-prior symmetric contexts goes to the lowest id
        assert_eq!(nb.predict(&[5.0]).unwrap(), 0);
    }

    #[test]
    fn separated_contexts_are_recognised() {
        let mut rng = seeded(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut nb = NaiveBayes::new(2);
        for i in 0..2000 {
            let c = i % 2;
            let m = 6.0 * c as f64;
            nb.train(&[m + noise.sample(&mut rng), m + noise.sample(&mut rng)], c)
                .unwrap();
        }
        let mut correct = 0;
        for i in 0..2000 {
            let c = i % 2;
            let m = 6.0 * c as f64;
            if nb
                .predict(&[m + noise.sample(&mut rng), m + noise.sample(&mut rng)])
                .unwrap()
                == c
            {
                correct += 1;
            }
        }
        assert!(correct as f64 / 2000.0 > 0.95);
    }
}
