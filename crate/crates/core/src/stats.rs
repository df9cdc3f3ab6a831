//! Streaming sample statistics with deterministic merging.

// Index loops read better than zips across the parallel mean/co-moment arrays.
#![allow(clippy::needless_range_loop)]

/// Running means and co-moments of `K` jointly observed quantities.
///
/// Chunks are merged with Chan's pairwise update; merging chunks in a fixed
/// order gives bit-identical results however the chunks were scheduled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoMoments<const K: usize> {
    n: u64,
    mean: [f64; K],
    comoment: [[f64; K]; K],
}

impl<const K: usize> Default for CoMoments<K> {
    fn default() -> Self {
        Self {
            n: 0,
            mean: [0.0; K],
            comoment: [[0.0; K]; K],
        }
    }
}

impl<const K: usize> CoMoments<K> {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: [f64; K]) {
        self.n += 1;
        let n = self.n as f64;
        let mut delta = [0.0; K];
        for i in 0..K {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / n;
        }
        for i in 0..K {
            let di = x[i] - self.mean[i];
            for j in 0..K {
                self.comoment[i][j] += delta[j] * di;
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let mut delta = [0.0; K];
        for i in 0..K {
            delta[i] = other.mean[i] - self.mean[i];
        }
        for i in 0..K {
            for j in 0..K {
                self.comoment[i][j] += other.comoment[i][j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for i in 0..K {
            self.mean[i] += delta[i] * nb / n;
        }
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Unbiased sample covariance; zero with fewer than two samples.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.comoment[i][j] / (self.n - 1) as f64
        }
    }

    /// Standard error of the `i`-th mean.
    pub fn std_error(&self, i: usize) -> f64 {
        (self.covariance(i, i).max(0.0) / self.n.max(1) as f64).sqrt()
    }

    /// Standard error of `h(means)` by the delta method, given `grad h`.
    pub fn delta_std_error(&self, grad: [f64; K]) -> f64 {
        let mut var = 0.0;
        for i in 0..K {
            for j in 0..K {
                var += grad[i] * grad[j] * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.n.max(1) as f64).sqrt()
    }
}
