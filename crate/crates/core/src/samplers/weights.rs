use rand::Rng;

use crate::error::{CssError, Result};

/// Unnormalised nonnegative column scores defining a sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    scores: Vec<f64>,
    total: f64,
}

/// Indices drawn from a [`SamplingWeights`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draws {
    pub indices: Vec<usize>,
    /// Without replacement only: positive-score columns ran out before the
    /// requested count was reached.
    pub exhausted: bool,
}

impl SamplingWeights {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(CssError::param(format!(
                "sampling scores must be finite and nonnegative, got {bad}"
            )));
        }
        let total = scores.iter().sum();
        Ok(SamplingWeights { scores, total })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s / self.total).collect()
    }

    /// One draw with `Pr[j] = score_j / total` by inverting the cumulative sum.
    /// Zero-score entries are never returned.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        draw_from(&self.scores, self.total, rng)
    }

    /// `count` draws, independently or without replacement.
    pub fn draw_many<R: Rng + ?Sized>(
        &self,
        count: usize,
        with_replacement: bool,
        rng: &mut R,
    ) -> Result<Draws> {
        if !(self.total > 0.0) {
            return Err(CssError::degenerate("all sampling scores are zero"));
        }
        if with_replacement {
            let indices = (0..count)
                .map(|_| draw_from(&self.scores, self.total, rng))
                .collect::<Result<_>>()?;
            return Ok(Draws {
                indices,
                exhausted: false,
            });
        }
        let mut remaining = self.scores.clone();
        let mut indices = Vec::with_capacity(count);
        while indices.len() < count {
            let total: f64 = remaining.iter().sum();
            if !(total > 0.0) {
                return Ok(Draws {
                    indices,
                    exhausted: true,
                });
            }
            let j = draw_from(&remaining, total, rng)?;
            remaining[j] = 0.0;
            indices.push(j);
        }
        Ok(Draws {
            indices,
            exhausted: false,
        })
    }
}

fn draw_from<R: Rng + ?Sized>(scores: &[f64], total: f64, rng: &mut R) -> Result<usize> {
    if !(total > 0.0) {
        return Err(CssError::degenerate("all sampling scores are zero"));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (j, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            acc += s;
            last_positive = Some(j);
            if target < acc {
                return Ok(j);
            }
        }
    }
    // rounding in the running sum can leave `target` just past the end
    last_positive.ok_or_else(|| CssError::degenerate("all sampling scores are zero"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(SamplingWeights::new(vec![1.0, -1.0]).is_err());
        assert!(SamplingWeights::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn zero_total_is_degenerate() {
        let w = SamplingWeights::new(vec![0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(w.draw(&mut rng), Err(CssError::Degenerate(_))));
        assert!(w.draw_many(1, true, &mut rng).is_err());
    }

    #[test]
    fn zero_scores_never_drawn() {
        let w = SamplingWeights::new(vec![0.0, 1.0, 0.0, 3.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hits = [0usize; 5];
        for _ in 0..20_000 {
            hits[w.draw(&mut rng).unwrap()] += 1;
        }
        assert_eq!(hits[0] + hits[2] + hits[4], 0);
        let frac = hits[3] as f64 / 20_000.0;
        let sd = (0.75_f64 * 0.25 / 20_000.0).sqrt();
        assert!((frac - 0.75).abs() < 4.0 * sd);
    }

    #[test]
    fn without_replacement_is_distinct_and_can_exhaust() {
        let w = SamplingWeights::new(vec![1.0, 0.0, 2.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = w.draw_many(3, false, &mut rng).unwrap();
        let mut sorted = d.indices.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 2, 3]);
        assert!(!d.exhausted);
        let d = w.draw_many(4, false, &mut rng).unwrap();
        assert_eq!(d.indices.len(), 3);
        assert!(d.exhausted);
    }
}
