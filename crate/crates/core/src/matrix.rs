//! The subjects-by-stimuli rating matrix and per-stimulus moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_RATING: u8 = 1;
pub const MAX_RATING: u8 = 5;

/// N subjects by K stimuli of 1..5 ratings. Absent cells are allowed (real
/// datasets are often incomplete); every stimulus must keep at least two
/// present ratings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    subjects: Vec<String>,
    stimuli: Vec<String>,
    // row-major, subject-major; 0 marks an absent rating
    cells: Vec<u8>,
}

/// Sample mean, unbiased sample variance and number of present ratings of one
/// stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusMoments {
    pub mos: f64,
    pub variance: f64,
    pub count: usize,
}

impl StimulusMoments {
    /// Moments of a list of ratings, unbiased (count - 1) variance.
    pub fn from_ratings(ratings: impl IntoIterator<Item = u8>) -> Option<Self> {
        let mut count = 0usize;
        let mut sum = 0u64;
        let mut sum_sq = 0u64;
        for r in ratings {
            count += 1;
            sum += r as u64;
            sum_sq += (r as u64) * (r as u64);
        }
        if count < 2 {
            return None;
        }
        let n = count as f64;
        let mos = sum as f64 / n;
        // integer sums keep the centred sum of squares exact up to one rounding
        let ss = (sum_sq as f64 * n - (sum as f64) * (sum as f64)) / n;
        Some(StimulusMoments {
            mos,
            variance: (ss / (n - 1.0)).max(0.0),
            count,
        })
    }

    /// Variance with the population (count) denominator.
    pub fn population_variance(&self) -> f64 {
        self.variance * (self.count as f64 - 1.0) / self.count as f64
    }
}

impl RatingMatrix {
    /// Builds a matrix from labels and subject-major cells (`None` = absent).
    pub fn new(
        subjects: Vec<String>,
        stimuli: Vec<String>,
        cells: Vec<Option<u8>>,
    ) -> Result<Self> {
        let n = subjects.len();
        let k = stimuli.len();
        if cells.len() != n * k {
            return Err(Error::InvalidMatrix(format!(
                "expected {} cells for {n} subjects x {k} stimuli, got {}",
                n * k,
                cells.len()
            )));
        }
        let mut raw = Vec::with_capacity(cells.len());
        for (idx, c) in cells.into_iter().enumerate() {
            match c {
                None => raw.push(0),
                Some(r) if (MIN_RATING..=MAX_RATING).contains(&r) => raw.push(r),
                Some(r) => {
                    return Err(Error::InvalidMatrix(format!(
                        "rating {r} of subject '{}' for stimulus '{}' is outside 1..5",
                        subjects[idx / k],
                        stimuli[idx % k]
                    )))
                }
            }
        }
        Self::validated(subjects, stimuli, raw)
    }

    /// Builds a complete matrix with generated labels (`s1..`, `x1..`).
    pub fn from_full(n_subjects: usize, n_stimuli: usize, ratings: Vec<u8>) -> Result<Self> {
        if ratings.len() != n_subjects * n_stimuli {
            return Err(Error::InvalidMatrix(format!(
                "expected {} ratings, got {}",
                n_subjects * n_stimuli,
                ratings.len()
            )));
        }
        if let Some(bad) = ratings
            .iter()
            .find(|r| !(MIN_RATING..=MAX_RATING).contains(*r))
        {
            return Err(Error::InvalidMatrix(format!(
                "rating {bad} is outside 1..5"
            )));
        }
        let subjects = (1..=n_subjects).map(|i| format!("s{i}")).collect();
        let stimuli = (1..=n_stimuli).map(|i| format!("x{i}")).collect();
        Self::validated(subjects, stimuli, ratings)
    }

    fn validated(subjects: Vec<String>, stimuli: Vec<String>, cells: Vec<u8>) -> Result<Self> {
        if subjects.len() < 2 {
            return Err(Error::InvalidMatrix(format!(
                "at least 2 subjects are required, got {}",
                subjects.len()
            )));
        }
        if stimuli.is_empty() {
            return Err(Error::InvalidMatrix("at least 1 stimulus is required".into()));
        }
        let m = RatingMatrix {
            subjects,
            stimuli,
            cells,
        };
        for x in 0..m.n_stimuli() {
            let count = m.stimulus_ratings(x).count();
            if count < 2 {
                return Err(Error::InsufficientData {
                    stimulus: m.stimuli[x].clone(),
                    count,
                });
            }
        }
        Ok(m)
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_stimuli(&self) -> usize {
        self.stimuli.len()
    }

    pub fn subject_labels(&self) -> &[String] {
        &self.subjects
    }

    pub fn stimulus_labels(&self) -> &[String] {
        &self.stimuli
    }

    pub fn rating(&self, subject: usize, stimulus: usize) -> Option<u8> {
        match self.cells[subject * self.n_stimuli() + stimulus] {
            0 => None,
            r => Some(r),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|&c| c != 0)
    }

    pub fn present_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// Present ratings of one stimulus, in subject order.
    pub fn stimulus_ratings(&self, stimulus: usize) -> impl Iterator<Item = u8> + '_ {
        let k = self.n_stimuli();
        (0..self.n_subjects())
            .map(move |u| self.cells[u * k + stimulus])
            .filter(|&r| r != 0)
    }

    /// Cells as real values (`None` = absent), subject-major.
    pub fn values(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|&c| if c == 0 { None } else { Some(c as f64) })
            .collect()
    }

    /// MOS, unbiased variance and count of stimulus `x`.
    pub fn stimulus_moments(&self, x: usize) -> Result<StimulusMoments> {
        if x >= self.n_stimuli() {
            return Err(Error::Domain(format!(
                "stimulus index {x} out of range (K = {})",
                self.n_stimuli()
            )));
        }
        let count = self.stimulus_ratings(x).count();
        StimulusMoments::from_ratings(self.stimulus_ratings(x)).ok_or_else(|| {
            Error::InsufficientData {
                stimulus: self.stimuli[x].clone(),
                count,
            }
        })
    }

    pub fn all_moments(&self) -> Result<Vec<StimulusMoments>> {
        (0..self.n_stimuli())
            .map(|x| self.stimulus_moments(x))
            .collect()
    }

    /// Mean number of present ratings per stimulus.
    pub fn mean_count(&self) -> f64 {
        self.present_count() as f64 / self.n_stimuli() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn column(ratings: &[u8]) -> RatingMatrix {
        RatingMatrix::from_full(ratings.len(), 1, ratings.to_vec()).unwrap()
    }

    #[test]
    fn constant_sample() {
        let m = column(&[3, 3, 3]).stimulus_moments(0).unwrap();
        assert_eq!((m.mos, m.variance, m.count), (3.0, 0.0, 3));
    }

    #[test]
    fn two_extremes() {
        let m = column(&[1, 5]).stimulus_moments(0).unwrap();
        assert_eq!((m.mos, m.variance, m.count), (3.0, 8.0, 2));
    }

    #[test]
    fn four_ratings() {
        let m = column(&[2, 3, 4, 5]).stimulus_moments(0).unwrap();
        assert_eq!(m.mos, 3.5);
        assert_abs_diff_eq!(m.variance, 5.0 / 3.0, epsilon = 1e-12);
        assert_eq!(m.count, 4);
    }

    #[test]
    fn single_rating_rejected_with_stimulus_name() {
        let err = RatingMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["clip7".into()],
            vec![Some(3), None],
        )
        .unwrap_err();
        match err {
            Error::InsufficientData { stimulus, count } => {
                assert_eq!(stimulus, "clip7");
                assert_eq!(count, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_scale_rejected() {
        assert!(RatingMatrix::from_full(2, 1, vec![3, 6]).is_err());
        assert!(RatingMatrix::from_full(2, 1, vec![0, 3]).is_err());
        assert!(RatingMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["x".into()],
            vec![Some(3), Some(0)]
        )
        .is_err());
    }

    #[test]
    fn shape_rules() {
        assert!(RatingMatrix::from_full(1, 1, vec![3]).is_err());
        assert!(RatingMatrix::from_full(2, 0, vec![]).is_err());
    }

    #[test]
    fn missing_cells_skipped() {
        let m = RatingMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "y".into()],
            vec![Some(1), Some(2), None, Some(4), Some(3), Some(4)],
        )
        .unwrap();
        let y = m.stimulus_moments(1).unwrap();
        assert_eq!(y.count, 3);
        let x = m.stimulus_moments(0).unwrap();
        assert_eq!((x.mos, x.count), (2.0, 2));
        assert!(!m.is_complete());
    }

    fn ratings_strategy() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(1u8..=5, 2..40)
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut r in ratings_strategy(), seed in any::<u64>()) {
            let a = StimulusMoments::from_ratings(r.iter().copied()).unwrap();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..r.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                r.swap(i, j);
            }
            let b = StimulusMoments::from_ratings(r.iter().copied()).unwrap();
            prop_assert_eq!(a.mos, b.mos);
            prop_assert!((a.variance - b.variance).abs() < 1e-12);
        }

        #[test]
        fn adding_mean_never_increases_variance(r in ratings_strategy()) {
            let a = StimulusMoments::from_ratings(r.iter().copied()).unwrap();
            // only representable when the MOS is an integer rating
            if a.mos.fract() == 0.0 {
                let mut r2 = r.clone();
                r2.push(a.mos as u8);
                let b = StimulusMoments::from_ratings(r2).unwrap();
                prop_assert!(b.variance <= a.variance + 1e-12);
            }
        }

        #[test]
        fn discrete_support_variance_bound(r in ratings_strategy()) {
            let m = StimulusMoments::from_ratings(r.iter().copied()).unwrap();
            let n = m.count as f64;
            let bound = (5.0 - m.mos) * (m.mos - 1.0) * n / (n - 1.0);
            prop_assert!(m.variance >= 0.0);
            prop_assert!(m.variance <= bound + 1e-9);
            prop_assert!((1.0..=5.0).contains(&m.mos));
        }
    }
}
