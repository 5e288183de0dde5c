use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Min-max scaler fitted on an initialisation window; outputs are clamped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.iter().zip(&max).any(|(lo, hi)| !(lo <= hi)) {
            bail!(
                Config,
                "scaler bounds must have equal length and min <= max"
            );
        }
        Ok(MinMaxScaler { min, max })
    }

    pub fn fit<'a>(window: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut iter = window.into_iter();
        let Some(first) = iter.next() else {
            bail!(State, "cannot fit a scaler on an empty window");
        };
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for x in iter {
            crate::error::check_dimension(min.len(), x)?;
            for (i, v) in x.iter().enumerate() {
                min[i] = min[i].min(*v);
                max[i] = max[i].max(*v);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    pub fn dimension(&self) -> usize {
        self.min.len()
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.min, &self.max)
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    ((v - lo) / span).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn scales_and_clamps() {
        let s = MinMaxScaler::new(vec![0.0, -1.0], vec![10.0, 1.0]).unwrap();
        assert_eq!(s.transform(&[5.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(s.transform(&[20.0, -3.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn fit_collects_ranges() {
        let w = [vec![1.0, 2.0], vec![3.0, 2.0]];
        let s = MinMaxScaler::fit(w.iter().map(Vec::as_slice)).unwrap();
        assert_eq!(s.bounds(), (&[1.0, 2.0][..], &[3.0, 2.0][..]));
        // constant feature maps to the middle of the unit interval
        assert_eq!(s.transform(&[2.0, 2.0]), vec![0.5, 0.5]);
    }
}
