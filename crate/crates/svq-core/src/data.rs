//! Input vectors and the flat dataset container the trainer consumes.

use crate::{Error, Result};
use std::ops::Deref;

/// A finite real input vector. Construction validates that every component is
/// finite, so downstream numeric code never has to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct InputVector(Vec<f64>);

impl InputVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("input vector component {i}")));
        }
        Ok(InputVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for InputVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for InputVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A fixed collection of `n` input vectors of common dimension `d`, stored
/// row-major in one contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from row-major values. `values.len()` must equal
    /// `n * d` and every entry must be finite.
    pub fn from_rows(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "dataset value at row {}, column {}",
                i / d,
                i % d
            )));
        }
        Ok(Dataset { values, n, d })
    }

    /// Builds a dataset from already-validated vectors, which must share one
    /// dimension.
    pub fn from_points<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = InputVector>,
    {
        let mut values = Vec::new();
        let mut n = 0;
        let mut d = 0;
        for (i, p) in points.into_iter().enumerate() {
            if i == 0 {
                d = p.dim();
            } else if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
            values.extend_from_slice(&p);
            n += 1;
        }
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset { values, n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    /// New dataset holding the rows selected by `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.n,
                });
            }
            values.extend_from_slice(self.point(i));
        }
        Ok(Dataset {
            values,
            n: indices.len(),
            d: self.d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_vector_rejects_non_finite() {
        assert!(InputVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(InputVector::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(InputVector::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn dataset_round_trips_points() {
        let pts = vec![
            InputVector::new(vec![1.0, 2.0]).unwrap(),
            InputVector::new(vec![3.0, 4.0]).unwrap(),
        ];
        let ds = Dataset::from_points(pts).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.point(0), &[1.0, 2.0]);
        assert_eq!(ds.point(1), &[3.0, 4.0]);
        assert_eq!(ds.iter().count(), 2);
    }

    #[test]
    fn dataset_rejects_ragged_points() {
        let pts = vec![
            InputVector::new(vec![1.0, 2.0]).unwrap(),
            InputVector::new(vec![3.0]).unwrap(),
        ];
        assert!(Dataset::from_points(pts).is_err());
    }

    #[test]
    fn dataset_rejects_bad_shape() {
        assert!(Dataset::from_rows(vec![0.0; 5], 2, 3).is_err());
        assert!(Dataset::from_rows(vec![0.0; 6], 2, 3).is_ok());
    }

    #[test]
    fn dataset_must_be_nonempty() {
        assert!(matches!(Dataset::from_rows(vec![], 0, 3), Err(Error::EmptyDataset)));
        assert!(matches!(Dataset::from_points(vec![]), Err(Error::EmptyDataset)));
        let ds = Dataset::from_rows(vec![1.0, 2.0], 1, 2).unwrap();
        assert!(matches!(ds.subset(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn subset_selects_rows_in_order() {
        let ds = Dataset::from_rows(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 3, 2).unwrap();
        let sub = ds.subset(&[2, 0]).unwrap();
        assert_eq!(sub.point(0), &[4.0, 5.0]);
        assert_eq!(sub.point(1), &[0.0, 1.0]);
        assert!(ds.subset(&[3]).is_err());
    }
}
