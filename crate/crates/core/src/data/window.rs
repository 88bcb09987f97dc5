use crate::error::{CntsError, Result};
use crate::numerics::Matrix;

/// Overlapping windows cut from one series, one window per row.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    windows: Matrix,
    origins: Vec<usize>,
    stride: usize,
}

impl WindowBatch {
    /// Wraps an explicit window matrix; origins are informational.
    pub fn from_parts(windows: Matrix, origins: Vec<usize>, stride: usize) -> Result<Self> {
        if origins.len() != windows.rows() {
            return Err(CntsError::Shape(format!(
                "{} origins for {} windows",
                origins.len(),
                windows.rows()
            )));
        }
        Ok(WindowBatch {
            windows,
            origins,
            stride,
        })
    }

    pub fn windows(&self) -> &Matrix {
        &self.windows
    }

    pub fn origins(&self) -> &[usize] {
        &self.origins
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn window_len(&self) -> usize {
        self.windows.cols()
    }

    pub fn len(&self) -> usize {
        self.windows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.rows() == 0
    }

    /// Sub-batch made of the listed rows.
    pub fn select(&self, rows: &[usize]) -> WindowBatch {
        WindowBatch {
            windows: self.windows.select_rows(rows),
            origins: rows.iter().map(|&r| self.origins[r]).collect(),
            stride: self.stride,
        }
    }

    /// Consecutive sub-batches of at most `batch_size` rows, taken in `order`.
    pub fn batches(&self, order: &[usize], batch_size: usize) -> Vec<WindowBatch> {
        order
            .chunks(batch_size.max(1))
            .map(|rows| self.select(rows))
            .collect()
    }
}

/// Window start positions: `0, stride, 2*stride, ...` plus a tail window at `n - len`
/// whenever the regular grid leaves trailing points uncovered.
pub fn window_origins(n: usize, len: usize, stride: usize) -> Result<Vec<usize>> {
    if len == 0 {
        return Err(CntsError::Validation(
            "window length must be at least 1".into(),
        ));
    }
    if stride == 0 {
        return Err(CntsError::Validation("stride must be at least 1".into()));
    }
    if len > n {
        return Err(CntsError::Validation(format!(
            "window length {len} exceeds series length {n}"
        )));
    }
    let mut origins: Vec<usize> = (0..=n - len).step_by(stride).collect();
    let last = *origins.last().expect("origin 0 always present");
    if last + len < n {
        origins.push(n - len);
    }
    Ok(origins)
}

/// Cuts `values` into length-`len` windows.
pub fn make_windows(values: &[f64], len: usize, stride: usize) -> Result<WindowBatch> {
    let origins = window_origins(values.len(), len, stride)?;
    let mut data = Vec::with_capacity(origins.len() * len);
    for &o in &origins {
        data.extend_from_slice(&values[o..o + len]);
    }
    Ok(WindowBatch {
        windows: Matrix::from_vec(origins.len(), len, data)?,
        origins,
        stride,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_examples() {
        assert_eq!(window_origins(5, 2, 1).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(window_origins(5, 2, 2).unwrap(), vec![0, 2, 3]);
        assert_eq!(window_origins(4, 4, 1).unwrap(), vec![0]);
    }

    #[test]
    fn origins_cover_every_index() {
        for n in 1..40 {
            for len in 1..=n {
                for stride in 1..=len {
                    let origins = window_origins(n, len, stride).unwrap();
                    let mut covered = vec![false; n];
                    for o in &origins {
                        covered[*o..*o + len].iter_mut().for_each(|c| *c = true);
                    }
                    assert!(
                        covered.iter().all(|&c| c),
                        "n={n} len={len} stride={stride}"
                    );
                    assert!(origins.windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_window() {
        assert!(matches!(
            make_windows(&[1.0, 2.0], 3, 1),
            Err(CntsError::Validation(_))
        ));
        assert!(make_windows(&[1.0, 2.0], 0, 1).is_err());
        assert!(make_windows(&[1.0, 2.0], 1, 0).is_err());
    }

    #[test]
    fn windows_are_source_slices() {
        let values: Vec<f64> = (0..11).map(|i| i as f64 * 1.5).collect();
        let batch = make_windows(&values, 4, 3).unwrap();
        for (row, &o) in batch.windows().iter_rows().zip(batch.origins()) {
            assert_eq!(row, &values[o..o + 4]);
        }
    }
}
