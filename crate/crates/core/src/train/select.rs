use crate::error::{CntsError, Result};

/// Sorted, unique flat indices into a batch of `source_len` elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMask {
    indices: Vec<usize>,
    source_len: usize,
}

impl SelectionMask {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices not in the mask, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.source_len - self.indices.len());
        let mut it = self.indices.iter().peekable();
        for i in 0..self.source_len {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| values[i]).collect()
    }
}

/// `ceil(fraction * n)`, with a small tolerance so that e.g. `0.2 * 5` stays at 1.
pub fn top_count(fraction: f64, n: usize) -> usize {
    let k = (fraction * n as f64 - 1e-9).ceil();
    (k.max(0.0) as usize).min(n)
}

/// Indices of the `ceil(fraction * n)` largest values; equal values favour the lower index.
pub fn select_top_fraction(values: &[f64], fraction: f64) -> Result<SelectionMask> {
    if values.is_empty() {
        return Err(CntsError::Shape(
            "cannot select from an empty vector".into(),
        ));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CntsError::Config(format!(
            "selection fraction {fraction} outside (0, 1]"
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CntsError::Numeric(format!(
            "selection input is not finite at index {i}"
        )));
    }
    let k = top_count(fraction, values.len());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let order = |a: &usize, b: &usize| values[*b].total_cmp(&values[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, order);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(SelectionMask {
        indices: idx,
        source_len: values.len(),
    })
}
