use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-compressed binary matrix: each row stores the sorted column indices
/// holding a 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMatrix {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
}

impl BinaryMatrix {
    pub fn from_rows<I, R>(cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = usize>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        for row in rows {
            let start = indices.len();
            for j in row {
                if j >= cols {
                    return Err(Error::DimensionMismatch {
                        expected: cols,
                        actual: j + 1,
                        context: "binary matrix column index",
                    });
                }
                indices.push(j as u32);
            }
            indices[start..].sort_unstable();
            let mut deduped = start;
            for k in start..indices.len() {
                if k == start || indices[k] != indices[deduped - 1] {
                    indices[deduped] = indices[k];
                    deduped += 1;
                }
            }
            indices.truncate(deduped);
            indptr.push(indices.len());
        }
        Ok(Self {
            cols,
            indptr,
            indices,
        })
    }

    pub fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Active column indices of row `i`.
    pub fn row_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.indices[self.indptr[i]..self.indptr[i + 1]]
            .iter()
            .map(|&j| j as usize)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
                context: "dense matrix storage",
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite entry at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                    context: "dense matrix row",
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Feature matrix fed to the classifier.
///
/// Text bag-of-words data is stored as [`BinaryMatrix`]; tabular and
/// embedding representations as [`DenseMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DesignMatrix {
    Binary(BinaryMatrix),
    Dense(DenseMatrix),
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        match self {
            DesignMatrix::Binary(m) => m.rows(),
            DesignMatrix::Dense(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            DesignMatrix::Binary(m) => m.cols(),
            DesignMatrix::Dense(m) => m.cols(),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, DesignMatrix::Binary(_))
    }

    /// `<row i, w>` without bounds checks on `w` beyond debug assertions.
    #[inline]
    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.cols());
        match self {
            DesignMatrix::Binary(m) => m.row_indices(i).map(|j| w[j]).sum(),
            DesignMatrix::Dense(m) => m.row(i).iter().zip(w).map(|(x, w)| x * w).sum(),
        }
    }

    /// `out += alpha * row i`.
    #[inline]
    pub fn add_row_scaled(&self, i: usize, alpha: f64, out: &mut [f64]) {
        match self {
            DesignMatrix::Binary(m) => {
                for j in m.row_indices(i) {
                    out[j] += alpha;
                }
            }
            DesignMatrix::Dense(m) => {
                for (o, x) in out.iter_mut().zip(m.row(i)) {
                    *o += alpha * x;
                }
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            DesignMatrix::Binary(m) => {
                if m.row_indices(i).any(|k| k == j) {
                    1.0
                } else {
                    0.0
                }
            }
            DesignMatrix::Dense(m) => m.row(i)[j],
        }
    }

    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        match self {
            DesignMatrix::Binary(m) => {
                let mut row = vec![0.0; m.cols()];
                for j in m.row_indices(i) {
                    row[j] = 1.0;
                }
                row
            }
            DesignMatrix::Dense(m) => m.row(i).to_vec(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        match self {
            DesignMatrix::Binary(m) => DesignMatrix::Binary(
                BinaryMatrix::from_rows(
                    m.cols(),
                    rows.iter().map(|&i| m.row_indices(i).collect::<Vec<_>>()),
                )
                .expect("indices already validated"),
            ),
            DesignMatrix::Dense(m) => {
                let mut data = Vec::with_capacity(rows.len() * m.cols());
                for &i in rows {
                    data.extend_from_slice(m.row(i));
                }
                DesignMatrix::Dense(DenseMatrix {
                    rows: rows.len(),
                    cols: m.cols(),
                    data,
                })
            }
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Result<DesignMatrix> {
        let cols = self.cols();
        if let Some(&bad) = keep.iter().find(|&&j| j >= cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad + 1,
                context: "column selection",
            });
        }
        Ok(match self {
            DesignMatrix::Binary(m) => {
                let mut remap = vec![usize::MAX; cols];
                for (new, &old) in keep.iter().enumerate() {
                    remap[old] = new;
                }
                DesignMatrix::Binary(BinaryMatrix::from_rows(
                    keep.len(),
                    (0..m.rows()).map(|i| {
                        m.row_indices(i)
                            .filter_map(|j| (remap[j] != usize::MAX).then_some(remap[j]))
                            .collect::<Vec<_>>()
                    }),
                )?)
            }
            DesignMatrix::Dense(m) => {
                let mut data = Vec::with_capacity(m.rows() * keep.len());
                for i in 0..m.rows() {
                    let row = m.row(i);
                    data.extend(keep.iter().map(|&j| row[j]));
                }
                DesignMatrix::Dense(DenseMatrix {
                    rows: m.rows(),
                    cols: keep.len(),
                    data,
                })
            }
        })
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &DesignMatrix) -> Result<DesignMatrix> {
        if self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                actual: other.cols(),
                context: "vertical stack",
            });
        }
        Ok(match (self, other) {
            (DesignMatrix::Dense(a), DesignMatrix::Dense(b)) => {
                let mut data = a.data.clone();
                data.extend_from_slice(&b.data);
                DesignMatrix::Dense(DenseMatrix {
                    rows: a.rows + b.rows,
                    cols: a.cols,
                    data,
                })
            }
            (DesignMatrix::Binary(a), DesignMatrix::Binary(b)) => {
                let mut indptr = a.indptr.clone();
                let offset = a.indices.len();
                indptr.extend(b.indptr[1..].iter().map(|p| p + offset));
                let mut indices = a.indices.clone();
                indices.extend_from_slice(&b.indices);
                DesignMatrix::Binary(BinaryMatrix {
                    cols: a.cols,
                    indptr,
                    indices,
                })
            }
            _ => {
                let rows: Vec<Vec<f64>> = (0..self.rows())
                    .map(|i| self.row_dense(i))
                    .chain((0..other.rows()).map(|i| other.row_dense(i)))
                    .collect();
                DesignMatrix::Dense(DenseMatrix::from_rows(self.cols(), &rows)?)
            }
        })
    }
}

/// Binary class labels in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidLabels(format!(
                "label {} at row {pos} is not 0 or 1",
                labels[pos]
            )));
        }
        Ok(Self(labels))
    }

    pub fn from_bools(labels: impl IntoIterator<Item = bool>) -> Self {
        Self(labels.into_iter().map(u8::from).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector(rows.iter().map(|&i| self.0[i]).collect())
    }

    pub fn concat(&self, other: &LabelVector) -> LabelVector {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        LabelVector(v)
    }

    pub fn positive_rate(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|&y| f64::from(y)).sum::<f64>() / self.0.len() as f64
    }
}

impl TryFrom<Vec<u8>> for LabelVector {
    type Error = Error;

    fn try_from(v: Vec<u8>) -> Result<Self> {
        LabelVector::new(v)
    }
}

impl From<LabelVector> for Vec<u8> {
    fn from(v: LabelVector) -> Self {
        v.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_rows_are_sorted_and_deduplicated() {
        let m = BinaryMatrix::from_rows(5, vec![vec![3, 1, 3, 1], vec![], vec![4]]).unwrap();
        assert_eq!(m.row_indices(0).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(m.row_indices(1).count(), 0);
        assert_eq!(m.rows(), 3);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn binary_rejects_out_of_range_column() {
        assert!(BinaryMatrix::from_rows(2, vec![vec![2]]).is_err());
    }

    #[test]
    fn dense_rejects_nan() {
        assert!(DenseMatrix::new(1, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn select_columns_matches_dense_view() {
        let bin = DesignMatrix::Binary(
            BinaryMatrix::from_rows(4, vec![vec![0, 2, 3], vec![1, 2]]).unwrap(),
        );
        let dense = DesignMatrix::Dense(
            DenseMatrix::from_rows(4, &[bin.row_dense(0), bin.row_dense(1)]).unwrap(),
        );
        let keep = [3, 1];
        let a = bin.select_columns(&keep).unwrap();
        let b = dense.select_columns(&keep).unwrap();
        for i in 0..2 {
            assert_eq!(a.row_dense(i), b.row_dense(i));
        }
        assert_eq!(a.row_dense(0), vec![1.0, 0.0]);
    }

    #[test]
    fn vstack_binary() {
        let a = DesignMatrix::Binary(BinaryMatrix::from_rows(3, vec![vec![0]]).unwrap());
        let b = DesignMatrix::Binary(BinaryMatrix::from_rows(3, vec![vec![1, 2], vec![]]).unwrap());
        let s = a.vstack(&b).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row_dense(1), vec![0.0, 1.0, 1.0]);
        assert_eq!(s.row_dense(2), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn labels_reject_values_above_one() {
        assert!(LabelVector::new(vec![0, 1, 2]).is_err());
        assert!(serde_json::from_str::<LabelVector>("[0,3]").is_err());
    }
}
