use alloc::vec;
use alloc::vec::Vec;

/// Square sparse matrix in compressed row form, with columns sorted in each row.
///
/// `symmetric` records the result of an exact (bitwise) comparison of every
/// entry with its transpose, done once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseSymmetricMatrix {
    /// Builds from per-row `(column, value)` lists. Duplicate columns within a row
    /// are summed in the order given.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < dim, "column {c} out of range for dimension {dim}");
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut m = SparseSymmetricMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        };
        m.symmetric = m.check_symmetry();
        m
    }

    /// Builds from `(row, column, value)` triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(rows)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_rows(d.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Exact symmetry certificate computed at construction.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as `(row, column, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    fn check_symmetry(&self) -> bool {
        self.entries()
            .all(|(i, j, v)| self.get(j, i).to_bits() == v.to_bits() || (v == 0.0 && self.get(j, i) == 0.0))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let mut r = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[p] * y[self.col_idx[p]];
            }
            s += xi * r;
        }
        s
    }

    /// Infinity norm (maximum absolute row sum); an upper bound for the spectral
    /// radius used as the scale for residual tolerances.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim * self.dim];
        for (i, j, v) in self.entries() {
            d[i * self.dim + j] = v;
        }
        d
    }

    /// Same matrix with rows and columns renumbered: entry `(i, j)` moves to
    /// `(p[i], p[j])`.
    pub fn permuted(&self, p: &[usize]) -> Self {
        let mut rows = vec![Vec::new(); self.dim];
        for (i, j, v) in self.entries() {
            rows[p[i]].push((p[j], v));
        }
        Self::from_rows(rows)
    }
}
