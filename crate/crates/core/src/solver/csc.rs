use nalgebra_sparse::CscMatrix;

/// Mutable compressed-column matrix used inside the solver.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csc {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csc {
    pub fn from_nalgebra(m: &CscMatrix<f64>) -> Self {
        Csc {
            nrows: m.nrows(),
            ncols: m.ncols(),
            colptr: m.col_offsets().to_vec(),
            rowind: m.row_indices().to_vec(),
            vals: m.values().to_vec(),
        }
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.colptr[j]..self.colptr[j + 1];
        self.rowind[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    /// y += A x
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (i, v) in self.col(j) {
                    y[i] += v * xj;
                }
            }
        }
    }

    /// y += Aᵀ x
    pub fn tmul_add(&self, x: &[f64], y: &mut [f64]) {
        for (j, yj) in y.iter_mut().enumerate() {
            *yj += self.col(j).map(|(i, v)| v * x[i]).sum::<f64>();
        }
    }

    pub fn transpose(&self) -> Csc {
        let mut count = vec![0usize; self.nrows + 1];
        for &i in &self.rowind {
            count[i + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let colptr = count.clone();
        let mut next = count;
        let mut rowind = vec![0; self.rowind.len()];
        let mut vals = vec![0.0; self.vals.len()];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                let k = next[i];
                rowind[k] = j;
                vals[k] = v;
                next[i] += 1;
            }
        }
        Csc {
            nrows: self.ncols,
            ncols: self.nrows,
            colptr,
            rowind,
            vals,
        }
    }

    /// Infinity norm of every column.
    pub fn col_norms(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| self.col(j).fold(0.0, |m, (_, v)| f64::max(m, v.abs())))
            .collect()
    }

    /// Infinity norm of every row.
    pub fn row_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0_f64; self.nrows];
        for j in 0..self.ncols {
            for (i, v) in self.col(j) {
                out[i] = out[i].max(v.abs());
            }
        }
        out
    }

    /// A ← diag(left) · A · diag(right)
    pub fn scale(&mut self, left: &[f64], right: &[f64]) {
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                self.vals[k] *= left[self.rowind[k]] * right[j];
            }
        }
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
