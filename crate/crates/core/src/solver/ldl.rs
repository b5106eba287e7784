//! Sparse LDLᵀ factorization of symmetric quasi-definite matrices.
//!
//! The matrix is given by its upper triangle (diagonal always present). A
//! minimum-degree ordering is computed once per sparsity pattern; numeric
//! factorization follows the up-looking elimination-tree scheme without
//! pivoting, so each pivot must carry a known sign. Pivots with the wrong sign
//! or tiny magnitude are replaced by `sign * delta`.

use std::collections::BTreeSet;

use super::csc::Csc;

/// Elimination order minimizing the exact degree greedily.
/// Ties break on the lower index, so the result is deterministic.
pub(crate) fn minimum_degree(upper: &Csc) -> Vec<usize> {
    let n = upper.ncols;
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for j in 0..n {
        for (i, _) in upper.col(j) {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut degree: Vec<usize> = adj.iter().map(BTreeSet::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (degree[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                }
            }
        }
        for &a in &nbrs {
            queue.remove(&(degree[a], a));
            degree[a] = adj[a].len();
            queue.insert((degree[a], a));
        }
    }
    order
}

const NONE: usize = usize::MAX;

/// Symbolic analysis plus numeric storage for one sparsity pattern.
#[derive(Debug, Clone)]
pub(crate) struct LdlFactor {
    n: usize,
    /// perm[k] = original index placed at position k.
    perm: Vec<usize>,
    /// Permuted upper-triangular pattern.
    pattern: Csc,
    /// For every nonzero of the source matrix, its slot in `pattern.vals`.
    slot: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    /// Number of pivots replaced in the last factorization.
    pub regularized: usize,
}

impl LdlFactor {
    pub fn analyze(upper: &Csc) -> Self {
        let n = upper.ncols;
        let perm = minimum_degree(upper);
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }

        // permuted entries land at (min, max) of the new indices
        let mut count = vec![0usize; n + 1];
        for j in 0..n {
            for (i, _) in upper.col(j) {
                count[pinv[i].max(pinv[j]) + 1] += 1;
            }
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let colptr = count.clone();
        let mut next = count;
        let nnz = upper.vals.len();
        let mut rowind = vec![0; nnz];
        let mut slot = vec![0; nnz];
        for j in 0..n {
            for k in upper.colptr[j]..upper.colptr[j + 1] {
                let (a, b) = (pinv[upper.rowind[k]], pinv[j]);
                let (r, c) = (a.min(b), a.max(b));
                rowind[next[c]] = r;
                slot[k] = next[c];
                next[c] += 1;
            }
        }
        let pattern = Csc {
            nrows: n,
            ncols: n,
            colptr,
            rowind,
            vals: vec![0.0; nnz],
        };

        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &pattern.rowind[pattern.colptr[j]..pattern.colptr[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        LdlFactor {
            n,
            perm,
            pattern,
            slot,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            regularized: 0,
        }
    }

    #[cfg(test)]
    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    /// Factor `upper_vals` (values in the layout of the analyzed matrix) with
    /// `extra_diag` added to the diagonal, in original ordering.
    pub fn factor(
        &mut self,
        upper: &Csc,
        extra_diag: &[f64],
        signs: &[f64],
        eps: f64,
        delta: f64,
    ) {
        let n = self.n;
        for (k, &v) in upper.vals.iter().enumerate() {
            self.pattern.vals[self.slot[k]] = v;
        }
        let mut extra = vec![0.0; n];
        let mut sign = vec![0.0; n];
        for k in 0..n {
            extra[k] = extra_diag[self.perm[k]];
            sign[k] = signs[self.perm[k]];
        }

        let mut y_vals = vec![0.0; n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        self.regularized = 0;

        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = extra[k];
            for p in self.pattern.colptr[k]..self.pattern.colptr[k + 1] {
                let b = self.pattern.rowind[p];
                let v = self.pattern.vals[p];
                if b == k {
                    self.d[k] += v;
                    continue;
                }
                y_vals[b] += v;
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut nx = self.etree[b];
                    while nx != NONE && nx < k {
                        if y_used[nx] {
                            break;
                        }
                        y_used[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        nx = self.etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for t in (0..nnz_y).rev() {
                let c = y_idx[t];
                let yc = y_vals[c];
                let end = next_space[c];
                for j in self.lp[c]..end {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[end] = k;
                let l = yc * self.dinv[c];
                self.lx[end] = l;
                self.d[k] -= yc * l;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }
            if sign[k] * self.d[k] <= eps {
                self.d[k] = sign[k] * delta;
                self.regularized += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
    }

    /// Pivots of the last factorization, in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Solve in place (original ordering).
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }
}

/// y = K x for K symmetric stored as its upper triangle.
pub(crate) fn sym_upper_mul(upper: &Csc, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..upper.ncols {
        for (i, v) in upper.col(j) {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }
}
