//! Sparse symmetric linear algebra: CSR storage, reverse Cuthill-McKee
//! ordering, and an up-looking LDL^T factorization (elimination-tree based,
//! no pivoting). The FEM systems solved here are positive definite after
//! grounding, so pivot-free LDL^T is safe.

use alloc::vec;
use alloc::vec::Vec;
use crate::error::Error;
use crate::Result;

/// Compressed sparse row matrix with sorted column indices per row.
/// Symmetric matrices store both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut order: Vec<usize> = vec![0; triplets.len()];
        {
            let mut next = counts.clone();
            for (k, &(r, _, _)) in triplets.iter().enumerate() {
                order[next[r]] = k;
                next[r] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for r in 0..n {
            let slice = &mut order[counts[r]..counts[r + 1]];
            slice.sort_by_key(|&k| triplets[k].1);
            for &k in slice.iter() {
                let (_, c, v) = triplets[k];
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
    }

    /// Quadratic form `x^T A y`.
    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut row_acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                row_acc += v * y[*c];
            }
            acc += x[r] * row_acc;
        }
        acc
    }

    /// Symmetric submatrix on `keep` (strictly increasing old indices),
    /// reindexed to `0..keep.len()`.
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut new_of_old = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            new_of_old[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &old_r in keep {
            let (cols, vals) = self.row(old_r);
            for (c, v) in cols.iter().zip(vals) {
                let nc = new_of_old[*c];
                if nc != usize::MAX {
                    col_idx.push(nc);
                    values.push(*v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n: keep.len(), row_ptr, col_idx, values }
    }
}

/// Reverse Cuthill-McKee ordering for bandwidth reduction.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree = |v: usize| a.row(v).0.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        let base = out.len();
        out.push(start);
        visited[start] = true;
        let mut head = base;
        while head < out.len() {
            let v = out[head];
            head += 1;
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&u| u != v && !visited[u]).collect();
            nbrs.sort_by_key(|&u| (degree(u), u));
            for u in nbrs {
                if !visited[u] {
                    visited[u] = true;
                    out.push(u);
                }
            }
        }
    };

    while order.len() < n {
        // Lowest-degree unvisited vertex, then a double BFS sweep toward a
        // pseudo-peripheral start.
        let mut start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree(v), v))
            .expect("unvisited vertex exists");
        for _ in 0..2 {
            let mut probe = visited.clone();
            let mut level = Vec::new();
            bfs(start, &mut probe, &mut level);
            start = *level.last().unwrap();
        }
        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Sparse LDL^T factorization of a symmetric matrix under a fill-reducing
/// permutation (up-looking, following the classic elimination-tree
/// algorithm). Fails on exactly-zero pivots.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    pub fn factor(a: &CsrMatrix, perm: &[usize]) -> Result<Self> {
        let n = a.n();
        assert_eq!(perm.len(), n, "permutation length");
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Upper triangle of the permuted matrix in column-compressed form.
        let mut col_counts = vec![0usize; n + 1];
        for old_r in 0..n {
            let i = iperm[old_r];
            for &old_c in a.row(old_r).0 {
                let j = iperm[old_c];
                if i <= j {
                    col_counts[j + 1] += 1;
                }
            }
        }
        for k in 0..n {
            col_counts[k + 1] += col_counts[k];
        }
        let nnz_upper = col_counts[n];
        let mut up_i = vec![0usize; nnz_upper];
        let mut up_x = vec![0.0f64; nnz_upper];
        {
            let mut next = col_counts.clone();
            for old_r in 0..n {
                let i = iperm[old_r];
                let (cols, vals) = a.row(old_r);
                for (&old_c, &v) in cols.iter().zip(vals) {
                    let j = iperm[old_c];
                    if i <= j {
                        up_i[next[j]] = i;
                        up_x[next[j]] = v;
                        next[j] += 1;
                    }
                }
            }
        }

        // Symbolic pass: elimination tree and per-column counts of L.
        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            parent[k] = usize::MAX;
            flag[k] = k;
            for p in col_counts[k]..col_counts[k + 1] {
                let mut i = up_i[p];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == usize::MAX {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }

        // Numeric pass.
        let mut li = vec![0usize; lp[n]];
        let mut lx = vec![0.0f64; lp[n]];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lfill = vec![0usize; n];
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            lfill[k] = 0;
            for p in col_counts[k]..col_counts[k + 1] {
                let i0 = up_i[p];
                if i0 <= k {
                    y[i0] += up_x[p];
                    let mut len = 0;
                    let mut i = i0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        len -= 1;
                        top -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lfill[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lfill[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::SingularSystem("zero pivot in LDL^T factorization"));
            }
        }

        Ok(Self { n, perm: perm.to_vec(), lp, li, lx, d })
    }

    /// Convenience: factor with an RCM ordering computed from the pattern.
    pub fn factor_rcm(a: &CsrMatrix) -> Result<Self> {
        let perm = rcm(a);
        Self::factor(a, &perm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0f64; n];
        for k in 0..n {
            x[k] = b[self.perm[k]];
        }
        // L z = b (unit lower-triangular, stored by columns).
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for k in 0..n {
            x[k] /= self.d[k];
        }
        // L^T y = z.
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        let mut out = vec![0.0f64; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    /// Solve with one step of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let mut r = vec![0.0f64; self.n];
        a.matvec(&x, &mut r);
        for i in 0..self.n {
            r[i] = b[i] - r[i];
        }
        let dx = self.solve(&r);
        for i in 0..self.n {
            x[i] += dx[i];
        }
        x
    }
}
