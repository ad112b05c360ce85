//! Sparse symmetric positive-definite systems: CSR storage, a reverse
//! Cuthill–McKee envelope Cholesky factorization, and Jacobi-preconditioned
//! conjugate gradients for systems too large to factor.

use std::collections::VecDeque;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Required relative residual `‖Ax − b‖/‖b‖`.
    pub tolerance: f64,
    /// Systems with fewer unknowns are factored directly.
    pub direct_limit: usize,
    /// Largest envelope (stored entries of the factor) attempted directly.
    pub max_envelope: usize,
    pub max_cg_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            direct_limit: 200_000,
            max_envelope: 200_000_000,
            max_cg_iterations: 100_000,
        }
    }
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn extend(&mut self, other: TripletBuilder) {
        self.entries.extend(other.entries);
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Square sparse matrix in compressed-row form with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
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
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    /// Sum of two matrices of equal size.
    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut b = TripletBuilder::new(self.n);
        for m in [self, other] {
            for i in 0..m.n {
                for (j, v) in m.row(i) {
                    b.add(i, j, v);
                }
            }
        }
        b.build()
    }
}

/// Reverse Cuthill–McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).filter(|&(j, _)| j != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| degree[i]);
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        // one extra sweep to move toward a pseudo-peripheral node
        let root = last_level_min_degree(a, start, &degree, &visited);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| degree[j]);
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn last_level_min_degree(a: &CsrMatrix, start: usize, degree: &[usize], blocked: &[bool]) -> usize {
    let mut level = vec![usize::MAX; a.n];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        if level[v] > level[last] || (level[v] == level[last] && degree[v] < degree[last]) {
            last = v;
        }
        for (j, _) in a.row(v) {
            if level[j] == usize::MAX && !blocked[j] {
                level[j] = level[v] + 1;
                queue.push_back(j);
            }
        }
    }
    last
}

/// Cholesky factor `L` of `P A Pᵀ` stored by rows over each row's envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Envelope size the factorization of `a` would need under RCM ordering.
    pub fn envelope_size(a: &CsrMatrix, perm: &[usize]) -> usize {
        let inv = inverse_permutation(perm);
        (0..a.n)
            .map(|new_i| {
                let old = perm[new_i];
                let first = a
                    .row(old)
                    .map(|(j, _)| inv[j])
                    .min()
                    .unwrap_or(new_i)
                    .min(new_i);
                new_i - first + 1
            })
            .sum()
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n;
        let inv = inverse_permutation(&perm);
        let mut first = vec![0usize; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = a
                .row(perm[i])
                .map(|(j, _)| inv[j])
                .min()
                .unwrap_or(i)
                .min(i);
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            for (j, v) in a.row(perm[i]) {
                let jj = inv[j];
                if jj <= i {
                    data[offset[i] + jj - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, tail) = data.split_at_mut(offset[i]);
                let row_j = &head[offset[j]..offset[j + 1]];
                let row_i = &mut tail[..(i - fi + 1)];
                let dot: f64 = row_i[k0 - fi..j - fi]
                    .iter()
                    .zip(&row_j[k0 - fj..j - fj])
                    .map(|(x, y)| x * y)
                    .sum();
                let pivot = row_j[j - fj];
                row_i[j - fi] = (row_i[j - fi] - dot) / pivot;
            }
            let row_i = &mut data[offset[i]..offset[i + 1]];
            let (off, diag) = row_i.split_at_mut(i - fi);
            let d = diag[0] - off.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) {
                return Err(Error::Assembly(format!(
                    "matrix is not positive definite (pivot {d:.3e} at row {})",
                    perm[i]
                )));
            }
            diag[0] = d.sqrt();
        }
        Ok(Self {
            perm,
            inv,
            first,
            offset,
            data,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let dot: f64 = row[..i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let xi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (old, &new) in self.inv.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Assembly(format!(
                "conjugate gradients met pᵀAp = {pap:.3e}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            let true_rel = norm(&residual(a, &x, b)) / bnorm;
            if true_rel <= tol {
                return Ok((x, it, true_rel));
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver {
        residual: norm(&residual(a, &x, b)) / bnorm,
        iterations: max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub relative_residual: f64,
    pub iterations: usize,
    pub direct: bool,
}

/// Solves `A x = b` for symmetric positive-definite `A` to the requested
/// relative residual, factoring directly when the system is small enough.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; a.n],
            SolveStats {
                relative_residual: 0.0,
                iterations: 0,
                direct: true,
            },
        ));
    }
    let perm = reverse_cuthill_mckee(a);
    if a.n < opts.direct_limit && EnvelopeCholesky::envelope_size(a, &perm) <= opts.max_envelope {
        let chol = EnvelopeCholesky::factor_with(a, perm)?;
        let mut x = chol.solve(b);
        let mut rel = 0.0;
        for it in 0..4 {
            let r = residual(a, &x, b);
            rel = norm(&r) / bnorm;
            if rel <= opts.tolerance {
                return Ok((
                    x,
                    SolveStats {
                        relative_residual: rel,
                        iterations: it,
                        direct: true,
                    },
                ));
            }
            let dx = chol.solve(&r);
            x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
        }
        return Err(Error::Solver {
            residual: rel,
            iterations: 4,
        });
    }
    let (x, iterations, rel) = pcg(a, b, opts.tolerance, opts.max_cg_iterations)?;
    Ok((
        x,
        SolveStats {
            relative_residual: rel,
            iterations,
            direct: false,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 1D Laplacian plus a mass shift, shuffled by a fixed permutation so the
    /// ordering matters.
    fn laplacian(n: usize, shift: f64) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        let p = |i: usize| (i * 7) % n;
        for i in 0..n {
            b.add(p(i), p(i), 2.0 + shift);
            if i + 1 < n {
                b.add(p(i), p(i + 1), -1.0);
                b.add(p(i + 1), p(i), -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 0, 4.0);
        let m = b.build();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn rcm_shrinks_envelope() {
        let a = laplacian(50, 0.1);
        let identity: Vec<usize> = (0..50).collect();
        let rcm = reverse_cuthill_mckee(&a);
        assert!(
            EnvelopeCholesky::envelope_size(&a, &rcm)
                < EnvelopeCholesky::envelope_size(&a, &identity)
        );
        let mut sorted = rcm.clone();
        sorted.sort();
        assert_eq!(sorted, identity);
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, -1.0);
        assert!(matches!(
            EnvelopeCholesky::factor(&b.build()),
            Err(Error::Assembly(_))
        ));
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian(200, 0.01);
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x1, s1) = solve_spd(&a, &b, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            direct_limit: 0,
            ..Default::default()
        };
        let (x2, s2) = solve_spd(&a, &b, &opts).unwrap();
        assert!(s1.direct && !s2.direct);
        assert!(s1.relative_residual <= 1e-10 && s2.relative_residual <= 1e-10);
        let diff = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = x1.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6 * scale, "{diff}");
    }

    proptest! {
        #[test]
        fn cholesky_solves_random_spd(n in 2usize..40, seed in 0u64..1000) {
            // diagonally dominant random sparse symmetric matrix
            let mut b = TripletBuilder::new(n);
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) as f64 / (1u64 << 31) as f64 };
            let mut diag = vec![1.0; n];
            for i in 0..n {
                for j in 0..i {
                    if next() < 0.2 {
                        let v = next() - 0.5;
                        b.add(i, j, v);
                        b.add(j, i, v);
                        diag[i] += v.abs();
                        diag[j] += v.abs();
                    }
                }
            }
            for (i, d) in diag.iter().enumerate() { b.add(i, i, *d); }
            let a = b.build();
            prop_assert!(a.is_symmetric(0.0));
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
            let x = EnvelopeCholesky::factor(&a).unwrap().solve(&rhs);
            let r = residual(&a, &x, &rhs);
            prop_assert!(norm(&r) <= 1e-12 * norm(&rhs));
        }
    }
}
