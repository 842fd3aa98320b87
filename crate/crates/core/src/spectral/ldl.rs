//! Up-looking sparse LDLᵀ factorization driven by the elimination tree.

use crate::error::{Error, Result};
use crate::operators::SparseOperator;

use super::ordering::nested_dissection;

/// `P A Pᵀ = L D Lᵀ` for a symmetric positive definite `A`.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Factors a symmetric matrix; only the pattern union of both triangles is consulted for
    /// the ordering and the upper triangle (after permutation) for values.
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let adj: Vec<Vec<usize>> = (0..n).map(|r| a.row(r).map(|(c, _)| c).filter(|&c| c != r).collect()).collect();
        let perm = nested_dissection(&adj);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // Column k of the permuted matrix, entries with row <= k.
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                let (pr, pc) = (inv[r], inv[c]);
                if pr <= pc {
                    cols[pc].push((pr, v));
                }
            }
        }
        let mut ap = vec![0usize; n + 1];
        let mut ai = Vec::new();
        let mut ax = Vec::new();
        for (k, col) in cols.iter_mut().enumerate() {
            col.sort_unstable_by_key(|e| e.0);
            for &(i, v) in col.iter() {
                ai.push(i);
                ax.push(v);
            }
            ap[k + 1] = ai.len();
        }
        drop(cols);

        // Symbolic: elimination tree and column counts.
        let none = usize::MAX;
        let mut parent = vec![none; n];
        let mut flag = vec![none; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &ai[ap[k]..ap[k + 1]] {
                let mut i = i0;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == none {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];

        // Numeric.
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        flag.iter_mut().for_each(|f| *f = none);
        lnz.iter_mut().for_each(|c| *c = 0);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                y[i] += ax[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let p2 = lp[i] + lnz[i];
                for p in lp[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                dk -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
            }
            if !(dk > 0.0) || !dk.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: dk, step: k });
            }
            d[k] = dk;
        }
        Ok(Ldl { n, perm, lp, li, lx, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzeros of the strictly lower factor.
    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    pub fn logdet(&self) -> f64 {
        self.d.iter().map(|v| v.ln()).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_small_spd() {
        let a = SparseOperator::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        );
        let f = Ldl::factor(&a).unwrap();
        let det = a.to_dense().determinant();
        assert!((f.logdet() - det.ln()).abs() < 1e-14);
        let x = f.solve(&[1.0, 2.0, 3.0]);
        let r = a.matvec(&x);
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14 && (r[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_rejected() {
        let a = SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(Ldl::factor(&a), Err(Error::NotPositiveDefinite { .. })));
    }
}
