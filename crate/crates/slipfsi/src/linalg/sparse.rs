use std::ops::{AddAssign, Mul};

use num_traits::Zero;

/// Coordinate-format accumulator. Duplicate entries are summed on conversion.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.nrows && c < self.ncols);
        if v != 0.0 {
            self.entries.push((r, c, v));
        }
    }

    pub fn extend(&mut self, other: Triplets) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.entries.extend(other.entries);
    }

    pub fn to_csr(mut self) -> Csr {
        // stable, so duplicates are summed in insertion order
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }
}

/// Compressed sparse row matrix with real entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).to_csr()
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.data[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// y = A x for real or complex x.
    pub fn mul_vec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Zero + AddAssign + Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let mut s = T::zero();
                for (c, v) in self.row(r) {
                    s += x[c] * v;
                }
                s
            })
            .collect()
    }

    /// y = Aᵀ x.
    pub fn tmul_vec<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Zero + AddAssign + Mul<f64, Output = T>,
    {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                y[c] += x[r] * v;
            }
        }
        y
    }

    /// xᵀ A y for real vectors.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        dot(x, &ay)
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Triplets::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.iter() {
            t.push(c, r, v);
        }
        t.to_csr()
    }

    pub fn scaled(&self, s: f64) -> Csr {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Linear combination Σ cₖ Aₖ of equally sized matrices.
    pub fn combine(terms: &[(f64, &Csr)]) -> Csr {
        let (nr, nc) = (terms[0].1.nrows, terms[0].1.ncols);
        let mut t = Triplets::new(nr, nc);
        for (s, a) in terms {
            assert_eq!((a.nrows, a.ncols), (nr, nc));
            for (r, c, v) in a.iter() {
                t.push(r, c, s * v);
            }
        }
        t.to_csr()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = Csr::combine(&[(1.0, self), (-1.0, &t)]);
        d.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// Submatrix with rows `0..nr` and columns `0..nc`.
    pub fn leading(&self, nr: usize, nc: usize) -> Csr {
        let mut t = Triplets::new(nr, nc);
        for r in 0..nr {
            for (c, v) in self.row(r) {
                if c < nc {
                    t.push(r, c, v);
                }
            }
        }
        t.to_csr()
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols = Vec::new();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != 0.0 {
                    indices.push(c);
                    data.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Galerkin projection `Pᵀ · self · P`.
    pub fn ptap(&self, p: &Csr) -> Csr {
        p.transpose().matmul(&self.matmul(p))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}
