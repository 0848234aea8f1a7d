use nalgebra::DMatrix;

/// Row-packed lower-triangular Cholesky factor that grows one bordered row at a time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LowerTriangular {
    n: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.row(i)[i]
    }

    /// Solves `L x = b`.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x = Vec::with_capacity(self.n);
        for (i, bi) in b.iter().enumerate() {
            let x_i = self.next_entry(i, *bi, &x);
            x.push(x_i);
        }
        x
    }

    /// Entry `i` of the solution of `L x = b` given the first `i` entries.
    #[inline]
    pub(crate) fn next_entry(&self, i: usize, b_i: f64, head: &[f64]) -> f64 {
        let row = self.row(i);
        (b_i - dot(&row[..i], head)) / row[i]
    }

    /// Appends the row `[cross, diag]`; the caller has already solved for `cross`.
    pub(crate) fn push_row(&mut self, cross: &[f64], diag: f64) {
        debug_assert_eq!(cross.len(), self.n);
        self.data.extend_from_slice(cross);
        self.data.push(diag);
        self.n += 1;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
