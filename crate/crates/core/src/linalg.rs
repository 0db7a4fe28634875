//! Dense Cholesky factorization on row-major symmetric matrices.
//!
//! Row `i` of the factor depends only on rows `0..=i` of the input, so the
//! factor of a leading block equals the leading block of the factor, bit for
//! bit. Data simulation relies on this for its prefix property.

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor the `n x n` row-major matrix `a`; `None` if it is not
    /// numerically positive definite. Only the lower triangle is read.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n, "matrix must be n x n");
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    /// Factor `a + jitter * I`, without copying when `jitter == 0`.
    pub fn factor_jittered(a: &[f64], n: usize, jitter: f64) -> Option<Self> {
        if jitter == 0.0 {
            return Self::factor(a, n);
        }
        let mut b = a.to_vec();
        for i in 0..n {
            b[i * n + i] += jitter;
        }
        Self::factor(&b, n)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Row-major lower factor.
    pub fn factor_matrix(&self) -> &[f64] {
        &self.l
    }

    /// `log |A|`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// Solve `L z = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let s = b[i] - dot(&self.l[i * n..i * n + i], &b[..i]);
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solve `L^T x = z` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `L z`, row by row (prefix stable).
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| dot(&self.l[i * n..i * n + i + 1], &z[..i + 1]))
            .collect()
    }

    /// Full row-major `A^{-1}`.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        // `mt` holds L^{-T} (upper triangular), so column j of L^{-1} is row j of `mt`.
        let mut mt = vec![0.0; n * n];
        for i in 0..n {
            let lii = self.l[i * n + i];
            mt[i * n + i] = 1.0 / lii;
            for j in 0..i {
                let s = dot(&self.l[i * n + j..i * n + i], &mt[j * n + j..j * n + i]);
                mt[j * n + i] = -s / lii;
            }
        }
        let mut inv = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let v = dot(&mt[a * n + b..a * n + n], &mt[b * n + b..b * n + n]);
                inv[a * n + b] = v;
                inv[b * n + a] = v;
            }
        }
        inv
    }
}
