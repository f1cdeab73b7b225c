//! Dense LU factorization with partial pivoting.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        let k = r * self.n + c;
        self.data[k] = self.data[k] + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|r| {
                self.data[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Solves `A x = b` in place, overwriting `b` with `x` and `self` with
    /// its factors. Returns the column of the first negligible pivot on failure.
    pub fn solve_in_place(&mut self, b: &mut [T]) -> Result<(), usize> {
        let n = self.n;
        let scale = self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
        let tiny = scale * T::epsilon() * T::lit(n.max(1) as f64);
        if scale == T::zero() {
            return Err(0);
        }
        for k in 0..n {
            let (mut piv, mut best) = (k, self.get(k, k).abs());
            for r in k + 1..n {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if !(best > tiny) {
                return Err(k);
            }
            if piv != k {
                for c in 0..n {
                    self.data.swap(k * n + c, piv * n + c);
                }
                b.swap(k, piv);
            }
            let d = self.get(k, k);
            for r in k + 1..n {
                let f = self.get(r, k) / d;
                if f == T::zero() {
                    continue;
                }
                self.data[r * n + k] = f;
                for c in k + 1..n {
                    let v = self.get(k, c);
                    self.data[r * n + c] = self.data[r * n + c] - f * v;
                }
                b[r] = b[r] - f * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for (c, bc) in b.iter().enumerate().skip(k + 1) {
                acc = acc - self.get(k, c) * *bc;
            }
            b[k] = acc / self.get(k, k);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_small_system() {
        let mut a = DenseMatrix::<f64>::zeros(3);
        let vals = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for (r, row) in vals.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                a.add(r, c, *v);
            }
        }
        let x = [1.0, -2.0, 0.5];
        let mut b = a.mul_vec(&x);
        a.solve_in_place(&mut b).unwrap();
        for (u, v) in b.iter().zip(x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn detects_singular() {
        let mut a = DenseMatrix::<f64>::zeros(2);
        a.add(0, 0, 1e-3);
        a.add(0, 1, -1e-3);
        a.add(1, 0, -1e-3);
        a.add(1, 1, 1e-3);
        assert_eq!(a.solve_in_place(&mut [0.0, 0.0]), Err(1));
    }

    proptest! {
        #[test]
        fn diagonally_dominant_systems_solve(
            vals in proptest::collection::vec(-1.0f64..1.0, 16),
            x in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let mut a = DenseMatrix::<f64>::zeros(4);
            for r in 0..4 {
                for c in 0..4 {
                    a.add(r, c, vals[r * 4 + c] + if r == c { 5.0 } else { 0.0 });
                }
            }
            let mut b = a.mul_vec(&x);
            a.solve_in_place(&mut b).unwrap();
            for (u, v) in b.iter().zip(&x) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
