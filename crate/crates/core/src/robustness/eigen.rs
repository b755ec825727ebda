//! Dense symmetric eigensolvers.
//!
//! Two independent routines live here: a values-only path that reduces a
//! packed lower triangle to tridiagonal form and runs implicit QL, and a
//! full decomposition (EISPACK `tred2`/`tql2` lineage) that also
//! accumulates eigenvectors.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_QL_ITERS: usize = 60;

/// Ascending real spectrum of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T = f64> {
    pub eigenvalues: Vec<T>,
    /// Eigenvalues with magnitude at or below this count as zero.
    pub zero_tolerance: T,
}

impl<T: Real> Spectrum<T> {
    fn from_sorted(eigenvalues: Vec<T>) -> Self {
        let largest = eigenvalues
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()));
        let zero_tolerance = T::lit(1e-9) * largest.max(T::one());
        Self {
            eigenvalues,
            zero_tolerance,
        }
    }

    /// Number of eigenvalues within the zero tolerance. For a graph
    /// Laplacian this is the number of connected components.
    pub fn zero_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|x| x.abs() <= self.zero_tolerance)
            .count()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = T> + '_ {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|x| x.abs() > self.zero_tolerance)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn check_symmetric<T: Real>(m: &Array2<T>) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::Contract(format!(
            "eigensolver needs a square matrix, got {rows}x{cols}"
        )));
    }
    let scale = m.iter().fold(T::one(), |acc, &x| acc.max(x.abs()));
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * scale;
    for i in 0..rows {
        for j in 0..i {
            let (a, b) = (m[[i, j]], m[[j, i]]);
            if !((a - b).abs() <= tol) {
                return Err(Error::Contract(format!(
                    "matrix not symmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
        }
    }
    Ok(rows)
}

/// Full ascending spectrum of a symmetric matrix.
pub fn symmetric_eigenvalues<T: Real>(m: &Array2<T>) -> Result<Spectrum<T>> {
    let n = check_symmetric(m)?;
    let mut packed = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            packed.push(m[[i, j]]);
        }
    }
    packed_eigenvalues(packed, n)
}

/// Eigenvalues of a symmetric matrix given as its packed lower triangle
/// (row `i` holds columns `0..=i`). Consumes the storage.
pub(crate) fn packed_eigenvalues<T: Real>(mut packed: Vec<T>, n: usize) -> Result<Spectrum<T>> {
    debug_assert_eq!(packed.len(), n * (n + 1) / 2);
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize_packed(&mut packed, n, &mut d, &mut e);
    drop(packed);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(Spectrum::from_sorted(d))
}

#[inline]
fn row_offset(r: usize) -> usize {
    r * (r + 1) / 2
}

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    const LANES: usize = 8;
    let split = a.len() / LANES * LANES;
    let mut acc = [T::zero(); LANES];
    for (x, y) in a[..split].chunks_exact(LANES).zip(b[..split].chunks_exact(LANES)) {
        for t in 0..LANES {
            acc[t] += x[t] * y[t];
        }
    }
    let mut s = acc.iter().copied().sum::<T>();
    for k in split..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Scales row `i` (its `i` sub-diagonal entries, passed as `u`) into a
/// Householder vector. Returns `h = |u|^2 / 2`-style normalizer, or `None`
/// when no reflection is needed. Always sets `e_i`.
#[inline]
fn householder_vector<T: Real>(u: &mut [T], e_i: &mut T) -> Option<T> {
    let l = u.len() - 1;
    if l == 0 {
        *e_i = u[0];
        return None;
    }
    let scale: T = u.iter().map(|x| x.abs()).sum();
    if scale == T::zero() {
        *e_i = u[l];
        return None;
    }
    let mut h = T::zero();
    for x in u.iter_mut() {
        *x /= scale;
        h += *x * *x;
    }
    let f = u[l];
    let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
    *e_i = scale * g;
    h -= f * g;
    u[l] = f - g;
    Some(h)
}

/// `p = A u` over the leading `u.len()` rows of the packed matrix.
#[inline]
fn packed_matvec<T: Real>(head: &[T], u: &[T], p: &mut [T]) {
    p.fill(T::zero());
    for j in 0..u.len() {
        let row = &head[row_offset(j)..row_offset(j) + j + 1];
        accumulate_row(row, u, p, j);
    }
}

/// Adds row `j` of a symmetric packed matrix (and its mirrored column) to
/// the product `p = A u`.
#[inline]
fn accumulate_row<T: Real>(row: &[T], u: &[T], p: &mut [T], j: usize) {
    let uj = u[j];
    p[j] += dot(&row[..j], &u[..j]) + row[j] * uj;
    for (pk, &ak) in p[..j].iter_mut().zip(&row[..j]) {
        *pk += ak * uj;
    }
}

/// `row -= u_j q + q_j u` over the first `j + 1` entries.
#[inline]
fn rank2_row<T: Real>(row: &mut [T], u: &[T], q: &[T], j: usize) {
    let (uj, qj) = (u[j], q[j]);
    for ((ak, &qk), &uk) in row.iter_mut().zip(&q[..=j]).zip(&u[..=j]) {
        *ak -= uj * qk + qj * uk;
    }
}

/// Householder reduction of a packed symmetric matrix to tridiagonal form.
/// On return `d` holds the diagonal and `e[i]` the sub-diagonal entry
/// coupling `i - 1` and `i` (`e[0] = 0`).
///
/// The rank-2 update of step `i` and the matrix-vector product of step
/// `i - 1` share one sweep over the matrix.
fn tridiagonalize_packed<T: Real>(a: &mut [T], n: usize, d: &mut [T], e: &mut [T]) {
    let mut p = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    // Set when `p` already holds `A u` for the current step.
    let mut pending: Option<T> = None;
    for i in (1..n).rev() {
        let l = i - 1;
        let (head, tail) = a.split_at_mut(row_offset(i));
        let u = &mut tail[..i];
        let h = match pending.take() {
            Some(h) => h,
            None => match householder_vector(u, &mut e[i]) {
                Some(h) => {
                    packed_matvec(head, u, &mut p[..i]);
                    h
                }
                None => continue,
            },
        };
        let u = &*u;
        let q = &mut p[..i];
        let inv_h = T::one() / h;
        let mut f = T::zero();
        for (qj, &uj) in q.iter_mut().zip(u) {
            *qj *= inv_h;
            f += *qj * uj;
        }
        let hh = f / (h + h);
        for (qj, &uj) in q.iter_mut().zip(u) {
            *qj -= hh * uj;
        }
        let q = &*q;

        let (inner, row_l) = head.split_at_mut(row_offset(l));
        rank2_row(&mut row_l[..=l], u, q, l);
        if l == 0 {
            continue;
        }
        let next_u = &mut row_l[..l];
        match householder_vector(next_u, &mut e[l]) {
            Some(next_h) => {
                let next_u = &*next_u;
                let pn = &mut next[..l];
                pn.fill(T::zero());
                for j in 0..l {
                    let row = &mut inner[row_offset(j)..row_offset(j) + j + 1];
                    rank2_row(row, u, q, j);
                    accumulate_row(row, next_u, pn, j);
                }
                std::mem::swap(&mut p, &mut next);
                pending = Some(next_h);
            }
            None => {
                for j in 0..l {
                    let row = &mut inner[row_offset(j)..row_offset(j) + j + 1];
                    rank2_row(row, u, q, j);
                }
            }
        }
    }
    e[0] = T::zero();
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[row_offset(i) + i];
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `e[i]` couples
/// `i - 1` and `i` on entry. When `vectors` is given (column-major basis,
/// `n x n`), the rotations are accumulated into it.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T], mut vectors: Option<&mut Array2<T>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_QL_ITERS {
                return Err(Error::Numeric(format!(
                    "QL iteration did not converge for eigenvalue {l} after {MAX_QL_ITERS} sweeps"
                )));
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(v) = vectors.as_deref_mut() {
                    for k in 0..v.nrows() {
                        let vk1 = v[[k, i + 1]];
                        let vk = v[[k, i]];
                        v[[k, i + 1]] = s * vk + c * vk1;
                        v[[k, i]] = c * vk - s * vk1;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T = f64> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Largest `||M v - lambda v||` over all pairs, divided by the
    /// Frobenius norm of `m`.
    pub fn relative_residual(&self, m: &Array2<T>) -> T {
        let norm = m.iter().map(|&x| x * x).sum::<T>().sqrt().max(T::min_positive_value());
        let mv = m.dot(&self.vectors);
        let mut worst = T::zero();
        for (k, &lambda) in self.values.iter().enumerate() {
            let r: T = mv
                .column(k)
                .iter()
                .zip(self.vectors.column(k))
                .map(|(&a, &v)| (a - lambda * v).powi(2))
                .sum::<T>()
                .sqrt();
            worst = worst.max(r);
        }
        worst / norm
    }
}

/// Full symmetric eigendecomposition via Householder tridiagonalization
/// with accumulated transforms, then implicit QL.
pub fn symmetric_eigen<T: Real>(m: &Array2<T>) -> Result<SymmetricEigen<T>> {
    let n = check_symmetric(m)?;
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v = m.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    householder_with_vectors(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e, Some(&mut v))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let values = Array1::from_iter(order.iter().map(|&k| d[k]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(SymmetricEigen { values, vectors })
}

/// `tred2`: on return `v` holds the orthogonal transform, `d` the
/// diagonal and `e[i]` the coupling between `i - 1` and `i`.
fn householder_with_vectors<T: Real>(v: &mut Array2<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = T::zero();
                v[[j, i]] = T::zero();
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(T::zero());
            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in j + 1..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let delta = f * e[k] + g * d[k];
                    v[[k, j]] -= delta;
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    let delta = g * d[k];
                    v[[k, j]] -= delta;
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = T::zero();
    }
    v[[n - 1, n - 1]] = T::one();
    e[0] = T::zero();
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        m
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn determinant(mut m: Array2<f64>) -> f64 {
        let n = m.nrows();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| m[[a, col]].abs().partial_cmp(&m[[b, col]].abs()).unwrap())
                .unwrap();
            if pivot != col {
                for k in 0..n {
                    m.swap([pivot, k], [col, k]);
                }
                det = -det;
            }
            let p = m[[col, col]];
            det *= p;
            for r in col + 1..n {
                let factor = m[[r, col]] / p;
                for k in col..n {
                    m[[r, k]] -= factor * m[[col, k]];
                }
            }
        }
        det
    }

    #[test]
    fn analytic_laplacian_spectra() {
        let p2 = array![[1.0f64, -1.0], [-1.0, 1.0]];
        let s = symmetric_eigenvalues(&p2).unwrap();
        assert!((s.eigenvalues[0]).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-14);

        let k3 = array![[2.0f64, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        let s = symmetric_eigenvalues(&k3).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([0.0, 3.0, 3.0]) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
        assert_eq!(s.zero_count(), 1);
    }

    #[test]
    fn trace_and_determinant_identities() {
        for seed in 0..5 {
            let m = random_symmetric(8, seed);
            let s = symmetric_eigenvalues(&m).unwrap();
            let trace: f64 = (0..8).map(|i| m[[i, i]]).sum();
            let sum: f64 = s.eigenvalues.iter().sum();
            assert!((trace - sum).abs() < 1e-10);
            // det(M - sI) = prod(lambda_i - s) at a few shifts.
            for shift in [0.0, 0.37, -1.2] {
                let mut shifted = m.clone();
                for i in 0..8 {
                    shifted[[i, i]] -= shift;
                }
                let det = determinant(shifted);
                let prod: f64 = s.eigenvalues.iter().map(|l| l - shift).product();
                assert!((det - prod).abs() <= 1e-9 * det.abs().max(1e-3), "{det} vs {prod}");
            }
        }
    }

    #[test]
    fn both_routes_agree_and_residuals_small() {
        for (n, seed) in [(1, 1), (2, 2), (17, 3), (60, 4)] {
            let m = random_symmetric(n, seed);
            let values = symmetric_eigenvalues(&m).unwrap();
            let full = symmetric_eigen(&m).unwrap();
            for (a, b) in values.eigenvalues.iter().zip(full.values.iter()) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
            assert!(full.relative_residual(&m) <= 1e-8);
            let vtv = full.vectors.t().dot(&full.vectors);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[[i, j]] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_precision() {
        let k3 = array![[2.0f32, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        let s = symmetric_eigenvalues(&k3).unwrap();
        assert!((s.eigenvalues[2] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(symmetric_eigenvalues(&m), Err(Error::Contract(_))));
        assert!(matches!(symmetric_eigen(&Array2::<f64>::zeros((2, 3))), Err(Error::Contract(_))));
    }

    #[test]
    fn diagonal_and_zero_matrices() {
        let m = Array2::from_diag(&array![3.0, -1.0, 2.0, 0.0]);
        let s = symmetric_eigenvalues(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 0.0, 2.0, 3.0]);
        let z = symmetric_eigenvalues(&Array2::<f64>::zeros((5, 5))).unwrap();
        assert_eq!(z.zero_count(), 5);
    }
}
