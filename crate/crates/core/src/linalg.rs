//! Symmetric eigensolvers.
//!
//! Two paths: an implicit-shift QL iteration on symmetric tridiagonal
//! matrices with inverse iteration for the selected eigenvectors, and a dense
//! path (Householder tridiagonalization followed by the same QL sweep with
//! accumulated rotations). Both are derived from the EISPACK `tred2`/`tql2`
//! procedures by Bowdler, Martin, Reinsch and Wilkinson.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest dense matrix accepted by [`symmetric_eigen`].
pub const DENSE_LIMIT: usize = 4096;

const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues (ascending) and, if requested, the orthonormal eigenvectors as
/// columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

/// Symmetric tridiagonal matrix given by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::invalid(format!(
                "tridiagonal needs n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                left + self.diag[i].abs() + right
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut d = self.diag.clone();
        let mut e = vec![0.0; self.len()];
        e[1..].copy_from_slice(&self.off);
        tql2(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// Eigenpairs with eigenvalue `<= upper`, eigenvectors Euclidean-normalized
    /// and stored as columns.
    pub fn eigenpairs_below(&self, upper: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let all = self.eigenvalues()?;
        let selected: Vec<f64> = all.into_iter().take_while(|&l| l <= upper).collect();
        let vectors = self.inverse_iteration(&selected)?;
        Ok((selected, vectors))
    }

    /// Eigenvectors for the given (ascending) eigenvalues.
    ///
    /// Iterates are re-orthogonalized against previously computed vectors
    /// whose eigenvalues lie within `1e-3 * ||T||_1`.
    pub fn inverse_iteration(&self, values: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.len();
        let norm = self.norm_one().max(f64::MIN_POSITIVE);
        let cluster_gap = 1e-3 * norm;
        let tiny = f64::EPSILON * norm;
        let mut vecs = DMatrix::<f64>::zeros(n, values.len());
        let mut x = vec![0.0; n];
        let mut tx = vec![0.0; n];
        for (k, &lambda) in values.iter().enumerate() {
            let lu = TridiagonalLu::factor(self, lambda, tiny);
            for (i, xi) in x.iter_mut().enumerate() {
                // deterministic start vector with no special symmetry
                *xi = 1.0 + 0.5 * ((i as f64 * 0.618_033_988_75 + k as f64 * 0.414_213_562).fract());
            }
            let first = values[..k].partition_point(|&l| l < lambda - cluster_gap);
            let mut converged = false;
            for _ in 0..8 {
                lu.solve(&mut x);
                orthonormalize(&vecs, first..k, &mut x, k)?;
                self.apply(&x, &mut tx);
                let resid = tx
                    .iter()
                    .zip(&x)
                    .map(|(t, v)| (t - lambda * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if resid <= 1e-12 * norm {
                    converged = true;
                    break;
                }
            }
            if !converged {
                self.apply(&x, &mut tx);
                let resid = tx
                    .iter()
                    .zip(&x)
                    .map(|(t, v)| (t - lambda * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if resid > 1e-9 * norm {
                    return Err(Error::NoConvergence { index: k });
                }
            }
            // one more solve at the Rayleigh quotient removes the components
            // along distant eigenvectors left by the eigenvalue error
            self.apply(&x, &mut tx);
            let rayleigh: f64 = tx.iter().zip(&x).map(|(a, b)| a * b).sum();
            TridiagonalLu::factor(self, rayleigh, tiny).solve(&mut x);
            orthonormalize(&vecs, first..k, &mut x, k)?;
            // fix the sign so that the largest component is positive
            let (imax, _) = x
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            let sign = if x[imax] < 0.0 { -1.0 } else { 1.0 };
            for (i, v) in x.iter().enumerate() {
                vecs[(i, k)] = sign * v;
            }
        }
        Ok(vecs)
    }
}

/// Projects `x` off the columns in `range` (twice) and normalizes it.
fn orthonormalize(
    vecs: &DMatrix<f64>,
    range: std::ops::Range<usize>,
    x: &mut [f64],
    index: usize,
) -> Result<()> {
    for j in range {
        for _ in 0..2 {
            let col = vecs.column(j);
            let dot: f64 = col.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            for (xi, ci) in x.iter_mut().zip(col.iter()) {
                *xi -= dot * ci;
            }
        }
    }
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !nrm.is_finite() || nrm == 0.0 {
        return Err(Error::NoConvergence { index });
    }
    x.iter_mut().for_each(|v| *v /= nrm);
    Ok(())
}

/// LU factorization of `T - shift I` with partial pivoting (two upper bands).
struct TridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &Tridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.len();
        let guard = |v: f64| {
            if v.abs() < tiny {
                if v < 0.0 {
                    -tiny
                } else {
                    tiny
                }
            } else {
                v
            }
        };
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        let mut d = t.diag[0] - shift;
        let mut s = if n > 1 { t.off[0] } else { 0.0 };
        for i in 0..n.saturating_sub(1) {
            let sub = t.off[i];
            let next_diag = t.diag[i + 1] - shift;
            let next_sup = if i + 2 < n { t.off[i + 1] } else { 0.0 };
            if d.abs() >= sub.abs() {
                let dd = guard(d);
                let m = sub / dd;
                u0[i] = dd;
                u1[i] = s;
                mult[i] = m;
                d = next_diag - m * s;
                s = next_sup;
            } else {
                let m = d / sub;
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = next_diag;
                u2[i] = next_sup;
                mult[i] = m;
                d = s - m * next_diag;
                s = -m * next_sup;
            }
        }
        u0[n - 1] = guard(d);
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, y: &mut [f64]) {
        let n = y.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            if i + 1 < n {
                acc -= self.u1[i] * y[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * y[i + 2];
            }
            y[i] = acc / self.u0[i];
        }
    }
}

/// Dense symmetric eigendecomposition; only the lower triangle is read.
pub fn symmetric_eigen(a: &DMatrix<f64>, with_vectors: bool) -> Result<Eigen> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::MatrixTooLarge {
            size: n,
            max: DENSE_LIMIT,
        });
    }
    if n != a.ncols() {
        return Err(Error::invalid("matrix is not square"));
    }
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: with_vectors.then(|| DMatrix::zeros(0, 0)),
        });
    }
    // row-major working copy, symmetrized from the lower triangle
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = a[(i, j)];
            z[i * n + j] = v;
            z[j * n + i] = v;
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, n, &mut d, &mut e, with_vectors);
    if !with_vectors {
        tql2(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        return Ok(Eigen {
            values: d,
            vectors: None,
        });
    }
    // tql2 rotates columns; switch to a column-major layout for locality
    let mut v = DMatrix::from_row_slice(n, n, &z);
    tql2(&mut d, &mut e, Some(&mut v))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen {
        values,
        vectors: Some(vectors),
    })
}

/// Eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    symmetric_eigen(a, false).map(|e| e.values)
}

/// Householder reduction of the symmetric row-major matrix `z` to tridiagonal
/// form. On exit `d` holds the diagonal, `e[1..]` the subdiagonal, and, when
/// `accumulate` is set, `z` the orthogonal transformation.
fn tred2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let idx = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = z[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = z[idx(i - 1, j)];
                z[idx(i, j)] = 0.0;
                z[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                z[idx(j, i)] = f;
                g = e[j] + z[idx(j, j)] * f;
                for k in (j + 1)..i {
                    let zkj = z[idx(k, j)];
                    g += zkj * d[k];
                    e[k] += zkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
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
                    z[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = z[idx(i - 1, j)];
                z[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    if !accumulate {
        for j in 0..n {
            d[j] = z[idx(j, j)];
        }
        e[0] = 0.0;
        return;
    }
    for i in 0..n - 1 {
        z[idx(n - 1, i)] = z[idx(i, i)];
        z[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = z[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += z[idx(k, i + 1)] * z[idx(k, j)];
                }
                for k in 0..=i {
                    z[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            z[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = z[idx(n - 1, j)];
        z[idx(n - 1, j)] = 0.0;
    }
    z[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal (`d`, `e[1..]`). Rotations are applied
/// to the columns of `v` when given. Eigenvalues are left unsorted in `d`.
fn tql2(d: &mut [f64], e: &mut [f64], mut v: Option<&mut DMatrix<f64>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let rows = v.nrows();
                        let (mut ci, mut ci1) = v.columns_range_pair_mut(i, i + 1);
                        for k in 0..rows {
                            let hk = ci1[k];
                            ci1[k] = s * ci[k] + c * hk;
                            ci[k] = c * ci[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the sign convention fixed by the diagonal of R).
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random orthogonal projection of the given rank.
pub fn random_projection<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DMatrix<f64> {
    let q = random_orthogonal(dim, rng);
    let basis = q.columns(0, rank);
    &basis * basis.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let e = symmetric_eigen(&a, true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let t = Tridiagonal::new(vec![2.0, 2.0], vec![-1.0]).unwrap();
        let v = t.eigenvalues().unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn discrete_laplacian_closed_form() {
        // eigenvalues of tridiag(-1, 2, -1) of size n: 2 - 2 cos(k pi / (n+1))
        let n = 200;
        let t = Tridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let vals = t.eigenvalues().unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact =
                2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn inverse_iteration_vectors_are_orthonormal_eigenvectors() {
        let n = 500;
        let diag: Vec<f64> = (0..n)
            .map(|i| 2.0 + ((i as f64 - 250.0) / 100.0).powi(2))
            .collect();
        let t = Tridiagonal::new(diag, vec![-1.0; n - 1]).unwrap();
        let (vals, vecs) = t.eigenpairs_below(1e9).unwrap();
        assert_eq!(vals.len(), n);
        let gram = vecs.transpose() * &vecs;
        let defect = (gram - DMatrix::<f64>::identity(n, n)).abs().max();
        assert!(defect < 1e-10, "orthonormality defect {defect}");
        let mut tx = vec![0.0; n];
        for (k, &l) in vals.iter().enumerate() {
            let x: Vec<f64> = vecs.column(k).iter().copied().collect();
            t.apply(&x, &mut tx);
            let r: f64 = tx.iter().zip(&x).map(|(a, b)| (a - l * b).powi(2)).sum();
            assert!(r.sqrt() < 1e-8 * t.norm_one());
        }
    }

    #[test]
    fn dense_matches_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let a = &g + g.transpose();
        let e = symmetric_eigen(&a, true).unwrap();
        let v = e.vectors.unwrap();
        let recon = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()))
            * v.transpose();
        assert!((recon - &a).abs().max() < 1e-12);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let sum: f64 = e.values.iter().sum();
        assert!((trace - sum).abs() < 1e-12);
        // independent route
        let reference = nalgebra::SymmetricEigen::new(a.clone());
        let mut rv: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        rv.sort_by(f64::total_cmp);
        for (x, y) in rv.iter().zip(&e.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let only = symmetric_eigenvalues(&a).unwrap();
        for (x, y) in only.iter().zip(&e.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_dense_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_projection(12, 5, &mut rng);
        let e = symmetric_eigen(&p, true).unwrap();
        let ones = e.values.iter().filter(|v| (*v - 1.0).abs() < 1e-12).count();
        let zeros = e.values.iter().filter(|v| v.abs() < 1e-12).count();
        assert_eq!((ones, zeros), (5, 7));
        let v = e.vectors.unwrap();
        let defect = (v.transpose() * &v - DMatrix::<f64>::identity(12, 12)).abs().max();
        assert!(defect < 1e-12);
    }

    #[test]
    fn too_large_is_rejected() {
        let a = DMatrix::<f64>::zeros(DENSE_LIMIT + 1, 1);
        assert!(symmetric_eigen(&a, false).is_err());
    }
}
