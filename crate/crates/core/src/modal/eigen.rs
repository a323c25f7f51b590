//! Dense nonsymmetric eigenvalue kernels.
//!
//! Eigenvalues come from the classical route: diagonal balancing, Householder
//! reduction to upper Hessenberg form, then implicit double-shift (Francis)
//! QR sweeps with Wilkinson's exceptional shifts. Eigenvectors are recovered
//! separately by shifted inverse iteration on the original matrix.

#![allow(clippy::needless_range_loop)] // index arithmetic follows the textbook sweeps

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

/// Iteration budget per eigenvalue before giving up.
pub(crate) const MAX_SWEEPS: usize = 30;

const RADIX: f64 = 2.0;

/// Similarity scaling by powers of two so that row and column norms are
/// comparable. Eigenvalues are unchanged.
pub(crate) fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
pub(crate) fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let norm = (k + 1..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H ← (I − β v vᵀ) H
        for j in 0..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum::<f64>() * beta;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // H ← H (I − β v vᵀ)
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum::<f64>() * beta;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j];
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct NoConvergence {
    pub remaining: usize,
}

/// Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.
///
/// Complex eigenvalues come out as exact conjugate pairs.
pub(crate) fn hqr(hess: &DMatrix<f64>) -> Result<Vec<C64>, NoConvergence> {
    let n = hess.nrows();
    // 1-based working copy keeps the index arithmetic of the sweep readable.
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = hess[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                its = 0;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = z;
                        wi[nn] = -z;
                    }
                    nn -= 2;
                    its = 0;
                } else {
                    if its == MAX_SWEEPS {
                        return Err(NoConvergence { remaining: nn });
                    }
                    if its == 10 || its == 20 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    // look for two consecutive small subdiagonal elements
                    let mut m = nn - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    // double QR step on rows l..nn, columns m..nn
                    for k in m..nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s == 0.0 {
                            continue;
                        }
                        if k == m {
                            if l != m {
                                a[k][k - 1] = -a[k][k - 1];
                            }
                        } else {
                            a[k][k - 1] = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for j in k..=nn {
                            p = a[k][j] + q * a[k + 1][j];
                            if k != nn - 1 {
                                p += r * a[k + 2][j];
                                a[k + 2][j] -= p * z;
                            }
                            a[k + 1][j] -= p * y;
                            a[k][j] -= p * x;
                        }
                        let mmin = nn.min(k + 3);
                        for i in l..=mmin {
                            p = x * a[i][k] + y * a[i][k + 1];
                            if k != nn - 1 {
                                p += z * a[i][k + 2];
                                a[i][k + 2] -= p * r;
                            }
                            a[i][k + 1] -= p * q;
                            a[i][k] -= p;
                        }
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| C64::new(wr[i], wi[i])).collect())
}

/// Eigenvalues of a general real square matrix.
pub(crate) fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>, NoConvergence> {
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr(&h)
}

/// Orthonormalizes the columns of `x` in place (two passes of modified
/// Gram-Schmidt). Columns that collapse are replaced by fresh random ones.
fn orthonormalize(x: &mut DMatrix<C64>, rng: &mut ChaCha8Rng, real: bool) {
    let (n, k) = x.shape();
    let col_norm = |x: &DMatrix<C64>, j: usize| (0..n).map(|r| x[(r, j)].norm_sqr()).sum::<f64>().sqrt();
    for j in 0..k {
        for _attempt in 0..4 {
            let before = col_norm(x, j);
            for _ in 0..2 {
                for i in 0..j {
                    let proj: C64 = (0..n).map(|r| x[(r, i)].conj() * x[(r, j)]).sum();
                    for r in 0..n {
                        let xi = x[(r, i)];
                        x[(r, j)] -= proj * xi;
                    }
                }
            }
            let norm = col_norm(x, j);
            if norm.is_finite() && norm > 1e-300 && norm > 1e-10 * before {
                for r in 0..n {
                    x[(r, j)] /= norm;
                }
                break;
            }
            for r in 0..n {
                x[(r, j)] = random_entry(rng, real);
            }
        }
    }
}

fn random_entry(rng: &mut ChaCha8Rng, real: bool) -> C64 {
    let re = rng.random_range(-1.0..1.0);
    let im = if real { 0.0 } else { rng.random_range(-1.0..1.0) };
    C64::new(re, im)
}

/// Orthonormal basis of the invariant subspace belonging to the `k`
/// eigenvalues clustered at `center`, by block inverse iteration.
///
/// `offset` moves the shift just off the cluster so the factorization stays
/// regular. When `center` is real the iteration runs in real arithmetic.
pub(crate) fn cluster_subspace(a: &DMatrix<f64>, center: C64, k: usize, offset: f64, seed: u64) -> DMatrix<C64> {
    let n = a.nrows();
    let real = center.im == 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, k, |_, _| random_entry(&mut rng, real));
    orthonormalize(&mut x, &mut rng, real);

    let ac: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    let mut delta = offset;
    let lu = loop {
        let shift = center + C64::new(delta, 0.0);
        let shifted = &ac - DMatrix::from_diagonal_element(n, n, shift);
        let lu = shifted.lu();
        if lu.is_invertible() {
            break lu;
        }
        delta = if delta == 0.0 { f64::EPSILON } else { delta * 3.0 };
    };
    for _ in 0..5 {
        if let Some(next) = lu.solve(&x) {
            if next.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                x = next;
            }
        }
        orthonormalize(&mut x, &mut rng, real);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn triangular_matrix_eigenvalues_are_diagonal() {
        let a = DMatrix::from_row_slice(4, 4, &[
            1.0, 2.0, 3.0, 4.0, //
            0.0, -2.0, 5.0, 6.0, //
            0.0, 0.0, 3.5, 7.0, //
            0.0, 0.0, 0.0, 0.25,
        ]);
        let ev = sorted(eigenvalues(&a).unwrap());
        let expected = [-2.0, 0.25, 1.0, 3.5];
        for (e, x) in ev.iter().zip(expected) {
            assert!((e.re - x).abs() < 1e-12 && e.im == 0.0);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let a = DMatrix::from_row_slice(4, 4, &[
            10.0, -35.0, 50.0, -24.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ]);
        let ev = sorted(eigenvalues(&a).unwrap());
        for (e, x) in ev.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((e - C64::new(x, 0.0)).norm() < 1e-9, "{e} vs {x}");
        }
    }

    #[test]
    fn hessenberg_preserves_trace_and_shape() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 1.0 } else { 0.0 });
        let mut h = a.clone();
        hessenberg(&mut h);
        for i in 2..6 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
        assert!((h.trace() - a.trace()).abs() < 1e-12);
        assert!(((&h * &h).trace() - (&a * &a).trace()).abs() < 1e-10);
    }

    #[test]
    fn balancing_keeps_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e4, 0.0, 1e-4, 3.0]);
        let mut b = a.clone();
        balance(&mut b);
        assert!((a.trace() - b.trace()).abs() < 1e-12);
        assert!(b.amax() < a.amax());
    }

    #[test]
    fn subspace_of_simple_eigenvalue() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 5.0]);
        let x = cluster_subspace(&a, C64::new(5.0, 0.0), 1, 1e-10, 7);
        // eigenvector of 5 is (1, 3)/√10
        let ratio = x[(1, 0)] / x[(0, 0)];
        assert!((ratio - C64::new(3.0, 0.0)).norm() < 1e-9);
        assert_eq!(x[(0, 0)].im, 0.0);
    }
}
