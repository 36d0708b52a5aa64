//! Reference implementations used as test oracles. They share no code with
//! the library beyond the input types.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::Complex;

pub type M3 = [[f64; 3]; 3];

pub fn matmul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn matvec(a: &M3, v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            out[i] += a[i][k] * v[k];
        }
    }
    out
}

/// The rate generator written out by hand, ordering (-1, 0, +1).
pub fn generator(omega: f64, gamma: f64) -> M3 {
    [
        [-omega - gamma, omega, gamma],
        [omega, -2.0 * omega, omega],
        [gamma, omega, -omega - gamma],
    ]
}

/// exp(A) by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &M3) -> M3 {
    let norm = a
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scale = 2f64.powi(s);
    let mut b = *a;
    for row in &mut b {
        for x in row {
            *x /= scale;
        }
    }
    let mut result = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut term = result;
    for k in 1..=20 {
        term = matmul(&term, &b);
        for row in &mut term {
            for x in row {
                *x /= k as f64;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// Populations after `tau` us from the matrix exponential of the generator.
pub fn evolve_expm(p: [f64; 3], omega: f64, gamma: f64, tau_us: f64) -> [f64; 3] {
    let mut g = generator(omega, gamma);
    for row in &mut g {
        for x in row {
            *x *= tau_us * 1e-3;
        }
    }
    matvec(&expm(&g), &p)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// ascending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().max(1e-300);
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p][q] * m[p][q];
            }
        }
        if off <= 1e-32 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (m[p][k], m[q][k]);
                    m[p][k] = c * x - s * y;
                    m[q][k] = s * x + c * y;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn jacobi3(a: &M3) -> [f64; 3] {
    let ev = jacobi_eigenvalues(&a.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    [ev[0], ev[1], ev[2]]
}

/// Eigenvalues of a Hermitian 3x3 matrix through its real 6x6 embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is the Hermitian one doubled.
pub fn hermitian_eigenvalues(h: &[[Complex<f64>; 3]; 3]) -> [f64; 3] {
    let mut big = vec![vec![0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            big[i][j] = h[i][j].re;
            big[i + 3][j + 3] = h[i][j].re;
            big[i][j + 3] = -h[i][j].im;
            big[i + 3][j] = h[i][j].im;
        }
    }
    let ev = jacobi_eigenvalues(&big);
    [ev[0], ev[2], ev[4]]
}

/// Least-squares fit of `y` on the columns of `basis`; returns the largest
/// absolute residual.
pub fn dictionary_residual(basis: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len();
    let k = basis.len();
    let a = nalgebra::DMatrix::from_fn(n, k, |i, j| basis[j][i]);
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).expect("svd solve");
    (a * x - b).amax()
}

/// Fraction of `hits` in `total`.
pub fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}
