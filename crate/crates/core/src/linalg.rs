//! Dense complex linear algebra used by the propagators and the optimizer.
//!
//! Everything here works on `ndarray` arrays of `Complex64`. The matrix
//! exponential follows the scaling-and-squaring scheme with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13, picked from the 1-norm of the
//! input (Higham 2005).

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{KrotovError, Result};

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Padé degrees and the 1-norm bounds under which each is accurate to unit roundoff.
const PADE_THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Squarings beyond this mean the input norm is absurd (> 5e19).
const MAX_SQUARINGS: u32 = 64;

pub fn identity(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = ONE;
    }
    m
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Maximum absolute column sum.
pub fn one_norm(m: &CMatrix) -> f64 {
    m.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value, by power iteration on `m† m`.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mh = conj_transpose(m);
    let mut v = CVector::from_elem(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    // a fixed, non-symmetric start vector avoids landing in an invariant subspace
    for (i, x) in v.iter_mut().enumerate() {
        *x += Complex64::new(0.0, 1e-3 * (i as f64 + 1.0));
    }
    let mut sigma_sq = 0.0;
    for _ in 0..500 {
        let w = mh.dot(&m.dot(&v));
        let norm = vector_norm(&w);
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - sigma_sq).abs() <= 1e-15 * norm;
        sigma_sq = norm;
        v = w.mapv(|z| z / norm);
        if converged {
            break;
        }
    }
    sigma_sq.sqrt()
}

pub fn conj_transpose(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solve `a · x = b` by LU decomposition with partial pivoting.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(KrotovError::DimensionMismatch(format!(
            "lu_solve: {}x{} system with {} right-hand-side rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[[i, col]].norm().total_cmp(&lu[[j, col]].norm()))
            .unwrap_or(col);
        if lu[[pivot, col]].norm() == 0.0 {
            return Err(KrotovError::Singular);
        }
        if pivot != col {
            for j in 0..n {
                lu.swap([pivot, j], [col, j]);
            }
            for j in 0..x.ncols() {
                x.swap([pivot, j], [col, j]);
            }
        }
        let diag = lu[[col, col]];
        for row in col + 1..n {
            let factor = lu[[row, col]] / diag;
            if factor == ZERO {
                continue;
            }
            lu[[row, col]] = factor;
            for j in col + 1..n {
                let v = lu[[col, j]];
                lu[[row, j]] -= factor * v;
            }
            for j in 0..x.ncols() {
                let v = x[[col, j]];
                x[[row, j]] -= factor * v;
            }
        }
    }
    // back substitution
    for j in 0..x.ncols() {
        for row in (0..n).rev() {
            let mut acc = x[[row, j]];
            for k in row + 1..n {
                acc -= lu[[row, k]] * x[[k, j]];
            }
            x[[row, j]] = acc / lu[[row, row]];
        }
    }
    Ok(x)
}

fn scaled_sum(terms: &[(f64, &CMatrix)], n: usize) -> CMatrix {
    let mut out = CMatrix::zeros((n, n));
    for (c, m) in terms {
        Zip::from(&mut out).and(*m).for_each(|o, &v| *o += v * *c);
    }
    out
}

fn add_identity(m: &mut CMatrix, c: f64) {
    for i in 0..m.nrows() {
        m[[i, i]] += c;
    }
}

/// `(U, V)` such that the Padé approximant is `(V - U)^{-1} (V + U)`.
fn pade_low(a: &CMatrix, coeffs: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut powers = vec![identity(n), a2.clone()];
    while powers.len() * 2 < coeffs.len() {
        let next = powers.last().unwrap().dot(&a2);
        powers.push(next);
    }
    let odd: Vec<(f64, &CMatrix)> = powers
        .iter()
        .enumerate()
        .map(|(j, p)| (coeffs[2 * j + 1], p))
        .collect();
    let even: Vec<(f64, &CMatrix)> = powers
        .iter()
        .enumerate()
        .map(|(j, p)| (coeffs[2 * j], p))
        .collect();
    let u = a.dot(&scaled_sum(&odd, n));
    let v = scaled_sum(&even, n);
    (u, v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let b = &B13;
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let inner_u = scaled_sum(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let mut u = a6.dot(&inner_u) + scaled_sum(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], n);
    add_identity(&mut u, b[1]);
    let u = a.dot(&u);

    let inner_v = scaled_sum(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let mut v = a6.dot(&inner_v) + scaled_sum(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], n);
    add_identity(&mut v, b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(KrotovError::DimensionMismatch(format!(
            "expm of a non-square {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(KrotovError::NonFinite("expm input has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(CMatrix::zeros((0, 0)));
    }
    let norm = one_norm(a);
    if norm == 0.0 {
        return Ok(identity(n));
    }

    for &(degree, theta) in &PADE_THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, coeffs);
            return finish(&u, &v, 0);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    if squarings > MAX_SQUARINGS {
        return Err(KrotovError::ExpmFailed(format!(
            "1-norm {norm:e} requires {squarings} squarings"
        )));
    }
    let scaled = a.mapv(|z| z * 0.5f64.powi(squarings as i32));
    let (u, v) = pade13(&scaled);
    finish(&u, &v, squarings)
}

fn finish(u: &CMatrix, v: &CMatrix, squarings: u32) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    let mut r = lu_solve(&q, &p).map_err(|_| {
        KrotovError::ExpmFailed("singular denominator in Padé approximant".into())
    })?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if !is_finite(&r) {
        return Err(KrotovError::ExpmFailed("result has non-finite entries".into()));
    }
    Ok(r)
}

/// Sum in a fixed binary-tree order: split at the midpoint, sum halves, add.
///
/// The order depends only on the length, so a list made of `2^m` identical
/// copies of a block sums to exactly `2^m` times the block sum.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => ZERO,
        1 => values[0],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum_complex(lo) + pairwise_sum_complex(hi)
        }
    }
}
