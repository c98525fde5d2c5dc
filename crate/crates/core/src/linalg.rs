//! Dense linear algebra over `rug::Float` for the small systems that appear
//! in the Hecke and Petersson computations (dimension ≤ 8 or so).

use rug::Float;

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<Float>>;

pub fn zeros(rows: usize, cols: usize, prec: u32) -> Matrix {
    vec![vec![Float::new(prec); cols]; rows]
}

/// Square solve by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix, b: &[Float]) -> Result<Vec<Float>> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let prec = a[0][0].prec();
    let mut m: Matrix = a.iter().map(|r| r.iter().map(|x| Float::with_val(prec, x)).collect()).collect();
    let mut rhs: Vec<Float> = b.iter().map(|x| Float::with_val(prec, x)).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].clone().abs().partial_cmp(&m[j][col].clone().abs()).unwrap())
            .unwrap();
        if m[piv][col].is_zero() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = Float::with_val(prec, &m[r][col] / &m[col][col]);
            for c in col..n {
                let t = Float::with_val(prec, &f * &m[col][c]);
                m[r][c] -= t;
            }
            let t = Float::with_val(prec, &f * &rhs[col]);
            rhs[r] -= t;
        }
    }
    let mut x = vec![Float::new(prec); n];
    for r in (0..n).rev() {
        let mut s = rhs[r].clone();
        for c in r + 1..n {
            s -= Float::with_val(prec, &m[r][c] * &x[c]);
        }
        x[r] = s / &m[r][r];
    }
    Ok(x)
}

/// Least-squares solution of the overdetermined system a·x ≈ b by
/// Householder QR (rows ≥ cols).
pub fn least_squares(a: &Matrix, b: &[Float]) -> Result<Vec<Float>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    if rows < cols {
        return Err(Error::Domain(format!("{rows} equations for {cols} unknowns")));
    }
    if cols == 0 {
        return Ok(Vec::new());
    }
    let prec = a[0][0].prec();
    let mut r: Matrix = a.iter().map(|row| row.iter().map(|x| Float::with_val(prec, x)).collect()).collect();
    let mut y: Vec<Float> = b.iter().map(|x| Float::with_val(prec, x)).collect();
    for k in 0..cols {
        let mut norm = Float::new(prec);
        for i in k..rows {
            norm += Float::with_val(prec, r[i][k].square_ref());
        }
        let norm = norm.sqrt();
        if norm.is_zero() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let alpha = if r[k][k] > 0 { Float::with_val(prec, -&norm) } else { norm };
        let mut v: Vec<Float> = (k..rows).map(|i| r[i][k].clone()).collect();
        v[0] -= &alpha;
        let mut vnorm2 = Float::new(prec);
        for x in &v {
            vnorm2 += Float::with_val(prec, x.square_ref());
        }
        if vnorm2.is_zero() {
            continue;
        }
        for j in k..cols {
            let mut dot = Float::new(prec);
            for (t, i) in (k..rows).enumerate() {
                dot += Float::with_val(prec, &v[t] * &r[i][j]);
            }
            let f = dot * 2u32 / &vnorm2;
            for (t, i) in (k..rows).enumerate() {
                let d = Float::with_val(prec, &f * &v[t]);
                r[i][j] -= d;
            }
        }
        let mut dot = Float::new(prec);
        for (t, i) in (k..rows).enumerate() {
            dot += Float::with_val(prec, &v[t] * &y[i]);
        }
        let f = dot * 2u32 / &vnorm2;
        for (t, i) in (k..rows).enumerate() {
            let d = Float::with_val(prec, &f * &v[t]);
            y[i] -= d;
        }
    }
    let mut x = vec![Float::new(prec); cols];
    for i in (0..cols).rev() {
        let mut s = y[i].clone();
        for j in i + 1..cols {
            s -= Float::with_val(prec, &r[i][j] * &x[j]);
        }
        if r[i][i].is_zero() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        x[i] = s / &r[i][i];
    }
    Ok(x)
}

/// Singular values by one-sided Jacobi rotations, in decreasing order.
pub fn singular_values(a: &Matrix) -> Vec<Float> {
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    let prec = a[0][0].prec();
    // work on columns
    let mut u: Vec<Vec<Float>> = (0..cols).map(|j| (0..rows).map(|i| a[i][j].clone()).collect()).collect();
    let tol = Float::with_val(prec, 1) >> (prec - 8);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = Float::new(prec);
                let mut beta = Float::new(prec);
                let mut gamma = Float::new(prec);
                for i in 0..rows {
                    alpha += Float::with_val(prec, u[p][i].square_ref());
                    beta += Float::with_val(prec, u[q][i].square_ref());
                    gamma += Float::with_val(prec, &u[p][i] * &u[q][i]);
                }
                let scale = Float::with_val(prec, &alpha * &beta).sqrt();
                if gamma.is_zero() || Float::with_val(prec, gamma.abs_ref()) <= Float::with_val(prec, &scale * &tol) {
                    continue;
                }
                rotated = true;
                let zeta = Float::with_val(prec, &beta - &alpha) / (Float::with_val(prec, &gamma * 2u32));
                let root = (Float::with_val(prec, zeta.square_ref()) + 1u32).sqrt();
                let denom = Float::with_val(prec, zeta.abs_ref()) + root;
                let mut t = Float::with_val(prec, denom.recip_ref());
                if zeta < 0 {
                    t = -t;
                }
                let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
                let s = Float::with_val(prec, &c * &t);
                for i in 0..rows {
                    let up = u[p][i].clone();
                    let uq = u[q][i].clone();
                    u[p][i] = Float::with_val(prec, &c * &up) - Float::with_val(prec, &s * &uq);
                    u[q][i] = Float::with_val(prec, &s * &up) + Float::with_val(prec, &c * &uq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<Float> = u
        .iter()
        .map(|col| {
            let mut n = Float::new(prec);
            for x in col {
                n += Float::with_val(prec, x.square_ref());
            }
            n.sqrt()
        })
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// 2-norm condition number σ_max/σ_min (∞ when rank deficient).
pub fn condition_number(a: &Matrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(hi), Some(lo)) if !lo.is_zero() => (Float::with_val(hi.prec(), hi / lo)).to_f64(),
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| Float::with_val(128, x)).collect()).collect()
    }

    #[test]
    fn solve_small_system() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let want = [1.0, -2.0, 3.0];
        let b: Vec<Float> = a
            .iter()
            .map(|r| r.iter().zip(want).map(|(x, w)| Float::with_val(128, x * w)).fold(Float::new(128), |s, t| s + t))
            .collect();
        let x = solve(&a, &b).unwrap();
        for (xi, wi) in x.iter().zip(want) {
            assert!((xi.to_f64() - wi).abs() < 1e-30);
        }
    }

    #[test]
    fn least_squares_exact_when_consistent() {
        let a = m(&[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0], &[1.0, 4.0]]);
        let b: Vec<Float> = [3.0, 5.0, 7.0, 9.0].iter().map(|&x| Float::with_val(128, x)).collect();
        let x = least_squares(&a, &b).unwrap();
        assert!((x[0].to_f64() - 1.0).abs() < 1e-30 && (x[1].to_f64() - 2.0).abs() < 1e-30);
    }

    #[test]
    fn least_squares_normal_equations() {
        // residual orthogonal to the column space
        let a = m(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0]]);
        let b: Vec<Float> = [1.0, 0.0, 2.0].iter().map(|&x| Float::with_val(128, x)).collect();
        let x = least_squares(&a, &b).unwrap();
        for j in 0..2 {
            let mut dot = 0.0;
            for i in 0..3 {
                let fit = a[i][0].to_f64() * x[0].to_f64() + a[i][1].to_f64() * x[1].to_f64();
                dot += a[i][j].to_f64() * (b[i].to_f64() - fit);
            }
            assert!(dot.abs() < 1e-14);
        }
    }

    #[test]
    fn singular_values_of_diagonal_and_rank_one() {
        let a = m(&[&[3.0, 0.0], &[0.0, 0.5], &[0.0, 0.0]]);
        let sv = singular_values(&a);
        assert!((sv[0].to_f64() - 3.0).abs() < 1e-30 && (sv[1].to_f64() - 0.5).abs() < 1e-30);
        assert!((condition_number(&a) - 6.0).abs() < 1e-20);
        let r1 = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(condition_number(&r1) > 1e30);
    }
}
