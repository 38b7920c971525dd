//! Tiny dense linear algebra for the market dimension (a handful of assets).

use crate::error::{Error, Result};

/// Solve `A x = b` by LU with partial pivoting. `a` is row-major square.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) || b.len() != n {
        return Err(Error::Model("volatility matrix must be square".into()));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-14 {
            return Err(Error::Model(
                "volatility matrix is singular or near-singular".into(),
            ));
        }
        m.swap(col, piv);
        x.swap(col, piv);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
    }
    Ok(x)
}

/// `A A' x = b` solved without forming the inverse.
pub fn solve_aat(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut aat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i][k] * a[j][k];
            }
            aat[i][j] = s;
        }
    }
    solve(&aat, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_2x2() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn aat_matches_manual() {
        let a = vec![vec![0.2, 0.0], vec![0.1, 0.3]];
        // sigma sigma' = [[0.04, 0.02],[0.02, 0.10]]
        let x = solve_aat(&a, &[0.04, 0.09]).unwrap();
        let back = [
            0.04 * x[0] + 0.02 * x[1],
            0.02 * x[0] + 0.10 * x[1],
        ];
        assert!((back[0] - 0.04).abs() < 1e-12 && (back[1] - 0.09).abs() < 1e-12);
    }
}
