//! Symbolic determinant and inverse by cofactors, for small matrices.

use crate::error::{Error, Result};
use crate::expr::{simplify, Expr};

fn det_sub(m: &[Vec<Expr>], rows: &[usize], cols: &[usize]) -> Expr {
    match rows.len() {
        0 => Expr::one(),
        1 => m[rows[0]][cols[0]].clone(),
        2 => {
            &m[rows[0]][cols[0]] * &m[rows[1]][cols[1]] - &m[rows[0]][cols[1]] * &m[rows[1]][cols[0]]
        }
        _ => {
            let r0 = rows[0];
            let rest: Vec<usize> = rows[1..].to_vec();
            let mut acc = Expr::zero();
            for (k, &c) in cols.iter().enumerate() {
                if m[r0][c].is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let term = &m[r0][c] * det_sub(m, &rest, &sub_cols);
                acc = if k % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

/// Determinant by Laplace expansion along the first row.
pub fn symbolic_det(m: &[Vec<Expr>]) -> Expr {
    let idx: Vec<usize> = (0..m.len()).collect();
    simplify(&det_sub(m, &idx, &idx))
}

/// Inverse as adjugate over determinant; returns `(inverse, det)`.
/// Restricted to n ≤ 4.
pub fn symbolic_inverse(m: &[Vec<Expr>]) -> Result<(Vec<Vec<Expr>>, Expr)> {
    let n = m.len();
    if n > 4 {
        return Err(Error::Dimension(n));
    }
    let det = symbolic_det(m);
    let mut inv = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            // inverse[i][j] = cofactor(j, i) / det
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let minor = det_sub(m, &rows, &cols);
            let cof = if (i + j) % 2 == 0 { minor } else { -minor };
            inv[i][j] = simplify(&(cof / &det));
        }
    }
    Ok((inv, det))
}
