//! Nullspaces of dense matrices.
//!
//! Exact backend: fraction-free (Bareiss) elimination on integer-scaled rows.
//! Float backend: row equilibration followed by Householder QR with column
//! pivoting; columns whose pivot falls below `2^(-3p/4)` of the largest one
//! are treated as dependent.

use rug::{Float, Integer, Rational};

use crate::scalar::{pow2, Scalar};

/// Basis of `{x : A x = 0}` for an `rows x ncols` matrix.
pub fn nullspace<S: Scalar>(a: &[Vec<S>], ncols: usize) -> Vec<Vec<S>> {
    if S::EXACT {
        let ra: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|v| v.to_rational()).collect()).collect();
        nullspace_exact(&ra, ncols)
            .into_iter()
            .map(|v| v.iter().map(|x| S::from_rational(x, 0)).collect())
            .collect()
    } else {
        let prec = a.iter().flatten().map(|v| v.prec()).max().unwrap_or(crate::scalar::DEFAULT_PREC);
        let fa: Vec<Vec<Float>> = a.iter().map(|r| r.iter().map(|v| v.to_float(prec)).collect()).collect();
        nullspace_float(&fa, ncols, prec)
            .into_iter()
            .map(|v| v.iter().map(|x| S::from_float(x, prec)).collect())
            .collect()
    }
}

/// Exact nullspace over the rationals.
pub fn nullspace_exact(a: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Integer>> = a
        .iter()
        .map(|row| {
            let l = row.iter().fold(Integer::from(1), |acc, v| acc.lcm(v.denom()));
            row.iter().map(|v| v.numer() * (Integer::from(&l / v.denom()))).collect()
        })
        .collect();
    let nrows = m.len();
    let mut prev = Integer::from(1);
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows)
            .filter(|&i| m[i][c] != 0)
            .min_by_key(|&i| m[i][c].significant_bits())
        else {
            continue;
        };
        m.swap(r, p);
        for i in r + 1..nrows {
            for k in c + 1..ncols {
                let v = Integer::from(&m[r][c] * &m[i][k]) - Integer::from(&m[i][c] * &m[r][k]);
                m[i][k] = v.div_exact(&prev);
            }
            m[i][c] = Integer::new();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rational::new(); ncols];
            x[f] = Rational::from(1);
            for (i, &pc) in pivots.iter().enumerate().rev() {
                let mut s = Rational::new();
                for k in pc + 1..ncols {
                    if m[i][k] != 0 && x[k] != 0 {
                        s += Rational::from(&x[k] * &m[i][k]);
                    }
                }
                x[pc] = -s / &m[i][pc];
            }
            x
        })
        .collect()
}

/// Float nullspace by column-pivoted Householder QR.
pub fn nullspace_float(a: &[Vec<Float>], ncols: usize, prec: u32) -> Vec<Vec<Float>> {
    let nrows = a.len();
    let mut m: Vec<Vec<Float>> = a
        .iter()
        .map(|row| {
            let s = row.iter().map(|v| Float::with_val(prec, v.abs_ref())).fold(Float::with_val(prec, 0), |a, b| a.max(&b));
            if s.is_zero() {
                row.clone()
            } else {
                row.iter().map(|v| Float::with_val(prec, v / &s)).collect()
            }
        })
        .collect();
    let mut perm: Vec<usize> = (0..ncols).collect();
    let steps = nrows.min(ncols);
    let mut diag_max = Float::with_val(prec, 0);
    let tol_rel = pow2(-((3 * prec / 4) as i32), prec);
    let mut rank = 0;
    for k in 0..steps {
        let norms: Vec<Float> = (k..ncols)
            .map(|c| (k..nrows).fold(Float::with_val(prec, 0), |s, i| s + Float::with_val(prec, m[i][c].square_ref())))
            .collect();
        let (best, best_norm) = norms
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, v)| (i + k, v.clone()))
            .unwrap();
        let col_norm = best_norm.sqrt();
        if k == 0 {
            diag_max = col_norm.clone();
        }
        if col_norm.is_zero() || col_norm <= Float::with_val(prec, &diag_max * &tol_rel) {
            break;
        }
        if best != k {
            for row in m.iter_mut() {
                row.swap(k, best);
            }
            perm.swap(k, best);
        }
        let alpha = if m[k][k].is_sign_negative() { col_norm.clone() } else { -col_norm.clone() };
        let mut v: Vec<Float> = (k..nrows).map(|i| m[i][k].clone()).collect();
        v[0] -= &alpha;
        let vnorm2 = v.iter().fold(Float::with_val(prec, 0), |s, x| s + Float::with_val(prec, x.square_ref()));
        if !vnorm2.is_zero() {
            for c in k..ncols {
                let dot = v
                    .iter()
                    .enumerate()
                    .fold(Float::with_val(prec, 0), |s, (t, vi)| s + Float::with_val(prec, vi * &m[k + t][c]));
                let f = Float::with_val(prec, 2 * dot / &vnorm2);
                for (t, vi) in v.iter().enumerate() {
                    let upd = Float::with_val(prec, &f * vi);
                    m[k + t][c] -= upd;
                }
            }
        }
        rank += 1;
    }
    let free: Vec<usize> = (rank..ncols).collect();
    free.iter()
        .map(|&f| {
            let mut y = vec![Float::with_val(prec, 0); ncols];
            y[f] = Float::with_val(prec, 1);
            for i in (0..rank).rev() {
                let mut s = Float::with_val(prec, 0);
                for k in i + 1..ncols {
                    if !y[k].is_zero() {
                        s += Float::with_val(prec, &m[i][k] * &y[k]);
                    }
                }
                y[i] = Float::with_val(prec, -s / &m[i][i]);
            }
            let mut x = vec![Float::with_val(prec, 0); ncols];
            for (pos, &orig) in perm.iter().enumerate() {
                x[orig] = y[pos].clone();
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn exact_one_dimensional() {
        let a = vec![vec![r(1, 1), r(2, 1), r(3, 1)], vec![r(1, 2), r(1, 3), r(1, 4)]];
        let ns = nullspace_exact(&a, 3);
        assert_eq!(ns.len(), 1);
        for row in &a {
            let s: Rational = row.iter().zip(&ns[0]).map(|(x, y)| Rational::from(x * y)).sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn exact_rank_deficient() {
        let a = vec![vec![r(1, 1), r(1, 1), r(0, 1)], vec![r(2, 1), r(2, 1), r(0, 1)]];
        assert_eq!(nullspace_exact(&a, 3).len(), 2);
    }

    #[test]
    fn float_matches_exact() {
        let a = vec![vec![r(1, 1), r(2, 1), r(3, 1)], vec![r(1, 2), r(1, 3), r(1, 4)]];
        let ex = nullspace_exact(&a, 3);
        let fa: Vec<Vec<Float>> = a.iter().map(|row| row.iter().map(|v| Float::with_val(256, v)).collect()).collect();
        let fl = nullspace_float(&fa, 3, 256);
        assert_eq!(fl.len(), 1);
        let k = Float::with_val(256, &ex[0][2]) / &fl[0][2];
        for i in 0..3 {
            let d = Float::with_val(256, &fl[0][i] * &k) - Float::with_val(256, &ex[0][i]);
            assert!(d.abs() < pow2(-240, 256));
        }
    }

    #[test]
    fn float_detects_rank_drop() {
        let a = vec![
            vec![Float::with_val(128, 1), Float::with_val(128, 1), Float::with_val(128, 0)],
            vec![Float::with_val(128, 2), Float::with_val(128, 2), Float::with_val(128, 0)],
        ];
        assert_eq!(nullspace_float(&a, 3, 128).len(), 2);
    }
}
