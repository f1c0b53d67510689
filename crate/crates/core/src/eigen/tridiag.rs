//! Implicit QL iteration for symmetric tridiagonal matrices.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Which eigenvector information to accumulate.
pub enum Track<'a> {
    None,
    /// Only the last component of every eigenvector (Lanczos residual estimates).
    LastComponent(&'a mut Vec<f64>),
    /// Full eigenvectors, stored as rows.
    Full(&'a mut Vec<Vec<f64>>),
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and sub-diagonal `off` (`off.len() + 1 == diag.len()`).
///
/// Returns eigenvalues in ascending order; tracked vector data is permuted to
/// match.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], mut track: Track<'_>) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n == 0 || off.len() + 1 == n, "sub-diagonal length mismatch");
    let mut d = diag.to_vec();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).take(n).collect();
    match &mut track {
        Track::None => {}
        Track::LastComponent(last) => {
            last.clear();
            last.resize(n, 0.0);
            if n > 0 {
                last[n - 1] = 1.0;
            }
        }
        Track::Full(rows) => {
            rows.clear();
            rows.extend((0..n).map(|i| {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r
            }));
        }
    }

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::Solver(format!(
                    "tridiagonal QL did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                match &mut track {
                    Track::None => {}
                    Track::LastComponent(last) => {
                        let f = last[i + 1];
                        last[i + 1] = s * last[i] + c * f;
                        last[i] = c * last[i] - s * f;
                    }
                    Track::Full(rows) => {
                        let (lo, hi) = rows.split_at_mut(i + 1);
                        let (ri, rj) = (&mut lo[i], &mut hi[0]);
                        for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
                            let f = *b;
                            *b = s * *a + c * f;
                            *a = c * *a - s * f;
                        }
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    match track {
        Track::None => {}
        Track::LastComponent(last) => *last = order.iter().map(|&i| last[i]).collect(),
        Track::Full(rows) => {
            let mut taken: Vec<Option<Vec<f64>>> = rows.drain(..).map(Some).collect();
            rows.extend(order.iter().map(|&i| taken[i].take().expect("permutation")));
        }
    }
    Ok(values)
}
