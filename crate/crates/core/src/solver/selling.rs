//! Selling's decomposition of positive definite 2x2 matrices into
//! nonnegative combinations of integer rank-one matrices.

use crate::matrix::SymMatrix2;

fn dot(d: &SymMatrix2, a: [i32; 2], b: [i32; 2]) -> f64 {
    d.bilinear([a[0] as f64, a[1] as f64], [b[0] as f64, b[1] as f64])
}

/// Returns `(weight, v)` with `d = sum weight v v^T`, all weights
/// nonnegative. Vectors are sign-normalized (first nonzero component
/// positive); zero-weight terms are dropped.
pub fn decompose(d: &SymMatrix2) -> Vec<(f64, [i32; 2])> {
    let scale = d.trace().abs().max(f64::MIN_POSITIVE);
    let mut b: [[i32; 2]; 3] = [[1, 0], [0, 1], [-1, -1]];
    for _ in 0..10_000 {
        let mut changed = false;
        'search: for i in 0..3 {
            for j in (i + 1)..3 {
                if dot(d, b[i], b[j]) > 1e-14 * scale {
                    let k = 3 - i - j;
                    let (bi, bj) = (b[i], b[j]);
                    b[i] = [-bi[0], -bi[1]];
                    b[k] = [bi[0] - bj[0], bi[1] - bj[1]];
                    changed = true;
                    break 'search;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::with_capacity(3);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let w = -dot(d, b[j], b[k]);
        let e = normalize([-b[i][1], b[i][0]]);
        if w > 1e-15 * scale {
            out.push((w, e));
        }
    }
    out
}

/// Flips `v` so that its first nonzero component is positive.
pub fn normalize(v: [i32; 2]) -> [i32; 2] {
    if v[0] < 0 || (v[0] == 0 && v[1] < 0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rebuild(terms: &[(f64, [i32; 2])]) -> SymMatrix2 {
        terms.iter().fold(SymMatrix2::ZERO, |acc, &(w, v)| {
            acc + SymMatrix2::outer([v[0] as f64, v[1] as f64]) * w
        })
    }

    #[test]
    fn identity_is_five_point() {
        let t = decompose(&SymMatrix2::IDENTITY);
        assert_eq!(t.len(), 2);
        assert!(t.contains(&(1.0, [1, 0])) && t.contains(&(1.0, [0, 1])));
    }

    #[test]
    fn random_spd_matrices_are_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let a = rng.random_range(1.0..50.0);
            let d = SymMatrix2::rotated_diag(theta, a, 1.0);
            let terms = decompose(&d);
            assert!(terms.iter().all(|&(w, _)| w >= 0.0));
            let r = rebuild(&terms) - d;
            let err = r.xx.abs().max(r.xy.abs()).max(r.yy.abs());
            assert!(err < 1e-10 * a, "{d:?} {terms:?}");
        }
    }
}
