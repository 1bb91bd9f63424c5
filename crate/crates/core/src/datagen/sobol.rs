//! Unscrambled Sobol' points in Gray-code order, starting at the origin.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// Primitive polynomial degree `s`, coefficient bits `a`, initial `m` values.
const TABLE: [(usize, u32, &[u32]); 2] = [(1, 0, &[1]), (2, 1, &[1, 3])];

pub const MAX_DIMS: usize = TABLE.len() + 1;

fn directions(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = TABLE[dim - 1];
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                x ^= v[k - j];
            }
        }
        v[k] = x;
    }
    v
}

/// The first `n` points of the `dims`-dimensional sequence in `[0, 1)`.
pub fn sobol_points(dims: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if dims == 0 || dims > MAX_DIMS {
        return Err(Error::Domain(format!(
            "Sobol' dimension {dims} is not supported (1..={MAX_DIMS})"
        )));
    }
    if n > 1usize << BITS {
        return Err(Error::Domain(format!(
            "{n} Sobol' points exceed the 2^32 period"
        )));
    }
    let dirs: Vec<[u32; BITS]> = (0..dims).map(directions).collect();
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut state = vec![0u32; dims];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            let c = (i - 1).trailing_ones() as usize;
            for (s, d) in state.iter_mut().zip(&dirs) {
                *s ^= d[c];
            }
        }
        out.push(state.iter().map(|&s| s as f64 * scale).collect());
    }
    Ok(out)
}

/// Sobol' points mapped affinely onto `bounds`.
pub fn sobol_scaled(bounds: &[(f64, f64)], n: usize) -> Result<Vec<Vec<f64>>> {
    Ok(sobol_points(bounds.len(), n)?
        .into_iter()
        .map(|p| {
            p.iter()
                .zip(bounds)
                .map(|(&u, &(lo, hi))| lo + (hi - lo) * u)
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn leading_points() {
        assert_eq!(sobol_points(2, 1).unwrap(), vec![vec![0.0, 0.0]]);
        assert_eq!(sobol_points(2, 2).unwrap()[1], vec![0.5, 0.5]);
        let p = sobol_points(3, 8).unwrap();
        let expected = [
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25],
            [0.25, 0.75, 0.75],
            [0.375, 0.375, 0.625],
            [0.875, 0.875, 0.125],
            [0.625, 0.125, 0.875],
            [0.125, 0.625, 0.375],
        ];
        for (a, b) in p.iter().zip(expected) {
            assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn frozen_later_points() {
        let p = sobol_points(3, 256).unwrap();
        assert_eq!(p[100], vec![0.4140625, 0.2578125, 0.7734375]);
        assert_eq!(p[255], vec![0.00390625, 0.99609375, 0.76953125]);
    }

    #[test]
    fn unsupported_dims() {
        assert!(sobol_points(0, 4).is_err());
        assert!(sobol_points(4, 4).is_err());
    }

    fn star_discrepancy(mut x: Vec<f64>) -> f64 {
        x.sort_by(f64::total_cmp);
        let n = x.len() as f64;
        x.iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
            .fold(0.0, f64::max)
    }

    #[test]
    fn lower_discrepancy_than_uniform() {
        let p = sobol_points(3, 256).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for d in 0..3 {
            let sob = star_discrepancy(p.iter().map(|r| r[d]).collect());
            let mut iid: Vec<f64> = (0..20)
                .map(|_| star_discrepancy((0..256).map(|_| rng.random::<f64>()).collect()))
                .collect();
            iid.sort_by(f64::total_cmp);
            assert!(sob < iid[10], "dim {d}: {sob} vs {}", iid[10]);
        }
    }

    #[test]
    fn scaled_points_stay_in_bounds() {
        let bounds = [(1.0, 200.0), (0.6, 1.4)];
        for p in sobol_scaled(&bounds, 1000).unwrap() {
            for (v, (lo, hi)) in p.iter().zip(bounds) {
                assert!(*v >= lo && *v <= hi);
            }
        }
    }
}
