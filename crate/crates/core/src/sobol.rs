//! Sobol low-discrepancy sequence with random digital shifts.
//!
//! Direction numbers are the Joe-Kuo `new-joe-kuo-6.21201` set for the first
//! sixteen dimensions, which covers every benchmark shipped here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(degree s, coefficient a, initial m_1..m_s)` for dimensions 2..=16.
const JOE_KUO: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIM: usize = JOE_KUO.len() + 1;

/// Direction integers `v_k` for one coordinate, left-aligned in 32 bits.
fn directions(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut next = v[k - s] ^ (v[k - s] >> s);
        for i in 1..s {
            if (a >> (s - 1 - i)) & 1 == 1 {
                next ^= v[k - i];
            }
        }
        v[k] = next;
    }
    v
}

/// A digitally shifted Sobol generator over `[0, 1)^dim`.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    shift: Vec<u32>,
}

impl Sobol {
    /// Unshifted sequence; point 0 is the origin.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::arg(format!(
                "Sobol dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        Ok(Sobol {
            directions: (0..dim).map(directions).collect(),
            shift: vec![0; dim],
        })
    }

    /// Sequence XOR-shifted by per-coordinate words drawn from `seed`.
    pub fn scrambled(dim: usize, seed: u64) -> Result<Self> {
        let mut s = Sobol::new(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut s.shift {
            *w = rng.random();
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// The `index`-th point.
    pub fn point(&self, index: u32) -> Vec<f64> {
        self.directions
            .iter()
            .zip(&self.shift)
            .map(|(v, shift)| {
                let mut acc = 0u32;
                let mut i = index;
                let mut k = 0;
                while i != 0 {
                    if i & 1 == 1 {
                        acc ^= v[k];
                    }
                    i >>= 1;
                    k += 1;
                }
                f64::from(acc ^ shift) / 4_294_967_296.0
            })
            .collect()
    }

    pub fn points(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n as u32).map(|i| self.point(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_match_reference() {
        let s = Sobol::new(3).unwrap();
        assert_eq!(s.point(0), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.point(1), vec![0.5, 0.5, 0.5]);
        assert_eq!(s.point(2), vec![0.25, 0.75, 0.75]);
        assert_eq!(s.point(3), vec![0.75, 0.25, 0.25]);
        assert_eq!(s.point(4), vec![0.125, 0.625, 0.375]);
    }

    #[test]
    fn one_dimensional_projections_are_stratified() {
        for seed in [0u64, 5, 99] {
            let s = Sobol::scrambled(MAX_DIM, seed).unwrap();
            let pts = s.points(256);
            for d in 0..MAX_DIM {
                let mut seen = [false; 256];
                for p in &pts {
                    let cell = (p[d] * 256.0) as usize;
                    assert!(!seen[cell], "dim {d} cell {cell} hit twice");
                    seen[cell] = true;
                }
            }
        }
    }

    #[test]
    fn two_dimensional_nets_for_leading_pairs() {
        // The leading pair forms a (0, 8, 2)-net: each cell of a 4x64
        // partition holds exactly one of the first 256 points.
        let pts = Sobol::new(2).unwrap().points(256);
        let mut seen = [[false; 64]; 4];
        for p in &pts {
            let (a, b) = ((p[0] * 4.0) as usize, (p[1] * 64.0) as usize);
            assert!(!seen[a][b]);
            seen[a][b] = true;
        }
    }

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(Sobol::new(0).is_err());
        assert!(Sobol::new(MAX_DIM + 1).is_err());
    }
}
