//! Deterministic low-discrepancy point sets.

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut factor = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv_base;
    }
    value
}

/// Multidimensional Halton sequence in `(0,1)^dim`.
///
/// The `seed` skips a prefix of the sequence, so different seeds yield
/// disjoint, reproducible subsequences.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && dim <= PRIMES.len(), "Halton supports 1..=16 dims");
        // index 0 maps to the origin; start past it
        Self {
            dim,
            next: 1 + seed.wrapping_mul(7919) % (1 << 20),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Point with the given absolute index.
    pub fn point(&self, index: u64) -> Vec<f64> {
        PRIMES[..self.dim]
            .iter()
            .map(|&b| radical_inverse(index, b))
            .collect()
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let p = self.point(self.next);
        self.next += 1;
        p
    }
}

/// `count` points uniformly distributed in the open unit ball of `R^dim`,
/// obtained by rejection from the cube `[−1,1]^dim`.
pub fn ball_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut seq = Halton::new(dim, seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<f64> = seq.next_point().iter().map(|x| 2.0 * x - 1.0).collect();
        if p.iter().map(|x| x * x).sum::<f64>() < 1.0 {
            out.push(p);
        }
    }
    out
}

/// `count` points distributed as `N(0, variance · I)` in `R^dim`, by a
/// Box-Muller transform of Halton pairs.
pub fn gaussian_points(dim: usize, count: usize, variance: f64, seed: u64) -> Vec<Vec<f64>> {
    let pairs = dim.div_ceil(2);
    let mut seq = Halton::new(2 * pairs, seed);
    let sd = variance.sqrt();
    (0..count)
        .map(|_| {
            let u = seq.next_point();
            let mut p = Vec::with_capacity(2 * pairs);
            for k in 0..pairs {
                let (u1, u2) = (u[2 * k].max(f64::MIN_POSITIVE), u[2 * k + 1]);
                let r = (-2.0 * u1.ln()).sqrt() * sd;
                let a = 2.0 * std::f64::consts::PI * u2;
                p.push(r * a.cos());
                p.push(r * a.sin());
            }
            p.truncate(dim);
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn ball_points_are_inside() {
        let pts = ball_points(3, 500, 0);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|p| p.iter().map(|x| x * x).sum::<f64>() < 1.0));
    }

    #[test]
    fn same_seed_same_points() {
        assert_eq!(ball_points(2, 50, 7), ball_points(2, 50, 7));
        assert_ne!(ball_points(2, 50, 7), ball_points(2, 50, 8));
    }

    #[test]
    fn gaussian_points_moments() {
        let pts = gaussian_points(3, 20000, 2.0, 1);
        for d in 0..3 {
            let mean: f64 = pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64;
            let var: f64 = pts.iter().map(|p| p[d] * p[d]).sum::<f64>() / pts.len() as f64;
            assert!(mean.abs() < 0.02, "mean {mean}");
            assert!((var - 2.0).abs() < 0.05, "var {var}");
        }
    }
}
