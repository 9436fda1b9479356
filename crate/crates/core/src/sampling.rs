//! Deterministic low-discrepancy sample plans over the unit ball.
//!
//! Points are a Halton sequence in `[−1, 1]^m` with a seeded
//! Cranley–Patterson shift, rejected to the unit ball and scaled by the plan
//! radius. Level `ℓ` uses the first `base · 2^ℓ` accepted points, so the
//! sample sets are nested and every sampled supremum is non-decreasing under
//! refinement.

use alloc::vec;
use alloc::vec::Vec;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingPlan {
    pub seed: u64,
    /// Number of Halton points at level 0.
    pub base: usize,
    /// Number of refinement levels (at least 1).
    pub levels: usize,
    /// Points are drawn from the closed ball of this radius.
    pub radius: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { seed: 0, base: 16, levels: 3, radius: 0.99 }
    }
}

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform value in `[0, 1)` from a splitmix64 stream.
pub fn unit_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Shifted Halton stream in `[0, 1)^dim`.
#[derive(Clone, Debug)]
pub struct Halton {
    index: u64,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Halton {
        assert!(dim <= PRIMES.len(), "Halton stream supports at most {} dimensions", PRIMES.len());
        let mut s = seed;
        let shift = (0..dim).map(|_| if seed == 0 { 0.0 } else { unit_f64(&mut s) }).collect();
        Halton { index: 0, shift }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        self.shift
            .iter()
            .enumerate()
            .map(|(d, s)| {
                let u = radical_inverse(self.index, PRIMES[d]) + s;
                u - libm::floor(u)
            })
            .collect()
    }
}

impl SamplingPlan {
    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels.max(1);
        self
    }

    pub fn count(&self, level: usize) -> usize {
        self.base << level
    }

    /// Points for `level`: the origin, `±radius·e_i`, then Halton points.
    pub fn ball_points(&self, dim: usize, level: usize) -> Vec<Vec<f64>> {
        self.ball_points_radius(dim, level, self.radius)
    }

    pub fn ball_points_radius(&self, dim: usize, level: usize, radius: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.count(level) + 2 * dim + 1);
        out.push(vec![0.0; dim]);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; dim];
                p[i] = s * radius;
                out.push(p);
            }
        }
        out.extend(halton_ball(dim, self.count(level), self.seed, radius));
        out
    }

    /// Points drawn from `radius·B^m` only (no axis points), nested in `n`.
    pub fn ball_halton(&self, dim: usize, n: usize, radius: f64) -> Vec<Vec<f64>> {
        halton_ball(dim, n, self.seed, radius)
    }
}

/// The first `n` shifted Halton points of `[−1,1]^dim` that fall in the open
/// unit ball, scaled by `radius`.
pub fn halton_ball(dim: usize, n: usize, seed: u64, radius: f64) -> Vec<Vec<f64>> {
    if dim == 0 {
        return vec![Vec::new(); n.min(1)];
    }
    let mut h = Halton::new(dim, seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec<f64> = h.next_point().into_iter().map(|u| 2.0 * u - 1.0).collect();
        let r2: f64 = p.iter().map(|v| v * v).sum();
        if r2 < 1.0 {
            out.push(p.into_iter().map(|v| v * radius).collect());
        }
    }
    out
}

/// Unit vectors spread over the sphere `S^{dim−1}`.
pub fn directions(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|i| {
                let a = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                vec![libm::cos(a), libm::sin(a)]
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = libm::sqrt(1.0 - z * z);
                    let a = golden * i as f64;
                    vec![r * libm::cos(a), r * libm::sin(a), z]
                })
                .collect()
        }
        _ => halton_ball(dim, n * 4, seed, 1.0)
            .into_iter()
            .filter_map(|p| {
                let r = libm::sqrt(p.iter().map(|v| v * v).sum::<f64>());
                (r > 0.2).then(|| p.into_iter().map(|v| v / r).collect())
            })
            .take(n)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_are_nested() {
        let plan = SamplingPlan { seed: 7, ..SamplingPlan::default() };
        let a = plan.ball_points(3, 0);
        let b = plan.ball_points(3, 2);
        assert_eq!(a.len(), 16 + 7);
        assert_eq!(b.len(), 64 + 7);
        assert_eq!(&b[..a.len()], &a[..]);
        assert!(b.iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() <= 0.99f64 * 0.99 + 1e-15));
    }

    #[test]
    fn seeds_change_points_deterministically() {
        let a = halton_ball(2, 5, 1, 1.0);
        assert_eq!(a, halton_ball(2, 5, 1, 1.0));
        assert_ne!(a, halton_ball(2, 5, 2, 1.0));
    }

    #[test]
    fn unshifted_halton_matches_radical_inverse() {
        let mut h = Halton::new(2, 0);
        assert_eq!(h.next_point(), vec![0.5, 1.0 / 3.0]);
        assert_eq!(h.next_point(), vec![0.25, 2.0 / 3.0]);
    }

    #[test]
    fn directions_are_unit() {
        for dim in 1..=4 {
            for d in directions(dim, 12, 3) {
                let r: f64 = d.iter().map(|v| v * v).sum();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }
}
