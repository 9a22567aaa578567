//! Deterministic, exactly symmetric direction grids on the unit sphere.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Default direction counts per ambient dimension.
pub fn default_count(d: usize) -> usize {
    match d {
        1 => 2,
        2 => 256,
        3 => 1026,
        _ => 2048,
    }
}

/// An ordered list of unit vectors closed under negation.
///
/// The first half lies in an open hemisphere; entry `i + n/2` is the exact
/// negation of entry `i`.  At d = 2 entry `k` has angle `2 pi k / n`.
#[derive(Debug, PartialEq)]
pub struct DirectionGrid {
    dim: usize,
    n: usize,
    dirs: Vec<f64>,
}

impl DirectionGrid {
    /// Build the canonical grid with `n` directions in dimension `d`.
    pub fn canonical(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n < 2 || n % 2 != 0 || (d == 2 && n < 4) {
            return Err(Error::DimensionMismatch { expected: default_count(d.max(1)), got: n });
        }
        let half = n / 2;
        let mut first: Vec<Vec<f64>> = Vec::with_capacity(half);
        match d {
            1 => {
                if n != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: n });
                }
                first.push(vec![1.0]);
            }
            2 => {
                for k in 0..half {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    first.push(vec![th.cos(), th.sin()]);
                }
            }
            3 => {
                let golden = (1.0 + 5f64.sqrt()) / 2.0;
                for i in 0..half {
                    let z = 1.0 - (i as f64 + 0.5) / half as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
                    first.push(vec![r * phi.cos(), r * phi.sin(), z]);
                }
            }
            4 => {
                for i in 0..half {
                    let k = i + 1;
                    let (u1, u2, u3) = (halton(k, 2), halton(k, 3), halton(k, 5));
                    let (r1, r2) = ((1.0 - u1).sqrt(), u1.sqrt());
                    let (t1, t2) = (2.0 * std::f64::consts::PI * u2, 2.0 * std::f64::consts::PI * u3);
                    first.push(vec![r1 * t1.sin(), r1 * t1.cos(), r2 * t2.sin(), r2 * t2.cos()]);
                }
            }
            _ => {
                const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
                if d > PRIMES.len() {
                    return Err(Error::DimensionMismatch { expected: PRIMES.len(), got: d });
                }
                for i in 0..half {
                    first.push((0..d).map(|c| 2.0 * halton(i + 1, PRIMES[c]) - 1.0).collect());
                }
            }
        }
        let mut dirs = Vec::with_capacity(n * d);
        for v in &mut first {
            if d != 2 {
                let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= nv);
                if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-12) {
                    if lead < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                }
            }
            dirs.extend_from_slice(v);
        }
        for i in 0..half {
            for c in 0..d {
                let x = dirs[i * d + c];
                dirs.push(-x);
            }
        }
        Ok(DirectionGrid { dim: d, n, dirs })
    }

    /// Shared canonical grid with `n` directions (cached per `(d, n)`).
    pub fn shared(d: usize, n: usize) -> Result<Arc<DirectionGrid>> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<DirectionGrid>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(g) = cache.lock().expect("direction cache poisoned").get(&(d, n)) {
            return Ok(g.clone());
        }
        let g = Arc::new(Self::canonical(d, n)?);
        cache.lock().expect("direction cache poisoned").insert((d, n), g.clone());
        Ok(g)
    }

    /// Shared grid with the default count for `d`.
    pub fn default_for(d: usize) -> Arc<DirectionGrid> {
        Self::shared(d, default_count(d)).expect("default grid is valid")
    }

    /// Parse a grid name of the form `canonical-N`.
    pub fn from_name(d: usize, name: &str) -> Result<Arc<DirectionGrid>> {
        let n = name
            .strip_prefix("canonical-")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown direction grid '{name}'")))?;
        Self::shared(d, n)
    }

    pub fn name(&self) -> String {
        format!("canonical-{}", self.n)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dir(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the negated direction.
    #[inline]
    pub fn neg(&self, i: usize) -> usize {
        (i + self.n / 2) % self.n
    }

    /// All directions as one row-major slice.
    pub fn as_flat(&self) -> &[f64] {
        &self.dirs
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.dirs.chunks_exact(self.dim)
    }

    /// Angular step at d = 2.
    pub fn step_angle(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_unit_and_symmetric() {
        for d in 1..=4 {
            let g = DirectionGrid::default_for(d);
            assert_eq!(g.len(), default_count(d));
            for i in 0..g.len() {
                let n: f64 = g.dir(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-14);
                let j = g.neg(i);
                for c in 0..d {
                    assert_eq!(g.dir(j)[c], -g.dir(i)[c]);
                }
            }
        }
    }

    #[test]
    fn planar_grid_contains_axes() {
        let g = DirectionGrid::default_for(2);
        assert_eq!(g.dir(0), &[1.0, 0.0]);
        assert!((g.dir(64)[0]).abs() < 1e-15 && g.dir(64)[1] == 1.0);
    }

    #[test]
    fn names_round_trip() {
        let g = DirectionGrid::from_name(3, "canonical-1026").unwrap();
        assert_eq!(g.name(), "canonical-1026");
        assert!(DirectionGrid::from_name(2, "fancy").is_err());
        assert!(DirectionGrid::canonical(2, 7).is_err());
    }
}
