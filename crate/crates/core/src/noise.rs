//! Driving noise: stored increment matrices and Brownian sampling.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::path_rng;

/// Increments `dW` of a `n_channels`-dimensional driver on a uniform grid.
/// Stored row-major, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    dt: f64,
    n_channels: usize,
    increments: Vec<f64>,
}

pub const NOISE_HEADER: &str = "dt,n_steps,n_channels";

impl NoisePath {
    pub fn new(dt: f64, n_channels: usize, increments: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::StepSize(dt));
        }
        if n_channels == 0 {
            return Err(Error::InvalidParameter(
                "noise needs at least one channel".into(),
            ));
        }
        if increments.is_empty() || !increments.len().is_multiple_of(n_channels) {
            return Err(Error::InvalidParameter(format!(
                "{} increments do not fill rows of {n_channels} channels",
                increments.len()
            )));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("noise increment"));
        }
        Ok(NoisePath {
            dt,
            n_channels,
            increments,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len() / self.n_channels
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.increments[k * self.n_channels..(k + 1) * self.n_channels]
    }

    pub fn steps(&self) -> impl Iterator<Item = &[f64]> {
        self.increments.chunks_exact(self.n_channels)
    }

    /// Sum of the increments over steps `[start, end)`.
    pub fn total(&self, start: usize, end: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_channels];
        for row in (start..end).map(|k| self.step(k)) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        acc
    }

    /// Coarsened path: consecutive blocks of `factor` steps merged.
    pub fn coarsen(&self, factor: usize) -> Result<NoisePath> {
        if factor == 0 || !self.n_steps().is_multiple_of(factor) {
            return Err(Error::InvalidParameter(format!(
                "cannot coarsen {} steps by {factor}",
                self.n_steps()
            )));
        }
        let mut inc = Vec::with_capacity(self.increments.len() / factor);
        for b in 0..self.n_steps() / factor {
            inc.extend(self.total(b * factor, (b + 1) * factor));
        }
        NoisePath::new(self.dt * factor as f64, self.n_channels, inc)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{NOISE_HEADER}");
        let _ = writeln!(out, "{},{},{}", self.dt, self.n_steps(), self.n_channels);
        for row in self.steps() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<NoisePath> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, msg: &str| Error::Parse(format!("line {}: {msg}", line + 1));
        match lines.next() {
            Some((_, l)) if l.trim() == NOISE_HEADER => {}
            Some((i, _)) => return Err(parse_err(i, "expected header dt,n_steps,n_channels")),
            None => return Err(Error::Parse("empty noise file".into())),
        }
        let (i, meta) = lines
            .next()
            .ok_or_else(|| Error::Parse("missing size line".into()))?;
        let meta: Vec<&str> = meta.split(',').map(str::trim).collect();
        if meta.len() != 3 {
            return Err(parse_err(i, "size line needs three fields"));
        }
        let dt: f64 = meta[0].parse().map_err(|_| parse_err(i, "bad dt"))?;
        let n_steps: usize = meta[1].parse().map_err(|_| parse_err(i, "bad n_steps"))?;
        let n_channels: usize = meta[2]
            .parse()
            .map_err(|_| parse_err(i, "bad n_channels"))?;
        let mut inc = Vec::with_capacity(n_steps * n_channels);
        for (i, line) in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| parse_err(i, "bad increment"))?;
            if row.len() != n_channels {
                return Err(parse_err(
                    i,
                    &format!("expected {n_channels} values, got {}", row.len()),
                ));
            }
            inc.extend(row);
        }
        if inc.len() != n_steps * n_channels {
            return Err(Error::Parse(format!(
                "declared {n_steps} steps, found {}",
                inc.len() / n_channels.max(1)
            )));
        }
        NoisePath::new(dt, n_channels, inc)
    }
}

/// Fill `out` with independent `N(0, dt)` draws.
pub fn fill_increments<R: Rng + ?Sized>(rng: &mut R, dt: f64, out: &mut [f64]) {
    let s = dt.sqrt();
    for x in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *x = s * g;
    }
}

/// Brownian increments for path `index` of the ensemble seeded by `seed`.
/// The draw order (step-major, channel-minor) matches the one used by the
/// ensemble simulator, so path `i` of an ensemble sees exactly this noise.
pub fn sample_brownian_path(
    n_steps: usize,
    dt: f64,
    n_channels: usize,
    seed: u64,
    index: u64,
) -> Result<NoisePath> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::StepSize(dt));
    }
    let mut rng = path_rng(seed, index);
    let mut inc = vec![0.0; n_steps * n_channels];
    for row in inc.chunks_exact_mut(n_channels.max(1)) {
        fill_increments(&mut rng, dt, row);
    }
    NoisePath::new(dt, n_channels, inc)
}

pub fn sample_brownian(n_steps: usize, dt: f64, n_channels: usize, seed: u64) -> Result<NoisePath> {
    sample_brownian_path(n_steps, dt, n_channels, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = sample_brownian(50, 0.01, 3, 5).unwrap();
        let b = sample_brownian(50, 0.01, 3, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_brownian(50, 0.01, 3, 6).unwrap());
        assert_ne!(a, sample_brownian_path(50, 0.01, 3, 5, 1).unwrap());
    }

    #[test]
    fn variance_and_cross_correlation() {
        let n = 1_000_000;
        let p = sample_brownian(n, 0.01, 7, 17).unwrap();
        let mut sum = [0.0; 7];
        let mut sq = [0.0; 7];
        for row in p.steps() {
            for a in 0..7 {
                sum[a] += row[a];
                sq[a] += row[a] * row[a];
            }
        }
        let nf = n as f64;
        for a in 0..7 {
            let mean = sum[a] / nf;
            let var = sq[a] / nf - mean * mean;
            assert!(((var - 0.01) / 0.01).abs() < 0.005, "channel {a} var {var}");
        }
        for a in 0..7 {
            for b in (a + 1)..7 {
                let cov: f64 = p.steps().map(|r| r[a] * r[b]).sum::<f64>() / nf;
                let corr = cov / 0.01;
                assert!(corr.abs() < 0.01, "channels {a},{b} corr {corr}");
            }
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let p = sample_brownian(20, 1e-3, 2, 1).unwrap();
        let text = p.to_text();
        assert!(text.starts_with("dt,n_steps,n_channels\n0.001,20,2\n"));
        assert_eq!(NoisePath::from_text(&text).unwrap(), p);
    }

    #[test]
    fn text_errors() {
        assert!(NoisePath::from_text("").is_err());
        assert!(NoisePath::from_text("a,b,c\n1,1,1\n0\n").is_err());
        assert!(NoisePath::from_text("dt,n_steps,n_channels\n0.1,2,1\n0.5\n").is_err());
        assert!(NoisePath::from_text("dt,n_steps,n_channels\n0.1,1,2\n0.5\n").is_err());
        assert!(NoisePath::from_text("dt,n_steps,n_channels\n0.1,1,1\nx\n").is_err());
    }

    #[test]
    fn totals_and_coarsening() {
        let p = NoisePath::new(0.5, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.total(1, 3), vec![5.0]);
        let c = p.coarsen(2).unwrap();
        assert_eq!(c.dt(), 1.0);
        assert_eq!(c.step(1), &[7.0]);
        assert!(p.coarsen(3).is_err());
        assert!(NoisePath::new(0.0, 1, vec![1.0]).is_err());
        assert!(NoisePath::new(0.1, 2, vec![1.0]).is_err());
    }
}
