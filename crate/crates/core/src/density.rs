//! Histogram densities on S^7 over the angular chart, and entropy estimates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::SpherePoint;
use crate::quadrature::GaussLegendre;
use crate::sphere::{angles_lenient, SphericalCoords, SPHERE_VOLUME};

pub type BinIndex = [u16; 7];

/// Bins per angle. Axis `k < 6` spans `[0, π]`, axis 6 spans `[0, 2π)`.
/// An axis with a single bin is marginalized out.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    bins: [usize; 7],
    /// exact 1-D measure of every bin along every axis
    axis_volumes: Vec<Vec<f64>>,
}

impl GridSpec {
    pub fn new(bins: [usize; 7]) -> Result<Self> {
        if bins.iter().any(|&n| n == 0 || n > u16::MAX as usize) {
            return Err(Error::InvalidParameter(format!(
                "invalid bin counts {bins:?}"
            )));
        }
        let rule = GaussLegendre::new(32);
        let axis_volumes = (0..7)
            .map(|k| {
                let w = SphericalCoords::upper_bound(k) / bins[k] as f64;
                (0..bins[k])
                    .map(|b| {
                        let (lo, hi) = (b as f64 * w, (b + 1) as f64 * w);
                        if k == 6 {
                            hi - lo
                        } else {
                            // split so every piece stays well resolved
                            let power = 6 - k as i32;
                            let pieces = 4;
                            (0..pieces)
                                .map(|q| {
                                    let a = lo + (hi - lo) * q as f64 / pieces as f64;
                                    let c = lo + (hi - lo) * (q + 1) as f64 / pieces as f64;
                                    rule.integrate(a, c, |x| x.sin().powi(power))
                                })
                                .sum()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(GridSpec { bins, axis_volumes })
    }

    pub fn uniform(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        let mut b = [n_polar; 7];
        b[6] = n_azimuth;
        GridSpec::new(b)
    }

    /// Joint histogram over the listed axes (0-based), marginalizing the rest.
    pub fn marginal(axes: &[usize], bins: usize) -> Result<Self> {
        let mut b = [1; 7];
        for &a in axes {
            if a >= 7 {
                return Err(Error::InvalidParameter(format!("axis {a} out of range")));
            }
            b[a] = bins;
        }
        GridSpec::new(b)
    }

    pub fn bins(&self) -> &[usize; 7] {
        &self.bins
    }

    pub fn n_bins(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn width(&self, axis: usize) -> f64 {
        SphericalCoords::upper_bound(axis) / self.bins[axis] as f64
    }

    pub fn bin_of_angles(&self, phi: &[f64; 7]) -> BinIndex {
        std::array::from_fn(|k| {
            let i = (phi[k] / self.width(k)).floor();
            (i.max(0.0) as usize).min(self.bins[k] - 1) as u16
        })
    }

    pub fn bin_of(&self, z: &SpherePoint) -> BinIndex {
        self.bin_of_angles(&angles_lenient(z.as_vec()))
    }

    pub fn bin_volume(&self, idx: &BinIndex) -> f64 {
        (0..7)
            .map(|k| self.axis_volumes[k][idx[k] as usize])
            .product()
    }

    pub fn centre(&self, idx: &BinIndex) -> [f64; 7] {
        std::array::from_fn(|k| (idx[k] as f64 + 0.5) * self.width(k))
    }

    pub fn bounds(&self, idx: &BinIndex) -> ([f64; 7], [f64; 7]) {
        (
            std::array::from_fn(|k| idx[k] as f64 * self.width(k)),
            std::array::from_fn(|k| (idx[k] as f64 + 1.0) * self.width(k)),
        )
    }

    /// Position of a bin in row-major order (axis 0 slowest).
    pub fn linear_index(&self, idx: &BinIndex) -> usize {
        idx.iter()
            .zip(&self.bins)
            .fold(0, |acc, (&i, &n)| acc * n + i as usize)
    }

    pub fn bin_from_linear(&self, mut lin: usize) -> BinIndex {
        let mut idx = [0u16; 7];
        for k in (0..7).rev() {
            idx[k] = (lin % self.bins[k]) as u16;
            lin /= self.bins[k];
        }
        idx
    }
}

/// Sparse histogram density with respect to the Riemannian volume.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    grid: GridSpec,
    counts: BTreeMap<BinIndex, u64>,
    n_samples: u64,
    time: f64,
}

impl DensityEstimate {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn count(&self, idx: &BinIndex) -> u64 {
        self.counts.get(idx).copied().unwrap_or(0)
    }

    pub fn density(&self, idx: &BinIndex) -> f64 {
        self.count(idx) as f64 / (self.n_samples as f64 * self.grid.bin_volume(idx))
    }

    /// `(bin, count, volume, density)` over occupied bins in index order.
    pub fn iter(&self) -> impl Iterator<Item = (BinIndex, u64, f64, f64)> + '_ {
        let n = self.n_samples as f64;
        self.counts.iter().map(move |(idx, &c)| {
            let v = self.grid.bin_volume(idx);
            (*idx, c, v, c as f64 / (n * v))
        })
    }

    /// `sum p * vol` over bins.
    pub fn total_mass(&self) -> f64 {
        self.iter().map(|(_, _, v, p)| p * v).sum()
    }

    /// Dense copy over all bins, zero where unoccupied.
    pub fn to_grid(&self) -> GridDensity {
        let mut values = vec![0.0; self.grid.n_bins()];
        for (idx, _, _, p) in self.iter() {
            values[self.grid.linear_index(&idx)] = p;
        }
        GridDensity {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Text export with header `b1,...,b7,volume,density`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("b1,b2,b3,b4,b5,b6,b7,volume,density\n");
        for (idx, _, v, p) in self.iter() {
            for i in idx {
                let _ = write!(out, "{i},");
            }
            let _ = writeln!(out, "{v},{p}");
        }
        out
    }
}

fn accumulate(grid: &GridSpec, samples: &[SpherePoint]) -> BTreeMap<BinIndex, u64> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(grid.bin_of(s)).or_insert(0) += 1;
    }
    m
}

/// Histogram of `samples` on `grid`. Chunks are counted in parallel and
/// merged; integer counts make the result independent of the schedule.
pub fn estimate_density(samples: &[SpherePoint], grid: &GridSpec) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let counts = samples
        .par_chunks(4096)
        .map(|c| accumulate(grid, c))
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(DensityEstimate {
        grid: grid.clone(),
        counts,
        n_samples: samples.len() as u64,
        time: 0.0,
    })
}

/// Plug-in entropy with bias and error estimates, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// `-sum p log p vol`
    pub entropy: f64,
    pub time: f64,
    /// standard error of the plug-in estimate
    pub standard_error: f64,
    /// Miller-Madow bias term `(m - 1) / (2n)`, m = occupied bins
    pub bias_correction: f64,
    pub occupied_bins: usize,
    pub n_samples: u64,
}

impl EntropyReport {
    pub fn corrected(&self) -> f64 {
        self.entropy + self.bias_correction
    }
}

pub fn entropy(d: &DensityEstimate) -> EntropyReport {
    let n = d.n_samples as f64;
    let mut s = 0.0;
    let mut s2 = 0.0;
    for (_, c, _, p) in d.iter() {
        let w = c as f64 / n;
        let l = p.ln();
        s -= w * l;
        s2 += w * l * l;
    }
    let var = (s2 - s * s).max(0.0);
    EntropyReport {
        entropy: s,
        time: d.time,
        standard_error: (var / n).sqrt(),
        bias_correction: (d.occupied_bins() as f64 - 1.0) / (2.0 * n),
        occupied_bins: d.occupied_bins(),
        n_samples: d.n_samples,
    }
}

/// `log Vol(S^7)`, the largest possible entropy.
pub fn max_entropy() -> f64 {
    SPHERE_VOLUME.ln()
}

/// Density values on every bin of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridDensity {
    /// Tabulate `p` at bin centres.
    pub fn from_fn<F: Fn(&[f64; 7]) -> f64>(grid: &GridSpec, p: F) -> Self {
        let values = (0..grid.n_bins())
            .map(|lin| p(&grid.centre(&grid.bin_from_linear(lin))))
            .collect();
        GridDensity {
            grid: grid.clone(),
            values,
        }
    }

    pub fn value(&self, idx: &BinIndex) -> f64 {
        self.values[self.grid.linear_index(idx)]
    }

    /// `sum p * vol`.
    pub fn mass(&self) -> f64 {
        (0..self.values.len())
            .map(|lin| self.values[lin] * self.grid.bin_volume(&self.grid.bin_from_linear(lin)))
            .sum()
    }
}
