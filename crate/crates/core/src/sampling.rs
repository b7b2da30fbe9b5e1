//! Exact sampling of the projection determinantal point process defined by a
//! Fermi projector.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::fermion::FermiProjector;
use crate::grid::Mask;

/// Allowed drift of the residual mass from `N - t`.
pub const BREAKDOWN_TOLERANCE: f64 = 1e-6;

/// Independent configurations of `N` distinct node indices each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    /// Each configuration sorted ascending.
    pub configurations: Vec<Vec<usize>>,
    pub seed: u64,
    pub count: usize,
}

/// Draws `count` configurations; configuration `c` uses the ChaCha stream
/// `c` of `seed`, so the batch does not depend on scheduling.
pub fn sample(proj: &FermiProjector, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let configurations = (0..count)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            sample_one(proj.factor(), &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        configurations,
        seed,
        count,
    })
}

/// Sequential conditioning: `d_i = ||φ_i||^2 - Σ_s (φ_i · e_s)^2` is the
/// residual kernel diagonal, `e_s` an orthonormal basis of the directions
/// already drawn.
fn sample_one<R: Rng>(u: &DMatrix<f64>, rng: &mut R) -> Result<Vec<usize>> {
    let (nodes, rank) = u.shape();
    let mut residual: Vec<f64> = u.row_iter().map(|r| r.norm_squared()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rank);
    let mut picked = Vec::with_capacity(rank);
    for step in 0..rank {
        let mass: f64 = residual.iter().sum();
        let expected = rank - step;
        if (mass - expected as f64).abs() > BREAKDOWN_TOLERANCE {
            return Err(Error::NumericalBreakdown {
                step,
                mass,
                expected,
            });
        }
        let mut target = rng.random::<f64>() * mass;
        let mut choice = nodes - 1;
        for (i, &d) in residual.iter().enumerate() {
            if target < d {
                choice = i;
                break;
            }
            target -= d;
        }
        while residual[choice] <= 0.0 {
            choice -= 1;
        }
        let mut direction: Vec<f64> = u.row(choice).iter().copied().collect();
        for _ in 0..2 {
            for e in &basis {
                let dot: f64 = e.iter().zip(&direction).map(|(a, b)| a * b).sum();
                for (d, a) in direction.iter_mut().zip(e) {
                    *d -= dot * a;
                }
            }
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::NumericalBreakdown {
                step,
                mass,
                expected,
            });
        }
        direction.iter_mut().for_each(|v| *v /= norm);
        for (i, d) in residual.iter_mut().enumerate() {
            let dot: f64 = u.row(i).iter().zip(&direction).map(|(a, b)| a * b).sum();
            *d = (*d - dot * dot).max(0.0);
        }
        residual[choice] = 0.0;
        basis.push(direction);
        picked.push(choice);
    }
    picked.sort_unstable();
    Ok(picked)
}

impl SampleBatch {
    /// `X(Ω)` for every configuration.
    pub fn counts(&self, mask: &Mask) -> Vec<usize> {
        self.configurations
            .iter()
            .map(|c| c.iter().filter(|&&k| mask.contains(k)).count())
            .collect()
    }

    /// Occupation count of every node over the batch.
    pub fn node_frequencies(&self, nodes: usize) -> Vec<usize> {
        let mut freq = vec![0; nodes];
        for c in &self.configurations {
            for &k in c {
                freq[k] += 1;
            }
        }
        freq
    }

    /// One row per configuration, sorted node indices as columns.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let width = self.configurations.first().map_or(0, Vec::len);
        let header: Vec<String> = (1..=width).map(|i| format!("x{i}")).collect();
        writeln!(out, "{}", header.join(","))?;
        for c in &self.configurations {
            let row: Vec<String> = c.iter().map(usize::to_string).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Sample means and covariances of `(X(Ω_1), …, X(Ω_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStatistics {
    pub means: Vec<f64>,
    pub mean_std_errors: Vec<f64>,
    /// Unbiased sample covariance.
    pub covariance: DMatrix<f64>,
    pub covariance_std_errors: DMatrix<f64>,
}

pub fn empirical_joint(batch: &SampleBatch, masks: &[Mask]) -> Result<JointStatistics> {
    let n = batch.configurations.len();
    if n < 2 {
        return Err(Error::invalid("empirical statistics need at least two configurations"));
    }
    let counts: Vec<Vec<f64>> = masks
        .iter()
        .map(|m| batch.counts(m).into_iter().map(|c| c as f64).collect())
        .collect();
    let k = masks.len();
    let nf = n as f64;
    let means: Vec<f64> = counts.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let mut covariance = DMatrix::zeros(k, k);
    let mut covariance_std_errors = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let products: Vec<f64> = (0..n)
                .map(|s| (counts[a][s] - means[a]) * (counts[b][s] - means[b]))
                .collect();
            let mean_product = products.iter().sum::<f64>() / nf;
            let spread = products.iter().map(|p| (p - mean_product).powi(2)).sum::<f64>() / (nf - 1.0);
            covariance[(a, b)] = mean_product * nf / (nf - 1.0);
            covariance_std_errors[(a, b)] = (spread / nf).sqrt();
        }
    }
    let mean_std_errors = (0..k).map(|a| (covariance[(a, a)] / nf).sqrt()).collect();
    Ok(JointStatistics {
        means,
        mean_std_errors,
        covariance,
        covariance_std_errors,
    })
}

/// Pearson χ² statistic with its degrees of freedom and upper-tail p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn upper_tail(statistic: f64, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(dist.sf(statistic))
}

/// Merges consecutive bins until every expected count is at least 5.
fn pooled(observed: &[f64], expected: &[f64]) -> Vec<(f64, f64)> {
    let mut bins = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob;
        e += ex;
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    bins
}

/// Goodness of fit of node frequencies against `count · K(x_i, x_i) h^n`.
///
/// Node occupations are negatively correlated under a projection process, so
/// the statistic is stochastically smaller than its multinomial reference and
/// the test is conservative.
pub fn one_point_chi_square(batch: &SampleBatch, kernel_diagonal: &[f64]) -> Result<ChiSquareTest> {
    let freq: Vec<f64> = batch
        .node_frequencies(kernel_diagonal.len())
        .into_iter()
        .map(|f| f as f64)
        .collect();
    let expected: Vec<f64> = kernel_diagonal.iter().map(|p| p * batch.count as f64).collect();
    let bins = pooled(&freq, &expected);
    if bins.len() < 2 {
        return Err(Error::invalid("too few expected counts for a χ² test"));
    }
    let statistic = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof)?,
    })
}

/// Homogeneity of two samples of integer counts (2 × K contingency table).
pub fn two_sample_chi_square(first: &[usize], second: &[usize]) -> Result<ChiSquareTest> {
    let top = first.iter().chain(second).copied().max().unwrap_or(0);
    let hist = |xs: &[usize]| {
        let mut h = vec![0.0; top + 1];
        for &x in xs {
            h[x] += 1.0;
        }
        h
    };
    let (a, b) = (hist(first), hist(second));
    let (na, nb) = (first.len() as f64, second.len() as f64);
    let total = na + nb;
    // pool until the smaller sample expects at least 5 per group
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut ga, mut gb) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(&b) {
        ga += x;
        gb += y;
        if (ga + gb) * na.min(nb) / total >= 5.0 {
            groups.push((ga, gb));
            ga = 0.0;
            gb = 0.0;
        }
    }
    if ga + gb > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += ga;
                last.1 += gb;
            }
            None => groups.push((ga, gb)),
        }
    }
    if groups.len() < 2 {
        return Ok(ChiSquareTest {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }
    let mut statistic = 0.0;
    for &(x, y) in &groups {
        let col = x + y;
        let ea = col * na / total;
        let eb = col * nb / total;
        statistic += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = groups.len() - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof)?,
    })
}
