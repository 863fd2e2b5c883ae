//! Per-pair average rates, exhaustive beam sweeps and the throughput ratio.
//!
//! Beam pairs are flattened as `n(i, j) = i·|F| + j` (zero-based combiner `i`,
//! beamformer `j`). Argmax ties go to the lowest flattened index everywhere.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{direction, inner, steering_vector_towards, ArrayGeometry, Codebook};
use crate::error::{Error, Result};
use crate::scene::{ChannelRealization, Location, OfdmParams, PathComponent};

pub fn pair_index(combiner: usize, beamformer: usize, n_beamformers: usize) -> usize {
    combiner * n_beamformers + beamformer
}

/// Inverse of [`pair_index`]: `(combiner, beamformer)`.
pub fn pair_of(index: usize, n_beamformers: usize) -> (usize, usize) {
    (index / n_beamformers, index % n_beamformers)
}

/// Index of the largest value; the first one wins ties. `None` on empty input.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// One row of the location-based rate dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub location: Location,
    pub snapshot_id: u64,
    /// Rates in bits/s/Hz indexed by [`pair_index`].
    pub rates: Vec<f64>,
}

impl RateRow {
    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }
}

fn check_dims(channel: &ChannelRealization, w: &[Complex64], f: &[Complex64]) -> Result<()> {
    if w.len() != channel.ue_elements() {
        return Err(Error::Dimension {
            expected: channel.ue_elements(),
            got: w.len(),
            context: "combiner length",
        });
    }
    if f.len() != channel.bs_elements() {
        return Err(Error::Dimension {
            expected: channel.bs_elements(),
            got: f.len(),
            context: "beamformer length",
        });
    }
    Ok(())
}

fn check_noise(noise_power: f64) -> Result<()> {
    if noise_power > 0.0 && noise_power.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("noise power must be positive, got {noise_power}")))
    }
}

fn effective_gain(h: &DMatrix<Complex64>, w: &[Complex64], f: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, wr) in w.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (c, fc) in f.iter().enumerate() {
            row += h[(r, c)] * fc;
        }
        acc += wr.conj() * row;
    }
    acc
}

/// `(1/K)·Σ_k log2(1 + |wᴴH[k]f|²/σ²)` with unit-power symbols.
pub fn per_pair_rate(channel: &ChannelRealization, w: &[Complex64], f: &[Complex64], noise_power: f64) -> Result<f64> {
    check_dims(channel, w, f)?;
    check_noise(noise_power)?;
    let k = channel.subcarriers();
    if k == 0 {
        return Ok(0.0);
    }
    let total: f64 = channel
        .matrices
        .iter()
        .map(|h| (1.0 + effective_gain(h, w, f).norm_sqr() / noise_power).log2())
        .sum();
    Ok(total / k as f64)
}

/// Noisy estimator: draws `y[k] = wᴴH[k]f + wᴴv[k]` with `v ~ CN(0, σ²I)` and
/// uses `max(|y|² − σ², 0)` as the signal power estimate.
pub fn per_pair_rate_stochastic<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    w: &[Complex64],
    f: &[Complex64],
    noise_power: f64,
    rng: &mut R,
) -> Result<f64> {
    check_dims(channel, w, f)?;
    check_noise(noise_power)?;
    let k = channel.subcarriers();
    if k == 0 {
        return Ok(0.0);
    }
    let sd = (noise_power / 2.0).sqrt();
    let mut total = 0.0;
    for h in &channel.matrices {
        let mut noise = Complex64::new(0.0, 0.0);
        for wr in w {
            let v = Complex64::new(rng.sample::<f64, _>(StandardNormal) * sd, rng.sample::<f64, _>(StandardNormal) * sd);
            noise += wr.conj() * v;
        }
        let y = effective_gain(h, w, f) + noise;
        let signal = (y.norm_sqr() - noise_power).max(0.0);
        total += (1.0 + signal / noise_power).log2();
    }
    Ok(total / k as f64)
}

fn codebook_matrix(cb: &Codebook) -> DMatrix<Complex64> {
    DMatrix::from_fn(cb.dimension(), cb.len(), |r, c| cb.beam(c)[r])
}

/// Exhaustive sweep of `W × F` over a full channel realisation.
pub fn sweep_all(channel: &ChannelRealization, combiners: &Codebook, beamformers: &Codebook, noise_power: f64) -> Result<RateRow> {
    check_noise(noise_power)?;
    if combiners.dimension() != channel.ue_elements() || beamformers.dimension() != channel.bs_elements() {
        return Err(Error::Dimension {
            expected: channel.ue_elements() * channel.bs_elements(),
            got: combiners.dimension() * beamformers.dimension(),
            context: "codebook dimensions vs channel shape",
        });
    }
    let (nw, nf) = (combiners.len(), beamformers.len());
    let wm = codebook_matrix(combiners).adjoint();
    let fm = codebook_matrix(beamformers);
    let mut rates = vec![0.0; nw * nf];
    for h in &channel.matrices {
        let g = &wm * (h * &fm);
        for i in 0..nw {
            for j in 0..nf {
                rates[pair_index(i, j, nf)] += (1.0 + g[(i, j)].norm_sqr() / noise_power).log2();
            }
        }
    }
    let k = channel.subcarriers().max(1) as f64;
    rates.iter_mut().for_each(|r| *r /= k);
    Ok(RateRow {
        location: channel.ue_location,
        snapshot_id: channel.snapshot_id,
        rates,
    })
}

/// Same sweep computed in the beam domain straight from the path list:
/// `wᵢᴴH[k]fⱼ = Σ_p c_p[k]·(wᵢᴴa_UE,p)·(a_BS,pᴴfⱼ)`. Avoids materialising
/// `H[k]`; agrees with [`sweep_all`] on the channel built by
/// [`crate::scene::paths_to_channel`] up to rounding.
#[allow(clippy::too_many_arguments)]
pub fn sweep_paths(
    paths: &[PathComponent],
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    combiners: &Codebook,
    beamformers: &Codebook,
    ofdm: OfdmParams,
    noise_power: f64,
    location: Location,
    snapshot_id: u64,
) -> Result<RateRow> {
    check_noise(noise_power)?;
    if combiners.dimension() != ue.element_count() || beamformers.dimension() != bs.element_count() {
        return Err(Error::Dimension {
            expected: ue.element_count() * bs.element_count(),
            got: combiners.dimension() * beamformers.dimension(),
            context: "codebook dimensions vs array geometry",
        });
    }
    let (nw, nf) = (combiners.len(), beamformers.len());
    let projections: Vec<(Vec<Complex64>, Vec<Complex64>)> = paths
        .iter()
        .map(|p| {
            let a_ue = steering_vector_towards(ue, &direction(p.aoa.0, p.aoa.1));
            let a_bs = steering_vector_towards(bs, &direction(p.aod.0, p.aod.1));
            let u = combiners.beams().iter().map(|w| inner(w, &a_ue)).collect();
            let v = beamformers.beams().iter().map(|f| inner(&a_bs, f)).collect();
            (u, v)
        })
        .collect();
    let mut rates = vec![0.0; nw * nf];
    let mut g = vec![Complex64::new(0.0, 0.0); nw * nf];
    for k in 0..ofdm.subcarriers {
        g.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (p, (u, v)) in paths.iter().zip(&projections) {
            let coeff = p.complex_gain * ofdm.phase(k, p.delay);
            for (i, ui) in u.iter().enumerate() {
                let cu = coeff * ui;
                let row = &mut g[i * nf..(i + 1) * nf];
                for (gz, vj) in row.iter_mut().zip(v) {
                    *gz += cu * vj;
                }
            }
        }
        for (r, z) in rates.iter_mut().zip(&g) {
            *r += (1.0 + z.norm_sqr() / noise_power).log2();
        }
    }
    let k = ofdm.subcarriers.max(1) as f64;
    rates.iter_mut().for_each(|r| *r /= k);
    Ok(RateRow {
        location,
        snapshot_id,
        rates,
    })
}

/// Best rate inside `subset` over the best rate overall. An all-zero row
/// returns 1.0: every subset is then optimal.
pub fn throughput_ratio(rates: &[f64], subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("empty beam pair subset".into()));
    }
    let best = rates.iter().copied().fold(0.0, f64::max);
    let mut in_subset = 0.0f64;
    for &n in subset {
        let r = *rates
            .get(n)
            .ok_or_else(|| Error::InvalidArgument(format!("pair index {n} out of range {}", rates.len())))?;
        in_subset = in_subset.max(r);
    }
    if best <= 0.0 {
        return Ok(1.0);
    }
    Ok(in_subset / best)
}
