use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Location, PathComponent};
use crate::array::{direction, steering_vector_towards, ArrayGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub subcarriers: usize,
    /// Hz.
    pub spacing: f64,
}

impl OfdmParams {
    /// `e^{-j2π·k·Δf·τ}` for subcarrier `k`.
    pub fn phase(&self, k: usize, delay: f64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * PI * k as f64 * self.spacing * delay)
    }
}

/// Frequency-selective MIMO channel of one UE: `K` matrices of shape
/// `(UE elements × BS elements)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub ue_location: Location,
    pub snapshot_id: u64,
    pub matrices: Vec<DMatrix<Complex64>>,
}

impl ChannelRealization {
    pub fn subcarriers(&self) -> usize {
        self.matrices.len()
    }

    pub fn ue_elements(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    pub fn bs_elements(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.ncols())
    }

    pub fn energy(&self) -> f64 {
        self.matrices.iter().map(|m| m.norm_squared()).sum()
    }
}

/// `H[k] = Σ_p g_p·e^{-j2πkΔfτ_p}·a_UE(aoa_p)·a_BS(aod_p)ᴴ`.
pub fn paths_to_channel(
    paths: &[PathComponent],
    bs: &ArrayGeometry,
    ue: &ArrayGeometry,
    ofdm: OfdmParams,
    ue_location: Location,
    snapshot_id: u64,
) -> ChannelRealization {
    let (nu, nb) = (ue.element_count(), bs.element_count());
    let responses: Vec<(DMatrix<Complex64>, &PathComponent)> = paths
        .iter()
        .map(|p| {
            let a_ue = steering_vector_towards(ue, &direction(p.aoa.0, p.aoa.1));
            let a_bs = steering_vector_towards(bs, &direction(p.aod.0, p.aod.1));
            let outer = DMatrix::from_fn(nu, nb, |r, c| a_ue[r] * a_bs[c].conj());
            (outer, p)
        })
        .collect();
    let matrices = (0..ofdm.subcarriers)
        .map(|k| {
            let mut h = DMatrix::<Complex64>::zeros(nu, nb);
            for (outer, p) in &responses {
                let coeff = p.complex_gain * ofdm.phase(k, p.delay);
                h.zip_apply(outer, |acc, o| *acc += coeff * o);
            }
            h
        })
        .collect();
    ChannelRealization {
        ue_location,
        snapshot_id,
        matrices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::SPEED_OF_LIGHT;
    use crate::scene::PathKind;
    use nalgebra::Vector3;

    fn arrays() -> (ArrayGeometry, ArrayGeometry) {
        let lambda = SPEED_OF_LIGHT / 28e9;
        let bs = ArrayGeometry::half_wavelength(2, 2, lambda).unwrap();
        let ue = ArrayGeometry::half_wavelength(2, 2, lambda).unwrap();
        (bs, ue)
    }

    fn path(gain: Complex64, aod: (f64, f64), aoa: (f64, f64), delay: f64) -> PathComponent {
        PathComponent {
            kind: PathKind::Wall,
            complex_gain: gain,
            aod,
            aoa,
            delay,
        }
    }

    const OFDM: OfdmParams = OfdmParams {
        subcarriers: 4,
        spacing: 120e3,
    };

    #[test]
    fn empty_paths_give_zero_channel() {
        let (bs, ue) = arrays();
        let h = paths_to_channel(&[], &bs, &ue, OFDM, Location::new(0.0, 0.0), 0);
        assert_eq!(h.subcarriers(), 4);
        assert!(h.matrices.iter().all(|m| m.iter().all(|z| *z == Complex64::new(0.0, 0.0))));
    }

    #[test]
    fn zero_delay_path_is_flat() {
        let (bs, ue) = arrays();
        let p = path(Complex64::new(0.3, -0.1), (0.4, -0.2), (1.1, 0.3), 0.0);
        let h = paths_to_channel(&[p], &bs, &ue, OFDM, Location::new(0.0, 0.0), 0);
        for k in 1..4 {
            assert_eq!(h.matrices[k], h.matrices[0]);
        }
    }

    /// Element-by-element evaluation with explicit array manifolds.
    #[test]
    fn two_path_channel_matches_direct_sum() {
        let (bs, ue) = arrays();
        let lambda = bs.wavelength();
        let paths = [
            path(Complex64::new(1e-3, 2e-4), (0.2, -0.1), (-0.7, 0.4), 150e-9),
            path(Complex64::new(-3e-4, 5e-4), (-0.5, 0.3), (0.9, -0.2), 410e-9),
        ];
        let h = paths_to_channel(&paths, &bs, &ue, OFDM, Location::new(1.0, 2.0), 7);
        let manifold = |az: f64, el: f64, idx: usize| {
            // identity orientation: local (x, y, z) = world; element (r, c) at r·d·z + c·d·y
            let u = Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            let (r, c) = ((idx / 2) as f64, (idx % 2) as f64);
            let d = lambda / 2.0;
            Complex64::from_polar(0.5, 2.0 * PI / lambda * (r * d * u.z + c * d * u.y))
        };
        for k in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    let mut expect = Complex64::new(0.0, 0.0);
                    for p in &paths {
                        let f = 2.0 * PI * k as f64 * 120e3 * p.delay;
                        expect += p.complex_gain
                            * Complex64::new(f.cos(), -f.sin())
                            * manifold(p.aoa.0, p.aoa.1, m)
                            * manifold(p.aod.0, p.aod.1, n).conj();
                    }
                    assert!((h.matrices[k][(m, n)] - expect).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rank_is_bounded_by_path_count() {
        let lambda = SPEED_OF_LIGHT / 28e9;
        let bs = ArrayGeometry::half_wavelength(4, 4, lambda).unwrap();
        let ue = ArrayGeometry::half_wavelength(4, 4, lambda).unwrap();
        let paths = [
            path(Complex64::new(1.0, 0.0), (0.2, -0.1), (-0.7, 0.4), 10e-9),
            path(Complex64::new(0.0, 1.0), (-0.5, 0.3), (0.9, -0.2), 40e-9),
        ];
        let h = paths_to_channel(&paths, &bs, &ue, OFDM, Location::new(0.0, 0.0), 0);
        for m in &h.matrices {
            let sv = m.clone().singular_values();
            let rank = sv.iter().filter(|&&s| s > 1e-9 * sv[0]).count();
            assert!(rank <= 2);
        }
    }
}
