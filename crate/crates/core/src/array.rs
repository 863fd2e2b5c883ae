//! Uniform planar arrays: geometry, steering vectors and critically sampled
//! 2-D DFT codebooks.
//!
//! Array-local frame: `x` is boresight, `y` runs along the columns and `z`
//! along the rows. Element `(r, c)` sits at `r·d·ẑ + c·d·ŷ` and its response
//! to a plane wave with local direction `u` has phase `2π/λ·(r·d·u_z + c·d·u_y)`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unit direction for a world azimuth (from +x towards +y) and elevation
/// (above the horizontal plane).
pub fn direction(azimuth: f64, elevation: f64) -> Vector3<f64> {
    let (se, ce) = elevation.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vector3::new(ce * ca, ce * sa, se)
}

/// Inverse of [`direction`]; returns `(azimuth, elevation)` of a non-zero vector.
pub fn angles(v: &Vector3<f64>) -> (f64, f64) {
    let n = v.norm();
    let elevation = (v.z / n).clamp(-1.0, 1.0).asin();
    let azimuth = v.y.atan2(v.x);
    (azimuth, elevation)
}

/// Rotation taking the array-local frame to the world frame, built from the
/// world boresight and the world direction of increasing row index.
///
/// `row_axis` is orthogonalised against `boresight`.
pub fn orientation_from_axes(boresight: Vector3<f64>, row_axis: Vector3<f64>) -> Result<Rotation3<f64>> {
    let b = boresight
        .try_normalize(1e-12)
        .ok_or_else(|| Error::InvalidArgument("zero boresight".into()))?;
    let r = (row_axis - b * b.dot(&row_axis))
        .try_normalize(1e-12)
        .ok_or_else(|| Error::InvalidArgument("row axis parallel to boresight".into()))?;
    let c = r.cross(&b);
    let m = Matrix3::from_columns(&[b, c, r]);
    Ok(Rotation3::from_matrix_unchecked(m))
}

fn check_rotation(m: &Matrix3<f64>) -> Result<()> {
    let gram = m.transpose() * m;
    let off = (gram - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if off > 1e-9 || (det - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "orientation is not a proper rotation (orthogonality error {off:.3e}, det {det})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    rows: usize,
    cols: usize,
    element_spacing: f64,
    wavelength: f64,
    orientation: Rotation3<f64>,
    reference_position: Vector3<f64>,
}

impl ArrayGeometry {
    pub fn new(
        rows: usize,
        cols: usize,
        element_spacing: f64,
        wavelength: f64,
        orientation: Rotation3<f64>,
        reference_position: Vector3<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!("array must be at least 1x1, got {rows}x{cols}")));
        }
        if !(element_spacing > 0.0 && wavelength > 0.0) || !element_spacing.is_finite() || !wavelength.is_finite() {
            return Err(Error::InvalidArgument("spacing and wavelength must be positive".into()));
        }
        check_rotation(orientation.matrix())?;
        Ok(Self {
            rows,
            cols,
            element_spacing,
            wavelength,
            orientation,
            reference_position,
        })
    }

    /// Half-wavelength array with identity orientation at the origin.
    pub fn half_wavelength(rows: usize, cols: usize, wavelength: f64) -> Result<Self> {
        Self::new(rows, cols, wavelength / 2.0, wavelength, Rotation3::identity(), Vector3::zeros())
    }

    pub fn with_pose(mut self, orientation: Rotation3<f64>, position: Vector3<f64>) -> Result<Self> {
        check_rotation(orientation.matrix())?;
        self.orientation = orientation;
        self.reference_position = position;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn orientation(&self) -> &Rotation3<f64> {
        &self.orientation
    }

    pub fn position(&self) -> Vector3<f64> {
        self.reference_position
    }

    /// Direction cosines `(u_row, u_col)` of a world direction in the array frame.
    pub fn direction_cosines(&self, world_dir: &Vector3<f64>) -> (f64, f64) {
        let local = self.orientation.inverse_transform_vector(&world_dir.normalize());
        (local.z, local.y)
    }
}

/// Array response towards world `(azimuth, elevation)`, normalised to unit norm.
pub fn steering_vector(geometry: &ArrayGeometry, azimuth: f64, elevation: f64) -> Vec<Complex64> {
    steering_vector_towards(geometry, &direction(azimuth, elevation))
}

/// Array response towards a world direction vector.
pub fn steering_vector_towards(geometry: &ArrayGeometry, world_dir: &Vector3<f64>) -> Vec<Complex64> {
    let (u_row, u_col) = geometry.direction_cosines(world_dir);
    let k = 2.0 * PI / geometry.wavelength * geometry.element_spacing;
    let scale = 1.0 / (geometry.element_count() as f64).sqrt();
    let mut out = Vec::with_capacity(geometry.element_count());
    for r in 0..geometry.rows {
        for c in 0..geometry.cols {
            let phase = k * (r as f64 * u_row + c as f64 * u_col);
            out.push(Complex64::from_polar(scale, phase));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodebookKind {
    /// BS beamformers (`F`).
    Beamformer,
    /// UE combiners (`W`).
    Combiner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    kind: CodebookKind,
    rows: usize,
    cols: usize,
    beams: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beam(&self, index: usize) -> &[Complex64] {
        &self.beams[index]
    }

    pub fn beams(&self) -> &[Vec<Complex64>] {
        &self.beams
    }

    pub fn dimension(&self) -> usize {
        self.rows * self.cols
    }

    /// `(row DFT index, col DFT index)` of a beam.
    pub fn grid_index(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }
}

fn dft_column(n: usize, m: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|t| Complex64::from_polar(scale, 2.0 * PI * (m * t) as f64 / n as f64))
        .collect()
}

/// Kronecker product of the row and column DFT bases, ordered row-major over
/// `(row DFT index, col DFT index)`.
pub fn dft_codebook(geometry: &ArrayGeometry, kind: CodebookKind) -> Codebook {
    let (rows, cols) = (geometry.rows, geometry.cols);
    let mut beams = Vec::with_capacity(rows * cols);
    for p in 0..rows {
        let a = dft_column(rows, p);
        for q in 0..cols {
            let b = dft_column(cols, q);
            let mut beam = Vec::with_capacity(rows * cols);
            for ar in &a {
                for bc in &b {
                    beam.push(ar * bc);
                }
            }
            beams.push(beam);
        }
    }
    Codebook {
        kind,
        rows,
        cols,
        beams,
    }
}

/// Inner product `aᴴb`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const LAMBDA: f64 = SPEED_OF_LIGHT / 28e9;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn boresight_response_is_flat() {
        let g = ArrayGeometry::half_wavelength(2, 2, LAMBDA).unwrap();
        let a = steering_vector(&g, 0.0, 0.0);
        for z in &a {
            assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn endfire_two_element_phase_is_pi() {
        let g = ArrayGeometry::half_wavelength(1, 2, LAMBDA).unwrap();
        // azimuth 90° puts the direction along the column axis
        let a = steering_vector(&g, PI / 2.0, 0.0);
        let s = 1.0 / 2f64.sqrt();
        let expected = Complex64::from_polar(s, -PI);
        assert_abs_diff_eq!(a[0].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].re, expected.re, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].im, expected.im, epsilon = 1e-12);
    }

    #[test]
    fn codebook_sizes() {
        let bs = ArrayGeometry::half_wavelength(8, 8, LAMBDA).unwrap();
        let ue = ArrayGeometry::half_wavelength(4, 4, LAMBDA).unwrap();
        let f = dft_codebook(&bs, CodebookKind::Beamformer);
        let w = dft_codebook(&ue, CodebookKind::Combiner);
        assert_eq!(f.len(), 64);
        assert_eq!(w.len(), 16);
        assert_eq!(f.len() * w.len(), 1024);
    }

    #[test]
    fn codebook_gram_is_identity() {
        for (r, c) in [(8, 8), (4, 4), (2, 4), (3, 5), (1, 1)] {
            let g = ArrayGeometry::half_wavelength(r, c, LAMBDA).unwrap();
            let cb = dft_codebook(&g, CodebookKind::Beamformer);
            for i in 0..cb.len() {
                assert_abs_diff_eq!(norm(cb.beam(i)), 1.0, epsilon = 1e-9);
                for j in 0..cb.len() {
                    let ip = inner(cb.beam(i), cb.beam(j));
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - Complex64::new(target, 0.0)).norm() < 1e-9, "({i},{j}) {ip}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ArrayGeometry::half_wavelength(0, 4, LAMBDA).is_err());
        let skew = Rotation3::from_matrix_unchecked(Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0));
        assert!(ArrayGeometry::new(2, 2, LAMBDA / 2.0, LAMBDA, skew, Vector3::zeros()).is_err());
        let mirror = Rotation3::from_matrix_unchecked(Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0));
        assert!(ArrayGeometry::new(2, 2, LAMBDA / 2.0, LAMBDA, mirror, Vector3::zeros()).is_err());
    }

    #[test]
    fn orientation_axes_map_to_local_frame() {
        let rot = orientation_from_axes(Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 1.0, 0.0)).unwrap();
        let g = ArrayGeometry::half_wavelength(4, 4, LAMBDA)
            .unwrap()
            .with_pose(rot, Vector3::zeros())
            .unwrap();
        let (ur, uc) = g.direction_cosines(&Vector3::new(0.0, 1.0, 0.0));
        assert_abs_diff_eq!(ur, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(uc, 0.0, epsilon = 1e-12);
        let (ur, uc) = g.direction_cosines(&Vector3::new(0.0, 0.0, 1.0));
        assert_abs_diff_eq!(ur, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(uc, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn angles_round_trip() {
        for &(az, el) in &[(0.3, -0.2), (-2.5, 0.7), (1.0, 0.0)] {
            let (a, e) = angles(&direction(az, el));
            assert_abs_diff_eq!(a, az, epsilon = 1e-12);
            assert_abs_diff_eq!(e, el, epsilon = 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn steering_is_unit_norm(az in -PI..PI, el in -1.5f64..1.5) {
            let g = ArrayGeometry::half_wavelength(8, 8, LAMBDA).unwrap();
            let a = steering_vector(&g, az, el);
            proptest::prop_assert!((norm(&a) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn steering_is_continuous(az in -PI..PI, el in -1.5f64..1.5) {
            let g = ArrayGeometry::half_wavelength(8, 8, LAMBDA).unwrap();
            let a = steering_vector(&g, az, el);
            let b = steering_vector(&g, az + 1e-8, el + 1e-8);
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            proptest::prop_assert!(d < 1e-6);
        }
    }
}
