//! LOS plus first-order specular reflections (image method) off facades and
//! bus side panels, with binary blockage by inflated bus boxes.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SceneConfig, SceneSnapshot, VehicleKind};
use crate::array::{angles, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    LineOfSight,
    Wall,
    BusPanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub kind: PathKind,
    pub complex_gain: Complex64,
    /// Departure `(azimuth, elevation)` at the BS, world frame.
    pub aod: (f64, f64),
    /// Arrival `(azimuth, elevation)` at the UE, pointing back towards the source.
    pub aoa: (f64, f64),
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    /// Slab test for the closed segment `a → b`.
    pub fn intersects_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for axis in 0..3 {
            if d[axis].abs() < 1e-15 {
                if a[axis] < self.min[axis] || a[axis] > self.max[axis] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[axis];
            let mut ta = (self.min[axis] - a[axis]) * inv;
            let mut tb = (self.max[axis] - a[axis]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

struct Tracer<'a> {
    blockers: Vec<(usize, Aabb)>,
    lambda: f64,
    bs: Vector3<f64>,
    ue: Vector3<f64>,
    config: &'a SceneConfig,
}

impl Tracer<'_> {
    fn blocked(&self, a: &Vector3<f64>, b: &Vector3<f64>, skip: Option<usize>) -> bool {
        self.blockers
            .iter()
            .any(|(i, bb)| Some(*i) != skip && bb.intersects_segment(a, b))
    }

    fn component(&self, kind: PathKind, coeff: f64, first_hop: Vector3<f64>, last_hop: Vector3<f64>, dist: f64) -> PathComponent {
        let amp = coeff * self.lambda / (4.0 * PI * dist);
        PathComponent {
            kind,
            complex_gain: Complex64::from_polar(amp, -2.0 * PI * dist / self.lambda),
            aod: angles(&(first_hop - self.bs)),
            aoa: angles(&(last_hop - self.ue)),
            delay: dist / SPEED_OF_LIGHT,
        }
    }

    /// Specular bounce off the plane `x = plane_x`, valid where `accept` holds
    /// for the reflection point. Both endpoints must be strictly on one side.
    fn reflect_x(&self, plane_x: f64, skip: Option<usize>, accept: impl Fn(&Vector3<f64>) -> bool) -> Option<(Vector3<f64>, f64)> {
        let sb = self.bs.x - plane_x;
        let su = self.ue.x - plane_x;
        if sb * su <= 0.0 {
            return None;
        }
        let image = Vector3::new(2.0 * plane_x - self.bs.x, self.bs.y, self.bs.z);
        let t = (plane_x - image.x) / (self.ue.x - image.x);
        let point = image + (self.ue - image) * t;
        if !accept(&point) {
            return None;
        }
        if self.blocked(&self.bs, &point, skip) || self.blocked(&point, &self.ue, skip) {
            return None;
        }
        Some((point, (self.ue - image).norm()))
    }
}

/// Enumerates the propagation paths between the BS and UE `ue_index` of the
/// snapshot. An empty list means the UE is fully blocked.
pub fn trace_paths(config: &SceneConfig, snapshot: &SceneSnapshot, ue_index: usize) -> Result<Vec<PathComponent>> {
    let ue = snapshot.ue_antenna(ue_index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "ue_index {ue_index} out of range for snapshot {} with {} UEs",
            snapshot.snapshot_id,
            snapshot.ue_count()
        ))
    })?;
    let tracer = Tracer {
        blockers: snapshot
            .vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VehicleKind::Bus)
            .map(|(i, v)| (i, v.bounding_box(config.blockage_margin)))
            .collect(),
        lambda: config.wavelength(),
        bs: config.bs_position(),
        ue,
        config,
    };
    let mut out = Vec::new();

    if !tracer.blocked(&tracer.bs, &ue, None) {
        let d = (ue - tracer.bs).norm();
        out.push(tracer.component(PathKind::LineOfSight, 1.0, ue, tracer.bs, d));
    }

    for &wall in &tracer.config.wall_planes {
        if let Some((p, d)) = tracer.reflect_x(wall, None, |p| p.z >= 0.0) {
            out.push(tracer.component(PathKind::Wall, config.wall_reflection, p, p, d));
        }
    }

    for (i, v) in snapshot.vehicles.iter().enumerate() {
        if v.kind != VehicleKind::Bus {
            continue;
        }
        let (y0, y1) = (v.center[1] - v.dims.length / 2.0, v.center[1] + v.dims.length / 2.0);
        for side in [-1.0, 1.0] {
            let plane = v.center[0] + side * v.dims.width / 2.0;
            // endpoints must face the panel's outer side
            if (tracer.bs.x - plane) * side <= 0.0 || (ue.x - plane) * side <= 0.0 {
                continue;
            }
            let accept = |p: &Vector3<f64>| p.y >= y0 && p.y <= y1 && p.z >= 0.0 && p.z <= v.dims.height;
            if let Some((p, d)) = tracer.reflect_x(plane, Some(i), accept) {
                out.push(tracer.component(PathKind::BusPanel, config.bus_reflection, p, p, d));
            }
        }
    }
    Ok(out)
}
