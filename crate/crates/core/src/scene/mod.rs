//! Randomised street layouts and the geometric multipath channel that stands
//! in for a full ray tracer.
//!
//! World frame: the BS mast sits above the origin, the road runs along `+y`
//! and lanes stack along `+x`. Building facades are vertical planes `x = const`.

mod channel;
mod io;
mod paths;

pub use channel::{paths_to_channel, ChannelRealization, OfdmParams};
pub use io::{load_snapshots, save_snapshots, write_index_csv, SnapshotFile};
pub use paths::{trace_paths, Aabb, PathComponent, PathKind};

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{orientation_from_axes, ArrayGeometry, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// UE position in the ground plane, BS at the origin, road along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(&self, other: &Location) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Width, length, height in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub width: f64,
    pub length: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Admissible UE locations.
    pub region_of_interest: Rect,
    pub lane_count: usize,
    pub lane_width: f64,
    /// `x` of the near edge of the first lane.
    pub lane_origin_x: f64,
    /// Vehicles are placed along `y` in `[street_y_min, street_y_max]`.
    pub street_y_min: f64,
    pub street_y_max: f64,
    pub bs_position: [f64; 3],
    /// Facades as vertical planes `x = c`.
    pub wall_planes: Vec<f64>,
    pub min_gap: f64,
    pub max_gap: f64,
    pub bus_fraction: f64,
    pub car_dims: Dims,
    pub bus_dims: Dims,
    pub carrier_frequency: f64,
    pub subcarrier_count: usize,
    pub subcarrier_spacing: f64,
    /// Overrides the SNR-calibrated noise power when set (watts).
    pub noise_power: Option<f64>,
    /// Peak post-beamforming SNR of an unblocked UE at `reference_distance`.
    pub reference_snr_db: f64,
    pub reference_distance: f64,
    pub wall_reflection: f64,
    pub bus_reflection: f64,
    /// Bus boxes are inflated by this much for blockage tests.
    pub blockage_margin: f64,
    /// BS down-tilt in radians; defaults to `atan(bs_height / (roi_length / 2))`.
    pub bs_tilt: Option<f64>,
    pub bs_array: ArrayShape,
    pub ue_array: ArrayShape,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            region_of_interest: Rect {
                x_min: 2.0,
                x_max: 16.0,
                y_min: 5.0,
                y_max: 105.0,
            },
            lane_count: 4,
            lane_width: 3.5,
            lane_origin_x: 2.0,
            street_y_min: -30.0,
            street_y_max: 160.0,
            bs_position: [0.0, 0.0, 10.0],
            wall_planes: vec![-1.0, 19.0],
            min_gap: 8.0,
            max_gap: 36.0,
            bus_fraction: 0.2,
            car_dims: Dims {
                width: 1.75,
                length: 4.5,
                height: 1.5,
            },
            bus_dims: Dims {
                width: 2.5,
                length: 12.0,
                height: 3.8,
            },
            carrier_frequency: 28e9,
            subcarrier_count: 64,
            subcarrier_spacing: 120e3,
            noise_power: None,
            reference_snr_db: 25.0,
            reference_distance: 30.0,
            wall_reflection: 0.5,
            bus_reflection: 0.7,
            blockage_margin: 0.2,
            bs_tilt: None,
            bs_array: ArrayShape { rows: 8, cols: 8 },
            ue_array: ArrayShape { rows: 4, cols: 4 },
        }
    }
}

impl SceneConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn bs_position(&self) -> Vector3<f64> {
        Vector3::from(self.bs_position)
    }

    pub fn bs_tilt(&self) -> f64 {
        self.bs_tilt.unwrap_or_else(|| {
            let half = (self.region_of_interest.y_max - self.region_of_interest.y_min) / 2.0;
            (self.bs_position[2] / half).atan()
        })
    }

    /// Noise power giving `reference_snr_db` for a perfectly aligned
    /// free-space LOS link at `reference_distance`.
    pub fn noise_power(&self) -> f64 {
        self.noise_power.unwrap_or_else(|| {
            let amp = self.wavelength() / (4.0 * PI * self.reference_distance);
            amp * amp / 10f64.powf(self.reference_snr_db / 10.0)
        })
    }

    pub fn ofdm(&self) -> OfdmParams {
        OfdmParams {
            subcarriers: self.subcarrier_count,
            spacing: self.subcarrier_spacing,
        }
    }

    fn lane_center(&self, lane: usize) -> f64 {
        self.lane_origin_x + (lane as f64 + 0.5) * self.lane_width
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let roi = &self.region_of_interest;
        if !(roi.x_min < roi.x_max && roi.y_min < roi.y_max) {
            return bad("empty region of interest");
        }
        let street_x_max = self.lane_origin_x + self.lane_count as f64 * self.lane_width;
        if roi.x_min < self.lane_origin_x
            || roi.x_max > street_x_max
            || roi.y_min < self.street_y_min
            || roi.y_max > self.street_y_max
        {
            return bad("region of interest must lie within the street footprint");
        }
        if !(self.min_gap >= 0.0 && self.max_gap >= self.min_gap) {
            return bad("gap distribution needs 0 <= min_gap <= max_gap");
        }
        if !(0.0..=1.0).contains(&self.bus_fraction) {
            return bad("bus_fraction must be a probability");
        }
        if self.subcarrier_count == 0 || !(self.subcarrier_spacing > 0.0) || !(self.carrier_frequency > 0.0) {
            return bad("OFDM parameters must be positive");
        }
        if !(self.noise_power() > 0.0) {
            return bad("noise power must be positive");
        }
        if self.bs_array.rows == 0 || self.bs_array.cols == 0 || self.ue_array.rows == 0 || self.ue_array.cols == 0 {
            return bad("array shapes must be at least 1x1");
        }
        Ok(())
    }

    /// BS array: boresight along the street, tilted down, columns across the road.
    pub fn bs_geometry(&self) -> Result<ArrayGeometry> {
        let t = self.bs_tilt();
        let boresight = Vector3::new(0.0, t.cos(), -t.sin());
        let rot = orientation_from_axes(boresight, Vector3::z())?;
        let lambda = self.wavelength();
        ArrayGeometry::half_wavelength(self.bs_array.rows, self.bs_array.cols, lambda)?.with_pose(rot, self.bs_position())
    }

    /// Roof-mounted UE array: boresight up, rows along the road. Placed at `position`.
    pub fn ue_geometry(&self, position: Vector3<f64>) -> Result<ArrayGeometry> {
        let rot = orientation_from_axes(Vector3::z(), Vector3::y())?;
        let lambda = self.wavelength();
        ArrayGeometry::half_wavelength(self.ue_array.rows, self.ue_array.cols, lambda)?.with_pose(rot, position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VehicleKind {
    Car,
    Bus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub kind: VehicleKind,
    pub lane: usize,
    /// Ground-level center of the footprint.
    pub center: [f64; 2],
    pub dims: Dims,
    /// Driving direction, radians from `+x`.
    pub heading: f64,
}

impl Vehicle {
    pub fn bounding_box(&self, margin: f64) -> Aabb {
        let hw = self.dims.width / 2.0 + margin;
        let hl = self.dims.length / 2.0 + margin;
        Aabb {
            min: Vector3::new(self.center[0] - hw, self.center[1] - hl, 0.0),
            max: Vector3::new(self.center[0] + hw, self.center[1] + hl, self.dims.height + margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub snapshot_id: u64,
    pub rng_seed: u64,
    pub vehicles: Vec<Vehicle>,
    /// Indices into `vehicles` of the cars acting as UEs.
    pub ue_indices: Vec<usize>,
}

impl SceneSnapshot {
    pub fn ue_count(&self) -> usize {
        self.ue_indices.len()
    }

    pub fn ue_vehicle(&self, ue_index: usize) -> Option<&Vehicle> {
        self.ue_indices.get(ue_index).map(|&v| &self.vehicles[v])
    }

    pub fn ue_location(&self, ue_index: usize) -> Option<Location> {
        self.ue_vehicle(ue_index).map(|v| Location::new(v.center[0], v.center[1]))
    }

    /// Antenna phase center on the car roof.
    pub fn ue_antenna(&self, ue_index: usize) -> Option<Vector3<f64>> {
        self.ue_vehicle(ue_index)
            .map(|v| Vector3::new(v.center[0], v.center[1], v.dims.height))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`: `splitmix64(splitmix64(master) ^ index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// Lays out vehicles lane by lane with uniform gaps; cars whose centers fall
/// in the region of interest become UEs.
pub fn generate_snapshot(config: &SceneConfig, snapshot_id: u64, seed: u64) -> Result<SceneSnapshot> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vehicles = Vec::new();
    let street = config.street_y_max - config.street_y_min;
    let shortest = config.car_dims.length.min(config.bus_dims.length);
    if config.lane_count == 0 || street < shortest || config.lane_width < config.car_dims.width.min(config.bus_dims.width) {
        return Err(Error::SceneTooSmall(format!(
            "{} lanes of width {} over {street} m",
            config.lane_count, config.lane_width
        )));
    }
    for lane in 0..config.lane_count {
        let heading = if lane < config.lane_count.div_ceil(2) { PI / 2.0 } else { -PI / 2.0 };
        let x = config.lane_center(lane);
        let mut y = config.street_y_min + rng.gen_range(0.0..=config.max_gap);
        loop {
            let is_bus = rng.gen_bool(config.bus_fraction);
            let (kind, dims) = if is_bus {
                (VehicleKind::Bus, config.bus_dims)
            } else {
                (VehicleKind::Car, config.car_dims)
            };
            if y + dims.length > config.street_y_max {
                break;
            }
            vehicles.push(Vehicle {
                kind,
                lane,
                center: [x, y + dims.length / 2.0],
                dims,
                heading,
            });
            y += dims.length + rng.gen_range(config.min_gap..=config.max_gap);
        }
    }
    if vehicles.is_empty() {
        return Err(Error::SceneTooSmall("no vehicle fits on the street".into()));
    }
    let roi = &config.region_of_interest;
    let ue_indices = vehicles
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VehicleKind::Car && roi.contains(v.center[0], v.center[1]))
        .map(|(i, _)| i)
        .collect();
    Ok(SceneSnapshot {
        snapshot_id,
        rng_seed: seed,
        vehicles,
        ue_indices,
    })
}

/// Snapshots `0..count` with seeds derived from `master_seed`.
pub fn generate_snapshots(config: &SceneConfig, count: usize, master_seed: u64) -> Result<Vec<SceneSnapshot>> {
    (0..count as u64)
        .map(|i| generate_snapshot(config, i, derive_seed(master_seed, i)))
        .collect()
}
