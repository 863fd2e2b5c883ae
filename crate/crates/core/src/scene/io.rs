use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{trace_paths, Dims, PathComponent, PathKind, SceneConfig, SceneSnapshot, Vehicle, VehicleKind};
use crate::codec::{read_file, write_atomic, Reader, Writer};
use crate::error::Result;

const MAGIC: &[u8; 4] = b"BTSC";
const VERSION: u32 = 1;

/// Snapshots together with the traced paths of every UE; the paths fully
/// determine each UE's channel for a given pair of array geometries.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub snapshots: Vec<SceneSnapshot>,
    /// `paths[s][u]` for snapshot `s`, UE `u`.
    pub paths: Vec<Vec<Vec<PathComponent>>>,
}

impl SnapshotFile {
    pub fn trace(config: &SceneConfig, snapshots: Vec<SceneSnapshot>) -> Result<Self> {
        let paths = snapshots
            .iter()
            .map(|s| (0..s.ue_count()).map(|u| trace_paths(config, s, u)).collect())
            .collect::<Result<_>>()?;
        Ok(Self { snapshots, paths })
    }
}

fn kind_code(k: PathKind) -> u8 {
    match k {
        PathKind::LineOfSight => 0,
        PathKind::Wall => 1,
        PathKind::BusPanel => 2,
    }
}

pub fn save_snapshots(path: &Path, file: &SnapshotFile) -> Result<()> {
    let mut w = Writer::new(MAGIC, VERSION);
    w.usize(file.snapshots.len());
    for (snap, paths) in file.snapshots.iter().zip(&file.paths) {
        w.u64(snap.snapshot_id);
        w.u64(snap.rng_seed);
        w.usize(snap.vehicles.len());
        for v in &snap.vehicles {
            w.u8(matches!(v.kind, VehicleKind::Bus) as u8);
            w.usize(v.lane);
            w.f64(v.center[0]);
            w.f64(v.center[1]);
            w.f64(v.dims.width);
            w.f64(v.dims.length);
            w.f64(v.dims.height);
            w.f64(v.heading);
        }
        w.usizes(&snap.ue_indices);
        w.usize(paths.len());
        for ue_paths in paths {
            w.usize(ue_paths.len());
            for p in ue_paths {
                w.u8(kind_code(p.kind));
                w.f64(p.complex_gain.re);
                w.f64(p.complex_gain.im);
                w.f64(p.aod.0);
                w.f64(p.aod.1);
                w.f64(p.aoa.0);
                w.f64(p.aoa.1);
                w.f64(p.delay);
            }
        }
    }
    write_atomic(path, &w.finish())
}

pub fn load_snapshots(path: &Path) -> Result<SnapshotFile> {
    let bytes = read_file(path)?;
    let mut r = Reader::new(&bytes, path, MAGIC, VERSION)?;
    let n = r.usize()?;
    let mut snapshots = Vec::new();
    let mut all_paths = Vec::new();
    for _ in 0..n {
        let snapshot_id = r.u64()?;
        let rng_seed = r.u64()?;
        let nv = r.usize()?;
        let mut vehicles = Vec::new();
        for _ in 0..nv {
            let kind = match r.u8()? {
                0 => VehicleKind::Car,
                1 => VehicleKind::Bus,
                k => return Err(r.error(format!("unknown vehicle kind {k}"))),
            };
            let lane = r.usize()?;
            let center = [r.f64()?, r.f64()?];
            let dims = Dims {
                width: r.f64()?,
                length: r.f64()?,
                height: r.f64()?,
            };
            let heading = r.f64()?;
            vehicles.push(Vehicle {
                kind,
                lane,
                center,
                dims,
                heading,
            });
        }
        let ue_indices = r.usizes()?;
        if ue_indices.iter().any(|&i| i >= vehicles.len()) {
            return Err(r.error("UE index out of range"));
        }
        let nu = r.usize()?;
        if nu != ue_indices.len() {
            return Err(r.error("path table does not match UE count"));
        }
        let mut snap_paths = Vec::with_capacity(nu);
        for _ in 0..nu {
            let np = r.usize()?;
            let mut ps = Vec::new();
            for _ in 0..np {
                let kind = match r.u8()? {
                    0 => PathKind::LineOfSight,
                    1 => PathKind::Wall,
                    2 => PathKind::BusPanel,
                    k => return Err(r.error(format!("unknown path kind {k}"))),
                };
                ps.push(PathComponent {
                    kind,
                    complex_gain: Complex64::new(r.f64()?, r.f64()?),
                    aod: (r.f64()?, r.f64()?),
                    aoa: (r.f64()?, r.f64()?),
                    delay: r.f64()?,
                });
            }
            snap_paths.push(ps);
        }
        snapshots.push(SceneSnapshot {
            snapshot_id,
            rng_seed,
            vehicles,
            ue_indices,
        });
        all_paths.push(snap_paths);
    }
    r.finish()?;
    Ok(SnapshotFile {
        snapshots,
        paths: all_paths,
    })
}

/// `snapshot_id,ue_index,x,y,path_count`, one line per UE.
pub fn write_index_csv(path: &Path, file: &SnapshotFile) -> Result<()> {
    let mut out = String::from("snapshot_id,ue_index,x,y,path_count\n");
    for (snap, paths) in file.snapshots.iter().zip(&file.paths) {
        for (u, ps) in paths.iter().enumerate() {
            let loc = snap.ue_location(u).expect("UE index within snapshot");
            let _ = writeln!(out, "{},{},{:.6},{:.6},{}", snap.snapshot_id, u, loc.x, loc.y, ps.len());
        }
    }
    write_atomic(path, out.as_bytes())
}
