use std::path::Path;

use super::{ModelRole, Node, TrainConfig, Tree, TreeEnsembleModel};
use crate::codec::{read_file, write_atomic, Reader, Writer};
use crate::error::Result;

const MAGIC: &[u8; 4] = b"BTMD";
const VERSION: u32 = 1;

impl TreeEnsembleModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u8(self.role.code());
        w.f64(self.learning_rate);
        let c = &self.config;
        w.usize(c.tree_count);
        w.usize(c.max_depth);
        w.f64(c.learning_rate);
        w.usize(c.min_samples_leaf);
        w.usize(c.budget_parameters);
        w.f64s(&self.base);
        for ts in &self.trees {
            w.usize(ts.len());
            for t in ts {
                w.usize(t.nodes.len());
                for n in &t.nodes {
                    match *n {
                        Node::Leaf(v) => {
                            w.u8(0);
                            w.f64(v);
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            w.u8(1 + feature);
                            w.f64(threshold);
                            w.u32(left);
                            w.u32(right);
                        }
                    }
                }
            }
        }
        w.finish()
    }

    fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader::new(bytes, path, MAGIC, VERSION)?;
        let code = r.u8()?;
        let role = ModelRole::from_code(code).ok_or_else(|| r.error(format!("unknown role {code}")))?;
        let learning_rate = r.f64()?;
        let config = TrainConfig {
            tree_count: r.usize()?,
            max_depth: r.usize()?,
            learning_rate: r.f64()?,
            min_samples_leaf: r.usize()?,
            budget_parameters: r.usize()?,
        };
        let base = r.f64s()?;
        let mut trees = Vec::with_capacity(base.len());
        for _ in 0..base.len() {
            let count = r.usize()?;
            let mut ts = Vec::new();
            for _ in 0..count {
                let len = r.usize()?;
                if len == 0 || len > bytes.len() {
                    return Err(r.error(format!("implausible node count {len}")));
                }
                let mut nodes = Vec::with_capacity(len);
                for at in 0..len {
                    let tag = r.u8()?;
                    let value = r.f64()?;
                    nodes.push(match tag {
                        0 => Node::Leaf(value),
                        1 | 2 => {
                            let (left, right) = (r.u32()?, r.u32()?);
                            // preorder: children come after their parent
                            if left as usize <= at || right as usize <= at || left as usize >= len || right as usize >= len {
                                return Err(r.error("child index out of range"));
                            }
                            Node::Split {
                                feature: tag - 1,
                                threshold: value,
                                left,
                                right,
                            }
                        }
                        t => return Err(r.error(format!("unknown node tag {t}"))),
                    });
                }
                ts.push(Tree { nodes });
            }
            trees.push(ts);
        }
        r.finish()?;
        Ok(Self {
            role,
            learning_rate,
            base,
            trees,
            config,
        })
    }
}

pub fn save_model(path: &Path, model: &TreeEnsembleModel) -> Result<()> {
    write_atomic(path, &model.to_bytes())
}

pub fn load_model(path: &Path) -> Result<TreeEnsembleModel> {
    TreeEnsembleModel::from_bytes(&read_file(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::train;
    use crate::scene::Location;

    #[test]
    fn model_round_trip_and_truncation() {
        let locs: Vec<Location> = (0..40).map(|k| Location::new((k % 8) as f64, (k / 8) as f64)).collect();
        let targets: Vec<Vec<f64>> = locs.iter().map(|l| vec![l.x / 8.0, (l.y / 5.0).sin().abs()]).collect();
        let cfg = TrainConfig {
            tree_count: 5,
            max_depth: 3,
            learning_rate: 0.5,
            min_samples_leaf: 2,
            budget_parameters: 1000,
        };
        let m = train(&locs, &targets, &cfg, ModelRole::BsAtr).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&p, &m).unwrap();
        assert_eq!(load_model(&p).unwrap(), m);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        assert!(load_model(&p).is_err());
    }
}
