//! `EVGM` checkpoint files.
//!
//! Layout (little-endian):
//!
//! ```text
//! b"EVGM" | u32 version | u32 header_len | header_len bytes of UTF-8 JSON
//!        | f32 × n parameters | f32 × n Adam m | f32 × n Adam v
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::network::{Network, NetworkSpec};
use super::tensor::Real;
use super::train::TrainConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"EVGM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Position of the shuffling RNG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// `u128` word position, as a decimal string.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().unwrap_or(0));
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    spec: NetworkSpec,
    train: TrainConfig,
    epoch: usize,
    adam_step: u64,
    rng: RngState,
    param_count: usize,
    best_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub train: TrainConfig,
    /// Completed epochs.
    pub epoch: usize,
    pub adam_step: u64,
    pub rng: RngState,
    /// Selection loss of the last completed epoch.
    pub best_loss: Option<f64>,
    pub params: Vec<f32>,
    pub adam_m: Vec<f32>,
    pub adam_v: Vec<f32>,
}

fn to_f32<R: Real>(v: &[R]) -> Vec<f32> {
    v.iter().map(|x| x.f64() as f32).collect()
}

impl Checkpoint {
    pub fn capture<R: Real>(
        net: &Network<R>,
        adam: &AdamState<R>,
        train: &TrainConfig,
        epoch: usize,
        rng: RngState,
        best_loss: Option<f64>,
    ) -> Self {
        Self {
            spec: net.spec().clone(),
            train: *train,
            epoch,
            adam_step: adam.step,
            rng,
            best_loss,
            params: to_f32(&net.params),
            adam_m: to_f32(&adam.m),
            adam_v: to_f32(&adam.v),
        }
    }

    pub fn network<R: Real>(&self) -> Result<Network<R>> {
        Network::from_params(
            self.spec.clone(),
            self.params.iter().map(|&v| R::of(f64::from(v))).collect(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let header = serde_json::to_vec(&Header {
            spec: self.spec.clone(),
            train: self.train,
            epoch: self.epoch,
            adam_step: self.adam_step,
            rng: self.rng.clone(),
            param_count: self.params.len(),
            best_loss: self.best_loss,
        })?;
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
        w.write_u32::<LittleEndian>(CHECKPOINT_VERSION).map_err(io)?;
        w.write_u32::<LittleEndian>(header.len() as u32).map_err(io)?;
        w.write_all(&header).map_err(io)?;
        for blob in [&self.params, &self.adam_m, &self.adam_v] {
            for &v in blob.iter() {
                w.write_f32::<LittleEndian>(v).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut data = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut data))
            .map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
        let bad = |msg: String| Error::Checkpoint(format!("{}: {msg}", path.display()));
        if data.len() < 12 || &data[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing EVGM magic".into()));
        }
        let mut cur = &data[4..];
        let version = cur.read_u32::<LittleEndian>().expect("length checked");
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let hlen = cur.read_u32::<LittleEndian>().expect("length checked") as usize;
        if cur.len() < hlen {
            return Err(bad("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&cur[..hlen])?;
        cur = &cur[hlen..];
        let n = header.param_count;
        if header.spec.param_count() != n {
            return Err(bad(format!(
                "spec needs {} parameters, header records {n}",
                header.spec.param_count()
            )));
        }
        if cur.len() != 3 * 4 * n {
            return Err(bad(format!("expected {} blob bytes, found {}", 12 * n, cur.len())));
        }
        let mut blobs = [vec![0.0f32; n], vec![0.0f32; n], vec![0.0f32; n]];
        for blob in &mut blobs {
            cur.read_f32_into::<LittleEndian>(blob).expect("length checked");
        }
        let [params, adam_m, adam_v] = blobs;
        Ok(Self {
            spec: header.spec,
            train: header.train,
            epoch: header.epoch,
            adam_step: header.adam_step,
            rng: header.rng,
            best_loss: header.best_loss,
            params,
            adam_m,
            adam_v,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn save_load_round_trip() {
        let spec = NetworkSpec {
            height: 8,
            width: 8,
            blocks: vec![2, 3],
            hidden: 4,
            ..NetworkSpec::default()
        };
        let net = Network::<f32>::init(spec, 1).unwrap();
        let mut adam = AdamState::new(net.param_count());
        adam.step = 7;
        adam.m[3] = 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        rng.next_u64();
        let ck = Checkpoint::capture(&net, &adam, &TrainConfig::default(), 3, RngState::capture(&rng), Some(0.5));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.evgm");
        ck.save(&p).unwrap();
        let back = Checkpoint::load(&p).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.network::<f32>().unwrap(), net);
        let mut restored = back.rng.restore();
        assert_eq!(restored.next_u64(), rng.next_u64());

        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(Checkpoint::load(&p), Err(Error::Checkpoint(_))));
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(Checkpoint::load(&p), Err(Error::Checkpoint(_))));
    }
}
