//! MGC1 checkpoint format.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic        4   "MGC1"
//! version      u16 1
//! family       u8
//! shift        4 x u8  coin_random_pct, cheese_mode, ambiguity_phase, keychest_ratio
//! arch         8 x u32 channels, height, width, inventory, conv1, conv2, hidden, actions
//! timesteps    u64
//! updates      u64
//! tensors      u16 count; per tensor: name (u16 len + UTF-8), rank u8, dims u32 x rank,
//!              data f32 x prod(dims)
//! adam         lr, beta1, beta2, eps as f64; t u64; first moments then second
//!              moments, f32 data in tensor-table order
//! rng          u8 count; per stream: seed u64, stream u64, counter u64
//!              (action sampling, level resets, minibatch shuffle)
//! reward norm  gamma f64, count f64, mean f64, m2 f64, u32 env count, returns f64 x count
//! ```

use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::numkit::{AdamConfig, AdamState, Arch, ParamSet, RngStream, Tensor};
use crate::worlds::{AmbiguityPhase, CheeseMode, Family, KeyChestRatio, ShiftConfig};
use crate::{Error, Result};

use super::stats::{RewardNormalizer, RunningStat};

pub const MAGIC: &[u8; 4] = b"MGC1";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub family: Family,
    pub shift: ShiftConfig,
    pub params: ParamSet<f32>,
    pub adam: AdamState<f32>,
    pub action_rng: RngStream,
    pub reset_rng: RngStream,
    pub shuffle_rng: RngStream,
    pub reward_norm: RewardNormalizer,
    pub timesteps: u64,
    pub updates: u64,
}

fn write_shift(w: &mut Writer, s: &ShiftConfig) {
    w.u8(s.coin_random_pct);
    w.u8(s.cheese_mode as u8);
    w.u8(s.ambiguity_phase as u8);
    w.u8(s.keychest_ratio as u8);
}

fn read_shift(r: &mut Reader, family: Family) -> Result<ShiftConfig> {
    let at = r.pos();
    let s = ShiftConfig {
        family,
        coin_random_pct: r.u8("coin_random_pct")?,
        cheese_mode: CheeseMode::from_u8(r.u8("cheese_mode")?).ok_or_else(|| r.fail_at(at + 1, "bad cheese_mode"))?,
        ambiguity_phase: AmbiguityPhase::from_u8(r.u8("ambiguity_phase")?)
            .ok_or_else(|| r.fail_at(at + 2, "bad ambiguity_phase"))?,
        keychest_ratio: KeyChestRatio::from_u8(r.u8("keychest_ratio")?)
            .ok_or_else(|| r.fail_at(at + 3, "bad keychest_ratio"))?,
    };
    s.validate().map_err(|e| r.fail_at(at, e.to_string()))?;
    Ok(s)
}

impl Checkpoint {
    pub fn arch(&self) -> &Arch {
        self.params.arch()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MAGIC);
        w.u16(VERSION);
        w.u8(self.family.id());
        write_shift(&mut w, &self.shift);
        let a = self.params.arch();
        for v in [a.channels, a.height, a.width, a.inventory, a.conv1, a.conv2, a.hidden, a.actions] {
            w.u32(v as u32);
        }
        w.u64(self.timesteps);
        w.u64(self.updates);
        w.u16(self.params.len() as u16);
        for (name, t) in self.params.iter() {
            w.str(name);
            w.u8(t.shape().len() as u8);
            for &d in t.shape() {
                w.u32(d as u32);
            }
            t.data().iter().for_each(|&v| w.f32(v));
        }
        let c = self.adam.config;
        for v in [c.lr, c.beta1, c.beta2, c.eps] {
            w.f64(v);
        }
        w.u64(self.adam.t);
        for set in [&self.adam.m, &self.adam.v] {
            for t in set.tensors() {
                t.data().iter().for_each(|&v| w.f32(v));
            }
        }
        let rngs = [&self.action_rng, &self.reset_rng, &self.shuffle_rng];
        w.u8(rngs.len() as u8);
        for r in rngs {
            w.u64(r.seed);
            w.u64(r.stream);
            w.u64(r.counter);
        }
        let n = &self.reward_norm;
        for v in [n.gamma, n.stat.count, n.stat.mean, n.stat.m2] {
            w.f64(v);
        }
        w.u32(n.returns.len() as u32);
        n.returns.iter().for_each(|&v| w.f64(v));
        w.buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4, "magic")? != MAGIC {
            return Err(r.fail_at(0, "bad magic, expected MGC1"));
        }
        let at = r.pos();
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(r.fail_at(at, format!("unsupported version {version}")));
        }
        let at = r.pos();
        let family = Family::from_id(r.u8("family")?).ok_or_else(|| r.fail_at(at, "unknown family id"))?;
        let shift = read_shift(&mut r, family)?;
        let at = r.pos();
        let mut dims = [0usize; 8];
        for d in dims.iter_mut() {
            *d = r.u32("arch")? as usize;
        }
        let arch = Arch {
            channels: dims[0],
            height: dims[1],
            width: dims[2],
            inventory: dims[3],
            conv1: dims[4],
            conv2: dims[5],
            hidden: dims[6],
            actions: dims[7],
        };
        arch.validate().map_err(|e| r.fail_at(at, e.to_string()))?;
        let timesteps = r.u64("timesteps")?;
        let updates = r.u64("updates")?;
        let count = r.u16("tensor count")? as usize;
        let table_at = r.pos();
        let mut named = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.str("tensor name")?;
            let rank = r.u8("tensor rank")? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32("tensor dim")? as usize);
            }
            let len: usize = shape.iter().product();
            let at = r.pos();
            let raw = r.take(len.checked_mul(4).ok_or_else(|| r.fail("tensor too large"))?, "tensor data")?;
            let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
            let t = Tensor::from_vec(&shape, data).map_err(|e| r.fail_at(at, e.to_string()))?;
            named.push((name, t));
        }
        let params = ParamSet::from_named(arch, named).map_err(|e| r.fail_at(table_at, e.to_string()))?;
        let config = AdamConfig {
            lr: r.f64("adam lr")?,
            beta1: r.f64("adam beta1")?,
            beta2: r.f64("adam beta2")?,
            eps: r.f64("adam eps")?,
        };
        let mut adam = AdamState::new(config, &params);
        adam.t = r.u64("adam t")?;
        for set in [&mut adam.m, &mut adam.v] {
            for t in set.tensors_mut() {
                for v in t.data_mut() {
                    *v = r.f32("adam moment")?;
                }
            }
        }
        let at = r.pos();
        if r.u8("rng count")? != 3 {
            return Err(r.fail_at(at, "expected 3 rng streams"));
        }
        let mut rngs = Vec::with_capacity(3);
        for _ in 0..3 {
            rngs.push(RngStream {
                seed: r.u64("rng seed")?,
                stream: r.u64("rng stream")?,
                counter: r.u64("rng counter")?,
            });
        }
        let gamma = r.f64("reward gamma")?;
        let stat = RunningStat {
            count: r.f64("reward count")?,
            mean: r.f64("reward mean")?,
            m2: r.f64("reward m2")?,
        };
        let n = r.u32("reward env count")? as usize;
        let mut returns = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            returns.push(r.f64("reward return")?);
        }
        r.expect_end()?;
        let shuffle_rng = rngs.pop().unwrap();
        let reset_rng = rngs.pop().unwrap();
        let action_rng = rngs.pop().unwrap();
        Ok(Self {
            family,
            shift,
            params,
            adam,
            action_rng,
            reset_rng,
            shuffle_rng,
            reward_norm: RewardNormalizer { stat, returns, gamma },
            timesteps,
            updates,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::write_atomic(path, &self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    /// Checkpoint id: family, training shift, step count and a content hash.
    pub fn id(&self) -> String {
        let bytes = self.encode();
        let h = bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        format!("{}-{}steps-{:016x}", self.family, self.timesteps, h)
    }

    pub fn check_family(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(Error::FamilyMismatch {
                expected: self.family.name().into(),
                got: family.name().into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::rollout::arch_for;

    fn sample() -> Checkpoint {
        let family = Family::Maze2;
        let mut rng = RngStream::new(3, 0);
        let params = ParamSet::init(arch_for(family), &mut rng);
        let mut adam = AdamState::new(AdamConfig::with_lr(5e-4), &params);
        adam.t = 7;
        adam.m.tensors_mut()[0].data_mut()[3] = 0.25;
        let mut reward_norm = RewardNormalizer::new(2, 0.999);
        reward_norm.stat.push(1.5);
        reward_norm.returns[1] = 0.75;
        Checkpoint {
            family,
            shift: ShiftConfig::train(family),
            params,
            adam,
            action_rng: rng,
            reset_rng: RngStream::new(3, 1),
            shuffle_rng: RngStream::new(3, 3),
            reward_norm,
            timesteps: 1024,
            updates: 2,
        }
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let c = sample();
        let bytes = c.encode();
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.encode(), bytes);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = sample().encode();
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(Checkpoint::decode(&bad), Err(Error::Format { offset: 4, .. })));
        assert!(matches!(Checkpoint::decode(&bytes[..100]), Err(Error::Format { .. })));
        assert!(matches!(Checkpoint::decode(b"MGT1"), Err(Error::Format { offset: 0, .. })));
    }
}
