//! Binary checkpoints of trained auto-encoder parameters.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field        | size                                   |
//! |--------------|----------------------------------------|
//! | magic        | 8 bytes, `SOAECKPT`                    |
//! | version      | `u32`                                  |
//! | d, n, c      | 3 x `u64`                              |
//! | config echo  | `u32` length + UTF-8 `key=value` lines |
//! | W            | `d * n` x `f64`, row-major             |
//! | W_out        | `n * c` x `f64`, row-major             |
//! | theta        | `c` x `f64`                            |
//! | checksum     | `u32` CRC-32 of all preceding bytes    |
//!
//! Floats are stored as raw bit patterns, so a save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{CheckpointError, Result};
use crate::soae::{SoaeConfig, SoaeParams, Transfer};

pub const MAGIC: &[u8; 8] = b"SOAECKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: SoaeParams,
    pub config: SoaeConfig,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let (d, n, c) = (p.input_dim(), p.hidden_dim(), p.classes());
        let echo = encode_config(&self.config);
        let mut out = Vec::with_capacity(64 + echo.len() + 8 * (d * n + n * c + c));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for dim in [d, n, c] {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        out.extend_from_slice(&(echo.len() as u32).to_le_bytes());
        out.extend_from_slice(echo.as_bytes());
        for v in p.w.iter().chain(p.w_out.iter()).chain(p.theta.iter()) {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < MAGIC.len() + 4 + 4 {
            return Err(CheckpointError::Truncated);
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let mut r = Reader { bytes: body, pos: MAGIC.len() };
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(CheckpointError::Checksum { stored, computed });
        }
        let d = r.u64()? as usize;
        let n = r.u64()? as usize;
        let c = r.u64()? as usize;
        let echo_len = r.u32()? as usize;
        let echo = std::str::from_utf8(r.take(echo_len)?)
            .map_err(|e| CheckpointError::Malformed(format!("config echo: {e}")))?;
        let config = decode_config(echo)?;
        let w = Array2::from_shape_vec((d, n), r.floats(d * n)?).expect("shape checked");
        let w_out = Array2::from_shape_vec((n, c), r.floats(n * c)?).expect("shape checked");
        let theta = Array1::from(r.floats(c)?);
        if r.pos != body.len() {
            return Err(CheckpointError::Malformed(format!(
                "{} trailing bytes",
                body.len() - r.pos
            )));
        }
        Ok(Self {
            params: SoaeParams { w, w_out, theta },
            config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(CheckpointError::from)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path).map_err(CheckpointError::from)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(len).ok_or(CheckpointError::Truncated)?;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated);
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn floats(&mut self, count: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(count.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|b| f64::from_bits(u64::from_le_bytes(b.try_into().expect("eight bytes"))))
            .collect())
    }
}

fn encode_config(cfg: &SoaeConfig) -> String {
    let transfer = match cfg.transfer {
        Transfer::Sigma(s) => format!("sigma:{s}"),
        Transfer::L0(k) => format!("l0:{k}"),
        Transfer::Tanh => "tanh".to_string(),
    };
    format!(
        "n_hidden={}\nsigma_w={}\ntransfer={}\nstep_size={}\nanneal_factor={}\n\
         samples_per_epoch={}\nalpha_tau={}\nstop_rel_tol={}\nstop_window={}\n\
         max_epochs={}\nseed={}\n",
        cfg.n_hidden,
        cfg.sigma_w,
        transfer,
        cfg.step_size,
        cfg.anneal_factor,
        cfg.samples_per_epoch,
        cfg.alpha_tau,
        cfg.stop_rel_tol,
        cfg.stop_window,
        cfg.max_epochs,
        cfg.seed
    )
}

fn decode_config(text: &str) -> Result<SoaeConfig, CheckpointError> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CheckpointError> {
        v.parse()
            .map_err(|_| CheckpointError::Malformed(format!("bad value {v:?} for {key}")))
    }
    let mut cfg = SoaeConfig::default();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CheckpointError::Malformed(format!("config line {line:?}")))?;
        match key {
            "n_hidden" => cfg.n_hidden = num(key, value)?,
            "sigma_w" => cfg.sigma_w = num(key, value)?,
            "transfer" => {
                cfg.transfer = match value.split_once(':') {
                    Some(("sigma", s)) => Transfer::Sigma(num(key, s)?),
                    Some(("l0", k)) => Transfer::L0(num(key, k)?),
                    None if value == "tanh" => Transfer::Tanh,
                    _ => return Err(CheckpointError::Malformed(format!("transfer {value:?}"))),
                }
            }
            "step_size" => cfg.step_size = num(key, value)?,
            "anneal_factor" => cfg.anneal_factor = num(key, value)?,
            "samples_per_epoch" => cfg.samples_per_epoch = num(key, value)?,
            "alpha_tau" => cfg.alpha_tau = num(key, value)?,
            "stop_rel_tol" => cfg.stop_rel_tol = num(key, value)?,
            "stop_window" => cfg.stop_window = num(key, value)?,
            "max_epochs" => cfg.max_epochs = num(key, value)?,
            "seed" => cfg.seed = num(key, value)?,
            _ => return Err(CheckpointError::Malformed(format!("unknown key {key:?}"))),
        }
    }
    Ok(cfg)
}
