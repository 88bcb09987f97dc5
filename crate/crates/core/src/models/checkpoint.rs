//! Binary checkpoint format.
//!
//! Layout: the 5-byte magic `CNTS1`, a little-endian `u32` header length, a UTF-8
//! `key=value` header (kind, window, dims, activations, config digest), then every
//! parameter as a little-endian `f64` in layer order, weights row-major then bias.

use std::path::Path;

use super::ModelKind;
use crate::error::{CheckpointError, CntsError, Result};
use crate::numerics::{Activation, DenseNet};

pub const MAGIC: &[u8; 5] = b"CNTS1";
const FAMILY: &[u8; 4] = b"CNTS";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub window: usize,
    pub net: DenseNet,
    /// Digest of the training configuration that produced the parameters.
    pub config_digest: String,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.net.dims();
        let header = format!(
            "kind={}\nwindow={}\ndims={}\nactivations={}\nconfig_digest={}\n",
            self.kind.tag(),
            self.window,
            join(&dims),
            join(&self.net.activations()),
            self.config_digest,
        );
        let flat = self.net.flatten();
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + header.len() + flat.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        for v in flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() || &bytes[..FAMILY.len()] != FAMILY {
            return Err(CheckpointError::BadMagic);
        }
        if &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::VersionMismatch {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(&bytes[..MAGIC.len()]).into_owned(),
            });
        }
        let rest = &bytes[MAGIC.len()..];
        if rest.len() < 4 {
            return Err(CheckpointError::Header("missing header length".into()));
        }
        let header_len = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes")) as usize;
        let rest = &rest[4..];
        if rest.len() < header_len {
            return Err(CheckpointError::Header(format!(
                "header claims {header_len} bytes, {} available",
                rest.len()
            )));
        }
        let header = std::str::from_utf8(&rest[..header_len])
            .map_err(|_| CheckpointError::Header("header is not UTF-8".into()))?;
        let payload = &rest[header_len..];

        let mut kind = None;
        let mut window = None;
        let mut dims = None;
        let mut activations = None;
        let mut config_digest = String::new();
        for line in header.lines().filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CheckpointError::Header(format!("bad header line {line:?}")))?;
            match key {
                "kind" => {
                    kind = Some(ModelKind::from_tag(value).ok_or_else(|| {
                        CheckpointError::Header(format!("unknown model kind {value:?}"))
                    })?)
                }
                "window" => window = Some(parse_usize(value)?),
                "dims" => {
                    dims = Some(
                        value
                            .split(',')
                            .map(parse_usize)
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                "activations" => {
                    activations = Some(
                        value
                            .split(',')
                            .map(|a| a.parse::<Activation>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|e| CheckpointError::Header(e.to_string()))?,
                    )
                }
                "config_digest" => config_digest = value.to_string(),
                _ => {}
            }
        }
        let missing = |k: &str| CheckpointError::Header(format!("header lacks `{k}`"));
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let window = window.ok_or_else(|| missing("window"))?;
        let dims: Vec<usize> = dims.ok_or_else(|| missing("dims"))?;
        let activations: Vec<Activation> = activations.ok_or_else(|| missing("activations"))?;

        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(CheckpointError::Layout(format!(
                "{} dims with {} activations",
                dims.len(),
                activations.len()
            )));
        }
        if dims[0] != window || dims[dims.len() - 1] != window {
            return Err(CheckpointError::Layout(format!(
                "window {window} does not match dims {dims:?}"
            )));
        }
        let count: usize = dims.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
        if payload.len() != count * 8 {
            return Err(CheckpointError::PayloadLength {
                expected: count * 8,
                found: payload.len(),
            });
        }
        let flat: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let net = DenseNet::from_flat(&dims, &activations, &flat)
            .map_err(|e| CheckpointError::Layout(e.to_string()))?;
        Ok(Checkpoint {
            kind,
            window,
            net,
            config_digest,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| CntsError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| CntsError::io(path, e))?;
        Ok(Self::from_bytes(&bytes)?)
    }

    /// Loads and checks the model kind.
    pub fn load_kind(path: impl AsRef<Path>, expected: ModelKind) -> Result<Self> {
        let ckpt = Self::load(path)?;
        if ckpt.kind != expected {
            return Err(CheckpointError::KindMismatch {
                expected: expected.tag().into(),
                found: ckpt.kind.tag().into(),
            }
            .into());
        }
        Ok(ckpt)
    }
}

fn parse_usize(s: &str) -> Result<usize, CheckpointError> {
    s.trim()
        .parse()
        .map_err(|_| CheckpointError::Header(format!("{s:?} is not an unsigned integer")))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}
