//! Binary checkpoints.
//!
//! All integers and floats are little-endian.
//!
//! | offset | type      | content                                        |
//! |-------:|-----------|------------------------------------------------|
//! | 0      | `[u8; 8]` | magic `LERAYCHK`                               |
//! | 8      | `u32`     | format version (1)                             |
//! | 12     | `u32`     | dim                                            |
//! | 16     | `u32`     | n                                              |
//! | 20     | `u32`     | dealias cutoff (largest retained wave index)   |
//! | 24     | `f64`     | period length L                                |
//! | 32     | `u32`     | model code: 0 nse, 1 leray-alpha, 2 leray-deconv, 3 mhd-deconv |
//! | 36     | `u32`     | deconvolution order N                          |
//! | 40     | `f64`     | nu                                             |
//! | 48     | `f64`     | nu2 (NaN when absent)                          |
//! | 56     | `f64`     | alpha                                          |
//! | 64     | `f64`     | theta                                          |
//! | 72     | `f64`     | t                                              |
//! | 80     | `u64`     | step count                                     |
//! | 88     | `u32`     | number of fields (1 = u, 2 = u and b)          |
//! | 92     | `u32`     | CRC-32 of bytes 0..92                          |
//! | 96     | payload   | coefficients                                   |
//! | end-4  | `u32`     | CRC-32 of the payload                          |
//!
//! The payload stores `u` then `b`; within a field, component 0 first, and
//! within a component every slot of the full `n^d` grid in row-major order
//! (last axis fastest, axis index `i` in `0..n` for wave index `i` if
//! `i <= n/2` else `i - n`), each as `re: f64, im: f64`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dynamics::{ModelConfig, ModelKind, SimState};
use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::WaveGrid;
use crate::output::write_atomic;

pub const MAGIC: &[u8; 8] = b"LERAYCHK";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 96;

/// Model parameters recorded alongside the state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    pub nu: f64,
    pub nu2: Option<f64>,
    pub alpha: f64,
    pub theta: f64,
    pub n_deconv: u32,
}

impl From<&ModelConfig> for ModelDescriptor {
    fn from(c: &ModelConfig) -> Self {
        ModelDescriptor {
            kind: c.kind,
            nu: c.nu,
            nu2: c.nu2,
            alpha: c.filter.alpha,
            theta: c.filter.theta,
            n_deconv: c.filter.n_deconv,
        }
    }
}

impl ModelDescriptor {
    /// Bitwise comparison against a configuration (forcing is not recorded).
    pub fn matches(&self, c: &ModelConfig) -> bool {
        let other = ModelDescriptor::from(c);
        let bits = |x: Option<f64>| x.map(f64::to_bits);
        self.kind == other.kind
            && self.nu.to_bits() == other.nu.to_bits()
            && bits(self.nu2) == bits(other.nu2)
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.theta.to_bits() == other.theta.to_bits()
            && self.n_deconv == other.n_deconv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ModelDescriptor,
    pub step: u64,
    pub state: SimState,
}

impl Checkpoint {
    pub fn new(state: SimState, cfg: &ModelConfig, step: u64) -> Self {
        Checkpoint {
            model: cfg.into(),
            step,
            state,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let grid = self.state.grid();
        let nfields = self.state.fields().count();
        let mut out = Vec::with_capacity(HEADER_LEN + nfields * grid.dim() * grid.len() * 16 + 4);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u32(&mut out, grid.dim() as u32);
        put_u32(&mut out, grid.n() as u32);
        put_u32(&mut out, grid.dealias_cutoff() as u32);
        put_f64(&mut out, grid.length());
        put_u32(&mut out, self.model.kind.code());
        put_u32(&mut out, self.model.n_deconv);
        put_f64(&mut out, self.model.nu);
        put_f64(&mut out, self.model.nu2.unwrap_or(f64::NAN));
        put_f64(&mut out, self.model.alpha);
        put_f64(&mut out, self.model.theta);
        put_f64(&mut out, self.state.t);
        out.extend_from_slice(&self.step.to_le_bytes());
        put_u32(&mut out, nfields as u32);
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        debug_assert_eq!(out.len(), HEADER_LEN);
        for field in self.state.fields() {
            for comp in field.components() {
                for c in comp {
                    put_f64(&mut out, c.re);
                    put_f64(&mut out, c.im);
                }
            }
        }
        let crc = crc32fast::hash(&out[HEADER_LEN..]);
        put_u32(&mut out, crc);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < HEADER_LEN + 4 {
            return Err(bad("file too short"));
        }
        if &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut r = Cursor { bytes, pos: 8 };
        let version = r.u32();
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let dim = r.u32() as usize;
        let n = r.u32() as usize;
        let cutoff = r.u32() as usize;
        let length = r.f64();
        let code = r.u32();
        let n_deconv = r.u32();
        let nu = r.f64();
        let nu2 = r.f64();
        let alpha = r.f64();
        let theta = r.f64();
        let t = r.f64();
        let step = r.u64();
        let nfields = r.u32() as usize;
        let stored = r.u32();
        if crc32fast::hash(&bytes[..HEADER_LEN - 4]) != stored {
            return Err(bad("header checksum mismatch"));
        }
        let kind = ModelKind::from_code(code)
            .ok_or_else(|| Error::Checkpoint(format!("unknown model code {code}")))?;
        let expected_fields = if kind.has_magnetic_field() { 2 } else { 1 };
        if nfields != expected_fields {
            return Err(Error::Checkpoint(format!(
                "{nfields} fields stored for model {kind}"
            )));
        }
        let grid: Arc<WaveGrid> = WaveGrid::with_cutoff(dim, n, length, cutoff)
            .map_err(|e| Error::Checkpoint(format!("bad grid descriptor: {e}")))?;
        let payload_len = nfields * dim * grid.len() * 16;
        if bytes.len() != HEADER_LEN + payload_len + 4 {
            return Err(Error::Checkpoint(format!(
                "expected {} bytes, found {}",
                HEADER_LEN + payload_len + 4,
                bytes.len()
            )));
        }
        let payload = &bytes[HEADER_LEN..HEADER_LEN + payload_len];
        let stored = u32::from_le_bytes(bytes[HEADER_LEN + payload_len..].try_into().unwrap());
        if crc32fast::hash(payload) != stored {
            return Err(bad("payload checksum mismatch"));
        }
        let mut fields = (0..nfields).map(|_| {
            let comps = (0..dim)
                .map(|_| (0..grid.len()).map(|_| Complex64::new(r.f64(), r.f64())).collect())
                .collect();
            SpectralVectorField::from_components(&grid, comps)
        });
        let u = fields.next().expect("at least one field")?;
        let b = fields.next().transpose()?;
        Ok(Checkpoint {
            model: ModelDescriptor {
                kind,
                nu,
                nu2: (!nu2.is_nan()).then_some(nu2),
                alpha,
                theta,
                n_deconv,
            },
            step,
            state: SimState { t, u, b },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterParams;

    fn sample() -> (Checkpoint, ModelConfig) {
        let grid = WaveGrid::new(3, 8, 2.0).unwrap();
        let u = SpectralVectorField::random_solenoidal(&grid, 3, -1.0, 2).unwrap();
        let b = SpectralVectorField::random_solenoidal(&grid, 4, -1.5, 2).unwrap();
        let cfg = ModelConfig::mhd(0.02, 0.03, FilterParams::new(0.1, 0.25, 2).unwrap());
        let state = SimState::with_magnetic(0.123456789, u, b);
        (Checkpoint::new(state, &cfg, 17), cfg)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (ck, cfg) = sample();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back, ck);
        assert!(back.model.matches(&cfg));
        assert_eq!(back.step, 17);
    }

    #[test]
    fn corruption_is_detected() {
        let (ck, _) = sample();
        let bytes = ck.to_bytes();
        let mut header = bytes.clone();
        header[30] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&header), Err(Error::Checkpoint(_))));
        let mut payload = bytes.clone();
        payload[HEADER_LEN + 100] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&payload), Err(Error::Checkpoint(_))));
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&magic).is_err());
    }

    #[test]
    fn header_layout() {
        let grid = WaveGrid::new(2, 8, 1.0).unwrap();
        let cfg = ModelConfig::nse(0.5);
        let ck = Checkpoint::new(SimState::new(2.5, SpectralVectorField::zeros(&grid)), &cfg, 3);
        let bytes = ck.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 64 * 16 + 4);
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &8u32.to_le_bytes());
        assert_eq!(&bytes[72..80], &2.5f64.to_le_bytes());
        assert_eq!(&bytes[80..88], &3u64.to_le_bytes());
        assert!(f64::from_le_bytes(bytes[48..56].try_into().unwrap()).is_nan());
    }
}
