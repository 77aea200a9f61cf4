//! Binary restart files.
//!
//! Layout, all little-endian:
//!
//! | bytes        | content                                        |
//! |--------------|------------------------------------------------|
//! | 4            | magic `MTRX`                                   |
//! | 4            | format version (`u32`)                         |
//! | 4            | `n` (`u32`)                                    |
//! | 8            | side length `L` (`f64`)                        |
//! | 48           | `alpha, qbar, epsilon, qhat, mu, eta` (`f64`)  |
//! | 8            | time (`f64`)                                   |
//! | 6 * 8 * n^2  | planes `u_x, u_y, v_x, v_y, T_e, q_e`, row-major |
//! | 4            | CRC-32 (IEEE) of every preceding byte          |

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::spectral::{Field, Grid, VectorField};

pub const MAGIC: &[u8; 4] = b"MTRX";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 6 * 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub n: u32,
    pub length: f64,
    pub params: ModelParams,
    pub time: f64,
}

impl fmt::Display for CheckpointHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(f, "version = {}", self.version)?;
        writeln!(f, "grid.n = {}", self.n)?;
        writeln!(f, "grid.length = {:?}", self.length)?;
        writeln!(f, "params.alpha = {:?}", p.alpha)?;
        writeln!(f, "params.qbar = {:?}", p.qbar)?;
        writeln!(f, "params.epsilon = {:?}", p.epsilon)?;
        writeln!(f, "params.qhat = {:?}", p.qhat)?;
        writeln!(f, "params.mu = {:?}", p.mu)?;
        writeln!(f, "params.eta = {:?}", p.eta)?;
        writeln!(f, "time = {:?}", self.time)
    }
}

pub fn encode(s: &State, p: &ModelParams) -> Vec<u8> {
    let g = s.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 6 * 8 * g.len() + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&g.length().to_le_bytes());
    for v in [p.alpha, p.qbar, p.epsilon, p.qhat, p.mu, p.eta, s.time] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for plane in s.planes() {
        for v in plane.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

fn read_header(r: &mut Reader) -> Result<CheckpointHeader> {
    if r.bytes.len() < HEADER_LEN {
        if r.bytes.len() >= 4 && &r.bytes[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: r.bytes.len(),
        });
    }
    if &r.take::<4>() != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32();
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n = r.u32();
    let length = r.f64();
    let params = ModelParams {
        alpha: r.f64(),
        qbar: r.f64(),
        epsilon: r.f64(),
        qhat: r.f64(),
        mu: r.f64(),
        eta: r.f64(),
    };
    let time = r.f64();
    Ok(CheckpointHeader {
        version,
        n,
        length,
        params,
        time,
    })
}

pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    read_header(&mut Reader { bytes, pos: 0 })
}

/// Decodes a full checkpoint. Nothing is returned unless the length and CRC
/// both check out.
pub fn decode(bytes: &[u8]) -> Result<(State, ModelParams)> {
    let mut r = Reader { bytes, pos: 0 };
    let h = read_header(&mut r)?;
    let grid = Grid::new(h.n as usize, h.length)?;
    let expected = HEADER_LEN + 6 * 8 * grid.len() + 4;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let body = &bytes[..expected - 4];
    let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::CrcMismatch { stored, computed });
    }
    let mut planes: Vec<Field> = (0..6)
        .map(|_| {
            let values = (0..grid.len()).map(|_| r.f64()).collect();
            Field::from_values(grid, values)
        })
        .collect();
    let qe = planes.pop().unwrap();
    let te = planes.pop().unwrap();
    let vy = planes.pop().unwrap();
    let vx = planes.pop().unwrap();
    let uy = planes.pop().unwrap();
    let ux = planes.pop().unwrap();
    let state = State {
        u: VectorField { x: ux, y: uy },
        v: VectorField { x: vx, y: vy },
        te,
        qe,
        time: h.time,
    };
    Ok((state, h.params))
}

pub fn checkpoint_write(path: &Path, s: &State, p: &ModelParams) -> Result<()> {
    std::fs::write(path, encode(s, p)).map_err(|e| Error::io(path, e))
}

pub fn checkpoint_read(path: &Path) -> Result<(State, ModelParams)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_header(&bytes)
}

/// `state_t<time>.ckpt`
pub fn checkpoint_name(time: f64) -> String {
    format!("state_t{time:.6}.ckpt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize, seed: f64) -> (State, ModelParams) {
        let g = Grid::new(n, 3.5).unwrap();
        let f = |k: f64| Field::from_fn(g, move |x, y| (k * x + seed).sin() * (y - k).cos() + k);
        let s = State {
            u: VectorField { x: f(1.0), y: f(2.0) },
            v: VectorField { x: f(3.0), y: f(4.0) },
            te: f(5.0),
            qe: f(6.0),
            time: 0.125 + seed,
        };
        (s, ModelParams { epsilon: 0.0375, eta: 1e-3, ..ModelParams::default() })
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in -10.0f64..10.0, half in 8usize..20) {
            let (s, p) = sample(2 * half, seed);
            let (back, bp) = decode(&encode(&s, &p)).unwrap();
            prop_assert_eq!(bp, p);
            prop_assert_eq!(back.time.to_bits(), s.time.to_bits());
            for (a, b) in back.planes().iter().zip(s.planes()) {
                prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }

    #[test]
    fn header_layout() {
        let (s, p) = sample(16, 0.0);
        let bytes = encode(&s, &p);
        assert_eq!(&bytes[..4], b"MTRX");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(bytes.len(), 76 + 6 * 8 * 256 + 4);
        let h = decode_header(&bytes).unwrap();
        assert_eq!(h.params, p);
        assert_eq!(h.time, s.time);
    }

    #[test]
    fn corrupted_crc_is_rejected() {
        let (s, p) = sample(16, 0.3);
        let mut bytes = encode(&s, &p);
        let last = bytes.len() - 1;
        bytes[last] ^= 0x5a;
        assert!(matches!(decode(&bytes), Err(Error::CrcMismatch { .. })));

        let mut bytes = encode(&s, &p);
        bytes[200] ^= 0x01;
        assert!(matches!(decode(&bytes), Err(Error::CrcMismatch { .. })));
    }

    #[test]
    fn version_bump_is_unsupported() {
        let (s, p) = sample(16, 0.3);
        let mut bytes = encode(&s, &p);
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::UnsupportedVersion(2))));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let (s, p) = sample(16, 0.3);
        let mut bytes = encode(&s, &p);
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::BadMagic)));

        let bytes = encode(&s, &p);
        assert!(matches!(decode(&bytes[..bytes.len() - 9]), Err(Error::Truncated { .. })));
        assert!(matches!(decode(&bytes[..40]), Err(Error::Truncated { .. })));
        assert!(matches!(decode(&[]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("moist-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let (s, p) = sample(16, 1.5);
        let path = dir.join(checkpoint_name(s.time));
        checkpoint_write(&path, &s, &p).unwrap();
        let (back, bp) = checkpoint_read(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(bp, p);
        assert_eq!(checkpoint_header(&path).unwrap().n, 16);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
