//! Binary snapshots of a spectral state.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `MGSP` |
//! | 4 | format version, `u32` |
//! | 12 | grid sizes `n1 n2 n3`, `u32` each |
//! | 8 | time `t`, `f64` |
//! | 48 | `N², ε_ν, ε_κ, c, A, m` as `f64` |
//! | 16·n1·n2·n3 | coefficients as `(re, im)` `f64` pairs |
//!
//! Coefficients are stored in FFT order: flat index `(i1·n2 + i2)·n3 + i3`,
//! where index `i` on an axis of `n` points carries wavenumber `i` for
//! `i < n/2` and `i − n` otherwise.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multiplier::PhysicalParams;
use crate::spectral::{Grid, SpectralScalar};

pub const MAGIC: &[u8; 4] = b"MGSP";
pub const VERSION: u32 = 1;
/// Bytes before the coefficient payload.
pub const HEADER_LEN: usize = 4 + 4 + 12 + 8 + 48;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub params: PhysicalParams,
    pub theta: SpectralScalar,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.theta.grid;
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for n in g.dims() {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        let p = &self.params;
        for v in [
            self.t,
            p.n_squared,
            p.eps_nu,
            p.eps_kappa,
            p.damping_c,
            p.amplitude_a,
            p.forcing_m as f64,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for c in &self.theta.coeffs {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(bad("file shorter than the header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("missing MGSP magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let grid = Grid::new(u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize)?;
        let t = f64_at(20);
        let v: Vec<f64> = (0..6).map(|i| f64_at(28 + 8 * i)).collect();
        let m = v[5];
        if !(m >= 1.0 && m.fract() == 0.0 && m <= u32::MAX as f64) {
            return Err(Error::Checkpoint(format!("forcing_m = {m} is not a positive integer")));
        }
        let params = PhysicalParams {
            n_squared: v[0],
            eps_nu: v[1],
            eps_kappa: v[2],
            damping_c: v[3],
            amplitude_a: v[4],
            forcing_m: m as u32,
        };
        params.validate()?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != 16 * grid.len() {
            return Err(Error::Checkpoint(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                16 * grid.len()
            )));
        }
        let coeffs: Vec<Complex64> = payload
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        let zero_mean = coeffs[0] == Complex64::default();
        Ok(Self {
            t,
            params,
            theta: SpectralScalar { grid, coeffs, zero_mean },
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Writes through a temporary file and renames it into place, so an
    /// interrupted write never clobbers an older checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let grid = Grid::new(8, 10, 12).unwrap();
        Checkpoint {
            t: 0.375,
            params: PhysicalParams {
                amplitude_a: -3.5,
                forcing_m: 2,
                ..PhysicalParams::default()
            },
            theta: SpectralScalar::random_smooth(grid, 9, 3.0, 1.0),
        }
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN + 16 * 8 * 10 * 12);
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        for (a, b) in back.theta.coeffs.iter().zip(&c.theta.coeffs) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back.params, c.params);
        assert_eq!(back.t, c.t);
    }

    #[test]
    fn header_fields_sit_where_documented() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"MGSP");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 10);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.375);
        assert_eq!(f64::from_le_bytes(bytes[68..76].try_into().unwrap()), 2.0);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..HEADER_LEN - 1]).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 8]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(Checkpoint::from_bytes(&wrong).is_err());
        let mut wrong = bytes;
        wrong[4] = 9;
        assert!(Checkpoint::from_bytes(&wrong).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.mgsp");
        let c = sample();
        c.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap().to_bytes(), c.to_bytes());
        assert!(!dir.path().join("state.mgsp.tmp").exists());
    }
}
