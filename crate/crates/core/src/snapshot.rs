//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `DTIL`, version `u32`, `n` `u32`,
//! spacing `f64`, flags `u32`, then `f64` payload. Flags: bit 0 connection,
//! bit 1 Higgs field, bit 2 density only. The connection is stored site-major
//! as 6 matrices of 8 reals (row-major, re/im interleaved), followed by 8
//! reals of `phi` per site; a density snapshot stores one real per site.

use std::io::{Read, Write};
use std::path::Path;

use crate::algebra::{Mat2, C64};
use crate::energy::DensityField;
use crate::error::{Error, Result};
use crate::field::{ConnectionField, FieldState, HiggsField};
use crate::lattice::{Lattice, LatticeSpec, DIM};

pub const MAGIC: &[u8; 4] = b"DTIL";
pub const VERSION: u32 = 1;
pub const FLAG_CONNECTION: u32 = 1;
pub const FLAG_HIGGS: u32 = 2;
pub const FLAG_DENSITY: u32 = 4;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    State(FieldState),
    Density(Lattice, DensityField),
}

impl Snapshot {
    pub fn lattice(&self) -> &Lattice {
        match self {
            Snapshot::State(s) => &s.lattice,
            Snapshot::Density(l, _) => l,
        }
    }

    pub fn into_state(self) -> Result<FieldState> {
        match self {
            Snapshot::State(s) => Ok(s),
            Snapshot::Density(..) => Err(Error::Snapshot("snapshot holds a density, not fields".into())),
        }
    }
}

fn push_mat(out: &mut Vec<u8>, m: &Mat2) {
    for z in m.0 {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

pub fn encode(snap: &Snapshot) -> Vec<u8> {
    let spec = *snap.lattice().spec();
    let (flags, payload) = match snap {
        Snapshot::State(s) => (FLAG_CONNECTION | FLAG_HIGGS, s.num_sites() * (DIM + 1) * 64),
        Snapshot::Density(_, d) => (FLAG_DENSITY, d.values.len() * 8),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.n() as u32).to_le_bytes());
    out.extend_from_slice(&spec.spacing().to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    match snap {
        Snapshot::State(s) => {
            for site in &s.connection.0 {
                site.iter().for_each(|m| push_mat(&mut out, m));
            }
            s.higgs.0.iter().for_each(|m| push_mat(&mut out, m));
        }
        Snapshot::Density(_, d) => d.values.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn mat_at(b: &[u8], at: usize) -> Mat2 {
    Mat2(std::array::from_fn(|k| C64::new(f64_at(b, at + 16 * k), f64_at(b, at + 16 * k + 8))))
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}, expected {VERSION}")));
    }
    let n = u32_at(bytes, 8) as usize;
    let spacing = f64_at(bytes, 12);
    let flags = u32_at(bytes, 20);
    let lattice = Lattice::new(LatticeSpec::new(n, spacing).map_err(|e| Error::Snapshot(e.to_string()))?);
    let sites = lattice.num_sites();
    let body = &bytes[HEADER_LEN..];
    let expect = match flags {
        f if f == FLAG_CONNECTION | FLAG_HIGGS => sites * (DIM + 1) * 64,
        FLAG_DENSITY => sites * 8,
        other => return Err(Error::Snapshot(format!("unsupported flags {other:#b}"))),
    };
    if body.len() != expect {
        return Err(Error::Snapshot(format!("payload is {} bytes, header implies {expect}", body.len())));
    }
    if flags == FLAG_DENSITY {
        let values = (0..sites).map(|s| f64_at(body, 8 * s)).collect();
        return Ok(Snapshot::Density(lattice, DensityField { values }));
    }
    let conn = (0..sites).map(|s| std::array::from_fn(|mu| mat_at(body, (s * DIM + mu) * 64))).collect();
    let off = sites * DIM * 64;
    let higgs = (0..sites).map(|s| mat_at(body, off + s * 64)).collect();
    Ok(Snapshot::State(FieldState::new(&lattice, ConnectionField(conn), HiggsField(higgs))?))
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(snap))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{band_limited_state, BandLimited};

    #[test]
    fn state_round_trip_is_bit_exact() {
        let lat = Lattice::with_size(4, 0.37).unwrap();
        let s = band_limited_state(&lat, &BandLimited::new(0.5, 1));
        let bytes = encode(&Snapshot::State(s.clone()));
        assert_eq!(bytes.len(), 24 + lat.num_sites() * 7 * 64);
        assert_eq!(&bytes[..4], b"DTIL");
        let back = decode(&bytes).unwrap().into_state().unwrap();
        for (a, b) in s.higgs.0.iter().zip(&back.higgs.0) {
            for k in 0..4 {
                assert_eq!(a.0[k].re.to_bits(), b.0[k].re.to_bits());
                assert_eq!(a.0[k].im.to_bits(), b.0[k].im.to_bits());
            }
        }
        assert_eq!(back, s);
        assert_eq!(encode(&Snapshot::State(back)), bytes);
    }

    #[test]
    fn density_round_trip_and_file_io() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let d = DensityField { values: (0..lat.num_sites()).map(|i| i as f64 * 0.1).collect() };
        let snap = Snapshot::Density(lat, d);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.snap");
        write_snapshot(&p, &snap).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), snap);
        assert!(snap.into_state().is_err());
    }

    #[test]
    fn malformed_input_is_rejected() {
        let lat = Lattice::with_size(4, 1.0).unwrap();
        let good = encode(&Snapshot::State(FieldState::zero(&lat)));
        assert!(matches!(decode(&good[..10]), Err(Error::Snapshot(_))));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Snapshot(m)) if m.contains("magic")));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode(&bad), Err(Error::Snapshot(m)) if m.contains("version")));
        let mut bad = good.clone();
        bad.pop();
        assert!(matches!(decode(&bad), Err(Error::Snapshot(m)) if m.contains("payload")));
        let mut bad = good;
        bad[20] = 1;
        assert!(matches!(decode(&bad), Err(Error::Snapshot(m)) if m.contains("flags")));
    }
}
