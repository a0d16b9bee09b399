//! Binary snapshot files.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 8    | magic `LDSNAP01`                          |
//! | 8      | 4    | `u32` n                                   |
//! | 12     | 8    | `f64` t                                   |
//! | 20     | 8    | `f64` δ (0 for NSE)                       |
//! | 28     | 4    | `u32` N                                   |
//! | 32     | 4    | `u32` model tag, 0 = NSE, 1 = deconvolution |
//! | 36     | 4    | `u32` layout version (1)                  |
//! | 40     | …    | payload                                   |
//!
//! The payload is `3·n³` complex coefficients as `(re, im)` `f64` pairs,
//! component-major: all of component 0, then 1, then 2. Within a component
//! the order is lexicographic over `(k₁, k₂, k₃)` with each axis running
//! `0, 1, …, n/2−1, −n/2, …, −1`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::{ModelKind, SolverConfig};
use crate::spectral::{Complex64, Grid, SpectralField};

pub const MAGIC: &[u8; 8] = b"LDSNAP01";
pub const LAYOUT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n: u32,
    pub t: f64,
    pub delta: f64,
    pub order: u32,
    pub model_tag: u32,
    pub version: u32,
}

impl SnapshotHeader {
    pub fn for_field(field: &SpectralField, model: ModelKind, delta: Option<f64>) -> Self {
        SnapshotHeader {
            n: field.grid().n() as u32,
            t: field.time,
            delta: delta.unwrap_or(0.0),
            order: model.order().unwrap_or(0),
            model_tag: model.tag(),
            version: LAYOUT_VERSION,
        }
    }

    pub fn for_config(field: &SpectralField, config: &SolverConfig) -> Self {
        Self::for_field(field, config.model, config.filter.map(|f| f.delta()))
    }

    pub fn payload_len(&self) -> usize {
        3 * (self.n as usize).pow(3) * 16
    }
}

pub fn encode_snapshot(field: &SpectralField, header: &SnapshotHeader) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + header.payload_len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&header.n.to_le_bytes());
    buf.extend_from_slice(&header.t.to_le_bytes());
    buf.extend_from_slice(&header.delta.to_le_bytes());
    buf.extend_from_slice(&header.order.to_le_bytes());
    buf.extend_from_slice(&header.model_tag.to_le_bytes());
    buf.extend_from_slice(&header.version.to_le_bytes());
    for c in field.components() {
        for z in c {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    buf
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("not a snapshot file (bad magic)".into()));
    }
    let header = SnapshotHeader {
        n: u32_at(bytes, 8),
        t: f64_at(bytes, 12),
        delta: f64_at(bytes, 20),
        order: u32_at(bytes, 28),
        model_tag: u32_at(bytes, 32),
        version: u32_at(bytes, 36),
    };
    if header.version > LAYOUT_VERSION {
        return Err(Error::Format(format!(
            "snapshot layout version {} is newer than supported version {LAYOUT_VERSION}",
            header.version
        )));
    }
    if header.version == 0 {
        return Err(Error::Format("snapshot layout version 0 is invalid".into()));
    }
    if header.model_tag > 1 {
        return Err(Error::Format(format!("unknown model tag {}", header.model_tag)));
    }
    Ok(header)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SpectralField, SnapshotHeader)> {
    let header = decode_header(bytes)?;
    let grid = Grid::new(header.n as usize).map_err(|e| Error::Format(e.to_string()))?;
    let want = HEADER_LEN + header.payload_len();
    if bytes.len() < want {
        return Err(Error::Format(format!(
            "truncated payload: expected {want} bytes, found {}",
            bytes.len()
        )));
    }
    if bytes.len() > want {
        return Err(Error::Format(format!("{} trailing bytes after payload", bytes.len() - want)));
    }
    let len = grid.len();
    let mut comps: [Vec<Complex64>; 3] = Default::default();
    for (c, comp) in comps.iter_mut().enumerate() {
        let base = HEADER_LEN + c * len * 16;
        *comp = (0..len)
            .map(|i| Complex64::new(f64_at(bytes, base + 16 * i), f64_at(bytes, base + 16 * i + 8)))
            .collect();
    }
    let mut field = SpectralField::from_components(grid, comps)?;
    field.time = header.t;
    Ok((field, header))
}

pub fn write_snapshot(path: &Path, field: &SpectralField, header: &SnapshotHeader) -> Result<()> {
    let bytes = encode_snapshot(field, header);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, SnapshotHeader)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}

/// Reads a snapshot that must live on `grid`; no interpolation is done.
pub fn read_snapshot_for(path: &Path, grid: Grid) -> Result<(SpectralField, SnapshotHeader)> {
    let (field, header) = read_snapshot(path)?;
    if header.n as usize != grid.n() {
        return Err(Error::GridMismatch(format!(
            "{} holds n = {}, expected n = {}",
            path.display(),
            header.n,
            grid.n()
        )));
    }
    Ok((field, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random;

    #[test]
    fn header_layout() {
        let g = Grid::new(4).unwrap();
        let mut f = SpectralField::zeros(g);
        f.time = 0.5;
        let h = SnapshotHeader::for_field(&f, ModelKind::LerayDeconvolution(3), Some(0.25));
        let b = encode_snapshot(&f, &h);
        assert_eq!(b.len(), HEADER_LEN + 3 * 64 * 16);
        assert_eq!(&b[..8], b"LDSNAP01");
        assert_eq!(u32_at(&b, 8), 4);
        assert_eq!(f64_at(&b, 12), 0.5);
        assert_eq!(f64_at(&b, 20), 0.25);
        assert_eq!(u32_at(&b, 28), 3);
        assert_eq!(u32_at(&b, 32), 1);
        assert_eq!(u32_at(&b, 36), 1);
    }

    #[test]
    fn payload_is_component_major() {
        let g = Grid::new(4).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set_mode([1, 0, 0], [0.0, 0.0, 2.0].map(|x| Complex64::new(x, 0.0))).unwrap();
        let h = SnapshotHeader::for_field(&f, ModelKind::Nse, None);
        let b = encode_snapshot(&f, &h);
        let idx = g.index_of([1, 0, 0]).unwrap();
        let at = HEADER_LEN + 2 * g.len() * 16 + 16 * idx;
        assert_eq!(f64_at(&b, at), 2.0);
    }

    #[test]
    fn round_trip_and_guards() {
        let g = Grid::new(8).unwrap();
        let mut f = random::random_solenoidal(g, 3, -1.0, 1.0, 4);
        f.time = 1.25;
        let h = SnapshotHeader::for_field(&f, ModelKind::Nse, None);
        let b = encode_snapshot(&f, &h);
        let (back, hb) = decode_snapshot(&b).unwrap();
        assert_eq!(back, f);
        assert_eq!(hb, h);

        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(matches!(decode_snapshot(&bad), Err(Error::Format(_))));
        let mut newer = b.clone();
        newer[36..40].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_snapshot(&newer), Err(Error::Format(m)) if m.contains("newer")));
        assert!(decode_snapshot(&b[..b.len() - 1]).is_err());
        assert!(decode_snapshot(&b[..20]).is_err());
    }
}
