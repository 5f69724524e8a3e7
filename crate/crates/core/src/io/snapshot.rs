//! Binary field snapshots.
//!
//! Layout: the 8-byte magic `NWSNAP01`, the header length as a little-endian
//! `u64`, the JSON header `{"shape": [...], "h": .., "t": ..}`, then the
//! values as little-endian `f64` in row-major order of `shape`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::wave_solver::{FieldState, Grid};

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"NWSNAP01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub shape: Vec<usize>,
    pub h: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub data: Vec<f64>,
}

impl Snapshot {
    /// The level `u` of every component, shape `[N, size, size]` indexed `[c][j][i]`.
    pub fn of_state(state: &FieldState, grid: &Grid) -> Self {
        let data = state.u.iter().flatten().copied().collect();
        Self { header: SnapshotHeader { shape: vec![state.n_components(), grid.size, grid.size], h: grid.h, t: state.t }, data }
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let header = serde_json::to_vec(&self.header).expect("serialisable");
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * self.data.len());
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, String> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| e.to_string())?;
        if magic != SNAPSHOT_MAGIC {
            return Err("bad magic".into());
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(|e| e.to_string())?;
        let len = u64::from_le_bytes(len) as usize;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header).map_err(|e| e.to_string())?;
        let header: SnapshotHeader = serde_json::from_slice(&header).map_err(|e| e.to_string())?;
        let count: usize = header.shape.iter().product();
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| e.to_string())?;
        if bytes.len() != 8 * count {
            return Err(format!("expected {count} values, found {} bytes", bytes.len()));
        }
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { header, data })
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory write");
        fs::write(path, buf).map_err(|e| IoError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let bytes = fs::read(path).map_err(|_| IoError::MissingInput(path.display().to_string()))?;
        Self::read_from(bytes.as_slice()).map_err(|m| IoError::Misaligned(format!("{}: {m}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let s = Snapshot { header: SnapshotHeader { shape: vec![1, 1, 2], h: 0.5, t: 1.0 }, data: vec![1.0, -2.0] };
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"NWSNAP01");
        let len = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&buf[16..16 + len]).unwrap();
        assert_eq!(header["shape"], serde_json::json!([1, 1, 2]));
        assert_eq!(&buf[16 + len..16 + len + 8], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 16 + len + 16);
        assert_eq!(Snapshot::read_from(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn truncated_data_is_rejected() {
        let s = Snapshot { header: SnapshotHeader { shape: vec![3], h: 1.0, t: 0.0 }, data: vec![1.0, 2.0, 3.0] };
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        buf.pop();
        assert!(Snapshot::read_from(buf.as_slice()).is_err());
        buf[0] = b'X';
        assert_eq!(Snapshot::read_from(buf.as_slice()).unwrap_err(), "bad magic");
    }
}
