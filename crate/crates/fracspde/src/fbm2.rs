//! `FBM2` binary field dumps.
//!
//! Little-endian: magic `FBM2`, `u32` version, `f64` h1, h2, T, L, `u32`
//! n_t, n_x, `u64` seed, then the `(n_t+1) x (n_x+1)` node values in
//! time-major order.

use std::io::{self, Read, Write};

use ndarray::Array2;

pub const MAGIC: &[u8; 4] = b"FBM2";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 4 + 4 + 4 * 8 + 4 + 4 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Fbm2 {
    pub h1: f64,
    pub h2: f64,
    pub horizon: f64,
    pub length: f64,
    pub seed: u64,
    /// Shape `(n_t + 1, n_x + 1)`.
    pub values: Array2<f64>,
}

impl Fbm2 {
    pub fn n_t(&self) -> usize {
        self.values.nrows() - 1
    }

    pub fn n_x(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (rows, cols) = self.values.dim();
        if rows == 0 || cols == 0 {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty field"));
        }
        let n = |v: usize| {
            u32::try_from(v).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "grid too large for FBM2"))
        };
        let mut head = Vec::with_capacity(HEADER_BYTES);
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.h1, self.h2, self.horizon, self.length] {
            head.extend_from_slice(&v.to_le_bytes());
        }
        head.extend_from_slice(&n(rows - 1)?.to_le_bytes());
        head.extend_from_slice(&n(cols - 1)?.to_le_bytes());
        head.extend_from_slice(&self.seed.to_le_bytes());
        w.write_all(&head)?;
        let mut body = Vec::with_capacity(rows * cols * 8);
        for v in self.values.iter() {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)
    }

    pub fn read<R: Read>(mut r: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut head = [0u8; HEADER_BYTES];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(bad("not an FBM2 file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(bad(&format!("unsupported FBM2 version {version}")));
        }
        let (n_t, n_x) = (u32_at(40) as usize, u32_at(44) as usize);
        let seed = u64::from_le_bytes(head[48..56].try_into().unwrap());
        let count = (n_t + 1)
            .checked_mul(n_x + 1)
            .ok_or_else(|| bad("grid size overflows"))?;
        let mut body = Vec::new();
        r.take(count as u64 * 8).read_to_end(&mut body)?;
        if body.len() != count * 8 {
            return Err(bad("truncated FBM2 body"));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            h1: f64_at(8),
            h2: f64_at(16),
            horizon: f64_at(24),
            length: f64_at(32),
            seed,
            values: Array2::from_shape_vec((n_t + 1, n_x + 1), data).expect("length checked"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let f = Fbm2 {
            h1: 0.75,
            h2: 0.6,
            horizon: 1.0,
            length: 2.0,
            seed: 0x0102_0304_0506_0708,
            values: Array2::from_shape_fn((2, 3), |(i, j)| (i * 3 + j) as f64),
        };
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_BYTES + 6 * 8);
        assert_eq!(&buf[..4], b"FBM2");
        assert_eq!(buf[4..8], [1, 0, 0, 0]);
        assert_eq!(buf[8..16], 0.75f64.to_le_bytes());
        assert_eq!(buf[40..44], [1, 0, 0, 0]);
        assert_eq!(buf[44..48], [2, 0, 0, 0]);
        assert_eq!(buf[48..56], [8, 7, 6, 5, 4, 3, 2, 1]);
        // row-major: second value is (t0, x1)
        assert_eq!(buf[HEADER_BYTES + 8..HEADER_BYTES + 16], 1.0f64.to_le_bytes());
        assert_eq!(Fbm2::read(&buf[..]).unwrap(), f);
    }

    #[test]
    fn rejects_corrupt_input() {
        let f = Fbm2 {
            h1: 0.8,
            h2: 0.7,
            horizon: 1.0,
            length: 1.0,
            seed: 1,
            values: Array2::zeros((3, 3)),
        };
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert!(Fbm2::read(&buf[..buf.len() - 1]).is_err());
        let mut wrong = buf.clone();
        wrong[0] = b'X';
        assert!(Fbm2::read(&wrong[..]).is_err());
        let mut v2 = buf;
        v2[4] = 2;
        assert!(Fbm2::read(&v2[..]).is_err());
    }
}
