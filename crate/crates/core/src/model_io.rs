//! Binary container for fitted models.
//!
//! Layout (little-endian): the 8-byte header `b"HDMDC\0"` followed by a `u16`
//! format version, then tagged fields. Strings are `u32` length-prefixed UTF-8,
//! counts are `u64`, and every real is stored as the bits of an `f64`, so
//! `f32` and `f64` models both round-trip bit-exactly. Matrices are written as
//! `rows, cols` followed by their entries in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hankel::EmbeddingDims;
use crate::linalg::Matrix;
use crate::regress::{HdmdcModel, Hyperparameters};
use crate::scalar::Real;
use crate::timeseries::{ChannelSchema, Normalization};

pub const MAGIC: &[u8; 6] = b"HDMDC\0";
pub const FORMAT_VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }

    fn real<T: Real>(&mut self, v: T) {
        self.0.extend_from_slice(&v.as_f64().to_bits().to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.0.extend_from_slice(&(s.len() as u32).to_le_bytes());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn strs(&mut self, v: &[String]) {
        self.u64(v.len());
        for s in v {
            self.str(s);
        }
    }

    fn tag(&mut self, t: &[u8; 4]) {
        self.0.extend_from_slice(t);
    }

    fn matrix<T: Real>(&mut self, m: &Matrix<T>) {
        self.u64(m.nrows());
        self.u64(m.ncols());
        for &v in m.as_slice() {
            self.real(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::ModelFormat(format!("truncated at byte {}", self.pos)));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self) -> Result<usize> {
        let b = self.take(8)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::ModelFormat(format!("count {v} too large")))
    }

    fn real<T: Real>(&mut self) -> Result<T> {
        let b = self.take(8)?;
        let v = f64::from_bits(u64::from_le_bytes(b.try_into().expect("8 bytes")));
        T::from_f64(v).ok_or_else(|| Error::ModelFormat(format!("value {v} not representable")))
    }

    fn str(&mut self) -> Result<String> {
        let b = self.take(4)?;
        let len = u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::ModelFormat("invalid UTF-8 string".into()))
    }

    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.u64()?;
        (0..n).map(|_| self.str()).collect()
    }

    fn expect_tag(&mut self, t: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != t {
            return Err(Error::ModelFormat(format!(
                "expected section `{}`, found `{}`",
                String::from_utf8_lossy(t),
                String::from_utf8_lossy(got)
            )));
        }
        Ok(())
    }

    fn matrix<T: Real>(&mut self) -> Result<Matrix<T>> {
        let rows = self.u64()?;
        let cols = self.u64()?;
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l.saturating_mul(8) <= self.buf.len() - self.pos)
            .ok_or_else(|| Error::ModelFormat(format!("matrix {rows}x{cols} exceeds file size")))?;
        let data = (0..len).map(|_| self.real()).collect::<Result<Vec<T>>>()?;
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

/// Serializes a model.
pub fn model_to_bytes<T: Real>(model: &HdmdcModel<T>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    w.tag(b"META");
    w.str(model.training_run_id());
    w.real(model.dt());
    w.u64(std::mem::size_of::<T>());

    w.tag(b"SCHM");
    w.strs(&model.schema().states);
    w.strs(&model.schema().inputs);

    let d = model.dims();
    w.tag(b"DIMS");
    for v in [d.n, d.q, d.s, d.z, d.m] {
        w.u64(v);
    }

    let h = model.hyper();
    w.tag(b"HYPR");
    for v in [h.l_tr, h.l_dx, h.l_du, h.lambda] {
        w.real(v);
    }

    let norm = model.normalization();
    w.tag(b"NORM");
    w.strs(&norm.channels);
    for (&m, &s) in norm.mean.iter().zip(&norm.std) {
        w.real(m);
        w.real(s);
    }

    w.tag(b"AHAT");
    w.matrix(model.a_hat());
    w.tag(b"BHAT");
    w.matrix(model.b_hat());
    w.0
}

/// Parses a model written by [`model_to_bytes`].
pub fn model_from_bytes<T: Real>(buf: &[u8]) -> Result<HdmdcModel<T>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(6)? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported format version {version}")));
    }

    r.expect_tag(b"META")?;
    let id = r.str()?;
    let dt = r.real()?;
    let _scalar_width = r.u64()?;

    r.expect_tag(b"SCHM")?;
    let schema = ChannelSchema::new(r.strs()?, r.strs()?)?;

    r.expect_tag(b"DIMS")?;
    let dims = EmbeddingDims {
        n: r.u64()?,
        q: r.u64()?,
        s: r.u64()?,
        z: r.u64()?,
        m: r.u64()?,
    };

    r.expect_tag(b"HYPR")?;
    let hyper = Hyperparameters {
        l_tr: r.real()?,
        l_dx: r.real()?,
        l_du: r.real()?,
        lambda: r.real()?,
    };

    r.expect_tag(b"NORM")?;
    let channels = r.strs()?;
    let mut mean = Vec::with_capacity(channels.len());
    let mut std = Vec::with_capacity(channels.len());
    for _ in 0..channels.len() {
        mean.push(r.real()?);
        std.push(r.real()?);
    }
    let normalization = Normalization { channels, mean, std };

    r.expect_tag(b"AHAT")?;
    let a = r.matrix()?;
    r.expect_tag(b"BHAT")?;
    let b = r.matrix()?;
    if r.pos != buf.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    HdmdcModel::from_parts(a, b, dims, normalization, hyper, schema, dt, id)
}

pub fn save_model<T: Real>(model: &HdmdcModel<T>, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Real>(path: &Path) -> Result<HdmdcModel<T>> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng_from_seed;
    use rand::Rng;

    fn model<T: Real>() -> HdmdcModel<T> {
        let mut rng = rng_from_seed(4);
        let dims = EmbeddingDims {
            n: 2,
            q: 1,
            s: 1,
            z: 2,
            m: 40,
        };
        let a = Matrix::from_fn(4, 4, |_, _| T::lit(rng.random::<f64>() - 0.5));
        let b = Matrix::from_fn(4, 3, |_, _| T::lit(rng.random::<f64>() * 1e-7));
        let schema = ChannelSchema::new(vec!["x".into(), "v".into()], vec!["eta".into()]).unwrap();
        let norm = Normalization {
            channels: schema.all_owned(),
            mean: vec![T::lit(0.1), T::lit(-3.0), T::lit(1e-9)],
            std: vec![T::lit(2.0), T::lit(0.3), T::lit(7.5)],
        };
        let hyper = Hyperparameters::new(T::lit(4.0), T::lit(0.1), T::lit(0.2), T::lit(100.0)).unwrap();
        HdmdcModel::from_parts(a, b, dims, norm, hyper, schema, T::lit(0.1 / 3.0), "train_03").unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model::<f64>();
        let bytes = model_to_bytes(&m);
        assert_eq!(&bytes[..6], MAGIC);
        let back: HdmdcModel<f64> = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        let m32 = model::<f32>();
        let back32: HdmdcModel<f32> = model_from_bytes(&model_to_bytes(&m32)).unwrap();
        assert_eq!(back32, m32);
    }

    #[test]
    fn rejects_corrupt_input() {
        let bytes = model_to_bytes(&model::<f64>());
        assert!(model_from_bytes::<f64>(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(model_from_bytes::<f64>(&bad).is_err());
        let mut future = bytes;
        future[6] = 9;
        assert!(model_from_bytes::<f64>(&future).is_err());
    }
}
