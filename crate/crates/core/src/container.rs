//! Self-describing binary container for named `f64` tensors.
//!
//! Layout: one line of compact JSON (the header), a `\n`, then every tensor's
//! payload in header order as row-major little-endian `f64`s. The header
//! carries a `format` tag, the tensor names and shapes, and free-form `meta`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, IoContext, Result};

pub const CONTAINER_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    dtype: String,
    byte_order: String,
    meta: Value,
    tensors: Vec<TensorHeader>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub format: String,
    pub meta: Value,
    pub tensors: Vec<Tensor>,
}

impl Container {
    pub fn new(format: impl Into<String>, meta: Value) -> Container {
        Container {
            format: format.into(),
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        let name = name.into();
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor `{name}` shape does not match its data"
        );
        self.tensors.push(Tensor { name, shape, data });
    }

    /// Stores a matrix in row-major order with shape `[rows, cols]`.
    pub fn push_matrix(&mut self, name: impl Into<String>, m: &DMatrix<f64>) {
        let data = m.transpose().as_slice().to_vec();
        self.push(name, vec![m.nrows(), m.ncols()], data);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn matrix(&self, name: &str) -> Option<DMatrix<f64>> {
        let t = self.get(name)?;
        match t.shape[..] {
            [r, c] => Some(DMatrix::from_row_slice(r, c, &t.data)),
            _ => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            format: self.format.clone(),
            version: CONTAINER_VERSION,
            dtype: "f64".into(),
            byte_order: "little".into(),
            meta: self.meta.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorHeader {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                })
                .collect(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Container> {
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line".into()))?;
        let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(format!("header: {e}")))?;
        if header.dtype != "f64" || header.byte_order != "little" {
            return Err(bad(format!(
                "unsupported dtype/byte order {}/{}",
                header.dtype, header.byte_order
            )));
        }
        if header.version != CONTAINER_VERSION {
            return Err(bad(format!("unsupported version {}", header.version)));
        }
        let mut payload = &bytes[nl + 1..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for th in header.tensors {
            let len: usize = th.shape.iter().product();
            if payload.len() < len * 8 {
                return Err(bad(format!("payload of `{}` is truncated", th.name)));
            }
            let (chunk, rest) = payload.split_at(len * 8);
            let data = chunk
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            payload = rest;
            tensors.push(Tensor {
                name: th.name,
                shape: th.shape,
                data,
            });
        }
        if !payload.is_empty() {
            return Err(bad(format!("{} trailing bytes", payload.len())));
        }
        Ok(Container {
            format: header.format,
            meta: header.meta,
            tensors,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).at(path)
    }

    pub fn read(path: &Path) -> Result<Container> {
        let bytes = fs::read(path).at(path)?;
        Container::from_bytes(&bytes, path)
    }

    /// Reads a container and checks its `format` tag.
    pub fn read_format(path: &Path, format: &str) -> Result<Container> {
        let c = Container::read(path)?;
        if c.format != format {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("expected format `{format}`, found `{}`", c.format),
            });
        }
        Ok(c)
    }

    pub fn require(&self, name: &str, path: &Path) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            reason: format!("missing tensor `{name}`"),
        })
    }

    pub fn require_matrix(&self, name: &str, path: &Path) -> Result<DMatrix<f64>> {
        self.matrix(name).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            reason: format!("tensor `{name}` missing or not 2-dimensional"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip_preserves_bits() {
        let mut c = Container::new("test", json!({"k": 3}));
        let m = DMatrix::from_fn(3, 2, |i, j| (i as f64 + 0.1) * (j as f64 - 0.7));
        c.push_matrix("m", &m);
        c.push("t", vec![2, 1, 2], vec![f64::MIN_POSITIVE, -0.0, 1e300, 3.5]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        c.write(&path).unwrap();
        let back = Container::read_format(&path, "test").unwrap();
        assert_eq!(back, c);
        assert_eq!(back.matrix("m").unwrap(), m);
        assert!(back.get("t").unwrap().data[1].is_sign_negative());
        assert!(Container::read_format(&path, "other").is_err());
    }

    #[test]
    fn row_major_payload() {
        let mut c = Container::new("x", Value::Null);
        c.push_matrix("m", &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let bytes = c.to_bytes();
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        let second = f64::from_le_bytes(bytes[nl + 9..nl + 17].try_into().unwrap());
        assert_eq!(second, 2.0);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut c = Container::new("x", Value::Null);
        c.push("v", vec![4], vec![1.0; 4]);
        let mut bytes = c.to_bytes();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            Container::from_bytes(&bytes, Path::new("mem")),
            Err(Error::Format { .. })
        ));
    }
}
