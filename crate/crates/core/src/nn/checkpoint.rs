//! Checkpoint files: one line of JSON header naming every parameter and its
//! shape, followed by the parameter values as little-endian `f64`s in header
//! order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::params::ParamStore;

pub const FORMAT: &str = "spectral-gn-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub params: Vec<ParamEntry>,
    /// Free-form metadata, e.g. the model configuration.
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn write_checkpoint(w: &mut impl Write, params: &ParamStore, meta: serde_json::Value) -> Result<()> {
    let header = Header {
        format: FORMAT.to_string(),
        params: params
            .names()
            .iter()
            .zip(params.values())
            .map(|(name, m)| ParamEntry { name: name.clone(), rows: m.rows(), cols: m.cols() })
            .collect(),
        meta,
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    for m in params.values() {
        for x in m.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(r: impl Read) -> Result<(Header, Vec<Matrix>)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())?;
    if header.format != FORMAT {
        return Err(Error::Checkpoint(format!("unknown format {:?}", header.format)));
    }
    let mut values = Vec::with_capacity(header.params.len());
    let mut buf = [0u8; 8];
    for p in &header.params {
        let mut data = Vec::with_capacity(p.rows * p.cols);
        for _ in 0..p.rows * p.cols {
            reader
                .read_exact(&mut buf)
                .map_err(|_| Error::Checkpoint(format!("payload ends inside parameter {}", p.name)))?;
            data.push(f64::from_le_bytes(buf));
        }
        values.push(Matrix::from_vec(p.rows, p.cols, data)?);
    }
    if reader.read(&mut buf)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok((header, values))
}

/// Copies checkpoint values into a store whose parameters were declared with
/// the same names and shapes.
pub fn load_into(params: &mut ParamStore, header: &Header, values: Vec<Matrix>) -> Result<()> {
    if header.params.len() != params.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} parameters, model declares {}",
            header.params.len(),
            params.len()
        )));
    }
    for (entry, value) in header.params.iter().zip(values) {
        let id = params
            .by_name(&entry.name)
            .ok_or_else(|| Error::Checkpoint(format!("model has no parameter {}", entry.name)))?;
        if params.get(id).shape() != value.shape() {
            return Err(Error::Checkpoint(format!("shape mismatch for {}", entry.name)));
        }
        *params.get_mut(id) = value;
    }
    Ok(())
}

pub fn save(path: &Path, params: &ParamStore, meta: serde_json::Value) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut f, params, meta)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(Header, Vec<Matrix>)> {
    read_checkpoint(std::fs::File::open(path)?)
}
