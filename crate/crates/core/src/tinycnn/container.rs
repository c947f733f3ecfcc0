//! `TCNN` array container: magic, version, then named arrays of
//! little-endian `f64`.
//!
//! ```text
//! "TCNN" | version: u32 | count: u32 |
//!   count × ( name_len: u32 | name: utf-8 | rank: u32 | dims: rank × u64 | data: prod(dims) × f64 )
//! ```
//! All integers are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use super::data::Dataset;
use super::model::{Architecture, CnnModel, Params};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"TCNN";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self { name: name.into(), shape, data }
    }

    fn from_tensor<T: Scalar>(name: &str, t: &Tensor<T>) -> Self {
        Self::new(name, t.shape().to_vec(), t.data().iter().map(|v| v.to_f64_lossy()).collect())
    }

    fn to_tensor<T: Scalar>(&self) -> Result<Tensor<T>> {
        Tensor::new(self.shape.clone(), self.data.iter().map(|&v| T::lit(v)).collect())
    }

    fn counts(&self) -> Vec<usize> {
        self.data.iter().map(|&v| v as usize).collect()
    }
}

pub fn write_arrays<W: Write>(mut w: W, arrays: &[NamedArray]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(arrays.len() as u32).to_le_bytes())?;
    for a in arrays {
        w.write_all(&(a.name.len() as u32).to_le_bytes())?;
        w.write_all(a.name.as_bytes())?;
        w.write_all(&(a.shape.len() as u32).to_le_bytes())?;
        for &d in &a.shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in &a.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_arrays<R: Read>(mut r: R, source: &Path) -> Result<Vec<NamedArray>> {
    let fail = |message: String| Error::Parse { path: source.to_path_buf(), message };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4).map_err(&fail)? != MAGIC {
        return Err(fail("bad magic, expected `TCNN`".into()));
    }
    let version = cur.u32().map_err(&fail)?;
    if version != VERSION {
        return Err(fail(format!("unsupported container version {version}")));
    }
    let count = cur.u32().map_err(&fail)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = cur.u32().map_err(&fail)? as usize;
        let name = String::from_utf8(cur.take(name_len).map_err(&fail)?.to_vec())
            .map_err(|_| fail("array name is not utf-8".into()))?;
        let rank = cur.u32().map_err(&fail)? as usize;
        let shape: Vec<usize> =
            (0..rank).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<_, _>>().map_err(&fail)?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| fail("shape overflows".into()))?;
        let raw = cur.take(n.checked_mul(8).ok_or_else(|| fail("shape overflows".into()))?).map_err(&fail)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        out.push(NamedArray { name, shape, data });
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.bytes.len() - self.pos < n {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn find<'a>(arrays: &'a [NamedArray], name: &str, source: &Path) -> Result<&'a NamedArray> {
    arrays.iter().find(|a| a.name == name).ok_or_else(|| Error::Parse {
        path: source.to_path_buf(),
        message: format!("missing array `{name}`"),
    })
}

pub fn save_model<T: Scalar>(model: &CnnModel<T>, path: &Path) -> Result<()> {
    let a = model.architecture();
    let mut arrays = vec![
        NamedArray::new(
            "architecture",
            vec![6],
            [a.height, a.width, a.channels, a.num_filters, a.dense_units, a.num_classes]
                .iter()
                .map(|&v| v as f64)
                .collect(),
        ),
        NamedArray::new("dropout_rate", vec![1], vec![model.dropout_rate().to_f64_lossy()]),
    ];
    for (name, t) in Params::<T>::NAMES.iter().zip(model.params().tensors()) {
        arrays.push(NamedArray::from_tensor(name, t));
    }
    write_arrays(std::io::BufWriter::new(std::fs::File::create(path)?), &arrays)
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<CnnModel<T>> {
    let arrays = read_arrays(std::fs::File::open(path)?, path)?;
    let arch = find(&arrays, "architecture", path)?.counts();
    if arch.len() != 6 {
        return Err(Error::Parse { path: path.into(), message: "architecture needs 6 entries".into() });
    }
    let arch = Architecture {
        height: arch[0],
        width: arch[1],
        channels: arch[2],
        num_filters: arch[3],
        dense_units: arch[4],
        num_classes: arch[5],
    };
    let dropout = T::lit(find(&arrays, "dropout_rate", path)?.data.first().copied().unwrap_or(0.0));
    let tensors: Vec<Tensor<T>> =
        Params::<T>::NAMES.iter().map(|n| find(&arrays, n, path)?.to_tensor()).collect::<Result<_>>()?;
    let tensors: [Tensor<T>; 6] = tensors.try_into().expect("six names");
    CnnModel::from_params(arch, Params::from_tensors(tensors), dropout)
}

/// Class names are stored as arrays named `class/<name>` holding the label.
pub fn save_dataset<T: Scalar>(dataset: &Dataset<T>, path: &Path) -> Result<()> {
    let as_f64 = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let mut arrays = vec![
        NamedArray::from_tensor("images", dataset.images()),
        NamedArray::new("labels", vec![dataset.len()], as_f64(dataset.labels())),
        NamedArray::new("train_index", vec![dataset.train_indices().len()], as_f64(dataset.train_indices())),
        NamedArray::new("test_index", vec![dataset.test_indices().len()], as_f64(dataset.test_indices())),
    ];
    for (i, name) in dataset.class_names().iter().enumerate() {
        arrays.push(NamedArray::new(format!("class/{name}"), vec![1], vec![i as f64]));
    }
    write_arrays(std::io::BufWriter::new(std::fs::File::create(path)?), &arrays)
}

pub fn load_dataset_file<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let arrays = read_arrays(std::fs::File::open(path)?, path)?;
    let mut classes: Vec<(usize, String)> = arrays
        .iter()
        .filter_map(|a| {
            a.name.strip_prefix("class/").map(|n| (a.counts().first().copied().unwrap_or(0), n.to_string()))
        })
        .collect();
    classes.sort();
    Dataset::new(
        find(&arrays, "images", path)?.to_tensor()?,
        find(&arrays, "labels", path)?.counts(),
        classes.into_iter().map(|(_, n)| n).collect(),
        find(&arrays, "train_index", path)?.counts(),
        find(&arrays, "test_index", path)?.counts(),
    )
}
