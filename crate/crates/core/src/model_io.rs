//! Binary model container.
//!
//! Layout (little-endian): the magic `LAKSMODL`, a `u32` format version, a
//! `u32` record count, then records of
//! `u16 name length | name | u8 type | u64 payload length | payload`.
//! Matrices are stored column-major behind a `u32` rank and `u64` extents.

use std::collections::BTreeMap;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;

use crate::classifier::{ModelParams, TrainedModel, FORMAT_VERSION};
use crate::codebook::CodebookSet;
use crate::error::{Error, Result};
use crate::sha::{HashCodes, ShaParams};
use crate::skeletonlet::{FAMILY_COUNT, FAMILY_DIMS};

const MAGIC: &[u8; 8] = b"LAKSMODL";

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Real(f64),
    Count(u64),
    Tensor(Vec<u64>, Vec<f64>),
    Codes(u64, u64, Vec<i8>),
    Labels(Vec<u32>),
    Text(String),
    TextList(Vec<String>),
}

impl Value {
    fn tag(&self) -> u8 {
        match self {
            Value::Real(_) => 1,
            Value::Count(_) => 2,
            Value::Tensor(..) => 3,
            Value::Codes(..) => 4,
            Value::Labels(_) => 5,
            Value::Text(_) => 6,
            Value::TextList(_) => 7,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        // writes into a Vec cannot fail
        let w = &mut out;
        match self {
            Value::Real(v) => w.write_f64::<LE>(*v).unwrap(),
            Value::Count(v) => w.write_u64::<LE>(*v).unwrap(),
            Value::Tensor(shape, data) => {
                w.write_u32::<LE>(shape.len() as u32).unwrap();
                shape.iter().for_each(|&d| w.write_u64::<LE>(d).unwrap());
                data.iter().for_each(|&v| w.write_f64::<LE>(v).unwrap());
            }
            Value::Codes(rows, cols, data) => {
                w.write_u64::<LE>(*rows).unwrap();
                w.write_u64::<LE>(*cols).unwrap();
                data.iter().for_each(|&v| w.write_i8(v).unwrap());
            }
            Value::Labels(v) => {
                w.write_u64::<LE>(v.len() as u64).unwrap();
                v.iter().for_each(|&l| w.write_u32::<LE>(l).unwrap());
            }
            Value::Text(s) => w.extend_from_slice(s.as_bytes()),
            Value::TextList(list) => {
                w.write_u32::<LE>(list.len() as u32).unwrap();
                for s in list {
                    w.write_u32::<LE>(s.len() as u32).unwrap();
                    w.extend_from_slice(s.as_bytes());
                }
            }
        }
        out
    }

    fn decode(tag: u8, payload: &[u8]) -> std::result::Result<Value, String> {
        let mut r = Cursor::new(payload);
        let io = |e: std::io::Error| e.to_string();
        let value = match tag {
            1 => Value::Real(r.read_f64::<LE>().map_err(io)?),
            2 => Value::Count(r.read_u64::<LE>().map_err(io)?),
            3 => {
                let rank = r.read_u32::<LE>().map_err(io)?;
                let shape = (0..rank).map(|_| r.read_u64::<LE>()).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
                let n = shape.iter().try_fold(1u64, |a, &d| a.checked_mul(d)).ok_or("tensor too large")?;
                if n.checked_mul(8) != Some(payload.len() as u64 - r.position()) {
                    return Err("tensor payload does not match its shape".into());
                }
                let data = (0..n).map(|_| r.read_f64::<LE>()).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
                Value::Tensor(shape, data)
            }
            4 => {
                let rows = r.read_u64::<LE>().map_err(io)?;
                let cols = r.read_u64::<LE>().map_err(io)?;
                if rows.checked_mul(cols) != Some(payload.len() as u64 - 16) {
                    return Err("code payload does not match its shape".into());
                }
                let mut data = vec![0i8; (rows * cols) as usize];
                r.read_i8_into(&mut data).map_err(io)?;
                Value::Codes(rows, cols, data)
            }
            5 => {
                let n = r.read_u64::<LE>().map_err(io)?;
                if n.checked_mul(4) != Some(payload.len() as u64 - 8) {
                    return Err("label payload does not match its length".into());
                }
                let mut data = vec![0u32; n as usize];
                r.read_u32_into::<LE>(&mut data).map_err(io)?;
                Value::Labels(data)
            }
            6 => Value::Text(String::from_utf8(payload.to_vec()).map_err(|e| e.to_string())?),
            7 => {
                let n = r.read_u32::<LE>().map_err(io)?;
                let mut list = Vec::new();
                for _ in 0..n {
                    let len = r.read_u32::<LE>().map_err(io)? as usize;
                    let mut buf = vec![0u8; len];
                    r.read_exact(&mut buf).map_err(io)?;
                    list.push(String::from_utf8(buf).map_err(|e| e.to_string())?);
                }
                Value::TextList(list)
            }
            other => return Err(format!("unknown record type {other}")),
        };
        if r.position() != payload.len() as u64 {
            return Err("trailing bytes in record".into());
        }
        Ok(value)
    }
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    Value::Tensor(vec![m.nrows() as u64, m.ncols() as u64], m.as_slice().to_vec())
}

fn records(model: &TrainedModel) -> Vec<(String, Value)> {
    let p = &model.params;
    let s = &p.sha;
    let mut out: Vec<(String, Value)> = vec![
        ("lambda1".into(), Value::Real(s.lambda1)),
        ("lambda2".into(), Value::Real(s.lambda2)),
        ("lambda3".into(), Value::Real(s.lambda3)),
        ("mu0".into(), Value::Real(s.mu0)),
        ("rho".into(), Value::Real(s.rho)),
        ("mu_max".into(), Value::Real(s.mu_max)),
        ("tol".into(), Value::Real(s.tol)),
        ("ridge".into(), Value::Real(s.ridge)),
        ("code_len".into(), Value::Count(s.code_len as u64)),
        ("atoms".into(), Value::Count(s.atoms as u64)),
        ("max_iter".into(), Value::Count(s.max_iter as u64)),
        ("dcc_sweeps".into(), Value::Count(s.dcc_sweeps as u64)),
        ("seed".into(), Value::Count(s.seed)),
        ("clusters".into(), Value::Count(p.clusters as u64)),
        ("runs".into(), Value::Count(p.runs as u64)),
        ("tau".into(), Value::Count(p.tau as u64)),
        ("epsilon".into(), Value::Count(p.epsilon as u64)),
        ("class_count".into(), Value::Count(model.class_count as u64)),
        ("codebook_seed".into(), Value::Count(model.codebooks.seed())),
    ];
    let cb = &model.codebooks;
    for family in 0..FAMILY_COUNT {
        let mut data = Vec::new();
        for run in 0..cb.runs() {
            data.extend_from_slice(cb.centers(family, run));
        }
        let shape = vec![cb.runs() as u64, cb.clusters() as u64, FAMILY_DIMS[family] as u64];
        out.push((format!("codebook.{}", family + 1), Value::Tensor(shape, data)));
    }
    out.push(("W".into(), matrix_value(&model.w)));
    out.push(("Q".into(), matrix_value(&model.q)));
    out.push(("T".into(), matrix_value(&model.t)));
    let b = model.b.matrix();
    out.push((
        "B".into(),
        Value::Codes(b.nrows() as u64, b.ncols() as u64, b.iter().map(|&v| v as i8).collect()),
    ));
    out.push(("train_labels".into(), Value::Labels(model.train_labels.clone())));
    if let Some(names) = &model.class_names {
        out.push(("class_names".into(), Value::TextList(names.clone())));
    }
    out
}

pub fn to_bytes(model: &TrainedModel) -> Vec<u8> {
    let recs = records(model);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LE>(FORMAT_VERSION).unwrap();
    out.write_u32::<LE>(recs.len() as u32).unwrap();
    for (name, value) in recs {
        let payload = value.payload();
        out.write_u16::<LE>(name.len() as u16).unwrap();
        out.extend_from_slice(name.as_bytes());
        out.write_u8(value.tag()).unwrap();
        out.write_u64::<LE>(payload.len() as u64).unwrap();
        out.extend_from_slice(&payload);
    }
    out
}

struct Fields(BTreeMap<String, Value>);

impl Fields {
    fn take(&mut self, name: &str) -> Result<Value> {
        self.0
            .remove(name)
            .ok_or_else(|| Error::Model(format!("model file lacks the '{name}' record")))
    }

    fn real(&mut self, name: &str) -> Result<f64> {
        match self.take(name)? {
            Value::Real(v) => Ok(v),
            _ => Err(wrong_type(name)),
        }
    }

    fn count(&mut self, name: &str) -> Result<u64> {
        match self.take(name)? {
            Value::Count(v) => Ok(v),
            _ => Err(wrong_type(name)),
        }
    }

    fn size(&mut self, name: &str) -> Result<usize> {
        usize::try_from(self.count(name)?).map_err(|_| Error::Model(format!("'{name}' does not fit in memory")))
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        match self.take(name)? {
            Value::Tensor(shape, data) if shape.len() == 2 => {
                Ok(DMatrix::from_vec(shape[0] as usize, shape[1] as usize, data))
            }
            _ => Err(wrong_type(name)),
        }
    }
}

fn wrong_type(name: &str) -> Error {
    Error::Model(format!("record '{name}' has an unexpected type or shape"))
}

pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
    let corrupt = |what: &str| Error::Model(format!("corrupt model file: {what}"));
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| corrupt("too short"))?;
    if &magic != MAGIC {
        return Err(Error::Model("not a model file (bad magic)".into()));
    }
    let version = r.read_u32::<LE>().map_err(|_| corrupt("missing version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::Model(format!(
            "unsupported model format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let count = r.read_u32::<LE>().map_err(|_| corrupt("missing record count"))?;
    let mut fields = BTreeMap::new();
    for _ in 0..count {
        let name_len = r.read_u16::<LE>().map_err(|_| corrupt("truncated record header"))?;
        let mut name = vec![0u8; name_len as usize];
        r.read_exact(&mut name).map_err(|_| corrupt("truncated record name"))?;
        let name = String::from_utf8(name).map_err(|_| corrupt("record name is not UTF-8"))?;
        let tag = r.read_u8().map_err(|_| corrupt("truncated record header"))?;
        let len = r.read_u64::<LE>().map_err(|_| corrupt("truncated record header"))?;
        let start = r.position() as usize;
        let end = start
            .checked_add(usize::try_from(len).map_err(|_| corrupt("record too large"))?)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| corrupt(&format!("record '{name}' is truncated")))?;
        let value = Value::decode(tag, &bytes[start..end]).map_err(|m| corrupt(&format!("record '{name}': {m}")))?;
        r.set_position(end as u64);
        if fields.insert(name.clone(), value).is_some() {
            return Err(corrupt(&format!("duplicate record '{name}'")));
        }
    }
    if r.position() as usize != bytes.len() {
        return Err(corrupt("trailing bytes after the last record"));
    }

    let mut f = Fields(fields);
    let sha = ShaParams {
        lambda1: f.real("lambda1")?,
        lambda2: f.real("lambda2")?,
        lambda3: f.real("lambda3")?,
        mu0: f.real("mu0")?,
        rho: f.real("rho")?,
        mu_max: f.real("mu_max")?,
        tol: f.real("tol")?,
        ridge: f.real("ridge")?,
        code_len: f.size("code_len")?,
        atoms: f.size("atoms")?,
        max_iter: f.size("max_iter")?,
        dcc_sweeps: f.size("dcc_sweeps")?,
        seed: f.count("seed")?,
    };
    let params = ModelParams {
        sha,
        clusters: f.size("clusters")?,
        runs: f.size("runs")?,
        tau: f.size("tau")?,
        epsilon: f.size("epsilon")?,
    };
    let class_count = f.size("class_count")?;
    let codebook_seed = f.count("codebook_seed")?;

    let mut centers = Vec::with_capacity(FAMILY_COUNT);
    for family in 0..FAMILY_COUNT {
        let name = format!("codebook.{}", family + 1);
        let expected = [params.runs as u64, params.clusters as u64, FAMILY_DIMS[family] as u64];
        match f.take(&name)? {
            Value::Tensor(shape, data) if shape == expected => {
                let per_run = params.clusters * FAMILY_DIMS[family];
                centers.push(data.chunks(per_run.max(1)).map(<[f64]>::to_vec).collect());
            }
            _ => return Err(wrong_type(&name)),
        }
    }
    let codebooks = CodebookSet::from_centers(params.clusters, params.runs, codebook_seed, centers)
        .map_err(|e| Error::Model(e.to_string()))?;

    let w = f.matrix("W")?;
    let q = f.matrix("Q")?;
    let t = f.matrix("T")?;
    let b = match f.take("B")? {
        Value::Codes(rows, cols, data) => {
            let m = DMatrix::from_iterator(rows as usize, cols as usize, data.iter().map(|&v| v as f64));
            HashCodes::new(m).map_err(|_| Error::Model("code matrix holds values other than ±1".into()))?
        }
        _ => return Err(wrong_type("B")),
    };
    let train_labels = match f.take("train_labels")? {
        Value::Labels(v) => v,
        _ => return Err(wrong_type("train_labels")),
    };
    let class_names = match f.0.remove("class_names") {
        None => None,
        Some(Value::TextList(v)) => Some(v),
        Some(_) => return Err(wrong_type("class_names")),
    };
    if let Some(extra) = f.0.keys().next() {
        return Err(Error::Model(format!("unknown record '{extra}' in model file")));
    }
    TrainedModel::new(codebooks, w, q, t, b, train_labels, params, class_count, class_names)
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64, names: bool) -> TrainedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (k, runs, bits, atoms, n, classes) = (3, 2, 5, 4, 7, 3);
        let centers = FAMILY_DIMS
            .iter()
            .map(|&d| (0..runs).map(|_| (0..k * d).map(|_| rng.random::<f64>() - 0.5).collect()).collect())
            .collect();
        let codebooks = CodebookSet::from_centers(k, runs, seed, centers).unwrap();
        let dim = codebooks.descriptor_dim();
        let mut m = |r, c| DMatrix::from_fn(r, c, |_, _| rng.random::<f64>() * 1e3 - 5e2);
        let (w, q, t) = (m(atoms, bits), m(bits, classes), m(atoms, dim));
        let b = HashCodes::sign_of(&m(bits, n));
        let labels = (0..n as u32).map(|i| i % 3 + 1).collect();
        let params = ModelParams {
            sha: ShaParams {
                code_len: bits,
                atoms,
                seed,
                lambda3: 1.0 / 3.0,
                ..ShaParams::default()
            },
            clusters: k,
            runs,
            tau: 2,
            epsilon: 20,
        };
        let names = names.then(|| vec!["one".into(), "twö".into(), String::new()]);
        TrainedModel::new(codebooks, w, q, t, b, labels, params, classes, names).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for names in [false, true] {
            let model = random_model(5, names);
            let bytes = to_bytes(&model);
            let back = from_bytes(&bytes).unwrap();
            assert_eq!(back, model);
            assert_eq!(to_bytes(&back), bytes);
            for (a, b) in back.t.iter().zip(model.t.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.laks");
        let model = random_model(9, true);
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = to_bytes(&random_model(1, false));
        let cases: Vec<Vec<u8>> = vec![
            Vec::new(),
            b"NOTAMODEL...".to_vec(),
            bytes[..bytes.len() - 3].to_vec(),
            [bytes.as_slice(), &[0]].concat(),
            {
                let mut v = bytes.clone();
                v[8] = 99;
                v
            },
        ];
        for case in cases {
            let err = from_bytes(&case).unwrap_err();
            assert!(matches!(err, Error::Model(_)), "{err}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_model(Path::new("/nonexistent/model.laks")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
