//! File formats: the `FDS1` binary dataset container, a CSV ingestion path,
//! and the `FMD1` model snapshot format. All integers and floats are
//! little-endian; features and weights are stored as 32-bit floats.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{LayerParams, ParamStore};
use crate::rng::{stream, tag};

const DATASET_MAGIC: &[u8; 4] = b"FDS1";
const MODEL_MAGIC: &[u8; 4] = b"FMD1";

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f32<W: Write>(w: &mut W, v: f32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(f32::from_le_bytes(buf))
}

/// Write a dataset: magic, u32 example count, u32 feature dim, u32 class
/// count, row-major f32 features, then u32 labels.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(DATASET_MAGIC)?;
    write_u32(&mut w, ds.len() as u32)?;
    write_u32(&mut w, ds.feature_dim() as u32)?;
    write_u32(&mut w, ds.num_classes() as u32)?;
    for &v in ds.features().data() {
        write_f32(&mut w, v as f32)?;
    }
    for &l in ds.labels() {
        write_u32(&mut w, l)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format(format!(
            "{}: expected dataset magic FDS1, found {:?}",
            path.display(),
            magic
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    let classes = read_u32(&mut r)? as usize;
    let mut features = Matrix::zeros(count, dim);
    for v in features.data_mut() {
        *v = read_f32(&mut r)? as f64;
    }
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        labels.push(read_u32(&mut r)?);
    }
    Dataset::new(features, labels, classes)
}

/// CSV ingestion: header row, numeric feature columns, integer label in the
/// last column. The class count is `max(label) + 1`.
pub fn read_csv_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty CSV", path.display())))?;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(Error::Format(
            "CSV needs at least one feature and a label column".into(),
        ));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Format(format!(
                "CSV line {}: {} fields, header has {}",
                lineno + 2,
                fields.len(),
                cols
            )));
        }
        let mut row = Vec::with_capacity(cols - 1);
        for f in &fields[..cols - 1] {
            row.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("CSV line {}: `{f}`: {e}", lineno + 2)))?,
            );
        }
        labels.push(fields[cols - 1].trim().parse::<u32>().map_err(|e| {
            Error::Format(format!(
                "CSV line {}: label `{}`: {e}",
                lineno + 2,
                fields[cols - 1]
            ))
        })?);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("CSV has a header but no data rows".into()));
    }
    let classes = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    Dataset::new(Matrix::from_rows(&rows)?, labels, classes)
}

/// Dispatch on extension: `.csv` goes through the text path, everything else
/// is treated as an FDS1 container.
pub fn read_dataset_auto(path: &Path) -> Result<Dataset> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv_dataset(path),
        _ => read_dataset(path),
    }
}

/// Deterministic shuffled split into train and test sets.
pub fn split_train_test(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::field("test_split", "must be in (0, 1)"));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = stream(seed, &[tag::DATA, 99]);
    order.shuffle(&mut rng);
    let n_test = ((ds.len() as f64) * test_fraction).round() as usize;
    let n_test = n_test.clamp(1, ds.len().saturating_sub(1));
    let (test_idx, train_idx) = order.split_at(n_test);

    let take = |indices: &[usize]| -> Result<Dataset> {
        let mut features = Matrix::zeros(indices.len(), ds.feature_dim());
        let mut labels = Vec::with_capacity(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            features.row_mut(row).copy_from_slice(ds.features().row(i));
            labels.push(ds.labels()[i]);
        }
        Dataset::new(features, labels, ds.num_classes())
    };
    Ok((take(train_idx)?, take(test_idx)?))
}

/// Write a model snapshot: magic, u32 layer count, then per layer u32 rows,
/// u32 cols, row-major f32 weights, then the f32 bias vector.
pub fn write_model(path: &Path, params: &ParamStore) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MODEL_MAGIC)?;
    write_u32(&mut w, params.num_connections() as u32)?;
    for layer in params.layers() {
        write_u32(&mut w, layer.weights.rows() as u32)?;
        write_u32(&mut w, layer.weights.cols() as u32)?;
        for &v in layer.weights.data() {
            write_f32(&mut w, v as f32)?;
        }
        for &v in &layer.bias {
            write_f32(&mut w, v as f32)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ParamStore> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!(
            "{}: expected model magic FMD1, found {:?}",
            path.display(),
            magic
        )));
    }
    let n_layers = read_u32(&mut r)? as usize;
    if n_layers == 0 {
        return Err(Error::Format("model snapshot with zero layers".into()));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        let mut weights = Matrix::zeros(rows, cols);
        for v in weights.data_mut() {
            *v = read_f32(&mut r)? as f64;
        }
        let mut bias = Vec::with_capacity(rows);
        for _ in 0..rows {
            bias.push(read_f32(&mut r)? as f64);
        }
        layers.push(LayerParams { weights, bias });
    }
    ParamStore::from_layers(layers)
}


#[cfg(test)]
mod corruption_tests {
    use super::*;
    use crate::model::{init_params, ModelSpec};

    #[test]
    fn truncated_model_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fmd1");
        let spec = ModelSpec::new(3, vec![4], 2).unwrap();
        write_model(&path, &init_params(&spec, 1)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(read_model(&path).is_err());
    }

    #[test]
    fn truncated_dataset_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.fds");
        let ds = crate::data::gen_synthetic(2, 2, 5, 1.0, 1).unwrap();
        write_dataset(&path, &ds).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(read_dataset(&path).is_err());
    }
}
