//! The two binary containers: FDS1 datasets and FMD1 model snapshots, plus
//! the CSV ingestion path.
//!
//! ```bash
//! cargo run -p fedpart --example model_files
//! ```

use fedpart::data::gen_synthetic;
use fedpart::io::{read_csv_dataset, read_dataset, read_model, write_dataset, write_model};
use fedpart::model::{init_params, ModelSpec};

fn main() -> fedpart::Result<()> {
    let dir = std::env::temp_dir().join("fedpart_model_files");
    std::fs::create_dir_all(&dir)?;

    // Dataset container: magic FDS1, u32 counts, f32 features, u32 labels.
    let ds = gen_synthetic(4, 6, 25, 1.0, 13)?;
    let ds_path = dir.join("demo.fds");
    write_dataset(&ds_path, &ds)?;
    let back = read_dataset(&ds_path)?;
    println!(
        "dataset {} -> {} bytes, {} examples x {} features, {} classes",
        ds_path.display(),
        std::fs::metadata(&ds_path)?.len(),
        back.len(),
        back.feature_dim(),
        back.num_classes()
    );

    // CSV path: header row, label in the last column.
    let csv_path = dir.join("demo.csv");
    std::fs::write(&csv_path, "x0,x1,label\n0.5,1.5,0\n-1.0,2.0,1\n3.0,0.0,1\n")?;
    let csv = read_csv_dataset(&csv_path)?;
    println!(
        "csv {} -> {} examples, {} classes",
        csv_path.display(),
        csv.len(),
        csv.num_classes()
    );

    // Model snapshot: magic FMD1, per layer rows/cols, f32 weights and bias.
    let spec = ModelSpec::new(6, vec![12, 8], 4)?;
    let params = init_params(&spec, 3);
    let model_path = dir.join("demo.fmd1");
    write_model(&model_path, &params)?;
    let restored = read_model(&model_path)?;
    println!(
        "model {} -> {} bytes, {} connections, {} params",
        model_path.display(),
        std::fs::metadata(&model_path)?.len(),
        restored.num_connections(),
        restored.param_count()
    );
    Ok(())
}
