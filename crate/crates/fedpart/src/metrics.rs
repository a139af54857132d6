//! Evaluation metrics, per-round records, and communication/computation cost
//! accounting.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PartitionPlan};
use crate::error::{Error, Result};
use crate::model::{forward, ParamStore};

/// Wire-format cost model: one 32-bit float per parameter plus a fixed
/// per-message header.
pub const BYTES_PER_VALUE: u64 = 4;
pub const PAYLOAD_HEADER_BYTES: u64 = 16;

pub fn payload_bytes(param_count: usize) -> u64 {
    param_count as u64 * BYTES_PER_VALUE + PAYLOAD_HEADER_BYTES
}

/// Argmax with ties broken toward the lowest class index.
fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of test examples whose argmax prediction matches the label.
pub fn global_accuracy(params: &ParamStore, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Invalid("empty test set".into()));
    }
    let mut correct = 0usize;
    // Evaluate in chunks to keep activation buffers small.
    let all: Vec<usize> = (0..test.len()).collect();
    for chunk in all.chunks(512) {
        let batch = test.batch_of(chunk)?;
        let (logits, _) = forward(params, &batch)?;
        for (row, &label) in (0..logits.rows()).zip(batch.labels()) {
            if argmax_lowest(logits.row(row)) == label as usize {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Accuracy of the global model on every client's own shard, plus summary
/// statistics and a 10-bin histogram for distribution plots.
#[derive(Debug, Clone)]
pub struct LocalAccuracyReport {
    pub per_client: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: [u32; 10],
}

pub fn local_accuracy(
    params: &ParamStore,
    plan: &PartitionPlan,
    ds: &Dataset,
) -> Result<LocalAccuracyReport> {
    if plan.num_clients() == 0 {
        return Err(Error::Invalid("partition has no clients".into()));
    }
    let mut per_client = Vec::with_capacity(plan.num_clients());
    for client in 0..plan.num_clients() {
        let shard = plan.shard(client);
        if shard.is_empty() {
            return Err(Error::EmptyShard(client as u64));
        }
        let batch = ds.batch_of(shard)?;
        let (logits, _) = forward(params, &batch)?;
        let mut correct = 0usize;
        for (row, &label) in (0..logits.rows()).zip(batch.labels()) {
            if argmax_lowest(logits.row(row)) == label as usize {
                correct += 1;
            }
        }
        per_client.push(correct as f64 / shard.len() as f64);
    }
    let mean = per_client.iter().sum::<f64>() / per_client.len() as f64;
    let min = per_client.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = per_client.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut histogram = [0u32; 10];
    for &a in &per_client {
        let bin = ((a * 10.0) as usize).min(9);
        histogram[bin] += 1;
    }
    Ok(LocalAccuracyReport {
        per_client,
        mean,
        min,
        max,
        histogram,
    })
}

/// One evaluation point of a run; serialised as one JSON object per line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsRecord {
    pub round: u64,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub global_accuracy: f64,
    pub local_accuracy_mean: f64,
    pub local_accuracy_min: f64,
    pub local_accuracy_max: f64,
    pub cumulative_payload_bytes: u64,
    pub seed: u64,
}

/// Cross-seed summary written as the last row of a metrics stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub summary: bool,
    pub seeds: Vec<u64>,
    pub final_global_accuracy_mean: f64,
    pub final_global_accuracy_std: f64,
    pub final_local_accuracy_mean: f64,
    pub final_train_loss_mean: f64,
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(finals: &[&MetricsRecord]) -> SummaryRecord {
    let acc: Vec<f64> = finals.iter().map(|r| r.global_accuracy).collect();
    let local: Vec<f64> = finals.iter().map(|r| r.local_accuracy_mean).collect();
    let loss: Vec<f64> = finals.iter().map(|r| r.train_loss).collect();
    let (acc_mean, acc_std) = mean_and_std(&acc);
    SummaryRecord {
        summary: true,
        seeds: finals.iter().map(|r| r.seed).collect(),
        final_global_accuracy_mean: acc_mean,
        final_global_accuracy_std: acc_std,
        final_local_accuracy_mean: mean_and_std(&local).0,
        final_train_loss_mean: mean_and_std(&loss).0,
    }
}

/// Write serialisable rows as line-delimited JSON, atomically (temp file in
/// the same directory, then rename).
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut file = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        for row in rows {
            let line = serde_json::to_string(row).map_err(|e| Error::Format(e.to_string()))?;
            file.write_all(line.as_bytes())?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(out)
}

/// What one client cost in one round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientCost {
    pub client_id: u64,
    pub param_count: usize,
    /// Multiply-accumulates per example for this sub-model (dense layer =
    /// rows x cols).
    pub macs_per_example: u64,
    pub payload_bytes: u64,
}

/// Per-round cohort costs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RoundTrace {
    pub clients: Vec<ClientCost>,
}

/// Cost trace of a whole run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub rounds: Vec<RoundTrace>,
}

/// Averages over all (round, participating client) pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub avg_params_per_client: f64,
    pub avg_macs_per_client: f64,
    pub avg_payload_bytes_per_client: f64,
    pub rounds: usize,
    pub client_rounds: usize,
}

pub fn cost_report(trace: &RunTrace) -> Result<CostReport> {
    let entries: Vec<&ClientCost> = trace.rounds.iter().flat_map(|r| r.clients.iter()).collect();
    if entries.is_empty() {
        return Err(Error::Invalid("empty run trace".into()));
    }
    let n = entries.len() as f64;
    Ok(CostReport {
        avg_params_per_client: entries.iter().map(|c| c.param_count as f64).sum::<f64>() / n,
        avg_macs_per_client: entries
            .iter()
            .map(|c| c.macs_per_example as f64)
            .sum::<f64>()
            / n,
        avg_payload_bytes_per_client: entries.iter().map(|c| c.payload_bytes as f64).sum::<f64>()
            / n,
        rounds: trace.rounds.len(),
        client_rounds: entries.len(),
    })
}
