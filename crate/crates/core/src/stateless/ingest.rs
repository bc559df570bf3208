//! Reading the block/witness measurement CSV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Variable;
use crate::learning::Dataset;

use super::discretize::{discretize, BinMeta, BinSpec};

pub const BLOCK_NUMBER: &str = "block_number";

/// Measurement columns and the model variable each one quantifies.
pub const COLUMN_VARIABLES: [(&str, &str); 7] = [
    ("difficulty", "Difficulty"),
    ("gas_limit", "BlockGasLimit"),
    ("tx_count", "TransactionsPerBlock"),
    ("state_entries_updated", "StateEntriesUpdated"),
    ("block_creation_time_s", "BlockCreationTime"),
    ("witness_size_bytes", "WitnessSize"),
    ("witness_creation_time_s", "WitnessCreationTime"),
];

/// Raw numeric measurements, one vector per column of [`COLUMN_VARIABLES`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawBlocks {
    pub block_numbers: Vec<u64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl RawBlocks {
    pub fn len(&self) -> usize {
        self.block_numbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_numbers.is_empty()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Parses the CSV, rejecting missing, non-numeric or negative cells.
pub fn read_block_witness_csv(path: impl AsRef<Path>) -> Result<RawBlocks> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    let header = reader.headers().map_err(|e| Error::SchemaError(e.to_string()))?.clone();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let number_pos = position(BLOCK_NUMBER)?;
    let positions: Vec<usize> = COLUMN_VARIABLES.iter().map(|(c, _)| position(c)).collect::<Result<_>>()?;

    let mut block_numbers = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); COLUMN_VARIABLES.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::SchemaError(e.to_string()))?;
        let cell = |pos: usize| record.get(pos).unwrap_or("").trim();
        let number = cell(number_pos);
        block_numbers.push(number.parse::<u64>().map_err(|_| Error::UnparseableCell {
            row,
            column: BLOCK_NUMBER.to_string(),
            value: number.to_string(),
        })?);
        for (k, &pos) in positions.iter().enumerate() {
            let text = cell(pos);
            let value = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Error::UnparseableCell {
                    row,
                    column: COLUMN_VARIABLES[k].0.to_string(),
                    value: text.to_string(),
                })?;
            values[k].push(value);
        }
    }
    Ok(RawBlocks {
        block_numbers,
        columns: COLUMN_VARIABLES.iter().map(|(c, _)| c.to_string()).zip(values).collect(),
    })
}

/// Discretizes raw measurements into the given model variables.
pub fn to_dataset(raw: &RawBlocks, binned: &[(Variable, BinMeta)]) -> Result<Dataset> {
    let mut columns = Vec::with_capacity(binned.len());
    let mut per_column = Vec::with_capacity(binned.len());
    for (var, meta) in binned {
        let (csv_column, _) = COLUMN_VARIABLES
            .iter()
            .find(|(_, v)| *v == var.name)
            .ok_or_else(|| Error::MissingColumn(var.name.clone()))?;
        if meta.bin_count() != var.cardinality() {
            return Err(Error::SchemaError(format!(
                "`{}` has {} states but {} bins",
                var.name,
                var.cardinality(),
                meta.bin_count()
            )));
        }
        let d = discretize(csv_column, raw.column(csv_column)?, &BinSpec::Explicit(meta.clone()))?;
        columns.push(var.clone());
        per_column.push(d.states);
    }
    let rows = (0..raw.len()).map(|i| per_column.iter().map(|c| c[i]).collect()).collect();
    Dataset::new(columns, rows)
}

/// Reads and discretizes the CSV in one step.
pub fn ingest_block_witness_csv(path: impl AsRef<Path>, binned: &[(Variable, BinMeta)]) -> Result<Dataset> {
    to_dataset(&read_block_witness_csv(path)?, binned)
}
