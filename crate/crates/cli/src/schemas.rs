use std::path::Path;

use anyhow::Result;
use schemars::schema_for;
use serde_json::Value;

use crate::commands::*;
use crate::fetch::FetchOut;
use crate::output::{write_atomic, Report};
use psilab_core::amplifier::{ExperimentReport, PipelineConfig};
use psilab_core::bohr_geometry::{AverageReport, ExtensionReport};
use psilab_core::explicit_formula::{PigeonholeReport, TxReport};

/// Schema file version; bump when an output changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

pub fn file_name(stem: &str) -> String {
    format!("{stem}.v{SCHEMA_VERSION}.schema.json")
}

fn entry<R: Report>() -> (String, Value) {
    let schema = serde_json::to_value(schema_for!(R)).expect("schema serializes");
    (file_name(R::NAME), schema)
}

/// Every published schema, keyed by file name.
pub fn all() -> Vec<(String, Value)> {
    let mut v = vec![
        entry::<ZerosStats>(),
        entry::<PairCorrelationOut>(),
        entry::<PartitionOut>(),
        entry::<PsiBuild>(),
        entry::<PsiScan>(),
        entry::<MomentOut>(),
        entry::<LogMeasureOut>(),
        entry::<DistOut>(),
        entry::<SumOut>(),
        entry::<CompareOut>(),
        entry::<TxReport>(),
        entry::<PigeonholeReport>(),
        entry::<MeasureOut>(),
        entry::<CountOut>(),
        entry::<ExtensionReport>(),
        entry::<AverageReport>(),
        entry::<MajorantCheck>(),
        entry::<MajorantDump>(),
        entry::<ExperimentReport>(),
        entry::<FetchOut>(),
    ];
    v.push((
        file_name("pipeline-config"),
        serde_json::to_value(schema_for!(PipelineConfig)).expect("schema serializes"),
    ));
    v
}

pub fn write_all(dir: &Path) -> Result<usize> {
    let schemas = all();
    for (name, schema) in &schemas {
        let mut text = serde_json::to_string_pretty(schema)?;
        text.push('\n');
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(schemas.len())
}
