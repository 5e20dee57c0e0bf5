//! CSV form of a [`ScenarioResult`].

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::sweep::{ScenarioResult, SweepRow};

pub const COLUMNS: [&str; 15] = [
    "scenario_id",
    "axis_name",
    "axis_value",
    "packet_loss_effective",
    "success_rate",
    "ci_low",
    "ci_high",
    "latency_mean_ms",
    "latency_p50_ms",
    "latency_p95_ms",
    "msgs_per_txn",
    "model_p_succ",
    "model_expected_replies",
    "model_lower_bound",
    "switch_to_tcp",
];

fn real(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn cells(row: &SweepRow) -> [String; 15] {
    [
        row.scenario_id.clone(),
        row.axis_name.clone(),
        format!("{}", row.axis_value),
        real(row.packet_loss_effective),
        real(row.success_rate),
        real(row.ci_low),
        real(row.ci_high),
        real(row.latency_mean_ms),
        real(row.latency_p50_ms),
        real(row.latency_p95_ms),
        real(row.msgs_per_txn),
        real(row.model_p_succ),
        real(row.model_expected_replies),
        real(row.model_lower_bound),
        row.switch_to_tcp.map(|b| b.to_string()).unwrap_or_default(),
    ]
}

/// Header, then one line per row. Floats carry six decimals.
pub fn emit_csv<W: Write>(result: &ScenarioResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS)?;
    for row in &result.rows {
        w.write_record(cells(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(result: &ScenarioResult) -> String {
    let mut buf = Vec::new();
    emit_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

fn parse_real(cell: &str, column: &str, line: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse().map(Some).map_err(|_| Error::ResultFormat(format!("line {line}: {column} = {cell:?} is not a number")))
}

pub fn parse_csv<R: Read>(input: R) -> Result<ScenarioResult> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::ResultFormat(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let get = |c: usize| record.get(c).unwrap_or_default();
        let num = |c: usize| parse_real(get(c), COLUMNS[c], line);
        let axis_value = num(2)?.ok_or_else(|| Error::ResultFormat(format!("line {line}: axis_value is empty")))?;
        let switch_to_tcp = match get(14) {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(Error::ResultFormat(format!("line {line}: switch_to_tcp = {other:?}"))),
        };
        rows.push(SweepRow {
            scenario_id: get(0).to_string(),
            axis_name: get(1).to_string(),
            axis_value,
            packet_loss_effective: num(3)?,
            success_rate: num(4)?,
            ci_low: num(5)?,
            ci_high: num(6)?,
            latency_mean_ms: num(7)?,
            latency_p50_ms: num(8)?,
            latency_p95_ms: num(9)?,
            msgs_per_txn: num(10)?,
            model_p_succ: num(11)?,
            model_expected_replies: num(12)?,
            model_lower_bound: num(13)?,
            switch_to_tcp,
            error: None,
        });
    }
    Ok(ScenarioResult { rows })
}
