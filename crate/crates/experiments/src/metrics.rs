use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ExpError, ExpResult};

/// One CSV row: a model evaluated at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub task: String,
    pub model: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub final_loss: f64,
    pub wall_ms: u64,
    /// Only present when several seeds were averaged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_acc_std: Option<f64>,
}

pub const HEADER: &str = "task,model,sweep_name,sweep_value,seed,train_acc,test_acc,final_loss,wall_ms";

pub fn write_csv(rows: &[MetricRow], out: impl Write) -> ExpResult<()> {
    let with_std = rows.iter().any(|r| r.test_acc_std.is_some());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header: Vec<&str> = HEADER.split(',').collect();
    if with_std {
        header.push("test_acc_std");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.task.clone(),
            r.model.clone(),
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.seed.to_string(),
            r.train_acc.to_string(),
            r.test_acc.to_string(),
            r.final_loss.to_string(),
            r.wall_ms.to_string(),
        ];
        if with_std {
            rec.push(r.test_acc_std.map(|s| s.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| ExpError::io("<csv output>", e))?;
    Ok(())
}

pub fn csv_string(rows: &[MetricRow]) -> ExpResult<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

pub fn save_csv(rows: &[MetricRow], path: &Path) -> ExpResult<()> {
    std::fs::write(path, csv_string(rows)?).map_err(|e| ExpError::io(path, e))
}

pub fn read_csv(path: &Path) -> ExpResult<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> ExpResult<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let expected: Vec<&str> = HEADER.split(',').collect();
    if header.iter().take(expected.len()).ne(expected.iter().copied()) {
        return Err(ExpError::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: MetricRow = rec?;
        rows.push(row);
    }
    Ok(rows)
}

/// Collapse rows that differ only in seed into their mean, with the
/// standard deviation of the test accuracy. The seed column keeps the first seed.
pub fn aggregate(rows: &[MetricRow]) -> Vec<MetricRow> {
    let mut out: Vec<(MetricRow, Vec<f64>)> = Vec::new();
    for r in rows {
        let key = |o: &MetricRow| o.task == r.task && o.model == r.model && o.sweep_name == r.sweep_name && o.sweep_value == r.sweep_value;
        match out.iter_mut().find(|(o, _)| key(o)) {
            Some((o, accs)) => {
                o.train_acc += r.train_acc;
                o.final_loss += r.final_loss;
                o.wall_ms += r.wall_ms;
                accs.push(r.test_acc);
            }
            None => out.push((r.clone(), vec![r.test_acc])),
        }
    }
    out.into_iter()
        .map(|(mut o, accs)| {
            let k = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / k;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k;
            o.train_acc /= k;
            o.final_loss /= k;
            o.wall_ms /= accs.len() as u64;
            o.test_acc = mean;
            o.test_acc_std = Some(var.sqrt());
            o
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, value: f64, seed: u64, acc: f64) -> MetricRow {
        MetricRow {
            task: "synth-n-sweep".into(),
            model: model.into(),
            sweep_name: "n".into(),
            sweep_value: value,
            seed,
            train_acc: 1.0,
            test_acc: acc,
            final_loss: 0.25,
            wall_ms: 0,
            test_acc_std: None,
        }
    }

    #[test]
    fn round_trip() {
        let rows = vec![row("hvn", 24.0, 0, 0.875), row("mlp", 8.0, 0, 0.5)];
        let text = csv_string(&rows).unwrap();
        assert!(text.starts_with(&format!("{HEADER}\n")));
        assert_eq!(parse_csv(&text).unwrap(), rows);
    }

    #[test]
    fn aggregation() {
        let rows = vec![row("hvn", 24.0, 0, 0.8), row("hvn", 24.0, 1, 0.6), row("mlp", 24.0, 0, 0.5)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert!((agg[0].test_acc - 0.7).abs() < 1e-12);
        assert!((agg[0].test_acc_std.unwrap() - 0.1).abs() < 1e-12);
        let text = csv_string(&agg).unwrap();
        assert!(text.lines().next().unwrap().ends_with(",test_acc_std"));
        assert_eq!(parse_csv(&text).unwrap(), agg);
    }

    #[test]
    fn bad_header() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }
}
