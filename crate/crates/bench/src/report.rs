//! Result tables: CSV with a header row, or JSON with one object per line.

use std::io::Write;

use serde::Serialize;

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn write_records<T: Serialize>(out: impl Write, records: &[T], format: Format) -> Result<(), BenchError> {
    let io = |e: &dyn std::fmt::Display| BenchError::Io(e.to_string());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r).map_err(|e| io(&e))?;
            }
            w.flush().map_err(|e| io(&e))
        }
        Format::Json => {
            let mut out = out;
            for r in records {
                serde_json::to_writer(&mut out, r).map_err(|e| io(&e))?;
                out.write_all(b"\n").map_err(|e| io(&e))?;
            }
            out.flush().map_err(|e| io(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::BenchResult;

    fn row(n: usize) -> BenchResult {
        BenchResult {
            experiment: "gate-and".into(),
            n,
            size: 1,
            engine: "reference".into(),
            workers: 1,
            seconds: 0.0,
            single_gates: 1,
            compound_gates: 0,
            bootstraps: n as u64,
            batch_launches: 1,
            correct: true,
        }
    }

    #[test]
    fn csv_column_order() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[row(4)], Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,n,size,engine,workers,seconds,single_gates,compound_gates,bootstraps,batch_launches,correct"
        );
        assert_eq!(lines.next().unwrap(), "gate-and,4,1,reference,1,0.0,1,0,4,1,true");
    }

    #[test]
    fn json_one_object_per_row() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[row(4), row(8)], Format::Json).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let objs: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(objs.len(), 2);
        assert_eq!(objs[1]["n"], 8);
        assert_eq!(objs[0]["correct"], true);
    }
}
