//! Cleartext regression datasets: CSV ingestion and the synthetic grid.
//!
//! CSV schema: one header row, integer cells, the last column is the target.

use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

/// Numerical generator values lie in `[0, 2^NUMERIC_BITS)`.
pub const NUMERIC_BITS: u32 = 7;

/// `(rows, attributes)` shapes of the synthetic grid.
pub const GRID_SHAPES: [(usize, usize); 4] = [(200, 10), (200, 20), (300, 10), (300, 20)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ValueKind {
    Numerical,
    Binary,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Numerical => "numerical",
            ValueKind::Binary => "binary",
        }
    }
}

impl FromStr for ValueKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "numerical" => Ok(ValueKind::Numerical),
            "binary" => Ok(ValueKind::Binary),
            _ => Err(BenchError::Usage(format!("unknown value kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: ValueKind,
    pub header: Vec<String>,
    /// Row-major design matrix, `rows x attributes`.
    pub x: Vec<Vec<i64>>,
    pub y: Vec<i64>,
}

impl Dataset {
    pub fn new(kind: ValueKind, header: Vec<String>, x: Vec<Vec<i64>>, y: Vec<i64>) -> Result<Self, BenchError> {
        let rows = x.len();
        let d = x.first().map_or(0, Vec::len);
        if d == 0 || rows == 0 {
            return Err(BenchError::Usage("dataset needs at least one row and one attribute".into()));
        }
        if x.iter().any(|r| r.len() != d) || y.len() != rows {
            return Err(BenchError::Usage("ragged dataset".into()));
        }
        if kind == ValueKind::Binary && x.iter().flatten().chain(&y).any(|&v| v != 0 && v != 1) {
            return Err(BenchError::Usage("binary dataset contains values other than 0 and 1".into()));
        }
        Ok(Self { kind, header, x, y })
    }

    pub fn rows(&self) -> usize {
        self.x.len()
    }

    pub fn attributes(&self) -> usize {
        self.x[0].len()
    }

    pub fn read_csv(reader: impl Read, kind: ValueKind) -> Result<Self, BenchError> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = csv
            .headers()
            .map_err(|e| BenchError::Data(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        if header.len() < 2 {
            return Err(BenchError::Data("need at least one feature column and a target column".into()));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, record) in csv.records().enumerate() {
            let record = record.map_err(|e| BenchError::Data(e.to_string()))?;
            let mut cells = record
                .iter()
                .map(|c| {
                    c.parse::<i64>().map_err(|_| {
                        BenchError::Data(format!("row {}: {c:?} is not an integer", line + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let target = cells.pop().expect("csv enforces the header width");
            x.push(cells);
            y.push(target);
        }
        Self::new(kind, header, x, y)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<(), BenchError> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(&self.header).map_err(|e| BenchError::Io(e.to_string()))?;
        for (row, target) in self.x.iter().zip(&self.y) {
            let cells = row.iter().chain(std::iter::once(target)).map(i64::to_string);
            csv.write_record(cells).map_err(|e| BenchError::Io(e.to_string()))?;
        }
        csv.flush().map_err(|e| BenchError::Io(e.to_string()))
    }

    /// Fixed-seed synthetic data. Numerical: `x` uniform in `[0, 2^7)`,
    /// `y = sum_i ((i mod 5) + 1) * x_i`. Binary: `x` uniform bits, `y = x_0`.
    pub fn synthetic(rows: usize, attributes: usize, kind: ValueKind, seed: u64) -> Result<Self, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let high = match kind {
            ValueKind::Numerical => 1 << NUMERIC_BITS,
            ValueKind::Binary => 2,
        };
        let x: Vec<Vec<i64>> = (0..rows)
            .map(|_| (0..attributes).map(|_| rng.random_range(0..high)).collect())
            .collect();
        let y = x
            .iter()
            .map(|r| match kind {
                ValueKind::Numerical => r.iter().enumerate().map(|(i, v)| ((i % 5) as i64 + 1) * v).sum(),
                ValueKind::Binary => r[0],
            })
            .collect();
        let mut header: Vec<String> = (1..=attributes).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        Self::new(kind, header, x, y)
    }

    /// `X^T X` and `X^T y` in exact integer arithmetic.
    pub fn cleartext_aggregates(&self) -> (Vec<Vec<i128>>, Vec<i128>) {
        let d = self.attributes();
        let col = |j: usize| self.x.iter().map(move |r| r[j] as i128);
        let xtx = (0..d)
            .map(|i| (0..d).map(|j| col(i).zip(col(j)).map(|(a, b)| a * b).sum()).collect())
            .collect();
        let xty = (0..d)
            .map(|i| col(i).zip(&self.y).map(|(a, &b)| a * b as i128).sum())
            .collect();
        (xtx, xty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let text = "a, b ,target\n1,2,8\n3,-4,-6\n";
        let ds = Dataset::read_csv(text.as_bytes(), ValueKind::Numerical).unwrap();
        assert_eq!(ds.x, vec![vec![1, 2], vec![3, -4]]);
        assert_eq!(ds.y, vec![8, -6]);
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,b,target\n1,2,8\n3,-4,-6\n");
    }

    #[test]
    fn csv_rejects_malformed_input() {
        for bad in ["y\n1\n", "a,y\n1,x\n", "a,y\n1,2,3\n", "a,y\n"] {
            assert!(Dataset::read_csv(bad.as_bytes(), ValueKind::Numerical).is_err(), "{bad:?}");
        }
        assert!(Dataset::read_csv("a,y\n2,1\n".as_bytes(), ValueKind::Binary).is_err());
    }

    #[test]
    fn synthetic_grid_shapes_and_ranges() {
        for (rows, d) in GRID_SHAPES {
            let num = Dataset::synthetic(rows, d, ValueKind::Numerical, 1).unwrap();
            assert_eq!((num.rows(), num.attributes()), (rows, d));
            assert!(num.x.iter().flatten().all(|&v| (0..128).contains(&v)));
            let bin = Dataset::synthetic(rows, d, ValueKind::Binary, 1).unwrap();
            assert!(bin.x.iter().zip(&bin.y).all(|(r, &y)| r[0] == y));
        }
        assert_eq!(
            Dataset::synthetic(10, 3, ValueKind::Numerical, 5).unwrap(),
            Dataset::synthetic(10, 3, ValueKind::Numerical, 5).unwrap()
        );
    }

    #[test]
    fn aggregates_by_hand() {
        let ds = Dataset::new(
            ValueKind::Numerical,
            vec![],
            vec![vec![1, 2], vec![3, 4], vec![5, 6]],
            vec![1, 0, 2],
        )
        .unwrap();
        let (xtx, xty) = ds.cleartext_aggregates();
        assert_eq!(xtx, vec![vec![35, 44], vec![44, 56]]);
        assert_eq!(xty, vec![11, 14]);
    }
}
