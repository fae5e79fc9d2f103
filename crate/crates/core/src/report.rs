//! Per-trial JSON-lines records.

use serde::Serialize;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: u64,
    pub seed: u64,
    pub scheme: String,
    pub rate: f64,
    pub n: usize,
    /// One flag per receiver, in receiver order.
    pub success: Vec<bool>,
    pub slots_used: usize,
    /// Scheme-specific details.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl TrialReport {
    pub fn all_succeeded(&self) -> bool {
        self.success.iter().all(|&s| s)
    }
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_per_record() {
        let r = TrialReport {
            trial: 3,
            seed: 9,
            scheme: "rlc".into(),
            rate: 0.5,
            n: 10,
            success: vec![true, false],
            slots_used: 10,
            extra: serde_json::Value::Null,
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[r.clone(), r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"trial\":3,\"seed\":9,\"scheme\":\"rlc\""));
        assert!(!text.contains("extra"));
    }
}
