use super::{
    converse_upper_curve, joint_lower_bound, joint_lower_points, separate_lower_bound, separate_lower_points,
    single_weak_bounds, two_user_two_file_bounds, BoundsError, PiecewiseLinearBound,
};
use crate::model::NetworkConfig;
use serde_json::json;

/// Memory grid for [`bounds_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpec {
    /// Evenly spaced points over the nontrivial range, endpoints included.
    Points(usize),
    /// The memories of the joint lower-bound breakpoints.
    Breakpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Formats with six significant digits, trailing zeros removed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn eval_or_nan(b: &PiecewiseLinearBound, m: f64) -> f64 {
    b.eval(m).unwrap_or(f64::NAN)
}

/// Tabulates every applicable bound over a memory grid.
///
/// Columns are `M, lower_joint, lower_separate, upper`, followed by
/// `single_weak_lower, single_weak_upper` when `K_w = 1` and
/// `two_user_lower, two_user_upper` when additionally `K_s = 1, D = 2`.
pub fn bounds_table(config: &NetworkConfig, grid: GridSpec) -> Result<BoundsTable, BoundsError> {
    let config = config.validate()?.config;
    let joint = joint_lower_bound(&config)?;
    let sep = separate_lower_bound(&config)?;
    let upper = converse_upper_curve(&config)?;
    let top = config.trivial_memory().ok_or(BoundsError::NoStrongReceivers)?;
    let memories: Vec<f64> = match grid {
        GridSpec::Points(0) => return Err(BoundsError::Invalid("grid needs at least one point".into())),
        GridSpec::Points(1) => vec![0.0],
        GridSpec::Points(n) => (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect(),
        GridSpec::Breakpoints => joint_lower_points(&config)?.iter().map(|p| p.memory).collect(),
    };
    let mut columns: Vec<String> = ["M", "lower_joint", "lower_separate", "upper"].map(String::from).to_vec();
    let mut extra: Vec<PiecewiseLinearBound> = Vec::new();
    if config.k_weak == 1 {
        let b = single_weak_bounds(&config)?;
        columns.extend(["single_weak_lower", "single_weak_upper"].map(String::from));
        extra.extend([b.lower, b.upper]);
        if config.k_strong == 1 && config.num_files == 2 {
            let b = two_user_two_file_bounds(&config)?;
            columns.extend(["two_user_lower", "two_user_upper"].map(String::from));
            extra.extend([b.lower, b.upper]);
        }
    }
    let rows = memories
        .into_iter()
        .map(|m| {
            let mut row = vec![m, eval_or_nan(&joint, m), eval_or_nan(&sep, m), eval_or_nan(&upper, m)];
            row.extend(extra.iter().map(|b| eval_or_nan(b, m)));
            row
        })
        .collect();
    Ok(BoundsTable { columns, rows })
}

impl BoundsTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_sig6(v))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("ascii output")
    }

    /// Fixed-width text rendering.
    pub fn to_pretty(&self) -> String {
        let cells: Vec<Vec<String>> = std::iter::once(self.columns.clone())
            .chain(self.rows.iter().map(|r| r.iter().map(|&v| format_sig6(v)).collect()))
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &cells {
            let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

pub fn parse_bounds_csv(text: &str) -> Result<BoundsTable, BoundsError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| BoundsError::Invalid(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| BoundsError::Invalid(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| BoundsError::Invalid(format!("{s}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(BoundsTable { columns, rows })
}

/// Breakpoint lists of every applicable bound.
pub fn bounds_json(config: &NetworkConfig) -> Result<serde_json::Value, BoundsError> {
    let config = config.validate()?.config;
    let mut v = json!({
        "config": config,
        "joint_points": joint_lower_points(&config)?,
        "separate_points": separate_lower_points(&config)?,
        "lower_joint": joint_lower_bound(&config)?.breakpoints(),
        "lower_separate": separate_lower_bound(&config)?.breakpoints(),
        "upper": converse_upper_curve(&config)?.breakpoints(),
    });
    if config.k_weak == 1 {
        v["single_weak"] = serde_json::to_value(single_weak_bounds(&config)?).expect("serializable");
        if config.k_strong == 1 && config.num_files == 2 {
            v["two_user"] = serde_json::to_value(two_user_two_file_bounds(&config)?).expect("serializable");
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(0.25), "0.25");
        assert_eq!(format_sig6(2.054794520547945), "2.05479");
        assert_eq!(format_sig6(25.0), "25");
        assert_eq!(format_sig6(123456789.0), "1.23457e8");
        assert_eq!(format_sig6(-0.000012345678), "-1.23457e-5");
        assert_eq!(format_sig6(0.0001234567), "0.000123457");
        assert_eq!(format_sig6(999999.7), "1e6");
    }

    proptest! {
        #[test]
        fn sig6_is_stable_under_reparse(x in -1e9f64..1e9) {
            let s = format_sig6(x);
            let y: f64 = s.parse().unwrap();
            prop_assert_eq!(format_sig6(y), s);
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        for name in crate::model::PRESETS {
            let c = NetworkConfig::preset(name).unwrap();
            let csv1 = bounds_table(&c, GridSpec::Points(37)).unwrap().to_csv();
            let csv2 = parse_bounds_csv(&csv1).unwrap().to_csv();
            assert_eq!(csv1, csv2);
        }
    }

    #[test]
    fn breakpoint_grid_reproduces_fig5_joint_table() {
        let c = NetworkConfig::preset("fig5").unwrap();
        let t = bounds_table(&c, GridSpec::Breakpoints).unwrap();
        let want = [(0.0, 0.25), (2.0548, 0.3836), (6.8681, 0.4505), (12.6386, 0.4789), (18.75, 0.4926), (25.0, 0.5)];
        assert_eq!(t.rows.len(), want.len());
        for (row, (m, r)) in t.rows.iter().zip(want) {
            assert!((row[0] - m).abs() < 1e-3 && (row[1] - r).abs() < 1e-3);
        }
    }

    #[test]
    fn topology_columns() {
        let t = bounds_table(&NetworkConfig::preset("fig8").unwrap(), GridSpec::Points(5)).unwrap();
        assert!(t.columns.iter().any(|c| c == "two_user_upper"));
        assert!(t.columns.iter().any(|c| c == "single_weak_lower"));
        let t = bounds_table(&NetworkConfig::preset("fig7").unwrap(), GridSpec::Points(5)).unwrap();
        assert!(t.columns.iter().any(|c| c == "single_weak_lower"));
        assert!(!t.columns.iter().any(|c| c == "two_user_lower"));
        let t = bounds_table(&NetworkConfig::preset("fig5").unwrap(), GridSpec::Points(5)).unwrap();
        assert_eq!(t.columns.len(), 4);
        assert!(bounds_table(&NetworkConfig::preset("fig5").unwrap(), GridSpec::Points(0)).is_err());
    }
}
