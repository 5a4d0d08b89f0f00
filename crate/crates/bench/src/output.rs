use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::timing::{Phase, TimingRecord};
use crate::BenchError;

pub const CSV_HEADER: [&str; 8] = [
    "benchmark",
    "variant",
    "size_param",
    "phase",
    "cpu_seconds_mean",
    "runs",
    "result_size",
    "seed",
];

/// Writes the records as CSV, stably sorted by benchmark, size and phase.
pub fn write_csv<W: Write>(out: W, records: &[TimingRecord]) -> Result<(), BenchError> {
    let mut sorted: Vec<&TimingRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.benchmark.as_str(), a.size_param, a.phase).cmp(&(b.benchmark.as_str(), b.size_param, b.phase))
    });
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in sorted {
        w.write_record([
            r.benchmark.clone(),
            r.variant.clone(),
            r.size_param.to_string(),
            r.phase.name().to_owned(),
            format!("{:.6}", r.cpu_seconds_mean),
            r.runs.to_string(),
            r.result_size.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot data: one indexed block per variant of `size cpu_seconds` rows
/// for `phase`, blocks separated by two blank lines.
pub fn plot_data(records: &[TimingRecord], phase: Phase) -> String {
    let mut series: BTreeMap<&str, BTreeMap<u64, f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.phase == phase) {
        series.entry(&r.variant).or_default().insert(r.size_param, r.cpu_seconds_mean);
    }
    let mut out = String::new();
    for (i, (variant, points)) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {variant}");
        for (size, secs) in points {
            let _ = writeln!(out, "{size} {secs:.6}");
        }
    }
    out
}

/// A gnuplot script drawing every block of `data_file` as a line.
pub fn plot_script(data_file: &str, records: &[TimingRecord], phase: Phase, image: &str) -> String {
    let variants: std::collections::BTreeSet<&str> =
        records.iter().filter(|r| r.phase == phase).map(|r| r.variant.as_str()).collect();
    let mut out = format!(
        "set terminal pngcairo size 800,500\nset output '{image}'\nset xlabel 'size'\nset ylabel 'CPU seconds ({phase})'\nset key left top\nplot "
    );
    let lines: Vec<String> = variants
        .iter()
        .enumerate()
        .map(|(i, v)| format!("'{data_file}' index {i} with linespoints title '{v}'"))
        .collect();
    out.push_str(&lines.join(", \\\n     "));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(variant: &str, size: u64, phase: Phase, secs: f64) -> TimingRecord {
        TimingRecord {
            benchmark: "rbac".into(),
            variant: variant.into(),
            size_param: size,
            phase,
            cpu_seconds_mean: secs,
            runs: 1,
            result_size: 0,
            seed: 7,
            noise_bound: 0.0,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "benchmark,variant,size_param,phase,cpu_seconds_mean,runs,result_size,seed\n"
        );
    }

    #[test]
    fn csv_rows_are_sorted_stably() {
        let records: Vec<TimingRecord> = (0..10)
            .map(|i| {
                let phase = if i % 2 == 0 { Phase::Total } else { Phase::Eval };
                rec(if i < 5 { "b" } else { "a" }, 100 - (i / 4) * 50, phase, i as f64)
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 10);
        let keys: Vec<(u64, &str)> = rows
            .iter()
            .map(|r| {
                let f: Vec<&str> = r.split(',').collect();
                (f[2].parse().unwrap(), f[3])
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|&(size, phase)| (size, phase == "total"));
        assert_eq!(keys, sorted);
    }

    #[test]
    fn ties_keep_input_order() {
        let records = vec![rec("z", 1, Phase::Total, 0.0), rec("a", 1, Phase::Total, 0.0)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let variants: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(variants, ["z", "a"]);
    }

    #[test]
    fn one_block_per_variant() {
        let records: Vec<TimingRecord> = ["nonlocal", "union", "alllocal"]
            .iter()
            .flat_map(|v| [50, 100].map(|n| rec(v, n, Phase::Total, n as f64 / 100.0)))
            .collect();
        let data = plot_data(&records, Phase::Total);
        assert_eq!(data.matches("# ").count(), 3);
        assert_eq!(data.split("\n\n\n").count(), 3);
        let script = plot_script("rbac.dat", &records, Phase::Total, "rbac.png");
        assert!(script.contains("index 2"));
    }
}
