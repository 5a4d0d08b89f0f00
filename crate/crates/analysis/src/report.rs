use std::collections::BTreeSet;
use std::fmt::Write;

use num_rational::Ratio;
use setrules_core::Constant;

use crate::Pair;

pub const CSV_COLUMNS: [&str; 8] = [
    "defined",
    "extending",
    "roots",
    "max_height",
    "roots_max_h",
    "desc",
    "max_desc",
    "roots_max_d",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisReport {
    pub defined: BTreeSet<Constant>,
    pub extending: BTreeSet<Pair>,
    pub num_defined: usize,
    pub num_extending: usize,
    pub avg_extending: Option<Ratio<u64>>,
    pub roots: BTreeSet<Constant>,
    pub max_height: u64,
    pub roots_max_height: BTreeSet<Constant>,
    pub desc: BTreeSet<Pair>,
    pub max_desc: u64,
    pub roots_max_desc: BTreeSet<Constant>,
}

/// Decimal rendering rounded half up to three places.
pub(crate) fn three_places(r: Ratio<u64>) -> String {
    let (n, d) = (*r.numer() as u128, *r.denom() as u128);
    let scaled = (n * 2000 + d) / (2 * d);
    format!("{}.{:03}", scaled / 1000, scaled % 1000)
}

fn names(set: &BTreeSet<Constant>) -> String {
    set.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

impl AnalysisReport {
    /// Counts in CSV column order.
    pub fn counts(&self) -> [u64; 8] {
        [
            self.num_defined as u64,
            self.num_extending as u64,
            self.roots.len() as u64,
            self.max_height,
            self.roots_max_height.len() as u64,
            self.desc.len() as u64,
            self.max_desc,
            self.roots_max_desc.len() as u64,
        ]
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.counts().map(|c| c.to_string()).join(",")
    }

    /// `key = value` lines; the average is omitted when no class is defined.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let counts = self.counts();
        for (key, value) in CSV_COLUMNS.iter().zip(counts).take(2) {
            let _ = writeln!(out, "{key} = {value}");
        }
        if let Some(avg) = self.avg_extending {
            let _ = writeln!(out, "avg_extending = {}", three_places(avg));
        }
        for (key, value) in CSV_COLUMNS.iter().zip(counts).skip(2) {
            let _ = writeln!(out, "{key} = {value}");
        }
        let _ = writeln!(out, "roots_max_height_names = {}", names(&self.roots_max_height));
        let _ = writeln!(out, "roots_max_desc_names = {}", names(&self.roots_max_desc));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(three_places(Ratio::new(1, 2)), "0.500");
        assert_eq!(three_places(Ratio::new(419, 519)), "0.807");
        assert_eq!(three_places(Ratio::new(2, 3)), "0.667");
        assert_eq!(three_places(Ratio::new(1, 2000)), "0.001");
        assert_eq!(three_places(Ratio::new(7, 1)), "7.000");
    }
}
