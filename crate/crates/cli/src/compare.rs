//! Side-by-side comparison of two stats files.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

/// The part of a stats file that `compare` reads.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CompareInput {
    pub laws: Vec<CompareBlock>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CompareBlock {
    pub law: String,
    pub time: Metric,
    pub miss: Metric,
    pub closing_velocity: Metric,
    pub fail_percent: f64,
}

/// `None` stands for a metric with no contributing trials.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Metric {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl CompareInput {
    pub fn from_json(text: &str, file: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema {
            file: file.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// One table cell: left value, right value, right minus left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

impl Cell {
    pub fn delta(&self) -> Option<f64> {
        Some(self.right? - self.left?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawComparison {
    pub left_law: String,
    pub right_law: String,
    /// `[time, miss, closing velocity]` averages.
    pub avg: [Cell; 3],
    pub std: [Cell; 3],
    pub fail_percent: Cell,
}

pub const METRIC_LABELS: [&str; 3] = ["Time (s)", "Miss (m)", "Closing Vel. (m/s)"];
const METRIC_KEYS: [&str; 3] = ["time", "miss", "closing_velocity"];

pub const COMPARE_HEADER: [&str; 7] = ["left_law", "right_law", "row", "metric", "left", "right", "delta"];

fn metrics(b: &CompareBlock) -> [Metric; 3] {
    [b.time, b.miss, b.closing_velocity]
}

fn pair(l: &CompareBlock, r: &CompareBlock) -> LawComparison {
    let (lm, rm) = (metrics(l), metrics(r));
    LawComparison {
        left_law: l.law.clone(),
        right_law: r.law.clone(),
        avg: std::array::from_fn(|i| Cell {
            left: lm[i].mean,
            right: rm[i].mean,
        }),
        std: std::array::from_fn(|i| Cell {
            left: lm[i].std,
            right: rm[i].std,
        }),
        fail_percent: Cell {
            left: Some(l.fail_percent),
            right: Some(r.fail_percent),
        },
    }
}

/// Pairs blocks by law name when both files hold the same laws, or the two
/// blocks when each file holds exactly one.
pub fn compare(left: &CompareInput, right: &CompareInput) -> Result<Vec<LawComparison>, CliError> {
    fn names(c: &CompareInput) -> Vec<&str> {
        let mut v: Vec<&str> = c.laws.iter().map(|b| b.law.as_str()).collect();
        v.sort_unstable();
        v
    }
    if left.laws.is_empty() || right.laws.is_empty() {
        return Err(CliError::Schema {
            file: if left.laws.is_empty() { "left" } else { "right" }.into(),
            message: "no stats blocks".into(),
        });
    }
    if left.laws.len() == 1 && right.laws.len() == 1 {
        return Ok(vec![pair(&left.laws[0], &right.laws[0])]);
    }
    if names(left) != names(right) {
        return Err(CliError::Schema {
            file: "right".into(),
            message: format!(
                "guidance laws {:?} do not match left laws {:?}",
                names(right),
                names(left)
            ),
        });
    }
    Ok(left
        .laws
        .iter()
        .map(|l| {
            let r = right.laws.iter().find(|r| r.law == l.law).expect("same law set");
            pair(l, r)
        })
        .collect())
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "n/a".into(),
    }
}

/// Renders one block per law pair: Avg, Std and Fail rows against
/// Time/Miss/Closing Vel. columns, repeated for left, right and delta.
pub fn render_table(rows: &[LawComparison]) -> String {
    const LABEL: usize = 8;
    const W: usize = 20;
    const GROUP: usize = 3 * W;
    let mut out = String::new();
    for c in rows {
        let groups = [c.left_law.as_str(), c.right_law.as_str(), "delta"];
        let _ = write!(out, "{:<LABEL$}", "");
        for g in groups {
            let _ = write!(out, "|{g:^GROUP$}");
        }
        out.push('\n');
        let _ = write!(out, "{:<LABEL$}", "");
        for _ in groups {
            out.push('|');
            for label in METRIC_LABELS {
                let _ = write!(out, "{label:>W$}");
            }
        }
        out.push('\n');
        for (name, cells) in [("Avg", &c.avg), ("Std", &c.std)] {
            let _ = write!(out, "{name:<LABEL$}");
            for (_, get) in sides() {
                out.push('|');
                for cell in cells.iter() {
                    let _ = write!(out, "{:>W$}", fmt(get(cell)));
                }
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<LABEL$}", "Fail");
        for (_, get) in sides() {
            let v = get(&c.fail_percent).map_or("n/a".to_string(), |x| format!("{x:.4}%"));
            let _ = write!(out, "|{v:^GROUP$}");
        }
        out.push_str("\n\n");
    }
    out
}

type Getter = fn(&Cell) -> Option<f64>;

fn sides() -> [(&'static str, Getter); 3] {
    [("left", |c| c.left), ("right", |c| c.right), ("delta", |c| c.delta())]
}

pub fn write_compare_csv(path: &Path, rows: &[LawComparison]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(COMPARE_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for c in rows {
        let mut emit = |row: &str, metric: &str, cell: &Cell| {
            w.write_record([
                c.left_law.as_str(),
                c.right_law.as_str(),
                row,
                metric,
                &opt(cell.left),
                &opt(cell.right),
                &opt(cell.delta()),
            ])
        };
        for (i, key) in METRIC_KEYS.iter().enumerate() {
            emit("avg", key, &c.avg[i])?;
        }
        for (i, key) in METRIC_KEYS.iter().enumerate() {
            emit("std", key, &c.std[i])?;
        }
        emit("fail", "fail_percent", &c.fail_percent)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}
