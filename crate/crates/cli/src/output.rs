use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::Format;

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn fmt9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

/// A dataset row with a fixed CSV layout.
pub trait Row: Serialize {
    const HEADER: &'static str;
    fn csv(&self, out: &mut String);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArenaRow {
    pub step: usize,
    pub run: usize,
    pub player: usize,
    pub action: usize,
    pub prob: f64,
    pub sampled: bool,
    pub reward: f64,
}

impl Row for ArenaRow {
    const HEADER: &'static str = "step,run,player,action,prob,sampled,reward";
    fn csv(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.step,
            self.run,
            self.player,
            self.action,
            fmt9(self.prob),
            u8::from(self.sampled),
            fmt9(self.reward)
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub t: f64,
    pub p: f64,
    pub q: f64,
    pub algorithm: String,
}

impl Row for PhaseRow {
    const HEADER: &'static str = "t,p,q,algorithm";
    fn csv(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt9(self.t),
            fmt9(self.p),
            fmt9(self.q),
            self.algorithm
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtstRow {
    pub window_end: u64,
    /// Empty when nothing completed in the window.
    pub atst: Option<f64>,
    pub completed: usize,
    pub max_hops: u32,
}

impl Row for AtstRow {
    const HEADER: &'static str = "window_end,atst,completed,max_hops";
    fn csv(&self, out: &mut String) {
        let atst = self.atst.map(fmt9).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            self.window_end, atst, self.completed, self.max_hops
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub p_star: f64,
    pub q_star: f64,
    pub max_late_distance: f64,
}

impl Row for GridRow {
    const HEADER: &'static str = "p_star,q_star,max_late_distance";
    fn csv(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt9(self.p_star),
            fmt9(self.q_star),
            fmt9(self.max_late_distance)
        );
    }
}

/// Writes `rows` to `dir/stem.csv` or `dir/stem.json`.
pub fn write_rows<R: Row>(
    dir: &Path,
    stem: &str,
    rows: &[R],
    format: Format,
) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (path, body) = match format {
        Format::Csv => {
            let mut body = String::with_capacity(64 * (rows.len() + 1));
            body.push_str(R::HEADER);
            body.push('\n');
            for r in rows {
                r.csv(&mut body);
            }
            (dir.join(format!("{stem}.csv")), body)
        }
        Format::Json => (
            dir.join(format!("{stem}.json")),
            serde_json::to_string(rows)?,
        ),
    };
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_summary<S: Serialize>(dir: &Path, summary: &S) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(summary)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(0.1), "0.1");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt9(123456.7891), "123456.789");
        assert_eq!(fmt9(-1.0), "-1");
        assert_eq!(fmt9(0.0), "0");
    }

    #[test]
    fn csv_lines() {
        let mut s = String::new();
        ArenaRow {
            step: 3,
            run: 1,
            player: 0,
            action: 1,
            prob: 0.25,
            sampled: true,
            reward: -1.0,
        }
        .csv(&mut s);
        AtstRow {
            window_end: 500,
            atst: None,
            completed: 0,
            max_hops: 0,
        }
        .csv(&mut s);
        assert_eq!(s, "3,1,0,1,0.25,1,-1\n500,,0,0\n");
    }
}
