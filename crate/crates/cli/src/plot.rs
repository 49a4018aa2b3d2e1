//! Gnuplot-ready per-level files from a trajectory CSV.

use std::fs;
use std::path::{Path, PathBuf};

use fastreact::io::{read_levels, LevelTable};

use crate::error::{CliError, CliResult};

/// Which levels to extract.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelSelection {
    All,
    /// Level indices; `None` stands for the last level present.
    Listed(Vec<Option<usize>>),
}

impl LevelSelection {
    /// Parses `all` or a comma list of indices and `last`.
    pub fn parse(text: &str) -> CliResult<Self> {
        if text.trim() == "all" {
            return Ok(LevelSelection::All);
        }
        text.split(',')
            .map(|s| match s.trim() {
                "last" => Ok(None),
                t => t
                    .parse()
                    .map(Some)
                    .map_err(|_| CliError::Input(format!("bad level {t:?} (expected an index, `last` or `all`)"))),
            })
            .collect::<CliResult<Vec<_>>>()
            .map(LevelSelection::Listed)
    }
}

fn render(columns: &[String], table: &LevelTable) -> String {
    let mut s = format!("# level {} t = {:e}\n# x", table.level, table.time);
    for c in columns {
        s.push(' ');
        s.push_str(c);
    }
    s.push('\n');
    for (i, x) in table.x.iter().enumerate() {
        s.push_str(&format!("{x:.10e}"));
        for col in &table.values {
            s.push_str(&format!(" {:.10e}", col[i]));
        }
        s.push('\n');
    }
    s
}

/// Writes `level_<n>.dat` (columns `x u v` or `x w`) for each selected level.
/// The whole input is parsed and every file rendered before anything is
/// written, so malformed input leaves no partial output.
pub fn emit_plot_data(trajectory_csv: &Path, out_dir: &Path, selection: &LevelSelection) -> CliResult<Vec<PathBuf>> {
    let file = fs::File::open(trajectory_csv).map_err(|e| CliError::io(trajectory_csv, e))?;
    let (columns, levels) =
        read_levels(file).map_err(|e| CliError::Input(format!("{}: {e}", trajectory_csv.display())))?;
    if levels.is_empty() {
        return Err(CliError::Input(format!(
            "{}: trajectory has no levels",
            trajectory_csv.display()
        )));
    }
    let chosen: Vec<&LevelTable> = match selection {
        LevelSelection::All => levels.iter().collect(),
        LevelSelection::Listed(list) => list
            .iter()
            .map(|want| match want {
                None => Ok(levels.last().expect("nonempty")),
                Some(n) => levels
                    .iter()
                    .find(|l| l.level == *n)
                    .ok_or_else(|| CliError::Input(format!("level {n} is not in the trajectory"))),
            })
            .collect::<CliResult<_>>()?,
    };
    let rendered: Vec<(PathBuf, String)> = chosen
        .iter()
        .map(|t| (out_dir.join(format!("level_{:06}.dat", t.level)), render(&columns, t)))
        .collect();
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::with_capacity(rendered.len());
    for (path, text) in rendered {
        if written.contains(&path) {
            continue;
        }
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
