//! Merged plot data and a gnuplot script for the two-panel figure
//! (timesteps and backups against cumulative reward).

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crate::records::{format_g, read_rows, RecordError, HEADER};

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no input files")]
    NoInputs,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PlotError + '_ {
    move |source| PlotError::Io { path: path.display().to_string(), source }
}

/// The series label of an input: its file stem.
pub fn series_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Concatenates the inputs into one long CSV with a leading `series`
/// column. Returns the number of data rows written.
pub fn merge(inputs: &[PathBuf], out: &Path) -> Result<usize, PlotError> {
    if inputs.is_empty() {
        return Err(PlotError::NoInputs);
    }
    let mut w = csv::Writer::from_writer(File::create(out).map_err(io_err(out))?);
    let mut header = vec!["series"];
    header.extend(HEADER);
    w.write_record(&header).map_err(RecordError::from)?;
    let mut count = 0;
    for path in inputs {
        let file = File::open(path).map_err(io_err(path))?;
        let label = series_label(path);
        for r in read_rows(file, &path.display().to_string())? {
            w.write_record([
                label.clone(),
                format_g(r.checkpoint_reward),
                format_g(r.mean_timesteps),
                format_g(r.se_timesteps),
                format_g(r.mean_backups),
                format_g(r.se_backups),
                r.n_trials.to_string(),
            ])
            .map_err(RecordError::from)?;
            count += 1;
        }
    }
    w.flush().map_err(io_err(out))?;
    Ok(count)
}

/// A gnuplot script drawing every series of `data` in two stacked panels.
pub fn gnuplot_script(data: &Path, labels: &[String]) -> String {
    let data = data.display().to_string().replace('\'', "''");
    let panel = |column: usize, ylabel: &str| {
        let curves: Vec<String> = labels
            .iter()
            .map(|l| {
                let l = l.replace('\'', "''");
                format!("'{data}' using (strcol(1) eq '{l}' ? $2 : NaN):{column} with linespoints title '{l}'")
            })
            .collect();
        format!("set ylabel '{ylabel}'\nplot {}\n", curves.join(", \\\n     "))
    };
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 800,1000\n");
    s.push_str(&format!("set output '{}.png'\n", data.trim_end_matches(".csv")));
    s.push_str("set multiplot layout 2,1\n");
    s.push_str("set xlabel 'cumulative reward'\n");
    s.push_str(&panel(3, "timesteps"));
    s.push_str(&panel(5, "backups"));
    s.push_str("unset multiplot\n");
    s
}

/// Writes the merged data to `out` and the script next to it (`.gp`).
/// Returns the script path.
pub fn emit(inputs: &[PathBuf], out: &Path) -> Result<PathBuf, PlotError> {
    merge(inputs, out)?;
    let labels: Vec<String> = inputs.iter().map(|p| series_label(p)).collect();
    let script = out.with_extension("gp");
    fs::write(&script, gnuplot_script(out, &labels)).map_err(io_err(&script))?;
    Ok(script)
}
