//! Static report files for a simulation run.

use std::path::{Path, PathBuf};

use chartquiz_core::reasoning::{VersionStats, DEFAULT_TOP_K};
use chartquiz_core::studio::{Studio, StudioError};
use serde::Serialize;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Bar chart of accuracy per question version, oldest first. Versions
/// without answered responses get an empty slot labelled "n/a".
pub fn accuracy_svg(stats: &VersionStats) -> String {
    let n = stats.entries.len().max(1) as f64;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let slot = plot_w / n;
    let bar = slot * 0.6;
    let base = HEIGHT - MARGIN;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    out.push_str(&format!("<text x=\"{}\" y=\"20\" text-anchor=\"middle\">Accuracy by version</text>\n", WIDTH / 2.0));
    out.push_str(&format!("<line x1=\"{MARGIN}\" y1=\"{base}\" x2=\"{}\" y2=\"{base}\" stroke=\"#333\"/>\n", WIDTH - MARGIN));
    out.push_str(&format!("<line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{base}\" stroke=\"#333\"/>\n"));
    for tick in [0.0, 0.5, 1.0] {
        let y = base - tick * plot_h;
        out.push_str(&format!("<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{:.0}%</text>\n", MARGIN - 4.0, y + 4.0, tick * 100.0));
    }
    for (i, e) in stats.entries.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let label = escape(&e.current.version_id);
        out.push_str(&format!("<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n", base + 16.0));
        match e.current.accuracy {
            Some(a) => {
                let h = a * plot_h;
                out.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bar:.1}\" height=\"{h:.1}\" fill=\"#4c78a8\"/>\n",
                    cx - bar / 2.0,
                    base - h
                ));
                out.push_str(&format!("<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}%</text>\n", base - h - 4.0, a * 100.0));
            }
            None => out.push_str(&format!("<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">n/a</text>\n", base - 4.0)),
        }
    }
    out.push_str("</svg>\n");
    out
}

fn write_json(dir: &Path, name: &str, doc: &impl Serialize) -> Result<PathBuf, StudioError> {
    let path = dir.join(name);
    let mut bytes = serde_json::to_vec_pretty(doc).map_err(|e| StudioError::InvalidInput(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| StudioError::Config(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Writes sankey, distribution, strategies and version statistics for run
/// `rid` into `out`, plus `accuracy.svg`. Returns the written paths.
pub fn write_report(studio: &Studio, pid: &str, rid: &str, out: &Path) -> Result<Vec<PathBuf>, StudioError> {
    let sankey = studio.sankey(pid, rid)?;
    let distribution = studio.distribution(pid, rid)?;
    let strategies = studio.strategies(pid, rid, DEFAULT_TOP_K)?;
    let stats = studio.compare(pid, rid)?;
    std::fs::create_dir_all(out).map_err(|e| StudioError::Config(format!("{}: {e}", out.display())))?;
    let mut paths = vec![
        write_json(out, "sankey.json", &sankey)?,
        write_json(out, "distribution.json", &distribution)?,
        write_json(out, "strategies.json", &strategies)?,
        write_json(out, "stats.json", &stats)?,
    ];
    let svg = out.join("accuracy.svg");
    std::fs::write(&svg, accuracy_svg(&stats)).map_err(|e| StudioError::Config(format!("{}: {e}", svg.display())))?;
    paths.push(svg);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chartquiz_core::reasoning::{VersionEntry, VersionSnapshot};

    fn snap(id: &str, accuracy: Option<f64>) -> VersionSnapshot {
        VersionSnapshot {
            version_id: id.into(),
            run_id: format!("r-{id}"),
            accuracy,
            n_responses: 20,
            overall_means: Default::default(),
            group_means: Default::default(),
        }
    }

    #[test]
    fn one_bar_per_answered_version() {
        let stats = VersionStats {
            entries: vec![
                VersionEntry { current: snap("v1", Some(0.95)), previous: None },
                VersionEntry { current: snap("v<2>", None), previous: Some(snap("v1", Some(0.95))) },
            ],
        };
        let svg = accuracy_svg(&stats);
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains(">95%<"));
        assert!(svg.contains("v&lt;2&gt;") && svg.contains(">n/a<"));
    }
}
