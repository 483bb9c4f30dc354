//! The `plotdata` subcommand: plain-text, two-to-three-column data files
//! derived from aggregate JSONs, suitable for any plotting tool.

use crate::PlotMode;
use anyhow::{bail, Context, Result};
use bobw_core::simulator::{fit_loglog_slope, AggregateSummary, HorizonGroup};
use std::path::Path;

/// Load an aggregate; a manifest.json is accepted and its referenced
/// aggregates are merged (one group per horizon).
fn load_groups(path: &Path) -> Result<Vec<HorizonGroup>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    if let Ok(summary) = serde_json::from_str::<AggregateSummary>(&text) {
        return Ok(summary.groups);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&text).context("not an aggregate or manifest JSON")?;
    let Some(files) = manifest.get("aggregates").and_then(|v| v.as_array()) else {
        bail!("{} is neither an aggregate nor a manifest", path.display());
    };
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut groups = Vec::new();
    for f in files {
        let name = f.as_str().context("aggregate entry is not a string")?;
        let sub = std::fs::read_to_string(dir.join(name))
            .with_context(|| format!("reading referenced aggregate {name}"))?;
        let summary: AggregateSummary = serde_json::from_str(&sub)?;
        groups.extend(summary.groups);
    }
    groups.sort_by_key(|g| g.horizon);
    if groups.is_empty() {
        bail!("manifest references no aggregates");
    }
    Ok(groups)
}

pub fn render(path: &Path, mode: PlotMode) -> Result<String> {
    let groups = load_groups(path)?;
    let mut out = String::new();
    match mode {
        PlotMode::RegretVsT => {
            out.push_str("# t mean_regret stderr (one block per horizon)\n");
            for g in &groups {
                out.push_str(&format!("# horizon {}\n", g.horizon));
                for (i, (m, se)) in g
                    .mean_regret_curve
                    .iter()
                    .zip(g.stderr_regret_curve.iter())
                    .enumerate()
                {
                    out.push_str(&format!("{} {m} {se}\n", g.curve_stride * (i + 1)));
                }
                out.push('\n');
            }
        }
        PlotMode::RegretVsSqrtT => {
            out.push_str("# sqrt_T mean_final_regret stderr\n");
            for g in &groups {
                out.push_str(&format!(
                    "{} {} {}\n",
                    (g.horizon as f64).sqrt(),
                    g.final_mean,
                    g.final_stderr
                ));
            }
        }
        PlotMode::Loglog => {
            out.push_str("# ln_T ln_mean_final_regret\n");
            let mut pts = Vec::new();
            for g in &groups {
                if g.final_mean > 0.0 {
                    out.push_str(&format!(
                        "{} {}\n",
                        (g.horizon as f64).ln(),
                        g.final_mean.ln()
                    ));
                    pts.push((g.horizon as f64, g.final_mean));
                }
            }
            match fit_loglog_slope(&pts) {
                Some(slope) => out.push_str(&format!("# fitted slope = {slope}\n")),
                None => out.push_str("# fitted slope = n/a (need >= 2 positive points)\n"),
            }
        }
    }
    Ok(out)
}
