//! Results CSV → markdown table and SVG chart.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// One parsed CSV row.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub noise_target: String,
    pub noise_level: f64,
    pub policy: String,
    pub seed: u64,
    pub mae_bpm: Option<f64>,
    pub snr_db: Option<f64>,
    pub pearson_r: Option<f64>,
    pub n_windows: Option<usize>,
    pub ok: bool,
}

/// Parse a results CSV, failing with the line number on malformed rows.
pub fn parse_results(csv_path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| anyhow::anyhow!("{}: empty file", csv_path.display()))?;
    let expected = "noise_target,noise_level,policy,seed,mae_bpm,snr_db,pearson_r,n_windows,status";
    if header.trim() != expected {
        bail!(
            "{}:1: unexpected header `{}` (expected `{expected}`)",
            csv_path.display(),
            header.trim()
        );
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            bail!(
                "{}:{}: expected 9 fields, found {}",
                csv_path.display(),
                lineno,
                fields.len()
            );
        }
        let ok = fields[8].trim() == "ok";
        let parse_f64 = |s: &str, what: &str| -> Result<Option<f64>> {
            let s = s.trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("{}:{}: bad {what} `{s}`: {e}", csv_path.display(), lineno))
        };
        let noise_level = parse_f64(fields[1], "noise_level")?
            .ok_or_else(|| anyhow::anyhow!("{}:{}: missing noise_level", csv_path.display(), lineno))?;
        let seed: u64 = fields[3].trim().parse().map_err(|e| {
            anyhow::anyhow!("{}:{}: bad seed `{}`: {e}", csv_path.display(), lineno, fields[3])
        })?;
        let n_windows = match fields[7].trim() {
            "" => None,
            s => Some(s.parse::<usize>().map_err(|e| {
                anyhow::anyhow!("{}:{}: bad n_windows `{s}`: {e}", csv_path.display(), lineno)
            })?),
        };
        rows.push(ResultRow {
            noise_target: fields[0].trim().to_string(),
            noise_level,
            policy: fields[2].trim().to_string(),
            seed,
            mae_bpm: parse_f64(fields[4], "mae_bpm")?,
            snr_db: parse_f64(fields[5], "snr_db")?,
            pearson_r: parse_f64(fields[6], "pearson_r")?,
            n_windows,
            ok,
        });
    }
    if rows.is_empty() {
        bail!("{}: no data rows", csv_path.display());
    }
    Ok(rows)
}

/// Median and standard error of a sample.
fn median_and_se(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let se = if n > 1 {
        (var / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (median, se)
}

type LevelPolicyStats = BTreeMap<(u64, String), Vec<f64>>;

/// Aggregated view of the CSV: per (level, policy) MAE samples.
pub struct ReportData {
    pub noise_target: String,
    /// level bits → readable level, keeps float keys orderable.
    pub levels: Vec<f64>,
    pub policies: Vec<String>,
    pub mae: LevelPolicyStats,
    pub failed_cells: usize,
}

pub fn aggregate_results(rows: &[ResultRow]) -> ReportData {
    let mut mae: LevelPolicyStats = BTreeMap::new();
    let mut levels: Vec<f64> = Vec::new();
    let mut policies: Vec<String> = Vec::new();
    let mut failed = 0usize;
    for row in rows {
        if !row.ok {
            failed += 1;
            continue;
        }
        let Some(value) = row.mae_bpm else {
            failed += 1;
            continue;
        };
        if !levels.iter().any(|l| l == &row.noise_level) {
            levels.push(row.noise_level);
        }
        if !policies.iter().any(|p| p == &row.policy) {
            policies.push(row.policy.clone());
        }
        mae.entry((row.noise_level.to_bits(), row.policy.clone()))
            .or_default()
            .push(value);
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ReportData {
        noise_target: rows
            .first()
            .map(|r| r.noise_target.clone())
            .unwrap_or_default(),
        levels,
        policies,
        mae,
        failed_cells: failed,
    }
}

/// Render the per-level median ± standard-error table as markdown.
pub fn markdown_table(data: &ReportData) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Heart-rate MAE vs {} noise level\n",
        data.noise_target
    );
    let mut header = String::from("| noise level |");
    let mut rule = String::from("|---|");
    for p in &data.policies {
        let _ = write!(header, " {p} MAE (median ± SE) |");
        rule.push_str("---|");
    }
    let _ = writeln!(out, "{header}");
    let _ = writeln!(out, "{rule}");
    for &level in &data.levels {
        let mut row = format!("| {level} |");
        for p in &data.policies {
            match data.mae.get(&(level.to_bits(), p.clone())) {
                Some(values) if !values.is_empty() => {
                    let (median, se) = median_and_se(values);
                    let _ = write!(row, " {median:.2} ± {se:.2} |");
                }
                _ => row.push_str(" — |"),
            }
        }
        let _ = writeln!(out, "{row}");
    }
    if data.failed_cells > 0 {
        let _ = writeln!(
            out,
            "\n*{} failed cell(s) omitted from the aggregates.*",
            data.failed_cells
        );
    }
    out
}

/// (level, median, standard error) points of one policy's series.
type SeriesPoints = Vec<(f64, f64, f64)>;

/// Render MAE vs noise level as a self-contained SVG line chart with
/// standard-error bars, one series per policy.
pub fn svg_chart(data: &ReportData) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 62.0; // margins
    const MR: f64 = 24.0;
    const MT: f64 = 34.0;
    const MB: f64 = 56.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;

    let series: Vec<(String, SeriesPoints)> = data
        .policies
        .iter()
        .map(|p| {
            let pts: SeriesPoints = data
                .levels
                .iter()
                .filter_map(|&l| {
                    data.mae.get(&(l.to_bits(), p.clone())).and_then(|vals| {
                        if vals.is_empty() {
                            None
                        } else {
                            let (m, se) = median_and_se(vals);
                            Some((l, m, se))
                        }
                    })
                })
                .collect();
            (p.clone(), pts)
        })
        .collect();

    let x_min = data.levels.first().copied().unwrap_or(0.0);
    let x_max = data.levels.last().copied().unwrap_or(1.0).max(x_min + 1e-9);
    let y_max = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|&(_, m, se)| m + se))
        .fold(1.0f64, f64::max)
        * 1.15;

    let x_of = |l: f64| ML + (l - x_min) / (x_max - x_min) * plot_w;
    let y_of = |v: f64| MT + plot_h - (v / y_max) * plot_h;

    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="15" text-anchor="middle">Heart-rate MAE vs {} noise</text>"#,
        W / 2.0,
        data.noise_target
    );

    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        MT + plot_h,
        ML + plot_w,
        MT + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#,
        MT + plot_h
    );

    // X ticks at each level.
    for &l in &data.levels {
        let x = x_of(l);
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#,
            MT + plot_h,
            MT + plot_h + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{l}</text>"#,
            MT + plot_h + 18.0
        );
    }
    // Y ticks: 5 even divisions.
    for k in 0..=5 {
        let v = y_max * k as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{ML}" y2="{y}" stroke="black"/>"#,
            ML - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.1}</text>"#,
            ML - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">noise level</text>"#,
        ML + plot_w / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">MAE (beats/min)</text>"#,
        MT + plot_h / 2.0,
        MT + plot_h / 2.0
    );

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts
                .iter()
                .map(|&(l, m, _)| format!("{:.2},{:.2}", x_of(l), y_of(m)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            );
        }
        for &(l, m, se) in pts {
            let (x, y) = (x_of(l), y_of(m));
            let (y_lo, y_hi) = (y_of((m - se).max(0.0)), y_of(m + se));
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{y_hi}" x2="{x}" y2="{y_lo}" stroke="{color}" stroke-width="1"/>"#
            );
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y_hi}" x2="{}" y2="{y_hi}" stroke="{color}"/>"#,
                x - 3.0,
                x + 3.0
            );
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y_lo}" x2="{}" y2="{y_lo}" stroke="{color}"/>"#,
                x - 3.0,
                x + 3.0
            );
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        // Legend.
        let ly = MT + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            ML + plot_w - 110.0,
            ML + plot_w - 86.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{name}</text>"#,
            ML + plot_w - 80.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// `report` subcommand: write report.md and mae_vs_noise.svg next to the
/// CSV (or into `out_dir`), and print the table.
pub fn cmd_report(csv_path: &Path, out_dir: &Path) -> Result<(String, std::path::PathBuf)> {
    let rows = parse_results(csv_path)?;
    let data = aggregate_results(&rows);
    let table = markdown_table(&data);
    let chart = svg_chart(&data);
    fs::create_dir_all(out_dir)?;
    let md_path = out_dir.join("report.md");
    fs::write(&md_path, &table).with_context(|| format!("writing {}", md_path.display()))?;
    let svg_path = out_dir.join("mae_vs_noise.svg");
    fs::write(&svg_path, &chart).with_context(|| format!("writing {}", svg_path.display()))?;
    Ok((table, svg_path))
}
