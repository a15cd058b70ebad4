//! CSV, JSON and SVG output for experiment tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::{HarnessError, OutputFormat, SweepTable};

pub const CSV_HEADER: &str =
    "axis,mean_T,stderr_T,ci_lo_T,ci_hi_T,mean_J,stderr_J,ci_lo_J,ci_hi_J,replications,master_seed";

/// One row per axis value; a table without rows gives the header alone.
pub fn to_csv(table: &SweepTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let r = &row.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.axis,
            r.time.mean,
            r.time.stderr,
            r.time.ci_lo,
            r.time.ci_hi,
            r.cost.mean,
            r.cost.stderr,
            r.cost.ci_lo,
            r.cost.ci_hi,
            r.config.replications,
            r.config.master_seed
        );
    }
    out
}

/// Two-column `(mean_J, mean_T)` table, one row per axis value.
pub fn tradeoff_csv(table: &SweepTable) -> String {
    let mut out = String::from("mean_J,mean_T\n");
    for (j, t) in table.tradeoff() {
        let _ = writeln!(out, "{j},{t}");
    }
    out
}

pub fn table_json(table: &SweepTable) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut v = row.result.to_json_value();
            v["axis"] = json!(row.axis);
            v
        })
        .collect();
    json!({ "axis": table.axis, "rows": rows })
}

pub fn to_json(table: &SweepTable) -> String {
    serde_json::to_string_pretty(&table_json(table)).expect("table serializes")
}

/// Mean with a 90% interval at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<Marker>,
}

impl Series {
    /// Mean spreading time against the sweep axis.
    pub fn time_vs_axis(name: &str, table: &SweepTable) -> Series {
        let points = table
            .rows
            .iter()
            .map(|r| Marker { x: r.axis, y: r.result.time.mean, lo: r.result.time.ci_lo, hi: r.result.time.ci_hi })
            .collect();
        Series { name: name.into(), points }
    }

    /// Mean spreading time against mean cost.
    pub fn time_vs_cost(name: &str, table: &SweepTable) -> Series {
        let points = table
            .rows
            .iter()
            .map(|r| Marker { x: r.result.cost.mean, y: r.result.time.mean, lo: r.result.time.ci_lo, hi: r.result.time.ci_hi })
            .collect();
        Series { name: name.into(), points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub curves: Vec<Curve>,
}

impl Plot {
    pub fn from_table(title: &str, table: &SweepTable) -> Plot {
        Plot {
            title: title.into(),
            x_label: table.axis.clone(),
            y_label: "mean T".into(),
            series: vec![Series::time_vs_axis("simulation", table)],
            curves: Vec::new(),
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders markers with error bars for each series and a polyline per curve.
pub fn to_svg(plot: &Plot) -> String {
    let xs = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.x))
        .chain(plot.curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)));
    let (x0, x1) = extent(xs);
    let ys = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|p| [p.lo, p.hi, p.y]))
        .chain(plot.curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)));
    let (y0, y1) = extent(ys);
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, MARGIN_L + pw / 2.0, escape(&plot.title));
    // axes
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"#,
        l = MARGIN_L,
        r = MARGIN_L + pw,
        t = MARGIN_T,
        b = MARGIN_T + ph
    );
    for k in 0..=5 {
        let fx = x0 + (x1 - x0) * k as f64 / 5.0;
        let fy = y0 + (y1 - y0) * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="black"/><text x="{x}" y="{ty}" text-anchor="middle">{fx:.3}</text>"#,
            x = sx(fx),
            b = MARGIN_T + ph,
            b2 = MARGIN_T + ph + 5.0,
            ty = MARGIN_T + ph + 18.0,
            fx = fx
        );
        let _ = writeln!(
            s,
            r#"<line x1="{l2}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/><text x="{tx}" y="{y}" text-anchor="end" dy="4">{fy:.3}</text>"#,
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            tx = MARGIN_L - 8.0,
            y = sy(fy),
            fy = fy
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN_L + pw / 2.0, HEIGHT - 12.0, escape(&plot.x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{}</text>"#,
        escape(&plot.y_label),
        y = MARGIN_T + ph / 2.0
    );

    let mut legend_y = MARGIN_T + 10.0;
    let legend_x = MARGIN_L + pw + 15.0;
    for (k, curve) in plot.curves.iter().enumerate() {
        let color = PALETTE[(k + 2) % PALETTE.len()];
        let d: Vec<String> = curve
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .enumerate()
            .map(|(i, p)| format!("{}{:.2},{:.2}", if i == 0 { 'M' } else { 'L' }, sx(p.0), sy(p.1)))
            .collect();
        let _ = writeln!(
            s,
            r#"<path class="curve" data-name="{}" d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(&curve.name),
            d.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<line x1="{legend_x}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="1.5"/><text x="{}" y="{legend_y}" dy="4">{}</text>"#,
            legend_x + 18.0,
            legend_x + 24.0,
            escape(&curve.name)
        );
        legend_y += 18.0;
    }
    for (k, series) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-name="{}" stroke="{color}" fill="{color}">"#, escape(&series.name));
        for p in &series.points {
            if !(p.x.is_finite() && p.y.is_finite()) {
                continue;
            }
            let (cx, cy) = (sx(p.x), sy(p.y));
            if p.lo.is_finite() && p.hi.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                    sy(p.lo),
                    sy(p.hi),
                    cx - 3.0,
                    sy(p.lo),
                    cx + 3.0,
                    sy(p.lo),
                    cx - 3.0,
                    sy(p.hi),
                    cx + 3.0,
                    sy(p.hi)
                );
            }
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="6" height="6"/>"#, cx - 3.0, cy - 3.0);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="8" height="8" fill="{color}"/><text x="{}" y="{legend_y}" dy="4">{}</text>"#,
            legend_x + 5.0,
            legend_y - 4.0,
            legend_x + 24.0,
            escape(&series.name)
        );
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Writes `table` in `format` to `path`; SVG uses `plot` when given.
pub fn emit(table: &SweepTable, format: OutputFormat, path: &Path, plot: Option<&Plot>) -> Result<(), HarnessError> {
    let contents = match format {
        OutputFormat::Csv => to_csv(table),
        OutputFormat::Json => to_json(table),
        OutputFormat::Svg => match plot {
            Some(p) => to_svg(p),
            None => to_svg(&Plot::from_table("spreading time", table)),
        },
    };
    write_file(path, &contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlPolicy, ControlVector};
    use crate::harness::{run, ExperimentConfig, GraphSpec};

    fn small_table(seed: u64) -> SweepTable {
        let c = ExperimentConfig::new(
            GraphSpec::Complete { n: 5, alpha: 1.0 },
            0.8,
            ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap()),
            50,
            seed,
        );
        SweepTable::single("n", 5.0, run(&c).unwrap())
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = SweepTable { axis: "n".into(), rows: vec![] };
        assert_eq!(to_csv(&t), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_is_reproducible() {
        let a = to_csv(&small_table(4));
        let b = to_csv(&small_table(4));
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 2);
        let fields: Vec<&str> = a.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[9], "50");
        assert_eq!(fields[10], "4");
        assert_ne!(a, to_csv(&small_table(5)));
    }

    #[test]
    fn json_mirrors_result() {
        let t = small_table(1);
        let v: Value = serde_json::from_str(&to_json(&t)).unwrap();
        let row = &v["rows"][0];
        assert_eq!(row["axis"], 5.0);
        assert_eq!(row["mean_T"].as_f64().unwrap(), t.rows[0].result.time.mean);
        assert_eq!(row["runs"].as_array().unwrap().len(), 50);
    }

    #[test]
    fn svg_counts() {
        let t = small_table(2);
        let mut plot = Plot::from_table("test", &t);
        plot.curves.push(Curve { name: "lower".into(), points: vec![(4.0, 1.0), (6.0, 2.0)] });
        plot.curves.push(Curve { name: "upper".into(), points: vec![(4.0, 10.0), (6.0, 12.0)] });
        let svg = to_svg(&plot);
        assert_eq!(svg.matches(r#"class="series""#).count(), 1);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = small_table(3);
        for f in [OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg] {
            let p = dir.path().join("sub").join(format!("out.{}", f.extension()));
            emit(&t, f, &p, None).unwrap();
            assert!(std::fs::metadata(&p).unwrap().len() > 0);
        }
        assert_eq!(tradeoff_csv(&t).lines().count(), 2);
    }
}
