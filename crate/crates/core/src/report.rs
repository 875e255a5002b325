//! Causal-factor trajectory tables and their CSV and SVG renderings.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kalman::Belief;
use crate::model::{pack, CausalFactors, StateLayout};
use crate::series::{fmt_f64, Stamp};

/// One row per time index; factor columns in layout order, optionally
/// followed by one `<name>_sd` column per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub columns: Vec<String>,
    pub stamps: Vec<Stamp>,
    /// Series sample index of each row.
    pub indices: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    pub std_devs: Option<Vec<Vec<f64>>>,
}

impl TrajectoryTable {
    /// `stamps` is indexed by series sample index (`belief.n`).
    pub fn from_beliefs(
        layout: &StateLayout,
        beliefs: &[Belief],
        stamps: &[Stamp],
        include_std: bool,
    ) -> Result<Self> {
        let dim = layout.dim();
        if let Some(b) = beliefs.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch {
                context: "belief dimension",
                expected: dim,
                actual: b.dim(),
            });
        }
        let stamp = |n: usize| {
            stamps.get(n).copied().ok_or(Error::IndexOutOfRange {
                index: n,
                limit: stamps.len(),
            })
        };
        Ok(Self {
            columns: layout.column_names(),
            stamps: beliefs.iter().map(|b| stamp(b.n)).collect::<Result<_>>()?,
            indices: beliefs.iter().map(|b| b.n).collect(),
            values: beliefs.iter().map(|b| b.mean.as_slice().to_vec()).collect(),
            std_devs: include_std
                .then(|| beliefs.iter().map(|b| b.std_devs().as_slice().to_vec()).collect()),
        })
    }

    /// Ground-truth table, one row per sample.
    pub fn from_truth(layout: &StateLayout, truth: &[CausalFactors], stamps: &[Stamp]) -> Result<Self> {
        if truth.len() != stamps.len() {
            return Err(Error::DimensionMismatch {
                context: "truth rows vs. timestamps",
                expected: stamps.len(),
                actual: truth.len(),
            });
        }
        Ok(Self {
            columns: layout.column_names(),
            stamps: stamps.to_vec(),
            indices: (0..truth.len()).collect(),
            values: truth
                .iter()
                .map(|f| pack(f, layout).map(|x| x.as_slice().to_vec()))
                .collect::<Result<_>>()?,
            std_devs: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["timestamp".to_string()];
        h.extend(self.columns.iter().cloned());
        if self.std_devs.is_some() {
            h.extend(self.columns.iter().map(|c| format!("{c}_sd")));
        }
        h
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[c]).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::io("writing trajectory CSV", e.into());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header()).map_err(err)?;
        for (i, row) in self.values.iter().enumerate() {
            let mut rec = vec![self.stamps[i].to_string()];
            rec.extend(row.iter().map(|v| fmt_f64(*v)));
            if let Some(sd) = &self.std_devs {
                rec.extend(sd[i].iter().map(|v| fmt_f64(*v)));
            }
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("writing trajectory CSV", e))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Self-contained SVG overlaying the factor trajectories of one outcome
/// node against the series sample index.
pub fn trajectory_svg(table: &TrajectoryTable, layout: &StateLayout, target: usize) -> Result<String> {
    if target >= layout.node_count() {
        return Err(Error::IndexOutOfRange {
            index: target,
            limit: layout.node_count(),
        });
    }
    let block: Vec<usize> = layout.block(target).collect();
    let (width, height) = (900.0, 480.0);
    let (left, right, top, bottom) = (70.0, 230.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let xs: Vec<f64> = table.indices.iter().map(|&n| n as f64).collect();
    let (x_lo, x_hi) = bounds(xs.iter().copied());
    let (mut y_lo, mut y_hi) = bounds(block.iter().flat_map(|&c| table.column(c)));
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.05 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let px = |x: f64| left + (x - x_lo) / x_span * plot_w;
    let py = |y: f64| top + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let label = &layout.graph().labels()[target];
    let mut svg = String::new();
    // fmt::Write into a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">Causal factors into {}</text>"#,
        left + plot_w / 2.0,
        xml_escape(label)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = x_lo + f * x_span;
        let yv = y_lo + f * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#ddd"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"##,
            px(xv),
            top,
            top + plot_h,
            top + plot_h + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#ddd"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"##,
            left,
            py(yv),
            left + plot_w,
            left - 6.0,
            py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">time index</text>"#,
        left + plot_w / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">factor value</text>"#,
        top + plot_h / 2.0
    );
    for (k, &c) in block.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dash = if k >= block.len() / 2 { r#" stroke-dasharray="6 3""# } else { "" };
        let points: Vec<String> = xs
            .iter()
            .zip(table.column(c))
            .map(|(&x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.3"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 18.0 * k as f64;
        let lx = left + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            xml_escape(&table.columns[c])
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{layout_for, GraphSpec};
    use nalgebra::{DMatrix, DVector};

    fn layout() -> StateLayout {
        layout_for(GraphSpec::new(["b1", "b2", "b3"]).unwrap()).unwrap()
    }

    fn beliefs(n: usize) -> Vec<Belief> {
        (1..=n)
            .map(|i| Belief {
                n: i,
                mean: DVector::from_fn(12, |r, _| (r as f64 + 1.0) * 0.01 * i as f64),
                cov: DMatrix::identity(12, 12) * 0.04,
            })
            .collect()
    }

    #[test]
    fn header_follows_layout() {
        let stamps: Vec<Stamp> = (0..6).map(Stamp::Index).collect();
        let t = TrajectoryTable::from_beliefs(&layout(), &beliefs(5), &stamps, true).unwrap();
        let h = t.header();
        assert_eq!(h.len(), 1 + 2 * 12);
        assert_eq!(h[1], "b1_from_b2_inst");
        assert_eq!(h[3], "b1_from_b2_lag");
        assert_eq!(h[13], "b1_from_b2_inst_sd");
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().starts_with("1,0.01,"));
        assert!(text.lines().nth(1).unwrap().ends_with(",0.2"));
    }

    #[test]
    fn missing_stamp_is_an_error() {
        let stamps: Vec<Stamp> = (0..3).map(Stamp::Index).collect();
        assert!(TrajectoryTable::from_beliefs(&layout(), &beliefs(5), &stamps, false).is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_factor() {
        let stamps: Vec<Stamp> = (0..6).map(Stamp::Index).collect();
        let t = TrajectoryTable::from_beliefs(&layout(), &beliefs(5), &stamps, false).unwrap();
        let svg = trajectory_svg(&t, &layout(), 1).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("b2_from_b3_lag"));
        assert!(svg.contains("time index"));
        assert!(trajectory_svg(&t, &layout(), 3).is_err());
    }
}
