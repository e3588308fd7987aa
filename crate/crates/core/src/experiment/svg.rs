//! Minimal standalone SVG line and bar charts.

use std::fmt::Write;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 40.0;
const LEGEND_H: f64 = 18.0;
const TITLE_H: f64 = 28.0;
const COLUMNS: usize = 3;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePanel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarPanel {
    pub title: String,
    pub y_label: String,
    pub bars: Vec<(String, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    ox: f64,
    oy: f64,
    w: f64,
    h: f64,
}

fn canvas(n_panels: usize, title: &str) -> (String, usize) {
    let cols = n_panels.clamp(1, COLUMNS);
    let rows = n_panels.div_ceil(cols).max(1);
    let w = cols as f64 * PANEL_W;
    let h = TITLE_H + rows as f64 * (PANEL_H + LEGEND_H);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="10">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        w / 2.0,
        esc(title)
    )
    .unwrap();
    (s, cols)
}

fn frame(i: usize, cols: usize) -> Frame {
    let (c, r) = (i % cols, i / cols);
    Frame {
        ox: c as f64 * PANEL_W + MARGIN_L,
        oy: TITLE_H + r as f64 * (PANEL_H + LEGEND_H) + MARGIN_T,
        w: PANEL_W - MARGIN_L - MARGIN_R,
        h: PANEL_H - MARGIN_T - MARGIN_B,
    }
}

fn axes(s: &mut String, f: &Frame, title: &str, x_label: &str, y_label: &str, y: (f64, f64)) {
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
        f.ox + f.w / 2.0,
        f.oy - 8.0,
        esc(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        f.ox, f.oy, f.w, f.h
    )
    .unwrap();
    for k in 0..=4 {
        let v = y.0 + (y.1 - y.0) * k as f64 / 4.0;
        let py = f.oy + f.h - f.h * k as f64 / 4.0;
        writeln!(
            s,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/>"##,
            f.ox,
            f.ox + f.w
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, f.ox - 4.0, py + 3.0, tick(v)).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        f.ox + f.w / 2.0,
        f.oy + f.h + 30.0,
        esc(x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        f.ox - 42.0,
        f.oy + f.h / 2.0,
        f.ox - 42.0,
        f.oy + f.h / 2.0,
        esc(y_label)
    )
    .unwrap();
}

/// Grid of line panels sharing one legend style.
pub fn line_chart(title: &str, panels: &[LinePanel]) -> String {
    let (mut s, cols) = canvas(panels.len(), title);
    for (i, p) in panels.iter().enumerate() {
        let f = frame(i, cols);
        let fx = |x: f64| if p.log_x { x.max(f64::MIN_POSITIVE).log10() } else { x };
        let xr = range(p.series.iter().flat_map(|s| s.points.iter().map(|q| fx(q.0))));
        let yr = range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)));
        axes(&mut s, &f, &p.title, &p.x_label, &p.y_label, yr);
        let mut xs: Vec<f64> = p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let px = |x: f64| f.ox + (fx(x) - xr.0) / (xr.1 - xr.0) * f.w;
        let py = |y: f64| f.oy + f.h - (y - yr.0) / (yr.1 - yr.0) * f.h;
        if xs.len() <= 8 {
            for &x in &xs {
                writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                    px(x),
                    f.oy + f.h + 13.0,
                    tick(x)
                )
                .unwrap();
            }
        } else {
            for k in 0..=4 {
                let v = xr.0 + (xr.1 - xr.0) * k as f64 / 4.0;
                let label = if p.log_x { tick(10f64.powf(v)) } else { tick(v) };
                writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                    f.ox + f.w * k as f64 / 4.0,
                    f.oy + f.h + 13.0
                )
                .unwrap();
            }
        }
        for (k, ser) in p.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = ser
                .points
                .iter()
                .filter(|q| q.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let dash = if ser.dashed { r#" stroke-dasharray="4 3""# } else { "" };
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                pts.join(" ")
            )
            .unwrap();
            if ser.points.len() <= 12 {
                for &(x, y) in ser.points.iter().filter(|q| q.1.is_finite()) {
                    writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y)).unwrap();
                }
            }
            let lx = f.ox + (k as f64) * (f.w / p.series.len().max(1) as f64);
            let ly = f.oy + f.h + MARGIN_B + 4.0;
            writeln!(s, r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="3" fill="{color}"/>"#, ly - 4.0).unwrap();
            writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 13.0, esc(&ser.name)).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of bar panels.
pub fn bar_chart(title: &str, panels: &[BarPanel]) -> String {
    let (mut s, cols) = canvas(panels.len(), title);
    for (i, p) in panels.iter().enumerate() {
        let f = frame(i, cols);
        let hi = p.bars.iter().map(|b| b.1).filter(|v| v.is_finite()).fold(0.0_f64, f64::max);
        let lo = p.bars.iter().map(|b| b.1).filter(|v| v.is_finite()).fold(0.0_f64, f64::min);
        let yr = if hi - lo > 0.0 { (lo, hi * 1.05) } else { (0.0, 1.0) };
        axes(&mut s, &f, &p.title, "", &p.y_label, yr);
        let n = p.bars.len().max(1) as f64;
        let slot = f.w / n;
        let py = |y: f64| f.oy + f.h - (y - yr.0) / (yr.1 - yr.0) * f.h;
        for (k, (name, v)) in p.bars.iter().enumerate() {
            let x = f.ox + k as f64 * slot + slot * 0.15;
            let (top, bottom) = (py(v.max(0.0)), py(v.min(0.0)));
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                slot * 0.7,
                bottom - top,
                PALETTE[k % PALETTE.len()]
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x + slot * 0.35,
                f.oy + f.h + 13.0,
                esc(name)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed_and_stable() {
        let p = LinePanel {
            title: "toy <a&b>".into(),
            x_label: "budget".into(),
            y_label: "gap".into(),
            log_x: true,
            series: vec![Series {
                name: "bam".into(),
                points: vec![(500.0, 0.2), (5000.0, 0.05), (10000.0, f64::NAN)],
                dashed: false,
            }],
        };
        let a = line_chart("t", std::slice::from_ref(&p));
        assert_eq!(a, line_chart("t", &[p]));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("&lt;a&amp;b&gt;"));
        assert!(!a.contains("NaN"));
        let b = bar_chart(
            "b",
            &[BarPanel {
                title: "x".into(),
                y_label: "y".into(),
                bars: vec![("resample".into(), 0.1), ("fixed-1".into(), 0.3)],
            }],
        );
        assert_eq!(b.matches("<rect x=").count(), 3);
    }

    #[test]
    fn degenerate_ranges_stay_finite() {
        assert_eq!(range([2.0, 2.0].into_iter()), (1.8, 2.2));
        assert_eq!(range(std::iter::empty()), (0.0, 1.0));
    }
}
