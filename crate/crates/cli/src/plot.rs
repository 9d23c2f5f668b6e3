use std::fmt::Write as _;

use delineate_core::{EcgRecord, FiducialSet, WaveKind};

const WIDTH: f64 = 1200.0;
const LEAD_HEIGHT: f64 = 160.0;
const MARGIN: f64 = 20.0;

pub fn wave_color(w: WaveKind) -> &'static str {
    match w {
        WaveKind::P => "red",
        WaveKind::Qrs => "green",
        WaveKind::T => "magenta",
    }
}

/// One SVG with every lead stacked and the annotated waves shaded behind
/// them, one `<g>` group per wave.
pub fn render_svg(record: &EcgRecord, fids: Option<&FiducialSet>) -> String {
    let n = record.len().max(1);
    let leads = record.lead_count().max(1);
    let height = leads as f64 * LEAD_HEIGHT + 2.0 * MARGIN;
    let sx = (WIDTH - 2.0 * MARGIN) / n as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(record.id()));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for w in WaveKind::ALL {
        let _ = writeln!(s, r#"<g class="wave {0}" fill="{1}" fill-opacity="0.2">"#, w.name(), wave_color(w));
        for iv in fids.map(|f| f.get(w)).unwrap_or_default() {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{MARGIN}" width="{:.2}" height="{:.2}"/>"#,
                MARGIN + iv.onset as f64 * sx,
                iv.len() as f64 * sx,
                height - 2.0 * MARGIN
            );
        }
        s.push_str("</g>\n");
    }
    for (k, lead) in record.leads().iter().enumerate() {
        let (lo, hi) = lead.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let top = MARGIN + k as f64 * LEAD_HEIGHT;
        let mut pts = String::new();
        for (i, &v) in lead.iter().enumerate() {
            let y = top + LEAD_HEIGHT * (0.9 - 0.8 * (v - lo) / span);
            let _ = write!(pts, "{:.2},{:.2} ", MARGIN + i as f64 * sx, y);
        }
        let name = record.lead_names().get(k).map_or("", String::as_str);
        let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.1}" font-size="12">{}</text>"#, top + 14.0, escape(name));
        let _ = writeln!(s, r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#, pts.trim_end());
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
