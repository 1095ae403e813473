use std::fmt::Write as _;

use crate::diarize::ChartInterval;
use crate::emotion::{EmotionLabel, EmotionTimeline};

pub const WIDTH: f64 = 800.0;
pub const PLOT_X: f64 = 100.0;
pub const PLOT_W: f64 = 680.0;
pub const LANE_H: f64 = 30.0;
const TOP: f64 = 40.0;
const BAR_PAD: f64 = 5.0;
const TICKS: usize = 6;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn x_of(t: f64, interval: (f64, f64)) -> f64 {
    PLOT_X + (t - interval.0) / (interval.1 - interval.0) * PLOT_W
}

/// Header, title, lane labels and time axis shared by both charts.
fn frame(out: &mut String, title: &str, interval: (f64, f64), lanes: &[String], extra_h: f64) -> f64 {
    let axis_y = TOP + lanes.len() as f64 * LANE_H;
    let height = axis_y + 30.0 + extra_h;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"  <text x="{:.2}" y="20">{}</text>"#, PLOT_X, escape(title));
    for (i, name) in lanes.iter().enumerate() {
        let y = TOP + i as f64 * LANE_H;
        let _ = writeln!(
            out,
            r##"  <line x1="{PLOT_X:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            PLOT_X + PLOT_W
        );
        let _ = writeln!(out, r#"  <text x="10" y="{:.2}">{}</text>"#, y + LANE_H / 2.0 + 4.0, escape(name));
    }
    let _ = writeln!(
        out,
        r##"  <line x1="{PLOT_X:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="#000"/>"##,
        PLOT_X + PLOT_W
    );
    for k in 0..=TICKS {
        let t = interval.0 + (interval.1 - interval.0) * k as f64 / TICKS as f64;
        let x = x_of(t, interval);
        let _ = writeln!(out, r##"  <line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, axis_y + 5.0);
        let _ = writeln!(out, r#"  <text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.0}</text>"#, axis_y + 18.0);
    }
    axis_y
}

/// Speaker activity over one chart interval, one lane per speaker.
pub fn speaker_chart(chart: &ChartInterval, speakers: &[String]) -> String {
    let interval = (chart.start_s, chart.end_s);
    let mut out = String::new();
    let title = format!("Speakers {:.0}-{:.0} s", interval.0, interval.1);
    frame(&mut out, &title, interval, speakers, 0.0);
    for (i, name) in speakers.iter().enumerate() {
        let y = TOP + i as f64 * LANE_H + BAR_PAD;
        for &(s, e) in chart.lanes.get(name).map(Vec::as_slice).unwrap_or(&[]) {
            let x = x_of(s, interval);
            let w = x_of(e, interval) - x;
            let _ = writeln!(
                out,
                r##"  <rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="#1f77b4"/>"##,
                LANE_H - 2.0 * BAR_PAD
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Per-second emotion cells over one interval with a color legend.
pub fn emotion_chart(timeline: &EmotionTimeline, interval: (f64, f64), speakers: &[String]) -> String {
    let mut out = String::new();
    let title = format!("Emotions {:.0}-{:.0} s", interval.0, interval.1);
    let axis_y = frame(&mut out, &title, interval, speakers, 30.0);
    for (i, name) in speakers.iter().enumerate() {
        let y = TOP + i as f64 * LANE_H + BAR_PAD;
        for &(t, label) in timeline.entries(name).iter().filter(|(t, _)| *t >= interval.0 && *t < interval.1) {
            let x = x_of(t, interval);
            let w = x_of((t + 1.0).min(interval.1), interval) - x;
            let _ = writeln!(
                out,
                r#"  <rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="{}"><title>{label}</title></rect>"#,
                LANE_H - 2.0 * BAR_PAD,
                label.color()
            );
        }
    }
    let legend_y = axis_y + 35.0;
    for (k, label) in EmotionLabel::ALL.iter().enumerate() {
        let x = PLOT_X + k as f64 * 95.0;
        let _ = writeln!(
            out,
            r#"  <rect x="{x:.2}" y="{legend_y:.2}" width="12" height="12" fill="{}"/>"#,
            label.color()
        );
        let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}">{label}</text>"#, x + 16.0, legend_y + 10.0);
    }
    out.push_str("</svg>\n");
    out
}
