//! Deterministic SVG rendering of a finished trial: walls, the traversed
//! path, the final planned path, track estimates, and predicted
//! footprints. All coordinates are formatted with fixed precision so two
//! renders of the same trial are byte-identical.

use std::fmt::Write;

use warpgrid_core::Vec2;

use crate::scenario::Scenario;
use crate::trial::TrialRecord;

const SCALE: f64 = 40.0; // px per meter
const MARGIN: f64 = 10.0; // px

struct Canvas {
    buf: String,
    height_m: f64,
}

impl Canvas {
    fn x(&self, v: f64) -> f64 {
        MARGIN + v * SCALE
    }
    // SVG y grows downward; world y grows upward.
    fn y(&self, v: f64) -> f64 {
        MARGIN + (self.height_m - v) * SCALE
    }
    fn pt(&self, p: Vec2) -> (f64, f64) {
        (self.x(p.x), self.y(p.y))
    }
    fn polyline(&mut self, pts: &[Vec2], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = self.pt(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.buf,
            r#"<polyline points="{}" fill="none" {style}/>"#,
            coords.join(" ")
        );
    }
    fn circle(&mut self, c: Vec2, r_px: f64, style: &str) {
        let (x, y) = self.pt(c);
        let _ = writeln!(
            self.buf,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r_px:.2}" {style}/>"#
        );
    }
    fn line(&mut self, a: Vec2, b: Vec2, style: &str) {
        let (x1, y1) = self.pt(a);
        let (x2, y2) = self.pt(b);
        let _ = writeln!(
            self.buf,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }
}

/// Render a trial over its scenario. `record` may come from an empty
/// scenario (no walls, no trajectory beyond the start); the frame and
/// goal marker are always drawn.
pub fn render_svg(scenario: &Scenario, record: Option<&TrialRecord>) -> String {
    let extent = scenario.extent_vec();
    let w_px = extent.x * SCALE + 2.0 * MARGIN;
    let h_px = extent.y * SCALE + 2.0 * MARGIN;
    let mut c = Canvas {
        buf: String::new(),
        height_m: extent.y,
    };
    let _ = writeln!(
        c.buf,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.0}" height="{h_px:.0}" viewBox="0 0 {w_px:.0} {h_px:.0}">"#
    );
    let _ = writeln!(
        c.buf,
        r#"<rect x="0" y="0" width="{w_px:.0}" height="{h_px:.0}" fill="white"/>"#
    );
    // World frame.
    let _ = writeln!(
        c.buf,
        r##"<rect x="{m:.2}" y="{m:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#888" stroke-width="1"/>"##,
        m = MARGIN,
        w = extent.x * SCALE,
        h = extent.y * SCALE
    );
    // Static walls (sensed as red lines in the planner's world view).
    for seg in scenario.wall_segments() {
        c.line(seg.a, seg.b, r##"stroke="#c62828" stroke-width="3""##);
    }
    if let Some(rec) = record {
        // Predicted footprints under everything else.
        for &(center, radius) in &rec.footprints {
            c.circle(
                center,
                radius * SCALE,
                r##"fill="#ef9a9a" fill-opacity="0.45" stroke="none""##,
            );
        }
        // Final actual obstacle positions.
        for ob in &rec.final_obstacles {
            c.circle(
                ob.pos,
                ob.radius * SCALE,
                r##"fill="#90a4ae" fill-opacity="0.8" stroke="#455a64" stroke-width="1""##,
            );
        }
        // Kalman estimates with velocity whiskers.
        for &(pos, vel) in &rec.track_estimates {
            c.circle(pos, 3.0, r##"fill="#1565c0""##);
            c.line(
                pos,
                pos + vel.scale(2.0),
                r##"stroke="#1565c0" stroke-width="1.5""##,
            );
        }
        // Final planned path (rubber-banded).
        c.polyline(
            &rec.planned_path,
            r##"stroke="#7b1fa2" stroke-width="2" stroke-dasharray="6,4""##,
        );
        // Traversed path.
        c.polyline(&rec.trajectory, r#"stroke="black" stroke-width="2""#);
        if let Some(start) = rec.trajectory.first() {
            c.circle(*start, 5.0, r##"fill="#2e7d32""##);
        }
    }
    // Goal marker: darkest spot of the potential landscape.
    c.circle(
        scenario.goal_pos(),
        scenario.goal.radius * SCALE,
        r##"fill="#1b1b1b""##,
    );
    c.buf.push_str("</svg>\n");
    c.buf
}
