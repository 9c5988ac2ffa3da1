//! Minimal SVG rendering of AEO heatmaps on a log10 color scale.

use std::fmt::Write as _;

use wetsim_core::montecarlo::AEO_FLOOR;
use wetsim_core::HeatmapGrid;

const CELL_PX: f64 = 16.0;
const MARGIN: f64 = 48.0;
const BAR_WIDTH: f64 = 18.0;
const BAR_GAP: f64 = 24.0;

// Viridis anchors, dark (log10 AEO = -6) to bright (0).
const STOPS: [(f64, [f64; 3]); 5] = [
    (0.00, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.50, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.00, [253.0, 231.0, 37.0]),
];

/// Maps `log10(aeo)` in `[-6, 0]` to a hex color.
pub fn color(aeo: f64) -> String {
    let lo = AEO_FLOOR.log10();
    let t = ((aeo.max(AEO_FLOOR).log10() - lo) / -lo).clamp(0.0, 1.0);
    let k = STOPS
        .windows(2)
        .position(|w| t <= w[1].0)
        .unwrap_or(STOPS.len() - 2);
    let (t0, c0) = STOPS[k];
    let (t1, c1) = STOPS[k + 1];
    let u = (t - t0) / (t1 - t0);
    let ch = |i: usize| (c0[i] + u * (c1[i] - c0[i])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

pub fn render_heatmap(grid: &HeatmapGrid) -> String {
    let spec = &grid.spec;
    let (nx, ny) = (spec.nx, spec.ny);
    let plot_w = nx as f64 * CELL_PX;
    let plot_h = ny as f64 * CELL_PX;
    let width = MARGIN * 2.0 + plot_w + BAR_GAP + BAR_WIDTH + 40.0;
    let height = MARGIN * 2.0 + plot_h;
    // Probe centers sit on cell centers, so the plot spans half a cell past
    // the first and last probe.
    let (dx, dy) = (spec.dx(), spec.dy());
    let x0 = spec.x_min - dx / 2.0;
    let y1 = spec.y_max + dy / 2.0;
    let sx = |x: f64| MARGIN + (x - x0) / dx * CELL_PX;
    let sy = |y: f64| MARGIN + (y1 - y) / dy * CELL_PX;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">log10 AEO, {} ({}), {} trials</text>"#,
        MARGIN + plot_w / 2.0,
        MARGIN / 2.0,
        grid.strategy,
        grid.correlation.label(),
        grid.trials
    );
    for iy in 0..ny {
        for ix in 0..nx {
            let v = grid.cell(ix, iy);
            let x = spec.x_min + ix as f64 * dx;
            let y = spec.y_min + iy as f64 * dy;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{CELL_PX:.2}" height="{CELL_PX:.2}" fill="{}"><title>({x:.2}, {y:.2}) AEO {v:.3e}</title></rect>"#,
                sx(x) - CELL_PX / 2.0,
                sy(y) - CELL_PX / 2.0,
                color(v)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN:.2}" y="{MARGIN:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    for pb in &grid.pb_positions {
        let (px, py) = (sx(pb.x), sy(pb.y));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2} l6,6 m-12,0 l6,-6 l6,-6 m-12,0 l6,6" stroke="red" stroke-width="2" fill="none"/>"#,
            px, py
        );
        let _ = writeln!(
            s,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="8" fill="none" stroke="red" stroke-width="1.5"/>"#
        );
    }

    // Axis labels at the extent corners.
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="middle">x [m]</text>"#,
        MARGIN,
        MARGIN + plot_h + 16.0,
        spec.x_min,
        MARGIN + plot_w,
        MARGIN + plot_h + 16.0,
        spec.x_max,
        MARGIN + plot_w / 2.0,
        MARGIN + plot_h + 32.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">y [m]</text>"#,
        MARGIN - 4.0,
        MARGIN + plot_h,
        spec.y_min,
        MARGIN - 4.0,
        MARGIN + 8.0,
        spec.y_max,
        MARGIN - 28.0,
        MARGIN + plot_h / 2.0,
        MARGIN - 28.0,
        MARGIN + plot_h / 2.0
    );

    // Colorbar in 0.1-decade bands.
    let bx = MARGIN + plot_w + BAR_GAP;
    let bands = 60;
    let band_h = plot_h / bands as f64;
    for b in 0..bands {
        let t = (b as f64 + 0.5) / bands as f64;
        let log = -6.0 * t;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.2}" y="{:.2}" width="{BAR_WIDTH:.2}" height="{:.2}" fill="{}"/>"#,
            MARGIN + b as f64 * band_h,
            band_h + 0.5,
            color(10f64.powf(log))
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{bx:.2}" y="{MARGIN:.2}" width="{BAR_WIDTH:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    for tick in 0..=6 {
        let y = MARGIN + tick as f64 / 6.0 * plot_h;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            bx + BAR_WIDTH + 4.0,
            y + 4.0,
            -tick
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_scale_ends() {
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(1e-6), "#440154");
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1e-3), "#21918c");
    }
}
