//! Static SVG of a scan: region bands behind the entropy curve.

use std::fmt::Write;

use crate::scan::{Region, ScanDataset};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

fn fill(region: Region) -> &'static str {
    match region {
        Region::CpDivisible => "#cfe8cf",
        Region::TensorPDivisible => "#d6e4f5",
        Region::PDivisible => "#f6e7c8",
        Region::NotPDivisible => "#f2d0d0",
    }
}

pub fn render(data: &ScanDataset) -> String {
    let rows = &data.rows;
    let (x0, x1) = (data.config.delta_grid.min, data.config.delta_grid.max);
    let y_max = rows.iter().map(|r| r.alf_entropy).fold(0.0, f64::max).max(1e-12) * 1.05;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (1.0 - y / y_max) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // one band per grid cell, split halfway between neighbouring points
    for (i, row) in rows.iter().enumerate() {
        let lo = if i == 0 { x0 } else { 0.5 * (rows[i - 1].delta_ratio + row.delta_ratio) };
        let hi = if i + 1 == rows.len() { x1 } else { 0.5 * (row.delta_ratio + rows[i + 1].delta_ratio) };
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{TOP}" width="{:.2}" height="{plot_h}" fill="{}"/>"#,
            sx(lo),
            (sx(hi) - sx(lo)).max(0.0),
            fill(row.region)
        );
    }

    let points: Vec<String> =
        rows.iter().map(|r| format!("{:.2},{:.2}", sx(r.delta_ratio), sy(r.alf_entropy))).collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#, points.join(" "));

    let _ =
        writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        let y = y_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.2}</text>"#,
            sx(x),
            HEIGHT - BOTTOM + 16.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#, LEFT - 6.0, sy(y) + 4.0);
    }
    let _ =
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Δ/p</text>"#, LEFT + plot_w / 2.0, HEIGHT - 12.0);
    let unit = data.config.log_base.to_string();
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">entropy rate (log base {unit})</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for (k, region) in Region::ALL.iter().enumerate() {
        let x = LEFT + k as f64 * plot_w / 4.0;
        let _ =
            writeln!(s, r#"<rect x="{x:.2}" y="12" width="14" height="14" fill="{}" stroke="black"/>"#, fill(*region));
        let _ = writeln!(s, r#"<text x="{:.2}" y="24">{}</text>"#, x + 20.0, region.label());
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScanConfig;
    use crate::scan::{ScanRow, ThresholdRatios};

    fn row(x: f64, h: f64, region: Region) -> ScanRow {
        ScanRow {
            delta_ratio: x,
            alf_entropy: h,
            chain_rate: h,
            mutual_info: 0.0,
            region,
            cp_div: region == Region::CpDivisible,
            tensor_p_div: false,
            p_div: false,
            gns_p_div: false,
            first_failure_step: None,
            boundary: false,
        }
    }

    #[test]
    fn one_band_per_row_and_a_curve() {
        let data = ScanDataset {
            schema: String::new(),
            config: ScanConfig::default(),
            thresholds: ThresholdRatios { cp: None, tensor_p: None, p: None },
            rows: vec![
                row(0.0, 1.2, Region::CpDivisible),
                row(0.5, 1.0, Region::PDivisible),
                row(1.0, 0.8, Region::NotPDivisible),
            ],
        };
        let svg = render(&data);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches(fill(Region::PDivisible)).count(), 2);
    }
}
