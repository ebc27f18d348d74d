//! Text artifacts: CSV tables and SVG stability diagrams.
//!
//! Numbers are written with nine decimals and a `.` radix, independent of
//! locale; negative zero is printed as zero so equal values give equal bytes.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::map::{Cell, StabilityMapGrid};
use crate::sim::Trajectory;

pub const MAP_HEADER: &str = "T_d,a_m,lhs,verdict";
pub const TRAJECTORY_HEADER: &str = "t,vehicle,class,x,v,a,gap";
pub const EQUILIBRIUM_HEADER: &str = "v_e,s_e";

/// Fixed nine-decimal rendering.
pub fn num(x: f64) -> String {
    let s = format!("{x:.9}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Writes one row per cell; cells without an equilibrium leave `lhs` empty.
pub fn write_map_csv<W: Write>(grid: &StabilityMapGrid, mut w: W) -> io::Result<()> {
    writeln!(w, "{MAP_HEADER}")?;
    for (t_d, a_m, cell) in grid.iter() {
        let lhs = match cell {
            Cell::Evaluated(v) => num(v.lhs),
            Cell::NoEquilibrium => String::new(),
        };
        writeln!(w, "{},{},{},{}", num(t_d), num(a_m), lhs, cell.verdict().as_str())?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut w: W) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (t, frame) in traj.times.iter().zip(&traj.samples) {
        let t = num(*t);
        for (n, (s, class)) in frame.iter().zip(&traj.classes).enumerate() {
            let gap = s.gap.map(num).unwrap_or_default();
            writeln!(
                w,
                "{t},{n},{},{},{},{},{gap}",
                class.symbol(),
                num(s.position),
                num(s.velocity),
                num(s.acceleration)
            )?;
        }
    }
    Ok(())
}

/// `v_e,s_e` rows; speeds without an equilibrium carry `no-equilibrium`.
pub fn write_equilibrium_csv<W: Write>(rows: &[(f64, Option<f64>)], mut w: W) -> io::Result<()> {
    writeln!(w, "{EQUILIBRIUM_HEADER}")?;
    for &(v, s) in rows {
        match s {
            Some(s) => writeln!(w, "{},{}", num(v), num(s))?,
            None => writeln!(w, "{},no-equilibrium", num(v))?,
        }
    }
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Critical curves `a_m(T_d)` from one or more sweeps over the same axes,
/// labelled by their neighbour count. Headway runs horizontally, maximum
/// acceleration vertically; the stable side lies above each curve.
pub fn critical_curves_svg(maps: &[(usize, &StabilityMapGrid)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 130.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 60.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let Some((_, first)) = maps.first() else {
        svg.push_str("</svg>\n");
        return svg;
    };
    let tx = first.spec.time_headway;
    let ay = first.spec.max_acceleration;
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |t: f64| LEFT + (t - tx.min) / span(tx.min, tx.max) * pw;
    let py = |a: f64| TOP + ph - (a - ay.min) / span(ay.min, ay.max) * ph;

    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num2(LEFT),
        num2(TOP),
        num2(pw),
        num2(ph)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let t = tx.min + f * (tx.max - tx.min);
        let a = ay.min + f * (ay.max - ay.min);
        let (x, y) = (px(t), py(a));
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            num2(x),
            num2(TOP + ph),
            num2(TOP + ph + 5.0),
            num2(TOP + ph + 20.0),
            tick(t)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
            num2(LEFT - 5.0),
            num2(y),
            num2(LEFT),
            num2(LEFT - 8.0),
            num2(y + 4.0),
            tick(a)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">T_d (s)</text>"#,
        num2(LEFT + pw / 2.0),
        num2(H - 15.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">a_m (m/s²)</text>"#,
        num2(TOP + ph / 2.0)
    );

    for (k, (m, grid)) in maps.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (t, a) in grid.critical_curve() {
            match a {
                Some(a) => runs.last_mut().expect("non-empty").push((px(t), py(a))),
                None if !runs.last().expect("non-empty").is_empty() => runs.push(Vec::new()),
                None => {}
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run
                .iter()
                .map(|&(x, y)| format!("{},{}", num2(x), num2(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        let ly = TOP + 15.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}">M = {m}</text>"#,
            num2(lx),
            num2(ly),
            num2(lx + 25.0),
            num2(lx + 32.0),
            num2(ly + 4.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn num2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick(x: f64) -> String {
    let s = num2(x);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{stability_map, AxisRange, GridSpec};

    #[test]
    fn fixed_decimals_without_negative_zero() {
        assert_eq!(num(0.0), "0.000000000");
        assert_eq!(num(-0.0), "0.000000000");
        assert_eq!(num(-1e-12), "0.000000000");
        assert_eq!(num(-1.5678446769), "-1.567844677");
        assert_eq!(num(36.454334048118657), "36.454334048");
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick(0.0), "0");
        assert_eq!(tick(0.5), "0.5");
        assert_eq!(tick(2.0), "2");
        assert_eq!(tick(1.25), "1.25");
    }

    #[test]
    fn single_cell_map() {
        let spec = GridSpec {
            max_acceleration: AxisRange::point(2.5),
            time_headway: AxisRange::point(2.5),
            ..Default::default()
        };
        let grid = stability_map(&spec).unwrap();
        let mut out = Vec::new();
        write_map_csv(&grid, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], MAP_HEADER);
        assert!(lines[1].starts_with("2.500000000,2.500000000,-"));
        assert!(lines[1].ends_with(",stable"));
    }

    #[test]
    fn equilibrium_rows() {
        let mut out = Vec::new();
        write_equilibrium_csv(&[(0.0, Some(2.0)), (33.3, None)], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "v_e,s_e\n0.000000000,2.000000000\n33.300000000,no-equilibrium\n"
        );
    }

    #[test]
    fn svg_has_labelled_axes_and_one_curve_per_sweep() {
        let spec = GridSpec {
            max_acceleration: AxisRange::new(0.1, 2.5, 25),
            time_headway: AxisRange::new(0.5, 2.5, 9),
            connectivity: crate::params::ConnectivityParams::disabled(),
            neighbors: 0,
            ..Default::default()
        };
        let g0 = stability_map(&spec).unwrap();
        let g1 = stability_map(&spec.with_neighbors(1)).unwrap();
        let svg = critical_curves_svg(&[(0, &g0), (1, &g1)]);
        assert!(svg.contains("T_d (s)"));
        assert!(svg.contains("a_m (m/s²)"));
        assert!(svg.contains("M = 0") && svg.contains("M = 1"));
        assert!(svg.contains("<polyline"));
        assert_eq!(svg, critical_curves_svg(&[(0, &g0), (1, &g1)]));
    }
}
