//! Number formatting, CSV and SVG text, and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use lcs2d::Vec2;

use crate::CliError;

/// Shortest decimal that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV text with a header row.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(&row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("cells are UTF-8")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io)?;
    }
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    /// Closed outline.
    Boundary,
    /// Open polyline.
    Outline,
    Trajectory,
    /// One small square per point.
    Cells,
    Marker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub style: Style,
    pub points: Vec<Vec2>,
}

const WIDTH: f64 = 640.0;

/// Renders `layers` into an SVG document whose view is `frame` (lower left,
/// upper right) grown by 10% on each side.
pub fn svg(layers: &[Layer], frame: (Vec2, Vec2)) -> String {
    let (lo, hi) = frame;
    let pad = (hi - lo) * 0.1;
    let (lo, hi) = (lo - pad, hi + pad);
    let span = (hi - lo).map(|d| if d > 0.0 { d } else { 1.0 });
    let k = WIDTH / span.x;
    let height = (span.y * k).clamp(1.0, 4.0 * WIDTH);
    let ky = height / span.y;
    let map = |p: &Vec2| ((p.x - lo.x) * k, height - (p.y - lo.y) * ky);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for layer in layers {
        match layer.style {
            Style::Boundary | Style::Outline | Style::Trajectory => {
                let (colour, fill) = match layer.style {
                    Style::Boundary => ("black", "#dde8f4"),
                    Style::Outline => ("black", "none"),
                    _ => ("#c0392b", "none"),
                };
                let pts: Vec<String> = layer
                    .points
                    .iter()
                    .map(|p| {
                        let (x, y) = map(p);
                        format!("{x:.3},{y:.3}")
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="{fill}" stroke="{colour}" stroke-width="1.5"/>"#,
                    pts.join(" ")
                );
            }
            Style::Cells => {
                for p in &layer.points {
                    let (x, y) = map(p);
                    let _ = writeln!(out, r##"<rect x="{:.3}" y="{:.3}" width="2" height="2" fill="#2e86c1"/>"##, x - 1.0, y - 1.0);
                }
            }
            Style::Marker => {
                for p in &layer.points {
                    let (x, y) = map(p);
                    let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="darkorange"/>"#);
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Axis-aligned bounding box of a non-empty point list.
pub fn bounding_box(points: &[Vec2]) -> Option<(Vec2, Vec2)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-12, 1e300, 0.5451657318, 7.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(7.0), "7.0");
    }

    #[test]
    fn csv_has_header() {
        let text = csv(&["x", "y"], [vec!["1.0".into(), "2.0".into()]]);
        assert_eq!(text, "x,y\n1.0,2.0\n");
    }

    #[test]
    fn svg_is_deterministic_and_framed() {
        let square = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 0.0)];
        let layers = [Layer { style: Style::Boundary, points: square.clone() }];
        let frame = bounding_box(&square).unwrap();
        let a = svg(&layers, frame);
        assert_eq!(a, svg(&layers, frame));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        // 10% margin: the origin maps to 640/12 from the left edge.
        assert!(a.contains("53.333,586.667"), "{a}");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(write_atomic(&dir.path().join("no/such/file"), b"x"), Err(CliError::Io(_))));
    }
}
