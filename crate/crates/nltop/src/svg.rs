//! SVG renderings of the landscape: a flat-shaded surface view and a filled
//! iso-band contour view, both drawn in the 2D embedding plane.
//!
//! Output is deterministic: triangles are emitted in triangulation order,
//! bands in ascending value order, markers in sample order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::landscape::{LandscapeSurface, LowerHullEnvelope};
use crate::sampler::SampleSet;

/// Rendering options shared by both views.
#[derive(Debug, Clone)]
pub struct SvgOptions {
    /// Canvas width in pixels (height follows the data aspect ratio).
    pub width: f64,
    /// Blank border around the drawing, in pixels.
    pub margin: f64,
    /// Number of iso-bands in the contour view.
    pub bands: usize,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 720.0,
            margin: 32.0,
            bands: 10,
        }
    }
}

/// Affine map from embedding coordinates to pixel coordinates (y flipped).
struct Viewport {
    scale: f64,
    x0: f64,
    y1: f64,
    margin: f64,
    width: f64,
    height: f64,
}

impl Viewport {
    fn fit(points: impl Iterator<Item = [f64; 2]>, opts: &SvgOptions) -> Result<Self> {
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        if !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidParameter("no points to render".into()));
        }
        let span_x = (x1 - x0).max(1e-12);
        let span_y = (y1 - y0).max(1e-12);
        let inner = opts.width - 2.0 * opts.margin;
        let scale = inner / span_x.max(span_y);
        Ok(Self {
            scale,
            x0,
            y1,
            margin: opts.margin,
            width: span_x * scale + 2.0 * opts.margin,
            height: span_y * scale + 2.0 * opts.margin,
        })
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.margin + (p[0] - self.x0) * self.scale,
            self.margin + (self.y1 - p[1]) * self.scale,
        )
    }
}

/// Cold-to-warm color ramp for normalized values in [0, 1]:
/// blue through pale yellow to red.
pub fn ramp_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let (low, mid, high) = (
        (0.20, 0.32, 0.76),
        (0.96, 0.92, 0.72),
        (0.82, 0.18, 0.15),
    );
    let (r, g, b) = if v < 0.5 {
        let t = v * 2.0;
        (lerp(low.0, mid.0, t), lerp(low.1, mid.1, t), lerp(low.2, mid.2, t))
    } else {
        let t = (v - 0.5) * 2.0;
        (lerp(mid.0, high.0, t), lerp(mid.1, high.1, t), lerp(mid.2, high.2, t))
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8
    )
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn polygon_points(vp: &Viewport, pts: &[[f64; 3]]) -> String {
    let mut out = String::new();
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = vp.map([p[0], p[1]]);
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{},{}", px(x), px(y));
    }
    out
}

fn svg_header(vp: &Viewport, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">\n<title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        px(vp.width),
        px(vp.height),
        px(vp.width),
        px(vp.height),
        title
    )
}

fn marker_layer(vp: &Viewport, set: &SampleSet, coords: &[[f64; 2]]) -> String {
    let mut out = String::from("<g class=\"markers\">\n");
    // Squares at every group's first saved iterate.
    for (s, c) in set.samples.iter().zip(coords) {
        if s.iteration == 0 && !s.is_reference {
            let (x, y) = vp.map(*c);
            let _ = writeln!(
                out,
                "<rect class=\"start\" x=\"{}\" y=\"{}\" width=\"7\" height=\"7\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>",
                px(x - 3.5),
                px(y - 3.5)
            );
        }
    }
    // An x at each group's best (lowest clipped objective) sample.
    for g in 0..set.num_groups {
        if set.reference_group_id == Some(g) {
            continue;
        }
        let best = set
            .samples
            .iter()
            .zip(coords)
            .filter(|(s, _)| s.group_id == g)
            .min_by(|(a, _), (b, _)| {
                a.clipped_j
                    .total_cmp(&b.clipped_j)
                    .then(a.iteration.cmp(&b.iteration))
            });
        if let Some((_, c)) = best {
            let (x, y) = vp.map(*c);
            let _ = writeln!(
                out,
                "<path class=\"best\" d=\"M {} {} L {} {} M {} {} L {} {}\" stroke=\"black\" stroke-width=\"1.4\"/>",
                px(x - 4.0),
                px(y - 4.0),
                px(x + 4.0),
                px(y + 4.0),
                px(x - 4.0),
                px(y + 4.0),
                px(x + 4.0),
                px(y - 4.0)
            );
        }
    }
    // A circle at the reference group's best sample.
    if let Some(g) = set.reference_group_id {
        let best = set
            .samples
            .iter()
            .zip(coords)
            .filter(|(s, _)| s.group_id == g)
            .min_by(|(a, _), (b, _)| {
                a.clipped_j
                    .total_cmp(&b.clipped_j)
                    .then(a.iteration.cmp(&b.iteration))
            });
        if let Some((_, c)) = best {
            let (x, y) = vp.map(*c);
            let _ = writeln!(
                out,
                "<circle class=\"reference\" cx=\"{}\" cy=\"{}\" r=\"4.5\" fill=\"none\" stroke=\"black\" stroke-width=\"1.4\"/>",
                px(x),
                px(y)
            );
        }
    }
    out.push_str("</g>\n");
    out
}

/// Renders the triangulated surface flat-shaded by mean normalized value,
/// with the projected envelope faces drawn as a wireframe overlay.
pub fn write_surface_svg(
    path: &Path,
    surface: &LandscapeSurface,
    envelope: &LowerHullEnvelope,
    set: &SampleSet,
    coords: &[[f64; 2]],
    opts: &SvgOptions,
) -> Result<()> {
    let vp = Viewport::fit(surface.points.iter().map(|p| p.y), opts)?;
    let mut out = svg_header(&vp, "objective surface over the 2D embedding");

    out.push_str("<g class=\"surface\" stroke=\"#00000022\" stroke-width=\"0.4\">\n");
    for tri in surface.triangles() {
        let pts: Vec<[f64; 3]> = tri
            .iter()
            .map(|&i| {
                let p = &surface.points[i];
                [p.y[0], p.y[1], p.value]
            })
            .collect();
        let mean = (pts[0][2] + pts[1][2] + pts[2][2]) / 3.0;
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{}\"/>",
            polygon_points(&vp, &pts),
            ramp_color(mean)
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"envelope\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.0\" stroke-dasharray=\"4 3\">\n");
    for face in &envelope.faces {
        let _ = writeln!(out, "<polygon points=\"{}\"/>", polygon_points(&vp, face));
    }
    out.push_str("</g>\n");

    out.push_str(&marker_layer(&vp, set, coords));
    out.push_str("</svg>\n");
    fs::write(path, out)?;
    Ok(())
}

/// One polygon vertex carrying its interpolated normalized value.
type VPoint = [f64; 3];

/// Clips a polygon against the half-plane `sign * (value - level) >= 0`,
/// interpolating positions at the crossings (Sutherland–Hodgman step).
fn clip_by_value(poly: &[VPoint], level: f64, keep_above: bool) -> Vec<VPoint> {
    let inside = |p: &VPoint| {
        if keep_above {
            p[2] >= level
        } else {
            p[2] <= level
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ia, ib) = (inside(&a), inside(&b));
        if ia {
            out.push(a);
        }
        if ia != ib {
            let denom = b[2] - a[2];
            // The values differ (one side is strictly across the level), so
            // the edge is not parallel to the cut.
            let t = if denom.abs() < f64::MIN_POSITIVE {
                0.5
            } else {
                ((level - a[2]) / denom).clamp(0.0, 1.0)
            };
            out.push([
                a[0] + (b[0] - a[0]) * t,
                a[1] + (b[1] - a[1]) * t,
                level,
            ]);
        }
    }
    out
}

fn polygon_area(poly: &[VPoint]) -> f64 {
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice.abs() / 2.0
}

/// Renders filled iso-bands of the normalized objective. Band `k` covers
/// values in [k/bands, (k+1)/bands]; empty bands are omitted.
pub fn write_contour_svg(
    path: &Path,
    surface: &LandscapeSurface,
    set: &SampleSet,
    coords: &[[f64; 2]],
    opts: &SvgOptions,
) -> Result<()> {
    if opts.bands == 0 {
        return Err(Error::InvalidParameter("need at least one contour band".into()));
    }
    let vp = Viewport::fit(surface.points.iter().map(|p| p.y), opts)?;
    let mut out = svg_header(&vp, "iso-bands of the normalized objective");

    let triangles: Vec<[VPoint; 3]> = surface
        .triangles()
        .into_iter()
        .map(|tri| {
            tri.map(|i| {
                let p = &surface.points[i];
                [p.y[0], p.y[1], p.value]
            })
        })
        .collect();

    for k in 0..opts.bands {
        let lo = k as f64 / opts.bands as f64;
        let hi = (k + 1) as f64 / opts.bands as f64;
        let mut body = String::new();
        for tri in &triangles {
            let cut = clip_by_value(&clip_by_value(tri, lo, true), hi, false);
            if cut.len() >= 3 && polygon_area(&cut) > 1e-12 {
                let _ = writeln!(body, "<polygon points=\"{}\"/>", polygon_points(&vp, &cut));
            }
        }
        if !body.is_empty() {
            let _ = writeln!(
                out,
                "<g class=\"band\" data-range=\"{lo:.3} {hi:.3}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"0.3\">",
                ramp_color((lo + hi) / 2.0),
                ramp_color((lo + hi) / 2.0)
            );
            out.push_str(&body);
            out.push_str("</g>\n");
        }
    }

    out.push_str(&marker_layer(&vp, set, coords));
    out.push_str("</svg>\n");
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Sample;

    fn grid_surface(heights: impl Fn(f64, f64) -> f64) -> LandscapeSurface {
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let x = i as f64 / 5.0;
                let y = j as f64 / 5.0;
                coords.push([x, y]);
                values.push(heights(x, y));
            }
        }
        LandscapeSurface::build(&coords, &values).unwrap()
    }

    fn tiny_set(n: usize) -> SampleSet {
        let samples = (0..n)
            .map(|i| Sample {
                group_id: i / 2,
                iteration: (i % 2) * 5,
                is_reference: false,
                design: vec![0.5],
                raw_j: i as f64,
                clipped_j: i as f64,
            })
            .collect();
        SampleSet {
            samples,
            num_groups: n.div_ceil(2),
            reference_group_id: None,
            aborted_groups: Vec::new(),
        }
    }

    #[test]
    fn contour_bands_cover_the_full_range() {
        let surface = grid_surface(|x, y| x + y);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.svg");
        let set = tiny_set(4);
        let coords: Vec<[f64; 2]> = (0..4).map(|i| [i as f64 * 0.3, 0.1]).collect();
        write_contour_svg(
            &path,
            &surface,
            &set,
            &coords,
            &SvgOptions { bands: 8, ..SvgOptions::default() },
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let bands = text.matches("class=\"band\"").count();
        assert_eq!(bands, 8, "continuous surface spanning [0,1] fills every band");
        assert!(text.starts_with("<svg"));
        assert!(text.contains("class=\"start\""));
        assert!(text.contains("class=\"best\""));
    }

    #[test]
    fn flat_surface_collapses_to_one_band() {
        let mut coords = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        coords.push([0.5, 0.5]);
        let values = vec![3.0; 5];
        let surface = LandscapeSurface::build(&coords, &values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.svg");
        let set = tiny_set(2);
        write_contour_svg(
            &path,
            &surface,
            &set,
            &[[0.0, 0.0], [1.0, 1.0]],
            &SvgOptions::default(),
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("class=\"band\"").count(), 1);
    }

    #[test]
    fn surface_view_draws_triangles_envelope_and_markers() {
        let surface = grid_surface(|x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2));
        let envelope = crate::landscape::lower_convex_hull(&surface, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.svg");
        let mut set = tiny_set(4);
        set.reference_group_id = Some(1);
        for s in &mut set.samples {
            if s.group_id == 1 {
                s.is_reference = true;
            }
        }
        let coords: Vec<[f64; 2]> = vec![[0.0, 0.0], [0.2, 0.9], [0.8, 0.4], [1.0, 1.0]];
        write_surface_svg(&path, &surface, &envelope, &set, &coords, &SvgOptions::default())
            .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.matches("<polygon").count(),
            surface.num_triangles() + envelope.faces.len()
        );
        assert!(text.contains("class=\"reference\""));
        assert!(text.contains("class=\"start\""));
    }

    #[test]
    fn ramp_endpoints_are_cool_and_warm() {
        assert_eq!(ramp_color(0.0), "#3352c2");
        assert_eq!(ramp_color(1.0), "#d12e26");
        let mid = ramp_color(0.5);
        assert_eq!(mid, "#f5ebb8");
        assert_eq!(ramp_color(-3.0), ramp_color(0.0));
    }
}
