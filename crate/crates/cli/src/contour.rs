//! Marching squares on an `(r, θ)` grid, drawn in the meridian half-plane.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write;

use landau_asym::landau::StreamFunction;

/// Polylines of one level, as `(ρ, z)` points with `ρ = r sinθ`, `z = r cosθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

pub type Polyline = Vec<(f64, f64)>;

/// Crossing points are keyed by the grid edge they lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between `(i, j)` and `(i + 1, j)`.
    R(usize, usize),
    /// Between `(i, j)` and `(i, j + 1)`.
    T(usize, usize),
}

struct Sampled {
    r: Vec<f64>,
    t: Vec<f64>,
    v: Vec<f64>,
}

impl Sampled {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.t.len() + j]
    }

    fn point(&self, e: Edge, level: f64) -> (f64, f64) {
        let (r, t) = match e {
            Edge::R(i, j) => {
                let s = frac(self.at(i, j), self.at(i + 1, j), level);
                (self.r[i] + s * (self.r[i + 1] - self.r[i]), self.t[j])
            }
            Edge::T(i, j) => {
                let s = frac(self.at(i, j), self.at(i, j + 1), level);
                (self.r[i], self.t[j] + s * (self.t[j + 1] - self.t[j]))
            }
        };
        (r * t.sin(), r * t.cos())
    }
}

fn frac(a: f64, b: f64, level: f64) -> f64 {
    if a == b {
        0.5
    } else {
        ((level - a) / (b - a)).clamp(0.0, 1.0)
    }
}

/// Contours of `psi` on `r ∈ [r_max/n, r_max]`, `θ ∈ [0, π]`, with `n` cells per direction.
pub fn meridian_contours(psi: &dyn StreamFunction, r_max: f64, n: usize, levels: &[f64]) -> Vec<Contour> {
    let r: Vec<f64> = (0..=n).map(|i| r_max * (1.0 + i as f64 * (n as f64 - 1.0) / n as f64) / n as f64).collect();
    let t: Vec<f64> = (0..=n).map(|j| PI * j as f64 / n as f64).collect();
    let mut v = Vec::with_capacity(r.len() * t.len());
    for &ri in &r {
        for &tj in &t {
            v.push(psi.psi(ri, tj));
        }
    }
    let grid = Sampled { r, t, v };
    levels.iter().map(|&level| Contour { level, polylines: trace(&grid, level, n) }).collect()
}

fn trace(g: &Sampled, level: f64, n: usize) -> Vec<Vec<(f64, f64)>> {
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let c = [g.at(i, j), g.at(i + 1, j), g.at(i + 1, j + 1), g.at(i, j + 1)];
            let edges = [Edge::R(i, j), Edge::T(i + 1, j), Edge::R(i, j + 1), Edge::T(i, j)];
            let above: Vec<bool> = c.iter().map(|x| *x >= level).collect();
            let crossing: Vec<usize> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let center = c.iter().sum::<f64>() / 4.0;
                    // the center decides which corners connect
                    if (center >= level) == above[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    join(g, level, &segments)
}

fn join(g: &Sampled, level: f64, segments: &[(Edge, Edge)]) -> Vec<Vec<(f64, f64)>> {
    let mut adj: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(k);
        adj.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start: Edge, first: usize, used: &mut Vec<bool>| {
        let mut chain = vec![start];
        let mut seg = first;
        let mut at = start;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            chain.push(next);
            at = next;
            match adj[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };
    // open chains start at an edge touched once; closed loops are picked up afterwards
    let mut order: Vec<Edge> = adj.keys().copied().collect();
    order.sort_by_key(|e| match e {
        Edge::R(i, j) => (0, *i, *j),
        Edge::T(i, j) => (1, *i, *j),
    });
    for pass in 0..2 {
        for e in &order {
            let ends = &adj[e];
            if pass == 0 && ends.len() != 1 {
                continue;
            }
            while let Some(&s) = adj[e].iter().find(|&&s| !used[s]) {
                let chain = walk(*e, s, &mut used);
                lines.push(chain.into_iter().map(|e| g.point(e, level)).collect());
            }
        }
    }
    lines
}

/// Scalable drawing of the half-disc `ρ ∈ [0, r_max]`, `|z| ≤ r_max`, in model units (`y = -z`).
pub fn to_svg(contours: &[Contour], r_max: f64) -> String {
    let stroke = r_max / 300.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="400" height="800">"#,
        -0.02 * r_max,
        -1.02 * r_max,
        1.04 * r_max,
        2.04 * r_max
    );
    let _ = writeln!(
        s,
        r#"  <line class="axis" x1="0" y1="{}" x2="0" y2="{}" stroke="gray" stroke-width="{stroke}"/>"#,
        -r_max, r_max
    );
    for c in contours {
        let _ = writeln!(s, r#"  <g class="contour" data-level="{}" fill="none" stroke="black" stroke-width="{stroke}">"#, c.level);
        for line in &c.polylines {
            let pts: Vec<String> = line.iter().map(|(rho, z)| format!("{:.9},{:.9}", rho, -z)).collect();
            let _ = writeln!(s, r#"    <polyline points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, "  </g>");
    }
    s.push_str("</svg>\n");
    s
}

/// Reads back `(level, polylines)` from [`to_svg`] output, converting to `(ρ, z)`.
pub fn parse_svg(svg: &str) -> Vec<(f64, Vec<Polyline>)> {
    let mut out: Vec<(f64, Vec<Polyline>)> = Vec::new();
    for line in svg.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix(r#"<g class="contour" data-level=""#) {
            let level = rest.split('"').next().and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
            out.push((level, Vec::new()));
        } else if let Some(rest) = line.strip_prefix(r#"<polyline points=""#) {
            let pts = rest
                .split('"')
                .next()
                .unwrap_or("")
                .split_whitespace()
                .filter_map(|p| {
                    let (a, b) = p.split_once(',')?;
                    Some((a.parse().ok()?, -b.parse::<f64>().ok()?))
                })
                .collect();
            if let Some(last) = out.last_mut() {
                last.1.push(pts);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use landau_asym::landau::{LandauStream, PlainStream};

    #[test]
    fn circle_is_one_closed_loop() {
        // level 1 is the unit circle around (ρ, z) = (2, 0)
        let psi = PlainStream(|r: f64, t: f64| (r * t.sin() - 2.0).powi(2) + (r * t.cos()).powi(2));
        let c = meridian_contours(&psi, 5.0, 200, &[1.0]);
        assert_eq!(c[0].polylines.len(), 1);
        let line = &c[0].polylines[0];
        assert_eq!(line.first(), line.last());
        for (rho, z) in line {
            assert!((((rho - 2.0).powi(2) + z * z).sqrt() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn svg_round_trip() {
        let psi = LandauStream { a: 2.0 };
        let c = meridian_contours(&psi, 5.0, 100, &[0.5, 1.0]);
        let parsed = parse_svg(&to_svg(&c, 5.0));
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0, 0.5);
        assert_eq!(parsed[1].1.len(), c[1].polylines.len());
        let (x, y) = c[1].polylines[0][0];
        let (px, py) = parsed[1].1[0][0];
        assert!((x - px).abs() < 1e-8 && (y - py).abs() < 1e-8);
    }
}
