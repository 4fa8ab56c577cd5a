//! Reference computations that share no code with the library: closed-form
//! maps written out from the geometry, finite differences, and a dense
//! marching-cell scan for preimages.

use std::f64::consts::{FRAC_PI_2, TAU};

pub type Point = [f64; 2];

/// Squared leg lengths from the anchor positions.
pub fn manipulator(a1: f64, a2: f64, b1: f64, b2: f64, d: f64) -> impl Fn(f64, f64) -> Point + Sync {
    move |phi, y| {
        let (s, c) = phi.sin_cos();
        let dx1 = b1 * c + d * s - a1;
        let dy1 = y + b1 * s - d * c;
        let dx2 = -b2 * c + d * s + a2;
        let dy2 = y - b2 * s - d * c;
        [dx1 * dx1 + dy1 * dy1, dx2 * dx2 + dy2 * dy2]
    }
}

pub fn complex_square(a: f64, b: f64) -> impl Fn(f64, f64) -> Point + Sync {
    move |x, y| [x * x - y * y + 4.0 * a * x, 2.0 * x * y + 4.0 * b * y]
}

pub fn quarto(a: f64, b: f64) -> impl Fn(f64, f64) -> Point + Sync {
    move |x, y| [x * x + 2.0 * a * y, y * y + 2.0 * b * x]
}

/// Central-difference Jacobian, rows = outputs.
pub fn fd_jacobian(f: &impl Fn(f64, f64) -> Point, x: f64, y: f64, h: f64) -> [[f64; 2]; 2] {
    let px = f(x + h, y);
    let mx = f(x - h, y);
    let py = f(x, y + h);
    let my = f(x, y - h);
    [
        [(px[0] - mx[0]) / (2.0 * h), (py[0] - my[0]) / (2.0 * h)],
        [(px[1] - mx[1]) / (2.0 * h), (py[1] - my[1]) / (2.0 * h)],
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct ScanBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// First coordinate is an angle with period 2π.
    pub periodic: bool,
}

impl ScanBox {
    pub fn manipulator(y_max: f64) -> Self {
        Self {
            x_min: -FRAC_PI_2,
            x_max: -FRAC_PI_2 + TAU,
            y_min: -y_max,
            y_max,
            periodic: true,
        }
    }

    pub fn square(h: f64) -> Self {
        Self {
            x_min: -h,
            x_max: h,
            y_min: -h,
            y_max: h,
            periodic: false,
        }
    }
}

/// Zero-contour pieces of a bilinear cell via marching squares.
fn contour_segments(c: [f64; 4], p: [Point; 4]) -> Vec<(Point, Point)> {
    // corners in order: (0,0) (1,0) (1,1) (0,1)
    let mut crossings = Vec::with_capacity(4);
    for e in 0..4 {
        let (i, j) = (e, (e + 1) % 4);
        let (a, b) = (c[i], c[j]);
        if (a < 0.0) != (b < 0.0) {
            let t = a / (a - b);
            crossings.push([p[i][0] + t * (p[j][0] - p[i][0]), p[i][1] + t * (p[j][1] - p[i][1])]);
        }
    }
    match crossings.len() {
        2 => vec![(crossings[0], crossings[1])],
        4 => {
            // Saddle: resolve with the centre value.
            let centre = 0.25 * (c[0] + c[1] + c[2] + c[3]);
            if (centre < 0.0) == (c[0] < 0.0) {
                vec![(crossings[0], crossings[1]), (crossings[2], crossings[3])]
            } else {
                vec![(crossings[3], crossings[0]), (crossings[1], crossings[2])]
            }
        }
        _ => Vec::new(),
    }
}

fn intersect(a: (Point, Point), b: (Point, Point)) -> Option<Point> {
    let r = [a.1[0] - a.0[0], a.1[1] - a.0[1]];
    let s = [b.1[0] - b.0[0], b.1[1] - b.0[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let q = [b.0[0] - a.0[0], b.0[1] - a.0[1]];
    let t = (q[0] * s[1] - q[1] * s[0]) / den;
    let u = (q[0] * r[1] - q[1] * r[0]) / den;
    let eps = 1e-12;
    ((-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u))
        .then(|| [a.0[0] + t * r[0], a.0[1] + t * r[1]])
}

/// Common zeros of `f − target` found by intersecting the marching-squares
/// contours of both components on an `n × n` grid.
pub fn grid_scan(f: &(impl Fn(f64, f64) -> Point + Sync), target: Point, bx: ScanBox, n: usize) -> Vec<Point> {
    let dx = (bx.x_max - bx.x_min) / n as f64;
    let dy = (bx.y_max - bx.y_min) / n as f64;
    let row = |j: usize| -> Vec<Point> {
        let y = bx.y_min + j as f64 * dy;
        (0..=n)
            .map(|i| {
                let v = f(bx.x_min + i as f64 * dx, y);
                [v[0] - target[0], v[1] - target[1]]
            })
            .collect()
    };
    let mut found: Vec<Point> = Vec::new();
    let mut lower = row(0);
    for j in 0..n {
        let upper = row(j + 1);
        for i in 0..n {
            let vals = [lower[i], lower[i + 1], upper[i + 1], upper[i]];
            let mixed = |k: usize| {
                let neg = vals.iter().filter(|v| v[k] < 0.0).count();
                neg > 0 && neg < 4
            };
            if !(mixed(0) && mixed(1)) {
                continue;
            }
            let x0 = bx.x_min + i as f64 * dx;
            let y0 = bx.y_min + j as f64 * dy;
            let pts = [[x0, y0], [x0 + dx, y0], [x0 + dx, y0 + dy], [x0, y0 + dy]];
            let s0 = contour_segments([vals[0][0], vals[1][0], vals[2][0], vals[3][0]], pts);
            let s1 = contour_segments([vals[0][1], vals[1][1], vals[2][1], vals[3][1]], pts);
            for &a in &s0 {
                for &b in &s1 {
                    if let Some(p) = intersect(a, b) {
                        found.push(p);
                    }
                }
            }
        }
        lower = upper;
    }
    // A root on a shared edge shows up in both neighbouring cells.
    let radius = 0.5 * dx.min(dy);
    let mut out: Vec<Point> = Vec::new();
    for p in found {
        if !out.iter().any(|q| scan_dist(bx, *q, p) < radius) {
            out.push(p);
        }
    }
    out
}

pub fn scan_dist(bx: ScanBox, a: Point, b: Point) -> f64 {
    let mut dphi = (a[0] - b[0]).abs();
    if bx.periodic {
        dphi = dphi.rem_euclid(TAU);
        dphi = dphi.min(TAU - dphi);
    }
    dphi.hypot(a[1] - b[1])
}

/// Distance from `p` to the closest point of a polyline.
pub fn polyline_distance(p: Point, vertices: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        best = best.min((p[0] - a[0] - t * ab[0]).hypot(p[1] - a[1] - t * ab[1]));
    }
    if vertices.len() == 1 {
        best = (p[0] - vertices[0][0]).hypot(p[1] - vertices[0][1]);
    }
    best
}

/// `φ` reduced to `[−π/2, 3π/2)`.
pub fn wrap(phi: f64) -> f64 {
    (phi + FRAC_PI_2).rem_euclid(TAU) - FRAC_PI_2
}
