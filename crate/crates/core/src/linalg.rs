//! Fixed-size 2×2 helpers. Everything in this crate lives in two dimensions,
//! so a general linear-algebra dependency would only add conversions.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mul_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Solves `m x = rhs`, or `None` when `m` is numerically singular
/// relative to its own magnitude.
pub fn solve(m: &Mat2, rhs: Vec2) -> Option<Vec2> {
    let d = det(m);
    let scale = max_abs(m);
    if !d.is_finite() || scale == 0.0 || d.abs() <= 1e-14 * scale * scale {
        return None;
    }
    Some([
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / d,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / d,
    ])
}

pub fn max_abs(m: &Mat2) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn frobenius(m: &Mat2) -> f64 {
    m.iter().flat_map(|r| r.iter()).map(|v| v * v).sum::<f64>().sqrt()
}

/// Singular values `(σ₁, σ₂)` with `σ₁ ≥ σ₂ ≥ 0`.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let f2 = m.iter().flat_map(|r| r.iter()).map(|v| v * v).sum::<f64>();
    let d = det(m).abs();
    let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
    let s1 = ((f2 + disc) / 2.0).sqrt();
    // σ₁σ₂ = |det| is better conditioned than the difference formula.
    let s2 = if s1 > 0.0 { d / s1 } else { 0.0 };
    (s1, s2)
}

pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Levenberg–Marquardt step for an overdetermined system with residual `r`
/// and Jacobian rows `rows` (one row per residual component).
pub fn lm_step(rows: &[Vec2], r: &[f64], damping: f64) -> Option<Vec2> {
    let mut ata = [[0.0; 2]; 2];
    let mut atr = [0.0; 2];
    for (row, ri) in rows.iter().zip(r) {
        for i in 0..2 {
            atr[i] += row[i] * ri;
            for j in 0..2 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let scale = ata[0][0].max(ata[1][1]).max(f64::MIN_POSITIVE);
    ata[0][0] += damping * scale;
    ata[1][1] += damping * scale;
    solve(&ata, [-atr[0], -atr[1]])
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
