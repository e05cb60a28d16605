//! Bicubic upscaling built from per-cell third-order surfaces.
//!
//! Every unit cell between four source samples gets a patch
//! `f(x, y) = sum a_ij x^i y^j` fitted to the corner values and the
//! horizontal, vertical and cross derivatives there. Neighbouring cells share
//! corner data, so the surface is C1 across cell edges.

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Coefficients `a[i][j]` of `x^i y^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicubicPatch {
    pub coeffs: [[f64; 4]; 4],
}

/// Samples at the corners of a unit cell, indexed `[x][y]` with `x` the
/// horizontal (column) direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CornerData {
    pub f: [[f64; 2]; 2],
    pub fx: [[f64; 2]; 2],
    pub fy: [[f64; 2]; 2],
    pub fxy: [[f64; 2]; 2],
}

const HERMITE: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [-3.0, 3.0, -2.0, -1.0],
    [2.0, -2.0, 1.0, 1.0],
];

fn matmul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Solves for the 16 coefficients as `H * F * H^T`.
pub fn fit_patch(data: &CornerData) -> Result<BicubicPatch> {
    let all = [data.f, data.fx, data.fy, data.fxy];
    if all.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite corner data"));
    }
    let CornerData { f, fx, fy, fxy } = *data;
    let corner = [
        [f[0][0], f[0][1], fy[0][0], fy[0][1]],
        [f[1][0], f[1][1], fy[1][0], fy[1][1]],
        [fx[0][0], fx[0][1], fxy[0][0], fxy[0][1]],
        [fx[1][0], fx[1][1], fxy[1][0], fxy[1][1]],
    ];
    Ok(BicubicPatch {
        coeffs: matmul(&matmul(&HERMITE, &corner), &transpose(&HERMITE)),
    })
}

impl BicubicPatch {
    /// `[1 x x^2 x^3] * A * [1 y y^2 y^3]^T`, no range check.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let ys = [1.0, y, y * y, y * y * y];
        let mut acc = 0.0;
        let mut xp = 1.0;
        for row in &self.coeffs {
            acc += xp * (row[0] * ys[0] + row[1] * ys[1] + row[2] * ys[2] + row[3] * ys[3]);
            xp *= x;
        }
        acc
    }

    /// Analytic partial derivative `d^(dx+dy) f / dx^dx dy^dy`.
    pub fn partial(&self, x: f64, y: f64, dx: u32, dy: u32) -> f64 {
        let term = |p: usize, d: u32, t: f64| -> f64 {
            if (p as u32) < d {
                return 0.0;
            }
            let falling: f64 = (0..d).map(|k| (p as u32 - k) as f64).product();
            falling * t.powi(p as i32 - d as i32)
        };
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += self.coeffs[i][j] * term(i, dx, x) * term(j, dy, y);
            }
        }
        acc
    }
}

pub fn eval_patch(patch: &BicubicPatch, x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::validation(format!("({x}, {y}) outside the unit square")));
    }
    Ok(patch.value(x, y))
}

/// Central difference along one axis, one-sided at the ends.
fn diff_axis(src: &[f64], width: usize, height: usize, horizontal: bool) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..height {
        for c in 0..width {
            let (n, i) = if horizontal { (width, c) } else { (height, r) };
            let at = |k: usize| if horizontal { src[r * width + k] } else { src[k * width + c] };
            out[r * width + c] = if n == 1 {
                0.0
            } else if i == 0 {
                at(1) - at(0)
            } else if i == n - 1 {
                at(n - 1) - at(n - 2)
            } else {
                (at(i + 1) - at(i - 1)) / 2.0
            };
        }
    }
    out
}

/// Maps destination index to (cell index, fraction) under corner alignment.
fn axis_map(src_len: usize, dst_len: usize) -> Vec<(usize, f64)> {
    (0..dst_len)
        .map(|d| {
            let s = if dst_len == 1 {
                0.0
            } else {
                d as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64
            };
            let cell = (s.floor() as usize).min(src_len - 2);
            (cell, (s - cell as f64).clamp(0.0, 1.0))
        })
        .collect()
}

/// Resizes to `out_w x out_h` with corner-aligned sampling. Overshoot is kept.
pub fn bicubic_resize(image: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage> {
    let (w, h) = (image.width(), image.height());
    if w < 2 || h < 2 {
        return Err(Error::validation(format!("bicubic resize needs at least 2x2, got {w}x{h}")));
    }
    if out_w == 0 || out_h == 0 {
        return Err(Error::validation("output dimensions must be positive"));
    }
    let px = image.pixels();
    let dx = diff_axis(px, w, h, true);
    let dy = diff_axis(px, w, h, false);
    let dxy = diff_axis(&dx, w, h, false);

    let cells_w = w - 1;
    let mut patches = Vec::with_capacity(cells_w * (h - 1));
    for r in 0..h - 1 {
        for c in 0..cells_w {
            // x runs along columns, y along rows
            let pick = |a: &[f64]| {
                [
                    [a[r * w + c], a[(r + 1) * w + c]],
                    [a[r * w + c + 1], a[(r + 1) * w + c + 1]],
                ]
            };
            let data = CornerData {
                f: pick(px),
                fx: pick(&dx),
                fy: pick(&dy),
                fxy: pick(&dxy),
            };
            patches.push(fit_patch(&data)?);
        }
    }

    let cols = axis_map(w, out_w);
    let rows = axis_map(h, out_h);
    let mut out = Vec::with_capacity(out_w * out_h);
    for &(cy, fy) in &rows {
        for &(cx, fx) in &cols {
            out.push(patches[cy * cells_w + cx].value(fx, fy));
        }
    }
    GrayImage::new(out_w, out_h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    #[test]
    fn constant_patch() {
        let data = CornerData {
            f: [[3.5; 2]; 2],
            ..Default::default()
        };
        let p = fit_patch(&data).unwrap();
        let mut expected = [[0.0; 4]; 4];
        expected[0][0] = 3.5;
        assert_eq!(p.coeffs, expected);
        assert_eq!(eval_patch(&BicubicPatch { coeffs: expected.map(|r| r.map(|v| v * 2.0)) }, 0.3, 0.9).unwrap(), 7.0);
    }

    #[test]
    fn linear_in_x_patch() {
        // f(0,0)=0, f(0,1)=0, f(1,0)=1, f(1,1)=1 with f_x = 1
        let data = CornerData {
            f: [[0.0, 0.0], [1.0, 1.0]],
            fx: [[1.0; 2]; 2],
            ..Default::default()
        };
        let p = fit_patch(&data).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (1, 0) { 1.0 } else { 0.0 };
                assert!((p.coeffs[i][j] - want).abs() < 1e-15, "a{i}{j} = {}", p.coeffs[i][j]);
            }
        }
        assert!((eval_patch(&p, 0.5, 0.25).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_outside_unit_square() {
        let p = BicubicPatch { coeffs: [[1.0; 4]; 4] };
        assert!(eval_patch(&p, 1.01, 0.0).is_err());
        assert!(eval_patch(&p, 0.0, -0.1).is_err());
        assert_eq!(eval_patch(&p, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn non_finite_corner_rejected() {
        let mut data = CornerData::default();
        data.fxy[1][0] = f64::NAN;
        assert!(fit_patch(&data).is_err());
    }

    #[test]
    fn random_patches_reproduce_corner_data() {
        let mut seed = 7;
        for _ in 0..200 {
            let mut g = || [[lcg(&mut seed) * 10.0, lcg(&mut seed) * 10.0], [lcg(&mut seed) * 10.0, lcg(&mut seed) * 10.0]];
            let data = CornerData {
                f: g(),
                fx: g(),
                fy: g(),
                fxy: g(),
            };
            let p = fit_patch(&data).unwrap();
            for xi in 0..2 {
                for yi in 0..2 {
                    let (x, y) = (xi as f64, yi as f64);
                    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
                    assert!(close(p.value(x, y), data.f[xi][yi]));
                    assert!(close(p.partial(x, y, 1, 0), data.fx[xi][yi]));
                    assert!(close(p.partial(x, y, 0, 1), data.fy[xi][yi]));
                    assert!(close(p.partial(x, y, 1, 1), data.fxy[xi][yi]));
                }
            }
            // analytic partials agree with central finite differences inside
            let (x, y, e) = (0.37, 0.61, 1e-5);
            let fd = (p.value(x + e, y) - p.value(x - e, y)) / (2.0 * e);
            assert!((fd - p.partial(x, y, 1, 0)).abs() < 1e-6);
        }
    }

    #[test]
    fn too_small_input_rejected() {
        assert!(bicubic_resize(&GrayImage::filled(1, 5, 0.0), 4, 4).is_err());
        assert!(bicubic_resize(&GrayImage::filled(3, 3, 0.0), 0, 4).is_err());
    }

    #[test]
    fn constant_reproduction() {
        let out = bicubic_resize(&GrayImage::filled(3, 3, 7.0), 5, 5).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 7.0));
    }

    #[test]
    fn bilinear_ramp_is_exact() {
        let src = GrayImage::from_fn(4, 4, |r, c| 2.0 * c as f64 + 3.0 * r as f64).unwrap();
        let out = bicubic_resize(&src, 7, 7).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                let (sr, sc) = (r as f64 * 0.5, c as f64 * 0.5);
                assert!((out.get(r, c) - (2.0 * sc + 3.0 * sr)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn native_to_target_dimensions() {
        let src = GrayImage::from_fn(80, 60, |r, c| (r * c) as f64).unwrap();
        let out = bicubic_resize(&src, 184, 168).unwrap();
        assert_eq!((out.width(), out.height()), (184, 168));
    }

    #[test]
    fn single_output_row_or_column() {
        let src = GrayImage::from_fn(4, 3, |r, c| (r * 10 + c) as f64).unwrap();
        let out = bicubic_resize(&src, 1, 1).unwrap();
        assert_eq!(out.pixels(), &[0.0]);
    }

    proptest! {
        #[test]
        fn identity_resize(w in 2usize..9, h in 2usize..9, seed in any::<u64>()) {
            let mut s = seed;
            let src = GrayImage::from_fn(w, h, |_, _| lcg(&mut s) * 100.0).unwrap();
            let out = bicubic_resize(&src, w, h).unwrap();
            for (a, b) in out.pixels().iter().zip(src.pixels()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }

        #[test]
        fn transpose_equivariance(w in 2usize..7, h in 2usize..7, ow in 1usize..12, oh in 1usize..12, seed in any::<u64>()) {
            let mut s = seed;
            let src = GrayImage::from_fn(w, h, |_, _| lcg(&mut s) * 50.0).unwrap();
            let a = bicubic_resize(&src.transpose(), oh, ow).unwrap();
            let b = bicubic_resize(&src, ow, oh).unwrap().transpose();
            for (x, y) in a.pixels().iter().zip(b.pixels()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
