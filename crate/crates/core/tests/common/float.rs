//! Straight-line f64 recomputation of the reference map, the subsampled
//! approximation and the RMSE, in the textbook absolute form.

use lensremap::model::LensConfig;

/// Row-major `(map_x, map_y)` of the undistort-rectify map.
pub fn reference_planes(cfg: &LensConfig) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (cfg.image_width, cfg.image_height);
    let cam = &cfg.intrinsics;
    let new = &cfg.new_intrinsics;
    let c = &cfg.coeffs;
    let r = cfg.rotation.rows();
    let mut xs = Vec::with_capacity(w * h);
    let mut ys = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let x0 = (u as f64 - new.cx) / new.fx;
            let y0 = (v as f64 - new.cy) / new.fy;
            // R^T applied to (x0, y0, 1)
            let bx = r[0][0] * x0 + r[1][0] * y0 + r[2][0];
            let by = r[0][1] * x0 + r[1][1] * y0 + r[2][1];
            let bw = r[0][2] * x0 + r[1][2] * y0 + r[2][2];
            let (x, y) = (bx / bw, by / bw);
            let r2 = x * x + y * y;
            let r4 = r2 * r2;
            let r6 = r4 * r2;
            let radial = (1.0 + c.k1 * r2 + c.k2 * r4 + c.k3 * r6) / (1.0 + c.k4 * r2 + c.k5 * r4 + c.k6 * r6);
            let xd = x * radial + 2.0 * c.p1 * x * y + c.p2 * (r2 + 2.0 * x * x);
            let yd = y * radial + c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * x * y;
            xs.push(cam.fx * xd + cam.cx);
            ys.push(cam.fy * yd + cam.cy);
        }
    }
    (xs, ys)
}

/// Subsampled map rebuilt at every pixel: relative displacements sampled
/// every `2^n` px (edge nodes on the last pixel), rounded to `frac` bits,
/// bilinearly interpolated in the enclosing cell.
pub fn sampled_planes(
    cfg: &LensConfig,
    reference: &(Vec<f64>, Vec<f64>),
    n: u32,
    frac: u32,
) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (cfg.image_width, cfg.image_height);
    let pitch = 1usize << n;
    let gw = (w - 1).div_ceil(pitch) + 1;
    let gh = (h - 1).div_ceil(pitch) + 1;
    let lsb = (frac as f64).exp2();
    let q = |d: f64| (d * lsb).round() / lsb;
    let mut nodes = vec![(0.0, 0.0); gw * gh];
    for j in 0..gh {
        for i in 0..gw {
            let u = (i * pitch).min(w - 1);
            let v = (j * pitch).min(h - 1);
            let k = v * w + u;
            nodes[j * gw + i] = (q(reference.0[k] - u as f64), q(reference.1[k] - v as f64));
        }
    }
    let mut xs = Vec::with_capacity(w * h);
    let mut ys = Vec::with_capacity(w * h);
    for v in 0..h {
        let j = (v / pitch).min(gh - 2);
        let b = (v - j * pitch) as f64 / pitch as f64;
        for u in 0..w {
            let i = (u / pitch).min(gw - 2);
            let a = (u - i * pitch) as f64 / pitch as f64;
            let s = |di: usize, dj: usize| nodes[(j + dj) * gw + i + di];
            let lerp = |p: f64, q: f64, t: f64| p * (1.0 - t) + q * t;
            let top = (lerp(s(0, 0).0, s(1, 0).0, a), lerp(s(0, 0).1, s(1, 0).1, a));
            let bot = (lerp(s(0, 1).0, s(1, 1).0, a), lerp(s(0, 1).1, s(1, 1).1, a));
            xs.push(u as f64 + lerp(top.0, bot.0, b));
            ys.push(v as f64 + lerp(top.1, bot.1, b));
        }
    }
    (xs, ys)
}

pub fn rmse(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> f64 {
    let sum: f64 = (0..a.0.len())
        .map(|k| {
            let dx = a.0[k] - b.0[k];
            let dy = a.1[k] - b.1[k];
            dx * dx + dy * dy
        })
        .sum();
    (sum / a.0.len() as f64).sqrt()
}

/// Per-pixel Euclidean error field.
pub fn error_field(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> Vec<f64> {
    (0..a.0.len()).map(|k| (a.0[k] - b.0[k]).hypot(a.1[k] - b.1[k])).collect()
}
