//! Convolution blurs with reflect-101 borders (`dcb|abcd|cba`).

use std::collections::BTreeMap;

/// A 3-channel `[0, 1]` plane with its dimensions.
pub(crate) struct Plane<'a> {
    pub data: &'a [f64],
    pub width: usize,
    pub height: usize,
}

pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

fn convolve_axis(src: &Plane, kernel: &[f64], horizontal: bool) -> Vec<f64> {
    let (w, h) = (src.width, src.height);
    let radius = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (t, &wt) in kernel.iter().enumerate() {
                    let d = t as isize - radius;
                    let (sx, sy) = if horizontal {
                        (reflect101(x as isize + d, w), y)
                    } else {
                        (x, reflect101(y as isize + d, h))
                    };
                    acc += wt * src.data[(sy * w + sx) * 3 + c];
                }
                out[(y * w + x) * 3 + c] = acc;
            }
        }
    }
    out
}

/// Separable Gaussian with radius `ceil(3 sigma)`; `sigma == 0` is the identity.
pub(crate) fn gaussian_blur(src: &Plane, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return src.data.to_vec();
    }
    let k = gaussian_kernel(sigma);
    let tmp = convolve_axis(src, &k, true);
    convolve_axis(&Plane { data: &tmp, width: src.width, height: src.height }, &k, false)
}

/// Sparse 2-D kernel as `(dx, dy, weight)` taps.
pub(crate) fn convolve_taps(src: &Plane, taps: &[(isize, isize, f64)]) -> Vec<f64> {
    let (w, h) = (src.width, src.height);
    let mut out = vec![0.0; src.data.len()];
    for y in 0..h {
        for x in 0..w {
            let o = (y * w + x) * 3;
            for &(dx, dy, wt) in taps {
                let sx = reflect101(x as isize + dx, w);
                let sy = reflect101(y as isize + dy, h);
                let i = (sy * w + sx) * 3;
                out[o] += wt * src.data[i];
                out[o + 1] += wt * src.data[i + 1];
                out[o + 2] += wt * src.data[i + 2];
            }
        }
    }
    out
}

/// Uniform disc of integer radius.
pub(crate) fn disc_taps(radius: isize) -> Vec<(isize, isize, f64)> {
    let pts: Vec<(isize, isize)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= radius * radius)
        .collect();
    let w = 1.0 / pts.len() as f64;
    pts.into_iter().map(|(dx, dy)| (dx, dy, w)).collect()
}

/// Line kernel of `length` samples centred on the origin at `angle_deg`.
pub(crate) fn motion_taps(length: usize, angle_deg: f64) -> Vec<(isize, isize, f64)> {
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let half = (length as f64 - 1.0) / 2.0;
    let mut acc: BTreeMap<(isize, isize), f64> = BTreeMap::new();
    for i in 0..length {
        let t = i as f64 - half;
        let key = ((t * cos).round() as isize, (t * sin).round() as isize);
        *acc.entry(key).or_insert(0.0) += 1.0 / length as f64;
    }
    acc.into_iter().map(|((dx, dy), w)| (dx, dy, w)).collect()
}

/// Average of the image zoomed about its centre at `steps` evenly spaced
/// scales from 1 to `max_zoom`, bilinear sampling.
pub(crate) fn zoom_blur(src: &Plane, max_zoom: f64, steps: usize) -> Vec<f64> {
    let (w, h) = (src.width, src.height);
    let mut out = vec![0.0; src.data.len()];
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    for s in 0..steps {
        let z = if steps > 1 { 1.0 + (max_zoom - 1.0) * s as f64 / (steps - 1) as f64 } else { 1.0 };
        for y in 0..h {
            let fy = (cy + (y as f64 + 0.5 - cy) / z - 0.5).clamp(0.0, (h - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let ty = fy - y0 as f64;
            for x in 0..w {
                let fx = (cx + (x as f64 + 0.5 - cx) / z - 0.5).clamp(0.0, (w - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let tx = fx - x0 as f64;
                for c in 0..3 {
                    let p = |xx: usize, yy: usize| src.data[(yy * w + xx) * 3 + c];
                    let top = p(x0, y0) * (1.0 - tx) + p(x1, y0) * tx;
                    let bottom = p(x0, y1) * (1.0 - tx) + p(x1, y1) * tx;
                    out[(y * w + x) * 3 + c] += top * (1.0 - ty) + bottom * ty;
                }
            }
        }
    }
    out.iter_mut().for_each(|v| *v /= steps as f64);
    out
}
