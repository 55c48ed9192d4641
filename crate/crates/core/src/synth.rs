//! Procedural "natural-looking" scenes used as a reproducible test corpus.
//!
//! Each scene has a sky gradient with cloud texture, a hilly horizon, a
//! textured ground plane, a cluttered set of shaded objects with hard edges, and a
//! little sensor noise. Everything is derived from the seed, so corpora can be
//! regenerated bit-exactly instead of being checked in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image_io::Image;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Smooth lattice noise in `[0, 1]`.
struct ValueNoise {
    seed: u64,
}

impl ValueNoise {
    fn lattice(&self, x: i64, y: i64) -> f64 {
        let h = splitmix(self.seed ^ splitmix((x as u64) ^ splitmix(y as u64).rotate_left(17)));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (tx, ty) = (x - x0, y - y0);
        let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
        let (ix, iy) = (x0 as i64, y0 as i64);
        let a = self.lattice(ix, iy);
        let b = self.lattice(ix + 1, iy);
        let c = self.lattice(ix, iy + 1);
        let d = self.lattice(ix + 1, iy + 1);
        let top = a + (b - a) * sx;
        let bottom = c + (d - c) * sx;
        top + (bottom - top) * sy
    }

    /// Fractal sum of `octaves` layers, normalized to `[0, 1]`.
    fn fbm(&self, x: f64, y: f64, octaves: u32) -> f64 {
        let (mut amp, mut freq, mut sum, mut norm) = (1.0, 1.0, 0.0, 0.0);
        for o in 0..octaves {
            sum += amp * self.sample(x * freq + o as f64 * 17.3, y * freq - o as f64 * 9.1);
            norm += amp;
            amp *= 0.55;
            freq *= 2.03;
        }
        sum / norm
    }
}

type Rgb = [f64; 3];

fn mix(a: Rgb, b: Rgb, t: f64) -> Rgb {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn random_color(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Rgb {
    [rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)]
}

enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

struct Object {
    shape: Shape,
    color: Rgb,
    shade: Rgb,
    texture_scale: f64,
    texture_amp: f64,
}

impl Object {
    /// Position inside the object as `(inside, shading parameter in [0,1])`.
    fn hit(&self, x: f64, y: f64) -> Option<f64> {
        match self.shape {
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                let r2 = dx * dx + dy * dy;
                (r2 <= 1.0).then(|| (0.5 + 0.35 * dx - 0.35 * dy).clamp(0.0, 1.0))
            }
            Shape::Rect { x0, y0, x1, y1 } => {
                (x >= x0 && x <= x1 && y >= y0 && y <= y1).then(|| ((x - x0) / (x1 - x0)).clamp(0.0, 1.0))
            }
        }
    }
}

/// Renders scene number `seed` at the requested size.
pub fn natural_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x5EED_1A6E));
    let noise = ValueNoise { seed: rng.random() };
    let detail = ValueNoise { seed: rng.random() };
    let (w, h) = (width as f64, height as f64);
    let scale = w.max(h);

    let sky_top = mix(random_color(&mut rng, 20.0, 120.0), [40.0, 90.0, 200.0], 0.6);
    let sky_bottom = mix(sky_top, random_color(&mut rng, 180.0, 250.0), 0.7);
    let cloud = random_color(&mut rng, 200.0, 255.0);
    let cloud_cover = rng.random_range(0.0..0.8);
    let horizon = rng.random_range(0.25..0.65) * h;
    let hill_amp = rng.random_range(0.05..0.25) * h;
    let hill_freq = rng.random_range(1.5..5.0);
    let far = random_color(&mut rng, 40.0, 140.0);
    let ground_a = random_color(&mut rng, 30.0, 160.0);
    let ground_b = mix(ground_a, random_color(&mut rng, 60.0, 220.0), 0.6);
    let ground_scale = rng.random_range(8.0..40.0);

    let n_objects = rng.random_range(8..28);
    let objects: Vec<Object> = (0..n_objects)
        .map(|_| {
            let cx = rng.random_range(0.0..w);
            let cy = rng.random_range(horizon * 0.3..h);
            let size = rng.random_range(0.02..0.16) * scale;
            let shape = if rng.random_bool(0.5) {
                Shape::Ellipse {
                    cx,
                    cy,
                    rx: size,
                    ry: size * rng.random_range(0.4..1.6),
                }
            } else {
                let aspect = rng.random_range(0.3..3.0);
                Shape::Rect {
                    x0: cx - size,
                    y0: cy - size * aspect,
                    x1: cx + size,
                    y1: cy + size * 0.3,
                }
            };
            let color = random_color(&mut rng, 10.0, 245.0);
            Object {
                shape,
                color,
                shade: mix(color, [0.0, 0.0, 0.0], rng.random_range(0.2..0.7)),
                texture_scale: rng.random_range(4.0..60.0),
                texture_amp: rng.random_range(0.0..60.0),
            }
        })
        .collect();
    let sensor_noise = rng.random_range(0.5..4.0);

    let mut pixels = Vec::with_capacity(width * height * 3);
    for py in 0..height {
        for px in 0..width {
            let (x, y) = (px as f64, py as f64);
            let (u, v) = (x / scale, y / scale);
            let ridge = horizon - hill_amp * noise.fbm(u * hill_freq, 3.7, 4);
            let mut c = if y < ridge {
                let t = (y / ridge.max(1.0)).clamp(0.0, 1.0);
                let base = mix(sky_top, sky_bottom, t);
                let cl = noise.fbm(u * 3.0 + 11.0, v * 6.0, 5);
                let cover = ((cl - (1.0 - cloud_cover)) * 3.0).clamp(0.0, 1.0);
                mix(base, cloud, cover)
            } else {
                let depth = ((y - ridge) / (h - ridge).max(1.0)).clamp(0.0, 1.0);
                let tex = detail.fbm(u * ground_scale * (0.3 + depth), v * ground_scale * 1.7, 5);
                let patch = noise.fbm(u * 4.0 - 5.0, v * 4.0 + 2.0, 3);
                let near = mix(ground_a, ground_b, patch);
                let textured = mix(near, mix(near, [0.0, 0.0, 0.0], 0.8), tex * (0.5 + 0.5 * depth));
                mix(far, textured, depth.sqrt())
            };
            for obj in &objects {
                if let Some(t) = obj.hit(x, y) {
                    let tex = detail.fbm(u * obj.texture_scale, v * obj.texture_scale, 3) - 0.5;
                    c = mix(obj.color, obj.shade, t);
                    for ch in &mut c {
                        *ch += tex * obj.texture_amp;
                    }
                }
            }
            for (ch, value) in c.iter().enumerate() {
                let grain = (splitmix(seed ^ ((py * width + px) * 3 + ch) as u64) >> 11) as f64 / (1u64 << 53) as f64;
                let s = value + (grain - 0.5) * 2.0 * sensor_noise;
                pixels.push(s.clamp(0.0, 255.0).round_ties_even() as u8);
            }
        }
    }
    Image::new(width, height, pixels).expect("dimensions are consistent")
}

/// `count` scenes with consecutive seeds starting at `first_seed`.
pub fn corpus(count: usize, width: usize, height: usize, first_seed: u64) -> Vec<Image> {
    (0..count as u64)
        .map(|i| natural_image(width, height, first_seed + i))
        .collect()
}
