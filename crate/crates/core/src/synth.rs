//! Seeded procedural test images: piecewise-smooth scenes with strong edges.
//!
//! These stand in for natural photographs in tests, benchmarks and demos. Every
//! generator is a pure function of its arguments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::GrayImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scene {
    /// Overlapping shaded ellipses, polygons and strokes on a smooth background.
    Shapes,
    /// Regions filled with oriented stripe textures of varying period.
    Stripes,
    /// Concentric rings and a checkerboard over a gradient.
    Rings,
}

impl Scene {
    pub const ALL: [Scene; 3] = [Scene::Shapes, Scene::Stripes, Scene::Rings];

    pub fn name(self) -> &'static str {
        match self {
            Scene::Shapes => "shapes",
            Scene::Stripes => "stripes",
            Scene::Rings => "rings",
        }
    }
}

const SUPERSAMPLE: usize = 4;

enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64, cos: f64, sin: f64 },
    Polygon { edges: Vec<(f64, f64, f64)> },
    Stroke { x0: f64, y0: f64, x1: f64, y1: f64, half_width: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry, cos, sin } => {
                let (dx, dy) = (x - cx, y - cy);
                let u = dx * cos + dy * sin;
                let v = -dx * sin + dy * cos;
                (u / rx).powi(2) + (v / ry).powi(2) <= 1.0
            }
            Shape::Polygon { ref edges } => edges.iter().all(|&(a, b, c)| a * x + b * y + c >= 0.0),
            Shape::Stroke { x0, y0, x1, y1, half_width } => {
                let (vx, vy) = (x1 - x0, y1 - y0);
                let t = (((x - x0) * vx + (y - y0) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
                let (px, py) = (x0 + t * vx - x, y0 + t * vy - y);
                px * px + py * py <= half_width * half_width
            }
        }
    }
}

struct Paint {
    shape: Shape,
    base: f64,
    gx: f64,
    gy: f64,
}

fn convex_polygon(rng: &mut ChaCha8Rng, cx: f64, cy: f64, r: f64) -> Shape {
    let sides = rng.gen_range(3..=6);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let pts: Vec<(f64, f64)> = (0..sides)
        .map(|k| {
            let a = phase + std::f64::consts::TAU * k as f64 / sides as f64;
            let rr = r * rng.gen_range(0.7..1.0);
            (cx + rr * a.cos(), cy + rr * a.sin())
        })
        .collect();
    // counter-clockwise vertices: interior on the left of every edge
    let edges = (0..sides)
        .map(|k| {
            let (x0, y0) = pts[k];
            let (x1, y1) = pts[(k + 1) % sides];
            (-(y1 - y0), x1 - x0, (y1 - y0) * x0 - (x1 - x0) * y0)
        })
        .collect();
    Shape::Polygon { edges }
}

fn render(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> GrayImage {
    let s = SUPERSAMPLE as f64;
    GrayImage::from_fn(width, height, |x, y| {
        let mut acc = 0.0;
        for sy in 0..SUPERSAMPLE {
            for sx in 0..SUPERSAMPLE {
                acc += f(x as f64 + (sx as f64 + 0.5) / s, y as f64 + (sy as f64 + 0.5) / s);
            }
        }
        (acc / (s * s)).round().clamp(0.0, 255.0) as u8
    })
}

pub fn structured_image(scene: Scene, width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (scene as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (w, h) = (width as f64, height as f64);
    let bg = (
        rng.gen_range(60.0..190.0),
        rng.gen_range(-0.4..0.4) * 128.0 / w,
        rng.gen_range(-0.4..0.4) * 128.0 / h,
    );
    let background = move |x: f64, y: f64| bg.0 + bg.1 * x + bg.2 * y;

    match scene {
        Scene::Shapes => {
            let count = rng.gen_range(7..=11);
            let scale = w.min(h);
            let paints: Vec<Paint> = (0..count)
                .map(|_| {
                    let cx = rng.gen_range(0.0..w);
                    let cy = rng.gen_range(0.0..h);
                    let r = scale * rng.gen_range(0.08..0.3);
                    let shape = match rng.gen_range(0..3) {
                        0 => {
                            let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                            Shape::Ellipse {
                                cx,
                                cy,
                                rx: r,
                                ry: r * rng.gen_range(0.35..1.0),
                                cos: a.cos(),
                                sin: a.sin(),
                            }
                        }
                        1 => convex_polygon(&mut rng, cx, cy, r),
                        _ => Shape::Stroke {
                            x0: cx,
                            y0: cy,
                            x1: rng.gen_range(0.0..w),
                            y1: rng.gen_range(0.0..h),
                            half_width: scale * rng.gen_range(0.01..0.04),
                        },
                    };
                    Paint {
                        shape,
                        base: rng.gen_range(15.0..240.0),
                        gx: rng.gen_range(-0.5..0.5),
                        gy: rng.gen_range(-0.5..0.5),
                    }
                })
                .collect();
            render(width, height, |x, y| {
                paints
                    .iter()
                    .rev()
                    .find(|p| p.shape.contains(x, y))
                    .map(|p| p.base + p.gx * (x - w / 2.0) + p.gy * (y - h / 2.0))
                    .unwrap_or_else(|| background(x, y))
            })
        }
        Scene::Stripes => {
            let regions: Vec<(Shape, f64, f64, f64, f64, f64)> = (0..rng.gen_range(4..=7))
                .map(|_| {
                    let (cx, cy) = (rng.gen_range(0.0..w), rng.gen_range(0.0..h));
                    let r = w.min(h) * rng.gen_range(0.2..0.45);
                    let shape = convex_polygon(&mut rng, cx, cy, r);
                    let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                    let period = rng.gen_range(7.0..22.0);
                    let mean = rng.gen_range(70.0..190.0);
                    let amp = rng.gen_range(30.0..70.0);
                    (shape, angle.cos(), angle.sin(), period, mean, amp)
                })
                .collect();
            render(width, height, |x, y| {
                regions
                    .iter()
                    .rev()
                    .find(|r| r.0.contains(x, y))
                    .map(|&(_, c, s, period, mean, amp)| {
                        let phase = (x * c + y * s) / period * std::f64::consts::TAU;
                        // softened square wave
                        mean + amp * (2.5 * phase.sin()).tanh()
                    })
                    .unwrap_or_else(|| background(x, y))
            })
        }
        Scene::Rings => {
            let (cx, cy) = (rng.gen_range(0.25..0.75) * w, rng.gen_range(0.25..0.75) * h);
            let ring_period = rng.gen_range(10.0..18.0);
            let ring_radius = w.min(h) * rng.gen_range(0.25..0.4);
            let checker = rng.gen_range(10.0..20.0);
            let (hi, lo) = (rng.gen_range(170.0..230.0), rng.gen_range(20.0..80.0));
            render(width, height, |x, y| {
                let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                if r < ring_radius {
                    if ((r / ring_period).floor() as i64) % 2 == 0 {
                        hi
                    } else {
                        lo
                    }
                } else if x < w * 0.3 && y > h * 0.55 {
                    let cell = ((x / checker).floor() + (y / checker).floor()) as i64;
                    if cell % 2 == 0 {
                        hi - 20.0
                    } else {
                        lo + 20.0
                    }
                } else {
                    background(x, y)
                }
            })
        }
    }
}

/// A corpus cycling through all scene kinds, each with its own derived seed.
pub fn corpus(count: usize, width: usize, height: usize, seed: u64) -> Vec<(String, GrayImage)> {
    (0..count)
        .map(|i| {
            let scene = Scene::ALL[i % Scene::ALL.len()];
            let s = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            (format!("{}-{seed}-{i}", scene.name()), structured_image(scene, width, height, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        for scene in Scene::ALL {
            let a = structured_image(scene, 32, 24, 7);
            assert_eq!(a, structured_image(scene, 32, 24, 7));
            assert_ne!(a, structured_image(scene, 32, 24, 8));
            assert_eq!((a.width(), a.height()), (32, 24));
        }
    }

    #[test]
    fn scenes_have_contrast() {
        for scene in Scene::ALL {
            let img = structured_image(scene, 64, 64, 3);
            let min = *img.pixels().iter().min().unwrap();
            let max = *img.pixels().iter().max().unwrap();
            assert!(max - min > 60, "{scene:?} range {min}..{max}");
        }
    }
}
