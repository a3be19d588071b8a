//! Binary PPM rendering of the filled Julia set with overlays.

use cremer_core::ray::ExternalRay;
use cremer_core::{par, Complex64, Polynomial};

/// Escape iterations per pixel.
const RENDER_BUDGET: u32 = 500;
const BAILOUT: f64 = 1e8;

const INTERIOR: [u8; 3] = [20, 20, 60];
const RAY: [u8; 3] = [230, 50, 40];
const LEVEL: [u8; 3] = [40, 150, 230];
const MARKER: [u8; 3] = [40, 200, 60];

#[derive(Debug, Clone)]
pub struct RenderSpec {
    pub width: usize,
    pub height: usize,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bounds: [f64; 4],
    pub rays: Vec<ExternalRay>,
    /// Green levels drawn as equipotentials.
    pub levels: Vec<f64>,
    pub markers: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB, top row first.
    pub data: Vec<u8>,
}

impl Image {
    fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let k = 3 * (y as usize * self.width + x as usize);
            self.data[k..k + 3].copy_from_slice(&rgb);
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

/// Square view `±0.75 R` around the origin, stretched to the aspect ratio.
pub fn auto_bounds(poly: &Polynomial, width: usize, height: usize) -> [f64; 4] {
    let half = 0.75 * poly.escape_radius();
    let aspect = width as f64 / height.max(1) as f64;
    if aspect >= 1.0 {
        [-half * aspect, half * aspect, -half, half]
    } else {
        [-half, half, -half / aspect, half / aspect]
    }
}

struct View {
    bounds: [f64; 4],
    sx: f64,
    sy: f64,
}

impl View {
    fn new(spec: &RenderSpec) -> Self {
        let [x0, x1, y0, y1] = spec.bounds;
        Self { bounds: spec.bounds, sx: (x1 - x0) / spec.width as f64, sy: (y1 - y0) / spec.height as f64 }
    }

    fn point(&self, px: usize, py: usize) -> Complex64 {
        Complex64::new(self.bounds[0] + (px as f64 + 0.5) * self.sx, self.bounds[3] - (py as f64 + 0.5) * self.sy)
    }

    fn pixel(&self, z: Complex64) -> (f64, f64) {
        ((z.re - self.bounds[0]) / self.sx - 0.5, (self.bounds[3] - z.im) / self.sy - 0.5)
    }
}

/// Green potential and `|∇G|` of an escaping orbit, `None` inside `K`.
fn escape(poly: &Polynomial, z: Complex64) -> Option<(f64, f64)> {
    let d = poly.degree() as f64;
    let mut w = z;
    let mut dw = Complex64::new(1.0, 0.0);
    let mut scale = 1.0;
    for _ in 0..RENDER_BUDGET {
        let r = w.norm();
        if r > BAILOUT {
            let g = r.ln() / scale;
            let grad = dw.norm() / (r * scale);
            return Some((g, grad));
        }
        let (p, dp) = poly.eval_with_derivative(w);
        dw *= dp;
        w = p;
        scale *= d;
    }
    None
}

pub fn render(poly: &Polynomial, spec: &RenderSpec) -> Image {
    let view = View::new(spec);
    let pixel = view.sx.max(view.sy);
    let rows = par::map_range(spec.height, |py| {
        let mut row = Vec::with_capacity(3 * spec.width);
        for px in 0..spec.width {
            let z = view.point(px, py);
            let rgb = match escape(poly, z) {
                None => INTERIOR,
                Some((g, grad)) => {
                    if spec.levels.iter().any(|&l| (g - l).abs() < 0.75 * pixel * grad) {
                        LEVEL
                    } else {
                        // Distance estimate G/|∇G| in pixels, compressed.
                        let t = (g / grad / (4.0 * pixel)).min(1.0).sqrt();
                        let v = (40.0 + 215.0 * t) as u8;
                        [v, v, v]
                    }
                }
            };
            row.extend_from_slice(&rgb);
        }
        row
    });
    let mut image = Image { width: spec.width, height: spec.height, data: rows.concat() };
    for ray in &spec.rays {
        let mut pts: Vec<Complex64> = ray.points().collect();
        if let Some(p) = ray.status.landing_point() {
            pts.push(p);
        }
        for w in pts.windows(2) {
            draw_segment(&mut image, &view, w[0], w[1], RAY);
        }
    }
    for &m in &spec.markers {
        let (x, y) = view.pixel(m);
        let (x, y) = (x.round() as i64, y.round() as i64);
        for k in -3..=3 {
            image.put(x + k, y, MARKER);
            image.put(x, y + k, MARKER);
        }
    }
    image
}

fn draw_segment(image: &mut Image, view: &View, a: Complex64, b: Complex64, rgb: [u8; 3]) {
    let (x0, y0) = view.pixel(a);
    let (x1, y1) = view.pixel(b);
    let (w, h) = (image.width as f64, image.height as f64);
    if (x0 < 0.0 && x1 < 0.0) || (y0 < 0.0 && y1 < 0.0) || (x0 > w && x1 > w) || (y0 > h && y1 > h) {
        return;
    }
    // Segments far off screen are clipped by the cap on steps.
    let n = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).clamp(1, 8 * (image.width + image.height));
    for k in 0..=n {
        let t = k as f64 / n as f64;
        image.put((x0 + t * (x1 - x0)).round() as i64, (y0 + t * (y1 - y0)).round() as i64, rgb);
    }
}
