//! Browser bindings for three interactive views: a Green's function column, the
//! quenched mean height of the Gaussian model and the delocalization sums.
//!
//! Each binding wraps a plain function returning `Result<_, String>` so the logic
//! is testable off the browser.

use rgibbs::disorder::{SiteDisorder, SiteDistribution};
use rgibbs::gaussian_exact;
use rgibbs::greens::{Domain, Greens, Normalization};
use rgibbs::lattice::{BoxRegion, Site};
use rgibbs::linalg::Method;
use rgibbs::model::{Couplings, Potential, System};
use wasm_bindgen::prelude::*;

/// Largest half-width accepted from the page.
pub const MAX_HALF_WIDTH: u32 = 40;

fn square(half_width: u32) -> Result<BoxRegion, String> {
    if half_width == 0 || half_width > MAX_HALF_WIDTH {
        return Err(format!("half-width must be in 1..={MAX_HALF_WIDTH}, got {half_width}"));
    }
    Ok(BoxRegion::centered(half_width as usize, 2))
}

/// Walk-normalized G(pole, ·) on [−N, N]²; site (s₀, s₁) sits at index (s₀ + N)(2N + 1) + (s₁ + N).
pub fn green_values(half_width: u32, x: i32, y: i32) -> Result<Vec<f64>, String> {
    let region = square(half_width)?;
    let pole = Site::new(&[x as i64, y as i64]);
    if !region.contains(&pole) {
        return Err(format!("pole ({x}, {y}) lies outside the box"));
    }
    let domain = Domain::Box(region);
    let greens = Greens::new(&domain, Method::Auto).map_err(|e| e.to_string())?;
    let column = greens.column(&pole, Normalization::Walk).map_err(|e| e.to_string())?;
    Ok(region.sites().map(|s| column.at(&domain, &s)).collect())
}

/// Quenched mean of the V = s²/2 model on [−N, N]² with Gaussian disorder and tilt
/// (u₀, u₁), indexed like `green_values`.
pub fn mean_height_values(
    half_width: u32,
    disorder_mean: f64,
    disorder_variance: f64,
    seed: u64,
    u0: f64,
    u1: f64,
) -> Result<Vec<f64>, String> {
    let region = square(half_width)?;
    if !(disorder_variance >= 0.0 && disorder_variance.is_finite()) {
        return Err(format!("variance must be finite and nonnegative, got {disorder_variance}"));
    }
    if !(disorder_mean.is_finite() && u0.is_finite() && u1.is_finite()) {
        return Err("mean and tilt must be finite".into());
    }
    let xi = SiteDisorder::new(SiteDistribution::Gaussian { mean: disorder_mean, variance: disorder_variance }, seed);
    let sys = System::new(region, &[u0, u1], &Couplings::uniform(Potential::quadratic(0.5)), &xi, 1.0);
    gaussian_exact::quenched_mean(&sys, Method::Auto).map_err(|e| e.to_string())
}

/// Site and bond sums of squared Green's function entries for N = 1..=n_max in
/// dimension d, flattened as (N, site sum, bond sum) triples.
pub fn deloc_values(d: u32, n_max: u32) -> Result<Vec<f64>, String> {
    if !(1..=5).contains(&d) {
        return Err(format!("dimension must be in 1..=5, got {d}"));
    }
    let cap = [0, 200, 60, 24, 12, 8][d as usize];
    if n_max == 0 || n_max > cap {
        return Err(format!("largest N in d={d} must be in 1..={cap}, got {n_max}"));
    }
    let mut out = Vec::with_capacity(3 * n_max as usize);
    for n in 1..=n_max {
        let (site, bond) = gaussian_exact::deloc_sums_spectral(d as usize, n as usize);
        out.extend([n as f64, site, bond]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn green_field(half_width: u32, x: i32, y: i32) -> Result<Vec<f64>, JsValue> {
    green_values(half_width, x, y).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mean_height(
    half_width: u32,
    disorder_mean: f64,
    disorder_variance: f64,
    seed: u32,
    u0: f64,
    u1: f64,
) -> Result<Vec<f64>, JsValue> {
    mean_height_values(half_width, disorder_mean, disorder_variance, seed as u64, u0, u1).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn deloc_curve(d: u32, n_max: u32) -> Result<Vec<f64>, JsValue> {
    deloc_values(d, n_max).map_err(|e| JsValue::from_str(&e))
}
