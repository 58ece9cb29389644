//! Scale splitting, exponential rate fits and the stable-growth check for
//! backscatter in the window `d < b < 2d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spectral::{large_scale_part, random_field, shear_mode, Diagnostics, SimConfig, Simulator};
use crate::types::SpectralField2D;
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSplit {
    /// Part on the four shear modes.
    pub large: SpectralField2D,
    pub small: SpectralField2D,
}

pub fn split_scales(field: &SpectralField2D) -> ScaleSplit {
    let large = large_scale_part(field);
    let mut small = field.clone();
    small.axpy(-1.0, &large);
    ScaleSplit { large, small }
}

/// Least-squares slope of `log(value)` against `t` over samples with `t` in
/// `window`, and the coefficient of determination.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, f64), Error> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= window.0 && t <= window.1).collect();
    if pts.len() < 10 {
        return Err(Error::Param(format!("need at least 10 samples in the fit window, got {}", pts.len())));
    }
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Param(format!("non-positive value {v} at t = {t} in the fit window")));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let (dt, dy) = (t - tm, v.ln() - ym);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let rate = sty / stt;
    let r2 = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Ok((rate, r2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub seed: u64,
    pub fitted_rate_large: f64,
    pub fitted_rate_small: f64,
    pub r_squared_large: f64,
    pub r_squared_small: f64,
    pub window: (f64, f64),
    /// `((1 - 2 eps)(b - d), -2(2d - b))`
    pub theorem_bounds: (f64, f64),
    /// Smallest `||u_bar(t)|| / (e^{rate t} ||u_star|| / (2 sqrt 2))`.
    pub large_margin: f64,
    /// Largest `e^{2(2d-b)t} ||grad u'(t)|| / (sqrt 2 ||grad u'(0)||)`.
    pub small_envelope: f64,
    pub pass_large_bound: bool,
    pub pass_small_bound: bool,
    pub pass_rate: bool,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.pass_large_bound && self.pass_small_bound && self.pass_rate
    }

    pub const CSV_HEADER: &'static str =
        "seed,rate_large,rate_small,r2_large,r2_small,bound_large,bound_small,large_margin,small_envelope,pass";
}

/// `((1 - 2 eps)(b - d), -2(2d - b))`, refusing `b` outside `(d, 2d)`.
pub fn theorem_rates(b: f64, d: f64, eps: f64) -> Result<(f64, f64), Error> {
    if !(d > 0.0 && b > d && b < 2.0 * d) {
        return Err(Error::Range(format!("need d < b < 2d, got b={b}, d={d}")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Range(format!("need 0 < eps < 1/2, got {eps}")));
    }
    Ok(((1.0 - 2.0 * eps) * (b - d), -2.0 * (2.0 * d - b)))
}

/// Runs the simulator from `u_star + w` where `u_star` has coordinates
/// `u_star` along the shear modes and `w` is random with `||A w|| = perturbation`
/// (seeded by `sim.seed`), then checks the large-scale lower bound, the
/// small-scale envelope and the fitted large-scale rate.
pub fn verify_growth_theorem(
    u_star: [f64; 4],
    perturbation: f64,
    eps: f64,
    sim: &SimConfig,
) -> Result<GrowthReport, Error> {
    let (rate_large, rate_small) = theorem_rates(sim.b, sim.d, eps)?;
    let n = sim.n;
    let mut star = SpectralField2D::zeros(n);
    for (j, &a) in u_star.iter().enumerate() {
        star.axpy(a, &shear_mode(j + 1, n));
    }
    let star_norm = star.norm2_sq().sqrt();
    if star_norm == 0.0 {
        return Err(Error::Param("u_star must be nonzero".into()));
    }
    let mut init = star.clone();
    init.axpy(1.0, &random_field(n, sim.seed, perturbation));
    let mut simulator = Simulator::new(sim.clone())?;
    let (_, diag) = simulator.run(init)?;
    Ok(assess(&diag, sim.seed, star_norm, rate_large, rate_small))
}

fn assess(diag: &Diagnostics, seed: u64, star_norm: f64, rate_large: f64, rate_small: f64) -> GrowthReport {
    let rec = &diag.records;
    let small0 = rec[0].small_h1;
    let c = 2f64.sqrt();
    let mut large_margin = f64::INFINITY;
    let mut small_envelope: f64 = 0.0;
    for r in rec {
        let lower = (rate_large * r.t).exp() * star_norm / (2.0 * c);
        large_margin = large_margin.min(r.large_norm / lower);
        if small0 > 0.0 {
            small_envelope = small_envelope.max((-rate_small * r.t).exp() * r.small_h1 / (c * small0));
        }
    }
    let t_end = rec.last().map(|r| r.t).unwrap_or(0.0);
    let window = (1.0f64.min(t_end), t_end);
    let large: Vec<(f64, f64)> = rec.iter().map(|r| (r.t, r.large_norm)).collect();
    let small: Vec<(f64, f64)> = rec.iter().map(|r| (r.t, r.small_h1)).collect();
    let (fl, rl) = fit_rate(&large, window).unwrap_or((f64::NAN, f64::NAN));
    let (fs, rs) = fit_rate(&small, window).unwrap_or((f64::NAN, f64::NAN));
    GrowthReport {
        seed,
        fitted_rate_large: fl,
        fitted_rate_small: fs,
        r_squared_large: rl,
        r_squared_small: rs,
        window,
        theorem_bounds: (rate_large, rate_small),
        large_margin,
        small_envelope,
        pass_large_bound: large_margin >= 1.0,
        pass_small_bound: small_envelope <= 1.0,
        pass_rate: fl >= rate_large,
    }
}

/// Independent runs over `seeds`, in parallel.
pub fn verify_growth_batch(
    u_star: [f64; 4],
    perturbation: f64,
    eps: f64,
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<GrowthReport>, Error> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SimConfig { seed, ..sim.clone() };
            verify_growth_theorem(u_star, perturbation, eps, &cfg)
        })
        .collect()
}
