use std::time::Instant;

use bslab_core::bifurcation::{ge_amplitude, ge_profile, gw_quadratures, reduced_stability, reduced_steady_solve, ReducedModel};
use bslab_core::dispersion::{critical_point, sw_dispersion_roots, sweep};
use bslab_core::explicit::catalog;
use bslab_core::growth::{fit_rate, verify_growth_batch};
use bslab_core::spectral::{energy_budget_residual, random_field, shear_amplitudes, shear_mode, SimConfig, Simulator};
use bslab_core::types::wavenumber;
use bslab_core::{BackscatterParams, PhysicalParams, SpectralField2D, WaveVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fig2() -> (BackscatterParams, PhysicalParams) {
    (BackscatterParams::isotropic(2.0, 1.0), PhysicalParams { f: 0.3, g: 9.8, H0: 0.1, ..Default::default() })
}

fn criticality() -> Outcome {
    let (bp, pp) = fig2();
    let cp = critical_point(&bp, &pp).map_err(|e| e.to_string())?;
    let ok = (cp.C_c - 0.1).abs() <= 1e-12 && (cp.k_c - 1.0).abs() <= 1e-12 && (cp.omega_c - 1.07f64.sqrt()).abs() <= 1e-12;
    check(ok, format!("C_c={} k_c={} omega_c={}", cp.C_c, cp.k_c, cp.omega_c))
}

fn classification() -> Outcome {
    let (bp, mut pp) = fig2();
    let k = WaveVector::new(1.0, 0.0);
    let mut labels = Vec::new();
    for c in [0.12, 0.08, 0.1] {
        pp.C = c;
        labels.push(sw_dispersion_roots(k, &bp, &pp).class);
    }
    let ks: Vec<f64> = (0..200).map(|i| -3.0 + 6.0 * i as f64 / 199.0).collect();
    let t0 = Instant::now();
    let all = sweep(&ks, &ks, &bp, &pp);
    let el = t0.elapsed().as_secs_f64();
    let ok = labels[0].stable && labels[1].unstable && labels[2].zero_root && labels[2].hopf && all.len() == 40000 && el < 1.0;
    check(ok, format!("{} / {} / {}; sweep 200x200 in {el:.3}s", labels[0].label(), labels[1].label(), labels[2].label()))
}

fn explicit_catalog() -> Outcome {
    let entries = catalog().map_err(|e| e.to_string())?;
    let mut worst_ok: f64 = 0.0;
    let mut weakest_bad = f64::INFINITY;
    let mut failing = Vec::new();
    for e in &entries {
        let (ok, bad) = e.residuals(64);
        worst_ok = worst_ok.max(ok);
        weakest_bad = weakest_bad.min(bad);
        if !(ok <= 1e-8 && bad > 1e-3) {
            failing.push(format!("{} ({ok:.1e}/{bad:.1e})", e.name));
        }
    }
    let detail = format!("{} flows, max residual {worst_ok:.1e}, min corrupted residual {weakest_bad:.1e}", entries.len());
    if failing.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failing: {}", failing.join(", ")))
    }
}

fn plane_wave_growth() -> Outcome {
    let cfg = SimConfig { n: 64, dt: 0.1, t_end: 2000.0, b: 0.0015, d: 0.001, f: 0.3, output_stride: 100, ..Default::default() };
    let (end, diag) = Simulator::new(cfg).map_err(|e| e.to_string())?.run(shear_mode(1, 64)).map_err(|e| e.to_string())?;
    let series: Vec<(f64, f64)> = diag.records.iter().map(|r| (r.t, r.large_norm)).collect();
    let (rate, _) = fit_rate(&series, (0.0, 2000.0)).map_err(|e| e.to_string())?;
    let a = shear_amplitudes(&end.field);
    let mut rest = end.field.clone();
    rest.axpy(-a[0], &shear_mode(1, 64));
    let other = rest.norm2_sq().sqrt();
    check((rate - 5e-4).abs() <= 0.02 * 5e-4 && other < 1e-12, format!("rate {rate:.6e}, other modes {other:.1e}"))
}

fn growth_theorem() -> Outcome {
    let sim = SimConfig { n: 32, dt: 1e-3, t_end: 10.0, b: 1.5, d: 1.0, output_stride: 100, ..Default::default() };
    let seeds: Vec<u64> = (0..20).collect();
    let mut worst_large = f64::INFINITY;
    let mut worst_small: f64 = 0.0;
    let mut fails = 0;
    for j in 0..4 {
        let mut star = [0.0; 4];
        star[j] = 1.0;
        for r in verify_growth_batch(star, 1e-3, 0.05, &sim, &seeds).map_err(|e| e.to_string())? {
            worst_large = worst_large.min(r.large_margin);
            worst_small = worst_small.max(r.small_envelope);
            if !(r.pass_large_bound && r.pass_small_bound) {
                fails += 1;
            }
        }
    }
    check(fails == 0, format!("80 runs, {fails} failing; min large-scale margin {worst_large:.4}, max small-scale envelope {worst_small:.4}"))
}

fn decay() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let cfg = SimConfig { n: 32, dt: 1e-2, t_end: 10.0, b: 0.5, d: 1.0, f: 0.3, seed, ..Default::default() };
        let (_, diag) = Simulator::new(cfg).map_err(|e| e.to_string())?.run(random_field(32, seed, 1.0)).map_err(|e| e.to_string())?;
        let e0 = diag.records[0].energy.sqrt();
        for r in &diag.records {
            worst = worst.max(r.energy.sqrt() / ((-0.5 * r.t).exp() * e0));
        }
    }
    check(worst <= 1.0 + 1e-3, format!("max ||u(t)|| e^(t/2) / ||u0|| = {worst:.6}"))
}

fn times_laplacian(u: &SpectralField2D) -> SpectralField2D {
    let n = u.n;
    let mut au = u.clone();
    for jy in 0..n {
        for jx in 0..n {
            let (kx, ky) = (wavenumber(jx, n) as f64, wavenumber(jy, n) as f64);
            au.uhat[jy * n + jx] *= kx * kx + ky * ky;
            au.vhat[jy * n + jx] *= kx * kx + ky * ky;
        }
    }
    au
}

fn nonlinear_identities() -> Outcome {
    let n = 32;
    let mut sim = Simulator::new(SimConfig { n, ..Default::default() }).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let u = random_field(n, 1000 + seed, 1.0);
        let b = sim.nonlinear_term(&u);
        let au = times_laplacian(&u);
        let nb = b.norm2_sq().sqrt();
        worst = worst.max(b.inner(&u).abs() / (nb * u.norm2_sq().sqrt()));
        worst = worst.max(b.inner(&au).abs() / (nb * au.norm2_sq().sqrt()));
    }
    let e: Vec<SpectralField2D> = (1..=4).map(|j| shear_mode(j, n)).collect();
    let mut triple: f64 = 0.0;
    for a in &e {
        for b in &e {
            let bb = sim.bilinear(a, b);
            for c in &e {
                triple = triple.max(bb.inner(c).abs());
            }
        }
    }
    check(worst <= 1e-11 && triple <= 1e-12, format!("relative <B(u,u),u>, <B(u,u),Au> up to {worst:.1e}; 64 shear triples up to {triple:.1e}"))
}

fn energy_budget() -> Outcome {
    let u0 = random_field(32, 7, 1.0);
    let res: Vec<f64> = [0.01, 0.005, 0.0025, 0.00125]
        .iter()
        .map(|&dt| {
            // a single step from the same data
            let cfg = SimConfig { n: 32, dt, t_end: dt, b: 1.5, d: 1.0, f: 0.3, ..Default::default() };
            energy_budget_residual(&cfg, u0.clone()).unwrap_or(f64::NAN)
        })
        .collect();
    let slopes: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    check(min >= 1.9, format!("residuals {}, halving slopes {slopes:.3?}", res.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(" ")))
}

fn shear_endgame() -> Outcome {
    let n = 64;
    let cfg = SimConfig { n, dt: 0.1, t_end: 8500.0, b: 0.0015, d: 0.001, f: 0.0, output_stride: 500, ..Default::default() };
    let (_, diag) = Simulator::new(cfg).map_err(|e| e.to_string())?.run(random_field(n, 42, 1.0)).map_err(|e| e.to_string())?;
    let last = diag.records.last().unwrap();
    let frac = last.large_norm * last.large_norm / (2.0 * last.energy);
    check(frac >= 0.99, format!("energy fraction on e1..e4 at t={} is {frac:.6}", last.t))
}

fn bifurcation_amplitudes() -> Outcome {
    let m = ReducedModel { b: 2.0, d: 1.0, f: 0.3, g: 9.8, h0: 0.1, q: 0.05 };
    let mut errs = Vec::new();
    for alpha in [0.01, 0.005] {
        let c = m.drag_at(alpha).map_err(|e| e.to_string())?;
        let a = ge_amplitude(alpha, 0.0, &m).map_err(|e| e.to_string())?;
        let p = reduced_steady_solve(&ge_profile(a, 1.0, c, &m, 31), c, &m).map_err(|e| e.to_string())?;
        errs.push((p.a1.abs() - a).abs() / a);
    }
    check(errs[0] < 0.1 && errs[1] < 0.1 && errs[1] < errs[0], format!("relative errors {:.3e} (alpha=0.01), {:.3e} (alpha=0.005)", errs[0], errs[1]))
}

fn quadratures() -> Outcome {
    let (f, g, h0, k): (f64, f64, f64, f64) = (0.3, 9.8, 0.1, 1.0);
    let n = 4096;
    let (mut i1, mut i2) = (0.0, 0.0);
    for j in 0..n {
        let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let r = (f * f + k * k * g * h0 * x.cos().powi(2)).sqrt();
        i1 += r / n as f64;
        i2 += r * (2.0 * x).cos() / n as f64;
    }
    let q = gw_quadratures(f, g, h0, k);
    let ok = (q.i1 - i1).abs() <= 1e-10 && (q.i2 - i2).abs() <= 1e-10 && q.i1 > q.i2 && q.i2 > 0.0;
    check(ok, format!("I1={:.12} I2={:.12}, oracle differences {:.1e}, {:.1e}", q.i1, q.i2, (q.i1 - i1).abs(), (q.i2 - i2).abs()))
}

fn stability_findings() -> Outcome {
    let m = ReducedModel { b: 2.0, d: 1.0, f: 0.3, g: 9.8, h0: 0.1, q: 0.05 };
    let c = m.drag_at(0.01).map_err(|e| e.to_string())?;
    let a = ge_amplitude(0.01, 0.0, &m).map_err(|e| e.to_string())?;
    let p = reduced_steady_solve(&ge_profile(a, 1.0, c, &m, 31), c, &m).map_err(|e| e.to_string())?;
    let st = reduced_stability(&p, &m).map_err(|e| e.to_string())?;
    let lead = st.eigenvalues[0];
    check(
        st.unstable_complex_pair && st.translation_eigenvalue.norm() <= 1e-8,
        format!("leading eigenvalue {:.4e} {:+.4e}i, translation eigenvalue {:.1e}", lead.re, lead.im, st.translation_eigenvalue.norm()),
    )
}

fn scaling_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (b, d, f, alpha) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..2.0), rng.gen_range(0.1..2.0), rng.gen_range(1e-3..0.1));
        let eps: f64 = rng.gen_range(1e-3..1e3);
        let m = |b: f64, d: f64, q: f64| ReducedModel { b, d, f, g: 9.8, h0: 0.1, q };
        let amp = |mm: ReducedModel| ge_amplitude(alpha, 0.0, &mm).unwrap();
        let r0 = amp(m(eps * b, eps * d, 0.0)) / (amp(m(b, d, 0.0)) / eps.sqrt()) - 1.0;
        let rq = amp(m(eps * b, eps * d, 0.2)) / amp(m(b, d, 0.2)) - 1.0;
        worst = worst.max(r0.abs()).max(rq.abs());
    }
    check(worst <= 1e-12, format!("200 random scalings, max relative deviation {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("criticality numbers", criticality),
        ("stability classification", classification),
        ("explicit solution residuals", explicit_catalog),
        ("plane-wave growth", plane_wave_growth),
        ("stable growth theorem harness", growth_theorem),
        ("decay without growth window", decay),
        ("nonlinearity identities", nonlinear_identities),
        ("energy budget", energy_budget),
        ("shear-mode endgame", shear_endgame),
        ("bifurcation amplitudes", bifurcation_amplitudes),
        ("gravity-wave quadratures", quadratures),
        ("1D stability findings", stability_findings),
        ("scaling identities", scaling_identities),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let t0 = Instant::now();
        let out = run();
        let el = t0.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{el:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{el:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
