//! One function per command. Each reads the resolved config, calls into the
//! library and writes its artifacts.

use bslab_core::bifurcation::{
    continue_branch, ge_amplitude, gw_amplitude_and_speed, reduced_stability, reduced_steady_solve, BifParams, BranchPoint,
    ContinuationControl, ReducedModel,
};
use bslab_core::dispersion::{backscatter_symbol, critical_point, kernel_modes, sweep, DispersionResult, ModeKind};
use bslab_core::explicit::{catalog, sw_loci_map, sw_monochromatic, sw_steady_loci};
use bslab_core::growth::{verify_growth_batch, GrowthReport};
use bslab_core::spectral::{random_field, shear_mode, Diagnostics, SimConfig, Simulator};
use bslab_core::{BackscatterParams, Error, PhysicalParams, WaveVector};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{g17, row, OutDir};

pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("writing output: {e}"))
    }
}

type Res = Result<(), Failure>;

fn backscatter(c: &RunConfig) -> Result<BackscatterParams, Failure> {
    let bp = BackscatterParams { b1: c.num("b1"), b2: c.num("b2"), d1: c.num("d1"), d2: c.num("d2") };
    bp.validate()?;
    Ok(bp)
}

fn physical(c: &RunConfig) -> Result<PhysicalParams, Failure> {
    let pp = PhysicalParams {
        f: c.num("f"),
        g: c.num("g"),
        H0: c.num("H0"),
        C: c.num("C"),
        Q: c.num("Q"),
        nu_v: c.num("nu_v"),
        mu: c.num("mu"),
        N2: c.num("N2"),
    };
    pp.validate()?;
    Ok(pp)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn raster(c: &RunConfig) -> Result<Vec<f64>, Failure> {
    let (k_max, nk) = (c.num("k_max"), c.usize("nk"));
    if !(k_max > 0.0) {
        return Err(Failure::Config(format!("k_max: must be positive, got {k_max}")));
    }
    if nk < 2 {
        return Err(Failure::Config(format!("nk: need at least 2 points, got {nk}")));
    }
    Ok(linspace(-k_max, k_max, nk))
}

fn roots_row(lead: &[f64], r: &DispersionResult) -> String {
    let mut xs = lead.to_vec();
    for z in r.roots {
        xs.extend([z.re, z.im]);
    }
    xs.push(r.max_re());
    format!("{},{}", row(&xs), r.class.label())
}

pub const SPECTRUM_COLUMNS: &str = "spectrum.csv  kx,ky,re1,im1,re2,im2,re3,im3,max_re,class (shallow_water)
radial.csv    k,re1,im1,re2,im2,re3,im3,max_re,class along k=(k,0) (shallow_water)
              k,lambda_<b>... growth rate b k^2 - d k^4 per b value (euler)";

pub fn spectrum(c: &RunConfig, out: &mut OutDir) -> Res {
    let bp = backscatter(c)?;
    let pp = physical(c)?;
    let nk = c.usize("nk");
    let radial_k = linspace(0.0, c.num("k_max"), nk);
    if c.text("model") == "euler" {
        let mut bs = c.numbers("b_values");
        if bs.is_empty() {
            bs.push(bp.b1);
        }
        let d = bp.d1;
        let header = std::iter::once("k".to_string()).chain(bs.iter().map(|b| format!("lambda_{b}"))).collect::<Vec<_>>().join(",");
        let rows = radial_k.iter().map(|&k| {
            let xs: Vec<f64> = std::iter::once(k).chain(bs.iter().map(|&b| backscatter_symbol(k, b, d))).collect();
            row(&xs)
        });
        out.csv("radial.csv", &header, rows)?;
        let per_b: Vec<Value> = bs
            .iter()
            .map(|&b| json!({"b": b, "unstable_radius": (b / d).sqrt(), "fastest_k": (b / (2.0 * d)).sqrt(), "max_rate": b * b / (4.0 * d)}))
            .collect();
        out.json("summary.json", &json!({"model": "euler", "d": d, "curves": per_b}))?;
        return Ok(());
    }
    let ks = raster(c)?;
    let all = sweep(&ks, &ks, &bp, &pp);
    out.csv(
        "spectrum.csv",
        "kx,ky,re1,im1,re2,im2,re3,im3,max_re,class",
        all.iter().map(|r| roots_row(&[r.k.kx, r.k.ky], r)),
    )?;
    let line = sweep(&radial_k, &[0.0], &bp, &pp);
    out.csv("radial.csv", "k,re1,im1,re2,im2,re3,im3,max_re,class", line.iter().map(|r| roots_row(&[r.k.kx], r)))?;
    let count = |p: fn(&DispersionResult) -> bool| all.iter().filter(|r| p(r)).count();
    let crit = critical_point(&bp, &pp).ok();
    out.json(
        "summary.json",
        &json!({
            "model": "shallow_water",
            "C": pp.C,
            "C_c": crit.map(|p| p.C_c),
            "k_c": crit.map(|p| p.k_c),
            "omega_c": crit.map(|p| p.omega_c),
            "max_re": all.iter().map(DispersionResult::max_re).fold(f64::NEG_INFINITY, f64::max),
            "n_points": all.len(),
            "n_stable": count(|r| r.class.stable),
            "n_unstable": count(|r| r.class.unstable),
            "n_zero_root": count(|r| r.class.zero_root),
            "n_hopf": count(|r| r.class.hopf),
        }),
    )?;
    Ok(())
}

pub const MODES_COLUMNS: &str = "modes.csv  kind,j,kx,ky,omega,u_re,u_im,v_re,v_im,eta_re,eta_im";

pub fn modes(c: &RunConfig, out: &mut OutDir) -> Res {
    let bp = backscatter(c)?;
    let pp = physical(c)?;
    let cp = critical_point(&bp, &pp)?;
    let k = WaveVector::from_polar(cp.k_c, c.num("angle"));
    let mut rows = Vec::new();
    for (name, kind) in [("geostrophic", ModeKind::Geostrophic), ("gravity", ModeKind::GravityWave), ("mass", ModeKind::Mass)] {
        for m in kernel_modes(kind, k, &bp, &pp)? {
            let mut xs = vec![m.j as f64, m.k.kx, m.k.ky, m.omega];
            for z in m.e {
                xs.extend([z.re, z.im]);
            }
            rows.push(format!("{name},{}", row(&xs)));
        }
    }
    out.csv("modes.csv", "kind,j,kx,ky,omega,u_re,u_im,v_re,v_im,eta_re,eta_im", rows)?;
    out.json("summary.json", &json!({"C_c": cp.C_c, "k_c": cp.k_c, "omega_c": cp.omega_c}))?;
    Ok(())
}

pub const FLOWS_COLUMNS: &str = "loci.csv   kx,ky,lambda,relation_defect,relation_holds,steady,sign
flows.json steady monochromatic flows (model, k, amplitudes, lambda, phase)";

pub fn flows(c: &RunConfig, out: &mut OutDir) -> Res {
    let bp = backscatter(c)?;
    let pp = physical(c)?;
    let (a1, a2) = (c.num("alpha1"), c.num("alpha2"));
    if a1 == 0.0 {
        return Err(Failure::Config("alpha1: must be nonzero".into()));
    }
    let ks = raster(c)?;
    let cells = sw_loci_map(&ks, &ks, &bp, &pp, a2 / a1, c.num("loci_tol"));
    out.csv(
        "loci.csv",
        "kx,ky,lambda,relation_defect,relation_holds,steady,sign",
        cells.iter().map(|cell| {
            row(&[
                cell.kx,
                cell.ky,
                cell.lambda,
                cell.relation_defect,
                cell.relation_holds as u8 as f64,
                cell.steady as u8 as f64,
                cell.sign() as f64,
            ])
        }),
    )?;
    let mut steady = Vec::new();
    for k in sw_steady_loci(&bp, &pp, a2 / a1) {
        steady.push(serde_json::to_value(sw_monochromatic(k, a1, a2, 0.0, 0.0, &bp, &pp)?).expect("flow serializes"));
    }
    let n_growing = cells.iter().filter(|x| x.relation_holds && x.lambda > 0.0).count();
    out.json("flows.json", &json!({ "steady": steady }))?;
    out.json("summary.json", &json!({"ratio": a2 / a1, "n_steady": steady.len(), "n_growing_cells_on_relation": n_growing}))?;
    Ok(())
}

fn sim_config(c: &RunConfig) -> Result<SimConfig, Failure> {
    let (b1, b2, d1, d2) = (c.num("b1"), c.num("b2"), c.num("d1"), c.num("d2"));
    if b1 != b2 || d1 != d2 {
        return Err(Failure::Config("b2: the 2D simulator needs isotropic backscatter (b1 = b2, d1 = d2)".into()));
    }
    let cfg = SimConfig {
        n: c.usize("n"),
        dt: c.num("dt"),
        t_end: c.num("t_end"),
        b: b1,
        d: d1,
        f: c.num("f"),
        seed: c.count("seed"),
        dealias_fraction: c.num("dealias_fraction"),
        output_stride: c.usize("output_stride"),
        keep_mean: c.flag("keep_mean"),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub const SIMULATE_COLUMNS: &str = "diagnostics.csv  t,E,gradE,lapE,large_norm,small_H1,a_e1,a_e2,a_e3,a_e4,mx,my
final_field.json spectral coefficients uhat, vhat as [re, im], row-major with kx fastest";

pub fn simulate(c: &RunConfig, out: &mut OutDir) -> Res {
    let cfg = sim_config(c)?;
    let norm = c.num("init_norm");
    let init = match c.text("init") {
        "random" => random_field(cfg.n, cfg.seed, norm),
        e => {
            let j = e[1..].parse::<usize>().expect("choice e1..e4");
            let mut f = shear_mode(j, cfg.n);
            f.scale(norm);
            f
        }
    };
    let (end, diag) = Simulator::new(cfg.clone())?.run(init)?;
    out.csv("diagnostics.csv", Diagnostics::CSV_HEADER, diag.records.iter().map(|r| row(&Diagnostics::csv_row(r))))?;
    out.json("final_field.json", &json!({"t": end.t, "field": end.field}))?;
    let last = diag.records.last().expect("at least the initial record");
    out.json(
        "summary.json",
        &json!({
            "t": end.t,
            "energy": last.energy,
            "shear_energy_fraction": if last.energy > 0.0 { last.large_norm * last.large_norm / (2.0 * last.energy) } else { 0.0 },
            "shear_amplitudes": last.amps,
            "records": diag.records.len(),
        }),
    )?;
    Ok(())
}

pub const GROWTH_COLUMNS: &str = "growth_summary.csv  seed,rate_large,rate_small,r2_large,r2_small,bound_large,bound_small,large_margin,small_envelope,pass
growth_report.json  full reports with pass flags";

pub fn growth(c: &RunConfig, out: &mut OutDir) -> Res {
    let cfg = sim_config(c)?;
    let j = c.usize("star_mode");
    if !(1..=4).contains(&j) {
        return Err(Failure::Config(format!("star_mode: must be 1..4, got {j}")));
    }
    let mut star = [0.0; 4];
    star[j - 1] = 1.0;
    let seeds: Vec<u64> = (0..c.count("seeds")).map(|i| cfg.seed + i).collect();
    let reports = verify_growth_batch(star, c.num("perturbation"), c.num("eps"), &cfg, &seeds)?;
    out.csv(
        "growth_summary.csv",
        GrowthReport::CSV_HEADER,
        reports.iter().map(|r| {
            row(&[
                r.seed as f64,
                r.fitted_rate_large,
                r.fitted_rate_small,
                r.r_squared_large,
                r.r_squared_small,
                r.theorem_bounds.0,
                r.theorem_bounds.1,
                r.large_margin,
                r.small_envelope,
                r.passed() as u8 as f64,
            ])
        }),
    )?;
    let all_bounds = reports.iter().all(|r| r.pass_large_bound && r.pass_small_bound);
    out.json(
        "growth_report.json",
        &json!({
            "star_mode": j,
            "eps": c.num("eps"),
            "perturbation": c.num("perturbation"),
            "bounds_hold": all_bounds,
            "all_passed": reports.iter().all(GrowthReport::passed),
            "reports": reports,
        }),
    )?;
    Ok(())
}

pub const BIFURCATE_COLUMNS: &str = "branch.csv      C,A1,norm,max_re,n_unstable,arclength,residual (continuation)
eigenvalues.csv re,im of the linearization at the first branch point (continuation)
profiles.json   cosine coefficients of every branch point (continuation)
amplitudes.csv  alpha,C,ge_<case>,gw_<case>... leading-order |A1|, nan where undefined (amplitudes)";

pub fn bifurcate(c: &RunConfig, out: &mut OutDir) -> Res {
    let bp = backscatter(c)?;
    let pp = physical(c)?;
    if c.text("analysis") == "amplitudes" {
        return amplitudes(c, &bp, &pp, out);
    }
    let bif = BifParams::new(c.num("alpha"), c.num("kappa"), &bp, &pp)?;
    let m = bif.model;
    let guess = bif.leading_profile(c.usize("modes"))?;
    let start = reduced_steady_solve(&guess, guess.c, &m)?;
    let ctl = ContinuationControl {
        initial_step: c.num("initial_step"),
        max_step: c.num("max_step"),
        c_stop: c.num("c_stop"),
        with_stability: c.flag("with_stability"),
        ..Default::default()
    };
    let branch = continue_branch(&start, c.num("direction"), c.usize("steps"), &ctl, &m)?;
    let header = format!("{},arclength,residual", BranchPoint::CSV_HEADER);
    out.csv(
        "branch.csv",
        &header,
        branch.iter().map(|p| {
            let mut xs = p.csv_row().to_vec();
            xs.extend([p.arclength, p.residual]);
            row(&xs)
        }),
    )?;
    let st = reduced_stability(&start, &m)?;
    out.csv("eigenvalues.csv", "re,im", st.eigenvalues.iter().map(|z| row(&[z.re, z.im])))?;
    let profiles: Vec<Value> = branch.iter().map(|p| json!({"C": p.c, "k": p.profile.k, "coeffs": p.profile.coeffs})).collect();
    out.json("profiles.json", &json!({ "profiles": profiles }))?;
    let last = branch.last().expect("branch holds its start");
    out.json(
        "summary.json",
        &json!({
            "C_start": start.c,
            "A1_leading_order": ge_amplitude(bif.alpha, bif.kappa, &m).ok(),
            "A1_start": start.a1,
            "max_re_start": st.max_re,
            "unstable_complex_pair": st.unstable_complex_pair,
            "translation_eigenvalue": st.translation_eigenvalue.norm(),
            "C_end": last.c,
            "A1_end": last.profile.a1,
            "points": branch.len(),
        }),
    )?;
    Ok(())
}

fn amplitudes(c: &RunConfig, bp: &BackscatterParams, pp: &PhysicalParams, out: &mut OutDir) -> Res {
    let mut cases = c.pairs("cases");
    if cases.is_empty() {
        cases.push([pp.Q, pp.f]);
    }
    let base = ReducedModel::new(bp, pp);
    let alphas = linspace(0.0, c.num("alpha_max"), c.usize("n_alpha"));
    let mut header = String::from("alpha,C");
    for [q, f] in &cases {
        header.push_str(&format!(",ge_Q{q}_f{f},gw_Q{q}_f{f}"));
    }
    let mut rows = Vec::new();
    for &alpha in &alphas {
        let mut xs = vec![alpha, base.drag_at(alpha)?];
        for &[q, f] in &cases {
            let m = ReducedModel { q, f, ..base };
            xs.push(ge_amplitude(alpha, c.num("kappa"), &m).unwrap_or(f64::NAN));
            xs.push(gw_amplitude_and_speed(alpha, c.num("kappa"), &m).map(|r| r.0).unwrap_or(f64::NAN));
        }
        rows.push(row(&xs));
    }
    out.csv("amplitudes.csv", &header, rows)?;
    out.json("summary.json", &json!({"cases": cases, "C_c": base.critical()?.C_c}))?;
    Ok(())
}

pub const VERIFY_COLUMNS: &str = "verify.csv  name,residual,corrupted_residual,pass (exit 1 if any fails)";

pub fn verify(c: &RunConfig, out: &mut OutDir) -> Res {
    let n = c.usize("n");
    let mut rows = Vec::new();
    let mut failing = Vec::new();
    for e in catalog()? {
        let (ok, bad) = e.residuals(n);
        let pass = ok <= 1e-8 && bad > 1e-3;
        if !pass {
            failing.push(e.name);
        }
        rows.push(format!("{},{},{},{}", e.name, g17(ok), g17(bad), pass as u8));
    }
    out.csv("verify.csv", "name,residual,corrupted_residual,pass", rows)?;
    out.json("summary.json", &json!({"grid": n, "failing": failing}))?;
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("residual check failed for {}", failing.join(", "))))
    }
}
