//! Acceptance suite: ten end-to-end checks of the model, simulator and CLI, each printed as one
//! PASS/FAIL line. Runs without the libtest harness so the summary is always visible.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use sveis_core::analysis::{extinction_verdict_from_paths, path_extinction};
use sveis_core::engine::ensemble_map;
use sveis_core::ou::OuTransition;
use sveis_core::stats::{ks_normal, mean_and_std_err};
use sveis_core::{
    default_dt, dfe, drift, integrate_deterministic, ou_step_exact, persistence_verdict, r0, r0_e,
    r0_s, simulate_ensemble, thresholds, ExtinctionOptions, ModelParamsF64, OuParamsF64, PersistenceOptions, Regime,
    RngStream, Scheme, SimConfigF64, StateF64, ZHold,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn reference(beta_bar: f64, delta: f64) -> ModelParamsF64 {
    ModelParamsF64 {
        pi: 1.0,
        alpha: 0.1,
        beta_bar,
        m: 0.1,
        omega: 0.1,
        gamma: 0.1,
        xi: 0.1,
        sigma: 0.1,
        eta: 0.1,
        k: 0.5,
        theta: 1.0,
        delta,
    }
}

/// Reference `R0` at `β̄ = 0.1`.
const R0_REF: f64 = 20.0 / 27.0;

fn random_params(rng: &mut RngStream) -> ModelParamsF64 {
    let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * rng.uniform();
    ModelParamsF64 {
        pi: draw(0.5, 2.0),
        alpha: draw(0.05, 1.0),
        beta_bar: draw(0.01, 1.0),
        m: draw(0.05, 1.0),
        omega: draw(0.05, 1.0),
        gamma: draw(0.05, 1.0),
        xi: draw(0.05, 1.0),
        sigma: draw(0.05, 1.0),
        eta: draw(0.05, 1.0),
        k: draw(0.01, 5.0),
        theta: draw(0.1, 5.0),
        delta: draw(0.0, 3.0),
    }
}

fn seeded_init(p: &ModelParamsF64) -> StateF64 {
    let d = dfe(p);
    StateF64::new(0.9 * d.s, d.v, 0.05 * d.s, 0.05 * d.s, 0.0)
}

fn sim_config(p: ModelParamsF64, horizon: f64, n_paths: usize, seed: u64) -> SimConfigF64 {
    let dt = default_dt(&p);
    let grid = sveis_core::TimeGrid::new(horizon, dt).unwrap();
    SimConfigF64 {
        params: p,
        init: seeded_init(&p),
        horizon,
        dt,
        n_paths,
        master_seed: seed,
        record_stride: grid.stride_for(10_000),
        z_hold: ZHold::Midpoint,
        scheme: Scheme::Splitting,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn threshold_identities() -> Outcome {
    let mut rng = RngStream::new(101, 0);
    let (mut worst_ratio, mut worst_limit) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let multiplier = (p.delta * p.delta / (16.0 * p.theta)).exp();
        worst_ratio = worst_ratio.max(rel(r0_s(&p) / r0(&p, p.beta_bar), multiplier));
        let quiet = p.with_noise(p.theta, 0.0);
        worst_limit = worst_limit.max(rel(r0_e(&quiet).map_err(|e| e.to_string())?, r0(&quiet, quiet.beta_bar).sqrt()));
    }
    check(
        worst_ratio < 1e-12 && worst_limit < 1e-12,
        format!("100 draws, max rel err r0_s/r0 {worst_ratio:.2e}, r0_e(delta=0) vs sqrt(r0) {worst_limit:.2e}"),
    )
}

/// Spectral radius of `F·V⁻¹` for the (E, I) block, from a generic 2×2 inverse and eigenvalue formula.
fn next_generation_radius(p: &ModelParamsF64) -> f64 {
    // S⁰ by Cramer's rule on (α+m)S − ωV = Π, −αS + (m+ω)V = 0.
    let det = (p.alpha + p.m) * (p.m + p.omega) - p.omega * p.alpha;
    let s0 = p.pi * (p.m + p.omega) / det;
    let f = [[0.0, p.beta_bar * s0], [0.0, 0.0]];
    let v = [[p.m + p.sigma + p.xi, 0.0], [-p.sigma, p.m + p.gamma + p.eta]];
    let dv = v[0][0] * v[1][1] - v[0][1] * v[1][0];
    let vinv = [[v[1][1] / dv, -v[0][1] / dv], [-v[1][0] / dv, v[0][0] / dv]];
    let mut k = [[0.0; 2]; 2];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = f[i][0] * vinv[0][j] + f[i][1] * vinv[1][j];
        }
    }
    let (tr, dk) = (k[0][0] + k[1][1], k[0][0] * k[1][1] - k[0][1] * k[1][0]);
    let disc = (tr * tr / 4.0 - dk).max(0.0).sqrt();
    (tr / 2.0 + disc).abs().max((tr / 2.0 - disc).abs())
}

fn dfe_correctness() -> Outcome {
    let mut rng = RngStream::new(102, 0);
    let (mut worst_drift, mut worst_r0) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let d = drift(&dfe(&p), &p);
        for (_, x) in d.compartments() {
            worst_drift = worst_drift.max(x.abs());
        }
        worst_r0 = worst_r0.max(rel(r0(&p, p.beta_bar), next_generation_radius(&p)));
    }
    check(
        worst_drift < 1e-12 && worst_r0 < 1e-12,
        format!("100 draws, max |drift(dfe)| {worst_drift:.2e}, closed form vs next-generation r0 rel err {worst_r0:.2e}"),
    )
}

fn ou_exactness() -> Outcome {
    let p = OuParamsF64::new(0.8, 0.6).map_err(|e| e.to_string())?;
    let (z0, dt) = (1.3, 0.25);
    let mut rng = RngStream::new(103, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| ou_step_exact(z0, dt, &p, &mut rng)).collect();
    let ks = ks_normal(&xs, z0 * (-p.theta * dt).exp(), (p.delta * p.delta * (1.0 - (-2.0 * p.theta * dt).exp()) / (2.0 * p.theta)).sqrt());

    let q = OuParamsF64::new(1.0, 0.5).map_err(|e| e.to_string())?;
    let (horizon, step) = (1e4 / q.theta, 0.01 / q.theta);
    let transition = OuTransition::new(&q, step);
    let mut rng = RngStream::new(104, 0);
    let n = (horizon / step).round() as usize;
    let (mut z, mut acc) = (0.0f64, 0.0);
    for _ in 0..n {
        let next = transition.sample(z, &mut rng);
        acc += 0.5 * ((2.0 * z).exp() + (2.0 * next).exp()) * step;
        z = next;
    }
    let avg = acc / horizon;
    let target = (q.delta * q.delta / q.theta).exp();
    let err = rel(avg, target);
    check(
        ks.p_value > 0.01 && err < 0.05,
        format!("KS p = {:.3} on 1e5 draws; e^(2z) time average {avg:.4} vs {target:.4} (rel err {err:.3})", ks.p_value),
    )
}

fn invariant_region() -> Outcome {
    let p = reference(0.3, 1.0);
    let cfg = sim_config(p, 100.0, 1000, 105);
    let (n_max, s0) = (p.pi / p.m, dfe(&p).s);
    let floor = -1e-12 * n_max;
    let results = ensemble_map(&cfg, |_, traj| {
        let mut worst = (0.0f64, 0.0f64, f64::INFINITY, traj.len());
        for s in &traj.states {
            worst.0 = worst.0.max(s.total() / n_max - 1.0);
            worst.1 = worst.1.max(s.s / s0 - 1.0);
            worst.2 = worst.2.min(s.min_compartment());
        }
        worst
    });
    let (mut n_ex, mut s_ex, mut min_c, mut nodes) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY, 0usize);
    for r in results {
        let (a, b, c, n) = r.map_err(|e| e.to_string())?;
        n_ex = n_ex.max(a);
        s_ex = s_ex.max(b);
        min_c = min_c.min(c);
        nodes += n;
    }
    check(
        n_ex <= 1e-6 && s_ex <= 1e-6 && min_c >= floor,
        format!("1000 paths, {nodes} nodes; max N/(Pi/m) - 1 = {n_ex:.2e}, max S/S0 - 1 = {s_ex:.2e}, min compartment {min_c:.2e}"),
    )
}

fn deterministic_regimes() -> Outcome {
    let sub = reference(0.1, 0.0);
    let dt = default_dt(&sub);
    let traj = integrate_deterministic(&sub, seeded_init(&sub), 2000.0, dt).map_err(|e| e.to_string())?;
    let i_end = traj.last().unwrap().i;

    let sup = reference(0.1 * 3.0 / R0_REF, 0.0);
    let r0_sup = r0(&sup, sup.beta_bar);
    let traj = integrate_deterministic(&sup, seeded_init(&sup), 2000.0, dt).map_err(|e| e.to_string())?;
    let eps = PersistenceOptions::default().persist_epsilon_factor * sup.pi / sup.m;
    let tail: Vec<f64> = traj.times.iter().zip(&traj.states).filter(|(t, _)| **t >= 1500.0).map(|(_, s)| s.i).collect();
    let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let i_star = *tail.last().unwrap();
    let drift_rel = (hi - lo) / i_star;
    check(
        i_end < 1e-6 && i_star > eps && drift_rel < 1e-3,
        format!(
            "R0 = {:.4}: I(2000) = {i_end:.2e}; R0 = {r0_sup:.4}: I(2000) = {i_star:.6} > {eps:.0e}, spread over last 25% {drift_rel:.1e}",
            r0(&sub, sub.beta_bar)
        ),
    )
}

fn exponential_extinction() -> Outcome {
    let (mut beta_bar, mut delta) = (0.3, 1.0);
    let mut p = reference(beta_bar, delta);
    let mut halvings = 0;
    while thresholds(&p).map_err(|e| e.to_string())?.regime != Regime::ExtinctionPredicted {
        beta_bar *= 0.5;
        delta *= 0.5;
        halvings += 1;
        p = reference(beta_bar, delta);
        if halvings > 20 {
            return Err("threshold search did not reach ExtinctionPredicted".into());
        }
    }
    let cfg = sim_config(p, 500.0, 200, 106);
    let opts = ExtinctionOptions::default();
    let paths = ensemble_map(&cfg, |_, traj| path_extinction(&traj, &p, opts.fit_fraction))
        .into_iter()
        .map(|r| r.and_then(|x| x))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let v = extinction_verdict_from_paths(paths, &p, &opts).map_err(|e| e.to_string())?;
    check(
        v.passed,
        format!(
            "beta_bar = {beta_bar}, delta = {delta}, r0_e = {:.4}; 200 paths, T = 500: {:.1}% within bound {:.4} + 2 SE (mean slope {:.4})",
            v.r0_e,
            100.0 * v.fraction_passing,
            v.bound,
            v.mean_slope.unwrap_or(f64::NAN)
        ),
    )
}

fn stationary_persistence() -> Outcome {
    let delta = 0.5;
    let target = 2.0;
    let beta_bar = 0.1 * target / (R0_REF * (delta * delta / 16.0f64).exp());
    let p = reference(beta_bar, delta);
    let min_rate = [p.alpha, p.m, p.omega, p.gamma, p.xi, p.sigma, p.eta, p.theta].into_iter().fold(f64::INFINITY, f64::min);
    let horizon = 50.0 / min_rate;
    let ens = simulate_ensemble(&sim_config(p, horizon, 500, 107)).map_err(|e| e.to_string())?;
    let v = persistence_verdict(&ens, &p, &PersistenceOptions::default()).map_err(|e| e.to_string())?;
    check(
        v.r0_s > 1.5 && v.passed,
        format!(
            "r0_s = {:.3}; 500 paths, T = {horizon}: TV(early, late) = {:.4} < {}, {:.1}% of paths average I > {:.0e}",
            v.r0_s,
            v.tv_distance,
            v.tv_threshold,
            100.0 * v.fraction_persistent,
            v.persist_epsilon
        ),
    )
}

fn noise_sweep() -> Outcome {
    let values: Vec<f64> = [0.0, 0.5, 1.0, 1.5].iter().map(|&d| r0_s(&reference(0.1, 0.1).with_noise(1.0, d))).collect();
    check(
        values.windows(2).all(|w| w[1] > w[0]),
        format!("r0_s over delta = 0, 0.5, 1, 1.5: {values:.6?}"),
    )
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let mut bytes = std::fs::read(&path).unwrap();
            if name == "manifest.json" {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text.lines().filter(|l| !l.contains("\"wall_clock_seconds\"")).collect::<Vec<_>>().join("\n").into_bytes();
            }
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let root = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let config = root.path().join("config.json");
    let cfg = serde_json::json!({
        "params": {"Pi": 1.0, "alpha": 0.1, "beta_bar": 0.3, "m": 0.1, "omega": 0.1, "gamma": 0.1, "xi": 0.1,
                   "sigma": 0.1, "eta": 0.1, "k": 0.5, "theta": 1.0, "delta": 0.8},
        "sim": {"horizon": 200.0, "n_paths": 64, "seed": 2024, "paths_written": 16}
    });
    std::fs::write(&config, serde_json::to_string(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let mut compared = 0usize;
    for cmd in ["thresholds", "dfe", "simulate", "persistence", "extinction"] {
        let mut runs = Vec::new();
        for threads in ["1", "8"] {
            let out = root.path().join(format!("{cmd}-{threads}"));
            let o = Command::new(env!("CARGO_BIN_EXE_sveis"))
                .args([cmd, "--threads", threads, "--config"])
                .arg(&config)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            let files = if out.exists() { read_outputs(&out) } else { Vec::new() };
            runs.push((o.status.code(), o.stdout, files));
        }
        if runs[0] != runs[1] {
            return Err(format!("`{cmd}` outputs differ between 1 and 8 threads"));
        }
        compared += runs[0].2.len() + usize::from(!runs[0].1.is_empty());
    }
    Ok(format!("5 subcommands, {compared} outputs byte-identical at --threads 1 and 8 (manifest wall clock excluded)"))
}

fn scheme_cross_validation() -> Outcome {
    let p = reference(0.3, 0.5);
    let terminal_i = |scheme: Scheme, seed: u64| -> Result<Vec<f64>, String> {
        let cfg = SimConfigF64 {
            dt: 1e-3,
            record_stride: usize::MAX / 2,
            scheme,
            ..sim_config(p, 20.0, 10_000, seed)
        };
        ensemble_map(&cfg, |_, traj| traj.last().unwrap().i)
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())
    };
    let (split_mean, split_se) = mean_and_std_err(&terminal_i(Scheme::Splitting, 108)?);
    let (em_mean, em_se) = mean_and_std_err(&terminal_i(Scheme::EulerMaruyama, 109)?);
    let se = (split_se * split_se + em_se * em_se).sqrt();
    let gap = (split_mean - em_mean).abs();
    check(
        gap < 2.0 * se,
        format!("1e4 paths each, dt = 1e-3: E[I(20)] splitting {split_mean:.6}, Euler-Maruyama {em_mean:.6}, |diff| = {gap:.2e} vs 2 SE = {:.2e}", 2.0 * se),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("threshold identities", threshold_identities),
        ("DFE correctness", dfe_correctness),
        ("OU exactness", ou_exactness),
        ("invariant region", invariant_region),
        ("deterministic regimes", deterministic_regimes),
        ("exponential extinction", exponential_extinction),
        ("stationary persistence", stationary_persistence),
        ("noise raises r0_s", noise_sweep),
        ("reproducibility across thread counts", reproducibility),
        ("splitting vs Euler-Maruyama", scheme_cross_validation),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let label = format!("C{}", n + 1);
        if !filter.is_empty() && !filter.iter().any(|f| f == &label) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {label} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {label} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
