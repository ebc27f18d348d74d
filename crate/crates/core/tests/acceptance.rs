//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cvidm::commands::{cmd_map, cmd_simulate};
use cvidm::config::{RoadKind, RunConfig};
use cvidm::map::{region_area, stability_map, GridSpec};
use cvidm::model::{equilibrium_gap, idm_acceleration, EquilibriumState};
use cvidm::sim::{
    measure_growth, run, PerturbationKind, PerturbationSpec, PlatoonComposition, ScenarioSpec,
    SimConfig,
};
use cvidm::stability::{analytic_partials, finite_difference_partials, DEFAULT_FD_STEP};
use cvidm::verify::{verify, VerifySpec};
use cvidm::{ConnectivityParams, IdmParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn equilibrium_identity() -> Outcome {
    const TOL: f64 = 1e-8;
    let p = IdmParams::default();
    let mut worst = 0.0_f64;
    for v in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
        let s = equilibrium_gap(v, &p).expect("equilibrium exists");
        let a = idm_acceleration(s, v, 0.0, &p).expect("finite acceleration");
        worst = worst.max(a.abs());
    }
    outcome(worst <= TOL, format!("max |a(s_e, v_e, 0)| = {worst:.3e} (tol {TOL:e})"))
}

fn partial_derivatives() -> Outcome {
    const TOL: f64 = 1e-6;
    let p = IdmParams::default();
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let v = 2.0 + 28.0 * i as f64 / 9.0;
        let eq = EquilibriumState::at_speed(v, &p).expect("equilibrium exists");
        let a = analytic_partials(&p, &eq);
        let fd = finite_difference_partials(&p, &eq, DEFAULT_FD_STEP).expect("fd step fits");
        for (x, y) in [(a.g1, fd.g1), (a.g2, fd.g2), (a.g3, fd.g3)] {
            worst = worst.max(((x - y) / x).abs());
        }
    }
    outcome(worst <= TOL, format!("max relative deviation {worst:.3e} over 10 speeds in [2, 30] (tol {TOL:e})"))
}

fn idm_reduction() -> Outcome {
    let spec = GridSpec {
        connectivity: ConnectivityParams {
            kv: 0.0,
            ka: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let m0 = stability_map(&spec.with_neighbors(0)).expect("map");
    let m10 = stability_map(&spec.with_neighbors(10)).expect("map");
    let differing = m0.cells.iter().zip(&m10.cells).filter(|(a, b)| a != b).count();
    outcome(
        m0.cells.len() == 2500 && differing == 0,
        format!("{differing} of {} cells differ between M = 0 and M = 10", m0.cells.len()),
    )
}

fn criterion_vs_simulation() -> Outcome {
    let spec = VerifySpec::default();
    let report = match verify(&spec) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("verification failed to run: {e}")),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for &m in &spec.neighbor_counts {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.neighbors == m).collect();
        let retained: Vec<_> = rows.iter().filter(|r| r.retained).collect();
        let agree = retained.iter().filter(|r| r.agrees()).count();
        pass &= retained.len() >= 20 && agree == retained.len();
        parts.push(format!("M={m}: {agree}/{} retained agree", retained.len()));
        for r in retained.iter().filter(|r| !r.agrees()) {
            parts.push(format!(
                "  (a_m {:.2}, T_d {:.2}) lhs {:+.4} {} vs {} (ratio {:.3})",
                r.max_acceleration, r.time_headway, r.lhs, r.analytic, r.simulated, r.ratio
            ));
        }
    }
    outcome(pass, format!("need 100% with >= 20 retained per M; {}", parts.join("\n")))
}

fn area_grows_with_neighbors() -> Outcome {
    let spec = GridSpec::default();
    let mut areas = Vec::new();
    for m in [1, 2, 4, 8] {
        let grid = stability_map(&spec.with_neighbors(m)).expect("map");
        areas.push(region_area(&grid).expect("area defined"));
    }
    let inc: Vec<f64> = areas.windows(2).map(|w| w[1] - w[0]).collect();
    let non_decreasing = inc.iter().all(|&d| d >= 0.0);
    let shrinking = inc.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        non_decreasing && shrinking,
        format!("areas for M = 1, 2, 4, 8: {areas:?}; increments {inc:?}"),
    )
}

fn fixed_point_under_delay() -> Outcome {
    const TOL: f64 = 1e-6;
    let scenario = ScenarioSpec::ring(
        PlatoonComposition::new("CHH", 30).expect("pattern"),
        20.0,
        IdmParams::default(),
        ConnectivityParams::default(),
    )
    .expect("scenario");
    let traj = run(&scenario, &SimConfig::default()).expect("run");
    let s_e = scenario.initial.gap;
    let drift = traj
        .samples
        .iter()
        .flatten()
        .filter_map(|s| s.gap)
        .map(|g| (g - s_e).abs())
        .fold(0.0, f64::max);
    outcome(
        traj.collision().is_none() && drift < TOL,
        format!("max gap drift {drift:.3e} m over 300 s (tol {TOL:e})"),
    )
}

/// Homogeneous connected platoon at the default parameter set, M = 2,
/// T′ = 1 s, open road. A step of 0.01 s keeps first-order integration error
/// below the decay between neighbouring vehicles.
fn upstream_decay() -> Outcome {
    const BEYOND: usize = 5;
    let idm = IdmParams::default();
    let connectivity = ConnectivityParams::default();
    let target = 1;
    let scenario = ScenarioSpec::open(
        PlatoonComposition::new("C", 30).expect("pattern"),
        20.0,
        idm,
        connectivity,
    )
    .expect("scenario")
    .with_perturbation(PerturbationSpec {
        target,
        kind: PerturbationKind::VelocityPulse { delta: -0.5 },
        at: 1.0,
    });
    let verdict = cvidm::stability::classify_point(&idm, &connectivity, 20.0, 1, 2).expect("criterion");
    let config = SimConfig {
        dt: 0.01,
        ..Default::default()
    };
    let traj = run(&scenario, &config).expect("run");
    let report = measure_growth(&traj, &scenario.initial).expect("growth");
    let tail = &report.peak_deviation[target + BEYOND..];
    let rises = tail.windows(2).filter(|w| w[1] > w[0]).count();
    outcome(
        verdict.stable && report.collision.is_none() && rises == 0,
        format!(
            "lhs {:+.4}; peak gap deviation {:.4e} m at vehicle {} -> {:.4e} m at the tail, {rises} increases",
            verdict.lhs,
            tail[0],
            target + BEYOND,
            tail[tail.len() - 1]
        ),
    )
}

fn map_csv(cfg: &RunConfig) -> Vec<u8> {
    let mut csv = Vec::new();
    cmd_map(cfg, &mut csv, None, &mut Vec::new()).expect("map command");
    csv
}

fn simulate_csv(cfg: &RunConfig) -> Vec<u8> {
    let mut csv = Vec::new();
    cmd_simulate(cfg, &mut csv, &mut Vec::new()).expect("simulate command");
    csv
}

fn determinism() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.map.neighbors = vec![2, 0];
    cfg.scenario.road = RoadKind::Ring;
    cfg.sim.duration = 60.0;
    cfg.perturbation = Some(PerturbationSpec {
        target: 0,
        kind: PerturbationKind::VelocityPulse { delta: -0.5 },
        at: 1.0,
    });
    let pool = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
    };
    let map_a = map_csv(&cfg);
    let map_b = pool(1).install(|| map_csv(&cfg));
    let map_c = pool(7).install(|| map_csv(&cfg));
    let sim_a = simulate_csv(&cfg);
    let sim_b = pool(3).install(|| simulate_csv(&cfg));
    let same_map = map_a == map_b && map_a == map_c;
    let same_sim = sim_a == sim_b;
    outcome(
        same_map && same_sim && !map_a.is_empty() && !sim_a.is_empty(),
        format!(
            "map CSV identical across 3 runs: {same_map} ({} bytes); trajectory CSV identical across 2 runs: {same_sim} ({} bytes)",
            map_a.len(),
            sim_a.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("equilibrium identity", equilibrium_identity),
        ("partial derivatives vs finite differences", partial_derivatives),
        ("IDM reduction with zero gains", idm_reduction),
        ("criterion vs simulation agreement", criterion_vs_simulation),
        ("stable area vs connected predecessors", area_grows_with_neighbors),
        ("equilibrium fixed point under delay", fixed_point_under_delay),
        ("upstream perturbation decay", upstream_decay),
        ("byte-identical CSV output", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {} {name} ({:.1} s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
