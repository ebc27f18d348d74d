use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cvidm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvidm"))
        .args(args)
        .env_remove("CVIDM_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const PULSE: &str = "[perturbation]\ntarget = 0\nat = 1.0\nkind = { type = \"velocity_pulse\", delta = -0.5 }\n";

#[test]
fn accel_prints_both_terms() {
    let o = cvidm(&[
        "--set",
        "connectivity.kv=0.5",
        "--set",
        "connectivity.ka=0.2",
        "--set",
        "connectivity.weights={scheme=\"uniform_constant\",value=1.0}",
        "accel",
        "--gap",
        "40",
        "--speed",
        "19",
        "--class",
        "C",
        "--neighbor",
        "77,20,0.3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cv: 0.560000000"), "{}", stdout(&o));

    let o = cvidm(&["accel", "--gap", "40", "--speed", "19", "--neighbor", "77,20,0.3"]);
    assert!(stdout(&o).contains("cv: 0.000000000"));
}

#[test]
fn equilibrium_flags_speeds_without_equilibrium() {
    let o = cvidm(&["equilibrium", "--speed", "0,20,33.3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "v_e,s_e\n0.000000000,2.000000000\n20.000000000,36.454334048\n33.300000000,no-equilibrium\n"
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cvidm(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cvidm(&["--set", "idm.typo=1", "criterion"]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "[idm]\nmax_acceleration = \"fast\"\n");
    assert_eq!(cvidm(&["-c", &bad, "criterion"]).status.code(), Some(1));
    assert_eq!(cvidm(&["-c", "/nonexistent/cvidm.toml", "criterion"]).status.code(), Some(1));

    let o = cvidm(&["--set", "idm.jam_distance=-2", "criterion"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("jam_distance"));
    assert_eq!(cvidm(&["accel", "--gap", "-1", "--speed", "20"]).status.code(), Some(2));
}

#[test]
fn config_path_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", "[scenario]\nequilibrium_speed = 0.0\n");
    let o = Command::new(env!("CARGO_BIN_EXE_cvidm"))
        .args(["criterion", "--neighbors", "0"])
        .env("CVIDM_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let with_env = stdout(&o);
    let default = stdout(&cvidm(&["criterion", "--neighbors", "0"]));
    assert_ne!(with_env, default);
}

#[test]
fn map_writes_deterministic_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "map.toml",
        "[connectivity]\nkv = 0.02\nka = 0.02\n[map]\nneighbors = [1, 2, 4]\n",
    );
    let mut csvs = Vec::new();
    for run in 0..2 {
        let csv = dir.path().join(format!("map{run}.csv"));
        let svg = dir.path().join(format!("map{run}.svg"));
        let o = cvidm(&[
            "-c",
            &cfg,
            "map",
            "-o",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let areas: Vec<f64> = stdout(&o)
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(areas.len(), 3);
        assert!(areas.windows(2).all(|w| w[1] >= w[0]), "{areas:?}");
        let svg = fs::read_to_string(svg).unwrap();
        assert!(svg.contains("T_d (s)") && svg.contains("M = 4"));
        csvs.push(fs::read(csv).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs[0].clone()).unwrap();
    assert!(text.starts_with("T_d,a_m,lhs,verdict\n"));
    assert_eq!(text.lines().count(), 2501);
}

#[test]
fn one_point_map() {
    let o = cvidm(&[
        "--set",
        "map.max_acceleration={min=2.5,max=2.5,count=1}",
        "--set",
        "map.time_headway={min=2.5,max=2.5,count=1}",
        "map",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().ends_with(",stable"));
    let empty = cvidm(&["--set", "map.time_headway={min=0.5,max=2.5,count=0}", "map"]);
    assert_eq!(empty.status.code(), Some(1));
}

#[test]
fn simulate_at_equilibrium_has_zero_acceleration() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("traj.csv");
    let o = cvidm(&[
        "--set",
        "sim.duration=20",
        "--set",
        "sim.sample_stride=20",
        "simulate",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("collision: none"));
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,vehicle,class,x,v,a,gap"));
    for line in lines {
        let a: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!(a.abs() < 1e-9, "{line}");
    }
}

#[test]
fn simulate_classifies_growth_and_reports_collisions() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "pulse.toml", PULSE);
    let run = |extra: &[&str]| {
        let mut args = vec!["-c", cfg.as_str(), "--set", "connectivity.max_neighbors=0"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["simulate", "-o", "/dev/null"]);
        cvidm(&args)
    };
    let stable = run(&["--set", "idm.max_acceleration=2.5", "--set", "idm.safe_time_headway=2.5"]);
    assert_eq!(stable.status.code(), Some(0));
    assert!(stdout(&stable).contains("growth: decaying"));

    let unstable = run(&["--set", "idm.max_acceleration=0.3", "--set", "idm.safe_time_headway=0.5"]);
    assert_eq!(unstable.status.code(), Some(3));
    assert!(stdout(&unstable).contains("growth: growing"));
    assert!(stdout(&unstable).contains("collision: t="));
}

#[test]
fn verify_exit_status_follows_agreement() {
    let dir = TempDir::new().unwrap();
    let agree = write(
        dir.path(),
        "agree.toml",
        "[verify]\nneighbors = [0]\npoints = [[2.5, 2.5], [0.3, 0.5]]\n",
    );
    let o = cvidm(&["-c", &agree, "verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("agreement: 2/2"));

    let disagree = write(
        dir.path(),
        "disagree.toml",
        "[verify]\nneighbors = [0]\npoints = [[2.5, 1.5]]\n",
    );
    assert_eq!(cvidm(&["-c", &disagree, "verify"]).status.code(), Some(4));

    let empty = write(dir.path(), "empty.toml", "[verify]\npoints = []\n");
    assert_eq!(cvidm(&["-c", &empty, "verify"]).status.code(), Some(1));
}
