//! End-to-end checks of the binary: exit codes, output determinism, and
//! the CSV contract, driven through real process invocations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hcnsim"));
    c.env_remove("HCNSIM_MASTER_SEED");
    c
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const DENSE: &str = r#"
[geometry]
area_side_m = 60.0
bs_density_per_km2 = 15000.0

[candidates]
k = 2

[sweep]
se_start = 0.5
se_stop = 1.5
se_step = 0.5
drops_per_point = 5
master_seed = 11
schemes = ["proposed_precise", "proposed_approx", "all_access_uniform"]
csi = ["long"]
pa = ["tpa", "ipa"]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn assert_status(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn solve_is_byte_deterministic() {
    let dir = tmpdir("solve-det");
    let cfg = write_config(&dir, DENSE);
    let run = || {
        bin()
            .args(["--config", cfg.to_str().unwrap(), "solve", "--drop-seed", "7"])
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert_status(&a, 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("delivered_rate"), "{text}");
}

#[test]
fn sweep_outputs_are_identical_across_reruns() {
    let dir = tmpdir("sweep-det");
    let cfg = write_config(&dir, DENSE);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let o = bin()
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "sweep",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_status(&o, 0);
    }
    for name in ["energy_vs_se.csv", "duration_vs_se.csv", "pa_compare.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
    let header = std::fs::read_to_string(out_a.join("energy_vs_se.csv")).unwrap();
    assert!(header
        .starts_with("se,scheme,csi,pa,mean_energy_mJ,mean_t_star_ms,infeasible_frac,drops\n"));
}

#[test]
fn master_seed_env_override_matches_config_seed() {
    let dir = tmpdir("seed-env");
    let cfg_11 = write_config(&dir, DENSE);
    let cfg_99 = dir.join("config99.toml");
    std::fs::write(&cfg_99, DENSE.replace("master_seed = 11", "master_seed = 99")).unwrap();

    let out_env = dir.join("env");
    let out_cfg = dir.join("cfg");
    let o = bin()
        .args([
            "--config",
            cfg_11.to_str().unwrap(),
            "sweep",
            "--out",
            out_env.to_str().unwrap(),
        ])
        .env("HCNSIM_MASTER_SEED", "99")
        .output()
        .unwrap();
    assert_status(&o, 0);
    let o = bin()
        .args([
            "--config",
            cfg_99.to_str().unwrap(),
            "sweep",
            "--out",
            out_cfg.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&o, 0);
    let a = std::fs::read(out_env.join("energy_vs_se.csv")).unwrap();
    let b = std::fs::read(out_cfg.join("energy_vs_se.csv")).unwrap();
    assert_eq!(a, b);

    // And a different seed changes the numbers.
    let base = std::fs::read(out_cfg.join("energy_vs_se.csv")).unwrap();
    let out_11 = dir.join("eleven");
    let o = bin()
        .args([
            "--config",
            cfg_11.to_str().unwrap(),
            "sweep",
            "--out",
            out_11.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&o, 0);
    let eleven = std::fs::read(out_11.join("energy_vs_se.csv")).unwrap();
    assert_ne!(base, eleven);
}

#[test]
fn svg_flag_writes_charts() {
    let dir = tmpdir("sweep-svg");
    let cfg = write_config(&dir, DENSE);
    let out = dir.join("svg");
    let o = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "sweep",
            "--svg",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_status(&o, 0);
    let svg = std::fs::read_to_string(out.join("energy_vs_se.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
}

#[test]
fn verify_passes_and_rejects_zero_drops() {
    let dir = tmpdir("verify");
    let cfg = write_config(&dir, DENSE);
    let o = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "verify",
            "--drops",
            "6",
            "--force-split-oracle",
        ])
        .output()
        .unwrap();
    assert_status(&o, 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("verify: PASS"), "{text}");

    let o = bin()
        .args(["--config", cfg.to_str().unwrap(), "verify", "--drops", "0"])
        .output()
        .unwrap();
    assert_status(&o, 2);
}

#[test]
fn broken_config_exits_two() {
    let dir = tmpdir("badcfg");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[radio]\nnot_a_field = 1\n").unwrap();
    let o = bin()
        .args(["--config", cfg.to_str().unwrap(), "solve"])
        .output()
        .unwrap();
    assert_status(&o, 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not_a_field"));
}

#[test]
fn unreachable_demand_exits_three() {
    let dir = tmpdir("infeasible");
    let cfg = write_config(
        &dir,
        "[geometry]\narea_side_m = 60.0\nbs_density_per_km2 = 15000.0\n\n[candidates]\nk = 2\n\n[bs]\np_max_dbm = -100.0\n",
    );
    let o = bin()
        .args(["--config", cfg.to_str().unwrap(), "solve"])
        .output()
        .unwrap();
    assert_status(&o, 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ceiling"));
}
