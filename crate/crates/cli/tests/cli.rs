use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sivdicke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sivdicke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, cmd: &str, sets: &[&str]) -> Output {
    let mut args = vec![cmd.to_string(), "--out".into(), dir.display().to_string()];
    for s in sets {
        args.push("--set".into());
        args.push(s.to_string());
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    sivdicke(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

#[test]
fn evolve_writes_header_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "evolve", &["n_spins=3", "output_points=20", "t_end_gamma=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "gamma_t,sx,sy,sz,s2,inv_xi_r2,inv_xi_s2,trace_err,min_eig"
    );
    assert_eq!(text.lines().count(), 21);
    assert!(!text.contains('\r'));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "evolve");
    assert_eq!(m["config"]["n_spins"], "3");
    assert_eq!(m["runs"][0]["basis"], "dicke");
}

#[test]
fn evolve_is_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let sets = ["n_spins=4", "output_points=40", "t_end_gamma=5", "gamma_dephase_ratio=0.02"];
    assert!(run_in(a.path(), "evolve", &sets).status.success());
    assert!(run_in(b.path(), "evolve", &sets).status.success());
    let x = std::fs::read(a.path().join("trajectory.csv")).unwrap();
    let y = std::fs::read(b.path().join("trajectory.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn no_squeezing_without_bias() {
    // r = 0 from the all-down state: nothing moves and the witness stays at one.
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "evolve",
        &["n_spins=2", "r=0", "initial_m_s=-1", "output_points=30", "t_end_gamma=5"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for v in column(&dir.path().join("trajectory.csv"), "inv_xi_r2") {
        let x: f64 = v.parse().unwrap();
        assert!((x - 1.0).abs() < 1e-12, "{x}");
    }
}

#[test]
fn steady_two_spins() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "steady", &["n_spins=2", "r=0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&dir.path().join("steady.json"));
    let x = s["inv_xi_r2"].as_f64().unwrap();
    assert!((x - 1.3800).abs() < 1e-4, "{x}");
    assert_eq!(s["solver_used"], "nullspace");
    assert_eq!(s["kernel_dim"], 1);
    assert_eq!(s["cross_check"]["status"], "agreed");
    assert!(s["purity"].as_f64().unwrap() > 1.0 - 1e-9);
}

#[test]
fn steady_dumps_density_matrix() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "steady", &["n_spins=3", "dump_rho=true", "cross_check=false"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let re = column(&dir.path().join("rho.csv"), "re");
    assert_eq!(re.len(), 16);
    let trace: f64 = [0, 5, 10, 15].iter().map(|&i| re[i].parse::<f64>().unwrap()).sum();
    assert!((trace - 1.0).abs() < 1e-10);
}

#[test]
fn sweep_sequential_and_parallel_agree() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let common = ["n_spins=4", "count=7", "stop=1.5", "gamma_dephase_ratio=0.01"];
    let seq: Vec<&str> = common.iter().copied().chain(["execution=sequential"]).collect();
    let par: Vec<&str> = common.iter().copied().chain(["execution=parallel", "threads=3"]).collect();
    assert!(run_in(a.path(), "sweep", &seq).status.success());
    assert!(run_in(b.path(), "sweep", &par).status.success());
    let x = std::fs::read(a.path().join("sweep.csv")).unwrap();
    let y = std::fs::read(b.path().join("sweep.csv")).unwrap();
    assert_eq!(x, y);
    let axis: Vec<f64> = column(&a.path().join("sweep.csv"), "axis_value")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(axis.len(), 7);
    assert!(axis.windows(2).all(|w| w[0] < w[1]));
    assert!(column(&a.path().join("sweep.csv"), "status").iter().all(|s| s == "ok"));
}

#[test]
fn sweep_over_ensemble_size() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "sweep", &["axis=n_spins", "start=2", "stop=5", "count=4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let n = column(&dir.path().join("sweep.csv"), "n_spins");
    assert_eq!(n, ["2", "3", "4", "5"]);
}

#[test]
fn kernel_lattice_and_quarter_wave() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "kernel", &["n_spins=4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("kernel.json"))["dicke_reducible"], true);
    assert_eq!(column(&dir.path().join("kernel.csv"), "re").len(), 16);

    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "kernel", &["placement=explicit", "positions=0,0.25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let k = json(&dir.path().join("kernel.json"));
    assert_eq!(k["dicke_reducible"], false);
    assert!((k["max_imag"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn siv_reference_splitting() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "siv", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&dir.path().join("siv.json"));
    assert!((s["splitting_ghz"].as_f64().unwrap() - 46.0).abs() < 1e-6);
    let e = column(&dir.path().join("levels.csv"), "energy_ghz");
    assert_eq!(e.len(), 4);
    assert_eq!(e[0].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn couple_reports_chain_and_refuses_nonadiabatic_drive() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "couple", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&dir.path().join("couple.json"));
    assert_eq!(c["adiabaticity"], "valid");
    assert_eq!(c["comparisons"].as_array().unwrap().len(), 3);
    assert!(c["comparisons"].as_array().unwrap().iter().all(|x| x["order_of_magnitude_only"] == true));
    let r = c["r"].as_f64().unwrap();
    assert!(r > 0.0 && r < 1.0);

    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "couple", &["omega_1_mhz=50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("allow_nonadiabatic"));
    let o = run_in(dir.path(), "couple", &["omega_2_mhz=50", "allow_nonadiabatic=true"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn drive_keys_set_r() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "steady", &["n_spins=2", "omega_1_mhz=2", "omega_2_mhz=10", "cross_check=false"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&dir.path().join("manifest.json"));
    let r = m["runs"][0]["effective"]["r"].as_f64().unwrap();
    assert!((r - 0.2027).abs() < 1e-3, "{r}");

    let o = run_in(dir.path(), "steady", &["r=0.3", "omega_1_mhz=2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# comment\nn_spins = 3\nr = abc\n").unwrap();
    let out = dir.path().join("out");
    let o = sivdicke(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("run.cfg:3"), "{e}");
    assert!(e.contains("`r`"), "{e}");

    std::fs::write(&cfg, "n_spins = 3\nn_spin = 4\n").unwrap();
    let o = sivdicke(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.cfg:2"), "{}", stderr(&o));

    std::fs::write(&cfg, "n_spins = 3\nn_spins = 4\n").unwrap();
    let o = sivdicke(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn overrides_beat_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n_spins = 3\noutput_points = 10\nt_end_gamma = 1\n").unwrap();
    let out = dir.path().join("out");
    let o = sivdicke(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "n_spins=5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&out.join("manifest.json"))["runs"][0]["n_spins"], 5);
}

#[test]
fn invalid_values_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run_in(dir.path(), "evolve", &["n_spins=0"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), "evolve", &["r=-1"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), "evolve", &["bogus=1"]).status.code(), Some(2));
    assert_eq!(sivdicke(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn full_basis_guard_exits_four() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "evolve", &["n_spins=13", "basis=full"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn dephasing_presets_require_ratios() {
    let dir = TempDir::new().unwrap();
    for cmd in ["fig7", "fig8"] {
        let o = run_in(dir.path(), cmd, &[]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("gamma_dephase_ratios"));
    }
}

#[test]
fn presets_write_named_files() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "fig4", &["n_values=2,3", "output_points=10", "t_end_gamma=1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("fig4_n2.csv").exists());
    assert!(dir.path().join("fig4_n3.csv").exists());

    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "fig5", &["n_spins=2", "output_points=10", "t_end_gamma=1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for two_m in ["-2", "0", "2"] {
        assert!(dir.path().join(format!("fig5_2m{two_m}.csv")).exists());
    }

    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "fig6", &["n_values=2,3", "count=5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(column(&dir.path().join("fig6.csv"), "n_spins").len(), 10);

    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "fig7",
        &["n_spins=2", "gamma_dephase_ratios=0,0.05", "output_points=10", "t_end_gamma=1"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("fig7_gd0.csv").exists());
    assert!(dir.path().join("fig7_gd0.05.csv").exists());
    assert_eq!(json(&dir.path().join("manifest.json"))["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn fig3_witness_ordering() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "fig3", &["output_points=50", "t_end_gamma=10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("fig3.csv");
    let xr = column(&path, "inv_xi_r2");
    let xs = column(&path, "inv_xi_s2");
    for (a, b) in xr.iter().zip(&xs) {
        if a.is_empty() {
            continue;
        }
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!(b >= a - 1e-9, "{b} < {a}");
    }
}
