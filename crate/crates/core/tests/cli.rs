use std::path::PathBuf;
use std::process::{Command, Output};

fn fredkin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fredkin")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn fidelity_output_is_byte_reproducible() {
    let dir = scratch("repro");
    let run = |file: &str| {
        let path = dir.join(file);
        let out = fredkin(&["fidelity", "--scheme", "both", "--Omega_over_g", "0.1", "--output", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    let text = String::from_utf8(a.clone()).unwrap();
    // the header embeds the output path, which differs between the runs
    let strip = |bytes: &[u8]| String::from_utf8(bytes.to_vec()).unwrap().lines().filter(|l| !l.starts_with("# output")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    assert!(text.lines().any(|l| l.starts_with("# J_over_g")));
    assert!(text.contains("param,scheme,drive,fidelity,leakage,trace_drift,seconds,error"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn sweep_prints_to_stdout_without_output() {
    let out = fredkin(&[
        "sweep", "--scheme", "resonant", "--sweep_param", "Omega_over_g", "--sweep_from", "0.1", "--sweep_to", "0.2", "--sweep_points", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("param")).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.15,resonant,"));
}

#[test]
fn populations_write_one_file_per_input() {
    let dir = scratch("populations");
    let stem = dir.join("res.csv");
    let out = fredkin(&["populations", "--scheme", "resonant", "--Omega_over_g", "0.2", "--samples", "20", "--output", stem.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for q in 0..8 {
        let text = std::fs::read_to_string(dir.join(format!("res_q{q}.csv"))).unwrap();
        assert!(text.contains("t_in_invg,p_q0,p_q1,p_q2,p_q3,p_q4,p_q5,p_q6,p_q7"));
    }
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = scratch("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# resonant point\nscheme = dispersive\nOmega_over_g = 0.1\n").unwrap();
    let out = fredkin(&["fidelity", "--config", cfg.to_str().unwrap(), "--scheme", "resonant"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(",resonant,0.1,"));
    assert!(!text.contains("dispersive,"));
}

#[test]
fn invalid_values_exit_with_the_field_name() {
    for (flag, value, field) in [
        ("--J_over_g", "-1", "J_over_g"),
        ("--kappa_over_g", "-0.1", "kappa_over_g"),
        ("--fock_cap", "0", "fock_cap"),
        ("--scheme", "adiabatic", "scheme"),
        ("--pulse", "square", "pulse"),
    ] {
        let out = fredkin(&["fidelity", flag, value]);
        assert_eq!(out.status.code(), Some(2), "{flag}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(&format!("field={field}")), "{flag}: {err}");
    }
    let dir = scratch("unknown");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "omega = 0.1\n").unwrap();
    let out = fredkin(&["fidelity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("field=omega"));
}

#[test]
fn presets_are_listed() {
    let out = fredkin(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("toroidal") && text.contains("nanocavity"));
}
