use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stokes(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes")).args(args).current_dir(dir).output().expect("run stokes")
}

fn preset(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)).unwrap()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.toml"), "").unwrap();
    let out = stokes(&["mild", "--config", "empty.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    fs::write(dir.path().join("typo.toml"), preset("mild.toml").replace("n_steps", "nsteps")).unwrap();
    assert_eq!(stokes(&["mild", "--config", "typo.toml"], dir.path()).status.code(), Some(2));

    fs::write(dir.path().join("kind.toml"), preset("mild.toml")).unwrap();
    assert_eq!(stokes(&["siop", "--config", "kind.toml"], dir.path()).status.code(), Some(2));

    let no_picard: String = preset("mild.toml").lines().filter(|l| !l.starts_with("picard")).collect::<Vec<_>>().join("\n");
    fs::write(dir.path().join("nopicard.toml"), no_picard).unwrap();
    assert_eq!(stokes(&["mild", "--config", "nopicard.toml"], dir.path()).status.code(), Some(2));

    assert_eq!(stokes(&["verify", "--estimate", "9.9", "--out", "o"], dir.path()).status.code(), Some(2));
}

#[test]
fn zero_initial_data_converges_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("mild.toml").replace("amplitude = 0.05", "amplitude = 0.0").replace("nz = 24", "nz = 8").replace("nx = 32", "nx = 8").replace("ny = 32", "ny = 8");
    fs::write(dir.path().join("zero.toml"), cfg).unwrap();
    let out = stokes(&["mild", "--config", "zero.toml", "--out", "z"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("z/picard.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(fs::read_to_string(dir.path().join("z/summary.txt")).unwrap().contains("iterations=1"));
    assert!(dir.path().join("z/u.hsf").exists());
}

#[test]
fn baked_cache_serves_kernel_queries() {
    let dir = tempfile::tempdir().unwrap();
    let bake = preset("bake-cache.toml").replace("nx = 8", "nx = 4").replace("ny = 8", "ny = 4").replace("nz = 8", "nz = 2");
    fs::write(dir.path().join("bake.toml"), bake).unwrap();
    let out = stokes(&["bake-cache", "--config", "bake.toml", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cache = dir.path().join("c/kernel.hsk");
    assert_eq!(&fs::read(&cache).unwrap()[..4], b"HSK1");

    // node (0.5, -0.5, 0.5) of the 4x4x2 grid on [-1, 1)² x [0, 1], plus one off-grid query
    let kernels = format!(
        "[run]\nkind = \"kernels\"\nseed = 1\nout = \"k\"\n[tolerance]\nrel = 1e-9\nabs = 1e-13\n[kernels]\ncache = {:?}\nqueries = [[0.5, -0.5, 0.5, 0.0, 0.0, 0.5, 0.1], [0.3, 0.1, 0.2, 0.0, 0.0, 0.5, 0.1]]\n",
        cache.display().to_string()
    );
    fs::write(dir.path().join("k.toml"), kernels).unwrap();
    let out = stokes(&["kernels", "--config", "k.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("k/kernels.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].split(',').count(), 8 + 9 + 27);
    assert!(rows[1].contains(",cache,") && rows[2].contains(",direct,"));
}

#[test]
fn verify_csvs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for o in ["a", "b"] {
        let out = stokes(&["verify", "--estimate", "2.2", "--estimate", "4.x-Gamma", "--seed", "5", "--out", o], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for n in names {
        assert_eq!(fs::read(dir.path().join("a").join(&n)).unwrap(), fs::read(dir.path().join("b").join(&n)).unwrap(), "{n:?}");
    }
    let c = stokes(&["verify", "--estimate", "2.2", "--seed", "6", "--out", "c"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    let f = "fit_2.2_a_000_g_000.csv";
    assert_ne!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("c").join(f)).unwrap());
}
