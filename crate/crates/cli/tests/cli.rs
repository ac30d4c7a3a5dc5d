use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resolvent-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn missing_config_is_a_usage_error() {
    let d = scratch("missing");
    let o = run_in(&d, &["verify", "--config", "nope.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let o = run_in(&d, &["run", "nope.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let d = scratch("args");
    assert_eq!(
        run_in(&d, &["verify", "--filter", "C42"]).status.code(),
        Some(2)
    );
    assert_eq!(run_in(&d, &["frobnicate"]).status.code(), Some(2));
    let o = bin()
        .current_dir(&d)
        .env("RESOLVENT_LAB_THREADS", "zero")
        .args(["verify", "--filter", "C3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn config_errors_exit_two() {
    let d = scratch("config");
    for (name, body) in [
        ("empty_sweep.toml", "experiment = \"jean\"\nsweep.r = []\n"),
        ("unknown_key.toml", "experiment = \"jean\"\ntrails = 3\n"),
        ("unknown_id.toml", "experiment = \"jeans\"\n"),
    ] {
        std::fs::write(d.join(name), body).unwrap();
        let o = run_in(&d, &["run", name]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", text(&o));
    }
}

#[test]
fn wrong_window_fails_the_named_criterion() {
    let d = scratch("window");
    std::fs::write(
        d.join("v.toml"),
        "output = \"out\"\n[jean]\nsweep.r = [16.0, 64.0]\ntrials = 5\nwindow.stability = 0.5\n",
    )
    .unwrap();
    let o = run_in(&d, &["verify", "--config", "v.toml", "--filter", "C6"]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("C6   FAIL"), "{out}");
    let summary = std::fs::read_to_string(d.join("out/summary.json")).unwrap();
    assert!(summary.contains("\"passed\": false"));
}

#[test]
fn passing_filter_exits_zero() {
    let d = scratch("pass");
    let o = run_in(&d, &["verify", "--filter", "C3", "--output", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(d.join("out/holder/report.json").exists());
    assert!(d.join("out/holder/rows.csv").exists());
}

#[test]
fn wraparound_is_refused_unless_allowed() {
    let d = scratch("wrap");
    // eps below 4 lambda / L with no compactly supported inputs
    std::fs::write(
        d.join("c.toml"),
        "experiment = \"free-scaling\"\noracle.count = 1\ngrid.n = 32\ngrid.l = 8.0\nsweep.lambda = [1.0, 2.0, 4.0]\neps.eta = 0.05\ntrials = 1\niterations = 2\n",
    )
    .unwrap();
    let o = run_in(&d, &["run", "c.toml"]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("--allow-wraparound"));
    let o = run_in(&d, &["run", "c.toml", "--allow-wraparound"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
}

#[test]
fn run_is_reproducible() {
    let d = scratch("repro");
    let cfg = "experiment = \"jean\"\nseed = 11\nsweep.r = [16.0, 64.0]\ntrials = 4\n";
    std::fs::write(d.join("a.toml"), format!("{cfg}output = \"a\"\n")).unwrap();
    std::fs::write(d.join("b.toml"), format!("{cfg}output = \"b\"\n")).unwrap();
    for f in ["a.toml", "b.toml"] {
        let o = run_in(&d, &["run", f]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    for file in ["report.json", "rows.csv", "plot.svg"] {
        let a = std::fs::read(d.join("a").join(file)).unwrap();
        let b = std::fs::read(d.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let d = scratch("threads");
    let cfg = "experiment = \"endpoint\"\nfamily.count = 2\noracle.points = 2\n";
    for (name, threads) in [("one", "1"), ("two", "2")] {
        std::fs::write(
            d.join(format!("{name}.toml")),
            format!("{cfg}output = \"{name}\"\n"),
        )
        .unwrap();
        let o = bin()
            .current_dir(&d)
            .env("RESOLVENT_LAB_THREADS", threads)
            .args(["run", &format!("{name}.toml")])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    let a = std::fs::read(d.join("one/report.json")).unwrap();
    let b = std::fs::read(d.join("two/report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn plot_command_is_deterministic_and_rejects_short_series() {
    let d = scratch("plot");
    let report = r#"{"experiment":"demo","seed":1,"parameters":{},"x_label":"lambda","y_label":"norm",
        "rows":[],"fits":[],"verdicts":[],"notes":[],
        "series":[{"label":"measured","points":[[1,0.2],[2,0.14],[4,0.1]]},
                  {"label":"reference","points":[[1,0.2],[4,0.1]]}]}"#;
    std::fs::write(d.join("r.json"), report).unwrap();
    for out in ["a.svg", "b.svg"] {
        let o = run_in(&d, &["plot", "r.json", out]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    let a = std::fs::read(d.join("a.svg")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.svg")).unwrap());
    assert!(String::from_utf8(a).unwrap().contains("measured (slope"));

    let short = report.replace("[[1,0.2],[4,0.1]]", "[[1,0.2]]");
    std::fs::write(d.join("short.json"), short).unwrap();
    let o = run_in(&d, &["plot", "short.json", "c.svg"]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(!d.join("c.svg").exists());
}
