use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uav-steer"))
}

#[test]
fn run_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--dump-links", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for (name, header) in [
        ("topology.csv", "kind,id,mno_id,x,y,z"),
        ("partition.csv", "uav_id,random_mno,game_mno,random_payoff,game_payoff"),
        ("trace.csv", "index,uav_id,from,to,sum_payoff_after"),
        ("links.csv", "uav_id,mno_id,bs_id,p_los,a_mean,b_mean"),
    ] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header, "{name}");
    }
}

#[test]
fn sweep_respects_config_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.toml");
    std::fs::write(&config, "bs_per_mno = 3\nrng_seed = 11\n").unwrap();
    let run = |out: &str| {
        let path = dir.path().join(out);
        let o = bin()
            .args(["sweep-transfers", "--uavs", "5,8", "--mnos", "1,2", "--trials", "2", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&path)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(a.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn single_mno_outage_rows_agree() {
    let o = bin().args(["sweep-outage", "--uavs", "20", "--mnos", "1", "--trials", "1"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let values: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(values.len(), 2);
    assert_eq!(values[0], values[1]);
}

#[test]
fn validation_report() {
    let o = bin().args(["validate-outage", "--instances", "5", "--samples", "100000", "--seed", "3"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.trim_end().ends_with("5/5 instances within tolerance: PASS"), "{text}");
    let again = bin().args(["validate-outage", "--instances", "5", "--samples", "100000", "--seed", "3"]).output().unwrap();
    assert_eq!(again.stdout, text.as_bytes());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(bin().arg("no-such-command").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["validate-outage", "--samples", "10"]).output().unwrap().status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "uav_count = 0\n").unwrap();
    let o = bin().arg("show-config").arg("--config").arg(&config).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("uav_count"));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}
