use std::path::Path;
use std::process::{Command, Output};

fn divgen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divgen")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for seed in ["1", "2"] {
        let o = divgen(&["generate-model", "--seed", seed, "-o", &format!("app{seed}.json")], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = divgen(
        &[
            "run", "--model", "app1.json", "--model", "app2.json", "--mode", "baseline", "--mode", "div", "--reps", "3",
            "--generations", "6", "--pop", "12", "--offspring", "12", "--n-div", "4", "-o", "runs",
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().any(|l| l.starts_with("app2 div rep 2 gen 6/6")));
    assert!(d.join("runs/run_app1_div_2.json").is_file());
    assert!(d.join("runs/snapshots_app2_baseline_0.csv").is_file());

    let o = divgen(&["compare", "--a", "runs", "--a-mode", "div", "--b", "runs", "--b-mode", "baseline", "-o", "cmp"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("cmp/comparison.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "subject,gen_a,mean_a,median_a,sd_a,gen_b,mean_b,median_b,sd_b,p_value,a12,effect_class,direction"
    );
    let subjects: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert!(subjects.contains(&"app1:duration"));
    assert!(subjects.contains(&"app2:coverage"));
    assert!(subjects.contains(&"app2:crashes"));

    let o = divgen(&["landscape", "--input", "runs", "-o", "land"], d);
    assert!(o.status.success());
    let avg = std::fs::read_to_string(d.join("land/landscape_app1_div.csv")).unwrap();
    assert!(avg.starts_with("generation,ppos,hv,maxdiam,avgdiam,mindiam,reldiam,pconnec,nconnec,kconnec,lconnec,hvconnec\n"));
    assert_eq!(avg.lines().count(), 8);
    assert!(d.join("land/landscape_app1_div_rep2.csv").is_file());
}

#[test]
fn input_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(divgen(&["run", "--model", "missing.json", "-o", "out"], d).status.code(), Some(2));
    assert_eq!(divgen(&["landscape", "--input", "nothing", "-o", "out"], d).status.code(), Some(2));
    assert_eq!(divgen(&["bogus"], d).status.code(), Some(2));
    let o = divgen(&["generate-model", "--states", "2", "--alphabet", "1", "--crash-rules", "5", "-o", "m.json"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_crash_rules"));

    std::fs::write(d.join("broken.json"), "{\"alphabet_size\": 3}").unwrap();
    assert_eq!(divgen(&["run", "--model", "broken.json", "-o", "out"], d).status.code(), Some(2));

    assert!(divgen(&["generate-model", "-o", "m.json"], d).status.success());
    let o = divgen(&["run", "--model", "m.json", "--pop", "10", "--n-div", "11", "--generations", "1", "-o", "out"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_rejects_mismatched_models() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for seed in ["1", "2"] {
        divgen(&["generate-model", "--seed", seed, "-o", &format!("m{seed}.json")], d);
    }
    let common = ["--generations", "2", "--pop", "8", "--offspring", "8", "--n-div", "2", "--reps", "2"];
    let mut a = vec!["run", "--model", "m1.json", "-o", "a"];
    a.extend(common);
    let mut b = vec!["run", "--model", "m2.json", "-o", "b"];
    b.extend(common);
    assert!(divgen(&a, d).status.success());
    assert!(divgen(&b, d).status.success());
    let o = divgen(&["compare", "--a", "a", "--b", "b", "-o", "cmp"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model sets differ"));
}
