use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use palatini::scroll::{instance_random, planted};
use palatini::Field;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_palatini")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_instance(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_is_deterministic_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path| {
        vec!["gen", "--m", "4", "--k", "3", "--p", "1009", "--seed", "7", "--trials", "200", "--out"]
            .into_iter()
            .map(String::from)
            .chain([p.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    let out_a = Command::new(env!("CARGO_BIN_EXE_palatini")).args(args(&a)).output().unwrap();
    let _out_b = Command::new(env!("CARGO_BIN_EXE_palatini")).args(args(&b)).output().unwrap();
    assert_eq!(code(&out_a), 0, "{}", String::from_utf8_lossy(&out_a.stderr));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rep = json(&out_a);
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["version"], palatini::VERSION);
    assert_eq!(rep["instance_hash"].as_str().unwrap().len(), 64);
    assert_eq!(rep["genericity"]["codim_probe"]["expected_degree"], "7");
}

#[test]
fn gen_rejects_out_of_range() {
    let out = run(&["gen", "--m", "5", "--k", "3", "--p", "1009"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert_eq!(code(&run(&["gen", "--m", "3", "--k", "3", "--p", "1000"])), 2);
    assert_eq!(code(&run(&["gen", "--m", "3"])), 2);
}

#[test]
fn degree_table_formats() {
    let out = run(&["degree", "--format", "tsv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m\tk\tformula_degree\tchern_degree\tagree");
    assert!(lines.contains(&"3\t3\t6\t6\ttrue"));
    assert!(lines.contains(&"4\t3\t7\t7\ttrue"));
    assert!(lines[1..].iter().all(|l| l.ends_with("true")));
    // 2 ≤ m ≤ k+1 for 2 ≤ k ≤ 8
    assert_eq!(lines.len() - 1, (2..=8).sum::<usize>());

    let rep = json(&run(&["degree", "--k-max", "4"]));
    assert_eq!(rep["all_agree"], true);
    assert_eq!(rep["rows"].as_array().unwrap().len(), 9);
    assert_eq!(code(&run(&["degree", "--k-min", "5", "--k-max", "4"])), 2);
}

#[test]
fn pfaffian_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let f = Field::prime(1009).unwrap();
    let inst = instance_random(3, 3, &f, 2).unwrap();
    let path = write_instance(dir.path(), "i.json", &inst.to_json_string().unwrap());

    let out = run(&["pfaffian", "--instance", &path]);
    assert_eq!(code(&out), 0);
    let rep = json(&out);
    assert_eq!(rep["degree"], 3);
    assert_eq!(rep["pf_squared_equals_det"]["failures"], 0);
    assert_eq!(rep["instance_hash"], inst.hash().unwrap());

    let out = run(&["sample", "--instance", &path, "--count", "5", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let rep = json(&out);
    let pts = rep["points"].as_array().unwrap();
    assert_eq!(pts.len(), 5);
    assert!(pts.iter().all(|p| p["corank"] == 2 && p["kernel"].as_array().unwrap().len() == 2));
    assert_eq!(
        run(&["sample", "--instance", &path, "--count", "5", "--seed", "3"]).stdout,
        serde_json::to_vec_pretty(&rep).unwrap().into_iter().chain(*b"\n").collect::<Vec<u8>>()
    );
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = Field::prime(1009).unwrap();
    let good =
        write_instance(dir.path(), "good.json", &instance_random(3, 4, &f, 5).unwrap().to_json_string().unwrap());
    let out = run(&["verify", "--instance", &good, "--trials", "200", "--samples", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let rep = json(&out);
    assert_eq!(rep["incidence"]["round_trip"], 5);
    assert_eq!(rep["identities_pass"], true);

    let bad = planted::common_kernel(4, 3, &f, 1).unwrap();
    let bad = write_instance(dir.path(), "bad.json", &bad.to_json_string().unwrap());
    let out = run(&["verify", "--instance", &bad, "--trials", "200", "--samples", "5"]);
    assert_eq!(code(&out), 3);
    let rep = json(&out);
    assert_eq!(rep["probes_clean"], false);
    assert_eq!(rep["genericity"]["f_phi_injective"], false);
}

#[test]
fn corrupted_skewness_is_surfaced() {
    let dir = tempfile::tempdir().unwrap();
    let f = Field::prime(1009).unwrap();
    let inst = instance_random(3, 3, &f, 9).unwrap();
    let mut v: Value = serde_json::from_str(&inst.to_json_string().unwrap()).unwrap();
    // expand matrix 0 to a full matrix and break the (0,1)/(1,0) pair
    let n = 6;
    let tri: Vec<u64> = v["matrices"][0].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    let mut full = vec![0u64; n * n];
    let mut t = 0;
    for i in 1..n {
        for j in 0..i {
            full[i * n + j] = tri[t];
            full[j * n + i] = (1009 - tri[t]) % 1009;
            t += 1;
        }
    }
    full[1] = (full[n] + 1) % 1009;
    v["matrices"][0] = serde_json::to_value(&full).unwrap();
    let path = write_instance(dir.path(), "c.json", &v.to_string());
    let out = run(&["verify", "--instance", &path]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("skew"));
}

#[test]
fn tangent_reports() {
    let dir = tempfile::tempdir().unwrap();
    let f = Field::prime(1009).unwrap();
    let p43 = write_instance(dir.path(), "43.json", &instance_random(4, 3, &f, 1).unwrap().to_json_string().unwrap());
    let out = run(&["tangent", "--instance", &p43, "--cap", "6"]);
    assert_eq!(code(&out), 0);
    let rep = json(&out);
    assert_eq!(rep["status"], "agree");
    assert_eq!(rep["report"]["computed_dim"], 44);
    assert_eq!(rep["report"]["stabilization"].as_array().unwrap().len(), 2);
    assert_eq!(rep["reference_h1"], 0);

    let p33 = write_instance(dir.path(), "33.json", &instance_random(3, 3, &f, 1).unwrap().to_json_string().unwrap());
    let out = run(&["tangent", "--instance", &p33, "--cap", "4"]);
    assert_eq!(code(&out), 0);
    let rep = json(&out);
    assert_eq!(rep["status"], "no_closed_form");
    assert_eq!(rep["report"]["computed_dim"], 36);
    assert_eq!(rep["reference_h1"], Value::Null);

    assert_eq!(code(&run(&["tangent", "--instance", &p33, "--cap", "3"])), 2);
}
