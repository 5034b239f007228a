use std::io::Write;
use std::process::{Command, Stdio};

fn finprin(args: &[&str], stdin: &str) -> (i32, String, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_finprin"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn finprin");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn determinacy_table_for_wphp() {
    let (code, out, _) = finprin(&["determinacy", "WPHP", "--n", "2..3"], "");
    assert_eq!(code, 0);
    let rows: Vec<String> = out.lines().skip(1).map(|l| l.split('\t').take(3).collect::<Vec<_>>().join(" ")).collect();
    assert_eq!(rows, ["2 3 4", "3 4 9"]);
}

#[test]
fn determinacy_json_and_file_principles() {
    let dir = std::env::temp_dir().join(format!("finprin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("php.txt");
    let (_, text, _) = finprin(&["principle", "show", "PHP"], "");
    let body: String = text.lines().skip_while(|l| !l.starts_with("principle")).collect::<Vec<_>>().join("\n");
    std::fs::write(&path, body).unwrap();
    let (code, out, err) = finprin(&["determinacy", path.to_str().unwrap(), "--n", "2", "--format", "json"], "");
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["rows"][0]["n"], 2);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn exit_codes() {
    assert_eq!(finprin(&[], "").0, 2);
    assert_eq!(finprin(&["principle", "show", "NOPE"], "").0, 2);
    assert_eq!(finprin(&["demo", "core-lemma", "--n", "64"], "").0, 3);
    assert_eq!(finprin(&["determinacy", "HOP", "--n", "4"], "").0, 0);
}

#[test]
fn node_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_finprin"))
        .args(["determinacy", "WPHP", "--n", "4", "--exhaustive"])
        .env("FINPRIN_NODE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn adversary_refutes_a_collision_claim() {
    let (code, out, _) = finprin(&["adversary", "serve", "PHP", "--n", "16"], "Q f(0)#0\nQ f(1)#0\nCLAIM 0 0 1 0\n");
    assert_eq!(code, 0);
    assert!(out.lines().last().is_some_and(|l| l.starts_with("REFUTED ")), "{out}");
}

#[test]
fn translate_writes_dimacs_file() {
    let path = std::env::temp_dir().join(format!("finprin-{}.cnf", std::process::id()));
    let args = ["translate", "PHP", "--n", "2", "--binary", "--simplify", "--cnf", "tseitin", "--out", path.to_str().unwrap()];
    assert_eq!(finprin(&args, "").0, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l.starts_with("p cnf ")));
    let _ = std::fs::remove_file(path);
}

#[test]
fn scripted_session_at_budget_twenty() {
    let script: String = (0..21).map(|x| format!("Q f({x})#0\n")).collect();
    let (code, out, _) = finprin(&["adversary", "serve", "PHP", "--n", "64", "--budget", "20"], &script);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[..20].iter().all(|l| l.starts_with("A ")));
    assert_eq!(lines[20], "BUDGET");
}

fn temp_structure(tag: &str, json: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("finprin-{tag}-{}.json", std::process::id()));
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn solve_and_pullback_from_json() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let php = finprin::catalog::builtin("PHP").unwrap().sentence;
    let a = finprin::catalog::random_total(&php.language, 5, &mut rng).unwrap();
    let path = temp_structure("php", &a.to_json());
    let (code, out, err) = finprin(&["solve", "PHP", "--structure", path.to_str().unwrap()], "");
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let w = finprin::partial::find_witness(&a, &php).unwrap();
    assert_eq!(v["witness"]["disjunct"], w.disjunct);
    let _ = std::fs::remove_file(path);

    let i = finprin::reduce::builtin_interpretation("IND->HOP").unwrap();
    let b = finprin::catalog::random_total(i.source_language(), 4, &mut rng).unwrap();
    let path = temp_structure("ind", &b.to_json());
    let (code, out, err) = finprin(&["reduce", "pullback", "IND->HOP", "--structure", path.to_str().unwrap()], "");
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let tuple: Vec<u32> = serde_json::from_value(v["pullback"]["tuple"].clone()).unwrap();
    let w = finprin::partial::Witness { disjunct: v["pullback"]["disjunct"].as_u64().unwrap() as usize, tuple };
    assert_eq!(finprin::partial::witness_value(&b, &i.source, &w), finprin::partial::TruthValue::True);
    let (code, out, _) = finprin(&["reduce", "apply", "IND->HOP", "--structure", path.to_str().unwrap()], "");
    assert_eq!(code, 0);
    assert!(out.contains("\"transport\""));
    let _ = std::fs::remove_file(path);
}
