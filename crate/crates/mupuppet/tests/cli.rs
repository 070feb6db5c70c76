use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

const SSH: &str = r#"
class ssh::params {
  case $::osfamily {
  'Debian': { $sshd_package  = 'ssh' }
  'RedHat': { $sshd_package  = 'openssh-server' }
  default:  { fail("SSH class not supported") }
  }
}
class ssh ($ssh_pkg = $::ssh::params::sshd_package) inherits ssh::params {
  package { $ssh_pkg:
    ensure => installed
  }
}
node 'ssh.example.com' {
  include ssh
}
"#;

fn mupuppet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mupuppet"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ssh_files(os: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let pp = write(dir.path(), "ssh.pp", SSH);
    let facts = write(dir.path(), "facts.json", &format!(r#"{{"osfamily": "{os}"}}"#));
    (dir, pp, facts)
}

#[test]
fn compiles_ssh_for_debian() {
    let (_dir, pp, facts) = ssh_files("Debian");
    let out = mupuppet(&["compile", s(&pp), "--node", "ssh.example.com", "--facts", s(&facts)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Json = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        doc,
        serde_json::json!({
            "node": "ssh.example.com",
            "resources": [
                {"type": "package", "title": "ssh", "parameters": {"ensure": "installed"}}
            ]
        })
    );
    assert!(out.stdout.ends_with(b"\n"));
}

#[test]
fn writes_catalog_to_file_and_pretty_format() {
    let (dir, pp, facts) = ssh_files("RedHat");
    let out_path = dir.path().join("catalog.json");
    let out = mupuppet(&[
        "compile", s(&pp), "--node", "ssh.example.com", "--facts", s(&facts), "--out", s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Json = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["resources"][0]["title"], "openssh-server");

    let out = mupuppet(&[
        "compile", s(&pp), "--node", "ssh.example.com", "--facts", s(&facts), "--format", "pretty",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("package { 'openssh-server':"), "{text}");
}

#[test]
fn unsupported_os_fails_with_exit_1() {
    let (_dir, pp, facts) = ssh_files("Windows");
    let out = mupuppet(&["compile", s(&pp), "--node", "ssh.example.com", "--facts", s(&facts)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[Failure]: "), "{err}");
    assert!(err.contains("SSH class not supported"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn compile_error_names_file_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let pp = write(dir.path(), "dup.pp", "$x = 1\n$x = 2\n");
    let out = mupuppet(&["compile", s(&pp), "--node", "n"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    let want = format!("error[DuplicateVariable]: {}:2:1", pp.display());
    assert!(err.starts_with(&want), "{err}");
}

#[test]
fn missing_node_is_a_usage_error() {
    let (_dir, pp, _) = ssh_files("Debian");
    assert_eq!(mupuppet(&["compile", s(&pp)]).status.code(), Some(2));
    assert_eq!(mupuppet(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn parse_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let pp = write(dir.path(), "bad.pp", "file { 'a': }\nFile <| |>\n");
    let out = mupuppet(&["compile", s(&pp), "--node", "n"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with(&format!("error[ParseError]: {}:2:", pp.display())), "{err}");
    assert!(err.contains("expected"), "{err}");
}

#[test]
fn io_and_fact_problems_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.pp");
    assert_eq!(mupuppet(&["compile", s(&missing), "--node", "n"]).status.code(), Some(3));

    let pp = write(dir.path(), "ok.pp", "notify { 'x': }\n");
    for facts in ["{", "[1]", r#"{"bad name": 1}"#, r#"{"x": null}"#, r#"{"x": 1.5}"#] {
        let f = write(dir.path(), "facts.json", facts);
        let out = mupuppet(&["compile", s(&pp), "--node", "n", "--facts", s(&f)]);
        assert_eq!(out.status.code(), Some(3), "facts {facts}");
    }
}

#[test]
fn trace_has_one_record_per_step() {
    let (dir, pp, facts) = ssh_files("Debian");
    let trace = dir.path().join("trace.ndjson");
    let out = mupuppet(&[
        "compile", s(&pp), "--node", "ssh.example.com", "--facts", s(&facts), "--trace", s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&trace).unwrap();
    let records: Vec<Json> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(records.len() > 10);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["step"], i as u64 + 1);
        for field in ["judgement", "rule", "derivation", "scope", "line", "col", "term"] {
            assert!(r.get(field).is_some(), "record {i} lacks {field}");
        }
        assert!(r["term"].as_str().unwrap().chars().count() <= 124);
        let derivation = r["derivation"].as_array().unwrap();
        assert_eq!(derivation.last().unwrap(), &r["rule"]);
    }
    let rules: Vec<&str> = records.iter().map(|r| r["rule"].as_str().unwrap()).collect();
    for rule in ["NodeMatch", "IncPU", "CaseMatch", "ResDecl"] {
        assert!(rules.contains(&rule), "no {rule} in {rules:?}");
    }
}

#[test]
fn trace_is_written_for_failing_compilations() {
    let (dir, pp, facts) = ssh_files("Windows");
    let trace = dir.path().join("trace.ndjson");
    let out = mupuppet(&[
        "compile", s(&pp), "--node", "ssh.example.com", "--facts", s(&facts), "--trace", s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(&trace).unwrap().lines().count() > 0);
}

#[test]
fn self_inheritance_detected_or_divergent() {
    let dir = tempfile::tempdir().unwrap();
    let pp = write(dir.path(), "cycle.pp", "class a inherits a { }\ninclude a\n");
    let out = mupuppet(&["compile", s(&pp), "--node", "n"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[InheritanceCycle]"));

    let out = mupuppet(&["compile", s(&pp), "--node", "n", "--paper-divergence", "--max-steps", "500"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[StepLimitExceeded]"));
}

#[test]
fn builtin_types_can_be_replaced() {
    let dir = tempfile::tempdir().unwrap();
    let pp = write(dir.path(), "w.pp", "widget { 'w': size => 3 }\n");
    let out = mupuppet(&["compile", s(&pp), "--node", "n"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[UndefinedDefinition]"));

    let out = mupuppet(&["compile", s(&pp), "--node", "n", "--builtin-types", "widget,file"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Json = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["resources"][0]["type"], "widget");
    assert_eq!(doc["resources"][0]["parameters"]["size"], 3);
}

#[test]
fn test_command_passes_on_shipped_corpus() {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/corpus");
    let out = mupuppet(&["test", corpus]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains(" passed, 0 failed, 0 malformed"), "{text}");
}

fn case(root: &Path, name: &str, src: &str, expect: (&str, &str)) {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    write(&dir, "main.pp", src);
    write(&dir, "node.txt", "n\n");
    write(&dir, expect.0, expect.1);
}

#[test]
fn test_command_reports_failures_and_malformed_cases() {
    let root = tempfile::tempdir().unwrap();
    let catalog = r#"{"node": "n", "resources": [{"type": "notify", "title": "x", "parameters": {}}]}"#;
    case(root.path(), "good", "notify { 'x': }\n", ("expect.json", catalog));
    case(root.path(), "group/wrong-kind", "$x = 1\n$x = 2\n", ("expect-error.txt", "duplicate-resource\n"));
    let out = mupuppet(&["test", s(root.path()), "-v"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("PASS  good"), "{text}");
    assert!(text.contains("FAIL  group/wrong-kind"), "{text}");
    assert!(text.contains("1 passed, 1 failed, 0 malformed (2 cases)"), "{text}");

    let root = tempfile::tempdir().unwrap();
    case(root.path(), "odd", "notify { 'x': }\n", ("expect-error.txt", "no-such-kind\n"));
    let out = mupuppet(&["test", s(root.path())]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(3), "{text}");
    assert!(text.contains("ERROR odd"), "{text}");
}
