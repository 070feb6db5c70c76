use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mupuppet::corpus::{load_all, run_corpus, Case, Expectation, Summary, Verdict};
use mupuppet::{CatalogDocument, Job};
use mupuppet_core::conformance::gen::{self, GenConfig};
use mupuppet_core::conformance::{check, check_monotone, trace_states};
use mupuppet_core::{
    parse_manifest, Definition, ErrorKind, Scope, Settings, State, Stmt, Value, VarEnv,
};

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

const SERVICES: &str = r#"
node default {
  $source = '/source'
  include service1
}

class service1 {
  $mode = 123

  include service2

  file { 'config1':
    path => 'path1',
    source => $source,
    mode => $mode,
    checksum => $checksum,
    provider => $provider,
    recurse => $recurse
  }

  $checksum = md5
}

class service2 inherits service3 {
  $recurse = true

  file { 'config2':
    path => 'path2',
    source => $source,
    mode => $mode,
    checksum => $checksum,
    provider => $provider,
    recurse => $recurse
  }
}

class service3 {
  $provider = posix

  file { 'config3':
    path => 'path3',
    mode => $mode,
    checksum => $checksum,
    recurse => $recurse
  }
}
"#;

const CLASS_PARAMS: &str = r#"
class c (
  $backupArg = false,
  $pathArg = '/default',
  $modeArg = 123 ) {

  file { 'from_class':
    backup => $backupArg,
    source => $pathArg,
    path => $path,
    mode => $modeArg
  }
}

define d (
  $backupArg = false,
  $pathArg = '/default',
  $modeArg = 123 ) {

  file { 'from_define':
    backup => $backupArg,
    source => $pathArg,
    path => $path,
    mode => $modeArg
  }
}

node default {

  $backup = true

  class { c:
    backupArg => $backup,
    pathArg => $path
  }

  d { "service3":
    backupArg => $backup,
    pathArg => $path
  }

  $path = '/path'
}
"#;

const REFS: &str = r#"
  file {"foo.txt":
    owner => "alice"
  }
  $y = "foo.txt"
  $x = File[$y]
  file {"bar.txt":
    owner => $x["owner"]
  }
"#;

const NODE_SCOPE_OK: &str = "
class c { notify { 'c': v => $v } }
node 'n1' {
  $v = 'from node'
  include c
}
";

const NODE_SCOPE_FAIL: &str = "
class c { notify { 'c': v => $v } }
node 'n1' {
  $v = 'from node'
}
include c
";

const MONO: &str = "
class base { $b = 1 }
class app inherits base { $a = $b + 1 }
define d($p) { file { $title: owner => $p } }
$x = 5
include app
d { 'one': p => $x }
notify { 'done': message => $app::a }
";

const GENERATED: u64 = 1000;

type Outcome = Result<String, String>;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn cases() -> Result<Vec<Case>, String> {
    load_all(&corpus_dir())
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|c| c.map_err(|e| e.to_string()))
        .collect()
}

fn compile(src: &str, node: &str, facts: &[(String, Value)], settings: &Settings) -> Result<CatalogDocument, String> {
    Job {
        source: src,
        node,
        facts,
        settings,
    }
    .run()
    .map_err(|f| f.slug().to_string())
}

fn expect_kind(src: &str, node: &str, settings: &Settings, want: ErrorKind) -> Result<(), String> {
    match compile(src, node, &[], settings) {
        Ok(_) => Err(format!("expected {want}, compiled")),
        Err(slug) if slug == want.slug() => Ok(()),
        Err(slug) => Err(format!("expected {}, got {slug}", want.slug())),
    }
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let took = start.elapsed();
    if took < budget {
        Ok(())
    } else {
        Err(format!("took {took:?}, budget {budget:?}"))
    }
}

fn ssh_fidelity() -> Outcome {
    let start = Instant::now();
    let facts = [("osfamily".to_string(), Value::from("Debian"))];
    let doc = compile(SSH, "ssh.example.com", &facts, &Settings::default())?;
    within(start, Duration::from_secs(1))?;
    let want = r#"{"node":"ssh.example.com","resources":[
            {"type":"package","title":"ssh","parameters":{"ensure":"installed"}}]}"#
        .parse::<CatalogDocument>()
        .map_err(|e| e.to_string())?;
    if doc != want {
        return Err(format!("got {}", doc.to_json_string()));
    }
    Ok("package/ssh ensure=installed".into())
}

fn strict_mode_divergence() -> Outcome {
    let settings = Settings::default();
    for (src, want) in [
        (SERVICES, ErrorKind::UndefinedDefinition),
        (CLASS_PARAMS, ErrorKind::UndefinedVariable),
    ] {
        let start = Instant::now();
        expect_kind(src, "host", &settings, want)?;
        within(start, Duration::from_secs(1))?;
    }
    Ok("undefined-definition, undefined-variable".into())
}

fn reference_dereference() -> Outcome {
    let doc = compile(REFS, "host", &[], &Settings::default())?;
    let c = &doc.catalog;
    let alice = Value::from("alice");
    let owners = [c.lookup("file", "foo.txt", "owner"), c.lookup("file", "bar.txt", "owner")];
    if c.len() != 2 || owners != [Some(&alice), Some(&alice)] {
        return Err(format!("got {}", doc.to_json_string()));
    }
    Ok("both owners are alice".into())
}

/// Category prefixes the corpus must cover, with minimum case counts.
const CATEGORIES: &[(&str, usize)] = &[
    ("statements/assign", 1),
    ("statements/case", 1),
    ("statements/if", 1),
    ("statements/unless", 1),
    ("statements/", 11),
    ("resources/basics", 1),
    ("resources/variables", 1),
    ("resources/defined-type", 1),
    ("resources/reference", 1),
    ("classes/basics", 1),
    ("classes/inheritance", 1),
    ("classes/scope", 1),
    ("classes/variables", 1),
    ("classes/parameters", 1),
    ("classes/nesting", 1),
    ("nodes/", 8),
    ("unsupported/virtual-resource", 1),
    ("unsupported/resource-defaults", 1),
    ("unsupported/resource-extension", 1),
    ("unsupported/ordering", 1),
    ("unsupported/class-overriding", 1),
    ("unsupported/nested-class-definition", 1),
    ("unsupported/collector", 1),
    ("unsupported/function-call", 1),
];

fn corpus_coverage() -> Outcome {
    let reports = run_corpus(&corpus_dir(), &Settings::default()).map_err(|e| e.to_string())?;
    let mut missing = Vec::new();
    for (prefix, min) in CATEGORIES {
        let n = reports.iter().filter(|r| r.name.starts_with(prefix)).count();
        if n < *min {
            missing.push(format!("{prefix} has {n} < {min}"));
        }
    }
    let rejections_ok = cases()?
        .iter()
        .filter(|c| c.name.starts_with("unsupported/"))
        .all(|c| matches!(c.expect, Expectation::Error(mupuppet::corpus::ExpectedError::Parse)));
    if !rejections_ok {
        missing.push("an unsupported case does not expect a parse error".into());
    }
    let failing: Vec<_> = reports
        .iter()
        .filter(|r| r.verdict != Verdict::Pass)
        .map(|r| r.name.clone())
        .collect();
    let s = Summary::of(&reports);
    if reports.len() < 40 || !s.all_passed() || !missing.is_empty() {
        return Err(format!(
            "{} cases, failing {failing:?}, coverage gaps {missing:?}",
            reports.len()
        ));
    }
    Ok(format!("{} cases, all pass", reports.len()))
}

fn determinism_audit() -> Outcome {
    let start = Instant::now();
    let settings = Settings::default();
    let mut steps = 0u64;
    let mut runs = 0u64;
    let mut problems = Vec::new();
    for case in cases()? {
        let Ok(m) = parse_manifest(&case.source) else { continue };
        let r = check(&m, &case.node, &case.facts, &settings);
        steps += r.steps;
        runs += 1;
        problems.extend(r.problems.iter().map(|p| format!("{}: {p}", case.name)));
    }
    for seed in 0..GENERATED {
        let s = gen::generate(&GenConfig::safe(seed));
        let r = check(&s.manifest, &s.node, &s.facts, &settings);
        steps += r.steps;
        runs += 1;
        problems.extend(r.problems.iter().map(|p| format!("seed {seed}: {p}")));
    }
    within(start, Duration::from_secs(60))?;
    if !problems.is_empty() {
        return Err(format!("{} violations, first: {}", problems.len(), problems[0]));
    }
    if steps < 100_000 {
        return Err(format!("only {steps} steps audited"));
    }
    Ok(format!("{runs} runs, {steps} steps, 0 violations"))
}

fn mono_trace() -> Result<Vec<State>, String> {
    let m = parse_manifest(MONO).map_err(|e| e.to_string())?;
    let (states, outcome) = trace_states(&m, "n", &[], &Settings::default());
    outcome.map_err(|e| e.to_string())?;
    Ok(states)
}

fn changed_binding() -> Result<Vec<State>, String> {
    let mut states = mono_trace()?;
    let at = states
        .iter()
        .position(|s| s.sigma.get(&Scope::Top, "x").is_some())
        .ok_or("x never bound")?
        + 1;
    for state in &mut states[at..] {
        let mut sigma = VarEnv::new();
        for (scope, name, v) in state.sigma.iter() {
            let v = if scope == &Scope::Top && name == "x" { Value::Int(6) } else { v.clone() };
            sigma.update(scope.clone(), name.to_string(), v).map_err(|e| format!("{e:?}"))?;
        }
        state.sigma = sigma;
    }
    Ok(states)
}

fn reverted_declaration() -> Result<Vec<State>, String> {
    let mut states = mono_trace()?;
    let declared = |s: &State| matches!(s.kappa.get("base"), Some(Definition::DeclaredClass(_)));
    let at = states.iter().position(declared).ok_or("base never declared")? + 1;
    states[at].kappa.set("base", Definition::class(None, vec![], Stmt::skip()));
    Ok(states)
}

fn monotonicity() -> Outcome {
    let settings = Settings::default();
    let mut traces = 0;
    let mut rejected = Vec::new();
    let mut check_trace = |label: String, m: &mupuppet_core::Manifest, node: &str, facts: &[(String, Value)]| {
        let (states, outcome) = trace_states(m, node, facts, &settings);
        if outcome.is_ok() {
            traces += 1;
            if let Err(v) = check_monotone(&states) {
                rejected.push(format!("{label}: {}", v[0]));
            }
        }
    };
    for case in cases()? {
        if let Ok(m) = parse_manifest(&case.source) {
            check_trace(case.name.clone(), &m, &case.node, &case.facts);
        }
    }
    for seed in 0..GENERATED {
        let s = gen::generate(&GenConfig::safe(seed));
        check_trace(format!("seed {seed}"), &s.manifest, &s.node, &s.facts);
    }
    if !rejected.is_empty() {
        return Err(format!("false rejects: {rejected:?}"));
    }
    check_monotone(&mono_trace()?).map_err(|v| format!("clean trace rejected: {}", v[0]))?;
    for (label, faulty) in [("changed binding", changed_binding()?), ("reverted class", reverted_declaration()?)] {
        if check_monotone(&faulty).is_ok() {
            return Err(format!("{label} trace accepted"));
        }
    }
    Ok(format!("{traces} traces accepted, 2 injected faults rejected"))
}

fn node_scope() -> Outcome {
    let doc = compile(NODE_SCOPE_OK, "n1", &[], &Settings::default())?;
    let v = doc.catalog.lookup("notify", "c", "v");
    if v != Some(&Value::from("from node")) {
        return Err(format!("got {v:?}"));
    }
    expect_kind(NODE_SCOPE_FAIL, "n1", &Settings::default(), ErrorKind::UndefinedVariable)?;
    Ok("node-scope value, then undefined-variable".into())
}

fn include_and_duplicates() -> Outcome {
    let settings = Settings::default();
    let class = "class web { package { 'nginx': } }\n";
    let once = compile(&format!("{class}include web\n"), "h", &[], &settings)?;
    let twice = compile(&format!("{class}include web\ninclude web\n"), "h", &[], &settings)?;
    if once.to_json_string() != twice.to_json_string() {
        return Err("double include differs from single include".into());
    }
    expect_kind("file { 'a': }\nfile { 'a': }\n", "h", &settings, ErrorKind::DuplicateResource)?;
    expect_kind(
        "class a { }\ninclude a\nclass { 'a': }\n",
        "h",
        &settings,
        ErrorKind::ClassAlreadyDeclared,
    )?;
    expect_kind("$x = 1\n$x = 2\n", "h", &settings, ErrorKind::DuplicateVariable)?;
    Ok("include idempotent, 3 error kinds exact".into())
}

fn inheritance_cycle() -> Outcome {
    let src = "class a inherits a { }\ninclude a\n";
    expect_kind(src, "h", &Settings::default(), ErrorKind::InheritanceCycle)?;
    let divergent = Settings {
        detect_cycles: false,
        ..Settings::default()
    };
    expect_kind(src, "h", &divergent, ErrorKind::StepLimitExceeded)?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = dir.path().join("cycle.pp");
    std::fs::write(&manifest, src).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_mupuppet"))
        .args(["compile", "--node", "h", "--paper-divergence"])
        .arg(&manifest)
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    if out.status.code() != Some(1) || !stderr.contains("StepLimitExceeded") {
        return Err(format!("CLI exited {:?}: {stderr}", out.status.code()));
    }
    Ok("inheritance-cycle, step-limit-exceeded when divergent".into())
}

fn cli_compile(case: &Case, out: &Path) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mupuppet"));
    cmd.arg("compile")
        .arg(case.dir.join("main.pp"))
        .args(["--node", &case.node, "--out"])
        .arg(out);
    let facts = case.dir.join("facts.json");
    if facts.is_file() {
        cmd.arg("--facts").arg(facts);
    }
    let status = cmd.status().map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{}: exit {:?}", case.name, status.code()));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn byte_determinacy() -> Outcome {
    let settings = Settings::default();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (i, case) in cases()?.iter().enumerate() {
        if !matches!(case.expect, Expectation::Catalog(_)) {
            continue;
        }
        let a = case.job(&settings).run().map_err(|e| e.slug().to_string())?;
        let b = case.job(&settings).run().map_err(|e| e.slug().to_string())?;
        if a.to_json_string() != b.to_json_string() {
            return Err(format!("{}: in-process output differs", case.name));
        }
        let first = cli_compile(case, &dir.path().join(format!("{i}-a.json")))?;
        let second = cli_compile(case, &dir.path().join(format!("{i}-b.json")))?;
        if first != second {
            return Err(format!("{}: catalog files differ", case.name));
        }
        if first != a.to_json_string().into_bytes() {
            return Err(format!("{}: CLI and library output differ", case.name));
        }
        compared += 1;
    }
    Ok(format!("{compared} catalogs byte-identical across runs"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("SSH example yields package/ssh", ssh_fidelity),
        ("strict-mode rejections", strict_mode_divergence),
        ("reference dereference", reference_dereference),
        ("corpus category coverage", corpus_coverage),
        ("determinism audit", determinism_audit),
        ("monotonicity", monotonicity),
        ("node-scope dynamics", node_scope),
        ("include idempotence and duplicate errors", include_and_duplicates),
        ("inheritance cycle handling", inheritance_cycle),
        ("byte-identical output", byte_determinacy),
    ];
    let mut results = BTreeMap::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        match &outcome {
            Ok(detail) => println!("PASS criterion {n}: {name} ({detail}; {took:.2?})"),
            Err(why) => println!("FAIL criterion {n}: {name}: {why}"),
        }
        results.insert(n, outcome.is_ok());
    }
    let failed = results.values().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
