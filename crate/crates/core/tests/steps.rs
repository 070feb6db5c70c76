//! Single steps and short traces of the evaluator.

use mupuppet_core::env::{merge, Definition};
use mupuppet_core::syntax::{ClassName, ManifestKind, NodeSpec, Param, StmtKind};
use mupuppet_core::{
    parse_expression, parse_manifest, Catalog, Configuration, ErrorKind, Expr, Limits, Machine,
    Manifest, Rule, Scope, Settings, State, Stmt, Term, Value,
};

fn machine() -> Machine {
    Machine::new(Settings::default())
}

fn stmt(src: &str) -> Stmt {
    let m = parse_manifest(src).unwrap();
    match m.kind {
        ManifestKind::Stmt(s) => s,
        k => panic!("{k:?}"),
    }
}

/// Runs an expression to a value, collecting the axiom of every step.
fn eval(st: State, e: Expr, scope: Scope) -> (Result<Value, ErrorKind>, Vec<Rule>) {
    let mut cfg = Configuration::expr(st, e, scope);
    let mut rules = Vec::new();
    let r = machine().run(&mut cfg, |r, _| rules.push(r.rule()));
    let v = r.map_err(|e| e.kind).map(|_| match &cfg.term {
        Term::Expr(e) => e.to_value().unwrap(),
        t => panic!("{t:?}"),
    });
    (v, rules)
}

#[test]
fn parent_scope_variable() {
    let mut st = State::new();
    st.sigma.update(Scope::Top, "x".into(), Value::Int(7)).unwrap();
    let mut cfg = Configuration::expr(st, Expr::var("x"), Scope::Node);
    let r = machine().step(&mut cfg).unwrap();
    assert_eq!(r.derivation, vec![Rule::PVar, Rule::LVar]);
    assert_eq!(r.scope, Some(Scope::Top));
    assert_eq!(cfg.term, Term::Expr(Expr::int(7)));
}

#[test]
fn array_index_is_zero_based() {
    let (v, rules) = eval(State::new(), parse_expression("[10, 20, 30][1]").unwrap(), Scope::Top);
    assert_eq!(v, Ok(Value::Int(20)));
    assert_eq!(rules, vec![Rule::DeRefArray]);
}

#[test]
fn reference_lookup_after_declaration() {
    let mut cfg = Configuration::stmt(State::new(), stmt("file { 'foo.txt': owner => 'alice' }"), Scope::Top);
    machine().run(&mut cfg, |_, _| {}).unwrap();
    let st = cfg.state.clone();
    let (v, rules) = eval(st, parse_expression("File['foo.txt']['owner']").unwrap(), Scope::Top);
    assert_eq!(v, Ok(Value::str("alice")));
    assert_eq!(rules, vec![Rule::DeRefRes]);
}

#[derive(Clone, Copy, Debug)]
enum Arm {
    Hit,
    Miss,
    Default,
}

/// The axioms a selector over `arms` should go through, worked out by
/// scanning the arms in order.
fn selector_oracle(arms: &[Arm], computed_scrutinee: bool) -> (Result<Value, ErrorKind>, Vec<Rule>) {
    let mut rules = Vec::new();
    if computed_scrutinee {
        rules.push(Rule::ArithValue);
    }
    for (i, arm) in arms.iter().enumerate() {
        match arm {
            Arm::Hit => {
                rules.push(Rule::SChooseI);
                return (Ok(Value::Int(i as i64)), rules);
            }
            Arm::Default => {
                rules.push(Rule::SDefault);
                return (Ok(Value::Int(i as i64)), rules);
            }
            Arm::Miss => rules.push(Rule::SChooseII),
        }
    }
    (Err(ErrorKind::SelectorNoMatch), rules)
}

#[test]
fn selector_traces_match_oracle() {
    let kinds = [Arm::Hit, Arm::Miss, Arm::Default];
    let mut lists: Vec<Vec<Arm>> = vec![vec![]];
    lists.extend(kinds.iter().map(|a| vec![*a]));
    for a in kinds {
        for b in kinds {
            lists.push(vec![a, b]);
        }
    }
    assert_eq!(lists.len(), 13);
    for arms in &lists {
        for computed in [false, true] {
            let body: Vec<String> = arms
                .iter()
                .enumerate()
                .map(|(i, arm)| match arm {
                    Arm::Hit => format!("'a' => {i}"),
                    Arm::Miss => format!("'b' => {i}"),
                    Arm::Default => format!("default => {i}"),
                })
                .collect();
            let scrutinee = if computed { "(1 + 1) == 2 ? { true => 'a' }" } else { "'a'" };
            let src = format!("{scrutinee} ? {{ {} }}", body.join(", "));
            let Ok(e) = parse_expression(&src) else {
                assert!(arms.is_empty(), "{src}");
                continue;
            };
            let (v, mut rules) = eval(State::new(), e, Scope::Top);
            if computed {
                // The inner selector contributes CompValue and SChooseI.
                let inner: Vec<Rule> = rules.drain(..3).collect();
                assert_eq!(inner, vec![Rule::ArithValue, Rule::CompValueI, Rule::SChooseI], "{src}");
                rules.insert(0, Rule::ArithValue);
            }
            assert_eq!((v, rules), selector_oracle(arms, computed), "{src}");
        }
    }
}

#[test]
fn selector_default_after_miss() {
    let (v, rules) = eval(State::new(), parse_expression("'a' ? { 'b' => 1, default => 2 }").unwrap(), Scope::Top);
    assert_eq!(v, Ok(Value::Int(2)));
    assert_eq!(rules, vec![Rule::SChooseII, Rule::SDefault]);
}

#[test]
fn assignment_steps() {
    let mut cfg = Configuration::stmt(State::new(), stmt("$x = 1 + 1"), Scope::Top);
    let r = machine().step(&mut cfg).unwrap();
    assert_eq!(r.derivation, vec![Rule::AssignStep, Rule::ArithValue]);
    assert_eq!(cfg.term, Term::Stmt(stmt("$x = 2")));
    assert!(cfg.state.sigma.is_empty());
    let r = machine().step(&mut cfg).unwrap();
    assert_eq!(r.derivation, vec![Rule::Assign]);
    assert_eq!(cfg.state.sigma.get(&Scope::Top, "x"), Some(&Value::Int(2)));
    assert!(cfg.is_final());
}

#[test]
fn include_of_declared_class_is_skip() {
    let mut st = State::new();
    st.kappa.set("a", Definition::DeclaredClass(Scope::Top));
    let before = st.clone();
    let mut cfg = Configuration::stmt(st, Stmt::include("a"), Scope::Top);
    let r = machine().step(&mut cfg).unwrap();
    assert_eq!(r.rule(), Rule::IncD);
    assert!(cfg.is_final());
    assert_eq!(cfg.state, before);
}

#[test]
fn include_with_undeclared_parent_includes_parent_first() {
    let mut st = State::new();
    st.kappa.set("a", Definition::class(Some(ClassName::new("b")), vec![], Stmt::skip()));
    st.kappa.set("b", Definition::class(None, vec![], Stmt::skip()));
    let mut cfg = Configuration::stmt(st, Stmt::include("a"), Scope::Top);
    assert_eq!(machine().step(&mut cfg).unwrap().rule(), Rule::IncPU);
    assert_eq!(cfg.term, Term::Stmt(Stmt::seq(Stmt::include("b"), Stmt::include("a"))));
}

#[test]
fn defined_resource_expands_to_def_scope() {
    let body = stmt("notify { $title: }");
    let params = vec![Param::required("x"), Param::with_default("y", Expr::int(2))];
    let mut st = State::new();
    st.kappa.set("d", Definition::resource(params.clone(), body.clone()));
    let mut cfg = Configuration::stmt(st, stmt("d { 't': x => 1 }"), Scope::Node);
    let r = machine().step(&mut cfg).unwrap();
    assert_eq!(r.derivation, vec![Rule::Def]);
    let merged = merge(&params, &[("x".into(), Value::Int(1))], Default::default()).unwrap();
    assert_eq!(
        merged,
        Stmt::sequence(vec![Stmt::assign("x", Expr::int(1)), Stmt::assign("y", Expr::int(2)), Stmt::skip()])
    );
    let expected = Stmt::new(
        StmtKind::Scope(
            Scope::def(Scope::Node),
            Box::new(Stmt::seq(Stmt::assign("title", Expr::str("t")), Stmt::seq(merged, body))),
        ),
        Default::default(),
    );
    assert_eq!(cfg.term, Term::Stmt(expected));
}

#[test]
fn merge_cases() {
    let x = || Param::required("x");
    assert_eq!(
        merge(&[x()], &[("x".into(), Value::Int(5))], Default::default()).unwrap(),
        Stmt::seq(Stmt::assign("x", Expr::int(5)), Stmt::skip())
    );
    let with_default = Param::with_default("x", parse_expression("1 + 1").unwrap());
    assert_eq!(
        merge(&[with_default], &[], Default::default()).unwrap(),
        Stmt::seq(Stmt::assign("x", parse_expression("1 + 1").unwrap()), Stmt::skip())
    );
    assert!(merge(&[x()], &[], Default::default()).is_err());
}

#[test]
fn resource_like_redeclaration() {
    let mut st = State::new();
    st.kappa.set("a", Definition::DeclaredClass(Scope::Top));
    let mut cfg = Configuration::stmt(st, stmt("class { a: }"), Scope::Top);
    assert_eq!(machine().step(&mut cfg).unwrap_err().kind, ErrorKind::ClassAlreadyDeclared);
}

#[test]
fn resource_title_steps_first() {
    let mut cfg = Configuration::stmt(State::new(), stmt("notify { 1 + 1: a => 2 }"), Scope::Top);
    let r = machine().step(&mut cfg).unwrap();
    assert_eq!(r.derivation, vec![Rule::ResStep, Rule::ResTitle, Rule::ArithValue]);
    assert_eq!(cfg.term, Term::Stmt(stmt("notify { 2: a => 2 }")));
}

#[test]
fn resource_title_then_attributes_in_order() {
    let mut st = State::new();
    st.sigma.update(Scope::Top, "x".into(), Value::Int(3)).unwrap();
    st.sigma.update(Scope::Top, "t".into(), Value::str("t")).unwrap();
    let mut cfg = Configuration::stmt(st, stmt("notify { $t: a => 1 + 1, b => $x }"), Scope::Top);
    let mut derivations = Vec::new();
    machine().run(&mut cfg, |r, _| derivations.push(r.derivation.clone())).unwrap();
    assert_eq!(
        derivations,
        vec![
            vec![Rule::ResStep, Rule::ResTitle, Rule::LVar],
            vec![Rule::ResStep, Rule::ResStepI, Rule::ResStepII, Rule::ArithValue],
            vec![Rule::ResStep, Rule::ResStepI, Rule::ResStepIII, Rule::ResStepII, Rule::LVar],
            vec![Rule::ResDecl],
        ]
    );
}

fn manifest_step(m: Manifest, node: &str) -> (Rule, Configuration) {
    let mut cfg = Configuration::manifest(State::new(), m, node);
    let r = machine().step(&mut cfg).unwrap();
    (r.rule(), cfg)
}

#[test]
fn node_blocks() {
    let src = "node 'n' { $x = 1 }";
    let (rule, cfg) = manifest_step(parse_manifest(src).unwrap(), "n");
    assert_eq!(rule, Rule::NodeMatch);
    let Term::Manifest(m) = &cfg.term else { panic!() };
    let ManifestKind::Stmt(s) = &m.kind else { panic!() };
    assert_eq!(s.kind, StmtKind::Scope(Scope::Node, Box::new(stmt("$x = 1"))));

    let (rule, cfg) = manifest_step(parse_manifest(src).unwrap(), "m");
    assert_eq!(rule, Rule::NodeNoMatch);
    assert!(cfg.is_final());
}

#[test]
fn definitions_extend_kappa() {
    let (rule, cfg) = manifest_step(parse_manifest("define d ($x) { }").unwrap(), "n");
    assert_eq!(rule, Rule::RDef);
    assert_eq!(
        cfg.state.kappa.get("d"),
        Some(&Definition::resource(vec![Param::required("x")], Stmt::skip()))
    );
    let (rule, cfg) = manifest_step(parse_manifest("class a ($p) inherits b { }").unwrap(), "n");
    assert_eq!(rule, Rule::CDefPI);
    assert_eq!(
        cfg.state.kappa.get("a"),
        Some(&Definition::class(Some(ClassName::new("b")), vec![Param::required("p")], Stmt::skip()))
    );
    assert!(cfg.is_final());
}

#[test]
fn node_match_predicate() {
    use mupuppet_core::eval::node_match;
    assert!(node_match("ssh.example.com", &NodeSpec::Name("ssh.example.com".into())));
    assert!(node_match("x", &NodeSpec::Default));
    assert!(!node_match("x", &NodeSpec::Name("y".into())));
    assert!(node_match("b", &NodeSpec::List(vec!["a".into(), "b".into()])));
}

#[test]
fn case_match_predicate() {
    use mupuppet_core::eval::case_match;
    use mupuppet_core::syntax::Case;
    assert!(!case_match(&Expr::str("Debian"), &Case::Expr(Expr::str("RedHat"))));
    assert!(case_match(&Expr::str("Debian"), &Case::Expr(Expr::str("Debian"))));
    assert!(case_match(&Expr::int(4), &Case::Default));
}

/// Classes `a` and, optionally, `b`, each with an optional parent.
#[derive(Clone, Copy, Debug)]
struct Graph {
    two: bool,
    parent_a: Option<char>,
    parent_b: Option<char>,
}

impl Graph {
    fn all() -> Vec<Graph> {
        let mut out = Vec::new();
        for parent_a in [None, Some('a')] {
            out.push(Graph {
                two: false,
                parent_a,
                parent_b: None,
            });
        }
        let choices = [None, Some('a'), Some('b')];
        for parent_a in choices {
            for parent_b in choices {
                out.push(Graph {
                    two: true,
                    parent_a,
                    parent_b,
                });
            }
        }
        out
    }

    fn parent(&self, c: char) -> Option<char> {
        if c == 'a' {
            self.parent_a
        } else {
            self.parent_b
        }
    }

    fn source(&self) -> String {
        let mut src = String::new();
        for (c, p) in [('a', self.parent_a), ('b', self.parent_b)] {
            if c == 'b' && !self.two {
                continue;
            }
            let inherits = p.map(|p| format!(" inherits {p}")).unwrap_or_default();
            src += &format!("class {c}{inherits} {{ notify {{ '{c}': }} }}\n");
        }
        src + "include a\n"
    }

    /// Classes declared by `include a`, ancestors first, or `None` when the
    /// chain from `a` revisits a class.
    fn expansion(&self) -> Option<Vec<char>> {
        let mut chain = vec!['a'];
        while let Some(p) = self.parent(*chain.last().unwrap()) {
            if chain.contains(&p) {
                return None;
            }
            chain.push(p);
        }
        chain.reverse();
        Some(chain)
    }
}

#[test]
fn inheritance_graphs() {
    let graphs = Graph::all();
    assert_eq!(graphs.len(), 11);
    let divergent = Settings {
        detect_cycles: false,
        limits: Limits {
            max_steps: 5_000,
            ..Limits::default()
        },
        ..Settings::default()
    };
    for g in graphs {
        let m = parse_manifest(&g.source()).unwrap();
        let checked = mupuppet_core::compile(&m, "n", &[], &Settings::default());
        let literal = mupuppet_core::compile(&m, "n", &[], &divergent);
        match g.expansion() {
            Some(order) => {
                let titles: Vec<String> = order.iter().map(|c| c.to_string()).collect();
                let catalog: Catalog = checked.unwrap().catalog;
                let got: Vec<&str> = catalog.resources().iter().map(|r| r.title.as_str()).collect();
                assert_eq!(got, titles, "{g:?}");
                assert_eq!(literal.unwrap().catalog, catalog, "{g:?}");
            }
            None => {
                assert_eq!(checked.unwrap_err().kind, ErrorKind::InheritanceCycle, "{g:?}");
                assert_eq!(literal.unwrap_err().kind, ErrorKind::StepLimitExceeded, "{g:?}");
            }
        }
    }
}

#[test]
fn expression_steps_leave_state_alone() {
    let mut st = State::new();
    st.sigma.update(Scope::Top, "a".into(), Value::Int(1)).unwrap();
    let e = parse_expression("[$a + 1, { 'k' => !true }, 3 ? { 3 => 'x' }]").unwrap();
    let mut cfg = Configuration::expr(st.clone(), e, Scope::Top);
    machine()
        .run(&mut cfg, |_, c| {
            assert!(c.state.sigma.ptr_eq(&st.sigma));
            assert!(c.state.kappa.ptr_eq(&st.kappa));
            assert!(c.state.catalog.ptr_eq(&st.catalog));
        })
        .unwrap();
}
