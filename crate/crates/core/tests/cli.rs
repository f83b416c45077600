use std::io::Write;
use std::process::{Command, Output, Stdio};

fn relkanren(args: &[&str], stdin: &str, env_budget: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relkanren"));
    cmd.args(args)
        .env_remove("RELKANREN_MAX_STEPS")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(b) = env_budget {
        cmd.env("RELKANREN_MAX_STEPS", b);
    }
    let mut child = cmd.spawn().unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const ENDLESS: &str = "(run 0 ?l (membero 1 ?l))";

#[test]
fn exit_codes() {
    let ok = relkanren(&["query", "--goal", "(run 1 ?x (eq ?x 1))"], "", None);
    assert_eq!((ok.status.code(), stdout(&ok).as_str()), (Some(0), "1\n"));

    let none = relkanren(&["query", "--goal", "(run 0 ?x (eq 1 2))"], "", None);
    assert_eq!(none.status.code(), Some(1));
    assert!(none.stdout.is_empty());

    let budget = relkanren(&["query", "--goal", ENDLESS, "--max-steps", "200"], "", None);
    assert_eq!(budget.status.code(), Some(2));
    assert!(!budget.stdout.is_empty(), "partial answers are printed");
    assert!(!budget.stderr.is_empty());

    let unknown = relkanren(&["rewrite", "--rules", "gamma-poisson"], "(normal 0 1)", None);
    assert_eq!(unknown.status.code(), Some(3));

    let bad = relkanren(&["rewrite", "--rules", "math"], "(add 1", None);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("1:"));
}

#[test]
fn input_and_output_files() {
    let dir = std::env::temp_dir().join(format!("relkanren-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("model.sexp");
    let output = dir.join("out.sexp");
    std::fs::write(&input, "; observed model\n(observe (7) (binomial (10) (beta 2 2)))\n").unwrap();
    let o = relkanren(
        &[
            "rewrite",
            "--rules",
            "beta-binomial",
            "--input",
            input.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
        ],
        "",
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&output).unwrap(),
        "(binomial (10) (beta (add 2 (sum (7))) (add 2 (sub (sum (10)) (sum (7))))))\n"
    );
    let missing = relkanren(
        &["rewrite", "--rules", "math", "--input", dir.join("absent").to_str().unwrap()],
        "",
        None,
    );
    assert_eq!(missing.status.code(), Some(4));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let args = ["rewrite", "--rules", "math", "--mode", "reduce", "--max-answers", "5"];
    let first = relkanren(&args, "(log (exp (add 5 5)))", None);
    for _ in 0..3 {
        let again = relkanren(&args, "(log (exp (add 5 5)))", None);
        assert_eq!(again.stdout, first.stdout);
        assert_eq!(again.status.code(), first.status.code());
    }
}

#[test]
fn larger_budgets_extend_answers() {
    let mut previous = String::new();
    for steps in ["50", "100", "400", "1600"] {
        let o = relkanren(&["query", "--goal", ENDLESS, "--max-steps", steps], "", None);
        let out = stdout(&o);
        assert!(out.starts_with(&previous), "budget {steps} lost earlier answers");
        previous = out;
    }
    assert!(previous.lines().count() > 1);
}

#[test]
fn environment_sets_default_budget() {
    let from_env = relkanren(&["query", "--goal", ENDLESS], "", Some("100"));
    let from_flag = relkanren(&["query", "--goal", ENDLESS, "--max-steps", "100"], "", None);
    assert_eq!(from_env.status.code(), Some(2));
    assert_eq!(from_env.stdout, from_flag.stdout);

    let flag_wins = relkanren(&["query", "--goal", ENDLESS, "--max-steps", "100"], "", Some("5"));
    assert_eq!(flag_wins.stdout, from_flag.stdout);

    let bad = relkanren(&["query", "--goal", "(run 1 ?x (eq ?x 1))"], "", Some("lots"));
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn max_answers_limits_output() {
    let o = relkanren(&["query", "--goal", ENDLESS.replace("run 0", "run 3").as_str()], "", None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
}
