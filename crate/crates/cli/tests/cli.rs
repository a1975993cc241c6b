use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "corpus", file].iter().collect();
    p.to_string_lossy().into_owned()
}

fn tss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tss")).args(args).output().expect("tss runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_accepts_and_rejects() {
    let ok = tss(&["check", &corpus("copy.tss"), "--cost", "r"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("ok       copy"));

    let bad = tss(&["check", &corpus("plus1.tss"), "--cost", "r"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("rejected plus1_raw"));
    assert!(stdout(&bad).contains("ok       plus1"));
}

#[test]
fn check_grounds_families_on_request() {
    let o = tss(&["check", &corpus("append.tss"), "--cost", "rs", "--at", "append:2,1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("append$2$1$1"));
}

#[test]
fn run_prints_the_root_chain() {
    let o = tss(&["run", &corpus("six.tss"), "--main", "six", "--cost", "r", "--check-config"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("quiescent"), "{out}");
    assert!(out.contains("b0 at 0"), "{out}");
    assert!(out.contains("close at 4"), "{out}");
}

#[test]
fn run_writes_a_json_trace() {
    let dir = std::env::temp_dir().join(format!("tss-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.json");
    let o = tss(&["run", &corpus("copy.tss"), "--main", "main", "--cost", "r", "--sched", "sync", "--trace", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.trim_start().starts_with('{') || text.trim_start().starts_with('['));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn subtype_answers_with_exit_status() {
    let yes = tss(&["subtype", "[]1", "()[]1"]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(stdout(&yes).trim(), "true");

    let no = tss(&["subtype", "()[]1", "[]1"]);
    assert_eq!(no.status.code(), Some(1));
    assert_eq!(stdout(&no).trim(), "false");

    let weak = tss(&["subtype", "--weak", "()^3 <>1", "()<>1"]);
    assert_eq!(weak.status.code(), Some(0));

    let named = tss(&["subtype", "--file", &corpus("compress.tss"), "()<>sbits", "<>sbits"]);
    assert_eq!(named.status.code(), Some(0));
}

#[test]
fn reconstruct_emits_a_program_that_checks_explicitly() {
    let dir = std::env::temp_dir().join(format!("tss-rec-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("six.tss");
    let o = tss(&["reconstruct", &corpus("six.tss"), "--cost", "r", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("delay"), "{text}");
    let again = tss(&["check", out.to_str().unwrap(), "--explicit"]);
    assert_eq!(again.status.code(), Some(0), "{}", stdout(&again));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn instantiate_grounds_one_definition() {
    let o = tss(&["instantiate", &corpus("append.tss"), "--def", "append", "--bind", "n=1,k=0,r=0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("append$1$0$0"));
}

#[test]
fn usage_and_parse_errors_exit_with_two() {
    assert_eq!(tss(&["check", "/no/such/file.tss"]).status.code(), Some(2));
    assert_eq!(tss(&["subtype", "()^", "1"]).status.code(), Some(2));
    assert_eq!(tss(&["run", &corpus("six.tss"), "--main", "six", "--sched", "fifo"]).status.code(), Some(2));
    assert_eq!(tss(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn corpus_filter_runs_selected_criteria() {
    let o = tss(&["corpus", "--filter", "six"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("pass"));
}
