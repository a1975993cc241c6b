use timed_sessions::corpus::{manifest, Expect, FILES};
use timed_sessions::pipeline::{verdicts, Options};

#[test]
fn every_bundled_file_is_in_the_manifest() {
    let m = manifest();
    for (file, _) in FILES {
        assert!(m.iter().any(|e| e.file == *file), "{file} has no manifest entry");
    }
}

#[test]
fn verdicts_match_the_manifest() {
    for e in manifest() {
        let opts = Options { cost: e.cost(), explicit: false, roots: e.roots() };
        let vs = verdicts(e.source(), &opts).unwrap_or_else(|err| panic!("{}: {err}", e.file));
        for c in &e.checks {
            let name = c.ground_name();
            let v = vs.iter().find(|v| v.def == name).unwrap_or_else(|| panic!("{}: no verdict for {name}", e.file));
            match (c.expect, &v.result) {
                (Expect::Ok, Err(msg)) => panic!("{}: {name} rejected:\n{msg}", e.file),
                (Expect::Rejected, Ok(())) => panic!("{}: {name} accepted", e.file),
                _ => {}
            }
        }
    }
}

#[test]
fn rejections_explain_themselves() {
    let e = manifest().into_iter().find(|e| e.file == "plus1.tss").unwrap();
    let opts = Options { cost: e.cost(), explicit: false, roots: vec![] };
    let vs = verdicts(e.source(), &opts).unwrap();
    let raw = vs.iter().find(|v| v.def == "plus1_raw").unwrap();
    let msg = raw.result.as_ref().unwrap_err();
    assert!(msg.contains("plus1_raw"), "{msg}");
    assert!(msg.contains("bits"), "{msg}");
}
